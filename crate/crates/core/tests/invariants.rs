use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rectify_core::group::{
    default_algebra, estimate_bch_constants, left_distance, AlgebraVector, AmbientSets,
    BchConstants, GroupId, NormedAlgebra,
};
use rectify_core::groupoid::{attach_haar_density, build_core, DensitySpec};
use rectify_core::harness::{
    generate_exact_morphism, perturb_morphism, GroupoidSpec, Homomorphism, PerturbationSpec,
};
use rectify_core::rectifier::{admissible_radius, iterate, IterationOptions};

fn group() -> impl Strategy<Value = GroupId> {
    prop_oneof![Just(GroupId::U1), Just(GroupId::SO3), Just(GroupId::SU2)]
}

fn nonabelian() -> impl Strategy<Value = GroupId> {
    prop_oneof![Just(GroupId::SO3), Just(GroupId::SU2)]
}

/// A vector of normalized norm at most `radius`, scaled from raw coordinates.
fn vector(alg: &NormedAlgebra, raw: &[f64], radius: f64) -> AlgebraVector {
    let dim = alg.group.algebra_dim();
    let u = AlgebraVector::new(alg.group, raw[..dim].to_vec()).unwrap();
    let n = alg.norm(&u);
    if n > radius {
        u.scale(radius / n)
    } else {
        u
    }
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 3)
}

fn constants(alg: &NormedAlgebra) -> BchConstants {
    static CACHE: OnceLock<Mutex<HashMap<GroupId, BchConstants>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap();
    *cache.entry(alg.group).or_insert_with(|| {
        estimate_bch_constants(alg, AmbientSets::default(), 20_000, 1.25, 0x1234).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exp_log_round_trip(g in group(), raw in coords(), r in 0.0f64..1.0) {
        let alg = default_algebra(g).unwrap();
        let u = vector(&alg, &raw, r * 0.95 * alg.injectivity_margin.min(3.0));
        let back = alg.log(&alg.exp(&u).unwrap()).unwrap();
        prop_assert!(alg.norm(&back.sub(&u)) <= 1e-12);
    }

    #[test]
    fn commutator_bounded_by_norms(g in group(), a in coords(), b in coords()) {
        let alg = default_algebra(g).unwrap();
        let (u, v) = (vector(&alg, &a, 2.0), vector(&alg, &b, 2.0));
        let lhs = alg.norm(&alg.bracket(&u, &v));
        prop_assert!(lhs <= alg.norm(&u) * alg.norm(&v) * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn distance_is_left_invariant(g in group(), a in coords(), b in coords(), c in coords()) {
        let alg = default_algebra(g).unwrap();
        let x = alg.exp(&vector(&alg, &a, 1.2)).unwrap();
        let y = alg.exp(&vector(&alg, &b, 1.2)).unwrap();
        let z = alg.exp(&vector(&alg, &c, 3.0)).unwrap();
        let before = left_distance(&x, &y, &alg).unwrap();
        let after = left_distance(&z.mul(&x), &z.mul(&y), &alg).unwrap();
        prop_assert!((before - after).abs() <= 1e-12);
    }

    #[test]
    fn exp_is_conjugation_equivariant(g in group(), a in coords(), c in coords()) {
        let alg = default_algebra(g).unwrap();
        let u = vector(&alg, &a, 2.0);
        let z = alg.exp(&vector(&alg, &c, 3.0)).unwrap();
        let lhs = alg.exp(&alg.adjoint(&z, &u)).unwrap();
        let rhs = z.mul(&alg.exp(&u).unwrap()).mul(&z.inverse());
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bch_gap_within_estimated_constant(g in nonabelian(), a in coords(), b in coords()) {
        let alg = default_algebra(g).unwrap();
        let k = constants(&alg);
        let (u, v) = (vector(&alg, &a, 1.0), vector(&alg, &b, 1.0));
        let w = alg.log(&alg.exp(&u).unwrap().mul(&alg.exp(&v).unwrap())).unwrap();
        let gap = alg.norm(&w.sub(&u.add(&v)));
        prop_assert!(gap <= k.c * alg.norm(&u) * alg.norm(&v) + 1e-12);
    }

    #[test]
    fn total_displacement_has_cauchy_certificate(
        g in group(),
        points in 2usize..6,
        seed in any::<u64>(),
        frac in 0.05f64..0.3,
    ) {
        let alg = default_algebra(g).unwrap();
        let sets = AmbientSets::default();
        let k = constants(&alg);
        let groupoid = Arc::new(GroupoidSpec::Pair { points }.build().unwrap());
        let all: Vec<usize> = (0..groupoid.arrow_count()).collect();
        let core = build_core(groupoid.clone(), &all).unwrap();
        let density = attach_haar_density(&core, &DensitySpec::Uniform).unwrap();
        let exact = generate_exact_morphism(&groupoid, &alg, sets, 0.5, Homomorphism::Faithful, seed).unwrap();
        let pert = PerturbationSpec { epsilon: frac * admissible_radius(&k), seed: seed ^ 1, leave_units: false, side: Default::default() };
        let phi0 = perturb_morphism(&exact.phi, &groupoid, &alg, sets, &pert).unwrap();
        let (limit, trace) = iterate(&phi0, &core, &density, &alg, &k, sets, IterationOptions::default()).unwrap();
        prop_assert!(trace.all_certified());
        prop_assert!(trace.total_displacement() <= trace.displacement_bound() + 1e-15);
        let moved = (0..groupoid.arrow_count())
            .map(|p| left_distance(phi0.value(p), limit.value(p), &alg).unwrap())
            .fold(0.0, f64::max);
        prop_assert!(moved <= trace.total_displacement() + 1e-12);
    }
}

#[test]
fn sampled_points_stay_in_requested_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for g in [GroupId::U1, GroupId::SO3, GroupId::SU2] {
        let alg = default_algebra(g).unwrap();
        for _ in 0..1000 {
            assert!(alg.norm(&alg.sample_ball(&mut rng, 0.7)) <= 0.7 + 1e-12);
        }
    }
}
