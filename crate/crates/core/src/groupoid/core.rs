//! Cores of a finite local groupoid and normalized right-invariant densities
//! on them.
//!
//! A core `K` must (1) meet every source fiber, (2) have right translation by
//! each `k ∈ K` act as a bijection `K_{t(k)} → K_{s(k)}` between its source
//! fibers, and (3) multiply on the left with every composable arrow. Source
//! fibers are finite, so the core is always s-proper.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::FiniteGroupoid;
use crate::error::{RectifyError, Result};

pub const LIE_TYPE: &str = "Lie type";
pub const FIBER_INVERTIBILITY: &str = "s_K-fiber invertibility";
pub const NO_ESCAPE: &str = "no escape";

#[derive(Debug, Clone)]
pub struct Core {
    parent: Arc<FiniteGroupoid>,
    arrow_subset: Vec<usize>,
    member: Vec<bool>,
    s_fibers: Vec<Vec<usize>>,
}

impl Core {
    pub fn groupoid(&self) -> &FiniteGroupoid {
        &self.parent
    }

    pub fn parent(&self) -> &Arc<FiniteGroupoid> {
        &self.parent
    }

    /// Core arrows in increasing index order.
    pub fn arrows(&self) -> &[usize] {
        &self.arrow_subset
    }

    pub fn contains(&self, a: usize) -> bool {
        self.member.get(a).copied().unwrap_or(false)
    }

    /// `K_z = {k ∈ K : s(k) = z}`, in index order.
    pub fn fiber(&self, object: usize) -> &[usize] {
        &self.s_fibers[object]
    }

    /// Always true for finite fibers.
    pub fn is_s_proper(&self) -> bool {
        true
    }

    pub fn is_full(&self) -> bool {
        self.arrow_subset.len() == self.parent.arrow_count()
    }

    /// Pairs `(k, p)` with `k ∈ K` and `s(k) = t(p)`, ordered by `p` then `k`.
    pub fn left_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.parent.arrow_count()).flat_map(move |p| {
            self.fiber(self.parent.target(p))
                .iter()
                .map(move |&k| (k, p))
        })
    }
}

/// Check all three core axioms and build the fiber index.
pub fn build_core(g: Arc<FiniteGroupoid>, arrow_subset: &[usize]) -> Result<Core> {
    let err = |axiom: &str, witness: String| RectifyError::CoreAxiomError {
        axiom: axiom.into(),
        witness,
    };
    let mut member = vec![false; g.arrow_count()];
    for &a in arrow_subset {
        if a >= g.arrow_count() {
            return Err(RectifyError::Config(format!("core arrow {a} out of range")));
        }
        member[a] = true;
    }
    let arrows: Vec<usize> = (0..g.arrow_count()).filter(|&a| member[a]).collect();
    let mut s_fibers = vec![Vec::new(); g.object_count()];
    for &k in &arrows {
        s_fibers[g.source(k)].push(k);
    }

    if let Some(z) = (0..g.object_count()).find(|&z| s_fibers[z].is_empty()) {
        return Err(err(LIE_TYPE, format!("object {z} has an empty core fiber")));
    }

    for &k in &arrows {
        for &p in g.t_fiber(g.source(k)) {
            if !g.in_domain(k, p) {
                return Err(err(
                    NO_ESCAPE,
                    format!("(k={k}, p={p}) is composable but not multipliable"),
                ));
            }
        }
    }

    let mut hit = vec![false; g.arrow_count()];
    for &k in &arrows {
        let from = &s_fibers[g.target(k)];
        let to = &s_fibers[g.source(k)];
        if from.len() != to.len() {
            return Err(err(
                FIBER_INVERTIBILITY,
                format!(
                    "k={k}: |K_{}| = {} but |K_{}| = {}",
                    g.target(k),
                    from.len(),
                    g.source(k),
                    to.len()
                ),
            ));
        }
        let mut touched = Vec::with_capacity(from.len());
        for &k2 in from {
            let Some(prod) = g.compose(k2, k) else {
                return Err(err(
                    FIBER_INVERTIBILITY,
                    format!("k'={k2}, k={k}: product undefined"),
                ));
            };
            if !member[prod] {
                return Err(err(
                    FIBER_INVERTIBILITY,
                    format!("k'={k2}, k={k}: product {prod} leaves the core"),
                ));
            }
            if hit[prod] {
                return Err(err(
                    FIBER_INVERTIBILITY,
                    format!("k'={k2}, k={k}: product {prod} hit twice"),
                ));
            }
            hit[prod] = true;
            touched.push(prod);
        }
        touched.iter().for_each(|&a| hit[a] = false);
    }

    Ok(Core {
        parent: g,
        arrow_subset: arrows,
        member,
        s_fibers,
    })
}

/// Per-fiber weights, either explicit or uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySpec {
    Uniform,
    /// One nonnegative weight per core arrow, in core (index) order.
    Weights(Vec<f64>),
}

/// Normalized right-invariant weights on the core.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarDensity {
    /// Indexed by arrow; zero off the core.
    weights: Vec<f64>,
}

impl HaarDensity {
    pub fn weight(&self, arrow: usize) -> f64 {
        self.weights[arrow]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_{K_z} f μ^z`, summed in fiber order.
    pub fn integrate_fiber<V: crate::group::Integrand>(
        &self,
        core: &Core,
        object: usize,
        f: impl Fn(usize) -> V,
    ) -> V {
        let fiber = core.fiber(object);
        let first = f(fiber[0]);
        let mut acc = first.zero_like();
        acc.add_scaled(self.weights[fiber[0]], &first);
        for &k in &fiber[1..] {
            acc.add_scaled(self.weights[k], &f(k));
        }
        acc
    }
}

const DENSITY_TOL: f64 = 1e-14;

pub fn attach_haar_density(core: &Core, spec: &DensitySpec) -> Result<HaarDensity> {
    let g = core.groupoid();
    let mut weights = vec![0.0; g.arrow_count()];
    match spec {
        DensitySpec::Uniform => {
            for z in 0..g.object_count() {
                let fiber = core.fiber(z);
                let w = 1.0 / fiber.len() as f64;
                fiber.iter().for_each(|&k| weights[k] = w);
            }
        }
        DensitySpec::Weights(raw) => {
            if raw.len() != core.arrows().len() {
                return Err(RectifyError::Config(format!(
                    "{} weights for {} core arrows",
                    raw.len(),
                    core.arrows().len()
                )));
            }
            if let Some(w) = raw.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
                return Err(RectifyError::Config(format!(
                    "weight {w} is not a nonnegative number"
                )));
            }
            for (&k, &w) in core.arrows().iter().zip(raw) {
                weights[k] = w;
            }
            for z in 0..g.object_count() {
                let fiber = core.fiber(z);
                let total: f64 = fiber.iter().map(|&k| weights[k]).sum();
                if !(total > 0.0) {
                    return Err(RectifyError::InvarianceError {
                        witness: format!("fiber over object {z} has zero total weight"),
                    });
                }
                fiber.iter().for_each(|&k| weights[k] /= total);
            }
        }
    }

    for z in 0..g.object_count() {
        let total: f64 = core.fiber(z).iter().map(|&k| weights[k]).sum();
        if (total - 1.0).abs() > DENSITY_TOL {
            return Err(RectifyError::InvarianceError {
                witness: format!("fiber over object {z} sums to {total}"),
            });
        }
    }
    // Pushforward of μ^{t(k)} under right translation by k is μ^{s(k)}.
    for &k in core.arrows() {
        for &k2 in core.fiber(g.target(k)) {
            let prod = g
                .compose(k2, k)
                .expect("core fiber bijection checked at construction");
            if (weights[prod] - weights[k2]).abs() > DENSITY_TOL {
                return Err(RectifyError::InvarianceError {
                    witness: format!(
                        "w({k2}·{k}) = w({prod}) = {} but w({k2}) = {}",
                        weights[prod], weights[k2]
                    ),
                });
            }
        }
    }
    Ok(HaarDensity { weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{build_action_groupoid, build_pair_groupoid, FiniteGroupTable};

    fn z3_translation() -> Arc<FiniteGroupoid> {
        Arc::new(
            build_action_groupoid(&FiniteGroupTable::cyclic(3), 3, |a, x| (a + x) % 3).unwrap(),
        )
    }

    #[test]
    fn full_action_groupoid_is_core() {
        let g = z3_translation();
        let all: Vec<usize> = (0..g.arrow_count()).collect();
        let core = build_core(g, &all).unwrap();
        assert!(core.is_full() && core.is_s_proper());
        assert!((0..3).all(|z| core.fiber(z).len() == 3));
        assert_eq!(core.left_pairs().count(), 27);
    }

    #[test]
    fn missing_fiber_is_lie_type_violation() {
        let g = Arc::new(build_pair_groupoid(3).unwrap());
        // drop every arrow with source 2
        let subset: Vec<usize> = (0..9).filter(|&a| g.source(a) != 2).collect();
        match build_core(g, &subset) {
            Err(RectifyError::CoreAxiomError { axiom, witness }) => {
                assert_eq!(axiom, LIE_TYPE);
                assert!(witness.contains("object 2"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn units_alone_fail_fiber_invertibility_only_if_unbalanced() {
        // the unit arrows form a core of the pair groupoid
        let g = Arc::new(build_pair_groupoid(3).unwrap());
        let units: Vec<usize> = (0..3).map(|x| g.unit(x)).collect();
        assert!(build_core(g.clone(), &units).is_ok());
        // units plus one non-unit arrow: fibers of unequal size
        let err = build_core(g, &[0, 4, 8, 1]).unwrap_err();
        assert!(
            matches!(err, RectifyError::CoreAxiomError { ref axiom, .. } if axiom == FIBER_INVERTIBILITY)
        );
    }

    #[test]
    fn no_escape_detected() {
        let mut g = build_pair_groupoid(2).unwrap();
        g.remove_product(1, 2);
        let err = build_core(Arc::new(g), &[0, 1, 2, 3]).unwrap_err();
        assert!(
            matches!(err, RectifyError::CoreAxiomError { ref axiom, ref witness }
            if axiom == NO_ESCAPE && witness.contains("k=1, p=2"))
        );
    }

    #[test]
    fn uniform_density_is_normalized_and_invariant() {
        let g = z3_translation();
        let core = build_core(g, &(0..9).collect::<Vec<_>>()).unwrap();
        let mu = attach_haar_density(&core, &DensitySpec::Uniform).unwrap();
        for z in 0..3 {
            let s: f64 = core.fiber(z).iter().map(|&k| mu.weight(k)).sum();
            assert!((s - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn incompatible_weights_rejected() {
        let g = z3_translation();
        let core = build_core(g.clone(), &(0..9).collect::<Vec<_>>()).unwrap();
        // weight by group element: (0.5, 0.3, 0.2) for a = 0, 1, 2 in every fiber
        let weights: Vec<f64> = (0..9).map(|arrow| [0.5, 0.3, 0.2][arrow / 3]).collect();
        let err = attach_haar_density(&core, &DensitySpec::Weights(weights)).unwrap_err();
        assert!(matches!(err, RectifyError::InvarianceError { .. }));
    }

    #[test]
    fn explicit_weights_are_normalized() {
        let g = z3_translation();
        let core = build_core(g, &(0..9).collect::<Vec<_>>()).unwrap();
        let mu = attach_haar_density(&core, &DensitySpec::Weights(vec![2.0; 9])).unwrap();
        assert!(mu.weights().iter().all(|&w| (w - 1.0 / 3.0).abs() < 1e-16));
        let avg: f64 = mu.integrate_fiber(&core, 1, |k| k as f64);
        assert!((avg - (1.0 + 4.0 + 7.0) / 3.0).abs() < 1e-14);
    }
}
