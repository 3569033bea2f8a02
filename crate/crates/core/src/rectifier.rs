//! Rectification of almost-morphisms by averaging their defect over a core.
//!
//! For `φ: H → G` the defect on a left-core pair `(k, p)`, `k ∈ K`,
//! `s(k) = t(p)` is `ψ(k, p) = φ(p)⁻¹ φ(k)⁻¹ φ(kp)` and `Δ(φ)` is the largest
//! distance of a defect to the identity. One correction step multiplies
//! each value on the right by
//!
//! ```text
//! A(p) = exp( Σ_{k ∈ K_{t(p)}} μ(k) · log ψ(k, p) )
//! ```
//!
//! and the post-correction defect is bounded by the quadratic polynomial
//! `q(Δ) = 2·c·c_l·(d′·c_l + 2d′ + c·c_l·Δ) / d′² · Δ²`.

use serde::{Deserialize, Serialize};

use crate::error::{RectifyError, Result};
use crate::group::{
    AlgebraVector, AmbientSets, BchConstants, GroupElement, GroupId, NormedAlgebra,
};
use crate::groupoid::{Core, HaarDensity};

/// Additive slack on the contraction check `Δ_{n+1} ≤ q(Δ_n)`.
pub const Q_SLACK: f64 = 1e-12;

/// Values of a map from arrows into a compact group.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostMorphism {
    values: Vec<GroupElement>,
    target: GroupId,
    range_certificate: f64,
}

impl AlmostMorphism {
    /// Values must all lie in the algebra's group; `range_certificate` is the
    /// largest principal-branch distance of a value to `e`.
    pub fn new(values: Vec<GroupElement>, alg: &NormedAlgebra) -> Result<Self> {
        let target = alg.group;
        for g in &values {
            if g.group() != target {
                return Err(RectifyError::GroupMismatch {
                    expected: target.to_string(),
                    found: g.group().to_string(),
                });
            }
            let r = g.membership_residual();
            if !(r <= crate::group::TAU_GROUP) {
                return Err(RectifyError::GroupMismatch {
                    expected: format!("element of {target}"),
                    found: format!("matrix with membership residual {r:e}"),
                });
            }
        }
        let range_certificate = values
            .iter()
            .map(|g| principal_magnitude(g, alg))
            .fold(0.0, f64::max);
        Ok(AlmostMorphism {
            values,
            target,
            range_certificate,
        })
    }

    pub fn value(&self, arrow: usize) -> &GroupElement {
        &self.values[arrow]
    }

    pub fn values(&self) -> &[GroupElement] {
        &self.values
    }

    pub fn target(&self) -> GroupId {
        self.target
    }

    pub fn range_certificate(&self) -> f64 {
        self.range_certificate
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `p ↦ z·φ(p)·z⁻¹`.
    pub fn conjugate_by(&self, z: &GroupElement, alg: &NormedAlgebra) -> Result<Self> {
        AlmostMorphism::new(self.values.iter().map(|g| g.conjugate_by(z)).collect(), alg)
    }
}

/// `|log g|` on the principal branch, without the injectivity-margin check.
fn principal_magnitude(g: &GroupElement, alg: &NormedAlgebra) -> f64 {
    match g.group() {
        GroupId::Cyclic(_) => {
            if g.max_abs_diff(&GroupElement::identity(g.group())) <= crate::group::TAU_GROUP {
                0.0
            } else {
                f64::INFINITY
            }
        }
        group => {
            let coords = crate::group::lie::log_coords(group, g.matrix());
            alg.coord_scale() * coords.iter().map(|x| x * x).sum::<f64>().sqrt()
        }
    }
}

/// `ψ(k, p) = φ(p)⁻¹ φ(k)⁻¹ φ(kp)`.
pub fn defect_element(
    phi: &AlmostMorphism,
    core: &Core,
    k: usize,
    p: usize,
) -> Result<GroupElement> {
    let g = core.groupoid();
    let kp = if core.contains(k) && p < g.arrow_count() && g.source(k) == g.target(p) {
        g.compose(k, p)
    } else {
        None
    };
    let kp = kp.ok_or(RectifyError::NotComposable { k, p })?;
    Ok(phi.values[p]
        .inverse()
        .mul(&phi.values[k].inverse())
        .mul(&phi.values[kp]))
}

/// Logs of the defect on all left-core pairs, grouped by the right factor.
struct DefectTable {
    /// `logs[p][i]` belongs to `k = core.fiber(t(p))[i]`.
    logs: Vec<Vec<AlgebraVector>>,
    delta: f64,
}

fn defect_table(phi: &AlmostMorphism, core: &Core, alg: &NormedAlgebra) -> Result<DefectTable> {
    let g = core.groupoid();
    let mut delta: f64 = 0.0;
    let mut logs = Vec::with_capacity(g.arrow_count());
    for p in 0..g.arrow_count() {
        let fiber = core.fiber(g.target(p));
        let mut row = Vec::with_capacity(fiber.len());
        for &k in fiber {
            let psi = defect_element(phi, core, k, p)?;
            let u = alg.log(&psi).map_err(|e| match e {
                RectifyError::LogDomainError { distance, margin } => RectifyError::DefectOverflow(
                    format!("ψ({k}, {p}) at distance {distance} beyond log margin {margin}"),
                ),
                other => other,
            })?;
            delta = delta.max(alg.norm(&u));
            row.push(u);
        }
        logs.push(row);
    }
    Ok(DefectTable { logs, delta })
}

/// `Δ(φ) = max_{(k,p)} d(ψ(k, p), e)` over left-core pairs.
pub fn defect(phi: &AlmostMorphism, core: &Core, alg: &NormedAlgebra) -> Result<f64> {
    Ok(defect_table(phi, core, alg)?.delta)
}

/// Neumaier-compensated accumulation of weighted algebra vectors.
struct CompensatedSum {
    sum: Vec<f64>,
    carry: Vec<f64>,
}

impl CompensatedSum {
    fn new(dim: usize) -> Self {
        CompensatedSum {
            sum: vec![0.0; dim],
            carry: vec![0.0; dim],
        }
    }

    fn add(&mut self, weight: f64, u: &AlgebraVector) {
        for ((s, c), x) in self
            .sum
            .iter_mut()
            .zip(self.carry.iter_mut())
            .zip(u.coords())
        {
            let y = weight * x;
            let t = *s + y;
            if s.abs() >= y.abs() {
                *c += (*s - t) + y;
            } else {
                *c += (y - t) + *s;
            }
            *s = t;
        }
    }

    fn finish(self) -> Vec<f64> {
        self.sum
            .iter()
            .zip(&self.carry)
            .map(|(s, c)| s + c)
            .collect()
    }
}

/// The averaged correction `A(p)` for every arrow.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub values: Vec<GroupElement>,
    /// `Δ(φ)` at which the correction was computed.
    pub delta: f64,
    /// `max_p |A(p)|`.
    pub max_norm: f64,
}

fn correction_from_table(
    table: &DefectTable,
    core: &Core,
    density: &HaarDensity,
    alg: &NormedAlgebra,
) -> Result<Correction> {
    let g = core.groupoid();
    let dim = alg.group.algebra_dim();
    let mut values = Vec::with_capacity(g.arrow_count());
    let mut max_norm: f64 = 0.0;
    for (p, row) in table.logs.iter().enumerate() {
        let fiber = core.fiber(g.target(p));
        let mut acc = CompensatedSum::new(dim);
        for (&k, u) in fiber.iter().zip(row) {
            acc.add(density.weight(k), u);
        }
        let avg = AlgebraVector::new(alg.group, acc.finish())?;
        max_norm = max_norm.max(alg.norm(&avg));
        values.push(alg.exp(&avg)?);
    }
    Ok(Correction {
        values,
        delta: table.delta,
        max_norm,
    })
}

/// `A(p) = exp(∫_{K_{t(p)}} log ψ(·, p) μ)`; requires `Δ(φ) ≤ 1/c_l`.
pub fn average_correction(
    phi: &AlmostMorphism,
    core: &Core,
    density: &HaarDensity,
    alg: &NormedAlgebra,
    constants: &BchConstants,
) -> Result<Correction> {
    let table = defect_table(phi, core, alg)?;
    let bound = 1.0 / constants.c_l;
    if table.delta > bound {
        return Err(RectifyError::DefectTooLarge {
            delta: table.delta,
            bound,
        });
    }
    correction_from_table(&table, core, density, alg)
}

fn apply_correction(
    phi: &AlmostMorphism,
    correction: &Correction,
    alg: &NormedAlgebra,
    sets: AmbientSets,
) -> Result<AlmostMorphism> {
    let values: Vec<GroupElement> = phi
        .values
        .iter()
        .zip(&correction.values)
        .map(|(f, a)| f.mul(a))
        .collect();
    for (arrow, v) in values.iter().enumerate() {
        let distance = principal_magnitude(v, alg);
        if !(distance <= sets.k_radius) {
            return Err(RectifyError::RangeEscape {
                arrow,
                distance,
                radius: sets.k_radius,
            });
        }
    }
    AlmostMorphism::new(values, alg)
}

/// `φ̂ = φ·A(φ)`, rejecting results that leave the ambient compact set.
pub fn correct_once(
    phi: &AlmostMorphism,
    core: &Core,
    density: &HaarDensity,
    alg: &NormedAlgebra,
    constants: &BchConstants,
    sets: AmbientSets,
) -> Result<AlmostMorphism> {
    let correction = average_correction(phi, core, density, alg, constants)?;
    apply_correction(phi, &correction, alg, sets)
}

/// `q(C) = 2·c·c_l·(d′·c_l + 2d′ + c·c_l·C) / d′² · C²`.
pub fn q_bound(defect: f64, k: &BchConstants) -> f64 {
    let (c, cl, dp) = (k.c, k.c_l, k.d_prime);
    2.0 * c * cl * (dp * cl + 2.0 * dp + c * cl * defect) / (dp * dp) * defect * defect
}

/// Largest defect accepted at entry: the minimum of `1/c_l`, half of the gap
/// `1/c_d` between `W` and the ambient compact set, and the largest `C` with
/// `q(C) ≤ C/2`.
pub fn admissible_radius(k: &BchConstants) -> f64 {
    let (c, cl, dp) = (k.c, k.c_l, k.d_prime);
    let alpha = 2.0 * c * cl * (dp * cl + 2.0 * dp) / (dp * dp);
    let beta = 2.0 * c * c * cl * cl / (dp * dp);
    // q(C)/C = αC + βC² = 1/2
    let contraction = if alpha == 0.0 && beta == 0.0 {
        f64::INFINITY
    } else if beta == 0.0 {
        0.5 / alpha
    } else {
        (-alpha + (alpha * alpha + 2.0 * beta).sqrt()) / (2.0 * beta)
    };
    (1.0 / k.c_l).min(0.5 / k.c_d).min(contraction)
}

/// Smallest positive fixed point of `q`, if `q(C) = C` has one.
pub fn contraction_threshold(k: &BchConstants) -> Option<f64> {
    let (c, cl, dp) = (k.c, k.c_l, k.d_prime);
    let alpha = 2.0 * c * cl * (dp * cl + 2.0 * dp) / (dp * dp);
    let beta = 2.0 * c * c * cl * cl / (dp * dp);
    if beta == 0.0 {
        return if alpha == 0.0 {
            None
        } else {
            Some(1.0 / alpha)
        };
    }
    Some((-alpha + (alpha * alpha + 4.0 * beta).sqrt()) / (2.0 * beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The defect grew past `1/c_l` mid-run.
    DefectTooLarge,
    RangeEscape,
    DefectOverflow,
}

/// Per-step audit record of an iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// `Δ(φ_n)` for every iterate, including the last.
    pub deltas: Vec<f64>,
    /// `max_p |A(φ_n)(p)|`, one per completed step.
    pub correction_norms: Vec<f64>,
    /// `max_p d(φ_{n+1}(p), φ_n(p))`, one per completed step.
    pub step_moves: Vec<f64>,
    /// `q(Δ_n)`, one per completed step.
    pub q_bounds: Vec<f64>,
    /// `Δ_{n+1} ≤ q(Δ_n) + Q_SLACK`, one per completed step.
    pub q_certified: Vec<bool>,
    pub constants_used: BchConstants,
    pub admissible_radius: f64,
    pub tol: f64,
    pub terminated: Termination,
}

impl IterationTrace {
    pub fn steps(&self) -> usize {
        self.step_moves.len()
    }

    pub fn final_delta(&self) -> f64 {
        *self.deltas.last().expect("trace holds the initial defect")
    }

    pub fn all_certified(&self) -> bool {
        self.q_certified.iter().all(|&b| b)
    }

    pub fn total_displacement(&self) -> f64 {
        self.step_moves.iter().sum()
    }

    /// Geometric-series bound on the total displacement: each step moves at
    /// most `Δ_n` and a certified step at least halves the defect, so the
    /// remaining displacement after the last recorded defect is at most
    /// twice that defect.
    pub fn displacement_bound(&self) -> f64 {
        let n = self.steps();
        self.deltas[..n].iter().sum::<f64>() + 2.0 * self.deltas[n]
    }

    /// Recompute every certification flag from the recorded defects and the
    /// constants.
    pub fn recheck(&self) -> bool {
        let k = &self.constants_used;
        self.q_certified.len() == self.steps()
            && self.q_bounds.len() == self.steps()
            && self.deltas.len() == self.steps() + 1
            && (0..self.steps()).all(|n| {
                let q = q_bound(self.deltas[n], k);
                q == self.q_bounds[n] && (self.deltas[n + 1] <= q + Q_SLACK) == self.q_certified[n]
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// Iterate `φ ↦ φ·A(φ)` from `φ₀` until `Δ ≤ tol` or `max_iter` steps.
///
/// Entry requires `Δ(φ₀) ≤ admissible_radius(constants)`. Failures after the
/// first step end the run and are recorded in `terminated`; the last good
/// iterate is returned.
pub fn iterate(
    phi0: &AlmostMorphism,
    core: &Core,
    density: &HaarDensity,
    alg: &NormedAlgebra,
    constants: &BchConstants,
    sets: AmbientSets,
    options: IterationOptions,
) -> Result<(AlmostMorphism, IterationTrace)> {
    let radius = admissible_radius(constants);
    let mut table = defect_table(phi0, core, alg)?;
    if table.delta > radius {
        return Err(RectifyError::DefectTooLarge {
            delta: table.delta,
            bound: radius,
        });
    }
    let mut trace = IterationTrace {
        deltas: vec![table.delta],
        correction_norms: Vec::new(),
        step_moves: Vec::new(),
        q_bounds: Vec::new(),
        q_certified: Vec::new(),
        constants_used: *constants,
        admissible_radius: radius,
        tol: options.tol,
        terminated: Termination::MaxIterations,
    };
    let mut phi = phi0.clone();
    for _ in 0..options.max_iter {
        let delta = table.delta;
        if delta <= options.tol {
            trace.terminated = Termination::Converged;
            return Ok((phi, trace));
        }
        if delta > 1.0 / constants.c_l {
            trace.terminated = Termination::DefectTooLarge;
            return Ok((phi, trace));
        }
        let correction = correction_from_table(&table, core, density, alg)?;
        let next = match apply_correction(&phi, &correction, alg, sets) {
            Ok(next) => next,
            Err(RectifyError::RangeEscape { .. }) => {
                trace.terminated = Termination::RangeEscape;
                return Ok((phi, trace));
            }
            Err(e) => return Err(e),
        };
        let next_table = match defect_table(&next, core, alg) {
            Ok(t) => t,
            Err(RectifyError::DefectOverflow(_)) => {
                trace.terminated = Termination::DefectOverflow;
                return Ok((phi, trace));
            }
            Err(e) => return Err(e),
        };
        let step = phi
            .values
            .iter()
            .zip(&next.values)
            .map(|(a, b)| principal_magnitude(&a.inverse().mul(b), alg))
            .fold(0.0, f64::max);
        let q = q_bound(delta, constants);
        trace.correction_norms.push(correction.max_norm);
        trace.step_moves.push(step);
        trace.q_bounds.push(q);
        trace.q_certified.push(next_table.delta <= q + Q_SLACK);
        trace.deltas.push(next_table.delta);
        phi = next;
        table = next_table;
    }
    if table.delta <= options.tol {
        trace.terminated = Termination::Converged;
    }
    Ok((phi, trace))
}

/// Largest `d(Φ(kp), Φ(k)Φ(p))` over core pairs and, separately, over domain
/// pairs whose left factor is outside the core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorphismResidual {
    pub core: f64,
    /// `None` when the core is the full arrow set.
    pub non_core: Option<f64>,
}

pub fn verify_core_morphism(
    phi: &AlmostMorphism,
    core: &Core,
    alg: &NormedAlgebra,
) -> MorphismResidual {
    let g = core.groupoid();
    let residual = |q: usize, p: usize, qp: usize| {
        let lhs = &phi.values[qp];
        let rhs = phi.values[q].mul(&phi.values[p]);
        principal_magnitude(&lhs.inverse().mul(&rhs), alg)
    };
    let mut on_core: f64 = 0.0;
    let mut off_core: f64 = 0.0;
    for p in 0..g.arrow_count() {
        for &q in g.s_fiber(g.target(p)) {
            let Some(qp) = g.compose(q, p) else { continue };
            let r = residual(q, p, qp);
            if core.contains(q) {
                on_core = on_core.max(r);
            } else {
                off_core = off_core.max(r);
            }
        }
    }
    MorphismResidual {
        core: on_core,
        non_core: (!core.is_full()).then_some(off_core),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{default_algebra, estimate_bch_constants};
    use crate::groupoid::{
        attach_haar_density, build_action_groupoid, build_core, build_pair_groupoid, DensitySpec,
        FiniteGroupTable,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn full_core(g: crate::groupoid::FiniteGroupoid) -> Core {
        let all: Vec<usize> = (0..g.arrow_count()).collect();
        build_core(Arc::new(g), &all).unwrap()
    }

    fn coboundary(n: usize, alg: &NormedAlgebra, rng: &mut ChaCha8Rng) -> AlmostMorphism {
        let gs: Vec<GroupElement> = (0..n).map(|_| alg.sample_element(rng, 0.6)).collect();
        let values = (0..n * n)
            .map(|a| gs[a / n].mul(&gs[a % n].inverse()))
            .collect();
        AlmostMorphism::new(values, alg).unwrap()
    }

    #[test]
    fn q_bound_values() {
        let mut k = BchConstants::trivial(AmbientSets::default());
        assert_eq!(q_bound(0.0, &k), 0.0);
        k.c = 1.0;
        k.c_l = 1.0;
        k.d_prime = 1.0;
        assert!((q_bound(0.1, &k) - 0.062).abs() < 1e-15);
        // fixed point of q solves 2C(3 + C) = 1; bisection oracle
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * mid * (3.0 + mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c0 = contraction_threshold(&k).unwrap();
        assert!((c0 - lo).abs() < 1e-14);
        // 2C² + 6C - 1 = 0
        assert!((c0 - (44f64.sqrt() - 6.0) / 4.0).abs() < 1e-15);
        assert!((c0 - 0.1589).abs() < 1e-3);
        assert!((q_bound(c0, &k) - c0).abs() < 1e-14);
    }

    #[test]
    fn admissible_radius_halves_defect() {
        let alg = default_algebra(GroupId::SO3).unwrap();
        let k = estimate_bch_constants(&alg, AmbientSets::default(), 2000, 1.25, 1).unwrap();
        let c = admissible_radius(&k);
        assert!(c > 0.0 && c <= 1.0 / k.c_l && c <= 0.5 / k.c_d);
        assert!(q_bound(c, &k) <= 0.5 * c * (1.0 + 1e-12));
    }

    #[test]
    fn exact_morphism_has_identity_defect() {
        let alg = default_algebra(GroupId::SO3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let core = full_core(build_pair_groupoid(3).unwrap());
        let phi = coboundary(3, &alg, &mut rng);
        assert!(defect(&phi, &core, &alg).unwrap() < 1e-14);
        let trivial =
            AlmostMorphism::new(vec![GroupElement::identity(GroupId::SO3); 9], &alg).unwrap();
        for (k, p) in core.left_pairs() {
            assert_eq!(
                defect_element(&trivial, &core, k, p).unwrap(),
                GroupElement::identity(GroupId::SO3)
            );
        }
    }

    #[test]
    fn not_composable_rejected() {
        let alg = default_algebra(GroupId::SO3).unwrap();
        let core = full_core(build_pair_groupoid(3).unwrap());
        let phi = AlmostMorphism::new(vec![GroupElement::identity(GroupId::SO3); 9], &alg).unwrap();
        // (0,1) after (2,0): source 1 != target 2
        assert!(matches!(
            defect_element(&phi, &core, 1, 6),
            Err(RectifyError::NotComposable { k: 1, p: 6 })
        ));
    }

    #[test]
    fn single_arrow_perturbation_defect() {
        let alg = default_algebra(GroupId::SO3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let core = full_core(build_pair_groupoid(3).unwrap());
        let exact = coboundary(3, &alg, &mut rng);
        let w = AlgebraVector::new(GroupId::SO3, vec![0.006, -0.0048, 0.0064]).unwrap();
        assert!((alg.norm(&w) - 0.01).abs() < 1e-15);
        let mut values = exact.values().to_vec();
        values[1] = values[1].mul(&alg.exp(&w).unwrap());
        let phi = AlmostMorphism::new(values, &alg).unwrap();
        // brute force over all 27 composable pairs with explicit matrices
        let g = core.groupoid();
        let mut oracle: f64 = 0.0;
        for p in 0..9 {
            for k in 0..9 {
                if g.source(k) != g.target(p) {
                    continue;
                }
                let kp = (k / 3) * 3 + p % 3;
                let m = phi.value(p).matrix().adjoint()
                    * phi.value(k).matrix().adjoint()
                    * phi.value(kp).matrix();
                let psi = GroupElement::new(GroupId::SO3, m).unwrap();
                oracle = oracle.max(alg.norm(&alg.log(&psi).unwrap()));
            }
        }
        let delta = defect(&phi, &core, &alg).unwrap();
        assert!((delta - oracle).abs() < 1e-15);
        // arrow 1 enters each ψ at most once, up to conjugation
        assert!((delta - 0.01).abs() < 1e-12, "{delta}");
    }

    #[test]
    fn central_twist_leaves_defect_unchanged() {
        // multiplying by a morphism into the center, p ↦ φ(p)·χ(p), cancels in ψ
        let alg = default_algebra(GroupId::SU2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let core = full_core(build_pair_groupoid(3).unwrap());
        let phi = coboundary(3, &alg, &mut rng);
        let phi = AlmostMorphism::new(
            phi.values()
                .iter()
                .map(|g| g.mul(&alg.sample_element(&mut rng, 0.02)))
                .collect(),
            &alg,
        )
        .unwrap();
        let e = GroupElement::identity(GroupId::SU2);
        let minus_one =
            GroupElement::new(GroupId::SU2, -crate::group::CMatrix::identity(2, 2)).unwrap();
        let signs = [&e, &minus_one, &minus_one];
        let chi = |a: usize| signs[a / 3].mul(&signs[a % 3].inverse());
        let twisted = AlmostMorphism::new(
            phi.values()
                .iter()
                .enumerate()
                .map(|(a, g)| g.mul(&chi(a)))
                .collect(),
            &alg,
        )
        .unwrap();
        let a = defect(&phi, &core, &alg).unwrap();
        let b = defect(&twisted, &core, &alg).unwrap();
        assert!((a - b).abs() < 1e-14, "{a} vs {b}");
    }

    #[test]
    fn exact_morphism_is_fixed_point() {
        let alg = default_algebra(GroupId::SO3).unwrap();
        let k = estimate_bch_constants(&alg, AmbientSets::default(), 1000, 1.25, 2).unwrap();
        let core = full_core(build_pair_groupoid(3).unwrap());
        let mu = attach_haar_density(&core, &DensitySpec::Uniform).unwrap();
        let trivial =
            AlmostMorphism::new(vec![GroupElement::identity(GroupId::SO3); 9], &alg).unwrap();
        let out = correct_once(&trivial, &core, &mu, &alg, &k, AmbientSets::default()).unwrap();
        assert_eq!(out, trivial);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let phi = coboundary(3, &alg, &mut rng);
        let out = correct_once(&phi, &core, &mu, &alg, &k, AmbientSets::default()).unwrap();
        for (a, b) in out.values().iter().zip(phi.values()) {
            assert!(a.max_abs_diff(b) < 1e-14);
        }
    }

    #[test]
    fn abelian_single_step_is_exact() {
        let alg = default_algebra(GroupId::U1).unwrap();
        let k = estimate_bch_constants(&alg, AmbientSets::default(), 1000, 1.25, 2).unwrap();
        let core =
            full_core(build_action_groupoid(&FiniteGroupTable::cyclic(3), 1, |_, x| x).unwrap());
        let mu = attach_haar_density(&core, &DensitySpec::Uniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = AlmostMorphism::new(
            (0..3).map(|_| alg.sample_element(&mut rng, 0.05)).collect(),
            &alg,
        )
        .unwrap();
        assert!(defect(&phi, &core, &alg).unwrap() > 1e-3);
        let next = correct_once(&phi, &core, &mu, &alg, &k, AmbientSets::default()).unwrap();
        assert!(defect(&next, &core, &alg).unwrap() <= 1e-14);

        // closed form: with additive angles a_g, the corrected value is
        // mean_k(a_{k+g}) - mean_k(a_k) = 0 on a group
        for v in next.values() {
            assert!(alg.magnitude(v).unwrap() < 1e-15);
        }
    }

    #[test]
    fn step_displacement_equals_correction_norm() {
        let alg = default_algebra(GroupId::SO3).unwrap();
        let k = estimate_bch_constants(&alg, AmbientSets::default(), 1000, 1.25, 2).unwrap();
        let core = full_core(build_pair_groupoid(3).unwrap());
        let mu = attach_haar_density(&core, &DensitySpec::Uniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let exact = coboundary(3, &alg, &mut rng);
        let phi = AlmostMorphism::new(
            exact
                .values()
                .iter()
                .map(|g| g.mul(&alg.sample_element(&mut rng, 0.01)))
                .collect(),
            &alg,
        )
        .unwrap();
        let corr = average_correction(&phi, &core, &mu, &alg, &k).unwrap();
        let next = correct_once(&phi, &core, &mu, &alg, &k, AmbientSets::default()).unwrap();
        let moved = phi
            .values()
            .iter()
            .zip(next.values())
            .map(|(a, b)| crate::group::left_distance(a, b, &alg).unwrap())
            .fold(0.0, f64::max);
        assert!((moved - corr.max_norm).abs() < 1e-14);
    }

    #[test]
    fn exact_start_terminates_immediately() {
        let alg = default_algebra(GroupId::SO3).unwrap();
        let k = estimate_bch_constants(&alg, AmbientSets::default(), 1000, 1.25, 2).unwrap();
        let core = full_core(build_pair_groupoid(3).unwrap());
        let mu = attach_haar_density(&core, &DensitySpec::Uniform).unwrap();
        let trivial =
            AlmostMorphism::new(vec![GroupElement::identity(GroupId::SO3); 9], &alg).unwrap();
        let (out, trace) = iterate(
            &trivial,
            &core,
            &mu,
            &alg,
            &k,
            AmbientSets::default(),
            IterationOptions::default(),
        )
        .unwrap();
        assert_eq!(trace.deltas, vec![0.0]);
        assert_eq!(trace.terminated, Termination::Converged);
        assert_eq!(out, trivial);
    }

    #[test]
    fn too_large_defect_rejected() {
        let alg = default_algebra(GroupId::SO3).unwrap();
        let k = estimate_bch_constants(&alg, AmbientSets::default(), 1000, 1.25, 2).unwrap();
        let core = full_core(build_pair_groupoid(3).unwrap());
        let mu = attach_haar_density(&core, &DensitySpec::Uniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let phi = AlmostMorphism::new(
            (0..9).map(|_| alg.sample_element(&mut rng, 1.0)).collect(),
            &alg,
        )
        .unwrap();
        let r = iterate(
            &phi,
            &core,
            &mu,
            &alg,
            &k,
            AmbientSets::default(),
            IterationOptions::default(),
        );
        assert!(matches!(r, Err(RectifyError::DefectTooLarge { .. })));
    }

    #[test]
    fn partial_core_reports_non_core_residual() {
        let alg = default_algebra(GroupId::SO3).unwrap();
        let g = Arc::new(build_pair_groupoid(3).unwrap());
        let units: Vec<usize> = (0..3).map(|x| g.unit(x)).collect();
        let core = build_core(g, &units).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = coboundary(3, &alg, &mut rng);
        let res = verify_core_morphism(&phi, &core, &alg);
        assert!(res.core < 1e-14);
        assert!(res.non_core.unwrap() < 1e-14);
    }
}
