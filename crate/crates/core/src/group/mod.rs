//! Compact matrix group numerics: elements, the normalized Lie algebra norm,
//! exponential and logarithm, the left-invariant distance, Haar quadrature and
//! the BCH-type constants that drive the rectification bound.

mod constants;
mod haar;
pub mod lie;

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{RectifyError, Result};
pub use constants::{
    estimate_bch_constants, revalidate_bch_constants, AmbientSets, BchConstants, BchRevalidation,
    BCH_EPS_FLOOR,
};
pub use haar::{gauss_legendre, haar_integrate, haar_nodes, HaarRule, Integrand};
pub use lie::CMatrix;

/// Tolerance on the group-membership residual of a matrix.
pub const TAU_GROUP: f64 = 1e-10;
/// Tolerance for algebra-level comparisons.
pub const TAU_ALG: f64 = 1e-9;
/// Round-trip tolerance for `log(exp(u))`.
pub const TAU_ROUND: f64 = 1e-12;

/// Relative shrink applied to the principal-branch radius when recording the
/// verified injectivity margin.
const MARGIN_SHRINK: f64 = 1e-6;
const SCALE_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupId {
    /// Cyclic group of the given order, realized as roots of unity.
    Cyclic(u32),
    U1,
    SO2,
    SO3,
    SU2,
}

impl GroupId {
    /// Size of the defining matrix representation.
    pub fn matrix_dim(self) -> usize {
        match self {
            GroupId::Cyclic(_) | GroupId::U1 => 1,
            GroupId::SO2 | GroupId::SU2 => 2,
            GroupId::SO3 => 3,
        }
    }

    pub fn algebra_dim(self) -> usize {
        match self {
            GroupId::Cyclic(_) => 0,
            GroupId::U1 | GroupId::SO2 => 1,
            GroupId::SO3 | GroupId::SU2 => 3,
        }
    }

    pub fn is_abelian(self) -> bool {
        !matches!(self, GroupId::SO3 | GroupId::SU2)
    }

    pub fn parse(tag: &str) -> Option<Self> {
        match tag.to_ascii_lowercase().as_str() {
            "u1" | "u(1)" => Some(GroupId::U1),
            "so2" | "so(2)" => Some(GroupId::SO2),
            "so3" | "so(3)" => Some(GroupId::SO3),
            "su2" | "su(2)" => Some(GroupId::SU2),
            other => other
                .strip_prefix('z')
                .and_then(|n| n.parse().ok())
                .filter(|&n: &u32| n >= 1)
                .map(GroupId::Cyclic),
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupId::Cyclic(n) => write!(f, "Z{n}"),
            GroupId::U1 => f.write_str("U(1)"),
            GroupId::SO2 => f.write_str("SO(2)"),
            GroupId::SO3 => f.write_str("SO(3)"),
            GroupId::SU2 => f.write_str("SU(2)"),
        }
    }
}

/// An element of one of the supported compact groups in its defining
/// representation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    matrix: CMatrix,
    group: GroupId,
}

impl GroupElement {
    /// Checks membership to `TAU_GROUP`.
    pub fn new(group: GroupId, matrix: CMatrix) -> Result<Self> {
        let g = GroupElement { matrix, group };
        let n = group.matrix_dim();
        if g.matrix.nrows() != n || g.matrix.ncols() != n {
            return Err(RectifyError::GroupMismatch {
                expected: format!("{n}x{n} matrix for {group}"),
                found: format!("{}x{}", g.matrix.nrows(), g.matrix.ncols()),
            });
        }
        let r = g.membership_residual();
        if !(r <= TAU_GROUP) {
            return Err(RectifyError::GroupMismatch {
                expected: format!("element of {group}"),
                found: format!("matrix with membership residual {r:e}"),
            });
        }
        Ok(g)
    }

    pub(crate) fn from_matrix_unchecked(group: GroupId, matrix: CMatrix) -> Self {
        GroupElement { matrix, group }
    }

    pub fn identity(group: GroupId) -> Self {
        let n = group.matrix_dim();
        GroupElement {
            matrix: CMatrix::identity(n, n),
            group,
        }
    }

    /// `exp(2πi k / n)` in `Z_n`.
    pub fn cyclic(n: u32, k: u32) -> Self {
        let angle = 2.0 * std::f64::consts::PI * f64::from(k % n) / f64::from(n);
        let z = if k % n == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, angle)
        };
        GroupElement {
            matrix: CMatrix::from_element(1, 1, z),
            group: GroupId::Cyclic(n),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    /// Max of the unitarity residual and the determinant/reality conditions
    /// of the group.
    pub fn membership_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        let gram = self.matrix.adjoint() * &self.matrix;
        let mut r = (gram - CMatrix::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        match self.group {
            GroupId::Cyclic(k) => {
                let z = self.matrix[(0, 0)];
                r = r.max((z.powu(k) - Complex64::new(1.0, 0.0)).norm());
            }
            GroupId::U1 => {}
            GroupId::SO2 | GroupId::SO3 => {
                let imag = self.matrix.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                r = r.max(imag).max((self.matrix.determinant() - 1.0).norm());
            }
            GroupId::SU2 => r = r.max((self.matrix.determinant() - 1.0).norm()),
        }
        r
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        debug_assert_eq!(self.group, other.group);
        GroupElement {
            matrix: &self.matrix * &other.matrix,
            group: self.group,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            matrix: self.matrix.adjoint(),
            group: self.group,
        }
    }

    /// `z · self · z⁻¹`.
    pub fn conjugate_by(&self, z: &GroupElement) -> GroupElement {
        z.mul(self).mul(&z.inverse())
    }

    /// Entrywise max distance between matrices.
    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.group)?;
        for i in 0..self.matrix.nrows() {
            if i > 0 {
                f.write_str("; ")?;
            }
            for j in 0..self.matrix.ncols() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                let z = self.matrix[(i, j)];
                write!(f, "{:.6}{:+.6}i", z.re, z.im)?;
            }
        }
        f.write_str("]")
    }
}

/// Coordinates of a Lie algebra element in the fixed basis of its group.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraVector {
    coords: Vec<f64>,
    group: GroupId,
}

impl AlgebraVector {
    pub fn new(group: GroupId, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != group.algebra_dim() {
            return Err(RectifyError::InvalidAlgebraVector(format!(
                "{} coordinates given, {group} algebra has dimension {}",
                coords.len(),
                group.algebra_dim()
            )));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(RectifyError::InvalidAlgebraVector(format!(
                "non-finite coordinate {x}"
            )));
        }
        Ok(AlgebraVector { coords, group })
    }

    pub fn zero(group: GroupId) -> Self {
        AlgebraVector {
            coords: vec![0.0; group.algebra_dim()],
            group,
        }
    }

    /// Basis vector `e_i`.
    pub fn basis(group: GroupId, i: usize) -> Self {
        let mut coords = vec![0.0; group.algebra_dim()];
        coords[i] = 1.0;
        AlgebraVector { coords, group }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn add(&self, other: &AlgebraVector) -> AlgebraVector {
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        AlgebraVector {
            coords,
            group: self.group,
        }
    }

    pub fn sub(&self, other: &AlgebraVector) -> AlgebraVector {
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        AlgebraVector {
            coords,
            group: self.group,
        }
    }

    pub fn scale(&self, s: f64) -> AlgebraVector {
        AlgebraVector {
            coords: self.coords.iter().map(|a| a * s).collect(),
            group: self.group,
        }
    }

    pub fn neg(&self) -> AlgebraVector {
        self.scale(-1.0)
    }

    /// Euclidean length of the coordinate vector.
    pub fn coord_norm(&self) -> f64 {
        self.coords.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn to_matrix(&self) -> CMatrix {
        lie::embed(self.group, &self.coords)
    }
}

/// The un-normalized norm a caller picks on the algebra.
///
/// Each of these is a fixed multiple of the Euclidean norm of the coordinates
/// for the supported algebras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawNorm {
    /// Euclidean norm of the coordinates.
    Euclidean,
    /// Frobenius norm of the embedded matrix.
    Frobenius,
    /// Largest eigen-angle of the embedded matrix (its spectral norm).
    MaxAngle,
}

impl RawNorm {
    /// `raw(u) = factor · |coords(u)|`.
    pub fn factor(self, group: GroupId) -> f64 {
        match self {
            RawNorm::Euclidean | RawNorm::MaxAngle => 1.0,
            RawNorm::Frobenius => match group {
                GroupId::Cyclic(_) | GroupId::U1 => 1.0,
                GroupId::SO2 | GroupId::SO3 | GroupId::SU2 => std::f64::consts::SQRT_2,
            },
        }
    }

    pub fn evaluate(self, u: &AlgebraVector) -> f64 {
        match self {
            RawNorm::Frobenius => u
                .to_matrix()
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt(),
            RawNorm::Euclidean | RawNorm::MaxAngle => u.coord_norm(),
        }
    }
}

/// A Lie algebra with its normalized norm `|u| = scale · raw(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormedAlgebra {
    pub group: GroupId,
    pub raw_norm: RawNorm,
    pub scale: f64,
    /// Verified radius (normalized units) of the region where the principal
    /// logarithm inverts the exponential.
    pub injectivity_margin: f64,
}

impl NormedAlgebra {
    pub fn norm(&self, u: &AlgebraVector) -> f64 {
        self.scale * self.raw_norm.evaluate(u)
    }

    /// Normalized norm per unit of coordinate length.
    pub fn coord_scale(&self) -> f64 {
        self.scale * self.raw_norm.factor(self.group)
    }

    fn check(&self, u: &AlgebraVector) -> Result<()> {
        if u.group != self.group {
            return Err(RectifyError::GroupMismatch {
                expected: self.group.to_string(),
                found: u.group.to_string(),
            });
        }
        Ok(())
    }

    pub fn exp(&self, u: &AlgebraVector) -> Result<GroupElement> {
        self.check(u)?;
        if let Some(x) = u.coords.iter().find(|x| !x.is_finite()) {
            return Err(RectifyError::InvalidAlgebraVector(format!(
                "non-finite coordinate {x}"
            )));
        }
        Ok(GroupElement::from_matrix_unchecked(
            self.group,
            lie::exp_coords(self.group, &u.coords),
        ))
    }

    /// Principal logarithm, restricted to the verified injectivity region.
    pub fn log(&self, g: &GroupElement) -> Result<AlgebraVector> {
        if g.group != self.group {
            return Err(RectifyError::GroupMismatch {
                expected: self.group.to_string(),
                found: g.group.to_string(),
            });
        }
        if let GroupId::Cyclic(_) = self.group {
            let z = g.matrix[(0, 0)];
            let distance = (z - Complex64::new(1.0, 0.0)).norm();
            if distance > TAU_GROUP {
                return Err(RectifyError::LogDomainError {
                    distance,
                    margin: 0.0,
                });
            }
            return Ok(AlgebraVector::zero(self.group));
        }
        let u = AlgebraVector {
            coords: lie::log_coords(self.group, &g.matrix),
            group: self.group,
        };
        let distance = self.norm(&u);
        if !(distance <= self.injectivity_margin) {
            return Err(RectifyError::LogDomainError {
                distance,
                margin: self.injectivity_margin,
            });
        }
        Ok(u)
    }

    pub fn bracket(&self, u: &AlgebraVector, v: &AlgebraVector) -> AlgebraVector {
        let (x, y) = (u.to_matrix(), v.to_matrix());
        let m = &x * &y - &y * &x;
        AlgebraVector {
            coords: lie::project(self.group, &m),
            group: self.group,
        }
    }

    /// Adjoint action `Ad_g(u) = g u g⁻¹`.
    pub fn adjoint(&self, g: &GroupElement, u: &AlgebraVector) -> AlgebraVector {
        let m = &g.matrix * u.to_matrix() * g.matrix.adjoint();
        AlgebraVector {
            coords: lie::project(self.group, &m),
            group: self.group,
        }
    }

    /// `|g| := d(g, e)`.
    pub fn magnitude(&self, g: &GroupElement) -> Result<f64> {
        Ok(self.norm(&self.log(g)?))
    }

    /// Uniform sample from the normalized ball of the given radius.
    pub fn sample_ball<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> AlgebraVector {
        let dim = self.group.algebra_dim();
        if dim == 0 {
            return AlgebraVector::zero(self.group);
        }
        let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let len = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
        let r: f64 = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        let s = r / (len * self.coord_scale());
        dir.iter_mut().for_each(|a| *a *= s);
        AlgebraVector {
            coords: dir,
            group: self.group,
        }
    }

    /// Uniform sample from the sphere of the given normalized radius.
    pub fn sample_sphere<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> AlgebraVector {
        let dim = self.group.algebra_dim();
        if dim == 0 {
            return AlgebraVector::zero(self.group);
        }
        let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let len = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
        let s = radius / (len * self.coord_scale());
        dir.iter_mut().for_each(|a| *a *= s);
        AlgebraVector {
            coords: dir,
            group: self.group,
        }
    }

    /// Sample an element at left distance at most `radius` from `e`.
    pub fn sample_element<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> GroupElement {
        let u = self.sample_ball(rng, radius);
        GroupElement::from_matrix_unchecked(self.group, lie::exp_coords(self.group, &u.coords))
    }
}

/// Left-invariant distance `|log(g⁻¹h)|`.
pub fn left_distance(g: &GroupElement, h: &GroupElement, alg: &NormedAlgebra) -> Result<f64> {
    alg.magnitude(&g.inverse().mul(h))
}

/// Pick the scale of `raw_norm` so that `|[u,v]| <= |u||v|` on the sampled
/// pairs and `exp` is injective on the closed normalized unit ball.
///
/// The scale is never taken below one raw unit. The sampled pairs always
/// include all pairs of basis vectors.
pub fn normalize_algebra_norm(
    group: GroupId,
    raw_norm: RawNorm,
    sample_count: usize,
    seed: u64,
) -> Result<NormedAlgebra> {
    use rand::SeedableRng;
    let factor = raw_norm.factor(group);
    let dim = group.algebra_dim();
    if dim == 0 {
        return Ok(NormedAlgebra {
            group,
            raw_norm,
            scale: 1.0,
            injectivity_margin: 0.0,
        });
    }
    let probe = NormedAlgebra {
        group,
        raw_norm,
        scale: 1.0,
        injectivity_margin: f64::INFINITY,
    };

    let mut commutator_ratio: f64 = 0.0;
    let mut ratio = |u: &AlgebraVector, v: &AlgebraVector| {
        let denom = raw_norm.evaluate(u) * raw_norm.evaluate(v);
        if denom > 0.0 {
            commutator_ratio =
                commutator_ratio.max(raw_norm.evaluate(&probe.bracket(u, v)) / denom);
        }
    };
    for i in 0..dim {
        for j in 0..dim {
            ratio(
                &AlgebraVector::basis(group, i),
                &AlgebraVector::basis(group, j),
            );
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..sample_count {
        let u = probe.sample_sphere(&mut rng, 1.0);
        let v = probe.sample_sphere(&mut rng, 1.0);
        ratio(&u, &v);
    }

    // Principal branch is injective for coordinate length < π.
    let raw_radius = std::f64::consts::PI * factor;
    let injectivity_scale = (1.0 + MARGIN_SHRINK) / raw_radius;
    let scale = commutator_ratio.max(injectivity_scale).max(1.0);
    if !(scale <= SCALE_CAP) {
        return Err(RectifyError::NormalizationFailure(format!(
            "required scale {scale:e} exceeds cap {SCALE_CAP:e} (commutator ratio {commutator_ratio:e})"
        )));
    }
    let alg = NormedAlgebra {
        group,
        raw_norm,
        scale,
        injectivity_margin: scale * raw_radius * (1.0 - MARGIN_SHRINK),
    };

    // Injectivity on the unit ball, checked through the round trip.
    for _ in 0..sample_count {
        let u = alg.sample_ball(&mut rng, 1.0);
        let back = alg.log(&alg.exp(&u)?)?;
        let err = alg.norm(&back.sub(&u));
        if err > TAU_ALG {
            return Err(RectifyError::NormalizationFailure(format!(
                "round trip error {err:e} at {:?}",
                u.coords
            )));
        }
    }
    Ok(alg)
}

/// The normalized algebra used by default for each target group.
pub fn default_algebra(group: GroupId) -> Result<NormedAlgebra> {
    let raw = match group {
        GroupId::SU2 => RawNorm::Frobenius,
        GroupId::U1 | GroupId::Cyclic(_) => RawNorm::MaxAngle,
        GroupId::SO2 | GroupId::SO3 => RawNorm::Euclidean,
    };
    normalize_algebra_norm(group, raw, 4096, 0x5eed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn so3() -> NormedAlgebra {
        default_algebra(GroupId::SO3).unwrap()
    }

    #[test]
    fn exp_rotation_about_z() {
        let alg = so3();
        let g = alg
            .exp(&AlgebraVector::new(GroupId::SO3, vec![0.0, 0.0, FRAC_PI_2]).unwrap())
            .unwrap();
        let expected = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((g.matrix()[(i, j)].re - expected[i][j]).abs() < 1e-15);
            }
        }
        let u = alg.log(&g).unwrap();
        assert!((u.coords()[2] - FRAC_PI_2).abs() < 1e-15);
        assert!(u.coords()[0].abs() < 1e-15 && u.coords()[1].abs() < 1e-15);
    }

    #[test]
    fn exp_of_zero_is_exact_identity() {
        for group in [GroupId::U1, GroupId::SO2, GroupId::SO3, GroupId::SU2] {
            let alg = default_algebra(group).unwrap();
            let g = alg.exp(&AlgebraVector::zero(group)).unwrap();
            assert_eq!(g, GroupElement::identity(group));
            assert_eq!(alg.log(&g).unwrap(), AlgebraVector::zero(group));
        }
    }

    #[test]
    fn su2_half_turn() {
        let alg = default_algebra(GroupId::SU2).unwrap();
        let g = alg
            .exp(&AlgebraVector::new(GroupId::SU2, vec![0.0, 0.0, PI / 2.0]).unwrap())
            .unwrap();
        let m = g.matrix();
        assert!((m[(0, 0)] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((m[(1, 1)] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(m[(0, 1)].norm() < 1e-15 && m[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn non_finite_input_rejected() {
        assert!(matches!(
            AlgebraVector::new(GroupId::SO3, vec![0.0, f64::NAN, 0.0]),
            Err(RectifyError::InvalidAlgebraVector(_))
        ));
        let alg = so3();
        let bad = AlgebraVector {
            coords: vec![f64::INFINITY, 0.0, 0.0],
            group: GroupId::SO3,
        };
        assert!(matches!(
            alg.exp(&bad),
            Err(RectifyError::InvalidAlgebraVector(_))
        ));
    }

    #[test]
    fn log_outside_margin_is_domain_error() {
        let alg = so3();
        let half_turn = alg
            .exp(&AlgebraVector::new(GroupId::SO3, vec![PI, 0.0, 0.0]).unwrap())
            .unwrap();
        assert!(matches!(
            alg.log(&half_turn),
            Err(RectifyError::LogDomainError { .. })
        ));
    }

    #[test]
    fn normalization_scales() {
        // cross product: λ = 1
        let so3 = normalize_algebra_norm(GroupId::SO3, RawNorm::Euclidean, 1000, 1).unwrap();
        assert_eq!(so3.scale, 1.0);
        // abelian: only injectivity matters, λ >= 1/π
        let u1 = normalize_algebra_norm(GroupId::U1, RawNorm::MaxAngle, 1000, 1).unwrap();
        assert!(u1.scale >= 1.0 / PI);
        // su(2) with Frobenius: λ equals the sampled maximum of |[u,v]|/(|u||v|)
        let su2 = normalize_algebra_norm(GroupId::SU2, RawNorm::Frobenius, 1000, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let raw = NormedAlgebra {
            scale: 1.0,
            ..su2.clone()
        };
        let mut best: f64 = 0.0;
        for _ in 0..100_000 {
            let u = raw.sample_sphere(&mut rng, 1.0);
            let v = raw.sample_sphere(&mut rng, 1.0);
            best = best.max(raw.norm(&raw.bracket(&u, &v)));
        }
        assert!(best <= su2.scale * (1.0 + 1e-12));
        assert!(best >= su2.scale * (1.0 - 1e-3));
        assert!((su2.scale - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn distance_identities() {
        let alg = so3();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let u = alg.sample_ball(&mut rng, 1.0);
            let g = alg.exp(&u).unwrap();
            assert_eq!(left_distance(&g, &g, &alg).unwrap(), 0.0);
            let e = GroupElement::identity(GroupId::SO3);
            assert!((left_distance(&e, &g, &alg).unwrap() - alg.norm(&u)).abs() < 1e-13);
        }
    }

    #[test]
    fn membership_rejects_non_unitary() {
        let m = CMatrix::from_element(1, 1, Complex64::new(1.1, 0.0));
        assert!(GroupElement::new(GroupId::U1, m).is_err());
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        // orthogonal but det = -1
        assert!(GroupElement::new(GroupId::SO2, m).is_err());
    }

    #[test]
    fn group_tags_parse() {
        assert_eq!(GroupId::parse("so3"), Some(GroupId::SO3));
        assert_eq!(GroupId::parse("U(1)"), Some(GroupId::U1));
        assert_eq!(GroupId::parse("z4"), Some(GroupId::Cyclic(4)));
        assert_eq!(GroupId::parse("z0"), None);
        assert_eq!(GroupId::parse("sl2"), None);
    }
}
