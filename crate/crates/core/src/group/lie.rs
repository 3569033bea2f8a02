//! Closed-form exponential and principal logarithm for the supported groups.
//!
//! Coordinates are taken in fixed ordered bases:
//!
//! | group | basis                          | coords |
//! |-------|--------------------------------|--------|
//! | U(1)  | `i`                            | θ      |
//! | SO(2) | `[[0,-1],[1,0]]`               | θ      |
//! | SO(3) | `L_x, L_y, L_z` (cross product) | ω      |
//! | SU(2) | `iσ_x, iσ_y, iσ_z`             | a      |
//!
//! In every case the eigen-angles of `exp(u)` are bounded by the Euclidean
//! length of the coordinate vector, so the principal branch is injective on
//! `|coords| < π`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::GroupId;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn real_matrix(n: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(n, n, entries.iter().map(|&x| c(x, 0.0)))
}

/// `sin(x/2)/x`, accurate near zero.
fn half_sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let h2 = 0.25 * x * x;
        0.5 * (1.0 - h2 / 6.0 + h2 * h2 / 120.0)
    } else {
        (0.5 * x).sin() / x
    }
}

/// `sin(x)/x`, accurate near zero.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn norm3(v: &[f64]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Rotation matrix of the unit quaternion `(w, x, y, z)`.
pub(crate) fn quaternion_to_rotation(w: f64, x: f64, y: f64, z: f64) -> CMatrix {
    real_matrix(
        3,
        &[
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    )
}

/// Shepperd's method; the returned quaternion has `w >= 0`.
pub(crate) fn rotation_to_quaternion(m: &CMatrix) -> [f64; 4] {
    let r = |i: usize, j: usize| m[(i, j)].re;
    let tr = r(0, 0) + r(1, 1) + r(2, 2);
    let diag = [r(0, 0), r(1, 1), r(2, 2)];
    let (mut w, mut x, mut y, mut z);
    if tr >= diag[0] && tr >= diag[1] && tr >= diag[2] {
        w = 0.5 * (1.0 + tr).max(0.0).sqrt();
        let f = 0.25 / w;
        x = (r(2, 1) - r(1, 2)) * f;
        y = (r(0, 2) - r(2, 0)) * f;
        z = (r(1, 0) - r(0, 1)) * f;
    } else if diag[0] >= diag[1] && diag[0] >= diag[2] {
        x = 0.5 * (1.0 + diag[0] - diag[1] - diag[2]).max(0.0).sqrt();
        let f = 0.25 / x;
        w = (r(2, 1) - r(1, 2)) * f;
        y = (r(0, 1) + r(1, 0)) * f;
        z = (r(0, 2) + r(2, 0)) * f;
    } else if diag[1] >= diag[2] {
        y = 0.5 * (1.0 - diag[0] + diag[1] - diag[2]).max(0.0).sqrt();
        let f = 0.25 / y;
        w = (r(0, 2) - r(2, 0)) * f;
        x = (r(0, 1) + r(1, 0)) * f;
        z = (r(1, 2) + r(2, 1)) * f;
    } else {
        z = 0.5 * (1.0 - diag[0] - diag[1] + diag[2]).max(0.0).sqrt();
        let f = 0.25 / z;
        w = (r(1, 0) - r(0, 1)) * f;
        x = (r(0, 2) + r(2, 0)) * f;
        y = (r(1, 2) + r(2, 1)) * f;
    }
    if w < 0.0 {
        w = -w;
        x = -x;
        y = -y;
        z = -z;
    }
    [w, x, y, z]
}

/// Matrix of the Lie algebra element with the given coordinates.
pub fn embed(group: GroupId, coords: &[f64]) -> CMatrix {
    match group {
        GroupId::Cyclic(_) => CMatrix::from_element(1, 1, ZERO),
        GroupId::U1 => CMatrix::from_element(1, 1, c(0.0, coords[0])),
        GroupId::SO2 => real_matrix(2, &[0.0, -coords[0], coords[0], 0.0]),
        GroupId::SO3 => {
            let (x, y, z) = (coords[0], coords[1], coords[2]);
            real_matrix(3, &[0.0, -z, y, z, 0.0, -x, -y, x, 0.0])
        }
        GroupId::SU2 => {
            let (x, y, z) = (coords[0], coords[1], coords[2]);
            CMatrix::from_row_slice(2, 2, &[c(0.0, z), c(y, x), c(-y, x), c(0.0, -z)])
        }
    }
}

/// Coordinates of the (skew-hermitian part of the) matrix in the algebra basis.
pub fn project(group: GroupId, m: &CMatrix) -> Vec<f64> {
    match group {
        GroupId::Cyclic(_) => Vec::new(),
        GroupId::U1 => vec![m[(0, 0)].im],
        GroupId::SO2 => vec![0.5 * (m[(1, 0)].re - m[(0, 1)].re)],
        GroupId::SO3 => vec![
            0.5 * (m[(2, 1)].re - m[(1, 2)].re),
            0.5 * (m[(0, 2)].re - m[(2, 0)].re),
            0.5 * (m[(1, 0)].re - m[(0, 1)].re),
        ],
        GroupId::SU2 => vec![
            0.5 * (m[(0, 1)].im + m[(1, 0)].im),
            0.5 * (m[(0, 1)].re - m[(1, 0)].re),
            0.5 * (m[(0, 0)].im - m[(1, 1)].im),
        ],
    }
}

pub fn exp_coords(group: GroupId, coords: &[f64]) -> CMatrix {
    match group {
        GroupId::Cyclic(_) => CMatrix::identity(1, 1),
        GroupId::U1 => {
            let t = coords[0];
            CMatrix::from_element(1, 1, c(t.cos(), t.sin()))
        }
        GroupId::SO2 => {
            let (s, co) = coords[0].sin_cos();
            real_matrix(2, &[co, -s, s, co])
        }
        GroupId::SO3 => {
            let theta = norm3(coords);
            let k = half_sinc(theta);
            let w = (0.5 * theta).cos();
            quaternion_to_rotation(w, k * coords[0], k * coords[1], k * coords[2])
        }
        GroupId::SU2 => {
            let theta = norm3(coords);
            let k = sinc(theta);
            let co = theta.cos();
            let (x, y, z) = (k * coords[0], k * coords[1], k * coords[2]);
            CMatrix::from_row_slice(2, 2, &[c(co, z), c(y, x), c(-y, x), c(co, -z)])
        }
    }
}

/// Principal logarithm: eigen-angles in `(-π, π]`.
pub fn log_coords(group: GroupId, m: &CMatrix) -> Vec<f64> {
    match group {
        GroupId::Cyclic(_) => Vec::new(),
        GroupId::U1 => vec![m[(0, 0)].arg()],
        GroupId::SO2 => {
            let s = 0.5 * (m[(1, 0)].re - m[(0, 1)].re);
            let co = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
            vec![s.atan2(co)]
        }
        GroupId::SO3 => {
            let [w, x, y, z] = rotation_to_quaternion(m);
            let s = (x * x + y * y + z * z).sqrt();
            if s == 0.0 {
                return vec![0.0; 3];
            }
            let f = 2.0 * s.atan2(w) / s;
            vec![f * x, f * y, f * z]
        }
        GroupId::SU2 => {
            let w = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
            let v = project(group, m);
            let s = norm3(&v);
            if s == 0.0 {
                return if w >= 0.0 {
                    vec![0.0; 3]
                } else {
                    vec![0.0, 0.0, std::f64::consts::PI]
                };
            }
            let f = s.atan2(w) / s;
            v.iter().map(|x| f * x).collect()
        }
    }
}
