//! Normalized Haar quadrature on the supported groups.
//!
//! * `Z_n`: uniform average over the `n` elements (exact).
//! * U(1), SO(2): trapezoid rule on `N` equispaced angles, exact for
//!   trigonometric polynomials of degree `< N`.
//! * SO(3), SU(2): product rule in ZYZ Euler angles, trapezoid in both
//!   azimuthal angles and Gauss–Legendre in `cos β`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lie::{exp_coords, CMatrix};
use super::{AlgebraVector, GroupElement, GroupId};
use crate::error::{RectifyError, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaarRule {
    /// Uniform weights on a finite group; the only rule for `Z_n`.
    Exact,
    Trapezoid {
        nodes: usize,
    },
    /// `azimuth_nodes` per azimuthal angle, `polar_nodes` Gauss–Legendre
    /// nodes in `cos β`.
    Euler {
        azimuth_nodes: usize,
        polar_nodes: usize,
    },
}

/// Values that can be Haar averaged.
pub trait Integrand: Sized {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, weight: f64, other: &Self);
}

impl Integrand for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, weight: f64, other: &Self) {
        *self += weight * other;
    }
}

impl Integrand for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, weight: f64, other: &Self) {
        *self += other * weight;
    }
}

impl<T: Integrand> Integrand for Vec<T> {
    fn zero_like(&self) -> Self {
        self.iter().map(Integrand::zero_like).collect()
    }
    fn add_scaled(&mut self, weight: f64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.add_scaled(weight, b);
        }
    }
}

impl Integrand for AlgebraVector {
    fn zero_like(&self) -> Self {
        AlgebraVector::zero(self.group())
    }
    fn add_scaled(&mut self, weight: f64, other: &Self) {
        *self = self.add(&other.scale(weight));
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // P_n(x) and P_{n-1}(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 0 {
                (1.0, 0.0)
            } else if n == 1 {
                (x, 1.0)
            } else {
                (p1, p0)
            };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

fn rot_z(group: GroupId, angle: f64) -> CMatrix {
    match group {
        GroupId::SO3 => exp_coords(group, &[0.0, 0.0, angle]),
        _ => exp_coords(group, &[0.0, 0.0, 0.5 * angle]),
    }
}

fn rot_y(group: GroupId, angle: f64) -> CMatrix {
    match group {
        GroupId::SO3 => exp_coords(group, &[0.0, angle, 0.0]),
        _ => exp_coords(group, &[0.0, 0.5 * angle, 0.0]),
    }
}

/// Quadrature nodes with weights summing to one.
pub fn haar_nodes(group: GroupId, rule: HaarRule) -> Result<Vec<(GroupElement, f64)>> {
    let unsupported = |what: &str| RectifyError::Unsupported {
        group: group.to_string(),
        what: what.into(),
    };
    match (group, rule) {
        (GroupId::Cyclic(n), _) => {
            let w = 1.0 / f64::from(n);
            Ok((0..n).map(|k| (GroupElement::cyclic(n, k), w)).collect())
        }
        (GroupId::U1 | GroupId::SO2, HaarRule::Trapezoid { nodes }) if nodes >= 1 => {
            let w = 1.0 / nodes as f64;
            Ok((0..nodes)
                .map(|j| {
                    let angle = 2.0 * PI * j as f64 / nodes as f64;
                    let m = exp_coords(group, &[angle]);
                    (GroupElement::from_matrix_unchecked(group, m), w)
                })
                .collect())
        }
        (
            GroupId::SO3 | GroupId::SU2,
            HaarRule::Euler {
                azimuth_nodes,
                polar_nodes,
            },
        ) if azimuth_nodes >= 1 && polar_nodes >= 1 => {
            // SU(2) is a double cover: the last Euler angle runs over 4π.
            let gamma_period = if group == GroupId::SU2 {
                4.0 * PI
            } else {
                2.0 * PI
            };
            let polar = gauss_legendre(polar_nodes);
            let n = azimuth_nodes as f64;
            let mut out = Vec::with_capacity(azimuth_nodes * azimuth_nodes * polar_nodes);
            for a in 0..azimuth_nodes {
                let ra = rot_z(group, 2.0 * PI * a as f64 / n);
                for &(x, wx) in &polar {
                    let rb = rot_y(group, x.acos());
                    let rab = &ra * rb;
                    for g in 0..azimuth_nodes {
                        let rg = rot_z(group, gamma_period * g as f64 / n);
                        let weight = 0.5 * wx / (n * n);
                        out.push((
                            GroupElement::from_matrix_unchecked(group, &rab * rg),
                            weight,
                        ));
                    }
                }
            }
            Ok(out)
        }
        (_, HaarRule::Exact) => Err(unsupported("exact Haar rule on a continuous group")),
        _ => Err(unsupported("quadrature rule")),
    }
}

/// `∫_G f dμ` with the given rule, summed in node order.
pub fn haar_integrate<V, F>(f: F, group: GroupId, rule: HaarRule) -> Result<V>
where
    V: Integrand,
    F: Fn(&GroupElement) -> V,
{
    let nodes = haar_nodes(group, rule)?;
    let mut iter = nodes.iter();
    let (g0, w0) = iter.next().expect("quadrature has at least one node");
    let first = f(g0);
    let mut acc = first.zero_like();
    acc.add_scaled(*w0, &first);
    for (g, w) in iter {
        acc.add_scaled(*w, &f(g));
    }
    Ok(acc)
}
