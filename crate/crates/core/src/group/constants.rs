//! Sampled estimates of the analytic constants of a normalized compact group:
//! the three BCH-type ratios `c, c′, c″`, the Lipschitz bounds `d ≤ |exp| ≤ d′`
//! between the unit balls, the adjoint distortion `c_l` over the ambient
//! compact set and the containment constant `c_d`.
//!
//! The estimates are empirical maxima (minimum for `d`) inflated by a safety
//! factor. They are upper bounds on the sample only; `revalidate_bch_constants`
//! checks them against a fresh, disjoint sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{left_distance, AlgebraVector, NormedAlgebra};
use crate::error::{RectifyError, Result};

/// Pairs with `|u+v|` below this are excluded from the `c′` ratio.
pub const BCH_EPS_FLOOR: f64 = 1e-6;
/// Empirical ratios at or below this are rounding noise and are reported as 0.
const ROUNDING_FLOOR: f64 = 1e-10;
/// Pairs with `|u||v|` below this are excluded from the `c` ratio.
const PRODUCT_FLOOR: f64 = 1e-8;
const MIN_SAMPLES: usize = 1000;

/// The neighborhood `W` of the identity and the compact set containing its
/// closure, both metric balls around `e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientSets {
    pub w_radius: f64,
    pub k_radius: f64,
}

impl Default for AmbientSets {
    fn default() -> Self {
        AmbientSets {
            w_radius: 1.5,
            k_radius: 2.5,
        }
    }
}

impl AmbientSets {
    pub fn new(w_radius: f64, k_radius: f64) -> Result<Self> {
        if !(w_radius >= 1.0) {
            return Err(RectifyError::Config(format!(
                "W radius {w_radius} must be >= 1"
            )));
        }
        if !(k_radius > w_radius) {
            return Err(RectifyError::Config(format!(
                "ambient compact radius {k_radius} must exceed W radius {w_radius}"
            )));
        }
        Ok(AmbientSets { w_radius, k_radius })
    }

    /// The ambient compact ball must sit inside the region where distances
    /// are measurable.
    pub fn check_against(&self, alg: &NormedAlgebra) -> Result<()> {
        if self.k_radius >= alg.injectivity_margin {
            return Err(RectifyError::Config(format!(
                "ambient compact radius {} reaches the injectivity margin {} of {}",
                self.k_radius, alg.injectivity_margin, alg.group
            )));
        }
        Ok(())
    }
}

/// Raw sample statistics behind a `BchConstants`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMaxima {
    pub c: f64,
    pub c_prime: f64,
    pub c_dprime: f64,
    /// Minimum Lipschitz ratio of `exp`.
    pub d: f64,
    pub d_prime: f64,
    pub c_l: f64,
    /// Fraction of pairs dropped from the `c′` ratio for `|u+v| < BCH_EPS_FLOOR`.
    pub excluded_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BchConstants {
    pub c: f64,
    pub c_prime: f64,
    pub c_dprime: f64,
    pub d: f64,
    pub d_prime: f64,
    pub c_l: f64,
    pub c_d: f64,
    pub sample_count: usize,
    pub safety_factor: f64,
    pub seed: u64,
    pub empirical: EmpiricalMaxima,
}

fn snap(x: f64) -> f64 {
    if x <= ROUNDING_FLOOR {
        0.0
    } else {
        x
    }
}

struct PairRatios {
    gap: f64,
    gap_scale: f64,
    prod: f64,
    sum: f64,
    conj: f64,
    conj_scale: f64,
}

fn pair_ratios(alg: &NormedAlgebra, u: &AlgebraVector, v: &AlgebraVector) -> Result<PairRatios> {
    let (nu, nv) = (alg.norm(u), alg.norm(v));
    let gu = alg.exp(u)?;
    let gv = alg.exp(v)?;
    let w = alg.log(&gu.mul(&gv))?;
    let conj = gu.mul(&gv).mul(&alg.exp(&u.neg())?);
    Ok(PairRatios {
        gap: alg.norm(&w.sub(&u.add(v))),
        gap_scale: nu * nv,
        prod: alg.norm(&w),
        sum: alg.norm(&u.add(v)),
        conj: alg.magnitude(&conj)?,
        conj_scale: nv + nv * nu,
    })
}

/// Estimate the constants from `sample_count` pairs in the unit ball, and the
/// same number of ambient-set samples for `c_l`.
pub fn estimate_bch_constants(
    alg: &NormedAlgebra,
    sets: AmbientSets,
    sample_count: usize,
    safety_factor: f64,
    seed: u64,
) -> Result<BchConstants> {
    if sample_count < MIN_SAMPLES {
        return Err(RectifyError::Config(format!(
            "sample_count {sample_count} below minimum {MIN_SAMPLES}"
        )));
    }
    if !(safety_factor >= 1.0) {
        return Err(RectifyError::Config(format!(
            "safety factor {safety_factor} must be >= 1"
        )));
    }
    sets.check_against(alg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut c: f64 = 0.0;
    let mut c_prime: f64 = 0.0;
    let mut c_dprime: f64 = 0.0;
    let mut d_min = f64::INFINITY;
    let mut d_max: f64 = 0.0;
    let mut excluded = 0usize;
    for _ in 0..sample_count {
        let u = alg.sample_ball(&mut rng, 1.0);
        let v = alg.sample_ball(&mut rng, 1.0);
        let r = pair_ratios(alg, &u, &v)?;
        if r.gap_scale >= PRODUCT_FLOOR {
            c = c.max(r.gap / r.gap_scale);
        }
        if r.sum >= BCH_EPS_FLOOR {
            c_prime = c_prime.max(r.prod / r.sum);
        } else {
            excluded += 1;
        }
        if r.conj_scale > 0.0 {
            c_dprime = c_dprime.max(r.conj / r.conj_scale);
        }
        let step = alg.norm(&u.sub(&v));
        if step > 1e-9 {
            let dist = left_distance(&alg.exp(&u)?, &alg.exp(&v)?, alg)?;
            d_min = d_min.min(dist / step);
            d_max = d_max.max(dist / step);
        }
    }
    if alg.group.algebra_dim() == 0 {
        d_min = 1.0;
        d_max = 1.0;
    }

    let c_l_emp = adjoint_distortion(alg, sets, sample_count, &mut rng)?;

    let empirical = EmpiricalMaxima {
        c: snap(c),
        c_prime,
        c_dprime,
        d: d_min,
        d_prime: d_max,
        c_l: c_l_emp,
        excluded_fraction: excluded as f64 / sample_count as f64,
    };
    Ok(BchConstants {
        c: empirical.c * safety_factor,
        c_prime: empirical.c_prime * safety_factor,
        c_dprime: empirical.c_dprime * safety_factor,
        d: empirical.d / safety_factor,
        d_prime: empirical.d_prime * safety_factor,
        c_l: empirical.c_l * safety_factor,
        c_d: 1.0 / (sets.k_radius - sets.w_radius),
        sample_count,
        safety_factor,
        seed,
        empirical,
    })
}

/// Largest Lipschitz ratio of `g ↦ h g h⁻¹` on `B_1(e)` over sampled `h` in
/// the ambient compact ball.
fn adjoint_distortion(
    alg: &NormedAlgebra,
    sets: AmbientSets,
    sample_count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if alg.group.algebra_dim() == 0 {
        return Ok(1.0);
    }
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count {
        let h = alg.sample_element(rng, sets.k_radius);
        let g1 = alg.sample_element(rng, 1.0);
        let g2 = alg.sample_element(rng, 1.0);
        let base = left_distance(&g1, &g2, alg)?;
        if base > 1e-9 {
            let moved = left_distance(&g1.conjugate_by(&h), &g2.conjugate_by(&h), alg)?;
            worst = worst.max(moved / base);
        }
        let r1 = alg.magnitude(&g1)?;
        if r1 > 1e-9 {
            worst = worst.max(alg.magnitude(&g1.conjugate_by(&h))? / r1);
        }
    }
    Ok(worst)
}

/// Outcome of checking estimated constants on an independent sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BchRevalidation {
    pub sample_count: usize,
    pub seed: u64,
    /// Violations of the gap, product and conjugation inequalities.
    pub violations: [usize; 3],
    pub lipschitz_violations: usize,
    /// Largest `d(h g h⁻¹, e)` over `h` in the ambient compact set and `g` in
    /// `B_{1/c_l}(e)`; must stay below 1.
    pub max_conjugate_radius: f64,
    /// Largest `d(g w, e)` over `g` in `B_{1/c_d}(e)` and `w` in `W`; must stay
    /// inside the ambient compact ball.
    pub max_translate_radius: f64,
}

impl BchRevalidation {
    pub fn passed(&self, sets: AmbientSets) -> bool {
        self.violations == [0, 0, 0]
            && self.lipschitz_violations == 0
            && self.max_conjugate_radius <= 1.0 + 1e-9
            && self.max_translate_radius <= sets.k_radius + 1e-9
    }
}

pub fn revalidate_bch_constants(
    alg: &NormedAlgebra,
    sets: AmbientSets,
    constants: &BchConstants,
    sample_count: usize,
    seed: u64,
) -> Result<BchRevalidation> {
    const SLACK: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = [0usize; 3];
    let mut lipschitz_violations = 0;
    for _ in 0..sample_count {
        let u = alg.sample_ball(&mut rng, 1.0);
        let v = alg.sample_ball(&mut rng, 1.0);
        let r = pair_ratios(alg, &u, &v)?;
        if r.gap > constants.c * r.gap_scale + SLACK {
            violations[0] += 1;
        }
        if r.prod > constants.c_prime * r.sum + SLACK {
            violations[1] += 1;
        }
        if r.conj > constants.c_dprime * r.conj_scale + SLACK {
            violations[2] += 1;
        }
        let step = alg.norm(&u.sub(&v));
        let dist = left_distance(&alg.exp(&u)?, &alg.exp(&v)?, alg)?;
        if dist < constants.d * step - SLACK || dist > constants.d_prime * step + SLACK {
            lipschitz_violations += 1;
        }
    }
    let mut max_conjugate_radius: f64 = 0.0;
    let mut max_translate_radius: f64 = 0.0;
    for _ in 0..sample_count {
        let h = alg.sample_element(&mut rng, sets.k_radius);
        let g = alg.sample_element(&mut rng, 1.0 / constants.c_l);
        max_conjugate_radius = max_conjugate_radius.max(alg.magnitude(&g.conjugate_by(&h))?);
        let g = alg.sample_element(&mut rng, 1.0 / constants.c_d);
        let w = alg.sample_element(&mut rng, sets.w_radius);
        max_translate_radius = max_translate_radius.max(alg.magnitude(&g.mul(&w))?);
    }
    Ok(BchRevalidation {
        sample_count,
        seed,
        violations,
        lipschitz_violations,
        max_conjugate_radius,
        max_translate_radius,
    })
}

impl BchConstants {
    /// Constants of a group whose identity component is trivial.
    pub fn trivial(sets: AmbientSets) -> Self {
        let empirical = EmpiricalMaxima {
            c: 0.0,
            c_prime: 1.0,
            c_dprime: 1.0,
            d: 1.0,
            d_prime: 1.0,
            c_l: 1.0,
            excluded_fraction: 0.0,
        };
        BchConstants {
            c: 0.0,
            c_prime: 1.0,
            c_dprime: 1.0,
            d: 1.0,
            d_prime: 1.0,
            c_l: 1.0,
            c_d: 1.0 / (sets.k_radius - sets.w_radius),
            sample_count: 0,
            safety_factor: 1.0,
            seed: 0,
            empirical,
        }
    }
}
