use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RectifyError, Result};
use crate::holomorphic::{
    build_complexified_model, convergence_order, core_average_function, cr_residual,
    real_restriction_check, ComplexModel, Lattice, ModelSizes, Point, SampledFunction,
};

const EXACT_TOL: f64 = 1e-13;
const MIN_ORDER: f64 = 1.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoloBenchConfig {
    pub name: String,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_eta")]
    pub eta_max: f64,
    #[serde(default)]
    pub sizes: ModelSizes,
    /// `[[Re z₁, Im z₁], [Re z₂, Im z₂]]`.
    #[serde(default = "default_center")]
    pub lattice_center: [[f64; 2]; 2],
    #[serde(default = "default_points")]
    pub points_per_axis: usize,
    #[serde(default = "default_steps")]
    pub cr_steps: Vec<f64>,
    /// Total degree of the random polynomial used for the real-slice check.
    #[serde(default = "default_degree")]
    pub trig_degree: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_radius() -> f64 {
    1.0
}
fn default_eta() -> f64 {
    0.2
}
fn default_center() -> [[f64; 2]; 2] {
    [[0.2, 0.1], [-0.1, 0.05]]
}
fn default_points() -> usize {
    3
}
fn default_steps() -> Vec<f64> {
    vec![1e-2, 5e-3, 2.5e-3]
}
fn default_degree() -> usize {
    6
}

impl HoloBenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| RectifyError::Config(format!("bench config parse: {e}")))
    }

    fn center(&self) -> Point {
        let c = self.lattice_center;
        [
            Complex64::new(c[0][0], c[0][1]),
            Complex64::new(c[1][0], c[1][1]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoloReport {
    pub name: String,
    pub objects: usize,
    pub arrows: usize,
    pub core_arrows: usize,
    pub excluded_pairs: usize,
    pub no_escape_violations: usize,
    /// `max |avg f − f|` for the rotation-invariant `z₁² + z₂²`.
    pub invariant_error: f64,
    /// `max |avg f|` over the weight-one inputs.
    pub weight_one_max: f64,
    pub cr_steps: Vec<f64>,
    pub cr_residuals: Vec<f64>,
    pub cr_order: f64,
    pub anti_holomorphic_residual: f64,
    pub projection_error: f64,
    pub invariance_error: f64,
    pub real_restriction: f64,
    /// Distance of the real Haar average from the exact mode-zero oracle.
    pub real_restriction_oracle: f64,
    pub pass: bool,
}

type Func<'a> = &'a dyn Fn(&Point) -> Complex64;

/// `Σ c_{jk} wʲ w̄′ᵏ` with `w = z₁ + iz₂`, `w̄′ = z₁ − iz₂` and `c_{kj} = conj(c_{jk})`,
/// so the polynomial is holomorphic and real on the real slice.
struct HermitianPolynomial {
    coeffs: Vec<(usize, usize, Complex64)>,
}

impl HermitianPolynomial {
    fn random(degree: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = Vec::new();
        for j in 0..=degree {
            for k in j..=degree - j {
                if j == k {
                    coeffs.push((j, j, Complex64::new(rng.random_range(-1.0..1.0), 0.0)));
                } else {
                    let c =
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    coeffs.push((j, k, c));
                    coeffs.push((k, j, c.conj()));
                }
            }
        }
        HermitianPolynomial { coeffs }
    }

    fn eval(&self, z: &Point) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let (w, wb) = (z[0] + i * z[1], z[0] - i * z[1]);
        self.coeffs
            .iter()
            .map(|&(j, k, c)| c * w.powu(j as u32) * wb.powu(k as u32))
            .sum()
    }

    /// Exact rotation average at a real point: only `j = k` terms survive and
    /// `w w̄′ = |x|²` there.
    fn exact_average(&self, x: [f64; 2]) -> Complex64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        self.coeffs
            .iter()
            .filter(|(j, k, _)| j == k)
            .map(|&(j, _, c)| c * r2.powi(j as i32))
            .sum()
    }
}

fn max_over_objects(model: &ComplexModel, f: impl Fn(&Point) -> f64) -> f64 {
    model
        .objects()
        .iter()
        .map(|o| f(&o.coords))
        .fold(0.0, f64::max)
}

pub fn run_holo_bench(cfg: &HoloBenchConfig) -> Result<HoloReport> {
    if cfg.cr_steps.len() < 2 {
        return Err(RectifyError::Config(
            "need at least two CR step sizes".into(),
        ));
    }
    if cfg.trig_degree >= cfg.sizes.angle_nodes {
        return Err(RectifyError::Config(format!(
            "trig degree {} must stay below the {} angle nodes",
            cfg.trig_degree, cfg.sizes.angle_nodes
        )));
    }
    let model = build_complexified_model(cfg.radius, cfg.eta_max, cfg.sizes)?;
    let i = Complex64::new(0.0, 1.0);
    let center = cfg.center();
    let h0 = cfg.cr_steps[0];
    let lattice = Lattice::new(center, [h0, h0], cfg.points_per_axis.max(3))?;

    let invariant = |z: &Point| z[0] * z[0] + z[1] * z[1];
    let avg = core_average_function(&invariant, lattice, &model)?;
    let invariant_error = avg.max_abs_diff(&SampledFunction::sample(lattice, invariant)?);

    let w1 = |z: &Point| z[0] + i * z[1];
    let w3 = |z: &Point| (z[0] + i * z[1]).powu(2) * (z[0] - i * z[1]);
    let mut weight_one_max: f64 = 0.0;
    for f in [&w1 as Func, &w3] {
        let avg = core_average_function(f, lattice, &model)?;
        weight_one_max =
            weight_one_max.max(avg.values().iter().map(|v| v.norm()).fold(0.0, f64::max));
    }

    // Invariant part has nonzero third derivative, so the truncation error
    // of the centred differences is visible above rounding.
    let holo = |z: &Point| z[0].exp() * z[1] + (z[0] * z[0] + z[1] * z[1]).powu(2);
    let mut cr_residuals = Vec::with_capacity(cfg.cr_steps.len());
    for &h in &cfg.cr_steps {
        let lat = Lattice::new(center, [h, h], cfg.points_per_axis.max(3))?;
        cr_residuals.push(cr_residual(&core_average_function(&holo, lat, &model)?)?);
    }
    let cr_order = convergence_order(&cfg.cr_steps, &cr_residuals);
    let anti_holomorphic_residual =
        cr_residual(&SampledFunction::sample(lattice, |z| z[0].conj())?)?;

    let once = |p: &Point| model.average_at(&holo, p);
    let projection_error =
        max_over_objects(&model, |p| (model.average_at(&once, p) - once(p)).norm());
    let invariance_error = model
        .core_arrows()
        .iter()
        .map(|&a| {
            let arrow = model.arrows()[a];
            let (s, t) = (
                &model.objects()[arrow.source].coords,
                &model.objects()[arrow.target].coords,
            );
            (once(s) - once(t)).norm()
        })
        .fold(0.0, f64::max);

    let poly = HermitianPolynomial::random(cfg.trig_degree, cfg.seed);
    let f = |z: &Point| poly.eval(z);
    let real_restriction = real_restriction_check(&f, &model);
    let slice = model.real_slice();
    let g = slice.core.groupoid();
    let real_restriction_oracle = (0..g.object_count())
        .map(|x| {
            let real = |y: usize| {
                [
                    Complex64::new(slice.points[y][0], 0.0),
                    Complex64::new(slice.points[y][1], 0.0),
                ]
            };
            let v: Complex64 = slice
                .density
                .integrate_fiber(&slice.core, x, |k| f(&real(g.target(k))));
            (v - poly.exact_average(slice.points[x])).norm()
        })
        .fold(0.0, f64::max);

    let no_escape_violations = model.no_escape_violations();
    let pass = no_escape_violations == 0
        && invariant_error <= EXACT_TOL
        && weight_one_max <= EXACT_TOL
        && cr_order >= MIN_ORDER
        && real_restriction <= EXACT_TOL
        && projection_error <= EXACT_TOL
        && invariance_error <= EXACT_TOL;
    Ok(HoloReport {
        name: cfg.name.clone(),
        objects: model.objects().len(),
        arrows: model.arrows().len(),
        core_arrows: model.core_arrows().len(),
        excluded_pairs: model.excluded_pairs(),
        no_escape_violations,
        invariant_error,
        weight_one_max,
        cr_steps: cfg.cr_steps.clone(),
        cr_residuals,
        cr_order,
        anti_holomorphic_residual,
        projection_error,
        invariance_error,
        real_restriction,
        real_restriction_oracle,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> HoloBenchConfig {
        HoloBenchConfig::from_json(
            r#"{"name": "t", "sizes": {"angle_nodes": 16, "radial_nodes": 2, "eta_levels": 1}}"#,
        )
        .unwrap()
    }

    #[test]
    fn small_bench_passes() {
        let r = run_holo_bench(&small()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.excluded_pairs > 0);
        assert!((r.anti_holomorphic_residual - 1.0).abs() < 1e-12);
        assert!(
            r.real_restriction_oracle < 1e-12,
            "{}",
            r.real_restriction_oracle
        );
    }

    #[test]
    fn hermitian_polynomial_is_real_on_real_points() {
        let p = HermitianPolynomial::random(5, 3);
        let v = p.eval(&[Complex64::new(0.3, 0.0), Complex64::new(-0.4, 0.0)]);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn degree_must_stay_below_node_count() {
        let mut cfg = small();
        cfg.trig_degree = 16;
        assert!(run_holo_bench(&cfg).is_err());
    }
}
