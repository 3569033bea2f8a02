//! Complexified rotation action of SO(2) on `C²` with its compact core of
//! real rotations, averaging over that core, and numerical Cauchy–Riemann
//! checks.
//!
//! Objects are the points `R(iη_l)·x` for `x` on a real polar grid in the disk
//! of radius `r` and `η_l = l·δ`, `|l| ≤ L`, that stay inside the Hermitian
//! ball `|z| < r`. An arrow `(j, m, z)` is the complex angle `ζ = θ_j + iη_m`
//! applied at `z`. Two arrows multiply only if the summed imaginary part stays
//! below `η_max`, so the multiplication domain is genuinely partial.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{RectifyError, Result};
use crate::group::{haar_nodes, GroupId, HaarRule};
use crate::groupoid::{
    attach_haar_density, build_action_groupoid, build_core, Arrow, ArrowLabel, Core, DensitySpec,
    FiniteGroupTable, FiniteGroupoid, HaarDensity,
};

pub type Point = [Complex64; 2];

const GEOMETRY_TOL: f64 = 1e-12;
/// Largest arrow count accepted by `to_finite_groupoid`.
const MAX_EXPLICIT_ARROWS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSizes {
    /// Real rotation angles `2πj/N`; also the trapezoid node count.
    pub angle_nodes: usize,
    pub radial_nodes: usize,
    /// Imaginary angle levels run over `-L..=L`.
    pub eta_levels: usize,
}

impl Default for ModelSizes {
    fn default() -> Self {
        ModelSizes {
            angle_nodes: 64,
            radial_nodes: 2,
            eta_levels: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexObject {
    pub ring: usize,
    pub angle: usize,
    pub level: i32,
    pub coords: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexArrow {
    pub rotation: usize,
    pub shift: i32,
    pub source: usize,
    pub target: usize,
}

/// The action groupoid of the real rotations on the real polar grid, with
/// its full core and uniform Haar density.
#[derive(Debug, Clone)]
pub struct RealSlice {
    pub core: Core,
    pub density: HaarDensity,
    /// Indexed like the real objects: `ring·N + angle`.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct ComplexModel {
    radius: f64,
    eta_max: f64,
    eta_step: f64,
    sizes: ModelSizes,
    objects: Vec<ComplexObject>,
    object_index: HashMap<(usize, usize, i32), usize>,
    arrows: Vec<ComplexArrow>,
    arrow_index: HashMap<(usize, i32, usize), usize>,
    by_source: Vec<Vec<usize>>,
    by_target: Vec<Vec<usize>>,
    rotations: Vec<[[f64; 2]; 2]>,
    real_slice: RealSlice,
}

/// `R(ζ)` for a complex angle.
pub fn complex_rotation(zeta: Complex64) -> [[Complex64; 2]; 2] {
    let (c, s) = (zeta.cos(), zeta.sin());
    [[c, -s], [s, c]]
}

fn apply(m: &[[Complex64; 2]; 2], z: &Point) -> Point {
    [
        m[0][0] * z[0] + m[0][1] * z[1],
        m[1][0] * z[0] + m[1][1] * z[1],
    ]
}

fn apply_real(m: &[[f64; 2]; 2], z: &Point) -> Point {
    [
        z[0] * m[0][0] + z[1] * m[0][1],
        z[0] * m[1][0] + z[1] * m[1][1],
    ]
}

pub fn hermitian_norm(z: &Point) -> f64 {
    (z[0].norm_sqr() + z[1].norm_sqr()).sqrt()
}

fn point_distance(a: &Point, b: &Point) -> f64 {
    hermitian_norm(&[a[0] - b[0], a[1] - b[1]])
}

/// Build the model and verify its geometry and its real slice.
pub fn build_complexified_model(
    radius: f64,
    eta_max: f64,
    sizes: ModelSizes,
) -> Result<ComplexModel> {
    if !(radius > 0.0) || !(eta_max > 0.0) {
        return Err(RectifyError::Config(format!(
            "need r > 0 and η_max > 0, got r={radius}, η_max={eta_max}"
        )));
    }
    if sizes.angle_nodes == 0 || sizes.radial_nodes == 0 {
        return Err(RectifyError::Config(
            "angle_nodes and radial_nodes must be positive".into(),
        ));
    }
    let n = sizes.angle_nodes;
    let levels = sizes.eta_levels as i32;
    // L·δ < η_max ≤ 2L·δ: single shifts are arrows, some sums are not.
    let eta_step = eta_max / (levels as f64 + 0.5);
    let angle = |j: usize| 2.0 * PI * j as f64 / n as f64;
    // The outer ring sits close to the boundary so that some complex
    // levels leave the ball there.
    let ring_radius = |i: usize| 0.99 * radius * (i + 1) as f64 / sizes.radial_nodes as f64;

    let mut objects = Vec::new();
    let mut object_index = HashMap::new();
    for l in -levels..=levels {
        let lift = complex_rotation(Complex64::new(0.0, l as f64 * eta_step));
        for i in 0..sizes.radial_nodes {
            for j in 0..n {
                let x = [
                    Complex64::new(ring_radius(i) * angle(j).cos(), 0.0),
                    Complex64::new(ring_radius(i) * angle(j).sin(), 0.0),
                ];
                let coords = apply(&lift, &x);
                if hermitian_norm(&coords) < radius {
                    object_index.insert((i, j, l), objects.len());
                    objects.push(ComplexObject {
                        ring: i,
                        angle: j,
                        level: l,
                        coords,
                    });
                }
            }
        }
    }

    let mut arrows = Vec::new();
    let mut arrow_index = HashMap::new();
    for (src, o) in objects.iter().enumerate() {
        for rot in 0..n {
            for m in -levels..=levels {
                let Some(&tgt) = object_index.get(&(o.ring, (o.angle + rot) % n, o.level + m))
                else {
                    continue;
                };
                let moved = apply(
                    &complex_rotation(Complex64::new(angle(rot), m as f64 * eta_step)),
                    &o.coords,
                );
                let miss = point_distance(&moved, &objects[tgt].coords);
                if miss > GEOMETRY_TOL * radius.max(1.0) {
                    return Err(RectifyError::GridError(format!(
                        "arrow ({rot}, {m}) at object {src} lands {miss:.3e} away from its grid target"
                    )));
                }
                arrow_index.insert((rot, m, src), arrows.len());
                arrows.push(ComplexArrow {
                    rotation: rot,
                    shift: m,
                    source: src,
                    target: tgt,
                });
            }
        }
    }
    let mut by_source = vec![Vec::new(); objects.len()];
    let mut by_target = vec![Vec::new(); objects.len()];
    for (a, arrow) in arrows.iter().enumerate() {
        by_source[arrow.source].push(a);
        by_target[arrow.target].push(a);
    }

    let rotations = haar_nodes(GroupId::SO2, HaarRule::Trapezoid { nodes: n })?
        .iter()
        .map(|(g, _)| {
            let m = g.matrix();
            [[m[(0, 0)].re, m[(0, 1)].re], [m[(1, 0)].re, m[(1, 1)].re]]
        })
        .collect();

    let real_slice = build_real_slice(n, sizes.radial_nodes, ring_radius)?;
    let model = ComplexModel {
        radius,
        eta_max,
        eta_step,
        sizes,
        objects,
        object_index,
        arrows,
        arrow_index,
        by_source,
        by_target,
        rotations,
        real_slice,
    };
    model.check_real_slice()?;
    Ok(model)
}

/// `Z_N` acting on the real polar grid, with the action found by locating
/// each rotated point among the grid nodes.
fn build_real_slice(
    n: usize,
    rings: usize,
    ring_radius: impl Fn(usize) -> f64,
) -> Result<RealSlice> {
    let points: Vec<[f64; 2]> = (0..rings)
        .flat_map(|i| {
            let rho = ring_radius(i);
            (0..n).map(move |j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                [rho * t.cos(), rho * t.sin()]
            })
        })
        .collect();
    let mut table = vec![usize::MAX; n * points.len()];
    for g in 0..n {
        let t = 2.0 * PI * g as f64 / n as f64;
        let (c, s) = (t.cos(), t.sin());
        for (x, p) in points.iter().enumerate() {
            let y = [c * p[0] - s * p[1], s * p[0] + c * p[1]];
            let hit = points
                .iter()
                .position(|q| (q[0] - y[0]).hypot(q[1] - y[1]) <= GEOMETRY_TOL * rho_scale(p))
                .ok_or_else(|| {
                    RectifyError::GridError(format!("rotation {g} moves node {x} off the grid"))
                })?;
            table[g * points.len() + x] = hit;
        }
    }
    let size = points.len();
    let groupoid = Arc::new(build_action_groupoid(
        &FiniteGroupTable::cyclic(n),
        size,
        |g, x| table[g * size + x],
    )?);
    let all: Vec<usize> = (0..groupoid.arrow_count()).collect();
    let core = build_core(groupoid, &all)?;
    let density = attach_haar_density(&core, &DensitySpec::Uniform)?;
    Ok(RealSlice {
        core,
        density,
        points,
    })
}

fn rho_scale(p: &[f64; 2]) -> f64 {
    p[0].hypot(p[1]).max(1.0)
}

impl ComplexModel {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eta_max(&self) -> f64 {
        self.eta_max
    }

    /// Spacing `δ` of the imaginary angle levels.
    pub fn eta_step(&self) -> f64 {
        self.eta_step
    }

    pub fn sizes(&self) -> ModelSizes {
        self.sizes
    }

    pub fn objects(&self) -> &[ComplexObject] {
        &self.objects
    }

    pub fn arrows(&self) -> &[ComplexArrow] {
        &self.arrows
    }

    pub fn real_slice(&self) -> &RealSlice {
        &self.real_slice
    }

    pub fn object_at(&self, ring: usize, angle: usize, level: i32) -> Option<usize> {
        self.object_index.get(&(ring, angle, level)).copied()
    }

    pub fn arrow_at(&self, rotation: usize, shift: i32, source: usize) -> Option<usize> {
        self.arrow_index.get(&(rotation, shift, source)).copied()
    }

    /// Complex angle `ζ = θ_j + iη_m` of an arrow.
    pub fn complex_angle(&self, a: usize) -> Complex64 {
        let arrow = &self.arrows[a];
        let n = self.sizes.angle_nodes as f64;
        Complex64::new(
            2.0 * PI * arrow.rotation as f64 / n,
            arrow.shift as f64 * self.eta_step,
        )
    }

    /// Core arrows are the real rotations.
    pub fn is_core(&self, a: usize) -> bool {
        self.arrows[a].shift == 0
    }

    pub fn core_arrows(&self) -> Vec<usize> {
        (0..self.arrows.len())
            .filter(|&a| self.is_core(a))
            .collect()
    }

    /// Whether `q·p` is in the multiplication domain.
    pub fn in_domain(&self, q: usize, p: usize) -> bool {
        let (q, p) = (&self.arrows[q], &self.arrows[p]);
        q.source == p.target && (q.shift + p.shift).unsigned_abs() as usize <= self.sizes.eta_levels
    }

    pub fn compose(&self, q: usize, p: usize) -> Option<usize> {
        if !self.in_domain(q, p) {
            return None;
        }
        let (qa, pa) = (&self.arrows[q], &self.arrows[p]);
        let rotation = (qa.rotation + pa.rotation) % self.sizes.angle_nodes;
        self.arrow_at(rotation, qa.shift + pa.shift, pa.source)
    }

    /// Composable pairs `(q, p)` left out of the multiplication domain.
    pub fn excluded_pairs(&self) -> usize {
        (0..self.arrows.len())
            .map(|p| {
                self.by_source[self.arrows[p].target]
                    .iter()
                    .filter(|&&q| !self.in_domain(q, p))
                    .count()
            })
            .sum()
    }

    /// Exhaustive no-escape check: every composable `(k, p)` with `k` a core
    /// arrow is in the domain and its product is an arrow. Returns the
    /// number of failures.
    pub fn no_escape_violations(&self) -> usize {
        let mut bad = 0;
        for k in self.core_arrows() {
            for &p in &self.by_target[self.arrows[k].source] {
                if self.compose(k, p).is_none() {
                    bad += 1;
                }
            }
        }
        bad
    }

    /// The real slice of the model read as a groupoid on its own: objects at
    /// level 0 and real arrows between them, compared arrow by arrow with the
    /// action groupoid built independently from point geometry.
    pub fn check_real_slice(&self) -> Result<()> {
        let n = self.sizes.angle_nodes;
        let g = self.real_slice.core.groupoid();
        let fail = |msg: String| {
            Err(RectifyError::GridError(format!(
                "real slice mismatch: {msg}"
            )))
        };
        let real_object = |o: usize| {
            let obj = &self.objects[o];
            (obj.level == 0).then_some(obj.ring * n + obj.angle)
        };
        let mut seen = 0;
        for (a, arrow) in self.arrows.iter().enumerate() {
            if arrow.shift != 0 {
                continue;
            }
            let Some(x) = real_object(arrow.source) else {
                continue;
            };
            seen += 1;
            let idx = arrow.rotation * g.object_count() + x;
            let real = g.arrow(idx);
            if real_object(arrow.target) != Some(real.target) {
                return fail(format!("arrow {a} targets differ"));
            }
            let z = self.objects[arrow.source].coords;
            let p = self.real_slice.points[x];
            if (z[0].re - p[0]).abs() + (z[1].re - p[1]).abs() + z[0].im.abs() + z[1].im.abs()
                > GEOMETRY_TOL
            {
                return fail(format!("object {} is not the real point {x}", arrow.source));
            }
            for rot in 0..n {
                let q = self
                    .arrow_at(rot, 0, arrow.target)
                    .expect("real rotations of real points exist");
                let mine = self
                    .compose(q, a)
                    .and_then(|c| real_object(self.arrows[c].source).map(|s| (c, s)));
                let theirs = g.compose(rot * g.object_count() + real.target, idx);
                match (mine, theirs) {
                    (Some((c, s)), Some(t)) => {
                        let expect = self.arrows[c].rotation * g.object_count() + s;
                        if expect != t {
                            return fail(format!("product of {q} and {a}"));
                        }
                    }
                    _ => return fail(format!("product of {q} and {a} defined on one side only")),
                }
            }
        }
        if seen != g.arrow_count() {
            return fail(format!("{seen} real arrows against {}", g.arrow_count()));
        }
        Ok(())
    }

    /// Materialize the model as an explicit finite groupoid, for small sizes.
    pub fn to_finite_groupoid(&self) -> Result<FiniteGroupoid> {
        if self.arrows.len() > MAX_EXPLICIT_ARROWS {
            return Err(RectifyError::Config(format!(
                "{} arrows exceed the explicit limit {MAX_EXPLICIT_ARROWS}",
                self.arrows.len()
            )));
        }
        let n = self.sizes.angle_nodes;
        let arrows = self
            .arrows
            .iter()
            .map(|a| Arrow {
                source: a.source,
                target: a.target,
                label: ArrowLabel::Generic,
            })
            .collect();
        let units = (0..self.objects.len())
            .map(|o| self.arrow_at(0, 0, o).expect("unit arrow"))
            .collect();
        let inverse = self
            .arrows
            .iter()
            .map(|a| self.arrow_at((n - a.rotation) % n, -a.shift, a.target))
            .collect();
        let mut compose = HashMap::new();
        for p in 0..self.arrows.len() {
            for &q in &self.by_source[self.arrows[p].target] {
                if let Some(c) = self.compose(q, p) {
                    compose.insert((q, p), c);
                }
            }
        }
        Ok(FiniteGroupoid::from_parts(
            self.objects.len(),
            arrows,
            units,
            inverse,
            compose,
        ))
    }

    /// `∫_G f(k·p) dμ_G(k)` by the trapezoid rule on the `N` real angles.
    pub fn average_at(&self, f: &dyn Fn(&Point) -> Complex64, p: &Point) -> Complex64 {
        let w = 1.0 / self.rotations.len() as f64;
        self.rotations
            .iter()
            .map(|r| f(&apply_real(r, p)))
            .sum::<Complex64>()
            * w
    }
}

/// A product lattice in `(Re z₁, Im z₁, Re z₂, Im z₂)`, symmetric about its
/// centre, with `points_per_axis` nodes along each real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub center: [[f64; 2]; 2],
    /// Spacing in each complex coordinate.
    pub spacing: [f64; 2],
    pub points_per_axis: usize,
}

impl Lattice {
    pub fn new(center: Point, spacing: [f64; 2], points_per_axis: usize) -> Result<Self> {
        if spacing.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(RectifyError::GridError(format!(
                "spacings must be positive, got {spacing:?}"
            )));
        }
        if points_per_axis == 0 {
            return Err(RectifyError::GridError("empty lattice".into()));
        }
        Ok(Lattice {
            center: [[center[0].re, center[0].im], [center[1].re, center[1].im]],
            spacing,
            points_per_axis,
        })
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(4)
    }

    /// Index of the node with per-axis offsets `i`, each in `0..points_per_axis`.
    pub fn index(&self, i: [usize; 4]) -> usize {
        let n = self.points_per_axis;
        ((i[0] * n + i[1]) * n + i[2]) * n + i[3]
    }

    fn offsets(&self, idx: usize) -> [usize; 4] {
        let n = self.points_per_axis;
        [
            idx / (n * n * n),
            (idx / (n * n)) % n,
            (idx / n) % n,
            idx % n,
        ]
    }

    pub fn coords(&self, idx: usize) -> Point {
        let i = self.offsets(idx);
        let half = (self.points_per_axis as f64 - 1.0) / 2.0;
        let at = |axis: usize, c: f64, h: f64| c + (i[axis] as f64 - half) * h;
        [
            Complex64::new(
                at(0, self.center[0][0], self.spacing[0]),
                at(1, self.center[0][1], self.spacing[0]),
            ),
            Complex64::new(
                at(2, self.center[1][0], self.spacing[1]),
                at(3, self.center[1][1], self.spacing[1]),
            ),
        ]
    }

    fn max_norm(&self) -> f64 {
        // The norm is convex, so the maximum over the box is at a corner.
        let last = self.points_per_axis - 1;
        (0..16)
            .map(|bits: usize| {
                let i = [0, 1, 2, 3].map(|b| if bits >> b & 1 == 1 { last } else { 0 });
                hermitian_norm(&self.coords(self.index(i)))
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    lattice: Lattice,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn sample(lattice: Lattice, f: impl Fn(&Point) -> Complex64) -> Result<Self> {
        let values: Vec<Complex64> = (0..lattice.node_count())
            .map(|i| f(&lattice.coords(i)))
            .collect();
        if let Some(i) = values
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(RectifyError::GridError(format!(
                "non-finite sample at node {i}"
            )));
        }
        Ok(SampledFunction { lattice, values })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, i: [usize; 4]) -> Complex64 {
        self.values[self.lattice.index(i)]
    }

    pub fn max_abs_diff(&self, other: &SampledFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Sample the core average `F(p) = ∫_G f(k·p) dμ_G(k)` on a lattice inside
/// the model's ball.
pub fn core_average_function(
    f: &dyn Fn(&Point) -> Complex64,
    lattice: Lattice,
    model: &ComplexModel,
) -> Result<SampledFunction> {
    let reach = lattice.max_norm();
    if reach >= model.radius() {
        return Err(RectifyError::GridError(format!(
            "lattice reaches |z| = {reach:.4} outside the ball of radius {}",
            model.radius()
        )));
    }
    SampledFunction::sample(lattice, |p| model.average_at(f, p))
}

/// Max over interior nodes and both coordinates of the centred-difference
/// estimate of `|∂F/∂z̄ⱼ| = ½|∂F/∂xⱼ + i ∂F/∂yⱼ|`.
pub fn cr_residual(values: &SampledFunction) -> Result<f64> {
    let lat = values.lattice();
    let n = lat.points_per_axis;
    if n < 3 {
        return Err(RectifyError::GridError(format!(
            "{n} points per axis leave no interior node"
        )));
    }
    let i_unit = Complex64::new(0.0, 1.0);
    let mut worst = 0.0f64;
    for a in 1..n - 1 {
        for b in 1..n - 1 {
            for c in 1..n - 1 {
                for d in 1..n - 1 {
                    let i = [a, b, c, d];
                    for coord in 0..2 {
                        let h = lat.spacing[coord];
                        let diff = |axis: usize| {
                            let (mut up, mut down) = (i, i);
                            up[axis] += 1;
                            down[axis] -= 1;
                            (values.at(up) - values.at(down)) / (2.0 * h)
                        };
                        let dzbar = 0.5 * (diff(2 * coord) + i_unit * diff(2 * coord + 1));
                        worst = worst.max(dzbar.norm());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Least-squares slope of `log residual` against `log h`.
pub fn convergence_order(steps: &[f64], residuals: &[f64]) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Compare, at every real grid point, the complex core average of `f` with
/// the fiber integral of `f ∘ t` against the real slice's Haar density.
pub fn real_restriction_check(f: &dyn Fn(&Point) -> Complex64, model: &ComplexModel) -> f64 {
    let slice = model.real_slice();
    let g = slice.core.groupoid();
    let real = |x: usize| {
        let p = slice.points[x];
        [Complex64::new(p[0], 0.0), Complex64::new(p[1], 0.0)]
    };
    (0..g.object_count())
        .map(|x| {
            let complex_side = model.average_at(f, &real(x));
            let real_side: Complex64 = slice
                .density
                .integrate_fiber(&slice.core, x, |k| f(&real(g.target(k))));
            (complex_side - real_side).norm()
        })
        .fold(0.0, f64::max)
}
