//! Finite (local) groupoids: arrow storage, structure maps, a composability
//! domain, and exhaustive validation of the groupoid axioms.
//!
//! Arrow indices are stable and lexicographic in the constructor inputs:
//! `(g, x) ↦ g·|X| + x` for action groupoids and `(target, source) ↦
//! target·n + source` for pair groupoids.

mod core;
mod table;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use self::core::{attach_haar_density, build_core, Core, DensitySpec, HaarDensity};
use crate::error::{RectifyError, Result};
pub use table::FiniteGroupTable;

/// Where an arrow came from; used by the harness to build exact morphisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrowLabel {
    /// `(group element, point)` of an action groupoid.
    Action {
        element: usize,
        point: usize,
    },
    /// `(target, source)` of a pair groupoid.
    Pair {
        target: usize,
        source: usize,
    },
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arrow {
    pub source: usize,
    pub target: usize,
    pub label: ArrowLabel,
}

/// A finite groupoid whose multiplication is defined on a declared domain.
///
/// `compose` holds `(q, p) ↦ q·p` exactly for the pairs in the domain mask.
#[derive(Debug, Clone)]
pub struct FiniteGroupoid {
    object_count: usize,
    arrows: Vec<Arrow>,
    units: Vec<usize>,
    inverse: Vec<Option<usize>>,
    compose: HashMap<(usize, usize), usize>,
    by_source: Vec<Vec<usize>>,
    by_target: Vec<Vec<usize>>,
    action_group: Option<FiniteGroupTable>,
}

impl FiniteGroupoid {
    /// Assemble a groupoid from raw tables without checking any axiom; see
    /// `validate_groupoid`.
    pub fn from_parts(
        object_count: usize,
        arrows: Vec<Arrow>,
        units: Vec<usize>,
        inverse: Vec<Option<usize>>,
        compose: HashMap<(usize, usize), usize>,
    ) -> Self {
        let mut by_source = vec![Vec::new(); object_count];
        let mut by_target = vec![Vec::new(); object_count];
        for (i, a) in arrows.iter().enumerate() {
            by_source[a.source].push(i);
            by_target[a.target].push(i);
        }
        FiniteGroupoid {
            object_count,
            arrows,
            units,
            inverse,
            compose,
            by_source,
            by_target,
            action_group: None,
        }
    }

    pub fn object_count(&self) -> usize {
        self.object_count
    }

    pub fn arrow_count(&self) -> usize {
        self.arrows.len()
    }

    pub fn arrow(&self, a: usize) -> Arrow {
        self.arrows[a]
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn source(&self, a: usize) -> usize {
        self.arrows[a].source
    }

    pub fn target(&self, a: usize) -> usize {
        self.arrows[a].target
    }

    pub fn unit(&self, object: usize) -> usize {
        self.units[object]
    }

    pub fn inverse(&self, a: usize) -> Option<usize> {
        self.inverse[a]
    }

    /// `q·p` if `(q, p)` is in the domain mask.
    pub fn compose(&self, q: usize, p: usize) -> Option<usize> {
        self.compose.get(&(q, p)).copied()
    }

    pub fn in_domain(&self, q: usize, p: usize) -> bool {
        self.compose.contains_key(&(q, p))
    }

    /// Arrows with the given source, in index order.
    pub fn s_fiber(&self, object: usize) -> &[usize] {
        &self.by_source[object]
    }

    pub fn t_fiber(&self, object: usize) -> &[usize] {
        &self.by_target[object]
    }

    /// Number of pairs `(q, p)` with `s(q) = t(p)`.
    pub fn composable_pair_count(&self) -> usize {
        self.arrows
            .iter()
            .map(|p| self.by_source[p.target].len())
            .sum()
    }

    pub fn domain_size(&self) -> usize {
        self.compose.len()
    }

    /// The acting group, for action groupoids.
    pub fn action_group(&self) -> Option<&FiniteGroupTable> {
        self.action_group.as_ref()
    }

    pub fn orbit(&self, object: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.by_source[object]
            .iter()
            .map(|&a| self.target(a))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Arrows from `object` to itself.
    pub fn isotropy(&self, object: usize) -> Vec<usize> {
        self.by_source[object]
            .iter()
            .copied()
            .filter(|&a| self.target(a) == object)
            .collect()
    }

    /// Overwrite a product entry (inserting `(q, p)` into the domain).
    pub fn set_product(&mut self, q: usize, p: usize, product: usize) {
        self.compose.insert((q, p), product);
    }

    /// Drop `(q, p)` from the domain mask.
    pub fn remove_product(&mut self, q: usize, p: usize) -> Option<usize> {
        self.compose.remove(&(q, p))
    }

    /// Keep only the domain pairs accepted by `keep`.
    pub fn restrict_domain(&mut self, mut keep: impl FnMut(usize, usize) -> bool) {
        self.compose.retain(|&(q, p), _| keep(q, p));
    }
}

/// Build `Γ ⋉ X` for a finite group table acting on `{0, …, space_size-1}`.
///
/// Arrow `(g, x)` goes from `x` to `g·x`; `(h, g·x)·(g, x) = (hg, x)`.
pub fn build_action_groupoid(
    group: &FiniteGroupTable,
    space_size: usize,
    action: impl Fn(usize, usize) -> usize,
) -> Result<FiniteGroupoid> {
    if space_size == 0 {
        return Err(RectifyError::ActionError("empty space".into()));
    }
    let n = group.order();
    let mut table = vec![0usize; n * space_size];
    for g in 0..n {
        for x in 0..space_size {
            let y = action(g, x);
            if y >= space_size {
                return Err(RectifyError::ActionError(format!(
                    "g={g} sends x={x} to {y}, outside the space"
                )));
            }
            table[g * space_size + x] = y;
        }
    }
    let act = |g: usize, x: usize| table[g * space_size + x];
    for x in 0..space_size {
        if act(group.identity(), x) != x {
            return Err(RectifyError::ActionError(format!("identity moves x={x}")));
        }
        for g in 0..n {
            for h in 0..n {
                if act(group.mul(h, g), x) != act(h, act(g, x)) {
                    return Err(RectifyError::ActionError(format!(
                        "(h·g)·x != h·(g·x) for h={h}, g={g}, x={x}"
                    )));
                }
            }
        }
    }

    let index = |g: usize, x: usize| g * space_size + x;
    let mut arrows = Vec::with_capacity(n * space_size);
    let mut inverse = Vec::with_capacity(n * space_size);
    for g in 0..n {
        for x in 0..space_size {
            arrows.push(Arrow {
                source: x,
                target: act(g, x),
                label: ArrowLabel::Action {
                    element: g,
                    point: x,
                },
            });
            inverse.push(Some(index(group.inverse(g), act(g, x))));
        }
    }
    let mut compose = HashMap::with_capacity(n * n * space_size);
    for g in 0..n {
        for x in 0..space_size {
            for h in 0..n {
                compose.insert(
                    (index(h, act(g, x)), index(g, x)),
                    index(group.mul(h, g), x),
                );
            }
        }
    }
    let units = (0..space_size)
        .map(|x| index(group.identity(), x))
        .collect();
    let mut groupoid = FiniteGroupoid::from_parts(space_size, arrows, units, inverse, compose);
    groupoid.action_group = Some(group.clone());
    Ok(groupoid)
}

/// Pair groupoid `X × X`, one arrow between any two points.
pub fn build_pair_groupoid(space_size: usize) -> Result<FiniteGroupoid> {
    if space_size == 0 {
        return Err(RectifyError::Config(
            "pair groupoid needs at least one point".into(),
        ));
    }
    let n = space_size;
    let index = |k: usize, j: usize| k * n + j;
    let mut arrows = Vec::with_capacity(n * n);
    let mut inverse = Vec::with_capacity(n * n);
    for k in 0..n {
        for j in 0..n {
            arrows.push(Arrow {
                source: j,
                target: k,
                label: ArrowLabel::Pair {
                    target: k,
                    source: j,
                },
            });
            inverse.push(Some(index(j, k)));
        }
    }
    let mut compose = HashMap::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                compose.insert((index(k, j), index(j, i)), index(k, i));
            }
        }
    }
    let units = (0..n).map(|i| index(i, i)).collect();
    Ok(FiniteGroupoid::from_parts(
        n, arrows, units, inverse, compose,
    ))
}

/// One failed axiom instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: String,
    pub witness: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {:?}", self.axiom, self.witness)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub(crate) fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            passed: violations.is_empty(),
            violations,
        }
    }
}

/// Exhaustive check of the (local) groupoid axioms.
///
/// Every check is conditional on the products it mentions being in the
/// domain, except that units must multiply with every arrow.
pub fn validate_groupoid(g: &FiniteGroupoid) -> ValidationReport {
    let mut v = Vec::new();
    let mut push = |axiom: &str, witness: Vec<usize>| {
        v.push(Violation {
            axiom: axiom.into(),
            witness,
        })
    };
    let n = g.arrow_count();

    if g.units.len() != g.object_count || g.inverse.len() != n {
        push("structure", vec![g.units.len(), g.inverse.len()]);
        return ValidationReport::from_violations(v);
    }

    let mut entries: Vec<(&(usize, usize), &usize)> = g.compose.iter().collect();
    entries.sort_unstable();
    for (&(q, p), &qp) in entries {
        if q >= n || p >= n || qp >= n {
            push("closure", vec![q, p, qp]);
            continue;
        }
        if g.source(q) != g.target(p) {
            push("composability", vec![q, p]);
        }
        if g.source(qp) != g.source(p) {
            push("source", vec![q, p, qp]);
        }
        if g.target(qp) != g.target(q) {
            push("target", vec![q, p, qp]);
        }
    }

    for x in 0..g.object_count {
        let u = g.units[x];
        if u >= n || g.source(u) != x || g.target(u) != x {
            push("unit", vec![x, u]);
        }
    }
    for p in 0..n {
        let left = g.units[g.target(p)];
        let right = g.units[g.source(p)];
        if g.compose(left, p) != Some(p) {
            push("unit", vec![left, p]);
        }
        if g.compose(p, right) != Some(p) {
            push("unit", vec![p, right]);
        }
    }

    for p in 0..n {
        let Some(pi) = g.inverse[p] else { continue };
        if pi >= n || g.source(pi) != g.target(p) || g.target(pi) != g.source(p) {
            push("inverse", vec![p, pi]);
            continue;
        }
        if let Some(x) = g.compose(pi, p) {
            if x != g.units[g.source(p)] {
                push("inverse", vec![pi, p, x]);
            }
        }
        if let Some(x) = g.compose(p, pi) {
            if x != g.units[g.target(p)] {
                push("inverse", vec![p, pi, x]);
            }
        }
    }

    // (r, q), (q, p), (rq, p) defined ⇒ (r, qp) defined and equal.
    for p in 0..n {
        for &q in g.s_fiber(g.target(p)) {
            let Some(qp) = g.compose(q, p) else { continue };
            if qp >= n {
                continue;
            }
            for &r in g.s_fiber(g.target(q)) {
                let Some(rq) = g.compose(r, q) else { continue };
                let Some(rq_p) = g.compose(rq, p) else {
                    continue;
                };
                match g.compose(r, qp) {
                    Some(r_qp) if r_qp == rq_p => {}
                    _ => push("associativity", vec![r, q, p]),
                }
            }
        }
    }
    ValidationReport::from_violations(v)
}
