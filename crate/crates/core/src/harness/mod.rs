//! Experiment orchestration: JSON configs, exact and perturbed morphisms,
//! end-to-end rectifier runs with persisted traces, and the holomorphic bench.

mod generate;
mod holo;
mod run;

use serde::{Deserialize, Serialize};

use crate::error::{RectifyError, Result};
use crate::group::{
    default_algebra, normalize_algebra_norm, AmbientSets, GroupId, NormedAlgebra, RawNorm,
};
use crate::groupoid::{
    build_action_groupoid, build_pair_groupoid, DensitySpec, FiniteGroupTable, FiniteGroupoid,
};
use crate::rectifier::IterationOptions;

pub use generate::{generate_exact_morphism, perturb_morphism, ExactMorphism, Homomorphism, Side};
pub use holo::{run_holo_bench, HoloBenchConfig, HoloReport};
pub use run::{
    config_digest, parse_trace_csv, persist_run, recheck_persisted, run_experiment, trace_csv,
    ErrorInfo, Instance, RunOutcome, RunReport, TraceRow, EXIT_DOMAIN, EXIT_NON_CONTRACTION,
    EXIT_OTHER, EXIT_PASS, EXIT_PRECONDITION, REPORT_FILE, TRACE_FILE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    /// `u1`, `so2`, `so3`, `su2` or `z<n>`.
    pub tag: String,
    /// Raw norm to normalize; the group's default when absent.
    #[serde(default)]
    pub norm: Option<RawNorm>,
}

impl GroupSpec {
    pub fn id(&self) -> Result<GroupId> {
        GroupId::parse(&self.tag)
            .ok_or_else(|| RectifyError::Config(format!("unknown group tag {:?}", self.tag)))
    }

    pub fn algebra(&self) -> Result<NormedAlgebra> {
        let id = self.id()?;
        match self.norm {
            None => default_algebra(id),
            Some(raw) => normalize_algebra_norm(id, raw, 4096, 0x5eed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    /// `g·x = x + g mod points`; needs `points` to divide the group order.
    Translation,
    /// Every element fixes every point.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupoidSpec {
    Pair {
        points: usize,
    },
    /// `Z_order` acting on `points` points.
    Action {
        order: usize,
        points: usize,
        action: ActionKind,
    },
}

impl GroupoidSpec {
    pub fn build(&self) -> Result<FiniteGroupoid> {
        match *self {
            GroupoidSpec::Pair { points } => build_pair_groupoid(points),
            GroupoidSpec::Action {
                order,
                points,
                action,
            } => {
                if order == 0 || points == 0 {
                    return Err(RectifyError::Config(
                        "action groupoid needs a nonempty group and space".into(),
                    ));
                }
                let table = FiniteGroupTable::cyclic(order);
                match action {
                    ActionKind::Trivial => build_action_groupoid(&table, points, |_, x| x),
                    ActionKind::Translation => {
                        build_action_groupoid(&table, points, |g, x| (x + g) % points)
                    }
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            GroupoidSpec::Pair { points } => format!("pair{points}"),
            GroupoidSpec::Action {
                order,
                points,
                action: ActionKind::Trivial,
            } if points == 1 => {
                format!("z{order}pt")
            }
            GroupoidSpec::Action {
                order,
                points,
                action,
            } => {
                let tag = if action == ActionKind::Trivial {
                    "fix"
                } else {
                    "z"
                };
                format!("z{order}{tag}{points}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreSpec {
    Full,
    /// Only the unit arrows.
    Units,
    Subset(Vec<usize>),
}

impl CoreSpec {
    pub fn select(&self, g: &FiniteGroupoid) -> Vec<usize> {
        match self {
            CoreSpec::Full => (0..g.arrow_count()).collect(),
            CoreSpec::Units => (0..g.object_count()).map(|x| g.unit(x)).collect(),
            CoreSpec::Subset(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSpec {
    pub seed: u64,
    /// Radius of the ball the coboundary factors are drawn from.
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default)]
    pub homomorphism: Homomorphism,
}

fn default_spread() -> f64 {
    0.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default)]
    pub leave_units: bool,
    #[serde(default)]
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    #[serde(default = "default_samples")]
    pub sample_count: usize,
    #[serde(default = "default_safety")]
    pub safety_factor: f64,
    #[serde(default = "default_constants_seed")]
    pub seed: u64,
    #[serde(default = "default_w")]
    pub w_radius: f64,
    #[serde(default = "default_k")]
    pub k_radius: f64,
}

fn default_samples() -> usize {
    20_000
}
fn default_safety() -> f64 {
    1.25
}
fn default_constants_seed() -> u64 {
    0xb0c5
}
fn default_w() -> f64 {
    AmbientSets::default().w_radius
}
fn default_k() -> f64 {
    AmbientSets::default().k_radius
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        ConstantsSpec {
            sample_count: default_samples(),
            safety_factor: default_safety(),
            seed: default_constants_seed(),
            w_radius: default_w(),
            k_radius: default_k(),
        }
    }
}

impl ConstantsSpec {
    pub fn sets(&self) -> Result<AmbientSets> {
        AmbientSets::new(self.w_radius, self.k_radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub group: GroupSpec,
    pub groupoid: GroupoidSpec,
    #[serde(default = "default_core")]
    pub core: CoreSpec,
    #[serde(default = "default_density")]
    pub density: DensitySpec,
    pub exact: ExactSpec,
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub constants: ConstantsSpec,
    #[serde(default)]
    pub iteration: IterationOptions,
    /// Output directory, overridden by the command line.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_core() -> CoreSpec {
    CoreSpec::Full
}
fn default_density() -> DensitySpec {
    DensitySpec::Uniform
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| RectifyError::Config(format!("config parse: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Field-level checks that need no construction work.
    pub fn check(&self) -> Result<()> {
        let p = &self.perturbation;
        if !(p.epsilon >= 0.0) || !p.epsilon.is_finite() {
            return Err(RectifyError::Config(format!(
                "epsilon {} must be a nonnegative number",
                p.epsilon
            )));
        }
        if !(self.exact.spread >= 0.0) {
            return Err(RectifyError::Config(format!(
                "spread {} must be nonnegative",
                self.exact.spread
            )));
        }
        if !(self.iteration.tol > 0.0) {
            return Err(RectifyError::Config(format!(
                "tol {} must be positive",
                self.iteration.tol
            )));
        }
        self.constants.sets()?;
        self.group.id()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"name": "t", "group": {"tag": "so3"}, "groupoid": {"kind": "pair", "points": 3},
                "exact": {"seed": 1}, "perturbation": {"epsilon": 0.01, "seed": 2}}"#,
        )
        .unwrap();
        assert_eq!(cfg.core, CoreSpec::Full);
        assert_eq!(cfg.constants, ConstantsSpec::default());
        assert_eq!(cfg.iteration, IterationOptions::default());
        assert_eq!(cfg.exact.spread, 0.6);
        assert_eq!(cfg.perturbation.side, Side::Right);
    }

    #[test]
    fn bad_fields_rejected() {
        let base = r#""group": {"tag": "so3"}, "groupoid": {"kind": "pair", "points": 3}, "exact": {"seed": 1}"#;
        for extra in [
            r#""perturbation": {"epsilon": -1, "seed": 2}"#,
            r#""perturbation": {"epsilon": 0.1, "seed": 2}, "constants": {"w_radius": 0.5}"#,
            r#""perturbation": {"epsilon": 0.1, "seed": 2}, "bogus": 1"#,
        ] {
            let text = format!("{{\"name\": \"t\", {base}, {extra}}}");
            assert!(ExperimentConfig::from_json(&text).is_err(), "{extra}");
        }
    }

    #[test]
    fn groupoid_specs_build() {
        let g = GroupoidSpec::Action {
            order: 4,
            points: 2,
            action: ActionKind::Translation,
        }
        .build()
        .unwrap();
        assert_eq!((g.object_count(), g.arrow_count()), (2, 8));
        let bad = GroupoidSpec::Action {
            order: 3,
            points: 2,
            action: ActionKind::Translation,
        };
        assert!(bad.build().is_err());
        assert_eq!(
            GroupoidSpec::Action {
                order: 2,
                points: 1,
                action: ActionKind::Trivial
            }
            .label(),
            "z2pt"
        );
    }
}
