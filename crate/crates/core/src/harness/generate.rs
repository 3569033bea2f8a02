use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PerturbationSpec;
use crate::error::{RectifyError, Result};
use crate::group::{lie, AmbientSets, GroupElement, GroupId, NormedAlgebra};
use crate::groupoid::{ArrowLabel, FiniteGroupoid};
use crate::rectifier::AlmostMorphism;

/// Homomorphism `Z_n → H` used for action groupoids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Homomorphism {
    /// `k ↦ exp(2πk/n · e_z)`, falling back to `Trivial` when its range
    /// leaves `W`.
    #[default]
    Faithful,
    Trivial,
}

/// Side on which the perturbation multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Right,
    Left,
}

#[derive(Debug, Clone)]
pub struct ExactMorphism {
    pub phi: AlmostMorphism,
    pub homomorphism: Option<Homomorphism>,
    pub warnings: Vec<String>,
}

fn element(group: GroupId, coords: &[f64]) -> GroupElement {
    GroupElement::from_matrix_unchecked(group, lie::exp_coords(group, coords))
}

fn faithful(group: GroupId, order: usize, k: usize) -> Result<GroupElement> {
    let angle = 2.0 * std::f64::consts::PI * (k % order) as f64 / order as f64;
    match group {
        GroupId::U1 | GroupId::SO2 => Ok(element(group, &[angle])),
        GroupId::SO3 | GroupId::SU2 => Ok(element(group, &[0.0, 0.0, angle])),
        GroupId::Cyclic(m) if m as usize % order == 0 => {
            Ok(GroupElement::cyclic(m, (k * m as usize / order) as u32))
        }
        GroupId::Cyclic(_) => Err(RectifyError::Unsupported {
            group: group.to_string(),
            what: format!("faithful image of Z_{order}"),
        }),
    }
}

fn principal_radius(g: &GroupElement, alg: &NormedAlgebra) -> f64 {
    match g.group() {
        GroupId::Cyclic(_) => {
            if g.max_abs_diff(&GroupElement::identity(g.group())) <= crate::group::TAU_GROUP {
                0.0
            } else {
                f64::INFINITY
            }
        }
        group => {
            alg.coord_scale()
                * lie::log_coords(group, g.matrix())
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    .sqrt()
        }
    }
}

/// An exact morphism `H → G` built from the arrow labels.
///
/// Pair groupoids get the coboundary `φ(i, j) = g_i g_j⁻¹`; action groupoids
/// of `Z_n` get `φ(γ, x) = f(γx) ρ(γ) f(x)⁻¹` with `ρ` the requested
/// homomorphism. The factors `g_i`, `f(x)` are drawn from the ball of radius
/// `spread`.
pub fn generate_exact_morphism(
    g: &FiniteGroupoid,
    alg: &NormedAlgebra,
    sets: AmbientSets,
    spread: f64,
    homomorphism: Homomorphism,
    seed: u64,
) -> Result<ExactMorphism> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors: Vec<GroupElement> = (0..g.object_count())
        .map(|_| alg.sample_element(&mut rng, spread))
        .collect();
    let mut warnings = Vec::new();
    let mut used = None;
    let values: Vec<GroupElement> = match g.arrow(0).label {
        ArrowLabel::Pair { .. } => g
            .arrows()
            .iter()
            .map(|a| factors[a.target].mul(&factors[a.source].inverse()))
            .collect(),
        ArrowLabel::Action { .. } => {
            let order = g
                .action_group()
                .and_then(|t| t.cyclic_order())
                .ok_or_else(|| {
                    RectifyError::Config("action groupoid of a non-cyclic group".into())
                })?;
            let mut rho: Vec<GroupElement> = vec![GroupElement::identity(alg.group); order];
            let mut choice = homomorphism;
            if homomorphism == Homomorphism::Faithful {
                let images = (0..order)
                    .map(|k| faithful(alg.group, order, k))
                    .collect::<Result<Vec<_>>>()?;
                let reach = images
                    .iter()
                    .map(|r| principal_radius(r, alg))
                    .fold(0.0, f64::max);
                if reach > sets.w_radius {
                    warnings.push(format!(
                        "faithful Z_{order} -> {} reaches {reach:.4} > W radius {}; trivial homomorphism substituted",
                        alg.group, sets.w_radius
                    ));
                    choice = Homomorphism::Trivial;
                } else {
                    rho = images;
                }
            }
            used = Some(choice);
            g.arrows()
                .iter()
                .map(|a| match a.label {
                    ArrowLabel::Action { element, point } => Ok(factors[a.target]
                        .mul(&rho[element])
                        .mul(&factors[point].inverse())),
                    _ => Err(RectifyError::Config("mixed arrow labels".into())),
                })
                .collect::<Result<_>>()?
        }
        ArrowLabel::Generic => {
            return Err(RectifyError::Config(
                "no exact morphism construction for unlabelled arrows".into(),
            ));
        }
    };
    let phi = AlmostMorphism::new(values, alg)?;
    check_range(&phi, alg, sets)?;
    Ok(ExactMorphism {
        phi,
        homomorphism: used,
        warnings,
    })
}

fn check_range(phi: &AlmostMorphism, alg: &NormedAlgebra, sets: AmbientSets) -> Result<()> {
    for (arrow, v) in phi.values().iter().enumerate() {
        let distance = principal_radius(v, alg);
        if distance > sets.w_radius {
            return Err(RectifyError::RangeEscape {
                arrow,
                distance,
                radius: sets.w_radius,
            });
        }
    }
    Ok(())
}

/// `φ₀(p) = φ(p)·exp(w_p)` (or `exp(w_p)·φ(p)`), `w_p` uniform in the ball of
/// radius `epsilon`. A sample is drawn for every arrow, so the stream does
/// not depend on `leave_units`.
pub fn perturb_morphism(
    phi: &AlmostMorphism,
    g: &FiniteGroupoid,
    alg: &NormedAlgebra,
    sets: AmbientSets,
    spec: &PerturbationSpec,
) -> Result<AlmostMorphism> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut is_unit = vec![false; g.arrow_count()];
    (0..g.object_count()).for_each(|x| is_unit[g.unit(x)] = true);
    let values: Vec<GroupElement> = phi
        .values()
        .iter()
        .enumerate()
        .map(|(a, v)| {
            let w = alg.sample_ball(&mut rng, spec.epsilon);
            if spec.epsilon == 0.0 || (spec.leave_units && is_unit[a]) {
                return v.clone();
            }
            let kick = element(alg.group, w.coords());
            match spec.side {
                Side::Right => v.mul(&kick),
                Side::Left => kick.mul(v),
            }
        })
        .collect();
    let out = AlmostMorphism::new(values, alg)?;
    check_range(&out, alg, sets)?;
    Ok(out)
}
