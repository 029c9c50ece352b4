//! The uniform mixture over the bottom set, as a machine-readable recipe,
//! and its binding to concrete schedules.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::approximation::MutationSchedule;
use crate::measures::{MeasureError, SharedMeasure, UniformMixture};
use crate::tally::{tally_induced_measure, TallyError, TallyMode};

use super::setsystem::{SequenceTerm, SetSystem};
use super::FiniteLattice;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecipeWeight {
    pub numerator: u64,
    pub denominator: u64,
    pub dyadic: bool,
    /// How the oracle rounds `1/k` at precision `i`.
    pub approximation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecipeTerm {
    pub term: String,
    pub basics: Vec<usize>,
    /// One schedule placeholder per basic, in component order.
    pub schedules: Vec<String>,
    pub interleave: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeasureRecipe {
    pub lattice: String,
    pub k: usize,
    pub weight: RecipeWeight,
    pub terms: Vec<RecipeTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecipeError {
    #[error("no schedule bound for basic A{0}")]
    MissingSchedule(usize),
    #[error(transparent)]
    Tally(#[from] TallyError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// `μ = (1/k)·Σ μ_{B_i}` over the `k` terms of `S_{0_L}`, each `μ_{B_i}`
/// being the measure induced by the tally functional of `B_i`'s schedule.
pub fn emit_measure_recipe(l: &FiniteLattice, s: &SetSystem) -> MeasureRecipe {
    let bottom = s.bottom_terms(l);
    let k = bottom.len();
    let terms = bottom
        .iter()
        .map(|t| {
            let basics = t.components();
            let interleave = match t {
                SequenceTerm::Basic(_) => "none".to_string(),
                SequenceTerm::Join(v) => format!(
                    "bit j reads component j mod {m} at position j div {m}",
                    m = v.len()
                ),
            };
            RecipeTerm {
                term: t.to_string(),
                schedules: basics.iter().map(|i| format!("A{i}.sched")).collect(),
                basics,
                interleave,
            }
        })
        .collect();
    let dyadic = k.is_power_of_two();
    MeasureRecipe {
        lattice: l.name().to_string(),
        k,
        weight: RecipeWeight {
            numerator: 1,
            denominator: k as u64,
            dyadic,
            approximation: if dyadic {
                "exact".into()
            } else {
                format!("floor(2^(i+1)/{k})/2^(i+1) per term at precision i")
            },
        },
        terms,
    }
}

/// Binds each basic to a schedule and returns the mixture oracle. Join
/// terms use the bitwise interleaving of their components' schedules.
pub fn bind_recipe(
    recipe: &MeasureRecipe,
    schedules: &BTreeMap<usize, MutationSchedule>,
    guard_bits: usize,
) -> Result<UniformMixture, RecipeError> {
    let mut parts: Vec<SharedMeasure> = Vec::new();
    for term in &recipe.terms {
        let scheds = term
            .basics
            .iter()
            .map(|i| schedules.get(i).ok_or(RecipeError::MissingSchedule(*i)))
            .collect::<Result<Vec<_>, _>>()?;
        let joined = MutationSchedule::interleave(&scheds);
        parts.push(Arc::new(tally_induced_measure(&joined, TallyMode::Phi, guard_bits)?));
    }
    Ok(UniformMixture::new(parts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use crate::dyadic::DyadicRational;
    use crate::lattice::build_set_system;
    use crate::measures::MeasureOracle;

    fn fig2() -> FiniteLattice {
        "lattice fig2\nelements: 0 c d a b 1\ncovers: 0<c 0<d c<a c<b d<a a<1 b<1\n"
            .parse()
            .unwrap()
    }

    #[test]
    fn diamond_recipe_is_dyadic() {
        let l: FiniteLattice = "lattice diamond\nelements: 0 a b 1\ncovers: 0<a 0<b a<1 b<1\n"
            .parse()
            .unwrap();
        let r = emit_measure_recipe(&l, &build_set_system(&l).unwrap());
        assert_eq!(r.k, 2);
        assert!(r.weight.dyadic);
        assert_eq!(r.weight.denominator, 2);
    }

    #[test]
    fn fig2_recipe_and_binding() {
        let l = fig2();
        let r = emit_measure_recipe(&l, &build_set_system(&l).unwrap());
        assert_eq!(r.k, 3);
        assert!(!r.weight.dyadic);
        let names: Vec<&str> = r.terms.iter().map(|t| t.term.as_str()).collect();
        assert_eq!(names, ["A0", "A1", "A0+A2"]);
        assert_eq!(r.terms[2].schedules, ["A0.sched", "A2.sched"]);

        let scheds: BTreeMap<usize, MutationSchedule> = [
            (0, "base: +0\nstage 1: flip 0\n"),
            (1, "base: +1\nstage 2: flip 1 3\n"),
            (2, "base: +01\nstage 1: flip 2\n"),
        ]
        .into_iter()
        .map(|(i, t)| (i, t.parse().unwrap()))
        .collect();
        let mu = bind_recipe(&r, &scheds, 24).unwrap();
        for i in [1u32, 5, 12, 30] {
            let v = mu.approx(&BitString::empty(), i).unwrap();
            let err = (&v - &DyadicRational::one()).abs();
            assert!(err < DyadicRational::pow2_neg(i), "precision {i}: {v}");
        }
        let missing: BTreeMap<usize, MutationSchedule> = scheds.into_iter().take(2).collect();
        assert!(matches!(bind_recipe(&r, &missing, 24), Err(RecipeError::MissingSchedule(2))));
    }
}
