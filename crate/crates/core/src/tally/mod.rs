//! Tally functionals: outputs built from unary blocks whose lengths are
//! least stages `θ(X, n)` of a decidable predicate.
//!
//! [`predicate`] holds the predicates and the θ engine, [`functional`] the
//! schedule-driven functionals `Φ_A` and `Ψ`, and [`decomposition`] their
//! exact induced measures.

pub mod decomposition;
pub mod functional;
pub mod predicate;

use std::fmt;

use thiserror::Error;

use crate::approximation::TallyValue;
use crate::bits::{BitSource, BitString};

pub use decomposition::{is_phi_pattern, tally_induced_measure, AtomListing, Component, TallyMeasure};
pub use functional::{make_phi_a, make_psi, TallyFunctional, TallyMode};
pub use predicate::{
    make_theta_gamma, make_theta_test, theta_search, DivergeAt, Eval, GammaAgreement, GammaValue,
    IdentityRead, ScheduleMatch, StageOracle, TestCapture, ThetaPredicate,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TallyError {
    #[error("input has {have} bits but {needed} are required")]
    InputTooShort { needed: usize, have: usize },
    #[error("stage oracle changed its value at position {k} on stage {stage} (was {before}, now {after:?})")]
    GammaInconsistent {
        k: usize,
        stage: usize,
        before: bool,
        after: Option<bool>,
    },
    #[error("decision depth {depth} exceeds guard of {guard} bits")]
    GuardExceeded { depth: usize, guard: usize },
    #[error("predicate error: {0}")]
    Predicate(String),
}

/// What follows the rendered prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// Only the requested blocks were rendered; more output follows.
    Open,
    /// An infinite block: the output continues with `1^ω`.
    Ones,
    /// An infinite block under a fill: the output continues with `b^ω`.
    Fill(bool),
    /// A block exceeded the stage budget; the rendering stops at what is certain.
    Undecided,
}

/// The first blocks of a tally output and their rendering.
///
/// Blocks after the first infinite or undecided one are never consulted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TallyOutput {
    pub blocks: Vec<TallyValue>,
    /// Block fills `y_i`, for outputs whose blocks repeat a fill bit.
    pub fills: Vec<Option<bool>>,
    pub rendered: BitString,
    pub tail: Tail,
}

impl TallyOutput {
    /// `rendered` followed by the tail, as a `<prefix>+<tail>` pattern
    /// when the tail is periodic.
    pub fn display_string(&self) -> String {
        let body = self.rendered.to_string();
        let body = if self.rendered.is_empty() { String::new() } else { body };
        match self.tail {
            Tail::Open if self.rendered.is_empty() => "ε".into(),
            Tail::Open => body,
            Tail::Ones => format!("{body}+1"),
            Tail::Fill(b) => format!("{body}+{}", u8::from(b)),
            Tail::Undecided => format!("{body}?"),
        }
    }
}

impl fmt::Display for TallyOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        write!(f, "blocks\t[{}]", blocks.join(", "))?;
        if !self.fills.is_empty() {
            let fills: Vec<String> = self
                .fills
                .iter()
                .map(|y| y.map_or("-".to_string(), |b| u8::from(b).to_string()))
                .collect();
            write!(f, "\nfills\t[{}]", fills.join(", "))?;
        }
        write!(f, "\noutput\t{}", self.display_string())
    }
}

/// `1^{θ(X,0)} 0 1^{θ(X,1)} 0 …` for the first `n_blocks` blocks.
pub fn tally_output(
    pred: &dyn ThetaPredicate,
    x: &dyn BitSource,
    n_blocks: usize,
    budget: usize,
) -> Result<TallyOutput, TallyError> {
    render(pred, x, None, n_blocks, budget)
}

/// `y_0^{θ(X,0)} y_1^{θ(X,1)} …`, reading the fill bits `y_i` from `y`.
pub fn tally_output_filled(
    pred: &dyn ThetaPredicate,
    x: &dyn BitSource,
    y: &dyn BitSource,
    n_blocks: usize,
    budget: usize,
) -> Result<TallyOutput, TallyError> {
    render(pred, x, Some(y), n_blocks, budget)
}

fn render(
    pred: &dyn ThetaPredicate,
    x: &dyn BitSource,
    y: Option<&dyn BitSource>,
    n_blocks: usize,
    budget: usize,
) -> Result<TallyOutput, TallyError> {
    let fill_bit = |i: usize| -> Result<bool, TallyError> {
        let src = y.expect("fill requested");
        src.read(i + 1)
            .map(|p| p.get(i).unwrap_or(false))
            .ok_or(TallyError::InputTooShort {
                needed: i + 1,
                have: src.finite_len().unwrap_or(0),
            })
    };
    let mut out = TallyOutput {
        blocks: Vec::new(),
        fills: Vec::new(),
        rendered: BitString::empty(),
        tail: Tail::Open,
    };
    for n in 0..n_blocks {
        let v = theta_search(pred, x, n, budget)?;
        out.blocks.push(v);
        // number of certain repetitions of this block's bit
        let (run, closed) = match v {
            TallyValue::Finite(t) => (t, true),
            TallyValue::Infinite => (0, false),
            TallyValue::Unknown(b) => (b + 1, false),
        };
        let bit = match y {
            None => true,
            Some(_) if run == 0 && closed => {
                out.fills.push(None);
                continue;
            }
            Some(_) => {
                let b = fill_bit(n)?;
                out.fills.push(Some(b));
                b
            }
        };
        out.rendered.extend_from(&BitString::repeat(bit, run));
        match v {
            TallyValue::Finite(_) => {
                if y.is_none() {
                    out.rendered.push(false);
                }
            }
            TallyValue::Infinite => {
                out.tail = if y.is_none() { Tail::Ones } else { Tail::Fill(bit) };
                break;
            }
            TallyValue::Unknown(_) => {
                out.tail = Tail::Undecided;
                break;
            }
        }
    }
    Ok(out)
}
