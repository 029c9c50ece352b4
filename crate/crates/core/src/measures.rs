//! Computable measures on Cantor space, given as approximation oracles.
//!
//! An oracle answers `(σ, i)` with a dyadic within `2^-i` of `μ⟦σ⟧`.
//! Oracles that are exact at every precision say so through
//! [`MeasureOracle::is_exact`], which lets audits demand zero deviation.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use thiserror::Error;

use crate::bits::{BitString, EventuallyPeriodic};
use crate::dyadic::DyadicRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("convex weight {0} is outside [0, 1]")]
    WeightOutOfRange(DyadicRational),
    #[error("precision insufficient to decide threshold {threshold} at {sigma} (tried up to 2^-{precision})")]
    PrecisionInsufficient {
        sigma: BitString,
        threshold: DyadicRational,
        precision: u32,
    },
    #[error("threshold must be positive, got {0}")]
    NonpositiveThreshold(DyadicRational),
    #[error("mixture needs at least one component")]
    EmptyMixture,
}

pub trait MeasureOracle: Send + Sync {
    /// A dyadic within `2^-precision` of `μ⟦σ⟧`. Must be deterministic.
    fn approx(&self, sigma: &BitString, precision: u32) -> Result<DyadicRational, MeasureError>;

    /// True when `approx` returns the exact value at every precision.
    fn is_exact(&self) -> bool;

    fn describe(&self) -> String;
}

pub type SharedMeasure = Arc<dyn MeasureOracle>;

/// `λ⟦σ⟧ = 2^-|σ|`.
pub fn lebesgue(sigma: &BitString) -> DyadicRational {
    DyadicRational::pow2_neg(sigma.len() as u32)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Lebesgue;

impl MeasureOracle for Lebesgue {
    fn approx(&self, sigma: &BitString, _precision: u32) -> Result<DyadicRational, MeasureError> {
        Ok(lebesgue(sigma))
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        "lebesgue".into()
    }
}

/// Dirac measure concentrated on a single computable sequence.
#[derive(Debug, Clone)]
pub struct PointMass {
    pub atom: EventuallyPeriodic,
}

impl PointMass {
    pub fn new(atom: EventuallyPeriodic) -> Self {
        Self { atom }
    }
}

impl MeasureOracle for PointMass {
    fn approx(&self, sigma: &BitString, _precision: u32) -> Result<DyadicRational, MeasureError> {
        Ok(if self.atom.take(sigma.len()) == *sigma {
            DyadicRational::one()
        } else {
            DyadicRational::zero()
        })
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("point {}", self.atom)
    }
}

/// `ρ = α·μ + (1−α)·ν`. Operands are queried at precision `i+2`, so the
/// combined error is at most `2^-(i+1)`.
pub struct ConvexSum {
    mu: SharedMeasure,
    nu: SharedMeasure,
    alpha: DyadicRational,
    complement: DyadicRational,
}

pub fn convex_sum(
    mu: SharedMeasure,
    nu: SharedMeasure,
    alpha: DyadicRational,
) -> Result<ConvexSum, MeasureError> {
    if alpha.is_negative() || alpha > DyadicRational::one() {
        return Err(MeasureError::WeightOutOfRange(alpha));
    }
    let complement = DyadicRational::one() - alpha.clone();
    Ok(ConvexSum {
        mu,
        nu,
        alpha,
        complement,
    })
}

impl MeasureOracle for ConvexSum {
    fn approx(&self, sigma: &BitString, precision: u32) -> Result<DyadicRational, MeasureError> {
        let a = self.mu.approx(sigma, precision + 2)?;
        let b = self.nu.approx(sigma, precision + 2)?;
        Ok(&(&self.alpha * &a) + &(&self.complement * &b))
    }

    fn is_exact(&self) -> bool {
        self.mu.is_exact() && self.nu.is_exact()
    }

    fn describe(&self) -> String {
        format!(
            "convex({} * [{}] + {} * [{}])",
            self.alpha,
            self.mu.describe(),
            self.complement,
            self.nu.describe()
        )
    }
}

/// Uniform average `(1/k)·Σ μ_j`. The weight is generally not dyadic, so the
/// answer is rounded down to a multiple of `2^-(i+1)`; components are queried
/// at precision `i+1`. Exact only when `k` is a power of two and every
/// component is exact.
pub struct UniformMixture {
    parts: Vec<SharedMeasure>,
}

impl UniformMixture {
    pub fn new(parts: Vec<SharedMeasure>) -> Result<Self, MeasureError> {
        if parts.is_empty() {
            return Err(MeasureError::EmptyMixture);
        }
        Ok(Self { parts })
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

impl MeasureOracle for UniformMixture {
    fn approx(&self, sigma: &BitString, precision: u32) -> Result<DyadicRational, MeasureError> {
        let k = self.parts.len();
        let total: DyadicRational = self
            .parts
            .iter()
            .map(|p| p.approx(sigma, precision + 1))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .sum();
        if k.is_power_of_two() {
            return Ok(total.shr(k.trailing_zeros()));
        }
        // total = n / 2^e; total / k floored at 2^-(precision+1)
        let e = total.exponent();
        let target = precision + 1;
        let (num, den) = if e <= target {
            (total.numerator() << (target - e) as usize, BigInt::from(k))
        } else {
            (
                total.numerator().clone(),
                BigInt::from(k) << (e - target) as usize,
            )
        };
        Ok(DyadicRational::floor_ratio(&num, &den, 0).shr(target))
    }

    fn is_exact(&self) -> bool {
        self.parts.len().is_power_of_two() && self.parts.iter().all(|p| p.is_exact())
    }

    fn describe(&self) -> String {
        let inner: Vec<String> = self.parts.iter().map(|p| p.describe()).collect();
        format!("uniform(1/{} over [{}])", self.parts.len(), inner.join("; "))
    }
}

type ApproxFn = dyn Fn(&BitString, u32) -> Result<DyadicRational, MeasureError> + Send + Sync;

/// Oracle backed by a closure. Useful for wrapping externally computed
/// measures and for exercising the audits with deliberately broken oracles.
pub struct FnOracle {
    f: Box<ApproxFn>,
    exact: bool,
    name: String,
}

impl FnOracle {
    pub fn new(
        name: impl Into<String>,
        exact: bool,
        f: impl Fn(&BitString, u32) -> Result<DyadicRational, MeasureError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Box::new(f),
            exact,
            name: name.into(),
        }
    }
}

impl MeasureOracle for FnOracle {
    fn approx(&self, sigma: &BitString, precision: u32) -> Result<DyadicRational, MeasureError> {
        (self.f)(sigma, precision)
    }

    fn is_exact(&self) -> bool {
        self.exact
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// One answer from [`measure_eval`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub sigma: BitString,
    pub value: DyadicRational,
    pub precision: u32,
    pub exact: bool,
    /// The raw approximation was negative and has been raised to zero.
    pub clamped: bool,
}

impl Evaluation {
    /// `σ<TAB>value<TAB>precision` where precision is `exact` or `2^-i`.
    pub fn report_line(&self) -> String {
        let precision = if self.exact {
            "exact".to_string()
        } else {
            format!("2^-{}", self.precision)
        };
        let note = if self.clamped { "\tclamped" } else { "" };
        format!("{}\t{}\t{}{}", self.sigma, self.value, precision, note)
    }
}

pub fn measure_eval(
    mu: &dyn MeasureOracle,
    sigma: &BitString,
    precision: u32,
) -> Result<Evaluation, MeasureError> {
    let raw = mu.approx(sigma, precision)?;
    let clamped = raw.is_negative();
    Ok(Evaluation {
        sigma: sigma.clone(),
        value: if clamped { DyadicRational::zero() } else { raw },
        precision,
        exact: mu.is_exact(),
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdditivityEntry {
    pub sigma: BitString,
    pub deviation: DyadicRational,
    pub flagged: bool,
}

/// Result of [`check_additivity`]: one entry per audited `σ`, sorted by
/// length then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdditivityReport {
    pub measure: String,
    pub depth: usize,
    pub precision: u32,
    pub exact: bool,
    pub tolerance: DyadicRational,
    pub entries: Vec<AdditivityEntry>,
}

impl AdditivityReport {
    pub fn violations(&self) -> impl Iterator<Item = &AdditivityEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }

    pub fn is_clean(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn max_deviation(&self) -> DyadicRational {
        self.entries
            .iter()
            .map(|e| e.deviation.clone())
            .max()
            .unwrap_or_default()
    }
}

impl fmt::Display for AdditivityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "measure\t{}", self.measure)?;
        writeln!(
            f,
            "depth\t{}\tprecision\t{}\ttolerance\t{}",
            self.depth,
            if self.exact {
                "exact".to_string()
            } else {
                format!("2^-{}", self.precision)
            },
            self.tolerance
        )?;
        for e in &self.entries {
            if e.flagged || !e.deviation.is_zero() {
                let tag = if e.flagged { "VIOLATION" } else { "ok" };
                writeln!(f, "{}\t{}\t{}", e.sigma, e.deviation, tag)?;
            }
        }
        let flagged = self.violations().count();
        writeln!(
            f,
            "checked\t{}\tflagged\t{}\tmax_deviation\t{}",
            self.entries.len(),
            flagged,
            self.max_deviation()
        )
    }
}

/// Checks `μ⟦σ⟧ = μ⟦σ0⟧ + μ⟦σ1⟧` for every `|σ| < depth` with operands at
/// precision `i+2`. Exact oracles must show zero deviation; otherwise the
/// tolerance is `3·2^-(i+2)`.
pub fn check_additivity(
    mu: &dyn MeasureOracle,
    depth: usize,
    precision: u32,
) -> Result<AdditivityReport, MeasureError> {
    let p = precision + 2;
    let exact = mu.is_exact();
    let tolerance = if exact {
        DyadicRational::zero()
    } else {
        DyadicRational::new(3, p)
    };
    let mut entries = Vec::new();
    for sigma in BitString::all_shorter_than(depth) {
        let whole = mu.approx(&sigma, p)?;
        let left = mu.approx(&sigma.child(false), p)?;
        let right = mu.approx(&sigma.child(true), p)?;
        let deviation = (&(&whole - &left) - &right).abs();
        let flagged = deviation > tolerance;
        entries.push(AdditivityEntry {
            sigma,
            deviation,
            flagged,
        });
    }
    Ok(AdditivityReport {
        measure: mu.describe(),
        depth,
        precision,
        exact,
        tolerance,
        entries,
    })
}

/// All `σ` of length `depth` with `μ⟦σ⟧ ≥ δ`, with their measures.
///
/// Every atom of mass at least `δ` lies in one of the returned cylinders.
/// The search descends only through cylinders that can still reach `δ`.
/// Inexact oracles are refined from `2^-i < δ/2` until each threshold
/// comparison is certain, up to `max_precision`.
pub fn atom_candidates(
    mu: &dyn MeasureOracle,
    depth: usize,
    delta: &DyadicRational,
    max_precision: u32,
) -> Result<Vec<(BitString, DyadicRational)>, MeasureError> {
    if delta.is_negative() || delta.is_zero() {
        return Err(MeasureError::NonpositiveThreshold(delta.clone()));
    }
    // least i with 2^-i < δ/2
    let mut start = 0u32;
    while DyadicRational::pow2_neg(start) >= delta.halve() {
        start += 1;
    }
    let mut out = Vec::new();
    let mut frontier = vec![BitString::empty()];
    for level in 0..=depth {
        let mut next = Vec::new();
        for sigma in frontier {
            let Some(value) = decide_at_least(mu, &sigma, delta, start, max_precision)? else {
                continue;
            };
            if level == depth {
                out.push((sigma, value));
            } else {
                next.push(sigma.child(false));
                next.push(sigma.child(true));
            }
        }
        frontier = next;
    }
    out.sort();
    Ok(out)
}

fn decide_at_least(
    mu: &dyn MeasureOracle,
    sigma: &BitString,
    delta: &DyadicRational,
    start: u32,
    max_precision: u32,
) -> Result<Option<DyadicRational>, MeasureError> {
    if mu.is_exact() {
        let v = mu.approx(sigma, start)?;
        return Ok((v >= *delta).then_some(v));
    }
    let mut p = start;
    loop {
        let v = mu.approx(sigma, p)?;
        let err = DyadicRational::pow2_neg(p);
        if &v - &err >= *delta {
            return Ok(Some(v));
        }
        if &v + &err < *delta {
            return Ok(None);
        }
        if p >= max_precision {
            return Err(MeasureError::PrecisionInsufficient {
                sigma: sigma.clone(),
                threshold: delta.clone(),
                precision: p,
            });
        }
        p = (p + 4).min(max_precision);
    }
}

/// A finite prefix-free set of generators; the open set is the union of
/// their cylinders.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct CylinderSet {
    generators: BTreeSet<BitString>,
}

impl CylinderSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds the set, dropping any generator that extends another one.
    pub fn from_generators(gens: impl IntoIterator<Item = BitString>) -> Self {
        let mut all: Vec<BitString> = gens.into_iter().collect();
        all.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        let mut kept: BTreeSet<BitString> = BTreeSet::new();
        for g in all {
            if !(0..=g.len()).any(|k| kept.contains(&g.truncate(k))) {
                kept.insert(g);
            }
        }
        Self { generators: kept }
    }

    pub fn generators(&self) -> impl Iterator<Item = &BitString> {
        self.generators.iter()
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn union(&self, other: &CylinderSet) -> CylinderSet {
        CylinderSet::from_generators(self.generators.iter().chain(other.generators()).cloned())
    }

    /// `⟦σ⟧ ⊆ U`: some generator is a prefix of `σ`.
    pub fn contains_cylinder(&self, sigma: &BitString) -> bool {
        (0..=sigma.len()).any(|k| self.generators.contains(&sigma.truncate(k)))
    }

    /// Sum of generator measures; with `n` generators the error is at most `n·2^-i`.
    pub fn measure(
        &self,
        mu: &dyn MeasureOracle,
        precision: u32,
    ) -> Result<DyadicRational, MeasureError> {
        self.generators
            .iter()
            .map(|g| mu.approx(g, precision))
            .sum::<Result<DyadicRational, _>>()
    }
}

impl fmt::Display for CylinderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
        write!(f, "{{{}}}", gens.join(" "))
    }
}
