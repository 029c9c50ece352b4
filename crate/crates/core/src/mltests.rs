//! Staged randomness tests: each component `U_i` is enumerated in stages
//! `U_{i,s}`, every stage a finite cylinder set.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::approximation::TallyValue;
use crate::bits::{BitSource, BitString};
use crate::dyadic::DyadicRational;
use crate::measures::{CylinderSet, MeasureError, MeasureOracle};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("precision 2^-{precision} cannot decide the bound for component {i} at stage {s}")]
    PrecisionInsufficient { i: usize, s: usize, precision: u32 },
    #[error("input has {have} bits but generator {generator} needs {needed}")]
    InputTooShort {
        generator: BitString,
        needed: usize,
        have: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestKind {
    MartinLof,
    Schnorr,
    Generalized,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::MartinLof => "ml",
            TestKind::Schnorr => "schnorr",
            TestKind::Generalized => "generalized",
        })
    }
}

impl FromStr for TestKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ml" => Ok(TestKind::MartinLof),
            "schnorr" => Ok(TestKind::Schnorr),
            "generalized" => Ok(TestKind::Generalized),
            other => Err(format!("unknown test kind `{other}`")),
        }
    }
}

pub trait StagedTest: Send + Sync {
    /// `U_{i,s}`. Stages are cumulative.
    fn stage(&self, i: usize, s: usize) -> CylinderSet;
    fn kind(&self) -> TestKind;
    /// A stage after which component `i` never changes, if one is known.
    fn horizon(&self, i: usize) -> Option<usize>;
    fn name(&self) -> String;
}

/// `U_{i,s} = ⟦0^i⟧`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zeros;

impl StagedTest for Zeros {
    fn stage(&self, i: usize, _s: usize) -> CylinderSet {
        CylinderSet::from_generators([BitString::repeat(false, i)])
    }

    fn kind(&self) -> TestKind {
        TestKind::Schnorr
    }

    fn horizon(&self, _i: usize) -> Option<usize> {
        Some(0)
    }

    fn name(&self) -> String {
        "zeros".into()
    }
}

/// `U_{i,s} = ⟦0^{i-1}⟧` (and the whole space for `i = 0`): twice too big.
#[derive(Debug, Clone, Copy, Default)]
pub struct Inflated;

impl StagedTest for Inflated {
    fn stage(&self, i: usize, _s: usize) -> CylinderSet {
        CylinderSet::from_generators([BitString::repeat(false, i.saturating_sub(1))])
    }

    fn kind(&self) -> TestKind {
        TestKind::MartinLof
    }

    fn horizon(&self, _i: usize) -> Option<usize> {
        Some(0)
    }

    fn name(&self) -> String {
        "inflated".into()
    }
}

/// `U_{i,s} = {0^i 1^j 0 : j < s}`, of measure `2^-i (1 − 2^-s)` under λ.
#[derive(Debug, Clone, Copy, Default)]
pub struct Geometric;

impl StagedTest for Geometric {
    fn stage(&self, i: usize, s: usize) -> CylinderSet {
        CylinderSet::from_generators((0..s).map(|j| {
            BitString::repeat(false, i)
                .concat(&BitString::repeat(true, j))
                .child(false)
        }))
    }

    fn kind(&self) -> TestKind {
        TestKind::Schnorr
    }

    fn horizon(&self, _i: usize) -> Option<usize> {
        None
    }

    fn name(&self) -> String {
        "geometric".into()
    }
}

/// `U_{n,s} = ⟦0^{n+1}⟧` once `s ≥ n+1`, empty before. Declared open.
#[derive(Debug, Clone, Copy, Default)]
pub struct CaptureDemo;

impl StagedTest for CaptureDemo {
    fn stage(&self, n: usize, s: usize) -> CylinderSet {
        if s > n {
            CylinderSet::from_generators([BitString::repeat(false, n + 1)])
        } else {
            CylinderSet::empty()
        }
    }

    fn kind(&self) -> TestKind {
        TestKind::MartinLof
    }

    fn horizon(&self, _i: usize) -> Option<usize> {
        None
    }

    fn name(&self) -> String {
        "capture-demo".into()
    }
}

pub fn builtin(name: &str) -> Option<Box<dyn StagedTest>> {
    Some(match name.trim() {
        "zeros" => Box::new(Zeros),
        "inflated" => Box::new(Inflated),
        "geometric" => Box::new(Geometric),
        "capture-demo" => Box::new(CaptureDemo),
        _ => return None,
    })
}

/// A test listed in full: generators added at `(i, s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListedTest {
    kind: TestKind,
    horizon: Option<usize>,
    additions: BTreeMap<(usize, usize), Vec<BitString>>,
}

impl ListedTest {
    pub fn new(
        kind: TestKind,
        horizon: Option<usize>,
        additions: BTreeMap<(usize, usize), Vec<BitString>>,
    ) -> Self {
        Self {
            kind,
            horizon,
            additions,
        }
    }

    /// Largest component index mentioned, plus one.
    pub fn components(&self) -> usize {
        self.additions.keys().map(|&(i, _)| i + 1).max().unwrap_or(0)
    }

    pub fn additions(&self) -> &BTreeMap<(usize, usize), Vec<BitString>> {
        &self.additions
    }
}

impl StagedTest for ListedTest {
    fn stage(&self, i: usize, s: usize) -> CylinderSet {
        CylinderSet::from_generators(
            self.additions
                .range((i, 0)..=(i, s))
                .flat_map(|(_, gens)| gens.iter().cloned()),
        )
    }

    fn kind(&self) -> TestKind {
        self.kind
    }

    fn horizon(&self, _i: usize) -> Option<usize> {
        self.horizon
    }

    fn name(&self) -> String {
        "listed".into()
    }
}

impl FromStr for ListedTest {
    type Err = TestError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |line: usize, message: String| TestError::Parse { line, message };
        let mut kind = TestKind::MartinLof;
        let mut horizon = None;
        let mut additions: BTreeMap<(usize, usize), Vec<BitString>> = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line == "test" {
                continue;
            }
            if let Some(rest) = line.strip_prefix("kind:") {
                kind = rest.parse().map_err(|e| err(line_no, e))?;
                continue;
            }
            if let Some(rest) = line.strip_prefix("horizon:") {
                let rest = rest.trim();
                horizon = if rest == "open" {
                    None
                } else {
                    Some(
                        rest.parse()
                            .map_err(|e| err(line_no, format!("bad horizon: {e}")))?,
                    )
                };
                continue;
            }
            let (head, gens) = line
                .split_once(':')
                .ok_or_else(|| err(line_no, format!("expected `i s: σ ...`, got `{line}`")))?;
            let nums: Vec<&str> = head.split_whitespace().collect();
            let [i, s] = nums.as_slice() else {
                return Err(err(line_no, format!("expected `i s`, got `{head}`")));
            };
            let i: usize = i.parse().map_err(|e| err(line_no, format!("bad component: {e}")))?;
            let s: usize = s.parse().map_err(|e| err(line_no, format!("bad stage: {e}")))?;
            let gens = gens
                .split_whitespace()
                .map(|g| g.parse::<BitString>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(line_no, format!("{e}")))?;
            additions.entry((i, s)).or_default().extend(gens);
        }
        Ok(Self::new(kind, horizon, additions))
    }
}

impl fmt::Display for ListedTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "test")?;
        writeln!(f, "kind: {}", self.kind)?;
        match self.horizon {
            Some(h) => writeln!(f, "horizon: {h}")?,
            None => writeln!(f, "horizon: open")?,
        }
        for ((i, s), gens) in &self.additions {
            let gs: Vec<String> = gens.iter().map(|g| g.to_string()).collect();
            writeln!(f, "{i} {s}: {}", gs.join(" "))?;
        }
        Ok(())
    }
}

/// `μ(U_{i,s})` as an interval `[value − error, value + error]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageMass {
    pub s: usize,
    pub value: DyadicRational,
    pub error: DyadicRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundVerdict {
    pub i: usize,
    pub s: usize,
    pub kind: TestKind,
    pub bound: DyadicRational,
    pub mass: DyadicRational,
    pub error: DyadicRational,
    pub within_bound: bool,
    /// `2^-i − μ(U_{i,t})` for `t = 0..=s`, reported for Schnorr tests.
    pub gaps: Vec<DyadicRational>,
}

impl BoundVerdict {
    /// The gap never grows from one stage to the next.
    pub fn gap_nonincreasing(&self) -> bool {
        self.gaps.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn final_gap(&self) -> Option<&DyadicRational> {
        self.gaps.last()
    }
}

impl fmt::Display for BoundVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "i={}\ts={}\tmass={}\tbound={}\t{}",
            self.i,
            self.s,
            self.mass,
            self.bound,
            if self.within_bound { "ok" } else { "VIOLATION" }
        )?;
        if !self.error.is_zero() {
            write!(f, "\terror={}", self.error)?;
        }
        if self.kind == TestKind::Schnorr {
            if let Some(g) = self.final_gap() {
                write!(
                    f,
                    "\tgap={}\ttrend={}",
                    g,
                    if self.gap_nonincreasing() {
                        "nonincreasing"
                    } else {
                        "increasing"
                    }
                )?;
            }
        }
        Ok(())
    }
}

/// `μ(U)` with a certified error: zero for exact oracles, `n·2^-p` for `n`
/// generators otherwise.
pub fn set_mass(
    u: &CylinderSet,
    mu: &dyn MeasureOracle,
    precision: u32,
) -> Result<(DyadicRational, DyadicRational), MeasureError> {
    let value = u.measure(mu, precision)?;
    let error = if mu.is_exact() {
        DyadicRational::zero()
    } else {
        DyadicRational::new(u.len() as i64, precision)
    };
    Ok((value, error))
}

/// Checks `μ(U_{i,s}) ≤ 2^-i`; for Schnorr tests also reports the gap at
/// every stage up to `s`.
pub fn check_bound(
    test: &dyn StagedTest,
    mu: &dyn MeasureOracle,
    i: usize,
    s: usize,
    precision: u32,
) -> Result<BoundVerdict, TestError> {
    let bound = DyadicRational::pow2_neg(i as u32);
    let (mass, error) = set_mass(&test.stage(i, s), mu, precision)?;
    let within_bound = if &mass + &error <= bound {
        true
    } else if &mass - &error > bound {
        false
    } else {
        return Err(TestError::PrecisionInsufficient { i, s, precision });
    };
    let mut gaps = Vec::new();
    if test.kind() == TestKind::Schnorr {
        for t in 0..=s {
            let (m, _) = set_mass(&test.stage(i, t), mu, precision)?;
            gaps.push(&bound - &m);
        }
    }
    Ok(BoundVerdict {
        i,
        s,
        kind: test.kind(),
        bound,
        mass,
        error,
        within_bound,
        gaps,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridAudit {
    pub verdicts: Vec<BoundVerdict>,
}

impl GridAudit {
    /// The first `(i, s)` in lexicographic order whose stage exceeds `2^-i`.
    pub fn first_violation(&self) -> Option<(usize, usize)> {
        self.verdicts
            .iter()
            .find(|v| !v.within_bound)
            .map(|v| (v.i, v.s))
    }

    pub fn is_clean(&self) -> bool {
        self.first_violation().is_none()
    }
}

impl fmt::Display for GridAudit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.verdicts {
            writeln!(f, "{v}")?;
        }
        match self.first_violation() {
            Some((i, s)) => writeln!(f, "first_violation\ti={i}\ts={s}"),
            None => writeln!(f, "clean"),
        }
    }
}

/// [`check_bound`] over every `i ≤ i_max`, `s ≤ s_max`, in `(i, s)` order.
pub fn audit_bounds(
    test: &dyn StagedTest,
    mu: &dyn MeasureOracle,
    i_max: usize,
    s_max: usize,
    precision: u32,
) -> Result<GridAudit, TestError> {
    let mut verdicts = Vec::new();
    for i in 0..=i_max {
        for s in 0..=s_max {
            verdicts.push(check_bound(test, mu, i, s, precision)?);
        }
    }
    Ok(GridAudit { verdicts })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizedReport {
    pub stage: usize,
    pub masses: Vec<DyadicRational>,
    pub epsilon: DyadicRational,
    pub nonincreasing: bool,
    /// Least `i` from which every reported mass is below `ε`.
    pub below_from: Option<usize>,
}

/// The sequence `μ(U_{i,s})` for `i ≤ i_max` and whether it falls below `ε`.
pub fn check_generalized(
    test: &dyn StagedTest,
    mu: &dyn MeasureOracle,
    i_max: usize,
    s: usize,
    epsilon: &DyadicRational,
    precision: u32,
) -> Result<GeneralizedReport, TestError> {
    let masses = (0..=i_max)
        .map(|i| set_mass(&test.stage(i, s), mu, precision).map(|(v, _)| v))
        .collect::<Result<Vec<_>, _>>()?;
    let nonincreasing = masses.windows(2).all(|w| w[1] <= w[0]);
    let mut below_from = None;
    for i in (0..masses.len()).rev() {
        if masses[i] < *epsilon {
            below_from = Some(i);
        } else {
            break;
        }
    }
    Ok(GeneralizedReport {
        stage: s,
        masses,
        epsilon: epsilon.clone(),
        nonincreasing,
        below_from,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageViolation {
    pub i: usize,
    pub s: usize,
    pub generator: BitString,
}

/// Every generator of `U_{i,s}` must be covered by `U_{i,s+1}`.
pub fn audit_monotone(test: &dyn StagedTest, i_max: usize, s_max: usize) -> Vec<CoverageViolation> {
    let mut out = Vec::new();
    for i in 0..=i_max {
        let mut previous = test.stage(i, 0);
        for s in 1..=s_max {
            let current = test.stage(i, s);
            for g in previous.generators() {
                if !current.contains_cylinder(g) {
                    out.push(CoverageViolation {
                        i,
                        s: s - 1,
                        generator: g.clone(),
                    });
                }
            }
            previous = current;
        }
    }
    out
}

/// The least `s ≤ budget` at which some prefix of `X` is a generator of
/// `U_{n,s}`. `Infinite` when the component's horizon has passed without a
/// capture, `Unknown(budget)` otherwise.
pub fn capture_stage(
    test: &dyn StagedTest,
    x: &dyn BitSource,
    n: usize,
    budget: usize,
) -> Result<TallyValue, TestError> {
    let last = match test.horizon(n) {
        Some(h) => h.min(budget),
        None => budget,
    };
    for s in 0..=last {
        for g in test.stage(n, s).generators() {
            let prefix = x.read(g.len()).ok_or_else(|| TestError::InputTooShort {
                generator: g.clone(),
                needed: g.len(),
                have: x.finite_len().unwrap_or(0),
            })?;
            if prefix == *g {
                return Ok(TallyValue::Finite(s));
            }
        }
    }
    Ok(match test.horizon(n) {
        Some(h) if h <= budget => TallyValue::Infinite,
        _ => TallyValue::Unknown(budget),
    })
}
