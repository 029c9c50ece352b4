//! Truth-table functionals as monotone prefix maps with explicit use bounds,
//! and the exactly computed measures they induce.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use thiserror::Error;

use crate::bits::{BitString, EventuallyPeriodic};
use crate::dyadic::DyadicRational;
use crate::measures::{MeasureError, MeasureOracle};

pub const DEFAULT_GUARD_BITS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FunctionalError {
    #[error("monotonicity violated: {shorter} -> {shorter_out} but {longer} -> {longer_out}")]
    Monotonicity {
        shorter: BitString,
        shorter_out: BitString,
        longer: BitString,
        longer_out: BitString,
    },
    #[error("use bound violated: input {input} yields {output_len} bits, at least {required} promised")]
    UseBound {
        input: BitString,
        output_len: usize,
        required: usize,
    },
    #[error("use bound {use_bound} exceeds enumeration guard of {guard} bits")]
    GuardExceeded { use_bound: usize, guard: usize },
    #[error("functional `{0}` has no use bound")]
    NoUseBound(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A monotone map from input prefixes to output prefixes.
///
/// `use_bound(n)` is an input length guaranteeing at least `n` output bits;
/// `None` means the functional is not known to be total.
pub trait Functional: Send + Sync {
    fn step(&self, rho: &BitString) -> BitString;
    fn use_bound(&self, n: usize) -> Option<usize>;
    fn name(&self) -> String;
}

pub type SharedFunctional = Arc<dyn Functional>;

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Functional for Identity {
    fn step(&self, rho: &BitString) -> BitString {
        rho.clone()
    }

    fn use_bound(&self, n: usize) -> Option<usize> {
        Some(n)
    }

    fn name(&self) -> String {
        "identity".into()
    }
}

/// Maps everything to a fixed sequence, one output bit per input bit.
#[derive(Debug, Clone)]
pub struct Constant(pub EventuallyPeriodic);

impl Functional for Constant {
    fn step(&self, rho: &BitString) -> BitString {
        self.0.take(rho.len())
    }

    fn use_bound(&self, n: usize) -> Option<usize> {
        Some(n)
    }

    fn name(&self) -> String {
        format!("constant {}", self.0)
    }
}

/// `Φ(X)(n) = X(2n)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProjectEven;

impl Functional for ProjectEven {
    fn step(&self, rho: &BitString) -> BitString {
        BitString::from_bits(rho.bits().iter().step_by(2).copied().collect())
    }

    fn use_bound(&self, n: usize) -> Option<usize> {
        Some(2 * n)
    }

    fn name(&self) -> String {
        "project-even".into()
    }
}

/// An explicit table: every input of length `d` is sent to `τ·0^ω`.
///
/// On inputs of length at least `d` the output has `max(|ρ|, |τ|)` bits.
/// Shorter inputs produce the longest common prefix of everything their
/// extensions produce at length `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    depth: usize,
    rows: Vec<BitString>,
}

impl TruthTable {
    /// `rows[j]` is the output for the length-`depth` input with index `j`.
    pub fn new(depth: usize, rows: Vec<BitString>) -> Self {
        assert_eq!(rows.len(), 1usize << depth, "one row per input of length {depth}");
        Self { depth, rows }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn row(&self, input: &BitString) -> &BitString {
        &self.rows[index_of(input)]
    }

    pub fn rows(&self) -> impl Iterator<Item = (BitString, &BitString)> {
        BitString::all_of_length(self.depth).zip(self.rows.iter())
    }

    fn padded(&self, j: usize, len: usize) -> BitString {
        let tau = &self.rows[j];
        let mut out = tau.truncate(tau.len().min(len));
        while out.len() < len {
            out.push(false);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, FunctionalError> {
        let err = |line: usize, message: String| FunctionalError::Parse { line, message };
        let mut depth: Option<usize> = None;
        let mut rows: BTreeMap<BitString, BitString> = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line == "table" || line == "table:" {
                continue;
            }
            if let Some(rest) = line.strip_prefix("use:") {
                let d = rest
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| err(line_no, format!("bad use bound: {e}")))?;
                if d > 20 {
                    return Err(err(line_no, format!("table depth {d} too large")));
                }
                depth = Some(d);
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| err(line_no, format!("expected `ρ -> τ`, got `{line}`")))?;
            let input: BitString = lhs
                .trim()
                .parse()
                .map_err(|e| err(line_no, format!("{e}")))?;
            let output: BitString = rhs
                .trim()
                .parse()
                .map_err(|e| err(line_no, format!("{e}")))?;
            let d = depth.ok_or_else(|| err(line_no, "`use: d` must precede the rows".into()))?;
            if input.len() != d {
                return Err(err(line_no, format!("input {input} does not have length {d}")));
            }
            if rows.insert(input.clone(), output).is_some() {
                return Err(err(line_no, format!("duplicate row for {input}")));
            }
        }
        let d = depth.ok_or_else(|| err(0, "missing `use: d`".into()))?;
        if rows.len() != 1 << d {
            return Err(err(0, format!("expected {} rows, found {}", 1usize << d, rows.len())));
        }
        Ok(Self::new(d, rows.into_values().collect()))
    }
}

fn index_of(s: &BitString) -> usize {
    s.bits().iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

impl Functional for TruthTable {
    fn step(&self, rho: &BitString) -> BitString {
        if rho.len() >= self.depth {
            let j = index_of(&rho.truncate(self.depth));
            return self.padded(j, rho.len().max(self.rows[j].len()));
        }
        let free = self.depth - rho.len();
        let base = index_of(rho) << free;
        let outs: Vec<BitString> = (base..base + (1 << free))
            .map(|j| self.padded(j, self.depth.max(self.rows[j].len())))
            .collect();
        common_prefix(&outs)
    }

    fn use_bound(&self, n: usize) -> Option<usize> {
        Some(n.max(self.depth))
    }

    fn name(&self) -> String {
        format!("table(depth {})", self.depth)
    }
}

fn common_prefix(outs: &[BitString]) -> BitString {
    let Some(first) = outs.first() else {
        return BitString::empty();
    };
    let mut n = first.len();
    for o in &outs[1..] {
        n = (0..n.min(o.len()))
            .find(|&i| first.get(i) != o.get(i))
            .unwrap_or(n.min(o.len()));
    }
    first.truncate(n)
}

/// `outer ∘ inner`, with use bound `u_inner(u_outer(n))`.
pub struct Compose {
    outer: SharedFunctional,
    inner: SharedFunctional,
}

impl Compose {
    pub fn new(outer: SharedFunctional, inner: SharedFunctional) -> Self {
        Self { outer, inner }
    }
}

impl Functional for Compose {
    fn step(&self, rho: &BitString) -> BitString {
        self.outer.step(&self.inner.step(rho))
    }

    fn use_bound(&self, n: usize) -> Option<usize> {
        self.inner.use_bound(self.outer.use_bound(n)?)
    }

    fn name(&self) -> String {
        format!("{} . {}", self.outer.name(), self.inner.name())
    }
}

/// Resolves `identity`, `project-even` and `constant <pattern>`.
pub fn builtin(spec: &str) -> Option<SharedFunctional> {
    let spec = spec.trim();
    match spec {
        "identity" => return Some(Arc::new(Identity)),
        "project-even" => return Some(Arc::new(ProjectEven)),
        _ => {}
    }
    let pattern = spec.strip_prefix("constant")?.trim();
    let pattern: EventuallyPeriodic = pattern.parse().ok()?;
    Some(Arc::new(Constant(pattern)))
}

/// The output determined by `ρ`, checked against every shorter prefix of
/// `ρ` for monotonicity and against the use bound for length.
pub fn tt_apply(phi: &dyn Functional, rho: &BitString) -> Result<BitString, FunctionalError> {
    let out = phi.step(rho);
    let mut previous = BitString::empty();
    let mut previous_out = phi.step(&previous);
    for k in 1..=rho.len() {
        let current = rho.truncate(k);
        let current_out = if k == rho.len() {
            out.clone()
        } else {
            phi.step(&current)
        };
        if !previous_out.is_prefix_of(&current_out) {
            return Err(FunctionalError::Monotonicity {
                shorter: previous,
                shorter_out: previous_out,
                longer: current,
                longer_out: current_out,
            });
        }
        previous = current;
        previous_out = current_out;
    }
    check_use(phi, rho, &out)?;
    Ok(out)
}

fn check_use(phi: &dyn Functional, rho: &BitString, out: &BitString) -> Result<(), FunctionalError> {
    // use is nondecreasing, so it suffices that |out|+1 bits are not yet promised
    if let Some(u) = phi.use_bound(out.len() + 1) {
        if u <= rho.len() {
            let mut required = out.len() + 1;
            while phi.use_bound(required + 1).is_some_and(|v| v <= rho.len()) {
                required += 1;
            }
            return Err(FunctionalError::UseBound {
                input: rho.clone(),
                output_len: out.len(),
                required,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PreimageMode {
    /// Descend only through inputs whose output is still compatible with σ.
    #[default]
    Pruned,
    /// Count all `2^u` inputs of length `u = use_bound(|σ|)`.
    Enumerate,
}

/// `λ(Φ^{-1}⟦σ⟧)`, exactly.
pub fn induced_measure(
    phi: &dyn Functional,
    sigma: &BitString,
    mode: PreimageMode,
    guard: usize,
) -> Result<DyadicRational, FunctionalError> {
    let u = phi
        .use_bound(sigma.len())
        .ok_or_else(|| FunctionalError::NoUseBound(phi.name()))?;
    match mode {
        PreimageMode::Enumerate => {
            if u > guard {
                return Err(FunctionalError::GuardExceeded { use_bound: u, guard });
            }
            let hits = BitString::all_of_length(u)
                .filter(|rho| sigma.is_prefix_of(&phi.step(rho)))
                .count();
            Ok(DyadicRational::new(BigInt::from(hits), u as u32))
        }
        PreimageMode::Pruned => pruned(phi, sigma, &BitString::empty(), u),
    }
}

fn pruned(
    phi: &dyn Functional,
    sigma: &BitString,
    rho: &BitString,
    u: usize,
) -> Result<DyadicRational, FunctionalError> {
    let out = phi.step(rho);
    if !out.compatible(sigma) {
        return Ok(DyadicRational::zero());
    }
    if sigma.is_prefix_of(&out) {
        return Ok(DyadicRational::pow2_neg(rho.len() as u32));
    }
    if rho.len() >= u {
        return Err(FunctionalError::UseBound {
            input: rho.clone(),
            output_len: out.len(),
            required: sigma.len(),
        });
    }
    let left = pruned(phi, sigma, &rho.child(false), u)?;
    let right = pruned(phi, sigma, &rho.child(true), u)?;
    Ok(&left + &right)
}

/// The induced measure `λ_Φ` packaged as an exact oracle.
pub struct InducedMeasure {
    phi: SharedFunctional,
    mode: PreimageMode,
    guard: usize,
}

impl InducedMeasure {
    pub fn new(phi: SharedFunctional, mode: PreimageMode, guard: usize) -> Self {
        Self { phi, mode, guard }
    }

    pub fn functional(&self) -> &SharedFunctional {
        &self.phi
    }
}

impl MeasureOracle for InducedMeasure {
    fn approx(&self, sigma: &BitString, _precision: u32) -> Result<DyadicRational, MeasureError> {
        induced_measure(self.phi.as_ref(), sigma, self.mode, self.guard)
            .map_err(|e| MeasureError::Oracle(e.to_string()))
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("induced {}", self.phi.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Monotonicity {
        shorter: BitString,
        shorter_out: BitString,
        longer: BitString,
        longer_out: BitString,
    },
    UseBound {
        n: usize,
        input: BitString,
        output: BitString,
    },
    UseBoundDecreasing {
        n: usize,
        at_n: usize,
        at_next: usize,
    },
    NoUseBound {
        n: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Monotonicity {
                shorter,
                shorter_out,
                longer,
                longer_out,
            } => write!(
                f,
                "monotonicity\t{shorter} -> {shorter_out}\t{longer} -> {longer_out}"
            ),
            Violation::UseBound { n, input, output } => {
                write!(f, "use-bound\tn={n}\t{input} -> {output}")
            }
            Violation::UseBoundDecreasing { n, at_n, at_next } => {
                write!(f, "use-bound-decreasing\tuse({n})={at_n}\tuse({})={at_next}", n + 1)
            }
            Violation::NoUseBound { n } => write!(f, "no-use-bound\tn={n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub functional: String,
    pub depth: usize,
    pub checked_inputs: usize,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "functional\t{}", self.functional)?;
        writeln!(f, "depth\t{}\tinputs\t{}", self.depth, self.checked_inputs)?;
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        writeln!(
            f,
            "{}",
            if self.is_clean() {
                "clean".to_string()
            } else {
                format!("violations\t{}", self.violations.len())
            }
        )
    }
}

/// Checks every parent/child pair of inputs up to `depth` for monotonicity
/// (which gives monotonicity on all prefix pairs), the use-bound promise for
/// every `n` with `use_bound(n) ≤ depth`, and that the use bound never
/// decreases on that range.
pub fn tt_verify(phi: &dyn Functional, depth: usize) -> VerifyReport {
    let mut violations = Vec::new();
    let mut outputs: Vec<BitString> = vec![phi.step(&BitString::empty())];
    let mut checked = 1;
    for len in 1..=depth {
        let mut next = Vec::with_capacity(outputs.len() * 2);
        for (j, parent_out) in outputs.iter().enumerate() {
            let parent = BitString::from_index(j as u64, len - 1);
            for bit in [false, true] {
                let child = parent.child(bit);
                let out = phi.step(&child);
                if !parent_out.is_prefix_of(&out) {
                    violations.push(Violation::Monotonicity {
                        shorter: parent.clone(),
                        shorter_out: parent_out.clone(),
                        longer: child,
                        longer_out: out.clone(),
                    });
                }
                next.push(out);
            }
        }
        checked += next.len();
        outputs_check_use(phi, len, &next, &mut violations);
        outputs = next;
    }
    if depth == 0 {
        outputs_check_use(phi, 0, &outputs, &mut violations);
    }
    let mut n = 0;
    loop {
        match (phi.use_bound(n), phi.use_bound(n + 1)) {
            (None, _) | (_, None) => {
                violations.push(Violation::NoUseBound {
                    n: if phi.use_bound(n).is_none() { n } else { n + 1 },
                });
                break;
            }
            (Some(a), Some(b)) => {
                if b < a {
                    violations.push(Violation::UseBoundDecreasing {
                        n,
                        at_n: a,
                        at_next: b,
                    });
                }
                if a > depth || n > depth + 1 {
                    break;
                }
            }
        }
        n += 1;
    }
    VerifyReport {
        functional: phi.name(),
        depth,
        checked_inputs: checked,
        violations,
    }
}

/// Inputs of length exactly `len` owe `n` bits for every `n` with `use(n) = len`
/// or smaller; checking the largest such `n` covers the rest.
fn outputs_check_use(
    phi: &dyn Functional,
    len: usize,
    outputs: &[BitString],
    violations: &mut Vec<Violation>,
) {
    let mut promised = None;
    let mut n = 0;
    while let Some(u) = phi.use_bound(n) {
        if u > len || n > len + outputs.iter().map(|o| o.len()).max().unwrap_or(0) + 1 {
            break;
        }
        promised = Some(n);
        n += 1;
    }
    let Some(n) = promised else { return };
    for (j, out) in outputs.iter().enumerate() {
        if out.len() < n {
            violations.push(Violation::UseBound {
                n,
                input: BitString::from_index(j as u64, len),
                output: out.clone(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{check_additivity, lebesgue};
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn d(s: &str) -> DyadicRational {
        s.parse().unwrap()
    }

    struct Flipper;

    impl Functional for Flipper {
        fn step(&self, rho: &BitString) -> BitString {
            // answers 0 on even lengths and 1 on odd ones
            BitString::repeat(rho.len() % 2 == 1, rho.len().min(1))
        }
        fn use_bound(&self, n: usize) -> Option<usize> {
            Some(n)
        }
        fn name(&self) -> String {
            "flipper".into()
        }
    }

    struct Lazy;

    impl Functional for Lazy {
        fn step(&self, rho: &BitString) -> BitString {
            rho.truncate(rho.len() / 2)
        }
        fn use_bound(&self, n: usize) -> Option<usize> {
            Some(n)
        }
        fn name(&self) -> String {
            "lazy".into()
        }
    }

    #[test]
    fn apply_examples() {
        assert_eq!(tt_apply(&Identity, &bs("0110")).unwrap(), bs("0110"));
        let zero = Constant("+0".parse().unwrap());
        assert_eq!(tt_apply(&zero, &bs("1011")).unwrap(), bs("0000"));
        assert_eq!(tt_apply(&ProjectEven, &bs("10")).unwrap(), bs("1"));
    }

    #[test]
    fn apply_rejects_bad_functionals() {
        assert!(matches!(
            tt_apply(&Flipper, &bs("00")),
            Err(FunctionalError::Monotonicity { .. })
        ));
        assert!(matches!(
            tt_apply(&Lazy, &bs("0000")),
            Err(FunctionalError::UseBound { required: 4, output_len: 2, .. })
        ));
    }

    #[test]
    fn induced_examples() {
        for mode in [PreimageMode::Pruned, PreimageMode::Enumerate] {
            for s in BitString::all_shorter_than(9) {
                assert_eq!(induced_measure(&Identity, &s, mode, 24).unwrap(), lebesgue(&s));
            }
            let zero = Constant("+0".parse().unwrap());
            assert_eq!(induced_measure(&zero, &bs("000"), mode, 24).unwrap(), d("1"));
            assert_eq!(induced_measure(&zero, &bs("010"), mode, 24).unwrap(), d("0"));
            assert_eq!(induced_measure(&ProjectEven, &bs("1"), mode, 24).unwrap(), d("1/2"));
        }
    }

    #[test]
    fn identity_matches_lebesgue_to_depth_12() {
        let mu = InducedMeasure::new(Arc::new(Identity), PreimageMode::Pruned, 24);
        for s in BitString::all_shorter_than(13) {
            assert_eq!(mu.approx(&s, 0).unwrap(), lebesgue(&s));
        }
    }

    #[test]
    fn guard_applies_to_enumeration() {
        let err = induced_measure(&ProjectEven, &bs("0000000"), PreimageMode::Enumerate, 10);
        assert_eq!(
            err,
            Err(FunctionalError::GuardExceeded {
                use_bound: 14,
                guard: 10
            })
        );
    }

    #[test]
    fn verify_reports() {
        assert!(tt_verify(&Identity, 6).is_clean());
        assert!(tt_verify(&ProjectEven, 6).is_clean());
        let r = tt_verify(&Flipper, 3);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Monotonicity { .. })));
        let r = tt_verify(&Lazy, 3);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::UseBound { .. })));
    }

    #[test]
    fn composition() {
        let c = Compose::new(Arc::new(ProjectEven), Arc::new(ProjectEven));
        assert_eq!(c.use_bound(3), Some(12));
        assert_eq!(tt_apply(&c, &bs("10001000")).unwrap(), bs("11"));
        assert!(tt_verify(&c, 8).is_clean());
        assert_eq!(
            induced_measure(&c, &bs("1"), PreimageMode::Pruned, 24).unwrap(),
            d("1/2")
        );
    }

    #[test]
    fn builtins_resolve() {
        assert_eq!(builtin("identity").unwrap().name(), "identity");
        assert_eq!(builtin("constant 1+0").unwrap().name(), "constant 1+0");
        assert!(builtin("constant").is_none());
        assert!(builtin("bogus").is_none());
    }

    #[test]
    fn truth_table_parse_and_step() {
        let t = TruthTable::parse("table\nuse: 2\n00 -> 1\n01 -> 10\n10 -> ε\n11 -> 111\n").unwrap();
        assert_eq!(t.step(&bs("01")), bs("10"));
        assert_eq!(t.step(&bs("0111")), bs("1000"));
        assert_eq!(t.step(&bs("11")), bs("111"));
        assert_eq!(t.step(&bs("10")), bs("00"));
        assert_eq!(t.step(&bs("0")), bs("10"));
        assert_eq!(t.step(&bs("1")), bs(""));
        assert!(tt_verify(&t, 6).is_clean());
        assert!(TruthTable::parse("use: 1\n0 -> 1\n").is_err());
        assert!(TruthTable::parse("0 -> 1\n").is_err());
        assert!(TruthTable::parse("use: 1\n0 -> 1\n0 -> 0\n1 -> 1\n").is_err());
        assert!(TruthTable::parse("use: 1\n0 -> 1\n11 -> 0\n").is_err());
    }

    fn random_table() -> impl Strategy<Value = TruthTable> {
        (0usize..=6).prop_flat_map(|depth| {
            prop::collection::vec(prop::collection::vec(any::<bool>(), 0..9), 1 << depth)
                .prop_map(move |rows| {
                    TruthTable::new(depth, rows.into_iter().map(BitString::from_bits).collect())
                })
        })
    }

    /// Counts the rows whose padded output starts with σ.
    fn table_oracle(t: &TruthTable, sigma: &BitString) -> DyadicRational {
        let hits = t
            .rows()
            .filter(|(_, tau)| {
                (0..sigma.len()).all(|i| sigma.get(i) == Some(tau.get(i).unwrap_or(false)))
            })
            .count();
        DyadicRational::new(hits as i64, t.depth() as u32)
    }

    proptest! {
        #[test]
        fn random_tables_satisfy_contract(t in random_table()) {
            prop_assert!(tt_verify(&t, t.depth() + 3).is_clean());
        }

        #[test]
        fn induced_matches_preimage_count(t in random_table(), sigma in prop::collection::vec(any::<bool>(), 0..8)) {
            let sigma = BitString::from_bits(sigma);
            let expected = table_oracle(&t, &sigma);
            prop_assert_eq!(induced_measure(&t, &sigma, PreimageMode::Pruned, 24).unwrap(), expected.clone());
            prop_assert_eq!(induced_measure(&t, &sigma, PreimageMode::Enumerate, 24).unwrap(), expected);
        }

        #[test]
        fn induced_is_a_probability_measure(t in random_table()) {
            let mu = InducedMeasure::new(Arc::new(t), PreimageMode::Pruned, 24);
            prop_assert!(check_additivity(&mu, 6, 0).unwrap().is_clean());
            for k in 0..6 {
                let total: DyadicRational = BitString::all_of_length(k).map(|s| mu.approx(&s, 0).unwrap()).sum();
                prop_assert_eq!(total, DyadicRational::one());
            }
        }
    }
}
