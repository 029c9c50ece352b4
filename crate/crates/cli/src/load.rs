//! Reading inputs named on the command line.

use std::fs;
use std::sync::Arc;

use trivmeas::approximation::MutationSchedule;
use trivmeas::functionals::{self, InducedMeasure, PreimageMode, SharedFunctional, TruthTable};
use trivmeas::lattice::FiniteLattice;
use trivmeas::measures::{Lebesgue, PointMass, SharedMeasure};
use trivmeas::mltests::{self, ListedTest, StagedTest};
use trivmeas::tally::{make_phi_a, make_psi, tally_induced_measure, TallyMode};
use trivmeas::{BitString, DyadicRational, EventuallyPeriodic};

pub type CliResult<T> = Result<T, String>;

pub fn read(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
}

pub fn lattice(path: &str) -> CliResult<FiniteLattice> {
    read(path)?.parse().map_err(|e| format!("{path}: {e}"))
}

pub fn schedule(path: &str) -> CliResult<MutationSchedule> {
    read(path)?.parse().map_err(|e| format!("{path}: {e}"))
}

pub fn bits(text: &str) -> CliResult<BitString> {
    if text == "ε" || text.is_empty() {
        return Ok(BitString::empty());
    }
    text.parse().map_err(|e| format!("`{text}`: {e}"))
}

pub fn pattern(text: &str) -> CliResult<EventuallyPeriodic> {
    text.parse().map_err(|e| format!("`{text}`: {e}"))
}

pub fn dyadic(text: &str) -> CliResult<DyadicRational> {
    text.parse().map_err(|e| format!("`{text}`: {e}"))
}

/// `identity`, `project-even`, `constant <pattern>`, `tally <schedule>`,
/// `tally-psi <schedule>`, or the path of a truth-table file.
pub fn functional(spec: &str) -> CliResult<SharedFunctional> {
    if let Some(f) = functionals::builtin(spec) {
        return Ok(f);
    }
    if let Some(path) = spec.strip_prefix("tally-psi ") {
        return Ok(Arc::new(make_psi(schedule(path.trim())?)));
    }
    if let Some(path) = spec.strip_prefix("tally ") {
        return Ok(Arc::new(make_phi_a(schedule(path.trim())?)));
    }
    let table = TruthTable::parse(&read(spec)?).map_err(|e| format!("{spec}: {e}"))?;
    Ok(Arc::new(table))
}

/// `lebesgue`, `point:<pattern>`, `functional:<functional>`,
/// `tally:<schedule>` or `tally-psi:<schedule>`.
pub fn measure(spec: &str, guard_bits: usize) -> CliResult<SharedMeasure> {
    if spec == "lebesgue" {
        return Ok(Arc::new(Lebesgue));
    }
    if let Some(p) = spec.strip_prefix("point:") {
        return Ok(Arc::new(PointMass::new(pattern(p)?)));
    }
    if let Some(f) = spec.strip_prefix("functional:") {
        return Ok(Arc::new(InducedMeasure::new(
            functional(f)?,
            PreimageMode::Pruned,
            guard_bits,
        )));
    }
    for (prefix, mode) in [("tally:", TallyMode::Phi), ("tally-psi:", TallyMode::Psi)] {
        if let Some(path) = spec.strip_prefix(prefix) {
            let m = tally_induced_measure(&schedule(path)?, mode, guard_bits).map_err(|e| e.to_string())?;
            return Ok(Arc::new(m));
        }
    }
    Err(format!(
        "unknown measure `{spec}` (expected lebesgue, point:<pattern>, functional:<spec>, tally:<file> or tally-psi:<file>)"
    ))
}

/// A builtin test name or the path of a listed test.
pub fn test(spec: &str) -> CliResult<Arc<dyn StagedTest>> {
    if let Some(t) = mltests::builtin(spec) {
        return Ok(Arc::from(t));
    }
    let t: ListedTest = read(spec)?.parse().map_err(|e| format!("{spec}: {e}"))?;
    Ok(Arc::new(t))
}
