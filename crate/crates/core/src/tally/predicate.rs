//! Decidable predicates `Θ(X, n, s)` and the least-stage search over them.

use std::sync::Arc;

use crate::approximation::{MutationSchedule, TallyValue};
use crate::bits::{BitSource, BitString};
use crate::mltests::StagedTest;

use super::TallyError;

/// Outcome of evaluating a predicate on a finite prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eval {
    Holds,
    Fails,
    /// The prefix is too short; retry with at least this many bits.
    NeedsLonger(usize),
}

pub trait ThetaPredicate: Send + Sync {
    /// Must depend only on the supplied prefix, and a decided answer must
    /// not change when the prefix is extended.
    fn eval(&self, x: &BitString, n: usize, s: usize) -> Result<Eval, TallyError>;

    /// A stage past which `Θ(X, n, ·)` no longer changes, if known.
    fn stage_horizon(&self, n: usize) -> Option<usize>;

    fn name(&self) -> String;
}

/// The least `s` with `Θ(X, n, s)`.
///
/// Stages are searched up to the predicate's horizon or the budget,
/// whichever comes first. `Infinite` is returned only when the horizon was
/// reached without success; a search stopped by the budget is `Unknown`.
pub fn theta_search(
    pred: &dyn ThetaPredicate,
    x: &dyn BitSource,
    n: usize,
    budget: usize,
) -> Result<TallyValue, TallyError> {
    let horizon = pred.stage_horizon(n);
    let last = horizon.map_or(budget, |h| h.min(budget));
    let mut prefix = BitString::empty();
    for s in 0..=last {
        loop {
            match pred.eval(&prefix, n, s)? {
                Eval::Holds => return Ok(TallyValue::Finite(s)),
                Eval::Fails => break,
                Eval::NeedsLonger(len) => {
                    if len <= prefix.len() {
                        return Err(TallyError::Predicate(format!(
                            "{} asked for {len} bits while holding {}",
                            pred.name(),
                            prefix.len()
                        )));
                    }
                    prefix = x.read(len).ok_or(TallyError::InputTooShort {
                        needed: len,
                        have: x.finite_len().unwrap_or(0),
                    })?;
                }
            }
        }
    }
    Ok(match horizon {
        Some(h) if h <= budget => TallyValue::Infinite,
        _ => TallyValue::Unknown(budget),
    })
}

/// `Θ(X, n, s) ⟺ X↾n = A_s↾n`.
#[derive(Debug, Clone)]
pub struct ScheduleMatch {
    pub sched: MutationSchedule,
}

impl ThetaPredicate for ScheduleMatch {
    fn eval(&self, x: &BitString, n: usize, s: usize) -> Result<Eval, TallyError> {
        if x.len() < n {
            return Ok(Eval::NeedsLonger(n));
        }
        Ok(if self.sched.stage(s).take(n) == x.truncate(n) {
            Eval::Holds
        } else {
            Eval::Fails
        })
    }

    fn stage_horizon(&self, _n: usize) -> Option<usize> {
        Some(self.sched.horizon())
    }

    fn name(&self) -> String {
        "schedule-match".into()
    }
}

/// One stage of a Turing functional `Γ` applied to an input prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaValue {
    Converged(bool),
    /// Not (yet) convergent at this stage.
    Diverged,
    NeedsLonger(usize),
}

/// `Γ_s(X)(k)`. Once a value converges it must keep it at later stages.
pub trait StageOracle: Send + Sync {
    fn compute(&self, x: &BitString, k: usize, s: usize) -> GammaValue;
    /// A stage by which every `k < n` has converged or never will.
    fn settled_by(&self, n: usize) -> Option<usize>;
    fn name(&self) -> String;
}

/// `Γ_s(X)(k) = X(k)` once `k < s`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityRead;

impl StageOracle for IdentityRead {
    fn compute(&self, x: &BitString, k: usize, s: usize) -> GammaValue {
        if k >= s {
            return GammaValue::Diverged;
        }
        match x.get(k) {
            Some(b) => GammaValue::Converged(b),
            None => GammaValue::NeedsLonger(k + 1),
        }
    }

    fn settled_by(&self, n: usize) -> Option<usize> {
        Some(n)
    }

    fn name(&self) -> String {
        "identity-read".into()
    }
}

/// `inner`, except that position `at` never converges.
pub struct DivergeAt {
    pub inner: Arc<dyn StageOracle>,
    pub at: usize,
}

impl StageOracle for DivergeAt {
    fn compute(&self, x: &BitString, k: usize, s: usize) -> GammaValue {
        if k == self.at {
            GammaValue::Diverged
        } else {
            self.inner.compute(x, k, s)
        }
    }

    fn settled_by(&self, n: usize) -> Option<usize> {
        self.inner.settled_by(n.min(self.at))
    }

    fn name(&self) -> String {
        format!("{} diverging at {}", self.inner.name(), self.at)
    }
}

/// `Θ(X, n, s) ⟺ (∀k < n) Γ_s(X)(k)↓ = B_s(k)`.
pub struct GammaAgreement {
    pub gamma: Arc<dyn StageOracle>,
    pub target: MutationSchedule,
}

pub fn make_theta_gamma(gamma: Arc<dyn StageOracle>, target: MutationSchedule) -> GammaAgreement {
    GammaAgreement { gamma, target }
}

impl ThetaPredicate for GammaAgreement {
    fn eval(&self, x: &BitString, n: usize, s: usize) -> Result<Eval, TallyError> {
        let b = self.target.stage(s);
        for k in 0..n {
            let now = self.gamma.compute(x, k, s);
            if let GammaValue::NeedsLonger(len) = now {
                return Ok(Eval::NeedsLonger(len));
            }
            if s > 0 {
                match self.gamma.compute(x, k, s - 1) {
                    GammaValue::NeedsLonger(len) => return Ok(Eval::NeedsLonger(len)),
                    GammaValue::Converged(before) if now != GammaValue::Converged(before) => {
                        return Err(TallyError::GammaInconsistent {
                            k,
                            stage: s,
                            before,
                            after: match now {
                                GammaValue::Converged(v) => Some(v),
                                _ => None,
                            },
                        });
                    }
                    _ => {}
                }
            }
            if now != GammaValue::Converged(b.bit(k)) {
                return Ok(Eval::Fails);
            }
        }
        Ok(Eval::Holds)
    }

    fn stage_horizon(&self, n: usize) -> Option<usize> {
        let settled = self.gamma.settled_by(n)?;
        Some(settled.max(self.target.horizon()))
    }

    fn name(&self) -> String {
        format!("gamma-agreement({})", self.gamma.name())
    }
}

/// `Θ(X, n, s) ⟺ (∃k < s) ⟦X↾k⟧ ⊆ U_{n,s}`.
pub struct TestCapture {
    pub test: Arc<dyn StagedTest>,
}

pub fn make_theta_test(test: Arc<dyn StagedTest>) -> TestCapture {
    TestCapture { test }
}

impl ThetaPredicate for TestCapture {
    fn eval(&self, x: &BitString, n: usize, s: usize) -> Result<Eval, TallyError> {
        // ⟦X↾k⟧ ⊆ U exactly when some generator of length ≤ k is a prefix of X
        let stage = self.test.stage(n, s);
        let usable: Vec<&BitString> = stage.generators().filter(|g| g.len() < s).collect();
        if usable
            .iter()
            .any(|g| g.len() <= x.len() && g.is_prefix_of(x))
        {
            return Ok(Eval::Holds);
        }
        match usable.iter().map(|g| g.len()).filter(|&l| l > x.len()).max() {
            Some(len) => Ok(Eval::NeedsLonger(len)),
            None => Ok(Eval::Fails),
        }
    }

    fn stage_horizon(&self, n: usize) -> Option<usize> {
        let h = self.test.horizon(n)?;
        let longest = self
            .test
            .stage(n, h)
            .generators()
            .map(|g| g.len())
            .max()
            .unwrap_or(0);
        Some(h.max(longest + 1))
    }

    fn name(&self) -> String {
        format!("test-capture({})", self.test.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::EventuallyPeriodic;
    use crate::mltests::{capture_stage, CaptureDemo, Zeros};

    fn ep(s: &str) -> EventuallyPeriodic {
        s.parse().unwrap()
    }

    fn zero_target() -> MutationSchedule {
        MutationSchedule::constant(ep("+0"))
    }

    #[test]
    fn schedule_match_engine() {
        let sched: MutationSchedule = "base: +0\nstage 1: flip 0\n".parse().unwrap();
        let p = ScheduleMatch { sched };
        assert_eq!(theta_search(&p, &ep("1+0"), 1, 0).unwrap(), TallyValue::Unknown(0));
        assert_eq!(theta_search(&p, &ep("1+0"), 1, 5).unwrap(), TallyValue::Finite(1));
        assert_eq!(theta_search(&p, &ep("01+0"), 2, 5).unwrap(), TallyValue::Infinite);
        let short: BitString = "0".parse().unwrap();
        assert_eq!(
            theta_search(&p, &short, 2, 5),
            Err(TallyError::InputTooShort { needed: 2, have: 1 })
        );
    }

    #[test]
    fn gamma_identity_read() {
        let p = make_theta_gamma(Arc::new(IdentityRead), zero_target());
        for n in 0..8 {
            assert_eq!(theta_search(&p, &ep("+0"), n, 64).unwrap(), TallyValue::Finite(n));
            for s in 0..10 {
                let holds = p.eval(&ep("+0").take(10), n, s).unwrap() == Eval::Holds;
                assert_eq!(holds, s >= n);
            }
        }
        assert_eq!(theta_search(&p, &ep("+0"), 0, 0).unwrap(), TallyValue::Finite(0));
        // X(1) = 1 never agrees with B = 0^ω
        assert_eq!(theta_search(&p, &ep("01+0"), 3, 64).unwrap(), TallyValue::Infinite);
    }

    #[test]
    fn gamma_divergence() {
        let gamma = Arc::new(DivergeAt {
            inner: Arc::new(IdentityRead),
            at: 1,
        });
        let p = make_theta_gamma(gamma, zero_target());
        assert_eq!(theta_search(&p, &ep("+0"), 1, 64).unwrap(), TallyValue::Finite(1));
        for n in 2..8 {
            for budget in [1, 5, 64] {
                assert_eq!(theta_search(&p, &ep("+0"), n, budget).unwrap(), TallyValue::Infinite);
            }
        }
    }

    #[test]
    fn gamma_inconsistency_is_rejected() {
        struct Fickle;
        impl StageOracle for Fickle {
            fn compute(&self, _x: &BitString, _k: usize, s: usize) -> GammaValue {
                GammaValue::Converged(s % 2 == 1)
            }
            fn settled_by(&self, _n: usize) -> Option<usize> {
                None
            }
            fn name(&self) -> String {
                "fickle".into()
            }
        }
        let p = make_theta_gamma(Arc::new(Fickle), MutationSchedule::constant(ep("+1")));
        assert!(matches!(
            theta_search(&p, &ep("+0"), 1, 10),
            Err(TallyError::GammaInconsistent { k: 0, stage: 1, before: false, after: Some(true) })
        ));
    }

    #[test]
    fn test_capture_examples() {
        let p = make_theta_test(Arc::new(CaptureDemo));
        for n in 0..6 {
            assert_eq!(theta_search(&p, &ep("+0"), n, 64).unwrap(), TallyValue::Finite(n + 2));
            assert_eq!(
                capture_stage(&CaptureDemo, &ep("+0"), n, 64).unwrap(),
                TallyValue::Finite(n + 1)
            );
            assert_eq!(theta_search(&p, &ep("+1"), n, 64).unwrap(), TallyValue::Unknown(64));
        }
        let z = make_theta_test(Arc::new(Zeros));
        assert_eq!(theta_search(&z, &ep("+0"), 3, 64).unwrap(), TallyValue::Finite(4));
        assert_eq!(theta_search(&z, &ep("1+0"), 3, 64).unwrap(), TallyValue::Infinite);
        assert_eq!(theta_search(&z, &ep("1+0"), 3, 2).unwrap(), TallyValue::Unknown(2));
    }
}
