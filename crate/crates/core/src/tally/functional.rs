//! The schedule-driven tally functionals `Φ_A` and `Ψ` as prefix maps.

use crate::approximation::{theta_of_prefix, MutationSchedule, TallyValue};
use crate::bits::BitString;
use crate::functionals::Functional;

use super::predicate::ScheduleMatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TallyMode {
    /// `Φ_A(X) = 1^{θ(X,0)} 0 1^{θ(X,1)} 0 …`.
    Phi,
    /// `Ψ(X ⊕ Y) = y_0^{θ(X,0)} y_1^{θ(X,1)} …`.
    Psi,
}

/// A tally functional for `Θ(X, n, s) ⟺ X↾n = A_s↾n`.
#[derive(Debug, Clone)]
pub struct TallyFunctional {
    sched: MutationSchedule,
    mode: TallyMode,
}

pub fn make_phi_a(sched: MutationSchedule) -> TallyFunctional {
    TallyFunctional {
        sched,
        mode: TallyMode::Phi,
    }
}

pub fn make_psi(sched: MutationSchedule) -> TallyFunctional {
    TallyFunctional {
        sched,
        mode: TallyMode::Psi,
    }
}

impl TallyFunctional {
    pub fn schedule(&self) -> &MutationSchedule {
        &self.sched
    }

    pub fn mode(&self) -> TallyMode {
        self.mode
    }

    pub fn predicate(&self) -> ScheduleMatch {
        ScheduleMatch {
            sched: self.sched.clone(),
        }
    }

    fn phi_step(&self, rho: &BitString) -> BitString {
        let len = rho.len();
        let mut out = BitString::empty();
        for n in 0..=len {
            match theta_of_prefix(&self.sched, &rho.truncate(n)) {
                TallyValue::Finite(t) => {
                    out.extend_from(&BitString::repeat(true, t));
                    out.push(false);
                }
                _ => {
                    while out.len() < len + 1 {
                        out.push(true);
                    }
                    break;
                }
            }
        }
        out
    }

    fn psi_step(&self, rho: &BitString) -> BitString {
        let len = rho.len();
        let x = BitString::from_bits(rho.bits().iter().step_by(2).copied().collect());
        let y = BitString::from_bits(rho.bits().iter().skip(1).step_by(2).copied().collect());
        let mut out = BitString::empty();
        for i in 0..=x.len() {
            match theta_of_prefix(&self.sched, &x.truncate(i)) {
                TallyValue::Finite(0) => {}
                TallyValue::Finite(t) => match y.get(i) {
                    Some(b) => out.extend_from(&BitString::repeat(b, t)),
                    None => break,
                },
                _ => {
                    if let Some(b) = y.get(i) {
                        while out.len() < len {
                            out.push(b);
                        }
                    }
                    break;
                }
            }
        }
        out
    }
}

impl Functional for TallyFunctional {
    fn step(&self, rho: &BitString) -> BitString {
        match self.mode {
            TallyMode::Phi => self.phi_step(rho),
            TallyMode::Psi => self.psi_step(rho),
        }
    }

    /// `Φ_A`: block `n` is decided by `X↾n` and contributes at least one
    /// bit, so `n` input bits yield `n+1` output bits.
    /// `Ψ` has no use bound: on `A_0 ⊕ Y` every block is empty.
    fn use_bound(&self, n: usize) -> Option<usize> {
        match self.mode {
            TallyMode::Phi => Some(n.saturating_sub(1)),
            TallyMode::Psi => None,
        }
    }

    fn name(&self) -> String {
        match self.mode {
            TallyMode::Phi => "tally-phi".into(),
            TallyMode::Psi => "tally-psi".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::EventuallyPeriodic;
    use crate::functionals::{tt_apply, tt_verify};
    use crate::tally::{tally_output, tally_output_filled};

    fn ep(s: &str) -> EventuallyPeriodic {
        s.parse().unwrap()
    }

    fn two_stage() -> MutationSchedule {
        "base: +0\nstage 1: flip 0\n".parse().unwrap()
    }

    #[test]
    fn phi_steps() {
        let phi = make_phi_a(two_stage());
        assert_eq!(tt_apply(&phi, &ep("1+0").take(2)).unwrap().to_string(), "01010");
        assert_eq!(tt_apply(&phi, &ep("01+0").take(2)).unwrap().to_string(), "001");
        assert_eq!(tt_apply(&phi, &ep("01+0").take(6)).unwrap().to_string(), "0011111");
        assert_eq!(phi.step(&BitString::empty()).to_string(), "0");
        assert!(tt_verify(&phi, 10).is_clean());
    }

    #[test]
    fn phi_step_agrees_with_engine() {
        let sched: MutationSchedule = "base: 1+01\nstage 1: flip 2\nstage 2: flip 0 3\nstage 4: flip 2\n"
            .parse()
            .unwrap();
        let phi = make_phi_a(sched.clone());
        assert!(tt_verify(&phi, 9).is_clean());
        for x in ["+0", "1+01", "0+1", "110+1", "0101+10"] {
            let x = ep(x);
            let engine = tally_output(&phi.predicate(), &x, 9, 64).unwrap();
            let stepped = phi.step(&x.take(8));
            let rendered = &engine.rendered;
            let common = rendered.len().min(stepped.len());
            assert_eq!(rendered.truncate(common), stepped.truncate(common));
        }
    }

    #[test]
    fn psi_steps() {
        let psi = make_psi(two_stage());
        let input = EventuallyPeriodic::interleave(&[&ep("1+0"), &ep("+1")]);
        assert_eq!(psi.step(&input.take(8)).to_string(), "111");
        let input = EventuallyPeriodic::interleave(&[&ep("01+0"), &ep("+10")]);
        assert_eq!(psi.step(&input.take(6)).to_string(), "111111");
        let input = EventuallyPeriodic::interleave(&[&ep("+0"), &ep("+1")]);
        assert!(psi.step(&input.take(20)).is_empty());
        assert_eq!(psi.use_bound(3), None);
        let report = tt_verify(&psi, 10);
        assert!(report
            .violations
            .iter()
            .all(|v| matches!(v, crate::functionals::Violation::NoUseBound { .. })));
    }

    #[test]
    fn psi_with_ones_drops_the_separators() {
        let sched = two_stage();
        for x in ["1+0", "+0", "01+0", "11+0", "0+1"] {
            let x = ep(x);
            let phi = tally_output(&make_phi_a(sched.clone()).predicate(), &x, 6, 64).unwrap();
            let psi = tally_output_filled(&make_psi(sched.clone()).predicate(), &x, &ep("+1"), 6, 64)
                .unwrap();
            assert_eq!(phi.blocks, psi.blocks);
            let stripped: Vec<bool> = phi.rendered.bits().iter().copied().filter(|&b| b).collect();
            assert_eq!(psi.rendered.bits(), stripped.as_slice());
        }
    }
}
