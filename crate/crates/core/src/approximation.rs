//! Finite-change approximations `A_0, A_1, …, A_T` given as bit-flip
//! events, the matching-stage search θ, and classification of inputs
//! against a schedule.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bits::{BitSource, BitString, EventuallyPeriodic};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("stage {stage} does not come after stage {previous}")]
    StageOrder { stage: usize, previous: usize },
    #[error("stage numbers start at 1")]
    StageZero,
    #[error("stage {0} flips no bits")]
    EmptyFlip(usize),
    #[error("stage {stage} flips position {position} twice")]
    RepeatedFlip { stage: usize, position: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApproxError {
    #[error("input has {have} bits but {needed} are required")]
    InputTooShort { needed: usize, have: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlipEvent {
    pub stage: usize,
    pub positions: Vec<usize>,
}

/// `A_0 = base`; each event flips its positions in the previous
/// approximation. Stages without an event repeat the previous one, and
/// `A_s = A_T` for every `s ≥ T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationSchedule {
    base: EventuallyPeriodic,
    events: Vec<FlipEvent>,
    approximations: Vec<EventuallyPeriodic>,
}

impl MutationSchedule {
    pub fn new(base: EventuallyPeriodic, events: Vec<FlipEvent>) -> Result<Self, ScheduleError> {
        let mut previous = 0;
        for e in &events {
            if e.stage == 0 {
                return Err(ScheduleError::StageZero);
            }
            if e.stage <= previous {
                return Err(ScheduleError::StageOrder {
                    stage: e.stage,
                    previous,
                });
            }
            if e.positions.is_empty() {
                return Err(ScheduleError::EmptyFlip(e.stage));
            }
            let mut sorted = e.positions.clone();
            sorted.sort_unstable();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(ScheduleError::RepeatedFlip {
                    stage: e.stage,
                    position: w[0],
                });
            }
            previous = e.stage;
        }
        let mut approximations = vec![base.clone()];
        for e in &events {
            let last = approximations.last().cloned().unwrap_or_else(|| base.clone());
            while approximations.len() < e.stage {
                approximations.push(last.clone());
            }
            approximations.push(last.flip(&e.positions));
        }
        Ok(Self {
            base,
            events,
            approximations,
        })
    }

    /// The schedule with no events: `A = A_0 = base`.
    pub fn constant(base: EventuallyPeriodic) -> Self {
        Self::new(base, Vec::new()).expect("an empty schedule is valid")
    }

    pub fn base(&self) -> &EventuallyPeriodic {
        &self.base
    }

    pub fn events(&self) -> &[FlipEvent] {
        &self.events
    }

    /// `T`, the stage of the last event (0 when there are none).
    pub fn horizon(&self) -> usize {
        self.approximations.len() - 1
    }

    /// `A_s`; stages past the horizon return the limit.
    pub fn stage(&self, s: usize) -> &EventuallyPeriodic {
        &self.approximations[s.min(self.horizon())]
    }

    pub fn stages(&self) -> &[EventuallyPeriodic] {
        &self.approximations
    }

    /// `A = A_T`.
    pub fn limit(&self) -> &EventuallyPeriodic {
        self.stage(self.horizon())
    }

    /// One past the largest flipped position. All approximations agree
    /// with one another at every position from here on.
    pub fn decision_depth(&self) -> usize {
        self.events
            .iter()
            .flat_map(|e| e.positions.iter())
            .map(|&p| p + 1)
            .max()
            .unwrap_or(0)
    }

    /// Interleaves `parts` bitwise: `A_s` of the result is the interleaving
    /// of the parts' `A_s`, and every part event at stage `s` becomes an
    /// event at stage `s` of the result.
    pub fn interleave(parts: &[&MutationSchedule]) -> Self {
        assert!(!parts.is_empty());
        let m = parts.len();
        let bases: Vec<&EventuallyPeriodic> = parts.iter().map(|p| &p.base).collect();
        let base = EventuallyPeriodic::interleave(&bases);
        let mut by_stage: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (j, part) in parts.iter().enumerate() {
            for e in &part.events {
                by_stage
                    .entry(e.stage)
                    .or_default()
                    .extend(e.positions.iter().map(|&p| p * m + j));
            }
        }
        let events = by_stage
            .into_iter()
            .map(|(stage, mut positions)| {
                positions.sort_unstable();
                FlipEvent { stage, positions }
            })
            .collect();
        Self::new(base, events).expect("interleaving preserves validity")
    }
}

impl FromStr for MutationSchedule {
    type Err = ScheduleError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |line: usize, message: String| ScheduleError::Parse { line, message };
        let mut base: Option<EventuallyPeriodic> = None;
        let mut events = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line == "schedule" {
                continue;
            }
            if let Some(rest) = line.strip_prefix("base:") {
                base = Some(
                    rest.trim()
                        .parse()
                        .map_err(|e| err(line_no, format!("{e}")))?,
                );
                continue;
            }
            let Some(rest) = line.strip_prefix("stage") else {
                return Err(err(line_no, format!("unrecognized line `{line}`")));
            };
            let (stage, flips) = rest
                .split_once(':')
                .ok_or_else(|| err(line_no, "expected `stage s: flip p ...`".into()))?;
            let stage: usize = stage
                .trim()
                .parse()
                .map_err(|e| err(line_no, format!("bad stage number: {e}")))?;
            let flips = flips.trim();
            let list = flips
                .strip_prefix("flip")
                .ok_or_else(|| err(line_no, format!("expected `flip`, got `{flips}`")))?;
            let positions = list
                .split_whitespace()
                .map(|p| p.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(line_no, format!("bad position: {e}")))?;
            events.push(FlipEvent { stage, positions });
        }
        let base = base.ok_or_else(|| err(0, "missing `base:` line".into()))?;
        MutationSchedule::new(base, events)
    }
}

impl fmt::Display for MutationSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "schedule")?;
        writeln!(f, "base: {}", self.base)?;
        for e in &self.events {
            let ps: Vec<String> = e.positions.iter().map(|p| p.to_string()).collect();
            writeln!(f, "stage {}: flip {}", e.stage, ps.join(" "))?;
        }
        Ok(())
    }
}

/// A θ value: a stage, a certified `+∞`, or a search cut off by a budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TallyValue {
    Finite(usize),
    Infinite,
    Unknown(usize),
}

impl TallyValue {
    pub fn finite(self) -> Option<usize> {
        match self {
            TallyValue::Finite(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for TallyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TallyValue::Finite(s) => write!(f, "{s}"),
            TallyValue::Infinite => write!(f, "inf"),
            TallyValue::Unknown(b) => write!(f, "unknown({b})"),
        }
    }
}

/// The least `s ≤ T` with `X↾n = A_s↾n`, or `Infinite` when there is none.
pub fn theta(
    sched: &MutationSchedule,
    x: &dyn BitSource,
    n: usize,
) -> Result<TallyValue, ApproxError> {
    let prefix = x.read(n).ok_or(ApproxError::InputTooShort {
        needed: n,
        have: x.finite_len().unwrap_or(0),
    })?;
    Ok(theta_of_prefix(sched, &prefix))
}

/// θ with `n = |prefix|`.
pub fn theta_of_prefix(sched: &MutationSchedule, prefix: &BitString) -> TallyValue {
    sched
        .stages()
        .iter()
        .position(|a| a.take(prefix.len()) == *prefix)
        .map_or(TallyValue::Infinite, TallyValue::Finite)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputCase {
    /// `X = A_s` for some `s < T`; θ(X, n) equals `s` for every `n ≥ m`.
    Case1 { stage: usize, stable_from: usize },
    /// `X` differs from every `A_s`; θ(X, n) is `Infinite` from `n = witness` on.
    Case2 { witness: usize },
    /// `X` is the limit `A_T` and no earlier approximation.
    Case3,
}

impl fmt::Display for InputCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputCase::Case1 { stage, stable_from } => {
                write!(f, "case1 stage={stage} stable_from={stable_from}")
            }
            InputCase::Case2 { witness } => write!(f, "case2 witness={witness}"),
            InputCase::Case3 => write!(f, "case3"),
        }
    }
}

/// Classifies `X` by the least stage it equals. A limit that repeats an
/// earlier approximation is reported under that earlier stage.
pub fn classify_input(sched: &MutationSchedule, x: &EventuallyPeriodic) -> InputCase {
    let stages = sched.stages();
    match stages.iter().position(|a| a == x) {
        Some(s) if s < sched.horizon() => {
            // past the decision depth θ(X, n) is already s
            let depth = sched.decision_depth();
            let mut stable_from = depth;
            while stable_from > 0
                && theta_of_prefix(sched, &x.take(stable_from - 1)) == TallyValue::Finite(s)
            {
                stable_from -= 1;
            }
            InputCase::Case1 {
                stage: s,
                stable_from,
            }
        }
        Some(_) => InputCase::Case3,
        None => {
            let reach = stages
                .iter()
                .filter_map(|a| a.first_difference(x))
                .max()
                .map_or(0, |p| p + 1);
            let witness = (0..=reach)
                .find(|&n| theta_of_prefix(sched, &x.take(n)) == TallyValue::Infinite)
                .expect("every approximation differs from X before `reach`");
            InputCase::Case2 { witness }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ep(s: &str) -> EventuallyPeriodic {
        s.parse().unwrap()
    }

    fn two_stage() -> MutationSchedule {
        "schedule\nbase: +0\nstage 1: flip 0\n".parse().unwrap()
    }

    fn three_stage() -> MutationSchedule {
        "base: +0\nstage 1: flip 0\nstage 2: flip 1\n".parse().unwrap()
    }

    #[test]
    fn parse_and_render() {
        let s: MutationSchedule = "schedule\nbase: 101+10  # comment\nstage 1: flip 0\nstage 3: flip 3 5\n"
            .parse()
            .unwrap();
        assert_eq!(s.horizon(), 3);
        assert_eq!(s.stage(2), s.stage(1));
        assert_eq!(s.stage(3).take(7).to_string(), "0010000");
        assert_eq!(s.stage(99), s.limit());
        assert_eq!(s.to_string().parse::<MutationSchedule>().unwrap(), s);
        assert_eq!(s.decision_depth(), 6);
    }

    #[test]
    fn parse_errors() {
        let bad = [
            "stage 1: flip 0\n",
            "base: +0\nstage 0: flip 1\n",
            "base: +0\nstage 2: flip 1\nstage 2: flip 3\n",
            "base: +0\nstage 1: flip\n",
            "base: +0\nstage 1: flip 2 2\n",
            "base: 0\n",
            "base: +0\nstage x: flip 1\n",
            "base: +0\nflip 1\n",
        ];
        for text in bad {
            assert!(text.parse::<MutationSchedule>().is_err(), "{text:?}");
        }
    }

    #[test]
    fn theta_examples() {
        let s = two_stage();
        assert_eq!(theta(&s, &ep("1+0"), 1).unwrap(), TallyValue::Finite(1));
        for n in 0..10 {
            assert_eq!(theta(&s, &ep("+0"), n).unwrap(), TallyValue::Finite(0));
        }
        assert_eq!(theta(&s, &ep("01+0"), 2).unwrap(), TallyValue::Infinite);
        let short: BitString = "1".parse().unwrap();
        assert_eq!(
            theta(&s, &short, 3),
            Err(ApproxError::InputTooShort { needed: 3, have: 1 })
        );
    }

    #[test]
    fn classify_examples() {
        let s = three_stage();
        assert_eq!(
            classify_input(&s, &ep("1+0")),
            InputCase::Case1 {
                stage: 1,
                stable_from: 1
            }
        );
        assert_eq!(
            classify_input(&s, &ep("+0")),
            InputCase::Case1 {
                stage: 0,
                stable_from: 0
            }
        );
        assert_eq!(classify_input(&s, &ep("11+0")), InputCase::Case3);
        assert_eq!(classify_input(&two_stage(), &ep("01+0")), InputCase::Case2 { witness: 2 });
        assert_eq!(classify_input(&two_stage(), &ep("1+0")), InputCase::Case3);
    }

    #[test]
    fn reverting_limit_reports_earlier_stage() {
        let s: MutationSchedule = "base: +0\nstage 1: flip 2\nstage 2: flip 2\n".parse().unwrap();
        assert_eq!(s.limit(), s.stage(0));
        assert_eq!(
            classify_input(&s, &ep("+0")),
            InputCase::Case1 {
                stage: 0,
                stable_from: 0
            }
        );
    }

    #[test]
    fn interleaving_schedules() {
        let a = two_stage();
        let b: MutationSchedule = "base: +1\nstage 2: flip 1\n".parse().unwrap();
        let c = MutationSchedule::interleave(&[&a, &b]);
        for s in 0..4 {
            let expect = EventuallyPeriodic::interleave(&[a.stage(s), b.stage(s)]);
            assert_eq!(c.stage(s), &expect);
        }
    }

    pub(crate) fn arb_pattern() -> impl Strategy<Value = EventuallyPeriodic> {
        (
            prop::collection::vec(any::<bool>(), 0..5),
            prop::collection::vec(any::<bool>(), 1..4),
        )
            .prop_map(|(p, q)| EventuallyPeriodic::new(BitString::from_bits(p), BitString::from_bits(q)))
    }

    pub(crate) fn arb_schedule() -> impl Strategy<Value = MutationSchedule> {
        (
            arb_pattern(),
            prop::collection::vec(prop::collection::btree_set(0usize..8, 1..3), 0..5),
        )
            .prop_map(|(base, flips)| {
                let events = flips
                    .into_iter()
                    .enumerate()
                    .map(|(k, set)| FlipEvent {
                        stage: k + 1,
                        positions: set.into_iter().collect(),
                    })
                    .collect();
                MutationSchedule::new(base, events).unwrap()
            })
    }

    proptest! {
        #[test]
        fn earlier_stages_stabilize(sched in arb_schedule()) {
            for s in 0..sched.horizon() {
                let x = sched.stage(s).clone();
                match classify_input(&sched, &x) {
                    InputCase::Case1 { stage, stable_from } => {
                        prop_assert!(stage <= s);
                        for n in stable_from..stable_from + 20 {
                            prop_assert_eq!(theta(&sched, &x, n).unwrap(), TallyValue::Finite(stage));
                        }
                        if stable_from > 0 {
                            prop_assert_ne!(theta(&sched, &x, stable_from - 1).unwrap(), TallyValue::Finite(stage));
                        }
                    }
                    other => prop_assert!(false, "stage {} classified as {}", s, other),
                }
            }
        }

        #[test]
        fn escaping_inputs_are_refuted_for_good(sched in arb_schedule(), x in arb_pattern()) {
            if let InputCase::Case2 { witness } = classify_input(&sched, &x) {
                prop_assert!(sched.stages().iter().all(|a| a != &x));
                let bound = sched.stages().iter().filter_map(|a| a.first_difference(&x)).max().unwrap() + 1;
                prop_assert!(witness <= bound);
                prop_assert_ne!(theta(&sched, &x, witness.saturating_sub(1)).unwrap(), TallyValue::Infinite);
                for n in witness..witness + 20 {
                    prop_assert_eq!(theta(&sched, &x, n).unwrap(), TallyValue::Infinite);
                }
            }
        }

        #[test]
        fn theta_along_the_limit_is_nondecreasing(sched in arb_schedule()) {
            let a = sched.limit().clone();
            let mut last = 0;
            for n in 0..sched.decision_depth() + 4 {
                let v = theta(&sched, &a, n).unwrap().finite().unwrap();
                prop_assert!(v >= last);
                // no later than the last stage at which A↾n changed
                let last_change = (1..=sched.horizon())
                    .filter(|&s| sched.stage(s).take(n) != sched.stage(s - 1).take(n))
                    .max()
                    .unwrap_or(0);
                prop_assert!(v <= last_change);
                last = v;
            }
        }
    }
}
