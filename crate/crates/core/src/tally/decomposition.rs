//! Exact induced measures of schedule-driven tally functionals.
//!
//! The input tree is explored only as deep as the schedule's decision
//! depth `P`. A node at level `L` carries the set `M` of stages that agree
//! with the input so far, and block `L` is `min M`. When `M` empties the
//! output is fixed (an escape). Past `P` the stages no longer disagree, so
//! the surviving input either keeps tracking the limit (each further bit
//! with probability 1/2) or escapes at the next bit; that geometric tail
//! is kept in closed form instead of being unrolled.

use std::collections::BTreeMap;
use std::fmt;

use crate::approximation::MutationSchedule;
use crate::bits::{BitString, EventuallyPeriodic};
use crate::dyadic::DyadicRational;
use crate::measures::{MeasureError, MeasureOracle};

use super::{TallyError, TallyMode};

/// A piece of the induced measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Component {
    /// A single atom.
    Atom {
        pattern: EventuallyPeriodic,
        mass: DyadicRational,
    },
    /// Atoms `prefix·(1^run 0)^k·1^ω` of mass `weight·2^-(k+1)`, `k ≥ 0`.
    Chain {
        prefix: BitString,
        run: usize,
        weight: DyadicRational,
    },
    /// Outputs `prefix·c_1^run … c_k^run·b^ω`: `k` is chosen with
    /// probability `2^-(k+1)`, then `c_1 … c_k b` uniformly.
    FreeBlocks {
        prefix: BitString,
        run: usize,
        weight: DyadicRational,
    },
}

impl Component {
    pub fn weight(&self) -> &DyadicRational {
        match self {
            Component::Atom { mass, .. } => mass,
            Component::Chain { weight, .. } | Component::FreeBlocks { weight, .. } => weight,
        }
    }

    /// The component's share of `μ⟦τ⟧`.
    pub fn cylinder(&self, tau: &BitString) -> DyadicRational {
        match self {
            Component::Atom { pattern, mass } => {
                if pattern.take(tau.len()) == *tau {
                    mass.clone()
                } else {
                    DyadicRational::zero()
                }
            }
            Component::Chain {
                prefix,
                run,
                weight,
            } => {
                let Some(rest) = split(prefix, tau) else {
                    return DyadicRational::zero();
                };
                if rest.is_empty() {
                    return weight.clone();
                }
                let r = rest.len();
                let period = *run + 1;
                let big_k = r.div_ceil(period);
                let in_chain = |i: usize| i % period != *run;
                let mut sum = DyadicRational::zero();
                for k in 0..big_k {
                    let fits = rest
                        .iter()
                        .enumerate()
                        .all(|(i, &b)| b == (i >= k * period || in_chain(i)));
                    if fits {
                        sum = &sum + &weight.shr(k as u32 + 1);
                    }
                }
                if rest.iter().enumerate().all(|(i, &b)| b == in_chain(i)) {
                    sum = &sum + &weight.shr(big_k as u32);
                }
                sum
            }
            Component::FreeBlocks {
                prefix,
                run,
                weight,
            } => {
                let Some(rest) = split(prefix, tau) else {
                    return DyadicRational::zero();
                };
                let chunks: Vec<&[bool]> = rest.chunks(*run).collect();
                let constant = |c: &[bool]| c.iter().all(|&b| b == c[0]);
                let big_k = chunks.len();
                let mut sum = DyadicRational::zero();
                for k in 0..big_k {
                    let tail = &rest[k * run..];
                    if chunks[..k].iter().all(|c| constant(c)) && constant(tail) {
                        sum = &sum + &weight.shr(2 * (k as u32 + 1));
                    }
                }
                if chunks.iter().all(|c| constant(c)) {
                    sum = &sum + &weight.shr(2 * big_k as u32);
                }
                sum
            }
        }
    }

    /// Atoms of this component whose defining blocks end within `depth`
    /// output bits (always at least the first one), with their masses.
    pub fn expand(&self, depth: usize) -> Vec<(EventuallyPeriodic, DyadicRational)> {
        match self {
            Component::Atom { pattern, mass } => vec![(pattern.clone(), mass.clone())],
            Component::Chain {
                prefix,
                run,
                weight,
            } => {
                let kmax = depth.saturating_sub(prefix.len()) / (run + 1);
                let mut block = BitString::repeat(true, *run);
                block.push(false);
                let mut body = prefix.clone();
                let mut out = Vec::new();
                for k in 0..=kmax {
                    out.push((
                        EventuallyPeriodic::with_tail(&body, true),
                        weight.shr(k as u32 + 1),
                    ));
                    body.extend_from(&block);
                }
                out
            }
            Component::FreeBlocks {
                prefix,
                run,
                weight,
            } => {
                let kmax = depth.saturating_sub(prefix.len()) / run;
                let mut out = Vec::new();
                for k in 0..=kmax {
                    let mass = weight.shr(2 * (k as u32 + 1));
                    for fill in BitString::all_of_length(k + 1) {
                        let mut body = prefix.clone();
                        for &c in &fill.bits()[..k] {
                            body.extend_from(&BitString::repeat(c, *run));
                        }
                        out.push((
                            EventuallyPeriodic::with_tail(&body, fill.bits()[k]),
                            mass.clone(),
                        ));
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Atom { pattern, mass } => write!(f, "atom\t{pattern}\t{mass}"),
            Component::Chain {
                prefix,
                run,
                weight,
            } => write!(f, "chain\t{prefix}\trun={run}\t{weight}"),
            Component::FreeBlocks {
                prefix,
                run,
                weight,
            } => write!(f, "free\t{prefix}\trun={run}\t{weight}"),
        }
    }
}

fn split<'a>(prefix: &BitString, tau: &'a BitString) -> Option<&'a [bool]> {
    if tau.len() <= prefix.len() {
        tau.is_prefix_of(prefix).then_some(&[])
    } else {
        prefix.is_prefix_of(tau).then(|| &tau.bits()[prefix.len()..])
    }
}

/// Finite listing of atoms, merged by pattern and sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomListing {
    pub atoms: Vec<(EventuallyPeriodic, DyadicRational)>,
    /// Mass of the atoms left unlisted.
    pub rest: DyadicRational,
}

impl fmt::Display for AtomListing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (pattern, mass) in &self.atoms {
            writeln!(f, "{pattern}\t{mass}")?;
        }
        if !self.rest.is_zero() {
            writeln!(f, "rest\t{}", self.rest)?;
        }
        Ok(())
    }
}

/// The induced measure of a tally functional, held as a finite list of components.
#[derive(Debug, Clone)]
pub struct TallyMeasure {
    mode: TallyMode,
    components: Vec<Component>,
}

impl TallyMeasure {
    pub fn mode(&self) -> TallyMode {
        self.mode
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn total_mass(&self) -> DyadicRational {
        self.components.iter().map(Component::weight).sum()
    }

    pub fn cylinder(&self, tau: &BitString) -> DyadicRational {
        self.components.iter().map(|c| c.cylinder(tau)).sum()
    }

    /// All atoms whose blocks end within `depth` output bits.
    ///
    /// In `Ψ` mode a constant pattern collects mass from every `k`, so its
    /// listed mass counts only the expanded terms; the remainder goes to `rest`.
    pub fn atoms(&self, depth: usize) -> AtomListing {
        let mut merged: BTreeMap<EventuallyPeriodic, DyadicRational> = BTreeMap::new();
        for c in &self.components {
            for (pattern, mass) in c.expand(depth) {
                let slot = merged.entry(pattern).or_default();
                *slot = &*slot + &mass;
            }
        }
        let listed: DyadicRational = merged.values().sum();
        AtomListing {
            atoms: merged.into_iter().collect(),
            rest: &self.total_mass() - &listed,
        }
    }
}

impl MeasureOracle for TallyMeasure {
    fn approx(&self, sigma: &BitString, _precision: u32) -> Result<DyadicRational, MeasureError> {
        Ok(self.cylinder(sigma))
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        let mode = match self.mode {
            TallyMode::Phi => "phi",
            TallyMode::Psi => "psi",
        };
        format!("tally-{mode}({} components)", self.components.len())
    }
}

/// Where an input region's output is settled.
enum Region {
    /// Blocks `0..L` finite, block `L` infinite.
    Escape { blocks: Vec<usize>, level: usize },
    /// Blocks `0..=L` finite and the stages agree from `L` on; block `L` repeats.
    Chain { blocks: Vec<usize>, level: usize },
}

fn explore(sched: &MutationSchedule) -> Vec<Region> {
    let depth = sched.decision_depth();
    let mut regions = Vec::new();
    let mut stack = vec![((0..=sched.horizon()).collect::<Vec<_>>(), Vec::new())];
    while let Some((matching, mut blocks)) = stack.pop() {
        let level = blocks.len();
        let Some(&m) = matching.first() else {
            regions.push(Region::Escape { blocks, level });
            continue;
        };
        blocks.push(m);
        if level >= depth {
            regions.push(Region::Chain { blocks, level });
            continue;
        }
        for bit in [true, false] {
            let next: Vec<usize> = matching
                .iter()
                .copied()
                .filter(|&s| sched.stage(s).bit(level) == bit)
                .collect();
            stack.push((next, blocks.clone()));
        }
    }
    regions
}

fn render_phi(blocks: &[usize]) -> BitString {
    let mut out = BitString::empty();
    for &t in blocks {
        out.extend_from(&BitString::repeat(true, t));
        out.push(false);
    }
    out
}

fn render_psi(blocks: &[usize], fill: &BitString) -> BitString {
    let mut out = BitString::empty();
    let mut bits = fill.bits().iter();
    for &t in blocks {
        if t > 0 {
            out.extend_from(&BitString::repeat(*bits.next().expect("fill"), t));
        }
    }
    out
}

/// The exact measure induced by `Φ_A` or `Ψ` for `sched`.
///
/// Fails when the decision depth exceeds `guard_bits`.
pub fn tally_induced_measure(
    sched: &MutationSchedule,
    mode: TallyMode,
    guard_bits: usize,
) -> Result<TallyMeasure, TallyError> {
    let depth = sched.decision_depth();
    if depth > guard_bits {
        return Err(TallyError::GuardExceeded {
            depth,
            guard: guard_bits,
        });
    }
    let mut components = Vec::new();
    for region in explore(sched) {
        match (mode, region) {
            (TallyMode::Phi, Region::Escape { blocks, level }) => components.push(Component::Atom {
                pattern: EventuallyPeriodic::with_tail(&render_phi(&blocks), true),
                mass: DyadicRational::pow2_neg(level as u32),
            }),
            (TallyMode::Phi, Region::Chain { blocks, level }) => {
                components.push(Component::Chain {
                    run: *blocks.last().expect("chain has a block"),
                    prefix: render_phi(&blocks),
                    weight: DyadicRational::pow2_neg(level as u32),
                })
            }
            (TallyMode::Psi, Region::Escape { blocks, level }) => {
                // one fill bit per nonempty block, plus the infinite block's
                let used = blocks.iter().filter(|&&t| t > 0).count();
                let mass = DyadicRational::pow2_neg((level + used + 1) as u32);
                for fill in BitString::all_of_length(used + 1) {
                    let body = render_psi(&blocks, &fill);
                    components.push(Component::Atom {
                        pattern: EventuallyPeriodic::with_tail(&body, fill.bits()[used]),
                        mass: mass.clone(),
                    });
                }
            }
            (TallyMode::Psi, Region::Chain { blocks, level }) => {
                let used = blocks.iter().filter(|&&t| t > 0).count();
                let run = *blocks.last().expect("chain has a block");
                let weight = DyadicRational::pow2_neg((level + used) as u32);
                for fill in BitString::all_of_length(used) {
                    let prefix = render_psi(&blocks, &fill);
                    if run == 0 {
                        for b in [false, true] {
                            components.push(Component::Atom {
                                pattern: EventuallyPeriodic::with_tail(&prefix, b),
                                mass: weight.halve(),
                            });
                        }
                    } else {
                        components.push(Component::FreeBlocks {
                            prefix,
                            run,
                            weight: weight.clone(),
                        });
                    }
                }
            }
        }
    }
    components.sort_by_cached_key(Component::to_string);
    Ok(TallyMeasure { mode, components })
}

/// Whether `pattern` is a block rendering followed by `1^ω`. Every finite
/// string has the form `1^{t_0}0 … 1^{t_k}0·1^j`, so this is a tail check.
pub fn is_phi_pattern(pattern: &EventuallyPeriodic) -> bool {
    pattern.period().bits() == [true]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{induced_measure, Functional, PreimageMode};
    use crate::measures::atom_candidates;
    use crate::tally::{make_phi_a, make_psi};
    use proptest::prelude::*;

    fn d(s: &str) -> DyadicRational {
        s.parse().unwrap()
    }

    fn sched(s: &str) -> MutationSchedule {
        s.parse().unwrap()
    }

    fn two_stage() -> MutationSchedule {
        sched("base: +0\nstage 1: flip 0\n")
    }

    #[test]
    fn constant_schedule_is_one_chain() {
        let m = tally_induced_measure(&MutationSchedule::constant("+0".parse().unwrap()), TallyMode::Phi, 24)
            .unwrap();
        assert_eq!(
            m.components(),
            &[Component::Chain {
                prefix: "0".parse().unwrap(),
                run: 0,
                weight: DyadicRational::one()
            }]
        );
        let listing = m.atoms(3);
        let patterns: Vec<String> = listing.atoms.iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(patterns, ["0+1", "00+1", "000+1"]);
        assert_eq!(listing.rest, d("1/8"));
    }

    #[test]
    fn two_stage_components() {
        let m = tally_induced_measure(&two_stage(), TallyMode::Phi, 24).unwrap();
        let shown: Vec<String> = m.components().iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, ["chain\t00\trun=0\t1/2", "chain\t010\trun=1\t1/2"]);
        assert_eq!(m.cylinder(&"0011".parse().unwrap()), d("1/4"));
        assert_eq!(m.cylinder(&"0101".parse().unwrap()), d("1/2"));
    }

    #[test]
    fn two_stage_heavy_cylinders() {
        let m = tally_induced_measure(&two_stage(), TallyMode::Phi, 24).unwrap();
        let found = atom_candidates(&m, 4, &d("1/8"), 0).unwrap();
        let oracle = make_phi_a(two_stage());
        let expected: Vec<(BitString, DyadicRational)> = BitString::all_of_length(4)
            .map(|s| {
                let v = induced_measure(&oracle, &s, PreimageMode::Pruned, 24).unwrap();
                (s, v)
            })
            .filter(|(_, v)| *v >= d("1/8"))
            .collect();
        assert_eq!(found, expected);
        let total: DyadicRational = found.iter().map(|(_, v)| v).sum();
        assert!(total >= d("3/4"));
    }

    #[test]
    fn guard_is_enforced() {
        let s = sched("base: +0\nstage 1: flip 30\n");
        assert_eq!(
            tally_induced_measure(&s, TallyMode::Phi, 24).unwrap_err(),
            TallyError::GuardExceeded { depth: 31, guard: 24 }
        );
    }

    /// Brackets `λ{Z : σ ⪯ Ψ(Z)}` by enumerating joined inputs of length `2n`:
    /// inputs whose output already extends σ count towards both ends, inputs
    /// whose output is still compatible only towards the upper end.
    fn psi_bracket(psi: &dyn Functional, sigma: &BitString, n: usize) -> (DyadicRational, DyadicRational) {
        let (mut sure, mut open) = (0u64, 0u64);
        for rho in BitString::all_of_length(2 * n) {
            let out = psi.step(&rho);
            if sigma.is_prefix_of(&out) {
                sure += 1;
            } else if out.is_prefix_of(sigma) {
                open += 1;
            }
        }
        (
            DyadicRational::new(sure, 2 * n as u32),
            DyadicRational::new(sure + open, 2 * n as u32),
        )
    }

    #[test]
    fn psi_agrees_with_brute_force_brackets() {
        for text in [
            "base: +0\nstage 1: flip 0\n",
            "base: +01\nstage 1: flip 1\nstage 3: flip 0 2\n",
            "base: 1+0\nstage 2: flip 1\n",
        ] {
            let s = sched(text);
            let m = tally_induced_measure(&s, TallyMode::Psi, 24).unwrap();
            assert_eq!(m.total_mass(), DyadicRational::one());
            let psi = make_psi(s);
            for sigma in BitString::all_shorter_than(5) {
                let (lo, hi) = psi_bracket(&psi, &sigma, 7);
                let v = m.cylinder(&sigma);
                assert!(lo <= v && v <= hi, "{text} {sigma}: {lo} <= {v} <= {hi}");
            }
        }
    }

    #[test]
    fn psi_listing_accounts_for_everything() {
        let m = tally_induced_measure(&two_stage(), TallyMode::Psi, 24).unwrap();
        let listing = m.atoms(6);
        let listed: DyadicRational = listing.atoms.iter().map(|(_, v)| v).sum();
        assert_eq!(&listed + &listing.rest, DyadicRational::one());
        assert!(!listing.rest.is_negative());
    }

    #[test]
    fn free_blocks_cylinders_are_additive() {
        let c = Component::FreeBlocks {
            prefix: "1".parse().unwrap(),
            run: 2,
            weight: d("1/2"),
        };
        for tau in BitString::all_shorter_than(8) {
            let split = &c.cylinder(&tau.child(false)) + &c.cylinder(&tau.child(true));
            assert_eq!(c.cylinder(&tau), split, "{tau}");
        }
    }

    fn arb_schedule() -> impl Strategy<Value = MutationSchedule> {
        (
            "[01]{0,3}",
            "[01]{1,2}",
            prop::collection::vec((1usize..3, prop::collection::btree_set(0usize..6, 1..3)), 1..4),
        )
            .prop_map(|(pre, per, steps)| {
                let mut text = format!("base: {pre}+{per}\n");
                let mut stage = 0;
                for (gap, positions) in steps {
                    stage += gap;
                    let ps: Vec<String> = positions.iter().map(|p| p.to_string()).collect();
                    text.push_str(&format!("stage {stage}: flip {}\n", ps.join(" ")));
                }
                text.parse().unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn phi_matches_preimage_counting(s in arb_schedule()) {
            let m = tally_induced_measure(&s, TallyMode::Phi, 24).unwrap();
            prop_assert_eq!(m.total_mass(), DyadicRational::one());
            let phi = make_phi_a(s);
            for sigma in BitString::all_shorter_than(9) {
                let direct = induced_measure(&phi, &sigma, PreimageMode::Pruned, 24).unwrap();
                prop_assert_eq!(m.cylinder(&sigma), direct, "σ = {}", sigma);
            }
        }

        #[test]
        fn phi_atoms_follow_the_grammar(s in arb_schedule(), depth in 0usize..12) {
            let m = tally_induced_measure(&s, TallyMode::Phi, 24).unwrap();
            let listing = m.atoms(depth);
            for (p, v) in &listing.atoms {
                prop_assert!(is_phi_pattern(p), "{}", p);
                prop_assert_eq!(m.cylinder(&p.take(depth + 8)) >= *v, true);
            }
            let listed: DyadicRational = listing.atoms.iter().map(|(_, v)| v).sum();
            prop_assert_eq!(&listed + &listing.rest, DyadicRational::one());
        }
    }
}
