//! Assigning sets of sequence terms to lattice elements so that the order
//! is reverse inclusion, meets are unions and joins are intersections.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::{check_distributive, classify_meet_irreducible, compute_levels, FiniteLattice, LatticeError};

/// A basic sequence `A_i` or a join `A_i ⊕ A_j ⊕ …` of at least two basics.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SequenceTerm {
    Basic(usize),
    Join(Vec<usize>),
}

impl SequenceTerm {
    /// The term for a set of basic indices.
    pub fn from_components(comps: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = comps.into_iter().collect();
        let v: Vec<usize> = set.into_iter().collect();
        assert!(!v.is_empty(), "a term needs at least one basic");
        if v.len() == 1 {
            SequenceTerm::Basic(v[0])
        } else {
            SequenceTerm::Join(v)
        }
    }

    pub fn components(&self) -> Vec<usize> {
        match self {
            SequenceTerm::Basic(i) => vec![*i],
            SequenceTerm::Join(v) => v.clone(),
        }
    }

    pub fn map_basics(&self, f: impl Fn(usize) -> usize) -> Self {
        Self::from_components(self.components().into_iter().map(f))
    }
}

impl Ord for SequenceTerm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (a, b) = (self.components(), other.components());
        a.len().cmp(&b.len()).then(a.cmp(&b))
    }
}

impl PartialOrd for SequenceTerm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SequenceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components().iter().map(|i| format!("A{i}")).collect();
        write!(f, "{}", parts.join("+"))
    }
}

impl FromStr for SequenceTerm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let comps = s
            .split('+')
            .map(|p| {
                p.trim()
                    .strip_prefix('A')
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| format!("bad term `{s}`"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_components(comps))
    }
}

pub fn render_terms(terms: &BTreeSet<SequenceTerm>) -> String {
    let parts: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetSystem {
    /// `S_a` for every element index `a`.
    pub assignment: Vec<BTreeSet<SequenceTerm>>,
    /// `origin[i]` is the element where basic `A_i` first appears.
    pub origin: Vec<usize>,
    /// Basics minted on level two, in minting order.
    pub level_two: Vec<usize>,
    /// Basics minted at deeper meet-irreducible elements.
    pub irreducible: Vec<usize>,
}

impl SetSystem {
    pub fn basics(&self) -> usize {
        self.origin.len()
    }

    /// `S_{0_L}`.
    pub fn bottom_terms<'a>(&'a self, l: &FiniteLattice) -> &'a BTreeSet<SequenceTerm> {
        &self.assignment[l.bottom()]
    }

    /// Sorted `element: {terms}` lines.
    pub fn report(&self, l: &FiniteLattice) -> String {
        let mut lines: Vec<(String, String)> = (0..l.len())
            .map(|a| (l.id(a).to_string(), render_terms(&self.assignment[a])))
            .collect();
        lines.sort();
        lines.iter().map(|(a, s)| format!("{a}: {s}\n")).collect()
    }
}

/// Builds the set system top-down, level by level, elements within a level
/// in identifier order. The top gets `∅`; an element with several upper
/// covers gets the union of their sets, which must not depend on which two
/// covers are chosen; an element with one upper cover `b` gets `S_b` plus a
/// fresh basic joined with every basic already in `S_b`.
pub fn build_set_system(l: &FiniteLattice) -> Result<SetSystem, LatticeError> {
    let verdict = check_distributive(l)?;
    if !verdict.is_distributive() {
        return Err(LatticeError::NotDistributive(verdict.describe(l)));
    }
    let levels = compute_levels(l)?;
    classify_meet_irreducible(l)?;
    let mut order: Vec<usize> = (0..l.len()).collect();
    order.sort_by_key(|&a| (levels[a], a));
    let mut sys = SetSystem {
        assignment: vec![BTreeSet::new(); l.len()],
        origin: Vec::new(),
        level_two: Vec::new(),
        irreducible: Vec::new(),
    };
    for a in order {
        let covers = l.upper_covers(a);
        match covers {
            [] => {}
            [b] => {
                let base = sys.assignment[*b].clone();
                let fresh = sys.origin.len();
                let comps: BTreeSet<usize> = base.iter().flat_map(|t| t.components()).collect();
                if comps.is_empty() {
                    sys.level_two.push(fresh);
                } else {
                    sys.irreducible.push(fresh);
                }
                let term = SequenceTerm::from_components(comps.into_iter().chain([fresh]));
                let mut set = base;
                set.insert(term);
                sys.assignment[a] = set;
                sys.origin.push(a);
            }
            _ => {
                let union = |x: usize, y: usize| -> BTreeSet<SequenceTerm> {
                    sys.assignment[x].union(&sys.assignment[y]).cloned().collect()
                };
                let first = union(covers[0], covers[1]);
                for (p, &b) in covers.iter().enumerate() {
                    for &c in &covers[p + 1..] {
                        if union(b, c) != first {
                            return Err(LatticeError::UnionInconsistent {
                                element: l.id(a).into(),
                                b: l.id(b).into(),
                                c: l.id(c).into(),
                            });
                        }
                    }
                }
                sys.assignment[a] = first;
            }
        }
    }
    Ok(sys)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IsoViolation {
    TopNotEmpty,
    /// `a ≤ b` disagrees with `S_a ⊇ S_b`.
    Order(usize, usize),
    /// `S_{a∧b} ≠ S_a ∪ S_b`.
    Meet(usize, usize),
    /// `S_{a∨b} ≠ S_a ∩ S_b`.
    Join(usize, usize),
    /// Two elements share a set.
    Duplicate(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoReport {
    pub pairs_checked: usize,
    pub violations: Vec<IsoViolation>,
}

impl IsoReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render(&self, l: &FiniteLattice) -> String {
        let mut out = format!(
            "pairs checked: {}\nviolations: {}\n",
            self.pairs_checked,
            self.violations.len()
        );
        for v in &self.violations {
            let line = match v {
                IsoViolation::TopNotEmpty => "top: set is not empty".to_string(),
                IsoViolation::Order(a, b) => format!("order: {} {}", l.id(*a), l.id(*b)),
                IsoViolation::Meet(a, b) => format!("meet: {} {}", l.id(*a), l.id(*b)),
                IsoViolation::Join(a, b) => format!("join: {} {}", l.id(*a), l.id(*b)),
                IsoViolation::Duplicate(a, b) => format!("duplicate: {} {}", l.id(*a), l.id(*b)),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str(if self.is_clean() { "verdict: pass\n" } else { "verdict: fail\n" });
        out
    }
}

/// Checks every ordered pair of elements against the order, meet and join
/// clauses, and that all sets are distinct.
pub fn verify_set_system_iso(l: &FiniteLattice, s: &SetSystem) -> IsoReport {
    let n = l.len();
    let set = |a: usize| &s.assignment[a];
    let mut violations = Vec::new();
    if !set(l.top()).is_empty() {
        violations.push(IsoViolation::TopNotEmpty);
    }
    for a in 0..n {
        for b in 0..n {
            if l.leq(a, b) != set(a).is_superset(set(b)) {
                violations.push(IsoViolation::Order(a, b));
            }
            let union: BTreeSet<SequenceTerm> = set(a).union(set(b)).cloned().collect();
            if *set(l.meet(a, b)) != union {
                violations.push(IsoViolation::Meet(a, b));
            }
            let inter: BTreeSet<SequenceTerm> = set(a).intersection(set(b)).cloned().collect();
            if *set(l.join(a, b)) != inter {
                violations.push(IsoViolation::Join(a, b));
            }
            if a < b && set(a) == set(b) {
                violations.push(IsoViolation::Duplicate(a, b));
            }
        }
    }
    IsoReport {
        pairs_checked: n * n,
        violations,
    }
}
