//! Finite lattices and the set systems that represent finite distributive
//! lattices by families of symbolic sequence terms.

mod order;
pub mod profiles;
pub mod recipe;
pub mod setsystem;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use profiles::{lr_profiles, KhatReading, LRProfile, ProfileReport, Verdict};
pub use recipe::{bind_recipe, emit_measure_recipe, MeasureRecipe, RecipeError, RecipeTerm, RecipeWeight};
pub use setsystem::{
    build_set_system, render_terms, verify_set_system_iso, IsoReport, IsoViolation, SequenceTerm,
    SetSystem,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("element `{0}` declared twice")]
    DuplicateElement(String),
    #[error("no elements")]
    Empty,
    #[error("order has a cycle through `{0}` and `{1}`")]
    Cycle(String, String),
    #[error("not a lattice: `{0}` and `{1}` have no meet")]
    NoMeet(String, String),
    #[error("not a lattice: `{0}` and `{1}` have no join")]
    NoJoin(String, String),
    #[error("not distributive: {0}")]
    NotDistributive(String),
    #[error("distributivity methods disagree: triple check {triple}, sublattice search {sublattice}")]
    MethodsDisagree { triple: String, sublattice: String },
    #[error("grading violation: `{element}` is on level {level} but its upper cover `{cover}` is on level {cover_level}")]
    Grading {
        element: String,
        level: usize,
        cover: String,
        cover_level: usize,
    },
    #[error("meet-irreducibility tests disagree on `{0}`")]
    Classification(String),
    #[error("covers `{b}` and `{c}` of `{element}` give different unions")]
    UnionInconsistent { element: String, b: String, c: String },
    #[error("{0} basics exceed the guard of {1}")]
    TooManyBasics(usize, usize),
}

/// A finite lattice with precomputed order, meet and join tables.
///
/// Elements are indexed in identifier order (digit runs compare numerically).
#[derive(Debug, Clone)]
pub struct FiniteLattice {
    name: String,
    ids: Vec<String>,
    leq: Vec<Vec<bool>>,
    meet: Vec<Vec<usize>>,
    join: Vec<Vec<usize>>,
    upper: Vec<Vec<usize>>,
    lower: Vec<Vec<usize>>,
    top: usize,
    bottom: usize,
}

/// Sort key splitting an identifier into digit and non-digit runs.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn runs(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ra, rb) = (runs(a), runs(b));
    for ((da, sa), (db, sb)) in ra.iter().zip(rb.iter()) {
        let ord = if *da && *db {
            let (ta, tb) = (sa.trim_start_matches('0'), sb.trim_start_matches('0'));
            ta.len().cmp(&tb.len()).then(ta.cmp(tb)).then(sa.len().cmp(&sb.len()))
        } else {
            sa.cmp(sb)
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ra.len().cmp(&rb.len())
}

impl FiniteLattice {
    /// Builds a lattice from identifiers and any generating set of strict
    /// relations `a < b`; the order is their reflexive-transitive closure.
    pub fn from_relations(
        name: &str,
        ids: &[String],
        relations: &[(String, String)],
    ) -> Result<Self, LatticeError> {
        if ids.is_empty() {
            return Err(LatticeError::Empty);
        }
        let mut sorted: Vec<String> = ids.to_vec();
        sorted.sort_by(|a, b| natural_cmp(a, b));
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(LatticeError::DuplicateElement(w[0].clone()));
            }
        }
        let index: BTreeMap<&str, usize> =
            sorted.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let n = sorted.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in relations {
            let ia = *index.get(a.as_str()).ok_or_else(|| LatticeError::UnknownElement(a.clone()))?;
            let ib = *index.get(b.as_str()).ok_or_else(|| LatticeError::UnknownElement(b.clone()))?;
            leq[ia][ib] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if leq[i][j] && leq[j][i] {
                    return Err(LatticeError::Cycle(sorted[i].clone(), sorted[j].clone()));
                }
            }
        }
        let bound = |i: usize, j: usize, below: bool| -> Option<usize> {
            let related = |x: usize, y: usize| if below { leq[x][y] } else { leq[y][x] };
            let cands: Vec<usize> = (0..n).filter(|&x| related(x, i) && related(x, j)).collect();
            cands.iter().copied().find(|&x| cands.iter().all(|&y| related(y, x)))
        };
        let mut meet = vec![vec![0; n]; n];
        let mut join = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                meet[i][j] = bound(i, j, true)
                    .ok_or_else(|| LatticeError::NoMeet(sorted[i].clone(), sorted[j].clone()))?;
                join[i][j] = bound(i, j, false)
                    .ok_or_else(|| LatticeError::NoJoin(sorted[i].clone(), sorted[j].clone()))?;
            }
        }
        let mut upper = vec![Vec::new(); n];
        let mut lower = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                let strictly = |x: usize, y: usize| x != y && leq[x][y];
                if strictly(i, j) && !(0..n).any(|k| strictly(i, k) && strictly(k, j)) {
                    upper[i].push(j);
                    lower[j].push(i);
                }
            }
        }
        let top = (0..n).find(|&i| (0..n).all(|j| leq[j][i])).expect("lattice has a top");
        let bottom = (0..n).find(|&i| (0..n).all(|j| leq[i][j])).expect("lattice has a bottom");
        Ok(Self {
            name: name.to_string(),
            ids: sorted,
            leq,
            meet,
            join,
            upper,
            lower,
            top,
            bottom,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, a: usize) -> &str {
        &self.ids[a]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a][b]
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a][b]
    }

    /// Meet of a family; the empty meet is the top.
    pub fn meet_all(&self, elems: impl IntoIterator<Item = usize>) -> usize {
        elems.into_iter().fold(self.top, |acc, x| self.meet(acc, x))
    }

    pub fn upper_covers(&self, a: usize) -> &[usize] {
        &self.upper[a]
    }

    pub fn lower_covers(&self, a: usize) -> &[usize] {
        &self.lower[a]
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    /// All cover pairs `a < b` as identifiers.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|a| self.upper[a].iter().map(move |&b| (a, b)))
            .collect()
    }

    /// The same lattice with every identifier passed through `rename`.
    pub fn relabel(&self, rename: impl Fn(&str) -> String) -> Result<Self, LatticeError> {
        let ids: Vec<String> = self.ids.iter().map(|s| rename(s)).collect();
        let rels: Vec<(String, String)> = self
            .covers()
            .into_iter()
            .map(|(a, b)| (ids[a].clone(), ids[b].clone()))
            .collect();
        Self::from_relations(&self.name, &ids, &rels)
    }

    /// Subsets of `{0..n-1}` under inclusion, named `p` followed by the
    /// membership bits.
    pub fn powerset(n: usize) -> Self {
        let name = |mask: usize| -> String {
            let bits: String = (0..n).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect();
            format!("p{bits}")
        };
        let ids: Vec<String> = (0..1usize << n).map(name).collect();
        let rels: Vec<(String, String)> = (0..1usize << n)
            .flat_map(|m| {
                (0..n)
                    .filter(move |i| m >> i & 1 == 0)
                    .map(move |i| (name(m), name(m | 1 << i)))
            })
            .collect();
        Self::from_relations(&format!("B{n}"), &ids, &rels).expect("powerset is a lattice")
    }

    /// `c0 < c1 < … < c{n-1}`.
    pub fn chain(n: usize) -> Self {
        let ids: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        let rels: Vec<(String, String)> = ids.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        Self::from_relations(&format!("chain{n}"), &ids, &rels).expect("chain is a lattice")
    }

    pub fn m3() -> Self {
        "lattice M3\nelements: 0 a b c 1\ncovers: 0<a 0<b 0<c a<1 b<1 c<1\n"
            .parse()
            .expect("M3")
    }

    pub fn n5() -> Self {
        "lattice N5\nelements: 0 a b c 1\ncovers: 0<a a<b b<1 0<c c<1\n"
            .parse()
            .expect("N5")
    }

    /// The lattice of down-closed subsets of the poset on `{0..n-1}`
    /// generated by `relations` (`(x, y)` meaning `x < y`), ordered by
    /// inclusion. Elements are named `d` followed by the membership bits.
    pub fn downsets_of(n: usize, relations: &[(usize, usize)]) -> Self {
        let mut below = vec![0usize; n];
        for &(x, y) in relations {
            below[y] |= 1 << x;
        }
        // transitive closure of the strict-below masks
        loop {
            let mut changed = false;
            for y in 0..n {
                let mut m = below[y];
                for (x, bx) in below.iter().enumerate() {
                    if m >> x & 1 == 1 {
                        m |= bx;
                    }
                }
                if m != below[y] {
                    below[y] = m;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let closed = |m: usize| (0..n).all(|y| m >> y & 1 == 0 || below[y] & !m == 0);
        let sets: Vec<usize> = (0..1usize << n).filter(|&m| closed(m)).collect();
        let name = |mask: usize| -> String {
            let bits: String = (0..n).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect();
            format!("d{bits}")
        };
        let ids: Vec<String> = sets.iter().map(|&m| name(m)).collect();
        let member: BTreeSet<usize> = sets.iter().copied().collect();
        let rels: Vec<(String, String)> = sets
            .iter()
            .flat_map(|&m| {
                let member = &member;
                (0..n)
                    .filter(move |&i| m >> i & 1 == 0 && member.contains(&(m | 1 << i)))
                    .map(move |i| (name(m), name(m | 1 << i)))
            })
            .collect();
        Self::from_relations("downsets", &ids, &rels).expect("downsets form a lattice")
    }
}

impl FromStr for FiniteLattice {
    type Err = LatticeError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut name = String::from("unnamed");
        let mut ids: Vec<String> = Vec::new();
        let mut rels = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let err = |msg: String| LatticeError::Parse { line: no + 1, msg };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("lattice") {
                name = rest.trim().to_string();
            } else if let Some(rest) = line.strip_prefix("elements:") {
                ids.extend(rest.split_whitespace().map(str::to_string));
            } else if let Some(rest) = line.strip_prefix("covers:") {
                for pair in rest.split_whitespace() {
                    let (a, b) = pair
                        .split_once('<')
                        .ok_or_else(|| err(format!("expected `a<b`, got `{pair}`")))?;
                    if a.is_empty() || b.is_empty() {
                        return Err(err(format!("expected `a<b`, got `{pair}`")));
                    }
                    rels.push((a.to_string(), b.to_string()));
                }
            } else {
                return Err(err(format!("unrecognized line `{line}`")));
            }
        }
        Self::from_relations(&name, &ids, &rels)
    }
}

impl fmt::Display for FiniteLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lattice {}", self.name)?;
        writeln!(f, "elements: {}", self.ids.join(" "))?;
        let covers: Vec<String> = self
            .covers()
            .into_iter()
            .map(|(a, b)| format!("{}<{}", self.ids[a], self.ids[b]))
            .collect();
        writeln!(f, "covers: {}", covers.join(" "))
    }
}

pub use order::{
    check_distributive, classify_meet_irreducible, compute_levels, DistributivityVerdict,
    SublatticeKind, SublatticeWitness,
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_order() {
        let mut v = vec!["a10", "a2", "1", "0", "b", "a"];
        v.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(v, ["0", "1", "a", "a2", "a10", "b"]);
    }

    #[test]
    fn diamond_tables() {
        let l: FiniteLattice = "lattice diamond\nelements: 0 a b 1\ncovers: 0<a 0<b a<1 b<1\n"
            .parse()
            .unwrap();
        let ix = |s: &str| l.index_of(s).unwrap();
        assert_eq!(l.meet(ix("a"), ix("b")), ix("0"));
        assert_eq!(l.join(ix("a"), ix("b")), ix("1"));
        assert_eq!(l.top(), ix("1"));
        assert_eq!(l.bottom(), ix("0"));
        assert_eq!(l.meet_all([]), ix("1"));
        assert_eq!(l.to_string().parse::<FiniteLattice>().unwrap().ids(), l.ids());
    }

    #[test]
    fn two_maximal_elements_are_rejected() {
        let err = "elements: 0 a b\ncovers: 0<a 0<b\n".parse::<FiniteLattice>().unwrap_err();
        assert_eq!(err, LatticeError::NoJoin("a".into(), "b".into()));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(
            "elements: 0 1\ncovers: 0-1\n".parse::<FiniteLattice>(),
            Err(LatticeError::Parse { line: 2, .. })
        ));
        assert_eq!(
            "elements: 0 1\ncovers: 0<2\n".parse::<FiniteLattice>().unwrap_err(),
            LatticeError::UnknownElement("2".into())
        );
        assert_eq!(
            "elements: 0 1\ncovers: 0<1 1<0\n".parse::<FiniteLattice>().unwrap_err(),
            LatticeError::Cycle("0".into(), "1".into())
        );
    }

    #[test]
    fn redundant_relations_reduce_to_covers() {
        let l: FiniteLattice = "elements: 0 a 1\ncovers: 0<a a<1 0<1\n".parse().unwrap();
        assert_eq!(l.covers().len(), 2);
    }

    #[test]
    fn constructors() {
        assert_eq!(FiniteLattice::powerset(3).len(), 8);
        assert_eq!(FiniteLattice::chain(4).len(), 4);
        // poset a < b, c incomparable: downsets ∅ a c ab ac abc
        let l = FiniteLattice::downsets_of(3, &[(0, 1)]);
        assert_eq!(l.len(), 6);
        let antichain = FiniteLattice::downsets_of(3, &[]);
        assert_eq!(antichain.len(), 8);
    }
}
