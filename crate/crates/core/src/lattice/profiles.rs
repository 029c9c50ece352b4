//! LR profiles: which terms of the bottom set survive for an oracle that
//! fails to derandomize the basics in `J` (level two) and `K` (deeper).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::setsystem::{render_terms, SequenceTerm, SetSystem};
use super::{FiniteLattice, LatticeError};

/// How the pruning of `K` reads its side condition "`S_{a_i} ⊇ S_{a_ℓ}`
/// for some `ℓ ∉ J`".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KhatReading {
    /// `ℓ` ranges over every basic outside `J ∪ K`.
    #[default]
    AllBasics,
    /// `ℓ` ranges over the level-two basics outside `J`.
    LevelTwo,
}

impl FromStr for KhatReading {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-basics" => Ok(KhatReading::AllBasics),
            "level-two" => Ok(KhatReading::LevelTwo),
            _ => Err(format!("unknown reading `{s}` (expected all-basics or level-two)")),
        }
    }
}

impl fmt::Display for KhatReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KhatReading::AllBasics => write!(f, "all-basics"),
            KhatReading::LevelTwo => write!(f, "level-two"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LRProfile {
    pub j: BTreeSet<usize>,
    pub k: BTreeSet<usize>,
    pub k_hat: BTreeSet<usize>,
    pub element: usize,
    pub profile: BTreeSet<SequenceTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ProfileReport {
    pub reading: KhatReading,
    pub rows: Vec<LRProfile>,
    pub verdicts: Vec<Verdict>,
}

impl ProfileReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// Distinct profile sets, sorted by size and then contents.
    pub fn realized(&self) -> Vec<BTreeSet<SequenceTerm>> {
        let set: BTreeSet<(usize, Vec<SequenceTerm>)> = self
            .rows
            .iter()
            .map(|r| (r.profile.len(), r.profile.iter().cloned().collect()))
            .collect();
        set.into_iter().map(|(_, v)| v.into_iter().collect()).collect()
    }

    pub fn to_csv(&self, l: &FiniteLattice) -> String {
        let idx = |s: &BTreeSet<usize>| {
            let v: Vec<String> = s.iter().map(|i| i.to_string()).collect();
            format!("{{{}}}", v.join(" "))
        };
        let mut out = String::from("J,K,K_hat,element,profile\n");
        for r in &self.rows {
            let terms: Vec<String> = r.profile.iter().map(|t| t.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{},{{{}}}\n",
                idx(&r.j),
                idx(&r.k),
                idx(&r.k_hat),
                l.id(r.element),
                terms.join(" ")
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!("reading: {}\nrows: {}\n", self.reading, self.rows.len());
        let realized = self.realized();
        out.push_str(&format!("realized profiles: {}\n", realized.len()));
        for p in &realized {
            out.push_str(&format!("  {}\n", render_terms(p)));
        }
        for v in &self.verdicts {
            out.push_str(&format!("{}: {}", v.name, if v.passed { "pass" } else { "fail" }));
            if let Some(w) = &v.witness {
                out.push_str(&format!(" ({w})"));
            }
            out.push('\n');
        }
        out
    }
}

fn subsets(items: &[usize]) -> Vec<BTreeSet<usize>> {
    (0..1usize << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(p, _)| mask >> p & 1 == 1)
                .map(|(_, &i)| i)
                .collect()
        })
        .collect()
}

fn show(s: &BTreeSet<usize>) -> String {
    let v: Vec<String> = s.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", v.join(" "))
}

/// Enumerates every `(J, K)`, computes `K̂` and the element
/// `⋀{a_i : i ∈ J ∪ K̂}` (the empty meet being the top), and checks
/// totality, surjectivity, monotonicity, the `J = ∅` collapse and agreement
/// with the direct reading `{B ∈ S_{0_L} : components(B) ⊆ J ∪ K}`.
pub fn lr_profiles(
    l: &FiniteLattice,
    s: &SetSystem,
    reading: KhatReading,
    max_basics: usize,
) -> Result<ProfileReport, LatticeError> {
    if s.basics() > max_basics {
        return Err(LatticeError::TooManyBasics(s.basics(), max_basics));
    }
    let set_of = |i: usize| &s.assignment[s.origin[i]];
    let bottom = s.bottom_terms(l);
    let mut rows = Vec::new();
    for j in subsets(&s.level_two) {
        for k in subsets(&s.irreducible) {
            let excluded: Vec<usize> = match reading {
                KhatReading::AllBasics => (0..s.basics()).filter(|i| !j.contains(i) && !k.contains(i)).collect(),
                KhatReading::LevelTwo => s.level_two.iter().copied().filter(|i| !j.contains(i)).collect(),
            };
            let k_hat: BTreeSet<usize> = k
                .iter()
                .copied()
                .filter(|&i| !excluded.iter().any(|&ell| set_of(i).is_superset(set_of(ell))))
                .collect();
            let element = l.meet_all(j.iter().chain(k_hat.iter()).map(|&i| s.origin[i]));
            rows.push(LRProfile {
                profile: s.assignment[element].clone(),
                j: j.clone(),
                k,
                k_hat,
                element,
            });
        }
    }

    let mut verdicts = Vec::new();

    let bad_total = rows
        .iter()
        .find(|r| !r.k_hat.is_subset(&r.k) || s.assignment[r.element] != r.profile);
    verdicts.push(Verdict {
        name: "totality",
        passed: bad_total.is_none(),
        witness: bad_total.map(|r| format!("J={} K={}", show(&r.j), show(&r.k))),
    });

    let realized: BTreeSet<usize> = rows.iter().map(|r| r.element).collect();
    let missing = (0..l.len()).find(|a| !realized.contains(a));
    verdicts.push(Verdict {
        name: "surjectivity",
        passed: missing.is_none(),
        witness: missing.map(|a| format!("unrealized {}", l.id(a))),
    });

    // single additions generate the product order
    let find = |j: &BTreeSet<usize>, k: &BTreeSet<usize>| {
        rows.iter().find(|r| r.j == *j && r.k == *k).expect("row exists")
    };
    let mut mono = None;
    'outer: for r in &rows {
        for &i in s.level_two.iter().chain(s.irreducible.iter()) {
            if r.j.contains(&i) || r.k.contains(&i) {
                continue;
            }
            let (mut j2, mut k2) = (r.j.clone(), r.k.clone());
            if s.level_two.contains(&i) {
                j2.insert(i);
            } else {
                k2.insert(i);
            }
            let bigger = find(&j2, &k2);
            if !l.leq(bigger.element, r.element) {
                mono = Some(format!(
                    "J={} K={} vs J={} K={}",
                    show(&r.j),
                    show(&r.k),
                    show(&j2),
                    show(&k2)
                ));
                break 'outer;
            }
        }
    }
    verdicts.push(Verdict {
        name: "monotonicity",
        passed: mono.is_none(),
        witness: mono,
    });

    let bad_empty = rows.iter().find(|r| r.j.is_empty() && r.element != l.top());
    verdicts.push(Verdict {
        name: "empty-J",
        passed: bad_empty.is_none(),
        witness: bad_empty.map(|r| format!("K={} gives {}", show(&r.k), l.id(r.element))),
    });

    let bad_sem = rows.iter().find(|r| {
        let direct: BTreeSet<SequenceTerm> = bottom
            .iter()
            .filter(|t| t.components().iter().all(|i| r.j.contains(i) || r.k.contains(i)))
            .cloned()
            .collect();
        direct != r.profile
    });
    verdicts.push(Verdict {
        name: "semantic",
        passed: bad_sem.is_none(),
        witness: bad_sem.map(|r| format!("J={} K={}", show(&r.j), show(&r.k))),
    });

    Ok(ProfileReport {
        reading,
        rows,
        verdicts,
    })
}
