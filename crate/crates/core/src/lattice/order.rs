use std::fmt;

use super::{FiniteLattice, LatticeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SublatticeKind {
    M3,
    N5,
}

/// Five elements forming an `M3` or `N5` sublattice.
///
/// For `M3` the middle three are the pairwise incomparable atoms; for `N5`
/// they are `a < b` and the element `c` beside them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SublatticeWitness {
    pub kind: SublatticeKind,
    pub bottom: usize,
    pub middle: [usize; 3],
    pub top: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributivityVerdict {
    /// First `(a, b, c)` with `a∧(b∨c) ≠ (a∧b)∨(a∧c)`.
    pub triple: Option<(usize, usize, usize)>,
    pub sublattice: Option<SublatticeWitness>,
}

impl DistributivityVerdict {
    pub fn is_distributive(&self) -> bool {
        self.triple.is_none()
    }

    pub fn describe(&self, l: &FiniteLattice) -> String {
        let mut parts = Vec::new();
        if let Some((a, b, c)) = self.triple {
            parts.push(format!("triple ({}, {}, {})", l.id(a), l.id(b), l.id(c)));
        }
        if let Some(w) = &self.sublattice {
            let [x, y, z] = w.middle.map(|m| l.id(m));
            let (bottom, top) = (l.id(w.bottom), l.id(w.top));
            parts.push(match w.kind {
                SublatticeKind::M3 => format!("M3 on {bottom} < {x},{y},{z} < {top}"),
                SublatticeKind::N5 => format!("N5 on {bottom} < {x} < {y} < {top}, {bottom} < {z} < {top}"),
            });
        }
        if parts.is_empty() {
            "distributive".into()
        } else {
            parts.join("; ")
        }
    }
}

impl fmt::Display for SublatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SublatticeKind::M3 => write!(f, "M3"),
            SublatticeKind::N5 => write!(f, "N5"),
        }
    }
}

fn failing_triple(l: &FiniteLattice) -> Option<(usize, usize, usize)> {
    let n = l.len();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let lhs = l.meet(a, l.join(b, c));
                let rhs = l.join(l.meet(a, b), l.meet(a, c));
                if lhs != rhs {
                    return Some((a, b, c));
                }
            }
        }
    }
    None
}

fn find_m3(l: &FiniteLattice) -> Option<SublatticeWitness> {
    let n = l.len();
    for x in 0..n {
        for y in x + 1..n {
            let (o, i) = (l.meet(x, y), l.join(x, y));
            if o == x || o == y {
                continue;
            }
            for z in y + 1..n {
                if l.meet(x, z) == o && l.meet(y, z) == o && l.join(x, z) == i && l.join(y, z) == i {
                    return Some(SublatticeWitness {
                        kind: SublatticeKind::M3,
                        bottom: o,
                        middle: [x, y, z],
                        top: i,
                    });
                }
            }
        }
    }
    None
}

fn find_n5(l: &FiniteLattice) -> Option<SublatticeWitness> {
    let n = l.len();
    for a in 0..n {
        for b in 0..n {
            if a == b || !l.leq(a, b) {
                continue;
            }
            for c in 0..n {
                let (o, i) = (l.meet(a, c), l.join(a, c));
                if l.meet(b, c) == o && l.join(b, c) == i {
                    let five = [o, a, b, c, i];
                    let distinct = (0..5).all(|p| (p + 1..5).all(|q| five[p] != five[q]));
                    if distinct {
                        return Some(SublatticeWitness {
                            kind: SublatticeKind::N5,
                            bottom: o,
                            middle: [a, b, c],
                            top: i,
                        });
                    }
                }
            }
        }
    }
    None
}

/// Distributivity by the triple identity, cross-checked by searching for
/// an `M3` or `N5` sublattice. The two must agree.
pub fn check_distributive(l: &FiniteLattice) -> Result<DistributivityVerdict, LatticeError> {
    let triple = failing_triple(l);
    let sublattice = find_m3(l).or_else(|| find_n5(l));
    let verdict = DistributivityVerdict { triple, sublattice };
    if verdict.triple.is_some() != verdict.sublattice.is_some() {
        return Err(LatticeError::MethodsDisagree {
            triple: format!("{:?}", verdict.triple),
            sublattice: format!("{:?}", verdict.sublattice),
        });
    }
    Ok(verdict)
}

/// Level of each element: the top is on level 1 and every other element
/// one below its upper covers, which must all share a level.
pub fn compute_levels(l: &FiniteLattice) -> Result<Vec<usize>, LatticeError> {
    let n = l.len();
    let mut level = vec![0usize; n];
    // elements with more elements above them come later
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&a| (0..n).filter(|&b| l.leq(a, b)).count());
    for &a in &order {
        level[a] = l.upper_covers(a).iter().map(|&b| level[b] + 1).max().unwrap_or(1);
    }
    for a in 0..n {
        for &b in l.upper_covers(a) {
            if level[b] + 1 != level[a] {
                return Err(LatticeError::Grading {
                    element: l.id(a).into(),
                    level: level[a],
                    cover: l.id(b).into(),
                    cover_level: level[b],
                });
            }
        }
    }
    Ok(level)
}

/// For each element, `Some(true)` when meet-irreducible, `Some(false)` when
/// meet-reducible, `None` for the top. Decided both from the definition
/// and by counting upper covers.
pub fn classify_meet_irreducible(l: &FiniteLattice) -> Result<Vec<Option<bool>>, LatticeError> {
    let n = l.len();
    let mut out = vec![None; n];
    for c in 0..n {
        if c == l.top() {
            continue;
        }
        let above: Vec<usize> = (0..n).filter(|&x| x != c && l.leq(c, x)).collect();
        let reducible = above
            .iter()
            .any(|&a| above.iter().any(|&b| l.meet(a, b) == c));
        let by_covers = l.upper_covers(c).len() >= 2;
        if reducible != by_covers {
            return Err(LatticeError::Classification(l.id(c).into()));
        }
        out[c] = Some(!reducible);
    }
    Ok(out)
}
