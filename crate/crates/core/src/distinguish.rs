//! Search for a formula of bounded modal depth separating two pointed models.
//!
//! A formula is identified with its support sets over all states of both
//! models, so the search saturates the finitely many classes of formulas of
//! modal depth `≤ k` under `∧`, `→`, `⩒` and then applies `□`, `⊞` once
//! more per level. Each class keeps the first formula that produced it.

use std::collections::HashMap;

use crate::model::InqModel;
use crate::state::InfoState;
use crate::syntax::{Formula, PropId};

/// Largest model handled; one `u64` holds the support set of a side.
pub const MAX_SEARCH_WORLDS: usize = 6;

/// Saturation gives up beyond this many classes.
pub const MAX_CLASSES: usize = 50_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Key(u64, u64);

struct Side<'m> {
    model: &'m InqModel,
    n_states: usize,
}

impl Side<'_> {
    fn full(&self) -> u64 {
        if self.n_states == 64 {
            u64::MAX
        } else {
            (1u64 << self.n_states) - 1
        }
    }

    fn below(&self, top: InfoState) -> u64 {
        top.subsets().fold(0, |acc, t| acc | 1 << t.bits())
    }

    fn implies(&self, a: u64, b: u64) -> u64 {
        let bad = a & !b;
        let mut up = 0u64;
        for m in 0..self.n_states as u64 {
            let hit = bad >> m & 1 == 1
                || InfoState::from_bits(m)
                    .worlds()
                    .any(|w| up >> (m & !(1 << w)) & 1 == 1);
            if hit {
                up |= 1 << m;
            }
        }
        !up & self.full()
    }

    fn boxed(&self, a: u64) -> u64 {
        let good = (0..self.model.n_worlds())
            .filter(|&w| a >> self.model.kripke_sigma(w).bits() & 1 == 1)
            .collect::<InfoState>();
        self.below(good)
    }

    fn box_plus(&self, a: u64) -> u64 {
        let good = (0..self.model.n_worlds())
            .filter(|&w| self.model.sigma(w).iter().all(|t| a >> t.bits() & 1 == 1))
            .collect::<InfoState>();
        self.below(good)
    }
}

struct Saturation<'m> {
    left: Side<'m>,
    right: Side<'m>,
    classes: Vec<(Key, Formula)>,
    index: HashMap<Key, usize>,
}

impl Saturation<'_> {
    fn add(&mut self, key: Key, phi: impl FnOnce() -> Formula) -> bool {
        if self.index.contains_key(&key) {
            return false;
        }
        self.index.insert(key, self.classes.len());
        self.classes.push((key, phi()));
        true
    }

    /// Closes under the binary connectives; false if the class cap is hit.
    fn close(&mut self, from: usize) -> bool {
        let mut i = from;
        while i < self.classes.len() {
            for j in 0..=i {
                let (ki, kj) = (self.classes[i].0, self.classes[j].0);
                let (l, r) = (&self.left, &self.right);
                let cands = [
                    (Key(ki.0 & kj.0, ki.1 & kj.1), 0),
                    (Key(ki.0 | kj.0, ki.1 | kj.1), 1),
                    (Key(l.implies(ki.0, kj.0), r.implies(ki.1, kj.1)), 2),
                    (Key(l.implies(kj.0, ki.0), r.implies(kj.1, ki.1)), 3),
                ];
                for (key, op) in cands {
                    let (a, b) = (&self.classes[i].1, &self.classes[j].1);
                    let make = || match op {
                        0 => Formula::and(a.clone(), b.clone()),
                        1 => Formula::inq_or(a.clone(), b.clone()),
                        2 => Formula::implies(a.clone(), b.clone()),
                        _ => Formula::implies(b.clone(), a.clone()),
                    };
                    if !self.index.contains_key(&key) {
                        let phi = make();
                        self.add(key, || phi);
                        if self.classes.len() > MAX_CLASSES {
                            return false;
                        }
                    }
                }
            }
            i += 1;
        }
        true
    }
}

/// Outcome of a bounded search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Search {
    Found(Formula),
    /// Every class of depth `≤ k` agrees on the two points.
    Exhausted { classes: usize },
    /// Too many worlds or classes.
    TooLarge,
}

/// A formula of modal depth `≤ depth` supported at exactly one of `M, s`
/// and `M', s'`. Both models must share the signature of `m`, by position.
pub fn distinguishing_formula(
    m: &InqModel,
    s: InfoState,
    m2: &InqModel,
    s2: InfoState,
    depth: usize,
) -> Search {
    assert_eq!(m.sig().len(), m2.sig().len(), "signatures must match");
    if m.n_worlds() > MAX_SEARCH_WORLDS || m2.n_worlds() > MAX_SEARCH_WORLDS {
        return Search::TooLarge;
    }
    let side = |model| Side {
        model,
        n_states: 1 << InqModel::n_worlds(model),
    };
    let mut sat = Saturation {
        left: side(m),
        right: side(m2),
        classes: Vec::new(),
        index: HashMap::new(),
    };
    let separates = |k: &Key| (k.0 >> s.bits() & 1) != (k.1 >> s2.bits() & 1);
    sat.add(Key(1, 1), || Formula::Bottom);
    for p in m.sig().ids() {
        let key = Key(sat.left.below(m.valuation(p)), sat.right.below(m2.valuation(p)));
        sat.add(key, || Formula::atom(PropId(p.0)));
    }
    let mut from = 0;
    for level in 0..=depth {
        if level > 0 {
            let start = sat.classes.len();
            for i in 0..start {
                let (k, phi) = sat.classes[i].clone();
                let b = Key(sat.left.boxed(k.0), sat.right.boxed(k.1));
                sat.add(b, || Formula::boxed(phi.clone()));
                let bp = Key(sat.left.box_plus(k.0), sat.right.box_plus(k.1));
                sat.add(bp, || Formula::box_plus(phi));
            }
            from = start;
        }
        if !sat.close(from) {
            return Search::TooLarge;
        }
        if let Some((_, phi)) = sat.classes.iter().find(|(k, _)| separates(k)) {
            return Search::Found(phi.clone());
        }
        from = sat.classes.len();
    }
    Search::Exhausted {
        classes: sat.classes.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::semantics::supports;

    fn found(r: Search) -> Formula {
        match r {
            Search::Found(phi) => phi,
            other => panic!("expected a formula, got {other:?}"),
        }
    }

    #[test]
    fn separates_worlds_by_atom() {
        let phi = found(distinguishing_formula(&m0(), st(&[0]), &m0(), st(&[1]), 0));
        assert_ne!(supports(&m0(), st(&[0]), &phi), supports(&m0(), st(&[1]), &phi));
    }

    #[test]
    fn needs_an_inquisitive_connective() {
        // {w0, w1} and {w0} differ on ?p only
        let phi = found(distinguishing_formula(&m0(), st(&[0, 1]), &m0(), st(&[0]), 0));
        assert_ne!(supports(&m0(), st(&[0, 1]), &phi), supports(&m0(), st(&[0]), &phi));
    }

    #[test]
    fn identical_points_exhaust() {
        assert!(matches!(
            distinguishing_formula(&m0(), st(&[0, 1]), &m0(), st(&[0, 1]), 2),
            Search::Exhausted { .. }
        ));
        assert!(matches!(
            distinguishing_formula(&m0(), st(&[0]), &p0(), st(&[0]), 0),
            Search::Exhausted { .. }
        ));
    }

    #[test]
    fn modal_depth_is_respected() {
        let phi = found(distinguishing_formula(&m0(), st(&[0]), &p0(), st(&[0]), 1));
        assert!(phi.modal_depth() <= 1);
        assert_ne!(supports(&m0(), st(&[0]), &phi), supports(&p0(), st(&[0]), &phi));
    }
}
