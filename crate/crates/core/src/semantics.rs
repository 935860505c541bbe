//! The support relation `M, s ⊨ φ`.
//!
//! [`supports`] evaluates the clauses directly, enumerating every subset
//! `t ⊆ s` for implications. [`supports_graded`] instead checks only the
//! subsets of size at most `flat(φ) + 1` and delegates each of those to the
//! direct evaluator, so the two strategies can serve as oracles for each
//! other.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{inquisitive_closure, InqModel};
use crate::mutation::{Faults, Mutant};
use crate::state::InfoState;
use crate::syntax::{flatness_grade_with, Formula, PropId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Naive,
    Graded,
}

#[derive(Clone, Copy, Debug)]
enum Node {
    Atom(PropId),
    Bottom,
    And(usize, usize),
    Implies(usize, usize),
    InqDisj(usize, usize),
    Box(usize),
    BoxPlus(usize),
}

/// Formula flattened into an arena so memo tables can be indexed by node.
struct Arena {
    nodes: Vec<Node>,
}

impl Arena {
    fn compile(phi: &Formula) -> (Arena, usize) {
        let mut arena = Arena { nodes: Vec::new() };
        let root = arena.add(phi);
        (arena, root)
    }

    fn add(&mut self, phi: &Formula) -> usize {
        let node = match phi {
            Formula::Atom(p) => Node::Atom(*p),
            Formula::Bottom => Node::Bottom,
            Formula::And(a, b) => Node::And(self.add(a), self.add(b)),
            Formula::Implies(a, b) => Node::Implies(self.add(a), self.add(b)),
            Formula::InqDisj(a, b) => Node::InqDisj(self.add(a), self.add(b)),
            Formula::Box(a) => Node::Box(self.add(a)),
            Formula::BoxPlus(a) => Node::BoxPlus(self.add(a)),
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }
}

/// Query-local evaluator with a `(node, state)` memo table.
struct Evaluator<'m> {
    model: &'m InqModel,
    arena: Arena,
    memo: Vec<HashMap<u64, bool>>,
    strict: bool,
}

impl<'m> Evaluator<'m> {
    fn new(model: &'m InqModel, phi: &Formula, faults: Faults) -> (Self, usize) {
        if let Some(p) = phi.max_prop() {
            assert!(
                p.0 < model.sig().len(),
                "formula mentions proposition {} outside the model signature",
                p.0
            );
        }
        let (arena, root) = Arena::compile(phi);
        let memo = vec![HashMap::new(); arena.nodes.len()];
        let ev = Evaluator {
            model,
            arena,
            memo,
            strict: faults.has(Mutant::StrictImplication),
        };
        (ev, root)
    }

    fn eval(&mut self, node: usize, s: InfoState) -> bool {
        match self.arena.nodes[node] {
            Node::Atom(p) => s.is_subset(self.model.valuation(p)),
            Node::Bottom => s.is_empty(),
            Node::And(a, b) => self.eval(a, s) && self.eval(b, s),
            Node::InqDisj(a, b) => self.eval(a, s) || self.eval(b, s),
            Node::Implies(..) | Node::Box(_) | Node::BoxPlus(_) => {
                if let Some(&v) = self.memo[node].get(&s.bits()) {
                    return v;
                }
                let v = self.eval_quantified(node, s);
                self.memo[node].insert(s.bits(), v);
                v
            }
        }
    }

    fn eval_quantified(&mut self, node: usize, s: InfoState) -> bool {
        match self.arena.nodes[node] {
            Node::Implies(a, b) => {
                let strict = self.strict;
                s.subsets()
                    .filter(|t| !strict || *t != s)
                    .all(|t| !self.eval(a, t) || self.eval(b, t))
            }
            Node::Box(a) => s.worlds().all(|w| {
                let succ = self.model.kripke_sigma(w);
                self.eval(a, succ)
            }),
            Node::BoxPlus(a) => {
                let model = self.model;
                s.worlds()
                    .all(|w| model.sigma(w).iter().all(|&t| self.eval(a, t)))
            }
            _ => unreachable!("only quantified clauses are memoized"),
        }
    }
}

fn check_width(m: &InqModel, s: InfoState) {
    assert!(
        s.fits(m.n_worlds()),
        "state {s:?} does not fit a model with {} worlds",
        m.n_worlds()
    );
}

/// `M, s ⊨ φ` by direct evaluation of every clause.
pub fn supports(m: &InqModel, s: InfoState, phi: &Formula) -> bool {
    supports_with(m, s, phi, Faults::NONE)
}

pub fn supports_with(m: &InqModel, s: InfoState, phi: &Formula, faults: Faults) -> bool {
    check_width(m, s);
    let (mut ev, root) = Evaluator::new(m, phi, faults);
    ev.eval(root, s)
}

/// `M, s ⊨ φ` via graded flatness: every `t ⊆ s` with `|t| ≤ flat(φ) + 1`.
pub fn supports_graded(m: &InqModel, s: InfoState, phi: &Formula) -> bool {
    supports_graded_with(m, s, phi, Faults::NONE)
}

pub fn supports_graded_with(m: &InqModel, s: InfoState, phi: &Formula, faults: Faults) -> bool {
    check_width(m, s);
    let bound = flatness_grade_with(phi, faults) + 1;
    let (mut ev, root) = Evaluator::new(m, phi, faults);
    s.subsets()
        .filter(|t| t.len() <= bound)
        .all(|t| ev.eval(root, t))
}

pub fn supports_by(m: &InqModel, s: InfoState, phi: &Formula, strategy: Strategy) -> bool {
    match strategy {
        Strategy::Naive => supports(m, s, phi),
        Strategy::Graded => supports_graded(m, s, phi),
    }
}

/// Persistency oracle: support at `s` carries over to every `t ⊆ s`.
pub fn check_persistency(m: &InqModel, s: InfoState, phi: &Formula) -> bool {
    check_persistency_with(m, s, phi, Faults::NONE)
}

pub fn check_persistency_with(m: &InqModel, s: InfoState, phi: &Formula, faults: Faults) -> bool {
    check_width(m, s);
    let (mut ev, root) = Evaluator::new(m, phi, faults);
    !ev.eval(root, s) || s.subsets().all(|t| ev.eval(root, t))
}

/// Ex-falso oracle: the empty state supports everything.
pub fn check_ex_falso(m: &InqModel, phi: &Formula) -> bool {
    supports(m, InfoState::EMPTY, phi)
}

/// Closure-invariance oracle: `M, s ⊨ φ` iff `M↓, s ⊨ φ`.
pub fn check_closure_invariance(m: &InqModel, s: InfoState, phi: &Formula) -> bool {
    supports(m, s, phi) == supports(&inquisitive_closure(m), s, phi)
}

/// Clause-by-clause derivation of a support verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub formula: String,
    pub state: String,
    pub holds: bool,
    pub note: Option<String>,
    pub children: Vec<Trace>,
}

impl Trace {
    fn write(&self, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = if self.holds { "|=" } else { "|/=" };
        write!(f, "{:width$}{} {} {}", "", self.state, rel, self.formula, width = depth * 2)?;
        if let Some(note) = &self.note {
            write!(f, "    ({note})")?;
        }
        writeln!(f)?;
        self.children.iter().try_for_each(|c| c.write(depth + 1, f))
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(0, f)
    }
}

/// Explains the direct evaluation of `M, s ⊨ φ`. Universal clauses that
/// hold are summarized; failing ones show the first counterexample.
pub fn explain(m: &InqModel, s: InfoState, phi: &Formula) -> Trace {
    check_width(m, s);
    explain_node(m, phi, s)
}

fn explain_node(m: &InqModel, phi: &Formula, s: InfoState) -> Trace {
    let sig = m.sig();
    let (holds, note, children) = {
        let holds = supports(m, s, phi);
        match phi {
            Formula::Atom(p) => {
                let missing = s.intersection(InfoState::from_bits(!m.valuation(*p).bits()));
                let note = missing
                    .worlds()
                    .next()
                    .map(|w| format!("{} not in V({})", m.world_name(w), sig.name(*p)));
                (holds, note, vec![])
            }
            Formula::Bottom => (holds, None, vec![]),
            Formula::And(a, b) | Formula::InqDisj(a, b) => {
                let children = vec![explain_node(m, a, s), explain_node(m, b, s)];
                (holds, None, children)
            }
            Formula::Implies(a, b) => {
                let witness = s.subsets().find(|&t| {
                    let (a_ok, b_ok) = (supports(m, t, a), supports(m, t, b));
                    a_ok && !b_ok
                });
                match witness {
                    None => {
                        let note = format!("checked all {} subsets", 1u64 << s.len());
                        (holds, Some(note), vec![])
                    }
                    Some(t) => {
                        let note = format!("counterexample t = {}", m.state_label(t));
                        let children = vec![explain_node(m, a, t), explain_node(m, b, t)];
                        (holds, Some(note), children)
                    }
                }
            }
            Formula::Box(a) => {
                match s.worlds().find(|&w| !supports(m, m.kripke_sigma(w), a)) {
                    None => (holds, Some(format!("sigma of {} worlds", s.len())), vec![]),
                    Some(w) => {
                        let note = format!("sigma({}) fails", m.world_name(w));
                        (holds, Some(note), vec![explain_node(m, a, m.kripke_sigma(w))])
                    }
                }
            }
            Formula::BoxPlus(a) => {
                let bad = s.worlds().find_map(|w| {
                    m.sigma(w)
                        .iter()
                        .find(|&&t| !supports(m, t, a))
                        .map(|&t| (w, t))
                });
                match bad {
                    None => (holds, Some("every Sigma-state supports".into()), vec![]),
                    Some((w, t)) => {
                        let note = format!("{} in Sigma({}) fails", m.state_label(t), m.world_name(w));
                        (holds, Some(note), vec![explain_node(m, a, t)])
                    }
                }
            }
        }
    };
    Trace {
        formula: phi.display(sig).to_string(),
        state: m.state_label(s),
        holds,
        note,
        children,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::parser::parse;

    fn f(text: &str) -> Formula {
        parse(text, &crate::syntax::Signature::standard(2)).unwrap()
    }

    #[test]
    fn m0_examples() {
        let m = m0();
        let p = parse("p", m.sig()).unwrap();
        let qp = parse("?p", m.sig()).unwrap();
        assert!(supports(&m, st(&[]), &Formula::Bottom));
        assert!(supports(&m, st(&[0]), &p));
        assert!(!supports(&m, st(&[0, 1]), &p));
        assert!(!supports(&m, st(&[0, 1]), &qp));
        assert!(supports(&m, st(&[0]), &parse("[+] ?p", m.sig()).unwrap()));
        assert!(supports(&m, st(&[]), &qp));
    }

    #[test]
    fn graded_matches_naive_on_examples() {
        let m = m0();
        let qp = parse("?p", m.sig()).unwrap();
        assert!(!supports_graded(&m, st(&[0, 1]), &qp));
        assert!(supports_graded(&m, st(&[]), &qp));
        assert!(supports_graded(&m, st(&[0]), &parse("p", m.sig()).unwrap()));
    }

    #[test]
    fn persistency_examples() {
        let m = m0();
        assert!(check_persistency(&m, st(&[0, 1]), &parse("?p", m.sig()).unwrap()));
        assert!(check_persistency(&m, st(&[0]), &parse("p", m.sig()).unwrap()));
        assert!(check_ex_falso(&m, &Formula::Bottom));
    }

    #[test]
    fn closure_invariance_examples() {
        let m = p0();
        let bq = parse("[] ?p", m.sig()).unwrap();
        assert!(!supports(&m, st(&[0]), &bq));
        assert!(check_closure_invariance(&m, st(&[0]), &bq));
        let bp = parse("[+] p", m.sig()).unwrap();
        assert!(!supports(&m, st(&[0]), &bp));
        assert!(!supports(&inquisitive_closure(&m), st(&[0]), &bp));
        assert!(check_closure_invariance(&m, st(&[0]), &bp));
        assert!(check_closure_invariance(&m, st(&[]), &bq));
    }

    #[test]
    fn strict_mutant_misreads_negation() {
        let m = m0();
        let np = parse("~p", m.sig()).unwrap();
        assert!(!supports(&m, st(&[0]), &np));
        assert!(supports_with(&m, st(&[0]), &np, Faults::inject(Mutant::StrictImplication)));
    }

    #[test]
    fn classical_connectives_on_singletons() {
        let m = InqModel::from_parts(
            crate::syntax::Signature::standard(2),
            vec![st(&[0, 1]), st(&[1, 2])],
            vec![vec![st(&[1])], vec![st(&[0]), st(&[2])], vec![st(&[])]],
        )
        .unwrap();
        let or = f("p \\/ q");
        let dia = f("<> q");
        for w in 0..3 {
            let kripke_or = m.valuation(PropId(0)).contains(w) || m.valuation(PropId(1)).contains(w);
            assert_eq!(supports(&m, InfoState::singleton(w), &or), kripke_or);
            let kripke_dia = m.kripke_sigma(w).worlds().any(|v| m.valuation(PropId(1)).contains(v));
            assert_eq!(supports(&m, InfoState::singleton(w), &dia), kripke_dia);
        }
    }

    #[test]
    fn trace_explains_failure() {
        let m = m0();
        let t = explain(&m, st(&[0, 1]), &parse("?p", m.sig()).unwrap());
        assert!(!t.holds);
        assert_eq!(t.children.len(), 2);
        assert_eq!(t.children[0].note.as_deref(), Some("w1 not in V(p)"));
        assert!(t.to_string().contains("|/="));
    }
}
