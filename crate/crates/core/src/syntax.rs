//! Abstract syntax of inquisitive modal formulas.
//!
//! Every formula is built from seven constructors. Negation, classical
//! disjunction, the diamond, `top` and the question mark are abbreviations
//! that are expanded when a formula is built, see [`Formula::neg`] and
//! friends.

use std::fmt;

use thiserror::Error;

use crate::mutation::{Faults, Mutant};

/// Index of a proposition in a [`Signature`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropId(pub usize);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("duplicate proposition `{0}`")]
    Duplicate(String),
    #[error("`{0}` is not a valid proposition name")]
    InvalidName(String),
}

/// Ordered, duplicate-free list of proposition names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Signature {
    props: Vec<String>,
}

pub(crate) const KEYWORDS: [&str; 3] = ["bot", "top", "vv"];

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
}

impl Signature {
    pub fn new<I, S>(names: I) -> Result<Self, SignatureError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut sig = Signature::default();
        for name in names {
            sig.push(name.into())?;
        }
        Ok(sig)
    }

    /// `p, q, r, s, t, p5, p6, ..` truncated to `n` names.
    pub fn standard(n: usize) -> Self {
        const BASE: [&str; 5] = ["p", "q", "r", "s", "t"];
        let props = (0..n)
            .map(|i| match BASE.get(i) {
                Some(b) => b.to_string(),
                None => format!("p{i}"),
            })
            .collect();
        Signature { props }
    }

    pub fn push(&mut self, name: String) -> Result<PropId, SignatureError> {
        if !is_identifier(&name) {
            return Err(SignatureError::InvalidName(name));
        }
        if self.props.contains(&name) {
            return Err(SignatureError::Duplicate(name));
        }
        self.props.push(name);
        Ok(PropId(self.props.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<PropId> {
        self.props.iter().position(|p| p == name).map(PropId)
    }

    pub fn name(&self, id: PropId) -> &str {
        &self.props[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.props
    }

    pub fn ids(&self) -> impl Iterator<Item = PropId> {
        (0..self.props.len()).map(PropId)
    }
}

/// A formula in the core grammar.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(PropId),
    Bottom,
    And(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// Inquisitive disjunction `⩒`.
    InqDisj(Box<Formula>, Box<Formula>),
    /// Universal modality over the Kripke successor state `σ(w)`.
    Box(Box<Formula>),
    /// Inquisitive modality over every state in `Σ(w)`.
    BoxPlus(Box<Formula>),
}

impl Formula {
    pub fn atom(p: PropId) -> Self {
        Formula::Atom(p)
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn inq_or(a: Formula, b: Formula) -> Self {
        Formula::InqDisj(Box::new(a), Box::new(b))
    }

    pub fn boxed(a: Formula) -> Self {
        Formula::Box(Box::new(a))
    }

    pub fn box_plus(a: Formula) -> Self {
        Formula::BoxPlus(Box::new(a))
    }

    /// `¬φ := φ → ⊥`
    pub fn neg(a: Formula) -> Self {
        Formula::implies(a, Formula::Bottom)
    }

    /// `⊤ := ⊥ → ⊥`
    pub fn top() -> Self {
        Formula::implies(Formula::Bottom, Formula::Bottom)
    }

    /// Classical disjunction `φ ∨ ψ := ¬(¬φ ∧ ¬ψ)`.
    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::neg(Formula::and(Formula::neg(a), Formula::neg(b)))
    }

    /// `◇φ := ¬□¬φ`
    pub fn diamond(a: Formula) -> Self {
        Formula::neg(Formula::boxed(Formula::neg(a)))
    }

    /// `?φ := φ ⩒ ¬φ`
    pub fn whether(a: Formula) -> Self {
        Formula::inq_or(a.clone(), Formula::neg(a))
    }

    /// Left-nested conjunction; `None` for an empty list.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(items: I) -> Option<Self> {
        items.into_iter().reduce(Formula::and)
    }

    /// Left-nested inquisitive disjunction; `None` for an empty list.
    pub fn inq_disjunction<I: IntoIterator<Item = Formula>>(items: I) -> Option<Self> {
        items.into_iter().reduce(Formula::inq_or)
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) | Formula::Bottom => vec![],
            Formula::And(a, b) | Formula::Implies(a, b) | Formula::InqDisj(a, b) => vec![a, b],
            Formula::Box(a) | Formula::BoxPlus(a) => vec![a],
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }

    /// Height of the AST counting every connective and modality (atoms and
    /// `⊥` have height 0).
    pub fn height(&self) -> usize {
        self.children()
            .into_iter()
            .map(|c| c.height() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Nesting depth of `□` and `⊞`.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Bottom => 0,
            Formula::And(a, b) | Formula::Implies(a, b) | Formula::InqDisj(a, b) => {
                a.modal_depth().max(b.modal_depth())
            }
            Formula::Box(a) | Formula::BoxPlus(a) => a.modal_depth() + 1,
        }
    }

    pub fn inq_disj_count(&self) -> usize {
        let here = usize::from(matches!(self, Formula::InqDisj(..)));
        here + self
            .children()
            .into_iter()
            .map(Formula::inq_disj_count)
            .sum::<usize>()
    }

    /// Largest proposition index used, if any.
    pub fn max_prop(&self) -> Option<PropId> {
        match self {
            Formula::Atom(p) => Some(*p),
            _ => self.children().into_iter().filter_map(Formula::max_prop).max(),
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> Printed<'a> {
        Printed { formula: self, sig }
    }
}

/// The flatness grade `flat(φ)`.
pub fn flatness_grade(phi: &Formula) -> usize {
    flatness_grade_with(phi, Faults::NONE)
}

pub fn flatness_grade_with(phi: &Formula, faults: Faults) -> usize {
    match phi {
        Formula::Atom(_) | Formula::Bottom | Formula::Box(_) | Formula::BoxPlus(_) => 0,
        Formula::And(a, b) => flatness_grade_with(a, faults).max(flatness_grade_with(b, faults)),
        Formula::Implies(a, b) => {
            if faults.has(Mutant::FlatImpliesAntecedent) {
                flatness_grade_with(a, faults)
            } else {
                flatness_grade_with(b, faults)
            }
        }
        Formula::InqDisj(a, b) => {
            let bump = usize::from(!faults.has(Mutant::FlatDisjNoIncrement));
            flatness_grade_with(a, faults) + flatness_grade_with(b, faults) + bump
        }
    }
}

pub fn modal_depth(phi: &Formula) -> usize {
    phi.modal_depth()
}

/// Canonical text with minimal parentheses; inverse of [`crate::parser::parse`].
pub fn print(phi: &Formula, sig: &Signature) -> String {
    phi.display(sig).to_string()
}

pub struct Printed<'a> {
    formula: &'a Formula,
    sig: &'a Signature,
}

// Binding strength of the printed operator; higher binds tighter.
const PREC_IMPLIES: u8 = 0;
const PREC_DISJ: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;
const PREC_ATOM: u8 = 5;

fn prec(phi: &Formula) -> u8 {
    match phi {
        Formula::Atom(_) | Formula::Bottom => PREC_ATOM,
        Formula::Box(_) | Formula::BoxPlus(_) => PREC_UNARY,
        Formula::And(..) => PREC_AND,
        Formula::InqDisj(..) => PREC_DISJ,
        Formula::Implies(..) => PREC_IMPLIES,
    }
}

impl Printed<'_> {
    fn write(&self, phi: &Formula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if prec(phi) < min {
            f.write_str("(")?;
            self.write(phi, 0, f)?;
            return f.write_str(")");
        }
        match phi {
            Formula::Atom(p) => f.write_str(self.sig.name(*p)),
            Formula::Bottom => f.write_str("bot"),
            Formula::And(a, b) => self.binary(a, " & ", b, PREC_AND, PREC_AND + 1, f),
            Formula::InqDisj(a, b) => self.binary(a, " vv ", b, PREC_DISJ, PREC_DISJ + 1, f),
            Formula::Implies(a, b) => {
                self.binary(a, " -> ", b, PREC_IMPLIES + 1, PREC_IMPLIES, f)
            }
            Formula::Box(a) => {
                f.write_str("[] ")?;
                self.write(a, PREC_UNARY, f)
            }
            Formula::BoxPlus(a) => {
                f.write_str("[+] ")?;
                self.write(a, PREC_UNARY, f)
            }
        }
    }

    fn binary(
        &self,
        a: &Formula,
        op: &str,
        b: &Formula,
        left_min: u8,
        right_min: u8,
        f: &mut fmt::Formatter<'_>,
    ) -> fmt::Result {
        self.write(a, left_min, f)?;
        f.write_str(op)?;
        self.write(b, right_min, f)
    }
}

impl fmt::Display for Printed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.formula, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::atom(PropId(0))
    }
    fn q() -> Formula {
        Formula::atom(PropId(1))
    }

    #[test]
    fn flatness_examples() {
        assert_eq!(flatness_grade(&p()), 0);
        assert_eq!(flatness_grade(&Formula::whether(p())), 1);
        let phi = Formula::implies(
            Formula::inq_or(p(), q()),
            Formula::inq_or(p(), Formula::inq_or(q(), p())),
        );
        assert_eq!(flatness_grade(&phi), 2);
        assert_eq!(flatness_grade(&Formula::boxed(Formula::whether(p()))), 0);
    }

    #[test]
    fn flatness_mutants() {
        let phi = Formula::implies(p(), Formula::whether(q()));
        assert_eq!(flatness_grade(&phi), 1);
        assert_eq!(
            flatness_grade_with(&phi, Faults::inject(Mutant::FlatImpliesAntecedent)),
            0
        );
        assert_eq!(
            flatness_grade_with(&Formula::whether(p()), Faults::inject(Mutant::FlatDisjNoIncrement)),
            0
        );
    }

    #[test]
    fn modal_depth_examples() {
        assert_eq!(modal_depth(&p()), 0);
        assert_eq!(modal_depth(&Formula::boxed(p())), 1);
        assert_eq!(modal_depth(&Formula::box_plus(Formula::boxed(p()))), 2);
        assert_eq!(modal_depth(&Formula::diamond(p())), 1);
    }

    #[test]
    fn print_examples() {
        let sig = Signature::standard(2);
        assert_eq!(print(&Formula::neg(p()), &sig), "p -> bot");
        assert_eq!(print(&Formula::inq_or(p(), q()), &sig), "p vv q");
        assert_eq!(print(&Formula::boxed(Formula::and(p(), q())), &sig), "[] (p & q)");
        assert_eq!(
            print(&Formula::implies(Formula::implies(p(), q()), p()), &sig),
            "(p -> q) -> p"
        );
        assert_eq!(
            print(&Formula::implies(p(), Formula::implies(q(), p())), &sig),
            "p -> q -> p"
        );
        assert_eq!(
            print(&Formula::and(p(), Formula::and(q(), p())), &sig),
            "p & (q & p)"
        );
        assert_eq!(print(&Formula::box_plus(Formula::boxed(p())), &sig), "[+] [] p");
    }

    #[test]
    fn signature_rejects_bad_names() {
        assert_eq!(
            Signature::new(["p", "p"]),
            Err(SignatureError::Duplicate("p".into()))
        );
        assert!(matches!(
            Signature::new(["vv"]),
            Err(SignatureError::InvalidName(_))
        ));
        assert!(matches!(
            Signature::new(["1p"]),
            Err(SignatureError::InvalidName(_))
        ));
        assert!(Signature::new(Vec::<String>::new()).unwrap().is_empty());
    }

    #[test]
    fn standard_signature_names() {
        let sig = Signature::standard(7);
        assert_eq!(sig.names(), ["p", "q", "r", "s", "t", "p5", "p6"]);
    }
}
