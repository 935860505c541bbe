//! Two-sorted first-order logic over relational encodings.
//!
//! World variables range over `W`, state variables over the represented
//! states `S`. Conjunction and disjunction are n-ary; the empty conjunction
//! is true and the empty disjunction false.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::syntax::{PropId, Signature};

mod eval;
mod rewrite;
mod translate;

pub use eval::{eval_fo, Assignment};
pub use rewrite::{
    down_relativize, rewrite_cnf, rewrite_persistent_bc, BoolComb, Cnf, Literal, RewriteError,
};
pub use translate::{
    check_fragment, check_fragment_with, check_world_fragment, standard_translate,
    standard_translate_with, world_translate, world_translate_with,
};

/// First-sort variable. `WVar(0)` is the free `x` of the world translation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WVar(pub usize);

/// Second-sort variable. `SVar(0)` is the distinguished `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SVar(pub usize);

impl SVar {
    pub const LAMBDA: SVar = SVar(0);
}

impl WVar {
    pub const X: WVar = WVar(0);
}

impl fmt::Display for WVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => f.write_str("x"),
            i => write!(f, "x{i}"),
        }
    }
}

impl fmt::Display for SVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => f.write_str("L"),
            i => write!(f, "M{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FoFormula {
    /// `x ∈ λ`
    Mem(WVar, SVar),
    /// `E x λ`
    E(WVar, SVar),
    /// `P x`
    Prop(PropId, WVar),
    Eq(WVar, WVar),
    /// `μ ⊆ λ`, read as `∀y (y ∈ μ → y ∈ λ)`.
    Subset(SVar, SVar),
    Not(Box<FoFormula>),
    And(Vec<FoFormula>),
    Or(Vec<FoFormula>),
    Implies(Box<FoFormula>, Box<FoFormula>),
    ForallWorld(WVar, Box<FoFormula>),
    ExistsWorld(WVar, Box<FoFormula>),
    ForallState(SVar, Box<FoFormula>),
    ExistsState(SVar, Box<FoFormula>),
}

/// Free variables of a formula, by sort.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub worlds: BTreeSet<WVar>,
    pub states: BTreeSet<SVar>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FoError {
    #[error("world variable {0} is not assigned")]
    UnboundWorld(WVar),
    #[error("state variable {0} is not assigned")]
    UnboundState(SVar),
    #[error("world index {index} assigned to {var} is out of range")]
    WorldOutOfRange { var: WVar, index: usize },
    #[error("state index {index} assigned to {var} is out of range")]
    StateOutOfRange { var: SVar, index: usize },
    #[error("predicate {0} is outside the structure signature")]
    UnknownProp(usize),
    #[error("expected exactly one free state variable and no free world variables, found {0}")]
    FreeVariables(String),
}

impl FoFormula {
    /// Conjunction, collapsing a single conjunct.
    pub fn conj(mut items: Vec<FoFormula>) -> FoFormula {
        if items.len() == 1 {
            items.pop().unwrap()
        } else {
            FoFormula::And(items)
        }
    }

    /// Disjunction, collapsing a single disjunct.
    pub fn disj(mut items: Vec<FoFormula>) -> FoFormula {
        if items.len() == 1 {
            items.pop().unwrap()
        } else {
            FoFormula::Or(items)
        }
    }

    pub fn not(a: FoFormula) -> FoFormula {
        FoFormula::Not(Box::new(a))
    }

    pub fn implies(a: FoFormula, b: FoFormula) -> FoFormula {
        FoFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall_worlds(vars: &[WVar], body: FoFormula) -> FoFormula {
        vars.iter()
            .rev()
            .fold(body, |b, &v| FoFormula::ForallWorld(v, Box::new(b)))
    }

    pub fn forall_states(vars: &[SVar], body: FoFormula) -> FoFormula {
        vars.iter()
            .rev()
            .fold(body, |b, &v| FoFormula::ForallState(v, Box::new(b)))
    }

    pub fn free_vars(&self) -> FreeVars {
        let mut out = FreeVars::default();
        self.collect_free(&mut Vec::new(), &mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bw: &mut Vec<WVar>, bs: &mut Vec<SVar>, out: &mut FreeVars) {
        let w = |v: &WVar, bw: &Vec<WVar>, out: &mut FreeVars| {
            if !bw.contains(v) {
                out.worlds.insert(*v);
            }
        };
        let s = |v: &SVar, bs: &Vec<SVar>, out: &mut FreeVars| {
            if !bs.contains(v) {
                out.states.insert(*v);
            }
        };
        match self {
            FoFormula::Mem(x, l) | FoFormula::E(x, l) => {
                w(x, bw, out);
                s(l, bs, out);
            }
            FoFormula::Prop(_, x) => w(x, bw, out),
            FoFormula::Eq(x, y) => {
                w(x, bw, out);
                w(y, bw, out);
            }
            FoFormula::Subset(a, b) => {
                s(a, bs, out);
                s(b, bs, out);
            }
            FoFormula::Not(a) => a.collect_free(bw, bs, out),
            FoFormula::And(xs) | FoFormula::Or(xs) => {
                for a in xs {
                    a.collect_free(bw, bs, out);
                }
            }
            FoFormula::Implies(a, b) => {
                a.collect_free(bw, bs, out);
                b.collect_free(bw, bs, out);
            }
            FoFormula::ForallWorld(v, a) | FoFormula::ExistsWorld(v, a) => {
                bw.push(*v);
                a.collect_free(bw, bs, out);
                bw.pop();
            }
            FoFormula::ForallState(v, a) | FoFormula::ExistsState(v, a) => {
                bs.push(*v);
                a.collect_free(bw, bs, out);
                bs.pop();
            }
        }
    }

    /// Largest world and state variable index occurring anywhere.
    pub fn max_vars(&self) -> (Option<usize>, Option<usize>) {
        let mut w = None;
        let mut s = None;
        self.visit_vars(&mut |v| w = w.max(Some(v.0)), &mut |v| s = s.max(Some(v.0)));
        (w, s)
    }

    /// Number of distinct world and state variables occurring anywhere.
    pub fn var_count(&self) -> (usize, usize) {
        let mut w = BTreeSet::new();
        let mut s = BTreeSet::new();
        self.visit_vars(
            &mut |v| {
                w.insert(v);
            },
            &mut |v| {
                s.insert(v);
            },
        );
        (w.len(), s.len())
    }

    fn visit_vars(&self, fw: &mut impl FnMut(WVar), fs: &mut impl FnMut(SVar)) {
        match self {
            FoFormula::Mem(x, l) | FoFormula::E(x, l) => {
                fw(*x);
                fs(*l);
            }
            FoFormula::Prop(_, x) => fw(*x),
            FoFormula::Eq(x, y) => {
                fw(*x);
                fw(*y);
            }
            FoFormula::Subset(a, b) => {
                fs(*a);
                fs(*b);
            }
            FoFormula::Not(a) => a.visit_vars(fw, fs),
            FoFormula::And(xs) | FoFormula::Or(xs) => {
                for a in xs {
                    a.visit_vars(fw, fs);
                }
            }
            FoFormula::Implies(a, b) => {
                a.visit_vars(fw, fs);
                b.visit_vars(fw, fs);
            }
            FoFormula::ForallWorld(v, a) | FoFormula::ExistsWorld(v, a) => {
                fw(*v);
                a.visit_vars(fw, fs);
            }
            FoFormula::ForallState(v, a) | FoFormula::ExistsState(v, a) => {
                fs(*v);
                a.visit_vars(fw, fs);
            }
        }
    }

    /// Replaces free occurrences of the state variable `from` by `to`.
    /// `to` must not be captured by a binder inside `self`.
    pub fn rename_state(&self, from: SVar, to: SVar) -> FoFormula {
        let r = |v: &SVar| if *v == from { to } else { *v };
        match self {
            FoFormula::Mem(x, l) => FoFormula::Mem(*x, r(l)),
            FoFormula::E(x, l) => FoFormula::E(*x, r(l)),
            FoFormula::Subset(a, b) => FoFormula::Subset(r(a), r(b)),
            FoFormula::Prop(..) | FoFormula::Eq(..) => self.clone(),
            FoFormula::Not(a) => FoFormula::not(a.rename_state(from, to)),
            FoFormula::And(xs) => {
                FoFormula::And(xs.iter().map(|a| a.rename_state(from, to)).collect())
            }
            FoFormula::Or(xs) => FoFormula::Or(xs.iter().map(|a| a.rename_state(from, to)).collect()),
            FoFormula::Implies(a, b) => {
                FoFormula::implies(a.rename_state(from, to), b.rename_state(from, to))
            }
            FoFormula::ForallWorld(v, a) => {
                FoFormula::ForallWorld(*v, Box::new(a.rename_state(from, to)))
            }
            FoFormula::ExistsWorld(v, a) => {
                FoFormula::ExistsWorld(*v, Box::new(a.rename_state(from, to)))
            }
            FoFormula::ForallState(v, _) | FoFormula::ExistsState(v, _) if *v == from => {
                self.clone()
            }
            FoFormula::ForallState(v, a) => {
                FoFormula::ForallState(*v, Box::new(a.rename_state(from, to)))
            }
            FoFormula::ExistsState(v, a) => {
                FoFormula::ExistsState(*v, Box::new(a.rename_state(from, to)))
            }
        }
    }

    /// Number of leading world quantifiers.
    pub fn leading_world_quantifiers(&self) -> usize {
        let mut n = 0;
        let mut cur = self;
        while let FoFormula::ForallWorld(_, body) = cur {
            n += 1;
            cur = body;
        }
        n
    }

    pub fn size(&self) -> usize {
        1 + match self {
            FoFormula::Not(a)
            | FoFormula::ForallWorld(_, a)
            | FoFormula::ExistsWorld(_, a)
            | FoFormula::ForallState(_, a)
            | FoFormula::ExistsState(_, a) => a.size(),
            FoFormula::And(xs) | FoFormula::Or(xs) => xs.iter().map(FoFormula::size).sum(),
            FoFormula::Implies(a, b) => a.size() + b.size(),
            _ => 0,
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> FoPrinted<'a> {
        FoPrinted {
            formula: self,
            preds: predicate_names(sig),
        }
    }
}

/// Capitalized proposition names, or `P_name` for all when capitalizing
/// would merge two names.
fn predicate_names(sig: &Signature) -> Vec<String> {
    let cap = |n: &str| {
        let mut c = n.chars();
        match c.next() {
            Some(h) => h.to_ascii_uppercase().to_string() + c.as_str(),
            None => String::new(),
        }
    };
    let names: Vec<String> = sig.names().iter().map(|n| cap(n)).collect();
    let distinct: BTreeSet<&String> = names.iter().collect();
    if distinct.len() == names.len() {
        names
    } else {
        sig.names().iter().map(|n| format!("P_{n}")).collect()
    }
}

pub struct FoPrinted<'a> {
    formula: &'a FoFormula,
    preds: Vec<String>,
}

const PREC_IMPLIES: u8 = 0;
const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;
const PREC_ATOM: u8 = 4;

fn fo_prec(phi: &FoFormula) -> u8 {
    match phi {
        FoFormula::Implies(..) => PREC_IMPLIES,
        FoFormula::Or(xs) if xs.len() > 1 => PREC_OR,
        FoFormula::And(xs) if xs.len() > 1 => PREC_AND,
        FoFormula::Or(_) | FoFormula::And(_) => PREC_ATOM,
        FoFormula::Not(_) => PREC_NOT,
        // quantifiers extend as far right as possible
        FoFormula::ForallWorld(..)
        | FoFormula::ExistsWorld(..)
        | FoFormula::ForallState(..)
        | FoFormula::ExistsState(..) => PREC_IMPLIES,
        _ => PREC_ATOM,
    }
}

impl FoPrinted<'_> {
    fn write(&self, phi: &FoFormula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if fo_prec(phi) < min {
            f.write_str("(")?;
            self.write(phi, 0, f)?;
            return f.write_str(")");
        }
        match phi {
            FoFormula::Mem(x, l) => write!(f, "{x} in {l}"),
            FoFormula::E(x, l) => write!(f, "E({x}, {l})"),
            FoFormula::Prop(p, x) => match self.preds.get(p.0) {
                Some(name) => write!(f, "{name}({x})"),
                None => write!(f, "P_{}({x})", p.0),
            },
            FoFormula::Eq(x, y) => write!(f, "{x} = {y}"),
            FoFormula::Subset(a, b) => write!(f, "{a} <= {b}"),
            FoFormula::Not(a) => {
                f.write_str("~")?;
                self.write(a, PREC_NOT, f)
            }
            FoFormula::And(xs) if xs.is_empty() => f.write_str("true"),
            FoFormula::Or(xs) if xs.is_empty() => f.write_str("false"),
            FoFormula::And(xs) => self.nary(xs, " & ", PREC_AND + 1, f),
            FoFormula::Or(xs) => self.nary(xs, " | ", PREC_OR + 1, f),
            FoFormula::Implies(a, b) => {
                self.write(a, PREC_IMPLIES + 1, f)?;
                f.write_str(" -> ")?;
                self.write(b, PREC_IMPLIES + 1, f)
            }
            FoFormula::ForallWorld(v, a) => self.quantifier("forall", v, a, f),
            FoFormula::ExistsWorld(v, a) => self.quantifier("exists", v, a, f),
            FoFormula::ForallState(v, a) => self.quantifier("forall", v, a, f),
            FoFormula::ExistsState(v, a) => self.quantifier("exists", v, a, f),
        }
    }

    fn nary(&self, xs: &[FoFormula], op: &str, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in xs.iter().enumerate() {
            if i > 0 {
                f.write_str(op)?;
            }
            self.write(a, min, f)?;
        }
        Ok(())
    }

    fn quantifier(
        &self,
        q: &str,
        v: &dyn fmt::Display,
        body: &FoFormula,
        f: &mut fmt::Formatter<'_>,
    ) -> fmt::Result {
        write!(f, "{q} {v}. ")?;
        let binary = matches!(
            body,
            FoFormula::Implies(..)
        ) || matches!(body, FoFormula::And(xs) | FoFormula::Or(xs) if xs.len() > 1);
        if binary {
            f.write_str("(")?;
            self.write(body, 0, f)?;
            f.write_str(")")
        } else {
            self.write(body, 0, f)
        }
    }
}

impl fmt::Display for FoPrinted<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.formula, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printer() {
        let sig = Signature::standard(2);
        let x1 = WVar(1);
        let phi = FoFormula::ForallWorld(
            x1,
            Box::new(FoFormula::implies(
                FoFormula::Mem(x1, SVar::LAMBDA),
                FoFormula::Prop(PropId(0), x1),
            )),
        );
        assert_eq!(phi.display(&sig).to_string(), "forall x1. (x1 in L -> P(x1))");

        let neg = FoFormula::not(FoFormula::Eq(x1, x1));
        assert_eq!(neg.display(&sig).to_string(), "~x1 = x1");
        let or = FoFormula::Or(vec![
            FoFormula::And(vec![FoFormula::Prop(PropId(0), x1), FoFormula::Prop(PropId(1), x1)]),
            FoFormula::E(WVar(0), SVar(2)),
        ]);
        assert_eq!(or.display(&sig).to_string(), "P(x1) & Q(x1) | E(x, M2)");
    }

    #[test]
    fn predicate_fallback() {
        let sig = Signature::new(["p", "P"]).unwrap();
        let phi = FoFormula::Prop(PropId(1), WVar(3));
        assert_eq!(phi.display(&sig).to_string(), "P_P(x3)");
    }

    #[test]
    fn free_vars_and_renaming() {
        let mu = SVar(1);
        let phi = FoFormula::ForallState(
            mu,
            Box::new(FoFormula::implies(
                FoFormula::Subset(mu, SVar::LAMBDA),
                FoFormula::Mem(WVar(2), mu),
            )),
        );
        let fv = phi.free_vars();
        assert_eq!(fv.states.into_iter().collect::<Vec<_>>(), vec![SVar::LAMBDA]);
        assert_eq!(fv.worlds.into_iter().collect::<Vec<_>>(), vec![WVar(2)]);
        let renamed = phi.rename_state(SVar::LAMBDA, SVar(5));
        assert!(renamed.free_vars().states.contains(&SVar(5)));
        assert_eq!(phi.rename_state(mu, SVar(7)), phi);
    }
}
