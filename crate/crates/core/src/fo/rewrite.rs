//! Downward relativization and the rewrite of persistent boolean
//! combinations of translations into a single modal formula.

use std::fmt;

use thiserror::Error;

use super::{standard_translate, FoError, FoFormula, SVar};
use crate::syntax::{Formula, Signature};

/// `ψ↓(λ) = ∀μ (μ ⊆ λ → ψ(μ))` for a fresh `μ`.
pub fn down_relativize(psi: &FoFormula) -> Result<FoFormula, FoError> {
    let fv = psi.free_vars();
    if fv.states.len() != 1 || !fv.worlds.is_empty() {
        let names: Vec<String> = fv
            .worlds
            .iter()
            .map(ToString::to_string)
            .chain(fv.states.iter().map(ToString::to_string))
            .collect();
        return Err(FoError::FreeVariables(format!("{{{}}}", names.join(", "))));
    }
    let lambda = *fv.states.first().unwrap();
    let mu = SVar(psi.max_vars().1.unwrap_or(0) + 1);
    Ok(FoFormula::ForallState(
        mu,
        Box::new(FoFormula::implies(
            FoFormula::Subset(mu, lambda),
            psi.rename_state(lambda, mu),
        )),
    ))
}

/// Boolean combination of standard translations `φ*(λ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolComb {
    Lit(Formula),
    Not(Box<BoolComb>),
    And(Vec<BoolComb>),
    Or(Vec<BoolComb>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub positive: bool,
    pub formula: Formula,
}

impl Literal {
    pub fn pos(formula: Formula) -> Self {
        Literal {
            positive: true,
            formula,
        }
    }

    pub fn neg(formula: Formula) -> Self {
        Literal {
            positive: false,
            formula,
        }
    }
}

/// Conjunction of clauses, each a disjunction of literals `φ*` or `¬φ*`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Cnf {
    pub clauses: Vec<Vec<Literal>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("not in conjunctive normal form: {0}")]
    NotCnf(&'static str),
}

fn literal(bc: &BoolComb) -> Result<Literal, RewriteError> {
    match bc {
        BoolComb::Lit(f) => Ok(Literal::pos(f.clone())),
        BoolComb::Not(inner) => match &**inner {
            BoolComb::Lit(f) => Ok(Literal::neg(f.clone())),
            _ => Err(RewriteError::NotCnf("negation applied to a compound")),
        },
        _ => Err(RewriteError::NotCnf("expected a literal")),
    }
}

fn clause(bc: &BoolComb) -> Result<Vec<Literal>, RewriteError> {
    match bc {
        BoolComb::Or(xs) => xs
            .iter()
            .map(|x| literal(x).map_err(|_| RewriteError::NotCnf("clauses must hold literals only")))
            .collect(),
        BoolComb::And(_) => Err(RewriteError::NotCnf("conjunction inside a clause")),
        other => Ok(vec![literal(other)?]),
    }
}

impl TryFrom<&BoolComb> for Cnf {
    type Error = RewriteError;

    fn try_from(bc: &BoolComb) -> Result<Self, Self::Error> {
        let clauses = match bc {
            BoolComb::And(xs) => xs.iter().map(clause).collect::<Result<_, _>>()?,
            other => vec![clause(other)?],
        };
        Ok(Cnf { clauses })
    }
}

impl Cnf {
    pub fn to_bool_comb(&self) -> BoolComb {
        BoolComb::And(
            self.clauses
                .iter()
                .map(|c| {
                    BoolComb::Or(
                        c.iter()
                            .map(|l| {
                                let lit = BoolComb::Lit(l.formula.clone());
                                if l.positive {
                                    lit
                                } else {
                                    BoolComb::Not(Box::new(lit))
                                }
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    /// The first-order formula in `λ`. A clause without positive literals
    /// also gets the disjunct `⊥*(λ)`, which only holds at the empty state.
    pub fn to_fo(&self) -> FoFormula {
        let clauses = self
            .clauses
            .iter()
            .map(|c| {
                let mut lits: Vec<FoFormula> = c
                    .iter()
                    .map(|l| {
                        let t = standard_translate(&l.formula);
                        if l.positive {
                            t
                        } else {
                            FoFormula::not(t)
                        }
                    })
                    .collect();
                if !c.iter().any(|l| l.positive) {
                    lits.push(standard_translate(&Formula::Bottom));
                }
                FoFormula::disj(lits)
            })
            .collect();
        FoFormula::conj(clauses)
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        CnfPrinted { cnf: self, sig }
    }
}

struct CnfPrinted<'a> {
    cnf: &'a Cnf,
    sig: &'a Signature,
}

impl fmt::Display for CnfPrinted<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.cnf.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            f.write_str("[")?;
            for (j, l) in c.iter().enumerate() {
                if j > 0 {
                    f.write_str(" | ")?;
                }
                let sign = if l.positive { "" } else { "~" };
                write!(f, "{sign}({})*", l.formula.display(self.sig))?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

/// `⋀_clauses (⋀ negatives → ⩒ positives)`; `⊤` is `⊥ → ⊥`.
pub fn rewrite_cnf(cnf: &Cnf) -> Formula {
    let clauses = cnf.clauses.iter().map(|c| {
        let neg = c.iter().filter(|l| !l.positive).map(|l| l.formula.clone());
        let pos = c.iter().filter(|l| l.positive).map(|l| l.formula.clone());
        let antecedent = Formula::conjunction(neg).unwrap_or_else(Formula::top);
        let consequent = Formula::inq_disjunction(pos).unwrap_or(Formula::Bottom);
        Formula::implies(antecedent, consequent)
    });
    Formula::conjunction(clauses).unwrap_or_else(Formula::top)
}

pub fn rewrite_persistent_bc(bc: &BoolComb) -> Result<Formula, RewriteError> {
    Ok(rewrite_cnf(&Cnf::try_from(bc)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fo::{eval_fo, Assignment};
    use crate::model::fixtures::*;
    use crate::parser::parse;
    use crate::relational::{decode, encode, state_closure, Policy};
    use crate::semantics::supports;
    use crate::syntax::print;

    fn lit(text: &str) -> BoolComb {
        BoolComb::Lit(parse(text, &Signature::standard(2)).unwrap())
    }

    fn not(b: BoolComb) -> BoolComb {
        BoolComb::Not(Box::new(b))
    }

    #[test]
    fn rewrite_examples() {
        let sig = Signature::standard(2);
        let bc = BoolComb::Or(vec![not(lit("p")), lit("q")]);
        assert_eq!(print(&rewrite_persistent_bc(&bc).unwrap(), &sig), "p -> q");
        assert_eq!(
            print(&rewrite_persistent_bc(&lit("p")).unwrap(), &sig),
            "(bot -> bot) -> p"
        );
        assert_eq!(print(&rewrite_persistent_bc(&not(lit("p"))).unwrap(), &sig), "p -> bot");
        let bad = not(BoolComb::And(vec![lit("p")]));
        assert!(rewrite_persistent_bc(&bad).is_err());
        let nested = BoolComb::And(vec![BoolComb::Or(vec![BoolComb::And(vec![])])]);
        assert!(rewrite_persistent_bc(&nested).is_err());
    }

    #[test]
    fn relativization() {
        let sig = Signature::standard(1);
        let p = standard_translate(&parse("p", &sig).unwrap());
        let down = down_relativize(&p).unwrap();
        assert_eq!(
            down.display(&sig).to_string(),
            "forall M1. (M1 <= L -> (forall x1. (x1 in M1 -> P(x1))))"
        );
        let c = state_closure(&encode(&m0(), st(&[0, 1]), Policy::Minimal).unwrap()).unwrap();
        let not_p = FoFormula::not(p.clone());
        let not_p_down = down_relativize(&not_p).unwrap();
        for i in 0..c.n_states() {
            let sigma = Assignment::new().with_state(SVar::LAMBDA, i);
            assert_eq!(eval_fo(&c, &sigma, &p), eval_fo(&c, &sigma, &down));
            if c.state(i) == st(&[0, 1]) {
                assert!(eval_fo(&c, &sigma, &not_p).unwrap());
                assert!(!eval_fo(&c, &sigma, &not_p_down).unwrap());
            }
        }
        assert!(down_relativize(&FoFormula::Eq(super::super::WVar(1), super::super::WVar(1))).is_err());
    }

    #[test]
    fn negative_clause_matches_negation() {
        let sig = Signature::standard(1);
        let cnf = Cnf::try_from(&not(lit("p"))).unwrap();
        let rewritten = rewrite_cnf(&cnf);
        let down = down_relativize(&cnf.to_fo()).unwrap();
        for m in [m0(), p0()] {
            for s in crate::state::InfoState::full(2).subsets().filter(|s| !s.is_empty()) {
                let c = state_closure(&encode(&m, s, Policy::Minimal).unwrap()).unwrap();
                let (closed, _) = decode(&c);
                let sigma = Assignment::new().with_state(SVar::LAMBDA, c.point().unwrap());
                assert_eq!(
                    eval_fo(&c, &sigma, &down).unwrap(),
                    supports(&closed, s, &rewritten),
                    "{}",
                    print(&rewritten, &sig)
                );
            }
        }
    }
}
