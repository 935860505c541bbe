//! Standard translation into two-sorted first-order logic.

use super::{eval_fo, Assignment, FoFormula, SVar, WVar};
use crate::model::InqModel;
use crate::mutation::{Faults, Mutant};
use crate::relational::{encode, Policy, RelError};
use crate::semantics::supports_with;
use crate::state::InfoState;
use crate::syntax::{flatness_grade_with, Formula};

struct Translator {
    faults: Faults,
    next_world: usize,
    next_state: usize,
}

impl Translator {
    fn new(faults: Faults) -> Self {
        Translator {
            faults,
            next_world: 1,
            next_state: 1,
        }
    }

    fn tuple(&mut self, n: usize) -> Vec<WVar> {
        let start = self.next_world;
        self.next_world += n;
        (start..start + n).map(WVar).collect()
    }

    fn states(&mut self, n: usize) -> Vec<SVar> {
        let start = self.next_state;
        self.next_state += n;
        (start..start + n).map(SVar).collect()
    }

    fn width(&self, phi: &Formula) -> usize {
        flatness_grade_with(phi, self.faults) + 1
    }

    /// `φ*(λ)`
    fn star(&mut self, phi: &Formula, lambda: SVar) -> FoFormula {
        let xs = self.tuple(self.width(phi));
        let guard = FoFormula::conj(xs.iter().map(|&x| FoFormula::Mem(x, lambda)).collect());
        let body = self.st(phi, &xs);
        FoFormula::forall_worlds(&xs, FoFormula::implies(guard, body))
    }

    fn st(&mut self, phi: &Formula, xs: &[WVar]) -> FoFormula {
        match phi {
            Formula::Atom(p) => FoFormula::conj(xs.iter().map(|&x| FoFormula::Prop(*p, x)).collect()),
            Formula::Bottom => FoFormula::conj(
                xs.iter()
                    .map(|&x| FoFormula::not(FoFormula::Eq(x, x)))
                    .collect(),
            ),
            Formula::And(a, b) => FoFormula::And(vec![self.st(a, xs), self.st(b, xs)]),
            Formula::InqDisj(a, b) => FoFormula::Or(vec![self.st(a, xs), self.st(b, xs)]),
            Formula::Implies(a, b) => {
                let ys = self.tuple(xs.len());
                let guard = FoFormula::conj(
                    ys.iter()
                        .map(|&y| {
                            FoFormula::disj(xs.iter().map(|&x| FoFormula::Eq(y, x)).collect())
                        })
                        .collect(),
                );
                let body = FoFormula::implies(self.st(a, &ys), self.st(b, &ys));
                FoFormula::forall_worlds(&ys, FoFormula::implies(guard, body))
            }
            Formula::Box(a) => {
                let m = self.width(a);
                let swapped = self.faults.has(Mutant::BoxGuardSwapped);
                let conjuncts = xs
                    .iter()
                    .map(|&x| {
                        let ys = self.tuple(m);
                        let mus = self.states(m);
                        let guard = FoFormula::conj(
                            ys.iter()
                                .zip(&mus)
                                .map(|(&y, &mu)| {
                                    if swapped {
                                        FoFormula::And(vec![FoFormula::E(y, mu), FoFormula::Mem(x, mu)])
                                    } else {
                                        FoFormula::And(vec![FoFormula::E(x, mu), FoFormula::Mem(y, mu)])
                                    }
                                })
                                .collect(),
                        );
                        let body = FoFormula::implies(guard, self.st(a, &ys));
                        FoFormula::forall_worlds(&ys, FoFormula::forall_states(&mus, body))
                    })
                    .collect();
                FoFormula::conj(conjuncts)
            }
            Formula::BoxPlus(a) => {
                let conjuncts = xs
                    .iter()
                    .map(|&x| {
                        let mu = self.states(1)[0];
                        let body = FoFormula::implies(FoFormula::E(x, mu), self.star(a, mu));
                        FoFormula::ForallState(mu, Box::new(body))
                    })
                    .collect();
                FoFormula::conj(conjuncts)
            }
        }
    }
}

/// `φ*(λ)`: universally closes a tuple of `flat(φ) + 1` worlds of `λ`.
pub fn standard_translate(phi: &Formula) -> FoFormula {
    standard_translate_with(phi, Faults::NONE)
}

pub fn standard_translate_with(phi: &Formula, faults: Faults) -> FoFormula {
    Translator::new(faults).star(phi, SVar::LAMBDA)
}

/// `φ*(x) = ST(φ, x)` in the single free world variable `x`.
pub fn world_translate(phi: &Formula) -> FoFormula {
    world_translate_with(phi, Faults::NONE)
}

pub fn world_translate_with(phi: &Formula, faults: Faults) -> FoFormula {
    Translator::new(faults).st(phi, &[WVar::X])
}

/// Whether support at `s` agrees with the translation evaluated on the
/// encoding of `M, s`.
pub fn check_fragment(
    m: &InqModel,
    s: InfoState,
    phi: &Formula,
    policy: Policy,
) -> Result<bool, RelError> {
    check_fragment_with(m, s, phi, policy, Faults::NONE)
}

pub fn check_fragment_with(
    m: &InqModel,
    s: InfoState,
    phi: &Formula,
    policy: Policy,
    faults: Faults,
) -> Result<bool, RelError> {
    let r = encode(m, s, policy)?;
    let point = r.point().expect("encodings carry their point");
    let fo = standard_translate_with(phi, faults);
    let sigma = Assignment::new().with_state(SVar::LAMBDA, point);
    let rel = eval_fo(&r, &sigma, &fo).expect("translations are closed up to λ");
    Ok(rel == supports_with(m, s, phi, faults))
}

/// World-pointed version over the minimal encoding of `M, {w}`.
pub fn check_world_fragment(m: &InqModel, w: usize, phi: &Formula) -> Result<bool, RelError> {
    let s = InfoState::singleton(w);
    let r = encode(m, s, Policy::Minimal)?;
    let sigma = Assignment::new().with_world(WVar::X, w);
    let rel = eval_fo(&r, &sigma, &world_translate(phi)).expect("closed up to x");
    Ok(rel == crate::semantics::supports(m, s, phi))
}
