//! Single differential trials, their shrinking, and replayable bundles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bisim::{bulk_equiv, full_bisim, n_bisim};
use crate::fo::{
    down_relativize, eval_fo, rewrite_cnf, standard_translate, standard_translate_with, Assignment,
    Cnf, FoFormula, Literal, SVar,
};
use crate::model::{inquisitive_closure, inquisitive_closure_with, InqModel, ModelFile, RawModel};
use crate::mutation::{Faults, Mutant};
use crate::parser::parse;
use crate::relational::{decode, encode, state_closure, validate_relational, Policy, RelStruct, RelVerdict};
use crate::semantics::{check_ex_falso, check_persistency_with, supports, supports_graded_with, supports_with};
use crate::state::InfoState;
use crate::syntax::{Formula, PropId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Fragment,
    Graded,
    Persistency,
    Closure,
    Ef,
    Rewrite,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Fragment,
        Check::Graded,
        Check::Persistency,
        Check::Closure,
        Check::Ef,
        Check::Rewrite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Fragment => "fragment",
            Check::Graded => "graded",
            Check::Persistency => "persistency",
            Check::Closure => "closure",
            Check::Ef => "ef",
            Check::Rewrite => "rewrite",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check `{s}`"))
    }
}

/// One concrete input of one check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instance {
    /// `proper` records that the model was meant to be proper.
    Fragment {
        model: InqModel,
        state: InfoState,
        formula: Formula,
        policy: Policy,
        proper: bool,
    },
    Graded {
        model: InqModel,
        state: InfoState,
        formula: Formula,
    },
    Persistency {
        model: InqModel,
        state: InfoState,
        formula: Formula,
    },
    Closure {
        model: InqModel,
        state: InfoState,
        formula: Formula,
    },
    Ef {
        left: InqModel,
        left_state: InfoState,
        right: InqModel,
        right_state: InfoState,
        depth: usize,
        formula: Formula,
    },
    Rewrite {
        model: InqModel,
        state: InfoState,
        cnf: Cnf,
    },
}

/// Verdict of running an instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub failed: bool,
    pub detail: String,
}

impl Outcome {
    fn pass(detail: impl Into<String>) -> Self {
        Outcome {
            failed: false,
            detail: detail.into(),
        }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Outcome {
            failed: true,
            detail: detail.into(),
        }
    }

    fn compare(what: (&str, bool), other: (&str, bool)) -> Self {
        let detail = format!("{}: {}, {}: {}", what.0, what.1, other.0, other.1);
        Outcome {
            failed: what.1 != other.1,
            detail,
        }
    }
}

fn lambda(r: &RelStruct, s: InfoState) -> Assignment {
    Assignment::new().with_state(SVar::LAMBDA, r.state_index(s).expect("point is represented"))
}

fn eval_at(r: &RelStruct, s: InfoState, psi: &FoFormula) -> bool {
    eval_fo(r, &lambda(r, s), psi).expect("closed up to λ")
}

/// Extra facts about a rewrite instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct RewriteFacts {
    /// The input formula is persistent below the point.
    pub persistent: bool,
    /// The commutation law had two nontrivial halves to compare.
    pub conjunction_law: bool,
}

pub(crate) fn rewrite_facts(model: &InqModel, state: InfoState, cnf: &Cnf) -> (Outcome, RewriteFacts) {
    let mut facts = RewriteFacts::default();
    if state.is_empty() {
        return (Outcome::pass("empty point skipped"), facts);
    }
    let r = match encode(model, state, Policy::Minimal).and_then(|r| state_closure(&r)) {
        Ok(r) => r,
        Err(e) => return (Outcome::fail(format!("encoding failed: {e}")), facts),
    };
    let (closed, _) = decode(&r);
    let psi = cnf.to_fo();
    let down = down_relativize(&psi).expect("one free state variable");
    let rewritten = rewrite_cnf(cnf);
    let rewritten_fo = standard_translate(&rewritten);
    let halves = (cnf.clauses.len() >= 2).then(|| {
        let (first, rest) = cnf.clauses.split_at(1);
        let a = Cnf { clauses: first.to_vec() }.to_fo();
        let b = Cnf { clauses: rest.to_vec() }.to_fo();
        let joint = down_relativize(&FoFormula::And(vec![a.clone(), b.clone()])).unwrap();
        let split = FoFormula::And(vec![down_relativize(&a).unwrap(), down_relativize(&b).unwrap()]);
        (joint, split)
    });
    facts.conjunction_law = halves.is_some();
    for u in r.states().iter().copied().filter(|u| !u.is_empty()) {
        let name = closed.state_label(u);
        let fo_down = eval_at(&r, u, &down);
        let fo_rewritten = eval_at(&r, u, &rewritten_fo);
        let sem_rewritten = supports(&closed, u, &rewritten);
        if fo_down != fo_rewritten || fo_down != sem_rewritten {
            return (
                Outcome::fail(format!(
                    "at {name}: input relativized: {fo_down}, rewrite translated: {fo_rewritten}, rewrite supported: {sem_rewritten}"
                )),
                facts,
            );
        }
        if let Some((joint, split)) = &halves {
            let (x, y) = (eval_at(&r, u, joint), eval_at(&r, u, split));
            if x != y {
                return (
                    Outcome::fail(format!(
                        "at {name}: conjunction relativized: {x}, conjunction of relativized: {y}"
                    )),
                    facts,
                );
            }
        }
    }
    let below: Vec<InfoState> = state.subsets().collect();
    let holds: Vec<bool> = below.iter().map(|&u| eval_at(&r, u, &psi)).collect();
    facts.persistent = below.iter().zip(&holds).all(|(&u, &h)| {
        !h || below
            .iter()
            .zip(&holds)
            .all(|(&t, &ht)| !t.is_subset(u) || ht)
    });
    let at_point = eval_at(&r, state, &rewritten_fo);
    if facts.persistent && holds[0] != at_point {
        return (
            Outcome::fail(format!("persistent input: {}, rewrite translated: {at_point}", holds[0])),
            facts,
        );
    }
    (Outcome::pass(format!("rewrite at the point: {at_point}")), facts)
}

impl Instance {
    pub fn check(&self) -> Check {
        match self {
            Instance::Fragment { .. } => Check::Fragment,
            Instance::Graded { .. } => Check::Graded,
            Instance::Persistency { .. } => Check::Persistency,
            Instance::Closure { .. } => Check::Closure,
            Instance::Ef { .. } => Check::Ef,
            Instance::Rewrite { .. } => Check::Rewrite,
        }
    }

    pub fn run(&self, faults: Faults) -> Outcome {
        match self {
            Instance::Fragment {
                model,
                state,
                formula,
                policy,
                proper,
            } => {
                if *proper && !model.is_proper() {
                    return Outcome::fail("model built as proper is not downward closed");
                }
                let r = match encode(model, *state, *policy) {
                    Ok(r) => r,
                    Err(e) => return Outcome::fail(format!("encoding failed: {e}")),
                };
                let rel_model = validate_relational(&r.to_raw()) == RelVerdict::Model;
                if rel_model != model.is_proper() {
                    return Outcome::fail(format!(
                        "relational verdict {:?} for a {:?} model",
                        validate_relational(&r.to_raw()),
                        model.kind()
                    ));
                }
                let fo = eval_at(&r, *state, &standard_translate_with(formula, faults));
                Outcome::compare(("support", supports_with(model, *state, formula, faults)), ("fo", fo))
            }
            Instance::Graded {
                model,
                state,
                formula,
            } => Outcome::compare(
                ("naive", supports_with(model, *state, formula, faults)),
                ("graded", supports_graded_with(model, *state, formula, faults)),
            ),
            Instance::Persistency {
                model,
                state,
                formula,
            } => {
                let persistent = check_persistency_with(model, *state, formula, faults);
                let ex_falso = check_ex_falso(model, formula);
                let detail = format!("persistency: {persistent}, ex falso: {ex_falso}");
                if persistent && ex_falso {
                    Outcome::pass(detail)
                } else {
                    Outcome::fail(detail)
                }
            }
            Instance::Closure {
                model,
                state,
                formula,
            } => {
                let closed = inquisitive_closure_with(model, faults);
                if !closed.is_proper() {
                    return Outcome::fail("closure is not downward closed");
                }
                Outcome::compare(
                    ("model", supports(model, *state, formula)),
                    ("closure", supports(&closed, *state, formula)),
                )
            }
            Instance::Ef {
                left,
                left_state,
                right,
                right_state,
                depth,
                formula,
            } => {
                let equivalent = match n_bisim(left, *left_state, right, *right_state, *depth) {
                    Ok(r) => r.equivalent,
                    Err(e) => return Outcome::fail(e.to_string()),
                };
                let (lc, rc) = (inquisitive_closure(left), inquisitive_closure(right));
                let closed = n_bisim(&lc, *left_state, &rc, *right_state, *depth).map(|r| r.equivalent);
                if closed != Ok(equivalent) {
                    return Outcome::fail(format!("equivalent at {depth}: {equivalent}, on closures: {closed:?}"));
                }
                let bulk = bulk_equiv(&lc, *left_state, &rc, *right_state).unwrap();
                let full = full_bisim(&lc, *left_state, &rc, *right_state).unwrap().equivalent;
                if bulk && !full {
                    return Outcome::fail("bulk equivalent but not fully bisimilar");
                }
                let a = supports(left, *left_state, formula);
                let b = supports(right, *right_state, formula);
                let detail = format!("equivalent at {depth}: {equivalent}, left: {a}, right: {b}");
                if equivalent && a != b && formula.modal_depth() <= *depth {
                    Outcome::fail(detail)
                } else {
                    Outcome::pass(detail)
                }
            }
            Instance::Rewrite { model, state, cnf } => rewrite_facts(model, *state, cnf).0,
        }
    }

    /// Smaller instances of the same check and validity class.
    pub fn shrink_candidates(&self) -> Vec<Instance> {
        let mut out = Vec::new();
        match self {
            Instance::Fragment {
                model,
                state,
                formula,
                policy,
                proper,
            } => {
                for (m, s) in shrink_pointed(model, *state, false) {
                    out.push(Instance::Fragment {
                        model: m,
                        state: s,
                        formula: formula.clone(),
                        policy: *policy,
                        proper: *proper,
                    });
                }
                for f in shrink_formula(formula) {
                    out.push(Instance::Fragment {
                        model: model.clone(),
                        state: *state,
                        formula: f,
                        policy: *policy,
                        proper: *proper,
                    });
                }
                if *policy != Policy::Minimal {
                    out.push(Instance::Fragment {
                        model: model.clone(),
                        state: *state,
                        formula: formula.clone(),
                        policy: Policy::Minimal,
                        proper: *proper,
                    });
                }
            }
            Instance::Graded {
                model,
                state,
                formula,
            }
            | Instance::Persistency {
                model,
                state,
                formula,
            }
            | Instance::Closure {
                model,
                state,
                formula,
            } => {
                let rebuild = |model, state, formula| match self {
                    Instance::Graded { .. } => Instance::Graded {
                        model,
                        state,
                        formula,
                    },
                    Instance::Persistency { .. } => Instance::Persistency {
                        model,
                        state,
                        formula,
                    },
                    _ => Instance::Closure {
                        model,
                        state,
                        formula,
                    },
                };
                for (m, s) in shrink_pointed(model, *state, false) {
                    out.push(rebuild(m, s, formula.clone()));
                }
                for f in shrink_formula(formula) {
                    out.push(rebuild(model.clone(), *state, f));
                }
            }
            Instance::Ef {
                left,
                left_state,
                right,
                right_state,
                depth,
                formula,
            } => {
                for f in shrink_formula(formula) {
                    out.push(Instance::Ef {
                        left: left.clone(),
                        left_state: *left_state,
                        right: right.clone(),
                        right_state: *right_state,
                        depth: *depth,
                        formula: f,
                    });
                }
                for (m, s) in shrink_pointed(left, *left_state, false) {
                    out.push(Instance::Ef {
                        left: m,
                        left_state: s,
                        right: right.clone(),
                        right_state: *right_state,
                        depth: *depth,
                        formula: formula.clone(),
                    });
                }
                for (m, s) in shrink_pointed(right, *right_state, false) {
                    out.push(Instance::Ef {
                        left: left.clone(),
                        left_state: *left_state,
                        right: m,
                        right_state: s,
                        depth: *depth,
                        formula: formula.clone(),
                    });
                }
            }
            Instance::Rewrite { model, state, cnf } => {
                for (m, s) in shrink_pointed(model, *state, true) {
                    out.push(Instance::Rewrite {
                        model: m,
                        state: s,
                        cnf: cnf.clone(),
                    });
                }
                for c in shrink_cnf(cnf) {
                    out.push(Instance::Rewrite {
                        model: model.clone(),
                        state: *state,
                        cnf: c,
                    });
                }
            }
        }
        out
    }

    /// Greedy shrinking while the failure persists. Returns the number of
    /// accepted steps.
    pub fn shrink(mut self, faults: Faults, max_steps: usize) -> (Instance, usize) {
        let mut steps = 0;
        'outer: while steps < max_steps {
            for cand in self.shrink_candidates() {
                if cand.run(faults).failed {
                    self = cand;
                    steps += 1;
                    continue 'outer;
                }
            }
            break;
        }
        (self, steps)
    }
}

fn drop_world(m: &InqModel, k: usize) -> Option<InqModel> {
    if m.n_worlds() <= 1 {
        return None;
    }
    let raw = m.to_raw();
    let mut names = raw.world_names.clone();
    names.remove(k);
    let mut sigma = raw.sigma.clone();
    sigma.remove(k);
    let sigma = sigma
        .into_iter()
        .map(|fam| fam.into_iter().map(|t| t.drop_world(k)).collect())
        .collect();
    InqModel::new(RawModel {
        world_names: names,
        sig: raw.sig,
        valuation: raw.valuation.iter().map(|p| p.drop_world(k)).collect(),
        sigma,
    })
    .ok()
}

/// Drops a maximal member of `Σ(w)`; downward closure survives.
fn drop_maximal(m: &InqModel, w: usize) -> Vec<InqModel> {
    let fam = m.sigma(w);
    if fam.len() <= 1 {
        return Vec::new();
    }
    fam.iter()
        .filter(|&&t| !fam.iter().any(|&u| u != t && t.is_subset(u)))
        .filter_map(|&t| {
            let mut raw = m.to_raw();
            raw.sigma[w].retain(|&u| u != t);
            InqModel::new(raw).ok()
        })
        .collect()
}

fn shrink_pointed(m: &InqModel, s: InfoState, keep_nonempty: bool) -> Vec<(InqModel, InfoState)> {
    let mut out = Vec::new();
    let same_class = |c: &InqModel| c.kind() == m.kind();
    for k in 0..m.n_worlds() {
        if let Some(c) = drop_world(m, k) {
            let t = s.drop_world(k);
            if same_class(&c) && !(keep_nonempty && t.is_empty()) {
                out.push((c, t));
            }
        }
    }
    for w in 0..m.n_worlds() {
        for c in drop_maximal(m, w) {
            if same_class(&c) {
                out.push((c, s));
            }
        }
    }
    for w in s.worlds() {
        let t = s.without(w);
        if !(keep_nonempty && t.is_empty()) {
            out.push((m.clone(), t));
        }
    }
    for p in m.sig().ids() {
        for w in m.valuation(p).worlds() {
            let mut raw = m.to_raw();
            raw.valuation[p.0] = raw.valuation[p.0].without(w);
            if let Ok(c) = InqModel::new(raw) {
                out.push((c, s));
            }
        }
    }
    out
}

/// Subformulas, constants, and single-position replacements.
pub fn shrink_formula(phi: &Formula) -> Vec<Formula> {
    let mut out: Vec<Formula> = Vec::new();
    if *phi != Formula::Bottom {
        out.push(Formula::Bottom);
    }
    if *phi != Formula::atom(PropId(0)) && *phi != Formula::Bottom {
        out.push(Formula::atom(PropId(0)));
    }
    out.extend(phi.children().into_iter().cloned());
    let bx = |f: Formula| Box::new(f);
    match phi {
        Formula::And(a, b) | Formula::Implies(a, b) | Formula::InqDisj(a, b) => {
            let make = |x: Formula, y: Formula| match phi {
                Formula::And(..) => Formula::And(bx(x), bx(y)),
                Formula::Implies(..) => Formula::Implies(bx(x), bx(y)),
                _ => Formula::InqDisj(bx(x), bx(y)),
            };
            for a2 in shrink_formula(a) {
                out.push(make(a2, (**b).clone()));
            }
            for b2 in shrink_formula(b) {
                out.push(make((**a).clone(), b2));
            }
        }
        Formula::Box(a) => out.extend(shrink_formula(a).into_iter().map(Formula::boxed)),
        Formula::BoxPlus(a) => out.extend(shrink_formula(a).into_iter().map(Formula::box_plus)),
        Formula::Atom(_) | Formula::Bottom => {}
    }
    out.retain(|f| f.size() < phi.size() || (f.size() == phi.size() && f != phi && phi.max_prop() > f.max_prop()));
    out.dedup();
    out
}

fn shrink_cnf(cnf: &Cnf) -> Vec<Cnf> {
    let mut out = Vec::new();
    let n = cnf.clauses.len();
    for i in 0..n {
        if n > 1 {
            let mut c = cnf.clone();
            c.clauses.remove(i);
            out.push(c);
        }
        let clause = &cnf.clauses[i];
        for j in 0..clause.len() {
            if clause.len() > 1 {
                let mut c = cnf.clone();
                c.clauses[i].remove(j);
                out.push(c);
            }
            for f in shrink_formula(&clause[j].formula) {
                let mut c = cnf.clone();
                c.clauses[i][j].formula = f;
                out.push(c);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiteralFile {
    pub positive: bool,
    pub formula: String,
}

/// JSON form of an [`Instance`]; points live in the model files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "lowercase")]
pub enum InstanceFile {
    Fragment {
        model: ModelFile,
        formula: String,
        policy: Policy,
        proper: bool,
    },
    Graded {
        model: ModelFile,
        formula: String,
    },
    Persistency {
        model: ModelFile,
        formula: String,
    },
    Closure {
        model: ModelFile,
        formula: String,
    },
    Ef {
        left: ModelFile,
        right: ModelFile,
        depth: usize,
        formula: String,
    },
    Rewrite {
        model: ModelFile,
        cnf: Vec<Vec<LiteralFile>>,
    },
}

impl Instance {
    pub fn to_file(&self) -> InstanceFile {
        let mf = |m: &InqModel, s: InfoState| ModelFile::from_model(m, Some(s));
        let txt = |m: &InqModel, f: &Formula| f.display(m.sig()).to_string();
        match self {
            Instance::Fragment {
                model,
                state,
                formula,
                policy,
                proper,
            } => InstanceFile::Fragment {
                model: mf(model, *state),
                formula: txt(model, formula),
                policy: *policy,
                proper: *proper,
            },
            Instance::Graded {
                model,
                state,
                formula,
            } => InstanceFile::Graded {
                model: mf(model, *state),
                formula: txt(model, formula),
            },
            Instance::Persistency {
                model,
                state,
                formula,
            } => InstanceFile::Persistency {
                model: mf(model, *state),
                formula: txt(model, formula),
            },
            Instance::Closure {
                model,
                state,
                formula,
            } => InstanceFile::Closure {
                model: mf(model, *state),
                formula: txt(model, formula),
            },
            Instance::Ef {
                left,
                left_state,
                right,
                right_state,
                depth,
                formula,
            } => InstanceFile::Ef {
                left: mf(left, *left_state),
                right: mf(right, *right_state),
                depth: *depth,
                formula: txt(left, formula),
            },
            Instance::Rewrite { model, state, cnf } => InstanceFile::Rewrite {
                model: mf(model, *state),
                cnf: cnf
                    .clauses
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|l| LiteralFile {
                                positive: l.positive,
                                formula: txt(model, &l.formula),
                            })
                            .collect()
                    })
                    .collect(),
            },
        }
    }
}

fn load(file: &ModelFile) -> Result<(InqModel, InfoState), String> {
    let m = file.to_model().map_err(|e| e.to_string())?;
    let s = file
        .point()
        .map_err(|e| e.to_string())?
        .ok_or("model file has no point")?;
    Ok((m, s))
}

fn formula(m: &InqModel, text: &str) -> Result<Formula, String> {
    parse(text, m.sig()).map_err(|e| e.to_string())
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<Instance, String> {
        Ok(match self {
            InstanceFile::Fragment {
                model,
                formula: f,
                policy,
                proper,
            } => {
                let (model, state) = load(model)?;
                Instance::Fragment {
                    formula: formula(&model, f)?,
                    model,
                    state,
                    policy: *policy,
                    proper: *proper,
                }
            }
            InstanceFile::Graded { model, formula: f } => {
                let (model, state) = load(model)?;
                Instance::Graded {
                    formula: formula(&model, f)?,
                    model,
                    state,
                }
            }
            InstanceFile::Persistency { model, formula: f } => {
                let (model, state) = load(model)?;
                Instance::Persistency {
                    formula: formula(&model, f)?,
                    model,
                    state,
                }
            }
            InstanceFile::Closure { model, formula: f } => {
                let (model, state) = load(model)?;
                Instance::Closure {
                    formula: formula(&model, f)?,
                    model,
                    state,
                }
            }
            InstanceFile::Ef {
                left,
                right,
                depth,
                formula: f,
            } => {
                let (left, left_state) = load(left)?;
                let (right, right_state) = load(right)?;
                Instance::Ef {
                    formula: formula(&left, f)?,
                    left,
                    left_state,
                    right,
                    right_state,
                    depth: *depth,
                }
            }
            InstanceFile::Rewrite { model, cnf } => {
                let (model, state) = load(model)?;
                let clauses = cnf
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|l| {
                                Ok(Literal {
                                    positive: l.positive,
                                    formula: formula(&model, &l.formula)?,
                                })
                            })
                            .collect::<Result<Vec<_>, String>>()
                    })
                    .collect::<Result<Vec<_>, String>>()?;
                Instance::Rewrite {
                    model,
                    state,
                    cnf: Cnf { clauses },
                }
            }
        })
    }
}

/// A shrunk failing instance with enough context to replay it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub trial: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutant: Option<Mutant>,
    pub instance: InstanceFile,
    pub verdicts: String,
    pub shrink_steps: usize,
}

/// Re-runs a bundle; `failed` tells whether the failure reproduces.
pub fn replay(bundle: &Bundle) -> Result<Outcome, String> {
    let inst = bundle.instance.to_instance()?;
    Ok(inst.run(Faults::from(bundle.mutant)))
}
