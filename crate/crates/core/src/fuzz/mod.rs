//! Randomized differential testing.
//!
//! Each trial of each check draws its inputs from its own ChaCha stream, so
//! a report depends only on the configuration. Failing instances are shrunk
//! greedily and emitted as replayable [`Bundle`]s.

pub mod case;
pub mod gen;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bisim::n_bisim;
use crate::distinguish::{distinguishing_formula, Search};
use crate::model::{InqModel, ModelFile};
use crate::state::InfoState;
use crate::syntax::Formula;
use crate::mutation::{Faults, Mutant};
use crate::relational::Policy;
use crate::fo::rewrite_cnf;
use crate::semantics::supports;
use crate::syntax::flatness_grade;

pub use case::{replay, Bundle, Check, Instance, InstanceFile, Outcome};
use gen::*;

/// Shrinking stops after this many accepted steps.
pub const MAX_SHRINK_STEPS: usize = 500;

/// Only the first failures, in trial order, are shrunk into bundles.
pub const MAX_BUNDLES: usize = 8;

/// Upper bound on `max_worlds`; fragment checks enumerate `2^|W|` states.
pub const MAX_FUZZ_WORLDS: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub seed: u64,
    pub trials: usize,
    pub max_worlds: usize,
    pub n_props: usize,
    pub max_depth: usize,
    pub policies: Vec<Policy>,
    pub checks: Vec<Check>,
    /// Formulas sampled per pair by the `ef` check.
    pub ef_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutant: Option<Mutant>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 0,
            trials: 1000,
            max_worlds: 5,
            n_props: 3,
            max_depth: 3,
            policies: Policy::ALL.to_vec(),
            checks: Check::ALL.to_vec(),
            ef_samples: 500,
            mutant: None,
        }
    }
}

impl FuzzConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_worlds == 0 || self.max_worlds > MAX_FUZZ_WORLDS {
            return Err(format!("max worlds must be in 1..={MAX_FUZZ_WORLDS}"));
        }
        if self.n_props > 8 {
            return Err("at most 8 propositions".into());
        }
        if self.max_depth > 6 {
            return Err("formula depth at most 6".into());
        }
        if self.policies.is_empty() || self.checks.is_empty() {
            return Err("need at least one policy and one check".into());
        }
        Ok(())
    }

    fn faults(&self) -> Faults {
        Faults::from(self.mutant)
    }
}

/// A pair the formula search could not separate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Residue {
    pub trial: usize,
    pub depth: usize,
    pub left: ModelFile,
    pub right: ModelFile,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckStats {
    pub check: Option<Check>,
    pub trials: usize,
    /// Individual oracle comparisons.
    pub instances: usize,
    pub failures: usize,
    /// Check-specific counts, e.g. equivalent pairs or persistent inputs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub counts: Vec<(String, usize)>,
}

impl CheckStats {
    fn bump(&mut self, name: &str, by: usize) {
        match self.counts.iter_mut().find(|(n, _)| n == name) {
            Some((_, c)) => *c += by,
            None => self.counts.push((name.to_string(), by)),
        }
    }

    pub fn get(&self, name: &str) -> usize {
        self.counts.iter().find(|(n, _)| n == name).map_or(0, |(_, c)| *c)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub config: FuzzConfig,
    pub trials: usize,
    pub failures: usize,
    pub stats: Vec<CheckStats>,
    pub bundles: Vec<Bundle>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residue: Vec<Residue>,
}

impl Report {
    pub fn stats(&self, check: Check) -> Option<&CheckStats> {
        self.stats.iter().find(|s| s.check == Some(check))
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} failures / {} trials", self.failures, self.trials)?;
        for s in &self.stats {
            let name = s.check.map_or("?", Check::name);
            write!(
                f,
                "  {name:<12} {:>5} trials {:>7} instances {:>4} failures",
                s.trials, s.instances, s.failures
            )?;
            for (k, v) in &s.counts {
                write!(f, "  {k}={v}")?;
            }
            writeln!(f)?;
        }
        for r in &self.residue {
            writeln!(f, "  unseparated pair in trial {} at depth {}: {}", r.trial, r.depth, r.reason)?;
        }
        for b in &self.bundles {
            writeln!(
                f,
                "  trial {} {}: {} (shrunk in {} steps)",
                b.trial,
                b.instance_check(),
                b.verdicts,
                b.shrink_steps
            )?;
        }
        Ok(())
    }
}

impl Bundle {
    pub fn instance_check(&self) -> &'static str {
        match self.instance {
            InstanceFile::Fragment { .. } => "fragment",
            InstanceFile::Graded { .. } => "graded",
            InstanceFile::Persistency { .. } => "persistency",
            InstanceFile::Closure { .. } => "closure",
            InstanceFile::Ef { .. } => "ef",
            InstanceFile::Rewrite { .. } => "rewrite",
        }
    }
}

struct TrialResult {
    instances: usize,
    failure: Option<Instance>,
    counts: Vec<(&'static str, usize)>,
    residue: Option<Residue>,
}

fn rng_for(seed: u64, trial: usize, check: Check) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = Check::ALL.iter().position(|&c| c == check).unwrap() as u64;
    rng.set_stream(trial as u64 * 16 + idx);
    rng
}

/// Rewrite inputs are resampled until the rewritten formula has at most
/// this flatness grade; its translation quantifies over `grade + 1` tuples
/// of worlds, twice nested in the implication clause.
pub const MAX_REWRITE_GRADE: usize = 3;

/// Largest pair eligible for the distinguishing-formula search.
const SEARCH_WORLDS: usize = 3;
const SEARCH_PROPS: usize = 2;
const SEARCH_DEPTH: usize = 2;

fn run_trial(cfg: &FuzzConfig, trial: usize, check: Check) -> TrialResult {
    let mut rng = rng_for(cfg.seed, trial, check);
    let faults = cfg.faults();
    let (w, p, d) = (cfg.max_worlds, cfg.n_props, cfg.max_depth);
    let mut counts = Vec::new();
    let mut residue = None;
    let instances: Vec<Instance> = match check {
        Check::Fragment => {
            let proper = rng.gen_bool(0.5);
            let model = random_model(&mut rng, w, p, proper, faults);
            let state = random_state(&mut rng, model.n_worlds());
            let formula = random_formula(&mut rng, p, d, d);
            counts.push((if proper { "proper" } else { "pseudo" }, 1));
            cfg.policies
                .iter()
                .map(|&policy| Instance::Fragment {
                    model: model.clone(),
                    state,
                    formula: formula.clone(),
                    policy,
                    proper,
                })
                .collect()
        }
        Check::Graded | Check::Persistency | Check::Closure => {
            let proper = check != Check::Closure && rng.gen_bool(0.5);
            let model = random_model(&mut rng, w, p, proper, Faults::NONE);
            let state = random_state(&mut rng, model.n_worlds());
            let formula = random_formula(&mut rng, p, d, d);
            if check == Check::Closure && !model.is_proper() {
                counts.push(("pseudo", 1));
            }
            if check == Check::Graded {
                return graded_trial(faults, model, state, formula);
            }
            vec![match check {
                Check::Persistency => Instance::Persistency { model, state, formula },
                _ => Instance::Closure { model, state, formula },
            }]
        }
        Check::Ef => {
            let depth = trial % 4;
            let ((a, s), (b, t)) = random_pair(&mut rng, w, p);
            let eq = n_bisim(&a, s, &b, t, depth).map_or(false, |r| r.equivalent);
            counts.push((if eq { "equivalent" } else { "inequivalent" }, 1));
            if !eq
                && depth <= SEARCH_DEPTH
                && a.n_worlds() <= SEARCH_WORLDS
                && b.n_worlds() <= SEARCH_WORLDS
                && p <= SEARCH_PROPS
            {
                counts.push(("searched", 1));
                match distinguishing_formula(&a, s, &b, t, depth) {
                    Search::Found(phi) if supports(&a, s, &phi) != supports(&b, t, &phi) => {
                        counts.push(("distinguished", 1));
                    }
                    other => {
                        residue = Some(Residue {
                            trial,
                            depth,
                            left: ModelFile::from_model(&a, Some(s)),
                            right: ModelFile::from_model(&b, Some(t)),
                            reason: format!("{other:?}"),
                        });
                    }
                }
            }
            let height = d.max(depth);
            let samples: Vec<_> = (0..cfg.ef_samples)
                .map(|_| random_formula(&mut rng, p, height, depth))
                .collect();
            let ef = |formula| Instance::Ef {
                left: a.clone(),
                left_state: s,
                right: b.clone(),
                right_state: t,
                depth,
                formula,
            };
            let mut insts = vec![ef(Formula::Bottom)];
            if eq {
                counts.push(("samples_on_equivalent", samples.len()));
                insts.extend(
                    samples
                        .into_iter()
                        .filter(|f| supports(&a, s, f) != supports(&b, t, f))
                        .map(ef),
                );
            }
            let n = 1 + if eq { cfg.ef_samples } else { 0 };
            return finish(faults, insts, counts, residue, n);
        }
        Check::Rewrite => {
            let proper = rng.gen_bool(0.5);
            let model = random_model(&mut rng, w, p, proper, Faults::NONE);
            let state = random_nonempty_state(&mut rng, model.n_worlds());
            let cnf = loop {
                let cnf = random_cnf(&mut rng, p, d.saturating_sub(1).max(1));
                if flatness_grade(&rewrite_cnf(&cnf)) <= MAX_REWRITE_GRADE {
                    break cnf;
                }
            };
            let (_, facts) = case::rewrite_facts(&model, state, &cnf);
            if facts.persistent {
                counts.push(("persistent", 1));
            }
            if facts.conjunction_law {
                counts.push(("conjunction_law", 1));
            }
            vec![Instance::Rewrite { model, state, cnf }]
        }
    };
    let n = instances.len();
    finish(faults, instances, counts, residue, n)
}

/// Compares both strategies on every subformula at every state, starting
/// with the drawn state and the whole formula.
fn graded_trial(faults: Faults, model: InqModel, state: InfoState, formula: Formula) -> TrialResult {
    let mut subs = vec![formula];
    let mut i = 0;
    while i < subs.len() {
        let children: Vec<Formula> = subs[i].children().into_iter().cloned().collect();
        for c in children {
            if !subs.contains(&c) {
                subs.push(c);
            }
        }
        i += 1;
    }
    let states: Vec<InfoState> = std::iter::once(state)
        .chain(model.worlds().subsets().filter(|&t| t != state))
        .collect();
    let mut insts = Vec::with_capacity(subs.len() * states.len());
    for f in &subs {
        for &t in &states {
            insts.push(Instance::Graded {
                model: model.clone(),
                state: t,
                formula: f.clone(),
            });
        }
    }
    let n = insts.len();
    finish(faults, insts, Vec::new(), None, n)
}

fn finish(
    faults: Faults,
    instances: Vec<Instance>,
    counts: Vec<(&'static str, usize)>,
    residue: Option<Residue>,
    n_instances: usize,
) -> TrialResult {
    let failure = instances.into_iter().find(|inst| inst.run(faults).failed);
    TrialResult {
        instances: n_instances,
        failure,
        counts,
        residue,
    }
}

/// Runs every configured check on `trials` fresh inputs each.
pub fn run_fuzz(cfg: &FuzzConfig) -> Result<Report, String> {
    cfg.validate()?;
    let jobs: Vec<(usize, Check)> = (0..cfg.trials)
        .flat_map(|t| cfg.checks.iter().map(move |&c| (t, c)))
        .collect();
    let results: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(t, c)| run_trial(cfg, t, c))
        .collect();
    let mut stats: Vec<CheckStats> = cfg
        .checks
        .iter()
        .map(|&c| CheckStats {
            check: Some(c),
            ..CheckStats::default()
        })
        .collect();
    let mut failing = Vec::new();
    let mut residue = Vec::new();
    for (&(t, c), r) in jobs.iter().zip(results) {
        let st = stats.iter_mut().find(|s| s.check == Some(c)).unwrap();
        st.trials += 1;
        st.instances += r.instances;
        for (k, v) in r.counts {
            st.bump(k, v);
        }
        if let Some(inst) = r.failure {
            st.failures += 1;
            failing.push((t, inst));
        }
        residue.extend(r.residue);
    }
    let failures = failing.len();
    let faults = cfg.faults();
    failing.truncate(MAX_BUNDLES);
    let bundles = failing
        .into_par_iter()
        .map(|(trial, inst)| {
            let (small, steps) = inst.shrink(faults, MAX_SHRINK_STEPS);
            Bundle {
                trial,
                mutant: cfg.mutant,
                verdicts: small.run(faults).detail,
                instance: small.to_file(),
                shrink_steps: steps,
            }
        })
        .collect();
    Ok(Report {
        config: cfg.clone(),
        trials: jobs.len(),
        failures,
        stats,
        bundles,
        residue,
    })
}
