//! `inqml` command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use inqml::bisim::{full_bisim_at, n_bisim_at, GamePosition};
use inqml::fo::{standard_translate, world_translate};
use inqml::fuzz::{replay, run_fuzz, Bundle, Check, FuzzConfig};
use inqml::model::{validate, Condition, ModelFile};
use inqml::parser::parse_extending;
use inqml::relational::{ClosureWitness, RelFile, RelViolation};
use inqml::semantics::{explain, supports_by};
use inqml::{
    encode, flatness_grade, inquisitive_closure, modal_depth, parse, state_closure,
    validate_relational, InfoState, InqModel, Mutant, Policy, RelVerdict, Signature, Strategy,
    Verdict,
};

#[derive(Parser)]
#[command(name = "inqml", version, about = "Inquisitive modal logic toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Naive,
    Graded,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    State,
    World,
}

#[derive(Subcommand)]
enum Command {
    /// Decide support of a formula at a state or world of a model file.
    Check {
        model: PathBuf,
        formula: String,
        /// Comma-separated world names; overrides the file's point.
        #[arg(long, conflicts_with = "world")]
        state: Option<String>,
        #[arg(long)]
        world: Option<String>,
        #[arg(long, value_enum, default_value = "naive")]
        strategy: StrategyArg,
        /// Print the clause-by-clause derivation.
        #[arg(long)]
        trace: bool,
    },
    /// Print the standard translation of a formula.
    Translate {
        formula: String,
        #[arg(long, value_enum, default_value = "state")]
        variant: Variant,
    },
    /// Classify a model file as proper, pseudo or invalid.
    Validate {
        file: PathBuf,
        /// Read a relational structure instead of a model.
        #[arg(long)]
        relational: bool,
    },
    /// Inquisitive closure of a model, or state closure of a relational file.
    Closure {
        file: PathBuf,
        #[arg(long)]
        state_closure: bool,
    },
    /// Relational encoding of a pointed model.
    Encode {
        model: PathBuf,
        #[arg(long, value_parser = parse_policy, default_value = "minimal")]
        policy: Policy,
    },
    /// Bisimulation game between two pointed model files.
    Bisim {
        left: PathBuf,
        right: PathBuf,
        /// Number of rounds; the stabilized relation when omitted.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Flatness grade and modal depth of a formula.
    Grade { formula: String },
    /// Randomized differential testing of all oracles.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        max_worlds: usize,
        #[arg(long, default_value_t = 3)]
        props: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Encoding policies for the fragment check; all by default.
        #[arg(long, value_delimiter = ',', value_parser = parse_policy)]
        policy: Vec<Policy>,
        /// Checks to run; all by default.
        #[arg(long, value_delimiter = ',', value_parser = parse_check)]
        checks: Vec<Check>,
        #[arg(long, default_value_t = 500)]
        ef_samples: usize,
        /// Inject a seeded fault.
        #[arg(long, value_parser = parse_mutant)]
        mutant: Option<Mutant>,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
        /// Write each counterexample bundle to this directory.
        #[arg(long)]
        bundles: Option<PathBuf>,
    },
    /// Re-run a counterexample bundle; exits nonzero if it still fails.
    Replay { bundle: PathBuf },
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_check(s: &str) -> Result<Check, String> {
    s.parse()
}

fn parse_mutant(s: &str) -> Result<Mutant, String> {
    s.parse()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_model(path: &Path) -> Result<(ModelFile, InqModel)> {
    let file: ModelFile = read_json(path)?;
    let m = file.to_model().with_context(|| format!("invalid model {}", path.display()))?;
    Ok((file, m))
}

fn names(list: &str) -> Vec<&str> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn world(m: &InqModel, name: &str) -> Result<usize> {
    m.world_index(name)
        .with_context(|| format!("unknown world `{name}`"))
}

fn point(file: &ModelFile, path: &Path) -> Result<InfoState> {
    file.point()?
        .with_context(|| format!("{} names no state or world", path.display()))
}

fn formula_sig(text: &str) -> Result<(inqml::Formula, Signature)> {
    let mut sig = Signature::new(Vec::<String>::new())?;
    let phi = parse_extending(text, &mut sig)?;
    Ok((phi, sig))
}

fn pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn describe_witness(r: &RelFile, w: &ClosureWitness) -> String {
    let state = |i: usize| format!("{{{}}}", r.states[i].join(", "));
    let missing: Vec<&str> = w.missing.worlds().map(|v| r.worlds[v].as_str()).collect();
    format!(
        "pseudo: E({}, {}) but {{{}}} is not below it",
        r.worlds[w.world],
        state(w.state),
        missing.join(", ")
    )
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Check {
            model,
            formula,
            state,
            world: w,
            strategy,
            trace,
        } => {
            let (file, m) = load_model(&model)?;
            let phi = parse(&formula, m.sig())?;
            let s = match (&state, &w) {
                (Some(list), _) => m.parse_state(&names(list))?,
                (None, Some(name)) => InfoState::singleton(world(&m, name)?),
                (None, None) => point(&file, &model)?,
            };
            let strategy = match strategy {
                StrategyArg::Naive => Strategy::Naive,
                StrategyArg::Graded => Strategy::Graded,
            };
            let holds = supports_by(&m, s, &phi, strategy);
            writeln!(out, "{}", if holds { "supported" } else { "unsupported" })?;
            if trace {
                write!(out, "{}", explain(&m, s, &phi))?;
            }
        }
        Command::Translate { formula, variant } => {
            let (phi, sig) = formula_sig(&formula)?;
            let fo = match variant {
                Variant::State => standard_translate(&phi),
                Variant::World => world_translate(&phi),
            };
            let grade = flatness_grade(&phi);
            let (wv, sv) = fo.var_count();
            writeln!(out, "{}", fo.display(&sig))?;
            writeln!(out, "flat={grade}")?;
            let tuple = match variant {
                Variant::State => grade + 1,
                Variant::World => 1,
            };
            writeln!(out, "tuple length={tuple}")?;
            writeln!(out, "variables: {wv} world, {sv} state")?;
        }
        Command::Validate { file, relational } => {
            if relational {
                let rf: RelFile = read_json(&file)?;
                let raw = rf.to_raw()?;
                let line = match validate_relational(&raw) {
                    RelVerdict::Model => "model".to_string(),
                    RelVerdict::Pseudo(w) => describe_witness(&rf, &w),
                    RelVerdict::Invalid(RelViolation::Extensionality { first, second }) => {
                        format!("invalid: states {first} and {second} have the same members")
                    }
                    RelVerdict::Invalid(RelViolation::NonEmptiness { world }) => {
                        format!("invalid: world {} has no E-successor", rf.worlds[world])
                    }
                };
                writeln!(out, "{line}")?;
                if line.starts_with("invalid") {
                    return Ok(ExitCode::FAILURE);
                }
            } else {
                let mf: ModelFile = read_json(&file)?;
                let raw = mf.to_raw()?;
                match validate(&raw) {
                    Verdict::Proper => writeln!(out, "proper")?,
                    Verdict::Pseudo => writeln!(out, "pseudo")?,
                    Verdict::Invalid(reason) => {
                        let name = &raw.world_names[reason.world];
                        match reason.condition {
                            Condition::EmptyAssignment => {
                                writeln!(out, "invalid: world {name} has an empty assignment")?
                            }
                        }
                        return Ok(ExitCode::FAILURE);
                    }
                }
            }
        }
        Command::Closure {
            file,
            state_closure: relational,
        } => {
            if relational {
                let rf: RelFile = read_json(&file)?;
                let closed = state_closure(&rf.to_struct()?)?;
                writeln!(out, "{}", pretty(&RelFile::from_struct(&closed))?)?;
            } else {
                let (mf, m) = load_model(&file)?;
                let closed = inquisitive_closure(&m);
                let mut cf = ModelFile::from_model(&closed, None);
                cf.state = mf.state.clone();
                cf.world = mf.world.clone();
                writeln!(out, "{}", pretty(&cf)?)?;
            }
        }
        Command::Encode { model, policy } => {
            let (file, m) = load_model(&model)?;
            let s = point(&file, &model)?;
            let r = encode(&m, s, policy)?;
            writeln!(out, "{}", pretty(&RelFile::from_struct(&r))?)?;
        }
        Command::Bisim { left, right, level } => {
            let (lf, lm) = load_model(&left)?;
            let (rf, rm) = load_model(&right)?;
            let pos = match (&lf.world, &rf.world) {
                (Some(a), Some(b)) => GamePosition::WorldPair(world(&lm, a)?, world(&rm, b)?),
                _ => GamePosition::StatePair(point(&lf, &left)?, point(&rf, &right)?),
            };
            let res = match level {
                Some(n) => n_bisim_at(&lm, &rm, pos, n)?,
                None => full_bisim_at(&lm, &rm, pos)?,
            };
            writeln!(out, "{}", serde_json::to_string(&res)?)?;
        }
        Command::Grade { formula } => {
            let (phi, _) = formula_sig(&formula)?;
            writeln!(out, "flat={} modal_depth={}", flatness_grade(&phi), modal_depth(&phi))?;
        }
        Command::Fuzz {
            seed,
            trials,
            max_worlds,
            props,
            depth,
            policy,
            checks,
            ef_samples,
            mutant,
            json,
            bundles,
        } => {
            let defaults = FuzzConfig::default();
            let cfg = FuzzConfig {
                seed,
                trials,
                max_worlds,
                n_props: props,
                max_depth: depth,
                policies: if policy.is_empty() { defaults.policies } else { policy },
                checks: if checks.is_empty() { defaults.checks } else { checks },
                ef_samples,
                mutant,
            };
            let report = run_fuzz(&cfg).map_err(anyhow::Error::msg)?;
            if json {
                writeln!(out, "{}", pretty(&report)?)?;
            } else {
                write!(out, "{report}")?;
            }
            if let Some(dir) = bundles {
                fs::create_dir_all(&dir)?;
                for (i, b) in report.bundles.iter().enumerate() {
                    let path = dir.join(format!("bundle-{i:03}-{}.json", b.instance_check()));
                    fs::write(&path, pretty(b)?)?;
                }
            }
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Replay { bundle } => {
            let b: Bundle = read_json(&bundle)?;
            let outcome = replay(&b).map_err(anyhow::Error::msg)?;
            if outcome.failed {
                writeln!(out, "reproduced: {}", outcome.detail)?;
                return Ok(ExitCode::FAILURE);
            }
            writeln!(out, "passes: {}", outcome.detail)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
