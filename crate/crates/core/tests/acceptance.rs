//! Acceptance criteria, one pass/fail line each. Exits nonzero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use inqml::fuzz::gen::{random_formula, random_model, random_state};
use inqml::fuzz::{replay, run_fuzz, Check, FuzzConfig, Report};
use inqml::model::inquisitive_closure;
use inqml::{decode, encode, parse, print, state_closure, Faults, Mutant, Policy, Signature};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Line {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn fuzz(checks: &[Check], trials: usize, tweak: impl FnOnce(&mut FuzzConfig)) -> Report {
    let mut cfg = FuzzConfig {
        seed: 20261014,
        trials,
        checks: checks.to_vec(),
        ..FuzzConfig::default()
    };
    tweak(&mut cfg);
    run_fuzz(&cfg).expect("valid config")
}

fn bundles_replay(r: &Report) -> bool {
    r.bundles.iter().all(|b| replay(b).map_or(false, |o| o.failed))
}

fn summary(r: &Report, check: Check) -> String {
    let s = r.stats(check).unwrap();
    let counts: Vec<String> = s.counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "{} failures / {} trials, {} comparisons [{}]",
        s.failures,
        s.trials,
        s.instances,
        counts.join(" ")
    )
}

fn c1() -> Line {
    let start = Instant::now();
    let r = fuzz(&[Check::Fragment], 1000, |_| {});
    let took = start.elapsed();
    let s = r.stats(Check::Fragment).unwrap();
    let pass = r.passed()
        && s.trials >= 1000
        && s.get("proper") > 0
        && s.get("pseudo") > 0
        && s.instances == 3 * s.trials
        && took < Duration::from_secs(120);
    Line {
        name: "C1 fragment property",
        pass,
        detail: format!("{} in {:.1}s", summary(&r, Check::Fragment), took.as_secs_f64()),
    }
}

fn simple(name: &'static str, check: Check) -> Line {
    let r = fuzz(&[check], 1000, |_| {});
    let s = r.stats(check).unwrap();
    let mut pass = r.passed() && s.trials >= 1000;
    if check == Check::Closure {
        pass &= s.get("pseudo") > 0;
    }
    Line {
        name,
        pass,
        detail: summary(&r, check),
    }
}

fn c5() -> Vec<Line> {
    let r = fuzz(&[Check::Ef], 400, |_| {});
    let s = r.stats(Check::Ef).unwrap();
    let pairs = s.trials;
    let eq = s.get("equivalent");
    let sound = Line {
        name: "C5a EF soundness",
        pass: r.passed() && pairs >= 200 && eq > 0 && s.get("samples_on_equivalent") >= 500 * eq,
        detail: summary(&r, Check::Ef),
    };
    let small = fuzz(&[Check::Ef], 1200, |c| {
        c.max_worlds = 3;
        c.n_props = 2;
        c.ef_samples = 50;
    });
    let t = small.stats(Check::Ef).unwrap();
    let (searched, found) = (t.get("searched"), t.get("distinguished"));
    let rate = found as f64 / searched.max(1) as f64;
    for res in &small.residue {
        eprintln!(
            "residue trial {} depth {}: {}\n  left  {}\n  right {}",
            res.trial,
            res.depth,
            res.reason,
            serde_json::to_string(&res.left).unwrap(),
            serde_json::to_string(&res.right).unwrap()
        );
    }
    let search = Line {
        name: "C5b distinguishing search",
        pass: small.passed() && searched > 0 && rate >= 0.95,
        detail: format!(
            "{found}/{searched} inequivalent pairs separated ({:.1}%), {} residue",
            100.0 * rate,
            small.residue.len()
        ),
    };
    vec![sound, search]
}

fn c6() -> Line {
    let r = fuzz(&[Check::Rewrite], 1000, |_| {});
    let s = r.stats(Check::Rewrite).unwrap();
    Line {
        name: "C6 rewrite",
        pass: r.passed() && s.get("persistent") >= 300 && s.get("conjunction_law") > 0,
        detail: summary(&r, Check::Rewrite),
    }
}

fn c7() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sig = Signature::standard(3);
    let mut bad = Vec::new();
    for _ in 0..1000 {
        let phi = random_formula(&mut rng, 3, 4, 2);
        let text = print(&phi, &sig);
        if parse(&text, &sig).as_ref() != Ok(&phi) {
            bad.push(format!("parse/print: {text}"));
        }
    }
    let mut encoded = 0;
    for _ in 0..1000 {
        let proper = rng.gen_bool(0.5);
        let m = random_model(&mut rng, 5, 3, proper, Faults::NONE);
        let s = random_state(&mut rng, m.n_worlds());
        for policy in Policy::ALL {
            let r = encode(&m, s, policy).unwrap();
            if decode(&r) != (m.clone(), Some(s)) {
                bad.push(format!("decode/encode under {policy}"));
            }
            let c = state_closure(&r).unwrap();
            if state_closure(&c).unwrap() != c {
                bad.push("state closure not idempotent".into());
            }
            encoded += 1;
        }
        let closed = inquisitive_closure(&m);
        if inquisitive_closure(&closed) != closed {
            bad.push("inquisitive closure not idempotent".into());
        }
    }
    Line {
        name: "C7 round trips",
        pass: bad.is_empty(),
        detail: match bad.first() {
            None => format!("1000 formulas, {encoded} encodings, 1000 closures"),
            Some(first) => format!("{} mismatches, first: {first}", bad.len()),
        },
    }
}

fn c8() -> Line {
    let mut caught = Vec::new();
    let mut pass = true;
    for mutant in Mutant::ALL {
        let r = fuzz(&[Check::Fragment, Check::Graded], 1000, |c| c.mutant = Some(mutant));
        let f = r.stats(Check::Fragment).unwrap().failures;
        let g = r.stats(Check::Graded).unwrap().failures;
        let ok = (f > 0 || g > 0) && !r.bundles.is_empty() && bundles_replay(&r);
        pass &= ok;
        caught.push(format!("{mutant}: fragment {f}, graded {g}"));
    }
    Line {
        name: "C8 mutation sanity",
        pass,
        detail: caught.join("; "),
    }
}

fn report(l: &Line) -> bool {
    println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
    l.pass
}

fn main() -> ExitCode {
    let mut all = report(&c1());
    all &= report(&simple("C2 graded flatness", Check::Graded));
    all &= report(&simple("C3 persistency and ex falso", Check::Persistency));
    all &= report(&simple("C4 closure invariance", Check::Closure));
    for l in c5() {
        all &= report(&l);
    }
    all &= report(&c6());
    all &= report(&c7());
    all &= report(&c8());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
