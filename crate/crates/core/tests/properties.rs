use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use inqml::bisim::{bulk_equiv, full_bisim, n_bisim, Game, GamePosition};
use inqml::fo::{
    check_fragment, check_world_fragment, down_relativize, eval_fo, standard_translate, world_translate,
    Assignment, FoFormula, SVar,
};
use inqml::fuzz::gen::{random_cnf, random_formula, random_model, random_pair, random_state, relabel};
use inqml::fuzz::Instance;
use inqml::model::{inquisitive_closure, kripke_sigma, validate};
use inqml::semantics::{check_persistency, check_ex_falso, check_closure_invariance};
use inqml::syntax::{flatness_grade, Formula, PropId};
use inqml::{
    decode, encode, parse, print, state_closure, supports, supports_graded, validate_relational, Faults,
    InfoState, InqModel, ModelKind, Policy, RelVerdict, Signature, Verdict,
};

fn formula(n_props: usize) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        1 => Just(Formula::Bottom),
        4 => (0..n_props).prop_map(|p| Formula::atom(PropId(p))),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::inq_or(a, b)),
            inner.clone().prop_map(Formula::boxed),
            inner.prop_map(Formula::box_plus),
        ]
    })
}

/// A model drawn from a seed, with a state of it.
fn pointed(max_worlds: usize, proper: Option<bool>) -> impl Strategy<Value = (InqModel, InfoState)> {
    (any::<u64>(), any::<bool>()).prop_map(move |(seed, coin)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, max_worlds, 3, proper.unwrap_or(coin), Faults::NONE);
        let s = random_state(&mut rng, m.n_worlds());
        (m, s)
    })
}

fn sig() -> Signature {
    Signature::standard(3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_print_round_trip(phi in formula(3)) {
        let text = print(&phi, &sig());
        prop_assert_eq!(parse(&text, &sig()).unwrap(), phi);
    }

    #[test]
    fn grade_bounded_by_disjunctions(phi in formula(3)) {
        prop_assert!(flatness_grade(&phi) <= phi.inq_disj_count());
    }

    #[test]
    fn diamond_adds_one_to_modal_depth(phi in formula(3)) {
        let text = format!("<>({})", print(&phi, &sig()));
        prop_assert_eq!(parse(&text, &sig()).unwrap().modal_depth(), phi.modal_depth() + 1);
    }

    #[test]
    fn closure_laws((m, _) in pointed(5, Some(false))) {
        let c = inquisitive_closure(&m);
        prop_assert_eq!(inquisitive_closure(&c), c.clone());
        prop_assert_eq!(validate(&c.to_raw()), Verdict::Proper);
        for w in 0..m.n_worlds() {
            prop_assert!(m.sigma(w).iter().all(|t| c.sigma(w).contains(t)));
            prop_assert_eq!(kripke_sigma(&m, w), kripke_sigma(&c, w));
            prop_assert!(c.sigma(w).contains(&InfoState::EMPTY));
        }
    }

    #[test]
    fn support_laws((m, s) in pointed(5, None), phi in formula(3)) {
        prop_assert_eq!(supports(&m, s, &phi), supports_graded(&m, s, &phi));
        prop_assert!(check_persistency(&m, s, &phi));
        prop_assert!(check_ex_falso(&m, &phi));
        prop_assert!(supports(&m, InfoState::EMPTY, &phi));
        prop_assert!(check_closure_invariance(&m, s, &phi));
    }

    #[test]
    fn classical_connectives_on_singletons((m, _) in pointed(5, None)) {
        let or = parse("p \\/ q", &sig()).unwrap();
        let dia = parse("<> r", &sig()).unwrap();
        for w in 0..m.n_worlds() {
            let at = |p: usize| m.valuation(PropId(p)).contains(w);
            prop_assert_eq!(supports(&m, InfoState::singleton(w), &or), at(0) || at(1));
            let succ = kripke_sigma(&m, w);
            let kripke = succ.worlds().any(|v| m.valuation(PropId(2)).contains(v));
            prop_assert_eq!(supports(&m, InfoState::singleton(w), &dia), kripke);
        }
    }

    #[test]
    fn encoding_laws((m, s) in pointed(5, None)) {
        for policy in Policy::ALL {
            let r = encode(&m, s, policy).unwrap();
            prop_assert_eq!(decode(&r), (m.clone(), Some(s)));
            let c = state_closure(&r).unwrap();
            prop_assert_eq!(state_closure(&c).unwrap(), c.clone());
            prop_assert_eq!(c.validate(), RelVerdict::Model);
            prop_assert!(s.subsets().all(|t| c.state_index(t).is_some()));
        }
        let r = encode(&m, s, Policy::Minimal).unwrap();
        let verdict = validate_relational(&r.to_raw());
        match m.kind() {
            ModelKind::Proper => prop_assert_eq!(verdict, RelVerdict::Model),
            ModelKind::Pseudo => prop_assert!(matches!(verdict, RelVerdict::Pseudo(_))),
        }
    }

    #[test]
    fn fragment_property((m, s) in pointed(4, None), phi in formula(3)) {
        for policy in Policy::ALL {
            prop_assert!(check_fragment(&m, s, &phi, policy).unwrap());
        }
        for w in 0..m.n_worlds() {
            prop_assert!(check_world_fragment(&m, w, &phi).unwrap());
        }
    }

    #[test]
    fn tuple_length_law(phi in formula(3)) {
        prop_assert_eq!(standard_translate(&phi).leading_world_quantifiers(), flatness_grade(&phi) + 1);
        prop_assert!(world_translate(&phi).free_vars().states.is_empty());
    }

    #[test]
    fn down_conjunction_law(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 4, 2, false, Faults::NONE);
        let s = random_state(&mut rng, m.n_worlds());
        let a = standard_translate(&random_formula(&mut rng, 2, 2, 1));
        let b = FoFormula::not(standard_translate(&random_formula(&mut rng, 2, 2, 1)));
        let joint = down_relativize(&FoFormula::And(vec![a.clone(), b.clone()])).unwrap();
        let split = FoFormula::And(vec![down_relativize(&a).unwrap(), down_relativize(&b).unwrap()]);
        let c = state_closure(&encode(&m, s, Policy::Minimal).unwrap()).unwrap();
        for i in 0..c.n_states() {
            let sigma = Assignment::new().with_state(SVar::LAMBDA, i);
            prop_assert_eq!(eval_fo(&c, &sigma, &joint).unwrap(), eval_fo(&c, &sigma, &split).unwrap());
        }
    }

    #[test]
    fn rewrite_soundness(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 4, 2, seed % 2 == 0, Faults::NONE);
        let s = random_state(&mut rng, m.n_worlds()).with(0);
        let cnf = random_cnf(&mut rng, 2, 1);
        let out = Instance::Rewrite { model: m, state: s, cnf }.run(Faults::NONE);
        prop_assert!(!out.failed, "{}", out.detail);
    }

    #[test]
    fn bisim_laws(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ((a, s), (b, t)) = random_pair(&mut rng, 4, 2);
        let mut g = Game::new(&a, &b).unwrap();
        let stable = g.stabilize();
        prop_assert!(stable <= a.n_worlds() * b.n_worlds() + 1);
        for k in 0..stable {
            for u in 0..a.n_worlds() {
                for v in 0..b.n_worlds() {
                    prop_assert!(!g.worlds_equiv(u, v, k + 1) || g.worlds_equiv(u, v, k));
                }
            }
            prop_assert!(!g.states_equiv(s, t, k + 1) || g.states_equiv(s, t, k));
        }
        let (ca, cb) = (inquisitive_closure(&a), inquisitive_closure(&b));
        for n in 0..3 {
            let direct = n_bisim(&a, s, &b, t, n).unwrap();
            prop_assert_eq!(direct.equivalent, n_bisim(&ca, s, &cb, t, n).unwrap().equivalent);
            prop_assert_eq!(direct.witness.is_some(), !direct.equivalent);
            if direct.equivalent {
                for _ in 0..40 {
                    let phi = random_formula(&mut rng, 2, 3, n);
                    prop_assert_eq!(supports(&a, s, &phi), supports(&b, t, &phi));
                }
            }
        }
        let full = full_bisim(&ca, s, &cb, t).unwrap().equivalent;
        prop_assert!(!bulk_equiv(&ca, s, &cb, t).unwrap() || full);
        let (c, perm) = relabel(&mut rng, &b);
        let t2: InfoState = t.worlds().map(|w| perm[w]).collect();
        prop_assert_eq!(full_bisim(&a, s, &c, t2).unwrap().equivalent, full_bisim(&a, s, &b, t).unwrap().equivalent);
        let pos = GamePosition::StatePair(s, t);
        prop_assert_eq!(g.equiv(pos, stable), full_bisim(&a, s, &b, t).unwrap().equivalent);
    }
}

#[test]
fn desugaring_identities() {
    let sig = sig();
    let p = |t: &str| parse(t, &sig).unwrap();
    assert_eq!(p("~p"), p("p -> bot"));
    assert_eq!(p("p \\/ q"), p("~(~p & ~q)"));
    assert_eq!(p("<>p"), p("~[]~p"));
    assert_eq!(p("?p"), p("p vv ~p"));
    assert_eq!(p("top"), p("bot -> bot"));
}
