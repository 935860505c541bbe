//! Random formulas, models, states, CNF inputs and model pairs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::fo::{Cnf, Literal};
use crate::model::{inquisitive_closure_with, InqModel, ModelGen, RawModel};
use crate::mutation::Faults;
use crate::state::InfoState;
use crate::syntax::{Formula, PropId, Signature};

/// A formula of core height `≤ height` and modal depth `≤ modal`.
pub fn random_formula<R: Rng + ?Sized>(
    rng: &mut R,
    n_props: usize,
    height: usize,
    modal: usize,
) -> Formula {
    let leaf = |rng: &mut R| {
        if n_props == 0 || rng.gen_bool(0.05) {
            Formula::Bottom
        } else {
            Formula::atom(PropId(rng.gen_range(0..n_props)))
        }
    };
    if height == 0 || rng.gen_bool(0.1) {
        return leaf(rng);
    }
    let h = height - 1;
    let sub = |rng: &mut R, modal| random_formula(rng, n_props, h, modal);
    let mut choice = rng.gen_range(0..10);
    if modal == 0 && choice >= 7 {
        choice = rng.gen_range(0..7);
    }
    match choice {
        0 => Formula::and(sub(rng, modal), sub(rng, modal)),
        1 | 2 => Formula::implies(sub(rng, modal), sub(rng, modal)),
        3 | 4 => Formula::inq_or(sub(rng, modal), sub(rng, modal)),
        5 => Formula::neg(sub(rng, modal)),
        6 if h >= 1 => Formula::whether(random_formula(rng, n_props, h - 1, modal)),
        6 => Formula::inq_or(sub(rng, modal), sub(rng, modal)),
        7 | 8 => Formula::boxed(sub(rng, modal - 1)),
        _ => Formula::box_plus(sub(rng, modal - 1)),
    }
}

/// Random state of an `n`-world model; empty about one time in ten.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> InfoState {
    if rng.gen_bool(0.1) {
        return InfoState::EMPTY;
    }
    InfoState::from_bits(rng.gen::<u64>() & InfoState::full(n).bits())
}

pub fn random_nonempty_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> InfoState {
    loop {
        let s = InfoState::from_bits(rng.gen::<u64>() & InfoState::full(n).bits());
        if !s.is_empty() {
            return s;
        }
    }
}

/// A model with `1..=max_worlds` worlds. Proper models are produced by
/// closing a random pseudo-model with the given closure faults.
pub fn random_model<R: Rng + ?Sized>(
    rng: &mut R,
    max_worlds: usize,
    n_props: usize,
    proper: bool,
    faults: Faults,
) -> InqModel {
    let n = rng.gen_range(1..=max_worlds);
    let m = ModelGen {
        n_worlds: n,
        n_props,
        max_states_per_world: 3,
        close_probability: 0.0,
    }
    .sample(rng);
    if proper {
        inquisitive_closure_with(&m, faults)
    } else {
        m
    }
}

/// Clauses over at most three base formulas of height `≤ height`.
pub fn random_cnf<R: Rng + ?Sized>(rng: &mut R, n_props: usize, height: usize) -> Cnf {
    let bases: Vec<Formula> = (0..rng.gen_range(1..=3))
        .map(|_| random_formula(rng, n_props, height, height.min(2)))
        .collect();
    let clauses = (0..rng.gen_range(1..=3))
        .map(|_| {
            (0..rng.gen_range(1..=3))
                .map(|_| {
                    let f = bases.choose(rng).unwrap().clone();
                    if rng.gen_bool(0.5) {
                        Literal::pos(f)
                    } else {
                        Literal::neg(f)
                    }
                })
                .collect()
        })
        .collect();
    Cnf { clauses }
}

fn rebuild(names: usize, sig: &Signature, valuation: Vec<InfoState>, sigma: Vec<Vec<InfoState>>) -> InqModel {
    InqModel::new(RawModel {
        world_names: (0..names).map(|i| format!("w{i}")).collect(),
        sig: sig.clone(),
        valuation,
        sigma,
    })
    .expect("derived model is valid")
}

/// Adds a copy `v'` of world `v`. Every state containing `v` is replaced
/// at random by itself, by the variant with `v'` instead of `v`, or by the
/// variant with both. The map `v' ↦ v` extends to a bisimulation.
pub fn split_world<R: Rng + ?Sized>(rng: &mut R, m: &InqModel, v: usize) -> InqModel {
    let n = m.n_worlds();
    let copy = n;
    let variant = |t: InfoState, rng: &mut R| {
        if !t.contains(v) {
            return t;
        }
        match rng.gen_range(0..3) {
            0 => t,
            1 => t.without(v).with(copy),
            _ => t.with(copy),
        }
    };
    let valuation = m
        .valuations()
        .iter()
        .map(|&p| if p.contains(v) { p.with(copy) } else { p })
        .collect();
    let mut sigma: Vec<Vec<InfoState>> = (0..n)
        .map(|w| m.sigma(w).iter().map(|&t| variant(t, rng)).collect())
        .collect();
    sigma.push(sigma[v].clone());
    rebuild(n + 1, m.sig(), valuation, sigma)
}

/// Randomly permutes the worlds; returns the model and the permutation.
pub fn relabel<R: Rng + ?Sized>(rng: &mut R, m: &InqModel) -> (InqModel, Vec<usize>) {
    let n = m.n_worlds();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let map = |t: InfoState| t.worlds().map(|w| perm[w]).collect::<InfoState>();
    let valuation = m.valuations().iter().map(|&p| map(p)).collect();
    let mut sigma = vec![Vec::new(); n];
    for w in 0..n {
        sigma[perm[w]] = m.sigma(w).iter().map(|&t| map(t)).collect();
    }
    (rebuild(n, m.sig(), valuation, sigma), perm)
}

/// Changes one member of one `Σ(w)` or one valuation entry.
pub fn perturb<R: Rng + ?Sized>(rng: &mut R, m: &InqModel) -> InqModel {
    let n = m.n_worlds();
    let mut valuation = m.valuations().to_vec();
    let mut sigma: Vec<Vec<InfoState>> = (0..n).map(|w| m.sigma(w).to_vec()).collect();
    let w = rng.gen_range(0..n);
    let flip = rng.gen_range(0..n);
    if !valuation.is_empty() && rng.gen_bool(0.3) {
        let p = rng.gen_range(0..valuation.len());
        valuation[p] = InfoState::from_bits(valuation[p].bits() ^ 1 << flip);
    } else {
        let i = rng.gen_range(0..sigma[w].len());
        sigma[w][i] = InfoState::from_bits(sigma[w][i].bits() ^ 1 << flip);
    }
    rebuild(n, m.sig(), valuation, sigma)
}

/// Two state-pointed models, biased towards equivalent pairs.
pub fn random_pair<R: Rng + ?Sized>(
    rng: &mut R,
    max_worlds: usize,
    n_props: usize,
) -> ((InqModel, InfoState), (InqModel, InfoState)) {
    let proper = rng.gen_bool(0.5);
    let split_room = max_worlds >= 2;
    let base_worlds = if split_room { max_worlds - 1 } else { max_worlds };
    let a = random_model(rng, base_worlds, n_props, proper, Faults::NONE);
    let s = random_state(rng, a.n_worlds());
    match rng.gen_range(0..4) {
        0 | 1 if split_room => {
            let v = rng.gen_range(0..a.n_worlds());
            let b = split_world(rng, &a, v);
            let copy = a.n_worlds();
            let t = if s.contains(v) {
                match rng.gen_range(0..3) {
                    0 => s,
                    1 => s.without(v).with(copy),
                    _ => s.with(copy),
                }
            } else {
                s
            };
            ((a, s), (b, t))
        }
        0 | 1 => {
            let (b, perm) = relabel(rng, &a);
            let t = s.worlds().map(|w| perm[w]).collect();
            ((a, s), (b, t))
        }
        2 => {
            let b = perturb(rng, &a);
            let t = if rng.gen_bool(0.5) { s } else { random_state(rng, b.n_worlds()) };
            ((a, s), (b, t))
        }
        _ => {
            let b = random_model(rng, max_worlds, n_props, proper, Faults::NONE);
            let t = random_state(rng, b.n_worlds());
            ((a, s), (b, t))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::full_bisim;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn formulas_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let phi = random_formula(&mut rng, 3, 3, 1);
            assert!(phi.height() <= 3);
            assert!(phi.modal_depth() <= 1);
            assert!(phi.max_prop().map_or(true, |p| p.0 < 3));
        }
    }

    #[test]
    fn splitting_and_relabeling_preserve_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let proper = rng.gen_bool(0.5);
            let a = random_model(&mut rng, 3, 2, proper, Faults::NONE);
            let s = random_state(&mut rng, a.n_worlds());
            let v = rng.gen_range(0..a.n_worlds());
            let b = split_world(&mut rng, &a, v);
            assert!(full_bisim(&a, s, &b, s).unwrap().equivalent);
            let (c, perm) = relabel(&mut rng, &a);
            let t = s.worlds().map(|w| perm[w]).collect();
            assert!(full_bisim(&a, s, &c, t).unwrap().equivalent);
        }
    }
}
