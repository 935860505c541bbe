//! Finite levels of the two-phase inquisitive bisimulation game.
//!
//! World pairs are `0`-equivalent when they agree on every proposition.
//! State pairs are `n`-equivalent when every world of either side has an
//! `n`-equivalent partner on the other side. World pairs are
//! `(n+1)`-equivalent when they are `0`-equivalent and the members of
//! `Σ(w)`, `Σ'(w')` are matched both ways at state level `n`. Both models
//! are replaced by their inquisitive closures first.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{inquisitive_closure, InqModel, ModelError, RawModel};
use crate::semantics::supports;
use crate::state::InfoState;
use crate::syntax::{Formula, PropId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BisimError {
    #[error("signatures differ: {left:?} vs {right:?}")]
    Signature {
        left: Vec<String>,
        right: Vec<String>,
    },
    #[error("{0} does not fit the model")]
    OutOfRange(String),
}

/// A finite round count or the stabilized relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Finite(usize),
    Omega,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(n) => write!(f, "{n}"),
            Level::Omega => f.write_str("omega"),
        }
    }
}

impl Serialize for Level {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Level::Finite(n) => s.serialize_u64(*n as u64),
            Level::Omega => s.serialize_str("omega"),
        }
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            N(usize),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::N(n) => Ok(Level::Finite(n)),
            Repr::S(s) if s == "omega" => Ok(Level::Omega),
            Repr::S(s) => Err(serde::de::Error::custom(format!("bad level `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// A spoiler move and the defender's best reply, if any exists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "kebab-case")]
pub enum Move {
    /// A world of the challenged state; `response: null` means stuck.
    WorldChallenge {
        side: Side,
        world: String,
        response: Option<String>,
    },
    /// A member of `Σ(w)` on one side.
    StateChallenge {
        side: Side,
        state: Vec<String>,
        response: Option<Vec<String>>,
    },
    /// The current world pair disagrees on a proposition.
    AtomicMismatch {
        left: String,
        right: String,
        prop: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BisimResult {
    pub level: Level,
    pub equivalent: bool,
    pub witness: Option<Vec<Move>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GamePosition {
    StatePair(InfoState, InfoState),
    WorldPair(usize, usize),
}

/// Reorders the propositions of `m` to follow `names`.
fn align(m: &InqModel, names: &[String]) -> Result<InqModel, BisimError> {
    let mismatch = || BisimError::Signature {
        left: names.to_vec(),
        right: m.sig().names().to_vec(),
    };
    if names.len() != m.sig().len() {
        return Err(mismatch());
    }
    if m.sig().names() == names {
        return Ok(m.clone());
    }
    let valuation = names
        .iter()
        .map(|n| m.sig().lookup(n).map(|p| m.valuation(p)).ok_or_else(mismatch))
        .collect::<Result<Vec<_>, _>>()?;
    let sig = crate::syntax::Signature::new(names.iter().cloned()).map_err(|_| mismatch())?;
    InqModel::new(RawModel {
        sig,
        valuation,
        ..m.to_raw()
    })
    .map_err(|e: ModelError| BisimError::OutOfRange(e.to_string()))
}

/// Both closed models and the world relations `~0 ⊇ ~1 ⊇ ..` computed so far.
#[derive(Clone, Debug)]
pub struct Game {
    left: InqModel,
    right: InqModel,
    /// `rows[k][w]` is the set of `w'` with `w ~k w'`.
    rows: Vec<Vec<u64>>,
    stable: Option<usize>,
}

impl Game {
    pub fn new(left: &InqModel, right: &InqModel) -> Result<Self, BisimError> {
        let right = align(right, left.sig().names())?;
        let left = inquisitive_closure(left);
        let right = inquisitive_closure(&right);
        let base = (0..left.n_worlds())
            .map(|w| {
                (0..right.n_worlds())
                    .filter(|&v| left.atomic_type(w) == right.atomic_type(v))
                    .fold(0u64, |acc, v| acc | 1 << v)
            })
            .collect();
        Ok(Game {
            left,
            right,
            rows: vec![base],
            stable: None,
        })
    }

    pub fn left(&self) -> &InqModel {
        &self.left
    }

    pub fn right(&self) -> &InqModel {
        &self.right
    }

    fn ensure(&mut self, k: usize) {
        while self.rows.len() <= k {
            let n = self.rows.len() - 1;
            let prev = &self.rows[n];
            let next: Vec<u64> = (0..self.left.n_worlds())
                .map(|w| {
                    let mut row = 0u64;
                    for v in InfoState::from_bits(prev[w]).worlds() {
                        if self.families_match(w, v, n) {
                            row |= 1 << v;
                        }
                    }
                    row
                })
                .collect();
            if self.stable.is_none() && next == *prev {
                self.stable = Some(n);
            }
            self.rows.push(next);
        }
    }

    fn lift(rows: &[u64], s: InfoState, t: InfoState, n_right: usize) -> bool {
        let forth = s.worlds().all(|u| rows[u] & t.bits() != 0);
        let back = t.worlds().all(|v| {
            debug_assert!(v < n_right);
            s.worlds().any(|u| rows[u] >> v & 1 == 1)
        });
        forth && back
    }

    fn families_match(&self, w: usize, v: usize, n: usize) -> bool {
        let rows = &self.rows[n];
        let nr = self.right.n_worlds();
        let fam_l = self.left.sigma(w);
        let fam_r = self.right.sigma(v);
        fam_l
            .iter()
            .all(|&t| fam_r.iter().any(|&u| Self::lift(rows, t, u, nr)))
            && fam_r
                .iter()
                .all(|&u| fam_l.iter().any(|&t| Self::lift(rows, t, u, nr)))
    }

    /// `w ~k w'`
    pub fn worlds_equiv(&mut self, w: usize, v: usize, k: usize) -> bool {
        self.ensure(k);
        self.rows[k][w] >> v & 1 == 1
    }

    /// The flat lifting of `~k` to the states `s`, `s'`.
    pub fn states_equiv(&mut self, s: InfoState, t: InfoState, k: usize) -> bool {
        self.ensure(k);
        Self::lift(&self.rows[k], s, t, self.right.n_worlds())
    }

    /// Least `N` with `~N = ~(N+1)`. Bounded by `|W|·|W'| + 1`.
    pub fn stabilize(&mut self) -> usize {
        let mut k = 0;
        while self.stable.is_none() {
            k += 1;
            self.ensure(k);
        }
        self.stable.unwrap()
    }

    pub fn equiv(&mut self, pos: GamePosition, k: usize) -> bool {
        match pos {
            GamePosition::StatePair(s, t) => self.states_equiv(s, t, k),
            GamePosition::WorldPair(w, v) => self.worlds_equiv(w, v, k),
        }
    }

    /// Largest `j ≤ k` at which `pos` survives, or `None` if not even at 0.
    fn survives(&mut self, pos: GamePosition, k: usize) -> Option<usize> {
        (0..=k).rev().find(|&j| self.equiv(pos, j))
    }

    fn check(&self, pos: GamePosition) -> Result<(), BisimError> {
        let (nl, nr) = (self.left.n_worlds(), self.right.n_worlds());
        let ok = match pos {
            GamePosition::StatePair(s, t) => s.fits(nl) && t.fits(nr),
            GamePosition::WorldPair(w, v) => w < nl && v < nr,
        };
        if ok {
            Ok(())
        } else {
            Err(BisimError::OutOfRange(format!("{pos:?}")))
        }
    }

    fn names(m: &InqModel, s: InfoState) -> Vec<String> {
        m.state_names(s)
    }

    /// Spoiler's play from a position that is not `k`-equivalent. The
    /// defender always answers with a reply that survives the most rounds.
    pub fn witness(&mut self, pos: GamePosition, k: usize) -> Vec<Move> {
        self.ensure(k);
        let mut moves = Vec::new();
        let mut pos = pos;
        let mut k = k;
        loop {
            debug_assert!(!self.equiv(pos, k));
            match pos {
                GamePosition::StatePair(s, t) => {
                    let (side, world, others) = match s
                        .worlds()
                        .find(|&u| self.rows[k][u] & t.bits() == 0)
                    {
                        Some(u) => (Side::Left, u, t),
                        None => {
                            let v = t
                                .worlds()
                                .find(|&v| s.worlds().all(|u| self.rows[k][u] >> v & 1 == 0))
                                .expect("a failing lift has an unmatched world");
                            (Side::Right, v, s)
                        }
                    };
                    let pair = |r: usize| match side {
                        Side::Left => GamePosition::WorldPair(world, r),
                        Side::Right => GamePosition::WorldPair(r, world),
                    };
                    let reply = others
                        .worlds()
                        .max_by_key(|&r| self.survives(pair(r), k).map_or(0, |j| j + 1));
                    let (challenged, responder) = match side {
                        Side::Left => (&self.left, &self.right),
                        Side::Right => (&self.right, &self.left),
                    };
                    moves.push(Move::WorldChallenge {
                        side,
                        world: challenged.world_name(world).to_string(),
                        response: reply.map(|r| responder.world_name(r).to_string()),
                    });
                    match reply {
                        None => return moves,
                        Some(r) => pos = pair(r),
                    }
                }
                GamePosition::WorldPair(w, v) => {
                    if self.left.atomic_type(w) != self.right.atomic_type(v) {
                        let diff = self.left.atomic_type(w) ^ self.right.atomic_type(v);
                        let p = PropId(diff.trailing_zeros() as usize);
                        moves.push(Move::AtomicMismatch {
                            left: self.left.world_name(w).to_string(),
                            right: self.right.world_name(v).to_string(),
                            prop: self.left.sig().name(p).to_string(),
                        });
                        return moves;
                    }
                    let j = k - 1;
                    let nr = self.right.n_worlds();
                    let rows = self.rows[j].clone();
                    let fam_l = self.left.sigma(w).to_vec();
                    let fam_r = self.right.sigma(v).to_vec();
                    let (side, state, others) = match fam_l
                        .iter()
                        .find(|&&t| !fam_r.iter().any(|&u| Self::lift(&rows, t, u, nr)))
                    {
                        Some(&t) => (Side::Left, t, fam_r),
                        None => {
                            let u = *fam_r
                                .iter()
                                .find(|&&u| !fam_l.iter().any(|&t| Self::lift(&rows, t, u, nr)))
                                .expect("a failing family match has an unmatched state");
                            (Side::Right, u, fam_l)
                        }
                    };
                    let pair = |r: InfoState| match side {
                        Side::Left => GamePosition::StatePair(state, r),
                        Side::Right => GamePosition::StatePair(r, state),
                    };
                    let reply = others
                        .iter()
                        .copied()
                        .max_by_key(|&r| (self.survives(pair(r), j).map_or(0, |i| i + 1), r));
                    let (challenged, responder) = match side {
                        Side::Left => (&self.left, &self.right),
                        Side::Right => (&self.right, &self.left),
                    };
                    moves.push(Move::StateChallenge {
                        side,
                        state: Self::names(challenged, state),
                        response: reply.map(|r| Self::names(responder, r)),
                    });
                    match reply {
                        None => return moves,
                        Some(r) => {
                            pos = pair(r);
                            k = j;
                        }
                    }
                }
            }
        }
    }

    fn result(&mut self, pos: GamePosition, k: usize, level: Level) -> BisimResult {
        let equivalent = self.equiv(pos, k);
        BisimResult {
            level,
            equivalent,
            witness: (!equivalent).then(|| self.witness(pos, k)),
        }
    }
}

/// `M, s ~n M', s'` with a spoiler play when it fails.
pub fn n_bisim(
    m: &InqModel,
    s: InfoState,
    m2: &InqModel,
    s2: InfoState,
    n: usize,
) -> Result<BisimResult, BisimError> {
    n_bisim_at(m, m2, GamePosition::StatePair(s, s2), n)
}

pub fn n_bisim_at(
    m: &InqModel,
    m2: &InqModel,
    pos: GamePosition,
    n: usize,
) -> Result<BisimResult, BisimError> {
    let mut g = Game::new(m, m2)?;
    g.check(pos)?;
    Ok(g.result(pos, n, Level::Finite(n)))
}

/// The stabilized relation, reported at level ω.
pub fn full_bisim(
    m: &InqModel,
    s: InfoState,
    m2: &InqModel,
    s2: InfoState,
) -> Result<BisimResult, BisimError> {
    full_bisim_at(m, m2, GamePosition::StatePair(s, s2))
}

pub fn full_bisim_at(
    m: &InqModel,
    m2: &InqModel,
    pos: GamePosition,
) -> Result<BisimResult, BisimError> {
    let mut g = Game::new(m, m2)?;
    g.check(pos)?;
    let n = g.stabilize();
    Ok(g.result(pos, n, Level::Omega))
}

/// Every world of either state has a fully equivalent partner in the other.
pub fn bulk_equiv(
    m: &InqModel,
    s: InfoState,
    m2: &InqModel,
    s2: InfoState,
) -> Result<bool, BisimError> {
    let mut g = Game::new(m, m2)?;
    g.check(GamePosition::StatePair(s, s2))?;
    let n = g.stabilize();
    let world = |g: &mut Game, u: usize, v: usize| g.worlds_equiv(u, v, n);
    let forth = s.worlds().all(|u| s2.worlds().any(|v| world(&mut g, u, v)));
    let back = s2.worlds().all(|v| s.worlds().any(|u| world(&mut g, u, v)));
    Ok(forth && back)
}

/// Outcome of comparing the game verdict with sampled formulas.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfReport {
    pub equivalent: bool,
    pub witness: Option<Vec<Move>>,
    pub sampled: usize,
    /// Indices of sampled formulas whose support differs on the two sides.
    pub disagreements: Vec<usize>,
}

impl EfReport {
    /// Equivalent pairs must agree on every sample.
    pub fn sound(&self) -> bool {
        !self.equivalent || self.disagreements.is_empty()
    }
}

/// Runs `n_bisim` and evaluates every sample on both sides. Formulas use the
/// signature of `m`; samples deeper than `n` are skipped.
pub fn ef_check<'a, I>(
    m: &InqModel,
    s: InfoState,
    m2: &InqModel,
    s2: InfoState,
    n: usize,
    sampler: I,
) -> Result<EfReport, BisimError>
where
    I: IntoIterator<Item = &'a Formula>,
{
    let res = n_bisim(m, s, m2, s2, n)?;
    let right = align(m2, m.sig().names())?;
    let mut sampled = 0;
    let mut disagreements = Vec::new();
    for (i, phi) in sampler.into_iter().enumerate() {
        if phi.modal_depth() > n {
            continue;
        }
        sampled += 1;
        if supports(m, s, phi) != supports(&right, s2, phi) {
            disagreements.push(i);
        }
    }
    Ok(EfReport {
        equivalent: res.equivalent,
        witness: res.witness,
        sampled,
        disagreements,
    })
}
