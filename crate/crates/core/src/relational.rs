//! Two-sorted relational encodings `(W, S, ε, E, P)` of (pseudo-)models.
//!
//! The second sort `S` is a list of pairwise distinct world bitsets, so
//! membership `ε` is read off the bitsets and never stored. `E[w]` lists the
//! indices of the states assigned to `w`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::limits::Limits;
use crate::model::{inquisitive_closure, InqModel, ModelError, RawModel};
use crate::state::{InfoState, MAX_WORLDS};
use crate::syntax::{PropId, Signature};

/// How much of `P(W)` the second sort represents beyond what is required.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// `{s} ∪ ⋃_w Σ(w)`.
    Minimal,
    /// Minimal plus every subset of the point.
    #[serde(rename = "subsets")]
    WithSubsetsOfPoint,
    /// All of `P(W)`.
    Full,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Minimal, Policy::WithSubsetsOfPoint, Policy::Full];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Minimal => "minimal",
            Policy::WithSubsetsOfPoint => "subsets",
            Policy::Full => "full",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy `{s}` (expected minimal, subsets or full)"))
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A failure of downward closure: `a ⊆ s ∈ E[w]` but no `t ∈ E[w]` has `t = a`.
/// Smallest nonempty `a` is reported first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ClosureWitness {
    pub world: usize,
    pub state: usize,
    pub missing: InfoState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelViolation {
    /// Two entries of the second sort have the same extension.
    Extensionality { first: usize, second: usize },
    /// `E[w] = ∅`.
    NonEmptiness { world: usize },
}

impl fmt::Display for RelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelViolation::Extensionality { first, second } => {
                write!(f, "extensionality: states {first} and {second} coincide")
            }
            RelViolation::NonEmptiness { world } => {
                write!(f, "non-emptiness: E[{world}] is empty")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelVerdict {
    /// Extensional, non-empty and downward closed.
    Model,
    /// Extensional and non-empty; carries the first downward-closure failure.
    Pseudo(ClosureWitness),
    Invalid(RelViolation),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelError {
    #[error("invalid relational structure: {0}")]
    Invalid(RelViolation),
    #[error("second sort would need {needed} states, above the cap of {cap}")]
    CapExceeded { needed: usize, cap: usize },
    #[error("the structure has no distinguished state")]
    NoPoint,
    #[error("state index {0} is out of range")]
    StateIndex(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Relational data before validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRelStruct {
    pub world_names: Vec<String>,
    pub sig: Signature,
    pub states: Vec<InfoState>,
    pub e: Vec<Vec<usize>>,
    pub props: Vec<InfoState>,
    pub point: Option<usize>,
}

impl RawRelStruct {
    fn check_structure(&self) -> Result<(), RelError> {
        let n = self.world_names.len();
        if n == 0 {
            return Err(ModelError::NoWorlds.into());
        }
        if n > MAX_WORLDS {
            return Err(ModelError::TooManyWorlds(n).into());
        }
        if self.e.len() != n {
            return Err(ModelError::Arity {
                what: "E",
                expected: n,
                found: self.e.len(),
            }
            .into());
        }
        if self.props.len() != self.sig.len() {
            return Err(ModelError::Arity {
                what: "props",
                expected: self.sig.len(),
                found: self.props.len(),
            }
            .into());
        }
        for s in self.states.iter().chain(&self.props) {
            if !s.fits(n) {
                return Err(ModelError::StateOutOfRange(*s).into());
            }
        }
        let k = self.states.len();
        if let Some(i) = self.e.iter().flatten().chain(&self.point).find(|&&i| i >= k) {
            return Err(RelError::StateIndex(*i));
        }
        Ok(())
    }
}

fn closure_witness(states: &[InfoState], e: &[Vec<usize>]) -> Option<ClosureWitness> {
    for (w, row) in e.iter().enumerate() {
        let mut present: Vec<InfoState> = row.iter().map(|&i| states[i]).collect();
        present.sort_unstable();
        for &i in row {
            let mut missing: Vec<InfoState> = states[i]
                .subsets()
                .filter(|a| present.binary_search(a).is_err())
                .collect();
            missing.sort_unstable_by_key(|a| (a.is_empty(), a.len(), a.bits()));
            if let Some(&missing) = missing.first() {
                return Some(ClosureWitness {
                    world: w,
                    state: i,
                    missing,
                });
            }
        }
    }
    None
}

/// Checks extensionality, non-emptiness and downward closure, in that order.
pub fn validate_relational(raw: &RawRelStruct) -> RelVerdict {
    let mut seen = HashMap::new();
    for (i, s) in raw.states.iter().enumerate() {
        if let Some(&first) = seen.get(s) {
            return RelVerdict::Invalid(RelViolation::Extensionality { first, second: i });
        }
        seen.insert(*s, i);
    }
    if let Some(world) = raw.e.iter().position(Vec::is_empty) {
        return RelVerdict::Invalid(RelViolation::NonEmptiness { world });
    }
    match closure_witness(&raw.states, &raw.e) {
        None => RelVerdict::Model,
        Some(w) => RelVerdict::Pseudo(w),
    }
}

/// A relational pseudo-model: extensional with nonempty `E[w]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelStruct {
    world_names: Vec<String>,
    sig: Signature,
    states: Vec<InfoState>,
    e: Vec<Vec<usize>>,
    e_bits: Vec<bool>,
    props: Vec<InfoState>,
    point: Option<usize>,
    index: HashMap<InfoState, usize>,
}

impl RelStruct {
    pub fn new(mut raw: RawRelStruct) -> Result<Self, RelError> {
        raw.check_structure()?;
        if let RelVerdict::Invalid(v) = validate_relational(&raw) {
            return Err(RelError::Invalid(v));
        }
        for row in &mut raw.e {
            row.sort_unstable();
            row.dedup();
        }
        let k = raw.states.len();
        let mut e_bits = vec![false; raw.e.len() * k];
        for (w, row) in raw.e.iter().enumerate() {
            for &i in row {
                e_bits[w * k + i] = true;
            }
        }
        let index = raw.states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(RelStruct {
            world_names: raw.world_names,
            sig: raw.sig,
            states: raw.states,
            e: raw.e,
            e_bits,
            props: raw.props,
            point: raw.point,
            index,
        })
    }

    pub fn to_raw(&self) -> RawRelStruct {
        RawRelStruct {
            world_names: self.world_names.clone(),
            sig: self.sig.clone(),
            states: self.states.clone(),
            e: self.e.clone(),
            props: self.props.clone(),
            point: self.point,
        }
    }

    pub fn validate(&self) -> RelVerdict {
        match closure_witness(&self.states, &self.e) {
            None => RelVerdict::Model,
            Some(w) => RelVerdict::Pseudo(w),
        }
    }

    pub fn n_worlds(&self) -> usize {
        self.world_names.len()
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn world_names(&self) -> &[String] {
        &self.world_names
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn states(&self) -> &[InfoState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> InfoState {
        self.states[i]
    }

    pub fn state_index(&self, s: InfoState) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn e(&self, w: usize) -> &[usize] {
        &self.e[w]
    }

    /// `E w i`
    pub fn has_e(&self, w: usize, i: usize) -> bool {
        self.e_bits[w * self.states.len() + i]
    }

    /// `w ε i`
    pub fn member(&self, w: usize, i: usize) -> bool {
        self.states[i].contains(w)
    }

    pub fn prop(&self, p: PropId) -> InfoState {
        self.props[p.0]
    }

    pub fn point(&self) -> Option<usize> {
        self.point
    }

    pub fn point_state(&self) -> Option<InfoState> {
        self.point.map(|i| self.states[i])
    }

    /// Same structure with the distinguished state moved to `s`, which must
    /// be represented.
    pub fn with_point(&self, s: InfoState) -> Option<RelStruct> {
        let i = self.state_index(s)?;
        Some(RelStruct {
            point: Some(i),
            ..self.clone()
        })
    }
}

fn build(
    m: &InqModel,
    mut states: Vec<InfoState>,
    point: Option<InfoState>,
) -> Result<RelStruct, RelError> {
    states.sort_unstable();
    states.dedup();
    let pos = |s: &InfoState| states.binary_search(s).expect("state is represented");
    let e = (0..m.n_worlds())
        .map(|w| m.sigma(w).iter().map(pos).collect())
        .collect();
    let point = point.as_ref().map(pos);
    RelStruct::new(RawRelStruct {
        world_names: m.world_names().to_vec(),
        sig: m.sig().clone(),
        e,
        props: m.valuations().to_vec(),
        point,
        states,
    })
}

fn check_cap(needed: usize, limits: &Limits) -> Result<(), RelError> {
    let cap = limits.max_states();
    if needed > cap {
        return Err(RelError::CapExceeded { needed, cap });
    }
    Ok(())
}

fn subsets_count(s: InfoState) -> usize {
    1usize.checked_shl(s.len() as u32).unwrap_or(usize::MAX)
}

/// Relational representation of `M, s` under the given second-sort policy.
pub fn encode(m: &InqModel, s: InfoState, policy: Policy) -> Result<RelStruct, RelError> {
    encode_limited(m, s, policy, &Limits::from_env())
}

pub fn encode_limited(
    m: &InqModel,
    s: InfoState,
    policy: Policy,
    limits: &Limits,
) -> Result<RelStruct, RelError> {
    if !s.fits(m.n_worlds()) {
        return Err(ModelError::StateOutOfRange(s).into());
    }
    let mut states: Vec<InfoState> = std::iter::once(s)
        .chain((0..m.n_worlds()).flat_map(|w| m.sigma(w).iter().copied()))
        .collect();
    match policy {
        Policy::Minimal => {}
        Policy::WithSubsetsOfPoint => {
            check_cap(subsets_count(s), limits)?;
            states.extend(s.subsets());
        }
        Policy::Full => {
            if m.n_worlds() > limits.max_worlds {
                return Err(RelError::CapExceeded {
                    needed: subsets_count(m.worlds()),
                    cap: limits.max_states(),
                });
            }
            states = m.worlds().subsets().collect();
        }
    }
    build(m, states, Some(s))
}

/// The (pseudo-)model `M(Mod)` and the distinguished state, if any.
pub fn decode(r: &RelStruct) -> (InqModel, Option<InfoState>) {
    let sigma = r
        .e
        .iter()
        .map(|row| row.iter().map(|&i| r.states[i]).collect())
        .collect();
    let m = InqModel::new(RawModel {
        world_names: r.world_names.clone(),
        sig: r.sig.clone(),
        valuation: r.props.clone(),
        sigma,
    })
    .expect("a relational pseudo-model decodes to a pseudo-model");
    (m, r.point_state())
}

/// Encoding of `M(Mod)↓` whose second sort also holds every subset of the
/// distinguished state.
pub fn state_closure(r: &RelStruct) -> Result<RelStruct, RelError> {
    state_closure_limited(r, &Limits::from_env())
}

pub fn state_closure_limited(r: &RelStruct, limits: &Limits) -> Result<RelStruct, RelError> {
    let s = r.point_state().ok_or(RelError::NoPoint)?;
    check_cap(subsets_count(s), limits)?;
    for &t in &r.states {
        check_cap(subsets_count(t), limits)?;
    }
    let (m, _) = decode(r);
    let closed = inquisitive_closure(&m);
    let mut states: Vec<InfoState> = s.subsets().collect();
    for w in 0..closed.n_worlds() {
        states.extend_from_slice(closed.sigma(w));
    }
    states.sort_unstable();
    states.dedup();
    check_cap(states.len(), limits)?;
    build(&closed, states, Some(s))
}

/// JSON form of a relational structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelFile {
    pub worlds: Vec<String>,
    pub states: Vec<Vec<String>>,
    #[serde(rename = "E")]
    pub e: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    pub props: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
}

impl RelFile {
    pub fn from_struct(r: &RelStruct) -> Self {
        let names = |s: InfoState| -> Vec<String> {
            s.worlds().map(|w| r.world_names[w].clone()).collect()
        };
        RelFile {
            worlds: r.world_names.clone(),
            states: r.states.iter().map(|s| names(*s)).collect(),
            e: r
                .e
                .iter()
                .enumerate()
                .map(|(w, row)| (r.world_names[w].clone(), row.clone()))
                .collect(),
            props: r
                .sig
                .ids()
                .map(|p| (r.sig.name(p).to_string(), names(r.prop(p))))
                .collect(),
            point: r.point,
        }
    }

    pub fn to_raw(&self) -> Result<RawRelStruct, RelError> {
        let index = |n: &String| {
            self.worlds
                .iter()
                .position(|w| w == n)
                .ok_or_else(|| ModelError::UnknownWorld(n.clone()))
        };
        let state = |ws: &Vec<String>| -> Result<InfoState, ModelError> {
            ws.iter().try_fold(InfoState::EMPTY, |s, n| Ok(s.with(index(n)?)))
        };
        if self.worlds.len() > MAX_WORLDS {
            return Err(ModelError::TooManyWorlds(self.worlds.len()).into());
        }
        let states = self.states.iter().map(state).collect::<Result<_, _>>()?;
        let mut e = vec![Vec::new(); self.worlds.len()];
        for (name, row) in &self.e {
            e[index(name)?] = row.clone();
        }
        let sig = Signature::new(self.props.keys().cloned()).map_err(ModelError::from)?;
        let props = self.props.values().map(state).collect::<Result<_, _>>()?;
        Ok(RawRelStruct {
            world_names: self.worlds.clone(),
            sig,
            states,
            e,
            props,
            point: self.point,
        })
    }

    pub fn to_struct(&self) -> Result<RelStruct, RelError> {
        RelStruct::new(self.to_raw()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    #[test]
    fn encode_examples() {
        let r = encode(&m0(), st(&[0, 1]), Policy::Minimal).unwrap();
        assert_eq!(r.states(), &[st(&[]), st(&[0]), st(&[1]), st(&[0, 1])]);
        assert_eq!(r.point_state(), Some(st(&[0, 1])));

        let r = encode(&p0(), st(&[1]), Policy::Minimal).unwrap();
        let mut got = r.states().to_vec();
        got.sort();
        assert_eq!(got, vec![st(&[1]), st(&[0, 1])]);

        let r = encode(&m0(), st(&[0]), Policy::Full).unwrap();
        assert_eq!(r.n_states(), 4);

        let r = encode(&p0(), st(&[0, 1]), Policy::WithSubsetsOfPoint).unwrap();
        assert_eq!(r.n_states(), 4);
    }

    #[test]
    fn validate_examples() {
        let r = encode(&m0(), st(&[0]), Policy::Minimal).unwrap();
        assert_eq!(validate_relational(&r.to_raw()), RelVerdict::Model);

        let r = encode(&p0(), st(&[0]), Policy::Minimal).unwrap();
        match validate_relational(&r.to_raw()) {
            RelVerdict::Pseudo(w) => {
                assert_eq!(w.world, 0);
                assert_eq!(r.state(w.state), st(&[0, 1]));
                assert_eq!(w.missing, st(&[0]));
            }
            other => panic!("expected pseudo, got {other:?}"),
        }

        let mut raw = r.to_raw();
        raw.states.push(raw.states[0]);
        assert!(matches!(
            validate_relational(&raw),
            RelVerdict::Invalid(RelViolation::Extensionality { .. })
        ));
        assert!(matches!(RelStruct::new(raw), Err(RelError::Invalid(_))));

        let mut raw = r.to_raw();
        raw.e[1].clear();
        assert_eq!(
            validate_relational(&raw),
            RelVerdict::Invalid(RelViolation::NonEmptiness { world: 1 })
        );
    }

    #[test]
    fn decode_examples() {
        for policy in Policy::ALL {
            let (m, s) = decode(&encode(&m0(), st(&[0]), policy).unwrap());
            assert_eq!(m, m0());
            assert_eq!(s, Some(st(&[0])));
        }
        let (m, _) = decode(&encode(&p0(), st(&[1]), Policy::Minimal).unwrap());
        assert_eq!(m, p0());
    }

    #[test]
    fn state_closure_examples() {
        let r = encode(&p0(), st(&[0, 1]), Policy::Minimal).unwrap();
        let c = state_closure(&r).unwrap();
        assert_eq!(c.n_states(), 4);
        assert_eq!(c.validate(), RelVerdict::Model);
        let e0: Vec<_> = c.e(0).iter().map(|&i| c.state(i)).collect();
        assert_eq!(e0, vec![st(&[]), st(&[0]), st(&[1]), st(&[0, 1])]);
        assert_eq!(state_closure(&c).unwrap(), c);

        let r = encode(&p0(), st(&[]), Policy::Minimal).unwrap();
        let c = state_closure(&r).unwrap();
        let (closed, _) = decode(&c);
        assert_eq!(closed, inquisitive_closure(&p0()));
        assert!(c.state_index(st(&[])).is_some());
    }

    #[test]
    fn cap_is_enforced() {
        let tiny = Limits::new(1);
        assert!(matches!(
            encode_limited(&m0(), st(&[0]), Policy::Full, &tiny),
            Err(RelError::CapExceeded { .. })
        ));
        let r = encode(&m0(), st(&[0, 1]), Policy::Minimal).unwrap();
        assert!(matches!(
            state_closure_limited(&r, &tiny),
            Err(RelError::CapExceeded { .. })
        ));
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"worlds":["w0","w1"], "states":[["w0"],["w0","w1"]],
            "E":{"w0":[0,1], "w1":[1]}, "props":{"p":["w0"]}, "point":1}"#;
        let file: RelFile = serde_json::from_str(text).unwrap();
        let r = file.to_struct().unwrap();
        assert_eq!(r.point_state(), Some(st(&[0, 1])));
        assert!(r.has_e(0, 0) && !r.has_e(1, 0));
        assert_eq!(RelFile::from_struct(&r), file);
    }
}
