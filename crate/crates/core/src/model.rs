//! Finite inquisitive models and pseudo-models.
//!
//! A model assigns every world a nonempty family `Σ(w)` of information
//! states. It is *proper* when each family is downward closed and a
//! *pseudo-model* otherwise. Families are kept duplicate-free and sorted by
//! bitset value, so structural equality is model equality.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mutation::{Faults, Mutant};
use crate::state::{InfoState, MAX_WORLDS};
use crate::syntax::{PropId, Signature, SignatureError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Proper,
    Pseudo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    /// `Σ(w) = ∅`.
    EmptyAssignment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct InvalidReason {
    pub world: usize,
    pub condition: Condition,
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.condition {
            Condition::EmptyAssignment => {
                write!(f, "world {} has an empty assignment", self.world)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Proper,
    Pseudo,
    Invalid(InvalidReason),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("a model needs at least one world")]
    NoWorlds,
    #[error("{0} worlds exceed the bitset width of {MAX_WORLDS}")]
    TooManyWorlds(usize),
    #[error("duplicate world name `{0}`")]
    DuplicateWorld(String),
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("expected {expected} entries for {what}, found {found}")]
    Arity {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("state {0:?} mentions a world outside the model")]
    StateOutOfRange(InfoState),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("invalid model: {0}")]
    Invalid(InvalidReason),
    #[error("file names both a state and a world as the point")]
    AmbiguousPoint,
}

/// Model data before validation; `Σ(w)` may be empty here.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawModel {
    pub world_names: Vec<String>,
    pub sig: Signature,
    pub valuation: Vec<InfoState>,
    pub sigma: Vec<Vec<InfoState>>,
}

impl RawModel {
    fn check_structure(&self) -> Result<(), ModelError> {
        let n = self.world_names.len();
        if n == 0 {
            return Err(ModelError::NoWorlds);
        }
        if n > MAX_WORLDS {
            return Err(ModelError::TooManyWorlds(n));
        }
        for (i, name) in self.world_names.iter().enumerate() {
            if self.world_names[..i].contains(name) {
                return Err(ModelError::DuplicateWorld(name.clone()));
            }
        }
        if self.sigma.len() != n {
            return Err(ModelError::Arity {
                what: "sigma",
                expected: n,
                found: self.sigma.len(),
            });
        }
        if self.valuation.len() != self.sig.len() {
            return Err(ModelError::Arity {
                what: "valuation",
                expected: self.sig.len(),
                found: self.valuation.len(),
            });
        }
        let states = self.valuation.iter().chain(self.sigma.iter().flatten());
        for s in states {
            if !s.fits(n) {
                return Err(ModelError::StateOutOfRange(*s));
            }
        }
        Ok(())
    }
}

/// Classifies raw model data.
pub fn validate(raw: &RawModel) -> Verdict {
    let mut proper = true;
    for (w, family) in raw.sigma.iter().enumerate() {
        if family.is_empty() {
            return Verdict::Invalid(InvalidReason {
                world: w,
                condition: Condition::EmptyAssignment,
            });
        }
        proper &= is_downward_closed(family);
    }
    if proper {
        Verdict::Proper
    } else {
        Verdict::Pseudo
    }
}

fn is_downward_closed(family: &[InfoState]) -> bool {
    let mut sorted = family.to_vec();
    sorted.sort_unstable();
    family
        .iter()
        .all(|s| s.subsets().all(|t| sorted.binary_search(&t).is_ok()))
}

fn canonical(mut family: Vec<InfoState>) -> Vec<InfoState> {
    family.sort_unstable();
    family.dedup();
    family
}

/// A validated (pseudo-)model `(W, Σ, V)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InqModel {
    world_names: Vec<String>,
    sig: Signature,
    valuation: Vec<InfoState>,
    sigma: Vec<Vec<InfoState>>,
    kripke: Vec<InfoState>,
    kind: ModelKind,
}

impl InqModel {
    pub fn new(raw: RawModel) -> Result<Self, ModelError> {
        raw.check_structure()?;
        let kind = match validate(&raw) {
            Verdict::Proper => ModelKind::Proper,
            Verdict::Pseudo => ModelKind::Pseudo,
            Verdict::Invalid(reason) => return Err(ModelError::Invalid(reason)),
        };
        let sigma: Vec<_> = raw.sigma.into_iter().map(canonical).collect();
        let kripke = sigma
            .iter()
            .map(|fam| fam.iter().fold(InfoState::EMPTY, |a, s| a.union(*s)))
            .collect();
        Ok(InqModel {
            world_names: raw.world_names,
            sig: raw.sig,
            valuation: raw.valuation,
            sigma,
            kripke,
            kind,
        })
    }

    /// Worlds named `w0, w1, ..`.
    pub fn from_parts(
        sig: Signature,
        valuation: Vec<InfoState>,
        sigma: Vec<Vec<InfoState>>,
    ) -> Result<Self, ModelError> {
        let world_names = (0..sigma.len()).map(|i| format!("w{i}")).collect();
        InqModel::new(RawModel {
            world_names,
            sig,
            valuation,
            sigma,
        })
    }

    pub fn to_raw(&self) -> RawModel {
        RawModel {
            world_names: self.world_names.clone(),
            sig: self.sig.clone(),
            valuation: self.valuation.clone(),
            sigma: self.sigma.clone(),
        }
    }

    pub fn n_worlds(&self) -> usize {
        self.world_names.len()
    }

    pub fn worlds(&self) -> InfoState {
        InfoState::full(self.n_worlds())
    }

    pub fn world_names(&self) -> &[String] {
        &self.world_names
    }

    pub fn world_name(&self, w: usize) -> &str {
        &self.world_names[w]
    }

    pub fn world_index(&self, name: &str) -> Option<usize> {
        self.world_names.iter().position(|n| n == name)
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn is_proper(&self) -> bool {
        self.kind == ModelKind::Proper
    }

    pub fn validate(&self) -> Verdict {
        match self.kind {
            ModelKind::Proper => Verdict::Proper,
            ModelKind::Pseudo => Verdict::Pseudo,
        }
    }

    pub fn valuation(&self, p: PropId) -> InfoState {
        self.valuation[p.0]
    }

    pub fn valuations(&self) -> &[InfoState] {
        &self.valuation
    }

    pub fn sigma(&self, w: usize) -> &[InfoState] {
        &self.sigma[w]
    }

    /// `σ(w) = ⋃ Σ(w)`.
    pub fn kripke_sigma(&self, w: usize) -> InfoState {
        self.kripke[w]
    }

    /// Bitmask of the propositions true at `w`.
    pub fn atomic_type(&self, w: usize) -> u64 {
        self.valuation
            .iter()
            .enumerate()
            .filter(|(_, v)| v.contains(w))
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    /// Display helper for states as `{w0, w1}`.
    pub fn state_label(&self, s: InfoState) -> String {
        let names: Vec<_> = s.worlds().map(|w| self.world_names[w].as_str()).collect();
        format!("{{{}}}", names.join(", "))
    }

    pub fn state_names(&self, s: InfoState) -> Vec<String> {
        s.worlds().map(|w| self.world_names[w].clone()).collect()
    }

    pub fn parse_state<S: AsRef<str>>(&self, names: &[S]) -> Result<InfoState, ModelError> {
        names.iter().try_fold(InfoState::EMPTY, |s, n| {
            self.world_index(n.as_ref())
                .map(|w| s.with(w))
                .ok_or_else(|| ModelError::UnknownWorld(n.as_ref().to_string()))
        })
    }
}

/// `Σ↓(w) = { t : t ⊆ s for some s ∈ Σ(w) }` for every world.
pub fn inquisitive_closure(m: &InqModel) -> InqModel {
    inquisitive_closure_with(m, Faults::NONE)
}

pub fn inquisitive_closure_with(m: &InqModel, faults: Faults) -> InqModel {
    let drop_empty = faults.has(Mutant::ClosureDropsEmpty);
    let sigma = m
        .sigma
        .iter()
        .map(|fam| {
            let mut closed: Vec<_> = fam.iter().flat_map(|s| s.subsets()).collect();
            closed.sort_unstable();
            closed.dedup();
            if drop_empty && closed.len() > 1 {
                closed.retain(|t| !t.is_empty());
            }
            closed
        })
        .collect();
    InqModel::new(RawModel {
        sigma,
        ..m.to_raw()
    })
    .expect("closure of a valid model is valid")
}

pub fn kripke_sigma(m: &InqModel, w: usize) -> InfoState {
    m.kripke_sigma(w)
}

/// Shape parameters for random (pseudo-)models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelGen {
    pub n_worlds: usize,
    pub n_props: usize,
    pub max_states_per_world: usize,
    /// Probability that the sample is replaced by its inquisitive closure.
    pub close_probability: f64,
}

impl ModelGen {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> InqModel {
        assert!(self.n_worlds >= 1 && self.max_states_per_world >= 1);
        let n = self.n_worlds;
        let full = InfoState::full(n).bits();
        let state = |rng: &mut R| InfoState::from_bits(rng.gen::<u64>() & full);
        let valuation = (0..self.n_props).map(|_| state(rng)).collect();
        let sigma = (0..n)
            .map(|_| {
                let k = rng.gen_range(1..=self.max_states_per_world);
                (0..k).map(|_| state(rng)).collect()
            })
            .collect();
        let m = InqModel::from_parts(Signature::standard(self.n_props), valuation, sigma)
            .expect("generated model is structurally sound");
        if self.close_probability > 0.0 && rng.gen_bool(self.close_probability.min(1.0)) {
            inquisitive_closure(&m)
        } else {
            m
        }
    }
}

/// Deterministic random pseudo-model; never closed afterwards.
pub fn random_pseudo_model(
    seed: u64,
    n_worlds: usize,
    n_props: usize,
    max_states_per_world: usize,
) -> InqModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ModelGen {
        n_worlds,
        n_props,
        max_states_per_world,
        close_probability: 0.0,
    }
    .sample(&mut rng)
}

/// A model with a distinguished information state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointedModel {
    pub model: InqModel,
    pub point: InfoState,
}

impl PointedModel {
    pub fn state(model: InqModel, point: InfoState) -> Self {
        PointedModel { model, point }
    }

    /// World-pointed models are normalized to the singleton state.
    pub fn world(model: InqModel, w: usize) -> Self {
        PointedModel {
            model,
            point: InfoState::singleton(w),
        }
    }
}

/// JSON form of a (pointed) model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub worlds: Vec<String>,
    #[serde(default)]
    pub valuation: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub sigma: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world: Option<String>,
}

impl ModelFile {
    pub fn from_model(m: &InqModel, point: Option<InfoState>) -> Self {
        let valuation = m
            .sig()
            .ids()
            .map(|p| (m.sig().name(p).to_string(), m.state_names(m.valuation(p))))
            .collect();
        let sigma = (0..m.n_worlds())
            .map(|w| {
                let fam = m.sigma(w).iter().map(|s| m.state_names(*s)).collect();
                (m.world_name(w).to_string(), fam)
            })
            .collect();
        ModelFile {
            worlds: m.world_names().to_vec(),
            valuation,
            sigma,
            state: point.map(|s| m.state_names(s)),
            world: None,
        }
    }

    fn index(&self, name: &str) -> Result<usize, ModelError> {
        self.worlds
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
    }

    fn state_of(&self, names: &[String]) -> Result<InfoState, ModelError> {
        names
            .iter()
            .try_fold(InfoState::EMPTY, |s, n| Ok(s.with(self.index(n)?)))
    }

    /// Raw data; worlds missing from `sigma` get an empty assignment.
    pub fn to_raw(&self) -> Result<RawModel, ModelError> {
        if self.worlds.len() > MAX_WORLDS {
            return Err(ModelError::TooManyWorlds(self.worlds.len()));
        }
        let sig = Signature::new(self.valuation.keys().cloned())?;
        let valuation = self
            .valuation
            .values()
            .map(|ws| self.state_of(ws))
            .collect::<Result<_, _>>()?;
        let mut sigma = vec![Vec::new(); self.worlds.len()];
        for (name, fam) in &self.sigma {
            let w = self.index(name)?;
            sigma[w] = fam
                .iter()
                .map(|s| self.state_of(s))
                .collect::<Result<_, _>>()?;
        }
        Ok(RawModel {
            world_names: self.worlds.clone(),
            sig,
            valuation,
            sigma,
        })
    }

    /// The distinguished state, if the file names one.
    pub fn point(&self) -> Result<Option<InfoState>, ModelError> {
        match (&self.state, &self.world) {
            (Some(_), Some(_)) => Err(ModelError::AmbiguousPoint),
            (Some(s), None) => Ok(Some(self.state_of(s)?)),
            (None, Some(w)) => Ok(Some(InfoState::singleton(self.index(w)?))),
            (None, None) => Ok(None),
        }
    }

    pub fn to_model(&self) -> Result<InqModel, ModelError> {
        InqModel::new(self.to_raw()?)
    }
}
