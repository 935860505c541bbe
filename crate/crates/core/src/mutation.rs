//! Seeded faults for checking that the differential harness has teeth.
//!
//! Each [`Mutant`] corrupts exactly one rule of the implementation. The
//! `*_with` variants of the affected operations take a [`Faults`] value;
//! the plain entry points always run with [`Faults::NONE`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutant {
    /// `flat(ψ → χ)` takes the antecedent's grade instead of the consequent's.
    FlatImpliesAntecedent,
    /// `flat(ψ ⩒ χ)` drops the `+ 1`.
    FlatDisjNoIncrement,
    /// The implication clause quantifies over proper subsets only.
    StrictImplication,
    /// The inquisitive closure omits the empty state.
    ClosureDropsEmpty,
    /// `ST(□ψ)` guards with `E y μ ∧ x ∈ μ` instead of `E x μ ∧ y ∈ μ`.
    BoxGuardSwapped,
}

impl Mutant {
    pub const ALL: [Mutant; 5] = [
        Mutant::FlatImpliesAntecedent,
        Mutant::FlatDisjNoIncrement,
        Mutant::StrictImplication,
        Mutant::ClosureDropsEmpty,
        Mutant::BoxGuardSwapped,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutant::FlatImpliesAntecedent => "flat-implies-antecedent",
            Mutant::FlatDisjNoIncrement => "flat-disj-no-increment",
            Mutant::StrictImplication => "strict-implication",
            Mutant::ClosureDropsEmpty => "closure-drops-empty",
            Mutant::BoxGuardSwapped => "box-guard-swapped",
        }
    }
}

impl fmt::Display for Mutant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutant::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mutant `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Faults(Option<Mutant>);

impl Faults {
    pub const NONE: Faults = Faults(None);

    pub fn inject(mutant: Mutant) -> Self {
        Faults(Some(mutant))
    }

    pub fn mutant(self) -> Option<Mutant> {
        self.0
    }

    pub fn has(self, mutant: Mutant) -> bool {
        self.0 == Some(mutant)
    }
}

impl From<Option<Mutant>> for Faults {
    fn from(m: Option<Mutant>) -> Self {
        Faults(m)
    }
}
