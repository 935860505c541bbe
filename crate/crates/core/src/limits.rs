use crate::state::MAX_WORLDS;

/// Environment variable overriding [`Limits::DEFAULT_WORLDS`].
pub const CAP_ENV: &str = "INQML_CAP";

/// Safety cap for operations that enumerate `2^|W|` states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest world count for which a full power set may be materialized.
    pub max_worlds: usize,
}

impl Limits {
    pub const DEFAULT_WORLDS: usize = 16;

    pub fn new(max_worlds: usize) -> Self {
        Limits {
            max_worlds: max_worlds.min(MAX_WORLDS),
        }
    }

    /// Reads `INQML_CAP`, falling back to the default on absence or garbage.
    pub fn from_env() -> Self {
        std::env::var(CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .map_or_else(Limits::default, Limits::new)
    }

    /// Largest second sort that may be materialized.
    pub fn max_states(&self) -> usize {
        1usize.checked_shl(self.max_worlds as u32).unwrap_or(usize::MAX)
    }
}

impl Default for Limits {
    fn default() -> Self {
        Limits::new(Self::DEFAULT_WORLDS)
    }
}
