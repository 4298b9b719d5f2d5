//! Name-keyed registries of interchangeable algorithm implementations.
//!
//! Each pluggable stage of the simulator (channel code, channel estimator,
//! periodogram peak refiner, sensing measurement mode) is a trait object.
//! The built-in implementations are listed in a static [`Registry`] and are
//! selected by name from the campaign config or the command line.

use crate::error::{Error, Result};

pub type Factory<T> = fn() -> Box<T>;

pub struct Registry<T: ?Sized + 'static> {
    kind: &'static str,
    entries: &'static [(&'static str, Factory<T>)],
}

impl<T: ?Sized + 'static> Registry<T> {
    pub const fn new(kind: &'static str, entries: &'static [(&'static str, Factory<T>)]) -> Self {
        Self { kind, entries }
    }

    /// What this registry holds, e.g. "channel code".
    pub fn kind(&self) -> &'static str {
        self.kind
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(name, _)| *name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| *n == name)
    }

    /// Instantiate the implementation registered under `name`.
    pub fn create(&self, name: &str) -> Result<Box<T>> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, factory)| factory())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().collect::<Vec<_>>().join(", "),
            })
    }
}
