//! Environment names.
//!
//! Every variant is published twice, as `OffWorld<Variant>Sim-v0` and
//! `OffWorld<Variant>Real-v0`. Both are simulator-backed; the `Real` alias is
//! always paced. The `OffWorld` prefix may be omitted by clients.

use std::fmt;
use std::str::FromStr;

use crate::world::Variant;

const PREFIX: &str = "OffWorld";
const SUFFIX: &str = "-v0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnvSpec {
    pub variant: Variant,
    pub real: bool,
}

impl EnvSpec {
    pub fn all() -> Vec<EnvSpec> {
        Variant::ALL
            .into_iter()
            .flat_map(|variant| [false, true].map(|real| EnvSpec { variant, real }))
            .collect()
    }

    /// Canonical name, which doubles as the env id for leases and bookings.
    pub fn name(&self) -> String {
        format!(
            "{PREFIX}{}{}{SUFFIX}",
            self.variant.stem(),
            if self.real { "Real" } else { "Sim" }
        )
    }

    pub fn parse(name: &str) -> Option<Self> {
        let rest = name.strip_suffix(SUFFIX)?;
        let rest = rest.strip_prefix(PREFIX).unwrap_or(rest);
        let (stem, real) = if let Some(s) = rest.strip_suffix("Real") {
            (s, true)
        } else {
            (rest.strip_suffix("Sim")?, false)
        };
        let variant = Variant::ALL.into_iter().find(|v| v.stem() == stem)?;
        Some(EnvSpec { variant, real })
    }
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown environment '{name}'; valid names: {valid}", name = self.0, valid = known_env_names().join(", "))]
pub struct UnknownEnv(pub String);

impl FromStr for EnvSpec {
    type Err = UnknownEnv;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvSpec::parse(s).ok_or_else(|| UnknownEnv(s.to_owned()))
    }
}

pub fn known_env_names() -> Vec<String> {
    EnvSpec::all().iter().map(EnvSpec::name).collect()
}
