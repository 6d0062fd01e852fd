use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::world::{Variant, WorldConfig, WorldError};

pub const DEFAULT_PORT: u16 = 7007;

/// Server settings, read from TOML. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub port: u16,
    /// Base seed for worlds made without an explicit seed.
    pub seed: u64,
    pub lease_ttl_secs: f64,
    pub sweep_interval_secs: f64,
    /// Pace every environment, not only the `Real` aliases.
    pub paced: bool,
    /// Random latency added on top of the step duration in paced mode, as
    /// `[low, high]` seconds.
    pub pacing_extra_latency_secs: [f64; 2],
    /// Answer `debug_pose` requests. Meant for test deployments only.
    pub debug_pose: bool,
    /// Per-variant world config files, keyed like `monolith_discrete`.
    /// Relative paths resolve against the config file's directory.
    pub worlds: BTreeMap<String, PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: DEFAULT_PORT,
            seed: 0,
            lease_ttl_secs: 60.0,
            sweep_interval_secs: 5.0,
            paced: false,
            pacing_extra_latency_secs: [0.0, 1.5],
            debug_pose: false,
            worlds: BTreeMap::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("world config for {variant}: {source}")]
    World { variant: String, source: WorldError },
}

impl ServerConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut config: ServerConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.to_owned(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in config.worlds.values_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.lease_ttl_secs > 0.0 && self.lease_ttl_secs.is_finite()) {
            return Err(ConfigError::Invalid(
                "lease_ttl_secs must be positive".into(),
            ));
        }
        if !(self.sweep_interval_secs > 0.0 && self.sweep_interval_secs.is_finite()) {
            return Err(ConfigError::Invalid(
                "sweep_interval_secs must be positive".into(),
            ));
        }
        let [lo, hi] = self.pacing_extra_latency_secs;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(ConfigError::Invalid(
                "pacing_extra_latency_secs must be [low, high] with 0 <= low <= high".into(),
            ));
        }
        for key in self.worlds.keys() {
            if !Variant::ALL.iter().any(|v| v.config_key() == key) {
                return Err(ConfigError::Invalid(format!(
                    "unknown world variant '{key}'"
                )));
            }
        }
        Ok(())
    }

    /// World configuration for each variant: the file named under `worlds`,
    /// or the built-in default.
    pub fn world_configs(&self) -> Result<BTreeMap<Variant, WorldConfig>, ConfigError> {
        Variant::ALL
            .into_iter()
            .map(|v| {
                let config = match self.worlds.get(v.config_key()) {
                    Some(path) => WorldConfig::load(path).map_err(|source| ConfigError::World {
                        variant: v.config_key().into(),
                        source,
                    })?,
                    None => v.config(),
                };
                if config.action_kind != v.action_kind() {
                    return Err(ConfigError::Invalid(format!(
                        "world config for {} has action_kind {}",
                        v.config_key(),
                        config.action_kind
                    )));
                }
                Ok((v, config))
            })
            .collect()
    }

    pub fn lease_ttl(&self) -> chrono::Duration {
        chrono::Duration::milliseconds((self.lease_ttl_secs * 1000.0).round() as i64)
    }

    pub fn sweep_interval(&self) -> std::time::Duration {
        std::time::Duration::from_secs_f64(self.sweep_interval_secs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: ServerConfig = toml::from_str("").unwrap();
        assert_eq!(c, ServerConfig::default());
        assert_eq!(c.port, 7007);
        assert_eq!(c.lease_ttl(), chrono::Duration::seconds(60));
    }

    #[test]
    fn world_paths_resolve_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let world = Variant::MonolithDiscrete.config();
        std::fs::write(dir.path().join("w.toml"), world.to_toml_string()).unwrap();
        std::fs::write(
            dir.path().join("server.toml"),
            "port = 9000\nlease_ttl_secs = 2.5\n[worlds]\nmonolith_discrete = \"w.toml\"\n",
        )
        .unwrap();
        let c = ServerConfig::load(&dir.path().join("server.toml")).unwrap();
        assert_eq!(c.port, 9000);
        assert_eq!(c.lease_ttl(), chrono::Duration::milliseconds(2500));
        let worlds = c.world_configs().unwrap();
        assert_eq!(worlds[&Variant::MonolithDiscrete], world);
    }

    #[test]
    fn mismatched_world_kind_and_bad_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("w.toml"),
            Variant::MonolithContinuous.config().to_toml_string(),
        )
        .unwrap();
        std::fs::write(
            dir.path().join("s.toml"),
            "[worlds]\nmonolith_discrete = \"w.toml\"\n",
        )
        .unwrap();
        let c = ServerConfig::load(&dir.path().join("s.toml")).unwrap();
        assert!(matches!(c.world_configs(), Err(ConfigError::Invalid(_))));
        std::fs::write(
            dir.path().join("s.toml"),
            "[worlds]\npendulum = \"w.toml\"\n",
        )
        .unwrap();
        assert!(ServerConfig::load(&dir.path().join("s.toml")).is_err());
        std::fs::write(dir.path().join("s.toml"), "colour = 1\n").unwrap();
        assert!(ServerConfig::load(&dir.path().join("s.toml")).is_err());
    }
}
