//! Named modem/model profiles, built in or loaded from a TOML file.
//!
//! ```toml
//! [profiles.narrow-m16]
//! sample_rate_hz = 11025.0
//! symbol_len = 1024
//! tone_count = 16
//! sync_bin = 100
//! tone_offset = 2
//! ref_bandwidth_hz = 2500.0
//! conv_filters = 32
//! conv_kernel = 16
//! hidden_units = 64
//! ```
//!
//! Every key is required. A file profile with a built-in name replaces it.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mfsk_core::neural::ModelConfig;
use mfsk_core::signal::ModemProfile;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub name: String,
    pub modem: ModemProfile,
    pub model: ModelConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileEntry {
    sample_rate_hz: f64,
    symbol_len: usize,
    tone_count: usize,
    sync_bin: usize,
    tone_offset: usize,
    ref_bandwidth_hz: f64,
    conv_filters: usize,
    conv_kernel: usize,
    hidden_units: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    profiles: BTreeMap<String, ProfileEntry>,
}

#[derive(Debug, Clone)]
pub struct ProfileSet {
    profiles: BTreeMap<String, Profile>,
}

impl ProfileSet {
    pub fn builtin() -> Self {
        let mut profiles = BTreeMap::new();
        for (name, modem, model) in [
            ("jt65a-full", ModemProfile::jt65a_full(), ModelConfig::jt65a_full()),
            ("reduced-m8", ModemProfile::reduced_m8(), ModelConfig::reduced_m8()),
        ] {
            profiles.insert(
                name.to_string(),
                Profile {
                    name: name.to_string(),
                    modem,
                    model,
                },
            );
        }
        Self { profiles }
    }

    pub fn with_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::with_text(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn with_text(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text)?;
        let mut set = Self::builtin();
        for (name, e) in file.profiles {
            let modem = ModemProfile::new(
                e.sample_rate_hz,
                e.symbol_len,
                e.tone_count,
                e.sync_bin,
                e.tone_offset,
                e.ref_bandwidth_hz,
            )
            .with_context(|| format!("profile {name}"))?;
            let model = ModelConfig {
                input_len: e.symbol_len,
                conv_filters: e.conv_filters,
                conv_kernel: e.conv_kernel,
                hidden_units: e.hidden_units,
                classes: e.tone_count,
            };
            model.validate().with_context(|| format!("profile {name}"))?;
            set.profiles.insert(name.clone(), Profile { name, modem, model });
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Result<&Profile> {
        match self.profiles.get(name) {
            Some(p) => Ok(p),
            None => bail!(
                "unknown profile {name:?} (known: {})",
                self.profiles.keys().cloned().collect::<Vec<_>>().join(", ")
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_match_library_constants() {
        let set = ProfileSet::builtin();
        let full = set.get("jt65a-full").unwrap();
        assert_eq!(full.modem, ModemProfile::jt65a_full());
        assert_eq!(full.model.parameter_counts().total, 33_561_604);
        assert_eq!(set.get("reduced-m8").unwrap().modem.tone_count, 8);
        assert!(set.get("nope").is_err());
    }

    #[test]
    fn file_profiles_are_validated() {
        let ok = "[profiles.m4]\nsample_rate_hz = 8000.0\nsymbol_len = 256\ntone_count = 4\nsync_bin = 20\n\
                  tone_offset = 2\nref_bandwidth_hz = 2500.0\nconv_filters = 4\nconv_kernel = 8\nhidden_units = 8\n";
        let set = ProfileSet::with_text(ok).unwrap();
        assert_eq!(set.get("m4").unwrap().model.input_len, 256);
        assert!(ProfileSet::with_text(&ok.replace("tone_count = 4", "tone_count = 3")).is_err());
        assert!(ProfileSet::with_text(&ok.replace("hidden_units = 8\n", "")).is_err());
        assert!(ProfileSet::with_text("[profiles.x]\nbogus = 1\n").is_err());
    }
}
