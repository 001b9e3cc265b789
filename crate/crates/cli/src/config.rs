//! The single-document TOML configuration.
//!
//! ```toml
//! assets = "assets"
//!
//! [synth]
//! samples = 500
//! seed = 0
//!
//! [reconstruct]
//! eps_deg = 5.0
//! sigma = 8.0
//!
//! [methods.sparsenet]
//! kind = "indirect_sparse_external"
//! predictions = "external/sparsenet"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lumisphere::domain::{MaxMode, DEFAULT_EPS_DEG, DEFAULT_SH_ORDER, DEFAULT_SIGMA};
use lumisphere::synth::DatasetConfig;
use serde::{Deserialize, Serialize};

use crate::methods::MethodKind;

pub const ASSETS_ENV: &str = "LUMISPHERE_ASSETS";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Asset root; relative paths resolve against the config file.
    pub assets: Option<PathBuf>,
    pub synth: DatasetConfig,
    pub reconstruct: ReconstructConfig,
    pub eval: EvalConfig,
    pub serve: ServeConfig,
    /// Named methods beyond the built-in ones.
    pub methods: BTreeMap<String, MethodKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub eps_deg: f64,
    pub sigma: f64,
    pub sh_order: usize,
    pub max_mode: MaxMode,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self { eps_deg: DEFAULT_EPS_DEG, sigma: DEFAULT_SIGMA, sh_order: DEFAULT_SH_ORDER, max_mode: MaxMode::PerChannel }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Score linear maps instead of tone-mapped ones.
    pub linear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub host: String,
    pub port: u16,
    pub max_upload_bytes: usize,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self { host: "127.0.0.1".into(), port: 8080, max_upload_bytes: 16 << 20 }
    }
}

impl Config {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let c: Config = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Reads `path`, or returns the defaults when no file is given.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut c = Self::parse(&text).with_context(|| format!("config {}", path.display()))?;
        if let (Some(a), Some(dir)) = (&c.assets, path.parent()) {
            if a.is_relative() {
                c.assets = Some(dir.join(a));
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.synth.validate()?;
        let r = &self.reconstruct;
        if !(r.eps_deg > 0.0 && r.eps_deg < 90.0) {
            bail!("reconstruct.eps_deg must lie in (0, 90), got {}", r.eps_deg);
        }
        if !(r.sigma > 0.0 && r.sigma.is_finite()) {
            bail!("reconstruct.sigma must be positive, got {}", r.sigma);
        }
        for (name, kind) in &self.methods {
            kind.validate().with_context(|| format!("method {name}"))?;
        }
        Ok(())
    }

    /// Asset root from the flag, then the environment, then the config.
    pub fn asset_root(&self, flag: Option<&Path>) -> anyhow::Result<PathBuf> {
        if let Some(p) = flag {
            return Ok(p.to_path_buf());
        }
        if let Some(p) = std::env::var_os(ASSETS_ENV).filter(|v| !v.is_empty()) {
            return Ok(PathBuf::from(p));
        }
        match &self.assets {
            Some(p) => Ok(p.clone()),
            None => bail!("no asset root: pass --assets, set {ASSETS_ENV}, or set `assets` in the config"),
        }
    }
}
