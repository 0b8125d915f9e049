//! Scenario configuration: the TOML schema, dotted-path overrides, and
//! conversion into solver types.
//!
//! Unknown keys are rejected at every nesting level with the offending
//! key named. Relative paths inside a config (tabulated graph CSVs)
//! resolve against the config file's own directory, so fixtures work
//! from any working directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::monotone::{Graph, Tabulated};
use crate::noise::DiffusionSpec;
use crate::solver::{InitialData, LambdaSchedule, Scenario, Scheme};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub noise_check: NoiseCheckConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub graph: GraphConfig,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub operator_shift: f64,
    #[serde(default)]
    pub operator_quasi_shift: f64,
    pub n_x: usize,
    pub horizon: f64,
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub diffusion: DiffusionConfig,
    #[serde(default)]
    pub lambdas: LambdaConfig,
}

fn default_scheme() -> String {
    "semi_implicit".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    /// linear | power | sign | exp_minus_one | tabulated | shifted | quasi_shift
    pub kind: String,
    pub slope: Option<f64>,
    pub exponent: Option<f64>,
    /// two-column CSV (r, f(r)) for tabulated graphs
    pub csv: Option<PathBuf>,
    pub offset: Option<f64>,
    pub beta: Option<f64>,
    pub base: Option<Box<GraphConfig>>,
}

impl GraphConfig {
    pub fn build(&self, base_dir: &Path) -> Result<Graph> {
        let need = |opt: Option<f64>, what: &str| {
            opt.ok_or_else(|| Error::config(format!("graph kind '{}' needs '{what}'", self.kind)))
        };
        let graph = match self.kind.as_str() {
            "linear" => {
                self.forbid(&["exponent", "csv", "offset", "beta", "base"])?;
                Graph::linear(need(self.slope, "slope")?)?
            }
            "power" => {
                self.forbid(&["slope", "csv", "offset", "beta", "base"])?;
                Graph::power(need(self.exponent, "exponent")?)?
            }
            "sign" => {
                self.forbid(&["slope", "exponent", "csv", "offset", "beta", "base"])?;
                Graph::sign()
            }
            "exp_minus_one" => {
                self.forbid(&["slope", "exponent", "csv", "offset", "beta", "base"])?;
                Graph::exp_minus_one()
            }
            "tabulated" => {
                self.forbid(&["slope", "exponent", "offset", "beta", "base"])?;
                let rel = self
                    .csv
                    .as_ref()
                    .ok_or_else(|| Error::config("graph kind 'tabulated' needs 'csv'"))?;
                let path = if rel.is_absolute() {
                    rel.clone()
                } else {
                    base_dir.join(rel)
                };
                Graph::Tabulated(Tabulated::from_csv(&path)?)
            }
            "shifted" => {
                self.forbid(&["slope", "exponent", "csv", "beta"])?;
                let inner = self.base.as_ref().ok_or_else(|| {
                    Error::config("graph kind 'shifted' needs a [..graph.base] table")
                })?;
                Graph::shifted(inner.build(base_dir)?, need(self.offset, "offset")?)?
            }
            "quasi_shift" => {
                self.forbid(&["slope", "exponent", "csv", "offset"])?;
                let inner = self.base.as_ref().ok_or_else(|| {
                    Error::config("graph kind 'quasi_shift' needs a [..graph.base] table")
                })?;
                Graph::quasi_shift(inner.build(base_dir)?, need(self.beta, "beta")?)?
            }
            other => {
                return Err(Error::config(format!("unknown graph kind '{other}'")));
            }
        };
        Ok(graph)
    }

    /// Reject fields that the declared kind does not consume, so typos and
    /// stale overrides surface instead of being silently ignored.
    fn forbid(&self, unused: &[&str]) -> Result<()> {
        for &name in unused {
            let set = match name {
                "slope" => self.slope.is_some(),
                "exponent" => self.exponent.is_some(),
                "csv" => self.csv.is_some(),
                "offset" => self.offset.is_some(),
                "beta" => self.beta.is_some(),
                "base" => self.base.is_some(),
                _ => false,
            };
            if set {
                return Err(Error::config(format!(
                    "graph kind '{}' does not use '{name}'",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// eigenmode | bump | random | values
    pub kind: String,
    pub mode: Option<usize>,
    pub seed: Option<u64>,
    pub values: Option<Vec<f64>>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: "bump".to_string(),
            mode: None,
            seed: None,
            values: None,
        }
    }
}

impl InitialConfig {
    pub fn build(&self) -> Result<InitialData> {
        match self.kind.as_str() {
            "eigenmode" => Ok(InitialData::Eigenmode {
                mode: self
                    .mode
                    .ok_or_else(|| Error::config("initial kind 'eigenmode' needs 'mode'"))?,
            }),
            "bump" => Ok(InitialData::Bump),
            "random" => Ok(InitialData::Random {
                seed: self
                    .seed
                    .ok_or_else(|| Error::config("initial kind 'random' needs 'seed'"))?,
            }),
            "values" => Ok(InitialData::Values(self.values.clone().ok_or_else(
                || Error::config("initial kind 'values' needs 'values'"),
            )?)),
            other => Err(Error::config(format!("unknown initial kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    /// power_decay | list | off
    pub kind: String,
    pub gamma: Option<f64>,
    pub amplitude: Option<f64>,
    pub regularity: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            kind: "power_decay".to_string(),
            gamma: None,
            amplitude: None,
            regularity: None,
            coefficients: None,
        }
    }
}

impl DiffusionConfig {
    pub fn build(&self) -> Result<DiffusionSpec> {
        let regularity = self.regularity.unwrap_or(1.0);
        match self.kind.as_str() {
            "power_decay" => DiffusionSpec::scaled_power_decay(
                self.gamma.unwrap_or(2.0),
                self.amplitude.unwrap_or(1.0),
                regularity,
            ),
            "list" => {
                let coeffs = self
                    .coefficients
                    .clone()
                    .ok_or_else(|| Error::config("diffusion kind 'list' needs 'coefficients'"))?;
                DiffusionSpec::from_coefficients(coeffs, regularity)
            }
            "off" => Ok(DiffusionSpec::off()),
            other => Err(Error::config(format!("unknown diffusion kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaConfig {
    pub initial: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        LambdaConfig {
            initial: 1e-2,
            ratio: 0.5,
            count: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// keep every stride-th time step in trajectory files (plus the final one)
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { stride: 10 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseCheckConfig {
    /// Monte Carlo sample count for the noise-check command
    pub paths: usize,
}

impl Default for NoiseCheckConfig {
    fn default() -> Self {
        NoiseCheckConfig { paths: 10_000 }
    }
}

impl ConfigFile {
    /// Read and parse a config, applying `--set` overrides before the
    /// typed pass. Returns the config together with its base directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<(ConfigFile, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config '{}': {e}", path.display())))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let config = if overrides.is_empty() {
            // direct pass keeps line/column positions in error messages
            toml::from_str::<ConfigFile>(&text)
                .map_err(|e| Error::config(format!("{}: {e}", path.display())))?
        } else {
            let mut value = toml::from_str::<toml::Value>(&text)
                .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
            for entry in overrides {
                apply_override(&mut value, entry)?;
            }
            value
                .try_into::<ConfigFile>()
                .map_err(|e| Error::config(format!("{}: {e}", path.display())))?
        };
        if config.output.stride == 0 {
            return Err(Error::config("output.stride must be at least 1"));
        }
        if config.noise_check.paths < 2 {
            return Err(Error::config("noise_check.paths must be at least 2"));
        }
        Ok((config, base))
    }

    pub fn to_scenario(&self, base_dir: &Path) -> Result<Scenario> {
        let sc = &self.scenario;
        let scheme = match sc.scheme.as_str() {
            "semi_implicit" => Scheme::SemiImplicit,
            "exp_euler" => Scheme::ExpEuler,
            other => {
                return Err(Error::config(format!("unknown scheme '{other}'")));
            }
        };
        Ok(Scenario {
            graph: sc.graph.build(base_dir)?,
            alpha: sc.alpha,
            operator_quasi_shift: sc.operator_quasi_shift,
            operator_shift: sc.operator_shift,
            initial: sc.initial.build()?,
            diffusion: sc.diffusion.build()?,
            n_x: sc.n_x,
            horizon: sc.horizon,
            dt: sc.dt,
            seed: sc.seed,
            lambdas: LambdaSchedule::new(sc.lambdas.initial, sc.lambdas.ratio, sc.lambdas.count)?,
            scheme,
        })
    }
}

/// Apply one `key.path=value` override to a parsed TOML tree, creating
/// intermediate tables as needed. The value is parsed as a TOML literal
/// when possible (numbers, booleans, arrays, quoted strings) and taken as
/// a bare string otherwise.
fn apply_override(root: &mut toml::Value, entry: &str) -> Result<()> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override '{entry}' is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::config(format!(
            "override '{entry}' has an empty key"
        )));
    }
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(format!(
            "override key '{key}' has an empty path segment"
        )));
    }
    let leaf = parse_override_value(raw.trim());
    let mut current = root;
    for part in &parts[..parts.len() - 1] {
        let table = current.as_table_mut().ok_or_else(|| {
            Error::config(format!(
                "override key '{key}': '{part}' is not a table in the config"
            ))
        })?;
        current = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    let table = current.as_table_mut().ok_or_else(|| {
        Error::config(format!(
            "override key '{key}' descends into a non-table value"
        ))
    })?;
    table.insert(parts[parts.len() - 1].to_string(), leaf);
    Ok(())
}

fn parse_override_value(raw: &str) -> toml::Value {
    // wrap in a dummy assignment so scalar literals parse with full TOML
    // syntax; anything unparsable is a bare string
    match toml::from_str::<toml::Value>(&format!("v = {raw}")) {
        Ok(toml::Value::Table(mut t)) => t
            .remove("v")
            .unwrap_or(toml::Value::String(raw.to_string())),
        _ => toml::Value::String(raw.to_string()),
    }
}
