//! Run configuration: a sectioned TOML file, overridable key by key.

use std::path::{Path, PathBuf};

use chsav::initializers::DEFAULT_LAMBDA;
use chsav::{random_field, tanh_profile, Field, Grid, MobilitySpec, NewtonParams, PotentialSpec, SchemeParams, ShapeSpec};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// 1 or 2.
    pub dim: usize,
    pub nx: usize,
    #[serde(default = "one_cell")]
    pub ny: usize,
    /// Domain extent along x.
    #[serde(default = "unit")]
    pub lx: f64,
    #[serde(default = "unit")]
    pub ly: f64,
}

fn one_cell() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    #[serde(alias = "log")]
    Logarithmic,
    #[serde(alias = "pol")]
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub potential: PotentialKind,
    /// Absolute temperature θ, logarithmic potential only.
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "unit")]
    pub theta_c: f64,
    #[serde(default = "default_k")]
    pub mobility_k: u32,
    #[serde(default = "unit")]
    pub beta: f64,
}

fn default_theta() -> f64 {
    0.3
}

fn default_k() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialConfig {
    /// `λ tanh(d/(√2 ε))` around the union of `shapes`.
    Tanh {
        #[serde(default = "default_lambda")]
        lambda: f64,
        shapes: Vec<ShapeSpec>,
    },
    Random { mean: f64, amplitude: f64, seed: u64 },
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv_path: PathBuf,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    /// Snapshots are written only when a directory is given.
    #[serde(default)]
    pub snapshot_dir: Option<PathBuf>,
    /// Also write each snapshot as raw little-endian f64.
    #[serde(default)]
    pub binary_snapshots: bool,
}

fn default_snapshot_every() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default = "yes")]
    pub per_sweep_energy: bool,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { per_sweep_energy: true }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub solver: NewtonParams,
    pub initial: InitialConfig,
    pub time: TimeConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let config: Self = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    /// Applies `key=value` overrides. Keys are dotted paths (`scheme.theta`)
    /// or bare names that occur in exactly one section (`theta`). Values are
    /// TOML literals; anything that does not parse is taken as a string.
    /// `none` unsets an optional key such as `output.snapshot_dir`.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, RunError> {
        let mut tree = Table::try_from(self).map_err(|e| RunError::Config(e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| RunError::Config(format!("override `{item}` is not key=value")))?;
            let path = resolve_key(&tree, key.trim())?;
            if raw.trim() == "none" && is_optional(&path) {
                if let Some(section) = tree.get_mut(&path[0]).and_then(Value::as_table_mut) {
                    section.remove(&path[1]);
                }
                continue;
            }
            set_path(&mut tree, &path, parse_literal(raw.trim()))?;
        }
        let config: Self = tree.try_into().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if !(self.time.t_end > 0.0 && self.time.t_end.is_finite()) {
            return bad(format!("time.t_end must be positive, got {}", self.time.t_end));
        }
        if self.output.snapshot_every < 1 {
            return bad("output.snapshot_every must be >= 1".into());
        }
        if !matches!(self.grid.dim, 1 | 2) {
            return bad(format!("grid.dim must be 1 or 2, got {}", self.grid.dim));
        }
        if let InitialConfig::Tanh { shapes, .. } = &self.initial {
            if shapes.is_empty() {
                return bad("initial.shapes must not be empty".into());
            }
        }
        self.grid()?;
        self.scheme_params()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, RunError> {
        let g = &self.grid;
        let grid = if g.dim == 1 {
            Grid::unit_1d(g.nx, g.lx)
        } else {
            Grid::unit_2d(g.nx, g.ny, g.lx, g.ly)
        };
        grid.map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn scheme_params(&self) -> Result<SchemeParams, RunError> {
        let s = &self.scheme;
        let potential = match s.potential {
            PotentialKind::Logarithmic => PotentialSpec::logarithmic(s.theta, s.theta_c),
            PotentialKind::Polynomial => Ok(PotentialSpec::Polynomial),
        };
        let build = || -> chsav::Result<SchemeParams> {
            let mut p = SchemeParams::new(s.epsilon, s.dt, potential?)?
                .with_mobility(MobilitySpec::new(s.mobility_k, s.beta)?)
                .with_newton(self.solver);
            p.per_sweep_energy = self.certify.per_sweep_energy;
            p.validate()?;
            Ok(p)
        };
        build().map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn initial_field(&self) -> Result<Field, RunError> {
        let grid = self.grid()?;
        let field = match &self.initial {
            InitialConfig::Tanh { lambda, shapes } => {
                let shape = match shapes.as_slice() {
                    [one] => one.clone(),
                    many => ShapeSpec::Union { shapes: many.to_vec() },
                };
                tanh_profile(grid, &shape, self.scheme.epsilon, *lambda)
            }
            InitialConfig::Random { mean, amplitude, seed } => random_field(grid, *mean, *amplitude, *seed),
        };
        field.map_err(|e| RunError::Config(e.to_string()))
    }

    /// Number of steps of size Δt needed to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.time.t_end / self.scheme.dt - 1e-9).ceil().max(1.0) as usize
    }
}

fn parse_literal(raw: &str) -> Value {
    match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Keys that are omitted from the serialized tree when unset.
const OPTIONAL_KEYS: [(&str, &str); 1] = [("output", "snapshot_dir")];

fn is_optional(path: &[String]) -> bool {
    matches!(path, [s, k] if OPTIONAL_KEYS.iter().any(|(os, ok)| os == s && ok == k))
}

fn resolve_key(tree: &Table, key: &str) -> Result<Vec<String>, RunError> {
    if key.contains('.') {
        return Ok(key.split('.').map(str::to_owned).collect());
    }
    let hits: Vec<&String> = tree
        .iter()
        .filter_map(|(section, v)| v.as_table().filter(|t| t.contains_key(key)).map(|_| section))
        .collect();
    match hits.as_slice() {
        [section] => Ok(vec![(*section).clone(), key.to_owned()]),
        [] => OPTIONAL_KEYS
            .iter()
            .find(|(_, k)| *k == key)
            .map(|(section, k)| vec![(*section).to_owned(), (*k).to_owned()])
            .ok_or_else(|| RunError::Config(format!("unknown key `{key}`"))),
        _ => Err(RunError::Config(format!(
            "key `{key}` is ambiguous; qualify it with one of {hits:?}"
        ))),
    }
}

fn set_path(tree: &mut Table, path: &[String], value: Value) -> Result<(), RunError> {
    let (last, parents) = path.split_last().expect("non-empty key path");
    let mut node = tree;
    for p in parents {
        node = node
            .entry(p.clone())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| RunError::Config(format!("`{p}` is not a section")))?;
    }
    node.insert(last.clone(), value);
    Ok(())
}
