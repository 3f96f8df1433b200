use std::fs;
use std::path::{Path, PathBuf};

use henochromatic::quantum::DensityOfStates;
use henochromatic::{CarrierComb, PhysicalConstants, TransverseGrid};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub extent: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub c: f64,
    pub hbar: f64,
    /// `"unit"` or `"inverse_two_k"`.
    pub rho: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CombConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub constants: ConstantsConfig,
    pub comb: CombConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig { n: 128, extent: 16.0 },
            constants: ConstantsConfig {
                c: 1.0,
                hbar: 1.0,
                rho: "unit".into(),
            },
            comb: CombConfig {
                k_min: 1.0,
                k_max: 2.0,
                count: 3,
            },
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Sets `path` (dot separated) inside a JSON object tree.
fn set_dotted(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut node = root;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(CliError::Usage(format!("bad --set key `{path}`")));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("--set key `{path}`: `{part}` is not inside an object")))?;
        if parts.peek().is_none() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Recursively overlays `patch` onto `base`.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl RunConfig {
    /// Defaults, then the config file, then each `key=value` override.
    /// Values parse as JSON when they can and as strings otherwise.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut tree = serde_json::to_value(Self::default()).expect("config serializes");
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let file: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            merge(&mut tree, file);
        }
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{item}`")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_dotted(&mut tree, key.trim(), value)?;
        }
        let cfg: Self = serde_json::from_value(tree).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.grid.n.is_power_of_two() {
            return Err(CliError::Usage(format!("grid.n = {} is not a power of two", self.grid.n)));
        }
        if !(self.comb.k_min > 0.0) {
            return Err(CliError::Usage(format!("comb.k_min = {} must be positive", self.comb.k_min)));
        }
        if self.comb.count == 0 {
            return Err(CliError::Usage("comb.count must be at least 1".into()));
        }
        self.transverse_grid()?;
        self.carrier_comb()?;
        self.physical_constants()?;
        Ok(())
    }

    pub fn transverse_grid(&self) -> Result<TransverseGrid, CliError> {
        Ok(TransverseGrid::new(self.grid.n, self.grid.extent)?)
    }

    pub fn carrier_comb(&self) -> Result<CarrierComb, CliError> {
        Ok(CarrierComb::from_range(self.comb.k_min, self.comb.k_max, self.comb.count)?)
    }

    pub fn physical_constants(&self) -> Result<PhysicalConstants, CliError> {
        let rho: DensityOfStates = self.constants.rho.parse()?;
        Ok(PhysicalConstants::new(self.constants.c, self.constants.hbar, rho)?)
    }
}
