//! `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are an error.
//! Every key is optional except `seed`, which must come either from the
//! file or from the command line before a random dataset is generated.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::alm::Model;
use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::plane::{Plane, Quantizer};
use crate::readout::ReadoutConfig;
use crate::spreading::PulseSpec;

/// Where training data comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    /// `y = √(2·sinc²x₁ + 3·sinc²x₂)` sampled uniformly on `[1, 10]²`.
    Eq16,
    Csv(PathBuf),
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq16" => Ok(DataSource::Eq16),
            "" => Err(Error::InvalidParam("empty data source".into())),
            path => Ok(DataSource::Csv(PathBuf::from(path))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub data: DataSource,
    pub samples: usize,
    /// Inputs for an empty CSV dataset, which carries no header to infer it from.
    pub n_inputs: usize,
    pub rows: usize,
    pub cols: usize,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    /// Relative padding applied to data-derived ranges.
    pub range_pad: f64,
    pub r_on: f64,
    pub r_off: f64,
    pub d: f64,
    /// Explicit mobility; when absent it is calibrated from `peak_delta_r`.
    pub mu_v: Option<f64>,
    /// Target ink at the drop cell of a single drop on a fresh plane (Ω).
    pub peak_delta_r: f64,
    pub r_couple: f64,
    pub rectify: bool,
    pub pulse: PulseSpec,
    pub readout: ReadoutConfig,
    pub epsilon_weight: f64,
    /// Evaluation points per input axis.
    pub eval_grid: usize,
    /// Ceiling on max ΔR / r_off after training.
    pub regime_limit: f64,
    pub exec: Exec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let dev = DeviceParams::default();
        Self {
            seed: None,
            data: DataSource::Eq16,
            samples: 800,
            n_inputs: 2,
            rows: 90,
            cols: 100,
            x_range: None,
            y_range: None,
            range_pad: 0.05,
            r_on: dev.r_on,
            r_off: dev.r_off,
            d: dev.d,
            mu_v: None,
            peak_delta_r: 100.0,
            r_couple: 1000.0,
            rectify: false,
            pulse: PulseSpec::default(),
            readout: ReadoutConfig::default(),
            epsilon_weight: 0.01,
            eval_grid: 30,
            regime_limit: 0.05,
            exec: Exec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    msg: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let column = raw.find(value).map_or(1, |c| c + 1);
            if seen.insert(key.to_string(), line_no).is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            cfg.set(key, value).map_err(|msg| Error::Parse {
                line: line_no,
                column,
                msg,
            })?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse()
                .map_err(|_| format!("`{v}` is not a valid value for `{key}`"))
        }
        match key {
            "seed" => self.seed = Some(num(key, value)?),
            "data" | "target" => self.data = value.parse().map_err(|e: Error| e.to_string())?,
            "samples" => self.samples = num(key, value)?,
            "n_inputs" => self.n_inputs = num(key, value)?,
            "rows" => self.rows = num(key, value)?,
            "cols" => self.cols = num(key, value)?,
            "x_lo" => self.x_range = Some((num(key, value)?, self.x_range.map_or(f64::NAN, |r| r.1))),
            "x_hi" => self.x_range = Some((self.x_range.map_or(f64::NAN, |r| r.0), num(key, value)?)),
            "y_lo" => self.y_range = Some((num(key, value)?, self.y_range.map_or(f64::NAN, |r| r.1))),
            "y_hi" => self.y_range = Some((self.y_range.map_or(f64::NAN, |r| r.0), num(key, value)?)),
            "range_pad" => self.range_pad = num(key, value)?,
            "r_on" => self.r_on = num(key, value)?,
            "r_off" => self.r_off = num(key, value)?,
            "d" => self.d = num(key, value)?,
            "mu_v" => self.mu_v = Some(num(key, value)?),
            "peak_delta_r" => self.peak_delta_r = num(key, value)?,
            "r_couple" => self.r_couple = num(key, value)?,
            "rectify" => self.rectify = num(key, value)?,
            "v0" => self.pulse.v0 = num(key, value)?,
            "t0" => self.pulse.t0 = num(key, value)?,
            "steps" => self.pulse.steps = num(key, value)?,
            "v_in" => self.readout.v_in = num(key, value)?,
            "v_dd" => self.readout.v_dd = num(key, value)?,
            "r_res" => self.readout.r_res = num(key, value)?,
            "r_x" => self.readout.r_x = num(key, value)?,
            "delta" => self.readout.delta_threshold = num(key, value)?,
            "epsilon_weight" => self.epsilon_weight = num(key, value)?,
            "eval_grid" => self.eval_grid = num(key, value)?,
            "regime_limit" => self.regime_limit = num(key, value)?,
            "exec" => {
                self.exec = match value {
                    "parallel" => Exec::Parallel,
                    "sequential" => Exec::Sequential,
                    other => return Err(format!("exec must be parallel or sequential, got `{other}`")),
                }
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::InvalidParam("a random seed is required (config `seed` or --seed)".into()))
    }

    /// Device constants, with mobility calibrated to `peak_delta_r` unless
    /// it was given explicitly.
    pub fn device_params(&self) -> Result<DeviceParams> {
        let base = DeviceParams::new(self.r_on, self.r_off, self.d, self.mu_v.unwrap_or(1e-14))?;
        match self.mu_v {
            Some(_) => Ok(base),
            None => base.calibrated(self.pulse.v0, self.pulse.t0, self.peak_delta_r),
        }
    }

    /// Fresh model with `n_inputs` planes over the given axes.
    pub fn fresh_model(&self, x_quants: &[Quantizer], y_quant: Quantizer) -> Result<Model> {
        let params = self.device_params()?;
        let planes = x_quants
            .iter()
            .map(|xq| Ok(Plane::new(params, self.r_couple, *xq, y_quant)?.with_rectification(self.rectify)))
            .collect::<Result<Vec<_>>>()?;
        Model::new(planes, self.readout, self.pulse, self.epsilon_weight)
    }

    /// Applies `pad` on both sides; a degenerate range is widened to ±0.5.
    pub fn padded(&self, lo: f64, hi: f64) -> (f64, f64) {
        let span = hi - lo;
        if span > 0.0 {
            (lo - self.range_pad * span, hi + self.range_pad * span)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    }
}
