//! Behavioural model of the narrow-path / spread extraction circuit.
//!
//! Reading a column applies a small voltage to that column wire while the
//! connector blocks hold every row at virtual ground, so each connector
//! sees exactly one memristor and no network solve is needed. Nothing in
//! this module mutates a plane.

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Circuit constants for the readout path. All components are ideal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutConfig {
    /// Read voltage applied to the selected column (V).
    pub v_in: f64,
    /// Comparator rail (V).
    pub v_dd: f64,
    /// Resistive-crossbar junction resistance (Ω).
    pub r_res: f64,
    /// Sense resistor of the thresholding connector (Ω).
    pub r_x: f64,
    /// Ink threshold for counting a cell in the spread (Ω).
    pub delta_threshold: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            v_in: 0.01,
            v_dd: 5.0,
            r_res: 10_000.0,
            r_x: 1_000.0,
            delta_threshold: 20.0,
        }
    }
}

impl ReadoutConfig {
    pub fn validate(&self, r_off: f64) -> Result<()> {
        let positive = [self.v_in, self.v_dd, self.r_res, self.r_x]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive {
            return Err(Error::InvalidParam(format!(
                "readout voltages and resistances must be positive: {self:?}"
            )));
        }
        if !(self.delta_threshold > 0.0 && self.delta_threshold < r_off) {
            return Err(Error::InvalidParam(format!(
                "spread threshold {} must lie in (0, r_off={r_off})",
                self.delta_threshold
            )));
        }
        Ok(())
    }

    /// Comparator reference `−v_in·r_x / (r_off − Δ + r_x)`.
    pub fn v_threshold(&self, r_off: f64) -> f64 {
        -self.v_in * self.r_x / (r_off - self.delta_threshold + self.r_x)
    }

    /// `g_n` below this level means the column holds no ink.
    pub fn empty_level(&self) -> f64 {
        self.v_in * 1e-6
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpreadReading {
    /// Number of connectors driven to `−v_dd`.
    pub count: usize,
    /// Current out of the last resistive-crossbar wire (A).
    pub current: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutResult {
    pub g: Vec<f64>,
    pub narrow_path_row: Option<usize>,
    pub spread: SpreadReading,
}

/// Current-to-voltage connector outputs `z_i = −(r_off / R_ij)·v_in`.
pub fn connector_voltages(plane: &Plane, col: usize, cfg: &ReadoutConfig) -> Result<Vec<f64>> {
    plane.check_cell(0, col)?;
    let r_off = plane.params().r_off;
    Ok((0..plane.rows())
        .map(|i| -(r_off / plane.memristance(i, col)) * cfg.v_in)
        .collect())
}

/// Summing-amplifier outputs: running sums of `−(z_t + v_in)`, the last one
/// halved by its `R_res/2` feedback resistor.
pub fn summing_profile(z: &[f64], cfg: &ReadoutConfig) -> Vec<f64> {
    let n = z.len();
    let mut g = Vec::with_capacity(n);
    // Σ z_t + i·v_in accumulated term by term so an inkless row adds exactly 0.
    let mut acc = 0.0;
    for (i, &zt) in z.iter().enumerate() {
        acc += zt + cfg.v_in;
        if i + 1 < n {
            g.push(-acc);
        } else {
            g.push(-0.5 * acc);
        }
    }
    g
}

/// Small-signal profile `(v_in / r_off)·Σ ΔR`, half-sum at the top; valid
/// when every `ΔR ≪ r_off`.
pub fn linearized_profile(delta_r: &[f64], r_off: f64, cfg: &ReadoutConfig) -> Vec<f64> {
    let n = delta_r.len();
    let scale = cfg.v_in / r_off;
    let mut acc = 0.0;
    delta_r
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            acc += d;
            if i + 1 < n {
                scale * acc
            } else {
                0.5 * scale * acc
            }
        })
        .collect()
}

/// Priority scan over the comparators `g_i ≥ g_n`: the first row that
/// reaches the top half-sum. `None` for an empty column.
pub fn narrow_path_row(g: &[f64], cfg: &ReadoutConfig) -> Option<usize> {
    let &g_n = g.last()?;
    if g_n < cfg.empty_level() {
        return None;
    }
    g.iter().position(|&gi| gi >= g_n)
}

/// Thresholding pass over column `col`.
pub fn spread_count(plane: &Plane, col: usize, cfg: &ReadoutConfig) -> Result<SpreadReading> {
    plane.check_cell(0, col)?;
    let v_th = cfg.v_threshold(plane.params().r_off);
    let count = (0..plane.rows())
        .filter(|&i| {
            let v_plus = -cfg.v_in * cfg.r_x / (plane.memristance(i, col) + cfg.r_x);
            v_plus <= v_th
        })
        .count();
    Ok(SpreadReading {
        count,
        current: -(count as f64) * cfg.v_dd / cfg.r_res,
    })
}

/// Narrow path and spread of one column.
pub fn read_plane(plane: &Plane, col: usize, cfg: &ReadoutConfig) -> Result<ReadoutResult> {
    let z = connector_voltages(plane, col, cfg)?;
    let g = summing_profile(&z, cfg);
    let narrow_path_row = narrow_path_row(&g, cfg);
    let spread = spread_count(plane, col, cfg)?;
    Ok(ReadoutResult {
        g,
        narrow_path_row,
        spread,
    })
}
