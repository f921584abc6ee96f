//! Reference implementations for cross-checking the circuit models.
//!
//! Nothing here calls into the production solver, stepping or readout
//! arithmetic: the network is assembled densely over all wires and solved
//! by Gaussian elimination with partial pivoting, memristance is recomputed
//! from `w` locally, and narrow path / spread are taken straight from the
//! stored ink instead of from circuit voltages. Speed is not a goal.

use crate::error::{Error, Result};
use crate::plane::{DrivePattern, Plane};
use crate::spreading::{PulseSpec, Sample};

/// Plain-data copy of a plane's physical state.
#[derive(Clone, Debug, PartialEq)]
pub struct OraclePlane {
    pub rows: usize,
    pub cols: usize,
    pub r_on: f64,
    pub r_off: f64,
    pub d: f64,
    pub mu_v: f64,
    pub r_couple: f64,
    /// `w[row][col]`
    pub w: Vec<Vec<f64>>,
}

impl OraclePlane {
    pub fn from_plane(p: &Plane) -> Self {
        let prm = p.params();
        Self {
            rows: p.rows(),
            cols: p.cols(),
            r_on: prm.r_on,
            r_off: prm.r_off,
            d: prm.d,
            mu_v: prm.mu_v,
            r_couple: p.r_couple(),
            w: (0..p.rows())
                .map(|i| (0..p.cols()).map(|j| p.state(i, j).w()).collect())
                .collect(),
        }
    }

    fn resistance(&self, i: usize, j: usize) -> f64 {
        let f = self.w[i][j] / self.d;
        self.r_off - (self.r_off - self.r_on) * f
    }

    /// `ΔR[row][col]`
    pub fn ink(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| (self.r_off - self.r_on) * self.w[i][j] / self.d)
                    .collect()
            })
            .collect()
    }

    pub fn ink_column(&self, col: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (self.r_off - self.r_on) * self.w[i][col] / self.d)
            .collect()
    }

    /// Junction currents `[row][col]`, positive from row wire to column wire.
    pub fn solve(&self, col: usize, row: usize, v_drive: f64, coupling: bool) -> Result<Vec<Vec<f64>>> {
        let n_nodes = self.cols + self.rows;
        let mut a = vec![vec![0.0; n_nodes]; n_nodes];
        let mut rhs = vec![0.0; n_nodes];
        let add = |a: &mut Vec<Vec<f64>>, p: usize, q: usize, g: f64| {
            a[p][p] += g;
            a[q][q] += g;
            a[p][q] -= g;
            a[q][p] -= g;
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                add(&mut a, j, self.cols + i, 1.0 / self.resistance(i, j));
            }
        }
        if coupling {
            let g = 1.0 / self.r_couple;
            for j in 0..self.cols.saturating_sub(1) {
                add(&mut a, j, j + 1, g);
            }
            for i in 0..self.rows.saturating_sub(1) {
                add(&mut a, self.cols + i, self.cols + i + 1, g);
            }
        }
        for (node, volts) in [(col, v_drive), (self.cols + row, 0.0)] {
            a[node].iter_mut().for_each(|v| *v = 0.0);
            a[node][node] = 1.0;
            rhs[node] = volts;
        }
        let v = gauss_solve(a, rhs)?;
        Ok((0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| (v[self.cols + i] - v[j]) / self.resistance(i, j))
                    .collect()
            })
            .collect())
    }

    /// One ink drop integrated with `steps` explicit sub-steps.
    pub fn drop_ink(&mut self, col: usize, row: usize, pulse: &PulseSpec, steps: usize) -> Result<()> {
        let dt = pulse.t0 / steps as f64;
        let rate = self.mu_v * self.r_on / self.d;
        for _ in 0..steps {
            let cur = self.solve(col, row, pulse.v0, true)?;
            for i in 0..self.rows {
                for j in 0..self.cols {
                    let w = self.w[i][j] + rate * cur[i][j] * dt;
                    self.w[i][j] = w.max(0.0).min(self.d);
                }
            }
        }
        Ok(())
    }
}

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
            .unwrap();
        if a[p][k].abs() < 1e-300 {
            return Err(Error::Numerical(format!("singular system at pivot {k}")));
        }
        a.swap(k, p);
        b.swap(k, p);
        for r in k + 1..n {
            let f = a[r][k] / a[k][k];
            if f == 0.0 {
                continue;
            }
            for c in k..n {
                a[r][c] -= f * a[k][c];
            }
            b[r] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| a[k][c] * x[c]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok(x)
}

/// Dense re-derivation of [`Plane::solve_network`] for unrectified planes.
pub fn oracle_solve(plane: &Plane, drive: &DrivePattern) -> Result<Vec<Vec<f64>>> {
    if plane.is_rectified() {
        return Err(Error::InvalidParam(
            "the oracle solver models plain crossbars only".into(),
        ));
    }
    plane.check_cell(drive.row, drive.col)?;
    OraclePlane::from_plane(plane).solve(drive.col, drive.row, drive.v_drive, drive.coupling_on)
}

/// Smallest `b` with `Σ_{t≤b} ink ≥ ½ Σ ink`; `None` for an inkless column.
pub fn oracle_balance_row(ink: &[f64]) -> Option<usize> {
    let total: f64 = ink.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut run = 0.0;
    for (b, &v) in ink.iter().enumerate() {
        run += v;
        if run >= total / 2.0 {
            return Some(b);
        }
    }
    Some(ink.len() - 1)
}

/// Number of cells holding at least `threshold` ohms of ink.
pub fn oracle_spread(ink: &[f64], threshold: f64) -> usize {
    ink.iter().filter(|&&v| v >= threshold).count()
}

/// Settings for [`oracle_pipeline`].
#[derive(Clone, Copy, Debug)]
pub struct PipelineSettings {
    pub pulse: PulseSpec,
    /// Sub-steps per drop for the oracle integrator.
    pub steps: usize,
    pub threshold: f64,
    pub epsilon: f64,
}

/// Per-plane outputs of the oracle pipeline.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub planes: Vec<OraclePlane>,
    /// Balance row per column, `None` where empty.
    pub balance_rows: Vec<Vec<Option<usize>>>,
    pub spreads: Vec<Vec<usize>>,
}

/// Trains fresh copies of `templates` on `dataset` with the oracle
/// integrator and extracts balance rows and spreads from the stored ink.
pub fn oracle_pipeline(
    templates: &[Plane],
    dataset: &[Sample],
    settings: &PipelineSettings,
) -> Result<PipelineResult> {
    let mut planes: Vec<OraclePlane> = templates.iter().map(OraclePlane::from_plane).collect();
    let train = |k: usize, op: &mut OraclePlane| -> Result<()> {
        let tpl = &templates[k];
        for s in dataset {
            let row = tpl.row_of(s.y)?;
            let col = tpl.col_of(s.x[k])?;
            op.drop_ink(col, row, &settings.pulse, settings.steps)?;
        }
        Ok(())
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        planes
            .par_iter_mut()
            .enumerate()
            .map(|(k, op)| train(k, op))
            .collect::<Result<()>>()?;
    }
    #[cfg(not(feature = "parallel"))]
    for (k, op) in planes.iter_mut().enumerate() {
        train(k, op)?;
    }

    let balance_rows = planes
        .iter()
        .map(|op| (0..op.cols).map(|j| oracle_balance_row(&op.ink_column(j))).collect())
        .collect();
    let spreads = planes
        .iter()
        .map(|op| {
            (0..op.cols)
                .map(|j| oracle_spread(&op.ink_column(j), settings.threshold))
                .collect()
        })
        .collect();
    Ok(PipelineResult {
        planes,
        balance_rows,
        spreads,
    })
}

impl PipelineResult {
    /// Balance-row curve with empty columns interpolated linearly.
    pub fn curve(&self, plane: usize) -> Option<Vec<f64>> {
        let raw = &self.balance_rows[plane];
        let known: Vec<usize> = (0..raw.len()).filter(|&j| raw[j].is_some()).collect();
        if known.is_empty() {
            return None;
        }
        Some(
            (0..raw.len())
                .map(|j| {
                    let left = known.iter().rev().find(|&&k| k <= j);
                    let right = known.iter().find(|&&k| k >= j);
                    match (left, right) {
                        (Some(&l), Some(&r)) if l == r => raw[l].unwrap() as f64,
                        (Some(&l), Some(&r)) => {
                            let (bl, br) = (raw[l].unwrap() as f64, raw[r].unwrap() as f64);
                            bl + (br - bl) * (j - l) as f64 / (r - l) as f64
                        }
                        (Some(&l), None) => raw[l].unwrap() as f64,
                        (None, Some(&r)) => raw[r].unwrap() as f64,
                        (None, None) => unreachable!(),
                    }
                })
                .collect(),
        )
    }

    /// Inverse-spread weighted estimate at `x` using the oracle readings.
    pub fn predict(&self, templates: &[Plane], x: &[f64], epsilon: f64) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, tpl) in templates.iter().enumerate() {
            let col = tpl.col_of(x[k])?;
            let curve = self.curve(k).ok_or(Error::Untrained { plane: k })?;
            let yq = tpl.y_quant();
            let y = yq.lo() + (curve[col] + 0.5) * (yq.hi() - yq.lo()) / yq.bins() as f64;
            let wgt = 1.0 / (self.spreads[k][col] as f64 / tpl.rows() as f64 + epsilon);
            num += wgt * y;
            den += wgt;
        }
        Ok(num / den)
    }
}
