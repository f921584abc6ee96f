//! Ink dropping: turning training samples into crossbar memristance patterns.

use crate::device;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::plane::{DrivePattern, Plane};

/// Rectangular drive pulse applied to the sample's column.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSpec {
    /// Amplitude in volts; negative values deposit ink.
    pub v0: f64,
    /// Duration in seconds.
    pub t0: f64,
    /// Integration sub-steps per pulse.
    pub steps: usize,
}

impl Default for PulseSpec {
    fn default() -> Self {
        Self {
            v0: -3.0,
            t0: 10e-3,
            steps: 50,
        }
    }
}

impl PulseSpec {
    pub fn new(v0: f64, t0: f64, steps: usize) -> Result<Self> {
        let p = Self { v0, t0, steps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.v0.is_finite() || !(self.t0 > 0.0 && self.t0.is_finite()) || self.steps == 0 {
            return Err(Error::InvalidParam(format!(
                "pulse needs finite v0, t0 > 0 and steps >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// One training example: an input vector and its output.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

/// Drops one ink drop at (`row`, `col`).
///
/// The pulse is split into `steps` equal sub-intervals; in each one the
/// coupled network is solved with the current memristances and every
/// junction receives the charge `I·dt` (forward Euler).
pub fn drop_ink(plane: &mut Plane, col: usize, row: usize, pulse: &PulseSpec) -> Result<()> {
    plane.check_cell(row, col)?;
    pulse.validate()?;
    if pulse.v0 == 0.0 {
        return Ok(());
    }
    let drive = DrivePattern {
        col,
        row,
        v_drive: pulse.v0,
        coupling_on: true,
    };
    let dt = pulse.t0 / pulse.steps as f64;
    let cols = plane.cols();
    let params = *plane.params();
    for _ in 0..pulse.steps {
        let sol = plane.solve_network(&drive)?;
        for (k, s) in plane.states_mut().iter_mut().enumerate() {
            let q = sol.currents[(k / cols, k % cols)] * dt;
            *s = device::apply_charge(&params, *s, q);
        }
    }
    Ok(())
}

/// Drops `sample` on every plane; plane `i` uses input `x[i]`.
///
/// All coordinates are validated before any plane is touched, so an
/// out-of-range sample leaves the planes unchanged.
pub fn spread_sample(planes: &mut [Plane], sample: &Sample, pulse: &PulseSpec) -> Result<()> {
    spread_sample_with(Exec::default(), planes, sample, pulse)
}

pub fn spread_sample_with(
    exec: Exec,
    planes: &mut [Plane],
    sample: &Sample,
    pulse: &PulseSpec,
) -> Result<()> {
    if sample.x.len() != planes.len() {
        return Err(Error::InvalidParam(format!(
            "sample has {} inputs but there are {} planes",
            sample.x.len(),
            planes.len()
        )));
    }
    let cells = planes
        .iter()
        .zip(&sample.x)
        .enumerate()
        .map(|(i, (p, &x))| {
            let cell = p.row_of(sample.y).and_then(|r| Ok((r, p.col_of(x)?)));
            cell.map_err(|e| e.in_plane(i))
        })
        .collect::<Result<Vec<_>>>()?;
    exec.map_mut(planes, |i, p| {
        let (row, col) = cells[i];
        drop_ink(p, col, row, pulse).map_err(|e| e.in_plane(i))
    })
    .into_iter()
    .collect()
}

/// Spreads `dataset` in order. Stops at the first bad sample and reports
/// its index; samples before it remain applied.
pub fn spread_dataset(planes: &mut [Plane], dataset: &[Sample], pulse: &PulseSpec) -> Result<()> {
    spread_dataset_with(Exec::default(), planes, dataset, pulse)
}

pub fn spread_dataset_with(
    exec: Exec,
    planes: &mut [Plane],
    dataset: &[Sample],
    pulse: &PulseSpec,
) -> Result<()> {
    for (k, s) in dataset.iter().enumerate() {
        spread_sample_with(exec, planes, s, pulse).map_err(|e| e.in_sample(k))?;
    }
    Ok(())
}
