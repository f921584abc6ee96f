//! Inference over a set of trained planes.
//!
//! Each plane contributes the output value on its narrow path at the query
//! column, weighted by how narrow the ink is there: a tight spread marks an
//! input that largely determines the output.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::plane::{Plane, Quantizer};
use crate::readout::{self, ReadoutConfig};
use crate::spreading::{self, PulseSpec, Sample};

/// Maps a plane's spread reading to its inference weight.
pub trait Combiner: Sync {
    fn weight(&self, spread: usize, rows: usize) -> f64;
}

/// `1 / (M/m + ε)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseSpread {
    pub epsilon: f64,
}

impl Combiner for InverseSpread {
    fn weight(&self, spread: usize, rows: usize) -> f64 {
        1.0 / (spread as f64 / rows as f64 + self.epsilon)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    planes: Vec<Plane>,
    pub readout: ReadoutConfig,
    pub pulse: PulseSpec,
    pub epsilon_weight: f64,
}

impl Model {
    pub fn new(
        planes: Vec<Plane>,
        readout: ReadoutConfig,
        pulse: PulseSpec,
        epsilon_weight: f64,
    ) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidParam("a model needs at least one plane".into()))?;
        for (i, p) in planes.iter().enumerate() {
            if p.rows() != first.rows() || p.y_quant() != first.y_quant() {
                return Err(Error::InvalidParam(format!(
                    "plane {i} does not share the output axis of plane 0"
                )));
            }
            readout.validate(p.params().r_off).map_err(|e| e.in_plane(i))?;
        }
        pulse.validate()?;
        if !(epsilon_weight > 0.0 && epsilon_weight.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "epsilon_weight must be positive, got {epsilon_weight}"
            )));
        }
        Ok(Self {
            planes,
            readout,
            pulse,
            epsilon_weight,
        })
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn n_inputs(&self) -> usize {
        self.planes.len()
    }

    pub fn y_quant(&self) -> &Quantizer {
        self.planes[0].y_quant()
    }

    /// Spreads `dataset` into the model's planes with its own pulse.
    pub fn train(&mut self, dataset: &[Sample]) -> Result<()> {
        self.train_with(Exec::default(), dataset)
    }

    pub fn train_with(&mut self, exec: Exec, dataset: &[Sample]) -> Result<()> {
        spreading::spread_dataset_with(exec, &mut self.planes, dataset, &self.pulse)
    }

    /// Largest stored ink relative to `r_off` over all planes.
    pub fn max_delta_r_ratio(&self) -> f64 {
        self.planes
            .iter()
            .map(|p| p.max_delta_r() / p.params().r_off)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaneInference {
    pub col: usize,
    /// Narrow-path row read directly from the circuit.
    pub narrow_path_row: Option<usize>,
    /// Row position used for inference, interpolated when the column is empty.
    pub row_position: f64,
    pub spread: usize,
    pub y: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InferenceBreakdown {
    pub planes: Vec<PlaneInference>,
    pub y_hat: f64,
}

/// Narrow-path row of every column. Empty columns are filled by linear
/// interpolation between the nearest populated neighbours and held flat
/// beyond the outermost ones.
pub fn narrow_path_curve(plane: &Plane, cfg: &ReadoutConfig) -> Result<Vec<f64>> {
    narrow_path_curve_with(Exec::default(), plane, cfg)
}

pub fn narrow_path_curve_with(exec: Exec, plane: &Plane, cfg: &ReadoutConfig) -> Result<Vec<f64>> {
    let raw = exec
        .map(plane.cols(), |j| {
            readout::read_plane(plane, j, cfg).map(|r| r.narrow_path_row)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    fill_gaps(&raw).ok_or(Error::Untrained { plane: 0 })
}

/// Linear interpolation over `None` entries with flat extrapolation.
/// Returns `None` when no entry is defined.
pub fn fill_gaps(raw: &[Option<usize>]) -> Option<Vec<f64>> {
    let known: Vec<(usize, f64)> = raw
        .iter()
        .enumerate()
        .filter_map(|(j, b)| b.map(|b| (j, b as f64)))
        .collect();
    let (&first, &last) = (known.first()?, known.last()?);
    let mut out = Vec::with_capacity(raw.len());
    let mut seg = 0;
    for j in 0..raw.len() {
        let v = if j <= first.0 {
            first.1
        } else if j >= last.0 {
            last.1
        } else {
            while known[seg + 1].0 < j {
                seg += 1;
            }
            let (j0, b0) = known[seg];
            let (j1, b1) = known[seg + 1];
            b0 + (b1 - b0) * (j - j0) as f64 / (j1 - j0) as f64
        };
        out.push(v);
    }
    Some(out)
}

/// Estimates the output at `x` with the model's inverse-spread weighting.
pub fn infer(model: &Model, x: &[f64]) -> Result<InferenceBreakdown> {
    infer_with(
        model,
        x,
        &InverseSpread {
            epsilon: model.epsilon_weight,
        },
    )
}

pub fn infer_with(model: &Model, x: &[f64], combiner: &dyn Combiner) -> Result<InferenceBreakdown> {
    if x.len() != model.n_inputs() {
        return Err(Error::InvalidParam(format!(
            "query has {} inputs, model has {}",
            x.len(),
            model.n_inputs()
        )));
    }
    let cols = model
        .planes
        .iter()
        .zip(x)
        .enumerate()
        .map(|(i, (p, &xi))| p.col_of(xi).map_err(|e| e.in_plane(i)))
        .collect::<Result<Vec<_>>>()?;

    let mut planes = Vec::with_capacity(model.n_inputs());
    for (i, (plane, &col)) in model.planes.iter().zip(&cols).enumerate() {
        let r = readout::read_plane(plane, col, &model.readout).map_err(|e| e.in_plane(i))?;
        let row_position = match r.narrow_path_row {
            Some(b) => b as f64,
            None => {
                let curve = narrow_path_curve_with(Exec::Sequential, plane, &model.readout)
                    .map_err(|e| match e {
                        Error::Untrained { .. } => Error::Untrained { plane: i },
                        other => other.in_plane(i),
                    })?;
                curve[col]
            }
        };
        planes.push(PlaneInference {
            col,
            narrow_path_row: r.narrow_path_row,
            row_position,
            spread: r.spread.count,
            y: plane.y_quant().midpoint(row_position),
            weight: combiner.weight(r.spread.count, plane.rows()),
        });
    }
    let total: f64 = planes.iter().map(|p| p.weight).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numerical(format!("degenerate weight sum {total}")));
    }
    let y_hat = planes.iter().map(|p| p.weight * p.y).sum::<f64>() / total;
    Ok(InferenceBreakdown { planes, y_hat })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorStats {
    pub rmse: f64,
    pub max_abs_err: f64,
}

/// RMSE and worst absolute error of `infer` over `grid` of `(x, y_true)`.
pub fn evaluate(model: &Model, grid: &[(Vec<f64>, f64)]) -> Result<ErrorStats> {
    evaluate_with(Exec::default(), model, grid)
}

pub fn evaluate_with(exec: Exec, model: &Model, grid: &[(Vec<f64>, f64)]) -> Result<ErrorStats> {
    let errs = exec
        .map(grid.len(), |k| {
            let (x, y) = &grid[k];
            infer(model, x).map(|b| b.y_hat - y)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(error_stats(&errs))
}

pub fn error_stats(errs: &[f64]) -> ErrorStats {
    if errs.is_empty() {
        return ErrorStats {
            rmse: 0.0,
            max_abs_err: 0.0,
        };
    }
    let mse = errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64;
    ErrorStats {
        rmse: mse.sqrt(),
        max_abs_err: errs.iter().fold(0.0, |m, e| m.max(e.abs())),
    }
}
