//! End-to-end runs: data generation, training, artifact emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alm::{self, ErrorStats, Model};
use crate::config::{DataSource, ExperimentConfig};
use crate::dataset;
use crate::error::{Error, Result};
use crate::persist;
use crate::plane::{Plane, Quantizer};
use crate::readout;
use crate::spreading::{self, Sample};

/// Domain of the builtin target on each axis.
pub const EQ16_DOMAIN: (f64, f64) = (1.0, 10.0);

fn sinc(x: f64) -> f64 {
    x.sin() / x
}

/// `√(2·(sin x₁/x₁)² + 3·(sin x₂/x₂)²)`
pub fn eq16(x1: f64, x2: f64) -> f64 {
    (2.0 * sinc(x1).powi(2) + 3.0 * sinc(x2).powi(2)).sqrt()
}

/// `count` samples drawn uniformly from the builtin target's domain.
pub fn generate_eq16(count: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = EQ16_DOMAIN;
    (0..count)
        .map(|_| {
            let x1 = rng.gen_range(lo..=hi);
            let x2 = rng.gen_range(lo..=hi);
            Sample::new(vec![x1, x2], eq16(x1, x2))
        })
        .collect()
}

/// Training data plus a fresh model whose axes cover it.
pub struct Prepared {
    pub model: Model,
    pub samples: Vec<Sample>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let (samples, n_inputs, domain) = match &cfg.data {
        DataSource::Eq16 => (
            generate_eq16(cfg.samples, cfg.require_seed()?),
            2,
            Some(EQ16_DOMAIN),
        ),
        DataSource::Csv(path) => {
            let d = dataset::read_csv(path)?;
            (d.samples, d.n_inputs.unwrap_or(cfg.n_inputs), None)
        }
    };
    if n_inputs == 0 {
        return Err(Error::InvalidParam("at least one input is required".into()));
    }

    let x_quants = (0..n_inputs)
        .map(|k| {
            let (lo, hi) = match (cfg.x_range, domain) {
                (Some(r), _) => r,
                (None, Some(r)) => r,
                (None, None) => data_range(samples.iter().map(|s| s.x[k]))
                    .map_or((0.0, 1.0), |(lo, hi)| cfg.padded(lo, hi)),
            };
            Quantizer::new(lo, hi, cfg.cols)
        })
        .collect::<Result<Vec<_>>>()?;
    let (y_lo, y_hi) = match cfg.y_range {
        Some(r) => r,
        None => data_range(samples.iter().map(|s| s.y)).map_or((0.0, 1.0), |(lo, hi)| cfg.padded(lo, hi)),
    };
    let y_quant = Quantizer::new(y_lo, y_hi, cfg.rows)?;
    Ok(Prepared {
        model: cfg.fresh_model(&x_quants, y_quant)?,
        samples,
    })
}

fn data_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

#[derive(Clone, Debug)]
pub struct SpreadReport {
    pub samples: usize,
    pub max_delta_r_ratio: f64,
    pub regime_ok: bool,
}

/// Trains on the configured data and writes the model to `state_out`.
pub fn run_spread(cfg: &ExperimentConfig, state_out: &Path) -> Result<(Model, SpreadReport)> {
    let Prepared { mut model, samples } = prepare(cfg)?;
    model.train_with(cfg.exec, &samples)?;
    persist::save(&model, state_out)?;
    let ratio = model.max_delta_r_ratio();
    let report = SpreadReport {
        samples: samples.len(),
        max_delta_r_ratio: ratio,
        regime_ok: ratio <= cfg.regime_limit,
    };
    Ok((model, report))
}

/// Ink left by one drop at the centre cell of a fresh plane.
pub fn single_drop_footprint(template: &Plane, pulse: &spreading::PulseSpec) -> Result<(DMatrix<f64>, (usize, usize))> {
    let mut fresh = Plane::new(
        *template.params(),
        template.r_couple(),
        *template.x_quant(),
        *template.y_quant(),
    )?
    .with_rectification(template.is_rectified());
    let at = (fresh.rows() / 2, fresh.cols() / 2);
    spreading::drop_ink(&mut fresh, at.1, at.0, pulse)?;
    Ok((fresh.total_delta_r(), at))
}

/// Counts cells whose ink exceeds that of their neighbour one step closer
/// to `center` (in row or in column) by more than `tol`.
pub fn monotone_decay_violations(m: &DMatrix<f64>, center: (usize, usize), tol: f64) -> usize {
    let toward = |k: usize, c: usize| if k > c { k - 1 } else { k + 1 };
    let mut bad = 0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != center.0 && m[(i, j)] > m[(toward(i, center.0), j)] + tol {
                bad += 1;
            }
            if j != center.1 && m[(i, j)] > m[(i, toward(j, center.1))] + tol {
                bad += 1;
            }
        }
    }
    bad
}

pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let vals = line
            .split(',')
            .enumerate()
            .map(|(k, f)| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    column: k + 1,
                    msg: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.first().is_some_and(|r| r.len() != vals.len()) {
            return Err(Error::Parse {
                line: idx + 1,
                column: 1,
                msg: "ragged matrix".into(),
            });
        }
        rows.push(vals);
    }
    let (r, c) = (rows.len(), rows.first().map_or(0, Vec::len));
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Grid of `g` evenly spaced points per axis over each plane's x range.
pub fn evaluation_grid(model: &Model, g: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = model
        .planes()
        .iter()
        .map(|p| {
            let q = p.x_quant();
            (0..g)
                .map(|k| {
                    if g == 1 {
                        (q.lo() + q.hi()) / 2.0
                    } else {
                        q.lo() + (q.hi() - q.lo()) * k as f64 / (g - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

#[derive(Clone, Debug)]
pub struct ModelReport {
    pub model: Model,
    pub samples: Vec<Sample>,
    pub stats: ErrorStats,
    pub max_delta_r_ratio: f64,
    pub regime_ok: bool,
    pub train_seconds: f64,
    pub total_seconds: f64,
}

/// Full reference run on the builtin target, writing every artifact into
/// `out_dir`:
///
/// * `fig7.csv` single-drop ink footprint (row 0 = lowest y)
/// * `fig10_<k>.csv` trained ink per plane
/// * `fig11_<k>.csv` narrow path per column
/// * `fig12_<k>.csv` spread per column
/// * `fig13.csv` inferred surface on the evaluation grid
/// * `metrics.txt` deterministic summary, `timing.txt` wall-clock times
/// * `model.idsx` trained state
pub fn run_model(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ModelReport> {
    if cfg.data != DataSource::Eq16 {
        return Err(Error::InvalidParam(
            "the model run needs a builtin target (data = eq16)".into(),
        ));
    }
    let start = Instant::now();
    fs::create_dir_all(out_dir)?;
    let Prepared { mut model, samples } = prepare(cfg)?;

    let (footprint, _) = single_drop_footprint(&model.planes()[0], &cfg.pulse)?;
    fs::write(out_dir.join("fig7.csv"), matrix_csv(&footprint))?;

    let t_train = Instant::now();
    model.train_with(cfg.exec, &samples)?;
    let train_seconds = t_train.elapsed().as_secs_f64();
    persist::save(&model, &out_dir.join("model.idsx"))?;

    for (k, plane) in model.planes().iter().enumerate() {
        let tag = k + 1;
        fs::write(out_dir.join(format!("fig10_{tag}.csv")), matrix_csv(&plane.total_delta_r()))?;
        let readings = cfg.exec.map(plane.cols(), |j| readout::read_plane(plane, j, &model.readout));
        let readings = readings.into_iter().collect::<Result<Vec<_>>>()?;
        let curve = alm::fill_gaps(&readings.iter().map(|r| r.narrow_path_row).collect::<Vec<_>>());
        let mut np = String::from("col,x,narrow_path_row,row_position,y\n");
        let mut sp = String::from("col,x,spread,i_spread\n");
        for (j, r) in readings.iter().enumerate() {
            let x = plane.x_quant().midpoint(j as f64);
            let raw = r.narrow_path_row.map_or(String::new(), |b| b.to_string());
            match &curve {
                Some(c) => writeln!(np, "{j},{x},{raw},{},{}", c[j], plane.y_quant().midpoint(c[j])),
                None => writeln!(np, "{j},{x},{raw},,"),
            }
            .unwrap();
            writeln!(sp, "{j},{x},{},{:e}", r.spread.count, r.spread.current).unwrap();
        }
        fs::write(out_dir.join(format!("fig11_{tag}.csv")), np)?;
        fs::write(out_dir.join(format!("fig12_{tag}.csv")), sp)?;
    }

    let grid = evaluation_grid(&model, cfg.eval_grid);
    let preds = cfg
        .exec
        .map(grid.len(), |k| alm::infer(&model, &grid[k]).map(|b| b.y_hat))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut surface = String::from("x1,x2,y_true,y_hat\n");
    let mut errs = Vec::with_capacity(grid.len());
    for (x, y_hat) in grid.iter().zip(&preds) {
        let y = eq16(x[0], x[1]);
        errs.push(y_hat - y);
        writeln!(surface, "{},{},{},{}", x[0], x[1], y, y_hat).unwrap();
    }
    fs::write(out_dir.join("fig13.csv"), surface)?;
    let stats = alm::error_stats(&errs);

    let ratio = model.max_delta_r_ratio();
    let regime_ok = ratio <= cfg.regime_limit;
    let metrics = format!(
        "seed={}\nsamples={}\nrows={}\ncols={}\nrmse={}\nmax_abs_err={}\nmax_delta_r_ratio={}\nregime_ok={}\n",
        cfg.require_seed()?,
        samples.len(),
        cfg.rows,
        cfg.cols,
        stats.rmse,
        stats.max_abs_err,
        ratio,
        regime_ok
    );
    fs::write(out_dir.join("metrics.txt"), metrics)?;
    let total_seconds = start.elapsed().as_secs_f64();
    fs::write(
        out_dir.join("timing.txt"),
        format!("train_seconds={train_seconds}\nruntime_seconds={total_seconds}\n"),
    )?;
    Ok(ModelReport {
        model,
        samples,
        stats,
        max_delta_r_ratio: ratio,
        regime_ok,
        train_seconds,
        total_seconds,
    })
}
