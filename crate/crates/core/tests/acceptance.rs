//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! to stderr (uncaptured) and the test fails if any criterion fails.
//!
//! Criteria run one after another inside a single test so wall-clock
//! limits are not distorted by other tests sharing the CPU.

use std::io::Write;
use std::time::Instant;

use ids_core::alm::{self, narrow_path_curve};
use ids_core::config::ExperimentConfig;
use ids_core::device::DeviceState;
use ids_core::experiment::{self, eq16, evaluation_grid, monotone_decay_violations};
use ids_core::oracle::{
    oracle_balance_row, oracle_pipeline, oracle_solve, oracle_spread, PipelineSettings,
};
use ids_core::readout::{read_plane, spread_count};
use ids_core::spreading::drop_ink;
use ids_core::{
    persist, DeviceParams, DrivePattern, Model, Plane, PulseSpec, Quantizer, ReadoutConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and limits.
const NARROW_AGREEMENT: f64 = 0.999;
const TIE_BAND: f64 = 0.05;
const NARROW_COLUMNS: usize = 3000;
const NARROW_SECONDS: f64 = 10.0;
const SPREAD_COLUMNS: usize = 10_000;
const SPREAD_SECONDS: f64 = 5.0;
const SOLVER_PLANES: usize = 200;
const SOLVER_REL: f64 = 1e-8;
const SCALING_REL: f64 = 1e-12;
const DECAY_TOL_REL: f64 = 1e-9;
const FOOTPRINT_SECONDS: f64 = 60.0;
const REGIME_LIMIT: f64 = 0.05;
const REPEAT_REL: f64 = 0.05;
const RMSE_FACTOR: f64 = 1.2;
const CURVE_CORRELATION: f64 = 0.8;
const MODEL_SECONDS: f64 = 300.0;
const ORACLE_STEPS: usize = 20;
const PURITY_READS: usize = 1000;
const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, secs: f64, o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "[{tag}] {id}. {name}: {} ({secs:.2} s)",
        o.detail
    );
}

fn calibrated() -> DeviceParams {
    DeviceParams::default().calibrated(-3.0, 10e-3, 100.0).unwrap()
}

fn blank(params: DeviceParams, rows: usize, cols: usize) -> Plane {
    Plane::new(
        params,
        1000.0,
        Quantizer::new(0.0, 1.0, cols).unwrap(),
        Quantizer::new(0.0, 1.0, rows).unwrap(),
    )
    .unwrap()
}

/// Columns of small planes trained with uniform random drops, up to the
/// ink density of the reference run (800 drops over 9000 cells).
fn narrow_path() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = calibrated();
    let cfg = ReadoutConfig::default();
    let pulse = PulseSpec::default();
    let (mut total, mut agree, mut outside_band, mut skipped) = (0usize, 0usize, 0usize, 0usize);
    while total < NARROW_COLUMNS {
        let (m, c) = (rng.gen_range(8..=30), rng.gen_range(8..=30));
        let mut p = blank(params, m, c);
        let most = ((m * c) as f64 * 800.0 / 9000.0).ceil() as usize;
        for _ in 0..rng.gen_range(1..=most) {
            let (j, i) = (rng.gen_range(0..c), rng.gen_range(0..m));
            drop_ink(&mut p, j, i, &pulse).unwrap();
        }
        if p.max_delta_r() / params.r_off > REGIME_LIMIT {
            skipped += 1;
            continue;
        }
        for j in 0..c {
            let r = read_plane(&p, j, &cfg).unwrap();
            let want = oracle_balance_row(&p.delta_r_column(j));
            if want.is_none() && r.narrow_path_row.is_none() {
                continue;
            }
            total += 1;
            match (r.narrow_path_row, want) {
                (a, b) if a == b => agree += 1,
                (Some(a), Some(b)) => {
                    let gn = *r.g.last().unwrap();
                    if (r.g[a.min(b)] - gn).abs() >= TIE_BAND * gn {
                        outside_band += 1;
                    }
                }
                _ => outside_band += 1,
            }
        }
    }
    let rate = agree as f64 / total as f64;
    Outcome {
        pass: rate >= NARROW_AGREEMENT && outside_band == 0,
        detail: format!(
            "{agree}/{total} columns agree ({:.3}%, need {:.1}%), {} near-tie, {outside_band} outside band, {skipped} planes over regime",
            100.0 * rate,
            100.0 * NARROW_AGREEMENT,
            total - agree - outside_band
        ),
    }
}

fn spread() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let params = DeviceParams::default();
    let cfg = ReadoutConfig::default();
    let mut mismatches = 0;
    for _ in 0..SPREAD_COLUMNS {
        let m = rng.gen_range(2..=90);
        let mut p = blank(params, m, 2);
        for i in 0..m {
            let d = match rng.gen_range(0..5) {
                0 => 0.0,
                1 => cfg.delta_threshold,
                2 => cfg.delta_threshold * (1.0 + rng.gen_range(-1e-12..1e-12)),
                3 => rng.gen_range(0.0..2.0 * cfg.delta_threshold),
                _ => rng.gen_range(0.0..0.05 * params.r_off),
            };
            p.set_state(i, 0, DeviceState::from_delta_r(&params, d)).unwrap();
        }
        let got = spread_count(&p, 0, &cfg).unwrap().count;
        if got != oracle_spread(&p.delta_r_column(0), cfg.delta_threshold) {
            mismatches += 1;
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("{mismatches} mismatches over {SPREAD_COLUMNS} columns"),
    }
}

fn solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = DeviceParams::default();
    let (mut worst, mut worst_scale) = (0.0f64, 0.0f64);
    for _ in 0..SOLVER_PLANES {
        let (m, n) = (rng.gen_range(1..=10).max(2), rng.gen_range(1..=10).max(2));
        let mut p = blank(params, m, n);
        for i in 0..m {
            for j in 0..n {
                let w = params.d * rng.gen_range(0.0..1.0f64).powi(2);
                p.set_state(i, j, DeviceState::new(&params, w).unwrap()).unwrap();
            }
        }
        let drive = DrivePattern {
            col: rng.gen_range(0..n),
            row: rng.gen_range(0..m),
            v_drive: rng.gen_range(-5.0..5.0),
            coupling_on: rng.gen_bool(0.9),
        };
        let a = p.solve_network(&drive).unwrap();
        let b = oracle_solve(&p, &drive).unwrap();
        let scale = a.currents.iter().fold(0.0f64, |s, c| s.max(c.abs()));
        for i in 0..m {
            for j in 0..n {
                worst = worst.max((a.currents[(i, j)] - b[i][j]).abs() / scale);
            }
        }
        let alpha = rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        let scaled = p
            .solve_network(&DrivePattern {
                v_drive: drive.v_drive * alpha,
                ..drive
            })
            .unwrap();
        for (x, y) in a.currents.iter().zip(scaled.currents.iter()) {
            worst_scale = worst_scale.max((x * alpha - y).abs() / (scale * alpha.abs()));
        }
    }
    Outcome {
        pass: worst <= SOLVER_REL && worst_scale <= SCALING_REL,
        detail: format!(
            "max relative gap to oracle {worst:.2e} (limit {SOLVER_REL:.0e}), scaling {worst_scale:.2e} (limit {SCALING_REL:.0e})"
        ),
    }
}

fn footprint(cfg: &ExperimentConfig) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let prepared = experiment::prepare(cfg).unwrap();
    let (m, at) = experiment::single_drop_footprint(&prepared.model.planes()[0], &cfg.pulse).unwrap();
    let path = dir.path().join("fig7.csv");
    std::fs::write(&path, experiment::matrix_csv(&m)).unwrap();
    let back = experiment::parse_matrix_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let peak = back[at];
    let is_max = back.iter().all(|&v| v <= peak);
    let bad = monotone_decay_violations(&back, at, DECAY_TOL_REL * peak);
    Outcome {
        pass: is_max && bad == 0 && back.shape() == (90, 100),
        detail: format!(
            "{}x{} footprint, peak {peak:.3} ohm at {at:?} is max: {is_max}, {bad} decay violations",
            back.nrows(),
            back.ncols()
        ),
    }
}

fn regime(model: &Model, samples: &[ids_core::Sample]) -> Outcome {
    let ratio = model.max_delta_r_ratio();
    let mut p = model.planes()[0].clone();
    let s = &samples[0];
    let (col, row) = (p.col_of(s.x[0]).unwrap(), p.row_of(s.y).unwrap());
    let before = p.delta_r(row, col);
    drop_ink(&mut p, col, row, &model.pulse).unwrap();
    let first = p.delta_r(row, col) - before;
    drop_ink(&mut p, col, row, &model.pulse).unwrap();
    let second = p.delta_r(row, col) - before - first;
    let rel = (second - first).abs() / first;
    Outcome {
        pass: ratio <= REGIME_LIMIT && rel > 0.0 && rel < REPEAT_REL,
        detail: format!(
            "max dR/r_off {ratio:.5} (limit {REGIME_LIMIT}), repeat increments {first:.4} / {second:.4} ohm differ by {:.3}%",
            100.0 * rel
        ),
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Mean of the target over the other input, mapped to a row position.
fn projection_rows(model: &Model, plane: usize) -> Vec<f64> {
    let p = &model.planes()[plane];
    let other = &model.planes()[1 - plane];
    let yq = p.y_quant();
    (0..p.cols())
        .map(|j| {
            let x = p.x_quant().midpoint(j as f64);
            let mean = (0..other.cols())
                .map(|k| {
                    let u = other.x_quant().midpoint(k as f64);
                    if plane == 0 {
                        eq16(x, u)
                    } else {
                        eq16(u, x)
                    }
                })
                .sum::<f64>()
                / other.cols() as f64;
            (mean - yq.lo()) / yq.width() - 0.5
        })
        .collect()
}

fn reproduction(cfg: &ExperimentConfig) -> (Outcome, Model, Vec<ids_core::Sample>) {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let run = experiment::run_model(cfg, dir.path()).unwrap();
    let templates = experiment::prepare(cfg).unwrap().model;
    let settings = PipelineSettings {
        pulse: cfg.pulse,
        steps: ORACLE_STEPS,
        threshold: cfg.readout.delta_threshold,
        epsilon: cfg.epsilon_weight,
    };
    let reference = oracle_pipeline(templates.planes(), &run.samples, &settings).unwrap();
    let grid = evaluation_grid(&run.model, cfg.eval_grid);
    let errs: Vec<f64> = grid
        .iter()
        .map(|x| reference.predict(templates.planes(), x, settings.epsilon).unwrap() - eq16(x[0], x[1]))
        .collect();
    let oracle_rmse = alm::error_stats(&errs).rmse;

    let mut corr = Vec::new();
    let mut proj = Vec::new();
    for k in 0..run.model.n_inputs() {
        let circuit = narrow_path_curve(&run.model.planes()[k], &run.model.readout).unwrap();
        corr.push(pearson(&circuit, &reference.curve(k).unwrap()));
        proj.push(pearson(&circuit, &projection_rows(&run.model, k)));
    }
    let centre = [5.5, 5.5];
    let circuit_centre = alm::infer(&run.model, &centre).unwrap().y_hat;
    let oracle_centre = reference.predict(templates.planes(), &centre, settings.epsilon).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = run.stats.rmse <= RMSE_FACTOR * oracle_rmse
        && corr.iter().all(|&c| c >= CURVE_CORRELATION)
        && secs < MODEL_SECONDS;
    let detail = format!(
        "rmse {:.4} vs oracle {:.4} (ratio {:.3}, limit {RMSE_FACTOR}), curve correlation {:?} (min {CURVE_CORRELATION}), projection correlation {:?} (info), y_hat(5.5, 5.5) {circuit_centre:.4} vs oracle {oracle_centre:.4} (info), circuit run {:.1} s, total {secs:.1} s (limit {MODEL_SECONDS} s)",
        run.stats.rmse,
        oracle_rmse,
        run.stats.rmse / oracle_rmse,
        corr.iter().map(|c| (c * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        proj.iter().map(|c| (c * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        run.total_seconds,
    );
    (Outcome { pass, detail }, run.model, run.samples)
}

fn persistence(model: &Model) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.idsx");
    persist::save(model, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let back = persist::load(&path).unwrap();
    let identical = persist::encode(&back) == bytes;
    let grid = evaluation_grid(model, 12);
    let same = grid.iter().all(|x| {
        let (a, b) = (alm::infer(model, x).unwrap(), alm::infer(&back, x).unwrap());
        a == b && a.y_hat.to_bits() == b.y_hat.to_bits()
    });
    let mut rejected = 0;
    let probes: Vec<usize> = (0..64).map(|k| k * bytes.len() / 64).collect();
    for &at in &probes {
        let mut bad = bytes.clone();
        bad[at] ^= 0x01;
        std::fs::write(&path, &bad).unwrap();
        if persist::load(&path).is_err() && std::fs::read(&path).unwrap() == bad {
            rejected += 1;
        }
    }
    let truncated = persist::decode(&bytes[..bytes.len() - 1]).is_err();
    Outcome {
        pass: identical && same && rejected == probes.len() && truncated,
        detail: format!(
            "bytes identical: {identical}, inference identical on {} points: {same}, corrupted files rejected {rejected}/{}, truncation rejected: {truncated}",
            grid.len(),
            probes.len()
        ),
    }
}

fn purity(model: &Model) -> Outcome {
    let hash = |m: &Model| crc32fast::hash(&persist::encode(m));
    let before = hash(model);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..PURITY_READS {
        let p = &model.planes()[k % model.n_inputs()];
        read_plane(p, rng.gen_range(0..p.cols()), &model.readout).unwrap();
    }
    let after = hash(model);
    Outcome {
        pass: before == after,
        detail: format!("state hash {before:08x} before, {after:08x} after {PURITY_READS} readouts"),
    }
}

fn timed(
    results: &mut Vec<(usize, bool)>,
    id: usize,
    name: &str,
    limit: Option<f64>,
    f: impl FnOnce() -> Outcome,
) {
    let t = Instant::now();
    let mut o = f();
    let secs = t.elapsed().as_secs_f64();
    if let Some(limit) = limit {
        if secs >= limit {
            o.pass = false;
            o.detail.push_str(&format!("; over the {limit} s limit"));
        }
    }
    report(id, name, secs, &o);
    results.push((id, o.pass));
}

#[test]
fn acceptance() {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = Some(SEED);
    let mut results = Vec::new();
    let r = &mut results;
    let _ = writeln!(std::io::stderr());

    timed(r, 1, "narrow path vs ink balance", Some(NARROW_SECONDS), narrow_path);
    timed(r, 2, "spread vs ink threshold", Some(SPREAD_SECONDS), spread);
    timed(r, 3, "network solver vs dense reference", None, solver);
    timed(r, 4, "single-drop locality", Some(FOOTPRINT_SECONDS), || footprint(&cfg));

    // 5 inspects the model trained by 6, so 6 runs first and reports second
    let t6 = Instant::now();
    let (six, model, samples) = reproduction(&cfg);
    let six_secs = t6.elapsed().as_secs_f64();
    timed(r, 5, "linear regime and repeat drops", None, || regime(&model, &samples));
    report(6, "reference reproduction", six_secs, &six);
    r.push((6, six.pass));
    timed(r, 7, "persistence", None, || persistence(&model));
    timed(r, 8, "readout purity", None, || purity(&model));

    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
