//! Nodal solver checks against the dense reference and circuit laws.

use ids_core::device::DeviceState;
use ids_core::oracle::oracle_solve;
use ids_core::{DeviceParams, DrivePattern, Plane, Quantizer};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plane(rows: usize, cols: usize) -> Plane {
    Plane::new(
        DeviceParams::default(),
        1000.0,
        Quantizer::new(0.0, 1.0, cols).unwrap(),
        Quantizer::new(0.0, 1.0, rows).unwrap(),
    )
    .unwrap()
}

fn random_plane(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Plane {
    let mut p = plane(rows, cols);
    let d = p.params().d;
    let params = *p.params();
    for i in 0..rows {
        for j in 0..cols {
            let w = d * rng.gen_range(0.0..1.0f64).powi(3);
            p.set_state(i, j, DeviceState::new(&params, w).unwrap()).unwrap();
        }
    }
    p
}

fn drive(col: usize, row: usize, v: f64) -> DrivePattern {
    DrivePattern {
        col,
        row,
        v_drive: v,
        coupling_on: true,
    }
}

#[test]
fn two_by_two_matches_frozen_dense_solution() {
    // Values from an independent numpy solve of the 2-free-node system.
    let p = plane(2, 2);
    let sol = p.solve_network(&drive(0, 0, -3.0)).unwrap();
    let want = [
        [3.0000000000000004e-05, 2.9417475728155338e-05],
        [2.941747572815534e-05, 2.883495145631068e-05],
    ];
    for i in 0..2 {
        for j in 0..2 {
            let got = sol.currents[(i, j)];
            assert!((got - want[i][j]).abs() <= 1e-12 * want[i][j], "({i},{j}) {got}");
        }
    }
    assert!((sol.col_voltages[1] + 2.9417475728155336).abs() < 1e-12);
    assert!((sol.row_voltages[1] + 0.058252427184466014).abs() < 1e-12);
}

#[test]
fn one_by_one_equals_oracle() {
    // the smallest legal plane is 2x2; a single-cell network is the
    // drive junction with coupling off on an otherwise open grid
    let p = plane(2, 2);
    let d = DrivePattern {
        col: 1,
        row: 1,
        v_drive: -2.0,
        coupling_on: false,
    };
    let a = p.solve_network(&d).unwrap();
    let b = oracle_solve(&p, &d).unwrap();
    assert!((a.currents[(1, 1)] - b[1][1]).abs() < 1e-18);
    assert_eq!(a.currents[(1, 1)], 2.0 / 100_000.0);
}

#[test]
fn agrees_with_dense_oracle_on_random_planes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let (m, n) = (rng.gen_range(2..=10), rng.gen_range(2..=10));
        let p = random_plane(&mut rng, m, n);
        let d = DrivePattern {
            col: rng.gen_range(0..n),
            row: rng.gen_range(0..m),
            v_drive: rng.gen_range(-5.0..5.0),
            coupling_on: rng.gen_bool(0.8),
        };
        let a = p.solve_network(&d).unwrap();
        let b = oracle_solve(&p, &d).unwrap();
        let scale = a.currents.iter().fold(0.0f64, |s, c| s.max(c.abs()));
        for i in 0..m {
            for j in 0..n {
                assert!((a.currents[(i, j)] - b[i][j]).abs() <= 1e-8 * scale);
            }
        }
    }
}

#[test]
fn kirchhoff_residuals_and_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_plane(&mut rng, 7, 9);
    let (k0, l0) = (3, 5);
    let sol = p.solve_network(&drive(k0, l0, -3.0)).unwrap();
    let g = 1.0 / p.r_couple();
    let scale = sol.currents.iter().fold(0.0f64, |s, c| s.max(c.abs()));
    // column j: junction currents flow in, chain currents flow out
    let mut driven_out = 0.0;
    for j in 0..9 {
        let mut net: f64 = (0..7).map(|i| sol.currents[(i, j)]).sum();
        for nb in [j.wrapping_sub(1), j + 1] {
            if nb < 9 {
                net -= g * (sol.col_voltages[j] - sol.col_voltages[nb]);
            }
        }
        if j == k0 {
            driven_out = net;
        } else {
            assert!(net.abs() <= 1e-9 * scale, "column {j} residual {net}");
        }
    }
    let mut grounded_in = 0.0;
    for i in 0..7 {
        let mut net: f64 = -(0..9).map(|j| sol.currents[(i, j)]).sum::<f64>();
        for nb in [i.wrapping_sub(1), i + 1] {
            if nb < 7 {
                net -= g * (sol.row_voltages[i] - sol.row_voltages[nb]);
            }
        }
        if i == l0 {
            grounded_in = net;
        } else {
            assert!(net.abs() <= 1e-9 * scale, "row {i} residual {net}");
        }
    }
    // current sourced by the grounded row equals current sunk by the driven column
    assert!((driven_out + grounded_in).abs() <= 1e-9 * scale);
}

#[test]
fn symmetric_under_reflection_about_the_drive() {
    let p = plane(3, 3);
    let sol = p.solve_network(&drive(1, 1, -3.0)).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let a = sol.currents[(i, j)];
            let b = sol.currents[(2 - i, 2 - j)];
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-30));
        }
    }
}

#[test]
fn current_peaks_at_drive_and_decays() {
    let p = plane(9, 11);
    let (k0, l0) = (5, 4);
    let sol = p.solve_network(&drive(k0, l0, -3.0)).unwrap();
    let c = sol.currents.map(f64::abs);
    let peak = c[(l0, k0)];
    assert!(c.iter().all(|&v| v <= peak));
    let toward = |k: usize, c: usize| if k > c { k - 1 } else { k + 1 };
    for i in 0..9 {
        for j in 0..11 {
            if i != l0 {
                assert!(c[(i, j)] <= c[(toward(i, l0), j)] * (1.0 + 1e-12));
            }
            if j != k0 {
                assert!(c[(i, j)] <= c[(i, toward(j, k0))] * (1.0 + 1e-12));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn superposition(seed in any::<u64>(), alpha in prop_oneof![-10.0f64..-0.01, 0.01f64..10.0]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (rng.gen_range(2..=8), rng.gen_range(2..=8));
        let p = random_plane(&mut rng, m, n);
        let base = drive(rng.gen_range(0..n), rng.gen_range(0..m), -1.7);
        let scaled = DrivePattern { v_drive: base.v_drive * alpha, ..base };
        let a = p.solve_network(&base).unwrap();
        let b = p.solve_network(&scaled).unwrap();
        let scale = a.currents.iter().fold(0.0f64, |s, c| s.max(c.abs())) * alpha.abs();
        for (x, y) in a.currents.iter().zip(b.currents.iter()) {
            prop_assert!((x * alpha - y).abs() <= 1e-12 * scale);
        }
        for (x, y) in a.col_voltages.iter().zip(&b.col_voltages) {
            prop_assert!((x * alpha - y).abs() <= 1e-12 * 1.7 * alpha.abs());
        }
    }
}
