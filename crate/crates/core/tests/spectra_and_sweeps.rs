use dtc_core::spectral::{check_time_reflection, PAIR_TOL};
use dtc_core::sweep::{parse_config, run_sweep, RawConfig, SweepResult};
use dtc_core::{
    build_dense_propagator, count_exact_pi_pairs, overlap_with_pair_manifold, polarized_state,
    quasi_energies, Direction, FloquetParams,
};

fn sweep(pairs: &[(&str, &str)]) -> SweepResult {
    let mut raw = RawConfig::default();
    for (k, v) in pairs {
        raw.set(k, *v);
    }
    run_sweep(&parse_config(None, raw).unwrap()).unwrap()
}

fn floats(result: &SweepResult, column: &str) -> Vec<f64> {
    result
        .column(column)
        .unwrap()
        .iter()
        .map(|c| c.parse().unwrap())
        .collect()
}

#[test]
fn polarized_state_overlaps_pair_manifold() {
    let p = FloquetParams::from_units_of_pi(8, 1.0, 0.1).unwrap();
    let u = build_dense_propagator(&p).unwrap();
    let spec = quasi_energies(&u, 1.0, true).unwrap();
    let w =
        overlap_with_pair_manifold(&polarized_state(8, Direction::Up).unwrap(), &spec, PAIR_TOL)
            .unwrap();
    assert!(w > 0.1, "{w}");
}

#[test]
fn odd_size_counts_are_reported() {
    let p = FloquetParams::from_units_of_pi(5, 1.0, 0.1).unwrap();
    let spec = quasi_energies(&build_dense_propagator(&p).unwrap(), 1.0, false).unwrap();
    let counts = count_exact_pi_pairs(&spec, PAIR_TOL);
    assert!(counts.n_zero + counts.n_pi <= 32);
    assert!(check_time_reflection(&p).unwrap() < 1e-12);
}

#[test]
fn phase_diagram_pattern() {
    let r = sweep(&[
        ("mode", "phase-diagram"),
        ("length", "10"),
        ("jt_over_pi", "0.1,1"),
        ("epsilon_over_pi", "0,0.02,0.3"),
        ("window", "1000"),
    ]);
    let avg = floats(&r, "average_return");
    // rows: (0.1, 0), (0.1, 0.02), (0.1, 0.3), (1, 0), (1, 0.02), (1, 0.3)
    assert!((avg[0] - 1.0).abs() < 1e-12 && (avg[3] - 1.0).abs() < 1e-12);
    assert!(avg[4] > 0.9);
    // finite-size floor of about 0.1 at L = 10
    assert!(avg[2] < 0.15, "{}", avg[2]);
}

#[test]
fn phase_diagram_symmetric_about_pi() {
    let r = sweep(&[
        ("mode", "phase-diagram"),
        ("length", "6"),
        ("jt_over_pi", "0:2:0.25"),
        ("epsilon_over_pi", "0.05,0.2"),
        ("window", "200"),
    ]);
    let avg = floats(&r, "average_return");
    let n_jt = 9;
    for j in 0..n_jt {
        for e in 0..2 {
            let a = avg[j * 2 + e];
            let b = avg[(n_jt - 1 - j) * 2 + e];
            assert!((a - b).abs() < 1e-10, "JT index {j}");
        }
    }
}

#[test]
fn lifetime_reports() {
    let r = sweep(&[
        ("mode", "evolve"),
        ("length", "11"),
        ("jt_over_pi", "1,0"),
        ("epsilon_over_pi", "0.1,0.07"),
        ("periods", "2000"),
    ]);
    // rows: (π, 0.1), (π, 0.07), (0, 0.1), (0, 0.07)
    let censored = r.column("censored").unwrap();
    assert_eq!(censored[0], "true");
    assert_eq!(censored[3], "false");
    let n: Vec<usize> = r
        .column("lifetime_n")
        .unwrap()
        .iter()
        .map(|c| c.parse().unwrap())
        .collect();
    assert!(n[3] < 20, "{}", n[3]);
}

#[test]
fn spectrum_report_at_l4() {
    let r = sweep(&[
        ("mode", "spectrum"),
        ("length", "4"),
        ("jt_over_pi", "1"),
        ("epsilon_over_pi", "0.1"),
    ]);
    let n_zero: usize = r.column("n_zero").unwrap()[0].parse().unwrap();
    let n_pi: usize = r.column("n_pi").unwrap()[0].parse().unwrap();
    assert!(n_zero >= 4 && n_pi >= 4);
    assert!(floats(&r, "reflection_residual")[0] < 1e-12);
    assert!(floats(&r, "ratio")[0] < 1.0);
}

#[test]
fn gap_ratio_grows_without_pairing() {
    let r = sweep(&[
        ("mode", "spectrum"),
        ("length", "6,8,10"),
        ("jt_over_pi", "0.2"),
        ("epsilon_over_pi", "0.35"),
    ]);
    let ratio = floats(&r, "ratio");
    assert!(ratio[0] < ratio[1] && ratio[1] < ratio[2], "{ratio:?}");
}
