use std::f64::consts::PI;

use dtc_core::magnon::{predicted_p2t, predicted_return};
use dtc_core::{polarized_state, Direction, Evolver, FloquetParams, ObservableSelection};

fn exact_even(length: usize, jt: f64, eps: f64, n: usize) -> Vec<f64> {
    let p = FloquetParams::from_jt(length, jt, eps).unwrap();
    Evolver::new(p)
        .unwrap()
        .evolve(
            &polarized_state(length, Direction::Up).unwrap(),
            2 * n,
            ObservableSelection::default(),
        )
        .unwrap()
        .even_return_probabilities()
}

#[test]
fn two_pulse_against_engine() {
    let (l, jt, eps) = (6usize, 0.6 * PI, 0.05 * PI);
    let exact = exact_even(l, jt, eps, 1)[0];
    let pred = predicted_p2t(l, jt, eps);
    let scale = (l * l) as f64 * eps.powi(4);
    assert!((exact - pred.lowest_order).abs() < 5.0 * scale);
    assert!((exact - pred.unexpanded).abs() < 5.0 * scale);
}

#[test]
fn first_step_of_magnon_prediction() {
    for l in [3usize, 5, 8, 10] {
        for jt in [0.5, 0.8, 0.9, 1.0] {
            let eps = 0.02 * PI;
            let exact = exact_even(l, jt * PI, eps, 1)[0];
            let pred = predicted_return(1, l, jt * PI, eps).predicted_p;
            assert!(
                (exact - pred).abs() < 5.0 * (l * l) as f64 * eps.powi(4),
                "L={l} JT={jt}π"
            );
        }
    }
}

#[test]
fn revival_at_pi_to_fourth_order() {
    for l in 2..=10 {
        let eps = 0.02 * PI;
        let series = exact_even(l, PI, eps, 10);
        for (i, p) in series.iter().enumerate() {
            assert_eq!(predicted_return(i + 1, l, PI, eps).predicted_p, 1.0);
            assert!(1.0 - p < 5.0 * (l * l) as f64 * eps.powi(4) * ((i + 1) as f64).powi(2));
        }
    }
}
