//! Frozen outputs for seed 42, n = 8, m = 6, s* = 2, r = 0.2. Any change to
//! the stream, the draw order or the solver shows up here first.

use gpsp_core::datagen::{default_k, generate, GenSpec};
use gpsp_core::gpsp::{gpsp_solve, SolverConfig, Termination};
use gpsp_core::ModelParams;

const PHI_ROW0: [f64; 8] = [
    -1.0151557681372851,
    0.642460076658858,
    0.22500976362291605,
    0.3940043825431038,
    -0.33640221822516964,
    0.4930116891923792,
    -1.7736265249359109,
    0.6070782303800044,
];
const X_TRUE: [f64; 8] = [0.0, 0.0, 0.7560038537586746, 0.0, -0.6545671646989577, 0.0, 0.0, 0.0];
const C: [f64; 6] = [1.0, -1.0, -1.0, -1.0, 1.0, 1.0];
const C_TRUE: [f64; 6] = [1.0, 1.0, -1.0, 1.0, 1.0, -1.0];
const X_BAR: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.6667881977080787, -0.7452472739951567, 0.0];

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

#[test]
fn seed_42_instance_is_frozen() {
    let (prob, truth) = generate(&GenSpec::independent(8, 6, 2, 0.2, 42)).unwrap();
    assert!(close(prob.phi().row(0), &PHI_ROW0));
    assert!(close(&truth.x_true, &X_TRUE));
    assert_eq!(prob.c(), C);
    assert_eq!(truth.c_true, C_TRUE);
    assert_eq!(truth.flip_mask, [1, 5]);
}

#[test]
fn seed_42_solution_is_frozen() {
    let (prob, _) = generate(&GenSpec::independent(8, 6, 2, 0.2, 42)).unwrap();
    let params = ModelParams::new(0.01, 1e-4, 2, default_k(6)).unwrap();
    let res = gpsp_solve(&prob, &params, &SolverConfig::default()).unwrap();
    assert!(close(&res.x_bar, &X_BAR));
    assert_eq!(res.iterations, 9);
    assert_eq!(res.termination, Termination::ToleranceMet);
}
