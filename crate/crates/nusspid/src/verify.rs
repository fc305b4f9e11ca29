//! Numerical property suite: the checks behind `nusspid verify`.
//!
//! Each check samples deterministically (fixed RNG seeds) and reports a
//! pass/fail outcome with a one-line detail. Tolerances are pinned here as
//! constants. Checks that compare two routes keep both routes alive: the
//! analytic Nussbaum antiderivative is checked against adaptive quadrature,
//! and the collapsed control law against its expanded three-term form.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::controller::{self, ControllerParams};
use crate::dynamics::{self, JointState, RobotParams};
use crate::sim::{self, AugmentedState, SimConfig};

/// Symmetry defect allowed on the inertia matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Allowed |xᵀ(Ṁ − 2C)x| on random states and directions.
pub const SKEW_TOL: f64 = 1e-10;
/// Absolute gap between the gravity vector and the central-difference
/// gradient of the potential.
pub const GRAVITY_GRADIENT_TOL: f64 = 1e-6;
/// Relative energy drift allowed over the 5 s unforced run at dt = 0.1 ms.
pub const ENERGY_DRIFT_TOL: f64 = 1e-6;
/// Order-4 convergence window for the endpoint-error ratio under step halving.
pub const RK4_RATIO_RANGE: (f64, f64) = (12.0, 20.0);
/// Baseline step for the order check (halved twice for the Richardson pair).
pub const RK4_ORDER_BASE_DT: f64 = 2e-3;
/// Allowed gap between the analytic Nussbaum running mean and quadrature.
pub const NUSSBAUM_QUAD_TOL: f64 = 1e-8;
/// The running mean must exceed ±this level below `WITNESS_V_MAX`.
pub const WITNESS_LEVEL: f64 = 10.0;
pub const WITNESS_V_MAX: f64 = 100.0;
/// Allowed relative gap between the collapsed and expanded control laws.
pub const GAIN_LINK_TOL: f64 = 1e-12;
/// Sample count for the randomized checks.
pub const SAMPLES: usize = 1000;

/// Result of one property check.
#[derive(Debug, Clone)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl PropertyOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

fn sample_angle(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-PI..PI)
}

/// Inertia matrix symmetry and positive definiteness over random
/// configurations; reports the empirical eigenvalue bounds.
pub fn check_mass_matrix_spd(p: &RobotParams) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut min_eig = f64::INFINITY;
    let mut max_eig: f64 = 0.0;
    let mut max_asym: f64 = 0.0;
    for _ in 0..SAMPLES {
        let q = Vector2::new(sample_angle(&mut rng), sample_angle(&mut rng));
        let m = dynamics::mass_matrix(p, &q);
        max_asym = max_asym.max((m[(0, 1)] - m[(1, 0)]).abs());
        // closed-form eigenvalues of a symmetric 2x2
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m.determinant();
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        min_eig = min_eig.min(0.5 * (tr - disc));
        max_eig = max_eig.max(0.5 * (tr + disc));
    }
    let passed = max_asym <= SYMMETRY_TOL && min_eig > 0.0;
    PropertyOutcome::new(
        "inertia matrix symmetric positive definite",
        passed,
        format!("asymmetry {max_asym:.2e}, eigenvalues in [{min_eig:.4}, {max_eig:.4}]"),
    )
}

/// |xᵀ(Ṁ − 2C)x| over random states and directions, with an injectable
/// Coriolis routine so faults are detectable.
pub fn check_skew_symmetry_with(
    p: &RobotParams,
    coriolis: impl Fn(&RobotParams, &Vector2<f64>, &Vector2<f64>) -> Matrix2<f64>,
) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES {
        let q = Vector2::new(sample_angle(&mut rng), sample_angle(&mut rng));
        let dq = Vector2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let x = Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let s = dynamics::mass_matrix_rate(p, &q, &dq) - 2.0 * coriolis(p, &q, &dq);
        worst = worst.max(x.dot(&(s * x)).abs());
    }
    PropertyOutcome::new(
        "coriolis skew symmetry",
        worst <= SKEW_TOL,
        format!("max |x'(Mdot - 2C)x| = {worst:.2e}"),
    )
}

pub fn check_skew_symmetry(p: &RobotParams) -> PropertyOutcome {
    check_skew_symmetry_with(p, dynamics::coriolis_matrix)
}

/// Gravity vector against the central-difference gradient of the potential,
/// plus the componentwise magnitude bound.
pub fn check_gravity_gradient(p: &RobotParams) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let h = 1e-6;
    let bound = (p.m1 * p.lc1 + p.m2 * p.l1 + p.m2 * p.lc2) * p.gravity;
    let potential =
        |q: &Vector2<f64>| dynamics::mechanical_energy(p, &JointState::new(*q, Vector2::zeros())).1;
    let mut worst_grad: f64 = 0.0;
    let mut worst_mag: f64 = 0.0;
    for _ in 0..SAMPLES {
        let q = Vector2::new(sample_angle(&mut rng), sample_angle(&mut rng));
        let g = dynamics::gravity_vector(p, &q);
        worst_mag = worst_mag.max(g[0].abs().max(g[1].abs()));
        for k in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[k] += h;
            qm[k] -= h;
            let fd = (potential(&qp) - potential(&qm)) / (2.0 * h);
            worst_grad = worst_grad.max((g[k] - fd).abs());
        }
    }
    let passed = worst_grad <= GRAVITY_GRADIENT_TOL && worst_mag <= bound;
    PropertyOutcome::new(
        "gravity gradient and bound",
        passed,
        format!("max gradient gap {worst_grad:.2e}, max |G_i| = {worst_mag:.4} <= {bound:.4}"),
    )
}

/// Unforced (τ = 0) energy conservation: 5 s at dt = 0.1 ms from the
/// reference initial pose, relative drift below [`ENERGY_DRIFT_TOL`].
pub fn check_passivity(p: &RobotParams) -> PropertyOutcome {
    let dt = 1e-4;
    let steps = 50_000; // 5 s
    let q0 = Vector2::new(std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2);
    let energy = |y: &nalgebra::DVector<f64>| {
        let (k, v) = dynamics::mechanical_energy(
            p,
            &JointState::new(Vector2::new(y[0], y[1]), Vector2::new(y[2], y[3])),
        );
        k + v
    };
    let f = |_: f64, y: &nalgebra::DVector<f64>| {
        let joint = JointState::new(Vector2::new(y[0], y[1]), Vector2::new(y[2], y[3]));
        let qdd = dynamics::forward_dynamics(p, &joint, &Vector2::zeros());
        nalgebra::DVector::from_vec(vec![y[2], y[3], qdd[0], qdd[1]])
    };
    let mut y = nalgebra::DVector::from_vec(vec![q0[0], q0[1], 0.0, 0.0]);
    let e0 = energy(&y);
    let mut worst_drift: f64 = 0.0;
    for k in 0..steps {
        y = sim::rk4_step_with(f, k as f64 * dt, &y, dt);
        worst_drift = worst_drift.max(((energy(&y) - e0) / e0).abs());
    }
    PropertyOutcome::new(
        "passivity: unforced energy drift",
        worst_drift < ENERGY_DRIFT_TOL,
        format!("max relative drift {worst_drift:.2e} over 5 s"),
    )
}

fn closed_loop_endpoint(cfg: &SimConfig, horizon: f64, dt: f64) -> nalgebra::DVector<f64> {
    let n = (horizon / dt).round() as usize;
    let mut s = AugmentedState::initial(cfg);
    for k in 0..n {
        s = sim::rk4_step(cfg, k as f64 * dt, &s, dt);
    }
    s.as_flat().clone()
}

/// Order-4 convergence of the integrator on the closed loop: the endpoint
/// error ratio between dt and dt/2 (Richardson self-comparison against dt/4)
/// must sit in [`RK4_RATIO_RANGE`].
pub fn check_rk4_order(cfg: &SimConfig) -> PropertyOutcome {
    let dt = RK4_ORDER_BASE_DT;
    let horizon = 1.0;
    let y1 = closed_loop_endpoint(cfg, horizon, dt);
    let y2 = closed_loop_endpoint(cfg, horizon, dt / 2.0);
    let y3 = closed_loop_endpoint(cfg, horizon, dt / 4.0);
    let e1 = (&y1 - &y2).norm();
    let e2 = (&y2 - &y3).norm();
    let ratio = e1 / e2;
    let (lo, hi) = RK4_RATIO_RANGE;
    PropertyOutcome::new(
        "rk4 endpoint order",
        ratio >= lo && ratio <= hi,
        format!("error ratio {ratio:.2} for dt = {dt:.0e} over {horizon} s"),
    )
}

/// Adaptive Simpson quadrature with absolute tolerance `eps`.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, flm, left, 0.5 * eps, depth - 1)
            + recurse(f, m, fm, b, fb, frm, right, 0.5 * eps, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, fa, b, fb, fm, whole, eps, 40)
}

/// Analytic antiderivative of ζ²cos ζ against adaptive quadrature on a grid
/// of upper limits in (0, 200], with an injectable antiderivative so faults
/// are detectable.
pub fn check_nussbaum_mean_with(antiderivative: impl Fn(f64) -> f64) -> PropertyOutcome {
    let integrand = |z: f64| z * z * z.cos();
    let mut worst: f64 = 0.0;
    let mut worst_v = 0.0;
    // 0.37 steps land away from the zeros/extrema lattice of cos
    let mut v = 0.37;
    while v <= 200.0 {
        let quad = adaptive_simpson(&integrand, 0.0, v, 1e-9 * v.max(0.1));
        let gap = (antiderivative(v) / v - quad / v).abs();
        if gap > worst {
            worst = gap;
            worst_v = v;
        }
        v += 0.37;
    }
    for v in [1e-3, 0.5, PI, 2.0 * PI, 50.0, 100.0, 200.0] {
        let quad = adaptive_simpson(&integrand, 0.0, v, 1e-9 * v.max(0.1));
        let gap = (antiderivative(v) / v - quad / v).abs();
        if gap > worst {
            worst = gap;
            worst_v = v;
        }
    }
    PropertyOutcome::new(
        "nussbaum running mean vs quadrature",
        worst <= NUSSBAUM_QUAD_TOL,
        format!("max |analytic - quadrature| = {worst:.2e} at v = {worst_v:.2}"),
    )
}

pub fn check_nussbaum_mean() -> PropertyOutcome {
    check_nussbaum_mean_with(controller::nussbaum_antiderivative)
}

/// Desk-scale witness of the two-sided unboundedness: upper limits below
/// [`WITNESS_V_MAX`] where the running mean exceeds +10 and falls below −10.
pub fn check_nussbaum_witnesses() -> PropertyOutcome {
    let mut v_up = None;
    let mut v_down = None;
    let mut v = 1e-3;
    while v <= WITNESS_V_MAX {
        let mean = controller::nussbaum_mean(v);
        if v_up.is_none() && mean > WITNESS_LEVEL {
            v_up = Some(v);
        }
        if v_down.is_none() && mean < -WITNESS_LEVEL {
            v_down = Some(v);
        }
        if v_up.is_some() && v_down.is_some() {
            break;
        }
        v += 1e-3;
    }
    let passed = v_up.is_some() && v_down.is_some();
    let show = |v: Option<f64>| v.map_or("none".to_string(), |v| format!("{v:.3}"));
    PropertyOutcome::new(
        "nussbaum unbounded witnesses",
        passed,
        format!(
            "mean > +{WITNESS_LEVEL} at v = {}, mean < -{WITNESS_LEVEL} at v = {}",
            show(v_up),
            show(v_down)
        ),
    )
}

/// Collapsed law against the expanded three-term law on random inputs.
pub fn check_gain_linking(params: &ControllerParams) -> PropertyOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES {
        let e = Vector2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let e_int = Vector2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let de = Vector2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let kd = rng.random_range(-5.0..5.0);
        let zeta = rng.random_range(-30.0..30.0);
        let psi = controller::generalized_error(params.gamma, &e, &e_int, &de);
        let collapsed = controller::control_input(params, &psi, kd, zeta);
        let expanded = controller::control_input_linked(params, &e, &e_int, &de, kd, zeta);
        let gap = (collapsed - expanded).norm() / (1.0 + collapsed.norm());
        worst = worst.max(gap);
    }
    PropertyOutcome::new(
        "gain linking: collapsed vs expanded law",
        worst <= GAIN_LINK_TOL,
        format!("max relative gap {worst:.2e}"),
    )
}

/// The full suite, in report order.
pub fn run_all(cfg: &SimConfig) -> Vec<PropertyOutcome> {
    vec![
        check_mass_matrix_spd(&cfg.robot),
        check_skew_symmetry(&cfg.robot),
        check_gravity_gradient(&cfg.robot),
        check_passivity(&cfg.robot),
        check_rk4_order(cfg),
        check_nussbaum_mean(),
        check_nussbaum_witnesses(),
        check_gain_linking(&cfg.controller),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stock_suite_passes() {
        let cfg = SimConfig::paper();
        for outcome in run_all(&cfg) {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
    }

    #[test]
    fn mutated_coriolis_sign_fails_skew_symmetry() {
        let p = RobotParams::paper();
        let outcome = check_skew_symmetry_with(&p, |p, q, dq| -dynamics::coriolis_matrix(p, q, dq));
        assert!(!outcome.passed);
    }

    #[test]
    fn mutated_antiderivative_fails_quadrature() {
        let outcome =
            check_nussbaum_mean_with(|v| controller::nussbaum_antiderivative(v) + 1e-4 * v);
        assert!(!outcome.passed);
    }
}
