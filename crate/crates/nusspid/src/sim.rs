//! Closed-loop simulation: desired trajectory, augmented ODE assembly,
//! fixed-step RK4 integration, scenario execution, metrics and monitors.
//!
//! The augmented state stacks the plant and the controller so the adaptive
//! laws integrate inside the same RK4 stages as the robot instead of being
//! sampled-and-held (a `hold` mode with one controller evaluation per step is
//! available for realism comparisons). Runs are single-threaded and
//! deterministic: identical configs produce bit-identical record streams.

use nalgebra::{DVector, Vector2};

use crate::controller::{self, ControlEval, ControllerKind, ControllerParams, ControllerState};
use crate::dynamics::{self, JointState, RobotParams, VELOCITY_DIVERGENCE_LIMIT};

/// One sample of the reference motion q_d(t) = [cos t, −cos t].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub qd: Vector2<f64>,
    pub dqd: Vector2<f64>,
    pub ddqd: Vector2<f64>,
}

/// Smooth, bounded reference: qd = [cos t, −cos t] with its derivatives.
pub fn desired_trajectory(t: f64) -> TrajectorySample {
    let (s, c) = t.sin_cos();
    TrajectorySample {
        qd: Vector2::new(c, -c),
        dqd: Vector2::new(-s, s),
        ddqd: Vector2::new(-c, c),
    }
}

/// Full scenario description.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub robot: RobotParams,
    pub controller: ControllerParams,
    pub kind: ControllerKind,
    /// Initial joint angles (rad).
    pub q0: Vector2<f64>,
    /// Initial joint velocities (rad/s).
    pub dq0: Vector2<f64>,
    /// Integration step (s).
    pub dt: f64,
    /// Horizon (s).
    pub duration: f64,
    /// Emit one record every `decimation` steps.
    pub decimation: usize,
    /// Zero-order-hold mode: the controller is evaluated once per step and
    /// its output held through the RK4 stages, with the adaptive states
    /// advanced by explicit Euler.
    pub hold: bool,
}

impl SimConfig {
    /// Reference scenario (the `paper` preset): reference robot and gains,
    /// q(0) = [π/2, −π/2], q̇(0) = 0, 20 s horizon, records every 1 ms.
    ///
    /// The step is 0.1 ms: the adaptive laws are stiff during the transient
    /// (Γα = 10⁴ and ζ̇ ∝ ‖Ψ‖² sweep whole periods of N(ζ) per millisecond),
    /// and RK4 at dt = 1 ms diverges on this very scenario while dt ≤ 0.2 ms
    /// is converged (0.2 ms, 0.1 ms and 0.05 ms agree to six digits).
    pub fn paper() -> Self {
        Self {
            robot: RobotParams::paper(),
            controller: ControllerParams::paper(),
            kind: ControllerKind::NussbaumPid,
            q0: Vector2::new(std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2),
            dq0: Vector2::zeros(),
            dt: 1e-4,
            duration: 20.0,
            decimation: 10,
            hold: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.robot.validate()?;
        self.controller.validate()?;
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(format!("sim.dt must be finite and > 0, got {}", self.dt));
        }
        if !self.duration.is_finite() || self.duration < self.dt {
            return Err(format!(
                "sim.duration must be >= dt, got duration = {} with dt = {}",
                self.duration, self.dt
            ));
        }
        if self.decimation < 1 {
            return Err("sim.decimation must be >= 1".into());
        }
        if self
            .q0
            .iter()
            .chain(self.dq0.iter())
            .any(|v| !v.is_finite())
        {
            return Err("sim.q0 and sim.dq0 must be finite".into());
        }
        Ok(())
    }
}

/// Flat closed-loop state. Layout, in order:
///
/// ```text
/// [ q (2) | q̇ (2) | ∫e (2) | ψ̂ (nodes) | ζ (1) ]
/// ```
///
/// 27 entries for the default 20-node layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    data: DVector<f64>,
}

impl AugmentedState {
    pub fn initial(cfg: &SimConfig) -> Self {
        let ctrl = ControllerState::initial(&cfg.controller);
        Self::from_parts(&JointState::new(cfg.q0, cfg.dq0), &ctrl)
    }

    pub fn from_parts(joint: &JointState, ctrl: &ControllerState) -> Self {
        let nodes = ctrl.psi_hat.len();
        let mut data = DVector::zeros(7 + nodes);
        data[0] = joint.q[0];
        data[1] = joint.q[1];
        data[2] = joint.dq[0];
        data[3] = joint.dq[1];
        data[4] = ctrl.e_int[0];
        data[5] = ctrl.e_int[1];
        data.rows_mut(6, nodes).copy_from(&ctrl.psi_hat);
        data[6 + nodes] = ctrl.zeta;
        Self { data }
    }

    pub fn from_flat(data: DVector<f64>) -> Self {
        assert!(data.len() >= 8, "augmented state needs at least one node");
        Self { data }
    }

    pub fn as_flat(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn nodes(&self) -> usize {
        self.data.len() - 7
    }

    pub fn joint(&self) -> JointState {
        JointState::new(
            Vector2::new(self.data[0], self.data[1]),
            Vector2::new(self.data[2], self.data[3]),
        )
    }

    pub fn controller_state(&self) -> ControllerState {
        let nodes = self.nodes();
        ControllerState {
            psi_hat: self.data.rows(6, nodes).into_owned(),
            zeta: self.data[6 + nodes],
            e_int: Vector2::new(self.data[4], self.data[5]),
        }
    }

    pub fn zeta(&self) -> f64 {
        self.data[self.data.len() - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Controller evaluation plus the torque actually applied and the resulting
/// acceleration.
struct ClosedLoopEval {
    ctrl: ControlEval,
    target: TrajectorySample,
    tau: Vector2<f64>,
    qdd: Vector2<f64>,
}

fn closed_loop_eval(
    cfg: &SimConfig,
    target: TrajectorySample,
    s: &AugmentedState,
) -> ClosedLoopEval {
    let joint = s.joint();
    let ctrl_state = s.controller_state();
    let ctrl = controller::evaluate(
        &cfg.controller,
        cfg.kind,
        &joint,
        &ctrl_state,
        &target.qd,
        &target.dqd,
    );
    let tau = cfg.robot.kappa * ctrl.u;
    let qdd = dynamics::forward_dynamics(&cfg.robot, &joint, &tau);
    ClosedLoopEval {
        ctrl,
        target,
        tau,
        qdd,
    }
}

fn pack_rates(eval: &ClosedLoopEval, s: &AugmentedState) -> DVector<f64> {
    let nodes = s.nodes();
    let joint = s.joint();
    let mut rates = DVector::zeros(7 + nodes);
    rates[0] = joint.dq[0];
    rates[1] = joint.dq[1];
    rates[2] = eval.qdd[0];
    rates[3] = eval.qdd[1];
    rates[4] = eval.ctrl.err.e[0];
    rates[5] = eval.ctrl.err.e[1];
    rates.rows_mut(6, nodes).copy_from(&eval.ctrl.psi_hat_dot);
    rates[6 + nodes] = eval.ctrl.zeta_dot;
    rates
}

/// Time derivative of the augmented state under a caller-supplied reference
/// trajectory. Used by the property suite to probe synthetic fixed points.
pub fn augmented_derivative_with(
    cfg: &SimConfig,
    trajectory: impl Fn(f64) -> TrajectorySample,
    t: f64,
    s: &AugmentedState,
) -> DVector<f64> {
    let eval = closed_loop_eval(cfg, trajectory(t), s);
    pack_rates(&eval, s)
}

/// Time derivative of the augmented closed-loop state under the reference
/// trajectory: plant dynamics with τ = κu, ∫e, and the adaptive laws.
pub fn augmented_derivative(cfg: &SimConfig, t: f64, s: &AugmentedState) -> DVector<f64> {
    augmented_derivative_with(cfg, desired_trajectory, t, s)
}

/// One classical Runge–Kutta step of a generic vector field.
pub fn rk4_step_with(
    f: impl Fn(f64, &DVector<f64>) -> DVector<f64>,
    t: f64,
    y: &DVector<f64>,
    dt: f64,
) -> DVector<f64> {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, &(y + 0.5 * dt * &k1));
    let k3 = f(t + 0.5 * dt, &(y + 0.5 * dt * &k2));
    let k4 = f(t + dt, &(y + dt * &k3));
    y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// One RK4 step of the closed loop. Deterministic, no internal state.
pub fn rk4_step(cfg: &SimConfig, t: f64, s: &AugmentedState, dt: f64) -> AugmentedState {
    let flat = rk4_step_with(
        |tt, y| augmented_derivative(cfg, tt, &AugmentedState { data: y.clone() }),
        t,
        &s.data,
        dt,
    );
    AugmentedState { data: flat }
}

/// Zero-order-hold step: one controller evaluation at the step head, torque
/// frozen through the plant RK4 stages, adaptive states advanced by Euler.
fn hold_step(cfg: &SimConfig, t: f64, s: &AugmentedState, dt: f64) -> AugmentedState {
    let eval = closed_loop_eval(cfg, desired_trajectory(t), s);
    let plant = DVector::from_vec(vec![s.data[0], s.data[1], s.data[2], s.data[3]]);
    let next_plant = rk4_step_with(
        |_, y| {
            let joint = JointState::new(Vector2::new(y[0], y[1]), Vector2::new(y[2], y[3]));
            let qdd = dynamics::forward_dynamics(&cfg.robot, &joint, &eval.tau);
            DVector::from_vec(vec![y[2], y[3], qdd[0], qdd[1]])
        },
        t,
        &plant,
        dt,
    );
    let nodes = s.nodes();
    let mut data = s.data.clone();
    data.rows_mut(0, 4).copy_from(&next_plant);
    data[4] += eval.ctrl.err.e[0] * dt;
    data[5] += eval.ctrl.err.e[1] * dt;
    for j in 0..nodes {
        data[6 + j] += eval.ctrl.psi_hat_dot[j] * dt;
    }
    data[6 + nodes] += eval.ctrl.zeta_dot * dt;
    AugmentedState { data }
}

/// One logged row of every signal a post-hoc plot needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub t: f64,
    pub q: Vector2<f64>,
    pub qd: Vector2<f64>,
    pub dq: Vector2<f64>,
    pub dqd: Vector2<f64>,
    pub e: Vector2<f64>,
    pub de: Vector2<f64>,
    pub u: Vector2<f64>,
    /// Applied torque τ = κu.
    pub tau: Vector2<f64>,
    /// Generalized error Ψ.
    pub psi: Vector2<f64>,
    pub zeta: f64,
    pub n_zeta: f64,
    pub kappa_delta: f64,
    pub psi_hat_norm: f64,
    /// Tracking term of the stability certificate, ½ΨᵀM(q)Ψ ≥ 0.
    pub v_track: f64,
}

impl SimRecord {
    pub fn is_finite(&self) -> bool {
        self.csv_fields().iter().all(|v| v.is_finite())
            && self.dqd.iter().chain(self.de.iter()).all(|v| v.is_finite())
    }

    /// The 20 columns of the CSV schema, in column order.
    pub fn csv_fields(&self) -> [f64; 20] {
        [
            self.t,
            self.q[0],
            self.q[1],
            self.qd[0],
            self.qd[1],
            self.dq[0],
            self.dq[1],
            self.e[0],
            self.e[1],
            self.u[0],
            self.u[1],
            self.tau[0],
            self.tau[1],
            self.psi[0],
            self.psi[1],
            self.zeta,
            self.n_zeta,
            self.kappa_delta,
            self.psi_hat_norm,
            self.v_track,
        ]
    }
}

fn make_record(cfg: &SimConfig, t: f64, s: &AugmentedState, eval: &ClosedLoopEval) -> SimRecord {
    let joint = s.joint();
    let ctrl_state = s.controller_state();
    let m = dynamics::mass_matrix(&cfg.robot, &joint.q);
    let psi = eval.ctrl.err.psi;
    SimRecord {
        t,
        q: joint.q,
        qd: eval.target.qd,
        dq: joint.dq,
        dqd: eval.target.dqd,
        e: eval.ctrl.err.e,
        de: eval.ctrl.err.de,
        u: eval.ctrl.u,
        tau: eval.tau,
        psi,
        zeta: ctrl_state.zeta,
        n_zeta: eval.ctrl.n_zeta,
        kappa_delta: eval.ctrl.kappa_delta,
        psi_hat_norm: ctrl_state.psi_hat.norm(),
        v_track: 0.5 * psi.dot(&(m * psi)),
    }
}

/// Boundedness/tracking summary of one run. Diverged runs carry partial
/// metrics up to the divergence time.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// RMS of ‖e‖ over the final 25% of the recorded horizon (rad).
    pub rms_error_tail: f64,
    /// Per-joint max |e_i| over the final 25% (rad).
    pub max_abs_error_tail: [f64; 2],
    /// sup ‖Ψ‖ over the whole run.
    pub sup_psi: f64,
    /// sup ‖ψ̂‖ over the whole run.
    pub sup_psi_hat: f64,
    pub zeta_final: f64,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
}

/// Records plus metrics of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub records: Vec<SimRecord>,
    pub metrics: RunMetrics,
}

fn compute_metrics(records: &[SimRecord], diverged: Option<f64>) -> RunMetrics {
    let last_t = records.last().map(|r| r.t).unwrap_or(0.0);
    let tail_start = 0.75 * last_t;
    let mut sum_sq = 0.0;
    let mut tail_count = 0usize;
    let mut max_abs = [0.0f64; 2];
    let mut sup_psi = 0.0f64;
    let mut sup_psi_hat = 0.0f64;
    for r in records {
        sup_psi = sup_psi.max(r.psi.norm());
        sup_psi_hat = sup_psi_hat.max(r.psi_hat_norm);
        if r.t >= tail_start {
            sum_sq += r.e.norm_squared();
            tail_count += 1;
            max_abs[0] = max_abs[0].max(r.e[0].abs());
            max_abs[1] = max_abs[1].max(r.e[1].abs());
        }
    }
    RunMetrics {
        rms_error_tail: if tail_count > 0 {
            (sum_sq / tail_count as f64).sqrt()
        } else {
            f64::NAN
        },
        max_abs_error_tail: max_abs,
        sup_psi,
        sup_psi_hat,
        zeta_final: records.last().map(|r| r.zeta).unwrap_or(f64::NAN),
        diverged: diverged.is_some(),
        divergence_time: diverged,
    }
}

/// Integrates the closed loop from t = 0 to the horizon, emitting one record
/// every `decimation` steps. Divergence (any non-finite signal, or
/// ‖q̇‖ > 1e6 rad/s) stops the run and is reported in the metrics rather
/// than raised, so sweeps can include unstable baselines.
pub fn run_scenario(cfg: &SimConfig) -> ScenarioResult {
    let n_steps = (cfg.duration / cfg.dt).round().max(1.0) as usize;
    let mut records = Vec::with_capacity(n_steps / cfg.decimation + 2);
    let mut state = AugmentedState::initial(cfg);
    let mut diverged = None;

    for k in 0..=n_steps {
        let t = k as f64 * cfg.dt;
        if !state.is_finite() || state.joint().dq.norm() > VELOCITY_DIVERGENCE_LIMIT {
            diverged = Some(t);
            break;
        }
        let eval = closed_loop_eval(cfg, desired_trajectory(t), &state);
        if k % cfg.decimation == 0 {
            let record = make_record(cfg, t, &state, &eval);
            if !record.is_finite() {
                diverged = Some(t);
                break;
            }
            records.push(record);
        }
        if k == n_steps {
            break;
        }
        state = if cfg.hold {
            hold_step(cfg, t, &state, cfg.dt)
        } else {
            rk4_step(cfg, t, &state, cfg.dt)
        };
    }

    let metrics = compute_metrics(&records, diverged);
    ScenarioResult { records, metrics }
}

/// Numerical witness of the error-filter lemma on a completed run: the tail
/// suprema of ‖e‖, ‖ė‖ and ‖∫e‖ are finite and the tail RMS of ‖e‖ does not
/// exceed its value over the first quarter of the horizon. A decrease
/// witness, not a proof. `gamma` is needed to recover ∫e from Ψ.
pub fn lemma1_check(gamma: f64, records: &[SimRecord]) -> bool {
    if records.is_empty() {
        return false;
    }
    let last_t = records.last().unwrap().t;
    let head_end = 0.25 * last_t;
    let tail_start = 0.75 * last_t;
    let mut head_sq = (0.0, 0usize);
    let mut tail_sq = (0.0, 0usize);
    let mut tail_finite = true;
    for r in records {
        if r.t <= head_end {
            head_sq = (head_sq.0 + r.e.norm_squared(), head_sq.1 + 1);
        }
        if r.t >= tail_start {
            tail_sq = (tail_sq.0 + r.e.norm_squared(), tail_sq.1 + 1);
            // ∫e recovered exactly from Ψ = 2γe + γ²∫e + ė
            let e_int = (r.psi - 2.0 * gamma * r.e - r.de) / (gamma * gamma);
            tail_finite &=
                r.e.norm().is_finite() && r.de.norm().is_finite() && e_int.norm().is_finite();
        }
    }
    if head_sq.1 == 0 || tail_sq.1 == 0 || !tail_finite {
        return false;
    }
    let head_rms = (head_sq.0 / head_sq.1 as f64).sqrt();
    let tail_rms = (tail_sq.0 / tail_sq.1 as f64).sqrt();
    tail_rms <= head_rms
}

/// Relative defect of the power balance Ė = q̇ᵀτ accumulated over a recorded
/// run: |ΔE − ∫q̇ᵀτ dt| scaled by the energy/work magnitude. Trapezoidal
/// quadrature on the decimated records.
pub fn passivity_audit(robot: &RobotParams, records: &[SimRecord]) -> f64 {
    assert!(records.len() >= 2, "need at least two records");
    let energy = |r: &SimRecord| {
        let (k, v) = dynamics::mechanical_energy(robot, &JointState::new(r.q, r.dq));
        k + v
    };
    let power = |r: &SimRecord| r.dq.dot(&r.tau);
    let mut work = 0.0;
    for pair in records.windows(2) {
        work += 0.5 * (power(&pair[0]) + power(&pair[1])) * (pair[1].t - pair[0].t);
    }
    let e0 = energy(&records[0]);
    let e1 = energy(records.last().unwrap());
    let scale = e0.abs().max(e1.abs()).max(work.abs()).max(1.0);
    ((e1 - e0) - work).abs() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn trajectory_reference_values() {
        let s = desired_trajectory(0.0);
        assert_eq!(s.qd, Vector2::new(1.0, -1.0));
        assert_eq!(s.dqd, Vector2::new(0.0, 0.0));
        assert_eq!(s.ddqd, Vector2::new(-1.0, 1.0));

        let s = desired_trajectory(FRAC_PI_2);
        assert_abs_diff_eq!(s.qd[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.dqd[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.dqd[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn trajectory_satisfies_harmonic_identity() {
        for k in 0..100 {
            let t = 0.13 * k as f64;
            let s = desired_trajectory(t);
            assert_abs_diff_eq!(s.ddqd[0], -s.qd[0], epsilon = 1e-15);
            assert_abs_diff_eq!(s.ddqd[1], -s.qd[1], epsilon = 1e-15);
        }
    }

    #[test]
    fn augmented_state_layout_round_trips() {
        let cfg = SimConfig::paper();
        let s = AugmentedState::initial(&cfg);
        assert_eq!(s.as_flat().len(), 27);
        assert_eq!(s.joint().q, cfg.q0);
        assert_eq!(s.controller_state().zeta, 0.0);
        assert_eq!(s.controller_state().psi_hat.len(), 20);

        let joint = JointState::new(Vector2::new(0.1, 0.2), Vector2::new(0.3, 0.4));
        let ctrl = ControllerState {
            psi_hat: DVector::from_fn(20, |i, _| i as f64),
            zeta: 7.5,
            e_int: Vector2::new(-1.0, 2.0),
        };
        let s = AugmentedState::from_parts(&joint, &ctrl);
        assert_eq!(s.joint(), joint);
        assert_eq!(s.controller_state(), ctrl);
        assert_eq!(s.zeta(), 7.5);
    }

    #[test]
    fn derivative_at_initial_state() {
        let cfg = SimConfig::paper();
        let s = AugmentedState::initial(&cfg);
        let rates = augmented_derivative(&cfg, 0.0, &s);

        // e(0) = qd(0) − q0 = [1 − π/2, π/2 − 1]
        assert_abs_diff_eq!(rates[4], 1.0 - FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(rates[5], FRAC_PI_2 - 1.0, epsilon = 1e-15);

        // ζ(0) = 0 ⇒ N = 0 ⇒ u = 0 ⇒ q̈ = forward dynamics with τ = 0
        let free = dynamics::forward_dynamics(&cfg.robot, &s.joint(), &Vector2::zeros());
        assert_abs_diff_eq!(rates[2], free[0], epsilon = 1e-15);
        assert_abs_diff_eq!(rates[3], free[1], epsilon = 1e-15);

        // ζ̇ equals (k_Δ + κ_Δ)‖Ψ‖² recomputed independently
        let ctrl = s.controller_state();
        let joint = s.joint();
        let target = desired_trajectory(0.0);
        let err = controller::TrackingError::new(
            cfg.controller.gamma,
            target.qd - joint.q,
            ctrl.e_int,
            target.dqd - joint.dq,
        );
        let x = controller::nn_input(&err.e, &err.de, &joint.q, &err.psi);
        let phi = cfg.controller.layout.basis_vector(&x);
        let kd = controller::kappa_delta(&cfg.controller, &ctrl.psi_hat, &phi);
        let expected = (cfg.controller.k_delta + kd) * err.psi.norm_squared();
        assert_abs_diff_eq!(rates[26], expected, epsilon = 1e-15);
    }

    #[test]
    fn synthetic_fixed_point_has_zero_rates() {
        // zero-gravity arm resting on a constant reference
        let mut cfg = SimConfig::paper();
        cfg.robot.gravity = 0.0;
        cfg.q0 = Vector2::new(0.4, -0.9);
        cfg.dq0 = Vector2::zeros();
        let hold_at = cfg.q0;
        let s = AugmentedState::initial(&cfg);
        let rates = augmented_derivative_with(
            &cfg,
            |_| TrajectorySample {
                qd: hold_at,
                dqd: Vector2::zeros(),
                ddqd: Vector2::zeros(),
            },
            3.0,
            &s,
        );
        assert!(rates.iter().all(|&v| v == 0.0), "rates = {rates:?}");
    }

    #[test]
    fn rk4_stub_fields() {
        // zero vector field leaves the state unchanged
        let y = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let next = rk4_step_with(|_, s| DVector::zeros(s.len()), 0.0, &y, 0.1);
        assert_eq!(next, y);

        // planar rotation ẋ = [x2, −x1]: exact flow is a rotation matrix
        let y = DVector::from_vec(vec![1.0, 0.0]);
        let dt = 0.01;
        let next = rk4_step_with(|_, s| DVector::from_vec(vec![s[1], -s[0]]), 0.0, &y, dt);
        let exact = DVector::from_vec(vec![dt.cos(), -dt.sin()]);
        // one-step error is O(dt⁵)
        assert!((next - exact).norm() < dt.powi(5));
    }

    #[test]
    fn rk4_order_on_scalar_decay() {
        // ẋ = −x over 1 s; halving dt divides the endpoint error by ~16
        let f = |_: f64, s: &DVector<f64>| -s.clone();
        let run = |dt: f64| {
            let mut y = DVector::from_vec(vec![1.0]);
            let n = (1.0 / dt).round() as usize;
            for k in 0..n {
                y = rk4_step_with(f, k as f64 * dt, &y, dt);
            }
            y[0]
        };
        let exact = (-1.0f64).exp();
        let e1 = (run(0.02) - exact).abs();
        let e2 = (run(0.01) - exact).abs();
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn one_step_horizon_gives_two_records() {
        let mut cfg = SimConfig::paper();
        cfg.duration = cfg.dt;
        cfg.decimation = 1;
        let result = run_scenario(&cfg);
        assert_eq!(result.records.len(), 2);
        assert_eq!(result.records[0].t, 0.0);
        assert_abs_diff_eq!(result.records[1].t, cfg.dt, epsilon = 1e-15);
        assert!(!result.metrics.diverged);
    }

    #[test]
    fn decimation_thins_records() {
        let mut cfg = SimConfig::paper();
        cfg.duration = 0.1; // 1000 steps
        cfg.decimation = 100;
        let result = run_scenario(&cfg);
        assert_eq!(result.records.len(), 11);
        assert_abs_diff_eq!(result.records[1].t, 0.01, epsilon = 1e-15);
    }

    #[test]
    fn runs_are_bit_deterministic() {
        let mut cfg = SimConfig::paper();
        cfg.duration = 0.5;
        let a = run_scenario(&cfg);
        let b = run_scenario(&cfg);
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(
                ra.csv_fields().map(f64::to_bits),
                rb.csv_fields().map(f64::to_bits)
            );
        }
    }

    #[test]
    fn zeta_trace_matches_integrated_rate() {
        let mut cfg = SimConfig::paper();
        cfg.duration = 2.0;
        let result = run_scenario(&cfg);
        assert!(!result.metrics.diverged);
        let records = &result.records;
        // trapezoid of the recorded ζ̇ = (k_Δ + κ_Δ)‖Ψ‖² against Δζ
        let rate = |r: &SimRecord| (cfg.controller.k_delta + r.kappa_delta) * r.psi.norm_squared();
        let mut integral = 0.0;
        for pair in records.windows(2) {
            integral += 0.5 * (rate(&pair[0]) + rate(&pair[1])) * (pair[1].t - pair[0].t);
        }
        let dz = records.last().unwrap().zeta - records[0].zeta;
        let defect = (dz - integral).abs() / dz.abs().max(1.0);
        assert!(defect < 1e-2, "defect = {defect}, dz = {dz}");
    }

    #[test]
    fn v_track_is_nonnegative() {
        let mut cfg = SimConfig::paper();
        cfg.duration = 1.0;
        let result = run_scenario(&cfg);
        assert!(result.records.iter().all(|r| r.v_track >= 0.0));
    }

    #[test]
    fn lemma1_on_synthetic_records() {
        // constant-zero-error records pass trivially
        let zero = SimRecord {
            t: 0.0,
            q: Vector2::zeros(),
            qd: Vector2::zeros(),
            dq: Vector2::zeros(),
            dqd: Vector2::zeros(),
            e: Vector2::zeros(),
            de: Vector2::zeros(),
            u: Vector2::zeros(),
            tau: Vector2::zeros(),
            psi: Vector2::zeros(),
            zeta: 0.0,
            n_zeta: 0.0,
            kappa_delta: 0.0,
            psi_hat_norm: 0.0,
            v_track: 0.0,
        };
        let records: Vec<SimRecord> = (0..100)
            .map(|k| SimRecord {
                t: k as f64 * 0.1,
                ..zero
            })
            .collect();
        assert!(lemma1_check(0.5, &records));

        // growing error fails the decrease witness
        let records: Vec<SimRecord> = (0..100)
            .map(|k| SimRecord {
                t: k as f64 * 0.1,
                e: Vector2::new(k as f64, 0.0),
                ..zero
            })
            .collect();
        assert!(!lemma1_check(0.5, &records));
    }

    #[test]
    fn lemma1_witness_and_power_balance_on_reference_run() {
        let cfg = SimConfig::paper();
        let result = run_scenario(&cfg);
        assert!(!result.metrics.diverged);
        assert!(lemma1_check(cfg.controller.gamma, &result.records));
        // energy bookkeeping holds over the whole forced horizon
        let defect = passivity_audit(&cfg.robot, &result.records);
        assert!(defect < 1e-3, "power-balance defect = {defect}");
    }

    #[test]
    fn hold_mode_stays_close_to_continuous() {
        let mut cfg = SimConfig::paper();
        cfg.duration = 1.0;
        let continuous = run_scenario(&cfg);
        cfg.hold = true;
        let held = run_scenario(&cfg);
        assert!(!held.metrics.diverged);
        assert_eq!(continuous.records.len(), held.records.len());
        // same transient scale, not identical
        let qc = continuous.records.last().unwrap().q;
        let qh = held.records.last().unwrap().q;
        assert!(
            (qc - qh).norm() < 0.5,
            "hold diverged from continuous: {qc:?} vs {qh:?}"
        );
        assert_ne!(qc, qh);
    }

    #[test]
    fn diverged_run_reports_partial_metrics() {
        // reversed actuation with the fixed baseline blows up; the baseline
        // has no adaptation, so the coarse step is converged enough here
        let mut cfg = SimConfig::paper();
        cfg.robot = RobotParams::flipped();
        cfg.kind = ControllerKind::FixedPid;
        cfg.dt = 1e-3;
        cfg.duration = 40.0;
        let result = run_scenario(&cfg);
        let max_err = result
            .records
            .iter()
            .map(|r| r.e[0].abs().max(r.e[1].abs()))
            .fold(0.0f64, f64::max);
        assert!(
            result.metrics.diverged || max_err > 10.0,
            "flip baseline stayed bounded: sup |e| = {max_err}"
        );
        assert!(!result.records.is_empty());
    }

    #[test]
    fn unforced_pendulum_conserves_energy() {
        // plant-only check via the hold-mode plant integrator: fixed-pid with
        // k_delta → tiny torque would still force it, so null the controller
        // by tracking the actual free motion? Simpler: integrate the plant
        // directly with τ = 0 through rk4_step_with.
        let p = RobotParams::paper();
        let dt = 1e-3;
        let mut y = DVector::from_vec(vec![FRAC_PI_2, -FRAC_PI_2, 0.0, 0.0]);
        let f = |_: f64, s: &DVector<f64>| {
            let joint = JointState::new(Vector2::new(s[0], s[1]), Vector2::new(s[2], s[3]));
            let qdd = dynamics::forward_dynamics(&p, &joint, &Vector2::zeros());
            DVector::from_vec(vec![s[2], s[3], qdd[0], qdd[1]])
        };
        let e0 = {
            let (k, v) = dynamics::mechanical_energy(
                &p,
                &JointState::new(Vector2::new(y[0], y[1]), Vector2::new(y[2], y[3])),
            );
            k + v
        };
        for k in 0..1000 {
            y = rk4_step_with(f, k as f64 * dt, &y, dt);
        }
        let (kin, pot) = dynamics::mechanical_energy(
            &p,
            &JointState::new(Vector2::new(y[0], y[1]), Vector2::new(y[2], y[3])),
        );
        assert!(((kin + pot - e0) / e0).abs() < 1e-8);
    }

    #[test]
    fn paper_run_is_bounded_short_horizon() {
        let mut cfg = SimConfig::paper();
        cfg.duration = 3.0;
        let result = run_scenario(&cfg);
        assert!(
            !result.metrics.diverged,
            "diverged at {:?}",
            result.metrics.divergence_time
        );
        assert!(result.metrics.sup_psi.is_finite());
        // passivity audit along the forced run
        let defect = passivity_audit(&cfg.robot, &result.records);
        assert!(defect < 1e-3, "passivity defect = {defect}");
    }

    #[test]
    fn trajectory_period_is_two_pi() {
        let a = desired_trajectory(1.0);
        let b = desired_trajectory(1.0 + 2.0 * PI);
        assert_abs_diff_eq!(a.qd[0], b.qd[0], epsilon = 1e-12);
    }
}
