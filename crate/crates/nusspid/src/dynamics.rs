//! Two-link planar manipulator dynamics.
//!
//! Closed-form Lagrangian model of a two-link arm in the vertical plane:
//! inertia matrix, Coriolis matrix in Christoffel form, gravity vector,
//! forward dynamics and mechanical energy. Each link is a slender rod with
//! uniform mass distribution; link inertias are taken about the joint axis
//! and the centers of mass sit along the links, which makes the standard
//! textbook closed form exact:
//!
//! ```text
//! M(q) q̈ + C(q, q̇) q̇ + G(q) = τ,     τ = κ u
//! ```
//!
//! The Christoffel form of `C` guarantees that `Ṁ − 2C` is skew-symmetric,
//! which the property suite checks numerically.

use nalgebra::{Matrix2, Vector2};

/// Joint velocities above this magnitude mark a simulation as diverged.
pub const VELOCITY_DIVERGENCE_LIMIT: f64 = 1e6;

/// Maximum relative deviation of a preset link inertia from the slender-rod
/// value m·l²/3. The preset values are rounded to two decimals (I2 = 0.37 vs
/// 0.375 is 1.33% off), so the gate sits at 2%.
pub const SLENDER_ROD_TOL: f64 = 0.02;

/// Physical parameters of the two-link arm plus the actuator matrix κ.
///
/// `kappa` maps the commanded input to the applied torque, `τ = κ u`. Its
/// sign structure is unknown to the controller; the presets exercise κ = I,
/// κ = −I and κ = diag(0.5, −2).
#[derive(Debug, Clone, PartialEq)]
pub struct RobotParams {
    /// Link masses (kg).
    pub m1: f64,
    pub m2: f64,
    /// Link lengths (m).
    pub l1: f64,
    pub l2: f64,
    /// Joint-to-center-of-mass distances (m).
    pub lc1: f64,
    pub lc2: f64,
    /// Link inertias about their own joint axes (kg·m²).
    pub i1: f64,
    pub i2: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Actuator / control-direction matrix.
    pub kappa: Matrix2<f64>,
}

impl RobotParams {
    /// Reference preset: m = [5, 2] kg, l = [1, 0.75] m, I = [1.66, 0.37] kg·m²,
    /// rod midpoints as centers of mass, g = 9.81 m/s², κ = I.
    pub fn paper() -> Self {
        Self {
            m1: 5.0,
            m2: 2.0,
            l1: 1.0,
            l2: 0.75,
            lc1: 0.5,
            lc2: 0.375,
            i1: 1.66,
            i2: 0.37,
            gravity: 9.81,
            kappa: Matrix2::identity(),
        }
    }

    /// Same arm with the actuator direction reversed (κ = −I).
    pub fn flipped() -> Self {
        Self {
            kappa: -Matrix2::identity(),
            ..Self::paper()
        }
    }

    /// Same arm with mixed, scaled actuator directions (κ = diag(0.5, −2)).
    pub fn skewed() -> Self {
        Self {
            kappa: Matrix2::new(0.5, 0.0, 0.0, -2.0),
            ..Self::paper()
        }
    }

    /// Largest relative deviation of the link inertias from the slender-rod
    /// value m·l²/3 about the joint axis.
    pub fn slender_rod_deviation(&self) -> f64 {
        let rod1 = self.m1 * self.l1 * self.l1 / 3.0;
        let rod2 = self.m2 * self.l2 * self.l2 / 3.0;
        let d1 = (self.i1 - rod1).abs() / rod1;
        let d2 = (self.i2 - rod2).abs() / rod2;
        d1.max(d2)
    }

    /// Checks the structural invariants: strictly positive masses, lengths
    /// and inertias, centers of mass on the links, invertible κ, and an
    /// inertia matrix that stays positive definite for every configuration.
    pub fn validate(&self) -> Result<(), String> {
        let scalars = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("lc1", self.lc1),
            ("lc2", self.lc2),
            ("I1", self.i1),
            ("I2", self.i2),
        ];
        for (name, value) in scalars {
            if !value.is_finite() || value <= 0.0 {
                return Err(format!("robot.{name} must be finite and > 0, got {value}"));
            }
        }
        if !self.gravity.is_finite() {
            return Err(format!(
                "robot.gravity must be finite, got {}",
                self.gravity
            ));
        }
        if self.lc1 > self.l1 {
            return Err(format!("robot.lc1 = {} exceeds l1 = {}", self.lc1, self.l1));
        }
        if self.lc2 > self.l2 {
            return Err(format!("robot.lc2 = {} exceeds l2 = {}", self.lc2, self.l2));
        }
        if self.kappa.iter().any(|v| !v.is_finite()) {
            return Err("robot.kappa must have finite entries".into());
        }
        let det_kappa = self.kappa.determinant();
        if det_kappa.abs() < 1e-12 {
            return Err(format!(
                "robot.kappa must be invertible (the control direction interval excludes zero), det = {det_kappa}"
            ));
        }
        // M(q) is positive definite for all q iff it is at the worst-case
        // elbow angle: both leading minors stay positive when |cos q2| = 1.
        let coupling = self.m2 * self.l1 * self.lc2;
        let m11_min = self.i1 + self.i2 + self.m2 * self.l1 * self.l1 - 2.0 * coupling;
        let det_min = self.i2 * (self.i1 + self.m2 * self.l1 * self.l1) - coupling * coupling;
        if m11_min <= 0.0 || det_min <= 0.0 {
            return Err(format!(
                "inertia matrix not positive definite for all q (min M11 = {m11_min}, min det = {det_min})"
            ));
        }
        Ok(())
    }
}

/// Joint positions and velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    /// Joint angles (rad).
    pub q: Vector2<f64>,
    /// Joint velocities (rad/s).
    pub dq: Vector2<f64>,
}

impl JointState {
    pub fn new(q: Vector2<f64>, dq: Vector2<f64>) -> Self {
        Self { q, dq }
    }

    /// Non-finite entries are a hard simulation fault.
    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.dq.iter()).all(|v| v.is_finite())
    }
}

/// Inertia matrix M(q). Symmetric positive definite for valid parameters.
pub fn mass_matrix(p: &RobotParams, q: &Vector2<f64>) -> Matrix2<f64> {
    let c2 = q[1].cos();
    let coupling = p.m2 * p.l1 * p.lc2 * c2;
    let m11 = p.i1 + p.i2 + p.m2 * p.l1 * p.l1 + 2.0 * coupling;
    let m12 = p.i2 + coupling;
    Matrix2::new(m11, m12, m12, p.i2)
}

/// Coriolis/centrifugal matrix C(q, q̇) in Christoffel form, so that
/// `Ṁ − 2C` is skew-symmetric.
pub fn coriolis_matrix(p: &RobotParams, q: &Vector2<f64>, dq: &Vector2<f64>) -> Matrix2<f64> {
    let h = p.m2 * p.l1 * p.lc2 * q[1].sin();
    Matrix2::new(-h * dq[1], -h * (dq[0] + dq[1]), h * dq[0], 0.0)
}

/// Gravity torque vector G(q); the gradient of the potential energy.
pub fn gravity_vector(p: &RobotParams, q: &Vector2<f64>) -> Vector2<f64> {
    let g = p.gravity;
    let shoulder = (p.m1 * p.lc1 + p.m2 * p.l1) * g * q[0].cos();
    let elbow = p.m2 * p.lc2 * g * (q[0] + q[1]).cos();
    Vector2::new(shoulder + elbow, elbow)
}

/// Analytic Ṁ = (∂M/∂q₂)·q̇₂. M depends on the configuration only through q₂.
pub fn mass_matrix_rate(p: &RobotParams, q: &Vector2<f64>, dq: &Vector2<f64>) -> Matrix2<f64> {
    let dh = -p.m2 * p.l1 * p.lc2 * q[1].sin() * dq[1];
    Matrix2::new(2.0 * dh, dh, dh, 0.0)
}

/// Solves the 2×2 system `m x = b` by adjugate and determinant.
///
/// Exact closed form, no factorization. A singular `m` cannot arise from
/// validated parameters and finite state; if it does the NaN/Inf result is
/// caught by the simulation's divergence tripwire.
pub fn solve_2x2(m: &Matrix2<f64>, b: &Vector2<f64>) -> Vector2<f64> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    Vector2::new(
        (m[(1, 1)] * b[0] - m[(0, 1)] * b[1]) / det,
        (m[(0, 0)] * b[1] - m[(1, 0)] * b[0]) / det,
    )
}

/// Joint accelerations: q̈ = M(q)⁻¹ (τ − C(q, q̇) q̇ − G(q)).
pub fn forward_dynamics(p: &RobotParams, s: &JointState, tau: &Vector2<f64>) -> Vector2<f64> {
    let m = mass_matrix(p, &s.q);
    let rhs = tau - coriolis_matrix(p, &s.q, &s.dq) * s.dq - gravity_vector(p, &s.q);
    solve_2x2(&m, &rhs)
}

/// Kinetic and potential energy (J). The potential is zero with both links
/// horizontal, and `gravity_vector` is its exact gradient.
pub fn mechanical_energy(p: &RobotParams, s: &JointState) -> (f64, f64) {
    let m = mass_matrix(p, &s.q);
    let kinetic = 0.5 * s.dq.dot(&(m * s.dq));
    let potential = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * s.q[0].sin()
        + p.m2 * p.lc2 * p.gravity * (s.q[0] + s.q[1]).sin();
    (kinetic, potential)
}
