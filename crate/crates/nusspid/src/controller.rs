//! Nussbaum-gain adaptive PID law and its fixed-gain baseline.
//!
//! The control input collapses three linked PID terms into one expression on
//! the generalized error Ψ = 2γe + γ²∫e + ė:
//!
//! ```text
//! u = −(k_Δ + κ_Δ(t)) N(ζ) Ψ,        N(ζ) = ζ² cos ζ
//! κ_Δ = −α ψ̂ᵀφ(x)                    (RBF-driven adaptive gain)
//! ψ̂̇  = −Γ (α‖Ψ‖² φ(x) + σ ψ̂)        (σ-leaky weight update)
//! ζ̇  = (k_Δ + κ_Δ) ‖Ψ‖²              (Nussbaum argument update)
//! ```
//!
//! The gain linking k_π = 2γ k_Δ, k_ι = γ² k_Δ (and the same for the κ
//! analogs) keeps s² + 2γs + γ² Hurwitz, which is why the collapsed form and
//! the expanded three-term form are identical; the property suite checks the
//! identity numerically. The sign of the total gain k_Δ + κ_Δ is not
//! restricted and no clamping is applied.
//!
//! Everything here is a pure function of its arguments: the simulation loop
//! owns all controller state, so RK4 sub-stages see exact evaluations rather
//! than sample-and-hold values.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::dynamics::JointState;
use crate::rbf::{network_output, RbfLayout};

/// Which control law a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    /// The adaptive law above.
    NussbaumPid,
    /// u = k_Δ Ψ: the collapsed law with N frozen at −1 and κ_Δ = 0.
    FixedPid,
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ControllerKind::NussbaumPid => write!(f, "nussbaum-pid"),
            ControllerKind::FixedPid => write!(f, "fixed-pid"),
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nussbaum-pid" => Ok(ControllerKind::NussbaumPid),
            "fixed-pid" => Ok(ControllerKind::FixedPid),
            other => Err(format!(
                "unknown controller kind `{other}` (expected nussbaum-pid or fixed-pid)"
            )),
        }
    }
}

/// Controller gains and the basis layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    /// Error-filter rate γ > 0 (1/s).
    pub gamma: f64,
    /// Constant derivative gain k_Δ > 0.
    pub k_delta: f64,
    /// Design scalar α > 0 shared by the gain and the weight update.
    pub alpha: f64,
    /// Leakage σ > 0.
    pub sigma: f64,
    /// Adaptation gain Γ as a positive scalar times identity (the default
    /// realization).
    pub adapt_gain: f64,
    /// Optional full-matrix Γ = Γᵀ > 0 of size nodes × nodes; overrides the
    /// scalar when present.
    pub adapt_gain_matrix: Option<DMatrix<f64>>,
    /// Initial Nussbaum argument ζ(0).
    pub zeta0: f64,
    pub layout: RbfLayout,
}

impl ControllerParams {
    /// Reference gains: α = 100, Γ = 100, k_Δ = 0.1, γ = 0.5, σ = 0.1,
    /// ζ(0) = 0 so that N(0) = 0 and u(0) = 0.
    pub fn paper() -> Self {
        Self {
            gamma: 0.5,
            k_delta: 0.1,
            alpha: 100.0,
            sigma: 0.1,
            adapt_gain: 100.0,
            adapt_gain_matrix: None,
            zeta0: 0.0,
            layout: RbfLayout::default(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positives = [
            ("gamma", self.gamma),
            ("k_delta", self.k_delta),
            ("alpha", self.alpha),
            ("sigma", self.sigma),
            ("adapt_gain", self.adapt_gain),
        ];
        for (name, value) in positives {
            if !value.is_finite() || value <= 0.0 {
                return Err(format!(
                    "controller.{name} must be finite and > 0, got {value}"
                ));
            }
        }
        if let Some(gain) = &self.adapt_gain_matrix {
            if gain.nrows() != self.layout.nodes || gain.ncols() != self.layout.nodes {
                return Err(format!(
                    "controller.adapt_gain matrix must be {n}x{n}, got {}x{}",
                    gain.nrows(),
                    gain.ncols(),
                    n = self.layout.nodes
                ));
            }
            if gain.iter().any(|v| !v.is_finite()) {
                return Err("controller.adapt_gain matrix must have finite entries".into());
            }
            if (gain - gain.transpose()).abs().max() > 1e-12 {
                return Err("controller.adapt_gain matrix must be symmetric".into());
            }
            if gain.clone().cholesky().is_none() {
                return Err("controller.adapt_gain matrix must be positive definite".into());
            }
        }
        if !self.zeta0.is_finite() {
            return Err(format!(
                "controller.zeta0 must be finite, got {}",
                self.zeta0
            ));
        }
        self.layout.validate()
    }
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self::paper()
    }
}

/// Adaptive state owned by the simulation loop: weights ψ̂, Nussbaum
/// argument ζ and the error integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub psi_hat: DVector<f64>,
    pub zeta: f64,
    pub e_int: Vector2<f64>,
}

impl ControllerState {
    /// ψ̂(0) = 0, ζ(0) = zeta0, ∫e(0) = 0.
    pub fn initial(params: &ControllerParams) -> Self {
        Self {
            psi_hat: DVector::zeros(params.layout.nodes),
            zeta: params.zeta0,
            e_int: Vector2::zeros(),
        }
    }
}

/// Position error, velocity error and the generalized variable Ψ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingError {
    pub e: Vector2<f64>,
    pub de: Vector2<f64>,
    pub psi: Vector2<f64>,
}

impl TrackingError {
    pub fn new(gamma: f64, e: Vector2<f64>, e_int: Vector2<f64>, de: Vector2<f64>) -> Self {
        Self {
            e,
            de,
            psi: generalized_error(gamma, &e, &e_int, &de),
        }
    }
}

/// Ψ = 2γe + γ²∫e + ė.
pub fn generalized_error(
    gamma: f64,
    e: &Vector2<f64>,
    e_int: &Vector2<f64>,
    de: &Vector2<f64>,
) -> Vector2<f64> {
    2.0 * gamma * e + gamma * gamma * e_int + de
}

/// N(ζ) = ζ² cos ζ. N(0) = 0.
pub fn nussbaum(zeta: f64) -> f64 {
    zeta * zeta * zeta.cos()
}

/// K_N(ζ) = −N(ζ), the gain the three-term form multiplies.
pub fn nussbaum_gain(zeta: f64) -> f64 {
    -nussbaum(zeta)
}

/// Analytic antiderivative F(v) = ∫₀ᵛ ζ² cos ζ dζ = v² sin v + 2v cos v − 2 sin v.
pub fn nussbaum_antiderivative(v: f64) -> f64 {
    v * v * v.sin() + 2.0 * v * v.cos() - 2.0 * v.sin()
}

/// Running mean (1/v)∫₀ᵛ N(ζ)dζ. Oscillates without bound in both
/// directions as v grows, which is the defining Nussbaum property.
pub fn nussbaum_mean(v: f64) -> f64 {
    debug_assert!(v > 0.0);
    nussbaum_antiderivative(v) / v
}

/// κ_Δ = −α ψ̂ᵀφ. May be negative; the total gain k_Δ + κ_Δ is not
/// sign-restricted.
pub fn kappa_delta(params: &ControllerParams, psi_hat: &DVector<f64>, phi: &DVector<f64>) -> f64 {
    -params.alpha * network_output(psi_hat, phi)
}

/// u = −(k_Δ + κ_Δ) N(ζ) Ψ.
pub fn control_input(
    params: &ControllerParams,
    psi: &Vector2<f64>,
    kappa_delta: f64,
    zeta: f64,
) -> Vector2<f64> {
    -(params.k_delta + kappa_delta) * nussbaum(zeta) * psi
}

/// The constant and adaptive PID gains linked through γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkedGains {
    pub k_pi: f64,
    pub k_iota: f64,
    pub k_delta: f64,
    pub kappa_pi: f64,
    pub kappa_iota: f64,
    pub kappa_delta: f64,
}

/// k_π = 2γ k_Δ, k_ι = γ² k_Δ and the κ analogs.
pub fn linked_gains(params: &ControllerParams, kappa_delta: f64) -> LinkedGains {
    let g = params.gamma;
    LinkedGains {
        k_pi: 2.0 * g * params.k_delta,
        k_iota: g * g * params.k_delta,
        k_delta: params.k_delta,
        kappa_pi: 2.0 * g * kappa_delta,
        kappa_iota: g * g * kappa_delta,
        kappa_delta,
    }
}

/// The expanded three-term control law:
/// u = (k_π + κ_π)K_N e + (k_ι + κ_ι)K_N ∫e + (k_Δ + κ_Δ)K_N ė.
/// Algebraically identical to [`control_input`] under the gain linking; kept
/// as the second route for the equivalence check.
pub fn control_input_linked(
    params: &ControllerParams,
    e: &Vector2<f64>,
    e_int: &Vector2<f64>,
    de: &Vector2<f64>,
    kappa_delta: f64,
    zeta: f64,
) -> Vector2<f64> {
    let gains = linked_gains(params, kappa_delta);
    let k_n = nussbaum_gain(zeta);
    (gains.k_pi + gains.kappa_pi) * k_n * e
        + (gains.k_iota + gains.kappa_iota) * k_n * e_int
        + (gains.k_delta + gains.kappa_delta) * k_n * de
}

/// ψ̂̇ = −Γ(α‖Ψ‖²φ + σψ̂).
pub fn weight_derivative(
    params: &ControllerParams,
    psi: &Vector2<f64>,
    phi: &DVector<f64>,
    psi_hat: &DVector<f64>,
) -> DVector<f64> {
    let psi_sq = psi.norm_squared();
    let driven = params.alpha * psi_sq * phi + params.sigma * psi_hat;
    match &params.adapt_gain_matrix {
        Some(gain) => -(gain * driven),
        None => -params.adapt_gain * driven,
    }
}

/// ζ̇ = Ψᵀ(k_Δ + κ_Δ)Ψ = (k_Δ + κ_Δ)‖Ψ‖².
pub fn zeta_derivative(params: &ControllerParams, psi: &Vector2<f64>, kappa_delta: f64) -> f64 {
    (params.k_delta + kappa_delta) * psi.norm_squared()
}

/// Fixed-gain baseline u = k_Δ(2γe + γ²∫e + ė), used for the sign-flip
/// comparison.
pub fn fixed_pid_input(
    params: &ControllerParams,
    e: &Vector2<f64>,
    e_int: &Vector2<f64>,
    de: &Vector2<f64>,
) -> Vector2<f64> {
    params.k_delta * generalized_error(params.gamma, e, e_int, de)
}

/// Network input x = [eᵀ, ėᵀ, qᵀ, Ψᵀ], 8-dimensional in that exact order.
pub fn nn_input(
    e: &Vector2<f64>,
    de: &Vector2<f64>,
    q: &Vector2<f64>,
    psi: &Vector2<f64>,
) -> DVector<f64> {
    DVector::from_vec(vec![e[0], e[1], de[0], de[1], q[0], q[1], psi[0], psi[1]])
}

/// One controller evaluation: the input to apply plus the state derivatives
/// the integrator needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlEval {
    pub err: TrackingError,
    pub u: Vector2<f64>,
    pub kappa_delta: f64,
    pub n_zeta: f64,
    pub psi_hat_dot: DVector<f64>,
    pub zeta_dot: f64,
}

/// Evaluates the selected law at one instant. Pure in all arguments; fixed-pid
/// runs freeze ζ at its initial value and carry zero adaptive rates.
pub fn evaluate(
    params: &ControllerParams,
    kind: ControllerKind,
    joint: &JointState,
    state: &ControllerState,
    qd: &Vector2<f64>,
    dqd: &Vector2<f64>,
) -> ControlEval {
    let err = TrackingError::new(params.gamma, qd - joint.q, state.e_int, dqd - joint.dq);
    match kind {
        ControllerKind::NussbaumPid => {
            let x = nn_input(&err.e, &err.de, &joint.q, &err.psi);
            let phi = params.layout.basis_vector(&x);
            let kd = kappa_delta(params, &state.psi_hat, &phi);
            ControlEval {
                err,
                u: control_input(params, &err.psi, kd, state.zeta),
                kappa_delta: kd,
                n_zeta: nussbaum(state.zeta),
                psi_hat_dot: weight_derivative(params, &err.psi, &phi, &state.psi_hat),
                zeta_dot: zeta_derivative(params, &err.psi, kd),
            }
        }
        ControllerKind::FixedPid => ControlEval {
            err,
            u: fixed_pid_input(params, &err.e, &state.e_int, &err.de),
            kappa_delta: 0.0,
            n_zeta: nussbaum(state.zeta),
            psi_hat_dot: DVector::zeros(state.psi_hat.len()),
            zeta_dot: 0.0,
        },
    }
}
