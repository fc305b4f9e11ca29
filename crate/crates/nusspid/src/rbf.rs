//! Linear-in-parameter Gaussian radial basis expansion.
//!
//! The approximator is F(x, ψ) = ψᵀφ(x) with fixed centers and a shared
//! isotropic width. Centers are placed on the diagonal of the input
//! hypercube: node j has every coordinate equal to the same scalar, evenly
//! spaced over `[center_min, center_max]`. Twenty nodes over [-12.5, 12.5]
//! with width 1 and an 8-dimensional input is the reference layout.

use nalgebra::DVector;

/// Geometry of the basis: node count, center span, width, input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfLayout {
    pub nodes: usize,
    pub center_min: f64,
    pub center_max: f64,
    /// Shared covariance scale; the basis is exp(−½‖x − c‖²/width).
    pub width: f64,
    pub input_dim: usize,
}

impl Default for RbfLayout {
    fn default() -> Self {
        Self {
            nodes: 20,
            center_min: -12.5,
            center_max: 12.5,
            width: 1.0,
            input_dim: 8,
        }
    }
}

impl RbfLayout {
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes < 1 {
            return Err("network.nodes must be >= 1".into());
        }
        if !(self.center_min.is_finite() && self.center_max.is_finite())
            || self.center_min >= self.center_max
        {
            return Err(format!(
                "network center span must satisfy center_min < center_max, got [{}, {}]",
                self.center_min, self.center_max
            ));
        }
        if !self.width.is_finite() || self.width <= 0.0 {
            return Err(format!("network.width must be > 0, got {}", self.width));
        }
        if self.input_dim < 1 {
            return Err("network input dimension must be >= 1".into());
        }
        Ok(())
    }

    /// Shared coordinate of center j. A single node sits at the midpoint of
    /// the span.
    pub fn center_coordinate(&self, node: usize) -> f64 {
        debug_assert!(node < self.nodes);
        if self.nodes == 1 {
            return 0.5 * (self.center_min + self.center_max);
        }
        self.center_min
            + (self.center_max - self.center_min) * node as f64 / (self.nodes - 1) as f64
    }

    /// Full center vectors, one per node.
    pub fn centers(&self) -> Vec<DVector<f64>> {
        (0..self.nodes)
            .map(|j| DVector::from_element(self.input_dim, self.center_coordinate(j)))
            .collect()
    }

    /// Basis vector φ(x): component j is exp(−½‖x − c_j‖²/width).
    /// Every component lies in (0, 1], so ‖φ‖ ≤ √nodes.
    pub fn basis_vector(&self, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.input_dim);
        DVector::from_fn(self.nodes, |j, _| {
            let c = self.center_coordinate(j);
            let dist_sq: f64 = x.iter().map(|xi| (xi - c) * (xi - c)).sum();
            (-0.5 * dist_sq / self.width).exp()
        })
    }
}

/// Network output ψᵀφ. Mismatched lengths are a programming fault.
pub fn network_output(psi_hat: &DVector<f64>, phi: &DVector<f64>) -> f64 {
    assert_eq!(
        psi_hat.len(),
        phi.len(),
        "weight/basis length mismatch: {} vs {}",
        psi_hat.len(),
        phi.len()
    );
    psi_hat.dot(phi)
}
