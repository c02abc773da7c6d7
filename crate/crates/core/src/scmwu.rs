//! Multiplicative weights over the trace-one slice of a symmetric cone.
//!
//! The learner plays `p⁽ᵗ⁾ = exp(−η Σ_{τ<t} m⁽ᵗ⁾) / Tr(·)` and only stores the
//! running loss sum. Against any loss sequence with `‖m⁽ᵗ⁾‖∞ ≤ 1` it
//! guarantees
//!
//! ```text
//! Σₜ m⁽ᵗ⁾ • p⁽ᵗ⁾ ≤ λ_min(Σₜ m⁽ᵗ⁾) + ηT + ln(r)/η.
//! ```

use alloc::sync::Arc;

use thiserror::Error;

use crate::eja::{ConeDescriptor, EjaElement, EjaError};

/// Slack on the unit loss-norm precondition.
pub const LOSS_NORM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScmwuError {
    #[error("step size {0} outside (0, 1]")]
    EtaOutOfRange(f64),
    #[error("loss has infinity norm {0}, exceeding 1")]
    LossTooLarge(f64),
    #[error(transparent)]
    Eja(#[from] EjaError),
}

#[derive(Debug, Clone)]
pub struct ScmwuState {
    eta: f64,
    cumulative: EjaElement,
    current: EjaElement,
    steps: u64,
}

impl ScmwuState {
    /// Starts at `p⁽¹⁾ = e / r`.
    pub fn new(cone: Arc<ConeDescriptor>, eta: f64) -> Result<Self, ScmwuError> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(ScmwuError::EtaOutOfRange(eta));
        }
        let r = cone.rank() as f64;
        let current = EjaElement::identity(cone.clone()).scale(1.0 / r);
        Ok(Self { eta, cumulative: EjaElement::zeros(cone), current, steps: 0 })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn step_count(&self) -> u64 {
        self.steps
    }

    pub fn cone(&self) -> &Arc<ConeDescriptor> {
        self.cumulative.cone()
    }

    pub fn cumulative_loss(&self) -> &EjaElement {
        &self.cumulative
    }

    /// The trace-one iterate for the next round.
    pub fn current(&self) -> &EjaElement {
        &self.current
    }

    pub fn observe(&mut self, loss: &EjaElement) -> Result<(), ScmwuError> {
        let norm = loss.inf_norm();
        if norm > 1.0 + LOSS_NORM_SLACK {
            return Err(ScmwuError::LossTooLarge(norm));
        }
        self.accumulate(loss, 1.0).map(|_| ())
    }

    /// Feeds `scale · residual` without checking its norm and returns
    /// `(λ_min, λ_max)` of `residual`; the caller bounds the norm itself.
    pub(crate) fn accumulate(&mut self, residual: &EjaElement, scale: f64) -> Result<(f64, f64), ScmwuError> {
        let (range, residual_range) = self.cumulative.axpy_with_ranges(scale, residual)?;
        self.cumulative.normalized_exp_into(-self.eta, range, &mut self.current)?;
        self.steps += 1;
        Ok(residual_range)
    }
}
