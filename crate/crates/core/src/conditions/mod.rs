//! Isotropic-curvature functionals, their frame-space minimization, and the
//! NIC / PIC2 / pinching checkers.

mod checks;
mod minimize;

pub use checks::{
    check_nic, check_pic2, check_quarter_pinched, holonomy_zero_invariance, HolonomyGroup,
    NicOutcome, Pic2Outcome, PinchOutcome, WEIGHT_GRID_SIZE,
};
pub use minimize::{
    euclidean_gradient, raw_value, riemannian_gradient,
    minimize_frame, minimize_frame_warm, minimize_from, ConditionReport, LocalResult,
    MinimizeOpts, Objective,
};

use crate::error::{Error, Result};
use crate::frames::{cyclic_frames, lift_frame, Frame, Weights};
use crate::models::pad_euclidean;
use crate::tensor::CurvatureTensor;

/// The five curvature values a 4-frame enters the functionals through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTerms {
    pub k13: f64,
    pub k14: f64,
    pub k23: f64,
    pub k24: f64,
    pub r1234: f64,
}

impl FrameTerms {
    pub fn of(r: &CurvatureTensor, frame: &Frame) -> Result<Self> {
        frame.require_four()?;
        r.require_dim(frame.dim())?;
        let e = |a: usize| frame.row(a);
        let k = |a: usize, b: usize| r.eval(e(a), e(b), e(a), e(b));
        Ok(Self {
            k13: k(0, 2),
            k14: k(0, 3),
            k23: k(1, 2),
            k24: k(1, 3),
            r1234: r.eval(e(0), e(1), e(2), e(3)),
        })
    }

    /// `K13 + l^2 K14 + m^2 K23 + l^2 m^2 K24 - 2 l m R1234`.
    pub fn lambda_mu(&self, w: Weights) -> f64 {
        let (l, m) = (w.lambda(), w.mu());
        let (l2, m2) = (l * l, m * m);
        self.k13 + l2 * self.k14 + m2 * self.k23 + l2 * m2 * self.k24 - 2.0 * l * m * self.r1234
    }

    pub fn isotropic(&self) -> f64 {
        self.lambda_mu(Weights::unit())
    }
}

/// `u = R1313 + R1414 + R2323 + R2424 - 2 R1234` on a 4-frame.
pub fn isotropic_u(r: &CurvatureTensor, frame: &Frame) -> Result<f64> {
    Ok(FrameTerms::of(r, frame)?.isotropic())
}

pub fn lambda_mu_q(r: &CurvatureTensor, frame: &Frame, w: Weights) -> Result<f64> {
    Ok(FrameTerms::of(r, frame)?.lambda_mu(w))
}

/// `|Q_{lambda,mu}(R, F) - u(R x R^2, lift(F))|`.
pub fn lift_identity_check(r: &CurvatureTensor, frame: &Frame, w: Weights) -> Result<f64> {
    let lhs = lambda_mu_q(r, frame, w)?;
    let rhs = isotropic_u(&pad_euclidean(r, 2), &lift_frame(frame, w)?)?;
    Ok((lhs - rhs).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicSum {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Sum of `Q_{lambda,mu}` over the three cyclic frames against
/// `(1 + mu^2) [K12 + K13 + K23 + lambda^2 (K14 + K24 + K34)]`.
/// The mixed terms cancel by the first Bianchi identity.
pub fn cyclic_sum_check(r: &CurvatureTensor, frame: &Frame, w: Weights) -> Result<CyclicSum> {
    let lhs = cyclic_frames(frame)?
        .iter()
        .map(|f| lambda_mu_q(r, f, w))
        .sum::<Result<f64>>()?;
    let e = |a: usize| frame.row(a);
    let k = |a: usize, b: usize| r.eval(e(a), e(b), e(a), e(b));
    let (l2, m2) = (w.lambda().powi(2), w.mu().powi(2));
    let rhs = (1.0 + m2) * (k(0, 1) + k(0, 2) + k(1, 2) + l2 * (k(0, 3) + k(1, 3) + k(2, 3)));
    Ok(CyclicSum {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

pub(crate) fn require_same_dim(r: &CurvatureTensor, frame: &Frame) -> Result<()> {
    if r.dim() != frame.dim() {
        return Err(Error::DimensionMismatch {
            expected: r.dim(),
            found: frame.dim(),
        });
    }
    Ok(())
}
