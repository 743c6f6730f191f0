use crate::error::{Error, Result};
use crate::frames::{block_action, lift_frame, random_block_rotation, random_unitary, unitary_action, Frame, Weights};
use crate::models::{complex_structure, pad_euclidean};
use crate::tensor::CurvatureTensor;

use super::minimize::{minimize_frame, minimize_frame_warm, minimize_from, restart_seed};
use super::{isotropic_u, ConditionReport, FrameTerms, MinimizeOpts, Objective};

/// Points per axis of the `(lambda, mu)` consistency grid.
pub const WEIGHT_GRID_SIZE: usize = 21;
/// Alternating frame/weight rounds per restart in the lift search.
const LIFT_ROUNDS: usize = 3;
/// Restarts spent on the lift search.
const LIFT_RESTARTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct NicOutcome {
    pub holds: bool,
    /// `|min| <= margin`: the tensor sits on the boundary of the cone.
    pub boundary: bool,
    pub report: ConditionReport,
}

/// Nonnegative isotropic curvature: `u >= -margin` over all found frames.
pub fn check_nic(r: &CurvatureTensor, opts: &MinimizeOpts) -> Result<NicOutcome> {
    let report = minimize_frame(r, Objective::Isotropic, opts)?;
    Ok(NicOutcome {
        holds: report.min_value >= -opts.margin,
        boundary: report.min_value.abs() <= opts.margin,
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pic2Outcome {
    pub holds: bool,
    pub boundary: bool,
    /// Minimization of `u` on `R x R^2` over 4-frames of `R^{n+2}`.
    pub report: ConditionReport,
    /// Smallest `Q_{lambda,mu}` found over frames of `R^n` and the weight grid.
    pub lift_min: f64,
    pub lift_weights: Weights,
    pub lift_frame: Frame,
}

fn best_on_grid(terms: &FrameTerms, grid: &[Weights]) -> (f64, Weights) {
    grid.iter()
        .map(|&w| (terms.lambda_mu(w), w))
        .fold((f64::INFINITY, Weights::unit()), |acc, x| if x.0 < acc.0 { x } else { acc })
}

/// Searches the `(lambda, mu)` family: alternately minimize `Q` over frames
/// for fixed weights and pick the best grid weight for the current frame.
fn lift_search(r: &CurvatureTensor, opts: &MinimizeOpts) -> Result<(f64, Weights, Frame)> {
    let grid = Weights::grid(WEIGHT_GRID_SIZE);
    let n = r.dim();
    let restarts = opts.restarts.min(LIFT_RESTARTS);
    let mut best: Option<(f64, Weights, Frame)> = None;
    for idx in 0..restarts {
        let mut frame = Frame::random4(restart_seed(opts.seed ^ 0x5bd1_e995, idx), n)?;
        let (mut val, mut w) = best_on_grid(&FrameTerms::of(r, &frame)?, &grid);
        for _ in 0..LIFT_ROUNDS {
            let local = minimize_from(r, Objective::LambdaMu(w), &frame, opts)?;
            frame = local.frame;
            let (v, w2) = best_on_grid(&FrameTerms::of(r, &frame)?, &grid);
            let settled = w2 == w;
            val = v;
            w = w2;
            if settled {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| val < b.0) {
            best = Some((val, w, frame));
        }
    }
    Ok(best.expect("at least one lift restart"))
}

/// `R x R^2` has nonnegative isotropic curvature.
///
/// The lifted frame of the best `(lambda, mu)` candidate seeds the first
/// restart, so the reported PIC2 minimum never exceeds the lift minimum by
/// more than round-off.
pub fn check_pic2(r: &CurvatureTensor, opts: &MinimizeOpts) -> Result<Pic2Outcome> {
    opts.validate()?;
    if r.dim() < 4 {
        return Err(Error::InvalidDimension(r.dim(), "PIC2 needs n >= 4"));
    }
    let (lift_min, lift_weights, lift_frame_n) = lift_search(r, opts)?;
    let padded = pad_euclidean(r, 2);
    let warm = lift_frame(&lift_frame_n, lift_weights)?;
    let mut report = minimize_frame_warm(&padded, Objective::Isotropic, opts, &[warm])?;
    report.argmin_weights = Some(lift_weights);
    Ok(Pic2Outcome {
        holds: report.min_value >= -opts.margin,
        boundary: report.min_value.abs() <= opts.margin,
        report,
        lift_min,
        lift_weights,
        lift_frame: lift_frame_n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinchOutcome {
    pub holds: bool,
    pub kmin: f64,
    pub kmax: f64,
    pub min_report: ConditionReport,
    pub max_report: ConditionReport,
}

/// Weak 1/4-pinching: `0 <= K(p1) <= 4 K(p2)`, i.e. `Kmin >= 0` and
/// `Kmax <= 4 Kmin`, both up to the margin.
pub fn check_quarter_pinched(r: &CurvatureTensor, opts: &MinimizeOpts) -> Result<PinchOutcome> {
    let min_report = minimize_frame(r, Objective::Sectional, opts)?;
    let max_report = minimize_frame(r, Objective::NegSectional, opts)?;
    let kmin = min_report.min_value;
    let kmax = -max_report.min_value;
    Ok(PinchOutcome {
        holds: kmin >= -opts.margin && kmax <= 4.0 * kmin + opts.margin,
        kmin,
        kmax,
        min_report,
        max_report,
    })
}

/// Holonomy groups acting on frames of the model spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum HolonomyGroup {
    /// `U(m)` on `R^{2m}`: orthogonal maps commuting with `J`.
    Unitary { m: usize },
    /// Independent rotations of consecutive coordinate blocks.
    ProductBlocks { blocks: Vec<usize> },
}

impl HolonomyGroup {
    fn check_compatible(&self, r: &CurvatureTensor) -> Result<()> {
        const TOL: f64 = 1e-9;
        let n = r.dim();
        match self {
            HolonomyGroup::Unitary { m } => {
                if 2 * m != n {
                    return Err(Error::IncompatibleGroup(format!("U({m}) on R^{n}")));
                }
                // R must be J-invariant: R(Je_i, Je_j, Je_k, Je_l) = R_ijkl
                let j = complex_structure(*m);
                let cols: Vec<Vec<f64>> = (0..n).map(|c| (0..n).map(|i| j[i * n + c]).collect()).collect();
                let rotated = r.change_basis(&cols)?;
                let diff = rotated.max_diff(r)?;
                if diff > TOL {
                    return Err(Error::IncompatibleGroup(format!(
                        "tensor is not J-invariant (deviation {diff:e})"
                    )));
                }
            }
            HolonomyGroup::ProductBlocks { blocks } => {
                if blocks.iter().sum::<usize>() != n || blocks.contains(&0) {
                    return Err(Error::IncompatibleGroup(format!("blocks {blocks:?} on R^{n}")));
                }
                let mut block_of = Vec::with_capacity(n);
                for (b, &size) in blocks.iter().enumerate() {
                    block_of.extend(std::iter::repeat_n(b, size));
                }
                let comps = r.components();
                let mut worst = 0.0_f64;
                for (off, v) in comps.iter().enumerate() {
                    let idx = [off / (n * n * n), (off / (n * n)) % n, (off / n) % n, off % n];
                    if idx.iter().any(|&i| block_of[i] != block_of[idx[0]]) {
                        worst = worst.max(v.abs());
                    }
                }
                if worst > TOL {
                    return Err(Error::IncompatibleGroup(format!(
                        "tensor is not a product for blocks {blocks:?} (mixed component {worst:e})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, seed: u64) -> Result<Vec<f64>> {
        match self {
            HolonomyGroup::Unitary { m } => random_unitary(seed, *m),
            HolonomyGroup::ProductBlocks { blocks } => random_block_rotation(seed, blocks),
        }
    }

    fn act(&self, frame: &Frame, g: &[f64]) -> Result<Frame> {
        match self {
            HolonomyGroup::Unitary { .. } => unitary_action(frame, g),
            HolonomyGroup::ProductBlocks { blocks } => block_action(frame, g, blocks),
        }
    }
}

/// Tolerance on `|u(F0)|` for a frame to count as a zero frame.
pub const ZERO_FRAME_TOL: f64 = 1e-9;

/// Max `|u|` over `samples` random holonomy images of the zero frame `f0`.
pub fn holonomy_zero_invariance(
    r: &CurvatureTensor,
    f0: &Frame,
    group: &HolonomyGroup,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let u0 = isotropic_u(r, f0)?;
    if !(u0.abs() < ZERO_FRAME_TOL) {
        return Err(Error::NotZeroFrame(u0));
    }
    group.check_compatible(r)?;
    let mut worst = 0.0_f64;
    for s in 0..samples {
        let g = group.sample(restart_seed(seed, s))?;
        let u = isotropic_u(r, &group.act(f0, &g)?)?;
        worst = worst.max(u.abs());
    }
    Ok(worst)
}
