//! Multistart Riemannian gradient descent over orthonormal frames.
//!
//! The objectives are sums of terms `c R(v_a, v_b, v_c, v_d)` in the frame
//! rows. The Euclidean gradient is projected onto the tangent space of the
//! Stiefel manifold, `xi = G - sym(G F^T) F`, and steps are retracted by
//! Gram–Schmidt. Step lengths come from a Barzilai–Borwein guess with
//! Armijo backtracking, so accepted steps never increase the objective.
//!
//! Multistart over a compact nonconvex search space only ever gives an upper
//! bound on the true minimum; reports are heuristic certificates.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{gram_schmidt, Frame, Weights};
use crate::tensor::CurvatureTensor;

use super::{require_same_dim, FrameTerms};

type Rows = Vec<Vec<f64>>;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `u` over 4-frames.
    Isotropic,
    /// Sectional curvature over 2-frames.
    Sectional,
    /// Negated sectional curvature; its minimum is `-max K`.
    NegSectional,
    /// `Q_{lambda,mu}` over 4-frames.
    LambdaMu(Weights),
}

impl Objective {
    pub fn frame_len(&self) -> usize {
        match self {
            Objective::Sectional | Objective::NegSectional => 2,
            _ => 4,
        }
    }

    fn terms(&self) -> Vec<(f64, [usize; 4])> {
        match *self {
            Objective::Sectional => vec![(1.0, [0, 1, 0, 1])],
            Objective::NegSectional => vec![(-1.0, [0, 1, 0, 1])],
            Objective::Isotropic => Self::LambdaMu(Weights::unit()).terms(),
            Objective::LambdaMu(w) => {
                let (l, m) = (w.lambda(), w.mu());
                vec![
                    (1.0, [0, 2, 0, 2]),
                    (l * l, [0, 3, 0, 3]),
                    (m * m, [1, 2, 1, 2]),
                    (l * l * m * m, [1, 3, 1, 3]),
                    (-2.0 * l * m, [0, 1, 2, 3]),
                ]
            }
        }
    }

    /// Direct evaluation on a frame of the right length.
    pub fn value(&self, r: &CurvatureTensor, frame: &Frame) -> Result<f64> {
        require_same_dim(r, frame)?;
        if frame.len() != self.frame_len() {
            return Err(Error::InvalidDimension(frame.len(), "frame length does not match objective"));
        }
        match *self {
            Objective::Sectional => Ok(r.eval(frame.row(0), frame.row(1), frame.row(0), frame.row(1))),
            Objective::NegSectional => {
                Ok(-r.eval(frame.row(0), frame.row(1), frame.row(0), frame.row(1)))
            }
            Objective::Isotropic => Ok(FrameTerms::of(r, frame)?.isotropic()),
            Objective::LambdaMu(w) => Ok(FrameTerms::of(r, frame)?.lambda_mu(w)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::Isotropic => "isotropic",
            Objective::Sectional => "sectional",
            Objective::NegSectional => "neg-sectional",
            Objective::LambdaMu(_) => "lambda-mu",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOpts {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_tol: f64,
    pub grad_tol: f64,
    pub seed: u64,
    /// Decision margin used by the checkers.
    pub margin: f64,
}

impl Default for MinimizeOpts {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 500,
            step_tol: 1e-10,
            grad_tol: 1e-8,
            seed: 0,
            margin: 1e-7,
        }
    }
}

impl MinimizeOpts {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidOptions("restarts and max_iters must be positive".into()));
        }
        if !positive(self.step_tol) || !positive(self.grad_tol) || !positive(self.margin) {
            return Err(Error::InvalidOptions(format!(
                "tolerances must be positive and finite (step {}, grad {}, margin {})",
                self.step_tol, self.grad_tol, self.margin
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub min_value: f64,
    pub argmin_frame: Frame,
    pub argmin_weights: Option<Weights>,
    pub restarts: usize,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub seed: u64,
    /// Restart index that produced the minimum.
    pub best_restart: usize,
}

/// Result of a single local descent.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub frame: Frame,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

/// Value and Riemannian gradient at a frame, via one partial contraction.
struct Evaluator<'a> {
    r: &'a CurvatureTensor,
    terms: Vec<(f64, [usize; 4])>,
}

impl Evaluator<'_> {
    fn value(&self, rows: &[Vec<f64>]) -> f64 {
        let refs: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
        let p = self.r.contract_last3(&refs);
        self.value_from(&p, rows)
    }

    fn value_from(&self, p: &[f64], rows: &[Vec<f64>]) -> f64 {
        let n = self.r.dim();
        let m = rows.len();
        let pidx = |i: usize, b: usize, c: usize, d: usize| ((i * m + b) * m + c) * m + d;
        self.terms
            .iter()
            .map(|&(coef, [a, b, c, d])| {
                coef * (0..n).map(|i| rows[a][i] * p[pidx(i, b, c, d)]).sum::<f64>()
            })
            .sum()
    }

    /// Returns `(value, riemannian_gradient)`.
    fn value_and_grad(&self, rows: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
        let n = self.r.dim();
        let m = rows.len();
        let refs: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
        let p = self.r.contract_last3(&refs);
        let pidx = |i: usize, b: usize, c: usize, d: usize| ((i * m + b) * m + c) * m + d;
        let mut grad = vec![vec![0.0; n]; m];
        for &(coef, [a, b, c, d]) in &self.terms {
            for i in 0..n {
                // slot derivatives via the pair and antisymmetry relations
                grad[a][i] += coef * p[pidx(i, b, c, d)];
                grad[b][i] -= coef * p[pidx(i, a, c, d)];
                grad[c][i] += coef * p[pidx(i, d, a, b)];
                grad[d][i] -= coef * p[pidx(i, c, a, b)];
            }
        }
        let value = self.value_from(&p, rows);
        (value, tangent_projection(rows, grad))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `G - sym(G F^T) F` on row-stacked frames.
fn tangent_projection(rows: &[Vec<f64>], grad: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let m = rows.len();
    let gf: Vec<Vec<f64>> = grad
        .iter()
        .map(|g| rows.iter().map(|f| dot(g, f)).collect())
        .collect();
    let mut out = grad;
    for a in 0..m {
        for b in 0..m {
            let s = 0.5 * (gf[a][b] + gf[b][a]);
            out[a].iter_mut().zip(&rows[b]).for_each(|(x, y)| *x -= s * y);
        }
    }
    out
}

fn frob_norm(v: &[Vec<f64>]) -> f64 {
    v.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn retract(rows: &[Vec<f64>], dir: &[Vec<f64>], t: f64) -> Option<Vec<Vec<f64>>> {
    let mut next: Vec<Vec<f64>> = rows
        .iter()
        .zip(dir)
        .map(|(r, d)| r.iter().zip(d).map(|(x, y)| x - t * y).collect())
        .collect();
    gram_schmidt(&mut next).ok().map(|_| next)
}

/// Analytic Riemannian gradient of an objective at a frame.
pub fn riemannian_gradient(
    r: &CurvatureTensor,
    objective: Objective,
    frame: &Frame,
) -> Result<(f64, Vec<Vec<f64>>)> {
    require_same_dim(r, frame)?;
    if frame.len() != objective.frame_len() {
        return Err(Error::InvalidDimension(frame.len(), "frame length does not match objective"));
    }
    let ev = Evaluator {
        r,
        terms: objective.terms(),
    };
    Ok(ev.value_and_grad(frame.rows()))
}

/// Euclidean (unprojected) gradient, exposed for derivative checks.
pub fn euclidean_gradient(
    r: &CurvatureTensor,
    objective: Objective,
    frame_rows: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let n = r.dim();
    let m = frame_rows.len();
    let refs: Vec<&[f64]> = frame_rows.iter().map(|v| v.as_slice()).collect();
    let p = r.contract_last3(&refs);
    let pidx = |i: usize, b: usize, c: usize, d: usize| ((i * m + b) * m + c) * m + d;
    let mut grad = vec![vec![0.0; n]; m];
    for (coef, [a, b, c, d]) in objective.terms() {
        for i in 0..n {
            grad[a][i] += coef * p[pidx(i, b, c, d)];
            grad[b][i] -= coef * p[pidx(i, a, c, d)];
            grad[c][i] += coef * p[pidx(i, d, a, b)];
            grad[d][i] -= coef * p[pidx(i, c, a, b)];
        }
    }
    grad
}

/// Objective value on arbitrary (not necessarily orthonormal) rows.
pub fn raw_value(r: &CurvatureTensor, objective: Objective, frame_rows: &[Vec<f64>]) -> f64 {
    Evaluator {
        r,
        terms: objective.terms(),
    }
    .value(frame_rows)
}

/// Local descent from a given frame.
pub fn minimize_from(
    r: &CurvatureTensor,
    objective: Objective,
    start: &Frame,
    opts: &MinimizeOpts,
) -> Result<LocalResult> {
    opts.validate()?;
    require_same_dim(r, start)?;
    if start.len() != objective.frame_len() {
        return Err(Error::InvalidDimension(start.len(), "frame length does not match objective"));
    }
    let ev = Evaluator {
        r,
        terms: objective.terms(),
    };
    let mut rows = start.rows().to_vec();
    let (mut value, mut grad) = ev.value_and_grad(&rows);
    let mut gnorm = frob_norm(&grad);
    let mut history = vec![value];
    let mut t = 1.0 / (1.0 + r.max_abs() * r.dim() as f64);
    let mut prev: Option<(Rows, Rows)> = None;
    let mut iterations = 0;

    while iterations < opts.max_iters && gnorm >= opts.grad_tol {
        if let Some((prev_rows, prev_grad)) = &prev {
            // Barzilai–Borwein guess from the ambient differences
            let s: Vec<f64> = rows.iter().flatten().zip(prev_rows.iter().flatten()).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = grad.iter().flatten().zip(prev_grad.iter().flatten()).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 0.0 {
                t = (dot(&s, &s) / sy).clamp(1e-12, 1e6);
            } else {
                t = (t * 2.0).min(1e6);
            }
        }
        let mut accepted = None;
        let mut trial = t;
        for _ in 0..MAX_BACKTRACKS {
            if let Some(cand) = retract(&rows, &grad, trial) {
                let v = ev.value(&cand);
                if v <= value - ARMIJO * trial * gnorm * gnorm {
                    accepted = Some((cand, trial));
                    break;
                }
            }
            trial *= 0.5;
        }
        let Some((cand, step)) = accepted else {
            break;
        };
        iterations += 1;
        let (v, g) = ev.value_and_grad(&cand);
        prev = Some((std::mem::replace(&mut rows, cand), std::mem::replace(&mut grad, g)));
        value = v;
        gnorm = frob_norm(&grad);
        history.push(value);
        if step * frob_norm(&prev.as_ref().unwrap().1) < opts.step_tol {
            break;
        }
    }
    let frame = Frame::new(rows)?;
    let value = objective.value(r, &frame)?;
    Ok(LocalResult {
        frame,
        value,
        iterations,
        grad_norm: gnorm,
        converged: gnorm < opts.grad_tol,
        history,
    })
}

pub(crate) fn restart_seed(seed: u64, restart: usize) -> u64 {
    // splitmix64 of (seed, restart)
    let mut z = seed
        .wrapping_add((restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Multistart minimization from seeded random frames.
pub fn minimize_frame(
    r: &CurvatureTensor,
    objective: Objective,
    opts: &MinimizeOpts,
) -> Result<ConditionReport> {
    minimize_frame_warm(r, objective, opts, &[])
}

/// Multistart minimization where the first restarts start from `warm`
/// frames and the rest from seeded random frames. Restarts run in parallel
/// and are merged by index: lowest value wins, ties go to the lower index.
pub fn minimize_frame_warm(
    r: &CurvatureTensor,
    objective: Objective,
    opts: &MinimizeOpts,
    warm: &[Frame],
) -> Result<ConditionReport> {
    opts.validate()?;
    let k = objective.frame_len();
    if r.dim() < k {
        return Err(Error::InvalidDimension(r.dim(), "ambient dimension too small for objective"));
    }
    let total = opts.restarts.max(warm.len());
    let results: Vec<LocalResult> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let start = match warm.get(idx) {
                Some(f) => f.clone(),
                None => Frame::random(restart_seed(opts.seed, idx), r.dim(), k)?,
            };
            minimize_from(r, objective, &start, opts)
        })
        .collect::<Result<_>>()?;
    let (best_restart, best) = results
        .iter()
        .enumerate()
        .fold(None::<(usize, &LocalResult)>, |acc, (i, res)| match acc {
            Some((_, b)) if b.value <= res.value => acc,
            _ => Some((i, res)),
        })
        .expect("at least one restart");
    let weights = match objective {
        Objective::LambdaMu(w) => Some(w),
        Objective::Isotropic => Some(Weights::unit()),
        _ => None,
    };
    Ok(ConditionReport {
        min_value: best.value,
        argmin_frame: best.frame.clone(),
        argmin_weights: weights,
        restarts: total,
        iterations: best.iterations,
        grad_norm: best.grad_norm,
        converged: best.converged,
        seed: opts.seed,
        best_restart,
    })
}
