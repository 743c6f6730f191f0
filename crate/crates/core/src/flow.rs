//! The Ricci flow reaction ODE `dR/dt = Q(R)` at a single point.
//!
//! The Laplacian term of the curvature evolution is dropped, which is exact
//! only for tensors of spaces with parallel curvature (the homogeneous
//! models); on other inputs this is the algebraic ODE, not the flow.

use nalgebra::DMatrix;

use crate::conditions::{isotropic_u, minimize_frame_warm, FrameTerms, MinimizeOpts, Objective, check_pic2};
use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::models::pad_euclidean;
use crate::tensor::{offset, CurvatureTensor};

/// `Q(R)_{ijkl} = sum_{pq} R_{ijpq} R_{klpq} + 2 (B_{ikjl} - B_{iljk})` with
/// `B_{ijkl} = sum_{pq} R_{ipjq} R_{kplq}`.
///
/// Both sums are `n^2 x n^2` Gram products of reshaped copies of `R`.
pub fn q_reaction(r: &CurvatureTensor) -> CurvatureTensor {
    let n = r.dim();
    let nn = n * n;
    let m = DMatrix::from_row_slice(nn, nn, r.components());
    let mut a = DMatrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            for p in 0..n {
                for q in 0..n {
                    a[(i * n + j, p * n + q)] = r.get(i, p, j, q);
                }
            }
        }
    }
    let c = &m * m.transpose();
    let b = &a * a.transpose();
    let mut comps = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    comps[offset(n, i, j, k, l)] = c[(i * n + j, k * n + l)]
                        + 2.0 * (b[(i * n + k, j * n + l)] - b[(i * n + l, j * n + k)]);
                }
            }
        }
    }
    CurvatureTensor::from_trusted(n, comps)
}

/// Sums `I1`, `I2`, `I3` of the reaction-term decomposition, in a basis
/// completing the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionSums {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

/// `R` in the orthonormal basis completing `frame`, whose first four vectors
/// are the frame.
fn frame_basis_tensor(r: &CurvatureTensor, frame: &Frame) -> Result<CurvatureTensor> {
    frame.require_four()?;
    crate::conditions::require_same_dim(r, frame)?;
    r.change_basis(&frame.complete_basis()?)
}

fn decomposition_summand(rb: &CurvatureTensor, p: usize, q: usize) -> f64 {
    let c = |a: usize, b: usize, c: usize, d: usize| rb.get(a, b, c, d);
    (c(0, p, 0, q) + c(1, p, 1, q)) * (c(2, p, 2, q) + c(3, p, 3, q))
        - c(0, 1, p, q) * c(2, 3, p, q)
        - (c(0, p, 2, q) + c(1, p, 3, q)) * (c(2, p, 0, q) + c(3, p, 1, q))
        - (c(0, p, 3, q) - c(1, p, 2, q)) * (c(3, p, 0, q) - c(2, p, 1, q))
}

fn sums_in_basis(rb: &CurvatureTensor) -> DecompositionSums {
    let n = rb.dim();
    let sum = |ps: std::ops::Range<usize>, qs: std::ops::Range<usize>| {
        let mut acc = 0.0;
        for p in ps {
            for q in qs.clone() {
                acc += decomposition_summand(rb, p, q);
            }
        }
        acc
    };
    DecompositionSums {
        i1: sum(0..4, 0..4),
        i2: sum(0..4, 4..n),
        i3: sum(4..n, 4..n),
    }
}

pub fn decomposition_i(r: &CurvatureTensor, frame: &Frame) -> Result<DecompositionSums> {
    Ok(sums_in_basis(&frame_basis_tensor(r, frame)?))
}

/// Both sides of the reaction-term identity
/// `u(Q(R), F) = sum (R13pq - R24pq)^2 + sum (R14pq + R23pq)^2
///  + 2 I1 + 4 I2 + 2 I3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn decomposition_check(r: &CurvatureTensor, frame: &Frame) -> Result<DecompositionCheck> {
    let lhs = FrameTerms::of(&q_reaction(r), frame)?.isotropic();
    let rb = frame_basis_tensor(r, frame)?;
    let n = r.dim();
    let mut squares = 0.0;
    for p in 0..n {
        for q in 0..n {
            let a = rb.get(0, 2, p, q) - rb.get(1, 3, p, q);
            let b = rb.get(0, 3, p, q) + rb.get(1, 2, p, q);
            squares += a * a + b * b;
        }
    }
    let s = sums_in_basis(&rb);
    let rhs = squares + 2.0 * s.i1 + 4.0 * s.i2 + 2.0 * s.i3;
    Ok(DecompositionCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub r: CurvatureTensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOpts {
    /// Initial (and maximal) step size.
    pub dt: f64,
    /// Halve the step until the Richardson estimate is below `ode_tol`.
    pub adaptive: bool,
    pub ode_tol: f64,
    /// Rescale after each step to keep the scalar curvature constant.
    pub normalize: bool,
    pub blowup_cap: f64,
    /// Record diagnostics every `stride` steps (and at the end).
    pub stride: usize,
    /// Run the frame minimizations for each trace row.
    pub diagnostics: bool,
    /// Minimizer options for the diagnostics.
    pub minimize: MinimizeOpts,
    /// Optional frame whose `u` is recorded along the trajectory.
    pub track: Option<Frame>,
}

impl Default for FlowOpts {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            adaptive: true,
            ode_tol: 1e-9,
            normalize: false,
            blowup_cap: 1e12,
            stride: 1,
            diagnostics: true,
            minimize: MinimizeOpts {
                restarts: 8,
                ..MinimizeOpts::default()
            },
            track: None,
        }
    }
}

impl FlowOpts {
    fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.dt) || !positive(self.ode_tol) || !positive(self.blowup_cap) {
            return Err(Error::InvalidOptions(format!(
                "dt {}, ode_tol {}, blowup_cap {} must be positive and finite",
                self.dt, self.ode_tol, self.blowup_cap
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidOptions("stride must be positive".into()));
        }
        self.minimize.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub kmin: f64,
    pub kmax: f64,
    pub min_iso: f64,
    pub min_pic2: f64,
    pub scalar: f64,
    /// Step size of the step ending at `t` (zero on the initial row).
    pub dt: f64,
    pub err_est: f64,
    pub tracked_u: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
    pub final_state: FlowState,
    pub steps: usize,
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(u, v)| u + a * v).collect()
}

fn rk4(n: usize, y: &[f64], dt: f64) -> Vec<f64> {
    let f = |v: Vec<f64>| q_reaction(&CurvatureTensor::from_trusted(n, v)).into_components();
    let k1 = f(y.to_vec());
    let k2 = f(axpy(y, 0.5 * dt, &k1));
    let k3 = f(axpy(y, 0.5 * dt, &k2));
    let k4 = f(axpy(y, dt, &k3));
    y.iter()
        .enumerate()
        .map(|(i, v)| v + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// One classical Runge–Kutta step of size `dt`.
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidOptions(format!("dt {dt} must be positive")));
    }
    let n = state.r.dim();
    Ok(FlowState {
        t: state.t + dt,
        r: CurvatureTensor::from_trusted(n, rk4(n, state.r.components(), dt)),
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Step with Richardson error control. Returns `(y, dt_used, err_est)`.
fn controlled_step(n: usize, y: &[f64], dt: f64, opts: &FlowOpts, t: f64) -> Result<(Vec<f64>, f64, f64)> {
    let mut h = dt;
    loop {
        let full = rk4(n, y, h);
        let half = rk4(n, &rk4(n, y, 0.5 * h), 0.5 * h);
        let diff = full.iter().zip(&half).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let err = diff / 15.0 / max_abs(&half).max(1.0);
        if !err.is_finite() {
            return Err(Error::BlowUp {
                t,
                max_abs: max_abs(&half),
            });
        }
        if !opts.adaptive || err < opts.ode_tol {
            return Ok((half, h, err));
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, dt: h });
        }
        h *= 0.5;
    }
}

/// Warm-start memory for the per-row minimizations.
#[derive(Default)]
struct Diagnostics {
    kmin: Option<Frame>,
    kmax: Option<Frame>,
    iso: Option<Frame>,
    pic2: Option<Frame>,
}

impl Diagnostics {
    fn row(&mut self, r: &CurvatureTensor, t: f64, dt: f64, err: f64, opts: &FlowOpts) -> Result<TraceRow> {
        let tracked_u = opts.track.as_ref().map(|f| isotropic_u(r, f)).transpose()?;
        if !opts.diagnostics {
            return Ok(TraceRow {
                t,
                kmin: f64::NAN,
                kmax: f64::NAN,
                min_iso: f64::NAN,
                min_pic2: f64::NAN,
                scalar: r.scalar(),
                dt,
                err_est: err,
                tracked_u,
            });
        }
        let padded = pad_euclidean(r, 2);
        let mo = &opts.minimize;
        let run = |tensor: &CurvatureTensor, obj: Objective, warm: &Option<Frame>| {
            let warm: Vec<Frame> = warm.iter().cloned().collect();
            minimize_frame_warm(tensor, obj, mo, &warm)
        };
        let ((lo, hi), (iso, pic2)) = rayon::join(
            || {
                rayon::join(
                    || run(r, Objective::Sectional, &self.kmin),
                    || run(r, Objective::NegSectional, &self.kmax),
                )
            },
            || {
                rayon::join(
                    || run(r, Objective::Isotropic, &self.iso),
                    || run(&padded, Objective::Isotropic, &self.pic2),
                )
            },
        );
        let (lo, hi, iso, pic2) = (lo?, hi?, iso?, pic2?);
        let out = TraceRow {
            t,
            kmin: lo.min_value,
            kmax: -hi.min_value,
            min_iso: iso.min_value,
            min_pic2: pic2.min_value,
            scalar: r.scalar(),
            dt,
            err_est: err,
            tracked_u,
        };
        self.kmin = Some(lo.argmin_frame);
        self.kmax = Some(hi.argmin_frame);
        self.iso = Some(iso.argmin_frame);
        self.pic2 = Some(pic2.argmin_frame);
        Ok(out)
    }
}

/// Integrates `dR/dt = Q(R)` from `t = 0` to `t_end`.
pub fn integrate(r0: &CurvatureTensor, t_end: f64, opts: &FlowOpts) -> Result<FlowTrace> {
    opts.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidOptions(format!("t_end {t_end} must be positive")));
    }
    if opts.diagnostics && r0.dim() < 4 {
        return Err(Error::InvalidDimension(r0.dim(), "flow diagnostics need n >= 4"));
    }
    let n = r0.dim();
    let target_scalar = r0.scalar();
    let mut diag = Diagnostics::default();
    let mut rows = vec![diag.row(r0, 0.0, 0.0, 0.0, opts)?];
    let mut y = r0.components().to_vec();
    let mut t = 0.0;
    let mut steps = 0;
    while t < t_end {
        let remaining = t_end - t;
        let final_step = remaining <= opts.dt * (1.0 + 1e-12);
        let h = if final_step { remaining } else { opts.dt };
        let (next, used, err) = controlled_step(n, &y, h, opts, t)?;
        let reached_end = final_step && used == h;
        t = if reached_end { t_end } else { t + used };
        y = next;
        if opts.normalize && target_scalar != 0.0 {
            let current = CurvatureTensor::from_trusted(n, y.clone()).scalar();
            if current != 0.0 {
                let s = target_scalar / current;
                y.iter_mut().for_each(|v| *v *= s);
            }
        }
        let peak = max_abs(&y);
        if !(peak <= opts.blowup_cap) {
            return Err(Error::BlowUp { t, max_abs: peak });
        }
        steps += 1;
        if steps % opts.stride == 0 || t >= t_end {
            let r = CurvatureTensor::from_trusted(n, y.clone());
            rows.push(diag.row(&r, t, used, err, opts)?);
        }
    }
    Ok(FlowTrace {
        rows,
        final_state: FlowState {
            t,
            r: CurvatureTensor::from_trusted(n, y),
        },
        steps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeExperiment {
    pub trace: FlowTrace,
    pub min_pic2: f64,
    pub pass: bool,
}

/// Margin the PIC2 minimum may dip below zero along the trajectory.
pub const CONE_MARGIN: f64 = 1e-7;

/// Runs the ODE from a PIC2 tensor and checks the PIC2 minimum stays
/// nonnegative (to `CONE_MARGIN`) along the trace.
pub fn cone_margin_experiment(r0: &CurvatureTensor, t_end: f64, opts: &FlowOpts) -> Result<ConeExperiment> {
    let initial = check_pic2(r0, &opts.minimize)?;
    if !initial.holds {
        return Err(Error::InvalidOptions(format!(
            "initial tensor is not PIC2 (minimum {:e})",
            initial.report.min_value
        )));
    }
    let mut o = opts.clone();
    o.diagnostics = true;
    let trace = integrate(r0, t_end, &o)?;
    let min_pic2 = trace
        .rows
        .iter()
        .map(|r| r.min_pic2)
        .fold(f64::INFINITY, f64::min);
    Ok(ConeExperiment {
        pass: min_pic2 >= -CONE_MARGIN,
        min_pic2,
        trace,
    })
}
