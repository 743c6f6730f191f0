//! `curvlab` command-line front end.
//!
//! Exit codes: 0 pass, 1 condition violated or identity failed, 2 usage,
//! input, or runtime error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conditions::{
    check_nic, check_pic2, check_quarter_pinched, cyclic_sum_check, lift_identity_check,
    minimize_frame, MinimizeOpts, Objective,
};
use crate::error::{Error, Result};
use crate::flow::{decomposition_check, integrate, FlowOpts, CONE_MARGIN};
use crate::frames::{Frame, Weights};
use crate::io::{self, JsonObject};
use crate::models::{complex_projective, pad_euclidean, product, sphere};
use crate::tensor::CurvatureTensor;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const LIFT_TOL: f64 = 1e-12;
pub const CYCLIC_TOL: f64 = 1e-11;
pub const DECOMPOSITION_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "curvlab", version, about = "Curvature-operator laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Sphere,
    Cpm,
    Product,
    Pad,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Condition {
    Nic,
    Pic2,
    QuarterPinch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveKind {
    Isotropic,
    Sectional,
    LambdaMu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Lift,
    Cyclic,
    Decomposition,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    #[arg(long, env = "CURVLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-7)]
    pub margin: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
}

impl SearchArgs {
    fn opts(&self) -> MinimizeOpts {
        MinimizeOpts {
            restarts: self.restarts,
            max_iters: self.max_iters,
            seed: self.seed,
            margin: self.margin,
            ..MinimizeOpts::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a model tensor and write it as JSON.
    Model {
        #[arg(long, value_enum)]
        kind: ModelKind,
        /// Comma-separated key=value pairs, e.g. `n=4,kappa=1`.
        #[arg(long, default_value = "")]
        params: String,
        /// Input tensor for `pad`.
        #[arg(long)]
        tensor: Option<PathBuf>,
        /// Factor tensors for `product` (give exactly two).
        #[arg(long)]
        factor: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide a curvature condition; exit 0 if it holds, 1 if violated.
    Check {
        #[arg(long, value_enum)]
        condition: Condition,
        #[arg(long)]
        tensor: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Minimize a frame functional and print the report.
    Minimize {
        #[arg(long, value_enum)]
        objective: ObjectiveKind,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long)]
        tensor: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run a battery of random identity checks.
    Identity {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, env = "CURVLAB_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Integrate the reaction ODE and write the trace CSV.
    Flow {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record diagnostics every `stride` steps.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, env = "CURVLAB_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Summarize a trace CSV.
    Report {
        #[arg(long)]
        trace: PathBuf,
    },
}

/// Parses argv and runs, writing to the process streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_PASS {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn parse_params(spec: &str) -> Result<BTreeMap<String, String>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("parameter {kv:?} is not key=value")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

struct Params {
    map: BTreeMap<String, String>,
}

impl Params {
    fn new(spec: &str, allowed: &[&str]) -> Result<Self> {
        let map = parse_params(spec)?;
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Parse(format!(
                "unknown parameter {k:?}; expected one of {allowed:?}"
            )));
        }
        Ok(Self { map })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T> {
        match self.map.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Parse(format!("parameter {key}={v:?} is malformed"))),
            None => default.ok_or_else(|| Error::Parse(format!("missing parameter {key}"))),
        }
    }
}

fn build_model(
    kind: ModelKind,
    params: &str,
    tensor: Option<&Path>,
    factors: &[PathBuf],
) -> Result<CurvatureTensor> {
    match kind {
        ModelKind::Sphere => {
            let p = Params::new(params, &["n", "kappa"])?;
            sphere(p.get("n", None)?, p.get("kappa", Some(1.0))?)
        }
        ModelKind::Cpm => {
            let p = Params::new(params, &["m", "c"])?;
            complex_projective(p.get("m", None)?, p.get("c", Some(4.0))?)
        }
        ModelKind::Product => {
            if !factors.is_empty() {
                if factors.len() != 2 {
                    return Err(Error::Parse("product needs exactly two --factor files".into()));
                }
                return Ok(product(&io::read_tensor(&factors[0])?, &io::read_tensor(&factors[1])?));
            }
            let p = Params::new(params, &["n1", "kappa1", "n2", "kappa2"])?;
            Ok(product(
                &sphere(p.get("n1", Some(2))?, p.get("kappa1", Some(1.0))?)?,
                &sphere(p.get("n2", Some(2))?, p.get("kappa2", Some(1.0))?)?,
            ))
        }
        ModelKind::Pad => {
            let p = Params::new(params, &["k", "n", "kappa"])?;
            let base = match tensor {
                Some(path) => io::read_tensor(path)?,
                None => sphere(p.get("n", None)?, p.get("kappa", Some(1.0))?)?,
            };
            Ok(pad_euclidean(&base, p.get("k", Some(2))?))
        }
        ModelKind::Random => {
            let p = Params::new(params, &["n", "seed"])?;
            CurvatureTensor::random(p.get("seed", Some(0))?, p.get("n", None)?)
        }
    }
}

fn emit(out: &mut dyn Write, obj: JsonObject) -> Result<()> {
    writeln!(out, "{}", obj.render())?;
    Ok(())
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Model {
            kind,
            params,
            tensor,
            factor,
            out: path,
        } => {
            let r = build_model(*kind, params, tensor.as_deref(), factor)?;
            io::write_tensor(path, &r)?;
            Ok(EXIT_PASS)
        }
        Command::Check {
            condition,
            tensor,
            search,
        } => {
            let r = io::read_tensor(tensor)?;
            let opts = search.opts();
            let (holds, obj) = match condition {
                Condition::Nic => {
                    let o = check_nic(&r, &opts)?;
                    let obj = io::report_object("nic", o.holds, &o.report, opts.margin)
                        .bool("boundary", o.boundary);
                    (o.holds, obj)
                }
                Condition::Pic2 => {
                    let o = check_pic2(&r, &opts)?;
                    let obj = io::report_object("pic2", o.holds, &o.report, opts.margin)
                        .bool("boundary", o.boundary)
                        .num("lift_min", o.lift_min)
                        .raw("lift_weights", io::weights_to_json(Some(o.lift_weights)));
                    (o.holds, obj)
                }
                Condition::QuarterPinch => {
                    let o = check_quarter_pinched(&r, &opts)?;
                    let obj = io::report_object("quarter-pinch", o.holds, &o.min_report, opts.margin)
                        .num("kmin", o.kmin)
                        .num("kmax", o.kmax)
                        .raw("kmax_frame", io::frame_to_json(&o.max_report.argmin_frame));
                    (o.holds, obj)
                }
            };
            emit(out, obj.str("certificate", "heuristic multistart upper bound"))?;
            Ok(if holds { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Minimize {
            objective,
            lambda,
            mu,
            tensor,
            search,
        } => {
            let r = io::read_tensor(tensor)?;
            let opts = search.opts();
            let obj = match objective {
                ObjectiveKind::Isotropic => Objective::Isotropic,
                ObjectiveKind::Sectional => Objective::Sectional,
                ObjectiveKind::LambdaMu => Objective::LambdaMu(Weights::new(*lambda, *mu)?),
            };
            let rep = minimize_frame(&r, obj, &opts)?;
            let json = io::report_object(obj.name(), rep.min_value >= -opts.margin, &rep, opts.margin)
                .int("best_restart", rep.best_restart as u64);
            emit(out, json)?;
            Ok(EXIT_PASS)
        }
        Command::Identity { suite, trials, seed } => {
            let (max_residual, tol) = identity_battery(*suite, *trials, *seed)?;
            let pass = max_residual < tol;
            let name = match suite {
                Suite::Lift => "lift",
                Suite::Cyclic => "cyclic",
                Suite::Decomposition => "decomposition",
            };
            emit(
                out,
                JsonObject::new()
                    .str("suite", name)
                    .int("trials", *trials as u64)
                    .int("seed", *seed)
                    .num("max_residual", max_residual)
                    .num("tolerance", tol)
                    .bool("pass", pass),
            )?;
            Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Flow {
            tensor,
            t_end,
            dt,
            normalize,
            out: path,
            stride,
            restarts,
            seed,
        } => {
            let r = io::read_tensor(tensor)?;
            let opts = FlowOpts {
                dt: *dt,
                normalize: *normalize,
                stride: *stride,
                minimize: MinimizeOpts {
                    restarts: *restarts,
                    seed: *seed,
                    ..MinimizeOpts::default()
                },
                ..FlowOpts::default()
            };
            let trace = integrate(&r, *t_end, &opts)?;
            let csv = io::write_trace_csv(&trace);
            match path {
                Some(p) => std::fs::write(p, csv)?,
                None => write!(out, "{csv}")?,
            }
            Ok(EXIT_PASS)
        }
        Command::Report { trace } => {
            let rows = io::read_trace_csv(&std::fs::read_to_string(trace)?)?;
            let s = io::summarize_trace(&rows)?;
            emit(
                out,
                JsonObject::new()
                    .int("rows", s.rows as u64)
                    .num("t_end", s.t_end)
                    .num("min_kmin", s.min_kmin)
                    .num("max_kmax", s.max_kmax)
                    .num("min_iso", s.min_iso)
                    .num("min_pic2", s.min_pic2)
                    .num("max_err_est", s.max_err_est)
                    .bool("pic2_margin_ok", s.min_pic2 >= -CONE_MARGIN),
            )?;
            Ok(EXIT_PASS)
        }
    }
}

/// Random `(R, F, w)` triple with `n` in `4..=8`.
pub fn random_triple(rng: &mut ChaCha8Rng) -> Result<(CurvatureTensor, Frame, Weights)> {
    let n = rng.random_range(4..=8);
    let r = CurvatureTensor::random(rng.random(), n)?;
    let f = Frame::random4(rng.random(), n)?;
    let w = Weights::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))?;
    Ok((r, f, w))
}

/// Max residual of an identity suite over `trials` random triples, with the
/// suite's tolerance.
pub fn identity_battery(suite: Suite, trials: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let (r, f, w) = random_triple(&mut rng)?;
        let res = match suite {
            Suite::Lift => lift_identity_check(&r, &f, w)?,
            Suite::Cyclic => cyclic_sum_check(&r, &f, w)?.residual,
            Suite::Decomposition => decomposition_check(&r, &f)?.residual,
        };
        worst = worst.max(res);
    }
    let tol = match suite {
        Suite::Lift => LIFT_TOL,
        Suite::Cyclic => CYCLIC_TOL,
        Suite::Decomposition => DECOMPOSITION_TOL,
    };
    Ok((worst, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(
            std::iter::once("curvlab").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn params_parsing() {
        let p = Params::new("n=4, kappa=2.5", &["n", "kappa"]).unwrap();
        assert_eq!(p.get::<usize>("n", None).unwrap(), 4);
        assert_eq!(p.get::<f64>("kappa", None).unwrap(), 2.5);
        assert!(Params::new("n=4,x=1", &["n"]).is_err());
        assert!(Params::new("n4", &["n"]).is_err());
        let p = Params::new("", &["n"]).unwrap();
        assert!(p.get::<usize>("n", None).is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["check", "--condition", "bogus", "--tensor", "x"]).0, EXIT_USAGE);
        let (code, _, err) = run_capture(&["check", "--condition", "nic", "--tensor", "/nonexistent.json"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("error"));
        assert_eq!(run_capture(&["--help"]).0, EXIT_PASS);
    }

    #[test]
    fn identity_suite_small() {
        let (code, out, _) = run_capture(&["identity", "--suite", "lift", "--trials", "20", "--seed", "3"]);
        assert_eq!(code, EXIT_PASS);
        assert!(out.contains("\"pass\": true"));
    }
}
