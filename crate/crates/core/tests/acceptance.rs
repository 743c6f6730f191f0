//! Acceptance criteria. Runs as a plain binary (no libtest harness) and
//! prints one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use curvlab::cli::{random_triple, Suite};
use curvlab::conditions::{
    check_quarter_pinched, cyclic_sum_check, euclidean_gradient,
    holonomy_zero_invariance, isotropic_u, lift_identity_check, minimize_frame, raw_value,
    HolonomyGroup, MinimizeOpts, Objective,
};
use curvlab::flow::{cone_margin_experiment, decomposition_check, integrate, q_reaction, FlowOpts};
use curvlab::frames::{orthogonal_action, random_rotation, Frame};
use curvlab::models::{complex_projective, product, sphere};
use curvlab::{io, CurvatureTensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn ensure(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sphere_product() -> CurvatureTensor {
    product(&sphere(2, 1.0).unwrap(), &sphere(2, 1.0).unwrap())
}

fn identity_criterion(suite: Suite, trials: usize, tol: f64) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let (r, f, w) = random_triple(&mut rng).map_err(|e| e.to_string())?;
        let res = match suite {
            Suite::Lift => lift_identity_check(&r, &f, w).unwrap(),
            Suite::Cyclic => cyclic_sum_check(&r, &f, w).unwrap().residual,
            Suite::Decomposition => decomposition_check(&r, &f).unwrap().residual,
        };
        worst = worst.max(res);
    }
    let elapsed = start.elapsed();
    let time_ok = suite == Suite::Decomposition || elapsed < Duration::from_secs(10);
    ensure(
        worst < tol && time_ok,
        format!("{trials} trials, max residual {worst:.3e} (tol {tol:e}), {elapsed:.2?}"),
    )
}

fn criterion_4() -> Outcome {
    let opts = MinimizeOpts::default();
    let cp = minimize_frame(&complex_projective(2, 4.0).unwrap(), Objective::Isotropic, &opts)
        .map_err(|e| e.to_string())?;
    let explicit = isotropic_u(&sphere_product(), &Frame::standard(4, 4).unwrap()).unwrap();
    let mut sphere_dev = 0.0_f64;
    for n in 4..=8 {
        let kappa = 0.5 * n as f64 - 1.0;
        let rep = minimize_frame(&sphere(n, kappa).unwrap(), Objective::Isotropic, &opts).unwrap();
        sphere_dev = sphere_dev.max((rep.min_value - 4.0 * kappa).abs());
    }
    ensure(
        cp.min_value.abs() <= 1e-6 && explicit.abs() <= 1e-10 && sphere_dev < 1e-9,
        format!(
            "CP2 min u {:.3e}; S2xS2 explicit frame u {explicit:.1e}; sphere |min u - 4k| {sphere_dev:.1e}",
            cp.min_value
        ),
    )
}

fn criterion_5() -> Outcome {
    let opts = MinimizeOpts::default();
    let s = check_quarter_pinched(&sphere(5, 1.5).unwrap(), &opts).unwrap();
    let p = check_quarter_pinched(&sphere_product(), &opts).unwrap();
    let c = check_quarter_pinched(&complex_projective(2, 4.0).unwrap(), &opts).unwrap();
    ensure(
        s.holds
            && !p.holds
            && c.holds
            && (c.kmin - 1.0).abs() <= 1e-6
            && (c.kmax - 4.0).abs() <= 1e-6,
        format!(
            "sphere {} (K {:.6}..{:.6}); S2xS2 {} (K {:.2e}..{:.6}); CP2 {} (K {:.9}..{:.9})",
            s.holds, s.kmin, s.kmax, p.holds, p.kmin, p.kmax, c.holds, c.kmin, c.kmax
        ),
    )
}

fn criterion_6() -> Outcome {
    let cp = complex_projective(2, 4.0).unwrap();
    let zero = minimize_frame(&cp, Objective::Isotropic, &MinimizeOpts::default())
        .unwrap()
        .argmin_frame;
    let cp_orbit = holonomy_zero_invariance(&cp, &zero, &HolonomyGroup::Unitary { m: 2 }, 200, 7)
        .map_err(|e| e.to_string())?;
    let sp = sphere_product();
    let f0 = Frame::standard(4, 4).unwrap();
    let blocks = HolonomyGroup::ProductBlocks { blocks: vec![2, 2] };
    let sp_orbit = holonomy_zero_invariance(&sp, &f0, &blocks, 200, 7).map_err(|e| e.to_string())?;
    let g = random_rotation(17, 4).unwrap();
    let control = isotropic_u(&sp, &orthogonal_action(&f0, &g).unwrap()).unwrap().abs();
    ensure(
        cp_orbit < 1e-8 && sp_orbit < 1e-8 && control > 0.1,
        format!("CP2 orbit max |u| {cp_orbit:.2e}; S2xS2 orbit {sp_orbit:.2e}; SO(4) control {control:.3}"),
    )
}

fn criterion_7() -> Outcome {
    // c(4) from the sphere regression of Q: Q(sphere(4,1)) = c * sphere(4,1)
    let c4 = q_reaction(&sphere(4, 1.0).unwrap()).get(0, 1, 0, 1);
    let exact = |t: f64| 1.0 / (1.0 - c4 * t);
    let t_end = 0.05;
    let opts = FlowOpts {
        diagnostics: false,
        ..FlowOpts::default()
    };
    let trace = integrate(&sphere(4, 1.0).unwrap(), t_end, &opts).map_err(|e| e.to_string())?;
    let kappa = trace.final_state.r.get(0, 1, 0, 1);
    let match_err = (kappa - exact(t_end)).abs();
    let fixed = |dt: f64| {
        let o = FlowOpts {
            dt,
            adaptive: false,
            diagnostics: false,
            ..FlowOpts::default()
        };
        let tr = integrate(&sphere(4, 1.0).unwrap(), 0.1, &o).unwrap();
        (tr.final_state.r.get(0, 1, 0, 1) - exact(0.1)).abs()
    };
    let (e1, e2) = (fixed(0.01), fixed(0.005));
    let order = (e1 / e2).log2();
    ensure(
        (c4 - 6.0).abs() < 1e-12 && match_err < 1e-8 && (3.7..=4.3).contains(&order),
        format!("c(4) = {c4}; |k(T) - exact| {match_err:.2e}; measured order {order:.3}"),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let opts = FlowOpts {
        dt: 2e-3,
        ..FlowOpts::default()
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, r0) in [
        ("sphere", sphere(4, 1.0).unwrap()),
        ("CP2", complex_projective(2, 4.0).unwrap()),
        ("S2xS2", sphere_product()),
    ] {
        let exp = cone_margin_experiment(&r0, 0.02, &opts).map_err(|e| format!("{name}: {e}"))?;
        ok &= exp.pass;
        parts.push(format!("{name} min pic2 {:.2e}", exp.min_pic2));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    ensure(ok, format!("{}; {elapsed:.2?}", parts.join(", ")))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let (r, f, _) = random_triple(&mut rng).unwrap();
        let rows = f.rows().to_vec();
        let g = euclidean_gradient(&r, Objective::Isotropic, &rows);
        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        for a in 0..4 {
            for i in 0..r.dim() {
                let mut plus = rows.clone();
                let mut minus = rows.clone();
                plus[a][i] += h;
                minus[a][i] -= h;
                let fd = (raw_value(&r, Objective::Isotropic, &plus)
                    - raw_value(&r, Objective::Isotropic, &minus))
                    / (2.0 * h);
                diff2 += (fd - g[a][i]).powi(2);
                norm2 += g[a][i].powi(2);
            }
        }
        worst = worst.max((diff2 / norm2).sqrt());
    }
    ensure(worst < 1e-5, format!("100 points, max relative error {worst:.2e}"))
}

fn cli(bin: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(bin)
        .args(args)
        .env_remove("CURVLAB_SEED")
        .output()
        .expect("spawn curvlab");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn expect(failures: &mut Vec<String>, label: &str, got: i32, want: i32) {
    if got != want {
        failures.push(format!("{label}: exit {got}, expected {want}"));
    }
}

fn criterion_10() -> Outcome {
    let bin = Path::new(env!("CARGO_BIN_EXE_curvlab"));
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let mut failures = Vec::new();

    let (c, _) = cli(bin, &["model", "--kind", "sphere", "--params", "n=4,kappa=1", "--out", &p("s.json")]);
    expect(&mut failures, "model sphere", c, 0);
    let (c, _) = cli(bin, &["model", "--kind", "product", "--params", "n1=2,n2=2", "--out", &p("sp.json")]);
    expect(&mut failures, "model product", c, 0);
    let (c, _) = cli(bin, &["model", "--kind", "cpm", "--params", "m=2,c=4", "--out", &p("cp.json")]);
    expect(&mut failures, "model cpm", c, 0);
    let (c, _) = cli(bin, &["model", "--kind", "random", "--params", "n=5,seed=3", "--out", &p("r.json")]);
    expect(&mut failures, "model random", c, 0);
    let (c, _) = cli(bin, &["model", "--kind", "pad", "--tensor", &p("s.json"), "--out", &p("pad.json")]);
    expect(&mut failures, "model pad", c, 0);

    // round trip is bit-exact
    for (file, want) in [
        ("s.json", sphere(4, 1.0).unwrap()),
        ("cp.json", complex_projective(2, 4.0).unwrap()),
        ("r.json", CurvatureTensor::random(3, 5).unwrap()),
    ] {
        let back = io::read_tensor(&dir.path().join(file)).map_err(|e| e.to_string())?;
        if back.components() != want.components() {
            failures.push(format!("{file} did not round-trip bit-for-bit"));
        }
    }

    let (c, out) = cli(bin, &["check", "--condition", "quarter-pinch", "--tensor", &p("s.json")]);
    expect(&mut failures, "quarter-pinch sphere", c, 0);
    let report: serde_json::Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let k = |key: &str| report[key].as_f64().unwrap_or(f64::NAN);
    if (k("kmin") - 1.0).abs() > 1e-9 || (k("kmax") - 1.0).abs() > 1e-9 {
        failures.push("sphere pinch report lacks Kmin = Kmax = 1".into());
    }
    let (c, _) = cli(bin, &["check", "--condition", "quarter-pinch", "--tensor", &p("sp.json")]);
    expect(&mut failures, "quarter-pinch product", c, 1);
    let (c, _) = cli(bin, &["check", "--condition", "nic", "--tensor", &p("cp.json"), "--restarts", "16"]);
    expect(&mut failures, "nic cpm", c, 0);
    let (c, _) = cli(bin, &["check", "--condition", "pic2", "--tensor", &p("s.json"), "--restarts", "8"]);
    expect(&mut failures, "pic2 sphere", c, 0);
    let (c, _) = cli(bin, &["model", "--kind", "sphere", "--params", "n=4,kappa=-1", "--out", &p("neg.json")]);
    expect(&mut failures, "model negative sphere", c, 0);
    let (c, _) = cli(bin, &["check", "--condition", "nic", "--tensor", &p("neg.json"), "--restarts", "4"]);
    expect(&mut failures, "nic negative sphere", c, 1);

    // determinism
    let args = ["check", "--condition", "nic", "--tensor", &p("r.json"), "--restarts", "8", "--seed", "5"];
    let (c1, o1) = cli(bin, &args);
    let (c2, o2) = cli(bin, &args);
    if o1 != o2 || c1 != c2 {
        failures.push("identical argv produced different reports".into());
    }

    let (c, out) = cli(bin, &["minimize", "--objective", "lambda-mu", "--lambda", "0.5", "--mu", "-0.3", "--tensor", &p("s.json"), "--restarts", "4"]);
    expect(&mut failures, "minimize", c, 0);
    if !out.contains("\"min_value\"") {
        failures.push("minimize printed no report".into());
    }
    for suite in ["lift", "cyclic", "decomposition"] {
        let (c, _) = cli(bin, &["identity", "--suite", suite, "--trials", "100", "--seed", "1"]);
        expect(&mut failures, suite, c, 0);
    }
    let (c, _) = cli(bin, &["flow", "--tensor", &p("s.json"), "--t-end", "0.01", "--dt", "0.005", "--out", &p("t.csv")]);
    expect(&mut failures, "flow", c, 0);
    let (c, out) = cli(bin, &["report", "--trace", &p("t.csv")]);
    expect(&mut failures, "report", c, 0);
    if !out.contains("\"rows\": 3") {
        failures.push(format!("report summary unexpected: {out}"));
    }

    // usage and I/O errors
    let (c, _) = cli(bin, &["check", "--condition", "nic", "--tensor", &p("missing.json")]);
    expect(&mut failures, "missing file", c, 2);
    let (c, _) = cli(bin, &["model", "--kind", "sphere", "--params", "n=4,bogus=1", "--out", &p("x.json")]);
    expect(&mut failures, "bad params", c, 2);
    let (c, _) = cli(bin, &["frobnicate"]);
    expect(&mut failures, "unknown subcommand", c, 2);
    std::fs::write(dir.path().join("bad.json"), "{\"n\": 4}").unwrap();
    let (c, _) = cli(bin, &["check", "--condition", "nic", "--tensor", &p("bad.json")]);
    expect(&mut failures, "malformed tensor", c, 2);

    ensure(
        failures.is_empty(),
        if failures.is_empty() {
            "every subcommand honored its exit-code and format contract".into()
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 lift identity battery", Box::new(|| identity_criterion(Suite::Lift, 1000, 1e-12))),
        ("2 cyclic-sum identity", Box::new(|| identity_criterion(Suite::Cyclic, 1000, 1e-11))),
        ("3 reaction-term decomposition", Box::new(|| identity_criterion(Suite::Decomposition, 200, 1e-10))),
        ("4 borderline zero sets", Box::new(criterion_4)),
        ("5 quarter-pinching checker", Box::new(criterion_5)),
        ("6 holonomy-orbit invariance", Box::new(criterion_6)),
        ("7 ODE correctness", Box::new(criterion_7)),
        ("8 cone invariance along the ODE", Box::new(criterion_8)),
        ("9 gradient check", Box::new(criterion_9)),
        ("10 CLI contracts", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        match run() {
            Ok(msg) => println!("PASS  criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
