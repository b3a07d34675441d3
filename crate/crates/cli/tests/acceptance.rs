//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed regardless of
//! output capture. Exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bswitch_core::bernstein::{basis, binomial, BernsteinSeries};
use bswitch_core::lyapunov::{lie_derivative, quadratic_candidate, vector_field_from_linear};
use bswitch_core::switched::{euclidean_norm, presets, simulate, Mode, SimStatus};
use bswitch_core::verifier::{interval_eval, taylor_upper_bound, verify_ineq, BoxDomain, Status, VerifyConfig};
use bswitch_core::MultiPoly;
use nalgebra::{dmatrix, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

// Tolerances and thresholds.
const C1_MAX_SECONDS: f64 = 1.0;
const C2_TOL: f64 = 1e-12;
const C3_TOL: f64 = 1e-10;
const C4_FD_TOL: f64 = 1e-4;
const C4_DT: f64 = 1e-3;
const C4_X0: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
const C5_STANDARD_MAX: f64 = 1e-2;
const C5_BLENDED_MAX: f64 = 1e-1;
const C5_DT: f64 = 1e-3;
const C6_DT: f64 = 1e-4;
const C7_TRIPLES: usize = 1000;
const C7_RUNS: usize = 100;
const C7_GRID: usize = 101;
const C8_RATIO: (f64, f64) = (12.0, 20.0);
const C8_DT: f64 = 0.01;
const C8_T_END: f64 = 0.5;
const C9_REPEATS: usize = 3;

const SEED: u64 = 0x5eed_acce_97ed;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_bswitch")
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().expect("spawn bswitch");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

/// Worked quadratic example: `verify` proves `V̇ < 0.01` on the unit square.
fn c1_reference_certificate() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cert = dir.path().join("cert.txt");
    let cert_s = cert.to_str().unwrap();
    let start = Instant::now();
    let (code, stdout, stderr) = run_cli(&[
        "verify",
        "--poly",
        "-2*x1*(x1 - 2*x2) - 2*x2*(3*x1 + 4*x2)",
        "--bound",
        "x1:0:1",
        "--bound",
        "x2:0:1",
        "--eps",
        "0.01",
        "--cert",
        cert_s,
    ]);
    let secs = start.elapsed().as_secs_f64();
    let body = std::fs::read_to_string(&cert).unwrap_or_default();
    let verified = body.lines().any(|l| l == "status=Verified");
    check(
        code == 0 && verified && secs < C1_MAX_SECONDS,
        format!("exit 0, status=Verified, {secs:.3}s wall clock"),
        format!("exit {code}, verified={verified}, {secs:.3}s; stdout={stdout:?} stderr={stderr:?}"),
    )
}

fn c2_partition_of_unity() -> Outcome {
    let mut worst = 0.0_f64;
    for m in [1, 5, 10, 50, 100, 200] {
        for i in 0..=100 {
            let t = f64::from(i) / 100.0;
            let s: f64 = (0..=m).map(|r| basis(m, r, t).unwrap()).sum();
            worst = worst.max((s - 1.0).abs());
        }
    }
    check(worst <= C2_TOL, format!("max |sum - 1| = {worst:e}"), format!("max |sum - 1| = {worst:e} > {C2_TOL:e}"))
}

/// Exact monomial coefficients of the degree-`m` series of `t²`, scaled by `m²`.
fn squared_series_numerators(m: u32) -> Vec<i128> {
    let c = |n: u32, k: u32| binomial(n, k) as i128;
    (0..=m)
        .map(|k| {
            (0..=k)
                .map(|r| {
                    let sign = if (k - r) % 2 == 0 { 1 } else { -1 };
                    sign * i128::from(r * r) * c(m, r) * c(m - r, k - r)
                })
                .sum()
        })
        .collect()
}

fn c3_closed_form() -> Outcome {
    // Symbolic oracle for small m: the series of t² is (1 - 1/m) t² + t/m.
    for m in 1..=5u32 {
        let got = squared_series_numerators(m);
        let mi = i128::from(m);
        let mut want = vec![0i128; m as usize + 1];
        want[1] += mi;
        if m >= 2 {
            want[2] += mi * mi - mi;
        }
        if got != want {
            return Err(format!("symbolic expansion for m={m}: {got:?} != {want:?}"));
        }
    }
    let mut closed = 0.0_f64;
    for m in [5, 50, 100] {
        let s = BernsteinSeries::from_function(|t| t * t, m, 0.0, 1.0).unwrap();
        for i in 0..=100 {
            let t = f64::from(i) / 100.0;
            closed = closed.max((s.eval(t) - (t * t + t * (1.0 - t) / f64::from(m))).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut affine = 0.0_f64;
    for _ in 0..200 {
        let (a, b): (f64, f64) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let m = rng.random_range(1..=200);
        let s = BernsteinSeries::from_function(|t| a + b * t, m, 0.0, 1.0).unwrap();
        for i in 0..=100 {
            let t = f64::from(i) / 100.0;
            affine = affine.max((s.eval(t) - (a + b * t)).abs());
        }
    }
    check(
        closed <= C3_TOL && affine <= C3_TOL,
        format!("symbolic m<=5 exact; closed-form err {closed:e}; affine err {affine:e}"),
        format!("closed-form err {closed:e}, affine err {affine:e} (tol {C3_TOL:e})"),
    )
}

fn c4_lie_derivative() -> Outcome {
    let a = dmatrix![-1.0, 2.0; -3.0, -4.0];
    let v = quadratic_candidate(&DMatrix::identity(2, 2)).unwrap();
    let vdot = lie_derivative(&v, &vector_field_from_linear(&a).unwrap()).unwrap();
    let expected: MultiPoly = "-2*x1^2 - 2*x1*x2 - 8*x2^2".parse().unwrap();
    if vdot != expected {
        return Err(format!("got {vdot}, expected {expected}"));
    }
    let sys = presets::preset("basic").unwrap();
    // Unit-norm start: the finite-difference truncation error grows with |x0|².
    let traj = simulate(&sys, &C4_X0, 5.0, C4_DT, Mode::Standard).unwrap();
    let vs: Vec<f64> = traj.states.iter().map(|x| v.poly().eval(x).unwrap()).collect();
    let mut worst = 0.0_f64;
    for k in 1..vs.len() - 1 {
        let fd = (vs[k + 1] - vs[k - 1]) / (2.0 * C4_DT);
        worst = worst.max((fd - vdot.eval(&traj.states[k]).unwrap()).abs());
    }
    check(
        worst <= C4_FD_TOL,
        format!("{vdot}; finite-difference gap {worst:e} from x0={C4_X0:?}"),
        format!("finite-difference gap {worst:e} > {C4_FD_TOL:e}"),
    )
}

fn final_norm(name: &str, mode: Mode, dt: f64) -> (f64, SimStatus) {
    let sys = presets::preset(name).unwrap();
    let traj = simulate(&sys, &[1.0, 1.0], 10.0, dt, mode).unwrap();
    (euclidean_norm(traj.final_state()), traj.status)
}

fn c5_stable_example() -> Outcome {
    let (std_norm, std_status) = final_norm("example1", Mode::Standard, C5_DT);
    let (bl_norm, bl_status) = final_norm("example1", Mode::Blended, C5_DT);
    check(
        std_norm < C5_STANDARD_MAX
            && bl_norm < C5_BLENDED_MAX
            && std_status == SimStatus::Completed
            && bl_status == SimStatus::Completed,
        format!("|x(10)| standard {std_norm:e}, blended {bl_norm:e}"),
        format!("|x(10)| standard {std_norm:e} ({std_status:?}), blended {bl_norm:e} ({bl_status:?})"),
    )
}

fn c6_unstable_example() -> Outcome {
    let describe = |s: &SimStatus, n: f64| match s {
        SimStatus::DivergenceDetected { time } => format!("diverged at t={time}"),
        SimStatus::Completed => format!("bounded, |x(10)|={n:e}"),
    };
    let (std_norm, std_status) = final_norm("example2", Mode::Standard, C6_DT);
    let (bl_norm, bl_status) = final_norm("example2", Mode::Blended, C6_DT);
    let ok = std_status.diverged() && bl_status.diverged();
    let msg = format!("standard {}, blended {}", describe(&std_status, std_norm), describe(&bl_status, bl_norm));
    check(ok, msg.clone(), msg)
}

fn random_poly(rng: &mut ChaCha8Rng, names: &[&str]) -> MultiPoly {
    let n = names.len();
    let count = rng.random_range(1..=8);
    let terms: Vec<(Vec<u32>, f64)> = (0..count)
        .map(|_| {
            let mut budget = 4u32;
            let exps = (0..n)
                .map(|_| {
                    let e = rng.random_range(0..=budget);
                    budget -= e;
                    e
                })
                .collect();
            (exps, rng.random_range(-5.0..5.0))
        })
        .collect();
    MultiPoly::from_terms(names, terms).unwrap()
}

fn random_box(rng: &mut ChaCha8Rng, names: &[&str]) -> Vec<(String, f64, f64)> {
    names
        .iter()
        .map(|n| {
            let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            (n.to_string(), a.min(b), a.max(b))
        })
        .collect()
}

fn grid_max(p: &MultiPoly, dims: &[(String, f64, f64)]) -> f64 {
    let n = dims.len();
    let total = C7_GRID.pow(n as u32);
    let mut x = vec![0.0; n];
    let mut best = f64::NEG_INFINITY;
    for flat in 0..total {
        let mut rest = flat;
        for (d, (_, lo, hi)) in dims.iter().enumerate() {
            let i = rest % C7_GRID;
            rest /= C7_GRID;
            x[d] = if i == C7_GRID - 1 { *hi } else { lo + (i as f64 / (C7_GRID - 1) as f64) * (hi - lo) };
        }
        best = best.max(p.eval(&x).unwrap());
    }
    best
}

fn c7_verifier_soundness() -> Outcome {
    let all = ["x1", "x2", "x3"];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    for trial in 0..C7_TRIPLES {
        let names = &all[..rng.random_range(1..=3)];
        let p = random_poly(&mut rng, names);
        let dims = random_box(&mut rng, names);
        let x: Vec<f64> = dims.iter().map(|(_, lo, hi)| lo + rng.random::<f64>() * (hi - lo)).collect();
        let domain = BoxDomain::new(dims.iter().cloned()).unwrap();
        let v = p.eval(&x).unwrap();
        let iv = interval_eval(&p, &domain, 1e-12).unwrap();
        let ub = taylor_upper_bound(&p, &domain, 1e-12).unwrap();
        if !(iv.lo <= v && v <= iv.hi && v <= ub) {
            return Err(format!("triple {trial}: f={v} interval={iv} taylor={ub} for {p}"));
        }
    }
    let (mut verified, mut falsified, mut inconclusive) = (0, 0, 0);
    for run in 0..C7_RUNS {
        let names = &all[..rng.random_range(1..=3)];
        let p = random_poly(&mut rng, names);
        let dims = random_box(&mut rng, names);
        let eps = rng.random_range(-3.0..6.0);
        let domain = BoxDomain::new(dims.iter().cloned()).unwrap();
        let cfg = VerifyConfig { max_boxes: 100_000, ..VerifyConfig::with_epsilon(eps) };
        let cert = verify_ineq(&p, &domain, &cfg).unwrap();
        match &cert.status {
            Status::Verified => {
                verified += 1;
                let m = grid_max(&p, &dims);
                if m >= eps {
                    return Err(format!("run {run}: Verified but grid max {m} >= {eps} for {p}"));
                }
            }
            Status::Falsified { witness, value } => {
                falsified += 1;
                if !(domain.contains(witness) && p.eval(witness).unwrap() >= eps && *value >= eps) {
                    return Err(format!("run {run}: bad witness {witness:?} for {p}"));
                }
            }
            Status::Inconclusive { .. } => inconclusive += 1,
        }
    }
    Ok(format!(
        "{C7_TRIPLES} containment triples ok; {C7_RUNS} runs: {verified} verified, {falsified} falsified, {inconclusive} inconclusive, none unsound"
    ))
}

fn c8_rk4_order() -> Outcome {
    let sys = presets::preset("example1").unwrap();
    let run = |h: f64| simulate(&sys, &[1.0, 1.0], C8_T_END, h, Mode::Blended).unwrap().final_state().to_vec();
    let (coarse, fine, reference) = (run(C8_DT), run(C8_DT / 2.0), run(C8_DT / 8.0));
    let err = |x: &[f64]| x.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let ratio = err(&coarse) / err(&fine);
    let msg = format!("error ratio {ratio:.3} (dt={C8_DT}, t_end={C8_T_END})");
    check((C8_RATIO.0..=C8_RATIO.1).contains(&ratio), msg.clone(), msg)
}

fn sha256_file(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap_or_default();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut digests: Vec<Vec<String>> = Vec::new();
    for rep in 0..C9_REPEATS {
        let p = |name: &str| dir.path().join(format!("{rep}-{name}"));
        let (interp, sim, cmp, vdot, cert) =
            (p("interp.csv"), p("sim.csv"), p("cmp.csv"), p("vdot.txt"), p("cert.txt"));
        let s = |q: &Path| q.to_str().unwrap().to_string();
        let commands: Vec<Vec<String>> = vec![
            vec![
                "interpolate".into(),
                "--degree".into(),
                "100".into(),
                "--delta".into(),
                "10".into(),
                "--out".into(),
                s(&interp),
            ],
            vec![
                "simulate".into(),
                "--preset".into(),
                "example1".into(),
                "--t-end".into(),
                "2".into(),
                "--out".into(),
                s(&sim),
            ],
            vec![
                "compare".into(),
                "--preset".into(),
                "example2".into(),
                "--t-end".into(),
                "1".into(),
                "--dt".into(),
                "1e-4".into(),
                "--out".into(),
                s(&cmp),
            ],
            vec!["lyapunov".into(), "--preset".into(), "basic".into(), "--out".into(), s(&vdot)],
            vec![
                "verify".into(),
                "--poly-file".into(),
                s(&vdot),
                "--bound".into(),
                "x1:0:1".into(),
                "--bound".into(),
                "x2:0:1".into(),
                "--eps".into(),
                "0.01".into(),
                "--cert".into(),
                s(&cert),
            ],
        ];
        for cmd in &commands {
            let args: Vec<&str> = cmd.iter().map(String::as_str).collect();
            let (code, _, stderr) = run_cli(&args);
            if code != 0 {
                return Err(format!("`{}` exited {code}: {stderr}", cmd.join(" ")));
            }
        }
        digests.push([&interp, &sim, &cmp, &vdot, &cert].iter().map(|q| sha256_file(q)).collect());
    }
    let same = digests.windows(2).all(|w| w[0] == w[1]);
    check(
        same,
        format!("{} files byte-identical across {C9_REPEATS} runs", digests[0].len()),
        format!("digests differ: {digests:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("C1 reference certificate", c1_reference_certificate),
        ("C2 partition of unity", c2_partition_of_unity),
        ("C3 closed form and affine reproduction", c3_closed_form),
        ("C4 Lie derivative fidelity", c4_lie_derivative),
        ("C5 stable example", c5_stable_example),
        ("C6 unstable example diverges", c6_unstable_example),
        ("C7 verifier soundness", c7_verifier_soundness),
        ("C8 RK4 order", c8_rk4_order),
        ("C9 determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
