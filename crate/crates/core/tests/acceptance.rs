//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{chsh_oracle_max, random_bounded_lp, random_ns_behavior, vertex_enumeration_optimum};
use nonlocal_volume::cli::{run_scan, Family, Quantifier, ScanConfig, ScanTable, SettingsMode};
use nonlocal_volume::lp::{solve_lp, LpStatus};
use nonlocal_volume::montecarlo::{estimate_volumes, SamplerSpec, VolumeEstimate, VolumeEstimator, DEFAULT_TOL};
use nonlocal_volume::polytope::{
    bell_value, cglmp3_functional, cglmp_optimal_settings, chsh_any_functional, chsh_functional,
    enumerate_strategies, i3322_cg_functional, is_local, trace_distance_to_local, Behavior, Scenario,
};
use nonlocal_volume::quantum::{
    apply_local_unitaries, behavior_from, ghz_alpha, psi_alpha, psi_gamma, ComplexMatrix, PureState,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;

type Criterion = (&'static str, fn(&mut Shared) -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

/// Scan rows collected by the scan criteria, re-checked by the ordering one.
#[derive(Default)]
struct Shared {
    rows: Vec<(String, Vec<(f64, f64)>)>,
}

fn remember(shared: &mut Shared, label: &str, table: &ScanTable) {
    let rows = table.rows.iter().map(|r| (r.v_hat, r.vq_hat)).collect();
    shared.rows.push((label.to_string(), rows));
}

fn argmax(params: &[f64], values: &[f64]) -> f64 {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    params[best]
}

fn argmin(params: &[f64], values: &[f64]) -> f64 {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    argmax(params, &neg)
}

fn scan(family: Family, grid: &str, sampler: SamplerSpec, quantifiers: &[&str], settings: SettingsMode, samples: u64) -> ScanTable {
    let config = ScanConfig {
        family,
        grid: grid.parse().unwrap(),
        sampler,
        quantifiers: quantifiers.iter().map(|q| q.parse::<Quantifier>().unwrap()).collect(),
        settings,
        samples,
        seed: SEED,
        tol: DEFAULT_TOL,
    };
    run_scan(&config, None).unwrap()
}

fn cglmp_anomaly_values(_: &mut Shared) -> Verdict {
    let start = Instant::now();
    let f = cglmp3_functional();
    let (ma, mb) = cglmp_optimal_settings();
    let at = |g: f64| bell_value(&f, &behavior_from(&psi_gamma(g).unwrap(), &ma, &mb).unwrap()).unwrap();
    let v1 = at(1.0);
    let v2 = at((11f64.sqrt() - 3f64.sqrt()) / 2.0);
    let elapsed = start.elapsed();
    let ok = (v1 - 2.873).abs() <= 1e-3 && (v2 - 2.915).abs() <= 1e-3 && elapsed < Duration::from_secs(1);
    verdict(ok, format!("I3(psi(1)) = {v1:.6}, I3(psi(0.792)) = {v2:.6}"))
}

fn cglmp_anomaly_location(shared: &mut Shared) -> Verdict {
    let start = Instant::now();
    let t = scan(
        Family::PsiGamma,
        "0.5:1.2:0.002",
        SamplerSpec::qutrit(2).unwrap(),
        &["violation:cglmp3"],
        SettingsMode::Canonical,
        1,
    );
    let peak = argmax(&t.params(), &t.max_bell(0));
    let elapsed = start.elapsed();
    remember(shared, "cglmp-canonical", &t);
    verdict(
        (peak - 0.792).abs() <= 0.005 + 1e-12 && t.rows.len() == 351 && elapsed < Duration::from_secs(60),
        format!("max-violation argmax gamma = {peak} over {} points", t.rows.len()),
    )
}

fn chsh_scan(shared: &mut Shared) -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chsh.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_nlvol"))
        .args([
            "scan", "--family", "psi-alpha", "--grid", "0:1:0.025", "--scenario", "qubit:2",
            "--quantifiers", "volume,trace-weighted,violation:chsh,violation:chsh-any",
            "--samples", "20000", "--seed", &SEED.to_string(), "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    if !status.success() {
        return verdict(false, format!("nlvol exited with {status}"));
    }
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    let params: Vec<f64> = rows.iter().map(|r| r[col("param")]).collect();
    let v: Vec<f64> = rows.iter().map(|r| r[col("vHat")]).collect();
    let vq: Vec<f64> = rows.iter().map(|r| r[col("vQHat")]).collect();
    let (av, avq) = (argmax(&params, &v), argmax(&params, &vq));
    shared.rows.push(("chsh".into(), v.iter().copied().zip(vq.iter().copied()).collect()));
    let near = |a: f64| (a - 0.71).abs() <= 0.04 + 1e-12;
    verdict(
        rows.len() == 41 && near(av) && near(avq),
        format!("argmax vHat = {av}, argmax vQHat = {avq} (41 points, N = 2e4)"),
    )
}

fn qutrit_scan(shared: &mut Shared) -> Verdict {
    let t = scan(
        Family::PsiGamma,
        "0.6:1.3:0.05",
        SamplerSpec::qutrit(2).unwrap(),
        &["volume", "trace-weighted"],
        SettingsMode::Sampled,
        5000,
    );
    remember(shared, "qutrit", &t);
    let (av, avq) = (argmax(&t.params(), &t.v_hat()), argmax(&t.params(), &t.vq_hat()));
    let near = |a: f64| (a - 1.0).abs() <= 0.1 + 1e-12;
    verdict(near(av) && near(avq), format!("argmax vHat = {av}, argmax vQHat = {avq} (N = 5e3)"))
}

fn weak_anomaly(shared: &mut Shared) -> Verdict {
    let t = scan(
        Family::GhzAlpha,
        "0:20:1",
        SamplerSpec::qutrit(2).unwrap(),
        &["volume", "trace-weighted"],
        SettingsMode::Sampled,
        10_000,
    );
    remember(shared, "ghz", &t);
    let (params, vq) = (t.params(), t.vq_hat());
    let minima: Vec<f64> = t.local_minima_of(&vq).into_iter().filter(|&a| a > 2.0 && a < 12.0).collect();
    verdict(
        !minima.is_empty(),
        format!(
            "vQHat local minima in (2,12) deg: {minima:?}; argmin vHat = {} deg, argmin vQHat = {} deg",
            argmin(&params, &t.v_hat()),
            argmin(&params, &vq)
        ),
    )
}

fn ordering(shared: &mut Shared) -> Verdict {
    let mut rows = 0;
    for (label, table) in &shared.rows {
        for &(v, vq) in table {
            rows += 1;
            if vq > v {
                return verdict(false, format!("{label}: vQHat {vq} > vHat {v}"));
            }
        }
    }
    let cases: Vec<(PureState, SamplerSpec)> = vec![
        (psi_alpha(0.7).unwrap(), SamplerSpec::qubit(2).unwrap()),
        (psi_alpha(0.7).unwrap(), SamplerSpec::qubit(3).unwrap()),
        (psi_gamma(0.792).unwrap(), SamplerSpec::qutrit(2).unwrap()),
        (ghz_alpha(6.0).unwrap(), SamplerSpec::qutrit(2).unwrap()),
    ];
    let mut records = 0;
    for (state, spec) in cases {
        let est = VolumeEstimator::new(state, spec, Vec::new(), DEFAULT_TOL).unwrap();
        let mut bad = None;
        let e = est
            .estimate_with(5000, SEED, |r| {
                records += 1;
                let chi = if r.is_nonlocal { 1.0 } else { 0.0 };
                if r.nl > chi && bad.is_none() {
                    bad = Some(r.index);
                }
                Ok(())
            })
            .unwrap();
        if let Some(i) = bad {
            return verdict(false, format!("record {i}: nl > chi"));
        }
        if e.vq_hat > e.v_hat {
            return verdict(false, format!("estimate: vQHat {} > vHat {}", e.vq_hat, e.v_hat));
        }
    }
    verdict(true, format!("{rows} scan rows and {records} records with vQ <= v and nl <= chi"))
}

fn oracle_equivalence(_: &mut Shared) -> Verdict {
    let polytope = enumerate_strategies(Scenario::symmetric(2, 2).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut nonlocal = 0;
    for k in 0..1000 {
        let b = random_ns_behavior(&mut rng);
        let local = is_local(&b, &polytope, DEFAULT_TOL).unwrap();
        let oracle = chsh_oracle_max(&b) <= 2.0 + 1e-8;
        if local != oracle {
            return verdict(false, format!("behavior {k}: is_local {local}, oracle {oracle}"));
        }
        nonlocal += usize::from(!local);
    }
    let pr = trace_distance_to_local(&Behavior::pr_box(), &polytope).unwrap().distance;
    verdict(
        (pr - 0.25).abs() <= 1e-9,
        format!("1000/1000 agree ({nonlocal} nonlocal); NL(PR box) = {pr}"),
    )
}

fn lp_correctness(_: &mut Shared) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 100);
    let (mut optimal, mut infeasible, mut worst) = (0, 0, 0.0f64);
    for k in 0..500 {
        let p = random_bounded_lp(&mut rng);
        let sol = solve_lp(&p).unwrap();
        match (vertex_enumeration_optimum(&p), sol.status) {
            (Some(best), LpStatus::Optimal) => {
                let err = (sol.objective_value - best).abs();
                worst = worst.max(err);
                if err > 1e-7 || !p.is_feasible(&sol.variables) {
                    return verdict(false, format!("problem {k}: simplex {} vs {best}", sol.objective_value));
                }
                optimal += 1;
            }
            (None, LpStatus::Infeasible) => infeasible += 1,
            (oracle, status) => return verdict(false, format!("problem {k}: oracle {oracle:?}, simplex {status:?}")),
        }
    }
    verdict(true, format!("{optimal} optimal and {infeasible} infeasible match; max error {worst:.1e}"))
}

fn sigma(a: &VolumeEstimate, b: &VolumeEstimate) -> (f64, f64) {
    (
        (a.std_err_v.powi(2) + b.std_err_v.powi(2)).sqrt(),
        (a.std_err_vq.powi(2) + b.std_err_vq.powi(2)).sqrt(),
    )
}

fn state_invariance_properties(_: &mut Shared) -> Verdict {
    let product_cases: Vec<(PureState, SamplerSpec, Vec<_>)> = vec![
        (psi_alpha(1.0).unwrap(), SamplerSpec::qubit(2).unwrap(), vec![chsh_functional(), chsh_any_functional()]),
        (psi_alpha(0.0).unwrap(), SamplerSpec::qubit(3).unwrap(), vec![i3322_cg_functional()]),
        (ghz_alpha(90.0).unwrap(), SamplerSpec::qutrit(2).unwrap(), vec![cglmp3_functional()]),
    ];
    for (state, spec, fs) in product_cases {
        let e = estimate_volumes(&state, spec, &fs, 1000, SEED, DEFAULT_TOL).unwrap();
        if e.v_hat != 0.0 || e.vq_hat != 0.0 || e.vi_hat.iter().any(|&v| v != 0.0) {
            return verdict(false, format!("product state gave {e:?}"));
        }
    }

    // Z rotations and bit flips map the uniform Bloch-angle measure to itself.
    let (a, b) = (0.9f64, 2.3f64);
    let rz = |t: f64| ComplexMatrix::diagonal(&[Complex64::from_polar(1.0, -t / 2.0), Complex64::from_polar(1.0, t / 2.0)]);
    let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
    let state = psi_alpha(0.8).unwrap();
    let moved = apply_local_unitaries(&state, &rz(a).matmul(&x).unwrap(), &rz(b)).unwrap();
    let spec = SamplerSpec::qubit(2).unwrap();
    let e1 = estimate_volumes(&state, spec, &[], 10_000, SEED, DEFAULT_TOL).unwrap();
    let e2 = estimate_volumes(&moved, spec, &[], 10_000, SEED + 1, DEFAULT_TOL).unwrap();
    let (sv, svq) = sigma(&e1, &e2);
    let lu_ok = (e1.v_hat - e2.v_hat).abs() <= 3.0 * sv && (e1.vq_hat - e2.vq_hat).abs() <= 3.0 * svq;

    let pos = estimate_volumes(&psi_alpha(0.9).unwrap(), spec, &[], 100_000, SEED, DEFAULT_TOL).unwrap();
    verdict(
        lu_ok && pos.v_hat > 0.0,
        format!(
            "products all zero; LU pair vHat {:.4}/{:.4}, vQHat {:.5}/{:.5}; vHat(psi(0.9)) = {}",
            e1.v_hat, e2.v_hat, e1.vq_hat, e2.vq_hat, pos.v_hat
        ),
    )
}

fn determinism(_: &mut Shared) -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, tag: &str, extra: &[&str]| {
        let out = dir.path().join(format!("{tag}-{threads}.csv"));
        let rec = dir.path().join(format!("{tag}-{threads}.rec"));
        let mut args = vec!["--threads", threads, "scan"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--seed", "17", "--out", out.to_str().unwrap(), "--records", rec.to_str().unwrap()]);
        let status = Command::new(env!("CARGO_BIN_EXE_nlvol")).args(&args).status().unwrap();
        assert!(status.success());
        (fs::read(out).unwrap(), fs::read(rec).unwrap())
    };
    let qubit = [
        "--family", "psi-alpha", "--grid", "0.5:0.9:0.1", "--scenario", "qubit:2",
        "--quantifiers", "volume,trace-weighted,violation:chsh", "--samples", "5000",
    ];
    let qutrit = [
        "--family", "psi-gamma", "--grid", "0.8:1.0:0.1", "--scenario", "qutrit:2",
        "--quantifiers", "volume,trace-weighted,violation:cglmp3", "--samples", "2000",
    ];
    let mut ok = true;
    let mut bytes = 0;
    for (tag, args) in [("qubit", &qubit[..]), ("qutrit", &qutrit[..])] {
        let one = run("1", tag, args);
        let eight = run("8", tag, args);
        bytes += one.0.len() + one.1.len();
        ok &= one == eight;
    }
    verdict(ok, format!("CSV and record files identical for 1 and 8 threads ({bytes} bytes each)"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("CGLMP anomaly values", cglmp_anomaly_values),
        ("CGLMP anomaly location", cglmp_anomaly_location),
        ("CHSH scan peak", chsh_scan),
        ("qutrit nonlocal volume peak", qutrit_scan),
        ("weak anomaly", weak_anomaly),
        ("ordering vQ <= v, nl <= chi", ordering),
        ("locality oracle equivalence", oracle_equivalence),
        ("LP correctness", lp_correctness),
        ("product, local-unitary and entangled states", state_invariance_properties),
        ("determinism across threads", determinism),
    ];
    let mut shared = Shared::default();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(|| check(&mut shared)));
        let v = result.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        failures += usize::from(!v.passed);
        println!(
            "[{}] {:>2}. {name}: {} ({:.1} s)",
            if v.passed { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
