//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path as FsPath;
use std::process::Command;
use std::time::Instant;

use crisscross::bcp::{estimate_bcp, BcpConfig, CostEstimate};
use crisscross::experiments::{diagnostics_batch, ld_check, sweep_against, DiagnosticsSummary, SweepConfig};
use crisscross::params::{compute_threshold_constants, make_r_network, DriftMode, NetworkLimits, RNetwork};
use crisscross::policy::{indicator_form_audit, PolicyKind};
use crisscross::rng::rng_for;
use crisscross::sim::{audit_non_idling, check_conservation, check_scaled_identities, diffusion_scale, simulate};
use crisscross::stats::{non_increasing_within, Estimate};
use crisscross::workload::{
    effective_cost, effective_cost_value, lp_oracle, skorohod_reflect, skorohod_regulator, Path,
};
use rand::Rng;

const SEED: u64 = 20_240_611;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn second_limits() -> NetworkLimits {
    NetworkLimits { lambda: [0.9, 1.2], mu: [1.5, 3.0, 1.2], h: [2.5, 1.5, 0.5], gamma: 0.7, b: [0.0; 3] }
}

fn c1_lp_oracle() -> Outcome {
    let mut rng = rng_for(SEED, &[1]);
    let mut worst = 0.0f64;
    for limits in [NetworkLimits::example(), second_limits()] {
        let limits = limits.validate().map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let (w1, w2) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
            let cf = effective_cost(&limits, w1, w2).map_err(|e| e.to_string())?;
            let or = lp_oracle(&limits, w1, w2).map_err(|e| e.to_string())?;
            let hz: f64 = (0..3).map(|k| limits.h[k] * cf.z[k]).sum();
            let err = (cf.value - or.value).abs().max((hz - or.value).abs());
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("value mismatch {err:e} at ({w1}, {w2})"))?;

            let (d1, d2) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let up = effective_cost_value(&limits, w1 + d1, w2 + d2);
            ensure(up >= cf.value - 1e-12, || format!("h_hat decreases from ({w1}, {w2})"))?;

            // Crossing the region boundary along w2.
            let [_, m2, m3] = limits.mu;
            let wb = m2 * w1 / m3;
            let eps = 1e-9;
            let jump = (effective_cost_value(&limits, w1, wb + eps)
                - effective_cost_value(&limits, w1, (wb - eps).max(0.0)))
            .abs();
            ensure(jump <= 1e-7 * (1.0 + w1), || format!("h_hat jumps by {jump:e} at w1 = {w1}"))?;
        }
    }
    Ok(format!("2000 pairs, worst value/h.z error {worst:.1e}"))
}

fn random_path(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let drift = rng.random_range(-0.05..0.05);
    let mut x = vec![0.0];
    for _ in 1..n {
        let last = *x.last().unwrap();
        x.push(last + drift + rng.random_range(-1.0..1.0));
    }
    x
}

fn c2_skorohod() -> Outcome {
    let mut rng = rng_for(SEED, &[2]);
    let n = 1000;
    let mut worst_ratio = 0.0f64;
    for _ in 0..1000 {
        let xv = random_path(&mut rng, n);
        let x = Path::uniform(1e-3, xv.clone()).map_err(|e| e.to_string())?;
        let w = skorohod_reflect(&x).map_err(|e| e.to_string())?;
        let v = skorohod_regulator(&x).map_err(|e| e.to_string())?;
        ensure(w.values.iter().all(|&y| y >= 0.0), || "reflected path went negative".into())?;
        for k in 0..n {
            ensure((w.values[k] - xv[k] - v.values[k]).abs() <= 1e-9, || format!("w != x + v at {k}"))?;
            if k > 0 && v.values[k] > v.values[k - 1] {
                ensure(w.values[k] <= 1e-9, || format!("regulator grows while w > 0 at {k}"))?;
            }
        }

        // Another admissible pair: push more than needed, at random times.
        let mut v_alt = vec![0.0; n];
        for k in 0..n {
            let prev: f64 = if k == 0 { 0.0 } else { v_alt[k - 1] };
            let extra = if rng.random_bool(0.05) { rng.random_range(0.0..0.5) } else { 0.0 };
            v_alt[k] = (prev + extra).max(-xv[k]);
        }
        for k in 0..n {
            ensure(v_alt[k] + 1e-12 >= v.values[k], || format!("regulator is not minimal at {k}"))?;
            ensure(xv[k] + v_alt[k] + 1e-12 >= w.values[k], || format!("reflection is not minimal at {k}"))?;
        }

        let yv = random_path(&mut rng, n);
        let y = Path::uniform(1e-3, yv.clone()).map_err(|e| e.to_string())?;
        let wy = skorohod_reflect(&y).map_err(|e| e.to_string())?;
        let dx = xv.iter().zip(&yv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dw = w.values.iter().zip(&wy.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dx > 0.0 {
            worst_ratio = worst_ratio.max(dw / dx);
        }
        ensure(dw <= 2.0 * dx + 1e-9, || format!("Lipschitz-2 fails: {dw} > 2 * {dx}"))?;
    }
    Ok(format!("1000 paths of 1000 points, worst sup-norm ratio {worst_ratio:.3}"))
}

fn c3_marginals(j_star: &mut Option<CostEstimate>) -> Outcome {
    let limits = NetworkLimits::example();
    let est = estimate_bcp(&limits, &BcpConfig::defaults(&limits, SEED)).map_err(|e| e.to_string())?;
    *j_star = Some(est.j_star);
    let targets = [std::f64::consts::FRAC_1_SQRT_2, 1.0];
    let rel: Vec<f64> = (0..2).map(|i| (est.workload[i].mean - targets[i]).abs() / targets[i]).collect();
    let msg = format!(
        "W1 {:.4} (target {:.4}), W2 {:.4} (target 1), rel errors {:.2}%, {:.2}%; J* = {:.4} +- {:.4}",
        est.workload[0].mean,
        targets[0],
        est.workload[1].mean,
        100.0 * rel[0],
        100.0 * rel[1],
        est.j_star.mean,
        est.j_star.stderr_or_zero()
    );
    ensure(rel.iter().all(|&e| e <= 0.02), || msg.clone())?;
    Ok(msg)
}

fn c4_conservation() -> Outcome {
    let limits = NetworkLimits::example();
    let mut epochs = 0usize;
    let mut runs = 0usize;
    for r in [5.0, 20.0] {
        let net = make_r_network(limits, r, 1.2, 3.0, DriftMode::Constant).map_err(|e| e.to_string())?;
        for kind in PolicyKind::ALL {
            let policy = kind.build(&net);
            for rep in 0..100u64 {
                let tr = simulate(&net, &policy, r * r * 2.0, crisscross::rng::derive_seed(SEED, &[4, rep]))
                    .map_err(|e| e.to_string())?;
                let ctx = |e: crisscross::Error| format!("r = {r}, {kind}, rep {rep}: {e}");
                check_conservation(&tr).map_err(ctx)?;
                audit_non_idling(&tr).map_err(ctx)?;
                check_scaled_identities(&diffusion_scale(&tr, &net), &net).map_err(ctx)?;
                epochs += tr.len();
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} replications, {epochs} epochs audited"))
}

fn c5_policy_grid() -> Outcome {
    let ex = NetworkLimits::example();
    let alt = NetworkLimits { lambda: [1.0, 1.0], mu: [3.0, 1.5, 1.0], h: [1.0, 2.0, 1.0], gamma: 1.0, b: [0.0; 3] };
    let nets: Vec<RNetwork> = vec![
        RNetwork::from_parts(ex, 20.0, [1.0, 1.0], [2.0, 2.0, 1.0], 3, 9),
        RNetwork::from_parts(ex, 5.0, [1.0, 1.0], [2.0, 2.0, 1.0], 1, 5),
        RNetwork::from_parts(alt, 9.0, [1.0, 1.0], [3.0, 1.5, 1.0], 2, 6),
    ]
    .into_iter()
    .collect::<Result<_, _>>()
    .map_err(|e| e.to_string())?;
    let mut points = 0;
    for net in &nets {
        for q1 in 0..=30 {
            for q2 in 0..=30 {
                for q3 in 0..=30 {
                    indicator_form_audit([q1, q2, q3], net).map_err(|e| e.to_string())?;
                    points += 1;
                }
            }
        }
    }
    Ok(format!("{points} states on 3 networks"))
}

struct SweepOutcome {
    c6: Outcome,
    c7: Outcome,
}

fn combined(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

fn c6_c7_sweep(j_star: Option<CostEstimate>) -> SweepOutcome {
    let limits = NetworkLimits::example();
    let j_star = match j_star {
        Some(j) => Ok(j),
        None => estimate_bcp(&limits, &BcpConfig::defaults(&limits, SEED)).map(|e| e.j_star),
    };
    let cfg = SweepConfig {
        ell0: 1.2,
        c: 3.0,
        horizon: 15.0,
        replications: 200,
        seed: SEED,
        bcp: BcpConfig::defaults(&limits, SEED),
    };
    let r_list = [5.0, 10.0, 20.0, 40.0];
    let table = match j_star.and_then(|j| sweep_against(&limits, &PolicyKind::ALL, &r_list, &cfg, j)) {
        Ok(t) => t,
        Err(e) => return SweepOutcome { c6: Err(e.to_string()), c7: Err(e.to_string()) },
    };

    let gaps = table.abs_gaps(PolicyKind::Threshold);
    let shown: Vec<String> = gaps.iter().map(|g| format!("{:.3}+-{:.3}", g.mean, g.stderr)).collect();
    let c6_msg = format!("threshold |gap| by r: {}", shown.join(", "));
    let last = gaps.last().map(|g| g.mean).unwrap_or(f64::INFINITY);
    let c6 = if !non_increasing_within(&gaps, 2.0) {
        Err(format!("{c6_msg}; not non-increasing within 2 se"))
    } else if last >= 0.15 {
        Err(format!("{c6_msg}; largest-r gap {last:.3} >= 0.15"))
    } else {
        Ok(c6_msg)
    };

    let js = table.j_star;
    let c7 = (|| {
        let thr = table.row(40.0, PolicyKind::Threshold).ok_or("missing threshold row")?.run.estimate;
        let mut parts = Vec::new();
        for p in [PolicyKind::Priority1, PolicyKind::Priority2] {
            let e = table.row(40.0, p).ok_or("missing priority row")?.run.estimate;
            let vs_star = js.mean - 2.0 * combined(e.stderr_or_zero(), js.stderr_or_zero());
            let vs_thr = thr.mean - 2.0 * combined(e.stderr_or_zero(), thr.stderr_or_zero());
            let line = format!("{p} {:.4} vs J* {:.4}, threshold {:.4}", e.mean, js.mean, thr.mean);
            ensure(e.mean >= vs_star && e.mean >= vs_thr, || format!("{line}: below the 2 se band"))?;
            parts.push(line);
        }
        Ok::<_, String>(parts.join("; "))
    })();
    SweepOutcome { c6, c7 }
}

type Metric = fn(&DiagnosticsSummary) -> Estimate;

fn c8_collapse() -> Outcome {
    let limits = NetworkLimits::example();
    let k = compute_threshold_constants(limits).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for r in [10.0, 40.0] {
        let net = make_r_network(limits, r, 1.2, 3.0, DriftMode::Constant).map_err(|e| e.to_string())?;
        rows.push(diagnostics_batch(&net, &k, k.d, 1.0, 500, SEED).map_err(|e| e.to_string())?);
    }
    let metrics: [(&str, Metric); 4] = [
        ("collapse_sup1", |s| s.collapse_sup1),
        ("collapse_sup3", |s| s.collapse_sup3),
        ("Y", |s| s.idle_mass_y),
        ("sup Q1 Q3", |s| s.product_sup),
    ];
    let mut parts = Vec::new();
    let mut failed = Vec::new();
    for (name, f) in metrics {
        let vals = [f(&rows[0]), f(&rows[1])];
        parts.push(format!("{name} {:.3} -> {:.3}", vals[0].mean, vals[1].mean));
        if !non_increasing_within(&vals, 2.0) {
            failed.push(name);
        }
    }
    let msg = parts.join(", ");
    ensure(failed.is_empty(), || format!("{msg}; increasing: {}", failed.join(", ")))?;
    Ok(msg)
}

fn c9_ld() -> Outcome {
    let rows = ld_check(1.0, 0.5, &[10.0, 25.0, 50.0], 1_000_000, SEED).map_err(|e| e.to_string())?;
    let parts: Vec<String> = rows.iter().map(|r| format!("t={} {:.2e} <= {:.2e}", r.t, r.empirical, r.bound)).collect();
    let msg = parts.join(", ");
    ensure(rows.iter().all(|r| r.empirical <= r.bound), || msg.clone())?;
    Ok(msg)
}

fn run_cli(args: &[&str], out: &FsPath) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_crisscross"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "error")
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("{} exited with {status}", args[0]))?;
    std::fs::read(out).map_err(|e| e.to_string())
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("config.json");
    std::fs::write(
        &cfg,
        r#"{"lambda": [1, 1], "mu": [2, 2, 1], "h": [1, 1, 1], "gamma": 1, "r_list": [5, 10],
            "seed": 11, "replications": 8, "horizon": 3}"#,
    )
    .map_err(|e| e.to_string())?;
    let cfg = cfg.to_str().ok_or("temp path is not UTF-8")?;
    let bcp = ["--dt", "0.01", "--paths", "200", "--bcp-horizon", "5"];
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--config", cfg],
        [&["bcp", "--config", cfg][..], &bcp].concat(),
        [&["converge", "--config", cfg][..], &bcp].concat(),
        vec!["thresholds", "--config", cfg],
        vec!["ld-check", "--config", cfg, "--samples", "20000"],
        vec!["diagnostics", "--config", cfg, "--reps", "10"],
    ];
    for args in &commands {
        let a = run_cli(args, &dir.path().join("a.out"))?;
        let b = run_cli(args, &dir.path().join("b.out"))?;
        ensure(!a.is_empty(), || format!("{} wrote nothing", args[0]))?;
        ensure(a == b, || format!("{} output differs between runs", args[0]))?;
    }
    Ok(format!("{} subcommands byte-identical across two runs", commands.len()))
}

fn report(id: usize, name: &str, start: Instant, outcome: &Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail) = match outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} [{id:>2}] {name} ({secs:.1} s): {detail}");
    outcome.is_ok()
}

fn main() {
    let mut ok = true;
    let mut t = Instant::now();
    ok &= report(1, "LP oracle equivalence", t, &c1_lp_oracle());
    t = Instant::now();
    ok &= report(2, "Skorohod map suite", t, &c2_skorohod());
    t = Instant::now();
    let mut j_star = None;
    ok &= report(3, "RBM discounted marginals", t, &c3_marginals(&mut j_star));
    t = Instant::now();
    ok &= report(4, "simulator conservation", t, &c4_conservation());
    t = Instant::now();
    ok &= report(5, "policy indicator cross-check", t, &c5_policy_grid());
    t = Instant::now();
    let sweep = c6_c7_sweep(j_star);
    ok &= report(6, "convergence trend", t, &sweep.c6);
    ok &= report(7, "lower-bound direction", t, &sweep.c7);
    t = Instant::now();
    ok &= report(8, "state-space collapse", t, &c8_collapse());
    t = Instant::now();
    ok &= report(9, "Poisson tail bound", t, &c9_ld());
    t = Instant::now();
    ok &= report(10, "CLI determinism", t, &c10_determinism());
    if !ok {
        std::process::exit(1);
    }
}
