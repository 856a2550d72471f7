use std::io::Write;
use std::time::Instant;

use super::{Failure, SelfcheckArgs, EXIT_OK, EXIT_PROPERTY};
use crate::error::Result;
use crate::exact_ot::{brute_force_w2, solve_w2, Pairing};
use crate::instances::{random_uniform_pair, verdicts, well_separated};
use crate::measures::{presets, Translation};
use crate::rng::child_rng;
use crate::robustness::{estimate_r, g_profile, robustness_report, verify_eps_robust, ReportOptions};
use crate::smoothing::{got_estimate, MonteCarlo, SmoothingKernel};

/// Suite names accepted by `--suite`.
pub const SUITES: [&str; 5] = ["oracle", "equivalence", "bounds", "profile", "smoothing"];

type Findings = Vec<String>;

fn oracle(seed: u64) -> Result<Findings> {
    let mut rng = child_rng(seed, 1);
    let mut bad = Vec::new();
    for case in 0..40 {
        let k = 1 + case % 6;
        let d = 1 + case % 3;
        let (mu, nu) = random_uniform_pair(&mut rng, k, d, case % 2 == 1);
        let fast = solve_w2(&mu, &nu)?.w2_squared;
        let slow = brute_force_w2(&mu, &nu)?.solution.w2_squared;
        if (fast - slow).abs() > 1e-9 {
            bad.push(format!("case {case}: solver {fast:?} vs enumeration {slow:?}"));
        }
    }
    Ok(bad)
}

fn equivalence(seed: u64) -> Result<Findings> {
    let mut rng = child_rng(seed, 2);
    let mut bad = Vec::new();
    let mut done = 0;
    while done < 40 {
        let (mu, nu) = random_uniform_pair(&mut rng, 2 + done % 5, 1 + done % 3, done % 2 == 0);
        if !well_separated(&mu, &nu, 1e-3, 1e-9)? {
            continue;
        }
        let v = verdicts(&mu, &nu)?;
        if !v.agree() {
            bad.push(format!("instance {done}: {v:?}"));
        }
        done += 1;
    }
    Ok(bad)
}

fn bounds(seed: u64) -> Result<Findings> {
    let mut rng = child_rng(seed, 3);
    let mut bad = Vec::new();
    let mut done = 0;
    while done < 15 {
        let (mu, nu) = random_uniform_pair(&mut rng, 2 + done % 4, 1 + done % 3, false);
        let sol = solve_w2(&mu, &nu)?;
        if sol.unique != Some(true) {
            continue;
        }
        let p = Pairing::new(mu.points(), nu.points(), sol.matching.as_ref().expect("unique matching"))?;
        let rep = robustness_report(&p, ReportOptions { alpha_beta: None, estimate_r: true })?;
        let r_hat = rep.r_hat.expect("requested");
        let lbs = [Some(rep.lb_general), rep.lb_convex, rep.lb_simplified];
        for lb in lbs.into_iter().flatten() {
            if !verify_eps_robust(&p, lb)?.robust || lb > r_hat + 1e-4 {
                bad.push(format!("instance {done}: bound {lb:?} against r_hat {r_hat:?}"));
            }
        }
        done += 1;
    }
    Ok(bad)
}

fn profile(seed: u64) -> Result<Findings> {
    let mut bad = Vec::new();
    let mut rng = child_rng(seed, 5);
    let mut cases: Vec<(String, _, _)> =
        (0..4u32).map(|k| (format!("mu{k}"), presets::mu_k(k), presets::cross_target())).collect();
    for i in 0..4 {
        let (mu, nu) = random_uniform_pair(&mut rng, 3 + i % 2, 2, false);
        cases.push((format!("random {i}"), mu, nu));
    }
    for (name, mu, nu) in cases {
        let sol = solve_w2(&mu, &nu)?;
        let p = Pairing::new(mu.points(), nu.points(), sol.matching.as_ref().expect("uniform pairs match"))?;
        let r = estimate_r(&p)?;
        let top = 3.0 * r.max(0.1);
        let grid: Vec<f64> = (0..7).map(|i| top * i as f64 / 6.0).collect();
        let prof = g_profile(&p, &grid)?;
        if !prof.nondecreasing || !prof.cycles_concave() || !prof.vanishes_below(r, 1e-4) {
            bad.push(format!("{name}: profile {:?}", prof.values));
        }
    }
    Ok(bad)
}

fn smoothing(seed: u64) -> Result<Findings> {
    let mut bad = Vec::new();
    let mc = MonteCarlo::new(100, 6, seed);
    let (mu, nu) = (presets::mu_k(1), presets::cross_target());
    if got_estimate(&mu, &nu, 0.2, &mc)? != got_estimate(&mu, &nu, 0.2, &mc)? {
        bad.push("estimate differs between identical runs".into());
    }
    let shifted = mu.translate(&Translation::new(vec![3.0, 4.0]))?;
    let est = got_estimate(&mu, &shifted, 0.3, &mc)?;
    if (est.mean - 5.0).abs() > 3.0 * est.stderr {
        bad.push(format!("translation: mean {:?} stderr {:?}", est.mean, est.stderr));
    }
    let kernel = SmoothingKernel::TruncatedGaussian { sigma: 1.0, eps_star: 1.0 };
    let p = kernel.nonzero_mass(2);
    let mut rng = child_rng(seed, 4);
    let draws = 4000;
    let mut z = [0.0; 2];
    let nonzero = (0..draws)
        .filter(|_| {
            kernel.sample_into(&mut rng, &mut z);
            z != [0.0, 0.0]
        })
        .count();
    let se = (p * (1.0 - p) / draws as f64).sqrt();
    if (nonzero as f64 / draws as f64 - p).abs() > 3.0 * se {
        bad.push(format!("truncated kernel: nonzero fraction {nonzero}/{draws} vs {p:?}"));
    }
    Ok(bad)
}

pub(super) fn cmd_selfcheck(a: &SelfcheckArgs, out: &mut dyn Write) -> std::result::Result<u8, Failure> {
    let selected: Vec<&str> = match &a.suite {
        Some(s) if SUITES.contains(&s.as_str()) => vec![s.as_str()],
        Some(s) => return Err(Failure::usage(format!("unknown suite '{s}'; known: {}", SUITES.join(", ")))),
        None => SUITES.to_vec(),
    };
    let mut failed = false;
    for name in selected {
        let start = Instant::now();
        let findings = match name {
            "oracle" => oracle(a.seed),
            "equivalence" => equivalence(a.seed),
            "bounds" => bounds(a.seed),
            "profile" => profile(a.seed),
            _ => smoothing(a.seed),
        }?;
        let status = if findings.is_empty() { "pass" } else { "FAIL" };
        writeln!(out, "suite={name} status={status} seconds={:.2}", start.elapsed().as_secs_f64())?;
        for f in &findings {
            writeln!(out, "  {f}")?;
        }
        failed |= !findings.is_empty();
    }
    Ok(if failed { EXIT_PROPERTY } else { EXIT_OK })
}
