//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.
//! Tolerances and runtime limits are fixed here.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use ltlab_core::campaign::par_map;
use ltlab_core::constants::{c_keller, c_thm1, keller_minimize, lt_classical, lt_classical_quadrature};
use ltlab_core::extremal::{sweep, Objective, SearchFamily, SearchSpace};
use ltlab_core::ltcheck::{
    al_eigenvalue_identity, al_potential_identity, check_energy_identity, check_holder_step, check_theorem1,
    check_theorem2_separable,
};
use ltlab_core::sobolev::{agmon_check, check_sobolev, gram_schmidt, random_system};
use ltlab_core::{converged_spectrum, random_psd_potential, Grid, GridFunction, PotentialSpec};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(name: &str, value: f64, expected: f64, tol: f64) -> Result<(), String> {
    ensure((value - expected).abs() <= tol, format!("{name} = {value}, expected {expected} ± {tol:e}"))
}

fn grid(l: f64, h: f64) -> Grid {
    Grid::with_spacing(l, h).expect("valid grid")
}

fn workers() -> usize {
    ltlab_core::campaign::worker_count(None)
}

fn ac1_constants() -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = ltlab_cli::run(["ltlab", "constants", "--d", "1", "--gamma", "1"], &mut out, &mut err);
    ensure(code == 0, format!("exit code {code}"))?;
    let text = String::from_utf8(out).map_err(|e| e.to_string())?;
    let value = |key: &str| -> Result<f64, String> {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .ok_or(format!("missing {key}"))?
            .parse::<f64>()
            .map_err(|e| e.to_string())
    };
    let round4 = |x: f64| (x * 1e4).round() / 1e4;
    for (key, expected) in [("c_thm1", 0.3849), ("c_keller", 0.2450), ("2Lcl_1_1", 0.4244), ("R", 1.8138)] {
        let v = value(key)?;
        ensure(round4(v) == expected, format!("{key} = {v} does not round to {expected}"))?;
    }
    close("Lcl", value("Lcl")?, 0.2122066, 1e-7)?;
    close("bound", value("bound")?, 0.3849002, 1e-7)?;
    Ok(format!("c_keller={:.7} < c_thm1={:.7} < 2Lcl={:.7}", c_keller(), c_thm1(), value("2Lcl_1_1")?))
}

fn ac2_semiclassical() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in 1..=3 {
        for gamma in [1.0, 1.5, 2.0, 3.0] {
            let closed = lt_classical(d, gamma).map_err(|e| e.to_string())?;
            let quad = lt_classical_quadrature(d, gamma).map_err(|e| e.to_string())?;
            worst = worst.max((closed - quad).abs());
            close(&format!("Lcl({d},{gamma})"), quad, closed, 1e-10)?;
        }
    }
    Ok(format!("max |closed - quadrature| = {worst:.2e}"))
}

fn ac3_golden_spectra() -> Outcome {
    let g = grid(20.0, 0.01);
    let s2 = converged_spectrum(&PotentialSpec::poschl_teller(2.0, 1.0), &g, 1e-6, false).map_err(|e| e.to_string())?;
    ensure(s2.len() == 2, format!("s=2 gave {} bound states", s2.len()))?;
    close("lambda_0(s=2)", s2.negatives[0], -4.0, 1e-6)?;
    close("lambda_1(s=2)", s2.negatives[1], -1.0, 1e-6)?;
    let sh = converged_spectrum(&PotentialSpec::poschl_teller(0.5, 1.0), &g, 1e-6, false).map_err(|e| e.to_string())?;
    ensure(sh.len() == 1, format!("s=1/2 gave {} bound states", sh.len()))?;
    close("lambda_0(s=1/2)", sh.negatives[0], -0.25, 1e-6)?;
    Ok(format!("s=2 {:?}, s=1/2 {:?}", s2.negatives, sh.negatives))
}

fn ac4_extremal_family() -> Outcome {
    let space = SearchSpace::new(SearchFamily::PoschlTeller, vec![0.1, 1.0], vec![1.0, 1.0], 1.0)
        .map_err(|e| e.to_string())?;
    let objective = Objective::new(space, grid(20.0, 0.01)).map_err(|e| e.to_string())?;
    let r = sweep(&objective, 91).map_err(|e| e.to_string())?;
    close("best ratio", r.best_ratio, 0.24501, 1e-4)?;
    close("argmax s", r.best_params[0], 0.5, 1e-3)?;
    Ok(format!("max ratio {:.6} at s={:.3} over {} points", r.best_ratio, r.best_params[0], r.evaluations))
}

fn ac5_semiclassical_limit() -> Outcome {
    let g = grid(30.0, 0.01);
    let s_values = [2.0, 5.0, 10.0, 20.0, 40.0];
    let ratios = par_map(workers(), &s_values, |&s| check_theorem1(&PotentialSpec::poschl_teller(s, 1.0), &g))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|r| r.map(|r| r.ratio))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    ensure(ratios.windows(2).all(|w| w[1] < w[0]), format!("not decreasing: {ratios:?}"))?;
    let limit = 2.0 / (3.0 * PI);
    let rel = (ratios[4] - limit).abs() / limit;
    ensure(rel < 0.03, format!("s=40 ratio {} is {:.2}% from {limit}", ratios[4], 100.0 * rel))?;
    Ok(format!("ratios {ratios:.5?}; s=40 within {:.2}% of 2/(3pi)", 100.0 * rel))
}

fn campaign_potentials() -> Vec<PotentialSpec> {
    (1..=200u64).map(|seed| random_psd_potential(1 + ((seed - 1) % 4) as usize, 3, seed).expect("valid")).collect()
}

fn ac6_matrix_campaign() -> Outcome {
    let g = grid(20.0, 0.02);
    let reports = par_map(workers(), &campaign_potentials(), |spec| check_theorem1(spec, &g))
        .map_err(|e| e.to_string())?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let failures = reports.iter().filter(|r| !r.pass).count();
    let worst = reports.iter().map(|r| r.lhs_safeguarded / r.rhs_integral.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    let max_ratio = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
    ensure(failures == 0, format!("{failures} of 200 failed"))?;
    ensure(worst <= 0.38490, format!("safeguarded ratio {worst} exceeds 0.38490"))?;
    Ok(format!("200/200 pass; max observed ratio {max_ratio:.6}"))
}

fn ac7_sobolev() -> Outcome {
    let g = grid(20.0, 0.01);
    let cases: Vec<u64> = (1..=100).collect();
    let reports = par_map(workers(), &cases, |&k| {
        random_system(&g, 1 + (k % 8) as usize, 1 + (k % 3) as usize, k).map(|s| check_sobolev(&s))
    })
    .map_err(|e| e.to_string())?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|e| e.to_string())?;
    let failures = reports.iter().filter(|r| !r.pass).count();
    ensure(failures == 0, format!("{failures} of 100 systems violate the bound"))?;
    let min_slack = reports.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);

    let fine = grid(10.0, 0.001);
    let gaussian = GridFunction::from_real_fn(fine, |x| PI.powf(-0.25) * (-x * x / 2.0).exp());
    let sys = gram_schmidt(&fine, 1, vec![gaussian.values.clone()]).map_err(|e| e.to_string())?;
    let r = check_sobolev(&sys);
    close("Gaussian lhs", r.lhs, 0.183776, 1e-6)?;
    close("Gaussian rhs", r.rhs, 0.5, 1e-6)?;
    let a = agmon_check(&gaussian);
    close("Agmon sup", a.sup_sq, 0.564190, 1e-6)?;
    close("Agmon integral", a.integral, 0.564190, 1e-6)?;
    Ok(format!("100/100 pass (min slack {min_slack:.3e}); Gaussian lhs {:.6} rhs {:.6}; Agmon {:.6}", r.lhs, r.rhs, a.integral))
}

fn ac8_proof_chain() -> Outcome {
    let g = grid(20.0, 0.01);
    let mut worst: f64 = 0.0;
    for s in [1.0, 2.0] {
        let r = check_energy_identity(&PotentialSpec::poschl_teller(s, 1.0), &g, 1e-5).map_err(|e| e.to_string())?;
        worst = worst.max(r.residual);
    }
    let coarse = grid(20.0, 0.02);
    let holder = par_map(workers(), &campaign_potentials(), |spec| check_holder_step(spec, &coarse))
        .map_err(|e| e.to_string())?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let failures = holder.iter().filter(|r| !r.pass).count();
    ensure(failures == 0, format!("Hölder step fails on {failures} campaign cases"))?;
    let k = keller_minimize(3.0).map_err(|e| e.to_string())?;
    close("x*", k.x_star, 1.0, 1e-12)?;
    close("min", k.min_value, -2.0, 1e-12)?;
    Ok(format!("energy residual {worst:.2e}; Hölder 200/200; keller(3) = ({}, {})", k.x_star, k.min_value))
}

fn ac9_aizenman_lieb() -> Outcome {
    let mut worst: f64 = 0.0;
    for lambda in [-0.25, -1.0, -4.0, -9.0] {
        for (gamma, sigma) in [(1.5, 1.0), (2.0, 1.0), (3.0, 1.0), (2.0, 1.5), (3.0, 2.0)] {
            let r = al_eigenvalue_identity(lambda, gamma, sigma).map_err(|e| e.to_string())?;
            ensure(r.relative_error <= 1e-8, format!("eigenvalue side ({lambda},{gamma},{sigma}): {r:?}"))?;
            worst = worst.max(r.relative_error);
        }
    }
    let g = grid(20.0, 0.01);
    let mut worst_pot: f64 = 0.0;
    for s in [1.0, 2.0] {
        for gamma in [1.5, 2.0] {
            let r = al_potential_identity(&PotentialSpec::poschl_teller(s, 1.0), gamma, &g).map_err(|e| e.to_string())?;
            ensure(r.relative_error <= 1e-6, format!("potential side s={s} gamma={gamma}: {r:?}"))?;
            worst_pot = worst_pot.max(r.relative_error);
        }
    }
    Ok(format!("eigenvalue side max rel {worst:.1e}; potential side max rel {worst_pot:.1e}"))
}

fn ac10_two_dimensions() -> Outcome {
    let pt = |s| PotentialSpec::poschl_teller(s, 1.0);
    let gw = |a, w| PotentialSpec::GaussianWell { amplitude: a, width: w, center: 0.0 };
    let cases = vec![
        (pt(1.0), pt(1.0), 1.0),
        (pt(2.0), pt(1.0), 1.0),
        (gw(2.0, 1.0), gw(2.0, 1.0), 1.5),
        (pt(2.0), gw(3.0, 1.5), 1.5),
        (pt(1.0), gw(1.0, 0.8), 1.0),
    ];
    let g = grid(20.0, 0.02);
    let reports = par_map(workers(), &cases, |(a, b, gamma)| check_theorem2_separable(a, b, *gamma, &g))
        .map_err(|e| e.to_string())?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let normalized: Vec<f64> = reports.iter().map(|r| r.normalized_ratio()).collect();
    ensure(reports.iter().all(|r| r.pass), "a separable case failed the safeguarded bound")?;
    ensure(normalized.iter().all(|&x| x < 1.0), format!("ratio/constant {normalized:?}"))?;
    ensure(reports.iter().all(|r| r.bound_states > 0), "a case has no bound states")?;
    Ok(format!("ratio/constant {normalized:.4?}"))
}

fn main() {
    let criteria: [(&str, &str, u64, fn() -> Outcome); 10] = [
        ("AC1", "constants reproduction", 1, ac1_constants),
        ("AC2", "semiclassical constant cross-check", 5, ac2_semiclassical),
        ("AC3", "Pöschl-Teller golden spectra", 30, ac3_golden_spectra),
        ("AC4", "one-bound-state extremal sweep", 120, ac4_extremal_family),
        ("AC5", "semiclassical limit of the ratio", 300, ac5_semiclassical_limit),
        ("AC6", "random matrix potential campaign", 600, ac6_matrix_campaign),
        ("AC7", "matrix Sobolev campaign and golden cases", 120, ac7_sobolev),
        ("AC8", "energy identity, trace-Hölder, minimization", 600, ac8_proof_chain),
        ("AC9", "layer-cake identities", 60, ac9_aizenman_lieb),
        ("AC10", "two-dimensional separable bound", 300, ac10_two_dimensions),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(limit) => {
                Err(format!("{detail}; took {:.1}s, limit {limit}s", elapsed.as_secs_f64()))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("{id} PASS {name} [{:.2}s] {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL {name} [{:.2}s] {why}", elapsed.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
