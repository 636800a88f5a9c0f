//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::process::ExitCode;
use std::time::Instant;

use rug::Float;

use ladder_core::asymptotics::{decay_fit, expansion_coefficients, Which, DEFAULT_SAMPLES};
use ladder_core::ladder::{coefficient_identity_residuals, compat_pointwise_residuals, default_z_samples};
use ladder_core::pipeline::{audit, policy_for, Run};
use ladder_core::precision::parse_real;
use ladder_core::residual::ResidualEntry;
use ladder_core::verify::{difference_entries, diffdiff_entries, ladder_entries, Step, TGrid};
use ladder_core::weight::{compute_moments, Parameters};
use support::{hankel_determinant, rel, run_at, shifted_hankel_determinant, trapezoid_moment};

const LAMBDAS: [&str; 3] = ["0", "1", "2.5"];
const TS: [&str; 3] = ["0.5", "1", "2"];
const GRID_N: usize = 50;
const DIGITS: u32 = 30;

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn worst<'a>(entries: impl IntoIterator<Item = &'a ResidualEntry>) -> (f64, usize) {
    entries
        .into_iter()
        .fold((0.0, 0), |(m, c), e| (m.max(e.residual.to_f64()), c + 1))
}

fn below(entries: &[ResidualEntry], bound: f64, what: &str) -> Outcome {
    let (max, count) = worst(entries);
    Outcome {
        pass: count > 0 && max <= bound,
        detail: format!("{count} {what} residuals, max {max:.2e} (bound {bound:.0e})"),
    }
}

fn grid_runs() -> Vec<Run> {
    LAMBDAS
        .iter()
        .flat_map(|l| TS.iter().map(move |t| run_at(l, t, GRID_N, DIGITS)))
        .collect()
}

fn criterion1(runs: &[Run]) -> Outcome {
    let mut entries = Vec::new();
    for r in runs {
        for n in 1..GRID_N {
            entries.extend(
                difference_entries(r, n)
                    .unwrap()
                    .into_iter()
                    .filter(|e| e.identity == "d1" || e.identity == "d2"),
            );
        }
    }
    below(&entries, 1e-25, "d1/d2")
}

fn criterion2(runs: &[Run]) -> Outcome {
    let mut entries = Vec::new();
    for r in runs {
        let z = default_z_samples(r.params.prec());
        for n in 1..r.ladder.n_top {
            entries.extend(coefficient_identity_residuals(&r.recurrence, &r.ladder, n).unwrap());
            entries.extend(compat_pointwise_residuals(&r.recurrence, &r.ladder, n, &z).unwrap());
        }
    }
    below(&entries, 1e-25, "m1, m2, s1-s4, S1, S2, S2'")
}

fn criterion3(runs: &[Run]) -> Outcome {
    let mut entries = Vec::new();
    for r in runs {
        entries.extend(
            ladder_entries(r)
                .unwrap()
                .into_iter()
                .filter(|e| (e.identity == "R_cross" || e.identity == "r_cross") && e.n <= 20),
        );
    }
    below(&entries, 1e-25, "R/r cross-path")
}

fn criterion4() -> Outcome {
    const N: usize = 31;
    const FD_DIGITS: u32 = 60;
    let mut values = Vec::new();
    let mut orders = Vec::new();
    for lambda in LAMBDAS {
        for t in TS {
            let center = run_at(lambda, t, N, FD_DIGITS);
            let h = parse_real("1e-10", center.params.prec()).unwrap();
            let grid = TGrid::build(center, &h, true).unwrap();
            for n in 1..N {
                for e in diffdiff_entries(&grid, n, Step::Full).unwrap() {
                    match e.identity.as_str() {
                        "dd1" | "dd2" | "eq1" | "eq2" => values.push(e),
                        id if id.starts_with("order:") => orders.push(e),
                        _ => {}
                    }
                }
            }
        }
    }
    let (max, count) = worst(&values);
    // order entries hold |ratio - 4|
    let (spread, ratios) = worst(&orders);
    Outcome {
        pass: count > 0 && max <= 1e-18 && ratios > 0 && orders.iter().all(|e| e.pass),
        detail: format!(
            "{count} dd1/dd2/eq1/eq2 residuals, max {max:.2e} (bound 1e-18); {ratios} h/(h/2) ratios, max |ratio - 4| = {spread:.2e} (bound 0.5)"
        ),
    }
}

fn criterion5() -> Outcome {
    let mut max = 0.0f64;
    let mut count = 0;
    for (lambda, t) in [("1", "1"), ("2.5", "0.5")] {
        let r = run_at(lambda, t, 10, DIGITS);
        let prec = r.params.prec();
        let mu = |k: usize| r.moments.mu(k as i64).unwrap().clone();
        let d: Vec<Float> = (0..=11).map(|n| hankel_determinant(&mu, n, prec)).collect();
        for n in 0..=10 {
            max = max.max(rel(&r.recurrence.h[n], &Float::with_val(prec, &d[n + 1] / &d[n])));
            count += 1;
            if n > 0 {
                let p = -Float::with_val(prec, shifted_hankel_determinant(&mu, n, prec) / &d[n]);
                max = max.max(rel(&r.recurrence.p[n], &p));
                count += 1;
            }
        }
    }
    Outcome {
        pass: max <= 1e-25,
        detail: format!("{count} h/p comparisons with determinant ratios, max relative {max:.2e} (bound 1e-25)"),
    }
}

fn criterion6(large: &Run) -> Outcome {
    let n = 200usize;
    let sqrt_n = (n as f64).sqrt();
    let alpha = large.recurrence.alpha[n].to_f64() / sqrt_n;
    let beta = large.recurrence.beta[n].to_f64() / n as f64;
    let lead = (2.0f64 / 3.0).sqrt();
    let da = (alpha - lead).abs() / lead;
    let db = (beta - 1.0 / 6.0).abs() * 6.0;
    Outcome {
        pass: da <= 0.02 && db <= 0.02,
        detail: format!("alpha_200/sqrt(200) off by {:.3}%, beta_200/200 off by {:.3}% (bound 2%)", 100.0 * da, 100.0 * db),
    }
}

fn criterion7(large: &Run) -> Outcome {
    let model = expansion_coefficients(&large.params.lambda, &large.params.t).unwrap();
    let alpha = decay_fit(&large.recurrence, &model, Which::Alpha, &DEFAULT_SAMPLES).unwrap();
    let beta = decay_fit(&large.recurrence, &model, Which::Beta, &DEFAULT_SAMPLES).unwrap();
    let alpha_ok = (-2.8..=-2.2).contains(&alpha.slope);
    let beta_ok = (-2.3..=-1.7).contains(&beta.slope);
    Outcome {
        pass: alpha_ok && beta_ok,
        detail: format!(
            "alpha slope {:.3} in [-2.8, -2.2]: {alpha_ok}; beta slope {:.3} in [-2.3, -1.7]: {beta_ok}",
            alpha.slope, beta.slope
        ),
    }
}

fn criterion8(runs: &[Run]) -> Outcome {
    let mut entries = Vec::new();
    for r in runs {
        entries.extend(audit(r).unwrap());
    }
    let failures = entries.iter().filter(|e| !e.pass).count();
    let (max, count) = worst(&entries);
    Outcome {
        pass: count > 0 && failures == 0,
        detail: format!("{count} values re-run at doubled precision, max relative change {max:.2e} (bound 1e-30)"),
    }
}

fn criterion9() -> Outcome {
    const ORACLE_BITS: u32 = 400;
    let policy = policy_for(GRID_N, DIGITS).unwrap();
    let mut max = 0.0f64;
    for (lambda, t) in [("0", "1"), ("1", "1")] {
        let params = Parameters::parse(lambda, t, policy.clone()).unwrap();
        let table = compute_moments(&params, -2, 2).unwrap();
        for k in [0, -1] {
            let oracle = trapezoid_moment(lambda, t, k, ORACLE_BITS, 7);
            max = max.max(rel(table.mu(k).unwrap(), &oracle));
        }
    }
    let params = Parameters::parse("0", "1", policy).unwrap();
    let mu2 = compute_moments(&params, -2, 2).unwrap().mu(2).unwrap().to_f64();
    let bound = std::f64::consts::PI.sqrt() / 4.0;
    Outcome {
        pass: max <= 1e-30 && mu2 < bound,
        detail: format!("mu_0, mu_-1 vs trapezoid oracle max relative {max:.2e} (bound 1e-30); mu_2(0, 1) = {mu2:.6} < {bound:.6}"),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let runs = grid_runs();
    let large = run_at("1", "1", 256, DIGITS);
    let criteria: Vec<(u32, &str, Check)> = vec![
        (1, "difference equations on the 3x3 grid", Box::new(|| criterion1(&runs))),
        (2, "compatibility and pointwise identities", Box::new(|| criterion2(&runs))),
        (3, "integral vs identity ladder values, n <= 20", Box::new(|| criterion3(&runs))),
        (4, "differential-difference equations at h = 1e-10", Box::new(criterion4)),
        (5, "Cholesky vs Hankel determinant ratios", Box::new(criterion5)),
        (6, "leading order at n = 200", Box::new(|| criterion6(&large))),
        (7, "remainder decay slopes at (1, 1)", Box::new(|| criterion7(&large))),
        (8, "doubled-precision audit", Box::new(|| criterion8(&runs))),
        (9, "moments vs independent quadrature", Box::new(criterion9)),
    ];
    let mut failed = 0;
    for (id, title, check) in &criteria {
        let outcome = check();
        let mark = if outcome.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!outcome.pass);
        println!("criterion {id} {mark}: {title}: {}", outcome.detail);
    }
    println!("{} of {} criteria passed in {:.0?}", criteria.len() - failed, criteria.len(), start.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
