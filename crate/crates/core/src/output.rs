//! File formats: the per-point coefficient table and the asymptotic fit.
//! Every number is written as a decimal string with `target_digits` digits.

use serde_json::{json, Value};

use crate::asymptotics::{AsymptoticModel, DecayFit};
use crate::pipeline::Run;
use crate::precision::format_real;

const TABLE_COLUMNS: [&str; 7] = ["n", "alpha", "beta", "h", "p", "R", "r"];

fn header_comments(run: &Run) -> String {
    let p = &run.params;
    let mut out = format!(
        "# lambda={}\n# t={}\n# precision_bits={}\n# target_digits={}\n# ladder_source={}\n",
        p.lambda_text,
        p.t_text,
        p.prec(),
        p.policy.target_digits,
        run.ladder.source.as_str(),
    );
    if !run.ladder.fallbacks.is_empty() {
        let list: Vec<String> = run.ladder.fallbacks.iter().map(usize::to_string).collect();
        out.push_str(&format!("# r_quadrature_fallback_n={}\n", list.join(";")));
    }
    out
}

fn row(run: &Run, n: usize) -> [String; 6] {
    let d = run.params.policy.target_digits;
    let (rec, lad) = (&run.recurrence, &run.ladder);
    [
        format_real(&rec.alpha[n], d),
        format_real(&rec.beta[n], d),
        format_real(&rec.h[n], d),
        format_real(&rec.p[n], d),
        format_real(&lad.big_r[n], d),
        format_real(&lad.small_r[n], d),
    ]
}

/// `n, alpha, beta, h, p, R, r` for `0 ≤ n ≤ n_max`.
pub fn table_csv(run: &Run) -> String {
    let mut out = header_comments(run);
    out.push_str(&TABLE_COLUMNS.join(","));
    out.push('\n');
    for n in 0..=run.n_max {
        out.push_str(&format!("{n},{}\n", row(run, n).join(",")));
    }
    out
}

pub fn table_json(run: &Run) -> Value {
    let p = &run.params;
    let rows: Vec<Value> = (0..=run.n_max)
        .map(|n| {
            let [alpha, beta, h, pn, big_r, small_r] = row(run, n);
            json!({"n": n, "alpha": alpha, "beta": beta, "h": h, "p": pn, "R": big_r, "r": small_r})
        })
        .collect();
    json!({
        "lambda": p.lambda_text,
        "t": p.t_text,
        "precision_bits": p.prec(),
        "target_digits": p.policy.target_digits,
        "ladder_source": run.ladder.source.as_str(),
        "r_quadrature_fallback_n": run.ladder.fallbacks,
        "rows": rows,
    })
}

/// `which, n, computed, expansion, residual` for each fit sample.
pub fn asym_csv(run: &Run, fits: &[DecayFit]) -> String {
    let d = run.params.policy.target_digits;
    let mut out = format!(
        "# lambda={}\n# t={}\n# precision_bits={}\n# target_digits={}\nwhich,n,computed,expansion,residual\n",
        run.params.lambda_text,
        run.params.t_text,
        run.params.prec(),
        d
    );
    for fit in fits {
        for p in &fit.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fit.which.as_str(),
                p.n,
                format_real(&p.computed, d),
                format_real(&p.expansion, d),
                format_real(&p.residual, d)
            ));
        }
    }
    out
}

pub fn asym_json(run: &Run, model: &AsymptoticModel, fits: &[DecayFit], band: f64) -> Value {
    let d = run.params.policy.target_digits;
    json!({
        "lambda": run.params.lambda_text,
        "t": run.params.t_text,
        "precision_bits": run.params.prec(),
        "target_digits": d,
        "model": model.to_json(d),
        "fits": fits.iter().map(|f| f.to_json(d, band)).collect::<Vec<_>>(),
        "note": "slope bands are empirical acceptance choices; the expansions only assert the remainder order",
    })
}
