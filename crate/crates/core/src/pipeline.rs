//! One full computation at a single `(λ, t)`: moments, recurrence
//! coefficients and the ladder table, with the precision retry policy.

use rug::Float;

use crate::error::{Error, Result};
use crate::ladder::{ladder_from_identities, LadderTable};
use crate::precision::{rel_diff, NumericPolicy};
use crate::recurrence::{recurrence_from_moments, RecurrenceTable};
use crate::residual::{scale_free, ResidualEntry};
use crate::weight::{compute_moments, MomentTable, Parameters};

/// Retries after a Cholesky breakdown, each at `audit_factor` times the precision.
pub const MAX_PRECISION_RETRIES: usize = 3;

/// Relative size of the perturbation applied by [`RunOptions::beta_fault`].
pub const BETA_FAULT_SIZE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Run {
    pub params: Parameters,
    pub n_max: usize,
    pub moments: MomentTable,
    /// Holds one degree more than `n_max` so the ladder table reaches `n_max`.
    pub recurrence: RecurrenceTable,
    pub ladder: LadderTable,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Perturb `β_n` before the ladder table is built.
    pub beta_fault: Option<usize>,
}

/// Policy for a run reporting degrees up to `n_max`.
pub fn policy_for(n_max: usize, target_digits: u32) -> Result<NumericPolicy> {
    NumericPolicy::for_degree(n_max + 1, target_digits)
}

pub fn run(params: &Parameters, n_max: usize) -> Result<Run> {
    run_with(params, n_max, &RunOptions::default())
}

pub fn run_with(params: &Parameters, n_max: usize, options: &RunOptions) -> Result<Run> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let degree = n_max + 1;
    let mut params = params.clone();
    let mut attempt = 0;
    let (moments, mut recurrence) = loop {
        let moments = compute_moments(&params, -2, 2 * degree as i64 + 2)?;
        match recurrence_from_moments(&moments, degree) {
            Ok(rec) => break (moments, rec),
            Err(Error::CholeskyBreakdown { pivot, precision_bits }) if attempt < MAX_PRECISION_RETRIES => {
                attempt += 1;
                let policy = params.policy.audited();
                log::warn!(
                    "Cholesky pivot {pivot} failed at {precision_bits} bits; retrying at {}",
                    policy.precision_bits
                );
                params = params.with_policy(policy)?;
            }
            Err(e) => return Err(e),
        }
    };
    if let Some(n) = options.beta_fault {
        recurrence.inject_beta_fault(n, BETA_FAULT_SIZE)?;
    }
    let ladder = ladder_from_identities(&recurrence)?;
    Ok(Run {
        params,
        n_max,
        moments,
        recurrence,
        ladder,
    })
}

impl Run {
    pub fn policy(&self) -> &NumericPolicy {
        &self.params.policy
    }
}

/// Recomputes `run` at `audit_factor` times the precision and compares
/// `α, β, h, p, R, r` for every `n ≤ n_max` with `|x - x'| / max(|x'|, 1)`.
pub fn audit(run: &Run) -> Result<Vec<ResidualEntry>> {
    let policy: NumericPolicy = run.policy().audited();
    let params = run.params.with_policy(policy)?;
    let fine = self::run(&params, run.n_max)?;
    Ok(compare_runs(run, &fine))
}

pub fn compare_runs(coarse: &Run, fine: &Run) -> Vec<ResidualEntry> {
    let tol = coarse.policy().audit_tolerance();
    let t = &coarse.params.t;
    let (a, b) = (&coarse.recurrence, &fine.recurrence);
    let (la, lb) = (&coarse.ladder, &fine.ladder);
    let mut out = Vec::new();
    let mut push = |name: &str, n: usize, x: &Float, y: &Float| {
        out.push(ResidualEntry::new(name, n, t, scale_free(rel_diff(x, y)), &tol));
    };
    for n in 0..=coarse.n_max.min(fine.n_max) {
        push("audit:alpha", n, &a.alpha[n], &b.alpha[n]);
        push("audit:beta", n, &a.beta[n], &b.beta[n]);
        push("audit:h", n, &a.h[n], &b.h[n]);
        push("audit:p", n, &a.p[n], &b.p[n]);
        push("audit:R", n, &la.big_r[n], &lb.big_r[n]);
        push("audit:r", n, &la.small_r[n], &lb.small_r[n]);
    }
    out
}
