//! Residuals of the difference and differential-difference systems satisfied
//! by `α_n, β_n`, and the suite driver behind `ladder verify`.
//!
//! The `t`-derivatives are central differences over independent full
//! pipelines at `t ± h`, so nothing here relies on the ladder identities it
//! is checking.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{decay_fit, expansion_coefficients, DecayFit, Which};
use crate::error::{Error, Result};
use crate::ladder::{
    big_r_from_identity, coefficient_identity_residuals, compat_pointwise_residuals, cross_path_residuals,
    default_z_samples, integral_ladder_values, ladder_from_integrals, r_denominator,
};
use crate::pipeline::{run_with, Run, RunOptions};
use crate::precision::{ten_pow, Real, GUARD_DIGITS};
use crate::recurrence::RecurrenceTable;
use crate::residual::{normalized, scale_free, ResidualEntry, ResidualReport};
use crate::weight::{moment_t_derivative_check, pearson_terms};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Difference,
    Diffdiff,
    Compat,
    Ladder,
    Asym,
    Pearson,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Difference,
        Suite::Diffdiff,
        Suite::Compat,
        Suite::Ladder,
        Suite::Asym,
        Suite::Pearson,
    ];

    /// Everything except `asym`, which needs `n_max ≥ 64` and a long run.
    pub fn defaults() -> Vec<Suite> {
        vec![
            Suite::Difference,
            Suite::Diffdiff,
            Suite::Compat,
            Suite::Ladder,
            Suite::Pearson,
        ]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Difference => "difference",
            Suite::Diffdiff => "diffdiff",
            Suite::Compat => "compat",
            Suite::Ladder => "ladder",
            Suite::Asym => "asym",
            Suite::Pearson => "pearson",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

fn check_interior(rec: &RecurrenceTable, n: usize) -> Result<()> {
    if n == 0 || n + 1 > rec.n_max {
        return Err(Error::OutOfRange {
            what: "difference-equation index",
            index: n as i64,
            lo: 1,
            hi: rec.n_max as i64 - 1,
        });
    }
    Ok(())
}

fn mul(a: &Float, b: &Float) -> Float {
    Float::with_val(a.prec().max(b.prec()), a * b)
}

/// The two difference equations, term by term.
struct Theorem1Terms {
    d1: Vec<Float>,
    d2: Vec<Float>,
    /// `2n + λ - 4β_n`
    denominator: Float,
}

fn theorem1_terms(rec: &RecurrenceTable, n: usize) -> Result<Theorem1Terms> {
    check_interior(rec, n)?;
    let prec = rec.prec();
    let (a, b) = (&rec.alpha, &rec.beta);
    let (lambda, t) = (&rec.params.lambda, &rec.params.t);
    let nn = n as u64;
    // R_{n-1} and R_n written in α, β
    let x = big_r_from_identity(rec, n - 1)?;
    let y = big_r_from_identity(rec, n)?;
    let tb2 = mul(t, &b[n]) * 2u32;
    let abx = mul(&a[n], &b[n]) * &x * 2u32;
    let aby = mul(&a[n - 1], &b[n]) * &y * 2u32;

    let num = [
        Float::with_val(prec, t * nn),
        -tb2.clone(),
        -abx.clone(),
        -aby.clone(),
    ];
    let second = [Float::with_val(prec, lambda + nn) * t, -tb2, abx, aby];
    let denominator = r_denominator(rec, n);

    let mut d1: Vec<Float> = num
        .iter()
        .flat_map(|p| second.iter().map(move |q| mul(p, q)))
        .collect();
    d1.push(mul(&b[n], &Float::with_val(prec, denominator.square_ref())) * &x * &y);

    let bracket = [
        Float::with_val(prec, a[n].square_ref()) * &a[n] * 2u32,
        -(Float::with_val(prec, lambda + (2 * nn + 2)) * &a[n]),
        -t.clone(),
        mul(&a[n], &b[n + 1]) * 4u32,
        -(mul(&a[n - 1], &b[n]) * 2u32),
        mul(&a[n + 1], &b[n + 1]) * 2u32,
    ];
    let mut d2: Vec<Float> = num.iter().map(|p| Float::with_val(prec, p * 2u32)).collect();
    d2.extend(bracket.iter().map(|q| mul(&denominator, q)));
    Ok(Theorem1Terms { d1, d2, denominator })
}

/// Normalized residuals of the two second-order difference equations at `n`.
pub fn residual_theorem1(rec: &RecurrenceTable, n: usize) -> Result<(Real, Real)> {
    let terms = theorem1_terms(rec, n)?;
    Ok((normalized(&terms.d1).residual, normalized(&terms.d2).residual))
}

/// `α_n - r_n + r_{n+1} + 2β_n(α_n + α_{n-1}) - 2β_{n+1}(α_{n+1} + α_n)`,
/// which holds exactly once `tα_n'` is eliminated between its two expressions.
fn al2_terms(rec: &RecurrenceTable, small_r: &[Real], n: usize) -> Vec<Float> {
    let (a, b) = (&rec.alpha, &rec.beta);
    vec![
        a[n].clone(),
        -small_r[n].clone(),
        small_r[n + 1].clone(),
        mul(&b[n], &a[n]) * 2u32,
        mul(&b[n], &a[n - 1]) * 2u32,
        -(mul(&b[n + 1], &a[n + 1]) * 2u32),
        -(mul(&b[n + 1], &a[n]) * 2u32),
    ]
}

fn m1_terms(rec: &RecurrenceTable, big_r: &[Real], small_r: &[Real], n: usize) -> Vec<Float> {
    vec![
        small_r[n + 1].clone(),
        small_r[n].clone(),
        -rec.params.t.clone(),
        mul(&rec.alpha[n], &big_r[n]),
    ]
}

/// Theorem 1 residuals plus the proof-chain identities at `1 ≤ n ≤ n_max - 1`.
pub fn difference_entries(run: &Run, n: usize) -> Result<Vec<ResidualEntry>> {
    let rec = &run.recurrence;
    let ladder = &run.ladder;
    if n + 1 > ladder.n_top {
        return Err(Error::OutOfRange {
            what: "difference suite index",
            index: n as i64,
            lo: 1,
            hi: ladder.n_top as i64 - 1,
        });
    }
    let t = &run.params.t;
    let tol = run.policy().exact_tolerance();
    let terms = theorem1_terms(rec, n)?;
    let al2 = al2_terms(rec, &ladder.small_r, n);
    let m1 = m1_terms(rec, &ladder.big_r, &ladder.small_r, n);
    // d2 = D (m1 - al2) as polynomials in α, β once r_n is eliminated
    let mut chain = terms.d2.clone();
    chain.extend(m1.iter().map(|m| -mul(&terms.denominator, m)));
    chain.extend(al2.iter().map(|m| mul(&terms.denominator, m)));
    Ok(vec![
        ResidualEntry::new("d1", n, t, normalized(&terms.d1), &tol),
        ResidualEntry::new("d2", n, t, normalized(&terms.d2), &tol),
        ResidualEntry::new("al2", n, t, normalized(&al2), &tol),
        ResidualEntry::new("d2-chain", n, t, normalized(&chain), &tol),
    ])
}

/// Which difference quotient to use for `t`-derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// `(f(t+h) - f(t-h)) / 2h`
    Full,
    /// The same with `h/2`.
    Half,
    /// `D(h/2) + (D(h/2) - D(h)) / 3`, fourth order.
    Richardson,
}

/// Full pipelines at `t`, `t ± h` and optionally `t ± h/2`, all at the same
/// `λ`, precision and degree.
#[derive(Clone, Debug)]
pub struct TGrid {
    pub center: Run,
    pub h: Real,
    pub plus: Run,
    pub minus: Run,
    pub half: Option<(Run, Run)>,
}

/// `10^(-target/3)`, balancing `O(h²)` truncation against cancellation.
pub fn default_step(policy: &crate::precision::NumericPolicy) -> Real {
    policy.ten_pow_neg(i64::from(policy.target_digits / 3))
}

impl TGrid {
    pub fn build(center: Run, h: &Real, with_half: bool) -> Result<Self> {
        let params = &center.params;
        if *h <= 0 || *h >= params.t {
            return Err(Error::InvalidParameter(format!(
                "finite-difference step must lie in (0, t), got {}",
                h.to_f64()
            )));
        }
        let prec = params.prec();
        let h = Float::with_val(prec, h);
        let half_h = Float::with_val(prec, &h / 2u32);
        let mut ts = vec![
            Float::with_val(prec, &params.t + &h),
            Float::with_val(prec, &params.t - &h),
        ];
        if with_half {
            ts.push(Float::with_val(prec, &params.t + &half_h));
            ts.push(Float::with_val(prec, &params.t - &half_h));
        }
        let n_max = center.n_max;
        let mut runs = ts
            .par_iter()
            .map(|t| run_with(&params.with_t(t)?, n_max, &RunOptions::default()))
            .collect::<Result<Vec<_>>>()?
            .into_iter();
        let plus = runs.next().expect("t + h");
        let minus = runs.next().expect("t - h");
        let half = match (runs.next(), runs.next()) {
            (Some(p), Some(m)) => Some((p, m)),
            _ => None,
        };
        let grid = TGrid {
            center,
            h,
            plus,
            minus,
            half,
        };
        grid.check()?;
        Ok(grid)
    }

    fn offsets(&self) -> Vec<(&Run, &Run, Float)> {
        let prec = self.center.params.prec();
        let mut out = vec![(&self.plus, &self.minus, self.h.clone())];
        if let Some((p, m)) = &self.half {
            out.push((p, m, Float::with_val(prec, &self.h / 2u32)));
        }
        out
    }

    /// Every point shares `λ`, precision and degree, and sits at `t ± step`.
    pub fn check(&self) -> Result<()> {
        let c = &self.center;
        let prec = c.params.prec();
        let tol = ten_pow(prec, -i64::from(c.policy().working_digits()) + 5);
        for (p, m, step) in self.offsets() {
            for run in [p, m] {
                if run.params.lambda != c.params.lambda
                    || run.params.prec() != prec
                    || run.n_max != c.n_max
                    || run.recurrence.n_max != c.recurrence.n_max
                {
                    return Err(Error::GridMismatch(format!(
                        "grid point at t = {} differs from the center in lambda, precision or degree",
                        run.params.t_text
                    )));
                }
            }
            let up = Float::with_val(prec, &p.params.t - &c.params.t);
            let down = Float::with_val(prec, &c.params.t - &m.params.t);
            for d in [up, down] {
                if (d - &step).abs() > Float::with_val(prec, &c.params.t * &tol) {
                    return Err(Error::GridMismatch("grid points are not symmetric about t".into()));
                }
            }
        }
        Ok(())
    }

    /// Central-difference `t`-derivative of a quantity read off each run.
    pub fn derivative(&self, step: Step, f: impl Fn(&Run) -> Float) -> Result<Float> {
        self.derivative_dyn(step, &f)
    }

    fn derivative_dyn(&self, step: Step, f: &dyn Fn(&Run) -> Float) -> Result<Float> {
        // divide by the actual spacing, which differs from 2h by the decimal rounding of t ± h
        let central = |p: &Run, m: &Run| {
            let prec = self.center.params.prec();
            Float::with_val(prec, f(p) - f(m)) / Float::with_val(prec, &p.params.t - &m.params.t)
        };
        let half = || {
            self.half
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("grid has no h/2 points".into()))
        };
        let prec = self.center.params.prec();
        Ok(match step {
            Step::Full => central(&self.plus, &self.minus),
            Step::Half => {
                let (p, m) = half()?;
                central(p, m)
            }
            Step::Richardson => {
                let coarse = self.derivative_dyn(Step::Full, f)?;
                let fine = self.derivative_dyn(Step::Half, f)?;
                let correction = Float::with_val(prec, &fine - &coarse) / 3u32;
                fine + correction
            }
        })
    }

    /// The `h` actually used by `step`.
    pub fn step_size(&self, step: Step) -> Float {
        match step {
            Step::Full => self.h.clone(),
            Step::Half | Step::Richardson => Float::with_val(self.h.prec(), &self.h / 2u32),
        }
    }
}

/// Estimated cancellation floor of a difference quotient with step `h`:
/// values carry `target + guard` digits.
pub fn rounding_floor(policy: &crate::precision::NumericPolicy, h: &Real) -> Real {
    policy.ten_pow_neg(i64::from(policy.target_digits + GUARD_DIGITS)) / h
}

/// Pass threshold for finite-difference residuals: `max(100 h², 10 floor)`.
pub fn fd_tolerance(policy: &crate::precision::NumericPolicy, h: &Real) -> Real {
    let truncation = Float::with_val(h.prec(), h.square_ref()) * 100u32;
    let floor = rounding_floor(policy, h) * 10u32;
    truncation.max(&floor)
}

struct Theorem2Terms {
    dd1: Vec<Float>,
    dd2: Vec<Float>,
    /// `tβ_n' - β_n (R_{n-1} - R_n)`
    dd2_via_r: Vec<Float>,
}

fn theorem2_terms(grid: &TGrid, n: usize, step: Step) -> Result<Theorem2Terms> {
    let rec = &grid.center.recurrence;
    check_interior(rec, n)?;
    let (a, b) = (&rec.alpha, &rec.beta);
    let t = &grid.center.params.t;
    let prec = rec.prec();
    let t_alpha = grid.derivative(step, |r| r.recurrence.alpha[n].clone())? * t;
    let t_beta = grid.derivative(step, |r| r.recurrence.beta[n].clone())? * t;
    let dd1 = vec![
        t_alpha,
        -a[n].clone(),
        -(mul(&b[n], &a[n]) * 2u32),
        -(mul(&b[n], &a[n - 1]) * 2u32),
        mul(&b[n + 1], &a[n]) * 2u32,
        mul(&b[n + 1], &a[n + 1]) * 2u32,
    ];
    let dd2 = vec![
        t_beta.clone(),
        -(Float::with_val(prec, a[n - 1].square_ref()) * &b[n] * 2u32),
        Float::with_val(prec, a[n].square_ref()) * &b[n] * 2u32,
        -(mul(&b[n], &b[n - 1]) * 2u32),
        mul(&b[n], &b[n + 1]) * 2u32,
        -Float::with_val(prec, &b[n] * 2u32),
    ];
    let big_r = &grid.center.ladder.big_r;
    let dd2_via_r = vec![t_beta, -mul(&b[n], &big_r[n - 1]), mul(&b[n], &big_r[n])];
    Ok(Theorem2Terms { dd1, dd2, dd2_via_r })
}

/// Normalized residuals of the two differential-difference equations.
pub fn residual_theorem2(grid: &TGrid, n: usize, step: Step) -> Result<(Real, Real)> {
    let terms = theorem2_terms(grid, n, step)?;
    Ok((normalized(&terms.dd1).residual, normalized(&terms.dd2).residual))
}

/// `t (ln h_n)' + R_n` and `t p(n)' - r_n`.
fn logderiv_terms(grid: &TGrid, n: usize, step: Step) -> Result<(Vec<Float>, Vec<Float>)> {
    let ladder = &grid.center.ladder;
    if n > ladder.n_top {
        return Err(Error::OutOfRange {
            what: "log-derivative index",
            index: n as i64,
            lo: 0,
            hi: ladder.n_top as i64,
        });
    }
    let t = &grid.center.params.t;
    let t_log_h = grid.derivative(step, |r| r.recurrence.h[n].clone().ln())? * t;
    let t_p = grid.derivative(step, |r| r.recurrence.p[n].clone())? * t;
    Ok((
        vec![t_log_h, ladder.big_r[n].clone()],
        vec![t_p, -ladder.small_r[n].clone()],
    ))
}

pub fn residual_logderiv(grid: &TGrid, n: usize, step: Step) -> Result<(Real, Real)> {
    let (eq1, eq2) = logderiv_terms(grid, n, step)?;
    Ok((normalized(&eq1).residual, normalized(&eq2).residual))
}

/// Lowest moment index whose `t`-derivative is checked; needs `μ_{k-1}`.
const DMU_K_RANGE: std::ops::RangeInclusive<i64> = -1..=4;

/// Differential-difference residuals at one `n`, computed with `step`.
/// When the grid carries `h/2` points, each residual also gets an `order:`
/// entry comparing `h` with `h/2` (skipped once rounding dominates).
pub fn diffdiff_entries(grid: &TGrid, n: usize, step: Step) -> Result<Vec<ResidualEntry>> {
    let policy = grid.center.policy();
    let t = &grid.center.params.t;
    let h = grid.step_size(step);
    let tol = fd_tolerance(policy, &h);
    let exact = policy.exact_tolerance();
    let th2 = theorem2_terms(grid, n, step)?;
    let (eq1, eq2) = logderiv_terms(grid, n, step)?;
    let (_, eq2_next) = logderiv_terms(grid, n + 1, step)?;

    // (dd1) minus [(eq2) at n minus (eq2) at n+1] leaves only the exact identity t α_n' = r_n - r_{n+1}
    let mut chain = th2.dd1.clone();
    chain.extend(eq2.iter().map(|x| -x.clone()));
    chain.extend(eq2_next.iter().cloned());

    let mut out = vec![
        ResidualEntry::new("dd1", n, t, normalized(&th2.dd1), &tol),
        ResidualEntry::new("dd2", n, t, normalized(&th2.dd2), &tol),
        ResidualEntry::new("dd2-via-R", n, t, normalized(&th2.dd2_via_r), &tol),
        ResidualEntry::new("eq1", n, t, normalized(&eq1), &tol),
        ResidualEntry::new("eq2", n, t, normalized(&eq2), &tol),
        ResidualEntry::new("al4-chain", n, t, normalized(&chain), &exact),
    ];
    if grid.half.is_some() {
        out.extend(order_entries(grid, n)?);
    }
    Ok(out)
}

/// Allowed deviation of the `h → h/2` residual ratio from 4.
pub const ORDER_RATIO_BAND: f64 = 0.5;

fn order_entries(grid: &TGrid, n: usize) -> Result<Vec<ResidualEntry>> {
    let policy = grid.center.policy();
    let prec = grid.center.params.prec();
    let t = &grid.center.params.t;
    let half_h = grid.step_size(Step::Half);
    let floor = rounding_floor(policy, &half_h) * 1000u32;
    let band = Float::with_val(prec, ORDER_RATIO_BAND);
    let (dd1_h, dd2_h) = residual_theorem2(grid, n, Step::Full)?;
    let (dd1_half, dd2_half) = residual_theorem2(grid, n, Step::Half)?;
    let (eq1_h, eq2_h) = residual_logderiv(grid, n, Step::Full)?;
    let (eq1_half, eq2_half) = residual_logderiv(grid, n, Step::Half)?;
    let mut out = Vec::new();
    for (name, coarse, fine) in [
        ("order:dd1", dd1_h, dd1_half),
        ("order:dd2", dd2_h, dd2_half),
        ("order:eq1", eq1_h, eq1_half),
        ("order:eq2", eq2_h, eq2_half),
    ] {
        if fine <= floor {
            continue;
        }
        let ratio = coarse / &fine;
        out.push(ResidualEntry::new(name, n, t, scale_free(ratio - 4u32), &band));
    }
    Ok(out)
}

/// `dμ_k/dt = -μ_{k-1}` by central differences on the moment tables.
pub fn moment_derivative_entries(grid: &TGrid) -> Result<Vec<ResidualEntry>> {
    let (c, p, m) = (&grid.center, &grid.plus, &grid.minus);
    let tol = fd_tolerance(c.policy(), &grid.h);
    let mut out = Vec::new();
    for k in DMU_K_RANGE {
        let abs = moment_t_derivative_check(&c.moments, &p.moments, &m.moments, k)?;
        let rel = abs / c.moments.mu(k - 1)?;
        out.push(ResidualEntry::new("dmu_dt", k.max(0) as usize, &c.params.t, scale_free(rel), &tol));
    }
    Ok(out)
}

/// The integral route is run on every `n ≤ 20`, then every 10th `n`.
pub const INTEGRAL_DENSE_UNTIL: usize = 20;
pub const INTEGRAL_STRIDE: usize = 10;

/// Coefficient identities on the identity route, the same identities on the
/// quadrature route over the dense range, and cross-route agreement.
pub fn ladder_entries(run: &Run) -> Result<Vec<ResidualEntry>> {
    let rec = &run.recurrence;
    let ladder = &run.ladder;
    let mut out = Vec::new();
    for n in 1..ladder.n_top {
        out.extend(coefficient_identity_residuals(rec, ladder, n)?);
    }
    let dense_top = ladder.n_top.min(INTEGRAL_DENSE_UNTIL);
    let integral = ladder_from_integrals(rec, dense_top)?;
    for n in 1..integral.n_top {
        out.extend(coefficient_identity_residuals(rec, &integral, n)?);
    }
    out.extend(cross_path_residuals(ladder, &integral));

    let sparse: Vec<usize> = (dense_top + 1..=ladder.n_top)
        .filter(|n| n % INTEGRAL_STRIDE == 0)
        .collect();
    if !sparse.is_empty() {
        let prec = rec.prec();
        let tol = run.policy().exact_tolerance();
        let t = &run.params.t;
        let rel = |a: &Float, b: &Float| Float::with_val(prec, a - b).abs() / Float::with_val(prec, b.abs_ref());
        for (n, (big, small)) in sparse.iter().zip(integral_ladder_values(rec, &sparse)?) {
            out.push(ResidualEntry::new("R_cross", *n, t, scale_free(rel(&big, &ladder.big_r[*n])), &tol));
            out.push(ResidualEntry::new("r_cross", *n, t, scale_free(rel(&small, &ladder.small_r[*n])), &tol));
        }
    }
    Ok(out)
}

pub fn compat_entries(run: &Run, z_samples: &[Real]) -> Result<Vec<ResidualEntry>> {
    let mut out = Vec::new();
    for n in 1..run.ladder.n_top {
        out.extend(compat_pointwise_residuals(&run.recurrence, &run.ladder, n, z_samples)?);
    }
    Ok(out)
}

/// Sample points for the Pearson equation.
pub const PEARSON_SAMPLES: [f64; 4] = [0.3, 1.0, 2.0, 5.0];

pub fn pearson_entries(run: &Run) -> Result<Vec<ResidualEntry>> {
    let params = &run.params;
    let tol = params.policy.exact_tolerance();
    PEARSON_SAMPLES
        .iter()
        .map(|&x| {
            let terms = pearson_terms(&params.policy.real(x), params)?;
            Ok(ResidualEntry::new(format!("pearson@x={x}"), 0, &params.t, normalized(&terms), &tol))
        })
        .collect()
}

/// Smallest degree for which the large-`n` expansions are tested.
pub const ASYM_MIN_N: usize = 64;
/// Default half-width of the slope acceptance band.
pub const DEFAULT_SLOPE_BAND: f64 = 0.3;

/// `count` integers spaced geometrically from `lo` to `hi`.
pub fn geometric_samples(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count < 2 || hi <= lo {
        return vec![hi.max(lo)];
    }
    let ratio = (hi as f64 / lo as f64).powf(1.0 / (count - 1) as f64);
    let mut out: Vec<usize> = (0..count)
        .map(|i| (lo as f64 * ratio.powi(i as i32)).round() as usize)
        .collect();
    out.dedup();
    out
}

/// Decay fits for `α` and `β` plus the remainder-dominance check at each sample.
pub fn asym_entries(run: &Run, band: f64) -> Result<(Vec<ResidualEntry>, Vec<DecayFit>)> {
    if run.n_max < ASYM_MIN_N {
        return Err(Error::InvalidParameter(format!(
            "asymptotic checks need n_max >= {ASYM_MIN_N}, got {}",
            run.n_max
        )));
    }
    let rec = &run.recurrence;
    let prec = rec.prec();
    let t = &run.params.t;
    let model = expansion_coefficients(&run.params.lambda, t)?;
    let samples = geometric_samples(ASYM_MIN_N, run.n_max, 5);
    let mut entries = Vec::new();
    let mut fits = Vec::new();
    for which in [Which::Alpha, Which::Beta] {
        let fit = decay_fit(rec, &model, which, &samples)?;
        let deviation = Float::with_val(prec, fit.slope - which.remainder_order());
        entries.push(ResidualEntry::new(
            format!("asym:slope_{}", which.as_str()),
            fit.n_range.1,
            t,
            scale_free(deviation),
            &Float::with_val(prec, band),
        ));
        for point in &fit.points {
            let last = model.last_term_magnitude(point.n, which);
            let ratio = Float::with_val(prec, point.residual.abs_ref()) / last;
            entries.push(ResidualEntry::new(
                format!("asym:remainder_{}", which.as_str()),
                point.n,
                t,
                scale_free(ratio),
                &Float::with_val(prec, 1),
            ));
        }
        fits.push(fit);
    }
    Ok((entries, fits))
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub suites: Vec<Suite>,
    /// Finite-difference step; defaults to [`default_step`].
    pub h: Option<Real>,
    /// Report Theorem 2 residuals with one Richardson step.
    pub richardson: bool,
    pub beta_fault: Option<usize>,
    pub z_samples: Option<Vec<Real>>,
    pub slope_band: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            suites: Suite::defaults(),
            h: None,
            richardson: false,
            beta_fault: None,
            z_samples: None,
            slope_band: DEFAULT_SLOPE_BAND,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Verification {
    pub run: Run,
    pub report: ResidualReport,
    pub fits: Vec<DecayFit>,
}

/// Runs the selected suites at one `(λ, t)` for `1 ≤ n ≤ n_max - 1`.
pub fn verify_point(params: &crate::weight::Parameters, n_max: usize, options: &VerifyOptions) -> Result<Verification> {
    if options.suites.contains(&Suite::Asym) && n_max < ASYM_MIN_N {
        return Err(Error::InvalidParameter(format!(
            "suite asym needs --nmax >= {ASYM_MIN_N}"
        )));
    }
    let run = run_with(
        params,
        n_max,
        &RunOptions {
            beta_fault: options.beta_fault,
        },
    )?;
    let mut report = ResidualReport {
        entries: Vec::new(),
        lambda: run.params.lambda_text.clone(),
        target_digits: run.policy().target_digits,
        precision_bits: run.params.prec(),
    };
    let mut fits = Vec::new();
    let mut suites = options.suites.clone();
    suites.sort();
    suites.dedup();
    let interior = 1..run.ladder.n_top;
    for suite in suites {
        match suite {
            Suite::Difference => {
                for n in interior.clone() {
                    report.extend(difference_entries(&run, n)?);
                }
            }
            Suite::Diffdiff => {
                let h = options.h.clone().unwrap_or_else(|| default_step(run.policy()));
                let grid = TGrid::build(run.clone(), &h, true)?;
                let step = if options.richardson { Step::Richardson } else { Step::Full };
                for n in interior.clone() {
                    report.extend(diffdiff_entries(&grid, n, step)?);
                }
                report.extend(moment_derivative_entries(&grid)?);
            }
            Suite::Compat => {
                let z = options
                    .z_samples
                    .clone()
                    .unwrap_or_else(|| default_z_samples(run.params.prec()));
                report.extend(compat_entries(&run, &z)?);
            }
            Suite::Ladder => report.extend(ladder_entries(&run)?),
            Suite::Asym => {
                let (entries, f) = asym_entries(&run, options.slope_band)?;
                report.extend(entries);
                fits.extend(f);
            }
            Suite::Pearson => report.extend(pearson_entries(&run)?),
        }
    }
    Ok(Verification { run, report, fits })
}
