//! Large-`n` expansions of the recurrence coefficients and their empirical
//! order of accuracy.
//!
//! ```text
//! α_n = √(2n/3) + Σ_{j≥0} a_j n^{-j/2}
//! β_n = n/6     + Σ_{j≥-1} b_j n^{-j/2}
//! ```
//!
//! with the coefficients known through `a_4` and `b_3`. The remainders are
//! `O(n^{-5/2})` for `α_n` and `O(n^{-2})` for `β_n`.

use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::precision::{format_real, log10_abs, ten_pow, Real};
use crate::recurrence::RecurrenceTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Alpha,
    Beta,
}

impl Which {
    pub fn as_str(self) -> &'static str {
        match self {
            Which::Alpha => "alpha",
            Which::Beta => "beta",
        }
    }

    /// Exponent of the first omitted term.
    pub fn remainder_order(self) -> f64 {
        match self {
            Which::Alpha => -2.5,
            Which::Beta => -2.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AsymptoticModel {
    pub lambda: Real,
    pub t: Real,
    /// `a_0 ..= a_4`
    pub a: [Real; 5],
    /// `b_{-1} ..= b_3`; `b[j + 1]` holds `b_j`.
    pub b: [Real; 5],
}

pub fn expansion_coefficients(lambda: &Real, t: &Real) -> Result<AsymptoticModel> {
    if *t <= 0 {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    if *lambda < 0 {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let prec = lambda.prec().max(t.prec());
    let f = |x: f64| Float::with_val(prec, x);
    let lam = Float::with_val(prec, lambda);
    let t = Float::with_val(prec, t);
    let cbrt2 = f(2.0).cbrt();
    let two_pow = |num: i32, den: i32| f(2.0).pow(f(f64::from(num)) / f64::from(den));
    let sqrt3 = f(3.0).sqrt();
    let sqrt6 = f(6.0).sqrt();
    let t13 = Float::with_val(prec, t.cbrt_ref());
    let t23 = Float::with_val(prec, t13.square_ref());
    let t43 = Float::with_val(prec, &t23 * &t23);
    let lam2 = Float::with_val(prec, lam.square_ref());
    let lam2_minus_1 = Float::with_val(prec, &lam2 - 1u32);
    // 96 √3 2^{5/6}
    let big_den = f(96.0) * &sqrt3 * two_pow(5, 6);

    // a_1 = (2λ + 2 + 3 (2t²)^{1/3}) / (4√6)
    let two_t2_13 = Float::with_val(prec, Float::with_val(prec, t.square_ref()) * 2u32).cbrt();
    let a1 = (Float::with_val(prec, &lam * 2u32) + 2u32 + two_t2_13 * 3u32) / (sqrt6 * 4u32);

    // a_3 = -[4·2^{1/3}(3λ+2) + 18(λ+1)(2t)^{2/3} + 27 t^{4/3}] / (96√3·2^{5/6})
    let two_t_23 = Float::with_val(prec, Float::with_val(prec, &t * 2u32).cbrt().square_ref());
    let a3_num = Float::with_val(prec, &cbrt2 * 4u32) * (Float::with_val(prec, &lam * 3u32) + 2u32)
        + Float::with_val(prec, &lam + 1u32) * two_t_23 * 18u32
        + Float::with_val(prec, &t43 * 27u32);
    let a3 = -(a3_num / &big_den);

    // a_4 = λ(λ² - 1) / (72 (4t)^{1/3})
    let four_t_13 = Float::with_val(prec, &t * 4u32).cbrt();
    let a4 = Float::with_val(prec, &lam * &lam2_minus_1) / (four_t_13 * 72u32);

    let b0 = Float::with_val(prec, &lam / 12u32);
    // b_1 = -λ t^{1/3} / (4√3·2^{5/6})
    let b1 = -(Float::with_val(prec, &lam * &t13) / (Float::with_val(prec, &sqrt3 * 4u32) * two_pow(5, 6)));
    let b2 = (f(1.0) - Float::with_val(prec, &lam2 * 3u32)) / 144u32;
    // b_3 = -λ[2^{2/3}(λ² - 1) - 6λ t^{2/3} - 9·2^{1/3} t^{4/3}] / (96√3·2^{5/6} t^{1/3})
    let bracket = two_pow(2, 3) * &lam2_minus_1
        - Float::with_val(prec, &lam * &t23) * 6u32
        - Float::with_val(prec, &cbrt2 * &t43) * 9u32;
    let b3 = -(Float::with_val(prec, &lam * &bracket) / (big_den * &t13));

    Ok(AsymptoticModel {
        lambda: lam,
        t,
        a: [f(0.0), a1, f(0.0), a3, a4],
        b: [f(0.0), b0, b1, b2, b3],
    })
}

impl AsymptoticModel {
    pub fn a(&self, j: usize) -> &Real {
        &self.a[j]
    }

    /// `b_j` for `-1 ≤ j ≤ 3`.
    pub fn b(&self, j: i32) -> &Real {
        &self.b[(j + 1) as usize]
    }

    fn prec(&self) -> u32 {
        self.lambda.prec()
    }

    /// Truncated expansion of `α_n` or `β_n`.
    pub fn expansion_value(&self, n: usize, which: Which) -> Result<Real> {
        if n == 0 {
            return Err(Error::InvalidParameter("expansions need n >= 1".into()));
        }
        let prec = self.prec();
        let nf = Float::with_val(prec, n);
        let sqrt_n = Float::with_val(prec, nf.sqrt_ref());
        // n^{-j/2}
        let inv_half_power = |j: i32| Float::with_val(prec, sqrt_n.clone().pow(-j));
        match which {
            Which::Alpha => {
                let mut v = Float::with_val(prec, &nf * 2u32) / 3u32;
                v.sqrt_mut();
                for j in 0..=4 {
                    v += inv_half_power(j) * &self.a[j as usize];
                }
                Ok(v)
            }
            Which::Beta => {
                let mut v = Float::with_val(prec, &nf / 6u32);
                for j in -1..=3 {
                    v += inv_half_power(j) * self.b(j);
                }
                Ok(v)
            }
        }
    }

    /// Magnitude of the last nonzero term kept in the truncated expansion.
    pub fn last_term_magnitude(&self, n: usize, which: Which) -> Real {
        let prec = self.prec();
        let sqrt_n = Float::with_val(prec, n).sqrt();
        let (coeffs, first): (Vec<&Real>, i32) = match which {
            Which::Alpha => (self.a.iter().collect(), 0),
            Which::Beta => (self.b.iter().collect(), -1),
        };
        for (i, c) in coeffs.iter().enumerate().rev() {
            if !c.is_zero() {
                let j = first + i as i32;
                return Float::with_val(prec, c.abs_ref()) * sqrt_n.clone().pow(-j);
            }
        }
        Float::new(prec)
    }

    pub fn to_json(&self, digits: u32) -> Value {
        let fmt = |x: &Real| format_real(x, digits);
        json!({
            "lambda": fmt(&self.lambda),
            "t": fmt(&self.t),
            "a": (0..=4).map(|j| json!({"j": j, "value": fmt(&self.a[j])})).collect::<Vec<_>>(),
            "b": (-1..=3).map(|j| json!({"j": j, "value": fmt(self.b(j))})).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct DecayPoint {
    pub n: usize,
    pub computed: Real,
    pub expansion: Real,
    pub residual: Real,
}

#[derive(Clone, Debug)]
pub struct DecayFit {
    pub which: Which,
    pub n_range: (usize, usize),
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<DecayPoint>,
    /// Samples whose residual fell below the rounding floor.
    pub excluded: Vec<usize>,
    pub warnings: Vec<String>,
    /// Per-point deviation of `log|residual|` from the fitted line.
    pub fit_residuals: Vec<f64>,
}

/// Default geometric sample of `n` (ratio ≈ √2).
pub const DEFAULT_SAMPLES: [usize; 5] = [64, 91, 128, 181, 256];

/// Least-squares slope of `ln|computed - expansion|` against `ln n`.
pub fn decay_fit(rec: &RecurrenceTable, model: &AsymptoticModel, which: Which, n_samples: &[usize]) -> Result<DecayFit> {
    let prec = rec.prec();
    let floor_digits = i64::from(rec.params.policy.target_digits);
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    let mut warnings = Vec::new();
    for &n in n_samples {
        if n == 0 || n > rec.n_max {
            return Err(Error::OutOfRange {
                what: "decay-fit sample",
                index: n as i64,
                lo: 1,
                hi: rec.n_max as i64,
            });
        }
        let computed = match which {
            Which::Alpha => rec.alpha[n].clone(),
            Which::Beta => rec.beta[n].clone(),
        };
        let expansion = model.expansion_value(n, which)?;
        let residual = Float::with_val(prec, &computed - &expansion);
        let floor = Float::with_val(prec, computed.abs_ref()) * ten_pow(prec, -floor_digits);
        if Float::with_val(prec, residual.abs_ref()) <= floor {
            warnings.push(format!(
                "{} residual at n={n} is below the rounding floor; sample excluded",
                which.as_str()
            ));
            excluded.push(n);
            continue;
        }
        points.push(DecayPoint {
            n,
            computed,
            expansion,
            residual,
        });
    }
    if points.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "decay fit needs two usable samples, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|p| log10_abs(&p.residual) * std::f64::consts::LN_10)
        .collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let fit_residuals = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(DecayFit {
        which,
        n_range: (
            points.first().map(|p| p.n).unwrap_or(0),
            points.last().map(|p| p.n).unwrap_or(0),
        ),
        slope,
        intercept,
        points,
        excluded,
        warnings,
        fit_residuals,
    })
}

/// Ordinary least squares `y ≈ intercept + slope x`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

impl DecayFit {
    pub fn in_band(&self, half_width: f64) -> bool {
        (self.slope - self.which.remainder_order()).abs() <= half_width
    }

    pub fn to_json(&self, digits: u32, half_width: f64) -> Value {
        json!({
            "which": self.which.as_str(),
            "n_range": [self.n_range.0, self.n_range.1],
            "slope": self.slope,
            "intercept": self.intercept,
            "expected_slope": self.which.remainder_order(),
            "band_half_width": half_width,
            "in_band": self.in_band(half_width),
            "excluded": self.excluded,
            "warnings": self.warnings,
            "points": self.points.iter().map(|p| json!({
                "n": p.n,
                "computed": format_real(&p.computed, digits),
                "expansion": format_real(&p.expansion, digits),
                "residual": format_real(&p.residual, digits),
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(lambda: f64, t: f64) -> AsymptoticModel {
        expansion_coefficients(&Float::with_val(256, lambda), &Float::with_val(256, t)).unwrap()
    }

    fn close(a: &Float, b: f64) -> bool {
        (Float::with_val(256, a - b).abs()) < 1e-15 * b.abs().max(1.0)
    }

    #[test]
    fn structural_zeros() {
        for (lambda, t) in [(0.0, 1.0), (1.0, 0.5), (2.5, 2.0)] {
            let m = model(lambda, t);
            assert!(m.a(0).is_zero() && m.a(2).is_zero() && m.b(-1).is_zero());
        }
        let m = model(0.0, 1.7);
        assert!(m.b(1).is_zero() && m.b(3).is_zero() && m.a(4).is_zero());
        assert!(model(1.0, 0.3).a(4).is_zero());
    }

    #[test]
    fn printed_values() {
        let m = model(1.0, 1.0);
        assert!(close(m.b(0), 1.0 / 12.0));
        let m0 = model(0.0, 1.0);
        let a1 = (2.0 + 3.0 * 2f64.cbrt()) / (4.0 * 6f64.sqrt());
        assert!(close(m0.a(1), a1));
        assert!(close(m0.b(2), 1.0 / 144.0));
        // λ = 1 drops the 2^{2/3}(λ² - 1) term of b_3
        let t: f64 = 0.7;
        let m1 = model(1.0, t);
        let b3 = -(-6.0 * t.powf(2.0 / 3.0) - 9.0 * 2f64.cbrt() * t.powf(4.0 / 3.0))
            / (96.0 * 3f64.sqrt() * 2f64.powf(5.0 / 6.0) * t.cbrt());
        assert!(close(m1.b(3), b3));
        let a3 = -(4.0 * 2f64.cbrt() * 5.0 + 36.0 * (2.0 * t).powf(2.0 / 3.0) + 27.0 * t.powf(4.0 / 3.0))
            / (96.0 * 3f64.sqrt() * 2f64.powf(5.0 / 6.0));
        assert!(close(m1.a(3), a3));
        let m2 = model(2.5, 0.5);
        assert!(close(m2.a(4), 2.5 * (6.25 - 1.0) / (72.0 * 2f64.cbrt())));
        let b1 = -2.5 * 0.5f64.cbrt() / (4.0 * 3f64.sqrt() * 2f64.powf(5.0 / 6.0));
        assert!(close(m2.b(1), b1));
    }

    #[test]
    fn rejects_nonpositive_t() {
        assert!(expansion_coefficients(&Float::with_val(64, 1), &Float::with_val(64, 0)).is_err());
    }

    #[test]
    fn expansion_values() {
        let m = model(0.0, 1.0);
        let alpha6 = m.expansion_value(6, Which::Alpha).unwrap();
        let expected = 2.0 + m.a(1).to_f64() / 6f64.sqrt() + m.a(3).to_f64() / 6f64.powf(1.5);
        assert!(close(&alpha6, expected));
        let beta = m.expansion_value(10, Which::Beta).unwrap();
        assert!(close(&beta, 10.0 / 6.0 + 1.0 / 1440.0));
        let big = m.expansion_value(1_000_000, Which::Beta).unwrap() / 1_000_000u32;
        assert!((big.to_f64() - 1.0 / 6.0).abs() < 1e-9);
        assert!(m.expansion_value(0, Which::Alpha).is_err());
    }

    #[test]
    fn last_term_skips_vanishing_coefficients() {
        let m = model(0.0, 1.0);
        // a_4 = 0 at λ = 0, so the last alpha term is a_3 n^{-3/2}
        let v = m.last_term_magnitude(100, Which::Alpha).to_f64();
        assert!((v - m.a(3).to_f64().abs() / 1000.0).abs() < 1e-18);
        let v = m.last_term_magnitude(100, Which::Beta).to_f64();
        assert!((v - 1.0 / 14400.0).abs() < 1e-18);
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 - 2.5 * x).collect();
        let (slope, intercept) = least_squares(&xs, &ys);
        assert!((slope + 2.5).abs() < 1e-12 && (intercept - 0.5).abs() < 1e-12);
    }
}
