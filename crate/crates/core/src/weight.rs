//! The weight `w(x; t) = x^λ exp(-x² - t/x)` on `(0, ∞)` and its moments.

use rug::ops::Pow;
use rug::{Assign, Float};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::precision::{format_real, parse_real, NumericPolicy, Real};
use crate::quadrature::{DeQuadrature, Integrand, QuadResult};

/// Problem instance `(λ, t)` together with the numeric policy of the run.
#[derive(Clone, Debug)]
pub struct Parameters {
    pub lambda: Real,
    pub t: Real,
    /// Decimal text the parameters were given as; echoed into reports.
    pub lambda_text: String,
    pub t_text: String,
    pub policy: NumericPolicy,
}

impl Parameters {
    pub fn parse(lambda: &str, t: &str, policy: NumericPolicy) -> Result<Self> {
        let prec = policy.precision_bits;
        let params = Parameters {
            lambda: parse_real(lambda, prec)?,
            t: parse_real(t, prec)?,
            lambda_text: lambda.trim().to_string(),
            t_text: t.trim().to_string(),
            policy,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_f64(lambda: f64, t: f64, policy: NumericPolicy) -> Result<Self> {
        Self::parse(&lambda.to_string(), &t.to_string(), policy)
    }

    /// Same instance at another policy; values are re-parsed from the text so
    /// no precision is lost when raising it.
    pub fn with_policy(&self, policy: NumericPolicy) -> Result<Self> {
        Self::parse(&self.lambda_text, &self.t_text, policy)
    }

    /// Same `λ` and policy at a different `t`.
    pub fn with_t(&self, t: &Real) -> Result<Self> {
        let text = format_real(t, self.policy.working_digits());
        Self::parse(&self.lambda_text, &text, self.policy.clone())
    }

    fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if !self.lambda.is_finite() || self.lambda < 0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {}",
                self.lambda_text
            )));
        }
        if !self.t.is_finite() || self.t <= 0 {
            return Err(Error::InvalidParameter(format!("t must be > 0, got {}", self.t_text)));
        }
        Ok(())
    }

    pub fn prec(&self) -> u32 {
        self.policy.precision_bits
    }

    /// Quadrature split point `max(1, (t/2)^{1/3})`, next to where the
    /// exponent `-x² - t/x` is stationary.
    pub fn split_point(&self) -> Real {
        let cube = Float::with_val(self.prec(), &self.t / 2u32).cbrt();
        cube.max(&Float::with_val(self.prec(), 1))
    }

    /// Quadrature that resolves integrals against `w` to the full working precision.
    pub fn quadrature(&self) -> DeQuadrature {
        DeQuadrature::new(self.prec(), &self.split_point(), self.policy.working_digits())
    }
}

/// `w(x) = x^λ e^{-x² - t/x}`; zero at `x = 0` (limit from the right).
pub fn eval_weight(x: &Real, params: &Parameters) -> Result<Real> {
    if x.is_sign_negative() && !x.is_zero() {
        return Err(Error::InvalidParameter(format!("weight is supported on x >= 0, got {x}")));
    }
    if x.is_zero() {
        return Ok(Float::new(params.prec()));
    }
    Ok(weight_at(x, &params.lambda, &params.t))
}

/// `w(x)` evaluated at the precision of `x`.
pub(crate) fn weight_at(x: &Float, lambda: &Float, t: &Float) -> Float {
    let prec = x.prec();
    let mut expo = Float::with_val(prec, t / x);
    expo += Float::with_val(prec, x.square_ref());
    expo = -expo;
    if !lambda.is_zero() {
        expo += Float::with_val(prec, x.ln_ref()) * lambda;
    }
    expo.exp()
}

/// `v'(z) = 2z - λ/z - t/z²` for the potential `v = -ln w`.
pub fn eval_potential_derivative(z: &Real, params: &Parameters) -> Result<Real> {
    if *z <= 0 {
        return Err(Error::InvalidParameter(format!("v'(z) needs z > 0, got {z}")));
    }
    Ok(potential_derivative(z, &params.lambda, &params.t))
}

pub(crate) fn potential_derivative(z: &Float, lambda: &Float, t: &Float) -> Float {
    let prec = z.prec();
    let mut v = Float::with_val(prec, z * 2u32);
    v -= Float::with_val(prec, lambda / z);
    v -= Float::with_val(prec, t / Float::with_val(prec, z.square_ref()));
    v
}

/// `(σw)' - τw` with `σ = x²`, `τ = -2x³ + (λ+2)x + t`, computed from the
/// closed-form derivative `w' = w (λ/x - 2x + t/x²)`.
pub fn pearson_residual(x: &Real, params: &Parameters) -> Result<Real> {
    let terms = pearson_terms(x, params)?;
    Ok(terms.into_iter().fold(Float::new(params.prec()), |acc, term| acc + term))
}

/// The additive terms `[2x w, x² w', -τ w]` of the Pearson residual.
pub fn pearson_terms(x: &Real, params: &Parameters) -> Result<Vec<Real>> {
    if *x <= 0 {
        return Err(Error::InvalidParameter(format!("Pearson residual needs x > 0, got {x}")));
    }
    let prec = params.prec();
    let (lambda, t) = (&params.lambda, &params.t);
    let w = weight_at(x, lambda, t);
    let x2 = Float::with_val(prec, x.square_ref());
    let log_deriv = {
        let mut d = Float::with_val(prec, lambda / x);
        d -= Float::with_val(prec, x * 2u32);
        d += Float::with_val(prec, t / &x2);
        d
    };
    let dw = Float::with_val(prec, &w * &log_deriv);
    let tau = {
        let mut tau = Float::with_val(prec, &x2 * x) * -2i32;
        tau += Float::with_val(prec, lambda + 2u32) * x;
        tau += t;
        tau
    };
    Ok(vec![
        Float::with_val(prec, x * 2u32) * &w,
        x2 * dw,
        -(tau * w),
    ])
}

/// Moments `μ_k = ∫₀^∞ x^k w(x) dx` for `k_min ≤ k ≤ k_max`.
#[derive(Clone, Debug)]
pub struct MomentTable {
    pub params: Parameters,
    pub k_min: i64,
    pub k_max: i64,
    values: Vec<Real>,
    /// Quadrature level at which the table converged.
    pub level: u32,
    pub agreement_digits: f64,
}

struct MomentIntegrand<'a> {
    lambda: &'a Float,
    t: &'a Float,
    k_min: i64,
    count: usize,
}

impl Integrand for MomentIntegrand<'_> {
    fn dim(&self) -> usize {
        self.count
    }

    fn terms(&self, x: &Float, jac: &Float, out: &mut [Float]) {
        let prec = x.prec();
        let lambda = Float::with_val(prec, self.lambda);
        let t = Float::with_val(prec, self.t);
        let mut c = weight_at(x, &lambda, &t);
        c *= jac;
        c *= Float::with_val(prec, x.pow(self.k_min as i32));
        out[0].assign(&c);
        for i in 1..out.len() {
            let (done, rest) = out.split_at_mut(i);
            rest[0].assign(&done[i - 1] * x);
        }
    }
}

/// Computes the moment table by double-exponential quadrature at working precision.
pub fn compute_moments(params: &Parameters, k_min: i64, k_max: i64) -> Result<MomentTable> {
    if k_min > -2 {
        return Err(Error::InvalidParameter(format!("k_min must be <= -2, got {k_min}")));
    }
    if k_max < k_min {
        return Err(Error::InvalidParameter(format!("k_max {k_max} < k_min {k_min}")));
    }
    let integrand = MomentIntegrand {
        lambda: &params.lambda,
        t: &params.t,
        k_min,
        count: (k_max - k_min + 1) as usize,
    };
    let QuadResult {
        values,
        level,
        agreement_digits,
        ..
    } = params.quadrature().integrate(&integrand)?;
    log::debug!(
        "moments k={k_min}..={k_max} at {} bits: level {level}, {agreement_digits:.1} digits",
        params.prec()
    );
    Ok(MomentTable {
        params: params.clone(),
        k_min,
        k_max,
        values,
        level,
        agreement_digits,
    })
}

impl MomentTable {
    pub fn mu(&self, k: i64) -> Result<&Real> {
        if k < self.k_min || k > self.k_max {
            return Err(Error::MissingMoment(k));
        }
        Ok(&self.values[(k - self.k_min) as usize])
    }

    pub fn precision_bits(&self) -> u32 {
        self.params.prec()
    }

    pub fn to_json(&self) -> Value {
        let digits = self.params.policy.target_digits;
        let moments: Map<String, Value> = (self.k_min..=self.k_max)
            .zip(&self.values)
            .map(|(k, v)| (k.to_string(), Value::String(format_real(v, digits))))
            .collect();
        json!({
            "lambda": self.params.lambda_text,
            "t": self.params.t_text,
            "precision_bits": self.precision_bits(),
            "moments": moments,
        })
    }

    /// Reads a table written by [`MomentTable::to_json`]. Values carry only
    /// the printed digits.
    pub fn from_json(value: &Value, target_digits: u32) -> Result<Self> {
        let field = |name: &str| {
            value
                .get(name)
                .ok_or_else(|| Error::InvalidParameter(format!("moment JSON lacks {name:?}")))
        };
        let text = |name: &str| -> Result<String> {
            field(name)?
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::InvalidParameter(format!("{name:?} must be a decimal string")))
        };
        let bits = field("precision_bits")?
            .as_u64()
            .ok_or_else(|| Error::InvalidParameter("precision_bits must be an integer".into()))?;
        let policy = NumericPolicy::new(bits as u32, target_digits)?;
        let params = Parameters::parse(&text("lambda")?, &text("t")?, policy)?;
        let map = field("moments")?
            .as_object()
            .ok_or_else(|| Error::InvalidParameter("moments must be an object".into()))?;
        let mut entries = map
            .iter()
            .map(|(k, v)| {
                let k: i64 = k
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad moment index {k:?}")))?;
                let v = v
                    .as_str()
                    .ok_or_else(|| Error::InvalidParameter(format!("moment {k} must be a string")))?;
                Ok((k, parse_real(v, params.prec())?))
            })
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by_key(|(k, _)| *k);
        let k_min = entries.first().map(|e| e.0).unwrap_or(0);
        let k_max = entries.last().map(|e| e.0).unwrap_or(-1);
        if entries.len() as i64 != k_max - k_min + 1 {
            return Err(Error::InvalidParameter("moment indices are not contiguous".into()));
        }
        Ok(MomentTable {
            params,
            k_min,
            k_max,
            values: entries.into_iter().map(|e| e.1).collect(),
            level: 0,
            agreement_digits: f64::from(target_digits),
        })
    }
}

/// `|(μ_k(t+h) - μ_k(t-h)) / 2h + μ_{k-1}(t)|`, which is `O(h²)` because
/// `∂w/∂t = -w/x`.
pub fn moment_t_derivative_check(
    at_t: &MomentTable,
    at_t_plus_h: &MomentTable,
    at_t_minus_h: &MomentTable,
    k: i64,
) -> Result<Real> {
    let prec = at_t.precision_bits();
    for other in [at_t_plus_h, at_t_minus_h] {
        if other.precision_bits() != prec || other.params.lambda != at_t.params.lambda {
            return Err(Error::GridMismatch(
                "moment tables differ in lambda or precision".into(),
            ));
        }
    }
    let h_plus = Float::with_val(prec, &at_t_plus_h.params.t - &at_t.params.t);
    let h_minus = Float::with_val(prec, &at_t.params.t - &at_t_minus_h.params.t);
    if h_plus <= 0 || crate::precision::rel_err(&h_minus, &h_plus) > 1e-20 {
        return Err(Error::GridMismatch("t values are not t-h, t, t+h with h > 0".into()));
    }
    let diff = Float::with_val(prec, at_t_plus_h.mu(k)? - at_t_minus_h.mu(k)?);
    let derivative = diff / (h_plus * 2u32);
    Ok((derivative + at_t.mu(k - 1)?).abs())
}
