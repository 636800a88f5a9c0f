//! Double-exponential quadrature on `(0, ∞)` for vector-valued integrands.
//!
//! The half-line is split at a point `x0`. On `(0, x0]` the tanh-sinh map
//! `x = x0 / (1 + exp(-π sinh s))` clusters nodes at both ends; on
//! `[x0, ∞)` the exp-sinh map `x = x0 + exp(π/2 · sinh s)` handles the
//! Gaussian tail. Each refinement level halves the step and only evaluates
//! the new (odd) nodes, so successive estimates come almost for free.
//!
//! Node evaluation is fanned out over rayon in fixed-size chunks whose
//! partial sums are reduced in index order, which keeps results bitwise
//! reproducible regardless of thread count.

use rayon::prelude::*;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Assign, Float};

use crate::error::{Error, Result};

/// Step of the coarsest level, in the transformed variable.
const BASE_STEP_LOG2: i32 = 1;
/// Step used when scanning outward for the truncation bounds.
const SCAN_STEP_LOG2: i32 = 4;
const SCAN_LIMIT: f64 = 12.0;
const SCAN_QUIET_NODES: usize = 4;
const CHUNK: usize = 16;
/// Extra bits carried while summing node contributions.
pub const GUARD_BITS: u32 = 32;
pub const DEFAULT_MAX_LEVEL: u32 = 14;
const MIN_CONVERGED_LEVEL: u32 = 2;

/// A vector of functions integrated against the same nodes.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;

    /// Writes `jac * f_i(x)` into `out[i]` for every component.
    fn terms(&self, x: &Float, jac: &Float, out: &mut [Float]);
}

#[derive(Clone, Debug)]
pub struct QuadResult {
    pub values: Vec<Float>,
    /// Integrals of `|f_i|`, used as the scale of each component.
    pub abs_values: Vec<Float>,
    pub level: u32,
    /// Smallest number of digits on which the last two levels agree.
    pub agreement_digits: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

struct HalfLine {
    side: Side,
    x0: Float,
    half_pi: Float,
    prec: u32,
}

impl HalfLine {
    fn node(&self, s: &Float) -> (Float, Float) {
        let prec = self.prec;
        let (sinh, cosh) = Float::with_val(prec, s).sinh_cosh(Float::new(prec));
        let u = Float::with_val(prec, &self.half_pi * &sinh);
        let du = Float::with_val(prec, &self.half_pi * &cosh);
        match self.side {
            Side::Left => {
                // x = x0 / (1 + e^{-2u}),  dx/du = 2 x0 e^{-2u} / (1 + e^{-2u})^2
                let e = Float::with_val(prec, &u * -2i32).exp();
                let denom = Float::with_val(prec, 1 + &e);
                let x = Float::with_val(prec, &self.x0 / &denom);
                let mut jac = Float::with_val(prec, &x * &e);
                jac *= 2;
                jac /= &denom;
                jac *= &du;
                (x, jac)
            }
            Side::Right => {
                let e = u.exp();
                let x = Float::with_val(prec, &self.x0 + &e);
                let jac = e * du;
                (x, jac)
            }
        }
    }
}

/// Adaptive double-exponential rule on `(0, ∞)` split at `x0`.
#[derive(Clone, Debug)]
pub struct DeQuadrature {
    prec: u32,
    x0: Float,
    tol_digits: u32,
    max_level: u32,
}

impl DeQuadrature {
    /// `prec` is the working precision of the results; sums carry
    /// [`GUARD_BITS`] extra bits. Refinement stops once two successive
    /// levels agree to `tol_digits` relative to each component's scale.
    pub fn new(prec: u32, x0: &Float, tol_digits: u32) -> Self {
        DeQuadrature {
            prec,
            x0: Float::with_val(prec + GUARD_BITS, x0),
            tol_digits,
            max_level: DEFAULT_MAX_LEVEL,
        }
    }

    pub fn with_max_level(mut self, max_level: u32) -> Self {
        self.max_level = max_level;
        self
    }

    pub fn tol_digits(&self) -> u32 {
        self.tol_digits
    }

    fn internal_prec(&self) -> u32 {
        self.prec + GUARD_BITS
    }

    fn halves(&self) -> [HalfLine; 2] {
        let prec = self.internal_prec();
        let half_pi: Float = Float::with_val(prec, Constant::Pi) / 2u32;
        [Side::Left, Side::Right].map(|side| HalfLine {
            side,
            x0: self.x0.clone(),
            half_pi: half_pi.clone(),
            prec,
        })
    }

    pub fn integrate<I: Integrand>(&self, f: &I) -> Result<QuadResult> {
        let dim = f.dim();
        let prec = self.internal_prec();
        let halves = self.halves();
        let bounds: Vec<(f64, f64)> = halves.iter().map(|h| self.scan_bounds(h, f)).collect();

        let mut sum = vec![Float::new(prec); dim];
        let mut abs_sum = vec![Float::new(prec); dim];
        let mut previous: Option<Vec<Float>> = None;
        let mut evaluations = 0usize;
        let mut agreement = f64::NEG_INFINITY;

        for level in 0..=self.max_level {
            let step_log2 = BASE_STEP_LOG2 + level as i32;
            let step = 0.5f64.powi(step_log2);
            for (half, &(lo, hi)) in halves.iter().zip(&bounds) {
                let j_lo = (lo / step).floor() as i64;
                let j_hi = (hi / step).ceil() as i64;
                let nodes: Vec<i64> = (j_lo..=j_hi)
                    .filter(|j| level == 0 || j.rem_euclid(2) == 1)
                    .collect();
                evaluations += nodes.len();
                let partials: Vec<(Vec<Float>, Vec<Float>)> = nodes
                    .par_chunks(CHUNK)
                    .map(|chunk| self.chunk_sum(half, f, chunk, step_log2))
                    .collect();
                for (s, a) in partials {
                    for i in 0..dim {
                        sum[i] += &s[i];
                        abs_sum[i] += &a[i];
                    }
                }
            }

            let scale = Float::with_val(prec, 0.5f64).pow(step_log2);
            let estimate: Vec<Float> = sum.iter().map(|s| Float::with_val(prec, s * &scale)).collect();
            if let Some(prev) = &previous {
                agreement = abs_sum
                    .iter()
                    .zip(estimate.iter().zip(prev))
                    .map(|(a, (cur, old))| {
                        let a = Float::with_val(prec, a * &scale);
                        agreement_digits(cur, old, &a)
                    })
                    .fold(f64::INFINITY, f64::min);
                log::trace!("quadrature level {level}: {agreement:.1} digits, {evaluations} nodes");
                if level >= MIN_CONVERGED_LEVEL && agreement >= f64::from(self.tol_digits) {
                    let values = estimate
                        .into_iter()
                        .map(|v| Float::with_val(self.prec, v))
                        .collect();
                    let abs_values = abs_sum
                        .iter()
                        .map(|a| Float::with_val(self.prec, a * &scale))
                        .collect();
                    return Ok(QuadResult {
                        values,
                        abs_values,
                        level,
                        agreement_digits: agreement,
                        evaluations,
                    });
                }
            }
            previous = Some(estimate);
        }
        Err(Error::QuadratureStalled {
            level: self.max_level,
            achieved_digits: agreement,
            wanted_digits: self.tol_digits,
        })
    }

    fn chunk_sum<I: Integrand>(
        &self,
        half: &HalfLine,
        f: &I,
        nodes: &[i64],
        step_log2: i32,
    ) -> (Vec<Float>, Vec<Float>) {
        let prec = self.internal_prec();
        let dim = f.dim();
        let mut sum = vec![Float::new(prec); dim];
        let mut abs = vec![Float::new(prec); dim];
        let mut buf = vec![Float::new(prec); dim];
        let mut s = Float::new(prec);
        for &j in nodes {
            s.assign(j);
            s >>= step_log2;
            let (x, jac) = half.node(&s);
            if jac.is_zero() || !jac.is_finite() {
                continue;
            }
            f.terms(&x, &jac, &mut buf);
            for i in 0..dim {
                sum[i] += &buf[i];
                abs[i] += Float::with_val(prec, buf[i].abs_ref());
            }
        }
        (sum, abs)
    }

    /// Walks outward from `s = 0` in both directions until
    /// [`SCAN_QUIET_NODES`] consecutive nodes contribute less than the
    /// tolerance to every component.
    fn scan_bounds<I: Integrand>(&self, half: &HalfLine, f: &I) -> (f64, f64) {
        let prec = self.internal_prec();
        let dim = f.dim();
        let eps = Float::with_val(prec, 10).pow(-(self.tol_digits as i32 + 10));
        let mut running = vec![Float::new(prec); dim];
        let mut buf = vec![Float::new(prec); dim];
        let step = 0.5f64.powi(SCAN_STEP_LOG2);
        let mut s = Float::new(prec);

        let mut walk = |direction: i64, start: i64| -> f64 {
            let mut quiet = 0usize;
            let mut j = start;
            loop {
                let pos = j as f64 * step;
                if pos.abs() >= SCAN_LIMIT {
                    return pos;
                }
                s.assign(j);
                s >>= SCAN_STEP_LOG2;
                let (x, jac) = half.node(&s);
                let negligible = if jac.is_zero() || !jac.is_finite() {
                    true
                } else {
                    f.terms(&x, &jac, &mut buf);
                    let mut all_small = true;
                    for i in 0..dim {
                        let term = Float::with_val(prec, buf[i].abs_ref());
                        running[i] += &term;
                        if term > Float::with_val(prec, &eps * &running[i]) {
                            all_small = false;
                        }
                    }
                    all_small
                };
                quiet = if negligible { quiet + 1 } else { 0 };
                if quiet >= SCAN_QUIET_NODES {
                    return pos;
                }
                j += direction;
            }
        };
        let hi = walk(1, 0);
        let lo = walk(-1, -1);
        (lo, hi)
    }
}

fn agreement_digits(current: &Float, previous: &Float, scale: &Float) -> f64 {
    let prec = current.prec();
    let diff = Float::with_val(prec, current - previous).abs();
    if diff.is_zero() {
        return f64::INFINITY;
    }
    if scale.is_zero() {
        return f64::NEG_INFINITY;
    }
    let ratio = diff / scale;
    -Float::with_val(64, ratio.log10_ref()).to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫₀^∞ x^k e^{-x²} dx = Γ((k+1)/2)/2 for a few k at once.
    struct HalfGaussian {
        ks: Vec<u32>,
    }

    impl Integrand for HalfGaussian {
        fn dim(&self) -> usize {
            self.ks.len()
        }
        fn terms(&self, x: &Float, jac: &Float, out: &mut [Float]) {
            let prec = x.prec();
            let g = (-Float::with_val(prec, x.square_ref())).exp() * jac;
            for (o, &k) in out.iter_mut().zip(&self.ks) {
                o.assign(x.pow(k));
                *o *= &g;
            }
        }
    }

    #[test]
    fn half_gaussian_moments_to_high_precision() {
        let prec = 400;
        let x0 = Float::with_val(prec, 1);
        let quad = DeQuadrature::new(prec, &x0, 100);
        let f = HalfGaussian { ks: vec![0, 1, 2, 7, 40] };
        let res = quad.integrate(&f).unwrap();
        for (v, &k) in res.values.iter().zip(&f.ks) {
            let exact = Float::with_val(prec, f64::from(k + 1) / 2.0).gamma() / 2;
            let err = Float::with_val(prec, v - &exact).abs() / &exact;
            assert!(err < Float::with_val(prec, 1e-100), "k={k} err={err}");
        }
    }

    /// Signed integrand: ∫₀^∞ (x-1) e^{-x} dx = 0, scale ∫|x-1|e^{-x} = 2/e.
    struct Shifted;

    impl Integrand for Shifted {
        fn dim(&self) -> usize {
            1
        }
        fn terms(&self, x: &Float, jac: &Float, out: &mut [Float]) {
            let prec = x.prec();
            let e = Float::with_val(prec, -x).exp();
            out[0].assign(x - 1u32);
            out[0] *= e;
            out[0] *= jac;
        }
    }

    #[test]
    fn signed_integrand_converges_relative_to_abs_scale() {
        let prec = 200;
        let x0 = Float::with_val(prec, 1);
        let res = DeQuadrature::new(prec, &x0, 40).integrate(&Shifted).unwrap();
        assert!(Float::with_val(prec, res.values[0].abs_ref()) < 1e-40);
        let two_over_e = Float::with_val(prec, -1).exp() * 2u32;
        let err = Float::with_val(prec, &res.abs_values[0] - &two_over_e).abs();
        assert!(err < 1e-30, "{err}");
    }

    #[test]
    fn stalls_are_reported() {
        let prec = 400;
        let x0 = Float::with_val(prec, 1);
        let quad = DeQuadrature::new(prec, &x0, 110).with_max_level(1);
        let err = quad.integrate(&HalfGaussian { ks: vec![3] }).unwrap_err();
        assert!(matches!(err, Error::QuadratureStalled { .. }));
    }
}
