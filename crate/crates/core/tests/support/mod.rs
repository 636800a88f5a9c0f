//! Oracles that share no code path with the library's numerics.
#![allow(dead_code)]

use rug::ops::Pow;
use rug::Float;

use ladder_core::pipeline::{policy_for, run, Run};
use ladder_core::weight::Parameters;

/// `μ_k = ∫_ℝ exp((k + λ + 1)u - e^{2u} - t e^{-u}) du` after `x = e^u`,
/// by the plain trapezoid rule with step `2^-step_log2`. The integrand is
/// analytic in a strip around the real axis and decays doubly
/// exponentially, so the rule converges geometrically in `1/step`.
pub fn trapezoid_moment(lambda: &str, t: &str, k: i64, prec: u32, step_log2: u32) -> Float {
    let lambda = Float::with_val(prec, Float::parse(lambda).unwrap());
    let t = Float::with_val(prec, Float::parse(t).unwrap());
    let power = Float::with_val(prec, &lambda + (k + 1));
    let step = Float::with_val(prec, 2).pow(-(step_log2 as i32));
    let log_integrand = |u: &Float| {
        let e2u = Float::with_val(prec, u * 2u32).exp();
        let emu = Float::with_val(prec, -u).exp();
        Float::with_val(prec, &power * u) - e2u - Float::with_val(prec, &t * &emu)
    };
    // anything below e^-cutoff relative to the peak is dropped
    let cutoff = f64::from(prec) * std::f64::consts::LN_2 + 40.0;
    let mut sum = Float::new(prec);
    let mut peak = f64::NEG_INFINITY;
    for direction in [1i64, -1] {
        let mut j: i64 = if direction == 1 { 0 } else { -1 };
        loop {
            let u = Float::with_val(prec, &step * j);
            let g = log_integrand(&u);
            let gf = g.to_f64();
            peak = peak.max(gf);
            sum += g.exp();
            // past the peak on this side and far enough below it
            if gf < peak - cutoff && (j as f64 * step.to_f64()).abs() > 1.0 {
                break;
            }
            j += direction;
        }
    }
    sum * step
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut a: Vec<Vec<Float>>) -> Float {
    let n = a.len();
    let prec = a[0][0].prec();
    let mut det = Float::with_val(prec, 1);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].clone().abs().partial_cmp(&a[j][col].clone().abs()).unwrap())
            .unwrap();
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        if p.is_zero() {
            return Float::new(prec);
        }
        det *= &p;
        for row in col + 1..n {
            let factor = Float::with_val(prec, &a[row][col] / &p);
            for c in col..n {
                let delta = Float::with_val(prec, &factor * &a[col][c]);
                a[row][c] -= delta;
            }
        }
    }
    det
}

/// `D_n = det[μ_{i+j}]_{i,j<n}`, with `D_0 = 1`.
pub fn hankel_determinant(mu: &dyn Fn(usize) -> Float, n: usize, prec: u32) -> Float {
    if n == 0 {
        return Float::with_val(prec, 1);
    }
    determinant((0..n).map(|i| (0..n).map(|j| mu(i + j)).collect()).collect())
}

/// `D̃_n`: the `n × n` Hankel determinant with column `n - 1` replaced by column `n`.
pub fn shifted_hankel_determinant(mu: &dyn Fn(usize) -> Float, n: usize, prec: u32) -> Float {
    if n == 0 {
        return Float::new(prec);
    }
    let cols: Vec<usize> = (0..n - 1).chain(std::iter::once(n)).collect();
    determinant((0..n).map(|i| cols.iter().map(|&j| mu(i + j)).collect()).collect())
}

pub fn run_at(lambda: &str, t: &str, n_max: usize, digits: u32) -> Run {
    let params = Parameters::parse(lambda, t, policy_for(n_max, digits).unwrap()).unwrap();
    run(&params, n_max).unwrap()
}

/// `|a - b| / |b|` as an `f64`.
pub fn rel(a: &Float, b: &Float) -> f64 {
    let prec = a.prec().max(b.prec());
    (Float::with_val(prec, a - b).abs() / Float::with_val(prec, b.abs_ref())).to_f64()
}
