//! Recurrence coefficients from the Cholesky factor of the Hankel moment matrix.
//!
//! With `M = L Lᵀ`, `M_ij = μ_{i+j}`, the rows of `L⁻¹` are the orthonormal
//! polynomials, so `h_n = L_nn²` and the sub-leading coefficient of the
//! monic `P_n` is `p(n) = -L_{n,n-1} / L_{n-1,n-1}`.

use rug::{Assign, Float};

use crate::error::{Error, Result};
use crate::precision::Real;
use crate::quadrature::Integrand;
use crate::weight::{weight_at, MomentTable, Parameters};

#[derive(Clone, Debug)]
pub struct RecurrenceTable {
    pub params: Parameters,
    pub n_max: usize,
    /// `α_0 ..= α_N`
    pub alpha: Vec<Real>,
    /// `β_0 ..= β_N`, with `β_0 = 0`.
    pub beta: Vec<Real>,
    /// `h_0 ..= h_N`
    pub h: Vec<Real>,
    /// `p(0, t) ..= p(N, t)`
    pub p: Vec<Real>,
}

/// Lower-triangular Cholesky factor of the `(size × size)` Hankel matrix.
fn hankel_cholesky(moments: &MomentTable, size: usize) -> Result<Vec<Vec<Float>>> {
    let prec = moments.precision_bits();
    let mut l: Vec<Vec<Float>> = Vec::with_capacity(size);
    for i in 0..size {
        let mut row = Vec::with_capacity(i + 1);
        for j in 0..=i {
            let mut acc = Float::with_val(prec, moments.mu((i + j) as i64)?);
            let other: &[Float] = if j == i { &row } else { &l[j] };
            for k in 0..j {
                acc -= Float::with_val(prec, &row[k] * &other[k]);
            }
            if i == j {
                if acc <= 0 || !acc.is_finite() {
                    return Err(Error::CholeskyBreakdown {
                        pivot: i,
                        precision_bits: prec,
                    });
                }
                acc.sqrt_mut();
            } else {
                acc /= &l[j][j];
            }
            row.push(acc);
        }
        l.push(row);
    }
    Ok(l)
}

/// Builds `α_n, β_n, h_n, p(n)` for `n ≤ n_max` from moments `μ_0 ..= μ_{2 n_max + 2}`.
pub fn recurrence_from_moments(moments: &MomentTable, n_max: usize) -> Result<RecurrenceTable> {
    let needed = 2 * n_max as i64 + 2;
    if moments.k_min > 0 || moments.k_max < needed {
        return Err(Error::MissingMoment(needed.min(moments.k_max + 1).max(0)));
    }
    let prec = moments.precision_bits();
    let l = hankel_cholesky(moments, n_max + 2)?;

    // p[n] for n = 0 ..= n_max + 1
    let p_ext: Vec<Float> = (0..=n_max + 1)
        .map(|n| {
            if n == 0 {
                Float::new(prec)
            } else {
                -Float::with_val(prec, &l[n][n - 1] / &l[n - 1][n - 1])
            }
        })
        .collect();
    let alpha = (0..=n_max)
        .map(|n| Float::with_val(prec, &p_ext[n] - &p_ext[n + 1]))
        .collect();
    let h = (0..=n_max)
        .map(|n| Float::with_val(prec, l[n][n].square_ref()))
        .collect::<Vec<_>>();
    let beta = (0..=n_max)
        .map(|n| {
            if n == 0 {
                Float::new(prec)
            } else {
                Float::with_val(prec, &l[n][n] / &l[n - 1][n - 1]).square()
            }
        })
        .collect();
    Ok(RecurrenceTable {
        params: moments.params.clone(),
        n_max,
        alpha,
        beta,
        h,
        p: p_ext[..=n_max].to_vec(),
    })
}

impl RecurrenceTable {
    pub fn prec(&self) -> u32 {
        self.params.prec()
    }

    /// Monic `P_n(x)` by the forward three-term recurrence.
    pub fn eval_polynomial(&self, n: usize, x: &Real) -> Result<Real> {
        self.check_degree(n)?;
        let prec = x.prec().max(self.prec());
        Ok(self.poly_values(x, n, prec).pop().expect("n + 1 values"))
    }

    /// `P_0(x) ..= P_n(x)`.
    pub(crate) fn poly_values(&self, x: &Float, n: usize, prec: u32) -> Vec<Float> {
        let mut values = Vec::with_capacity(n + 1);
        values.push(Float::with_val(prec, 1));
        if n == 0 {
            return values;
        }
        values.push(Float::with_val(prec, x - &self.alpha[0]));
        for k in 1..n {
            let mut next = Float::with_val(prec, x - &self.alpha[k]);
            next *= &values[k];
            next -= Float::with_val(prec, &self.beta[k] * &values[k - 1]);
            values.push(next);
        }
        values
    }

    fn check_degree(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::OutOfRange {
                what: "polynomial degree",
                index: n as i64,
                lo: 0,
                hi: self.n_max as i64,
            });
        }
        Ok(())
    }

    /// `|∫ P_m P_n w - h_n δ_mn| / h_max(m,n)`, by quadrature.
    pub fn orthogonality_residual(&self, m: usize, n: usize) -> Result<Real> {
        self.check_degree(m)?;
        self.check_degree(n)?;
        let integrand = ProductIntegrand {
            rec: self,
            pairs: vec![(m, n)],
            inverse_power: 0,
        };
        let res = self.params.quadrature().integrate(&integrand)?;
        let prec = self.prec();
        let mut value = Float::with_val(prec, &res.values[0]);
        if m == n {
            value -= &self.h[n];
        }
        Ok(value.abs() / &self.h[m.max(n)])
    }

    /// Sets `β_n` to a different value; used to check that the verifiers
    /// detect a corrupted table.
    pub fn inject_beta_fault(&mut self, n: usize, relative: f64) -> Result<()> {
        if n == 0 || n > self.n_max {
            return Err(Error::OutOfRange {
                what: "beta index",
                index: n as i64,
                lo: 1,
                hi: self.n_max as i64,
            });
        }
        let factor = Float::with_val(self.prec(), 1.0 + relative);
        self.beta[n] *= factor;
        Ok(())
    }
}

/// `∫ P_a P_b w / y^k` for a list of index pairs.
pub(crate) struct ProductIntegrand<'a> {
    pub rec: &'a RecurrenceTable,
    pub pairs: Vec<(usize, usize)>,
    pub inverse_power: u32,
}

impl Integrand for ProductIntegrand<'_> {
    fn dim(&self) -> usize {
        self.pairs.len()
    }

    fn terms(&self, x: &Float, jac: &Float, out: &mut [Float]) {
        let prec = x.prec();
        let top = self.pairs.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0);
        let values = self.rec.poly_values(x, top, prec);
        let lambda = Float::with_val(prec, &self.rec.params.lambda);
        let t = Float::with_val(prec, &self.rec.params.t);
        let mut c = weight_at(x, &lambda, &t);
        c *= jac;
        for _ in 0..self.inverse_power {
            c /= x;
        }
        for (o, &(a, b)) in out.iter_mut().zip(&self.pairs) {
            o.assign(&values[a] * &values[b]);
            *o *= &c;
        }
    }
}
