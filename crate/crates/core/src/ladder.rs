//! Ladder-operator coefficients `A_n(z) = 2 + 2α_n/z + R_n/z²`,
//! `B_n(z) = (2β_n - n)/z + r_n/z²` and the compatibility conditions they obey.
//!
//! The auxiliary quantities
//!
//! ```text
//! R_n = t/h_n     ∫ y⁻¹ P_n² w dy
//! r_n = t/h_{n-1} ∫ y⁻¹ P_n P_{n-1} w dy
//! ```
//!
//! are available along two independent routes: direct quadrature, and
//! closed forms in `α, β` obtained by eliminating them from the
//! compatibility conditions. Production values use the closed forms; the
//! quadrature route is the oracle.

use rug::Float;

use crate::error::{Error, Result};
use crate::precision::{ten_pow, Real};
use crate::recurrence::{ProductIntegrand, RecurrenceTable};
use crate::residual::{normalized, ResidualEntry};
use crate::weight::{potential_derivative, Parameters};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderSource {
    Integral,
    Identity,
}

impl LadderSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LadderSource::Integral => "integral",
            LadderSource::Identity => "identity",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LadderTable {
    pub params: Parameters,
    /// Largest `n` with `R_n, r_n` stored.
    pub n_top: usize,
    /// `R_0 ..= R_top`
    pub big_r: Vec<Real>,
    /// `r_0 ..= r_top`, with `r_0 = 0`.
    pub small_r: Vec<Real>,
    /// `sum_r[n] = Σ_{j<n} R_j`
    pub sum_r: Vec<Real>,
    /// `sum_alpha[n] = Σ_{j<n} α_j`
    pub sum_alpha: Vec<Real>,
    pub source: LadderSource,
    /// Indices where the closed form for `r_n` was unusable and quadrature
    /// supplied the value instead.
    pub fallbacks: Vec<usize>,
}

/// `A_n(z)` and `B_n(z)` at one point.
#[derive(Clone, Debug)]
pub struct RationalLadderValue {
    pub z: Real,
    pub a: Real,
    pub b: Real,
}

fn prefix_sums(values: &[Real], prec: u32) -> Vec<Real> {
    let mut acc = Float::new(prec);
    let mut out = Vec::with_capacity(values.len());
    for v in values {
        out.push(acc.clone());
        acc += v;
    }
    out
}

fn out_of_range(what: &'static str, n: usize, lo: usize, hi: usize) -> Error {
    Error::OutOfRange {
        what,
        index: n as i64,
        lo: lo as i64,
        hi: hi as i64,
    }
}

/// `R_n = 2α_n² + 2β_n + 2β_{n+1} - 2n - 1 - λ`.
pub fn big_r_from_identity(rec: &RecurrenceTable, n: usize) -> Result<Real> {
    if n + 1 > rec.n_max {
        return Err(out_of_range("R_n identity", n, 0, rec.n_max.saturating_sub(1)));
    }
    let prec = rec.prec();
    let (alpha, beta) = (&rec.alpha, &rec.beta);
    let mut r = Float::with_val(prec, alpha[n].square_ref()) * 2u32;
    r += Float::with_val(prec, &beta[n] + &beta[n + 1]) * 2u32;
    r -= 2 * n as u64 + 1;
    r -= &rec.params.lambda;
    Ok(r)
}

/// `2n + λ - 4β_n`, the denominator of the closed form for `r_n`.
pub fn r_denominator(rec: &RecurrenceTable, n: usize) -> Real {
    let prec = rec.prec();
    let mut d = Float::with_val(prec, &rec.params.lambda + 2 * n as u64);
    d -= Float::with_val(prec, &rec.beta[n] * 4u32);
    d
}

/// Numerator of the closed form for `r_n`:
/// `nt - 2tβ_n - 2α_nβ_n R_{n-1} - 2α_{n-1}β_n R_n`, with `R` written in `α, β`.
pub(crate) fn r_numerator(rec: &RecurrenceTable, n: usize) -> Result<Real> {
    let prec = rec.prec();
    let (alpha, beta, t) = (&rec.alpha, &rec.beta, &rec.params.t);
    let r_prev = big_r_from_identity(rec, n - 1)?;
    let r_here = big_r_from_identity(rec, n)?;
    let mut num = Float::with_val(prec, t * n as u64);
    num -= Float::with_val(prec, t * &beta[n]) * 2u32;
    num -= Float::with_val(prec, &alpha[n] * &beta[n]) * r_prev * 2u32;
    num -= Float::with_val(prec, &alpha[n - 1] * &beta[n]) * r_here * 2u32;
    Ok(num)
}

/// Closed form for `r_n`, `1 ≤ n ≤ N - 1`. Fails with
/// [`Error::DenominatorGuard`] when `|2n + λ - 4β_n| ≤ 10^(-target/2)`.
pub fn small_r_from_identity(rec: &RecurrenceTable, n: usize) -> Result<Real> {
    if n == 0 || n + 1 > rec.n_max {
        return Err(out_of_range("r_n identity", n, 1, rec.n_max.saturating_sub(1)));
    }
    let denom = r_denominator(rec, n);
    let guard = ten_pow(rec.prec(), -i64::from(rec.params.policy.target_digits / 2));
    if Float::with_val(rec.prec(), denom.abs_ref()) <= guard {
        return Err(Error::DenominatorGuard { n });
    }
    Ok(r_numerator(rec, n)? / denom)
}

fn assemble(
    rec: &RecurrenceTable,
    big_r: Vec<Real>,
    small_r: Vec<Real>,
    source: LadderSource,
    fallbacks: Vec<usize>,
) -> LadderTable {
    let prec = rec.prec();
    let n_top = big_r.len() - 1;
    let mut sum_r = prefix_sums(&big_r, prec);
    sum_r.truncate(n_top + 1);
    let sum_alpha = prefix_sums(&rec.alpha[..=n_top], prec);
    LadderTable {
        params: rec.params.clone(),
        n_top,
        big_r,
        small_r,
        sum_r,
        sum_alpha,
        source,
        fallbacks,
    }
}

/// `R_n, r_n` for `n ≤ n_top` by quadrature of their defining integrals.
pub fn ladder_from_integrals(rec: &RecurrenceTable, n_top: usize) -> Result<LadderTable> {
    if n_top > rec.n_max {
        return Err(out_of_range("ladder degree", n_top, 0, rec.n_max));
    }
    let values = integral_ladder_values(rec, &(0..=n_top).collect::<Vec<_>>())?;
    let (big_r, small_r) = values.into_iter().unzip();
    Ok(assemble(rec, big_r, small_r, LadderSource::Integral, Vec::new()))
}

/// `(R_n, r_n)` by quadrature for each requested `n` (`r_0 = 0`).
pub fn integral_ladder_values(rec: &RecurrenceTable, ns: &[usize]) -> Result<Vec<(Real, Real)>> {
    let mut pairs = Vec::new();
    for &n in ns {
        pairs.push((n, n));
        if n > 0 {
            pairs.push((n, n - 1));
        }
    }
    let integrand = ProductIntegrand {
        rec,
        pairs,
        inverse_power: 1,
    };
    let res = rec.params.quadrature().integrate(&integrand)?;
    let prec = rec.prec();
    let t = &rec.params.t;
    let mut values = res.values.into_iter();
    Ok(ns
        .iter()
        .map(|&n| {
            let big = values.next().expect("one value per pair") * t / &rec.h[n];
            let small = if n > 0 {
                values.next().expect("one value per pair") * t / &rec.h[n - 1]
            } else {
                Float::new(prec)
            };
            (big, small)
        })
        .collect())
}

/// `R_n, r_n` for `n ≤ N - 1` from the closed forms, falling back to
/// quadrature wherever the `r_n` denominator is too close to zero.
pub fn ladder_from_identities(rec: &RecurrenceTable) -> Result<LadderTable> {
    if rec.n_max < 2 {
        return Err(out_of_range("recurrence size", rec.n_max, 2, usize::MAX));
    }
    let n_top = rec.n_max - 1;
    let prec = rec.prec();
    let big_r = (0..=n_top)
        .map(|n| big_r_from_identity(rec, n))
        .collect::<Result<Vec<_>>>()?;
    let mut small_r = vec![Float::new(prec)];
    let mut fallbacks = Vec::new();
    for n in 1..=n_top {
        match small_r_from_identity(rec, n) {
            Ok(r) => small_r.push(r),
            Err(Error::DenominatorGuard { n }) => {
                log::warn!("2n + lambda - 4 beta_n vanishes at n = {n}; using quadrature for r_n");
                fallbacks.push(n);
                let (_, r) = integral_ladder_values(rec, &[n])?.pop().expect("one value");
                small_r.push(r);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(assemble(rec, big_r, small_r, LadderSource::Identity, fallbacks))
}

impl LadderTable {
    fn check(&self, n: usize, lo: usize, hi: usize) -> Result<()> {
        if n < lo || n > hi {
            return Err(out_of_range("ladder index", n, lo, hi));
        }
        Ok(())
    }

    /// `A_n(z)`, `B_n(z)` from the stored coefficients.
    pub fn values_at(&self, rec: &RecurrenceTable, n: usize, z: &Real) -> Result<RationalLadderValue> {
        self.check(n, 0, self.n_top)?;
        Ok(RationalLadderValue {
            z: z.clone(),
            a: a_at(rec, self, n, z),
            b: b_at(rec, self, n, z),
        })
    }
}

fn a_at(rec: &RecurrenceTable, ladder: &LadderTable, n: usize, z: &Float) -> Float {
    let prec = rec.prec();
    let mut a = Float::with_val(prec, 2);
    a += Float::with_val(prec, &rec.alpha[n] * 2u32) / z;
    a += Float::with_val(prec, &ladder.big_r[n] / Float::with_val(prec, z.square_ref()));
    a
}

fn b_at(rec: &RecurrenceTable, ladder: &LadderTable, n: usize, z: &Float) -> Float {
    let prec = rec.prec();
    let mut b = Float::with_val(prec, &rec.beta[n] * 2u32);
    b -= n as u64;
    b /= z;
    b += Float::with_val(prec, &ladder.small_r[n] / Float::with_val(prec, z.square_ref()));
    b
}

fn tag(name: &str, ladder: &LadderTable) -> String {
    match ladder.source {
        LadderSource::Identity => name.to_string(),
        LadderSource::Integral => format!("{name}[integral]"),
    }
}

/// Normalized residuals of the six scalar identities obtained from the
/// `1/z` and `1/z²` coefficients of the compatibility conditions, at
/// `1 ≤ n ≤ n_top - 1`.
pub fn coefficient_identity_residuals(
    rec: &RecurrenceTable,
    ladder: &LadderTable,
    n: usize,
) -> Result<Vec<ResidualEntry>> {
    ladder.check(n, 1, ladder.n_top.saturating_sub(1))?;
    let prec = rec.prec();
    let (alpha, beta) = (&rec.alpha, &rec.beta);
    let (lambda, t) = (&rec.params.lambda, &rec.params.t);
    let (big_r, small_r) = (&ladder.big_r, &ladder.small_r);
    let nn = n as u64;
    let mul = |a: &Float, b: &Float| Float::with_val(prec, a * b);
    let neg = |x: Float| -x;
    let tol = rec.params.policy.exact_tolerance();
    let entry = |name: &str, terms: Vec<Float>| ResidualEntry::new(tag(name, ladder), n, t, normalized(&terms), &tol);

    let m1 = vec![
        small_r[n + 1].clone(),
        small_r[n].clone(),
        neg(t.clone()),
        mul(&alpha[n], &big_r[n]),
    ];
    let m2 = vec![
        mul(&beta[n + 1], &Float::with_val(prec, 2)),
        mul(&beta[n], &Float::with_val(prec, 2)),
        neg(Float::with_val(prec, lambda + (2 * nn + 1))),
        neg(big_r[n].clone()),
        Float::with_val(prec, alpha[n].square_ref()) * 2u32,
    ];
    let s1 = vec![
        Float::with_val(prec, small_r[n].square_ref()),
        neg(mul(t, &small_r[n])),
        neg(mul(&beta[n], &big_r[n]) * &big_r[n - 1]),
    ];
    let s2 = vec![
        mul(&beta[n], &small_r[n]) * 4u32,
        neg(Float::with_val(prec, lambda + 2 * nn) * &small_r[n]),
        Float::with_val(prec, t * nn),
        neg(mul(&beta[n], t) * 2u32),
        neg(mul(&beta[n], &alpha[n]) * &big_r[n - 1] * 2u32),
        neg(mul(&beta[n], &alpha[n - 1]) * &big_r[n] * 2u32),
    ];
    let s3 = vec![
        Float::with_val(prec, beta[n].square_ref()) * 4u32,
        neg(Float::with_val(prec, lambda + 2 * nn) * &beta[n] * 2u32),
        Float::with_val(prec, lambda + nn) * nn,
        ladder.sum_r[n].clone(),
        neg(mul(&beta[n], &big_r[n]) * 2u32),
        neg(mul(&beta[n], &big_r[n - 1]) * 2u32),
        neg(mul(&beta[n], &alpha[n]) * &alpha[n - 1] * 4u32),
    ];
    let s4 = vec![
        small_r[n].clone(),
        ladder.sum_alpha[n].clone(),
        neg(mul(&beta[n], &alpha[n]) * 2u32),
        neg(mul(&beta[n], &alpha[n - 1]) * 2u32),
    ];
    Ok(vec![
        entry("m1", m1),
        entry("m2", m2),
        entry("s1", s1),
        entry("s2", s2),
        entry("s3", s3),
        entry("s4", s4),
    ])
}

/// Default sample points for the pointwise compatibility checks.
pub fn default_z_samples(prec: u32) -> Vec<Real> {
    [0.5, 1.0, 2.0, 5.0].iter().map(|&z| Float::with_val(prec, z)).collect()
}

/// Both sides of (S₁), (S₂), (S₂′) evaluated at each `z`, as normalized residuals.
pub fn compat_pointwise_residuals(
    rec: &RecurrenceTable,
    ladder: &LadderTable,
    n: usize,
    z_samples: &[Real],
) -> Result<Vec<ResidualEntry>> {
    ladder.check(n, 1, ladder.n_top.saturating_sub(1))?;
    let prec = rec.prec();
    let (lambda, t) = (&rec.params.lambda, &rec.params.t);
    let tol = rec.params.policy.exact_tolerance();
    let mut out = Vec::with_capacity(3 * z_samples.len());
    for z in z_samples {
        if *z <= 0 {
            return Err(Error::InvalidParameter(format!("z samples must be positive, got {z}")));
        }
        let a = |k: usize| a_at(rec, ladder, k, z);
        let b = |k: usize| b_at(rec, ladder, k, z);
        let vp = potential_derivative(z, lambda, t);
        let z_shift = Float::with_val(prec, z - &rec.alpha[n]);
        let label = |name: &str| format!("{}@z={}", tag(name, ladder), z.to_f64());

        let s1 = vec![b(n + 1), b(n), -(z_shift.clone() * a(n)), vp.clone()];
        let s2 = vec![
            Float::with_val(prec, 1),
            z_shift.clone() * b(n + 1),
            -(z_shift.clone() * b(n)),
            -(Float::with_val(prec, &rec.beta[n + 1]) * a(n + 1)),
            Float::with_val(prec, &rec.beta[n]) * a(n - 1),
        ];
        // Σ_{j<n} A_j(z) = 2n + 2 Σα_j / z + Σ R_j / z²
        let sum_a = {
            let mut s = Float::with_val(prec, 2 * n as u64);
            s += Float::with_val(prec, &ladder.sum_alpha[n] * 2u32) / z;
            s += Float::with_val(prec, &ladder.sum_r[n] / Float::with_val(prec, z.square_ref()));
            s
        };
        let bn = b(n);
        let s2p = vec![
            Float::with_val(prec, bn.square_ref()),
            vp * &bn,
            sum_a,
            -(Float::with_val(prec, &rec.beta[n]) * a(n) * a(n - 1)),
        ];
        out.push(ResidualEntry::new(label("S1"), n, t, normalized(&s1), &tol));
        out.push(ResidualEntry::new(label("S2"), n, t, normalized(&s2), &tol));
        out.push(ResidualEntry::new(label("S2'"), n, t, normalized(&s2p), &tol));
    }
    Ok(out)
}

/// `|X_integral - X_identity| / |X_identity|` for `R_n` and `r_n` at every
/// `n` stored in both tables.
pub fn cross_path_residuals(
    identity: &LadderTable,
    integral: &LadderTable,
) -> Vec<ResidualEntry> {
    let prec = identity.params.prec();
    let tol = identity.params.policy.exact_tolerance();
    let t = &identity.params.t;
    let top = identity.n_top.min(integral.n_top);
    let mut out = Vec::new();
    for n in 0..=top {
        let rel = |a: &Float, b: &Float| {
            let d = Float::with_val(prec, a - b).abs();
            if b.is_zero() {
                d
            } else {
                d / Float::with_val(prec, b.abs_ref())
            }
        };
        out.push(ResidualEntry::new(
            "R_cross",
            n,
            t,
            crate::residual::scale_free(rel(&integral.big_r[n], &identity.big_r[n])),
            &tol,
        ));
        if n > 0 {
            out.push(ResidualEntry::new(
                "r_cross",
                n,
                t,
                crate::residual::scale_free(rel(&integral.small_r[n], &identity.small_r[n])),
                &tol,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::{rel_err, NumericPolicy};
    use crate::recurrence::recurrence_from_moments;
    use crate::weight::compute_moments;

    fn setup(lambda: &str, t: &str, n: usize) -> (crate::weight::MomentTable, RecurrenceTable) {
        let policy = NumericPolicy::for_degree(n, 30).unwrap();
        let params = Parameters::parse(lambda, t, policy).unwrap();
        let m = compute_moments(&params, -2, 2 * n as i64 + 2).unwrap();
        let r = recurrence_from_moments(&m, n).unwrap();
        (m, r)
    }

    fn tol(prec: u32) -> Float {
        ten_pow(prec, -25)
    }

    #[test]
    fn integral_path_low_order_closed_forms() {
        let (m, rec) = setup("1", "1", 6);
        let prec = rec.prec();
        let lad = ladder_from_integrals(&rec, 3).unwrap();
        let (mu0, mu_1) = (m.mu(0).unwrap(), m.mu(-1).unwrap());
        let r0 = Float::with_val(prec, mu_1 / mu0) * &rec.params.t;
        assert!(rel_err(&lad.big_r[0], &r0) < tol(prec));
        // r_1 = t (μ_0 - α_0 μ_{-1}) / μ_0
        let mut r1 = Float::with_val(prec, mu0 - Float::with_val(prec, &rec.alpha[0] * mu_1));
        r1 = r1 / mu0 * &rec.params.t;
        assert!(rel_err(&lad.small_r[1], &r1) < tol(prec));
        assert!(lad.small_r[0].is_zero());
        assert!(lad.big_r.iter().all(|r| *r > 0));
    }

    #[test]
    fn identity_path_matches_integrals() {
        for (lambda, t, n_top) in [("1", "1", 6), ("0", "2", 4), ("2.5", "0.5", 11)] {
            let (_, rec) = setup(lambda, t, n_top + 1);
            let id = ladder_from_identities(&rec).unwrap();
            let int = ladder_from_integrals(&rec, n_top).unwrap();
            assert_eq!(id.n_top, n_top);
            for e in cross_path_residuals(&id, &int) {
                assert!(e.pass, "{} n={} residual={}", e.identity, e.n, e.residual);
            }
        }
    }

    #[test]
    fn identity_r0_uses_zero_beta0() {
        let (_, rec) = setup("1", "1", 4);
        let prec = rec.prec();
        let mut expected = Float::with_val(prec, rec.alpha[0].square_ref()) * 2u32;
        expected += Float::with_val(prec, &rec.beta[1] * 2u32);
        expected -= 1u32;
        expected -= &rec.params.lambda;
        assert_eq!(big_r_from_identity(&rec, 0).unwrap(), expected);
        assert!(big_r_from_identity(&rec, 4).is_err());
        assert!(small_r_from_identity(&rec, 0).is_err());
    }

    #[test]
    fn coefficient_identities_hold() {
        let (_, rec) = setup("1", "1", 8);
        let lad = ladder_from_identities(&rec).unwrap();
        for n in 1..lad.n_top {
            for e in coefficient_identity_residuals(&rec, &lad, n).unwrap() {
                assert!(e.pass, "{} n={n}: {}", e.identity, e.residual);
            }
        }
        assert!(coefficient_identity_residuals(&rec, &lad, 0).is_err());
        assert!(coefficient_identity_residuals(&rec, &lad, lad.n_top).is_err());
        // s4 at n = 1 reads r_1 + α_0 = 2β_1(α_1 + α_0)
        let s4 = &coefficient_identity_residuals(&rec, &lad, 1).unwrap()[5];
        assert_eq!(s4.identity, "s4");
        assert!(s4.pass);
    }

    #[test]
    fn pointwise_compatibility_holds() {
        for (lambda, t, n) in [("0", "1", 2), ("1", "0.5", 4)] {
            let (_, rec) = setup(lambda, t, 8);
            let lad = ladder_from_identities(&rec).unwrap();
            let zs = default_z_samples(rec.prec());
            let entries = compat_pointwise_residuals(&rec, &lad, n, &zs).unwrap();
            assert_eq!(entries.len(), 12);
            assert!(entries.iter().all(|e| e.pass));
        }
    }

    #[test]
    fn ladder_values_reproduce_coefficients() {
        // Solving A_n at two points for the 1/z and 1/z² coefficients recovers 2α_n and R_n.
        let (_, rec) = setup("2.5", "2", 6);
        let lad = ladder_from_identities(&rec).unwrap();
        let prec = rec.prec();
        let (z1, z2) = (Float::with_val(prec, 1), Float::with_val(prec, 2));
        let v1 = lad.values_at(&rec, 3, &z1).unwrap();
        let v2 = lad.values_at(&rec, 3, &z2).unwrap();
        // c1 + c2 = A(1) - 2, c1/2 + c2/4 = A(2) - 2
        let e1 = Float::with_val(prec, &v1.a - 2u32);
        let e2 = Float::with_val(prec, &v2.a - 2u32);
        let c2 = (Float::with_val(prec, &e2 * 4u32) - Float::with_val(prec, &e1 * 2u32)) * -1i32;
        let c1 = Float::with_val(prec, &e1 - &c2);
        assert!(rel_err(&c1, &Float::with_val(prec, &rec.alpha[3] * 2u32)) < tol(prec));
        assert!(rel_err(&c2, &lad.big_r[3]) < tol(prec));
        // same for B: (2β_n - n) and r_n
        let f1 = v1.b.clone();
        let f2 = v2.b.clone();
        let d2 = (Float::with_val(prec, &f2 * 4u32) - Float::with_val(prec, &f1 * 2u32)) * -1i32;
        let d1 = Float::with_val(prec, &f1 - &d2);
        let expected = Float::with_val(prec, &rec.beta[3] * 2u32) - 3u32;
        assert!(rel_err(&d1, &expected) < tol(prec));
        assert!(rel_err(&d2, &lad.small_r[3]) < tol(prec));
    }

    #[test]
    fn denominator_stays_positive_for_large_n() {
        let (_, rec) = setup("1", "1", 40);
        for n in 20..40 {
            assert!(r_denominator(&rec, n) > 0);
        }
    }

    #[test]
    fn sums_match_subleading_coefficient() {
        let (_, rec) = setup("0", "0.5", 10);
        let lad = ladder_from_identities(&rec).unwrap();
        for n in 0..=lad.n_top {
            let s = Float::with_val(rec.prec(), &lad.sum_alpha[n] + &rec.p[n]);
            assert!(s.abs() < tol(rec.prec()));
        }
    }
}
