//! Normalized residuals and the report that collects them.

use rug::Float;
use serde_json::{json, Value};

use crate::precision::{format_real, Real};

/// One identity checked at one index.
#[derive(Clone, Debug)]
pub struct ResidualEntry {
    pub identity: String,
    pub n: usize,
    pub t: Real,
    /// `|Σ terms| / Σ |terms|`
    pub residual: Real,
    pub scale: Real,
    pub tolerance: Real,
    pub pass: bool,
}

impl ResidualEntry {
    pub fn new(identity: impl Into<String>, n: usize, t: &Real, normalized: Normalized, tolerance: &Real) -> Self {
        let pass = normalized.residual <= *tolerance;
        ResidualEntry {
            identity: identity.into(),
            n,
            t: t.clone(),
            residual: normalized.residual,
            scale: normalized.scale,
            tolerance: tolerance.clone(),
            pass,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub residual: Real,
    pub scale: Real,
}

/// Residual of `Σ terms = 0` divided by the sum of absolute values of the terms.
pub fn normalized(terms: &[Float]) -> Normalized {
    let prec = terms.iter().map(Float::prec).max().unwrap_or(64);
    let mut sum = Float::new(prec);
    let mut scale = Float::new(prec);
    for term in terms {
        sum += term;
        scale += Float::with_val(prec, term.abs_ref());
    }
    let residual = if scale.is_zero() {
        Float::new(prec)
    } else {
        sum.abs() / &scale
    };
    Normalized { residual, scale }
}

/// A bare value compared against zero (already scale-free).
pub fn scale_free(value: Real) -> Normalized {
    let prec = value.prec();
    Normalized {
        residual: value.abs(),
        scale: Float::with_val(prec, 1),
    }
}

#[derive(Clone, Debug, Default)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
    pub lambda: String,
    pub target_digits: u32,
    pub precision_bits: u32,
}

#[derive(Clone, Debug)]
pub struct IdentitySummary {
    pub identity: String,
    pub count: usize,
    pub failures: usize,
    pub max_residual: Real,
    pub worst_n: usize,
}

impl ResidualReport {
    pub fn extend(&mut self, entries: impl IntoIterator<Item = ResidualEntry>) {
        self.entries.extend(entries);
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResidualEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn for_identity<'a>(&'a self, identity: &'a str) -> impl Iterator<Item = &'a ResidualEntry> + 'a {
        self.entries.iter().filter(move |e| e.identity == identity)
    }

    /// Maximum residual per identity, in first-appearance order.
    pub fn summary(&self) -> Vec<IdentitySummary> {
        let mut out: Vec<IdentitySummary> = Vec::new();
        for e in &self.entries {
            match out.iter_mut().find(|s| s.identity == e.identity) {
                Some(s) => {
                    s.count += 1;
                    s.failures += usize::from(!e.pass);
                    if e.residual > s.max_residual {
                        s.max_residual = e.residual.clone();
                        s.worst_n = e.n;
                    }
                }
                None => out.push(IdentitySummary {
                    identity: e.identity.clone(),
                    count: 1,
                    failures: usize::from(!e.pass),
                    max_residual: e.residual.clone(),
                    worst_n: e.n,
                }),
            }
        }
        out
    }

    /// `[{identity, n, residual, tolerance, pass}, ...]`
    pub fn to_json(&self) -> Value {
        let digits = self.print_digits();
        Value::Array(
            self.entries
                .iter()
                .map(|e| {
                    json!({
                        "identity": e.identity,
                        "n": e.n,
                        "residual": format_real(&e.residual, digits),
                        "tolerance": format_real(&e.tolerance, digits),
                        "pass": e.pass,
                    })
                })
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let digits = self.print_digits();
        let mut out = String::new();
        out.push_str(&format!("# lambda={}\n", self.lambda));
        out.push_str(&format!("# precision_bits={}\n", self.precision_bits));
        out.push_str(&format!("# target_digits={}\n", self.target_digits));
        out.push_str("identity,n,t,residual,tolerance,pass\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.identity,
                e.n,
                format_real(&e.t, digits),
                format_real(&e.residual, digits),
                format_real(&e.tolerance, digits),
                e.pass
            ));
        }
        out
    }

    fn print_digits(&self) -> u32 {
        self.target_digits.max(1)
    }
}
