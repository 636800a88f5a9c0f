mod support;

use rug::Float;

use ladder_core::ladder::coefficient_identity_residuals;
use ladder_core::pipeline::{audit, policy_for, run};
use ladder_core::precision::NumericPolicy;
use ladder_core::verify::residual_theorem1;
use ladder_core::weight::Parameters;

fn worst_residuals(bits: u32) -> (Float, Float) {
    let policy = NumericPolicy::new(bits, 20).unwrap();
    let run = run(&Parameters::parse("1", "1", policy).unwrap(), 20).unwrap();
    let mut theorem = Float::new(bits);
    let mut coeff = Float::new(bits);
    for n in 1..20 {
        let (d1, d2) = residual_theorem1(&run.recurrence, n).unwrap();
        theorem = theorem.max(&d1).max(&d2);
        for e in coefficient_identity_residuals(&run.recurrence, &run.ladder, n).unwrap() {
            coeff = coeff.max(&e.residual);
        }
    }
    (theorem, coeff)
}

#[test]
fn halving_precision_raises_identity_residuals() {
    let full = policy_for(20, 20).unwrap().precision_bits;
    let (theorem_full, coeff_full) = worst_residuals(full);
    let (theorem_half, coeff_half) = worst_residuals(full / 2);
    assert!(theorem_half > theorem_full, "{theorem_half} vs {theorem_full}");
    assert!(coeff_half > coeff_full, "{coeff_half} vs {coeff_full}");
}

#[test]
fn doubled_precision_audit_agrees_to_target_digits() {
    let params = Parameters::parse("0", "2", policy_for(30, 30).unwrap()).unwrap();
    let entries = audit(&run(&params, 30).unwrap()).unwrap();
    assert_eq!(entries.len(), 6 * 31);
    let worst = entries.iter().map(|e| e.residual.to_f64()).fold(0.0, f64::max);
    assert!(entries.iter().all(|e| e.pass), "worst {worst:e}");
}
