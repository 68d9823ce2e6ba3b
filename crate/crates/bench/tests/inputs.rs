use backaction_core::optics::{build_module_b, compile, BetaConvention};
use backaction_core::schemes::{lambda_max, Hamiltonian};
use backaction_core::UnitaryOperator;

#[test]
fn benchmark_inputs_are_valid() {
    let h = Hamiltonian::degenerate(2);
    let lam = lambda_max(&UnitaryOperator::rotation_family(0.4), &h, &h).unwrap();
    assert!((lam - 0.4_f64.tan()).abs() < 1e-6);
    let povm = compile(&build_module_b(21.0, BetaConvention::Table)).unwrap();
    assert!(povm.completeness_residual() <= 1e-9);
}
