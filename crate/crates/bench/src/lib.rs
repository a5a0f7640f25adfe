//! Shared fixtures for the criterion benches.

use evqc_core::engine::b_matrix;
use evqc_core::funcspace::sample_balanced;
use evqc_core::spinops::total_spin;
use evqc_core::states::pulsed_thermal;
use evqc_core::{Axis, BoolFunc, DensityMatrix, Operator, SpinSystem};

/// Pulsed thermal state of the demo system, `F_x`, and a balanced function.
pub struct Fixture {
    pub sys: SpinSystem,
    pub rho: DensityMatrix,
    pub m: Operator,
    pub b: Operator,
    pub f: BoolFunc,
}

impl Fixture {
    pub fn new(n: usize) -> Self {
        let sys = SpinSystem::demo(n).expect("demo system");
        let rho = pulsed_thermal(&sys).expect("pulsed state");
        let m = total_spin(n, Axis::X).expect("F_x");
        let b = b_matrix(&rho, &m).expect("B matrix");
        let f = sample_balanced(n, 7).expect("balanced function");
        Fixture { sys, rho, m, b, f }
    }
}
