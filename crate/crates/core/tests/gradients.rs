//! Finite-difference checks of every differentiable kernel.

use std::time::Instant;

use organ_core::nn::gradcheck::{check_kernel, Kernel};

const INSTANCES: usize = 100;
const TOLERANCE: f64 = 1e-6;

#[test]
fn every_kernel_matches_finite_differences() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for kernel in Kernel::ALL {
        let r = check_kernel(kernel, INSTANCES, 7).unwrap();
        println!("{:<20} max rel err {:.2e} ({} redrawn)", kernel.name(), r.max_relative_error, r.redrawn);
        if r.max_relative_error >= TOLERANCE {
            failures.push(kernel.name());
        }
    }
    assert!(failures.is_empty(), "gradient mismatch in {failures:?}");
    assert!(start.elapsed().as_secs() < 60);
}
