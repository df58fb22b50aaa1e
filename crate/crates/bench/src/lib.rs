//! Benchmark fixtures shared by the criterion benches.

use jellium_core::Lattice;

/// Unit-covolume rectangle with aspect ratio `aspect`.
pub fn rectangular(aspect: f64) -> Lattice {
    let a = aspect.sqrt();
    Lattice::from_generators_2d([a, 0.0], [0.0, 1.0 / a]).expect("non-degenerate basis")
}
