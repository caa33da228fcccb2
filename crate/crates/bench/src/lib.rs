//! Fixtures shared by the benchmarks.

use melnikov3d::closed_form::hill_classical_melnikov;
use melnikov3d::grid::{linspace, MelnikovField};

/// Classical closed-form field on `p in [-2, 2]`, cheap to build so that
/// analysis benchmarks time only the analysis.
pub fn classical_field(t: f64, n_p: usize, n_alpha: usize) -> MelnikovField {
    MelnikovField::from_fn(t, linspace(-2.0, 2.0, n_p), n_alpha, "closed form", |p, a| {
        hill_classical_melnikov(p, a, t)
    })
    .expect("valid grid")
}
