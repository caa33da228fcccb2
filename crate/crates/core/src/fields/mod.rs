//! Velocity fields `f(x)`, perturbations `g(x, t)` and saddle spectra.
//!
//! Every model is evaluated in Cartesian components; models whose natural
//! form is spherical convert internally and advertise that through
//! [`CoordinateSystem`].

mod hill;
mod perturbation;
mod registry;
mod saddle;

pub use hill::{hill_classical_eval, hill_swirl_eval, HillVortex};
pub use perturbation::{
    perturbation_gr_eval, PositiveRadial, RadialGr, ThetaOnly, ZeroPerturbation,
};
pub use registry::{
    field_from_name, perturbation_from_name, FieldParams, DEFAULT_ROSSBY, FIELD_NAMES, PERTURBATION_NAMES,
};
pub use saddle::{classify_saddle, SaddleCase, SaddleSpectrum};

use serde::{Deserialize, Serialize};

use crate::geometry::{Mat3, Vec3};

/// Native coordinates of a model's analytic definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateSystem {
    Cartesian,
    Spherical,
}

/// The unperturbed, autonomous velocity field.
pub trait FieldModel: Send + Sync {
    fn name(&self) -> String;

    /// Velocity at `x`, Cartesian components.
    fn velocity(&self, x: Vec3) -> Vec3;

    /// Identifier of the smooth branch containing `x` for piecewise fields.
    /// Finite differences avoid stencils that straddle two branches.
    fn region(&self, _x: Vec3) -> u8 {
        0
    }

    fn jacobian(&self, x: Vec3) -> Mat3 {
        finite_difference_jacobian(self, x)
    }

    /// `div f(x)`. Volume-preserving models return exactly zero.
    fn divergence(&self, x: Vec3) -> f64 {
        if self.volume_preserving() {
            0.0
        } else {
            self.jacobian(x).trace()
        }
    }

    fn volume_preserving(&self) -> bool {
        false
    }

    fn coordinate_system(&self) -> CoordinateSystem {
        CoordinateSystem::Cartesian
    }
}

/// The perturbation velocity `g(x, t)`.
pub trait PerturbationModel: Send + Sync {
    fn name(&self) -> String;

    /// Perturbation at `x` and time `t`, Cartesian components.
    fn evaluate(&self, x: Vec3, t: f64) -> Vec3;

    /// Optional bound on `|g|` over the region of interest.
    fn bound_hint(&self) -> Option<f64> {
        None
    }
}

/// Central-difference Jacobian with step `1e-6 * max(1, |x|)`.
///
/// Along each axis the central stencil is replaced by a second-order
/// one-sided stencil when the central one would mix branches of a
/// piecewise field.
pub fn finite_difference_jacobian<F: FieldModel + ?Sized>(field: &F, x: Vec3) -> Mat3 {
    let h = 1e-6 * x.norm().max(1.0);
    let home = field.region(x);
    let axes = [Vec3::X, Vec3::Y, Vec3::Z];
    let mut cols = [Vec3::ZERO; 3];
    for (k, e) in axes.iter().enumerate() {
        let step = *e * h;
        let fwd = x + step;
        let bwd = x - step;
        let same_fwd = field.region(fwd) == home;
        let same_bwd = field.region(bwd) == home;
        cols[k] = if same_fwd == same_bwd {
            (field.velocity(fwd) - field.velocity(bwd)) / (2.0 * h)
        } else if same_bwd && field.region(x - step * 2.0) == home {
            (field.velocity(x) * 3.0 - field.velocity(bwd) * 4.0 + field.velocity(x - step * 2.0))
                / (2.0 * h)
        } else if same_fwd && field.region(x + step * 2.0) == home {
            (field.velocity(fwd) * 4.0 - field.velocity(x) * 3.0 - field.velocity(x + step * 2.0))
                / (2.0 * h)
        } else {
            (field.velocity(fwd) - field.velocity(bwd)) / (2.0 * h)
        };
    }
    Mat3::from_columns(cols)
}

/// A field plus a uniform linear contraction `-c (x - center)`.
///
/// Not volume preserving for `c != 0`; used to exercise the divergence
/// weight of the Melnikov integrand.
pub struct Contracted<F> {
    pub inner: F,
    pub rate: f64,
    pub center: Vec3,
}

impl<F: FieldModel> FieldModel for Contracted<F> {
    fn name(&self) -> String {
        format!("{}+contraction({})", self.inner.name(), self.rate)
    }

    fn velocity(&self, x: Vec3) -> Vec3 {
        self.inner.velocity(x) - (x - self.center) * self.rate
    }

    fn region(&self, x: Vec3) -> u8 {
        self.inner.region(x)
    }

    fn divergence(&self, x: Vec3) -> f64 {
        self.inner.divergence(x) - 3.0 * self.rate
    }

    fn coordinate_system(&self) -> CoordinateSystem {
        self.inner.coordinate_system()
    }
}

impl<T: FieldModel + ?Sized> FieldModel for std::sync::Arc<T> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn velocity(&self, x: Vec3) -> Vec3 {
        (**self).velocity(x)
    }
    fn region(&self, x: Vec3) -> u8 {
        (**self).region(x)
    }
    fn jacobian(&self, x: Vec3) -> Mat3 {
        (**self).jacobian(x)
    }
    fn divergence(&self, x: Vec3) -> f64 {
        (**self).divergence(x)
    }
    fn volume_preserving(&self) -> bool {
        (**self).volume_preserving()
    }
    fn coordinate_system(&self) -> CoordinateSystem {
        (**self).coordinate_system()
    }
}

impl<T: PerturbationModel + ?Sized> PerturbationModel for std::sync::Arc<T> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn evaluate(&self, x: Vec3, t: f64) -> Vec3 {
        (**self).evaluate(x, t)
    }
    fn bound_hint(&self) -> Option<f64> {
        (**self).bound_hint()
    }
}
