use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};

use super::FieldModel;

pub type CVec3 = [Complex64; 3];

/// Which manifold of the saddle is two dimensional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SaddleCase {
    /// One negative eigenvalue, two with positive real part: 2D unstable manifold.
    Case1,
    /// One positive eigenvalue, two with negative real part: 2D stable manifold.
    Case2,
}

/// Linearization of a hyperbolic saddle whose spectrum splits 1 + 2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaddleSpectrum {
    pub location: Vec3,
    pub case: SaddleCase,
    pub jacobian: Mat3,
    /// The real eigenvalue whose sign differs from the other two.
    pub isolated: f64,
    /// The two eigenvalues sharing the sign of their real parts,
    /// ordered so that `Im pair[0] >= 0`.
    pub pair: [Complex64; 2],
    pub isolated_vector: CVec3,
    pub pair_vectors: [CVec3; 2],
    /// Orthonormal real basis of the invariant plane of `pair`.
    pub plane: [Vec3; 2],
}

impl SaddleSpectrum {
    /// Sum of all three eigenvalues.
    pub fn eigenvalue_sum(&self) -> f64 {
        self.isolated + self.pair[0].re + self.pair[1].re
    }

    /// Smallest |Re| within the pair.
    pub fn pair_rate(&self) -> f64 {
        self.pair[0].re.abs().min(self.pair[1].re.abs())
    }

    pub fn is_spiral(&self) -> bool {
        self.pair[0].im.abs() > 1e-9 * self.pair[0].norm()
    }
}

fn to_nalgebra(a: &Mat3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| a.get(i, j))
}

fn ccross(a: &CVec3, b: &CVec3) -> CVec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn cnorm(a: &CVec3) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn cnormalize(a: CVec3) -> CVec3 {
    let n = cnorm(&a);
    a.map(|c| c / n)
}

fn real_cvec(v: Vec3) -> CVec3 {
    [v.x.into(), v.y.into(), v.z.into()]
}

/// Null vector of `rows` (treated as a complex 3x3 matrix of rank 2),
/// or `None` when the rank is at most one.
fn null_vector(rows: [CVec3; 3]) -> Option<CVec3> {
    let scale = rows.iter().map(cnorm).fold(0.0, f64::max);
    let candidates = [
        ccross(&rows[0], &rows[1]),
        ccross(&rows[0], &rows[2]),
        ccross(&rows[1], &rows[2]),
    ];
    let best = candidates
        .into_iter()
        .max_by(|a, b| cnorm(a).total_cmp(&cnorm(b)))
        .expect("three candidates");
    if cnorm(&best) <= 1e-7 * scale * scale {
        None
    } else {
        Some(cnormalize(best))
    }
}

fn shifted_rows(a: &Mat3, lambda: Complex64, transpose: bool) -> [CVec3; 3] {
    let m = if transpose { a.transpose() } else { *a };
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let d = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
            Complex64::new(m.get(i, j), 0.0) - d
        })
    })
}

/// Orthonormal basis of the plane perpendicular to `normal`. The first
/// vector comes from the coordinate axis least aligned with `normal`.
fn plane_basis(normal: Vec3) -> [Vec3; 2] {
    let n = normal.normalized().unwrap_or(Vec3::Z);
    let axes = [Vec3::X, Vec3::Y, Vec3::Z];
    let axis = axes
        .into_iter()
        .min_by(|a, b| a.dot(n).abs().total_cmp(&b.dot(n).abs()))
        .expect("three axes");
    let e1 = (axis - n * axis.dot(n)).normalized().expect("axis not parallel");
    [e1, n.wedge(e1)]
}

/// Eigen-decomposes the Jacobian at a fixed point and sorts the spectrum
/// into the one-plus-two saddle structure.
pub fn classify_saddle(field: &dyn FieldModel, x0: Vec3, tol: f64) -> Result<SaddleSpectrum> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let residual = field.velocity(x0).norm();
    if !(residual < tol) {
        return Err(Error::NotFixedPoint { residual, tol });
    }
    let jac = field.jacobian(x0);
    if !jac.is_finite() {
        return Err(Error::NotASaddle("non-finite Jacobian".into()));
    }
    let eig: Vec<Complex64> = to_nalgebra(&jac).complex_eigenvalues().iter().copied().collect();
    if let Some(e) = eig.iter().find(|e| e.re.abs() < tol) {
        return Err(Error::Nonhyperbolic { re: e.re.abs() });
    }
    let positive = eig.iter().filter(|e| e.re > 0.0).count();
    let case = match positive {
        2 => SaddleCase::Case1,
        1 => SaddleCase::Case2,
        _ => {
            return Err(Error::NotASaddle(format!(
                "{positive} eigenvalues with positive real part"
            )))
        }
    };
    let isolated_positive = case == SaddleCase::Case2;
    let iso_idx = eig
        .iter()
        .position(|e| (e.re > 0.0) == isolated_positive)
        .expect("exactly one isolated eigenvalue");
    let isolated = eig[iso_idx].re;
    let mut pair: Vec<Complex64> = eig
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != iso_idx)
        .map(|(_, e)| *e)
        .collect();
    if pair[0].im < pair[1].im {
        pair.swap(0, 1);
    }
    let pair = [pair[0], pair[1]];

    // the pair's invariant plane is the annihilator of the isolated left eigenvector
    let left = null_vector(shifted_rows(&jac, isolated.into(), true))
        .ok_or_else(|| Error::NotASaddle("isolated eigenvalue is not simple".into()))?;
    let normal = Vec3::new(left[0].re, left[1].re, left[2].re);
    let plane = plane_basis(normal);

    let isolated_vector = null_vector(shifted_rows(&jac, isolated.into(), false))
        .ok_or_else(|| Error::NotASaddle("isolated eigenvalue is not simple".into()))?;

    let pair_vectors = if (pair[0] - pair[1]).norm() <= 1e-6 * pair[0].norm() {
        // (nearly) repeated eigenvalue: the whole plane is its eigenspace
        // unless A - lambda I still has rank two (a Jordan block)
        if null_vector(shifted_rows(&jac, pair[0], false)).is_some()
            && null_vector(shifted_rows(&jac, pair[1], false)).is_some()
            && (pair[0] - pair[1]).norm() == 0.0
        {
            return Err(Error::NotASaddle(
                "repeated eigenvalue with a one-dimensional eigenspace".into(),
            ));
        }
        [real_cvec(plane[0]), real_cvec(plane[1])]
    } else {
        let v = null_vector(shifted_rows(&jac, pair[0], false))
            .ok_or_else(|| Error::NotASaddle("eigenvector computation failed".into()))?;
        let w = if pair[0].im != 0.0 {
            v.map(|c| c.conj())
        } else {
            null_vector(shifted_rows(&jac, pair[1], false))
                .ok_or_else(|| Error::NotASaddle("eigenvector computation failed".into()))?
        };
        [v, w]
    };
    if cnorm(&ccross(&pair_vectors[0], &pair_vectors[1])) < 1e-6 {
        // nearly repeated real eigenvalues with a defective (Jordan) block
        // land here as well; assumption of two independent eigenvectors fails
        return Err(Error::NotASaddle(
            "eigenvectors of the two-dimensional subspace are linearly dependent".into(),
        ));
    }

    Ok(SaddleSpectrum {
        location: x0,
        case,
        jacobian: jac,
        isolated,
        pair,
        isolated_vector,
        pair_vectors,
        plane,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::HillVortex;

    struct Linear(Mat3);
    impl FieldModel for Linear {
        fn name(&self) -> String {
            "linear".into()
        }
        fn velocity(&self, x: Vec3) -> Vec3 {
            self.0.mul_vec(x)
        }
    }

    #[test]
    fn hill_poles() {
        let hill = HillVortex::classical();
        let a = classify_saddle(&hill, Vec3::Z, 1e-8).unwrap();
        assert_eq!(a.case, SaddleCase::Case1);
        assert!((a.isolated + 3.0).abs() < 1e-7, "{}", a.isolated);
        for l in a.pair {
            assert!((l.re - 1.5).abs() < 1e-7 && l.im.abs() < 1e-7);
        }
        assert!(a.eigenvalue_sum().abs() < 1e-8);
        assert!((a.eigenvalue_sum() - a.jacobian.trace()).abs() < 1e-12);
        // tangent plane of the sphere at the north pole
        assert!(a.plane[0].z.abs() < 1e-7 && a.plane[1].z.abs() < 1e-7);

        let b = classify_saddle(&hill, -Vec3::Z, 1e-8).unwrap();
        assert_eq!(b.case, SaddleCase::Case2);
        assert!((b.isolated - 3.0).abs() < 1e-7);
    }

    #[test]
    fn swirl_pole_is_a_spiral() {
        let hill = HillVortex::swirl(0.1).unwrap();
        let a = classify_saddle(&hill, Vec3::Z, 1e-8).unwrap();
        assert_eq!(a.case, SaddleCase::Case1);
        assert!(a.is_spiral());
        assert!((a.pair[0].re - 1.5).abs() < 1e-7);
        assert!((a.pair[0].im.abs() - 5.0).abs() < 1e-7);
        assert!((a.pair[0].im + a.pair[1].im).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_fixed_points_and_centers() {
        let hill = HillVortex::classical();
        assert!(matches!(
            classify_saddle(&hill, Vec3::new(0.0, 0.0, 0.5), 1e-8),
            Err(Error::NotFixedPoint { .. })
        ));
        let center = Linear(Mat3::new([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -1.0]]));
        assert!(matches!(
            classify_saddle(&center, Vec3::ZERO, 1e-8),
            Err(Error::Nonhyperbolic { .. })
        ));
        let sink = Linear(Mat3::new([[-1.0, 0.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, -3.0]]));
        assert!(matches!(
            classify_saddle(&sink, Vec3::ZERO, 1e-8),
            Err(Error::NotASaddle(_))
        ));
    }

    #[test]
    fn eigenvectors_satisfy_eigen_equation() {
        let a = Mat3::new([[0.5, 2.0, 0.1], [-1.0, 0.7, 0.3], [0.2, 0.0, -2.0]]);
        let s = classify_saddle(&Linear(a), Vec3::ZERO, 1e-8).unwrap();
        assert_eq!(s.case, SaddleCase::Case1);
        for (l, v) in s.pair.iter().zip(s.pair_vectors.iter()) {
            for i in 0..3 {
                let av: Complex64 = (0..3).map(|j| v[j] * a.get(i, j)).sum();
                assert!((av - l * v[i]).norm() < 1e-10);
            }
        }
        // the plane is invariant: A e lies in span(plane)
        let n = s.plane[0].wedge(s.plane[1]);
        for e in s.plane {
            assert!(a.mul_vec(e).dot(n).abs() < 1e-10);
        }
    }
}
