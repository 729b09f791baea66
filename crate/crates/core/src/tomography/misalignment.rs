//! Rigid rotation aligning an experimental moment figure with a reference.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::moment_engine::{CovarianceMatrix, MomentTensors};

const PARALLEL_TOL: f64 = 1e-6;
const STOKES_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisalignmentFit {
    /// Rotation carrying the reference frame onto the experimental one.
    pub rotation: [[f64; 3]; 3],
    pub angle_deg: f64,
    pub axis: [f64; 3],
    /// Frobenius distance of the covariance matrices plus Stokes-vector
    /// distance, before and after undoing the rotation.
    pub residual_before: f64,
    pub residual_after: f64,
    /// Number of direction pairs that fixed the rotation.
    pub pairs: usize,
    /// The reference covariance has repeated eigenvalues, so only its
    /// nondegenerate axes (and the Stokes vector) constrain the rotation.
    pub degenerate: bool,
    /// Nothing constrains the rotation (isotropic reference, no Stokes
    /// vector); the identity is returned.
    pub underdetermined: bool,
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::from(a)
}

fn residual(exp_g: &Matrix3<f64>, exp_s: &Vector3<f64>, ref_g: &Matrix3<f64>, ref_s: &Vector3<f64>) -> f64 {
    (exp_g - ref_g).norm() + (exp_s - ref_s).norm()
}

fn gamma(c: &CovarianceMatrix) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| c.gamma[i][j])
}

/// Rotation angle in degrees and unit axis of a proper rotation matrix.
pub fn rotation_angle_axis(r: &Matrix3<f64>) -> (f64, [f64; 3]) {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let w = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let sin = w.norm() / 2.0;
    let angle = sin.atan2(cos);
    if angle < 1e-12 {
        return (0.0, [0.0, 0.0, 1.0]);
    }
    let axis = if sin > 1e-8 {
        w / w.norm()
    } else {
        // Half-turn: axis from the symmetric part.
        let m = (r + Matrix3::identity()) / 2.0;
        let k = (0..3).max_by(|&a, &b| m[(a, a)].total_cmp(&m[(b, b)])).unwrap();
        let col = m.column(k).into_owned();
        col / col.norm()
    };
    (angle.to_degrees(), [axis[0], axis[1], axis[2]])
}

fn minimal_rotation(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    let a = from.normalize();
    let b = to.normalize();
    let axis = a.cross(&b);
    let s = axis.norm();
    let c = a.dot(&b);
    if s < 1e-15 {
        return Matrix3::identity();
    }
    let k = axis / s;
    let kx = Matrix3::new(0.0, -k[2], k[1], k[2], 0.0, -k[0], -k[1], k[0], 0.0);
    Matrix3::identity() + kx * s + kx * kx * (1.0 - c)
}

/// Finds the proper rotation `R` with `R a_ref ~ a_exp` for the matched
/// nondegenerate covariance axes and Stokes directions.
pub fn misalignment_fit(experimental: &MomentTensors, reference: &MomentTensors) -> Result<MisalignmentFit> {
    let ref_cov = reference.covariance()?;
    let exp_cov = experimental.covariance()?;
    let ref_s = v3(reference.stokes_vector());
    let exp_s = v3(experimental.stokes_vector());

    let mut pairs: Vec<(Vector3<f64>, Vector3<f64>)> = vec![];
    for (lambda, axis) in ref_cov.unique_axes() {
        let k = (0..3)
            .min_by(|&a, &b| (exp_cov.eigenvalues[a] - lambda).abs().total_cmp(&(exp_cov.eigenvalues[b] - lambda).abs()))
            .unwrap();
        let a = v3(axis);
        let mut b = v3(exp_cov.eigenvectors[k]);
        if a.dot(&b) < 0.0 {
            b = -b;
        }
        pairs.push((a, b));
    }
    let scale = ref_s.norm().max(exp_s.norm()).max(1.0);
    if ref_s.norm() > STOKES_TOL * scale && exp_s.norm() > STOKES_TOL * scale {
        pairs.push((ref_s.normalize(), exp_s.normalize()));
    }

    let underdetermined = pairs.is_empty();
    let rotation = if underdetermined {
        Matrix3::identity()
    } else {
        let first = pairs[0].0;
        let collinear = pairs.iter().all(|(a, _)| a.cross(&first).norm() < PARALLEL_TOL);
        if collinear {
            let mut mean = Vector3::zeros();
            for (a, b) in &pairs {
                mean += if a.dot(&first) >= 0.0 { *b } else { -*b };
            }
            minimal_rotation(&first, &mean)
        } else {
            let mut h = Matrix3::zeros();
            for (a, b) in &pairs {
                h += b * a.transpose();
            }
            let svd = h.svd(true, true);
            let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
            let d = (u * vt).determinant().signum();
            u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * vt
        }
    };

    let ref_g = gamma(&ref_cov);
    let exp_g = gamma(&exp_cov);
    let back_g = rotation.transpose() * exp_g * rotation;
    let back_s = rotation.transpose() * exp_s;
    let (angle_deg, axis) = rotation_angle_axis(&rotation);
    Ok(MisalignmentFit {
        rotation: [0, 1, 2].map(|i| [0, 1, 2].map(|j| rotation[(i, j)])),
        angle_deg,
        axis,
        residual_before: residual(&exp_g, &exp_s, &ref_g, &ref_s),
        residual_after: residual(&back_g, &back_s, &ref_g, &ref_s),
        pairs: pairs.len(),
        degenerate: ref_cov.degenerate,
        underdetermined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_state::{build, StateSpec};
    use crate::moment_engine::{moment_tensors, Manifold};
    use crate::stokes_algebra::rotate_state_about;

    fn tensors(spec: StateSpec, axis: [f64; 3], deg: f64) -> MomentTensors {
        let s = build(&spec).unwrap();
        let s = rotate_state_about(&s, axis, deg.to_radians());
        moment_tensors(&s, Manifold::Single(2), 2).unwrap()
    }

    #[test]
    fn identical_inputs_give_identity() {
        let t = tensors(StateSpec::Fock { h: 2, v: 0 }, [0.0, 1.0, 0.0], 0.0);
        let fit = misalignment_fit(&t, &t).unwrap();
        assert!(fit.angle_deg.abs() < 1e-9 && fit.residual_after < 1e-12);
    }

    #[test]
    fn recovers_injected_rotations() {
        let reference = tensors(StateSpec::Fock { h: 2, v: 0 }, [0.0, 1.0, 0.0], 0.0);
        let rotated = tensors(StateSpec::Fock { h: 2, v: 0 }, [0.0, 1.0, 0.0], 8.1);
        let fit = misalignment_fit(&rotated, &reference).unwrap();
        assert!((fit.angle_deg - 8.1).abs() < 1e-6, "{fit:?}");
        assert!((fit.axis[1] - 1.0).abs() < 1e-6);
        assert!(fit.residual_after < 1e-9 && fit.residual_before > 0.1);

        let mix = StateSpec::basis_mixture(2, &[(2, 0.5), (0, 0.5)]);
        let reference = tensors(mix.clone(), [1.0, 0.0, 0.0], 0.0);
        let rotated = tensors(mix, [1.0, 0.0, 0.0], 10.0);
        let fit = misalignment_fit(&rotated, &reference).unwrap();
        assert!((fit.angle_deg - 10.0).abs() < 1e-6 && (fit.axis[0] - 1.0).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn isotropic_reference_is_underdetermined() {
        let t = tensors(StateSpec::Unpolarized { n: 2 }, [1.0, 0.0, 0.0], 0.0);
        let fit = misalignment_fit(&t, &t).unwrap();
        assert!(fit.underdetermined && fit.degenerate && fit.angle_deg == 0.0);
    }
}
