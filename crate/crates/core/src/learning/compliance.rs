//! Selecting compliant axes with the Bayesian information criterion.
//!
//! Each demonstration contributes its mean motion direction. Projected onto
//! the plane perpendicular to the desired direction, these points sit at the
//! origin when the motion followed the desired direction and away from it
//! when the environment deflected the tool. Models with `d` compliant axes
//! explain the points with a rank-`d` subspace through the origin; the model
//! with the smallest BIC is kept.

use std::f64::consts::PI;

use nalgebra::{Matrix2, SMatrix, SVector, SymmetricEigen, Vector2, Vector3};

use super::demonstration::Dimension;
use super::direction::{perpendicular_basis, DirectionPair};
use crate::error::{Error, Result};

/// Normalized mean of the motion directions.
pub fn mean_actual_direction(pairs: &[DirectionPair]) -> Result<Vector3<f64>> {
    let sum: Vector3<f64> = pairs.iter().map(|p| p.motion).sum();
    let n = sum.norm();
    if pairs.is_empty() || n < 1e-12 {
        return Err(Error::NoMotion);
    }
    Ok(sum / n)
}

/// Axes spanning the space perpendicular to `desired`: one in the plane
/// (`desired` turned +90°), two in space.
pub fn compliance_axes(desired: &Vector3<f64>, dimension: Dimension) -> Vec<Vector3<f64>> {
    match dimension {
        Dimension::Planar => vec![Vector3::new(-desired.y, desired.x, 0.0)],
        Dimension::Spatial => perpendicular_basis(desired).to_vec(),
    }
}

/// Coordinates of each mean direction along the compliance axes. Planar
/// points carry a zero second coordinate.
pub fn project_to_compliance_plane(
    means: &[Vector3<f64>],
    desired: &Vector3<f64>,
    dimension: Dimension,
) -> Result<Vec<Vector2<f64>>> {
    let axes = compliance_axes(desired, dimension);
    means
        .iter()
        .map(|m| {
            if m.dot(desired) <= 1e-12 {
                return Err(Error::OutOfModel);
            }
            Ok(match dimension {
                Dimension::Planar => Vector2::new(m.dot(&axes[0]), 0.0),
                Dimension::Spatial => Vector2::new(m.dot(&axes[0]), m.dot(&axes[1])),
            })
        })
        .collect()
}

/// Leading principal axis of the points about the origin.
pub fn principal_axis(points: &[Vector2<f64>]) -> Vector2<f64> {
    let scatter: Matrix2<f64> = points.iter().map(|p| p * p.transpose()).sum();
    if scatter.amax() == 0.0 {
        return Vector2::x();
    }
    let eig = SymmetricEigen::new(scatter);
    let i = eig.eigenvalues.imax();
    eig.eigenvectors.column(i).into_owned()
}

/// Residuals of a rank-`d` fit through the origin in a `dims`-dimensional
/// space.
pub fn pca_residuals(points: &[Vector2<f64>], d: usize, dims: usize) -> Vec<Vector2<f64>> {
    if d == 0 {
        return points.to_vec();
    }
    if d >= dims {
        return vec![Vector2::zeros(); points.len()];
    }
    let u = principal_axis(points);
    points.iter().map(|p| p - u * u.dot(p)).collect()
}

/// `ln ∏ N(ε | 0, σ² I)` over the residuals in `dims` dimensions.
pub fn log_likelihood(residuals: &[Vector2<f64>], sigma: f64, dims: usize) -> f64 {
    let var = sigma * sigma;
    let norm = -0.5 * dims as f64 * (2.0 * PI * var).ln();
    residuals
        .iter()
        .map(|e| norm - e.norm_squared() / (2.0 * var))
        .sum()
}

/// `∏ N(ε | 0, Σ)` for a general covariance.
pub fn model_likelihood<const N: usize>(
    residuals: &[SVector<f64, N>],
    covariance: &SMatrix<f64, N, N>,
) -> Result<f64> {
    let chol = covariance
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("covariance Σ"))?;
    let det: f64 = chol.l().diagonal().iter().map(|x| x * x).product();
    let norm = ((2.0 * PI).powi(N as i32) * det).sqrt().recip();
    Ok(residuals
        .iter()
        .map(|e| norm * (-0.5 * e.dot(&chol.solve(e))).exp())
        .product())
}

/// `ln(n) k − 2 ln L`, infinite when `L = 0`.
pub fn bic(n: usize, k: usize, likelihood: f64) -> f64 {
    if likelihood <= 0.0 {
        return f64::INFINITY;
    }
    bic_from_log(n, k, likelihood.ln())
}

pub fn bic_from_log(n: usize, k: usize, log_likelihood: f64) -> f64 {
    if log_likelihood == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    (n as f64).ln() * k as f64 - 2.0 * log_likelihood
}

/// Outcome of compliant-axis selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceModel {
    pub dimension: Dimension,
    pub desired: Vector3<f64>,
    /// Number of compliant axes.
    pub axes: usize,
    /// Unit vectors perpendicular to `desired` and to each other.
    pub compliant_directions: Vec<Vector3<f64>>,
    pub sigma: f64,
    /// Projected mean directions.
    pub points: Vec<Vector2<f64>>,
    /// Indexed by candidate `d`.
    pub log_likelihood: Vec<f64>,
    pub bic: Vec<f64>,
}

/// Picks the number of compliant axes minimizing the BIC, with `k = d`
/// parameters. Ties keep the smaller model.
pub fn select_compliant_axes(
    means: &[Vector3<f64>],
    desired: &Vector3<f64>,
    dimension: Dimension,
    sigma: f64,
) -> Result<ComplianceModel> {
    if means.is_empty() {
        return Err(Error::NoMotion);
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(
            "demonstration uncertainty σ must be positive",
        ));
    }
    let desired = desired.normalize();
    let points = project_to_compliance_plane(means, &desired, dimension)?;
    let dims = dimension.count() - 1;
    let n = points.len();
    let log_likelihood: Vec<f64> = (0..=dims)
        .map(|d| log_likelihood(&pca_residuals(&points, d, dims), sigma, dims))
        .collect();
    let bic: Vec<f64> = log_likelihood
        .iter()
        .enumerate()
        .map(|(d, l)| bic_from_log(n, d, *l))
        .collect();
    let mut axes = 0;
    for d in 1..bic.len() {
        if bic[d] < bic[axes] {
            axes = d;
        }
    }

    let basis = compliance_axes(&desired, dimension);
    let mean_point: Vector2<f64> = points.iter().sum::<Vector2<f64>>() / n as f64;
    let compliant_directions = match (axes, dimension) {
        (0, _) => Vec::new(),
        (1, Dimension::Planar) => {
            let sign = if mean_point.x < 0.0 { -1.0 } else { 1.0 };
            vec![basis[0] * sign]
        }
        (1, Dimension::Spatial) => {
            let mut u = principal_axis(&points);
            if u.dot(&mean_point) < 0.0 {
                u = -u;
            }
            vec![(basis[0] * u.x + basis[1] * u.y).normalize()]
        }
        _ => basis,
    };
    Ok(ComplianceModel {
        dimension,
        desired,
        axes,
        compliant_directions,
        sigma,
        points,
        log_likelihood,
        bic,
    })
}

/// `k_stiff` along every axis except the compliant ones, which get
/// `compliance_ratio · k_stiff`.
pub fn build_stiffness<const N: usize>(
    desired: &SVector<f64, N>,
    compliant: &[SVector<f64, N>],
    k_stiff: f64,
    compliance_ratio: f64,
) -> Result<SMatrix<f64, N, N>> {
    if !(k_stiff > 0.0 && k_stiff.is_finite()) {
        return Err(Error::invalid("k_stiff must be positive"));
    }
    if !(compliance_ratio > 0.0 && compliance_ratio <= 1.0) {
        return Err(Error::invalid("compliance ratio must lie in (0, 1]"));
    }
    let d = desired.normalize();
    let mut softening = SMatrix::<f64, N, N>::zeros();
    for (i, c) in compliant.iter().enumerate() {
        if (c.norm() - 1.0).abs() > 1e-9 || c.dot(&d).abs() > 1e-9 {
            return Err(Error::invalid(
                "compliant directions must be unit and perpendicular to the desired direction",
            ));
        }
        if compliant[..i].iter().any(|o| o.dot(c).abs() > 1e-9) {
            return Err(Error::invalid(
                "compliant directions must be mutually orthogonal",
            ));
        }
        softening += c * c.transpose();
    }
    let k = (SMatrix::<f64, N, N>::identity() - softening * (1.0 - compliance_ratio)) * k_stiff;
    // exact symmetry
    Ok((k + k.transpose()) * 0.5)
}
