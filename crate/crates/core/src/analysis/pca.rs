use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::dataio::EmbeddingSet;
use crate::error::{Error, Result};

// Implicit QR sweeps allowed before giving up.
const MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub ids: Vec<String>,
    /// One row per input point, `out_dims` coordinates each.
    pub coords: Vec<Vec<f64>>,
    /// Unit-norm principal axes, by descending eigenvalue.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub mean: Vec<f64>,
    /// Trace of the covariance matrix.
    pub total_variance: f64,
}

impl PcaResult {
    /// Fraction of the total variance along each component.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|&l| if self.total_variance > 0.0 { l / self.total_variance } else { 0.0 })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample covariance (n − 1 denominator), row-major d×d.
fn covariance(points: &EmbeddingSet, mean: &[f64]) -> Vec<f64> {
    let d = points.dim();
    let n = points.len();
    let centered: Vec<f64> = (0..n)
        .flat_map(|r| points.vector(r).iter().zip(mean).map(|(&x, m)| f64::from(x) - m))
        .collect();
    // Each row is summed over points in order, so the result is thread-count independent.
    let upper: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; d - i];
            for p in centered.chunks_exact(d) {
                let xi = p[i];
                row.iter_mut().zip(&p[i..]).for_each(|(s, &xj)| *s += xi * xj);
            }
            row
        })
        .collect();
    let mut cov = vec![0.0; d * d];
    let denom = (n - 1) as f64;
    for (i, row) in upper.iter().enumerate() {
        for (off, &s) in row.iter().enumerate() {
            let j = i + off;
            cov[i * d + j] = s / denom;
            cov[j * d + i] = s / denom;
        }
    }
    cov
}

/// Projects mean-centred points onto their top `out_dims` principal axes.
///
/// Axes are eigenvectors of the sample covariance, ordered by descending
/// eigenvalue (ties keep the solver's order); each is flipped so its
/// largest-magnitude coordinate is positive. Eigenvalues within rounding of
/// zero are reported as exactly 0.
pub fn pca_project(points: &EmbeddingSet, out_dims: usize) -> Result<PcaResult> {
    let d = points.dim();
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("PCA needs at least two points"));
    }
    if out_dims == 0 || out_dims > d {
        return Err(Error::invalid(format!("out_dims must be in 1..={d}, got {out_dims}")));
    }
    if points.as_flat().iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite embedding component"));
    }
    let mut mean = vec![0.0; d];
    for r in 0..n {
        mean.iter_mut().zip(points.vector(r)).for_each(|(m, &x)| *m += f64::from(x));
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let cov = covariance(points, &mean);
    let total_variance: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let eig = SymmetricEigen::try_new(DMatrix::from_row_slice(d, d, &cov), f64::EPSILON, MAX_ITERS)
        .ok_or(Error::NoConvergence { component: 0 })?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let floor = 1e-12 * total_variance.max(f64::MIN_POSITIVE);
    let mut components = Vec::with_capacity(out_dims);
    let mut eigenvalues = Vec::with_capacity(out_dims);
    for &i in &order[..out_dims] {
        let mut axis: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let pivot = axis
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > axis[best].abs() { i } else { best });
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|x| *x = -*x);
        }
        let lambda = eig.eigenvalues[i];
        components.push(axis);
        eigenvalues.push(if lambda <= floor { 0.0 } else { lambda });
    }

    let coords = (0..n)
        .map(|r| {
            let centered: Vec<f64> = points.vector(r).iter().zip(&mean).map(|(&x, m)| f64::from(x) - m).collect();
            components.iter().map(|a| dot(&centered, a) + 0.0).collect()
        })
        .collect();
    Ok(PcaResult {
        ids: points.ids().to_vec(),
        coords,
        components,
        eigenvalues,
        mean,
        total_variance,
    })
}
