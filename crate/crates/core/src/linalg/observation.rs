use std::collections::HashSet;

use ndarray::Array2;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// A set of observed entries `(i, j) -> value` of a `rows x cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    shape: (usize, usize),
    indices: Vec<(usize, usize)>,
    values: Vec<f64>,
}

impl ObservationSet {
    pub fn new(shape: (usize, usize), indices: Vec<(usize, usize)>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        for &(i, j) in &indices {
            if i >= shape.0 || j >= shape.1 {
                return Err(Error::InvalidArgument(format!(
                    "index ({i}, {j}) out of bounds for {}x{}",
                    shape.0, shape.1
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidArgument(format!("duplicate index ({i}, {j})")));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { shape, indices, values })
    }

    /// Samples `matrix` at `indices`.
    pub fn from_matrix(matrix: &DenseMatrix, indices: Vec<(usize, usize)>) -> Result<Self> {
        let values = indices
            .iter()
            .map(|&(i, j)| {
                if i < matrix.rows() && j < matrix.cols() {
                    Ok(matrix.get(i, j))
                } else {
                    Err(Error::InvalidArgument(format!("index ({i}, {j}) out of bounds")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(matrix.shape(), indices, values)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Fraction of observed entries, `|Ω| / (rows * cols)`.
    pub fn sampling_ratio(&self) -> f64 {
        self.len() as f64 / (self.shape.0 * self.shape.1) as f64
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scatters the observations into a zero matrix, `P_Ω^T`.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros(self.shape);
        for ((i, j), v) in self.iter() {
            out[[i, j]] = v;
        }
        out
    }

    /// Boolean mask of the observed positions.
    pub fn mask(&self) -> Array2<bool> {
        let mut out = Array2::from_elem(self.shape, false);
        for &(i, j) in &self.indices {
            out[[i, j]] = true;
        }
        out
    }
}

/// Restricts `x` to the index set of `omega`.
pub fn project_omega(x: &DenseMatrix, omega: &ObservationSet) -> Result<ObservationSet> {
    if x.shape() != omega.shape() {
        return Err(Error::Dimension(format!(
            "matrix {:?} vs observation shape {:?}",
            x.shape(),
            omega.shape()
        )));
    }
    let values = omega.indices().iter().map(|&(i, j)| x.get(i, j)).collect();
    Ok(ObservationSet {
        shape: omega.shape,
        indices: omega.indices.clone(),
        values,
    })
}

/// `‖P_Ω(X − M)‖_F / ‖P_Ω(M)‖_F`, with `obs` holding `P_Ω(M)`.
pub fn masked_relative_residual(x: &DenseMatrix, obs: &ObservationSet) -> Result<f64> {
    if x.shape() != obs.shape() {
        return Err(Error::Dimension(format!(
            "matrix {:?} vs observation shape {:?}",
            x.shape(),
            obs.shape()
        )));
    }
    let denom = obs.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::Degenerate("observed entries are all zero".into()));
    }
    Ok(masked_residual_raw(x.as_array(), obs) / denom)
}

/// `‖P_Ω(X − M)‖_F` on a raw array.
pub(crate) fn masked_residual_raw(x: &Array2<f64>, obs: &ObservationSet) -> f64 {
    obs.iter()
        .map(|((i, j), v)| {
            let d = x[[i, j]] - v;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
