use std::fmt;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Dense real matrix. Entries are finite by construction.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    data: Array2<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let data = Array2::from_shape_vec((rows, cols), entries)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Self::from_array(data)
    }

    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { data })
    }

    /// Wraps an array the caller has already checked.
    pub(crate) fn from_array_unchecked(data: Array2<f64>) -> Self {
        debug_assert!(data.iter().all(|x| x.is_finite()));
        Self { data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { data: Array2::zeros((rows, cols)) }
    }

    pub fn identity(n: usize) -> Self {
        Self { data: Array2::eye(n) }
    }

    /// Rectangular matrix with `diag` on the main diagonal.
    pub fn from_diag(rows: usize, cols: usize, diag: &[f64]) -> Result<Self> {
        if diag.len() > rows.min(cols) {
            return Err(Error::Dimension(format!(
                "diagonal of length {} does not fit {rows}x{cols}",
                diag.len()
            )));
        }
        let mut data = Array2::zeros((rows, cols));
        for (i, &d) in diag.iter().enumerate() {
            data[[i, i]] = d;
        }
        Self::from_array(data)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[[row, col]]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.data.iter().copied().collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> Self {
        Self { data: self.data.t().to_owned() }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::Dimension(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Self::from_array(self.data.dot(&other.data))
    }

    /// `self * scale`, entrywise.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        Self::from_array(&self.data * scale)
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &DenseMatrix, b: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "shapes {:?} and {:?} differ",
                self.shape(),
                other.shape()
            )));
        }
        Self::from_array(&self.data * a + &other.data * b)
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix{:?} ", self.shape())?;
        fmt::Debug::fmt(&self.data, f)
    }
}

impl From<DenseMatrix> for Array2<f64> {
    fn from(m: DenseMatrix) -> Self {
        m.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        assert!(matches!(DenseMatrix::new(2, 2, vec![1.0; 3]), Err(Error::Dimension(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let err = DenseMatrix::new(1, 3, vec![0.0, f64::NAN, 1.0]).unwrap_err();
        assert_eq!(err, Error::NonFinite(1));
        assert!(DenseMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn row_major_layout() {
        let m = DenseMatrix::new(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.to_row_major(), vec![1., 2., 3., 4., 5., 6.]);
        assert_eq!(m.transpose().get(0, 1), 4.0);
    }
}
