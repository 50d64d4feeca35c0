//! Real coefficient vectors over the Pauli-string basis.

use std::ops::Index;

use crate::error::{Error, Result};

/// Real coefficients of an operator expanded in the Pauli-string basis.
///
/// Used both for density-matrix coefficients and for Hamiltonian
/// coefficients. The Euclidean norm is cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    values: Vec<f64>,
    norm2: f64,
}

impl CoeffVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let norm2 = euclidean_norm(&values);
        Ok(Self { values, norm2 })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
            norm2: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Cached Euclidean norm.
    pub fn norm2(&self) -> f64 {
        self.norm2
    }

    /// Sum of squared coefficients; purity is `2^N` times this.
    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Unit-norm copy together with the original norm.
    pub fn normalized(&self) -> Result<(CoeffVector, f64)> {
        if self.norm2 == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let r = self.norm2;
        let values = self.values.iter().map(|v| v / r).collect();
        Ok((CoeffVector::new(values)?, r))
    }

    pub fn scaled(&self, factor: f64) -> Result<CoeffVector> {
        CoeffVector::new(self.values.iter().map(|v| v * factor).collect())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &CoeffVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for CoeffVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}

/// Evolution parameters of the product-of-exponentials representation.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    pub values: Vec<f64>,
}

impl AlphaVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

pub(crate) fn euclidean_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}
