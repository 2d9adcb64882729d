use nalgebra::DMatrix;
use rand::Rng;

use super::scalar_laws::standard_normal_vec;
use crate::error::{Error, Result};
use crate::linalg::{check_spd, log_det_from_chol};
use crate::tensor::DenseTensor;

/// Tensor normal law: `vec(X) ~ N(vec(M), Σ_N ⊗ ⋯ ⊗ Σ_1)`.
#[derive(Clone, Debug)]
pub struct TensorNormal {
    mean: DenseTensor<f64>,
    covs: Vec<DMatrix<f64>>,
    chols: Vec<DMatrix<f64>>,
    inv_chols: Vec<DMatrix<f64>>,
}

impl TensorNormal {
    pub fn new(mean: DenseTensor<f64>, covs: Vec<DMatrix<f64>>) -> Result<Self> {
        if covs.len() != mean.order() {
            return Err(Error::domain(format!(
                "{} covariance matrices for a tensor of order {}",
                covs.len(),
                mean.order()
            )));
        }
        let mut chols = Vec::with_capacity(covs.len());
        let mut inv_chols = Vec::with_capacity(covs.len());
        for (j, (c, &d)) in covs.iter().zip(mean.dims()).enumerate() {
            if c.nrows() != d || c.ncols() != d {
                return Err(Error::domain(format!("covariance {} is {:?}, mode size is {d}", j + 1, c.shape())));
            }
            let l = check_spd(c, &format!("covariance {}", j + 1))
                .map_err(|e| Error::domain(e.to_string()))?;
            let li = l
                .clone()
                .solve_lower_triangular(&DMatrix::identity(d, d))
                .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
            chols.push(l);
            inv_chols.push(li);
        }
        Ok(TensorNormal { mean, covs, chols, inv_chols })
    }

    /// Zero-mean law with the given mode covariances.
    pub fn centered(dims: &[usize], covs: Vec<DMatrix<f64>>) -> Result<Self> {
        TensorNormal::new(DenseTensor::zeros(dims), covs)
    }

    pub fn mean(&self) -> &DenseTensor<f64> {
        &self.mean
    }

    pub fn covs(&self) -> &[DMatrix<f64>] {
        &self.covs
    }

    pub fn chols(&self) -> &[DMatrix<f64>] {
        &self.chols
    }

    /// `Z ×₁ L₁ ⋯ ×_N L_N` for a standard normal tensor `Z`.
    pub fn color(&self, z: &DenseTensor<f64>) -> Result<DenseTensor<f64>> {
        let mut x = z.clone();
        for (n, l) in self.chols.iter().enumerate() {
            x = x.mode_n_matrix_product(l, n)?;
        }
        Ok(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DenseTensor<f64> {
        let z = DenseTensor::new(self.mean.dims().to_vec(), standard_normal_vec(self.mean.len(), rng))
            .expect("consistent dims");
        self.color(&z).and_then(|x| x.add(&self.mean)).expect("consistent dims")
    }

    pub fn logpdf(&self, x: &DenseTensor<f64>) -> Result<f64> {
        let mut e = x.sub(&self.mean)?;
        for (n, li) in self.inv_chols.iter().enumerate() {
            e = e.mode_n_matrix_product(li, n)?;
        }
        let total = self.mean.len() as f64;
        let log_det: f64 = self
            .chols
            .iter()
            .map(|l| total / l.nrows() as f64 * log_det_from_chol(l))
            .sum();
        let quad: f64 = e.as_slice().iter().map(|v| v * v).sum();
        Ok(-0.5 * total * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * quad)
    }
}
