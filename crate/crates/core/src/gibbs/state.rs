use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spd_inverse;
use crate::matrix_serde;
use crate::model::TensorSeries;
use crate::parafac::ParafacCoefficient;

/// Current values of every sampled quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McmcState {
    /// Marginals `β_j⁽ʳ⁾`; the coefficient has dims `(I_1, …, I_N, I*)`.
    pub coef: ParafacCoefficient<f64>,
    pub phi: Vec<f64>,
    pub tau: f64,
    /// `λ_{j,r}` indexed `[r][j]`.
    pub lambda: Vec<Vec<f64>>,
    /// `w_{j,r,p}` indexed `[r][j][p]`.
    pub w: Vec<Vec<Vec<f64>>>,
    #[serde(with = "matrix_serde::matrices")]
    pub sigma: Vec<DMatrix<f64>>,
    pub gamma: f64,
}

impl McmcState {
    pub fn rank(&self) -> usize {
        self.coef.rank()
    }

    /// Response dims `(I_1, …, I_N)`.
    pub fn dims(&self) -> &[usize] {
        let d = self.coef.dims();
        &d[..d.len() - 1]
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rank();
        let coef_dims = self.coef.dims();
        if self.phi.len() != r || self.lambda.len() != r || self.w.len() != r {
            return Err(Error::domain("scale parameters do not match the rank"));
        }
        if (self.phi.iter().sum::<f64>() - 1.0).abs() > 1e-9 || self.phi.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::domain("phi must be a positive probability vector"));
        }
        if !(self.tau > 0.0) || !(self.gamma > 0.0) {
            return Err(Error::domain("tau and gamma must be positive"));
        }
        for r in 0..r {
            if self.lambda[r].len() != coef_dims.len() || self.w[r].len() != coef_dims.len() {
                return Err(Error::domain(format!("local scales of component {r} have the wrong length")));
            }
            for (j, &d) in coef_dims.iter().enumerate() {
                if !(self.lambda[r][j] > 0.0) || self.w[r][j].len() != d || self.w[r][j].iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::domain(format!("invalid local scales at ({r}, {j})")));
                }
            }
        }
        let dims = self.dims();
        if self.sigma.len() != dims.len() || self.sigma.iter().zip(dims).any(|(s, &d)| s.shape() != (d, d)) {
            return Err(Error::domain("covariance matrices do not match the response dims"));
        }
        Ok(())
    }
}

/// Response and lagged regressor columns for the pairs `(Y_t, vec(Y_{t-1}))`, `t = 2..T`.
#[derive(Clone, Debug)]
pub struct Regression {
    pub(crate) dims: Vec<usize>,
    /// `I* × n`, column `t` is `vec(Y_{t+1})`.
    pub(crate) y: DMatrix<f64>,
    /// `I* × n`, column `t` is `vec(Y_t)`.
    pub(crate) x: DMatrix<f64>,
    /// `Σ_t x_t x_t'`.
    pub(crate) xx: DMatrix<f64>,
}

impl Regression {
    pub fn new(series: &TensorSeries) -> Result<Self> {
        let t = series.len();
        if t < 2 {
            return Err(Error::domain(format!("need at least 2 observations, got {t}")));
        }
        let total: usize = series.dims().iter().product();
        let obs = series.observations();
        let y = DMatrix::from_fn(total, t - 1, |i, s| obs[s + 1].as_slice()[i]);
        let x = DMatrix::from_fn(total, t - 1, |i, s| obs[s].as_slice()[i]);
        let xx = &x * x.transpose();
        Ok(Regression { dims: series.dims().to_vec(), y, x, xx })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of regression pairs, `T - 1`.
    pub fn pairs(&self) -> usize {
        self.y.ncols()
    }

    pub fn total_dim(&self) -> usize {
        self.y.nrows()
    }
}

/// Quantities derived from the state that several steps share.
pub(crate) struct Cache {
    /// `Σ_j^{-1}`.
    pub precisions: Vec<DMatrix<f64>>,
    /// `u_r = X' β_J⁽ʳ⁾`, one entry per pair.
    pub u: Vec<DVector<f64>>,
    /// `v_r = vec(β_1⁽ʳ⁾ ∘ ⋯ ∘ β_N⁽ʳ⁾)`.
    pub v: Vec<DVector<f64>>,
    /// Full residual `Y - Σ_r v_r u_r'`.
    pub resid: DMatrix<f64>,
}

impl Cache {
    pub fn new(reg: &Regression, state: &McmcState) -> Result<Self> {
        let precisions = state
            .sigma
            .iter()
            .enumerate()
            .map(|(j, s)| spd_inverse(s, &format!("Σ_{}", j + 1)))
            .collect::<Result<Vec<_>>>()?;
        let mut cache = Cache {
            precisions,
            u: Vec::with_capacity(state.rank()),
            v: Vec::with_capacity(state.rank()),
            resid: reg.y.clone(),
        };
        for r in 0..state.rank() {
            let (u, v) = component_factors(reg, state, r);
            cache.resid -= &v * u.transpose();
            cache.u.push(u);
            cache.v.push(v);
        }
        Ok(cache)
    }

    /// Replaces component `r`'s fitted values after its marginals changed.
    pub fn refresh_component(&mut self, reg: &Regression, state: &McmcState, r: usize) {
        self.resid += &self.v[r] * self.u[r].transpose();
        let (u, v) = component_factors(reg, state, r);
        self.resid -= &v * u.transpose();
        self.u[r] = u;
        self.v[r] = v;
    }
}

pub(crate) fn component_factors(reg: &Regression, state: &McmcState, r: usize) -> (DVector<f64>, DVector<f64>) {
    let last = reg.dims.len();
    let b_last = DVector::from_column_slice(state.coef.marginal(r, last));
    let u = reg.x.tr_mul(&b_last);
    let v = DVector::from_vec(state.coef.leading_outer(r));
    (u, v)
}
