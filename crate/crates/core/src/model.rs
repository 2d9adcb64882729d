//! ART(p) models: `Y_t = A_0 + Σ_j A_j ×_{N+1} vec(Y_{t-j}) + E_t` with tensor normal errors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{standard_normal, standard_normal_vec};
use crate::error::{Error, Result};
use crate::linalg::{self, block_diag, check_spd, kron_reversed, psd_factor};
use crate::matrix_serde;
use crate::parafac::ParafacCoefficient;
use crate::tensor::DenseTensor;

type Tensor = DenseTensor<f64>;

/// Burn-in applied by [`ArtModel::simulate_stationary`] when no other value is given.
pub const DEFAULT_BURN_IN: usize = 100;
const LYAPUNOV_TOL: f64 = 1e-12;

/// A lag coefficient of dims `(I_1, …, I_N, I*)`, dense or in PARAFAC form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Dense(Tensor),
    Parafac(ParafacCoefficient<f64>),
}

impl Coefficient {
    pub fn dims(&self) -> &[usize] {
        match self {
            Coefficient::Dense(t) => t.dims(),
            Coefficient::Parafac(p) => p.dims(),
        }
    }

    pub fn to_dense(&self) -> Tensor {
        match self {
            Coefficient::Dense(t) => t.clone(),
            Coefficient::Parafac(p) => p.reconstruct(),
        }
    }

    /// `A = mat_{N+1}(𝒜)'`, so that `vec(𝒜 ×_{N+1} x) = A x`.
    pub fn var_matrix(&self) -> DMatrix<f64> {
        let dense = self.to_dense();
        let n = *dense.dims().last().expect("coefficient has modes");
        // the last mode is slowest, so the buffer is A in column-major order
        DMatrix::from_column_slice(dense.len() / n, n, dense.as_slice())
    }

    /// `vec(𝒜 ×_{N+1} x)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Coefficient::Parafac(p) => p.apply_mode_last(x).expect("validated dims"),
            Coefficient::Dense(t) => {
                let n = x.len();
                let rows = t.len() / n;
                let mut out = vec![0.0; rows];
                for (k, &xk) in x.iter().enumerate() {
                    if xk == 0.0 {
                        continue;
                    }
                    for (o, &a) in out.iter_mut().zip(&t.as_slice()[k * rows..(k + 1) * rows]) {
                        *o += a * xk;
                    }
                }
                out
            }
        }
    }
}

/// An ordered series of equally shaped tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSeries {
    dims: Vec<usize>,
    observations: Vec<Tensor>,
}

impl TensorSeries {
    pub fn new(dims: Vec<usize>, observations: Vec<Tensor>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::domain(format!("invalid series dims {dims:?}")));
        }
        for (t, y) in observations.iter().enumerate() {
            if y.dims() != dims.as_slice() {
                return Err(Error::domain(format!(
                    "observation {} has dims {:?}, expected {dims:?}",
                    t + 1,
                    y.dims()
                )));
            }
        }
        Ok(TensorSeries { dims, observations })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Tensor] {
        &self.observations
    }

    pub fn get(&self, t: usize) -> Option<&Tensor> {
        self.observations.get(t)
    }

    pub fn into_observations(self) -> Vec<Tensor> {
        self.observations
    }

    pub fn vectors(&self) -> Vec<DVector<f64>> {
        self.observations.iter().map(|y| DVector::from_column_slice(y.as_slice())).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stationarity {
    pub rho: f64,
    pub stationary: bool,
}

/// ART(p) model with coefficients in the mode-(N+1) form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct ArtModel {
    dims: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intercept: Option<Tensor>,
    lags: Vec<Coefficient>,
    #[serde(with = "matrix_serde::matrices")]
    covs: Vec<DMatrix<f64>>,
    #[serde(skip)]
    factors: Vec<DMatrix<f64>>,
}

#[derive(Deserialize)]
struct RawModel {
    dims: Vec<usize>,
    #[serde(default)]
    intercept: Option<Tensor>,
    lags: Vec<Coefficient>,
    #[serde(with = "matrix_serde::matrices")]
    covs: Vec<DMatrix<f64>>,
}

impl TryFrom<RawModel> for ArtModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let m = ArtModel::new(raw.dims, raw.lags, raw.covs)?;
        match raw.intercept {
            Some(c) => m.with_intercept(c),
            None => Ok(m),
        }
    }
}

impl ArtModel {
    /// Zero-intercept model; each lag has dims `(dims…, ∏dims)` and each `Σ_j` must be SPD.
    pub fn new(dims: Vec<usize>, lags: Vec<Coefficient>, covs: Vec<DMatrix<f64>>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::domain(format!("invalid response dims {dims:?}")));
        }
        if covs.len() != dims.len() {
            return Err(Error::domain(format!("{} covariances for {} modes", covs.len(), dims.len())));
        }
        let factors = covs
            .iter()
            .zip(&dims)
            .enumerate()
            .map(|(j, (c, &d))| {
                if c.shape() != (d, d) {
                    return Err(Error::domain(format!("Σ_{} is {:?}, mode size is {d}", j + 1, c.shape())));
                }
                check_spd(c, &format!("Σ_{}", j + 1)).map_err(|e| Error::domain(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        ArtModel::from_parts(dims, None, lags, covs, factors)
    }

    fn from_parts(
        dims: Vec<usize>,
        intercept: Option<Tensor>,
        lags: Vec<Coefficient>,
        covs: Vec<DMatrix<f64>>,
        factors: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let total: usize = dims.iter().product();
        let mut coef_dims = dims.clone();
        coef_dims.push(total);
        for (j, a) in lags.iter().enumerate() {
            if a.dims() != coef_dims.as_slice() {
                return Err(Error::domain(format!(
                    "lag {} coefficient has dims {:?}, expected {coef_dims:?}",
                    j + 1,
                    a.dims()
                )));
            }
        }
        Ok(ArtModel { dims, intercept, lags, covs, factors })
    }

    pub fn with_intercept(mut self, intercept: Tensor) -> Result<Self> {
        if intercept.dims() != self.dims.as_slice() {
            return Err(Error::domain(format!(
                "intercept dims {:?} differ from response dims {:?}",
                intercept.dims(),
                self.dims
            )));
        }
        self.intercept = Some(intercept);
        Ok(self)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `I* = ∏ I_j`.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn lag_order(&self) -> usize {
        self.lags.len()
    }

    pub fn lags(&self) -> &[Coefficient] {
        &self.lags
    }

    pub fn covs(&self) -> &[DMatrix<f64>] {
        &self.covs
    }

    pub fn intercept(&self) -> Option<&Tensor> {
        self.intercept.as_ref()
    }

    /// Per-mode factors `F_j` with `F_j F_j' = Σ_j` used to color noise.
    pub fn noise_factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    /// `Σ_N ⊗ ⋯ ⊗ Σ_1`.
    pub fn vec_covariance(&self) -> DMatrix<f64> {
        kron_reversed(&self.covs)
    }

    /// Conditional mean given `history`, most recent observation first.
    pub fn one_step_mean(&self, history: &[&Tensor]) -> Result<Tensor> {
        if history.len() < self.lag_order() {
            return Err(Error::domain(format!(
                "{} lagged values for a model of order {}",
                history.len(),
                self.lag_order()
            )));
        }
        let mut mean = match &self.intercept {
            Some(c) => c.as_slice().to_vec(),
            None => vec![0.0; self.total_dim()],
        };
        for (a, y) in self.lags.iter().zip(history) {
            if y.dims() != self.dims.as_slice() {
                return Err(Error::domain(format!("lagged value dims {:?}, expected {:?}", y.dims(), self.dims)));
            }
            for (m, v) in mean.iter_mut().zip(a.apply(y.as_slice())) {
                *m += v;
            }
        }
        Tensor::new(self.dims.clone(), mean)
    }

    /// Path driven by given standard normal tensors: `E_t = Z_t ×_1 F_1 ⋯ ×_N F_N`.
    ///
    /// `init` is ordered oldest first and must hold at least `p` tensors; the
    /// returned series has one observation per noise tensor.
    pub fn simulate_with_noise(&self, init: &[Tensor], noise: &[Tensor]) -> Result<TensorSeries> {
        let p = self.lag_order();
        if init.len() < p {
            return Err(Error::domain(format!("{} initial values for a model of order {p}", init.len())));
        }
        let mut history: Vec<Tensor> = init[init.len() - p..].to_vec();
        let mut out = Vec::with_capacity(noise.len());
        for z in noise {
            if z.dims() != self.dims.as_slice() {
                return Err(Error::domain(format!("noise dims {:?}, expected {:?}", z.dims(), self.dims)));
            }
            let lagged: Vec<&Tensor> = history.iter().rev().collect();
            let mean = self.one_step_mean(&lagged)?;
            let mut e = z.clone();
            for (n, f) in self.factors.iter().enumerate() {
                e = e.mode_n_matrix_product(f, n)?;
            }
            let y = mean.add(&e)?;
            if p > 0 {
                history.remove(0);
                history.push(y.clone());
            }
            out.push(y);
        }
        TensorSeries::new(self.dims.clone(), out)
    }

    pub fn simulate<R: Rng + ?Sized>(&self, len: usize, init: &[Tensor], rng: &mut R) -> Result<TensorSeries> {
        let noise: Vec<Tensor> = (0..len)
            .map(|_| Tensor::new(self.dims.clone(), standard_normal_vec(self.total_dim(), rng)))
            .collect::<Result<_>>()?;
        self.simulate_with_noise(init, &noise)
    }

    /// Starts from zero initial values and discards `burn_in` steps.
    pub fn simulate_stationary<R: Rng + ?Sized>(&self, len: usize, burn_in: usize, rng: &mut R) -> Result<TensorSeries> {
        let init = vec![Tensor::zeros(&self.dims); self.lag_order()];
        let all = self.simulate(len + burn_in, &init, rng)?;
        TensorSeries::new(self.dims.clone(), all.into_observations().split_off(burn_in))
    }

    pub fn to_var(&self) -> VarModel {
        VarModel {
            coefs: self.lags.iter().map(Coefficient::var_matrix).collect(),
            intercept: match &self.intercept {
                Some(c) => DVector::from_column_slice(c.as_slice()),
                None => DVector::zeros(self.total_dim()),
            },
            cov: self.vec_covariance(),
        }
    }

    /// Equivalent ART(1) on the stacked response `[Y_t; Y_{t-1}; …; Y_{t-p+1}]`
    /// concatenated along mode 1, of dims `(p I_1, I_2, …, I_N)`.
    ///
    /// The first-mode covariance of the result is `blockdiag(Σ_1, 0)`; its noise
    /// factor is `blockdiag(F_1, 0)`, so feeding a standard normal tensor whose
    /// first block is `Z_t` reproduces the original path in the first block.
    pub fn companion_form(&self) -> ArtModel {
        let p = self.lag_order();
        if p <= 1 {
            return self.clone();
        }
        let i1 = self.dims[0];
        let total = self.total_dim();
        let mut dims = self.dims.clone();
        dims[0] = p * i1;
        let stacked_total = p * total;
        let mut coef_dims = dims.clone();
        coef_dims.push(stacked_total);
        let lags: Vec<Tensor> = self.lags.iter().map(Coefficient::to_dense).collect();
        // a stacked flat index s splits into (block k, i1, rest) as s = k i1 + i + p i1 r
        let split = |s: usize| {
            let row = s % (p * i1);
            (row / i1, row % i1, s / (p * i1))
        };
        let coef = Tensor::from_fn(&coef_dims, |idx| {
            let out_flat: usize = {
                let mut f = 0;
                let mut stride = 1;
                for (k, &d) in idx[..dims.len()].iter().zip(&dims) {
                    f += k * stride;
                    stride *= d;
                }
                f
            };
            let (ko, io, ro) = split(out_flat);
            let (ki, ii, ri) = split(idx[dims.len()]);
            if ko == 0 {
                lags[ki].as_slice()[io + i1 * ro + total * (ii + i1 * ri)]
            } else if ki + 1 == ko && ii == io && ri == ro {
                1.0
            } else {
                0.0
            }
        });
        let mut covs = self.covs.clone();
        let mut factors = self.factors.clone();
        let pad = DMatrix::zeros((p - 1) * i1, (p - 1) * i1);
        covs[0] = block_diag(&self.covs[0], &pad);
        factors[0] = block_diag(&self.factors[0], &pad);
        let intercept = self
            .intercept
            .as_ref()
            .map(|c| Tensor::from_fn(&dims, |idx| if idx[0] < i1 { c.get(idx).unwrap_or(0.0) } else { 0.0 }));
        ArtModel::from_parts(dims, intercept, vec![Coefficient::Dense(coef)], covs, factors)
            .expect("companion layout is consistent")
    }

    /// Spectral radius of the companion coefficient; the process is weakly stationary iff `ρ < 1`.
    pub fn check_stationarity(&self) -> Stationarity {
        if self.lag_order() == 0 {
            return Stationarity { rho: 0.0, stationary: true };
        }
        let a = self.companion_form().lags[0].var_matrix();
        let rho = linalg::spectral_radius(&a);
        Stationarity { rho, stationary: rho < 1.0 }
    }

    /// MA(∞) coefficients `Ψ_0 = I`, `Ψ_h = Σ_j A_j Ψ_{h-j}`, of the vectorized process.
    pub fn ma_coefficients(&self, horizon: usize) -> Vec<DMatrix<f64>> {
        self.to_var().ma_coefficients(horizon)
    }

    /// Stationary autocovariance `Γ_h = A^h Γ_0` of `vec(Y_t)` for an ART(1).
    pub fn autocovariance(&self, h: usize) -> Result<DMatrix<f64>> {
        if self.lag_order() != 1 {
            return Err(Error::domain("autocovariance is available for lag order 1"));
        }
        let var = self.to_var();
        let g0 = solve_lyapunov(&var.coefs[0], &var.cov)?;
        Ok(var.coefs[0].pow(h as u32) * g0)
    }

    /// Random stable model with PARAFAC(R) coefficients and the given covariances.
    ///
    /// Marginals are iid `N(0, σ²)` with `σ` set so the typical spectral radius is
    /// about `bound / 2`: the nonzero eigenvalues of `A = Σ_r v_r u_r'` are those of the
    /// `R × R` matrix `[u_r' v_s]`, whose entries have scale `σ^{2J} √I*`. Draws are
    /// rejected until `ρ < bound`.
    pub fn random_stable<R: Rng + ?Sized>(
        dims: &[usize],
        rank: usize,
        bound: f64,
        covs: Vec<DMatrix<f64>>,
        rng: &mut R,
    ) -> Result<(ArtModel, f64)> {
        if rank == 0 {
            return Err(Error::domain("rank must be positive"));
        }
        if !(bound > 0.0) {
            return Err(Error::domain(format!("stability bound must be positive, got {bound}")));
        }
        let total: usize = dims.iter().product();
        let modes = dims.len() + 1;
        let c = 0.5 * bound;
        let sigma = (c / ((rank * total) as f64).sqrt()).powf(1.0 / (2.0 * modes as f64));
        let mut all_dims = dims.to_vec();
        all_dims.push(total);
        for _ in 0..1000 {
            let comps = (0..rank)
                .map(|_| {
                    all_dims
                        .iter()
                        .map(|&d| (0..d).map(|_| sigma * standard_normal(rng)).collect())
                        .collect()
                })
                .collect();
            let coef = Coefficient::Parafac(ParafacCoefficient::new(comps)?);
            let model = ArtModel::new(dims.to_vec(), vec![coef], covs.clone())?;
            let rho = model.check_stationarity().rho;
            if rho < bound {
                return Ok((model, rho));
            }
        }
        Err(Error::numerical(format!("no model with spectral radius below {bound} after 1000 draws")))
    }
}

/// Vectorized representation `y_t = c + Σ_j A_j y_{t-j} + e_t`, `e_t ~ N(0, Ω)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VarModel {
    pub coefs: Vec<DMatrix<f64>>,
    pub intercept: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl VarModel {
    pub fn dim(&self) -> usize {
        self.intercept.len()
    }

    /// Stacked `np × np` companion matrix.
    pub fn companion_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let p = self.coefs.len().max(1);
        let mut m = DMatrix::zeros(n * p, n * p);
        for (j, a) in self.coefs.iter().enumerate() {
            m.view_mut((0, j * n), (n, n)).copy_from(a);
        }
        for j in 1..p {
            m.view_mut((j * n, (j - 1) * n), (n, n)).fill_with_identity();
        }
        m
    }

    pub fn spectral_radius(&self) -> f64 {
        if self.coefs.is_empty() {
            return 0.0;
        }
        linalg::spectral_radius(&self.companion_matrix())
    }

    pub fn ma_coefficients(&self, horizon: usize) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        let mut psi = vec![DMatrix::identity(n, n)];
        for h in 1..=horizon {
            let mut next = DMatrix::zeros(n, n);
            for (j, a) in self.coefs.iter().enumerate() {
                if j < h {
                    next += a * &psi[h - 1 - j];
                }
            }
            psi.push(next);
        }
        psi
    }

    /// Path with `e_t = chol(Ω) z_t`; `init` oldest first.
    pub fn simulate_with_noise(&self, init: &[DVector<f64>], noise: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let p = self.coefs.len();
        if init.len() < p {
            return Err(Error::domain(format!("{} initial values for a VAR of order {p}", init.len())));
        }
        let l = psd_factor(&self.cov, "VAR error covariance")?;
        let mut history: Vec<DVector<f64>> = init[init.len() - p..].to_vec();
        let mut out = Vec::with_capacity(noise.len());
        for z in noise {
            let mut y = &self.intercept + &l * z;
            for (j, a) in self.coefs.iter().enumerate() {
                y += a * &history[p - 1 - j];
            }
            if p > 0 {
                history.remove(0);
                history.push(y.clone());
            }
            out.push(y);
        }
        Ok(out)
    }

    pub fn simulate<R: Rng + ?Sized>(&self, len: usize, init: &[DVector<f64>], rng: &mut R) -> Result<Vec<DVector<f64>>> {
        let noise: Vec<DVector<f64>> = (0..len)
            .map(|_| DVector::from_vec(standard_normal_vec(self.dim(), rng)))
            .collect();
        self.simulate_with_noise(init, &noise)
    }
}

/// Solves `Γ = A Γ A' + Ω` by the doubling fixed-point iteration.
pub fn solve_lyapunov(a: &DMatrix<f64>, omega: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if linalg::spectral_radius(a) >= 1.0 {
        return Err(Error::domain("Lyapunov equation needs a stable coefficient matrix"));
    }
    let mut gamma = omega.clone();
    let mut ak = a.clone();
    for _ in 0..200 {
        let step = &ak * &gamma * ak.transpose();
        gamma += &step;
        ak = &ak * &ak;
        if step.abs().max() <= LYAPUNOV_TOL * gamma.abs().max() {
            return Ok(linalg::symmetrize(&gamma));
        }
    }
    Err(Error::numerical("Lyapunov iteration did not converge"))
}
