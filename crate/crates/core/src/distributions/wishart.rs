use nalgebra::DMatrix;
use rand::Rng;

use super::scalar_laws::{gamma_sample, standard_normal};
use crate::error::{Error, Result};
use crate::linalg::{check_spd, log_det_from_chol, symmetrize};

/// `IW(df, scale)`, density `∝ |Σ|^{-(df+d+1)/2} exp(-tr(scale Σ^{-1})/2)`.
///
/// Drawn through the Bartlett decomposition of the Wishart precision: with
/// `scale = U U'` and Bartlett factor `A`, `Σ = (U A'^{-1})(U A'^{-1})'`.
pub fn inverse_wishart_sample<R: Rng + ?Sized>(df: f64, scale: &DMatrix<f64>, rng: &mut R) -> Result<DMatrix<f64>> {
    let d = scale.nrows();
    if !(df > d as f64 - 1.0) || !df.is_finite() {
        return Err(Error::domain(format!("inverse Wishart df {df} must exceed dimension minus one ({d} - 1)")));
    }
    let u = check_spd(scale, "inverse Wishart scale")?;
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        a[(i, i)] = (2.0 * gamma_sample((df - i as f64) / 2.0, 1.0, rng)?).sqrt();
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    let at_inv = a
        .transpose()
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .ok_or_else(|| Error::numerical("degenerate Bartlett factor"))?;
    let g = u * at_inv;
    Ok(symmetrize(&(&g * g.transpose())))
}

pub fn inverse_wishart_logpdf(sigma: &DMatrix<f64>, df: f64, scale: &DMatrix<f64>) -> Result<f64> {
    let d = scale.nrows();
    let ls = check_spd(sigma, "inverse Wishart argument")?;
    let lp = check_spd(scale, "inverse Wishart scale")?;
    let sigma_inv = ls
        .clone()
        .solve_lower_triangular(&DMatrix::identity(d, d))
        .map(|li| li.transpose() * li)
        .ok_or_else(|| Error::numerical("singular argument"))?;
    let df2 = df / 2.0;
    let log_mgamma = (d * (d.saturating_sub(1))) as f64 / 4.0 * std::f64::consts::PI.ln()
        + (0..d).map(|j| statrs::function::gamma::ln_gamma(df2 - j as f64 / 2.0)).sum::<f64>();
    Ok(df2 * log_det_from_chol(&lp) - df2 * d as f64 * std::f64::consts::LN_2 - log_mgamma
        - (df + d as f64 + 1.0) / 2.0 * log_det_from_chol(&ls)
        - 0.5 * (scale * sigma_inv).trace())
}
