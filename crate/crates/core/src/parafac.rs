//! PARAFAC(R) coefficient tensors: `ℬ = Σ_r β₁⁽ʳ⁾ ∘ ⋯ ∘ β_J⁽ʳ⁾`.
//!
//! Marginals are stored as given, without any canonical scaling; only the
//! reconstructed tensor is identified.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

/// Rank-R list of marginal-vector groups; `components[r][j]` has length `dims[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParafac<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ParafacCoefficient<T> {
    dims: Vec<usize>,
    components: Vec<Vec<Vec<T>>>,
}

#[derive(Deserialize)]
struct RawParafac<T> {
    components: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> TryFrom<RawParafac<T>> for ParafacCoefficient<T> {
    type Error = Error;

    fn try_from(raw: RawParafac<T>) -> Result<Self> {
        ParafacCoefficient::new(raw.components)
    }
}

/// Which coefficient parametrization a parameter count refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterForm {
    /// Every entry of the square `(I, I)` coefficient is free.
    Unrestricted,
    /// PARAFAC on the `(I_1..I_N, I*)` coefficient multiplying `vec(Y_{t-1})`.
    ModeLastParafac,
    /// PARAFAC on the order-2N coefficient of the contracted-product form.
    ContractedParafac,
}

/// Free parameters in one lag coefficient of a response with dims `dims`.
pub fn parameter_count(dims: &[usize], rank: usize, form: ParameterForm) -> Result<u128> {
    if dims.is_empty() {
        return Err(Error::domain("parameter count needs at least one mode"));
    }
    let total: u128 = dims.iter().map(|&d| d as u128).product();
    let sum: u128 = dims.iter().map(|&d| d as u128).sum();
    let r = rank as u128;
    Ok(match form {
        ParameterForm::Unrestricted => total * total,
        ParameterForm::ModeLastParafac => r * (sum + total),
        ParameterForm::ContractedParafac => 2 * r * sum,
    })
}

/// `vec(v_1 ∘ ⋯ ∘ v_K) = v_K ⊗ ⋯ ⊗ v_1`.
pub fn outer_vec<T: Scalar>(vs: &[&[T]]) -> Vec<T> {
    let mut out = vec![T::one()];
    for v in vs {
        let mut next = Vec::with_capacity(out.len() * v.len());
        for &b in v.iter() {
            next.extend(out.iter().map(|&a| a * b));
        }
        out = next;
    }
    out
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

impl<T: Scalar> ParafacCoefficient<T> {
    pub fn new(components: Vec<Vec<Vec<T>>>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::domain("PARAFAC rank must be positive"))?;
        if first.is_empty() {
            return Err(Error::domain("PARAFAC components need at least one mode"));
        }
        let dims: Vec<usize> = first.iter().map(Vec::len).collect();
        if dims.contains(&0) {
            return Err(Error::domain("PARAFAC marginals must be nonempty"));
        }
        for (r, comp) in components.iter().enumerate() {
            let lens: Vec<usize> = comp.iter().map(Vec::len).collect();
            if lens != dims {
                return Err(Error::domain(format!(
                    "component {r} has marginal lengths {lens:?}, expected {dims:?}"
                )));
            }
        }
        Ok(ParafacCoefficient { dims, components })
    }

    pub fn zeros(dims: &[usize], rank: usize) -> Result<Self> {
        let comp: Vec<Vec<T>> = dims.iter().map(|&d| vec![T::zero(); d]).collect();
        ParafacCoefficient::new(vec![comp; rank])
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn components(&self) -> &[Vec<Vec<T>>] {
        &self.components
    }

    pub fn marginal(&self, r: usize, j: usize) -> &[T] {
        &self.components[r][j]
    }

    pub fn set_marginal(&mut self, r: usize, j: usize, v: Vec<T>) -> Result<()> {
        if r >= self.rank() || j >= self.num_modes() {
            return Err(Error::domain(format!("no marginal ({r}, {j})")));
        }
        if v.len() != self.dims[j] {
            return Err(Error::domain(format!(
                "marginal of length {} for mode {j} of size {}",
                v.len(),
                self.dims[j]
            )));
        }
        self.components[r][j] = v;
        Ok(())
    }

    /// The rank-1 term `ℬ_r`.
    pub fn component_tensor(&self, r: usize) -> DenseTensor<T> {
        let refs: Vec<&[T]> = self.components[r].iter().map(Vec::as_slice).collect();
        DenseTensor::new(self.dims.clone(), outer_vec(&refs)).expect("consistent dims")
    }

    pub fn reconstruct(&self) -> DenseTensor<T> {
        let len: usize = self.dims.iter().product();
        let mut data = vec![T::zero(); len];
        for r in 0..self.rank() {
            let refs: Vec<&[T]> = self.components[r].iter().map(Vec::as_slice).collect();
            for (d, v) in data.iter_mut().zip(outer_vec(&refs)) {
                *d += v;
            }
        }
        DenseTensor::new(self.dims.clone(), data).expect("consistent dims")
    }

    /// `vec(β₁⁽ʳ⁾ ∘ ⋯ ∘ β_{J-1}⁽ʳ⁾)`, the leading-mode part of component `r`.
    pub fn leading_outer(&self, r: usize) -> Vec<T> {
        let j_last = self.num_modes() - 1;
        let refs: Vec<&[T]> = self.components[r][..j_last].iter().map(Vec::as_slice).collect();
        outer_vec(&refs)
    }

    /// `B_(J) = Σ_r β_J⁽ʳ⁾ vec(β₁⁽ʳ⁾ ∘ ⋯ ∘ β_{J-1}⁽ʳ⁾)'`, of shape `I_J × ∏_{j<J} I_j`.
    pub fn mode_last_matricization(&self) -> DMatrix<T> {
        let j_last = self.num_modes() - 1;
        let ncols: usize = self.dims[..j_last].iter().product();
        let mut out = DMatrix::<T>::zeros(self.dims[j_last], ncols);
        for r in 0..self.rank() {
            let lead = self.leading_outer(r);
            let last = &self.components[r][j_last];
            for c in 0..ncols {
                for (i, &b) in last.iter().enumerate() {
                    out[(i, c)] += b * lead[c];
                }
            }
        }
        out
    }

    /// `vec(ℬ ×_J x) = B_(J)' x`, evaluated component-wise.
    pub fn apply_mode_last(&self, x: &[T]) -> Result<Vec<T>> {
        let j_last = self.num_modes() - 1;
        if x.len() != self.dims[j_last] {
            return Err(Error::domain(format!(
                "vector of length {} for last mode of size {}",
                x.len(),
                self.dims[j_last]
            )));
        }
        let len: usize = self.dims[..j_last].iter().product();
        let mut out = vec![T::zero(); len];
        for r in 0..self.rank() {
            let s = dot(&self.components[r][j_last], x);
            for (o, v) in out.iter_mut().zip(self.leading_outer(r)) {
                *o += s * v;
            }
        }
        Ok(out)
    }

    /// Design matrices `b_j` of component `r` with `vec(ℬ_r ×_J x) = b_j β_j⁽ʳ⁾` for every `j`.
    ///
    /// For `j < J`: `b_j = ⟨β_J, x⟩ (β_{J-1} ⊗ ⋯ ⊗ I_{I_j} ⊗ ⋯ ⊗ β₁)`;
    /// for the last mode: `b_J = vec(β₁ ∘ ⋯ ∘ β_{J-1}) x'`.
    pub fn design_matrices(&self, r: usize, x: &[T]) -> Result<Vec<DMatrix<T>>> {
        if r >= self.rank() {
            return Err(Error::domain(format!("component {r} out of range for rank {}", self.rank())));
        }
        let j_last = self.num_modes() - 1;
        if x.len() != self.dims[j_last] {
            return Err(Error::domain(format!(
                "vector of length {} for last mode of size {}",
                x.len(),
                self.dims[j_last]
            )));
        }
        let comp = &self.components[r];
        let rows: usize = self.dims[..j_last].iter().product();
        let s = dot(&comp[j_last], x);
        let mut mats = Vec::with_capacity(self.num_modes());
        for j in 0..j_last {
            let mut m = DMatrix::<T>::zeros(rows, self.dims[j]);
            let mut unit = vec![T::zero(); self.dims[j]];
            for c in 0..self.dims[j] {
                unit[c] = T::one();
                let refs: Vec<&[T]> = (0..j_last)
                    .map(|k| if k == j { unit.as_slice() } else { comp[k].as_slice() })
                    .collect();
                for (row, v) in outer_vec(&refs).into_iter().enumerate() {
                    m[(row, c)] = s * v;
                }
                unit[c] = T::zero();
            }
            mats.push(m);
        }
        let lead = self.leading_outer(r);
        mats.push(DMatrix::from_fn(rows, self.dims[j_last], |i, k| lead[i] * x[k]));
        Ok(mats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vecs(dims: &[usize], salt: f64) -> Vec<Vec<f64>> {
        dims.iter()
            .enumerate()
            .map(|(j, &d)| (0..d).map(|i| ((i + 3 * j) as f64 * 0.37 + salt).sin()).collect())
            .collect()
    }

    #[test]
    fn rejects_ragged_components() {
        assert!(ParafacCoefficient::<f64>::new(vec![]).is_err());
        let bad = vec![vec![vec![1.0, 2.0], vec![1.0]], vec![vec![1.0], vec![1.0]]];
        assert!(ParafacCoefficient::new(bad).is_err());
    }

    #[test]
    fn unit_marginals_give_indicator() {
        let c = ParafacCoefficient::new(vec![vec![
            vec![0.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0],
        ]])
        .unwrap();
        let b = c.reconstruct();
        assert_eq!(b.as_slice().iter().sum::<f64>(), 1.0);
        assert_eq!(b.get(&[1, 2, 0]), Some(1.0));
    }

    #[test]
    fn rank_one_matrix_is_outer_product() {
        let u = vec![1.0, -2.0, 0.5];
        let v = vec![3.0, 4.0];
        let c = ParafacCoefficient::new(vec![vec![u.clone(), v.clone()]]).unwrap();
        let b = c.reconstruct();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(b.get(&[i, j]).unwrap(), u[i] * v[j]);
            }
        }
        // mode-last matricization of a matrix is its transpose
        let m = c.mode_last_matricization();
        assert_eq!(m.shape(), (2, 3));
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(m[(j, i)], u[i] * v[j]);
            }
        }
    }

    #[test]
    fn scale_and_permutation_identification() {
        let dims = [2, 3, 2, 4];
        let c = ParafacCoefficient::new(vec![vecs(&dims, 0.1), vecs(&dims, 1.3)]).unwrap();
        let b = c.reconstruct();
        // powers of two keep the rescaling exact in floating point
        let lambdas = [2.0, 0.5, 4.0, 0.25];
        let mut scaled = c.clone();
        for (j, l) in lambdas.iter().enumerate() {
            let v: Vec<f64> = c.marginal(0, j).iter().map(|x| x * l).collect();
            scaled.set_marginal(0, j, v).unwrap();
        }
        assert_eq!(scaled.reconstruct(), b);
        let swapped = ParafacCoefficient::new(vec![c.components()[1].clone(), c.components()[0].clone()]).unwrap();
        let diff = swapped.reconstruct().sub(&b).unwrap().max_abs();
        assert!(diff <= 1e-15);
    }

    #[test]
    fn all_ones_design_for_first_mode() {
        let dims = [2, 2, 3, 12];
        let comp: Vec<Vec<f64>> = dims.iter().map(|&d| vec![1.0; d]).collect();
        let c = ParafacCoefficient::new(vec![comp]).unwrap();
        let mut x = vec![0.0; 12];
        x[0] = 1.0;
        let b = c.design_matrices(0, &x).unwrap();
        // b_1 = 1_{I2 I3} ⊗ I_{I1}
        let expect = DMatrix::from_element(6, 1, 1.0).kronecker(&DMatrix::identity(2, 2));
        assert_eq!(b[0], expect);
        let lhs = &b[0] * nalgebra::DVector::from_vec(c.marginal(0, 0).to_vec());
        assert_eq!(lhs.as_slice(), c.apply_mode_last(&x).unwrap().as_slice());
    }

    #[test]
    fn design_matrix_errors() {
        let c = ParafacCoefficient::<f64>::zeros(&[2, 2, 2, 8], 1).unwrap();
        assert!(c.design_matrices(1, &[0.0; 8]).is_err());
        assert!(c.design_matrices(0, &[0.0; 7]).is_err());
        assert!(c.apply_mode_last(&[0.0; 3]).is_err());
    }

    #[test]
    fn counts_for_small_cube() {
        assert_eq!(parameter_count(&[2, 2, 2], 3, ParameterForm::Unrestricted).unwrap(), 64);
        assert_eq!(parameter_count(&[2, 2, 2], 3, ParameterForm::ModeLastParafac).unwrap(), 3 * (6 + 8));
        assert_eq!(parameter_count(&[2, 2, 2], 3, ParameterForm::ContractedParafac).unwrap(), 36);
        assert!(parameter_count(&[], 1, ParameterForm::Unrestricted).is_err());
    }
}
