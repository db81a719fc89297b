//! Nonnegative core tensor for fixed factors, and reconstruction.
//!
//! With column-orthonormal factors the least-squares core is
//! `A x_1 U1^T ... x_d Ud^T`, so the Kronecker chain is never formed.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::recovery::FactorMatrix;
use crate::tensor::DenseTensor;

/// Factor slot of one mode: a real factor or the identity (partial ONTD).
#[derive(Debug, Clone, PartialEq)]
pub enum ModeFactor {
    /// Identity of the given size.
    Identity(usize),
    Factor(FactorMatrix),
}

impl ModeFactor {
    /// `(I_n, J_n)`.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            ModeFactor::Identity(n) => (*n, *n),
            ModeFactor::Factor(f) => (f.rows(), f.cols()),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, ModeFactor::Identity(_))
    }

    pub fn as_factor(&self) -> Option<&FactorMatrix> {
        match self {
            ModeFactor::Factor(f) => Some(f),
            ModeFactor::Identity(_) => None,
        }
    }
}

/// Core tensor plus one factor slot per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct OntdModel {
    core: DenseTensor,
    factors: Vec<ModeFactor>,
}

impl OntdModel {
    pub fn new(core: DenseTensor, factors: Vec<ModeFactor>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::Shape(format!(
                "{} factors for a {}-way core",
                factors.len(),
                core.order()
            )));
        }
        for (n, (f, &j)) in factors.iter().zip(core.dims()).enumerate() {
            if f.shape().1 != j {
                return Err(Error::Shape(format!(
                    "mode {n}: factor has {} columns, core has {j}",
                    f.shape().1
                )));
            }
        }
        if !core.is_nonnegative() {
            return Err(Error::InvalidArgument("core tensor has negative entries".into()));
        }
        Ok(Self { core, factors })
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn factors(&self) -> &[ModeFactor] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// Reconstructed dimensions `(I_1, ..., I_d)`.
    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.shape().0).collect()
    }

    /// Multilinear ranks `(J_1, ..., J_d)`.
    pub fn ranks(&self) -> Vec<usize> {
        self.core.dims().to_vec()
    }
}

/// Core solve with its round-off bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSolve {
    pub core: DenseTensor,
    /// Number of negative round-off entries clamped to zero.
    pub clamped: usize,
}

fn check_factors(a: &DenseTensor, factors: &[ModeFactor]) -> Result<()> {
    if factors.len() != a.order() {
        return Err(Error::Shape(format!("{} factors for a {}-way tensor", factors.len(), a.order())));
    }
    for (n, (f, &i)) in factors.iter().zip(a.dims()).enumerate() {
        if f.shape().0 != i {
            return Err(Error::Shape(format!("mode {n}: factor has {} rows, tensor has {i}", f.shape().0)));
        }
    }
    Ok(())
}

/// `max(A x_1 U1^T ... x_d Ud^T, 0)`.
pub fn solve_core(a: &DenseTensor, factors: &[ModeFactor]) -> Result<DenseTensor> {
    solve_core_detailed(a, factors).map(|s| s.core)
}

pub fn solve_core_detailed(a: &DenseTensor, factors: &[ModeFactor]) -> Result<CoreSolve> {
    check_factors(a, factors)?;
    let mut s = a.clone();
    for (n, f) in factors.iter().enumerate() {
        if let ModeFactor::Factor(u) = f {
            s = s.mode_product(&u.matrix().transpose(), n)?;
        }
    }
    let clamped = s.values().iter().filter(|&&v| v < 0.0).count();
    let core = if clamped > 0 { s.map(|v| v.max(0.0)) } else { s };
    Ok(CoreSolve { core, clamped })
}

/// `S x_1 U1 ... x_d Ud`.
pub fn reconstruct(model: &OntdModel) -> Result<DenseTensor> {
    let mut t = model.core.clone();
    for (n, f) in model.factors.iter().enumerate() {
        if let ModeFactor::Factor(u) = f {
            t = t.mode_product(u.matrix(), n)?;
        }
    }
    Ok(t)
}

/// Per class `j` of mode `n`: `(||S_(n)(j,:)||, ||A_(n)(T_j,:)||)`.
///
/// Identity modes use singleton classes `T_j = {j}`.
pub fn rowwise_norm_check(a: &DenseTensor, model: &OntdModel, mode: usize) -> Result<Vec<(f64, f64)>> {
    check_factors(a, &model.factors)?;
    let s = model.core.unfold(mode)?;
    let af = a.unfold(mode)?;
    let row_norm = |m: &crate::tensor::DenseMatrix, i: usize| m.row(i).iter().map(|v| v * v).sum::<f64>();
    let classes: Vec<Vec<usize>> = match &model.factors[mode] {
        ModeFactor::Identity(n) => (0..*n).map(|j| alloc::vec![j]).collect(),
        ModeFactor::Factor(u) => u.assignment().index_sets,
    };
    Ok(classes
        .iter()
        .enumerate()
        .map(|(j, set)| {
            let a_norm = set.iter().map(|&t| row_norm(&af, t)).sum::<f64>();
            (libm::sqrt(row_norm(&s, j)), libm::sqrt(a_norm))
        })
        .collect())
}
