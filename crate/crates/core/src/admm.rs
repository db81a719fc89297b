//! Per-mode ADMM solve for the projector `K` of the convex relaxation
//!
//! ```text
//! min 1/2 ||A - K A||_F^2 + theta ||K||_1
//! s.t. tr(K) = J, K = K^T, 0 <= K <= I, K >= 0
//! ```
//!
//! split as `K = X` (l1 term), `K = Z` (nonnegativity) and `K = M` (spectral
//! box). One iteration updates `K`, then the separable block `(X, Z, M)`,
//! then the three multipliers with step `gamma`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::prox::{
    project_nonneg, project_sym_box_psd, project_sym_box_psd_literal, shrinkage, trace_shift,
};
use crate::tensor::DenseMatrix;

/// Upper end of the admissible multiplier step interval, `(1 + sqrt 5) / 2`.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Which M-step to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoxProjection {
    /// Euclidean projection onto `{0 <= M <= I}`.
    #[default]
    Euclidean,
    /// The printed variant with the factor 1/2 on the eigendecomposition of
    /// `B + B^T`. Diagnostic only.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmParams {
    /// Weight of the l1 term.
    pub theta: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    /// Multiplier step, strictly inside `(0, GOLDEN_RATIO)`.
    pub gamma: f64,
    /// Relative primal and dual residual at which the loop stops.
    pub eps: f64,
    pub max_iter: usize,
    pub box_projection: BoxProjection,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self {
            theta: 0.1,
            rho1: 1.0,
            rho2: 1.0,
            rho3: 1.0,
            gamma: 1.6,
            eps: 1e-5,
            max_iter: 1000,
            box_projection: BoxProjection::Euclidean,
        }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{what}: {self:?}")));
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return bad("theta must be finite and >= 0");
        }
        for rho in [self.rho1, self.rho2, self.rho3] {
            if !(rho > 0.0) || !rho.is_finite() {
                return bad("rho1, rho2, rho3 must be finite and > 0");
            }
        }
        if !(self.gamma > 0.0 && self.gamma < GOLDEN_RATIO) {
            return bad("gamma must lie strictly inside (0, (1+sqrt5)/2)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be > 0");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        Ok(())
    }

    fn rho_sum(&self) -> f64 {
        self.rho1 + self.rho2 + self.rho3
    }
}

/// Iterates, multipliers and per-iteration history of one mode solve.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub k: DenseMatrix,
    pub x: DenseMatrix,
    pub z: DenseMatrix,
    pub m: DenseMatrix,
    pub lambda1: DenseMatrix,
    pub lambda2: DenseMatrix,
    pub lambda3: DenseMatrix,
    pub iter: usize,
    /// `(||K-X||, ||K-Z||, ||K-M||)` after each iteration.
    pub residual_history: Vec<[f64; 3]>,
    /// `1/2 ||A - K A||^2 + theta ||X||_1` after each iteration.
    pub objective_history: Vec<f64>,
    /// `max_i rho_i ||B_i(new) - B_i(old)||` for the three split blocks.
    pub dual_history: Vec<f64>,
    /// Largest `|tr(K) - J|` seen after any K-update.
    pub max_trace_deviation: f64,
}

impl AdmmState {
    /// Feasible start `K = X = Z = M = (J/I) I` with zero multipliers.
    pub fn new(size: usize, rank: usize) -> Result<Self> {
        check_rank(size, rank)?;
        let start = DenseMatrix::identity(size).scale(rank as f64 / size as f64);
        let zero = DenseMatrix::zeros(size, size);
        Ok(Self {
            k: start.clone(),
            x: start.clone(),
            z: start.clone(),
            m: start,
            lambda1: zero.clone(),
            lambda2: zero.clone(),
            lambda3: zero,
            iter: 0,
            residual_history: Vec::new(),
            objective_history: Vec::new(),
            dual_history: Vec::new(),
            max_trace_deviation: 0.0,
        })
    }

    pub fn residuals(&self) -> [f64; 3] {
        [
            self.k.frob_distance(&self.x),
            self.k.frob_distance(&self.z),
            self.k.frob_distance(&self.m),
        ]
    }
}

fn check_rank(size: usize, rank: usize) -> Result<()> {
    if rank == 0 || rank > size {
        return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={size}")));
    }
    Ok(())
}

/// `1/2 ||A - K A||_F^2 + theta ||X||_1`, evaluated directly.
pub fn objective(k: &DenseMatrix, x: &DenseMatrix, afold: &DenseMatrix, theta: f64) -> Result<f64> {
    let ka = k.matmul(afold)?;
    let fit = afold.frob_distance(&ka);
    Ok(0.5 * fit * fit + theta * x.l1_norm())
}

/// Outcome of a full mode solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolve {
    pub k: DenseMatrix,
    pub iterations: usize,
    /// False when `max_iter` was reached before the stopping test passed.
    pub converged: bool,
    pub residual_history: Vec<[f64; 3]>,
    pub objective_history: Vec<f64>,
    pub dual_history: Vec<f64>,
    /// `||K - K^T||_F` of the returned iterate.
    pub asymmetry: f64,
    pub max_trace_deviation: f64,
    pub final_state: AdmmState,
}

impl ModeSolve {
    /// Final `max(||K-X||, ||K-Z||, ||K-M||)`.
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().map_or(f64::INFINITY, |r| r[0].max(r[1]).max(r[2]))
    }

    /// `||K^2 - K||_F`.
    pub fn idempotency_defect(&self) -> f64 {
        (&self.k * &self.k).frob_distance(&self.k)
    }
}

/// ADMM solver for one unfolding. The Gram matrix `A A^T` and the Cholesky
/// factor of `A A^T + (rho1+rho2+rho3) I` are computed once here.
#[derive(Debug, Clone)]
pub struct AdmmSolver<'a> {
    afold: &'a DenseMatrix,
    rank: usize,
    params: AdmmParams,
    gram: DenseMatrix,
    shifted: Cholesky,
}

impl<'a> AdmmSolver<'a> {
    pub fn new(afold: &'a DenseMatrix, rank: usize, params: AdmmParams) -> Result<Self> {
        params.validate()?;
        check_rank(afold.rows(), rank)?;
        if !afold.is_finite() {
            return Err(Error::NonFinite("unfolding"));
        }
        let gram = afold.gram();
        let mut shifted_gram = gram.clone();
        for i in 0..gram.rows() {
            shifted_gram[(i, i)] += params.rho_sum();
        }
        let shifted = Cholesky::factor(&shifted_gram)?;
        Ok(Self { afold, rank, params, gram, shifted })
    }

    pub fn params(&self) -> &AdmmParams {
        &self.params
    }

    pub fn init_state(&self) -> AdmmState {
        AdmmState::new(self.afold.rows(), self.rank).expect("rank validated in AdmmSolver::new")
    }

    /// `K = trace_shift((P + Q) (A A^T + rho I)^{-1}, J)` with
    /// `P = A A^T + L1 + L2 + L3` and `Q = rho1 X + rho2 Z + rho3 M`.
    pub fn update_k(&self, s: &AdmmState) -> Result<DenseMatrix> {
        let p = &self.params;
        let n = self.gram.rows();
        let rhs = DenseMatrix::from_fn(n, n, |i, j| {
            self.gram[(i, j)]
                + s.lambda1[(i, j)]
                + s.lambda2[(i, j)]
                + s.lambda3[(i, j)]
                + p.rho1 * s.x[(i, j)]
                + p.rho2 * s.z[(i, j)]
                + p.rho3 * s.m[(i, j)]
        });
        // B H = R with H symmetric, so H B^T = R^T.
        let b = self.shifted.solve(&rhs.transpose())?.transpose();
        trace_shift(&b, self.rank)
    }

    /// Jointly updates `(X, Z, M)` from the current `K`.
    pub fn update_blocks(&self, s: &AdmmState) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix)> {
        let p = &self.params;
        let x = shrinkage(&s.k.add_scaled(&s.lambda1, -1.0 / p.rho1)?, p.theta / p.rho1)?;
        let z = project_nonneg(&s.k.add_scaled(&s.lambda2, -1.0 / p.rho2)?);
        let target = s.k.add_scaled(&s.lambda3, -1.0 / p.rho3)?;
        let m = match p.box_projection {
            BoxProjection::Euclidean => project_sym_box_psd(&target)?,
            BoxProjection::Literal => project_sym_box_psd_literal(&target)?,
        };
        Ok((x, z, m))
    }

    /// `L_i <- L_i - gamma rho_i (K - B_i)`.
    pub fn update_multipliers(&self, s: &AdmmState) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
        let p = &self.params;
        let step = |l: &DenseMatrix, b: &DenseMatrix, rho: f64| {
            DenseMatrix::from_fn(l.rows(), l.cols(), |i, j| {
                l[(i, j)] - p.gamma * rho * (s.k[(i, j)] - b[(i, j)])
            })
        };
        (
            step(&s.lambda1, &s.x, p.rho1),
            step(&s.lambda2, &s.z, p.rho2),
            step(&s.lambda3, &s.m, p.rho3),
        )
    }

    /// `1/2 ||A - K A||^2 + theta ||X||_1` through the cached Gram matrix.
    fn objective_from_gram(&self, s: &AdmmState) -> f64 {
        // ||(I - K) A||^2 = <(I - K) G, I - K>.
        let n = self.gram.rows();
        let e = DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - s.k[(i, j)]);
        let eg = &e * &self.gram;
        let fit: f64 = eg.values().iter().zip(e.values()).map(|(a, b)| a * b).sum();
        0.5 * fit.max(0.0) + self.params.theta * s.x.l1_norm()
    }

    /// One full iteration. Returns the primal residual triple.
    pub fn step(&self, s: &mut AdmmState) -> Result<[f64; 3]> {
        s.k = self.update_k(s)?;
        s.max_trace_deviation = s.max_trace_deviation.max((s.k.trace() - self.rank as f64).abs());
        let (x, z, m) = self.update_blocks(s)?;
        let p = &self.params;
        let dual = (p.rho1 * x.frob_distance(&s.x))
            .max(p.rho2 * z.frob_distance(&s.z))
            .max(p.rho3 * m.frob_distance(&s.m));
        s.x = x;
        s.z = z;
        s.m = m;
        let (l1, l2, l3) = self.update_multipliers(s);
        s.lambda1 = l1;
        s.lambda2 = l2;
        s.lambda3 = l3;
        s.iter += 1;
        let r = s.residuals();
        s.residual_history.push(r);
        s.dual_history.push(dual);
        s.objective_history.push(self.objective_from_gram(s));
        if !s.k.is_finite() {
            return Err(Error::NonFinite("ADMM iterate"));
        }
        Ok(r)
    }

    /// Iterates until both the primal residual `max ||K - B_i||` and the dual
    /// residual `max rho_i ||B_i - B_i(prev)||` are at most
    /// `eps * max(1, ||K||_F)`, or until `max_iter`.
    ///
    /// The dual test matters: from a feasible start the primal residual can
    /// vanish after one step while the iterate is far from optimal.
    pub fn run(&self) -> Result<ModeSolve> {
        let mut s = self.init_state();
        let mut converged = false;
        while s.iter < self.params.max_iter {
            let r = self.step(&mut s)?;
            let dual = *s.dual_history.last().expect("step records the dual residual");
            let tol = self.params.eps * s.k.frob_norm().max(1.0);
            if r[0].max(r[1]).max(r[2]) <= tol && dual <= tol {
                converged = true;
                break;
            }
        }
        Ok(ModeSolve {
            k: s.k.clone(),
            iterations: s.iter,
            converged,
            residual_history: s.residual_history.clone(),
            objective_history: s.objective_history.clone(),
            dual_history: s.dual_history.clone(),
            asymmetry: s.k.asymmetry(),
            max_trace_deviation: s.max_trace_deviation,
            final_state: s,
        })
    }
}

/// Convenience wrapper: build a solver for `afold` and run it.
pub fn run(afold: &DenseMatrix, rank: usize, params: AdmmParams) -> Result<ModeSolve> {
    AdmmSolver::new(afold, rank, params)?.run()
}
