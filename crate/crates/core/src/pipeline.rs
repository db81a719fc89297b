//! Full and partial ONTD, plus the evaluation metrics.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::admm::{AdmmParams, AdmmSolver, ModeSolve};
use crate::core_solver::{reconstruct, solve_core_detailed, ModeFactor, OntdModel};
use crate::error::{Error, Result};
use crate::recovery::{
    exact_factor_from_unfolding, greedy_match, recover_factor_with_rng, ClusterAssignment,
    FactorMatrix, DEFAULT_PROPORTIONAL_TOL,
};
use crate::rng::{component_rng, stream};
use crate::tensor::{DenseMatrix, DenseTensor};

/// How factors are obtained from the unfoldings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorRoute {
    /// ADMM projector solve followed by eigenvector clustering.
    Admm,
    /// Proportional-row grouping; only valid on exactly decomposable input.
    Exact { tol: f64 },
}

impl Default for FactorRoute {
    fn default() -> Self {
        FactorRoute::Admm
    }
}

impl FactorRoute {
    pub fn exact() -> Self {
        FactorRoute::Exact { tol: DEFAULT_PROPORTIONAL_TOL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeConfig {
    pub ranks: Vec<usize>,
    /// 0-based modes whose factor is fixed to the identity.
    pub identity_modes: Vec<usize>,
    pub params: AdmmParams,
    pub seed: u64,
    pub route: FactorRoute,
}

impl DecomposeConfig {
    pub fn new(ranks: Vec<usize>) -> Self {
        Self {
            ranks,
            identity_modes: Vec::new(),
            params: AdmmParams::default(),
            seed: 0,
            route: FactorRoute::Admm,
        }
    }

    pub fn is_identity(&self, mode: usize) -> bool {
        self.identity_modes.contains(&mode)
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        if self.ranks.len() != dims.len() {
            return Err(Error::InvalidArgument(format!(
                "{} ranks for a {}-way tensor",
                self.ranks.len(),
                dims.len()
            )));
        }
        if let Some(&m) = self.identity_modes.iter().find(|&&m| m >= dims.len()) {
            return Err(Error::ModeOutOfRange { mode: m, order: dims.len() });
        }
        for (n, (&j, &i)) in self.ranks.iter().zip(dims).enumerate() {
            if self.is_identity(n) {
                if j != i {
                    return Err(Error::InvalidArgument(format!(
                        "identity mode {n} needs rank {i}, got {j}"
                    )));
                }
            } else if j == 0 || j > i {
                return Err(Error::InvalidArgument(format!("mode {n}: rank {j} outside 1..={i}")));
            }
        }
        if let FactorRoute::Exact { tol } = self.route {
            if !(tol >= 0.0) {
                return Err(Error::InvalidArgument(format!("grouping tolerance {tol}")));
            }
        }
        self.params.validate()
    }
}

/// Result of factoring one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub mode: usize,
    pub factor: FactorMatrix,
    pub assignment: ClusterAssignment,
    /// ADMM diagnostics; `None` on the exact route.
    pub solve: Option<ModeSolve>,
}

impl ModeReport {
    pub fn converged(&self) -> bool {
        self.solve.as_ref().is_none_or(|s| s.converged)
    }

    /// `||K^2 - K||_F` of the ADMM projector.
    pub fn idempotency_defect(&self) -> Option<f64> {
        self.solve.as_ref().map(ModeSolve::idempotency_defect)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeReport {
    pub model: OntdModel,
    /// One entry per mode; `None` for identity modes.
    pub modes: Vec<Option<ModeReport>>,
    /// `||A - A_hat||_F / ||A||_F`.
    pub relative_error: f64,
    pub compression_ratio: f64,
    pub space_savings: f64,
    /// Negative core entries clamped to zero.
    pub clamped_core_entries: usize,
    pub warnings: Vec<String>,
    pub reconstruction: DenseTensor,
}

impl DecomposeReport {
    pub fn converged(&self) -> bool {
        self.modes.iter().flatten().all(ModeReport::converged)
    }
}

/// Factors one mode. Modes are independent given `a`, so callers may run
/// them concurrently.
pub fn solve_mode(a: &DenseTensor, mode: usize, cfg: &DecomposeConfig) -> Result<ModeReport> {
    let afold = a.unfold(mode)?;
    let rank = cfg.ranks[mode];
    match cfg.route {
        FactorRoute::Admm => {
            let solve = AdmmSolver::new(&afold, rank, cfg.params)?.run()?;
            let mut rng = component_rng(cfg.seed, stream::KMEANS + mode as u64);
            let (factor, assignment) = recover_factor_with_rng(&solve.k, rank, &mut rng)?;
            Ok(ModeReport { mode, factor, assignment, solve: Some(solve) })
        }
        FactorRoute::Exact { tol } => {
            let factor = exact_factor_from_unfolding(&afold, rank, tol)?;
            let assignment = factor.assignment();
            Ok(ModeReport { mode, factor, assignment, solve: None })
        }
    }
}

/// Core solve, reconstruction and metrics from already-factored modes.
pub fn assemble(a: &DenseTensor, cfg: &DecomposeConfig, modes: Vec<Option<ModeReport>>) -> Result<DecomposeReport> {
    if modes.len() != a.order() {
        return Err(Error::Shape(format!("{} mode reports for a {}-way tensor", modes.len(), a.order())));
    }
    let factors: Vec<ModeFactor> = modes
        .iter()
        .enumerate()
        .map(|(n, m)| match m {
            Some(r) => ModeFactor::Factor(r.factor.clone()),
            None => ModeFactor::Identity(a.dims()[n]),
        })
        .collect();
    let solved = solve_core_detailed(a, &factors)?;
    let model = OntdModel::new(solved.core, factors)?;
    let reconstruction = reconstruct(&model)?;
    let relative_error = relative_error(a, &reconstruction)?;
    let compression_ratio = compression_ratio_partial(a.dims(), &cfg.ranks, &cfg.identity_modes);
    let mut warnings = Vec::new();
    for r in modes.iter().flatten() {
        if let Some(s) = r.solve.as_ref().filter(|s| !s.converged) {
            warnings.push(format!(
                "mode {}: stopped at max_iter = {} with residual {:e}",
                r.mode,
                s.iterations,
                s.final_residual()
            ));
        }
    }
    Ok(DecomposeReport {
        model,
        modes,
        relative_error,
        compression_ratio,
        space_savings: 1.0 - compression_ratio,
        clamped_core_entries: solved.clamped,
        warnings,
        reconstruction,
    })
}

/// Runs the whole decomposition, modes in order.
pub fn decompose(a: &DenseTensor, cfg: &DecomposeConfig) -> Result<DecomposeReport> {
    cfg.validate(a.dims())?;
    if !a.is_nonnegative() {
        return Err(Error::InvalidArgument("input tensor has negative entries".into()));
    }
    let modes = (0..a.order())
        .map(|n| if cfg.is_identity(n) { Ok(None) } else { solve_mode(a, n, cfg).map(Some) })
        .collect::<Result<Vec<_>>>()?;
    assemble(a, cfg, modes)
}

/// `||a - b||_F / ||a||_F`; zero when both vanish.
pub fn relative_error(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    let diff = a.frob_distance(b)?;
    let norm = a.frob_norm();
    if norm == 0.0 {
        return if diff == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::InvalidArgument("relative error against a zero tensor".into()))
        };
    }
    Ok(diff / norm)
}

/// Mean of `||orig_k - recon_k||_F / ||orig_k||_F`.
pub fn avg_error(originals: &[DenseTensor], recons: &[DenseTensor]) -> Result<f64> {
    paired_mean(originals, recons, relative_error)
}

/// Mean of `||orig_k - recon_k||_F`.
pub fn avg_abs_error(originals: &[DenseTensor], recons: &[DenseTensor]) -> Result<f64> {
    paired_mean(originals, recons, |a, b| a.frob_distance(b))
}

fn paired_mean(
    originals: &[DenseTensor],
    recons: &[DenseTensor],
    f: impl Fn(&DenseTensor, &DenseTensor) -> Result<f64>,
) -> Result<f64> {
    if originals.is_empty() || originals.len() != recons.len() {
        return Err(Error::InvalidArgument(format!(
            "need equal non-empty lists, got {} and {}",
            originals.len(),
            recons.len()
        )));
    }
    let mut total = 0.0;
    for (a, b) in originals.iter().zip(recons) {
        total += f(a, b)?;
    }
    Ok(total / originals.len() as f64)
}

/// Stored parameters `J_1...J_d + sum I_n J_n` over dense size `I_1...I_d`.
pub fn compression_ratio(dims: &[usize], ranks: &[usize]) -> f64 {
    compression_ratio_partial(dims, ranks, &[])
}

/// `1 - compression_ratio(dims, ranks)`.
pub fn space_savings(dims: &[usize], ranks: &[usize]) -> f64 {
    1.0 - compression_ratio(dims, ranks)
}

/// As [`compression_ratio`], with identity-mode factors not stored.
pub fn compression_ratio_partial(dims: &[usize], ranks: &[usize], identity_modes: &[usize]) -> f64 {
    let core: f64 = ranks.iter().map(|&j| j as f64).product();
    let factors: f64 = dims
        .iter()
        .zip(ranks)
        .enumerate()
        .filter(|(n, _)| !identity_modes.contains(n))
        .map(|(_, (&i, &j))| (i * j) as f64)
        .sum();
    let original: f64 = dims.iter().map(|&i| i as f64).product();
    (core + factors) / original
}

fn l2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Mean cosine between extracted and ground-truth features after greedy
/// one-to-one matching on the cosine matrix.
pub fn similarity(extracted: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    let r = extracted.len();
    if r == 0 || r != truth.len() {
        return Err(Error::InvalidArgument(format!("{r} extracted features vs {} truth", truth.len())));
    }
    let len = truth[0].len();
    if extracted.iter().chain(truth).any(|v| v.len() != len) {
        return Err(Error::Shape("feature vectors differ in length".into()));
    }
    let en: Vec<f64> = extracted.iter().map(|v| l2(v)).collect();
    let tn: Vec<f64> = truth.iter().map(|v| l2(v)).collect();
    if en.iter().chain(&tn).any(|&n| n == 0.0) {
        return Err(Error::InvalidArgument("zero-norm feature vector".into()));
    }
    let cos = DenseMatrix::from_fn(r, r, |i, j| {
        extracted[i].iter().zip(&truth[j]).map(|(a, b)| a * b).sum::<f64>() / (en[i] * tn[j])
    });
    let perm = greedy_match(&cos);
    Ok(perm.iter().enumerate().map(|(i, &j)| cos[(i, j)]).sum::<f64>() / r as f64)
}

/// Hard-cluster feature maps from a partial model with a factor on mode 0
/// only: each position of the remaining modes goes to the mode-0 core slice
/// with the largest value (lowest index on ties). Returns one 0/1 map per
/// slice, flattened last-index-fastest.
pub fn extract_features(model: &OntdModel) -> Result<Vec<Vec<f64>>> {
    let f = model.factors();
    if f.len() < 2 || f[0].is_identity() || f[1..].iter().any(|m| !m.is_identity()) {
        return Err(Error::InvalidArgument(
            "feature extraction needs a factor on mode 0 and identities elsewhere".into(),
        ));
    }
    let core = model.core();
    let r = core.dims()[0];
    let positions = core.len() / r;
    let v = core.values();
    let mut features = vec![vec![0.0; positions]; r];
    for p in 0..positions {
        let mut best = 0;
        for j in 1..r {
            if v[j * positions + p] > v[best * positions + p] {
                best = j;
            }
        }
        features[best][p] = 1.0;
    }
    Ok(features)
}
