//! Ground-truth generators: exactly decomposable nonnegative orthogonal
//! Tucker tensors, noisy variants, and a toy hyperspectral unmixing cube.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::core_solver::{reconstruct, ModeFactor, OntdModel};
use crate::error::{Error, Result};
use crate::recovery::FactorMatrix;
use crate::rng::{component_rng, stream, StreamRng};
use crate::tensor::{DenseMatrix, DenseTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub seed: u64,
    /// Noise Frobenius norm relative to the clean tensor.
    pub noise_level: f64,
    pub min_cluster_size: usize,
}

impl SynthSpec {
    pub fn new(dims: Vec<usize>, ranks: Vec<usize>, seed: u64) -> Self {
        Self { dims, ranks, seed, noise_level: 0.0, min_cluster_size: 1 }
    }

    pub fn with_noise(mut self, noise_level: f64) -> Self {
        self.noise_level = noise_level;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.len() != self.ranks.len() {
            return Err(Error::InvalidArgument(format!(
                "dims {:?} and ranks {:?} must be non-empty and of equal length",
                self.dims, self.ranks
            )));
        }
        for (&i, &j) in self.dims.iter().zip(&self.ranks) {
            check_sizes(i, j, self.min_cluster_size)?;
        }
        if !(self.noise_level >= 0.0) || !self.noise_level.is_finite() {
            return Err(Error::InvalidArgument(format!("noise level {}", self.noise_level)));
        }
        Ok(())
    }
}

fn check_sizes(rows: usize, cols: usize, min_cluster_size: usize) -> Result<()> {
    if cols == 0 || min_cluster_size == 0 || min_cluster_size * cols > rows {
        return Err(Error::InvalidArgument(format!(
            "cannot split {rows} rows into {cols} clusters of at least {min_cluster_size}"
        )));
    }
    Ok(())
}

/// Random surjective row-to-cluster map with every cluster holding at least
/// `min_cluster_size` rows.
fn random_clusters(rows: usize, k: usize, min_cluster_size: usize, rng: &mut StreamRng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(rng);
    let mut labels = vec![0; rows];
    for (pos, &row) in order.iter().enumerate() {
        labels[row] = if pos < k * min_cluster_size {
            pos / min_cluster_size
        } else {
            rng.random_range(0..k)
        };
    }
    labels
}

/// Random nonnegative orthonormal factor: block structure with entries drawn
/// from `U(0.5, 1.5)` and unit-normalized columns.
pub fn gen_factor(rows: usize, cols: usize, min_cluster_size: usize, seed: u64) -> Result<FactorMatrix> {
    let mut rng = component_rng(seed, stream::FACTOR);
    gen_factor_with_rng(rows, cols, min_cluster_size, &mut rng)
}

fn gen_factor_with_rng(
    rows: usize,
    cols: usize,
    min_cluster_size: usize,
    rng: &mut StreamRng,
) -> Result<FactorMatrix> {
    check_sizes(rows, cols, min_cluster_size)?;
    let labels = random_clusters(rows, cols, min_cluster_size, rng);
    let mut u = DenseMatrix::zeros(rows, cols);
    for (i, &j) in labels.iter().enumerate() {
        u[(i, j)] = rng.random_range(0.5..1.5);
    }
    for j in 0..cols {
        let norm = libm::sqrt(u.column(j).iter().map(|v| v * v).sum());
        for i in 0..rows {
            u[(i, j)] /= norm;
        }
    }
    FactorMatrix::new(u)
}

/// Adds Gaussian noise of Frobenius norm `level * ||t||_F`, then clamps at 0.
fn add_clamped_noise(t: &DenseTensor, level: f64, rng: &mut StreamRng) -> Result<DenseTensor> {
    if level == 0.0 {
        return Ok(t.clone());
    }
    let noise: Vec<f64> = (0..t.len()).map(|_| rng.sample(StandardNormal)).collect();
    let norm = libm::sqrt(noise.iter().map(|v| v * v).sum());
    let scale = if norm > 0.0 { level * t.frob_norm() / norm } else { 0.0 };
    let values = t.values().iter().zip(&noise).map(|(a, e)| (a + scale * e).max(0.0)).collect();
    DenseTensor::new(t.dims().to_vec(), values)
}

/// Returns `(A, truth)` with `A = reconstruct(truth)` plus optional noise.
/// Core entries are drawn from the open interval `(0, 1)`.
pub fn gen_tensor(spec: &SynthSpec) -> Result<(DenseTensor, OntdModel)> {
    spec.validate()?;
    let factors = spec
        .dims
        .iter()
        .zip(&spec.ranks)
        .enumerate()
        .map(|(n, (&i, &j))| {
            let mut rng = component_rng(spec.seed, stream::FACTOR + n as u64);
            gen_factor_with_rng(i, j, spec.min_cluster_size, &mut rng).map(ModeFactor::Factor)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = component_rng(spec.seed, stream::CORE);
    let core = DenseTensor::from_fn(spec.ranks.clone(), |_| rng.sample(Open01))?;
    let truth = OntdModel::new(core, factors)?;
    let clean = reconstruct(&truth)?;
    let mut rng = component_rng(spec.seed, stream::NOISE);
    let a = add_clamped_noise(&clean, spec.noise_level, &mut rng)?;
    Ok((a, truth))
}

/// `count` noise-free 3-way specs with dims in `6..=20` and ranks in `1..=5`.
///
/// Ranks are redrawn until `J_n^2 <= J_1 J_2 J_3` for every mode, which keeps
/// each unfolding at full row rank `J_n`; otherwise the stated rank of a mode
/// can exceed the rank of its unfolding and the factor is not identifiable.
/// Spec `k` carries seed `seed + k`.
pub fn suite(count: usize, seed: u64) -> Vec<SynthSpec> {
    let mut rng = component_rng(seed, stream::SUITE);
    (0..count as u64)
        .map(|k| {
            let dims: Vec<usize> = (0..3).map(|_| rng.random_range(6..=20)).collect();
            loop {
                let ranks: Vec<usize> = dims.iter().map(|_| rng.random_range(1..=5)).collect();
                let p: usize = ranks.iter().product();
                if ranks.iter().all(|&j| j * j <= p) {
                    return SynthSpec::new(dims, ranks, seed.wrapping_add(k));
                }
            }
        })
        .collect()
}

/// Toy hyperspectral cube of shape `bands x rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmixingInstance {
    pub tensor: DenseTensor,
    /// One 0/1 map per material over the `rows x cols` grid (row-major).
    pub masks: Vec<Vec<f64>>,
    /// One spectrum per material, length `bands`.
    pub spectra: Vec<Vec<f64>>,
    /// Material whose spectrum dominates each band.
    pub band_material: Vec<usize>,
}

/// `r` materials on a Voronoi partition of the grid (sites drawn without
/// replacement, ties to the lowest site). Each material's spectrum is
/// `U(0.5, 1.5)` on its own band group and `U(0, 0.05)` elsewhere; band
/// groups are a random surjective partition of the bands.
pub fn gen_unmixing(
    bands: usize,
    rows: usize,
    cols: usize,
    r: usize,
    noise_level: f64,
    seed: u64,
) -> Result<UnmixingInstance> {
    check_sizes(bands, r, 1)?;
    if r > rows * cols {
        return Err(Error::InvalidArgument(format!("{r} materials on a {rows}x{cols} grid")));
    }
    let mut rng = component_rng(seed, stream::UNMIXING);
    let band_material = random_clusters(bands, r, 1, &mut rng);
    let spectra: Vec<Vec<f64>> = (0..r)
        .map(|m| {
            band_material
                .iter()
                .map(|&owner| if owner == m { rng.random_range(0.5..1.5) } else { rng.random_range(0.0..0.05) })
                .collect()
        })
        .collect();

    let sites = rand::seq::index::sample(&mut rng, rows * cols, r).into_vec();
    let pixels = rows * cols;
    let mut material = vec![0usize; pixels];
    for (p, owner) in material.iter_mut().enumerate() {
        let (y, x) = ((p / cols) as f64, (p % cols) as f64);
        let mut best = f64::INFINITY;
        for (m, &s) in sites.iter().enumerate() {
            let (sy, sx) = ((s / cols) as f64, (s % cols) as f64);
            let d = (y - sy) * (y - sy) + (x - sx) * (x - sx);
            if d < best {
                best = d;
                *owner = m;
            }
        }
    }
    let masks = (0..r)
        .map(|m| material.iter().map(|&o| if o == m { 1.0 } else { 0.0 }).collect())
        .collect();
    let clean = DenseTensor::from_fn(vec![bands, rows, cols], |idx| {
        spectra[material[idx[1] * cols + idx[2]]][idx[0]]
    })?;
    let mut rng = component_rng(seed, stream::NOISE);
    let tensor = add_clamped_noise(&clean, noise_level, &mut rng)?;
    Ok(UnmixingInstance { tensor, masks, spectra, band_material })
}
