//! Reproducible Brownian increments.
//!
//! Every path owns a ChaCha8 stream selected by `(master_seed, path_index, tag)`.
//! ChaCha is counter based, so any path can be regenerated without touching the
//! others, and the stream id puts distinct paths on disjoint key streams.
//!
//! Level coupling always works from the finest grid: coarse increments are sums
//! of consecutive fine increments, never Brownian-bridge refinements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamTag {
    Path,
    Auxiliary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub path_index: u64,
    pub stream: StreamTag,
}

impl SeedSpec {
    pub fn path(master_seed: u64, path_index: u64) -> Self {
        Self {
            master_seed,
            path_index,
            stream: StreamTag::Path,
        }
    }

    pub fn auxiliary(master_seed: u64, path_index: u64) -> Self {
        Self {
            master_seed,
            path_index,
            stream: StreamTag::Auxiliary,
        }
    }

    /// A fresh generator positioned at the start of this substream.
    pub fn rng(&self) -> ChaCha8Rng {
        assert!(self.path_index < 1 << 63, "path index out of range");
        let tag = match self.stream {
            StreamTag::Path => 0,
            StreamTag::Auxiliary => 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream((self.path_index << 1) | tag);
        rng
    }
}

/// SplitMix64 finaliser; derives independent master seeds for replicates,
/// levels and sub-experiments from one user seed.
pub fn derive_seed(master: u64, label: u64) -> u64 {
    let mut z = master
        .wrapping_add(label.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Brownian increments on a uniform grid of `steps` intervals over `[0, horizon]`.
/// Stored row-major: increment `k` occupies `data[k*dim..(k+1)*dim]`.
#[derive(Debug, Clone)]
pub struct IncrementGrid {
    dim: usize,
    horizon: f64,
    steps: usize,
    data: Vec<f64>,
    seed: Option<SeedSpec>,
    // B(T) summed at the finest resolution this grid descends from, so that
    // coarsened grids report a bit-identical endpoint.
    endpoint: Option<Vec<f64>>,
}

impl PartialEq for IncrementGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.horizon == other.horizon
            && self.steps == other.steps
            && self.data == other.data
            && self.seed == other.seed
    }
}

impl IncrementGrid {
    /// Wraps explicit increments; mainly useful for tests and perturbation studies.
    pub fn from_increments(dim: usize, horizon: f64, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !(horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(invalid("increment count must be a positive multiple of dim"));
        }
        Ok(Self {
            dim,
            horizon,
            steps: data.len() / dim,
            data,
            seed: None,
            endpoint: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The substream these increments were drawn from, if any.
    pub fn seed(&self) -> Option<SeedSpec> {
        self.seed
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn increment(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        self.endpoint = None;
        &mut self.data
    }

    /// B(T) - B(0). Coarsened grids return the endpoint of their finest
    /// ancestor, so every level of one path agrees bit for bit.
    pub fn terminal(&self) -> Vec<f64> {
        if let Some(e) = &self.endpoint {
            return e.clone();
        }
        let mut sum = vec![0.0; self.dim];
        for k in 0..self.steps {
            for (s, v) in sum.iter_mut().zip(self.increment(k)) {
                *s += v;
            }
        }
        sum
    }

    /// Overwrites the increments in place with the stream of `seed`.
    pub fn resample(&mut self, seed: &SeedSpec) {
        let scale = self.step_size().sqrt();
        let mut rng = seed.rng();
        for v in self.data.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = scale * z;
        }
        self.seed = Some(*seed);
        self.endpoint = None;
    }

    /// Sums each block of `factor` consecutive increments.
    pub fn coarsen(&self, factor: usize) -> Result<IncrementGrid> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return Err(invalid(format!(
                "refinement factor {factor} does not divide {} steps",
                self.steps
            )));
        }
        let coarse_steps = self.steps / factor;
        let mut data = vec![0.0; coarse_steps * self.dim];
        for (k, out) in data.chunks_exact_mut(self.dim).enumerate() {
            for j in 0..factor {
                for (o, v) in out.iter_mut().zip(self.increment(k * factor + j)) {
                    *o += v;
                }
            }
        }
        Ok(IncrementGrid {
            dim: self.dim,
            horizon: self.horizon,
            steps: coarse_steps,
            data,
            seed: self.seed,
            endpoint: Some(self.terminal()),
        })
    }
}

/// Draws `n_fine` i.i.d. N(0, (T/n_fine) I_d) increments from the substream `seed`.
pub fn generate_increments(
    seed: &SeedSpec,
    dim: usize,
    horizon: f64,
    n_fine: usize,
) -> Result<IncrementGrid> {
    if n_fine == 0 {
        return Err(invalid("n_fine must be at least 1"));
    }
    if dim == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let mut grid = IncrementGrid {
        dim,
        horizon,
        steps: n_fine,
        data: vec![0.0; n_fine * dim],
        seed: None,
        endpoint: None,
    };
    grid.resample(seed);
    Ok(grid)
}

/// Free-function form of [`IncrementGrid::coarsen`].
pub fn coarsen(grid: &IncrementGrid, factor: usize) -> Result<IncrementGrid> {
    grid.coarsen(factor)
}

/// Number of paths handled by one parallel task. Fixed so that reductions
/// do not depend on the size of the thread pool.
pub(crate) const CHUNK: u64 = 2048;

/// Runs `body` over `0..n` in fixed-size chunks in parallel and returns the
/// per-chunk accumulators in index order.
pub(crate) fn chunked<A, I, F>(start: u64, n: u64, init: I, body: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let lo = start + c * CHUNK;
            let hi = (lo + CHUNK).min(start + n);
            for i in lo..hi {
                body(&mut acc, i);
            }
            acc
        })
        .collect()
}

/// Ordered parallel map with per-worker scratch state.
pub(crate) fn par_map<T, S, I, F>(n: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map_init(init, f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Welford;

    #[test]
    fn same_seed_is_bitwise_identical() {
        let s = SeedSpec::path(42, 7);
        let a = generate_increments(&s, 2, 1.5, 64).unwrap();
        let b = generate_increments(&s, 2, 1.5, 64).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn tags_and_paths_select_different_streams() {
        let a = generate_increments(&SeedSpec::path(1, 0), 1, 1.0, 8).unwrap();
        let b = generate_increments(&SeedSpec::path(1, 1), 1, 1.0, 8).unwrap();
        let c = generate_increments(&SeedSpec::auxiliary(1, 0), 1, 1.0, 8).unwrap();
        assert_ne!(a.as_slice(), b.as_slice());
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn invalid_arguments() {
        let s = SeedSpec::path(0, 0);
        assert!(generate_increments(&s, 1, 1.0, 0).is_err());
        assert!(generate_increments(&s, 1, 0.0, 4).is_err());
        assert!(generate_increments(&s, 1, -1.0, 4).is_err());
    }

    #[test]
    fn coarsen_identity_and_sums() {
        let g = IncrementGrid::from_increments(1, 1.0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(g.coarsen(1).unwrap(), g);
        assert_eq!(g.coarsen(2).unwrap().as_slice(), &[3.0, 7.0]);
        assert!(g.coarsen(3).is_err());
        assert!(g.coarsen(0).is_err());
    }

    #[test]
    fn coarsen_multidimensional() {
        let g = IncrementGrid::from_increments(2, 1.0, vec![1.0, 10.0, 2.0, 20.0]).unwrap();
        let c = g.coarsen(2).unwrap();
        assert_eq!(c.as_slice(), &[3.0, 30.0]);
        assert_eq!(c.steps(), 1);
    }

    #[test]
    fn increment_moments() {
        // 1e5 draws of a single coordinate; mean within 4 SE of 0, variance within 4 SE of h.
        let n_fine = 16;
        let h = 2.0 / n_fine as f64;
        let mut w = Welford::new();
        for i in 0..(100_000 / n_fine as u64) {
            let g = generate_increments(&SeedSpec::path(3, i), 1, 2.0, n_fine).unwrap();
            for &v in g.as_slice() {
                w.push(v);
            }
        }
        let n = w.count() as f64;
        assert!(w.mean().abs() < 4.0 * (h / n).sqrt());
        let var_se = h * (2.0 / n).sqrt();
        assert!((w.variance() - h).abs() < 4.0 * var_se);
    }

    #[test]
    fn chunked_is_ordered() {
        let parts = chunked(0, 5000, Vec::new, |acc: &mut Vec<u64>, i| acc.push(i));
        let flat: Vec<u64> = parts.into_iter().flatten().collect();
        assert_eq!(flat, (0..5000).collect::<Vec<_>>());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(9, 4), derive_seed(9, 4));
    }
}
