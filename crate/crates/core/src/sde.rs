//! SDE models and the Euler-Maruyama scheme.
//!
//! The scheme freezes coefficients at the left grid point:
//! `X_{k+1} = X_k + b(t_k, X_k) h + sigma(t_k, X_k) dB_k` with `t_k = k T / n`
//! computed from the step index, never by flooring `s n / T`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::randomkit::{IncrementGrid, SeedSpec};

/// Drift and diffusion of a Markovian SDE.
pub trait Coefficients: Send + Sync {
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);
    /// Writes the d x d diffusion matrix in row-major order.
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Closed-form X(T) given the Brownian endpoint, for models where the
    /// scheme is exact. Lets every step count produce the same bits.
    fn exact_terminal(&self, _x0: &[f64], _horizon: f64, _brownian: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Regularity metadata attached to a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub sup_drift: f64,
    pub lip_space: f64,
    pub holder_time: f64,
    pub a_lower: f64,
    pub a_upper: f64,
}

#[derive(Clone)]
pub struct SdeModel {
    name: String,
    dim: usize,
    horizon: f64,
    x0: Vec<f64>,
    coeffs: Arc<dyn Coefficients>,
    meta: ModelMeta,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("x0", &self.x0)
            .field("meta", &self.meta)
            .finish()
    }
}

#[derive(Debug, Clone)]
struct Constant {
    mu: Vec<f64>,
    sigma: f64,
}

impl Coefficients for Constant {
    fn drift(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.mu);
    }

    fn diffusion(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        let d = self.mu.len();
        out.fill(0.0);
        for i in 0..d {
            out[i * d + i] = self.sigma;
        }
    }

    fn exact_terminal(&self, x0: &[f64], horizon: f64, brownian: &[f64]) -> Option<Vec<f64>> {
        Some(
            x0.iter()
                .zip(&self.mu)
                .zip(brownian)
                .map(|((x, m), b)| x + m * horizon + self.sigma * b)
                .collect(),
        )
    }
}

/// b_i = sin(x_i), sigma = diag(1 + 0.1 cos(x_i)).
#[derive(Debug, Clone, Copy)]
struct SinCos {
    dim: usize,
}

impl Coefficients for SinCos {
    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi.sin();
        }
    }

    fn diffusion(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.fill(0.0);
        for i in 0..d {
            out[i * d + i] = 1.0 + 0.1 * x[i].cos();
        }
    }
}

struct FnCoefficients<B, S> {
    drift: B,
    diffusion: S,
}

impl<B, S> Coefficients for FnCoefficients<B, S>
where
    B: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
    S: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.drift)(t, x, out)
    }

    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.diffusion)(t, x, out)
    }
}

fn check_common(dim: usize, horizon: f64, x0: &[f64]) -> Result<()> {
    if dim == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    if x0.len() != dim {
        return Err(invalid(format!(
            "initial point has {} coordinates, model dimension is {dim}",
            x0.len()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("initial point must be finite"));
    }
    Ok(())
}

impl SdeModel {
    /// dX = mu dt + sigma dB with sigma a multiple of the identity. Exact under EM.
    pub fn constant(mu: Vec<f64>, sigma: f64, x0: Vec<f64>, horizon: f64) -> Result<Self> {
        let dim = mu.len();
        check_common(dim, horizon, &x0)?;
        if !sigma.is_finite() || mu.iter().any(|m| !m.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        let sup_drift = mu.iter().map(|m| m * m).sum::<f64>().sqrt();
        Ok(Self {
            name: "constant".into(),
            dim,
            horizon,
            x0,
            coeffs: Arc::new(Constant { mu, sigma }),
            meta: ModelMeta {
                sup_drift,
                lip_space: 0.0,
                holder_time: 0.0,
                a_lower: sigma * sigma,
                a_upper: sigma * sigma,
            },
        })
    }

    /// b = sin x, sigma = 1 + 0.1 cos x in one dimension.
    pub fn sincos_1d(x0: f64, horizon: f64) -> Result<Self> {
        Self::sincos(vec![x0], horizon, "sincos")
    }

    /// Coordinate-wise sin/cos model in two dimensions with diagonal diffusion.
    pub fn sincos_2d(x0: [f64; 2], horizon: f64) -> Result<Self> {
        Self::sincos(x0.to_vec(), horizon, "sincos2d")
    }

    fn sincos(x0: Vec<f64>, horizon: f64, name: &str) -> Result<Self> {
        let dim = x0.len();
        check_common(dim, horizon, &x0)?;
        Ok(Self {
            name: name.into(),
            dim,
            horizon,
            x0,
            coeffs: Arc::new(SinCos { dim }),
            meta: ModelMeta {
                sup_drift: (dim as f64).sqrt(),
                lip_space: 1.0,
                holder_time: 0.0,
                a_lower: 0.81,
                a_upper: 1.21,
            },
        })
    }

    /// A model from user closures. `meta` is trusted; use [`check_regularity`] to probe it.
    pub fn from_fns<B, S>(
        name: impl Into<String>,
        x0: Vec<f64>,
        horizon: f64,
        drift: B,
        diffusion: S,
        meta: ModelMeta,
    ) -> Result<Self>
    where
        B: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        S: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        let dim = x0.len();
        check_common(dim, horizon, &x0)?;
        Ok(Self {
            name: name.into(),
            dim,
            horizon,
            x0,
            coeffs: Arc::new(FnCoefficients { drift, diffusion }),
            meta,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn coefficients(&self) -> &dyn Coefficients {
        self.coeffs.as_ref()
    }
}

/// Probes the stated ellipticity and drift bounds at `samples` random points
/// `(t, x)` with `t` uniform on `[0, T]` and `x` uniform on `[-radius, radius]^d`.
pub fn check_regularity(model: &SdeModel, samples: usize, radius: f64, seed: u64) -> Result<()> {
    let d = model.dim;
    let meta = model.meta;
    let mut rng = SeedSpec::auxiliary(seed, 0).rng();
    let mut x = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut s = vec![0.0; d * d];
    let mut xi = vec![0.0; d];
    let tol = 1e-12;
    for _ in 0..samples {
        let t = rng.random::<f64>() * model.horizon;
        for v in x.iter_mut() {
            *v = radius * (2.0 * rng.random::<f64>() - 1.0);
        }
        model.coeffs.drift(t, &x, &mut b);
        let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_b > meta.sup_drift * (1.0 + tol) + tol {
            return Err(invalid(format!(
                "|b| = {norm_b} exceeds sup_drift {} at x = {x:?}",
                meta.sup_drift
            )));
        }
        model.coeffs.diffusion(t, &x, &mut s);
        for v in xi.iter_mut() {
            *v = 2.0 * rng.random::<f64>() - 1.0;
        }
        let n2 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n2 == 0.0 {
            continue;
        }
        xi.iter_mut().for_each(|v| *v /= n2);
        // <a xi, xi> = |sigma^T xi|^2
        let quad: f64 = (0..d)
            .map(|j| {
                let c: f64 = (0..d).map(|i| s[i * d + j] * xi[i]).sum();
                c * c
            })
            .sum();
        if quad < meta.a_lower * (1.0 - tol) - tol || quad > meta.a_upper * (1.0 + tol) + tol {
            return Err(invalid(format!(
                "<a xi, xi> = {quad} outside [{}, {}] at x = {x:?}",
                meta.a_lower, meta.a_upper
            )));
        }
    }
    Ok(())
}

/// X^{(n)}(T) together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSample {
    pub value: Vec<f64>,
    pub n_steps: usize,
    pub seed: Option<SeedSpec>,
}

fn check_grid(model: &SdeModel, grid: &IncrementGrid) -> Result<()> {
    if grid.dim() != model.dim {
        return Err(invalid(format!(
            "increment dimension {} does not match model dimension {}",
            grid.dim(),
            model.dim
        )));
    }
    if (grid.horizon() - model.horizon).abs() > 1e-12 * model.horizon {
        return Err(invalid(format!(
            "increment horizon {} does not match model horizon {}",
            grid.horizon(),
            model.horizon
        )));
    }
    Ok(())
}

/// Runs the scheme with exactly `grid.steps()` steps.
fn integrate(model: &SdeModel, grid: &IncrementGrid) -> Result<TerminalSample> {
    let d = model.dim;
    let n = grid.steps();
    if let Some(value) = model
        .coeffs
        .exact_terminal(&model.x0, model.horizon, &grid.terminal())
    {
        return Ok(TerminalSample {
            value,
            n_steps: n,
            seed: grid.seed(),
        });
    }
    let h = model.horizon / n as f64;
    let mut x = model.x0.clone();
    let mut b = vec![0.0; d];
    let mut s = vec![0.0; d * d];
    for k in 0..n {
        let t = model.horizon * k as f64 / n as f64;
        model.coeffs.drift(t, &x, &mut b);
        model.coeffs.diffusion(t, &x, &mut s);
        let db = grid.increment(k);
        if d == 1 {
            x[0] += b[0] * h + s[0] * db[0];
        } else {
            let x_old = x.clone();
            for i in 0..d {
                let noise: f64 = (0..d).map(|j| s[i * d + j] * db[j]).sum();
                x[i] = x_old[i] + b[i] * h + noise;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "non-finite state at step {} of {n}",
                k + 1
            )));
        }
    }
    Ok(TerminalSample {
        value: x,
        n_steps: n,
        seed: grid.seed(),
    })
}

/// Euler-Maruyama with `n` steps. `n` must divide the number of increments in
/// `grid`; when it is smaller the increments are summed down first.
pub fn euler_maruyama(model: &SdeModel, n: usize, grid: &IncrementGrid) -> Result<TerminalSample> {
    check_grid(model, grid)?;
    if n == 0 || !grid.steps().is_multiple_of(n) {
        return Err(invalid(format!(
            "step count {n} does not divide {} increments",
            grid.steps()
        )));
    }
    if n == grid.steps() {
        integrate(model, grid)
    } else {
        integrate(model, &grid.coarsen(grid.steps() / n)?)
    }
}

/// Fine run on all increments and coarse run on increments summed in blocks of `m`,
/// both driven by the same Brownian path.
pub fn coupled_pair(
    model: &SdeModel,
    grid: &IncrementGrid,
    m: usize,
) -> Result<(TerminalSample, TerminalSample)> {
    check_grid(model, grid)?;
    let coarse_grid = grid.coarsen(m)?;
    let fine = integrate(model, grid)?;
    let coarse = integrate(model, &coarse_grid)?;
    Ok((fine, coarse))
}

/// Truth proxy for X(T): the scheme at the finest resolution the grid offers.
pub fn reference_terminal(model: &SdeModel, grid: &IncrementGrid) -> Result<TerminalSample> {
    check_grid(model, grid)?;
    integrate(model, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomkit::generate_increments;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn constant_model_is_exact() {
        let model = SdeModel::constant(vec![0.1], 0.2, vec![0.0], 1.0).unwrap();
        let grid = generate_increments(&SeedSpec::path(5, 0), 1, 1.0, 1024).unwrap();
        let b_t = grid.terminal()[0];
        for n in [1, 2, 8, 64, 1024] {
            let x = euler_maruyama(&model, n, &grid).unwrap();
            assert!(rel_close(x.value[0], 0.1 + 0.2 * b_t, 1e-12));
            assert_eq!(x.n_steps, n);
        }
    }

    #[test]
    fn stepping_loop_is_exact_for_constant_coefficients() {
        // Same dynamics without the closed-form shortcut.
        let stepped = SdeModel::from_fns(
            "constant-stepped",
            vec![0.0],
            1.0,
            |_t, _x: &[f64], b: &mut [f64]| b[0] = 0.1,
            |_t, _x: &[f64], s: &mut [f64]| s[0] = 0.2,
            SdeModel::constant(vec![0.1], 0.2, vec![0.0], 1.0).unwrap().meta,
        )
        .unwrap();
        for n in 1..=256 {
            let grid = generate_increments(&SeedSpec::path(6, n as u64), 1, 1.0, n).unwrap();
            let x = euler_maruyama(&stepped, n, &grid).unwrap();
            assert!(rel_close(x.value[0], 0.1 + 0.2 * grid.terminal()[0], 1e-12));
        }
    }

    #[test]
    fn coarse_grids_share_the_endpoint() {
        let grid = generate_increments(&SeedSpec::path(2, 2), 2, 1.0, 96).unwrap();
        for m in [2, 3, 32, 96] {
            assert_eq!(grid.coarsen(m).unwrap().terminal(), grid.terminal());
        }
        let mut edited = grid.clone();
        edited.as_mut_slice()[0] += 1.0;
        assert!((edited.terminal()[0] - grid.terminal()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coefficients_stay_put() {
        let model = SdeModel::constant(vec![0.0, 0.0], 0.0, vec![1.5, -2.0], 2.0).unwrap();
        let grid = generate_increments(&SeedSpec::path(5, 1), 2, 2.0, 16).unwrap();
        for n in [1, 4, 16] {
            assert_eq!(euler_maruyama(&model, n, &grid).unwrap().value, vec![1.5, -2.0]);
        }
    }

    #[test]
    fn coupled_pair_constant_and_identity() {
        let model = SdeModel::constant(vec![0.3], 0.7, vec![1.0], 1.0).unwrap();
        let grid = generate_increments(&SeedSpec::path(8, 3), 1, 1.0, 64).unwrap();
        for m in [2, 4, 8] {
            let (f, c) = coupled_pair(&model, &grid, m).unwrap();
            assert!(rel_close(f.value[0], c.value[0], 1e-12));
        }
        let sc = SdeModel::sincos_1d(0.0, 1.0).unwrap();
        let (f, c) = coupled_pair(&sc, &grid, 1).unwrap();
        assert_eq!(f, c);
        assert!(coupled_pair(&sc, &grid, 3).is_err());
    }

    #[test]
    fn dimension_and_divisibility_errors() {
        let model = SdeModel::sincos_2d([0.0, 0.0], 1.0).unwrap();
        let grid = generate_increments(&SeedSpec::path(1, 0), 1, 1.0, 8).unwrap();
        assert!(matches!(
            euler_maruyama(&model, 8, &grid),
            Err(Error::InvalidArgument(_))
        ));
        let grid2 = generate_increments(&SeedSpec::path(1, 0), 2, 1.0, 8).unwrap();
        assert!(euler_maruyama(&model, 3, &grid2).is_err());
        assert!(euler_maruyama(&model, 4, &grid2).is_ok());
    }

    #[test]
    fn blow_up_names_the_step() {
        let model = SdeModel::from_fns(
            "explode",
            vec![1.0],
            1.0,
            |_, x, out| out[0] = x[0] * x[0] * 1e200,
            |_, _, out| out[0] = 0.0,
            ModelMeta {
                sup_drift: f64::INFINITY,
                lip_space: f64::INFINITY,
                holder_time: 0.0,
                a_lower: 0.0,
                a_upper: 0.0,
            },
        )
        .unwrap();
        let grid = generate_increments(&SeedSpec::path(1, 0), 1, 1.0, 4).unwrap();
        match euler_maruyama(&model, 4, &grid) {
            Err(Error::NumericFailure(msg)) => assert!(msg.contains("step 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn builtin_models_satisfy_their_metadata() {
        check_regularity(&SdeModel::sincos_1d(0.0, 1.0).unwrap(), 10_000, 20.0, 1).unwrap();
        check_regularity(&SdeModel::sincos_2d([0.0, 0.0], 1.0).unwrap(), 10_000, 20.0, 2).unwrap();
        check_regularity(
            &SdeModel::constant(vec![0.1, -0.2], 0.5, vec![0.0, 0.0], 1.0).unwrap(),
            1000,
            5.0,
            3,
        )
        .unwrap();
    }

    #[test]
    fn perturbing_an_increment_only_moves_later_states() {
        let model = SdeModel::sincos_1d(0.2, 1.0).unwrap();
        let grid = generate_increments(&SeedSpec::path(11, 0), 1, 1.0, 32).unwrap();
        let k = 20;
        let mut perturbed = grid.clone();
        perturbed.as_mut_slice()[k] += 0.5;
        let states = |g: &IncrementGrid| {
            let h = 1.0 / 32.0;
            let mut x = 0.2f64;
            let mut out = vec![x];
            for i in 0..32 {
                x += x.sin() * h + (1.0 + 0.1 * x.cos()) * g.as_slice()[i];
                out.push(x);
            }
            out
        };
        let a = states(&grid);
        let b = states(&perturbed);
        for i in 0..=k {
            assert_eq!(a[i], b[i]);
        }
        for i in (k + 1)..=32 {
            assert_ne!(a[i], b[i]);
        }
        assert_eq!(euler_maruyama(&model, 32, &grid).unwrap().value[0], a[32]);
        assert_eq!(euler_maruyama(&model, 32, &perturbed).unwrap().value[0], b[32]);
    }

    #[test]
    fn sincos_strong_order_at_least_one_half() {
        let model = SdeModel::sincos_1d(0.0, 1.0).unwrap();
        let ns = [8usize, 16, 32, 64];
        let mut sq = [0.0; 4];
        let mut pair = [0.0; 4];
        let paths = 2000;
        for i in 0..paths {
            let grid = generate_increments(&SeedSpec::path(11, i), 1, 1.0, 512).unwrap();
            let truth = reference_terminal(&model, &grid).unwrap().value[0];
            for (k, &n) in ns.iter().enumerate() {
                let x = euler_maruyama(&model, n, &grid).unwrap().value[0];
                sq[k] += (x - truth).powi(2) / paths as f64;
                let (f, c) = coupled_pair(&model, &grid.coarsen(512 / n).unwrap(), 2).unwrap();
                pair[k] += (f.value[0] - c.value[0]).powi(2) / paths as f64;
            }
        }
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let l2: Vec<f64> = sq.iter().map(|v| v.sqrt()).collect();
        let strong = crate::stats::log_log_fit(&xs, &l2).unwrap();
        let coupled = crate::stats::log_log_fit(&xs, &pair).unwrap();
        assert!(strong.slope <= -0.35, "{}", strong.slope);
        assert!(coupled.slope <= -0.7, "{}", coupled.slope);
    }
}
