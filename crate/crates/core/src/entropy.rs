//! Entropic quantities in bits, and the Gaussian helpers used by rate expansions.

use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::qcore::linalg::{eigh, identity, kron, CMatrix, C64};
use crate::qcore::{partial_trace, BipartiteOperator, Channel, DensityOperator, Subsystem};
use crate::{Error, Result};

/// Eigenvalues at or below this are treated as zero in matrix logarithms.
pub const LOG_CUTOFF: f64 = 1e-12;
/// Largest weight of `ρ` outside `supp σ` still treated as contained.
pub const SUPPORT_TOL: f64 = 1e-9;

/// A divergence-like quantity and its variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicPair {
    pub d: f64,
    pub v: f64,
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// `h(γ) = -γ log γ - (1-γ) log(1-γ)`.
pub fn binary_entropy(gamma: f64) -> f64 {
    -xlog2x(gamma) - xlog2x(1.0 - gamma)
}

/// `v(γ) = γ(1-γ) log²((1-γ)/γ)`.
pub fn binary_entropy_variance(gamma: f64) -> f64 {
    if gamma <= 0.0 || gamma >= 1.0 {
        return 0.0;
    }
    let l = ((1.0 - gamma) / gamma).log2();
    gamma * (1.0 - gamma) * l * l
}

fn standard_normal() -> Normal {
    Normal::standard()
}

pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn gaussian_quantile(eps: f64) -> Result<f64> {
    crate::error::check_unit_interval_open("eps", eps)?;
    let n = standard_normal();
    let mut x = n.inverse_cdf(eps);
    // one Newton polish on Φ(x) = ε
    let pdf = n.pdf(x);
    if pdf > 0.0 {
        x -= (gaussian_cdf(x) - eps) / pdf;
    }
    Ok(x)
}

fn log2_on_support(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let logs: Vec<f64> = values
        .iter()
        .map(|&x| if x > LOG_CUTOFF { x.log2() } else { 0.0 })
        .collect();
    crate::qcore::linalg::from_spectrum(&logs, vectors)
}

/// Umegaki relative entropy `D(ρ‖σ)` and variance `V(ρ‖σ)` for a state `ρ` and PSD `σ`.
pub fn rel_entropy_and_variance(rho: &DensityOperator, sigma: &CMatrix) -> Result<EntropicPair> {
    let d = rho.dim();
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: sigma.nrows(),
        });
    }
    let (sv, su) = eigh(sigma);
    if sv[0] < -crate::qcore::PSD_TOL {
        return Err(Error::NotPsd(sv[0]));
    }
    let r = rho.matrix();
    let mut outside = 0.0;
    for (k, &mu) in sv.iter().enumerate() {
        if mu <= LOG_CUTOFF {
            let q = su.column(k);
            outside += (q.adjoint() * r * q)[(0, 0)].re;
        }
    }
    if outside > SUPPORT_TOL {
        return Err(Error::InfiniteDivergence(outside));
    }
    let (rv, ru) = eigh(r);
    let l = log2_on_support(&rv, &ru) - log2_on_support(&sv, &su);
    let dval = (r * &l).trace().re;
    let m = l - CMatrix::identity(d, d) * C64::new(dval, 0.0);
    let v = (r * &m * &m).trace().re.max(0.0);
    Ok(EntropicPair { d: dval, v })
}

pub fn von_neumann_entropy(rho: &CMatrix) -> f64 {
    -crate::qcore::linalg::eigvalsh(rho)
        .into_iter()
        .map(|x| if x > LOG_CUTOFF { xlog2x(x) } else { 0.0 })
        .sum::<f64>()
}

/// Coherent information `I(A⟩B) = D(ρ_AB ‖ 1_A ⊗ ρ_B)` and its variance.
pub fn coherent_info_and_variance(rho_ab: &BipartiteOperator) -> Result<EntropicPair> {
    let (da, db) = rho_ab.dims();
    let state = rho_ab.to_state()?;
    let rho_b = partial_trace(rho_ab.matrix(), da, db, Subsystem::A);
    rel_entropy_and_variance(&state, &kron(&identity(da), &rho_b))
}

/// Search resolution for [`channel_coherent_information`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentInfoConfig {
    /// Bloch-ball shells (qubit inputs).
    pub radial: usize,
    pub polar: usize,
    pub azimuth: usize,
    /// Random starts for inputs of dimension 3 and 4.
    pub restarts: usize,
    pub seed: u64,
    /// Values within this of the maximum are reported as maximizers.
    pub tol: f64,
    pub max_iter: u64,
}

impl Default for CoherentInfoConfig {
    fn default() -> Self {
        Self {
            radial: 8,
            polar: 64,
            azimuth: 128,
            restarts: 12,
            seed: 0,
            tol: 1e-8,
            max_iter: 4000,
        }
    }
}

impl CoherentInfoConfig {
    pub fn coarse() -> Self {
        Self {
            radial: 4,
            polar: 16,
            azimuth: 32,
            restarts: 6,
            ..Self::default()
        }
    }
}

/// Result of the input-state optimisation.
#[derive(Debug, Clone)]
pub struct ChannelCoherentInfo {
    pub value: f64,
    pub maximizers: Vec<DensityOperator>,
    /// Smallest variance over the maximizers, used for `ε < 1/2`.
    pub variance_below_half: f64,
    /// Largest variance over the maximizers, used for `ε ≥ 1/2`.
    pub variance_above_half: f64,
    pub converged: bool,
}

impl ChannelCoherentInfo {
    pub fn variance(&self, eps: f64) -> f64 {
        if eps < 0.5 {
            self.variance_below_half
        } else {
            self.variance_above_half
        }
    }
}

pub fn coherent_info_at(ch: &Channel, rho: &DensityOperator) -> Result<EntropicPair> {
    coherent_info_and_variance(&ch.output_on_purification(rho)?)
}

fn bloch_state(r: &[f64]) -> DensityOperator {
    let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let s = if norm > 1.0 { 1.0 / norm } else { 1.0 };
    let (x, y, z) = (r[0] * s, r[1] * s, r[2] * s);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.5 * (1.0 + z), 0.0),
            C64::new(0.5 * x, -0.5 * y),
            C64::new(0.5 * x, 0.5 * y),
            C64::new(0.5 * (1.0 - z), 0.0),
        ],
    );
    DensityOperator::new(m).expect("Bloch ball point is a state")
}

fn gram_state(d: usize, p: &[f64]) -> Option<DensityOperator> {
    let g = CMatrix::from_fn(d, d, |i, j| {
        C64::new(p[2 * (i * d + j)], p[2 * (i * d + j) + 1])
    });
    DensityOperator::from_unnormalized(&g * g.adjoint()).ok()
}

struct NegCoherent<'a> {
    ch: &'a Channel,
    qubit: bool,
}

impl NegCoherent<'_> {
    fn state(&self, p: &[f64]) -> Option<DensityOperator> {
        if self.qubit {
            Some(bloch_state(p))
        } else {
            gram_state(self.ch.dim_in(), p)
        }
    }
}

impl CostFunction for NegCoherent<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(match self.state(p) {
            Some(rho) => coherent_info_at(self.ch, &rho)
                .map(|e| -e.d)
                .unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        })
    }
}

fn nelder_mead(
    cost: &NegCoherent,
    start: Vec<f64>,
    step: f64,
    max_iter: u64,
) -> (Vec<f64>, f64, bool) {
    let mut simplex = vec![start.clone()];
    for i in 0..start.len() {
        let mut v = start.clone();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-13)
        .expect("positive tolerance");
    let res = Executor::new(
        NegCoherent {
            ch: cost.ch,
            qubit: cost.qubit,
        },
        solver,
    )
    .configure(|s| s.max_iters(max_iter))
    .run();
    match res {
        Ok(r) => {
            let st = r.state();
            let best = st.get_best_param().cloned().unwrap_or(start);
            let converged = matches!(
                st.get_termination_status(),
                TerminationStatus::Terminated(TerminationReason::SolverConverged)
            );
            (best, st.get_best_cost(), converged)
        }
        Err(_) => (start, f64::INFINITY, false),
    }
}

fn distinct(states: &mut Vec<DensityOperator>, rho: DensityOperator) {
    if states
        .iter()
        .all(|s| (s.matrix() - rho.matrix()).norm() > 1e-6)
    {
        states.push(rho);
    }
}

/// Maximizes `I(A⟩B)` over inputs `ρ_A` of `ω_AB = (I ⊗ N)(ψ^ρ)` and collects the
/// optimizing set together with the extreme variances over it.
pub fn channel_coherent_information(
    ch: &Channel,
    cfg: &CoherentInfoConfig,
) -> Result<ChannelCoherentInfo> {
    let d = ch.dim_in();
    if d > 4 {
        return Err(Error::InvalidArgument(format!(
            "input dimension {d} exceeds the supported maximum of 4"
        )));
    }
    let cost = NegCoherent { ch, qubit: d == 2 };
    let mut candidates: Vec<(f64, Vec<f64>)>;
    let converged;
    if d == 1 {
        let rho = DensityOperator::maximally_mixed(1)?;
        let e = coherent_info_at(ch, &rho)?;
        return Ok(ChannelCoherentInfo {
            value: e.d,
            maximizers: vec![rho],
            variance_below_half: e.v,
            variance_above_half: e.v,
            converged: true,
        });
    } else if d == 2 {
        let mut points = vec![vec![0.0, 0.0, 0.0]];
        for ri in 1..=cfg.radial {
            let r = ri as f64 / cfg.radial as f64;
            for ti in 0..cfg.polar {
                let theta = std::f64::consts::PI * ti as f64 / (cfg.polar.max(2) - 1) as f64;
                let n_phi = if ti == 0 || ti + 1 == cfg.polar {
                    1
                } else {
                    cfg.azimuth
                };
                for pj in 0..n_phi {
                    let phi = 2.0 * std::f64::consts::PI * pj as f64 / cfg.azimuth as f64;
                    points.push(vec![
                        r * theta.sin() * phi.cos(),
                        r * theta.sin() * phi.sin(),
                        r * theta.cos(),
                    ]);
                }
            }
        }
        candidates = points
            .into_par_iter()
            .map(|p| {
                let c = cost.cost(&p).unwrap_or(f64::INFINITY);
                (-c, p)
            })
            .collect();
        let best = candidates
            .iter()
            .cloned()
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("grid is nonempty");
        let step = 0.5 / cfg.radial.max(1) as f64;
        let (p, c, ok) = nelder_mead(&cost, best.1, step, cfg.max_iter);
        converged = ok;
        candidates.push((-c, p));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut starts = Vec::new();
        // first start is the maximally mixed input
        let mut eye = vec![0.0; 2 * d * d];
        for i in 0..d {
            eye[2 * (i * d + i)] = 1.0;
        }
        starts.push(eye);
        for _ in 1..cfg.restarts.max(1) {
            starts.push(
                (0..2 * d * d)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
        }
        let results: Vec<_> = starts
            .into_par_iter()
            .map(|s| nelder_mead(&cost, s, 0.3, cfg.max_iter))
            .collect();
        converged = results.iter().any(|r| r.2);
        candidates = results.into_iter().map(|(p, c, _)| (-c, p)).collect();
    }
    let value = candidates
        .iter()
        .map(|c| c.0)
        .fold(f64::NEG_INFINITY, f64::max);
    if !value.is_finite() {
        return Err(Error::NotConverged(
            "no finite coherent information found".into(),
        ));
    }
    let mut maximizers = Vec::new();
    for (v, p) in &candidates {
        if *v >= value - cfg.tol {
            if let Some(rho) = cost.state(p) {
                distinct(&mut maximizers, rho);
            }
        }
    }
    let variances: Vec<f64> = maximizers
        .iter()
        .map(|rho| coherent_info_at(ch, rho).map(|e| e.v))
        .collect::<Result<_>>()?;
    Ok(ChannelCoherentInfo {
        value,
        maximizers,
        variance_below_half: variances.iter().copied().fold(f64::INFINITY, f64::min),
        variance_above_half: variances.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        converged,
    })
}
