//! Converse bounds assisted by classical post-processing: the hypothesis-testing bound
//! with a fixed Rains-set state, the semidefinite relaxation `f(N, ε)` in both its
//! maximization and minimization forms, and the Rains information of a channel.

use crate::entropy::{gaussian_quantile, rel_entropy_and_variance, EntropicPair};
use crate::hyptest::dh_quantum;
use crate::qcore::linalg::{
    diag, eigh, hermitian_part, identity, kron, trace_norm_hermitian, trace_product_re, transpose,
    CMatrix, C64,
};
use crate::qcore::{
    bell_diagonal, bell_projectors, is_rains_feasible, partial_trace, partial_transpose,
    BipartiteOperator, Channel, PauliChannel, Subsystem,
};
use crate::sdp::{solve, BlockOperator, SdpOptions, SdpProblem, SdpSolution, SuperOperator};
use crate::{Error, Result};

const LN2: f64 = std::f64::consts::LN_2;

/// `D_H^ε(N(φ) ‖ σ_AB)` for a caller-chosen `σ_AB ∈ PPT'`.
pub fn dh_with_fixed_sigma(ch: &Channel, sigma: &BipartiteOperator, eps: f64) -> Result<f64> {
    let (da, db) = sigma.dims();
    if da != ch.dim_in() || db != ch.dim_out() {
        return Err(Error::DimensionMismatch {
            expected: ch.dim_in() * ch.dim_out(),
            actual: da * db,
        });
    }
    if !is_rains_feasible(sigma, 1e-9)? {
        return Err(Error::NotRainsFeasible(crate::qcore::rains_trace_norm(
            sigma,
        )));
    }
    let omega = ch.output_on_max_entangled().to_state()?;
    dh_quantum(&omega, sigma.matrix(), eps)
}

/// Optimal variables of both forms of `f(N, ε)` with diagnostics.
#[derive(Debug, Clone)]
pub struct MetaconverseCertificate {
    pub eps: f64,
    pub f_value: f64,
    /// `-log₂ f`.
    pub outer_bound_bits: f64,
    pub m: f64,
    pub n: f64,
    pub r: CMatrix,
    pub m_op: CMatrix,
    pub rho: CMatrix,
    pub lambda: CMatrix,
    pub theta: CMatrix,
    pub xi: CMatrix,
    /// `m(1-ε) - n`.
    pub primal_value: f64,
    /// `tr ξ`.
    pub dual_value: f64,
    pub gap: f64,
    pub residuals: [f64; 8],
    pub iterations: usize,
    choi: CMatrix,
    da: usize,
    db: usize,
}

impl MetaconverseCertificate {
    pub fn dims(&self) -> (usize, usize) {
        (self.da, self.db)
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// Smallest eigenvalue over all operator variables and the two scalars.
    pub fn min_eigenvalue(&self) -> f64 {
        [
            &self.r,
            &self.m_op,
            &self.rho,
            &self.lambda,
            &self.theta,
            &self.xi,
        ]
        .iter()
        .map(|x| crate::qcore::linalg::eigvalsh(x)[0])
        .fold(self.m.min(self.n), f64::min)
    }
}

/// Residual norms of the eight complementary-slackness conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlacknessReport {
    pub residuals: [f64; 8],
    pub satisfied: bool,
}

fn slackness_residuals(c: &MetaconverseCertificate) -> [f64; 8] {
    let (da, db) = (c.da, c.db);
    let ib = identity(db);
    let phi_t = kron(&transpose(&c.rho), &ib);
    let theta_ta = partial_transpose(&c.theta, da, db, Subsystem::A);
    let m_ta = partial_transpose(&c.m_op, da, db, Subsystem::A);
    let trb_r_t = transpose(&partial_trace(&c.r, da, db, Subsystem::B));
    let trb_m = partial_trace(&c.m_op, da, db, Subsystem::B);
    let nm = C64::new(c.n, 0.0);
    let mm = C64::new(c.m, 0.0);
    [
        (c.rho.trace().re - 1.0).abs(),
        (trace_product_re(&c.lambda, &c.choi) - (1.0 - c.eps)).abs(),
        (&phi_t * &c.r - &c.lambda * &c.r).norm(),
        (kron(&c.xi, &ib) * &c.m_op - (&c.lambda + &theta_ta) * &c.m_op).norm(),
        (&c.rho * nm - &trb_r_t * &c.rho).norm(),
        (&m_ta * &c.theta).norm(),
        (&trb_m * &c.xi - &c.xi).norm(),
        (&c.choi * mm * &c.lambda - (&c.m_op + &c.r) * &c.lambda).norm(),
    ]
}

pub fn verify_slackness(cert: &MetaconverseCertificate, tol: f64) -> SlacknessReport {
    let residuals = slackness_residuals(cert);
    SlacknessReport {
        residuals,
        satisfied: residuals.iter().all(|&r| r <= tol),
    }
}

fn metaconverse_options() -> SdpOptions {
    SdpOptions {
        tol: 1e-11,
        max_iter: 200,
        acceptable_tol: 1e-8,
    }
}

fn check_meta_args(ch: &Channel, eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in [0, 1), got {eps}"
        )));
    }
    if ch.dim_in() > 4 || ch.dim_out() > 4 {
        return Err(Error::InvalidArgument(format!(
            "channel dimensions {}x{} exceed 4x4",
            ch.dim_in(),
            ch.dim_out()
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    ch: &Channel,
    eps: f64,
    m: f64,
    n: f64,
    r: CMatrix,
    m_op: CMatrix,
    rho: CMatrix,
    lambda: CMatrix,
    theta: CMatrix,
    xi: CMatrix,
    f_value: f64,
    iterations: usize,
) -> MetaconverseCertificate {
    // the program only needs tr ρ ≤ 1; topping up with a multiple of 1_A keeps
    // Λ ≤ ρ^T ⊗ 1 and makes ρ a state
    let da = ch.dim_in();
    let deficit = 1.0 - rho.trace().re;
    let rho = if deficit > 0.0 {
        rho + identity(da) * C64::new(deficit / da as f64, 0.0)
    } else {
        rho
    };
    let primal_value = m * (1.0 - eps) - n;
    let dual_value = xi.trace().re;
    let mut cert = MetaconverseCertificate {
        eps,
        f_value,
        outer_bound_bits: -f_value.log2(),
        m,
        n,
        r,
        m_op,
        rho,
        lambda,
        theta,
        xi,
        primal_value,
        dual_value,
        gap: dual_value - primal_value,
        residuals: [0.0; 8],
        iterations,
        choi: ch.choi().matrix().clone(),
        da: ch.dim_in(),
        db: ch.dim_out(),
    };
    cert.residuals = slackness_residuals(&cert);
    cert
}

/// `f(N, ε)` from the maximization form over `(m, n, R_AB, M_AB)`.
pub fn f_primal(ch: &Channel, eps: f64) -> Result<MetaconverseCertificate> {
    f_primal_with(ch, eps, &metaconverse_options())
}

pub fn f_primal_with(ch: &Channel, eps: f64, opts: &SdpOptions) -> Result<MetaconverseCertificate> {
    check_meta_args(ch, eps)?;
    let (da, db) = (ch.dim_in(), ch.dim_out());
    let dab = da * db;
    let choi = ch.choi().matrix().clone();
    let nn = choi.clone();
    let map = SuperOperator::from_fn(vec![1, 1, dab, dab], vec![da, dab, dab, da], move |x| {
        let m = x.block(0)[(0, 0)];
        let n = x.block(1)[(0, 0)];
        let r = x.block(2);
        let mo = x.block(3);
        let c1 = transpose(&partial_trace(r, da, db, Subsystem::B)) - identity(da) * n;
        let c2 = &nn * m - mo - r;
        let c3 = -partial_transpose(mo, da, db, Subsystem::A);
        let c4 = partial_trace(mo, da, db, Subsystem::B);
        BlockOperator::new(vec![c1, c2, c3, c4]).expect("square blocks")
    })?;
    let objective = BlockOperator::new(vec![
        diag(&[1.0 - eps]),
        diag(&[-1.0]),
        CMatrix::zeros(dab, dab),
        CMatrix::zeros(dab, dab),
    ])?;
    let bound = BlockOperator::new(vec![
        CMatrix::zeros(da, da),
        CMatrix::zeros(dab, dab),
        CMatrix::zeros(dab, dab),
        identity(da),
    ])?;
    let sol = solve(&SdpProblem::new(objective, map, bound)?, opts).require_optimal()?;
    let x = sol.primal.blocks();
    let y = sol.dual.blocks();
    Ok(assemble(
        ch,
        eps,
        x[0][(0, 0)].re,
        x[1][(0, 0)].re,
        x[2].clone(),
        x[3].clone(),
        y[0].clone(),
        y[1].clone(),
        y[2].clone(),
        y[3].clone(),
        sol.primal_value,
        sol.iterations,
    ))
}

/// `f(N, ε)` from the minimization form over `(ρ_A, Λ_AB, Θ_AB, ξ_A)`, solved as its own
/// program; the maximization variables are read off its dual.
pub fn f_dual(ch: &Channel, eps: f64) -> Result<MetaconverseCertificate> {
    f_dual_with(ch, eps, &metaconverse_options())
}

pub fn f_dual_with(ch: &Channel, eps: f64, opts: &SdpOptions) -> Result<MetaconverseCertificate> {
    check_meta_args(ch, eps)?;
    let (da, db) = (ch.dim_in(), ch.dim_out());
    let dab = da * db;
    let choi = ch.choi().matrix().clone();
    let nn = choi.clone();
    let map = SuperOperator::from_fn(vec![da, dab, dab, da], vec![dab, dab, 1, 1], move |x| {
        let rho = x.block(0);
        let lambda = x.block(1);
        let theta = x.block(2);
        let xi = x.block(3);
        let ib = identity(db);
        let c1 = lambda + partial_transpose(theta, da, db, Subsystem::A) - kron(xi, &ib);
        let c2 = lambda - kron(&transpose(rho), &ib);
        let c3 = diag(&[-trace_product_re(lambda, &nn)]);
        let c4 = diag(&[rho.trace().re]);
        BlockOperator::new(vec![c1, c2, c3, c4]).expect("square blocks")
    })?;
    let objective = BlockOperator::new(vec![
        CMatrix::zeros(da, da),
        CMatrix::zeros(dab, dab),
        CMatrix::zeros(dab, dab),
        -identity(da),
    ])?;
    let bound = BlockOperator::new(vec![
        CMatrix::zeros(dab, dab),
        CMatrix::zeros(dab, dab),
        diag(&[-(1.0 - eps)]),
        diag(&[1.0]),
    ])?;
    let sol: SdpSolution =
        solve(&SdpProblem::new(objective, map, bound)?, opts).require_optimal()?;
    let x = sol.primal.blocks();
    let y = sol.dual.blocks();
    Ok(assemble(
        ch,
        eps,
        y[2][(0, 0)].re,
        y[3][(0, 0)].re,
        y[1].clone(),
        y[0].clone(),
        x[0].clone(),
        x[1].clone(),
        x[2].clone(),
        x[3].clone(),
        -sol.primal_value,
        sol.iterations,
    ))
}

/// Matrix `T` with `T_B(Σ_k s_k B_k) = Σ_j (T s)_j B_j` on the Bell projectors.
pub fn bell_transpose_matrix() -> [[f64; 4]; 4] {
    let b = bell_projectors();
    let mut t = [[0.0; 4]; 4];
    for (k, bk) in b.iter().enumerate() {
        let pt = partial_transpose(bk, 2, 2, Subsystem::B);
        for (j, bj) in b.iter().enumerate() {
            t[j][k] = trace_product_re(bj, &pt);
        }
    }
    t
}

fn apply4(t: &[[f64; 4]; 4], s: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for j in 0..4 {
        out[j] = (0..4).map(|k| t[j][k] * s[k]).sum();
    }
    out
}

/// `f(N, ε)` for a Pauli channel with all variables restricted to Bell-diagonal operators
/// and `ρ_A = 1/2`, which reduces the program to a linear program.
pub fn f_pauli_reduced(ch: &PauliChannel, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in [0, 1), got {eps}"
        )));
    }
    // Choi weights are twice the output weights on φ
    let w = ch.bell_weights().map(|x| 2.0 * x);
    let t = bell_transpose_matrix();
    // variables: m, n, r_0..3, μ_0..3 as scalar blocks
    let map = SuperOperator::from_fn(vec![1; 10], vec![1; 10], move |x| {
        let v: Vec<f64> = x.blocks().iter().map(|b| b[(0, 0)].re).collect();
        let (m, n) = (v[0], v[1]);
        let r = [v[2], v[3], v[4], v[5]];
        let mu = [v[6], v[7], v[8], v[9]];
        let mut out = Vec::with_capacity(10);
        out.push(r.iter().sum::<f64>() / 2.0 - n);
        for k in 0..4 {
            out.push(m * w[k] - mu[k] - r[k]);
        }
        let tm = apply4(&t, &mu);
        for k in 0..4 {
            out.push(-tm[k]);
        }
        out.push(mu.iter().sum::<f64>() / 2.0);
        BlockOperator::new(out.into_iter().map(|s| diag(&[s])).collect()).expect("scalar blocks")
    })?;
    let mut obj = vec![0.0; 10];
    obj[0] = 1.0 - eps;
    obj[1] = -1.0;
    let mut bnd = vec![0.0; 10];
    bnd[9] = 1.0;
    let objective = BlockOperator::new(obj.iter().map(|&s| diag(&[s])).collect())?;
    let bound = BlockOperator::new(bnd.iter().map(|&s| diag(&[s])).collect())?;
    let sol = solve(
        &SdpProblem::new(objective, map, bound)?,
        &metaconverse_options(),
    )
    .require_optimal()?;
    Ok(sol.primal_value)
}

/// Rains information `I_R(N) = min_{σ ∈ PPT'} D(N(φ) ‖ σ)` with its variance.
#[derive(Debug, Clone)]
pub struct RainsChannelInfo {
    pub i_r: f64,
    /// Variance selected for the requested `ε`.
    pub v_eps: f64,
    pub minimizers: Vec<BipartiteOperator>,
    /// Final projected-gradient norm, or Frank–Wolfe gap for generic channels.
    pub gradient_norm: f64,
    pub converged: bool,
}

/// Stopping tolerance on the gradient mapping of the Bell-diagonal problem.
pub const RAINS_GRAD_TOL: f64 = 1e-9;
/// Stopping tolerance on the Frank–Wolfe gap for generic channels.
pub const RAINS_FW_TOL: f64 = 1e-6;

/// Euclidean projection onto the `ℓ1` ball of radius 1.
fn project_l1(x: &[f64; 4]) -> [f64; 4] {
    if x.iter().map(|v| v.abs()).sum::<f64>() <= 1.0 {
        return *x;
    }
    let mut u: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui > t {
            theta = t;
        }
    }
    x.map(|v| v.signum() * (v.abs() - theta).max(0.0))
}

/// Projection onto `{s ≥ 0, ‖T s‖₁ ≤ 1}` by Dykstra's alternating scheme.
fn project_bell_rains(x: &[f64; 4], t: &[[f64; 4]; 4]) -> [f64; 4] {
    let mut y = *x;
    let mut p = [0.0; 4];
    let mut q = [0.0; 4];
    for _ in 0..20_000 {
        let a: [f64; 4] = std::array::from_fn(|k| (y[k] + p[k]).max(0.0));
        p = std::array::from_fn(|k| y[k] + p[k] - a[k]);
        let shifted: [f64; 4] = std::array::from_fn(|k| a[k] + q[k]);
        let b = apply4(t, &project_l1(&apply4(t, &shifted)));
        q = std::array::from_fn(|k| shifted[k] - b[k]);
        let change: f64 = (0..4).map(|k| (b[k] - y[k]).abs()).sum();
        y = b;
        if change < 1e-16 {
            break;
        }
    }
    // clean up residual infeasibility
    let mut s = y.map(|v| v.max(0.0));
    let norm: f64 = apply4(t, &s).iter().map(|v| v.abs()).sum();
    if norm > 1.0 {
        s = s.map(|v| v / norm);
    }
    s
}

fn kl_bits(w: &[f64; 4], s: &[f64; 4]) -> f64 {
    let mut d = 0.0;
    for k in 0..4 {
        if w[k] > 0.0 {
            if s[k] <= 0.0 {
                return f64::INFINITY;
            }
            d += w[k] * (w[k] / s[k]).log2();
        }
    }
    d
}

fn kl_grad(w: &[f64; 4], s: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|k| {
        if w[k] > 0.0 {
            -w[k] / (s[k] * LN2)
        } else {
            0.0
        }
    })
}

/// Minimizes `D(Σ w_k B_k ‖ Σ s_k B_k)` over Bell-diagonal `PPT'` operators.
pub fn rains_bell_diagonal(w: [f64; 4]) -> ([f64; 4], f64, f64, bool) {
    let t = bell_transpose_matrix();
    let mut s = [0.25; 4];
    let mut g = kl_bits(&w, &s);
    let mut grad = kl_grad(&w, &s);
    let mut step = 1.0;
    let mut mapping_norm = f64::INFINITY;
    let mut converged = false;
    for _ in 0..20_000 {
        let probe = project_bell_rains(&std::array::from_fn(|k| s[k] - grad[k]), &t);
        mapping_norm = (0..4)
            .map(|k| (probe[k] - s[k]).powi(2))
            .sum::<f64>()
            .sqrt();
        if mapping_norm <= RAINS_GRAD_TOL {
            converged = true;
            break;
        }
        let mut accepted = None;
        let mut tstep = step;
        for _ in 0..60 {
            let cand = project_bell_rains(&std::array::from_fn(|k| s[k] - tstep * grad[k]), &t);
            let gc = kl_bits(&w, &cand);
            let decrease: f64 = (0..4).map(|k| grad[k] * (cand[k] - s[k])).sum();
            if gc.is_finite() && gc <= g + 1e-4 * decrease {
                accepted = Some((cand, gc));
                break;
            }
            tstep *= 0.5;
        }
        let Some((cand, gc)) = accepted else {
            break;
        };
        let new_grad = kl_grad(&w, &cand);
        // Barzilai–Borwein guess for the next trial step
        let ds: [f64; 4] = std::array::from_fn(|k| cand[k] - s[k]);
        let dg: [f64; 4] = std::array::from_fn(|k| new_grad[k] - grad[k]);
        let sy: f64 = (0..4).map(|k| ds[k] * dg[k]).sum();
        let ss: f64 = (0..4).map(|k| ds[k] * ds[k]).sum();
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-12, 1e6)
        } else {
            tstep * 2.0
        };
        s = cand;
        g = gc;
        grad = new_grad;
    }
    (s, g, mapping_norm, converged)
}

/// Bell weights of a two-qubit operator when it is Bell diagonal.
fn bell_weights_of(op: &CMatrix) -> Option<[f64; 4]> {
    if op.nrows() != 4 {
        return None;
    }
    let w = bell_projectors().map(|b| trace_product_re(&b, op));
    if (bell_diagonal(w) - op).norm() < 1e-10 {
        Some(w)
    } else {
        None
    }
}

fn variance_for(eps: f64, vs: &[f64]) -> f64 {
    if eps < 0.5 {
        vs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        vs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn rains_information_pauli(ch: &PauliChannel, eps: f64) -> Result<RainsChannelInfo> {
    rains_from_bell_weights(ch.bell_weights(), eps)
}

fn rains_from_bell_weights(w: [f64; 4], eps: f64) -> Result<RainsChannelInfo> {
    let (s, _, grad_norm, converged) = rains_bell_diagonal(w);
    let omega = crate::qcore::DensityOperator::new(bell_diagonal(w))?;
    let sigma = bell_diagonal(s);
    let e = rel_entropy_and_variance(&omega, &sigma)?;
    Ok(RainsChannelInfo {
        i_r: e.d,
        v_eps: variance_for(eps, &[e.v]),
        minimizers: vec![BipartiteOperator::new(sigma, 2, 2)?],
        gradient_norm: grad_norm,
        converged,
    })
}

/// Rains information of a covariant channel. Channels whose Choi state is Bell diagonal use
/// the four-parameter reduction; all others use Frank–Wolfe over `PPT'`.
pub fn rains_information(ch: &Channel, eps: f64) -> Result<RainsChannelInfo> {
    let omega = ch.output_on_max_entangled();
    if ch.dim_in() == 2 && ch.dim_out() == 2 {
        if let Some(w) = bell_weights_of(omega.matrix()) {
            return rains_from_bell_weights(w, eps);
        }
    }
    rains_frank_wolfe(ch, eps, 500)
}

/// Fréchet derivative of `log₂` at `σ` applied to `ω`.
fn dlog2(sigma: &CMatrix, omega: &CMatrix) -> CMatrix {
    let (vals, u) = eigh(sigma);
    let mut w = u.adjoint() * omega * &u;
    let d = vals.len();
    for i in 0..d {
        for j in 0..d {
            let (a, b) = (vals[i].max(1e-300), vals[j].max(1e-300));
            let l = if ((a - b) / a.max(b)).abs() < 1e-10 {
                1.0 / (0.5 * (a + b))
            } else {
                (a.ln() - b.ln()) / (a - b)
            };
            w[(i, j)] *= l / LN2;
        }
    }
    hermitian_part(&(&u * w * u.adjoint()))
}

fn rains_objective(omega: &crate::qcore::DensityOperator, sigma: &CMatrix) -> f64 {
    rel_entropy_and_variance(omega, sigma)
        .map(|e| e.d)
        .unwrap_or(f64::INFINITY)
}

/// `argmin_{σ ∈ PPT'} tr[G σ]` via `σ = T_B(P - Q)`, `P, Q ≥ 0`, `tr(P + Q) ≤ 1`.
fn rains_linear_oracle(g: &CMatrix, da: usize, db: usize) -> Result<CMatrix> {
    let d = da * db;
    let map = SuperOperator::from_fn(vec![d, d], vec![d, 1], move |x| {
        let diff = x.block(0) - x.block(1);
        let s = -partial_transpose(&diff, da, db, Subsystem::B);
        let t = x.block(0).trace().re + x.block(1).trace().re;
        BlockOperator::new(vec![s, diag(&[t])]).expect("square blocks")
    })?;
    let tg = partial_transpose(g, da, db, Subsystem::B);
    let objective = BlockOperator::new(vec![-tg.clone(), tg])?;
    let bound = BlockOperator::new(vec![CMatrix::zeros(d, d), diag(&[1.0])])?;
    let sol = solve(
        &SdpProblem::new(objective, map, bound)?,
        &SdpOptions::default(),
    )
    .require_optimal()?;
    let x = sol.primal.blocks();
    Ok(hermitian_part(&partial_transpose(
        &(&x[0] - &x[1]),
        da,
        db,
        Subsystem::B,
    )))
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(x: &[f64]) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui > t {
            theta = t;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

fn combine(atoms: &[CMatrix], w: &[f64]) -> CMatrix {
    let d = atoms[0].nrows();
    let mut sigma = CMatrix::zeros(d, d);
    for (a, &wi) in atoms.iter().zip(w) {
        sigma += a * C64::new(wi, 0.0);
    }
    hermitian_part(&sigma)
}

/// Re-optimizes the convex weights of the active atoms by projected gradient with
/// Barzilai-Borwein steps and Armijo backtracking.
fn reweight(omega: &crate::qcore::DensityOperator, atoms: &[CMatrix], w: &mut Vec<f64>, tol: f64) {
    let value = |w: &[f64]| rains_objective(omega, &combine(atoms, w));
    let grad = |w: &[f64]| {
        let g = -dlog2(&combine(atoms, w), omega.matrix());
        atoms
            .iter()
            .map(|a| trace_product_re(&g, a))
            .collect::<Vec<f64>>()
    };
    let mut f = value(w);
    let mut g = grad(w);
    let mut step = 1.0;
    for _ in 0..500 {
        // simplex Frank-Wolfe gap over the active atoms
        let gw: f64 = g.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
        if gw - gmin <= tol {
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = project_simplex(
                &w.iter()
                    .zip(&g)
                    .map(|(wi, gi)| wi - t * gi)
                    .collect::<Vec<_>>(),
            );
            let fc = value(&cand);
            let decrease: f64 = g
                .iter()
                .zip(cand.iter().zip(w.iter()))
                .map(|(gi, (c, wi))| gi * (c - wi))
                .sum();
            if fc.is_finite() && fc <= f + 1e-4 * decrease {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            break;
        };
        let gc = grad(&cand);
        let sk: Vec<f64> = cand.iter().zip(w.iter()).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = sk.iter().zip(&yk).map(|(a, b)| a * b).sum();
        let ss: f64 = sk.iter().map(|a| a * a).sum();
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-8, 1e8)
        } else {
            (t * 2.0).min(1e8)
        };
        *w = cand;
        f = fc;
        g = gc;
    }
}

/// Fully corrective Frank-Wolfe over the Rains set. Each outer step adds the vertex
/// returned by the linear oracle and re-optimizes the weights of all active vertices.
fn rains_frank_wolfe(ch: &Channel, eps: f64, max_iter: usize) -> Result<RainsChannelInfo> {
    let (da, db) = (ch.dim_in(), ch.dim_out());
    let d = da * db;
    let omega = ch.output_on_max_entangled().to_state()?;
    let mut atoms = vec![identity(d) * C64::new(1.0 / d as f64, 0.0)];
    let mut w = vec![1.0];
    let mut gap = f64::INFINITY;
    let mut converged = false;
    for _ in 0..max_iter {
        let sigma = combine(&atoms, &w);
        let grad = -dlog2(&sigma, omega.matrix());
        let s = rains_linear_oracle(&grad, da, db)?;
        gap = trace_product_re(&grad, &(&sigma - &s));
        if gap <= RAINS_FW_TOL {
            converged = true;
            break;
        }
        atoms.push(s);
        w.push(0.0);
        reweight(&omega, &atoms, &mut w, 0.1 * RAINS_FW_TOL);
        let keep: Vec<bool> = w.iter().map(|&x| x > 1e-14).collect();
        let mut k = 0;
        atoms.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        w.retain(|&x| x > 1e-14);
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
    }
    let sigma = combine(&atoms, &w);
    let e: EntropicPair = rel_entropy_and_variance(&omega, &sigma)?;
    Ok(RainsChannelInfo {
        i_r: e.d,
        v_eps: variance_for(eps, &[e.v]),
        minimizers: vec![BipartiteOperator::new(sigma, da, db)?],
        gradient_norm: gap,
        converged,
    })
}

/// `I_R + √(V_R^ε / n) Φ⁻¹(ε)`.
pub fn covariant_outer_expansion(info: &RainsChannelInfo, n: f64, eps: f64) -> Result<f64> {
    let z = gaussian_quantile(eps)?;
    Ok(info.i_r + (info.v_eps / n).sqrt() * z)
}

/// Largest violation of `‖T_B σ‖₁ ≤ 1` among the reported minimizers.
pub fn rains_violation(info: &RainsChannelInfo) -> f64 {
    info.minimizers
        .iter()
        .map(|m| trace_norm_hermitian(m.partial_transpose(Subsystem::B).matrix()) - 1.0)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{binary_entropy, binary_entropy_variance};
    use crate::hyptest::{dh_classical_product, BinaryProductTest};
    use crate::qcore::random::random_channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half_dephased() -> BipartiteOperator {
        BipartiteOperator::new(bell_diagonal([0.5, 0.5, 0.0, 0.0]), 2, 2).unwrap()
    }

    #[test]
    fn fixed_sigma_dephasing_matches_classical() {
        let z = PauliChannel::dephasing(0.1).unwrap().to_channel();
        let v = dh_with_fixed_sigma(&z, &half_dephased(), 0.05).unwrap();
        let c = dh_classical_product(&BinaryProductTest::bsc(0.1, 1, 0.05).unwrap()).unwrap();
        assert!((v - c.dh).abs() < 1e-8);
        assert!((v - 0.41504).abs() < 1e-5);
    }

    #[test]
    fn fixed_sigma_identity() {
        let id = Channel::identity(2).unwrap();
        for eps in [0.01, 0.1, 0.3] {
            let v = dh_with_fixed_sigma(&id, &half_dephased(), eps).unwrap();
            assert!((v - (1.0 - (1.0 - eps).log2())).abs() < 1e-7);
        }
    }

    #[test]
    fn fixed_sigma_depolarizing_equals_dephasing() {
        let alpha = 0.05;
        let sigma =
            BipartiteOperator::new(bell_diagonal([0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]), 2, 2)
                .unwrap();
        let d = dh_with_fixed_sigma(
            &PauliChannel::depolarizing(alpha).unwrap().to_channel(),
            &sigma,
            0.05,
        )
        .unwrap();
        let z = dh_with_fixed_sigma(
            &PauliChannel::dephasing(alpha).unwrap().to_channel(),
            &half_dephased(),
            0.05,
        )
        .unwrap();
        assert!((d - z).abs() < 1e-7);
    }

    #[test]
    fn fixed_sigma_rejects_non_rains() {
        let phi = BipartiteOperator::new(bell_diagonal([1.0, 0.0, 0.0, 0.0]), 2, 2).unwrap();
        let id = Channel::identity(2).unwrap();
        assert!(matches!(
            dh_with_fixed_sigma(&id, &phi, 0.1),
            Err(Error::NotRainsFeasible(_))
        ));
    }

    #[test]
    fn identity_channel_relaxation() {
        let id = Channel::identity(2).unwrap();
        for eps in [0.0, 0.01, 0.05, 0.25] {
            let p = f_primal(&id, eps).unwrap();
            let d = f_dual(&id, eps).unwrap();
            assert!(p.f_value <= 0.5 + 1e-9);
            assert!(
                (p.f_value - (1.0 - eps) / 2.0).abs() < 1e-7,
                "{}",
                p.f_value
            );
            assert!((p.f_value - d.f_value).abs() < 1e-7);
            assert!(p.gap.abs() < 1e-7 && d.gap.abs() < 1e-7);
            let rep = verify_slackness(&p, 1e-6);
            assert!(rep.satisfied, "{:?}", rep.residuals);
            assert!(verify_slackness(&d, 1e-6).satisfied, "{:?}", d.residuals);
            assert!((p.rho.trace().re - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn perturbed_certificate_fails_slackness() {
        let id = Channel::identity(2).unwrap();
        let mut c = f_primal(&id, 0.1).unwrap();
        c.lambda += identity(4) * C64::new(0.01, 0.0);
        let rep = verify_slackness(&c, 1e-6);
        assert!(!rep.satisfied);
    }

    #[test]
    fn relaxation_below_fixed_sigma_and_monotone() {
        let z = PauliChannel::dephasing(0.1).unwrap().to_channel();
        let mut last = f64::INFINITY;
        for eps in [0.01, 0.05, 0.2, 0.5, 0.9, 0.999] {
            let c = f_primal(&z, eps).unwrap();
            assert!(c.f_value <= last + 1e-9);
            last = c.f_value;
            let fixed = dh_with_fixed_sigma(&z, &half_dephased(), eps).unwrap();
            assert!(
                c.f_value >= (-fixed).exp2() - 1e-9,
                "{} > {fixed}",
                c.outer_bound_bits
            );
        }
        assert!(last < 0.01);
    }

    #[test]
    fn random_qubit_channels_strong_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for i in 0..6 {
            let ch = random_channel(2, 2, 1 + i % 4, &mut rng);
            let p = f_primal(&ch, 0.1).unwrap();
            let d = f_dual(&ch, 0.1).unwrap();
            assert!((p.f_value - d.f_value).abs() < 1e-7);
            assert!(p.min_eigenvalue() > -1e-8);
            assert!(verify_slackness(&p, 1e-6).satisfied, "{:?}", p.residuals);
        }
    }

    #[test]
    fn bell_reduction_matches_full_program() {
        for ch in [
            PauliChannel::dephasing(0.1).unwrap(),
            PauliChannel::depolarizing(0.05).unwrap(),
            PauliChannel::new([0.7, 0.1, 0.15, 0.05]).unwrap(),
        ] {
            for eps in [0.01, 0.1, 0.4] {
                let reduced = f_pauli_reduced(&ch, eps).unwrap();
                let full = f_primal(&ch.to_channel(), eps).unwrap().f_value;
                assert!((reduced - full).abs() < 1e-7, "{reduced} vs {full}");
            }
        }
    }

    #[test]
    fn bell_transpose_is_orthogonal_involution() {
        let t = bell_transpose_matrix();
        for i in 0..4 {
            for j in 0..4 {
                let tt: f64 = (0..4).map(|k| t[i][k] * t[k][j]).sum();
                assert!((tt - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                assert!((t[i][j] - t[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rains_dephasing_and_identity() {
        let g = 0.1;
        let r = rains_information_pauli(&PauliChannel::dephasing(g).unwrap(), 0.05).unwrap();
        assert!(r.converged);
        assert!(
            (r.i_r - (1.0 - binary_entropy(g))).abs() < 1e-8,
            "{}",
            r.i_r
        );
        assert!((r.v_eps - binary_entropy_variance(g)).abs() < 1e-6);
        assert!(is_rains_feasible(&r.minimizers[0], 1e-9).unwrap());

        let id = rains_information(&Channel::identity(2).unwrap(), 0.1).unwrap();
        assert!((id.i_r - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rains_bell_closed_form() {
        for w in [
            [0.8, 0.1, 0.06, 0.04],
            [0.95, 0.0167, 0.0167, 0.0166],
            [0.6, 0.2, 0.2, 0.0],
        ] {
            let (_, d, _, ok) = rains_bell_diagonal(w);
            assert!(ok);
            let wmax: f64 = w.iter().copied().fold(0.0, f64::max);
            assert!((d - (1.0 - binary_entropy(wmax))).abs() < 1e-8, "{d}");
        }
        let r = rains_information_pauli(&PauliChannel::depolarizing(0.05).unwrap(), 0.05).unwrap();
        assert!(r.i_r <= 1.0 - binary_entropy(0.05) + 1e-9);
    }

    #[test]
    fn frank_wolfe_agrees_with_bell_path() {
        let ch = PauliChannel::new([0.8, 0.1, 0.06, 0.04]).unwrap();
        let bell = rains_information_pauli(&ch, 0.1).unwrap();
        let fw = rains_frank_wolfe(&ch.to_channel(), 0.1, 500).unwrap();
        assert!(
            (fw.i_r - bell.i_r).abs() < 1e-5,
            "{} vs {}",
            fw.i_r,
            bell.i_r
        );
        assert!(fw.i_r >= bell.i_r - 1e-9);
        assert!(rains_violation(&fw) < 1e-7);
    }

    #[test]
    fn covariant_expansion_properties() {
        let g = 0.1;
        let info = rains_information_pauli(&PauliChannel::dephasing(g).unwrap(), 0.05).unwrap();
        let n = 1000.0;
        let v = covariant_outer_expansion(&info, n, 0.05).unwrap();
        let expected = 1.0 - binary_entropy(g)
            + (binary_entropy_variance(g) / n).sqrt() * gaussian_quantile(0.05).unwrap();
        assert!((v - expected).abs() < 1e-6);
        assert!((covariant_outer_expansion(&info, n, 0.5).unwrap() - info.i_r).abs() < 1e-15);
        assert!(
            covariant_outer_expansion(&info, 1.0, 0.05).unwrap()
                < covariant_outer_expansion(&info, 4.0, 0.05).unwrap()
        );
    }
}
