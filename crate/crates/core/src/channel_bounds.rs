//! Finite-blocklength rate boundaries for the dephasing, erasure and depolarizing qubit
//! channels, plus the general second-order inner bound.

use std::fmt;

use rayon::prelude::*;

use crate::entropy::{
    binary_entropy, binary_entropy_variance, channel_coherent_information, gaussian_quantile,
    ChannelCoherentInfo, CoherentInfoConfig,
};
use crate::error::{check_probability, check_unit_interval_open};
use crate::hyptest::{
    dh_classical_product, gaussian_expansion, ln_factorial, BinaryProductTest, KahanSum, LogSumExp,
};
use crate::qcore::Channel;
use crate::{Error, Result};

const LOG2_3: f64 = 1.584_962_500_721_156_3;
/// Largest blocklength accepted by the exact sphere-packing and erasure computations.
pub const MAX_EXACT_N: u64 = 100_000;
/// Largest blocklength accepted by the linear-code achievability bound.
pub const MAX_INNER_N: u64 = 10_000;
/// Upper end of the blocklength scan in [`min_uses_to_exceed_ci`].
pub const MAX_SCAN_N: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelFamily {
    Dephasing,
    /// Dephasing channel with free entanglement assistance.
    DephasingEa,
    Erasure,
    Depolarizing,
    General,
}

impl fmt::Display for ChannelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dephasing => "dephasing",
            Self::DephasingEa => "dephasing-ea",
            Self::Erasure => "erasure",
            Self::Depolarizing => "depolarizing",
            Self::General => "general",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Inner,
    Outer,
    ExactBoundary,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Inner => "inner",
            Self::Outer => "outer",
            Self::ExactBoundary => "exact-boundary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Order2,
    Order3,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Order2 => "order2",
            Self::Order3 => "order3",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "order2" => Ok(Self::Order2),
            "order3" => Ok(Self::Order3),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// One point `(R, n, ε)` on a bound, in qubits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub channel: ChannelFamily,
    pub param: f64,
    pub n: u64,
    pub eps: f64,
    pub kind: BoundKind,
    pub method: Method,
    pub rate: f64,
    /// False when no positive rate meets the error target and `rate` was set to 0.
    pub attained: bool,
}

impl BoundPoint {
    fn new(
        channel: ChannelFamily,
        param: f64,
        n: u64,
        eps: f64,
        kind: BoundKind,
        method: Method,
        rate: f64,
    ) -> Self {
        Self {
            channel,
            param,
            n,
            eps,
            kind,
            method,
            rate,
            attained: true,
        }
    }
}

fn check_n(n: u64, max: u64) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::InvalidArgument(format!(
            "blocklength {n} outside 1..={max}"
        )));
    }
    Ok(())
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `ln(p^t (1-p)^(n-t))`, with `0 · ln 0 = 0`.
fn ln_bernoulli_weight(p: f64, n: u64, t: u64) -> f64 {
    let a = if t == 0 { 0.0 } else { t as f64 * p.ln() };
    let b = if t == n {
        0.0
    } else {
        (n - t) as f64 * (1.0 - p).ln()
    };
    a + b
}

/// Sphere-packing test between the dephasing channel output and the half-dephased
/// Rains state, in bits per block.
fn dephasing_dh(n: u64, eps: f64, gamma: f64) -> Result<f64> {
    check_probability("gamma", gamma)?;
    check_unit_interval_open("eps", eps)?;
    check_n(n, MAX_EXACT_N)?;
    let t = BinaryProductTest::new(n, vec![1.0 - gamma, gamma], vec![0.5, 0.5], eps)?;
    Ok(dh_classical_product(&t)?.dh)
}

/// `(1/n) D_H^ε` of the binary symmetric channel pair.
pub fn dephasing_outer_exact(n: u64, eps: f64, gamma: f64) -> Result<BoundPoint> {
    let dh = dephasing_dh(n, eps, gamma)?;
    Ok(BoundPoint::new(
        ChannelFamily::Dephasing,
        gamma,
        n,
        eps,
        BoundKind::Outer,
        Method::Exact,
        dh / n as f64,
    ))
}

/// Outer bound restricted to integer code sizes: `log₂⌊2^{D_H}⌋ / n`.
pub fn dephasing_outer_exact_integer(n: u64, eps: f64, gamma: f64) -> Result<BoundPoint> {
    let dh = dephasing_dh(n, eps, gamma)?;
    let mut p = dephasing_outer_exact(n, eps, gamma)?;
    p.rate = integer_log2_floor(dh) / n as f64;
    Ok(p)
}

/// `log₂⌊2^x⌋`, exact while `2^x` fits the mantissa.
fn integer_log2_floor(x: f64) -> f64 {
    if x >= 52.0 {
        return x;
    }
    // absorb rounding in 2^x right at an integer
    let m = (x.exp2() * (1.0 + 1e-12)).floor();
    if m < 1.0 {
        0.0
    } else {
        m.log2()
    }
}

/// Random-linear-code bound on the ML block error of an `[n, k]` code over a BSC:
/// `Σ_t C(n,t) γ^t (1-γ)^{n-t} min{1, 2^{-(n-k)} (Σ_{s≤t} C(n,s) - 1)}`.
pub fn linear_code_error_bound(n: u64, k: u64, gamma: f64) -> Result<f64> {
    check_probability("gamma", gamma)?;
    check_n(n, MAX_INNER_N)?;
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "dimension {k} exceeds blocklength {n}"
        )));
    }
    let shift = -((n - k) as f64) * std::f64::consts::LN_2;
    let mut ball = LogSumExp::new();
    let mut total = KahanSum::default();
    for t in 0..=n {
        ball.add(ln_choose(n, t));
        if (gamma == 0.0 && t > 0) || (gamma == 1.0 && t < n) {
            continue;
        }
        let lb = ball.value();
        // competitors: every other pattern of weight ≤ t
        let ln_competitors = if lb <= 0.0 {
            f64::NEG_INFINITY
        } else {
            lb + (-(-lb).exp()).ln_1p()
        };
        let factor = (shift + ln_competitors).min(0.0);
        let ln_term = ln_choose(n, t) + ln_bernoulli_weight(gamma, n, t) + factor;
        total.add(ln_term.exp());
    }
    Ok(total.value().min(1.0))
}

/// Largest `k/n` for which the linear-code bound is at most `ε`; by the CSS
/// correspondence this is an achievable entanglement-transmission rate.
pub fn dephasing_inner_exact(n: u64, eps: f64, gamma: f64) -> Result<BoundPoint> {
    check_unit_interval_open("eps", eps)?;
    check_n(n, MAX_INNER_N)?;
    let ok = |k: u64| linear_code_error_bound(n, k, gamma).map(|e| e <= eps);
    let mut point = BoundPoint::new(
        ChannelFamily::Dephasing,
        gamma,
        n,
        eps,
        BoundKind::Inner,
        Method::Exact,
        0.0,
    );
    if !ok(1)? {
        point.attained = false;
        return Ok(point);
    }
    let (mut lo, mut hi) = (1, n + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    point.rate = lo as f64 / n as f64;
    Ok(point)
}

fn dephasing_expansion(n: u64, eps: f64, gamma: f64, log_coeff: f64) -> Result<f64> {
    check_probability("gamma", gamma)?;
    check_unit_interval_open("eps", eps)?;
    check_n(n, u64::MAX)?;
    gaussian_expansion(
        1.0 - binary_entropy(gamma),
        binary_entropy_variance(gamma),
        n as f64,
        eps,
        log_coeff,
    )
}

/// `1 - h(γ) + √(v(γ)/n) Φ⁻¹(ε) + log₂(n)/(2n)`.
pub fn dephasing_order3(n: u64, eps: f64, gamma: f64) -> Result<BoundPoint> {
    Ok(BoundPoint::new(
        ChannelFamily::Dephasing,
        gamma,
        n,
        eps,
        BoundKind::ExactBoundary,
        Method::Order3,
        dephasing_expansion(n, eps, gamma, 0.5)?,
    ))
}

/// `1 - h(γ) + √(v(γ)/n) Φ⁻¹(ε)`.
pub fn dephasing_order2(n: u64, eps: f64, gamma: f64) -> Result<BoundPoint> {
    Ok(BoundPoint::new(
        ChannelFamily::Dephasing,
        gamma,
        n,
        eps,
        BoundKind::ExactBoundary,
        Method::Order2,
        dephasing_expansion(n, eps, gamma, 0.0)?,
    ))
}

/// Entanglement-assisted dephasing boundary to second order,
/// `I(Z_γ)/2 + √(v(γ)/(4n)) Φ⁻¹(ε)` with `I(Z_γ) = 2 - h(γ)`.
pub fn ea_dephasing_order2(n: u64, eps: f64, gamma: f64) -> Result<BoundPoint> {
    check_probability("gamma", gamma)?;
    check_unit_interval_open("eps", eps)?;
    check_n(n, u64::MAX)?;
    let rate = gaussian_expansion(
        1.0 - binary_entropy(gamma) / 2.0,
        binary_entropy_variance(gamma) / 4.0,
        n as f64,
        eps,
        0.0,
    )?;
    Ok(BoundPoint::new(
        ChannelFamily::DephasingEa,
        gamma,
        n,
        eps,
        BoundKind::ExactBoundary,
        Method::Order2,
        rate,
    ))
}

/// Erasure-protocol error `Σ_l C(n,l) β^l (1-β)^{n-l} (1 - 2^{n-l}/|M|)^+` for
/// `log₂|M| = log2_m`.
pub fn erasure_error(n: u64, beta: f64, log2_m: f64) -> Result<f64> {
    check_probability("beta", beta)?;
    check_n(n, MAX_EXACT_N)?;
    if !(0.0..=n as f64).contains(&log2_m) {
        return Err(Error::InvalidArgument(format!(
            "log2 |M| = {log2_m} outside [0, {n}]"
        )));
    }
    let mut total = KahanSum::default();
    for l in 0..=n {
        let e = (n - l) as f64 - log2_m;
        if e >= 0.0 {
            continue;
        }
        if (beta == 0.0 && l > 0) || (beta == 1.0 && l < n) {
            continue;
        }
        let ln_p = ln_choose(n, l) + ln_bernoulli_weight(beta, n, l);
        total.add(ln_p.exp() * (1.0 - e.exp2()));
    }
    Ok(total.value())
}

/// Exact cpp-assisted erasure boundary: the rate `R ∈ [0, 1]` with
/// `erasure_error(n, β, nR) = ε`, by bisection to machine precision.
pub fn erasure_exact_boundary(n: u64, eps: f64, beta: f64) -> Result<BoundPoint> {
    check_unit_interval_open("eps", eps)?;
    check_probability("beta", beta)?;
    check_n(n, MAX_EXACT_N)?;
    let nf = n as f64;
    let rate = if erasure_error(n, beta, nf)? <= eps {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if erasure_error(n, beta, nf * mid)? <= eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(BoundPoint::new(
        ChannelFamily::Erasure,
        beta,
        n,
        eps,
        BoundKind::ExactBoundary,
        Method::Exact,
        rate,
    ))
}

/// Largest integer code size whose protocol fidelity is at least `1 - ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureCode {
    pub log2_m: f64,
    /// The code size itself when it fits a `u64`.
    pub m: Option<u64>,
    pub error: f64,
    pub point: BoundPoint,
}

pub fn erasure_exact_boundary_integer(n: u64, eps: f64, beta: f64) -> Result<ErasureCode> {
    let real = erasure_exact_boundary(n, eps, beta)?;
    let x = real.rate * n as f64;
    let (log2_m, m) = if x < 62.0 {
        let mut m = x.exp2().floor() as u64;
        while m > 1 && erasure_error(n, beta, (m as f64).log2())? > eps {
            m -= 1;
        }
        while ((m + 1) as f64).log2() <= n as f64
            && erasure_error(n, beta, ((m + 1) as f64).log2())? <= eps
        {
            m += 1;
        }
        ((m.max(1) as f64).log2(), Some(m.max(1)))
    } else {
        (x, None)
    };
    let mut point = real;
    point.rate = log2_m / n as f64;
    Ok(ErasureCode {
        log2_m,
        m,
        error: erasure_error(n, beta, log2_m)?,
        point,
    })
}

/// `1 - β + √(β(1-β)/n) Φ⁻¹(ε)`.
pub fn erasure_order3(n: u64, eps: f64, beta: f64) -> Result<BoundPoint> {
    check_probability("beta", beta)?;
    check_unit_interval_open("eps", eps)?;
    check_n(n, u64::MAX)?;
    let rate = gaussian_expansion(1.0 - beta, beta * (1.0 - beta), n as f64, eps, 0.0)?;
    Ok(BoundPoint::new(
        ChannelFamily::Erasure,
        beta,
        n,
        eps,
        BoundKind::ExactBoundary,
        Method::Order3,
        rate,
    ))
}

/// Depolarizing outer bound, which coincides with the dephasing bound at `γ = α`.
pub fn depolarizing_outer(n: u64, eps: f64, alpha: f64, method: Method) -> Result<BoundPoint> {
    let mut p = match method {
        Method::Exact => dephasing_outer_exact(n, eps, alpha)?,
        Method::Order2 => dephasing_order2(n, eps, alpha)?,
        Method::Order3 => dephasing_order3(n, eps, alpha)?,
    };
    p.channel = ChannelFamily::Depolarizing;
    p.kind = BoundKind::Outer;
    Ok(p)
}

/// `I_c(D_α) = 1 - h(α) - α log₂ 3`.
pub fn depolarizing_coherent_information(alpha: f64) -> f64 {
    1.0 - binary_entropy(alpha) - alpha * LOG2_3
}

/// Smallest blocklength at which the depolarizing outer bound exceeds `I_c(D_α)`.
///
/// The exact mode uses integer code sizes, `log₂⌊2^{D_H}⌋ / n`.
pub fn min_uses_to_exceed_ci(alpha: f64, eps: f64, method: Method) -> Result<u64> {
    check_probability("alpha", alpha)?;
    check_unit_interval_open("eps", eps)?;
    let ic = depolarizing_coherent_information(alpha);
    let exceeds = |n: u64| -> Result<bool> {
        let r = match method {
            Method::Exact => dephasing_outer_exact_integer(n, eps, alpha)?.rate,
            m => depolarizing_outer(n, eps, alpha, m)?.rate,
        };
        Ok(r > ic)
    };
    if method == Method::Order2 && eps < 0.5 {
        // the second-order bound increases with n; start next to the analytic crossing
        let gap = 1.0 - binary_entropy(alpha) - ic;
        if !(gap > 0.0) {
            return Err(Error::NotConverged(format!(
                "outer bound never exceeds I_c for alpha = {alpha}"
            )));
        }
        let z = gaussian_quantile(eps)?;
        let seed = (binary_entropy_variance(alpha) * z * z / (gap * gap)).ceil();
        if !(seed <= MAX_SCAN_N as f64) {
            return Err(Error::NotConverged(format!(
                "crossing beyond n = {MAX_SCAN_N}"
            )));
        }
        let mut n = (seed as u64).max(1);
        while n > 1 && exceeds(n - 1)? {
            n -= 1;
        }
        while !exceeds(n)? {
            n += 1;
        }
        return Ok(n);
    }
    let limit = if method == Method::Exact {
        MAX_INNER_N
    } else {
        MAX_SCAN_N
    };
    for n in 1..=limit {
        if exceeds(n)? {
            return Ok(n);
        }
    }
    Err(Error::NotConverged(format!(
        "outer bound stays below I_c up to n = {limit}"
    )))
}

/// Second-order inner bound from precomputed coherent-information data.
pub fn inner_order2_from(
    info: &ChannelCoherentInfo,
    channel: ChannelFamily,
    param: f64,
    n: u64,
    eps: f64,
) -> Result<BoundPoint> {
    check_unit_interval_open("eps", eps)?;
    check_n(n, u64::MAX)?;
    let rate = gaussian_expansion(info.value, info.variance(eps), n as f64, eps, 0.0)?;
    Ok(BoundPoint::new(
        channel,
        param,
        n,
        eps,
        BoundKind::Inner,
        Method::Order2,
        rate,
    ))
}

/// `I_c(N) + √(V_c^ε(N)/n) Φ⁻¹(ε)`.
pub fn general_inner_order2(ch: &Channel, n: u64, eps: f64) -> Result<BoundPoint> {
    check_unit_interval_open("eps", eps)?;
    let info = channel_coherent_information(ch, &CoherentInfoConfig::default())?;
    inner_order2_from(&info, ChannelFamily::General, f64::NAN, n, eps)
}

/// Evaluates `f` on every blocklength in parallel, keeping the input order.
pub fn sweep<F>(ns: &[u64], f: F) -> Result<Vec<BoundPoint>>
where
    F: Fn(u64) -> Result<BoundPoint> + Sync,
{
    ns.par_iter().map(|&n| f(n)).collect()
}
