//! Brute-force and Monte-Carlo oracles: exhaustive Neyman–Pearson tests, the erasure
//! entanglement-transmission protocol and CSS codes under dephasing noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{check_probability, check_unit_interval_open};
use crate::{Error, Result};

/// Largest blocklength for exhaustive enumeration.
pub const MAX_BRUTE_N: u32 = 12;
/// Largest blocklength for coset-leader tables.
pub const MAX_CSS_N: usize = 15;
/// Monte-Carlo trials are split into this many independent substreams, so estimates
/// do not depend on the number of worker threads.
pub const SUBSTREAMS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub n: u64,
    pub param: f64,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64, n: u64, param: f64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidArgument(
                "at least one trial is required".into(),
            ));
        }
        if n == 0 {
            return Err(Error::InvalidArgument(
                "blocklength must be at least 1".into(),
            ));
        }
        Ok(Self {
            trials,
            seed,
            n,
            param,
        })
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityEstimate {
    pub fidelity: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl FidelityEstimate {
    fn exact(fidelity: f64) -> Self {
        Self {
            fidelity,
            std_error: 0.0,
            trials: 0,
        }
    }

    /// `|self - value| ≤ k` standard errors.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.fidelity - value).abs() <= k * self.std_error
    }
}

/// Runs `trial` on [`SUBSTREAMS`] seeded substreams in parallel.
fn monte_carlo<F>(trials: u64, seed: u64, trial: F) -> FidelityEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let sums: Vec<(f64, f64)> = (0..SUBSTREAMS)
        .into_par_iter()
        .map(|s| {
            let count = trials / SUBSTREAMS + u64::from(s < trials % SUBSTREAMS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..count {
                let x = trial(&mut rng);
                sum += x;
                sq += x * x;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let t = trials as f64;
    let mean = sum / t;
    let var = if trials > 1 {
        ((sq - t * mean * mean) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    FidelityEstimate {
        fidelity: mean,
        std_error: (var / t).sqrt(),
        trials,
    }
}

/// Optimal type-II error `β_{1-ε}(p^{×n} ‖ q^{×n})` by enumerating every sequence.
pub fn brute_force_np(p: &[f64], q: &[f64], n: u32, eps: f64) -> Result<f64> {
    check_unit_interval_open("eps", eps)?;
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    if p.is_empty() || p.len() > 3 {
        return Err(Error::InvalidArgument(format!(
            "alphabet size {} outside 1..=3",
            p.len()
        )));
    }
    if n == 0 || n > MAX_BRUTE_N {
        return Err(Error::InvalidArgument(format!(
            "blocklength {n} outside 1..={MAX_BRUTE_N}"
        )));
    }
    for &x in p.iter().chain(q) {
        check_probability("probability", x)?;
    }
    let a = p.len();
    let total = a.pow(n);
    let mut outcomes: Vec<(f64, f64, f64)> = Vec::with_capacity(total);
    for idx in 0..total {
        let (mut pp, mut qq) = (1.0, 1.0);
        let mut rest = idx;
        for _ in 0..n {
            pp *= p[rest % a];
            qq *= q[rest % a];
            rest /= a;
        }
        if pp > 0.0 {
            let ratio = if qq > 0.0 { pp / qq } else { f64::INFINITY };
            outcomes.push((ratio, pp, qq));
        }
    }
    outcomes.sort_by(|x, y| y.0.total_cmp(&x.0));
    let target = 1.0 - eps;
    let (mut mass, mut beta) = (0.0, 0.0);
    for (_, pp, qq) in outcomes {
        if mass + pp >= target {
            beta += qq * (target - mass) / pp;
            return Ok(beta);
        }
        mass += pp;
        beta += qq;
    }
    Ok(beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

fn erasure_branch_fidelity(n: u64, k: u64, m: f64, erased: u64) -> f64 {
    if erased <= n - k {
        // k intact pairs: measuring the subset POVM leaves a maximally entangled state on S
        1.0
    } else {
        // embed the n - l surviving pairs into dimension |M|
        ((n - erased) as f64).exp2() / m
    }
}

/// Entanglement fidelity of the cpp-assisted erasure protocol with code size `m`
/// (real values interpolate the boundary).
pub fn erasure_protocol_fidelity(
    n: u64,
    m: f64,
    beta: f64,
    mode: SimMode,
) -> Result<FidelityEstimate> {
    check_probability("beta", beta)?;
    if !(m >= 1.0) {
        return Err(Error::InvalidArgument(format!("code size {m} is below 1")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "blocklength must be at least 1".into(),
        ));
    }
    let k = m.log2().ceil() as u64;
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "code size {m} exceeds 2^{n}"
        )));
    }
    match mode {
        SimMode::Exact => {
            let mut err = 0.0;
            for l in (n - k + 1)..=n {
                let ln_p = ln_binomial_pmf(n, l, beta);
                err += ln_p.exp() * (1.0 - erasure_branch_fidelity(n, k, m, l));
            }
            Ok(FidelityEstimate::exact(1.0 - err))
        }
        SimMode::MonteCarlo { trials, seed } => {
            let cfg = SimConfig::new(trials, seed, n, beta)?;
            let dist = Binomial::new(n, beta).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(monte_carlo(cfg.trials, cfg.seed, |rng| {
                erasure_branch_fidelity(n, k, m, dist.sample(rng))
            }))
        }
    }
}

fn ln_binomial_pmf(n: u64, l: u64, p: f64) -> f64 {
    use crate::hyptest::ln_factorial;
    let c = ln_factorial(n) - ln_factorial(l) - ln_factorial(n - l);
    let a = if l == 0 { 0.0 } else { l as f64 * p.ln() };
    let b = if l == n {
        0.0
    } else {
        (n - l) as f64 * (1.0 - p).ln()
    };
    c + a + b
}

/// Binary linear code given by a parity-check matrix, with a minimum-weight coset-leader
/// syndrome decoder.
#[derive(Debug, Clone)]
pub struct SyndromeDecoder {
    n: usize,
    rank: usize,
    columns: Vec<u32>,
    leaders: Vec<u32>,
}

impl SyndromeDecoder {
    /// `h` lists the checks; every row must have `n` entries in `{0, 1}`. An empty list
    /// is the code without checks.
    pub fn new(h: &[Vec<u8>], n: usize) -> Result<Self> {
        if n == 0 || n > MAX_CSS_N {
            return Err(Error::InvalidArgument(format!(
                "blocklength {n} outside 1..={MAX_CSS_N}"
            )));
        }
        if h.len() > 31 {
            return Err(Error::InvalidArgument(format!(
                "{} checks exceed 31",
                h.len()
            )));
        }
        for row in h {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            if row.iter().any(|&b| b > 1) {
                return Err(Error::InvalidArgument(
                    "parity-check entries must be 0 or 1".into(),
                ));
            }
        }
        let columns: Vec<u32> = (0..n)
            .map(|j| {
                h.iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, row)| acc | (u32::from(row[j]) << i))
            })
            .collect();
        let mut leaders = vec![u32::MAX; 1 << h.len()];
        let mut patterns: Vec<u32> = (0..(1u32 << n)).collect();
        patterns.sort_by_key(|e| (e.count_ones(), *e));
        for e in patterns {
            let s = syndrome(&columns, e) as usize;
            if leaders[s] == u32::MAX {
                leaders[s] = e;
            }
        }
        let rank = gf2_rank(h);
        Ok(Self {
            n,
            rank,
            columns,
            leaders,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Code dimension `n - rank(H)`.
    pub fn dimension(&self) -> usize {
        self.n - self.rank
    }

    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.n as f64
    }

    pub fn syndrome(&self, e: u32) -> u32 {
        syndrome(&self.columns, e)
    }

    /// Minimum-weight error pattern consistent with a syndrome.
    pub fn leader(&self, s: u32) -> Option<u32> {
        self.leaders
            .get(s as usize)
            .copied()
            .filter(|&l| l != u32::MAX)
    }

    /// Decoding succeeds only when the coset leader is the actual error pattern.
    pub fn corrects(&self, e: u32) -> bool {
        self.leader(self.syndrome(e)) == Some(e)
    }

    /// Exact success probability by enumeration of all `2^n` error patterns.
    pub fn exact_fidelity(&self, gamma: f64) -> Result<f64> {
        check_probability("gamma", gamma)?;
        let mut f = 0.0;
        for e in 0..(1u32 << self.n) {
            if self.corrects(e) {
                let w = e.count_ones() as i32;
                f += gamma.powi(w) * (1.0 - gamma).powi(self.n as i32 - w);
            }
        }
        Ok(f)
    }
}

fn syndrome(columns: &[u32], e: u32) -> u32 {
    columns
        .iter()
        .enumerate()
        .filter(|(j, _)| e >> j & 1 == 1)
        .fold(0, |acc, (_, c)| acc ^ c)
}

fn gf2_rank(h: &[Vec<u8>]) -> usize {
    let mut rows: Vec<u32> = h
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold(0u32, |acc, (j, &b)| acc | (u32::from(b) << j))
        })
        .collect();
    let mut rank = 0;
    for bit in 0..32 {
        let Some(pivot) = (rank..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        for i in 0..rows.len() {
            if i != rank && rows[i] >> bit & 1 == 1 {
                rows[i] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank
}

/// Monte-Carlo entanglement fidelity of the CSS code built from `h` over the dephasing
/// channel `Z_γ`; any uncorrected pattern counts as fidelity 0.
pub fn css_simulation(
    h: &[Vec<u8>],
    n: usize,
    gamma: f64,
    trials: u64,
    seed: u64,
) -> Result<FidelityEstimate> {
    check_probability("gamma", gamma)?;
    let dec = SyndromeDecoder::new(h, n)?;
    let cfg = SimConfig::new(trials, seed, n as u64, gamma)?;
    Ok(monte_carlo(cfg.trials, cfg.seed, |rng| {
        let mut e = 0u32;
        for j in 0..n {
            if rng.random::<f64>() < gamma {
                e |= 1 << j;
            }
        }
        f64::from(u8::from(dec.corrects(e)))
    }))
}

/// Parity-check matrix of the length-`n` repetition code.
pub fn repetition_checks(n: usize) -> Vec<Vec<u8>> {
    (0..n.saturating_sub(1))
        .map(|i| (0..n).map(|j| u8::from(j == i || j == i + 1)).collect())
        .collect()
}
