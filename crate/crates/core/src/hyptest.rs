//! Hypothesis-testing relative entropy `D_H^ε(ρ‖σ) = -log β_{1-ε}(ρ‖σ)`.

use statrs::function::gamma::ln_gamma;

use crate::entropy::gaussian_quantile;
use crate::qcore::linalg::{diag, eigh, identity, trace_product_re, CMatrix};
use crate::qcore::DensityOperator;
use crate::sdp::{solve, BlockOperator, SdpOptions, SdpProblem, SuperOperator};
use crate::{Error, Result};

const LN2: f64 = std::f64::consts::LN_2;

/// Largest per-letter alphabet accepted by [`dh_classical_product`].
pub const MAX_ALPHABET: usize = 3;
/// Blocklength limit when three symbols have pairwise distinct likelihood ratios.
pub const MAX_N_THREE_CLASSES: u64 = 4000;
/// Blocklength limit for binary likelihood-ratio classes.
pub const MAX_N: u64 = 1_000_000;

/// `n`-fold product test between `p^{×n}` and `q^{×n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryProductTest {
    n: u64,
    p: Vec<f64>,
    q: Vec<f64>,
    eps: f64,
}

impl BinaryProductTest {
    pub fn new(n: u64, p: Vec<f64>, q: Vec<f64>, eps: f64) -> Result<Self> {
        crate::error::check_unit_interval_open("eps", eps)?;
        if n == 0 {
            return Err(Error::InvalidArgument(
                "blocklength must be at least 1".into(),
            ));
        }
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                actual: q.len(),
            });
        }
        if p.is_empty() || p.len() > MAX_ALPHABET {
            return Err(Error::InvalidArgument(format!(
                "alphabet size {} outside 1..={MAX_ALPHABET}",
                p.len()
            )));
        }
        for dist in [&p, &q] {
            if dist.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "negative probability in {dist:?}"
                )));
            }
            let s: f64 = dist.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::NotNormalized(s));
            }
        }
        Ok(Self { n, p, q, eps })
    }

    /// Agreement/disagreement test of the binary symmetric channel with crossover `γ`
    /// against a uniform output: `p = (1-γ, γ)`, `q = (1/2, 1/2)`.
    pub fn bsc(gamma: f64, n: u64, eps: f64) -> Result<Self> {
        crate::error::check_unit_interval_open("gamma", gamma)?;
        Self::new(n, vec![1.0 - gamma, gamma], vec![0.5, 0.5], eps)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Optimal randomized Neyman–Pearson test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpTestResult {
    /// `-log₂ β` in bits per block.
    pub dh: f64,
    pub log2_beta: f64,
    /// Log-likelihood ratio `log₂(p/q)` of the boundary class.
    pub threshold: f64,
    /// Fraction of the boundary class accepted.
    pub randomization: f64,
}

/// Running `ln Σ exp(x_i)` with a compensated inner sum.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumExp {
    max: f64,
    sum: f64,
    comp: f64,
}

impl LogSumExp {
    pub(crate) fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
        }
    }

    pub(crate) fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            let scale = (self.max - x).exp();
            self.sum *= scale;
            self.comp *= scale;
            self.max = x;
        }
        let y = (x - self.max).exp() - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        if self.sum > 0.0 {
            self.max + self.sum.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Likelihood-ratio class: natural-log masses under both hypotheses.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LrClass {
    pub llr: f64,
    pub ln_p: f64,
    pub ln_q: f64,
}

/// Accumulates classes in descending likelihood ratio until the `p`-mass reaches
/// `1-ε`, splitting the boundary class. Classes must already be grouped by ratio.
pub(crate) fn neyman_pearson_sweep(mut classes: Vec<LrClass>, eps: f64) -> NpTestResult {
    classes.sort_by(|a, b| b.llr.total_cmp(&a.llr));
    let target = 1.0 - eps;
    let mut acc = KahanSum::default();
    let mut beta = LogSumExp::new();
    let mut threshold = f64::INFINITY;
    let mut randomization = 1.0;
    for c in &classes {
        let pm = c.ln_p.exp();
        let before = acc.value();
        if before + pm >= target {
            let frac = if pm > 0.0 {
                ((target - before) / pm).clamp(0.0, 1.0)
            } else {
                1.0
            };
            if frac > 0.0 {
                beta.add(frac.ln() + c.ln_q);
            }
            threshold = c.llr / LN2;
            randomization = frac;
            let lb = beta.value() / LN2;
            return NpTestResult {
                dh: -lb,
                log2_beta: lb,
                threshold,
                randomization,
            };
        }
        acc.add(pm);
        beta.add(c.ln_q);
        threshold = c.llr / LN2;
    }
    // rounding left the target just out of reach: everything accepted
    let lb = beta.value() / LN2;
    NpTestResult {
        dh: -lb,
        log2_beta: lb,
        threshold,
        randomization,
    }
}

/// Groups classes whose ratios agree to a relative `1e-12`.
pub(crate) fn merge_ties(mut classes: Vec<LrClass>) -> Vec<LrClass> {
    classes.sort_by(|a, b| b.llr.total_cmp(&a.llr));
    let mut out: Vec<(LrClass, LogSumExp, LogSumExp)> = Vec::new();
    for c in classes {
        if let Some(last) = out.last_mut() {
            let scale = 1.0 + last.0.llr.abs().min(1e300);
            let same = if last.0.llr.is_infinite() || c.llr.is_infinite() {
                last.0.llr == c.llr
            } else {
                (last.0.llr - c.llr).abs() <= 1e-12 * scale
            };
            if same {
                last.1.add(c.ln_p);
                last.2.add(c.ln_q);
                continue;
            }
        }
        let mut lp = LogSumExp::new();
        lp.add(c.ln_p);
        let mut lq = LogSumExp::new();
        lq.add(c.ln_q);
        out.push((c, lp, lq));
    }
    out.into_iter()
        .map(|(c, lp, lq)| LrClass {
            llr: c.llr,
            ln_p: lp.value(),
            ln_q: lq.value(),
        })
        .collect()
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

pub(crate) fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Exact `D_H^ε(p^{×n} ‖ q^{×n})` by a Neyman–Pearson sweep over type classes.
pub fn dh_classical_product(t: &BinaryProductTest) -> Result<NpTestResult> {
    // symbols with p = 0 never help; symbols sharing a ratio merge into one
    let mut letters: Vec<(f64, f64)> = Vec::new();
    for (&p, &q) in t.p.iter().zip(&t.q) {
        if p <= 0.0 {
            continue;
        }
        let ratio = if q > 0.0 { p / q } else { f64::INFINITY };
        match letters.iter_mut().find(|(lp, lq)| {
            let r = if *lq > 0.0 { lp / lq } else { f64::INFINITY };
            if r.is_infinite() || ratio.is_infinite() {
                r == ratio
            } else {
                (r - ratio).abs() <= 1e-14 * r.max(ratio)
            }
        }) {
            Some(l) => {
                l.0 += p;
                l.1 += q;
            }
            None => letters.push((p, q)),
        }
    }
    let n = t.n;
    let k = letters.len();
    let limit = if k <= 2 { MAX_N } else { MAX_N_THREE_CLASSES };
    if n > limit {
        return Err(Error::InvalidArgument(format!(
            "blocklength {n} exceeds the limit {limit} for {k} likelihood-ratio classes"
        )));
    }
    let lp: Vec<f64> = letters.iter().map(|l| ln_or_neg_inf(l.0)).collect();
    let lq: Vec<f64> = letters.iter().map(|l| ln_or_neg_inf(l.1)).collect();
    let llr: Vec<f64> = lp.iter().zip(&lq).map(|(a, b)| a - b).collect();
    let term = |count: u64, i: usize, logs: &[f64]| {
        if count == 0 {
            0.0
        } else {
            count as f64 * logs[i]
        }
    };
    let mut classes = Vec::new();
    match k {
        1 => classes.push(LrClass {
            llr: n as f64 * llr[0],
            ln_p: term(n, 0, &lp),
            ln_q: term(n, 0, &lq),
        }),
        2 => {
            for a in 0..=n {
                let b = n - a;
                let lc = ln_binomial(n, a);
                classes.push(LrClass {
                    llr: term(a, 0, &llr) + term(b, 1, &llr),
                    ln_p: lc + term(a, 0, &lp) + term(b, 1, &lp),
                    ln_q: lc + term(a, 0, &lq) + term(b, 1, &lq),
                });
            }
        }
        _ => {
            for a in 0..=n {
                for b in 0..=(n - a) {
                    let c = n - a - b;
                    let lc = ln_factorial(n) - ln_factorial(a) - ln_factorial(b) - ln_factorial(c);
                    classes.push(LrClass {
                        llr: term(a, 0, &llr) + term(b, 1, &llr) + term(c, 2, &llr),
                        ln_p: lc + term(a, 0, &lp) + term(b, 1, &lp) + term(c, 2, &lp),
                        ln_q: lc + term(a, 0, &lq) + term(b, 1, &lq) + term(c, 2, &lq),
                    });
                }
            }
        }
    }
    // infinite ratios carry no q-mass and are accepted first
    for c in &mut classes {
        if c.ln_q == f64::NEG_INFINITY {
            c.llr = f64::INFINITY;
        }
    }
    Ok(neyman_pearson_sweep(merge_ties(classes), t.eps))
}

/// Weight of `ρ` outside the support of `σ`.
fn weight_outside_support(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let (vals, vecs) = eigh(sigma);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let mut w = 0.0;
    for (k, &v) in vals.iter().enumerate() {
        if v <= 1e-12 * top.max(1.0) {
            let q = vecs.column(k);
            w += (q.adjoint() * rho * q)[(0, 0)].re;
        }
    }
    w
}

/// `β_{1-ε}(ρ‖σ) = min { tr[Λσ] : 0 ≤ Λ ≤ 1, tr[Λρ] ≥ 1-ε }` via the SDP solver.
pub fn beta_quantum(
    rho: &DensityOperator,
    sigma: &CMatrix,
    eps: f64,
    opts: &SdpOptions,
) -> Result<f64> {
    crate::error::check_unit_interval_open("eps", eps)?;
    let d = rho.dim();
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: sigma.nrows(),
        });
    }
    if d > 16 {
        return Err(Error::InvalidArgument(format!("dimension {d} exceeds 16")));
    }
    crate::qcore::check_psd(sigma)?;
    if weight_outside_support(rho.matrix(), sigma) >= 1.0 - eps {
        return Ok(0.0);
    }
    let r = rho.matrix().clone();
    let map = SuperOperator::from_fn(vec![d], vec![d, 1], move |x| {
        let l = x.block(0);
        BlockOperator::new(vec![l.clone(), diag(&[-trace_product_re(l, &r)])])
            .expect("square blocks")
    })?;
    let objective = BlockOperator::new(vec![-sigma.clone()])?;
    let bound = BlockOperator::new(vec![identity(d), diag(&[-(1.0 - eps)])])?;
    let sol = solve(&SdpProblem::new(objective, map, bound)?, opts).require_optimal()?;
    Ok((-sol.primal_value).max(0.0))
}

/// `D_H^ε(ρ‖σ)` in bits; `+∞` when `ρ` can be told apart from `σ` with no type-II error.
pub fn dh_quantum(rho: &DensityOperator, sigma: &CMatrix, eps: f64) -> Result<f64> {
    let opts = SdpOptions {
        tol: 1e-10,
        ..SdpOptions::default()
    };
    let beta = beta_quantum(rho, sigma, eps, &opts)?;
    Ok(if beta > 0.0 {
        -beta.log2()
    } else {
        f64::INFINITY
    })
}

/// `D + √(V/n) Φ⁻¹(ε) + c · log₂(n)/n`.
pub fn gaussian_expansion(d: f64, v: f64, n: f64, eps: f64, log_coeff: f64) -> Result<f64> {
    if v < 0.0 {
        return Err(Error::InvalidArgument(format!("variance {v} is negative")));
    }
    if !(n >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "blocklength {n} is below 1"
        )));
    }
    let z = gaussian_quantile(eps)?;
    Ok(d + (v / n).sqrt() * z + log_coeff * n.log2() / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{binary_entropy, binary_entropy_variance};
    use crate::qcore::random::{random_channel, random_state};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_state(2, &mut rng);
        for eps in [0.05, 0.3] {
            let dh = dh_quantum(&rho, rho.matrix(), eps).unwrap();
            assert!((dh + (1.0 - eps).log2()).abs() < 1e-7, "{dh}");
        }
    }

    #[test]
    fn commuting_pair_matches_neyman_pearson() {
        let rho = DensityOperator::diagonal(&[0.9, 0.1]).unwrap();
        let dh = dh_quantum(&rho, &diag(&[0.5, 0.5]), 0.05).unwrap();
        // β = 0.5 + 0.5 · 0.5
        assert!((dh - (4.0f64 / 3.0).log2()).abs() < 1e-7);
        let t = BinaryProductTest::bsc(0.1, 1, 0.05).unwrap();
        let np = dh_classical_product(&t).unwrap();
        assert!((np.dh - dh).abs() < 1e-8);
        assert!((np.dh - 0.41504).abs() < 1e-5);
        assert!((np.randomization - 0.5).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_support_is_infinite() {
        let rho = DensityOperator::diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(
            dh_quantum(&rho, &diag(&[0.0, 1.0]), 0.1).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn quantum_dh_monotone_in_eps_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random_state(2, &mut rng);
        let sigma = random_state(2, &mut rng).into_matrix();
        let mut last = f64::NEG_INFINITY;
        for eps in [0.01, 0.05, 0.1, 0.3, 0.6] {
            let dh = dh_quantum(&rho, &sigma, eps).unwrap();
            assert!(dh >= last - 1e-9);
            last = dh;
        }
        let base = dh_quantum(&rho, &sigma, 0.1).unwrap();
        let scaled = dh_quantum(&rho, &(&sigma * crate::qcore::linalg::c(2.0)), 0.1).unwrap();
        assert!((base - scaled - 1.0).abs() < 1e-7);
    }

    #[test]
    fn data_processing() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..8 {
            let rho = random_state(2, &mut rng);
            let sigma = random_state(2, &mut rng);
            let ch = random_channel(2, 2, 2, &mut rng);
            let before = dh_quantum(&rho, sigma.matrix(), 0.1).unwrap();
            let after = dh_quantum(
                &ch.apply(&rho).unwrap(),
                ch.apply(&sigma).unwrap().matrix(),
                0.1,
            )
            .unwrap();
            assert!(after <= before + 1e-7, "{after} > {before}");
        }
    }

    #[test]
    fn classical_n1_matches_quantum_on_diagonal_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        use rand::Rng;
        for _ in 0..10 {
            let raw_p: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 0.05).collect();
            let raw_q: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 0.05).collect();
            let sp: f64 = raw_p.iter().sum();
            let sq: f64 = raw_q.iter().sum();
            let p: Vec<f64> = raw_p.iter().map(|x| x / sp).collect();
            let q: Vec<f64> = raw_q.iter().map(|x| x / sq).collect();
            let eps = rng.random_range(0.02..0.8);
            let t = BinaryProductTest::new(1, p.clone(), q.clone(), eps).unwrap();
            let c = dh_classical_product(&t).unwrap().dh;
            let qd = dh_quantum(&DensityOperator::diagonal(&p).unwrap(), &diag(&q), eps).unwrap();
            assert!((c - qd).abs() < 1e-8, "{c} vs {qd}");
        }
    }

    #[test]
    fn classical_rate_approaches_divergence() {
        let gamma = 0.1;
        let d = 1.0 - binary_entropy(gamma);
        let n = 10_000;
        let r = dh_classical_product(&BinaryProductTest::bsc(gamma, n, 0.25).unwrap()).unwrap();
        let rate = r.dh / n as f64;
        assert!(((rate - d) / d).abs() < 0.02, "{rate}");
    }

    #[test]
    fn large_blocklength_is_finite() {
        let r = dh_classical_product(&BinaryProductTest::bsc(0.11, MAX_N, 0.01).unwrap()).unwrap();
        assert!(r.dh.is_finite() && r.dh > 0.0);
        assert!(BinaryProductTest::bsc(0.11, 0, 0.01).is_err());
        assert!(BinaryProductTest::bsc(0.11, 10, 1.0).is_err());
    }

    #[test]
    fn zero_q_symbol_is_free() {
        let t = BinaryProductTest::new(3, vec![0.5, 0.5], vec![1.0, 0.0], 0.1).unwrap();
        // accepting any sequence containing symbol 1 costs nothing; 7/8 of p-mass
        let r = dh_classical_product(&t).unwrap();
        let expected = -((0.9 - 0.875) / 0.125f64).log2();
        assert!((r.dh - expected).abs() < 1e-12);
    }

    #[test]
    fn expansion_examples() {
        let d = 0.7;
        let v = 0.4;
        assert!((gaussian_expansion(d, v, 1e9, 0.05, 0.5).unwrap() - d).abs() < 1e-4);
        let n: f64 = 300.0;
        assert_eq!(
            gaussian_expansion(d, v, n, 0.5, 0.5).unwrap(),
            d + 0.5 * n.log2() / n
        );
        let g = 0.1;
        let val = gaussian_expansion(
            1.0 - binary_entropy(g),
            binary_entropy_variance(g),
            2000.0,
            0.05,
            0.5,
        )
        .unwrap();
        let manual = 0.5310 - 1.6449 * (0.90427f64 / 2000.0).sqrt() + 2000f64.log2() / 4000.0;
        assert!((val - manual).abs() < 1e-4, "{val} vs {manual}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn classical_monotone_in_eps(n in 1u64..200, gamma in 0.01f64..0.49, e1 in 0.01f64..0.98, e2 in 0.01f64..0.98) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let a = dh_classical_product(&BinaryProductTest::bsc(gamma, n, lo).unwrap()).unwrap().dh;
            let b = dh_classical_product(&BinaryProductTest::bsc(gamma, n, hi).unwrap()).unwrap().dh;
            prop_assert!(b >= a - 1e-9);
        }
    }
}
