use clap::ValueEnum;
use finblock::channel_bounds::erasure_exact_boundary;
use finblock::hyptest::{dh_classical_product, BinaryProductTest};
use finblock::oracle_sim::{
    brute_force_np, css_simulation, erasure_protocol_fidelity, repetition_checks, SimConfig,
    SimMode, SyndromeDecoder, MAX_BRUTE_N,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Suite {
    Np,
    Erasure,
    Css,
}

#[derive(clap::Args, Debug)]
pub struct OracleArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Random cases (np) or Monte-Carlo trials (erasure, css).
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest blocklength (np) or blocklength (erasure, css).
    #[arg(long)]
    n: Option<u64>,
    /// Erasure probability (erasure) or dephasing probability (css).
    #[arg(long)]
    param: Option<f64>,
    /// Target error of the erasure boundary code.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
}

fn report(ok: bool, line: String) -> Result<(), CliError> {
    println!("{} {line}", if ok { "PASS" } else { "FAIL" });
    if ok {
        Ok(())
    } else {
        Err(CliError::Numeric("oracle check failed".into()))
    }
}

fn random_distribution(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.01).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn np_suite(cfg: &SimConfig) -> Result<(), CliError> {
    if cfg.n > MAX_BRUTE_N as u64 {
        return Err(CliError::BadArgs(format!(
            "--n must be at most {MAX_BRUTE_N}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.trials {
        let k = rng.random_range(2..=3);
        let (p, q) = (
            random_distribution(k, &mut rng),
            random_distribution(k, &mut rng),
        );
        let n = rng.random_range(1..=cfg.n as u32);
        let eps = rng.random_range(0.001..0.999);
        let brute = -brute_force_np(&p, &q, n, eps)?.log2();
        let fast = dh_classical_product(&BinaryProductTest::new(n as u64, p, q, eps)?)?.dh;
        worst = worst.max((brute - fast).abs());
    }
    report(
        worst <= 1e-9,
        format!(
            "np: {} cases with n ≤ {}, max |Δ D_H| = {worst:.3e}",
            cfg.trials, cfg.n
        ),
    )
}

fn erasure_suite(cfg: &SimConfig, eps: f64) -> Result<(), CliError> {
    let rate = erasure_exact_boundary(cfg.n, eps, cfg.param)?.rate;
    let m = (cfg.n as f64 * rate).exp2();
    let exact = erasure_protocol_fidelity(cfg.n, m, cfg.param, SimMode::Exact)?.fidelity;
    let mc = erasure_protocol_fidelity(
        cfg.n,
        m,
        cfg.param,
        SimMode::MonteCarlo {
            trials: cfg.trials,
            seed: cfg.seed,
        },
    )?;
    let dev = (1.0 - exact - eps).abs();
    report(
        dev <= 1e-10 && mc.agrees_with(exact, 3.0),
        format!(
            "erasure: n = {}, R = {rate:.9}, exact error {:.12}, Monte Carlo fidelity {:.6} ± {:.1e}",
            cfg.n,
            1.0 - exact,
            mc.fidelity,
            mc.std_error
        ),
    )
}

fn css_suite(cfg: &SimConfig) -> Result<(), CliError> {
    let n = cfg.n as usize;
    let h = repetition_checks(n);
    let exact = SyndromeDecoder::new(&h, n)?.exact_fidelity(cfg.param)?;
    let mc = css_simulation(&h, n, cfg.param, cfg.trials, cfg.seed)?;
    report(
        mc.agrees_with(exact, 3.0) || (mc.std_error == 0.0 && mc.fidelity == exact),
        format!(
            "css: repetition code n = {n}, exact fidelity {exact:.9}, Monte Carlo {:.6} ± {:.1e}",
            mc.fidelity, mc.std_error
        ),
    )
}

pub fn run(a: &OracleArgs) -> Result<(), CliError> {
    match a.suite {
        Suite::Np => np_suite(&SimConfig::new(
            a.trials.unwrap_or(200),
            a.seed,
            a.n.unwrap_or(12),
            f64::NAN,
        )?),
        Suite::Erasure => erasure_suite(
            &SimConfig::new(
                a.trials.unwrap_or(100_000),
                a.seed,
                a.n.unwrap_or(100),
                a.param.unwrap_or(0.25),
            )?,
            a.eps,
        ),
        Suite::Css => css_suite(&SimConfig::new(
            a.trials.unwrap_or(100_000),
            a.seed,
            a.n.unwrap_or(3),
            a.param.unwrap_or(0.1),
        )?),
    }
}
