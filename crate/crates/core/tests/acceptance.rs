use std::process::ExitCode;
use std::time::Instant;

use finblock::channel_bounds::{
    dephasing_inner_exact, dephasing_order2, dephasing_order3, dephasing_outer_exact,
    depolarizing_outer, ea_dephasing_order2, erasure_exact_boundary, erasure_order3,
    min_uses_to_exceed_ci, Method,
};
use finblock::entropy::{binary_entropy, gaussian_quantile};
use finblock::hyptest::{dh_classical_product, BinaryProductTest};
use finblock::metaconverse::f_primal;
use finblock::oracle_sim::{brute_force_np, erasure_protocol_fidelity, SimMode};
use finblock::qcore::random::random_channel;
use finblock::qcore::Channel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = (bool, String);

fn n0_order2() -> Outcome {
    let start = Instant::now();
    let n0 = min_uses_to_exceed_ci(0.05, 0.01, Method::Order2).unwrap();
    let secs = start.elapsed().as_secs_f64();
    (
        n0.abs_diff(738) <= 1 && secs < 1.0,
        format!("N0 = {n0} in {secs:.3} s (want 738 ± 1, < 1 s)"),
    )
}

fn n0_exact() -> Outcome {
    let start = Instant::now();
    let n0 = min_uses_to_exceed_ci(0.0825, 0.055, Method::Exact).unwrap();
    let n0_secs = start.elapsed().as_secs_f64();
    let start = Instant::now();
    for n in 1..=100 {
        depolarizing_outer(n, 0.055, 0.0825, Method::Exact).unwrap();
    }
    let sweep_secs = start.elapsed().as_secs_f64();
    (
        n0.abs_diff(42) <= 1 && sweep_secs < 10.0,
        format!("N0 = {n0} in {n0_secs:.3} s, exact n ≤ 100 sweep {sweep_secs:.3} s (want 42 ± 1, < 10 s)"),
    )
}

fn erasure_ninety_percent() -> Outcome {
    let n = (1..=10_000u64)
        .find(|&n| erasure_order3(n, 0.01, 0.25).is_ok_and(|p| p.rate >= 0.675))
        .unwrap_or(0);
    let z = gaussian_quantile(0.01).unwrap();
    let closed = 0.25 * 0.75 * z * z / (0.1f64 * 0.75).powi(2);
    (
        n.abs_diff(180) <= 10 && (closed - 180.4).abs() < 0.1,
        format!("n = {n}, closed form {closed:.2} (want 180 ± 10, ≈ 180.4)"),
    )
}

fn dephasing_ninety_percent() -> Outcome {
    let target = 0.9 * (1.0 - binary_entropy(0.1));
    let n = (1..=10_000u64)
        .find(|&n| dephasing_order3(n, 0.05, 0.1).is_ok_and(|p| p.rate >= target))
        .unwrap_or(0);
    (
        (650..=900).contains(&n),
        format!("order-3 crossing n = {n} (want [650, 900])"),
    )
}

fn approximation_quality() -> Outcome {
    let worst_deph = (100..=2000u64)
        .into_par_iter()
        .map(|n| {
            let exact = dephasing_outer_exact(n, 0.05, 0.1).unwrap().rate;
            (exact - dephasing_order3(n, 0.05, 0.1).unwrap().rate).abs()
        })
        .reduce(|| 0.0, f64::max);
    let worst_eras = (50..=500u64)
        .into_par_iter()
        .map(|n| {
            let exact = erasure_exact_boundary(n, 0.01, 0.25).unwrap().rate;
            (exact - erasure_order3(n, 0.01, 0.25).unwrap().rate).abs()
        })
        .reduce(|| 0.0, f64::max);
    (
        worst_deph <= 0.02 && worst_eras <= 0.02,
        format!("max |exact - order3|: dephasing {worst_deph:.5}, erasure {worst_eras:.5} (want ≤ 0.02)"),
    )
}

fn random_distribution<R: Rng>(k: usize, allow_zero: bool, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k)
        .map(|_| {
            if allow_zero && rng.random::<f64>() < 0.1 {
                0.0
            } else {
                rng.random::<f64>() + 0.01
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.random_range(2..=3);
        let p = random_distribution(k, true, &mut rng);
        let q = random_distribution(k, false, &mut rng);
        let n = rng.random_range(1..=12u32);
        let eps = rng.random_range(0.001..0.999);
        let brute = -brute_force_np(&p, &q, n, eps).unwrap().log2();
        let t = BinaryProductTest::new(n as u64, p, q, eps).unwrap();
        let fast = dh_classical_product(&t).unwrap().dh;
        worst = worst.max((brute - fast).abs());
    }
    (
        worst <= 1e-9,
        format!("200 cases, max |Δ| = {worst:.2e} (want ≤ 1e-9)"),
    )
}

fn sdp_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases: Vec<(Channel, f64)> = (0..50)
        .map(|i| {
            (
                random_channel(2, 2, 1 + i % 4, &mut rng),
                rng.random_range(0.01..0.5),
            )
        })
        .collect();
    let results: Vec<(f64, f64, bool)> = cases
        .par_iter()
        .map(|(ch, eps)| match f_primal(ch, *eps) {
            Ok(c) => (
                c.gap.abs(),
                c.residuals.iter().copied().fold(0.0, f64::max),
                true,
            ),
            Err(_) => (f64::INFINITY, f64::INFINITY, false),
        })
        .collect();
    let gap = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let res = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let solved = results.iter().filter(|r| r.2).count();
    (
        solved == 50 && gap <= 1e-7 && res <= 1e-6,
        format!(
            "{solved}/50 solved, max gap {gap:.2e}, max residual {res:.2e} (want ≤ 1e-7, ≤ 1e-6)"
        ),
    )
}

fn metaconverse_soundness() -> Outcome {
    let id = Channel::identity(2).unwrap();
    let bits: Vec<f64> = [0.01, 0.05, 0.25]
        .iter()
        .map(|&e| f_primal(&id, e).unwrap().outer_bound_bits)
        .collect();
    let sound = bits.iter().all(|&b| b >= 1.0 - 1e-9);
    let monotone = bits.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    (
        sound && monotone,
        format!(
            "-log2 f(id, ε) = {:.6}, {:.6}, {:.6} (want ≥ 1, f nonincreasing)",
            bits[0], bits[1], bits[2]
        ),
    )
}

fn consistency_ordering() -> Outcome {
    let violations = (1..=2000u64)
        .into_par_iter()
        .filter(|&n| {
            let inner = dephasing_inner_exact(n, 0.05, 0.1).unwrap().rate;
            let outer = dephasing_outer_exact(n, 0.05, 0.1).unwrap().rate;
            inner > outer + 1e-12
        })
        .count();
    let ea_violations = (1..=2000u64)
        .filter(|&n| {
            let ea = ea_dephasing_order2(n, 0.01, 0.1).unwrap().rate;
            ea < dephasing_order2(n, 0.01, 0.1).unwrap().rate
        })
        .count();
    (
        violations == 0 && ea_violations == 0,
        format!("inner > outer at {violations} of 2000 points, EA < unassisted at {ea_violations} of 2000"),
    )
}

fn protocol_round_trip() -> Outcome {
    let (n, eps, beta) = (100, 0.01, 0.25);
    let rate = erasure_exact_boundary(n, eps, beta).unwrap().rate;
    let m = (n as f64 * rate).exp2();
    let exact = erasure_protocol_fidelity(n, m, beta, SimMode::Exact)
        .unwrap()
        .fidelity;
    let mc = erasure_protocol_fidelity(
        n,
        m,
        beta,
        SimMode::MonteCarlo {
            trials: 1_000_000,
            seed: 10,
        },
    )
    .unwrap();
    let dev = (1.0 - exact - eps).abs();
    let sigmas = (mc.fidelity - exact).abs() / mc.std_error;
    (
        dev <= 1e-10 && mc.agrees_with(exact, 3.0),
        format!(
            "|1 - F - ε| = {dev:.2e}, Monte Carlo {:.6} ± {:.1e} ({sigmas:.2} σ)",
            mc.fidelity, mc.std_error
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("depolarizing N0, second order", n0_order2),
        ("depolarizing N0, exact", n0_exact),
        ("erasure 90% of capacity", erasure_ninety_percent),
        ("dephasing 90% of capacity", dephasing_ninety_percent),
        ("approximation quality", approximation_quality),
        ("oracle equivalence", oracle_equivalence),
        ("SDP correctness", sdp_correctness),
        ("metaconverse soundness", metaconverse_soundness),
        ("consistency ordering", consistency_ordering),
        ("protocol round trip", protocol_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {}: {name}: {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
