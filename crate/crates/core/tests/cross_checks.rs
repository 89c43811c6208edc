use finblock::channel_bounds::{
    dephasing_inner_exact, dephasing_outer_exact, erasure_error, erasure_exact_boundary, linear_code_error_bound,
};
use finblock::hyptest::{dh_classical_product, BinaryProductTest};
use finblock::metaconverse::{dh_with_fixed_sigma, f_pauli_reduced, f_primal};
use finblock::oracle_sim::{brute_force_np, erasure_protocol_fidelity, SimMode, SyndromeDecoder};
use finblock::qcore::{bell_diagonal, BipartiteOperator, PauliChannel};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn type_classes_match_enumeration(
        raw_p in proptest::collection::vec(0.01f64..1.0, 3),
        raw_q in proptest::collection::vec(0.01f64..1.0, 3),
        n in 1u32..=9,
        eps in 0.01f64..0.99,
    ) {
        let norm = |v: &[f64]| -> Vec<f64> { let s: f64 = v.iter().sum(); v.iter().map(|x| x / s).collect() };
        let (p, q) = (norm(&raw_p), norm(&raw_q));
        let brute = -brute_force_np(&p, &q, n, eps).unwrap().log2();
        let fast = dh_classical_product(&BinaryProductTest::new(n as u64, p, q, eps).unwrap()).unwrap().dh;
        prop_assert!((brute - fast).abs() <= 1e-9, "{brute} vs {fast}");
    }

    #[test]
    fn erasure_protocol_meets_boundary(n in 5u64..300, eps in 0.001f64..0.3, beta in 0.01f64..0.6) {
        let point = erasure_exact_boundary(n, eps, beta).unwrap();
        prop_assume!(point.attained && point.rate < 1.0);
        let log2_m = n as f64 * point.rate;
        let f = erasure_protocol_fidelity(n, log2_m.exp2(), beta, SimMode::Exact).unwrap().fidelity;
        let e = erasure_error(n, beta, log2_m).unwrap();
        prop_assert!((1.0 - f - e).abs() <= 1e-12);
        prop_assert!((e - eps).abs() <= 1e-10);
    }
}

#[test]
fn single_use_metaconverse_is_below_fixed_sigma_bound() {
    let sigma = BipartiteOperator::new(bell_diagonal([0.5, 0.5, 0.0, 0.0]), 2, 2).unwrap();
    for gamma in [0.02, 0.1, 0.3] {
        let z = PauliChannel::dephasing(gamma).unwrap();
        for eps in [0.01, 0.05, 0.2] {
            let relaxed = f_primal(&z.to_channel(), eps).unwrap().outer_bound_bits;
            let fixed = dh_with_fixed_sigma(&z.to_channel(), &sigma, eps).unwrap();
            let reduced = -f_pauli_reduced(&z, eps).unwrap().log2();
            assert!(relaxed <= fixed + 1e-7, "{relaxed} > {fixed}");
            assert!((relaxed - reduced).abs() < 1e-6);
            let n1 = dephasing_outer_exact(1, eps, gamma).unwrap().rate;
            assert!((n1 - fixed).abs() < 1e-6, "{n1} vs {fixed}");
        }
    }
}

#[test]
fn exact_inner_code_meets_target_and_decodes() {
    let (gamma, eps) = (0.05, 0.1);
    let n = 12u64;
    let p = dephasing_inner_exact(n, eps, gamma).unwrap();
    let k = (p.rate * n as f64).round() as u64;
    assert!(k >= 1);
    assert!(linear_code_error_bound(n, k, gamma).unwrap() <= eps);
    // the best single code of that size does at least as well as the ensemble average
    let h: Vec<Vec<u8>> = vec![
        vec![1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
        vec![0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0],
        vec![0, 0, 1, 1, 0, 0, 0, 0, 0, 1, 0, 0],
        vec![0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0],
        vec![0, 0, 0, 0, 1, 1, 0, 1, 0, 0, 0, 0],
        vec![0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1],
        vec![1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0],
        vec![0, 1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0],
        vec![0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 0, 0],
        vec![0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 0],
        vec![0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 1],
    ];
    let dec = SyndromeDecoder::new(&h[..(n - k) as usize], n as usize).unwrap();
    let err = 1.0 - dec.exact_fidelity(gamma).unwrap();
    assert!(dephasing_outer_exact(n, err, gamma).unwrap().rate >= dec.rate() - 1e-12);
}
