//! Random instances for property tests and oracle suites.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::linalg::*;
use super::{Channel, DensityOperator};

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// Full-rank state `G G^† / tr` from a Ginibre matrix.
pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(d, d, rng);
    DensityOperator::from_unnormalized(&g * g.adjoint()).expect("Ginibre product is PSD")
}

pub fn random_pure_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let g = ginibre(d, 1, rng);
    let n = g.norm();
    CVector::from_iterator(d, g.iter().map(|x| x / n))
}

/// Haar-random unitary via QR with the phase correction on the diagonal of `R`.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (q, r) = qr.unpack();
    let mut u = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            ONE
        };
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Channel from a random Stinespring isometry with `env` Kraus operators.
pub fn random_channel<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    env: usize,
    rng: &mut R,
) -> Channel {
    let big = dim_out * env;
    assert!(big >= dim_in, "isometry needs dim_out * env >= dim_in");
    let u = random_unitary(big, rng);
    let iso = u.columns(0, dim_in).into_owned();
    let kraus = (0..env)
        .map(|e| iso.rows(e * dim_out, dim_out).into_owned())
        .collect();
    Channel::from_kraus(kraus).expect("isometry blocks are complete")
}
