//! Quantum primitives: states, bipartite operators, channels and the Rains set.
//!
//! Composite systems are ordered row-major as `A ⊗ B` with `A` the slow index, so
//! the basis vector `|a⟩|b⟩` sits at position `a * dB + b`.

pub mod linalg;
pub mod random;

use crate::error::{Error, Result};
use linalg::*;

/// Eigenvalues down to `-PSD_TOL` are accepted as zero.
pub const PSD_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;

/// Which factor of `A ⊗ B` an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// A positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        check_psd(&matrix)?;
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized(tr));
        }
        Ok(Self {
            matrix: hermitian_part(&matrix),
        })
    }

    /// Normalizes a nonzero PSD matrix to unit trace.
    pub fn from_unnormalized(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        check_psd(&matrix)?;
        let tr = matrix.trace().re;
        if tr <= 0.0 {
            return Err(Error::NotNormalized(tr));
        }
        Ok(Self {
            matrix: hermitian_part(&matrix) / c(tr),
        })
    }

    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        Ok(Self {
            matrix: projector(&(psi / c(norm))),
        })
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(diag(probs))
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            matrix: identity(d) / c(d as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// View as an operator on `dA ⊗ dB`.
    pub fn as_bipartite(&self, da: usize, db: usize) -> Result<BipartiteOperator> {
        BipartiteOperator::new(self.matrix.clone(), da, db)
    }

    pub fn purity(&self) -> f64 {
        trace_product_re(&self.matrix, &self.matrix)
    }
}

/// An operator on `A ⊗ B` with explicit local dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteOperator {
    da: usize,
    db: usize,
    matrix: CMatrix,
}

impl BipartiteOperator {
    pub fn new(matrix: CMatrix, da: usize, db: usize) -> Result<Self> {
        check_square(&matrix)?;
        if da == 0 || db == 0 {
            return Err(Error::InvalidArgument(
                "local dimensions must be positive".into(),
            ));
        }
        if matrix.nrows() != da * db {
            return Err(Error::DimensionMismatch {
                expected: da * db,
                actual: matrix.nrows(),
            });
        }
        Ok(Self { da, db, matrix })
    }

    pub fn product(a: &CMatrix, b: &CMatrix) -> Result<Self> {
        check_square(a)?;
        check_square(b)?;
        Self::new(kron(a, b), a.nrows(), b.nrows())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.da, self.db)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_deviation(&self.matrix) <= tol
    }

    pub fn partial_trace(&self, which: Subsystem) -> CMatrix {
        partial_trace(&self.matrix, self.da, self.db, which)
    }

    pub fn partial_transpose(&self, which: Subsystem) -> BipartiteOperator {
        BipartiteOperator {
            da: self.da,
            db: self.db,
            matrix: partial_transpose(&self.matrix, self.da, self.db, which),
        }
    }

    pub fn to_state(&self) -> Result<DensityOperator> {
        DensityOperator::new(self.matrix.clone())
    }
}

/// `tr_A` or `tr_B` of a `(dA·dB)`-square matrix.
pub fn partial_trace(m: &CMatrix, da: usize, db: usize, which: Subsystem) -> CMatrix {
    match which {
        Subsystem::B => CMatrix::from_fn(da, da, |a, ap| {
            (0..db).map(|b| m[(a * db + b, ap * db + b)]).sum()
        }),
        Subsystem::A => CMatrix::from_fn(db, db, |b, bp| {
            (0..da).map(|a| m[(a * db + b, a * db + bp)]).sum()
        }),
    }
}

pub fn partial_transpose(m: &CMatrix, da: usize, db: usize, which: Subsystem) -> CMatrix {
    let d = da * db;
    CMatrix::from_fn(d, d, |r, col| {
        let (a, b) = (r / db, r % db);
        let (ap, bp) = (col / db, col % db);
        match which {
            Subsystem::B => m[(a * db + bp, ap * db + b)],
            Subsystem::A => m[(ap * db + b, a * db + bp)],
        }
    })
}

/// The qubit Pauli channel `ρ ↦ Σ p_P P ρ P` with probabilities ordered `(I, X, Y, Z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliChannel {
    probs: [f64; 4],
}

impl PauliChannel {
    pub fn new(probs: [f64; 4]) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= -PSD_TOL)) {
            return Err(Error::InvalidArgument(format!(
                "negative Pauli probability in {probs:?}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self {
            probs: probs.map(|p| p.max(0.0)),
        })
    }

    /// `Z_γ: ρ ↦ (1-γ)ρ + γ ZρZ`.
    pub fn dephasing(gamma: f64) -> Result<Self> {
        crate::error::check_probability("gamma", gamma)?;
        Self::new([1.0 - gamma, 0.0, 0.0, gamma])
    }

    /// `D_α: ρ ↦ (1-α)ρ + α/3 (XρX + YρY + ZρZ)`.
    pub fn depolarizing(alpha: f64) -> Result<Self> {
        crate::error::check_probability("alpha", alpha)?;
        let s = alpha / 3.0;
        Self::new([1.0 - alpha, s, s, s])
    }

    pub fn identity() -> Self {
        Self {
            probs: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn probs(&self) -> [f64; 4] {
        self.probs
    }

    /// Weights of `(I ⊗ N)(φ⁺)` on the Bell basis `[φ⁺, φ⁻, ψ⁺, ψ⁻]`.
    pub fn bell_weights(&self) -> [f64; 4] {
        let [pi, px, py, pz] = self.probs;
        [pi, pz, px, py]
    }

    pub fn to_channel(&self) -> Channel {
        let paulis = [pauli_i(), pauli_x(), pauli_y(), pauli_z()];
        let kraus = self
            .probs
            .iter()
            .zip(paulis)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, m)| m * c(p.sqrt()))
            .collect();
        Channel::from_kraus(kraus).expect("Pauli Kraus operators are complete")
    }
}

/// A quantum channel carrying both its Kraus and Choi representations.
///
/// The Choi operator is `N_AB = (I ⊗ N)(|A| φ)`, so `tr_B N_AB = 1_A` and
/// `tr N_AB = dim_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
    choi: BipartiteOperator,
}

impl Channel {
    pub fn from_kraus(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
        let (dim_out, dim_in) = first.shape();
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidArgument(
                "Kraus operators must be non-empty".into(),
            ));
        }
        let mut completeness = CMatrix::zeros(dim_in, dim_in);
        for k in &kraus {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::DimensionMismatch {
                    expected: dim_out * dim_in,
                    actual: k.nrows() * k.ncols(),
                });
            }
            completeness += k.adjoint() * k;
        }
        let dev = (completeness - identity(dim_in)).norm();
        if dev > 1e-8 {
            return Err(Error::NotTracePreserving(dev));
        }
        let choi = choi_from_kraus(&kraus, dim_in, dim_out);
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
            choi,
        })
    }

    pub fn from_choi(choi: BipartiteOperator) -> Result<Self> {
        let (dim_in, dim_out) = choi.dims();
        if !choi.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian(hermiticity_deviation(choi.matrix())));
        }
        check_psd(choi.matrix())?;
        let marginal = choi.partial_trace(Subsystem::B);
        let dev = (marginal - identity(dim_in)).norm();
        if dev > 1e-8 {
            return Err(Error::NotTracePreserving(dev));
        }
        let (values, vectors) = eigh(choi.matrix());
        let kraus = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 1e-14)
            .map(|(k, &v)| {
                let col = vectors.column(k);
                // v_k = Σ_a |a⟩ ⊗ K|a⟩, so component (a, b) is K[b, a]
                CMatrix::from_fn(dim_out, dim_in, |b, a| col[a * dim_out + b] * c(v.sqrt()))
            })
            .collect();
        let choi = BipartiteOperator::new(hermitian_part(choi.matrix()), dim_in, dim_out)?;
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
            choi,
        })
    }

    pub fn identity(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Self::from_kraus(vec![identity(d)])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn choi(&self) -> &BipartiteOperator {
        &self.choi
    }

    /// `N(X)` for an operator on the input space.
    pub fn apply_matrix(&self, input: &CMatrix) -> Result<CMatrix> {
        if input.nrows() != self.dim_in || input.ncols() != self.dim_in {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                actual: input.nrows(),
            });
        }
        Ok(self
            .kraus
            .iter()
            .map(|k| k * input * k.adjoint())
            .fold(CMatrix::zeros(self.dim_out, self.dim_out), |acc, x| acc + x))
    }

    pub fn apply(&self, input: &DensityOperator) -> Result<DensityOperator> {
        DensityOperator::new(self.apply_matrix(input.matrix())?)
    }

    /// `(1_left ⊗ N ⊗ 1_right)(X)` for an operator on `left ⊗ in ⊗ right`.
    pub fn apply_on_subsystem(
        &self,
        input: &CMatrix,
        left: usize,
        right: usize,
    ) -> Result<CMatrix> {
        let expected = left * self.dim_in * right;
        if input.nrows() != expected || input.ncols() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: input.nrows(),
            });
        }
        let dout = left * self.dim_out * right;
        let mut out = CMatrix::zeros(dout, dout);
        for k in &self.kraus {
            let lifted = kraus_lift(k, left, right);
            out += &lifted * input * lifted.adjoint();
        }
        Ok(out)
    }

    /// `(I_A ⊗ N)(ρ_AA')` with the channel acting on the second factor.
    pub fn apply_on_second(&self, input: &BipartiteOperator) -> Result<BipartiteOperator> {
        let (da, db) = input.dims();
        if db != self.dim_in {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                actual: db,
            });
        }
        BipartiteOperator::new(
            self.apply_on_subsystem(input.matrix(), da, 1)?,
            da,
            self.dim_out,
        )
    }

    /// `(I ⊗ N)(φ)` for the maximally entangled input of local dimension `dim_in`.
    pub fn output_on_max_entangled(&self) -> BipartiteOperator {
        let m = self.choi.matrix() / c(self.dim_in as f64);
        BipartiteOperator::new(m, self.dim_in, self.dim_out).expect("choi dims are consistent")
    }

    /// `ω_AB = (I ⊗ N)(ψ^ρ)` for the canonical purification of `ρ`.
    pub fn output_on_purification(&self, rho: &DensityOperator) -> Result<BipartiteOperator> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                actual: rho.dim(),
            });
        }
        let psi = canonical_purification(rho)?;
        self.apply_on_second(&psi.as_bipartite(self.dim_in, self.dim_in)?)
    }

    pub fn compose(&self, after: &Channel) -> Result<Channel> {
        if after.dim_in != self.dim_out {
            return Err(Error::DimensionMismatch {
                expected: self.dim_out,
                actual: after.dim_in,
            });
        }
        let mut kraus = Vec::new();
        for b in &after.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Channel::from_kraus(kraus)
    }
}

fn kraus_lift(k: &CMatrix, left: usize, right: usize) -> CMatrix {
    kron(&kron(&identity(left), k), &identity(right))
}

fn choi_from_kraus(kraus: &[CMatrix], dim_in: usize, dim_out: usize) -> BipartiteOperator {
    let d = dim_in * dim_out;
    let mut choi = CMatrix::zeros(d, d);
    for k in kraus {
        let v = CVector::from_fn(d, |idx, _| {
            let (a, b) = (idx / dim_out, idx % dim_out);
            k[(b, a)]
        });
        choi += projector(&v);
    }
    BipartiteOperator::new(choi, dim_in, dim_out).expect("consistent dims")
}

/// `φ_d = |φ⟩⟨φ|` with `|φ⟩ = d^{-1/2} Σ_x |x⟩|x⟩`.
pub fn maximally_entangled(d: usize) -> Result<DensityOperator> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let v = CVector::from_fn(d * d, |idx, _| {
        if idx / d == idx % d {
            c(1.0 / (d as f64).sqrt())
        } else {
            ZERO
        }
    });
    DensityOperator::pure(&v)
}

/// The Bell vectors `[φ⁺, φ⁻, ψ⁺, ψ⁻]`, obtained from `φ⁺` by `1 ⊗ {I, Z, X, Y}`.
pub fn bell_vectors() -> [CVector; 4] {
    let s = c(std::f64::consts::FRAC_1_SQRT_2);
    let v = |amps: [f64; 4]| CVector::from_iterator(4, amps.iter().map(|&a| c(a) * s));
    [
        v([1.0, 0.0, 0.0, 1.0]),
        v([1.0, 0.0, 0.0, -1.0]),
        v([0.0, 1.0, 1.0, 0.0]),
        v([0.0, 1.0, -1.0, 0.0]),
    ]
}

pub fn bell_projectors() -> [CMatrix; 4] {
    bell_vectors().map(|v| projector(&v))
}

/// `Σ_k w_k B_k` over the Bell projectors.
pub fn bell_diagonal(weights: [f64; 4]) -> CMatrix {
    bell_projectors()
        .iter()
        .zip(weights)
        .fold(CMatrix::zeros(4, 4), |acc, (b, w)| acc + b * c(w))
}

/// `|ψ^ρ⟩ = |A| (√ρ ⊗ 1)|φ⟩`, whose amplitude on `|a⟩|x⟩` is `(√ρ)_{a x}`.
pub fn canonical_purification(rho: &DensityOperator) -> Result<DensityOperator> {
    let d = rho.dim();
    let root = sqrt_psd(rho.matrix());
    let v = CVector::from_fn(d * d, |idx, _| root[(idx / d, idx % d)]);
    DensityOperator::pure(&v)
}

/// Uhlmann fidelity `F = ‖√ρ √σ‖₁²`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let prod = sqrt_psd(rho.matrix()) * sqrt_psd(sigma.matrix());
    Ok(trace_norm(&prod).powi(2).clamp(0.0, 1.0))
}

/// Membership in `PPT'`: PSD with `‖T_B(τ)‖₁ ≤ 1 + tol`.
pub fn is_rains_feasible(op: &BipartiteOperator, tol: f64) -> Result<bool> {
    check_psd(op.matrix())?;
    Ok(rains_trace_norm(op) <= 1.0 + tol)
}

pub fn rains_trace_norm(op: &BipartiteOperator) -> f64 {
    trace_norm_hermitian(op.partial_transpose(Subsystem::B).matrix())
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn check_psd(m: &CMatrix) -> Result<()> {
    check_square(m)?;
    let dev = hermiticity_deviation(m);
    if dev > HERMITIAN_TOL * (1.0 + m.norm()) {
        return Err(Error::NotHermitian(dev));
    }
    let min = eigvalsh(m)[0];
    if min < -PSD_TOL * (1.0 + m.norm()) {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::random::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        max_abs_diff(a, b) < tol
    }

    #[test]
    fn maximally_entangled_small_dims() {
        assert!(maximally_entangled(0).is_err());
        let one = maximally_entangled(1).unwrap();
        assert!(close(one.matrix(), &identity(1), 1e-15));
        let two = maximally_entangled(2).unwrap();
        assert!(close(two.matrix(), &projector(&bell_vectors()[0]), 1e-15));
        let three = maximally_entangled(3).unwrap();
        let marginal = three
            .as_bipartite(3, 3)
            .unwrap()
            .partial_trace(Subsystem::B);
        assert!(close(&marginal, &(identity(3) / c(3.0)), 1e-14));
    }

    #[test]
    fn purification_examples() {
        let zero = DensityOperator::diagonal(&[1.0, 0.0]).unwrap();
        let psi = canonical_purification(&zero).unwrap();
        assert!(close(psi.matrix(), &diag(&[1.0, 0.0, 0.0, 0.0]), 1e-14));

        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        let psi = canonical_purification(&mixed).unwrap();
        assert!(close(
            psi.matrix(),
            maximally_entangled(2).unwrap().matrix(),
            1e-14
        ));

        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..10 {
            let rho = random_state(2, &mut rng);
            let psi = canonical_purification(&rho).unwrap();
            assert!((psi.purity() - 1.0).abs() < 1e-12);
            let back = psi.as_bipartite(2, 2).unwrap().partial_trace(Subsystem::B);
            assert!(close(&back, rho.matrix(), 1e-12));
        }
    }

    #[test]
    fn purification_rejects_non_psd() {
        assert!(DensityOperator::diagonal(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn partial_transpose_properties() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let x = random_state(6, &mut rng).as_bipartite(2, 3).unwrap();
        for which in [Subsystem::A, Subsystem::B] {
            let twice = x.partial_transpose(which).partial_transpose(which);
            assert!(close(twice.matrix(), x.matrix(), 1e-15));
            let t = x.partial_transpose(which);
            assert!((t.matrix().trace() - x.matrix().trace()).norm() < 1e-14);
            assert!(t.is_hermitian(1e-14));
        }
        let rho = random_state(2, &mut rng);
        let sigma = random_state(3, &mut rng);
        let prod = BipartiteOperator::product(rho.matrix(), sigma.matrix()).unwrap();
        let expected = kron(rho.matrix(), &sigma.matrix().transpose());
        assert!(close(
            prod.partial_transpose(Subsystem::B).matrix(),
            &expected,
            1e-15
        ));
    }

    #[test]
    fn partial_transpose_of_bell_state() {
        let phi = maximally_entangled(2).unwrap().as_bipartite(2, 2).unwrap();
        let vals = eigvalsh(phi.partial_transpose(Subsystem::B).matrix());
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        assert!(BipartiteOperator::new(identity(5), 2, 2).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let rho = random_state(3, &mut rng);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
        let zero = DensityOperator::diagonal(&[1.0, 0.0]).unwrap();
        let one = DensityOperator::diagonal(&[0.0, 1.0]).unwrap();
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-15);
        for _ in 0..10 {
            let psi = random_pure_vector(3, &mut rng);
            let sigma = random_state(3, &mut rng);
            let expected = (psi.adjoint() * sigma.matrix() * &psi)[(0, 0)].re;
            let f = fidelity(&DensityOperator::pure(&psi).unwrap(), &sigma).unwrap();
            assert!((f - expected).abs() < 1e-10);
            let g = fidelity(&sigma, &DensityOperator::pure(&psi).unwrap()).unwrap();
            assert!((f - g).abs() < 1e-10);
        }
        assert!(fidelity(&zero, &rho).is_err());
    }

    #[test]
    fn fidelity_data_processing() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..20 {
            let rho = random_state(2, &mut rng);
            let sigma = random_state(2, &mut rng);
            let ch = random_channel(2, 2, 2, &mut rng);
            let before = fidelity(&rho, &sigma).unwrap();
            let after = fidelity(&ch.apply(&rho).unwrap(), &ch.apply(&sigma).unwrap()).unwrap();
            assert!(after >= before - 1e-9, "{after} < {before}");
        }
    }

    #[test]
    fn rains_membership_examples() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let rho = random_state(2, &mut rng);
        let sigma = random_state(2, &mut rng);
        let prod = BipartiteOperator::product(rho.matrix(), sigma.matrix()).unwrap();
        assert!(is_rains_feasible(&prod, 1e-9).unwrap());

        let phi = maximally_entangled(2).unwrap().as_bipartite(2, 2).unwrap();
        assert!((rains_trace_norm(&phi) - 2.0).abs() < 1e-12);
        assert!(!is_rains_feasible(&phi, 1e-9).unwrap());

        let classical = BipartiteOperator::new(bell_diagonal([0.5, 0.5, 0.0, 0.0]), 2, 2).unwrap();
        assert!(is_rains_feasible(&classical, 1e-9).unwrap());

        let bad = BipartiteOperator::new(diag(&[1.0, -0.5, 0.25, 0.25]), 2, 2).unwrap();
        assert!(is_rains_feasible(&bad, 1e-9).is_err());
    }

    #[test]
    fn rains_inequality_on_sampled_members() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let phi = maximally_entangled(2).unwrap();
        let mut tested = 0;
        while tested < 200 {
            let tau = random_state(4, &mut rng).as_bipartite(2, 2).unwrap();
            // rescale to the Rains-set boundary
            let scale = 1.0 / rains_trace_norm(&tau);
            let scaled = BipartiteOperator::new(tau.matrix() * c(scale), 2, 2).unwrap();
            assert!(is_rains_feasible(&scaled, 1e-9).unwrap());
            let overlap = trace_product_re(phi.matrix(), scaled.matrix());
            assert!(overlap <= 0.5 + 1e-10, "overlap {overlap}");
            tested += 1;
        }
    }

    #[test]
    fn pauli_outputs_on_bell_state() {
        let phi = maximally_entangled(2).unwrap();
        let [pp, pm, sp, sm] = bell_projectors();
        let gamma = 0.1;
        let z = PauliChannel::dephasing(gamma).unwrap().to_channel();
        let out = z.apply_on_subsystem(phi.matrix(), 2, 1).unwrap();
        let expected = &pp * c(1.0 - gamma) + &pm * c(gamma);
        assert!(close(&out, &expected, 1e-14));

        let alpha = 0.05;
        let d = PauliChannel::depolarizing(alpha).unwrap().to_channel();
        let out = d.apply_on_subsystem(phi.matrix(), 2, 1).unwrap();
        let expected = &pp * c(1.0 - alpha) + (pm + sp + sm) * c(alpha / 3.0);
        assert!(close(&out, &expected, 1e-14));
        assert!(close(
            d.output_on_max_entangled().matrix(),
            &expected,
            1e-14
        ));
    }

    #[test]
    fn identity_choi_is_scaled_bell_state() {
        let id = Channel::identity(2).unwrap();
        let expected = maximally_entangled(2).unwrap().matrix() * c(2.0);
        assert!(close(id.choi().matrix(), &expected, 1e-14));
    }

    #[test]
    fn kraus_choi_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(19);
        for (din, dout) in [(2, 2), (2, 3), (3, 2)] {
            let ch = random_channel(din, dout, 3, &mut rng);
            let back = Channel::from_choi(ch.choi().clone()).unwrap();
            for _ in 0..5 {
                let rho = random_state(din, &mut rng);
                let a = ch.apply(&rho).unwrap();
                let b = back.apply(&rho).unwrap();
                assert!(close(a.matrix(), b.matrix(), 1e-10));
            }
        }
    }

    #[test]
    fn kraus_validation() {
        assert!(Channel::from_kraus(vec![identity(2) * c(0.5)]).is_err());
        assert!(Channel::from_kraus(vec![]).is_err());
        assert!(PauliChannel::new([0.5, 0.5, 0.5, -0.5]).is_err());
        assert!(PauliChannel::new([0.5, 0.2, 0.2, 0.2]).is_err());
    }

    #[test]
    fn choi_from_output_matches_channel_action() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let ch = random_channel(2, 2, 2, &mut rng);
        let rho = random_state(2, &mut rng);
        // N(ρ) = tr_A[(ρ^T ⊗ 1) N_AB]
        let lifted = kron(&rho.matrix().transpose(), &identity(2)) * ch.choi().matrix();
        let via_choi = partial_trace(&lifted, 2, 2, Subsystem::A);
        assert!(close(&via_choi, ch.apply(&rho).unwrap().matrix(), 1e-12));
    }
}
