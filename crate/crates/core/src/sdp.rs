//! Dense primal-dual interior-point solver for Hermitian semidefinite programs
//!
//! ```text
//! maximize  tr[K X]  subject to  E(X) ≤ C,   X ≥ 0
//! minimize  tr[C Y]  subject to  E*(Y) ≥ K,  Y ≥ 0
//! ```
//!
//! Operators are block diagonal. Complex Hermitian blocks are mapped to real symmetric
//! blocks of twice the size, and the resulting real program is solved with HKM search
//! directions and a Mehrotra predictor-corrector.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::qcore::linalg::{hermiticity_deviation, CMatrix, C64};
use crate::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const STALL_ITERATIONS: usize = 20;

/// Number of real coordinates of a `d × d` Hermitian matrix.
pub fn hermitian_dim(d: usize) -> usize {
    d * d
}

/// Orthonormal coordinates: diagonal entries first, then `(√2 Re H_kl, √2 Im H_kl)`
/// for each `k < l` in row-major order.
pub fn hermitian_coords(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        out.push(m[(k, k)].re);
    }
    for k in 0..d {
        for l in (k + 1)..d {
            let v = (m[(k, l)] + m[(l, k)].conj()) * 0.5;
            out.push(SQRT2 * v.re);
            out.push(SQRT2 * v.im);
        }
    }
    out
}

pub fn hermitian_from_coords(d: usize, coords: &[f64]) -> CMatrix {
    assert_eq!(coords.len(), d * d, "coordinate count");
    let mut m = CMatrix::zeros(d, d);
    for k in 0..d {
        m[(k, k)] = C64::new(coords[k], 0.0);
    }
    let mut idx = d;
    for k in 0..d {
        for l in (k + 1)..d {
            let v = C64::new(coords[idx], coords[idx + 1]) / SQRT2;
            m[(k, l)] = v;
            m[(l, k)] = v.conj();
            idx += 2;
        }
    }
    m
}

fn hermitian_basis_element(d: usize, idx: usize) -> CMatrix {
    let mut coords = vec![0.0; d * d];
    coords[idx] = 1.0;
    hermitian_from_coords(d, &coords)
}

/// Block-diagonal Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    blocks: Vec<CMatrix>,
}

impl BlockOperator {
    pub fn new(blocks: Vec<CMatrix>) -> Result<Self> {
        for b in &blocks {
            if b.nrows() != b.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: b.nrows(),
                    actual: b.ncols(),
                });
            }
        }
        Ok(Self { blocks })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&d| CMatrix::zeros(d, d)).collect(),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    /// `Σ_k Re tr[A_k B_k]`.
    pub fn inner(&self, other: &BlockOperator) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| crate::qcore::linalg::trace_product_re(a, b))
            .sum()
    }

    pub fn coords(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(hermitian_coords).collect()
    }

    pub fn from_coords(dims: &[usize], coords: &[f64]) -> Self {
        let mut offset = 0;
        let blocks = dims
            .iter()
            .map(|&d| {
                let n = hermitian_dim(d);
                let b = hermitian_from_coords(d, &coords[offset..offset + n]);
                offset += n;
                b
            })
            .collect();
        Self { blocks }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.nrows() > 0)
            .map(|b| crate::qcore::linalg::eigvalsh(b)[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.blocks
            .iter()
            .map(hermiticity_deviation)
            .fold(0.0, f64::max)
    }
}

fn coord_count(dims: &[usize]) -> usize {
    dims.iter().map(|&d| hermitian_dim(d)).sum()
}

/// Hermiticity-preserving linear map between block spaces, stored as a real matrix
/// acting on orthonormal Hermitian coordinates. Its adjoint is the transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    matrix: DMatrix<f64>,
}

impl SuperOperator {
    pub fn from_matrix(
        in_dims: Vec<usize>,
        out_dims: Vec<usize>,
        matrix: DMatrix<f64>,
    ) -> Result<Self> {
        if matrix.nrows() != coord_count(&out_dims) {
            return Err(Error::DimensionMismatch {
                expected: coord_count(&out_dims),
                actual: matrix.nrows(),
            });
        }
        if matrix.ncols() != coord_count(&in_dims) {
            return Err(Error::DimensionMismatch {
                expected: coord_count(&in_dims),
                actual: matrix.ncols(),
            });
        }
        Ok(Self {
            in_dims,
            out_dims,
            matrix,
        })
    }

    /// Tabulates `f` on the Hermitian basis. Fails if `f` leaves the Hermitian matrices
    /// or returns blocks of the wrong shape.
    pub fn from_fn(
        in_dims: Vec<usize>,
        out_dims: Vec<usize>,
        f: impl Fn(&BlockOperator) -> BlockOperator,
    ) -> Result<Self> {
        let n_in = coord_count(&in_dims);
        let n_out = coord_count(&out_dims);
        let mut matrix = DMatrix::zeros(n_out, n_in);
        let mut col = 0;
        for (bi, &d) in in_dims.iter().enumerate() {
            for idx in 0..hermitian_dim(d) {
                let mut x = BlockOperator::zeros(&in_dims);
                x.blocks[bi] = hermitian_basis_element(d, idx);
                let y = f(&x);
                if y.dims() != out_dims {
                    return Err(Error::InvalidArgument(format!(
                        "map output blocks {:?}, expected {:?}",
                        y.dims(),
                        out_dims
                    )));
                }
                let dev = y.hermiticity_deviation();
                if dev > 1e-9 {
                    return Err(Error::NotHermitian(dev));
                }
                for (r, v) in y.coords().into_iter().enumerate() {
                    matrix[(r, col)] = v;
                }
                col += 1;
            }
        }
        Ok(Self {
            in_dims,
            out_dims,
            matrix,
        })
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &BlockOperator) -> Result<BlockOperator> {
        if x.dims() != self.in_dims {
            return Err(Error::InvalidArgument(format!(
                "input blocks {:?}, expected {:?}",
                x.dims(),
                self.in_dims
            )));
        }
        let v = &self.matrix * DVector::from_vec(x.coords());
        Ok(BlockOperator::from_coords(&self.out_dims, v.as_slice()))
    }

    pub fn adjoint(&self) -> SuperOperator {
        SuperOperator {
            in_dims: self.out_dims.clone(),
            out_dims: self.in_dims.clone(),
            matrix: self.matrix.transpose(),
        }
    }
}

pub fn adjoint_map(e: &SuperOperator) -> SuperOperator {
    e.adjoint()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    objective: BlockOperator,
    map: SuperOperator,
    bound: BlockOperator,
}

impl SdpProblem {
    pub fn new(objective: BlockOperator, map: SuperOperator, bound: BlockOperator) -> Result<Self> {
        if objective.dims() != map.in_dims {
            return Err(Error::InvalidArgument(format!(
                "objective blocks {:?} do not match map input {:?}",
                objective.dims(),
                map.in_dims
            )));
        }
        if bound.dims() != map.out_dims {
            return Err(Error::InvalidArgument(format!(
                "bound blocks {:?} do not match map output {:?}",
                bound.dims(),
                map.out_dims
            )));
        }
        let dev = objective
            .hermiticity_deviation()
            .max(bound.hermiticity_deviation());
        if dev > 1e-9 {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self {
            objective,
            map,
            bound,
        })
    }

    pub fn objective(&self) -> &BlockOperator {
        &self.objective
    }

    pub fn map(&self) -> &SuperOperator {
        &self.map
    }

    pub fn bound(&self) -> &BlockOperator {
        &self.bound
    }

    pub fn primal_objective(&self, x: &BlockOperator) -> f64 {
        self.objective.inner(x)
    }

    pub fn dual_objective(&self, y: &BlockOperator) -> f64 {
        self.bound.inner(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// When progress stalls, the best iterate is still reported optimal if its residuals
    /// and gap are below this level.
    pub acceptable_tol: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            acceptable_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    Stalled,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal: BlockOperator,
    pub dual: BlockOperator,
    pub gap: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

impl SdpSolution {
    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            SdpStatus::Optimal => Ok(self),
            status => Err(Error::Solver {
                status,
                iterations: self.iterations,
                gap: self.gap,
            }),
        }
    }
}

type Blocks = Vec<DMatrix<f64>>;

struct Constraint {
    parts: Vec<(usize, DMatrix<f64>)>,
}

fn embed(h: &CMatrix) -> DMatrix<f64> {
    let d = h.nrows();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let v = h[(i, j)];
            m[(i, j)] = v.re;
            m[(i + d, j + d)] = v.re;
            m[(i, j + d)] = -v.im;
            m[(i + d, j)] = v.im;
        }
    }
    m
}

fn extract(m: &DMatrix<f64>) -> CMatrix {
    let d = m.nrows() / 2;
    CMatrix::from_fn(d, d, |i, j| {
        let re = 0.5 * (m[(i, j)] + m[(i + d, j + d)]);
        let im = 0.5 * (m[(i + d, j)] - m[(i, j + d)]);
        C64::new(re, im)
    })
}

fn dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn blocks_dot(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| dot(x, y)).sum()
}

fn blocks_norm(a: &Blocks) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

struct StandardForm {
    sizes: Vec<usize>,
    cons: Vec<Constraint>,
    by_block: Vec<Vec<usize>>,
    b: DVector<f64>,
    c: Blocks,
}

impl StandardForm {
    fn a_op(&self, w: &Blocks) -> DVector<f64> {
        DVector::from_iterator(
            self.cons.len(),
            self.cons
                .iter()
                .map(|con| con.parts.iter().map(|(k, a)| dot(a, &w[*k])).sum::<f64>()),
        )
    }

    fn at_op(&self, y: &DVector<f64>) -> Blocks {
        let mut out: Blocks = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (con, &yi) in self.cons.iter().zip(y.iter()) {
            if yi != 0.0 {
                for (k, a) in &con.parts {
                    out[*k] += a * yi;
                }
            }
        }
        out
    }

    fn part(&self, i: usize, k: usize) -> Option<&DMatrix<f64>> {
        self.cons[i]
            .parts
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, a)| a)
    }
}

fn build_standard(p: &SdpProblem) -> StandardForm {
    let in_dims = &p.map.in_dims;
    let out_dims = &p.map.out_dims;
    let n_in_blocks = in_dims.len();
    let sizes: Vec<usize> = in_dims.iter().chain(out_dims).map(|&d| 2 * d).collect();
    let et = p.map.matrix.transpose();
    let mut cons = Vec::new();
    let mut row = 0;
    for (ob, &d) in out_dims.iter().enumerate() {
        for idx in 0..hermitian_dim(d) {
            let col: Vec<f64> = et.column(row).iter().copied().collect();
            let pulled = BlockOperator::from_coords(in_dims, &col);
            let mut parts = Vec::new();
            for (k, blk) in pulled.blocks.iter().enumerate() {
                if blk.iter().any(|v| v.norm() > 0.0) {
                    parts.push((k, embed(blk) * 0.5));
                }
            }
            parts.push((
                n_in_blocks + ob,
                embed(&hermitian_basis_element(d, idx)) * 0.5,
            ));
            cons.push(Constraint { parts });
            row += 1;
        }
    }
    let b = DVector::from_vec(p.bound.coords());
    let mut c: Blocks = Vec::with_capacity(sizes.len());
    for blk in &p.objective.blocks {
        c.push(embed(blk) * -0.5);
    }
    for &d in out_dims {
        c.push(DMatrix::zeros(2 * d, 2 * d));
    }
    let mut by_block = vec![Vec::new(); sizes.len()];
    for (i, con) in cons.iter().enumerate() {
        for (k, _) in &con.parts {
            by_block[*k].push(i);
        }
    }
    StandardForm {
        sizes,
        cons,
        by_block,
        b,
        c,
    }
}

fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    Cholesky::new(m.clone()).map(|ch| sym(&ch.inverse()))
}

/// Largest `α` with `x + α dx ⪰ 0` (infinite if `dx ⪰ 0`).
fn max_step(x: &Blocks, dx: &Blocks) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        if xb.nrows() == 0 {
            continue;
        }
        let Some(ch) = Cholesky::new(xb.clone()) else {
            return 0.0;
        };
        let l = ch.l();
        let Some(t) = l.solve_lower_triangular(db) else {
            return 0.0;
        };
        let Some(w) = l.solve_lower_triangular(&t.transpose()) else {
            return 0.0;
        };
        let lmin = SymmetricEigen::new(sym(&w))
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}

/// `x + α dx`, shrinking `α` until every block passes a Cholesky test.
fn safe_step(x: &Blocks, dx: &Blocks, alpha: f64) -> Option<(Blocks, f64)> {
    let mut a = alpha;
    for _ in 0..30 {
        let cand: Blocks = x
            .iter()
            .zip(dx)
            .map(|(xb, db)| sym(&(xb + db * a)))
            .collect();
        if cand
            .iter()
            .all(|b| b.nrows() == 0 || Cholesky::new(b.clone()).is_some())
        {
            return Some((cand, a));
        }
        a *= 0.5;
    }
    None
}

#[derive(Clone)]
struct Iterate {
    x: Blocks,
    y: DVector<f64>,
    z: Blocks,
}

struct Direction {
    dx: Blocks,
    dy: DVector<f64>,
    dz: Blocks,
}

fn initial_point(sf: &StandardForm) -> Iterate {
    let mut x = Vec::new();
    let mut z = Vec::new();
    for (k, &n) in sf.sizes.iter().enumerate() {
        let nf = n as f64;
        let mut zeta: f64 = 10.0f64.max(nf.sqrt());
        let mut eta: f64 = 10.0f64.max(nf.sqrt()).max(sf.c[k].norm());
        for &i in &sf.by_block[k] {
            let an = sf.part(i, k).map(|a| a.norm()).unwrap_or(0.0);
            zeta = zeta.max(nf * (1.0 + sf.b[i].abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        x.push(DMatrix::identity(n, n) * zeta);
        z.push(DMatrix::identity(n, n) * eta);
    }
    Iterate {
        x,
        y: DVector::zeros(sf.cons.len()),
        z,
    }
}

fn schur(sf: &StandardForm, x: &Blocks, zinv: &Blocks) -> DMatrix<f64> {
    let m = sf.cons.len();
    let mut s = DMatrix::zeros(m, m);
    for (k, list) in sf.by_block.iter().enumerate() {
        for &j in list {
            let aj = sf.part(j, k).expect("listed constraint touches block");
            let g = &x[k] * aj * &zinv[k];
            for &i in list {
                let ai = sf.part(i, k).expect("listed constraint touches block");
                s[(i, j)] += dot(ai, &g);
            }
        }
    }
    sym(&s)
}

#[allow(clippy::too_many_arguments)]
fn direction(
    sf: &StandardForm,
    it: &Iterate,
    zinv: &Blocks,
    chol: &Cholesky<f64, nalgebra::Dyn>,
    gram: &Cholesky<f64, nalgebra::Dyn>,
    rp: &DVector<f64>,
    rd: &Blocks,
    sigma_mu: f64,
    corr: Option<&Blocks>,
) -> Direction {
    // rc_zinv = (σμ I - X Z - corr) Z^{-1}
    let rc_zinv: Blocks = (0..sf.sizes.len())
        .map(|k| {
            let mut r = &zinv[k] * sigma_mu - &it.x[k];
            if let Some(cr) = corr {
                r -= &cr[k] * &zinv[k];
            }
            r
        })
        .collect();
    let x_rd_zinv: Blocks = (0..sf.sizes.len())
        .map(|k| &it.x[k] * &rd[k] * &zinv[k])
        .collect();
    let rhs = rp - sf.a_op(&rc_zinv) + sf.a_op(&x_rd_zinv);
    let dy = chol.solve(&rhs);
    let atdy = sf.at_op(&dy);
    let dz: Blocks = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
    let mut dx: Blocks = (0..sf.sizes.len())
        .map(|k| sym(&(&rc_zinv[k] - &it.x[k] * &dz[k] * &zinv[k])))
        .collect();
    // With Z nearly singular the Newton step loses primal feasibility; restore
    // A(dx) = rp by a least-squares correction through the Gram matrix.
    let defect = rp - sf.a_op(&dx);
    let fix = sf.at_op(&gram.solve(&defect));
    for (d, f) in dx.iter_mut().zip(&fix) {
        *d += f;
    }
    Direction { dx, dy, dz }
}

/// Solves the program. Non-optimal outcomes are reported through `status`, with the
/// final iterate attached.
pub fn solve(p: &SdpProblem, opts: &SdpOptions) -> SdpSolution {
    let sf = build_standard(p);
    let n_total: f64 = sf.sizes.iter().sum::<usize>() as f64;
    let b_norm = sf.b.norm();
    let c_norm = blocks_norm(&sf.c);
    let mut it = initial_point(&sf);
    let m_cons = sf.cons.len();
    let mut g = DMatrix::<f64>::zeros(m_cons, m_cons);
    for (k, list) in sf.by_block.iter().enumerate() {
        for &i in list {
            let ai = sf.part(i, k).expect("listed constraint touches block");
            for &j in list {
                let aj = sf.part(j, k).expect("listed constraint touches block");
                g[(i, j)] += dot(ai, aj);
            }
        }
    }
    let gram = match Cholesky::new(g.clone()) {
        Some(ch) => ch,
        None => {
            let bump = 1e-14 * g.diagonal().max().max(1.0);
            match Cholesky::new(g + DMatrix::identity(m_cons, m_cons) * bump) {
                Some(ch) => ch,
                None => {
                    return finish(
                        p,
                        &it,
                        SdpStatus::NumericalFailure,
                        0,
                        f64::INFINITY,
                        f64::INFINITY,
                    )
                }
            }
        }
    };
    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    let mut pinf;
    let mut dinf;
    let mut gap;
    let mut last_step: f64 = 1.0;
    let mut best = (f64::INFINITY, it.clone(), f64::INFINITY, f64::INFINITY, 0);

    loop {
        let ax = sf.a_op(&it.x);
        let rp = &sf.b - &ax;
        let aty = sf.at_op(&it.y);
        let rd: Blocks = (0..sf.sizes.len())
            .map(|k| &sf.c[k] - &aty[k] - &it.z[k])
            .collect();
        let pobj = blocks_dot(&sf.c, &it.x);
        let dobj = sf.b.dot(&it.y);
        let xz = blocks_dot(&it.x, &it.z);
        pinf = rp.norm() / (1.0 + b_norm);
        dinf = blocks_norm(&rd) / (1.0 + c_norm);
        gap = (pobj - dobj).abs().max(xz) / (1.0 + pobj.abs());

        let merit = pinf.max(dinf).max(gap);
        if merit < best.0 {
            best = (merit, it.clone(), pinf, dinf, iterations);
        }
        if pinf <= opts.tol && dinf <= opts.tol && gap <= opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        if dobj > 0.0 {
            let ray: Blocks = aty.iter().zip(&it.z).map(|(a, z)| a + z).collect();
            if blocks_norm(&ray) / dobj < 1e-8 {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        if pobj < 0.0 && ax.norm() / (-pobj) < 1e-8 {
            status = SdpStatus::Unbounded;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        if iterations >= best.4 + STALL_ITERATIONS {
            status = SdpStatus::Stalled;
            break;
        }
        iterations += 1;

        let Some(zinv) = it.z.iter().map(inverse_spd).collect::<Option<Blocks>>() else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let m = schur(&sf, &it.x, &zinv);
        let chol = match Cholesky::new(m.clone()) {
            Some(ch) => ch,
            None => {
                let bump = 1e-14 * m.diagonal().max().max(1.0);
                match Cholesky::new(m + DMatrix::identity(sf.cons.len(), sf.cons.len()) * bump) {
                    Some(ch) => ch,
                    None => {
                        status = SdpStatus::NumericalFailure;
                        break;
                    }
                }
            }
        };
        let mu = xz / n_total;

        let aff = direction(&sf, &it, &zinv, &chol, &gram, &rp, &rd, 0.0, None);
        let ap = max_step(&it.x, &aff.dx).min(1.0);
        let ad = max_step(&it.z, &aff.dz).min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..sf.sizes.len() {
            let xa = &it.x[k] + &aff.dx[k] * ap;
            let za = &it.z[k] + &aff.dz[k] * ad;
            mu_aff += dot(&xa, &za);
        }
        mu_aff /= n_total;
        let mut sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr: Blocks = (0..sf.sizes.len())
            .map(|k| &aff.dx[k] * &aff.dz[k])
            .collect();
        let d = if last_step < 0.2 {
            sigma = sigma.max(0.5);
            direction(&sf, &it, &zinv, &chol, &gram, &rp, &rd, sigma * mu, None)
        } else {
            direction(
                &sf,
                &it,
                &zinv,
                &chol,
                &gram,
                &rp,
                &rd,
                sigma * mu,
                Some(&corr),
            )
        };
        let tau = 0.9 + 0.09 * ap.min(ad);
        let ap = (tau * max_step(&it.x, &d.dx)).min(1.0);
        let ad = (tau * max_step(&it.z, &d.dz)).min(1.0);
        let Some((x_new, ap)) = safe_step(&it.x, &d.dx, ap) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let Some((z_new, ad)) = safe_step(&it.z, &d.dz, ad) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        last_step = ap.min(ad);
        it.x = x_new;
        it.z = z_new;
        it.y += &d.dy * ad;
        if !(ap > 0.0 || ad > 0.0) || it.y.iter().any(|v| !v.is_finite()) {
            status = SdpStatus::NumericalFailure;
            break;
        }
    }

    if matches!(
        status,
        SdpStatus::MaxIterations | SdpStatus::Stalled | SdpStatus::NumericalFailure
    ) {
        let (merit, best_it, bp, bd, _) = best;
        let status = if merit <= opts.acceptable_tol.max(opts.tol) {
            SdpStatus::Optimal
        } else {
            status
        };
        return finish(p, &best_it, status, iterations, bp, bd);
    }
    finish(p, &it, status, iterations, pinf, dinf)
}

fn finish(
    p: &SdpProblem,
    it: &Iterate,
    status: SdpStatus,
    iterations: usize,
    pinf: f64,
    dinf: f64,
) -> SdpSolution {
    let n_in = p.map.in_dims.len();
    let primal = BlockOperator {
        blocks: it.x[..n_in].iter().map(extract).collect(),
    };
    let y_coords: Vec<f64> = it.y.iter().map(|v| -v).collect();
    let dual = BlockOperator::from_coords(&p.map.out_dims, &y_coords);
    let primal_value = p.primal_objective(&primal);
    let dual_value = p.dual_objective(&dual);
    SdpSolution {
        status,
        primal_value,
        dual_value,
        primal,
        dual,
        gap: dual_value - primal_value,
        iterations,
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
    }
}
