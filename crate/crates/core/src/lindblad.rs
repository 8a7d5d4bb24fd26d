//! Lindblad generators as dense superoperators: construction, steady states,
//! the zero-trace inverse problem, propagation and GKS decomposition.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::Schur;

use crate::error::{Error, Result};
use crate::linalg::{
    devectorize, hermitian_eigen, kron, require_hermitian, trace, vectorize, ComplexMatrix,
    ComplexVector, LuFactor, MatrixExt, Subsystem, C64, I, ONE, ZERO,
};
use crate::tolerances::Tolerances;

/// Superoperators up to this many rows use the SVD steady-state path.
const SVD_STEADY_STATE_MAX: usize = 256;

#[derive(Debug, Clone)]
pub struct Jump {
    pub operator: ComplexMatrix,
    /// Multiplies the dissipator; equivalent to pre-scaling the operator by `sqrt(rate)`.
    pub rate: f64,
}

/// Hamiltonian and jump operators of one subsystem.
#[derive(Debug, Clone)]
pub struct SubsystemSpec {
    dim: usize,
    hamiltonian: ComplexMatrix,
    jumps: Vec<Jump>,
}

impl SubsystemSpec {
    pub fn new(dim: usize, hamiltonian: ComplexMatrix, jumps: Vec<Jump>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("subsystem dimension must be positive".into()));
        }
        if hamiltonian.shape() != (dim, dim) {
            return Err(Error::Dimension(format!(
                "hamiltonian is {}x{}, subsystem dimension is {dim}",
                hamiltonian.nrows(),
                hamiltonian.ncols()
            )));
        }
        let tol = Tolerances::default().structural_for(hamiltonian.norm());
        let hamiltonian = require_hermitian(&hamiltonian, tol, "subsystem hamiltonian")?;
        for (k, j) in jumps.iter().enumerate() {
            if j.operator.shape() != (dim, dim) {
                return Err(Error::Dimension(format!(
                    "jump operator {k} is {}x{}, subsystem dimension is {dim}",
                    j.operator.nrows(),
                    j.operator.ncols()
                )));
            }
            if !(j.rate >= 0.0 && j.rate.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "jump rate {k} must be finite and nonnegative, got {}",
                    j.rate
                )));
            }
        }
        Ok(SubsystemSpec { dim, hamiltonian, jumps })
    }

    /// No Hamiltonian and no jumps.
    pub fn trivial(dim: usize) -> Self {
        SubsystemSpec { dim, hamiltonian: ComplexMatrix::zeros(dim, dim), jumps: Vec::new() }
    }

    pub fn with_jump(mut self, operator: ComplexMatrix, rate: f64) -> Result<Self> {
        self.jumps.push(Jump { operator, rate });
        SubsystemSpec::new(self.dim, self.hamiltonian, self.jumps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }
}

/// Linear map on `d x d` operators, stored as the `d^2 x d^2` matrix acting on
/// column-stacked vectorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl SuperOperator {
    pub fn new(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.shape() != (dim * dim, dim * dim) {
            return Err(Error::Dimension(format!(
                "superoperator matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                dim * dim,
                dim * dim
            )));
        }
        Ok(SuperOperator { dim, matrix })
    }

    pub fn zero(dim: usize) -> Self {
        SuperOperator { dim, matrix: ComplexMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn identity(dim: usize) -> Self {
        SuperOperator { dim, matrix: ComplexMatrix::identity(dim * dim, dim * dim) }
    }

    /// `X -> A X B`
    pub fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        SuperOperator { dim: a.nrows(), matrix: kron(&b.transpose(), a) }
    }

    /// `X -> A X`
    pub fn left(a: &ComplexMatrix) -> Self {
        let d = a.nrows();
        SuperOperator { dim: d, matrix: kron(&ComplexMatrix::identity(d, d), a) }
    }

    /// `X -> X B`
    pub fn right(b: &ComplexMatrix) -> Self {
        let d = b.nrows();
        SuperOperator { dim: d, matrix: kron(&b.transpose(), &ComplexMatrix::identity(d, d)) }
    }

    /// `X -> -i [H, X]`
    pub fn hamiltonian(h: &ComplexMatrix) -> Self {
        (SuperOperator::left(h) - SuperOperator::right(h)) * (-I)
    }

    /// `X -> [K, X]` for an arbitrary operator `K`.
    pub fn commutator(k: &ComplexMatrix) -> Self {
        SuperOperator::left(k) - SuperOperator::right(k)
    }

    /// `X -> L X L^† - 1/2 {L^† L, X}`
    pub fn dissipator(l: &ComplexMatrix) -> Self {
        let ll = l.adjoint() * l;
        SuperOperator::sandwich(l, &l.adjoint()) - (SuperOperator::left(&ll) + SuperOperator::right(&ll)) * 0.5
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.shape(), (self.dim, self.dim), "superoperator applied to operator of wrong size");
        let v = &self.matrix * vectorize(x);
        ComplexMatrix::from_column_slice(self.dim, self.dim, v.as_slice())
    }

    /// Heisenberg-picture generator, the adjoint with respect to the
    /// Hilbert-Schmidt inner product.
    pub fn dual(&self) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: self.matrix.adjoint() }
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// `|| vec(I)^† L ||`, zero for trace-preserving maps.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for c in 0..d * d {
            let s: C64 = (0..d).map(|i| self.matrix[(i * d + i, c)]).sum();
            acc += s.norm_sqr();
        }
        acc.sqrt()
    }

    /// Largest `|| L(E_ji) - L(E_ij)^† ||` over matrix units; zero for
    /// Hermiticity-preserving maps.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let c1 = j * d + i; // vec(E_ij)
                let c2 = i * d + j; // vec(E_ji)
                let mut acc = 0.0;
                for p in 0..d {
                    for q in 0..d {
                        let a = self.matrix[(q * d + p, c2)];
                        let b = self.matrix[(p * d + q, c1)].conj();
                        acc += (a - b).norm_sqr();
                    }
                }
                worst = worst.max(acc.sqrt());
            }
        }
        worst
    }

    /// Extend to the bipartite space `A ⊗ B` acting as the identity on the
    /// other factor. `side` names the factor this superoperator acts on.
    pub fn lift(&self, other_dim: usize, side: Subsystem) -> SuperOperator {
        let (da, db) = match side {
            Subsystem::A => (self.dim, other_dim),
            Subsystem::B => (other_dim, self.dim),
        };
        let n = da * db;
        let mut out = ComplexMatrix::zeros(n * n, n * n);
        let d = self.dim;
        for c in 0..d * d {
            let (ci, cj) = (c % d, c / d);
            for r in 0..d * d {
                let v = self.matrix[(r, c)];
                if v == ZERO {
                    continue;
                }
                let (ri, rj) = (r % d, r / d);
                for k in 0..other_dim {
                    for l in 0..other_dim {
                        let (row, col) = match side {
                            Subsystem::A => (
                                (rj * db + l) * n + ri * db + k,
                                (cj * db + l) * n + ci * db + k,
                            ),
                            Subsystem::B => (
                                (l * db + rj) * n + k * db + ri,
                                (l * db + cj) * n + k * db + ci,
                            ),
                        };
                        out[(row, col)] = v;
                    }
                }
            }
        }
        SuperOperator { dim: n, matrix: out }
    }
}

impl Add for SuperOperator {
    type Output = SuperOperator;
    fn add(self, rhs: SuperOperator) -> SuperOperator {
        assert_eq!(self.dim, rhs.dim, "adding superoperators of different dimension");
        SuperOperator { dim: self.dim, matrix: self.matrix + rhs.matrix }
    }
}

impl AddAssign<&SuperOperator> for SuperOperator {
    fn add_assign(&mut self, rhs: &SuperOperator) {
        assert_eq!(self.dim, rhs.dim, "adding superoperators of different dimension");
        self.matrix += &rhs.matrix;
    }
}

impl Sub for SuperOperator {
    type Output = SuperOperator;
    fn sub(self, rhs: SuperOperator) -> SuperOperator {
        assert_eq!(self.dim, rhs.dim, "subtracting superoperators of different dimension");
        SuperOperator { dim: self.dim, matrix: self.matrix - rhs.matrix }
    }
}

impl Neg for SuperOperator {
    type Output = SuperOperator;
    fn neg(self) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: -self.matrix }
    }
}

impl Mul<f64> for SuperOperator {
    type Output = SuperOperator;
    fn mul(self, s: f64) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: self.matrix.scale(s) }
    }
}

impl Mul<C64> for SuperOperator {
    type Output = SuperOperator;
    fn mul(self, s: C64) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: self.matrix * s }
    }
}

/// `rho -> -i[H, rho] + sum_mu rate_mu D[L_mu](rho)`
pub fn build_generator(spec: &SubsystemSpec) -> SuperOperator {
    let mut l = SuperOperator::hamiltonian(spec.hamiltonian());
    for j in spec.jumps() {
        if j.rate != 0.0 {
            l += &(SuperOperator::dissipator(&j.operator) * j.rate);
        }
    }
    l
}

pub fn steady_state(l: &SuperOperator) -> Result<ComplexMatrix> {
    steady_state_with(l, &Tolerances::default())
}

/// Unique trace-one fixed point of a trace-preserving generator.
///
/// Small generators use the right singular vector of the smallest singular
/// value, with the nullity counted from the singular spectrum. Larger ones
/// use two independently bordered LU solves whose agreement certifies a
/// one-dimensional kernel.
pub fn steady_state_with(l: &SuperOperator, tol: &Tolerances) -> Result<ComplexMatrix> {
    let d = l.dim();
    let lnorm = l.norm();
    let tp = l.trace_defect();
    if tp > 1e-10 * lnorm.max(1.0) {
        return Err(Error::NotTracePreserving { defect: tp });
    }
    if d == 1 {
        return Ok(ComplexMatrix::identity(1, 1));
    }
    let raw = if d * d <= SVD_STEADY_STATE_MAX {
        kernel_by_svd(l, tol)?
    } else {
        kernel_by_bordering(l)?
    };
    let tr = trace(&raw);
    if tr.norm() < 1e-300 {
        return Err(Error::NonUniqueSteadyState { nullity: 2 });
    }
    let rho = clip_state(&(raw / tr), tol)?;
    let residual = l.apply(&rho).norm();
    if residual > 1e-10 * lnorm.max(1.0) {
        return Err(Error::SolveFailed {
            what: "steady state residual |L(rho)|".into(),
            residual,
            tol: 1e-10 * lnorm.max(1.0),
        });
    }
    Ok(rho)
}

fn kernel_by_svd(l: &SuperOperator, tol: &Tolerances) -> Result<ComplexMatrix> {
    let svd = l.matrix().clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let nullity = sv.iter().filter(|&&s| s < tol.nullity * smax).count();
    if nullity != 1 {
        return Err(Error::NonUniqueSteadyState { nullity });
    }
    let k = sv.imin();
    let v = ComplexVector::from_iterator(v_t.ncols(), v_t.row(k).iter().map(|z| z.conj()));
    devectorize(&v)
}

fn kernel_by_bordering(l: &SuperOperator) -> Result<ComplexMatrix> {
    let d = l.dim();
    let n = d * d;
    let solve_with = |column: &ComplexVector| -> (ComplexVector, f64) {
        let mut b = ComplexMatrix::zeros(n + 1, n + 1);
        b.view_mut((0, 0), (n, n)).copy_from(l.matrix());
        b.view_mut((0, n), (n, 1)).copy_from(column);
        for i in 0..d {
            b[(n, i * d + i)] = ONE;
        }
        let lu = LuFactor::new(b);
        let mut rhs = ComplexVector::zeros(n + 1);
        rhs[n] = ONE;
        let ratio = lu.pivot_ratio();
        (lu.solve(&rhs).rows(0, n).into_owned(), ratio)
    };
    // Any bordering column with nonzero trace lies outside the range of a
    // trace-preserving generator.
    let mut c1 = ComplexVector::zeros(n);
    let mut c2 = ComplexVector::zeros(n);
    for i in 0..d {
        c1[i * d + i] = C64::new(1.0 / d as f64, 0.0);
        c2[i * d + i] = C64::new((i + 1) as f64, 0.5 * i as f64);
    }
    c2 /= C64::new(c2.norm(), 0.0);
    let (x1, r1) = solve_with(&c1);
    let (x2, r2) = solve_with(&c2);
    let consistent = (&x1 - &x2).norm() <= 1e-8 * x1.norm();
    if r1 < 1e-14 || r2 < 1e-14 || !consistent || !x1.iter().all(|z| z.is_finite()) {
        return Err(Error::NonUniqueSteadyState { nullity: 2 });
    }
    devectorize(&x1)
}

/// Hermitize, clip eigenvalues in `(-tol, 0)` to zero and renormalize the trace.
fn clip_state(x: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let (vals, vecs) = hermitian_eigen(x);
    let t = tol.structural * x.norm().max(1.0);
    let min = vals.first().copied().unwrap_or(0.0);
    if min < -t {
        return Err(Error::NotPositive { what: "steady state".into(), min_eig: min, tol: t });
    }
    let n = x.nrows();
    let mut rho = ComplexMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        if lam > 0.0 {
            let v = vecs.column(k);
            rho += (v * v.adjoint()).scale(lam);
        }
    }
    let tr = trace(&rho).re;
    Ok(rho.scale(1.0 / tr))
}

/// Zero-trace solution of `-L(X) = W - tr(W) rho_bar`.
#[derive(Debug, Clone)]
pub struct TracelessSolution {
    pub x: ComplexMatrix,
    /// `|| -L(X) - (W - tr(W) rho_bar) ||_F`
    pub residual: f64,
}

/// Factored bordered system for repeated zero-trace solves against one
/// generator and its steady state.
#[derive(Debug, Clone)]
pub struct TracelessSolver {
    generator: SuperOperator,
    rho_bar: ComplexMatrix,
    lu: LuFactor,
    tol: Tolerances,
}

impl TracelessSolver {
    pub fn new(l: &SuperOperator, rho_bar: &ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let d = l.dim();
        if rho_bar.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "steady state is {}x{}, generator acts on dimension {d}",
                rho_bar.nrows(),
                rho_bar.ncols()
            )));
        }
        let n = d * d;
        // [[-L, vec(rho_bar)], [vec(I)^T, 0]]
        let mut b = ComplexMatrix::zeros(n + 1, n + 1);
        b.view_mut((0, 0), (n, n)).copy_from(&(-l.matrix()));
        b.view_mut((0, n), (n, 1)).copy_from(&vectorize(rho_bar));
        for i in 0..d {
            b[(n, i * d + i)] = ONE;
        }
        let lu = LuFactor::new(b);
        if lu.is_singular() {
            return Err(Error::NonUniqueSteadyState { nullity: 2 });
        }
        Ok(TracelessSolver { generator: l.clone(), rho_bar: rho_bar.clone(), lu, tol: *tol })
    }

    pub fn rho_bar(&self) -> &ComplexMatrix {
        &self.rho_bar
    }

    pub fn generator(&self) -> &SuperOperator {
        &self.generator
    }

    pub fn solve(&self, w: &ComplexMatrix) -> Result<TracelessSolution> {
        let d = self.generator.dim();
        if w.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "right-hand side is {}x{}, expected {d}x{d}",
                w.nrows(),
                w.ncols()
            )));
        }
        let n = d * d;
        let rhs = vectorize(&(w - &self.rho_bar * trace(w)));
        let mut b = ComplexVector::zeros(n + 1);
        b.rows_mut(0, n).copy_from(&rhs);
        let mut y = self.lu.solve(&b);
        let vrho = vectorize(&self.rho_bar);
        for _ in 0..2 {
            let x = y.rows(0, n).into_owned();
            let mu = y[n];
            let mut r = ComplexVector::zeros(n + 1);
            let top = &rhs + self.generator.matrix() * &x - &vrho * mu;
            r.rows_mut(0, n).copy_from(&top);
            r[n] = -(0..d).map(|i| x[i * d + i]).sum::<C64>();
            y += self.lu.solve(&r);
        }
        let x = devectorize(&y.rows(0, n).into_owned())?;
        let residual = (-(self.generator.matrix() * vectorize(&x)) - &rhs).norm();
        let limit = self.tol.solve_residual * w.norm();
        if residual > limit && residual > 1e-300 {
            return Err(Error::SolveFailed { what: "zero-trace inverse of the fast generator".into(), residual, tol: limit });
        }
        Ok(TracelessSolution { x, residual })
    }
}

pub fn solve_traceless(l: &SuperOperator, w: &ComplexMatrix, rho_bar: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(TracelessSolver::new(l, rho_bar, &Tolerances::default())?.solve(w)?.x)
}

/// `exp(t L)(rho0)`
pub fn propagate(l: &SuperOperator, rho0: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("propagation time must be finite and nonnegative, got {t}")));
    }
    if rho0.shape() != (l.dim(), l.dim()) {
        return Err(Error::Dimension(format!(
            "initial state is {}x{}, generator acts on dimension {}",
            rho0.nrows(),
            rho0.ncols(),
            l.dim()
        )));
    }
    let p = crate::linalg::expm(&l.matrix().scale(t));
    devectorize(&(p * vectorize(rho0)))
}

/// Smallest nonzero relaxation rate: the second-smallest `|Re lambda|` over
/// the generator spectrum. Diagnostic only.
pub fn spectral_gap(l: &SuperOperator) -> Option<f64> {
    let n = l.matrix().nrows();
    if n < 2 {
        return None;
    }
    let schur = Schur::try_new(l.matrix().clone(), 1e-14, 10_000)?;
    let (_, t) = schur.unpack();
    let mut re: Vec<f64> = (0..n).map(|i| t[(i, i)].re.abs()).collect();
    re.sort_by(f64::total_cmp);
    Some(re[1])
}

/// Orthonormal generalized Gell-Mann basis, `tr(G_j^† G_k) = delta_jk`. The first
/// element is `I/sqrt(d)`, the remaining `d^2 - 1` are traceless.
pub fn gell_mann_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut basis = vec![ComplexMatrix::identity(d, d).scale(1.0 / (d as f64).sqrt())];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            let mut sym = ComplexMatrix::zeros(d, d);
            sym[(j, k)] = C64::new(s, 0.0);
            sym[(k, j)] = C64::new(s, 0.0);
            basis.push(sym);
            let mut asym = ComplexMatrix::zeros(d, d);
            asym[(j, k)] = C64::new(0.0, -s);
            asym[(k, j)] = C64::new(0.0, s);
            basis.push(asym);
        }
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut diag = ComplexMatrix::zeros(d, d);
        for m in 0..l {
            diag[(m, m)] = C64::new(1.0 / norm, 0.0);
        }
        diag[(l, l)] = C64::new(-(l as f64) / norm, 0.0);
        basis.push(diag);
    }
    basis
}

/// Hamiltonian plus Kossakowski form of a generator.
#[derive(Debug, Clone)]
pub struct GksDecomposition {
    pub h_eff: ComplexMatrix,
    /// Coefficients over the traceless basis elements `basis[1..]`.
    pub kossakowski: ComplexMatrix,
    pub basis: Vec<ComplexMatrix>,
    pub min_eigenvalue: f64,
    pub is_lindblad: bool,
    /// `|| L - rebuilt ||_F / max(1, ||L||_F)`
    pub reconstruction_error: f64,
}

pub fn gks_decompose(l: &SuperOperator) -> Result<GksDecomposition> {
    gks_decompose_with(l, &Tolerances::default())
}

/// Expand `L(rho) = sum_ij c_ij G_i rho G_j^†` over the Gell-Mann basis and
/// split off the Hamiltonian part.
pub fn gks_decompose_with(l: &SuperOperator, tol: &Tolerances) -> Result<GksDecomposition> {
    let d = l.dim();
    let lnorm = l.norm();
    let tp = l.trace_defect();
    if tp > 1e-10 * lnorm.max(1.0) {
        return Err(Error::NotTracePreserving { defect: tp });
    }
    let n = d * d;
    let m = l.matrix();
    // R = sum_ij c_ij vec(G_i) vec(G_j)^†, a reshuffle of the superoperator matrix
    let mut r = ComplexMatrix::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    r[(e * d + b, c * d + a)] = m[(a * d + b, c * d + e)];
                }
            }
        }
    }
    let basis = gell_mann_basis(d);
    let mut fmat = ComplexMatrix::zeros(n, n);
    for (k, g) in basis.iter().enumerate() {
        fmat.set_column(k, &vectorize(g));
    }
    let coeffs = fmat.adjoint() * &r * &fmat;
    let sqrt_d = (d as f64).sqrt();
    let mut f_hat = ComplexMatrix::zeros(d, d);
    for (i, g) in basis.iter().enumerate().skip(1) {
        f_hat += g * (coeffs[(i, 0)] / sqrt_d);
    }
    let h_eff = crate::linalg::hermitian_part(&((f_hat.adjoint() - &f_hat) * C64::new(0.0, -0.5)));
    let k_raw = coeffs.view((1, 1), (n - 1, n - 1)).into_owned();
    let kossakowski = crate::linalg::hermitian_part(&k_raw);
    let min_eigenvalue = if n > 1 { crate::linalg::min_hermitian_eigenvalue(&kossakowski) } else { 0.0 };
    let is_lindblad = min_eigenvalue >= -tol.structural_for(kossakowski.norm());
    let rebuilt = rebuild_from_gks(&h_eff, &kossakowski, &fmat, d);
    let reconstruction_error = (rebuilt.matrix() - m).norm() / lnorm.max(1.0);
    Ok(GksDecomposition { h_eff, kossakowski, basis, min_eigenvalue, is_lindblad, reconstruction_error })
}

fn rebuild_from_gks(h: &ComplexMatrix, k: &ComplexMatrix, fmat: &ComplexMatrix, d: usize) -> SuperOperator {
    let n = d * d;
    let mut c = ComplexMatrix::zeros(n, n);
    c.view_mut((1, 1), (n - 1, n - 1)).copy_from(k);
    let q = fmat * c * fmat.adjoint();
    // sum_ij c_ij conj(G_j) ⊗ G_i is the inverse reshuffle of q
    let mut jump_part = ComplexMatrix::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            for cc in 0..d {
                for e in 0..d {
                    jump_part[(a * d + b, cc * d + e)] = q[(e * d + b, cc * d + a)];
                }
            }
        }
    }
    // sum_ij c_ij G_j^† G_i
    let g = ComplexMatrix::from_fn(d, d, |p, qq| (0..d).map(|rr| q[(qq * d + rr, p * d + rr)]).sum());
    let anti = (SuperOperator::left(&g) + SuperOperator::right(&g)) * 0.5;
    SuperOperator { dim: d, matrix: jump_part } - anti + SuperOperator::hamiltonian(h)
}

/// Largest `|X v|` over eigenvectors `v` of `rho_bar` with eigenvalue below
/// `threshold`; zero when `rho_bar` has full rank at that threshold.
pub fn kernel_inclusion_defect(rho_bar: &ComplexMatrix, x: &ComplexMatrix, threshold: f64) -> f64 {
    let (vals, vecs) = hermitian_eigen(rho_bar);
    let mut worst = 0.0f64;
    for (k, &lam) in vals.iter().enumerate() {
        if lam < threshold {
            worst = worst.max((x * vecs.column(k)).norm());
        }
    }
    worst
}

/// Size of `|X v|` that eigenvector noise alone can produce, per unit `||X||`,
/// when the numerical kernel at `threshold` sits next to small nonzero
/// eigenvalues: `d eps ||rho_bar|| / lambda_next`, with `lambda_next` the
/// smallest eigenvalue above the cut. Zero when nothing falls below the cut.
pub fn kernel_eigenvector_slack(rho_bar: &ComplexMatrix, threshold: f64) -> f64 {
    let (vals, _) = hermitian_eigen(rho_bar);
    if !vals.iter().any(|&l| l < threshold) {
        return 0.0;
    }
    let top = vals.last().copied().unwrap_or(0.0);
    match vals.iter().copied().find(|&l| l >= threshold) {
        Some(next) if next > 0.0 => vals.len() as f64 * f64::EPSILON * top / next,
        _ => 0.0,
    }
}

/// Whether `ker(rho_bar)` is contained in `ker(X)`, with `tol` serving both as the
/// eigenvalue cut for the kernel and as the relative size of `|X v|`.
pub fn kernel_inclusion_check(rho_bar: &ComplexMatrix, x: &ComplexMatrix, tol: f64) -> bool {
    kernel_inclusion_defect(rho_bar, x, tol) <= tol * x.norm().max(1.0)
}

/// Checks a density matrix: Hermitian, trace one and PSD within the
/// structural tolerance.
pub fn is_density_matrix(rho: &ComplexMatrix, tol: &Tolerances) -> bool {
    let t = tol.structural_for(rho.norm());
    rho.is_hermitian(t) && rho.is_trace_one(t) && rho.is_psd(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, Subsystem};
    use crate::ops;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn from_seed(n: usize, seed: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |i, j| {
            let k = 2 * (i * n + j);
            c(seed[k % seed.len()], seed[(k + 1) % seed.len()])
        })
    }

    fn decay(gamma: f64) -> SubsystemSpec {
        SubsystemSpec::trivial(2).with_jump(ops::sigma_minus(), gamma).unwrap()
    }

    #[test]
    fn decay_of_excited_state() {
        let l = build_generator(&decay(0.7));
        let out = l.apply(&ops::excited_projector());
        let expected = (ops::projector(2, 1) - ops::excited_projector()).scale(0.7);
        assert!((out - expected).norm() < 1e-14);
    }

    #[test]
    fn precession() {
        let spec = SubsystemSpec::new(2, ops::sigma_z(), vec![]).unwrap();
        let out = build_generator(&spec).apply(&ops::sigma_x());
        assert!((out - ops::sigma_y().scale(2.0)).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian() {
        assert!(matches!(
            SubsystemSpec::new(2, ops::sigma_minus(), vec![]),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn generator_matches_direct_formula() {
        let seed: Vec<f64> = (0..97).map(|k| ((k * 37 % 101) as f64 / 50.0) - 1.0).collect();
        let h = crate::linalg::hermitian_part(&from_seed(3, &seed));
        let l1 = from_seed(3, &seed[5..]);
        let l2 = from_seed(3, &seed[11..]);
        let spec = SubsystemSpec::new(3, h.clone(), vec![Jump { operator: l1.clone(), rate: 0.4 }, Jump { operator: l2.clone(), rate: 1.3 }]).unwrap();
        let gen = build_generator(&spec);
        for t in 0..20 {
            let x = from_seed(3, &seed[t..]);
            let mut direct = (commutator(&h, &x)) * (-I);
            for (op, rate) in [(&l1, 0.4), (&l2, 1.3)] {
                let ll = op.adjoint() * op;
                direct += (op * &x * op.adjoint() - (&ll * &x + &x * &ll).scale(0.5)).scale(rate);
            }
            assert!((gen.apply(&x) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn steady_state_of_decay_is_ground() {
        let rho = steady_state(&build_generator(&decay(1.0))).unwrap();
        assert!((rho - ops::projector(2, 1)).norm() < 1e-12);
    }

    #[test]
    fn steady_state_rejects_degenerate_kernel() {
        let l = build_generator(&SubsystemSpec::new(2, ops::sigma_z(), vec![]).unwrap());
        assert!(matches!(steady_state(&l), Err(Error::NonUniqueSteadyState { nullity: 2 })));
    }

    #[test]
    fn bordered_path_agrees_with_svd_path() {
        // damped, driven oscillator, d = 17 > SVD threshold
        let n = 17;
        let a = ops::annihilation(n);
        let h = (&a + a.adjoint()).scale(0.3);
        let spec = SubsystemSpec::new(n, h, vec![Jump { operator: a, rate: 1.0 }]).unwrap();
        let l = build_generator(&spec);
        let rho = steady_state(&l).unwrap();
        assert!(l.apply(&rho).norm() < 1e-10);
        // coherent state with amplitude -2i * 0.3 / 1 => <a> = -0.6i
        let mean = trace(&(ops::annihilation(n) * &rho));
        assert!((mean - c(0.0, -0.6)).norm() < 1e-8);
        let small = steady_state(&build_generator(&decay(1.0))).unwrap();
        assert!(is_density_matrix(&small, &Tolerances::default()));
    }

    #[test]
    fn steady_state_is_long_time_limit() {
        let spec = SubsystemSpec::new(2, ops::sigma_y().scale(0.4), vec![Jump { operator: ops::sigma_minus(), rate: 1.0 }]).unwrap();
        let l = build_generator(&spec);
        let rho = steady_state(&l).unwrap();
        let late = propagate(&l, &ops::excited_projector(), 80.0).unwrap();
        assert!(crate::linalg::trace_norm(&(late - &rho)) < 1e-10);
    }

    #[test]
    fn traceless_solve_basic() {
        let l = build_generator(&decay(2.0));
        let rho = steady_state(&l).unwrap();
        let zero = solve_traceless(&l, &rho, &rho).unwrap();
        assert!(zero.norm() < 1e-14);
        let x = solve_traceless(&l, &ops::sigma_z(), &rho).unwrap();
        assert!(trace(&x).norm() < 1e-13);
        // sigma_z is traceless, so -L(X) = sigma_z
        let back = -l.apply(&x);
        assert!((back - ops::sigma_z()).norm() < 1e-12);
        let y = solve_traceless(&l, &ops::excited_projector(), &rho).unwrap();
        assert!((-l.apply(&y) - (ops::excited_projector() - &rho)).norm() < 1e-12);
    }

    #[test]
    fn gks_round_trip_and_sign_flip() {
        let spec = SubsystemSpec::new(2, ops::sigma_x().scale(0.3), vec![Jump { operator: ops::sigma_minus(), rate: 1.5 }]).unwrap();
        let gks = gks_decompose(&build_generator(&spec)).unwrap();
        assert!(gks.is_lindblad);
        assert!(gks.reconstruction_error < 1e-12);
        assert!((gks.h_eff - ops::sigma_x().scale(0.3)).norm() < 1e-12);
        let neg = gks_decompose(&(SuperOperator::dissipator(&ops::sigma_minus()) * -2.0)).unwrap();
        assert!(!neg.is_lindblad);
        assert!((neg.min_eigenvalue + 2.0).abs() < 1e-12);
    }

    #[test]
    fn gks_rejects_non_trace_preserving() {
        let l = SuperOperator::left(&ops::sigma_z());
        assert!(matches!(gks_decompose(&l), Err(Error::NotTracePreserving { .. })));
    }

    #[test]
    fn kernel_inclusion_examples() {
        let ground = ops::projector(2, 1);
        assert!(!kernel_inclusion_check(&ground, &ops::sigma_x(), 1e-9));
        assert!(kernel_inclusion_check(&ops::maximally_mixed(2), &ops::sigma_x(), 1e-9));
        let l = build_generator(&decay(1.0));
        let w = ops::sigma_minus() * &ground - &ground * trace(&(ops::sigma_minus() * &ground));
        let x = solve_traceless(&l, &w, &ground).unwrap();
        assert!(kernel_inclusion_check(&ground, &x, 1e-9));
    }

    #[test]
    fn kernel_slack_tracks_the_next_eigenvalue() {
        let diag = |v: &[f64]| ComplexMatrix::from_diagonal(&crate::linalg::ComplexVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0))));
        assert_eq!(kernel_eigenvector_slack(&diag(&[0.5, 0.5]), 1e-12), 0.0);
        let gapped = kernel_eigenvector_slack(&diag(&[0.0, 0.3, 0.7]), 1e-12);
        assert!(gapped > 0.0 && gapped < 1e-14);
        // geometric tail straddling the cut, as in a truncated oscillator
        let tail = kernel_eigenvector_slack(&diag(&[0.9, 1e-11, 2e-12, 5e-13, 1e-13]), 0.9e-12);
        assert!(tail > 1e-5);
    }

    #[test]
    fn lift_matches_kron_action() {
        let la = build_generator(&SubsystemSpec::new(2, ops::sigma_x(), vec![Jump { operator: ops::sigma_minus(), rate: 0.5 }]).unwrap());
        let lb = build_generator(&SubsystemSpec::new(3, ops::number(3), vec![Jump { operator: ops::annihilation(3), rate: 0.2 }]).unwrap());
        let ra = ops::plus_state();
        let rb = ops::maximally_mixed(3);
        let joint_a = la.lift(3, Subsystem::A).apply(&kron(&ra, &rb));
        assert!((joint_a - kron(&la.apply(&ra), &rb)).norm() < 1e-13);
        let joint_b = lb.lift(2, Subsystem::B).apply(&kron(&ra, &rb));
        assert!((joint_b - kron(&ra, &lb.apply(&rb))).norm() < 1e-13);
    }

    #[test]
    fn spectral_gap_of_decay() {
        // eigenvalues 0, -gamma/2 (twice), -gamma
        let gap = spectral_gap(&build_generator(&decay(2.0))).unwrap();
        assert!((gap - 1.0).abs() < 1e-10);
    }

    fn arb_spec() -> impl Strategy<Value = SubsystemSpec> {
        (2usize..4, proptest::collection::vec(-1.0f64..1.0, 64)).prop_map(|(d, v)| {
            let h = crate::linalg::hermitian_part(&from_seed(d, &v));
            let l1 = from_seed(d, &v[7..]);
            let l2 = from_seed(d, &v[19..]);
            SubsystemSpec::new(d, h, vec![Jump { operator: l1, rate: 1.0 }, Jump { operator: l2, rate: 0.5 }]).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn generators_are_lindblad_trace_and_hermiticity_preserving(spec in arb_spec()) {
            let l = build_generator(&spec);
            prop_assert!(l.trace_defect() < 1e-10);
            prop_assert!(l.hermiticity_defect() < 1e-10);
            let gks = gks_decompose(&l).unwrap();
            prop_assert!(gks.is_lindblad);
            prop_assert!(gks.reconstruction_error < 1e-10);
        }

        #[test]
        fn steady_state_is_fixed_point(spec in arb_spec()) {
            let l = build_generator(&spec);
            let rho = steady_state(&l).unwrap();
            prop_assert!(is_density_matrix(&rho, &Tolerances::default()));
            let ln = l.norm();
            for t in [0.1, 1.0, 10.0] {
                let out = propagate(&l, &rho, t / ln).unwrap();
                prop_assert!(crate::linalg::trace_norm(&(out - &rho)) < 1e-9);
            }
        }

        #[test]
        fn traceless_solve_residual(spec in arb_spec(), w in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let l = build_generator(&spec);
            let rho = steady_state(&l).unwrap();
            let d = spec.dim();
            let mut w = from_seed(d, &w);
            let tr = trace(&w) / C64::new(d as f64, 0.0);
            for i in 0..d { w[(i, i)] -= tr; }
            let x = solve_traceless(&l, &w, &rho).unwrap();
            prop_assert!((-l.apply(&x) - &w).norm() <= 1e-9 * w.norm().max(1e-300));
            prop_assert!(trace(&x).norm() < 1e-12);
        }
    }
}
