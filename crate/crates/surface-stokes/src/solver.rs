//! Direct solution of the perturbed Stokes saddle system and the stabilized
//! eigenproblem, plus projections onto discrete and analytic Killing spaces.
//!
//! One sparse LDL^T factorization of the augmented matrix
//!
//! ```text
//! [ A + J + eps Mv   B^T   0 ]
//! [ B                0     w ]
//! [ 0                w^T   0 ]
//! ```
//!
//! serves both the solve and, at eps = 1, every inverse-iteration step of
//! the eigensolver. The row w of face areas pins the pressure mean to zero
//! while keeping the system symmetric, and absorbs the quadrature
//! incompatibility of the divergence data on the closed surface.

use crate::assembly::FeSystem;
use crate::dense;
use crate::error::{Error, Result};
use crate::fem::FeFunction;
use crate::sparse::{DirectSolver, Triplets};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub enum EpsilonPolicy {
    Fixed(f64),
    /// eps = h^alpha with the mesh's maximal face diameter as h.
    HPower(f64),
}

impl EpsilonPolicy {
    pub fn epsilon(&self, h: f64) -> f64 {
        match *self {
            EpsilonPolicy::Fixed(e) => e,
            EpsilonPolicy::HPower(alpha) => h.powf(alpha),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub rho: f64,
    pub epsilon_policy: EpsilonPolicy,
    pub eigen_count: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: crate::assembly::DEFAULT_RHO,
            epsilon_policy: EpsilonPolicy::HPower(2.0),
            eigen_count: 3,
            seed: 0x5eed_cafe,
        }
    }
}

pub struct StokesSolution {
    pub velocity: FeFunction,
    pub pressure: FeFunction,
    pub epsilon: f64,
    /// Relative algebraic residual of the augmented system.
    pub residual_norm: f64,
    /// Set when the residual exceeds 1e-8 after refinement.
    pub ill_conditioned: bool,
}

pub struct EigenSet {
    /// Lambda_i ascending (the stabilized pencil's values minus one).
    pub eigenvalues: Vec<f64>,
    /// Mv-orthonormal velocity eigenvectors.
    pub eigenvectors: Vec<FeFunction>,
    /// Pencil residuals |(A+J) U - Lambda Mv U + Lambda~ B^T p| per pair.
    pub residuals: Vec<f64>,
}

/// Factorized augmented operator for one (system, epsilon).
pub struct SaddleSolver<'s> {
    pub system: &'s FeSystem,
    pub epsilon: f64,
    solver: DirectSolver,
    nv: usize,
    np: usize,
}

impl<'s> SaddleSolver<'s> {
    pub fn new(system: &'s FeSystem, epsilon: f64) -> Result<Self> {
        let nv = system.n_velocity();
        let np = system.n_pressure();
        let n = nv + np + 1;
        let mut t = Triplets::new(n, n);
        let push_block = |t: &mut Triplets, m: &crate::sparse::CscMatrix, scale: f64| {
            for j in 0..m.n_cols {
                for p in m.col_ptr[j]..m.col_ptr[j + 1] {
                    t.push(m.row_idx[p], j, scale * m.vals[p]);
                }
            }
        };
        push_block(&mut t, &system.a, 1.0);
        push_block(&mut t, &system.j, 1.0);
        if epsilon != 0.0 {
            push_block(&mut t, &system.mv, epsilon);
        }
        for j in 0..system.b.n_cols {
            for p in system.b.col_ptr[j]..system.b.col_ptr[j + 1] {
                let row = system.b.row_idx[p];
                let v = system.b.vals[p];
                t.push(nv + row, j, v);
                t.push(j, nv + row, v);
            }
        }
        for (f, &area) in system.face_areas.iter().enumerate() {
            t.push(nv + f, n - 1, area);
            t.push(n - 1, nv + f, area);
        }
        let kkt = t.to_csc();
        let delta = 1e-10
            * (system.a.max_abs_diag() + system.j.max_abs_diag() + system.mv.max_abs_diag())
                .max(1.0);
        let mut reg = vec![delta; n];
        reg[nv..].iter_mut().for_each(|r| *r = -delta);
        let solver = DirectSolver::new(kkt, &reg)?;
        Ok(SaddleSolver { system, epsilon, solver, nv, np })
    }

    pub fn factor_nnz(&self) -> usize {
        self.solver.factor_nnz()
    }

    /// Solve with velocity load `f` and pressure data `g`; returns
    /// (velocity, pressure, relative residual). The returned pressure is the
    /// physical one (the system is solved for its negative).
    pub fn solve_raw(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let n = self.nv + self.np + 1;
        let mut rhs = vec![0.0; n];
        rhs[..self.nv].copy_from_slice(f);
        rhs[self.nv..self.nv + self.np].copy_from_slice(g);
        let (x, stats) = self.solver.solve(&rhs);
        let velocity = x[..self.nv].to_vec();
        let pressure = x[self.nv..self.nv + self.np].iter().map(|v| -v).collect();
        (velocity, pressure, stats.relative_residual)
    }

    /// Apply the inverse-iteration operator: velocity part of the solve with
    /// load Mv x and zero divergence data; also returns the multiplier block.
    fn apply_t(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.apply_t_tol(x, 1e-15)
    }

    fn apply_t_tol(&self, x: &[f64], tol: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.nv + self.np + 1;
        let mut rhs = vec![0.0; n];
        self.system.mv.matvec_add(1.0, x, &mut rhs[..self.nv]);
        let (sol, _) = self.solver.solve_tol(&rhs, tol);
        let velocity = sol[..self.nv].to_vec();
        let pressure = sol[self.nv..self.nv + self.np].iter().map(|v| -v).collect();
        (velocity, pressure)
    }

    /// Apply T to a block of vectors, in parallel when the thread knob
    /// allows it.
    fn apply_t_block(&self, xs: &[Vec<f64>], tol: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let threads = std::env::var("SURFACE_STOKES_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .unwrap_or(1)
            .min(xs.len().max(1));
        if threads <= 1 {
            return xs.iter().map(|x| self.apply_t_tol(x, tol)).collect();
        }
        let chunk = xs.len().div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = xs
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(|x| self.apply_t_tol(x, tol)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("solve thread panicked"))
                .collect()
        })
    }
}

/// Solve the perturbed Stokes system with the assembled loads.
pub fn solve_stokes(system: &FeSystem, epsilon: f64) -> Result<StokesSolution> {
    if epsilon == 0.0 && system.killing_dim() > 0 {
        return Err(Error::SingularSystem(
            "epsilon = 0 with a nontrivial Killing space; use epsilon > 0".into(),
        ));
    }
    let solver = SaddleSolver::new(system, epsilon)?;
    solve_stokes_with(&solver, &system.f_vec, &system.g_vec)
}

/// Solve with explicit load data, reusing a factorization.
pub fn solve_stokes_with(
    solver: &SaddleSolver,
    f: &[f64],
    g: &[f64],
) -> Result<StokesSolution> {
    let (velocity, pressure, residual) = solver.solve_raw(f, g);
    if !residual.is_finite() || residual > 1e-4 {
        return Err(Error::SingularSystem(format!(
            "augmented solve stalled at relative residual {residual:.3e}"
        )));
    }
    Ok(StokesSolution {
        velocity: FeFunction { coeffs: velocity },
        pressure: FeFunction { coeffs: pressure },
        epsilon: solver.epsilon,
        residual_norm: residual,
        ill_conditioned: residual > 1e-8,
    })
}

/// Smallest k eigenpairs of the constrained stabilized pencil
/// (A + J + Mv, Mv) on {B U = 0} by blocked inverse iteration with
/// Rayleigh-Ritz extraction; returns Lambda = Lambda~ - 1.
pub fn solve_eigen(system: &FeSystem, k: usize, seed: u64) -> Result<EigenSet> {
    let nv = system.n_velocity();
    let np = system.n_pressure();
    let constrained_dim = nv + 1 - np; // rank(B) = np - 1 on the closed surface
    if k < 1 || k > constrained_dim {
        return Err(Error::EigenCountTooLarge { requested: k, available: constrained_dim });
    }
    let solver = SaddleSolver::new(system, 1.0)?;
    let m = (k + 3).min(constrained_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // seed with the interpolated rotation fields (excellent approximations
    // of the lowest modes on the whole ellipsoid family), topped up randomly
    let mut x: Vec<Vec<f64>> = system
        .rotation_seeds
        .iter()
        .take(m)
        .map(|f| f.coeffs.clone())
        .collect();
    while x.len() < m {
        x.push((0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    // land the block in the divergence-free subspace
    x = solver
        .apply_t_block(&x, 1e-13)
        .into_iter()
        .map(|(v, _)| v)
        .collect();
    mv_orthonormalize(system, &mut x)?;

    let max_iter = 300;
    let mut prev_ritz: Vec<f64> = vec![f64::INFINITY; k];
    let mut last_pressures: Vec<Vec<f64>> = Vec::new();
    let mut ritz: Vec<f64> = Vec::new();
    let mut stable_rounds = 0usize;
    for iter in 0..max_iter {
        // Y = T X with pressures retained for the residual check; inner
        // iterations tolerate a looser solve, the final rounds tighten
        let tol = if stable_rounds > 0 { 1e-15 } else { 1e-13 };
        let applied = solver.apply_t_block(&x, tol);
        let y: Vec<Vec<f64>> = applied.iter().map(|(v, _)| v.clone()).collect();
        let p: Vec<Vec<f64>> = applied.iter().map(|(_, q)| q.clone()).collect();
        // Rayleigh-Ritz on span(Y)
        let mut ga = dense::zeros(m, m);
        let mut gm = dense::zeros(m, m);
        let sy: Vec<Vec<f64>> = y.iter().map(|v| system.epsilon_apply(1.0, v)).collect();
        let my: Vec<Vec<f64>> = y.iter().map(|v| system.mv.matvec(v)).collect();
        for i in 0..m {
            for j in 0..m {
                ga[i][j] = dot(&y[i], &sy[j]);
                gm[i][j] = dot(&y[i], &my[j]);
            }
        }
        symmetrize(&mut ga);
        symmetrize(&mut gm);
        let (theta, c) = dense::sym_generalized_eig(&ga, &gm)?;
        // new block: Ritz vectors, already Mv-orthonormal
        let mut xn = vec![vec![0.0; nv]; m];
        let mut pn = vec![vec![0.0; np]; m];
        for (r, (col_x, col_p)) in xn.iter_mut().zip(pn.iter_mut()).enumerate() {
            for i in 0..m {
                let w = c[i][r];
                if w == 0.0 {
                    continue;
                }
                axpy(w, &y[i], col_x);
                axpy(w, &p[i], col_p);
            }
        }
        x = xn;
        last_pressures = pn;
        ritz = theta.clone();
        let stable = (0..k).all(|i| {
            (ritz[i] - prev_ritz[i]).abs() <= 1e-10 * ritz[i].abs().max(1e-30)
        });
        prev_ritz = ritz.clone();
        // Ritz values settle before the vectors; a few extra rounds contract
        // the vector residuals by the eigenvalue gap ratio each time.
        stable_rounds = if stable { stable_rounds + 1 } else { 0 };
        if stable_rounds >= 4 && iter >= 2 {
            break;
        }
        if iter == max_iter - 1 {
            return Err(Error::EigenNoConvergence {
                iterations: max_iter,
                residual: (ritz[0] - prev_ritz[0]).abs(),
            });
        }
    }

    // The Ritz vectors from the last pass: x_i with pressures p_i satisfy
    // S x_i + B^T p_i = Mv x_prev_i; use them for the constrained residual
    // |S U - Lambda~ Mv U + Lambda~ B^T p|.
    mv_orthonormalize(system, &mut x)?;
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for i in 0..k {
        let lam_tilde = ritz[i];
        let u = &x[i];
        let mut r = system.epsilon_apply(1.0, u);
        system.mv.matvec_add(-lam_tilde, u, &mut r);
        // constraint correction: the pressure of one extra solve, scaled
        let mut bt_p = vec![0.0; nv];
        if !last_pressures.is_empty() {
            // p stored for the pre-orthonormalization block; recompute for u
            let (_, p) = solver.apply_t(u);
            system.b.matvec_transpose_add(-lam_tilde, &p, &mut bt_p);
        }
        for (ri, bi) in r.iter_mut().zip(&bt_p) {
            *ri += bi;
        }
        let res = norm(&r);
        eigenvalues.push(lam_tilde - 1.0);
        eigenvectors.push(FeFunction { coeffs: u.clone() });
        residuals.push(res);
    }
    Ok(EigenSet { eigenvalues, eigenvectors, residuals })
}

/// Gram-Schmidt in the Mv inner product via the dense Cholesky of the block
/// Gram matrix.
fn mv_orthonormalize(system: &FeSystem, x: &mut Vec<Vec<f64>>) -> Result<()> {
    let m = x.len();
    let mut g = dense::zeros(m, m);
    let mx: Vec<Vec<f64>> = x.iter().map(|v| system.mv.matvec(v)).collect();
    for i in 0..m {
        for j in 0..m {
            g[i][j] = dot(&x[i], &mx[j]);
        }
    }
    symmetrize(&mut g);
    let l = dense::cholesky(&g)?;
    // X <- X L^{-T}: out_j = (x_j - sum_{i<j} L[j][i] out_i) / L[j][j]
    let n = x[0].len();
    let mut out = vec![vec![0.0; n]; m];
    for j in 0..m {
        let mut acc = x[j].clone();
        #[allow(clippy::needless_range_loop)]
        for i in 0..j {
            let f = l[j][i];
            for (a, b) in acc.iter_mut().zip(&out[i]) {
                *a -= f * b;
            }
        }
        let inv = 1.0 / l[j][j];
        for a in acc.iter_mut() {
            *a *= inv;
        }
        out[j] = acc;
    }
    *x = out;
    Ok(())
}

/// Result of removing the analytic Killing component from a velocity.
pub struct KillingProjection {
    pub filtered: FeFunction,
    pub killing_part: FeFunction,
    pub coefficients: Vec<f64>,
}

/// Remove the span of the interpolated analytic Killing fields, with
/// coefficients chosen so that the analytic moments of the result vanish
/// exactly (idempotent to machine precision).
pub fn project_analytic_killing(system: &FeSystem, u: &FeFunction) -> Result<KillingProjection> {
    let dim = system.killing_dim();
    if dim == 0 {
        return Err(Error::SingularSystem("empty Killing basis".into()));
    }
    let b: Vec<f64> = system.k_gram.iter().map(|row| dot(row, &u.coeffs)).collect();
    let mut g = dense::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[i][j] = dot(&system.k_gram[i], &system.k_interp[j].coeffs);
        }
    }
    let c = dense::solve(&g, &b)?;
    let n = u.coeffs.len();
    let mut killing_part = vec![0.0; n];
    for (j, cj) in c.iter().enumerate() {
        axpy(*cj, &system.k_interp[j].coeffs, &mut killing_part);
    }
    let filtered: Vec<f64> = u.coeffs.iter().zip(&killing_part).map(|(a, b)| a - b).collect();
    Ok(KillingProjection {
        filtered: FeFunction { coeffs: filtered },
        killing_part: FeFunction { coeffs: killing_part },
        coefficients: c,
    })
}

/// L2 norm of the projection of `u` onto the analytic Killing span,
/// measured with the analytic Gram matrix on Gamma.
pub fn analytic_killing_norm(system: &FeSystem, u: &FeFunction) -> f64 {
    let dim = system.killing_dim();
    if dim == 0 {
        return 0.0;
    }
    let b: Vec<f64> = system.k_gram.iter().map(|row| dot(row, &u.coeffs)).collect();
    match dense::solve(&system.k_gram_analytic, &b) {
        Ok(c) => dot(&b, &c).max(0.0).sqrt(),
        Err(_) => 0.0,
    }
}

/// Remove the Mv-orthogonal projection onto the selected discrete
/// eigenfunctions: U - sum (U^T Mv U_i) U_i.
pub fn project_discrete_killing(
    system: &FeSystem,
    eigs: &EigenSet,
    selected: &[usize],
    u: &FeFunction,
) -> FeFunction {
    let mu = system.mv.matvec(&u.coeffs);
    let mut out = u.coeffs.clone();
    for &i in selected {
        let c = dot(&mu, &eigs.eigenvectors[i].coeffs);
        axpy(-c, &eigs.eigenvectors[i].coeffs, &mut out);
    }
    FeFunction { coeffs: out }
}

/// Certify A + J + Mv positive definite via the inertia of an unregularized
/// factorization.
pub fn check_coercivity(system: &FeSystem) -> Result<()> {
    let nv = system.n_velocity();
    let mut t = Triplets::new(nv, nv);
    for m in [&system.a, &system.j, &system.mv] {
        for j in 0..m.n_cols {
            for p in m.col_ptr[j]..m.col_ptr[j + 1] {
                t.push(m.row_idx[p], j, m.vals[p]);
            }
        }
    }
    let f = crate::sparse::LdltFactor::factor(&t.to_csc(), &[])?;
    let (pos, neg) = f.inertia();
    if neg > 0 {
        return Err(Error::SingularSystem(format!(
            "A + J + Mv has {neg} negative pivots of {nv}; rho too small"
        )));
    }
    debug_assert_eq!(pos, nv);
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn symmetrize(m: &mut dense::DMat) {
    let n = m.len();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
}
