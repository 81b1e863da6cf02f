//! Analytic geometry of the ellipsoid family x^2 + y^2 + z^2/c^2 = 1.
//!
//! Everything the discretization needs from the continuous surface lives
//! here: closest-point projection, signed distance, normal, Weingarten map,
//! surface Piola transforms, the manufactured Stokes solution, and the
//! analytic Killing basis.
//!
//! All pointwise quantities are implemented generically over [`Scalar`] so
//! that the same code path yields exact directional derivatives when driven
//! with dual numbers. The manufactured forcing uses two nested dual layers;
//! no derivative in this module is hand-expanded or finite-differenced.

use crate::dual::{dot3, scale3, seed, sub3, Dual, Scalar};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3};

const NEWTON_MAX_ITER: usize = 50;

/// The ellipsoid x^2 + y^2 + z^2/c^2 = 1; c = 1 is the unit sphere.
#[derive(Clone, Copy, Debug)]
pub struct SurfaceGeometry {
    c: f64,
}

/// Pointwise geometric data at a query point near the surface.
///
/// `h` is the Weingarten map Hess d evaluated at the query point itself;
/// `shape_at_p` is the shape operator at the closest point, whose nonzero
/// eigenvalues are `kappa`.
#[derive(Clone, Copy, Debug)]
pub struct GeometryEval {
    pub point_on_gamma: Vec3,
    pub d: f64,
    pub nu: Vec3,
    pub pi: Mat3,
    pub h: Mat3,
    pub shape_at_p: Mat3,
    pub kappa: (f64, f64),
    /// det(I + d * shape_at_p) = 1 / ((1 - d k1(x))(1 - d k2(x))).
    pub(crate) det_a: f64,
}

/// Same data in scalar-generic form, used to differentiate pullbacks.
pub(crate) struct GeomEvalS<S> {
    pub point_on_gamma: [S; 3],
    pub d: S,
    pub nu: [S; 3],
    pub pi: [[S; 3]; 3],
    pub shape_at_p: [[S; 3]; 3],
    /// I + d * shape_at_p, equal to (I - d H(x))^{-1}.
    pub a: [[S; 3]; 3],
    pub a_inv: [[S; 3]; 3],
    pub det_a: S,
}

// Scalar-generic 3x3 helpers, local to the geometry formulas.

fn m3_vec<S: Scalar>(m: &[[S; 3]; 3], v: [S; 3]) -> [S; 3] {
    [dot3(m[0], v), dot3(m[1], v), dot3(m[2], v)]
}

fn m3_mul<S: Scalar>(a: &[[S; 3]; 3], b: &[[S; 3]; 3]) -> [[S; 3]; 3] {
    let mut c = [[S::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

fn m3_det<S: Scalar>(m: &[[S; 3]; 3]) -> S {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse via the adjugate; fine for the near-identity matrices used here.
fn m3_inv<S: Scalar>(m: &[[S; 3]; 3], det: S) -> [[S; 3]; 3] {
    let inv_det = S::one() / det;
    let mut adj = [[S::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            // transpose of the cofactor matrix
            adj[j][i] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) * inv_det;
        }
    }
    adj
}

fn m3_identity<S: Scalar>() -> [[S; 3]; 3] {
    let mut m = [[S::zero(); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = S::one();
    }
    m
}

fn projector<S: Scalar>(nu: [S; 3]) -> [[S; 3]; 3] {
    let mut pi = m3_identity::<S>();
    for i in 0..3 {
        for j in 0..3 {
            pi[i][j] = pi[i][j] - nu[i] * nu[j];
        }
    }
    pi
}

impl SurfaceGeometry {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidSurface(c));
        }
        Ok(SurfaceGeometry { c })
    }

    pub fn unit_sphere() -> Self {
        SurfaceGeometry { c: 1.0 }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn is_sphere(&self) -> bool {
        self.c == 1.0
    }

    /// Level-set function phi(x) = x^2 + y^2 + z^2/c^2 - 1.
    pub fn level_set(&self, x: Vec3) -> f64 {
        self.level_set_s(x)
    }

    pub(crate) fn level_set_s<S: Scalar>(&self, x: [S; 3]) -> S {
        let ic2 = S::from_f64(1.0 / (self.c * self.c));
        x[0] * x[0] + x[1] * x[1] + x[2] * x[2] * ic2 - S::one()
    }

    /// Closest-point projection onto the surface.
    pub(crate) fn project_s<S: Scalar>(&self, x: [S; 3]) -> Result<[S; 3]> {
        if self.is_sphere() {
            let r = dot3(x, x).sqrt();
            if r.value() < 1e-8 {
                return Err(Error::OutsideNeighborhood);
            }
            return Ok(scale3(S::one() / r, x));
        }
        // Newton on the Lagrange multiplier t of the point-to-ellipsoid
        // projection: y_i = x_i a_i^2 / (a_i^2 + t) with sum y_i^2/a_i^2 = 1.
        let a2 = [1.0, 1.0, self.c * self.c];
        let a2s: [S; 3] = [S::one(), S::one(), S::from_f64(a2[2])];
        let t_min = -0.9 * a2.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut t = S::zero();
        let mut settled = 0usize;
        for _ in 0..NEWTON_MAX_ITER {
            let mut g = -S::one();
            let mut dg = S::zero();
            for i in 0..3 {
                let den = a2s[i] + t;
                let r = x[i] * x[i] * a2s[i] / (den * den);
                g = g + r;
                dg = dg - S::from_f64(2.0) * r / den;
            }
            let step = g / dg;
            t = t - step;
            if t.value() < t_min {
                return Err(Error::OutsideNeighborhood);
            }
            if step.value().abs() < 1e-14 * (1.0 + t.value().abs()) {
                // a couple of extra sweeps settle the derivative parts
                settled += 1;
                if settled >= 3 {
                    let y = [
                        x[0] * a2s[0] / (a2s[0] + t),
                        x[1] * a2s[1] / (a2s[1] + t),
                        x[2] * a2s[2] / (a2s[2] + t),
                    ];
                    return Ok(y);
                }
            }
        }
        Err(Error::ClosestPointNoConvergence(NEWTON_MAX_ITER))
    }

    pub(crate) fn eval_s<S: Scalar>(&self, x: [S; 3]) -> Result<GeomEvalS<S>> {
        let p = self.project_s(x)?;
        // grad phi at P and the unit normal; nu is constant along normals.
        let ic2 = S::from_f64(1.0 / (self.c * self.c));
        let grad = [
            S::from_f64(2.0) * p[0],
            S::from_f64(2.0) * p[1],
            S::from_f64(2.0) * p[2] * ic2,
        ];
        let gn = dot3(grad, grad).sqrt();
        let nu = scale3(S::one() / gn, grad);
        let d = dot3(sub3(x, p), nu);
        let pi = projector(nu);
        // Shape operator at P: Pi Hess(phi) Pi / |grad phi|, Hess constant.
        let hess_diag = [S::from_f64(2.0), S::from_f64(2.0), S::from_f64(2.0) * ic2];
        let mut hp = [[S::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                hp[i][j] = pi[i][j] * hess_diag[j];
            }
        }
        let mut shape = m3_mul(&hp, &pi);
        let inv_gn = S::one() / gn;
        for row in shape.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * inv_gn;
            }
        }
        // A = I + d * shape equals (I - d H(x))^{-1}; H(x) = shape * A^{-1}.
        let mut a = m3_identity::<S>();
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = a[i][j] + d * shape[i][j];
            }
        }
        let det_a = m3_det(&a);
        if det_a.value() < 0.1 {
            return Err(Error::OutsideNeighborhood);
        }
        let a_inv = m3_inv(&a, det_a);
        Ok(GeomEvalS {
            point_on_gamma: p,
            d,
            nu,
            pi,
            shape_at_p: shape,
            a,
            a_inv,
            det_a,
        })
    }

    /// Closest point, signed distance, normal, projector and curvature data.
    ///
    /// The query must lie in the tubular neighborhood where the projection is
    /// unique; only points on or near the discrete surface (plus a handful of
    /// well-separated test points) are ever passed in.
    pub fn closest_point(&self, x: Vec3) -> Result<GeometryEval> {
        let ev = self.eval_s::<f64>(x)?;
        debug_assert!(self.level_set(ev.point_on_gamma).abs() <= 1e-12);
        let h = m3_mul(&ev.shape_at_p, &ev.a_inv);
        // Principal curvatures at P from the invariants of the shape operator
        // (eigenvalues k1, k2 plus 0 along nu).
        let tr = linalg::trace(&ev.shape_at_p);
        let tr2 = linalg::frob_dot(&ev.shape_at_p, &ev.shape_at_p);
        let det2 = 0.5 * (tr * tr - tr2);
        let disc = (tr * tr - 4.0 * det2).max(0.0).sqrt();
        let kappa = (0.5 * (tr - disc), 0.5 * (tr + disc));
        Ok(GeometryEval {
            point_on_gamma: ev.point_on_gamma,
            d: ev.d,
            nu: ev.nu,
            pi: ev.pi,
            h,
            shape_at_p: ev.shape_at_p,
            kappa,
            det_a: ev.det_a,
        })
    }

    /// Area ratio mu relating the measures of Gamma and gamma:
    /// mu = (nu . nu_Gamma) (1 - d k1(x)) (1 - d k2(x)) with the curvatures
    /// evaluated at the query point.
    pub fn area_ratio(&self, eval: &GeometryEval, nu_face: Vec3) -> Result<f64> {
        let t = linalg::dot(eval.nu, nu_face);
        if t <= 0.0 {
            return Err(Error::TransversalityViolation(t));
        }
        Ok(t / eval.det_a)
    }

    /// Piola lift of a face-tangent vector to a gamma-tangent vector at P(x):
    /// q = mu^{-1} (Pi - d H) q_bar.
    pub fn piola_lift(&self, eval: &GeometryEval, nu_face: Vec3, q_bar: Vec3) -> Result<Vec3> {
        let mu = self.area_ratio(eval, nu_face)?;
        // Pi - d H(x) = Pi (I + d shape)^{-1}
        let ai = {
            let a = mat3_a(eval);
            linalg_inverse(&a, eval.det_a)
        };
        let v = linalg::mat_vec(&ai, q_bar);
        Ok(linalg::scale(1.0 / mu, linalg::mat_vec(&eval.pi, v)))
    }

    /// Piola pullback of a gamma-tangent vector at P(x) to a face-tangent
    /// vector: q_bar = mu [I - nu nu_Gamma^T / (nu . nu_Gamma)] (I - d H)^{-1} q.
    pub fn piola_pullback(&self, eval: &GeometryEval, nu_face: Vec3, q: Vec3) -> Result<Vec3> {
        let mu = self.area_ratio(eval, nu_face)?;
        let a = mat3_a(eval);
        let v = linalg::mat_vec(&a, q);
        let t = linalg::dot(eval.nu, nu_face);
        let w = linalg::sub(v, linalg::scale(linalg::dot(nu_face, v) / t, eval.nu));
        Ok(linalg::scale(mu, w))
    }

    pub(crate) fn area_ratio_s<S: Scalar>(ev: &GeomEvalS<S>, nu_face: [S; 3]) -> S {
        dot3(ev.nu, nu_face) / ev.det_a
    }

    pub(crate) fn piola_pullback_s<S: Scalar>(
        ev: &GeomEvalS<S>,
        nu_face: [S; 3],
        q: [S; 3],
    ) -> [S; 3] {
        let mu = Self::area_ratio_s(ev, nu_face);
        let v = m3_vec(&ev.a, q);
        let t = dot3(ev.nu, nu_face);
        let w = sub3(v, scale3(dot3(nu_face, v) / t, ev.nu));
        scale3(mu, w)
    }

    /// The manufactured Stokes solution on this surface.
    ///
    /// The well-posed Stokes problem determines the velocity inside the
    /// orthogonal complement of the Killing fields, so the reference
    /// velocity is the raw manufactured expression minus its Killing
    /// component (the raw field has one: its moments against k1 and, on the
    /// sphere, k3 equal -|k|^2/2).
    pub fn exact_fields(&self) -> ExactSolution {
        let kb = self.killing_basis();
        let mut coeffs = Vec::with_capacity(kb.dim());
        let (zs, ws) = crate::quadrature::gauss_legendre(48);
        let nphi = 96;
        for k in 0..kb.dim() {
            let idx = kb.indices[k];
            let mut num = 0.0;
            let mut den = 0.0;
            // quadrature over the ellipsoid in (u = cos theta, phi) with the
            // exact area element; spectrally accurate for these smooth fields
            for (&z, &wz) in zs.iter().zip(&ws) {
                let r = (1.0 - z * z).sqrt();
                for j in 0..nphi {
                    let ph = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / nphi as f64;
                    let (cp, sp) = (ph.cos(), ph.sin());
                    let x = [r * cp, r * sp, self.c * z];
                    // dx/du x dx/dphi
                    let xu = [-z / r * cp, -z / r * sp, self.c];
                    let xp = [-r * sp, r * cp, 0.0];
                    let area = linalg::norm(linalg::cross(xu, xp));
                    let w = wz * area * 2.0 * std::f64::consts::PI / nphi as f64;
                    let u = field_ext::<f64>(self.c, FieldKind::ExactU, x);
                    let kv = field_ext::<f64>(self.c, FieldKind::Killing(idx), x);
                    num += w * linalg::dot(u, kv);
                    den += w * linalg::dot(kv, kv);
                }
            }
            coeffs.push((idx, num / den));
        }
        ExactSolution { c: self.c, killing_coeffs: coeffs }
    }

    /// Analytic Killing basis: three rotations for the sphere, the rotation
    /// about the z-axis otherwise.
    pub fn killing_basis(&self) -> KillingBasis {
        let indices = if self.is_sphere() { vec![0, 1, 2] } else { vec![0] };
        KillingBasis { c: self.c, indices }
    }
}

fn mat3_a(eval: &GeometryEval) -> Mat3 {
    let mut a = linalg::identity();
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] += eval.d * eval.shape_at_p[i][j];
        }
    }
    a
}

fn linalg_inverse(m: &Mat3, det: f64) -> Mat3 {
    m3_inv::<f64>(m, det)
}

/// Evaluates the Piola pullback of the exact velocity at `x` together with
/// its directional derivative along `dir`; used to measure broken gradient
/// errors on the discrete surface.
pub fn pullback_exact_velocity_jet(
    geom: &SurfaceGeometry,
    exact: &ExactSolution,
    x: Vec3,
    dir: Vec3,
    nu_face: Vec3,
) -> Result<(Vec3, Vec3)> {
    let xs = seed::<f64>(x, dir);
    let ev = geom.eval_s::<Dual<f64>>(xs)?;
    let u = exact.velocity_s(ev.point_on_gamma);
    let nf = [
        Dual::constant(nu_face[0]),
        Dual::constant(nu_face[1]),
        Dual::constant(nu_face[2]),
    ];
    let q = SurfaceGeometry::piola_pullback_s(&ev, nf, u);
    Ok(([q[0].re, q[1].re, q[2].re], [q[0].eps, q[1].eps, q[2].eps]))
}

// ---------------------------------------------------------------------------
// Manufactured solution
// ---------------------------------------------------------------------------

/// The reference solution built from u_raw = Pi (-z^2, x, y)^T and
/// p = x y^3 + z: the velocity is u = u_raw - P_K u_raw (the raw field is
/// not orthogonal to the Killing space, the exact solution is), and f, g are
/// derived from u_raw. Killing corrections carry no deformation and no
/// divergence, so f and g are unaffected by the orthogonalization. All
/// evaluations expect points on gamma; derivatives are exact (dual numbers
/// through the analytic expressions).
#[derive(Clone, Debug)]
pub struct ExactSolution {
    c: f64,
    /// (rotation index, L2 projection coefficient) of the raw velocity onto
    /// each analytic Killing field.
    killing_coeffs: Vec<(usize, f64)>,
}

/// Which analytic tangent field to evaluate/differentiate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FieldKind {
    ExactU,
    Killing(usize),
}

fn raw_field<S: Scalar>(kind: FieldKind, x: [S; 3]) -> [S; 3] {
    match kind {
        FieldKind::ExactU => [-(x[2] * x[2]), x[0], x[1]],
        FieldKind::Killing(0) => [x[1], -x[0], S::zero()],
        FieldKind::Killing(1) => [x[2], S::zero(), -x[0]],
        FieldKind::Killing(2) => [S::zero(), x[2], -x[1]],
        FieldKind::Killing(i) => panic!("no killing field with index {i}"),
    }
}

/// Analytic unit normal of the level set at x (valid near gamma).
fn nu_analytic<S: Scalar>(c: f64, x: [S; 3]) -> [S; 3] {
    let ic2 = S::from_f64(1.0 / (c * c));
    let g = [x[0], x[1], x[2] * ic2];
    let n = dot3(g, g).sqrt();
    scale3(S::one() / n, g)
}

/// Tangentially projected analytic field: an extension of the surface field
/// whose restriction to gamma is exact.
fn field_ext<S: Scalar>(c: f64, kind: FieldKind, x: [S; 3]) -> [S; 3] {
    let w = raw_field(kind, x);
    let nu = nu_analytic(c, x);
    sub3(w, scale3(dot3(nu, w), nu))
}

/// Full Jacobian of the extended field via one dual layer.
fn field_jacobian<S: Scalar>(c: f64, kind: FieldKind, x: [S; 3]) -> [[S; 3]; 3] {
    let mut jac = [[S::zero(); 3]; 3];
    for k in 0..3 {
        let mut dir = [0.0; 3];
        dir[k] = 1.0;
        let v = field_ext::<Dual<S>>(c, kind, seed(x, dir));
        for i in 0..3 {
            jac[i][k] = v[i].eps;
        }
    }
    jac
}

/// Extension of Def_gamma applied to the field: sym(Pi J Pi) with the
/// analytic projector; restricted to gamma this is the surface deformation.
fn def_ext<S: Scalar>(c: f64, kind: FieldKind, x: [S; 3]) -> [[S; 3]; 3] {
    let jac = field_jacobian(c, kind, x);
    let pi = projector(nu_analytic(c, x));
    let g = m3_mul(&pi, &m3_mul(&jac, &pi));
    let mut def = [[S::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            def[i][j] = (g[i][j] + g[j][i]) * S::from_f64(0.5);
        }
    }
    def
}

fn tangential_trace<S: Scalar>(pi: &[[S; 3]; 3], jac: &[[S; 3]; 3]) -> S {
    let g = m3_mul(pi, &m3_mul(jac, pi));
    g[0][0] + g[1][1] + g[2][2]
}

impl ExactSolution {
    /// The raw manufactured field Pi(x) (-z^2, x, y)^T for x on gamma.
    pub fn velocity_raw(&self, x: Vec3) -> Vec3 {
        field_ext(self.c, FieldKind::ExactU, x)
    }

    /// The reference velocity u = u_raw - P_K u_raw.
    pub fn velocity(&self, x: Vec3) -> Vec3 {
        self.velocity_s(x)
    }

    pub(crate) fn velocity_s<S: Scalar>(&self, x: [S; 3]) -> [S; 3] {
        let mut u = field_ext(self.c, FieldKind::ExactU, x);
        for &(idx, coeff) in &self.killing_coeffs {
            let k = field_ext(self.c, FieldKind::Killing(idx), x);
            u = sub3(u, scale3(S::from_f64(coeff), k));
        }
        u
    }

    /// p(x) = x y^3 + z; defined up to a constant, normalized at quadrature
    /// time by whoever compares pressures.
    pub fn pressure(&self, x: Vec3) -> f64 {
        x[0] * x[1] * x[1] * x[1] + x[2]
    }

    /// g = div_gamma u at x on gamma.
    pub fn div_data(&self, x: Vec3) -> f64 {
        let jac = field_jacobian::<f64>(self.c, FieldKind::ExactU, x);
        let pi = projector(nu_analytic(self.c, x));
        tangential_trace(&pi, &jac)
    }

    /// Surface gradient of the reference velocity at x on gamma.
    pub fn velocity_gradient(&self, x: Vec3) -> Mat3 {
        let mut jac = field_jacobian::<f64>(self.c, FieldKind::ExactU, x);
        for &(idx, coeff) in &self.killing_coeffs {
            let kj = field_jacobian::<f64>(self.c, FieldKind::Killing(idx), x);
            for r in 0..3 {
                for s in 0..3 {
                    jac[r][s] -= coeff * kj[r][s];
                }
            }
        }
        let pi = projector(nu_analytic(self.c, x));
        m3_mul(&pi, &m3_mul(&jac, &pi))
    }

    /// Surface deformation Def_gamma u at x on gamma.
    pub fn deformation(&self, x: Vec3) -> Mat3 {
        def_ext(self.c, FieldKind::ExactU, x)
    }

    /// Momentum forcing f = -2 Pi div_gamma Def_gamma u + (grad_gamma p)^T
    /// at x on gamma, exact to machine precision.
    pub fn forcing(&self, x: Vec3) -> Vec3 {
        let c = self.c;
        // Directional derivatives of the deformation extension.
        let mut ddef = [[[0.0; 3]; 3]; 3]; // ddef[k][i][j] = d(def_ij)/dx_k
        for (k, slot) in ddef.iter_mut().enumerate() {
            let mut dir = [0.0; 3];
            dir[k] = 1.0;
            let def = def_ext::<Dual<f64>>(c, FieldKind::ExactU, seed(x, dir));
            for i in 0..3 {
                for j in 0..3 {
                    slot[i][j] = def[i][j].eps;
                }
            }
        }
        let pi = projector(nu_analytic::<f64>(c, x));
        // Rowwise tangential divergence of the deformation tensor.
        let mut div_def = [0.0; 3];
        for i in 0..3 {
            let mut row_jac = [[0.0; 3]; 3];
            for j in 0..3 {
                for k in 0..3 {
                    row_jac[j][k] = ddef[k][i][j];
                }
            }
            div_def[i] = tangential_trace(&pi, &row_jac);
        }
        // Tangential pressure gradient.
        let mut grad_p = [0.0; 3];
        for k in 0..3 {
            let mut dir = [0.0; 3];
            dir[k] = 1.0;
            let xs = seed::<f64>(x, dir);
            grad_p[k] = (xs[0] * xs[1] * xs[1] * xs[1] + xs[2]).eps;
        }
        let grad_p_t = linalg::mat_vec(&pi, grad_p);
        let f = linalg::sub(grad_p_t, linalg::scale(2.0, linalg::mat_vec(&pi, div_def)));
        f
    }
}

// ---------------------------------------------------------------------------
// Killing fields
// ---------------------------------------------------------------------------

/// Analytic Killing basis of the surface: k1 = (y,-x,0), and additionally
/// k2 = (z,0,-x), k3 = (0,z,-y) on the sphere.
#[derive(Clone, Debug)]
pub struct KillingBasis {
    c: f64,
    indices: Vec<usize>,
}

impl KillingBasis {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Evaluate basis field `i` at a point on gamma.
    pub fn eval(&self, i: usize, x: Vec3) -> Vec3 {
        field_ext(self.c, FieldKind::Killing(self.indices[i]), x)
    }

    /// Surface deformation of basis field `i`; vanishes identically.
    pub fn deformation(&self, i: usize, x: Vec3) -> Mat3 {
        def_ext(self.c, FieldKind::Killing(self.indices[i]), x)
    }
}

/// Tangentially projected rigid rotation i (0..3) about the coordinate axes;
/// Killing only where the surface symmetry allows, but a good low-mode
/// approximation on any ellipsoid of the family.
pub fn projected_rotation(c: f64, i: usize, x: Vec3) -> Vec3 {
    field_ext(c, FieldKind::Killing(i), x)
}
