//! Quadrature and sparse assembly of every form of the method.
//!
//! Everything is integrated over the discrete surface Gamma: the deformation
//! form A, the interior penalty form J, the velocity mass Mv, the divergence
//! form B, the loads (with f and g lifted through the closest-point map) and
//! the Gram data of the analytic Killing fields.

use crate::dense::DMat;
use crate::error::Result;
use crate::fem::{interpolate_bdm, DofMap, FaceElement, FeFunction, ReferenceBdm1};
use crate::geometry::SurfaceGeometry;
use crate::linalg::{self, Vec3};
use crate::mesh::{EdgeFrame, MeshMetrics, TriSurfaceMesh};
use crate::quadrature;
use crate::sparse::{CscMatrix, Triplets};

pub const DEFAULT_RHO: f64 = 10.0;
pub const EDGE_GAUSS_POINTS: usize = 4;

#[derive(Clone, Copy, Debug)]
pub struct AssemblyOptions {
    pub rho: f64,
    /// Strength of an extra Killing component kappa * k1 added to the
    /// forcing; zero for the clean manufactured problem.
    pub killing_forcing: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { rho: DEFAULT_RHO, killing_forcing: 0.0 }
    }
}

/// Assembled operators and data of one discretization level.
pub struct FeSystem {
    pub a: CscMatrix,
    pub j: CscMatrix,
    pub mv: CscMatrix,
    /// n_pressure x n_velocity, entries int q div v.
    pub b: CscMatrix,
    pub f_vec: Vec<f64>,
    pub g_vec: Vec<f64>,
    /// Rows int_Gamma (k_j o P) . v_i, one per analytic Killing field.
    pub k_gram: Vec<Vec<f64>>,
    /// Gram matrix of the analytic Killing fields on Gamma.
    pub k_gram_analytic: DMat,
    /// BDM interpolants of the pulled-back analytic Killing fields.
    pub k_interp: Vec<FeFunction>,
    /// Interpolants of all three projected rotations, used to seed the
    /// eigensolver.
    pub rotation_seeds: Vec<FeFunction>,
    pub dofmap: DofMap,
    pub metrics: MeshMetrics,
    pub face_areas: Vec<f64>,
    pub rho: f64,
}

impl FeSystem {
    pub fn n_velocity(&self) -> usize {
        self.dofmap.n_velocity
    }

    pub fn n_pressure(&self) -> usize {
        self.dofmap.n_pressure
    }

    pub fn h(&self) -> f64 {
        self.metrics.h
    }

    pub fn killing_dim(&self) -> usize {
        self.k_gram.len()
    }

    /// Surface area of Gamma.
    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    /// Quadratic form of A + J + eps Mv.
    pub fn energy_quad_form(&self, epsilon: f64, x: &[f64]) -> f64 {
        self.a.quad_form(x, x) + self.j.quad_form(x, x) + epsilon * self.mv.quad_form(x, x)
    }

    /// y = (A + J + eps Mv) x without forming the sum.
    pub fn epsilon_apply(&self, epsilon: f64, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.a.matvec_add(1.0, x, &mut y);
        self.j.matvec_add(1.0, x, &mut y);
        self.mv.matvec_add(epsilon, x, &mut y);
        y
    }

    pub fn mv_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mv.quad_form(x, y)
    }

    pub fn mv_norm(&self, x: &[f64]) -> f64 {
        self.mv.quad_form(x, x).max(0.0).sqrt()
    }

    /// Write A, J, Mv and B in MatrixMarket coordinate format.
    pub fn dump_matrix_market(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, m) in [("a", &self.a), ("j", &self.j), ("mv", &self.mv), ("b", &self.b)] {
            std::fs::write(dir.join(format!("{name}.mtx")), m.to_matrix_market())?;
        }
        Ok(())
    }
}

fn thread_count() -> usize {
    std::env::var("SURFACE_STOKES_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
        .min(64)
}

struct FacePartial {
    a: Triplets,
    mv: Triplets,
    b: Triplets,
    f_vec: Vec<f64>,
    g_vec: Vec<f64>,
    k_gram: Vec<Vec<f64>>,
    k_analytic: DMat,
}

pub fn assemble(
    mesh: &TriSurfaceMesh,
    geom: &SurfaceGeometry,
    opts: &AssemblyOptions,
) -> Result<FeSystem> {
    let ref_el = ReferenceBdm1::new();
    let dofmap = DofMap::new(mesh);
    let metrics = mesh.metrics(geom)?;
    let killing = geom.killing_basis();
    let dim_k = killing.dim();
    let nv = dofmap.n_velocity;
    let np = dofmap.n_pressure;
    let n_faces = mesh.faces.len();

    let n_threads = thread_count().min(n_faces.max(1));
    let chunk = n_faces.div_ceil(n_threads);
    let ranges: Vec<std::ops::Range<usize>> = (0..n_threads)
        .map(|t| (t * chunk)..((t + 1) * chunk).min(n_faces))
        .filter(|r| !r.is_empty())
        .collect();

    let partials: Vec<Result<FacePartial>> = std::thread::scope(|s| {
        let handles: Vec<_> = ranges
            .iter()
            .map(|r| {
                let r = r.clone();
                let ref_el = &ref_el;
                let dofmap = &dofmap;
                let killing = &killing;
                s.spawn(move || {
                    assemble_face_range(mesh, geom, ref_el, dofmap, killing, opts, r, nv, np)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("assembly thread panicked")).collect()
    });

    let mut a_trip = Triplets::new(nv, nv);
    let mut mv_trip = Triplets::new(nv, nv);
    let mut b_trip = Triplets::new(np, nv);
    let mut f_vec = vec![0.0; nv];
    let mut g_vec = vec![0.0; np];
    let mut k_gram = vec![vec![0.0; nv]; dim_k];
    let mut k_analytic = crate::dense::zeros(dim_k, dim_k);
    for p in partials {
        let p = p?;
        a_trip.rows.extend(p.a.rows);
        a_trip.cols.extend(p.a.cols);
        a_trip.vals.extend(p.a.vals);
        mv_trip.rows.extend(p.mv.rows);
        mv_trip.cols.extend(p.mv.cols);
        mv_trip.vals.extend(p.mv.vals);
        b_trip.rows.extend(p.b.rows);
        b_trip.cols.extend(p.b.cols);
        b_trip.vals.extend(p.b.vals);
        for (acc, v) in f_vec.iter_mut().zip(&p.f_vec) {
            *acc += v;
        }
        for (acc, v) in g_vec.iter_mut().zip(&p.g_vec) {
            *acc += v;
        }
        for (row, prow) in k_gram.iter_mut().zip(&p.k_gram) {
            for (acc, v) in row.iter_mut().zip(prow) {
                *acc += v;
            }
        }
        for (row, prow) in k_analytic.iter_mut().zip(&p.k_analytic) {
            for (acc, v) in row.iter_mut().zip(prow) {
                *acc += v;
            }
        }
    }

    let frames = mesh.edge_frames(EDGE_GAUSS_POINTS);
    let j_trip = assemble_penalty(mesh, &ref_el, &dofmap, &frames, opts.rho, metrics.h);

    // Interpolants of the pulled-back Killing fields, for the projection.
    let mut k_interp = Vec::with_capacity(dim_k);
    for kf in 0..dim_k {
        let field = |face: usize, x: Vec3| -> Vec3 {
            let ev = geom.closest_point(x).expect("edge quadrature point near surface");
            let k = killing.eval(kf, ev.point_on_gamma);
            geom.piola_pullback(&ev, mesh.face_normals[face], k)
                .expect("transversal face")
        };
        k_interp.push(interpolate_bdm(&dofmap, &frames, field));
    }
    let mut rotation_seeds = Vec::with_capacity(3);
    for r in 0..3 {
        let field = |face: usize, x: Vec3| -> Vec3 {
            let ev = geom.closest_point(x).expect("edge quadrature point near surface");
            let k = crate::geometry::projected_rotation(geom.c(), r, ev.point_on_gamma);
            geom.piola_pullback(&ev, mesh.face_normals[face], k)
                .expect("transversal face")
        };
        rotation_seeds.push(interpolate_bdm(&dofmap, &frames, field));
    }

    Ok(FeSystem {
        a: a_trip.to_csc(),
        j: j_trip.to_csc(),
        mv: mv_trip.to_csc(),
        b: b_trip.to_csc(),
        f_vec,
        g_vec,
        k_gram,
        k_gram_analytic: k_analytic,
        k_interp,
        rotation_seeds,
        dofmap,
        metrics,
        face_areas: mesh.face_areas.clone(),
        rho: opts.rho,
    })
}

#[allow(clippy::too_many_arguments)]
fn assemble_face_range(
    mesh: &TriSurfaceMesh,
    geom: &SurfaceGeometry,
    ref_el: &ReferenceBdm1,
    dofmap: &DofMap,
    killing: &crate::geometry::KillingBasis,
    opts: &AssemblyOptions,
    range: std::ops::Range<usize>,
    nv: usize,
    np: usize,
) -> Result<FacePartial> {
    let (pts, wts) = quadrature::face_rule();
    let exact = geom.exact_fields();
    let dim_k = killing.dim();
    let mut out = FacePartial {
        a: Triplets::new(nv, nv),
        mv: Triplets::new(nv, nv),
        b: Triplets::new(np, nv),
        f_vec: vec![0.0; nv],
        g_vec: vec![0.0; np],
        k_gram: vec![vec![0.0; nv]; dim_k],
        k_analytic: crate::dense::zeros(dim_k, dim_k),
    };
    for f in range {
        let el = FaceElement::new(mesh, ref_el, f);
        let area = mesh.face_areas[f];
        let gdofs = dofmap.face_dofs[f];

        // deformation tensors are constant per basis function
        let defs: Vec<[[f64; 3]; 3]> = (0..6).map(|i| linalg::sym_part(el.grad(i))).collect();
        for i in 0..6 {
            let (gi, si) = gdofs[i];
            for j in 0..6 {
                let (gj, sj) = gdofs[j];
                let v = 2.0 * area * linalg::frob_dot(&defs[i], &defs[j]);
                out.a.push(gi, gj, si * sj * v);
            }
            out.b.push(f, gi, si * area * el.div(i));
        }

        // quadrature loop: mass, loads, killing rows
        let mut mv_loc = [[0.0f64; 6]; 6];
        for (bary, w) in pts.iter().zip(&wts) {
            let basis = el.basis_at(ref_el, *bary);
            let x = crate::fem::barycentric_to_world(mesh, f, *bary);
            let ev = geom.closest_point(x)?;
            let p = ev.point_on_gamma;
            let mut fval = exact.forcing(p);
            if opts.killing_forcing != 0.0 {
                let k1 = killing.eval(0, p);
                fval = linalg::add(fval, linalg::scale(opts.killing_forcing, k1));
            }
            let gval = exact.div_data(p);
            let kvals: Vec<Vec3> = (0..dim_k).map(|kf| killing.eval(kf, p)).collect();
            let wa = w * area;
            for i in 0..6 {
                for j in i..6 {
                    mv_loc[i][j] += wa * linalg::dot(basis[i].value, basis[j].value);
                }
                let (gi, si) = gdofs[i];
                out.f_vec[gi] += si * wa * linalg::dot(fval, basis[i].value);
                for (kf, kv) in kvals.iter().enumerate() {
                    out.k_gram[kf][gi] += si * wa * linalg::dot(*kv, basis[i].value);
                }
            }
            out.g_vec[f] += wa * gval;
            for (ki, kv) in kvals.iter().enumerate() {
                for (kj, kw) in kvals.iter().enumerate() {
                    out.k_analytic[ki][kj] += wa * linalg::dot(*kv, *kw);
                }
            }
        }
        for i in 0..6 {
            let (gi, si) = gdofs[i];
            for j in i..6 {
                let (gj, sj) = gdofs[j];
                out.mv.push(gi, gj, si * sj * mv_loc[i][j]);
                if j > i {
                    out.mv.push(gj, gi, si * sj * mv_loc[i][j]);
                }
            }
        }
    }
    Ok(out)
}

/// The interior penalty form
/// j(W,V) = 2 [ -int {Def W . n}.[V] - int {Def V . n}.[W] + rho/h int [W].[V] ].
///
/// Jumps are compared in the plane of the mean face normal. Face-tangent
/// fields matching the same smooth surface field necessarily differ by
/// O(h) in the normal direction (the face planes tilt by the dihedral
/// angle), so penalizing raw 3-vector differences puts an O(1) energy floor
/// under rigid rotations and destroys the near-zero eigenvalues the Killing
/// filter relies on. Projecting the jump removes exactly that forced
/// component; for coplanar faces nothing changes.
fn assemble_penalty(
    mesh: &TriSurfaceMesh,
    ref_el: &ReferenceBdm1,
    dofmap: &DofMap,
    frames: &[EdgeFrame],
    rho: f64,
    h: f64,
) -> Triplets {
    let nv = dofmap.n_velocity;
    let mut trip = Triplets::new(nv, nv);
    for fr in frames {
        let el_p = FaceElement::new(mesh, ref_el, fr.face_plus);
        let el_m = FaceElement::new(mesh, ref_el, fr.face_minus);
        // slots 0..6 on the plus side, 6..12 on the minus side
        let slot_face = |s: usize| if s < 6 { fr.face_plus } else { fr.face_minus };
        let n_mean = linalg::normalize(linalg::add(
            mesh.face_normals[fr.face_plus],
            mesh.face_normals[fr.face_minus],
        ));
        // {Def phi . n} contribution of each slot, constant along the edge
        let mut davg = [[0.0f64; 3]; 12];
        for s in 0..12 {
            let (el, n, sgn) = if s < 6 {
                (&el_p, fr.conormal_plus, 0.5)
            } else {
                (&el_m, fr.conormal_minus, -0.5)
            };
            let def = linalg::sym_part(el.grad(s % 6));
            davg[s] = linalg::scale(sgn, linalg::mat_vec(&def, n));
        }
        let nq = fr.quad_points.len();
        // projected jump values [phi] of each slot at the quadrature points
        let mut jump = vec![[[0.0f64; 3]; 12]; nq];
        for (q, &(x, _)) in fr.quad_points.iter().enumerate() {
            let rc_p = el_p.ref_coords(x);
            let rc_m = el_m.ref_coords(x);
            for s in 0..12 {
                let v = if s < 6 {
                    el_p.value(ref_el, s, rc_p)
                } else {
                    linalg::scale(-1.0, el_m.value(ref_el, s % 6, rc_m))
                };
                jump[q][s] = linalg::sub(v, linalg::scale(linalg::dot(v, n_mean), n_mean));
            }
        }
        let mut loc = [[0.0f64; 12]; 12];
        for (q, &(_, w)) in fr.quad_points.iter().enumerate() {
            for a in 0..12 {
                for b in 0..12 {
                    loc[a][b] += 2.0
                        * w
                        * (-linalg::dot(davg[a], jump[q][b]) - linalg::dot(davg[b], jump[q][a])
                            + rho / h * linalg::dot(jump[q][a], jump[q][b]));
                }
            }
        }
        for a in 0..12 {
            let (ga, sa) = dofmap.face_dofs[slot_face(a)][a % 6];
            for b in 0..12 {
                let (gb, sb) = dofmap.face_dofs[slot_face(b)][b % 6];
                trip.push(ga, gb, sa * sb * loc[a][b]);
            }
        }
    }
    trip
}

/// Broken H1 seminorm matrix: sum_T int grad v : grad w.
pub fn assemble_h1_seminorm(mesh: &TriSurfaceMesh, dofmap: &DofMap) -> CscMatrix {
    let ref_el = ReferenceBdm1::new();
    let nv = dofmap.n_velocity;
    let mut trip = Triplets::new(nv, nv);
    for f in 0..mesh.faces.len() {
        let el = FaceElement::new(mesh, &ref_el, f);
        let area = mesh.face_areas[f];
        for i in 0..6 {
            let (gi, si) = dofmap.face_dofs[f][i];
            for j in 0..6 {
                let (gj, sj) = dofmap.face_dofs[f][j];
                trip.push(gi, gj, si * sj * area * linalg::frob_dot(el.grad(i), el.grad(j)));
            }
        }
    }
    trip.to_csc()
}

/// Jump mass matrix: sum_e int [v].[w] (no rho/h factor), with the same
/// projected jump as the penalty form.
pub fn assemble_jump_mass(mesh: &TriSurfaceMesh, dofmap: &DofMap) -> CscMatrix {
    let ref_el = ReferenceBdm1::new();
    let frames = mesh.edge_frames(EDGE_GAUSS_POINTS);
    let nv = dofmap.n_velocity;
    let mut trip = Triplets::new(nv, nv);
    for fr in &frames {
        let el_p = FaceElement::new(mesh, &ref_el, fr.face_plus);
        let el_m = FaceElement::new(mesh, &ref_el, fr.face_minus);
        let slot_face = |s: usize| if s < 6 { fr.face_plus } else { fr.face_minus };
        let n_mean = linalg::normalize(linalg::add(
            mesh.face_normals[fr.face_plus],
            mesh.face_normals[fr.face_minus],
        ));
        for &(x, w) in &fr.quad_points {
            let rc_p = el_p.ref_coords(x);
            let rc_m = el_m.ref_coords(x);
            let jump: Vec<Vec3> = (0..12)
                .map(|s| {
                    let v = if s < 6 {
                        el_p.value(&ref_el, s, rc_p)
                    } else {
                        linalg::scale(-1.0, el_m.value(&ref_el, s % 6, rc_m))
                    };
                    linalg::sub(v, linalg::scale(linalg::dot(v, n_mean), n_mean))
                })
                .collect();
            for a in 0..12 {
                let (ga, sa) = dofmap.face_dofs[slot_face(a)][a % 6];
                for b in 0..12 {
                    let (gb, sb) = dofmap.face_dofs[slot_face(b)][b % 6];
                    trip.push(ga, gb, sa * sb * w * linalg::dot(jump[a], jump[b]));
                }
            }
        }
    }
    trip.to_csc()
}
