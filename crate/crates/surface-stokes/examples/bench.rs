use std::time::Instant;
use surface_stokes::assembly::{assemble, AssemblyOptions};
use surface_stokes::geometry::SurfaceGeometry;
use surface_stokes::mesh::TriSurfaceMesh;
use surface_stokes::solver::*;

fn main() {
    let level: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let geom = SurfaceGeometry::unit_sphere();
    let t0 = Instant::now();
    let mesh = TriSurfaceMesh::icosphere(&geom, level).unwrap();
    println!("mesh L{level}: F={} E={} ({:?})", mesh.faces.len(), mesh.edges.len(), t0.elapsed());
    let t0 = Instant::now();
    let sys = assemble(&mesh, &geom, &AssemblyOptions::default()).unwrap();
    println!("assemble: nnz(A)={} nnz(J)={} ({:?})", sys.a.nnz(), sys.j.nnz(), t0.elapsed());
    let t0 = Instant::now();
    let h = sys.h();
    let solver = SaddleSolver::new(&sys, h * h).unwrap();
    println!("factor: nnzL={} ({:?})", solver.factor_nnz(), t0.elapsed());
    let t0 = Instant::now();
    let sol = solve_stokes_with(&solver, &sys.f_vec, &sys.g_vec).unwrap();
    println!("solve: residual={:.2e} ({:?})", sol.residual_norm, t0.elapsed());
    let t0 = Instant::now();
    let eigs = solve_eigen(&sys, 3, 42).unwrap();
    println!("eigen: {:?} res={:.2e} ({:?})", eigs.eigenvalues, eigs.residuals[2], t0.elapsed());
}
