use surface_stokes::assembly::{assemble, AssemblyOptions};
use surface_stokes::experiments::measure_errors;
use surface_stokes::geometry::SurfaceGeometry;
use surface_stokes::mesh::TriSurfaceMesh;
use surface_stokes::solver::*;

fn main() {
    let geom = SurfaceGeometry::unit_sphere();
    let mesh = TriSurfaceMesh::icosphere(&geom, 3).unwrap();
    let sys = assemble(&mesh, &geom, &AssemblyOptions::default()).unwrap();
    let h = sys.h();
    let sol = solve_stokes(&sys, h * h).unwrap();
    let raw = measure_errors(&mesh, &geom, &sys.dofmap, &sol.velocity).unwrap();
    println!("raw:      l2={:.4e} energy={:.4e}", raw.l2, raw.energy);
    println!("pk_norm(raw) = {:.4e}", analytic_killing_norm(&sys, &sol.velocity));
    let p = project_analytic_killing(&sys, &sol.velocity).unwrap();
    println!("killing coefficients: {:?}", p.coefficients);
    let filt = measure_errors(&mesh, &geom, &sys.dofmap, &p.filtered).unwrap();
    println!("manual:   l2={:.4e} energy={:.4e}", filt.l2, filt.energy);
    println!("pk_norm(filtered) = {:.4e}", analytic_killing_norm(&sys, &p.filtered));
    let eigs = solve_eigen(&sys, 3, 42).unwrap();
    let kd = project_discrete_killing(&sys, &eigs, &[0,1,2], &sol.velocity);
    let kde = measure_errors(&mesh, &geom, &sys.dofmap, &kd).unwrap();
    println!("known3:   l2={:.4e} energy={:.4e}", kde.l2, kde.energy);
    // mode weights of the raw solution
    for i in 0..3 {
        let w = sys.mv_inner(&sol.velocity.coeffs, &eigs.eigenvectors[i].coeffs);
        println!("  (U, U_{i})_Mv = {:.4e}   Lambda_{i} = {:.4e}", w, eigs.eigenvalues[i]);
    }
    // and of the exact interpolant for comparison
    let k0 = &sys.k_interp[0];
    println!("  |k_interp| Mv norm = {:.4e}", sys.mv_norm(&k0.coeffs));
}
