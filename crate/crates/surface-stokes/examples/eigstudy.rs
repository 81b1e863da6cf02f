use surface_stokes::experiments::*;
use surface_stokes::solver::EpsilonPolicy;

fn main() {
    let c: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let lmin: u32 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let lmax: u32 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(4);
    let config = RunConfig {
        c, level_min: lmin, level_max: lmax,
        epsilon_policy: EpsilonPolicy::HPower(2.0),
        ..Default::default()
    };
    let s = eigen_study(&config).unwrap();
    for (i, lvl) in s.levels.iter().enumerate() {
        println!("L{lvl} h={:.4e} lam={:?}", s.h[i], s.eigenvalues[i]);
    }
    println!("extrapolated: {:?}", s.extrapolated);
}
