use surface_stokes::experiments::*;
use surface_stokes::solver::EpsilonPolicy;

fn main() {
    let c: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.1);
    let lmax: u32 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(4);
    let alpha: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let config = RunConfig {
        c, level_min: 3, level_max: lmax,
        epsilon_policy: EpsilonPolicy::HPower(2.0),
        ..Default::default()
    };
    let results = killing_filter_study(&config, alpha).unwrap();
    for r in &results {
        println!("== {}", r.label);
        for (row, d) in r.rows.iter().zip(&r.diagnostics) {
            println!("L{} h={:.3e} l2={:.4e} sel={:?} lam={:.4e},{:.4e},{:.4e} thr={:?}",
                row.level, row.h, row.l2, row.selected, row.lam[0], row.lam[1], row.lam[2],
                d.filter.threshold);
        }
    }
}
