use surface_stokes::experiments::*;
use surface_stokes::killing::FilterPolicy;
use surface_stokes::solver::EpsilonPolicy;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let c: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let alpha: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let filter = args.get(3).map(|s| s.as_str()).unwrap_or("manual");
    let lmax: u32 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(4);
    let f = match filter {
        "manual" => RunFilter::Policy(FilterPolicy::ManualAnalytic),
        "none" => RunFilter::Policy(FilterPolicy::None),
        "forcing" => RunFilter::Forcing,
        s if s.starts_with("auto") => RunFilter::Policy(FilterPolicy::Threshold(
            s.split(':').nth(1).unwrap().parse().unwrap(),
        )),
        _ => panic!(),
    };
    let config = RunConfig {
        c,
        level_min: 2,
        level_max: lmax,
        epsilon_policy: EpsilonPolicy::HPower(alpha),
        filter: f,
        forcing_mode: if filter == "forcing" { ForcingMode::AddKilling(1.0) } else { ForcingMode::Clean },
        ..Default::default()
    };
    let r = convergence_study(&config).unwrap();
    println!("{}", rows_to_csv(&r.rows));
    for d in &r.diagnostics {
        println!("L{} eps={:.3e} res={:.2e} unfiltered_l2={:?} pk_f_err={:?} sel={:?}",
            d.level, d.epsilon, d.solver_residual, d.unfiltered_l2, d.pk_f_error, d.filter.selected_modes);
    }
}
