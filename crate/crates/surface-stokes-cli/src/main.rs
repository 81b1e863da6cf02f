use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use surface_stokes::experiments::{
    convergence_study, rows_to_csv, ForcingMode, RunConfig, RunFilter,
};
use surface_stokes::killing::FilterPolicy;
use surface_stokes::solver::EpsilonPolicy;

#[derive(Parser)]
#[command(
    name = "surface-stokes",
    about = "Divergence-conforming interior-penalty Stokes solver on closed surfaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study over a range of icosphere levels.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// z-semi-axis of the ellipsoid x^2 + y^2 + z^2/c^2 = 1 (1 = unit sphere)
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Inclusive level range a..b (level 0 is the icosahedron)
    #[arg(long, default_value = "2..4", value_parser = parse_levels)]
    levels: (u32, u32),
    /// Perturbation policy eps = h^alpha; one of 1, 1.5, 2
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Fixed epsilon overriding the h^alpha policy
    #[arg(long)]
    eps: Option<f64>,
    /// Interior penalty parameter
    #[arg(long, default_value_t = surface_stokes::assembly::DEFAULT_RHO)]
    rho: f64,
    /// Killing filter: none | manual | known:<d> | auto:<alpha> | forcing
    #[arg(long, default_value = "none", value_parser = parse_filter)]
    filter: RunFilter,
    /// Add kappa * k1 to the forcing
    #[arg(long = "add-killing", default_value_t = 0.0)]
    add_killing: f64,
    /// Output directory for report.csv, report.json and SVG plots
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write mesh_L<k>.off files
    #[arg(long, default_value_t = false)]
    dump_mesh: bool,
    /// Seed for the eigensolver block initialization
    #[arg(long, default_value_t = 0x5eed_cafe)]
    seed: u64,
}

fn parse_levels(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a..b, got {s}"))?;
    let lo: u32 = a.trim().parse().map_err(|e| format!("bad level {a}: {e}"))?;
    let hi: u32 = b
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|e| format!("bad level {b}: {e}"))?;
    if lo > hi {
        return Err(format!("empty level range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn parse_filter(s: &str) -> Result<RunFilter, String> {
    match s {
        "none" => Ok(RunFilter::Policy(FilterPolicy::None)),
        "manual" => Ok(RunFilter::Policy(FilterPolicy::ManualAnalytic)),
        "forcing" => Ok(RunFilter::Forcing),
        _ => {
            if let Some(d) = s.strip_prefix("known:") {
                let d: usize = d.parse().map_err(|e| format!("bad dimension {d}: {e}"))?;
                if d > 3 {
                    return Err(format!("known:{d} exceeds the maximal Killing dimension 3"));
                }
                Ok(RunFilter::Policy(FilterPolicy::KnownDim(d)))
            } else if let Some(a) = s.strip_prefix("auto:") {
                let alpha: f64 = a.parse().map_err(|e| format!("bad exponent {a}: {e}"))?;
                if !(1.0..2.0).contains(&alpha) {
                    return Err(format!("auto exponent {alpha} outside [1, 2)"));
                }
                Ok(RunFilter::Policy(FilterPolicy::Threshold(alpha)))
            } else {
                Err(format!(
                    "unknown filter {s}; use none | manual | known:<d> | auto:<alpha> | forcing"
                ))
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            if let Err(e) = run(args) {
                eprintln!("error: {e}");
                std::process::exit(1);
            }
        }
    }
}

fn run(args: RunArgs) -> surface_stokes::Result<()> {
    let epsilon_policy = match args.eps {
        Some(e) => EpsilonPolicy::Fixed(e),
        None => EpsilonPolicy::HPower(args.alpha),
    };
    let config = RunConfig {
        c: args.c,
        level_min: args.levels.0,
        level_max: args.levels.1,
        epsilon_policy,
        rho: args.rho,
        filter: args.filter,
        forcing_mode: if args.add_killing != 0.0 {
            ForcingMode::AddKilling(args.add_killing)
        } else {
            ForcingMode::Clean
        },
        eigen_count: 3,
        seed: args.seed,
        out_dir: args.out.clone(),
        dump_mesh: args.dump_mesh,
    };
    let result = convergence_study(&config)?;
    print!("{}", rows_to_csv(&result.rows));
    if result.rows.len() >= 2 {
        let n = result.rows.len();
        let fine = &result.rows[n - 1];
        let coarse = &result.rows[n - 2];
        let extr: Vec<f64> = fine
            .lam
            .iter()
            .zip(&coarse.lam)
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect();
        eprintln!(
            "# Richardson-extrapolated eigenvalues from levels {}/{}: {:.6e} {:.6e} {:.6e}",
            coarse.level, fine.level, extr[0], extr[1], extr[2]
        );
    }
    if let Some(dir) = &args.out {
        eprintln!("# outputs written to {}", dir.display());
    }
    Ok(())
}
