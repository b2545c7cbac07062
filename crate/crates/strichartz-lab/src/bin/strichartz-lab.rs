//! Experiment driver CLI: one experiment per invocation, CSV output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use strichartz_lab::experiments::runners;
use strichartz_lab::experiments::ExperimentConfig;

#[derive(Parser)]
#[command(name = "strichartz-lab", version, about = "Numerical experiments on space-time estimates for orthonormal systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key=value config file; flags override file entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV reports and the run manifest.
    #[arg(long, global = true, default_value = "lab-out")]
    out: PathBuf,

    /// Seed for every randomized suite.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Spatial dimension.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    dim: u8,

    /// Refinement level: 0 default resolutions, 1-2 finer quadrature.
    #[arg(long, global = true, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
    refine: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Mixed-norm scaling exponents of the coherent ensemble.
    ScalingSweep,
    /// End-point trace divergence along lattice refinements.
    Endpoint,
    /// Dyson series: factorial bounds, Schatten growth, scattering matrix.
    Dyson,
    /// Generalized Kato-Seiler-Simon product bounds.
    Kss,
    /// Inequality ratios for orthonormal Hermite systems.
    StrichartzRatio,
    /// Dual-side Schatten ratios with refinement stability.
    DualRatio,
    /// Multilinear exponent admissibility and the regularized integral.
    HlsCheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::ScalingSweep => "scaling-sweep",
        Command::Endpoint => "endpoint",
        Command::Dyson => "dyson",
        Command::Kss => "kss",
        Command::StrichartzRatio => "strichartz-ratio",
        Command::DualRatio => "dual-ratio",
        Command::HlsCheck => "hls-check",
    };
    let mut cfg = ExperimentConfig::new(name, cli.out.clone());
    if let Some(path) = &cli.config {
        if let Err(e) = cfg.load_file(path) {
            eprintln!("error reading config: {e}");
            return ExitCode::FAILURE;
        }
    }
    cfg.dim = cli.dim as usize;
    cfg.seed = cli.seed;
    cfg.refine = cli.refine;

    let result = run(&cli.command, &cfg);
    match result {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: &Command, cfg: &ExperimentConfig) -> strichartz_lab::Result<Vec<String>> {
    let mut lines = Vec::new();
    match cmd {
        Command::ScalingSweep => {
            let out = runners::run_scaling_sweep(cfg)?;
            lines.push(format!(
                "mixed-norm exponent: {:.4} (target {:.4}), R^2 = {:.6}",
                out.mixed_fit.params[0], out.target_mixed_exponent, out.mixed_fit.r_squared
            ));
            lines.push(format!(
                "ratio-growth exponent: {:.4} (target {:.4})",
                out.ratio_fit.params[0], out.target_ratio_exponent
            ));
            if let Some(f) = &out.discretized_fit {
                lines.push(format!(
                    "discretized exponent: {:.4} over {} points (refinement delta {:.2e})",
                    f.params[0],
                    out.discretized_points.len(),
                    out.refinement_delta
                ));
            }
        }
        Command::Endpoint => {
            let out = runners::run_endpoint_divergence(cfg)?;
            if out.degenerate {
                lines.push("degenerate potential: no fit".into());
            } else if let Some(f) = &out.log_fit {
                lines.push(format!(
                    "log-growth slope: {:.5} (oracle {:.5}), R^2 = {:.6}, strictly increasing: {}",
                    f.params[0], out.slope_oracle, f.r_squared, out.strictly_increasing
                ));
                lines.push(format!(
                    "admissible dual ratio stability under refinement: {:.3e}",
                    out.dual_stability
                ));
            }
            for (eps, est) in &out.mc_d2 {
                lines.push(format!("d=2 exploratory: eps={eps:.3} estimate={est:.4e}"));
            }
        }
        Command::Dyson => {
            let out = runners::run_dyson_suite(cfg)?;
            for (vnorm, rep) in &out.factorial {
                lines.push(format!(
                    "factorial bound at |V| = {vnorm}: {}",
                    if rep.all_pass { "pass" } else { "FAIL" }
                ));
            }
            lines.push(format!(
                "growth envelope log-slope: {:.3} (geometric C ~ {:.3})",
                out.growth.log_slope,
                out.growth.log_slope.exp()
            ));
            for (vnorm, n, rep) in &out.comparisons {
                lines.push(format!(
                    "series vs propagator (|V| = {vnorm}, N = {n}): disc {:.3e} <= tail {:.3e} + 2*{:.3e}: {}",
                    rep.discrepancy,
                    rep.series_tail,
                    rep.declared_tolerance,
                    if rep.pass { "pass" } else { "FAIL" }
                ));
            }
            lines.push(format!(
                "first-order S2 cross-construction deviation: {:.3e}",
                out.first_order_s2_dev
            ));
            lines.push(format!(
                "scattering: |S*S-1| = {:.3e}, |S-1|_S^(2q') = {:.6e}, horizon dev {:.3e}",
                out.scattering_unitarity_defect,
                out.scattering_distance_norm,
                out.scattering_horizon_dev
            ));
        }
        Command::Kss => {
            let out = runners::run_kss_suite(cfg)?;
            lines.push(format!(
                "S2 identity relative deviation: {:.3e}",
                out.identity_rel_dev
            ));
            lines.push(format!("bound suite: {}/{} pass", out.passes, out.rows.len()));
        }
        Command::StrichartzRatio => {
            let out = runners::run_strichartz_ratio(cfg)?;
            for r in &out.rows {
                lines.push(format!(
                    "N = {:>3}: lhs {:.6e}, rhs {:.6e}, ratio {:.6}",
                    r.rank, r.lhs, r.rhs, r.ratio
                ));
            }
            lines.push(format!("fitted ratio growth exponent: {:.4}", out.growth_exponent));
        }
        Command::DualRatio => {
            let out = runners::run_dual_ratio(cfg)?;
            for (qp, lam, del, ratio) in &out.rows {
                lines.push(format!(
                    "q' = {qp}: Lambda = {lam:.3}, delta = {del:.4}, ratio = {ratio:.6e}"
                ));
            }
            lines.push(format!(
                "stability across refinements: {:.3e} (cache hits: {})",
                out.stability, out.cache_hits
            ));
        }
        Command::HlsCheck => {
            let out = runners::run_hls_check(cfg)?;
            for (name, ok, violations) in &out.checks {
                if *ok {
                    lines.push(format!("{name}: admissible"));
                } else {
                    lines.push(format!("{name}: rejected ({violations})"));
                }
            }
            for (eps, val) in &out.ladder {
                lines.push(format!("eps = {eps:.3}: normalized integral {val:.6e}"));
            }
        }
    }
    Ok(lines)
}
