//! `sgraphs`: experiments on metric graphs with antiunitary symmetries.
//!
//! Every subcommand reads one structured-text config file, writes CSV
//! artifacts plus a provenance manifest into `--out`, and returns a nonzero
//! exit status if anything (config, solver, or a built-in sanity check)
//! fails. Data files are byte-identical across reruns with the same seed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod experiments;

#[derive(Parser)]
#[command(name = "sgraphs", version, about = "metric-graph spectra and spectral statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed override; stochastic experiments need a seed here or in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for ensemble sweeps (default: all cores). Results do
    /// not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Uniform absorption eta (imaginary part of k) for open-system runs.
    #[arg(long, global = true)]
    eta: Option<f64>,

    /// For transmission maps: also emit the constant-delta-phi remap.
    #[arg(long, global = true)]
    remap_phase: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-graph spectrum via secular eigenvalue tracking.
    Spectrum,
    /// Kramers doublet check on a pair graph at delta_phi = pi.
    Kramers,
    /// Transmission |S|^2 over a (delta_l, k) grid, optionally rebinned to
    /// constant delta_phi rows.
    TransmissionMap,
    /// Eigenvalues from reflection-phase derivatives, compared against the
    /// secular solver.
    PhaseExtraction,
    /// Doublet spacing statistics of a seeded pair-graph ensemble.
    SpacingGse,
    /// Coupled-block random-matrix simulation against the single-pair law.
    CoupledBlockSim,
    /// R2, form factor, number variance and rigidity for a matrix ensemble.
    StatsSuite,
    /// Level statistics across the twist: delta_phi = pi, 3 pi/2, 2 pi.
    GseGoeSweep,
    /// Closed-form spacing laws exported as (s, pdf, cdf) tables.
    TheoryCurves,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match experiments::Common::prepare(
        cli.config.as_deref(),
        cli.out.as_deref(),
        cli.seed,
        cli.threads,
        cli.eta,
        cli.remap_phase,
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };

    let result = match cli.command {
        Command::Spectrum => experiments::spectrum(&common),
        Command::Kramers => experiments::kramers(&common),
        Command::TransmissionMap => experiments::transmission_map(&common),
        Command::PhaseExtraction => experiments::phase_extraction(&common),
        Command::SpacingGse => experiments::spacing_gse(&common),
        Command::CoupledBlockSim => experiments::coupled_block_sim(&common),
        Command::StatsSuite => experiments::stats_suite(&common),
        Command::GseGoeSweep => experiments::gse_goe_sweep(&common),
        Command::TheoryCurves => experiments::theory_curves(&common),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.to_string().contains("line ") { 2 } else { 1 };
            ExitCode::from(code)
        }
    }
}
