use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gencluster",
    version,
    about = "Generalized spectral clustering of lossless power networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster the dynamic graph; writes partition.json, eigenvalues.csv, gaps.csv, embedding.csv.
    Cluster(ClusterArgs),
    /// Simulate a disturbance; writes trajectory.csv.
    Simulate(SimulateArgs),
    /// Coherence matrix under a disturbance at every bus; writes coherence.csv and coherence_clusters.json.
    Coherence(CoherenceArgs),
    /// Compare spectral clustering with the exhaustive optimum; writes rho_comparison.csv.
    Oracle(OracleArgs),
    /// Randomized operating-point study; writes study.json and scenarios.csv.
    Robustness(RobustnessArgs),
    /// Generalized spectrum of the dynamic graph; writes spectrum.csv.
    Eigs(EigsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Matpower,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DisturbanceShape {
    Step,
    Random,
}

/// A `LO,HI` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range(pub f64, pub f64);

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got '{s}'"))?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
        Ok(Range(parse(lo)?, parse(hi)?))
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Network file (MATPOWER case or JSON).
    #[arg(long = "case")]
    pub case: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Seed for parameter sampling and k-means.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Generator damping range.
    #[arg(long = "damping-gen", value_name = "LO,HI")]
    pub damping_gen: Option<Range>,
    /// Load damping range.
    #[arg(long = "damping-load", value_name = "LO,HI")]
    pub damping_load: Option<Range>,
    /// Generator inertia range.
    #[arg(long, value_name = "LO,HI")]
    pub inertia: Option<Range>,
    /// Resample dynamic parameters of a JSON network.
    #[arg(long)]
    pub resample: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Format for tabular outputs.
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    pub emit: Emit,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Omit the generation timestamp from JSON outputs.
    #[arg(long = "no-timestamp")]
    pub no_timestamp: bool,
}

#[derive(Debug, Args)]
pub struct KChoice {
    /// Number of clusters.
    #[arg(long, conflicts_with = "auto_k")]
    pub k: Option<usize>,
    /// Pick k by the largest relative spectral gap (the default without --k).
    #[arg(long = "auto-k")]
    pub auto_k: bool,
    /// Largest k considered by --auto-k.
    #[arg(long)]
    pub kmax: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DisturbanceArgs {
    /// Onset time, s.
    #[arg(long, default_value_t = 3.0)]
    pub onset: f64,
    /// Duration, s.
    #[arg(long, default_value_t = 0.5)]
    pub duration: f64,
    /// Amplitude, p.u.
    #[arg(long = "disturb-amp", default_value_t = 0.5)]
    pub amplitude: f64,
    /// Disturbance shape.
    #[arg(long, value_enum, default_value_t = DisturbanceShape::Step)]
    pub disturbance: DisturbanceShape,
    /// Hold interval of the random shape, s.
    #[arg(long = "dt-hold", default_value_t = 0.01)]
    pub dt_hold: f64,
    /// Final time, s.
    #[arg(long = "t-end", default_value_t = 10.0)]
    pub t_end: f64,
    /// Step size, s.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub k: KChoice,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub disturbance: DisturbanceArgs,
    /// Disturbed bus id; defaults to the lowest id.
    #[arg(long = "disturb-bus")]
    pub bus: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CoherenceArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub k: KChoice,
    #[command(flatten)]
    pub disturbance: DisturbanceArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Compare k = 2..=kmax.
    #[arg(long, default_value_t = 4)]
    pub kmax: usize,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 100)]
    pub scenarios: usize,
    /// Standard deviation of load perturbations, MW.
    #[arg(long = "sigma-mw", default_value_t = 5f64.sqrt())]
    pub sigma_mw: f64,
    /// Largest k considered per scenario.
    #[arg(long)]
    pub kmax: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EigsArgs {
    #[command(flatten)]
    pub common: Common,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!("25,30".parse::<Range>().unwrap(), Range(25.0, 30.0));
        assert_eq!(" 1.0 , 1.5".parse::<Range>().unwrap(), Range(1.0, 1.5));
        assert!("25".parse::<Range>().is_err());
        assert!("a,b".parse::<Range>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
