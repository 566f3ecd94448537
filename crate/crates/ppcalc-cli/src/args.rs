//! Command-line surface. Every option can also come from a JSON config
//! document (`--config`); explicit flags override config values.

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "ppcalc",
    about = "Poisson-process partition calculus: exact and Monte Carlo \
             computation with exchangeable partitions and completely random measures",
    version
)]
pub struct Cli {
    /// JSON config document; flags override its fields
    #[arg(long, global = true)]
    pub config: Option<String>,

    /// Worker threads (default: all cores; env PPCALC_THREADS as fallback)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Master seed for every random stream
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory for reports and CSV plot data
    #[arg(long, global = true)]
    pub out_dir: Option<String>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate the EPPF over every partition of {1..n}
    Eppf(EppfArgs),
    /// Draw partitions from the sequential seating sampler
    SamplePartition(SampleArgs),
    /// Exact partition-sum moments of a random measure
    Moments(MomentsArgs),
    /// Posterior analysis of a kernel-mixed intensity model
    FitIntensity(FitIntensityArgs),
    /// Posterior survival analysis under a Beta-family hazard prior
    FitSurvival(FitSurvivalArgs),
    /// Cauchy-Stieltjes transforms of a Pitman-Yor mean functional
    Transform(TransformArgs),
    /// Poisson-Kingman EPPF table
    Pk(PkArgs),
    /// Run the full oracle suite and report pass/fail per criterion
    Verify,
}

#[derive(Args, Debug, Default)]
pub struct EppfArgs {
    /// Partition family: ewens or pd
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of items
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct SampleArgs {
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of draws
    #[arg(long)]
    pub draws: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct MomentsArgs {
    /// Intensity family: gamma, gg, beta or poisson
    #[arg(long)]
    pub family: Option<String>,
    /// Base measure total mass
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Highest moment order
    #[arg(long)]
    pub order: Option<usize>,
    /// Optional location region, as `lo,hi` over the unit base support
    #[arg(long)]
    pub region: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct FitIntensityArgs {
    /// Prior family: gamma or gg
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Base measure support `lo,hi`
    #[arg(long)]
    pub base: Option<String>,
    /// Kernel: uniform, exponential, gaussian or indicator
    #[arg(long)]
    pub kernel: Option<String>,
    /// Kernel parameter (width / rate / sigma / half-width)
    #[arg(long)]
    pub kernel_param: Option<f64>,
    /// Observation window `lo,hi`
    #[arg(long)]
    pub window: Option<String>,
    /// Events CSV with a `time` header column
    #[arg(long)]
    pub data: Option<String>,
    /// Importance-sampling draws (0 = exact only)
    #[arg(long)]
    pub draws: Option<usize>,
    /// Truncation tolerance for continuous-part atoms
    #[arg(long)]
    pub eps: Option<f64>,
    /// Number of grid times for the intensity curve
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct FitSurvivalArgs {
    /// Prior: beta (with --c) unless --dirichlet is set
    #[arg(long)]
    pub prior: Option<String>,
    /// Constant Beta-process parameter c
    #[arg(long)]
    pub c: Option<f64>,
    /// Base hazard rate for the Bounded A0 (beta prior)
    #[arg(long)]
    pub a0_rate: Option<f64>,
    /// Base hazard horizon for the Bounded A0 (beta prior)
    #[arg(long)]
    pub a0_horizon: Option<f64>,
    /// Use the Dirichlet-process prior c(s) = theta S0(s)
    #[arg(long)]
    pub dirichlet: bool,
    #[arg(long)]
    pub theta: Option<f64>,
    /// F0 for the Dirichlet prior: `exponential,RATE` or `uniform,A,B`
    #[arg(long)]
    pub f0: Option<String>,
    /// Survival CSV with `time,event[,mark]` columns
    #[arg(long)]
    pub data: Option<String>,
    /// Monte Carlo path draws (0 = analytic curve only)
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct TransformArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Functional: `indicator,LO,HI` or `linear` on the unit base
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub z: Option<f64>,
    /// Monte Carlo draws for the sampler oracle (0 = skip)
    #[arg(long)]
    pub draws: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct PkArgs {
    /// Family: gamma or ig (generalized gamma at alpha = 1/2)
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}
