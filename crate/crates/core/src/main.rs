use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use discount::domain::{load_dataset, load_region_spec, ColumnMapping, Dataset, RegionSpec};
use discount::estimators::{EstimatorOptions, Method, VarianceSelection};
use discount::evaluation::{
    generate_synthetic, make_regions, run_simulation, write_outputs, CalibrationSource,
    SimulationConfig, SyntheticSpec, CALIBRATION_SAMPLES,
};
use discount::session::{serve, LoadedDataset, SessionService};
use discount::{Error, Result};

#[derive(Parser)]
#[command(
    name = "discount",
    version,
    about = "Detector-guided unbiased counting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials of one or more estimators and write trials.jsonl and summary.csv.
    Simulate(SimulateArgs),
    /// Serve screening sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Parser)]
struct SimulateArgs {
    /// Dataset CSV with id, g and f columns.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Synthetic spec JSON, or `default`.
    #[arg(long)]
    synthetic: Option<String>,
    /// Region JSON; defaults to the whole domain.
    #[arg(long)]
    regions: Option<PathBuf>,
    /// Comma-separated methods: MC, IS, DIS, kDIS, kDIScv, CAL.
    #[arg(long, value_delimiter = ',', default_value = "kDIS")]
    method: Vec<Method>,
    /// Comma-separated total sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "50")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// region, pooled or auto.
    #[arg(long, default_value = "auto")]
    variance: VarianceSelection,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Labeling cost factor c; defaults per method.
    #[arg(long)]
    cost_factor: Option<f64>,
    /// Labeled CSV the calibration model is fit on. Synthetic runs default
    /// to the same spec with seed + 1; dataset runs to the dataset itself.
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long, default_value_t = CALIBRATION_SAMPLES)]
    calibration_samples: usize,
}

#[derive(Parser)]
struct ServeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Region JSON; defaults to the whole domain.
    #[arg(long)]
    regions: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long)]
    state_dir: Option<PathBuf>,
}

fn regions_or_all(path: Option<&PathBuf>) -> Result<RegionSpec> {
    path.map_or(Ok(RegionSpec::all()), load_region_spec)
}

fn load_synthetic(arg: &str) -> Result<SyntheticSpec> {
    if arg == "default" {
        return Ok(SyntheticSpec::default());
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(arg)?)?)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let schema = ColumnMapping::default();
    let (data, synthetic_calibration) = match (&args.data, &args.synthetic) {
        (Some(path), _) => (load_dataset(path, &schema)?, None),
        (None, Some(spec)) => {
            let spec = load_synthetic(spec)?;
            let prev = generate_synthetic(&spec.with_seed(spec.seed.wrapping_add(1)))?;
            (generate_synthetic(&spec)?, Some(prev))
        }
        (None, None) => return Err(Error::InvalidParameter("pass --data or --synthetic".into())),
    };
    let calibration: Option<Dataset> = match &args.calibration {
        Some(path) => Some(load_dataset(path, &schema)?),
        None => synthetic_calibration,
    };
    let oracle = data
        .oracle
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("dataset needs an f value on every row".into()))?;
    let cal_labels = match &calibration {
        Some(c) => Some(c.oracle.as_ref().ok_or_else(|| {
            Error::InvalidParameter("calibration data needs an f value on every row".into())
        })?),
        None => None,
    };
    let cal = calibration
        .as_ref()
        .zip(cal_labels)
        .map(|(c, labels)| CalibrationSource {
            domain: &c.domain,
            labels,
        });
    let regions = make_regions(&data.domain, &regions_or_all(args.regions.as_ref())?)?;
    let config = SimulationConfig {
        options: EstimatorOptions {
            alpha: args.alpha,
            variance: args.variance,
        },
        cost_factor: args.cost_factor,
        calibration_samples: args.calibration_samples,
        ..SimulationConfig::new(args.method, args.n, args.trials, args.seed)
    };
    let results = run_simulation(&data.domain, oracle, &regions, &config, cal)?;
    write_outputs(&args.out, &results)?;
    for r in &results {
        let s = &r.summary;
        println!(
            "{:<7} n={:<5} error={:.5} ±{:.5}  effort={:.2}%",
            r.config.method,
            r.config.n,
            s.mean_error,
            s.error_band(),
            s.effort_pct
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_server(args: ServeArgs) -> Result<()> {
    let data = load_dataset(&args.data, &ColumnMapping::default())?;
    let name = args
        .data
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    let dataset = LoadedDataset {
        name,
        domain: Arc::new(data.domain),
        regions: regions_or_all(args.regions.as_ref())?,
    };
    let service = Arc::new(SessionService::new(vec![dataset], args.state_dir)?);
    let addr = std::net::SocketAddr::new(args.host, args.port);
    tokio::runtime::Runtime::new()?.block_on(serve(service, addr))
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Serve(args) => run_server(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
