//! `isac`: campaign runner and closed-form analysis tools.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 failure
//! while running.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isac_core::bounds::HarqProbabilities;
use isac_core::grid::SlotConfig;
use isac_core::harness::{
    crlb_csv, emit_results, read_results, run_campaign, run_crlb, run_geometry, run_throughput, with_workers,
    BlerSource, CampaignConfig,
};
use isac_core::Error;

#[derive(Parser)]
#[command(name = "isac", version, about = "Bistatic OFDM uplink sensing and HARQ link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo campaign and write results.csv and results.json.
    Sim {
        /// Campaign configuration, TOML.
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if needed.
        #[arg(long)]
        out: PathBuf,
        /// Overrides `master_seed` from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print lower bounds for both sensing scenarios and their mixture.
    Crlb {
        /// Campaign configuration, TOML.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        rates: RateSource,
    },
    /// Localize a target from excess delay and angle of arrival.
    Geometry {
        /// gNB–UE baseline, m.
        #[arg(long)]
        d0: f64,
        /// Excess delay of the reflected path over the LoS path, s.
        #[arg(long, allow_hyphen_values = true)]
        dtau: f64,
        /// Angle of arrival at the gNB, rad.
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        /// Target speed, m/s; adds the Doppler magnitude to the report.
        #[arg(long, allow_hyphen_values = true)]
        speed: Option<f64>,
        /// Carrier frequency, Hz.
        #[arg(long, default_value_t = 3.5e9)]
        fc: f64,
    },
    /// Average HARQ throughput from per-round block error rates.
    Throughput {
        #[arg(long, value_parser = parse_bler)]
        bler: Bler,
        #[arg(long)]
        mcs: u8,
        #[arg(long = "dmrs-add-pos")]
        dmrs_add_pos: u8,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct RateSource {
    /// Per-round block error rates `p1,p2,p3,p4` applied to every point.
    #[arg(long, value_parser = parse_bler)]
    bler: Option<Bler>,
    /// Use the measured rates of a previous campaign's results.json.
    #[arg(long)]
    from_campaign: Option<PathBuf>,
}

#[derive(Clone, Copy)]
struct Bler([f64; 4]);

fn parse_bler(s: &str) -> Result<Bler, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<_, _>>()?;
    let p: [f64; 4] = values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 comma-separated rates, got {}", v.len()))?;
    HarqProbabilities::new(p).map_err(|e| e.to_string())?;
    Ok(Bler(p))
}

/// Errors raised while reading inputs, before any work starts.
struct InputError(Error);

enum Failure {
    Input(Error),
    Run(Error),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Input(e)
        } else {
            Failure::Run(e)
        }
    }
}

fn input<T>(r: isac_core::Result<T>) -> Result<T, InputError> {
    r.map_err(InputError)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sim {
            config,
            out,
            seed,
            workers,
        } => {
            let mut cfg = input(CampaignConfig::from_file(&config))?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            let result = with_workers(workers, || run_campaign(&cfg))??;
            let (csv, json) = emit_results(&result, &out)?;
            println!("{}", csv.display());
            println!("{}", json.display());
        }
        Command::Crlb { config, rates } => {
            let cfg = input(CampaignConfig::from_file(&config))?;
            let source = match (rates.bler, rates.from_campaign) {
                (Some(Bler(p)), _) => BlerSource::Fixed(input(HarqProbabilities::new(p))?),
                (None, Some(path)) => BlerSource::Campaign(input(read_results(&path))?),
                (None, None) => BlerSource::Missing,
            };
            print!("{}", crlb_csv(&run_crlb(&cfg, &source)?));
        }
        Command::Geometry {
            d0,
            dtau,
            theta,
            speed,
            fc,
        } => {
            let r = input(run_geometry(d0, dtau, theta, speed, fc))?;
            println!("bistatic_range_m = {}", r.bistatic_range_m);
            println!("target_range_m = {}", r.target_range_m);
            println!("target_ue_range_m = {}", r.target_ue_range_m);
            println!("x_m = {}", r.x_m);
            println!("y_m = {}", r.y_m);
            if let Some(nu) = r.doppler_hz {
                println!("doppler_hz = {nu}");
            }
        }
        Command::Throughput {
            bler: Bler(p),
            mcs,
            dmrs_add_pos,
        } => {
            let r = input(run_throughput(p, mcs, dmrs_add_pos, &SlotConfig::default()))?;
            println!("num_data_res = {}", r.num_data_res);
            println!("payload_bits = {}", r.payload_bits);
            println!("nominal_bits = {}", r.nominal_bits);
            println!("expected_rounds = {}", r.expected_rounds);
            println!("rho = {}", r.rho);
            println!("throughput_bits_per_slot = {}", r.throughput_bits_per_slot);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("isac: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("isac: {e}");
            ExitCode::from(3)
        }
    }
}
