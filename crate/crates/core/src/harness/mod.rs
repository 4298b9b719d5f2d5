//! Monte-Carlo campaigns, bound tables and result files.

pub mod analysis;
pub mod campaign;
pub mod config;
pub mod crlb;
pub mod output;
pub mod stats;

pub use analysis::{run_geometry, run_throughput, GeometryReport, ThroughputReport};
pub use campaign::{
    run_campaign, run_sensing_sweep, with_workers, CampaignPoint, CampaignResult, ScenarioStats, SensingSweepPoint,
};
pub use config::{CampaignConfig, ChannelSettings, DmrsSettings, LinkSettings, Setup, TargetRanges};
pub use crlb::{run_crlb, BlerSource, BoundTriple, CrlbRow};
pub use output::{crlb_csv, csv_header, emit_results, read_results, CRLB_COLUMNS, CSV_COLUMNS};
