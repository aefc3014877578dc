//! Configuration, field snapshots, CSV tables, campaign manifests and plot data.

pub mod config;
pub mod manifest;
pub mod plotdata;
pub mod snapshot;
pub mod table;

pub use config::{
    ControlConfig, GradcheckConfig, GridConfig, OutputConfig, Profile, PsoConfig, RunConfig, TargetConfig,
};
pub use manifest::{unix_now, Artifact, CampaignManifest, Counters, MANIFEST_FILE};
pub use plotdata::{campaign_series, campaigns, write_plotdata, Series, PLOTDATA_FILE};
pub use snapshot::Snapshot;
pub use table::{fmt_num, CsvOut, NumericTable};
