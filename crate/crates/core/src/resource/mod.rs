//! Resource manager: thermal model, monitoring, temperature forecasting,
//! fog selection, offloading and speed saturation.

pub mod fog;
pub mod forecast;
pub mod manager;
pub mod offload;
pub mod thermal;

pub use fog::{default_roster, select_device, FogDevice, FogSpec, PING_WINDOW};
pub use forecast::{
    mape, synthetic_trace, train_forecaster, train_linear, Forecaster, LinearModel, Mlp, TrainParams,
};
pub use manager::{
    prepare_forecaster, run_resource_sim, write_resource_trace, OffloadEvent, PlacementStats, ResourceManager,
    ResourceRunSummary, RmCommand, RmParams, TraceRow,
};
pub use offload::{offload_decide, saturate_speed, Decision, OffloadState, SpeedLimit, SAFE_DISTANCE};
pub use thermal::{thermal_step, LoadProfile, ResourceSample, ThermalParams};
