//! Coupled forward problem: liquid Navier-Stokes and heat transport, solid
//! conduction, Stefan front speed and level-set motion.

pub mod heat;
pub mod ns;
pub mod params;
pub mod run;
pub mod state;
pub mod stefan;
pub mod trajectory;

pub use heat::{FaceVelocity, HeatSystem, Phase, ThermalBc};
pub use ns::{NsReport, NsSolver};
pub use params::{NumericalSettings, PhysicalParams};
pub use run::{
    replay_temperature, run_forward, run_forward_observed, DiagnosticRow, ForwardOutput,
    ForwardProblem, RunOptions, StepView,
};
pub use state::FlowState;
pub use stefan::{build_probes, side_derivatives, stefan_speeds, Probe, ProbeData};
pub use trajectory::{Checkpoint, Trajectory};
