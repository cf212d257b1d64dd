//! Scenario runner: simulates a controller behind a scripted front vehicle,
//! integrates energy, and builds efficiency comparisons against the front
//! vehicle's own consumption.

mod controllers;
mod episode;
mod report;

pub use controllers::{tracking_control, AdpTwoStep, Controller, DpOneStep, DpTwoStep, FrontMirror, StepContext};
pub use episode::{
    cycle_on_grid, efficiency, front_vehicle_energy, load_trace_rows, run_episode, Completion, EpisodeTrace,
    FrontEnergy, TraceRow, TRACE_HEADER,
};
pub use report::{compare, export_plot_data, trace_energy, write_plot_data, ReportRow, ScenarioReport};
