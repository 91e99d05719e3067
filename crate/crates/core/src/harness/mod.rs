//! Declarative experiment runner: configuration files, observables, engines
//! and the figure catalog.

mod catalog;
mod config;
mod observables;
mod run;
mod syntax;

pub use syntax::parse_number;

pub use catalog::{config_files, figure, figure_metrics, max_channel_difference, reproduce, Bundle, Figure, Scale, FIGURES};
pub use config::{
    parse_config, Engine, InitialState, ModelSpec, MomentumTarget, ObservableSpec, Occupancy, OutputSpec, Region,
    RunConfig, TimeGrid,
};
pub use observables::{
    annihilator, integrated_population, momentum_distribution, occupancy_weights, probe, region_sites, vacuum_flanks,
    weighted_density,
};
pub use run::{
    execute, fmt_value, initial_state, plot_script, write_atomic, write_run, Artifacts, RunData, RunResult, Status,
    Summary, Table,
};
