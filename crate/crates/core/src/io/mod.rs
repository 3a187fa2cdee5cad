//! Run configuration, field and diagnostics files, run orchestration.

mod config;
mod fields;
mod run;

pub use config::{
    parse_config, parse_config_unchecked, serialize_config, FieldFormat, InitialConfig, InitialKind, OutputConfig, RunConfig, RunControl,
    SweepConfig,
};
pub use fields::{
    diagnostics_csv, diagnostics_header, diagnostics_row, field_header, parse_diagnostics, read_fields, write_fields,
    write_vtk, FieldDump,
};
pub use run::{
    assign_orders, diagnose, execute, field_l2_distance, observed_order, sweep_summary_csv, RunOutcome, RunReport,
    SweepRow,
};
