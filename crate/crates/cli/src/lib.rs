//! Scenario files, subcommands and the verification suite of the `bwave`
//! command-line tool.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;
pub mod verify;

pub use commands::{run_subcommand, Command, Flags, Outcome};
pub use error::{CliError, CliResult};
pub use scenario::{parse_scenario, Initializer, Scenario};
pub use verify::VerifySuiteReport;
