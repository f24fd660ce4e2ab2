//! Scenario files, report documents and the subcommands of the `privaudit` tool.

pub mod commands;
pub mod report;
pub mod scenario;
