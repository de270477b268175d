//! Command-line front end for the `dwellflee` library: system documents,
//! analysis reports and the bundled regression suite.

pub mod commands;
pub mod document;
pub mod regress;
pub mod report;
