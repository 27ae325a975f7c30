//! File formats, parallel drivers and the command implementations behind
//! the `coophunt` binary.
//!
//! Every command produces a [`Document`]: a [`Manifest`] echoing the
//! effective settings plus a command-specific data section. Documents are
//! written as JSON (`{schema_version, manifest, data}`) or as CSV with a
//! header row, in which case the manifest goes to a JSON sidecar.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod table;

pub use error::{CliError, ErrorRecord};
pub use manifest::{Document, Manifest, Setting, SCHEMA_VERSION};
pub use table::{render, Format, Table};
