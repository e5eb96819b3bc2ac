//! Provenance block attached to every written artifact.

use serde::{Deserialize, Serialize};

pub const TOOL_NAME: &str = "influence";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Effective options, enough to regenerate the artifact.
    pub args: Vec<String>,
}

impl ArtifactMeta {
    pub fn new(command: &str, seed: u64, args: Vec<String>) -> Self {
        ArtifactMeta {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            seed,
            args,
        }
    }
}
