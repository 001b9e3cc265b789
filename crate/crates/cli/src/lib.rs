//! Command-line harness around the reflectance map library: dataset
//! generation, reconstruction by named methods, evaluation, file-based
//! edits and an HTTP editing service.

pub mod assets;
pub mod commands;
pub mod config;
pub mod eval;
pub mod methods;
pub mod plot;
pub mod serve;

/// Result of a batch command that can partially fail.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    /// `(item, message)` for items that could not be processed.
    pub failures: Vec<(String, String)>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

/// Exit code for configuration and IO errors.
pub const EXIT_CONFIG: i32 = 2;

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes`, creating parent directories.
pub fn write_file(path: &std::path::Path, bytes: &[u8]) -> anyhow::Result<()> {
    use anyhow::Context;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
