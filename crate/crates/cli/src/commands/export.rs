use std::path::PathBuf;

use jqf_core::{TableFile, TextureModel};

use super::standard_luma;
use crate::corpus;
use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct ExportParams {
    pub model: Option<PathBuf>,
    /// Write the standard luminance table at this quality as `standard.qtable`.
    pub standard: Option<u8>,
    pub out_dir: PathBuf,
}

/// Writes table files and returns their paths.
pub fn run(p: &ExportParams) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(q) = p.standard {
        let path = p.out_dir.join("standard.qtable");
        corpus::write(&path, TableFile::new(standard_luma(q)?, q)?.to_text())?;
        written.push(path);
    }
    if let Some(model_path) = &p.model {
        let model = TextureModel::load(model_path)?;
        let q = model
            .anneal_quality()
            .filter(|_| model.has_tables())
            .ok_or_else(|| CliError::usage(format!("{} has no annealed tables", model_path.display())))?;
        for (t, table) in model.tables() {
            let path = p.out_dir.join(format!("texture_{t:03}.qtable"));
            corpus::write(&path, TableFile::new(*table, q)?.to_text())?;
            written.push(path);
        }
    }
    if written.is_empty() {
        return Err(CliError::usage("export needs --model or --standard"));
    }
    Ok(written)
}
