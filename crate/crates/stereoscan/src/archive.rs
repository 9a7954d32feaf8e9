//! `.sb3` archives: zip files holding `project.json` and content-addressed
//! assets.

use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use serde_json::Value;
use stereoscan_core::ir::{IrError, Project};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

pub const PROJECT_JSON: &str = "project.json";

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("not a zip archive: {0}")]
    NotZip(String),
    #[error("archive has no project.json")]
    MissingProjectJson,
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Decodes an archive held in memory. `source` is recorded as the
/// project's source path.
pub fn load_project_bytes(bytes: &[u8], source: &str) -> Result<Project, LoadError> {
    let mut zip = ZipArchive::new(Cursor::new(bytes)).map_err(|e| LoadError::NotZip(e.to_string()))?;
    let mut project_json = None;
    let mut assets = BTreeMap::new();
    for i in 0..zip.len() {
        let mut file = zip.by_index(i).map_err(|e| LoadError::NotZip(e.to_string()))?;
        if file.is_dir() {
            continue;
        }
        let full = file.name().map_err(|e| LoadError::NotZip(e.to_string()))?.into_owned();
        let name = full.rsplit('/').next().unwrap_or_default().to_string();
        let mut data = Vec::with_capacity(file.size() as usize);
        file.read_to_end(&mut data).map_err(|e| LoadError::NotZip(format!("{name}: {e}")))?;
        if name == PROJECT_JSON {
            project_json = Some(data);
        } else {
            assets.insert(name, data);
        }
    }
    let project_json = project_json.ok_or(LoadError::MissingProjectJson)?;
    Ok(Project::from_parts(&project_json, assets, source)?)
}

pub fn load_project(path: &Path) -> Result<Project, LoadError> {
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    load_project_bytes(&bytes, &path.display().to_string())
}

/// Packs `project.json` and assets into `.sb3` bytes. Entries are written
/// in name order with a fixed timestamp, so equal input gives equal bytes.
pub fn write_sb3(project_json: &Value, assets: &BTreeMap<String, Vec<u8>>) -> Vec<u8> {
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default());
    let json = serde_json::to_vec(project_json).expect("JSON values serialize");
    let mut entries: Vec<(&str, &[u8])> = vec![(PROJECT_JSON, &json)];
    entries.extend(assets.iter().map(|(k, v)| (k.as_str(), v.as_slice())));
    for (name, data) in entries {
        zip.start_file(name, options).expect("in-memory zip");
        zip.write_all(data).expect("in-memory zip");
    }
    zip.finish().expect("in-memory zip").into_inner()
}
