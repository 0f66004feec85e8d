//! The store file: a graph snapshot, read whole and replaced atomically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lcag_core::graph::{read_snapshot, write_snapshot, Graph};

pub fn load(path: &Path) -> Result<Graph> {
    let file = File::open(path).with_context(|| format!("cannot open store {}", path.display()))?;
    read_snapshot(BufReader::new(file)).with_context(|| format!("store {} is not a valid snapshot", path.display()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

pub fn backup_path(path: &Path) -> PathBuf {
    sibling(path, ".bak")
}

/// Writes to a temporary file next to the store and renames it over the
/// store, so readers see either the old or the new graph.
pub fn save(path: &Path, graph: &Graph) -> Result<()> {
    let tmp = sibling(path, ".tmp");
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(&tmp)?);
        write_snapshot(graph, &mut out)?;
        out.flush()?;
        out.get_ref().sync_all()?;
        Ok(())
    };
    write().with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("cannot replace store {}", path.display()))
}

/// Copies the current store to `<store>.bak`, if there is one.
pub fn backup(path: &Path) -> Result<Option<PathBuf>> {
    if !path.exists() {
        return Ok(None);
    }
    let bak = backup_path(path);
    std::fs::copy(path, &bak).with_context(|| format!("cannot back up store to {}", bak.display()))?;
    Ok(Some(bak))
}
