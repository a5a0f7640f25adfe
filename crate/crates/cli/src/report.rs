use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// One JSON line: the command name, its resolved configuration and the
/// command-specific result fields.
pub fn record<C: Serialize, R: Serialize>(command: &str, config: &C, result: &R) -> Result<String> {
    let mut out = json!({ "command": command, "config": config });
    match serde_json::to_value(result)? {
        Value::Object(fields) => out.as_object_mut().expect("object").extend(fields),
        other => {
            out["result"] = other;
        }
    }
    Ok(serde_json::to_string(&out)?)
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Prints `line` and mirrors it to `out` when given.
pub fn emit(line: &str, out: Option<&Path>) -> Result<()> {
    println!("{line}");
    if let Some(path) = out {
        write_atomic(path, format!("{line}\n").as_bytes())?;
    }
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
