use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::{create_dir, write_string, PipelineConfig};
use crate::error::{Error, Result};

const STAGES: [(&str, &str); 5] = [
    ("synth", "Synthetic inputs"),
    ("train", "Anonymity classifier"),
    ("classify", "Follower labels"),
    ("score", "Sensitivity scores"),
    ("lda", "Topic separation"),
];

fn render_value(out: &mut String, key: &str, v: &Value, depth: usize) {
    let indent = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            let _ = writeln!(out, "{indent}- {key}:");
            for (k, inner) in map {
                render_value(out, k, inner, depth + 1);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object()) => {
            let _ = writeln!(out, "{indent}- {key}:");
            for (i, inner) in items.iter().enumerate() {
                render_value(out, &format!("[{i}]"), inner, depth + 1);
            }
        }
        other => {
            let _ = writeln!(out, "{indent}- {key}: `{other}`");
        }
    }
}

fn files_under(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if let Ok(rel) = path.strip_prefix(root) {
                out.push(rel.to_path_buf());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Collects every stage summary into `<out>/report/report.md`. Stages that
/// have not run are listed as missing rather than failing the report.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<PathBuf> {
    let mut md = String::from("# anonmine run report\n\n");
    let _ = writeln!(md, "Seed `{}`, output root `{}`.\n", cfg.seed, cfg.paths.out.display());
    for (stage, title) in STAGES {
        let dir = if stage == "synth" { cfg.data_dir() } else { cfg.stage_dir(stage) };
        let _ = writeln!(md, "## {title} ({stage})\n");
        let path = dir.join("summary.json");
        if !path.exists() {
            md.push_str("_missing stage: no summary.json_\n\n");
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let value: Value = serde_json::from_str(&text)?;
        match &value {
            Value::Object(map) => {
                for (k, v) in map {
                    render_value(&mut md, k, v, 0);
                }
            }
            other => render_value(&mut md, "summary", other, 0),
        }
        md.push('\n');
    }

    let dir = cfg.stage_dir("report");
    create_dir(&dir)?;
    md.push_str("## Files\n\n");
    if cfg.paths.out.exists() {
        for f in files_under(&cfg.paths.out)? {
            if !f.starts_with("report") {
                let _ = writeln!(md, "- `{}`", f.display());
            }
        }
    }
    let path = dir.join("report.md");
    write_string(&path, &md)?;
    Ok(path)
}
