//! Versioned CSV export of solution fields and JSON sidecars.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::field::{SolutionField, SupportKind};

pub const CSV_SCHEMA: u32 = 1;

/// Header comment lines shared by every CSV the crate writes.
pub fn csv_preamble(out: &mut impl Write, config_sha256: &str) -> Result<()> {
    writeln!(out, "# schema={CSV_SCHEMA}")?;
    writeln!(out, "# config_sha256={config_sha256}")?;
    Ok(())
}

/// One row per node (lattice) or path (ensemble) and time:
/// `time_index, node_or_path_index, state_*, y, z_*`. `z` is empty at the last time.
/// `max_paths` truncates ensemble exports; lattices are always complete.
pub fn write_field_csv(out: &mut impl Write, field: &SolutionField, config_sha256: &str, max_paths: Option<usize>) -> Result<()> {
    csv_preamble(out, config_sha256)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time_index".to_string(), "node_or_path_index".to_string()];
    header.extend((0..field.dim).map(|d| format!("state_{d}")));
    header.push("y".into());
    header.extend((0..field.dim).map(|d| format!("z_{d}")));
    w.write_record(&header)?;
    let limit = match field.support {
        SupportKind::Ensemble { .. } => max_paths.unwrap_or(usize::MAX),
        SupportKind::Lattice { .. } => usize::MAX,
    };
    for (i, level) in field.y.iter().enumerate() {
        for (k, y) in level.iter().enumerate().take(limit) {
            let mut row = vec![field.time_indices[i].to_string(), k.to_string()];
            row.extend(field.states[i][k * field.dim..(k + 1) * field.dim].iter().map(|v| v.to_string()));
            row.push(y.to_string());
            if i < field.z.len() {
                row.extend(field.z_at(i, k).iter().map(|v| v.to_string()));
            } else {
                row.extend(std::iter::repeat_n(String::new(), field.dim));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Generic table with the same preamble.
pub fn write_table_csv(out: &mut impl Write, config_sha256: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    csv_preamble(out, config_sha256)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}
