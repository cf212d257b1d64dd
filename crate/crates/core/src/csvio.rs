//! Minimal reader for the numeric CSV files used throughout the crate:
//! a fixed header line, `#` comments, blank lines ignored.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug)]
pub(crate) struct Row {
    pub line: usize,
    pub values: Vec<f64>,
}

pub(crate) fn read_file(path: &Path, header: &[&str]) -> Result<Vec<Row>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, header, &path.display().to_string())
}

pub(crate) fn parse(text: &str, header: &[&str], source_name: &str) -> Result<Vec<Row>> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if !seen_header {
            if fields != header {
                return Err(err(line, format!("expected header `{}`, found `{trimmed}`", header.join(","))));
            }
            seen_header = true;
            continue;
        }
        if fields.len() != header.len() {
            return Err(err(line, format!("expected {} fields, found {}", header.len(), fields.len())));
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(line, format!("`{f}` is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(Row { line, values });
    }
    if !seen_header {
        return Err(err(0, "missing header".to_string()));
    }
    Ok(rows)
}

pub(crate) fn write_file(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
