//! Plain-text series files: one decimal value per line, `#` lines ignored.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{AppError, Result};

pub fn parse_series(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| AppError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: format!("not a number: `{line}`"),
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_series(&text, path)
}

/// Values are written in shortest round-trip form, so reading the file back
/// reproduces them exactly.
pub fn format_series(values: &[f64], header: Option<&str>) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    if let Some(h) = header {
        s.push_str("# ");
        s.push_str(h);
        s.push('\n');
    }
    for v in values {
        s.push_str(&format!("{v}\n"));
    }
    s
}

pub fn write_series(path: &Path, values: &[f64], header: Option<&str>) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    f.write_all(format_series(values, header).as_bytes())
        .map_err(|e| AppError::io(path, e))
}
