//! Splits a metrics log into one `(epoch, value)` series per column.
//!
//! `lambda` and `phase` columns are grouping keys: each distinct value gets
//! its own series, named `<metric>_<key><value>`.

use std::path::Path;

use crate::error::{OrganError, Result};

const GROUP_KEYS: [&str; 2] = ["lambda", "phase"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// Cells copied verbatim from the log.
    pub points: Vec<(String, String)>,
}

impl Series {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("epoch\t{}\n", self.name);
        for (x, y) in &self.points {
            out.push_str(x);
            out.push('\t');
            out.push_str(y);
            out.push('\n');
        }
        out
    }
}

/// Series in header order; empty cells are skipped. `path` only labels
/// errors.
pub fn emit_plot_data(log: &str, path: &Path) -> Result<Vec<Series>> {
    let err = |line: usize, message: String| OrganError::Parse { path: path.to_path_buf(), line, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(log.as_bytes());
    let header: Vec<String> = reader.headers().map_err(|e| err(1, e.to_string()))?.iter().map(str::to_string).collect();
    let epoch_col = header.iter().position(|h| h == "epoch").ok_or_else(|| err(1, "no epoch column".into()))?;
    let groups: Vec<usize> = header.iter().enumerate().filter(|(_, h)| GROUP_KEYS.contains(&h.as_str())).map(|(i, _)| i).collect();
    let metrics: Vec<usize> = (0..header.len()).filter(|i| *i != epoch_col && !groups.contains(i)).collect();

    let mut series: Vec<Series> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let epoch = &record[epoch_col];
        epoch.parse::<u64>().map_err(|_| err(line, format!("epoch {epoch:?} is not a whole number")))?;
        let suffix: String = groups.iter().map(|&g| format!("_{}{}", header[g], &record[g])).collect();
        for &m in &metrics {
            let cell = &record[m];
            if cell.is_empty() {
                continue;
            }
            cell.parse::<f64>().map_err(|_| err(line, format!("{} value {cell:?} is not a number", header[m])))?;
            let name = format!("{}{suffix}", header[m]);
            let s = match series.iter_mut().position(|s| s.name == name) {
                Some(i) => &mut series[i],
                None => {
                    series.push(Series { name, points: Vec::new() });
                    series.last_mut().unwrap()
                }
            };
            s.points.push((epoch.to_string(), cell.to_string()));
        }
    }
    Ok(series)
}
