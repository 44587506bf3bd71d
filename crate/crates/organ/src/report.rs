//! Per-epoch metric rows and their CSV form.

use std::fmt::Write as _;

/// One evaluation snapshot. Objective means are taken over valid samples
/// only and are 0 when no sample is valid.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub epoch: usize,
    /// Mean per-token NLL of the generator on held corpus sequences.
    pub nll: f64,
    /// Mean critic loss over the epoch's critic steps; absent outside
    /// training.
    pub d_loss: Option<f64>,
    pub validity: f64,
    pub diversity: f64,
    pub objectives: Vec<(String, f64)>,
    pub mean_len: f64,
    /// Fraction of samples whose text occurs more than once in the set.
    pub dup_frac: f64,
    pub samples: usize,
}

fn cell(x: f64) -> String {
    format!("{x:.6}")
}

impl MetricReport {
    pub fn objective(&self, name: &str) -> Option<f64> {
        self.objectives.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn header(objectives: &[String]) -> String {
        let mut cols = vec!["epoch", "nll", "d_loss", "validity", "diversity"];
        cols.extend(objectives.iter().map(String::as_str));
        cols.extend(["mean_len", "dup_frac"]);
        cols.join(",")
    }

    pub fn csv_header(&self) -> String {
        Self::header(&self.objectives.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>())
    }

    pub fn csv_row(&self) -> String {
        let mut cells = vec![
            self.epoch.to_string(),
            cell(self.nll),
            self.d_loss.map(cell).unwrap_or_default(),
            cell(self.validity),
            cell(self.diversity),
        ];
        cells.extend(self.objectives.iter().map(|&(_, v)| cell(v)));
        cells.push(cell(self.mean_len));
        cells.push(cell(self.dup_frac));
        cells.join(",")
    }

    /// Two aligned columns for a terminal.
    pub fn table(&self) -> String {
        let mut rows: Vec<(String, String)> =
            vec![("samples".into(), self.samples.to_string()), ("epoch".into(), self.epoch.to_string()), ("nll".into(), cell(self.nll))];
        if let Some(d) = self.d_loss {
            rows.push(("d_loss".into(), cell(d)));
        }
        rows.push(("validity".into(), cell(self.validity)));
        rows.push(("diversity".into(), cell(self.diversity)));
        rows.extend(self.objectives.iter().map(|(n, v)| (n.clone(), cell(*v))));
        rows.push(("mean_len".into(), cell(self.mean_len)));
        rows.push(("dup_frac".into(), cell(self.dup_frac)));
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}

/// Header plus one row per report; reports must share objective columns.
pub fn to_csv(reports: &[MetricReport]) -> String {
    let mut out = String::new();
    if let Some(first) = reports.first() {
        out.push_str(&first.csv_header());
        out.push('\n');
    }
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Like [`to_csv`] with a leading `lambda` column.
pub fn sweep_csv(runs: &[(f64, Vec<MetricReport>)]) -> String {
    let mut out = String::new();
    if let Some(first) = runs.iter().flat_map(|(_, r)| r.first()).next() {
        let _ = writeln!(out, "lambda,{}", first.csv_header());
    }
    for (lambda, reports) in runs {
        for r in reports {
            let _ = writeln!(out, "{lambda},{}", r.csv_row());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_order() {
        let r = MetricReport {
            epoch: 3,
            nll: 1.5,
            d_loss: None,
            validity: 0.5,
            diversity: 0.25,
            objectives: vec![("solubility".into(), 0.75)],
            mean_len: 9.0,
            dup_frac: 0.0,
            samples: 10,
        };
        assert_eq!(r.csv_header(), "epoch,nll,d_loss,validity,diversity,solubility,mean_len,dup_frac");
        assert_eq!(r.csv_row(), "3,1.500000,,0.500000,0.250000,0.750000,9.000000,0.000000");
        assert!(to_csv(&[r.clone(), r.clone()]).lines().count() == 3);
        assert!(sweep_csv(&[(0.5, vec![r])]).starts_with("lambda,epoch,"));
    }
}
