//! Rendering of results as CSV or JSON and delivery to a file or stdout.

use std::io::Write;
use std::path::PathBuf;

use priorconflict::lasso::LassoPowerTable;
use priorconflict::{CheckResult, PowerCurve};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::Format;
use crate::error::{CliError, CliResult};

pub const CHECK_CSV_HEADER: &str = "label,statistic_obs,p_value,p_upper,p_lower,tail,n_draws,seed";
pub const CRIT_CSV_HEADER: &str = "statistic,n,m,tau,lower,upper,n_draws,seed";
pub const HISTOGRAM_CSV_HEADER: &str = "bin_left,bin_right,density";

pub struct Output {
    path: Option<PathBuf>,
}

impl Output {
    /// Fails early when the destination directory does not exist.
    pub fn new(path: Option<PathBuf>) -> CliResult<Self> {
        if let Some(p) = &path {
            if p.is_dir() {
                return Err(CliError::Validation(format!("out: '{}' is a directory", p.display())));
            }
            let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
            if let Some(d) = parent {
                if !d.is_dir() {
                    return Err(CliError::Validation(format!("out: directory '{}' does not exist", d.display())));
                }
            }
        }
        Ok(Self { path })
    }

    pub fn write(&self, text: &str) -> CliResult<()> {
        match &self.path {
            Some(p) => std::fs::write(p, text)
                .map_err(|e| CliError::Validation(format!("out: cannot write '{}': {e}", p.display()))),
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(text.as_bytes())
                    .and_then(|_| so.flush())
                    .map_err(|e| CliError::Numerical(format!("cannot write to stdout: {e}")))
            }
        }
    }
}

fn pretty<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable result");
    s.push('\n');
    s
}

/// One check prints as a bare CheckResult in JSON; several print as an
/// array with a `label` field on each.
pub fn checks(results: &[(String, CheckResult)], format: Format) -> String {
    match format {
        Format::Json if results.len() == 1 => pretty(&results[0].1),
        Format::Json => {
            let arr: Vec<Value> = results
                .iter()
                .map(|(label, r)| {
                    let mut v = serde_json::to_value(r).expect("serializable result");
                    v.as_object_mut().expect("struct").insert("label".into(), json!(label));
                    v
                })
                .collect();
            pretty(&arr)
        }
        Format::Csv => {
            let mut s = format!("{CHECK_CSV_HEADER}\n");
            for (label, r) in results {
                s.push_str(&format!(
                    "{label},{},{},{},{},{},{},{}\n",
                    r.statistic_obs, r.p_value, r.p_upper, r.p_lower, r.tail, r.n_draws, r.base_seed
                ));
            }
            s
        }
    }
}

/// CSV: one block per curve, each led by `# check=<label>` and the header.
pub fn curves(curves: &[PowerCurve], format: Format, context: &str) -> String {
    match format {
        Format::Json => pretty(curves),
        Format::Csv => {
            let mut s = String::new();
            for c in curves {
                s.push_str(&format!("# check={}{context}\n", c.label));
                s.push_str(&c.to_csv());
            }
            s
        }
    }
}

/// CSV: a single header followed by the rows of every table.
pub fn lasso_tables(tables: &[LassoPowerTable], format: Format) -> String {
    match format {
        Format::Json if tables.len() == 1 => pretty(&tables[0]),
        Format::Json => pretty(tables),
        Format::Csv => {
            let mut s = format!("{}\n", LassoPowerTable::CSV_HEADER);
            for t in tables {
                for line in t.to_csv().lines().skip(1) {
                    s.push_str(line);
                    s.push('\n');
                }
            }
            s
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CritRow {
    pub statistic: String,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub lower: f64,
    pub upper: f64,
    pub n_draws: usize,
    pub seed: u64,
}

pub fn crit_rows(rows: &[CritRow], format: Format) -> String {
    match format {
        Format::Json => pretty(rows),
        Format::Csv => {
            let mut s = format!("{CRIT_CSV_HEADER}\n");
            for r in rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.statistic, r.n, r.m, r.tau, r.lower, r.upper, r.n_draws, r.seed
                ));
            }
            s
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Histogram {
    pub q025: f64,
    pub q975: f64,
    pub n_draws: usize,
    pub seed: u64,
    pub bin_left: Vec<f64>,
    pub bin_right: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    /// Equal-width bins over [min, max], normalized to unit area.
    pub fn from_sorted(values: &[f64], n_bins: usize, q025: f64, q975: f64, seed: u64) -> Self {
        let lo = values[0];
        let hi = values[values.len() - 1];
        let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; n_bins];
        for v in values {
            let i = (((v - lo) / width) as usize).min(n_bins - 1);
            counts[i] += 1;
        }
        let total = values.len() as f64 * width;
        Self {
            q025,
            q975,
            n_draws: values.len(),
            seed,
            bin_left: (0..n_bins).map(|i| lo + i as f64 * width).collect(),
            bin_right: (0..n_bins).map(|i| lo + (i + 1) as f64 * width).collect(),
            density: counts.iter().map(|c| *c as f64 / total).collect(),
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => pretty(self),
            Format::Csv => {
                let mut s = format!(
                    "# q025={},q975={},n_draws={},seed={}\n{HISTOGRAM_CSV_HEADER}\n",
                    self.q025, self.q975, self.n_draws, self.seed
                );
                for i in 0..self.density.len() {
                    s.push_str(&format!("{},{},{}\n", self.bin_left[i], self.bin_right[i], self.density[i]));
                }
                s
            }
        }
    }
}
