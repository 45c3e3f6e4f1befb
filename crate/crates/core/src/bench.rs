//! Seeded synthetic benchmark: a grid of noise settings × ranks × methods,
//! each cell averaged over independent random matrices.
//!
//! Every replication gets two child seeds of the master seed, one for the
//! instance and one for the (shared) random start of the methods, so results
//! do not depend on scheduling and the instance never shares a random stream
//! with the initializer.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{fit, fit_cwm_uniform, FitOptions};
use crate::metrics::errors;
use crate::synth::{benchmark_noise_rows, derive_seed, make_instance, NoiseSpec};
use crate::{Error, FactorPair, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// EM under the MoAL noise model.
    Aq,
    /// Plain L1 factorization by cyclic weighted medians, uniform weights.
    CwmUniform,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Aq => "AQ",
            Method::CwmUniform => "CWM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub name: String,
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub m: usize,
    pub n: usize,
    pub ranks: Vec<usize>,
    pub replications: usize,
    pub missing_fraction: f64,
    pub noise_rows: Vec<NoiseRow>,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    /// Initial mixture size for [`Method::Aq`].
    pub components: usize,
    /// Outer iterations for AQ, sweeps for the uniform baseline.
    pub max_iterations: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            m: 40,
            n: 20,
            ranks: vec![4, 8],
            replications: 30,
            missing_fraction: 0.2,
            noise_rows: benchmark_noise_rows()
                .into_iter()
                .map(|(name, noise)| NoiseRow { name, noise })
                .collect(),
            methods: vec![Method::Aq, Method::CwmUniform],
            master_seed: 2024,
            components: 4,
            max_iterations: 100,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::validation("matrix dimensions must be positive"));
        }
        if self.replications == 0 {
            return Err(Error::validation("replications must be at least 1"));
        }
        if self.ranks.is_empty() {
            return Err(Error::validation("at least one rank is required"));
        }
        for &r in &self.ranks {
            if r == 0 || r > self.m.min(self.n) {
                return Err(Error::validation(format!(
                    "rank {r} is outside 1..={}",
                    self.m.min(self.n)
                )));
            }
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return Err(Error::validation(format!(
                "missing_fraction must lie in [0,1), got {}",
                self.missing_fraction
            )));
        }
        if self.noise_rows.is_empty() {
            return Err(Error::validation("at least one noise row is required"));
        }
        for row in &self.noise_rows {
            row.noise
                .validate()
                .map_err(|e| Error::validation(format!("noise row '{}': {e}", row.name)))?;
        }
        if self.methods.is_empty() {
            return Err(Error::validation("at least one method is required"));
        }
        for (k, m) in self.methods.iter().enumerate() {
            if self.methods[..k].contains(m) {
                return Err(Error::validation(format!("method {m:?} listed twice")));
            }
        }
        self.fit_options(self.ranks[0]).validate()
    }

    pub fn fit_options(&self, rank: usize) -> FitOptions {
        FitOptions {
            components: self.components,
            max_iterations: self.max_iterations,
            ..FitOptions::new(rank)
        }
    }

    /// `(instance seed, fit seed)` of one replication; `cell` enumerates
    /// (noise row, rank) pairs row-major.
    pub fn seeds(&self, cell: usize, replication: usize) -> (u64, u64) {
        let job = (cell * self.replications + replication) as u64;
        (
            derive_seed(self.master_seed, 2 * job),
            derive_seed(self.master_seed, 2 * job + 1),
        )
    }
}

/// Errors of one method on one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub noise_row: String,
    pub rank: usize,
    pub method: Method,
    pub replication: usize,
    pub instance_seed: u64,
    pub fit_seed: u64,
    /// Against the observed matrix (noisy where observed, clean where missing).
    pub l1: f64,
    pub l2: f64,
    /// Against the noise-free product.
    pub l1_truth: f64,
    pub l2_truth: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_components: Option<usize>,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

impl Summary {
    /// Mean and median; the median of an even count averages the middle pair.
    pub fn of(values: &[f64]) -> Summary {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len();
        let median = if k % 2 == 1 {
            sorted[k / 2]
        } else {
            0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
        };
        Summary {
            mean: values.iter().sum::<f64>() / k as f64,
            median,
        }
    }
}

/// Aggregate over the replications of one (noise row, rank, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub noise_row: String,
    pub rank: usize,
    pub method: Method,
    pub replications: usize,
    pub l1: Summary,
    pub l2: Summary,
    pub l1_truth: Summary,
    pub l2_truth: Summary,
    pub convergence_rate: f64,
    /// Wall-clock time; omitted from JSON unless kept explicitly so that
    /// reruns serialize identically.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub config: BenchmarkConfig,
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RunRecord>,
}

impl BenchmarkResult {
    pub fn cell(&self, noise_row: &str, rank: usize, method: Method) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.noise_row == noise_row && c.rank == rank && c.method == method)
    }

    /// Drops wall-clock times from the summaries.
    pub fn without_timings(mut self) -> Self {
        for c in &mut self.cells {
            c.mean_seconds = None;
        }
        self
    }
}

fn run_one(
    cfg: &BenchmarkConfig,
    row: &NoiseRow,
    rank: usize,
    cell: usize,
    replication: usize,
) -> Result<Vec<RunRecord>> {
    let (instance_seed, fit_seed) = cfg.seeds(cell, replication);
    let inst = make_instance(
        cfg.m,
        cfg.n,
        rank,
        cfg.missing_fraction,
        Some(&row.noise),
        instance_seed,
    )?;
    let opts = cfg.fit_options(rank);
    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let (factors, iterations, converged, final_components): (FactorPair, usize, bool, Option<usize>) =
                match method {
                    Method::Aq => {
                        let out = fit(&inst.observed, &opts, fit_seed)?;
                        (
                            out.factors,
                            out.report.iterations,
                            out.report.converged,
                            Some(out.report.final_s),
                        )
                    }
                    Method::CwmUniform => {
                        let (f, sweeps) = fit_cwm_uniform(&inst.observed, &opts, fit_seed)?;
                        (f, sweeps, sweeps < opts.max_iterations, None)
                    }
                };
            let seconds = start.elapsed().as_secs_f64();
            let noisy = errors(inst.observed.values(), &factors)?;
            let truth = errors(&inst.ground_truth, &factors)?;
            Ok(RunRecord {
                noise_row: row.name.clone(),
                rank,
                method,
                replication,
                instance_seed,
                fit_seed,
                l1: noisy.l1,
                l2: noisy.l2,
                l1_truth: truth.l1,
                l2_truth: truth.l2,
                iterations,
                converged,
                final_components,
                seconds,
            })
        })
        .collect()
}

/// Runs the whole grid (in parallel) and aggregates it. Apart from the
/// timings the result depends only on the configuration.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkResult> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for (ri, row) in cfg.noise_rows.iter().enumerate() {
        for (ki, &rank) in cfg.ranks.iter().enumerate() {
            let cell = ri * cfg.ranks.len() + ki;
            for rep in 0..cfg.replications {
                jobs.push((row, rank, cell, rep));
            }
        }
    }
    let per_job: Vec<Vec<RunRecord>> = jobs
        .par_iter()
        .map(|&(row, rank, cell, rep)| run_one(cfg, row, rank, cell, rep))
        .collect::<Result<_>>()?;
    let runs: Vec<RunRecord> = per_job.into_iter().flatten().collect();

    let mut cells = Vec::new();
    for row in &cfg.noise_rows {
        for &rank in &cfg.ranks {
            for &method in &cfg.methods {
                let sel: Vec<&RunRecord> = runs
                    .iter()
                    .filter(|r| r.noise_row == row.name && r.rank == rank && r.method == method)
                    .collect();
                let pick = |f: fn(&RunRecord) -> f64| Summary::of(&sel.iter().map(|r| f(r)).collect::<Vec<_>>());
                cells.push(CellSummary {
                    noise_row: row.name.clone(),
                    rank,
                    method,
                    replications: sel.len(),
                    l1: pick(|r| r.l1),
                    l2: pick(|r| r.l2),
                    l1_truth: pick(|r| r.l1_truth),
                    l2_truth: pick(|r| r.l2_truth),
                    convergence_rate: sel.iter().filter(|r| r.converged).count() as f64 / sel.len() as f64,
                    mean_seconds: Some(sel.iter().map(|r| r.seconds).sum::<f64>() / sel.len() as f64),
                });
            }
        }
    }
    Ok(BenchmarkResult {
        config: cfg.clone(),
        cells,
        runs,
    })
}

/// One aligned table per rank: noise rows down, mean L1 / L2 / ground-truth
/// L1 (and time when available) per method across, then mean and median
/// rows over the noise settings.
pub fn render_table(res: &BenchmarkResult) -> String {
    let cfg = &res.config;
    let name_w = cfg
        .noise_rows
        .iter()
        .map(|r| r.name.chars().count())
        .max()
        .unwrap_or(0)
        .max("Median".len());
    let with_time = res.cells.iter().all(|c| c.mean_seconds.is_some());
    type Col = (&'static str, fn(&CellSummary) -> f64);
    let mut blocks: Vec<Col> = vec![
        ("L1", |c| c.l1.mean),
        ("L2", |c| c.l2.mean),
        ("L1 truth", |c| c.l1_truth.mean),
    ];
    if with_time {
        blocks.push(("time s", |c| c.mean_seconds.unwrap_or(f64::NAN)));
    }
    let col_w = 10;

    let mut out = String::new();
    for &rank in &cfg.ranks {
        let _ = writeln!(
            out,
            "rank {rank}, {}x{}, {} replications, {:.0}% missing",
            cfg.m,
            cfg.n,
            cfg.replications,
            100.0 * cfg.missing_fraction
        );
        let mut header = format!("{:<name_w$}", "");
        let mut sub = format!("{:<name_w$}", "Noise");
        for (title, _) in &blocks {
            let width = cfg.methods.len() * (col_w + 1);
            header.push_str(&format!(" |{title:^width$}"));
            sub.push_str(" |");
            for m in &cfg.methods {
                sub.push_str(&format!(" {:>col_w$}", m.label()));
            }
        }
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{sub}");
        let _ = writeln!(out, "{}", "-".repeat(sub.chars().count()));

        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); blocks.len() * cfg.methods.len()];
        for row in &cfg.noise_rows {
            let mut line = format!("{:<name_w$}", row.name);
            for (b, (_, get)) in blocks.iter().enumerate() {
                line.push_str(" |");
                for (k, &m) in cfg.methods.iter().enumerate() {
                    let v = res.cell(&row.name, rank, m).map(get).unwrap_or(f64::NAN);
                    columns[b * cfg.methods.len() + k].push(v);
                    line.push_str(&format!(" {}", fmt_cell(v, col_w)));
                }
            }
            let _ = writeln!(out, "{line}");
        }
        let _ = writeln!(out, "{}", "-".repeat(sub.chars().count()));
        for (label, agg) in [("Mean", 0usize), ("Median", 1)] {
            let mut line = format!("{label:<name_w$}");
            for b in 0..blocks.len() {
                line.push_str(" |");
                for k in 0..cfg.methods.len() {
                    let s = Summary::of(&columns[b * cfg.methods.len() + k]);
                    let v = if agg == 0 { s.mean } else { s.median };
                    line.push_str(&format!(" {}", fmt_cell(v, col_w)));
                }
            }
            let _ = writeln!(out, "{line}");
        }
        out.push('\n');
    }
    out
}

fn fmt_cell(v: f64, w: usize) -> String {
    if v.abs() >= 1e4 {
        format!("{v:>w$.3e}")
    } else {
        format!("{v:>w$.4}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchmarkConfig {
        BenchmarkConfig {
            m: 8,
            n: 6,
            ranks: vec![1, 2],
            replications: 3,
            noise_rows: vec![NoiseRow {
                name: "lap".into(),
                noise: NoiseSpec::Laplace {
                    location: 0.0,
                    scale: 0.5,
                },
            }],
            max_iterations: 5,
            ..BenchmarkConfig::default()
        }
    }

    #[test]
    fn summary_mean_and_median() {
        let s = Summary::of(&[3.0, 1.0, 2.0, 10.0]);
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.median, 2.5);
        assert_eq!(Summary::of(&[5.0, 1.0, 3.0]).median, 3.0);
    }

    #[test]
    fn validation() {
        assert!(BenchmarkConfig::default().validate().is_ok());
        let mut c = tiny();
        c.replications = 0;
        assert!(c.validate().is_err());
        let mut c = tiny();
        c.ranks = vec![7];
        assert!(c.validate().is_err());
        let mut c = tiny();
        c.methods = vec![Method::Aq, Method::Aq];
        assert!(c.validate().is_err());
        let mut c = tiny();
        c.noise_rows[0].noise = NoiseSpec::Gaussian { sigma: -1.0 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn seeds_are_distinct() {
        let c = BenchmarkConfig::default();
        let mut all: Vec<u64> = (0..16)
            .flat_map(|cell| (0..30).flat_map(move |rep| [cell, rep]))
            .collect::<Vec<_>>()
            .chunks(2)
            .flat_map(|p| {
                let (a, b) = c.seeds(p[0], p[1]);
                [a, b]
            })
            .collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), n);
    }

    #[test]
    fn aggregates_match_records() {
        let res = run_benchmark(&tiny()).unwrap();
        assert_eq!(res.runs.len(), 2 * 3 * 2);
        assert_eq!(res.cells.len(), 4);
        for cell in &res.cells {
            assert_eq!(cell.replications, 3);
            let l1: Vec<f64> = res
                .runs
                .iter()
                .filter(|r| r.rank == cell.rank && r.method == cell.method)
                .map(|r| r.l1)
                .collect();
            assert_eq!(cell.l1, Summary::of(&l1));
        }
        let table = render_table(&res);
        assert!(table.contains("rank 1") && table.contains("Median"));
    }
}
