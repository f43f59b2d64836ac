use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::svg::{grouped_bar_chart, BarChart, Reference};
use super::BenchError;
use crate::costmodel::{cost_report, CostReport};
use crate::detect::Metrics;
use crate::sigsim::DatasetSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed { metrics: Metrics, best_epoch: usize, epochs: usize },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub entry: String,
    pub repeat: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: RunOutcome,
}

impl RunRecord {
    pub fn metrics(&self) -> Option<&Metrics> {
        match &self.outcome {
            RunOutcome::Completed { metrics, .. } => Some(metrics),
            RunOutcome::Failed { .. } => None,
        }
    }
}

/// Aggregates over completed runs only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_completed: usize,
    pub median_p_d: f64,
    pub max_p_d: f64,
    pub median_p_fd: f64,
    pub min_p_fd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub name: String,
    pub family: String,
    pub train_size: u64,
    pub repeats: usize,
    pub costs: CostReport,
    pub runs: Vec<RunRecord>,
    /// Absent when every run failed.
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub master_seed: u64,
    pub dataset: DatasetSpec,
    /// Energy detector calibrated on validation, evaluated on test.
    pub baseline: Metrics,
    pub entries: Vec<EntryReport>,
}

/// Median with the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn summarize(runs: &[RunRecord]) -> Option<Summary> {
    let ms: Vec<&Metrics> = runs.iter().filter_map(RunRecord::metrics).collect();
    let p_d: Vec<f64> = ms.iter().map(|m| m.p_d).collect();
    let p_fd: Vec<f64> = ms.iter().map(|m| m.p_fd).collect();
    Some(Summary {
        n_completed: ms.len(),
        median_p_d: median(&p_d)?,
        max_p_d: p_d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        median_p_fd: median(&p_fd)?,
        min_p_fd: p_fd.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Builds the report from run records, in config order.
pub fn aggregate(
    cfg: &ExperimentConfig,
    dataset: &DatasetSpec,
    baseline: Metrics,
    runs: &[RunRecord],
) -> Result<ExperimentReport, BenchError> {
    let entries = cfg
        .entries
        .iter()
        .map(|e| {
            let mut own: Vec<RunRecord> =
                runs.iter().filter(|r| r.entry == e.name && r.repeat < e.repeats).cloned().collect();
            own.sort_by_key(|r| r.repeat);
            Ok(EntryReport {
                name: e.name.clone(),
                family: e.arch.family_name().to_string(),
                train_size: e.train_size.unwrap_or(dataset.n_train),
                repeats: e.repeats,
                costs: cost_report(&e.arch)?,
                summary: summarize(&own),
                runs: own,
            })
        })
        .collect::<Result<_, BenchError>>()?;
    Ok(ExperimentReport { master_seed: cfg.master_seed, dataset: dataset.clone(), baseline, entries })
}

/// One row per run.
pub fn runs_csv(report: &ExperimentReport) -> String {
    let mut out =
        String::from("name,train_size,repeat,seed,status,p_d,p_fa,p_fd,threshold,n_busy,n_idle,best_epoch,epochs\n");
    for e in &report.entries {
        for r in &e.runs {
            match &r.outcome {
                RunOutcome::Completed { metrics: m, best_epoch, epochs } => out.push_str(&format!(
                    "{},{},{},{},completed,{},{},{},{},{},{},{},{}\n",
                    e.name, e.train_size, r.repeat, r.seed, m.p_d, m.p_fa, m.p_fd, m.threshold, m.n_busy, m.n_idle,
                    best_epoch, epochs
                )),
                RunOutcome::Failed { .. } => {
                    out.push_str(&format!("{},{},{},{},failed,,,,,,,,\n", e.name, e.train_size, r.repeat, r.seed))
                }
            }
        }
    }
    out
}

/// One row per entry plus the energy-detector baseline; failed entries have
/// empty metric cells.
pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "name,family,train_size,n_completed,median_p_d,max_p_d,median_p_fd,min_p_fd,n_op,m_peak,m_total\n",
    );
    for e in &report.entries {
        let metrics = e.summary.as_ref().map_or_else(
            || "0,,,,".to_string(),
            |s| format!("{},{},{},{},{}", s.n_completed, s.median_p_d, s.max_p_d, s.median_p_fd, s.min_p_fd),
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.name, e.family, e.train_size, metrics, e.costs.n_op, e.costs.m_peak, e.costs.m_total
        ));
    }
    let b = &report.baseline;
    out.push_str(&format!(
        "energy_detector,energy,,1,{},{},{},{},,,\n",
        b.p_d, b.p_d, b.p_fd, b.p_fd
    ));
    out
}

/// Rendered figures.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartSet {
    pub p_fd: String,
    pub ops: String,
    pub memory: String,
    /// Summary rows of every input report.
    pub csv: String,
}

fn ordered_unique<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

/// Grouped bar charts across one or more reports: median P_fd per
/// architecture grouped by training-set size (log axis, energy detector as a
/// reference line), operation counts (log axis) and memory (log axis).
pub fn render_charts(reports: &[ExperimentReport]) -> Result<ChartSet, BenchError> {
    if reports.is_empty() {
        return Err(BenchError::MissingField("no reports given".into()));
    }
    let entries: Vec<&EntryReport> = reports.iter().flat_map(|r| &r.entries).collect();
    if entries.is_empty() {
        return Err(BenchError::MissingField("reports contain no entries".into()));
    }
    let sizes = ordered_unique(entries.iter().map(|e| e.train_size));
    let mut sizes_sorted = sizes.clone();
    sizes_sorted.sort_unstable();
    let names = ordered_unique(entries.iter().map(|e| e.name.clone()));
    let find = |size: u64, name: &str| entries.iter().find(|e| e.train_size == size && e.name == name);
    let size_labels: Vec<String> = sizes_sorted.iter().map(|&s| format_size(s)).collect();

    let pfd_values: Vec<Vec<Option<f64>>> = sizes_sorted
        .iter()
        .map(|&s| names.iter().map(|n| find(s, n).and_then(|e| e.summary.as_ref()).map(|x| x.median_p_fd)).collect())
        .collect();
    let references: Vec<Reference> = sizes_sorted
        .iter()
        .enumerate()
        .filter_map(|(g, &s)| {
            reports
                .iter()
                .find(|r| r.entries.iter().any(|e| e.train_size == s))
                .map(|r| Reference { group: g, value: r.baseline.p_fd, label: "energy detector".into() })
        })
        .collect();
    let p_fd = grouped_bar_chart(&BarChart {
        title: "Median false dismissal probability (P_fa = 1%)".into(),
        y_label: "P_fd".into(),
        groups: size_labels.clone(),
        series: names.clone(),
        values: pfd_values,
        log_scale: true,
        references,
    });

    let ops_values = sizes_sorted
        .iter()
        .map(|&s| names.iter().map(|n| find(s, n).map(|e| e.costs.n_op as f64)).collect())
        .collect();
    let ops = grouped_bar_chart(&BarChart {
        title: "Operation count per inference".into(),
        y_label: "FLOPs".into(),
        groups: size_labels.clone(),
        series: names.clone(),
        values: ops_values,
        log_scale: true,
        references: Vec::new(),
    });

    let arch_groups = ordered_unique(entries.iter().map(|e| (e.name.clone(), e.train_size)));
    let memory = grouped_bar_chart(&BarChart {
        title: "Memory requirement per inference".into(),
        y_label: "floats".into(),
        groups: arch_groups.iter().map(|(n, s)| format!("{n} ({})", format_size(*s))).collect(),
        series: vec!["peak".into(), "total".into()],
        values: arch_groups
            .iter()
            .map(|(n, s)| {
                let e = find(*s, n).expect("group from entries");
                vec![Some(e.costs.m_peak as f64), Some(e.costs.m_total as f64)]
            })
            .collect(),
        log_scale: true,
        references: Vec::new(),
    });

    let mut csv = String::new();
    for (i, r) in reports.iter().enumerate() {
        let s = summary_csv(r);
        csv.push_str(if i == 0 { &s } else { s.split_once('\n').map_or("", |(_, rest)| rest) });
    }
    Ok(ChartSet { p_fd, ops, memory, csv })
}

/// `1000` → `1E+03`, matching how training-set sizes are usually quoted.
fn format_size(n: u64) -> String {
    if n == 0 {
        return "0".into();
    }
    let exp = (n as f64).log10().floor() as i32;
    let mant = n as f64 / 10f64.powi(exp);
    if (mant - mant.round()).abs() < 1e-9 {
        format!("{}E+{exp:02}", mant.round())
    } else {
        format!("{mant:.1}E+{exp:02}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_even_empty() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn size_labels() {
        assert_eq!(format_size(1000), "1E+03");
        assert_eq!(format_size(100_000), "1E+05");
        assert_eq!(format_size(8_000_000), "8E+06");
        assert_eq!(format_size(2500), "2.5E+03");
    }

    #[test]
    fn summary_skips_failures() {
        let m = |p_d: f64| Metrics { p_d, p_fa: 0.01, p_fd: 1.0 - p_d, threshold: 0.5, n_busy: 10, n_idle: 10 };
        let runs = vec![
            RunRecord { entry: "a".into(), repeat: 0, seed: 1, outcome: RunOutcome::Completed { metrics: m(0.5), best_epoch: 1, epochs: 2 } },
            RunRecord { entry: "a".into(), repeat: 1, seed: 2, outcome: RunOutcome::Failed { error: "x".into() } },
            RunRecord { entry: "a".into(), repeat: 2, seed: 3, outcome: RunOutcome::Completed { metrics: m(0.7), best_epoch: 1, epochs: 2 } },
        ];
        let s = summarize(&runs).unwrap();
        assert_eq!(s.n_completed, 2);
        assert!((s.median_p_d - 0.6).abs() < 1e-12);
        assert_eq!(s.max_p_d, 0.7);
        assert!((s.min_p_fd - 0.3).abs() < 1e-12);
        assert!(summarize(&runs[1..2]).is_none());
    }
}
