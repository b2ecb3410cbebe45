//! Report files written by a sweep and re-derivable from its stored CSVs.
//!
//! A sweep directory holds:
//! - `configs.csv`: one row per configuration
//! - `series_<label>.csv`: cumulative reward per episode for each repetition, plus the mean
//! - `totals.csv`: final cumulative reward per repetition
//! - `plans.csv`: greedy plan of each repetition's final policy
//! - `summary.csv`: mean cumulative reward, uncertainty levels by advice mode
//! - `baselines.csv`: mean cumulative reward of the unadvised and random agents
//! - `ttests.csv`: Welch tests between every pair of configurations
//! - `chart_linear.svg`, `chart_log.svg`: mean cumulative reward per episode

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::chart::{render_chart, Scale};
use super::stats::{mean, welch_t_test};
use super::{AgentKind, ExperimentConfig, ExperimentError, ExperimentReport, PairwiseTest, SweepResult};
use crate::format::write_atomic;

pub const TOTALS_FILE: &str = "totals.csv";

/// The part of a report that survives in CSV form.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredExperiment {
    pub label: String,
    pub agent: AgentKind,
    pub advice_label: Option<String>,
    pub uncertainty: Option<f64>,
    pub seeds: Vec<u64>,
    pub totals: Vec<f64>,
    pub mean_series: Vec<f64>,
}

impl From<&ExperimentReport> for StoredExperiment {
    fn from(r: &ExperimentReport) -> Self {
        Self {
            label: r.label.clone(),
            agent: r.agent,
            advice_label: r.advice_label.clone(),
            uncertainty: r.uncertainty,
            seeds: r.repetitions.iter().map(|x| x.seed).collect(),
            totals: r.totals(),
            mean_series: r.mean_series(),
        }
    }
}

fn series_file(label: &str) -> String {
    format!("series_{label}.csv")
}

fn io_error(path: &Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.to_owned(),
        source,
    }
}

fn data_error(path: &Path, message: impl ToString) -> ExperimentError {
    ExperimentError::Data {
        path: path.to_owned(),
        message: message.to_string(),
    }
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

fn save(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    let path = dir.join(name);
    write_atomic(&path, bytes).map_err(|e| io_error(&path, e))?;
    written.push(path);
    Ok(())
}

fn opt_string<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Welch tests over every pair of samples, in input order.
pub fn pairwise(samples: &[(&str, &[f64])]) -> Result<Vec<PairwiseTest>, ExperimentError> {
    let mut out = Vec::new();
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            match welch_t_test(samples[i].1, samples[j].1) {
                Ok(result) => out.push(PairwiseTest {
                    label_a: samples[i].0.to_owned(),
                    label_b: samples[j].0.to_owned(),
                    result,
                }),
                Err(ExperimentError::InsufficientSample(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Writes every sweep artifact into `dir`, creating it if needed.
pub fn write_sweep(
    dir: &Path,
    configs: &[ExperimentConfig],
    result: &SweepResult,
    base_seed: u64,
) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut written = Vec::new();

    let manifest = configs.iter().map(|c| {
        vec![
            c.label.clone(),
            c.agent.to_string(),
            opt_string(&c.advice.as_ref().map(|m| m.label.clone())),
            opt_string(&c.uncertainty),
            c.repetitions.to_string(),
            c.trainer.episodes.to_string(),
            c.trainer.alpha.to_string(),
            c.trainer.gamma.to_string(),
            c.trainer.max_steps.to_string(),
            base_seed.to_string(),
        ]
    });
    let header = [
        "label", "agent", "advice", "uncertainty", "repetitions", "episodes", "alpha", "gamma", "max_steps", "base_seed",
    ];
    save(dir, "configs.csv", &to_csv(&header, manifest), &mut written)?;

    for report in &result.reports {
        let mean_series = report.mean_series();
        let mut header: Vec<String> = vec!["episode".into()];
        header.extend((0..report.repetitions.len()).map(|i| format!("rep_{i}")));
        header.push("mean".into());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = mean_series.iter().enumerate().map(|(k, m)| {
            let mut row = vec![(k + 1).to_string()];
            row.extend(report.repetitions.iter().map(|r| r.cumulative[k].to_string()));
            row.push(m.to_string());
            row
        });
        save(dir, &series_file(&report.label), &to_csv(&header, rows), &mut written)?;
    }

    let totals = result.reports.iter().flat_map(|r| {
        r.repetitions.iter().enumerate().map(move |(i, rep)| {
            vec![
                r.label.clone(),
                r.agent.to_string(),
                opt_string(&r.advice_label),
                opt_string(&r.uncertainty),
                i.to_string(),
                rep.seed.to_string(),
                rep.total().to_string(),
            ]
        })
    });
    let header = ["label", "agent", "advice", "uncertainty", "repetition", "seed", "cumulative_reward"];
    save(dir, TOTALS_FILE, &to_csv(&header, totals), &mut written)?;

    let plans = result.reports.iter().flat_map(|r| {
        r.repetitions.iter().enumerate().map(move |(i, rep)| {
            vec![
                r.label.clone(),
                i.to_string(),
                rep.plan.goal_reached.to_string(),
                rep.plan.rules.len().to_string(),
                rep.plan.rules.join(" "),
            ]
        })
    });
    save(
        dir,
        "plans.csv",
        &to_csv(&["label", "repetition", "goal_reached", "length", "rules"], plans),
        &mut written,
    )?;

    let stored: Vec<StoredExperiment> = result.reports.iter().map(StoredExperiment::from).collect();
    written.extend(write_derived(dir, &stored)?);
    Ok(written)
}

/// Writes the summary, baselines, t-test matrix and charts for `stored`.
pub fn write_derived(dir: &Path, stored: &[StoredExperiment]) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut written = Vec::new();

    let mut modes: Vec<&str> = Vec::new();
    let mut cells: BTreeMap<(String, &str), f64> = BTreeMap::new();
    let mut levels: Vec<f64> = Vec::new();
    for s in stored {
        if let (Some(mode), Some(u)) = (&s.advice_label, s.uncertainty) {
            if !modes.contains(&mode.as_str()) {
                modes.push(mode);
            }
            if !levels.contains(&u) {
                levels.push(u);
            }
            cells.insert((format!("{u:.2}"), mode), mean(&s.totals));
        }
    }
    levels.sort_by(f64::total_cmp);
    let mut header = vec!["uncertainty"];
    header.extend(&modes);
    let rows = levels.iter().map(|u| {
        let key = format!("{u:.2}");
        let mut row = vec![key.clone()];
        row.extend(
            modes
                .iter()
                .map(|m| cells.get(&(key.clone(), *m)).map(|v| format!("{v:.3}")).unwrap_or_default()),
        );
        row
    });
    save(dir, "summary.csv", &to_csv(&header, rows), &mut written)?;

    let baselines = stored
        .iter()
        .filter(|s| s.agent != AgentKind::Advised)
        .map(|s| vec![s.label.clone(), s.agent.to_string(), format!("{:.3}", mean(&s.totals))]);
    save(
        dir,
        "baselines.csv",
        &to_csv(&["label", "agent", "mean_cumulative_reward"], baselines),
        &mut written,
    )?;

    let samples: Vec<(&str, &[f64])> = stored.iter().map(|s| (s.label.as_str(), s.totals.as_slice())).collect();
    let tests = pairwise(&samples)?;
    let rows = tests.iter().map(|t| {
        vec![
            t.label_a.clone(),
            t.label_b.clone(),
            t.result.t.to_string(),
            t.result.df.to_string(),
            t.result.p.to_string(),
        ]
    });
    save(dir, "ttests.csv", &to_csv(&["label_a", "label_b", "t", "df", "p"], rows), &mut written)?;

    let series: Vec<(&str, &[f64])> = stored
        .iter()
        .map(|s| (s.label.as_str(), s.mean_series.as_slice()))
        .collect();
    let title = "Mean cumulative reward";
    save(dir, "chart_linear.svg", render_chart(title, &series, Scale::Linear).as_bytes(), &mut written)?;
    save(
        dir,
        "chart_log.svg",
        render_chart(&format!("{title} (log scale)"), &series, Scale::Log).as_bytes(),
        &mut written,
    )?;
    Ok(written)
}

fn read_csv(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>), ExperimentError> {
    let text = fs::read(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_slice());
    let header = reader.headers().map_err(|e| data_error(path, e))?.clone();
    let rows = reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| data_error(path, e))?;
    Ok((header, rows))
}

fn field<T: std::str::FromStr>(path: &Path, row: &csv::StringRecord, index: usize, name: &str) -> Result<T, ExperimentError> {
    let line = row.position().map_or(0, |p| p.line());
    row.get(index)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| data_error(path, format!("line {line}: bad or missing `{name}`")))
}

/// Reads the stored totals and mean series back from a sweep directory.
pub fn load_stored(dir: &Path) -> Result<Vec<StoredExperiment>, ExperimentError> {
    let path = dir.join(TOTALS_FILE);
    let (header, rows) = read_csv(&path)?;
    let expected = ["label", "agent", "advice", "uncertainty", "repetition", "seed", "cumulative_reward"];
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(data_error(&path, format!("line 1: expected header {}", expected.join(","))));
    }
    let mut stored: Vec<StoredExperiment> = Vec::new();
    for row in &rows {
        let label: String = field(&path, row, 0, "label")?;
        let agent: AgentKind = field(&path, row, 1, "agent")?;
        let advice = row.get(2).filter(|s| !s.is_empty()).map(str::to_owned);
        let uncertainty = match row.get(3) {
            Some("") | None => None,
            Some(_) => Some(field(&path, row, 3, "uncertainty")?),
        };
        let seed: u64 = field(&path, row, 5, "seed")?;
        let total: f64 = field(&path, row, 6, "cumulative_reward")?;
        match stored.last_mut() {
            Some(s) if s.label == label => {
                s.seeds.push(seed);
                s.totals.push(total);
            }
            _ => {
                if stored.iter().any(|s| s.label == label) {
                    let line = row.position().map_or(0, |p| p.line());
                    return Err(data_error(&path, format!("line {line}: rows of `{label}` are not contiguous")));
                }
                stored.push(StoredExperiment {
                    label,
                    agent,
                    advice_label: advice,
                    uncertainty,
                    seeds: vec![seed],
                    totals: vec![total],
                    mean_series: Vec::new(),
                });
            }
        }
    }
    if stored.is_empty() {
        return Err(data_error(&path, "no experiments recorded"));
    }
    for s in &mut stored {
        let path = dir.join(series_file(&s.label));
        let (header, rows) = read_csv(&path)?;
        let mean_col = header
            .iter()
            .position(|h| h == "mean")
            .ok_or_else(|| data_error(&path, "line 1: missing `mean` column"))?;
        s.mean_series = rows
            .iter()
            .map(|row| field(&path, row, mean_col, "mean"))
            .collect::<Result<_, _>>()?;
    }
    Ok(stored)
}

/// Recomputes the derived files of a sweep directory from its stored CSVs.
pub fn regenerate(dir: &Path) -> Result<Vec<StoredExperiment>, ExperimentError> {
    let stored = load_stored(dir)?;
    write_derived(dir, &stored)?;
    Ok(stored)
}
