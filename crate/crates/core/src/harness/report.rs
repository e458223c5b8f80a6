//! CSV summaries and SVG plots of run records.

use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::Serialize;

use super::config::Algorithm;
use super::record::RunRecord;
use crate::error::{Error, Result};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

#[derive(Debug, Serialize)]
struct WorstRow {
    timestep: usize,
    worst_agent: usize,
    worst_reward: f64,
    worst_cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub run: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub worst_cumulative: f64,
    pub final_worst_reward: f64,
}

impl SummaryRow {
    pub fn of(record: &RunRecord) -> Self {
        Self {
            run: label(record),
            algorithm: record.meta.algorithm,
            seed: record.meta.seed,
            worst_cumulative: record.worst_cumulative(),
            final_worst_reward: record.final_worst_reward().unwrap_or(f64::NAN),
        }
    }
}

fn label(record: &RunRecord) -> String {
    if record.meta.name.is_empty() {
        format!("{} seed {}", record.meta.algorithm, record.meta.seed)
    } else {
        format!("{} {} seed {}", record.meta.name, record.meta.algorithm, record.meta.seed)
    }
}

fn plot_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::Plot(format!("{e:?}"))
}

/// Writes the record files plus `worst.csv` and `worst_reward.svg` into `dir`.
pub fn write_run(record: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    record.write_dir(dir)?;
    let worst = dir.join("worst.csv");
    let mut w = csv::Writer::from_path(&worst)?;
    for s in &record.steps {
        let (agent, reward) = s.worst();
        w.serialize(WorstRow {
            timestep: s.timestep,
            worst_agent: agent + 1,
            worst_reward: reward,
            worst_cumulative: s.cumulative.iter().copied().fold(f64::INFINITY, f64::min),
        })?;
    }
    w.flush().map_err(|e| Error::io(&worst, e))?;
    let plot = dir.join("worst_reward.svg");
    plot_worst(std::slice::from_ref(record), &plot)?;
    Ok(vec![
        dir.join("records.csv"),
        dir.join("actions.csv"),
        dir.join("timing.csv"),
        dir.join("meta.json"),
        worst,
        plot,
    ])
}

/// Steady-state worst reward of the first open-loop optimum among `records`.
pub fn optimal_asymptote(records: &[RunRecord]) -> Option<f64> {
    records
        .iter()
        .find(|r| r.meta.algorithm == Algorithm::Optimal)
        .and_then(RunRecord::final_worst_reward)
}

/// Worst-agent instantaneous reward against timestep, one line per record.
/// When an open-loop optimum is among the records its final value is drawn
/// as a horizontal reference line.
pub fn plot_worst(records: &[RunRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::arg("nothing to plot"));
    }
    let series: Vec<Vec<f64>> = records.iter().map(RunRecord::worst_rewards).collect();
    let t_max = series.iter().map(Vec::len).max().unwrap_or(1).max(2) - 1;
    let lo = series.iter().flatten().copied().fold(0.0, f64::min);
    let lo = if lo < 0.0 { lo * 1.05 } else { -1.0 };
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("worst-agent reward", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..t_max as f64, lo..0.05 * -lo)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("timestep")
        .y_desc("reward")
        .draw()
        .map_err(plot_err)?;
    for (k, (r, ys)) in records.iter().zip(&series).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(
                ys.iter().enumerate().map(|(t, &y)| (t as f64, y)),
                color.stroke_width(2),
            ))
            .map_err(plot_err)?
            .label(label(r))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    if records.len() > 1 {
        if let Some(level) = optimal_asymptote(records) {
            chart
                .draw_series(DashedLineSeries::new(
                    [(0.0, level), (t_max as f64, level)],
                    6,
                    4,
                    BLACK.stroke_width(1),
                ))
                .map_err(plot_err)?
                .label("optimal steady state")
                .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], BLACK));
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

pub fn write_summary(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(SummaryRow::of(r))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Overlay plot and summary table for a set of records.
pub fn report(records: &[RunRecord], out: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::arg("report needs at least one record"));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let overlay = out.join("overlay.svg");
    plot_worst(records, &overlay)?;
    let summary = out.join("summary.csv");
    write_summary(records, &summary)?;
    Ok(vec![overlay, summary])
}

/// Reads previously written run directories and reports on them together.
pub fn compare(run_dirs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    let records = run_dirs
        .iter()
        .map(|d| RunRecord::read_dir(d))
        .collect::<Result<Vec<_>>>()?;
    report(&records, out)
}
