//! Distance sweeps over a scenario and their CSV / table renderings.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{Channel, ScenarioConfig, TransportKind, WindowAdaptation};
use crate::error::{Error, Result};
use crate::orchestrator::{run_scenario, RunReport};
use crate::pubsub::Architecture;

pub const CSV_HEADER: [&str; 8] = [
    "distance_m",
    "channel",
    "transport",
    "architecture",
    "pd_a_s",
    "l_p_pct",
    "windows",
    "retransmissions",
];

/// One grid cell averaged over its seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub distance_m: f64,
    pub channel: Channel,
    pub transport: TransportKind,
    pub architecture: Architecture,
    /// Transfer delay (every frame on air, summed), seconds.
    pub pd_a_s: f64,
    /// Mean delay of a delivered packet, seconds.
    pub pd_a_mean_s: f64,
    /// Loss probability, 0-100.
    pub l_p_pct: f64,
    pub windows: f64,
    pub retransmissions: f64,
    pub seeds: u32,
    /// Seeds whose run stopped at the window cap.
    pub capped_runs: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
}

/// Per-seed outcome of a single cell, kept for paired comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRun {
    pub distance_m: f64,
    pub channel: Channel,
    pub seed: u64,
    pub report: RunReport,
}

fn sort_key(a: &GridRow, b: &GridRow) -> std::cmp::Ordering {
    a.distance_m
        .total_cmp(&b.distance_m)
        .then(a.channel.cmp(&b.channel))
        .then(a.architecture.cmp(&b.architecture))
        .then(a.transport.cmp(&b.transport))
}

/// Runs every `(distance, channel, seed)` cell of the sweep in parallel.
/// Output order is fixed by the cell list, not by evaluation order.
pub fn run_cells(config: &ScenarioConfig, distances: &[f64], channels: &[Channel]) -> Result<Vec<CellRun>> {
    config.validate()?;
    if distances.is_empty() || channels.is_empty() {
        return Err(Error::config("a grid needs at least one distance and one channel"));
    }
    let mut jobs = Vec::new();
    for &d in distances {
        for &ch in channels {
            let cell = config.with_cell(d, ch)?;
            for seed in config.cell_seeds() {
                jobs.push((d, ch, seed, cell.clone()));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(distance_m, channel, seed, mut cfg)| {
            cfg.seed = seed;
            Ok(CellRun {
                distance_m,
                channel,
                seed,
                report: run_scenario(&cfg)?,
            })
        })
        .collect()
}

/// Averages per-seed runs into one row per `(distance, channel)`.
pub fn aggregate(config: &ScenarioConfig, runs: &[CellRun]) -> GridResult {
    let mut rows: Vec<GridRow> = Vec::new();
    for r in runs {
        let row = match rows
            .iter_mut()
            .find(|x| x.distance_m == r.distance_m && x.channel == r.channel)
        {
            Some(row) => row,
            None => {
                rows.push(GridRow {
                    distance_m: r.distance_m,
                    channel: r.channel,
                    transport: config.transport,
                    architecture: config.architecture,
                    pd_a_s: 0.0,
                    pd_a_mean_s: 0.0,
                    l_p_pct: 0.0,
                    windows: 0.0,
                    retransmissions: 0.0,
                    seeds: 0,
                    capped_runs: 0,
                });
                rows.last_mut().expect("just pushed")
            }
        };
        row.pd_a_s += r.report.pd_a_sum_s;
        row.pd_a_mean_s += r.report.pd_a_mean_s;
        row.l_p_pct += 100.0 * r.report.loss_probability;
        row.windows += r.report.total_windows as f64;
        row.retransmissions += r.report.total_retransmissions as f64;
        row.seeds += 1;
        row.capped_runs += u32::from(r.report.cap_hit);
    }
    for row in &mut rows {
        let n = f64::from(row.seeds);
        row.pd_a_s /= n;
        row.pd_a_mean_s /= n;
        row.l_p_pct /= n;
        row.windows /= n;
        row.retransmissions /= n;
    }
    rows.sort_by(sort_key);
    GridResult { rows }
}

/// Sweeps the primary pair over `distances` for each channel, averaging
/// `seeds_per_cell` consecutive seeds per cell.
pub fn run_grid(config: &ScenarioConfig, distances: &[f64], channels: &[Channel]) -> Result<GridResult> {
    let runs = run_cells(config, distances, channels)?;
    Ok(aggregate(config, &runs))
}

/// One run of the scenario as configured, summarised as a single row at the
/// primary pair's starting separation.
pub fn run_single(config: &ScenarioConfig) -> Result<(RunReport, GridResult)> {
    let scenario = config.build()?;
    let m = &scenario.matches[0];
    let a = scenario.world.agent(&m.publisher).expect("matched");
    let b = scenario.world.agent(&m.subscriber).expect("matched");
    let distance_m = crate::physics::distance(a, b);
    let report = run_scenario(config)?;
    let runs = [CellRun {
        distance_m,
        channel: config.channel,
        seed: config.seed,
        report: report.clone(),
    }];
    Ok((report, aggregate(config, &runs)))
}

/// Masterless with adaptive windows against master relay with a fixed
/// window over the same sweep and seeds.
pub fn compare_grid(config: &ScenarioConfig, distances: &[f64], channels: &[Channel]) -> Result<GridComparison> {
    if config.master.is_none() {
        return Err(Error::config("compare needs `master` set to an agent id"));
    }
    let mut masterless = config.clone();
    masterless.architecture = Architecture::Masterless;
    if masterless.window_adaptation == WindowAdaptation::Fixed {
        masterless.window_adaptation = WindowAdaptation::Absolute;
    }
    let mut master = config.clone();
    master.architecture = Architecture::Master;
    master.window_adaptation = WindowAdaptation::Fixed;
    Ok(GridComparison {
        masterless: run_grid(&masterless, distances, channels)?,
        master: run_grid(&master, distances, channels)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridComparison {
    pub masterless: GridResult,
    pub master: GridResult,
}

impl GridComparison {
    /// Master mean L_p minus masterless mean L_p, percentage points.
    pub fn loss_reduction_pp(&self) -> f64 {
        self.master.mean_l_p_pct() - self.masterless.mean_l_p_pct()
    }

    /// Relative reduction of the mean transfer delay, 0-1.
    pub fn delay_reduction(&self) -> f64 {
        let m = self.master.mean_pd_a_s();
        if m == 0.0 {
            0.0
        } else {
            (m - self.masterless.mean_pd_a_s()) / m
        }
    }

    pub fn merged(&self) -> GridResult {
        GridResult::merge([self.masterless.clone(), self.master.clone()])
    }

    pub fn summary(&self) -> String {
        format!(
            "mean L_p: masterless {:.2} %, master {:.2} % (reduction {:.2} pp)\n\
             mean PD_a: masterless {:.4} s, master {:.4} s (reduction {:.1} %)\n",
            self.masterless.mean_l_p_pct(),
            self.master.mean_l_p_pct(),
            self.loss_reduction_pp(),
            self.masterless.mean_pd_a_s(),
            self.master.mean_pd_a_s(),
            100.0 * self.delay_reduction()
        )
    }
}

/// Rounds to six significant digits and prints the shortest exact form.
pub fn six_significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { x.to_string() };
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    rounded.to_string()
}

impl GridResult {
    /// Merges several results (e.g. one per transport) and restores CSV order.
    pub fn merge(parts: impl IntoIterator<Item = GridResult>) -> GridResult {
        let mut rows: Vec<GridRow> = parts.into_iter().flat_map(|g| g.rows).collect();
        rows.sort_by(sort_key);
        GridResult { rows }
    }

    pub fn mean_l_p_pct(&self) -> f64 {
        self.rows.iter().map(|r| r.l_p_pct).sum::<f64>() / self.rows.len().max(1) as f64
    }

    pub fn mean_pd_a_s(&self) -> f64 {
        self.rows.iter().map(|r| r.pd_a_s).sum::<f64>() / self.rows.len().max(1) as f64
    }

    pub fn row(&self, distance_m: f64, channel: Channel) -> Option<&GridRow> {
        self.rows
            .iter()
            .find(|r| r.distance_m == distance_m && r.channel == channel)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        if self.rows.is_empty() {
            return Err(Error::invalid("cannot emit an empty grid"));
        }
        let mut rows = self.rows.clone();
        rows.sort_by(sort_key);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &rows {
            w.write_record([
                six_significant(r.distance_m),
                r.channel.as_str().to_string(),
                r.transport.as_str().to_string(),
                r.architecture.as_str().to_string(),
                six_significant(r.pd_a_s),
                six_significant(r.l_p_pct),
                six_significant(r.windows),
                six_significant(r.retransmissions),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn emit_csv(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string()?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Distance rows with LOS and NLOS side by side, one block per
    /// transport/architecture combination.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let mut combos: Vec<(Architecture, TransportKind)> =
            self.rows.iter().map(|r| (r.architecture, r.transport)).collect();
        combos.sort();
        combos.dedup();
        for (arch, transport) in combos {
            let _ = writeln!(out, "{} / {}", arch.as_str(), transport.as_str());
            let _ = writeln!(
                out,
                "{:>12} | {:>9} {:>7} | {:>9} {:>7}",
                "Distance (m)", "LOS PD_a", "L_p %", "NLOS PD_a", "L_p %"
            );
            let mut distances: Vec<f64> = self
                .rows
                .iter()
                .filter(|r| r.architecture == arch && r.transport == transport)
                .map(|r| r.distance_m)
                .collect();
            distances.sort_by(f64::total_cmp);
            distances.dedup();
            for d in distances {
                let cell = |ch: Channel| {
                    self.rows
                        .iter()
                        .find(|r| {
                            r.distance_m == d && r.channel == ch && r.architecture == arch && r.transport == transport
                        })
                        .map_or_else(
                            || format!("{:>9} {:>7}", "-", "-"),
                            |r| format!("{:>9.3} {:>7.1}", r.pd_a_s, r.l_p_pct),
                        )
                };
                let _ = writeln!(out, "{d:>12} | {} | {}", cell(Channel::Los), cell(Channel::Nlos));
            }
        }
        out
    }
}
