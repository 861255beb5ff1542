//! Batch episode runner and summary statistics.
//!
//! Output files (schemas in `schemas/metrics-v1.md`):
//!
//! - `episodes.csv`: one row per episode,
//! - `slots.jsonl`: one record per slot (with `trace_slots`),
//! - `ledger.jsonl`: traffic ledger rows (with `trace_ledger`),
//! - `rssi_with_uuavs.csv`, `rssi_tuav_only.csv`: serving RSSI per user at
//!   slot 0 (with `dump_rssi`).
//!
//! Throughput uses the wall-episode time `L_e·T` as denominator.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::ScenarioConfig;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::policies::{Controller, SchedulerKind, TrajectoryKind};
use crate::traffic::LedgerRow;

pub const METRICS_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scheduler: SchedulerKind,
    pub trajectory: TrajectoryKind,
    pub episodes: u64,
    /// Episode `e` runs with seed `seed + e`.
    pub seed: u64,
    pub out: PathBuf,
    pub trace_slots: bool,
    pub trace_ledger: bool,
    pub dump_rssi: bool,
    /// Worker threads; 0 picks the available parallelism.
    pub workers: usize,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            scheduler: SchedulerKind::RoundRobin,
            trajectory: TrajectoryKind::Stationary,
            episodes: 1,
            seed: 0,
            out: out.into(),
            trace_slots: false,
            trace_ledger: false,
            dump_rssi: false,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub episode: u64,
    pub seed: u64,
    pub slot: u64,
    pub arrivals: u64,
    pub delivered: Vec<u64>,
    pub dropped: Vec<u64>,
    pub relayed: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub seed: u64,
    pub config_hash: String,
    pub scheduler: SchedulerKind,
    pub trajectory: TrajectoryKind,
    pub slots: u64,
    pub arrivals: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub residual: u64,
    /// -1 when nothing was delivered.
    pub max_delivered_age: i64,
    pub delivered_mbps: f64,
    pub dropped_mbps: f64,
    pub delivered_mbps_uav: Vec<f64>,
    pub dropped_mbps_uav: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutput {
    pub record: EpisodeRecord,
    pub slots: Vec<SlotRecord>,
    pub ledger: Vec<LedgerRow>,
    pub rssi_with_uuavs: Vec<f64>,
    pub rssi_tuav_only: Vec<f64>,
}

/// Packets over an episode converted to Mbps over `L_e·T`.
pub fn packets_to_mbps(packets: u64, cfg: &ScenarioConfig) -> f64 {
    packets as f64 * cfg.packet_bits / (cfg.episode_len as f64 * cfg.slot_len) / 1e6
}

/// Runs one episode under the given controller.
pub fn run_episode(
    cfg: &ScenarioConfig,
    ctl: &mut Controller,
    episode: u64,
    seed: u64,
    keep_ledger: bool,
) -> Result<EpisodeOutput> {
    let mut env = Env::new(cfg.clone())?;
    env.reset(seed)?;
    ctl.reset(seed);
    let world = env.world().expect("reset");
    let rssi_with_uuavs = world.serving_rssi(cfg, true);
    let rssi_tuav_only = world.serving_rssi(cfg, false);

    let mut slots = Vec::with_capacity(cfg.episode_len as usize);
    while !env.is_done() {
        let input = ctl.decide(&env)?;
        let t = env.step(&input)?;
        slots.push(SlotRecord {
            episode,
            seed,
            slot: t.slot,
            arrivals: t.info.arrivals,
            delivered: t.info.delivered,
            dropped: t.info.dropped,
            relayed: t.info.relayed,
        });
    }
    let stats = env.stats().expect("reset");
    let record = EpisodeRecord {
        episode,
        seed,
        config_hash: cfg.hash(),
        scheduler: SchedulerKind::RoundRobin,
        trajectory: TrajectoryKind::Stationary,
        slots: stats.slots,
        arrivals: stats.totals.arrivals,
        delivered: stats.totals.delivered,
        dropped: stats.totals.dropped,
        residual: stats.residual,
        max_delivered_age: stats.max_delivered_age.map_or(-1, |a| a as i64),
        delivered_mbps: packets_to_mbps(stats.totals.delivered, cfg),
        dropped_mbps: packets_to_mbps(stats.totals.dropped, cfg),
        delivered_mbps_uav: stats.delivered_per_uav.iter().map(|&p| packets_to_mbps(p, cfg)).collect(),
        dropped_mbps_uav: stats.dropped_per_uav.iter().map(|&p| packets_to_mbps(p, cfg)).collect(),
    };
    Ok(EpisodeOutput {
        record,
        slots,
        ledger: if keep_ledger { env.ledger().to_vec() } else { Vec::new() },
        rssi_with_uuavs,
        rssi_tuav_only,
    })
}

/// Runs all episodes (in parallel) and returns them in episode order.
pub fn run_episodes(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Vec<EpisodeOutput>> {
    cfg.validate()?;
    let workers = match opts.workers {
        0 => thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(opts.episodes.max(1) as usize);
    let episodes: Vec<u64> = (0..opts.episodes).collect();
    let chunk = episodes.len().div_ceil(workers).max(1);
    let results: Vec<Result<Vec<EpisodeOutput>>> = thread::scope(|s| {
        let handles: Vec<_> = episodes
            .chunks(chunk)
            .map(|ids| {
                s.spawn(move || {
                    let mut ctl = Controller::from_kinds(cfg, opts.scheduler, opts.trajectory);
                    ids.iter()
                        .map(|&e| {
                            let mut out = run_episode(cfg, &mut ctl, e, opts.seed.wrapping_add(e), opts.trace_ledger)?;
                            out.record.scheduler = opts.scheduler;
                            out.record.trajectory = opts.trajectory;
                            Ok(out)
                        })
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("episode worker panicked")).collect()
    });
    let mut all = Vec::with_capacity(episodes.len());
    for r in results {
        all.extend(r?);
    }
    Ok(all)
}

fn episode_header(n_uav: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "episode",
        "seed",
        "config_hash",
        "scheduler",
        "trajectory",
        "slots",
        "arrivals",
        "delivered",
        "dropped",
        "residual",
        "max_delivered_age",
        "delivered_mbps",
        "dropped_mbps",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((0..n_uav).map(|k| format!("delivered_mbps_uav{k}")));
    h.extend((0..n_uav).map(|k| format!("dropped_mbps_uav{k}")));
    h
}

fn episode_row(r: &EpisodeRecord) -> Vec<String> {
    let mut row = vec![
        r.episode.to_string(),
        r.seed.to_string(),
        r.config_hash.clone(),
        r.scheduler.to_string(),
        r.trajectory.to_string(),
        r.slots.to_string(),
        r.arrivals.to_string(),
        r.delivered.to_string(),
        r.dropped.to_string(),
        r.residual.to_string(),
        r.max_delivered_age.to_string(),
        r.delivered_mbps.to_string(),
        r.dropped_mbps.to_string(),
    ];
    row.extend(r.delivered_mbps_uav.iter().map(f64::to_string));
    row.extend(r.dropped_mbps_uav.iter().map(f64::to_string));
    row
}

fn csv_err(e: csv::Error) -> Error {
    Error::Metrics(e.to_string())
}

fn write_rssi(path: &Path, outputs: &[EpisodeOutput], pick: fn(&EpisodeOutput) -> &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["episode", "seed", "gue", "rssi_dbm"]).map_err(csv_err)?;
    for o in outputs {
        for (m, v) in pick(o).iter().enumerate() {
            w.write_record([o.record.episode.to_string(), o.record.seed.to_string(), m.to_string(), v.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct LedgerLine<'a> {
    episode: u64,
    #[serde(flatten)]
    row: &'a LedgerRow,
}

/// Runs the episodes and writes all requested files into `opts.out`.
pub fn run(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Vec<EpisodeRecord>> {
    fs::create_dir_all(&opts.out)?;
    let outputs = run_episodes(cfg, opts)?;

    let mut w = csv::Writer::from_path(opts.out.join("episodes.csv")).map_err(csv_err)?;
    w.write_record(episode_header(cfg.n_uav())).map_err(csv_err)?;
    for o in &outputs {
        w.write_record(episode_row(&o.record)).map_err(csv_err)?;
    }
    w.flush()?;

    if opts.trace_slots {
        write_jsonl(&opts.out.join("slots.jsonl"), outputs.iter().flat_map(|o| &o.slots))?;
    }
    if opts.trace_ledger {
        write_jsonl(
            &opts.out.join("ledger.jsonl"),
            outputs
                .iter()
                .flat_map(|o| o.ledger.iter().map(|row| LedgerLine { episode: o.record.episode, row })),
        )?;
    }
    if opts.dump_rssi {
        write_rssi(&opts.out.join("rssi_with_uuavs.csv"), &outputs, |o| &o.rssi_with_uuavs)?;
        write_rssi(&opts.out.join("rssi_tuav_only.csv"), &outputs, |o| &o.rssi_tuav_only)?;
    }
    fs::write(opts.out.join("config.toml"), cfg.to_toml_string())?;
    Ok(outputs.into_iter().map(|o| o.record).collect())
}

/// Sums a slot trace back into per-episode (delivered, dropped) totals.
pub fn totals_from_trace(slots: &[SlotRecord]) -> Vec<(u64, u64, u64)> {
    let mut out: Vec<(u64, u64, u64)> = Vec::new();
    for s in slots {
        let d: u64 = s.delivered.iter().sum();
        let x: u64 = s.dropped.iter().sum();
        match out.last_mut() {
            Some(last) if last.0 == s.episode => {
                last.1 += d;
                last.2 += x;
            }
            _ => out.push((s.episode, d, x)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub n: usize,
    pub mean: f64,
    /// Half-width of the two-sided 95% Student-t interval; 0 for a single sample.
    pub ci95: f64,
}

pub fn mean_ci95(xs: &[f64]) -> MeanCi {
    let n = xs.len();
    if n == 0 {
        return MeanCi { n, mean: f64::NAN, ci95: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanCi { n, mean, ci95: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("dof positive")
        .inverse_cdf(0.975);
    MeanCi {
        n,
        mean,
        ci95: t * (var / n as f64).sqrt(),
    }
}

/// 1-based index of the first episode reaching 95% of the terminal mean.
///
/// The terminal mean averages the last 10% of the series (at least one value).
pub fn convergence_episode(series: &[f64]) -> Option<usize> {
    if series.is_empty() {
        return None;
    }
    let tail = series.len().div_ceil(10).max(1);
    let terminal = series[series.len() - tail..].iter().sum::<f64>() / tail as f64;
    let target = 0.95 * terminal;
    series.iter().position(|&x| x >= target).map(|i| i + 1)
}

/// Least-squares slope of `ys` against `0..n`.
pub fn ols_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub episodes: usize,
    pub delivered_uav: Vec<MeanCi>,
    /// Mean is the sum of the per-UAV means; CI from per-episode totals.
    pub delivered_total: MeanCi,
    pub dropped_uav: Vec<MeanCi>,
    pub dropped_total: MeanCi,
    pub convergence_episode: Option<usize>,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Metrics(format!("missing column `{name}`")))
}

fn per_uav_columns(headers: &csv::StringRecord, prefix: &str) -> Vec<usize> {
    (0..)
        .map_while(|k| headers.iter().position(|h| h == format!("{prefix}{k}")))
        .collect()
}

/// Reads one or more `episodes.csv` files; rows are taken in file order.
pub fn summarize(paths: &[impl AsRef<Path>]) -> Result<Summary> {
    let mut delivered: Vec<Vec<f64>> = Vec::new();
    let mut dropped: Vec<Vec<f64>> = Vec::new();
    let mut totals = Vec::new();
    let mut dropped_totals = Vec::new();
    for path in paths {
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.clone();
        let dcols = per_uav_columns(&headers, "delivered_mbps_uav");
        let xcols = per_uav_columns(&headers, "dropped_mbps_uav");
        let dtot = column(&headers, "delivered_mbps")?;
        let xtot = column(&headers, "dropped_mbps")?;
        if delivered.is_empty() {
            delivered = vec![Vec::new(); dcols.len()];
            dropped = vec![Vec::new(); xcols.len()];
        } else if delivered.len() != dcols.len() {
            return Err(Error::Metrics("files disagree on the number of UAVs".into()));
        }
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Metrics(format!("{}: {e}", &headers[i])))
            };
            for (k, &c) in dcols.iter().enumerate() {
                delivered[k].push(num(c)?);
            }
            for (k, &c) in xcols.iter().enumerate() {
                dropped[k].push(num(c)?);
            }
            totals.push(num(dtot)?);
            dropped_totals.push(num(xtot)?);
        }
    }
    let delivered_uav: Vec<MeanCi> = delivered.iter().map(|v| mean_ci95(v)).collect();
    let dropped_uav: Vec<MeanCi> = dropped.iter().map(|v| mean_ci95(v)).collect();
    let mut delivered_total = mean_ci95(&totals);
    delivered_total.mean = delivered_uav.iter().map(|m| m.mean).sum();
    let mut dropped_total = mean_ci95(&dropped_totals);
    dropped_total.mean = dropped_uav.iter().map(|m| m.mean).sum();
    Ok(Summary {
        episodes: totals.len(),
        delivered_uav,
        delivered_total,
        dropped_uav,
        dropped_total,
        convergence_episode: convergence_episode(&totals),
    })
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "episodes: {}", self.episodes)?;
        writeln!(f, "{:<8} {:>22} {:>22}", "uav", "delivered Mbps", "dropped Mbps")?;
        let cell = |m: &MeanCi| format!("{:.3} ± {:.3}", m.mean, m.ci95);
        for (k, (d, x)) in self.delivered_uav.iter().zip(&self.dropped_uav).enumerate() {
            writeln!(f, "{:<8} {:>22} {:>22}", k, cell(d), cell(x))?;
        }
        writeln!(
            f,
            "{:<8} {:>22} {:>22}",
            "total",
            cell(&self.delivered_total),
            cell(&self.dropped_total)
        )?;
        match self.convergence_episode {
            Some(e) => write!(f, "convergence episode: {e}"),
            None => write!(f, "convergence episode: n/a"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_run_has_zero_width() {
        let m = mean_ci95(&[42.0]);
        assert_eq!((m.mean, m.ci95), (42.0, 0.0));
    }

    #[test]
    fn ci_known_value() {
        // n = 4, s = sqrt(5/3), t(0.975, 3) = 3.182446305284263
        let m = mean_ci95(&[1.0, 2.0, 3.0, 4.0]);
        let expected = 3.182446305284263 * (5.0f64 / 3.0 / 4.0).sqrt();
        assert!((m.ci95 - expected).abs() < 1e-9);
    }

    #[test]
    fn convergence_cases() {
        assert_eq!(convergence_episode(&[7.0; 30]), Some(1));
        let ramp: Vec<f64> = (1..=200).map(|e| 100.0 * (e as f64 / 50.0).min(1.0)).collect();
        assert!(convergence_episode(&ramp).unwrap() <= 55);
        assert_eq!(convergence_episode(&[]), None);
    }

    #[test]
    fn slope_of_line() {
        let ys: Vec<f64> = (0..10).map(|i| 3.0 + 0.5 * i as f64).collect();
        assert!((ols_slope(&ys) - 0.5).abs() < 1e-12);
        assert_eq!(ols_slope(&[2.0; 5]), 0.0);
    }
}
