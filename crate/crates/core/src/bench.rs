//! Seeded benchmark suite comparing the plain and cut-strengthened solves.

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{self, GeneratorParams};
use crate::par::{self, Parallelism};
use crate::solver::{self, CutMode, SolverConfig};

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub seed: u64,
    pub instances: usize,
    pub receivers: usize,
    pub transmitters: usize,
    pub params: GeneratorParams,
    pub node_limit: u64,
    pub time_limit: Duration,
    /// Spread instances over threads; each solve stays sequential.
    pub parallelism: Parallelism,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 1,
            instances: 10,
            receivers: 20,
            transmitters: 5,
            params: GeneratorParams::default(),
            node_limit: 100_000,
            time_limit: Duration::from_secs(60),
            parallelism: Parallelism::Parallel,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub id: String,
    pub receivers: usize,
    pub transmitters: usize,
    pub ub0_plain: f64,
    pub best_plain: f64,
    pub gap_plain: Option<f64>,
    pub ub0_cuts: f64,
    pub best_cuts: f64,
    pub gap_cuts: Option<f64>,
    pub cuts_found: usize,
    pub nodes_plain: u64,
    pub nodes_cuts: u64,
    pub time_plain_s: f64,
    pub time_cuts_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport, ModelError> {
    let seeds: Vec<u64> = (0..config.instances as u64).map(|i| config.seed + i).collect();
    let rows = par::map(config.parallelism, &seeds, |&seed| {
        let instance =
            model::generate(seed, config.receivers, config.transmitters, &config.params)?;
        let solve = |cuts| {
            solver::solve(
                &instance,
                &SolverConfig {
                    cuts,
                    node_limit: config.node_limit,
                    time_limit: config.time_limit,
                    ..SolverConfig::default()
                },
            )
        };
        let plain = solve(CutMode::None)?;
        let strong = solve(CutMode::TwoCycle)?;
        Ok(BenchRow {
            id: format!("S{seed}"),
            receivers: config.receivers,
            transmitters: config.transmitters,
            ub0_plain: plain.root_bound,
            best_plain: plain.objective,
            gap_plain: plain.gap_percent(),
            ub0_cuts: strong.root_bound,
            best_cuts: strong.objective,
            gap_cuts: strong.gap_percent(),
            cuts_found: strong.cuts_generated.two_cycle,
            nodes_plain: plain.nodes_explored,
            nodes_cuts: strong.nodes_explored,
            time_plain_s: plain.wall_time.as_secs_f64(),
            time_cuts_s: strong.wall_time.as_secs_f64(),
        })
    });
    Ok(BenchReport {
        rows: rows.into_iter().collect::<Result<_, ModelError>>()?,
    })
}

pub fn to_csv(report: &BenchReport) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &report.rows {
        writer.serialize(row).expect("row serializes");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
}

pub fn from_csv(text: &str) -> Result<BenchReport, csv::Error> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows = reader.deserialize().collect::<Result<Vec<BenchRow>, _>>()?;
    Ok(BenchReport { rows })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |g| format!("{g:.2}"))
}

/// Fixed-width table: instance columns, then UB₀ / |T*| / gap% for the
/// plain and the strengthened model, then search statistics.
pub fn format_table(report: &BenchReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<6} {:>4} {:>3} | {:>8} {:>6} {:>8} | {:>8} {:>6} {:>8} | {:>6} {:>9} {:>9} {:>8}",
        "", "", "", "", "(BM)", "", "", "(S-BM)", "", "", "", "", ""
    )
    .unwrap();
    writeln!(
        out,
        "{:<6} {:>4} {:>3} | {:>8} {:>6} {:>8} | {:>8} {:>6} {:>8} | {:>6} {:>9} {:>9} {:>8}",
        "ID", "|T|", "|B|", "UB0", "|T*|", "gap%", "UB0", "|T*|", "gap%", "cuts", "nodes", "nodes(S)", "time(s)"
    )
    .unwrap();
    for r in &report.rows {
        writeln!(
            out,
            "{:<6} {:>4} {:>3} | {:>8.2} {:>6} {:>8} | {:>8.2} {:>6} {:>8} | {:>6} {:>9} {:>9} {:>8.2}",
            r.id,
            r.receivers,
            r.transmitters,
            r.ub0_plain,
            r.best_plain,
            opt(r.gap_plain),
            r.ub0_cuts,
            r.best_cuts,
            opt(r.gap_cuts),
            r.cuts_found,
            r.nodes_plain,
            r.nodes_cuts,
            r.time_plain_s + r.time_cuts_s
        )
        .unwrap();
    }
    out
}
