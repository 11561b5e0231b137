//! Load sweeps over several mechanisms and their CSV table.

use std::io::Write;
use std::thread;

use crate::engine::{run, SimConfig};
use crate::error::SimError;
use crate::metrics::SimReport;
use crate::model::Mechanism;

pub const CSV_HEADER: [&str; 9] = [
    "mechanism",
    "load",
    "avg_latency",
    "p99",
    "throughput",
    "buffered_flit_ratio",
    "bypassed_wh",
    "bypassed_vct",
    "saturated",
];

/// One (mechanism, load) run.
#[derive(Debug)]
pub struct SweepCell {
    pub mechanism: Mechanism,
    pub load: f64,
    pub seed: u64,
    pub outcome: Result<SimReport, SimError>,
}

impl SweepCell {
    pub fn report(&self) -> Option<&SimReport> {
        self.outcome.as_ref().ok()
    }

    fn record(&self) -> [String; 9] {
        let head = [self.mechanism.name().to_string(), sig6(self.load)];
        match &self.outcome {
            Ok(r) => [
                head[0].clone(),
                head[1].clone(),
                sig6(r.avg_packet_latency),
                r.p99.to_string(),
                sig6(r.throughput),
                sig6(r.buffered_flit_ratio),
                r.bypassed_wh.to_string(),
                r.bypassed_vct.to_string(),
                r.saturated.to_string(),
            ],
            Err(_) => [
                head[0].clone(),
                head[1].clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "aborted".to_string(),
            ],
        }
    }
}

/// Seed of the `index`-th load point. Every mechanism sees the same seed at
/// the same load so their traffic is identical.
pub fn cell_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs every (mechanism, load) pair. Cells are spread over the available
/// cores; results come back mechanism-major, loads in the order given.
pub fn sweep(base: &SimConfig, loads: &[f64], mechanisms: &[Mechanism]) -> Vec<SweepCell> {
    let jobs: Vec<(Mechanism, f64, u64)> = mechanisms
        .iter()
        .flat_map(|&m| {
            loads
                .iter()
                .enumerate()
                .map(move |(i, &l)| (m, l, cell_seed(base.seed, i)))
        })
        .collect();
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(jobs.len().max(1));
    let run_job = |&(mechanism, load, seed): &(Mechanism, f64, u64)| {
        let cfg = SimConfig {
            mechanism,
            load,
            seed,
            ..base.clone()
        };
        SweepCell {
            mechanism,
            load,
            seed,
            outcome: run(&cfg),
        }
    };
    if workers <= 1 {
        return jobs.iter().map(run_job).collect();
    }
    let mut slots: Vec<Option<SweepCell>> = (0..jobs.len()).map(|_| None).collect();
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let jobs = &jobs;
                let run_job = &run_job;
                s.spawn(move || {
                    (w..jobs.len())
                        .step_by(workers)
                        .map(|i| (i, run_job(&jobs[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, cell) in h.join().expect("sweep worker panicked") {
                slots[i] = Some(cell);
            }
        }
    });
    slots.into_iter().map(Option::unwrap).collect()
}

pub fn write_csv<W: Write>(cells: &[SweepCell], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in cells {
        w.write_record(c.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(cells: &[SweepCell]) -> String {
    let mut buf = Vec::new();
    write_csv(cells, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// `x` rounded to six significant digits, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "nan".into() } else { format!("{x}") };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(17.034567), "17.0346");
        assert_eq!(sig6(0.05), "0.05");
        assert_eq!(sig6(0.123456789), "0.123457");
        assert_eq!(sig6(1234567.0), "1234567");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(1.0), "1");
    }

    #[test]
    fn seeds_differ_per_load_only() {
        assert_eq!(cell_seed(7, 0), 7);
        assert_ne!(cell_seed(7, 1), cell_seed(7, 2));
    }

    #[test]
    fn rows_in_order_and_deterministic() {
        let base = SimConfig {
            k: 2,
            concentration: 1,
            cycles: 400,
            packet_sizes: crate::traffic::SizeDist::SingleFlit,
            ..SimConfig::default()
        };
        let mechs = [Mechanism::WhBaseline, Mechanism::NebbHybrid];
        let loads = [0.05, 0.1, 0.15];
        let cells = sweep(&base, &loads, &mechs);
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[4].mechanism, Mechanism::NebbHybrid);
        assert_eq!(cells[4].load, 0.1);
        assert_eq!(cells[1].seed, cells[4].seed);
        let a = csv_string(&cells);
        let b = csv_string(&sweep(&base, &loads, &mechs));
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 7);
        assert!(a.starts_with("mechanism,load,avg_latency,p99,throughput,"));
    }

    #[test]
    fn aborted_cells_are_kept() {
        // Empty-VC cannot run flit bubbles on a torus
        let base = SimConfig {
            topology: crate::topology::TopologyKind::Torus,
            k: 2,
            concentration: 1,
            cycles: 200,
            deadlock_rule: Some(crate::flow_control::DeadlockRule::FbfcL),
            ..SimConfig::default()
        };
        let cells = sweep(&base, &[0.05], &[Mechanism::EmptyVc, Mechanism::WhBaseline]);
        assert!(cells[0].outcome.is_err());
        assert!(cells[1].outcome.is_ok());
        let csv = csv_string(&cells);
        assert!(csv.lines().nth(1).unwrap().ends_with(",aborted"));
    }
}
