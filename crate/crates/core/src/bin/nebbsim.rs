use std::fs::File;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nebb::config::RunSettings;
use nebb::error::{ConfigError, SimError};
use nebb::scenario::run_stalled_ring;
use nebb::sweep::{sweep, write_csv};

/// Cycle-accurate NoC simulator for lookahead-bypass routers.
///
/// Runs a load sweep for each requested mechanism and writes one CSV row per
/// (mechanism, load). Settings come from defaults, then `--config`, then flags.
#[derive(Parser, Debug)]
#[command(name = "nebbsim", version)]
struct Cli {
    /// key = value settings file
    #[arg(long)]
    config: Option<PathBuf>,
    /// mesh | torus
    #[arg(long)]
    topology: Option<String>,
    /// Routers per dimension
    #[arg(long)]
    k: Option<String>,
    /// Nodes per router
    #[arg(long)]
    concentration: Option<String>,
    /// Mechanism name, or a comma-separated list
    #[arg(long)]
    mechanism: Option<String>,
    /// Offered loads in flits/node/cycle, comma-separated and ascending
    #[arg(long)]
    load: Option<String>,
    #[arg(long)]
    vcs: Option<String>,
    /// shared:<slots> | private:<slots>
    #[arg(long)]
    buffer: Option<String>,
    /// 1 | 1,5
    #[arg(long)]
    packet_sizes: Option<String>,
    /// uniform | bitrev | transpose | hotspot
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long)]
    hotspot_fraction: Option<String>,
    #[arg(long)]
    cycles: Option<String>,
    #[arg(long)]
    warmup_fraction: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// la | flit
    #[arg(long)]
    la_priority: Option<String>,
    /// Age in cycles at which a buffered head beats lookaheads, or off
    #[arg(long)]
    la_threshold: Option<String>,
    /// demote-on-stall | lock-until-tail
    #[arg(long)]
    sa_input_mode: Option<String>,
    /// none | dateline | fbfc-l | bubble | auto
    #[arg(long)]
    deadlock_rule: Option<String>,
    #[arg(long)]
    watchdog_horizon: Option<String>,
    /// Run the invariant checkers every cycle
    #[arg(long)]
    check: bool,
    /// Run a scripted scenario instead of a sweep (stalled-ring)
    #[arg(long)]
    scenario: Option<String>,
    /// CSV output path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    fn assignments(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut put = |k: &'static str, x: &Option<String>| {
            if let Some(x) = x {
                v.push((k, x.clone()));
            }
        };
        put("topology", &self.topology);
        put("k", &self.k);
        put("concentration", &self.concentration);
        put("mechanism", &self.mechanism);
        put("load", &self.load);
        put("vcs", &self.vcs);
        put("buffer", &self.buffer);
        put("packet-sizes", &self.packet_sizes);
        put("pattern", &self.pattern);
        put("hotspot-fraction", &self.hotspot_fraction);
        put("cycles", &self.cycles);
        put("warmup-fraction", &self.warmup_fraction);
        put("seed", &self.seed);
        put("la-priority", &self.la_priority);
        put("la-threshold", &self.la_threshold);
        put("sa-input-mode", &self.sa_input_mode);
        put("deadlock-rule", &self.deadlock_rule);
        put("watchdog-horizon", &self.watchdog_horizon);
        put("scenario", &self.scenario);
        if self.check {
            v.push(("check", "true".into()));
        }
        if let Some(p) = &self.out {
            v.push(("out", p.display().to_string()));
        }
        v
    }
}

fn settings(cli: &Cli) -> Result<RunSettings, ConfigError> {
    let mut s = RunSettings::default();
    if let Some(path) = &cli.config {
        s.apply_file(path)?;
    }
    for (k, v) in cli.assignments() {
        s.set(k, &v)?;
    }
    Ok(s)
}

fn run_scenario(s: &RunSettings, name: &str) -> ExitCode {
    if name != "stalled-ring" {
        eprintln!("error: unknown scenario '{name}' (known: stalled-ring)");
        return ExitCode::from(2);
    }
    match run_stalled_ring(s.sim.sa_input_mode) {
        Ok(o) => {
            println!(
                "stalled-ring sa-input-mode={:?}: {} of 7 packets ejected after {} cycles",
                s.sim.sa_input_mode, o.ejected_packets, o.cycles
            );
            match o.deadlock {
                Some(d) => {
                    eprintln!("{d}");
                    ExitCode::from(1)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let s = match settings(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(name) = &s.scenario {
        return run_scenario(&s, name);
    }
    if let Err(e) = s.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let cells = sweep(&s.sim, &s.loads, &s.mechanisms);
    let written = match &s.out {
        Some(path) => File::create(path)
            .map_err(csv::Error::from)
            .and_then(|f| write_csv(&cells, f)),
        None => write_csv(&cells, io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write results: {e}");
        return ExitCode::from(2);
    }
    let mut failed = false;
    for c in &cells {
        match &c.outcome {
            Err(SimError::Violation(v)) => {
                failed = true;
                for r in v {
                    eprintln!("{} load {}: {r}", c.mechanism, c.load);
                }
            }
            Err(e) => {
                failed = true;
                eprintln!("{} load {}: {e}", c.mechanism, c.load);
            }
            Ok(_) => {}
        }
    }
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
