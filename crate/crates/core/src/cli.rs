//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use vertiflow_lp::lp_format::write_mip;
use vertiflow_lp::BundledSolver;

use crate::design::{
    build_direct_milp, build_dual_milp, capacity_from_selection, evaluate_capacities, original_throughputs, selection_matrix, solve_design, DesignSpec, Method,
};
use crate::error::VfError;
use crate::extension::{extend_scenario, CandidateSet};
use crate::io::{
    config_hash, design_file, fmt_num, gen_case, metrics_csv, parse_instance, read_design, run_sweep, validate_instance,
    write_instance, write_sweep, CaseParams, CaseTopology, Instance, SweepConfig, SweepRow,
};
use crate::metrics::{enhancement_from_throughputs, max_landing_distance, travel_diversity};
use crate::throughput::extended_throughput;

/// Environment variable naming the default output directory of `sweep`.
pub const OUT_ENV: &str = "VERTIFLOW_OUT";

#[derive(Parser, Debug)]
#[command(name = "vertiflow", version, about = "Reserve-capacity design for air mobility networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a network file and report every problem found.
    Validate {
        #[arg(long)]
        network: PathBuf,
    },
    /// Maximum throughput of every disruption scenario.
    Throughput {
        #[arg(long)]
        network: PathBuf,
        /// Built capacity per candidate, comma separated.
        #[arg(long, value_delimiter = ',')]
        backup: Option<Vec<f64>>,
    },
    /// Solve one design problem and print the design as JSON.
    Design {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        budget: f64,
        #[arg(long)]
        w: f64,
        #[arg(long, default_value = "direct-milp")]
        method: Method,
        #[arg(long)]
        big_m: Option<f64>,
        #[arg(long)]
        big_m_lambda: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the MILP in LP text form (dual-milp and direct-milp only).
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Solve a grid of budgets and valuations and write the result bundle.
    Sweep {
        #[arg(long)]
        network: PathBuf,
        /// start:stop:step (inclusive) or a comma separated list
        #[arg(long)]
        budgets: String,
        /// start:stop:step (inclusive) or a comma separated list
        #[arg(long)]
        w: String,
        #[arg(long, default_value = "direct-milp")]
        method: Method,
        /// Defaults to $VERTIFLOW_OUT, then ./vertiflow-out
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enhancement, diversity and coverage of a stored design.
    Metrics {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        design: PathBuf,
    },
    /// Write a synthetic network file.
    GenCase {
        #[arg(long)]
        topology: CaseTopology,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        hubs: Option<usize>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses a grid given as `start:stop:step` or `a,b,c`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, VfError> {
    let bad = || VfError::Format(format!("cannot read grid {s:?}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

fn exit_code(e: &VfError) -> i32 {
    match e {
        VfError::Solver(_) | VfError::BigMSuspect(_) | VfError::Internal(_) | VfError::BruteForceCap { .. } => 3,
        _ => 2,
    }
}

fn load(path: &PathBuf) -> Result<(Instance, String), VfError> {
    let text = fs::read_to_string(path)?;
    let inst = parse_instance(&text).map_err(|e| match e {
        VfError::Format(m) => VfError::Format(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let issues = validate_instance(&inst);
    if !issues.is_empty() {
        return Err(VfError::Validation(issues));
    }
    Ok((inst, text))
}

fn report(e: &VfError, err: &mut dyn Write) {
    match e {
        VfError::Validation(issues) => {
            for i in issues {
                let _ = writeln!(err, "error: {i}");
            }
        }
        other => {
            let _ = writeln!(err, "error: {other}");
        }
    }
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            report(&e, err);
            exit_code(&e)
        }
    }
}

fn io_err(e: std::io::Error) -> VfError {
    VfError::Io(e)
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, VfError> {
    let solver = BundledSolver::default();
    match cmd {
        Command::Validate { network } => {
            let text = fs::read_to_string(&network)?;
            let hash = config_hash(&["validate", &text]);
            writeln!(err, "config-hash: {hash}").map_err(io_err)?;
            let inst = parse_instance(&text)?;
            let issues = validate_instance(&inst);
            if issues.is_empty() {
                let net = &inst.network;
                writeln!(
                    out,
                    "ok: {} nodes, {} links, {} demands, {} candidates",
                    net.nodes.len(),
                    net.links.len(),
                    inst.demands.len(),
                    inst.candidates.as_ref().map_or(0, |c| c.len())
                )
                .map_err(io_err)?;
                Ok(0)
            } else {
                Err(VfError::Validation(issues))
            }
        }
        Command::Throughput { network, backup } => {
            let (inst, text) = load(&network)?;
            let caps_text = backup.as_ref().map(|b| b.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
            let hash = config_hash(&["throughput", &text, caps_text.as_deref().unwrap_or("")]);
            writeln!(err, "config-hash: {hash}").map_err(io_err)?;
            let candidates = inst.candidates.clone().unwrap_or_else(|| CandidateSet::uniform(Vec::new(), &[0.0], &[0.0]));
            let spec = DesignSpec::new(inst.network.clone(), inst.demands.clone(), candidates, inst.policy_or_default(), 0.0, 1.0)?;
            let caps = backup.unwrap_or_else(|| vec![0.0; spec.num_candidates()]);
            writeln!(out, "scenario\tprobability\tthroughput\tverified").map_err(io_err)?;
            let mut expected = 0.0;
            for s in &spec.scenarios {
                let ext = extend_scenario(&spec.network, &spec.demands, s, &spec.topology, &caps)?;
                let r = extended_throughput(&ext, spec.big_m, &solver)?;
                expected += s.probability * r.throughput;
                writeln!(out, "{}\t{}\t{}\t{}", s.label(), fmt_num(s.probability), fmt_num(r.throughput), r.verified)
                    .map_err(io_err)?;
            }
            writeln!(out, "expected\t1\t{}\t", fmt_num(expected)).map_err(io_err)?;
            Ok(0)
        }
        Command::Design { network, budget, w, method, big_m, big_m_lambda, out: path, dump_lp } => {
            let (inst, text) = load(&network)?;
            let params = format!("budget={budget} w={w} method={method} big_m={big_m:?} big_m_lambda={big_m_lambda:?}");
            let hash = config_hash(&["design", &text, &params]);
            writeln!(err, "config-hash: {hash}").map_err(io_err)?;
            let mut spec = inst.design_spec(budget, w)?;
            if let Some(m) = big_m {
                spec.big_m = m;
            }
            if let Some(m) = big_m_lambda {
                spec.big_m_lambda = m;
            }
            if let Some(p) = dump_lp {
                let text = match method {
                    Method::DualMilp => write_mip(&build_dual_milp(&spec).model),
                    Method::DirectMilp => write_mip(&build_direct_milp(&spec).model),
                    Method::BruteForce => return Err(VfError::Format("--dump-lp needs dual-milp or direct-milp".into())),
                };
                fs::write(p, text)?;
            }
            let r = solve_design(&spec, method, &solver)?;
            writeln!(err, "solved in {:.3} s, {} nodes", r.stats.wall_seconds, r.stats.nodes).map_err(io_err)?;
            for f in &r.big_m_flags {
                writeln!(err, "warning: big-M bound reached: {f}").map_err(io_err)?;
            }
            let mut json = serde_json::to_string_pretty(&design_file(&spec, &r, &hash))
                .map_err(|e| VfError::Format(e.to_string()))?;
            json.push('\n');
            match path {
                Some(p) => fs::write(p, json)?,
                None => out.write_all(json.as_bytes()).map_err(io_err)?,
            }
            Ok(0)
        }
        Command::Sweep { network, budgets, w, method, out: path } => {
            let (inst, text) = load(&network)?;
            let config = SweepConfig { budgets: parse_grid(&budgets)?, ws: parse_grid(&w)?, method };
            let hash = config_hash(&["sweep", &text, &budgets, &w, method.name()]);
            writeln!(err, "config-hash: {hash}").map_err(io_err)?;
            let dir = path
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("vertiflow-out"));
            let rows = run_sweep(&inst, &config, &hash, &solver)?;
            write_sweep(&dir, &rows, &inst.demands.pairs)?;
            writeln!(out, "{} grid points written to {}", rows.len(), dir.display()).map_err(io_err)?;
            Ok(0)
        }
        Command::Metrics { network, design } => {
            let (inst, text) = load(&network)?;
            let dtext = fs::read_to_string(&design)?;
            let hash = config_hash(&["metrics", &text, &dtext]);
            writeln!(err, "config-hash: {hash}").map_err(io_err)?;
            let d = read_design(&dtext)?;
            let spec = inst.design_spec(d.budget, d.w)?;
            if d.levels.len() != spec.num_candidates() || d.levels.iter().any(|&m| m >= spec.num_levels()) {
                return Err(VfError::Selection("stored levels do not fit the network's candidates".into()));
            }
            let caps = capacity_from_selection(&selection_matrix(&d.levels, spec.num_levels()), &spec.candidates)?;
            let original = original_throughputs(&spec, &solver)?;
            let ext = evaluate_capacities(&spec, &caps, &solver)?;
            let enhancement = enhancement_from_throughputs(&spec, &original, &ext.per_scenario)?;
            let (diversity, coverage) = match travel_diversity(&spec, &caps) {
                Ok(div) => (Some(div), Some(max_landing_distance(&spec, &caps)?)),
                Err(VfError::PairWithoutLink(..)) => (None, None),
                Err(e) => return Err(e),
            };
            let row = SweepRow { budget: d.budget, w: d.w, design: d, enhancement, diversity, coverage };
            out.write_all(metrics_csv(&[row])?.as_bytes()).map_err(io_err)?;
            Ok(0)
        }
        Command::GenCase { topology, seed, nodes, hubs, pairs, candidates, out: path } => {
            let mut params = CaseParams::preset(topology);
            params.nodes = nodes.unwrap_or(params.nodes);
            params.hubs = hubs.unwrap_or(params.hubs);
            params.pairs = pairs.unwrap_or(params.pairs);
            params.candidates = candidates.unwrap_or(params.candidates);
            let hash = config_hash(&["gen-case", &format!("{params:?} seed={seed}")]);
            writeln!(err, "config-hash: {hash}").map_err(io_err)?;
            let text = write_instance(&gen_case(params, seed)?)?;
            match path {
                Some(p) => fs::write(p, text)?,
                None => out.write_all(text.as_bytes()).map_err(io_err)?,
            }
            Ok(0)
        }
    }
}
