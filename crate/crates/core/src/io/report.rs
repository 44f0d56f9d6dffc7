//! Design files, sweeps and CSV output.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vertiflow_lp::Solver;

use super::Instance;
use crate::design::{original_throughputs, solve_design, DesignResult, DesignSpec, Method};
use crate::error::VfError;
use crate::metrics::{
    enhancement_from_throughputs, max_landing_distance, travel_diversity, CoverageReport, DiversityReport,
    EnhancementReport,
};

pub const DESIGN_FORMAT: &str = "vertiflow-design/1";

pub const METRICS_HEADER: &str = "budget,w,method,cost,objective,expected_throughput,delta,delta_bar,\
diversity_min,diversity_q1,diversity_median,diversity_q3,diversity_max,\
coverage_min,coverage_q1,coverage_median,coverage_q3,coverage_max";
pub const ENHANCEMENT_HEADER: &str = "budget,w,delta_bar,delta";
const DIVERSITY_HEADER: &str = "budget,w,pair,origin,destination,count";
const COVERAGE_HEADER: &str = "budget,w,pair,origin,destination,distance_km,t";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioValue {
    pub label: String,
    pub probability: f64,
    pub throughput: f64,
}

/// Solver statistics without wall time, so repeated runs write identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignStats {
    pub nodes: usize,
    pub variables: usize,
    pub rows: usize,
    pub binaries: usize,
    pub lp_evaluations: usize,
    pub proven_optimal: bool,
    pub big_m: f64,
    pub big_m_lambda: f64,
    pub big_m_doublings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub format: String,
    pub config_hash: String,
    pub method: String,
    pub budget: f64,
    pub w: f64,
    pub levels: Vec<usize>,
    pub z: Vec<Vec<f64>>,
    pub capacities: Vec<f64>,
    pub cost: f64,
    pub objective: f64,
    pub expected_throughput: f64,
    pub scenarios: Vec<ScenarioValue>,
    pub stats: DesignStats,
    pub big_m_flags: Vec<String>,
    pub big_m_suspect: bool,
}

pub fn design_file(spec: &DesignSpec, r: &DesignResult, config_hash: &str) -> DesignFile {
    let s = &r.stats;
    DesignFile {
        format: DESIGN_FORMAT.into(),
        config_hash: config_hash.into(),
        method: r.method.name().into(),
        budget: spec.budget,
        w: spec.w,
        levels: r.levels.clone(),
        z: r.z.row_iter().map(|row| row.iter().copied().collect()).collect(),
        capacities: r.capacities.clone(),
        cost: r.cost,
        objective: r.objective,
        expected_throughput: r.expected_throughput,
        scenarios: spec
            .scenarios
            .iter()
            .zip(&r.scenario_throughputs)
            .map(|(sc, &t)| ScenarioValue { label: sc.label(), probability: sc.probability, throughput: t })
            .collect(),
        stats: DesignStats {
            nodes: s.nodes,
            variables: s.variables,
            rows: s.rows,
            binaries: s.binaries,
            lp_evaluations: s.lp_evaluations,
            proven_optimal: s.proven_optimal,
            big_m: s.big_m,
            big_m_lambda: s.big_m_lambda,
            big_m_doublings: s.big_m_doublings,
        },
        big_m_flags: r.big_m_flags.clone(),
        big_m_suspect: r.big_m_suspect,
    }
}

pub fn read_design(text: &str) -> Result<DesignFile, VfError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: DesignFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        VfError::Format(format!("line {}, column {}: {path}: {inner}", inner.line(), inner.column()))
    })?;
    if file.format != DESIGN_FORMAT {
        return Err(VfError::Format(format!("format: expected {DESIGN_FORMAT:?}, found {:?}", file.format)));
    }
    Ok(file)
}

/// Numbers with 9 significant digits, trailing zeros trimmed; exponent form below 1e-5 or from 1e9.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..9).contains(&exp) {
        format!("{}e{exp}", trim(mantissa))
    } else {
        trim(&format!("{x:.*}", (8 - exp).max(0) as usize))
    }
}

/// Min, first quartile, median, third quartile and max with linear interpolation.
pub fn quartiles(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Some([v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub budgets: Vec<f64>,
    pub ws: Vec<f64>,
    pub method: Method,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), VfError> {
        for (name, grid) in [("budget", &self.budgets), ("w", &self.ws)] {
            if grid.is_empty() {
                return Err(VfError::Format(format!("{name} grid is empty")));
            }
            if grid.windows(2).any(|p| p[1] <= p[0]) || grid.iter().any(|v| !v.is_finite()) {
                return Err(VfError::Format(format!("{name} grid must be finite and strictly ascending")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub budget: f64,
    pub w: f64,
    pub design: DesignFile,
    pub enhancement: EnhancementReport,
    /// None when some O-D pair has no direct link.
    pub diversity: Option<DiversityReport>,
    pub coverage: Option<CoverageReport>,
}

/// Solves every grid point, in parallel, and returns rows ordered by (budget, w).
pub fn run_sweep(inst: &Instance, config: &SweepConfig, hash: &str, solver: &dyn Solver) -> Result<Vec<SweepRow>, VfError> {
    config.validate()?;
    let base = inst.design_spec(config.budgets[0], config.ws[0])?;
    let original = original_throughputs(&base, solver)?;
    let grid: Vec<(f64, f64)> = config.budgets.iter().flat_map(|&b| config.ws.iter().map(move |&w| (b, w))).collect();
    grid.par_iter()
        .map(|&(budget, w)| {
            let spec = DesignSpec { budget, w, ..base.clone() };
            let r = solve_design(&spec, config.method, solver)?;
            let enhancement = enhancement_from_throughputs(&spec, &original, &r.scenario_throughputs)?;
            let diversity = match travel_diversity(&spec, &r.capacities) {
                Ok(d) => Some(d),
                Err(VfError::PairWithoutLink(..)) => None,
                Err(e) => return Err(e),
            };
            let coverage = match diversity {
                Some(_) => Some(max_landing_distance(&spec, &r.capacities)?),
                None => None,
            };
            Ok(SweepRow { budget, w, design: design_file(&spec, &r, hash), enhancement, diversity, coverage })
        })
        .collect()
}

fn csv_text(header: &str, rows: Vec<Vec<String>>) -> Result<String, VfError> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    wtr.write_record(header.split(',')).map_err(|e| VfError::Format(e.to_string()))?;
    for r in rows {
        wtr.write_record(&r).map_err(|e| VfError::Format(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| VfError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| VfError::Format(e.to_string()))
}

fn quart_cells(values: Option<Vec<f64>>) -> Vec<String> {
    match values.as_deref().and_then(quartiles) {
        Some(q) => q.iter().map(|&v| fmt_num(v)).collect(),
        None => vec![String::new(); 5],
    }
}

/// The metrics CSV row for one design.
pub fn metrics_record(row: &SweepRow) -> Vec<String> {
    let d = &row.design;
    let mut rec = vec![
        fmt_num(row.budget),
        fmt_num(row.w),
        d.method.clone(),
        fmt_num(d.cost),
        fmt_num(d.objective),
        fmt_num(d.expected_throughput),
        fmt_num(row.enhancement.delta),
        fmt_num(row.enhancement.delta_bar),
    ];
    rec.extend(quart_cells(row.diversity.as_ref().map(|r| r.counts.iter().map(|&c| c as f64).collect())));
    rec.extend(quart_cells(row.coverage.as_ref().map(|r| r.per_pair.iter().map(|p| p.0).collect())));
    rec
}

pub fn metrics_csv(rows: &[SweepRow]) -> Result<String, VfError> {
    csv_text(METRICS_HEADER, rows.iter().map(metrics_record).collect())
}

/// Writes designs.json, metrics.csv, enhancement.csv, diversity.csv and coverage.csv into `dir`.
pub fn write_sweep(dir: &Path, rows: &[SweepRow], pairs: &[(usize, usize)]) -> Result<(), VfError> {
    fs::create_dir_all(dir)?;
    let designs: Vec<&DesignFile> = rows.iter().map(|r| &r.design).collect();
    let mut json = serde_json::to_string_pretty(&designs).map_err(|e| VfError::Format(e.to_string()))?;
    json.push('\n');
    fs::write(dir.join("designs.json"), json)?;
    fs::write(dir.join("metrics.csv"), metrics_csv(rows)?)?;
    let enh = rows
        .iter()
        .map(|r| vec![fmt_num(r.budget), fmt_num(r.w), fmt_num(r.enhancement.delta_bar), fmt_num(r.enhancement.delta)])
        .collect();
    fs::write(dir.join("enhancement.csv"), csv_text(ENHANCEMENT_HEADER, enh)?)?;
    let mut div = Vec::new();
    let mut cov = Vec::new();
    for r in rows {
        let head = |i: usize| vec![fmt_num(r.budget), fmt_num(r.w), i.to_string(), pairs[i].0.to_string(), pairs[i].1.to_string()];
        if let Some(d) = &r.diversity {
            for (i, &c) in d.counts.iter().enumerate() {
                let mut rec = head(i);
                rec.push(c.to_string());
                div.push(rec);
            }
        }
        if let Some(c) = &r.coverage {
            for (i, &(dist, t)) in c.per_pair.iter().enumerate() {
                let mut rec = head(i);
                rec.push(fmt_num(dist));
                rec.push(fmt_num(t));
                cov.push(rec);
            }
        }
    }
    fs::write(dir.join("diversity.csv"), csv_text(DIVERSITY_HEADER, div)?)?;
    fs::write(dir.join("coverage.csv"), csv_text(COVERAGE_HEADER, cov)?)?;
    Ok(())
}
