//! End-to-end pipeline: ingest instances, build the cubic objective, plan
//! substitutions, quadratize, solve, export models, and report per-instance
//! and aggregate statistics.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{parse_dimacs, CnfError, CnfInstance};
use crate::poly::{build_objective, parse_cubic_poly, Polynomial, PolyError};
use crate::quad::{
    extract_cubic_terms, pair_frequencies, penalty_lower_bound, penalty_lower_bound_oracle,
    plan_substitutions, quadratize, Provenance, QuadError, QuboModel, SubstitutionPlan,
};
use crate::solver::{
    brute_force, decode, tabu_search, SearchLimits, SolveError, SolveReport,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{name}: {source}")]
    Cnf { name: String, source: CnfError },
    #[error("{name}: {source}")]
    Poly { name: String, source: PolyError },
    #[error("{name}: {source}")]
    Quad { name: String, source: QuadError },
    #[error("{name}: {source}")]
    Solve { name: String, source: SolveError },
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error("unsupported format `{format}`")]
    UnsupportedFormat { format: String },
    #[error("import failed: {reason}")]
    Import { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Cnf,
    Poly,
}

impl FromStr for InputKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cnf" => Ok(Self::Cnf),
            "poly" => Ok(Self::Poly),
            other => Err(PipelineError::InvalidConfig {
                reason: format!("unknown input kind `{other}`"),
            }),
        }
    }
}

/// How the penalty coefficient is picked: the closed-form bound, the
/// exhaustive oracle (desk scale only), or a fixed user value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MMode {
    Eq3,
    Oracle,
    Fixed(i64),
}

impl FromStr for MMode {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "eq3" {
            return Ok(Self::Eq3);
        }
        if s == "oracle" {
            return Ok(Self::Oracle);
        }
        if let Some(value) = s.strip_prefix("fixed:") {
            let value: i64 = value.parse().map_err(|_| PipelineError::InvalidConfig {
                reason: format!("`{s}` is not a valid penalty mode"),
            })?;
            return Ok(Self::Fixed(value));
        }
        Err(PipelineError::InvalidConfig {
            reason: format!("unknown penalty mode `{s}`"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Tabu,
    Exact,
}

impl FromStr for SolverChoice {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tabu" => Ok(Self::Tabu),
            "exact" => Ok(Self::Exact),
            other => Err(PipelineError::InvalidConfig {
                reason: format!("unknown solver `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    QuboFile,
    Json,
}

impl ExportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            Self::QuboFile => "qubo",
            Self::Json => "json",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qubo" => Ok(Self::QuboFile),
            "json" => Ok(Self::Json),
            other => Err(PipelineError::UnsupportedFormat {
                format: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub kind: InputKind,
    pub m_mode: MMode,
    pub solver: SolverChoice,
    pub seed: u64,
    pub time_limit: Option<f64>,
    pub iterations: Option<u64>,
    pub target_stop: bool,
    pub out: Option<PathBuf>,
    pub format: ExportFormat,
    pub stats_path: Option<PathBuf>,
    pub stats_only: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            kind: InputKind::Cnf,
            m_mode: MMode::Eq3,
            solver: SolverChoice::Tabu,
            seed: 0,
            time_limit: None,
            iterations: None,
            target_stop: false,
            out: None,
            format: ExportFormat::QuboFile,
            stats_path: None,
            stats_only: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if let MMode::Fixed(m) = self.m_mode {
            if m < 1 {
                return Err(PipelineError::InvalidConfig {
                    reason: format!("fixed penalty must be at least 1, got {m}"),
                });
            }
        }
        if let Some(t) = self.time_limit {
            if !t.is_finite() || t <= 0.0 {
                return Err(PipelineError::InvalidConfig {
                    reason: format!("time limit must be positive, got {t}"),
                });
            }
        }
        if self.solver == SolverChoice::Tabu
            && !self.stats_only
            && self.time_limit.is_none()
            && self.iterations.is_none()
        {
            return Err(PipelineError::InvalidConfig {
                reason: "tabu solver needs a time limit or an iteration budget".into(),
            });
        }
        Ok(())
    }

    /// Without a wall-clock limit every stage is deterministic, so elapsed
    /// times are reported as zero to keep outputs byte-identical.
    fn deterministic(&self) -> bool {
        self.time_limit.is_none()
    }
}

/// Per-instance transformation and solve statistics; one CSV row each.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceStats {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub cubic_terms: usize,
    pub forced_pairs: usize,
    pub residual_ip: usize,
    /// Percentage of cubic terms settled before the exact cover search.
    pub pct_reduction_terms: f64,
    /// Percentage of candidate quadratic subterms forced by dominance.
    pub pct_reduction_pairs: f64,
    pub aux_count: usize,
    pub m_lb: i64,
    pub q_nodes: usize,
    pub q_edges: usize,
    pub pct_satisfied: Option<f64>,
    pub elapsed: f64,
}

/// Everything the pipeline produced for one instance.
#[derive(Debug, Clone)]
pub struct ProcessedInstance {
    pub stats: InstanceStats,
    pub model: QuboModel,
    pub report: Option<SolveReport>,
}

/// Resolve the penalty coefficient for a plan under the configured mode.
pub fn resolve_penalty(
    plan: &SubstitutionPlan,
    cubics: &[crate::quad::CubicTerm],
    mode: MMode,
) -> Result<i64, QuadError> {
    Ok(match mode {
        MMode::Eq3 => penalty_lower_bound(plan),
        MMode::Oracle => {
            let bound = penalty_lower_bound_oracle(plan, cubics)?;
            bound.ceil().to_integer().max(1)
        }
        MMode::Fixed(m) => m,
    })
}

/// Run parse, transform, quadratize, and (unless stats-only) solve for one
/// instance given as text.
pub fn process_instance(
    name: &str,
    text: &str,
    cfg: &PipelineConfig,
) -> Result<ProcessedInstance, PipelineError> {
    let started = Instant::now();
    let tag = |n: &str| n.to_string();

    let (instance, poly) = match cfg.kind {
        InputKind::Cnf => {
            let instance = parse_dimacs(text, name).map_err(|source| PipelineError::Cnf {
                name: tag(name),
                source,
            })?;
            let poly = build_objective(&instance);
            (Some(instance), poly)
        }
        InputKind::Poly => {
            let poly = parse_cubic_poly(text).map_err(|source| PipelineError::Poly {
                name: tag(name),
                source,
            })?;
            (None, poly)
        }
    };
    let num_vars = poly.num_vars();
    let quad_err = |source| PipelineError::Quad {
        name: tag(name),
        source,
    };
    let cubics = extract_cubic_terms(&poly).map_err(quad_err)?;
    let plan = plan_substitutions(&cubics, num_vars).map_err(quad_err)?;
    let m_lb = penalty_lower_bound(&plan);
    let penalty = resolve_penalty(&plan, &cubics, cfg.m_mode).map_err(quad_err)?;
    let mut model = quadratize(&poly, &plan, penalty).map_err(quad_err)?;
    if let Some(inst) = &instance {
        model.set_provenance(Provenance {
            source_name: inst.source_name().to_string(),
            num_vars: inst.num_vars(),
            num_clauses: inst.num_clauses(),
        });
    }

    let report = if cfg.stats_only {
        None
    } else {
        let mut report = match cfg.solver {
            SolverChoice::Exact => {
                let best = brute_force(&model).map_err(|source| PipelineError::Solve {
                    name: tag(name),
                    source,
                })?;
                let penalty_clean = model.penalty_clean(&best.bits);
                SolveReport {
                    penalty_clean,
                    decoded_satisfied: None,
                    elapsed: if cfg.deterministic() {
                        0.0
                    } else {
                        started.elapsed().as_secs_f64()
                    },
                    seed: cfg.seed,
                    iterations: 1u64 << model.size().min(63),
                    best,
                }
            }
            SolverChoice::Tabu => {
                let limits = SearchLimits {
                    time: cfg.time_limit.map(std::time::Duration::from_secs_f64),
                    iterations: cfg.iterations,
                };
                let target = match (&instance, cfg.target_stop) {
                    (Some(inst), true) => Some(inst.num_clauses() as i64),
                    _ => None,
                };
                tabu_search(&model, cfg.seed, limits, target)
            }
        };
        if let Some(inst) = &instance {
            let decoded =
                decode(&report.best, inst, &model).map_err(|source| PipelineError::Solve {
                    name: tag(name),
                    source,
                })?;
            report.decoded_satisfied = Some(decoded);
        }
        Some(report)
    };

    let cubic_count = cubics.len();
    let candidate_pairs = pair_frequencies(&cubics).len();
    let pct_reduction_terms = if cubic_count == 0 {
        100.0
    } else {
        100.0 * (cubic_count - plan.residual_cover_size()) as f64 / cubic_count as f64
    };
    let pct_reduction_pairs = if candidate_pairs == 0 {
        100.0
    } else {
        100.0 * plan.forced_pairs().len() as f64 / candidate_pairs as f64
    };
    let (m, pct_satisfied) = match (&instance, &report) {
        (Some(inst), Some(rep)) => {
            let m = inst.num_clauses();
            let pct = rep
                .decoded_satisfied
                .map(|d| d as f64 * 100.0 / m as f64);
            (m, pct)
        }
        (Some(inst), None) => (inst.num_clauses(), None),
        _ => (0, None),
    };
    let stats = InstanceStats {
        name: name.to_string(),
        n: num_vars,
        m,
        cubic_terms: cubic_count,
        forced_pairs: plan.forced_pairs().len(),
        residual_ip: plan.residual_cover_size(),
        pct_reduction_terms,
        pct_reduction_pairs,
        aux_count: plan.aux_count(),
        m_lb,
        q_nodes: model.nodes(),
        q_edges: model.edges(),
        pct_satisfied,
        elapsed: if cfg.deterministic() {
            0.0
        } else {
            started.elapsed().as_secs_f64()
        },
    };
    Ok(ProcessedInstance {
        stats,
        model,
        report,
    })
}

/// Process every input file. Failures are tagged with the instance name and
/// do not stop the rest of the collection; results keep input order.
pub fn run_pipeline(cfg: &PipelineConfig) -> Vec<Result<InstanceStats, PipelineError>> {
    if let Err(e) = cfg.validate() {
        return vec![Err(e)];
    }
    let processed: Vec<Result<ProcessedInstance, PipelineError>> = cfg
        .inputs
        .par_iter()
        .map(|path| {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
                path: path.clone(),
                source,
            })?;
            process_instance(&name, &text, cfg)
        })
        .collect();

    let mut results = Vec::with_capacity(processed.len());
    let mut rows = Vec::new();
    for item in processed {
        match item {
            Ok(p) => {
                if let Some(out) = &cfg.out {
                    if let Err(e) = write_export(out, &p, cfg) {
                        results.push(Err(e));
                        continue;
                    }
                }
                rows.push(p.stats.clone());
                results.push(Ok(p.stats));
            }
            Err(e) => results.push(Err(e)),
        }
    }
    if let Some(stats_path) = &cfg.stats_path {
        let csv = stats_to_csv(&rows);
        if let Err(source) = std::fs::write(stats_path, csv) {
            results.push(Err(PipelineError::Io {
                path: stats_path.clone(),
                source,
            }));
        }
    }
    results
}

fn write_export(
    out: &Path,
    processed: &ProcessedInstance,
    cfg: &PipelineConfig,
) -> Result<(), PipelineError> {
    let bytes = export_qubo(&processed.model, cfg.format);
    let target = if cfg.inputs.len() == 1 && !out.is_dir() {
        out.to_path_buf()
    } else {
        std::fs::create_dir_all(out).map_err(|source| PipelineError::Io {
            path: out.to_path_buf(),
            source,
        })?;
        let safe: String = processed
            .stats
            .name
            .chars()
            .map(|c| if c == '/' || c == '\\' { '_' } else { c })
            .collect();
        out.join(format!("{safe}.{}", cfg.format.extension()))
    };
    std::fs::write(&target, bytes).map_err(|source| PipelineError::Io {
        path: target,
        source,
    })
}

#[derive(Serialize, Deserialize)]
struct QuboJson {
    size: usize,
    offset: i64,
    penalty_m: i64,
    entries: Vec<(usize, usize, i64)>,
    var_names: Vec<String>,
}

/// Serialize a model. The `qubo` format is a qbsolv-style text file:
/// comment lines, a `p qubo 0 <maxNodes> <nDiagonals> <nElements>` header,
/// then 0-indexed `i i value` diagonal and `i j value` off-diagonal lines.
pub fn export_qubo(model: &QuboModel, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::QuboFile => {
            let mut out = Vec::new();
            if let Some(p) = model.provenance() {
                writeln!(
                    out,
                    "c source {} vars {} clauses {}",
                    p.source_name, p.num_vars, p.num_clauses
                )
                .unwrap();
            }
            writeln!(out, "c offset {}", model.offset()).unwrap();
            writeln!(out, "c penalty_m {}", model.penalty_m()).unwrap();
            let diagonals: Vec<(usize, i64)> = model
                .entries()
                .filter(|((i, j), _)| i == j)
                .map(|((i, _), v)| (i, v))
                .collect();
            let elements: Vec<((usize, usize), i64)> =
                model.entries().filter(|((i, j), _)| i != j).collect();
            writeln!(
                out,
                "p qubo 0 {} {} {}",
                model.size(),
                diagonals.len(),
                elements.len()
            )
            .unwrap();
            for (i, v) in diagonals {
                writeln!(out, "{i} {i} {v}").unwrap();
            }
            for ((i, j), v) in elements {
                writeln!(out, "{i} {j} {v}").unwrap();
            }
            out
        }
        ExportFormat::Json => {
            let doc = QuboJson {
                size: model.size(),
                offset: model.offset(),
                penalty_m: model.penalty_m(),
                entries: model.entries().map(|((i, j), v)| (i, j, v)).collect(),
                var_names: model.var_names().to_vec(),
            };
            let mut bytes = serde_json::to_vec(&doc).expect("model serializes");
            bytes.push(b'\n');
            bytes
        }
    }
}

/// Parse a model previously written by [`export_qubo`]; export, import, and
/// re-export is byte-identical for both formats.
pub fn import_qubo(bytes: &[u8], format: ExportFormat) -> Result<QuboModel, PipelineError> {
    let malformed = |reason: &str| PipelineError::Import {
        reason: reason.to_string(),
    };
    match format {
        ExportFormat::QuboFile => {
            let text = std::str::from_utf8(bytes).map_err(|_| malformed("not utf-8"))?;
            let mut offset = 0i64;
            let mut penalty_m = 1i64;
            let mut provenance: Option<Provenance> = None;
            let mut model: Option<QuboModel> = None;
            for line in text.lines() {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                match tokens.as_slice() {
                    [] => {}
                    ["c", "source", name, "vars", n, "clauses", m] => {
                        provenance = Some(Provenance {
                            source_name: name.to_string(),
                            num_vars: n.parse().map_err(|_| malformed("bad source line"))?,
                            num_clauses: m.parse().map_err(|_| malformed("bad source line"))?,
                        });
                    }
                    ["c", "offset", v] => {
                        offset = v.parse().map_err(|_| malformed("bad offset"))?;
                    }
                    ["c", "penalty_m", v] => {
                        penalty_m = v.parse().map_err(|_| malformed("bad penalty"))?;
                    }
                    ["c", ..] => {}
                    ["p", "qubo", "0", nodes, _diags, _elems] => {
                        let size: usize = nodes.parse().map_err(|_| malformed("bad header"))?;
                        let mut m = QuboModel::new(size, offset, penalty_m);
                        if let Some(p) = provenance.take() {
                            m.set_provenance(p);
                        }
                        model = Some(m);
                    }
                    [i, j, v] => {
                        let model = model.as_mut().ok_or_else(|| malformed("entry before header"))?;
                        let i: usize = i.parse().map_err(|_| malformed("bad entry"))?;
                        let j: usize = j.parse().map_err(|_| malformed("bad entry"))?;
                        let v: i64 = v.parse().map_err(|_| malformed("bad entry"))?;
                        if i >= model.size() || j >= model.size() {
                            return Err(malformed("entry out of range"));
                        }
                        model.add_coeff(i, j, v);
                    }
                    _ => return Err(malformed("unrecognized line")),
                }
            }
            model.ok_or_else(|| malformed("missing `p qubo` header"))
        }
        ExportFormat::Json => {
            let doc: QuboJson = serde_json::from_slice(bytes)
                .map_err(|e| malformed(&format!("json: {e}")))?;
            let mut model = QuboModel::new(doc.size, doc.offset, doc.penalty_m);
            if doc.var_names.len() == doc.size {
                model.set_var_names(doc.var_names);
            }
            for (i, j, v) in doc.entries {
                if i >= doc.size || j >= doc.size {
                    return Err(malformed("entry out of range"));
                }
                model.add_coeff(i, j, v);
            }
            Ok(model)
        }
    }
}

/// Aggregate distribution of one numeric stats column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSummary {
    pub column: &'static str,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub stdev: f64,
}

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "n",
    "m",
    "cubic_terms",
    "forced_pairs",
    "residual_ip",
    "pct_reduction_terms",
    "pct_reduction_pairs",
    "aux_count",
    "m_lb",
    "q_nodes",
    "q_edges",
    "pct_satisfied",
    "elapsed",
];

fn column_values(rows: &[InstanceStats], column: &str) -> Vec<f64> {
    rows.iter()
        .filter_map(|r| match column {
            "n" => Some(r.n as f64),
            "m" => Some(r.m as f64),
            "cubic_terms" => Some(r.cubic_terms as f64),
            "forced_pairs" => Some(r.forced_pairs as f64),
            "residual_ip" => Some(r.residual_ip as f64),
            "pct_reduction_terms" => Some(r.pct_reduction_terms),
            "pct_reduction_pairs" => Some(r.pct_reduction_pairs),
            "aux_count" => Some(r.aux_count as f64),
            "m_lb" => Some(r.m_lb as f64),
            "q_nodes" => Some(r.q_nodes as f64),
            "q_edges" => Some(r.q_edges as f64),
            "pct_satisfied" => r.pct_satisfied,
            "elapsed" => Some(r.elapsed),
            _ => None,
        })
        .collect()
}

/// Min/max/mean and population standard deviation per numeric column.
pub fn summarize(rows: &[InstanceStats]) -> Vec<ColumnSummary> {
    SUMMARY_COLUMNS
        .iter()
        .map(|&column| {
            let values = column_values(rows, column);
            let count = values.len();
            if count == 0 {
                return ColumnSummary {
                    column,
                    count,
                    min: f64::NAN,
                    max: f64::NAN,
                    mean: f64::NAN,
                    stdev: f64::NAN,
                };
            }
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = values.iter().sum::<f64>() / count as f64;
            let variance =
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
            ColumnSummary {
                column,
                count,
                min,
                max,
                mean,
                stdev: variance.sqrt(),
            }
        })
        .collect()
}

/// Render per-instance rows plus four aggregate rows (min/max/mean/stdev)
/// as CSV. Deterministic for identical inputs.
pub fn stats_to_csv(rows: &[InstanceStats]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["name".to_string()];
    header.extend(SUMMARY_COLUMNS.iter().map(|s| s.to_string()));
    writer.write_record(&header).expect("csv header");
    for row in rows {
        let record = vec![
            row.name.clone(),
            row.n.to_string(),
            row.m.to_string(),
            row.cubic_terms.to_string(),
            row.forced_pairs.to_string(),
            row.residual_ip.to_string(),
            format!("{:.4}", row.pct_reduction_terms),
            format!("{:.4}", row.pct_reduction_pairs),
            row.aux_count.to_string(),
            row.m_lb.to_string(),
            row.q_nodes.to_string(),
            row.q_edges.to_string(),
            row.pct_satisfied
                .map(|p| format!("{p:.4}"))
                .unwrap_or_default(),
            format!("{:.6}", row.elapsed),
        ];
        writer.write_record(&record).expect("csv row");
    }
    let summary = summarize(rows);
    for (label, pick) in [
        ("min", 0usize),
        ("max", 1),
        ("mean", 2),
        ("stdev", 3),
    ] {
        let mut record = vec![label.to_string()];
        for col in &summary {
            let value = match pick {
                0 => col.min,
                1 => col.max,
                2 => col.mean,
                _ => col.stdev,
            };
            record.push(if col.count == 0 {
                String::new()
            } else {
                format!("{value:.4}")
            });
        }
        writer.write_record(&record).expect("csv summary");
    }
    String::from_utf8(writer.into_inner().expect("csv buffer")).expect("csv utf-8")
}

/// Convenience wrapper used by tests and the CLI for models built outside
/// `run_pipeline`: decode plus percent-satisfied computation.
pub fn percent_satisfied(decoded: usize, num_clauses: usize) -> f64 {
    decoded as f64 * 100.0 / num_clauses as f64
}

/// Re-exported helper for building a provenance-tagged model from a CNF
/// instance in one call; the pipeline stages are also available separately.
pub fn compile_instance(
    instance: &CnfInstance,
    m_mode: MMode,
) -> Result<(Polynomial, SubstitutionPlan, QuboModel), QuadError> {
    let poly = build_objective(instance);
    let cubics = extract_cubic_terms(&poly)?;
    let plan = plan_substitutions(&cubics, poly.num_vars())?;
    let penalty = resolve_penalty(&plan, &cubics, m_mode)?;
    let mut model = quadratize(&poly, &plan, penalty)?;
    model.set_provenance(Provenance {
        source_name: instance.source_name().to_string(),
        num_vars: instance.num_vars(),
        num_clauses: instance.num_clauses(),
    });
    Ok((poly, plan, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::random_3sat;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const DEMO: &str = "p cnf 4 4\n1 2 3 0\n-1 -2 3 0\n-1 2 -3 0\n1 2 -4 0\n";

    fn exact_cfg() -> PipelineConfig {
        PipelineConfig {
            m_mode: MMode::Fixed(10),
            solver: SolverChoice::Exact,
            ..Default::default()
        }
    }

    #[test]
    fn demo_pipeline_end_to_end() {
        let processed = process_instance("demo4", DEMO, &exact_cfg()).unwrap();
        assert_eq!(processed.stats.aux_count, 1);
        assert_eq!(processed.stats.pct_satisfied, Some(100.0));
        assert_eq!(processed.stats.m_lb, 2);
        assert_eq!(processed.model.offset(), 3);
        let report = processed.report.unwrap();
        assert_eq!(report.best.total_value, 4);
        assert!(report.penalty_clean);
    }

    #[test]
    fn stats_only_matches_full_mode_transform_stats() {
        let mut cfg = exact_cfg();
        cfg.stats_only = true;
        let lean = process_instance("demo4", DEMO, &cfg).unwrap();
        let full = process_instance("demo4", DEMO, &exact_cfg()).unwrap();
        assert!(lean.report.is_none());
        assert_eq!(lean.stats.pct_satisfied, None);
        let strip = |s: &InstanceStats| {
            (
                s.n,
                s.m,
                s.cubic_terms,
                s.forced_pairs,
                s.residual_ip,
                s.aux_count,
                s.m_lb,
                s.q_nodes,
                s.q_edges,
            )
        };
        assert_eq!(strip(&lean.stats), strip(&full.stats));
        assert_eq!(lean.stats.pct_reduction_terms, full.stats.pct_reduction_terms);
        assert_eq!(lean.stats.pct_reduction_pairs, full.stats.pct_reduction_pairs);
    }

    #[test]
    fn poly_kind_runs_without_decoding() {
        let mut cfg = exact_cfg();
        cfg.kind = InputKind::Poly;
        cfg.m_mode = MMode::Eq3;
        let text = "1 1 2 3\n1 1 2 4\n1 1 2 5\n1 1 2 6\n1 2 3 7\n1 2 3 8\n";
        let processed = process_instance("six", text, &cfg).unwrap();
        assert_eq!(processed.stats.aux_count, 2);
        assert_eq!(processed.stats.m_lb, 4);
        assert_eq!(processed.stats.m, 0);
        assert_eq!(processed.stats.pct_satisfied, None);
        assert!(processed.report.unwrap().decoded_satisfied.is_none());
    }

    #[test]
    fn penalty_mode_resolution() {
        let inst = parse_dimacs(DEMO, "demo4").unwrap();
        let poly = build_objective(&inst);
        let cubics = extract_cubic_terms(&poly).unwrap();
        let plan = plan_substitutions(&cubics, 4).unwrap();
        assert_eq!(resolve_penalty(&plan, &cubics, MMode::Eq3).unwrap(), 2);
        assert_eq!(resolve_penalty(&plan, &cubics, MMode::Oracle).unwrap(), 3);
        assert_eq!(resolve_penalty(&plan, &cubics, MMode::Fixed(25)).unwrap(), 25);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(MMode::from_str("eq3").unwrap(), MMode::Eq3);
        assert_eq!(MMode::from_str("oracle").unwrap(), MMode::Oracle);
        assert_eq!(MMode::from_str("fixed:12").unwrap(), MMode::Fixed(12));
        assert!(MMode::from_str("fixed:x").is_err());
        assert!(MMode::from_str("huge").is_err());
        assert!(ExportFormat::from_str("yaml").is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig {
            m_mode: MMode::Fixed(0),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.m_mode = MMode::Eq3;
        assert!(cfg.validate().is_err()); // tabu without any limit
        cfg.iterations = Some(10);
        assert!(cfg.validate().is_ok());
        cfg.time_limit = Some(0.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn qubo_file_round_trip_demo_census() {
        let processed = process_instance("demo4", DEMO, &exact_cfg()).unwrap();
        let bytes = export_qubo(&processed.model, ExportFormat::QuboFile);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("p qubo 0 5 5 9"));
        let imported = import_qubo(&bytes, ExportFormat::QuboFile).unwrap();
        assert_eq!(imported.dense(), processed.model.dense());
        assert_eq!(imported.offset(), 3);
        assert_eq!(imported.penalty_m(), 10);
        assert_eq!(export_qubo(&imported, ExportFormat::QuboFile), bytes);
    }

    #[test]
    fn zero_size_model_exports_empty_body() {
        let model = QuboModel::new(0, 0, 1);
        let bytes = export_qubo(&model, ExportFormat::QuboFile);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("p qubo 0 0 0 0"));
        let imported = import_qubo(&bytes, ExportFormat::QuboFile).unwrap();
        assert_eq!(imported.size(), 0);
    }

    #[test]
    fn export_import_export_is_byte_identical_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for round in 0..100 {
            let size = rng.random_range(1..=12);
            let mut model = QuboModel::new(size, rng.random_range(-9..=9), rng.random_range(1..=9));
            for i in 0..size {
                for j in i..size {
                    if rng.random_bool(0.4) {
                        model.add_coeff(i, j, rng.random_range(-20..=20));
                    }
                }
            }
            let format = if round % 2 == 0 {
                ExportFormat::QuboFile
            } else {
                ExportFormat::Json
            };
            let first = export_qubo(&model, format);
            let imported = import_qubo(&first, format).unwrap();
            let second = export_qubo(&imported, format);
            assert_eq!(first, second);
        }
    }

    #[test]
    fn csv_summary_matches_recomputation() {
        let cfg = PipelineConfig {
            solver: SolverChoice::Tabu,
            iterations: Some(2_000),
            target_stop: true,
            ..Default::default()
        };
        let processed: Vec<ProcessedInstance> = (0..4)
            .map(|seed| {
                let inst = random_3sat(12, 30, seed);
                process_instance(inst.source_name(), &inst.to_dimacs(), &cfg).unwrap()
            })
            .collect();
        for p in &processed {
            let decoded = p.report.as_ref().unwrap().decoded_satisfied.unwrap();
            assert_eq!(
                p.stats.pct_satisfied,
                Some(percent_satisfied(decoded, p.stats.m))
            );
        }
        let rows: Vec<InstanceStats> = processed.into_iter().map(|p| p.stats).collect();
        let csv = stats_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + rows.len() + 4);
        let summary = summarize(&rows);
        let mean_row: Vec<&str> = lines[1 + rows.len() + 2].split(',').collect();
        assert_eq!(mean_row[0], "mean");
        for (idx, col) in summary.iter().enumerate() {
            let cell = mean_row[idx + 1];
            if col.count == 0 {
                assert!(cell.is_empty());
            } else {
                assert_eq!(cell, format!("{:.4}", col.mean));
            }
        }
    }

    #[test]
    fn pipeline_reports_per_instance_errors_and_continues() {
        let dir = std::env::temp_dir().join(format!("cubiq-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.cnf");
        let bad = dir.join("bad.cnf");
        std::fs::write(&good, DEMO).unwrap();
        std::fs::write(&bad, "p cnf 2 1\n1 2 3 0\n").unwrap();
        let cfg = PipelineConfig {
            inputs: vec![bad.clone(), good.clone()],
            solver: SolverChoice::Exact,
            m_mode: MMode::Fixed(10),
            ..Default::default()
        };
        let results = run_pipeline(&cfg);
        assert_eq!(results.len(), 2);
        assert!(results[0].is_err());
        let stats = results[1].as_ref().unwrap();
        assert_eq!(stats.name, "good");
        assert_eq!(stats.pct_satisfied, Some(100.0));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn empty_input_list_is_success() {
        let cfg = PipelineConfig {
            solver: SolverChoice::Exact,
            ..Default::default()
        };
        assert!(run_pipeline(&cfg).is_empty());
    }
}
