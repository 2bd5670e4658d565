//! The `kura` command line: one batch command per invocation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::dynamics::residual;
use crate::equilibria::{
    catalog_for, describe, find_equilibria_with, standard_seeds, verify_lemma_conditions, SearchOptions,
    TorusBase,
};
use crate::error::{Error, Result};
use crate::graphs::{generate, Graph, GraphFamily};
use crate::heteroclinic::{export_dot, probe, ProbeOptions};
use crate::spectral::{classify, jacobian, scan_csv, six_cycle_reference_roots, spectrum, torus_scan, ZeroTol};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Write the graph as an edge list.
    Gen,
    /// Check the torus conditions and the spectrum on the standard torus.
    Verify,
    /// Jacobian spectra along the standard torus, one row per grid point.
    Scan,
    /// Seeded equilibrium search with classification.
    Equilibria,
    /// Heteroclinic digraph between the known components.
    Hetero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Dot,
}

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq, Parser, Serialize)]
#[command(name = "kura", version, about = "Equilibria of Kuramoto networks on graphs")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Family (`eye:2`, `cycle:6`, `h90`, ...), inline JSON, or a path to a
    /// JSON family or an edge-list file.
    #[arg(long)]
    pub graph: String,
    /// `start:end:count`, end exclusive; accepts `pi` tokens such as `2pi`
    /// or `pi/2`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    /// Command-specific tolerance (zero eigenvalues, Newton residual, or
    /// convergence residual).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probe trials per component.
    #[arg(long, default_value_t = 64)]
    pub trials: usize,
    /// Number of search seeds for `equilibria`.
    #[arg(long, default_value_t = 500)]
    pub seeds: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Main artifact; written to `--out` if given, else to stdout.
    pub primary: String,
    /// Extra files written next to `--out`.
    pub side_files: Vec<(PathBuf, String)>,
    /// False when `verify` found a failing check.
    pub success: bool,
}

impl RunOutput {
    fn ok(primary: String) -> Self {
        Self { primary, side_files: Vec::new(), success: true }
    }

    /// Writes the artifacts to disk or stdout.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        let write = |p: &Path, s: &str| {
            std::fs::write(p, s).map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", p.display())))
        };
        match out {
            Some(path) => {
                write(path, &self.primary)?;
                for (p, s) in &self.side_files {
                    write(p, s)?;
                }
            }
            None => print!("{}", self.primary),
        }
        Ok(())
    }
}

/// A graph together with its family, when it came from one.
#[derive(Debug, Clone)]
pub struct GraphSource {
    pub graph: Graph,
    pub family: Option<GraphFamily>,
}

/// Resolves `--graph`: inline JSON, an existing file (JSON family or edge
/// list), or a compact family string.
pub fn load_graph(spec: &str) -> Result<GraphSource> {
    let from_family = |family: GraphFamily| -> Result<GraphSource> {
        Ok(GraphSource { graph: generate(&family)?, family: Some(family) })
    };
    let parse_json = |text: &str| -> Result<GraphFamily> {
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    };
    let trimmed = spec.trim();
    if trimmed.starts_with('{') {
        return from_family(parse_json(trimmed)?);
    }
    let path = Path::new(trimmed);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            return from_family(parse_json(&text)?);
        }
        return Ok(GraphSource { graph: Graph::from_edge_list(&text)?, family: None });
    }
    from_family(trimmed.parse()?)
}

/// Parses an angle such as `1.5`, `pi`, `-pi/2`, `2pi`, `3*pi/4`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("invalid angle {s:?}"));
    let Some(at) = s.find("pi") else {
        return s.parse::<f64>().map_err(|_| bad()).and_then(finite);
    };
    let coeff = s[..at].trim_end_matches('*').trim();
    let coeff = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = s[at + 2..].trim();
    let denom = match rest.strip_prefix('/') {
        None if rest.is_empty() => 1.0,
        Some(d) => d.trim().parse::<f64>().map_err(|_| bad())?,
        None => return Err(bad()),
    };
    if denom == 0.0 {
        return Err(bad());
    }
    finite(coeff * PI / denom)
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite)
    }
}

/// `start:end:count` into `count` points from `start`, end exclusive.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let fields: Vec<&str> = spec.split(':').collect();
    let [start, end, count] = fields.as_slice() else {
        return Err(Error::InvalidParameter(format!("grid must be start:end:count, got {spec:?}")));
    };
    let (start, end) = (parse_angle(start)?, parse_angle(end)?);
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("invalid grid count {count:?}")))?;
    if count == 0 {
        return Err(Error::InvalidParameter("grid count must be positive".into()));
    }
    let step = (end - start) / count as f64;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// `(0, β, …, β)` on a `d`-part torus, or `(β)` when `d = 1`.
fn scan_shifts(d: usize, beta: f64) -> Vec<f64> {
    if d == 1 {
        vec![beta]
    } else {
        (0..d).map(|p| if p == 0 { 0.0 } else { beta }).collect()
    }
}

fn require_family(src: &GraphSource) -> Result<&GraphFamily> {
    src.family
        .as_ref()
        .ok_or_else(|| Error::Unsupported("this command needs a graph family, not an edge list".into()))
}

fn require_seed(cfg: &RunConfig) -> Result<u64> {
    cfg.seed.ok_or_else(|| Error::InvalidParameter(format!("--seed is required for {:?}", cfg.command)))
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("--{name} must be positive, got {x}")))
    }
}

fn echo(cfg: &RunConfig) -> serde_json::Value {
    json!({ "tool": "kura", "version": VERSION, "config": cfg })
}

fn to_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn unsupported_format(cfg: &RunConfig, f: Format) -> Error {
    Error::Unsupported(format!("{f:?} output is not available for {:?}", cfg.command).to_lowercase())
}

/// Runs one command.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    positive("dt", cfg.dt)?;
    positive("t-end", cfg.t_end)?;
    if let Some(tol) = cfg.tol {
        positive("tol", tol)?;
    }
    let src = load_graph(&cfg.graph)?;
    match cfg.command {
        Command::Gen => run_gen(cfg, &src),
        Command::Verify => run_verify(cfg, &src),
        Command::Scan => run_scan(cfg, &src),
        Command::Equilibria => run_equilibria(cfg, &src),
        Command::Hetero => run_hetero(cfg, &src),
    }
}

fn run_gen(cfg: &RunConfig, src: &GraphSource) -> Result<RunOutput> {
    let g = &src.graph;
    let text = match cfg.format {
        None => g.to_edge_list(),
        Some(Format::Csv) => {
            let mut s = format!("# kura {VERSION} gen graph={}\nu,v\n", cfg.graph);
            for (u, v) in g.edges() {
                s.push_str(&format!("{u},{v}\n"));
            }
            s
        }
        Some(Format::Json) => {
            let mut v = echo(cfg);
            v["n"] = json!(g.vertex_count());
            v["edges"] = json!(g.edges());
            to_json(&v)
        }
        Some(Format::Dot) => {
            let mut s = format!("// kura {VERSION} gen graph={}\ngraph G {{\n", cfg.graph);
            for j in 0..g.vertex_count() {
                s.push_str(&format!("  {j};\n"));
            }
            for (u, v) in g.edges() {
                s.push_str(&format!("  {u} -- {v};\n"));
            }
            s.push_str("}\n");
            s
        }
    };
    Ok(RunOutput::ok(text))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn run_verify(cfg: &RunConfig, src: &GraphSource) -> Result<RunOutput> {
    let family = require_family(src)?;
    let base = TorusBase::for_family(family)?;
    let tol = cfg.tol.unwrap_or(1e-8);
    let d = base.partition().len();
    let shifts: Vec<f64> = (0..d).map(|p| if p == 0 { 0.0 } else { PI / 2.0 }).collect();
    let g = &src.graph;
    let c = base.build(&shifts)?;

    let mut checks = Vec::new();
    let mut check = |name: &str, pass: bool, detail: String| {
        checks.push(Check { name: name.into(), pass, detail });
    };
    check(
        "torus_conditions",
        verify_lemma_conditions(g, base.partition(), &c, tol)?,
        format!("parts={d}"),
    );
    let res = residual(g, &c)?;
    check("residual", res <= tol, format!("residual={res:e}"));
    let report = spectrum(&jacobian(g, &c)?, ZeroTol::Absolute(tol))?;
    check("zero_count", report.zero_count == d, format!("zero_count={} expected={d}", report.zero_count));
    let class = classify(&report, d).ok();
    let class_text = class.map_or_else(|| "none".to_string(), |c| c.to_string());
    if let GraphFamily::EyeGd { d: eyes } = family {
        let top = report.largest_nonzero().unwrap_or(f64::NEG_INFINITY);
        check("transversal_bound", top <= -0.5 + tol, format!("largest_nonzero={top}"));
        let reference = six_cycle_reference_roots(*eyes);
        let dev = report
            .eigenvalues
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        check("reference_roots", dev <= 1e-9, format!("max_deviation={dev:e}"));
    } else {
        check(
            "transversally_stable",
            class == Some(crate::spectral::StabilityClass::TransversallyStable { d }),
            format!("class={class_text}"),
        );
    }
    let success = checks.iter().all(|c| c.pass);

    let text = match cfg.format {
        Some(Format::Json) => {
            let mut v = echo(cfg);
            v["shifts"] = json!(shifts);
            v["checks"] = json!(checks);
            v["spectrum"] = json!(report);
            v["class"] = json!(class);
            to_json(&v)
        }
        None => {
            let mut s = format!("# kura {VERSION} verify graph={} tol={tol:e}\n", cfg.graph);
            for c in &checks {
                s.push_str(&format!("{} {} {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            s.push_str(&format!("class {class_text}\n"));
            s
        }
        Some(f) => return Err(unsupported_format(cfg, f)),
    };
    Ok(RunOutput { primary: text, side_files: Vec::new(), success })
}

fn run_scan(cfg: &RunConfig, src: &GraphSource) -> Result<RunOutput> {
    let family = require_family(src)?;
    let base = TorusBase::for_family(family)?;
    let grid_spec = cfg
        .grid
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("--grid is required for scan".into()))?;
    let betas = parse_grid(grid_spec)?;
    let d = base.partition().len();
    let grid: Vec<Vec<f64>> = betas.iter().map(|&b| scan_shifts(d, b)).collect();
    let tol = cfg.tol.unwrap_or(1e-8);
    let rows = torus_scan(&src.graph, &base, &grid, ZeroTol::Absolute(tol))?;
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => format!(
            "# kura {VERSION} scan graph={} grid={grid_spec} tol={tol:e}\n{}",
            cfg.graph,
            scan_csv(&rows)
        ),
        Format::Json => {
            let mut v = echo(cfg);
            v["rows"] = json!(rows);
            to_json(&v)
        }
        f => return Err(unsupported_format(cfg, f)),
    };
    Ok(RunOutput::ok(text))
}

fn run_equilibria(cfg: &RunConfig, src: &GraphSource) -> Result<RunOutput> {
    let seed = require_seed(cfg)?;
    if let Some(f) = cfg.format.filter(|&f| f != Format::Json) {
        return Err(unsupported_format(cfg, f));
    }
    let g = &src.graph;
    let opts = SearchOptions { newton_tol: cfg.tol.unwrap_or(1e-12), ..SearchOptions::default() };
    let seeds = standard_seeds(g.vertex_count(), cfg.seeds, seed);
    let found = find_equilibria_with(g, &seeds, &opts)?;
    let catalog = src.family.as_ref().and_then(catalog_for).unwrap_or_default();
    let records = found
        .equilibria
        .iter()
        .map(|c| describe(g, c, &catalog, 1e-6))
        .collect::<Result<Vec<_>>>()?;
    let mut v = echo(cfg);
    v["equilibria"] = json!(records);
    v["failures"] = json!(found.failures);
    Ok(RunOutput::ok(to_json(&v)))
}

fn run_hetero(cfg: &RunConfig, src: &GraphSource) -> Result<RunOutput> {
    let seed = require_seed(cfg)?;
    let family = require_family(src)?;
    let catalog = catalog_for(family)
        .ok_or_else(|| Error::Unsupported(format!("no component catalog for {family}")))?;
    let opts = ProbeOptions {
        trials: cfg.trials,
        dt: cfg.dt,
        t_end: cfg.t_end,
        stop_residual: cfg.tol.unwrap_or(1e-8),
        seed,
        ..ProbeOptions::default()
    };
    let h = probe(&src.graph, &catalog, &opts)?;
    let dot = format!("// kura {VERSION} hetero graph={} seed={seed} trials={}\n{}", cfg.graph, cfg.trials, export_dot(&h));
    let mut v = echo(cfg);
    v["digraph"] = json!(h);
    let json_text = to_json(&v);

    let format = cfg.format.unwrap_or(Format::Dot);
    let (primary, other, ext) = match format {
        Format::Dot => (dot, json_text, "json"),
        Format::Json => (json_text, dot, "dot"),
        f => return Err(unsupported_format(cfg, f)),
    };
    let side_files = cfg.out.iter().map(|p| (p.with_extension(ext), other.clone())).collect();
    Ok(RunOutput { primary, side_files, success: true })
}

/// Machine-readable error record.
pub fn error_record(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0").unwrap(), 0.0);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_angle("3*pi/4").unwrap(), 0.75 * PI);
        assert_eq!(parse_angle("1.25").unwrap(), 1.25);
        assert!(parse_angle("pie").is_err());
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("x").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("0:2pi:256").unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g[64], PI / 2.0);
        assert!(g[255] < 2.0 * PI);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn graph_sources() {
        assert_eq!(load_graph("eye:2").unwrap().graph.vertex_count(), 12);
        assert_eq!(load_graph(r#"{"family":"cycle","n":5}"#).unwrap().graph.edge_count(), 5);
        assert!(load_graph("nonsense:3").is_err());
    }

    #[test]
    fn seed_is_required_for_stochastic_commands() {
        let cfg = RunConfig::try_parse_from(["kura", "hetero", "--graph", "complete:4"]).unwrap();
        assert!(matches!(run(&cfg), Err(Error::InvalidParameter(_))));
    }
}
