//! Command-line surface: `compute`, `verify`, `bench`, `cache`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::assembly::{grading_violations, result_json, JetRationalPoly};
use crate::cache;
use crate::engine::Retention;
use crate::error::{Error, Result};
use crate::geometry::Coords;
use crate::pipeline::Pipeline;
use crate::scalar::Rational;
use crate::verification::{
    compare_to_reference, cross_check, extract_highest, h_recursion, h_reference, integrate_round, reference,
    round_float_error, round_reduce, CheckResult, Report, RoundPoly,
};

#[derive(Parser, Debug)]
#[command(name = "rw-spectral", version, about = "Exact spectral action coefficients for Robertson-Walker metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute one coefficient a_{order}.
    Compute(ComputeArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Time the level computation.
    Bench(BenchArgs),
    /// Inspect, fill, or clear the level cache.
    Cache(CacheArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CoordsArg {
    Hopf,
    Spherical,
    Both,
}

impl CoordsArg {
    pub fn list(self) -> Vec<Coords> {
        match self {
            CoordsArg::Hopf => vec![Coords::Hopf],
            CoordsArg::Spherical => vec![Coords::Spherical],
            CoordsArg::Both => vec![Coords::Hopf, Coords::Spherical],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Latex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Exact comparison with the stored reference coefficients
    Paper,
    Round,
    Hn,
    Cross,
    All,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, value_enum, default_value = "hopf")]
    pub coords: CoordsArg,
    /// Cache directory; defaults to $RW_SPECTRAL_CACHE_DIR when set.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ComputeArgs {
    #[arg(long)]
    pub order: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Accept odd orders and check that the result is zero.
    #[arg(long)]
    pub allow_odd: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Highest order to check (suite-specific default).
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 6)]
    pub order: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CacheAction {
    Info,
    Warm,
    Clear,
}

#[derive(Args, Debug)]
pub struct CacheArgs {
    #[arg(value_enum, default_value = "info")]
    pub action: CacheAction,
    /// Level to fill up to for `warm`.
    #[arg(long, default_value_t = 8)]
    pub order: usize,
    #[command(flatten)]
    pub common: Common,
}

/// Validated settings shared by all commands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub order: usize,
    pub coords: Vec<Coords>,
    pub format: Format,
    pub cache_dir: Option<PathBuf>,
    pub jobs: usize,
    pub suite: Suite,
    pub allow_odd: bool,
    /// `--order` was passed explicitly (verify picks per-suite defaults otherwise).
    pub order_given: bool,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn base(common: &Common, order: usize, format: Format) -> Result<Self> {
        let jobs = match common.jobs {
            Some(0) => return Err(Error::Usage("--jobs must be at least 1".into())),
            Some(j) => j,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(RunConfig {
            order,
            coords: common.coords.list(),
            format,
            cache_dir: common.cache.clone().or_else(cache::default_dir),
            jobs,
            suite: Suite::All,
            allow_odd: false,
            order_given: true,
            out: common.out.clone(),
        })
    }

    pub fn for_compute(a: &ComputeArgs) -> Result<Self> {
        if a.order % 2 == 1 && !a.allow_odd {
            return Err(Error::Usage(
                "order must be even (odd coefficients vanish; see --allow-odd to verify zero)".into(),
            ));
        }
        let mut c = Self::base(&a.common, a.order, a.format)?;
        c.allow_odd = a.allow_odd;
        Ok(c)
    }

    pub fn for_verify(a: &VerifyArgs) -> Result<Self> {
        let mut c = Self::base(&a.common, a.order.unwrap_or(0), a.format)?;
        if let Some(o) = a.order {
            if o % 2 == 1 {
                return Err(Error::Usage("--order must be even".into()));
            }
        }
        c.suite = a.suite;
        c.order_given = a.order.is_some();
        Ok(c)
    }
}

/// Result of a command: what to print and the process exit status.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub success: bool,
}

/// Parses `args` and runs the command inside a pool of `--jobs` threads.
pub fn run<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            return Ok(Outcome { stdout: e.to_string(), stderr: String::new(), success: true });
        }
        Err(e) => return Err(Error::Usage(e.to_string())),
    };
    execute(cli)
}

pub fn execute(cli: Cli) -> Result<Outcome> {
    let jobs = match &cli.command {
        Command::Compute(a) => a.common.jobs,
        Command::Verify(a) => a.common.jobs,
        Command::Bench(a) => a.common.jobs,
        Command::Cache(a) => a.common.jobs,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Usage(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Compute(a) => cmd_compute(&RunConfig::for_compute(a)?),
        Command::Verify(a) => cmd_verify(&RunConfig::for_verify(a)?),
        Command::Bench(a) => cmd_bench(&RunConfig::base(&a.common, a.order, a.format)?),
        Command::Cache(a) => cmd_cache(a.action, &RunConfig::base(&a.common, a.order, Format::Text)?),
    })
}

/// A pipeline for `coords`, warm-started from the cache directory if any.
fn open_pipeline(coords: Coords, cfg: &RunConfig) -> Result<Pipeline> {
    match &cfg.cache_dir {
        Some(dir) => {
            let (memo, _) = cache::load_or_new(coords, &cache::cache_path(dir, coords))?;
            Ok(Pipeline::from_memo(coords, memo.with_retention(Retention::Window)))
        }
        None => Ok(Pipeline::new(coords)),
    }
}

fn close_pipeline(p: &Pipeline, cfg: &RunConfig) -> Result<()> {
    if let Some(dir) = &cfg.cache_dir {
        if p.memo().level_complete() > p.reused_levels {
            cache::save(p.memo(), &cache::cache_path(dir, p.coords))?;
        }
    }
    Ok(())
}

fn emit(cfg: &RunConfig, body: String) -> Result<String> {
    match &cfg.out {
        Some(path) => {
            write_file(path, &body)?;
            Ok(String::new())
        }
        None => Ok(body),
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body)?;
    Ok(())
}

fn format_result(poly: &JetRationalPoly, order: usize, coords: Coords, format: Format) -> Result<String> {
    let shown = if order % 2 == 1 { poly.clone() } else { poly.table_form(order)? };
    Ok(match format {
        Format::Text => format!("a_{order} = {}", shown.to_text()),
        Format::Latex => format!("a_{{{order}}} = {}", shown.to_latex()),
        Format::Json => serde_json::to_string_pretty(&result_json(poly, order, coords.name())?)?,
    })
}

pub fn cmd_compute(cfg: &RunConfig) -> Result<Outcome> {
    let mut outputs = Vec::new();
    let mut stderr = String::new();
    let mut results: Vec<JetRationalPoly> = Vec::new();
    for &coords in &cfg.coords {
        let start = Instant::now();
        let mut p = open_pipeline(coords, cfg)?;
        let poly = p.a(cfg.order)?;
        close_pipeline(&p, cfg)?;
        if cfg.order % 2 == 1 {
            stderr.push_str(&format!("a_{} vanishes exactly ({})\n", cfg.order, coords.name()));
        }
        let (nodes, terms): (usize, usize) =
            p.stats.iter().fold((0, 0), |(n, t), s| (n + s.nodes, t + s.terms));
        stderr.push_str(&format!(
            "{}: a_{} in {:.2}s, {} levels computed ({} reused), {nodes} nodes, {terms} terms\n",
            coords.name(),
            cfg.order,
            start.elapsed().as_secs_f64(),
            p.stats.len(),
            p.reused_levels,
        ));
        outputs.push(format_result(&poly, cfg.order, coords, cfg.format)?);
        results.push(poly);
    }
    if results.len() == 2 && !cross_check(&results[0], &results[1]) {
        return Err(Error::Invariant(format!("a_{} differs between coordinate systems", cfg.order)));
    }
    let body = if cfg.coords.len() == 1 {
        outputs.remove(0)
    } else if cfg.format == Format::Json {
        format!("[{}]", outputs.join(",\n"))
    } else {
        cfg.coords
            .iter()
            .zip(&outputs)
            .map(|(c, o)| format!("[{}] {o}", c.name()))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let stdout = emit(cfg, body + "\n")?;
    Ok(Outcome { stdout, stderr, success: true })
}

/// Computed coefficients shared by the checks of one `verify` run.
struct Results {
    pipelines: BTreeMap<Coords, Pipeline>,
}

impl Results {
    fn get(&mut self, coords: Coords, order: usize, cfg: &RunConfig) -> Result<JetRationalPoly> {
        if !self.pipelines.contains_key(&coords) {
            self.pipelines.insert(coords, open_pipeline(coords, cfg)?);
        }
        self.pipelines.get_mut(&coords).expect("inserted").a(order)
    }
}

fn suite_reference(rep: &mut Report, res: &mut Results, cfg: &RunConfig, max: usize) {
    for &coords in &cfg.coords {
        for order in (0..=max).step_by(2) {
            rep.push(CheckResult::run(format!("reference a_{order} ({})", coords.name()), || {
                let a = res.get(coords, order, cfg)?;
                let diff = compare_to_reference(order, &a)?;
                let grading = grading_violations(&a, order)?;
                Ok(match (diff.first(), grading.first()) {
                    (None, None) => (true, format!("{} monomials match", a.len())),
                    (Some(d), _) => (
                        false,
                        format!(
                            "{} monomials differ, first {:?}: computed {} reference {}",
                            diff.len(),
                            d.jets,
                            d.computed,
                            d.reference
                        ),
                    ),
                    (None, Some(m)) => (false, format!("grading violated at {m:?}")),
                })
            }));
        }
    }
}

fn single_s_power(r: &RoundPoly) -> Option<(u32, &Rational)> {
    match (r.even.len(), r.odd.is_empty()) {
        (1, true) => r.even.iter().next().map(|(k, v)| (*k, v)),
        _ => None,
    }
}

fn suite_round(rep: &mut Report, res: &mut Results, cfg: &RunConfig, order: usize) {
    let coords = cfg.coords[0];
    rep.push(CheckResult::run(format!("round a_{order} ({})", coords.name()), || {
        let a = res.get(coords, order, cfg)?;
        let reduced = round_reduce(&a)?;
        let err = round_float_error(&a, 0.9)?;
        if err >= 1e-9 {
            return Ok((false, format!("float check off by {err:e}")));
        }
        let Some((3, c)) = single_s_power(&reduced) else {
            return Ok((false, format!("not a multiple of sin^3: {}", reduced.to_text())));
        };
        let expected = match reference(order)? {
            Some(o) => round_reduce(&o.expr)?,
            None => return Ok((false, "no reference".into())),
        };
        if reduced != expected {
            return Ok((false, format!("{} vs reference {}", reduced.to_text(), expected.to_text())));
        }
        let total = integrate_round(&reduced)?;
        if order == 12 {
            let c_ok = *c == Rational::new(10331, 8648640)?;
            let t_ok = total.rational == Rational::new(10331, 6486480)? && total.is_rational();
            if !(c_ok && t_ok) {
                return Ok((false, format!("{c} sin^3, integral {}", total.rational)));
            }
        }
        Ok((true, format!("({c}) sin(t)^3, integral over [0,pi] = {}", total.rational)))
    }));
}

fn suite_hn(rep: &mut Report, res: &mut Results, cfg: &RunConfig, extract_max: Option<usize>) {
    let computed = h_recursion(20);
    for (n, expected) in h_reference() {
        rep.push(CheckResult::run(format!("h_{n}"), || {
            let h = computed.as_ref().map_err(|e| Error::Invariant(e.to_string()))?[&n].clone();
            Ok((h == expected, format!("{h} (expected {expected})")))
        }));
    }
    let Some(max) = extract_max else { return };
    let coords = cfg.coords[0];
    for n in (2..=max).step_by(2) {
        rep.push(CheckResult::run(format!("highest term of a_{n} ({})", coords.name()), || {
            let a = res.get(coords, n, cfg)?;
            let c = extract_highest(n, &a)?;
            let expected = h_reference()[&n].clone();
            Ok((c == expected, format!("{c} (h_{n} = {expected})")))
        }));
    }
}

fn suite_cross(rep: &mut Report, res: &mut Results, cfg: &RunConfig, max: usize) {
    for order in (0..=max).step_by(2) {
        rep.push(CheckResult::run(format!("cross a_{order}"), || {
            let h = res.get(Coords::Hopf, order, cfg)?;
            let s = res.get(Coords::Spherical, order, cfg)?;
            let ok = cross_check(&h, &s);
            Ok((ok, if ok { format!("{} monomials agree", h.len()) } else { format!("{} monomials differ", h.diff(&s).len()) }))
        }));
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let mut rep = Report::default();
    let mut res = Results { pipelines: BTreeMap::new() };
    let explicit = cfg.order_given.then_some(cfg.order);
    match cfg.suite {
        Suite::Paper => suite_reference(&mut rep, &mut res, cfg, explicit.unwrap_or(12)),
        Suite::Round => suite_round(&mut rep, &mut res, cfg, explicit.unwrap_or(12)),
        Suite::Hn => suite_hn(&mut rep, &mut res, cfg, explicit),
        Suite::Cross => suite_cross(&mut rep, &mut res, cfg, explicit.unwrap_or(8)),
        Suite::All => {
            let max = explicit.unwrap_or(12);
            suite_reference(&mut rep, &mut res, cfg, max);
            suite_round(&mut rep, &mut res, cfg, max);
            suite_hn(&mut rep, &mut res, cfg, Some(max));
            suite_cross(&mut rep, &mut res, cfg, max.min(8));
        }
    }
    for p in res.pipelines.values() {
        close_pipeline(p, cfg)?;
    }
    let body = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&rep.to_json())? + "\n",
        _ => rep.to_text(),
    };
    let stdout = emit(cfg, body)?;
    Ok(Outcome { stdout, stderr: String::new(), success: rep.all_passed() })
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut text = String::new();
    for &coords in &cfg.coords {
        let start = Instant::now();
        let mut p = open_pipeline(coords, cfg)?;
        let poly = p.a(cfg.order)?;
        close_pipeline(&p, cfg)?;
        let needed = cfg.order.max(1);
        let hit_ratio = p.reused_levels.min(needed) as f64 / needed as f64;
        let digest: String = Sha256::digest(serde_json::to_vec(&result_json(&poly, cfg.order, coords.name())?)?)
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect();
        text.push_str(&format!(
            "{} a_{}: {:.2}s total, cache reused {} levels (hit ratio {:.2}), result {digest}\n",
            coords.name(),
            cfg.order,
            start.elapsed().as_secs_f64(),
            p.reused_levels,
            hit_ratio
        ));
        text.push_str("  level     nodes      terms   seconds\n");
        for s in &p.stats {
            text.push_str(&format!(
                "  {:>5}{} {:>8} {:>10} {:>9.3}\n",
                s.level,
                if s.trace_only { "t" } else { " " },
                s.nodes,
                s.terms,
                s.seconds
            ));
        }
        rows.push(json!({
            "coords": coords.name(),
            "order": cfg.order,
            "jobs": cfg.jobs,
            "reusedLevels": p.reused_levels,
            "cacheHitRatio": hit_ratio,
            "resultDigest": digest,
            "levels": p.stats,
        }));
    }
    let body = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&Value::Array(rows))? + "\n",
        _ => text,
    };
    let stdout = emit(cfg, body)?;
    Ok(Outcome { stdout, stderr: String::new(), success: true })
}

pub fn cmd_cache(action: CacheAction, cfg: &RunConfig) -> Result<Outcome> {
    let dir = cfg.cache_dir.clone().ok_or_else(|| {
        Error::Usage(format!("no cache directory: pass --cache or set {}", cache::CACHE_DIR_ENV))
    })?;
    let mut out = String::new();
    for &coords in &cfg.coords {
        let path = cache::cache_path(&dir, coords);
        match action {
            CacheAction::Info => {
                if path.exists() {
                    let memo = cache::load(coords.symbols(), &path)?;
                    let held: Vec<usize> = memo.levels().map(|(n, _)| n).collect();
                    let size = fs::metadata(&path)?.len();
                    out.push_str(&format!(
                        "{}: {} (levels complete to {}, held {held:?}, {size} bytes)\n",
                        coords.name(),
                        path.display(),
                        memo.level_complete()
                    ));
                } else {
                    out.push_str(&format!("{}: no cache at {}\n", coords.name(), path.display()));
                }
            }
            CacheAction::Warm => {
                let mut p = open_pipeline(coords, cfg)?;
                p.ensure_levels(cfg.order);
                close_pipeline(&p, cfg)?;
                out.push_str(&format!("{}: levels complete to {}\n", coords.name(), p.memo().level_complete()));
            }
            CacheAction::Clear => {
                if path.exists() {
                    fs::remove_file(&path)?;
                    out.push_str(&format!("{}: removed {}\n", coords.name(), path.display()));
                }
            }
        }
    }
    Ok(Outcome { stdout: out, stderr: String::new(), success: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_order_is_rejected() {
        let err = run(["rw-spectral", "compute", "--order", "3"]).unwrap_err();
        assert_eq!(err.to_string(), "order must be even (odd coefficients vanish; see --allow-odd to verify zero)");
    }

    #[test]
    fn zero_jobs_is_rejected() {
        assert!(run(["rw-spectral", "compute", "--order", "2", "--jobs", "0"]).is_err());
    }

    #[test]
    fn compute_a0_text() {
        let out = run(["rw-spectral", "compute", "--order", "0", "--coords", "hopf", "--format", "text"]).unwrap();
        assert_eq!(out.stdout, "a_0 = a(t)^3/2\n");
        assert!(out.success);
    }
}
