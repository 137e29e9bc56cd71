//! Command-line front end.
//!
//! Verbs: `table`, `plan`, `sweep`, `verify`, `compare`. Plan tables are
//! cached as a versioned JSON document whose real numbers are stored as
//! shortest round-trip decimal strings, so a parsed table is bit-identical
//! to the one written. The cache path comes from `--cache`, then the
//! `MPSEARCH_CACHE` environment variable, then [`DEFAULT_CACHE`].

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    grover_iterations, iteration_band, iterations_for, PhaseAngle, SuccessCurve, TargetFraction,
};
use crate::error::{Error, Result};
use crate::optimizer::{
    largest_min_success, optimal_phase_count, PhasePlan, PhaseSegment, SolverConfig,
};
use crate::planner::{
    baseline_fixed_phase, baseline_long, baseline_yoder_bound, classify, compare, plan_for,
    BaselineComparison, KigrQuery, PlanTable,
};
use crate::simulator::{run_long_exact, statevector_run};

pub const CACHE_ENV: &str = "MPSEARCH_CACHE";
pub const DEFAULT_CACHE: &str = "mpsearch-plans.json";
pub const TABLE_VERSION: u32 = 1;

/// Header of the `sweep` CSV.
pub const SWEEP_HEADER: &str = "lambda,algorithm,k,P";
/// Header of the `sweep --iterations` CSV.
pub const ITERATION_HEADER: &str = "lambda,k_ours,k_grover";
/// Header of the `table` CSV, one row per segment.
pub const TABLE_HEADER: &str = "k,band_lo,band_hi,n_k,m,phi,segment_lo,segment_hi,q_k_pi";
pub const PLAN_HEADER: &str = "k,m,phi,segment_lo,segment_hi,guaranteed";
pub const COMPARE_HEADER: &str = "lambda,p_cri,k_ours,phi_ours,p_ours,k_grover,p_grover,\
phi_fixed,k_fixed,p_fixed,k_long,phi_long,k_yoder_lb,yoder_ratio";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub p_cri: f64,
    pub lambda0: f64,
    pub solver: SolverConfig,
    /// `None` selects each command's own default.
    pub format: Option<Format>,
    pub cache: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(p_cri: f64, lambda0: f64) -> Self {
        Self {
            p_cri,
            lambda0,
            solver: SolverConfig::default(),
            format: None,
            cache: PathBuf::from(DEFAULT_CACHE),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_cri > 0.0 && self.p_cri < 1.0) {
            return Err(Error::Config(format!(
                "p_cri must lie in (0, 1), got {}",
                self.p_cri
            )));
        }
        if !(self.lambda0 > 0.0 && self.lambda0 < 1.0) {
            return Err(Error::Config(format!(
                "lambda0 must lie in (0, 1), got {}",
                self.lambda0
            )));
        }
        self.solver.validate()
    }

    fn matches(&self, table: &PlanTable) -> bool {
        table.p_cri.to_bits() == self.p_cri.to_bits()
            && table.lambda0.to_bits() == self.lambda0.to_bits()
            && table.solver == self.solver
    }
}

// ---------------------------------------------------------------------------
// Plan-table document

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableDoc {
    version: u32,
    p_cri: String,
    lambda0: String,
    tolerances: ToleranceDoc,
    plans: Vec<PlanDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceDoc {
    lambda_tol: String,
    phase_tol: String,
    level_tol: String,
    grid_points: usize,
    max_nk: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    k: u64,
    band: [String; 2],
    n_k: usize,
    phases: Vec<String>,
    boundaries: Vec<String>,
    q_k_pi: String,
    level_residual: String,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn parse_num(s: &str, field: &str) -> Result<f64> {
    let x: f64 = s
        .parse()
        .map_err(|_| Error::Format(format!("{field}: `{s}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::Format(format!("{field}: `{s}` is not finite")));
    }
    Ok(x)
}

fn parse_nums(values: &[String], field: &str) -> Result<Vec<f64>> {
    values.iter().map(|s| parse_num(s, field)).collect()
}

/// Plan-table JSON document, newline terminated.
pub fn serialize_table(table: &PlanTable) -> String {
    let doc = TableDoc {
        version: TABLE_VERSION,
        p_cri: num(table.p_cri),
        lambda0: num(table.lambda0),
        tolerances: ToleranceDoc {
            lambda_tol: num(table.solver.lambda_tol),
            phase_tol: num(table.solver.phase_tol),
            level_tol: num(table.solver.level_tol),
            grid_points: table.solver.grid_points,
            max_nk: table.solver.max_nk,
        },
        plans: table
            .plans
            .iter()
            .map(|p| {
                let band = p.band();
                PlanDoc {
                    k: p.k,
                    band: [num(band.lo), num(band.hi)],
                    n_k: p.n_k,
                    phases: p.phases().into_iter().map(num).collect(),
                    boundaries: p.boundaries().into_iter().map(num).collect(),
                    q_k_pi: num(p.q_k_pi),
                    level_residual: num(p.level_residual),
                }
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("plan table serializes");
    text.push('\n');
    text
}

pub fn parse_table(text: &str) -> Result<PlanTable> {
    let doc: TableDoc = serde_json::from_str(text)?;
    if doc.version != TABLE_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {}, expected {TABLE_VERSION}",
            doc.version
        )));
    }
    let p_cri = parse_num(&doc.p_cri, "p_cri")?;
    let lambda0 = parse_num(&doc.lambda0, "lambda0")?;
    let solver = SolverConfig {
        lambda_tol: parse_num(&doc.tolerances.lambda_tol, "lambda_tol")?,
        phase_tol: parse_num(&doc.tolerances.phase_tol, "phase_tol")?,
        level_tol: parse_num(&doc.tolerances.level_tol, "level_tol")?,
        grid_points: doc.tolerances.grid_points,
        max_nk: doc.tolerances.max_nk,
    };
    solver.validate()?;
    let lambda = TargetFraction::new(lambda0)
        .map_err(|_| Error::Format(format!("lambda0 = {lambda0} outside (0, 1)")))?;
    let expected = iterations_for(lambda);
    if doc.plans.len() as u64 != expected {
        return Err(Error::Format(format!(
            "{} plans present, lambda0 = {lambda0} needs {expected}",
            doc.plans.len()
        )));
    }
    let mut plans = Vec::with_capacity(doc.plans.len());
    for (i, pd) in doc.plans.iter().enumerate() {
        let k = i as u64 + 1;
        if pd.k != k {
            return Err(Error::Format(format!(
                "plan {i} has k = {}, expected {k}",
                pd.k
            )));
        }
        let band = iteration_band(k);
        let lo = parse_num(&pd.band[0], "band")?;
        let hi = parse_num(&pd.band[1], "band")?;
        if lo.to_bits() != band.lo.to_bits() || hi.to_bits() != band.hi.to_bits() {
            return Err(Error::Format(format!(
                "k = {k}: band [{lo}, {hi}) is not Λ_{k}"
            )));
        }
        let phases = parse_nums(&pd.phases, "phases")?;
        let boundaries = parse_nums(&pd.boundaries, "boundaries")?;
        if phases.len() != pd.n_k || boundaries.len() != pd.n_k + 1 || pd.n_k == 0 {
            return Err(Error::Format(format!(
                "k = {k}: n_k = {}, {} phases, {} boundaries",
                pd.n_k,
                phases.len(),
                boundaries.len()
            )));
        }
        let segments = phases
            .iter()
            .enumerate()
            .map(|(j, &phi)| {
                Ok(PhaseSegment {
                    m: j + 1,
                    lo: boundaries[j],
                    hi: boundaries[j + 1],
                    phi: PhaseAngle::new(phi).map_err(|_| {
                        Error::Format(format!("k = {k}: phase {phi} outside (0, π]"))
                    })?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        plans.push(PhasePlan {
            k,
            p_cri,
            n_k: pd.n_k,
            segments,
            q_k_pi: parse_num(&pd.q_k_pi, "q_k_pi")?,
            level_residual: parse_num(&pd.level_residual, "level_residual")?,
        });
    }
    Ok(PlanTable {
        p_cri,
        lambda0,
        solver,
        plans,
    })
}

/// Writes `contents` beside `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("cache path {} has no file name", path.display())))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

pub fn load_table(path: &Path) -> Result<PlanTable> {
    parse_table(&fs::read_to_string(path)?)
}

/// Cached table for `cfg`, rebuilt and rewritten when absent or built
/// under a different configuration.
pub fn load_or_build(cfg: &RunConfig) -> Result<PlanTable> {
    cfg.validate()?;
    if cfg.cache.exists() {
        let cached = load_table(&cfg.cache)?;
        if cfg.matches(&cached) {
            return Ok(cached);
        }
    }
    let table = PlanTable::build(cfg.p_cri, cfg.lambda0, cfg.solver)?;
    write_atomic(&cfg.cache, &serialize_table(&table))?;
    Ok(table)
}

// ---------------------------------------------------------------------------
// Commands

pub fn cmd_table(cfg: &RunConfig, out: &mut dyn Write) -> Result<PlanTable> {
    cfg.validate()?;
    let table = PlanTable::build(cfg.p_cri, cfg.lambda0, cfg.solver)?;
    let text = serialize_table(&table);
    write_atomic(&cfg.cache, &text)?;
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => out.write_all(text.as_bytes())?,
        Format::Csv => {
            writeln!(out, "{TABLE_HEADER}")?;
            for plan in &table.plans {
                let band = plan.band();
                for s in &plan.segments {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{}",
                        plan.k,
                        band.lo,
                        band.hi,
                        plan.n_k,
                        s.m,
                        s.phi.value(),
                        s.lo,
                        s.hi,
                        plan.q_k_pi
                    )?;
                }
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanRecord {
    pub k: u64,
    pub m: usize,
    pub phi: f64,
    pub segment_lo: f64,
    pub segment_hi: f64,
    pub guaranteed: f64,
}

/// Answers `query` against an already loaded table.
pub fn answer(query: KigrQuery, table: &PlanTable) -> Result<PlanRecord> {
    let c = classify(query, table)?;
    let plan = table.plan(c.k).expect("classified band is planned");
    let seg = &plan.segments[c.m - 1];
    Ok(PlanRecord {
        k: c.k,
        m: c.m,
        phi: seg.phi.value(),
        segment_lo: seg.lo,
        segment_hi: seg.hi,
        guaranteed: plan.q_k_pi,
    })
}

pub fn cmd_plan(cfg: &RunConfig, query: KigrQuery, out: &mut dyn Write) -> Result<PlanRecord> {
    query.validate()?;
    let table = load_or_build(cfg)?;
    let rec = answer(query, &table)?;
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => writeln!(out, "{}", serde_json::to_string(&rec)?)?,
        Format::Csv => {
            writeln!(out, "{PLAN_HEADER}")?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                rec.k, rec.m, rec.phi, rec.segment_lo, rec.segment_hi, rec.guaranteed
            )?;
        }
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum)]
pub enum Algorithm {
    Ours,
    Grover,
    Fixed,
    #[value(name = "yoder_bound")]
    YoderBound,
    Long,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Ours => "ours",
            Algorithm::Grover => "grover",
            Algorithm::Fixed => "fixed",
            Algorithm::YoderBound => "yoder_bound",
            Algorithm::Long => "long",
        }
    }
}

/// `λ_i = λ0^{1 − i/grid}` for `i = 0, …, grid − 1`.
pub fn log_grid(lambda0: f64, grid: usize) -> Vec<f64> {
    (0..grid)
        .map(|i| lambda0.powf(1.0 - i as f64 / grid as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub algorithm: &'static str,
    pub k: u64,
    /// Absent for bounds that carry no phase.
    #[serde(rename = "P")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRow {
    pub lambda: f64,
    pub k_ours: u64,
    pub k_grover: u64,
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(Error::Config(format!(
            "grid must be at least 2, got {grid}"
        )));
    }
    Ok(())
}

pub fn sweep_rows(
    cfg: &RunConfig,
    table: Option<&PlanTable>,
    algorithms: &[Algorithm],
    grid: usize,
    phi_fixed: PhaseAngle,
) -> Result<Vec<SweepRow>> {
    check_grid(grid)?;
    let algorithms: BTreeSet<Algorithm> = algorithms.iter().copied().collect();
    let mut rows = Vec::with_capacity(grid * algorithms.len());
    for l in log_grid(cfg.lambda0, grid) {
        let lambda = TargetFraction::new(l)?;
        for alg in &algorithms {
            let (k, p) = match alg {
                Algorithm::Ours => {
                    let table = table
                        .ok_or_else(|| Error::Config("the ours sweep needs a plan table".into()))?;
                    let c = plan_for(lambda, table)?;
                    (c.k, Some(SuccessCurve::new(c.k, c.phi).probability(lambda)))
                }
                Algorithm::Grover => {
                    let k = grover_iterations(lambda);
                    (
                        k,
                        Some(SuccessCurve::new(k, PhaseAngle::PI).probability(lambda)),
                    )
                }
                Algorithm::Fixed => {
                    let k = baseline_fixed_phase(phi_fixed, lambda);
                    (k, Some(SuccessCurve::new(k, phi_fixed).probability(lambda)))
                }
                Algorithm::YoderBound => (baseline_yoder_bound(cfg.p_cri, lambda), None),
                Algorithm::Long => {
                    let (k, phi) = baseline_long(lambda)?;
                    (
                        k,
                        Some(SuccessCurve::new(k, PhaseAngle::new(phi)?).probability(lambda)),
                    )
                }
            };
            rows.push(SweepRow {
                lambda: l,
                algorithm: alg.name(),
                k,
                p,
            });
        }
    }
    Ok(rows)
}

pub fn iteration_rows(lambda0: f64, grid: usize) -> Result<Vec<IterationRow>> {
    check_grid(grid)?;
    log_grid(lambda0, grid)
        .into_iter()
        .map(|l| {
            let lambda = TargetFraction::new(l)?;
            Ok(IterationRow {
                lambda: l,
                k_ours: iterations_for(lambda),
                k_grover: grover_iterations(lambda),
            })
        })
        .collect()
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    algorithms: &[Algorithm],
    grid: usize,
    phi_fixed: PhaseAngle,
    iterations: bool,
    out: &mut dyn Write,
) -> Result<()> {
    cfg.validate()?;
    let format = cfg.format.unwrap_or(Format::Csv);
    if iterations {
        let rows = iteration_rows(cfg.lambda0, grid)?;
        match format {
            Format::Json => writeln!(out, "{}", serde_json::to_string(&rows)?)?,
            Format::Csv => {
                writeln!(out, "{ITERATION_HEADER}")?;
                for r in &rows {
                    writeln!(out, "{},{},{}", r.lambda, r.k_ours, r.k_grover)?;
                }
            }
        }
        return Ok(());
    }
    let table = if algorithms.contains(&Algorithm::Ours) {
        Some(load_or_build(cfg)?)
    } else {
        None
    };
    let rows = sweep_rows(cfg, table.as_ref(), algorithms, grid, phi_fixed)?;
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string(&rows)?)?,
        Format::Csv => {
            writeln!(out, "{SWEEP_HEADER}")?;
            for r in &rows {
                match r.p {
                    Some(p) => writeln!(out, "{},{},{},{}", r.lambda, r.algorithm, r.k, p)?,
                    None => writeln!(out, "{},{},{},", r.lambda, r.algorithm, r.k)?,
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn suite(name: &'static str, outcome: Result<(bool, String)>) -> SuiteResult {
    match outcome {
        Ok((passed, detail)) => SuiteResult {
            name,
            passed,
            detail,
        },
        Err(e) => SuiteResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Statevector against closed form for `n = 2..=10`, `M ∈ {1, 3, N/4, N/2}`,
/// `k = 0..=12` and four phases.
pub fn oracle_suite(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases = [PI, 2.432, 1.465, 0.7];
    let mut worst = 0.0_f64;
    let mut worst_at = String::new();
    for n in 2..=10u32 {
        let dim = 1usize << n;
        let counts: BTreeSet<usize> = [1, 3, dim / 4, dim / 2]
            .into_iter()
            .filter(|&m| m >= 1 && m < dim)
            .collect();
        for m in counts {
            let marked = sample(&mut rng, dim, m).into_vec();
            let lambda = TargetFraction::from_counts(m, dim)?;
            for k in 0..=12u64 {
                for &phi in &phases {
                    let phi = PhaseAngle::new(phi)?;
                    let sim = statevector_run(n, &marked, k, phi)?;
                    let exact = SuccessCurve::new(k, phi).probability(lambda);
                    let err = (sim - exact).abs();
                    if err > worst {
                        worst = err;
                        worst_at = format!(" at n={n} M={m} k={k} phi={}", phi.value());
                    }
                }
            }
        }
    }
    Ok((
        worst < 1e-10,
        format!("max |analytic - simulated| = {worst:e}{worst_at}"),
    ))
}

/// Equalized boundary values of every plan agree within `level_tol`, and
/// the planned curve stays above `p_cri` on a grid of each band.
pub fn equal_level_suite(cfg: &RunConfig) -> Result<(bool, String)> {
    let table = PlanTable::build(cfg.p_cri, cfg.lambda0, cfg.solver)?;
    let tol = cfg.solver.level_tol;
    let mut worst = 0.0_f64;
    let mut worst_k = 0;
    let mut floor = f64::INFINITY;
    for plan in &table.plans {
        let levels = plan.equalized_levels();
        let lo = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if worst_k == 0 || hi - lo > worst {
            worst = hi - lo;
            worst_k = plan.k;
        }
        floor = floor.min(plan.grid_minimum(cfg.solver.grid_points));
    }
    let passed = worst <= tol && floor >= cfg.p_cri - tol;
    Ok((
        passed,
        format!(
            "{} plans; max level spread {worst:e} (k={worst_k}) vs level_tol {tol:e}; grid minimum {floor}",
            table.plans.len()
        ),
    ))
}

/// `Q_k^π(n)` strictly increasing for `k ≤ 4`, `n ≤ 5`, and `Q_1^π ≥ 0.999`
/// reachable within `max_nk` phases.
pub fn monotonicity_suite(cfg: &RunConfig) -> Result<(bool, String)> {
    let mut smallest_step = f64::INFINITY;
    let mut at = (0, 0);
    for k in 1..=4u64 {
        let mut prev = f64::NEG_INFINITY;
        for n in 1..=5usize.min(cfg.solver.max_nk) {
            let q = largest_min_success(k, n, &cfg.solver)?.q_star;
            if q - prev < smallest_step {
                smallest_step = q - prev;
                at = (k, n);
            }
            prev = q;
        }
    }
    let n_999 = optimal_phase_count(1, 0.999, &cfg.solver)?;
    Ok((
        smallest_step > 0.0,
        format!(
            "smallest increment {smallest_step:e} at k={} n={}; Q_1 >= 0.999 with n={n_999}",
            at.0, at.1
        ),
    ))
}

/// Long's exact search reaches certainty on random instances.
pub fn long_suite(seed: u64, instances: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut worst_at = String::new();
    for _ in 0..instances {
        let n: u32 = rng.gen_range(1..=10);
        let dim = 1usize << n;
        let m = rng.gen_range(1..dim);
        let marked = sample(&mut rng, dim, m).into_vec();
        let p = run_long_exact(n, &marked)?;
        let err = (1.0 - p).abs();
        if worst_at.is_empty() || err > worst {
            worst = err;
            worst_at = format!(" at n={n} M={m}");
        }
    }
    Ok((
        worst < 1e-9,
        format!("{instances} instances; max |1 - P| = {worst:e}{worst_at}"),
    ))
}

pub fn run_verify(cfg: &RunConfig) -> Result<Vec<SuiteResult>> {
    cfg.validate()?;
    Ok(vec![
        suite("oracle-equivalence", oracle_suite(cfg.seed)),
        suite("equal-level", equal_level_suite(cfg)),
        suite("monotonicity", monotonicity_suite(cfg)),
        suite("long-certainty", long_suite(cfg.seed, 50)),
    ])
}

/// Prints one line per suite; fails with the first failing suite.
pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<SuiteResult>> {
    let results = run_verify(cfg)?;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{status} {}: {}", r.name, r.detail)?;
    }
    if let Some(bad) = results.iter().find(|r| !r.passed) {
        return Err(Error::Verification(format!("{}: {}", bad.name, bad.detail)));
    }
    Ok(results)
}

#[derive(Debug, Serialize)]
struct CompareDoc {
    lambda: f64,
    p_cri: f64,
    k_ours: u64,
    phi_ours: f64,
    p_ours: f64,
    k_grover: u64,
    p_grover: f64,
    phi_fixed: f64,
    k_fixed: u64,
    p_fixed: f64,
    k_long: u64,
    phi_long: f64,
    k_yoder_lb: u64,
    yoder_ratio: f64,
}

pub fn cmd_compare(
    cfg: &RunConfig,
    lambda: f64,
    phi_fixed: PhaseAngle,
    out: &mut dyn Write,
) -> Result<BaselineComparison> {
    cfg.validate()?;
    let c = compare(
        TargetFraction::new(lambda)?,
        cfg.p_cri,
        phi_fixed,
        &cfg.solver,
    )?;
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => {
            let doc = CompareDoc {
                lambda: c.lambda,
                p_cri: c.p_cri,
                k_ours: c.k_ours,
                phi_ours: c.phi_ours,
                p_ours: c.p_ours,
                k_grover: c.k_grover,
                p_grover: c.p_grover,
                phi_fixed: c.phi_fixed,
                k_fixed: c.k_fixed,
                p_fixed: c.p_fixed,
                k_long: c.k_long,
                phi_long: c.phi_long,
                k_yoder_lb: c.k_yoder_lb,
                yoder_ratio: c.yoder_ratio(),
            };
            writeln!(out, "{}", serde_json::to_string(&doc)?)?;
        }
        Format::Csv => {
            writeln!(out, "{COMPARE_HEADER}")?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.lambda,
                c.p_cri,
                c.k_ours,
                c.phi_ours,
                c.p_ours,
                c.k_grover,
                c.p_grover,
                c.phi_fixed,
                c.k_fixed,
                c.p_fixed,
                c.k_long,
                c.phi_long,
                c.k_yoder_lb,
                c.yoder_ratio()
            )?;
        }
    }
    Ok(c)
}

// ---------------------------------------------------------------------------
// Argument parsing

#[derive(Debug, Parser)]
#[command(
    name = "mpsearch",
    version,
    about = "Multiphase amplitude-amplification planner"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Required minimum success probability.
    #[arg(long = "pcri", global = true, default_value_t = 0.9)]
    pub p_cri: f64,
    /// Smallest target fraction the table must cover.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub lambda0: f64,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Plan-table cache file.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub lambda_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub phase_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub level_tol: f64,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub grid_points: usize,
    #[arg(long, global = true, default_value_t = 64)]
    pub max_nk: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the plan table and write it to the cache.
    Table,
    /// Iteration count and phase for a known λ or a λ range.
    #[command(group(ArgGroup::new("query").required(true).args(["lambda", "range"])))]
    Plan {
        #[arg(long)]
        lambda: Option<f64>,
        /// Half-open range `LO..HI`.
        #[arg(long, value_parser = parse_range)]
        range: Option<(f64, f64)>,
    },
    /// Success probabilities or iteration counts over a log-spaced λ grid.
    Sweep {
        #[arg(long, value_enum, value_delimiter = ',', default_value = "ours,grover")]
        algorithms: Vec<Algorithm>,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        /// Phase of the fixed-phase baseline (default 0.1π).
        #[arg(long)]
        phi: Option<f64>,
        /// Emit `lambda,k_ours,k_grover` instead.
        #[arg(long)]
        iterations: bool,
    },
    /// Run the verification suites.
    Verify,
    /// Compare iteration counts with the baselines at one λ.
    Compare {
        #[arg(long)]
        lambda: f64,
        /// Phase of the fixed-phase baseline (default 0.1π).
        #[arg(long)]
        phi: Option<f64>,
    },
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound `{hi}`"))?;
    Ok((lo, hi))
}

fn resolve_cache(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE))
}

impl CommonArgs {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            p_cri: self.p_cri,
            lambda0: self.lambda0,
            solver: SolverConfig {
                lambda_tol: self.lambda_tol,
                phase_tol: self.phase_tol,
                level_tol: self.level_tol,
                grid_points: self.grid_points,
                max_nk: self.max_nk,
            },
            format: self.format,
            cache: resolve_cache(self.cache.clone()),
            seed: self.seed,
        }
    }
}

fn fixed_phase(phi: Option<f64>) -> Result<PhaseAngle> {
    PhaseAngle::new(phi.unwrap_or(0.1 * PI))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = cli.common.run_config();
    match cli.command {
        Command::Table => {
            cmd_table(&cfg, out)?;
        }
        Command::Plan { lambda, range } => {
            let query = match (lambda, range) {
                (Some(l), _) => KigrQuery::Exact(l),
                (None, Some((lo, hi))) => KigrQuery::Range { lo, hi },
                (None, None) => return Err(Error::Config("plan needs --lambda or --range".into())),
            };
            cmd_plan(&cfg, query, out)?;
        }
        Command::Sweep {
            algorithms,
            grid,
            phi,
            iterations,
        } => cmd_sweep(&cfg, &algorithms, grid, fixed_phase(phi)?, iterations, out)?,
        Command::Verify => {
            cmd_verify(&cfg, out)?;
        }
        Command::Compare { lambda, phi } => {
            cmd_compare(&cfg, lambda, fixed_phase(phi)?, out)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_table() -> PlanTable {
        PlanTable::build(0.9, 0.05, SolverConfig::default()).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let table = small_table();
        let back = parse_table(&serialize_table(&table)).unwrap();
        assert_eq!(back.plans.len(), table.plans.len());
        for (a, b) in table.plans.iter().zip(&back.plans) {
            assert_eq!(a.k, b.k);
            assert_eq!(a.n_k, b.n_k);
            assert_eq!(a.q_k_pi.to_bits(), b.q_k_pi.to_bits());
            assert_eq!(a.level_residual.to_bits(), b.level_residual.to_bits());
            for (x, y) in a.segments.iter().zip(&b.segments) {
                assert_eq!(x.lo.to_bits(), y.lo.to_bits());
                assert_eq!(x.hi.to_bits(), y.hi.to_bits());
                assert_eq!(x.phi.value().to_bits(), y.phi.value().to_bits());
            }
        }
        assert_eq!(back, table);
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = serialize_table(&small_table());
        let b = serialize_table(&small_table());
        assert_eq!(a, b);
    }

    #[test]
    fn parse_rejects_tampering() {
        let text = serialize_table(&small_table());
        assert!(matches!(
            parse_table(&text.replace("\"version\": 1", "\"version\": 7")),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_table(&text.replacen("\"k\": 1", "\"k\": 2", 1)),
            Err(Error::Format(_))
        ));
        assert!(parse_table("{").is_err());
    }

    #[test]
    fn numbers_are_plain_decimals() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1e-12), "0.000000000001");
        assert_eq!(parse_num("0.000000000001", "x").unwrap(), 1e-12);
        assert!(parse_num("NaN", "x").is_err());
    }

    #[test]
    fn log_grid_covers_from_lambda0() {
        let g = log_grid(0.01, 4);
        assert_eq!(g[0], 0.01);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(*g.last().unwrap() < 1.0);
    }

    #[test]
    fn range_parser() {
        assert_eq!(parse_range("0.3..0.4").unwrap(), (0.3, 0.4));
        assert!(parse_range("0.3-0.4").is_err());
    }

    #[test]
    fn iteration_rows_differ_by_at_most_one() {
        for r in iteration_rows(0.01, 500).unwrap() {
            assert!(r.k_ours == r.k_grover || r.k_ours == r.k_grover + 1);
        }
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::new(0.9, 0.01).validate().is_ok());
        assert!(matches!(
            RunConfig::new(1.0, 0.01).validate(),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::new(0.9, 0.0).validate(),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn grid_below_two_is_rejected() {
        assert!(matches!(iteration_rows(0.01, 1), Err(Error::Config(_))));
    }
}
