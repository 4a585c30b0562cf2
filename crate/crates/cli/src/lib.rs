//! Batch front-end: loads scenario documents, runs single or comparative
//! experiments over the configured policies, and emits CSV traces, a
//! summary table, and static SVG charts.

pub mod chart;
pub mod csv;

use std::fs;
use std::path::Path;

use thiserror::Error;

use fogflow_core::{
    monthly_cost, run_simulation, sample_instance, EngineError, IterationRecord, RangesFile,
    ScenarioConfig, ScenarioError, ScenarioFile, SimResult,
};

#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration problems; exit code 1.
    #[error("{0}")]
    Config(String),
    /// Placement infeasibility; exit code 2.
    #[error("placement infeasible: {0}")]
    Placement(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Placement(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Placement(p) => CliError::Placement(p.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Seed precedence: explicit flag, then the `FOGFLOW_SEED` environment
/// variable, then the scenario file.
pub fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("FOGFLOW_SEED") {
        Ok(value) => value
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("FOGFLOW_SEED is not an integer: {value}"))),
        Err(_) => Ok(None),
    }
}

/// Per-policy aggregate row of `summary.csv`.
#[derive(Debug, Clone)]
pub struct PolicySummary {
    pub policy: String,
    pub slots: usize,
    /// Slots whose completion exceeded the allowed maximum or saturated.
    pub violations: usize,
    pub saturated_slots: usize,
    pub total_iteration_cost: f64,
    pub public_requests: f64,
    pub monthly_usd: f64,
    pub mean_completion_s: f64,
    pub p95_completion_s: f64,
}

pub fn summarize(cfg: &ScenarioConfig, records: &[IterationRecord]) -> PolicySummary {
    let violations = records
        .iter()
        .filter(|r| r.saturated || r.completion_s > cfg.max_completion_s)
        .count();
    let saturated_slots = records.iter().filter(|r| r.saturated).count();
    let total_iteration_cost: f64 = records.iter().map(|r| r.public_cost).sum();
    let public_requests: f64 = records
        .iter()
        .map(|r| csv::public_requests(r, &cfg.topology))
        .sum();
    let mut finite: Vec<f64> = records
        .iter()
        .map(|r| r.completion_s)
        .filter(|c| c.is_finite())
        .collect();
    finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = if finite.is_empty() {
        0.0
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    let p95 = if finite.is_empty() {
        0.0
    } else {
        finite[((finite.len() as f64 * 0.95).ceil() as usize).min(finite.len()) - 1]
    };
    PolicySummary {
        policy: cfg.policy.name().to_string(),
        slots: records.len(),
        violations,
        saturated_slots,
        total_iteration_cost,
        public_requests,
        monthly_usd: monthly_cost(public_requests, &cfg.cost_model),
        mean_completion_s: mean,
        p95_completion_s: p95,
    }
}

pub fn summary_csv(summaries: &[PolicySummary]) -> String {
    let mut out = String::from(
        "policy,slots,violations,saturated_slots,total_iteration_cost,public_requests,monthly_usd,mean_completion_s,p95_completion_s\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.policy,
            s.slots,
            s.violations,
            s.saturated_slots,
            csv::fmt_float(s.total_iteration_cost),
            csv::fmt_float(s.public_requests),
            csv::fmt_float(s.monthly_usd),
            csv::fmt_float(s.mean_completion_s),
            csv::fmt_float(s.p95_completion_s),
        ));
    }
    out
}

/// Runs every configured policy and writes all outputs. Shared by the
/// simulate and compare commands.
pub fn run_scenario(
    scenario_path: &Path,
    out_dir: &Path,
    seed_flag: Option<u64>,
    validate_only: bool,
) -> Result<Vec<PolicySummary>, CliError> {
    let file = ScenarioFile::load(scenario_path)?;
    let seed = resolve_seed(seed_flag)?;
    let configs = file.configs(seed)?;
    if validate_only {
        return Ok(Vec::new());
    }

    // Run everything before writing anything, so a failed policy leaves no
    // partial output directory behind.
    let mut runs: Vec<(ScenarioConfig, SimResult)> = Vec::new();
    for cfg in configs {
        let result = run_simulation(&cfg)?;
        runs.push((cfg, result));
    }

    fs::create_dir_all(out_dir)?;
    let mut summaries = Vec::new();
    let mut series = Vec::new();
    for (cfg, result) in &runs {
        let trace = csv::trace_csv(&result.records);
        fs::write(out_dir.join(format!("{}.csv", cfg.policy.name())), &trace)?;
        let rows = csv::parse_trace(&trace).map_err(CliError::Config)?;
        series.push((cfg.policy.name().to_string(), rows));
        summaries.push(summarize(cfg, &result.records));
    }
    fs::write(out_dir.join("summary.csv"), summary_csv(&summaries))?;
    let max_completion = runs[0].0.max_completion_s;
    fs::write(
        out_dir.join("chart.svg"),
        chart::render_chart(max_completion, &series),
    )?;
    Ok(summaries)
}

pub fn cmd_simulate(
    scenario_path: &Path,
    out_dir: &Path,
    seed_flag: Option<u64>,
    validate_only: bool,
) -> Result<(), CliError> {
    let summaries = run_scenario(scenario_path, out_dir, seed_flag, validate_only)?;
    if validate_only {
        println!("scenario OK: {}", scenario_path.display());
        return Ok(());
    }
    for s in &summaries {
        println!(
            "{}: violations={} total_cost={:.1} monthly=${:.4}",
            s.policy, s.violations, s.total_iteration_cost, s.monthly_usd
        );
    }
    Ok(())
}

/// The comparison quantity between the reactive policy and the
/// load-balancing baseline: ratio of monthly costs.
pub fn savings_line(summaries: &[PolicySummary]) -> Option<String> {
    let dsr = summaries.iter().find(|s| s.policy == "dsr")?;
    let mea = summaries.iter().find(|s| s.policy == "mea")?;
    if mea.monthly_usd <= 0.0 {
        return Some(format!(
            "savings: dsr_monthly=${:.4} mea_monthly=${:.4} (baseline free, no ratio)",
            dsr.monthly_usd, mea.monthly_usd
        ));
    }
    let ratio = dsr.monthly_usd / mea.monthly_usd;
    Some(format!(
        "savings: dsr_monthly=${:.4} mea_monthly=${:.4} ratio={:.4} savings={:.1}%",
        dsr.monthly_usd,
        mea.monthly_usd,
        ratio,
        (1.0 - ratio) * 100.0
    ))
}

pub fn cmd_compare(
    scenario_path: &Path,
    out_dir: &Path,
    seed_flag: Option<u64>,
    validate_only: bool,
) -> Result<(), CliError> {
    let file = ScenarioFile::load(scenario_path)?;
    if file.policies.len() < 2 {
        return Err(CliError::Config(
            "compare requires at least 2 policies".into(),
        ));
    }
    let summaries = run_scenario(scenario_path, out_dir, seed_flag, validate_only)?;
    if validate_only {
        println!("scenario OK: {}", scenario_path.display());
        return Ok(());
    }
    for s in &summaries {
        println!(
            "{}: violations={} total_cost={:.1} monthly=${:.4} mean_completion={:.3}s",
            s.policy, s.violations, s.total_iteration_cost, s.monthly_usd, s.mean_completion_s
        );
    }
    match savings_line(&summaries) {
        Some(line) => println!("{line}"),
        None => println!("savings: needs both dsr and mea policies"),
    }
    Ok(())
}

pub fn cmd_sample_instance(ranges_path: &Path, seed: u64, out_path: &Path) -> Result<(), CliError> {
    let ranges = RangesFile::load(ranges_path)?;
    let fragment = sample_instance(&ranges, seed).map_err(|e| CliError::Config(e.to_string()))?;
    let json =
        serde_json::to_string_pretty(&fragment).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(out_path, json + "\n")?;
    println!("wrote instance fragment to {}", out_path.display());
    Ok(())
}
