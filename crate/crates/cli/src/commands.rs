use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use privaudit_core::generators::{InstanceBounds, InstanceSpec};
use privaudit_core::relations::{
    audit, bound_grid, compare_bound_functions, fuzz, verify_report, FuzzOptions, FuzzSummary,
    Violation,
};

use crate::report::{write_atomic, ReportDocument};
use crate::scenario::{self, BeliefSettings, ScenarioConfig};

/// Process exit status: 0 pass, 1 violation, 2 invalid input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Violation = 1,
    Invalid = 2,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Scenario file (JSON).
    pub scenario: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Re-verify an existing report against the scenario instead of auditing.
    #[arg(long, value_name = "REPORT")]
    pub verify_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 4)]
    pub max_n: usize,
    /// Domain size bound, counting the default value.
    #[arg(long, default_value_t = 4)]
    pub max_domain: usize,
    #[arg(long, default_value_t = 8)]
    pub max_outputs: usize,
    /// Random beliefs per instance, on top of the two-point family.
    #[arg(long, default_value_t = 50)]
    pub beliefs: usize,
    /// Write the summary here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for reproducer scenarios of failing trials.
    #[arg(long, default_value = "fuzz-repro")]
    pub repro_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 0.01)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 1.35)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_audit(args: &AuditArgs) -> anyhow::Result<Status> {
    let loaded = scenario::load(&args.scenario)?;
    if let Some(report_path) = &args.verify_report {
        let doc = ReportDocument::load(report_path)?;
        if doc.instance != loaded.scenario.instance() {
            eprintln!("verify: report was produced for a different instance");
            return Ok(Status::Violation);
        }
        let problems = verify_report(&loaded.mechanism, &loaded.prior, &doc.report);
        if problems.is_empty() {
            eprintln!("verify: every witness and verdict re-verifies");
            return Ok(Status::Pass);
        }
        for p in &problems {
            eprintln!("verify: {p}");
        }
        return Ok(Status::Violation);
    }

    let start = Instant::now();
    let report = audit(&loaded.mechanism, &loaded.prior, &loaded.config)?;
    let elapsed = start.elapsed().as_millis() as u64;
    let pass = report.all_pass();
    eprintln!(
        "audit: R_DP={} R_BDP={} R_MP={} bsp_lower={} sp_lower={}",
        report.r_dp, report.r_bdp, report.r_mp, report.bsp_lower, report.sp_lower
    );
    for v in report.verdicts.iter().filter(|v| !v.pass) {
        eprintln!("audit: theorem {} check failed", v.theorem);
    }
    let doc = ReportDocument::new(loaded.scenario.instance(), report, elapsed);
    emit(
        args.out.as_deref(),
        &doc.to_json(loaded.scenario.output.pretty)?,
    )?;
    Ok(if pass {
        Status::Pass
    } else {
        Status::Violation
    })
}

/// A replayable scenario for a failing fuzz trial.
pub fn reproducer(v: &Violation) -> ScenarioConfig {
    let InstanceSpec {
        domain,
        n,
        mechanism,
        prior,
    } = v.instance.clone();
    ScenarioConfig {
        domain,
        n,
        mechanism,
        prior,
        beliefs: BeliefSettings {
            random: v.config.random_beliefs,
            seed: v.config.seed,
            families: v.config.families.clone(),
        },
        semantic: v.config.semantic,
        theorem4: scenario::Theorem4Settings {
            target: Some(v.config.theorem4_target.clone()),
            target_eps: None,
            weight: v.config.theorem4_weight.clone(),
        },
        output: Default::default(),
    }
}

pub fn run_fuzz(args: &FuzzArgs) -> anyhow::Result<FuzzSummary> {
    let bounds = InstanceBounds {
        max_n: args.max_n,
        max_domain: args.max_domain,
        max_outputs: args.max_outputs,
        ..InstanceBounds::default()
    };
    let opts = FuzzOptions {
        seed: args.seed,
        trials: args.trials,
        bounds,
        random_beliefs: args.beliefs,
    };
    Ok(fuzz(&opts)?)
}

pub fn cmd_fuzz(args: &FuzzArgs) -> anyhow::Result<Status> {
    let summary = run_fuzz(args)?;
    for v in &summary.violations {
        let name = match v.theorem {
            Some(t) => format!("trial-{}-theorem{}.json", v.trial, t),
            None => format!("trial-{}-error.json", v.trial),
        };
        let path = args.repro_dir.join(name);
        let text = serde_json::to_string_pretty(&reproducer(v))? + "\n";
        write_atomic(&path, &text)?;
        eprintln!(
            "fuzz: trial {} failed ({}); reproducer {}",
            v.trial,
            v.message,
            path.display()
        );
    }
    eprintln!(
        "fuzz: {} trials, {} semantic cases, {} violations",
        summary.trials,
        summary.semantic_cases,
        summary.violations.len()
    );
    emit(
        args.out.as_deref(),
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    Ok(if summary.clean() {
        Status::Pass
    } else {
        Status::Violation
    })
}

pub fn bounds_table(args: &BoundsArgs) -> anyhow::Result<String> {
    if !(args.eps_min > 0.0 && args.eps_max >= args.eps_min && args.step > 0.0)
        || !(args.eps_min.is_finite() && args.eps_max.is_finite() && args.step.is_finite())
    {
        bail!(
            "invalid range: need 0 < eps-min <= eps-max and step > 0 (got {}, {}, {})",
            args.eps_min,
            args.eps_max,
            args.step
        );
    }
    let rows = compare_bound_functions(&bound_grid(args.eps_min, args.eps_max, args.step));
    match args.format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().context("flushing csv")?;
            Ok(String::from_utf8(bytes)?)
        }
        TableFormat::Json => Ok(serde_json::to_string_pretty(&rows)? + "\n"),
    }
}

pub fn cmd_bounds(args: &BoundsArgs) -> anyhow::Result<Status> {
    let table = bounds_table(args)?;
    emit(args.out.as_deref(), &table)?;
    Ok(Status::Pass)
}
