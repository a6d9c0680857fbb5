use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bundle_accel::diagnostics::loglog_slope;
use bundle_accel::objectives::{quadratic_optimum, Optimum, QuadraticObjective};
use bundle_accel::solvers::{run_solver, RunContext, RunRecord, SolverKind};
use bundle_accel::Error;
use rayon::prelude::*;

use crate::certify::{all_passed, certify, CheckOutcome, CheckStatus};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{
    self, csv_mismatches, read_csv, read_sidecar, sidecar_path, RunStatus, Sidecar, Summary,
};

/// Env var capping the number of parallel runs in `compare`.
pub const THREADS_ENV: &str = "BUNDLE_ACCEL_THREADS";

/// Minorant samples per model snapshot.
const MINORANT_SAMPLES: usize = 100;

pub struct RunOutcome {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    pub status: RunStatus,
    pub summary: Summary,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Completed => 0,
            RunStatus::InnerBudgetExhausted { .. } => 2,
        }
    }
}

struct Problem {
    oracle: QuadraticObjective,
    x0: Vec<f64>,
    optimum: Option<Optimum>,
}

fn build_problem(cfg: &ExperimentConfig) -> Result<Problem, CliError> {
    let spec = cfg.objective_spec()?;
    let oracle = spec.build()?;
    let optimum = quadratic_optimum(&oracle).ok();
    Ok(Problem {
        x0: spec.default_start(),
        oracle,
        optimum,
    })
}

fn summarize(run: &RunRecord, certificates: Vec<CheckOutcome>) -> Summary {
    let last = run.iterations.last().expect("initial row");
    Summary {
        iterations_completed: last.k,
        final_f: last.f,
        final_gap: last.gap,
        slope_100_1000: run.gaps().and_then(|g| loglog_slope(&g, 100, 1000).ok()),
        total_inner_iterations: run.total_inner_iterations(),
        oracle_calls: last.oracle_calls,
        certificates,
    }
}

/// Solves, writes the CSV and sidecar, and reports. A run that exhausts its
/// inner budget still writes the partial record.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let solver = cfg.solver_config()?;
    let problem = build_problem(cfg)?;
    let ctx = RunContext {
        objective_name: cfg.objective.clone(),
        f_star: problem.optimum.as_ref().map(|o| o.value),
        record_models: cfg.diagnostics,
        stop_gap: None,
        seed: Some(cfg.seed),
    };
    let (record, status) = match run_solver(&problem.oracle, &problem.x0, &solver, &ctx) {
        Ok(record) => (record, RunStatus::Completed),
        Err(Error::RunAborted { partial, cause }) if cause.is_budget_exhausted() => (
            *partial,
            RunStatus::InnerBudgetExhausted {
                message: cause.to_string(),
            },
        ),
        Err(e) => return Err(e.into()),
    };

    let certificates = if cfg.diagnostics {
        certify(
            &record,
            &problem.oracle,
            problem.optimum.as_ref(),
            MINORANT_SAMPLES,
            cfg.seed,
        )
    } else {
        Vec::new()
    };
    let summary = summarize(&record, certificates);

    let csv = cfg.output_path.clone();
    let sidecar = sidecar_path(&csv);
    output::write_csv(&csv, &record)?;
    output::write_sidecar(
        &sidecar,
        &Sidecar {
            config: cfg.clone(),
            status: status.clone(),
            csv: csv
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            summary: summary.clone(),
            record,
        },
    )?;
    Ok(RunOutcome {
        csv,
        sidecar,
        status,
        summary,
    })
}

/// One entry of a comparison: a solver and the ρ it runs with.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareEntry {
    pub kind: SolverKind,
    pub rho: f64,
}

impl CompareEntry {
    pub fn label(&self) -> String {
        if self.kind.is_bundle() {
            format!("{}@{}", self.kind, self.rho)
        } else {
            self.kind.to_string()
        }
    }

    fn file_stem(&self) -> String {
        if self.kind.is_bundle() {
            format!("{}_rho{}", self.kind, self.rho)
        } else {
            self.kind.to_string()
        }
    }
}

/// Expands `name[@rho]` entries. A bundle solver without `@rho` runs once
/// per value in `rhos`, or with `default_rho` when `rhos` is empty.
pub fn parse_entries(
    solvers: &[String],
    rhos: &[f64],
    default_rho: f64,
) -> Result<Vec<CompareEntry>, CliError> {
    let mut out = Vec::new();
    for raw in solvers {
        let (name, rho) = match raw.split_once('@') {
            Some((name, rho)) => {
                let rho: f64 = rho
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad rho in {raw:?}")))?;
                (name, Some(rho))
            }
            None => (raw.as_str(), None),
        };
        let kind: SolverKind = name.trim().parse()?;
        match (kind.is_bundle(), rho) {
            (false, Some(_)) => {
                return Err(CliError::Config(format!("{kind} does not take a rho")))
            }
            (false, None) => out.push(CompareEntry {
                kind,
                rho: default_rho,
            }),
            (true, Some(rho)) => out.push(CompareEntry { kind, rho }),
            (true, None) if rhos.is_empty() => out.push(CompareEntry {
                kind,
                rho: default_rho,
            }),
            (true, None) => out.extend(rhos.iter().map(|&rho| CompareEntry { kind, rho })),
        }
    }
    Ok(out)
}

pub struct CompareRun {
    pub entry: CompareEntry,
    pub outcome: RunOutcome,
}

pub struct CompareOutcome {
    pub runs: Vec<CompareRun>,
    pub summary_path: PathBuf,
}

impl CompareOutcome {
    pub fn exit_code(&self) -> i32 {
        self.runs
            .iter()
            .map(|r| r.outcome.exit_code())
            .max()
            .unwrap_or(0)
    }
}

pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs every entry on the same objective (in parallel, at most `threads`
/// at a time) and writes `summary.csv` in `out_dir`.
pub fn compare(
    base: &ExperimentConfig,
    entries: &[CompareEntry],
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<CompareOutcome, CliError> {
    if entries.len() < 2 {
        return Err(CliError::Config(format!(
            "compare needs at least two runs, got {}",
            entries.len()
        )));
    }
    let configs: Vec<ExperimentConfig> = entries
        .iter()
        .map(|e| ExperimentConfig {
            solver: e.kind.to_string(),
            rho: e.rho,
            output_path: out_dir.join(format!("{}.csv", e.file_stem())),
            ..base.clone()
        })
        .collect();
    for cfg in &configs {
        cfg.validate()?;
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<RunOutcome, CliError>> =
        pool.install(|| configs.par_iter().map(run).collect());

    let mut runs = Vec::with_capacity(entries.len());
    for (entry, result) in entries.iter().zip(results) {
        runs.push(CompareRun {
            entry: entry.clone(),
            outcome: result?,
        });
    }

    let summary_path = out_dir.join("summary.csv");
    output::write_atomic(&summary_path, &summary_csv(base, &runs))?;
    Ok(CompareOutcome { runs, summary_path })
}

fn summary_csv(base: &ExperimentConfig, runs: &[CompareRun]) -> Vec<u8> {
    let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "label",
        "solver",
        "rho",
        "beta",
        "status",
        "iterations",
        "final_f",
        "final_gap",
        "slope_100_1000",
        "total_inner",
        "oracle_calls",
        "csv",
    ])
    .expect("in-memory write");
    for r in runs {
        let s = &r.outcome.summary;
        let status = match r.outcome.status {
            RunStatus::Completed => "completed",
            RunStatus::InnerBudgetExhausted { .. } => "inner-budget-exhausted",
        };
        w.write_record([
            r.entry.label(),
            r.entry.kind.to_string(),
            if r.entry.kind.is_bundle() {
                r.entry.rho.to_string()
            } else {
                String::new()
            },
            if r.entry.kind.is_bundle() {
                base.beta.to_string()
            } else {
                String::new()
            },
            status.to_string(),
            s.iterations_completed.to_string(),
            format!("{:e}", s.final_f),
            opt(s.final_gap),
            opt(s.slope_100_1000),
            s.total_inner_iterations.to_string(),
            s.oracle_calls.to_string(),
            r.outcome
                .csv
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn compare_table(outcome: &CompareOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<18} {:>8} {:>14} {:>10} {:>12}  status",
        "run", "iters", "final gap", "slope", "inner total"
    );
    for r in &outcome.runs {
        let sm = &r.outcome.summary;
        let status = match &r.outcome.status {
            RunStatus::Completed => "completed".to_string(),
            RunStatus::InnerBudgetExhausted { message } => message.clone(),
        };
        let _ = writeln!(
            s,
            "{:<18} {:>8} {:>14} {:>10} {:>12}  {status}",
            r.entry.label(),
            sm.iterations_completed,
            sm.final_gap
                .map(|g| format!("{g:.4e}"))
                .unwrap_or_else(|| "-".into()),
            sm.slope_100_1000
                .map(|g| format!("{g:.4}"))
                .unwrap_or_else(|| "-".into()),
            sm.total_inner_iterations
        );
    }
    s
}

pub struct VerifyOutcome {
    pub sidecar: PathBuf,
    pub status: RunStatus,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        all_passed(&self.checks)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<16} {:<6} {:>13} {:>6} {:>8} {:>8}  note",
            "check", "status", "worst", "slack", "checked", "first"
        );
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<16} {:<6} {:>13} {:>6} {:>8} {:>8}  {}",
                c.name,
                c.status.label(),
                c.worst_violation
                    .map(|v| format!("{v:.3e}"))
                    .unwrap_or_else(|| "-".into()),
                c.slack.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                c.checked,
                c.first_failure
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "-".into()),
                c.note.as_deref().unwrap_or("")
            );
        }
        s
    }
}

/// Re-checks a persisted run. `path` is the CSV or its JSON sidecar.
pub fn verify(path: &Path, samples: usize) -> Result<VerifyOutcome, CliError> {
    let sidecar_file = if path.extension().is_some_and(|e| e == "json") {
        path.to_path_buf()
    } else {
        sidecar_path(path)
    };
    let sidecar = read_sidecar(&sidecar_file)?;
    let record = &sidecar.record;

    let mut checks = Vec::new();
    let csv_file = sidecar_file.with_file_name(&sidecar.csv);
    checks.push(if csv_file.is_file() && !sidecar.csv.is_empty() {
        let mismatches = csv_mismatches(&read_csv(&csv_file)?, record);
        if mismatches.is_empty() {
            CheckOutcome {
                checked: record.iterations.len(),
                ..CheckOutcome::skipped("csv-roundtrip", "")
            }
            .with_status(CheckStatus::Passed)
        } else {
            CheckOutcome::failed("csv-roundtrip", mismatches.join("; "))
        }
    } else {
        CheckOutcome::skipped("csv-roundtrip", format!("{} not found", csv_file.display()))
    });

    let shape_ok = record
        .iterations
        .iter()
        .enumerate()
        .all(|(k, row)| row.k == k);
    checks.push(if shape_ok && !record.iterations.is_empty() {
        CheckOutcome {
            checked: record.iterations.len(),
            ..CheckOutcome::skipped("indices", "")
        }
        .with_status(CheckStatus::Passed)
    } else {
        CheckOutcome::failed("indices", "iteration indices are not contiguous from 0")
    });

    let spec: bundle_accel::ObjectiveSpec = record.objective.parse()?;
    let oracle = spec.build()?;
    let optimum = quadratic_optimum(&oracle).ok();
    checks.extend(certify(
        record,
        &oracle,
        optimum.as_ref(),
        samples,
        sidecar.config.seed,
    ));

    Ok(VerifyOutcome {
        sidecar: sidecar_file,
        status: sidecar.status,
        checks,
    })
}

impl CheckOutcome {
    fn with_status(mut self, status: CheckStatus) -> Self {
        self.status = status;
        if self.note.as_deref() == Some("") {
            self.note = None;
        }
        self
    }
}
