//! Experiment orchestration: run the enabled diagnostics, write reports and
//! plot tables, and fold the results into an exit code.
//!
//! Report and plot files are byte-identical across runs of the same config on
//! the same build; the only timestamp lives in the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};

use levy_sde::coeffs::{verify_assumption1, Assumption1Report, InitialLaw, PairSamplerConfig};
use levy_sde::modulus::{
    check_osgood, default_eps_sequence, OsgoodClass, OsgoodEvidence, OsgoodVerdict,
};
use levy_sde::noise::{NoiseBundle, TimeGrid};
use levy_sde::picard::{
    mean_refinement_study, moment_bound_check, pathwise_uniqueness_check, solve, ConvergenceReport,
    MomentBoundReport, SolveOptions, UniquenessReport, Verdict,
};
use levy_sde::report::{
    assumption1_report_doc, convergence_report_doc, fmt_f64, moment_report_doc, osgood_report_doc,
    stability_report_doc, uniqueness_report_doc,
};
use levy_sde::scenarios::Scenario;
use levy_sde::stability::{delta_for_epsilon, mean_square_stability_test, StabilityReport};

use crate::config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTIC_FAILED: i32 = 1;
pub const EXIT_SOLVER_DIVERGED: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// One enabled diagnostic's verdict.
#[derive(Debug, Clone)]
pub struct DiagnosticOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// The analytic-mean oracle with its refinement study.
#[derive(Debug, Clone)]
pub struct MeanOracleReport {
    pub levels: Vec<usize>,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
    pub c_estimate: f64,
    pub final_error: f64,
    pub final_se: f64,
    pub dt: f64,
    pub pass: bool,
}

/// Everything a run produced, kept for plot emission and tests.
#[derive(Debug, Default)]
pub struct ReportSet {
    pub grid_horizon: f64,
    pub grid_steps: usize,
    pub assumption1: Option<Assumption1Report>,
    pub osgood: Option<OsgoodEvidence>,
    pub convergence: Option<ConvergenceReport>,
    pub moment: Option<MomentBoundReport>,
    pub uniqueness: Option<UniquenessReport>,
    pub mean_oracle: Option<MeanOracleReport>,
    pub stability: Vec<StabilityReport>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub outcomes: Vec<DiagnosticOutcome>,
    pub reports: ReportSet,
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn write_report(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(())
}

/// Run every enabled diagnostic for the configured scenario.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let scenario = config
        .build()
        .map_err(|e| anyhow::anyhow!("building scenario: {e}"))?;
    let grid = TimeGrid::new(config.grid.horizon, config.grid.steps)
        .map_err(|e| anyhow::anyhow!("grid: {e}"))?;
    let options = SolveOptions {
        tol: config.tolerances.solver,
        max_iter: config.max_iter.unwrap_or(12),
        keep_history: false,
        force_iterations: None,
    };

    let reports_dir = out_dir.join("reports");
    let plot_dir = out_dir.join("plot");
    fs::create_dir_all(&reports_dir)
        .with_context(|| format!("creating {}", reports_dir.display()))?;
    fs::create_dir_all(&plot_dir).with_context(|| format!("creating {}", plot_dir.display()))?;

    let mut outcomes = Vec::new();
    let mut warnings = Vec::new();
    let mut written = Vec::new();
    let mut set = ReportSet {
        grid_horizon: grid.horizon(),
        grid_steps: grid.steps(),
        ..Default::default()
    };
    let diag = &config.diagnostics;
    let coeffs = &scenario.coeffs;

    if diag.assumption1 {
        let sampler = PairSamplerConfig {
            seed: config.seed,
            ..Default::default()
        };
        let report = verify_assumption1(coeffs, &sampler)
            .map_err(|e| anyhow::anyhow!("assumption1: {e}"))?;
        write_report(
            &reports_dir,
            "assumption1.txt",
            &assumption1_report_doc(&report).render(),
            &mut written,
        )?;
        outcomes.push(DiagnosticOutcome {
            name: "assumption1",
            pass: report.pass,
            detail: format!("max discrepancy {}", fmt_f64(report.max_discrepancy)),
        });
        set.assumption1 = Some(report);
    }

    if diag.osgood {
        let evidence = check_osgood(&coeffs.modulus, &default_eps_sequence())
            .map_err(|e| anyhow::anyhow!("osgood: {e}"))?;
        let declared = coeffs.modulus.osgood_class();
        let agrees = matches!(
            (evidence.verdict, declared),
            (OsgoodVerdict::Divergent, OsgoodClass::Divergent)
                | (OsgoodVerdict::Convergent, OsgoodClass::Convergent)
        );
        write_report(
            &reports_dir,
            "osgood.txt",
            &osgood_report_doc(&evidence).render(),
            &mut written,
        )?;
        outcomes.push(DiagnosticOutcome {
            name: "osgood",
            pass: agrees,
            detail: format!(
                "classifier says {:?}, modulus declares {:?}",
                evidence.verdict, declared
            ),
        });
        set.osgood = Some(evidence);
    }

    // The solve backs both the Cauchy diagnostic and the moment bound.
    if diag.cauchy || diag.moment_bound {
        let bundle = Arc::new(
            NoiseBundle::generate(config.seed, grid, &coeffs.levy, config.paths)
                .map_err(|e| anyhow::anyhow!("noise bundle: {e}"))?,
        );
        let run = solve(coeffs, &bundle, &options).map_err(|e| anyhow::anyhow!("solve: {e}"))?;
        if diag.cauchy {
            write_report(
                &reports_dir,
                "convergence.txt",
                &convergence_report_doc(&run.report).render(),
                &mut written,
            )?;
            let (pass, detail) = match &run.report.verdict {
                Verdict::Converged => (
                    true,
                    format!("converged after {} iterations", run.report.iterations_run),
                ),
                Verdict::MaxIterations => (
                    false,
                    format!(
                        "iteration budget {} exhausted above tol {}",
                        options.max_iter,
                        fmt_f64(options.tol)
                    ),
                ),
                Verdict::Diverged {
                    iterate,
                    path,
                    node,
                } => (
                    false,
                    format!("diverged at iterate {iterate}, path {path}, node {node}"),
                ),
            };
            outcomes.push(DiagnosticOutcome {
                name: "cauchy",
                pass,
                detail,
            });
        }
        if diag.moment_bound {
            let mb = moment_bound_check(&run.report, coeffs, &grid)
                .map_err(|e| anyhow::anyhow!("moment bound: {e}"))?;
            write_report(
                &reports_dir,
                "moment_bound.txt",
                &moment_report_doc(&mb).render(),
                &mut written,
            )?;
            outcomes.push(DiagnosticOutcome {
                name: "moment_bound",
                pass: mb.pass,
                detail: format!(
                    "empirical max {} vs bound {}",
                    fmt_f64(mb.empirical_max),
                    fmt_f64(mb.bound)
                ),
            });
            set.moment = Some(mb);
        }
        set.convergence = Some(run.report);
    }

    if diag.uniqueness {
        match pathwise_uniqueness_check(coeffs, grid, config.paths, config.seed, &options) {
            Ok(report) => {
                write_report(
                    &reports_dir,
                    "uniqueness.txt",
                    &uniqueness_report_doc(&report).render(),
                    &mut written,
                )?;
                outcomes.push(DiagnosticOutcome {
                    name: "uniqueness",
                    pass: report.pass,
                    detail: format!(
                        "replay diff {}, distinct-seed diff {}",
                        fmt_f64(report.replay_max_diff),
                        fmt_f64(report.distinct_seed_diff)
                    ),
                });
                set.uniqueness = Some(report);
            }
            Err(e) => {
                outcomes.push(DiagnosticOutcome {
                    name: "uniqueness",
                    pass: false,
                    detail: e.to_string(),
                });
            }
        }
    }

    if diag.mean_oracle {
        match mean_oracle_diagnostic(&scenario, config, &grid, &options) {
            Ok(Some(report)) => {
                write_report(
                    &reports_dir,
                    "mean_oracle.txt",
                    &mean_oracle_doc(&report),
                    &mut written,
                )?;
                outcomes.push(DiagnosticOutcome {
                    name: "mean_oracle",
                    pass: report.pass,
                    detail: format!(
                        "final error {} vs 3se+C*dt {}",
                        fmt_f64(report.final_error),
                        fmt_f64(3.0 * report.final_se + report.c_estimate * report.dt)
                    ),
                });
                set.mean_oracle = Some(report);
            }
            Ok(None) => {
                warnings.push("mean_oracle requested but the scenario has no analytic mean".into())
            }
            Err(e) => outcomes.push(DiagnosticOutcome {
                name: "mean_oracle",
                pass: false,
                detail: e.to_string(),
            }),
        }
    }

    if !diag.stability_epsilons.is_empty() {
        let mut all_pass = true;
        for &eps in &diag.stability_epsilons {
            let report = stability_diagnostic(coeffs, config, grid, eps, &options, &mut warnings)
                .map_err(|e| anyhow::anyhow!("stability eps {eps}: {e}"))?;
            all_pass &= report.pass;
            set.stability.push(report);
        }
        let mut text = String::new();
        for r in &set.stability {
            text.push_str(&stability_report_doc(r).render());
            text.push('\n');
        }
        write_report(&reports_dir, "stability.txt", &text, &mut written)?;
        outcomes.push(DiagnosticOutcome {
            name: "stability",
            pass: all_pass,
            detail: format!("{} epsilon value(s)", set.stability.len()),
        });
    }

    let plots = emit_plot_data(&set, &plot_dir)?;
    if plots.is_empty() {
        warnings.push("no diagnostics produced plot data".into());
    }
    written.extend(plots);

    let diverged = diverged_anywhere(&set);
    let all_pass = outcomes.iter().all(|o| o.pass);
    let exit_code = if diverged {
        EXIT_SOLVER_DIVERGED
    } else if all_pass {
        EXIT_OK
    } else {
        EXIT_DIAGNOSTIC_FAILED
    };

    let manifest = render_manifest(config, &outcomes, &written, &warnings);
    fs::write(out_dir.join("manifest.txt"), manifest)
        .with_context(|| format!("writing manifest in {}", out_dir.display()))?;

    Ok(RunOutcome {
        exit_code,
        outcomes,
        reports: set,
        written,
        warnings,
    })
}

fn diverged_anywhere(set: &ReportSet) -> bool {
    let conv = set
        .convergence
        .as_ref()
        .is_some_and(|r| matches!(r.verdict, Verdict::Diverged { .. }));
    let stab = set.stability.iter().any(|r| {
        matches!(r.solver_verdicts.0, Verdict::Diverged { .. })
            || matches!(r.solver_verdicts.1, Verdict::Diverged { .. })
    });
    conv || stab
}

fn mean_oracle_diagnostic(
    scenario: &Scenario,
    config: &ExperimentConfig,
    grid: &TimeGrid,
    options: &SolveOptions,
) -> Result<Option<MeanOracleReport>> {
    let Some(analytic) = &scenario.analytic_mean else {
        return Ok(None);
    };
    let m = grid.steps();
    if m < 16 {
        anyhow::bail!("mean_oracle needs at least 16 grid steps, got {m}");
    }
    let levels = vec![m / 4, m / 2, m];
    let ref_steps = m * 4;
    let study = mean_refinement_study(
        &scenario.coeffs,
        grid.horizon(),
        &levels,
        ref_steps,
        config.paths,
        config.seed,
        options,
    )
    .map_err(|e| anyhow::anyhow!("refinement study: {e}"))?;

    let bundle = Arc::new(
        NoiseBundle::generate(config.seed, *grid, &scenario.coeffs.levy, config.paths)
            .map_err(|e| anyhow::anyhow!("noise bundle: {e}"))?,
    );
    let run =
        solve(&scenario.coeffs, &bundle, options).map_err(|e| anyhow::anyhow!("solve: {e}"))?;
    let (mean, se) = run.ensemble.terminal_mean();
    let target = analytic(grid.horizon());
    let final_error = mean
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let final_se = se.iter().map(|s| s * s).sum::<f64>().sqrt();
    let dt = grid.dt();
    let ratios_ok = study.ratios.iter().all(|r| (1.5..=3.0).contains(r));
    let pass = ratios_ok && final_error <= 3.0 * final_se + study.c_estimate * dt;
    Ok(Some(MeanOracleReport {
        levels,
        errors: study.errors.clone(),
        ratios: study.ratios.clone(),
        c_estimate: study.c_estimate,
        final_error,
        final_se,
        dt,
        pass,
    }))
}

fn mean_oracle_doc(r: &MeanOracleReport) -> String {
    use levy_sde::report::{ReportDoc, Table};
    let mut doc = ReportDoc::new("mean-oracle-report");
    doc.field("c_estimate", fmt_f64(r.c_estimate))
        .field("final_error", fmt_f64(r.final_error))
        .field("final_se", fmt_f64(r.final_se))
        .field("dt", fmt_f64(r.dt))
        .field("pass", r.pass);
    let mut t = Table::new("refinement", &["steps", "error", "ratio_to_next"]);
    for (i, (&m, &e)) in r.levels.iter().zip(&r.errors).enumerate() {
        let ratio = r.ratios.get(i).map(|x| fmt_f64(*x)).unwrap_or_default();
        t.row(vec![m.to_string(), fmt_f64(e), ratio]);
    }
    doc.push_table(t);
    doc.render()
}

fn stability_diagnostic(
    coeffs: &levy_sde::CoefficientSet,
    config: &ExperimentConfig,
    grid: TimeGrid,
    eps: f64,
    options: &SolveOptions,
    warnings: &mut Vec<String>,
) -> levy_sde::Result<StabilityReport> {
    let certificate = delta_for_epsilon(&coeffs.modulus, grid.horizon(), eps);
    let gap = match (config.diagnostics.stability_gap, &certificate) {
        (Some(g), _) => g,
        (None, Ok(cert)) => (cert.delta / 4.0).sqrt() * 0.999,
        (None, Err(e)) => {
            warnings.push(format!(
                "stability eps {eps}: no certificate ({e}); probing with gap eps/4"
            ));
            eps / 4.0
        }
    };
    let xi = coeffs.initial.clone();
    let eta = match &xi {
        InitialLaw::PointMass(v) => {
            let d = v.len() as f64;
            InitialLaw::PointMass(v.iter().map(|x| x + gap / d.sqrt()).collect())
        }
        InitialLaw::Sampler { .. } => {
            warnings.push(format!(
                "stability eps {eps}: sampled initial law; comparing against itself (gap 0)"
            ));
            xi.clone()
        }
    };
    mean_square_stability_test(
        coeffs,
        xi,
        eta,
        grid,
        config.paths,
        config.seed,
        eps,
        options,
    )
}

/// Write plain tab-separated plot tables for whatever reports exist. Returns
/// the files written; an empty report set writes nothing.
pub fn emit_plot_data(set: &ReportSet, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(conv) = &set.convergence {
        let path = dir.join("iterate_distances.tsv");
        let mut text = String::from("k\td\tse\n");
        for d in &conv.successive {
            text.push_str(&format!(
                "{}\t{}\t{}\n",
                d.from,
                fmt_f64(d.distance),
                fmt_f64(d.se)
            ));
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);

        if let (Some(moment), Some(profile)) = (&set.moment, conv.moments.last()) {
            let path = dir.join("moment_profile.tsv");
            let mut text = String::from("t\tmean_sq\tse\tbound\n");
            let steps = set.grid_steps.max(1);
            for (i, (&m, &s)) in profile.mean_sq.iter().zip(&profile.se).enumerate() {
                let t = i as f64 * set.grid_horizon / steps as f64;
                text.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    fmt_f64(t),
                    fmt_f64(m),
                    fmt_f64(s),
                    fmt_f64(moment.bound)
                ));
            }
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
    }
    if !set.stability.is_empty() {
        let path = dir.join("stability_gaps.tsv");
        let mut text = String::from("eps\tdelta\tinitial_gap_sq\tgap4\tmeasured\tse\tpass\n");
        for r in &set.stability {
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                fmt_f64(r.eps),
                r.delta.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.initial_gap_sq),
                fmt_f64(r.initial_gap_sq_x4),
                fmt_f64(r.estimate),
                fmt_f64(r.se),
                r.pass
            ));
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}


fn render_manifest(
    config: &ExperimentConfig,
    outcomes: &[DiagnosticOutcome],
    written: &[PathBuf],
    warnings: &[String],
) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "# levy-sde run manifest");
    let epoch = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let _ = writeln!(out, "generated_unix_time {epoch}");
    let _ = writeln!(out, "cli_version {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "lib_version {}", levy_sde::VERSION);
    let _ = writeln!(out, "seed {}", config.seed);
    let _ = writeln!(out);
    let _ = writeln!(out, "[diagnostic-results]");
    for o in outcomes {
        let _ = writeln!(
            out,
            "{} {} ({})",
            o.name,
            if o.pass { "pass" } else { "FAIL" },
            o.detail
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[outputs]");
    let _ = writeln!(
        out,
        "# reports/*.txt: structured text, `# kind`, `key value` fields,"
    );
    let _ = writeln!(
        out,
        "#   then [table] blocks with one tab-separated header row"
    );
    let _ = writeln!(out, "# plot/iterate_distances.tsv: k, d, se");
    let _ = writeln!(out, "# plot/moment_profile.tsv: t, mean_sq, se, bound");
    let _ = writeln!(
        out,
        "# plot/stability_gaps.tsv: eps, delta, initial_gap_sq, gap4, measured, se, pass"
    );
    for p in written {
        let _ = writeln!(out, "{}", p.display());
    }
    if !warnings.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "[warnings]");
        for w in warnings {
            let _ = writeln!(out, "{w}");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[config]");
    out.push_str(&config.canonical_toml());
    out
}
