//! Command-line front end: synthetic data generation, alignment runs,
//! evaluation, classification scoring, baselines, and grid search.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ordalign::io::{self, ReportFile, RepeatSummary};
use ordalign::pipeline::{
    classifier_alignment, classify_and_ap, evaluate_alignment, grid_search, run_ncut,
    run_semi, run_weak, split_dataset, train_sl_baseline, AlignConfig, AlignmentRun, GridPoint,
    Split, SplitSpec,
};
use ordalign::{generate, Error, PaddingMode, Result, SolveOptions, StepRule, SyntheticConfig};

#[derive(Parser)]
#[command(
    name = "ordalign",
    about = "Weakly supervised temporal alignment of ordered action labels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Weak,
    Semi,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepRuleArg {
    Linesearch,
    Universal,
}

impl From<StepRuleArg> for StepRule {
    fn from(value: StepRuleArg) -> Self {
        match value {
            StepRuleArg::Linesearch => StepRule::ExactLineSearch,
            StepRuleArg::Universal => StepRule::Universal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Ncut,
    Sl,
}

#[derive(clap::Args)]
struct SplitArgs {
    /// Fraction of clips with full temporal supervision.
    #[arg(long, default_value_t = 0.25)]
    sup_fraction: f64,
    /// Fraction of clips held out for hyper-parameter validation.
    #[arg(long, default_value_t = 0.05)]
    val_fraction: f64,
    /// Fraction of clips held out for classifier testing.
    #[arg(long, default_value_t = 0.10)]
    test_fraction: f64,
}

impl SplitArgs {
    fn spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            sup_fraction: self.sup_fraction,
            val_fraction: self.val_fraction,
            test_fraction: self.test_fraction,
            seed,
            n_repeats: 1,
        }
    }
}

#[derive(clap::Args)]
struct SolverArgs {
    /// Duality-gap stopping threshold.
    #[arg(long, default_value_t = 1e-4)]
    gap_tol: f64,
    /// Iteration cap of the Frank-Wolfe loop.
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Step-size rule.
    #[arg(long, value_enum, default_value = "linesearch")]
    step_rule: StepRuleArg,
}

impl SolverArgs {
    fn options(&self, record_history: bool) -> SolveOptions {
        SolveOptions {
            gap_tol: self.gap_tol,
            max_iter: self.max_iter,
            step_rule: self.step_rule.into(),
            record_history,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark dataset.
    Generate {
        /// JSON file with the generator configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the manifest and feature files.
        #[arg(long)]
        out: PathBuf,
        /// Seed overriding the one in the configuration file.
        #[arg(long)]
        seed: u64,
    },
    /// Recover interval-to-label assignments by convex alignment.
    Align {
        #[arg(long)]
        manifest: PathBuf,
        /// Weak: ordered labels only; semi: supervised clips frozen.
        #[arg(long, value_enum, default_value = "weak")]
        mode: Mode,
        /// Ridge regularization strength.
        #[arg(long, default_value_t = 1e-2)]
        lambda: f64,
        /// Linear penalty on assigning intervals to background.
        #[arg(long, default_value_t = 0.0)]
        kappa_bg: f64,
        /// Loss weight of the background class.
        #[arg(long, default_value_t = 1.0)]
        bg_weight: f64,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of split repeats to aggregate.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-iteration solver traces.
        #[arg(long)]
        trace: bool,
    },
    /// Score a stored alignment against ground truth.
    Eval {
        #[arg(long)]
        alignment: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a stored classifier on the held-out Test split (per-class AP).
    Classify {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a baseline method.
    Baseline {
        #[arg(long, value_enum)]
        kind: BaselineKind,
        #[arg(long)]
        manifest: PathBuf,
        /// Temporal-proximity decay of the NCUT similarity.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Appearance-distance decay of the NCUT similarity.
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Window beyond which NCUT similarity is zero.
        #[arg(long, default_value_t = 10)]
        dmin: usize,
        /// Ridge strength of the supervised (sl) baseline.
        #[arg(long, default_value_t = 1e-2)]
        lambda: f64,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick hyper-parameters by mean Jaccard on the Val split.
    Grid {
        #[arg(long)]
        manifest: PathBuf,
        /// JSON array of {lambda, kappa_bg, bg_weight} points.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "weak")]
        mode: Mode,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            // Usage mistakes are validation errors (exit 1), not the
            // numerical-failure code clap would exit with by default.
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version output.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, out, seed } => {
            let text =
                std::fs::read_to_string(&config).map_err(|e| Error::io(&config, e))?;
            let mut cfg: SyntheticConfig = serde_json::from_str(&text)
                .map_err(|e| Error::malformed(&config, e.to_string()))?;
            cfg.seed = seed;
            let dataset = generate(&cfg)?;
            let manifest = io::write_dataset(&dataset, &out)?;
            println!("wrote {}", manifest.display());
            Ok(())
        }
        Command::Align {
            manifest,
            mode,
            lambda,
            kappa_bg,
            bg_weight,
            split,
            solver,
            seed,
            repeats,
            out,
            trace,
        } => {
            if repeats == 0 {
                return Err(Error::validation("repeats must be at least 1"));
            }
            let dataset = io::read_dataset(&manifest, PaddingMode::BetweenOnly)?;
            let config = AlignConfig {
                lambda,
                kappa_bg,
                bg_weight,
                solve: solver.options(trace),
            };
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let mut scores = Vec::with_capacity(repeats);
            let mut first: Option<(AlignmentRun, Split)> = None;
            for r in 0..repeats {
                let spec = split.spec(seed.wrapping_add(r as u64));
                let sp = split_dataset(dataset.clips.len(), &spec)?;
                let run = match mode {
                    Mode::Weak => run_weak(&dataset, &sp, &config)?,
                    Mode::Semi => run_semi(&dataset, &sp, &config)?,
                };
                scores.push(run.report.mean_jaccard);
                if r == 0 {
                    first = Some((run, sp));
                }
            }
            let (run, sp) = first.expect("at least one repeat");
            let aligned: Vec<_> = sp
                .eval
                .iter()
                .map(|&i| (i, run.path_for(i).expect("eval clip aligned").clone()))
                .collect();
            io::write_alignment(&dataset, &aligned, &out.join("alignment.json"))?;
            if let Some(clf) = &run.classifier {
                io::write_model(&clf, &dataset.label_set, &out.join("model.json"))?;
            }
            if trace {
                io::write_trace(&run.result.trace, &out.join("trace.jsonl"))?;
            }
            let report = ReportFile {
                seed,
                config: json!({
                    "command": "align",
                    "mode": match mode { Mode::Weak => "weak", Mode::Semi => "semi" },
                    "lambda": lambda,
                    "kappa_bg": kappa_bg,
                    "bg_weight": bg_weight,
                    "sup_fraction": split.sup_fraction,
                    "val_fraction": split.val_fraction,
                    "test_fraction": split.test_fraction,
                    "gap_tol": solver.gap_tol,
                    "max_iter": solver.max_iter,
                    "repeats": repeats,
                    "final_gap": run.result.final_gap,
                    "iterations": run.result.iterations,
                }),
                report: run.report,
                repeats: (repeats > 1).then(|| RepeatSummary::from_scores(&scores)),
            };
            io::write_report(&report, &out.join("report.json"))?;
            println!("mean Jaccard {:.4}", scores[0]);
            Ok(())
        }
        Command::Eval {
            alignment,
            manifest,
            out,
        } => {
            let dataset = io::read_dataset(&manifest, PaddingMode::BetweenOnly)?;
            let aligned = io::read_alignment(&alignment, &dataset)?;
            let report = evaluate_alignment(&aligned, &dataset)?;
            println!("mean Jaccard {:.4}", report.mean_jaccard);
            io::write_report(
                &ReportFile {
                    seed: 0,
                    config: json!({
                        "command": "eval",
                        "alignment": alignment.display().to_string(),
                    }),
                    report,
                    repeats: None,
                },
                &out,
            )
        }
        Command::Classify {
            manifest,
            model,
            out,
            split,
            seed,
        } => {
            let dataset = io::read_dataset(&manifest, PaddingMode::BetweenOnly)?;
            let (classifier, labels) = io::read_model(&model)?;
            if labels != dataset.label_set.names() {
                return Err(Error::validation(
                    "model labels do not match the dataset label set",
                ));
            }
            let sp = split_dataset(dataset.clips.len(), &split.spec(seed))?;
            let ap = classify_and_ap(&classifier, &dataset, &sp.test)?;
            let mean_ap = if ap.is_empty() {
                0.0
            } else {
                ap.values().sum::<f64>() / ap.len() as f64
            };
            println!("mean AP {mean_ap:.4}");
            write_json_file(
                &json!({
                    "seed": seed,
                    "config": { "command": "classify", "test_fraction": split.test_fraction },
                    "per_class_ap": ap,
                    "mean_ap": mean_ap,
                }),
                &out,
            )
        }
        Command::Baseline {
            kind,
            manifest,
            alpha,
            beta,
            dmin,
            lambda,
            split,
            solver,
            seed,
            out,
        } => {
            let dataset = io::read_dataset(&manifest, PaddingMode::BetweenOnly)?;
            let sp = split_dataset(dataset.clips.len(), &split.spec(seed))?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let (aligned, report, config) = match kind {
                BaselineKind::Ncut => {
                    let run = run_ncut(&dataset, &sp, alpha, beta, dmin, &solver.options(false))?;
                    let aligned: Vec<_> = sp
                        .eval
                        .iter()
                        .map(|&i| (i, run.path_for(i).expect("eval clip aligned").clone()))
                        .collect();
                    (
                        aligned,
                        run.report,
                        json!({
                            "command": "baseline", "kind": "ncut",
                            "alpha": alpha, "beta": beta, "dmin": dmin,
                        }),
                    )
                }
                BaselineKind::Sl => {
                    let classifier = train_sl_baseline(&dataset, &sp.sup, lambda)?;
                    let aligned = classifier_alignment(&classifier, &dataset, &sp.eval)?;
                    let report = evaluate_alignment(&aligned, &dataset)?;
                    io::write_model(&classifier, &dataset.label_set, &out.join("model.json"))?;
                    (
                        aligned,
                        report,
                        json!({
                            "command": "baseline", "kind": "sl", "lambda": lambda,
                            "sup_fraction": split.sup_fraction,
                        }),
                    )
                }
            };
            io::write_alignment(&dataset, &aligned, &out.join("alignment.json"))?;
            println!("mean Jaccard {:.4}", report.mean_jaccard);
            io::write_report(
                &ReportFile {
                    seed,
                    config,
                    report,
                    repeats: None,
                },
                &out.join("report.json"),
            )
        }
        Command::Grid {
            manifest,
            grid,
            out,
            mode,
            split,
            solver,
            seed,
        } => {
            let dataset = io::read_dataset(&manifest, PaddingMode::BetweenOnly)?;
            let text = std::fs::read_to_string(&grid).map_err(|e| Error::io(&grid, e))?;
            let points: Vec<GridPoint> = serde_json::from_str(&text)
                .map_err(|e| Error::malformed(&grid, e.to_string()))?;
            let sp = split_dataset(dataset.clips.len(), &split.spec(seed))?;
            let semi = matches!(mode, Mode::Semi);
            let options = solver.options(false);
            let (best, val_scores) = grid_search(&dataset, &sp, &points, semi, &options)?;
            // Fresh run at the winning point, reported on Eval.
            let config = AlignConfig {
                lambda: points[best].lambda,
                kappa_bg: points[best].kappa_bg,
                bg_weight: points[best].bg_weight,
                solve: options,
            };
            let run = if semi {
                run_semi(&dataset, &sp, &config)?
            } else {
                run_weak(&dataset, &sp, &config)?
            };
            println!(
                "best point {} of {}: eval mean Jaccard {:.4}",
                best,
                points.len(),
                run.report.mean_jaccard
            );
            write_json_file(
                &json!({
                    "seed": seed,
                    "best_index": best,
                    "best": points[best],
                    "val_scores": val_scores,
                    "eval_report": run.report,
                }),
                &out,
            )
        }
    }
}

fn write_json_file(value: &serde_json::Value, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
