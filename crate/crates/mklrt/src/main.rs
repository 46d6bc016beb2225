use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mklrt::commands::{self, BaselineMethod, ToyOptions};
use mklrt::config::{ExperimentConfig, MetricName, TaskName};
use mklrt::io::read_comments;
use mklrt::{CliError, Result};
use mklrt_core::View;

#[derive(Parser)]
#[command(
    name = "mklrt",
    version,
    about = "Multiple kernel learning for ratio-trace problems"
)]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Ak,
    Pk,
    Bik,
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    First,
    Second,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Kfda,
    Kcca,
    Lkcca,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Euclidean,
    Cosine,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Classify,
    Retrieve,
}

#[derive(Subcommand)]
enum Command {
    /// Learn kernel weights and the embedding.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Model output (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Convergence trace CSV (overrides the config).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Fit a fixed-combination comparator.
    Baseline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        method: BaselineArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Map test items into the latent space.
    Project {
        #[arg(long)]
        model: PathBuf,
        /// Test-by-train kernel files, one per base kernel (or one for the second view).
        #[arg(long, num_args = 1.., required = true)]
        kernels: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "first")]
        view: ViewArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score latent coordinates.
    Evaluate {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Label files (`item_id,class_id`) covering every item involved.
        #[arg(long, num_args = 1.., required = true)]
        labels: Vec<PathBuf>,
        /// classify: training latents.
        #[arg(long, required_if_eq("mode", "classify"))]
        train: Option<PathBuf>,
        /// classify: test latents.
        #[arg(long, required_if_eq("mode", "classify"))]
        test: Option<PathBuf>,
        /// retrieve: query latents.
        #[arg(long, required_if_eq("mode", "retrieve"))]
        queries: Option<PathBuf>,
        /// retrieve: gallery latents.
        #[arg(long, required_if_eq("mode", "retrieve"))]
        gallery: Option<PathBuf>,
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
        /// Report CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Compare the SILP solution with a brute-force simplex grid.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Grid table CSV (overrides the config).
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Summarize a model or kernel file.
    Inspect { path: PathBuf },
    /// Write a seeded two-blob KFDA experiment.
    Toy {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        per_class: usize,
        #[arg(long, default_value_t = 40)]
        test_per_class: usize,
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        noise_kernels: usize,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
    },
}

fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            task,
            sigma,
            out,
            trace,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(t) = task {
                cfg.task = match t {
                    TaskArg::Kfda => TaskName::Kfda,
                    TaskArg::Kcca => TaskName::Kcca,
                    TaskArg::Lkcca => TaskName::Lkcca,
                };
            }
            if let Some(s) = sigma {
                cfg.sigma = Some(s);
                cfg.sigma_grid = None;
            }
            cfg.output.model = out.or(cfg.output.model);
            cfg.output.trace = trace.or(cfg.output.trace);
            cfg.validate()?;
            if cfg.output.model.is_none() {
                return Err(CliError::Usage(
                    "no model output: pass --out or set output.model".into(),
                ));
            }
            let res = commands::cmd_train(&cfg)?;
            println!("mu: {:?}", res.model.mu);
            println!("objective: {}", res.model.objective);
            println!("sigma: {}", res.model.sigma);
            Ok(())
        }
        Command::Baseline {
            config,
            method,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            cfg.output.model = out.or(cfg.output.model);
            if cfg.output.model.is_none() {
                return Err(CliError::Usage(
                    "no model output: pass --out or set output.model".into(),
                ));
            }
            let method = match method {
                BaselineArg::Ak => BaselineMethod::Average,
                BaselineArg::Pk => BaselineMethod::Product,
                BaselineArg::Bik => BaselineMethod::BestIndividual,
            };
            let m = commands::cmd_baseline(&cfg, method)?;
            println!("mu: {:?}", m.mu);
            println!("objective: {}", m.objective);
            Ok(())
        }
        Command::Project {
            model,
            kernels,
            view,
            out,
        } => {
            let view = match view {
                ViewArg::First => View::First,
                ViewArg::Second => View::Second,
            };
            let (ids, z) = commands::cmd_project(&model, &kernels, view)?;
            commands::write_projection(&out, &model, &ids, &z)?;
            println!("projected {} items to {} dims", z.nrows(), z.ncols());
            Ok(())
        }
        Command::Evaluate {
            mode,
            labels,
            train,
            test,
            queries,
            gallery,
            metric,
            out,
            json,
        } => match mode {
            Mode::Classify => {
                let metric = match metric {
                    Some(MetricArg::Cosine) => MetricName::Cosine,
                    _ => MetricName::Euclidean,
                };
                let test = test.expect("required");
                let s = commands::cmd_classify(
                    &train.expect("required"),
                    &test,
                    &labels,
                    metric.into(),
                )?;
                let comments = read_comments(&test)?;
                commands::write_classification(out.as_deref(), json.as_deref(), &s, &comments)?;
                for (c, a) in &s.per_class_accuracy {
                    println!("class {c}: {a}");
                }
                println!("mean per-class accuracy: {}", s.mean_per_class);
                Ok(())
            }
            Mode::Retrieve => {
                if matches!(metric, Some(MetricArg::Euclidean)) {
                    return Err(CliError::Usage(
                        "retrieval ranks by cosine similarity only".into(),
                    ));
                }
                let queries = queries.expect("required");
                let s = commands::cmd_retrieve(&queries, &gallery.expect("required"), &labels)?;
                let comments = read_comments(&queries)?;
                commands::write_retrieval(out.as_deref(), json.as_deref(), &s, &comments)?;
                println!("MAP: {}", s.map);
                Ok(())
            }
        },
        Command::Oracle {
            config,
            step,
            table,
        } => {
            let cfg = load_config(&config)?;
            let v = commands::cmd_oracle(&cfg, step, table.as_deref())?;
            println!("grid points: {}", v.grid.table.len());
            println!("grid best mu: {:?}", v.grid.best_mu.as_slice());
            println!("grid best objective: {}", v.grid.best_objective);
            println!("silp mu: {:?}", v.silp_mu.as_slice());
            println!("silp objective: {}", v.silp_objective);
            println!("verdict: {}", if v.pass { "PASS" } else { "FAIL" });
            if v.pass {
                Ok(())
            } else {
                Err(CliError::OracleFail(format!(
                    "silp objective {} below grid best {}",
                    v.silp_objective, v.grid.best_objective
                )))
            }
        }
        Command::Inspect { path } => {
            print!("{}", commands::cmd_inspect(&path)?);
            Ok(())
        }
        Command::Toy {
            out_dir,
            seed,
            per_class,
            test_per_class,
            separation,
            noise_kernels,
            sigma,
        } => {
            let cfg = commands::cmd_toy(
                &out_dir,
                ToyOptions {
                    seed,
                    per_class,
                    test_per_class,
                    separation,
                    noise_kernels,
                    sigma,
                },
            )?;
            println!("wrote {}", cfg.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
