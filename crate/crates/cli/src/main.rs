use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlwlab::runner::{self, RunContext, RunOutcome, ScenarioConfig};
use nlwlab::Error;

#[derive(Parser)]
#[command(name = "nlwlab", version, about = "Radial energy-critical focusing wave equation laboratory")]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Spatial dimension D (4..=8).
    #[arg(long)]
    dim: Option<usize>,
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: nlwlab-out/<subcommand>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct Bubbles {
    /// Comma-separated increasing scales, e.g. 0.05,1.
    #[arg(long)]
    scales: Option<String>,
    /// Signs as "++", "+-" or "1,-1".
    #[arg(long, allow_hyphen_values = true)]
    signs: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Quadrature checks of the closed-form constants.
    VerifyConstants {
        #[command(flatten)]
        common: Common,
    },
    /// Negative eigenpair of the linearized operator.
    Eigen {
        #[command(flatten)]
        common: Common,
    },
    /// Evolve configured data with modulation fit and virial diagnostics.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bubbles: Bubbles,
    },
    /// Two-bubble PDE run with the reduced-model prediction.
    Collide {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bubbles: Bubbles,
    },
    /// Reduced bubble dynamics and collision metrics.
    Reduced {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bubbles: Bubbles,
    },
    /// Recompute intervals, residuals and rates from a previous run directory.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Directory holding series.csv of a previous run.
        #[arg(long)]
        input: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            toml_with_path(&text, p)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(d) = common.dim {
        cfg.dim = d;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output.dir = Some(o.clone());
    }
    Ok(cfg)
}

fn toml_with_path(text: &str, path: &std::path::Path) -> Result<ScenarioConfig, Error> {
    runner::parse_config(text).map_err(|e| match e {
        Error::ConfigParse(m) => Error::ConfigParse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn apply_bubbles(cfg: &mut ScenarioConfig, b: &Bubbles, reduced: bool) -> Result<(), Error> {
    let scales = b.scales.as_deref().map(runner::parse_reals).transpose()?;
    let signs = b.signs.as_deref().map(runner::parse_signs).transpose()?;
    if scales.is_none() && signs.is_none() {
        return Ok(());
    }
    let current: (Vec<i8>, Vec<f64>) = if reduced {
        (cfg.reduced.signs.clone(), cfg.reduced.lambda.clone())
    } else {
        (
            cfg.initial.bubbles.iter().map(|x| x.sign).collect(),
            cfg.initial.bubbles.iter().map(|x| x.scale).collect(),
        )
    };
    let scales = scales.unwrap_or(current.1);
    let signs = signs.unwrap_or_else(|| vec![1; scales.len()]);
    if reduced {
        if signs.len() != scales.len() {
            return Err(Error::ConfigValidation(vec![format!(
                "{} signs for {} scales",
                signs.len(),
                scales.len()
            )]));
        }
        cfg.reduced.signs = signs;
        cfg.reduced.lambda = scales;
        cfg.reduced.beta = None;
        cfg.reduced.a_minus = None;
        cfg.reduced.a_plus = None;
    } else {
        cfg.set_bubbles(&signs, &scales)?;
    }
    Ok(())
}

fn report(name: &str, outcome: &RunOutcome) {
    let meta = &outcome.record.metadata;
    if name == "verify-constants" {
        if let Some(rows) = meta["checks"].as_array() {
            for r in rows {
                let verdict = if r["informational"].as_bool() == Some(true) {
                    "INFO"
                } else if r["pass"].as_bool() == Some(true) {
                    "PASS"
                } else {
                    "FAIL"
                };
                println!(
                    "{verdict:4}  {:<52} value = {:<22} err = {:.3e} (tol {:.0e})",
                    r["name"].as_str().unwrap_or(""),
                    r["value"],
                    r["error"].as_f64().unwrap_or(f64::NAN),
                    r["tolerance"].as_f64().unwrap_or(f64::NAN),
                );
            }
        }
        return;
    }
    for key in ["measured", "collision", "reduced_prediction", "events"] {
        if !meta[key].is_null() {
            println!("{key}: {}", serde_json::to_string_pretty(&meta[key]).unwrap_or_default());
        }
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::ConfigValidation(vec![format!("thread pool: {e}")]))?;
    }
    let (name, common, bubbles, input) = match cli.command {
        Command::VerifyConstants { common } => ("verify-constants", common, None, None),
        Command::Eigen { common } => ("eigen", common, None, None),
        Command::Evolve { common, bubbles } => ("evolve", common, Some(bubbles), None),
        Command::Collide { common, bubbles } => ("collide", common, Some(bubbles), None),
        Command::Reduced { common, bubbles } => ("reduced", common, Some(bubbles), None),
        Command::Analyze { common, input } => ("analyze", common, None, Some(input)),
    };
    let mut cfg = load_config(&common)?;
    if name == "collide" && common.config.is_none() && bubbles.as_ref().is_some_and(|b| b.scales.is_none()) {
        cfg.set_bubbles(&[1, 1], &[0.05, 1.0])?;
    }
    if let Some(b) = &bubbles {
        apply_bubbles(&mut cfg, b, name == "reduced")?;
    }
    cfg.validate()?;
    let out = cfg
        .output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("nlwlab-out").join(name));
    let scenario = runner::scenario_by_name(name)?;
    let ctx = RunContext { config: cfg, input };
    let (outcome, manifest, code) = runner::run_and_emit(scenario.as_ref(), &ctx, &out)?;
    report(name, &outcome);
    for f in &manifest.files {
        println!("wrote {} ({})", out.join(&f.path).display(), &f.sha256[..16]);
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
