//! `extruplan`: encode profiles, generate case corpora, train the network,
//! and produce estimated machining plans for extrusion dies.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O or schema error,
//! 3 internal error.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde::Serialize;

use extruplan::codec::{encode_profile, validate_output, CodecError, EncodingConfig};
use extruplan::estimator::{estimate_plan, EstimateError, EstimatorConfig};
use extruplan::kb::{KbError, KnowledgeBase};
use extruplan::library::{build_dataset, library_path, load_library, save_library, synthetic_library, to_samples, Library, LibraryError};
use extruplan::nn::{fit, Mlp, NnError, TrainConfig};
use extruplan::planner::{evaluate, predict, PlanError, Planner, Stage};
use extruplan::{ProcessPlan, ProfileSpec};

const CONFIG_ENV: &str = "EXTRUPLAN_CONFIG";

#[derive(Parser)]
#[command(name = "extruplan", version, about = "Process planning for aluminum extrusion dies")]
struct Cli {
    /// Encoding config; may carry a `cli` section with flag defaults.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the 170-node input vector of a profile.
    Encode {
        #[arg(long)]
        profile: PathBuf,
    },
    /// Write a synthetic case library to DIR/library.json.
    GenCases {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Move numeric attributes off bin centres by up to this fraction
        /// of a half bin.
        #[arg(long)]
        jitter: Option<f64>,
        #[command(flatten)]
        sources: Sources,
    },
    /// Train the network on a case library.
    Train {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        momentum: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Reshuffle the pattern order every epoch.
        #[arg(long)]
        shuffle: bool,
        #[arg(long)]
        model_out: PathBuf,
        /// Per-epoch MSE as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Raw and thresholded output vector for a profile.
    Predict {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Full plan document for a profile.
    Plan {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        cases: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        sources: Sources,
    },
    /// Fill times and costs into a plan or plan document.
    Estimate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        cost_model: Option<PathBuf>,
    },
    /// Accuracy and plan agreement of a model over a case library.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        cases: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        sources: Sources,
    },
    /// Dimensions and training metadata of a model file.
    InspectModel { model: PathBuf },
}

#[derive(Args, Default)]
struct Sources {
    /// Knowledge base file.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Estimator config with rates, parameters and default volumes.
    #[arg(long)]
    cost_model: Option<PathBuf>,
}

/// Flag defaults read from the `cli` section of the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileDefaults {
    kb: Option<PathBuf>,
    cost_model: Option<PathBuf>,
    n: Option<usize>,
    seed: Option<u64>,
    jitter: Option<f64>,
    epochs: Option<usize>,
    hidden: Option<usize>,
    lr: Option<f64>,
    momentum: Option<f64>,
    threshold: Option<f64>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(e: impl Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }
    fn io(e: impl Display) -> Self {
        Self { code: 2, message: e.to_string() }
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Io(_) | CodecError::Parse(_) | CodecError::InvalidConfig(_) => Self::io(e),
            _ => Self::validation(e),
        }
    }
}

impl From<KbError> for Failure {
    fn from(e: KbError) -> Self {
        match e {
            KbError::NoRule { .. } => Self::validation(e),
            _ => Self::io(e),
        }
    }
}

impl From<EstimateError> for Failure {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::InvalidConfig(_) | EstimateError::Io(_) | EstimateError::Json(_) => Self::io(e),
            _ => Self::validation(e),
        }
    }
}

impl From<LibraryError> for Failure {
    fn from(e: LibraryError) -> Self {
        match e {
            LibraryError::Io(_) | LibraryError::SchemaMismatch(_) | LibraryError::VersionMismatch { .. } => Self::io(e),
            _ => Self::validation(e),
        }
    }
}

impl From<NnError> for Failure {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Io(_) | NnError::Json(_) | NnError::InvalidModel(_) => Self::io(e),
            NnError::NonFiniteLoss { .. } | NnError::NotDifferentiable => Self { code: 3, message: e.to_string() },
            _ => Self::validation(e),
        }
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        match e.stage {
            Stage::Retrieve => Self::io(e),
            _ => Self::validation(e),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

struct Context {
    codec: EncodingConfig,
    defaults: FileDefaults,
}

impl Context {
    fn load(path: Option<&Path>) -> Outcome<Self> {
        let Some(path) = path else {
            return Ok(Self { codec: EncodingConfig::shipped(), defaults: FileDefaults::default() });
        };
        let text = read(path)?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        let defaults = match value.get("cli") {
            Some(section) => FileDefaults::deserialize(section)
                .map_err(|e| Failure::io(format!("{}: cli section: {e}", path.display())))?,
            None => FileDefaults::default(),
        };
        let codec = EncodingConfig::from_json(&text).map_err(|e| Failure::from(e).prefixed(path))?;
        Ok(Self { codec, defaults })
    }

    fn kb(&self, flag: &Option<PathBuf>) -> Outcome<KnowledgeBase> {
        match flag.as_ref().or(self.defaults.kb.as_ref()) {
            Some(p) => KnowledgeBase::from_path(p).map_err(|e| Failure::from(e).prefixed(p)),
            None => Ok(KnowledgeBase::shipped()),
        }
    }

    fn estimator(&self, flag: &Option<PathBuf>) -> Outcome<EstimatorConfig> {
        match flag.as_ref().or(self.defaults.cost_model.as_ref()) {
            Some(p) => EstimatorConfig::from_path(p).map_err(|e| Failure::from(e).prefixed(p)),
            None => Ok(EstimatorConfig::shipped()),
        }
    }

    fn threshold(&self, flag: Option<f64>) -> f64 {
        flag.or(self.defaults.threshold).unwrap_or(TrainConfig::default().threshold)
    }

    fn library(&self, dir: &Path) -> Outcome<Library> {
        let path = library_path(dir);
        load_library(&path, &self.codec).map_err(|e| Failure::from(e).prefixed(&path))
    }
}

impl Failure {
    fn prefixed(self, path: &Path) -> Self {
        Self { message: format!("{}: {}", path.display(), self.message), ..self }
    }
}

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Outcome<Mlp> {
    Mlp::load(path).map_err(|e| Failure::from(e).prefixed(path))
}

fn emit<T: Serialize>(value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure { code: 3, message: e.to_string() })?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::io(e)),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Outcome {
    let ctx = Context::load(cli.config.as_deref())?;
    let d = &ctx.defaults;
    match cli.command {
        Command::Encode { profile } => {
            let spec: ProfileSpec = parse(&profile)?;
            let report = extruplan::validate_profile(&spec);
            if !report.is_valid() {
                return Err(Failure::validation(format!("invalid profile: {:?}", report.violations)));
            }
            emit(&encode_profile(&spec, &ctx.codec)?)
        }
        Command::GenCases { n, seed, out, jitter, sources } => {
            let n = n.or(d.n).unwrap_or(150);
            if n == 0 {
                return Err(Failure::validation("--n must be >= 1"));
            }
            let jitter = jitter.or(d.jitter).unwrap_or(0.0);
            if !(0.0..1.0).contains(&jitter) {
                return Err(Failure::validation("--jitter must be in [0, 1)"));
            }
            let kb = ctx.kb(&sources.kb)?;
            let lib = synthetic_library(n, seed.or(d.seed).unwrap_or(0), &ctx.codec, &kb, jitter)?;
            std::fs::create_dir_all(&out).map_err(|e| Failure::io(format!("{}: {e}", out.display())))?;
            let path = out.join(extruplan::library::LIBRARY_FILE);
            save_library(&lib, &path).map_err(|e| Failure::from(e).prefixed(&path))?;
            eprintln!("wrote {} cases to {}", lib.len(), path.display());
            Ok(())
        }
        Command::Train { cases, epochs, hidden, lr, momentum, seed, shuffle, model_out, history } => {
            let lib = ctx.library(&cases)?;
            let data = to_samples(&build_dataset(&lib, &ctx.codec)?);
            let base = TrainConfig::default();
            let cfg = TrainConfig {
                learning_rate: lr.or(d.lr).unwrap_or(base.learning_rate),
                momentum: momentum.or(d.momentum).unwrap_or(base.momentum),
                hidden_size: hidden.or(d.hidden).unwrap_or(base.hidden_size),
                epochs: epochs.or(d.epochs).unwrap_or(base.epochs),
                seed: seed.or(d.seed).unwrap_or(base.seed),
                threshold: ctx.threshold(None),
                shuffle,
                ..base
            };
            let (model, report) = fit(&data, &cfg)?;
            write(&model_out, &model.to_json())?;
            if let Some(path) = history {
                write(&path, &report.to_csv())?;
            }
            eprintln!(
                "trained {} epochs on {} cases, MSE {} -> {}",
                cfg.epochs,
                data.len(),
                report.initial_mse().unwrap_or(f64::NAN),
                report.final_mse().unwrap_or(f64::NAN)
            );
            Ok(())
        }
        Command::Predict { profile, model, threshold } => {
            let spec: ProfileSpec = parse(&profile)?;
            let model = load_model(&model)?;
            let p = predict(&model, &spec, &ctx.codec, ctx.threshold(threshold))?;
            let diagnostics = validate_output(&p.binary, &ctx.codec);
            emit(&serde_json::json!({
                "raw": p.raw,
                "binary": p.binary,
                "confidence": p.confidence,
                "diagnostics": diagnostics,
            }))
        }
        Command::Plan { profile, model, cases, threshold, sources } => {
            let spec: ProfileSpec = parse(&profile)?;
            let model = model.as_deref().map(load_model).transpose()?;
            let lib = cases.as_deref().map(|c| ctx.library(c)).transpose()?;
            let kb = ctx.kb(&sources.kb)?;
            let estimator = ctx.estimator(&sources.cost_model)?;
            let planner = Planner {
                codec: &ctx.codec,
                kb: &kb,
                library: lib.as_ref(),
                estimator: &estimator,
                threshold: ctx.threshold(threshold),
            };
            emit(&planner.plan(&spec, model.as_ref())?)
        }
        Command::Estimate { plan, cost_model } => {
            let value: serde_json::Value = parse(&plan)?;
            // Accept a bare plan or a whole plan document.
            let inner = value.get("plan").cloned().unwrap_or(value);
            let parsed: ProcessPlan =
                serde_json::from_value(inner).map_err(|e| Failure::io(format!("{}: {e}", plan.display())))?;
            let estimator = ctx.estimator(&cost_model)?;
            emit(&estimate_plan(&parsed, &estimator)?)
        }
        Command::Eval { model, cases, threshold, sources } => {
            let model = load_model(&model)?;
            let lib = ctx.library(&cases)?;
            let kb = ctx.kb(&sources.kb)?;
            let estimator = ctx.estimator(&sources.cost_model)?;
            let planner = Planner {
                codec: &ctx.codec,
                kb: &kb,
                library: Some(&lib),
                estimator: &estimator,
                threshold: ctx.threshold(threshold),
            };
            emit(&evaluate(&model, &lib, &planner)?)
        }
        Command::InspectModel { model } => {
            let m = load_model(&model)?;
            let t = m.training.as_ref();
            emit(&serde_json::json!({
                "layer_sizes": m.layer_sizes(),
                "parameters": m.parameter_count(),
                "seed": t.map(|t| t.seed),
                "epochs": t.map(|t| t.epochs),
                "learning_rate": t.map(|t| t.learning_rate),
                "momentum": t.map(|t| t.momentum),
                "final_mse": t.map(|t| t.final_mse),
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(3),
    }
}
