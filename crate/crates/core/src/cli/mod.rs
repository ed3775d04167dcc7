//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 1 on usage or data errors, 2 when a fit stops without meeting
//! its tolerance.

mod config;

pub use config::{ConfigFile, SimulationConfig};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::data::{
    gen_synthetic, load_labels, load_matrix, save_labels, save_matrix, Labels, MatrixFormat, Modality,
    ModalityMatrix, SyntheticParams,
};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, metrics, predict_regression, prepare_input, project, ConfusionMatrix};
use crate::numerics::Mat;
use crate::pipeline::{fit, load_model, prepare_landmarks, save_model, ScaledInputs, Variant};
use crate::seed::{derive_seed, Stream};

#[derive(Debug, Parser)]
#[command(name = "lema", version, about = "Cross-modality subspace learning with a learnable graph")]
pub struct Cli {
    /// Run configuration (`[section]` headers with `key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for grid search.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Writes the final joint adjacency of a fit to this path.
    #[arg(long, global = true)]
    pub dump_graph: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fits a model and writes the archive named in `[output] model`.
    Fit,
    /// Predicts one label per input column.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// `hs` or `ms`.
        #[arg(long)]
        modality: Modality,
        /// Label file to write; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Scores predicted labels against the truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Also writes the confusion matrix as CSV.
        #[arg(long)]
        confusion: Option<PathBuf>,
    },
    /// Writes a synthetic paired data set into `[output] dir`.
    Simulate,
    /// Cross-validated search over `[grid]`.
    Gridsearch,
    /// Writes projected features for use with external classifiers.
    ExportFeatures {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        modality: Modality,
        #[arg(long)]
        output: PathBuf,
        /// Labels to copy next to the features.
        #[arg(long, requires = "labels_out")]
        labels: Option<PathBuf>,
        #[arg(long)]
        labels_out: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

enum Outcome {
    Done,
    NotConverged,
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Fit => cmd_fit(cli),
        Command::Predict { model, input, modality, output } => {
            cmd_predict(model, input, *modality, output.as_deref())
        }
        Command::Evaluate { pred, truth, confusion } => cmd_evaluate(pred, truth, confusion.as_deref()),
        Command::Simulate => cmd_simulate(cli),
        Command::Gridsearch => cmd_gridsearch(cli),
        Command::ExportFeatures { model, input, modality, output, labels, labels_out } => {
            cmd_export(model, input, *modality, output, labels.as_deref().zip(labels_out.as_deref()))
        }
    }
    .map(|converged| if converged { Outcome::Done } else { Outcome::NotConverged })
}

fn config(cli: &Cli) -> Result<ConfigFile> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("this command needs --config".into()))?;
    ConfigFile::load(path)
}

fn matrix(path: &Path) -> Result<Mat<f64>> {
    load_matrix(path, MatrixFormat::from_path(path))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Training data after scaling and landmark selection.
struct Training {
    variant: Variant,
    xh: ModalityMatrix<f64>,
    xm: ModalityMatrix<f64>,
    labels: Labels,
    landmarks: Option<ModalityMatrix<f64>>,
    scaled: Option<ScaledInputs<f64>>,
}

fn load_training(cfg: &ConfigFile, seed: u64) -> Result<Training> {
    let need = |key: &str| -> Result<PathBuf> {
        cfg.path_value("data", key)?.ok_or_else(|| {
            Error::InvalidArgument(format!("{}: missing [data] {key}", cfg.path().display()))
        })
    };
    let variant = cfg.variant()?;
    let xh = ModalityMatrix::hs(matrix(&need("xh")?)?)?;
    let xm = ModalityMatrix::ms(matrix(&need("xm")?)?)?;
    let labels = load_labels(&need("labels")?)?;
    let pool = match cfg.path_value("data", "xu")? {
        Some(p) => Some(ModalityMatrix::ms(matrix(&p)?)?),
        None if variant == Variant::CoSpace => None,
        None => return Err(Error::InvalidArgument(format!("{variant} needs [data] xu"))),
    };
    let pool = if variant == Variant::CoSpace { None } else { pool };

    let (xh, xm, pool, scaled) = if cfg.get("data", "normalize")?.unwrap_or(true) {
        let s = ScaledInputs::fit(&xh, &xm, pool.as_ref())?;
        (s.xh.clone(), s.xm.clone(), s.xu.clone(), Some(s))
    } else {
        (xh, xm, pool, None)
    };
    let landmarks = match pool {
        Some(p) if p.samples() > 0 => Some(prepare_landmarks(&p, labels.len(), cfg.get("data", "landmarks")?, seed)?),
        Some(p) => Some(p),
        None => None,
    };
    Ok(Training { variant, xh, xm, labels, landmarks, scaled })
}

fn cmd_fit(cli: &Cli) -> Result<bool> {
    let cfg = config(cli)?;
    let mut solver = cfg.solver()?;
    if let Some(seed) = cli.seed {
        solver.seed = seed;
    }
    let out = cfg
        .path_value("output", "model")?
        .ok_or_else(|| Error::InvalidArgument(format!("{}: missing [output] model", cfg.path().display())))?;
    let t = load_training(&cfg, solver.seed)?;
    let (mut model, report) =
        fit(t.variant, &t.xh, &t.xm, &t.labels, t.landmarks.as_ref(), &cfg.graph()?, &solver)?;
    if let Some(s) = &t.scaled {
        s.attach(&mut model);
    }
    save_model(&out, &model)?;

    if let Some(path) = cfg.path_value("output", "trace")? {
        let mut csv = String::from("iteration,objective\n");
        for (i, v) in report.objective_trace.iter().enumerate() {
            let _ = writeln!(csv, "{i},{v:?}");
        }
        write(&path, &csv)?;
    }
    if let Some(path) = &cli.dump_graph {
        save_matrix(path, &report.graph, MatrixFormat::from_path(path))?;
    }

    println!("variant={}", t.variant);
    println!("outer_iters={}", report.outer_iters);
    println!("converged={}", report.converged);
    println!("objective={:?}", report.final_objective());
    if let Some(r) = report.final_relative_change() {
        println!("relative_change={r:?}");
    }
    println!("orthonormality_error={:?}", model.orthonormality_error());
    println!("rejected_steps={},{},{}", report.rejected_theta, report.rejected_cross, report.rejected_uu);
    if !report.converged {
        println!("max_theta_residual={:?}", report.max_theta_residual);
        println!("max_w_residual={:?}", report.max_w_residual);
        eprintln!("warning: objective change did not fall below zeta={:?} within {} iterations", solver.zeta, solver.max_outer);
    }
    Ok(report.converged)
}

fn load_input(path: &Path, modality: Modality) -> Result<ModalityMatrix<f64>> {
    ModalityMatrix::new(matrix(path)?, modality)
}

fn cmd_predict(model: &Path, input: &Path, modality: Modality, output: Option<&Path>) -> Result<bool> {
    let model = load_model::<f64>(model)?;
    let x = load_input(input, modality)?;
    let labels = if x.samples() == 0 {
        Labels::new(Vec::new())?
    } else {
        predict_regression(&model, &prepare_input(&model, &x)?)?
    };
    match output {
        Some(p) => save_labels(p, &labels)?,
        None => {
            let mut s = String::new();
            for l in labels.as_slice() {
                let _ = writeln!(s, "{l}");
            }
            print!("{s}");
        }
    }
    Ok(true)
}

fn cmd_evaluate(pred: &Path, truth: &Path, confusion: Option<&Path>) -> Result<bool> {
    let (p, t) = (load_labels(pred)?, load_labels(truth)?);
    if p.len() != t.len() {
        return Err(Error::Dimension(format!(
            "{} has {} labels, {} has {}",
            pred.display(),
            p.len(),
            truth.display(),
            t.len()
        )));
    }
    let cm = ConfusionMatrix::from_labels(&t, &p, 0)?;
    print!("{}", metrics(&cm)?.to_text());
    if let Some(path) = confusion {
        write(path, &cm.to_csv())?;
    }
    Ok(true)
}

fn cmd_simulate(cli: &Cli) -> Result<bool> {
    let cfg = config(cli)?;
    let sim = cfg.simulation()?;
    let seed = cli.seed.or(cfg.get("model", "seed")?).unwrap_or(0);
    let dir = cfg
        .path_value("output", "dir")?
        .ok_or_else(|| Error::InvalidArgument(format!("{}: missing [output] dir", cfg.path().display())))?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let params = SyntheticParams {
        classes: sim.classes,
        n_per_class: sim.n_per_class + sim.n_unlabeled_per_class,
        d_h: sim.d_h,
        srf: sim.srf.clone(),
        sep: sim.sep,
        noise_std: sim.noise,
        seed: derive_seed(seed, Stream::Synthesis),
    };
    let data = gen_synthetic::<f64>(&params)?;
    // Samples cycle through the classes, so any prefix of whole rounds is balanced.
    let n = sim.classes * sim.n_per_class;
    let total = data.labels.len();
    let labeled: Vec<usize> = (0..n).collect();
    let unlabeled: Vec<usize> = (n..total).collect();
    save_matrix(&dir.join("xh.csv"), &data.xh.select(&labeled).values, MatrixFormat::Csv)?;
    save_matrix(&dir.join("xm.csv"), &data.xm.select(&labeled).values, MatrixFormat::Csv)?;
    save_labels(&dir.join("labels.txt"), &data.labels.select(&labeled))?;
    save_matrix(&dir.join("xu.csv"), &data.xm.select(&unlabeled).values, MatrixFormat::Csv)?;
    save_labels(&dir.join("xu_labels.txt"), &data.labels.select(&unlabeled))?;
    println!("wrote {n} labeled and {} unlabeled samples to {}", total - n, dir.display());
    Ok(true)
}

fn cmd_gridsearch(cli: &Cli) -> Result<bool> {
    let cfg = config(cli)?;
    let mut base = cfg.solver()?;
    if let Some(seed) = cli.seed {
        base.seed = seed;
    }
    let grid = cfg.grid()?;
    let t = load_training(&cfg, base.seed)?;
    let result = cross_validate(
        &t.xh,
        &t.xm,
        &t.labels,
        t.landmarks.as_ref(),
        &grid,
        t.variant,
        &cfg.graph()?,
        &base,
        cli.jobs,
    )?;
    let table = result.to_csv();
    match cfg.path_value("output", "scores")? {
        Some(path) => write(&path, &table)?,
        None => print!("{table}"),
    }
    let best = &result.best;
    println!("best.alpha={:?}", best.alpha);
    println!("best.beta={:?}", best.beta);
    println!("best.d={}", best.d);
    Ok(true)
}

fn cmd_export(
    model: &Path,
    input: &Path,
    modality: Modality,
    output: &Path,
    labels: Option<(&Path, &Path)>,
) -> Result<bool> {
    let model = load_model::<f64>(model)?;
    let x = load_input(input, modality)?;
    let features = project(&model, &prepare_input(&model, &x)?)?;
    save_matrix(output, &features, MatrixFormat::RawF64)?;
    if let Some((src, dst)) = labels {
        let l = load_labels(src)?;
        if l.len() != features.ncols() {
            return Err(Error::Dimension(format!(
                "{} labels for {} samples",
                l.len(),
                features.ncols()
            )));
        }
        save_labels(dst, &l)?;
    }
    Ok(true)
}
