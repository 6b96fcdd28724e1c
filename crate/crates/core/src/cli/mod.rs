//! Command-line front end: `train`, `predict` and `benchmark`.

pub mod benchmark;
pub mod settings;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use settings::{Mode, Settings};

use crate::data::{csv_columns, load_dataset, load_samples, normalize_features, Format, NormalizationParams};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, Metrics};
use crate::multilevel::{train_flat, train_multilevel, write_level_report};
use crate::svm::TrainedModel;

#[derive(Parser, Debug)]
#[command(name = "amgsvm", version, about = "Multilevel weighted SVM training for imbalanced data")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a model and write it with a per-level report.
    Train(RunArgs),
    /// Apply a model to a data file.
    Predict(PredictArgs),
    /// Repeated 80/20 evaluation over a list of datasets.
    Benchmark(RunArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// `key = value` settings file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<Settings> {
        let file = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        Ok(self.settings.clone().over(file))
    }
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// sparse | csv
    #[arg(long, default_value = "sparse")]
    pub format: String,
    /// 0-based CSV label column. Without it a CSV with one column more
    /// than the model has its last column taken as the label.
    #[arg(long)]
    pub label_column: Option<usize>,
    /// Prediction file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match &error {
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
            Error::InvalidInput(_) => 2,
            _ => 1,
        };
        Failure { code, error }
    }
}

/// Model file: the model text followed by the input normalization.
pub fn write_model_file(path: &Path, model: &TrainedModel, norm: &NormalizationParams) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    model.write(&mut w).map_err(io)?;
    writeln!(w, "normalization {}", norm.offsets.len()).map_err(io)?;
    for (name, vals) in [("offsets", &norm.offsets), ("scales", &norm.scales)] {
        write!(w, "{name}").map_err(io)?;
        for v in vals {
            write!(w, " {v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_model_file(path: &Path) -> Result<(TrainedModel, NormalizationParams)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let model = TrainedModel::read(&mut reader)?;
    let mut rest = String::new();
    for line in reader.lines() {
        rest.push_str(&line.map_err(|e| Error::io(path, e))?);
        rest.push('\n');
    }
    let corrupt = |msg: &str| Error::Parse {
        line: 0,
        msg: format!("{}: {msg}", path.display()),
    };
    let mut lines = rest.lines();
    let d = model.n_features;
    match lines.next().and_then(|l| l.strip_prefix("normalization ")) {
        None => return Ok((model, NormalizationParams::identity(d))),
        Some(n) if n.trim().parse::<usize>().ok() == Some(d) => {}
        Some(_) => return Err(corrupt("normalization size does not match the model")),
    }
    let mut read_vec = |name: &str| -> Result<Vec<f64>> {
        let line = lines.next().ok_or_else(|| corrupt("truncated normalization"))?;
        let mut toks = line.split_whitespace();
        if toks.next() != Some(name) {
            return Err(corrupt(&format!("expected `{name}`")));
        }
        let v = toks
            .map(|t| t.parse::<f64>().map_err(|_| corrupt(&format!("bad number `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != d {
            return Err(corrupt(&format!("`{name}` has {} values for {d} features", v.len())));
        }
        Ok(v)
    };
    let offsets = read_vec("offsets")?;
    let scales = read_vec("scales")?;
    Ok((model, NormalizationParams { offsets, scales }))
}

fn format_of(s: &Settings) -> Format {
    s.format_or_default()
}

fn print_metrics(mut out: impl Write, label: &str, m: &Metrics) -> std::io::Result<()> {
    writeln!(
        out,
        "{label}: acc={:.4} sn={:.4} sp={:.4} kappa={:.4} (tp={} tn={} fp={} fn={})",
        m.acc, m.sn, m.sp, m.kappa, m.tp, m.tn, m.fp, m.fn_
    )
}

pub fn cmd_train(args: &RunArgs) -> std::result::Result<(), Failure> {
    let s = args.resolve()?;
    let data = s
        .data
        .clone()
        .ok_or_else(|| Error::InvalidInput("--data is required".into()))?;
    let cfg = s.multilevel_config()?;
    let format = format_of(&s);
    let raw = load_dataset(&data, format, s.label_column_for(&data, format)?)?;
    let (train, norm) = normalize_features(&raw, s.normalization())?;
    let out_dir = s.out.clone().unwrap_or_else(|| PathBuf::from("amgsvm-out"));
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let mode = s.mode_or(Mode::Multilevel);
    let output = match mode {
        Mode::Multilevel => train_multilevel(&train, &cfg)?,
        Mode::Flat => train_flat(&train, &cfg)?,
        Mode::Both => return Err(Error::InvalidInput("train takes --mode multilevel or flat".into()).into()),
    };

    write_model_file(&out_dir.join("model.txt"), &output.model, &norm)?;
    let report_path = out_dir.join("levels.csv");
    let file = File::create(&report_path).map_err(|e| Error::io(&report_path, e))?;
    write_level_report(&output.report, BufWriter::new(file))?;
    let cfg_path = out_dir.join("config.txt");
    let mut provenance = s.clone();
    provenance.mode = Some(mode);
    std::fs::write(&cfg_path, provenance.provenance(&cfg)).map_err(|e| Error::io(&cfg_path, e))?;

    let stdout = std::io::stdout();
    let mut o = stdout.lock();
    let p = output.params;
    let _ = writeln!(
        o,
        "trained {} model: {} support vectors, log2C+={:.3} log2C-={:.3} log2gamma={:.3}, {} levels",
        mode.name(),
        output.model.n_sv(),
        p.c_plus.log2(),
        p.c_minus.log2(),
        p.gamma.log2(),
        output.report.len()
    );
    if let Some(m) = &output.validation {
        let _ = print_metrics(&mut o, "validation", m);
    }
    let _ = writeln!(o, "wrote {}", out_dir.display());
    Ok(())
}

pub fn cmd_predict(args: &PredictArgs) -> std::result::Result<(), Failure> {
    let format: Format = args.format.parse()?;
    let (model, norm) = read_model_file(&args.model).map_err(|e| match e {
        Error::Parse { .. } | Error::Domain(_) | Error::InvalidInput(_) => Failure { code: 3, error: e },
        other => other.into(),
    })?;
    let d = model.n_features;
    let label_column = match (format, args.label_column) {
        (Format::Csv, None) => {
            let w = csv_columns(&args.data)?;
            (w == d + 1).then_some(d)
        }
        (Format::Csv, c) => c,
        (Format::SparseText, _) => None,
    };
    let mut samples = load_samples(&args.data, format, label_column)?;
    if samples.n_features > d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: samples.n_features,
        }
        .into());
    }
    let n = samples.len();
    if samples.n_features < d {
        // sparse files omit trailing zero features
        let mut padded = vec![0.0; n * d];
        for i in 0..n {
            padded[i * d..i * d + samples.n_features].copy_from_slice(samples.row(i));
        }
        samples.points = padded;
        samples.n_features = d;
    }
    norm.apply_points(&mut samples.points);
    let pred = model.predict_rows(&samples.points, d)?;

    let write_preds = |mut w: Box<dyn Write>| -> std::io::Result<()> {
        for p in &pred {
            writeln!(w, "{}", if *p > 0 { "+1" } else { "-1" })?;
        }
        w.flush()
    };
    match &args.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| Error::io(path, e))?;
            write_preds(Box::new(BufWriter::new(f))).map_err(|e| Error::io(path, e))?;
        }
        None => write_preds(Box::new(std::io::stdout().lock())).map_err(|e| Error::io("<stdout>", e))?,
    }
    if let Some(labels) = &samples.labels {
        let m = compute_metrics(&pred, labels)?;
        if args.out.is_some() {
            let _ = print_metrics(std::io::stdout().lock(), "test", &m);
        } else {
            let _ = print_metrics(std::io::stderr().lock(), "test", &m);
        }
    }
    Ok(())
}

pub fn cmd_benchmark(args: &RunArgs) -> std::result::Result<(), Failure> {
    let s = args.resolve()?;
    let list = s
        .data
        .clone()
        .ok_or_else(|| Error::InvalidInput("--data (dataset list) is required".into()))?;
    let cfg = s.multilevel_config()?;
    let specs = benchmark::read_dataset_list(&list)?;
    let out_dir = s.out.clone().unwrap_or_else(|| PathBuf::from("amgsvm-bench"));
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let cfg_path = out_dir.join("config.txt");
    std::fs::write(&cfg_path, s.provenance(&cfg)).map_err(|e| Error::io(&cfg_path, e))?;

    let rows = benchmark::run_benchmark(&specs, &s, |r| {
        log::info!(
            "{} {} R={} rep {}: kappa={:.4} {:.2}s {}",
            r.dataset,
            r.mode,
            r.r.map(|v| v.to_string()).unwrap_or_default(),
            r.rep,
            r.kappa,
            r.train_seconds,
            r.status
        );
    })?;
    let raw_path = out_dir.join("raw.csv");
    let f = File::create(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    benchmark::write_raw(&rows, BufWriter::new(f))?;
    let agg = benchmark::aggregate(&rows);
    let agg_path = out_dir.join("aggregate.csv");
    let f = File::create(&agg_path).map_err(|e| Error::io(&agg_path, e))?;
    benchmark::write_aggregate(&agg, BufWriter::new(f))?;

    let mut o = std::io::stdout().lock();
    let _ = writeln!(
        o,
        "{:<14} {:<10} {:>3} {:>5} {:>7} {:>7} {:>7} {:>7} {:>10}",
        "dataset", "mode", "R", "ok", "acc", "sn", "sp", "kappa", "seconds"
    );
    for a in &agg {
        let _ = writeln!(
            o,
            "{:<14} {:<10} {:>3} {:>2}/{:<2} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>10.3}",
            a.dataset,
            a.mode,
            a.r.map(|v| v.to_string()).unwrap_or_default(),
            a.succeeded,
            a.reps,
            a.acc,
            a.sn,
            a.sp,
            a.kappa,
            a.train_seconds
        );
    }
    let _ = writeln!(o, "wrote {}", out_dir.display());
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}
