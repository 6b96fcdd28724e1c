//! Run settings shared by the subcommands: flags, `key = value` files and
//! compiled defaults, in that order of precedence.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

use crate::coarsening::CoarseEdges;
use crate::data::{csv_columns, Format, Normalization};
use crate::error::{Error, Result};
use crate::knn::{ApproxParams, KnnMode};
use crate::multilevel::MultilevelConfig;
use crate::tuning::{Rect, WeightRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Multilevel,
    Flat,
    Both,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multilevel" | "ml" => Ok(Mode::Multilevel),
            "flat" => Ok(Mode::Flat),
            "both" => Ok(Mode::Both),
            other => Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
        }
    }
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Multilevel => "multilevel",
            Mode::Flat => "flat",
            Mode::Both => "both",
        }
    }
}

/// `lo,hi` pair of reals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range(pub f64, pub f64);

impl FromStr for Range {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("expected `lo,hi`, got `{s}`"));
        let (a, b) = s.split_once(',').or_else(|| s.split_once(':')).ok_or_else(bad)?;
        let lo: f64 = a.trim().parse().map_err(|_| bad())?;
        let hi: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!("range `{s}` is empty")));
        }
        Ok(Range(lo, hi))
    }
}

/// Comma-separated list.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad list element `{t}` in `{s}`")))
            })
            .collect::<Result<Vec<T>>>()
            .map(List)
    }
}

fn parse_knn(s: &str) -> Result<KnnMode> {
    match s {
        "exact" => Ok(KnnMode::Exact),
        "approx" | "approximate" => Ok(KnnMode::Approximate(ApproxParams::default())),
        "auto" => Ok(KnnMode::Auto),
        other => Err(Error::InvalidInput(format!("unknown k-NN mode `{other}`"))),
    }
}

fn knn_name(m: KnnMode) -> &'static str {
    match m {
        KnnMode::Exact => "exact",
        KnnMode::Approximate(_) => "approx",
        KnnMode::Auto => "auto",
    }
}

fn parse_val<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidInput(format!("bad value `{v}` for `{key}`")))
}

fn value_parser<T>(s: &str) -> std::result::Result<T, String>
where
    T: FromStr<Err = Error>,
{
    s.parse().map_err(|e: Error| e.to_string())
}

/// Every field is optional so that flags can be layered over a file.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct Settings {
    /// Dataset file (for `benchmark`: a list of datasets).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// sparse | csv
    #[arg(long, value_parser = value_parser::<Format>)]
    pub format: Option<Format>,
    /// multilevel | flat | both
    #[arg(long, value_parser = value_parser::<Mode>)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Repetitions (benchmark).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Neighbors per point in the affinity graph.
    #[arg(long)]
    pub k: Option<usize>,
    /// Coupling threshold for seed selection.
    #[arg(long = "Q")]
    pub q: Option<f64>,
    /// Future-volume outlier factor.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Interpolation order.
    #[arg(long = "R")]
    pub r: Option<usize>,
    #[arg(long)]
    pub stop_size: Option<usize>,
    #[arg(long)]
    pub max_levels: Option<usize>,
    /// Training-set size below which levels are re-tuned.
    #[arg(long)]
    pub qdt: Option<usize>,
    /// log2 C search range, `lo,hi`.
    #[arg(long, allow_hyphen_values = true, value_parser = value_parser::<Range>)]
    pub ud_c_range: Option<Range>,
    /// log2 gamma search range, `lo,hi`.
    #[arg(long, allow_hyphen_values = true, value_parser = value_parser::<Range>)]
    pub ud_g_range: Option<Range>,
    #[arg(long)]
    pub ud_stage1_runs: Option<usize>,
    #[arg(long)]
    pub ud_stage2_runs: Option<usize>,
    /// Fixed C+/C- ratio instead of the class-size ratio.
    #[arg(long)]
    pub weight_ratio: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Solver KKT tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Kernel row cache budget in MiB.
    #[arg(long)]
    pub cache_mb: Option<usize>,
    /// knn | algebraic
    #[arg(long, value_parser = value_parser::<CoarseEdges>)]
    pub coarse_edges: Option<CoarseEdges>,
    /// exact | approx | auto
    #[arg(long, value_parser = parse_knn_arg)]
    pub knn: Option<KnnMode>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub neighbor_expand: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub volume_weighting: Option<bool>,
    /// 0-based CSV label column; the last column when absent.
    #[arg(long)]
    pub label_column: Option<usize>,
    /// Hold-out share for per-level reporting.
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// none | minmax | zscore
    #[arg(long, value_parser = value_parser::<Normalization>)]
    pub normalize: Option<Normalization>,
    /// Interpolation orders to sweep (benchmark), e.g. `1,2,4`.
    #[arg(long = "sweep-R", value_parser = value_parser::<List<usize>>)]
    pub sweep_r: Option<List<usize>>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_knn_arg(s: &str) -> std::result::Result<KnnMode, String> {
    parse_knn(s).map_err(|e| e.to_string())
}

impl Settings {
    /// Sets one field from its flag name (`-` or `_` separated).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('_', "-").as_str() {
            "data" => self.data = Some(PathBuf::from(v)),
            "format" => self.format = Some(v.parse()?),
            "mode" => self.mode = Some(v.parse()?),
            "seed" => self.seed = Some(parse_val(key, v)?),
            "reps" => self.reps = Some(parse_val(key, v)?),
            "k" => self.k = Some(parse_val(key, v)?),
            "Q" | "q" => self.q = Some(parse_val(key, v)?),
            "eta" => self.eta = Some(parse_val(key, v)?),
            "R" | "r" | "caliber" => self.r = Some(parse_val(key, v)?),
            "stop-size" => self.stop_size = Some(parse_val(key, v)?),
            "max-levels" => self.max_levels = Some(parse_val(key, v)?),
            "qdt" => self.qdt = Some(parse_val(key, v)?),
            "ud-c-range" => self.ud_c_range = Some(v.parse()?),
            "ud-g-range" => self.ud_g_range = Some(v.parse()?),
            "ud-stage1-runs" => self.ud_stage1_runs = Some(parse_val(key, v)?),
            "ud-stage2-runs" => self.ud_stage2_runs = Some(parse_val(key, v)?),
            "weight-ratio" => self.weight_ratio = Some(parse_val(key, v)?),
            "folds" => self.folds = Some(parse_val(key, v)?),
            "tol" => self.tol = Some(parse_val(key, v)?),
            "cache-mb" => self.cache_mb = Some(parse_val(key, v)?),
            "coarse-edges" => self.coarse_edges = Some(v.parse()?),
            "knn" => self.knn = Some(parse_knn(v)?),
            "neighbor-expand" => self.neighbor_expand = Some(parse_val(key, v)?),
            "volume-weighting" => self.volume_weighting = Some(parse_val(key, v)?),
            "label-column" => self.label_column = Some(parse_val(key, v)?),
            "validation-fraction" => self.validation_fraction = Some(parse_val(key, v)?),
            "normalize" => self.normalize = Some(v.parse()?),
            "sweep-R" | "sweep-r" => self.sweep_r = Some(v.parse()?),
            "out" => self.out = Some(PathBuf::from(v)),
            other => return Err(Error::InvalidInput(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_file_contents(text: &str) -> Result<Settings> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            s.set(k, v).map_err(|e| Error::Parse {
                line: n + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(s)
    }

    /// Reads a settings file; relative `data` and `out` paths are taken
    /// relative to the file.
    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Settings::parse_file_contents(&text).map_err(|e| match e {
            Error::Parse { line, msg } => Error::Parse {
                line,
                msg: format!("{}: {msg}", path.display()),
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut s.data, &mut s.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(s)
    }

    /// Fields of `self` win; missing ones come from `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),*) => {
                Settings { $($f: self.$f.or(lower.$f)),* }
            };
        }
        pick!(
            data,
            format,
            mode,
            seed,
            reps,
            k,
            q,
            eta,
            r,
            stop_size,
            max_levels,
            qdt,
            ud_c_range,
            ud_g_range,
            ud_stage1_runs,
            ud_stage2_runs,
            weight_ratio,
            folds,
            tol,
            cache_mb,
            coarse_edges,
            knn,
            neighbor_expand,
            volume_weighting,
            label_column,
            validation_fraction,
            normalize,
            sweep_r,
            out
        )
    }

    pub fn format_or_default(&self) -> Format {
        self.format.unwrap_or(Format::SparseText)
    }

    pub fn mode_or(&self, default: Mode) -> Mode {
        self.mode.unwrap_or(default)
    }

    /// Label column for `format`: the setting, else the last CSV column.
    pub fn label_column_for(&self, path: &Path, format: Format) -> Result<Option<usize>> {
        match format {
            Format::SparseText => Ok(None),
            Format::Csv => match self.label_column {
                Some(c) => Ok(Some(c)),
                None => Ok(Some(csv_columns(path)?.saturating_sub(1))),
            },
        }
    }

    pub fn normalization(&self) -> Normalization {
        self.normalize.unwrap_or_default()
    }

    /// Engine configuration with defaults filled in.
    pub fn multilevel_config(&self) -> Result<MultilevelConfig> {
        let mut cfg = MultilevelConfig::default();
        let c = &mut cfg.coarsening;
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.q {
            c.q = v;
        }
        if let Some(v) = self.eta {
            c.eta = v;
        }
        if let Some(v) = self.r {
            if !(1..=10).contains(&v) {
                return Err(Error::InvalidInput(format!("R = {v} not in 1..=10")));
            }
            c.caliber = v;
        }
        if let Some(v) = self.stop_size {
            c.stop_size = v;
        }
        if let Some(v) = self.max_levels {
            c.max_levels = v;
        }
        if let Some(v) = self.coarse_edges {
            c.coarse_edges = v;
        }
        if let Some(v) = self.knn {
            c.knn_mode = v;
        }
        if let Some(v) = self.qdt {
            cfg.q_dt = v;
        }
        if let Some(Range(lo, hi)) = self.ud_c_range {
            cfg.ud.rect.log2_c = (lo, hi);
        }
        if let Some(Range(lo, hi)) = self.ud_g_range {
            cfg.ud.rect.log2_gamma = (lo, hi);
        }
        if let Some(v) = self.ud_stage1_runs {
            cfg.ud.stage1_runs = v;
        }
        if let Some(v) = self.ud_stage2_runs {
            cfg.ud.stage2_runs = v;
        }
        if let Some(r) = self.weight_ratio {
            cfg.ud.weight_rule = WeightRule::Fixed(r);
        }
        if let Some(v) = self.folds {
            cfg.folds = v;
        }
        if let Some(v) = self.tol {
            cfg.solver.tol = v;
        }
        if let Some(v) = self.cache_mb {
            cfg.solver.cache_bytes = v << 20;
        }
        if let Some(v) = self.neighbor_expand {
            cfg.neighbor_expand = v;
        }
        if let Some(v) = self.volume_weighting {
            cfg.volume_weighting = v;
        }
        if let Some(v) = self.validation_fraction {
            cfg.validation_fraction = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if cfg.q_dt < cfg.coarsening.stop_size && self.qdt.is_none() {
            // a large stop size drags the default threshold along
            cfg.q_dt = cfg.coarsening.stop_size;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolved settings as `key = value` lines, readable by
    /// [`Settings::parse_file_contents`].
    pub fn provenance(&self, cfg: &MultilevelConfig) -> String {
        let c = &cfg.coarsening;
        let mut lines = Vec::new();
        let mut push = |k: &str, v: String| lines.push(format!("{k} = {v}"));
        if let Some(d) = &self.data {
            push("data", d.display().to_string());
        }
        push(
            "format",
            match self.format_or_default() {
                Format::SparseText => "sparse",
                Format::Csv => "csv",
            }
            .into(),
        );
        if let Some(m) = self.mode {
            push("mode", m.name().into());
        }
        push("seed", cfg.seed.to_string());
        if let Some(r) = self.reps {
            push("reps", r.to_string());
        }
        push("k", c.k.to_string());
        push("Q", c.q.to_string());
        push("eta", c.eta.to_string());
        push("R", c.caliber.to_string());
        push("stop-size", c.stop_size.to_string());
        push("max-levels", c.max_levels.to_string());
        push("qdt", cfg.q_dt.to_string());
        let Rect { log2_c, log2_gamma } = cfg.ud.rect;
        push("ud-c-range", format!("{},{}", log2_c.0, log2_c.1));
        push("ud-g-range", format!("{},{}", log2_gamma.0, log2_gamma.1));
        push("ud-stage1-runs", cfg.ud.stage1_runs.to_string());
        push("ud-stage2-runs", cfg.ud.stage2_runs.to_string());
        if let WeightRule::Fixed(r) = cfg.ud.weight_rule {
            push("weight-ratio", r.to_string());
        }
        push("folds", cfg.folds.to_string());
        push("tol", cfg.solver.tol.to_string());
        push("cache-mb", (cfg.solver.cache_bytes >> 20).to_string());
        push(
            "coarse-edges",
            match c.coarse_edges {
                CoarseEdges::Knn => "knn",
                CoarseEdges::Algebraic => "algebraic",
            }
            .into(),
        );
        push("knn", knn_name(c.knn_mode).into());
        push("neighbor-expand", cfg.neighbor_expand.to_string());
        push("volume-weighting", cfg.volume_weighting.to_string());
        if let Some(c) = self.label_column {
            push("label-column", c.to_string());
        }
        push("validation-fraction", cfg.validation_fraction.to_string());
        push(
            "normalize",
            match self.normalization() {
                Normalization::None => "none",
                Normalization::MinMax => "minmax",
                Normalization::ZScore => "zscore",
            }
            .into(),
        );
        if let Some(List(rs)) = &self.sweep_r {
            push(
                "sweep-R",
                rs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
            );
        }
        lines.join("\n") + "\n"
    }
}
