//! Repeated train/test benchmarking over a list of datasets.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::settings::{List, Mode, Settings};
use crate::data::{load_dataset, normalize_features, stratified_split_indices, Dataset, Format};
use crate::error::{Error, Result};
use crate::multilevel::{predict_final, train_flat, train_multilevel, MultilevelConfig};

/// Share of each dataset held out for testing.
pub const TEST_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    pub format: Option<Format>,
}

/// Reads a dataset list: one `name path [format]` or bare `path` per line,
/// `#` comments. Relative paths are resolved against the list's directory.
pub fn read_dataset_list(path: &Path) -> Result<Vec<DatasetSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (name, file, format) = match toks.as_slice() {
            [p] => {
                let stem = Path::new(p).file_stem().and_then(|s| s.to_str()).unwrap_or(p);
                (stem.to_string(), *p, None)
            }
            [name, p] => (name.to_string(), *p, None),
            [name, p, f] => (name.to_string(), *p, Some(f.parse()?)),
            _ => {
                return Err(Error::Parse {
                    line: n + 1,
                    msg: format!("{}: expected `name path [format]`", path.display()),
                })
            }
        };
        let file = PathBuf::from(file);
        out.push(DatasetSpec {
            name,
            path: if file.is_relative() { base.join(file) } else { file },
            format,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub dataset: String,
    pub mode: &'static str,
    pub r: Option<usize>,
    pub rep: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    /// `ok` or the error message.
    pub status: String,
    pub acc: f64,
    pub sn: f64,
    pub sp: f64,
    pub kappa: f64,
    pub log2_c_plus: f64,
    pub log2_c_minus: f64,
    pub log2_gamma: f64,
    pub n_sv: usize,
    pub levels: usize,
    pub train_seconds: f64,
}

impl RawRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub dataset: String,
    pub mode: &'static str,
    pub r: Option<usize>,
    pub reps: usize,
    pub succeeded: usize,
    pub acc: f64,
    pub sn: f64,
    pub sp: f64,
    pub kappa: f64,
    pub kappa_sd: f64,
    pub train_seconds: f64,
}

fn failed_row(dataset: &str, mode: &'static str, r: Option<usize>, rep: usize, seed: u64, msg: String) -> RawRow {
    RawRow {
        dataset: dataset.to_string(),
        mode,
        r,
        rep,
        seed,
        n_train: 0,
        n_test: 0,
        status: msg,
        acc: f64::NAN,
        sn: f64::NAN,
        sp: f64::NAN,
        kappa: f64::NAN,
        log2_c_plus: f64::NAN,
        log2_c_minus: f64::NAN,
        log2_gamma: f64::NAN,
        n_sv: 0,
        levels: 0,
        train_seconds: f64::NAN,
    }
}

/// Runs configured by `(mode, R)`; a sweep runs only the multilevel mode.
fn variants(settings: &Settings, base: &MultilevelConfig) -> Vec<(&'static str, Option<usize>)> {
    if let Some(List(rs)) = &settings.sweep_r {
        return rs.iter().map(|&r| ("multilevel", Some(r))).collect();
    }
    let r = Some(base.coarsening.caliber);
    match settings.mode_or(Mode::Multilevel) {
        Mode::Multilevel => vec![("multilevel", r)],
        Mode::Flat => vec![("flat", None)],
        Mode::Both => vec![("multilevel", r), ("flat", None)],
    }
}

/// One split of one dataset: normalized train and test sets.
pub fn split_and_normalize(ds: &Dataset, seed: u64, settings: &Settings) -> Result<(Dataset, Dataset)> {
    let (tr, te) = stratified_split_indices(ds, TEST_FRACTION, seed)?;
    let (train, norm) = normalize_features(&ds.subset(&tr), settings.normalization())?;
    let test = norm.apply(&ds.subset(&te))?;
    Ok((train, test))
}

fn run_one(
    name: &str,
    train: &Dataset,
    test: &Dataset,
    mode: &'static str,
    r: Option<usize>,
    rep: usize,
    cfg: &MultilevelConfig,
) -> RawRow {
    let mut cfg = cfg.clone();
    if let Some(r) = r {
        cfg.coarsening.caliber = r;
    }
    let t = Instant::now();
    let out = if mode == "flat" {
        train_flat(train, &cfg)
    } else {
        train_multilevel(train, &cfg)
    };
    let seconds = t.elapsed().as_secs_f64();
    let result = out.and_then(|o| predict_final(&o.model, test).map(|m| (o, m)));
    match result {
        Ok((o, m)) => RawRow {
            dataset: name.to_string(),
            mode,
            r,
            rep,
            seed: cfg.seed,
            n_train: train.len(),
            n_test: test.len(),
            status: "ok".into(),
            acc: m.acc,
            sn: m.sn,
            sp: m.sp,
            kappa: m.kappa,
            log2_c_plus: o.params.c_plus.log2(),
            log2_c_minus: o.params.c_minus.log2(),
            log2_gamma: o.params.gamma.log2(),
            n_sv: o.model.n_sv(),
            levels: o.report.len(),
            train_seconds: seconds,
        },
        Err(e) => {
            log::error!("{name} {mode} rep {rep}: {e}");
            failed_row(name, mode, r, rep, cfg.seed, e.to_string())
        }
    }
}

/// Runs every dataset, repetition and variant. Repetition `r` uses seed
/// `seed + r` for both the split and the engine.
pub fn run_benchmark(
    datasets: &[DatasetSpec],
    settings: &Settings,
    mut on_row: impl FnMut(&RawRow),
) -> Result<Vec<RawRow>> {
    let base = settings.multilevel_config()?;
    let reps = settings.reps.unwrap_or(20);
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be at least 1".into()));
    }
    if let Some(List(rs)) = &settings.sweep_r {
        if let Some(r) = rs.iter().find(|r| !(1..=10).contains(*r)) {
            return Err(Error::InvalidInput(format!("R = {r} not in 1..=10")));
        }
    }
    let variants = variants(settings, &base);
    let mut rows = Vec::new();
    for spec in datasets {
        let format = spec.format.unwrap_or(settings.format_or_default());
        let ds = match settings
            .label_column_for(&spec.path, format)
            .and_then(|c| load_dataset(&spec.path, format, c))
        {
            Ok(ds) => ds,
            Err(e) => {
                log::error!("{}: {e}", spec.name);
                for rep in 0..reps {
                    for &(mode, r) in &variants {
                        let row = failed_row(&spec.name, mode, r, rep, base.seed.wrapping_add(rep as u64), e.to_string());
                        on_row(&row);
                        rows.push(row);
                    }
                }
                continue;
            }
        };
        for rep in 0..reps {
            let seed = base.seed.wrapping_add(rep as u64);
            let cfg = MultilevelConfig { seed, ..base.clone() };
            match split_and_normalize(&ds, seed, settings) {
                Ok((train, test)) => {
                    for &(mode, r) in &variants {
                        let row = run_one(&spec.name, &train, &test, mode, r, rep, &cfg);
                        on_row(&row);
                        rows.push(row);
                    }
                }
                Err(e) => {
                    for &(mode, r) in &variants {
                        let row = failed_row(&spec.name, mode, r, rep, seed, e.to_string());
                        on_row(&row);
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Means over successful repetitions per `(dataset, mode, R)`, in first-seen
/// order.
pub fn aggregate(rows: &[RawRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, &'static str, Option<usize>)> = Vec::new();
    for r in rows {
        let key = (r.dataset.clone(), r.mode, r.r);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(dataset, mode, r)| {
            let group: Vec<&RawRow> = rows
                .iter()
                .filter(|x| x.dataset == dataset && x.mode == mode && x.r == r)
                .collect();
            let ok: Vec<&RawRow> = group.iter().copied().filter(|x| x.ok()).collect();
            let mean = |f: fn(&RawRow) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|x| f(x)).sum::<f64>() / ok.len() as f64
                }
            };
            let kappa = mean(|x| x.kappa);
            let kappa_sd = if ok.len() > 1 {
                (ok.iter().map(|x| (x.kappa - kappa).powi(2)).sum::<f64>() / (ok.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            AggregateRow {
                dataset,
                mode,
                r,
                reps: group.len(),
                succeeded: ok.len(),
                acc: mean(|x| x.acc),
                sn: mean(|x| x.sn),
                sp: mean(|x| x.sp),
                kappa,
                kappa_sd,
                train_seconds: mean(|x| x.train_seconds),
            }
        })
        .collect()
}

fn opt(r: Option<usize>) -> String {
    r.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("writing CSV: {e}"))
}

pub const RAW_HEADER: [&str; 18] = [
    "dataset",
    "mode",
    "R",
    "rep",
    "seed",
    "n_train",
    "n_test",
    "status",
    "acc",
    "sn",
    "sp",
    "kappa",
    "log2Cplus",
    "log2Cminus",
    "log2gamma",
    "n_sv",
    "levels",
    "train_seconds",
];

pub fn write_raw(rows: &[RawRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RAW_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.mode.to_string(),
            opt(r.r),
            r.rep.to_string(),
            r.seed.to_string(),
            r.n_train.to_string(),
            r.n_test.to_string(),
            r.status.clone(),
            r.acc.to_string(),
            r.sn.to_string(),
            r.sp.to_string(),
            r.kappa.to_string(),
            r.log2_c_plus.to_string(),
            r.log2_c_minus.to_string(),
            r.log2_gamma.to_string(),
            r.n_sv.to_string(),
            r.levels.to_string(),
            format!("{:.6}", r.train_seconds),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Internal(e.to_string()))
}

pub fn write_aggregate(rows: &[AggregateRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset",
        "mode",
        "R",
        "reps",
        "succeeded",
        "acc",
        "sn",
        "sp",
        "kappa",
        "kappa_sd",
        "train_seconds",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.mode.to_string(),
            opt(r.r),
            r.reps.to_string(),
            r.succeeded.to_string(),
            r.acc.to_string(),
            r.sn.to_string(),
            r.sp.to_string(),
            r.kappa.to_string(),
            r.kappa_sd.to_string(),
            format!("{:.6}", r.train_seconds),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(dataset: &str, mode: &'static str, kappa: f64) -> RawRow {
        RawRow {
            status: "ok".into(),
            kappa,
            acc: 1.0,
            sn: 1.0,
            sp: 1.0,
            train_seconds: 1.0,
            ..failed_row(dataset, mode, None, 0, 0, String::new())
        }
    }

    #[test]
    fn aggregate_counts_and_means() {
        let mut rows = Vec::new();
        for d in ["a", "b"] {
            for m in ["multilevel", "flat"] {
                for rep in 0..20 {
                    rows.push(row(d, m, 0.5 + rep as f64 / 100.0));
                }
            }
        }
        assert_eq!(rows.len(), 80);
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 4);
        let expect = rows[..20].iter().map(|r| r.kappa).sum::<f64>() / 20.0;
        assert_eq!(agg[0].kappa, expect);
        assert_eq!(agg[0].reps, 20);
    }

    #[test]
    fn failures_are_excluded_from_means() {
        let mut rows = vec![row("a", "flat", 0.8)];
        rows.push(failed_row("a", "flat", None, 1, 1, "boom".into()));
        let agg = aggregate(&rows);
        assert_eq!((agg[0].reps, agg[0].succeeded, agg[0].kappa), (2, 1, 0.8));
    }

    #[test]
    fn dataset_list_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let list = dir.path().join("list.txt");
        std::fs::write(&list, "# sets\nring data/ring.svm\ntwo /abs/two.csv csv\nplain.svm\n").unwrap();
        let specs = read_dataset_list(&list).unwrap();
        assert_eq!(specs[0].path, dir.path().join("data/ring.svm"));
        assert_eq!(specs[1].path, PathBuf::from("/abs/two.csv"));
        assert_eq!(specs[1].format, Some(Format::Csv));
        assert_eq!(specs[2].name, "plain");
    }
}
