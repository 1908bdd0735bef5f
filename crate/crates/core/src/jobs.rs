//! Batch jobs behind the `cfaug` binary: JSON job configs, command-line
//! overrides, and the output files of `run` and `analyze`.
//!
//! Every output file starts with the resolved config (as a `#` comment in
//! CSV, an HTML comment in markdown, a `config` field in JSON). Files are
//! rendered in memory, written to a staging directory next to the output
//! directory and then renamed into place, so a failed job leaves no
//! partial results behind.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{quality_study, R2Mode, StudyConfig, StudyResult};
use crate::classifier::{Regime, DEFAULT_GRAD_TOL, DEFAULT_MAX_ITER};
use crate::embedset::{load_bundle, load_split, DatasetBundle};
use crate::error::{Error, Result};
use crate::protocol::{run_experiment, ExperimentResult, ExperimentSpec, MeanStd, Variant, DEFAULT_EXPERIMENT};
use crate::transforms::TransformKind;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "CFAUG_OUT";
const FALLBACK_OUT: &str = "cfaug-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

const ALL_FORMATS: [Format; 3] = [Format::Csv, Format::Json, Format::Markdown];

/// Either a seed count (`50` means `0..50`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

fn parse_named<T: Copy + std::fmt::Debug>(s: &str, all: &[T], label: impl Fn(T) -> &'static str, what: &str) -> Result<T> {
    let key = normalize(s);
    all.iter()
        .copied()
        .find(|&v| normalize(&format!("{v:?}")) == key || normalize(label(v)) == key)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown {what} {s:?}")))
}

/// Accepts `MeanOffset`, `mean-offset`, `"Mean Offset"` and similar.
pub fn parse_variant(s: &str) -> Result<Variant> {
    parse_named(s, &Variant::ALL, Variant::label, "variant")
}

pub fn parse_method(s: &str) -> Result<TransformKind> {
    let all = [
        TransformKind::MeanOffset,
        TransformKind::MeanOffsetRegression,
        TransformKind::RandomOffset,
        TransformKind::MeanIdOffset,
        TransformKind::DirectLinear,
    ];
    parse_named(s, &all, TransformKind::name, "method")
}

pub fn parse_regime(s: &str) -> Result<Regime> {
    parse_named(s, &[Regime::Free, Regime::Strong], |r| if r == Regime::Free { "free" } else { "strong" }, "regime")
}

pub fn parse_format(s: &str) -> Result<Format> {
    parse_named(
        s,
        &ALL_FORMATS,
        |f| match f {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Markdown => "md",
        },
        "format",
    )
}

/// `50` (count), `3..7` (half-open range) or `1,5,9` (list).
pub fn parse_seeds(s: &str) -> Result<Seeds> {
    let bad = || Error::InvalidConfig(format!("cannot parse seeds {s:?}"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once("..") {
        return Ok(Seeds::List((num(a)?..num(b)?).collect()));
    }
    if s.contains(',') {
        return Ok(Seeds::List(s.split(',').map(num).collect::<Result<_>>()?));
    }
    Ok(Seeds::Count(num(s)?))
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub bundle: Option<PathBuf>,
    /// Variant names for `run`, method names for `analyze`.
    pub variants: Vec<String>,
    pub k: Vec<usize>,
    pub seeds: Option<Seeds>,
    pub regime: Option<Regime>,
    pub out: Option<PathBuf>,
    pub formats: Vec<Format>,
    /// Used when neither the flag nor the config names an output directory.
    pub default_out: Option<PathBuf>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn pick_out(o: &Overrides, cfg: Option<PathBuf>) -> PathBuf {
    o.out
        .clone()
        .or(cfg)
        .or_else(|| o.default_out.clone())
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT))
}

fn pick_formats(o: &Overrides, cfg: Vec<Format>) -> Vec<Format> {
    let mut f = if !o.formats.is_empty() {
        o.formats.clone()
    } else if !cfg.is_empty() {
        cfg
    } else {
        ALL_FORMATS.to_vec()
    };
    f.sort_unstable();
    f.dedup();
    f
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    let mut s = seeds.to_vec();
    s.sort_unstable();
    if s.is_empty() || s.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig("seeds must be a non-empty list of distinct values".into()));
    }
    Ok(())
}

/// The `run` job config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub bundle: Option<PathBuf>,
    #[serde(default)]
    pub variants: Vec<Variant>,
    /// Originals per seed; defaults to all of `id_train`.
    pub n: Option<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    pub seeds: Option<Seeds>,
    /// Forces one regime on every variant.
    pub regime: Option<Regime>,
    /// Per-variant regimes, applied after `regime`.
    #[serde(default)]
    pub regime_overrides: BTreeMap<Variant, Regime>,
    pub grid: Option<Vec<f64>>,
    pub folds: Option<usize>,
    pub max_iter: Option<usize>,
    pub grad_tol: Option<f64>,
    pub extra_originals: Option<usize>,
    pub experiment: Option<String>,
    /// EMB1 file (with sidecar) used by `ExternalAugmentation`.
    pub external_split: Option<PathBuf>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub formats: Vec<Format>,
}

/// A [`RunConfig`] with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRun {
    pub bundle: PathBuf,
    pub variants: Vec<Variant>,
    pub n: Option<usize>,
    pub k: Vec<usize>,
    pub seeds: Vec<u64>,
    pub regimes: BTreeMap<Variant, Regime>,
    pub grid: Option<Vec<f64>>,
    pub folds: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub extra_originals: Option<usize>,
    pub experiment: String,
    pub external_split: Option<PathBuf>,
    #[serde(skip)]
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn resolve(self, o: &Overrides) -> Result<ResolvedRun> {
        let bundle = o
            .bundle
            .clone()
            .or(self.bundle)
            .ok_or_else(|| Error::InvalidConfig("no bundle given".into()))?;
        let variants = if !o.variants.is_empty() {
            o.variants.iter().map(|s| parse_variant(s)).collect::<Result<Vec<_>>>()?
        } else if !self.variants.is_empty() {
            self.variants
        } else {
            Variant::ALL
                .into_iter()
                .filter(|&v| v != Variant::ExternalAugmentation || self.external_split.is_some())
                .collect()
        };
        let k = if !o.k.is_empty() {
            o.k.clone()
        } else if !self.k.is_empty() {
            self.k
        } else {
            vec![16]
        };
        let seeds = o.seeds.clone().or(self.seeds).unwrap_or(Seeds::Count(50)).to_vec();
        check_seeds(&seeds)?;
        let forced = o.regime.or(self.regime);
        let regimes = variants
            .iter()
            .map(|&v| {
                let r = self.regime_overrides.get(&v).copied();
                (v, o.regime.or(r).or(forced).unwrap_or(v.default_regime()))
            })
            .collect();
        let folds = self.folds.unwrap_or(4);
        if folds < 2 {
            return Err(Error::InvalidConfig(format!("folds = {folds}, need at least 2")));
        }
        if let Some(g) = &self.grid {
            if g.is_empty() || g.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(Error::InvalidConfig("grid must hold positive finite values".into()));
            }
        }
        Ok(ResolvedRun {
            bundle,
            variants,
            n: self.n,
            k,
            seeds,
            regimes,
            grid: self.grid,
            folds,
            max_iter: self.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            grad_tol: self.grad_tol.unwrap_or(DEFAULT_GRAD_TOL),
            extra_originals: self.extra_originals,
            experiment: self.experiment.unwrap_or_else(|| DEFAULT_EXPERIMENT.to_string()),
            external_split: self.external_split,
            out: pick_out(o, self.out),
            formats: pick_formats(o, self.formats),
        })
    }
}

/// One `(variant, k)` cell of a run job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCell {
    pub variant: Variant,
    pub k: usize,
    pub regime: Regime,
    pub result: ExperimentResult,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ResolvedRun,
    pub cells: Vec<RunCell>,
    pub files: Vec<PathBuf>,
}

impl ResolvedRun {
    fn specs(&self, bundle: &DatasetBundle) -> Result<Vec<ExperimentSpec>> {
        let n = self.n.unwrap_or(bundle.id_train().len());
        let external = match &self.external_split {
            Some(p) => Some(Arc::new(load_split(p)?)),
            None => None,
        };
        let mut specs = Vec::new();
        for &variant in &self.variants {
            for &k in &self.k {
                let mut s = ExperimentSpec::new(variant, n, k);
                s.seeds = self.seeds.clone();
                s.regime = self.regimes[&variant];
                s.grid = self.grid.clone();
                s.folds = self.folds;
                s.max_iter = self.max_iter;
                s.grad_tol = self.grad_tol;
                s.extra_originals = self.extra_originals;
                s.experiment = self.experiment.clone();
                s.external_split = external.clone();
                s.validate(bundle)?;
                if variant == Variant::ExternalAugmentation && external.is_none() {
                    return Err(Error::MissingExternalSplit);
                }
                specs.push(s);
            }
        }
        if bundle.ood_sets().is_empty() {
            return Err(Error::NoOodSets);
        }
        Ok(specs)
    }
}

/// Validates every cell, runs them all, then writes the requested files.
pub fn run_job(cfg: &ResolvedRun) -> Result<RunReport> {
    let bundle = load_bundle(&cfg.bundle)?;
    let specs = cfg.specs(&bundle)?;
    let mut config = cfg.clone();
    config.n = Some(specs.first().map_or(bundle.id_train().len(), |s| s.n));
    let cells = specs
        .iter()
        .map(|s| {
            Ok(RunCell {
                variant: s.variant,
                k: s.k,
                regime: s.regime,
                result: run_experiment(&bundle, s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rendered = render_run(&config, &cells);
    let files = write_atomically(&cfg.out, &rendered)?;
    Ok(RunReport { config, cells, files })
}

fn compact<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("job outputs serialize")
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("job outputs serialize");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(header_comment: &str, header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = format!("# {header_comment}\n").into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    out.extend(w.into_inner().expect("in-memory csv"));
    out
}

fn pct(m: &MeanStd) -> String {
    format!("{:.1} ± {:.1}", 100.0 * m.mean, 100.0 * m.std)
}

fn seed_list(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(", ")
}

fn render_run(cfg: &ResolvedRun, cells: &[RunCell]) -> Vec<(String, Vec<u8>)> {
    let comment = format!("cfaug run config: {}", compact(cfg));
    let mut files = Vec::new();
    if cfg.formats.contains(&Format::Csv) {
        let ood: Vec<String> = cells
            .first()
            .and_then(|c| c.result.runs.first())
            .map(|r| r.accuracy_ood.keys().cloned().collect())
            .unwrap_or_default();
        let mut header: Vec<String> = ["variant", "k", "regime", "seed", "lambda", "converged", "train_size", "acc_id", "acc_cad"]
            .map(String::from)
            .to_vec();
        header.extend(ood.iter().map(|n| format!("acc_ood_{n}")));
        header.extend(["acc_ood_mean", "acc_avg"].map(String::from));
        let mut rows = Vec::new();
        for c in cells {
            for r in &c.result.runs {
                let mut row = vec![
                    format!("{:?}", c.variant),
                    c.k.to_string(),
                    format!("{:?}", c.regime),
                    r.seed.to_string(),
                    r.lambda.to_string(),
                    r.converged.to_string(),
                    r.train_size.to_string(),
                    r.accuracy_id.to_string(),
                    r.accuracy_cad.to_string(),
                ];
                row.extend(ood.iter().map(|n| r.accuracy_ood[n].to_string()));
                row.push(r.accuracy_ood_mean.to_string());
                row.push(r.accuracy_avg.to_string());
                rows.push(row);
            }
        }
        files.push(("runs.csv".into(), csv_bytes(&comment, &header, &rows)));

        let header: Vec<String> = [
            "variant", "k", "id_mean", "id_std", "cad_mean", "cad_std", "ood_mean", "ood_std", "avg_mean", "avg_std",
        ]
        .map(String::from)
        .to_vec();
        let rows: Vec<Vec<String>> = cells
            .iter()
            .map(|c| {
                let a = &c.result.aggregate;
                let mut row = vec![format!("{:?}", c.variant), c.k.to_string()];
                for m in [&a.id, &a.cad, &a.ood_mean, &a.avg] {
                    row.push(m.mean.to_string());
                    row.push(m.std.to_string());
                }
                row
            })
            .collect();
        files.push(("sweep.csv".into(), csv_bytes(&comment, &header, &rows)));
    }
    if cfg.formats.contains(&Format::Json) {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            config: &'a ResolvedRun,
            cells: Vec<T>,
        }
        #[derive(Serialize)]
        struct Agg<'a> {
            variant: Variant,
            k: usize,
            regime: Regime,
            aggregate: &'a crate::protocol::AggregateResult,
        }
        let runs = Doc { config: cfg, cells: cells.iter().collect() };
        let aggs = Doc {
            config: cfg,
            cells: cells
                .iter()
                .map(|c| Agg {
                    variant: c.variant,
                    k: c.k,
                    regime: c.regime,
                    aggregate: &c.result.aggregate,
                })
                .collect(),
        };
        files.push(("runs.json".into(), pretty(&runs)));
        files.push(("aggregate.json".into(), pretty(&aggs)));
    }
    if cfg.formats.contains(&Format::Markdown) {
        let mut s = format!("<!-- {comment} -->\n\n");
        let _ = writeln!(
            s,
            "Accuracy (%) as mean ± sample std over {} seeds ({}).",
            cfg.seeds.len(),
            seed_list(&cfg.seeds)
        );
        for &k in &cfg.k {
            let _ = writeln!(s, "\n## k = {k}, n = {}\n", cfg.n.unwrap_or(0));
            s.push_str("| Model | Regime | Orig. | CAD | OOD | Avg |\n|---|---|---:|---:|---:|---:|\n");
            for c in cells.iter().filter(|c| c.k == k) {
                let a = &c.result.aggregate;
                let _ = writeln!(
                    s,
                    "| {} | {:?} | {} | {} | {} | {} |",
                    c.variant.label(),
                    c.regime,
                    pct(&a.id),
                    pct(&a.cad),
                    pct(&a.ood_mean),
                    pct(&a.avg)
                );
            }
        }
        files.push(("aggregate.md".into(), s.into_bytes()));
    }
    files
}

/// The `analyze` job config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub bundle: Option<PathBuf>,
    pub k: Option<usize>,
    pub seeds: Option<Seeds>,
    #[serde(default)]
    pub methods: Vec<TransformKind>,
    pub r2_mode: Option<R2Mode>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedAnalyze {
    pub bundle: PathBuf,
    pub study: StudyConfig,
    #[serde(skip)]
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

impl AnalyzeConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn resolve(self, o: &Overrides) -> Result<ResolvedAnalyze> {
        let bundle = o
            .bundle
            .clone()
            .or(self.bundle)
            .ok_or_else(|| Error::InvalidConfig("no bundle given".into()))?;
        if o.k.len() > 1 {
            return Err(Error::InvalidConfig("analyze takes a single k".into()));
        }
        let k = o.k.first().copied().or(self.k).unwrap_or(16);
        let mut study = StudyConfig::new(k);
        if !o.variants.is_empty() {
            study.methods = o.variants.iter().map(|s| parse_method(s)).collect::<Result<_>>()?;
        } else if !self.methods.is_empty() {
            study.methods = self.methods;
        }
        if let Some(s) = o.seeds.clone().or(self.seeds) {
            study.seeds = s.to_vec();
        }
        check_seeds(&study.seeds)?;
        study.r2_mode = self.r2_mode.unwrap_or_default();
        Ok(ResolvedAnalyze {
            bundle,
            study,
            out: pick_out(o, self.out),
            formats: pick_formats(o, self.formats),
        })
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeReport {
    pub config: ResolvedAnalyze,
    pub result: StudyResult,
    pub files: Vec<PathBuf>,
}

pub fn analyze_job(cfg: &ResolvedAnalyze) -> Result<AnalyzeReport> {
    let bundle = load_bundle(&cfg.bundle)?;
    if cfg.study.k % 2 != 0 || cfg.study.k < 2 {
        return Err(Error::InvalidExperiment(format!("k = {} must be even and at least 2", cfg.study.k)));
    }
    let result = quality_study(&bundle, &cfg.study)?;
    let comment = format!("cfaug analyze config: {}", compact(cfg));
    let mut files = Vec::new();
    if cfg.formats.contains(&Format::Csv) {
        let header: Vec<String> = [
            "method", "r2_mean", "r2_std", "rmse_mean", "rmse_std", "diversity_mean", "diversity_std",
        ]
        .map(String::from)
        .to_vec();
        let o = &result.original;
        let mut rows = vec![vec![
            o.method.clone(),
            o.r2.to_string(),
            "0".into(),
            o.rmse.to_string(),
            "0".into(),
            o.diversity_generated.to_string(),
            "0".into(),
        ]];
        for m in &result.methods {
            let mut row = vec![m.method.clone()];
            for v in [&m.r2, &m.rmse, &m.diversity] {
                row.push(v.mean.to_string());
                row.push(v.std.to_string());
            }
            rows.push(row);
        }
        files.push(("analysis.csv".to_string(), csv_bytes(&comment, &header, &rows)));
    }
    if cfg.formats.contains(&Format::Json) {
        #[derive(Serialize)]
        struct Doc<'a> {
            config: &'a ResolvedAnalyze,
            result: &'a StudyResult,
        }
        files.push(("analysis.json".into(), pretty(&Doc { config: cfg, result: &result })));
    }
    if cfg.formats.contains(&Format::Markdown) {
        let mut s = format!("<!-- {comment} -->\n\n");
        let _ = writeln!(
            s,
            "Generated counterfactuals (k = {}), metrics averaged over {} seeds ({}).\n",
            cfg.study.k,
            cfg.study.seeds.len(),
            seed_list(&cfg.study.seeds)
        );
        s.push_str(&result.to_markdown());
        files.push(("analysis.md".into(), s.into_bytes()));
    }
    let files = write_atomically(&cfg.out, &files)?;
    Ok(AnalyzeReport {
        config: cfg.clone(),
        result,
        files,
    })
}

/// Writes `files` into a fresh staging directory beside `out`, then moves
/// them into `out` (the whole directory when `out` does not exist yet).
pub fn write_atomically(out: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".cfaug-staging-")
        .tempdir_in(&parent)
        .map_err(|e| Error::io(&parent, e))?;
    for (name, bytes) in files {
        let p = staging.path().join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
    }
    if !out.exists() {
        fs::rename(staging.path(), out).map_err(|e| Error::io(out, e))?;
    } else {
        for (name, _) in files {
            let dst = out.join(name);
            fs::rename(staging.path().join(name), &dst).map_err(|e| Error::io(&dst, e))?;
        }
    }
    Ok(files.iter().map(|(n, _)| out.join(n)).collect())
}

/// Outcome of checking one manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub manifest: PathBuf,
    pub ok: bool,
    pub summary: Option<String>,
    pub errors: Vec<Issue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub code: String,
    pub message: String,
}

pub fn validate_bundle(manifest: &Path) -> ValidationReport {
    match load_bundle(manifest) {
        Ok(b) => {
            let ood: Vec<String> = b.ood_sets().iter().map(|(n, s)| format!("{n}={}", s.len())).collect();
            let summary = format!(
                "{} d={} id_train={} cad_train={} id_test={} cad_test={} ood[{}] extra_pool={}",
                b.name,
                b.dim(),
                b.id_train().len(),
                b.cad_train().len(),
                b.id_test().len(),
                b.cad_test().len(),
                ood.join(","),
                b.extra_pool().map_or(0, |p| p.len())
            );
            ValidationReport {
                manifest: manifest.to_path_buf(),
                ok: true,
                summary: Some(summary),
                errors: Vec::new(),
            }
        }
        Err(e) => ValidationReport {
            manifest: manifest.to_path_buf(),
            ok: false,
            summary: None,
            errors: vec![Issue {
                code: e.code().to_string(),
                message: e.to_string(),
            }],
        },
    }
}

impl ValidationReport {
    /// `OK <summary>` or one `ERROR <code> <message>` line per problem.
    pub fn to_text(&self) -> String {
        if self.ok {
            return format!("OK {}\n", self.summary.as_deref().unwrap_or(""));
        }
        self.errors
            .iter()
            .map(|e| format!("ERROR {} {}\n", e.code, e.message))
            .collect()
    }
}
