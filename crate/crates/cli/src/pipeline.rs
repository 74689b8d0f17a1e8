//! The five stages. Each one reads what the previous stages wrote to the
//! output directory, so any stage can be rerun on its own.

use std::fs;
use std::path::{Path, PathBuf};

use qnlp_core::dataset::{self, default_lexicon, DatasetError, LabeledSentence, Template};
use qnlp_core::embeddings::{train_spsa, EmbeddingStore, LabeledCircuits};
use qnlp_core::kernels::{gram, region_stats, GramMatrix, KernelKind, Region};
use qnlp_core::pregroup::Lexicon;
use qnlp_core::seeds::derive_seed;
use qnlp_core::svm::{fit_precomputed, SvmModel};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest tolerated box or equality violation of a fitted SVM.
pub const KKT_FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero for a single value.
    pub stderr: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n.max(1) as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedTrainResult {
    pub seed: u64,
    pub final_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub schema_version: u32,
    pub backend: String,
    pub epochs: usize,
    pub seeds: Vec<SeedTrainResult>,
    pub train_acc: MeanSe,
    pub test_acc: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmMetrics {
    pub schema_version: u32,
    pub kernel: String,
    pub backend: String,
    pub seed: u64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub n_support: usize,
    #[serde(rename = "C")]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMean {
    pub region: String,
    /// Mean over seeds of the per-seed region means.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub train_acc: MeanSe,
    pub test_acc: MeanSe,
    pub per_seed_test_acc: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<RegionMean>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub backend: String,
    pub seeds: Vec<u64>,
    pub explicit: ModelSummary,
    pub transition: ModelSummary,
    pub swap: ModelSummary,
}

pub fn data_path(out: &Path) -> PathBuf {
    out.join("data.tsv")
}

pub fn train_path(out: &Path) -> PathBuf {
    out.join("train.tsv")
}

pub fn test_path(out: &Path) -> PathBuf {
    out.join("test.tsv")
}

pub fn embeddings_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("embeddings_{seed}.txt"))
}

pub fn history_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("history_{seed}.csv"))
}

/// `<out>/<kernel>/seed_<seed>`.
pub fn kernel_dir(out: &Path, kind: KernelKind, seed: u64) -> PathBuf {
    out.join(kind.name()).join(format!("seed_{seed}"))
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    write(path, text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn require(path: &Path, stage: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(runtime(format!(
            "{} is missing; run `{stage}` first",
            path.display()
        )))
    }
}

pub fn load_lexicon(cfg: &ExperimentConfig) -> Result<Lexicon, CliError> {
    match &cfg.lexicon {
        Some(p) => Lexicon::load(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        None => Ok(default_lexicon()),
    }
}

/// The train and test splits written by `gen-data`.
pub fn load_splits(
    cfg: &ExperimentConfig,
    lexicon: &Lexicon,
) -> Result<(Vec<LabeledSentence>, Vec<LabeledSentence>), CliError> {
    let mut out = Vec::new();
    for p in [train_path(&cfg.out), test_path(&cfg.out)] {
        require(&p, "gen-data")?;
        out.push(dataset::load_tsv(&p, lexicon).map_err(runtime)?);
    }
    let test = out.pop().expect("two splits");
    let train = out.pop().expect("two splits");
    Ok((train, test))
}

fn compile(
    data: &[LabeledSentence],
    lexicon: &Lexicon,
    cfg: &ExperimentConfig,
) -> Result<LabeledCircuits, CliError> {
    LabeledCircuits::compile(data, lexicon, &cfg.ansatz).map_err(runtime)
}

/// Trained embeddings of one seed, checked against the current lexicon.
pub fn load_embeddings(
    cfg: &ExperimentConfig,
    lexicon: &Lexicon,
    seed: u64,
) -> Result<EmbeddingStore, CliError> {
    let p = embeddings_path(&cfg.out, seed);
    require(&p, "train")?;
    let (store, hash) = EmbeddingStore::load(&p).map_err(runtime)?;
    if hash != lexicon.fingerprint() {
        return Err(runtime(format!(
            "{} was trained on lexicon {hash:016x}, current lexicon is {:016x}",
            p.display(),
            lexicon.fingerprint()
        )));
    }
    Ok(store)
}

/// Writes `data.tsv`, `train.tsv` and `test.tsv`. The dataset and split
/// come from the first seed, so every trial sees the same sentences.
pub fn cmd_gen_data(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let lexicon = load_lexicon(cfg)?;
    let seed = cfg.seeds[0];
    let data = match &cfg.dataset {
        Some(p) => dataset::load_tsv(p, &lexicon)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => dataset::generate(&lexicon, &Template::ALL, cfg.n, seed).map_err(|e| match e {
            DatasetError::InsufficientCombinations { .. } => CliError::Config(e.to_string()),
            other => runtime(other),
        })?,
    };
    let split = dataset::split(&data, cfg.ratio, seed).map_err(runtime)?;
    write(&data_path(&cfg.out), dataset::to_tsv(&data))?;
    write(&train_path(&cfg.out), dataset::to_tsv(&split.train))?;
    write(&test_path(&cfg.out), dataset::to_tsv(&split.test))?;
    eprintln!(
        "gen-data: {} sentences ({} train, {} test) in {}",
        data.len(),
        split.train.len(),
        split.test.len(),
        cfg.out.display()
    );
    Ok(())
}

/// Trains the explicit model once per seed and writes per-seed embeddings
/// and histories plus `metrics.json`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainMetrics, CliError> {
    let lexicon = load_lexicon(cfg)?;
    let (train, test) = load_splits(cfg, &lexicon)?;
    let (train_c, test_c) = (
        compile(&train, &lexicon, cfg)?,
        compile(&test, &lexicon, cfg)?,
    );
    let backend = cfg.backend();
    let tcfg = cfg.train_config();
    let mut results = Vec::new();
    for &seed in &cfg.seeds {
        let init = EmbeddingStore::random(&lexicon, seed);
        let (store, history) =
            train_spsa(&train_c, Some(&test_c), &tcfg, init, &backend).map_err(runtime)?;
        let mut csv = String::from("epoch,loss,train_acc,test_acc\n");
        for r in &history {
            let test_acc = r.test_acc.map(|a| a.to_string()).unwrap_or_default();
            csv.push_str(&format!(
                "{},{},{},{}\n",
                r.epoch, r.loss, r.train_acc, test_acc
            ));
        }
        write(&history_path(&cfg.out, seed), csv)?;
        write(
            &embeddings_path(&cfg.out, seed),
            store.to_text(lexicon.fingerprint(), &cfg.ansatz),
        )?;
        let last = history.last().expect("history has the initial row");
        let r = SeedTrainResult {
            seed,
            final_loss: last.loss,
            train_acc: last.train_acc,
            test_acc: last.test_acc.unwrap_or(f64::NAN),
        };
        eprintln!(
            "train: seed {seed} loss {:.4} train {:.3} test {:.3}",
            r.final_loss, r.train_acc, r.test_acc
        );
        results.push(r);
    }
    let train_accs: Vec<f64> = results.iter().map(|r| r.train_acc).collect();
    let test_accs: Vec<f64> = results.iter().map(|r| r.test_acc).collect();
    let metrics = TrainMetrics {
        schema_version: SCHEMA_VERSION,
        backend: backend.name().to_string(),
        epochs: tcfg.epochs,
        seeds: results,
        train_acc: MeanSe::of(&train_accs),
        test_acc: MeanSe::of(&test_accs),
    };
    write_json(&cfg.out.join("metrics.json"), &metrics)?;
    Ok(metrics)
}

fn regions_tsv(k: &GramMatrix, rows: &[u8], cols: &[u8]) -> Result<String, CliError> {
    let mut out = String::from("region\tmean\tstd\tcount\n");
    for s in region_stats(k, rows, cols).map_err(runtime)? {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            s.region.name(),
            s.mean,
            s.std,
            s.count
        ));
    }
    Ok(out)
}

/// Training Gram (train x train) and test Gram (test x train) for every
/// seed with the configured kernel, plus heatmaps and training-Gram region
/// statistics.
pub fn cmd_gram(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let lexicon = load_lexicon(cfg)?;
    let (train, test) = load_splits(cfg, &lexicon)?;
    let (train_c, test_c) = (
        compile(&train, &lexicon, cfg)?,
        compile(&test, &lexicon, cfg)?,
    );
    let backend = cfg.backend();
    for &seed in &cfg.seeds {
        let store = load_embeddings(cfg, &lexicon, seed)?;
        let k_train = gram(
            &train_c,
            &train_c,
            cfg.kernel,
            &store.params,
            &backend,
            derive_seed(seed, &[1]),
        )
        .map_err(runtime)?;
        let k_test = gram(
            &test_c,
            &train_c,
            cfg.kernel,
            &store.params,
            &backend,
            derive_seed(seed, &[2]),
        )
        .map_err(runtime)?;
        let dir = kernel_dir(&cfg.out, cfg.kernel, seed);
        write(&dir.join("train.csv"), k_train.to_csv())?;
        write(&dir.join("test.csv"), k_test.to_csv())?;
        write(&dir.join("train.pgm"), k_train.to_pgm())?;
        write(&dir.join("test.pgm"), k_test.to_pgm())?;
        write(
            &dir.join("regions.tsv"),
            regions_tsv(&k_train, &train_c.labels, &train_c.labels)?,
        )?;
        eprintln!(
            "gram: {} seed {seed} {}x{} / {}x{}",
            cfg.kernel, k_train.rows, k_train.cols, k_test.rows, k_test.cols
        );
    }
    Ok(())
}

fn load_gram(path: &Path) -> Result<GramMatrix, CliError> {
    require(path, "gram")?;
    GramMatrix::load(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn check_meta(
    k: &GramMatrix,
    path: &Path,
    cfg: &ExperimentConfig,
    embedding_hash: u64,
) -> Result<(), CliError> {
    let backend = cfg.backend();
    let m = &k.meta;
    let mismatch = if m.kernel != cfg.kernel {
        Some(format!("kernel {} (configured {})", m.kernel, cfg.kernel))
    } else if m.backend != backend.name() {
        Some(format!(
            "backend {} (configured {})",
            m.backend,
            backend.name()
        ))
    } else if m.embedding_hash != embedding_hash {
        Some(format!(
            "embedding hash {:016x} (current {embedding_hash:016x})",
            m.embedding_hash
        ))
    } else {
        None
    };
    match mismatch {
        Some(what) => Err(runtime(format!(
            "{} was computed with {what}; rerun `gram`",
            path.display()
        ))),
        None => Ok(()),
    }
}

/// Fits the SVM on each seed's training Gram and scores both splits.
pub fn cmd_svm(cfg: &ExperimentConfig) -> Result<Vec<SvmMetrics>, CliError> {
    let lexicon = load_lexicon(cfg)?;
    let (train, test) = load_splits(cfg, &lexicon)?;
    let y_train: Vec<u8> = train.iter().map(|s| s.label).collect();
    let y_test: Vec<u8> = test.iter().map(|s| s.label).collect();
    let mut all = Vec::new();
    for &seed in &cfg.seeds {
        let hash = load_embeddings(cfg, &lexicon, seed)?.params.fingerprint();
        let dir = kernel_dir(&cfg.out, cfg.kernel, seed);
        let (train_p, test_p) = (dir.join("train.csv"), dir.join("test.csv"));
        let (k_train, k_test) = (load_gram(&train_p)?, load_gram(&test_p)?);
        check_meta(&k_train, &train_p, cfg, hash)?;
        check_meta(&k_test, &test_p, cfg, hash)?;
        if k_test.cols != k_train.rows {
            return Err(runtime(format!(
                "{} has {} columns but the training Gram has {} rows",
                test_p.display(),
                k_test.cols,
                k_train.rows
            )));
        }
        let model = fit_precomputed(&k_train, &y_train, &cfg.svm).map_err(runtime)?;
        let infeasible = model.feasibility_error();
        if infeasible > KKT_FEASIBILITY_TOL {
            return Err(runtime(format!(
                "seed {seed}: fitted SVM violates its constraints by {infeasible:e}"
            )));
        }
        let metrics = SvmMetrics {
            schema_version: SCHEMA_VERSION,
            kernel: cfg.kernel.name().to_string(),
            backend: k_train.meta.backend.clone(),
            seed,
            train_acc: model.accuracy(&k_train, &y_train).map_err(runtime)?,
            test_acc: model.accuracy(&k_test, &y_test).map_err(runtime)?,
            n_support: model.n_support(),
            c: model.c,
        };
        write(&dir.join("model.txt"), model.to_text())?;
        write_json(&dir.join("metrics.json"), &metrics)?;
        eprintln!(
            "svm: {} seed {seed} train {:.3} test {:.3} support {}",
            cfg.kernel, metrics.train_acc, metrics.test_acc, metrics.n_support
        );
        all.push(metrics);
    }
    Ok(all)
}

/// Loads a fitted model written by `svm`.
pub fn load_model(out: &Path, kind: KernelKind, seed: u64) -> Result<SvmModel, CliError> {
    let p = kernel_dir(out, kind, seed).join("model.txt");
    SvmModel::load(&p).map_err(|e| runtime(format!("{}: {e}", p.display())))
}

/// Per-region means of one seed's training Gram, read back from
/// `regions.tsv`.
pub fn load_region_means(
    out: &Path,
    kind: KernelKind,
    seed: u64,
) -> Result<Vec<(String, f64)>, CliError> {
    let p = kernel_dir(out, kind, seed).join("regions.tsv");
    let text = fs::read_to_string(&p).map_err(|e| runtime(format!("{}: {e}", p.display())))?;
    text.lines()
        .skip(1)
        .map(|line| {
            let mut f = line.split('\t');
            let name = f.next().unwrap_or_default().to_string();
            let mean = f
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| runtime(format!("{}: bad line `{line}`", p.display())))?;
            Ok((name, mean))
        })
        .collect()
}

fn kernel_summary(
    cfg: &ExperimentConfig,
    kind: KernelKind,
    metrics: &[SvmMetrics],
) -> Result<ModelSummary, CliError> {
    let train: Vec<f64> = metrics.iter().map(|m| m.train_acc).collect();
    let test: Vec<f64> = metrics.iter().map(|m| m.test_acc).collect();
    let mut regions = Vec::new();
    for region in Region::ALL {
        let mut means = Vec::new();
        for &seed in &cfg.seeds {
            let per_seed = load_region_means(&cfg.out, kind, seed)?;
            if let Some((_, m)) = per_seed.iter().find(|(n, _)| n == region.name()) {
                means.push(*m);
            }
        }
        regions.push(RegionMean {
            region: region.name().to_string(),
            mean: MeanSe::of(&means).mean,
        });
    }
    Ok(ModelSummary {
        train_acc: MeanSe::of(&train),
        test_acc: MeanSe::of(&test),
        per_seed_test_acc: test,
        regions,
    })
}

/// gen-data, train, then gram and svm for both kernels; writes
/// `summary.json`.
pub fn cmd_full(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    cmd_gen_data(cfg)?;
    let explicit = cmd_train(cfg)?;
    let mut kernels = Vec::new();
    for kind in [KernelKind::Transition, KernelKind::Swap] {
        let kcfg = ExperimentConfig {
            kernel: kind,
            ..cfg.clone()
        };
        cmd_gram(&kcfg)?;
        let metrics = cmd_svm(&kcfg)?;
        kernels.push(kernel_summary(&kcfg, kind, &metrics)?);
    }
    let swap = kernels.pop().expect("two kernels");
    let transition = kernels.pop().expect("two kernels");
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        backend: explicit.backend.clone(),
        seeds: cfg.seeds.clone(),
        explicit: ModelSummary {
            train_acc: explicit.train_acc,
            test_acc: explicit.test_acc,
            per_seed_test_acc: explicit.seeds.iter().map(|r| r.test_acc).collect(),
            regions: Vec::new(),
        },
        transition,
        swap,
    };
    write_json(&cfg.out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_error_uses_the_sample_deviation() {
        let s = MeanSe::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.stderr - sd / 2.0).abs() < 1e-15);
        assert_eq!(MeanSe::of(&[0.7]).stderr, 0.0);
    }
}
