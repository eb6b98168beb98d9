use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use swrisk::analysis::{export_scatter, extract_prelogit, tsne, zscore_columns, TsneConfig};
use swrisk::dsp::{extract_acoustic, read_wav, AcousticConfig, FeatureVersion};
use swrisk::embedding::{
    assemble_dataset, load_labels, pool_rows, read_swem, write_swem, AssembleOptions, DatasetSplit, EmbeddingMatrix,
    Manifest, PoolStrategy, Split,
};
use swrisk::fusion::{
    load_classifier, predicted_label, save_checkpoint, save_ensemble, Architecture, Classifier, FusionConfig,
    LoadedClassifier,
};
use swrisk::nn::OptimizerKind;
use swrisk::synth::{generate, MANIFEST_FILE};
use swrisk::train::{
    evaluate, predict_scores, train, train_ensemble, BatchSize, Dataset, F1Average, Metrics, TrainConfig,
};
use swrisk::Matrix;

use crate::config::{pick, RunConfig};
use crate::{Cli, Command, GlobalArgs};

pub fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.global.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    let cfg = RunConfig::load(cli.global.config.as_deref())?;
    let seed = resolve_seed(&cli.global, &cfg)?;
    match cli.command {
        Command::Synth(a) => synth(a, &cfg, seed),
        Command::Extract(a) => extract(a, &cfg),
        Command::Pool(a) => pool(a),
        Command::Train(a) => train_cmd(a, &cfg, seed),
        Command::Eval(a) => eval(a, &cfg),
        Command::Predict(a) => predict(a, &cfg),
        Command::Tsne(a) => tsne_cmd(a, &cfg, seed),
    }
}

fn resolve_seed(g: &GlobalArgs, cfg: &RunConfig) -> Result<u64> {
    if let Some(s) = g.seed.or(cfg.seed) {
        return Ok(s);
    }
    match std::env::var("SW_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("SW_SEED={v:?} is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

fn parse<T: std::str::FromStr<Err = swrisk::Error>>(s: &str) -> Result<T> {
    s.parse::<T>().map_err(anyhow::Error::from)
}

/// Accepts a corpus directory or a manifest path.
fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Number of subjects [default: 600]
    #[arg(long)]
    pub subjects: Option<usize>,
    /// Train,dev,test counts [default: 400,100,100]
    #[arg(long, value_name = "TRAIN,DEV,TEST", value_parser = parse_split)]
    pub split: Option<[usize; 3]>,
    /// Audio embedding width [default: 1024]
    #[arg(long)]
    pub audio_dim: Option<usize>,
    /// Text embedding width [default: 1024]
    #[arg(long)]
    pub text_dim: Option<usize>,
    /// Class mean separation in embedding space [default: 3.0]
    #[arg(long)]
    pub separation: Option<f64>,
    /// Task recordings per subject [default: 3]
    #[arg(long)]
    pub tasks: Option<usize>,
    /// Skip WAV generation
    #[arg(long)]
    pub no_wavs: bool,
}

fn parse_split(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|e| format!("'{p}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|p: Vec<usize>| format!("expected three comma-separated counts, got {}", p.len()))
}

fn synth(a: SynthArgs, cfg: &RunConfig, seed: u64) -> Result<()> {
    let mut sc = cfg.synth.clone().unwrap_or_default();
    sc.seed = seed;
    if let Some(n) = a.subjects {
        sc.n_subjects = n;
        if a.split.is_none() {
            // keep the 4:1:1 proportions, rounded to even counts
            let dev = n / 6 / 2 * 2;
            sc.split = [n - 2 * dev, dev, dev];
        }
    }
    if let Some(s) = a.split {
        sc.split = s;
    }
    sc.audio_dim = pick(a.audio_dim, None, sc.audio_dim);
    sc.text_dim = pick(a.text_dim, None, sc.text_dim);
    sc.class_separation = pick(a.separation, None, sc.class_separation);
    sc.tasks_per_subject = pick(a.tasks, None, sc.tasks_per_subject);
    if a.no_wavs {
        sc.write_wavs = false;
    }
    let layout = generate(&sc, &a.out).with_context(|| format!("generating corpus in {}", a.out.display()))?;
    info!(
        "wrote {} subjects to {} (manifest {})",
        layout.n_subjects,
        layout.root.display(),
        layout.manifest.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- extract

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Corpus directory or manifest listing WAV files
    #[arg(long = "in", value_name = "CORPUS")]
    pub input: PathBuf,
    /// Output directory for feature SWEMs and the derived manifest
    #[arg(long)]
    pub out: PathBuf,
    /// Feature set: v2 (40 MFCC means) or v3 (+ contrast and pitch, 50 dims) [default: v3]
    #[arg(long)]
    pub version: Option<String>,
}

fn absolute(base: &Path, p: &Path) -> Result<PathBuf> {
    let joined = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    std::path::absolute(&joined).with_context(|| format!("resolving {}", joined.display()))
}

fn extract(a: ExtractArgs, cfg: &RunConfig) -> Result<()> {
    let version: FeatureVersion = parse(&pick(a.version, cfg.features.acoustic_version.clone(), "v3".into()))?;
    let mpath = manifest_path(&a.input);
    let mut manifest = Manifest::read(&mpath)?;
    let base = mpath.parent().unwrap_or(Path::new(".")).to_path_buf();
    let feat_dir = a.out.join("acoustic");
    create_dir(&feat_dir)?;

    let mut jobs = Vec::new();
    for s in &manifest.subjects {
        let wavs = s
            .wav
            .as_ref()
            .filter(|w| !w.is_empty())
            .ok_or_else(|| anyhow!("subject {} lists no wav files", s.id))?;
        for w in wavs {
            let stem = w.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default();
            jobs.push((absolute(&base, w)?, PathBuf::from("acoustic").join(format!("{stem}.swem"))));
        }
    }
    let mut seen = std::collections::HashSet::new();
    if let Some((_, dup)) = jobs.iter().find(|(_, out)| !seen.insert(out.clone())) {
        bail!("two wav files map to the same feature file {}", dup.display());
    }

    let acoustic = AcousticConfig::default();
    jobs.par_iter()
        .try_for_each(|(wav, rel)| -> Result<()> {
            let audio = read_wav(wav).with_context(|| format!("reading {}", wav.display()))?;
            let feats = extract_acoustic(&audio, &acoustic, version)
                .with_context(|| format!("extracting features from {}", wav.display()))?;
            write_swem(&EmbeddingMatrix::from_vector(&feats.to_vec())?, a.out.join(rel))?;
            Ok(())
        })?;

    let mut it = jobs.into_iter();
    for s in &mut manifest.subjects {
        let n = s.wav.as_ref().map_or(0, Vec::len);
        s.acoustic = Some(it.by_ref().take(n).map(|(_, rel)| rel).collect());
        s.wav = None;
        s.audio = s.audio.iter().map(|p| absolute(&base, p)).collect::<Result<_>>()?;
        s.text = s.text.iter().map(|p| absolute(&base, p)).collect::<Result<_>>()?;
    }
    if let Some(l) = &manifest.labels {
        manifest.labels = Some(absolute(&base, l)?);
    }
    let out_manifest = a.out.join(MANIFEST_FILE);
    manifest.write(&out_manifest)?;
    info!(
        "wrote {} {version:?} feature vectors and {}",
        manifest.subjects.iter().map(|s| s.acoustic.as_ref().map_or(0, Vec::len)).sum::<usize>(),
        out_manifest.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- pool

#[derive(Debug, Args)]
pub struct PoolArgs {
    /// Input SWEM matrix (one row per segment or token)
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Output 1×d SWEM
    #[arg(long)]
    pub out: PathBuf,
    /// mean or cls [default: mean]
    #[arg(long, default_value = "mean")]
    pub strategy: String,
}

fn pool(a: PoolArgs) -> Result<()> {
    let strategy: PoolStrategy = parse(&a.strategy)?;
    let m = read_swem(&a.input)?;
    let v = pool_rows(&m, strategy);
    write_swem(&EmbeddingMatrix::from_vector(&v)?, &a.out)?;
    info!("pooled {}×{} into 1×{}", m.rows(), m.cols(), v.len());
    Ok(())
}

// ---------------------------------------------------------------- shared data options

#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// Corpus manifest (or its directory)
    #[arg(long)]
    pub manifest: PathBuf,
    /// Audio embedding pooling: mean or cls [default: mean]
    #[arg(long)]
    pub audio_pool: Option<String>,
    /// Text embedding pooling: mean or cls [default: mean]
    #[arg(long)]
    pub text_pool: Option<String>,
    /// Acoustic feature set when the manifest lists raw WAVs [default: v3]
    #[arg(long)]
    pub acoustic_version: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct FeatureChoice {
    audio_pool: PoolStrategy,
    text_pool: PoolStrategy,
    acoustic_version: FeatureVersion,
}

fn feature_choice(d: &DataArgs, cfg: &RunConfig) -> Result<FeatureChoice> {
    let f = &cfg.features;
    Ok(FeatureChoice {
        audio_pool: parse(&pick(d.audio_pool.clone(), f.audio_pool.clone(), "mean".into()))?,
        text_pool: parse(&pick(d.text_pool.clone(), f.text_pool.clone(), "mean".into()))?,
        acoustic_version: parse(&pick(d.acoustic_version.clone(), f.acoustic_version.clone(), "v3".into()))?,
    })
}

fn load_data(d: &DataArgs, fc: &FeatureChoice, include_acoustic: bool) -> Result<DatasetSplit> {
    let opts = AssembleOptions {
        audio_pool: fc.audio_pool,
        text_pool: fc.text_pool,
        include_acoustic,
        acoustic_version: fc.acoustic_version,
        acoustic: AcousticConfig::default(),
    };
    let path = manifest_path(&d.manifest);
    assemble_dataset(&path, &opts).with_context(|| format!("assembling dataset from {}", path.display()))
}

fn manifest_has_acoustic(d: &DataArgs) -> Result<bool> {
    let m = Manifest::read(manifest_path(&d.manifest))?;
    Ok(m.subjects.iter().any(|s| s.acoustic.is_some() || s.wav.is_some()))
}

// ---------------------------------------------------------------- train

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// 1 = early concatenation, 2 = modality attention, 3 = weighted attention ensemble
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub submission: u8,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Maximum epochs [default: 300 for submission 1, 150 otherwise]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size or "full" [default: full for 1, 32 otherwise]
    #[arg(long)]
    pub batch_size: Option<String>,
    /// Learning rate [default: 0.05 for 1, 0.001 otherwise]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Epochs without dev-loss improvement before stopping [default: 30 for 1, 15 otherwise]
    #[arg(long)]
    pub patience: Option<usize>,
    /// gd or adam [default: gd for 1, adam otherwise]
    #[arg(long)]
    pub optimizer: Option<String>,
    /// Enable mixup [default: on for 3 only]
    #[arg(long)]
    pub mixup: Option<bool>,
    /// Mixup Beta(α, α) shape [default: 0.2]
    #[arg(long)]
    pub mixup_alpha: Option<f64>,
    /// Ensemble folds for submission 3 [default: 5]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Projection width for submissions 2 and 3 [default: 128]
    #[arg(long)]
    pub proj_dim: Option<usize>,
    /// Penultimate layer width [default: 64]
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// F1 variant in reports: binary or macro [default: binary]
    #[arg(long)]
    pub f1: Option<String>,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    fusion: &'a FusionConfig,
    train: &'a TrainConfig,
    features: &'a FeatureChoice,
    f1: F1Average,
}

fn config_hash(record: &RunRecord) -> Result<String> {
    let bytes = serde_json::to_vec(record)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn train_cmd(a: TrainArgs, cfg: &RunConfig, seed: u64) -> Result<()> {
    let arch = Architecture::from_submission(a.submission)?;
    let fc = feature_choice(&a.data, cfg)?;
    let t = &cfg.train;
    let mut tc = TrainConfig::for_architecture(arch);
    tc.seed = seed;
    tc.epochs = pick(a.epochs, t.epochs, tc.epochs);
    tc.lr = pick(a.lr, t.lr, tc.lr);
    tc.patience = pick(a.patience, t.patience, tc.patience);
    tc.mixup = pick(a.mixup, t.mixup, tc.mixup);
    tc.mixup_alpha = pick(a.mixup_alpha, t.mixup_alpha, tc.mixup_alpha);
    tc.folds = pick(a.folds, t.folds, tc.folds);
    if let Some(b) = a.batch_size.clone().or_else(|| t.batch_size.as_ref().map(toml_scalar)) {
        tc.batch_size = parse::<BatchSize>(&b)?;
    }
    if let Some(o) = a.optimizer.clone().or_else(|| t.optimizer.clone()) {
        tc.optimizer = match o.as_str() {
            "gd" => OptimizerKind::Gd,
            "adam" => OptimizerKind::Adam,
            other => bail!("unknown optimizer '{other}' (gd|adam)"),
        };
    }
    let f1: F1Average = parse(&pick(a.f1.clone(), t.f1.clone(), "binary".into()))?;
    tc.validate()?;
    if arch == Architecture::WeightedAttentionV3 && tc.folds < 2 {
        bail!("submission 3 needs at least 2 folds, got {}", tc.folds);
    }

    if !arch.uses_acoustic() && manifest_has_acoustic(&a.data)? {
        warn!("submission 1 uses audio and text only; acoustic features in the manifest are ignored");
    }
    let data = load_data(&a.data, &fc, arch.uses_acoustic())?;
    let train_set = Dataset::from_records(&data.train, arch)?;
    let dev_set = Dataset::from_records(&data.dev, arch)?;
    let first = train_set
        .inputs
        .first()
        .ok_or_else(|| anyhow!("the manifest has no training subjects"))?;
    let mut fusion = FusionConfig::new(arch, first.audio.len(), first.text.len(), first.acoustic.as_ref().map(Vec::len));
    fusion.proj_dim = pick(a.proj_dim, cfg.model.proj_dim, fusion.proj_dim);
    fusion.hidden_dim = pick(a.hidden_dim, cfg.model.hidden_dim, fusion.hidden_dim);
    fusion.validate()?;

    let record = RunRecord {
        fusion: &fusion,
        train: &tc,
        features: &fc,
        f1,
    };
    let hash = config_hash(&record)?;
    create_dir(&a.out)?;
    write_json(&record, &a.out.join("config.json"))?;
    info!(
        "training {arch} on {} subjects (dev {}), seed {seed}",
        train_set.len(),
        dev_set.len()
    );

    let classifier = if arch == Architecture::WeightedAttentionV3 {
        let (ensemble, histories) = train_ensemble(&tc, &fusion, &train_set)?;
        for (i, h) in histories.iter().enumerate() {
            h.write_csv(&a.out.join(format!("history_fold{i}.csv")))?;
            info!("fold {i}: best epoch {} of {}", h.best_epoch, h.epochs.len());
        }
        let dir = a.out.join("ensemble");
        save_ensemble(&ensemble, &dir)?;
        info!("saved {}-member ensemble to {}", ensemble.members.len(), dir.display());
        LoadedClassifier::Ensemble(ensemble)
    } else {
        let (model, history) = train(&tc, &fusion, &train_set, &dev_set)?;
        history.write_csv(&a.out.join("history.csv"))?;
        let path = a.out.join("model.ckpt");
        save_checkpoint(&model, seed, &path)?;
        info!("best epoch {} of {}; saved {}", history.best_epoch, history.epochs.len(), path.display());
        LoadedClassifier::Single(model)
    };

    let mut metrics = score(&classifier, &dev_set, "dev", f1)?;
    metrics.config_hash = Some(hash);
    metrics.write_json(&a.out.join("metrics_dev.json"))?;
    log_metrics(&metrics);
    Ok(())
}

fn toml_scalar(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn score(model: &LoadedClassifier, data: &Dataset, split: &str, f1: F1Average) -> Result<Metrics> {
    let labels = data.require_labels()?;
    let scores = predict_scores(model, &data.inputs)?;
    Ok(evaluate(split, &scores, &labels, f1)?)
}

fn log_metrics(m: &Metrics) {
    let auroc = m.auroc.map_or("undefined".to_string(), |a| format!("{a:.4}"));
    info!(
        "{}: accuracy {:.4}, f1 {:.4}, auroc {auroc} (n = {})",
        m.split, m.accuracy, m.f1, m.n
    );
}

// ---------------------------------------------------------------- eval / predict

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint file or ensemble directory
    #[arg(long)]
    pub model: PathBuf,
    /// Split to score: train, dev or test [default: dev]
    #[arg(long, default_value = "dev")]
    pub split: String,
    /// Labels CSV overriding the manifest's (e.g. withheld test labels)
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Metrics JSON output path
    #[arg(long)]
    pub out: PathBuf,
    /// F1 variant: binary or macro [default: binary]
    #[arg(long)]
    pub f1: Option<String>,
}

fn load_split(data: &DataArgs, cfg: &RunConfig, model: &LoadedClassifier, split: Split) -> Result<Dataset> {
    let fc = feature_choice(data, cfg)?;
    let arch = model.config().architecture;
    let all = load_data(data, &fc, arch.uses_acoustic())?;
    Ok(Dataset::from_records(all.get(split), arch)?)
}

fn eval(a: EvalArgs, cfg: &RunConfig) -> Result<()> {
    let split: Split = parse(&a.split)?;
    let f1: F1Average = parse(&pick(a.f1.clone(), cfg.train.f1.clone(), "binary".into()))?;
    let model = load_classifier(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let mut data = load_split(&a.data, cfg, &model, split)?;
    if let Some(path) = &a.labels {
        let labels = load_labels(path)?;
        data.labels = data.ids.iter().map(|id| labels.get(id).copied()).collect();
    }
    if data.is_empty() {
        bail!("split {split} has no subjects");
    }
    let metrics = score(&model, &data, split.as_str(), f1)?;
    if metrics.auroc.is_none() {
        bail!("AUROC is undefined: the {split} labels contain a single class");
    }
    metrics.write_json(&a.out)?;
    log_metrics(&metrics);
    Ok(())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint file or ensemble directory
    #[arg(long)]
    pub model: PathBuf,
    /// Split to predict: train, dev or test [default: test]
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Output CSV (subject_id,prob_at_risk,label)
    #[arg(long)]
    pub out: PathBuf,
}

fn predict(a: PredictArgs, cfg: &RunConfig) -> Result<()> {
    let split: Split = parse(&a.split)?;
    let model = load_classifier(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let data = load_split(&a.data, cfg, &model, split)?;
    let probs = data
        .inputs
        .par_iter()
        .map(|x| model.predict_proba(x))
        .collect::<swrisk::Result<Vec<_>>>()?;
    let mut text = String::from("subject_id,prob_at_risk,label\n");
    for (id, p) in data.ids.iter().zip(&probs) {
        text.push_str(&format!("{id},{:.6},{}\n", p[1], predicted_label(*p)));
    }
    std::fs::write(&a.out, text).with_context(|| format!("writing {}", a.out.display()))?;
    info!("wrote {} predictions to {}", probs.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------- tsne

#[derive(Debug, Args)]
pub struct TsneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Trained checkpoint (an ensemble directory uses its first member)
    #[arg(long)]
    pub model: PathBuf,
    /// Raw modality to project: audio, text or acoustic [default: audio]
    #[arg(long, default_value = "audio")]
    pub modality: String,
    /// Split to project [default: dev]
    #[arg(long, default_value = "dev")]
    pub split: String,
    /// Output directory for raw.{csv,svg} and prelogit.{csv,svg}
    #[arg(long)]
    pub out: PathBuf,
    /// Perplexity [default: min(30, (n-1)/3)]
    #[arg(long)]
    pub perplexity: Option<f64>,
    /// Gradient-descent iterations [default: 1000]
    #[arg(long)]
    pub iters: Option<usize>,
}

fn tsne_cmd(a: TsneArgs, cfg: &RunConfig, seed: u64) -> Result<()> {
    let split: Split = parse(&a.split)?;
    let loaded = load_classifier(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let model = match &loaded {
        LoadedClassifier::Single(m) => m.clone(),
        LoadedClassifier::Ensemble(e) => {
            info!("using the first of {} ensemble members for pre-logits", e.members.len());
            e.members[0].clone()
        }
    };
    let data = load_split(&a.data, cfg, &loaded, split)?;
    let raw_rows: Vec<Vec<f64>> = match a.modality.as_str() {
        "audio" => data.inputs.iter().map(|x| x.audio.clone()).collect(),
        "text" => data.inputs.iter().map(|x| x.text.clone()).collect(),
        "acoustic" => data
            .inputs
            .iter()
            .map(|x| x.acoustic.clone().ok_or_else(|| anyhow!("the model was trained without acoustic features")))
            .collect::<Result<_>>()?,
        other => bail!("unknown modality '{other}' (audio|text|acoustic)"),
    };
    let raw = zscore_columns(&Matrix::from_rows(&raw_rows)?);
    let pre = extract_prelogit(&model, &data.inputs)?;
    let tc = TsneConfig {
        perplexity: a.perplexity.or(cfg.tsne.perplexity),
        iters: pick(a.iters, cfg.tsne.iters, 1000),
        seed,
        ..Default::default()
    };
    let labels: Option<Vec<u8>> = data.labels.iter().copied().collect();
    create_dir(&a.out)?;
    for (stem, points, title) in [
        ("raw", &raw, format!("Raw {} embeddings ({split})", a.modality)),
        ("prelogit", &pre, format!("Pre-logit activations ({split})")),
    ] {
        let mut proj = tsne(points, &tc).with_context(|| format!("projecting {stem} embeddings"))?;
        proj.ids = data.ids.clone();
        proj.labels = labels.clone();
        export_scatter(&proj, &a.out, stem, &title)?;
        info!(
            "{stem}: final KL {:.4} at perplexity {:.2}",
            proj.kl_trace.last().copied().unwrap_or(0.0),
            proj.perplexity
        );
    }
    Ok(())
}
