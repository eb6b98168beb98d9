use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pool_rows, read_swem, PoolStrategy};
use crate::dsp::{extract_acoustic, read_wav, AcousticConfig, FeatureVersion};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Value(format!("unknown split {other:?}"))),
        }
    }
}

/// One subject with pooled per-modality vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    /// 0 = non-risk, 1 = at-risk.
    pub label: Option<u8>,
    pub audio: Vec<f64>,
    pub text: Vec<f64>,
    pub acoustic: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<SubjectRecord>,
    pub dev: Vec<SubjectRecord>,
    pub test: Vec<SubjectRecord>,
}

impl DatasetSplit {
    pub fn get(&self, split: Split) -> &[SubjectRecord] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    pub fn get_mut(&mut self, split: Split) -> &mut Vec<SubjectRecord> {
        match split {
            Split::Train => &mut self.train,
            Split::Dev => &mut self.dev,
            Split::Test => &mut self.test,
        }
    }

    /// Fills labels from `labels` for every subject it covers, e.g. a
    /// withheld test-label file supplied at scoring time.
    pub fn attach_labels(&mut self, labels: &BTreeMap<String, u8>) {
        for rec in self.train.iter_mut().chain(&mut self.dev).chain(&mut self.test) {
            if let Some(l) = labels.get(&rec.subject_id) {
                rec.label = Some(*l);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSubject {
    pub id: String,
    pub split: Split,
    pub audio: Vec<PathBuf>,
    pub text: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acoustic: Option<Vec<PathBuf>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wav: Option<Vec<PathBuf>>,
}

/// Corpus manifest. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subjects: Vec<ManifestSubject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Reads a `subject_id,label` CSV with strict 0/1 labels.
pub fn load_labels(path: impl AsRef<Path>) -> Result<BTreeMap<String, u8>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_labels(file, &path.display().to_string())
}

fn parse_labels(reader: impl std::io::Read, origin: &str) -> Result<BTreeMap<String, u8>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("{origin}: {e}")))?
        .clone();
    if headers.len() != 2 || &headers[0] != "subject_id" || &headers[1] != "label" {
        return Err(Error::Format(format!(
            "{origin}: expected header subject_id,label, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = BTreeMap::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Format(format!("{origin}: {e}")))?;
        let (id, raw) = (&row[0], &row[1]);
        let label = match raw {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Value(format!(
                    "{origin} line {}: label {other:?} is not 0 or 1",
                    line + 2
                )))
            }
        };
        if out.insert(id.to_string(), label).is_some() {
            return Err(Error::Duplicate(format!("{origin}: subject {id} listed twice")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssembleOptions {
    pub audio_pool: PoolStrategy,
    pub text_pool: PoolStrategy,
    /// Load the acoustic modality at all (early concatenation ignores it).
    pub include_acoustic: bool,
    /// Feature set extracted when the manifest lists raw WAVs.
    pub acoustic_version: FeatureVersion,
    pub acoustic: AcousticConfig,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self {
            audio_pool: PoolStrategy::Mean,
            text_pool: PoolStrategy::Mean,
            include_acoustic: true,
            acoustic_version: FeatureVersion::V3,
            acoustic: AcousticConfig::default(),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Averages the per-task vectors of one modality.
fn mean_of_tasks(vectors: Vec<Vec<f64>>, modality: &str) -> Result<Vec<f64>> {
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Schema(format!("{modality} task files differ in dimension")));
    }
    let n = vectors.len() as f64;
    let mut acc = vec![0.0; dim];
    for v in &vectors {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

fn pooled_modality(base: &Path, files: &[PathBuf], pool: PoolStrategy, modality: &str) -> Result<Vec<f64>> {
    if files.is_empty() {
        return Err(Error::Schema(format!("no {modality} files listed")));
    }
    let vectors = files
        .iter()
        .map(|f| read_swem(resolve(base, f)).map(|m| pool_rows(&m, pool)))
        .collect::<Result<Vec<_>>>()?;
    mean_of_tasks(vectors, modality)
}

fn load_subject(base: &Path, s: &ManifestSubject, opts: &AssembleOptions) -> Result<SubjectRecord> {
    let audio = pooled_modality(base, &s.audio, opts.audio_pool, "audio")?;
    let text = pooled_modality(base, &s.text, opts.text_pool, "text")?;
    let acoustic = if !opts.include_acoustic {
        None
    } else {
        match (&s.acoustic, &s.wav) {
            (Some(_), Some(_)) => {
                return Err(Error::Schema("lists both acoustic features and raw wav files".into()))
            }
            (Some(files), None) => Some(pooled_modality(base, files, PoolStrategy::Mean, "acoustic")?),
            (None, Some(files)) => {
                if files.is_empty() {
                    return Err(Error::Schema("no wav files listed".into()));
                }
                let vectors = files
                    .iter()
                    .map(|f| {
                        let audio = read_wav(resolve(base, f))?;
                        extract_acoustic(&audio, &opts.acoustic, opts.acoustic_version).map(|v| v.to_vec())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(mean_of_tasks(vectors, "acoustic")?)
            }
            (None, None) => None,
        }
    };
    Ok(SubjectRecord {
        subject_id: s.id.clone(),
        label: None,
        audio,
        text,
        acoustic,
    })
}

/// Loads every subject in the manifest, pools each modality file and averages
/// the task-level vectors into one vector per modality.
pub fn assemble_dataset(manifest_path: impl AsRef<Path>, opts: &AssembleOptions) -> Result<DatasetSplit> {
    let manifest_path = manifest_path.as_ref();
    let manifest = Manifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let mut seen = HashSet::new();
    for s in &manifest.subjects {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::Schema(format!("subject {} appears more than once", s.id)));
        }
    }
    let labels = match &manifest.labels {
        Some(p) => load_labels(resolve(base, p))?,
        None => BTreeMap::new(),
    };

    let records = manifest
        .subjects
        .par_iter()
        .map(|s| load_subject(base, s, opts).map_err(|e| Error::for_subject(&s.id, e)))
        .collect::<Result<Vec<_>>>()?;

    check_dims(&records)?;
    let mut out = DatasetSplit::default();
    for (s, mut rec) in manifest.subjects.iter().zip(records) {
        rec.label = labels.get(&s.id).copied();
        if rec.label.is_none() && s.split != Split::Test {
            return Err(Error::Schema(format!("{} subject {} has no label", s.split, s.id)));
        }
        out.get_mut(s.split).push(rec);
    }
    Ok(out)
}

fn check_dims(records: &[SubjectRecord]) -> Result<()> {
    let Some(first) = records.first() else {
        return Err(Error::Schema("manifest lists no subjects".into()));
    };
    let acoustic_dim = first.acoustic.as_ref().map(Vec::len);
    for r in records {
        if r.audio.len() != first.audio.len() {
            return Err(Error::Schema(format!(
                "subject {}: audio dim {} differs from {}",
                r.subject_id,
                r.audio.len(),
                first.audio.len()
            )));
        }
        if r.text.len() != first.text.len() {
            return Err(Error::Schema(format!(
                "subject {}: text dim {} differs from {}",
                r.subject_id,
                r.text.len(),
                first.text.len()
            )));
        }
        if r.acoustic.as_ref().map(Vec::len) != acoustic_dim {
            return Err(Error::Schema(format!(
                "subject {}: acoustic features missing or of a different dimension",
                r.subject_id
            )));
        }
    }
    Ok(())
}
