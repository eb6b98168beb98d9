use crate::embedding::SubjectRecord;
use crate::fusion::{Architecture, ModalityInput};
use crate::{Error, Result};

/// Model inputs for one split with subject ids and (optional) labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub inputs: Vec<ModalityInput>,
    pub labels: Vec<Option<u8>>,
}

impl Dataset {
    /// Converts assembled records; acoustic features are dropped for the
    /// audio+text architecture and required for the others.
    pub fn from_records(records: &[SubjectRecord], arch: Architecture) -> Result<Self> {
        let mut out = Dataset::default();
        for r in records {
            let acoustic = if arch.uses_acoustic() {
                Some(r.acoustic.clone().ok_or_else(|| {
                    Error::for_subject(&r.subject_id, Error::Input(format!("{arch} needs acoustic features")))
                })?)
            } else {
                None
            };
            out.ids.push(r.subject_id.clone());
            out.inputs.push(ModalityInput::new(r.audio.clone(), r.text.clone(), acoustic));
            out.labels.push(r.label);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// All labels, or an error naming the first unlabeled subject.
    pub fn require_labels(&self) -> Result<Vec<u8>> {
        self.labels
            .iter()
            .zip(&self.ids)
            .map(|(l, id)| l.ok_or_else(|| Error::Schema(format!("subject {id} has no label"))))
            .collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}
