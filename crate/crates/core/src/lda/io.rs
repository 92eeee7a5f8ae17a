//! Versioned JSON dump of a trained model: hyperparameters, vocabulary hash,
//! documents, assignments and counts. Counts are checked against the
//! assignments on load, so φ/θ of a reloaded model are bit-identical.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AveragedCounts, LdaError, LdaHyperparams, LdaModel};

const FORMAT: &str = "shoplens-lda";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    hyperparams: LdaHyperparams,
    vocab_size: usize,
    vocab_hash: String,
    documents: Vec<DocumentState>,
    n_dk: Vec<u32>,
    n_kw: Vec<u32>,
    n_k: Vec<u32>,
    averaged: Option<AveragedCounts>,
}

#[derive(Serialize, Deserialize)]
struct DocumentState {
    handle: String,
    words: Vec<u32>,
    topics: Vec<u32>,
}

impl LdaModel {
    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), LdaError> {
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            hyperparams: self.hp.clone(),
            vocab_size: self.vocab_size,
            vocab_hash: self.vocab_hash.clone(),
            documents: self
                .handles
                .iter()
                .zip(&self.docs)
                .zip(&self.z)
                .map(|((h, w), z)| DocumentState {
                    handle: h.clone(),
                    words: w.clone(),
                    topics: z.clone(),
                })
                .collect(),
            n_dk: self.n_dk.clone(),
            n_kw: self.n_kw.clone(),
            n_k: self.n_k.clone(),
            averaged: self.averaged.clone(),
        };
        serde_json::to_writer(writer, &file).map_err(|e| LdaError::Format(e.to_string()))
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self, LdaError> {
        let file: ModelFile = serde_json::from_reader(reader).map_err(|e| LdaError::Format(e.to_string()))?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(LdaError::Format(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        file.hyperparams.validate()?;
        let mut handles = Vec::with_capacity(file.documents.len());
        let mut docs = Vec::with_capacity(file.documents.len());
        let mut z = Vec::with_capacity(file.documents.len());
        for d in file.documents {
            handles.push(d.handle);
            docs.push(d.words);
            z.push(d.topics);
        }
        let k = file.hyperparams.k;
        let mut model = LdaModel::assemble(file.hyperparams, file.vocab_size, file.vocab_hash, handles, docs, z)?;
        if model.n_dk != file.n_dk || model.n_kw != file.n_kw || model.n_k != file.n_k {
            return Err(LdaError::Format("stored counts disagree with assignments".into()));
        }
        if let Some(avg) = &file.averaged {
            if avg.n_dk.len() != model.n_dk.len() || avg.n_kw.len() != model.n_kw.len() || avg.n_k.len() != k {
                return Err(LdaError::Format("averaged counts have the wrong shape".into()));
            }
        }
        model.averaged = file.averaged;
        Ok(model)
    }
}
