use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::documents::{tokenize, Document};
use super::vocab::Vocab;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Fixed word vectors with a shared vector for unknown tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    unknown: Vec<f64>,
    /// Word vectors are never updated by training while this is set.
    pub frozen: bool,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
            unknown: vec![0.0; dim],
            frozen: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::ShapeMismatch {
                op: "embedding",
                left: vec![self.dim],
                right: vec![vector.len()],
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "embedding" });
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn unknown(&self) -> &[f64] {
        &self.unknown
    }

    pub fn set_unknown(&mut self, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::ShapeMismatch {
                op: "embedding",
                left: vec![self.dim],
                right: vec![vector.len()],
            });
        }
        self.unknown = vector;
        Ok(())
    }

    /// Writes `token v1 ... vd` lines in lexicographic token order.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        let mut tokens: Vec<&String> = self.vectors.keys().collect();
        tokens.sort();
        for tok in tokens {
            let mut line = tok.clone();
            for v in &self.vectors[tok] {
                line.push(' ');
                line.push_str(&v.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Reads a whitespace-separated embedding file. When `vocab` is given, only
/// its tokens are kept. A leading `count dim` header line is skipped.
pub fn read_embeddings(reader: impl BufRead, vocab: Option<&Vocab>) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Record {
            line: line_no,
            message: e.to_string(),
        })?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if line_no == 1
            && values.len() == 1
            && token.parse::<usize>().is_ok()
            && values[0].parse::<usize>().is_ok()
        {
            continue;
        }
        if values.is_empty() {
            return Err(Error::Record {
                line: line_no,
                message: "token without vector".into(),
            });
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::new(values.len()));
        if vocab.is_some_and(|v| !v.contains(token)) {
            continue;
        }
        let vector = values
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Record {
                line: line_no,
                message: e.to_string(),
            })?;
        table.insert(token, vector).map_err(|e| Error::Record {
            line: line_no,
            message: e.to_string(),
        })?;
    }
    table.ok_or_else(|| Error::invalid("embedding file has no vectors"))
}

pub fn load_embeddings(path: impl AsRef<Path>, vocab: Option<&Vocab>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), vocab)
}

/// Mean word vector of an EDU over its first `max_words` tokens. Tokens
/// missing from the vocabulary or the table contribute the unknown vector.
pub fn embed_edu(
    tokens: &[String],
    table: &EmbeddingTable,
    vocab: &Vocab,
    max_words: usize,
) -> Tensor {
    let used = &tokens[..tokens.len().min(max_words)];
    if used.is_empty() {
        return Tensor::vector(table.unknown().to_vec());
    }
    let mut acc = vec![0.0; table.dim()];
    for tok in used {
        let v = if vocab.contains(tok) {
            table.get(tok).unwrap_or(table.unknown())
        } else {
            table.unknown()
        };
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let n = used.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Tensor::vector(acc)
}

/// A document with every EDU replaced by its embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedDocument {
    pub doc_id: String,
    pub sentences: Vec<Vec<Tensor>>,
    pub label: Option<u8>,
}

impl EmbeddedDocument {
    pub fn num_edus(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn sentence_sizes(&self) -> Vec<usize> {
        self.sentences.iter().map(Vec::len).collect()
    }
}

pub fn embed_document(
    doc: &Document,
    table: &EmbeddingTable,
    vocab: &Vocab,
    max_words: usize,
) -> EmbeddedDocument {
    EmbeddedDocument {
        doc_id: doc.doc_id.clone(),
        sentences: doc
            .sentences
            .iter()
            .map(|s| {
                s.iter()
                    .map(|edu| embed_edu(&tokenize(edu), table, vocab, max_words))
                    .collect()
            })
            .collect(),
        label: doc.label,
    }
}
