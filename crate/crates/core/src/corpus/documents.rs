use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_EDUS: usize = 150;
pub const DEFAULT_MAX_WORDS: usize = 50;

/// Truncation limits applied while loading.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub max_edus: usize,
    pub max_words: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_edus: DEFAULT_MAX_EDUS,
            max_words: DEFAULT_MAX_WORDS,
        }
    }
}

/// A pre-segmented document: sentences of EDU strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Vec<String>>,
    pub label: Option<u8>,
}

/// Lower-cased whitespace tokens of an EDU.
pub fn tokenize(edu: &str) -> Vec<String> {
    edu.split_whitespace().map(str::to_lowercase).collect()
}

impl Document {
    pub fn num_edus(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn sentence_sizes(&self) -> Vec<usize> {
        self.sentences.iter().map(Vec::len).collect()
    }

    pub fn edus(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }

    /// Applies the EDU and word caps in place. EDUs left without tokens and
    /// sentences left without EDUs are dropped.
    pub fn truncate(&mut self, caps: Caps) {
        let mut budget = caps.max_edus;
        let mut sentences = Vec::with_capacity(self.sentences.len());
        for sentence in std::mem::take(&mut self.sentences) {
            if budget == 0 {
                break;
            }
            let kept: Vec<String> = sentence
                .into_iter()
                .filter_map(|edu| {
                    let words: Vec<&str> = edu.split_whitespace().take(caps.max_words).collect();
                    (!words.is_empty()).then(|| words.join(" "))
                })
                .take(budget)
                .collect();
            budget -= kept.len();
            if !kept.is_empty() {
                sentences.push(kept);
            }
        }
        self.sentences = sentences;
    }
}

#[derive(Deserialize)]
struct Record {
    doc_id: String,
    sentences: Vec<Vec<String>>,
    #[serde(default)]
    label: Option<i64>,
}

/// Output of [`load_documents`].
#[derive(Debug, Clone, Default)]
pub struct LoadedDocuments {
    pub documents: Vec<Document>,
    /// Records that had no EDU text left after cleaning.
    pub skipped_empty: usize,
}

pub fn parse_document_line(line: &str, line_no: usize, caps: Caps) -> Result<Option<Document>> {
    let record: Record = serde_json::from_str(line).map_err(|e| Error::Record {
        line: line_no,
        message: e.to_string(),
    })?;
    let label = match record.label {
        None => None,
        Some(l @ 1..=5) => Some(l as u8),
        Some(l) => {
            return Err(Error::Record {
                line: line_no,
                message: format!("label {l} outside 1..5"),
            })
        }
    };
    let mut doc = Document {
        doc_id: record.doc_id,
        sentences: record.sentences,
        label,
    };
    doc.truncate(caps);
    Ok((doc.num_edus() > 0).then_some(doc))
}

/// Reads one JSON record per line. Blank lines are ignored.
pub fn read_documents(reader: impl BufRead, caps: Caps) -> Result<LoadedDocuments> {
    let mut out = LoadedDocuments::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_document_line(&line, i + 1, caps)? {
            Some(doc) => out.documents.push(doc),
            None => out.skipped_empty += 1,
        }
    }
    if out.skipped_empty > 0 {
        log::warn!("skipped {} empty documents", out.skipped_empty);
    }
    Ok(out)
}

pub fn load_documents(path: impl AsRef<Path>, caps: Caps) -> Result<LoadedDocuments> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_documents(BufReader::new(file), caps)
}

pub fn write_documents(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Length-stratified development split: documents are ordered by EDU count
/// and `dev_size` of them are taken at evenly spaced ranks.
pub fn stratified_split(docs: &[Document], dev_size: usize) -> (Vec<Document>, Vec<Document>) {
    let n = docs.len();
    let dev_size = dev_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (docs[i].num_edus(), i));
    let mut is_dev = vec![false; n];
    for k in 0..dev_size {
        is_dev[order[k * n / dev_size]] = true;
    }
    let (mut train, mut dev) = (Vec::new(), Vec::new());
    for (doc, dev_flag) in docs.iter().zip(is_dev) {
        if dev_flag {
            dev.push(doc.clone());
        } else {
            train.push(doc.clone());
        }
    }
    (train, dev)
}
