use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::documents::Document;
use super::tree::{parse_nary, BinaryTree};
use crate::error::{Error, Result};

/// Trees keyed by document id, plus the lines that failed to load.
#[derive(Debug, Default)]
pub struct Treebank {
    pub trees: BTreeMap<String, BinaryTree>,
    pub errors: Vec<(usize, String, Error)>,
}

impl Treebank {
    /// Drops trees whose leaf count disagrees with the paired document and
    /// records them as errors. Documents without a tree are left alone.
    pub fn check_against(&mut self, docs: &[Document]) {
        for doc in docs {
            if let Some(tree) = self.trees.get(&doc.doc_id) {
                let leaves = tree.num_leaves();
                if leaves != doc.num_edus() {
                    self.trees.remove(&doc.doc_id);
                    self.errors.push((
                        0,
                        doc.doc_id.clone(),
                        Error::invalid(format!(
                            "tree has {leaves} leaves, document has {} EDUs",
                            doc.num_edus()
                        )),
                    ));
                }
            }
        }
    }
}

/// Reads `doc_id<TAB>s-expression` lines; n-ary nodes are right-binarized.
/// Lines starting with `#` are comments. A bad line is recorded and skipped.
pub fn read_treebank(reader: impl BufRead) -> Result<Treebank> {
    let mut bank = Treebank::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Record {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((doc_id, sexpr)) = line.split_once('\t') else {
            bank.errors.push((
                line_no,
                String::new(),
                Error::Record {
                    line: line_no,
                    message: "expected doc_id<TAB>tree".into(),
                },
            ));
            continue;
        };
        match parse_nary(sexpr) {
            Ok(tree) => {
                bank.trees.insert(doc_id.to_string(), tree.right_binarize());
            }
            Err(e) => bank.errors.push((line_no, doc_id.to_string(), e)),
        }
    }
    Ok(bank)
}

pub fn load_gold_trees(path: impl AsRef<Path>) -> Result<Treebank> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_treebank(BufReader::new(file))
}

/// Writes a tree file, optionally preceded by `#`-prefixed header lines.
pub fn write_treebank<'a>(
    path: impl AsRef<Path>,
    header: &[String],
    trees: impl IntoIterator<Item = (&'a str, &'a BinaryTree)>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut text = String::new();
    for h in header {
        text.push_str("# ");
        text.push_str(h);
        text.push('\n');
    }
    for (id, tree) in trees {
        text.push_str(id);
        text.push('\t');
        text.push_str(&tree.to_string());
        text.push('\n');
    }
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}
