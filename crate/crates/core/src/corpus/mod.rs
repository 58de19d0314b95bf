//! Corpus ingestion: EDU-segmented documents, vocabularies, frozen word
//! embeddings and tree files.

mod documents;
mod embeddings;
mod tree;
mod treebank;
mod vocab;

pub use documents::{
    load_documents, parse_document_line, read_documents, stratified_split, tokenize,
    write_documents, Caps, Document, LoadedDocuments, DEFAULT_MAX_EDUS, DEFAULT_MAX_WORDS,
};
pub use embeddings::{
    embed_document, embed_edu, load_embeddings, read_embeddings, EmbeddedDocument, EmbeddingTable,
};
pub use tree::{parse_nary, parse_tree, serialize_tree, BinaryTree, NaryTree};
pub use treebank::{load_gold_trees, read_treebank, write_treebank, Treebank};
pub use vocab::{build_vocab, Vocab, DEFAULT_MIN_FREQ, DEFAULT_VOCAB_CAP, UNK};
