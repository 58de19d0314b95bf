//! Span precision against gold trees, branching baselines, the sentiment
//! probe and cosine retrieval.

mod baseline;
mod probe;
mod retrieval;
mod spans;

pub use baseline::{
    baseline_tree, expected_random_counts, expected_random_precision,
    expected_sentence_random_counts, sample_uniform_tree, span_probability, BaselineKind,
};
pub use probe::{
    majority_baseline, probe_train, random_baseline, ProbeConfig, ProbeModel, NUM_CLASSES,
};
pub use retrieval::{cosine, nearest_documents, Neighbor, Retrieval};
pub use spans::{
    micro_precision, scored_spans, tree_spans, DocError, DocSpanCounts, PrecisionReport, RootSpan,
    SpanSet,
};
