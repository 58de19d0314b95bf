use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub doc_id: String,
    pub similarity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Retrieval {
    pub query: String,
    /// Most similar first.
    pub similar: Vec<Neighbor>,
    /// Least similar first.
    pub different: Vec<Neighbor>,
    /// Documents skipped for having a zero-norm encoding.
    pub excluded: Vec<String>,
}

/// Top-`k` most and least similar documents to `query` by cosine
/// similarity; equal similarities are ordered by doc_id.
pub fn nearest_documents(
    query: &str,
    encodings: &[(String, Vec<f64>)],
    k: usize,
) -> Result<Retrieval> {
    let Some((_, q)) = encodings.iter().find(|(id, _)| id == query) else {
        return Err(Error::invalid(format!(
            "query document `{query}` not found"
        )));
    };
    if q.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid(format!(
            "query document `{query}` has a zero encoding"
        )));
    }
    let mut excluded = Vec::new();
    let mut scored = Vec::with_capacity(encodings.len());
    for (id, e) in encodings {
        if id == query {
            continue;
        }
        if e.len() != q.len() {
            return Err(Error::ShapeMismatch {
                op: "nearest_documents",
                left: vec![q.len()],
                right: vec![e.len()],
            });
        }
        if e.iter().all(|&v| v == 0.0) {
            log::warn!("document {id} has a zero encoding and is skipped");
            excluded.push(id.clone());
            continue;
        }
        scored.push(Neighbor {
            doc_id: id.clone(),
            similarity: cosine(q, e),
        });
    }
    let by_id = |a: &Neighbor, b: &Neighbor| a.doc_id.cmp(&b.doc_id);
    let mut similar = scored.clone();
    similar.sort_by(|a, b| {
        b.similarity
            .partial_cmp(&a.similarity)
            .unwrap_or(Ordering::Equal)
            .then_with(|| by_id(a, b))
    });
    similar.truncate(k);
    let mut different = scored;
    different.sort_by(|a, b| {
        a.similarity
            .partial_cmp(&b.similarity)
            .unwrap_or(Ordering::Equal)
            .then_with(|| by_id(a, b))
    });
    different.truncate(k);
    Ok(Retrieval {
        query: query.to_string(),
        similar,
        different,
        excluded,
    })
}
