use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::search::SearchHit;
use super::{truncate_chars, ToolkitError};

const SNIPPET_CHARS: usize = 600;

/// A corpus document as stored in the JSONL source files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Okapi BM25 over lowercase alphanumeric tokens of title and text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    params: Bm25Params,
    docs: Vec<Document>,
    doc_len: Vec<u32>,
    avg_len: f64,
    /// term -> (doc index, term frequency), ascending by doc index
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

pub(crate) fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

impl Bm25Index {
    pub fn build(docs: Vec<Document>, params: Bm25Params) -> Self {
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut doc_len = Vec::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            let mut len = 0u32;
            for tok in tokenize(&doc.title).chain(tokenize(&doc.text)) {
                *tf.entry(tok).or_default() += 1;
                len += 1;
            }
            doc_len.push(len);
            for (term, n) in tf {
                postings.entry(term).or_default().push((i as u32, n));
            }
        }
        let avg_len = if docs.is_empty() {
            0.0
        } else {
            doc_len.iter().map(|&l| l as f64).sum::<f64>() / docs.len() as f64
        };
        Self {
            params,
            docs,
            doc_len,
            avg_len,
            postings,
        }
    }

    /// Build from every `*.jsonl` file in `dir`, read in file-name order.
    pub fn from_jsonl_dir(dir: &Path, params: Bm25Params) -> Result<Self, ToolkitError> {
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut docs = Vec::new();
        for path in paths {
            for line in fs::read_to_string(&path)?.lines() {
                if !line.trim().is_empty() {
                    docs.push(serde_json::from_str(line)?);
                }
            }
        }
        Ok(Self::build(docs, params))
    }

    pub fn save(&self, path: &Path) -> Result<(), ToolkitError> {
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ToolkitError> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.docs.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Top `k` documents sharing at least one term with `query`, by score
    /// descending and then doc id ascending.
    pub fn search(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, ToolkitError> {
        if self.docs.is_empty() {
            return Err(ToolkitError::EmptyIndex);
        }
        let mut terms: Vec<String> = tokenize(query).collect();
        terms.sort();
        terms.dedup();
        let Bm25Params { k1, b } = self.params;
        let mut scores: BTreeMap<u32, f64> = BTreeMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(list.len());
            for &(doc, tf) in list {
                let tf = tf as f64;
                let norm = 1.0 - b + b * self.doc_len[doc as usize] as f64 / self.avg_len.max(1e-9);
                *scores.entry(doc).or_default() += idf * tf * (k1 + 1.0) / (tf + k1 * norm);
            }
        }
        let mut hits: Vec<SearchHit> = scores
            .into_iter()
            .map(|(doc, score)| {
                let d = &self.docs[doc as usize];
                SearchHit {
                    doc_id: d.id.clone(),
                    title: d.title.clone(),
                    snippet: truncate_chars(&d.text, SNIPPET_CHARS).to_string(),
                    score,
                    url: None,
                }
            })
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
        hits.truncate(k);
        Ok(hits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            title: String::new(),
            text: text.into(),
        }
    }

    fn toy() -> Bm25Index {
        Bm25Index::build(
            vec![
                doc("a", "the cat sat on the mat"),
                doc("b", "greenland shark lives long"),
                doc("c", "a dog barked at the cat"),
            ],
            Bm25Params::default(),
        )
    }

    #[test]
    fn unique_term_ranks_its_doc_first() {
        let hits = toy().search("shark", 3).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].doc_id, "b");
    }

    #[test]
    fn no_overlap_is_empty() {
        assert!(toy().search("zebra", 3).unwrap().is_empty());
    }

    #[test]
    fn empty_index_errors() {
        let idx = Bm25Index::build(vec![], Bm25Params::default());
        assert!(matches!(idx.search("x", 1), Err(ToolkitError::EmptyIndex)));
    }

    #[test]
    fn ties_break_by_doc_id() {
        let idx = Bm25Index::build(
            vec![doc("z", "same words"), doc("m", "same words")],
            Bm25Params::default(),
        );
        let ids: Vec<_> = idx.search("same", 5).unwrap().into_iter().map(|h| h.doc_id).collect();
        assert_eq!(ids, ["m", "z"]);
    }

    #[test]
    fn matches_hand_computed_score() {
        // single doc "x y", query "x": N=1, df=1, idf=ln(1+0.5/1.5), tf=1, len=avg
        let idx = Bm25Index::build(vec![doc("d", "x y")], Bm25Params::default());
        let expected = (1.0f64 + 0.5 / 1.5).ln() * 2.2 / (1.0 + 1.2);
        let got = idx.search("x", 1).unwrap()[0].score;
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.json");
        let idx = toy();
        idx.save(&path).unwrap();
        assert_eq!(Bm25Index::load(&path).unwrap(), idx);
    }
}
