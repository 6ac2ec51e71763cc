//! TF-IDF keyword ranking with sequences as documents and API tokens as
//! words: `tf(t, doc) · ln((1 + N) / (1 + df(t)))`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::ln;

/// Document frequencies over a corpus of token documents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentFrequency {
    pub n_docs: usize,
    pub df: BTreeMap<String, usize>,
}

impl DocumentFrequency {
    pub fn build<D, T>(docs: D) -> Self
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator,
        T::Item: AsRef<str>,
    {
        let mut out = DocumentFrequency::default();
        for doc in docs {
            out.n_docs += 1;
            let distinct: BTreeSet<String> = doc.into_iter().map(|t| String::from(t.as_ref())).collect();
            for t in distinct {
                *out.df.entry(t).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn idf(&self, token: &str) -> f64 {
        let df = self.df.get(token).copied().unwrap_or(0);
        ln((1.0 + self.n_docs as f64) / (1.0 + df as f64))
    }
}

/// Top-`m` tokens of one document by TF-IDF, score descending, then raw
/// frequency, then lexicographic. An empty document yields an empty list.
pub fn tfidf_keywords<S: AsRef<str>>(tokens: &[S], corpus: &DocumentFrequency, m: usize) -> Vec<(String, f64)> {
    let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        *tf.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut scored: Vec<(String, usize, f64)> =
        tf.into_iter().map(|(t, count)| (String::from(t), count, count as f64 * corpus.idf(t))).collect();
    // Equal scores fall back to raw frequency so a degenerate idf (a token
    // in every document) still ranks by tf.
    scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(b.1.cmp(&a.1)).then_with(|| a.0.cmp(&b.0)));
    scored.into_iter().take(m).map(|(t, _, s)| (t, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn token_in_every_document_scores_zero() {
        let docs = [vec!["a", "b"], vec!["a"], vec!["a", "c"], vec!["a"]];
        let df = DocumentFrequency::build(docs.iter().map(|d| d.iter()));
        let kw = tfidf_keywords(&["a", "a", "a"], &df, 5);
        assert_eq!(kw, vec![(String::from("a"), 0.0)]);
    }

    #[test]
    fn single_document_ranks_by_raw_frequency() {
        let doc = ["x", "y", "y", "z", "z", "z"];
        let df = DocumentFrequency::build([doc.iter()]);
        let names: Vec<String> = tfidf_keywords(&doc, &df, 10).into_iter().map(|(t, _)| t).collect();
        assert_eq!(names, ["z", "y", "x"]);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn three_document_table() {
        // df: a=1 b=2 c=2 d=1, N=3; values computed by hand.
        let docs = [vec!["a", "a", "b"], vec!["b", "c"], vec!["c", "c", "c", "d"]];
        let df = DocumentFrequency::build(docs.iter().map(|d| d.iter()));
        let first = tfidf_keywords(&docs[0], &df, 10);
        assert_eq!(first[0].0, "a");
        assert!((first[0].1 - 1.3862943611198906).abs() < 1e-9);
        assert_eq!(first[1].0, "b");
        assert!((first[1].1 - 0.28768207245178085).abs() < 1e-9);
        let third = tfidf_keywords(&docs[2], &df, 10);
        assert_eq!(third[0].0, "c");
        assert!((third[0].1 - 0.8630462173553426).abs() < 1e-9);
        assert_eq!(third[1].0, "d");
        assert!((third[1].1 - 0.6931471805599453).abs() < 1e-9);
    }

    #[test]
    fn ties_break_lexicographically_and_truncate() {
        let df = DocumentFrequency::build([["q", "p", "r"].iter()]);
        let kw = tfidf_keywords(&["r", "q", "p"], &df, 2);
        assert_eq!(kw.iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>(), ["p", "q"]);
    }

    #[test]
    fn empty_document_has_no_keywords() {
        let df = DocumentFrequency::build([["a"].iter()]);
        assert!(tfidf_keywords::<&str>(&[], &df, 3).is_empty());
    }
}
