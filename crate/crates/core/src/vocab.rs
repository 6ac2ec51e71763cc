use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// A canonical API name paired with its vocabulary id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ApiToken {
    pub canonical: String,
    pub vocab_id: u32,
}

/// Bijection between canonical API names and dense ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: BTreeMap<String, u32>,
}

impl Vocabulary {
    /// Sorted, de-duplicated vocabulary so ids do not depend on corpus order.
    pub fn from_tokens<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> Self {
        let mut all: Vec<String> = tokens.into_iter().map(String::from).collect();
        all.sort();
        all.dedup();
        Self::from(all)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, canonical: &str) -> Option<u32> {
        self.ids.get(canonical).copied()
    }

    pub fn canonical(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn token(&self, canonical: &str) -> Option<ApiToken> {
        self.id(canonical).map(|vocab_id| ApiToken { canonical: canonical.into(), vocab_id })
    }

    /// Maps names to ids, dropping names outside the vocabulary.
    pub fn encode<S: AsRef<str>>(&self, names: &[S]) -> Vec<u32> {
        names.iter().filter_map(|n| self.id(n.as_ref())).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl From<Vec<String>> for Vocabulary {
    /// Ids follow list order; later duplicates are ignored.
    fn from(list: Vec<String>) -> Self {
        let mut v = Vocabulary::default();
        for t in list {
            if !v.ids.contains_key(&t) {
                v.ids.insert(t.clone(), v.tokens.len() as u32);
                v.tokens.push(t);
            }
        }
        v
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}
