use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenize::Tokenizer;
use crate::error::{Error, Result};
use crate::ingest::Tweet;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Self {
        let mut v = Vocabulary::default();
        for t in tokens {
            v.intern(&t);
        }
        v
    }

    pub fn intern(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        i
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One account's document: its token sequence in reading order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub group: String,
    pub tokens: Vec<usize>,
}

impl Document {
    /// `(word, count)` pairs sorted by word index.
    pub fn counts(&self) -> Vec<(usize, u32)> {
        let mut m: BTreeMap<usize, u32> = BTreeMap::new();
        for &t in &self.tokens {
            *m.entry(t).or_default() += 1;
        }
        m.into_iter().collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
}

impl Corpus {
    /// Builds a corpus from already-tokenized documents `(id, group, tokens)`,
    /// dropping empty ones.
    pub fn from_token_lists<I, S>(docs: I) -> Self
    where
        I: IntoIterator<Item = (String, String, Vec<S>)>,
        S: AsRef<str>,
    {
        let mut corpus = Corpus::default();
        for (id, group, toks) in docs {
            let tokens: Vec<usize> = toks.iter().map(|t| corpus.vocabulary.intern(t.as_ref())).collect();
            if !tokens.is_empty() {
                corpus.documents.push(Document { id, group, tokens });
            }
        }
        corpus
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }

    pub fn group_size(&self, group: &str) -> usize {
        self.documents.iter().filter(|d| d.group == group).count()
    }

    /// Documents at `indices` with the vocabulary restricted to the words they
    /// use, keeping the original relative word order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        let mut used = vec![false; self.vocabulary.len()];
        for &i in indices {
            for &t in &self.documents[i].tokens {
                used[t] = true;
            }
        }
        let mut remap = vec![usize::MAX; used.len()];
        let mut vocabulary = Vocabulary::default();
        for (old, _) in used.iter().enumerate().filter(|(_, u)| **u) {
            remap[old] = vocabulary.intern(self.vocabulary.token(old));
        }
        let documents = indices
            .iter()
            .map(|&i| {
                let d = &self.documents[i];
                Document {
                    id: d.id.clone(),
                    group: d.group.clone(),
                    tokens: d.tokens.iter().map(|&t| remap[t]).collect(),
                }
            })
            .collect();
        Corpus { documents, vocabulary }
    }

    /// Documents of `group` only, shuffled by `seed` and re-tagged so the first
    /// half is `tag_a` and the rest `tag_b`.
    pub fn split_group(&self, group: &str, tag_a: &str, tag_b: &str, seed: u64) -> Corpus {
        let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.documents[i].group == group).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let half = idx.len() / 2;
        let mut sub = self.subset(&idx);
        for (k, d) in sub.documents.iter_mut().enumerate() {
            d.group = if k < half { tag_a } else { tag_b }.to_string();
        }
        sub
    }
}

/// An account whose document had no tokens left after preprocessing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedDocument {
    pub account_id: String,
    pub tweets_seen: usize,
}

/// One document per account from its most recent `max_tweets` tweets, read
/// oldest to newest. `accounts` pairs each account id with its group tag.
pub fn build_documents(
    accounts: &[(String, String)],
    tweets: &[Tweet],
    max_tweets: usize,
    tokenizer: &Tokenizer,
) -> Result<(Corpus, Vec<DroppedDocument>)> {
    let mut by_account: HashMap<&str, Vec<&Tweet>> = HashMap::new();
    for t in tweets {
        by_account.entry(t.account_id.as_str()).or_default().push(t);
    }
    let mut docs = Vec::with_capacity(accounts.len());
    let mut dropped = Vec::new();
    for (id, group) in accounts {
        let mut mine = by_account.remove(id.as_str()).unwrap_or_default();
        // Newest first, stable on ties, then keep the newest `max_tweets`.
        mine.sort_by_key(|t| std::cmp::Reverse(t.created_at));
        mine.truncate(max_tweets);
        mine.reverse();
        let tokens: Vec<String> = mine.iter().flat_map(|t| tokenizer.tokenize(&t.text)).collect();
        if tokens.is_empty() {
            dropped.push(DroppedDocument {
                account_id: id.clone(),
                tweets_seen: mine.len(),
            });
        } else {
            docs.push((id.clone(), group.clone(), tokens));
        }
    }
    let corpus = Corpus::from_token_lists(docs);
    if corpus.is_empty() {
        return Err(Error::invalid("no account has any usable tokens"));
    }
    Ok((corpus, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};

    fn tweet(id: &str, minute: i64, text: &str) -> Tweet {
        Tweet {
            account_id: id.into(),
            created_at: Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap() + Duration::minutes(minute),
            text: text.into(),
        }
    }

    #[test]
    fn most_recent_tweets_only() {
        let tweets: Vec<Tweet> = (0..300).map(|i| tweet("a", i, &format!("word{i:03}x"))).collect();
        let (c, dropped) = build_documents(&[("a".into(), "S".into())], &tweets, 200, &Tokenizer::default()).unwrap();
        assert!(dropped.is_empty());
        let doc = &c.documents[0];
        assert_eq!(doc.tokens.len(), 200);
        assert_eq!(c.vocabulary.token(doc.tokens[0]), "word100x");
        assert_eq!(c.vocabulary.token(*doc.tokens.last().unwrap()), "word299x");
    }

    #[test]
    fn silent_accounts_are_dropped() {
        let tweets = vec![tweet("a", 0, "hello world")];
        let accounts = [("a".to_string(), "S".to_string()), ("b".to_string(), "N".to_string())];
        let (c, dropped) = build_documents(&accounts, &tweets, 200, &Tokenizer::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(dropped, vec![DroppedDocument { account_id: "b".into(), tweets_seen: 0 }]);
        assert!(build_documents(&accounts[1..], &tweets, 200, &Tokenizer::default()).is_err());
    }

    #[test]
    fn disjoint_documents_have_disjoint_support() {
        let tweets = vec![tweet("a", 0, "apple banana"), tweet("b", 0, "cherry damson")];
        let accounts = [("a".to_string(), "S".to_string()), ("b".to_string(), "N".to_string())];
        let (c, _) = build_documents(&accounts, &tweets, 200, &Tokenizer::default()).unwrap();
        let a: Vec<usize> = c.documents[0].counts().iter().map(|x| x.0).collect();
        let b: Vec<usize> = c.documents[1].counts().iter().map(|x| x.0).collect();
        assert!(a.iter().all(|w| !b.contains(w)));
    }

    #[test]
    fn subset_reindexes_vocabulary() {
        let c = Corpus::from_token_lists(vec![
            ("a".to_string(), "g".to_string(), vec!["x", "y"]),
            ("b".to_string(), "g".to_string(), vec!["z", "y"]),
        ]);
        let s = c.subset(&[1]);
        assert_eq!(s.vocabulary.tokens(), ["y", "z"]);
        assert_eq!(s.documents[0].tokens, vec![1, 0]);
    }
}
