//! Account and tweet ingestion plus the sanitization filters applied before
//! any labeling: English-only, non-ephemeral, not spam-like.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Months, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum share of followers-to-friends below which an account is treated as spam-like.
pub const SPAM_RATIO: f64 = 0.1;

/// Months that must separate account creation from a later tweet.
pub const ACTIVE_MONTHS: u32 = 6;

/// Default minimum number of active followers a target account needs.
pub const DEFAULT_MIN_FOLLOWERS: usize = 200;

/// One account's public profile, laid out exactly as a line of the account JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountProfile {
    pub id: String,
    pub screen_name: String,
    #[serde(rename = "name")]
    pub display_name: String,
    pub description: String,
    pub url: Option<String>,
    #[serde(rename = "lang")]
    pub language: String,
    pub friends_count: u64,
    pub followers_count: u64,
    #[serde(rename = "statuses_count")]
    pub tweets_count: u64,
    #[serde(rename = "favourites_count")]
    pub favorites_count: u64,
    #[serde(rename = "listed_count")]
    pub list_memberships: u64,
    #[serde(rename = "protected")]
    pub is_protected: bool,
    pub geo_enabled: bool,
    pub created_at: DateTime<Utc>,
    pub last_tweet_at: Option<DateTime<Utc>>,
}

impl AccountProfile {
    pub fn has_url(&self) -> bool {
        self.url.as_deref().is_some_and(|u| !u.is_empty())
    }

    pub(crate) fn check(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if let Some(last) = self.last_tweet_at {
            if last < self.created_at {
                return Err(format!("{}: last tweet precedes creation", self.id));
            }
        }
        Ok(())
    }
}

/// A single tweet as stored in the tweets JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub account_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
}

/// Records read from a JSONL file and the number of lines that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SanitizationReport {
    pub input_count: usize,
    pub removed_non_english: usize,
    pub removed_ephemeral: usize,
    pub removed_spam_like: usize,
    pub output_count: usize,
}

impl SanitizationReport {
    pub fn removed(&self) -> usize {
        self.removed_non_english + self.removed_ephemeral + self.removed_spam_like
    }
}

fn read_jsonl_with<T, F>(path: &Path, mut validate: F) -> Result<Parsed<T>>
where
    T: DeserializeOwned,
    F: FnMut(&T) -> std::result::Result<(), String>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut skipped = 0;
    let mut total = 0;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match serde_json::from_str::<T>(&line) {
            Ok(rec) if validate(&rec).is_ok() => records.push(rec),
            _ => skipped += 1,
        }
    }
    if total > 0 && skipped * 2 > total {
        return Err(Error::Format {
            path: path.to_path_buf(),
            malformed: skipped,
            total,
        });
    }
    Ok(Parsed { records, skipped })
}

/// Reads account profiles from a JSONL file. Lines that fail to parse, violate
/// profile invariants, or repeat an earlier id are skipped and counted.
pub fn parse_account_records(path: impl AsRef<Path>) -> Result<Parsed<AccountProfile>> {
    let mut seen = HashSet::new();
    read_jsonl_with(path.as_ref(), |p: &AccountProfile| {
        p.check()?;
        if !seen.insert(p.id.clone()) {
            return Err(format!("duplicate id {}", p.id));
        }
        Ok(())
    })
}

pub fn parse_tweets(path: impl AsRef<Path>) -> Result<Parsed<Tweet>> {
    read_jsonl_with(path.as_ref(), |t: &Tweet| {
        if t.account_id.is_empty() {
            Err("empty account id".into())
        } else {
            Ok(())
        }
    })
}

/// Writes records one JSON object per line.
pub fn write_jsonl<'a, T, I>(path: impl AsRef<Path>, records: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// An account is non-ephemeral when it has any friends or followers and
/// tweeted at least six calendar months after it was created.
pub fn is_non_ephemeral(p: &AccountProfile) -> bool {
    if p.friends_count + p.followers_count == 0 {
        return false;
    }
    let Some(last) = p.last_tweet_at else {
        return false;
    };
    match p.created_at.checked_add_months(Months::new(ACTIVE_MONTHS)) {
        Some(cutoff) => last >= cutoff,
        None => false,
    }
}

/// Followers-to-friends ratio below 0.1. Accounts without friends have no
/// ratio and are never spam-like.
pub fn is_spam_like(p: &AccountProfile) -> bool {
    p.friends_count > 0 && (p.followers_count as f64) / (p.friends_count as f64) < SPAM_RATIO
}

/// Keeps English, non-ephemeral, non-spam accounts in input order.
pub fn sanitize(accounts: &[AccountProfile]) -> (Vec<AccountProfile>, SanitizationReport) {
    let mut report = SanitizationReport {
        input_count: accounts.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(accounts.len());
    for p in accounts {
        if p.language != "en" {
            report.removed_non_english += 1;
        } else if !is_non_ephemeral(p) {
            report.removed_ephemeral += 1;
        } else if is_spam_like(p) {
            report.removed_spam_like += 1;
        } else {
            kept.push(p.clone());
        }
    }
    report.output_count = kept.len();
    (kept, report)
}

/// True when an account survives every sanitization filter.
pub fn is_active(p: &AccountProfile) -> bool {
    p.language == "en" && is_non_ephemeral(p) && !is_spam_like(p)
}

/// Drops targets with fewer than `min_followers` active followers.
pub fn filter_target_accounts<T>(targets: Vec<(T, usize)>, min_followers: usize) -> Vec<(T, usize)> {
    targets
        .into_iter()
        .filter(|(_, n)| *n >= min_followers)
        .collect()
}
