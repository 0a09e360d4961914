//! Name and word knowledge bases, and the name-detection primitives shared by
//! the list-lookup baseline and feature extraction.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AccountProfile;

/// Shortest name accepted when scanning inside an unseparated word.
pub const MIN_SUBSTRING_LEN: usize = 3;

const BUILTIN_FIRST: &str = include_str!("../data/first_names.csv");
const BUILTIN_LAST: &str = include_str!("../data/last_names.csv");
const BUILTIN_SCRABBLE: &str = include_str!("../data/scrabble_words.txt");
const BUILTIN_FREQ: &str = include_str!("../data/word_freq.csv");

/// Degree of anonymity of an account profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnonymityLabel {
    Anonymous,
    PartiallyAnonymous,
    Identifiable,
    Unclassifiable,
}

impl AnonymityLabel {
    pub const ALL: [AnonymityLabel; 4] = [
        AnonymityLabel::Identifiable,
        AnonymityLabel::PartiallyAnonymous,
        AnonymityLabel::Anonymous,
        AnonymityLabel::Unclassifiable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnonymityLabel::Anonymous => "Anonymous",
            AnonymityLabel::PartiallyAnonymous => "PartiallyAnonymous",
            AnonymityLabel::Identifiable => "Identifiable",
            AnonymityLabel::Unclassifiable => "Unclassifiable",
        }
    }
}

impl fmt::Display for AnonymityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnonymityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnonymityLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown anonymity label {s:?}")))
    }
}

/// Ranked first/last name lists, a Scrabble word set, and corpus frequency ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameKnowledgeBase {
    first_names: HashMap<String, u32>,
    last_names: HashMap<String, u32>,
    scrabble_words: HashSet<String>,
    word_freq_ranks: HashMap<String, u32>,
}

fn parse_ranked(text: &str, origin: &Path) -> Result<HashMap<String, u32>> {
    let mut map: HashMap<String, u32> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        };
        let (token, rank) = line
            .rsplit_once([',', ':'])
            .ok_or_else(|| bad(format!("expected `name,rank`, got {line:?}")))?;
        let rank: u32 = rank
            .trim()
            .parse()
            .map_err(|_| bad(format!("rank {rank:?} is not an integer")))?;
        if rank == 0 {
            return Err(bad("ranks start at 1".into()));
        }
        let token = token.trim().to_lowercase();
        if token.is_empty() {
            continue;
        }
        map.entry(token)
            .and_modify(|r| *r = (*r).min(rank))
            .or_insert(rank);
    }
    Ok(map)
}

fn parse_words(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl NameKnowledgeBase {
    /// Builds a knowledge base from in-memory list contents in the file formats.
    pub fn from_lists(first: &str, last: &str, scrabble: &str, freq: &str) -> Result<Self> {
        let kb = NameKnowledgeBase {
            first_names: parse_ranked(first, Path::new("<first names>"))?,
            last_names: parse_ranked(last, Path::new("<last names>"))?,
            scrabble_words: parse_words(scrabble),
            word_freq_ranks: parse_ranked(freq, Path::new("<word frequencies>"))?,
        };
        kb.ensure_nonempty()?;
        Ok(kb)
    }

    /// The small lists bundled with the crate.
    pub fn builtin() -> Self {
        Self::from_lists(BUILTIN_FIRST, BUILTIN_LAST, BUILTIN_SCRABBLE, BUILTIN_FREQ)
            .expect("bundled name lists are well-formed")
    }

    /// Writes the bundled lists to `dir` using the standard file names.
    pub fn write_builtin(dir: &Path) -> Result<KbPaths> {
        let paths = KbPaths::in_dir(dir);
        for (path, body) in [
            (&paths.first_names, BUILTIN_FIRST),
            (&paths.last_names, BUILTIN_LAST),
            (&paths.scrabble_words, BUILTIN_SCRABBLE),
            (&paths.word_freq, BUILTIN_FREQ),
        ] {
            fs::write(path, body).map_err(|e| Error::io(path, e))?;
        }
        Ok(paths)
    }

    fn ensure_nonempty(&self) -> Result<()> {
        if self.first_names.is_empty() || self.last_names.is_empty() {
            return Err(Error::invalid("name lists must not be empty"));
        }
        Ok(())
    }

    pub fn first_rank(&self, token: &str) -> Option<u32> {
        self.first_names.get(token).copied()
    }

    pub fn last_rank(&self, token: &str) -> Option<u32> {
        self.last_names.get(token).copied()
    }

    pub fn is_scrabble_word(&self, token: &str) -> bool {
        self.scrabble_words.contains(token)
    }

    pub fn word_freq_rank(&self, token: &str) -> Option<u32> {
        self.word_freq_ranks.get(token).copied()
    }

    pub fn is_name(&self, token: &str) -> bool {
        self.first_names.contains_key(token) || self.last_names.contains_key(token)
    }

    /// First names sorted by rank, ties by token.
    pub fn first_names_by_rank(&self) -> Vec<(&str, u32)> {
        sorted_by_rank(&self.first_names)
    }

    pub fn last_names_by_rank(&self) -> Vec<(&str, u32)> {
        sorted_by_rank(&self.last_names)
    }

    /// Scrabble words in lexicographic order.
    pub fn scrabble_words(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.scrabble_words.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

fn sorted_by_rank(map: &HashMap<String, u32>) -> Vec<(&str, u32)> {
    let mut v: Vec<(&str, u32)> = map.iter().map(|(k, r)| (k.as_str(), *r)).collect();
    v.sort_unstable_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(b.0)));
    v
}

/// Locations of the four knowledge-base files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbPaths {
    pub first_names: std::path::PathBuf,
    pub last_names: std::path::PathBuf,
    pub scrabble_words: std::path::PathBuf,
    pub word_freq: std::path::PathBuf,
}

impl KbPaths {
    pub fn in_dir(dir: &Path) -> Self {
        KbPaths {
            first_names: dir.join("first_names.csv"),
            last_names: dir.join("last_names.csv"),
            scrabble_words: dir.join("scrabble_words.txt"),
            word_freq: dir.join("word_freq.csv"),
        }
    }
}

/// Loads a knowledge base from `name,rank` name lists, a one-word-per-line
/// Scrabble list, and a `word,rank` frequency list.
pub fn load_knowledge_base(
    first_path: impl AsRef<Path>,
    last_path: impl AsRef<Path>,
    scrabble_path: impl AsRef<Path>,
    freq_path: impl AsRef<Path>,
) -> Result<NameKnowledgeBase> {
    let (first_path, last_path) = (first_path.as_ref(), last_path.as_ref());
    let freq_path = freq_path.as_ref();
    let kb = NameKnowledgeBase {
        first_names: parse_ranked(&read(first_path)?, first_path)?,
        last_names: parse_ranked(&read(last_path)?, last_path)?,
        scrabble_words: parse_words(&read(scrabble_path.as_ref())?),
        word_freq_ranks: parse_ranked(&read(freq_path)?, freq_path)?,
    };
    kb.ensure_nonempty()?;
    Ok(kb)
}

pub fn load_kb_paths(paths: &KbPaths) -> Result<NameKnowledgeBase> {
    load_knowledge_base(
        &paths.first_names,
        &paths.last_names,
        &paths.scrabble_words,
        &paths.word_freq,
    )
}

/// A name found in the display name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameMatch {
    pub token: String,
    pub rank: u32,
    pub matched_as_substring: bool,
    /// Index of the display-name part the match was found in.
    pub part: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NameDetection {
    pub first_name: Option<NameMatch>,
    pub last_name: Option<NameMatch>,
    pub name_part_count: usize,
    pub scrabble_word_count: usize,
    /// Normalized parts of the display name.
    pub parts: Vec<String>,
}

impl NameDetection {
    pub fn names_found(&self) -> usize {
        self.first_name.is_some() as usize + self.last_name.is_some() as usize
    }
}

/// Lowercases, splits on whitespace, and strips non-alphabetic characters from
/// both ends of every part. Parts that strip to nothing are dropped.
pub fn name_parts(display_name: &str) -> Vec<String> {
    display_name
        .split_whitespace()
        .map(|p| p.to_lowercase().trim_matches(|c: char| !c.is_alphabetic()).to_string())
        .filter(|p| !p.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    First,
    Last,
}

fn slot_rank(kb: &NameKnowledgeBase, slot: Slot, token: &str) -> Option<u32> {
    match slot {
        Slot::First => kb.first_rank(token),
        Slot::Last => kb.last_rank(token),
    }
}

fn exact_matches(kb: &NameKnowledgeBase, parts: &[String]) -> (Option<NameMatch>, Option<NameMatch>) {
    let candidates = |slot: Slot| -> Vec<Option<NameMatch>> {
        let mut v: Vec<Option<NameMatch>> = parts
            .iter()
            .enumerate()
            .filter_map(|(i, t)| {
                slot_rank(kb, slot, t).map(|rank| {
                    Some(NameMatch {
                        token: t.clone(),
                        rank,
                        matched_as_substring: false,
                        part: i,
                    })
                })
            })
            .collect();
        v.push(None);
        v
    };
    let firsts = candidates(Slot::First);
    let lasts = candidates(Slot::Last);

    // Fill as many slots as possible, then prefer the most popular first name,
    // then the most popular last name, then the natural reading order.
    let key = |f: &Option<NameMatch>, l: &Option<NameMatch>| {
        let filled = f.is_some() as u8 + l.is_some() as u8;
        let fr = f.as_ref().map_or(u32::MAX, |m| m.rank);
        let lr = l.as_ref().map_or(u32::MAX, |m| m.rank);
        let fp = f.as_ref().map_or(usize::MAX, |m| m.part);
        let lp = l.as_ref().map_or(0, |m| m.part);
        let ft = f.as_ref().map_or("", |m| m.token.as_str()).to_string();
        let lt = l.as_ref().map_or("", |m| m.token.as_str()).to_string();
        (std::cmp::Reverse(filled), fr, lr, fp, std::cmp::Reverse(lp), ft, lt)
    };
    let mut best: Option<(&Option<NameMatch>, &Option<NameMatch>)> = None;
    for f in &firsts {
        for l in &lasts {
            if let (Some(a), Some(b)) = (f, l) {
                if a.part == b.part {
                    continue;
                }
            }
            best = match best {
                Some((bf, bl)) if key(bf, bl) <= key(f, l) => Some((bf, bl)),
                _ => Some((f, l)),
            };
        }
    }
    let (f, l) = best.expect("the empty assignment is always a candidate");
    (f.clone(), l.clone())
}

/// Span of a substring match inside a part.
#[derive(Debug, Clone)]
struct Span {
    m: NameMatch,
    start: usize,
    len: usize,
}

fn best_substring(
    kb: &NameKnowledgeBase,
    slot: Slot,
    parts: &[String],
    excluded_part: Option<usize>,
    blocked: Option<&Span>,
) -> Option<Span> {
    let mut best: Option<Span> = None;
    for (pi, part) in parts.iter().enumerate() {
        if Some(pi) == excluded_part {
            continue;
        }
        let chars: Vec<char> = part.chars().collect();
        let n = chars.len();
        for start in 0..n {
            for end in (start + MIN_SUBSTRING_LEN)..=n {
                if let Some(b) = blocked {
                    if b.m.part == pi && start < b.start + b.len && b.start < end {
                        continue;
                    }
                }
                let token: String = chars[start..end].iter().collect();
                let Some(rank) = slot_rank(kb, slot, &token) else {
                    continue;
                };
                let len = end - start;
                let better = match &best {
                    None => true,
                    Some(b) => (std::cmp::Reverse(len), rank, &token, pi, start)
                        < (std::cmp::Reverse(b.len), b.m.rank, &b.m.token, b.m.part, b.start),
                };
                if better {
                    best = Some(Span {
                        m: NameMatch {
                            token,
                            rank,
                            matched_as_substring: true,
                            part: pi,
                        },
                        start,
                        len,
                    });
                }
            }
        }
    }
    best
}

fn detect(kb: &NameKnowledgeBase, display_name: &str, substrings: bool) -> NameDetection {
    let parts = name_parts(display_name);
    let (mut first, mut last) = exact_matches(kb, &parts);

    if substrings && (first.is_none() || last.is_none()) {
        let first_span = if first.is_none() {
            let exclude = last.as_ref().map(|m| m.part);
            best_substring(kb, Slot::First, &parts, exclude, None)
        } else {
            None
        };
        if last.is_none() {
            let exclude = first.as_ref().map(|m| m.part);
            last = best_substring(kb, Slot::Last, &parts, exclude, first_span.as_ref()).map(|s| s.m);
        }
        if let Some(span) = first_span {
            first = Some(span.m);
        }
    }

    let scrabble_word_count = parts.iter().filter(|p| kb.is_scrabble_word(p)).count();
    NameDetection {
        first_name: first,
        last_name: last,
        name_part_count: parts.len(),
        scrabble_word_count,
        parts,
    }
}

/// Finds the most popular first and last names in a display name: exact part
/// matches first, then a substring scan inside unseparated words for any slot
/// still empty.
pub fn detect_names(kb: &NameKnowledgeBase, display_name: &str) -> NameDetection {
    detect(kb, display_name, true)
}

/// Exact part matches only.
pub fn detect_names_exact(kb: &NameKnowledgeBase, display_name: &str) -> NameDetection {
    detect(kb, display_name, false)
}

/// `First Last`, `First M Last`, or `First Middle Last` with both names
/// matched as whole parts in their positions.
pub fn matches_structural_constraint(kb: &NameKnowledgeBase, d: &NameDetection) -> bool {
    let (Some(first), Some(last)) = (&d.first_name, &d.last_name) else {
        return false;
    };
    if first.matched_as_substring || last.matched_as_substring {
        return false;
    }
    let n = d.name_part_count;
    if !(n == 2 || n == 3) || first.part != 0 || last.part != n - 1 {
        return false;
    }
    if n == 3 {
        let middle = &d.parts[1];
        return middle.chars().count() == 1 || kb.first_rank(middle).is_some();
    }
    true
}

/// The list-lookup baseline: exact part matches decide the label directly.
pub fn baseline_namelist_label(kb: &NameKnowledgeBase, p: &AccountProfile) -> AnonymityLabel {
    let d = detect_names_exact(kb, &p.display_name);
    match d.names_found() {
        2 => AnonymityLabel::Identifiable,
        1 => AnonymityLabel::PartiallyAnonymous,
        _ if p.has_url() => AnonymityLabel::Unclassifiable,
        _ => AnonymityLabel::Anonymous,
    }
}
