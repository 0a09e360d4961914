use std::collections::HashSet;

const DEFAULT_STOP_WORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Tweet tokenizer: drops URLs, mentions, the retweet marker, short tokens,
/// numbers and stop words; keeps hashtag words without the `#`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenizer {
    pub stop_words: HashSet<String>,
    pub min_len: usize,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer {
            stop_words: DEFAULT_STOP_WORDS
                .lines()
                .map(str::trim)
                .filter(|w| !w.is_empty())
                .map(String::from)
                .collect(),
            min_len: 3,
        }
    }
}

impl Tokenizer {
    pub fn with_stop_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        Tokenizer {
            stop_words: words.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for raw in text.split_whitespace() {
            let lower = raw.to_lowercase();
            if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
                continue;
            }
            if lower.starts_with('@') {
                continue;
            }
            let word = lower.trim_start_matches('#');
            if word.trim_matches(|c: char| !c.is_alphanumeric()) == "rt" {
                continue;
            }
            let cleaned: String = word.chars().filter(|c| *c != '\'' && *c != '\u{2019}').collect();
            for piece in cleaned.split(|c: char| !c.is_alphanumeric()) {
                if piece.chars().count() < self.min_len
                    || piece.chars().all(|c| c.is_numeric())
                    || self.stop_words.contains(piece)
                {
                    continue;
                }
                out.push(piece.to_string());
            }
        }
        out
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        assert_eq!(tokenize("Check http://t.co/x @bob #WeedLife"), ["check", "weedlife"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize("RT @a: ok").is_empty());
        assert_eq!(tokenize("Don't stop, 2015!! believing..."), ["stop", "believing"]);
        assert_eq!(tokenize("www.example.com HTTPS://X.Y 12345 abc123"), ["abc123"]);
    }

    #[test]
    fn stop_list_is_configurable() {
        let t = Tokenizer::with_stop_words(["check"]);
        assert_eq!(t.tokenize("check the weather"), ["the", "weather"]);
    }
}
