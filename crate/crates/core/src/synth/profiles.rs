use std::io::Write;

use chrono::{DateTime, Duration, Months, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use super::{flush_csv, SynthConfig};
use crate::error::Result;
use crate::ingest::AccountProfile;
use crate::namekb::{name_parts, AnonymityLabel, NameKnowledgeBase};
use crate::seeds;

/// How a generated display name was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NameStyle {
    /// `First Last`, or a lone name part for partially anonymous profiles.
    Plain,
    MiddleInitial,
    MiddleName,
    /// Name parts run together in one handle, e.g. `marysmith` or `mary_zorvek`.
    Concatenated,
    /// Anonymous profile named with dictionary words that are also listed names.
    CommonWord,
    /// No name at all.
    Handle,
}

impl NameStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            NameStyle::Plain => "plain",
            NameStyle::MiddleInitial => "middle_initial",
            NameStyle::MiddleName => "middle_name",
            NameStyle::Concatenated => "concatenated",
            NameStyle::CommonWord => "common_word",
            NameStyle::Handle => "handle",
        }
    }
}

/// Which sanitization filter, if any, the profile was built to trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Noise {
    None,
    NonEnglish,
    Ephemeral,
    Spam,
}

impl Noise {
    pub fn as_str(self) -> &'static str {
        match self {
            Noise::None => "none",
            Noise::NonEnglish => "non_english",
            Noise::Ephemeral => "ephemeral",
            Noise::Spam => "spam",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthProfile {
    pub profile: AccountProfile,
    pub label: AnonymityLabel,
    pub style: NameStyle,
    pub noise: Noise,
}

/// Per-label counter parameters, in `AnonymityLabel::ALL` order
/// (Identifiable, PartiallyAnonymous, Anonymous, Unclassifiable).
struct LabelParams {
    /// ln(followers) ~ N(mu, 1.4)
    followers_mu: f64,
    /// ln(friends / followers) ~ N(mu, 0.8)
    friends_ratio_mu: f64,
    /// ln(tweets) ~ N(mu, 1.6)
    tweets_mu: f64,
    /// ln(favorites) ~ N(mu, 2.0)
    favorites_mu: f64,
    /// ln(lists) ~ N(mu, 1.0)
    lists_mu: f64,
    p_protected: f64,
    p_geo: f64,
    p_url: f64,
}

const PARAMS: [LabelParams; 4] = [
    LabelParams { followers_mu: 5.2, friends_ratio_mu: -0.1, tweets_mu: 6.0, favorites_mu: 4.5, lists_mu: 1.2, p_protected: 0.06, p_geo: 0.40, p_url: 0.35 },
    LabelParams { followers_mu: 4.9, friends_ratio_mu: 0.0, tweets_mu: 6.3, favorites_mu: 5.0, lists_mu: 0.8, p_protected: 0.08, p_geo: 0.30, p_url: 0.25 },
    LabelParams { followers_mu: 4.3, friends_ratio_mu: 0.3, tweets_mu: 6.8, favorites_mu: 5.6, lists_mu: 0.4, p_protected: 0.15, p_geo: 0.20, p_url: 0.0 },
    LabelParams { followers_mu: 5.6, friends_ratio_mu: -0.4, tweets_mu: 6.5, favorites_mu: 4.8, lists_mu: 1.5, p_protected: 0.05, p_geo: 0.30, p_url: 1.0 },
];

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwz";
const VOWELS: &[u8] = b"aeiou";
const OTHER_LANGUAGES: [&str; 5] = ["es", "fr", "pt", "ja", "de"];

struct Lists<'a> {
    first: Vec<&'a str>,
    first_w: WeightedIndex<f64>,
    last: Vec<&'a str>,
    last_w: WeightedIndex<f64>,
    common_first: Vec<&'a str>,
    common_last: Vec<&'a str>,
    words: Vec<&'a str>,
}

impl<'a> Lists<'a> {
    fn new(kb: &'a NameKnowledgeBase) -> Self {
        let weighted = |v: Vec<(&'a str, u32)>| {
            let w = WeightedIndex::new(v.iter().map(|(_, r)| 1.0 / *r as f64)).expect("nonempty name list");
            (v.into_iter().map(|(n, _)| n).collect::<Vec<_>>(), w)
        };
        let (first, first_w) = weighted(kb.first_names_by_rank());
        let (last, last_w) = weighted(kb.last_names_by_rank());
        let common_first = first.iter().copied().filter(|t| kb.is_scrabble_word(t)).collect();
        let common_last = last.iter().copied().filter(|t| kb.is_scrabble_word(t)).collect();
        let words = kb.scrabble_words().into_iter().filter(|w| !kb.is_name(w) && w.len() >= 3).collect();
        Lists { first, first_w, last, last_w, common_first, common_last, words }
    }

    fn first<R: Rng>(&self, rng: &mut R) -> &'a str {
        self.first[self.first_w.sample(rng)]
    }

    fn last<R: Rng>(&self, rng: &mut R) -> &'a str {
        self.last[self.last_w.sample(rng)]
    }
}

fn title(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn pronounceable<R: Rng>(rng: &mut R, kb: &NameKnowledgeBase) -> String {
    loop {
        let syllables = rng.random_range(2..=3);
        let mut s = String::new();
        for _ in 0..syllables {
            s.push(*CONSONANTS.choose(rng).unwrap() as char);
            s.push(*VOWELS.choose(rng).unwrap() as char);
        }
        if rng.random_bool(0.4) {
            s.push(*CONSONANTS.choose(rng).unwrap() as char);
        }
        if !kb.is_name(&s) {
            return s;
        }
    }
}

fn handle_name<R: Rng>(rng: &mut R, kb: &NameKnowledgeBase, lists: &Lists) -> String {
    loop {
        let name = match rng.random_range(0..5) {
            0 => title(&pronounceable(rng, kb)),
            1 => format!("{}{}", lists.words.choose(rng).unwrap(), lists.words.choose(rng).unwrap()),
            2 => format!("xX{}Xx", pronounceable(rng, kb)),
            3 => format!("{}{:02}", pronounceable(rng, kb), rng.random_range(0..100)),
            _ => format!("{} {}", title(lists.words.choose(rng).unwrap()), title(lists.words.choose(rng).unwrap())),
        };
        if !name_parts(&name).iter().any(|p| kb.is_name(p)) {
            return name;
        }
    }
}

fn display_name<R: Rng>(
    rng: &mut R,
    kb: &NameKnowledgeBase,
    lists: &Lists,
    label: AnonymityLabel,
    cfg: &SynthConfig,
) -> (String, NameStyle) {
    use AnonymityLabel::*;
    match label {
        Identifiable => {
            let (f, l) = (lists.first(rng), lists.last(rng));
            if rng.random_bool(cfg.concatenated_fraction) {
                let sep = if rng.random_bool(0.5) { "_" } else { "" };
                return (format!("{f}{sep}{l}"), NameStyle::Concatenated);
            }
            match rng.random_range(0..20) {
                0..15 => (format!("{} {}", title(f), title(l)), NameStyle::Plain),
                15..18 => {
                    let initial = (b'A' + rng.random_range(0..26u8)) as char;
                    (format!("{} {initial} {}", title(f), title(l)), NameStyle::MiddleInitial)
                }
                _ => {
                    let m = lists.first(rng);
                    (format!("{} {} {}", title(f), title(m), title(l)), NameStyle::MiddleName)
                }
            }
        }
        PartiallyAnonymous => {
            let use_first = rng.random_bool(0.6);
            let name = if use_first { lists.first(rng) } else { lists.last(rng) };
            let other = pronounceable(rng, kb);
            if rng.random_bool(cfg.concatenated_fraction) {
                let joined = if use_first { format!("{name}{other}") } else { format!("{other}{name}") };
                return (joined, NameStyle::Concatenated);
            }
            match rng.random_range(0..3) {
                0 => (title(name), NameStyle::Plain),
                1 if use_first => (format!("{} {}", title(name), title(&other)), NameStyle::Plain),
                _ if use_first => (title(name), NameStyle::Plain),
                _ => (format!("{} {}", title(&other), title(name)), NameStyle::Plain),
            }
        }
        Anonymous if rng.random_bool(cfg.adversarial_fraction) => {
            let f = *lists.common_first.choose(rng).expect("common-word first names");
            let l = loop {
                let l = *lists.common_last.choose(rng).expect("common-word last names");
                if l != f {
                    break l;
                }
            };
            let name = if rng.random_bool(0.5) { format!("{} {}", title(f), title(l)) } else { format!("{f} {l}") };
            (name, NameStyle::CommonWord)
        }
        Anonymous | Unclassifiable => (handle_name(rng, kb, lists), NameStyle::Handle),
    }
}

fn screen_name(display: &str, i: usize) -> String {
    let base: String = display
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
        .take(12)
        .collect::<String>()
        .to_lowercase();
    format!("{base}{i}")
}

fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2008, 1, 1, 0, 0, 0).unwrap()
}

fn generate_one<R: Rng>(
    rng: &mut R,
    kb: &NameKnowledgeBase,
    lists: &Lists,
    cfg: &SynthConfig,
    id: String,
    index: usize,
    label: AnonymityLabel,
) -> SynthProfile {
    let li = AnonymityLabel::ALL.iter().position(|l| *l == label).unwrap();
    let p = &PARAMS[li];
    let (display, style) = display_name(rng, kb, lists, label, cfg);

    let noise_draw: f64 = rng.random();
    let noise = if noise_draw < cfg.non_english_fraction {
        Noise::NonEnglish
    } else if noise_draw < cfg.non_english_fraction + cfg.ephemeral_fraction {
        Noise::Ephemeral
    } else if noise_draw < cfg.non_english_fraction + cfg.ephemeral_fraction + cfg.spam_fraction {
        Noise::Spam
    } else {
        Noise::None
    };

    let lognormal = |rng: &mut R, mu: f64, sigma: f64| LogNormal::new(mu, sigma).unwrap().sample(rng);
    let followers_f = lognormal(rng, p.followers_mu, 1.4).max(1.0);
    let followers = followers_f.floor() as u64;
    let ratio = Normal::new(p.friends_ratio_mu, 0.8).unwrap().sample(rng).exp();
    let friends = if noise == Noise::Spam {
        (followers + 1) * rng.random_range(11..40) + 50
    } else {
        // Keep ordinary accounts clear of the spam rule.
        ((followers_f * ratio).floor() as u64).min(followers * 9)
    };
    let tweets_count = lognormal(rng, p.tweets_mu, 1.6).floor() as u64;
    let favorites_count = lognormal(rng, p.favorites_mu, 2.0).floor() as u64;
    let list_memberships = (lognormal(rng, p.lists_mu, 1.0) - 1.0).max(0.0).floor() as u64;
    let is_protected = rng.random_bool(p.p_protected);
    let geo_enabled = rng.random_bool(p.p_geo);
    let screen = screen_name(&display, index);
    let url = rng.random_bool(p.p_url).then(|| format!("https://example.com/{screen}"));

    let created_at = epoch() + Duration::days(rng.random_range(0..2600)) + Duration::seconds(rng.random_range(0..86_400));
    let last_tweet_at = if noise == Noise::Ephemeral {
        rng.random_bool(0.5)
            .then(|| created_at + Duration::days(rng.random_range(0..150)))
    } else {
        let months = Months::new(rng.random_range(7..=72));
        Some(created_at.checked_add_months(months).unwrap() + Duration::days(rng.random_range(0..28)))
    };
    let language = match noise {
        Noise::NonEnglish => OTHER_LANGUAGES.choose(rng).unwrap().to_string(),
        _ => "en".to_string(),
    };

    SynthProfile {
        profile: AccountProfile {
            id,
            screen_name: screen,
            display_name: display,
            description: String::new(),
            url,
            language,
            friends_count: friends,
            followers_count: followers,
            tweets_count,
            favorites_count,
            list_memberships,
            is_protected,
            geo_enabled,
            created_at,
            last_tweet_at,
        },
        label,
        style,
        noise,
    }
}

/// `n` profiles with ids `{prefix}{index:06}` drawn from the config's label mix.
pub(crate) fn generate_profile_set(
    kb: &NameKnowledgeBase,
    cfg: &SynthConfig,
    n: usize,
    prefix: &str,
    seed: u64,
) -> Result<Vec<SynthProfile>> {
    cfg.validate()?;
    let lists = Lists::new(kb);
    if cfg.adversarial_fraction > 0.0 && (lists.common_first.is_empty() || lists.common_last.is_empty()) {
        return Err(crate::Error::Config(
            "adversarial names need first and last names that are also dictionary words".into(),
        ));
    }
    let mix = WeightedIndex::new(cfg.label_mix).map_err(|e| crate::Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| {
            let label = AnonymityLabel::ALL[mix.sample(&mut rng)];
            generate_one(&mut rng, kb, &lists, cfg, format!("{prefix}{i:06}"), i, label)
        })
        .collect())
}

/// Labeled training profiles, `cfg.n_profiles` of them.
pub fn generate_profiles(kb: &NameKnowledgeBase, cfg: &SynthConfig) -> Result<Vec<SynthProfile>> {
    generate_profile_set(kb, cfg, cfg.n_profiles, "u", seeds::derive(cfg.seed, 10))
}

/// The accounts that follow targets, `cfg.follower_pool` of them.
pub fn generate_follower_pool(kb: &NameKnowledgeBase, cfg: &SynthConfig) -> Result<Vec<SynthProfile>> {
    generate_profile_set(kb, cfg, cfg.follower_pool, "f", seeds::derive(cfg.seed, 11))
}

/// `id,label,name_style,noise`
pub fn write_profile_truth_csv<W: Write>(out: W, profiles: &[SynthProfile]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["id", "label", "name_style", "noise"])?;
    for p in profiles {
        csv.write_record([p.profile.id.as_str(), p.label.as_str(), p.style.as_str(), p.noise.as_str()])?;
    }
    flush_csv(csv, "<profile truth>")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::namekb::baseline_namelist_label;

    fn cfg(n: usize) -> SynthConfig {
        SynthConfig { n_profiles: n, ..Default::default() }
    }

    #[test]
    fn deterministic_and_valid() {
        let kb = NameKnowledgeBase::builtin();
        let a = generate_profiles(&kb, &cfg(300)).unwrap();
        assert_eq!(a, generate_profiles(&kb, &cfg(300)).unwrap());
        for p in &a {
            p.profile.check().unwrap();
            if p.label == AnonymityLabel::Anonymous {
                assert!(!p.profile.has_url());
            }
            if p.label == AnonymityLabel::Unclassifiable {
                assert!(p.profile.has_url());
            }
        }
        let other = generate_profiles(&kb, &SynthConfig { seed: 1, ..cfg(300) }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn plain_identifiable_is_identified_by_baseline() {
        let kb = NameKnowledgeBase::builtin();
        let c = SynthConfig { label_mix: [1.0, 0.0, 0.0, 0.0], concatenated_fraction: 0.0, ..cfg(500) };
        for p in generate_profiles(&kb, &c).unwrap() {
            assert_eq!(baseline_namelist_label(&kb, &p.profile), AnonymityLabel::Identifiable, "{}", p.profile.display_name);
        }
    }

    #[test]
    fn adversarial_names_fool_the_baseline() {
        let kb = NameKnowledgeBase::builtin();
        let c = SynthConfig { label_mix: [0.0, 0.0, 1.0, 0.0], adversarial_fraction: 1.0, ..cfg(200) };
        for p in generate_profiles(&kb, &c).unwrap() {
            assert_eq!(p.label, AnonymityLabel::Anonymous);
            assert_eq!(p.style, NameStyle::CommonWord);
            assert_eq!(baseline_namelist_label(&kb, &p.profile), AnonymityLabel::Identifiable);
        }
    }

    #[test]
    fn partial_profiles_have_one_name() {
        let kb = NameKnowledgeBase::builtin();
        let c = SynthConfig { label_mix: [0.0, 1.0, 0.0, 0.0], concatenated_fraction: 0.0, ..cfg(300) };
        for p in generate_profiles(&kb, &c).unwrap() {
            let b = baseline_namelist_label(&kb, &p.profile);
            assert_eq!(b, AnonymityLabel::PartiallyAnonymous, "{}", p.profile.display_name);
        }
    }

    #[test]
    fn handles_have_no_listed_names() {
        let kb = NameKnowledgeBase::builtin();
        let c = SynthConfig { label_mix: [0.0, 0.0, 0.5, 0.5], adversarial_fraction: 0.0, ..cfg(300) };
        for p in generate_profiles(&kb, &c).unwrap() {
            assert_eq!(baseline_namelist_label(&kb, &p.profile), p.label, "{}", p.profile.display_name);
        }
    }
}
