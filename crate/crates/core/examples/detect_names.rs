//! Name detection and the baseline name-list label for a few display names.
//!
//! cargo run --example detect_names -- "Mary J. Smith" "coolcat99"

use anonmine::features::{extract_features, FEATURE_NAMES, SENTINEL_RANK};
use anonmine::ingest::AccountProfile;
use chrono::{TimeZone, Utc};
use anonmine::namekb::{baseline_namelist_label, detect_names, matches_structural_constraint, NameKnowledgeBase};

fn main() {
    let kb = NameKnowledgeBase::builtin();
    let mut names: Vec<String> = std::env::args().skip(1).collect();
    if names.is_empty() {
        names = ["Mary J. Smith", "johnsmith", "Rose Bush", "Adam Mary Smith", "xx_dark_xx", "Mom of 3"]
            .map(String::from)
            .to_vec();
    }
    for name in &names {
        let d = detect_names(&kb, name);
        let first = d.first_name.as_ref().map_or("-".to_string(), |m| format!("{} (#{})", m.token, m.rank));
        let last = d.last_name.as_ref().map_or("-".to_string(), |m| format!("{} (#{})", m.token, m.rank));
        let profile = profile(name);
        let row = extract_features(&kb, &profile).to_row();
        println!("{name:?}");
        println!("  first {first}  last {last}  parts {}  scrabble words {}", d.name_part_count, d.scrabble_word_count);
        println!(
            "  structural {}  baseline {}",
            matches_structural_constraint(&kb, &d),
            baseline_namelist_label(&kb, &profile)
        );
        let name_features: Vec<String> = FEATURE_NAMES
            .iter()
            .zip(row)
            .filter(|(n, _)| n.contains("name") || n.contains("scrabble"))
            .map(|(n, v)| if v >= SENTINEL_RANK as f64 { format!("{n}=none") } else { format!("{n}={v}") })
            .collect();
        println!("  {}", name_features.join("  "));
    }
}

fn profile(name: &str) -> AccountProfile {
    AccountProfile {
        id: "1".into(),
        screen_name: "example".into(),
        display_name: name.into(),
        description: String::new(),
        url: None,
        language: "en".into(),
        friends_count: 120,
        followers_count: 80,
        tweets_count: 900,
        favorites_count: 40,
        list_memberships: 1,
        is_protected: false,
        geo_enabled: false,
        created_at: Utc.with_ymd_and_hms(2012, 3, 1, 0, 0, 0).unwrap(),
        last_tweet_at: None,
    }
}
