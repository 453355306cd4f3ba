//! Seeded synthetic company corpora for tests and demos.
//!
//! Every description embeds two to four distinct keywords taken from its
//! class's display name, surrounded by filler text that shares no token with
//! any label in the set.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{tokenize, CompanyRecord, Corpus, StopwordPolicy};
use crate::taxonomy::LabelSet;

const NAME_HEADS: &[&str] = &[
    "Ardent",
    "Bluefield",
    "Cobalt",
    "Dunmore",
    "Everly",
    "Fairhaven",
    "Granite",
    "Halcyon",
    "Ironwood",
    "Juniper",
    "Kestrel",
    "Larkspur",
    "Meridian",
    "Northgate",
    "Oakridge",
    "Pinecrest",
    "Quillon",
    "Redwater",
    "Silverton",
    "Tamarack",
    "Umber",
    "Vantage",
    "Westbrook",
    "Yarrow",
];

const NAME_TAILS: &[&str] = &[
    "Holdings",
    "Group",
    "Partners",
    "Enterprises",
    "Company",
    "Incorporated",
    "Ventures",
    "Works",
];

const OPENINGS: &[&str] = &[
    "{name} is a company active in",
    "Founded decades ago, {name} concentrates on",
    "{name} is a mid-sized firm whose business centres on",
    "Through several subsidiaries, {name} is engaged in",
    "{name} serves customers nationwide with a focus on",
];

const CLOSINGS: &[&str] = &[
    "for regional and national clients.",
    "across several markets.",
    "with a growing customer base.",
    "through a network of offices.",
    "under long-term agreements.",
];

fn label_keywords(labels: &LabelSet, policy: &StopwordPolicy) -> Vec<Vec<String>> {
    let per_label: Vec<Vec<String>> = labels
        .labels()
        .iter()
        .map(|l| {
            let mut seen = HashSet::new();
            policy
                .apply(&tokenize(&l.display_name))
                .into_iter()
                .filter(|t| seen.insert(t.clone()))
                .collect()
        })
        .collect();
    let mut owners: HashMap<&str, usize> = HashMap::new();
    for tokens in &per_label {
        for t in tokens {
            *owners.entry(t).or_default() += 1;
        }
    }
    // prefer tokens no other label uses, as long as two of them remain
    per_label
        .iter()
        .map(|tokens| {
            let unique: Vec<String> = tokens
                .iter()
                .filter(|t| owners[t.as_str()] == 1)
                .cloned()
                .collect();
            if unique.len() >= 2 {
                unique
            } else {
                tokens.clone()
            }
        })
        .collect()
}

fn clean<'a>(phrases: &[&'a str], banned: &HashSet<String>) -> Vec<&'a str> {
    phrases
        .iter()
        .copied()
        .filter(|p| {
            tokenize(&p.replace("{name}", ""))
                .iter()
                .all(|t| !banned.contains(t))
        })
        .collect()
}

fn join_keywords(words: &[String]) -> String {
    match words {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Builds `per_class` records for every label, class by class. Output is a
/// pure function of `(labels, per_class, seed)`.
pub fn generate_synthetic_corpus(labels: &LabelSet, per_class: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keywords = label_keywords(labels, &StopwordPolicy::bundled());
    let banned: HashSet<String> = labels
        .labels()
        .iter()
        .flat_map(|l| tokenize(&l.display_name))
        .collect();
    let openings = clean(OPENINGS, &banned);
    let closings = clean(CLOSINGS, &banned);
    let heads = clean(NAME_HEADS, &banned);
    let tails = clean(NAME_TAILS, &banned);

    let mut records = Vec::with_capacity(labels.len() * per_class);
    for (class, label) in labels.labels().iter().enumerate() {
        let pool = &keywords[class];
        for j in 0..per_class {
            let name = format!(
                "{} {}",
                heads[rng.random_range(0..heads.len())],
                tails[rng.random_range(0..tails.len())]
            );
            let upper = pool.len().min(4);
            let lower = upper.min(2);
            let n = if upper > lower {
                rng.random_range(lower..=upper)
            } else {
                upper
            };
            let mut picks = pool.clone();
            picks.shuffle(&mut rng);
            picks.truncate(n);
            let opening = openings[rng.random_range(0..openings.len())].replace("{name}", &name);
            let closing = closings[rng.random_range(0..closings.len())];
            records.push(CompanyRecord {
                id: format!("syn-{:03}-{:03}", class + 1, j + 1),
                name,
                description: format!("{opening} {} {closing}", join_keywords(&picks)),
                gold_sector: Some(label.gics_name.clone()),
            });
        }
    }
    Corpus::from_records(
        format!("synthetic(seed={seed}, per_class={per_class})"),
        records,
    )
    .expect("generated records are valid")
}
