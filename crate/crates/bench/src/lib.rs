//! Workload builders shared by the criterion benches.

use sectorzero::corpus::{tokenize, Corpus, StopwordPolicy};
use sectorzero::enrich::{group_documents, DocsByClass};
use sectorzero::synthetic::generate_synthetic_corpus;
use sectorzero::taxonomy::{builtin_label_set, LabelSet, LabelVariant};

pub fn enriched_labels() -> LabelSet {
    builtin_label_set(LabelVariant::Enriched)
}

/// Seeded synthetic corpus with `per_class` records per sector.
pub fn corpus(per_class: usize) -> Corpus {
    generate_synthetic_corpus(&enriched_labels(), per_class, 42)
}

/// Stopword-filtered token lists grouped by gold sector.
pub fn grouped_docs(corpus: &Corpus) -> DocsByClass {
    group_documents(corpus, &StopwordPolicy::bundled())
}

/// Gold and predicted sector names for `n` records, about 70% correct.
pub fn label_pairs(labels: &LabelSet, n: usize) -> (Vec<String>, Vec<String>) {
    let k = labels.len();
    let name = |i: usize| labels.get(i % k).unwrap().gics_name.clone();
    let gold: Vec<String> = (0..n).map(name).collect();
    let pred = (0..n)
        .map(|i| if i % 10 < 7 { name(i) } else { name(i * 7 + 3) })
        .collect();
    (gold, pred)
}

pub fn long_description(words: usize) -> String {
    let base = tokenize("integrated producer of oil natural gas and petroleum products");
    (0..words)
        .map(|i| base[i % base.len()].as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_have_expected_sizes() {
        let c = corpus(3);
        assert_eq!(c.len(), 33);
        assert_eq!(grouped_docs(&c).len(), 11);
        let (g, p) = label_pairs(&enriched_labels(), 100);
        assert_eq!((g.len(), p.len()), (100, 100));
        assert_eq!(long_description(5).split(' ').count(), 5);
    }
}
