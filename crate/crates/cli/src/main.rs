use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sectorzero::corpus::{corpus_summary, write_corpus, CorpusFormat, StopwordPolicy};
use sectorzero::enrich::{
    fit_tfidf, group_documents, propose_enriched_labels, rank_all_classes, write_rankings_csv,
    DEFAULT_TOP_K,
};
use sectorzero::pipeline::{
    self, classify_stage, evaluate_stage, load_corpus, load_labels, run_pipeline, write_atomic,
    BackendKind, LabelSource, PipelineError, RunConfig, SystemClock, PREDICTIONS_FILE,
};
use sectorzero::synthetic::generate_synthetic_corpus;
use sectorzero::taxonomy::LabelEntry;
use sectorzero::zeroshot::ScoringMode;

#[derive(Parser)]
#[command(
    name = "sectorzero",
    version,
    about = "Zero-shot company sector classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus and write it back as normalized JSONL
    Ingest(RunArgs),
    /// Per-sector record counts
    Summary(RunArgs),
    /// TF-IDF term rankings per sector and draft enriched label names
    Enrich {
        #[command(flatten)]
        run: RunArgs,
        /// Terms kept per sector
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top_k: usize,
        /// Terms joined into each drafted label name
        #[arg(long, default_value_t = 3)]
        candidate_terms: usize,
    },
    /// Score every record and write predictions plus a run manifest
    Classify(RunArgs),
    /// Build the classification report and confusion heatmap from predictions
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Predictions JSONL (defaults to <out>/predictions.jsonl)
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Classify and evaluate in one go
    Run(RunArgs),
    /// Write a seeded synthetic corpus
    GenSynthetic {
        #[command(flatten)]
        run: RunArgs,
        /// Records per sector
        #[arg(long, default_value_t = 2)]
        per_class: usize,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// JSON run configuration; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// csv or jsonl
    #[arg(long)]
    format: Option<CorpusFormat>,
    /// original, enriched, or a path to a label-set JSON file
    #[arg(long)]
    labels: Option<String>,
    /// mock or remote
    #[arg(long)]
    backend: Option<BackendKind>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Hypothesis template with one {} placeholder
    #[arg(long)]
    template: Option<String>,
    /// single or multi
    #[arg(long)]
    mode: Option<ScoringMode>,
    #[arg(long)]
    truncation_chars: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Score cache file (JSONL)
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep records that have no gold sector
    #[arg(long)]
    keep_unlabeled: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, PipelineError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.corpus {
            c.corpus = Some(v.clone());
        }
        if let Some(v) = self.format {
            c.format = v;
        }
        if let Some(v) = &self.labels {
            c.labels = LabelSource::from(v.clone());
        }
        if let Some(v) = self.backend {
            c.backend = v;
        }
        if let Some(v) = &self.endpoint {
            c.endpoint = Some(v.clone());
        }
        if let Some(v) = &self.model {
            c.model = Some(v.clone());
        }
        if let Some(v) = &self.template {
            c.template = v.clone();
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.truncation_chars {
            c.truncation_chars = v;
        }
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.parallelism {
            c.parallelism = v;
        }
        if let Some(v) = &self.cache {
            c.cache = Some(v.clone());
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if self.keep_unlabeled {
            c.require_gold = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn usage(message: impl std::fmt::Display) -> PipelineError {
    PipelineError::Config(message.to_string())
}

fn execute(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Ingest(args) => {
            let config = args.resolve()?;
            let corpus = load_corpus(&config)?;
            let mut buf = Vec::new();
            write_corpus(&corpus, &mut buf, CorpusFormat::Jsonl, &config.field_map)?;
            let path = write_atomic(
                &config.out,
                "corpus.jsonl",
                &String::from_utf8(buf).expect("utf-8 corpus"),
            )?;
            println!(
                "records: {}  filtered (no gold sector): {}  -> {}",
                corpus.len(),
                corpus.filtered_count,
                path.display()
            );
        }
        Command::Summary(args) => {
            let config = args.resolve()?;
            let corpus = load_corpus(&config)?;
            let labels = load_labels(&config)?;
            print!("{}", corpus_summary(&corpus, &labels)?.render());
        }
        Command::Enrich {
            run,
            top_k,
            candidate_terms,
        } => {
            let config = run.resolve()?;
            let corpus = load_corpus(&config)?;
            let labels = load_labels(&config)?;
            let by_class = group_documents(&corpus, &StopwordPolicy::bundled());
            let all_docs: Vec<Vec<String>> = by_class.values().flatten().cloned().collect();
            let stats = fit_tfidf(&all_docs).map_err(usage)?;
            let rankings = rank_all_classes(&stats, &by_class, top_k).map_err(usage)?;
            let nonempty: Vec<_> = rankings
                .iter()
                .filter(|r| !r.ranked_terms.is_empty())
                .cloned()
                .collect();
            let drafts = propose_enriched_labels(&nonempty, candidate_terms).map_err(usage)?;

            let mut csv = Vec::new();
            write_rankings_csv(&rankings, &mut csv).map_err(usage)?;
            let rankings_path = write_atomic(
                &config.out,
                "rankings.csv",
                &String::from_utf8(csv).expect("utf-8 csv"),
            )?;
            // sectors without documents keep their current display name
            let entries: Vec<LabelEntry> = labels
                .labels()
                .iter()
                .map(|l| LabelEntry {
                    gics_name: l.gics_name.clone(),
                    display_name: drafts
                        .iter()
                        .find(|(g, _)| *g == l.gics_name)
                        .map_or_else(|| l.display_name.clone(), |(_, d)| d.clone()),
                })
                .collect();
            let mut json = serde_json::to_string_pretty(&entries).expect("entries serialize");
            json.push('\n');
            let labels_path = write_atomic(&config.out, "label_candidates.json", &json)?;
            for e in &entries {
                println!("{:<24} {}", e.gics_name, e.display_name);
            }
            println!(
                "rankings -> {}\ncandidates -> {}",
                rankings_path.display(),
                labels_path.display()
            );
        }
        Command::Classify(args) => {
            let config = args.resolve()?;
            let outcome = classify_stage(&config, &SystemClock)?;
            println!(
                "classified {} record(s); cache hits {}, backend calls {} -> {}",
                outcome.predictions.len(),
                outcome.manifest.counts.cache_hits,
                outcome.manifest.counts.backend_calls,
                config.out.display()
            );
        }
        Command::Evaluate { run, predictions } => {
            let config = run.resolve()?;
            let path = predictions.unwrap_or_else(|| config.out.join(PREDICTIONS_FILE));
            let outcome = evaluate_stage(&config, &path)?;
            print!(
                "{}",
                sectorzero::eval::render_report(
                    &outcome.report,
                    sectorzero::eval::ReportFormat::Text
                )
            );
        }
        Command::Run(args) => {
            let config = args.resolve()?;
            let outcome = run_pipeline(&config, &SystemClock)?;
            print!(
                "{}",
                sectorzero::eval::render_report(
                    &outcome.evaluation.report,
                    sectorzero::eval::ReportFormat::Text
                )
            );
            println!("artifacts -> {}", config.out.display());
        }
        Command::GenSynthetic { run, per_class } => {
            if per_class == 0 {
                return Err(usage("--per-class must be at least 1"));
            }
            let config = run.resolve()?;
            let labels = load_labels(&config)?;
            let corpus = generate_synthetic_corpus(&labels, per_class, config.seed);
            let mut buf = Vec::new();
            write_corpus(&corpus, &mut buf, config.format, &config.field_map)?;
            let name = format!("synthetic_corpus.{}", config.format);
            let path = write_atomic(
                &config.out,
                &name,
                &String::from_utf8(buf).expect("utf-8 corpus"),
            )?;
            println!("{} record(s) -> {}", corpus.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: error: {e}", pipeline::TOOL_NAME);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"corpus": "a.csv", "batch_size": 4, "mode": "multi"}"#,
        )
        .unwrap();
        let args = RunArgs {
            config: Some(path),
            batch_size: Some(8),
            keep_unlabeled: true,
            ..Default::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!(c.batch_size, 8);
        assert_eq!(c.mode, ScoringMode::Multi);
        assert_eq!(c.corpus, Some(PathBuf::from("a.csv")));
        assert!(!c.require_gold);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
