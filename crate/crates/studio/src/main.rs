use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use guohua_core::annotator::annotate_batch;
use guohua_core::classifier::{classify, parse_labels, train_head, ClassifierModel, FeatureSet, HeadConfig, LabeledFeature};
use guohua_core::client::RetryPolicy;
use guohua_core::design_space::{mine, ConceptNormalizationRules, MiningConfig};
use guohua_core::ideation::{export_bundle, import_bundle, run_eval_batch, EvalConfig, GenerationMode};
use guohua_core::search::build_index;
use guohua_core::PaintingType;
use guohua_studio::demo::demo_clients;
use guohua_studio::jobs::DEFAULT_WORKERS;
use guohua_studio::{report, router, AppState, Clients, Studio};

#[derive(Parser)]
#[command(name = "guohua", version, about = "Chinese-painting ideation workbench")]
struct Cli {
    #[arg(long, env = "DATA_DIR", default_value = "data", global = true)]
    data_dir: PathBuf,
    /// Use offline stand-ins instead of the HTTP endpoints.
    #[arg(long, global = true)]
    mock: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load corpus lines from a file into the store.
    Ingest { file: PathBuf },
    /// Train or apply the gongbi/xieyi classifier.
    #[command(subcommand)]
    Classify(ClassifyCmd),
    /// Run the two-stage annotator over records.
    Annotate {
        /// Record ids; default is every record with no tags.
        ids: Vec<String>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
    /// Normalize, embed and cluster concepts, then write the catalog.
    Mine {
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build the search index and print its size.
    Index,
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "BIND_ADDR", default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long, env = "WORKERS", default_value_t = DEFAULT_WORKERS)]
        workers: usize,
    },
    #[command(subcommand)]
    Eval(EvalCmd),
}

#[derive(Subcommand)]
enum ClassifyCmd {
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        head: HeadArgs,
    },
    /// Classify feature rows and write the types into the corpus.
    Apply {
        #[arg(long)]
        features: PathBuf,
    },
}

#[derive(Args)]
struct HeadArgs {
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Generate an evaluation bundle with an empty rating sheet.
    Run {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        sets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        image_prompts: usize,
    },
    /// Statistics over a bundle's filled rating sheet.
    Stats { bundle: PathBuf },
}

fn open_studio(cli: &Cli) -> anyhow::Result<Studio> {
    let (clients, retry) = if cli.mock {
        (demo_clients(), RetryPolicy::immediate())
    } else {
        (Clients::from_env(), RetryPolicy::default())
    };
    Studio::open(&cli.data_dir, clients, retry)
}

fn print_json(v: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn read_features(path: &PathBuf) -> anyhow::Result<FeatureSet> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(FeatureSet::parse(BufReader::new(f))?)
}

fn run_classify(studio: &Studio, cmd: &ClassifyCmd) -> anyhow::Result<()> {
    match cmd {
        ClassifyCmd::Train { features, labels, head } => {
            let set = read_features(features)?;
            let lf = File::open(labels).with_context(|| format!("opening {}", labels.display()))?;
            let labels = parse_labels(BufReader::new(lf))?;
            let examples: Vec<LabeledFeature> = set
                .rows
                .into_iter()
                .filter_map(|f| labels.get(&f.record_id).map(|l| LabeledFeature { label: *l, feature: f }))
                .collect();
            let config = HeadConfig {
                hidden_width: head.hidden,
                dropout_rate: head.dropout,
                learning_rate: head.learning_rate,
                epochs: head.epochs,
                seed: head.seed,
                batch_size: head.batch_size,
                ..HeadConfig::default()
            };
            let (model, acc) = train_head(&examples, &config)?;
            let path = studio.data.classifier();
            guohua_core::fsutil::write_atomic(&path, serde_json::to_string(&model)?.as_bytes())?;
            eprintln!("validation accuracy {acc:.4}; model written to {}", path.display());
        }
        ClassifyCmd::Apply { features } => {
            let path = studio.data.classifier();
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let model: ClassifierModel = serde_json::from_str(&text)?;
            let set = read_features(features)?;
            let mut typed: Vec<(String, PaintingType)> = Vec::with_capacity(set.rows.len());
            for f in &set.rows {
                typed.push((f.record_id.clone(), classify(&model, f)?.0));
            }
            let updated = studio.corpus.update(|records| {
                let mut n = 0;
                for (id, t) in &typed {
                    if let Some(r) = records.iter_mut().find(|r| &r.id == id) {
                        r.painting_type = *t;
                        n += 1;
                    }
                }
                Ok(n)
            })?;
            eprintln!("classified {} rows, {updated} records updated", typed.len());
        }
    }
    Ok(())
}

fn run_eval(studio: &Studio, cmd: &EvalCmd) -> anyhow::Result<()> {
    match cmd {
        EvalCmd::Run { out, sets, seed, image_prompts } => {
            let catalog = studio.catalog.read().expect("catalog lock").clone();
            let Some(catalog) = catalog else { bail!("no catalog in {}; run `mine` first", studio.data.root.display()) };
            let config = EvalConfig {
                set_count: *sets,
                seed: *seed,
                image_prompt_count: *image_prompts,
                modes: vec![GenerationMode::Crafted, GenerationMode::Baseline],
                ..EvalConfig::default()
            };
            let pool = studio.corpus.snapshot().records().to_vec();
            let bundle = run_eval_batch(&catalog, &config, studio.chain(), &pool)?;
            export_bundle(&bundle, out, &studio.images)?;
            let failed = bundle.sets.iter().filter(|s| s.error.is_some()).count();
            eprintln!("{} sets written to {} ({failed} failed)", bundle.sets.len(), out.display());
        }
        EvalCmd::Stats { bundle } => {
            let b = import_bundle(bundle)?;
            print_json(&report::evaluate(&b.ratings))?;
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let studio = open_studio(&cli)?;

    match &cli.command {
        Command::Ingest { file } => {
            let report = studio.corpus.ingest_file(file)?;
            for e in &report.errors {
                eprintln!("line {}: {}", e.line, e.reason);
            }
            print_json(&report.stats)?;
        }
        Command::Classify(cmd) => run_classify(&studio, cmd)?,
        Command::Annotate { ids, workers } => {
            let ids = if ids.is_empty() {
                studio
                    .corpus
                    .snapshot()
                    .records()
                    .iter()
                    .filter(|r| r.annotations.is_empty())
                    .map(|r| r.id.clone())
                    .collect()
            } else {
                ids.clone()
            };
            let report = annotate_batch(&studio.corpus, &studio.gateway, studio.clients.text.as_ref(), &studio.kb, &ids, *workers);
            for (id, e) in &report.failed {
                eprintln!("{id}: {e}");
            }
            eprintln!("{} annotated, {} failed", report.annotated.len(), report.failed.len());
        }
        Command::Mine { rules, k, seed } => {
            let rules = match rules {
                Some(p) => ConceptNormalizationRules::load(p)?,
                None => ConceptNormalizationRules::default(),
            };
            let config = MiningConfig { k_override: *k, seed: *seed, ..MiningConfig::default() };
            let snap = studio.corpus.snapshot();
            let out = mine(snap.records(), &rules, &studio.gateway, studio.clients.embedder.as_ref(), &config)?;
            out.catalog.save(&studio.data.catalog())?;
            guohua_core::fsutil::write_atomic(&studio.data.clusters(), serde_json::to_string_pretty(&out.clusters)?.as_bytes())?;
            for d in &out.dimensions {
                eprintln!("{}: {} concepts, k = {}, wcss = {:.4}", d.dimension, d.concepts.len(), d.k, d.wcss);
            }
        }
        Command::Index => {
            let index = build_index(&studio.corpus.snapshot());
            println!("records {} postings {} version {}", index.len(), index.posting_count(), index.version());
        }
        Command::Serve { bind, workers } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let state = AppState::start(Arc::new(studio), *workers)?;
                let listener = tokio::net::TcpListener::bind(bind).await.with_context(|| format!("binding {bind}"))?;
                tracing::info!(addr = %listener.local_addr()?, workers, "serving");
                axum::serve(listener, router(state))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                Ok::<_, anyhow::Error>(())
            })?;
        }
        Command::Eval(cmd) => run_eval(&studio, cmd)?,
    }
    Ok(())
}
