use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use profile_forge::corpus::{Label, Snapshot};
use profile_forge::extraction::{mentions_to_jsonl, novelty_analysis, GazetteerTagger};
use profile_forge::graph::canonical_json;
use profile_forge::learners::{cross_validate, information_gain_ranking, LearnerSpec};
use profile_forge::pipeline::{distant_instances, harvest_mentions, run_profile, write_outputs, PipelineConfig};
use profile_forge::relations::{cross_validate_relations, instances_to_jsonl, train_relation_classifiers, RelationScheme};
use profile_forge::relevance::{classify_pages, labeled_dataset, self_train_scale_up, train_relevance, verdicts_to_tsv, RelevanceModel};
use profile_forge::features::SchemaConfig;
use profile_forge::service::{effective_port, serve, ProfileStore, DEFAULT_PORT};
use profile_forge::synth;

#[derive(Parser)]
#[command(name = "profile-forge", version, about = "Person profiling over offline search snapshots")]
struct Cli {
    /// Pipeline config (TOML); supplies defaults for seed, learners, gazetteers and models.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed; overrides the config's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a relevance model on labeled snapshots.
    TrainRelevance {
        #[arg(long = "snapshot", required = true)]
        snapshots: Vec<PathBuf>,
        #[arg(long)]
        learner: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train per-type relation classifiers from CV distant supervision.
    TrainRelations {
        #[arg(long = "snapshot", required = true)]
        snapshots: Vec<PathBuf>,
        #[arg(long = "gazetteer")]
        gazetteers: Vec<PathBuf>,
        #[arg(long)]
        learner: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the labeled instances as JSON lines.
        #[arg(long)]
        instances: Option<PathBuf>,
    },
    /// Classify every page of a snapshot; prints verdict TSV.
    Classify {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Label unlabeled snapshots with a seed model and retrain.
    ScaleUp {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "labeled")]
        labeled: Vec<PathBuf>,
        #[arg(long = "unlabeled", required = true)]
        unlabeled: Vec<PathBuf>,
        #[arg(long)]
        learner: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract entity mentions from a snapshot's relevant pages (manual
    /// labels, or all pages when unlabeled); prints JSON lines.
    Extract {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long = "gazetteer")]
        gazetteers: Vec<PathBuf>,
        /// Print the homepage/Wikipedia novelty report instead of mentions.
        #[arg(long)]
        novelty: bool,
    },
    /// Build the profile graph and run manifest for one snapshot.
    Profile {
        #[arg(long)]
        target: PathBuf,
        /// Output directory; defaults to the config's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a directory of graph files over HTTP.
    Serve {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
    },
    /// Cross-validate a learner; prints the report as TSV.
    Eval {
        #[arg(long = "snapshot", required = true)]
        snapshots: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Task::Relevance)]
        task: Task,
        #[arg(long)]
        learner: Option<String>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long = "gazetteer")]
        gazetteers: Vec<PathBuf>,
        /// Print the information-gain ranking (relevance only).
        #[arg(long)]
        infogain: bool,
    },
    /// Write synthetic snapshot corpora.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        count: usize,
        /// Omit labels.tsv.
        #[arg(long)]
        no_labels: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Relevance,
    Relations,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Relevance,
    Scholar,
}

type Result<T> = std::result::Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

struct Ctx {
    config: Option<PipelineConfig>,
    seed: u64,
}

impl Ctx {
    fn learner(&self, explicit: &Option<String>, relations: bool) -> Result<LearnerSpec> {
        if let Some(name) = explicit {
            return LearnerSpec::from_name(name).ok_or_else(|| format!("unknown learner {name:?}"));
        }
        match &self.config {
            Some(c) if relations => c.learners.relations.resolve().map_err(err),
            Some(c) => c.learners.relevance.resolve().map_err(err),
            None if relations => Ok(LearnerSpec::logistic_regression()),
            None => Ok(LearnerSpec::bagging()),
        }
    }

    fn model_path(&self, explicit: &Option<PathBuf>, relations: bool) -> Result<PathBuf> {
        if let Some(p) = explicit {
            return Ok(p.clone());
        }
        let c = self.config.as_ref().ok_or("--model or --config is required")?;
        Ok(c.resolve(if relations { &c.models.relations } else { &c.models.relevance }))
    }

    fn tagger(&self, explicit: &[PathBuf]) -> Result<GazetteerTagger> {
        match (&self.config, explicit.is_empty()) {
            (Some(c), true) => c.tagger().map_err(|e| format!("{e:?}")),
            _ => GazetteerTagger::load(explicit).map_err(err),
        }
    }

    fn scheme(&self) -> RelationScheme {
        self.config.as_ref().map(|c| c.scheme.clone()).unwrap_or_default()
    }

    fn schema(&self) -> SchemaConfig {
        self.config.as_ref().map(|c| c.schema).unwrap_or_default()
    }
}

fn load_all(dirs: &[PathBuf]) -> Result<Vec<Snapshot>> {
    dirs.iter().map(|d| Snapshot::load(d).map_err(err)).collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(err)?;
    }
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_relevance_model(path: &Path) -> Result<RelevanceModel> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    RelevanceModel::from_json(&text).map_err(err)
}

fn relevant_page_ids(s: &Snapshot) -> Vec<&str> {
    let labeled = s.labeled_pages().next().is_some();
    s.pages
        .iter()
        .filter(|p| !labeled || p.label == Some(Label::Relevant))
        .map(|p| p.page_id.as_str())
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref().map(PipelineConfig::load).transpose().map_err(err)?;
    let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
    let ctx = Ctx { config, seed };

    match cli.command {
        Command::TrainRelevance { snapshots, learner, out } => {
            let spec = ctx.learner(&learner, false)?;
            let model = train_relevance(&load_all(&snapshots)?, &spec, ctx.seed, ctx.schema()).map_err(err)?;
            write(&out, &model.to_json())?;
            log::info!("wrote {}", out.display());
        }
        Command::TrainRelations { snapshots, gazetteers, learner, out, instances } => {
            let spec = ctx.learner(&learner, true)?;
            let tagger = ctx.tagger(&gazetteers)?;
            let scheme = ctx.scheme();
            let mut all = Vec::new();
            for s in load_all(&snapshots)? {
                all.extend(distant_instances(&s, &tagger, &scheme).map_err(|e| format!("{e:?}"))?);
            }
            if let Some(p) = instances {
                write(&p, &instances_to_jsonl(&all))?;
            }
            let models = train_relation_classifiers(&all, &scheme, &spec, ctx.seed).map_err(err)?;
            write(&out, &models.to_json())?;
        }
        Command::Classify { model, snapshot } => {
            let model = read_relevance_model(&ctx.model_path(&model, false)?)?;
            let s = Snapshot::load(&snapshot).map_err(err)?;
            print!("{}", verdicts_to_tsv(&classify_pages(&model, &s).map_err(err)?));
        }
        Command::ScaleUp { model, labeled, unlabeled, learner, out } => {
            let seed_model = read_relevance_model(&ctx.model_path(&model, false)?)?;
            let spec = ctx.learner(&learner, false)?;
            let min_conf = ctx.config.as_ref().map_or(0.0, |c| c.learners.min_confidence);
            let (model, report) =
                self_train_scale_up(&seed_model, &load_all(&labeled)?, &load_all(&unlabeled)?, &spec, ctx.seed, min_conf)
                    .map_err(err)?;
            write(&out, &model.to_json())?;
            println!(
                "assigned_relevant\t{}\nassigned_irrelevant\t{}\nskipped_low_confidence\t{}",
                report.assigned_relevant, report.assigned_irrelevant, report.skipped_low_confidence
            );
        }
        Command::Extract { snapshot, gazetteers, novelty } => {
            let s = Snapshot::load(&snapshot).map_err(err)?;
            let tagger = ctx.tagger(&gazetteers)?;
            let mentions = harvest_mentions(&s, relevant_page_ids(&s), &tagger);
            if novelty {
                print!("{}", canonical_json(&novelty_analysis(&mentions, &s.homepage_ids, &s.wikipedia_ids)));
            } else {
                print!("{}", mentions_to_jsonl(&mentions));
            }
        }
        Command::Profile { target, out } => {
            let config = ctx.config.as_ref().ok_or("profile needs --config")?;
            let mut config = config.clone();
            config.seed = ctx.seed;
            let run = run_profile(&config, &target).map_err(|e| format!("{e}\npartial manifest:\n{}", e.manifest.to_json()))?;
            let dir = out.unwrap_or_else(|| config.resolve(&config.output_dir));
            let (graph, manifest) = write_outputs(&run, &dir).map_err(err)?;
            println!("{}\n{}", graph.display(), manifest.display());
        }
        Command::Serve { dir, port } => {
            let store = ProfileStore::load(&dir).map_err(err)?;
            log::info!("loaded {} profiles", store.len());
            let runtime = tokio::runtime::Runtime::new().map_err(err)?;
            runtime.block_on(serve(store, effective_port(port))).map_err(err)?;
        }
        Command::Eval { snapshots, task, learner, folds, gazetteers, infogain } => {
            let folds = folds.or(ctx.config.as_ref().map(|c| c.learners.folds)).unwrap_or(10);
            let snaps = load_all(&snapshots)?;
            match task {
                Task::Relevance => {
                    let spec = ctx.learner(&learner, false)?;
                    let schema = train_relevance(&snaps, &LearnerSpec::NaiveBayes, ctx.seed, ctx.schema()).map_err(err)?.schema;
                    let data = labeled_dataset(&snaps, &schema).map_err(err)?;
                    if infogain {
                        for (name, gain) in information_gain_ranking(&data).map_err(err)? {
                            println!("{name}\t{gain:.6}");
                        }
                    } else {
                        print!("{}", cross_validate(&data, folds, &spec, ctx.seed).map_err(err)?.to_tsv());
                    }
                }
                Task::Relations => {
                    let spec = ctx.learner(&learner, true)?;
                    let tagger = ctx.tagger(&gazetteers)?;
                    let scheme = ctx.scheme();
                    let mut all = Vec::new();
                    for s in &snaps {
                        all.extend(distant_instances(s, &tagger, &scheme).map_err(|e| format!("{e:?}"))?);
                    }
                    for (ty, report) in cross_validate_relations(&all, &scheme, &spec, folds, ctx.seed).map_err(err)? {
                        println!("# {ty}");
                        print!("{}", report.to_tsv());
                    }
                }
            }
        }
        Command::Synth { kind, out, count, no_labels } => match kind {
            SynthKind::Relevance => {
                let spec = synth::RelevanceCorpusSpec { entities: count, seed: ctx.seed, ..Default::default() };
                for (i, s) in synth::relevance_corpus(spec).into_iter().enumerate() {
                    let s = if no_labels { s.unlabeled() } else { s };
                    s.write(&out.join(format!("entity-{:02}", i + 1))).map_err(err)?;
                }
            }
            SynthKind::Scholar => {
                for i in 0..count as u64 {
                    let s = synth::scholar_snapshot(ctx.seed.wrapping_add(i));
                    let s = if no_labels { s.unlabeled() } else { s };
                    s.write(&out.join(profile_forge::pipeline::slug(&s.target))).map_err(err)?;
                }
                write(&out.join("gazetteer.tsv"), &synth::scholar_gazetteer())?;
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
