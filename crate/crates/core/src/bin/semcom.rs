use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde::Serialize;

use semcom::clustering::{sem_q, ClusterSet};
use semcom::output::{
    embedding_tsv, similarity_tsv, sweep_csv, trace_json, write_json, write_text, CommunitiesFile,
    COMMUNITIES_FILE, REPORT_CSV, REPORT_JSON,
};
use semcom::pipeline::{baseline_report, evaluate, similarity_stage, sweep_rows};
use semcom::synthgen::{write_planted, Participation};
use semcom::{
    detect, load_dataset, prune_dataset, run_sweep, user_user_projection, Config, Dataset, Error,
    InputFiles, MetricsReport, PlantedSpec, Result, StopRule, TopicMap,
};

#[derive(Parser)]
#[command(
    name = "semcom",
    version,
    about = "Topical overlapping communities in event-based social networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect communities and write communities.json, report.json and report.csv
    Detect {
        #[command(flatten)]
        run: RunArgs,
        /// Write the user-space event embedding as TSV; the tag-space one goes
        /// next to it with `.tag` before the extension
        #[arg(long, value_name = "PATH")]
        dump_embedding: Option<PathBuf>,
        /// Write the upper triangle of the combined similarity as TSV
        #[arg(long, value_name = "PATH")]
        dump_similarity: Option<PathBuf>,
        /// Write the merge trace as JSON
        #[arg(long, value_name = "PATH")]
        dump_trace: Option<PathBuf>,
    },
    /// Run detection over a grid of alpha values and write report.csv
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"
        )]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
    },
    /// Run detection and the greedy modularity baseline side by side
    Compare {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-score an existing communities.json against a dataset
    Metrics {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_name = "PATH")]
        communities: PathBuf,
    },
    /// Write a planted synthetic dataset with ground truth
    Generate(GenerateArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = ".")]
    input_dir: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    /// PurQ weight; repeat to report several
    #[arg(long)]
    beta: Vec<f64>,
    #[arg(long)]
    svd_k: Option<usize>,
    #[arg(long)]
    min_clusters: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    min_tag_freq: Option<usize>,
    #[arg(long)]
    min_shared: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pool the friend fraction over all edges instead of averaging per community
    #[arg(long)]
    global: bool,
    /// IntraSem value of a single-event cluster
    #[arg(long)]
    singleton_intra: Option<f64>,
    #[arg(long, value_enum)]
    stop_rule: Option<StopArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StopArg {
    FirstStall,
    FullTrace,
}

impl RunArgs {
    fn config(&self) -> Result<Config> {
        let mut cfg = Config::default();
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if !self.beta.is_empty() {
            cfg.betas = self.beta.clone();
        }
        if let Some(v) = self.svd_k {
            cfg.svd_k = v;
        }
        if let Some(v) = self.min_clusters {
            cfg.min_clusters = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.min_tag_freq {
            cfg.min_tag_freq = v;
        }
        if let Some(v) = self.min_shared {
            cfg.min_shared = v;
        }
        if let Some(v) = self.theta {
            cfg.profile_theta = v;
        }
        if let Some(v) = self.seed {
            cfg.rng_seed = v;
        }
        if let Some(v) = self.singleton_intra {
            cfg.singleton_intra = v;
        }
        if let Some(v) = self.stop_rule {
            cfg.stop_rule = match v {
                StopArg::FirstStall => StopRule::FirstStall,
                StopArg::FullTrace => StopRule::FullTrace,
            };
        }
        cfg.friend_fraction_global = self.global;
        cfg.validate()?;
        Ok(cfg)
    }

    fn load(&self) -> Result<(Dataset, TopicMap)> {
        let files = InputFiles::from_dir(&self.input_dir);
        let raw = load_dataset(&files)?;
        let topics = TopicMap::load(&files.tag_topic, &raw)?;
        Ok((raw, topics))
    }

    fn out(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        Ok(self.out_dir.join(name))
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    events_per_topic: Option<usize>,
    #[arg(long)]
    users_per_topic: Option<usize>,
    #[arg(long)]
    tags_per_topic: Option<usize>,
    #[arg(long)]
    tags_per_event: Option<usize>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out: Option<f64>,
    #[arg(long)]
    tag_noise: Option<f64>,
    /// Heavy-tailed user activity instead of uniform participation
    #[arg(long)]
    power_law: bool,
    #[arg(long)]
    seed: Option<u64>,
}

impl GenerateArgs {
    fn spec(&self) -> PlantedSpec {
        let mut s = PlantedSpec::default();
        if let Some(v) = self.topics {
            s.n_topics = v;
        }
        if let Some(v) = self.events_per_topic {
            s.events_per_topic = v;
        }
        if let Some(v) = self.users_per_topic {
            s.users_per_topic = v;
        }
        if let Some(v) = self.tags_per_topic {
            s.tags_per_topic = v;
        }
        if let Some(v) = self.tags_per_event {
            s.tags_per_event = v;
        }
        if let Some(v) = self.p_in {
            s.p_in = v;
        }
        if let Some(v) = self.p_out {
            s.p_out = v;
        }
        if let Some(v) = self.tag_noise {
            s.tag_noise = v;
        }
        if self.power_law {
            s.participation = Participation::PowerLaw;
        }
        if let Some(v) = self.seed {
            s.rng_seed = v;
        }
        s
    }
}

fn summary(r: &MetricsReport) -> String {
    let purq: Vec<String> = r
        .aggregate
        .purq
        .iter()
        .map(|p| format!("PurQ_{}={:.4}", p.beta, p.value))
        .collect();
    format!(
        "{}: {} communities (mean size {:.1}), purity={:.4} Q={:.4} {}",
        r.method,
        r.communities,
        r.mean_community_size,
        r.aggregate.purity,
        r.aggregate.q,
        purq.join(" ")
    )
}

fn run_detect(
    run: &RunArgs,
    dump_embedding: Option<&Path>,
    dump_similarity: Option<&Path>,
    dump_trace: Option<&Path>,
) -> Result<()> {
    let cfg = run.config()?;
    let (raw, topics) = run.load()?;
    let det = detect(&raw, &cfg)?;
    let report = det.report(&topics, &cfg);
    write_json(
        &run.out(COMMUNITIES_FILE)?,
        &CommunitiesFile::new(&det.communities, &det.dataset),
    )?;
    write_json(&run.out(REPORT_JSON)?, &report)?;
    write_text(&run.out(REPORT_CSV)?, &sweep_csv(&sweep_rows(&report)))?;
    if let Some(p) = dump_embedding {
        write_text(p, &embedding_tsv(&det.user_embedding))?;
        write_text(&tag_sibling(p), &embedding_tsv(&det.tag_embedding))?;
    }
    if let Some(p) = dump_similarity {
        write_text(p, &similarity_tsv(&det.ssim))?;
    }
    if let Some(p) = dump_trace {
        write_text(p, &trace_json(&det.clusters)?)?;
    }
    println!("{}", summary(&report));
    Ok(())
}

/// `emb.tsv` -> `emb.tag.tsv`
fn tag_sibling(p: &Path) -> PathBuf {
    let stem = p
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match p.extension() {
        Some(ext) => format!("{stem}.tag.{}", ext.to_string_lossy()),
        None => format!("{stem}.tag"),
    };
    p.with_file_name(name)
}

fn run_sweep_cmd(run: &RunArgs, alphas: &[f64], betas: Option<&[f64]>) -> Result<()> {
    let cfg = run.config()?;
    let (raw, topics) = run.load()?;
    let betas = betas.map_or_else(|| cfg.betas.clone(), <[f64]>::to_vec);
    let rows = run_sweep(&raw, &topics, &cfg, alphas, &betas)?;
    write_text(&run.out(REPORT_CSV)?, &sweep_csv(&rows))?;
    println!(
        "{} rows written to {}",
        rows.len(),
        run.out(REPORT_CSV)?.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct Comparison<'a> {
    semantic_modularity: &'a MetricsReport,
    greedy_modularity: &'a MetricsReport,
}

fn run_compare(run: &RunArgs) -> Result<()> {
    let cfg = run.config()?;
    let (raw, topics) = run.load()?;
    let det = detect(&raw, &cfg)?;
    let ours = det.report(&topics, &cfg);
    let (base_cs, base) = baseline_report(&det.dataset, &det.graph, &topics, &cfg)?;
    write_json(
        &run.out(COMMUNITIES_FILE)?,
        &CommunitiesFile::new(&det.communities, &det.dataset),
    )?;
    write_json(
        &run.out("baseline_communities.json")?,
        &CommunitiesFile::new(&base_cs, &det.dataset),
    )?;
    write_json(
        &run.out(REPORT_JSON)?,
        &Comparison {
            semantic_modularity: &ours,
            greedy_modularity: &base,
        },
    )?;
    let mut rows = sweep_rows(&ours);
    rows.extend(sweep_rows(&base));
    write_text(&run.out(REPORT_CSV)?, &sweep_csv(&rows))?;
    println!("{}", summary(&ours));
    println!("{}", summary(&base));
    Ok(())
}

/// The event partition stored in a communities file. Events of dropped
/// clusters come back as singletons; `None` if the file names an unknown
/// event or repeats one.
fn stored_partition(file: &CommunitiesFile, items: &[String]) -> Option<Vec<Vec<usize>>> {
    let index: BTreeMap<&str, usize> = items
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_str(), i))
        .collect();
    let mut seen = vec![false; items.len()];
    let mut clusters = Vec::new();
    for c in &file.communities {
        let mut members = Vec::new();
        for e in &c.events {
            let &i = index.get(e.as_str())?;
            if seen[i] {
                return None;
            }
            seen[i] = true;
            members.push(i);
        }
        if !members.is_empty() {
            members.sort_unstable();
            clusters.push(members);
        }
    }
    let missing: Vec<usize> = (0..items.len()).filter(|&i| !seen[i]).collect();
    if !missing.is_empty() {
        warn!(
            "{} events belong to no stored community; scored as singletons",
            missing.len()
        );
        clusters.extend(missing.into_iter().map(|i| vec![i]));
    }
    Some(clusters)
}

fn run_metrics(run: &RunArgs, communities: &Path) -> Result<()> {
    let cfg = run.config()?;
    let (raw, topics) = run.load()?;
    let file = CommunitiesFile::read(communities)?;
    let d = prune_dataset(&raw, &cfg)?;
    let g = user_user_projection(&d)?;
    let stage = similarity_stage(&d, &cfg)?;
    let partition = stored_partition(&file, &stage.st.items);
    let clusters = partition.map(|clusters| {
        let semq = sem_q(&clusters, &stage.st, cfg.singleton_intra);
        ClusterSet {
            items: stage.st.items.clone(),
            clusters,
            merge_trace: Vec::new(),
            initial_semq: semq,
            best_semq: semq,
            best_step: 0,
        }
    });
    if clusters.is_none() {
        warn!("stored events do not match the pruned dataset; skipping silhouette");
    }
    let method = if file.communities.iter().all(|c| c.events.is_empty()) {
        "greedy_modularity"
    } else {
        "semantic_modularity"
    };
    let cs = file.into_community_set();
    let report = evaluate(
        method,
        &d,
        &g,
        &cs,
        clusters
            .as_ref()
            .map(|c| (c, &stage.st, Some(&stage.spectra))),
        &topics,
        &cfg,
    );
    write_json(&run.out(REPORT_JSON)?, &report)?;
    write_text(&run.out(REPORT_CSV)?, &sweep_csv(&sweep_rows(&report)))?;
    println!("{}", summary(&report));
    Ok(())
}

fn run_generate(args: &GenerateArgs) -> Result<()> {
    let spec = args.spec();
    let net = semcom::generate_planted_esbn(&spec)?;
    write_planted(&net, &args.out_dir)?;
    println!(
        "{} events, {} users, {} tags written to {}",
        net.dataset.events.len(),
        net.dataset.users.len(),
        net.dataset.tags.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Detect {
            run,
            dump_embedding,
            dump_similarity,
            dump_trace,
        } => run_detect(
            run,
            dump_embedding.as_deref(),
            dump_similarity.as_deref(),
            dump_trace.as_deref(),
        ),
        Command::Sweep { run, alphas, betas } => run_sweep_cmd(run, alphas, betas.as_deref()),
        Command::Compare { run } => run_compare(run),
        Command::Metrics { run, communities } => run_metrics(run, communities),
        Command::Generate(args) => run_generate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semcom: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
