use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use editkit_core::annotation;
use editkit_core::builder::{self, BuildConfig, Builder};
use editkit_core::gateway::{EndpointConfig, FewShotSpec, ModelClient, ReqwestTransport, RunLog};
use editkit_core::harness::{
    self, BenchmarkSuite, ChainSystem, CopySystem, EndpointSystem, OutputsFileSystem, ReportFormat, RunContext,
    Scorers, TextEditor,
};
use editkit_core::metrics::{self, Against, MetricInput};
use editkit_core::verbalizer::TemplateBank;
use editkit_core::{InstanceRecord, Mode, ScoreReport};

#[derive(Parser)]
#[command(name = "editkit", version, about = "Instruction-style text-editing datasets and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an instruction dataset from a TOML config.
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Must agree with the config's mode if both are set.
        #[arg(long)]
        mode: Option<Mode>,
        /// Replaces the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check an emitted dataset against its manifest and the template bank.
    Audit {
        dir: PathBuf,
        /// Directory of `<task>.txt` bank files; defaults to the shipped bank.
        #[arg(long)]
        banks: Option<PathBuf>,
    },
    /// Score one hypothesis file with one metric.
    Score {
        #[arg(long)]
        metric: ScoreMetric,
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        src: PathBuf,
        /// One file per reference set, line-aligned with the sources.
        #[arg(long, num_args = 1..)]
        refs: Vec<PathBuf>,
        /// Comparison set for self_bleu.
        #[arg(long, default_value = "references")]
        against: Against,
    },
    /// Run a system over a benchmark suite.
    Eval {
        /// Suite TOML; the shipped default suite when omitted.
        #[arg(long)]
        suite: Option<PathBuf>,
        /// Root that suite dataset paths are relative to.
        #[arg(long, env = "EDITKIT_DATA_DIR")]
        data: PathBuf,
        #[arg(long, value_enum)]
        system: SystemKind,
        /// Name of the system in the report.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        endpoint_config: Option<PathBuf>,
        /// Directory of `<dataset_id>.txt` output files.
        #[arg(long)]
        outputs: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Only these dataset ids.
        #[arg(long, num_args = 1..)]
        datasets: Vec<String>,
        /// Few-shot exemplars per prompt; needs --fewshot-pool.
        #[arg(long, default_value_t = 0)]
        shots: usize,
        /// JSON-lines instance records to draw exemplars from.
        #[arg(long)]
        fewshot_pool: Option<PathBuf>,
        #[arg(long)]
        formality_config: Option<PathBuf>,
        #[arg(long)]
        politeness_config: Option<PathBuf>,
        #[arg(long)]
        similarity_config: Option<PathBuf>,
    },
    /// Render saved reports as one table.
    Report {
        /// `report.json` files or run directories containing one.
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "txt")]
        format: ReportFormat,
    },
    /// Run the pairwise annotation service.
    Serve {
        /// Append-only study log, replayed on startup.
        #[arg(long, default_value = "studies.jsonl")]
        log: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoreMetric {
    Sari,
    Gleu,
    ExactMatch,
    SelfBleu,
    CompressionRatio,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SystemKind {
    Copy,
    Endpoint,
    OutputsFile,
    Chain,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn score(metric: ScoreMetric, hyp: &Path, src: &Path, refs: &[PathBuf], against: Against) -> Result<f64> {
    let hyps = read_lines(hyp)?;
    let srcs = read_lines(src)?;
    if hyps.len() != srcs.len() {
        bail!("{} hypotheses for {} sources", hyps.len(), srcs.len());
    }
    let ref_sets = refs.iter().map(|p| read_lines(p)).collect::<Result<Vec<_>>>()?;
    for (p, set) in refs.iter().zip(&ref_sets) {
        if set.len() != srcs.len() {
            bail!("{} has {} lines for {} sources", p.display(), set.len(), srcs.len());
        }
    }
    let inputs: Vec<MetricInput> = srcs
        .into_iter()
        .zip(hyps)
        .enumerate()
        .map(|(i, (s, h))| MetricInput::new(s, h, ref_sets.iter().map(|r| r[i].clone()).collect()))
        .collect();
    Ok(match metric {
        ScoreMetric::Sari => metrics::corpus_sari(&inputs)?,
        ScoreMetric::Gleu => metrics::gleu(&inputs)?,
        ScoreMetric::ExactMatch => metrics::exact_match(&inputs)?,
        ScoreMetric::SelfBleu => metrics::corpus_self_bleu(&inputs, against)?,
        ScoreMetric::CompressionRatio => metrics::compression_ratio(&inputs)?,
    })
}

fn client(path: &Path) -> Result<ModelClient> {
    let config = EndpointConfig::load(path)?;
    let transport = ReqwestTransport::new().map_err(anyhow::Error::msg)?;
    Ok(ModelClient::new(config, transport)?)
}

fn optional_client(path: &Option<PathBuf>) -> Result<Option<ModelClient>> {
    path.as_deref().map(client).transpose()
}

fn load_pool(path: &Path) -> Result<Vec<InstanceRecord>> {
    read_lines(path)?
        .iter()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn load_report(path: &Path) -> Result<ScoreReport> {
    let file = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Build { config, out, mode, seed } => {
            let mut cfg = BuildConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let manifest = Builder::for_config(&cfg)?.build(&cfg, mode, &out)?;
            for (split, file) in &manifest.files {
                println!("{split}: {} records -> {}", file.records, out.join(&file.file).display());
            }
        }
        Command::Audit { dir, banks } => {
            let bank = match banks {
                Some(d) => TemplateBank::load_dir(&d)?,
                None => TemplateBank::shipped(),
            };
            let report = builder::audit(&dir, &bank)?;
            println!("audit passed: {} records", report.records);
        }
        Command::Score {
            metric,
            hyp,
            src,
            refs,
            against,
        } => println!("{:.4}", score(metric, &hyp, &src, &refs, against)?),
        Command::Eval {
            suite,
            data,
            system,
            name,
            endpoint_config,
            outputs,
            seed,
            out,
            datasets,
            shots,
            fewshot_pool,
            formality_config,
            politeness_config,
            similarity_config,
        } => {
            let mut suite = match suite {
                Some(p) => BenchmarkSuite::load(&p)?,
                None => BenchmarkSuite::default_suite(),
            };
            if !datasets.is_empty() {
                suite = suite.restrict(&datasets)?;
            }
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut ctx = RunContext::new(data, seed);
            ctx.shots = shots;
            ctx.scorers = Scorers {
                formality: optional_client(&formality_config)?,
                politeness: optional_client(&politeness_config)?,
                similarity: optional_client(&similarity_config)?,
            };
            let endpoint = || -> Result<EndpointSystem> {
                let path = endpoint_config.as_deref().context("--endpoint-config is required for this system")?;
                let log = RunLog::open(&out.join("runlog.jsonl"))?;
                let sys = EndpointSystem::new(client(path)?, log);
                Ok(match (shots, &fewshot_pool) {
                    (0, _) => sys,
                    (n, Some(pool)) => sys.with_fewshot(FewShotSpec { shot_count: n, seed }, load_pool(pool)?),
                    (_, None) => bail!("--shots needs --fewshot-pool"),
                })
            };
            let editor: Box<dyn TextEditor> = match system {
                SystemKind::Copy => Box::new(CopySystem),
                SystemKind::OutputsFile => Box::new(OutputsFileSystem::new(
                    outputs.clone().context("--outputs is required for outputs-file")?,
                )),
                SystemKind::Endpoint => Box::new(endpoint()?),
                SystemKind::Chain => Box::new(ChainSystem::new(endpoint()?, ctx.bank.clone(), seed)),
            };
            if system != SystemKind::Endpoint && system != SystemKind::Chain {
                ctx.decoding = "none".into();
            }
            let id = name.unwrap_or_else(|| match system {
                SystemKind::Copy => "copy".into(),
                SystemKind::OutputsFile => "outputs".into(),
                SystemKind::Endpoint => "endpoint".into(),
                SystemKind::Chain => "chain".into(),
            });
            let result = harness::run(&suite, &id, editor.as_ref(), &ctx)?;
            harness::write_run(&result, &out)?;
            print!("{}", harness::render_text(std::slice::from_ref(&result.report))?);
            if result.report.has_failures() {
                for row in result.report.rows.iter().filter(|r| r.value.is_none()) {
                    eprintln!(
                        "{}:{} failed: {}",
                        row.dataset_id,
                        row.metric,
                        row.error.as_deref().unwrap_or("")
                    );
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report { inputs, format } => {
            let reports = inputs.iter().map(|p| load_report(p)).collect::<Result<Vec<_>>>()?;
            print!("{}", harness::render(&reports, format)?);
            if reports.iter().any(ScoreReport::has_failures) {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Serve { log, addr } => annotation::serve_blocking(&log, addr)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
