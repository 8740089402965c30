use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use layoutedit::backend::{
    edit_via_backend, evaluate_edits, CannedClient, CannedFixture, ChatClient, EditorBackend, HttpChatClient,
    HttpClientConfig,
};
use layoutedit::datagen::{donor_pool, emit_corpus, read_designs, CorpusConfig};
use layoutedit::metrics::DEFAULT_OP_TOLERANCE;
use layoutedit::ops::{synthesize, Action};
use layoutedit::service::{read_cases, serve, ServiceConfig};
use layoutedit::{
    build_relation_graph, emit_design, parse_design, parse_operation, prepare_edit, seeded_rng, serialize_graph, Design,
    Element, Setting, SolverConfig, DEFAULT_ALPHA,
};

#[derive(Parser)]
#[command(name = "layoutedit", version, about = "Relation-preserving layout editing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Solver,
    Model,
}

#[derive(clap::Args)]
struct BackendOpts {
    #[arg(long, value_enum, default_value = "solver")]
    backend: BackendArg,
    /// Solver settings (.toml or .json).
    #[arg(long)]
    solver_config: Option<PathBuf>,
    /// Chat endpoint settings (.toml); the token comes from the environment.
    #[arg(long)]
    model_config: Option<PathBuf>,
    /// Replay scripted model replies from a fixture instead of calling out.
    #[arg(long)]
    canned: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the relation graph of a design.
    ExtractGraph {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the structured graph instead of the text blocks.
        #[arg(long)]
        json: bool,
    },
    /// Draw one operation for a design and print the prepared edit.
    SynthOp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "reconstruction")]
        setting: Setting,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Force the action instead of drawing it.
        #[arg(long)]
        action: Option<String>,
        /// Designs to take donor elements from (directory or line-delimited file).
        #[arg(long)]
        donors: Option<PathBuf>,
    },
    /// Apply one operation and write the edited design.
    Edit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        op: String,
        /// Element document for an add.
        #[arg(long)]
        element: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write diagnostics as JSON here.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendOpts,
    },
    /// Emit a line-delimited training corpus.
    Datagen {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "reconstruction")]
        setting: Setting,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 25)]
        max_elements: usize,
        #[arg(long, default_value_t = 2)]
        samples_per_design: usize,
        #[arg(long)]
        donors: Option<PathBuf>,
        /// Write corpus statistics as JSON here.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Score a case file and print the report table.
    Eval {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_OP_TOLERANCE)]
        tol: f64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        backend: BackendOpts,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, default_value = "layoutedit-store")]
        store: PathBuf,
        #[arg(long)]
        model_config: Option<PathBuf>,
        #[arg(long)]
        canned: Option<PathBuf>,
    },
}

fn read_design(path: &Path) -> Result<Design> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_design(&raw).with_context(|| format!("parsing {}", path.display()))
}

fn make_client(model_config: Option<&Path>, canned: Option<&Path>) -> Result<Option<Arc<dyn ChatClient>>> {
    if let Some(p) = canned {
        let raw = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let fixture: CannedFixture = serde_json::from_str(&raw).with_context(|| format!("parsing {}", p.display()))?;
        return Ok(Some(Arc::new(CannedClient::from_fixture(fixture))));
    }
    let cfg = match model_config {
        Some(p) => {
            let raw = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&raw).with_context(|| format!("parsing {}", p.display()))?
        }
        None => HttpClientConfig::default(),
    };
    Ok(Some(Arc::new(HttpChatClient::new(cfg)?)))
}

fn make_backend(opts: &BackendOpts) -> Result<EditorBackend> {
    let solver = match &opts.solver_config {
        Some(p) => SolverConfig::from_file(p)?,
        None => SolverConfig::default(),
    };
    Ok(match opts.backend {
        BackendArg::Solver => EditorBackend::solver(solver),
        BackendArg::Model => {
            let client = make_client(opts.model_config.as_deref(), opts.canned.as_deref())?
                .ok_or_else(|| anyhow!("no model client configured"))?;
            EditorBackend::external(client, solver)
        }
    })
}

fn donors_for(path: Option<&Path>, fallback: &[(String, Design)]) -> Result<Vec<Element>> {
    Ok(match path {
        Some(p) => donor_pool(read_designs(p)?.iter().map(|(_, d)| d)),
        None => donor_pool(fallback.iter().map(|(_, d)| d)),
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ExtractGraph {
            input,
            alpha,
            seed,
            json,
        } => {
            let d = read_design(&input)?;
            let g = build_relation_graph(&d, alpha, &mut seeded_rng(seed))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&g)?);
            } else {
                println!("{}", serialize_graph(&g));
            }
        }
        Command::SynthOp {
            input,
            setting,
            seed,
            alpha,
            action,
            donors,
        } => {
            let d = read_design(&input)?;
            let action = action
                .map(|a| Action::parse(&a).ok_or_else(|| anyhow!("unknown action {a:?}")))
                .transpose()?;
            let pool = donors_for(donors.as_deref(), &[("input".into(), d.clone())])?;
            let edit = synthesize(setting, &d, &pool, alpha, action, &mut seeded_rng(seed))?;
            println!("{}", serde_json::to_string_pretty(&edit)?);
        }
        Command::Edit {
            input,
            op,
            element,
            out,
            alpha,
            seed,
            diagnostics,
            backend,
        } => {
            let d = read_design(&input)?;
            let op = parse_operation(&op)?;
            let added: Option<Element> = element
                .map(|p| -> Result<Element> {
                    let raw = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str(&raw).with_context(|| format!("parsing {}", p.display()))
                })
                .transpose()?;
            let backend = make_backend(&backend)?;
            let edit = prepare_edit(&d, op, added, alpha, &mut seeded_rng(seed))?;
            let outcome = edit_via_backend(&backend, &d, &edit.pruned_graph, &op, edit.added.as_ref())?;
            if let Some(p) = diagnostics {
                fs::write(&p, serde_json::to_string_pretty(&outcome.diagnostics)?)
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            write_out(out.as_deref(), &emit_design(&outcome.design))?;
        }
        Command::Datagen {
            corpus,
            out,
            setting,
            seed,
            alpha,
            max_elements,
            samples_per_design,
            donors,
            stats,
        } => {
            let designs = read_designs(&corpus)?;
            let pool = donors_for(donors.as_deref(), &designs)?;
            let cfg = CorpusConfig {
                alpha,
                max_elements,
                samples_per_design,
                seed,
                setting,
            };
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut w = io::BufWriter::new(file);
            let st = emit_corpus(designs.into_iter().map(Ok), &cfg, &pool, &mut w)?;
            w.flush()?;
            let text = serde_json::to_string_pretty(&st)?;
            match stats {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => println!("{text}"),
            }
        }
        Command::Eval {
            cases,
            alpha,
            tol,
            json,
            backend,
        } => {
            let inputs = read_cases(&cases).map_err(|e| anyhow!(e))?;
            let backend = make_backend(&backend)?;
            let report = evaluate_edits(inputs, &backend, alpha, tol, |_| {});
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.table());
            }
            if report.n_cases() == 0 && report.n_errors > 0 {
                bail!("no case could be evaluated");
            }
        }
        Command::Serve {
            listen,
            store,
            model_config,
            canned,
        } => {
            let client = if model_config.is_some() || canned.is_some() {
                make_client(model_config.as_deref(), canned.as_deref())?
            } else {
                None
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(
                ServiceConfig {
                    listen,
                    store_dir: store,
                },
                client,
            ))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
