use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sonify_core::acquisition::MockRetrieval;
use sonify_core::engine::{read_events, read_trace, replay, write_events, SimConfig, DEFAULT_DT};
use sonify_core::{Scene, SessionState};
use sonify_service::actor::{start_session, SimulatorOptions};
use sonify_service::api::{router, ApiState};
use sonify_service::batch::{batch_session_id, run_batch};
use sonify_service::mock_server::{serve_router, generation_router, retrieval_router, Faults};
use sonify_service::{export_session, Backends, Config};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "sonify", version, about = "Author sound effects for AR scenes from detected events")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay a user-action trace against a scene and write the detected events as JSON lines.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Output file, or `-` for stdout.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Seconds to simulate. Defaults to two seconds past the last action.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run a live session with the HTTP API.
    Serve {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, env = "SONIFY_CONFIG")]
        config: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Export the session here on shutdown.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Run the acquisition pipeline over recorded events and export the session.
    SonifyBatch {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "SONIFY_CONFIG", default_value = "sonify.toml")]
        config: PathBuf,
    },
    /// Run a local retrieval or generation service. Prints its URL on the first line.
    MockServer {
        #[arg(long, value_enum)]
        kind: ServerKind,
        #[arg(long, default_value = "127.0.0.1:0")]
        addr: SocketAddr,
        /// Sound descriptions for the retrieval server.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Delay added to every response.
        #[arg(long, default_value_t = 0)]
        latency_ms: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ServerKind {
    Retrieval,
    Generation,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Cmd::Simulate {
            scene,
            trace,
            out,
            dt,
            duration,
        } => simulate(&scene, &trace, &out, dt, duration),
        cmd => tokio::runtime::Runtime::new()?.block_on(run_async(cmd)),
    }
}

async fn run_async(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Serve {
            scene,
            config,
            addr,
            export,
        } => serve(&scene, &config, addr, export).await,
        Cmd::SonifyBatch { events, out, config } => sonify_batch(&events, &out, &config).await,
        Cmd::MockServer {
            kind,
            addr,
            corpus,
            latency_ms,
        } => mock_server(kind, addr, corpus, latency_ms).await,
        Cmd::Simulate { .. } => unreachable!("handled synchronously"),
    }
}

fn simulate(scene_path: &Path, trace_path: &Path, out: &Path, dt: f64, duration: Option<f64>) -> Result<()> {
    if !(dt > 0.0 && dt <= 0.1) {
        bail!("--dt must be in (0, 0.1], got {dt}");
    }
    let scene = Scene::load(scene_path)?;
    let materials = scene.resolve_materials()?;
    let file = std::fs::File::open(trace_path).with_context(|| format!("opening {}", trace_path.display()))?;
    let trace = read_trace(BufReader::new(file))?;
    let until = duration.unwrap_or_else(|| trace.last().map_or(0.0, |a| a.timestamp) + 2.0);
    let mut state = SessionState::new(Arc::new(scene), materials, SimConfig::default());
    let events = replay(&mut state, &trace, dt, until)?;
    tracing::info!(count = events.len(), "simulated {until} s");
    if out == Path::new("-") {
        let stdout = std::io::stdout();
        let mut w = stdout.lock();
        write_events(&mut w, &events)?;
        w.flush()?;
    } else {
        let mut w = BufWriter::new(
            std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?,
        );
        write_events(&mut w, &events)?;
        w.flush()?;
    }
    Ok(())
}

async fn serve(scene: &Path, config: &Path, addr: SocketAddr, export: Option<PathBuf>) -> Result<()> {
    let config = Config::load(config)?;
    let opts = SimulatorOptions {
        dt: config.simulator.dt,
        ..Default::default()
    };
    let live = start_session(scene, &config, None, opts)?;
    let state = ApiState {
        session: live.session.clone(),
        simulator: Some(live.simulator.clone()),
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(dir) = export {
        let session = live.session.snapshot().await?;
        export_session(&session, &dir)?;
        eprintln!("exported session to {}", dir.display());
    }
    Ok(())
}

async fn sonify_batch(events_path: &Path, out: &Path, config: &Path) -> Result<()> {
    let config = Config::load(config)?;
    let bytes = std::fs::read(events_path).with_context(|| format!("reading {}", events_path.display()))?;
    let events = read_events(&bytes[..])?;
    let backends = Backends::from_config(&config)?;
    let session = run_batch(
        events,
        &backends,
        config.executor.parallelism,
        batch_session_id(&bytes),
        config.snapshot(),
    )
    .await;
    export_session(&session, out)?;
    let failed = session.jobs.iter().filter(|j| matches!(j.state, sonify_service::JobState::Failed { .. })).count();
    eprintln!(
        "{} unique events, {} jobs ({} failed), {} assets -> {}",
        session.log.len(),
        session.jobs.len(),
        failed,
        session.assets.len(),
        out.display()
    );
    Ok(())
}

async fn mock_server(kind: ServerKind, addr: SocketAddr, corpus: Option<PathBuf>, latency_ms: u64) -> Result<()> {
    let faults = Faults::new();
    faults.set_latency(std::time::Duration::from_millis(latency_ms));
    let router = match kind {
        ServerKind::Retrieval => {
            let path = corpus.context("--corpus is required for the retrieval server")?;
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            retrieval_router(MockRetrieval::from_json(&text)?, faults.clone())
        }
        ServerKind::Generation => generation_router(faults.clone()),
    };
    let server = serve_router(router, addr, faults).await?;
    println!("{}", server.url());
    std::io::stdout().flush()?;
    tokio::signal::ctrl_c().await?;
    server.shutdown();
    Ok(())
}
