use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use subliminal_core::engine::StateImage;
use subliminal_core::report::RunReport;
use subliminal_core::{CueQuery, Engine, EngineConfig, FeatureVector, MemoryStore, StimulusScript, Trace};

/// Deterministic attention simulator driven by stimulus scripts.
#[derive(Parser)]
#[command(name = "subliminal", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Engine configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the cue register seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the cycle limit from the config.
    #[arg(long, global = true)]
    max_cycles: Option<u64>,
    /// Suppress reports and status lines on stdout.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a script and write the event trace.
    Run(RunArgs),
    /// Re-run a script and compare against a recorded trace.
    ReplayVerify(ReplayArgs),
    /// List the words a cue matches and the recall winner.
    Oracle(OracleArgs),
    /// Write the long-term memory of a snapshot or of a finished run.
    DumpMemory(DumpArgs),
    /// Set a successor link between two words of a memory dump.
    Link(LinkArgs),
    /// Summarize a trace file.
    Stats(StatsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Stimulus script (JSON Lines). An absent script means an empty world.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Trace output path.
    #[arg(long)]
    out: PathBuf,
    /// Memory dump to preload.
    #[arg(long, conflicts_with = "resume")]
    memory: Option<PathBuf>,
    /// Run until this cycle. Defaults to the cycle limit.
    #[arg(long)]
    cycles: Option<u64>,
    /// Continue from a snapshot instead of cycle 0.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Write a snapshot of the final state here.
    #[arg(long)]
    snapshot_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    memory: Option<PathBuf>,
    /// Must match the value the trace was produced with.
    #[arg(long)]
    cycles: Option<u64>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    memory: PathBuf,
    /// Cue mask as a hex string of width/4 digits.
    #[arg(long)]
    mask: String,
    /// Required values at masked positions. Defaults to the mask itself.
    #[arg(long)]
    values: Option<String>,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long, conflicts_with = "script")]
    snapshot: Option<PathBuf>,
    /// Run this script first and dump the resulting memory.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    cycles: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LinkArgs {
    #[arg(long)]
    memory: PathBuf,
    #[arg(long)]
    from: u64,
    #[arg(long)]
    to: u64,
    /// Output path; the input dump is rewritten when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Preloaded memory, counted into the final size.
    #[arg(long)]
    memory: Option<PathBuf>,
    /// Run length. Defaults to one past the last event.
    #[arg(long)]
    cycles: Option<u64>,
}

enum Failure {
    Diverged(String),
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diverged(msg)) => {
            eprintln!("divergence: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Run(a) => run(g, a)?,
        Command::ReplayVerify(a) => return replay_verify(g, a),
        Command::Oracle(a) => oracle(g, a)?,
        Command::DumpMemory(a) => dump_memory(g, a)?,
        Command::Link(a) => link(g, a)?,
        Command::Stats(a) => stats(g, a)?,
    }
    Ok(())
}

fn load_config(g: &Global) -> Result<EngineConfig> {
    let mut cfg = match &g.config {
        Some(p) => EngineConfig::from_json(&read(p)?).with_context(|| format!("config {}", p.display()))?,
        None => EngineConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.lfsr.seed = seed;
    }
    if let Some(max) = g.max_cycles {
        cfg.max_cycles = max;
    }
    cfg.validate().context("config after overrides")?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

fn load_script(path: Option<&PathBuf>) -> Result<StimulusScript> {
    match path {
        Some(p) => StimulusScript::parse_jsonl(open(p)?).with_context(|| format!("script {}", p.display())),
        None => Ok(StimulusScript::empty()),
    }
}

fn load_memory(cfg: &EngineConfig, path: &Path) -> Result<MemoryStore> {
    let layout = cfg.layout()?;
    MemoryStore::load_jsonl(layout, open(path)?).with_context(|| format!("memory dump {}", path.display()))
}

fn write_memory(store: &MemoryStore, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?);
            store.dump_jsonl(&mut w)?;
            w.flush()?;
        }
        None => store.dump_jsonl(io::stdout().lock())?,
    }
    Ok(())
}

fn build_engine(cfg: &EngineConfig, script: StimulusScript, memory: Option<&PathBuf>) -> Result<Engine> {
    Ok(match memory {
        Some(p) => Engine::with_memory(cfg.clone(), script, load_memory(cfg, p)?)?,
        None => Engine::new(cfg.clone(), script)?,
    })
}

fn run(g: &Global, a: &RunArgs) -> Result<()> {
    let cfg = load_config(g)?;
    let script = load_script(a.script.as_ref())?;
    let mut engine = match &a.resume {
        Some(p) => {
            let image = StateImage::from_json(&read(p)?).with_context(|| format!("snapshot {}", p.display()))?;
            Engine::restore(image, cfg.clone(), script)?
        }
        None => build_engine(&cfg, script, a.memory.as_ref())?,
    };
    let start = engine.cycle();
    let initial = engine.memory().len() as u64;
    let until = a.cycles.unwrap_or(cfg.max_cycles);
    let trace = engine.run(until)?;

    let mut w = BufWriter::new(File::create(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?);
    trace.write_jsonl(&mut w)?;
    w.flush()?;
    if let Some(p) = &a.snapshot_out {
        fs::write(p, engine.snapshot().to_json()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    if !g.quiet {
        let report = RunReport::from_trace(&trace, until.saturating_sub(start), initial);
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(())
}

fn replay_verify(g: &Global, a: &ReplayArgs) -> Result<(), Failure> {
    let cfg = load_config(g)?;
    let recorded = read(&a.trace)?;
    let mut engine = build_engine(&cfg, load_script(a.script.as_ref())?, a.memory.as_ref())?;
    let replay = engine
        .run(a.cycles.unwrap_or(cfg.max_cycles))
        .map_err(anyhow::Error::from)?;

    let mut recorded_lines = recorded.lines();
    for (i, ev) in replay.events.iter().enumerate() {
        let expected = ev.to_line();
        match recorded_lines.next() {
            Some(line) if line == expected => {}
            Some(_) => {
                return Err(Failure::Diverged(format!(
                    "line {} differs at cycle {}; replay produced {expected}",
                    i + 1,
                    ev.cycle
                )))
            }
            None => {
                return Err(Failure::Diverged(format!(
                    "trace ends after {i} events; replay continues at cycle {}",
                    ev.cycle
                )))
            }
        }
    }
    if let Some(extra) = recorded_lines.next() {
        let cycle = serde_json::from_str::<serde_json::Value>(extra)
            .ok()
            .and_then(|v| v.get("cycle").and_then(|c| c.as_u64()))
            .map_or_else(|| "?".to_string(), |c| c.to_string());
        return Err(Failure::Diverged(format!(
            "trace has events beyond the replay (line {}, cycle {cycle})",
            replay.events.len() + 1
        )));
    }
    if !g.quiet {
        println!("verified {} events", replay.events.len());
    }
    Ok(())
}

fn oracle(g: &Global, a: &OracleArgs) -> Result<()> {
    let cfg = load_config(g)?;
    let store = load_memory(&cfg, &a.memory)?;
    let width = store.layout().width();
    let mask = FeatureVector::from_hex(&a.mask, width).context("mask")?;
    let values = match &a.values {
        Some(v) => FeatureVector::from_hex(v, width).context("values")?,
        None => mask.clone(),
    };
    let cue = CueQuery::new(store.layout(), mask, values)?;
    let matches = store.matches_all(&cue)?;
    // recall stamps match times, so ask a scratch copy for the winner
    let winner = store.clone().recall(&cue, 0)?.map(|r| r.word_id);
    let out = serde_json::json!({ "matches": matches, "winner": winner });
    println!("{out}");
    Ok(())
}

fn dump_memory(g: &Global, a: &DumpArgs) -> Result<()> {
    let cfg = load_config(g)?;
    let store = match &a.snapshot {
        Some(p) => {
            let image = StateImage::from_json(&read(p)?).with_context(|| format!("snapshot {}", p.display()))?;
            let next = image.next_word_id;
            let mut s = MemoryStore::from_records(cfg.layout()?, image.memory)?;
            s.reserve_ids(next);
            s
        }
        None => {
            let mut e = Engine::new(cfg.clone(), load_script(a.script.as_ref())?)?;
            e.run(a.cycles.unwrap_or(cfg.max_cycles))?;
            e.memory().clone()
        }
    };
    write_memory(&store, a.out.as_ref())
}

fn link(g: &Global, a: &LinkArgs) -> Result<()> {
    let cfg = load_config(g)?;
    let mut store = load_memory(&cfg, &a.memory)?;
    store.link(a.from, a.to)?;
    write_memory(&store, Some(a.out.as_ref().unwrap_or(&a.memory)))
}

fn stats(g: &Global, a: &StatsArgs) -> Result<()> {
    let cfg = load_config(g)?;
    let trace = Trace::read_jsonl(open(&a.trace)?).with_context(|| format!("trace {}", a.trace.display()))?;
    let initial = match &a.memory {
        Some(p) => load_memory(&cfg, p)?.len() as u64,
        None => 0,
    };
    let cycles = a
        .cycles
        .unwrap_or_else(|| trace.events.last().map_or(0, |e| e.cycle + 1));
    let report = RunReport::from_trace(&trace, cycles, initial);
    if !g.quiet {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(())
}
