use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use geo_mapf::bench::{self, Outcome, RunRecord, SolverSpec};
use geo_mapf::bridge::{serve_session, ConstantPhi};
use geo_mapf::datagen::{export_dataset, label_tree};
use geo_mapf::envgen::{generate_instance, InstanceSpec, WorldSpec};
use geo_mapf::geometry::AgentRadius;
use geo_mapf::highlevel::{cbs_solve, write_tree_log, SolveOptions};
use geo_mapf::instance::{read_instance, write_instance, Instance, WorldKind};

/// Multi-agent path finding on random geometric roadmaps.
#[derive(Parser)]
#[command(name = "geo-mapf", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance suite.
    Gen(GenArgs),
    /// Run a solver over instances and write run records as CSV.
    Solve(SolveArgs),
    /// Summarize run records.
    Report(ReportArgs),
    /// Solve instances with CBS and export labeled search-tree samples.
    Datagen(DatagenArgs),
    /// Serve a constant φ over stdin/stdout, for testing the bridge.
    PhiStub {
        #[arg(long, default_value_t = 0.0)]
        value: f64,
    },
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    world: WorldArg,
    /// Agent counts: a single number or an inclusive range such as 2-4.
    #[arg(long, value_parser = parse_range)]
    agents: (usize, usize),
    /// Instances per agent count.
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    vertices: usize,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 0.05)]
    radius: f64,
    /// Obstacle count for box worlds.
    #[arg(long, default_value_t = 10)]
    boxes: usize,
    /// Cells per side for maze worlds.
    #[arg(long, default_value_t = 5)]
    maze_cells: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum WorldArg {
    Maze,
    Box,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SolverArg {
    Cbs,
    /// Focal search ordered by conflict count.
    Focal,
    /// Focal search ordered by depth then an external φ evaluator.
    FocalPhi,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Instance files or directories of `.inst` files.
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "cbs")]
    solver: SolverArg,
    /// Suboptimality factor for focal solvers; `inf` admits every node.
    #[arg(long, default_value_t = 1.1, value_parser = parse_w)]
    w: f64,
    /// Per-run limit in seconds.
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,
    /// φ evaluator: host:port, tcp:host:port, unix:/path, or exec:command.
    #[arg(long)]
    phi_endpoint: Option<String>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// One run at a time, for timing comparisons (same as --jobs 1).
    #[arg(long)]
    serial: bool,
    /// Output CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// Run CSV files.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// The timeout the runs used, in seconds.
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,
    /// Solver name flowtimes are compared against.
    #[arg(long, default_value = "cbs")]
    baseline: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DatagenArgs {
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    /// Dataset directory to create.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,
    /// Also write each search tree as `<id>.tree.ndjson` here.
    #[arg(long)]
    tree_dir: Option<PathBuf>,
}

enum Fail {
    /// Bad arguments; exit 1.
    Usage(String),
    /// The work itself failed; exit 2.
    Run(String),
}

fn run_err(e: impl std::fmt::Display) -> Fail {
    Fail::Run(e.to_string())
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a == 0 || a > b {
        return Err(format!("bad agent range {s}"));
    }
    Ok((a, b))
}

fn parse_w(s: &str) -> Result<f64, String> {
    let w: f64 = match s {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        _ => s.parse().map_err(|e| format!("{e}"))?,
    };
    if w.is_nan() || w < 1.0 {
        return Err(format!("w must be ≥ 1, got {s}"));
    }
    Ok(w)
}

fn secs(s: f64) -> Result<Duration, Fail> {
    Duration::try_from_secs_f64(s).map_err(|e| Fail::Usage(format!("bad timeout {s}: {e}")))
}

fn collect_instances(inputs: &[PathBuf]) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<io::Result<_>>()?;
            files.retain(|f| f.extension().is_some_and(|e| e == "inst"));
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn instance_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn open_out(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn gen(a: GenArgs) -> Result<bool, Fail> {
    let radius = AgentRadius::new(a.radius).ok_or(Fail::Usage("radius must be positive".into()))?;
    fs::create_dir_all(&a.out).map_err(run_err)?;
    let kind = match a.world {
        WorldArg::Maze => WorldKind::Maze,
        WorldArg::Box => WorldKind::Box,
    };
    let mut ok = true;
    for m in a.agents.0..=a.agents.1 {
        for i in 0..a.count {
            let seed = a.seed.wrapping_add((m as u64) << 32).wrapping_add(i as u64);
            let world = match a.world {
                WorldArg::Maze => WorldSpec::maze(a.maze_cells, seed),
                WorldArg::Box => WorldSpec::boxes(a.boxes, seed),
            };
            let spec = InstanceSpec {
                world,
                vertices: a.vertices,
                k: a.k,
                agents: m,
                radius,
            };
            let name = format!("{kind}-m{m}-{i:04}");
            match generate_instance(&spec) {
                Ok(inst) => {
                    write_instance(&inst, a.out.join(format!("{name}.inst"))).map_err(run_err)?;
                }
                Err(e) => {
                    eprintln!("{name}: {e}");
                    ok = false;
                }
            }
        }
    }
    Ok(ok)
}

fn solve(a: SolveArgs) -> Result<bool, Fail> {
    let timeout = secs(a.timeout)?;
    let spec = match a.solver {
        SolverArg::Cbs => SolverSpec::Cbs,
        SolverArg::Focal => SolverSpec::FocalConflicts { w: a.w },
        SolverArg::FocalPhi => SolverSpec::FocalPhi {
            w: a.w,
            endpoint: a
                .phi_endpoint
                .clone()
                .ok_or(Fail::Usage("--phi-endpoint is required for focal-phi".into()))?,
        },
    };
    let files = collect_instances(&a.instances).map_err(run_err)?;
    let jobs = if a.serial { 1 } else { a.jobs.max(1) };

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; files.len()]);
    let all_ok = std::sync::atomic::AtomicBool::new(true);
    std::thread::scope(|s| {
        for _ in 0..jobs.min(files.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = files.get(i) else { break };
                let id = instance_id(path);
                let rec = match read_instance(path) {
                    Ok(inst) => {
                        let (rec, detail) = bench::run_one(&id, &inst, &spec, timeout);
                        if let Err(msg) = detail {
                            eprintln!("{id}: {msg}");
                        }
                        rec
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        RunRecord {
                            instance: id,
                            agents: 0,
                            solver: spec.name().into(),
                            w: spec.w(),
                            outcome: Outcome::Error,
                            wall_time_s: 0.0,
                            flowtime: None,
                            expansions: 0,
                            generated: 0,
                        }
                    }
                };
                if rec.outcome != Outcome::Solved {
                    all_ok.store(false, Ordering::Relaxed);
                }
                results.lock().unwrap()[i] = Some(rec);
            });
        }
    });
    let runs: Vec<RunRecord> = results.into_inner().unwrap().into_iter().flatten().collect();
    let out = open_out(&a.out).map_err(run_err)?;
    bench::write_runs(out, &runs).map_err(run_err)?;
    Ok(all_ok.into_inner())
}

fn report(a: ReportArgs) -> Result<bool, Fail> {
    let mut runs = Vec::new();
    for p in &a.runs {
        let f = fs::File::open(p).map_err(|e| Fail::Run(format!("{}: {e}", p.display())))?;
        runs.extend(bench::read_runs(f).map_err(|e| Fail::Run(format!("{}: {e}", p.display())))?);
    }
    let rows = bench::report(&runs, secs(a.timeout)?, &a.baseline);
    let out = open_out(&a.out).map_err(run_err)?;
    bench::write_report(out, &rows).map_err(run_err)?;
    Ok(true)
}

fn datagen(a: DatagenArgs) -> Result<bool, Fail> {
    let timeout = secs(a.timeout)?;
    let files = collect_instances(&a.instances).map_err(run_err)?;
    let mut instances: BTreeMap<String, Instance> = BTreeMap::new();
    let mut samples = Vec::new();
    let mut ok = true;
    if let Some(dir) = &a.tree_dir {
        fs::create_dir_all(dir).map_err(run_err)?;
    }
    for path in files {
        let id = instance_id(&path);
        let inst = match read_instance(&path) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                ok = false;
                continue;
            }
        };
        let opts = SolveOptions {
            timeout: Some(timeout),
            record_tree: true,
            audit: false,
        };
        match cbs_solve(&inst, &opts) {
            Ok(s) => {
                let tree = s.tree.unwrap_or_default();
                if let Some(dir) = &a.tree_dir {
                    let f = fs::File::create(dir.join(format!("{id}.tree.ndjson"))).map_err(run_err)?;
                    write_tree_log(io::BufWriter::new(f), &tree).map_err(run_err)?;
                }
                samples.extend(label_tree(&id, &tree, Some(s.node)).map_err(run_err)?);
                instances.insert(id, inst);
            }
            Err(e) => {
                // no data from failed runs
                eprintln!("{id}: {e}");
                ok = false;
            }
        }
    }
    export_dataset(&a.out, &instances, &samples).map_err(run_err)?;
    eprintln!("{} samples from {} instances", samples.len(), instances.len());
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Solve(a) => solve(a),
        Cmd::Report(a) => report(a),
        Cmd::Datagen(a) => datagen(a),
        Cmd::PhiStub { value } => {
            let mut eval = ConstantPhi(value);
            serve_session(io::stdin().lock(), io::stdout().lock(), &mut eval).map(|_| true).map_err(run_err)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Fail::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Fail::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
