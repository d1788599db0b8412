//! Command-line front end: plan a velocity profile, cross-check it against
//! the dynamic-programming reference, and run mesh sweeps.
//!
//! Exit codes: 0 success, 1 input error, 2 infeasibility warning (or, for
//! `compare`, gap above threshold), 3 reference-solver infeasibility.

use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use fbga::{
    oracle_plan, plan, random_track, time_parameterize, write_profile_csv, BoundaryConditions,
    GgvEnvelope, OracleConfig, OracleError, Path, PlanResult, SolverConfig};

const EXIT_OK: i32 = 0;
const EXIT_INPUT: i32 = 1;
const EXIT_WARN: i32 = 2;
const EXIT_ORACLE_INFEASIBLE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "fbga",
    about = "Time-optimal velocity profiles under g-g-v acceleration envelopes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a velocity profile along a path.
    Plan(PlanArgs),
    /// Plan and cross-check against the dynamic-programming reference.
    Compare(CompareArgs),
    /// Plan at a series of mesh resolutions, reporting time and CPU cost.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path CSV (`s,kappa`), or `synth:<corners>x<length_m>` for a seeded
    /// synthetic track.
    #[arg(long)]
    path: String,
    /// Envelope definition JSON.
    #[arg(long)]
    env: PathBuf,
    /// Entry speed (m/s).
    #[arg(long)]
    v_ini: f64,
    /// Seed for the synthetic-track generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Resample the path to this many nodes before planning.
    #[arg(long)]
    resample: Option<usize>,
    /// Report the minimum CPU time over this many planning runs.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Write the profile CSV (`s,v_x,a_x,a_y`) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a JSON run report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Sample spacing (s) for the time-parameterized trajectory.
    #[arg(long)]
    dt: Option<f64>,
    /// Write the time-sampled trajectory CSV (`t,s,v_x,a_x,a_y`) here;
    /// requires or defaults `--dt` to 0.01 s.
    #[arg(long)]
    traj_out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Speed-grid levels of the reference solver.
    #[arg(long, default_value_t = 2000)]
    v_levels: usize,
    /// Lowest reference-solver speed level (m/s).
    #[arg(long, default_value_t = 0.5)]
    v_floor: f64,
    /// Maximum accepted relative gap between the two maneuver times.
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    /// Write the planner profile CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the reference profile CSV here (same schema, for diffing).
    #[arg(long)]
    oracle_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mesh sizes in segments: comma list (`100,200,500`) and/or ranges
    /// (`100:1000:100`).
    #[arg(long)]
    meshes: String,
    /// Randomize execution order (output stays ordered by mesh size).
    #[arg(long)]
    shuffle: bool,
    /// Write the sweep CSV (`n_segments,T,cpu_ms`) here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct InputDigest {
    source: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    inputs: Inputs,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "N")]
    n: usize,
    cpu_ms: f64,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct Inputs {
    path: InputDigest,
    env: InputDigest,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            EXIT_INPUT
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads the track from a CSV file or builds a seeded synthetic one
/// (`synth:<corners>x<length_m>`), then optionally resamples it.
fn load_track(
    spec: &str,
    seed: u64,
    resample: Option<usize>,
    base_nodes: usize,
) -> Result<(Path, InputDigest)> {
    let (path, digest) = if let Some(rest) = spec.strip_prefix("synth:") {
        let (corners, length) = rest
            .split_once(['x', 'X'])
            .context("synthetic path spec must be synth:<corners>x<length_m>")?;
        let corners: usize = corners.parse().context("bad corner count")?;
        let length: f64 = length.parse().context("bad track length")?;
        if corners == 0 || !(length > 100.0) {
            bail!("synthetic track needs >= 1 corner and length > 100 m");
        }
        let p = random_track(corners, length, base_nodes, seed)?;
        let digest = InputDigest {
            source: format!("{spec}#seed={seed}"),
            sha256: sha256_hex(format!("{spec}#seed={seed}").as_bytes()),
        };
        (p, digest)
    } else {
        let bytes = std::fs::read(spec).with_context(|| format!("reading path file {spec}"))?;
        let p = fbga::path::parse_path_csv(std::str::from_utf8(&bytes).context("path CSV utf-8")?)?;
        let digest = InputDigest {
            source: spec.to_string(),
            sha256: sha256_hex(&bytes),
        };
        (p, digest)
    };
    let path = match resample {
        Some(n) => {
            if n < 2 {
                bail!("--resample needs at least 2 nodes");
            }
            path.resample(n)
        }
        None => path,
    };
    Ok((path, digest))
}

fn load_env(file: &std::path::Path) -> Result<(GgvEnvelope, InputDigest)> {
    let bytes = std::fs::read(file).with_context(|| format!("reading envelope {}", file.display()))?;
    let env = GgvEnvelope::from_json(std::str::from_utf8(&bytes).context("envelope utf-8")?)?;
    Ok((
        env,
        InputDigest {
            source: file.display().to_string(),
            sha256: sha256_hex(&bytes),
        },
    ))
}

/// Runs the planner `repeat` times and reports the minimum wall-clock cost
/// of the planning call alone (no I/O).
fn timed_plan(
    path: &Path,
    env: &GgvEnvelope,
    bc: BoundaryConditions,
    cfg: &SolverConfig,
    repeat: usize,
) -> Result<(PlanResult, f64)> {
    let mut best_ms = f64::INFINITY;
    let mut result = None;
    for _ in 0..repeat.max(1) {
        let t0 = Instant::now();
        let res = plan(path, env, bc, cfg)?;
        best_ms = best_ms.min(t0.elapsed().as_secs_f64() * 1e3);
        result = Some(res);
    }
    Ok((result.expect("at least one run"), best_ms))
}

fn command_echo() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn cmd_plan(args: PlanArgs) -> Result<i32> {
    let c = &args.common;
    let (path, path_digest) = load_track(&c.path, c.seed, c.resample, 501)?;
    let (env, env_digest) = load_env(&c.env)?;
    let bc = BoundaryConditions { v_ini: c.v_ini };
    let cfg = SolverConfig::default();
    let (res, cpu_ms) = timed_plan(&path, &env, bc, &cfg, c.repeat)?;
    let warnings = res.diagnostics.warnings();

    if let Some(out) = &args.out {
        let f = std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
        write_profile_csv(std::io::BufWriter::new(f), &path, &res.v_x, &res.a_x, &res.a_y)?;
    }
    if let Some(traj_out) = &args.traj_out {
        let dt = args.dt.unwrap_or(0.01);
        if !(dt > 0.0) {
            bail!("--dt must be positive");
        }
        let samples = time_parameterize(&res, &path, dt);
        let f = std::fs::File::create(traj_out)
            .with_context(|| format!("creating {}", traj_out.display()))?;
        let mut w = std::io::BufWriter::new(f);
        writeln!(w, "t,s,v_x,a_x,a_y")?;
        for s in &samples {
            writeln!(w, "{},{},{},{},{}", s.t, s.s, s.v_x, s.a_x, s.a_y)?;
        }
    }
    if let Some(json) = &args.json {
        let report = RunReport {
            command: command_echo(),
            inputs: Inputs {
                path: path_digest,
                env: env_digest,
            },
            t: res.time,
            n: path.len(),
            cpu_ms,
            warnings: warnings.clone(),
        };
        std::fs::write(json, serde_json::to_string_pretty(&report)?)?;
    }

    println!("T={:.3}s", res.time);
    println!("cpu={:.3}ms", cpu_ms);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(if warnings.is_empty() { EXIT_OK } else { EXIT_WARN })
}

fn cmd_compare(args: CompareArgs) -> Result<i32> {
    let c = &args.common;
    let (path, _) = load_track(&c.path, c.seed, c.resample, 501)?;
    let (env, _) = load_env(&c.env)?;
    let bc = BoundaryConditions { v_ini: c.v_ini };
    let cfg = SolverConfig::default();
    if !(args.threshold >= 0.0) {
        bail!("--threshold must be >= 0");
    }

    let (res, cpu_fbga) = timed_plan(&path, &env, bc, &cfg, c.repeat)?;

    let ocfg = OracleConfig {
        v_levels: args.v_levels,
        v_floor: args.v_floor,
    };
    ocfg.validate().map_err(|e| anyhow::anyhow!(e))?;
    let t0 = Instant::now();
    let reference = match oracle_plan(&path, &env, bc, &ocfg) {
        Ok(r) => r,
        Err(OracleError::Infeasible { node }) => {
            eprintln!("reference solver found no feasible speed at node {node}");
            return Ok(EXIT_ORACLE_INFEASIBLE);
        }
        Err(e) => return Err(e.into()),
    };
    let cpu_oracle = t0.elapsed().as_secs_f64() * 1e3;

    if let Some(out) = &args.out {
        let f = std::fs::File::create(out)?;
        write_profile_csv(std::io::BufWriter::new(f), &path, &res.v_x, &res.a_x, &res.a_y)?;
    }
    if let Some(out) = &args.oracle_out {
        let a_y: Vec<f64> = path
            .kappa()
            .iter()
            .zip(&reference.v_x)
            .map(|(&k, &v)| k * v * v)
            .collect();
        let f = std::fs::File::create(out)?;
        write_profile_csv(
            std::io::BufWriter::new(f),
            &path,
            &reference.v_x,
            &reference.a_x,
            &a_y,
        )?;
    }

    let gap = (res.time - reference.time).abs() / reference.time;
    println!("T_fbga={:.4}s cpu_fbga={:.3}ms", res.time, cpu_fbga);
    println!("T_oracle={:.4}s cpu_oracle={:.3}ms", reference.time, cpu_oracle);
    println!(
        "gap={:.4}% (threshold {:.4}%)",
        gap * 100.0,
        args.threshold * 100.0
    );
    for w in res.diagnostics.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(if gap <= args.threshold {
        EXIT_OK
    } else {
        EXIT_WARN
    })
}

fn parse_meshes(spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((lo, rest)) = part.split_once(':') {
            let (hi, step) = rest
                .split_once(':')
                .context("range must be lo:hi:step")?;
            let (lo, hi, step): (usize, usize, usize) =
                (lo.parse()?, hi.parse()?, step.parse()?);
            if step == 0 {
                bail!("range step must be positive");
            }
            let mut v = lo;
            while v <= hi {
                out.push(v);
                v += step;
            }
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        bail!("--meshes produced no sizes");
    }
    if out.iter().any(|&n| n < 1) {
        bail!("mesh sizes must be >= 1 segment");
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let c = &args.common;
    let meshes = parse_meshes(&args.meshes)?;
    let max_mesh = *meshes.iter().max().expect("nonempty");
    let base_nodes = (2 * max_mesh + 1).max(2001);
    let (path, _) = load_track(&c.path, c.seed, c.resample, base_nodes)?;
    let (env, env_digest) = load_env(&c.env)?;
    let _ = env_digest;
    let bc = BoundaryConditions { v_ini: c.v_ini };
    let cfg = SolverConfig::default();

    let mut order: Vec<usize> = (0..meshes.len()).collect();
    if args.shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(c.seed));
    }

    let threads = std::env::var("FBGA_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&k| k >= 1)
        .unwrap_or(1)
        .min(order.len().max(1));

    let run_one = |mesh_idx: usize| -> Result<(usize, f64, f64)> {
        let n_segments = meshes[mesh_idx];
        let resampled = path.resample(n_segments + 1);
        let (res, cpu_ms) = timed_plan(&resampled, &env, bc, &cfg, c.repeat)?;
        Ok((n_segments, res.time, cpu_ms))
    };

    let mut rows: Vec<(usize, f64, f64)> = if threads <= 1 {
        order
            .iter()
            .map(|&i| run_one(i))
            .collect::<Result<Vec<_>>>()?
    } else {
        let queue = std::sync::Mutex::new(order.clone());
        let results = std::sync::Mutex::new(Vec::new());
        let errors = std::sync::Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let next = queue.lock().unwrap().pop();
                    match next {
                        Some(i) => match run_one(i) {
                            Ok(row) => results.lock().unwrap().push(row),
                            Err(e) => errors.lock().unwrap().push(e),
                        },
                        None => break,
                    }
                });
            }
        });
        let errs = errors.into_inner().unwrap();
        if let Some(e) = errs.into_iter().next() {
            return Err(e);
        }
        results.into_inner().unwrap()
    };
    rows.sort_by_key(|&(n, _, _)| n);

    let mut csv = String::from("n_segments,T,cpu_ms\n");
    for (n, t, ms) in &rows {
        csv.push_str(&format!("{n},{t},{ms}\n"));
    }
    match &args.out {
        Some(out) => std::fs::write(out, csv)?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}
