//! Command-line surface: synthesis, simulation and verification commands
//! tied to fixed artifact filenames under `--out`.
//!
//! Exit codes: 0 success, 2 usage/parse failure, 3 empty result,
//! 4 verification or containment failure, 5 on-line controller failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::direct::{
    self, algorithm1, cells_bounding_box, connected_components, verify_invariance, GridSpec,
};
use crate::error::Error;
use crate::flow::Vector;
use crate::indirect::{
    build_abstract_graph, certificate, find_patterns, safety_synthesis, CertificateOutcome, Grid,
    SwitchingPattern,
};
use crate::model::format::{parse_real, parse_system, ParsedModel};
use crate::model::StateBox;
use crate::sim;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;
pub const EXIT_UNSAFE: i32 = 4;
pub const EXIT_CONTROLLER: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "switchsynth",
    about = "Safe switching-rule synthesis for sampled switched linear systems",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Grid abstraction, safety synthesis and periodic pattern extraction
    SynthIndirect(SynthIndirectArgs),
    /// Controllable-subspace fixpoint over the cell grid
    SynthDirect(SynthDirectArgs),
    /// Simulate a periodic pattern or the on-line controller
    Simulate(SimulateArgs),
    /// Re-check a subspace artifact against the model (invariance)
    Verify(VerifyArgs),
}

fn real(s: &str) -> Result<f64, String> {
    parse_real(s).ok_or_else(|| format!("`{s}` is not a number (decimals and p/q accepted)"))
}

/// A mode sequence: comma/space separated ids, or a contiguous digit string
/// like `12121212122` when all mode ids are single digits.
#[derive(Clone, Debug)]
pub struct PatternSpec(pub Vec<usize>);

fn pattern_spec(s: &str) -> Result<PatternSpec, String> {
    pattern_arg(s).map(PatternSpec)
}

fn pattern_arg(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty pattern".into());
    }
    if s.contains([',', ' ']) {
        s.split([',', ' '])
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| format!("bad mode id `{t}`")))
            .collect()
    } else if s.chars().all(|c| c.is_ascii_digit()) {
        Ok(s.bytes().map(|b| (b - b'0') as usize).collect())
    } else {
        s.parse::<usize>()
            .map(|m| vec![m])
            .map_err(|_| format!("cannot read pattern `{s}`"))
    }
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Model file (explicit matrices or a named builder)
    #[arg(long)]
    pub model: PathBuf,

    /// Safe box lower corner, comma separated (overrides the model file)
    #[arg(long, value_delimiter = ',', value_parser = real)]
    pub v_lower: Option<Vec<f64>>,

    /// Safe box upper corner, comma separated (overrides the model file)
    #[arg(long, value_delimiter = ',', value_parser = real)]
    pub v_upper: Option<Vec<f64>>,

    /// Sampling period override
    #[arg(long, value_parser = real)]
    pub tau: Option<f64>,

    /// Output directory for artifacts
    #[arg(long)]
    pub out: PathBuf,

    /// Cap on rayon worker threads
    #[arg(long)]
    pub threads: Option<usize>,

    /// Seed recorded in the report (for reproducible batch runs)
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SynthIndirectArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Grid pitch eta: lattice points sit at integer multiples of eta,
    /// so the quantization radius is eta/2
    #[arg(long, value_parser = real)]
    pub eta: Option<f64>,

    /// Longest periodic pattern to extract
    #[arg(long, default_value_t = 12)]
    pub max_cycle_len: usize,
}

#[derive(Args, Debug)]
pub struct SynthDirectArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Cell sizes, comma separated (one value is broadcast; default
    /// edge/200 per dimension)
    #[arg(long, value_delimiter = ',', value_parser = real)]
    pub delta: Option<Vec<f64>>,

    /// Sample points per cell for the invariance check
    #[arg(long, default_value_t = 5)]
    pub samples_per_cell: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Initial state, comma separated
    #[arg(long, required = true, value_delimiter = ',', value_parser = real)]
    pub x0: Vec<f64>,

    /// Periodic pattern (exclusive with --subspace)
    #[arg(long, value_parser = pattern_spec, conflicts_with = "subspace")]
    pub pattern: Option<PatternSpec>,

    /// Subspace artifact for closed-loop simulation (exclusive with --pattern)
    #[arg(long)]
    pub subspace: Option<PathBuf>,

    /// Number of sampling periods
    #[arg(long, default_value_t = 200)]
    pub steps: usize,

    /// Substeps per sampling period
    #[arg(long, default_value_t = 32)]
    pub substeps: usize,

    /// Inflate V by epsilon (infinity norm) for the containment verdict
    #[arg(long, value_parser = real, default_value = "0")]
    pub epsilon: f64,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Subspace artifact to check
    #[arg(long)]
    pub subspace: PathBuf,

    /// Sample points per cell
    #[arg(long, default_value_t = 5)]
    pub samples_per_cell: usize,
}

/// Parse the CLI and run; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (common, result) = match &cli.command {
        Command::SynthIndirect(a) => (&a.common, cmd_synth_indirect(a)),
        Command::SynthDirect(a) => (&a.common, cmd_synth_direct(a)),
        Command::Simulate(a) => (&a.common, cmd_simulate(a)),
        Command::Verify(a) => (&a.common, cmd_verify(a)),
    };
    let _ = common;
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NoSafeMode { .. } => EXIT_CONTROLLER,
                _ => EXIT_USAGE,
            }
        }
    }
}

struct Prepared {
    model: ParsedModel,
    region: StateBox,
}

fn prepare(common: &CommonArgs) -> crate::Result<Prepared> {
    if let Some(threads) = common.threads {
        // a prior global pool (e.g. in tests) is fine to keep
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let text = fs::read_to_string(&common.model)?;
    let mut model = parse_system(&text)?;
    if let Some(tau) = common.tau {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter("tau must be positive".into()));
        }
        let modes = model.system.modes.clone();
        let dim = model.system.dim;
        model.system = crate::model::SwitchedSystem::new(dim, modes, tau)?;
    }
    let region = match (&common.v_lower, &common.v_upper) {
        (Some(lo), Some(hi)) => StateBox::new(
            Vector::from_vec(lo.clone()),
            Vector::from_vec(hi.clone()),
        )?,
        (None, None) => model.region.clone().ok_or_else(|| {
            Error::InvalidParameter(
                "no safe box: provide --v-lower/--v-upper or a box in the model file".into(),
            )
        })?,
        _ => {
            return Err(Error::InvalidParameter(
                "--v-lower and --v-upper must be given together".into(),
            ))
        }
    };
    if region.dim() != model.system.dim {
        return Err(Error::DimensionMismatch {
            expected: model.system.dim,
            got: region.dim(),
        });
    }
    fs::create_dir_all(&common.out)?;
    Ok(Prepared { model, region })
}

fn write_artifact(dir: &Path, name: &str, contents: &[u8]) -> std::io::Result<()> {
    fs::write(dir.join(name), contents)
}

fn fmt_vec(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

pub fn cmd_synth_indirect(args: &SynthIndirectArgs) -> crate::Result<i32> {
    let p = prepare(&args.common)?;
    let sys = &p.model.system;
    let eta = args
        .eta
        .or(p.model.eta)
        .ok_or_else(|| Error::InvalidParameter("eta required (flag or model file)".into()))?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter("eta must be positive".into()));
    }

    // the flag follows the published experiments, where eta names the
    // lattice pitch; Grid's eta field is the quantization radius
    let radius = eta / 2.0;
    let cert = certificate(sys, radius)?;
    let flows = sys.flow_maps()?;
    let grid = Grid::new(radius, sys.dim);
    let graph = build_abstract_graph(&flows, &p.region, &grid)?;
    let winning = safety_synthesis(&graph);
    let patterns = find_patterns(&graph, &winning, args.max_cycle_len);

    let out = &args.common.out;
    let mut buf = Vec::new();
    direct_io_guard(crate::indirect::graph::write_edge_list(&graph, &mut buf))?;
    write_artifact(out, "graph.txt", &buf)?;
    buf.clear();
    direct_io_guard(crate::indirect::graph::write_dot(&graph, &mut buf))?;
    write_artifact(out, "graph.dot", &buf)?;

    let mut cert_txt = String::new();
    match cert {
        CertificateOutcome::Certified(c) => {
            let _ = writeln!(cert_txt, "certified");
            let _ = writeln!(cert_txt, "beta {}", c.beta);
            let _ = writeln!(cert_txt, "eta {}", c.eta);
            let _ = writeln!(cert_txt, "epsilon {}", c.epsilon);
        }
        CertificateOutcome::Uncertified { beta } => {
            let _ = writeln!(cert_txt, "uncertified");
            let _ = writeln!(cert_txt, "beta {beta}");
            let _ = writeln!(cert_txt, "eta {eta}");
        }
    }
    write_artifact(out, "certificate.txt", cert_txt.as_bytes())?;

    let mut pat_txt = String::new();
    for pat in &patterns {
        let _ = writeln!(pat_txt, "{pat}");
    }
    write_artifact(out, "patterns.txt", pat_txt.as_bytes())?;

    let mut report = String::new();
    let _ = writeln!(report, "method indirect");
    let _ = writeln!(report, "nodes {}", graph.node_count());
    let _ = writeln!(report, "winning {}", winning.size());
    let _ = writeln!(report, "patterns {}", patterns.len());
    let _ = writeln!(report, "certified {}", cert.is_certified());
    if let Some(seed) = args.common.seed {
        let _ = writeln!(report, "seed {seed}");
    }
    write_artifact(out, "report.txt", report.as_bytes())?;

    println!(
        "indirect: {} nodes, winning set {}, {} patterns, certificate {}",
        graph.node_count(),
        winning.size(),
        patterns.len(),
        if cert.is_certified() { "certified" } else { "uncertified" }
    );
    Ok(if winning.size() > 0 { EXIT_OK } else { EXIT_EMPTY })
}

fn direct_io_guard(r: std::io::Result<()>) -> crate::Result<()> {
    r.map_err(Error::Io)
}

fn default_delta(region: &StateBox) -> Vec<f64> {
    region.edge_lengths().iter().map(|e| e / 200.0).collect()
}

pub fn cmd_synth_direct(args: &SynthDirectArgs) -> crate::Result<i32> {
    let p = prepare(&args.common)?;
    let sys = &p.model.system;
    let delta = match args.delta.clone().or_else(|| p.model.delta.clone()) {
        Some(d) if d.len() == 1 => vec![d[0]; sys.dim],
        Some(d) => d,
        None => default_delta(&p.region),
    };
    let spec = GridSpec::snap(&p.region, &delta)?;
    let flows = sys.flow_maps()?;
    let cs = algorithm1(&flows, &spec)?;
    let invariance = verify_invariance(&flows, &cs, args.samples_per_cell);
    let uncontrol = cs.uncontrollable();
    let zones = connected_components(&uncontrol);

    let out = &args.common.out;
    let mut buf = Vec::new();
    direct_io_guard(direct::io::write_subspace(&cs, &mut buf))?;
    write_artifact(out, "subspace.txt", &buf)?;
    buf.clear();
    direct_io_guard(direct::io::write_regions_svg(&cs, &mut buf))?;
    write_artifact(out, "regions.svg", &buf)?;

    let mut report = String::new();
    let _ = writeln!(report, "method direct");
    let _ = writeln!(report, "cells {}", spec.cell_count());
    let _ = writeln!(report, "iterations {}", cs.iterations);
    let _ = writeln!(report, "converged {}", cs.converged);
    let _ = writeln!(report, "v_prime_cells {}", cs.v_prime.count());
    for (i, c) in cs.control.iter().enumerate() {
        let _ = writeln!(report, "control_{} {}", i + 1, c.count());
    }
    let _ = writeln!(report, "uncontrollable_zones {}", zones.len());
    for (i, z) in zones.iter().enumerate() {
        if let Some((lo, hi)) = cells_bounding_box(&spec, z) {
            let _ = writeln!(
                report,
                "zone_{} cells {} bbox {} {}",
                i + 1,
                z.len(),
                fmt_vec(&lo),
                fmt_vec(&hi)
            );
        }
    }
    let _ = writeln!(report, "invariance_violations {}", invariance.violations.len());
    let _ = writeln!(report, "boundary_grazing {}", invariance.boundary_grazing);
    if let Some(seed) = args.common.seed {
        let _ = writeln!(report, "seed {seed}");
    }
    write_artifact(out, "report.txt", report.as_bytes())?;

    println!(
        "direct: {} iterations ({}), V' = {} of {} cells, {} uncontrollable zones, {} violations",
        cs.iterations,
        if cs.converged { "converged" } else { "iteration bound hit" },
        cs.v_prime.count(),
        spec.cell_count(),
        zones.len(),
        invariance.violations.len()
    );
    Ok(if cs.v_prime.is_empty() { EXIT_EMPTY } else { EXIT_OK })
}

pub fn cmd_simulate(args: &SimulateArgs) -> crate::Result<i32> {
    let p = prepare(&args.common)?;
    let sys = &p.model.system;
    let x0 = Vector::from_vec(args.x0.clone());
    let out = &args.common.out;

    let (trajectory, closed_loop) = match (&args.pattern, &args.subspace) {
        (Some(PatternSpec(modes)), None) => {
            let pat = SwitchingPattern::new(modes.clone());
            (sim::simulate_pattern(sys, &x0, &pat, args.steps, args.substeps)?, false)
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            let cs = direct::io::read_subspace(&text)?;
            match sim::simulate_closed_loop(sys, &x0, &cs, args.steps, args.substeps) {
                Ok((t, _log)) => (t, true),
                Err(e @ Error::NoSafeMode { .. }) => {
                    eprintln!("error: {e}");
                    return Ok(EXIT_CONTROLLER);
                }
                Err(e) => return Err(e),
            }
        }
        _ => {
            return Err(Error::InvalidParameter(
                "exactly one of --pattern or --subspace is required".into(),
            ))
        }
    };

    // closed-loop runs are judged against V exactly; pattern runs against
    // the epsilon-inflated box
    let epsilon = if closed_loop { 0.0 } else { args.epsilon };
    let report = sim::check_containment(&trajectory, &p.region, epsilon);

    let mut buf = Vec::new();
    direct_io_guard(sim::write_csv(&trajectory, &mut buf))?;
    write_artifact(out, "trajectory.csv", &buf)?;

    let mut txt = String::new();
    let _ = writeln!(txt, "mode {}", if closed_loop { "closed-loop" } else { "pattern" });
    let _ = writeln!(txt, "steps {}", args.steps);
    let _ = writeln!(txt, "substeps {}", args.substeps);
    let _ = writeln!(txt, "epsilon {epsilon}");
    let _ = writeln!(txt, "violations_at_samples {}", report.violations_at_samples.len());
    let _ = writeln!(txt, "violations_between {}", report.violations_between.len());
    let _ = writeln!(txt, "max_excursion {}", report.max_excursion);
    for v in report.violations_at_samples.iter().take(20) {
        let _ = writeln!(txt, "sample_violation point {} state {} distance {}", v.step, fmt_vec(&v.state), v.distance);
    }
    write_artifact(out, "report.txt", txt.as_bytes())?;

    println!(
        "simulate: {} sample violations, {} between-sample, max excursion {}",
        report.violations_at_samples.len(),
        report.violations_between.len(),
        report.max_excursion
    );
    Ok(if report.violations_at_samples.is_empty() { EXIT_OK } else { EXIT_UNSAFE })
}

pub fn cmd_verify(args: &VerifyArgs) -> crate::Result<i32> {
    let p = prepare(&args.common)?;
    let sys = &p.model.system;
    let text = fs::read_to_string(&args.subspace)?;
    let cs = direct::io::read_subspace(&text)?;
    if cs.spec.dim() != sys.dim {
        return Err(Error::DimensionMismatch {
            expected: sys.dim,
            got: cs.spec.dim(),
        });
    }
    let flows = sys.flow_maps()?;
    let report = verify_invariance(&flows, &cs, args.samples_per_cell);

    let mut txt = String::new();
    let _ = writeln!(txt, "cells_checked {}", report.cells_checked);
    let _ = writeln!(txt, "violations {}", report.violations.len());
    let _ = writeln!(txt, "boundary_grazing {}", report.boundary_grazing);
    for v in report.violations.iter().take(50) {
        let _ = writeln!(txt, "violation mode {} cell {} kind {:?}", v.mode, v.cell, v.kind);
    }
    write_artifact(&args.common.out, "report.txt", txt.as_bytes())?;

    println!(
        "verify: {} cells checked, {} violations, {} boundary-grazing",
        report.cells_checked,
        report.violations.len(),
        report.boundary_grazing
    );
    Ok(if report.is_clean() { EXIT_OK } else { EXIT_UNSAFE })
}
