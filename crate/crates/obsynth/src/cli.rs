//! The `obsynth` command line.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use obsynth_core::bench::{
    gen_det_hallway, gen_escape, gen_fig1, gen_hallway, gen_random, gen_rocksample, hallway_preset,
    GridSpec, RandomSpec,
};
use obsynth_core::synth::{sweep, synthesize_with, Embedded, FrontierRow, SatBackend};
use obsynth_core::verify::verify;
use obsynth_core::{
    encode, Budget, Completion, EncodeOptions, ObsId, Pomdp, Prob, SideConstraints, SynthOptions,
    SynthOutcome, TseitinMode, Verdict,
};

use crate::constraints::parse_constraints;
use crate::dimacs::{write_dimacs, write_map};
use crate::document::{parse_document, write_document};
use crate::external::{ExternalSolver, SOLVER_ENV};
use crate::format::{parse_pomdp, parse_weight, print_pomdp};

/// Exit code for I/O, parse and internal errors.
pub const EXIT_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "obsynth",
    version,
    about = "Synthesize observation functions and finite-memory policies for POMDPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide one (mu, nu) instance. Exit 0 realizable, 1 unrealizable, 2 unknown.
    Synth(SynthArgs),
    /// Check a result document against a model. Exit 0 iff it wins almost surely.
    Verify {
        model: PathBuf,
        document: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Decide a range of (mu, nu) cells and print a CSV frontier.
    Sweep(SweepArgs),
    /// Write a generated model.
    Gen(GenArgs),
    /// Write the formula for one instance as DIMACS, with a `.map` sidecar.
    ExportDimacs {
        #[command(flatten)]
        inst: Instance,
        /// Output file; the variable map goes to `<out>.map`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Instance {
    /// Model file (`-` for standard input).
    pub model: PathBuf,
    #[arg(long)]
    pub mu: usize,
    #[arg(long)]
    pub nu: usize,
    /// Path bound; defaults to |S|*mu.
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub shape: Shape,
}

#[derive(Args, Debug, Clone)]
pub struct Shape {
    /// Singleton observation supports.
    #[arg(long)]
    pub deterministic: bool,
    /// Undefined mass may only go to new observations.
    #[arg(long)]
    pub strict: bool,
    /// One action per memory element.
    #[arg(long)]
    pub single_action: bool,
    /// Side-constraint file.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Tseitin::Flat)]
    pub tseitin: Tseitin,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Tseitin {
    Flat,
    Factored,
}

#[derive(Args, Debug, Clone)]
pub struct Solving {
    /// `embedded`, `external` (template from OBSYNTH_SOLVER) or a command
    /// template with an `{input}` placeholder.
    #[arg(long, default_value = "embedded")]
    pub solver: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock limit per solver call, in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub max_conflicts: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub inst: Instance,
    #[command(flatten)]
    pub solving: Solving,
    /// Write the result document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Draw grid models with cells labelled by observation class.
    #[arg(long)]
    pub render: bool,
    /// Print the result document instead of the report.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub model: PathBuf,
    /// Memory range such as `1..4` (inclusive) or a single value.
    #[arg(long, value_parser = parse_range)]
    pub mu: RangeInclusive<usize>,
    #[arg(long, value_parser = parse_range)]
    pub nu: RangeInclusive<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub shape: Shape,
    #[command(flatten)]
    pub solving: Solving,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub family: Family,
    /// Size parameter: hallway preset, escape grid size or rock count.
    pub size: Option<usize>,
    /// Layout file for `grid`.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long, value_parser = parse_prob)]
    pub p_fail: Option<Prob>,
    #[arg(long)]
    pub oriented: bool,
    #[arg(long)]
    pub crash_on_wall: bool,
    #[arg(long, value_parser = parse_prob)]
    pub sensor: Option<Prob>,
    #[arg(long, default_value_t = 4)]
    pub states: usize,
    #[arg(long, default_value_t = 2)]
    pub actions: usize,
    #[arg(long, default_value_t = 2)]
    pub observations: usize,
    #[arg(long, default_value_t = 2)]
    pub max_successors: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Fig1,
    DetHallway,
    Hallway,
    Grid,
    Escape,
    Rocksample,
    Random,
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad number `{t}`"));
    let r = match s.split_once("..") {
        Some((a, b)) => num(a)?..=num(b.trim_start_matches('='))?,
        None => num(s)?..=num(s)?,
    };
    if r.is_empty() {
        return Err(format!("empty range `{s}`"));
    }
    Ok(r)
}

fn parse_prob(s: &str) -> Result<Prob, String> {
    parse_weight(s).ok_or_else(|| format!("bad probability `{s}`"))
}

type Failure = String;

fn read_text(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| format!("stdin: {e}"))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_model(path: &Path) -> Result<Pomdp, Failure> {
    parse_pomdp(&read_text(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn side_constraints(p: &Pomdp, shape: &Shape) -> Result<SideConstraints, Failure> {
    let mut sc = match &shape.constraints {
        Some(path) => {
            parse_constraints(p, &read_text(path)?).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => SideConstraints::default(),
    };
    sc.deterministic |= shape.deterministic;
    sc.strict |= shape.strict;
    sc.single_action |= shape.single_action;
    Ok(sc)
}

fn backend(s: &Solving) -> Result<Box<dyn SatBackend>, Failure> {
    Ok(match s.solver.as_str() {
        "embedded" => Box::new(Embedded { seed: s.seed }),
        "external" => Box::new(
            ExternalSolver::from_env().ok_or_else(|| format!("{SOLVER_ENV} is not set"))?,
        ),
        template => Box::new(ExternalSolver::new(template)),
    })
}

fn tseitin(t: Tseitin) -> TseitinMode {
    match t {
        Tseitin::Flat => TseitinMode::Flat,
        Tseitin::Factored => TseitinMode::Factored,
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn check_instance(p: &Pomdp, mu: usize, k: Option<usize>) -> Result<(), Failure> {
    if mu == 0 {
        return Err("--mu must be at least 1".into());
    }
    let bound = p.num_states() * mu;
    match k {
        Some(k) if k == 0 || k > bound => Err(format!("--k must lie in 1..={bound}")),
        _ => Ok(()),
    }
}

/// Run one synthesis with the time and conflict limits of `s`.
fn run_synth(
    p: &Pomdp,
    mu: usize,
    nu: usize,
    k: Option<usize>,
    sc: &SideConstraints,
    shape: &Shape,
    s: &Solving,
) -> Result<SynthOutcome, Failure> {
    let mut be = backend(s)?;
    let start = Instant::now();
    let clock = || start.elapsed().as_millis() as u64;
    let deadline = s.timeout.map(|t| start + Duration::from_secs_f64(t.max(0.0)));
    let stop = || deadline.is_some_and(|d| Instant::now() >= d);
    let opts = SynthOptions {
        k,
        tseitin: tseitin(shape.tseitin),
        budget: Budget {
            max_conflicts: s.max_conflicts,
            interrupt: deadline.map(|_| &stop as &dyn Fn() -> bool),
        },
        seed: s.seed,
        clock: Some(&clock),
    };
    synthesize_with(p, mu, nu, sc, &opts, be.as_mut()).map_err(|e| e.to_string())
}

fn exit_for(v: Verdict) -> u8 {
    match v {
        Verdict::Realizable => 0,
        Verdict::Unrealizable => 1,
        Verdict::Unknown => 2,
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<u8, Failure> {
    let p = load_model(&a.inst.model)?;
    check_instance(&p, a.inst.mu, a.inst.k)?;
    let sc = side_constraints(&p, &a.inst.shape)?;
    let o = run_synth(&p, a.inst.mu, a.inst.nu, a.inst.k, &sc, &a.inst.shape, &a.solving)?;
    let doc = write_document(&p, &o);
    if let Some(out) = &a.out {
        write_out(out, &doc)?;
    }
    let mut stdout = io::stdout().lock();
    let text = if a.quiet { doc } else { report(&p, a, &o) };
    let _ = stdout.write_all(text.as_bytes());
    Ok(exit_for(o.verdict()))
}

fn report(p: &Pomdp, a: &SynthArgs, o: &SynthOutcome) -> String {
    let st = &o.stats;
    let mut out = String::new();
    let _ = writeln!(out, "{} (mu={}, nu={}, k={})", o.verdict(), a.inst.mu, a.inst.nu, st.k);
    let _ = writeln!(
        out,
        "{} variables ({} semantic), {} clauses, {} conflicts, {} ms",
        st.vars, st.semantic_vars, st.clauses, st.conflicts, st.time_ms
    );
    if let obsynth_core::synth::SynthResult::Unknown { reason, .. } = &o.result {
        let _ = writeln!(out, "reason: {reason}");
    }
    let Some(sol) = o.solution() else {
        return out;
    };
    let (c, pol) = (&sol.completion, &sol.policy);
    let _ = writeln!(out, "memory elements: {}", pol.memory_size());
    for m in pol.memories() {
        let acts: Vec<&str> = pol.actions(m).iter().map(|&x| p.action_name(x)).collect();
        let _ = writeln!(out, "  m{}: {}", m.0, acts.join(" "));
    }
    let _ = writeln!(out, "observation classes:");
    for (label, states) in classes(p, c) {
        let _ = writeln!(out, "  {label}: {}", states.join(" "));
    }
    if a.render {
        match render_grid(p, c) {
            Some(g) => out.push_str(&g),
            None => out.push_str("(not a grid model)\n"),
        }
    }
    out
}

/// States grouped by their observation support.
fn classes(p: &Pomdp, c: &Completion) -> Vec<(String, Vec<String>)> {
    let mut groups: Vec<(Vec<ObsId>, Vec<String>)> = Vec::new();
    for s in p.states() {
        let sup: Vec<ObsId> = c.support(s).collect();
        match groups.iter_mut().find(|g| g.0 == sup) {
            Some(g) => g.1.push(p.state_name(s).into()),
            None => groups.push((sup, vec![p.state_name(s).into()])),
        }
    }
    groups
        .into_iter()
        .map(|(sup, states)| {
            let names: Vec<&str> = sup.iter().map(|&z| c.obs_name(z)).collect();
            (format!("{{{}}}", names.join(",")), states)
        })
        .collect()
}

fn grid_pos(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix('r')?;
    let (r, rest) = rest.split_once('c')?;
    let c = rest.split('_').next()?;
    Some((r.parse().ok()?, c.parse().ok()?))
}

/// ASCII map of a grid model: each cell shows a letter for the set of
/// observation supports of its states, `#` marks cells without a state.
fn render_grid(p: &Pomdp, c: &Completion) -> Option<String> {
    let cells: Vec<((usize, usize), Vec<ObsId>)> = p
        .states()
        .filter_map(|s| grid_pos(p.state_name(s)).map(|pos| (pos, c.support(s).collect())))
        .collect();
    if cells.is_empty() {
        return None;
    }
    let h = cells.iter().map(|x| x.0 .0).max()? + 1;
    let w = cells.iter().map(|x| x.0 .1).max()? + 1;
    let mut per_cell: Vec<Vec<Vec<ObsId>>> = vec![Vec::new(); h * w];
    for ((r, col), sup) in cells {
        let slot = &mut per_cell[r * w + col];
        if !slot.contains(&sup) {
            slot.push(sup);
        }
    }
    let mut legend: Vec<Vec<Vec<ObsId>>> = Vec::new();
    let mut out = String::new();
    for r in 0..h {
        for col in 0..w {
            let mut key = per_cell[r * w + col].clone();
            if key.is_empty() {
                out.push('#');
                continue;
            }
            key.sort();
            let i = legend.iter().position(|k| *k == key).unwrap_or_else(|| {
                legend.push(key);
                legend.len() - 1
            });
            out.push(char::from(b'A' + (i % 26) as u8));
        }
        out.push('\n');
    }
    for (i, key) in legend.iter().enumerate() {
        let sets: Vec<String> = key
            .iter()
            .map(|sup| {
                let n: Vec<&str> = sup.iter().map(|&z| c.obs_name(z)).collect();
                format!("{{{}}}", n.join(","))
            })
            .collect();
        let _ = writeln!(out, "{} = {}", char::from(b'A' + (i % 26) as u8), sets.join(" "));
    }
    Some(out)
}

fn cmd_verify(model: &Path, doc: &Path, quiet: bool) -> Result<u8, Failure> {
    let p = load_model(model)?;
    let d = parse_document(&p, &read_text(doc)?).map_err(|e| format!("{}: {e}", doc.display()))?;
    let (Some(c), Some(pol)) = (d.completion, d.policy) else {
        return Err(format!("{}: document carries no policy ({})", doc.display(), d.verdict));
    };
    if pol.num_observations() != c.num_observations() {
        return Err("policy and completion use different observation alphabets".into());
    }
    if pol.num_actions() != p.num_actions() {
        return Err("policy and model use different action sets".into());
    }
    let violations = c.check_against(&p, false);
    if !violations.is_empty() {
        for v in &violations {
            println!("inconsistent completion: {v}");
        }
        return Ok(1);
    }
    let cert = verify(&p, &c, &pol);
    if cert.almost_sure {
        if quiet {
            println!("almost-sure: true");
        } else {
            print!("{}", cert.render(&p));
        }
        Ok(0)
    } else {
        let (s, m) = cert.witness.expect("failing certificate has a witness");
        println!("almost-sure: false");
        println!("witness: ({}, m{}) is reachable but cannot reach the goal", p.state_name(s), m.0);
        Ok(1)
    }
}

/// CSV rendering of a frontier.
pub fn frontier_csv(rows: &[FrontierRow]) -> String {
    let mut out = String::from("mu,nu,verdict,vars,clauses,time_ms,conflicts\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.mu, r.nu, r.verdict, r.stats.vars, r.stats.clauses, r.stats.time_ms, r.stats.conflicts
        );
    }
    out
}

fn cmd_sweep(a: &SweepArgs) -> Result<u8, Failure> {
    let p = load_model(&a.model)?;
    check_instance(&p, *a.mu.start(), a.k)?;
    let sc = side_constraints(&p, &a.shape)?;
    let mut be = backend(&a.solving)?;
    let start = Instant::now();
    let clock = || start.elapsed().as_millis() as u64;
    // the timeout applies to each cell
    let cell_start = std::cell::Cell::new(Instant::now());
    let stop = || a.solving.timeout.is_some_and(|t| cell_start.get().elapsed().as_secs_f64() >= t);
    let opts = SynthOptions {
        k: a.k,
        tseitin: tseitin(a.shape.tseitin),
        budget: Budget {
            max_conflicts: a.solving.max_conflicts,
            interrupt: a.solving.timeout.map(|_| &stop as &dyn Fn() -> bool),
        },
        seed: a.solving.seed,
        clock: Some(&clock),
    };
    let mut rows = Vec::new();
    for mu in a.mu.clone() {
        for nu in a.nu.clone() {
            cell_start.set(Instant::now());
            rows.extend(sweep(&p, mu..=mu, nu..=nu, &sc, &opts, be.as_mut()));
        }
    }
    let csv = frontier_csv(&rows);
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("mu={} nu={}: {e}", r.mu, r.nu);
        }
    }
    match &a.out {
        Some(path) => write_out(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn cmd_gen(a: &GenArgs) -> Result<u8, Failure> {
    let size = |what: &str| a.size.ok_or_else(|| format!("{what} needs a size argument"));
    let p = match a.family {
        Family::Fig1 => gen_fig1(),
        Family::DetHallway => gen_det_hallway(),
        Family::Hallway => hallway_preset(size("hallway")?).map_err(|e| e.to_string())?,
        Family::Escape => gen_escape(size("escape")?).map_err(|e| e.to_string())?,
        Family::Rocksample => gen_rocksample(size("rocksample")?).map_err(|e| e.to_string())?,
        Family::Grid => {
            let path = a.layout.as_ref().ok_or("grid needs --layout")?;
            let mut spec = GridSpec::parse(&read_text(path)?).map_err(|e| e.to_string())?;
            if let Some(pf) = a.p_fail {
                spec.p_fail = pf;
            }
            spec.oriented = a.oriented;
            spec.crash_on_wall = a.crash_on_wall;
            spec.sensor = a.sensor;
            gen_hallway(&spec).map_err(|e| e.to_string())?
        }
        Family::Random => {
            if a.states == 0 || a.actions == 0 || a.max_successors == 0 {
                return Err("random models need at least one state, action and successor".into());
            }
            let spec = RandomSpec {
                states: a.states,
                actions: a.actions,
                observations: a.observations,
                max_successors: a.max_successors,
            };
            gen_random(spec, a.seed)
        }
    };
    let text = print_pomdp(&p);
    match &a.out {
        Some(path) => write_out(path, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_export(inst: &Instance, out: &Path) -> Result<u8, Failure> {
    let p = load_model(&inst.model)?;
    check_instance(&p, inst.mu, inst.k)?;
    let sc = side_constraints(&p, &inst.shape)?;
    let mut opts = EncodeOptions::full(&p, inst.mu, inst.nu);
    opts.tseitin = tseitin(inst.shape.tseitin);
    if let Some(k) = inst.k {
        opts.k = k;
    }
    let (f, vm) = encode(&p, &opts, &sc).map_err(|e| e.to_string())?;
    let io = |path: &Path, e: io::Error| format!("{}: {e}", path.display());
    let file = fs::File::create(out).map_err(|e| io(out, e))?;
    write_dimacs(&f, BufWriter::new(file)).map_err(|e| io(out, e))?;
    let mut map_path = out.as_os_str().to_owned();
    map_path.push(".map");
    let map_path = PathBuf::from(map_path);
    let file = fs::File::create(&map_path).map_err(|e| io(&map_path, e))?;
    write_map(&p, &vm, BufWriter::new(file)).map_err(|e| io(&map_path, e))?;
    println!("p cnf {} {}", f.num_vars(), f.num_clauses());
    Ok(0)
}

/// Run a parsed command line, returning the process exit code.
pub fn run(cli: Cli) -> u8 {
    let r = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Verify {
            model,
            document,
            quiet,
        } => cmd_verify(model, document, *quiet),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Gen(a) => cmd_gen(a),
        Command::ExportDimacs { inst, out } => cmd_export(inst, out),
    };
    r.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    ExitCode::from(run(cli))
}
