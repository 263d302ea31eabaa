//! Command-line front end.
//!
//! Exit codes: 0 on success or a positive verdict, 1 on a negative verdict
//! (non-member, regions differ, a check failed), 2 on usage or validation
//! errors. Every command that writes files also writes a run manifest.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::channel::{
    check_strong_interference, strong_interference_sweep, AuxCards, ChannelSpec,
    DeterministicSpec, InputFactorization, SweepConfig,
};
use crate::error::{Error, Result};
use crate::num::fmt_num;
use crate::polytope::{parse_bbox, IneqSystem, RatePoint, DEFAULT_TOL};
use crate::regions::{self, RegionKind, UnionConfig};
use crate::sim::{estimate_errors, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ICCKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "icckit", version, about = "Rate regions for interference channels with common information")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a region for one channel and one input distribution.
    Region(RegionArgs),
    /// Eliminate coordinates from a region file.
    Fme(FmeArgs),
    /// Test whether a rate point lies in a region.
    Member(MemberArgs),
    /// Compare two regions on a grid.
    Diff(DiffArgs),
    /// Union of regions over sampled input distributions.
    Union(UnionArgs),
    /// Monte Carlo error rates of the layered code.
    Simulate(SimulateArgs),
    /// Check the strong-interference conditions.
    Strongcheck(StrongArgs),
    /// Check that time-shared rate points stay in the region.
    Timeshare(TimeshareArgs),
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Channel file: a kernel or a deterministic description.
    #[arg(long)]
    pub channel: PathBuf,
    /// Input distribution file.
    #[arg(long)]
    pub dist: PathBuf,
    /// implicit, explicit, sicc, sicc-reduced, cmg, aicc-m, aicc or dicc.
    #[arg(long, default_value = "explicit")]
    pub kind: RegionKind,
    /// Output path; `.csv`, `.json` and `.manifest.json` files are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FmeArgs {
    /// Region file (`.json` or `.csv`).
    #[arg(long)]
    pub region: PathBuf,
    /// Coordinates to eliminate, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub eliminate: Vec<String>,
    /// New coordinate defined as a sum, e.g. `R1=R12+R11`. Repeatable.
    #[arg(long = "sum")]
    pub sums: Vec<String>,
    /// Final coordinate order, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub order: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MemberArgs {
    #[arg(long)]
    pub region: PathBuf,
    /// Rate point, e.g. `R0=0.1,R1=0.2,R2=0`.
    #[arg(long)]
    pub point: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    /// `lo:hi` for every coordinate, or one range per coordinate.
    #[arg(long, default_value = "0:2")]
    pub bbox: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Report output path (`.csv`); a manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UnionArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value = "explicit")]
    pub kind: RegionKind,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Auxiliary cardinalities `u0,u1,u2`.
    #[arg(long, default_value = "2,2,2")]
    pub cards: String,
    /// Query point; exit status reports whether it is accepted.
    #[arg(long)]
    pub point: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// JSON file listing every sampled distribution with its region.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path; a manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StrongArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// Check one sicc distribution instead of sweeping the family.
    #[arg(long)]
    pub dist: Option<PathBuf>,
    /// Simplex grid step of the sweep; 0 disables the grid.
    #[arg(long, default_value_t = 0.25)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 2)]
    pub u0_card: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TimeshareArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// The two layered distributions; give the flag twice.
    #[arg(long, num_args = 1, required = true)]
    pub dist: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Member points drawn from each region.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Provenance record written next to every output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub version: String,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            inputs: Vec::new(),
            seed: None,
            tolerances: BTreeMap::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    fn tol(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.into(), value);
        self
    }
}

/// An error tied to the file it came from.
#[derive(Debug)]
pub struct CliError {
    pub path: Option<PathBuf>,
    pub error: Error,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.path {
            Some(p) => write!(f, "{}: {}", p.display(), self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        Self { path: None, error }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn at<T>(path: &Path, r: Result<T>) -> CliResult<T> {
    r.map_err(|error| CliError {
        path: Some(path.to_path_buf()),
        error,
    })
}

fn read(path: &Path) -> CliResult<String> {
    at(path, fs::read_to_string(path).map_err(Error::from))
}

/// A channel file holds either a kernel or a deterministic description
/// (recognized by its `k1` field).
pub fn load_channel(path: &Path) -> CliResult<(ChannelSpec, Option<DeterministicSpec>)> {
    let text = read(path)?;
    let value: serde_json::Value = at(path, serde_json::from_str(&text).map_err(Error::from))?;
    if value.get("k1").is_some() {
        let d = at(path, DeterministicSpec::from_json(&text))?;
        let ch = at(path, d.lift())?;
        Ok((ch, Some(d)))
    } else {
        Ok((at(path, ChannelSpec::from_json(&text))?, None))
    }
}

pub fn load_dist(path: &Path) -> CliResult<InputFactorization> {
    let text = read(path)?;
    at(path, InputFactorization::from_json(&text))
}

/// Reads a region from JSON, or from CSV when the extension is `.csv`.
pub fn load_region(path: &Path) -> CliResult<IneqSystem> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "csv") {
        at(path, IneqSystem::from_csv(&text))
    } else {
        at(path, IneqSystem::from_json(&text))
    }
}

fn stem(out: &Path) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some("csv" | "json") => out.with_extension(""),
        _ => out.to_path_buf(),
    }
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        at(dir, fs::create_dir_all(dir).map_err(Error::from))?;
    }
    at(path, fs::write(path, contents).map_err(Error::from))
}

/// Writes each `(suffix, contents)` next to `out` plus the manifest.
fn emit(out: &Path, files: &[(&str, String)], mut manifest: RunManifest) -> CliResult<()> {
    let stem = stem(out);
    for (suffix, contents) in files {
        let path = with_suffix(&stem, suffix);
        write(&path, contents)?;
        manifest.outputs.push(path.display().to_string());
    }
    let mut json = serde_json::to_string_pretty(&manifest).expect("serializable");
    json.push('\n');
    write(&with_suffix(&stem, ".manifest.json"), &json)
}

fn emit_region(out: Option<&Path>, s: &IneqSystem, manifest: RunManifest) -> CliResult<()> {
    match out {
        Some(out) => emit(out, &[(".csv", s.to_csv()), (".json", s.to_json())], manifest),
        None => {
            print!("{}", s.to_csv());
            Ok(())
        }
    }
}

fn cmd_region(a: &RegionArgs) -> CliResult<i32> {
    let (ch, det) = load_channel(&a.channel)?;
    let f = load_dist(&a.dist)?;
    let s = at(&a.dist, regions::region_of(a.kind, &f, &ch, det.as_ref()))?;
    let manifest = RunManifest::new(&format!("region --kind {}", a.kind))
        .input(&a.channel)
        .input(&a.dist);
    emit_region(a.out.as_deref(), &s, manifest)?;
    Ok(EXIT_OK)
}

/// Parses `R1=R12+R11`.
fn parse_sum(text: &str) -> Result<(String, Vec<String>)> {
    let (name, parts) = text
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("expected NAME=A+B, got `{text}`")))?;
    let parts: Vec<String> = parts.split('+').map(|p| p.trim().to_string()).collect();
    if name.trim().is_empty() || parts.iter().any(String::is_empty) {
        return Err(Error::Parse(format!("expected NAME=A+B, got `{text}`")));
    }
    Ok((name.trim().to_string(), parts))
}

fn cmd_fme(a: &FmeArgs) -> CliResult<i32> {
    let mut s = load_region(&a.region)?;
    if !a.sums.is_empty() {
        let sums = a.sums.iter().map(|t| parse_sum(t)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<Vec<&str>> = sums
            .iter()
            .map(|(_, parts)| parts.iter().map(String::as_str).collect())
            .collect();
        let pairs: Vec<(&str, &[&str])> = sums
            .iter()
            .zip(&refs)
            .map(|((name, _), parts)| (name.as_str(), parts.as_slice()))
            .collect();
        s = s.with_sum_coords(&pairs)?;
    }
    let mut out = s.fourier_motzkin(&a.eliminate)?.prune();
    if !a.order.is_empty() {
        out = out.reordered(&a.order)?;
    }
    let manifest = RunManifest::new(&format!("fme --eliminate {}", a.eliminate.join(",")))
        .input(&a.region);
    emit_region(a.out.as_deref(), &out, manifest)?;
    Ok(EXIT_OK)
}

fn cmd_member(a: &MemberArgs) -> CliResult<i32> {
    let s = load_region(&a.region)?;
    let point = RatePoint::parse(&a.point)?;
    let slacks = s.slacks(&point)?;
    println!("row,slack,label");
    let mut violated = Vec::new();
    for (k, (row, slack)) in s.rows().iter().zip(&slacks).enumerate() {
        let label = row.label.clone().unwrap_or_default();
        println!("{k},{},{label}", fmt_num(*slack));
        if *slack < -a.tol {
            violated.push(if label.is_empty() { format!("row {k}") } else { label });
        }
    }
    let negative = point.0.iter().any(|(_, v)| *v < -a.tol);
    if violated.is_empty() && !negative {
        println!("member");
        Ok(EXIT_OK)
    } else {
        if negative {
            violated.push("nonnegativity".into());
        }
        println!("not a member: violates {}", violated.join("; "));
        Ok(EXIT_NEGATIVE)
    }
}

fn cmd_diff(a: &DiffArgs) -> CliResult<i32> {
    let sa = load_region(&a.a)?;
    let sb = load_region(&a.b)?;
    let bbox = parse_bbox(&a.bbox)?;
    let d = sa.grid_diff(&sb, a.grid_step, &bbox, a.tol)?;
    let mut report = String::from("only_a,only_b,both,neither\n");
    report.push_str(&format!("{},{},{},{}\n", d.only_a, d.only_b, d.both, d.neither));
    print!("{report}");
    for ex in &d.examples {
        let fields: Vec<String> = ex.iter().map(|&v| fmt_num(v)).collect();
        eprintln!("differs at ({})", fields.join(", "));
    }
    if let Some(out) = &a.out {
        let manifest = RunManifest::new("diff")
            .input(&a.a)
            .input(&a.b)
            .tol("tol", a.tol)
            .tol("grid_step", a.grid_step);
        emit(out, &[(".csv", report)], manifest)?;
    }
    Ok(if d.equivalent() { EXIT_OK } else { EXIT_NEGATIVE })
}

fn parse_cards(text: &str) -> Result<AuxCards> {
    let v: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("expected u0,u1,u2 cardinalities, got `{text}`")))?;
    match v[..] {
        [u0, u1, u2] if u0 > 0 && u1 > 0 && u2 > 0 => Ok(AuxCards { u0, u1, u2 }),
        _ => Err(Error::Parse(format!("expected three positive cardinalities, got `{text}`"))),
    }
}

#[derive(Serialize)]
struct UnionMember {
    factorization: InputFactorization,
    region: serde_json::Value,
}

fn cmd_union(a: &UnionArgs) -> CliResult<i32> {
    let (ch, det) = load_channel(&a.channel)?;
    let cfg = UnionConfig {
        samples: a.samples,
        seed: a.seed,
        cards: parse_cards(&a.cards)?,
    };
    let u = at(&a.channel, regions::union_region(&ch, a.kind, &cfg, det.as_ref()))?;
    if let Some(out) = &a.out {
        let members: Vec<UnionMember> = u
            .members
            .iter()
            .map(|(f, s)| UnionMember {
                factorization: f.clone(),
                region: serde_json::from_str(&s.to_json()).expect("valid json"),
            })
            .collect();
        let mut json = serde_json::to_string_pretty(&members).expect("serializable");
        json.push('\n');
        let mut manifest = RunManifest::new(&format!("union --kind {}", a.kind))
            .input(&a.channel)
            .tol("tol", a.tol);
        manifest.seed = Some(a.seed);
        emit(out, &[(".json", json)], manifest)?;
    }
    let Some(point) = &a.point else {
        println!("{} sampled regions of kind {}", u.members.len(), a.kind);
        return Ok(EXIT_OK);
    };
    let point = RatePoint::parse(point)?;
    match u.witness(&point, a.tol)? {
        Some(i) => {
            println!("accepted by sample {i}");
            println!("{}", u.members[i].0.to_json());
            Ok(EXIT_OK)
        }
        None => {
            println!("not accepted by any of {} samples", u.members.len());
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<i32> {
    let text = read(&a.config)?;
    let mut cfg = at(&a.config, SimConfig::from_json(&text))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let report = at(&a.config, estimate_errors(&cfg))?;
    let csv = report.to_csv();
    match &a.out {
        Some(out) => {
            let mut manifest = RunManifest::new("simulate")
                .input(&a.config)
                .tol("epsilon", cfg.epsilon);
            manifest.seed = Some(cfg.seed);
            emit(out, &[(".csv", csv)], manifest)?;
        }
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

fn cmd_strongcheck(a: &StrongArgs) -> CliResult<i32> {
    let (ch, _) = load_channel(&a.channel)?;
    let (holds, report) = match &a.dist {
        Some(path) => {
            let f = load_dist(path)?;
            let r = at(path, check_strong_interference(&ch, &f))?;
            (
                r.holds,
                format!(
                    "holds,slack_1,slack_2\n{},{},{}\n",
                    r.holds,
                    fmt_num(r.slack_1),
                    fmt_num(r.slack_2)
                ),
            )
        }
        None => {
            let cfg = SweepConfig {
                u0_card: a.u0_card,
                grid_step: (a.grid_step > 0.0).then_some(a.grid_step),
                random_samples: a.samples,
                seed: a.seed,
                ..SweepConfig::default()
            };
            let r = at(&a.channel, strong_interference_sweep(&ch, &cfg))?;
            (
                r.holds,
                format!(
                    "holds,samples,min_slack_1,min_slack_2\n{},{},{},{}\n",
                    r.holds,
                    r.samples,
                    fmt_num(r.min_slack_1),
                    fmt_num(r.min_slack_2)
                ),
            )
        }
    };
    print!("{report}");
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new("strongcheck").input(&a.channel);
        if let Some(d) = &a.dist {
            manifest = manifest.input(d);
        } else {
            manifest.seed = Some(a.seed);
        }
        emit(out, &[(".csv", report)], manifest)?;
    }
    Ok(if holds { EXIT_OK } else { EXIT_NEGATIVE })
}

fn cmd_timeshare(a: &TimeshareArgs) -> CliResult<i32> {
    let [d1, d2] = a.dist.as_slice() else {
        return Err(Error::Config(format!("timeshare needs exactly two --dist files, got {}", a.dist.len())).into());
    };
    let (ch, _) = load_channel(&a.channel)?;
    let f1 = load_dist(d1)?;
    let f2 = load_dist(d2)?;
    let mut rng = crate::rng_from_seed(a.seed);
    let mut points = Vec::new();
    for (path, f) in [(d1, &f1), (d2, &f2)] {
        let s = at(path, regions::region_of(RegionKind::ImplicitM, f, &ch, None))?;
        points.push(at(path, regions::sample_members(&s, a.samples, &mut rng))?);
    }
    let second = points.pop().expect("two");
    let pairs: Vec<_> = points.pop().expect("two").into_iter().zip(second).collect();
    let r = regions::timeshare_check(&f1, &f2, a.alpha, &ch, &pairs, a.tol)?;
    let report = format!(
        "checked,failures,max_violation\n{},{},{}\n",
        r.checked,
        r.failures.len(),
        fmt_num(r.max_violation)
    );
    print!("{report}");
    if let Some(out) = &a.out {
        let mut manifest = RunManifest::new(&format!("timeshare --alpha {}", fmt_num(a.alpha)))
            .input(&a.channel)
            .input(d1)
            .input(d2)
            .tol("tol", a.tol);
        manifest.seed = Some(a.seed);
        emit(out, &[(".csv", report)], manifest)?;
    }
    Ok(if r.passed() { EXIT_OK } else { EXIT_NEGATIVE })
}

/// Applies the thread cap from the environment, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    // A pool may already exist when called twice in one process; the cap then stays as it was.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Region(a) => cmd_region(a),
        Command::Fme(a) => cmd_fme(a),
        Command::Member(a) => cmd_member(a),
        Command::Diff(a) => cmd_diff(a),
        Command::Union(a) => cmd_union(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Strongcheck(a) => cmd_strongcheck(a),
        Command::Timeshare(a) => cmd_timeshare(a),
    }
}

/// Parses arguments, runs the command, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
