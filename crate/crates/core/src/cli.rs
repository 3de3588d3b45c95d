//! Command-line front end.
//!
//! Every option can come from a flag or from a `key = value` line in the
//! file given by `--config`; flags win over the file, the file over the
//! built-in defaults. Keys are the long flag names; `_` may stand for `-`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::constellation::{Constellation, Labeling};
use crate::convcode::{free_distance, try_ber_union_bound, weight_spectrum, ConvCode};
use crate::error::Error;
use crate::expurgation::{table1, NeighborAssignment, SelectOptions, Variant};
use crate::geometry::{verify_theorem1, verify_theorem2, GridSpec};
use crate::pep::{f_bound, ChannelModel, ChannelSpec, DistanceMixture};
use crate::simulator::{simulate_ber, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONFIRMED: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_INCONCLUSIVE: i32 = 5;

/// Truncation share above which the bound is reported as unreliable.
const TRUNCATION_WARN: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(name = "bicm", version, about = "Expurgated BICM error bounds and simulation")]
struct Cli {
    /// File of `key = value` lines supplying option defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write CSV here instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Seed recorded in the output header and used by random commands.
    #[arg(long, global = true)]
    seed: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Harmonic distances of the standard signal sets.
    Table1,
    /// Expurgated BER bounds over an SNR sweep.
    Bounds(BoundArgs),
    /// Monte Carlo BER of the coded chain.
    Simulate(SimArgs),
    /// Grid checks of the two expurgation counterexamples.
    Counterexamples {
        #[command(subcommand)]
        which: Counterexample,
    },
    /// Weight spectrum of the convolutional code.
    Spectrum(CodeArgs),
}

#[derive(Debug, Subcommand)]
enum Counterexample {
    /// Rotated QPSK: expurgating pairwise regions loses coverage.
    T1(T1Args),
    /// Gray 16QAM: one nearest neighbor does not cover an inner point.
    T2(GridArgs),
}

#[derive(Debug, Args)]
struct LinkArgs {
    /// Signal set: 4PSK, 8PSK, 4QAM, 16QAM or 64QAM.
    #[arg(long = "mod")]
    modulation: Option<String>,
    /// Labeling: gray or sp.
    #[arg(long)]
    label: Option<String>,
    /// Channel: awgn or rayleigh.
    #[arg(long)]
    channel: Option<String>,
    /// Es/N0 sweep in dB, `start:step:stop` or a single value.
    #[arg(long = "snr-db")]
    snr_db: Option<String>,
    /// Generator polynomials in octal, comma separated.
    #[arg(long)]
    code: Option<String>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    link: LinkArgs,
    /// Largest Hamming distance in the union bound.
    #[arg(long)]
    dmax: Option<String>,
    /// Comma-separated subset of orig, new1, new2, or all.
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[command(flatten)]
    link: LinkArgs,
    /// Blocks per SNR point.
    #[arg(long)]
    blocks: Option<String>,
    /// Information bits per block.
    #[arg(long = "block-len")]
    block_len: Option<String>,
    /// Stop a point after this many bit errors; 0 disables.
    #[arg(long = "max-errors")]
    max_errors: Option<String>,
}

#[derive(Debug, Args)]
struct CodeArgs {
    #[arg(long)]
    code: Option<String>,
    #[arg(long)]
    dmax: Option<String>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid step.
    #[arg(long)]
    grid: Option<String>,
    /// Largest number of witness rows written; 0 writes all.
    #[arg(long = "max-witnesses")]
    max_witnesses: Option<String>,
}

#[derive(Debug, Args)]
struct T1Args {
    /// Rotation of the `01` point in degrees.
    #[arg(long)]
    theta: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
}

const KNOWN_KEYS: &[&str] = &[
    "mod",
    "label",
    "channel",
    "snr-db",
    "code",
    "dmax",
    "variant",
    "seed",
    "blocks",
    "block-len",
    "max-errors",
    "theta",
    "grid",
    "max-witnesses",
];

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Io(_) => EXIT_IO,
            Failure::Lib(Error::Domain(_) | Error::Numerical { .. }) => EXIT_NUMERICAL,
            Failure::Lib(Error::Inconclusive(_)) => EXIT_INCONCLUSIVE,
            Failure::Lib(_) => EXIT_CONFIG,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Lib(Error::Config(msg.into()))
}

/// Parses `key = value` lines. `#` starts a comment.
pub fn parse_config_file(text: &str) -> crate::Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key = value", n + 1)));
        };
        let key = k.trim().replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key `{}`", n + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Resolved options for one command, in precedence order already applied.
struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Settings {
    fn resolve(
        keys: &[(&'static str, Option<&String>, &str)],
        file: &BTreeMap<String, String>,
    ) -> Self {
        let values = keys
            .iter()
            .map(|&(k, flag, default)| {
                let v = flag
                    .cloned()
                    .or_else(|| file.get(k).cloned())
                    .unwrap_or_else(|| default.to_string());
                (k, v)
            })
            .collect();
        Settings { values }
    }

    fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn set(&mut self, key: &'static str, value: String) {
        self.values.insert(key, value);
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, Failure> {
        self.get(key)
            .parse()
            .map_err(|_| config_err(format!("invalid value `{}` for {key}", self.get(key))))
    }

    fn header(&self, command: &str) -> String {
        let body: Vec<String> = self.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "# bicm {} command={command} {}",
            env!("CARGO_PKG_VERSION"),
            body.join(" ")
        )
    }
}

/// Parses `start:step:stop` or a single value into a dB sweep.
pub fn parse_sweep(text: &str) -> crate::Result<Vec<f64>> {
    let bad = || Error::Config(format!("invalid SNR sweep `{text}`"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<crate::Result<_>>()?;
    match parts.as_slice() {
        [v] if v.is_finite() => Ok(vec![*v]),
        [a, s, b] if a.is_finite() && b.is_finite() && s.is_finite() && *s > 0.0 && b >= a => {
            let n = ((b - a) / s + 1e-9).floor() as usize;
            if n > 10_000 {
                return Err(bad());
            }
            Ok((0..=n).map(|k| a + k as f64 * s).collect())
        }
        _ => Err(bad()),
    }
}

/// Looks up a signal set by name, e.g. `16QAM`.
pub fn parse_modulation(name: &str, labeling: Labeling) -> crate::Result<Constellation> {
    let upper = name.trim().to_ascii_uppercase();
    let (order, kind) = if let Some(n) = upper.strip_suffix("PSK") {
        (n, "PSK")
    } else if let Some(n) = upper.strip_suffix("QAM") {
        (n, "QAM")
    } else {
        return Err(Error::Config(format!("unknown signal set `{name}`")));
    };
    let order: usize = order
        .parse()
        .map_err(|_| Error::Config(format!("unknown signal set `{name}`")))?;
    match kind {
        "PSK" => Constellation::psk(order, labeling),
        _ => Constellation::square_qam(order, labeling),
    }
}

fn open_out(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

struct Link {
    constellation: Constellation,
    model: ChannelModel,
    sweep: Vec<f64>,
    code: ConvCode,
}

fn link_keys<'a>(l: &'a LinkArgs) -> Vec<(&'static str, Option<&'a String>, &'static str)> {
    vec![
        ("mod", l.modulation.as_ref(), "16QAM"),
        ("label", l.label.as_ref(), "gray"),
        ("channel", l.channel.as_ref(), "rayleigh"),
        ("snr-db", l.snr_db.as_ref(), "5:1:20"),
        ("code", l.code.as_ref(), "133,171"),
    ]
}

fn link_from(s: &mut Settings) -> Result<Link, Failure> {
    let labeling: Labeling = s.parse("label")?;
    let constellation = parse_modulation(s.get("mod"), labeling)?;
    s.set("mod", constellation.name().to_string());
    s.set("label", labeling.as_str().to_string());
    let model: ChannelModel = s.parse("channel")?;
    s.set("channel", model.to_string());
    let sweep = parse_sweep(s.get("snr-db"))?;
    let code = ConvCode::from_octal(s.get("code"))?;
    let [g0, g1] = code.generators();
    s.set("code", format!("{g0:o},{g1:o}"));
    Ok(Link {
        constellation,
        model,
        sweep,
        code,
    })
}

fn seed_key(seed: Option<&String>) -> (&'static str, Option<&String>, &'static str) {
    ("seed", seed, "1")
}

fn grid_keys(g: &GridArgs) -> [(&'static str, Option<&String>, &'static str); 2] {
    [
        ("grid", g.grid.as_ref(), "0.005"),
        ("max-witnesses", g.max_witnesses.as_ref(), "10000"),
    ]
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    let file = match &cli.config {
        Some(p) => parse_config_file(&fs::read_to_string(p)?)?,
        None => BTreeMap::new(),
    };
    let seed = cli.seed.as_ref();
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Table1 => cmd_table1(Settings::resolve(&[seed_key(seed)], &file), out),
        Command::Bounds(b) => {
            let mut keys = link_keys(&b.link);
            keys.push(("dmax", b.dmax.as_ref(), ""));
            keys.push(("variant", b.variant.as_ref(), "all"));
            keys.push(seed_key(seed));
            cmd_bounds(Settings::resolve(&keys, &file), out)
        }
        Command::Simulate(a) => {
            let mut keys = link_keys(&a.link);
            keys.push(("blocks", a.blocks.as_ref(), "200"));
            keys.push(("block-len", a.block_len.as_ref(), "10000"));
            keys.push(("max-errors", a.max_errors.as_ref(), "10000"));
            keys.push(seed_key(seed));
            cmd_simulate(Settings::resolve(&keys, &file), out)
        }
        Command::Spectrum(a) => {
            let keys = [
                ("code", a.code.as_ref(), "133,171"),
                ("dmax", a.dmax.as_ref(), ""),
                seed_key(seed),
            ];
            cmd_spectrum(Settings::resolve(&keys, &file), out)
        }
        Command::Counterexamples { which } => match which {
            Counterexample::T1(a) => {
                let mut keys = vec![("theta", a.theta.as_ref(), "30"), seed_key(seed)];
                keys.extend(grid_keys(&a.grid));
                cmd_t1(Settings::resolve(&keys, &file), out)
            }
            Counterexample::T2(g) => {
                let mut keys = vec![seed_key(seed)];
                keys.extend(grid_keys(g));
                cmd_t2(Settings::resolve(&keys, &file), out)
            }
        },
    }
}

fn check_seed(s: &Settings) -> Result<u64, Failure> {
    s.parse("seed")
}

/// Resolves `dmax`, defaulting to `d_free + 14`.
fn resolve_dmax(s: &mut Settings, code: &ConvCode) -> Result<u32, Failure> {
    let d_free = free_distance(code);
    let dmax = if s.get("dmax").is_empty() {
        d_free.saturating_add(14)
    } else {
        s.parse("dmax")?
    };
    s.set("dmax", dmax.to_string());
    Ok(dmax)
}

/// Four significant digits in plain notation.
fn sig4(x: f64) -> String {
    let lead = if x == 0.0 { 0 } else { x.abs().log10().floor() as i32 };
    format!("{:.*}", (3 - lead).max(0) as usize, x)
}

fn cmd_table1(s: Settings, out: Option<&Path>) -> Result<i32, Failure> {
    check_seed(&s)?;
    let rows = table1()?;
    let mut w = open_out(out)?;
    writeln!(w, "{}", s.header("table1"))?;
    writeln!(w, "constellation,labeling,dh2,dhc1_2,dhc2_2,flags")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.constellation,
            r.labeling.as_str(),
            sig4(r.dh2),
            sig4(r.dhc1_2),
            sig4(r.dhc2_2),
            if r.nonstandard { "nonstandard" } else { "" }
        )?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_bounds(mut s: Settings, out: Option<&Path>) -> Result<i32, Failure> {
    check_seed(&s)?;
    let link = link_from(&mut s)?;
    let dmax = resolve_dmax(&mut s, &link.code)?;
    let variants = parse_variants(s.get("variant"))?;
    s.set(
        "variant",
        variants.iter().map(|v| v.cli_name()).collect::<Vec<_>>().join(","),
    );
    let spectrum = weight_spectrum(&link.code, dmax)?;
    let c = &link.constellation;
    let opts = SelectOptions::nonstandard();
    let mut mixtures = Vec::new();
    for &v in &variants {
        let a = NeighborAssignment::build(c, v, &opts)?;
        if a.nonstandard() {
            eprintln!("warning: {} {} variant {v} uses a greedy grid cover", c.name(), c.labeling().as_str());
        }
        mixtures.push(DistanceMixture::from_assignment(c, &a)?);
    }

    let mut w = open_out(out)?;
    writeln!(w, "{}", s.header("bounds"))?;
    writeln!(w, "snr_db,ex_orig,ex_new1,ex_new2")?;
    for &snr in &link.sweep {
        let ch = ChannelSpec::new(link.model, snr);
        let mut row = vec![String::new(); 3];
        for (&v, mix) in variants.iter().zip(&mixtures) {
            let ub = match try_ber_union_bound(&spectrum, |d| f_bound(mix, &ch, d)) {
                Ok(ub) => ub,
                Err(e) => {
                    writeln!(w, "# {snr}: variant {v} failed: {e}")?;
                    w.flush()?;
                    return Err(e.into());
                }
            };
            if ub.last_term_ratio > TRUNCATION_WARN {
                eprintln!(
                    "warning: at {snr} dB the d = {dmax} term is {:.1}% of the {v} bound; raise --dmax",
                    100.0 * ub.last_term_ratio
                );
            }
            row[column(v)] = format!("{:.5e}", ub.value);
        }
        writeln!(w, "{snr},{}", row.join(","))?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn column(v: Variant) -> usize {
    match v {
        Variant::Orig => 0,
        Variant::One => 1,
        Variant::Two => 2,
    }
}

/// Parses `all` or a comma-separated variant list into column order.
pub fn parse_variants(text: &str) -> crate::Result<Vec<Variant>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(Variant::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in text.split(',') {
        let v: Variant = part.parse()?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out.sort_by_key(|&v| column(v));
    Ok(out)
}

fn cmd_simulate(mut s: Settings, out: Option<&Path>) -> Result<i32, Failure> {
    let seed = check_seed(&s)?;
    let link = link_from(&mut s)?;
    let blocks: usize = s.parse("blocks")?;
    let block_len: usize = s.parse("block-len")?;
    let max_errors: u64 = s.parse("max-errors")?;
    let mut w = open_out(out)?;
    writeln!(w, "{}", s.header("simulate"))?;
    writeln!(w, "snr_db,ber,bits,errors,ci95")?;
    for &snr in &link.sweep {
        let cfg = SimConfig {
            constellation: link.constellation.clone(),
            channel: ChannelSpec::new(link.model, snr),
            code: link.code,
            block_len,
            blocks,
            seed,
            max_errors: (max_errors > 0).then_some(max_errors),
        };
        let est = simulate_ber(&cfg)?;
        writeln!(
            w,
            "{snr},{:.5e},{},{},{:.5e}",
            est.rate, est.trials, est.errors, est.ci95
        )?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_spectrum(mut s: Settings, out: Option<&Path>) -> Result<i32, Failure> {
    check_seed(&s)?;
    let code = ConvCode::from_octal(s.get("code"))?;
    let [g0, g1] = code.generators();
    s.set("code", format!("{g0:o},{g1:o}"));
    let dmax = resolve_dmax(&mut s, &code)?;
    let spec = weight_spectrum(&code, dmax)?;
    let mut w = open_out(out)?;
    writeln!(w, "{}", s.header("spectrum"))?;
    writeln!(w, "d,A_d,W_I")?;
    for d in spec.d_free..=spec.d_max {
        let e = spec.get(d);
        writeln!(w, "{d},{},{}", e.paths, e.info_weight)?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn grid_from(s: &Settings) -> Result<(GridSpec, usize), Failure> {
    let step: f64 = s.parse("grid")?;
    let grid = GridSpec::square(4.0, step);
    grid.validate()?;
    Ok((grid, s.parse("max-witnesses")?))
}

/// Every `k`-th row so that at most `limit` remain; `limit == 0` keeps all.
fn subsample<T>(rows: &[T], limit: usize) -> impl Iterator<Item = &T> {
    let stride = if limit == 0 || rows.len() <= limit {
        1
    } else {
        rows.len().div_ceil(limit)
    };
    rows.iter().step_by(stride)
}

fn cmd_t1(s: Settings, out: Option<&Path>) -> Result<i32, Failure> {
    check_seed(&s)?;
    let theta: f64 = s.parse("theta")?;
    let (grid, limit) = grid_from(&s)?;
    let report = verify_theorem1(theta, &grid)?;
    let mut w = open_out(out)?;
    writeln!(w, "{}", s.header("counterexamples-t1"))?;
    writeln!(w, "re,im,region")?;
    for case in &report.cases {
        for y in subsample(&case.coverage.witnesses, limit) {
            writeln!(w, "{:.6},{:.6},{}", y.re, y.im, case.region.as_str())?;
        }
    }
    w.flush()?;
    for case in &report.cases {
        eprintln!(
            "x = {} ({}): expurgated [{}], kept [{}], {} uncovered of {} error points",
            case.transmitted,
            case.region.as_str(),
            case.expurgated.join(" "),
            case.kept.join(" "),
            case.coverage.witnesses.len(),
            case.coverage.error_points
        );
    }
    let confirmed = report.confirmed();
    eprintln!(
        "theta = {theta}: {}",
        if confirmed { "counterexample confirmed" } else { "counterexample not confirmed" }
    );
    Ok(if confirmed { EXIT_OK } else { EXIT_NOT_CONFIRMED })
}

fn cmd_t2(s: Settings, out: Option<&Path>) -> Result<i32, Failure> {
    check_seed(&s)?;
    let (grid, limit) = grid_from(&s)?;
    let report = verify_theorem2(&grid)?;
    let mut w = open_out(out)?;
    writeln!(w, "{}", s.header("counterexamples-t2"))?;
    writeln!(w, "re,im,region")?;
    for y in subsample(&report.coverage.witnesses, limit) {
        writeln!(w, "{:.6},{:.6},far-strip", y.re, y.im)?;
    }
    w.flush()?;
    eprintln!(
        "x = {}, bit {}, kept {}: {} uncovered of {} error points, far boundary at {:.6}",
        report.transmitted,
        report.bit,
        report.kept,
        report.coverage.witnesses.len(),
        report.coverage.error_points,
        report.far_boundary
    );
    eprintln!(
        "controls: two-sided covered = {}, outer column covered = {}",
        report.two_sided_control.covered, report.outer_control.covered
    );
    let confirmed = report.confirmed();
    eprintln!(
        "{}",
        if confirmed { "counterexample confirmed" } else { "counterexample not confirmed" }
    );
    Ok(if confirmed { EXIT_OK } else { EXIT_NOT_CONFIRMED })
}
