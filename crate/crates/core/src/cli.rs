//! The `deltachain` command line: four subcommands over the physics layers,
//! each writing a plot-ready table with an embedded run manifest.
//!
//! - `spectrum`     — |t|² and |r|² over an energy grid, for one trap or one
//!   sampled random chain; `--include-k` injects exact extra abscissae so
//!   the measure-zero transparency spikes of a chain are representable;
//! - `resonances`   — the trap's perfect-transmission wavenumbers with the
//!   joining residual cross-check;
//! - `wavefunction` — the left-incidence scattering solution on a grid;
//! - `localize`     — ensemble ln |t|² statistics over chain lengths plus
//!   the fitted Lyapunov decay in the manifest.
//!
//! Exit codes: 0 on success, 2 for argument problems (one-line diagnostic
//! naming the flag), 1 for numeric or I/O failures.  Rerunning a command
//! with identical flags reproduces the data section byte for byte; only the
//! manifest timestamp differs.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::disorder::{
    ensemble_log_transmission, lyapunov_estimate, sample_trap_array, DisorderConfig, DisorderError,
    GENERATOR_IDENTITY,
};
use crate::resonance::{
    joining_residual, phase_condition_roots, spectrum_point, transmission_spectrum, DoubleBarrier,
    ResonanceError, SpectrumPoint,
};
use crate::scattering::{
    reconstruct_wavefunction, DeltaSpike, Incidence, PotentialArray, ScatteringError, Wavenumber,
};

/// Simulate 1D quantum scattering on arrays of delta-function potentials.
#[derive(Debug, Parser)]
#[command(name = "deltachain", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transmission and reflection over an energy grid
    Spectrum(SpectrumArgs),
    /// Perfect-transmission wavenumbers of the two-delta trap
    Resonances(ResonancesArgs),
    /// Left-incidence wavefunction sampled on a position grid
    Wavefunction(WavefunctionArgs),
    /// Ensemble ln|t|² statistics and Lyapunov fit for random trap chains
    Localize(LocalizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Strength of every delta spike (≥ 0)
    #[arg(long, allow_negative_numbers = true)]
    v0: f64,
    /// Separation of the two spikes within a trap
    #[arg(long, allow_negative_numbers = true)]
    sep: f64,
    /// Sample one random chain of this many traps instead of a single trap
    #[arg(long)]
    ntraps: Option<usize>,
    /// Smallest gap between consecutive traps (requires --ntraps)
    #[arg(long = "gap-min", allow_negative_numbers = true)]
    gap_min: Option<f64>,
    /// Largest gap between consecutive traps (requires --ntraps)
    #[arg(long = "gap-max", allow_negative_numbers = true)]
    gap_max: Option<f64>,
    /// Master seed for the sampled chain (requires --ntraps)
    #[arg(long)]
    seed: Option<u64>,
    /// Lowest grid energy (> 0)
    #[arg(long, allow_negative_numbers = true)]
    emin: f64,
    /// Highest grid energy
    #[arg(long, allow_negative_numbers = true)]
    emax: f64,
    /// Number of uniform grid points (≥ 2)
    #[arg(long)]
    npoints: usize,
    /// Extra exact wavenumber abscissa, repeatable; rows merge into the grid
    #[arg(long = "include-k", allow_negative_numbers = true)]
    include_k: Vec<f64>,
    /// Output file
    #[arg(long)]
    out: PathBuf,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct ResonancesArgs {
    /// Strength of both barriers (> 0)
    #[arg(long, allow_negative_numbers = true)]
    v0: f64,
    /// Barrier separation
    #[arg(long, allow_negative_numbers = true)]
    sep: f64,
    /// Highest resonance index to report (0-based, inclusive)
    #[arg(long)]
    nmax: usize,
    /// Output file (CSV)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WavefunctionArgs {
    /// Strength of both barriers (≥ 0)
    #[arg(long, allow_negative_numbers = true)]
    v0: f64,
    /// Barrier separation; the trap occupies [0, sep]
    #[arg(long, allow_negative_numbers = true)]
    sep: f64,
    /// Incident wavenumber (> 0)
    #[arg(long, allow_negative_numbers = true)]
    k: f64,
    /// Left edge of the sampling window
    #[arg(long, allow_negative_numbers = true)]
    xmin: f64,
    /// Right edge of the sampling window
    #[arg(long, allow_negative_numbers = true)]
    xmax: f64,
    /// Number of uniform grid points (≥ 2)
    #[arg(long)]
    npoints: usize,
    /// Output file (CSV)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LocalizeArgs {
    /// Trap strength (> 0)
    #[arg(long, allow_negative_numbers = true)]
    v0: f64,
    /// Spike separation within each trap
    #[arg(long, allow_negative_numbers = true)]
    sep: f64,
    /// Smallest gap between consecutive traps
    #[arg(long = "gap-min", allow_negative_numbers = true)]
    gap_min: f64,
    /// Largest gap between consecutive traps
    #[arg(long = "gap-max", allow_negative_numbers = true)]
    gap_max: f64,
    /// Probe energy (> 0)
    #[arg(long, allow_negative_numbers = true)]
    energy: f64,
    /// Chain lengths to sample, strictly increasing (≥ 3 values)
    #[arg(long = "ntraps-list", value_delimiter = ',', num_args = 1..)]
    ntraps_list: Vec<usize>,
    /// Realizations per chain length (≥ 2)
    #[arg(long)]
    realizations: usize,
    /// Master seed; realization i uses its i-th derived substream
    #[arg(long)]
    seed: u64,
    /// Output file (CSV)
    #[arg(long)]
    out: PathBuf,
}

/// A failure that terminates the run with a message and an exit code.
#[derive(Debug)]
struct CliFailure {
    code: i32,
    message: String,
}

impl CliFailure {
    fn args(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self::numeric(format!("cannot write {}: {err}", path.display()))
    }
}

impl From<ScatteringError> for CliFailure {
    fn from(e: ScatteringError) -> Self {
        Self::numeric(e.to_string())
    }
}

impl From<ResonanceError> for CliFailure {
    fn from(e: ResonanceError) -> Self {
        Self::numeric(e.to_string())
    }
}

impl From<DisorderError> for CliFailure {
    fn from(e: DisorderError) -> Self {
        Self::numeric(e.to_string())
    }
}

type CliResult<T> = Result<T, CliFailure>;

/// Parse `argv` and run the requested subcommand, returning the process
/// exit code.  All diagnostics go to standard error; `--help`/`--version`
/// text goes to standard output.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            if err.use_stderr() {
                eprintln!("{}", condense_parse_error(&err));
                return 2;
            }
            print!("{err}");
            return 0;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("deltachain: {}", failure.message);
            failure.code
        }
    }
}

/// Collapse clap's multi-line report to the single diagnostic line(s) above
/// its usage block.
fn condense_parse_error(err: &clap::Error) -> String {
    let rendered = err.to_string();
    let lines: Vec<&str> = rendered
        .lines()
        .take_while(|l| !l.trim_start().starts_with("Usage:"))
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if lines.is_empty() {
        rendered.trim().to_string()
    } else {
        lines.join("; ")
    }
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Spectrum(args) => run_spectrum(args),
        Command::Resonances(args) => run_resonances(args),
        Command::Wavefunction(args) => run_wavefunction(args),
        Command::Localize(args) => run_localize(args),
    }
}

fn require(condition: bool, message: &str) -> CliResult<()> {
    if condition {
        Ok(())
    } else {
        Err(CliFailure::args(message))
    }
}

/// The two spikes of one trap, allowing strength 0 (free space) for the
/// subcommands that only probe, never root-find.
fn trap_array(v0: f64, sep: f64) -> CliResult<PotentialArray> {
    require(v0 >= 0.0 && v0.is_finite(), "--v0 must be finite and >= 0")?;
    require(sep > 0.0 && sep.is_finite(), "--sep must be finite and > 0")?;
    let spikes = vec![DeltaSpike::new(0.0, v0)?, DeltaSpike::new(sep, v0)?];
    Ok(PotentialArray::new(spikes)?)
}

fn run_spectrum(args: SpectrumArgs) -> CliResult<()> {
    require(
        args.emin > 0.0 && args.emin.is_finite(),
        "--emin must be finite and > 0",
    )?;
    require(
        args.emax > args.emin && args.emax.is_finite(),
        "--emax must be finite and > --emin",
    )?;
    require(args.npoints >= 2, "--npoints must be at least 2")?;
    for &k in &args.include_k {
        require(
            k > 0.0 && k.is_finite(),
            "--include-k values must be finite and > 0",
        )?;
    }

    let sampling = args.ntraps.is_some()
        || args.gap_min.is_some()
        || args.gap_max.is_some()
        || args.seed.is_some();
    let mut manifest = manifest_header("spectrum");
    push_num(&mut manifest, "v0", args.v0);
    push_num(&mut manifest, "sep", args.sep);

    let array = if sampling {
        let (Some(ntraps), Some(gap_min), Some(gap_max), Some(seed)) =
            (args.ntraps, args.gap_min, args.gap_max, args.seed)
        else {
            return Err(CliFailure::args(
                "--ntraps, --gap-min, --gap-max and --seed must be given together",
            ));
        };
        let config = DisorderConfig::new(args.v0, args.sep, gap_min, gap_max, ntraps)
            .map_err(|e| CliFailure::args(e.to_string()))?;
        manifest.push(("ntraps".into(), ntraps.to_string()));
        push_num(&mut manifest, "gapMin", gap_min);
        push_num(&mut manifest, "gapMax", gap_max);
        manifest.push(("masterSeed".into(), seed.to_string()));
        manifest.push(("realizationIndex".into(), "0".into()));
        sample_trap_array(&config, seed, 0)
    } else {
        trap_array(args.v0, args.sep)?
    };

    push_num(&mut manifest, "emin", args.emin);
    push_num(&mut manifest, "emax", args.emax);
    manifest.push(("npoints".into(), args.npoints.to_string()));
    if !args.include_k.is_empty() {
        let list: Vec<String> = args.include_k.iter().map(|&k| fmt_f64(k)).collect();
        manifest.push(("includeK".into(), list.join(",")));
    }
    manifest.push((
        "format".into(),
        match args.format {
            OutputFormat::Csv => "csv".into(),
            OutputFormat::Json => "json".into(),
        },
    ));
    manifest_footer(&mut manifest, &args.out);

    let mut points = transmission_spectrum(&array, args.emin, args.emax, args.npoints)?.points;
    for &k in &args.include_k {
        points.push(spectrum_point(&array, Wavenumber::new(k)?)?);
    }
    points.sort_by(|a, b| a.energy.total_cmp(&b.energy));

    let doc = TableDoc {
        manifest,
        columns: &["energy", "transmission", "reflection"],
        rows: points
            .iter()
            .map(|p: &SpectrumPoint| vec![p.energy, p.transmission, p.reflection])
            .collect(),
    };
    match args.format {
        OutputFormat::Csv => write_csv(&args.out, &doc),
        OutputFormat::Json => write_json(&args.out, &doc),
    }
}

fn run_resonances(args: ResonancesArgs) -> CliResult<()> {
    require(
        args.v0 > 0.0 && args.v0.is_finite(),
        "--v0 must be finite and > 0",
    )?;
    require(
        args.sep > 0.0 && args.sep.is_finite(),
        "--sep must be finite and > 0",
    )?;
    let trap =
        DoubleBarrier::new(args.v0, args.sep).map_err(|e| CliFailure::args(e.to_string()))?;
    let set = phase_condition_roots(&trap, args.nmax)?;

    let mut manifest = manifest_header("resonances");
    push_num(&mut manifest, "v0", args.v0);
    push_num(&mut manifest, "sep", args.sep);
    manifest.push(("nmax".into(), args.nmax.to_string()));
    manifest_footer(&mut manifest, &args.out);

    let doc = TableDoc {
        manifest,
        columns: &["n", "k", "energy", "transmissionAtPeak", "joiningResidual"],
        rows: set
            .resonances
            .iter()
            .map(|r| {
                vec![
                    r.n as f64,
                    r.k.k(),
                    r.energy,
                    r.transmission_at_peak,
                    joining_residual(&trap, r.k),
                ]
            })
            .collect(),
    };
    write_csv(&args.out, &doc)
}

fn run_wavefunction(args: WavefunctionArgs) -> CliResult<()> {
    require(
        args.k > 0.0 && args.k.is_finite(),
        "--k must be finite and > 0",
    )?;
    require(
        args.xmin.is_finite() && args.xmax.is_finite() && args.xmin < args.xmax,
        "--xmin must be finite and below --xmax",
    )?;
    require(args.npoints >= 2, "--npoints must be at least 2")?;
    let array = trap_array(args.v0, args.sep)?;
    let solution = reconstruct_wavefunction(&array, Wavenumber::new(args.k)?, Incidence::Left)?;

    let mut manifest = manifest_header("wavefunction");
    push_num(&mut manifest, "v0", args.v0);
    push_num(&mut manifest, "sep", args.sep);
    push_num(&mut manifest, "k", args.k);
    push_num(&mut manifest, "xmin", args.xmin);
    push_num(&mut manifest, "xmax", args.xmax);
    manifest.push(("npoints".into(), args.npoints.to_string()));
    manifest_footer(&mut manifest, &args.out);

    let step = (args.xmax - args.xmin) / (args.npoints - 1) as f64;
    let rows = (0..args.npoints)
        .map(|i| {
            let x = if i + 1 == args.npoints {
                args.xmax
            } else {
                args.xmin + i as f64 * step
            };
            let psi = solution.psi(x);
            vec![x, psi.re, psi.im, psi.norm()]
        })
        .collect();
    let doc = TableDoc {
        manifest,
        columns: &["x", "rePsi", "imPsi", "absPsi"],
        rows,
    };
    write_csv(&args.out, &doc)
}

fn run_localize(args: LocalizeArgs) -> CliResult<()> {
    require(
        args.v0 > 0.0 && args.v0.is_finite(),
        "--v0 must be finite and > 0",
    )?;
    require(
        args.sep > 0.0 && args.sep.is_finite(),
        "--sep must be finite and > 0",
    )?;
    require(
        args.energy > 0.0 && args.energy.is_finite(),
        "--energy must be finite and > 0",
    )?;
    require(
        args.ntraps_list.len() >= 3,
        "--ntraps-list needs at least 3 chain lengths for the decay fit",
    )?;
    require(
        args.ntraps_list[0] >= 1 && args.ntraps_list.windows(2).all(|w| w[0] < w[1]),
        "--ntraps-list must be strictly increasing with every entry >= 1",
    )?;
    require(args.realizations >= 2, "--realizations must be at least 2")?;
    let config = DisorderConfig::new(
        args.v0,
        args.sep,
        args.gap_min,
        args.gap_max,
        args.ntraps_list[0],
    )
    .map_err(|e| CliFailure::args(e.to_string()))?;

    let stats = ensemble_log_transmission(
        &config,
        args.energy,
        &args.ntraps_list,
        args.realizations,
        args.seed,
    )?;
    let fit = lyapunov_estimate(&stats)?;
    let period = config.mean_trap_period();

    let mut manifest = manifest_header("localize");
    push_num(&mut manifest, "v0", args.v0);
    push_num(&mut manifest, "sep", args.sep);
    push_num(&mut manifest, "gapMin", args.gap_min);
    push_num(&mut manifest, "gapMax", args.gap_max);
    push_num(&mut manifest, "energy", args.energy);
    let lengths: Vec<String> = args.ntraps_list.iter().map(|n| n.to_string()).collect();
    manifest.push(("ntrapsList".into(), lengths.join(",")));
    manifest.push(("realizations".into(), args.realizations.to_string()));
    manifest.push(("masterSeed".into(), args.seed.to_string()));
    push_num(&mut manifest, "gammaPerTrap", fit.gamma_per_trap);
    push_num(&mut manifest, "interceptLnT", fit.intercept_ln_t);
    push_num(&mut manifest, "stdError", fit.std_error);
    push_num(&mut manifest, "rSquared", fit.r_squared);
    push_num(
        &mut manifest,
        "localizationLengthTraps",
        fit.localization_length_traps,
    );
    push_num(&mut manifest, "meanTrapPeriod", period);
    push_num(&mut manifest, "gammaPerLength", fit.gamma_per_trap / period);
    push_num(
        &mut manifest,
        "localizationLengthPhysical",
        fit.localization_length_traps * period,
    );
    manifest_footer(&mut manifest, &args.out);

    let doc = TableDoc {
        manifest,
        columns: &["nTraps", "meanLnT", "varLnT"],
        rows: stats
            .points
            .iter()
            .map(|p| vec![p.n_traps as f64, p.mean_ln_t, p.var_ln_t])
            .collect(),
    };
    write_csv(&args.out, &doc)
}

/// Run manifest as ordered key/value pairs; order is part of the format.
type Manifest = Vec<(String, String)>;

fn manifest_header(subcommand: &str) -> Manifest {
    vec![
        ("toolVersion".into(), env!("CARGO_PKG_VERSION").into()),
        ("subcommand".into(), subcommand.into()),
    ]
}

/// Trailing manifest entries shared by every subcommand.  The timestamp is
/// the only entry allowed to vary between identical runs, and it stays out
/// of the data section.
fn manifest_footer(manifest: &mut Manifest, out: &Path) {
    manifest.push(("out".into(), out.display().to_string()));
    manifest.push(("generatorIdentity".into(), GENERATOR_IDENTITY.into()));
    manifest.push((
        "timestampUtc".into(),
        Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
    ));
}

fn push_num(manifest: &mut Manifest, key: &str, value: f64) {
    manifest.push((key.into(), fmt_f64(value)));
}

/// 17-significant-digit scientific notation: parses back to the identical
/// binary value, and never writes a locale- or platform-dependent form.
/// Infinities (e.g. an unbounded localization length) become "inf".
fn fmt_f64(value: f64) -> String {
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.into();
    }
    format!("{value:.16e}")
}

struct TableDoc {
    manifest: Manifest,
    columns: &'static [&'static str],
    rows: Vec<Vec<f64>>,
}

fn write_csv(path: &Path, doc: &TableDoc) -> CliResult<()> {
    let mut text = String::new();
    for (key, value) in &doc.manifest {
        let _ = writeln!(text, "# {key}={value}");
    }
    let _ = writeln!(text, "{}", doc.columns.join(","));
    for row in &doc.rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(text, "{}", cells.join(","));
    }
    fs::write(path, text).map_err(|e| CliFailure::io(path, e))
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

/// Same table as the CSV, as one JSON object: a `manifest` map (string
/// values, so non-finite fit results stay representable), `columnNames`,
/// and `rows` of plain numbers.
fn write_json(path: &Path, doc: &TableDoc) -> CliResult<()> {
    let mut text = String::from("{\n  \"manifest\": {\n");
    for (i, (key, value)) in doc.manifest.iter().enumerate() {
        let comma = if i + 1 == doc.manifest.len() { "" } else { "," };
        let _ = writeln!(
            text,
            "    \"{}\": \"{}\"{comma}",
            json_escape(key),
            json_escape(value)
        );
    }
    text.push_str("  },\n  \"columnNames\": [");
    for (i, col) in doc.columns.iter().enumerate() {
        let comma = if i + 1 == doc.columns.len() { "" } else { ", " };
        let _ = write!(text, "\"{}\"{comma}", json_escape(col));
    }
    text.push_str("],\n  \"rows\": [\n");
    for (i, row) in doc.rows.iter().enumerate() {
        debug_assert!(row.iter().all(|v| v.is_finite()), "non-finite table cell");
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        let comma = if i + 1 == doc.rows.len() { "" } else { "," };
        let _ = writeln!(text, "    [{}]{comma}", cells.join(", "));
    }
    text.push_str("  ]\n}\n");
    fs::write(path, text).map_err(|e| CliFailure::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances::{JOIN_RESIDUAL_RESONANT, PEAK_TRANSMISSION_DEFECT};

    const PI_TEXT: &str = "3.141592653589793";

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("deltachain").chain(args.iter().copied()))
    }

    /// Lines of the data section (everything except `#` comments).
    fn data_section(path: &Path) -> Vec<String> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    }

    fn parse_rows(lines: &[String]) -> Vec<Vec<f64>> {
        lines[1..]
            .iter()
            .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect())
            .collect()
    }

    #[test]
    fn resonances_command_reports_the_canonical_trap() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.csv");
        let code = run_args(&[
            "resonances",
            "--v0",
            "10",
            "--sep",
            PI_TEXT,
            "--nmax",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let lines = data_section(&out);
        assert_eq!(lines[0], "n,k,energy,transmissionAtPeak,joiningResidual");
        let rows = parse_rows(&lines);
        assert_eq!(rows.len(), 2);
        assert!((rows[0][1] - 0.9408).abs() < 1e-4);
        assert!((rows[1][1] - 1.8852).abs() < 1e-4);
        for row in &rows {
            assert!(row[3] >= 1.0 - PEAK_TRANSMISSION_DEFECT);
            assert!(row[4] < JOIN_RESIDUAL_RESONANT);
        }
    }

    #[test]
    fn spectrum_of_zero_strength_is_unity() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s.csv");
        let code = run_args(&[
            "spectrum",
            "--v0",
            "0",
            "--sep",
            "1",
            "--emin",
            "1",
            "--emax",
            "2",
            "--npoints",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let rows = parse_rows(&data_section(&out));
        assert_eq!(rows.len(), 3);
        for row in rows {
            assert_eq!(row[1], 1.0);
            assert_eq!(row[2], 0.0);
        }
    }

    #[test]
    fn spectrum_rows_round_trip_and_hit_the_grid_ends() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s.csv");
        assert_eq!(
            run_args(&[
                "spectrum",
                "--v0",
                "10",
                "--sep",
                PI_TEXT,
                "--emin",
                "0.1",
                "--emax",
                "4",
                "--npoints",
                "11",
                "--out",
                out.to_str().unwrap(),
            ]),
            0
        );
        let rows = parse_rows(&data_section(&out));
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0][0], 0.1);
        assert_eq!(rows[10][0], 4.0);
        for row in &rows {
            assert!((row[1] + row[2] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn include_k_injects_exact_abscissae() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s.csv");
        let k0 = "0.94079904835254134";
        assert_eq!(
            run_args(&[
                "spectrum",
                "--v0",
                "10",
                "--sep",
                PI_TEXT,
                "--emin",
                "0.1",
                "--emax",
                "4",
                "--npoints",
                "50",
                "--include-k",
                k0,
                "--out",
                out.to_str().unwrap(),
            ]),
            0
        );
        let rows = parse_rows(&data_section(&out));
        assert_eq!(rows.len(), 51);
        let energies: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        assert!(energies.windows(2).all(|w| w[0] <= w[1]), "rows not sorted");
        let k0v: f64 = k0.parse().unwrap();
        let injected = rows
            .iter()
            .find(|r| (r[0] - k0v * k0v).abs() < 1e-15)
            .expect("injected abscissa missing");
        assert!(injected[1] >= 1.0 - PEAK_TRANSMISSION_DEFECT);
    }

    #[test]
    fn sampled_spectrum_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let out1 = dir.path().join("a.csv");
        let out2 = dir.path().join("b.csv");
        for out in [&out1, &out2] {
            assert_eq!(
                run_args(&[
                    "spectrum",
                    "--v0",
                    "10",
                    "--sep",
                    PI_TEXT,
                    "--ntraps",
                    "12",
                    "--gap-min",
                    "1",
                    "--gap-max",
                    "3",
                    "--seed",
                    "42",
                    "--emin",
                    "0.5",
                    "--emax",
                    "2",
                    "--npoints",
                    "20",
                    "--out",
                    out.to_str().unwrap(),
                ]),
                0
            );
        }
        assert_eq!(data_section(&out1), data_section(&out2));
    }

    #[test]
    fn spectrum_rejects_partial_sampling_flags() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s.csv");
        let code = run_args(&[
            "spectrum",
            "--v0",
            "10",
            "--sep",
            "1",
            "--ntraps",
            "5",
            "--emin",
            "1",
            "--emax",
            "2",
            "--npoints",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
        assert!(!out.exists());
    }

    #[test]
    fn json_spectrum_is_valid_and_carries_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s.json");
        assert_eq!(
            run_args(&[
                "spectrum",
                "--v0",
                "1",
                "--sep",
                "1",
                "--emin",
                "1",
                "--emax",
                "2",
                "--npoints",
                "4",
                "--format",
                "json",
                "--out",
                out.to_str().unwrap(),
            ]),
            0
        );
        let value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(value["manifest"]["subcommand"], "spectrum");
        assert_eq!(value["manifest"]["toolVersion"], env!("CARGO_PKG_VERSION"));
        assert!(value["manifest"]["timestampUtc"].is_string());
        let cols: Vec<&str> = value["columnNames"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_str().unwrap())
            .collect();
        assert_eq!(cols, ["energy", "transmission", "reflection"]);
        let rows = value["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].as_array().unwrap()[0].as_f64().unwrap(), 1.0);
        assert_eq!(rows[3].as_array().unwrap()[0].as_f64().unwrap(), 2.0);
    }

    #[test]
    fn wavefunction_grid_covers_the_window() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("w.csv");
        assert_eq!(
            run_args(&[
                "wavefunction",
                "--v0",
                "10",
                "--sep",
                PI_TEXT,
                "--k",
                "0.94079904835254134",
                "--xmin",
                "-10",
                "--xmax",
                "13",
                "--npoints",
                "231",
                "--out",
                out.to_str().unwrap(),
            ]),
            0
        );
        let lines = data_section(&out);
        assert_eq!(lines[0], "x,rePsi,imPsi,absPsi");
        let rows = parse_rows(&lines);
        assert_eq!(rows.len(), 231);
        assert_eq!(rows[0][0], -10.0);
        assert_eq!(rows[230][0], 13.0);
        for row in &rows {
            let norm = (row[1] * row[1] + row[2] * row[2]).sqrt();
            assert!((norm - row[3]).abs() < 1e-12);
        }
        // at resonance the trap interior piles up amplitude
        let inside_max = rows
            .iter()
            .filter(|r| r[0] > 0.0 && r[0] < std::f64::consts::PI)
            .map(|r| r[3])
            .fold(0.0, f64::max);
        let outside_max = rows
            .iter()
            .filter(|r| r[0] < 0.0 || r[0] > std::f64::consts::PI)
            .map(|r| r[3])
            .fold(0.0, f64::max);
        assert!(
            inside_max >= 3.0 * outside_max,
            "{inside_max} vs {outside_max}"
        );
    }

    #[test]
    fn localize_data_section_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let out1 = dir.path().join("l1.csv");
        let out2 = dir.path().join("l2.csv");
        for out in [&out1, &out2] {
            assert_eq!(
                run_args(&[
                    "localize",
                    "--v0",
                    "10",
                    "--sep",
                    PI_TEXT,
                    "--gap-min",
                    "1",
                    "--gap-max",
                    "3",
                    "--energy",
                    "2",
                    "--ntraps-list",
                    "5,10,20",
                    "--realizations",
                    "8",
                    "--seed",
                    "99",
                    "--out",
                    out.to_str().unwrap(),
                ]),
                0
            );
        }
        assert_eq!(data_section(&out1), data_section(&out2));
        let lines = data_section(&out1);
        assert_eq!(lines[0], "nTraps,meanLnT,varLnT");
        let rows = parse_rows(&lines);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0][0], 5.0);
        // manifest must carry the fit
        let text = fs::read_to_string(&out1).unwrap();
        for key in [
            "gammaPerTrap",
            "stdError",
            "rSquared",
            "localizationLengthTraps",
            "generatorIdentity",
        ] {
            assert!(text.contains(&format!("# {key}=")), "missing {key}");
        }
    }

    #[test]
    fn argument_errors_exit_2_without_output() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("x.csv");
        let out_str = out.to_str().unwrap();
        let cases: Vec<Vec<&str>> = vec![
            vec!["spectral"], // unknown subcommand
            vec!["spectrum", "--bogus", "1"],
            vec![
                "spectrum", "--v0", "1", "--sep", "1", "--emin", "1", "--emax", "2",
            ],
            vec![
                "spectrum",
                "--v0",
                "abc",
                "--sep",
                "1",
                "--emin",
                "1",
                "--emax",
                "2",
                "--npoints",
                "3",
                "--out",
                out_str,
            ],
            vec![
                "spectrum",
                "--v0",
                "-1",
                "--sep",
                "1",
                "--emin",
                "1",
                "--emax",
                "2",
                "--npoints",
                "3",
                "--out",
                out_str,
            ],
            vec![
                "spectrum",
                "--v0",
                "1",
                "--sep",
                "1",
                "--emin",
                "2",
                "--emax",
                "1",
                "--npoints",
                "3",
                "--out",
                out_str,
            ],
            vec![
                "spectrum",
                "--v0",
                "1",
                "--sep",
                "1",
                "--emin",
                "1",
                "--emax",
                "2",
                "--npoints",
                "1",
                "--out",
                out_str,
            ],
            vec![
                "spectrum",
                "--v0",
                "1",
                "--sep",
                "1",
                "--emin",
                "1",
                "--emax",
                "2",
                "--npoints",
                "3",
                "--include-k",
                "-2",
                "--out",
                out_str,
            ],
            vec![
                "resonances",
                "--v0",
                "0",
                "--sep",
                "1",
                "--nmax",
                "0",
                "--out",
                out_str,
            ],
            vec![
                "wavefunction",
                "--v0",
                "1",
                "--sep",
                "1",
                "--k",
                "1",
                "--xmin",
                "3",
                "--xmax",
                "-3",
                "--npoints",
                "5",
                "--out",
                out_str,
            ],
            vec![
                "localize",
                "--v0",
                "10",
                "--sep",
                "1",
                "--gap-min",
                "1",
                "--gap-max",
                "3",
                "--energy",
                "2",
                "--ntraps-list",
                "5,10",
                "--realizations",
                "4",
                "--seed",
                "1",
                "--out",
                out_str,
            ],
            vec![
                "localize",
                "--v0",
                "10",
                "--sep",
                "1",
                "--gap-min",
                "3",
                "--gap-max",
                "1",
                "--energy",
                "2",
                "--ntraps-list",
                "5,10,20",
                "--realizations",
                "4",
                "--seed",
                "1",
                "--out",
                out_str,
            ],
            vec![
                "localize",
                "--v0",
                "10",
                "--sep",
                "1",
                "--gap-min",
                "1",
                "--gap-max",
                "3",
                "--energy",
                "2",
                "--ntraps-list",
                "5,10,20",
                "--realizations",
                "1",
                "--seed",
                "1",
                "--out",
                out_str,
            ],
        ];
        for case in cases {
            assert_eq!(run_args(&case), 2, "expected exit 2 for {case:?}");
            assert!(!out.exists(), "output written for {case:?}");
        }
    }

    #[test]
    fn help_and_version_exit_0() {
        assert_eq!(run_args(&["--help"]), 0);
        assert_eq!(run_args(&["--version"]), 0);
        assert_eq!(run_args(&["spectrum", "--help"]), 0);
    }

    #[test]
    fn unwritable_output_exits_1() {
        let code = run_args(&[
            "resonances",
            "--v0",
            "10",
            "--sep",
            "1",
            "--nmax",
            "0",
            "--out",
            "/nonexistent-dir/r.csv",
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn condensed_error_is_one_line_naming_the_flag() {
        let err = Cli::try_parse_from(["deltachain", "spectrum", "--bogus", "1"]).unwrap_err();
        let line = condense_parse_error(&err);
        assert!(!line.contains('\n'));
        assert!(line.contains("--bogus"), "{line}");
    }

    #[test]
    fn fmt_f64_round_trips_and_names_infinity() {
        for v in [0.1, 4.0, -3.258096538021482, 1.0e-300, 9.87e250] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!(json_escape("a\"b\\c\nd"), "a\\\"b\\\\c\\u000ad");
    }
}
