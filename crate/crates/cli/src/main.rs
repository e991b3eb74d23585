//! `iterperiod` command-line interface.
//!
//! Exit codes: 0 success, 2 invalid input or parameters, 3 I/O failure,
//! 4 ceiling exceeded, 5 invariant violation or failed check.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use iterperiod::asymptotics::{
    compute_constants, en_t_estimate, g_profile, write_estimates_csv, DEFAULT_TOLERANCE,
};
use iterperiod::exact::{
    brute_force_expectations, exact_e_b_conditional_with_ceiling, exact_e_t_with_ceiling,
    write_expectations_csv, ExpectationRow, OrderTable, CONDITIONAL_CEILING, M_MAX,
};
use iterperiod::fungraph::{analyze, parse_mapping, period_stats};
use iterperiod::montecarlo::{
    run_experiment, write_histogram_csv, write_summary_csv, z_gof, ExperimentConfig, RNG_ALGORITHM,
};
use iterperiod::renyi::{self, RenyiTable};
use iterperiod::scalar::FLOAT_PRECISION_BITS;
use iterperiod::series::{self, report_row, write_report_csv, Mode, SeriesTable};
use iterperiod::{exact, Error, ExactScalar};

/// Largest `n` for which `exact` runs the enumeration cross-check.
const CROSSCHECK_MAX_N: usize = 7;

#[derive(Parser, Debug)]
#[command(
    name = "iterperiod",
    version,
    about = "Periods of iterated random mappings"
)]
struct Cli {
    /// Write output here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Float => Mode::Float,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Period statistics (T, B, O) of one mapping read from a file ("-" for stdin).
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Exact E_n(T) and E_n(B) for 1..=n, with enumeration cross-checks for n <= 7.
    Exact {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Largest m for partition enumeration of M_m.
        #[arg(long, default_value_t = M_MAX)]
        max_m: usize,
        /// Largest n for exact E_n(B).
        #[arg(long, default_value_t = CONDITIONAL_CEILING)]
        exact_ceiling: usize,
        /// Also write the (m, M_m, b_m) table to this path.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// E_n(B) from the power-series engine, with Rankin and saddle-point data.
    Series {
        /// Degree of the coefficient table; also the default n.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        degree: u64,
        /// Values of n to report (default: the degree).
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value = "float")]
        mode: ModeArg,
        /// Mantissa bits of float mode.
        #[arg(long, env = "ITERPERIOD_PRECISION", default_value_t = FLOAT_PRECISION_BITS)]
        precision: u32,
        #[arg(long, default_value_t = series::DEFAULT_EXACT_CEILING)]
        exact_ceiling: usize,
        /// Also report the variant that convolves with mu instead of the bare coefficients.
        #[arg(long)]
        paper_variant: bool,
        /// Also write the (m, e_coeff, mu) table to this path.
        #[arg(long)]
        coefficients: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Asymptotic bounds on log E_n(T).
    Asymptotics {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// eps for the reported maximizer profile.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// The constants I, beta0, k0 and a0.
    Constants {
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Monte-Carlo sampling of uniform random mappings.
    Simulate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (results do not depend on this).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        blocks: Option<u64>,
        /// Recompute T and B exactly for every sample (n <= 1000).
        #[arg(long)]
        crosscheck: bool,
        /// Chi-square test of Z against its exact distribution.
        #[arg(long)]
        gof: bool,
        /// Fail unless the fraction of standardized log T <= 0 lies in [0.35, 0.65].
        #[arg(long)]
        harris_gate: bool,
        /// Also write the standardized log T histogram to this path.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Connected mappings: |U_d|, kappa_d, Q(d), c_d.
    Renyi {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        max_d: u64,
        #[arg(long, default_value_t = renyi::DEFAULT_EXACT_CEILING)]
        exact_ceiling: usize,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_input() => 2,
            Error::InsufficientData(_) => 2,
            Error::Io(_) | Error::Json(_) => 3,
            Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => 3,
            e if e.is_ceiling() => 4,
            _ => 5,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 3,
            message: e.to_string(),
        }
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn check_failed(message: impl Into<String>) -> Failure {
    Failure {
        code: 5,
        message: message.into(),
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn rational_json(x: &ExactScalar) -> serde_json::Value {
    match x.as_rational() {
        Some(r) => json!({ "num": r.numer().to_string(), "den": r.denom().to_string() }),
        None => json!(x.to_f64()),
    }
}

fn cmd_analyze(file: &PathBuf, format: Format, output: &Option<PathBuf>) -> Result<(), Failure> {
    let mut text = Vec::new();
    if file.as_os_str() == "-" {
        io::stdin().read_to_end(&mut text)?;
    } else {
        File::open(file)?.read_to_end(&mut text)?;
    }
    let mapping = parse_mapping(&text)?;
    let stats = period_stats(&analyze(&mapping));
    if !stats.period_divides_product() || !stats.denes_holds() {
        return Err(check_failed("period invariants violated"));
    }
    let report = stats.report();
    let mut out = open_output(output)?;
    match format {
        Format::Json => write_json(
            &mut out,
            &serde_json::to_value(&report).map_err(Error::from)?,
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "n",
                "T",
                "B",
                "O",
                "log_T",
                "log_B",
                "cycle_lengths",
                "num_cyclic",
            ])
            .map_err(Error::from)?;
            let lens: Vec<String> = report.cycle_lengths.iter().map(|l| l.to_string()).collect();
            w.write_record([
                report.n.to_string(),
                report.period.clone(),
                report.product.clone(),
                report.distinct_iterates.clone(),
                report.log_period.to_string(),
                report.log_product.to_string(),
                lens.join(" "),
                report.num_cyclic.to_string(),
            ])
            .map_err(Error::from)?;
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_exact(
    n: usize,
    max_m: usize,
    exact_ceiling: usize,
    table: &Option<PathBuf>,
    format: Format,
    output: &Option<PathBuf>,
) -> Result<(), Failure> {
    if n > max_m {
        return Err(Error::PartitionTooLarge {
            m: n,
            ceiling: max_m,
        }
        .into());
    }
    if n > exact_ceiling {
        return Err(Error::ExactModeTooLarge {
            n,
            ceiling: exact_ceiling,
        }
        .into());
    }
    let mut rows = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for k in 1..=n {
        let e_t = exact_e_t_with_ceiling(k, max_m)?;
        let e_b = exact_e_b_conditional_with_ceiling(k, exact_ceiling)?;
        rows.push(ExpectationRow::new(k, &e_t, &e_b));
        values.push((e_t, e_b));
    }

    let mut checks = Vec::new();
    for k in 1..=n.min(CROSSCHECK_MAX_N) {
        let brute = brute_force_expectations(k)?;
        let series_b = series::expected_b(k, Mode::Exact)?;
        let (e_t, e_b) = &values[k - 1];
        let pass = &brute.e_t == e_t && &brute.e_b == e_b && &series_b == e_b;
        checks.push((k, pass));
    }
    for (k, pass) in &checks {
        eprintln!("{} oracle n={k}", if *pass { "PASS" } else { "FAIL" });
    }

    if let Some(path) = table {
        let t = OrderTable::build_with_ceiling(n, max_m)?;
        t.write_csv(BufWriter::new(File::create(path)?))?;
    }

    let mut out = open_output(output)?;
    match format {
        Format::Csv => write_expectations_csv(&rows, &mut out)?,
        Format::Json => {
            let rows: Vec<_> = values
                .iter()
                .enumerate()
                .map(|(i, (t, b))| json!({ "n": i + 1, "E_T": rational_json(t), "E_B": rational_json(b) }))
                .collect();
            let checks: Vec<_> = checks
                .iter()
                .map(|(k, p)| json!({ "n": k, "status": if *p { "PASS" } else { "FAIL" } }))
                .collect();
            write_json(&mut out, &json!({ "expectations": rows, "checks": checks }))?;
        }
    }
    out.flush()?;
    if checks.iter().all(|(_, p)| *p) {
        Ok(())
    } else {
        Err(check_failed("oracle cross-check failed"))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_series(
    degree: usize,
    ns: &[usize],
    mode: Mode,
    precision: u32,
    exact_ceiling: usize,
    paper_variant: bool,
    coefficients: &Option<PathBuf>,
    format: Format,
    output: &Option<PathBuf>,
) -> Result<(), Failure> {
    if mode == Mode::Float && precision != FLOAT_PRECISION_BITS {
        return Err(input(format!(
            "float mode runs at {FLOAT_PRECISION_BITS} bits; use --mode exact for exact values"
        )));
    }
    let ns: Vec<usize> = if ns.is_empty() {
        vec![degree]
    } else {
        ns.to_vec()
    };
    if let Some(&bad) = ns.iter().find(|&&k| k == 0 || k > degree) {
        return Err(Error::DegreeTooSmall { degree, n: bad }.into());
    }
    let table = SeriesTable::build_with_ceiling(degree, mode, exact_ceiling)?;
    if let Some(path) = coefficients {
        table.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let rows = ns
        .iter()
        .map(|&k| report_row(&table, k, paper_variant))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = open_output(output)?;
    match format {
        Format::Csv => write_report_csv(&rows, &mut out)?,
        Format::Json => {
            let values: Vec<_> = rows
                .iter()
                .zip(&ns)
                .map(|(r, &k)| -> Result<_, Failure> {
                    let mut v = serde_json::to_value(r).map_err(Error::from)?;
                    if mode == Mode::Exact {
                        v["E_B"] = rational_json(&table.expected_b(k)?);
                    }
                    Ok(v)
                })
                .collect::<Result<_, _>>()?;
            write_json(
                &mut out,
                &json!({ "mode": mode.to_string(), "degree": degree, "rows": values }),
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_asymptotics(
    ns: &[usize],
    eps: f64,
    format: Format,
    output: &Option<PathBuf>,
) -> Result<(), Failure> {
    if let Some(&bad) = ns.iter().find(|&&k| k < 100) {
        return Err(input(format!("asymptotics needs n >= 100, got {bad}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(input(format!("eps must lie in (0, 1], got {eps}")));
    }
    let estimates = ns
        .iter()
        .map(|&k| en_t_estimate(k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = open_output(output)?;
    match format {
        Format::Csv => write_estimates_csv(&estimates, &mut out)?,
        Format::Json => {
            let profiles = ns
                .iter()
                .map(|&k| g_profile(k, eps))
                .collect::<Result<Vec<_>, _>>()?;
            write_json(
                &mut out,
                &json!({
                    "estimates": estimates,
                    "profiles": profiles,
                    "note": "lower_log omits the error terms of unspecified size",
                }),
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_constants(tolerance: f64, format: Format, output: &Option<PathBuf>) -> Result<(), Failure> {
    let c = compute_constants(tolerance)?;
    if !(3.35..=3.37).contains(&c.k0) {
        return Err(check_failed(format!("k0 = {} outside [3.35, 3.37]", c.k0)));
    }
    let mut out = open_output(output)?;
    match format {
        Format::Json => write_json(&mut out, &serde_json::to_value(c).map_err(Error::from)?)?,
        Format::Csv => {
            writeln!(out, "I,beta0,k0,a0,quadrature_error")?;
            writeln!(
                out,
                "{},{},{},{},{}",
                c.i, c.beta0, c.k0, c.a0, c.quadrature_error
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    config: ExperimentConfig,
    gof: bool,
    harris_gate: bool,
    histogram: &Option<PathBuf>,
    format: Format,
    output: &Option<PathBuf>,
) -> Result<(), Failure> {
    config.validate()?;
    let summary = run_experiment(&config)?;
    let gof_result = if gof {
        let pmf = if config.n <= 2000 {
            exact::z_pmf(config.n)?
        } else {
            exact::z_pmf_f64(config.n)?
        };
        Some(z_gof(&summary, &pmf)?)
    } else {
        None
    };
    if let Some(path) = histogram {
        write_histogram_csv(&summary, BufWriter::new(File::create(path)?))?;
    }
    let mut out = open_output(output)?;
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_summary_csv(&summary, &mut buf)?;
            let text = String::from_utf8(buf).expect("csv output is utf-8");
            match &gof_result {
                None => out.write_all(text.as_bytes())?,
                Some(r) => {
                    let mut lines = text.lines();
                    let header = lines.next().unwrap_or_default();
                    let row = lines.next().unwrap_or_default();
                    writeln!(out, "{header},z_chi2,z_dof,z_pvalue")?;
                    writeln!(out, "{row},{},{},{}", r.chi2, r.dof, r.pvalue)?;
                }
            }
        }
        Format::Json => {
            let mut v = serde_json::to_value(&summary).map_err(Error::from)?;
            v["rng"] = json!(RNG_ALGORITHM);
            v["fraction_standardized_le_zero"] = json!(summary.fraction_le_zero());
            if let Some(r) = &gof_result {
                v["z_gof"] = serde_json::to_value(r).map_err(Error::from)?;
            }
            write_json(&mut out, &v)?;
        }
    }
    out.flush()?;
    if summary.violations.total() > 0 {
        return Err(check_failed(format!(
            "invariant violations: {:?}",
            summary.violations
        )));
    }
    if harris_gate {
        let f = summary.fraction_le_zero();
        if !(0.35..=0.65).contains(&f) {
            return Err(check_failed(format!(
                "standardized log T <= 0 fraction {f} outside [0.35, 0.65]"
            )));
        }
    }
    Ok(())
}

fn cmd_renyi(max_d: usize, exact_ceiling: usize, output: &Option<PathBuf>) -> Result<(), Failure> {
    let table = RenyiTable::build(max_d, exact_ceiling);
    let mut out = open_output(output)?;
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn to_usize(x: u64) -> Result<usize, Failure> {
    usize::try_from(x).map_err(|_| input(format!("{x} does not fit in usize")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let output = &cli.output;
    match cli.command {
        Command::Analyze { file, format } => cmd_analyze(&file, format, output),
        Command::Exact {
            n,
            max_m,
            exact_ceiling,
            table,
            format,
        } => cmd_exact(to_usize(n)?, max_m, exact_ceiling, &table, format, output),
        Command::Series {
            degree,
            n,
            mode,
            precision,
            exact_ceiling,
            paper_variant,
            coefficients,
            format,
        } => cmd_series(
            to_usize(degree)?,
            &n,
            mode.into(),
            precision,
            exact_ceiling,
            paper_variant,
            &coefficients,
            format,
            output,
        ),
        Command::Asymptotics { n, eps, format } => cmd_asymptotics(&n, eps, format, output),
        Command::Constants { tolerance, format } => cmd_constants(tolerance, format, output),
        Command::Simulate {
            n,
            samples,
            seed,
            blocks,
            crosscheck,
            gof,
            harris_gate,
            histogram,
            format,
        } => {
            let config = ExperimentConfig {
                n: to_usize(n)?,
                samples,
                seed,
                crosscheck,
                workers: blocks.map(to_usize).transpose()?,
            };
            cmd_simulate(config, gof, harris_gate, &histogram, format, output)
        }
        Command::Renyi {
            max_d,
            exact_ceiling,
        } => cmd_renyi(to_usize(max_d)?, exact_ceiling, output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
