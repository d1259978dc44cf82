//! Command-line front end of the `bpbr` binary.
//!
//! Subcommands: `fit`, `test`, `simulate`, `table1` and `diagnose`. Input data
//! is CSV with the header `x,y,group`; the `group` column is an opaque label.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | bad arguments, unreadable input, CSV or scenario parse error |
//! | 3 | statistical error; the message starts with the error name |
//! | 4 | every Monte Carlo replicate failed |
//!
//! Output goes to stdout unless `--output` is given. When the environment
//! variable [`OUTPUT_DIR_ENV`] is set, the output file is placed in that
//! directory instead (using the file name of `--output`, or
//! `<subcommand>.<format>` when `--output` is absent).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dataset::{check_overlap, GroupedDataset, OverlapReport};
use crate::error::Error;
use crate::inference::{equivalence_test, ConfidenceInterval, FitResult, VarianceSource, Verdict};
use crate::simulation::{
    format_summary, format_table1, plot_data, run_scenario, table1_suite, Scenario,
};
use crate::slopes::RegressionMode;
use crate::variance::{
    asymptotic_terms, asymptotic_variance_separated_equal, estimate_q_empirical,
    variance_classic, variance_equal_groups, variance_exact, variance_nonoverlapping,
    AsymptoticTerms, QMatrix,
};

/// Environment variable that overrides the output directory.
pub const OUTPUT_DIR_ENV: &str = "BPBR_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "bpbr", version, about = "Block-Passing-Bablok regression for grouped method-comparison data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a line and report estimates, intervals and the verdict.
    Fit(DataArgs),
    /// Equivalence test of two methods (zero intercept and unit slope).
    Test(DataArgs),
    /// Monte Carlo coverage and power for one scenario file.
    Simulate(SimulateArgs),
    /// The full reference simulation grid.
    Table1(Table1Args),
    /// Overlap report, empirical q and the variance under each model.
    Diagnose(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Text => "txt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Block,
    Classic,
    TheilSen,
}

impl From<ModeArg> for RegressionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Block => RegressionMode::Block,
            ModeArg::Classic => RegressionMode::Classic,
            ModeArg::TheilSen => RegressionMode::TheilSen,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarianceArg {
    Conservative,
    EmpiricalQ,
}

impl From<VarianceArg> for VarianceSource {
    fn from(v: VarianceArg) -> Self {
        match v {
            VarianceArg::Conservative => VarianceSource::Conservative,
            VarianceArg::EmpiricalQ => VarianceSource::EmpiricalQ,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// CSV file with header `x,y,group`.
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "block")]
    pub mode: ModeArg,
    /// Error probability of the intervals (0.05 gives 95% intervals).
    #[arg(long, default_value_t = 0.05)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "conservative")]
    pub variance: VarianceArg,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// TOML scenario file. Without it the built-in 180-20 design with
    /// slope 0.8 and sigma 0.2 is used.
    pub scenario: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the scenario replicate count.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Overrides the scenario interval error probability.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Restricts the scenario to one mode.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub variance: Option<VarianceArg>,
    /// Write the points, true line and both fitted lines of the first
    /// replicate as CSV instead of the Monte Carlo summary.
    #[arg(long)]
    pub emit_plot_data: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Table1Args {
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub replicates: usize,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Stat(#[from] Error),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Stat(Error::AllReplicatesFailed(_)) => 4,
            CliError::Stat(Error::InvalidScenario(_)) => 2,
            CliError::Stat(_) => 3,
        }
    }
}

/// Reads a dataset from CSV with the header `x,y,group`.
///
/// Errors name the 1-based data row (the header is not counted).
pub fn read_csv(path: &Path) -> Result<GroupedDataset, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Parse(format!("cannot open {}: {e}", path.display())))?;
    read_csv_from(file)
}

/// As [`read_csv`], from any reader.
pub fn read_csv_from<R: io::Read>(reader: R) -> Result<GroupedDataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Parse(format!("header: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names != ["x", "y", "group"] {
        return Err(CliError::Parse(format!(
            "header must be `x,y,group`, found `{}`",
            names.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CliError::Parse(format!("row {row}: {}", csv_reason(&e))))?;
        let number = |j: usize, name: &str| -> Result<f64, CliError> {
            let v: f64 = rec[j]
                .trim()
                .parse()
                .map_err(|_| CliError::Parse(format!("row {row}: {name} `{}` is not a number", &rec[j])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::Parse(format!("row {row}: {name} is not finite")))
            }
        };
        rows.push((number(0, "x")?, number(1, "y")?, rec[2].to_string()));
    }
    GroupedDataset::from_rows(rows).map_err(|e| match e {
        Error::EmptyInput => CliError::Parse("no data rows".into()),
        other => CliError::Stat(other),
    })
}

fn csv_reason(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { len, expected_len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    }
}

/// Writes `ds` as CSV with header `x,y,group`. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv(ds: &GroupedDataset, path: &Path) -> io::Result<()> {
    fs::write(path, dataset_to_csv(ds))
}

pub fn dataset_to_csv(ds: &GroupedDataset) -> String {
    let mut out = String::from("x,y,group\n");
    for p in ds.points() {
        let label = ds.label(p.group);
        let label = if label.contains([',', '"', '\n', '\r']) {
            format!("\"{}\"", label.replace('"', "\"\""))
        } else {
            label.to_string()
        };
        out.push_str(&format!("{:?},{:?},{}\n", p.x, p.y, label));
    }
    out
}

/// Where the output of a subcommand goes: `None` is stdout.
fn resolve_output(output: Option<&Path>, default_name: &str) -> Result<Option<PathBuf>, CliError> {
    let target = match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => {
            let name = output
                .and_then(|p| p.file_name())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(default_name));
            Some(PathBuf::from(dir).join(name))
        }
        _ => output.map(Path::to_path_buf),
    };
    if let Some(t) = &target {
        let parent = t.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = parent {
            if !dir.is_dir() {
                return Err(CliError::Usage(format!(
                    "output directory {} does not exist",
                    dir.display()
                )));
            }
        }
    }
    Ok(target)
}

fn emit(target: Option<&Path>, text: &str) -> Result<(), CliError> {
    match target {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes to JSON");
    s.push('\n');
    s
}

fn check_gamma(gamma: f64) -> Result<(), CliError> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("gamma must lie in (0, 1), got {gamma}")))
    }
}

fn check_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input file {} not found", path.display())))
    }
}

/// JSON report of `fit`.
#[derive(Debug, Serialize)]
pub struct FitReport {
    pub n_points: usize,
    pub n_groups: usize,
    #[serde(flatten)]
    pub result: FitResult,
}

/// JSON report of `test`.
#[derive(Debug, Serialize)]
pub struct TestReport {
    pub mode: RegressionMode,
    pub gamma: f64,
    pub verdict: Verdict,
    pub zero_in_alpha_ci: bool,
    pub one_in_beta_ci: bool,
    pub alpha_ci: ConfidenceInterval,
    pub beta_ci: ConfidenceInterval,
}

fn fmt_ci(ci: &ConfidenceInterval) -> String {
    format!("[{}, {}]", ci.lower, ci.upper)
}

fn fit_text(r: &FitReport) -> String {
    let f = &r.result;
    let e = &f.estimate;
    format!(
        "mode        {}\n\
         points      {} in {} groups\n\
         slopes      N = {}, K = {}\n\
         beta_hat    {}\n\
         alpha_hat   {}\n\
         beta CI     {} ({}%)\n\
         alpha CI    {}\n\
         ranks       M1 = {}, M2 = {}, C = {}\n\
         variance    {} ({:?})\n\
         verdict     {:?}\n",
        e.mode.name(),
        r.n_points,
        r.n_groups,
        e.n_slopes,
        e.offset,
        e.beta_hat,
        e.alpha_hat,
        fmt_ci(&f.beta_ci),
        100.0 * f.beta_ci.level,
        fmt_ci(&f.alpha_ci),
        f.m1,
        f.m2,
        f.c_gamma,
        f.variance.value,
        f.variance.kind,
        f.verdict,
    )
}

fn run_fit_like(args: &DataArgs, test: bool) -> Result<(), CliError> {
    check_input(&args.common.input)?;
    check_gamma(args.gamma)?;
    let name = format!("{}.{}", if test { "test" } else { "fit" }, args.common.format.extension());
    let target = resolve_output(args.common.output.as_deref(), &name)?;
    let ds = read_csv(&args.common.input)?;
    let result = equivalence_test(&ds, args.mode.into(), args.gamma, args.variance.into())?;
    let text = if test {
        let report = TestReport {
            mode: result.estimate.mode,
            gamma: result.gamma,
            verdict: result.verdict,
            zero_in_alpha_ci: result.alpha_ci.contains(0.0),
            one_in_beta_ci: result.beta_ci.contains(1.0),
            alpha_ci: result.alpha_ci,
            beta_ci: result.beta_ci,
        };
        match args.common.format {
            Format::Json => to_json(&report),
            Format::Text => format!(
                "verdict     {:?}\nalpha CI    {} contains 0: {}\nbeta CI     {} contains 1: {}\n",
                report.verdict,
                fmt_ci(&report.alpha_ci),
                report.zero_in_alpha_ci,
                fmt_ci(&report.beta_ci),
                report.one_in_beta_ci
            ),
        }
    } else {
        let report = FitReport {
            n_points: ds.n(),
            n_groups: ds.m(),
            result,
        };
        match args.common.format {
            Format::Json => to_json(&report),
            Format::Text => fit_text(&report),
        }
    };
    emit(target.as_deref(), &text)
}

/// The scenario used by `simulate` when no file is given.
pub fn default_scenario() -> Scenario {
    let mut sc = Scenario::new(vec![180, 20], 0.8, 0.2, 1000, 42);
    sc.name = Some("180-20, beta 0.8, sigma 0.2".into());
    sc
}

fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut sc = match &args.scenario {
        Some(path) => {
            check_input(path)?;
            let text = fs::read_to_string(path)?;
            toml::from_str::<Scenario>(&text)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
        }
        None => default_scenario(),
    };
    if let Some(s) = args.seed {
        sc.seed = s;
    }
    if let Some(r) = args.replicates {
        sc.replicates = r;
    }
    if let Some(g) = args.gamma {
        check_gamma(g)?;
        sc.gamma = g;
    }
    if let Some(m) = args.mode {
        sc.modes = vec![m.into()];
    }
    if let Some(v) = args.variance {
        sc.variance = v.into();
    }
    sc.validate()?;

    let default_name = if args.emit_plot_data {
        "plot-data.csv".to_string()
    } else {
        format!("simulate.{}", args.format.extension())
    };
    let target = resolve_output(args.output.as_deref(), &default_name)?;
    let text = if args.emit_plot_data {
        plot_data(&sc, 0)?
    } else {
        let summary = run_scenario(&sc)?;
        match args.format {
            Format::Json => to_json(&summary),
            Format::Text => format_summary(&summary),
        }
    };
    emit(target.as_deref(), &text)
}

fn run_table1(args: &Table1Args) -> Result<(), CliError> {
    if args.replicates < 100 {
        return Err(CliError::Usage("table1 needs --replicates >= 100".into()));
    }
    let target = resolve_output(args.output.as_deref(), &format!("table1.{}", args.format.extension()))?;
    let rows = table1_suite(args.replicates, args.seed)?;
    let text = match args.format {
        Format::Json => to_json(&rows),
        Format::Text => format_table1(&rows),
    };
    emit(target.as_deref(), &text)
}

/// Group pair reported by `diagnose`, with labels.
#[derive(Debug, Serialize)]
pub struct LabelledPair {
    pub first: String,
    pub second: String,
}

/// Variances of `C̃` under every model, side by side.
#[derive(Debug, Serialize)]
pub struct VarianceComparison {
    pub classic: f64,
    pub nonoverlapping: f64,
    /// `None` when the formula goes negative; see `exact_with_q_error`.
    pub exact_with_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_with_q_error: Option<String>,
    /// Present for equal group sizes only.
    pub equal_groups: Option<f64>,
    /// Separated equal-size leading-order form; equal group sizes only.
    pub asymptotic_separated_equal: Option<f64>,
    pub asymptotic_terms: AsymptoticTerms,
}

/// JSON report of `diagnose`.
#[derive(Debug, Serialize)]
pub struct DiagnoseReport {
    pub n_points: usize,
    pub group_labels: Vec<String>,
    pub group_sizes: Vec<usize>,
    pub overlap: OverlapReport,
    pub overlapping_x: Vec<LabelledPair>,
    pub overlapping_y: Vec<LabelledPair>,
    pub q_empirical: QMatrix,
    pub variance: VarianceComparison,
}

/// Builds the `diagnose` report for `ds`.
pub fn diagnose(ds: &GroupedDataset) -> DiagnoseReport {
    let sizes = ds.group_sizes();
    let overlap = check_overlap(ds);
    let label_pairs = |pairs: &[(usize, usize)]| {
        pairs
            .iter()
            .map(|&(k, u)| LabelledPair {
                first: ds.label(k).to_string(),
                second: ds.label(u).to_string(),
            })
            .collect()
    };
    let q = estimate_q_empirical(ds);
    let (exact_with_q, exact_with_q_error) = match variance_exact(sizes, &q) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let equal = sizes.windows(2).all(|w| w[0] == w[1]);
    let equal_groups = if equal {
        variance_equal_groups(sizes.len(), sizes[0], q.off_diagonal_sum()).ok()
    } else {
        None
    };
    let variance = VarianceComparison {
        classic: variance_classic(ds.n()),
        nonoverlapping: variance_nonoverlapping(sizes),
        exact_with_q,
        exact_with_q_error,
        equal_groups,
        asymptotic_separated_equal: equal.then(|| asymptotic_variance_separated_equal(ds.n(), ds.m())),
        asymptotic_terms: asymptotic_terms(sizes, &q),
    };
    DiagnoseReport {
        n_points: ds.n(),
        group_labels: ds.labels().to_vec(),
        group_sizes: sizes.to_vec(),
        overlapping_x: label_pairs(&overlap.offending_pairs),
        overlapping_y: label_pairs(&overlap.offending_pairs_y),
        overlap,
        q_empirical: q,
        variance,
    }
}

fn diagnose_text(r: &DiagnoseReport) -> String {
    let mut out = String::new();
    let pairs = |ps: &[LabelledPair]| {
        if ps.is_empty() {
            "none".to_string()
        } else {
            ps.iter().map(|p| format!("{}/{}", p.first, p.second)).collect::<Vec<_>>().join(" ")
        }
    };
    out.push_str(&format!("points {} in {} groups\n", r.n_points, r.group_labels.len()));
    out.push_str(&format!("x overlap: {}\n", pairs(&r.overlapping_x)));
    out.push_str(&format!("y overlap: {}\n", pairs(&r.overlapping_y)));
    out.push_str("empirical q (row k: pair group, column u: third point):\n");
    for (k, row) in r.q_empirical.rows().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        out.push_str(&format!("  {:<8} {}\n", r.group_labels[k], cells.join(" ")));
    }
    let v = &r.variance;
    let opt = |o: Option<f64>| o.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    out.push_str(&format!("variance classic          {:.4}\n", v.classic));
    out.push_str(&format!("variance non-overlapping  {:.4}\n", v.nonoverlapping));
    out.push_str(&format!(
        "variance exact with q     {}\n",
        v.exact_with_q_error.clone().unwrap_or_else(|| opt(v.exact_with_q))
    ));
    out.push_str(&format!("variance equal groups     {}\n", opt(v.equal_groups)));
    out.push_str(&format!("asymptotic separated      {}\n", opt(v.asymptotic_separated_equal)));
    let t = &v.asymptotic_terms;
    out.push_str(&format!(
        "asymptotic general        {:.4} (l_m = {:.6}, l_o = {:.6})\n",
        t.value, t.l_m, t.l_o
    ));
    out
}

fn run_diagnose(args: &CommonArgs) -> Result<(), CliError> {
    check_input(&args.input)?;
    let target = resolve_output(args.output.as_deref(), &format!("diagnose.{}", args.format.extension()))?;
    let ds = read_csv(&args.input)?;
    let report = diagnose(&ds);
    let text = match args.format {
        Format::Json => to_json(&report),
        Format::Text => diagnose_text(&report),
    };
    emit(target.as_deref(), &text)
}

/// Executes a parsed command.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fit(a) => run_fit_like(a, false),
        Command::Test(a) => run_fit_like(a, true),
        Command::Simulate(a) => run_simulate(a),
        Command::Table1(a) => run_table1(a),
        Command::Diagnose(a) => run_diagnose(a),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
