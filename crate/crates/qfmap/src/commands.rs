//! Subcommand implementations, decoupled from argument parsing: each takes
//! its parsed arguments plus the global options, records what it read and
//! wrote in the run manifest, and returns the text to print.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use mapping_limits::approx::{approximate, ApproxError, ApproxParams};
use mapping_limits::density::{converge_budgeted, density_mc, DensityError, Structure};
use mapping_limits::formula::{parse_formula, FormulaParseError, QfFormula};
use mapping_limits::interval::{check_cycle_preservation, parse_interval, IntervalError};
use mapping_limits::local_stats::{ball_histogram, dispersion, residuality};
use mapping_limits::mapping::{parse_mapping, MappingError, ParsedMapping, WeightedMapping};
use mapping_limits::model::WeightedSampler;
use mapping_limits::ratio::{format_decimal, format_ratio, parse_ratio, ratio_to_f64};
use mapping_limits::BigRational;

use crate::manifest::{sha256_hex, RunManifest};

/// Options shared by every subcommand.
pub struct GlobalOpts {
    pub seed: u64,
    pub decimal: bool,
    pub budget: u64,
}

impl GlobalOpts {
    fn fmt_value(&self, r: &BigRational) -> String {
        if self.decimal {
            format_decimal(r, 12)
        } else {
            format_ratio(r)
        }
    }
}

/// What a subcommand produced: text for stdout plus digests of written files.
pub struct CommandOutput {
    pub stdout: String,
    pub files: Vec<(PathBuf, String)>,
}

impl CommandOutput {
    fn text(stdout: String) -> Self {
        CommandOutput {
            stdout,
            files: Vec::new(),
        }
    }
}

/// Failures mapped onto the exit-code contract: 1 for unusable input,
/// 2 for tripped resource guards, 3 for violated hypotheses.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Resource(String),
    Hypothesis(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Resource(_) => 2,
            CliError::Hypothesis(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Resource(msg) | CliError::Hypothesis(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl From<MappingError> for CliError {
    fn from(e: MappingError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FormulaParseError> for CliError {
    fn from(e: FormulaParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<IntervalError> for CliError {
    fn from(e: IntervalError) -> Self {
        match e {
            IntervalError::CellBudget { .. } | IntervalError::BudgetExceeded { .. } => {
                CliError::Resource(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        match e {
            DensityError::BudgetExceeded { .. } => CliError::Resource(e.to_string()),
            DensityError::Interval(inner) => inner.into(),
            DensityError::ShortSequence { .. } => CliError::Input(e.to_string()),
        }
    }
}

impl From<ApproxError> for CliError {
    fn from(e: ApproxError) -> Self {
        match e {
            ApproxError::CyclePreservation(_) => CliError::Hypothesis(e.to_string()),
            ApproxError::Interval(inner) => inner.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<glob::PatternError> for CliError {
    fn from(e: glob::PatternError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<glob::GlobError> for CliError {
    fn from(e: glob::GlobError) -> Self {
        CliError::Input(e.to_string())
    }
}

// ---------------------------------------------------------------- loading

fn read_input(path: &Path, manifest: &mut RunManifest) -> Result<String, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    manifest.record_input(path, &text);
    Ok(text)
}

fn is_interval_file(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("imap")
}

fn load_structure(path: &Path, manifest: &mut RunManifest) -> Result<Structure, CliError> {
    let text = read_input(path, manifest)?;
    if is_interval_file(path) {
        Ok(Structure::Interval(parse_interval(&text)?))
    } else {
        Ok(match parse_mapping(&text)? {
            ParsedMapping::Unweighted(m) => Structure::Finite(m),
            ParsedMapping::Weighted(w) => Structure::Weighted(w),
        })
    }
}

fn finite_part(structure: Structure, needed_for: &str) -> Result<WeightedMapping, CliError> {
    match structure {
        Structure::Finite(m) => Ok(WeightedMapping::uniform(m)),
        Structure::Weighted(w) => Ok(w),
        Structure::Interval(_) => Err(CliError::Input(format!(
            "{needed_for} needs a finite mapping file, not an interval mapping"
        ))),
    }
}

/// Element set syntax: `all`, or comma-separated 0-based indices.
fn parse_set(text: &str, n: usize, flag: &str) -> Result<Vec<usize>, CliError> {
    if text.trim() == "all" {
        return Ok((0..n).collect());
    }
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let v: usize = part
            .parse()
            .map_err(|_| CliError::Input(format!("{flag}: bad element `{part}`")))?;
        if v >= n {
            return Err(CliError::Input(format!(
                "{flag}: element {v} is out of range for a structure with {n} elements"
            )));
        }
        out.push(v);
    }
    Ok(out)
}

fn parse_battery(text: &str) -> Result<Vec<QfFormula>, CliError> {
    let mut formulas = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        formulas.push(parse_formula(line)?);
    }
    Ok(formulas)
}

fn write_output_file(
    path: &Path,
    content: &str,
    files: &mut Vec<(PathBuf, String)>,
) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    files.push((path.to_path_buf(), sha256_hex(content.as_bytes())));
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

// ---------------------------------------------------------------- density

#[derive(Args, Debug)]
pub struct DensityArgs {
    /// structure file: .imap for interval mappings, anything else finite
    #[arg(long)]
    pub structure: PathBuf,
    /// formula text (repeatable)
    #[arg(long = "formula", value_name = "FORMULA")]
    pub formula: Vec<String>,
    /// file with one formula per line (# comments allowed)
    #[arg(long = "formulas", value_name = "FILE")]
    pub formulas: Option<PathBuf>,
    /// exact evaluation (the default)
    #[arg(long, conflicts_with = "mc")]
    pub exact: bool,
    /// Monte-Carlo estimation with this many samples
    #[arg(long, value_name = "SAMPLES")]
    pub mc: Option<u64>,
    /// failure probability for the Hoeffding radius
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// also write the table to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn density(
    args: &DensityArgs,
    g: &GlobalOpts,
    manifest: &mut RunManifest,
) -> Result<CommandOutput, CliError> {
    let structure = load_structure(&args.structure, manifest)?;
    let mut formulas: Vec<QfFormula> = Vec::new();
    for text in &args.formula {
        formulas.push(parse_formula(text)?);
    }
    if let Some(file) = &args.formulas {
        let text = read_input(file, manifest)?;
        formulas.extend(parse_battery(&text)?);
    }
    if formulas.is_empty() {
        return Err(CliError::Input(
            "no formulas given; use --formula or --formulas".into(),
        ));
    }
    manifest.record_param("budget", g.budget);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# structure: {} ({})",
        args.structure.display(),
        structure.label()
    );
    if let Some(samples) = args.mc {
        manifest.record_param("method", "mc");
        manifest.record_param("samples", samples);
        manifest.record_param("delta", args.delta);
        let _ = writeln!(out, "formula\tarity\tdepth\tmethod\tvalue\tradius\tsamples");
        for phi in &formulas {
            let est = match &structure {
                Structure::Finite(m) => density_mc(phi, m, samples, args.delta, g.seed),
                Structure::Weighted(w) => {
                    density_mc(phi, &WeightedSampler::new(w), samples, args.delta, g.seed)
                }
                Structure::Interval(l) => density_mc(phi, l, samples, args.delta, g.seed),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\tmc\t{}\t{:.8}\t{}",
                phi,
                phi.arity(),
                phi.max_iterate(),
                g.fmt_value(&est.value),
                est.radius,
                est.samples
            );
        }
    } else {
        manifest.record_param("method", "exact");
        let _ = writeln!(out, "formula\tarity\tdepth\tmethod\tvalue");
        for phi in &formulas {
            let value = structure.density_budgeted(phi, g.budget)?;
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                phi,
                phi.arity(),
                phi.max_iterate(),
                structure.method().tag(),
                g.fmt_value(&value)
            );
        }
    }
    let mut files = Vec::new();
    if let Some(path) = &args.out {
        write_output_file(path, &out, &mut files)?;
    }
    Ok(CommandOutput { stdout: out, files })
}

// ---------------------------------------------------------------- approximate

#[derive(Args, Debug)]
pub struct ApproximateArgs {
    /// interval mapping file to approximate
    #[arg(long)]
    pub limit: PathBuf,
    /// free-variable budget
    #[arg(long)]
    pub p: usize,
    /// function-symbol (iteration depth) budget
    #[arg(long)]
    pub q: usize,
    /// sampling tolerance, rational or decimal
    #[arg(long)]
    pub eps: String,
    /// blow factor
    #[arg(long = "N")]
    pub blow: usize,
    /// where to write the blown mapping
    #[arg(long)]
    pub out: PathBuf,
    /// write the JSON-lines certificate here instead of stdout
    #[arg(long)]
    pub certificate: Option<PathBuf>,
}

pub fn cmd_approximate(
    args: &ApproximateArgs,
    g: &GlobalOpts,
    manifest: &mut RunManifest,
) -> Result<CommandOutput, CliError> {
    let text = read_input(&args.limit, manifest)?;
    let l = parse_interval(&text)?;
    let eps = parse_ratio(&args.eps).map_err(CliError::Input)?;
    let params = ApproxParams::new(args.p, args.q, eps, args.blow, g.seed)?;
    manifest.record_param("p", args.p);
    manifest.record_param("q", args.q);
    manifest.record_param("eps", &args.eps);
    manifest.record_param("N", args.blow);
    let outcome = approximate(&l, &params)?;
    let mapping_text = outcome.blown.structure.serialize();
    let mut files = Vec::new();
    write_output_file(&args.out, &mapping_text, &mut files)?;
    let bound = outcome
        .blown
        .bound
        .clone()
        .expect("pipeline outputs carry their bound");

    let mut cert = String::new();
    let lines = [
        serde_json::json!({
            "record": "params",
            "p": params.free_vars,
            "q": params.function_symbols,
            "eps": format_ratio(&params.epsilon),
            "blow_factor": params.blow_factor,
            "seed": params.seed,
            "samples": outcome.n_samples,
        }),
        serde_json::json!({
            "record": "hypothesis",
            "holds": outcome.preservation.holds,
            "kmax": outcome.preservation.kmax,
            "violations": outcome.preservation.violations.len(),
        }),
        serde_json::json!({
            "record": "structure",
            "sampled_elements": outcome.sampled.n(),
            "blown_elements": outcome.blown.n(),
        }),
        serde_json::json!({
            "record": "bound",
            "exact": format_ratio(&bound),
            "decimal": ratio_to_f64(&bound),
        }),
        serde_json::json!({
            "record": "output",
            "path": args.out.display().to_string(),
            "sha256": files[0].1,
        }),
    ];
    for line in &lines {
        let _ = writeln!(cert, "{line}");
    }
    let stdout = match &args.certificate {
        Some(path) => {
            write_output_file(path, &cert, &mut files)?;
            format!(
                "wrote {} ({} elements) and certificate {}\n",
                args.out.display(),
                outcome.blown.n(),
                path.display()
            )
        }
        None => cert,
    };
    Ok(CommandOutput { stdout, files })
}

// ---------------------------------------------------------------- check

#[derive(Args, Debug)]
#[group(id = "check_mode", required = true, multiple = false)]
pub struct CheckMode {
    /// finitary mass transport between --A and --B: sent mass vs received
    #[arg(long)]
    pub fmtp: bool,
    /// image monotonicity: does measure(A) >= measure(f(A))?
    #[arg(long = "image-monotone")]
    pub image_monotone: bool,
    /// measure preservation on the cyclic part up to period --q
    #[arg(long = "preserve-cycles")]
    pub preserve_cycles: bool,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// structure file (finite for --fmtp/--image-monotone, interval for --preserve-cycles)
    #[arg(long)]
    pub structure: PathBuf,
    #[command(flatten)]
    pub mode: CheckMode,
    /// element set: comma-separated 0-based indices, or `all`
    #[arg(long = "A", value_name = "SET")]
    pub set_a: Option<String>,
    /// element set: comma-separated 0-based indices, or `all`
    #[arg(long = "B", value_name = "SET")]
    pub set_b: Option<String>,
    /// maximum cycle length for --preserve-cycles
    #[arg(long)]
    pub q: Option<usize>,
}

pub fn check(
    args: &CheckArgs,
    g: &GlobalOpts,
    manifest: &mut RunManifest,
) -> Result<CommandOutput, CliError> {
    let structure = load_structure(&args.structure, manifest)?;
    if args.mode.preserve_cycles {
        let q = args.q.ok_or_else(|| {
            CliError::Input("--preserve-cycles needs --q (maximum cycle length)".into())
        })?;
        manifest.record_param("mode", "preserve-cycles");
        manifest.record_param("q", q);
        let l = match structure {
            Structure::Interval(l) => l,
            _ => {
                return Err(CliError::Input(
                    "--preserve-cycles needs an interval mapping (.imap) file".into(),
                ))
            }
        };
        let report = check_cycle_preservation(&l, q)?;
        let mut out = String::new();
        if report.holds {
            let _ = writeln!(
                out,
                "holds: the cyclic part up to period {q} is measure-preserved"
            );
        } else {
            for v in &report.violations {
                let _ = writeln!(
                    out,
                    "fails: piece {} (slope {}) meets recurrent points of period {}",
                    v.piece_index,
                    format_ratio(&v.slope),
                    v.cycle_length
                );
            }
        }
        return Ok(CommandOutput::text(out));
    }

    let w = finite_part(structure, "this check")?;
    let a_text = args
        .set_a
        .as_deref()
        .ok_or_else(|| CliError::Input("this check needs --A".into()))?;
    let a = parse_set(a_text, w.n(), "--A")?;
    manifest.record_param("A", a_text);
    let report = if args.mode.fmtp {
        let b_text = args
            .set_b
            .as_deref()
            .ok_or_else(|| CliError::Input("--fmtp needs --B".into()))?;
        let b = parse_set(b_text, w.n(), "--B")?;
        manifest.record_param("mode", "fmtp");
        manifest.record_param("B", b_text);
        w.check_fmtp(&a, &b)
    } else {
        manifest.record_param("mode", "image-monotone");
        w.check_image_monotone(&a)
    };
    let relation = if args.mode.fmtp {
        ("=", "!=")
    } else {
        (">=", "<")
    };
    let line = if report.holds {
        format!(
            "holds: {} {} {}\n",
            g.fmt_value(&report.sent),
            relation.0,
            g.fmt_value(&report.received)
        )
    } else {
        format!(
            "fails: {} {} {}\n",
            g.fmt_value(&report.sent),
            relation.1,
            g.fmt_value(&report.received)
        )
    };
    Ok(CommandOutput::text(line))
}

// ---------------------------------------------------------------- stats

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// finite mapping file
    #[arg(long)]
    pub structure: PathBuf,
    /// ball radius
    #[arg(long)]
    pub radius: usize,
    /// root element: also report the dispersion of its ball
    #[arg(long)]
    pub root: Option<usize>,
}

pub fn stats(
    args: &StatsArgs,
    g: &GlobalOpts,
    manifest: &mut RunManifest,
) -> Result<CommandOutput, CliError> {
    let structure = load_structure(&args.structure, manifest)?;
    let w = finite_part(structure, "local statistics")?;
    manifest.record_param("radius", args.radius);
    let hist = ball_histogram(&w, args.radius);
    let mut out = String::new();
    let _ = writeln!(out, "# ball types at radius {}", args.radius);
    let _ = writeln!(out, "type\tmass");
    for (code, mass) in &hist {
        let _ = writeln!(out, "{}\t{}", code, g.fmt_value(mass));
    }
    let _ = writeln!(
        out,
        "residuality\t{}",
        g.fmt_value(&residuality(&w, args.radius))
    );
    if let Some(root) = args.root {
        if root >= w.n() {
            return Err(CliError::Input(format!(
                "--root: element {root} is out of range for a structure with {} elements",
                w.n()
            )));
        }
        manifest.record_param("root", root);
        let _ = writeln!(
            out,
            "dispersion\t{}",
            g.fmt_value(&dispersion(&w, root, args.radius))
        );
    }
    Ok(CommandOutput::text(out))
}

// ---------------------------------------------------------------- converge

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    /// file with one formula per line
    #[arg(long)]
    pub formulas: PathBuf,
    /// structure files or quoted glob patterns, in sequence order
    #[arg(long = "structures", value_name = "PATH|GLOB", num_args = 1.., required = true)]
    pub structures: Vec<String>,
    /// how many trailing deviations the verdict looks at
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    /// tail deviations above this flag the formula as unsettled
    #[arg(long, default_value = "1/100")]
    pub threshold: String,
}

pub fn converge(
    args: &ConvergeArgs,
    g: &GlobalOpts,
    manifest: &mut RunManifest,
) -> Result<CommandOutput, CliError> {
    let battery_text = read_input(&args.formulas, manifest)?;
    let formulas = parse_battery(&battery_text)?;
    if formulas.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no formulas found",
            args.formulas.display()
        )));
    }
    let mut paths: Vec<PathBuf> = Vec::new();
    for pattern in &args.structures {
        if pattern.contains(['*', '?', '[']) {
            let before = paths.len();
            for entry in glob::glob(pattern)? {
                paths.push(entry?);
            }
            if paths.len() == before {
                return Err(CliError::Input(format!(
                    "{pattern}: no files match"
                )));
            }
        } else {
            paths.push(PathBuf::from(pattern));
        }
    }
    let mut structures = Vec::with_capacity(paths.len());
    let mut labels = Vec::with_capacity(paths.len());
    for path in &paths {
        structures.push(load_structure(path, manifest)?);
        labels.push(stem(path));
    }
    let threshold = parse_ratio(&args.threshold).map_err(CliError::Input)?;
    manifest.record_param("window", args.window);
    manifest.record_param("threshold", &args.threshold);
    manifest.record_param("sequence", labels.join(","));
    let report = converge_budgeted(&formulas, &structures, args.window, &threshold, g.budget)?;

    let mut out = String::new();
    let _ = writeln!(out, "# densities");
    let _ = writeln!(out, "formula\t{}", labels.join("\t"));
    for (i, name) in report.formulas.iter().enumerate() {
        let row: Vec<String> = report.densities[i].iter().map(|v| g.fmt_value(v)).collect();
        let _ = writeln!(out, "{}\t{}", name, row.join("\t"));
    }
    let _ = writeln!(out, "# deviations between successive structures");
    for (i, name) in report.formulas.iter().enumerate() {
        let row: Vec<String> = report.deltas[i].iter().map(|v| g.fmt_value(v)).collect();
        let _ = writeln!(out, "{}\t{}", name, row.join("\t"));
    }
    let _ = writeln!(
        out,
        "# tail verdict (window {}, threshold {})",
        report.window,
        g.fmt_value(&report.threshold)
    );
    let _ = writeln!(out, "formula\ttail_deviation\tsettled");
    for (i, name) in report.formulas.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            name,
            g.fmt_value(&report.tail_deviation[i]),
            if report.flagged[i] { "no" } else { "yes" }
        );
    }
    Ok(CommandOutput::text(out))
}
