//! Command-line surface of the `attrvar` binary.
//!
//! [`run`] parses arguments and returns the exit code together with the text
//! destined for standard output and standard error, so the binary is a thin
//! wrapper and the commands can be exercised in-process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::catalog;
use crate::error::{Error, Result};
use crate::estimators::CoefficientMode;
use crate::fixtures::{reference_tables, village_params};
use crate::montecarlo::{
    adjudicate_formula, run_simulation, synth_population, AdjudicationConfig, FormulaTag, NamedSpec, SimConfig,
    SimReport, SynthConfig, Verdict,
};
use crate::mse_theory::{comparison_report, mse_report, Dominance};
use crate::population::{load_csv, ParameterBundle, ParameterSet, Population};
use crate::tables::{efficiency_table, m_table, EfficiencyRow, MRow};

/// Exit code for every usage, configuration or data error.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "attrvar",
    version,
    about = "Variance estimators using a binary auxiliary attribute"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Population parameters of a `y,phi` CSV for a given sample size.
    Params {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Efficiency table for a parameter set, with deviations from the reference values.
    PreTable {
        #[command(flatten)]
        params: ParamSource,
        /// `6.1` (all families) or `6.2` (t_M over the registered delta, mu choices).
        #[arg(long, value_enum)]
        table: TableKind,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        gamma: i32,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Theoretical MSE of candidates against a reference estimator.
    Compare {
        #[command(flatten)]
        params: ParamSource,
        #[arg(long, default_value = "unbiased")]
        reference: String,
        /// Comma-separated estimator names.
        #[arg(long, value_delimiter = ',', required = true)]
        candidates: Vec<String>,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Replicated SRSWOR simulation of the chosen estimators.
    Simulate {
        #[command(flatten)]
        source: PopulationSource,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        replicates: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Comma-separated estimator names, or `all`.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        estimators: Vec<String>,
        /// How optimum constants are obtained; `sample` when omitted.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Worker threads; the report does not depend on this.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Decides between the two forms of a disputed MSE term by simulation.
    Adjudicate {
        /// Synthetic population config (JSON); the built-in default when omitted.
        #[arg(long)]
        synth: Option<PathBuf>,
        /// `eq37`, `r2` or `r3`.
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = AdjudicationConfig::default().replicates)]
        replicates: usize,
        #[arg(long, default_value_t = AdjudicationConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = AdjudicationConfig::default().n)]
        n: usize,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Writes a synthetic population as `y,phi` CSV.
    Synth {
        /// Synthetic population config (JSON); the built-in default when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    #[value(name = "markdown-table", alias = "markdown")]
    MarkdownTable,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableKind {
    #[value(name = "6.1", alias = "efficiency")]
    Efficiency,
    #[value(name = "6.2", alias = "m")]
    MFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Theoretical,
    Sample,
}

impl From<ModeArg> for CoefficientMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Theoretical => CoefficientMode::TheoreticalOptimum,
            ModeArg::Sample => CoefficientMode::SampleEstimated,
        }
    }
}

/// A parameter set from a JSON file, the built-in bundle, or individual flags.
#[derive(Debug, Clone, Args)]
pub struct ParamSource {
    /// Parameter-set JSON file.
    #[arg(long, conflicts_with = "builtin")]
    pub params: Option<PathBuf>,
    /// Use the built-in village-circle bundle.
    #[arg(long)]
    pub builtin: bool,
    #[arg(long = "N")]
    pub population_size: Option<usize>,
    #[arg(long = "n")]
    pub sample_size: Option<usize>,
    #[arg(long = "S_y2")]
    pub s_y2: Option<f64>,
    #[arg(long = "S_phi2")]
    pub s_phi2: Option<f64>,
    #[arg(long = "P")]
    pub p: Option<f64>,
    #[arg(long = "Ybar", allow_hyphen_values = true)]
    pub y_mean: Option<f64>,
    #[arg(long = "C_y", allow_hyphen_values = true)]
    pub c_y: Option<f64>,
    #[arg(long = "C_p")]
    pub c_p: Option<f64>,
    #[arg(long = "rho_pb", allow_hyphen_values = true)]
    pub rho_pb: Option<f64>,
    #[arg(long = "beta2_phi")]
    pub beta2_phi: Option<f64>,
    #[arg(long = "k_pb", allow_hyphen_values = true)]
    pub k_pb: Option<f64>,
    #[arg(long = "lambda40")]
    pub lambda40: Option<f64>,
    #[arg(long = "lambda04")]
    pub lambda04: Option<f64>,
    #[arg(long = "lambda22")]
    pub lambda22: Option<f64>,
}

impl ParamSource {
    fn any_inline(&self) -> bool {
        self.population_size.is_some()
            || self.sample_size.is_some()
            || [
                self.s_y2,
                self.s_phi2,
                self.p,
                self.y_mean,
                self.c_y,
                self.c_p,
                self.rho_pb,
                self.beta2_phi,
                self.k_pb,
                self.lambda40,
                self.lambda04,
                self.lambda22,
            ]
            .iter()
            .any(Option::is_some)
    }

    /// Resolves the parameter set. With a file or the built-in bundle, an
    /// inline `--n` replaces the sample size; other inline flags are refused.
    pub fn resolve(&self) -> Result<ParameterSet> {
        let base = match (&self.params, self.builtin) {
            (Some(path), _) => Some(read_json::<ParameterSet>(path)?),
            (None, true) => Some(village_params()),
            (None, false) => None,
        };
        if let Some(base) = base {
            let only_n = ParamSource {
                sample_size: None,
                ..self.clone()
            };
            if only_n.any_inline() {
                return Err(Error::InvalidConfig(
                    "inline parameter flags other than --n cannot be combined with --params or --builtin".into(),
                ));
            }
            return match self.sample_size {
                Some(n) => base.with_sample_size(n),
                None => Ok(base),
            };
        }
        let fields: [(&str, Option<f64>); 12] = [
            ("S_y2", self.s_y2),
            ("S_phi2", self.s_phi2),
            ("P", self.p),
            ("Ybar", self.y_mean),
            ("C_y", self.c_y),
            ("C_p", self.c_p),
            ("rho_pb", self.rho_pb),
            ("beta2_phi", self.beta2_phi),
            ("k_pb", self.k_pb),
            ("lambda40", self.lambda40),
            ("lambda04", self.lambda04),
            ("lambda22", self.lambda22),
        ];
        let mut missing: Vec<&str> = Vec::new();
        if self.population_size.is_none() {
            missing.push("N");
        }
        if self.sample_size.is_none() {
            missing.push("n");
        }
        missing.extend(fields.iter().filter(|(_, v)| v.is_none()).map(|(k, _)| *k));
        if !missing.is_empty() {
            return Err(Error::InvalidParameters(format!(
                "missing {} (supply --params <json>, --builtin or every flag)",
                missing.join(", ")
            )));
        }
        let v = |i: usize| fields[i].1.expect("checked above");
        ParameterSet::from_bundle(ParameterBundle {
            population_size: self.population_size.expect("checked above"),
            sample_size: self.sample_size.expect("checked above"),
            s_y2: v(0),
            s_phi2: v(1),
            p: v(2),
            y_mean: v(3),
            c_y: v(4),
            c_p: v(5),
            rho_pb: v(6),
            beta2_phi: v(7),
            k_pb: v(8),
            lambda40: v(9),
            lambda04: v(10),
            lambda22: v(11),
        })
    }
}

/// A population read from CSV or generated from a synthetic config.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct PopulationSource {
    /// `y,phi` CSV file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Synthetic population config (JSON); `default` for the built-in config.
    #[arg(long)]
    pub synth: Option<PathBuf>,
}

impl PopulationSource {
    pub fn load(&self) -> Result<Population> {
        match (&self.data, &self.synth) {
            (Some(path), _) => load_csv(path),
            (None, Some(path)) => synth_population(&synth_config(Some(path))?),
            (None, None) => Err(Error::InvalidConfig("one of --data or --synth is required".into())),
        }
    }
}

fn synth_config(path: Option<&Path>) -> Result<SynthConfig> {
    match path {
        None => Ok(SynthConfig::default()),
        Some(p) if p.as_os_str() == "default" => Ok(SynthConfig::default()),
        Some(p) => read_json(p),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

/// Outcome of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_ERROR,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match execute(&cli.command) {
        Ok(stdout) => Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

/// Executes a parsed command, returning its standard output.
pub fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Params { data, n, format } => {
            let pop = load_csv(data)?;
            let params = ParameterSet::from_population(&pop, *n)?;
            Ok(render_params(&params, *format))
        }
        Command::PreTable {
            params,
            table,
            gamma,
            format,
        } => {
            if *gamma != 1 && *gamma != -1 {
                return Err(Error::InvalidGamma(*gamma));
            }
            let params = params.resolve()?;
            let refs = reference_tables();
            match table {
                TableKind::Efficiency => Ok(render_efficiency(&efficiency_table(&params, &refs)?, *format)),
                TableKind::MFamily => Ok(render_m_table(&m_table(&params, *gamma, &refs)?, *format)),
            }
        }
        Command::Compare {
            params,
            reference,
            candidates,
            format,
        } => {
            let params = params.resolve()?;
            let mode = CoefficientMode::TheoreticalOptimum;
            let reference_spec = catalog::parse_estimator(reference, &params, mode)?;
            let specs = candidates
                .iter()
                .map(|c| catalog::parse_estimator(c, &params, mode))
                .collect::<Result<Vec<_>>>()?;
            let report = comparison_report(&params, &reference_spec, &specs)?;
            let rows: Vec<CompareRow> = candidates
                .iter()
                .zip(&report.pairs)
                .map(|(name, pair)| CompareRow {
                    estimator: name.clone(),
                    reference: reference.clone(),
                    mse: pair.mse_a,
                    reference_mse: pair.mse_b,
                    difference: pair.difference,
                    pre: mse_report(&pair.spec_a, &params).map(|r| r.pre).unwrap_or(f64::NAN),
                    dominant: match pair.dominant {
                        Dominance::A => name.clone(),
                        Dominance::B => reference.clone(),
                        Dominance::Tie => "tie".into(),
                    },
                })
                .collect();
            Ok(render_compare(&rows, *format))
        }
        Command::Simulate {
            source,
            n,
            replicates,
            seed,
            estimators,
            mode,
            threads,
            format,
        } => {
            let pop = source.load()?;
            let params = ParameterSet::from_population(&pop, *n)?;
            let names = expand_estimators(estimators);
            let parse_mode = mode.map_or(CoefficientMode::SampleEstimated, Into::into);
            let specs = names
                .iter()
                .map(|name| {
                    catalog::parse_estimator(name, &params, parse_mode).map(|spec| NamedSpec::new(name.clone(), spec))
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = SimConfig {
                replicates: *replicates,
                n: *n,
                seed: *seed,
                specs,
                coefficient_mode_override: mode.map(Into::into),
            };
            let report = match threads {
                Some(t) => rayon::ThreadPoolBuilder::new()
                    .num_threads(*t)
                    .build()
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?
                    .install(|| run_simulation(&pop, &cfg))?,
                None => run_simulation(&pop, &cfg)?,
            };
            Ok(render_sim(&report, *format))
        }
        Command::Adjudicate {
            synth,
            formula,
            replicates,
            seed,
            n,
            format,
        } => {
            let tag: FormulaTag = formula.parse()?;
            let pop = synth_population(&synth_config(synth.as_deref())?)?;
            let cfg = AdjudicationConfig {
                replicates: *replicates,
                n: *n,
                seed: *seed,
            };
            let verdict = adjudicate_formula(&pop, &cfg, tag)?;
            Ok(render_verdict(formula, &verdict, *format))
        }
        Command::Synth { config, out } => {
            let pop = synth_population(&synth_config(config.as_deref())?)?;
            let text = population_csv(&pop);
            match out {
                Some(path) => {
                    std::fs::write(path, text).map_err(|source| Error::Io {
                        path: path.clone(),
                        source,
                    })?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
    }
}

/// Expands `all` into every efficiency-table member plus `m`.
fn expand_estimators(names: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    for name in names {
        if name.trim() == "all" {
            out.extend(catalog::efficiency_table_names());
            out.push("m".into());
        } else {
            out.push(name.trim().to_string());
        }
    }
    out
}

fn population_csv(pop: &Population) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["y", "phi"]).expect("write to memory");
    for (y, phi) in pop.y().iter().zip(pop.phi()) {
        writer
            .write_record([y.to_string(), phi.to_string()])
            .expect("write to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("csv output is UTF-8")
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn csv_text<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("write to memory");
    for row in rows {
        writer.write_record(row).expect("write to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("csv output is UTF-8")
}

fn markdown(header: &[&str], align_right: &[bool], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n|", header.join(" | "));
    for &right in align_right {
        out.push_str(if right { "---:|" } else { "---|" });
    }
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out
}

fn param_value(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.5e}")
    } else {
        format!("{v:.5}")
    }
}

/// Two decimals with an explicit sign; values that round to zero print as `+0.00`.
fn signed_cell(v: f64) -> String {
    let v = if (v * 100.0).round() == 0.0 { 0.0 } else { v };
    format!("{v:+.2}")
}

fn pre_cell(v: f64) -> String {
    format!("{v:.2}")
}

fn opt_cell(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map_or_else(|| "-".into(), f)
}

fn render_params(p: &ParameterSet, format: OutputFormat) -> String {
    if format == OutputFormat::Json {
        return json(p);
    }
    let rows: Vec<(&str, &str, String)> = vec![
        ("N", "N", p.population_size.to_string()),
        ("n", "n", p.sample_size.to_string()),
        ("f", "f", param_value(p.f)),
        ("g", "g", param_value(p.g)),
        ("Ybar", "Ȳ", param_value(p.y_mean)),
        ("P", "P", param_value(p.p)),
        ("S_y2", "S_y²", param_value(p.s_y2)),
        ("S_phi2", "S_φ²", param_value(p.s_phi2)),
        ("C_y", "C_y", param_value(p.c_y)),
        ("C_p", "C_p", param_value(p.c_p)),
        ("rho_pb", "ρ_pb", param_value(p.rho_pb)),
        ("beta2_phi", "β₂φ", param_value(p.beta2_phi)),
        ("k_pb", "k_pb", param_value(p.k_pb)),
        ("lambda22", "λ₂₂", param_value(p.lambda22)),
        ("lambda40", "λ₄₀", param_value(p.lambda40)),
        ("lambda04", "λ₀₄", param_value(p.lambda04)),
    ];
    match format {
        OutputFormat::Csv => csv_text(
            &["key", "symbol", "value"],
            rows.into_iter().map(|(k, s, v)| [k.to_string(), s.to_string(), v]),
        ),
        _ => markdown(
            &["key", "symbol", "value"],
            &[false, false, true],
            &rows
                .into_iter()
                .map(|(k, s, v)| vec![k.to_string(), s.to_string(), v])
                .collect::<Vec<_>>(),
        ),
    }
}

#[derive(Serialize)]
struct TableDocument<'a, R> {
    table: &'a str,
    rows: &'a [R],
}

fn render_efficiency(rows: &[EfficiencyRow], format: OutputFormat) -> String {
    let cells = |r: &EfficiencyRow| {
        vec![
            r.estimator.clone(),
            pre_cell(r.pre),
            opt_cell(r.reference, pre_cell),
            opt_cell(r.deviation, signed_cell),
            if r.flagged { "DEVIATES".into() } else { String::new() },
        ]
    };
    match format {
        OutputFormat::Json => json(&TableDocument { table: "6.1", rows }),
        OutputFormat::Csv => csv_text(
            &["estimator", "pre", "reference", "deviation", "flagged"],
            rows.iter().map(|r| {
                let mut c = cells(r);
                c[4] = r.flagged.to_string();
                c
            }),
        ),
        OutputFormat::MarkdownTable => {
            let body: Vec<_> = rows.iter().map(cells).collect();
            let mut out = markdown(
                &["estimator", "PRE", "reference", "deviation", "flag"],
                &[false, true, true, true, false],
                &body,
            );
            let flagged: Vec<&str> = rows
                .iter()
                .filter(|r| r.flagged)
                .map(|r| r.estimator.as_str())
                .collect();
            if !flagged.is_empty() {
                let _ = writeln!(
                    out,
                    "\nRows deviating from the reference by more than {:.2}: {}",
                    crate::tables::EFFICIENCY_FLAG_THRESHOLD,
                    flagged.join(", ")
                );
            }
            out
        }
    }
}

fn render_m_table(rows: &[MRow], format: OutputFormat) -> String {
    let cells = |r: &MRow| {
        vec![
            r.delta.to_string(),
            r.mu.to_string(),
            r.gamma.to_string(),
            pre_cell(r.pre),
            opt_cell(r.reference, pre_cell),
            opt_cell(r.relative_deviation, |d| format!("{:+.2}%", 100.0 * d)),
            if r.flagged { "DEVIATES".into() } else { String::new() },
        ]
    };
    match format {
        OutputFormat::Json => json(&TableDocument { table: "6.2", rows }),
        OutputFormat::Csv => csv_text(
            &[
                "delta",
                "mu",
                "gamma",
                "pre",
                "reference",
                "relative_deviation",
                "flagged",
            ],
            rows.iter().map(|r| {
                let mut c = cells(r);
                c[5] = opt_cell(r.relative_deviation, |d| d.to_string());
                c[6] = r.flagged.to_string();
                c
            }),
        ),
        OutputFormat::MarkdownTable => {
            let body: Vec<_> = rows.iter().map(cells).collect();
            let mut out = markdown(
                &["delta", "mu", "gamma", "PRE", "reference", "deviation", "flag"],
                &[false, false, true, true, true, true, false],
                &body,
            );
            if rows.iter().any(|r| r.flagged) {
                let _ = writeln!(
                    out,
                    "\nRows marked DEVIATES differ from the reference by more than {:.0}%.",
                    100.0 * crate::tables::M_FLAG_THRESHOLD
                );
            }
            out
        }
    }
}

#[derive(Serialize)]
struct CompareRow {
    estimator: String,
    reference: String,
    mse: f64,
    reference_mse: f64,
    difference: f64,
    pre: f64,
    dominant: String,
}

fn render_compare(rows: &[CompareRow], format: OutputFormat) -> String {
    let cells = |r: &CompareRow| {
        vec![
            r.estimator.clone(),
            r.reference.clone(),
            format!("{:.6e}", r.mse),
            format!("{:.6e}", r.reference_mse),
            format!("{:.6e}", r.difference),
            pre_cell(r.pre),
            r.dominant.clone(),
        ]
    };
    let header = [
        "estimator",
        "reference",
        "mse",
        "reference_mse",
        "difference",
        "pre",
        "dominant",
    ];
    match format {
        OutputFormat::Json => json(rows),
        OutputFormat::Csv => csv_text(&header, rows.iter().map(cells)),
        OutputFormat::MarkdownTable => markdown(
            &header,
            &[false, false, true, true, true, true, false],
            &rows.iter().map(cells).collect::<Vec<_>>(),
        ),
    }
}

fn render_sim(report: &SimReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => json(report),
        OutputFormat::MarkdownTable => report.to_markdown(),
        OutputFormat::Csv => {
            let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
            csv_text(
                &[
                    "estimator",
                    "empirical_mse",
                    "mse_std_error",
                    "empirical_bias",
                    "bias_std_error",
                    "pre_empirical",
                    "theoretical_mse",
                    "theoretical_pre",
                    "relative_gap",
                    "used_replicates",
                    "failed_replicates",
                    "evaluated_checksum",
                ],
                report.estimators.iter().map(|e| {
                    vec![
                        e.name.clone(),
                        opt(e.empirical_mse),
                        opt(e.mse_std_error),
                        opt(e.empirical_bias),
                        opt(e.bias_std_error),
                        opt(e.pre_empirical),
                        opt(e.theoretical_mse),
                        opt(e.theoretical_pre),
                        opt(e.relative_gap),
                        e.used_replicates.to_string(),
                        e.failed_replicates.to_string(),
                        e.evaluated_checksum.clone(),
                    ]
                }),
            )
        }
    }
}

#[derive(Serialize)]
struct VerdictDocument<'a> {
    verdict: &'a str,
    #[serde(flatten)]
    detail: &'a Verdict,
}

fn render_verdict(formula: &str, v: &Verdict, format: OutputFormat) -> String {
    let doc = VerdictDocument {
        verdict: v.label(),
        detail: v,
    };
    match format {
        OutputFormat::Json => json(&doc),
        OutputFormat::Csv => csv_text(
            &[
                "formula",
                "theoretical_corrected",
                "theoretical_uncorrected",
                "empirical_mse",
                "mse_std_error",
                "gap_ratio",
                "verdict",
            ],
            [vec![
                formula.to_string(),
                v.theoretical_a.to_string(),
                v.theoretical_b.to_string(),
                v.empirical_mse.to_string(),
                v.mse_std_error.map_or_else(String::new, |x| x.to_string()),
                v.gap_ratio.to_string(),
                v.label().to_string(),
            ]],
        ),
        OutputFormat::MarkdownTable => {
            let rows = vec![
                vec![
                    "corrected".into(),
                    format!("{:.6e}", v.theoretical_a),
                    format!("{:.4}", v.gap_a),
                ],
                vec![
                    "uncorrected".into(),
                    format!("{:.6e}", v.theoretical_b),
                    format!("{:.4}", v.gap_b),
                ],
            ];
            let mut out = markdown(
                &["form", "theoretical MSE", "relative gap"],
                &[false, true, true],
                &rows,
            );
            let _ = writeln!(
                out,
                "\nformula: {formula}\nempirical MSE: {:.6e} (s.e. {})\nfailed replicates: {}\ngap ratio: {:.2}\nverdict: {}",
                v.empirical_mse,
                v.mse_std_error.map_or_else(|| "-".into(), |x| format!("{x:.2e}")),
                v.failed_replicates,
                v.gap_ratio,
                v.label()
            );
            out
        }
    }
}
