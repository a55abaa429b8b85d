//! `peerfx`: simulate match panels, describe exposure, estimate peer effects
//! and render reports.

mod config;
mod manifest;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Args, Command, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{json, Value};

use peerfx_core::design::{describe_exposure, Behavior, DesignOptions, DrawPolicy, ExposureMask, Scheme};
use peerfx_core::panel::{load_match_rows, write_match_rows, ColumnSchema};
use peerfx_core::pipeline::{estimate, EstimateOptions, EstimateReport};
use peerfx_core::report::{
    effects_to_csv, priority_ranking, ranking_to_text, render_first_stage_table, render_regression_table,
    MarginalEffect, TableFormat,
};
use peerfx_core::simulator::{simulate, SimConfig, SimMode};
use peerfx_core::within::Outcome;
use peerfx_core::{Error, ErrorClass, VcovMode};

use config::{expand_config, ConfigFileError};
use manifest::Manifest;

const EXIT_USAGE: u8 = 2;
const EXIT_SCHEMA: u8 = 3;
const EXIT_VALIDATION: u8 = 4;
const EXIT_CONFIG: u8 = 5;
const EXIT_NUMERICAL: u8 = 6;
const EXIT_EMPTY_SAMPLE: u8 = 7;
const EXIT_IO: u8 = 8;

const THREADS_ENV: &str = "PEERFX_THREADS";

#[derive(Parser, Debug)]
#[command(name = "peerfx", version, about = "Leave-one-out IV estimation of peer effects in match panels")]
#[command(after_help = "Exit codes: 0 ok, 2 usage, 3 schema, 4 validation, 5 configuration, 6 numerical, 7 empty sample, 8 i/o.\n\
Every subcommand accepts --config FILE with `key = value` lines named after its flags; flags on the command line win.")]
struct Cli {
    /// Worker threads (default: PEERFX_THREADS, else all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a panel with known ground truth.
    Simulate(SimulateArgs),
    /// Tabulate exposure probabilities by context and result.
    Describe(DescribeArgs),
    /// Run the full estimation pipeline.
    Estimate(EstimateArgs),
    /// Render tables, effect CSVs and priority rankings from estimate output.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Output directory (panel.csv, truth.json, manifest.json).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Match panel CSV.
    #[arg(long)]
    input: PathBuf,
    /// JSON file overriding column names and delimiter.
    #[arg(long)]
    columns: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct MaskArgs {
    /// Read the exposure mask from a simulator truth.json.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Share of toxic statements missing from the record.
    #[arg(long)]
    missingness: Option<f64>,
    #[arg(long)]
    audibility_opponents: Option<f64>,
    #[arg(long)]
    audibility_teammates: Option<f64>,
    #[arg(long, default_value_t = 0)]
    mask_seed: u64,
}

#[derive(Args, Debug)]
struct DescribeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    mask: MaskArgs,
    /// opp_team | party_split | pooled
    #[arg(long, default_value = "opp_team")]
    scheme: String,
    /// exclude | as_loss
    #[arg(long, default_value = "exclude")]
    draws: String,
    /// text | csv | json
    #[arg(long, default_value = "text")]
    format: String,
    /// Also write exposure.{txt,csv,json} and a manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    mask: MaskArgs,
    /// opp_team | party_split | pooled
    #[arg(long, default_value = "opp_team")]
    scheme: String,
    /// classical | hc1 | cluster_player
    #[arg(long, default_value = "hc1")]
    vcov: String,
    /// exclude | as_loss
    #[arg(long, default_value = "exclude")]
    draws: String,
    /// binary | intensity
    #[arg(long, default_value = "binary")]
    behavior: String,
    /// engagement | propagation | both
    #[arg(long, default_value = "both")]
    outcome: String,
    /// Add context × win interactions.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    interactions: bool,
    /// Also fit the naive OLS baseline.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    ols_baseline: bool,
    /// First-stage F below which a weak-instrument warning is raised.
    #[arg(long, default_value_t = 10.0)]
    weak_f: f64,
    /// Output directory (estimate.json, table.txt, first_stage.csv, effects.csv, manifest.json).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// estimate.json files; columns appear in the given order.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// text | json | csv
    #[arg(long, default_value = "text")]
    format: String,
    /// Rank harms for this objective: engagement | propagation.
    #[arg(long)]
    rank: Option<String>,
    /// Comma-separated contexts to keep in effects and rankings.
    #[arg(long, value_delimiter = ',')]
    contexts: Option<Vec<String>>,
    /// Also write report files and a manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Io(String),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e.class() {
                ErrorClass::Schema => EXIT_SCHEMA,
                ErrorClass::Validation => EXIT_VALIDATION,
                ErrorClass::Config => EXIT_CONFIG,
                ErrorClass::Numerical => EXIT_NUMERICAL,
                ErrorClass::EmptySample => EXIT_EMPTY_SAMPLE,
                ErrorClass::Io => EXIT_IO,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Io(m) => format!("i/o error: {m}"),
            CliError::Usage(m) => format!("usage error: {m}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn sim_field_names() -> Vec<String> {
    match serde_json::to_value(SimConfig::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn command() -> Command {
    let sim_args: Vec<Arg> = sim_field_names()
        .into_iter()
        .map(|f| {
            let long: &'static str = Box::leak(f.replace('_', "-").into_boxed_str());
            let help = match f.as_str() {
                "mode" => "engagement_confounded | propagation_reflection | two_player_reflection",
                "beta" => "Effect size: a number, or JSON {\"opponents\":[loss,win],\"diff_party\":[..],\"same_party\":[..]}",
                _ => "Simulator parameter (default depends on --mode)",
            };
            Arg::new(long).long(long).value_name("VALUE").help(help)
        })
        .collect();
    Cli::command()
        .mut_subcommand("simulate", |c| c.args(sim_args))
        .mut_subcommands(|c| c.args_override_self(true))
}

/// Builds the simulator configuration from the mode defaults plus any
/// provided fields.
fn sim_config(m: &ArgMatches) -> CliResult<SimConfig> {
    let mode = match m.get_one::<String>("mode") {
        Some(raw) => SimMode::parse(raw)?,
        None => SimMode::default(),
    };
    let Value::Object(mut obj) = serde_json::to_value(SimConfig::for_mode(mode)).map_err(Error::from)? else {
        unreachable!("SimConfig serializes to an object")
    };
    for field in sim_field_names() {
        if field == "mode" {
            continue;
        }
        let Some(raw) = m.get_one::<String>(&field.replace('_', "-")) else { continue };
        let value = match serde_json::from_str::<Value>(raw) {
            Ok(Value::Number(n)) if field == "beta" => {
                let b = n.as_f64().unwrap_or(f64::NAN);
                json!({"opponents": [b, b], "diff_party": [b, b], "same_party": [b, b]})
            }
            Ok(v) => v,
            Err(_) => Value::String(raw.clone()),
        };
        obj.insert(field, value);
    }
    serde_json::from_value(Value::Object(obj))
        .map_err(|e| CliError::Core(Error::Config(format!("invalid simulator configuration: {e}"))))
}

fn configure_threads(flag: Option<usize>) -> CliResult<usize> {
    let from_env = std::env::var(THREADS_ENV).ok();
    let threads = match (flag, from_env) {
        (Some(n), _) => n,
        (None, Some(v)) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?,
        (None, None) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    Ok(rayon::current_num_threads())
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create `{}`: {e}", dir.display())))
}

fn ensure_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io(format!("input `{}` does not exist or is not a file", path.display())))
    }
}

fn write_text(path: &Path, text: &str, manifest: &mut Manifest) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write `{}`: {e}", path.display())))?;
    manifest.add_output(path)?;
    Ok(())
}

fn load_panel(input: &InputArgs, manifest: &mut Manifest) -> CliResult<peerfx_core::MatchPanel> {
    ensure_file(&input.input)?;
    let schema = match &input.columns {
        Some(p) => {
            ensure_file(p)?;
            manifest.add_input(p)?;
            serde_json::from_reader(BufReader::new(File::open(p)?))
                .map_err(|e| CliError::Core(Error::Config(format!("invalid column file: {e}"))))?
        }
        None => ColumnSchema::default(),
    };
    manifest.add_input(&input.input)?;
    Ok(load_match_rows(BufReader::new(File::open(&input.input)?), &schema)?)
}

fn resolve_mask(args: &MaskArgs, manifest: &mut Manifest) -> CliResult<Option<ExposureMask>> {
    let mut mask = match &args.truth {
        Some(p) => {
            ensure_file(p)?;
            manifest.add_input(p)?;
            let v: Value = serde_json::from_reader(BufReader::new(File::open(p)?)).map_err(Error::from)?;
            match v.get("mask") {
                Some(Value::Null) | None => None,
                Some(m) => Some(
                    serde_json::from_value::<ExposureMask>(m.clone())
                        .map_err(|e| CliError::Core(Error::Config(format!("invalid mask in truth file: {e}"))))?,
                ),
            }
        }
        None => None,
    };
    let overridden = args.missingness.is_some() || args.audibility_opponents.is_some() || args.audibility_teammates.is_some();
    if overridden {
        let base = mask.unwrap_or(ExposureMask {
            seed: args.mask_seed,
            missingness: 0.0,
            audibility_opponents: 1.0,
            audibility_teammates: 1.0,
        });
        mask = Some(ExposureMask {
            seed: if args.truth.is_some() { base.seed } else { args.mask_seed },
            missingness: args.missingness.unwrap_or(base.missingness),
            audibility_opponents: args.audibility_opponents.unwrap_or(base.audibility_opponents),
            audibility_teammates: args.audibility_teammates.unwrap_or(base.audibility_teammates),
        });
    }
    if let Some(m) = &mask {
        m.validate()?;
    }
    Ok(mask)
}

fn parse_outcomes(raw: &str) -> CliResult<Vec<Outcome>> {
    if raw.eq_ignore_ascii_case("both") {
        Ok(vec![Outcome::Engagement, Outcome::Propagation])
    } else {
        Ok(vec![Outcome::parse(raw)?])
    }
}

fn cmd_simulate(args: &SimulateArgs, m: &ArgMatches) -> CliResult<()> {
    let cfg = sim_config(m)?;
    let (panel, truth) = simulate(&cfg)?;
    ensure_dir(&args.out)?;
    let mut manifest = Manifest::new("simulate", json!({ "simulator": cfg }));

    let panel_path = args.out.join("panel.csv");
    let mut w = BufWriter::new(File::create(&panel_path)?);
    write_match_rows(&panel, &mut w, &ColumnSchema::default())?;
    w.flush()?;
    drop(w);
    manifest.add_output(&panel_path)?;

    let mut sidecar = serde_json::to_string_pretty(&truth.sidecar()).map_err(Error::from)?;
    sidecar.push('\n');
    write_text(&args.out.join("truth.json"), &sidecar, &mut manifest)?;
    manifest.write(&args.out)?;
    println!(
        "simulated {} rows, {} matches, {} players (toxic rate {:.4}) into {}",
        panel.n_rows(),
        panel.n_matches(),
        panel.n_players(),
        truth.realized_toxic_rate,
        args.out.display()
    );
    Ok(())
}

fn cmd_describe(args: &DescribeArgs) -> CliResult<()> {
    let scheme = Scheme::parse(&args.scheme)?;
    let draws = DrawPolicy::parse(&args.draws)?;
    let format = TableFormat::parse(&args.format)?;
    let mut manifest = Manifest::new("describe", Value::Null);
    let mask = resolve_mask(&args.mask, &mut manifest)?;
    let panel = load_panel(&args.input, &mut manifest)?;
    let table = describe_exposure(&panel, scheme, mask.as_ref(), draws)?;
    let (text, ext) = match format {
        TableFormat::Text => (table.to_text(), "txt"),
        TableFormat::Csv => (table.to_csv(), "csv"),
        TableFormat::Json => (serde_json::to_string_pretty(&table).map_err(Error::from)? + "\n", "json"),
    };
    if format != TableFormat::Text {
        for w in &table.warnings {
            eprintln!("warning: {w}");
        }
    }
    print!("{text}");
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        manifest.config = json!({ "scheme": scheme, "draws": draws, "mask": mask, "format": ext });
        write_text(&out.join(format!("exposure.{ext}")), &text, &mut manifest)?;
        manifest.write(out)?;
    }
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs) -> CliResult<()> {
    let mut design = DesignOptions::new(Scheme::parse(&args.scheme)?);
    design.draw_policy = DrawPolicy::parse(&args.draws)?;
    design.behavior = Behavior::parse(&args.behavior)?;
    design.interactions = args.interactions;
    let mut opts = EstimateOptions::new(design);
    opts.vcov = VcovMode::parse(&args.vcov)?;
    opts.weak_f_threshold = args.weak_f;
    opts.ols_baseline = args.ols_baseline;
    let outcomes = parse_outcomes(&args.outcome)?;

    ensure_dir(&args.out)?;
    let mut manifest = Manifest::new("estimate", Value::Null);
    opts.design.mask = resolve_mask(&args.mask, &mut manifest)?;
    let panel = load_panel(&args.input, &mut manifest)?;
    manifest.config = json!({ "options": opts, "outcomes": outcomes });

    let report = estimate(&panel, &opts, &outcomes)?;
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
    write_text(&args.out.join("estimate.json"), &json, &mut manifest)?;

    let columns = report_columns(&[(String::new(), &report)]);
    let refs: Vec<(&str, &_)> = columns.iter().map(|(l, r)| (l.as_str(), *r)).collect();
    let table = render_regression_table(&refs, TableFormat::Text);
    write_text(&args.out.join("table.txt"), &table, &mut manifest)?;
    let iv_only: Vec<(&str, &_)> = refs.iter().filter(|(_, r)| !r.first_stage.is_empty()).copied().collect();
    write_text(&args.out.join("first_stage.csv"), &render_first_stage_table(&iv_only), &mut manifest)?;
    let effects = collect_effects(std::slice::from_ref(&report), None);
    if !effects.is_empty() {
        write_text(&args.out.join("effects.csv"), &effects_to_csv(&effects), &mut manifest)?;
    }
    manifest.write(&args.out)?;

    for fit in &report.fits {
        for w in &fit.tsls.warnings {
            eprintln!("warning [{}]: {w}", fit.outcome.label());
        }
    }
    print!("{table}");
    Ok(())
}

/// Table columns for each fit: 2SLS first, then the OLS baseline.
fn report_columns<'a>(reports: &[(String, &'a EstimateReport)]) -> Vec<(String, &'a peerfx_core::EstimationResult)> {
    let mut cols = Vec::new();
    for (prefix, rep) in reports {
        for fit in &rep.fits {
            let label = |est: &str| {
                if prefix.is_empty() {
                    format!("{} {est}", fit.outcome.label())
                } else {
                    format!("{prefix} {} {est}", fit.outcome.label())
                }
            };
            cols.push((label("2SLS"), &fit.tsls));
            if let Some(o) = &fit.ols {
                cols.push((label("OLS"), o));
            }
        }
    }
    cols
}

fn collect_effects(reports: &[EstimateReport], keep: Option<&[String]>) -> Vec<MarginalEffect> {
    let mut out: Vec<MarginalEffect> = Vec::new();
    for rep in reports {
        for fit in &rep.fits {
            for e in fit.marginal_effects.iter().flatten() {
                let wanted = keep.is_none_or(|k| k.iter().any(|c| c == &e.context));
                let seen = out.iter().any(|o| o.context == e.context && o.outcome == e.outcome);
                if wanted && !seen {
                    out.push(e.clone());
                }
            }
        }
    }
    out
}

fn cmd_report(args: &ReportArgs) -> CliResult<()> {
    let format = TableFormat::parse(&args.format)?;
    let mut manifest = Manifest::new("report", Value::Null);
    let mut reports = Vec::with_capacity(args.input.len());
    for p in &args.input {
        ensure_file(p)?;
        manifest.add_input(p)?;
        let rep: EstimateReport = serde_json::from_reader(BufReader::new(File::open(p)?))
            .map_err(|e| CliError::Core(Error::Schema(format!("`{}` is not estimate output: {e}", p.display()))))?;
        reports.push(rep);
    }
    let labelled: Vec<(String, &EstimateReport)> = reports
        .iter()
        .map(|r| {
            let prefix = if reports.len() > 1 { r.options.design.scheme.as_str().to_string() } else { String::new() };
            (prefix, r)
        })
        .collect();
    let columns = report_columns(&labelled);
    let refs: Vec<(&str, &_)> = columns.iter().map(|(l, r)| (l.as_str(), *r)).collect();
    let mut text = render_regression_table(&refs, format);
    let effects = collect_effects(&reports, args.contexts.as_deref());

    let mut files: Vec<(String, String)> = vec![(format!("table.{}", ext(format)), text.clone())];
    if format == TableFormat::Text {
        let iv_only: Vec<(&str, &_)> = refs.iter().filter(|(_, r)| !r.first_stage.is_empty()).copied().collect();
        let fs = render_first_stage_table(&iv_only);
        text.push('\n');
        text.push_str(&fs);
        files.push(("first_stage.csv".into(), fs));
    }
    if !effects.is_empty() {
        files.push(("effects.csv".into(), effects_to_csv(&effects)));
    }
    if let Some(raw) = &args.rank {
        let objective = Outcome::parse(raw)?;
        let ranking = priority_ranking(&effects, objective)?;
        let body = match format {
            TableFormat::Json => serde_json::to_string_pretty(&ranking).map_err(Error::from)? + "\n",
            _ => ranking_to_text(&ranking),
        };
        text.push('\n');
        text.push_str(&body);
        files.push((format!("ranking_{}.{}", objective.label(), if format == TableFormat::Json { "json" } else { "txt" }), body));
    }
    print!("{text}");
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        manifest.config = json!({ "format": ext(format), "rank": args.rank, "contexts": args.contexts });
        for (name, body) in &files {
            write_text(&out.join(name), body, &mut manifest)?;
        }
        manifest.write(out)?;
    }
    Ok(())
}

fn ext(format: TableFormat) -> &'static str {
    match format {
        TableFormat::Text => "txt",
        TableFormat::Json => "json",
        TableFormat::Csv => "csv",
    }
}

fn run(argv: Vec<OsString>) -> CliResult<()> {
    let root = command();
    let argv = expand_config(argv, &root).map_err(|e| match e {
        ConfigFileError::Io(m) => CliError::Io(m),
        ConfigFileError::Syntax(m) | ConfigFileError::UnknownKey(m) => CliError::Usage(m),
    })?;
    let matches = root.try_get_matches_from(argv).unwrap_or_else(|e| e.exit());
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    configure_threads(cli.threads)?;
    match &cli.command {
        Cmd::Simulate(a) => cmd_simulate(a, matches.subcommand_matches("simulate").expect("simulate matches")),
        Cmd::Describe(a) => cmd_describe(a),
        Cmd::Estimate(a) => cmd_estimate(a),
        Cmd::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("peerfx: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        command().debug_assert();
    }

    #[test]
    fn every_sim_field_is_a_flag() {
        let cmd = command();
        let sim = cmd.find_subcommand("simulate").unwrap();
        for f in sim_field_names() {
            assert!(sim.get_arguments().any(|a| a.get_long() == Some(f.replace('_', "-").as_str())), "{f}");
        }
    }

    #[test]
    fn scalar_beta_expands_to_all_cells() {
        let m = command().get_matches_from(["peerfx", "simulate", "--out", "x", "--mode", "two-player", "--beta", "0.25"]);
        let cfg = sim_config(m.subcommand_matches("simulate").unwrap()).unwrap();
        assert_eq!(cfg.mode, SimMode::TwoPlayerReflection);
        assert_eq!(cfg.beta.same_party, [0.25, 0.25]);
        assert_eq!(cfg.team_size, 1);
    }

    #[test]
    fn exit_codes_are_distinct_per_class() {
        let codes = [
            CliError::Core(Error::Schema(String::new())).exit_code(),
            CliError::Core(Error::Validation(vec![])).exit_code(),
            CliError::Core(Error::Config(String::new())).exit_code(),
            CliError::Core(Error::Singular(String::new())).exit_code(),
            CliError::Core(Error::EmptySample(String::new())).exit_code(),
            CliError::Io(String::new()).exit_code(),
            CliError::Usage(String::new()).exit_code(),
        ];
        let mut sorted = codes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), codes.len());
    }
}
