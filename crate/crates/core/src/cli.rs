//! Command-line front end.
//!
//! Exit status: 0 when every name resolved, 2 when some names failed but
//! output was still written, 1 on fatal errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::cache::CacheStore;
use crate::gbif::{DEFAULT_BASE_URL, DEFAULT_PARALLELISM};
use crate::names::{parse_names_list, RawNameEntry};
use crate::owl::{append_axioms, emit_axioms, merge, parse, EmitConfig, EmitWarning, DEFAULT_IRI_BASE, DEFAULT_LANG_TAG};
use crate::pipeline::{convert, resolve_axiom_spec, Session, TransportMode};
use crate::taxonomy::{build, ConversionReport, MatchPolicy, Outcome, DEFAULT_FUZZY_THRESHOLD};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

/// Environment variable overriding the API base URL.
pub const BASE_URL_ENV: &str = "GBIF_BASE_URL";

#[derive(Parser, Debug)]
#[command(name = "taxowl", version, about = "Convert species names into an OWL taxonomy via the GBIF backbone")]
struct Cli {
    /// key=value settings file; command-line flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resolve names and write an OWL class hierarchy
    Convert {
        #[command(flatten)]
        input: InputArgs,
        /// OWL output file (standard output if omitted)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// CSV report file (defaults to <out>.report.csv when --out is given)
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        #[command(flatten)]
        emit: EmitArgs,
        #[command(flatten)]
        matching: MatchArgs,
        #[command(flatten)]
        transport: TransportArgs,
    },
    /// Report the backbone status of each name without writing OWL
    Check {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        matching: MatchArgs,
        #[command(flatten)]
        transport: TransportArgs,
    },
    /// Merge OWL files into one deduplicated document
    Merge {
        #[arg(required = true, value_name = "FILE")]
        inputs: Vec<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Render restriction axioms from a spec file
    Axioms {
        /// Lines of `subject | kind | property | target, target...`
        #[arg(value_name = "SPEC")]
        spec: PathBuf,
        #[arg(long, value_name = "FILE", conflicts_with = "append_to")]
        out: Option<PathBuf>,
        /// Insert the axioms into an existing OWL document in place
        #[arg(long, value_name = "FILE")]
        append_to: Option<PathBuf>,
        #[command(flatten)]
        emit: EmitArgs,
        #[command(flatten)]
        matching: MatchArgs,
        #[command(flatten)]
        transport: TransportArgs,
    },
    /// Inspect or clear a response cache
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand, Debug)]
enum CacheAction {
    /// Print entry counts and age range
    Inspect {
        #[arg(long, value_name = "DIR")]
        cache_dir: Option<PathBuf>,
        /// Also list every entry
        #[arg(long)]
        list: bool,
    },
    /// Remove every entry
    Clear {
        #[arg(long, value_name = "DIR")]
        cache_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Names given inline
    #[arg(long, num_args = 1.., value_name = "NAME", conflicts_with = "names_file")]
    names: Vec<String>,
    /// One name per line, optional tab-separated rank hint
    #[arg(long, value_name = "FILE")]
    names_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmitArgs {
    #[arg(long, value_name = "IRI")]
    iri_base: Option<String>,
    #[arg(long, value_name = "TAG")]
    lang_tag: Option<String>,
    /// Write a rank/name comment above every class
    #[arg(long)]
    comments: bool,
}

#[derive(Args, Debug)]
struct MatchArgs {
    /// Accept fuzzy matches of any confidence
    #[arg(long)]
    allow_fuzzy: bool,
    #[arg(long, value_name = "0-100", value_parser = clap::value_parser!(u8).range(0..=100))]
    fuzzy_threshold: Option<u8>,
    /// Send names exactly as given
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args, Debug)]
struct TransportArgs {
    /// Replay recorded responses from this directory
    #[arg(long, value_name = "DIR", conflicts_with = "cache_dir")]
    fixtures: Option<PathBuf>,
    /// Serve from (and record into) this cache directory
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Ignore cached entries and refetch (still records)
    #[arg(long, requires = "cache_dir")]
    refresh: bool,
    /// Treat cached entries older than this as missing
    #[arg(long, value_name = "DAYS")]
    max_age_days: Option<u64>,
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    parallelism: Option<u64>,
}

/// Settings read from a `--config` file.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct FileConfig {
    pub iri_base: Option<String>,
    pub lang_tag: Option<String>,
    pub fuzzy_threshold: Option<u8>,
    pub allow_fuzzy: Option<bool>,
    pub normalize: Option<bool>,
    pub comments: Option<bool>,
    pub fixtures: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub max_age_days: Option<u64>,
    pub parallelism: Option<usize>,
    pub base_url: Option<String>,
}

impl FileConfig {
    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = FileConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').with_context(|| format!("line {}: expected key = value", i + 1))?;
            let (key, value) = (key.trim(), value.trim().to_string());
            let ctx = || format!("line {}: bad value for {key}", i + 1);
            match key {
                "iri_base" => c.iri_base = Some(value),
                "lang_tag" => c.lang_tag = Some(value),
                "fuzzy_threshold" => {
                    let t: u8 = value.parse().with_context(ctx)?;
                    if t > 100 {
                        bail!("line {}: fuzzy_threshold must be 0-100", i + 1);
                    }
                    c.fuzzy_threshold = Some(t);
                }
                "allow_fuzzy" => c.allow_fuzzy = Some(value.parse().with_context(ctx)?),
                "normalize" => c.normalize = Some(value.parse().with_context(ctx)?),
                "comments" => c.comments = Some(value.parse().with_context(ctx)?),
                "fixtures" => c.fixtures = Some(value.into()),
                "cache_dir" => c.cache_dir = Some(value.into()),
                "max_age_days" => c.max_age_days = Some(value.parse().with_context(ctx)?),
                "parallelism" => {
                    let p: usize = value.parse().with_context(ctx)?;
                    if p == 0 {
                        bail!("line {}: parallelism must be at least 1", i + 1);
                    }
                    c.parallelism = Some(p);
                }
                "base_url" => c.base_url = Some(value),
                other => bail!("line {}: unknown setting {other:?}", i + 1),
            }
        }
        Ok(c)
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Runs the command line with explicit arguments and streams. Returns the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let mut io = Io { out, err };
    match dispatch(cli, &mut io) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e:#}");
            EXIT_FATAL
        }
    }
}

/// Entry point for the binary.
pub fn main() -> std::process::ExitCode {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::ExitCode::from(code as u8)
}

fn dispatch(cli: Cli, io: &mut Io) -> Result<i32> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            FileConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Convert { input, out, report, emit, matching, transport } => {
            let names = read_input(&input)?;
            let session = open_session(&transport, &file)?;
            let config = emit_config(&emit, &file);
            let conversion = convert(&names, &session.client, &match_policy(&matching, &file), &config);

            match &out {
                Some(path) => write_file(path, conversion.xml.as_bytes())?,
                None => io.out.write_all(conversion.xml.as_bytes())?,
            }
            let report_path = report.or_else(|| out.as_ref().map(|o| o.with_extension("report.csv")));
            if let Some(path) = &report_path {
                write_file(path, conversion.report.to_csv_string().as_bytes())?;
            }

            // keep standard output clean when it carries the document
            let summary: &mut dyn Write = if out.is_some() { &mut *io.out } else { &mut *io.err };
            write_summary(summary, &conversion.report)?;
            if conversion.warnings.contains(&EmitWarning::EmptyGraph) {
                writeln!(summary, "warning: no classes to emit")?;
            }
            if let Some(stats) = session.cache_stats() {
                write!(summary, "cache: {} hits, {} misses", stats.hits, stats.misses)?;
                if let Some(oldest) = stats.oldest_hit {
                    write!(summary, ", oldest response fetched {}", oldest.format("%Y-%m-%d %H:%M:%SZ"))?;
                }
                writeln!(summary)?;
            }
            Ok(if conversion.report.has_failures() { EXIT_PARTIAL } else { EXIT_OK })
        }
        Command::Check { input, matching, transport } => {
            let names = read_input(&input)?;
            let session = open_session(&transport, &file)?;
            let (_, report) = build(&names, &session.client, &match_policy(&matching, &file));
            write_check_table(io.out, &report)?;
            Ok(if report.has_failures() { EXIT_PARTIAL } else { EXIT_OK })
        }
        Command::Merge { inputs, out } => {
            let mut fragments = Vec::with_capacity(inputs.len());
            for path in &inputs {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                fragments.push(parse(&text, &path.display().to_string())?);
            }
            let merged = merge(&fragments)?;
            for w in &merged.warnings {
                writeln!(io.err, "warning: {w}")?;
            }
            let xml = merged.document.to_xml();
            match &out {
                Some(path) => write_file(path, xml.as_bytes())?,
                None => io.out.write_all(xml.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
        Command::Axioms { spec, out, append_to, emit, matching, transport } => {
            let text = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let session = open_session(&transport, &file)?;
            let axioms = resolve_axiom_spec(&text, &session.client, &match_policy(&matching, &file), &emit_config(&emit, &file))
                .with_context(|| spec.display().to_string())?;
            let fragment = emit_axioms(&axioms)?;
            if let Some(target) = &append_to {
                let doc = fs::read_to_string(target).with_context(|| format!("reading {}", target.display()))?;
                let updated = append_axioms(&doc, &fragment)
                    .with_context(|| format!("{} has no closing </rdf:RDF>", target.display()))?;
                write_file(target, updated.as_bytes())?;
            } else if let Some(path) = &out {
                write_file(path, fragment.as_bytes())?;
            } else {
                io.out.write_all(fragment.as_bytes())?;
            }
            Ok(EXIT_OK)
        }
        Command::Cache { action } => match action {
            CacheAction::Inspect { cache_dir, list } => {
                let dir = cache_dir.or(file.cache_dir).context("no cache directory given (--cache-dir)")?;
                let store = CacheStore::open_existing(&dir)?;
                let records = store.records();
                writeln!(io.out, "{}: {} entries", dir.display(), records.len())?;
                if let (Some(oldest), Some(newest)) =
                    (records.iter().map(|r| r.fetched_at).min(), records.iter().map(|r| r.fetched_at).max())
                {
                    writeln!(io.out, "oldest: {}", oldest.to_rfc3339())?;
                    writeln!(io.out, "newest: {}", newest.to_rfc3339())?;
                }
                if list {
                    for r in &records {
                        writeln!(io.out, "{}\t{}", r.fetched_at.to_rfc3339(), r.request_key)?;
                    }
                }
                Ok(EXIT_OK)
            }
            CacheAction::Clear { cache_dir } => {
                let dir = cache_dir.or(file.cache_dir).context("no cache directory given (--cache-dir)")?;
                let removed = CacheStore::open_existing(&dir)?.clear()?;
                writeln!(io.out, "removed {removed} entries from {}", dir.display())?;
                Ok(EXIT_OK)
            }
        },
    }
}

fn read_input(input: &InputArgs) -> Result<Vec<RawNameEntry>> {
    let names = match &input.names_file {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_names_list(&text).with_context(|| path.display().to_string())?
        }
        None => input.names.iter().filter(|n| !n.trim().is_empty()).map(RawNameEntry::new).collect(),
    };
    if names.is_empty() {
        bail!("no names given (use --names or --names-file)");
    }
    Ok(names)
}

fn open_session(args: &TransportArgs, file: &FileConfig) -> Result<Session> {
    let base_url = std::env::var(BASE_URL_ENV)
        .ok()
        .filter(|u| !u.is_empty())
        .or_else(|| file.base_url.clone())
        .unwrap_or_else(|| DEFAULT_BASE_URL.to_string());
    let max_age = args.max_age_days.or(file.max_age_days).map(|d| Duration::from_secs(d * 86_400));
    let mode = match (&args.fixtures, &args.cache_dir) {
        (Some(dir), _) => TransportMode::Fixtures(dir.clone()),
        (None, Some(dir)) => TransportMode::CacheThrough { dir: dir.clone(), base_url, max_age, refresh: args.refresh },
        (None, None) => match (&file.fixtures, &file.cache_dir) {
            (Some(dir), _) => TransportMode::Fixtures(dir.clone()),
            (None, Some(dir)) => TransportMode::CacheThrough { dir: dir.clone(), base_url, max_age, refresh: false },
            (None, None) => TransportMode::Live { base_url },
        },
    };
    let parallelism = args.parallelism.map(|p| p as usize).or(file.parallelism).unwrap_or(DEFAULT_PARALLELISM);
    Session::open(&mode, parallelism).context("opening the backbone transport")
}

fn emit_config(args: &EmitArgs, file: &FileConfig) -> EmitConfig {
    EmitConfig {
        iri_base: args.iri_base.clone().or_else(|| file.iri_base.clone()).unwrap_or_else(|| DEFAULT_IRI_BASE.into()),
        lang_tag: args.lang_tag.clone().or_else(|| file.lang_tag.clone()).unwrap_or_else(|| DEFAULT_LANG_TAG.into()),
        comments: args.comments || file.comments.unwrap_or(false),
    }
}

fn match_policy(args: &MatchArgs, file: &FileConfig) -> MatchPolicy {
    MatchPolicy {
        fuzzy_threshold: args.fuzzy_threshold.or(file.fuzzy_threshold).unwrap_or(DEFAULT_FUZZY_THRESHOLD),
        allow_fuzzy: args.allow_fuzzy || file.allow_fuzzy.unwrap_or(false),
        normalize: !args.no_normalize && file.normalize.unwrap_or(true),
        ..MatchPolicy::default()
    }
}

/// Writes via a temporary sibling and a rename, so a failed run never
/// leaves a truncated file behind.
fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().with_context(|| format!("{} is not a file path", path.display()))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", path.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_summary(w: &mut dyn Write, report: &ConversionReport) -> std::io::Result<()> {
    writeln!(w, "{}", report.summary())?;
    for row in &report.rows {
        match row.outcome {
            Outcome::Failed => writeln!(w, "  FAILED  {}: {}", row.input, row.detail)?,
            Outcome::FuzzyMatched => writeln!(
                w,
                "  FUZZY   {} -> {} (confidence {})",
                row.input,
                row.accepted_name.as_deref().unwrap_or("?"),
                row.confidence.unwrap_or(0)
            )?,
            _ => {}
        }
    }
    Ok(())
}

fn write_check_table(w: &mut dyn Write, report: &ConversionReport) -> std::io::Result<()> {
    writeln!(w, "input\tstatus\tmatchType\tconfidence\tacceptedName\toutcome")?;
    for row in &report.rows {
        let synonym = row.status.as_ref().is_some_and(|s| s.is_synonym());
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            row.input,
            row.status.as_ref().map(|s| s.as_str()).unwrap_or("-"),
            row.match_type.as_ref().map(|m| m.as_str()).unwrap_or("-"),
            row.confidence.map(|c| c.to_string()).unwrap_or_else(|| "-".into()),
            if synonym { row.accepted_name.as_deref().unwrap_or("-") } else { "-" },
            row.outcome,
        )?;
    }
    Ok(())
}
