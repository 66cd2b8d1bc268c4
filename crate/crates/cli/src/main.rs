//! `egs`: classify multi-EGS groups, enumerate their congruence quotients and
//! check the exponent formula against brute force.
//!
//! Exit codes: 0 verified, 1 mismatch, 2 input error, 3 resource limit.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use egs_core::error::Error;
use egs_core::model::{classify, GroupSpec};
use egs_core::quotient::{self, EnumerationLimits, QuotientGroup};
use egs_core::theory::{self, VerifyOptions};
use egs_core::tree::{SectionTuple, Shape, TruncAut};
use egs_core::word::Word;

const EXIT_MISMATCH: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_LIMIT: u8 = 3;

#[derive(Parser)]
#[command(name = "egs", version, about = "Congruence quotients of multi-EGS groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classification and predicted exponents.
    Info {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        max_level: u32,
    },
    /// Enumerate levels 1..=max-level and compare exponents with the formula.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        max_level: u32,
        /// Deepest level for the witness order checks.
        #[arg(long)]
        witness_level: Option<u32>,
        /// Test hook: predict p^(k+1) in place of p^k.
        #[arg(long, hide = true)]
        corrupt_prediction: bool,
    },
    /// Size, exponent and order histogram of one quotient.
    Quotient {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: u32,
    },
    /// Order of a word evaluated at a level.
    Order {
        #[command(flatten)]
        common: Common,
        word: String,
        #[arg(long)]
        level: u32,
    },
    /// The `a^x c_j` witnesses and their orders; with --h, the f_1 word of a
    /// periodic GGS spec and a check of its sections.
    Witness {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_level: Option<u32>,
        /// Restrict to one conjugate index.
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        h: Option<String>,
    },
    /// Shortest stabilizer word whose first-level sections match the targets.
    Preimage {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: u32,
        /// `i=WORD`: section at position i (1-based), evaluated one level down.
        #[arg(long = "target", required = true)]
        targets: Vec<String>,
    },
    /// Write the canonical element file of one quotient.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: u32,
    },
}

#[derive(Args)]
struct Common {
    /// Group spec JSON file.
    spec: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = quotient::DEFAULT_MAX_ELEMENTS)]
    max_elements: usize,
    /// Advisory peak memory in bytes; a warning is printed when the element
    /// cap could exceed it.
    #[arg(long)]
    memory_hint: Option<u64>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

enum Failure {
    Mismatch,
    Input(String),
    Limit(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::LimitExceeded { .. } => Failure::Limit(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.command.common();
    let pool = match common.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_INPUT);
        }
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match pool.install(|| run(&cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(EXIT_MISMATCH),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Limit(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_LIMIT)
        }
    }
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Info { common, .. }
            | Command::Verify { common, .. }
            | Command::Quotient { common, .. }
            | Command::Order { common, .. }
            | Command::Witness { common, .. }
            | Command::Preimage { common, .. }
            | Command::Export { common, .. } => common,
        }
    }
}

fn run(command: &Command) -> Outcome {
    let common = command.common();
    let spec = load_spec(&common.spec)?;
    let limits = EnumerationLimits {
        max_elements: common.max_elements,
        max_memory_hint: common.memory_hint,
    };
    if limits.max_elements == 0 {
        return Err(Failure::Input("--max-elements must be at least 1".into()));
    }
    match command {
        Command::Info { max_level, .. } => {
            allow(common.format, &[Format::Text, Format::Json])?;
            info(&spec, *max_level, common)
        }
        Command::Verify {
            max_level,
            witness_level,
            corrupt_prediction,
            ..
        } => {
            allow(common.format, &[Format::Text, Format::Json])?;
            let mut opts = VerifyOptions::new(*max_level);
            opts.witness_level = *witness_level;
            opts.limits = limits;
            opts.cache_dir = common.cache_dir.clone();
            opts.prediction_skew = u32::from(*corrupt_prediction);
            warn_memory(&spec, *max_level, &limits);
            verify(&spec, &opts, common)
        }
        Command::Quotient { level, .. } => {
            warn_memory(&spec, *level, &limits);
            let q = enumerate(&spec, *level, &limits, common)?;
            quotient_report(&q, common)
        }
        Command::Order { word, level, .. } => {
            allow(common.format, &[Format::Text, Format::Json])?;
            let word = Word::parse(word)?;
            let g = spec.evaluate(&word, *level)?;
            let order = g.order();
            let text = match common.format {
                Format::Json => {
                    json!({"word": word.to_string(), "level": level, "order": order}).to_string()
                        + "\n"
                }
                _ => format!("{order}\n"),
            };
            emit(common, &text)
        }
        Command::Witness { max_level, j, h, .. } => {
            allow(common.format, &[Format::Text, Format::Json])?;
            match h {
                Some(h) => f1_witness(&spec, h, max_level.unwrap_or(4), common),
                None => order_witness(&spec, *max_level, *j, common),
            }
        }
        Command::Preimage { level, targets, .. } => {
            allow(common.format, &[Format::Text, Format::Json])?;
            preimage(&spec, *level, targets, &limits, common)
        }
        Command::Export { level, .. } => {
            allow(common.format, &[Format::Text])?;
            warn_memory(&spec, *level, &limits);
            let q = enumerate(&spec, *level, &limits, common)?;
            let mut buf = Vec::new();
            q.write_export(&mut buf)?;
            emit_bytes(common, &buf)
        }
    }
}

fn load_spec(path: &Path) -> Result<GroupSpec, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(GroupSpec::parse(&text)?)
}

fn allow(format: Format, ok: &[Format]) -> Outcome {
    if ok.contains(&format) {
        Ok(())
    } else {
        Err(Failure::Input(
            "output format not available for this command".into(),
        ))
    }
}

fn warn_memory(spec: &GroupSpec, level: u32, limits: &EnumerationLimits) {
    let Ok(shape) = Shape::new(spec.p(), level.max(1)) else {
        return;
    };
    if limits.exceeds_memory_hint(shape, limits.max_elements) {
        eprintln!(
            "warning: up to {} bytes may be needed at {} elements, above the memory hint",
            EnumerationLimits::estimated_bytes(shape, limits.max_elements),
            limits.max_elements
        );
    }
}

fn enumerate(
    spec: &GroupSpec,
    level: u32,
    limits: &EnumerationLimits,
    common: &Common,
) -> Result<QuotientGroup, Failure> {
    let q = match &common.cache_dir {
        Some(dir) => quotient::enumerate_cached(spec, level, limits, dir)?,
        None => quotient::enumerate(spec, level, limits)?,
    };
    Ok(q)
}

fn emit(common: &Common, text: &str) -> Outcome {
    emit_bytes(common, text.as_bytes())
}

fn emit_bytes(common: &Common, bytes: &[u8]) -> Outcome {
    match &common.output {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn info(spec: &GroupSpec, max_level: u32, common: &Common) -> Outcome {
    if max_level == 0 {
        return Err(Failure::Input("--max-level must be at least 1".into()));
    }
    let class = classify(spec);
    let exps = (1..=max_level)
        .map(|n| theory::predicted_exponent(spec, n))
        .collect::<Result<Vec<_>, _>>()?;
    let k2 = theory::predicted_k2_order(spec);
    let dims: Vec<usize> = (1..=spec.p().get() as usize).map(|j| spec.span_dim(j)).collect();
    let text = match common.format {
        Format::Json => {
            let v = json!({
                "p": spec.p().get(),
                "family": class.family,
                "periodic": class.periodic,
                "x": class.x.map(|x| x.value()),
                "span_dims": dims,
                "predicted_exponents": exps,
                "predicted_k2_order": k2,
            });
            serde_json::to_string_pretty(&v).expect("json value") + "\n"
        }
        _ => {
            let mut s = format!("{class}; exp: {}; |K2|={k2}\n", join(&exps));
            s += &format!("p={} span dims: {}\n", spec.p(), join(&dims));
            if let Some(x) = class.x {
                s += &format!("x={}\n", x.value());
            }
            s
        }
    };
    emit(common, &text)
}

fn verify(spec: &GroupSpec, opts: &VerifyOptions, common: &Common) -> Outcome {
    let render = |report: &theory::VerificationReport| match common.format {
        Format::Json => report.to_json() + "\n",
        _ => report.to_text(),
    };
    match theory::verify_main_theorem(spec, opts) {
        Ok(report) => {
            emit(common, &render(&report))?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Mismatch)
            }
        }
        Err(partial) => {
            emit(common, &render(&partial.report))?;
            Err(partial.cause.into())
        }
    }
}

fn quotient_report(q: &QuotientGroup, common: &Common) -> Outcome {
    let hist = q.order_histogram();
    let text = match common.format {
        Format::Csv => hist.to_csv(),
        Format::Json => {
            let counts: Vec<_> = hist
                .counts
                .iter()
                .map(|(order, count)| json!({"order": order, "count": count}))
                .collect();
            let v = json!({
                "p": q.shape().p().get(),
                "level": q.level(),
                "size": q.size(),
                "exponent": q.exponent(),
                "layer_sizes": q.layer_sizes(),
                "histogram": counts,
            });
            serde_json::to_string_pretty(&v).expect("json value") + "\n"
        }
        Format::Text => {
            let mut s = format!("size={} exp={}\n", q.size(), q.exponent());
            s += &format!("layers: {}\n", join(q.layer_sizes()));
            s += "order count\n";
            for (order, count) in &hist.counts {
                s += &format!("{order:>5} {count}\n");
            }
            s
        }
    };
    emit(common, &text)
}

fn order_witness(
    spec: &GroupSpec,
    max_level: Option<u32>,
    only: Option<usize>,
    common: &Common,
) -> Outcome {
    let p = spec.p();
    let deepest = max_level.unwrap_or_else(|| theory::default_witness_level(p, 1));
    let js: Vec<usize> = match only {
        Some(j) => vec![j],
        None => (0..p.get() as usize).collect(),
    };
    let mut rows = Vec::new();
    let mut all_match = true;
    for j in js {
        let word = theory::lemma_p_witness(spec, j)?;
        let mut orders = Vec::new();
        for n in 1..=deepest {
            let order = spec.evaluate(&word, n)?.order();
            all_match &= Some(order) == p.pow(n);
            orders.push(order);
        }
        rows.push((word, orders));
    }
    let text = match common.format {
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|(w, orders)| json!({"word": w.to_string(), "orders": orders}))
                .collect();
            serde_json::to_string_pretty(&v).expect("json value") + "\n"
        }
        _ => rows
            .iter()
            .map(|(w, orders)| format!("{w}: {}\n", join(orders)))
            .collect(),
    };
    emit(common, &text)?;
    if all_match {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn f1_witness(spec: &GroupSpec, h: &str, max_level: u32, common: &Common) -> Outcome {
    let h = Word::parse(h)?;
    let f1 = theory::lemma5_f1(spec, &h)?;
    let mut checks = Vec::new();
    for n in 2..=max_level.max(2) {
        checks.push((n, theory::check_f1(spec, &h, n)?));
    }
    let adjusted = theory::lemma5_adjust_h(spec, &h).ok();
    let text = match common.format {
        Format::Json => {
            let v = json!({
                "h": h.to_string(),
                "f1": f1.to_string(),
                "adjusted_h": adjusted.as_ref().map(|w| w.to_string()),
                "checks": checks
                    .iter()
                    .map(|(n, c)| json!({"level": n, "check": c}))
                    .collect::<Vec<_>>(),
            });
            serde_json::to_string_pretty(&v).expect("json value") + "\n"
        }
        _ => {
            let mut s = format!("f1: {f1}\n");
            if let Some(w) = &adjusted {
                s += &format!("h': {w}\n");
            }
            for (n, c) in &checks {
                s += &format!("n={n} sections {}\n", if c.holds() { "ok" } else { "MISMATCH" });
            }
            s
        }
    };
    emit(common, &text)?;
    if checks.iter().all(|(_, c)| c.holds()) {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn preimage(
    spec: &GroupSpec,
    level: u32,
    targets: &[String],
    limits: &EnumerationLimits,
    common: &Common,
) -> Outcome {
    if level < 2 {
        return Err(Failure::Input("preimage needs --level at least 2".into()));
    }
    let inner = Shape::new(spec.p(), level - 1)?;
    let pu = spec.p().get() as usize;
    let mut components = vec![TruncAut::identity(inner); pu];
    let mut mask = Vec::new();
    for t in targets {
        let (i, w) = t
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("target `{t}` is not i=WORD")))?;
        let i: usize = i
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("bad position in `{t}`")))?;
        if i == 0 || i > pu {
            return Err(Failure::Input(format!("position {i} outside 1..={pu}")));
        }
        components[i - 1] = spec.evaluate(&Word::parse(w)?, level - 1)?;
        mask.push(i);
    }
    let tuple = SectionTuple::new(components)?;
    let found = match quotient::find_preimage(spec, level, &tuple, &mask, limits) {
        Ok(w) => Some(w),
        Err(Error::NotFound { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let text = match common.format {
        Format::Json => json!({"found": found.is_some(), "word": found.map(|w| w.to_string())})
            .to_string()
            + "\n",
        _ => match found {
            Some(w) if w.is_empty() => "(empty word)\n".to_string(),
            Some(w) => format!("{w}\n"),
            None => "not found\n".to_string(),
        },
    };
    emit(common, &text)
}
