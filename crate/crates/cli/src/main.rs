//! `tdlog`: analyze, evaluate and stream temporal Datalog queries.
//!
//! Exit codes: 0 success or valid, 1 invalid or not contained, 2 usage or input error,
//! 3 search budget exhausted.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tdlog::analysis::{classify, ObjectDomain};
use tdlog::eval::evaluate;
use tdlog::regex::{regex_to_query, succinct_regex_to_query, Alphabet, Regex};
use tdlog::stream::{Engine, EngineParams};
use tdlog::syntax::{parse_dataset_in, parse_query_in, parse_stream, parse_stream_in, serialize_facts};
use tdlog::window::{
    brute_force_containment, fixed_domain_window_valid, is_uniformly_valid, merge_for_window_reduction,
    min_valid_window, og_containment, og_window_valid, radius_window, ContainmentVerdict, SearchConfig,
    WindowMethod,
};
use tdlog::{Dataset, Error, FactSet, Query, TimePoint};

const BUDGET_ENV: &str = "TDLOG_STATE_BUDGET";

#[derive(Parser)]
#[command(name = "tdlog", version, about = "Temporal Datalog stream reasoning and window analysis")]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report per-rule radii and the query's classes.
    Check { file: PathBuf },
    /// Evaluate a query over a dataset up to a horizon.
    Eval {
        file: PathBuf,
        data: PathBuf,
        #[arg(long)]
        horizon: TimePoint,
    },
    /// Run the windowed stream engine.
    Stream {
        file: PathBuf,
        /// Stream file; omit with --stdin.
        input: Option<PathBuf>,
        #[arg(long)]
        background: Option<PathBuf>,
        #[arg(long)]
        window: u64,
        #[arg(long, value_enum, default_value_t = SignatureArg::Full)]
        signature: SignatureArg,
        /// Read stream facts from standard input, in nondecreasing time order.
        #[arg(long, conflicts_with = "input")]
        stdin: bool,
        /// Number of ticks to run; defaults to one past the last stream time point.
        #[arg(long)]
        ticks: Option<u64>,
    },
    /// Decide or approximate whether a window size is valid.
    Window {
        file: PathBuf,
        #[arg(long = "w")]
        w: u64,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Comma-separated objects for exact-fixed.
        #[arg(long)]
        domain: Option<String>,
        /// Write the counterexample dataset here.
        #[arg(long)]
        cex_out: Option<PathBuf>,
    },
    /// Least window size valid according to a method.
    Minwindow {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        domain: Option<String>,
    },
    /// Build a query whose window validity coincides with containment of two queries.
    Merge { first: PathBuf, second: PathBuf },
    /// Compile a regular expression into a query.
    Regex2q {
        expr: String,
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(long)]
        succinct: bool,
    },
    /// Decide containment of two object-ground queries.
    Contains {
        first: PathBuf,
        second: PathBuf,
        /// Also run the exhaustive oracle over datasets up to this time point.
        #[arg(long)]
        brute_force_max_time: Option<TimePoint>,
        #[arg(long)]
        cex_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SignatureArg {
    Full,
    Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Radius,
    Uniform,
    ExactOg,
    ExactFixed,
}

struct Outcome {
    text: String,
    json: Value,
    code: u8,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Self {
        Outcome { text, json, code: 0 }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_query(path: &Path) -> anyhow::Result<Query> {
    Ok(parse_query_in(&read(path)?, Some(path))?)
}

fn search_config() -> anyhow::Result<SearchConfig> {
    let mut config = SearchConfig::default();
    if let Ok(raw) = std::env::var(BUDGET_ENV) {
        config.state_budget = raw
            .trim()
            .parse()
            .with_context(|| format!("{BUDGET_ENV} must be a non-negative integer, got `{raw}`"))?;
    }
    Ok(config)
}

fn domain(arg: &Option<String>) -> ObjectDomain {
    ObjectDomain::new(
        arg.iter()
            .flat_map(|s| s.split(','))
            .map(str::trim)
            .filter(|s| !s.is_empty()),
    )
}

fn method(arg: MethodArg, domain_arg: &Option<String>) -> anyhow::Result<WindowMethod> {
    Ok(match arg {
        MethodArg::Radius => WindowMethod::Radius,
        MethodArg::Uniform => WindowMethod::Uniform,
        MethodArg::ExactOg => WindowMethod::ExactOg,
        MethodArg::ExactFixed => {
            if domain_arg.is_none() {
                bail!("--method exact-fixed requires --domain");
            }
            WindowMethod::ExactFixed(domain(domain_arg))
        }
    })
}

fn facts_json(facts: &FactSet) -> Value {
    facts.iter().map(|f| f.to_string()).collect()
}

fn check(file: &Path) -> anyhow::Result<Outcome> {
    let query = load_query(file)?;
    let report = classify(&query);
    let mut text = String::new();
    let mut rows = Vec::new();
    for (row, rule) in report.per_rule.iter().zip(query.program().rules()) {
        let radius = match &row.radius {
            Ok(r) => r.to_string(),
            Err(v) => format!("- ({v})"),
        };
        text.push_str(&format!("rule {:>2}  radius {radius:<4} {rule}\n", row.index + 1));
        rows.push(json!({
            "rule": row.index + 1,
            "text": rule.to_string(),
            "radius": row.radius.as_ref().ok(),
            "fp": row.radius.is_ok(),
        }));
    }
    text.push_str(&report.summary());
    text.push('\n');
    let json = json!({
        "rules": rows,
        "radius": report.query_radius,
        "fp": report.is_fp,
        "og": report.is_object_ground,
        "nr": report.is_non_recursive,
    });
    Ok(Outcome::ok(text, json))
}

fn eval(file: &Path, data: &Path, horizon: TimePoint) -> anyhow::Result<Outcome> {
    let query = load_query(file)?;
    let facts = parse_dataset_in(&read(data)?, Some(query.program()), Some(data))?;
    let answers = evaluate(&query, &facts, horizon)?;
    Ok(Outcome::ok(serialize_facts(&answers), json!({ "answers": facts_json(&answers) })))
}

#[allow(clippy::too_many_arguments)]
fn stream(
    out: &mut dyn Write,
    json_mode: bool,
    file: &Path,
    input: Option<&Path>,
    background: Option<&Path>,
    window: u64,
    signature: SignatureArg,
    stdin: bool,
    ticks: Option<u64>,
) -> anyhow::Result<()> {
    let query = load_query(file)?;
    let background: Dataset = match background {
        Some(p) => parse_dataset_in(&read(p)?, Some(query.program()), Some(p))?,
        None => Dataset::new(),
    };
    let program = query.program().clone();
    let params = match signature {
        SignatureArg::Full => EngineParams::full(query, window)?,
        SignatureArg::Output => EngineParams::output_only(query, window)?,
    };
    let mut engine = Engine::new(params, &background)?;
    let emit = |engine: &mut Engine, batch: &FactSet, out: &mut dyn Write| -> anyhow::Result<()> {
        let tick = engine.current_tick();
        let emitted = engine.push_tick(batch)?;
        if json_mode {
            let facts: Vec<String> = emitted.iter().map(ToString::to_string).collect();
            writeln!(out, "{}", json!({ "tick": tick, "facts": facts }))?;
        } else {
            writeln!(out, "@tick {tick}")?;
            for f in &emitted {
                writeln!(out, "{f}.")?;
            }
        }
        Ok(())
    };

    if stdin {
        let mut pending = FactSet::new();
        for line in io::stdin().lock().lines() {
            let line = line?;
            for fact in parse_stream(&line, Some(&program))?.facts() {
                let t = fact.time.expect("stream facts are temporal");
                if t < engine.current_tick() {
                    bail!("stream fact `{fact}` arrives after tick {t} was processed");
                }
                while engine.current_tick() < t {
                    emit(&mut engine, &std::mem::take(&mut pending), out)?;
                }
                pending.insert(fact.clone());
            }
        }
        let last = if pending.is_empty() { engine.current_tick() } else { engine.current_tick() + 1 };
        let end = ticks.unwrap_or(last).max(last);
        while engine.current_tick() < end {
            emit(&mut engine, &std::mem::take(&mut pending), out)?;
        }
    } else {
        let Some(path) = input else {
            bail!("give a stream file or --stdin");
        };
        let s = parse_stream_in(&read(path)?, Some(&program), Some(path))?;
        let n = ticks.unwrap_or_else(|| s.last_time().map_or(0, |t| t + 1));
        for t in 0..n {
            emit(&mut engine, &s.at(t), out)?;
        }
    }
    Ok(())
}

fn verdict_outcome(verdict: &ContainmentVerdict, yes: &str, no: &str, cex_out: Option<&Path>) -> anyhow::Result<Outcome> {
    let mut text = format!("{}\n", if verdict.contained { yes } else { no });
    let mut cex = Value::Null;
    if let Some(c) = &verdict.counterexample {
        text.push_str(&format!(
            "counterexample: witness {} at time {}, word length {}\n",
            c.witness, c.time, c.word_length
        ));
        let facts = serialize_facts(&c.dataset);
        text.push_str(&facts);
        if let Some(path) = cex_out {
            fs::write(path, &facts).with_context(|| format!("cannot write {}", path.display()))?;
        }
        cex = json!({
            "dataset": facts_json(&c.dataset),
            "time": c.time,
            "witness": c.witness.to_string(),
            "word_length": c.word_length,
        });
    }
    text.push_str(&format!("states explored: {}\n", verdict.states_explored));
    Ok(Outcome {
        json: json!({
            "result": if verdict.contained { yes } else { no },
            "counterexample": cex,
            "states_explored": verdict.states_explored,
            "bound": verdict.bound.b.to_string(),
        }),
        text,
        code: if verdict.contained { 0 } else { 1 },
    })
}

fn window(file: &Path, w: u64, method_arg: MethodArg, domain_arg: &Option<String>, cex_out: Option<&Path>) -> anyhow::Result<Outcome> {
    let query = load_query(file)?;
    let config = search_config()?;
    let sound = |valid: bool| {
        let word = if valid { "valid" } else { "not-shown-valid" };
        Outcome {
            text: format!("{word}\n"),
            json: json!({ "result": word }),
            code: if valid { 0 } else { 1 },
        }
    };
    Ok(match method(method_arg, domain_arg)? {
        WindowMethod::Radius => sound(w >= radius_window(&query)?),
        WindowMethod::Uniform => sound(w >= radius_window(&query)? || is_uniformly_valid(&query, w)?),
        WindowMethod::ExactOg => {
            verdict_outcome(&og_window_valid(&query, w, &config)?, "valid", "invalid", cex_out)?
        }
        WindowMethod::ExactFixed(d) => verdict_outcome(
            &fixed_domain_window_valid(&query, w, &d, &config)?,
            "valid",
            "invalid",
            cex_out,
        )?,
    })
}

fn minwindow(file: &Path, method_arg: MethodArg, domain_arg: &Option<String>) -> anyhow::Result<Outcome> {
    let query = load_query(file)?;
    let w = min_valid_window(&query, &method(method_arg, domain_arg)?, &search_config()?)?;
    Ok(Outcome::ok(format!("{w}\n"), json!({ "window": w })))
}

fn merge(first: &Path, second: &Path) -> anyhow::Result<Outcome> {
    let (merged, w) = merge_for_window_reduction(&load_query(first)?, &load_query(second)?)?;
    let text = format!("% window w={w}\n{merged}");
    Ok(Outcome::ok(text, json!({ "window": w, "query": merged.to_string() })))
}

fn regex2q(expr: &str, alphabet: &Option<String>, succinct: bool) -> anyhow::Result<Outcome> {
    let r: Regex = expr.parse()?;
    let alphabet = match alphabet {
        Some(a) => a.parse::<Alphabet>()?,
        None => Alphabet::of(&r),
    };
    let q = if succinct {
        succinct_regex_to_query(&r, &alphabet)?
    } else {
        regex_to_query(&r, &alphabet)?
    };
    Ok(Outcome::ok(q.to_string(), json!({ "regex": r.to_string(), "query": q.to_string() })))
}

fn contains(first: &Path, second: &Path, brute: Option<TimePoint>, cex_out: Option<&Path>) -> anyhow::Result<Outcome> {
    let (q1, q2) = (load_query(first)?, load_query(second)?);
    let verdict = og_containment(&q1, &q2, &search_config()?)?;
    let mut outcome = verdict_outcome(&verdict, "contained", "not-contained", cex_out)?;
    if let Some(t) = brute {
        let oracle = brute_force_containment(&q1, &q2, t)?;
        let word = if oracle { "contained" } else { "not-contained" };
        outcome.text.push_str(&format!("brute-force (max time {t}): {word}\n"));
        outcome.json["brute_force"] = json!(word);
    }
    Ok(outcome)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let outcome = match cli.command {
        Command::Check { file } => check(&file)?,
        Command::Eval { file, data, horizon } => eval(&file, &data, horizon)?,
        Command::Stream {
            file,
            input,
            background,
            window,
            signature,
            stdin,
            ticks,
        } => {
            stream(
                &mut out,
                cli.json,
                &file,
                input.as_deref(),
                background.as_deref(),
                window,
                signature,
                stdin,
                ticks,
            )?;
            return Ok(0);
        }
        Command::Window {
            file,
            w,
            method,
            domain,
            cex_out,
        } => window(&file, w, method, &domain, cex_out.as_deref())?,
        Command::Minwindow { file, method, domain } => minwindow(&file, method, &domain)?,
        Command::Merge { first, second } => merge(&first, &second)?,
        Command::Regex2q {
            expr,
            alphabet,
            succinct,
        } => regex2q(&expr, &alphabet, succinct)?,
        Command::Contains {
            first,
            second,
            brute_force_max_time,
            cex_out,
        } => contains(&first, &second, brute_force_max_time, cex_out.as_deref())?,
    };
    if cli.json {
        writeln!(out, "{}", outcome.json)?;
    } else {
        write!(out, "{}", outcome.text)?;
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
