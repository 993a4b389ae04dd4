//! Command-line front end. Every command is a thin wrapper over the library;
//! see the examples directory for programmatic use.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use slpn::analysis::{
    language_mass_with, spec_probability_with, trace_probability_with, AnalysisOptions,
    AnalysisResult,
};
use slpn::automata::parse_dfa;
use slpn::conformance::{
    format_trace, parse_log_csv, parse_trace, parse_xes, serialize_log_csv, uemsc_with,
    StochasticLog,
};
use slpn::markov::{state_values_with, SolverOptions};
use slpn::net::{parse_slpn, Label, Lsp};
use slpn::oracle::{enumerate_bracket, sample_playout, BracketOptions};
use slpn::probdeclare::{check_compliance_with, parse_probdeclare};
use slpn::reachability::{build_reachability_graph, classify_states, StateClass, DEFAULT_MAX_STATES};

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(name = "slpn", version, about = "Analysis of labelled stochastic Petri nets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Reachability state cap
    #[arg(long, global = true, env = "SLPN_MAX_STATES")]
    max_states: Option<usize>,
    /// Iterative solver tolerance
    #[arg(long, global = true, default_value_t = 1e-12)]
    tolerance: f64,
    /// Oracle enumeration stops when the frontier mass drops below this
    #[arg(long, global = true, default_value_t = 1e-9)]
    epsilon: f64,
    /// Cross-check analytic values by run enumeration
    #[arg(long, global = true)]
    oracle: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Decimal digits for printed probabilities
    #[arg(long, global = true, default_value_t = 9)]
    digits: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Graph statistics, state classification and language mass
    Inspect { net: PathBuf },
    /// Probability of ending in the given final marking(s)
    Outcome {
        net: PathBuf,
        /// Target final marking `place:mult[,place:mult...]`, repeatable
        #[arg(long = "final", required = true)]
        finals: Vec<String>,
    },
    /// Probability of one visible trace
    TraceProb {
        net: PathBuf,
        /// Comma-separated labels; quote labels containing commas
        #[arg(long)]
        trace: String,
    },
    /// Probability that the model trace is accepted by a DFA
    SpecProb {
        net: PathBuf,
        #[arg(long)]
        dfa: PathBuf,
    },
    /// Check a probabilistic Declare specification
    Compliance {
        net: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Unit Earth Movers' stochastic conformance against a log
    Uemsc {
        net: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Read the log as XES instead of CSV
        #[arg(long)]
        xes: bool,
        /// Strip surrounding whitespace from log labels
        #[arg(long)]
        trim: bool,
    },
    /// Play out the net into a sampled log (CSV on stdout)
    Sample {
        net: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_len: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

struct Ctx {
    opts: AnalysisOptions,
    format: Format,
    digits: usize,
}

impl Ctx {
    fn p(&self, v: f64) -> String {
        format!("{:.*}", self.digits, v)
    }
}

fn load_net(path: &PathBuf) -> slpn::Result<Lsp> {
    let text = std::fs::read_to_string(path)?;
    parse_slpn(&text)
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: &Cli) -> slpn::Result<()> {
    let opts = AnalysisOptions {
        max_states: cli.max_states.unwrap_or(DEFAULT_MAX_STATES),
        solver: SolverOptions { tolerance: cli.tolerance, ..Default::default() },
        oracle: cli
            .oracle
            .then_some(BracketOptions { epsilon: cli.epsilon, ..Default::default() }),
    };
    let ctx = Ctx { opts, format: cli.format, digits: cli.digits };
    match &cli.cmd {
        Cmd::Inspect { net } => cmd_inspect(&ctx, net),
        Cmd::Outcome { net, finals } => cmd_outcome(&ctx, net, finals),
        Cmd::TraceProb { net, trace } => cmd_trace_prob(&ctx, net, trace),
        Cmd::SpecProb { net, dfa } => cmd_spec_prob(&ctx, net, dfa),
        Cmd::Compliance { net, spec } => cmd_compliance(&ctx, net, spec),
        Cmd::Uemsc { net, log, xes, trim } => cmd_uemsc(&ctx, net, log, *xes, *trim),
        Cmd::Sample { net, n, seed, max_len } => cmd_sample(&ctx, net, *n, *seed, *max_len),
    }
}

fn cmd_inspect(ctx: &Ctx, net: &PathBuf) -> slpn::Result<()> {
    let lsp = load_net(net)?;
    let rg = build_reachability_graph(&lsp, ctx.opts.max_states)?;
    warn_all(&rg.warnings);
    let stats = rg.stats();
    let mass = language_mass_with(&lsp, &ctx.opts)?;
    let classes = classify_states(&rg.sts);
    let live = classes.iter().filter(|c| **c == StateClass::Live).count();
    match ctx.format {
        Format::Text => {
            println!(
                "{} states, {} edges, {} final, {} deadlock, {} livelock, {} live",
                stats.state_count,
                stats.edge_count,
                stats.final_count,
                stats.deadlock_count,
                stats.livelock_count,
                live
            );
            println!("bounded within cap: {}", stats.bounded_within_cap);
            println!("language mass {}", ctx.p(mass));
        }
        Format::Json => {
            let out = json!({
                "command": "inspect",
                "net": net,
                "states": stats.state_count,
                "edges": stats.edge_count,
                "finals": stats.final_count,
                "deadlocks": stats.deadlock_count,
                "livelocks": stats.livelock_count,
                "live": live,
                "bounded_within_cap": stats.bounded_within_cap,
                "language_mass": mass,
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
    }
    Ok(())
}

fn cmd_outcome(ctx: &Ctx, net: &PathBuf, finals: &[String]) -> slpn::Result<()> {
    let lsp = load_net(net)?;
    let rg = build_reachability_graph(&lsp, ctx.opts.max_states)?;
    warn_all(&rg.warnings);
    let mut targets = std::collections::BTreeSet::new();
    for spec in finals {
        let marking = lsp.parse_marking(spec)?;
        let state = rg
            .sts
            .states
            .iter()
            .position(|s| matches!(s, slpn::reachability::StateInfo::Marking(m) if *m == marking))
            .ok_or_else(|| {
                slpn::Error::Analysis(format!("{} is not reachable", lsp.format_marking(&marking)))
            })?;
        if !rg.sts.finals.contains(&state) {
            return Err(slpn::Error::Analysis(format!(
                "{} is not a final marking",
                lsp.format_marking(&marking)
            )));
        }
        targets.insert(state);
    }
    let value = state_values_with(&rg.sts, &targets, ctx.opts.solver)?[rg.sts.initial];
    let bracket = ctx
        .opts
        .oracle
        .map(|b| enumerate_bracket(&rg.sts, &targets, b.epsilon, b.max_steps));
    match ctx.format {
        Format::Text => {
            println!("outcome probability {}", ctx.p(value));
            if let Some(b) = bracket {
                println!("bracket [{}, {}]", ctx.p(b.lower), ctx.p(b.upper()));
            }
        }
        Format::Json => {
            let out = json!({
                "command": "outcome",
                "net": net,
                "finals": finals,
                "value": value,
                "bracket": bracket.map(|b| json!({"lower": b.lower, "upper": b.upper()})),
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
    }
    Ok(())
}

fn print_result(ctx: &Ctx, command: &str, net: &PathBuf, result: &AnalysisResult) {
    warn_all(&result.warnings);
    match ctx.format {
        Format::Text => {
            println!("probability {}", ctx.p(result.value));
            if let Some((lo, hi)) = result.bracket {
                println!("bracket [{}, {}]", ctx.p(lo), ctx.p(hi));
            }
            println!(
                "rg states {}, product states {}, residual {:e}, {} ms",
                result.rg_states,
                result.product_states,
                result.residual,
                result.wall_time.as_millis()
            );
        }
        Format::Json => {
            let out = json!({
                "command": command,
                "net": net,
                "value": result.value,
                "bracket": result.bracket.map(|(lo, hi)| json!({"lower": lo, "upper": hi})),
                "rg_states": result.rg_states,
                "product_states": result.product_states,
                "residual": result.residual,
                "wall_time_ms": result.wall_time.as_millis() as u64,
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
    }
}

fn cmd_trace_prob(ctx: &Ctx, net: &PathBuf, trace: &str) -> slpn::Result<()> {
    let lsp = load_net(net)?;
    let trace = parse_trace(trace)?;
    let result = trace_probability_with(&lsp, &trace, &ctx.opts)?;
    print_result(ctx, "trace-prob", net, &result);
    Ok(())
}

fn cmd_spec_prob(ctx: &Ctx, net: &PathBuf, dfa: &PathBuf) -> slpn::Result<()> {
    let lsp = load_net(net)?;
    let dfa = parse_dfa(&std::fs::read_to_string(dfa)?)?;
    let result = spec_probability_with(&lsp, &dfa, &ctx.opts)?;
    print_result(ctx, "spec-prob", net, &result);
    Ok(())
}

fn cmd_compliance(ctx: &Ctx, net: &PathBuf, spec_path: &PathBuf) -> slpn::Result<()> {
    let lsp = load_net(net)?;
    let text = std::fs::read_to_string(spec_path)?;
    let spec = parse_probdeclare(&text, spec_path.parent())?;
    let report = check_compliance_with(&lsp, &spec, &ctx.opts)?;
    warn_all(&report.warnings);
    match ctx.format {
        Format::Text => {
            for v in &report.verdicts {
                println!(
                    "{}: {} {} {} computed {} -> {}",
                    v.name,
                    v.source,
                    v.operator.symbol(),
                    ctx.p(v.threshold),
                    ctx.p(v.computed),
                    if v.holds { "holds" } else { "violated" }
                );
            }
            println!("compliant: {}", if report.compliant { "yes" } else { "no" });
        }
        Format::Json => {
            let out = json!({
                "command": "compliance",
                "net": net,
                "spec": spec_path,
                "language_mass": report.language_mass,
                "constraints": report.verdicts.iter().map(|v| json!({
                    "name": v.name,
                    "source": v.source,
                    "operator": v.operator.symbol(),
                    "threshold": v.threshold,
                    "computed": v.computed,
                    "holds": v.holds,
                })).collect::<Vec<_>>(),
                "compliant": report.compliant,
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
    }
    Ok(())
}

fn trim_log(log: &StochasticLog) -> slpn::Result<StochasticLog> {
    let mut out = StochasticLog::new();
    for (trace, count) in log.entries() {
        let trimmed: slpn::Result<Vec<Label>> = trace
            .iter()
            .map(|l| Label::activity(l.as_activity().unwrap_or_default().trim()))
            .collect();
        out.add(trimmed?, count)?;
    }
    Ok(out)
}

fn cmd_uemsc(ctx: &Ctx, net: &PathBuf, log_path: &PathBuf, xes: bool, trim: bool) -> slpn::Result<()> {
    let lsp = load_net(net)?;
    let text = std::fs::read_to_string(log_path)?;
    let mut log = if xes {
        let (log, warnings) = parse_xes(&text)?;
        warn_all(&warnings);
        log
    } else {
        parse_log_csv(&text)?
    };
    if trim {
        log = trim_log(&log)?;
    }
    let report = uemsc_with(&log, &lsp, &ctx.opts)?;
    match ctx.format {
        Format::Text => {
            for row in &report.rows {
                println!(
                    "{} ; L={} ; P={} ; deficit={}",
                    format_trace(&row.trace),
                    ctx.p(row.log_frequency),
                    ctx.p(row.model_probability),
                    ctx.p(row.contribution)
                );
            }
            println!("uemsc {}", ctx.p(report.value));
        }
        Format::Json => {
            let out = json!({
                "command": "uemsc",
                "net": net,
                "log": log_path,
                "value": report.value,
                "rg_states": report.rg_states,
                "traces": report.rows.iter().map(|r| json!({
                    "trace": r.trace.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                    "log_frequency": r.log_frequency,
                    "model_probability": r.model_probability,
                    "contribution": r.contribution,
                })).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
    }
    Ok(())
}

fn cmd_sample(ctx: &Ctx, net: &PathBuf, n: usize, seed: u64, max_len: usize) -> slpn::Result<()> {
    let lsp = load_net(net)?;
    let report = sample_playout(&lsp, n, seed, max_len);
    if report.excluded > 0 {
        eprintln!("warning: {} run(s) did not complete and were excluded", report.excluded);
    }
    match ctx.format {
        Format::Text => print!("{}", serialize_log_csv(&report.log)),
        Format::Json => {
            let out = json!({
                "command": "sample",
                "net": net,
                "n": n,
                "seed": seed,
                "max_len": max_len,
                "excluded": report.excluded,
                "traces": report.log.entries().map(|(t, c)| json!({
                    "trace": t.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                    "count": c,
                })).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
    }
    Ok(())
}
