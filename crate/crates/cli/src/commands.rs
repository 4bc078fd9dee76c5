use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use omac_core::families::{self, ChainSpec, InflateSpec, PartitionSpec};
use omac_core::patterns::{pattern_names, PatternLevel};
use omac_core::simulate::{max_horizon_within, verify_canonical};
use omac_core::{
    build_rule, consensus_round_bound, decide_with, oracle_min_horizon, run, Adversary,
    AdversaryDocument, DecideOptions, Error, MinHorizon, Pattern, RefinementTrace, Verdict,
};

use crate::{
    DecideArgs, ExportDotArgs, Family, Format, GenerateArgs, OracleArgs, SimulateArgs, VerifyArgs,
};

const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;

/// Largest horizon the oracle tries when no bound applies.
const HORIZON_CAP: usize = 64;

pub fn error_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

fn load(path: &Path) -> Result<Adversary> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let doc = AdversaryDocument::from_json(&text)
        .with_context(|| format!("{} is not an adversary document", path.display()))?;
    Ok(doc.to_adversary()?)
}

fn names(d: &Adversary, graphs: &[usize]) -> Vec<String> {
    graphs
        .iter()
        .map(|&g| d.graph(g).name().to_string())
        .collect()
}

fn emit_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn bound_of(trace: &RefinementTrace, n: usize) -> Option<usize> {
    consensus_round_bound(trace, n).ok()
}

#[derive(Serialize)]
struct RemovedJson {
    edge: [String; 2],
    label: Vec<usize>,
    lost_guards: Vec<String>,
}

#[derive(Serialize)]
struct LevelJson {
    level: usize,
    edges: usize,
    removed: Vec<RemovedJson>,
}

#[derive(Serialize)]
struct DecideJson {
    verdict: &'static str,
    td: usize,
    removal_iterations: usize,
    c: usize,
    bound: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<LevelJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dot: Option<String>,
}

fn level_details(d: &Adversary, trace: &RefinementTrace) -> Vec<LevelJson> {
    trace
        .levels()
        .iter()
        .enumerate()
        .map(|(k, level)| LevelJson {
            level: k + 1,
            edges: level.edge_count(),
            removed: trace
                .removed_at(k + 1)
                .iter()
                .map(|r| RemovedJson {
                    edge: [
                        d.graph(r.edge.u).name().to_string(),
                        d.graph(r.edge.v).name().to_string(),
                    ],
                    label: r.edge.label.ids(),
                    lost_guards: names(d, &r.lost_guards),
                })
                .collect(),
        })
        .collect()
}

fn level_dot(d: &Adversary, trace: &RefinementTrace, i: usize) -> Result<String> {
    match trace.level(i) {
        Some(level) => Ok(level.to_dot(&format!("N{i}"), &d.names())),
        None => bail!(
            "level {i} does not exist (the trace has {} levels)",
            trace.levels().len()
        ),
    }
}

pub fn decide(args: &DecideArgs, out: &mut dyn Write) -> Result<u8> {
    let d = load(&args.file)?;
    let trace = decide_with(
        &d,
        DecideOptions {
            no_early_exit: args.no_early_exit,
        },
    );
    let dot = args
        .dot_level
        .map(|i| level_dot(&d, &trace, i))
        .transpose()?;
    let report = DecideJson {
        verdict: trace.verdict().as_str(),
        td: trace.td(),
        removal_iterations: trace.removal_iterations(),
        c: trace.c(),
        bound: bound_of(&trace, d.n()),
        levels: args.trace.then(|| level_details(&d, &trace)),
        dot,
    };
    match args.format {
        Format::Json => emit_json(out, &report)?,
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "verdict: {}", report.verdict)?;
            writeln!(s, "T_D: {}", report.td)?;
            writeln!(s, "removal_iterations: {}", report.removal_iterations)?;
            writeln!(s, "c: {}", report.c)?;
            match report.bound {
                Some(b) => writeln!(s, "bound: {b}")?,
                None => writeln!(s, "bound: none")?,
            }
            for level in report.levels.iter().flatten() {
                writeln!(s, "N{}: {} edges", level.level, level.edges)?;
                for r in &level.removed {
                    let guards = if r.lost_guards.is_empty() {
                        "none".to_string()
                    } else {
                        r.lost_guards.join(", ")
                    };
                    let label: Vec<String> = r.label.iter().map(|p| format!("p{p}")).collect();
                    writeln!(
                        s,
                        "  removed {} -- {} label {{{}}} guards outside component: {guards}",
                        r.edge[0],
                        r.edge[1],
                        label.join(",")
                    )?;
                }
            }
            if let Some(dot) = &report.dot {
                s.push_str(dot);
            }
            out.write_all(s.as_bytes())?;
        }
    }
    Ok(match trace.verdict() {
        Verdict::Solvable => 0,
        _ => 1,
    })
}

#[derive(Serialize)]
struct OracleJson {
    verdict: &'static str,
    rmax: usize,
    min_horizon: Option<usize>,
    bound: Option<usize>,
    consistency: &'static str,
}

pub fn oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<u8> {
    let d = load(&args.file)?;
    let trace = decide_with(&d, DecideOptions::default());
    let bound = bound_of(&trace, d.n());
    let rmax = args
        .rmax
        .or(bound)
        .unwrap_or_else(|| max_horizon_within(&d, args.budget, HORIZON_CAP));
    let found = oracle_min_horizon(&d, rmax, args.budget)?;
    let consistency = match (trace.verdict(), found, bound) {
        (Verdict::Solvable, MinHorizon::Found(r), Some(b)) if r <= b => "AGREES",
        (Verdict::Solvable, MinHorizon::NoneUpTo(r), Some(b)) if r < b => "INCONCLUSIVE",
        (Verdict::Solvable, _, _) => "DISAGREES",
        (_, MinHorizon::NoneUpTo(_), _) => "AGREES",
        (_, MinHorizon::Found(_), _) => "DISAGREES",
    };
    let report = OracleJson {
        verdict: trace.verdict().as_str(),
        rmax,
        min_horizon: found.found(),
        bound,
        consistency,
    };
    match args.format {
        Format::Json => emit_json(out, &report)?,
        Format::Text => {
            writeln!(out, "verdict: {}", report.verdict)?;
            match found {
                MinHorizon::Found(r) => writeln!(out, "oracle: MinHorizon({r})")?,
                MinHorizon::NoneUpTo(r) => writeln!(out, "oracle: NoneUpTo({r})")?,
            }
            match bound {
                Some(b) => writeln!(out, "bound: {b}")?,
                None => writeln!(out, "bound: none")?,
            }
            writeln!(out, "{consistency}")?;
        }
    }
    Ok(u8::from(consistency == "DISAGREES"))
}

#[derive(Serialize)]
struct WitnessJson {
    horizon: usize,
    component: usize,
    size: usize,
    patterns: Vec<String>,
}

#[derive(Serialize)]
struct VerifyJson {
    verdict: &'static str,
    horizon: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<omac_core::VerifyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_violation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    non_broadcastable: Option<WitnessJson>,
}

fn default_horizon(d: &Adversary, trace: &RefinementTrace, budget: usize) -> Result<usize> {
    match bound_of(trace, d.n()) {
        Some(b) => {
            let cap = b.min(max_horizon_within(d, budget, b));
            Ok(oracle_min_horizon(d, cap, budget)?.found().unwrap_or(b))
        }
        None => Ok(trace
            .td()
            .max(1)
            .min(max_horizon_within(d, budget, HORIZON_CAP))),
    }
}

pub fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<u8> {
    let d = load(&args.file)?;
    let trace = decide_with(&d, DecideOptions::default());
    let horizon = match args.horizon {
        Some(h) => h,
        None => default_horizon(&d, &trace, args.budget)?,
    };
    let mut report = VerifyJson {
        verdict: trace.verdict().as_str(),
        horizon,
        report: None,
        first_violation: None,
        non_broadcastable: None,
    };
    let code = match build_rule(&d, horizon, args.budget) {
        Ok(rule) => {
            let r = verify_canonical(&rule)?;
            report.first_violation = r.first_violation.as_ref().map(|p| p.render(&d));
            let code = u8::from(r.violations() > 0);
            report.report = Some(r);
            code
        }
        Err(Error::NonBroadcastableComponent {
            horizon,
            component,
            size,
            witnesses,
        }) => {
            report.non_broadcastable = Some(WitnessJson {
                horizon,
                component,
                size,
                patterns: witnesses.iter().map(|p| p.render(&d)).collect(),
            });
            1
        }
        Err(e) => return Err(e.into()),
    };
    match args.format {
        Format::Json => emit_json(out, &report)?,
        Format::Text => {
            writeln!(out, "verdict: {}", report.verdict)?;
            writeln!(out, "horizon: {horizon}")?;
            if let Some(r) = &report.report {
                writeln!(out, "runs: {}", r.runs)?;
                writeln!(out, "agreement violations: {}", r.agreement_violations)?;
                writeln!(out, "validity violations: {}", r.validity_violations)?;
                writeln!(out, "termination violations: {}", r.termination_violations)?;
                writeln!(out, "cross-run violations: {}", r.cross_run_violations)?;
                if let Some(p) = &report.first_violation {
                    writeln!(out, "first violation: {p}")?;
                }
            }
            if let Some(w) = &report.non_broadcastable {
                writeln!(
                    out,
                    "no common broadcaster: component {} of I(D^{}) with {} patterns, e.g. {}",
                    w.component,
                    w.horizon,
                    w.size,
                    w.patterns.join(", ")
                )?;
            }
        }
    }
    Ok(code)
}

#[derive(Serialize)]
struct SimulateJson {
    pattern: String,
    inputs: Vec<u64>,
    decisions: Vec<Option<usize>>,
    values: Vec<Option<u64>>,
    agreement: bool,
    validity: bool,
    termination: bool,
}

fn ok(flag: bool) -> &'static str {
    if flag {
        "ok"
    } else {
        "VIOLATED"
    }
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<u8> {
    let d = load(&args.file)?;
    let sigma = Pattern::parse(&d, &args.pattern)?;
    let inputs = args
        .inputs
        .clone()
        .unwrap_or_else(|| (1..=d.n() as u64).collect());
    if inputs.len() != d.n() {
        bail!("expected {} inputs, got {}", d.n(), inputs.len());
    }
    let rule = match build_rule(&d, sigma.len(), args.budget) {
        Ok(rule) => rule,
        Err(Error::NonBroadcastableComponent {
            horizon,
            component,
            size,
            witnesses,
        }) => {
            let w = WitnessJson {
                horizon,
                component,
                size,
                patterns: witnesses.iter().map(|p| p.render(&d)).collect(),
            };
            match args.format {
                Format::Json => emit_json(out, &serde_json::json!({ "non_broadcastable": w }))?,
                Format::Text => writeln!(
                    out,
                    "no decision rule at horizon {horizon}: component {component} of I(D^{horizon}) \
                     with {size} patterns has no common broadcaster, e.g. {}",
                    w.patterns.join(", ")
                )?,
            }
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    let r = run(&rule, &sigma, &inputs)?;
    let report = SimulateJson {
        pattern: sigma.render(&d),
        inputs,
        decisions: r.decisions.iter().map(|o| o.map(|b| b + 1)).collect(),
        values: r.values.clone(),
        agreement: r.agreement,
        validity: r.validity,
        termination: r.termination,
    };
    match args.format {
        Format::Json => emit_json(out, &report)?,
        Format::Text => {
            writeln!(out, "pattern: {}", report.pattern)?;
            writeln!(out, "{:<8} {:<6} {:<7} value", "process", "input", "adopts")?;
            for p in 0..d.n() {
                let adopts = report.decisions[p].map_or("-".to_string(), |b| format!("p{b}"));
                let value = report.values[p].map_or("-".to_string(), |v| v.to_string());
                writeln!(
                    out,
                    "{:<8} {:<6} {:<7} {value}",
                    format!("p{}", p + 1),
                    report.inputs[p],
                    adopts
                )?;
            }
            writeln!(out, "agreement: {}", ok(r.agreement))?;
            writeln!(out, "validity: {}", ok(r.validity))?;
            writeln!(out, "termination: {}", ok(r.termination))?;
        }
    }
    Ok(u8::from(!r.ok()))
}

fn generate_family(family: &Family) -> Result<Adversary> {
    Ok(match *family {
        Family::Chain {
            len,
            alternating_n: None,
        } => families::gen_chain(&ChainSpec::minimal(len)?)?,
        Family::Chain {
            len,
            alternating_n: Some(n),
        } => families::gen_chain(&families::gen_alternating_chain(n, len)?)?,
        Family::Inflated { len, path } => {
            families::gen_inflated(&InflateSpec::appended(&ChainSpec::minimal(len)?, path)?)?
                .adversary
        }
        Family::Partitioned { t, m, n } => {
            families::gen_partitioned(&PartitionSpec::new(t, m, n)?, omac_core::DEFAULT_BUDGET)?
                .adversary
        }
        Family::RootedTrees { n } => families::rooted_trees(n)?,
        Family::SourceBroadcast { n, k } => families::source_broadcast(n, k)?,
        Family::LossyLink { n, f } => families::lossy_link(n, f)?,
        Family::Random { n, count, seed } => families::random_rooted(n, count, seed)?,
    })
}

pub fn generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<u8> {
    let d = generate_family(&args.family)?;
    let json = AdversaryDocument::from_adversary(&d).to_json();
    match &args.output {
        Some(path) => {
            fs::write(path, json).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => out.write_all(json.as_bytes())?,
    }
    Ok(0)
}

pub fn export_dot(args: &ExportDotArgs, out: &mut dyn Write) -> Result<u8> {
    let d = load(&args.file)?;
    let dot = match args.rounds {
        Some(r) => {
            let level = PatternLevel::enumerate(&d, r, args.budget)?;
            level
                .indist_graph()
                .to_dot(&format!("I{r}"), &pattern_names(&d, &level))
        }
        None => {
            let trace = decide_with(
                &d,
                DecideOptions {
                    no_early_exit: true,
                },
            );
            if trace.verdict() == Verdict::NotRootedInput {
                omac_core::single_round_indist(&d).to_dot("N1", &d.names())
            } else {
                level_dot(&d, &trace, args.level.unwrap_or(1))?
            }
        }
    };
    out.write_all(dot.as_bytes())?;
    Ok(0)
}
