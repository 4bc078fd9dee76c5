//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use omac_core::claims::{
    check_ignoramus, check_inf_prop, check_keep_connected, check_remove_round, pattern_levels,
    ClaimReport,
};
use omac_core::families::{
    catalog_corpus, check_inflation, gen_alternating_chain, gen_chain, gen_inflated,
    gen_partitioned, lossy_link, random_corpus, rooted_trees, source_broadcast, ChainSpec,
    InflateSpec, Instance, PartitionSpec,
};
use omac_core::{
    build_rule, consensus_round_bound, decide, decide_with, imposs_witness, oracle_min_horizon,
    simulate::{max_horizon_within, verify_canonical},
    Adversary, CommunicationGraph, DecideOptions, Verdict,
};

const BUDGET: usize = 200_000;
const RANDOM_COUNT: usize = 240;

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn within(&mut self, start: Instant, limit: Duration, what: &str) {
        let elapsed = start.elapsed();
        self.check(elapsed < limit, || {
            format!("{what} took {elapsed:?}, limit {limit:?}")
        });
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn corpus() -> Vec<Instance> {
    let mut out = catalog_corpus().expect("catalog corpus");
    out.extend(random_corpus(RANDOM_COUNT).expect("random corpus"));
    out
}

fn timed_verdict(out: &mut Outcome, label: &str, d: &Adversary, expected: Verdict) -> usize {
    let start = Instant::now();
    let trace = decide(d);
    out.within(start, Duration::from_secs(1), label);
    out.check(trace.verdict() == expected, || {
        format!(
            "{label}: {} instead of {}",
            trace.verdict().as_str(),
            expected.as_str()
        )
    });
    trace.removal_iterations()
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let d = lossy_link(2, 1).unwrap();
    timed_verdict(&mut out, "lossy-link n=2 f=1", &d, Verdict::Impossible);

    let d = rooted_trees(3).unwrap();
    out.check(d.len() == 9, || {
        format!("rooted trees n=3 has {} graphs", d.len())
    });
    timed_verdict(&mut out, "rooted trees n=3", &d, Verdict::Impossible);

    for n in 3..=4 {
        for k in 1..=n {
            let label = format!("source-broadcast n={n} k={k}");
            let d = source_broadcast(n, k).unwrap();
            let removals = timed_verdict(&mut out, &label, &d, Verdict::Solvable);
            out.check(removals == 0, || {
                format!("{label}: {removals} removal iterations")
            });
        }
    }

    let star = CommunicationGraph::from_edges("star", 3, &[(0, 1), (0, 2)]).unwrap();
    let split = CommunicationGraph::from_edges("split", 3, &[(0, 1)]).unwrap();
    let mut non_rooted = vec![
        ("lossy-link n=2 f=2".to_string(), lossy_link(2, 2).unwrap()),
        (
            "star + split".to_string(),
            Adversary::new(vec![star, split.clone()]).unwrap(),
        ),
        (
            "split alone".to_string(),
            Adversary::new(vec![split]).unwrap(),
        ),
    ];
    let mut trees = rooted_trees(3).unwrap().graphs().to_vec();
    trees.push(CommunicationGraph::new("empty", vec![omac_core::ProcessSet::EMPTY; 3]).unwrap());
    non_rooted.push((
        "rooted trees n=3 + empty".into(),
        Adversary::new(trees).unwrap(),
    ));
    for (label, d) in &non_rooted {
        timed_verdict(&mut out, label, d, Verdict::NotRootedInput);
    }
    out.note(format!("{} verdict checks", 2 + 7 + non_rooted.len()));
    out
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    for len in 3..=8 {
        let label = format!("chain N={len}");
        let d = gen_chain(&ChainSpec::minimal(len).unwrap()).unwrap();
        let start = Instant::now();
        let trace = decide(&d);
        out.within(start, Duration::from_secs(1), &label);
        out.check(trace.verdict() == Verdict::Solvable, || {
            format!("{label}: {}", trace.verdict().as_str())
        });
        out.check(trace.removal_iterations() == len - 1, || {
            format!("{label}: {} removal iterations", trace.removal_iterations())
        });
        out.check(trace.c() == len, || {
            format!("{label}: {} final components", trace.c())
        });
        for k in 2..=len {
            let removed = trace.removed_at(k);
            let expected = (len - k, len - k + 1);
            let ok = removed.len() == 1 && (removed[0].edge.u, removed[0].edge.v) == expected;
            out.check(ok, || {
                let got: Vec<_> = removed.iter().map(|r| (r.edge.u, r.edge.v)).collect();
                format!("{label}: level {k} removed {got:?}, expected {expected:?}")
            });
        }
    }
    out.note("N = 3..8");
    out
}

fn oracle_r_max(d: &Adversary, verdict: Verdict) -> usize {
    let cap = match verdict {
        Verdict::Solvable => consensus_round_bound(&decide(d), d.n()).expect("solvable"),
        _ => 64,
    };
    max_horizon_within(d, BUDGET, cap)
}

fn criterion_3(instances: &[Instance]) -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let (mut solvable, mut runs, mut max_gap) = (0, 0, 0);
    for inst in instances {
        let d = &inst.adversary;
        let trace = decide(d);
        let r_max = oracle_r_max(d, trace.verdict());
        let found = match oracle_min_horizon(d, r_max, BUDGET) {
            Ok(h) => h.found(),
            Err(e) => {
                out.check(false, || format!("{}: oracle failed: {e}", inst.name));
                continue;
            }
        };
        let solvable_here = trace.verdict() == Verdict::Solvable;
        out.check(solvable_here == found.is_some(), || {
            format!(
                "{}: {} but oracle found {found:?} (r_max {r_max})",
                inst.name,
                trace.verdict().as_str()
            )
        });
        let (true, Some(h)) = (solvable_here, found) else {
            continue;
        };
        solvable += 1;
        let bound = consensus_round_bound(&trace, d.n()).unwrap();
        out.check(h <= bound, || {
            format!("{}: horizon {h} exceeds bound {bound}", inst.name)
        });
        max_gap = max_gap.max(h);
        match build_rule(d, h, BUDGET).and_then(|rule| verify_canonical(&rule)) {
            Ok(report) => {
                runs += report.runs;
                out.check(report.violations() == 0, || {
                    format!(
                        "{}: {} violations at horizon {h}",
                        inst.name,
                        report.violations()
                    )
                });
            }
            Err(e) => out.check(false, || format!("{}: verification failed: {e}", inst.name)),
        }
    }
    out.within(start, Duration::from_secs(300), "oracle equivalence");
    out.note(format!(
        "{} adversaries, {solvable} solvable, largest min horizon {max_gap}, {runs} runs verified",
        instances.len()
    ));
    out
}

fn criterion_4(instances: &[Instance]) -> Outcome {
    let mut out = Outcome::new();
    let mut reports = [
        ClaimReport::new("ignoramus"),
        ClaimReport::new("removeRound"),
        ClaimReport::new("infProp"),
        ClaimReport::new("keepConnected"),
    ];
    let (mut witnesses, mut non_pair) = (0, 0);
    for inst in instances {
        let d = &inst.adversary;
        let trace = decide(d);
        let full = decide_with(
            d,
            DecideOptions {
                no_early_exit: true,
            },
        );
        for t in [&trace, &full] {
            out.check(t.td() <= 1 << d.n(), || {
                format!("{}: T_D {} > 2^n", inst.name, t.td())
            });
            if let Err(e) = t.check_invariants(d) {
                out.check(false, || format!("{}: {e}", inst.name));
            }
        }
        if trace.verdict() == Verdict::NotRootedInput {
            continue;
        }
        let levels = match pattern_levels(d, 4, BUDGET) {
            Ok(l) => l,
            Err(e) => {
                out.check(false, || format!("{}: {e}", inst.name));
                continue;
            }
        };
        for r in 1..=3 {
            reports[0].absorb(check_ignoramus(d, &levels[r], &levels[r + 1]));
            reports[1].absorb(check_remove_round(d, &levels[r - 1], &levels[r]).unwrap());
            reports[2].absorb(check_inf_prop(d, &levels, r).unwrap());
            reports[3].absorb(check_keep_connected(d, &full, &levels[r]).unwrap());
        }
        if trace.verdict() == Verdict::Impossible {
            for i in 1..=3 {
                match imposs_witness(d, i, BUDGET) {
                    Ok(Some(w)) => {
                        witnesses += 1;
                        if w.graphs.len() != 2 {
                            non_pair += 1;
                        }
                        out.check(w.verify(d).unwrap_or(false), || {
                            format!("{}: witness at round {i} does not verify", inst.name)
                        });
                    }
                    Ok(None) => {
                        out.check(false, || format!("{}: no witness at round {i}", inst.name))
                    }
                    Err(e) => out.check(false, || {
                        format!("{}: witness at round {i}: {e}", inst.name)
                    }),
                }
            }
        }
    }
    for r in &reports {
        out.check(r.holds() && r.checked > 0, || r.to_string());
        out.note(format!("{} {}", r.claim, r.checked));
    }
    out.note(format!(
        "{witnesses} witnesses ({non_pair} need more than two graphs)"
    ));
    out
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut run = |label: &str, f: &dyn Fn() -> Result<(), String>| {
        if let Err(e) = f() {
            out.check(false, || format!("{label}: {e}"));
        }
    };
    let err = |e: omac_core::Error| e.to_string();

    run("minimal chains", &|| {
        for len in 2..=8 {
            gen_chain(&ChainSpec::minimal(len).map_err(err)?).map_err(err)?;
        }
        Ok(())
    });
    run("alternating-partition chain n=12 N=5", &|| {
        let spec = gen_alternating_chain(12, 5).map_err(err)?;
        let trace = decide(&gen_chain(&spec).map_err(err)?);
        if trace.removal_iterations() != 4 || trace.verdict() != Verdict::Solvable {
            return Err(format!("{} removals", trace.removal_iterations()));
        }
        Ok(())
    });
    run("inflated chain", &|| {
        let base = ChainSpec::minimal(3).map_err(err)?;
        for len in 1..=3 {
            let spec = InflateSpec::appended(&base, len).map_err(err)?;
            let inflated = gen_inflated(&spec).map_err(err)?;
            if inflated.first_distinguishing_round != Some(len + 2) {
                return Err(format!(
                    "|P|={len}: first distinguishing round {:?}",
                    inflated.first_distinguishing_round
                ));
            }
            let check = check_inflation(&spec, &inflated, 2, BUDGET).map_err(err)?;
            if check.edges_checked == 0 || !check.violations.is_empty() {
                return Err(format!("|P|={len}: inflation lemma {check:?}"));
            }
        }
        Ok(())
    });
    run("partitioned t=1 m=1", &|| {
        let p =
            gen_partitioned(&PartitionSpec::new(1, 1, None).map_err(err)?, BUDGET).map_err(err)?;
        if p.sigma_connected != Some(true) {
            return Err(format!("sigma connected {:?}", p.sigma_connected));
        }
        Ok(())
    });
    run("partitioned t=2 m=3", &|| {
        let p =
            gen_partitioned(&PartitionSpec::new(2, 3, None).map_err(err)?, BUDGET).map_err(err)?;
        if p.sigma_connected != Some(true) {
            return Err(format!("sigma connected {:?}", p.sigma_connected));
        }
        Ok(())
    });
    out.within(start, Duration::from_secs(30), "construction validators");
    out.note("chains N=2..8, n=12 chain, inflation |P|=1..3, partitions (1,1) and (2,3)");
    out
}

fn omac(args: &[&str]) -> (Vec<u8>, Option<i32>) {
    let output = Command::new(env!("CARGO_BIN_EXE_omac"))
        .args(args)
        .output()
        .expect("run omac");
    let mut bytes = output.stdout;
    bytes.extend_from_slice(&output.stderr);
    (bytes, output.status.code())
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let dir = tempfile::tempdir().expect("temp dir");
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let files = [
        ("chain.json", vec!["generate", "chain", "--N", "4"]),
        (
            "lossy.json",
            vec!["generate", "lossy-link", "--n", "2", "--f", "1"],
        ),
        (
            "random.json",
            vec![
                "generate", "random", "--n", "3", "--count", "3", "--seed", "7",
            ],
        ),
    ];
    let mut invocations: Vec<Vec<String>> = Vec::new();
    for (name, args) in &files {
        let mut a: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        invocations.push(a.clone());
        a.extend(["-o".into(), path(name)]);
        let (_, code) = omac(&a.iter().map(String::as_str).collect::<Vec<_>>());
        out.check(code == Some(0) && Path::new(&path(name)).exists(), || {
            format!("generate {name}")
        });
    }
    for name in ["chain.json", "lossy.json", "random.json"] {
        let f = path(name);
        for args in [
            vec![
                "decide",
                &f,
                "--trace",
                "--no-early-exit",
                "--dot-level",
                "2",
            ],
            vec!["decide", &f, "--format", "json"],
            vec!["oracle", &f, "--budget", "20000"],
            vec!["verify", &f, "--budget", "20000", "--format", "json"],
            vec!["export-dot", &f, "--rounds", "2"],
        ] {
            invocations.push(args.iter().map(|s| s.to_string()).collect());
        }
    }
    invocations.push(vec![
        "simulate".into(),
        path("chain.json"),
        "--pattern".into(),
        "G4.G4.G4.G4.G4".into(),
    ]);
    for args in &invocations {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = omac(&a);
        let second = omac(&a);
        out.check(first == second, || {
            format!("output differs between runs of {args:?}")
        });
        out.check(!first.0.is_empty(), || format!("no output from {args:?}"));
    }
    out.note(format!("{} invocations run twice", invocations.len()));
    out
}

fn main() {
    let instances = corpus();
    let criteria: [(&str, &dyn Fn() -> Outcome); 6] = [
        ("1 verdicts", &criterion_1),
        ("2 chains", &criterion_2),
        ("3 oracle equivalence", &|| criterion_3(&instances)),
        ("4 property suites", &|| criterion_4(&instances)),
        ("5 construction validators", &criterion_5),
        ("6 deterministic output", &criterion_6),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let status = if outcome.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "{status} criterion {name} [{:.2}s] {}",
            start.elapsed().as_secs_f64(),
            outcome.notes.join("; ")
        );
        for f in outcome.failures.iter().take(10) {
            println!("    {f}");
        }
        if !outcome.failures.is_empty() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
