//! Acceptance criteria, one pass/fail line each.
//!
//! Runs as a plain binary so the timing criteria execute sequentially on
//! one thread. Exits non-zero when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lplm_core::bench::{
    cross_check, gen_grammar, gen_sentences, run_bench, BenchKind, BenchSpec, TIERS,
};
use lplm_core::grammar::to_cnf;
use lplm_core::kb::{Answer, KnowledgeBase};
use lplm_core::parser::{parse_best, parse_best_with_stats};
use lplm_core::semantics::{analyze, Analysis};
use lplm_core::term::{apply, read, unify};
use lplm_core::{Exact, ExactGrammar, Grammar, Term};

use common::english::{ADVERBS, OBJECTS, SUBJECTS, VERBS};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn unification_golden() -> Outcome {
    let a = read("foo(a,X)").map_err(|e| e.to_string())?;
    let b = read("foo(Y,b)").map_err(|e| e.to_string())?;
    let t = Instant::now();
    let s = unify(&a, &b).ok_or("terms do not unify")?;
    let (ra, rb) = (apply(&s, &a), apply(&s, &b));
    let dt = t.elapsed();
    ensure!(
        ra.to_string() == "foo(a,b)" && ra == rb,
        "got {ra} and {rb}"
    );
    ensure!(dt < Duration::from_millis(1), "took {dt:?}");
    Ok(format!("foo(a,b) in {dt:?}"))
}

fn parse_golden() -> Outcome {
    let exact: ExactGrammar = common::grammar(common::RUNS);
    let float: Grammar = common::grammar(common::RUNS);
    let t = parse_best(&exact, &["bob", "runs"])
        .map_err(|e| e.to_string())?
        .ok_or("no parse for bob runs")?;
    ensure!(t.to_string() == "s(np(pn(bob)),vp(v(runs)))", "tree {t}");
    ensure!(
        t.prob == Exact::new(9.into(), 2000.into()),
        "exact probability {}",
        t.prob
    );
    let f = parse_best(&float, &["bob", "runs"])
        .map_err(|e| e.to_string())?
        .ok_or("no float parse")?;
    ensure!(
        (f.prob - 0.0045).abs() <= 1e-12,
        "float probability {}",
        f.prob
    );
    let w = parse_best(&exact, &["who", "runs"])
        .map_err(|e| e.to_string())?
        .ok_or("no parse for who runs")?;
    ensure!(w.to_string() == "q(qw(who),v(runs))", "tree {w}");
    ensure!(
        w.prob == Exact::new(1.into(), 20.into()),
        "who runs probability {}",
        w.prob
    );
    Ok("bob runs = 9/2000 exact, who runs = 1/20".into())
}

fn black_bird_session() -> Outcome {
    let t = Instant::now();
    let g: Grammar = common::grammar(common::ENGLISH);
    let mut kb = KnowledgeBase::new();
    let err = |e: lplm_core::kb::KbError| e.to_string();
    kb.add(&g, "the black bird flies bravely").map_err(err)?;
    let answers = [
        kb.query(&g, "how does the black bird fly")
            .map_err(err)?
            .to_string(),
        kb.query(&g, "who flies bravely").map_err(err)?.to_string(),
        kb.query(&g, "does the black bird fly bravely")
            .map_err(err)?
            .to_string(),
    ];
    ensure!(
        answers == ["bravely", "black(bird)", "yes"],
        "answers {answers:?}"
    );
    ensure!(
        kb.remove(&g, "the black bird flies bravely").map_err(err)?,
        "remove found nothing"
    );
    let after = kb
        .query(&g, "does the black bird fly bravely")
        .map_err(err)?
        .to_string();
    ensure!(after == "no", "after removal: {after}");
    let dt = t.elapsed();
    ensure!(dt < Duration::from_millis(100), "took {dt:?}");
    Ok(format!("bravely / black(bird) / yes, then no, in {dt:?}"))
}

fn grounding() -> Outcome {
    let g: Grammar = common::grammar(common::ENGLISH);
    let facts = [
        "furosemide causes temporary hearing loss",
        "fir trees can grow in human lungs",
    ];
    let questions = [
        "what causes temporary hearing loss",
        "what can grow in human lungs",
    ];
    let mut kb = KnowledgeBase::new();
    for f in facts {
        kb.add(&g, f).map_err(|e| e.to_string())?;
    }
    let mut sources = Vec::new();
    for (q, expected) in questions.iter().zip(facts) {
        match kb.query(&g, q).map_err(|e| e.to_string())? {
            Answer::Wh(b) => {
                ensure!(b.len() == 1 && b[0].source == expected, "{q}: {b:?}");
                sources.push(b[0].source.clone());
            }
            other => return Err(format!("{q}: {other:?}")),
        }
    }
    ensure!(sources == facts, "sources {sources:?}");
    Ok("furosemide / fir_trees, each grounded in its own fact".into())
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut cases = 0;
    let mut per = Vec::new();
    for (name, text) in common::FIXTURES {
        let g: ExactGrammar = common::grammar(text);
        let sentences = common::derivable_sentences(&g, 8);
        for s in &sentences {
            let best = parse_best(&g, s)
                .map_err(|e| e.to_string())?
                .map(|t| t.prob);
            let oracle = common::enumerated_best(&g, s);
            ensure!(
                best.is_some() && best == oracle,
                "{name} {s:?}: tabled {best:?}, enumeration {oracle:?}"
            );
        }
        cases += sentences.len();
        per.push(format!("{name} {}", sentences.len()));
    }
    let dt = t.elapsed();
    ensure!(cases >= 500, "only {cases} cases");
    ensure!(dt < Duration::from_secs(60), "took {dt:?}");
    Ok(format!(
        "{cases} sentences ({}) in {dt:.1?}",
        per.join(", ")
    ))
}

fn cross_parser() -> Outcome {
    let mut cases = 0;
    for kind in BenchKind::ALL {
        for tier in TIERS {
            for seed in [42, 7, 1] {
                let g: Grammar = gen_grammar(kind, tier, seed);
                let cnf = to_cnf(&g).map_err(|e| e.to_string())?;
                let lengths: Vec<usize> = (1..=8).collect();
                for s in gen_sentences(&g, &lengths, seed.wrapping_add(1)).sentences {
                    cross_check(&g, &cnf, &s, 1e-9).map_err(|e| e.to_string())?;
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} sentences over 36 grammars"))
}

fn tabling_bound() -> Outcome {
    let mut worst = 0.0f64;
    for kind in BenchKind::ALL {
        let g: Grammar = gen_grammar(kind, 2, 42);
        let generated = gen_sentences(&g, &[10, 20, 30], 43);
        ensure!(
            generated.skipped.is_empty(),
            "{kind}: lengths {:?} not derivable",
            generated.skipped
        );
        for s in &generated.sentences {
            let (tree, stats) = parse_best_with_stats(&g, s).map_err(|e| e.to_string())?;
            ensure!(tree.is_some(), "{kind}: no parse at length {}", s.len());
            let bound = g.nonterminals().len() * (s.len() + 1);
            ensure!(
                stats.expansions <= bound,
                "{kind} n={}: {} expansions > {bound}",
                s.len(),
                stats.expansions
            );
            worst = worst.max(stats.expansions as f64 / bound as f64);
        }
    }
    Ok(format!("max expansions/bound = {worst:.3}"))
}

fn scaling() -> Outcome {
    let t = Instant::now();
    let mut details = Vec::new();
    let mut failures = Vec::new();
    for kind in BenchKind::ALL {
        let mut spec = BenchSpec::new(kind, 3, 42);
        spec.lengths = (5..=50).collect();
        let r = run_bench(&spec).map_err(|e| e.to_string())?;
        let fit = r.fit.ok_or("no fit")?;
        let at = |n: usize| r.row(n).map(|row| row.tabled.mean_s);
        let (t20, t40) = (
            at(20).ok_or("no row for 20")?,
            at(40).ok_or("no row for 40")?,
        );
        let ratio = t40 / t20;
        let complete =
            r.rows.len() == spec.lengths.len() && r.rows.iter().all(|row| row.complete());
        details.push(format!(
            "{kind}: {} rules, R2={:.3}, t40/t20={ratio:.2}",
            r.rule_count, fit.r2
        ));
        if fit.r2 < 0.9 || ratio > 3.0 || !complete {
            failures.push(format!(
                "{kind} (R2={:.3}, ratio={ratio:.2}, complete={complete})",
                fit.r2
            ));
        }
    }
    // left recursion terminates across all tiers and lengths
    for tier in TIERS {
        let g: Grammar = gen_grammar(BenchKind::LeftRecursive, tier, 42);
        let lengths: Vec<usize> = (1..=50).collect();
        for s in gen_sentences(&g, &lengths, 43).sentences {
            ensure!(
                parse_best(&g, &s).map_err(|e| e.to_string())?.is_some(),
                "left recursive tier {tier} n={}",
                s.len()
            );
        }
    }
    let dt = t.elapsed();
    if dt > Duration::from_secs(600) {
        failures.push(format!("took {dt:?}"));
    }
    if failures.is_empty() {
        Ok(format!("{} in {dt:.1?}", details.join("; ")))
    } else {
        Err(format!(
            "{}; all: {}",
            failures.join("; "),
            details.join("; ")
        ))
    }
}

/// A random statement with its yes/no and `who` questions.
fn statement(rng: &mut ChaCha8Rng) -> (String, String, String) {
    let subject = SUBJECTS[rng.gen_range(0..SUBJECTS.len())];
    let (third, base) = VERBS[rng.gen_range(0..VERBS.len())];
    let mut rest = Vec::new();
    if rng.gen_bool(0.5) {
        rest.push(OBJECTS[rng.gen_range(0..OBJECTS.len())]);
    }
    if rng.gen_bool(0.5) {
        rest.push(ADVERBS[rng.gen_range(0..ADVERBS.len())]);
    }
    let rest = rest.join(" ");
    let join = |words: &[&str]| {
        words
            .iter()
            .filter(|w| !w.is_empty())
            .copied()
            .collect::<Vec<_>>()
            .join(" ")
    };
    (
        join(&[subject, third, &rest]),
        join(&["does", subject, base, &rest]),
        join(&["who", third, &rest]),
    )
}

fn kb_properties() -> Outcome {
    let g: Grammar = common::grammar(common::ENGLISH);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut kb = KnowledgeBase::new();
    // reference model: (term, source) in insertion order
    let mut model: Vec<(Term, String)> = Vec::new();
    let term_of = |text: &str| -> Result<Term, String> {
        match analyze(&g, text).map_err(|e| format!("{text}: {e}"))? {
            Analysis::Statement(st) => Ok(st.term),
            Analysis::Question(_) => Err(format!("{text}: not a statement")),
        }
    };
    let mut counts = [0usize; 4];
    for op in 0..1000 {
        let (text, yes_no, question) = statement(&mut rng);
        let term = term_of(&text)?;
        match rng.gen_range(0..10) {
            0..=3 => {
                let before = kb.len();
                let present = model.iter().any(|(t, _)| *t == term);
                kb.add(&g, &text).map_err(|e| e.to_string())?;
                if present {
                    ensure!(kb.len() == before, "op {op}: duplicate add changed the KB");
                    counts[1] += 1;
                } else {
                    model.push((term.clone(), text.clone()));
                }
                counts[0] += 1;
            }
            4..=5 => {
                let target = if !model.is_empty() && rng.gen_bool(0.7) {
                    model[rng.gen_range(0..model.len())].1.clone()
                } else {
                    text.clone()
                };
                let t = term_of(&target)?;
                let expected = model.iter().position(|(m, _)| *m == t);
                let removed = kb.remove(&g, &target).map_err(|e| e.to_string())?;
                ensure!(
                    removed == expected.is_some(),
                    "op {op}: remove {target} returned {removed}"
                );
                if let Some(i) = expected {
                    model.remove(i);
                }
                counts[2] += 1;
            }
            _ => {
                let snapshot = kb.clone();
                if rng.gen_bool(0.5) {
                    let want = model.iter().any(|(t, _)| *t == term);
                    let got = kb.query(&g, &yes_no).map_err(|e| e.to_string())?;
                    ensure!(
                        got == Answer::YesNo(want),
                        "op {op}: {yes_no} gave {got:?}, expected {want}"
                    );
                } else {
                    // every fact agreeing on all but the subject
                    let Term::Compound {
                        functor: name,
                        args,
                    } = &term
                    else {
                        return Err(format!("unexpected term {term}"));
                    };
                    let expected: Vec<(Term, String)> = model
                        .iter()
                        .filter_map(|(t, src)| match t {
                            Term::Compound {
                                functor: n,
                                args: a,
                            } if n == name && a.len() == args.len() && a[1..] == args[1..] => {
                                Some((a[0].clone(), src.clone()))
                            }
                            _ => None,
                        })
                        .collect();
                    match kb.query(&g, &question).map_err(|e| e.to_string())? {
                        Answer::Wh(b) => {
                            let got: Vec<(Term, String)> =
                                b.into_iter().map(|b| (b.term, b.source)).collect();
                            ensure!(
                                got == expected,
                                "op {op}: {question} gave {got:?}, expected {expected:?}"
                            );
                        }
                        other => return Err(format!("op {op}: {question} gave {other:?}")),
                    }
                }
                ensure!(kb == snapshot, "op {op}: query changed the KB");
                counts[3] += 1;
            }
        }
        ensure!(kb.index_is_consistent(), "op {op}: index inconsistent");
        let facts: Vec<(Term, String)> = kb
            .facts()
            .iter()
            .map(|f| (f.term.clone(), f.source.clone()))
            .collect();
        ensure!(
            facts == model,
            "op {op}: KB diverged from the reference model"
        );
        if op % 100 == 99 {
            let mut buf = Vec::new();
            kb.save(&mut buf).map_err(|e| e.to_string())?;
            let loaded = KnowledgeBase::load(&buf[..]).map_err(|e| e.to_string())?;
            ensure!(
                loaded == kb && loaded.index_is_consistent(),
                "op {op}: save/load round trip differs"
            );
        }
    }
    Ok(format!(
        "1000 ops: {} adds ({} duplicates), {} removes, {} queries; final size {}",
        counts[0],
        counts[1],
        counts[2],
        counts[3],
        kb.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("unification golden", unification_golden),
        ("parse-probability golden", parse_golden),
        ("black bird session golden", black_bird_session),
        ("grounding golden", grounding),
        ("oracle equivalence", oracle_equivalence),
        ("cross-parser equivalence", cross_parser),
        ("tabling bound", tabling_bound),
        ("scaling reproduction", scaling),
        ("kb properties", kb_properties),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", 9 - failed, 9);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
