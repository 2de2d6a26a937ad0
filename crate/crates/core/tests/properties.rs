mod common;

use std::collections::HashMap;

use proptest::prelude::*;

use lplm_core::bench::{cyk_viterbi, relative_error};
use lplm_core::grammar::{load_grammar, to_cnf, Grammar, GrammarError};
use lplm_core::kb::{Answer, KnowledgeBase};
use lplm_core::parser::{parse_best, ParseTree};
use lplm_core::semantics::{analyze, Analysis, GoalKind};
use lplm_core::term::{apply, read, render, unify};
use lplm_core::{Exact, ExactGrammar, Probability, Term, Var};

use common::english::{ADVERBS, OBJECTS, SUBJECTS, VERBS};

fn term_strategy() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Term::atom),
        prop::sample::select(vec!["X", "Y", "Z"]).prop_map(Term::var),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        (
            prop::sample::select(vec!["f", "g"]),
            prop::collection::vec(inner, 1..=3),
        )
            .prop_map(|(f, args)| Term::compound(f, args))
    })
}

fn ground_term_strategy() -> impl Strategy<Value = Term> {
    let leaf = prop::sample::select(vec!["a", "bob", "hearing_loss", "x1"]).prop_map(Term::atom);
    leaf.prop_recursive(4, 24, 3, |inner| {
        (
            prop::sample::select(vec!["f", "run", "black"]),
            prop::collection::vec(inner, 1..=3),
        )
            .prop_map(|(f, args)| Term::compound(f, args))
    })
}

/// Renames variables to `V0, V1, ...` in order of first occurrence.
fn canonical(t: &Term) -> Term {
    fn go(t: &Term, names: &mut HashMap<Var, usize>) -> Term {
        match t {
            Term::Atom(a) => Term::atom(a.clone()),
            Term::Var(v) => {
                let next = names.len();
                let i = *names.entry(v.clone()).or_insert(next);
                Term::var(format!("V{i}"))
            }
            Term::Compound { functor, args } => {
                Term::compound(functor.clone(), args.iter().map(|a| go(a, names)).collect())
            }
        }
    }
    go(t, &mut HashMap::new())
}

proptest! {
    #[test]
    fn unifier_makes_terms_equal(a in term_strategy(), b in term_strategy()) {
        if let Some(s) = unify(&a, &b) {
            prop_assert_eq!(apply(&s, &a), apply(&s, &b));
        }
    }

    #[test]
    fn unification_is_symmetric(a in term_strategy(), b in term_strategy()) {
        let ab = unify(&a, &b);
        let ba = unify(&b, &a);
        prop_assert_eq!(ab.is_some(), ba.is_some());
        if let (Some(s1), Some(s2)) = (ab, ba) {
            prop_assert_eq!(canonical(&apply(&s1, &a)), canonical(&apply(&s2, &a)));
        }
    }

    #[test]
    fn unifier_is_idempotent(a in term_strategy(), b in term_strategy()) {
        if let Some(s) = unify(&a, &b) {
            for t in [&a, &b] {
                let once = apply(&s, t);
                prop_assert_eq!(apply(&s, &once), once);
            }
        }
    }

    #[test]
    fn unifying_a_term_with_itself_binds_nothing_new(a in term_strategy()) {
        let s = unify(&a, &a).expect("a term unifies with itself");
        prop_assert_eq!(apply(&s, &a), a);
    }

    #[test]
    fn occurs_check_rejects_cycles(t in term_strategy()) {
        let x = Term::var("X");
        if t != x && t.contains_var(&Var::new("X")) {
            prop_assert!(unify(&x, &t).is_none());
        }
    }

    #[test]
    fn render_read_round_trip(t in ground_term_strategy()) {
        prop_assert_eq!(read(&render(&t)).unwrap(), t);
    }

    #[test]
    fn render_read_round_trip_with_variables(t in term_strategy()) {
        prop_assert_eq!(read(&render(&t)).unwrap(), t);
    }
}

/// Line numbers of rules with an explicit probability.
fn weighted_lines(text: &str) -> Vec<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| (l.starts_with("prod ") || l.starts_with("lex ")) && l.contains(" @ "))
        .map(|(i, _)| i)
        .collect()
}

fn perturb(text: &str, line: usize, up: bool) -> String {
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            if i != line {
                return l.to_string();
            }
            let (head, p) = l.rsplit_once(" @ ").expect("weighted line");
            let p: f64 = p.trim().parse().expect("decimal");
            let q = if up && p + 1e-3 <= 1.0 {
                p + 1e-3
            } else {
                p - 1e-3
            };
            format!("{head} @ {q}")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

proptest! {
    #[test]
    fn perturbed_probability_is_rejected(which in 0usize..3, pick in any::<prop::sample::Index>(), up in any::<bool>()) {
        let text = [common::SLEEPS, common::AMBIGUOUS, common::ATTACHMENT][which];
        let lines = weighted_lines(text);
        let line = lines[pick.index(lines.len())];
        let mutated = perturb(text, line, up);
        prop_assert!(load_grammar::<f64>(text).is_ok());
        let is_not_normalized = matches!(load_grammar::<f64>(&mutated), Err(GrammarError::NotNormalized { .. }));
        prop_assert!(is_not_normalized);
        let exact_rejected = matches!(load_grammar::<Exact>(&mutated), Err(GrammarError::NotNormalized { .. }));
        prop_assert!(exact_rejected);
    }
}

#[test]
fn undefined_symbol_is_rejected() {
    let text = common::ATTACHMENT.replace("prod pp -> p np @ 1.0", "prod pp -> p nq @ 1.0");
    assert!(matches!(
        load_grammar::<f64>(&text),
        Err(GrammarError::UndefinedSymbol { .. })
    ));
}

fn vocabulary<P: Probability>(g: &Grammar<P>) -> Vec<String> {
    let mut words: Vec<String> = g.lexicon().iter().map(|e| e.surface.clone()).collect();
    words.sort();
    words.dedup();
    words
}

fn random_sentence(g: &Grammar<f64>) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vocabulary(g)), 1..=8)
}

fn cnf_agrees(
    g: &Grammar<f64>,
    cnf: &Grammar<f64>,
    tokens: &[String],
) -> Result<(), TestCaseError> {
    let tabled = parse_best(g, tokens).unwrap().map(|t| t.prob);
    let cyk = cyk_viterbi(cnf, tokens).unwrap().map(|(p, _)| p);
    prop_assert_eq!(
        tabled.is_some(),
        cyk.is_some(),
        "acceptance differs on {:?}",
        tokens
    );
    if let (Some(a), Some(b)) = (tabled, cyk) {
        prop_assert!(
            relative_error(a, b) <= 1e-12,
            "{:?}: {} vs {}",
            tokens,
            a,
            b
        );
    }
    Ok(())
}

proptest! {
    #[test]
    fn cnf_preserves_language_and_probability_attachment(tokens in random_sentence(&common::grammar(common::ATTACHMENT))) {
        let g: Grammar<f64> = common::grammar(common::ATTACHMENT);
        cnf_agrees(&g, &to_cnf(&g).unwrap(), &tokens)?;
    }

    #[test]
    fn cnf_preserves_language_and_probability_english(tokens in random_sentence(&common::grammar(common::ENGLISH))) {
        let g: Grammar<f64> = common::grammar(common::ENGLISH);
        cnf_agrees(&g, &to_cnf(&g).unwrap(), &tokens)?;
    }

    #[test]
    fn tabled_matches_enumeration_on_random_strings(tokens in random_sentence(&common::grammar(common::ATTACHMENT))) {
        let g: ExactGrammar = common::grammar(common::ATTACHMENT);
        let best = parse_best(&g, &tokens).unwrap().map(|t| t.prob);
        prop_assert_eq!(best, common::enumerated_best(&g, &tokens));
    }
}

#[test]
fn cnf_preserves_every_derivable_sentence() {
    for (name, text) in common::FIXTURES {
        let g: Grammar<f64> = common::grammar(text);
        let cnf = to_cnf(&g).unwrap();
        assert!(cnf.productions().iter().all(|p| p.rhs.len() <= 2), "{name}");
        for s in common::derivable_sentences(&g, 8) {
            cnf_agrees(&g, &cnf, &s).unwrap();
        }
    }
}

/// Product of the rule probabilities used in `t`, checked node by node.
fn recomputed(g: &ExactGrammar, t: &ParseTree<Exact>) -> Exact {
    let p = match t.word() {
        Some(w) => g
            .lexical_prob(&t.label, &w.token)
            .expect("lexical rule exists"),
        None => {
            let labels: Vec<&str> = t.children().iter().map(|c| c.label.as_str()).collect();
            let rule = g
                .production_prob(&t.label, &labels)
                .expect("production exists");
            t.children()
                .iter()
                .fold(rule, |acc, c| acc * recomputed(g, c))
        }
    };
    assert_eq!(p, t.prob, "node {}", t.label);
    p
}

#[test]
fn tree_probability_is_the_product_of_its_rules() {
    for (_, text) in common::FIXTURES {
        let g: ExactGrammar = common::grammar(text);
        for s in common::derivable_sentences(&g, 6) {
            let t = parse_best(&g, &s).unwrap().unwrap();
            assert_eq!(t.leaves(), s.iter().map(String::as_str).collect::<Vec<_>>());
            recomputed(&g, &t);
        }
    }
}

#[test]
fn parsing_is_deterministic() {
    let g: Grammar<f64> = common::grammar(common::AMBIGUOUS);
    for s in common::derivable_sentences(&g, 7) {
        let a = parse_best(&g, &s).unwrap();
        let b = parse_best(&g, &s).unwrap();
        assert_eq!(a, b);
    }
}

fn english_statement() -> impl Strategy<Value = (String, String, String, String)> {
    (
        prop::sample::select(SUBJECTS.to_vec()),
        prop::sample::select(VERBS.to_vec()),
        prop::option::of(prop::sample::select(OBJECTS.to_vec())),
        prop::option::of(prop::sample::select(ADVERBS.to_vec())),
    )
        .prop_map(|(subject, (third, base), object, adverb)| {
            let rest: Vec<&str> = object.into_iter().chain(adverb).collect();
            let rest = rest.join(" ");
            let join = |w: &[&str]| {
                w.iter()
                    .filter(|x| !x.is_empty())
                    .copied()
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            (
                join(&[subject, third, &rest]),
                join(&["does", subject, base, &rest]),
                join(&["who", third, &rest]),
                subject.to_string(),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn questions_agree_with_statements((statement, yes_no, who, _subject) in english_statement()) {
        let g: Grammar<f64> = common::grammar(common::ENGLISH);
        let Analysis::Statement(st) = analyze(&g, &statement).unwrap() else {
            return Err(TestCaseError::fail("statement parsed as a question"));
        };
        prop_assert!(st.term.is_ground());
        prop_assert!(read(&render(&st.term)).unwrap() == st.term);
        let Analysis::Question(q) = analyze(&g, &yes_no).unwrap() else {
            return Err(TestCaseError::fail("yes/no question parsed as a statement"));
        };
        prop_assert_eq!(q.goal.kind, GoalKind::YesNo);
        prop_assert_eq!(&q.goal.term, &st.term);
        let Analysis::Question(w) = analyze(&g, &who).unwrap() else {
            return Err(TestCaseError::fail("wh question parsed as a statement"));
        };
        prop_assert_eq!(w.goal.kind, GoalKind::Wh);
        let s = unify(&w.goal.term, &st.term).expect("wh goal matches its statement");
        let selector = Term::Var(w.goal.selector.clone().expect("wh goal has a selector"));
        let Term::Compound { args, .. } = &st.term else {
            return Err(TestCaseError::fail("statement term is not compound"));
        };
        prop_assert_eq!(&apply(&s, &selector), &args[0]);
    }

    #[test]
    fn kb_sessions_follow_a_reference_model(ops in prop::collection::vec((0u8..3, english_statement()), 1..40)) {
        let g: Grammar<f64> = common::grammar(common::ENGLISH);
        let mut kb = KnowledgeBase::new();
        let mut model: Vec<Term> = Vec::new();
        for (op, (statement, yes_no, _, _)) in ops {
            let Analysis::Statement(st) = analyze(&g, &statement).unwrap() else { unreachable!() };
            match op {
                0 => {
                    kb.add(&g, &statement).unwrap();
                    if !model.contains(&st.term) {
                        model.push(st.term.clone());
                    }
                }
                1 => {
                    let removed = kb.remove(&g, &statement).unwrap();
                    prop_assert_eq!(removed, model.contains(&st.term));
                    model.retain(|t| *t != st.term);
                }
                _ => {
                    let before = kb.clone();
                    let answer = kb.query(&g, &yes_no).unwrap();
                    prop_assert_eq!(answer, Answer::YesNo(model.contains(&st.term)));
                    prop_assert!(kb == before);
                }
            }
            prop_assert!(kb.index_is_consistent());
            let terms: Vec<Term> = kb.facts().iter().map(|f| f.term.clone()).collect();
            prop_assert_eq!(&terms, &model);
        }
        let mut buf = Vec::new();
        kb.save(&mut buf).unwrap();
        prop_assert!(KnowledgeBase::load(&buf[..]).unwrap() == kb);
    }
}
