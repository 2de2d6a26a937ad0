//! Test-side oracles shared by the integration test targets.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use lplm_core::grammar::{load_grammar, Grammar};
use lplm_core::parser::parse_all;
use lplm_core::Probability;

pub const SLEEPS: &str = include_str!("../../grammars/sleeps.gr");
pub const RUNS: &str = include_str!("../../grammars/runs.gr");
pub const AMBIGUOUS: &str = include_str!("../../grammars/ambiguous.gr");
pub const ATTACHMENT: &str = include_str!("../../grammars/attachment.gr");
pub const ENGLISH: &str = include_str!("../../grammars/english.gr");

pub const FIXTURES: [(&str, &str); 4] = [
    ("sleeps", SLEEPS),
    ("runs", RUNS),
    ("ambiguous", AMBIGUOUS),
    ("attachment", ATTACHMENT),
];

pub fn grammar<P: Probability>(text: &str) -> Grammar<P> {
    load_grammar(text).expect("fixture grammar loads")
}

/// Every token string of length `1..=max_len` derivable from a start
/// symbol, found by a bottom-up fixpoint over string sets. Independent of
/// the parsers under test.
pub fn derivable_sentences<P: Probability>(g: &Grammar<P>, max_len: usize) -> Vec<Vec<String>> {
    type Sets = HashMap<String, Vec<BTreeSet<Vec<String>>>>;
    let mut sets: Sets = HashMap::new();
    let empty = || vec![BTreeSet::new(); max_len + 1];
    for e in g.lexicon() {
        sets.entry(e.category.clone()).or_insert_with(empty)[1].insert(vec![e.surface.clone()]);
    }
    for p in g.productions() {
        sets.entry(p.lhs.clone()).or_insert_with(empty);
    }
    loop {
        let mut changed = false;
        for p in g.productions() {
            // strings of the rhs as a sequence, by length
            let mut acc: Vec<BTreeSet<Vec<String>>> = empty();
            acc[0].insert(Vec::new());
            for sym in &p.rhs {
                let child = &sets[sym];
                let mut next = empty();
                for a in 0..=max_len {
                    for left in &acc[a] {
                        for b in 1..=max_len - a {
                            for right in &child[b] {
                                let mut s = left.clone();
                                s.extend(right.iter().cloned());
                                next[a + b].insert(s);
                            }
                        }
                    }
                }
                acc = next;
            }
            let target = sets.get_mut(&p.lhs).expect("lhs present");
            for (n, strings) in acc.into_iter().enumerate().skip(1) {
                for s in strings {
                    changed |= target[n].insert(s);
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = BTreeSet::new();
    for start in g.start() {
        if let Some(by_len) = sets.get(start) {
            for strings in by_len {
                out.extend(strings.iter().cloned());
            }
        }
    }
    let mut out: Vec<Vec<String>> = out.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Best probability by exhaustive enumeration.
pub fn enumerated_best<P: Probability>(g: &Grammar<P>, tokens: &[String]) -> Option<P> {
    parse_all(g, tokens)
        .expect("sentence within the enumeration bound")
        .into_iter()
        .map(|t| t.prob)
        .fold(None, |best: Option<P>, p| match best {
            Some(b) if b >= p => Some(b),
            _ => Some(p),
        })
}

/// Sentences for randomized knowledge-base sessions over the English
/// grammar, built from a fixed vocabulary.
pub mod english {
    pub const SUBJECTS: [&str; 7] = [
        "bob",
        "alice",
        "mary",
        "the dog",
        "the black bird",
        "the old man",
        "a small cat",
    ];
    pub const VERBS: [(&str, &str); 6] = [
        ("runs", "run"),
        ("flies", "fly"),
        ("eats", "eat"),
        ("sees", "see"),
        ("chases", "chase"),
        ("likes", "like"),
    ];
    pub const OBJECTS: [&str; 5] = ["apples", "the cat", "the ball", "john", "water"];
    pub const ADVERBS: [&str; 4] = ["quickly", "bravely", "slowly", "in the park"];
}
