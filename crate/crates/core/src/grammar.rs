//! PCFG productions, a feature-annotated lexicon, the grammar file format and
//! binarization for the CYK baseline.
//!
//! Terminals enter the grammar only through the lexicon: a `lex` line makes a
//! word derivable from its category. A category may also have productions,
//! in which case its productions and lexical entries together form one
//! probability distribution.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::prob::Probability;

/// Tense aspects recognized in verb features.
pub const ASPECTS: [&str; 4] = ["simple", "perfect", "continuous", "perfect_continuous"];
/// Tense times recognized in verb features.
pub const TIMES: [&str; 3] = ["past", "present", "future"];

#[derive(Debug, Clone, PartialEq)]
pub struct Production<P> {
    pub lhs: String,
    pub rhs: Vec<String>,
    pub prob: P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexEntry<P> {
    pub category: String,
    pub surface: String,
    pub root: String,
    pub features: BTreeSet<String>,
    pub prob: P,
}

impl<P> LexEntry<P> {
    pub fn has_feature(&self, tag: &str) -> bool {
        self.features.contains(tag)
    }

    pub fn aspect(&self) -> Option<&str> {
        ASPECTS.iter().copied().find(|a| self.features.contains(*a))
    }

    pub fn time(&self) -> Option<&str> {
        TIMES.iter().copied().find(|t| self.features.contains(*t))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("probabilities for `{nonterminal}` sum to {sum}, expected 1")]
    NotNormalized { nonterminal: String, sum: f64 },
    #[error("symbol `{symbol}` is used but never defined")]
    UndefinedSymbol { symbol: String },
    #[error("probability {prob} out of range (0, 1] in {context}")]
    BadProbability { prob: String, context: String },
    #[error("invalid grammar: {0}")]
    Invalid(String),
    #[error("empty right-hand side for `{0}` cannot be converted to CNF")]
    EmptyProduction(String),
}

/// Symbol ids and lookup tables derived from a grammar. Built once at
/// validation time so parsers never hash strings in their inner loops.
#[derive(Debug, Clone)]
pub(crate) struct Index {
    pub names: Vec<String>,
    pub prod_rhs: Vec<Vec<u32>>,
    pub prod_lhs: Vec<u32>,
    pub by_lhs: Vec<Vec<u32>>,
    pub lex_by_surface: HashMap<String, Vec<u32>>,
    pub lex_category: Vec<u32>,
    /// Symbols with lexical entries and no productions.
    pub lexical_only: Vec<bool>,
    pub starts: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct Grammar<P> {
    productions: Vec<Production<P>>,
    lexicon: Vec<LexEntry<P>>,
    mwe: Vec<(Vec<String>, String)>,
    start: Vec<String>,
    normalized: bool,
    index: Index,
}

/// Raw grammar contents before validation.
#[derive(Debug, Clone)]
pub struct GrammarParts<P> {
    pub productions: Vec<Production<P>>,
    pub lexicon: Vec<LexEntry<P>>,
    pub mwe: Vec<(Vec<String>, String)>,
    pub start: Vec<String>,
    pub normalized: bool,
}

impl<P: Probability> Grammar<P> {
    /// Validates `parts` and builds the lookup index.
    pub fn new(parts: GrammarParts<P>) -> Result<Self, GrammarError> {
        let GrammarParts {
            productions,
            lexicon,
            mwe,
            start,
            normalized,
        } = parts;
        if start.is_empty() {
            return Err(GrammarError::Invalid("no start symbol".into()));
        }
        let zero = P::zero();
        let one = P::one();
        for p in &productions {
            if p.rhs.is_empty() {
                return Err(GrammarError::Invalid(format!(
                    "empty right-hand side for `{}`",
                    p.lhs
                )));
            }
            if !(p.prob > zero && p.prob <= one) {
                return Err(GrammarError::BadProbability {
                    prob: p.prob.to_text(),
                    context: format!("{} -> {}", p.lhs, p.rhs.join(" ")),
                });
            }
        }
        for e in &lexicon {
            if !(e.prob > zero && e.prob <= one) {
                return Err(GrammarError::BadProbability {
                    prob: e.prob.to_text(),
                    context: format!("lex {} {}", e.category, e.surface),
                });
            }
            if e.root.is_empty() || e.root.chars().any(char::is_uppercase) {
                return Err(GrammarError::Invalid(format!(
                    "bad root `{}` for `{}`",
                    e.root, e.surface
                )));
            }
            let aspects = ASPECTS.iter().filter(|a| e.features.contains(**a)).count();
            let times = TIMES.iter().filter(|t| e.features.contains(**t)).count();
            if aspects > 1 || (aspects == 1 && times != 1) {
                return Err(GrammarError::Invalid(format!(
                    "`{}` must carry exactly one tense combination",
                    e.surface
                )));
            }
        }

        let mut names: Vec<String> = Vec::new();
        let mut ids: HashMap<String, u32> = HashMap::new();
        let mut intern = |name: &str, names: &mut Vec<String>| -> u32 {
            *ids.entry(name.to_string()).or_insert_with(|| {
                names.push(name.to_string());
                (names.len() - 1) as u32
            })
        };
        let mut defined: HashSet<&str> = HashSet::new();
        for p in &productions {
            intern(&p.lhs, &mut names);
            defined.insert(&p.lhs);
        }
        for e in &lexicon {
            intern(&e.category, &mut names);
            defined.insert(&e.category);
        }
        for p in &productions {
            for s in &p.rhs {
                if !defined.contains(s.as_str()) {
                    return Err(GrammarError::UndefinedSymbol { symbol: s.clone() });
                }
            }
        }
        for s in &start {
            if !defined.contains(s.as_str()) {
                return Err(GrammarError::UndefinedSymbol { symbol: s.clone() });
            }
        }

        let mut seen_prods = HashSet::new();
        for p in &productions {
            if !seen_prods.insert((&p.lhs, &p.rhs)) {
                return Err(GrammarError::Invalid(format!(
                    "duplicate production {} -> {}",
                    p.lhs,
                    p.rhs.join(" ")
                )));
            }
        }
        let mut seen_lex = HashSet::new();
        for e in &lexicon {
            if !seen_lex.insert((&e.category, &e.surface, &e.root, &e.features)) {
                return Err(GrammarError::Invalid(format!(
                    "duplicate lexical entry {} {}",
                    e.category, e.surface
                )));
            }
        }

        if normalized {
            let mut sums: HashMap<&str, P> = HashMap::new();
            let mut order: Vec<&str> = Vec::new();
            let weights = productions
                .iter()
                .map(|p| (p.lhs.as_str(), &p.prob))
                .chain(lexicon.iter().map(|e| (e.category.as_str(), &e.prob)));
            for (name, p) in weights {
                let slot = sums.entry(name).or_insert_with(|| {
                    order.push(name);
                    P::zero()
                });
                *slot = slot.clone() + p.clone();
            }
            for name in order {
                let sum = sums[name].to_f64();
                if (sum - 1.0).abs() > P::sum_tolerance() {
                    return Err(GrammarError::NotNormalized {
                        nonterminal: name.to_string(),
                        sum,
                    });
                }
            }
        }

        let n = names.len();
        let prod_lhs: Vec<u32> = productions.iter().map(|p| ids[&p.lhs]).collect();
        let prod_rhs: Vec<Vec<u32>> = productions
            .iter()
            .map(|p| p.rhs.iter().map(|s| ids[s]).collect())
            .collect();
        let mut by_lhs = vec![Vec::new(); n];
        for (i, &lhs) in prod_lhs.iter().enumerate() {
            by_lhs[lhs as usize].push(i as u32);
        }
        let mut lex_by_surface: HashMap<String, Vec<u32>> = HashMap::new();
        for (i, e) in lexicon.iter().enumerate() {
            lex_by_surface
                .entry(e.surface.clone())
                .or_default()
                .push(i as u32);
        }
        let lex_category: Vec<u32> = lexicon.iter().map(|e| ids[&e.category]).collect();
        let mut has_lex = vec![false; n];
        for &c in &lex_category {
            has_lex[c as usize] = true;
        }
        let lexical_only = (0..n).map(|s| has_lex[s] && by_lhs[s].is_empty()).collect();
        let starts = start.iter().map(|s| ids[s]).collect();

        Ok(Grammar {
            productions,
            lexicon,
            mwe,
            start,
            normalized,
            index: Index {
                names,
                prod_rhs,
                prod_lhs,
                by_lhs,
                lex_by_surface,
                lex_category,
                lexical_only,
                starts,
            },
        })
    }

    pub fn productions(&self) -> &[Production<P>] {
        &self.productions
    }

    pub fn lexicon(&self) -> &[LexEntry<P>] {
        &self.lexicon
    }

    pub fn mwe(&self) -> &[(Vec<String>, String)] {
        &self.mwe
    }

    pub fn start(&self) -> &[String] {
        &self.start
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub(crate) fn index(&self) -> &Index {
        &self.index
    }

    /// All nonterminals: production left-hand sides and lexical categories.
    pub fn nonterminals(&self) -> &[String] {
        &self.index.names
    }

    /// Productions plus lexical entries.
    pub fn rule_count(&self) -> usize {
        self.productions.len() + self.lexicon.len()
    }

    /// All lexicon entries whose surface form equals `word`.
    pub fn lookup(&self, word: &str) -> Vec<&LexEntry<P>> {
        self.index
            .lex_by_surface
            .get(word)
            .map(|ids| ids.iter().map(|&i| &self.lexicon[i as usize]).collect())
            .unwrap_or_default()
    }

    pub fn production_prob(&self, lhs: &str, rhs: &[&str]) -> Option<P> {
        self.productions
            .iter()
            .find(|p| p.lhs == lhs && p.rhs.iter().map(String::as_str).eq(rhs.iter().copied()))
            .map(|p| p.prob.clone())
    }

    /// Highest lexical probability of `word` under `category`.
    pub fn lexical_prob(&self, category: &str, word: &str) -> Option<P> {
        self.lookup(word)
            .into_iter()
            .filter(|e| e.category == category)
            .map(|e| e.prob.clone())
            .fold(None, |best: Option<P>, p| match best {
                Some(b) if b >= p => Some(b),
                _ => Some(p),
            })
    }

    /// Grammar file text; [`load_grammar`] reads it back to an equal grammar.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "start {}", self.start.join(" "));
        if !self.normalized {
            let _ = writeln!(out, "pragma nonnormalized");
        }
        for p in &self.productions {
            let _ = writeln!(
                out,
                "prod {} -> {} @ {}",
                p.lhs,
                p.rhs.join(" "),
                p.prob.to_text()
            );
        }
        for e in &self.lexicon {
            let _ = write!(out, "lex {} {}", e.category, e.surface);
            if e.root != e.surface {
                let _ = write!(out, " root={}", e.root);
            }
            if !e.features.is_empty() {
                let feats: Vec<&str> = e.features.iter().map(String::as_str).collect();
                let _ = write!(out, " feat={}", feats.join(","));
            }
            let _ = writeln!(out, " @ {}", e.prob.to_text());
        }
        for (words, joined) in &self.mwe {
            let _ = writeln!(out, "mwe {} -> {}", words.join(" "), joined);
        }
        out
    }

    fn parts(&self) -> GrammarParts<P> {
        GrammarParts {
            productions: self.productions.clone(),
            lexicon: self.lexicon.clone(),
            mwe: self.mwe.clone(),
            start: self.start.clone(),
            normalized: self.normalized,
        }
    }
}

impl<P: Probability> PartialEq for Grammar<P> {
    fn eq(&self, other: &Self) -> bool {
        self.productions == other.productions
            && self.lexicon == other.lexicon
            && self.mwe == other.mwe
            && self.start == other.start
            && self.normalized == other.normalized
    }
}

/// Parses and validates grammar file text.
///
/// ```text
/// start s
/// prod s -> np vp @ 0.25
/// lex vb flies root=fly feat=present,simple,3sg @ 0.2
/// mwe hearing loss -> hearing_loss
/// pragma nonnormalized
/// ```
pub fn load_grammar<P: Probability>(text: &str) -> Result<Grammar<P>, GrammarError> {
    let mut productions = Vec::new();
    let mut lex_lines: Vec<(String, String, String, BTreeSet<String>, Option<P>)> = Vec::new();
    let mut mwe = Vec::new();
    let mut start = Vec::new();
    let mut normalized = true;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| GrammarError::Syntax {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (body, prob) = match line.split_once('@') {
            Some((b, p)) => {
                let p = P::parse_decimal(p.trim())
                    .ok_or_else(|| err(format!("bad probability `{}`", p.trim())))?;
                (b.trim(), Some(p))
            }
            None => (line, None),
        };
        let words: Vec<&str> = body.split_whitespace().collect();
        match words[0] {
            "start" => {
                if words.len() < 2 || prob.is_some() {
                    return Err(err("expected `start SYMBOL...`".into()));
                }
                start = words[1..].iter().map(|s| s.to_string()).collect();
            }
            "pragma" => match words.get(1..) {
                Some(["nonnormalized"]) => normalized = false,
                _ => return Err(err(format!("unknown pragma `{}`", words[1..].join(" ")))),
            },
            "prod" => {
                if words.len() < 4 || words[2] != "->" {
                    return Err(err("expected `prod LHS -> SYMBOLS @ PROB`".into()));
                }
                let prob = prob.ok_or_else(|| err("production needs a probability".into()))?;
                productions.push(Production {
                    lhs: words[1].to_string(),
                    rhs: words[3..].iter().map(|s| s.to_string()).collect(),
                    prob,
                });
            }
            "lex" => {
                if words.len() < 3 {
                    return Err(err(
                        "expected `lex CATEGORY WORD [root=R] [feat=F,..] [@ PROB]`".into(),
                    ));
                }
                let surface = words[2].to_lowercase();
                let mut root = surface.clone();
                let mut features = BTreeSet::new();
                for attr in &words[3..] {
                    if let Some(r) = attr.strip_prefix("root=") {
                        root = r.to_string();
                    } else if let Some(f) = attr.strip_prefix("feat=") {
                        features.extend(f.split(',').filter(|s| !s.is_empty()).map(str::to_string));
                    } else {
                        return Err(err(format!("unknown lexical attribute `{attr}`")));
                    }
                }
                lex_lines.push((words[1].to_string(), surface, root, features, prob));
            }
            "mwe" => {
                let arrow = words.iter().position(|w| *w == "->");
                match arrow {
                    Some(a) if a >= 2 && a + 2 == words.len() => {
                        let seq = words[1..a].iter().map(|w| w.to_lowercase()).collect();
                        mwe.push((seq, words[a + 1].to_lowercase()));
                    }
                    _ => return Err(err("expected `mwe WORD WORD... -> JOINED`".into())),
                }
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    // omitted lexical probabilities share the category's remaining mass evenly
    let mut explicit: HashMap<String, P> = HashMap::new();
    let mut omitted: HashMap<String, u64> = HashMap::new();
    for (cat, _, _, _, prob) in &lex_lines {
        match prob {
            Some(p) => {
                let slot = explicit.entry(cat.clone()).or_insert_with(P::zero);
                *slot = slot.clone() + p.clone();
            }
            None => *omitted.entry(cat.clone()).or_default() += 1,
        }
    }
    let mut lexicon = Vec::with_capacity(lex_lines.len());
    for (category, surface, root, features, prob) in lex_lines {
        let prob = match prob {
            Some(p) => p,
            None => {
                let k = omitted[&category];
                let used = explicit.get(&category).map(P::to_f64).unwrap_or(0.0);
                if used == 0.0 {
                    P::from_ratio(1, k)
                } else {
                    let rest = 1.0 - used;
                    if rest <= 0.0 {
                        return Err(GrammarError::Invalid(format!(
                            "no probability mass left for `{category}` entries without `@`"
                        )));
                    }
                    P::parse_decimal(&format!("{}", rest / k as f64)).unwrap_or_else(P::zero)
                }
            }
        };
        lexicon.push(LexEntry {
            category,
            surface,
            root,
            features,
            prob,
        });
    }

    if start.is_empty() {
        start.push("s".to_string());
    }
    Grammar::new(GrammarParts {
        productions,
        lexicon,
        mwe,
        start,
        normalized,
    })
}

/// Grammars shipped with the crate, by name.
pub const BUILTIN_GRAMMARS: [(&str, &str); 5] = [
    ("english", include_str!("../grammars/english.gr")),
    ("runs", include_str!("../grammars/runs.gr")),
    ("sleeps", include_str!("../grammars/sleeps.gr")),
    ("ambiguous", include_str!("../grammars/ambiguous.gr")),
    ("attachment", include_str!("../grammars/attachment.gr")),
];

/// Text of a bundled grammar; `_` and `-` are interchangeable in `name`.
pub fn builtin_grammar(name: &str) -> Option<&'static str> {
    let name = name.replace('_', "-");
    BUILTIN_GRAMMARS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Suffix marking helper nonterminals introduced by [`to_cnf`].
pub const HELPER_MARK: char = '\'';

/// True for nonterminals introduced by binarization.
pub fn is_helper(name: &str) -> bool {
    name.contains(HELPER_MARK)
}

/// Binarizes every production with more than two right-hand symbols. Each
/// long rule `a -> x y z @ p` becomes `a -> x a' @ p` and `a' -> y z @ 1`,
/// so every parse keeps its probability. Unary and lexical rules are kept;
/// the CYK baseline closes over unary chains itself.
pub fn to_cnf<P: Probability>(g: &Grammar<P>) -> Result<Grammar<P>, GrammarError> {
    let mut parts = g.parts();
    let mut used: HashSet<String> = g.nonterminals().iter().cloned().collect();
    let mut out = Vec::with_capacity(parts.productions.len());
    for p in parts.productions.drain(..) {
        if p.rhs.is_empty() {
            return Err(GrammarError::EmptyProduction(p.lhs));
        }
        if p.rhs.len() <= 2 {
            out.push(p);
            continue;
        }
        let mut lhs = p.lhs.clone();
        let mut prob = p.prob.clone();
        let base = format!("{}{}", p.lhs.trim_end_matches(HELPER_MARK), HELPER_MARK);
        let mut counter = 1usize;
        for i in 0..p.rhs.len() - 2 {
            let helper = loop {
                let candidate = if counter == 1 {
                    base.clone()
                } else {
                    format!("{base}{counter}")
                };
                counter += 1;
                if used.insert(candidate.clone()) {
                    break candidate;
                }
            };
            out.push(Production {
                lhs,
                rhs: vec![p.rhs[i].clone(), helper.clone()],
                prob,
            });
            lhs = helper;
            prob = P::one();
        }
        let n = p.rhs.len();
        out.push(Production {
            lhs,
            rhs: p.rhs[n - 2..].to_vec(),
            prob,
        });
    }
    parts.productions = out;
    Grammar::new(parts)
}
