//! Parser benchmark harness.
//!
//! Generates seeded grammars of four kinds in three size tiers, derives
//! sentences of requested lengths from them, and times the tabled parser
//! against a CYK-Viterbi baseline over the CNF form of the same grammar.
//!
//! Generated grammars use disjoint terminal families, so the grammar size
//! changes the constant factor of a parse but not how work grows with the
//! sentence length.

use std::fmt;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grammar::{is_helper, load_grammar, to_cnf, Grammar, GrammarError};
use crate::parser::{parse_all, parse_best, ParseError, ParseTree, Word};
use crate::prob::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BenchKind {
    LeftRecursive,
    RightRecursive,
    Unambiguous,
    Ambiguous,
}

impl BenchKind {
    pub const ALL: [BenchKind; 4] = [
        BenchKind::LeftRecursive,
        BenchKind::RightRecursive,
        BenchKind::Unambiguous,
        BenchKind::Ambiguous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchKind::LeftRecursive => "left_recursive",
            BenchKind::RightRecursive => "right_recursive",
            BenchKind::Unambiguous => "unambiguous",
            BenchKind::Ambiguous => "ambiguous",
        }
    }
}

impl fmt::Display for BenchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        BenchKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| format!("unknown grammar kind `{s}` (expected one of left_recursive, right_recursive, unambiguous, ambiguous)"))
    }
}

pub const TIERS: [u8; 3] = [1, 2, 3];

/// Target rule count (productions plus lexical entries) of a tier.
pub fn tier_rule_range(tier: u8) -> RangeInclusive<usize> {
    match tier {
        1 => 3..=10,
        2 => 20..=50,
        _ => 100..=200,
    }
}

/// Family-count and words-per-family ranges tried for a tier.
fn tier_params(tier: u8) -> (RangeInclusive<usize>, RangeInclusive<usize>) {
    match tier {
        1 => (1..=2, 1..=2),
        2 => (2..=6, 1..=4),
        _ => (8..=20, 2..=5),
    }
}

/// Collects weighted rules and writes them as grammar text with per-lhs
/// probabilities in thousandths that sum to exactly one.
#[derive(Default)]
struct Builder {
    // (lhs, rhs) or (category, [word]) with lexical flag
    rules: Vec<(String, Vec<String>, bool, u32)>,
}

impl Builder {
    fn prod(&mut self, rng: &mut ChaCha8Rng, lhs: &str, rhs: &[&str]) {
        let w = rng.gen_range(1..=9);
        self.rules.push((
            lhs.into(),
            rhs.iter().map(|s| s.to_string()).collect(),
            false,
            w,
        ));
    }

    fn lex(&mut self, rng: &mut ChaCha8Rng, cat: &str, words: usize) {
        for i in 1..=words {
            let w = rng.gen_range(1..=9);
            self.rules
                .push((cat.into(), vec![format!("{cat}w{i}")], true, w));
        }
    }

    fn rule_count(&self) -> usize {
        self.rules.len()
    }

    fn text(&self, header: &str) -> String {
        let mut lhs_order: Vec<&str> = Vec::new();
        for (lhs, ..) in &self.rules {
            if !lhs_order.contains(&lhs.as_str()) {
                lhs_order.push(lhs);
            }
        }
        let mut thousandths = vec![0u32; self.rules.len()];
        for lhs in lhs_order {
            let ids: Vec<usize> = (0..self.rules.len())
                .filter(|&i| self.rules[i].0 == lhs)
                .collect();
            let total: u32 = ids.iter().map(|&i| self.rules[i].3).sum();
            let mut left: i64 = 1000;
            for &i in &ids {
                thousandths[i] = (self.rules[i].3 * 1000 / total).max(1);
                left -= thousandths[i] as i64;
            }
            // hand the rounding remainder to the heaviest rule
            let heaviest = *ids
                .iter()
                .max_by_key(|&&i| thousandths[i])
                .expect("nonempty");
            thousandths[heaviest] = (thousandths[heaviest] as i64 + left) as u32;
        }
        let mut out = String::from(header);
        out.push_str("start s\n");
        for (i, (lhs, rhs, lexical, _)) in self.rules.iter().enumerate() {
            let p = format!("0.{:03}", thousandths[i]);
            let p = if thousandths[i] == 1000 {
                "1".to_string()
            } else {
                p
            };
            if *lexical {
                out.push_str(&format!("lex {lhs} {} @ {p}\n", rhs[0]));
            } else {
                out.push_str(&format!("prod {lhs} -> {} @ {p}\n", rhs.join(" ")));
            }
        }
        out
    }
}

fn build(kind: BenchKind, rng: &mut ChaCha8Rng, families: usize, words: usize) -> Builder {
    let mut b = Builder::default();
    let bases = rng.gen_range(1..=families.max(1));
    match kind {
        BenchKind::LeftRecursive | BenchKind::RightRecursive => {
            for k in 1..=families {
                let x = format!("x{k}");
                if kind == BenchKind::LeftRecursive {
                    b.prod(rng, "s", &["s", &x]);
                } else {
                    b.prod(rng, "s", &[&x, "s"]);
                }
            }
            for j in 1..=bases {
                b.prod(rng, "s", &[&format!("y{j}")]);
            }
            for k in 1..=families {
                b.lex(rng, &format!("x{k}"), words);
            }
            for j in 1..=bases {
                b.lex(rng, &format!("y{j}"), words);
            }
        }
        BenchKind::Unambiguous => {
            let brackets = families.div_ceil(2);
            let prefixes = families - brackets;
            for k in 1..=prefixes {
                b.prod(rng, "s", &[&format!("pre{k}"), "s"]);
            }
            for k in 1..=brackets {
                b.prod(rng, "s", &[&format!("open{k}"), "s", &format!("close{k}")]);
            }
            for j in 1..=bases {
                b.prod(rng, "s", &[&format!("atom{j}")]);
            }
            for k in 1..=prefixes {
                b.lex(rng, &format!("pre{k}"), words);
            }
            for k in 1..=brackets {
                b.lex(rng, &format!("open{k}"), words);
                b.lex(rng, &format!("close{k}"), words);
            }
            for j in 1..=bases {
                b.lex(rng, &format!("atom{j}"), words);
            }
        }
        BenchKind::Ambiguous => {
            // a chunk `a b` is either read directly or through `pair`
            let chunks = families.div_ceil(2);
            let solos = families - chunks;
            for k in 1..=chunks {
                b.prod(rng, "s", &[&format!("chunk{k}"), "s"]);
            }
            for k in 1..=solos {
                b.prod(rng, "s", &[&format!("solo{k}"), "s"]);
            }
            for j in 1..=bases {
                b.prod(rng, "s", &[&format!("end{j}")]);
            }
            for k in 1..=chunks {
                let (chunk, pair, a, bb) = (
                    format!("chunk{k}"),
                    format!("pair{k}"),
                    format!("a{k}"),
                    format!("b{k}"),
                );
                b.prod(rng, &chunk, &[&a, &bb]);
                b.prod(rng, &chunk, &[&pair]);
                b.prod(rng, &pair, &[&a, &bb]);
            }
            for k in 1..=chunks {
                b.lex(rng, &format!("a{k}"), words);
                b.lex(rng, &format!("b{k}"), words);
            }
            for k in 1..=solos {
                b.lex(rng, &format!("solo{k}"), words);
            }
            for j in 1..=bases {
                b.lex(rng, &format!("end{j}"), words);
            }
        }
    }
    b
}

/// Grammar text of the requested kind and tier; the same arguments always
/// give the same text.
pub fn gen_grammar_text(kind: BenchKind, tier: u8, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((tier as u64) << 56) ^ ((kind as u64) << 48));
    let range = tier_rule_range(tier);
    let (families, words) = tier_params(tier);
    let header = format!("# generated: kind={kind} tier={tier} seed={seed}\n");
    loop {
        let f = rng.gen_range(families.clone());
        let w = rng.gen_range(words.clone());
        let b = build(kind, &mut rng, f, w);
        if range.contains(&b.rule_count()) {
            return b.text(&header);
        }
    }
}

/// A sentence of the ambiguous kind with at least two parses.
fn ambiguity_witness<P: Probability>(g: &Grammar<P>) -> Option<Vec<String>> {
    let a = g.lexicon().iter().find(|e| e.category == "a1")?;
    let b = g.lexicon().iter().find(|e| e.category == "b1")?;
    let end = g.lexicon().iter().find(|e| e.category == "end1")?;
    Some(vec![
        a.surface.clone(),
        b.surface.clone(),
        end.surface.clone(),
    ])
}

/// Seeded benchmark grammar. Ambiguous grammars are checked to give two or
/// more parses on a three-token witness.
pub fn gen_grammar<P: Probability>(kind: BenchKind, tier: u8, seed: u64) -> Grammar<P> {
    let g: Grammar<P> =
        load_grammar(&gen_grammar_text(kind, tier, seed)).expect("generated grammars are valid");
    if kind == BenchKind::Ambiguous {
        let witness = ambiguity_witness(&g).expect("ambiguous grammars have a chunk family");
        let parses = parse_all(&g, &witness).expect("witness is short");
        assert!(
            parses.len() >= 2,
            "witness {witness:?} has {} parses",
            parses.len()
        );
    }
    g
}

/// Sentences derived from a grammar, one per realizable requested length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentences {
    pub sentences: Vec<Vec<String>>,
    /// Requested lengths the grammar cannot derive.
    pub skipped: Vec<usize>,
}

struct Deriver<'g, P> {
    g: &'g Grammar<P>,
    /// `lengths[sym][n]`: `sym` derives some string of `n` tokens.
    lengths: Vec<Vec<bool>>,
    lex_by_cat: Vec<Vec<usize>>,
}

const DEPTH_LIMIT: usize = 4096;

impl<'g, P: Probability> Deriver<'g, P> {
    fn new(g: &'g Grammar<P>, max: usize) -> Self {
        let idx = g.index();
        let nsym = idx.names.len();
        let mut lex_by_cat = vec![Vec::new(); nsym];
        for (e, &cat) in idx.lex_category.iter().enumerate() {
            lex_by_cat[cat as usize].push(e);
        }
        let mut lengths = vec![vec![false; max + 1]; nsym];
        for (s, entries) in lex_by_cat.iter().enumerate() {
            if !entries.is_empty() && max >= 1 {
                lengths[s][1] = true;
            }
        }
        let mut changed = true;
        while changed {
            changed = false;
            for (p, rhs) in idx.prod_rhs.iter().enumerate() {
                let lhs = idx.prod_lhs[p] as usize;
                let set = Self::sequence_lengths(&lengths, rhs, max);
                for n in 0..=max {
                    if set[n] && !lengths[lhs][n] {
                        lengths[lhs][n] = true;
                        changed = true;
                    }
                }
            }
        }
        Deriver {
            g,
            lengths,
            lex_by_cat,
        }
    }

    fn sequence_lengths(lengths: &[Vec<bool>], rhs: &[u32], max: usize) -> Vec<bool> {
        let mut acc = vec![false; max + 1];
        acc[0] = true;
        for &sym in rhs {
            let mut next = vec![false; max + 1];
            for a in 0..=max {
                if !acc[a] {
                    continue;
                }
                for b in 1..=max - a {
                    if lengths[sym as usize][b] {
                        next[a + b] = true;
                    }
                }
            }
            acc = next;
        }
        acc
    }

    fn derive(
        &self,
        rng: &mut ChaCha8Rng,
        sym: usize,
        len: usize,
        depth: usize,
        out: &mut Vec<String>,
    ) -> bool {
        if depth > DEPTH_LIMIT {
            return false;
        }
        let idx = self.g.index();
        let mut options: Vec<Option<usize>> = Vec::new();
        if len == 1 && !self.lex_by_cat[sym].is_empty() {
            options.push(None);
        }
        for &p in &idx.by_lhs[sym] {
            let rhs = &idx.prod_rhs[p as usize];
            if rhs.len() <= len && Self::sequence_lengths(&self.lengths, rhs, len)[len] {
                options.push(Some(p as usize));
            }
        }
        let Some(&choice) = options.choose(rng) else {
            return false;
        };
        match choice {
            None => {
                let e = *self.lex_by_cat[sym].choose(rng).expect("nonempty");
                out.push(self.g.lexicon()[e].surface.clone());
                true
            }
            Some(p) => {
                let rhs = &idx.prod_rhs[p];
                let mut remaining = len;
                for (i, &child) in rhs.iter().enumerate() {
                    let rest = &rhs[i + 1..];
                    let tail = Self::sequence_lengths(&self.lengths, rest, remaining);
                    let splits: Vec<usize> = (1..=remaining)
                        .filter(|&l| self.lengths[child as usize][l] && tail[remaining - l])
                        .collect();
                    let Some(&l) = splits.choose(rng) else {
                        return false;
                    };
                    if !self.derive(rng, child as usize, l, depth + 1, out) {
                        return false;
                    }
                    remaining -= l;
                }
                true
            }
        }
    }
}

/// Derives one sentence per requested length, steering a seeded random
/// derivation from a start symbol to exactly that many tokens. Lengths are
/// visited in increasing order and duplicates are dropped.
pub fn gen_sentences<P: Probability>(g: &Grammar<P>, lengths: &[usize], seed: u64) -> Sentences {
    let mut wanted: Vec<usize> = lengths.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let max = wanted.last().copied().unwrap_or(0);
    let deriver = Deriver::new(g, max);
    let starts: Vec<usize> = g.index().starts.iter().map(|&s| s as usize).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Sentences {
        sentences: Vec::new(),
        skipped: Vec::new(),
    };
    for len in wanted {
        let feasible: Vec<usize> = starts
            .iter()
            .copied()
            .filter(|&s| len >= 1 && deriver.lengths[s][len])
            .collect();
        let mut found = None;
        if let Some(&start) = feasible.choose(&mut rng) {
            for _ in 0..16 {
                let mut tokens = Vec::with_capacity(len);
                if deriver.derive(&mut rng, start, len, 0, &mut tokens) {
                    found = Some(tokens);
                    break;
                }
            }
        }
        match found {
            Some(tokens) => out.sentences.push(tokens),
            None => out.skipped.push(len),
        }
    }
    out
}

#[derive(Clone)]
enum Back {
    Lex(usize),
    Unary(usize),
    Binary(usize, usize),
}

/// Most probable parse by bottom-up dynamic programming over spans.
///
/// `g` must have right-hand sides of at most two symbols (see [`to_cnf`]).
/// Unary rules are closed over within each span. Nodes of binarization
/// helpers are spliced out of the returned tree.
pub fn cyk_viterbi<P: Probability, S: AsRef<str>>(
    g: &Grammar<P>,
    tokens: &[S],
) -> Result<Option<(P, ParseTree<P>)>, ParseError> {
    let idx = g.index();
    let n = tokens.len();
    let nsym = idx.names.len();
    let mut unknown = Vec::new();
    for t in tokens {
        if !idx.lex_by_surface.contains_key(t.as_ref())
            && !unknown.iter().any(|u: &String| u == t.as_ref())
        {
            unknown.push(t.as_ref().to_string());
        }
    }
    if !unknown.is_empty() {
        return Err(ParseError::UnknownWords(unknown));
    }
    if n == 0 {
        return Ok(None);
    }
    let mut unary: Vec<(usize, usize, usize)> = Vec::new();
    let mut by_left: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); nsym];
    for (p, rhs) in idx.prod_rhs.iter().enumerate() {
        let lhs = idx.prod_lhs[p] as usize;
        match rhs.as_slice() {
            [b] => unary.push((lhs, *b as usize, p)),
            [b, c] => by_left[*b as usize].push((*c as usize, lhs, p)),
            _ => panic!("cyk_viterbi needs a grammar with at most two right-hand symbols"),
        }
    }
    let prods = g.productions();
    let cell = |i: usize, j: usize| (i * (n + 1) + j) * nsym;
    let mut chart: Vec<Option<(P, Back)>> = vec![None; (n + 1) * (n + 1) * nsym];
    let mut present: Vec<Vec<usize>> = vec![Vec::new(); (n + 1) * (n + 1)];

    fn offer<P: Probability>(slot: &mut Option<(P, Back)>, prob: P, back: Back) -> bool {
        match slot {
            Some((best, _)) if *best >= prob => false,
            _ => {
                *slot = Some((prob, back));
                true
            }
        }
    }

    for (i, t) in tokens.iter().enumerate() {
        let base = cell(i, i + 1);
        for &e in &idx.lex_by_surface[t.as_ref()] {
            let cat = idx.lex_category[e as usize] as usize;
            offer(
                &mut chart[base + cat],
                g.lexicon()[e as usize].prob.clone(),
                Back::Lex(e as usize),
            );
        }
    }
    for width in 1..=n {
        for i in 0..=n - width {
            let j = i + width;
            let base = cell(i, j);
            if width > 1 {
                for k in i + 1..j {
                    let (lb, rb) = (cell(i, k), cell(k, j));
                    for &b in &present[i * (n + 1) + k] {
                        let pb = chart[lb + b].as_ref().expect("present").0.clone();
                        for &(c, lhs, p) in &by_left[b] {
                            if let Some((pc, _)) = &chart[rb + c] {
                                let prob = prods[p].prob.clone() * pb.clone() * pc.clone();
                                offer(&mut chart[base + lhs], prob, Back::Binary(p, k));
                            }
                        }
                    }
                }
            }
            let mut changed = true;
            let mut rounds = 0;
            while changed && rounds <= nsym {
                changed = false;
                rounds += 1;
                for &(lhs, b, p) in &unary {
                    if let Some((pb, _)) = &chart[base + b] {
                        let prob = prods[p].prob.clone() * pb.clone();
                        changed |= offer(&mut chart[base + lhs], prob, Back::Unary(b));
                    }
                }
            }
            present[i * (n + 1) + j] = (0..nsym).filter(|&s| chart[base + s].is_some()).collect();
        }
    }
    let root = cell(0, n);
    let mut best: Option<usize> = None;
    for &s in &idx.starts {
        let s = s as usize;
        if let Some((p, _)) = &chart[root + s] {
            if best.map_or(true, |b| chart[root + b].as_ref().expect("present").0 < *p) {
                best = Some(s);
            }
        }
    }
    let Some(start) = best else {
        return Ok(None);
    };

    struct Ctx<'a, P> {
        g: &'a Grammar<P>,
        chart: &'a [Option<(P, Back)>],
        n: usize,
        nsym: usize,
    }
    fn tree<P: Probability>(ctx: &Ctx<'_, P>, sym: usize, i: usize, j: usize) -> ParseTree<P> {
        let (prob, back) = ctx.chart[(i * (ctx.n + 1) + j) * ctx.nsym + sym]
            .clone()
            .expect("backpointer");
        let label = ctx.g.index().names[sym].clone();
        let children = match back {
            Back::Lex(e) => {
                let entry = &ctx.g.lexicon()[e];
                let word = Word {
                    token: entry.surface.clone(),
                    root: entry.root.clone(),
                    features: entry.features.clone(),
                };
                return ParseTree::preterminal(label, prob, word);
            }
            Back::Unary(b) => vec![tree(ctx, b, i, j)],
            Back::Binary(p, k) => {
                let rhs = &ctx.g.index().prod_rhs[p];
                vec![
                    tree(ctx, rhs[0] as usize, i, k),
                    tree(ctx, rhs[1] as usize, k, j),
                ]
            }
        };
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            if is_helper(&c.label) {
                flat.extend(c.children().iter().cloned());
            } else {
                flat.push(c);
            }
        }
        ParseTree::internal(label, prob, flat)
    }
    let ctx = Ctx {
        g,
        chart: &chart,
        n,
        nsym,
    };
    let t = tree(&ctx, start, 0, n);
    Ok(Some((t.prob.clone(), t)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub kind: BenchKind,
    pub tier: u8,
    pub seed: u64,
    pub lengths: Vec<usize>,
    pub repeats: usize,
    /// Shortest timed run. Parses faster than this are repeated within a
    /// run and the run reports the time per parse, which keeps timer
    /// resolution and scheduler noise out of microsecond measurements.
    pub min_run: Duration,
    /// Budget per parser and sentence; once spent, the measurement is
    /// marked as timed out and longer sentences are skipped for that parser.
    pub timeout: Duration,
}

impl BenchSpec {
    pub fn new(kind: BenchKind, tier: u8, seed: u64) -> Self {
        BenchSpec {
            kind,
            tier,
            seed,
            lengths: (1..=50).collect(),
            repeats: 10,
            min_run: Duration::from_millis(10),
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParserKind {
    Tabled,
    Cyk,
}

impl ParserKind {
    pub fn name(self) -> &'static str {
        match self {
            ParserKind::Tabled => "tabled",
            ParserKind::Cyk => "cyk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub mean_s: f64,
    pub std_s: f64,
    pub runs: usize,
    pub timeout: bool,
}

impl Measurement {
    fn from_samples(samples: &[f64], timeout: bool) -> Self {
        let runs = samples.len();
        if runs == 0 {
            return Measurement {
                mean_s: f64::NAN,
                std_s: f64::NAN,
                runs,
                timeout,
            };
        }
        let mean = samples.iter().sum::<f64>() / runs as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / runs as f64;
        Measurement {
            mean_s: mean,
            std_s: var.sqrt(),
            runs,
            timeout,
        }
    }

    fn skipped() -> Self {
        Measurement {
            mean_s: f64::NAN,
            std_s: f64::NAN,
            runs: 0,
            timeout: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub length: usize,
    pub tabled: Measurement,
    pub baseline: Measurement,
}

impl BenchRow {
    pub fn complete(&self) -> bool {
        !self.tabled.timeout && !self.baseline.timeout
    }
}

/// Least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Option<Fit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(Fit {
        slope,
        intercept,
        r2,
    })
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub spec: BenchSpec,
    pub rule_count: usize,
    pub sentences: Vec<Vec<String>>,
    pub skipped: Vec<usize>,
    pub rows: Vec<BenchRow>,
    /// Tabled-parser mean time against length, over rows it completed.
    pub fit: Option<Fit>,
}

impl BenchResult {
    pub fn row(&self, length: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.length == length)
    }

    pub fn write_csv(&self, out: &mut csv::Writer<impl Write>) -> csv::Result<()> {
        for row in &self.rows {
            for (parser, m) in [
                (ParserKind::Tabled, &row.tabled),
                (ParserKind::Cyk, &row.baseline),
            ] {
                out.write_record([
                    self.spec.kind.name().to_string(),
                    self.spec.tier.to_string(),
                    self.spec.seed.to_string(),
                    row.length.to_string(),
                    parser.name().to_string(),
                    format!("{:.9}", m.mean_s),
                    format!("{:.9}", m.std_s),
                    m.runs.to_string(),
                    m.timeout.to_string(),
                ])?;
            }
        }
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "kind", "tier", "seed", "length", "parser", "mean_s", "std_s", "runs", "timeout",
];

/// Writes results as CSV with a header line.
pub fn write_csv(results: &[BenchResult], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        r.write_csv(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

/// gnuplot data for one grammar kind: one block per tier (select with
/// `index`), columns `length tabled_mean tabled_std cyk_mean cyk_std`.
pub fn write_gnuplot(results: &[BenchResult], mut out: impl Write) -> io::Result<()> {
    for (i, r) in results.iter().enumerate() {
        if i > 0 {
            writeln!(out, "\n")?;
        }
        writeln!(
            out,
            "# kind={} tier={} seed={} rules={}",
            r.spec.kind, r.spec.tier, r.spec.seed, r.rule_count
        )?;
        writeln!(
            out,
            "# length tabled_mean_s tabled_std_s cyk_mean_s cyk_std_s"
        )?;
        for row in &r.rows {
            writeln!(
                out,
                "{} {:.9} {:.9} {:.9} {:.9}",
                row.length,
                row.tabled.mean_s,
                row.tabled.std_s,
                row.baseline.mean_s,
                row.baseline.std_s
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("parsers disagree on {sentence:?}: tabled {tabled:?}, cyk {cyk:?}")]
    Disagreement {
        sentence: Vec<String>,
        tabled: Option<f64>,
        cyk: Option<f64>,
    },
}

/// One parser on one sentence: batch size, samples so far, time spent.
struct Series {
    batch: usize,
    samples: Vec<f64>,
    spent: Duration,
    timeout: bool,
}

impl Series {
    /// Untimed warm-up run, which also sizes the batch.
    fn warm_up(min_run: Duration, f: &mut impl FnMut()) -> Self {
        let t = Instant::now();
        f();
        let once = t.elapsed().max(Duration::from_nanos(1));
        let batch = (min_run.as_secs_f64() / once.as_secs_f64())
            .ceil()
            .clamp(1.0, 1e6) as usize;
        Series {
            batch,
            samples: Vec::new(),
            spent: Duration::ZERO,
            timeout: false,
        }
    }

    fn run(&mut self, budget: Duration, f: &mut impl FnMut()) {
        let t = Instant::now();
        for _ in 0..self.batch {
            f();
        }
        let dt = t.elapsed();
        self.spent += dt;
        self.samples.push(dt.as_secs_f64() / self.batch as f64);
        self.timeout |= self.spent > budget;
    }

    fn measurement(&self) -> Measurement {
        Measurement::from_samples(&self.samples, self.timeout)
    }
}

/// Generates the grammar and sentences of `spec` and times both parsers on
/// every sentence, strictly sequentially.
///
/// Every (sentence, parser) pair gets an untimed warm-up run, then
/// `repeats` timed runs. The runs are taken in rounds that sweep all
/// lengths, so a slow stretch of the machine is spread over the lengths
/// instead of landing on a few neighbouring ones. When a parser exhausts
/// its budget on a sentence, it is not run on longer ones.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchResult, BenchError> {
    let g: Grammar<f64> = gen_grammar(spec.kind, spec.tier, spec.seed);
    let cnf = to_cnf(&g)?;
    let generated = gen_sentences(&g, &spec.lengths, spec.seed.wrapping_add(1));
    for tokens in &generated.sentences {
        if parse_best(&g, tokens)?.is_none() {
            return Err(BenchError::Disagreement {
                sentence: tokens.clone(),
                tabled: None,
                cyk: None,
            });
        }
    }
    let run = |parser: usize, tokens: &[String]| {
        if parser == 0 {
            std::hint::black_box(parse_best(&g, std::hint::black_box(tokens)).ok().map(drop));
        } else {
            std::hint::black_box(
                cyk_viterbi(&cnf, std::hint::black_box(tokens))
                    .ok()
                    .map(drop),
            );
        }
    };
    let mut series: Vec<[Option<Series>; 2]> = generated
        .sentences
        .iter()
        .map(|tokens| {
            [0, 1].map(|parser| Some(Series::warm_up(spec.min_run, &mut || run(parser, tokens))))
        })
        .collect();
    for _ in 0..spec.repeats {
        for (i, tokens) in generated.sentences.iter().enumerate() {
            for parser in 0..2 {
                let Some(s) = series[i][parser].as_mut() else {
                    continue;
                };
                if s.timeout {
                    continue;
                }
                s.run(spec.timeout, &mut || run(parser, tokens));
                if s.timeout {
                    for later in series.iter_mut().skip(i + 1) {
                        later[parser] = None;
                    }
                }
            }
        }
    }
    let measure = |s: &Option<Series>| {
        s.as_ref()
            .map_or_else(Measurement::skipped, Series::measurement)
    };
    let rows: Vec<BenchRow> = generated
        .sentences
        .iter()
        .zip(&series)
        .map(|(tokens, [t, c])| BenchRow {
            length: tokens.len(),
            tabled: measure(t),
            baseline: measure(c),
        })
        .collect();
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.tabled.timeout)
        .map(|r| (r.length as f64, r.tabled.mean_s))
        .collect();
    Ok(BenchResult {
        spec: spec.clone(),
        rule_count: g.rule_count(),
        sentences: generated.sentences,
        skipped: generated.skipped,
        rows,
        fit: linear_fit(&points),
    })
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Checks that the tabled parser and the CYK baseline find the same best
/// probability, within `tolerance` relative error.
pub fn cross_check<P: Probability, S: AsRef<str>>(
    g: &Grammar<P>,
    cnf: &Grammar<P>,
    tokens: &[S],
    tolerance: f64,
) -> Result<(), BenchError> {
    let tabled = parse_best(g, tokens)?.map(|t| t.prob.to_f64());
    let cyk = cyk_viterbi(cnf, tokens)?.map(|(p, _)| p.to_f64());
    let agree = match (tabled, cyk) {
        (None, None) => true,
        (Some(a), Some(b)) => relative_error(a, b) <= tolerance,
        _ => false,
    };
    if agree {
        Ok(())
    } else {
        Err(BenchError::Disagreement {
            sentence: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
            tabled,
            cyk,
        })
    }
}
