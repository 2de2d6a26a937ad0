//! Tokenization and most-probable-parse search.
//!
//! [`parse_best`] is a tabled top-down parser. The first call of a goal
//! `(nonterminal, start)` creates a table entry and expands the goal's
//! productions exactly once. Every later call of the same goal registers the
//! caller as a consumer of the entry and is fed the answers recorded so far;
//! when an entry gains a new or better `(end, probability)` answer, all of its
//! consumers are resumed with it. The agenda drains when no entry improves,
//! which is how left-recursive goals terminate: `s -> s x` at position 0
//! consumes the answers of its own in-progress entry.
//!
//! Each entry keeps only the best answer per end position. Answers are
//! ordered by probability, then by fewer nodes, then by the lexicographically
//! smaller preorder label sequence, which makes the result deterministic and
//! keeps cyclic unit derivations (never strictly better) out of the table.
//!
//! [`parse_all`] enumerates every tree of the whole input and serves as the
//! reference the tabled parser is tested against.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::grammar::{Grammar, Index, LexEntry};
use crate::prob::Probability;

/// Token bound for [`parse_all`].
pub const DEFAULT_ENUMERATION_BOUND: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown word(s): {}", .0.join(", "))]
    UnknownWords(Vec<String>),
    #[error("input of {len} tokens exceeds the enumeration bound of {max}")]
    InputTooLong { len: usize, max: usize },
}

/// The word under a preterminal node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub token: String,
    pub root: String,
    pub features: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node<P> {
    Word(Word),
    Children(Vec<ParseTree<P>>),
}

/// Constituency tree. `prob` is the product of every rule probability used
/// in the subtree.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseTree<P> {
    pub label: String,
    pub prob: P,
    pub node: Node<P>,
}

impl<P> ParseTree<P> {
    pub fn preterminal(label: impl Into<String>, prob: P, word: Word) -> Self {
        ParseTree {
            label: label.into(),
            prob,
            node: Node::Word(word),
        }
    }

    pub fn internal(label: impl Into<String>, prob: P, children: Vec<ParseTree<P>>) -> Self {
        ParseTree {
            label: label.into(),
            prob,
            node: Node::Children(children),
        }
    }

    pub fn children(&self) -> &[ParseTree<P>] {
        match &self.node {
            Node::Children(c) => c,
            Node::Word(_) => &[],
        }
    }

    pub fn word(&self) -> Option<&Word> {
        match &self.node {
            Node::Word(w) => Some(w),
            Node::Children(_) => None,
        }
    }

    /// Tokens under the tree, left to right.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let Some(w) = t.word() {
                out.push(w.token.as_str());
            }
        });
        out
    }

    /// Node count; a preterminal and its word count as one node.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(ParseTree::size).sum::<usize>()
    }

    pub fn preorder_labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |t| out.push(t.label.as_str()));
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a ParseTree<P>)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

impl<P: Probability> ParseTree<P> {
    /// Converts node probabilities to another scalar type.
    pub fn map_prob<Q>(&self, f: &impl Fn(&P) -> Q) -> ParseTree<Q> {
        ParseTree {
            label: self.label.clone(),
            prob: f(&self.prob),
            node: match &self.node {
                Node::Word(w) => Node::Word(w.clone()),
                Node::Children(c) => Node::Children(c.iter().map(|t| t.map_prob(f)).collect()),
            },
        }
    }
}

impl<P> fmt::Display for ParseTree<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.label)?;
        match &self.node {
            Node::Word(w) => f.write_str(&w.token)?,
            Node::Children(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    c.fmt(f)?;
                }
            }
        }
        f.write_str(")")
    }
}

const QUOTES: [char; 6] = ['"', '`', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'];

/// Lowercased, punctuation-free tokens with declared multi-word entities
/// merged (longest match first).
pub fn tokenize<P: Probability>(g: &Grammar<P>, text: &str) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .filter(|c| !QUOTES.contains(c))
        .collect();
    let words: Vec<String> = cleaned
        .split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !(c.is_alphanumeric() || c == '_' || c == '-'))
                .to_string()
        })
        .filter(|w| !w.is_empty())
        .collect();

    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    while i < words.len() {
        let best = g
            .mwe()
            .iter()
            .filter(|(seq, _)| words[i..].starts_with(seq))
            .max_by_key(|(seq, _)| seq.len());
        match best {
            Some((seq, joined)) => {
                out.push(joined.clone());
                i += seq.len();
            }
            None => {
                out.push(words[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// Work counters of one tabled parse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    /// Table entries created, i.e. `(nonterminal, start)` goals expanded.
    pub expansions: usize,
    /// New or improved answers recorded.
    pub answers: usize,
    /// Partial derivations processed from the agenda.
    pub steps: usize,
}

/// Most probable parse of the whole token sequence, or `None` when the
/// grammar derives no tree for it.
pub fn parse_best<P: Probability, S: AsRef<str>>(
    g: &Grammar<P>,
    tokens: &[S],
) -> Result<Option<ParseTree<P>>, ParseError> {
    parse_best_with_stats(g, tokens).map(|(tree, _)| tree)
}

pub fn parse_best_with_stats<P: Probability, S: AsRef<str>>(
    g: &Grammar<P>,
    tokens: &[S],
) -> Result<(Option<ParseTree<P>>, ParseStats), ParseError> {
    let lexical = lexical_candidates(g, tokens)?;
    if tokens.is_empty() {
        return Ok((None, ParseStats::default()));
    }
    let mut chart = Chart::new(g, tokens, lexical);
    let tree = chart.run();
    Ok((tree, chart.stats))
}

/// Per-position `(category, best probability, entry)` candidates.
type LexicalCandidates<P> = Vec<Vec<(u32, P, u32)>>;

fn lexical_candidates<P: Probability, S: AsRef<str>>(
    g: &Grammar<P>,
    tokens: &[S],
) -> Result<LexicalCandidates<P>, ParseError> {
    let idx = g.index();
    let mut unknown: Vec<String> = Vec::new();
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let tok = tok.as_ref();
        let mut cands: Vec<(u32, P, u32)> = Vec::new();
        match idx.lex_by_surface.get(tok) {
            None => {
                if !unknown.iter().any(|u| u == tok) {
                    unknown.push(tok.to_string());
                }
            }
            Some(entries) => {
                for &e in entries {
                    let cat = idx.lex_category[e as usize];
                    let prob = &g.lexicon()[e as usize].prob;
                    match cands.iter_mut().find(|(c, _, _)| *c == cat) {
                        Some(slot) if *prob > slot.1 => *slot = (cat, prob.clone(), e),
                        Some(_) => {}
                        None => cands.push((cat, prob.clone(), e)),
                    }
                }
            }
        }
        out.push(cands);
    }
    if unknown.is_empty() {
        Ok(out)
    } else {
        Err(ParseError::UnknownWords(unknown))
    }
}

fn word_of<P>(entry: &LexEntry<P>) -> Word {
    Word {
        token: entry.surface.clone(),
        root: entry.root.clone(),
        features: entry.features.clone(),
    }
}

#[derive(Debug, Clone)]
enum Origin {
    Lexical {
        entry: u32,
    },
    /// `ends[k]` is where the k-th child's span ends.
    Production {
        prod: u32,
        ends: Box<[u32]>,
    },
}

#[derive(Debug, Clone)]
struct Answer<P> {
    prob: P,
    size: u32,
    origin: Origin,
}

/// A production matched up to `dot`, covering `start..pos`.
#[derive(Debug, Clone)]
struct Partial<P> {
    prod: u32,
    dot: u32,
    start: u32,
    pos: u32,
    prob: P,
    size: u32,
    ends: Vec<u32>,
}

impl<P: Probability> Partial<P> {
    fn advance(&self, end: u32, prob: &P, size: u32) -> Self {
        let mut ends = self.ends.clone();
        ends.push(end);
        Partial {
            prod: self.prod,
            dot: self.dot + 1,
            start: self.start,
            pos: end,
            prob: self.prob.clone() * prob.clone(),
            size: self.size + size,
            ends,
        }
    }
}

struct Entry<P> {
    sym: u32,
    start: u32,
    answers: Vec<(u32, Answer<P>)>,
    consumers: Vec<Partial<P>>,
}

struct Chart<'g, P> {
    g: &'g Grammar<P>,
    idx: &'g Index,
    n: usize,
    lexical: LexicalCandidates<P>,
    /// `sym * (n + 1) + pos` to entry id plus one; zero when not yet called.
    slots: Vec<u32>,
    entries: Vec<Entry<P>>,
    agenda: Vec<Partial<P>>,
    stats: ParseStats,
}

impl<'g, P: Probability> Chart<'g, P> {
    fn new<S: AsRef<str>>(g: &'g Grammar<P>, tokens: &[S], lexical: LexicalCandidates<P>) -> Self {
        let idx = g.index();
        let n = tokens.len();
        Chart {
            g,
            idx,
            n,
            lexical,
            slots: vec![0; idx.names.len() * (n + 1)],
            entries: Vec::new(),
            agenda: Vec::new(),
            stats: ParseStats::default(),
        }
    }

    fn run(&mut self) -> Option<ParseTree<P>> {
        let n = self.n as u32;
        let starts = self.idx.starts.clone();
        for &s in &starts {
            if !self.idx.lexical_only[s as usize] {
                self.call(s, 0);
            }
        }
        while let Some(p) = self.agenda.pop() {
            self.stats.steps += 1;
            self.progress(p);
        }

        // lexical-only start symbols can only cover one token
        let mut best: Option<(u32, Answer<P>)> = None;
        for &s in &starts {
            let candidate = if self.idx.lexical_only[s as usize] {
                self.lex_answer(s, 0).filter(|_| n == 1)
            } else {
                let eid = self.slot(s, 0).expect("root goal was called");
                self.entries[eid]
                    .answers
                    .iter()
                    .find(|(e, _)| *e == n)
                    .map(|(_, a)| a.clone())
            };
            if let Some(a) = candidate {
                let replace = match &best {
                    None => true,
                    Some((bs, ba)) => self.better(s, 0, &a, *bs, ba),
                };
                if replace {
                    best = Some((s, a));
                }
            }
        }
        best.map(|(s, a)| self.build(s, 0, n, &a))
    }

    fn slot(&self, sym: u32, pos: u32) -> Option<usize> {
        match self.slots[sym as usize * (self.n + 1) + pos as usize] {
            0 => None,
            id => Some(id as usize - 1),
        }
    }

    fn lex_answer(&self, sym: u32, pos: u32) -> Option<Answer<P>> {
        self.lexical
            .get(pos as usize)?
            .iter()
            .find(|(c, _, _)| *c == sym)
            .map(|(_, p, e)| Answer {
                prob: p.clone(),
                size: 1,
                origin: Origin::Lexical { entry: *e },
            })
    }

    /// Returns the entry for `(sym, pos)`, expanding the goal on first call.
    fn call(&mut self, sym: u32, pos: u32) -> usize {
        if let Some(id) = self.slot(sym, pos) {
            return id;
        }
        let id = self.entries.len();
        self.slots[sym as usize * (self.n + 1) + pos as usize] = id as u32 + 1;
        self.entries.push(Entry {
            sym,
            start: pos,
            answers: Vec::new(),
            consumers: Vec::new(),
        });
        self.stats.expansions += 1;
        if let Some(a) = self.lex_answer(sym, pos) {
            self.add_answer(id, pos + 1, a);
        }
        for &prod in &self.idx.by_lhs[sym as usize] {
            self.agenda.push(Partial {
                prod,
                dot: 0,
                start: pos,
                pos,
                prob: self.g.productions()[prod as usize].prob.clone(),
                size: 1,
                ends: Vec::new(),
            });
        }
        id
    }

    fn progress(&mut self, mut p: Partial<P>) {
        let rhs = &self.idx.prod_rhs[p.prod as usize];
        loop {
            let dot = p.dot as usize;
            if dot == rhs.len() {
                break;
            }
            // every remaining symbol needs at least one token
            if rhs.len() - dot > self.n - p.pos as usize {
                return;
            }
            let sym = rhs[dot];
            if self.idx.lexical_only[sym as usize] {
                match self.lexical[p.pos as usize]
                    .iter()
                    .find(|(c, _, _)| *c == sym)
                {
                    Some((_, prob, _)) => {
                        p = p.advance(p.pos + 1, prob, 1);
                        continue;
                    }
                    None => return,
                }
            }
            let eid = self.call(sym, p.pos);
            for (end, a) in &self.entries[eid].answers {
                self.agenda.push(p.advance(*end, &a.prob, a.size));
            }
            self.entries[eid].consumers.push(p);
            return;
        }
        let lhs = self.idx.prod_lhs[p.prod as usize];
        let eid = self
            .slot(lhs, p.start)
            .expect("partial derives from an expanded goal");
        let answer = Answer {
            prob: p.prob,
            size: p.size,
            origin: Origin::Production {
                prod: p.prod,
                ends: p.ends.into_boxed_slice(),
            },
        };
        self.add_answer(eid, p.pos, answer);
    }

    fn add_answer(&mut self, eid: usize, end: u32, cand: Answer<P>) {
        let (sym, start) = (self.entries[eid].sym, self.entries[eid].start);
        let existing = self.entries[eid]
            .answers
            .iter()
            .position(|(e, _)| *e == end);
        if let Some(i) = existing {
            let current = self.entries[eid].answers[i].1.clone();
            if !self.better(sym, start, &cand, sym, &current) {
                return;
            }
        }
        self.stats.answers += 1;
        let resumed: Vec<Partial<P>> = self.entries[eid]
            .consumers
            .iter()
            .map(|c| c.advance(end, &cand.prob, cand.size))
            .collect();
        let entry = &mut self.entries[eid];
        match existing {
            Some(i) => entry.answers[i].1 = cand,
            None => entry.answers.push((end, cand)),
        }
        self.agenda.extend(resumed);
    }

    /// Whether answer `a` for `(sa, start)` beats answer `b` for `(sb, start)`.
    fn better(&self, sa: u32, start: u32, a: &Answer<P>, sb: u32, b: &Answer<P>) -> bool {
        match a.prob.partial_cmp(&b.prob) {
            Some(Ordering::Greater) => return true,
            Some(Ordering::Less) => return false,
            _ => {}
        }
        match a.size.cmp(&b.size) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
        let mut la = Vec::new();
        let mut lb = Vec::new();
        self.labels(sa, start, a, &mut la);
        self.labels(sb, start, b, &mut lb);
        let names = &self.idx.names;
        la.iter()
            .map(|&s| &names[s as usize])
            .lt(lb.iter().map(|&s| &names[s as usize]))
    }

    fn labels(&self, sym: u32, start: u32, a: &Answer<P>, out: &mut Vec<u32>) {
        out.push(sym);
        if let Origin::Production { prod, ends } = &a.origin {
            let rhs = &self.idx.prod_rhs[*prod as usize];
            let mut from = start;
            for (&child, &end) in rhs.iter().zip(ends.iter()) {
                if self.idx.lexical_only[child as usize] {
                    out.push(child);
                } else if let Some(ca) = self.answer_at(child, from, end) {
                    self.labels(child, from, ca, out);
                }
                from = end;
            }
        }
    }

    fn answer_at(&self, sym: u32, start: u32, end: u32) -> Option<&Answer<P>> {
        let eid = self.slot(sym, start)?;
        self.entries[eid]
            .answers
            .iter()
            .find(|(e, _)| *e == end)
            .map(|(_, a)| a)
    }

    fn build(&self, sym: u32, start: u32, end: u32, a: &Answer<P>) -> ParseTree<P> {
        let label = &self.idx.names[sym as usize];
        match &a.origin {
            Origin::Lexical { entry } => ParseTree::preterminal(
                label,
                a.prob.clone(),
                word_of(&self.g.lexicon()[*entry as usize]),
            ),
            Origin::Production { prod, ends } => {
                let rhs = &self.idx.prod_rhs[*prod as usize];
                let mut from = start;
                let mut children = Vec::with_capacity(rhs.len());
                for (&child, &child_end) in rhs.iter().zip(ends.iter()) {
                    let ca = if self.idx.lexical_only[child as usize] {
                        self.lex_answer(child, from)
                            .expect("lexical child was matched")
                    } else {
                        self.answer_at(child, from, child_end)
                            .expect("child answer is tabled")
                            .clone()
                    };
                    children.push(self.build(child, from, child_end, &ca));
                    from = child_end;
                }
                debug_assert_eq!(from, end);
                ParseTree::internal(label, a.prob.clone(), children)
            }
        }
    }
}

/// Every parse tree of the whole input from any start symbol, excluding
/// trees that repeat a `(nonterminal, start, end)` goal on one root-to-leaf
/// path. Exponential; inputs longer than [`DEFAULT_ENUMERATION_BOUND`] are
/// refused.
pub fn parse_all<P: Probability, S: AsRef<str>>(
    g: &Grammar<P>,
    tokens: &[S],
) -> Result<Vec<ParseTree<P>>, ParseError> {
    parse_all_bounded(g, tokens, DEFAULT_ENUMERATION_BOUND)
}

pub fn parse_all_bounded<P: Probability, S: AsRef<str>>(
    g: &Grammar<P>,
    tokens: &[S],
    max_len: usize,
) -> Result<Vec<ParseTree<P>>, ParseError> {
    if tokens.len() > max_len {
        return Err(ParseError::InputTooLong {
            len: tokens.len(),
            max: max_len,
        });
    }
    let unknown: Vec<String> = tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| g.lookup(t).is_empty())
        .map(str::to_string)
        .fold(Vec::new(), |mut acc, t| {
            if !acc.contains(&t) {
                acc.push(t);
            }
            acc
        });
    if !unknown.is_empty() {
        return Err(ParseError::UnknownWords(unknown));
    }
    let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let mut enumerator = Enumerator {
        g,
        tokens: &tokens,
        spine: Vec::new(),
    };
    let mut out = Vec::new();
    if tokens.is_empty() {
        return Ok(out);
    }
    for s in g.start() {
        out.extend(enumerator.trees(s, 0, tokens.len()));
    }
    Ok(out)
}

struct Enumerator<'a, P> {
    g: &'a Grammar<P>,
    tokens: &'a [&'a str],
    spine: Vec<(&'a str, usize, usize)>,
}

impl<'a, P: Probability> Enumerator<'a, P> {
    fn trees(&mut self, sym: &'a str, i: usize, j: usize) -> Vec<ParseTree<P>> {
        if self.spine.contains(&(sym, i, j)) {
            return Vec::new();
        }
        let mut out = Vec::new();
        if j == i + 1 {
            for e in self.g.lookup(self.tokens[i]) {
                if e.category == sym {
                    out.push(ParseTree::preterminal(sym, e.prob.clone(), word_of(e)));
                }
            }
        }
        self.spine.push((sym, i, j));
        for prod in self.g.productions().iter().filter(|p| p.lhs == sym) {
            if prod.rhs.len() > j - i {
                continue;
            }
            for cuts in splits(i, j, prod.rhs.len()) {
                // cartesian product of the children's alternatives
                let mut partials: Vec<(P, Vec<ParseTree<P>>)> =
                    vec![(prod.prob.clone(), Vec::new())];
                for (k, child) in prod.rhs.iter().enumerate() {
                    let alts = self.trees(child, cuts[k], cuts[k + 1]);
                    let mut next = Vec::new();
                    for (p, kids) in &partials {
                        for alt in &alts {
                            let mut kids = kids.clone();
                            kids.push(alt.clone());
                            next.push((p.clone() * alt.prob.clone(), kids));
                        }
                    }
                    partials = next;
                    if partials.is_empty() {
                        break;
                    }
                }
                out.extend(
                    partials
                        .into_iter()
                        .map(|(p, kids)| ParseTree::internal(sym, p, kids)),
                );
            }
        }
        self.spine.pop();
        out
    }
}

/// All ways to cut `i..j` into `parts` nonempty consecutive spans, as
/// boundary lists `[i, .., j]`.
fn splits(i: usize, j: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![i, j]];
    }
    let mut out = Vec::new();
    for mid in i + 1..=j - (parts - 1) {
        for mut rest in splits(mid, j, parts - 1) {
            rest.insert(0, i);
            out.push(rest);
        }
    }
    out
}
