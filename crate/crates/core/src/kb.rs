//! Knowledge base of ground facts with unification-based retrieval.
//!
//! Facts are kept in insertion order together with the sentence they came
//! from, and indexed by `(functor, arity)`. Every answer to a question is a
//! binding taken from a stored fact; nothing else can be returned.
//!
//! File format: one fact per line, canonical term text, a tab, then the
//! source sentence. Lines starting with `#` are comments.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::grammar::Grammar;
use crate::prob::Probability;
use crate::semantics::{analyze, Analysis, AnalysisError, Goal, GoalKind, Statement};
use crate::term::{apply, read, rename_apart, unify, Term, TermSyntaxError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub term: Term,
    pub source: String,
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("\"{0}\" is a question; use query")]
    NotAStatement(String),
    #[error("\"{0}\" is a statement, not a question")]
    NotAQuestion(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub term: Term,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    /// Bindings of the question's variable, one per matching fact, in
    /// insertion order.
    Wh(Vec<Binding>),
    /// Closed world: `false` means no stored fact matches.
    YesNo(bool),
}

/// How answers are shown: the bound term (`black(bird)`) or the stored
/// sentence it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnswerForm {
    #[default]
    Term,
    Sentence,
}

impl Answer {
    pub fn kind(&self) -> GoalKind {
        match self {
            Answer::Wh(_) => GoalKind::Wh,
            Answer::YesNo(_) => GoalKind::YesNo,
        }
    }

    /// Text after `Answer: `. Several wh bindings are comma-separated; none
    /// reads `no`.
    pub fn render(&self, form: AnswerForm) -> String {
        match self {
            Answer::YesNo(true) => "yes".into(),
            Answer::YesNo(false) => "no".into(),
            Answer::Wh(bindings) if bindings.is_empty() => "no".into(),
            Answer::Wh(bindings) => {
                let parts: Vec<String> = bindings
                    .iter()
                    .map(|b| match form {
                        AnswerForm::Term => b.term.to_string(),
                        AnswerForm::Sentence => b.source.clone(),
                    })
                    .collect();
                parts.join(", ")
            }
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(AnswerForm::Term))
    }
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    facts: Vec<Fact>,
    index: HashMap<(String, usize), Vec<usize>>,
}

fn key_of(term: &Term) -> (String, usize) {
    let (name, arity) = term.key().expect("facts are ground");
    (name.to_string(), arity)
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, term: &Term) -> bool {
        self.position(term).is_some()
    }

    fn position(&self, term: &Term) -> Option<usize> {
        let key = key_of(term);
        self.index
            .get(&key)?
            .iter()
            .copied()
            .find(|&i| &self.facts[i].term == term)
    }

    /// Stores a ground fact; returns `false` when an equal term is already
    /// present (the KB is left unchanged).
    pub fn insert(&mut self, term: Term, source: impl Into<String>) -> bool {
        assert!(term.is_ground(), "knowledge-base facts must be ground");
        if self.contains(&term) {
            return false;
        }
        let key = key_of(&term);
        self.index.entry(key).or_default().push(self.facts.len());
        self.facts.push(Fact {
            term,
            source: source.into(),
        });
        true
    }

    /// Removes the fact equal to `term`; returns whether one was present.
    pub fn retract(&mut self, term: &Term) -> bool {
        let Some(pos) = self.position(term) else {
            return false;
        };
        self.facts.remove(pos);
        for positions in self.index.values_mut() {
            positions.retain(|&i| i != pos);
            for i in positions.iter_mut() {
                if *i > pos {
                    *i -= 1;
                }
            }
        }
        self.index.retain(|_, v| !v.is_empty());
        true
    }

    /// Whether the index lists exactly the stored facts, in order.
    pub fn index_is_consistent(&self) -> bool {
        let mut rebuilt: HashMap<(String, usize), Vec<usize>> = HashMap::new();
        for (i, f) in self.facts.iter().enumerate() {
            if !f.term.is_ground() {
                return false;
            }
            rebuilt.entry(key_of(&f.term)).or_default().push(i);
        }
        rebuilt == self.index
    }

    /// Parses a statement and stores its term. Re-adding a stored term
    /// returns the statement without changing the KB.
    pub fn add<P: Probability>(
        &mut self,
        g: &Grammar<P>,
        sentence: &str,
    ) -> Result<Statement<P>, KbError> {
        let st = self.statement(g, sentence)?;
        self.insert(st.term.clone(), st.source.clone());
        Ok(st)
    }

    /// Parses a statement and removes its term if stored.
    pub fn remove<P: Probability>(
        &mut self,
        g: &Grammar<P>,
        sentence: &str,
    ) -> Result<bool, KbError> {
        let st = self.statement(g, sentence)?;
        Ok(self.retract(&st.term))
    }

    /// Parses a question and answers it against the stored facts.
    pub fn query<P: Probability>(&self, g: &Grammar<P>, question: &str) -> Result<Answer, KbError> {
        match analyze(g, question)? {
            Analysis::Question(q) => Ok(self.answer(&q.goal)),
            Analysis::Statement(_) => Err(KbError::NotAQuestion(question.trim().to_string())),
        }
    }

    fn statement<P: Probability>(
        &self,
        g: &Grammar<P>,
        sentence: &str,
    ) -> Result<Statement<P>, KbError> {
        match analyze(g, sentence)? {
            Analysis::Statement(st) => Ok(st),
            Analysis::Question(_) => Err(KbError::NotAStatement(sentence.trim().to_string())),
        }
    }

    /// Answers a goal by unification against the facts with the goal's
    /// functor and arity.
    pub fn answer(&self, goal: &Goal) -> Answer {
        let candidates = goal
            .term
            .key()
            .and_then(|(name, arity)| self.index.get(&(name.to_string(), arity)))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        match goal.kind {
            GoalKind::YesNo => {
                Answer::YesNo(candidates.iter().any(|&i| self.facts[i].term == goal.term))
            }
            GoalKind::Wh => {
                let selector = goal.selector.clone().map(Term::Var);
                // rename the selector together with the goal
                let (renamed, selector) = match selector {
                    Some(sel) => {
                        let pair = rename_apart(&Term::compound("$", vec![goal.term.clone(), sel]));
                        match pair {
                            Term::Compound { mut args, .. } => {
                                let sel = args.pop().expect("pair");
                                (args.pop().expect("pair"), Some(sel))
                            }
                            _ => unreachable!("compound stays compound"),
                        }
                    }
                    None => (rename_apart(&goal.term), None),
                };
                let mut bindings = Vec::new();
                for &i in candidates {
                    let fact = &self.facts[i];
                    if let Some(s) = unify(&renamed, &fact.term) {
                        let term = match &selector {
                            Some(sel) => apply(&s, sel),
                            None => apply(&s, &renamed),
                        };
                        bindings.push(Binding {
                            term,
                            source: fact.source.clone(),
                        });
                    }
                }
                Answer::Wh(bindings)
            }
        }
    }

    pub fn save(&self, out: &mut impl Write) -> io::Result<()> {
        for f in &self.facts {
            let source: String = f
                .source
                .chars()
                .map(|c| if c == '\t' || c == '\n' { ' ' } else { c })
                .collect();
            writeln!(out, "{}\t{}", f.term, source)?;
        }
        Ok(())
    }

    pub fn load(input: impl BufRead) -> Result<Self, KbError> {
        let mut kb = KnowledgeBase::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (term_text, source) = line.split_once('\t').unwrap_or((line.as_str(), ""));
            let term =
                read(term_text.trim_end()).map_err(|e: TermSyntaxError| KbError::Format {
                    line: lineno,
                    message: e.to_string(),
                })?;
            if !term.is_ground() {
                return Err(KbError::Format {
                    line: lineno,
                    message: "fact is not ground".into(),
                });
            }
            kb.insert(term, source);
        }
        Ok(kb)
    }

    pub fn save_to(&self, path: impl AsRef<Path>) -> Result<(), KbError> {
        let mut buf = Vec::new();
        self.save(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load_from(path: impl AsRef<Path>) -> Result<Self, KbError> {
        let file = fs::File::open(path)?;
        Self::load(io::BufReader::new(file))
    }
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.facts == other.facts
    }
}
