//! State shared by the REPL, the batch subcommands and the HTTP service.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use lplm_core::grammar::{self, builtin_grammar, load_grammar, BUILTIN_GRAMMARS};
use lplm_core::kb::{Answer, KbError};
use lplm_core::semantics::{analyze, Analysis};
use lplm_core::{AnswerForm, Grammar, KnowledgeBase, Probability, Term};

pub const DEFAULT_GRAMMAR: &str = "english";

/// Loads a bundled grammar by name, or a grammar file by path.
pub fn load_grammar_spec<P: Probability>(spec: &str) -> anyhow::Result<grammar::Grammar<P>> {
    let text = match builtin_grammar(spec) {
        Some(text) => text.to_string(),
        None => {
            let path = Path::new(spec);
            if !path.exists() {
                let names: Vec<&str> = BUILTIN_GRAMMARS.iter().map(|(n, _)| *n).collect();
                bail!(
                    "no grammar file `{spec}` and no bundled grammar of that name (bundled: {})",
                    names.join(", ")
                );
            }
            std::fs::read_to_string(path).with_context(|| format!("reading grammar {spec}"))?
        }
    };
    load_grammar(&text).with_context(|| format!("loading grammar {spec}"))
}

/// Loads the KB at `path`, or an empty KB when the file does not exist yet.
pub fn open_kb(path: Option<&Path>) -> anyhow::Result<KnowledgeBase> {
    match path {
        Some(p) if p.exists() => {
            KnowledgeBase::load_from(p).with_context(|| format!("loading {}", p.display()))
        }
        _ => Ok(KnowledgeBase::new()),
    }
}

pub fn parse_answer_form(s: &str) -> Result<AnswerForm, String> {
    match s {
        "term" => Ok(AnswerForm::Term),
        "sentence" => Ok(AnswerForm::Sentence),
        other => Err(format!(
            "answer form must be `term` or `sentence`, not `{other}`"
        )),
    }
}

/// Splits input into sentences at `.`, `?` and `!`, dropping quotes.
pub fn split_sentences(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| !matches!(c, '"' | '\u{201c}' | '\u{201d}'))
        .collect();
    cleaned
        .split(['.', '?', '!'])
        .map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|s| !s.is_empty())
        .collect()
}

/// Rounds away float noise from rule products (`0.0045000000000000005`).
pub fn tidy_prob(p: f64) -> f64 {
    format!("{p:.12e}").parse().unwrap_or(p)
}

/// Result of processing one sentence.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Stored { term: Term, duplicate: bool },
    Answered(Answer),
    Removed { term: Term, found: bool },
    Rejected(String),
}

impl Reply {
    pub fn render(&self, form: AnswerForm) -> String {
        match self {
            Reply::Stored {
                term,
                duplicate: false,
            } => format!("Stored: {term}"),
            Reply::Stored {
                term,
                duplicate: true,
            } => format!("Already known: {term}"),
            Reply::Answered(a) => format!("Answer: {}", a.render(form)),
            Reply::Removed { term, found: true } => format!("Removed: {term}"),
            Reply::Removed { term, found: false } => format!("Not in the knowledge base: {term}"),
            Reply::Rejected(why) => format!("Error: {why}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Any,
    Statement,
    Question,
}

pub struct Session {
    pub grammar: Grammar,
    pub kb: KnowledgeBase,
    pub kb_path: Option<PathBuf>,
    pub form: AnswerForm,
    /// (input, response) pairs, oldest first.
    pub history: Vec<(String, String)>,
}

impl Session {
    pub fn new(grammar: Grammar, kb: KnowledgeBase) -> Self {
        Session {
            grammar,
            kb,
            kb_path: None,
            form: AnswerForm::Term,
            history: Vec::new(),
        }
    }

    /// Stores a statement or answers a question, decided by the root of the
    /// best parse.
    pub fn process(&mut self, sentence: &str) -> Reply {
        self.process_as(sentence, Expect::Any)
    }

    /// Like [`Session::process`], rejecting sentences of the other kind.
    pub fn process_as(&mut self, sentence: &str, expect: Expect) -> Reply {
        match analyze(&self.grammar, sentence) {
            Err(e) => Reply::Rejected(e.to_string()),
            Ok(Analysis::Statement(_)) if expect == Expect::Question => {
                Reply::Rejected(format!("\"{sentence}\" is a statement, not a question"))
            }
            Ok(Analysis::Question(_)) if expect == Expect::Statement => {
                Reply::Rejected(format!("\"{sentence}\" is a question, not a statement"))
            }
            Ok(Analysis::Statement(st)) => {
                let duplicate = !self.kb.insert(st.term.clone(), st.source);
                Reply::Stored {
                    term: st.term,
                    duplicate,
                }
            }
            Ok(Analysis::Question(q)) => Reply::Answered(self.kb.answer(&q.goal)),
        }
    }

    pub fn remove(&mut self, sentence: &str) -> Reply {
        match analyze(&self.grammar, sentence) {
            Err(e) => Reply::Rejected(e.to_string()),
            Ok(Analysis::Question(_)) => Reply::Rejected("only statements can be removed".into()),
            Ok(Analysis::Statement(st)) => {
                let found = self.kb.retract(&st.term);
                Reply::Removed {
                    term: st.term,
                    found,
                }
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), KbError> {
        self.kb.save_to(path)
    }
}
