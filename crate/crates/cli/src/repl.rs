//! Line-oriented session: each input line may hold several sentences, and
//! lines starting with `:` are commands.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use lplm_core::KnowledgeBase;

use crate::session::{split_sentences, Session};

pub const HELP: &str = "\
Type statements to store them and questions to query them; several sentences
per line are processed in order. Commands:
  :remove <sentence>   remove the fact a statement denotes
  :kb                  list stored facts
  :save [path]         save the knowledge base (default: the --kb file)
  :load <path>         replace the knowledge base with a saved one
  :help                show this text
  :quit                leave (saves to the --kb file, if any)";

/// Handles one input line. Returns the output lines and whether the
/// session should end.
pub fn handle_line(session: &mut Session, line: &str) -> (Vec<String>, bool) {
    let line = line.trim();
    if line.is_empty() {
        return (Vec::new(), false);
    }
    let mut quit = false;
    let out = if let Some(command) = line.strip_prefix(':') {
        let (name, arg) = command
            .split_once(char::is_whitespace)
            .unwrap_or((command, ""));
        let arg = arg.trim();
        match name {
            "quit" | "q" | "exit" => {
                quit = true;
                Vec::new()
            }
            "help" | "h" => HELP.lines().map(String::from).collect(),
            "kb" => {
                if session.kb.is_empty() {
                    vec!["(empty)".into()]
                } else {
                    session
                        .kb
                        .facts()
                        .iter()
                        .map(|f| format!("{}\t{}", f.term, f.source))
                        .collect()
                }
            }
            "remove" => {
                let sentences = split_sentences(arg);
                if sentences.is_empty() {
                    vec!["Error: :remove needs a sentence".into()]
                } else {
                    sentences
                        .iter()
                        .map(|s| session.remove(s).render(session.form))
                        .collect()
                }
            }
            "save" => {
                let path = if arg.is_empty() {
                    session.kb_path.clone()
                } else {
                    Some(PathBuf::from(arg))
                };
                match path {
                    None => vec!["Error: :save needs a path (no --kb file given)".into()],
                    Some(p) => match session.save(&p) {
                        Ok(()) => vec![format!(
                            "Saved {} facts to {}",
                            session.kb.len(),
                            p.display()
                        )],
                        Err(e) => vec![format!("Error: {e}")],
                    },
                }
            }
            "load" => {
                if arg.is_empty() {
                    vec!["Error: :load needs a path".into()]
                } else {
                    match KnowledgeBase::load_from(arg) {
                        Ok(kb) => {
                            session.kb = kb;
                            vec![format!("Loaded {} facts from {arg}", session.kb.len())]
                        }
                        Err(e) => vec![format!("Error: {arg}: {e}")],
                    }
                }
            }
            other => vec![format!("Error: unknown command :{other} (try :help)")],
        }
    } else {
        split_sentences(line)
            .iter()
            .map(|s| session.process(s).render(session.form))
            .collect()
    };
    session.history.push((line.to_string(), out.join("\n")));
    (out, quit)
}

/// Runs the session until `:quit` or end of input. Saves to the session's
/// KB file on the way out.
pub fn run(
    session: &mut Session,
    input: impl BufRead,
    out: &mut impl Write,
    prompt: bool,
) -> io::Result<()> {
    let mut lines = input.lines();
    loop {
        if prompt {
            write!(out, "> ")?;
            out.flush()?;
        }
        let Some(line) = lines.next() else { break };
        let (replies, quit) = handle_line(session, &line?);
        for r in replies {
            writeln!(out, "{r}")?;
        }
        if quit {
            break;
        }
    }
    if let Some(path) = session.kb_path.clone() {
        if let Err(e) = session.save(&path) {
            writeln!(out, "Error: saving {}: {e}", path.display())?;
        }
    }
    Ok(())
}
