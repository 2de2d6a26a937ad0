use std::fs::{self, File};
use std::io::{self, BufWriter, IsTerminal, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use lplm::api::{self, AppState};
use lplm::repl;
use lplm::session::{
    load_grammar_spec, open_kb, parse_answer_form, split_sentences, tidy_prob, Expect, Reply,
    Session, DEFAULT_GRAMMAR,
};
use lplm_core::bench::{self, BenchKind, BenchSpec, TIERS};
use lplm_core::semantics::{analyze, Analysis};
use lplm_core::{AnswerForm, Exact, Probability};

#[derive(Parser)]
#[command(
    name = "lplm",
    version,
    about = "Grounded question answering over a knowledge base of parsed English facts"
)]
struct Cli {
    /// Grammar file, or a bundled grammar: english, runs, sleeps,
    /// ambiguous, attachment.
    #[arg(long, global = true, env = "LPLM_GRAMMAR", default_value = DEFAULT_GRAMMAR)]
    grammar: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive session: statements are stored, questions answered.
    Repl {
        /// Knowledge-base file, loaded at start and saved on exit.
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long, default_value = "term", value_parser = parse_answer_form)]
        answer_form: AnswerForm,
    },
    /// Store the statements in TEXT.
    Add {
        text: String,
        #[arg(long)]
        kb: PathBuf,
    },
    /// Remove the facts the statements in TEXT denote.
    Remove {
        text: String,
        #[arg(long)]
        kb: PathBuf,
    },
    /// Answer the questions in TEXT.
    Query {
        text: String,
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, default_value = "term", value_parser = parse_answer_form)]
        answer_form: AnswerForm,
    },
    /// Print the most probable parse tree, its probability and its term.
    Parse {
        text: String,
        /// Exact rational probabilities.
        #[arg(long)]
        exact: bool,
    },
    /// Time the tabled parser against the CYK baseline on generated grammars.
    Bench {
        /// Grammar kind; all four when omitted.
        #[arg(long)]
        kind: Option<BenchKind>,
        /// Size tier 1-3; all three when omitted.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        tier: Option<u8>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// CSV output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sentence lengths as `a..b` or a comma list.
        #[arg(long, default_value = "1..50", value_parser = parse_lengths)]
        lengths: Lengths,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        /// Time budget per parser and sentence, in seconds.
        #[arg(long, default_value_t = 30.0)]
        timeout: f64,
        /// Directory for gnuplot data files, one per kind.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Serve the JSON API (and static UI assets).
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long)]
        kb: Option<PathBuf>,
        /// Rewrite the KB file after every mutation.
        #[arg(long)]
        autosave: bool,
        /// Directory of static files served outside /api.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

#[derive(Clone)]
struct Lengths(Vec<usize>);

fn parse_lengths(s: &str) -> Result<Lengths, String> {
    let bad = || format!("lengths must look like `1..50` or `5,10,20`, not `{s}`");
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        if a == 0 || a > b {
            return Err(bad());
        }
        return Ok(Lengths((a..=b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()
        .map(Lengths)
}

fn sentences(text: &str) -> anyhow::Result<Vec<String>> {
    let s = split_sentences(text);
    if s.is_empty() {
        bail!("no sentence in input");
    }
    Ok(s)
}

/// Runs `f` on each sentence and prints its reply; fails if any was rejected.
fn batch(
    session: &mut Session,
    text: &str,
    mut f: impl FnMut(&mut Session, &str) -> Reply,
) -> anyhow::Result<bool> {
    let mut ok = true;
    for s in sentences(text)? {
        let reply = f(session, &s);
        ok &= !matches!(reply, Reply::Rejected(_));
        println!("{}", reply.render(session.form));
    }
    Ok(ok)
}

fn print_parse<P: Probability>(
    grammar: &str,
    text: &str,
    show: impl Fn(&P) -> String,
) -> anyhow::Result<bool> {
    let g = load_grammar_spec::<P>(grammar)?;
    let mut ok = true;
    for s in sentences(text)? {
        match analyze(&g, &s) {
            Ok(a) => {
                let kind = match a {
                    Analysis::Statement(_) => "statement",
                    Analysis::Question(_) => "question",
                };
                println!("tree: {}", a.tree());
                println!("prob: {}", show(a.prob()));
                println!("term: {}", a.term());
                println!("kind: {kind}");
            }
            Err(e) => {
                ok = false;
                println!("Error: {e}");
            }
        }
    }
    Ok(ok)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Repl { kb, answer_form } => {
            let mut session =
                Session::new(load_grammar_spec(&cli.grammar)?, open_kb(kb.as_deref())?);
            session.kb_path = kb;
            session.form = answer_form;
            let stdin = io::stdin();
            let interactive = stdin.is_terminal();
            if interactive {
                println!(
                    "lplm: grammar {}, {} facts. :help for commands.",
                    cli.grammar,
                    session.kb.len()
                );
            }
            repl::run(&mut session, stdin.lock(), &mut io::stdout(), interactive)?;
            Ok(true)
        }
        Command::Add { text, kb } => {
            let mut session = Session::new(load_grammar_spec(&cli.grammar)?, open_kb(Some(&kb))?);
            let ok = batch(&mut session, &text, |s, sentence| {
                s.process_as(sentence, Expect::Statement)
            })?;
            session
                .save(&kb)
                .with_context(|| format!("saving {}", kb.display()))?;
            Ok(ok)
        }
        Command::Remove { text, kb } => {
            let mut session = Session::new(load_grammar_spec(&cli.grammar)?, open_kb(Some(&kb))?);
            let ok = batch(&mut session, &text, |s, sentence| s.remove(sentence))?;
            session
                .save(&kb)
                .with_context(|| format!("saving {}", kb.display()))?;
            Ok(ok)
        }
        Command::Query {
            text,
            kb,
            answer_form,
        } => {
            let mut session = Session::new(load_grammar_spec(&cli.grammar)?, open_kb(Some(&kb))?);
            session.form = answer_form;
            batch(&mut session, &text, |s, sentence| {
                s.process_as(sentence, Expect::Question)
            })
        }
        Command::Parse { text, exact } => {
            if exact {
                print_parse::<Exact>(&cli.grammar, &text, |p| p.to_text())
            } else {
                print_parse::<f64>(&cli.grammar, &text, |p| tidy_prob(*p).to_string())
            }
        }
        Command::Bench {
            kind,
            tier,
            seed,
            out,
            lengths,
            repeats,
            timeout,
            gnuplot,
        } => {
            let kinds: Vec<BenchKind> = kind.map_or(BenchKind::ALL.to_vec(), |k| vec![k]);
            let tiers: Vec<u8> = tier.map_or(TIERS.to_vec(), |t| vec![t]);
            let mut results = Vec::new();
            for &k in &kinds {
                for &t in &tiers {
                    let spec = BenchSpec {
                        lengths: lengths.0.clone(),
                        repeats,
                        timeout: Duration::from_secs_f64(timeout),
                        ..BenchSpec::new(k, t, seed)
                    };
                    let r = bench::run_bench(&spec)?;
                    let fit = r.fit.map_or("no fit".to_string(), |f| {
                        format!(
                            "slope {:.3e} s/token, intercept {:.3e} s, R2 {:.3}",
                            f.slope, f.intercept, f.r2
                        )
                    });
                    eprintln!(
                        "{k} tier {t}: {} rules, {} sentences, {fit}",
                        r.rule_count,
                        r.sentences.len()
                    );
                    if !r.skipped.is_empty() {
                        eprintln!("  lengths not derivable: {:?}", r.skipped);
                    }
                    results.push(r);
                }
            }
            match out {
                Some(path) => {
                    let file = File::create(&path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    bench::write_csv(&results, BufWriter::new(file))?;
                }
                None => bench::write_csv(&results, io::stdout().lock())?,
            }
            if let Some(dir) = gnuplot {
                fs::create_dir_all(&dir)?;
                for &k in &kinds {
                    let of_kind: Vec<_> = results
                        .iter()
                        .filter(|r| r.spec.kind == k)
                        .cloned()
                        .collect();
                    let mut f = BufWriter::new(File::create(dir.join(format!("{k}.dat")))?);
                    bench::write_gnuplot(&of_kind, &mut f)?;
                    f.flush()?;
                }
            }
            Ok(true)
        }
        Command::Serve {
            port,
            host,
            kb,
            autosave,
            assets,
        } => {
            let grammar = load_grammar_spec(&cli.grammar)?;
            let state = AppState::new(grammar, open_kb(kb.as_deref())?, kb, autosave);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(api::serve(state, SocketAddr::new(host, port), assets))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("lplm: {e:#}");
            ExitCode::from(2)
        }
    }
}
