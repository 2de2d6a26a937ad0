//! Parse trees to logical terms.
//!
//! A statement `subject verb [object] [adverbial]` becomes
//! `root(subject[, object][, adverbial])` where `root` is the main verb's
//! root form. Auxiliaries, modals and tense are dropped from the term.
//! Noun phrases drop determiners and wrap the head noun in its modifiers,
//! nearest first: `the big black bird` is `big(black(bird))`. A prepositional
//! phrase is an adverbial `in(human(lungs))`.
//!
//! Questions become goals of the same shape. A wh-word takes the slot it
//! stands for: the subject (`who runs` is `run(X)`), the object (`what does
//! bob eat` is `eat(bob,X)`) or the adverbial (`how does the black bird fly`
//! is `fly(black(bird),X)`). Auxiliary-fronted questions without a wh-word
//! are ground yes/no goals.
//!
//! The translation reads node labels: `s` and `q` roots, `np` and `pp`
//! phrases, and preterminal categories listed in the constants below. Any
//! grammar using those labels can drive it.

use std::fmt;

use thiserror::Error;

use crate::grammar::Grammar;
use crate::parser::{parse_best, tokenize, ParseError, ParseTree, Word};
use crate::prob::Probability;
use crate::term::{is_valid_name, Term, Var};

pub const STATEMENT_ROOT: &str = "s";
pub const QUESTION_ROOT: &str = "q";
const NOUN_PHRASE: &str = "np";
const PREP_PHRASE: &str = "pp";

const VERBS: [&str; 4] = ["v", "vb", "vbn", "vbg"];
const AUXILIARIES: [&str; 5] = ["av", "md", "hv", "be", "bn"];
const NOUNS: [&str; 2] = ["nn", "pn"];
const ADJECTIVES: [&str; 1] = ["jj"];
const DETERMINERS: [&str; 1] = ["dt"];
const ADVERBS: [&str; 1] = ["rb"];
const PREPOSITIONS: [&str; 1] = ["p"];
const QUESTION_WORDS: [&str; 1] = ["qw"];

/// Name of the answer variable in wh-goals.
pub const SELECTOR: &str = "X";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error("unsupported question: {0}")]
    UnsupportedQuestion(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aspect {
    Simple,
    Perfect,
    Continuous,
    PerfectContinuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Time {
    Past,
    Present,
    Future,
}

/// Tense of a clause, read off its verb group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tense {
    pub aspect: Aspect,
    pub time: Time,
}

impl fmt::Display for Tense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let time = match self.time {
            Time::Past => "past",
            Time::Present => "present",
            Time::Future => "future",
        };
        let aspect = match self.aspect {
            Aspect::Simple => "simple",
            Aspect::Perfect => "perfect",
            Aspect::Continuous => "continuous",
            Aspect::PerfectContinuous => "perfect continuous",
        };
        write!(f, "{time} {aspect}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement<P> {
    pub term: Term,
    pub source: String,
    pub tree: ParseTree<P>,
    pub prob: P,
    pub tense: Option<Tense>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalKind {
    Wh,
    YesNo,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub term: Term,
    pub kind: GoalKind,
    /// The variable whose binding answers a wh-goal.
    pub selector: Option<Var>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question<P> {
    pub goal: Goal,
    pub source: String,
    pub tree: ParseTree<P>,
    pub prob: P,
}

/// A parsed sentence, classified by the root of its best parse.
#[derive(Debug, Clone, PartialEq)]
pub enum Analysis<P> {
    Statement(Statement<P>),
    Question(Question<P>),
}

impl<P> Analysis<P> {
    pub fn tree(&self) -> &ParseTree<P> {
        match self {
            Analysis::Statement(s) => &s.tree,
            Analysis::Question(q) => &q.tree,
        }
    }

    pub fn term(&self) -> &Term {
        match self {
            Analysis::Statement(s) => &s.term,
            Analysis::Question(q) => &q.goal.term,
        }
    }

    pub fn prob(&self) -> &P {
        match self {
            Analysis::Statement(s) => &s.prob,
            Analysis::Question(q) => &q.prob,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("empty input")]
    Empty,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no parse for \"{0}\"")]
    NoParse(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Tokenizes, parses and translates one sentence.
pub fn analyze<P: Probability>(g: &Grammar<P>, text: &str) -> Result<Analysis<P>, AnalysisError> {
    let tokens = tokenize(g, text);
    if tokens.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let tree = parse_best(g, &tokens)?.ok_or_else(|| AnalysisError::NoParse(tokens.join(" ")))?;
    let source = text
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    match tree.label.as_str() {
        STATEMENT_ROOT => {
            let mut st = tree_to_term(&tree)?;
            st.source = source;
            Ok(Analysis::Statement(st))
        }
        QUESTION_ROOT => {
            let goal = question_to_goal(&tree)?;
            let prob = tree.prob.clone();
            Ok(Analysis::Question(Question {
                goal,
                source,
                tree,
                prob,
            }))
        }
        other => Err(SemanticsError::Malformed(format!("unexpected root `{other}`")).into()),
    }
}

#[derive(Debug)]
enum Item {
    QuestionWord(String),
    Aux(String, Word),
    Verb(Word),
    Np(Term),
    Adverbial(Term),
}

/// Subject, verb group and complements of one clause, in surface order.
#[derive(Debug, Default)]
struct Clause {
    question_word: Option<String>,
    auxiliaries: Vec<(String, Word)>,
    verb: Option<Word>,
    before_verb: Vec<Term>,
    object: Option<Term>,
    adverbial: Option<Term>,
}

fn name_of(word: &Word) -> Result<String, SemanticsError> {
    if is_valid_name(&word.root) {
        Ok(word.root.clone())
    } else {
        Err(SemanticsError::Malformed(format!(
            "`{}` is not a valid term name",
            word.root
        )))
    }
}

fn noun_phrase<P>(tree: &ParseTree<P>) -> Result<Term, SemanticsError> {
    fn collect<'a, P>(
        t: &'a ParseTree<P>,
        out: &mut Vec<(&'a str, &'a Word)>,
    ) -> Result<(), SemanticsError> {
        match t.word() {
            Some(w) => {
                out.push((t.label.as_str(), w));
                Ok(())
            }
            None if t.label == PREP_PHRASE || (t.label == NOUN_PHRASE && !out.is_empty()) => Err(
                SemanticsError::Malformed("nested noun-phrase modifiers are not supported".into()),
            ),
            None => t.children().iter().try_for_each(|c| collect(c, out)),
        }
    }
    let mut leaves = Vec::new();
    collect(tree, &mut leaves)?;
    let mut words = Vec::new();
    let mut last_category = "";
    for (category, word) in leaves {
        if DETERMINERS.contains(&category) {
            continue;
        }
        if !(ADJECTIVES.contains(&category) || NOUNS.contains(&category)) {
            return Err(SemanticsError::Malformed(format!(
                "`{category}` inside a noun phrase"
            )));
        }
        words.push(name_of(word)?);
        last_category = category;
    }
    if !NOUNS.contains(&last_category) {
        return Err(SemanticsError::Malformed(
            "noun phrase without a head noun".into(),
        ));
    }
    let head = words.pop().expect("head noun present");
    let mut term = Term::Atom(head);
    for modifier in words.into_iter().rev() {
        term = Term::compound(modifier, vec![term]);
    }
    Ok(term)
}

fn prep_phrase<P>(tree: &ParseTree<P>) -> Result<Term, SemanticsError> {
    match tree.children() {
        [p, np] if PREPOSITIONS.contains(&p.label.as_str()) && np.label == NOUN_PHRASE => {
            let prep = name_of(
                p.word()
                    .ok_or_else(|| SemanticsError::Malformed("bad preposition".into()))?,
            )?;
            Ok(Term::compound(prep, vec![noun_phrase(np)?]))
        }
        _ => Err(SemanticsError::Malformed(format!(
            "unexpected prepositional phrase {tree}"
        ))),
    }
}

fn flatten<P>(tree: &ParseTree<P>, out: &mut Vec<Item>) -> Result<(), SemanticsError> {
    let label = tree.label.as_str();
    if label == NOUN_PHRASE {
        out.push(Item::Np(noun_phrase(tree)?));
        return Ok(());
    }
    if label == PREP_PHRASE {
        out.push(Item::Adverbial(prep_phrase(tree)?));
        return Ok(());
    }
    let Some(word) = tree.word() else {
        return tree.children().iter().try_for_each(|c| flatten(c, out));
    };
    let item = if QUESTION_WORDS.contains(&label) {
        Item::QuestionWord(word.token.clone())
    } else if AUXILIARIES.contains(&label) {
        Item::Aux(label.to_string(), word.clone())
    } else if VERBS.contains(&label) {
        Item::Verb(word.clone())
    } else if ADVERBS.contains(&label) {
        Item::Adverbial(Term::Atom(name_of(word)?))
    } else if NOUNS.contains(&label) {
        Item::Np(Term::Atom(name_of(word)?))
    } else {
        return Err(SemanticsError::Malformed(format!(
            "unexpected `{label}({})`",
            word.token
        )));
    };
    out.push(item);
    Ok(())
}

fn clause<P>(tree: &ParseTree<P>) -> Result<Clause, SemanticsError> {
    let mut items = Vec::new();
    for c in tree.children() {
        flatten(c, &mut items)?;
    }
    let mut cl = Clause::default();
    for (i, item) in items.into_iter().enumerate() {
        match item {
            Item::QuestionWord(w) if i == 0 => cl.question_word = Some(w),
            Item::QuestionWord(w) => {
                return Err(SemanticsError::Malformed(format!(
                    "question word `{w}` not in front"
                )))
            }
            Item::Aux(category, w) if cl.verb.is_none() => cl.auxiliaries.push((category, w)),
            Item::Verb(w) if cl.verb.is_none() => cl.verb = Some(w),
            Item::Np(t) if cl.verb.is_none() => cl.before_verb.push(t),
            Item::Np(t) if cl.object.is_none() && cl.adverbial.is_none() => cl.object = Some(t),
            Item::Adverbial(t) if cl.verb.is_some() && cl.adverbial.is_none() => {
                cl.adverbial = Some(t)
            }
            other => {
                return Err(SemanticsError::Malformed(format!(
                    "unexpected constituent {other:?}"
                )))
            }
        }
    }
    if cl.verb.is_none() {
        return Err(SemanticsError::Malformed("clause without a verb".into()));
    }
    Ok(cl)
}

fn build(
    verb: &Word,
    subject: Term,
    object: Option<Term>,
    adverbial: Option<Term>,
) -> Result<Term, SemanticsError> {
    let mut args = vec![subject];
    args.extend(object);
    args.extend(adverbial);
    Ok(Term::compound(name_of(verb)?, args))
}

fn tense(cl: &Clause) -> Option<Tense> {
    let verb = cl.verb.as_ref()?;
    let aspect = if cl.auxiliaries.iter().any(|(category, _)| category == "bn") {
        Aspect::PerfectContinuous
    } else if verb.features.contains("perfect") {
        Aspect::Perfect
    } else if verb.features.contains("continuous") {
        Aspect::Continuous
    } else if verb.features.contains("simple") {
        Aspect::Simple
    } else {
        return None;
    };
    let time_of = |w: &Word| {
        if w.features.contains("future") {
            Some(Time::Future)
        } else if w.features.contains("past") {
            Some(Time::Past)
        } else if w.features.contains("present") {
            Some(Time::Present)
        } else {
            None
        }
    };
    let time = cl
        .auxiliaries
        .iter()
        .find_map(|(_, w)| time_of(w))
        .or_else(|| time_of(verb))?;
    Some(Tense { aspect, time })
}

/// Ground term of a statement tree (root `s`).
pub fn tree_to_term<P: Clone>(tree: &ParseTree<P>) -> Result<Statement<P>, SemanticsError> {
    if tree.label != STATEMENT_ROOT {
        return Err(SemanticsError::Malformed(format!(
            "`{}` is not a statement",
            tree.label
        )));
    }
    let cl = clause(tree)?;
    if cl.question_word.is_some() {
        return Err(SemanticsError::Malformed(
            "statement with a question word".into(),
        ));
    }
    let [subject] = <[Term; 1]>::try_from(cl.before_verb.clone())
        .map_err(|_| SemanticsError::Malformed("statement needs exactly one subject".into()))?;
    let verb = cl.verb.as_ref().expect("checked in clause");
    let term = build(verb, subject, cl.object.clone(), cl.adverbial.clone())?;
    Ok(Statement {
        term,
        source: tree.leaves().join(" "),
        tree: tree.clone(),
        prob: tree.prob.clone(),
        tense: tense(&cl),
    })
}

/// Goal of a question tree (root `q`).
pub fn question_to_goal<P>(tree: &ParseTree<P>) -> Result<Goal, SemanticsError> {
    if tree.label != QUESTION_ROOT {
        return Err(SemanticsError::Malformed(format!(
            "`{}` is not a question",
            tree.label
        )));
    }
    let cl = clause(tree)?;
    let verb = cl.verb.as_ref().expect("checked in clause");
    let selector = Var::new(SELECTOR);
    let hole = Term::Var(selector.clone());
    let Some(qword) = cl.question_word.as_deref() else {
        if cl.auxiliaries.is_empty() {
            return Err(SemanticsError::Malformed(
                "yes/no question without an auxiliary".into(),
            ));
        }
        let [subject] = <[Term; 1]>::try_from(cl.before_verb)
            .map_err(|_| SemanticsError::Malformed("question needs exactly one subject".into()))?;
        let term = build(verb, subject, cl.object, cl.adverbial)?;
        return Ok(Goal {
            term,
            kind: GoalKind::YesNo,
            selector: None,
        });
    };
    if !matches!(qword, "who" | "what" | "how") {
        return Err(SemanticsError::UnsupportedQuestion(format!(
            "`{qword}` questions"
        )));
    }
    let term = match (cl.before_verb.len(), qword) {
        (0, "how") => {
            return Err(SemanticsError::UnsupportedQuestion(
                "`how` in subject position".into(),
            ));
        }
        (0, _) => build(verb, hole, cl.object, cl.adverbial)?,
        (1, "how") => {
            if cl.adverbial.is_some() {
                return Err(SemanticsError::UnsupportedQuestion(
                    "`how` with an adverbial".into(),
                ));
            }
            let subject = cl.before_verb.into_iter().next().expect("one subject");
            build(verb, subject, cl.object, Some(hole))?
        }
        (1, _) => {
            if cl.object.is_some() {
                return Err(SemanticsError::UnsupportedQuestion(format!(
                    "`{qword}` with an object"
                )));
            }
            let subject = cl.before_verb.into_iter().next().expect("one subject");
            build(verb, subject, Some(hole), cl.adverbial)?
        }
        _ => {
            return Err(SemanticsError::Malformed(
                "question with several subjects".into(),
            ))
        }
    };
    Ok(Goal {
        term,
        kind: GoalKind::Wh,
        selector: Some(selector),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::load_grammar;
    use crate::term::read;

    const EXAMPLE: &str = include_str!("../grammars/runs.gr");
    const ENGLISH: &str = include_str!("../grammars/english.gr");

    fn english() -> Grammar<f64> {
        load_grammar(ENGLISH).unwrap()
    }

    fn statement(g: &Grammar<f64>, text: &str) -> Statement<f64> {
        match analyze(g, text).unwrap() {
            Analysis::Statement(s) => s,
            other => panic!("{text}: expected a statement, got {other:?}"),
        }
    }

    fn goal(g: &Grammar<f64>, text: &str) -> Goal {
        match analyze(g, text).unwrap() {
            Analysis::Question(q) => q.goal,
            other => panic!("{text}: expected a question, got {other:?}"),
        }
    }

    fn wh(term: &str) -> Goal {
        Goal {
            term: read(term).unwrap(),
            kind: GoalKind::Wh,
            selector: Some(Var::new("X")),
        }
    }

    fn yes_no(term: &str) -> Goal {
        Goal {
            term: read(term).unwrap(),
            kind: GoalKind::YesNo,
            selector: None,
        }
    }

    #[test]
    fn worked_example_terms() {
        let g: Grammar<f64> = load_grammar(EXAMPLE).unwrap();
        assert_eq!(statement(&g, "bob runs").term, read("run(bob)").unwrap());
        assert_eq!(goal(&g, "who runs"), wh("run(_X)"));
        assert_eq!(goal(&g, "does bob run"), yes_no("run(bob)"));
    }

    #[test]
    fn english_statements() {
        let g = english();
        assert_eq!(statement(&g, "bob runs").term, read("run(bob)").unwrap());
        assert_eq!(
            statement(&g, "the black bird flies bravely").term,
            read("fly(black(bird),bravely)").unwrap()
        );
        assert_eq!(
            statement(&g, "Furosemide causes temporary hearing loss.").term,
            read("cause(furosemide,temporary(hearing_loss))").unwrap()
        );
        assert_eq!(
            statement(&g, "Fir trees can grow in human lungs.").term,
            read("grow(fir_trees,in(human(lungs)))").unwrap()
        );
        assert_eq!(
            statement(&g, "the big black dog chases the cat quickly").term,
            read("chase(big(black(dog)),cat,quickly)").unwrap()
        );
    }

    #[test]
    fn english_questions() {
        let g = english();
        assert_eq!(goal(&g, "who runs"), wh("run(_X)"));
        assert_eq!(
            goal(&g, "how does the black bird fly"),
            wh("fly(black(bird),_X)")
        );
        assert_eq!(goal(&g, "who flies bravely"), wh("fly(_X,bravely)"));
        assert_eq!(
            goal(&g, "does the black bird fly bravely"),
            yes_no("fly(black(bird),bravely)")
        );
        assert_eq!(
            goal(&g, "what causes temporary hearing loss?"),
            wh("cause(_X,temporary(hearing_loss))")
        );
        assert_eq!(
            goal(&g, "What can grow in human lungs?"),
            wh("grow(_X,in(human(lungs)))")
        );
        assert_eq!(
            goal(&g, "what does the dog chase quickly"),
            wh("chase(dog,_X,quickly)")
        );
        assert_eq!(
            goal(&g, "how does the dog chase the cat"),
            wh("chase(dog,cat,_X)")
        );
        assert_eq!(goal(&g, "has bob been running"), yes_no("run(bob)"));
    }

    #[test]
    fn tenses_are_recognized_and_erased() {
        let g = english();
        let cases = [
            ("bob runs", Aspect::Simple, Time::Present),
            ("bob ran", Aspect::Simple, Time::Past),
            ("bob will run", Aspect::Simple, Time::Future),
            ("bob has run", Aspect::Perfect, Time::Present),
            ("bob had run", Aspect::Perfect, Time::Past),
            ("bob will have run", Aspect::Perfect, Time::Future),
            ("bob is running", Aspect::Continuous, Time::Present),
            ("bob was running", Aspect::Continuous, Time::Past),
            ("bob will be running", Aspect::Continuous, Time::Future),
            (
                "bob has been running",
                Aspect::PerfectContinuous,
                Time::Present,
            ),
            (
                "bob had been running",
                Aspect::PerfectContinuous,
                Time::Past,
            ),
            (
                "bob will have been running",
                Aspect::PerfectContinuous,
                Time::Future,
            ),
        ];
        for (text, aspect, time) in cases {
            let st = statement(&g, text);
            assert_eq!(st.term, read("run(bob)").unwrap(), "{text}");
            assert_eq!(st.tense, Some(Tense { aspect, time }), "{text}");
        }
    }

    #[test]
    fn question_word_outside_supported_set() {
        let text = "start q\nprod q -> qw v @ 1.0\nlex qw where\nlex v runs root=run\n";
        let g: Grammar<f64> = load_grammar(text).unwrap();
        assert!(matches!(
            analyze(&g, "where runs"),
            Err(AnalysisError::Semantics(
                SemanticsError::UnsupportedQuestion(_)
            ))
        ));
    }

    #[test]
    fn rejects_wrong_roots() {
        let g = english();
        let tree = crate::parser::parse_best(&g, &["who", "runs"])
            .unwrap()
            .unwrap();
        assert!(matches!(
            tree_to_term(&tree),
            Err(SemanticsError::Malformed(_))
        ));
        let tree = crate::parser::parse_best(&g, &["bob", "runs"])
            .unwrap()
            .unwrap();
        assert!(matches!(
            question_to_goal(&tree),
            Err(SemanticsError::Malformed(_))
        ));
    }

    #[test]
    fn statement_terms_are_ground() {
        let g = english();
        for text in [
            "bob runs",
            "the old man walks slowly",
            "alice loves the small cat",
        ] {
            let st = statement(&g, text);
            assert!(st.term.is_ground());
            assert_eq!(st.source, text);
        }
        assert_eq!(statement(&g, "  Bob   runs ").source, "bob runs");
    }

    #[test]
    fn analysis_errors() {
        let g = english();
        assert_eq!(analyze(&g, " ?"), Err(AnalysisError::Empty));
        assert!(matches!(
            analyze(&g, "runs bob the"),
            Err(AnalysisError::NoParse(_))
        ));
        assert!(matches!(
            analyze(&g, "colorless green ideas sleep furiously"),
            Err(AnalysisError::Parse(ParseError::UnknownWords(w))) if w == ["colorless", "ideas", "furiously"]
        ));
    }
}
