//! Logical terms, substitutions and first-order unification.
//!
//! Facts in the knowledge base and query goals are both [`Term`]s. The
//! canonical text form (`cause(furosemide,temporary(hearing_loss))`) is what
//! the knowledge-base file stores, so [`Term`]'s `Display` and [`read`] must
//! stay inverse to each other.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

static NEXT_VAR_ID: AtomicU64 = AtomicU64::new(1);

/// A logic variable. Variables produced by [`rename_apart`] carry a nonzero
/// `id`; variables written by hand use `id == 0`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub id: u64,
}

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            id: 0,
        }
    }

    /// A variable with the same name and a globally fresh id.
    pub fn fresh(name: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            id: NEXT_VAR_ID.fetch_add(1, Ordering::Relaxed),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.id == 0 {
            write!(f, "_{}", self.name)
        } else {
            write!(f, "_{}{}", self.name, self.id)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Atom(String),
    Var(Var),
    Compound { functor: String, args: Vec<Term> },
}

/// Atom and functor names: nonempty, lowercase, no whitespace, and none of
/// the characters the canonical syntax reserves.
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        None | Some('_') => return false,
        Some(_) => {}
    }
    name.chars()
        .all(|c| !c.is_whitespace() && !c.is_uppercase() && !matches!(c, '(' | ')' | ','))
}

impl Term {
    pub fn atom(name: impl Into<String>) -> Self {
        Term::Atom(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(Var::new(name))
    }

    /// Builds a compound; an empty argument list yields an atom.
    pub fn compound(functor: impl Into<String>, args: Vec<Term>) -> Self {
        let functor = functor.into();
        if args.is_empty() {
            Term::Atom(functor)
        } else {
            Term::Compound { functor, args }
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Atom(_) => true,
            Term::Var(_) => false,
            Term::Compound { args, .. } => args.iter().all(Term::is_ground),
        }
    }

    /// `(name, arity)`; atoms have arity zero and variables have no key.
    pub fn key(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(name) => Some((name, 0)),
            Term::Compound { functor, args } => Some((functor, args.len())),
            Term::Var(_) => None,
        }
    }

    /// Distinct variables in first-occurrence order.
    pub fn vars(&self) -> Vec<Var> {
        fn walk(t: &Term, out: &mut Vec<Var>) {
            match t {
                Term::Atom(_) => {}
                Term::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
                Term::Compound { args, .. } => args.iter().for_each(|a| walk(a, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn contains_var(&self, var: &Var) -> bool {
        match self {
            Term::Atom(_) => false,
            Term::Var(v) => v == var,
            Term::Compound { args, .. } => args.iter().any(|a| a.contains_var(var)),
        }
    }

    /// Every subterm, including `self`, in preorder.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = vec![self];
        if let Term::Compound { args, .. } = self {
            for a in args {
                out.extend(a.subterms());
            }
        }
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(name) => f.write_str(name),
            Term::Var(v) => v.fmt(f),
            Term::Compound { functor, args } => {
                write!(f, "{functor}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    a.fmt(f)?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Canonical text form of a term.
pub fn render(t: &Term) -> String {
    t.to_string()
}

/// Variable bindings, kept in idempotent form: no bound variable occurs in
/// any binding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.bindings.get(v)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    /// Builds a substitution from arbitrary (triangular) bindings and
    /// resolves it to idempotent form. Self-bindings are dropped. Returns
    /// `None` when the bindings are cyclic.
    pub fn from_bindings(pairs: impl IntoIterator<Item = (Var, Term)>) -> Option<Self> {
        let mut raw = BTreeMap::new();
        for (v, t) in pairs {
            if t != Term::Var(v.clone()) {
                raw.insert(v, t);
            }
        }
        let triangular = Substitution { bindings: raw };
        let mut resolved = BTreeMap::new();
        for (v, t) in &triangular.bindings {
            let mut seen = vec![v.clone()];
            resolved.insert(v.clone(), triangular.resolve(t, &mut seen)?);
        }
        Some(Substitution { bindings: resolved })
    }

    fn resolve(&self, t: &Term, seen: &mut Vec<Var>) -> Option<Term> {
        match t {
            Term::Atom(_) => Some(t.clone()),
            Term::Var(v) => match self.bindings.get(v) {
                None => Some(t.clone()),
                Some(_) if seen.contains(v) => None,
                Some(b) => {
                    seen.push(v.clone());
                    let r = self.resolve(b, seen);
                    seen.pop();
                    r
                }
            },
            Term::Compound { functor, args } => {
                let args = args
                    .iter()
                    .map(|a| self.resolve(a, seen))
                    .collect::<Option<Vec<_>>>()?;
                Some(Term::Compound {
                    functor: functor.clone(),
                    args,
                })
            }
        }
    }
}

/// Replaces every bound variable of `t`, following chains of bindings.
pub fn apply(s: &Substitution, t: &Term) -> Term {
    match t {
        Term::Atom(_) => t.clone(),
        Term::Var(v) => match s.get(v) {
            // acyclic by construction, so this terminates
            Some(b) => apply(s, b),
            None => t.clone(),
        },
        Term::Compound { functor, args } => Term::Compound {
            functor: functor.clone(),
            args: args.iter().map(|a| apply(s, a)).collect(),
        },
    }
}

/// Most general unifier of `a` and `b`, with occurs check.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    let mut bindings: BTreeMap<Var, Term> = BTreeMap::new();
    let mut pending = vec![(a.clone(), b.clone())];

    fn walk(bindings: &BTreeMap<Var, Term>, t: Term) -> Term {
        let mut t = t;
        while let Term::Var(v) = &t {
            match bindings.get(v) {
                Some(b) => t = b.clone(),
                None => break,
            }
        }
        t
    }

    fn occurs(bindings: &BTreeMap<Var, Term>, v: &Var, t: &Term) -> bool {
        match walk(bindings, t.clone()) {
            Term::Atom(_) => false,
            Term::Var(w) => &w == v,
            Term::Compound { args, .. } => args.iter().any(|a| occurs(bindings, v, a)),
        }
    }

    while let Some((x, y)) = pending.pop() {
        let x = walk(&bindings, x);
        let y = walk(&bindings, y);
        match (x, y) {
            (Term::Var(v), Term::Var(w)) if v == w => {}
            (Term::Var(v), t) | (t, Term::Var(v)) => {
                if occurs(&bindings, &v, &t) {
                    return None;
                }
                bindings.insert(v, t);
            }
            (Term::Atom(p), Term::Atom(q)) => {
                if p != q {
                    return None;
                }
            }
            (
                Term::Compound {
                    functor: f,
                    args: xs,
                },
                Term::Compound {
                    functor: g,
                    args: ys,
                },
            ) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                pending.extend(xs.into_iter().zip(ys).rev());
            }
            _ => return None,
        }
    }
    Substitution::from_bindings(bindings)
}

/// Copy of `t` with every variable replaced by a fresh one. Shared variables
/// stay shared.
pub fn rename_apart(t: &Term) -> Term {
    let renaming: BTreeMap<Var, Var> = t
        .vars()
        .into_iter()
        .map(|v| (v.clone(), Var::fresh(v.name)))
        .collect();
    fn go(t: &Term, r: &BTreeMap<Var, Var>) -> Term {
        match t {
            Term::Atom(_) => t.clone(),
            Term::Var(v) => Term::Var(r[v].clone()),
            Term::Compound { functor, args } => Term::Compound {
                functor: functor.clone(),
                args: args.iter().map(|a| go(a, r)).collect(),
            },
        }
    }
    go(t, &renaming)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("term syntax error at offset {offset}: {message}")]
pub struct TermSyntaxError {
    pub offset: usize,
    pub message: String,
}

/// Parses the canonical text form produced by [`render`]. A name starting
/// with an uppercase letter is also read as a variable, so `foo(a,X)` and
/// `foo(a,_X)` are the same term.
pub fn read(text: &str) -> Result<Term, TermSyntaxError> {
    let mut reader = Reader { text, pos: 0 };
    let term = reader.term()?;
    if reader.pos != text.len() {
        return Err(reader.error("unexpected trailing input"));
    }
    Ok(term)
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
}

impl Reader<'_> {
    fn error(&self, message: &str) -> TermSyntaxError {
        TermSyntaxError {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn name(&mut self) -> &str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || matches!(c, '(' | ')' | ',') {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.text[start..self.pos]
    }

    fn term(&mut self) -> Result<Term, TermSyntaxError> {
        let start = self.pos;
        let name = self.name().to_string();
        if name.is_empty() {
            return Err(self.error("expected a term"));
        }
        let var_name = match name.strip_prefix('_') {
            Some(rest) => Some(rest),
            None if name.starts_with(char::is_uppercase) && self.peek() != Some('(') => {
                Some(name.as_str())
            }
            None => None,
        };
        if let Some(var_name) = var_name {
            if var_name.is_empty() || !var_name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(TermSyntaxError {
                    offset: start,
                    message: "invalid variable name".into(),
                });
            }
            return Ok(Term::var(var_name));
        }
        if !is_valid_name(&name) {
            return Err(TermSyntaxError {
                offset: start,
                message: format!("invalid name `{name}`"),
            });
        }
        if self.peek() != Some('(') {
            return Ok(Term::Atom(name));
        }
        self.pos += 1;
        let mut args = vec![self.term()?];
        loop {
            match self.peek() {
                Some(',') => {
                    self.pos += 1;
                    args.push(self.term()?);
                }
                Some(')') => {
                    self.pos += 1;
                    return Ok(Term::Compound {
                        functor: name,
                        args,
                    });
                }
                _ => return Err(self.error("expected `,` or `)`")),
            }
        }
    }
}
