//! Text front end for ontology files and queries.
//!
//! Statements end with `.`; `%` starts a line comment.
//!
//! ```text
//! @pred hotel/1 features(loc,cl,pri,br,net).
//! @pred room/2.
//! @overlap hotel, hostel.
//! hotel(h1).
//! s6: hotel(H) -> exists R room(R, H).
//! hotel(X), hostel(X) -> false.
//! locatedIn(X, Y), locatedIn(X, Z) -> Y = Z.
//! ```
//!
//! Queries are conjunctions joined by `&` (or `,`), optionally prefixed by
//! `exists V1, V2 .` to quantify variables; every other variable is free.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{ParseError, Pos};
use crate::syntax::{
    conjunction_vars, name, Atom, Egd, Name, NegativeConstraint, Ontology, Query, Term, Tgd,
};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Directive(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Eq,
    Amp,
    Colon,
    Slash,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) => format!("`{s}`"),
            Tok::Directive(s) => format!("`@{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Slash => "`/`".into(),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump!();
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '=' => Some(Tok::Eq),
            '&' => Some(Tok::Amp),
            ':' => Some(Tok::Colon),
            '/' => Some(Tok::Slash),
            _ => None,
        };
        if let Some(t) = single {
            bump!();
            out.push((t, pos));
            continue;
        }
        if c == '-' {
            bump!();
            if chars.peek() == Some(&'>') {
                bump!();
                out.push((Tok::Arrow, pos));
                continue;
            }
            return Err(ParseError::Syntax {
                pos,
                msg: "expected `->`".into(),
            });
        }
        if c == '@' {
            bump!();
            let mut s = String::new();
            while let Some(&c) = chars.peek().filter(|c| is_ident_char(**c)) {
                s.push(c);
                bump!();
            }
            out.push((Tok::Directive(s), pos));
            continue;
        }
        if c == '_' {
            chars.next();
            if chars.peek() == Some(&':') {
                chars.next();
                let mut s = String::from("_:");
                while let Some(&c) = chars.peek().filter(|c| is_ident_char(**c)) {
                    s.push(c);
                    chars.next();
                }
                return Err(ParseError::NullInSource { pos, null: s });
            }
            return Err(ParseError::Syntax {
                pos,
                msg: "identifiers may not start with `_`".into(),
            });
        }
        if is_ident_char(c) {
            let mut s = String::new();
            while let Some(&c) = chars.peek().filter(|c| is_ident_char(**c)) {
                s.push(c);
                bump!();
            }
            let tok = if c.is_uppercase() {
                Tok::Var(s)
            } else {
                Tok::Ident(s)
            };
            out.push((tok, pos));
            continue;
        }
        return Err(ParseError::Syntax {
            pos,
            msg: format!("unexpected character `{c}`"),
        });
    }
    Ok(out)
}

/// Atom as written, before schema checks.
#[derive(Debug)]
struct RawAtom {
    atom: Atom,
    pos: Pos,
}

#[derive(Debug)]
enum Head {
    Atom {
        existentials: Vec<(String, Pos)>,
        atom: RawAtom,
    },
    False,
    Equal(String, String, Pos),
}

#[derive(Debug)]
enum Stmt {
    Pred {
        name: String,
        arity: usize,
        features: Option<Vec<String>>,
        pos: Pos,
    },
    Overlap(String, String, Pos),
    Fact(RawAtom),
    Rule {
        label: Option<(String, Pos)>,
        body: Vec<RawAtom>,
        head: Head,
        pos: Pos,
    },
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    end: Pos,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        let toks = lex(text)?;
        let lines = text.split('\n').count().max(1);
        let last_col = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Ok(Parser {
            toks,
            i: 0,
            end: Pos {
                line: lines,
                col: last_col,
            },
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.i + 1).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map_or(self.end, |(_, p)| *p)
    }

    fn at_end(&self) -> bool {
        self.i >= self.toks.len()
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.i).cloned();
        self.i += 1;
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ParseError> {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {}", t.describe())),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<Pos, ParseError> {
        if self.peek() == Some(&tok) {
            Ok(self.next().unwrap().1)
        } else {
            self.unexpected(wanted)
        }
    }

    fn ident(&mut self, wanted: &str) -> Result<(String, Pos), ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => match self.next() {
                Some((Tok::Ident(s), p)) => Ok((s, p)),
                _ => unreachable!(),
            },
            _ => self.unexpected(wanted),
        }
    }

    fn var(&mut self) -> Result<(String, Pos), ParseError> {
        match self.peek() {
            Some(Tok::Var(_)) => match self.next() {
                Some((Tok::Var(s), p)) => Ok((s, p)),
                _ => unreachable!(),
            },
            _ => self.unexpected("a variable"),
        }
    }

    fn atom(&mut self) -> Result<RawAtom, ParseError> {
        let (pred, pos) = self.ident("a predicate name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                let term = match self.next() {
                    Some((Tok::Ident(c), _)) => Term::Const(name(&c)),
                    Some((Tok::Var(v), _)) => Term::Var(name(&v)),
                    _ => {
                        self.i -= 1;
                        return self.unexpected("a term");
                    }
                };
                args.push(term);
                if self.peek() == Some(&Tok::Comma) {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)` or `,`")?;
        Ok(RawAtom {
            atom: Atom {
                predicate: name(&pred),
                args,
            },
            pos,
        })
    }

    fn conjunction(&mut self, allow_amp: bool) -> Result<Vec<RawAtom>, ParseError> {
        let mut atoms = vec![self.atom()?];
        loop {
            match self.peek() {
                Some(Tok::Comma) => {}
                Some(Tok::Amp) if allow_amp => {}
                _ => break,
            }
            self.next();
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        if let Some(Tok::Directive(d)) = self.peek().cloned() {
            self.next();
            return match d.as_str() {
                "pred" => self.pred_decl(pos),
                "overlap" => {
                    let (p, _) = self.ident("a predicate name")?;
                    self.expect(Tok::Comma, "`,`")?;
                    let (q, _) = self.ident("a predicate name")?;
                    self.expect(Tok::Dot, "`.`")?;
                    Ok(Stmt::Overlap(p, q, pos))
                }
                other => Err(ParseError::Syntax {
                    pos,
                    msg: format!("unknown directive `@{other}`"),
                }),
            };
        }

        let label = match (self.peek(), self.peek2()) {
            (Some(Tok::Ident(_)), Some(Tok::Colon)) => {
                let l = self.ident("a label")?;
                self.next();
                Some(l)
            }
            _ => None,
        };
        let body = self.conjunction(false)?;
        if label.is_none() && self.peek() == Some(&Tok::Dot) {
            self.next();
            let mut body = body;
            if body.len() != 1 {
                return Err(ParseError::Syntax {
                    pos,
                    msg: "a fact must be a single atom".into(),
                });
            }
            return Ok(Stmt::Fact(body.pop().unwrap()));
        }
        self.expect(Tok::Arrow, "`->`, `,` or `.`")?;
        let head = self.head()?;
        self.expect(Tok::Dot, "`.`")?;
        Ok(Stmt::Rule {
            label,
            body,
            head,
            pos,
        })
    }

    fn head(&mut self) -> Result<Head, ParseError> {
        match (self.peek().cloned(), self.peek2()) {
            (Some(Tok::Ident(k)), Some(t)) if k == "false" && *t != Tok::LParen => {
                self.next();
                Ok(Head::False)
            }
            (Some(Tok::Ident(k)), Some(Tok::Var(_))) if k == "exists" => {
                self.next();
                let mut existentials = vec![self.var()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.next();
                    existentials.push(self.var()?);
                }
                let atom = self.atom()?;
                Ok(Head::Atom { existentials, atom })
            }
            (Some(Tok::Var(_)), _) => {
                let (l, pos) = self.var()?;
                self.expect(Tok::Eq, "`=`")?;
                let (r, _) = self.var()?;
                Ok(Head::Equal(l, r, pos))
            }
            _ => Ok(Head::Atom {
                existentials: vec![],
                atom: self.atom()?,
            }),
        }
    }

    fn pred_decl(&mut self, pos: Pos) -> Result<Stmt, ParseError> {
        let (pred, _) = self.ident("a predicate name")?;
        self.expect(Tok::Slash, "`/`")?;
        let arity_pos = self.pos();
        let (arity, _) = self.ident("an arity")?;
        let arity: usize = arity.parse().map_err(|_| ParseError::Syntax {
            pos: arity_pos,
            msg: format!("invalid arity `{arity}`"),
        })?;
        let mut features = None;
        if let Some(Tok::Ident(k)) = self.peek() {
            if k == "features" {
                self.next();
                self.expect(Tok::LParen, "`(`")?;
                let mut fs = vec![self.ident("a feature name")?.0];
                while self.peek() == Some(&Tok::Comma) {
                    self.next();
                    fs.push(self.ident("a feature name")?.0);
                }
                self.expect(Tok::RParen, "`)`")?;
                features = Some(fs);
            }
        }
        self.expect(Tok::Dot, "`.`")?;
        Ok(Stmt::Pred {
            name: pred,
            arity,
            features,
            pos,
        })
    }
}

fn check_atom(
    a: &RawAtom,
    schema: &BTreeMap<Name, usize>,
) -> Result<(), ParseError> {
    match schema.get(&a.atom.predicate) {
        None => Err(ParseError::UnknownPredicate {
            pos: a.pos,
            pred: a.atom.predicate.to_string(),
        }),
        Some(&n) if n != a.atom.arity() => Err(ParseError::ArityMismatch {
            pos: a.pos,
            pred: a.atom.predicate.to_string(),
            declared: n,
            found: a.atom.arity(),
        }),
        _ => Ok(()),
    }
}

/// Parses an ontology source file.
pub fn parse_program(text: &str) -> Result<Ontology, ParseError> {
    let mut p = Parser::new(text)?;
    let mut stmts = Vec::new();
    while !p.at_end() {
        stmts.push(p.statement()?);
    }

    let mut kb = Ontology::default();
    for s in &stmts {
        if let Stmt::Pred {
            name: pred,
            arity,
            features,
            pos,
        } = s
        {
            let key = name(pred);
            if kb.schema.insert(key.clone(), *arity).is_some() {
                return Err(ParseError::Redeclared {
                    pos: *pos,
                    pred: pred.clone(),
                });
            }
            if let Some(fs) = features {
                let uniq: BTreeSet<&String> = fs.iter().collect();
                if uniq.len() != fs.len() {
                    return Err(ParseError::Rule {
                        pos: *pos,
                        msg: format!("duplicate feature in declaration of `{pred}`"),
                    });
                }
                kb.features
                    .insert(key, fs.iter().map(|f| name(f)).collect());
            }
        }
    }

    let mut labels = BTreeSet::new();
    for s in stmts {
        match s {
            Stmt::Pred { .. } => {}
            Stmt::Overlap(a, b, pos) => {
                for x in [&a, &b] {
                    if !kb.schema.contains_key(x.as_str()) {
                        return Err(ParseError::UnknownPredicate {
                            pos,
                            pred: x.clone(),
                        });
                    }
                }
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                kb.overlaps.insert((name(&a), name(&b)));
            }
            Stmt::Fact(a) => {
                check_atom(&a, &kb.schema)?;
                if let Some(v) = a.atom.variables().next() {
                    return Err(ParseError::VariableInFact {
                        pos: a.pos,
                        var: v.to_string(),
                    });
                }
                kb.database.insert(a.atom);
            }
            Stmt::Rule {
                label,
                body,
                head,
                pos,
            } => {
                for a in &body {
                    check_atom(a, &kb.schema)?;
                }
                let body_vars = conjunction_vars(
                    &body.iter().map(|a| a.atom.clone()).collect::<Vec<_>>(),
                );
                let body: Vec<Atom> = body.into_iter().map(|a| a.atom).collect();
                match head {
                    Head::False => {
                        if label.is_some() {
                            return Err(ParseError::Rule {
                                pos,
                                msg: "only tgds carry labels".into(),
                            });
                        }
                        kb.ncs.push(NegativeConstraint { body });
                    }
                    Head::Equal(l, r, epos) => {
                        if label.is_some() {
                            return Err(ParseError::Rule {
                                pos,
                                msg: "only tgds carry labels".into(),
                            });
                        }
                        for v in [&l, &r] {
                            if !body_vars.iter().any(|b| &**b == v.as_str()) {
                                return Err(ParseError::Rule {
                                    pos: epos,
                                    msg: format!("equated variable `{v}` does not occur in the body"),
                                });
                            }
                        }
                        kb.egds.push(Egd {
                            body,
                            lhs: name(&l),
                            rhs: name(&r),
                        });
                    }
                    Head::Atom { existentials, atom } => {
                        check_atom(&atom, &kb.schema)?;
                        let mut ex: Vec<Name> = Vec::new();
                        for (v, vpos) in &existentials {
                            if body_vars.iter().any(|b| &**b == v.as_str()) {
                                return Err(ParseError::Rule {
                                    pos: *vpos,
                                    msg: format!("existential variable `{v}` occurs in the body"),
                                });
                            }
                            if ex.iter().any(|e| &**e == v.as_str()) {
                                return Err(ParseError::Rule {
                                    pos: *vpos,
                                    msg: format!("existential variable `{v}` listed twice"),
                                });
                            }
                            ex.push(name(v));
                        }
                        for v in atom.atom.variables() {
                            if !body_vars.contains(v) && !ex.contains(v) {
                                return Err(ParseError::Rule {
                                    pos: atom.pos,
                                    msg: format!(
                                        "head variable `{v}` is neither in the body nor existentially quantified"
                                    ),
                                });
                            }
                        }
                        // drop quantifiers for variables the head never mentions
                        ex.retain(|e| atom.atom.variables().any(|v| v == e));
                        let index = kb.tgds.len() + 1;
                        let (label, lpos) = match label {
                            Some((l, lp)) => (l, lp),
                            None => (format!("r{index}"), pos),
                        };
                        if !labels.insert(label.clone()) {
                            return Err(ParseError::Rule {
                                pos: lpos,
                                msg: format!("duplicate rule label `{label}`"),
                            });
                        }
                        kb.tgds.push(Tgd {
                            label: name(&label),
                            body,
                            head: atom.atom,
                            existentials: ex,
                        });
                    }
                }
            }
        }
    }
    Ok(kb)
}

/// Parses a conjunctive query and checks it against the schema of `kb`.
pub fn parse_query(text: &str, kb: &Ontology) -> Result<Query, ParseError> {
    let mut p = Parser::new(text)?;
    let mut existential = Vec::new();
    if let (Some(Tok::Ident(k)), Some(Tok::Var(_))) = (p.peek(), p.peek2()) {
        if k == "exists" {
            p.next();
            existential.push(name(&p.var()?.0));
            while p.peek() == Some(&Tok::Comma) {
                p.next();
                existential.push(name(&p.var()?.0));
            }
            p.expect(Tok::Dot, "`.` after quantified variables")?;
        }
    }
    let atoms = p.conjunction(true)?;
    if !p.at_end() {
        return p.unexpected("`&` or end of query");
    }
    for a in &atoms {
        check_atom(a, &kb.schema)?;
    }
    let atoms: Vec<Atom> = atoms.into_iter().map(|a| a.atom).collect();
    let vars = conjunction_vars(&atoms);
    existential.retain(|e| vars.contains(e));
    Ok(Query::new(atoms, existential))
}

/// Parses a single ground atom such as `hotel(h1)`.
pub fn parse_ground_atom(text: &str, kb: &Ontology) -> Result<Atom, ParseError> {
    let mut p = Parser::new(text)?;
    let a = p.atom()?;
    if !p.at_end() {
        return p.unexpected("end of atom");
    }
    check_atom(&a, &kb.schema)?;
    if let Some(v) = a.atom.variables().next() {
        return Err(ParseError::VariableInFact {
            pos: a.pos,
            var: v.to_string(),
        });
    }
    Ok(a.atom)
}
