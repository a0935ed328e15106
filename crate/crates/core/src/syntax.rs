//! Text formats for ontologies, ABox sequences and temporal conjunctive
//! queries, with matching printers.
//!
//! Ontology files are line oriented:
//!
//! ```text
//! # comment
//! rigid role R
//! concept A
//! A <= exists S
//! A, B <= bot
//! S < R
//! ```
//!
//! ABox sequence files consist of sections `@i:` followed by assertions such
//! as `A(a)`, `exists R-(a)`, `R(a,b)` or `!B(a)`. Query files hold one TCQ,
//! for example `(Y A(a)) & !(EX x . B(a) & R(a,x) & T(a,x))`.

use crate::error::{Error, Result};
use crate::model::{
    ABox, Assertion, Atom, BasicConcept, Concept, ConceptInclusion, Cq, ExtendedCi, Ontology,
    Role, RoleInclusion, Signature, Tcq, Term, Tkb, Var,
};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(usize),
    Punct(&'static str),
    Newline,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
    /// No whitespace separates this token from the previous one.
    glued: bool,
}

const PUNCT: &[&str] = &[
    "<->", "->", "<=", "<", "(", ")", ",", ".", "!", "&", "|", "@", ":", "?", "-", "^",
];

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut glued = false;
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '\n' {
            out.push(Token {
                tok: Tok::Newline,
                line,
                col,
                glued,
            });
            i += 1;
            line += 1;
            col = 1;
            glued = false;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            glued = false;
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line: start_line,
                col: start_col,
                glued,
            });
        } else if c.is_ascii_digit() {
            let mut n: usize = 0;
            while i < chars.len() && chars[i].is_ascii_digit() {
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add(chars[i] as usize - '0' as usize))
                    .ok_or(Error::ParseError {
                        line,
                        col: start_col,
                        expected: "a number that fits in usize".into(),
                    })?;
                i += 1;
                col += 1;
            }
            out.push(Token {
                tok: Tok::Num(n),
                line: start_line,
                col: start_col,
                glued,
            });
        } else {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            match PUNCT.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    i += p.len();
                    col += p.len();
                    out.push(Token {
                        tok: Tok::Punct(p),
                        line: start_line,
                        col: start_col,
                        glued,
                    });
                }
                None => {
                    return Err(Error::ParseError {
                        line,
                        col,
                        expected: "an identifier, number or operator".into(),
                    })
                }
            }
        }
        glued = true;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
        glued: false,
    });
    Ok(out)
}

/// Reserved words that cannot be used as names.
const KEYWORDS: &[&str] = &[
    "exists", "forall", "top", "bot", "true", "false", "EX", "concept", "role", "rigid",
    "individual",
];

struct Parser<'s> {
    toks: Vec<Token>,
    pos: usize,
    sig: &'s mut Signature,
    skip_newlines: bool,
}

impl<'s> Parser<'s> {
    fn new(text: &str, sig: &'s mut Signature, skip_newlines: bool) -> Result<Self> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            sig,
            skip_newlines,
        })
    }

    fn skip(&mut self) {
        if self.skip_newlines {
            while self.toks[self.pos].tok == Tok::Newline {
                self.pos += 1;
            }
        }
    }

    fn peek(&mut self) -> &Token {
        self.skip();
        &self.toks[self.pos]
    }

    fn peek_at(&mut self, k: usize) -> &Token {
        self.skip();
        let mut p = self.pos;
        let mut left = k;
        while left > 0 && p + 1 < self.toks.len() {
            p += 1;
            if !(self.skip_newlines && self.toks[p].tok == Tok::Newline) {
                left -= 1;
            }
        }
        &self.toks[p]
    }

    fn bump(&mut self) -> Token {
        self.skip();
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&mut self, expected: &str) -> Result<T> {
        let t = self.peek().clone();
        Err(Error::ParseError {
            line: t.line,
            col: t.col,
            expected: expected.to_string(),
        })
    }

    fn is_punct(&mut self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_ident(&mut self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(q) if q == s)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(&format!("`{p}`"))
        }
    }

    fn eat_ident(&mut self, s: &str) -> bool {
        if self.is_ident(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    /// A non-reserved identifier.
    fn name(&mut self, what: &str) -> Result<(String, usize, usize)> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok((s, t.line, t.col))
            }
            _ => self.err(what),
        }
    }

    fn clash<T>(&self, line: usize, col: usize, name: &str, kind: &str) -> Result<T> {
        Err(Error::ParseError {
            line,
            col,
            expected: format!("a {kind} name (`{name}` is declared with another kind)"),
        })
    }

    fn concept_name(&mut self, rigid: bool) -> Result<BasicConcept> {
        let (s, l, c) = self.name("a concept name")?;
        match self.sig.declare_concept(&s, rigid) {
            Ok(n) => Ok(BasicConcept::Atomic(n)),
            Err(_) => self.clash(l, c, &s, "concept"),
        }
    }

    fn role_name_decl(&mut self, rigid: bool) -> Result<crate::model::RoleName> {
        let (s, l, c) = self.name("a role name")?;
        match self.sig.declare_role(&s, rigid) {
            Ok(n) => Ok(n),
            Err(_) => self.clash(l, c, &s, "role"),
        }
    }

    /// `R` or `R-`.
    fn role(&mut self) -> Result<Role> {
        let n = self.role_name_decl(false)?;
        if self.eat_punct("-") {
            Ok(Role::inverse_of(n))
        } else {
            Ok(Role::new(n))
        }
    }

    fn individual(&mut self) -> Result<crate::model::Individual> {
        let (s, l, c) = self.name("an individual name")?;
        match self.sig.declare_individual(&s) {
            Ok(a) => Ok(a),
            Err(_) => self.clash(l, c, &s, "individual"),
        }
    }

    fn end_of_line(&mut self) -> Result<()> {
        match self.peek().tok {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => self.err("end of line"),
        }
    }

    // ----- ontology -----

    fn concept_or(&mut self) -> Result<Concept> {
        let mut parts = vec![self.concept_and()?];
        while self.eat_punct("|") {
            parts.push(self.concept_and()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Concept::Or(parts)
        })
    }

    fn concept_and(&mut self) -> Result<Concept> {
        let mut parts = vec![self.concept_atom()?];
        while self.eat_punct("&") {
            parts.push(self.concept_atom()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Concept::And(parts)
        })
    }

    fn concept_atom(&mut self) -> Result<Concept> {
        if self.eat_punct("(") {
            let c = self.concept_or()?;
            self.expect_punct(")")?;
            return Ok(c);
        }
        if self.eat_ident("top") {
            return Ok(Concept::Top);
        }
        if self.eat_ident("bot") {
            return Ok(Concept::Bottom);
        }
        if self.eat_ident("exists") {
            let r = self.role()?;
            if self.eat_punct(".") {
                let f = self.concept_atom()?;
                return Ok(Concept::Some(r, Box::new(f)));
            }
            return Ok(Concept::Basic(BasicConcept::Exists(r)));
        }
        if self.eat_ident("forall") {
            let r = self.role()?;
            self.expect_punct(".")?;
            let f = self.concept_atom()?;
            return Ok(Concept::All(r, Box::new(f)));
        }
        if matches!(self.peek().tok, Tok::Ident(_)) {
            return Ok(Concept::Basic(self.concept_name(false)?));
        }
        self.err("a concept expression")
    }

    fn ontology_line(&mut self, doc: &mut OntologyDoc) -> Result<()> {
        let rigid = self.eat_ident("rigid");
        if self.eat_ident("concept") {
            loop {
                self.concept_name(rigid)?;
                if !self.eat_punct(",") {
                    break;
                }
            }
            return self.end_of_line();
        }
        if self.eat_ident("role") {
            loop {
                self.role_name_decl(rigid)?;
                if !self.eat_punct(",") {
                    break;
                }
            }
            return self.end_of_line();
        }
        if rigid {
            return self.err("`concept` or `role`");
        }
        if self.is_ident("individual") && !self.peek_at(1).glued {
            self.bump();
            loop {
                self.individual()?;
                if !self.eat_punct(",") {
                    break;
                }
            }
            return self.end_of_line();
        }
        // Role inclusion: `R < S`, recognised by a `<` after a role.
        if let (Tok::Ident(_), t1) = (self.peek().tok.clone(), self.peek_at(1).tok.clone()) {
            let t2 = self.peek_at(2).tok.clone();
            if t1 == Tok::Punct("<") || (t1 == Tok::Punct("-") && t2 == Tok::Punct("<")) {
                let sub = self.role()?;
                self.expect_punct("<")?;
                let sup = self.role()?;
                doc.ontology.ris.push(RoleInclusion { sub, sup });
                return self.end_of_line();
            }
        }
        let mut lhs = vec![self.concept_or()?];
        while self.eat_punct(",") {
            lhs.push(self.concept_or()?);
        }
        self.expect_punct("<=")?;
        let rhs = self.concept_or()?;
        let lhs = if lhs.len() == 1 {
            lhs.pop().unwrap()
        } else {
            Concept::And(lhs)
        };
        match as_basic_ci(&lhs, &rhs) {
            Some(ci) => doc.ontology.cis.push(ci),
            None => doc.extended.push(ExtendedCi { lhs, rhs }),
        }
        self.end_of_line()
    }

    // ----- ABox sequences -----

    fn assertion(&mut self) -> Result<Assertion> {
        let positive = !self.eat_punct("!");
        let a = if self.eat_ident("exists") {
            let r = self.role()?;
            self.expect_punct("(")?;
            let x = self.individual()?;
            self.expect_punct(")")?;
            Assertion::concept(BasicConcept::Exists(r), x)
        } else {
            let (s, l, c) = self.name("an assertion")?;
            let inverse = self.eat_punct("-");
            self.expect_punct("(")?;
            let x = self.individual()?;
            if self.eat_punct(",") {
                let y = self.individual()?;
                self.expect_punct(")")?;
                let r = match self.sig.declare_role(&s, false) {
                    Ok(r) => r,
                    Err(_) => return self.clash(l, c, &s, "role"),
                };
                let role = if inverse {
                    Role::inverse_of(r)
                } else {
                    Role::new(r)
                };
                Assertion::role(role, x, y)
            } else {
                self.expect_punct(")")?;
                if inverse {
                    return Err(Error::ParseError {
                        line: l,
                        col: c,
                        expected: "a role assertion with two arguments".into(),
                    });
                }
                match self.sig.declare_concept(&s, false) {
                    Ok(cn) => Assertion::concept(BasicConcept::Atomic(cn), x),
                    Err(_) => return self.clash(l, c, &s, "concept"),
                }
            }
        };
        Ok(if positive { a } else { a.negated() })
    }

    fn aboxes(&mut self) -> Result<Vec<ABox>> {
        let mut out: Vec<ABox> = Vec::new();
        let mut current: Option<usize> = None;
        loop {
            match self.peek().tok.clone() {
                Tok::Eof => break,
                Tok::Punct("@") => {
                    self.bump();
                    let t = self.bump();
                    let i = match t.tok {
                        Tok::Num(i) => i,
                        _ => {
                            return Err(Error::ParseError {
                                line: t.line,
                                col: t.col,
                                expected: "a time point index".into(),
                            })
                        }
                    };
                    if i > MAX_TIME_POINT {
                        return Err(Error::ParseError {
                            line: t.line,
                            col: t.col,
                            expected: format!("a time point index at most {MAX_TIME_POINT}"),
                        });
                    }
                    self.eat_punct(":");
                    while out.len() <= i {
                        out.push(ABox::new());
                    }
                    current = Some(i);
                }
                Tok::Punct(",") => {
                    self.bump();
                }
                Tok::Ident(s) if s == "individual" && !self.peek_at(1).glued => {
                    self.bump();
                    loop {
                        self.individual()?;
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                _ => {
                    let Some(i) = current else {
                        return self.err("a section header `@<index>:`");
                    };
                    let a = self.assertion()?;
                    out[i].insert(a);
                }
            }
        }
        Ok(out)
    }

    // ----- TCQs -----

    fn tcq(&mut self) -> Result<Tcq> {
        let mut a = self.tcq_impl()?;
        while self.eat_punct("<->") {
            let b = self.tcq_impl()?;
            a = Tcq::Iff(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn tcq_impl(&mut self) -> Result<Tcq> {
        let a = self.tcq_or()?;
        if self.eat_punct("->") {
            let b = self.tcq_impl()?;
            return Ok(Tcq::implies(a, b));
        }
        Ok(a)
    }

    fn tcq_or(&mut self) -> Result<Tcq> {
        let mut a = self.tcq_and()?;
        while self.eat_punct("|") {
            let b = self.tcq_and()?;
            a = Tcq::or(a, b);
        }
        Ok(a)
    }

    fn tcq_and(&mut self) -> Result<Tcq> {
        let mut a = self.tcq_until()?;
        while self.eat_punct("&") {
            let b = self.tcq_until()?;
            a = Tcq::and(a, b);
        }
        Ok(a)
    }

    fn tcq_until(&mut self) -> Result<Tcq> {
        let a = self.tcq_unary()?;
        if self.is_temporal_op("U") {
            self.bump();
            let b = self.tcq_until()?;
            return Ok(Tcq::Until(Box::new(a), Box::new(b)));
        }
        if self.is_temporal_op("S") {
            self.bump();
            let b = self.tcq_until()?;
            return Ok(Tcq::Since(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    /// An operator keyword, as opposed to a name applied to arguments.
    fn is_temporal_op(&mut self, op: &str) -> bool {
        if !self.is_ident(op) {
            return false;
        }
        let next = self.peek_at(1).clone();
        !(next.glued && next.tok == Tok::Punct("("))
            && !(next.glued && next.tok == Tok::Punct("-"))
    }

    fn tcq_unary(&mut self) -> Result<Tcq> {
        if self.eat_punct("!") {
            return Ok(Tcq::not(self.tcq_unary()?));
        }
        for op in ["X", "Y", "F", "G", "P", "H"] {
            if self.is_temporal_op(op) {
                self.bump();
                let mut times = 1;
                if self.eat_punct("^") {
                    let t = self.bump();
                    times = match t.tok {
                        Tok::Num(k) if (1..=MAX_ITERATION).contains(&k) => k,
                        _ => {
                            return Err(Error::ParseError {
                                line: t.line,
                                col: t.col,
                                expected: format!("an iteration count in 1..={MAX_ITERATION}"),
                            })
                        }
                    };
                }
                let mut q = self.tcq_unary()?;
                for _ in 0..times {
                    let b = Box::new(q);
                    q = match op {
                        "X" => Tcq::Next(b),
                        "Y" => Tcq::Prev(b),
                        "F" => Tcq::Eventually(b),
                        "G" => Tcq::Always(b),
                        "P" => Tcq::Once(b),
                        _ => Tcq::Historically(b),
                    };
                }
                return Ok(q);
            }
        }
        self.tcq_primary()
    }

    fn tcq_primary(&mut self) -> Result<Tcq> {
        if self.eat_punct("(") {
            let q = self.tcq()?;
            self.expect_punct(")")?;
            return Ok(q);
        }
        if self.eat_ident("true") {
            return Ok(Tcq::True);
        }
        if self.eat_ident("false") {
            return Ok(Tcq::False);
        }
        if self.eat_ident("EX") {
            let mut vars: Vec<String> = Vec::new();
            while !self.is_punct(".") {
                let (v, l, c) = self.name("a variable or `.`")?;
                if vars.contains(&v) {
                    return Err(Error::ParseError {
                        line: l,
                        col: c,
                        expected: format!("a fresh variable (`{v}` is bound twice)"),
                    });
                }
                vars.push(v);
                self.eat_punct(",");
            }
            self.expect_punct(".")?;
            let mut cq = CqBuilder::new(vars);
            self.cq_atom(&mut cq)?;
            while self.is_punct("&") && self.atom_follows(1) {
                self.bump();
                self.cq_atom(&mut cq)?;
            }
            return Ok(Tcq::Cq(cq.finish()));
        }
        if self.atom_follows(0) {
            let mut cq = CqBuilder::new(Vec::new());
            self.cq_atom(&mut cq)?;
            return Ok(Tcq::Cq(cq.finish()));
        }
        self.err("a query")
    }

    /// Whether the token `k` positions ahead starts an atom.
    fn atom_follows(&mut self, k: usize) -> bool {
        match self.peek_at(k).tok.clone() {
            Tok::Ident(s) if s == "exists" => true,
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let n = self.peek_at(k + 1).clone();
                n.glued && (n.tok == Tok::Punct("(") || n.tok == Tok::Punct("-"))
            }
            _ => false,
        }
    }

    fn term(&mut self, cq: &mut CqBuilder) -> Result<Term> {
        if self.eat_punct("?") {
            let (v, _, _) = self.name("an answer variable")?;
            return Ok(Term::Var(cq.answer_var(&format!("?{v}"))));
        }
        let t = self.peek().clone();
        if let Tok::Ident(s) = &t.tok {
            if let Some(v) = cq.bound(s) {
                self.bump();
                return Ok(Term::Var(v));
            }
        }
        Ok(Term::Ind(self.individual()?))
    }

    fn cq_atom(&mut self, cq: &mut CqBuilder) -> Result<()> {
        if self.eat_ident("exists") {
            let r = self.role()?;
            self.expect_punct("(")?;
            let t = self.term(cq)?;
            self.expect_punct(")")?;
            cq.atoms.push(Atom::Concept(BasicConcept::Exists(r), t));
            return Ok(());
        }
        let (s, l, c) = self.name("an atom")?;
        let inverse = self.eat_punct("-");
        self.expect_punct("(")?;
        let x = self.term(cq)?;
        if self.eat_punct(",") {
            let y = self.term(cq)?;
            self.expect_punct(")")?;
            let r = match self.sig.declare_role(&s, false) {
                Ok(r) => r,
                Err(_) => return self.clash(l, c, &s, "role"),
            };
            let role = if inverse {
                Role::inverse_of(r)
            } else {
                Role::new(r)
            };
            cq.atoms.push(Atom::role(role, x, y));
        } else {
            self.expect_punct(")")?;
            if inverse {
                return Err(Error::ParseError {
                    line: l,
                    col: c,
                    expected: "a role atom with two arguments".into(),
                });
            }
            match self.sig.declare_concept(&s, false) {
                Ok(cn) => cq.atoms.push(Atom::Concept(BasicConcept::Atomic(cn), x)),
                Err(_) => return self.clash(l, c, &s, "concept"),
            }
        }
        Ok(())
    }
}

/// Largest accepted time point index in ABox sequence files.
pub const MAX_TIME_POINT: usize = 10_000;

/// Largest accepted iteration count in `X^k` and friends.
pub const MAX_ITERATION: usize = 64;

struct CqBuilder {
    vars: Vec<String>,
    answer: Vec<Var>,
    atoms: Vec<Atom>,
    /// Number of leading `vars` bound by `EX`.
    bound: usize,
}

impl CqBuilder {
    fn new(vars: Vec<String>) -> Self {
        let bound = vars.len();
        CqBuilder {
            vars,
            answer: Vec::new(),
            atoms: Vec::new(),
            bound,
        }
    }

    fn bound(&self, name: &str) -> Option<Var> {
        self.vars[..self.bound]
            .iter()
            .position(|v| v == name)
            .map(|i| Var(i as u32))
    }

    fn answer_var(&mut self, name: &str) -> Var {
        if let Some(i) = self.vars.iter().position(|v| v == name) {
            return Var(i as u32);
        }
        self.vars.push(name.to_string());
        let v = Var(self.vars.len() as u32 - 1);
        self.answer.push(v);
        v
    }

    fn finish(self) -> Cq {
        let mut cq = Cq::boolean(self.vars, self.atoms);
        cq.answer = self.answer;
        cq
    }
}

/// Converts `lhs <= rhs` into a basic CI when both sides have basic shape.
fn as_basic_ci(lhs: &Concept, rhs: &Concept) -> Option<ConceptInclusion> {
    fn conj(c: &Concept, out: &mut Vec<BasicConcept>) -> bool {
        match c {
            Concept::Top => true,
            Concept::Basic(b) => {
                out.push(*b);
                true
            }
            Concept::And(v) => v.iter().all(|x| conj(x, out)),
            _ => false,
        }
    }
    fn disj(c: &Concept, out: &mut Vec<BasicConcept>) -> bool {
        match c {
            Concept::Bottom => true,
            Concept::Basic(b) => {
                out.push(*b);
                true
            }
            Concept::Or(v) => v.iter().all(|x| disj(x, out)),
            _ => false,
        }
    }
    let (mut l, mut r) = (Vec::new(), Vec::new());
    if conj(lhs, &mut l) && disj(rhs, &mut r) {
        Some(ConceptInclusion::new(l, r))
    } else {
        None
    }
}

/// A parsed ontology file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OntologyDoc {
    pub signature: Signature,
    pub ontology: Ontology,
    /// Inclusions outside the basic shape, such as `exists R . A <= B`.
    pub extended: Vec<ExtendedCi>,
}

/// Parses an ontology file. Names used without a declaration are declared
/// as flexible.
pub fn parse_ontology(text: &str) -> Result<OntologyDoc> {
    let mut doc = OntologyDoc::default();
    let mut sig = Signature::new();
    {
        let mut p = Parser::new(text, &mut sig, false)?;
        loop {
            match p.peek().tok {
                Tok::Eof => break,
                Tok::Newline => {
                    p.bump();
                }
                _ => p.ontology_line(&mut doc)?,
            }
        }
    }
    doc.signature = sig;
    Ok(doc)
}

/// Parses an ABox sequence file, extending `sig` with new names. Missing
/// sections denote empty ABoxes; a file without sections yields no ABoxes.
pub fn parse_tkb(text: &str, sig: &mut Signature) -> Result<Vec<ABox>> {
    let mut p = Parser::new(text, sig, true)?;
    p.aboxes()
}

/// Parses a TCQ, extending `sig` with new names.
pub fn parse_tcq(text: &str, sig: &mut Signature) -> Result<Tcq> {
    let mut p = Parser::new(text, sig, true)?;
    let q = p.tcq()?;
    if p.peek().tok != Tok::Eof {
        return p.err("end of input");
    }
    Ok(q)
}

/// Parses an ontology file and an ABox sequence file into a TKB. Extended
/// inclusions are returned separately.
pub fn parse_kb(ontology: &str, aboxes: &str) -> Result<(Tkb, Vec<ExtendedCi>)> {
    let doc = parse_ontology(ontology)?;
    let mut signature = doc.signature;
    let aboxes = parse_tkb(aboxes, &mut signature)?;
    Ok((
        Tkb {
            signature,
            ontology: doc.ontology,
            aboxes,
        },
        doc.extended,
    ))
}

/// Parses an ontology, an ABox sequence and a query over the same
/// signature.
pub fn parse_instance(ontology: &str, aboxes: &str, query: &str) -> Result<(Tkb, Tcq)> {
    let (mut tkb, _) = parse_kb(ontology, aboxes)?;
    let q = parse_tcq(query, &mut tkb.signature)?;
    Ok((tkb, q))
}

/// Prints an ontology with declarations for every concept and role name.
pub fn print_ontology(sig: &Signature, o: &Ontology, extended: &[ExtendedCi]) -> String {
    let mut out = String::new();
    for c in sig.concepts() {
        let r = if sig.is_rigid_concept(c) { "rigid " } else { "" };
        out += &format!("{r}concept {}\n", sig.concept_name(c));
    }
    for p in sig.roles() {
        let r = if sig.is_rigid_role(p) { "rigid " } else { "" };
        out += &format!("{r}role {}\n", sig.role_name(p));
    }
    for a in sig.individuals() {
        out += &format!("individual {}\n", sig.individual_name(a));
    }
    for ci in &o.cis {
        out += &sig.show_ci(ci);
        out.push('\n');
    }
    for ci in extended {
        out += &sig.show_extended_ci(ci);
        out.push('\n');
    }
    for ri in &o.ris {
        out += &format!("{} < {}\n", sig.show_role(ri.sub), sig.show_role(ri.sup));
    }
    out
}

/// Prints an ABox sequence, one section per time point.
pub fn print_tkb(sig: &Signature, aboxes: &[ABox]) -> String {
    let mut out = String::new();
    for (i, a) in aboxes.iter().enumerate() {
        out += &format!("@{i}:\n");
        for x in a {
            out += &format!("  {}\n", sig.show_assertion(x));
        }
    }
    out
}

fn show_term(sig: &Signature, cq: &Cq, t: Term) -> String {
    match t {
        Term::Var(v) => cq.vars[v.0 as usize].clone(),
        Term::Ind(a) => sig.individual_name(a),
    }
}

/// Prints a single CQ atom.
pub fn print_atom(sig: &Signature, cq: &Cq, a: &Atom) -> String {
    match *a {
        Atom::Concept(b, t) => format!("{}({})", sig.show_basic(b), show_term(sig, cq, t)),
        Atom::Role(r, s, t) => format!(
            "{}({},{})",
            sig.role_name(r),
            show_term(sig, cq, s),
            show_term(sig, cq, t)
        ),
    }
}

/// Prints a CQ in query syntax.
pub fn print_cq(sig: &Signature, cq: &Cq) -> String {
    let atoms = cq
        .atoms
        .iter()
        .map(|a| print_atom(sig, cq, a))
        .collect::<Vec<_>>()
        .join(" & ");
    let bound: Vec<&str> = cq
        .vars
        .iter()
        .enumerate()
        .filter(|(i, _)| !cq.answer.contains(&Var(*i as u32)))
        .map(|(_, v)| v.as_str())
        .collect();
    if bound.is_empty() && cq.atoms.len() == 1 {
        atoms
    } else {
        format!("(EX {} . {})", bound.join(", "), atoms)
    }
}

/// Prints a TCQ; `parse_tcq` of the output yields the same query.
pub fn print_tcq(sig: &Signature, q: &Tcq) -> String {
    let un = |op: &str, a: &Tcq| format!("{op} {}", print_tcq(sig, a));
    let bin = |op: &str, a: &Tcq, b: &Tcq| {
        format!("({} {op} {})", print_tcq(sig, a), print_tcq(sig, b))
    };
    match q {
        Tcq::Cq(c) => print_cq(sig, c),
        Tcq::True => "true".into(),
        Tcq::False => "false".into(),
        Tcq::Not(a) => format!("!{}", print_tcq(sig, a)),
        Tcq::And(a, b) => bin("&", a, b),
        Tcq::Or(a, b) => bin("|", a, b),
        Tcq::Implies(a, b) => bin("->", a, b),
        Tcq::Iff(a, b) => bin("<->", a, b),
        Tcq::Until(a, b) => bin("U", a, b),
        Tcq::Since(a, b) => bin("S", a, b),
        Tcq::Next(a) => un("X", a),
        Tcq::Prev(a) => un("Y", a),
        Tcq::Eventually(a) => un("F", a),
        Tcq::Always(a) => un("G", a),
        Tcq::Once(a) => un("P", a),
        Tcq::Historically(a) => un("H", a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declarations_and_axioms() {
        let doc = parse_ontology(
            "# people\nrigid concept Person\nconcept Student\nrigid role knows\n\
             Student <= Person\nexists knows- <= Person\nStudent, exists teaches <= bot\nteaches < knows-\n",
        )
        .unwrap();
        let sig = &doc.signature;
        let person = sig.concept("Person").unwrap();
        assert!(sig.is_rigid_concept(person));
        // Undeclared names are flexible.
        let teaches = sig.role("teaches").unwrap();
        assert!(!sig.is_rigid_role(teaches));
        assert_eq!(doc.ontology.cis.len(), 3);
        assert_eq!(doc.ontology.ris.len(), 1);
        assert_eq!(doc.ontology.ris[0].sup, Role::inverse_of(sig.role("knows").unwrap()));
        assert!(doc.ontology.cis[2].rhs.is_empty());
        assert!(doc.extended.is_empty());
    }

    #[test]
    fn extended_inclusions_are_kept_apart() {
        let doc = parse_ontology("A <= forall R . B\nexists R . A <= B | C\nA <= B\n").unwrap();
        assert_eq!(doc.ontology.cis.len(), 1);
        assert_eq!(doc.extended.len(), 2);
        let shown = doc.signature.show_extended_ci(&doc.extended[0]);
        assert_eq!(parse_ontology(&shown).unwrap().extended.len(), 1, "{shown}");
    }

    #[test]
    fn abox_sections() {
        let doc = parse_ontology("concept A\nrole R\n").unwrap();
        let mut sig = doc.signature;
        let aboxes = parse_tkb("@0:\nA(a)\n!A(b)\n@2:\nR(a,b)\nexists R-(b)\n", &mut sig).unwrap();
        assert_eq!(aboxes.len(), 3);
        assert_eq!(aboxes[0].len(), 2);
        assert!(aboxes[1].is_empty());
        assert_eq!(aboxes[2].len(), 2);
        assert_eq!(sig.individual_count(), 2);
        assert!(parse_tkb("", &mut sig).unwrap().is_empty());
    }

    #[test]
    fn query_operators_and_answer_variables() {
        let mut sig = Signature::new();
        let q = parse_tcq("G (A(a) -> F B(a)) & (C(a) S Y !D(a)) & P (EX y . R(?x,y))", &mut sig).unwrap();
        let printed = print_tcq(&sig, &q);
        assert_eq!(parse_tcq(&printed, &mut sig).unwrap(), q, "{printed}");
        assert_eq!(q.answer_vars(), vec!["?x".to_string()]);
        let t = parse_tcq("true U (false <-> A(a))", &mut sig).unwrap();
        assert!(matches!(t, Tcq::Until(..)));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_ontology("concept A\nA <= <= B\n") {
            Err(Error::ParseError { line, col, .. }) => assert_eq!((line, col), (2, 6)),
            other => panic!("{other:?}"),
        }
        let mut sig = Signature::new();
        assert!(matches!(parse_tcq("A(a) &", &mut sig), Err(Error::ParseError { line: 1, .. })));
        assert!(matches!(parse_tcq("A(a) B(a)", &mut sig), Err(Error::ParseError { .. })));
        assert!(matches!(parse_tkb("@x:\n", &mut sig), Err(Error::ParseError { .. })));
    }

    #[test]
    fn kind_clashes_are_rejected() {
        match parse_ontology("concept A\nrole A\n") {
            Err(Error::ParseError { line, col, expected }) => {
                assert_eq!((line, col), (2, 6));
                assert!(expected.contains("another kind"), "{expected}");
            }
            other => panic!("{other:?}"),
        }
        let (mut tkb, _) = parse_kb("concept A\n", "@0:\nA(a)\n").unwrap();
        assert!(parse_tcq("A(A)", &mut tkb.signature).is_err());
    }
}
