//! Text syntax for expressions.
//!
//! ```text
//! expr    := ['+'|'-'] product (('+'|'-') product)*
//! product := 'sum' ident (',' ident)* ':' product
//!          | factor ([*] factor)* [[*] 'sum' ...]
//! factor  := int ['/' int] | 'tr' '(' loop [';' ('O' ident)+] ')'
//!          | ident ['{' loop ',' loop '}'] '[' ident ',' ident ']'
//!          | '(' expr ')'
//! loop    := primary ('.' ['~'] primary)*
//! primary := ident | '(' loop ')'
//! ```
//! A binder that no atom uses contributes a factor of 7.

use num_rational::Rational64;
use num_traits::{One, Zero};

use super::expr::{CoeffAtom, Expression, Idx, Loop, Term, TraceAtom};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    scopes: Vec<(String, Idx)>,
    next_id: u32,
}

fn location(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn error_at(src: &str, offset: usize, message: impl Into<String>) -> Error {
    let (line, column) = location(src, offset);
    Error::Parse {
        message: message.into(),
        offset,
        line,
        column,
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(off, ch)) = it.peek() {
        if ch.is_whitespace() {
            it.next();
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let mut s = String::new();
            while let Some(&(_, c)) = it.peek() {
                if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                    s.push(c);
                    it.next();
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(s), off));
        } else if ch.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&(_, c)) = it.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    it.next();
                } else {
                    break;
                }
            }
            let v = s
                .parse::<i64>()
                .map_err(|_| error_at(src, off, format!("integer `{s}` is out of range")))?;
            out.push((Tok::Int(v), off));
        } else if "+-*/()[]{},:;.~".contains(ch) {
            out.push((Tok::Sym(ch), off));
            it.next();
        } else {
            return Err(error_at(src, off, format!("unexpected character `{ch}`")));
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> Error {
        error_at(self.src, self.offset(), message)
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`, found {}", Self::describe(self.peek()))))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected identifier, found {}", Self::describe(&other)))),
        }
    }

    fn index(&mut self) -> Result<Idx> {
        let at = self.offset();
        let name = self.ident()?;
        self.scopes
            .iter()
            .rev()
            .find(|(n, _)| *n == name)
            .map(|(_, i)| *i)
            .ok_or_else(|| error_at(self.src, at, format!("unbound index `{name}`")))
    }

    fn expr(&mut self) -> Result<Expression> {
        let mut negate = false;
        match self.peek() {
            Tok::Sym('-') => {
                negate = true;
                self.bump();
            }
            Tok::Sym('+') => {
                self.bump();
            }
            _ => {}
        }
        let first = self.product()?;
        let mut acc = if negate { first.scale(-Rational64::one()) } else { first };
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    acc.terms.extend(self.product()?.terms);
                }
                Tok::Sym('-') => {
                    self.bump();
                    acc.terms.extend(self.product()?.scale(-Rational64::one()).terms);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Int(_) | Tok::Sym('('))
    }

    fn product(&mut self) -> Result<Expression> {
        if *self.peek() == Tok::Ident("sum".into()) {
            return self.summation();
        }
        let mut acc = self.factor()?;
        loop {
            let starred = *self.peek() == Tok::Sym('*');
            if starred {
                self.bump();
            }
            if *self.peek() == Tok::Ident("sum".into()) {
                let rest = self.summation()?;
                return Ok(acc.mul_disjoint(&rest));
            }
            if starred || self.starts_factor() {
                let f = self.factor()?;
                acc = acc.mul_disjoint(&f);
            } else {
                return Ok(acc);
            }
        }
    }

    fn summation(&mut self) -> Result<Expression> {
        self.bump();
        let mut ids = Vec::new();
        loop {
            let at = self.offset();
            let name = self.ident()?;
            if ids.iter().any(|(n, _): &(String, Idx)| *n == name) {
                return Err(error_at(self.src, at, format!("index `{name}` bound twice")));
            }
            let id = Idx(self.next_id);
            self.next_id += 1;
            ids.push((name, id));
            if *self.peek() == Tok::Sym(',') {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(':')?;
        let depth = self.scopes.len();
        self.scopes.extend(ids.iter().cloned());
        let inner = self.product();
        self.scopes.truncate(depth);
        let inner = inner?;
        let terms = inner
            .terms
            .into_iter()
            .map(|mut t| {
                let mut bound: Vec<Idx> = ids.iter().map(|(_, i)| *i).collect();
                bound.append(&mut t.bound);
                t.bound = bound;
                t.prune_unused_binders()
            })
            .collect();
        Ok(Expression { terms })
    }

    fn rational(&mut self) -> Result<Rational64> {
        let Tok::Int(p) = self.bump() else { unreachable!() };
        if *self.peek() != Tok::Sym('/') {
            return Ok(Rational64::from_integer(p));
        }
        self.bump();
        match self.peek().clone() {
            Tok::Int(0) => Err(self.err("malformed rational: zero denominator")),
            Tok::Int(q) => {
                self.bump();
                Ok(Rational64::new(p, q))
            }
            other => Err(self.err(format!(
                "malformed rational: expected denominator, found {}",
                Self::describe(&other)
            ))),
        }
    }

    fn factor(&mut self) -> Result<Expression> {
        match self.peek().clone() {
            Tok::Int(_) => {
                let c = self.rational()?;
                Ok(if c.is_zero() {
                    Expression::zero()
                } else {
                    Expression::from_term(Term::constant(c))
                })
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) if name == "tr" => {
                self.bump();
                self.expect('(')?;
                let loop_ = self.loop_expr()?;
                let mut word = Vec::new();
                if *self.peek() == Tok::Sym(';') {
                    self.bump();
                    loop {
                        match self.peek() {
                            Tok::Ident(o) if o == "O" => {
                                self.bump();
                                word.push(self.index()?);
                            }
                            _ if word.is_empty() => return Err(self.err("expected `O <index>` after `;`")),
                            _ => break,
                        }
                    }
                }
                self.expect(')')?;
                Ok(Expression::from_term(Term::trace(TraceAtom { loop_, word })))
            }
            Tok::Ident(name) => {
                let at = self.offset();
                self.bump();
                let mut symbol = name.clone();
                if *self.peek() == Tok::Sym('{') {
                    self.bump();
                    let a = self.loop_expr()?;
                    self.expect(',')?;
                    let b = self.loop_expr()?;
                    self.expect('}')?;
                    symbol = format!("{name}{{{a},{b}}}");
                }
                if *self.peek() != Tok::Sym('[') {
                    return Err(error_at(
                        self.src,
                        at,
                        format!("unknown symbol `{name}`: expected `tr(...)` or a coefficient entry `{name}[i,j]`"),
                    ));
                }
                self.bump();
                let row = self.index()?;
                self.expect(',')?;
                let col = self.index()?;
                self.expect(']')?;
                let mut t = Term::constant(Rational64::one());
                t.coeffs.push(CoeffAtom { symbol, row, col });
                Ok(Expression::from_term(t))
            }
            other => Err(self.err(format!("expected a factor, found {}", Self::describe(&other)))),
        }
    }

    fn loop_primary(&mut self) -> Result<Loop> {
        if *self.peek() == Tok::Sym('(') {
            self.bump();
            let l = self.loop_expr()?;
            self.expect(')')?;
            Ok(l)
        } else {
            let at = self.offset();
            let name = self.ident()?;
            if name == "tr" || name == "sum" || name == "O" {
                return Err(error_at(
                    self.src,
                    at,
                    format!("`{name}` is reserved and cannot name a loop"),
                ));
            }
            Ok(Loop::Base(name))
        }
    }

    fn loop_expr(&mut self) -> Result<Loop> {
        let mut acc = self.loop_primary()?;
        while *self.peek() == Tok::Sym('.') {
            self.bump();
            let inverted = *self.peek() == Tok::Sym('~');
            if inverted {
                self.bump();
            }
            let rhs = self.loop_primary()?;
            acc = Loop::compose(acc, rhs, inverted);
        }
        Ok(acc)
    }
}

/// Parse the text syntax into an [`Expression`].
pub fn parse_expr(text: &str) -> Result<Expression> {
    let mut p = Parser {
        src: text,
        toks: tokenize(text)?,
        pos: 0,
        scopes: Vec::new(),
        next_id: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.err(format!("unexpected {} after expression", Parser::describe(p.peek()))));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_err(text: &str) -> (String, usize, usize) {
        match parse_expr(text) {
            Err(Error::Parse {
                message, line, column, ..
            }) => (message, line, column),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn canonical_atoms() {
        let e = parse_expr("tr(a)").unwrap();
        assert_eq!(e.terms.len(), 1);
        assert_eq!(e.terms[0].traces, vec![TraceAtom::plain(Loop::base("a"))]);
        let inv = parse_expr("tr(a.~b)").unwrap();
        assert_eq!(
            inv.terms[0].traces[0].loop_,
            Loop::compose(Loop::base("a"), Loop::base("b"), true)
        );
    }

    #[test]
    fn first_observable() {
        let e = parse_expr("sum i: tr(a;O i)*tr(b;O i)").unwrap();
        let t = &e.terms[0];
        assert_eq!(t.bound.len(), 1);
        assert_eq!(t.traces.len(), 2);
        assert_eq!(t.traces[0].word, t.traces[1].word);
        assert_eq!(e.to_string(), "sum i: tr(a; O i)*tr(b; O i)");
    }

    #[test]
    fn display_roundtrips() {
        for text in [
            "1/2 sum i,j,k: alpha{g1,g3}[k,j]*tr(g1.g3; O i O k)*tr(g2; O i)*tr(g4; O j)",
            "1/2 tr(a.b) - 1/2 tr(a.~b) + 1/6 sum i: tr(a; O i)*tr(b; O i)",
            "-tr(x') + 3",
            "tr(a.(b.~c))",
        ] {
            let e = parse_expr(text).unwrap();
            assert_eq!(e.to_string(), text);
            assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn juxtaposition_parentheses_and_sums() {
        let e = parse_expr("2 (tr(a) + tr(b)) tr(c)").unwrap();
        assert_eq!(e.terms.len(), 2);
        assert_eq!(e.terms[0].coeff, Rational64::from_integer(2));
        let s = parse_expr("sum i: tr(a)").unwrap();
        assert_eq!(s.terms[0].coeff, Rational64::from_integer(7));
        let nested = parse_expr("sum i: tr(a; O i) * sum j: g[i,j]*tr(b; O j)").unwrap();
        assert_eq!(nested.terms[0].bound.len(), 2);
        assert!(nested.is_hygienic());
    }

    #[test]
    fn positioned_errors() {
        let (m, l, c) = parse_err("tr(a; O i)");
        assert_eq!((m.as_str(), l, c), ("unbound index `i`", 1, 9));
        let (m, _, c) = parse_err("foo + tr(a)");
        assert!(m.starts_with("unknown symbol `foo`"));
        assert_eq!(c, 1);
        let (m, _, _) = parse_err("1/0 tr(a)");
        assert!(m.contains("zero denominator"));
        let (m, l, c) = parse_err("tr(a)\n + 1/ tr(b)");
        assert!(m.contains("malformed rational"));
        assert_eq!((l, c), (2, 7));
        assert!(parse_err("tr(a) )").0.contains("unexpected"));
        assert!(parse_err("sum i,i: tr(a; O i)").0.contains("bound twice"));
        assert!(parse_err("tr(a; )").0.contains("expected `O <index>`"));
    }
}
