//! Recursive-descent parser for keyword queries.
//!
//! ```text
//! or_expr   := prox_expr ("or" prox_expr)*
//! prox_expr := atom (DIST atom)*          DIST is e.g. "4d"
//! atom      := TERM | "(" or_expr ")"
//! ```
//!
//! Proximity chains are left-associative and `or` binds looser than
//! proximity. Terms are case-folded to lowercase.

use std::fmt;

use thiserror::Error;

use super::ast::QueryAst;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("query syntax error at column {}: {kind}", .position + 1)]
pub struct ParseError {
    /// Byte offset into the query text.
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    NegativeDistance,
    MissingDistance,
    DistanceTooLarge,
    UnclosedParen,
    UnmatchedCloseParen,
    WildcardOnlyTerm,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => f.write_str("empty query"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character '{c}'"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected {t}"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of query"),
            ParseErrorKind::NegativeDistance => f.write_str("proximity distance must be >= 0"),
            ParseErrorKind::MissingDistance => {
                f.write_str("proximity operator 'd' needs a distance, e.g. '4d'")
            }
            ParseErrorKind::DistanceTooLarge => f.write_str("proximity distance out of range"),
            ParseErrorKind::UnclosedParen => f.write_str("unclosed '('"),
            ParseErrorKind::UnmatchedCloseParen => f.write_str("unmatched ')'"),
            ParseErrorKind::WildcardOnlyTerm => {
                f.write_str("term needs at least one character besides '+'")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Or,
    Dist(u32),
    Term(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Or => "'or'".into(),
            Tok::Dist(n) => format!("distance '{n}d'"),
            Tok::Term(t) => format!("term '{t}'"),
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '+'
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let err = |position, kind| ParseError { position, kind };
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' {
            chars.next();
            toks.push((pos, Tok::LParen));
        } else if c == ')' {
            chars.next();
            toks.push((pos, Tok::RParen));
        } else if c == '-' {
            chars.next();
            match chars.peek() {
                Some(&(_, d)) if d.is_ascii_digit() => {
                    return Err(err(pos, ParseErrorKind::NegativeDistance))
                }
                _ => return Err(err(pos, ParseErrorKind::UnexpectedChar('-'))),
            }
        } else if is_word_char(c) {
            let mut end = pos;
            while let Some(&(i, c)) = chars.peek() {
                if !is_word_char(c) {
                    break;
                }
                end = i + c.len_utf8();
                chars.next();
            }
            let word = text[pos..end].to_ascii_lowercase();
            toks.push((pos, classify_word(&word, pos)?));
        } else {
            return Err(err(pos, ParseErrorKind::UnexpectedChar(c)));
        }
    }
    Ok(toks)
}

fn classify_word(word: &str, pos: usize) -> Result<Tok, ParseError> {
    if word == "or" {
        return Ok(Tok::Or);
    }
    if let Some(digits) = word.strip_suffix('d') {
        if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            let n = digits.parse::<u32>().map_err(|_| ParseError {
                position: pos,
                kind: ParseErrorKind::DistanceTooLarge,
            })?;
            return Ok(Tok::Dist(n));
        }
    }
    if word.bytes().all(|b| b == b'+') {
        return Err(ParseError {
            position: pos,
            kind: ParseErrorKind::WildcardOnlyTerm,
        });
    }
    Ok(Tok::Term(word.to_string()))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            position: self.offset(),
            kind,
        }
    }

    fn or_expr(&mut self) -> Result<QueryAst, ParseError> {
        let first = self.prox_expr()?;
        let mut alts = vec![first];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            alts.push(self.prox_expr()?);
        }
        Ok(if alts.len() == 1 {
            alts.pop().unwrap()
        } else {
            QueryAst::Or(alts)
        })
    }

    fn prox_expr(&mut self) -> Result<QueryAst, ParseError> {
        let mut left = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::Dist(n)) => {
                    let n = *n;
                    self.pos += 1;
                    let right = self.atom()?;
                    left = QueryAst::prox(n, left, right);
                }
                Some(Tok::Term(t)) if t == "d" => {
                    return Err(self.error(ParseErrorKind::MissingDistance))
                }
                Some(tok @ (Tok::Term(_) | Tok::LParen)) => {
                    let found = tok.describe();
                    return Err(self.error(ParseErrorKind::UnexpectedToken(format!(
                        "{found}; expected a distance like '4d' or 'or'"
                    ))));
                }
                _ => return Ok(left),
            }
        }
    }

    fn atom(&mut self) -> Result<QueryAst, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Term(t)) => {
                self.pos += 1;
                Ok(QueryAst::Term(t))
            }
            Some(Tok::LParen) => {
                let open = self.offset();
                self.pos += 1;
                let inner = self.or_expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    None => Err(ParseError {
                        position: open,
                        kind: ParseErrorKind::UnclosedParen,
                    }),
                    Some(t) => {
                        let found = t.describe();
                        Err(self.error(ParseErrorKind::UnexpectedToken(found)))
                    }
                }
            }
            Some(Tok::RParen) => Err(self.error(ParseErrorKind::UnmatchedCloseParen)),
            Some(t) => {
                let found = t.describe();
                Err(self.error(ParseErrorKind::UnexpectedToken(format!(
                    "{found}; expected a term or '('"
                ))))
            }
            None => Err(self.error(ParseErrorKind::UnexpectedEnd)),
        }
    }
}

pub fn parse_query(text: &str) -> Result<QueryAst, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError {
            position: 0,
            kind: ParseErrorKind::Empty,
        });
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let ast = parser.or_expr()?;
    match parser.peek() {
        None => Ok(ast),
        Some(Tok::RParen) => Err(parser.error(ParseErrorKind::UnmatchedCloseParen)),
        Some(t) => {
            let found = t.describe();
            Err(parser.error(ParseErrorKind::UnexpectedToken(found)))
        }
    }
}
