//! Recursive-descent parser for the ASCII formula syntax.
//!
//! ```text
//! phi ::= ident | "bot" | "top" | "~" phi | "?" phi | "[]" phi | "[+]" phi
//!       | "<>" phi | phi "&" phi | phi "vv" phi | phi "\/" phi
//!       | phi "->" phi | "(" phi ")"
//! ```
//!
//! Unary operators bind tightest, then `&`, `vv`, `\/` (all left
//! associative) and finally `->`, which associates to the right.

use thiserror::Error;

use crate::syntax::{is_identifier, Formula, Signature};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown proposition `{name}` at byte {pos}")]
    UnknownProposition { name: String, pos: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Bot,
    Top,
    Not,
    Question,
    Box,
    BoxPlus,
    Diamond,
    And,
    InqOr,
    Or,
    Implies,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(n) => format!("`{n}`"),
            Tok::Bot => "`bot`".into(),
            Tok::Top => "`top`".into(),
            Tok::Not => "`~`".into(),
            Tok::Question => "`?`".into(),
            Tok::Box => "`[]`".into(),
            Tok::BoxPlus => "`[+]`".into(),
            Tok::Diamond => "`<>`".into(),
            Tok::And => "`&`".into(),
            Tok::InqOr => "`vv`".into(),
            Tok::Or => "`\\/`".into(),
            Tok::Implies => "`->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let fixed: &[(&str, Tok)] = &[
            ("[+]", Tok::BoxPlus),
            ("[]", Tok::Box),
            ("<>", Tok::Diamond),
            ("->", Tok::Implies),
            ("\\/", Tok::Or),
            ("~", Tok::Not),
            ("?", Tok::Question),
            ("&", Tok::And),
            ("(", Tok::LParen),
            (")", Tok::RParen),
        ];
        if let Some((lit, tok)) = fixed.iter().find(|(lit, _)| text[i..].starts_with(lit)) {
            out.push((start, tok.clone()));
            i += lit.len();
            continue;
        }
        if c.is_ascii_alphabetic() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let tok = match word {
                "bot" => Tok::Bot,
                "top" => Tok::Top,
                "vv" => Tok::InqOr,
                _ => Tok::Ident(word.to_string()),
            };
            out.push((start, tok));
            continue;
        }
        let ch = text[i..].chars().next().unwrap_or('?');
        return Err(ParseError::Syntax {
            pos: start,
            msg: format!("unexpected character `{ch}`"),
        });
    }
    Ok(out)
}

enum Names<'a> {
    Fixed(&'a Signature),
    Extend(&'a mut Signature),
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    names: Names<'a>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.classical_or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn classical_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.inq_or()?;
        while self.eat(&Tok::Or) {
            lhs = Formula::or(lhs, self.inq_or()?);
        }
        Ok(lhs)
    }

    fn inq_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::InqOr) {
            lhs = Formula::inq_or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::And) {
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return self.error("unexpected end of input, expected a formula");
        };
        self.pos += 1;
        match tok {
            Tok::Not => Ok(Formula::neg(self.unary()?)),
            Tok::Question => Ok(Formula::whether(self.unary()?)),
            Tok::Box => Ok(Formula::boxed(self.unary()?)),
            Tok::BoxPlus => Ok(Formula::box_plus(self.unary()?)),
            Tok::Diamond => Ok(Formula::diamond(self.unary()?)),
            Tok::Bot => Ok(Formula::Bottom),
            Tok::Top => Ok(Formula::top()),
            Tok::LParen => {
                let inner = self.implication()?;
                if !self.eat(&Tok::RParen) {
                    return self.error("expected `)`");
                }
                Ok(inner)
            }
            Tok::Ident(name) => self.atom(name, pos),
            other => {
                self.pos -= 1;
                self.error(format!("expected a formula, found {}", other.describe()))
            }
        }
    }

    fn atom(&mut self, name: String, pos: usize) -> Result<Formula, ParseError> {
        debug_assert!(is_identifier(&name));
        let id = match &mut self.names {
            Names::Fixed(sig) => sig.lookup(&name),
            Names::Extend(sig) => match sig.lookup(&name) {
                Some(id) => Some(id),
                None => sig.push(name.clone()).ok(),
            },
        };
        id.map(Formula::Atom)
            .ok_or(ParseError::UnknownProposition { name, pos })
    }

    fn finish(mut self) -> Result<Formula, ParseError> {
        let phi = self.implication()?;
        if let Some(tok) = self.peek() {
            let msg = format!("unexpected {} after formula", tok.describe());
            return self.error(msg);
        }
        Ok(phi)
    }
}

/// Parses `text` against a fixed signature.
pub fn parse(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.len(),
        names: Names::Fixed(sig),
    }
    .finish()
}

/// Parses `text`, appending unseen proposition names to `sig`.
pub fn parse_extending(text: &str, sig: &mut Signature) -> Result<Formula, ParseError> {
    Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.len(),
        names: Names::Extend(sig),
    }
    .finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::PropId;

    fn sig() -> Signature {
        Signature::standard(3)
    }
    fn p() -> Formula {
        Formula::atom(PropId(0))
    }
    fn q() -> Formula {
        Formula::atom(PropId(1))
    }
    fn r() -> Formula {
        Formula::atom(PropId(2))
    }

    #[test]
    fn examples() {
        assert_eq!(
            parse("p -> bot", &sig()).unwrap(),
            Formula::implies(p(), Formula::Bottom)
        );
        assert_eq!(
            parse("?p", &sig()).unwrap(),
            Formula::inq_or(p(), Formula::implies(p(), Formula::Bottom))
        );
        assert_eq!(
            parse("<> p", &sig()).unwrap(),
            Formula::implies(
                Formula::boxed(Formula::implies(p(), Formula::Bottom)),
                Formula::Bottom
            )
        );
    }

    #[test]
    fn desugaring_identities() {
        let s = sig();
        assert_eq!(parse("~p", &s), parse("p -> bot", &s));
        assert_eq!(parse("p \\/ q", &s), parse("~(~p & ~q)", &s));
        assert_eq!(parse("<>p", &s), parse("~[]~p", &s));
        assert_eq!(parse("top", &s), parse("bot -> bot", &s));
        assert_eq!(parse("?p", &s), parse("p vv ~p", &s));
    }

    #[test]
    fn precedence_and_associativity() {
        let s = sig();
        assert_eq!(
            parse("p & q vv r", &s).unwrap(),
            Formula::inq_or(Formula::and(p(), q()), r())
        );
        assert_eq!(
            parse("p -> q -> r", &s).unwrap(),
            Formula::implies(p(), Formula::implies(q(), r()))
        );
        assert_eq!(
            parse("p & q & r", &s).unwrap(),
            Formula::and(Formula::and(p(), q()), r())
        );
        assert_eq!(
            parse("[] p -> q", &s).unwrap(),
            Formula::implies(Formula::boxed(p()), q())
        );
        assert_eq!(
            parse("p vv q \\/ r", &s).unwrap(),
            Formula::or(Formula::inq_or(p(), q()), r())
        );
        assert_eq!(
            parse("[+] ?p", &s).unwrap(),
            Formula::box_plus(Formula::whether(p()))
        );
    }

    #[test]
    fn errors_carry_positions() {
        let s = sig();
        assert_eq!(
            parse("p & zed", &s),
            Err(ParseError::UnknownProposition {
                name: "zed".into(),
                pos: 4
            })
        );
        assert!(matches!(parse("p &", &s), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse("(p", &s), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(parse("p q", &s), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(parse("p $ q", &s), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(parse("", &s), Err(ParseError::Syntax { pos: 0, .. })));
    }

    #[test]
    fn extending_parse_collects_names() {
        let mut s = Signature::default();
        let phi = parse_extending("rain -> [] wet", &mut s).unwrap();
        assert_eq!(s.names(), ["rain", "wet"]);
        assert_eq!(phi.max_prop(), Some(PropId(1)));
    }
}
