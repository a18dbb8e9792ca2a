//! Text syntax for CP programs.
//!
//! ```text
//! vars t, h
//! while t - h > -1 {
//!   inc (1, 0) [6/11];
//!   inc (1, 1) [1/22];
//!   reset (0, 0) [1/10];
//! }
//! ```
//!
//! The guard may be parenthesised and may use `>=` (rewritten to `> b-1`).
//! `x += (..) [p];` and `x = (..) [p];` are accepted as aliases for `inc`
//! and `reset`; with several variables the left-hand side is the tuple of
//! all variables in declaration order. `#` starts a line comment.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::program::{Branch, CpProgram, Reset, ValidationError, KEYWORDS};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("invalid program: {0}")]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Star,
    Slash,
    Plus,
    Minus,
    Gt,
    Ge,
    Eq,
    PlusEq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Comma => ",",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::PlusEq => "+=",
            Tok::Eof => return write!(f, "end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, expected: &str, found: impl ToString) -> ParseError {
    ParseError::Syntax {
        line,
        col,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let mut push = |tok: Tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Token {
                tok,
                line: start_line,
                col: start_col,
            });
            *i += len;
            *col += len;
        };
        let next = chars.get(i + 1).copied();
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '{' => push(Tok::LBrace, 1, &mut i, &mut col),
            '}' => push(Tok::RBrace, 1, &mut i, &mut col),
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            ';' => push(Tok::Semi, 1, &mut i, &mut col),
            '*' => push(Tok::Star, 1, &mut i, &mut col),
            '/' => push(Tok::Slash, 1, &mut i, &mut col),
            '-' => push(Tok::Minus, 1, &mut i, &mut col),
            '=' => push(Tok::Eq, 1, &mut i, &mut col),
            '≥' => push(Tok::Ge, 1, &mut i, &mut col),
            '+' if next == Some('=') => push(Tok::PlusEq, 2, &mut i, &mut col),
            '+' => push(Tok::Plus, 1, &mut i, &mut col),
            '>' if next == Some('=') => push(Tok::Ge, 2, &mut i, &mut col),
            '>' => push(Tok::Gt, 1, &mut i, &mut col),
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                push(Tok::Int(text.parse().unwrap()), j - i, &mut i, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                push(Tok::Ident(text), j - i, &mut i, &mut col);
            }
            other => return Err(syntax(line, col, "a token", format!("`{other}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    vars: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let t = self.peek();
        syntax(t.line, t.col, expected, &t.tok)
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.error(&tok.to_string()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("an identifier")),
        }
    }

    fn big_to_i64(&self, n: BigInt, t: &Token) -> Result<i64, ParseError> {
        n.to_i64()
            .ok_or_else(|| syntax(t.line, t.col, "a 64-bit integer", format!("`{n}`")))
    }

    fn uint(&mut self) -> Result<(BigInt, Token), ParseError> {
        let t = self.peek().clone();
        match t.tok.clone() {
            Tok::Int(n) => {
                self.bump();
                Ok((n, t))
            }
            _ => Err(self.error("an integer")),
        }
    }

    fn signed_int(&mut self) -> Result<i64, ParseError> {
        let neg = if self.eat(&Tok::Minus) {
            true
        } else {
            self.eat(&Tok::Plus);
            false
        };
        let (n, t) = self.uint()?;
        self.big_to_i64(if neg { -n } else { n }, &t)
    }

    fn var_index(&self, name: &str, t: &Token) -> Result<usize, ParseError> {
        self.vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| syntax(t.line, t.col, "a declared variable", format!("`{name}`")))
    }

    /// Linear expression; returns coefficients and the constant part.
    fn linexpr(&mut self) -> Result<(Vec<i128>, i128), ParseError> {
        let mut coeffs = vec![0i128; self.vars.len()];
        let mut constant = 0i128;
        let mut sign: i128 = if self.eat(&Tok::Minus) {
            -1
        } else {
            self.eat(&Tok::Plus);
            1
        };
        loop {
            let t = self.peek().clone();
            match t.tok.clone() {
                Tok::Int(n) => {
                    self.bump();
                    let c = self.big_to_i64(n, &t)? as i128 * sign;
                    if self.eat(&Tok::Star) {
                        let vt = self.peek().clone();
                        let name = self.ident()?;
                        coeffs[self.var_index(&name, &vt)?] += c;
                    } else {
                        constant += c;
                    }
                }
                Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                    self.bump();
                    coeffs[self.var_index(&name, &t)?] += sign;
                }
                _ => return Err(self.error("a term")),
            }
            sign = match self.peek().tok {
                Tok::Plus => 1,
                Tok::Minus => -1,
                _ => break,
            };
            self.bump();
        }
        Ok((coeffs, constant))
    }

    fn vector(&mut self) -> Result<Vec<i64>, ParseError> {
        let open = self.expect(Tok::LParen)?;
        let mut v = vec![self.signed_int()?];
        while self.eat(&Tok::Comma) {
            v.push(self.signed_int()?);
        }
        self.expect(Tok::RParen)?;
        if v.len() != self.vars.len() {
            return Err(syntax(
                open.line,
                open.col,
                &format!("{} components", self.vars.len()),
                format!("{}", v.len()),
            ));
        }
        Ok(v)
    }

    fn probability(&mut self) -> Result<Rational, ParseError> {
        self.expect(Tok::LBracket)?;
        let (n, _) = self.uint()?;
        let d = if self.eat(&Tok::Slash) {
            let (d, t) = self.uint()?;
            if d.is_zero() {
                return Err(syntax(t.line, t.col, "a nonzero denominator", "`0`"));
            }
            d
        } else {
            BigInt::from(1)
        };
        self.expect(Tok::RBracket)?;
        Ok(Rational::new(n, d))
    }

    /// Left-hand side of the assignment aliases: the variable tuple.
    fn assignment_target(&mut self) -> Result<(), ParseError> {
        let t = self.peek().clone();
        let names = if self.eat(&Tok::LParen) {
            let mut names = vec![self.ident()?];
            while self.eat(&Tok::Comma) {
                names.push(self.ident()?);
            }
            self.expect(Tok::RParen)?;
            names
        } else {
            vec![self.ident()?]
        };
        if names != self.vars {
            return Err(syntax(
                t.line,
                t.col,
                &format!("the variable tuple ({})", self.vars.join(", ")),
                format!("({})", names.join(", ")),
            ));
        }
        Ok(())
    }

    fn program(&mut self) -> Result<CpProgram, ParseError> {
        self.keyword("vars")?;
        let first = self.ident()?;
        self.vars.push(first);
        while self.eat(&Tok::Comma) {
            let next = self.ident()?;
            self.vars.push(next);
        }
        self.keyword("while")?;
        // A parenthesised guard is distinguished from a tuple since linear
        // expressions never contain parentheses.
        let paren = self.eat(&Tok::LParen);
        let guard_tok = self.peek().clone();
        let (coeffs, constant) = self.linexpr()?;
        let strict = match self.peek().tok {
            Tok::Gt => true,
            Tok::Ge => false,
            _ => return Err(self.error("`>` or `>=`")),
        };
        self.bump();
        let rhs = self.signed_int()? as i128;
        if paren {
            self.expect(Tok::RParen)?;
        }
        let bound = rhs - constant - if strict { 0 } else { 1 };
        let too_big = || syntax(guard_tok.line, guard_tok.col, "64-bit coefficients", "overflow");
        let guard_a = coeffs
            .into_iter()
            .map(|c| i64::try_from(c).map_err(|_| too_big()))
            .collect::<Result<Vec<_>, _>>()?;
        let guard_b = i64::try_from(bound).map_err(|_| too_big())?;

        self.expect(Tok::LBrace)?;
        let mut branches = Vec::new();
        let mut reset: Option<Reset> = None;
        loop {
            let start = self.peek().clone();
            let is_reset = if self.is_keyword("inc") {
                self.bump();
                false
            } else if self.is_keyword("reset") {
                self.bump();
                true
            } else if matches!(start.tok, Tok::Ident(_) | Tok::LParen) {
                self.assignment_target()?;
                match self.peek().tok {
                    Tok::PlusEq => {
                        self.bump();
                        false
                    }
                    Tok::Eq => {
                        self.bump();
                        true
                    }
                    _ => return Err(self.error("`+=` or `=`")),
                }
            } else if start.tok == Tok::RBrace && (!branches.is_empty() || reset.is_some()) {
                self.bump();
                break;
            } else {
                return Err(self.error("a statement"));
            };
            let v = self.vector()?;
            let prob = self.probability()?;
            self.expect(Tok::Semi)?;
            if is_reset {
                if reset.is_some() {
                    return Err(syntax(start.line, start.col, "at most one reset", "a second reset"));
                }
                reset = Some(Reset { target: v, prob });
            } else {
                branches.push(Branch { delta: v, prob });
            }
        }
        if self.peek().tok != Tok::Eof {
            return Err(self.error("end of input"));
        }
        Ok(CpProgram::new(
            std::mem::take(&mut self.vars),
            guard_a,
            guard_b,
            branches,
            reset,
        )?)
    }
}

/// Parses and validates a CP program.
pub fn parse_program(src: &str) -> Result<CpProgram, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars: Vec::new(),
    };
    p.program()
}

impl std::str::FromStr for CpProgram {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_program(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    const RACE: &str = "vars t, h
while t - h > -1 {
  inc (1, 0) [6/11];
  inc (1, 1) [1/22]; inc (1, 2) [1/22]; inc (1, 3) [1/22]; inc (1, 4) [1/22];
  inc (1, 5) [1/22]; inc (1, 6) [1/22]; inc (1, 7) [1/22]; inc (1, 8) [1/22];
  inc (1, 9) [1/22]; inc (1, 10) [1/22];
}";

    #[test]
    fn parses_race() {
        let p = parse_program(RACE).unwrap();
        assert_eq!(p.guard_a(), &[1, -1]);
        assert_eq!(p.guard_b(), -1);
        assert_eq!(p.branches().len(), 11);
        assert_eq!(p.branches()[0].prob, rat(6, 11));
    }

    #[test]
    fn aliases_parens_and_ge() {
        let src = "# direct termination\nvars t, h\nwhile (t - h + 1 >= 1) {\n  (t, h) += (1, 0) [9/10];\n  (t, h) = (7, 8) [1/10];\n}\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.guard_a(), &[1, -1]);
        assert_eq!(p.guard_b(), -1);
        assert_eq!(p.reset().unwrap().target, vec![7, 8]);
        let q = parse_program("vars x while x > 0 { x += (-1) [1]; }").unwrap();
        assert_eq!(q.branches()[0].delta, vec![-1]);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_program("vars x\nwhile x > 0 {\n  inc (1, 2) [1];\n}").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                line: 3,
                col: 7,
                expected: "1 components".into(),
                found: "2".into()
            }
        );
        let err = parse_program("vars x\nwhile y > 0 { inc (1) [1]; }").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, col: 7, .. }));
        let err =
            parse_program("vars x while x > 0 { inc (-1) [1/2]; reset (0) [1/4]; reset (0) [1/4]; }")
                .unwrap_err();
        assert!(matches!(err, ParseError::Syntax { ref found, .. } if found == "a second reset"));
        assert!(parse_program("vars x while x > 0 { }").is_err());
        assert!(parse_program("vars x while x > 0 { inc (1) [1/0]; }").is_err());
        assert!(parse_program("vars x while x > 0 { inc (1) [1]; } extra").is_err());
    }

    #[test]
    fn validation_errors_are_wrapped() {
        let err = parse_program("vars x while x > 0 { inc (1) [1/2]; inc (-1) [1/3]; }").unwrap_err();
        assert_eq!(
            err,
            ParseError::Validation(ValidationError::ProbabilitySum("5/6".into()))
        );
        let err = parse_program("vars x while x > 0 { inc (-1) [1/2]; reset (1) [1/2]; }").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Validation(ValidationError::ResetSatisfiesGuard { .. })
        ));
    }

    #[test]
    fn canonical_print_round_trips() {
        let p = parse_program(RACE).unwrap();
        let text = p.to_string();
        assert!(text.starts_with("vars t, h\nwhile 1*t - 1*h > -1 {\n  inc (1, 0) [6/11];"));
        assert_eq!(parse_program(&text).unwrap(), p);
    }

    fn arb_program() -> impl Strategy<Value = CpProgram> {
        (1usize..4, 1usize..5).prop_flat_map(|(r, n)| {
            (
                prop::collection::vec(-5i64..6, r),
                -10i64..10,
                prop::collection::hash_set(prop::collection::vec(-4i64..5, r), n),
                prop::collection::vec(1u32..20, n),
            )
                .prop_map(move |(a, b, deltas, weights)| {
                    let total: u32 = weights.iter().sum();
                    let branches = deltas
                        .into_iter()
                        .zip(&weights)
                        .map(|(delta, &w)| Branch {
                            delta,
                            prob: rat(w as i64, total as i64),
                        })
                        .collect();
                    let names = (0..r).map(|i| format!("x{i}")).collect();
                    CpProgram::new(names, a, b, branches, None).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn parse_print_identity(p in arb_program()) {
            prop_assert_eq!(parse_program(&p.to_string()).unwrap(), p);
        }
    }
}
