//! Parser for the potential description language.
//!
//! Grammar:
//! ```text
//! potential := term ( "+" term )*
//! term      := [ number "*" ] atom
//! atom      := "step{" pair ("," pair)* "}"
//!            | "cos(" int "," number "," number ")"
//!            | "sing(" number "," number ")"
//!            | "zero"
//! pair      := rational ":" number
//! ```
//! `cos(k, a, φ)` means a·cos(2πkx + φ) and `sing(γ, c)` the 1-periodization
//! of c·|x|^{-γ}. Rationals are written "p/q"; numbers accept decimal or
//! rational form. Errors carry a 1-based column and what was expected.

use gordonlab::exact::{parse_rational, BigRational};
use gordonlab::potential::{PeriodicPotential, StepPotential, TrigPoly, TrigTerm};

/// Parse error with position information (single-line inputs: line is
/// always 1, `col` is 1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DslError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl std::fmt::Display for DslError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for DslError {}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

type PResult<T> = Result<T, DslError>;

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> DslError {
        DslError {
            line: 1,
            col: self.pos + 1,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> PResult<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected {token:?}")))
        }
    }

    /// Longest prefix matching a numeric token (digits, sign, dot, exponent,
    /// or a p/q rational).
    fn numeric_token(&mut self) -> PResult<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let mut len = 0;
        let bytes = rest.as_bytes();
        while len < bytes.len() {
            let c = bytes[len] as char;
            let ok = c.is_ascii_digit()
                || c == '.'
                || c == '/'
                || ((c == '+' || c == '-')
                    && (len == 0 || bytes[len - 1] == b'e' || bytes[len - 1] == b'E'))
                || c == 'e'
                || c == 'E';
            if !ok {
                break;
            }
            len += 1;
        }
        if len == 0 {
            return Err(self.error("expected a number"));
        }
        let tok = &rest[..len];
        self.pos += len;
        Ok(tok)
    }

    fn number(&mut self) -> PResult<f64> {
        let start = self.pos;
        let tok = self.numeric_token()?;
        if let Some((p, q)) = tok.split_once('/') {
            let p: f64 = p.parse().map_err(|_| DslError {
                line: 1,
                col: start + 1,
                message: format!("bad rational numerator {p:?}"),
            })?;
            let q: f64 = q.parse().map_err(|_| DslError {
                line: 1,
                col: start + 1,
                message: format!("bad rational denominator {q:?}"),
            })?;
            if q == 0.0 {
                return Err(DslError {
                    line: 1,
                    col: start + 1,
                    message: "zero denominator".into(),
                });
            }
            Ok(p / q)
        } else {
            tok.parse().map_err(|_| DslError {
                line: 1,
                col: start + 1,
                message: format!("bad number {tok:?}"),
            })
        }
    }

    fn rational(&mut self) -> PResult<BigRational> {
        let start = self.pos;
        let tok = self.numeric_token()?;
        parse_rational(tok).map_err(|e| DslError {
            line: 1,
            col: start + 1,
            message: e.to_string(),
        })
    }

    fn integer(&mut self) -> PResult<u32> {
        let start = self.pos;
        let tok = self.numeric_token()?;
        tok.parse().map_err(|_| DslError {
            line: 1,
            col: start + 1,
            message: format!("expected an integer harmonic, got {tok:?}"),
        })
    }

    fn atom(&mut self) -> PResult<PeriodicPotential> {
        self.skip_ws();
        if self.eat("step{") {
            let mut pieces = Vec::new();
            loop {
                let b = self.rational()?;
                self.expect(":")?;
                let v = self.number()?;
                pieces.push((b, v));
                if self.eat(",") {
                    continue;
                }
                self.expect("}")?;
                break;
            }
            let pos = self.pos;
            StepPotential::new(pieces)
                .map(PeriodicPotential::Step)
                .map_err(|e| DslError {
                    line: 1,
                    col: pos,
                    message: e.to_string(),
                })
        } else if self.eat("cos(") {
            let k = self.integer()?;
            self.expect(",")?;
            let a = self.number()?;
            self.expect(",")?;
            let phi = self.number()?;
            self.expect(")")?;
            let pos = self.pos;
            TrigPoly::new(vec![TrigTerm {
                harmonic: k,
                amplitude: a,
                phase: phi,
            }])
            .map(PeriodicPotential::Smooth)
            .map_err(|e| DslError {
                line: 1,
                col: pos,
                message: e.to_string(),
            })
        } else if self.eat("sing(") {
            let gamma = self.number()?;
            self.expect(",")?;
            let c = self.number()?;
            self.expect(")")?;
            let pos = self.pos;
            PeriodicPotential::power_singular(gamma, c).map_err(|e| DslError {
                line: 1,
                col: pos,
                message: e.to_string(),
            })
        } else if self.eat("zero") {
            Ok(PeriodicPotential::zero())
        } else {
            Err(self.error("expected an atom: step{...}, cos(...), sing(...), or zero"))
        }
    }

    fn term(&mut self) -> PResult<(f64, PeriodicPotential)> {
        self.skip_ws();
        // Lookahead: a number followed by '*' is a coefficient.
        let save = self.pos;
        if let Ok(c) = self.number() {
            if self.eat("*") {
                let atom = self.atom()?;
                return Ok((c, atom));
            }
        }
        self.pos = save;
        Ok((1.0, self.atom()?))
    }

    fn potential(&mut self) -> PResult<PeriodicPotential> {
        let mut terms = vec![self.term()?];
        while self.eat("+") {
            terms.push(self.term()?);
        }
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.error("unexpected trailing input"));
        }
        if terms.len() == 1 && terms[0].0 == 1.0 {
            Ok(terms.pop().unwrap().1)
        } else {
            Ok(PeriodicPotential::sum(terms))
        }
    }
}

/// Parse a potential DSL string.
pub fn parse_potential(src: &str) -> Result<PeriodicPotential, DslError> {
    Parser::new(src).potential()
}
