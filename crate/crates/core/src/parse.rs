//! Parser for the published expression grammar.
//!
//! Identifiers `[A-Za-z][A-Za-z0-9_]*`, integer literals, operators
//! `+ - * ^` with positive integer exponents, function application
//! `H(S1,S2,S3;xi1,...,xiN)` where `;` is read as `,`, derivative suffixes
//! `H_d{S1}` (repeatable), parameter keywords `i zeta eps2 k2 kappa`.
//! Whitespace is insignificant. `parse . print` is the identity on
//! canonical forms.

use crate::error::ExprError;
use crate::expr::{Expr, ExprCtx, FnInstance};
use crate::param::{Coeff, ParamPow};
use crate::symbol::FnId;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Comma,
    /// `_d{` marker introducing a derivative suffix
    Deriv,
    LBrace,
    RBrace,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(text: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer {
            src: text.as_bytes(),
            pos: 0,
            toks: Vec::new(),
        };
        lx.lex()?;
        Ok(lx.toks)
    }

    fn lex(&mut self) -> Result<(), ExprError> {
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let start = self.pos;
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.pos += 1;
                }
                b'+' => {
                    self.toks.push((Tok::Plus, start));
                    self.pos += 1;
                }
                b'-' => {
                    self.toks.push((Tok::Minus, start));
                    self.pos += 1;
                }
                b'*' => {
                    self.toks.push((Tok::Star, start));
                    self.pos += 1;
                }
                b'^' => {
                    self.toks.push((Tok::Caret, start));
                    self.pos += 1;
                }
                b'(' => {
                    self.toks.push((Tok::LParen, start));
                    self.pos += 1;
                }
                b')' => {
                    self.toks.push((Tok::RParen, start));
                    self.pos += 1;
                }
                b',' | b';' => {
                    self.toks.push((Tok::Comma, start));
                    self.pos += 1;
                }
                b'{' => {
                    self.toks.push((Tok::LBrace, start));
                    self.pos += 1;
                }
                b'}' => {
                    self.toks.push((Tok::RBrace, start));
                    self.pos += 1;
                }
                b'_' => {
                    // only valid as the `_d{` derivative marker
                    if self.src.get(self.pos + 1) == Some(&b'd')
                        && self.src.get(self.pos + 2) == Some(&b'{')
                    {
                        self.toks.push((Tok::Deriv, start));
                        self.toks.push((Tok::LBrace, start + 2));
                        self.pos += 3;
                    } else {
                        return Err(ExprError::Syntax {
                            pos: start,
                            msg: "unexpected `_`".into(),
                        });
                    }
                }
                b'0'..=b'9' => {
                    let mut end = self.pos;
                    while end < self.src.len() && self.src[end].is_ascii_digit() {
                        end += 1;
                    }
                    let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                    let n: i64 = text.parse().map_err(|_| ExprError::Syntax {
                        pos: start,
                        msg: "integer literal too large".into(),
                    })?;
                    self.toks.push((Tok::Int(n), start));
                    self.pos = end;
                }
                c if c.is_ascii_alphabetic() => {
                    let mut end = self.pos;
                    while end < self.src.len()
                        && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                    {
                        end += 1;
                    }
                    // split a trailing `_d` off when a `{` follows: that is a
                    // derivative suffix, not part of the identifier
                    let mut ident_end = end;
                    if end < self.src.len()
                        && self.src[end] == b'{'
                        && end >= self.pos + 3
                        && &self.src[end - 2..end] == b"_d"
                    {
                        ident_end = end - 2;
                    }
                    let text =
                        std::str::from_utf8(&self.src[self.pos..ident_end]).unwrap().to_string();
                    self.toks.push((Tok::Ident(text), start));
                    if ident_end != end {
                        // the `_d` chars belong to the marker token
                        self.toks.push((Tok::Deriv, ident_end));
                    }
                    self.pos = end;
                }
                _ => {
                    return Err(ExprError::Syntax {
                        pos: start,
                        msg: format!("unexpected character `{}`", c as char),
                    });
                }
            }
        }
        Ok(())
    }
}

pub struct Parser<'a> {
    ctx: &'a ExprCtx,
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl<'a> Parser<'a> {
    pub fn new(ctx: &'a ExprCtx, text: &str) -> Result<Self, ExprError> {
        Ok(Parser {
            ctx,
            toks: Lexer::run(text)?,
            at: 0,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks
            .get(self.at)
            .map(|&(_, p)| p)
            .unwrap_or(usize::MAX)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&t) {
            self.at += 1;
            Ok(())
        } else {
            Err(ExprError::Syntax {
                pos: self.pos(),
                msg: format!("expected {what}"),
            })
        }
    }

    pub fn parse_complete(mut self) -> Result<Expr, ExprError> {
        let e = self.parse_sum()?;
        if self.at != self.toks.len() {
            return Err(ExprError::Syntax {
                pos: self.pos(),
                msg: "trailing input".into(),
            });
        }
        Ok(self.ctx.normalize(&e))
    }

    fn parse_sum(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.parse_product()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.at += 1;
                    let rhs = self.parse_product()?;
                    acc = self.ctx.add(&acc, &rhs);
                }
                Some(Tok::Minus) => {
                    self.at += 1;
                    let rhs = self.parse_product()?;
                    acc = self.ctx.sub(&acc, &rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_product(&mut self) -> Result<Expr, ExprError> {
        let mut neg = false;
        while self.peek() == Some(&Tok::Minus) {
            neg = !neg;
            self.at += 1;
        }
        let mut acc = self.parse_factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.at += 1;
            let rhs = self.parse_factor()?;
            acc = self.ctx.mul(&acc, &rhs);
        }
        if neg {
            acc = self.ctx.neg(&acc);
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.parse_atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.at += 1;
            match self.bump() {
                Some(Tok::Int(n)) if n > 0 => Ok(self.ctx.pow(&base, n as u32)),
                _ => Err(ExprError::BadExponent),
            }
        } else {
            Ok(base)
        }
    }

    fn parse_atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Int(n)) => Ok(self.ctx.int(n)),
            Some(Tok::LParen) => {
                let e = self.parse_sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Minus) => {
                let e = self.parse_atom()?;
                Ok(self.ctx.neg(&e))
            }
            Some(Tok::Ident(name)) => self.parse_ident(name, pos),
            _ => Err(ExprError::Syntax {
                pos,
                msg: "expected expression".into(),
            }),
        }
    }

    fn parse_ident(&mut self, name: String, pos: usize) -> Result<Expr, ExprError> {
        // parameter keywords
        match name.as_str() {
            "i" => return Ok(self.ctx.from_coeff(Coeff::i())),
            "zeta" => {
                return Ok(self.ctx.param(ParamPow {
                    zeta: 1,
                    kappa: 0,
                    eps2: 0,
                }))
            }
            "kappa" => {
                return Ok(self.ctx.param(ParamPow {
                    zeta: 0,
                    kappa: 1,
                    eps2: 0,
                }))
            }
            "k2" => {
                return Ok(self.ctx.param(ParamPow {
                    zeta: 0,
                    kappa: 2,
                    eps2: 0,
                }))
            }
            "eps2" => {
                return Ok(self.ctx.param(ParamPow {
                    zeta: 0,
                    kappa: 0,
                    eps2: 1,
                }))
            }
            _ => {}
        }
        // abstract function: derivative suffixes then an argument list
        if let Some(fn_id) = self.ctx.table.lookup_fn(&name) {
            return self.parse_fn_instance(fn_id);
        }
        if let Some(id) = self.ctx.table.lookup(&name) {
            return Ok(self.ctx.sym(id));
        }
        let _ = pos;
        Err(ExprError::Undeclared(name))
    }

    fn parse_fn_instance(&mut self, fn_id: FnId) -> Result<Expr, ExprError> {
        let decl = self.ctx.table.fn_decl(fn_id).clone();
        let mut inst = FnInstance::base(fn_id, decl.args.len());
        let mut dead = false; // derivative w.r.t. a non-argument gives zero
        while self.peek() == Some(&Tok::Deriv) {
            self.at += 1;
            self.expect(Tok::LBrace, "`{`")?;
            let pos = self.pos();
            let sym_name = match self.bump() {
                Some(Tok::Ident(s)) => s,
                _ => {
                    return Err(ExprError::Syntax {
                        pos,
                        msg: "expected symbol in derivative suffix".into(),
                    })
                }
            };
            self.expect(Tok::RBrace, "`}`")?;
            let sym = self
                .ctx
                .table
                .lookup(&sym_name)
                .ok_or(ExprError::Undeclared(sym_name))?;
            match decl.args.iter().position(|&a| a == sym) {
                Some(k) => inst.deriv[k] += 1,
                None => dead = true,
            }
        }
        // argument list must repeat the declared arguments in order
        self.expect(Tok::LParen, "`(`")?;
        for (k, &want) in decl.args.iter().enumerate() {
            if k > 0 {
                self.expect(Tok::Comma, "`,` or `;`")?;
            }
            let pos = self.pos();
            match self.bump() {
                Some(Tok::Ident(s)) => {
                    let got = self
                        .ctx
                        .table
                        .lookup(&s)
                        .ok_or(ExprError::Undeclared(s.clone()))?;
                    if got != want {
                        return Err(ExprError::Syntax {
                            pos,
                            msg: format!(
                                "argument {} of `{}` must be `{}`",
                                k + 1,
                                decl.name,
                                self.ctx.table.name(want)
                            ),
                        });
                    }
                }
                _ => {
                    return Err(ExprError::Syntax {
                        pos,
                        msg: "expected argument identifier".into(),
                    })
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        if dead {
            Ok(self.ctx.zero())
        } else {
            Ok(self.ctx.fn_instance(inst))
        }
    }
}

impl ExprCtx {
    /// Parse a scalar expression in the published grammar.
    pub fn parse_expr(&self, text: &str) -> Result<Expr, ExprError> {
        Parser::new(self, text)?.parse_complete()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::ParamRing;
    use crate::symbol::{SymbolRole, SymbolTable};

    fn ctx() -> ExprCtx {
        let mut t = SymbolTable::new();
        let s1 = t.declare("S1", SymbolRole::FibreVariable, Some(1)).unwrap();
        let s2 = t.declare("S2", SymbolRole::FibreVariable, Some(2)).unwrap();
        let s3 = t.declare("S3", SymbolRole::FibreVariable, Some(3)).unwrap();
        t.declare("P2", SymbolRole::JetVariable, Some(2)).unwrap();
        let xi = t.declare("xi1", SymbolRole::Pseudopotential, None).unwrap();
        t.declare("phi", SymbolRole::FibreVariable, None).unwrap();
        t.declare_fn("H", vec![s1, s2, s3, xi]).unwrap();
        t.freeze();
        ExprCtx::new(t, ParamRing::default())
    }

    #[test]
    fn zero_is_empty_sum() {
        let c = ctx();
        let e = c.parse_expr("0").unwrap();
        assert!(e.terms.is_empty());
    }

    #[test]
    fn ring_commutativity() {
        let c = ctx();
        let e = c.parse_expr("S1*P2 - P2*S1").unwrap();
        assert!(e.terms.is_empty());
    }

    #[test]
    fn kappa_involution() {
        let c = ctx();
        let e = c.parse_expr("k2*k2*S3").unwrap();
        assert_eq!(c.print(&e), "S3");
    }

    #[test]
    fn parse_print_roundtrip() {
        let c = ctx();
        for text in [
            "S1^2*S2 + 3*S3",
            "H(S1,S2,S3;xi1)",
            "H_d{S1}(S1,S2,S3,xi1)",
            "2*i*zeta*S1 - S2",
        ] {
            let e = c.parse_expr(text).unwrap();
            let printed = c.print(&e);
            let e2 = c.parse_expr(&printed).unwrap();
            assert_eq!(e, e2, "roundtrip failed for {text}");
        }
    }

    #[test]
    fn derivative_of_nonargument_is_zero() {
        let c = ctx();
        let e = c.parse_expr("H_d{phi}(S1,S2,S3,xi1)").unwrap();
        assert!(e.terms.is_empty());
    }

    #[test]
    fn undeclared_is_reported() {
        let c = ctx();
        match c.parse_expr("S1 + bogus") {
            Err(ExprError::Undeclared(n)) => assert_eq!(n, "bogus"),
            other => panic!("expected undeclared error, got {other:?}"),
        }
    }
}
