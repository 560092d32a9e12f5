use thiserror::Error;

use super::ast::*;
use super::lexer::{Keyword, Token, TokenKind};
use crate::diagnostics::{Located, Span};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected {expected}, found {found}")]
pub struct ParseError {
    pub span: Span,
    pub expected: String,
    pub found: String,
}

impl Located for ParseError {
    fn span(&self) -> Option<Span> {
        Some(self.span)
    }
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

/// Parses a token stream into declarations.
pub fn parse(tokens: &[Token]) -> Result<RawSpec, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut decls = Vec::new();
    while !p.at_end() {
        p.decl(&mut decls)?;
    }
    Ok(RawSpec { decls })
}

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, ahead: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos + ahead).map(|t| &t.kind)
    }

    fn current_span(&self) -> Span {
        match self.tokens.get(self.pos) {
            Some(t) => t.span,
            None => self
                .tokens
                .last()
                .map(|t| Span::new(t.span.end, t.span.end, t.span.line, t.span.column + 1))
                .unwrap_or(Span::new(0, 0, 1, 1)),
        }
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos - 1].span
    }

    fn error<T>(&self, expected: impl Into<String>) -> PResult<T> {
        let found = match self.peek() {
            Some(kind) => format!("`{}`", display_token(kind)),
            None => "end of input".to_string(),
        };
        Err(ParseError { span: self.current_span(), expected: expected.into(), found })
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Span> {
        if self.eat(&kind) {
            Ok(self.prev_span())
        } else {
            self.error(format!("`{}`", display_token(&kind)))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(Ident { name, span: self.prev_span() })
            }
            _ => self.error("identifier"),
        }
    }

    fn type_tag(&mut self) -> PResult<TypeTag> {
        match self.peek() {
            Some(TokenKind::Ident(name)) if name == "Int32" => {
                self.pos += 1;
                Ok(TypeTag::Int32)
            }
            Some(TokenKind::Ident(name)) if name == "Bool" => {
                self.pos += 1;
                Ok(TypeTag::Bool)
            }
            _ => self.error("type `Int32` or `Bool`"),
        }
    }

    /// Appends one declaration; `input a: T, b: U` appends one per typed group.
    fn decl(&mut self, out: &mut Vec<Decl>) -> PResult<()> {
        let start = self.current_span();
        let kind = match self.peek() {
            Some(TokenKind::Keyword(Keyword::Input)) => {
                self.pos += 1;
                let mut group_start = start;
                loop {
                    let mut names = vec![self.ident()?];
                    // A comma after the type starts another `names: type` group.
                    while self.eat(&TokenKind::Comma) {
                        names.push(self.ident()?);
                    }
                    self.expect(TokenKind::Colon)?;
                    let ty = self.type_tag()?;
                    out.push(Decl { kind: DeclKind::Input { names, ty }, span: group_start.to(self.prev_span()) });
                    if !self.eat(&TokenKind::Comma) {
                        return Ok(());
                    }
                    group_start = self.current_span();
                }
            }
            Some(TokenKind::Keyword(Keyword::Constant)) => {
                self.pos += 1;
                let name = self.ident()?;
                self.expect(TokenKind::Colon)?;
                let ty = self.type_tag()?;
                self.expect(TokenKind::Assign)?;
                let value = self.literal()?;
                DeclKind::Constant { name, ty, value }
            }
            Some(TokenKind::Keyword(Keyword::Output)) => {
                self.pos += 1;
                let name = self.ident()?;
                let ty = if self.eat(&TokenKind::Colon) { Some(self.type_tag()?) } else { None };
                self.expect(TokenKind::Assign)?;
                let expr = self.expr()?;
                DeclKind::Output { name, ty, expr }
            }
            Some(TokenKind::Keyword(Keyword::Trigger)) => {
                self.pos += 1;
                let expr = self.expr()?;
                let message = match self.peek() {
                    Some(TokenKind::Str(s)) => {
                        let s = s.clone();
                        self.pos += 1;
                        Some(s)
                    }
                    _ => None,
                };
                DeclKind::Trigger { expr, message }
            }
            _ => return self.error("declaration (`input`, `constant`, `output` or `trigger`)"),
        };
        out.push(Decl { kind, span: start.to(self.prev_span()) });
        Ok(())
    }

    /// `intlit | true | false | - intlit`
    fn literal(&mut self) -> PResult<Literal> {
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::True)) => {
                self.pos += 1;
                Ok(Literal::Bool(true))
            }
            Some(TokenKind::Keyword(Keyword::False)) => {
                self.pos += 1;
                Ok(Literal::Bool(false))
            }
            Some(TokenKind::Minus) => {
                self.pos += 1;
                let v = self.int_magnitude()?;
                Ok(Literal::Int(negate_magnitude(v, self.prev_span())?))
            }
            Some(TokenKind::Int(_)) => {
                let v = self.int_magnitude()?;
                Ok(Literal::Int(positive_magnitude(v, self.prev_span())?))
            }
            _ => self.error("literal"),
        }
    }

    fn int_magnitude(&mut self) -> PResult<u64> {
        match self.peek() {
            Some(TokenKind::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => self.error("integer literal"),
        }
    }

    fn signed_int(&mut self) -> PResult<i32> {
        let negative = self.eat(&TokenKind::Minus);
        if !negative {
            self.eat(&TokenKind::Plus);
        }
        let v = self.int_magnitude()?;
        if negative {
            negate_magnitude(v, self.prev_span())
        } else {
            positive_magnitude(v, self.prev_span())
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        if self.peek() == Some(&TokenKind::Keyword(Keyword::If)) {
            return self.if_expr();
        }
        self.binary(1)
    }

    fn if_expr(&mut self) -> PResult<Expr> {
        let start = self.expect(TokenKind::Keyword(Keyword::If))?;
        let cond = self.expr()?;
        self.expect(TokenKind::Keyword(Keyword::Then))?;
        let then = self.expr()?;
        self.expect(TokenKind::Keyword(Keyword::Else))?;
        let els = self.expr()?;
        let span = start.to(els.span);
        Ok(Expr { kind: ExprKind::Ite { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) }, span })
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        Some(match self.peek()? {
            TokenKind::Or => BinaryOp::Or,
            TokenKind::And => BinaryOp::And,
            TokenKind::Lt => BinaryOp::Lt,
            TokenKind::Le => BinaryOp::Le,
            TokenKind::Gt => BinaryOp::Gt,
            TokenKind::Ge => BinaryOp::Ge,
            TokenKind::Eq => BinaryOp::Eq,
            TokenKind::Ne => BinaryOp::Ne,
            TokenKind::Plus => BinaryOp::Add,
            TokenKind::Minus => BinaryOp::Sub,
            TokenKind::Star => BinaryOp::Mul,
            TokenKind::Slash => BinaryOp::Div,
            TokenKind::Percent => BinaryOp::Rem,
            _ => return None,
        })
    }

    /// Precedence climbing over the left-associative binary levels.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.current_span();
        let op = match self.peek() {
            Some(TokenKind::Not) => UnaryOp::Not,
            Some(TokenKind::Minus) => UnaryOp::Neg,
            _ => return self.primary(),
        };
        self.pos += 1;
        // `-` directly applied to an integer literal is the negative literal itself.
        if op == UnaryOp::Neg {
            if let Some(TokenKind::Int(v)) = self.peek() {
                let v = *v;
                self.pos += 1;
                let span = start.to(self.prev_span());
                return Ok(Expr { kind: ExprKind::Literal(Literal::Int(negate_magnitude(v, span)?)), span });
            }
        }
        let operand = self.unary()?;
        let span = start.to(operand.span);
        Ok(Expr { kind: ExprKind::Unary { op, operand: Box::new(operand) }, span })
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.current_span();
        match self.peek() {
            Some(TokenKind::Int(_)) => {
                let v = self.int_magnitude()?;
                Ok(Expr { kind: ExprKind::Literal(Literal::Int(positive_magnitude(v, start)?)), span: start })
            }
            Some(TokenKind::Keyword(Keyword::True)) => {
                self.pos += 1;
                Ok(Expr { kind: ExprKind::Literal(Literal::Bool(true)), span: start })
            }
            Some(TokenKind::Keyword(Keyword::False)) => {
                self.pos += 1;
                Ok(Expr { kind: ExprKind::Literal(Literal::Bool(false)), span: start })
            }
            Some(TokenKind::Keyword(Keyword::If)) => self.if_expr(),
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let mut inner = self.expr()?;
                let close = self.expect(TokenKind::RParen)?;
                inner.span = start.to(close);
                Ok(inner)
            }
            Some(TokenKind::Ident(name)) if self.peek_at(1) == Some(&TokenKind::LParen) => {
                let name = name.clone();
                if name == "ite" {
                    self.pos += 2;
                    let cond = self.expr()?;
                    self.expect(TokenKind::Comma)?;
                    let then = self.expr()?;
                    self.expect(TokenKind::Comma)?;
                    let els = self.expr()?;
                    let close = self.expect(TokenKind::RParen)?;
                    return Ok(Expr {
                        kind: ExprKind::Ite { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) },
                        span: start.to(close),
                    });
                }
                let Some(builtin) = Builtin::from_name(&name) else {
                    self.pos += 1;
                    return self.error("operator or end of expression");
                };
                self.pos += 2;
                let mut args = vec![self.expr()?];
                while self.eat(&TokenKind::Comma) {
                    args.push(self.expr()?);
                }
                let close = self.expect(TokenKind::RParen)?;
                let span = start.to(close);
                if args.len() != builtin.arity() {
                    return Err(ParseError {
                        span,
                        expected: format!("{} argument(s) to `{}`", builtin.arity(), builtin.name()),
                        found: format!("{}", args.len()),
                    });
                }
                Ok(Expr { kind: ExprKind::Call { builtin, args }, span })
            }
            Some(TokenKind::Ident(_)) => {
                let target = self.ident()?;
                if self.eat(&TokenKind::LBracket) {
                    let offset = self.signed_int()?;
                    self.expect(TokenKind::Comma)?;
                    let default = self.literal()?;
                    let close = self.expect(TokenKind::RBracket)?;
                    Ok(Expr {
                        kind: ExprKind::Access { target, offset, default: Some(default) },
                        span: start.to(close),
                    })
                } else {
                    Ok(Expr { kind: ExprKind::Access { target, offset: 0, default: None }, span: start })
                }
            }
            _ => self.error("expression"),
        }
    }
}

fn positive_magnitude(v: u64, span: Span) -> PResult<i32> {
    i32::try_from(v).map_err(|_| ParseError {
        span,
        expected: "integer literal within Int32 range".into(),
        found: v.to_string(),
    })
}

fn negate_magnitude(v: u64, span: Span) -> PResult<i32> {
    if v <= i32::MAX as u64 + 1 {
        Ok((-(v as i64)) as i32)
    } else {
        Err(ParseError { span, expected: "integer literal within Int32 range".into(), found: format!("-{v}") })
    }
}

fn display_token(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Keyword(k) => k.as_str().to_string(),
        TokenKind::Ident(name) => name.clone(),
        TokenKind::Int(v) => v.to_string(),
        TokenKind::Str(s) => format!("{s:?}"),
        other => other.to_string(),
    }
}
