use std::fmt;

use thiserror::Error;

use crate::diagnostics::{Located, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Input,
    Output,
    Trigger,
    Constant,
    If,
    Then,
    Else,
    True,
    False,
}

impl Keyword {
    fn from_ident(word: &str) -> Option<Keyword> {
        Some(match word {
            "input" => Keyword::Input,
            "output" => Keyword::Output,
            "trigger" => Keyword::Trigger,
            "constant" => Keyword::Constant,
            "if" => Keyword::If,
            "then" => Keyword::Then,
            "else" => Keyword::Else,
            "true" => Keyword::True,
            "false" => Keyword::False,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Input => "input",
            Keyword::Output => "output",
            Keyword::Trigger => "trigger",
            Keyword::Constant => "constant",
            Keyword::If => "if",
            Keyword::Then => "then",
            Keyword::Else => "else",
            Keyword::True => "true",
            Keyword::False => "false",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    /// Unsigned integer literal; sign handling happens in the parser.
    Int(u64),
    Str(String),
    Colon,
    Assign,
    Comma,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Not,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "kw:{}", k.as_str()),
            TokenKind::Ident(name) => write!(f, "ident:{name}"),
            TokenKind::Int(v) => write!(f, "int:{v}"),
            TokenKind::Str(s) => write!(f, "str:{s:?}"),
            TokenKind::Colon => f.write_str(":"),
            TokenKind::Assign => f.write_str(":="),
            TokenKind::Comma => f.write_str(","),
            TokenKind::LBracket => f.write_str("["),
            TokenKind::RBracket => f.write_str("]"),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
            TokenKind::Plus => f.write_str("+"),
            TokenKind::Minus => f.write_str("-"),
            TokenKind::Star => f.write_str("*"),
            TokenKind::Slash => f.write_str("/"),
            TokenKind::Percent => f.write_str("%"),
            TokenKind::Lt => f.write_str("<"),
            TokenKind::Le => f.write_str("<="),
            TokenKind::Gt => f.write_str(">"),
            TokenKind::Ge => f.write_str(">="),
            TokenKind::Eq => f.write_str("=="),
            TokenKind::Ne => f.write_str("!="),
            TokenKind::And => f.write_str("&&"),
            TokenKind::Or => f.write_str("||"),
            TokenKind::Not => f.write_str("!"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

impl Located for LexError {
    fn span(&self) -> Option<Span> {
        Some(self.span)
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut chars = self.src[self.pos..].chars();
        chars.next();
        chars.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: usize, line: u32, column: u32) -> Span {
        Span::new(start, self.pos, line, column)
    }
}

/// Splits specification text into tokens, skipping whitespace and `//` comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { src: source, pos: 0, line: 1, column: 1 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek_second() == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }

        let (start, line, column) = (cur.pos, cur.line, cur.column);
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            let word = &source[start..cur.pos];
            match Keyword::from_ident(word) {
                Some(kw) => TokenKind::Keyword(kw),
                None => TokenKind::Ident(word.to_string()),
            }
        } else if c.is_ascii_digit() {
            while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                cur.bump();
            }
            let text = &source[start..cur.pos];
            match text.parse::<u64>() {
                Ok(v) if v <= u32::MAX as u64 => TokenKind::Int(v),
                _ => {
                    return Err(LexError {
                        span: cur.span_from(start, line, column),
                        message: format!("integer literal `{text}` is out of range"),
                    })
                }
            }
        } else if c == '"' {
            cur.bump();
            let mut text = String::new();
            loop {
                match cur.bump() {
                    None | Some('\n') => {
                        return Err(LexError {
                            span: cur.span_from(start, line, column),
                            message: "unterminated string literal".into(),
                        })
                    }
                    Some('"') => break,
                    Some('\\') => match cur.bump() {
                        Some('"') => text.push('"'),
                        Some('\\') => text.push('\\'),
                        Some('n') => text.push('\n'),
                        Some('t') => text.push('\t'),
                        other => {
                            return Err(LexError {
                                span: cur.span_from(start, line, column),
                                message: format!(
                                    "invalid escape sequence `\\{}`",
                                    other.map(String::from).unwrap_or_default()
                                ),
                            })
                        }
                    },
                    Some(c) => text.push(c),
                }
            }
            TokenKind::Str(text)
        } else {
            cur.bump();
            let next = cur.peek();
            let two = |kind: TokenKind, cur: &mut Cursor<'_>| {
                cur.bump();
                kind
            };
            match (c, next) {
                (':', Some('=')) => two(TokenKind::Assign, &mut cur),
                (':', _) => TokenKind::Colon,
                (',', _) => TokenKind::Comma,
                ('[', _) => TokenKind::LBracket,
                (']', _) => TokenKind::RBracket,
                ('(', _) => TokenKind::LParen,
                (')', _) => TokenKind::RParen,
                ('+', _) => TokenKind::Plus,
                ('-', _) => TokenKind::Minus,
                ('*', _) => TokenKind::Star,
                ('/', _) => TokenKind::Slash,
                ('%', _) => TokenKind::Percent,
                ('<', Some('=')) => two(TokenKind::Le, &mut cur),
                ('<', _) => TokenKind::Lt,
                ('>', Some('=')) => two(TokenKind::Ge, &mut cur),
                ('>', _) => TokenKind::Gt,
                ('=', Some('=')) => two(TokenKind::Eq, &mut cur),
                ('=', _) => TokenKind::Eq,
                ('!', Some('=')) => two(TokenKind::Ne, &mut cur),
                ('!', _) | ('¬', _) => TokenKind::Not,
                ('&', Some('&')) => two(TokenKind::And, &mut cur),
                ('&', _) | ('∧', _) => TokenKind::And,
                ('|', Some('|')) => two(TokenKind::Or, &mut cur),
                ('|', _) | ('∨', _) => TokenKind::Or,
                _ => {
                    return Err(LexError {
                        span: cur.span_from(start, line, column),
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        tokens.push(Token { kind, span: cur.span_from(start, line, column) });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<String> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind.to_string()).collect()
    }

    #[test]
    fn output_declaration() {
        assert_eq!(kinds("output x := 1"), ["kw:output", "ident:x", ":=", "int:1"]);
    }

    #[test]
    fn trigger_with_message() {
        assert_eq!(
            kinds(r#"trigger tooLow "Flying below minimum altitude.""#),
            ["kw:trigger", "ident:tooLow", "str:\"Flying below minimum altitude.\""]
        );
    }

    #[test]
    fn illegal_character() {
        let err = tokenize("@").unwrap_err();
        assert_eq!((err.span.line, err.span.column), (1, 1));
    }

    #[test]
    fn unterminated_string() {
        let err = tokenize("trigger x \"oops").unwrap_err();
        assert!(err.message.contains("unterminated"));
        assert_eq!(err.span.column, 11);
    }

    #[test]
    fn comments_and_operator_spellings() {
        assert_eq!(
            kinds("a & b && c ∧ d // trailing\n| || ∨ = == != ! ¬ <= >="),
            [
                "ident:a", "&&", "ident:b", "&&", "ident:c", "&&", "ident:d", "||", "||", "||", "==", "==", "!=", "!",
                "!", "<=", ">="
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("input a: Int32\n  output").unwrap();
        let last = toks.last().unwrap();
        assert_eq!((last.span.line, last.span.column), (2, 3));
    }

    #[test]
    fn oversized_integer() {
        assert!(tokenize("99999999999").is_err());
        assert_eq!(kinds("2147483648"), ["int:2147483648"]);
    }
}
