//! Source locations and error rendering.

use std::fmt;

/// A region of specification source text.
///
/// `line` and `column` are 1-based and point at the first character; the byte
/// range allows diagnostics to quote the original text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, column: u32) -> Self {
        Span { start, end, line, column }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        let (first, _) = if self.start <= other.start { (self, other) } else { (other, self) };
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line: first.line,
            column: first.column,
        }
    }

    /// The source text covered by this span, if it lies within `source`.
    pub fn snippet(self, source: &str) -> Option<&str> {
        source.get(self.start..self.end)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Errors that carry a source location.
pub trait Located {
    fn span(&self) -> Option<Span>;
}

/// Renders `<file>:<line>:<col>: error: <message>`.
pub fn render_error<E: Located + fmt::Display>(file: &str, err: &E) -> String {
    match err.span() {
        Some(span) => format!("{file}:{}:{}: error: {err}", span.line, span.column),
        None => format!("{file}: error: {err}"),
    }
}

/// Renders `<file>:<line>:<col>: warning: <message>`.
pub fn render_warning(file: &str, span: Span, message: &str) -> String {
    format!("{file}:{}:{}: warning: {message}", span.line, span.column)
}
