use std::fmt::Write;

use thiserror::Error;

use crate::frontend::{Literal, TypeTag, TypedSpec};

/// Input values for positions `0..len`, one column per input in spec order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub columns: Vec<Vec<Literal>>,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}, column {column}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Trace {
    /// A trace of `len` positions for a spec without inputs.
    pub fn empty(len: usize) -> Trace {
        Trace { columns: Vec::new(), len }
    }

    pub fn value(&self, input: usize, pos: usize) -> Literal {
        self.columns[input][pos]
    }

    /// Parses the CSV trace format. Columns may appear in any order but must
    /// cover every input exactly once.
    pub fn from_csv(spec: &TypedSpec, text: &str) -> Result<Trace, TraceError> {
        let inputs: Vec<(&str, TypeTag)> = spec.inputs().map(|(_, s)| (s.name.as_str(), s.ty)).collect();
        let err = |line: usize, column: usize, message: String| TraceError { line, column, message };
        let mut lines = text.lines().enumerate();
        let header = match lines.next() {
            Some((_, h)) => h,
            None if inputs.is_empty() => return Ok(Trace::empty(0)),
            None => return Err(err(1, 1, "missing header row".into())),
        };
        let header = header.trim_end_matches('\r');
        // Column in the file -> input index.
        let mut mapping = Vec::new();
        if !header.trim().is_empty() || !inputs.is_empty() {
            for (col, name) in header.split(',').enumerate() {
                let name = name.trim();
                let idx = inputs
                    .iter()
                    .position(|(n, _)| *n == name)
                    .ok_or_else(|| err(1, col + 1, format!("`{name}` is not an input stream")))?;
                if mapping.contains(&idx) {
                    return Err(err(1, col + 1, format!("duplicate column `{name}`")));
                }
                mapping.push(idx);
            }
        }
        if let Some((missing, _)) = inputs.iter().enumerate().find(|(i, _)| !mapping.contains(i)) {
            return Err(err(1, 1, format!("missing column `{}`", inputs[missing].0)));
        }

        let mut columns: Vec<Vec<Literal>> = vec![Vec::new(); inputs.len()];
        let mut len = 0;
        for (lineno, line) in lines {
            let line = line.trim_end_matches('\r');
            if !inputs.is_empty() && line.trim().is_empty() {
                continue;
            }
            if inputs.is_empty() {
                len += 1;
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != mapping.len() {
                return Err(err(
                    lineno + 1,
                    cells.len().min(mapping.len()) + 1,
                    format!("expected {} cells, found {}", mapping.len(), cells.len()),
                ));
            }
            for (col, cell) in cells.iter().enumerate() {
                let (name, ty) = inputs[mapping[col]];
                let v = parse_value(cell, ty).ok_or_else(|| {
                    err(lineno + 1, col + 1, format!("invalid {ty} value `{}` for `{name}`", cell.trim()))
                })?;
                columns[mapping[col]].push(v);
            }
            len += 1;
        }
        Ok(Trace { columns, len })
    }

    /// Writes the trace with columns in spec input order.
    pub fn to_csv(&self, spec: &TypedSpec) -> String {
        let names: Vec<&str> = spec.inputs().map(|(_, s)| s.name.as_str()).collect();
        let mut out = names.join(",");
        out.push('\n');
        for pos in 0..self.len {
            for (i, col) in self.columns.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", col[pos]);
            }
            out.push('\n');
        }
        out
    }
}

/// Parses one trace cell: decimal Int32, or `true`/`false`/`1`/`0` for Bool.
pub fn parse_value(cell: &str, ty: TypeTag) -> Option<Literal> {
    let cell = cell.trim();
    match ty {
        TypeTag::Int32 => cell.parse::<i32>().ok().map(Literal::Int),
        TypeTag::Bool => match cell {
            "true" | "1" => Some(Literal::Bool(true)),
            "false" | "0" => Some(Literal::Bool(false)),
            _ => None,
        },
    }
}
