use std::fmt::Write;

use crate::error::{Error, Result};
use crate::workloads::Matrix;

/// Shortest decimal text that parses back to exactly `x`.
///
/// Plain notation with at least one fractional digit for `|x|` in
/// `[1e-4, 1e16)` and for zero; lowercase `e` notation otherwise
/// (`1e16`, `5e-324`). This is the `{:?}` rendering of `f64`.
pub fn format_f64(x: f64) -> String {
    let mut s = String::new();
    push_f64(&mut s, x);
    s
}

fn push_f64(out: &mut String, x: f64) {
    write!(out, "{x:?}").expect("writing to a String cannot fail");
}

pub(super) fn encode(m: &Matrix) -> Result<Vec<u8>> {
    if let Some(x) = m.data().iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("TEXT cannot represent {x}")));
    }
    let mut out = String::with_capacity(m.data().len() * 20 + 2 * m.rows() + 2);
    out.push('[');
    for r in 0..m.rows() {
        if r > 0 {
            out.push(',');
        }
        out.push('[');
        for (c, &x) in m.row(r).iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            push_f64(&mut out, x);
        }
        out.push(']');
    }
    out.push(']');
    Ok(out.into_bytes())
}

pub(super) fn decode(bytes: &[u8]) -> Result<Matrix> {
    let mut p = Parser { bytes, pos: 0 };
    let m = p.matrix()?;
    p.skip_ws();
    if p.pos != bytes.len() {
        return Err(p.error("trailing data"));
    }
    Ok(m)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::malformed(format!("TEXT {what} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while matches!(self.bytes.get(self.pos), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", b as char)))
        }
    }

    fn matrix(&mut self) -> Result<Matrix> {
        self.expect(b'[')?;
        let mut data = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        loop {
            let before = data.len();
            self.row(&mut data)?;
            let width = data.len() - before;
            match cols {
                None => cols = Some(width),
                Some(c) if c != width => return Err(self.error(&format!("ragged row {rows}: {width} != {c}"))),
                _ => {}
            }
            rows += 1;
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b']') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.error("expected ',' or ']'")),
            }
        }
        Matrix::new(rows, cols.unwrap_or(0), data).map_err(|e| Error::malformed(e.to_string()))
    }

    fn row(&mut self, out: &mut Vec<f64>) -> Result<()> {
        self.expect(b'[')?;
        if self.peek() == Some(b']') {
            return Err(self.error("empty row"));
        }
        loop {
            out.push(self.number()?);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b']') => {
                    self.pos += 1;
                    return Ok(());
                }
                _ => return Err(self.error("expected ',' or ']'")),
            }
        }
    }

    /// JSON number grammar: `-?(0|[1-9][0-9]*)(\.[0-9]+)?([eE][+-]?[0-9]+)?`.
    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let b = self.bytes;
        let digits = |pos: &mut usize| {
            let s = *pos;
            while b.get(*pos).is_some_and(u8::is_ascii_digit) {
                *pos += 1;
            }
            *pos - s
        };

        let mut pos = self.pos;
        if b.get(pos) == Some(&b'-') {
            pos += 1;
        }
        match b.get(pos) {
            Some(b'0') => pos += 1,
            Some(b'1'..=b'9') => {
                digits(&mut pos);
            }
            _ => return Err(self.error("expected number")),
        }
        if b.get(pos) == Some(&b'.') {
            pos += 1;
            if digits(&mut pos) == 0 {
                self.pos = pos;
                return Err(self.error("expected fraction digits"));
            }
        }
        if matches!(b.get(pos), Some(b'e' | b'E')) {
            pos += 1;
            if matches!(b.get(pos), Some(b'+' | b'-')) {
                pos += 1;
            }
            if digits(&mut pos) == 0 {
                self.pos = pos;
                return Err(self.error("expected exponent digits"));
            }
        }
        self.pos = pos;
        // The slice is ASCII by construction.
        let text = std::str::from_utf8(&b[start..pos]).unwrap();
        let x: f64 = text.parse().map_err(|_| self.error("unparsable number"))?;
        if !x.is_finite() {
            return Err(self.error("number out of range"));
        }
        Ok(x)
    }
}
