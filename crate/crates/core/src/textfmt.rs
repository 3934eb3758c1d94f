//! Line-oriented text format shared by the model files.
//!
//! Every line is `key value...` with whitespace-separated tokens. Blank
//! lines and lines starting with `#` are ignored. Reals are written with
//! Rust's shortest round-trip scientific notation (`{:e}`), so a model
//! written and read back is bit-identical.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

pub fn fmt_real(v: f64) -> String {
    format!("{v:e}")
}

pub fn fmt_reals(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 24);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:e}");
    }
    s
}

pub struct TextReader<'a> {
    source_name: String,
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

/// One non-blank line, split into tokens after its key.
pub struct Line<'a> {
    pub number: usize,
    pub key: &'a str,
    pub rest: Vec<&'a str>,
}

impl<'a> TextReader<'a> {
    pub fn new(source_name: impl Into<String>, text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        TextReader {
            source_name: source_name.into(),
            lines,
            pos: 0,
        }
    }

    pub fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Format {
            source_name: self.source_name.clone(),
            line,
            message: message.into(),
        }
    }

    fn current_line_number(&self) -> usize {
        self.lines
            .get(self.pos)
            .or_else(|| self.lines.last())
            .map_or(0, |(n, _)| *n)
    }

    pub fn peek_key(&self) -> Option<&'a str> {
        self.lines
            .get(self.pos)
            .and_then(|(_, l)| l.split_whitespace().next())
    }

    pub fn next_line(&mut self) -> Result<Line<'a>> {
        let (number, text) = *self
            .lines
            .get(self.pos)
            .ok_or_else(|| self.error(self.current_line_number(), "unexpected end of file"))?;
        self.pos += 1;
        let mut tokens = text.split_whitespace();
        let key = tokens.next().unwrap_or("");
        Ok(Line {
            number,
            key,
            rest: tokens.collect(),
        })
    }

    /// Next line, which must start with `key`.
    pub fn expect(&mut self, key: &str) -> Result<Line<'a>> {
        let line = self.next_line()?;
        if line.key != key {
            return Err(self.error(
                line.number,
                format!("expected `{key}`, found `{}`", line.key),
            ));
        }
        Ok(line)
    }

    /// `key value` with exactly one parsed value.
    pub fn expect_value<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.expect(key)?;
        if line.rest.len() != 1 {
            return Err(self.error(line.number, format!("`{key}` takes exactly one value")));
        }
        self.parse(line.number, line.rest[0])
    }

    /// `key v1 v2 ...` with exactly `len` reals.
    pub fn expect_reals(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let line = self.expect(key)?;
        self.reals(&line, len)
    }

    pub fn reals(&self, line: &Line<'_>, len: usize) -> Result<Vec<f64>> {
        if line.rest.len() != len {
            return Err(self.error(
                line.number,
                format!("`{}` needs {len} values, found {}", line.key, line.rest.len()),
            ));
        }
        line.rest
            .iter()
            .map(|t| {
                let v: f64 = self.parse(line.number, t)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(self.error(line.number, format!("non-finite value `{t}`")))
                }
            })
            .collect()
    }

    pub fn parse<T: FromStr>(&self, line: usize, token: &str) -> Result<T> {
        token
            .parse()
            .map_err(|_| self.error(line, format!("cannot parse `{token}`")))
    }

    pub fn is_done(&self) -> bool {
        self.pos >= self.lines.len()
    }

    pub fn expect_done(&self) -> Result<()> {
        match self.lines.get(self.pos) {
            None => Ok(()),
            Some((n, _)) => Err(self.error(*n, "trailing content")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_exactly() {
        let values = [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0, -0.0, 123456.789];
        let text = format!("vals {}\n", fmt_reals(&values));
        let mut r = TextReader::new("t", &text);
        let back = r.expect_reals("vals", values.len()).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "# header\n\nalpha 1\nbeta x\n";
        let mut r = TextReader::new("m.txt", text);
        assert_eq!(r.expect_value::<u32>("alpha").unwrap(), 1);
        let err = r.expect_value::<u32>("beta").unwrap_err();
        assert_eq!(err.to_string(), "m.txt:4: cannot parse `x`");
        assert!(r.next_line().is_err());
    }
}
