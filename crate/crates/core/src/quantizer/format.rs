//! Line-oriented text format for codebooks.
//!
//! ```text
//! codebook v1
//! kind lloyd-theta
//! bits 2
//! theta_class 1
//! trained_mse 1.2345678901234567e-2
//! converged true
//! levels 4
//! 3.4906585039886590e-1
//! ...
//! boundaries 5
//! ...
//! end
//! ```
//! Reals use 17 significant digits so a round trip is exact.

use std::fmt::Write;

use crate::error::{Error, Result};

use super::codebook::{CodebookKind, CodebookSet, ScalarCodebook};

const BOOK_MAGIC: &str = "codebook v1";
const SET_MAGIC: &str = "codebook-set v1";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_codebook(book: &ScalarCodebook) -> String {
    let mut s = String::new();
    write_into(&mut s, book);
    s
}

fn write_into(s: &mut String, book: &ScalarCodebook) {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "none".to_string());
    writeln!(s, "{BOOK_MAGIC}").unwrap();
    writeln!(s, "kind {}", book.kind.as_str()).unwrap();
    writeln!(s, "bits {}", book.bits).unwrap();
    writeln!(s, "theta_class {}", opt(book.theta_class.map(|l| l.to_string()))).unwrap();
    writeln!(s, "trained_mse {}", opt(book.trained_mse.map(real))).unwrap();
    writeln!(s, "converged {}", book.converged).unwrap();
    writeln!(s, "levels {}", book.levels.len()).unwrap();
    for &x in &book.levels {
        writeln!(s, "{}", real(x)).unwrap();
    }
    writeln!(s, "boundaries {}", book.boundaries.len()).unwrap();
    for &x in &book.boundaries {
        writeln!(s, "{}", real(x)).unwrap();
    }
    writeln!(s, "end").unwrap();
}

pub fn write_codebook_set(set: &CodebookSet) -> String {
    let mut s = String::new();
    writeln!(s, "{SET_MAGIC}").unwrap();
    writeln!(s, "r {}", set.r).unwrap();
    write_into(&mut s, &set.phase_book);
    for b in &set.theta_books {
        write_into(&mut s, b);
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate(), line: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn next(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    let l = l.trim();
                    if !l.is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(self.err("unexpected end of input")),
            }
        }
    }

    fn exact(&mut self, want: &str) -> Result<()> {
        let got = self.next()?;
        if got != want {
            return Err(self.err(format!("expected `{want}`, found `{got}`")));
        }
        Ok(())
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let got = self.next()?;
        match got.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim()),
            _ => Err(self.err(format!("expected `{key} <value>`, found `{got}`"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, v: &str) -> Result<T> {
        v.parse().map_err(|_| self.err(format!("cannot parse `{v}`")))
    }

    fn optional<T: std::str::FromStr>(&self, v: &str) -> Result<Option<T>> {
        if v == "none" {
            Ok(None)
        } else {
            self.parse(v).map(Some)
        }
    }

    fn reals(&mut self, key: &str) -> Result<Vec<f64>> {
        let v = self.field(key)?;
        let n: usize = self.parse(v)?;
        (0..n)
            .map(|_| {
                let v = self.next()?;
                self.parse::<f64>(v)
            })
            .collect()
    }
}

fn read_book(lines: &mut Lines) -> Result<ScalarCodebook> {
    lines.exact(BOOK_MAGIC)?;
    let kind = match lines.field("kind")? {
        "uniform-phase" => CodebookKind::UniformPhase,
        "lloyd-theta" => CodebookKind::LloydTheta,
        other => return Err(lines.err(format!("unknown codebook kind `{other}`"))),
    };
    let v = lines.field("bits")?;
    let bits = lines.parse(v)?;
    let v = lines.field("theta_class")?;
    let theta_class = lines.optional(v)?;
    let v = lines.field("trained_mse")?;
    let trained_mse = lines.optional(v)?;
    let v = lines.field("converged")?;
    let converged = lines.parse(v)?;
    let levels = lines.reals("levels")?;
    let boundaries = lines.reals("boundaries")?;
    lines.exact("end")?;
    let line = lines.line;
    let book = ScalarCodebook { kind, bits, levels, boundaries, theta_class, trained_mse, converged };
    book.check_structure().map_err(|e| Error::Parse { line, msg: e.to_string() })?;
    Ok(book)
}

pub fn parse_codebook(text: &str) -> Result<ScalarCodebook> {
    read_book(&mut Lines::new(text))
}

pub fn parse_codebook_set(text: &str) -> Result<CodebookSet> {
    let mut lines = Lines::new(text);
    lines.exact(SET_MAGIC)?;
    let v = lines.field("r")?;
    let r: usize = lines.parse(v)?;
    if r < 1 {
        return Err(lines.err("r must be >= 1"));
    }
    let phase = read_book(&mut lines)?;
    let thetas = (1..r).map(|_| read_book(&mut lines)).collect::<Result<Vec<_>>>()?;
    let line = lines.line;
    CodebookSet::new(r, phase, thetas).map_err(|e| Error::Parse { line, msg: e.to_string() })
}
