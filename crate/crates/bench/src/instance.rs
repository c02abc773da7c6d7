//! Line-oriented instance files.
//!
//! ```text
//! ses <n> <d>
//! <d coordinates> <radius>      (n lines)
//!
//! svm <n1> <n2> <d>
//! <d coordinates>               (n1 P rows, then n2 Q rows)
//! ```
//!
//! Lines starting with `#` are comments. Floats are written with 17
//! significant digits so a file parses back to the same bits.

use std::fmt::Write as _;

use symcone_core::ses::SesInstance;
use symcone_core::svm::SvmInstance;

use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Ses(SesInstance),
    Svm(SvmInstance),
}

impl Instance {
    pub fn problem(&self) -> Problem {
        match self {
            Instance::Ses(_) => Problem::Ses,
            Instance::Svm(_) => Problem::Svm,
        }
    }

    /// Total number of points.
    pub fn len(&self) -> usize {
        match self {
            Instance::Ses(s) => s.len(),
            Instance::Svm(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Instance::Ses(s) => s.dim(),
            Instance::Svm(s) => s.dim(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Ses,
    Svm,
}

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        write!(out, "{v:.16e}").unwrap();
    }
    out.push('\n');
}

/// Serializes `inst`, writing each entry of `comments` as a `#` line first.
pub fn serialize(inst: &Instance, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    match inst {
        Instance::Ses(s) => {
            writeln!(out, "ses {} {}", s.len(), s.dim()).unwrap();
            for i in 0..s.len() {
                push_row(&mut out, s.center(i).iter().copied().chain([s.radius(i)]));
            }
        }
        Instance::Svm(s) => {
            writeln!(out, "svm {} {} {}", s.n1(), s.n2(), s.dim()).unwrap();
            for i in 0..s.n1() {
                push_row(&mut out, s.p_point(i).iter().copied());
            }
            for j in 0..s.n2() {
                push_row(&mut out, s.q_point(j).iter().copied());
            }
        }
    }
    out
}

fn parse_error(line: usize, msg: impl Into<String>) -> BenchError {
    BenchError::Parse { line, msg: msg.into() }
}

fn parse_count(tok: Option<&str>, line: usize, what: &str) -> Result<usize, BenchError> {
    tok.ok_or_else(|| parse_error(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_error(line, format!("bad {what}")))
}

pub fn parse(text: &str) -> Result<Instance, BenchError> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| parse_error(0, "empty file"))?;
    let mut tok = header.split_whitespace();
    let kind = tok.next().unwrap_or_default();
    let (rows, width) = match kind {
        "ses" => {
            let n = parse_count(tok.next(), hl, "n")?;
            let d = parse_count(tok.next(), hl, "d")?;
            (vec![n], d + 1)
        }
        "svm" => {
            let n1 = parse_count(tok.next(), hl, "n1")?;
            let n2 = parse_count(tok.next(), hl, "n2")?;
            let d = parse_count(tok.next(), hl, "d")?;
            (vec![n1, n2], d)
        }
        other => return Err(parse_error(hl, format!("unknown problem `{other}`"))),
    };
    if tok.next().is_some() {
        return Err(parse_error(hl, "trailing tokens in header"));
    }
    let last = text.lines().count();
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    for &count in &rows {
        let mut block = Vec::with_capacity(count * width);
        for _ in 0..count {
            let (ln, row) = lines.next().ok_or_else(|| parse_error(last, "unexpected end of file"))?;
            let before = block.len();
            for t in row.split_whitespace() {
                let v: f64 = t.parse().map_err(|_| parse_error(ln, format!("bad number `{t}`")))?;
                block.push(v);
            }
            if block.len() - before != width {
                return Err(parse_error(ln, format!("expected {width} numbers, got {}", block.len() - before)));
            }
        }
        blocks.push(block);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_error(ln, "trailing data"));
    }
    let invalid = |e: &dyn std::fmt::Display| BenchError::InvalidInstance(e.to_string());
    if kind == "ses" {
        let d = width - 1;
        let block = &blocks[0];
        let mut centers = Vec::with_capacity(rows[0] * d);
        let mut radii = Vec::with_capacity(rows[0]);
        for row in block.chunks(width) {
            centers.extend_from_slice(&row[..d]);
            radii.push(row[d]);
        }
        SesInstance::new(d, centers, radii).map(Instance::Ses).map_err(|e| invalid(&e))
    } else {
        let q = blocks.pop().unwrap();
        let p = blocks.pop().unwrap();
        SvmInstance::new(width, p, q).map(Instance::Svm).map_err(|e| invalid(&e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_small() {
        let ses = Instance::Ses(SesInstance::new(2, vec![0.1, -2.0, 3.0, 1e-300], vec![0.0, 0.5]).unwrap());
        let text = serialize(&ses, &["note".into()]);
        assert!(text.starts_with("# note\nses 2 2\n"));
        assert_eq!(parse(&text).unwrap(), ses);
        let svm = Instance::Svm(SvmInstance::new(1, vec![1.0 / 3.0], vec![-2.0, 7.0]).unwrap());
        assert_eq!(parse(&serialize(&svm, &[])).unwrap(), svm);
    }

    #[test]
    fn rejects_malformed() {
        for text in ["", "foo 1 2", "ses 2 1\n0 0\n", "ses 2 1\n0 0\n1 x\n", "ses 1 1\n0 0\n", "svm 1 1 2\n0 0\n1\n"] {
            assert!(parse(text).is_err(), "{text:?}");
        }
        assert!(matches!(parse("ses 2 1\n0 0\n1 -1\n"), Err(BenchError::InvalidInstance(_))));
        assert!(matches!(parse("ses 2 1\n0 0\n1 0\n2 0\n"), Err(BenchError::Parse { line: 4, .. })));
    }
}
