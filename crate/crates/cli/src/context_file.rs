//! The line-oriented context-definition file format.
//!
//! ```text
//! # comment
//! DIM 2
//! GRANGE 0 0.5
//! OBSERVABLE
//! 1, 0
//! 0, -1
//! OUTCOME plus
//! 1/2 + g, 0
//! 0, 1/2 - g
//! STATE          (optional)
//! 0.5, 0.5
//! 0.5, 0.5
//! POST           (optional)
//! 0.8, 0.4
//! 0.4, 0.2
//! ```
//!
//! Matrix sections hold one row per line with comma-separated entries.
//! OUTCOME entries are expressions in the coupling grammar; OBSERVABLE,
//! STATE and POST entries are numeric, with complex values written `a+bi`.

use ctxvals_core::gexpr::{parse, GExpr, GMatrixFn, GRange};
use ctxvals_core::matcore::CMatrix;
use ctxvals_core::measurement::{MeasurementContext, Observable, PostSelection, State};
use ctxvals_core::scenario::Scenario;
use ctxvals_core::C;
use std::fmt::Write as _;

#[derive(Debug)]
pub struct FileError {
    pub line: usize,
    pub msg: String,
}

impl std::fmt::Display for FileError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for FileError {}

fn err(line: usize, msg: impl Into<String>) -> FileError {
    FileError {
        line,
        msg: msg.into(),
    }
}

/// Parsed but not yet validated context definition.
#[derive(Debug, Clone)]
pub struct ContextFile {
    pub dim: usize,
    pub grange: GRange<f64>,
    pub observable: Vec<C<f64>>,
    pub outcomes: Vec<(String, Vec<GExpr<f64>>)>,
    pub state: Option<Vec<C<f64>>>,
    pub post: Option<Vec<C<f64>>>,
}

const DEFAULT_GRANGE_HI: f64 = 0.1;

impl ContextFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .peekable();

        let mut dim: Option<usize> = None;
        let mut grange: Option<GRange<f64>> = None;
        let mut observable: Option<Vec<C<f64>>> = None;
        let mut outcomes: Vec<(String, Vec<GExpr<f64>>)> = Vec::new();
        let mut state: Option<Vec<C<f64>>> = None;
        let mut post: Option<Vec<C<f64>>> = None;

        while let Some((ln, line)) = lines.next() {
            let mut words = line.splitn(2, char::is_whitespace);
            let keyword = words.next().unwrap();
            let rest = words.next().unwrap_or("").trim();
            match keyword {
                "DIM" => {
                    let d: usize = rest
                        .parse()
                        .map_err(|_| err(ln, format!("invalid dimension `{rest}`")))?;
                    if d == 0 {
                        return Err(err(ln, "dimension must be positive"));
                    }
                    dim = Some(d);
                }
                "GRANGE" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    if parts.len() != 2 {
                        return Err(err(ln, "GRANGE expects two numbers: lo hi"));
                    }
                    let lo: f64 = parts[0]
                        .parse()
                        .map_err(|_| err(ln, format!("invalid number `{}`", parts[0])))?;
                    let hi: f64 = parts[1]
                        .parse()
                        .map_err(|_| err(ln, format!("invalid number `{}`", parts[1])))?;
                    if !(lo >= 0.0 && hi > lo) {
                        return Err(err(ln, "GRANGE needs 0 <= lo < hi"));
                    }
                    grange = Some(GRange::new(lo, hi));
                }
                "OBSERVABLE" => {
                    let d = dim.ok_or_else(|| err(ln, "DIM must precede OBSERVABLE"))?;
                    observable = Some(read_numeric_matrix(&mut lines, d, ln)?);
                }
                "STATE" => {
                    let d = dim.ok_or_else(|| err(ln, "DIM must precede STATE"))?;
                    state = Some(read_numeric_matrix(&mut lines, d, ln)?);
                }
                "POST" => {
                    let d = dim.ok_or_else(|| err(ln, "DIM must precede POST"))?;
                    post = Some(read_numeric_matrix(&mut lines, d, ln)?);
                }
                "OUTCOME" => {
                    let d = dim.ok_or_else(|| err(ln, "DIM must precede OUTCOME"))?;
                    if rest.is_empty() {
                        return Err(err(ln, "OUTCOME needs a label"));
                    }
                    let mut entries = Vec::with_capacity(d * d);
                    for _ in 0..d {
                        let (rln, row) = lines
                            .next()
                            .ok_or_else(|| err(ln, "unexpected end of file inside OUTCOME"))?;
                        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
                        if cells.len() != d {
                            return Err(err(
                                rln,
                                format!("expected {d} comma-separated entries, got {}", cells.len()),
                            ));
                        }
                        for cell in cells {
                            entries.push(parse::<f64>(cell).map_err(|e| {
                                err(rln, format!("bad expression `{cell}`: {e}"))
                            })?);
                        }
                    }
                    outcomes.push((rest.to_string(), entries));
                }
                other => return Err(err(ln, format!("unknown section `{other}`"))),
            }
        }

        let dim = dim.ok_or_else(|| err(0, "missing DIM section"))?;
        let observable = observable.ok_or_else(|| err(0, "missing OBSERVABLE section"))?;
        if outcomes.is_empty() {
            return Err(err(0, "no OUTCOME sections"));
        }
        Ok(ContextFile {
            dim,
            grange: grange.unwrap_or_else(|| GRange::up_to(DEFAULT_GRANGE_HI)),
            observable,
            outcomes,
            state,
            post,
        })
    }

    /// Canonical rendering; parsing it back yields an identical file.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("# context definition\n");
        let _ = writeln!(out, "DIM {}", self.dim);
        let _ = writeln!(out, "GRANGE {} {}", self.grange.lo, self.grange.hi);
        out.push_str("OBSERVABLE\n");
        render_numeric_matrix(&mut out, self.dim, &self.observable);
        for (label, entries) in &self.outcomes {
            let _ = writeln!(out, "OUTCOME {label}");
            for i in 0..self.dim {
                let row: Vec<String> = (0..self.dim)
                    .map(|j| entries[i * self.dim + j].to_string())
                    .collect();
                let _ = writeln!(out, "{}", row.join(", "));
            }
        }
        if let Some(state) = &self.state {
            out.push_str("STATE\n");
            render_numeric_matrix(&mut out, self.dim, state);
        }
        if let Some(post) = &self.post {
            out.push_str("POST\n");
            render_numeric_matrix(&mut out, self.dim, post);
        }
        out
    }

    pub fn from_scenario(s: &Scenario<f64>) -> Self {
        let dim = s.context.dim();
        let outcomes = s
            .context
            .operators()
            .iter()
            .zip(s.context.labels())
            .map(|(op, label)| (label.clone(), op.entries().to_vec()))
            .collect();
        ContextFile {
            dim,
            grange: s.context.validity(),
            observable: s.observable.matrix().entries().to_vec(),
            outcomes,
            state: Some(s.state.rho().entries().to_vec()),
            post: Some(s.post.effect().entries().to_vec()),
        }
    }

    /// Builds the validated measurement objects. The observable may be
    /// replaced by a diagonal override.
    pub fn instantiate(
        &self,
        obs_override: Option<&[f64]>,
    ) -> Result<LoadedContext, ctxvals_core::Error> {
        let ops = self
            .outcomes
            .iter()
            .map(|(_, entries)| GMatrixFn::new(self.dim, entries.clone(), self.grange))
            .collect();
        let labels = self.outcomes.iter().map(|(l, _)| l.clone()).collect();
        let context = MeasurementContext::new(ops, labels)?;
        let observable = match obs_override {
            Some(diag) => {
                if diag.len() != self.dim {
                    return Err(ctxvals_core::Error::Invalid(format!(
                        "observable override has {} entries for dimension {}",
                        diag.len(),
                        self.dim
                    )));
                }
                Observable::diagonal(diag)
            }
            None => Observable::new(CMatrix::from_vec(self.dim, self.observable.clone()))?,
        };
        let state = self
            .state
            .as_ref()
            .map(|m| State::new(CMatrix::from_vec(self.dim, m.clone())))
            .transpose()?;
        let post = self
            .post
            .as_ref()
            .map(|m| PostSelection::new(CMatrix::from_vec(self.dim, m.clone())))
            .transpose()?;
        Ok(LoadedContext {
            context,
            observable,
            state,
            post,
        })
    }
}

/// Validated measurement objects from a context file.
pub struct LoadedContext {
    pub context: MeasurementContext<f64>,
    pub observable: Observable<f64>,
    pub state: Option<State<f64>>,
    pub post: Option<PostSelection<f64>>,
}

fn read_numeric_matrix<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
    dim: usize,
    section_line: usize,
) -> Result<Vec<C<f64>>, FileError> {
    let mut entries = Vec::with_capacity(dim * dim);
    for _ in 0..dim {
        let (ln, row) = lines
            .next()
            .ok_or_else(|| err(section_line, "unexpected end of file inside matrix"))?;
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != dim {
            return Err(err(
                ln,
                format!("expected {dim} comma-separated entries, got {}", cells.len()),
            ));
        }
        for cell in cells {
            entries.push(parse_complex(cell).ok_or_else(|| {
                err(ln, format!("bad numeric entry `{cell}` (want a or a+bi)"))
            })?);
        }
    }
    Ok(entries)
}

fn render_numeric_matrix(out: &mut String, dim: usize, entries: &[C<f64>]) {
    for i in 0..dim {
        let row: Vec<String> = (0..dim)
            .map(|j| render_complex(entries[i * dim + j]))
            .collect();
        let _ = writeln!(out, "{}", row.join(", "));
    }
}

fn render_complex(z: C<f64>) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Parses `a`, `a+bi`, `a-bi` or `bi`; exponents like `1e-3` are allowed in
/// either part.
fn parse_complex(s: &str) -> Option<C<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some(body) = s.strip_suffix('i') {
        // Split real and imaginary parts at the last sign that is neither
        // leading nor part of an exponent.
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k];
            if (c == b'+' || c == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re: f64 = body[..k].trim().parse().ok()?;
                let sign = if bytes[k] == b'-' { -1.0 } else { 1.0 };
                let im_text = body[k + 1..].trim();
                let im: f64 = if im_text.is_empty() {
                    1.0
                } else {
                    im_text.parse().ok()?
                };
                Some(C::new(re, sign * im))
            }
            None => {
                let im: f64 = if body.trim().is_empty() {
                    1.0
                } else {
                    body.trim().parse().ok()?
                };
                Some(C::new(0.0, im))
            }
        }
    } else {
        s.parse().ok().map(|re| C::new(re, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1.5"), Some(C::new(1.5, 0.0)));
        assert_eq!(parse_complex("-2"), Some(C::new(-2.0, 0.0)));
        assert_eq!(parse_complex("1.5+0.3i"), Some(C::new(1.5, 0.3)));
        assert_eq!(parse_complex("1.5-0.3i"), Some(C::new(1.5, -0.3)));
        assert_eq!(parse_complex("0.3i"), Some(C::new(0.0, 0.3)));
        assert_eq!(parse_complex("1e-3+2e-4i"), Some(C::new(1e-3, 2e-4)));
        assert_eq!(parse_complex("abc"), None);
        for z in [C::new(0.25, 0.0), C::new(-1.0, 0.5), C::new(0.0, -2.0)] {
            assert_eq!(parse_complex(&render_complex(z)), Some(z));
        }
    }

    #[test]
    fn round_trip_through_render() {
        let s = ctxvals_core::scenario::ce1::<f64>(1.0, -1.0);
        let file = ContextFile::from_scenario(&s);
        let text = file.render();
        let reparsed = ContextFile::parse(&text).unwrap();
        assert_eq!(reparsed.render(), text);
        let loaded = reparsed.instantiate(None).unwrap();
        assert_eq!(loaded.context.outcome_count(), 3);
        assert!(loaded.state.is_some() && loaded.post.is_some());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "DIM 2\nOBSERVABLE\n1, 0\n0, oops\n";
        let e = ContextFile::parse(bad).unwrap_err();
        assert_eq!(e.line, 4);
        let bad = "DIM 2\nOUTCOME a\n1, 0\n0, 1+\n";
        let e = ContextFile::parse(bad).unwrap_err();
        assert_eq!(e.line, 4);
        assert!(ContextFile::parse("OBSERVABLE\n1\n").is_err());
    }
}
