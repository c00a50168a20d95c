//! Plain-text file formats: point patterns, curves, persistence diagrams,
//! envelopes.
//!
//! Patterns are CSV with header `x,y`. Lines starting with `#` are
//! comments, except `# window x_min x_max y_min y_max`, which records the
//! observation window.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pattern::{PointPattern, SummaryCurve, Window};
use crate::procedures::Envelope;
use crate::tda::{PersistenceDiagram, PersistencePair};

const WINDOW_TAG: &str = "window";

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let t = field.trim();
    match t {
        "inf" | "+inf" | "Inf" => Ok(f64::INFINITY),
        "nan" | "NaN" => Ok(f64::NAN),
        _ => t.parse().map_err(|_| Error::Parse(format!("line {line}: '{t}' is not a number"))),
    }
}

/// Formats a float so that it parses back to the same value.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v}")
    }
}

fn sidecar_window(text: &str) -> Result<Option<Window>> {
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.trim().strip_prefix('#') else { continue };
        let mut it = rest.split_whitespace();
        if it.next() != Some(WINDOW_TAG) {
            continue;
        }
        let vals = it.map(|f| parse_f64(f, i + 1)).collect::<Result<Vec<_>>>()?;
        if vals.len() != 4 {
            return Err(Error::Parse(format!("line {}: window line needs 4 numbers", i + 1)));
        }
        return Window::new(vals[0], vals[1], vals[2], vals[3]).map(Some);
    }
    Ok(None)
}

/// Reads CSV records after the header, skipping `#` comments.
fn records(text: &str, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr =
        csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(false).from_reader(text.as_bytes());
    let found = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::Parse(format!(
            "expected header '{}', found '{}'",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| Error::Parse(e.to_string()))?;
            let line = r.position().map_or(0, |p| p.line() as usize);
            Ok((line, r))
        })
        .collect()
}

/// Parses a pattern. `window` overrides the sidecar line; one of the two
/// must be present.
pub fn parse_pattern(text: &str, window: Option<Window>) -> Result<PointPattern> {
    let window = match window {
        Some(w) => w,
        None => sidecar_window(text)?
            .ok_or_else(|| Error::Config("no window given and no '# window' line in the pattern file".into()))?,
    };
    let pts = records(text, &["x", "y"])?
        .into_iter()
        .map(|(line, r)| Ok((parse_f64(&r[0], line)?, parse_f64(&r[1], line)?)))
        .collect::<Result<Vec<_>>>()?;
    PointPattern::new(pts, window)
}

pub fn read_pattern(path: impl AsRef<Path>, window: Option<Window>) -> Result<PointPattern> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_pattern(&text, window)
}

pub fn pattern_csv(p: &PointPattern) -> String {
    let w = p.window();
    let mut out = format!(
        "# {WINDOW_TAG} {} {} {} {}\nx,y\n",
        fmt_f64(w.x_min),
        fmt_f64(w.x_max),
        fmt_f64(w.y_min),
        fmt_f64(w.y_max)
    );
    for q in p.points() {
        let _ = writeln!(out, "{},{}", fmt_f64(q.x), fmt_f64(q.y));
    }
    out
}

/// Columns `r,value,defined`; undefined values are written as `nan`.
pub fn curve_csv(c: &SummaryCurve) -> String {
    let mut out = String::from("r,value,defined\n");
    for ((r, v), d) in c.grid.values().iter().zip(&c.values).zip(&c.defined) {
        let v = if *d { fmt_f64(*v) } else { "nan".into() };
        let _ = writeln!(out, "{},{},{}", fmt_f64(*r), v, u8::from(*d));
    }
    out
}

/// Parses a curve file into `(r, value, defined)` columns.
pub fn parse_curve(text: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<bool>)> {
    let mut r = Vec::new();
    let mut v = Vec::new();
    let mut d = Vec::new();
    for (line, rec) in records(text, &["r", "value", "defined"])? {
        r.push(parse_f64(&rec[0], line)?);
        v.push(parse_f64(&rec[1], line)?);
        d.push(match &rec[2] {
            "1" => true,
            "0" => false,
            other => return Err(Error::Parse(format!("line {line}: defined must be 0 or 1, got '{other}'"))),
        });
    }
    Ok((r, v, d))
}

/// Columns `dim,birth,death`; unpaired features die at `inf`.
pub fn diagram_csv(pd: &PersistenceDiagram) -> String {
    let mut out = String::from("dim,birth,death\n");
    for p in &pd.pairs {
        let _ = writeln!(out, "{},{},{}", p.dim, fmt_f64(p.birth), fmt_f64(p.death));
    }
    out
}

pub fn parse_diagram(text: &str) -> Result<PersistenceDiagram> {
    let pairs = records(text, &["dim", "birth", "death"])?
        .into_iter()
        .map(|(line, rec)| {
            let dim =
                rec[0].parse::<u8>().map_err(|_| Error::Parse(format!("line {line}: bad dimension '{}'", &rec[0])))?;
            Ok(PersistencePair { dim, birth: parse_f64(&rec[1], line)?, death: parse_f64(&rec[2], line)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PersistenceDiagram { pairs })
}

/// Columns `r,lo,hi,obs,mean`.
pub fn envelope_csv(e: &Envelope) -> String {
    let mut out = String::from("r,lo,hi,obs,mean\n");
    for j in 0..e.r.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(e.r[j]),
            fmt_f64(e.lo[j]),
            fmt_f64(e.hi[j]),
            fmt_f64(e.obs[j]),
            fmt_f64(e.mean[j])
        );
    }
    out
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::EvalGrid;
    use crate::rng::RngSeed;
    use crate::simulate::{simulate, ModelSpec};
    use crate::tda::{alpha_filtration, persistence};

    #[test]
    fn pattern_round_trip() {
        let w = Window::new(-1.0, 2.5, 0.0, 3.0).unwrap();
        let p = simulate(&ModelSpec::Binomial { n: 40 }, &w, RngSeed::new(3, 0)).unwrap();
        let text = pattern_csv(&p);
        assert!(text.starts_with("# window -1 2.5 0 3\nx,y\n"));
        let q = parse_pattern(&text, None).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn pattern_comments_and_window_flag() {
        let text = "# a comment\nx,y\n0.1,0.2\n# another\n0.5, 0.5\n";
        assert!(matches!(parse_pattern(text, None), Err(Error::Config(_))));
        let p = parse_pattern(text, Some(Window::unit())).unwrap();
        assert_eq!(p.len(), 2);
        assert!(matches!(parse_pattern("a,b\n1,2\n", Some(Window::unit())), Err(Error::Parse(_))));
        assert!(matches!(parse_pattern("x,y\n1,zz\n", Some(Window::unit())), Err(Error::Parse(_))));
        assert!(matches!(parse_pattern("x,y\n3,0.5\n", Some(Window::unit())), Err(Error::OutOfWindow { .. })));
    }

    #[test]
    fn curve_and_diagram_formats() {
        let grid = EvalGrid::new(0.0, 1.0, 3).unwrap();
        let c = SummaryCurve::with_defined("j", grid, vec![1.0, 0.25, f64::NAN], vec![true, true, false]);
        let text = curve_csv(&c);
        assert_eq!(text, "r,value,defined\n0,1,1\n0.5,0.25,1\n1,nan,0\n");
        let (r, v, d) = parse_curve(&text).unwrap();
        assert_eq!(r, vec![0.0, 0.5, 1.0]);
        assert_eq!(&v[..2], &[1.0, 0.25]);
        assert_eq!(d, vec![true, true, false]);

        let p = PointPattern::new([(0.0, 0.0), (1.0, 0.0)], Window::new(-1.0, 2.0, -1.0, 1.0).unwrap()).unwrap();
        let pd = persistence(&alpha_filtration(&p));
        let text = diagram_csv(&pd);
        assert!(text.contains("0,0,0.5\n") && text.contains("0,0,inf\n"), "{text}");
        assert_eq!(parse_diagram(&text).unwrap(), pd);
    }
}
