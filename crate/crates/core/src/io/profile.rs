//! Named initial and target states, and node-value files.
//!
//! Profile grammar (whitespace around tokens is ignored):
//!
//! ```text
//! zero | sine1 | sine(k, amp) | bump(center, width, amp) | file:<path>
//! ```
//!
//! All named profiles have zero velocity. A node file holds one
//! `position,velocity` row per interior node, with an optional header row and
//! `#` comments.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::wave::{DiscreteSetup, StateSlice};

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    /// `amp sin(k pi x)`
    Sine { k: u32, amp: f64 },
    /// `amp cos^2(pi (x - center) / (2 width))` on `|x - center| < width`.
    Bump { center: f64, width: f64, amp: f64 },
    /// Node-value file, relative paths taken from the config directory.
    File(PathBuf),
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Zero => write!(f, "zero"),
            Profile::Sine { k: 1, amp } if *amp == 1.0 => write!(f, "sine1"),
            Profile::Sine { k, amp } => write!(f, "sine({k}, {amp:?})"),
            Profile::Bump { center, width, amp } => {
                write!(f, "bump({center:?}, {width:?}, {amp:?})")
            }
            Profile::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

fn err(col: usize, message: impl Into<String>) -> Error {
    Error::parse(format!("column {}", col + 1), message)
}

/// Parses the argument list of `name(...)` into exactly `n` finite numbers.
fn arguments(text: &str, open: usize, n: usize) -> Result<Vec<f64>> {
    let inner = &text[open + 1..];
    let Some(close) = inner.rfind(')') else {
        return Err(err(text.len(), "missing `)`"));
    };
    if !inner[close + 1..].trim().is_empty() {
        return Err(err(open + 2 + close, "trailing characters after `)`"));
    }
    let mut out = Vec::with_capacity(n);
    let mut col = open + 1;
    for tok in inner[..close].split(',') {
        let v: f64 = tok
            .trim()
            .parse()
            .map_err(|_| err(col, format!("`{}` is not a number", tok.trim())))?;
        if !v.is_finite() {
            return Err(err(col, "arguments must be finite"));
        }
        out.push(v);
        col += tok.len() + 1;
    }
    if out.len() != n {
        return Err(err(open, format!("expected {n} arguments, got {}", out.len())));
    }
    Ok(out)
}

pub fn parse_profile(text: &str) -> Result<Profile> {
    let s = text.trim();
    if let Some(path) = s.strip_prefix("file:") {
        let path = path.trim();
        if path.is_empty() {
            return Err(err(5, "empty file path"));
        }
        return Ok(Profile::File(PathBuf::from(path)));
    }
    let (name, open) = match s.find('(') {
        Some(i) => (s[..i].trim(), Some(i)),
        None => (s, None),
    };
    match (name, open) {
        ("zero", None) => Ok(Profile::Zero),
        ("sine1", None) => Ok(Profile::Sine { k: 1, amp: 1.0 }),
        ("sine", Some(i)) => {
            let a = arguments(s, i, 2)?;
            if a[0].fract() != 0.0 || !(1.0..=1e6).contains(&a[0]) {
                return Err(err(i + 1, "mode number must be a positive integer"));
            }
            Ok(Profile::Sine {
                k: a[0] as u32,
                amp: a[1],
            })
        }
        ("bump", Some(i)) => {
            let a = arguments(s, i, 3)?;
            if !(a[1] > 0.0) {
                return Err(err(i + 1, "bump width must be positive"));
            }
            Ok(Profile::Bump {
                center: a[0],
                width: a[1],
                amp: a[2],
            })
        }
        _ => Err(err(
            0,
            format!("unknown profile `{s}`; expected zero, sine1, sine(k,amp), bump(c,w,amp) or file:<path>"),
        )),
    }
}

impl Profile {
    /// Samples the profile on the interior nodes of `setup`.
    pub fn resolve(&self, setup: &DiscreteSetup, base_dir: &Path) -> Result<StateSlice> {
        use std::f64::consts::PI;
        Ok(match self {
            Profile::Zero => StateSlice::zeros(setup.nx()),
            Profile::Sine { k, amp } => {
                let k = *k as f64;
                StateSlice::from_fns(setup, |x| amp * (k * PI * x).sin(), |_| 0.0)
            }
            Profile::Bump { center, width, amp } => StateSlice::from_fns(
                setup,
                |x| {
                    let r = (x - center) / width;
                    if r.abs() < 1.0 {
                        amp * (0.5 * PI * r).cos().powi(2)
                    } else {
                        0.0
                    }
                },
                |_| 0.0,
            ),
            Profile::File(path) => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    Error::validation("data", format!("cannot read {}: {e}", full.display()))
                })?;
                parse_node_file_str(&text, setup.nx()).map_err(|e| match e {
                    Error::Parse { location, message } => Error::Parse {
                        location: format!("{}:{location}", full.display()),
                        message,
                    },
                    other => other,
                })?
            }
        })
    }
}

/// Reads `nx` rows of `position,velocity`.
pub fn parse_node_file_str(text: &str, nx: usize) -> Result<StateSlice> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut position = Vec::with_capacity(nx);
    let mut velocity = Vec::with_capacity(nx);
    let mut first = true;
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(format!("line {line}"), e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let at = || format!("line {line}");
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        if row.len() != 2 {
            return Err(Error::parse(at(), format!("expected 2 fields, found {}", row.len())));
        }
        let parsed: Vec<Option<f64>> = row.iter().map(|f| f.parse().ok()).collect();
        if first && parsed.iter().all(Option::is_none) {
            first = false;
            continue;
        }
        first = false;
        let mut vals = [0.0; 2];
        for (j, (v, raw)) in parsed.iter().zip(row.iter()).enumerate() {
            match v {
                Some(v) if v.is_finite() => vals[j] = *v,
                _ => return Err(Error::parse(at(), format!("`{raw}` is not a finite number"))),
            }
        }
        if position.len() == nx {
            return Err(Error::parse(at(), format!("more than {nx} node rows")));
        }
        position.push(vals[0]);
        velocity.push(vals[1]);
    }
    if position.len() != nx {
        return Err(Error::parse(
            "end of file",
            format!("expected {nx} node rows, found {}", position.len()),
        ));
    }
    Ok(StateSlice { position, velocity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::Interval;
    use proptest::prelude::*;

    fn setup() -> DiscreteSetup {
        DiscreteSetup::new(7, 2.5, Interval::new(0.2, 0.8).unwrap(), 0.9).unwrap()
    }

    #[test]
    fn named_profiles() {
        assert_eq!(parse_profile(" zero ").unwrap(), Profile::Zero);
        assert_eq!(parse_profile("sine1").unwrap(), Profile::Sine { k: 1, amp: 1.0 });
        assert_eq!(
            parse_profile("sine(2, -3.5)").unwrap(),
            Profile::Sine { k: 2, amp: -3.5 }
        );
        assert_eq!(
            parse_profile("bump(0.5,0.1,2)").unwrap(),
            Profile::Bump {
                center: 0.5,
                width: 0.1,
                amp: 2.0
            }
        );
        assert_eq!(
            parse_profile("file: data/u0.csv").unwrap(),
            Profile::File("data/u0.csv".into())
        );
    }

    #[test]
    fn malformed_profiles() {
        for bad in ["", "sine", "sine(1)", "sine(0.5,1)", "bump(0.5,0,1)", "bump(1,2,3", "sine(1,2)x", "gauss(1)", "sine(1,nan)", "file:"] {
            assert!(matches!(parse_profile(bad), Err(Error::Parse { .. })), "{bad}");
        }
    }

    #[test]
    fn bump_support() {
        let s = setup();
        let u = Profile::Bump {
            center: 0.5,
            width: 0.2,
            amp: 1.0,
        }
        .resolve(&s, Path::new("."))
        .unwrap();
        assert_eq!(u.position[3], 1.0);
        assert_eq!(u.position[0], 0.0);
        assert!(u.velocity.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn node_file() {
        let text = "# initial state\nposition,velocity\n1,0\n2, 0.5\n\n3,0\n4,0\n5,0\n6,0\n7,-1\n";
        let u = parse_node_file_str(text, 7).unwrap();
        assert_eq!(u.position, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(u.velocity[1], 0.5);
        assert_eq!(u.velocity[6], -1.0);
    }

    #[test]
    fn node_file_errors_carry_lines() {
        let short = "1,0\n2,0\n";
        let e = parse_node_file_str(short, 3).unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let bad = "1,0\nx,0\n3,0\n";
        match parse_node_file_str(bad, 3).unwrap_err() {
            Error::Parse { location, .. } => assert_eq!(location, "line 2"),
            e => panic!("{e}"),
        }
        assert!(parse_node_file_str("1,0,0\n", 1).is_err());
        assert!(parse_node_file_str("1,0\n2,0\n", 1).is_err());
    }

    proptest! {
        #[test]
        fn display_round_trips(k in 1u32..50, amp in -1e3f64..1e3, c in 0.0f64..1.0, w in 1e-3f64..1.0) {
            for p in [Profile::Sine { k, amp }, Profile::Bump { center: c, width: w, amp }, Profile::Zero] {
                prop_assert_eq!(parse_profile(&p.to_string()).unwrap(), p);
            }
        }

        #[test]
        fn parser_never_panics(s in "\\PC{0,40}") {
            let _ = parse_profile(&s);
            let _ = parse_node_file_str(&s, 3);
        }
    }
}
