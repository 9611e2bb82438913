//! Plain-text formats: whitespace-separated vectors, comma-separated
//! messages, and output sinks.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Opens `path`, or stdin for `-`.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

/// Creates `path`, or stdout when absent.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    open_input(path)?.read_to_string(&mut s)?;
    Ok(s)
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn records(input: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    input
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(l) => {
                let t = l.trim();
                (!t.is_empty() && !t.starts_with('#')).then(|| Ok((i + 1, t.to_string())))
            }
            Err(e) => Some(Err(e.into())),
        })
}

/// One real vector of length `n` per line.
pub fn read_vectors(input: impl BufRead, n: usize) -> Result<Vec<Vec<f64>>> {
    records(input)
        .map(|r| {
            let (line, text) = r?;
            let v = text
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("line {line}: not a real vector"))?;
            if v.len() != n {
                bail!("line {line}: expected {n} values, got {}", v.len());
            }
            Ok(v)
        })
        .collect()
}

/// One message per line, symbols separated by commas.
pub fn read_messages(input: impl BufRead, n: usize) -> Result<Vec<Vec<i64>>> {
    records(input)
        .map(|r| {
            let (line, text) = r?;
            let v = text
                .split(',')
                .map(|s| s.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("line {line}: not an integer message"))?;
            if v.len() != n {
                bail!("line {line}: expected {n} symbols, got {}", v.len());
            }
            Ok(v)
        })
        .collect()
}

pub fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

/// `coords… dist2`, the line format shared by `decode` and `oracle`.
pub fn point_line(point: &[i64], dist2: f64) -> String {
    format!("{} {dist2}", join(point, " "))
}

/// Comma-separated list of numbers, as used by `--aleph` and `--snr`.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| anyhow::anyhow!("bad list entry {p:?}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_skip_blank_and_comment_lines() {
        let text = "# header\n1 2 3 4\n\n  0.5 -1 2e-1 0\n";
        let v = read_vectors(text.as_bytes(), 4).unwrap();
        assert_eq!(v, vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.5, -1.0, 0.2, 0.0]]);
        assert!(read_vectors("1 2 3".as_bytes(), 4).is_err());
        assert!(read_vectors("1 x 3 4".as_bytes(), 4).is_err());
    }

    #[test]
    fn messages_are_comma_separated() {
        let v = read_messages("0,1, 2,3\n".as_bytes(), 4).unwrap();
        assert_eq!(v, vec![vec![0, 1, 2, 3]]);
        assert!(read_messages("0 1 2 3".as_bytes(), 4).is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("1000,4").unwrap(), vec![1000, 4]);
        assert!(parse_list::<usize>("1,,2").is_err());
    }
}
