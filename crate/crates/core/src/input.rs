//! Parsers for the textual inputs accepted by the command-line tool.

use crate::error::{Error, Result};

/// Parses a single-column CSV of nonnegative integer counts with header `y`.
///
/// Blank lines and surrounding whitespace are ignored; a trailing `\r` is
/// accepted. A header with no data rows is an error, as is an empty input.
pub fn parse_counts(text: &str) -> Result<Vec<u64>> {
    let mut lines = text.lines().map(str::trim).enumerate().filter(|(_, l)| !l.is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::Parse("input is empty".into()));
    };
    if header != "y" {
        return Err(Error::Parse(format!("expected header `y`, found `{header}`")));
    }
    let values = lines
        .map(|(i, line)| {
            line.parse::<u64>()
                .map_err(|_| Error::Parse(format!("line {}: `{line}` is not a nonnegative integer", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::Parse("input has a header but no observations".into()));
    }
    Ok(values)
}

/// Parses a comma-separated list of finite reals such as `0.3,0.4, 0.5`.
pub fn parse_real_list(text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Err(Error::Parse("empty list".into()));
    }
    text.split(',')
        .map(|item| {
            let item = item.trim();
            match item.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse(format!("`{item}` is not a finite number"))),
            }
        })
        .collect()
}
