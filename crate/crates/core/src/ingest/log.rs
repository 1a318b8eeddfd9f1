//! Session log CSV format.
//!
//! Header `t,BRK,GAS,RPM,SPD,SWA,SWM,FACC,LACC` (column order free), `t` in
//! seconds, one row per timestamp. An empty cell means the signal has no
//! sample at that row. Files are named `<user_id>__<session_id>.csv`.

use std::io::Write;
use std::path::Path;

use super::{SampleSeries, Session, SignalKind};
use crate::error::{Error, Result};

const SEPARATOR: &str = "__";

/// Splits `<user_id>__<session_id>.csv` into its two identifiers.
pub fn parse_session_name(path: &Path) -> Option<(String, String)> {
    let stem = path.file_stem()?.to_str()?;
    let (user, session) = stem.split_once(SEPARATOR)?;
    if user.is_empty() || session.is_empty() {
        return None;
    }
    Some((user.to_owned(), session.to_owned()))
}

pub fn session_file_name(user_id: &str, session_id: &str) -> String {
    format!("{user_id}{SEPARATOR}{session_id}.csv")
}

/// Reads one session log. Timestamps are shifted so the first row is at 0.
pub fn parse_session_log(path: &Path) -> Result<Session<f64>> {
    let (user_id, session_id) = parse_session_name(path).ok_or_else(|| Error::Parse {
        path: path.to_owned(),
        line: 0,
        message: "file name is not of the form <user_id>__<session_id>.csv".into(),
    })?;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };

    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let mut time_col = None;
    let mut signal_cols = [None; 8];
    for (i, name) in headers.iter().enumerate() {
        if name == "t" {
            time_col = Some(i);
        } else if let Some(k) = SignalKind::ALL.iter().find(|k| k.column() == name) {
            signal_cols[k.index()] = Some(i);
        } else {
            return Err(parse_err(1, format!("unexpected column `{name}`")));
        }
    }
    let time_col = time_col.ok_or_else(|| parse_err(1, "missing time column `t`".into()))?;
    let missing: Vec<String> = SignalKind::ALL
        .iter()
        .filter(|k| signal_cols[k.index()].is_none())
        .map(|k| k.column().to_owned())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema {
            path: path.to_owned(),
            missing,
        });
    }

    let mut times: Vec<Vec<f64>> = vec![Vec::new(); 8];
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); 8];
    let mut origin = None;
    let mut previous = f64::NEG_INFINITY;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let number = |cell: &str, what: &str| -> Result<f64> {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, format!("{what}: `{cell}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("{what}: `{cell}` is not finite")))
            }
        };
        let t = number(&record[time_col], "t")?;
        if t <= previous {
            return Err(Error::Ordering {
                path: path.to_owned(),
                line,
                t,
                previous,
            });
        }
        previous = t;
        let t0 = *origin.get_or_insert(t);
        for k in SignalKind::ALL {
            let cell = &record[signal_cols[k.index()].expect("checked above")];
            if cell.is_empty() {
                continue;
            }
            times[k.index()].push(t - t0);
            values[k.index()].push(number(cell, k.column())?);
        }
    }

    let signals = times
        .into_iter()
        .zip(values)
        .map(|(t, x)| SampleSeries::new(t, x))
        .collect::<Result<Vec<_>>>()?;
    Session::new(user_id, session_id, signals)
}

/// Writes a session whose signals share one time base (as the synthetic
/// generator produces) in the log format.
pub fn write_session_log(path: &Path, session: &Session<f64>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);

    let header: Vec<&str> = std::iter::once("t")
        .chain(SignalKind::ALL.iter().map(|k| k.column()))
        .collect();
    writeln!(out, "{}", header.join(",")).map_err(io)?;

    // Merge rows by timestamp so sparse signals leave empty cells.
    let mut cursors = [0usize; 8];
    loop {
        let next_t = SignalKind::ALL
            .iter()
            .filter_map(|k| session.signal(*k).times().get(cursors[k.index()]).copied())
            .fold(None, |acc: Option<f64>, t| {
                Some(acc.map_or(t, |a| a.min(t)))
            });
        let Some(t) = next_t else { break };
        let mut row = t.to_string();
        for k in SignalKind::ALL {
            let series = session.signal(k);
            let c = &mut cursors[k.index()];
            row.push(',');
            if series.times().get(*c) == Some(&t) {
                row.push_str(&series.values()[*c].to_string());
                *c += 1;
            }
        }
        writeln!(out, "{row}").map_err(io)?;
    }
    out.flush().map_err(io)
}
