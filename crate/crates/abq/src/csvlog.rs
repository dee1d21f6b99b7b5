//! `train.csv`: one row per training episode.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! `read(write(rows)) == rows` bit for bit and identical runs produce
//! identical files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use abq_core::agent::EpisodeRecord;

use crate::error::{HarnessError, IoContext, Result};

pub const HEADER: [&str; 5] = ["episode", "steps", "cumulative_reward", "epsilon", "mean_loss"];

pub fn write_records<W: Write>(out: W, records: &[EpisodeRecord]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.episode.to_string(),
            r.steps.to_string(),
            r.cumulative_reward.to_string(),
            r.epsilon.to_string(),
            r.mean_loss.to_string(),
        ])?;
    }
    w.flush()
}

pub fn save(path: &Path, records: &[EpisodeRecord]) -> Result<()> {
    let file = File::create(path).at(path)?;
    write_records(BufWriter::new(file), records).at(path)
}

/// Parses a train.csv. `path` only labels errors.
pub fn read_records<R: Read>(input: R, path: &Path) -> Result<Vec<EpisodeRecord>> {
    let parse_err = |line: u64, message: String| HarnessError::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut rows = rdr.records();

    match rows.next() {
        None => return Err(parse_err(1, "missing header".into())),
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        Some(Ok(h)) => {
            if h.iter().ne(HEADER.iter().copied()) {
                return Err(parse_err(
                    1,
                    format!("expected header `{}`, found `{}`", HEADER.join(","), h.iter().collect::<Vec<_>>().join(",")),
                ));
            }
        }
    }

    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != HEADER.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", HEADER.len(), row.len())));
        }
        let int = |i: usize| {
            row[i]
                .parse::<usize>()
                .map_err(|e| parse_err(line, format!("{}: `{}`: {e}", HEADER[i], &row[i])))
        };
        let float = |i: usize| {
            row[i]
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("{}: `{}`: {e}", HEADER[i], &row[i])))
        };
        out.push(EpisodeRecord {
            episode: int(0)?,
            steps: int(1)?,
            cumulative_reward: float(2)?,
            epsilon: float(3)?,
            mean_loss: float(4)?,
        });
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let file = File::open(path).at(path)?;
    read_records(std::io::BufReader::new(file), path)
}
