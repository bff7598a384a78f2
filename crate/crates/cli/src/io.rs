use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use geogrid_core::wkt::{parse_wkt, WktGeometry};

use crate::{CliError, RunConfig, VERSION};

pub fn read_text(path: &str) -> Result<String, CliError> {
    let mut s = String::new();
    if path == "-" {
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::runtime(e.to_string()).at("stdin", None))?;
    } else {
        s = std::fs::read_to_string(path).map_err(|e| CliError::runtime(e.to_string()).at(path, None))?;
    }
    Ok(s)
}

pub fn open(path: &str) -> Result<Box<dyn BufRead>, CliError> {
    if path == "-" {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let f = File::open(path).map_err(|e| CliError::runtime(e.to_string()).at(path, None))?;
        Ok(Box::new(BufReader::new(f)))
    }
}

pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::runtime(e.to_string()).at(&p.display().to_string(), None))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_err(e: io::Error) -> CliError {
    let mut err = CliError::runtime(format!("write failed: {e}"));
    if e.kind() == io::ErrorKind::BrokenPipe {
        err.kind = crate::ErrorKind::Closed;
    }
    err
}

/// Comment line naming the producing version and configuration; valid in
/// both the TSV formats and N-Triples.
pub fn header(config: &RunConfig) -> String {
    format!("# geogrid {VERSION} {}", config.echo())
}

/// `id<TAB>WKT` records; a line without a tab is a bare WKT whose id is
/// `f<line number>`.
pub fn read_features(path: &str) -> Result<Vec<(String, WktGeometry)>, CliError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, wkt) = match line.split_once('\t') {
            Some((id, wkt)) => (id.to_string(), wkt),
            None => (format!("f{}", i + 1), line),
        };
        let g = parse_wkt(wkt).map_err(|e| CliError::runtime(e.to_string()).at(path, Some(i + 1)))?;
        out.push((id, g));
    }
    Ok(out)
}
