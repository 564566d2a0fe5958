//! Reading key/value records from CSV, TSV or raw byte lines.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Tsv,
    /// Raw bytes per line; the value follows the last TAB.
    BinaryLines,
}

impl Format {
    /// Guess from the file extension; CSV unless `.tsv`, `.bin` or `.lines`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => Format::Tsv,
            Some("bin" | "lines") => Format::BinaryLines,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("line {line}: duplicate key (first seen on line {first})")]
    DuplicateKey { line: u64, first: u64 },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// What the value column must contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Values {
    /// Unsigned integers below `2^r`.
    Bits(u32),
    /// Keys only; any value column is ignored and read as 0.
    Ignored,
}

pub type Records = Vec<(Vec<u8>, u64)>;

fn parse_value(field: Option<&[u8]>, values: Values, line: u64) -> Result<u64, IngestError> {
    let r = match values {
        Values::Ignored => return Ok(0),
        Values::Bits(r) => r,
    };
    let err = |msg: String| IngestError::Parse { line, msg };
    let raw = field.ok_or_else(|| err("missing value".into()))?;
    let text = std::str::from_utf8(raw).map_err(|_| err("value is not UTF-8".into()))?.trim();
    let v: u64 = text.parse().map_err(|_| err(format!("bad value {text:?}")))?;
    if r < 64 && v >> r != 0 {
        return Err(err(format!("value {v} does not fit in {r} bits")));
    }
    Ok(v)
}

fn check_duplicates(records: &[(Vec<u8>, u64)], lines: &[u64]) -> Result<(), IngestError> {
    let mut seen: HashMap<&[u8], u64> = HashMap::with_capacity(records.len());
    for ((key, _), &line) in records.iter().zip(lines) {
        if let Some(&first) = seen.get(key.as_slice()) {
            return Err(IngestError::DuplicateKey { line, first });
        }
        seen.insert(key, line);
    }
    Ok(())
}

/// Parses records from `reader`.
pub fn ingest_reader<R: Read>(reader: R, format: Format, values: Values) -> Result<Records, IngestError> {
    let mut records = Vec::new();
    let mut lines = Vec::new();
    match format {
        Format::Csv | Format::Tsv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .delimiter(if format == Format::Csv { b',' } else { b'\t' })
                .from_reader(reader);
            let mut rec = csv::ByteRecord::new();
            loop {
                let line = rdr.position().line();
                match rdr.read_byte_record(&mut rec) {
                    Ok(false) => break,
                    Ok(true) => {}
                    Err(e) => {
                        if let csv::ErrorKind::Io(_) = e.kind() {
                            let csv::ErrorKind::Io(io) = e.into_kind() else { unreachable!() };
                            return Err(IngestError::Io(io));
                        }
                        return Err(IngestError::Parse { line, msg: e.to_string() });
                    }
                }
                if rec.len() > 2 {
                    return Err(IngestError::Parse {
                        line,
                        msg: format!("expected key and value, found {} fields", rec.len()),
                    });
                }
                let value = parse_value(rec.get(1), values, line)?;
                records.push((rec[0].to_vec(), value));
                lines.push(line);
            }
        }
        Format::BinaryLines => {
            let mut data = Vec::new();
            let mut reader = reader;
            reader.read_to_end(&mut data)?;
            let body = data.strip_suffix(b"\n").unwrap_or(&data);
            if !data.is_empty() {
                for (i, raw) in body.split(|&b| b == b'\n').enumerate() {
                    let line = i as u64 + 1;
                    let (key, value) = match (values, raw.iter().rposition(|&b| b == b'\t')) {
                        (Values::Bits(_), Some(tab)) => (&raw[..tab], Some(&raw[tab + 1..])),
                        (Values::Bits(_), None) => (raw, None),
                        (Values::Ignored, _) => (raw, None),
                    };
                    records.push((key.to_vec(), parse_value(value, values, line)?));
                    lines.push(line);
                }
            }
        }
    }
    check_duplicates(&records, &lines)?;
    Ok(records)
}

pub fn ingest(path: &Path, format: Format, values: Values) -> Result<Records, IngestError> {
    let file = std::fs::File::open(path)?;
    ingest_reader(std::io::BufReader::new(file), format, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input() {
        for f in [Format::Csv, Format::Tsv, Format::BinaryLines] {
            assert!(ingest_reader(&b""[..], f, Values::Bits(4)).unwrap().is_empty());
        }
    }

    #[test]
    fn csv_pairs() {
        let got = ingest_reader(&b"a,3\nb,7"[..], Format::Csv, Values::Bits(4)).unwrap();
        assert_eq!(got, vec![(b"a".to_vec(), 3), (b"b".to_vec(), 7)]);
    }

    #[test]
    fn value_out_of_range() {
        let err = ingest_reader(&b"a,16\n"[..], Format::Csv, Values::Bits(4)).unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 1, .. }), "{err}");
        assert!(ingest_reader(&b"a,x\n"[..], Format::Csv, Values::Bits(4)).is_err());
        assert!(ingest_reader(&b"a\n"[..], Format::Csv, Values::Bits(4)).is_err());
    }

    #[test]
    fn duplicate_line_numbers() {
        let err = ingest_reader(&b"a,1\nb,2\na,3\n"[..], Format::Csv, Values::Bits(4)).unwrap_err();
        assert!(matches!(err, IngestError::DuplicateKey { line: 3, first: 1 }), "{err}");
    }

    #[test]
    fn tsv_and_binary_lines() {
        let got = ingest_reader(&b"x y\t5\n"[..], Format::Tsv, Values::Bits(8)).unwrap();
        assert_eq!(got, vec![(b"x y".to_vec(), 5)]);
        let got = ingest_reader(&b"a\tb\xff\t9\n\t1\n"[..], Format::BinaryLines, Values::Bits(8)).unwrap();
        assert_eq!(got, vec![(b"a\tb\xff".to_vec(), 9), (Vec::new(), 1)]);
    }

    #[test]
    fn keys_only() {
        let got = ingest_reader(&b"a\nb,99\n"[..], Format::Csv, Values::Ignored).unwrap();
        assert_eq!(got, vec![(b"a".to_vec(), 0), (b"b".to_vec(), 0)]);
        let got = ingest_reader(&b"a\tb\n"[..], Format::BinaryLines, Values::Ignored).unwrap();
        assert_eq!(got, vec![(b"a\tb".to_vec(), 0)]);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::from_path(Path::new("x.tsv")), Format::Tsv);
        assert_eq!(Format::from_path(Path::new("x.lines")), Format::BinaryLines);
        assert_eq!(Format::from_path(Path::new("x")), Format::Csv);
    }
}
