//! Streaming reader for WARC 1.0/1.1 files, plain or per-record gzip.

use std::io::{self, BufRead, BufReader, Read};

use flate2::read::MultiGzDecoder;
use thiserror::Error;

use crate::provenance::NameValue;

#[derive(Debug, Error)]
pub enum WarcStreamError {
    #[error("truncated WARC stream at byte {offset}: {detail}")]
    Truncated { offset: u64, detail: String },
    #[error("i/o error while reading WARC stream: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarcRecord {
    /// Position of the record in the stream, counting malformed records.
    pub index: u64,
    /// Byte offset of the version line in the (decompressed) stream.
    pub offset: u64,
    pub version: String,
    pub headers: Vec<NameValue>,
    pub block: Vec<u8>,
}

impl WarcRecord {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|h| h.name.eq_ignore_ascii_case(name))
            .map(|h| h.value.as_str())
    }

    pub fn record_type(&self) -> Option<&str> {
        self.header("WARC-Type")
    }

    pub fn target_uri(&self) -> Option<&str> {
        self.header("WARC-Target-URI")
            .map(|u| u.trim().trim_start_matches('<').trim_end_matches('>'))
    }

    pub fn date(&self) -> Option<&str> {
        self.header("WARC-Date")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WarcItem {
    Record(WarcRecord),
    /// A record whose header block could not be parsed. The reader resyncs
    /// at the next version line.
    Malformed { index: u64, offset: u64, reason: String },
}

pub struct WarcReader<R> {
    inner: R,
    pos: u64,
    index: u64,
    pending_line: Option<(u64, Vec<u8>)>,
    done: bool,
}

/// Opens a WARC stream, transparently decompressing gzip members.
pub fn open_warc<'a, R: Read + 'a>(reader: R) -> io::Result<WarcReader<Box<dyn BufRead + 'a>>> {
    let mut buffered = BufReader::with_capacity(1 << 16, reader);
    let is_gzip = buffered.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    let inner: Box<dyn BufRead + 'a> = if is_gzip {
        Box::new(BufReader::with_capacity(
            1 << 16,
            MultiGzDecoder::new(buffered),
        ))
    } else {
        Box::new(buffered)
    };
    Ok(WarcReader::new(inner))
}

impl<R: BufRead> WarcReader<R> {
    pub fn new(inner: R) -> Self {
        WarcReader {
            inner,
            pos: 0,
            index: 0,
            pending_line: None,
            done: false,
        }
    }

    /// Reads one line including its terminator. Empty vec means EOF.
    fn read_line(&mut self) -> io::Result<(u64, Vec<u8>)> {
        if let Some(line) = self.pending_line.take() {
            return Ok(line);
        }
        let start = self.pos;
        let mut line = Vec::new();
        let n = self.inner.read_until(b'\n', &mut line)?;
        self.pos += n as u64;
        Ok((start, line))
    }

    fn read_exact_counted(&mut self, len: usize) -> io::Result<Vec<u8>> {
        let mut buf = Vec::with_capacity(len.min(1 << 24));
        let n = (&mut self.inner).take(len as u64).read_to_end(&mut buf)?;
        self.pos += n as u64;
        Ok(buf)
    }

    fn resync(&mut self) -> io::Result<()> {
        loop {
            let (start, line) = self.read_line()?;
            if line.is_empty() {
                return Ok(());
            }
            if line.starts_with(b"WARC/1.") {
                self.pending_line = Some((start, line));
                return Ok(());
            }
        }
    }

    fn truncated(&mut self, detail: &str) -> Option<Result<WarcItem, WarcStreamError>> {
        self.done = true;
        Some(Err(WarcStreamError::Truncated {
            offset: self.pos,
            detail: detail.to_string(),
        }))
    }

    fn next_item(&mut self) -> Option<Result<WarcItem, WarcStreamError>> {
        // Skip blank separator lines.
        let (offset, version_line) = loop {
            match self.read_line() {
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
                Ok((_, line)) if line.is_empty() => return None,
                Ok((_, line)) if trim_eol(&line).is_empty() => continue,
                Ok(found) => break found,
            }
        };
        let index = self.index;
        self.index += 1;

        let version = trim_eol(&version_line);
        if !version.starts_with(b"WARC/") {
            if let Err(e) = self.resync() {
                self.done = true;
                return Some(Err(e.into()));
            }
            return Some(Ok(WarcItem::Malformed {
                index,
                offset,
                reason: "missing WARC version line".into(),
            }));
        }
        let version = String::from_utf8_lossy(version).into_owned();

        let mut headers: Vec<NameValue> = Vec::new();
        let mut bad_header = None;
        loop {
            let (_, line) = match self.read_line() {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            if line.is_empty() {
                return self.truncated("end of stream inside record header");
            }
            let content = trim_eol(&line);
            if content.is_empty() {
                break;
            }
            if matches!(content[0], b' ' | b'\t') {
                if let Some(last) = headers.last_mut() {
                    last.value.push(' ');
                    last.value.push_str(latin1(content).trim());
                    continue;
                }
            }
            match content.iter().position(|&b| b == b':') {
                Some(colon) => headers.push(NameValue::new(
                    latin1(&content[..colon]).trim(),
                    latin1(&content[colon + 1..]).trim(),
                )),
                None => bad_header = Some(latin1(content)),
            }
        }

        let length = headers
            .iter()
            .find(|h| h.name.eq_ignore_ascii_case("Content-Length"))
            .and_then(|h| h.value.trim().parse::<usize>().ok());
        let reason = match (&bad_header, length) {
            (Some(line), _) => Some(format!("unparseable header line `{line}`")),
            (None, None) => Some("missing or invalid Content-Length".to_string()),
            _ => None,
        };
        if let Some(reason) = reason {
            if let Err(e) = self.resync() {
                self.done = true;
                return Some(Err(e.into()));
            }
            return Some(Ok(WarcItem::Malformed {
                index,
                offset,
                reason,
            }));
        }
        let length = length.unwrap_or_default();
        let block = match self.read_exact_counted(length) {
            Ok(b) => b,
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
        };
        if block.len() < length {
            return self.truncated("end of stream inside record block");
        }
        Some(Ok(WarcItem::Record(WarcRecord {
            index,
            offset,
            version,
            headers,
            block,
        })))
    }
}

impl<R: BufRead> Iterator for WarcReader<R> {
    type Item = Result<WarcItem, WarcStreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.next_item();
        if item.is_none() {
            self.done = true;
        }
        item
    }
}

fn trim_eol(line: &[u8]) -> &[u8] {
    let line = line.strip_suffix(b"\n").unwrap_or(line);
    line.strip_suffix(b"\r").unwrap_or(line)
}

/// Header bytes are mostly ASCII; anything else is mapped byte-for-byte so
/// the captured value stays lossless.
pub(crate) fn latin1(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.to_string(),
        Err(_) => bytes.iter().map(|&b| b as char).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Cursor, Write};

    fn record(kind: &str, body: &str) -> String {
        format!(
            "WARC/1.1\r\nWARC-Type: {kind}\r\nWARC-Target-URI: https://example.org/\r\n\
             WARC-Date: 2024-01-01T00:00:00Z\r\nContent-Length: {}\r\n\r\n{body}\r\n\r\n",
            body.len()
        )
    }

    fn items(bytes: Vec<u8>) -> Vec<Result<WarcItem, WarcStreamError>> {
        open_warc(Cursor::new(bytes)).unwrap().collect()
    }

    #[test]
    fn reads_plain_records() {
        let data = format!("{}{}", record("warcinfo", "a: b"), record("response", "hello"));
        let out = items(data.into_bytes());
        assert_eq!(out.len(), 2);
        let Ok(WarcItem::Record(r)) = &out[1] else { panic!() };
        assert_eq!(r.record_type(), Some("response"));
        assert_eq!(r.block, b"hello");
        assert_eq!(r.index, 1);
        assert_eq!(r.version, "WARC/1.1");
    }

    #[test]
    fn reads_per_record_gzip() {
        let mut bytes = Vec::new();
        for body in ["one", "two", "three"] {
            let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::fast());
            enc.write_all(record("response", body).as_bytes()).unwrap();
            bytes.extend(enc.finish().unwrap());
        }
        let out = items(bytes);
        let bodies: Vec<_> = out
            .iter()
            .map(|i| match i {
                Ok(WarcItem::Record(r)) => String::from_utf8(r.block.clone()).unwrap(),
                other => panic!("{other:?}"),
            })
            .collect();
        assert_eq!(bodies, ["one", "two", "three"]);
    }

    #[test]
    fn empty_stream_has_no_records() {
        assert!(items(Vec::new()).is_empty());
    }

    #[test]
    fn truncated_block_errors_after_complete_records() {
        let mut data = record("response", "complete");
        let partial = record("response", "this body is cut short");
        data.push_str(&partial[..partial.len() - 12]);
        let out = items(data.into_bytes());
        assert_eq!(out.len(), 2);
        assert!(matches!(out[0], Ok(WarcItem::Record(_))));
        assert!(matches!(out[1], Err(WarcStreamError::Truncated { .. })));
    }

    #[test]
    fn malformed_record_is_skipped_and_stream_continues() {
        let bad = "WARC/1.0\r\nWARC-Type: response\r\nContent-Length: nope\r\n\r\ngarbage\r\n\r\n";
        let data = format!("{bad}{}", record("response", "after"));
        let out = items(data.into_bytes());
        assert_eq!(out.len(), 2);
        assert!(matches!(out[0], Ok(WarcItem::Malformed { index: 0, .. })));
        let Ok(WarcItem::Record(r)) = &out[1] else { panic!() };
        assert_eq!(r.block, b"after");
        assert_eq!(r.index, 1);
    }
}
