//! Minimal parser for HTTP responses stored in WARC response blocks.

use crate::provenance::NameValue;

use super::warc::latin1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<NameValue>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|h| h.name.eq_ignore_ascii_case(name))
            .map(|h| h.value.as_str())
    }

    pub fn content_type(&self) -> Option<&str> {
        self.header("Content-Type")
    }

    pub fn is_html(&self) -> bool {
        self.content_type().is_some_and(|ct| {
            let mime = ct.split(';').next().unwrap_or_default().trim();
            mime.eq_ignore_ascii_case("text/html") || mime.eq_ignore_ascii_case("application/xhtml+xml")
        })
    }

    /// `charset` parameter of the Content-Type header, if any.
    pub fn charset(&self) -> Option<&str> {
        let ct = self.content_type()?;
        ct.split(';').skip(1).find_map(|param| {
            let (k, v) = param.split_once('=')?;
            k.trim()
                .eq_ignore_ascii_case("charset")
                .then(|| v.trim().trim_matches('"').trim_matches('\''))
        })
    }
}

pub fn parse_http_response(block: &[u8]) -> Option<HttpResponse> {
    let head_end = find(block, b"\r\n\r\n")
        .map(|i| (i, i + 4))
        .or_else(|| find(block, b"\n\n").map(|i| (i, i + 2)))?;
    let head = &block[..head_end.0];
    let mut lines = head.split(|&b| b == b'\n').map(|l| l.strip_suffix(b"\r").unwrap_or(l));
    let status_line = lines.next()?;
    if !status_line.starts_with(b"HTTP/") {
        return None;
    }
    let status = std::str::from_utf8(status_line)
        .ok()?
        .split_whitespace()
        .nth(1)?
        .parse()
        .ok()?;
    let mut headers: Vec<NameValue> = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        if matches!(line[0], b' ' | b'\t') {
            if let Some(last) = headers.last_mut() {
                last.value.push(' ');
                last.value.push_str(latin1(line).trim());
            }
            continue;
        }
        let colon = line.iter().position(|&b| b == b':')?;
        headers.push(NameValue::new(
            latin1(&line[..colon]).trim(),
            latin1(&line[colon + 1..]).trim(),
        ));
    }
    let raw_body = &block[head_end.1..];
    let chunked = headers.iter().any(|h| {
        h.name.eq_ignore_ascii_case("Transfer-Encoding") && h.value.to_ascii_lowercase().contains("chunked")
    });
    let body = if chunked {
        dechunk(raw_body).unwrap_or_else(|| raw_body.to_vec())
    } else {
        raw_body.to_vec()
    };
    Some(HttpResponse {
        status,
        headers,
        body,
    })
}

fn dechunk(mut data: &[u8]) -> Option<Vec<u8>> {
    let mut out = Vec::new();
    loop {
        let eol = find(data, b"\r\n")?;
        let size_str = std::str::from_utf8(&data[..eol]).ok()?;
        let size = usize::from_str_radix(size_str.split(';').next()?.trim(), 16).ok()?;
        data = &data[eol + 2..];
        if size == 0 {
            return Some(out);
        }
        out.extend_from_slice(data.get(..size)?);
        data = data.get(size..)?;
        data = data.strip_prefix(b"\r\n").unwrap_or(data);
    }
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_status_headers_and_charset() {
        let block = b"HTTP/1.1 200 OK\r\nContent-Type: text/html; charset=\"ISO-8859-1\"\r\nX-A: b\r\n\r\n<p>hi</p>";
        let resp = parse_http_response(block).unwrap();
        assert_eq!(resp.status, 200);
        assert!(resp.is_html());
        assert_eq!(resp.charset(), Some("ISO-8859-1"));
        assert_eq!(resp.body, b"<p>hi</p>");
        assert_eq!(resp.headers[1], NameValue::new("X-A", "b"));
    }

    #[test]
    fn dechunks_bodies() {
        let block = b"HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\n5\r\nhello\r\n6\r\n world\r\n0\r\n\r\n";
        assert_eq!(parse_http_response(block).unwrap().body, b"hello world");
    }

    #[test]
    fn rejects_non_http_blocks() {
        assert!(parse_http_response(b"GET / HTTP/1.1\r\n\r\n").is_none());
        assert!(parse_http_response(b"HTTP/1.1 200 OK\r\nno terminator").is_none());
    }
}
