//! Conservative HTML handling: charset sniffing, decoding, a lightweight
//! tokenizer with byte offsets, and HTML-to-text extraction.

use std::borrow::Cow;
use std::sync::LazyLock;

use encoding_rs::Encoding;
use regex::bytes::Regex as BytesRegex;

use crate::provenance::NameValue;

/// Bumped whenever extraction output changes for the same input.
pub const EXTRACTOR_VERSION: &str = "html-text/1";

static META_CHARSET: LazyLock<BytesRegex> = LazyLock::new(|| {
    BytesRegex::new(r#"(?i)<meta[^>]*?charset\s*=\s*["']?\s*([a-z0-9_\-:.]+)"#).unwrap()
});

const RAW_TEXT: &[&str] = &["script", "style", "noscript", "template", "svg", "title", "textarea", "iframe", "object"];

const BLOCK: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "br", "caption", "dd", "details", "div", "dl",
    "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
    "header", "hr", "html", "li", "main", "nav", "ol", "option", "p", "pre", "section", "summary",
    "table", "td", "th", "tr", "ul",
];

/// Looks for a `<meta charset>` or `http-equiv` charset declaration near the
/// top of the document.
pub fn sniff_meta_charset(bytes: &[u8]) -> Option<String> {
    let head = &bytes[..bytes.len().min(4096)];
    META_CHARSET
        .captures(head)
        .map(|c| String::from_utf8_lossy(&c[1]).into_owned())
}

/// Decodes HTML bytes. Order: byte-order mark, HTTP charset, meta charset,
/// UTF-8. Malformed input is an error; nothing is transcoded lossily.
pub fn decode_html(bytes: &[u8], http_charset: Option<&str>) -> Result<String, String> {
    if let Some((encoding, bom_len)) = Encoding::for_bom(bytes) {
        return decode_strict(encoding, &bytes[bom_len..]);
    }
    let encoding = http_charset
        .and_then(|label| Encoding::for_label(label.as_bytes()))
        .or_else(|| sniff_meta_charset(bytes).and_then(|l| Encoding::for_label(l.as_bytes())))
        .unwrap_or(encoding_rs::UTF_8);
    // A document cannot be decoded as UTF-16 from an ASCII-compatible
    // declaration in its own markup.
    let encoding = encoding.output_encoding();
    decode_strict(encoding, bytes)
}

fn decode_strict(encoding: &'static Encoding, bytes: &[u8]) -> Result<String, String> {
    encoding
        .decode_without_bom_handling_and_without_replacement(bytes)
        .map(Cow::into_owned)
        .ok_or_else(|| format!("bytes are not valid {}", encoding.name()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attr<'a> {
    /// Lowercased attribute name.
    pub name: String,
    /// Raw value as it appears in the markup.
    pub value: &'a str,
    /// Byte offset of `value` in the document.
    pub value_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tag<'a> {
    pub name: String,
    pub closing: bool,
    pub attrs: Vec<Attr<'a>>,
    pub start: usize,
    pub end: usize,
}

impl<'a> Tag<'a> {
    pub fn attr(&self, name: &str) -> Option<&Attr<'a>> {
        self.attrs.iter().find(|a| a.name == name)
    }

    pub fn attr_value(&self, name: &str) -> Option<&'a str> {
        self.attr(name).map(|a| a.value)
    }

    /// Whether the whitespace-separated `rel` attribute contains `token`.
    pub fn has_rel(&self, token: &str) -> bool {
        self.attr_value("rel")
            .is_some_and(|rel| rel.split_ascii_whitespace().any(|t| t.eq_ignore_ascii_case(token)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token<'a> {
    Tag(Tag<'a>),
    Text(&'a str),
    /// Comments, doctypes and processing instructions.
    Markup,
    /// Content of script-like elements.
    RawText(&'a str),
}

pub struct Tokenizer<'a> {
    html: &'a str,
    pos: usize,
    raw_until: Option<String>,
}

impl<'a> Tokenizer<'a> {
    pub fn new(html: &'a str) -> Self {
        Tokenizer {
            html,
            pos: 0,
            raw_until: None,
        }
    }
}

impl<'a> Iterator for Tokenizer<'a> {
    type Item = Token<'a>;

    fn next(&mut self) -> Option<Token<'a>> {
        let html = self.html;
        let bytes = html.as_bytes();
        if self.pos >= bytes.len() {
            return None;
        }
        if let Some(name) = self.raw_until.take() {
            let start = self.pos;
            let end = find_closing(bytes, start, &name).unwrap_or(bytes.len());
            self.pos = end;
            return Some(Token::RawText(&html[start..end]));
        }
        let start = self.pos;
        if bytes[start] == b'<' {
            let rest = &bytes[start..];
            if rest.starts_with(b"<!--") {
                let end = find_bytes(bytes, start + 4, b"-->").map_or(bytes.len(), |i| i + 3);
                self.pos = end;
                return Some(Token::Markup);
            }
            if rest.starts_with(b"<!") || rest.starts_with(b"<?") {
                let end = memchr(bytes, start, b'>').map_or(bytes.len(), |i| i + 1);
                self.pos = end;
                return Some(Token::Markup);
            }
            if let Some(tag) = parse_tag(html, start) {
                self.pos = tag.end;
                if !tag.closing && RAW_TEXT.contains(&tag.name.as_str()) {
                    self.raw_until = Some(tag.name.clone());
                }
                return Some(Token::Tag(tag));
            }
        }
        let end = memchr(bytes, start + 1, b'<').unwrap_or(bytes.len());
        self.pos = end;
        Some(Token::Text(&html[start..end]))
    }
}

fn memchr(bytes: &[u8], from: usize, needle: u8) -> Option<usize> {
    bytes[from.min(bytes.len())..]
        .iter()
        .position(|&b| b == needle)
        .map(|i| i + from)
}

fn find_bytes(bytes: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    bytes
        .get(from..)?
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|i| i + from)
}

/// Position of `</name` (ASCII case-insensitive) at or after `from`.
fn find_closing(bytes: &[u8], from: usize, name: &str) -> Option<usize> {
    let mut i = from;
    while let Some(lt) = memchr(bytes, i, b'<') {
        let after = &bytes[lt + 1..];
        if after.first() == Some(&b'/')
            && after.len() > name.len()
            && after[1..=name.len()].eq_ignore_ascii_case(name.as_bytes())
        {
            return Some(lt);
        }
        i = lt + 1;
    }
    None
}

/// Parses a start or end tag beginning at `start` (which must hold `<`).
/// Returns `None` when the bytes do not form a tag.
pub fn parse_tag(html: &str, start: usize) -> Option<Tag<'_>> {
    let bytes = html.as_bytes();
    let mut i = start + 1;
    let closing = bytes.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    if !bytes.get(i)?.is_ascii_alphabetic() {
        return None;
    }
    let name_start = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'-' | b':' | b'_')) {
        i += 1;
    }
    let name = html[name_start..i].to_ascii_lowercase();
    let mut attrs = Vec::new();
    loop {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'/') {
            i += 1;
        }
        let &b = bytes.get(i)?;
        if b == b'>' {
            i += 1;
            break;
        }
        let attr_start = i;
        i += 1;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'=' | b'>' | b'/') {
            i += 1;
        }
        let attr_name = html.get(attr_start..i)?.to_ascii_lowercase();
        let mut j = i;
        while j < bytes.len() && bytes[j].is_ascii_whitespace() {
            j += 1;
        }
        if bytes.get(j) == Some(&b'=') {
            j += 1;
            while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                j += 1;
            }
            let (value_start, value_end, next) = match *bytes.get(j)? {
                q @ (b'"' | b'\'') => {
                    let close = memchr(bytes, j + 1, q)?;
                    (j + 1, close, close + 1)
                }
                _ => {
                    let mut k = j;
                    while k < bytes.len() && !bytes[k].is_ascii_whitespace() && bytes[k] != b'>' {
                        k += 1;
                    }
                    (j, k, k)
                }
            };
            attrs.push(Attr {
                name: attr_name,
                value: html.get(value_start..value_end)?,
                value_offset: value_start,
            });
            i = next;
        } else {
            attrs.push(Attr {
                name: attr_name,
                value: "",
                value_offset: i,
            });
        }
    }
    Some(Tag {
        name,
        closing,
        attrs,
        start,
        end: i,
    })
}

/// Extracts plain text: tags stripped, script-like content dropped, block
/// boundaries turned into line breaks, whitespace collapsed per line.
pub fn extract_text(html: &str) -> String {
    let mut buf = String::with_capacity(html.len() / 2);
    for token in Tokenizer::new(html) {
        match token {
            Token::Text(text) => {
                let decoded = decode_entities(text);
                for c in decoded.chars() {
                    buf.push(if c.is_whitespace() { ' ' } else { c });
                }
            }
            Token::Tag(tag) if BLOCK.contains(&tag.name.as_str()) => buf.push('\n'),
            Token::Tag(_) => {}
            Token::Markup | Token::RawText(_) => {}
        }
    }
    let mut out = String::with_capacity(buf.len());
    for line in buf.split('\n') {
        let mut words = line.split_whitespace().peekable();
        if words.peek().is_none() {
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        for (i, word) in words.enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(word);
        }
    }
    out
}

/// Meta tags and link relations, captured verbatim as name/value pairs.
pub fn extract_metadata(html: &str) -> Vec<NameValue> {
    let mut out = Vec::new();
    for token in Tokenizer::new(html) {
        let Token::Tag(tag) = token else { continue };
        if tag.closing {
            continue;
        }
        match tag.name.as_str() {
            "meta" => {
                let key = ["name", "property", "http-equiv", "itemprop"]
                    .iter()
                    .find_map(|k| tag.attr_value(k));
                match (key, tag.attr_value("content"), tag.attr_value("charset")) {
                    (Some(key), Some(content), _) => out.push(NameValue::new(format!("meta:{key}"), content)),
                    (_, _, Some(charset)) => out.push(NameValue::new("meta:charset", charset)),
                    _ => {}
                }
            }
            "link" | "a" | "area" => {
                if let (Some(rel), Some(href)) = (tag.attr_value("rel"), tag.attr_value("href")) {
                    if tag.name == "link" || tag.has_rel("license") {
                        out.push(NameValue::new(format!("{}:{rel}", tag.name), href));
                    }
                }
            }
            _ => {}
        }
    }
    out
}

pub fn decode_entities(text: &str) -> Cow<'_, str> {
    if !text.contains('&') {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let semi = rest.bytes().take(12).position(|b| b == b';');
        let decoded = semi.and_then(|semi| decode_entity(&rest[1..semi]).map(|c| (c, semi + 1)));
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    Cow::Owned(out)
}

fn decode_entity(name: &str) -> Option<char> {
    if let Some(num) = name.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse().ok()?,
        };
        return char::from_u32(code);
    }
    Some(match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => ' ',
        "copy" => '©',
        "reg" => '®',
        "mdash" => '—',
        "ndash" => '–',
        "hellip" => '…',
        "lsquo" => '‘',
        "rsquo" => '’',
        "ldquo" => '“',
        "rdquo" => '”',
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_tags_and_scripts() {
        let html = "<html><head><title>T</title><style>p{}</style></head><body>\
            <h1>Head&amp;line</h1><p>First\n   para <b>bold</b>text.</p>\
            <script>var x = '<p>no</p>';</script><div>Second</div><!-- hidden --></body></html>";
        assert_eq!(extract_text(html), "Head&line\nFirst para boldtext.\nSecond");
    }

    #[test]
    fn tag_attribute_offsets_point_into_source() {
        let html = r#"<p>x</p><a class=foo rel="license" href='https://e.org/'>y</a>"#;
        let tag = Tokenizer::new(html)
            .find_map(|t| match t {
                Token::Tag(tag) if tag.name == "a" => Some(tag),
                _ => None,
            })
            .unwrap();
        assert!(tag.has_rel("license"));
        let href = tag.attr("href").unwrap();
        assert_eq!(&html[href.value_offset..href.value_offset + href.value.len()], "https://e.org/");
        assert_eq!(tag.attr_value("class"), Some("foo"));
    }

    #[test]
    fn metadata_is_verbatim() {
        let html = r#"<meta charset="utf-8"><meta name="dc.rights" content="CC BY &amp; more"><link rel="canonical" href="/x">"#;
        let meta = extract_metadata(html);
        assert_eq!(
            meta,
            vec![
                NameValue::new("meta:charset", "utf-8"),
                NameValue::new("meta:dc.rights", "CC BY &amp; more"),
                NameValue::new("link:canonical", "/x"),
            ]
        );
    }

    #[test]
    fn charset_sniffing_order() {
        let latin = b"<meta charset=\"iso-8859-1\"><p>caf\xe9</p>";
        assert_eq!(decode_html(latin, None).unwrap(), "<meta charset=\"iso-8859-1\"><p>café</p>");
        // HTTP header wins over the meta tag.
        assert!(decode_html(latin, Some("utf-8")).is_err());
        // UTF-8 fallback rejects invalid bytes instead of replacing them.
        assert!(decode_html(b"<p>\xff\xfe\xfd</p>", None).is_err());
        assert_eq!(decode_html("<p>é</p>".as_bytes(), None).unwrap(), "<p>é</p>");
    }

    #[test]
    fn entities() {
        assert_eq!(decode_entities("a &lt;b&gt; &#65;&#x42; &bogus; &"), "a <b> AB &bogus; &");
    }

    #[test]
    fn stray_angle_brackets_are_text() {
        assert_eq!(extract_text("<p>1 < 2 and 3 > 2</p>"), "1 < 2 and 3 > 2");
    }
}
