//! WARC writers and random HTML pages for scanner tests.

use std::collections::BTreeSet;
use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::provenance::DetectionMethod;

/// Builds a WARC stream in memory, optionally gzipping each record as a
/// separate member.
pub struct WarcBuilder {
    out: Vec<u8>,
    gzip: Option<Compression>,
    records: u64,
}

impl WarcBuilder {
    pub fn plain() -> Self {
        WarcBuilder {
            out: Vec::new(),
            gzip: None,
            records: 0,
        }
    }

    pub fn gzip(level: Compression) -> Self {
        WarcBuilder {
            out: Vec::new(),
            gzip: Some(level),
            records: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    /// Appends one record with the given extra headers and block.
    pub fn record(&mut self, warc_type: &str, headers: &[(&str, &str)], block: &[u8]) -> &mut Self {
        self.records += 1;
        let mut raw = Vec::with_capacity(block.len() + 256);
        raw.extend_from_slice(b"WARC/1.0\r\n");
        raw.extend_from_slice(format!("WARC-Type: {warc_type}\r\n").as_bytes());
        raw.extend_from_slice(format!("WARC-Record-ID: <urn:uuid:test-{:012}>\r\n", self.records).as_bytes());
        for (name, value) in headers {
            raw.extend_from_slice(format!("{name}: {value}\r\n").as_bytes());
        }
        raw.extend_from_slice(format!("Content-Length: {}\r\n\r\n", block.len()).as_bytes());
        raw.extend_from_slice(block);
        raw.extend_from_slice(b"\r\n\r\n");
        match self.gzip {
            Some(level) => {
                let mut enc = GzEncoder::new(Vec::new(), level);
                enc.write_all(&raw).expect("in-memory write");
                self.out.extend(enc.finish().expect("in-memory write"));
            }
            None => self.out.extend(raw),
        }
        self
    }

    /// Appends an HTTP response record.
    pub fn response(&mut self, url: &str, date: &str, status: u16, content_type: &str, body: &[u8]) -> &mut Self {
        let mut block = format!(
            "HTTP/1.1 {status} {}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\n\r\n",
            if status == 200 { "OK" } else { "Status" },
            body.len()
        )
        .into_bytes();
        block.extend_from_slice(body);
        self.record(
            "response",
            &[
                ("WARC-Target-URI", url),
                ("WARC-Date", date),
                ("Content-Type", "application/http; msgtype=response"),
            ],
            &block,
        )
    }

    /// Appends a 200 `text/html; charset=utf-8` response.
    pub fn html(&mut self, url: &str, date: &str, html: &str) -> &mut Self {
        self.response(url, date, 200, "text/html; charset=utf-8", html.as_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.out
    }

    /// Writes accumulated bytes to `sink` and clears the buffer.
    pub fn drain_into(&mut self, sink: &mut impl Write) -> std::io::Result<()> {
        sink.write_all(&self.out)?;
        self.out.clear();
        Ok(())
    }
}

const PROSE: &[&str] = &[
    "the", "of", "and", "to", "in", "a", "is", "that", "for", "it", "as", "was", "with", "be", "by", "on", "not",
    "he", "this", "are", "or", "his", "from", "at", "which", "but", "have", "an", "had", "they", "you", "were",
    "their", "one", "all", "we", "can", "her", "has", "there", "been", "if", "more", "when", "will", "would",
    "who", "so", "no", "river", "village", "market", "winter", "library", "archive", "record", "survey", "garden",
    "harvest", "station", "letter", "engine", "museum", "council", "valley", "bridge", "school", "history",
    "season", "weather", "journey", "collection", "photograph", "document", "account", "report", "evening",
];

/// A prose paragraph of `words` words ending in a full stop.
pub fn prose(rng: &mut impl Rng, words: usize) -> String {
    let mut out = String::new();
    for i in 0..words {
        let w = PROSE.choose(rng).unwrap();
        if i == 0 {
            let mut c = w.chars();
            out.push(c.next().unwrap().to_ascii_uppercase());
            out.push_str(c.as_str());
        } else {
            out.push(' ');
            out.push_str(w);
        }
        if i + 1 < words && rng.gen_ratio(1, 12) {
            out.push('.');
            out.push(' ');
            let next = PROSE.choose(rng).unwrap();
            let mut c = next.chars();
            out.push(c.next().unwrap().to_ascii_uppercase());
            out.push_str(c.as_str());
        }
    }
    out.push('.');
    out
}

/// A page of `paragraphs` prose paragraphs with ordinary navigation links.
/// Contains no license marker.
pub fn page_parts(rng: &mut impl Rng, paragraphs: usize) -> Vec<String> {
    let mut parts = vec![
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Page</title></head><body>\n".to_string(),
        "<nav><a href=\"/\">Home</a> <a href=\"/about\">About</a></nav>\n".to_string(),
    ];
    for _ in 0..paragraphs {
        let n = rng.gen_range(40..90);
        parts.push(format!("<p>{}</p>\n", prose(rng, n)));
    }
    parts.push("</body></html>\n".to_string());
    parts
}

/// License URLs in assorted spellings with the identifier each resolves to.
pub const INJECTABLE_LICENSES: &[(&str, &str)] = &[
    ("https://creativecommons.org/licenses/by/4.0/", "CC-BY-4.0"),
    ("http://creativecommons.org/licenses/by-sa/3.0/", "CC-BY-SA-3.0"),
    ("https://creativecommons.org/licenses/by-nc/2.0/", "CC-BY-NC-2.0"),
    ("//creativecommons.org/licenses/by-nd/4.0/deed.en", "CC-BY-ND-4.0"),
    ("https://creativecommons.org/publicdomain/zero/1.0/", "CC0-1.0"),
    ("https://www.creativecommons.org/licenses/by-nc-sa/4.0/legalcode", "CC-BY-NC-SA-4.0"),
];

/// Expected detection: byte offset of the license URL, identifier, method.
pub type Site = (usize, String, DetectionMethod);

/// A marker-free page with `injections` license markers (body text, rel
/// link or meta tag) inserted between elements, and the site of each.
pub fn injected_page(seed: u64, injections: usize) -> (String, BTreeSet<Site>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paragraphs = rng.gen_range(1..6);
    let parts = page_parts(&mut rng, paragraphs);
    let mut sites: Vec<(usize, usize, usize)> = (0..injections)
        .map(|_| {
            (
                rng.gen_range(1..parts.len()),
                rng.gen_range(0..3),
                rng.gen_range(0..INJECTABLE_LICENSES.len()),
            )
        })
        .collect();
    sites.sort_by_key(|s| s.0);

    let mut html = String::new();
    let mut expected = BTreeSet::new();
    let mut next = sites.iter().peekable();
    for (i, part) in parts.iter().enumerate() {
        while let Some(&&(at, marker, lic)) = next.peek() {
            if at != i {
                break;
            }
            next.next();
            let (url, id) = INJECTABLE_LICENSES[lic];
            let (prefix, suffix, method) = match marker {
                0 => ("<p>Reuse under ", " please.</p>\n", DetectionMethod::CcUrlRegex),
                1 => ("<a rel=\"license\" href=\"", "\">license</a>\n", DetectionMethod::RelLicenseLink),
                _ => ("<meta name=\"dc.rights\" content=\"", "\">\n", DetectionMethod::MetaTag),
            };
            html.push_str(prefix);
            expected.insert((html.len(), id.to_string(), method));
            html.push_str(url);
            html.push_str(suffix);
        }
        html.push_str(part);
    }
    (html, expected)
}

const SYLLABLES: &[&str] = &[
    "an", "ber", "cal", "dor", "el", "fen", "gar", "hol", "in", "jur", "kel", "lin", "mar", "nor", "or", "pel",
    "quin", "ros", "sel", "tor", "ul", "ven", "wal", "xen", "yor", "zan", "ist", "ment", "ship", "ward", "ton",
    "ley", "by", "ford", "dale", "mere",
];

/// A word that is either common prose or a syllable compound, so that
/// pages compress about as well as crawled text.
fn crawl_word(rng: &mut impl Rng) -> String {
    if rng.gen_bool(0.6) {
        return PROSE.choose(rng).unwrap().to_string();
    }
    let n = rng.gen_range(1..4);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

/// A crawled-looking page: head, navigation with varied links, prose with
/// names and numbers, and a license marker on about one page in five.
/// Inline boilerplate shared by every synthetic page.
const CRAWL_STYLE: &str = "<style>\n\
body{margin:0;font-family:-apple-system,BlinkMacSystemFont,\"Segoe UI\",Roboto,sans-serif;line-height:1.5}\n\
.menu{list-style:none;margin:0;padding:0;display:flex;flex-wrap:wrap}\n\
.menu-item{margin:0 1em 0 0;padding:.25em 0}.menu-link{color:#333;text-decoration:none}\n\
.menu-link:hover,.menu-link:focus{color:#000;text-decoration:underline}\n\
.entry-content{max-width:42em;margin:0 auto;padding:0 1em}.clearfix::after{content:\"\";display:table;clear:both}\n\
.paragraph{margin:0 0 1.2em 0}footer{border-top:1px solid #ddd;padding:1em;font-size:.875em;color:#666}\n\
@media (max-width:600px){.menu{display:block}.entry-content{padding:0 .5em}}\n\
</style>\n<script>window.dataLayer=window.dataLayer||[];function gtag(){dataLayer.push(arguments);}gtag('js',new Date());</script>\n";

pub fn crawl_page(rng: &mut impl Rng, host: &str) -> String {
    let mut html = format!(
        "<!DOCTYPE html>\n<html lang=\"en\"><head><meta charset=\"utf-8\"><title>{} {}</title>\n\
         <link rel=\"stylesheet\" href=\"/static/site-{}.css\"></head><body>\n<nav>",
        crawl_word(rng),
        crawl_word(rng),
        rng.gen_range(100..999)
    );
    html.insert_str(html.find("</head>").unwrap(), CRAWL_STYLE);
    html.push_str("<ul class=\"menu\">");
    for _ in 0..rng.gen_range(8..40) {
        html.push_str(&format!(
            "<li class=\"menu-item menu-item-type-post_type menu-item-object-page\"><a class=\"menu-link\" href=\"https://{host}/{}/{}-{}\">{}</a></li>\n",
            crawl_word(rng),
            crawl_word(rng),
            rng.gen_range(1..100_000),
            crawl_word(rng)
        ));
    }
    html.push_str("</ul></nav>\n<main>\n");
    for _ in 0..rng.gen_range(3..14) {
        let words = rng.gen_range(30..160);
        let mut p = String::with_capacity(words * 7);
        for i in 0..words {
            if i > 0 {
                p.push(' ');
            }
            match rng.gen_range(0..40) {
                0 => p.push_str(&rng.gen_range(1..100_000).to_string()),
                1 => {
                    let w = crawl_word(rng);
                    let mut c = w.chars();
                    p.push(c.next().unwrap().to_ascii_uppercase());
                    p.push_str(c.as_str());
                }
                _ => p.push_str(&crawl_word(rng)),
            }
        }
        html.push_str(&format!("<div class=\"entry-content clearfix\"><p class=\"paragraph\">{p}.</p></div>\n"));
    }
    html.push_str("</main>\n<footer>");
    if rng.gen_ratio(1, 5) {
        let (url, _) = INJECTABLE_LICENSES.choose(rng).unwrap();
        html.push_str(&format!("<a rel=\"license\" href=\"{url}\">Some rights reserved</a>"));
    }
    html.push_str(&format!("<p>Contact {}@{host}</p></footer></body></html>\n", crawl_word(rng)));
    html
}

/// Writes a gzipped crawl of roughly `target_bytes` compressed bytes to
/// `sink`. About one record in eight is a request, redirect or image.
/// Returns (records, compressed bytes, uncompressed HTML bytes).
pub fn write_crawl(sink: &mut impl Write, seed: u64, target_bytes: usize) -> std::io::Result<(u64, usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = WarcBuilder::gzip(Compression::fast());
    let mut written = 0;
    let mut html_bytes = 0;
    let mut i = 0u64;
    while written + w.len() < target_bytes {
        let host = format!("{}{}.example", crawl_word(&mut rng), i % 997);
        let url = format!("https://{host}/{}/{i}", crawl_word(&mut rng));
        let date = format!("2023-{:02}-{:02}T{:02}:{:02}:00Z", 1 + i % 12, 1 + i % 28, i % 24, i % 60);
        match rng.gen_range(0..24) {
            0 | 1 => {
                w.record("request", &[("WARC-Target-URI", url.as_str()), ("WARC-Date", date.as_str())], b"GET / HTTP/1.1\r\n\r\n");
            }
            2 => {
                w.response(&url, &date, 301, "text/html", b"<p>moved</p>");
            }
            3 => {
                let png: Vec<u8> = (0..rng.gen_range(200..4000)).map(|_| rng.gen()).collect();
                w.response(&url, &date, 200, "image/png", &png);
            }
            _ => {
                let html = crawl_page(&mut rng, &host);
                html_bytes += html.len();
                w.html(&url, &date, &html);
            }
        }
        i += 1;
        if w.len() > 1 << 20 {
            written += w.len();
            w.drain_into(sink)?;
        }
    }
    written += w.len();
    w.drain_into(sink)?;
    Ok((w.records(), written, html_bytes))
}
