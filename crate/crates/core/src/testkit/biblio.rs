//! Seeded synthetic registration and renewal corpora with OCR-style noise.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pd::{CopyrightRecord, PartialDate, RecordSource, RenewalRecord};

const WORDS: &[&str] = &[
    "river", "mountain", "shadow", "garden", "winter", "summer", "silver", "golden", "house", "road", "night",
    "morning", "stranger", "letters", "harbor", "island", "forest", "city", "empire", "mystery", "voyage",
    "return", "secret", "journey", "valley", "heart", "storm", "fire", "ocean", "prairie", "castle", "daughter",
    "captain", "doctor", "widow", "kingdom", "echo", "lantern", "orchard", "meadow", "bridge", "tower", "frontier",
    "desert", "lighthouse", "stars", "autumn", "spring", "cotton", "iron", "glass", "crimson", "lonely", "broken",
    "distant", "hidden", "quiet", "wild", "last", "first", "second", "little", "great", "old", "new", "red",
    "blue", "green", "black", "white", "song", "tale", "story", "history", "guide", "manual", "primer",
    "chemistry", "physics", "economics", "poems", "sermons", "essays", "adventures", "murder", "affair", "case",
    "trail", "ranch", "canyon", "railroad", "engine", "machine", "farm", "village", "market", "church", "school",
];

const GIVEN: &[&str] = &[
    "John", "Mary", "Robert", "Helen", "William", "Dorothy", "James", "Margaret", "Charles", "Ruth", "George",
    "Anna", "Edward", "Alice", "Frank", "Grace", "Henry", "Edith", "Walter", "Clara", "Arthur", "Louise",
];

const SURNAMES: &[&str] = &[
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Miller", "Davis", "Wilson", "Anderson", "Taylor",
    "Thomas", "Moore", "Martin", "Jackson", "Thompson", "White", "Harris", "Clark", "Lewis", "Walker", "Hall",
    "Young", "Allen", "King", "Wright", "Scott", "Green", "Baker", "Adams", "Nelson", "Carter", "Mitchell",
];

#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub registrations: usize,
    pub renewals: usize,
    /// Per-character probability of an OCR-style error in renewal titles.
    pub noise: f64,
    pub seed: u64,
}

impl CorpusSpec {
    pub fn new(registrations: usize, renewals: usize, noise: f64, seed: u64) -> Self {
        CorpusSpec {
            registrations,
            renewals,
            noise,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub registrations: Vec<CopyrightRecord>,
    pub renewals: Vec<RenewalRecord>,
}

fn title(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=6);
    let mut words: Vec<String> = (0..n)
        .map(|_| {
            let w = WORDS.choose(rng).unwrap();
            let mut c = w.chars();
            let first = c.next().unwrap().to_ascii_uppercase();
            format!("{first}{}", c.as_str())
        })
        .collect();
    if rng.gen_bool(0.3) {
        words.insert(0, "The".into());
    }
    words.join(" ")
}

fn author(rng: &mut ChaCha8Rng) -> (String, String) {
    (
        GIVEN.choose(rng).unwrap().to_string(),
        SURNAMES.choose(rng).unwrap().to_string(),
    )
}

fn format_author(rng: &mut ChaCha8Rng, given: &str, surname: &str) -> String {
    match rng.gen_range(0..3) {
        0 => format!("{given} {surname}"),
        1 => format!("{surname}, {given}"),
        _ => format!("{}, {}", surname.to_uppercase(), given),
    }
}

fn format_reg_id(rng: &mut ChaCha8Rng, digits: u32) -> String {
    match rng.gen_range(0..4) {
        0 => format!("A{digits:06}"),
        1 => format!("A-{digits:06}"),
        2 => format!("A {:03} {:03}", digits / 1000, digits % 1000),
        _ => format!("a{digits:06}"),
    }
}

/// Character-level OCR corruption: confusable substitutions, drops and
/// duplications.
pub fn ocr_noise(rng: &mut impl Rng, text: &str, rate: f64) -> String {
    let mut out = String::with_capacity(text.len() + 4);
    for c in text.chars() {
        if !rng.gen_bool(rate.clamp(0.0, 1.0)) {
            out.push(c);
            continue;
        }
        match rng.gen_range(0..5) {
            0 => {}
            1 => {
                out.push(c);
                out.push(c);
            }
            2 => out.push(match c.to_ascii_lowercase() {
                'l' | 'i' => '1',
                'o' => '0',
                'e' => 'c',
                's' => '5',
                'b' => 'h',
                'm' => 'n',
                _ => '.',
            }),
            3 => out.push_str(if c == 'm' { "rn" } else { "," }),
            _ => out.push(c.to_ascii_uppercase()),
        }
    }
    out
}

struct Work {
    reg_digits: u32,
    title: String,
    given: String,
    surname: String,
    year: Option<i32>,
}

impl SyntheticCorpus {
    pub fn generate(spec: &CorpusSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut works: Vec<Work> = Vec::with_capacity(spec.registrations);
        let mut registrations = Vec::with_capacity(spec.registrations);
        for i in 0..spec.registrations {
            let reg_digits = if i > 0 && rng.gen_bool(0.02) {
                // Registration ids are not unique in the catalog.
                works[rng.gen_range(0..i)].reg_digits
            } else {
                rng.gen_range(0..1_000_000)
            };
            let title = if i > 0 && rng.gen_bool(0.1) {
                // Near duplicate of an earlier title: one word replaced.
                let base = &works[rng.gen_range(0..i)].title;
                let mut words: Vec<String> = base.split(' ').map(str::to_string).collect();
                let at = rng.gen_range(0..words.len());
                words[at] = WORDS.choose(&mut rng).unwrap().to_string();
                words.join(" ")
            } else {
                title(&mut rng)
            };
            let (given, surname) = author(&mut rng);
            let year = (!rng.gen_bool(0.03)).then(|| rng.gen_range(1920..=1970));
            let reg_id = if rng.gen_bool(0.02) {
                String::new()
            } else {
                format_reg_id(&mut rng, reg_digits)
            };
            let author_text = format_author(&mut rng, &given, &surname);
            let record = CopyrightRecord::new(
                reg_id,
                title.clone(),
                author_text,
                year.map(PartialDate::year),
                RecordSource::Structured,
            )
            .expect("generated registration is valid");
            registrations.push(record);
            works.push(Work {
                reg_digits,
                title,
                given,
                surname,
                year,
            });
        }

        let mut order: Vec<usize> = (0..works.len()).collect();
        order.shuffle(&mut rng);
        let mut renewals = Vec::with_capacity(spec.renewals);
        for r in 0..spec.renewals {
            let renewal_id = format!("R{:06}", r + 1);
            let derived = !works.is_empty() && rng.gen_bool(0.75);
            let record = if derived {
                let w = &works[order[r % order.len()]];
                let base_year = w.year.unwrap_or(1940);
                let renewal_year = base_year + rng.gen_range(17..=31);
                let original_reg_id = match rng.gen_range(0..10) {
                    0..=5 => Some(format_reg_id(&mut rng, w.reg_digits)),
                    6 => Some(format_reg_id(&mut rng, (w.reg_digits + 1) % 1_000_000)),
                    _ => None,
                };
                let title = ocr_noise(&mut rng, &w.title, spec.noise);
                let author = format_author(&mut rng, &w.given, &w.surname);
                RenewalRecord {
                    renewal_id,
                    original_reg_id,
                    title,
                    author,
                    original_pub_date: w.year.map(PartialDate::year),
                    renewal_date: PartialDate::new(renewal_year.min(2000), Some(rng.gen_range(1..=12)), None)
                        .expect("valid renewal date"),
                }
            } else {
                let (given, surname) = author(&mut rng);
                let year = rng.gen_range(1920..=1970);
                let author = format_author(&mut rng, &given, &surname);
                let digits = rng.gen_range(0..1_000_000);
                let original_reg_id = rng.gen_bool(0.5).then(|| format_reg_id(&mut rng, digits));
                let fresh = title(&mut rng);
                RenewalRecord {
                    renewal_id,
                    original_reg_id,
                    title: ocr_noise(&mut rng, &fresh, spec.noise),
                    author,
                    original_pub_date: Some(PartialDate::year(year)),
                    renewal_date: PartialDate::year((year + rng.gen_range(17..=31)).min(2000)),
                }
            };
            renewals.push(record);
        }
        SyntheticCorpus {
            registrations,
            renewals,
        }
    }
}
