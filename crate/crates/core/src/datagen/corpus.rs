//! Base company corpus: loading seed rows from CSV and synthesizing a
//! fictional corpus when no export is available.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{self, Columns, FormatError};

/// One row of the base corpus; replicated across sources during generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanySeed {
    pub name: String,
    pub city: Option<String>,
    pub region: Option<String>,
    pub country_code: Option<String>,
    pub description: Option<String>,
}

impl CompanySeed {
    pub fn named(name: impl Into<String>) -> Self {
        CompanySeed { name: name.into(), city: None, region: None, country_code: None, description: None }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BaseCorpus {
    pub seeds: Vec<CompanySeed>,
    /// Rows dropped because the name cell was empty.
    pub skipped_rows: usize,
}

pub fn load_base_corpus(path: &Path) -> Result<BaseCorpus, FormatError> {
    parse_base_corpus(io::open(path)?)
}

/// Reads a header-led CSV; only `name` is required.
pub fn parse_base_corpus<R: Read>(reader: R) -> Result<BaseCorpus, FormatError> {
    let mut rdr = io::csv_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &["name"], &["city", "region", "country_code", "description"])?;
    let mut corpus = BaseCorpus::default();
    for row in rdr.records() {
        let row = row?;
        let Some(name) = cols.get(&row, "name").map(str::trim).filter(|n| !n.is_empty()) else {
            corpus.skipped_rows += 1;
            continue;
        };
        let field = |n: &str| cols.get(&row, n).map(str::to_string);
        corpus.seeds.push(CompanySeed {
            name: name.to_string(),
            city: field("city"),
            region: field("region"),
            country_code: field("country_code"),
            description: field("description"),
        });
    }
    if corpus.skipped_rows > 0 {
        log::warn!("skipped {} base corpus rows with an empty name", corpus.skipped_rows);
    }
    Ok(corpus)
}

pub fn write_base_corpus<W: std::io::Write>(writer: W, seeds: &[CompanySeed]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["name", "city", "region", "country_code", "description"])?;
    for s in seeds {
        let o = |v: &Option<String>| v.clone().unwrap_or_default();
        w.write_record([s.name.clone(), o(&s.city), o(&s.region), o(&s.country_code), o(&s.description)])?;
    }
    w.flush()?;
    Ok(())
}

const ONSETS: [&str; 24] = [
    "vor", "kel", "zan", "bri", "tal", "mor", "quen", "dra", "fel", "lum", "syl", "hax", "nor", "pel", "rin", "gal",
    "cor", "ves", "ob", "tri", "jun", "wex", "yar", "ul",
];
const MIDDLES: [&str; 16] = ["a", "e", "i", "o", "u", "ar", "en", "il", "on", "ur", "ey", "ai", "or", "an", "is", "ev"];
const CODAS: [&str; 20] = [
    "nta", "mix", "dex", "ra", "vio", "tek", "lo", "nix", "sta", "via", "gen", "ron", "ka", "lith", "mo", "sys", "ta",
    "ber", "zo", "qua",
];
const INDUSTRY: [&str; 28] = [
    "Analytics",
    "Systems",
    "Labs",
    "Robotics",
    "Energy",
    "Health",
    "Capital",
    "Logistics",
    "Media",
    "Foods",
    "Networks",
    "Software",
    "Biotech",
    "Security",
    "Mobility",
    "Studios",
    "Materials",
    "Pharma",
    "Travel",
    "Partners",
    "Payments",
    "Genomics",
    "Aerospace",
    "Learning",
    "Insurance",
    "Semiconductors",
    "Textiles",
    "Retail",
];
const SURNAMES: [&str; 12] = [
    "Miller", "Okafor", "Schmidt", "Tanaka", "Rossi", "Novak", "Haddad", "Larsen", "Moreau", "Silva", "Kowalski",
    "Byrne",
];
const TLDS: [&str; 4] = ["com", "io", "ai", "net"];
const LOCATIONS: [(&str, &str, &str); 24] = [
    ("San Francisco", "California", "USA"),
    ("New York", "New York", "USA"),
    ("Austin", "Texas", "USA"),
    ("Boston", "Massachusetts", "USA"),
    ("Seattle", "Washington", "USA"),
    ("Chicago", "Illinois", "USA"),
    ("Toronto", "Ontario", "CAN"),
    ("Vancouver", "British Columbia", "CAN"),
    ("London", "England", "GBR"),
    ("Manchester", "England", "GBR"),
    ("Edinburgh", "Scotland", "GBR"),
    ("Zurich", "Zurich", "CHE"),
    ("Geneva", "Geneva", "CHE"),
    ("Berlin", "Berlin", "DEU"),
    ("Munich", "Bavaria", "DEU"),
    ("Paris", "Ile-de-France", "FRA"),
    ("Amsterdam", "North Holland", "NLD"),
    ("Stockholm", "Stockholm", "SWE"),
    ("Tel Aviv", "Tel Aviv", "ISR"),
    ("Bangalore", "Karnataka", "IND"),
    ("Singapore", "Central Region", "SGP"),
    ("Sydney", "New South Wales", "AUS"),
    ("Tokyo", "Tokyo", "JPN"),
    ("Sao Paulo", "Sao Paulo", "BRA"),
];
const PRODUCTS: [&str; 16] = [
    "cloud security software",
    "payment infrastructure",
    "online travel booking services",
    "precision diagnostic tools",
    "data integration platforms",
    "renewable energy storage",
    "fleet management solutions",
    "digital learning content",
    "supply chain software",
    "consumer mobile applications",
    "industrial sensors",
    "personalized nutrition products",
    "fraud detection services",
    "video streaming technology",
    "insurance pricing models",
    "warehouse automation robots",
];
const MARKETS: [&str; 10] = [
    "small businesses",
    "hospitals and clinics",
    "retail chains",
    "financial institutions",
    "public sector agencies",
    "independent travelers",
    "manufacturers",
    "universities",
    "online merchants",
    "logistics providers",
];

fn coined_word(rng: &mut ChaCha8Rng, used: &mut HashSet<String>) -> String {
    loop {
        let mut w = String::new();
        w.push_str(ONSETS.choose(rng).unwrap());
        w.push_str(MIDDLES.choose(rng).unwrap());
        w.push_str(CODAS.choose(rng).unwrap());
        if used.len() > 6000 {
            w.push_str(MIDDLES.choose(rng).unwrap());
            w.push_str(CODAS.choose(rng).unwrap());
        }
        if used.insert(w.clone()) {
            let mut chars = w.chars();
            let first = chars.next().unwrap().to_uppercase().collect::<String>();
            return first + chars.as_str();
        }
    }
}

/// Deterministically composes `n` fictional company rows with unique coined
/// names, locations and optional descriptions.
pub fn synthesize_base_corpus(n: usize, seed: u64) -> Vec<CompanySeed> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = HashSet::new();
    (0..n)
        .map(|_| {
            let coined = coined_word(&mut rng, &mut used);
            let name = match rng.random_range(0..100) {
                0..45 => format!("{coined} {}", INDUSTRY.choose(&mut rng).unwrap()),
                45..70 => coined,
                70..85 => format!("{coined}.{}", TLDS.choose(&mut rng).unwrap()),
                _ => format!("{coined} & {}", SURNAMES.choose(&mut rng).unwrap()),
            };
            let (city, region, country) = *LOCATIONS.choose(&mut rng).unwrap();
            let description = rng.random_bool(0.6).then(|| {
                format!(
                    "{name} develops {} for {}, serving customers across {}.",
                    PRODUCTS.choose(&mut rng).unwrap(),
                    MARKETS.choose(&mut rng).unwrap(),
                    region
                )
            });
            CompanySeed {
                name,
                city: rng.random_bool(0.9).then(|| city.to_string()),
                region: rng.random_bool(0.8).then(|| region.to_string()),
                country_code: rng.random_bool(0.95).then(|| country.to_string()),
                description,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_only_csv() {
        let corpus = parse_base_corpus("name\nAlpha\nBeta Corp\nGamma\n".as_bytes()).unwrap();
        assert_eq!(corpus.seeds.len(), 3);
        assert_eq!(corpus.seeds[1], CompanySeed::named("Beta Corp"));
        assert_eq!(corpus.skipped_rows, 0);
    }

    #[test]
    fn empty_name_skipped() {
        let corpus = parse_base_corpus("name,city\nAlpha,Bern\n,Basel\n".as_bytes()).unwrap();
        assert_eq!(corpus.seeds.len(), 1);
        assert_eq!(corpus.skipped_rows, 1);
        assert_eq!(corpus.seeds[0].city.as_deref(), Some("Bern"));
    }

    #[test]
    fn missing_name_column() {
        assert!(matches!(parse_base_corpus("city\nBern\n".as_bytes()), Err(FormatError::MissingColumn("name"))));
    }

    #[test]
    fn unreadable_file() {
        assert!(matches!(load_base_corpus(Path::new("/nonexistent/base.csv")), Err(FormatError::Io { .. })));
    }

    #[test]
    fn bundled_sample_has_200_rows() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/base_corpus.csv");
        let corpus = load_base_corpus(&path).unwrap();
        assert_eq!(corpus.seeds.len(), 200);
        assert_eq!(corpus.skipped_rows, 0);
    }

    #[test]
    fn synthesized_names_unique_and_deterministic() {
        let a = synthesize_base_corpus(1500, 3);
        assert_eq!(a, synthesize_base_corpus(1500, 3));
        let names: HashSet<_> = a.iter().map(|s| s.name.to_lowercase()).collect();
        assert_eq!(names.len(), a.len());
    }

    #[test]
    fn corpus_round_trip() {
        let seeds = synthesize_base_corpus(20, 1);
        let mut buf = Vec::new();
        write_base_corpus(&mut buf, &seeds).unwrap();
        assert_eq!(parse_base_corpus(buf.as_slice()).unwrap().seeds, seeds);
    }
}
