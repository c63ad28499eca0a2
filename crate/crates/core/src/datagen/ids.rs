use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::model::IdScheme;

const ALNUM: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
const SEDOL_CHARS: &[u8] = b"BCDFGHJKLMNPQRSTVWXYZ0123456789";
const ISIN_COUNTRIES: [&str; 8] = ["US", "GB", "CH", "DE", "FR", "CA", "JP", "NL"];

/// Mints scheme-shaped identifier values, never handing out the same value
/// twice within one generation run.
#[derive(Debug, Default)]
pub(crate) struct IdMinter {
    issued: HashSet<String>,
}

impl IdMinter {
    pub(crate) fn mint<R: Rng>(&mut self, scheme: IdScheme, rng: &mut R) -> String {
        loop {
            let v = shaped(scheme, rng);
            debug_assert!(scheme.is_valid(&v));
            if self.issued.insert(v.clone()) {
                return v;
            }
        }
    }
}

fn chars<R: Rng>(rng: &mut R, alphabet: &[u8], n: usize) -> String {
    (0..n).map(|_| *alphabet.choose(rng).unwrap() as char).collect()
}

fn shaped<R: Rng>(scheme: IdScheme, rng: &mut R) -> String {
    match scheme {
        IdScheme::Isin => {
            let mut s = ISIN_COUNTRIES.choose(rng).unwrap().to_string();
            s.push_str(&chars(rng, ALNUM, 9));
            s.push(char::from(b'0' + rng.random_range(0..10u8)));
            s
        }
        IdScheme::Cusip => chars(rng, ALNUM, 9),
        IdScheme::Sedol => chars(rng, SEDOL_CHARS, 7),
        IdScheme::Valor => {
            let len = rng.random_range(6..=9);
            let mut s = char::from(b'1' + rng.random_range(0..9u8)).to_string();
            s.push_str(&chars(rng, b"0123456789", len - 1));
            s
        }
    }
}
