//! Blind-mix sheets: shuffled presentations of real and artificial tiles
//! with a sealed answer key, for expert discrimination tests.

use super::manifest::ManifestRecord;
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    Real,
    Artificial,
}

impl Truth {
    pub fn as_str(&self) -> &'static str {
        match self {
            Truth::Real => "real",
            Truth::Artificial => "artificial",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Truth::Real),
            "artificial" => Ok(Truth::Artificial),
            other => Err(Error::InvalidParameter(format!("unknown truth '{other}'"))),
        }
    }
}

/// Shuffled presentation plus sealed key; the two are written to separate
/// files so the key can stay sealed during the test.
#[derive(Debug, Clone)]
pub struct BlindMixSheet {
    /// (display_id, tile_path) in presentation order.
    pub presentation: Vec<(String, String)>,
    /// (display_id, truth) — the sealed key.
    pub key: Vec<(String, Truth)>,
    pub seed: u64,
}

/// Samples `n_each` tiles from each pool without replacement, shuffles the
/// union, and assigns anonymized display ids in presentation order. Fully
/// reproducible from the seed.
pub fn blind_mix(
    real: &[ManifestRecord],
    artificial: &[ManifestRecord],
    n_each: usize,
    seed: u64,
) -> Result<BlindMixSheet> {
    if real.len() < n_each {
        return Err(Error::InsufficientTiles {
            which: "real",
            needed: n_each,
            got: real.len(),
        });
    }
    if artificial.len() < n_each {
        return Err(Error::InsufficientTiles {
            which: "artificial",
            needed: n_each,
            got: artificial.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<(Truth, &ManifestRecord)> = Vec::with_capacity(2 * n_each);
    for (truth, records) in [(Truth::Real, real), (Truth::Artificial, artificial)] {
        let mut idx: Vec<usize> = (0..records.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(n_each);
        pool.extend(idx.into_iter().map(|i| (truth, &records[i])));
    }
    pool.shuffle(&mut rng);

    let width = pool.len().to_string().len().max(3);
    let mut presentation = Vec::with_capacity(pool.len());
    let mut key = Vec::with_capacity(pool.len());
    for (i, (truth, record)) in pool.into_iter().enumerate() {
        let display_id = format!("item_{i:0width$}");
        presentation.push((display_id.clone(), record.tile_path.clone()));
        key.push((display_id, truth));
    }
    Ok(BlindMixSheet {
        presentation,
        key,
        seed,
    })
}

/// Fraction of answers matching the sealed key. Unanswered items count as
/// wrong.
pub fn score_answers(key: &[(String, Truth)], answers: &HashMap<String, Truth>) -> f64 {
    if key.is_empty() {
        return 0.0;
    }
    let correct = key
        .iter()
        .filter(|(id, truth)| answers.get(id) == Some(truth))
        .count();
    correct as f64 / key.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::manifest::Split;
    use crate::imagecore::StainLabel;

    fn records(prefix: &str, n: usize) -> Vec<ManifestRecord> {
        (0..n)
            .map(|i| ManifestRecord {
                id: format!("{prefix}{i}"),
                source_image_id: None,
                split: Split::Val,
                stain_label: StainLabel::He,
                tile_path: format!("{prefix}{i}.png"),
                transfer_flag: None,
            })
            .collect()
    }

    #[test]
    fn presentation_has_twice_n_each() {
        let sheet = blind_mix(&records("r", 250), &records("a", 250), 200, 7).unwrap();
        assert_eq!(sheet.presentation.len(), 400);
        assert_eq!(sheet.key.len(), 400);
        let reals = sheet.key.iter().filter(|(_, t)| *t == Truth::Real).count();
        assert_eq!(reals, 200);
    }

    #[test]
    fn same_seed_gives_identical_sheets() {
        let a = blind_mix(&records("r", 30), &records("a", 30), 20, 99).unwrap();
        let b = blind_mix(&records("r", 30), &records("a", 30), 20, 99).unwrap();
        assert_eq!(a.presentation, b.presentation);
        assert_eq!(a.key, b.key);
        let c = blind_mix(&records("r", 30), &records("a", 30), 20, 100).unwrap();
        assert_ne!(a.presentation, c.presentation);
    }

    #[test]
    fn scoring_key_against_itself_and_inverted() {
        let sheet = blind_mix(&records("r", 10), &records("a", 10), 5, 3).unwrap();
        let own: HashMap<String, Truth> = sheet.key.iter().cloned().collect();
        assert_eq!(score_answers(&sheet.key, &own), 1.0);
        let inverted: HashMap<String, Truth> = sheet
            .key
            .iter()
            .map(|(id, t)| {
                let flipped = match t {
                    Truth::Real => Truth::Artificial,
                    Truth::Artificial => Truth::Real,
                };
                (id.clone(), flipped)
            })
            .collect();
        assert_eq!(score_answers(&sheet.key, &inverted), 0.0);
    }

    #[test]
    fn insufficient_pool_is_an_error() {
        let err = blind_mix(&records("r", 3), &records("a", 10), 5, 1).unwrap_err();
        assert!(matches!(err, Error::InsufficientTiles { which: "real", .. }));
    }
}
