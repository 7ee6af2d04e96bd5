use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A reference utterance usable for voice cloning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Donor {
    pub utterance_id: String,
    pub speaker_id: String,
    pub path: String,
}

/// Donor utterances drawn uniformly without replacement.
#[derive(Debug, Clone)]
pub struct VoicePool {
    donors: Vec<Donor>,
    remaining: Vec<usize>,
    drawn: usize,
}

impl VoicePool {
    pub fn new(donors: Vec<Donor>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &donors {
            if !seen.insert(d.utterance_id.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate donor utterance id {:?}",
                    d.utterance_id
                )));
            }
        }
        Ok(VoicePool {
            remaining: (0..donors.len()).collect(),
            donors,
            drawn: 0,
        })
    }

    /// Reads a JSONL donor manifest (`utterance_id`, `speaker_id`, `path`).
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut donors = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            donors.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Self::new(donors)
    }

    pub fn len(&self) -> usize {
        self.donors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.donors.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.remaining.len()
    }

    /// Draws an unconsumed donor uniformly at random and marks it consumed.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<&Donor> {
        if self.remaining.is_empty() {
            return Err(Error::PoolExhausted(self.drawn));
        }
        let slot = rng.gen_range(0..self.remaining.len());
        let idx = self.remaining.swap_remove(slot);
        self.drawn += 1;
        Ok(&self.donors[idx])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn pool(n: usize) -> VoicePool {
        VoicePool::new(
            (0..n)
                .map(|i| Donor {
                    utterance_id: format!("u{i}"),
                    speaker_id: format!("s{}", i / 2),
                    path: format!("voices/u{i}.wav"),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exhaustive_draw_is_a_permutation() {
        let mut p = pool(3);
        let mut rng = seed::rng(1);
        let mut ids: Vec<String> = (0..3).map(|_| p.sample(&mut rng).unwrap().utterance_id.clone()).collect();
        ids.sort();
        assert_eq!(ids, ["u0", "u1", "u2"]);
        assert!(matches!(p.sample(&mut rng), Err(Error::PoolExhausted(3))));
    }

    #[test]
    fn fixed_seed_gives_identical_sequence() {
        let draw = |s| {
            let mut p = pool(10);
            let mut rng = seed::rng(s);
            (0..10).map(|_| p.sample(&mut rng).unwrap().utterance_id.clone()).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn first_draw_frequencies_are_uniform() {
        // 10⁴ single draws from fresh size-4 pools; each count ~ Binomial(10⁴, 1/4).
        let trials = 10_000;
        let mut rng = seed::rng(2024);
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            let mut p = pool(4);
            let id = &p.sample(&mut rng).unwrap().utterance_id;
            counts[id[1..].parse::<usize>().unwrap()] += 1;
        }
        let expect = trials as f64 / 4.0;
        let sigma = (trials as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - expect).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let d = Donor {
            utterance_id: "x".into(),
            speaker_id: "s".into(),
            path: "p".into(),
        };
        assert!(VoicePool::new(vec![d.clone(), d]).is_err());
    }
}
