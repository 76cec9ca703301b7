use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Interaction, Provenance, VariationError, VariationPath, VariationSpec};

pub const DEFAULT_ENUMERATION_LIMIT: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    UniformRandom,
    Boundary,
}

/// `|interaction_set|^resolution`, or `None` when it does not fit in a u128.
pub fn path_count(spec: &VariationSpec) -> Option<u128> {
    let exp = u32::try_from(spec.resolution).ok()?;
    (spec.interaction_set.len() as u128).checked_pow(exp)
}

/// Every path through the tree, in lexicographic order of interaction
/// indices (first slot most significant).
pub fn enumerate_paths(spec: &VariationSpec, limit: u64) -> Result<Vec<VariationPath>, VariationError> {
    spec.validate()?;
    let count = match path_count(spec) {
        Some(c) if c <= limit as u128 => c as usize,
        Some(c) => return Err(VariationError::CombinatorialOverflow { count: c.to_string(), limit }),
        None => {
            return Err(VariationError::CombinatorialOverflow {
                count: format!("{}^{}", spec.interaction_set.len(), spec.resolution),
                limit,
            })
        }
    };
    let b = spec.interaction_set.len();
    let d = spec.resolution;
    let mut out = Vec::with_capacity(count);
    let mut digits = vec![0usize; d];
    for _ in 0..count {
        out.push(VariationPath {
            interactions: digits.iter().map(|&i| spec.interaction_set[i]).collect(),
            provenance: Provenance::Exhaustive,
        });
        // odometer increment, last slot fastest
        for pos in (0..d).rev() {
            digits[pos] += 1;
            if digits[pos] < b {
                break;
            }
            digits[pos] = 0;
        }
    }
    Ok(out)
}

/// Selects a subset of paths.
///
/// `UniformRandom` draws `n` paths; path `i` depends only on `(spec.seed, i)`.
/// `Boundary` returns the constant paths (one per interaction), capped at `n`.
pub fn sample_paths(spec: &VariationSpec, strategy: SamplingStrategy, n: usize) -> Vec<VariationPath> {
    match strategy {
        SamplingStrategy::Boundary => spec
            .interaction_set
            .iter()
            .take(n)
            .map(|&i| VariationPath { interactions: vec![i; spec.resolution], provenance: Provenance::Boundary })
            .collect(),
        SamplingStrategy::UniformRandom => (0..n as u64)
            .map(|index| {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(index);
                let interactions = (0..spec.resolution)
                    .map(|_| spec.interaction_set[rng.random_range(0..spec.interaction_set.len())])
                    .collect();
                VariationPath { interactions, provenance: Provenance::Sampled { seed: spec.seed, index } }
            })
            .collect(),
    }
}

/// One line per path.
pub fn format_paths(paths: &[VariationPath]) -> String {
    let mut out = String::new();
    for p in paths {
        out.push_str(&p.to_line());
        out.push('\n');
    }
    out
}

/// Reads the one-line-per-path format; blank lines and `#` comments are skipped.
pub fn parse_paths(text: &str, provenance: Provenance) -> Result<Vec<VariationPath>, VariationError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let interactions = line
            .split(',')
            .map(|tok| tok.parse::<Interaction>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|message| VariationError::Parse { line: i + 1, message })?;
        out.push(VariationPath { interactions, provenance });
    }
    Ok(out)
}
