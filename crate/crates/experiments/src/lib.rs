//! Figure sweeps, training and benchmarking on top of `noma-secrecy`.

pub mod config;
pub mod intercept;
pub mod learn;
pub mod selftest;
pub mod table;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 1 for bad input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) | RunError::Io { .. } => 1,
            RunError::Numerical(_) => 2,
        }
    }
}

/// Independent random streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedTag {
    TrainData = 1,
    Init = 2,
    Shuffle = 3,
    TestData = 4,
    Random = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sub_seed(master: u64, tag: SeedTag) -> u64 {
    splitmix64(master ^ splitmix64(tag as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_seeds_are_distinct() {
        let tags = [SeedTag::TrainData, SeedTag::Init, SeedTag::Shuffle, SeedTag::TestData, SeedTag::Random];
        let mut seeds: Vec<u64> = tags.iter().map(|&t| sub_seed(1, t)).collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 5);
        assert_ne!(sub_seed(1, SeedTag::Init), sub_seed(2, SeedTag::Init));
    }
}
