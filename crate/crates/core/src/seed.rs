//! Seed derivation for generated instances and benchmark cells.
//!
//! A derived seed is a SplitMix64 chain over the base seed and each part:
//! `h = sm(base)`, then `h = sm(h ^ part)` for every part, where `sm` is the
//! SplitMix64 output function (add `0x9E3779B97F4A7C15`, then the two
//! xor-shift-multiply rounds). Solver labels enter as their 64-bit FNV-1a hash,
//! so a cell's seed depends on the solver's name and not on its position in a
//! plan.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |h, &part| splitmix64(h ^ part))
}

/// 64-bit FNV-1a.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed for run `run` of solver `solver` on the `instance`-th instance.
pub fn cell_seed(base: u64, instance: usize, run: usize, solver: &str) -> u64 {
    derive(base, &[instance as u64, run as u64, label_hash(solver)])
}

/// Seed of the `index`-th instance produced by one `gen` invocation.
pub fn instance_seed(base: u64, index: usize) -> u64 {
    derive(base, &[index as u64])
}
