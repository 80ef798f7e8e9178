//! Seeded instance generation and the instance file format.
//!
//! # Generator
//!
//! The stream is ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`),
//! consumed one `u64` at a time in this order:
//!
//! 1. for each node `i = 0..n`: the x coordinate, then the y coordinate;
//! 2. all `n` demands;
//! 3. all `n` fixed costs.
//!
//! A real in `[lo, hi]` is `lo + (hi - lo) * ((w >> 11) as f64 * 2^-53)`.
//! An integer in `{lo, ..., hi}` with `s = hi - lo + 1` draws words until one
//! falls below `s * floor(2^64 / s)` and returns `lo + w mod s`.
//!
//! # File format
//!
//! JSON with fields `version` (currently 1), `n`, `failure_prob`, `coords`
//! (array of `[x, y]`), `demands`, `fixed_costs` and an optional `metadata`
//! object (seed and generator parameters). Floats are written in shortest
//! round-trip form, so reading a written file reproduces every value exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n: usize,
    pub coord_range: (f64, f64),
    pub demand_range: (u64, u64),
    pub fixed_cost_range: (u64, u64),
    pub failure_prob: f64,
    pub seed: u64,
}

impl GenParams {
    /// Default ranges: unit-square coordinates, demands in `{0..=1000}`,
    /// fixed costs in `{500..=1500}`, failure probability 0.05.
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            coord_range: (0.0, 1.0),
            demand_range: (0, 1000),
            fixed_cost_range: (500, 1500),
            failure_prob: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::usage("instance size n must be at least 1"));
        }
        let (lo, hi) = self.coord_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::usage(format!(
                "coordinate range [{lo}, {hi}] must be a non-empty sub-interval of [0, 1]"
            )));
        }
        if self.demand_range.0 > self.demand_range.1 {
            return Err(Error::usage("demand range is empty"));
        }
        let (flo, fhi) = self.fixed_cost_range;
        if flo > fhi || flo == 0 {
            return Err(Error::usage(
                "fixed cost range must be non-empty with a positive lower bound",
            ));
        }
        if !(0.0..1.0).contains(&self.failure_prob) {
            return Err(Error::usage(format!(
                "failure probability {} outside [0, 1)",
                self.failure_prob
            )));
        }
        Ok(())
    }
}

struct Draws(ChaCha8Rng);

impl Draws {
    fn real(&mut self, lo: f64, hi: f64) -> f64 {
        let unit = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * unit
    }

    fn int(&mut self, lo: u64, hi: u64) -> u64 {
        let span = (hi - lo) as u128 + 1;
        let limit = span * ((1u128 << 64) / span);
        loop {
            let w = self.0.next_u64() as u128;
            if w < limit {
                return lo + (w % span) as u64;
            }
        }
    }
}

pub fn generate_instance(params: &GenParams) -> Result<Instance> {
    params.validate()?;
    let n = params.n;
    let mut draws = Draws(ChaCha8Rng::seed_from_u64(params.seed));
    let (clo, chi) = params.coord_range;
    let coords: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let x = draws.real(clo, chi);
            let y = draws.real(clo, chi);
            [x, y]
        })
        .collect();
    let (dlo, dhi) = params.demand_range;
    let demands = (0..n).map(|_| draws.int(dlo, dhi)).collect();
    let (flo, fhi) = params.fixed_cost_range;
    let fixed_costs = (0..n).map(|_| draws.int(flo, fhi)).collect();
    Instance::new(coords, demands, fixed_costs, params.failure_prob)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GenParams>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    version: u32,
    n: usize,
    failure_prob: f64,
    coords: Vec<[f64; 2]>,
    demands: Vec<u64>,
    fixed_costs: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<Metadata>,
}

#[derive(Debug, Deserialize)]
struct VersionProbe {
    version: Option<u32>,
}

/// Serialized instance text (pretty JSON, trailing newline).
pub fn instance_to_string(instance: &Instance, metadata: Option<&Metadata>) -> Result<String> {
    let file = InstanceFile {
        version: FORMAT_VERSION,
        n: instance.n(),
        failure_prob: instance.failure_prob(),
        coords: instance.coords().to_vec(),
        demands: instance.demands().to_vec(),
        fixed_costs: instance.fixed_costs().to_vec(),
        metadata: metadata.cloned(),
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

pub fn write_instance_to(
    instance: &Instance,
    metadata: Option<&Metadata>,
    mut writer: impl Write,
) -> Result<()> {
    let s = instance_to_string(instance, metadata)?;
    writer
        .write_all(s.as_bytes())
        .map_err(|e| Error::io("<writer>", e))
}

pub fn write_instance(
    instance: &Instance,
    metadata: Option<&Metadata>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let s = instance_to_string(instance, metadata)?;
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Parses instance text. `source_name` labels parse errors.
pub fn parse_instance(text: &str, source_name: &str) -> Result<(Instance, Option<Metadata>)> {
    let parse_err = |message: String| Error::Parse {
        source_name: source_name.to_string(),
        message,
    };
    let probe: VersionProbe =
        serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    match probe.version {
        None => return Err(parse_err("missing field `version`".into())),
        Some(v) if v != FORMAT_VERSION => {
            return Err(Error::VersionMismatch {
                found: v,
                expected: FORMAT_VERSION,
            })
        }
        Some(_) => {}
    }
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    for (field, len) in [
        ("coords", file.coords.len()),
        ("demands", file.demands.len()),
        ("fixed_costs", file.fixed_costs.len()),
    ] {
        if len != file.n {
            return Err(parse_err(format!(
                "field `{field}` has {len} entries but n = {}",
                file.n
            )));
        }
    }
    let instance = Instance::new(file.coords, file.demands, file.fixed_costs, file.failure_prob)
        .map_err(|e| parse_err(e.to_string()))?;
    Ok((instance, file.metadata))
}

pub fn read_instance_from(mut reader: impl Read, source_name: &str) -> Result<Instance> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::io(source_name, e))?;
    parse_instance(&text, source_name).map(|(inst, _)| inst)
}

/// Reads an instance file; the path `-` reads standard input.
pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    read_instance_with_metadata(path).map(|(inst, _)| inst)
}

pub fn read_instance_with_metadata(path: impl AsRef<Path>) -> Result<(Instance, Option<Metadata>)> {
    let path = path.as_ref();
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::io("<stdin>", e))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| Error::io(path, e))?
    };
    parse_instance(&text, &path.display().to_string())
}
