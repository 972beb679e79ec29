//! Labeled corpora of composed layouts with exact costs, stored as JSONL.
//!
//! The first line is a header carrying everything needed to regenerate the
//! corpus; each following line is one [`LabeledConfig`].

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array_factor::{layout_cost, CostParams, GridSpec, UVGrid};
use crate::error::{Error, Result};
use crate::geometry::{compose_array, Aperture, Element, ElementLayout, GenerationConfig, SubArraySpec};

pub const FORMAT_VERSION: u32 = 1;

/// Draws allowed per sample before generation gives up.
pub const MAX_REDRAWS: u32 = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledConfig {
    pub config_id: u64,
    /// Seed of the sample's private RNG stream.
    pub seed: u64,
    pub true_cost: f64,
    pub aperture: Aperture,
    pub specs: Vec<SubArraySpec>,
    pub elements: Vec<[f64; 2]>,
}

impl LabeledConfig {
    pub fn layout(&self) -> Result<ElementLayout> {
        let elements = self.elements.iter().map(|&[y, z]| Element::new(y, z)).collect();
        ElementLayout::new(self.aperture, elements)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u32,
    pub gen_config: GenerationConfig,
    pub grid: GridSpec,
    pub p: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub configs: Vec<LabeledConfig>,
}

/// SplitMix64 finalizer.
fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-sample seed: `mix64(mix64(master) + golden * (index + 1))`. Depends only
/// on the pair, so samples can be generated in any order.
pub fn sample_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1))))
}

fn generate_one(index: u64, gen: &GenerationConfig, grid: &UVGrid, params: CostParams) -> Result<LabeledConfig> {
    let seed = sample_seed(gen.rng_seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REDRAWS {
        let specs = gen.draw_specs(&mut rng);
        let layout = match compose_array(&specs, gen.seam_min_distance, gen.aperture) {
            Ok(l) => l,
            Err(Error::EmptyLayout) => continue,
            Err(e) => return Err(e),
        };
        let true_cost = layout_cost(&layout, grid, params)?;
        return Ok(LabeledConfig {
            config_id: index,
            seed,
            true_cost,
            aperture: gen.aperture,
            specs,
            elements: layout.elements().iter().map(|e| [e.y, e.z]).collect(),
        });
    }
    Err(Error::InvalidConfig(format!(
        "sample {index} produced an empty layout {MAX_REDRAWS} times"
    )))
}

/// Generates `n` labeled configurations. `workers = None` uses the global
/// rayon pool; the output does not depend on the worker count.
pub fn generate_dataset(
    n: usize,
    gen: &GenerationConfig,
    grid: &UVGrid,
    params: CostParams,
    workers: Option<usize>,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("dataset size must be at least 1".into()));
    }
    gen.validate()?;
    params.validate()?;
    let run = || -> Result<Vec<LabeledConfig>> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| generate_one(i, gen, grid, params))
            .collect()
    };
    let configs = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(Dataset {
        header: DatasetHeader {
            version: FORMAT_VERSION,
            gen_config: gen.clone(),
            grid: grid.spec(),
            p: params.p,
        },
        configs,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn grid(&self) -> Result<UVGrid> {
        UVGrid::from_spec(self.header.grid)
    }

    pub fn cost_params(&self) -> CostParams {
        CostParams { p: self.header.p }
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for c in &self.configs {
            serde_json::to_writer(&mut w, c)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Format("dataset file is empty".into()))??;
        let header: DatasetHeader = serde_json::from_str(&first)?;
        if header.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported dataset version {}", header.version)));
        }
        UVGrid::from_spec(header.grid)?;
        let mut configs = Vec::new();
        let mut ids = HashSet::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let c: LabeledConfig = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))?;
            if !ids.insert(c.config_id) {
                return Err(Error::Format(format!("duplicate config_id {}", c.config_id)));
            }
            c.layout()?;
            configs.push(c);
        }
        Ok(Self { header, configs })
    }

    /// Seeded shuffle, then the first `round(train_fraction * n)` entries
    /// become the training side.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("train fraction {train_fraction} not in (0, 1)")));
        }
        let n_train = (train_fraction * self.len() as f64).round() as usize;
        if n_train == 0 || n_train == self.len() {
            return Err(Error::InvalidConfig(format!(
                "splitting {} configs at {train_fraction} leaves one side empty",
                self.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let pick = |idx: &[usize]| Dataset {
            header: self.header.clone(),
            configs: idx.iter().map(|&i| self.configs[i].clone()).collect(),
        };
        Ok((pick(&order[..n_train]), pick(&order[n_train..])))
    }
}

/// The `k` most negative costs, best first; ties go to the smaller id.
pub fn select_top_k(ds: &Dataset, k: usize) -> Result<Vec<LabeledConfig>> {
    if k > ds.len() {
        return Err(Error::InvalidConfig(format!("top-{k} requested from {} configs", ds.len())));
    }
    let mut sorted: Vec<&LabeledConfig> = ds.configs.iter().collect();
    sorted.sort_by(|a, b| {
        a.true_cost
            .total_cmp(&b.true_cost)
            .then(a.config_id.cmp(&b.config_id))
    });
    Ok(sorted.into_iter().take(k).cloned().collect())
}
