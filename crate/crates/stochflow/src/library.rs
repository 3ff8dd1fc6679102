//! Cached KL bases and the persisted global velocity library.

use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use stochflow_core::field::{channelized_mean, compute_kle_separable, realize_field, KLBasis, Ridge};
use stochflow_core::pressure::{solve_singlephase_global, VelocityLibrary};
use stochflow_core::sparsegrid::Rule1D;

use crate::config::{ExperimentConfig, MeanField};
use crate::flow::FlowSetup;
use crate::io;

fn digest(parts: &[String]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

/// Content key of the KL basis a config asks for.
pub fn klb_key(config: &ExperimentConfig) -> String {
    digest(&[
        "klb-v1".into(),
        format!("{:?}", config.grid.fine),
        format!("{:?}", config.grid.domain),
        format!("{:?}", config.covariance),
        config.kle.n_terms.to_string(),
        format!("{:?}", config.kle.mean),
    ])
}

pub fn build_klb(config: &ExperimentConfig) -> Result<KLBasis> {
    let grid = config.fine_grid()?;
    let klb = compute_kle_separable(&grid, &config.covariance_spec()?, config.kle.n_terms)?;
    Ok(match config.kle.mean {
        MeanField::Zero => klb,
        MeanField::Channelized { base } => klb.with_mean_field(channelized_mean(&grid, base, &Ridge::default_channels())?)?,
    })
}

/// The KL basis, read from `cache` when present and stored there otherwise.
/// The flag tells whether it came from the cache.
pub fn load_or_build_klb(config: &ExperimentConfig, cache: Option<&Path>) -> Result<(KLBasis, bool)> {
    let path = cache.map(|c| c.join("klb").join(format!("{}.klb", klb_key(config))));
    if let Some(p) = path.as_deref().filter(|p| p.exists()) {
        match io::read_klb(p) {
            Ok(klb) => return Ok((klb, true)),
            Err(e) => log::warn!("ignoring unreadable cache file: {e:#}"),
        }
    }
    let klb = build_klb(config)?;
    if let Some(p) = &path {
        io::write_klb(p, &klb)?;
    }
    Ok((klb, false))
}

/// The velocity library together with its on-disk home and solve counts.
#[derive(Debug)]
pub struct LibraryStore {
    library: VelocityLibrary,
    dir: Option<PathBuf>,
    solves: u64,
    loaded: u64,
}

impl LibraryStore {
    /// Opens the library of `setup` at `anchor`, solving or loading the
    /// anchor velocity.
    pub fn open(setup: &FlowSetup, anchor: &[f64], klb_key: &str, cache: Option<&Path>) -> Result<Self> {
        let key = digest(&[
            "library-v1".into(),
            klb_key.into(),
            format!("{:?}", setup.klb.grid()),
            format!("{:?}", setup.wells),
            format!("{:?}", anchor.iter().map(|x| x.to_bits()).collect::<Vec<_>>()),
        ]);
        let dir = cache.map(|c| c.join("library").join(key));
        let mut store = LibraryStore {
            library: VelocityLibrary::new(anchor.to_vec(), 0, Vec::new()),
            dir,
            solves: 0,
            loaded: 0,
        };
        let u0 = match store.load("anchor.vec") {
            Some(u) => u,
            None => {
                let u = solve_line_point(setup, anchor, None).context("library solve at the anchor")?;
                store.save("anchor.vec", &u)?;
                u
            }
        };
        store.library = VelocityLibrary::new(anchor.to_vec(), 0, u0);
        Ok(store)
    }

    fn load(&mut self, name: &str) -> Option<Vec<f64>> {
        let p = self.dir.as_ref()?.join(name);
        if !p.exists() {
            return None;
        }
        match io::read_vector(&p) {
            Ok(v) => {
                self.loaded += 1;
                Some(v)
            }
            Err(e) => {
                log::warn!("ignoring unreadable cache file: {e:#}");
                None
            }
        }
    }

    fn save(&mut self, name: &str, v: &[f64]) -> Result<()> {
        self.solves += 1;
        match &self.dir {
            Some(d) => io::write_vector(&d.join(name), v),
            None => Ok(()),
        }
    }

    pub fn library(&self) -> &VelocityLibrary {
        &self.library
    }

    /// Single-phase solves performed so far, the anchor included.
    pub fn solves(&self) -> u64 {
        self.solves
    }

    /// Entries read from the cache.
    pub fn loaded(&self) -> u64 {
        self.loaded
    }

    /// Makes sure every `(dimension, level)` line is present. Missing
    /// entries come from the cache or are solved in parallel.
    pub fn ensure(&mut self, setup: &FlowSetup, needs: &[(usize, u32)]) -> Result<()> {
        let level = needs.iter().map(|n| n.1).max().unwrap_or(0).max(self.library.level());
        let anchor = self.library.anchor().to_vec();
        let mut wanted: Vec<(usize, f64)> = Vec::new();
        for &(d, l) in needs {
            for &x in Rule1D::new(l).nodes() {
                if x != anchor[d] && self.library.get(d, x).is_none() && !wanted.contains(&(d, x)) {
                    wanted.push((d, x));
                }
            }
        }
        wanted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let mut found = Vec::new();
        let mut missing = Vec::new();
        for (d, x) in wanted {
            match self.load(&entry_name(d, x)) {
                Some(v) => found.push((d, x, v)),
                None => missing.push((d, x)),
            }
        }
        let solved: Vec<Result<Vec<f64>>> = missing
            .par_iter()
            .map(|&(d, x)| {
                solve_line_point(setup, &anchor, Some((d, x)))
                    .with_context(|| format!("library solve for dimension {d} at node {x}"))
            })
            .collect();
        for (&(d, x), v) in missing.iter().zip(solved) {
            let v = v?;
            self.save(&entry_name(d, x), &v)?;
            found.push((d, x, v));
        }

        let mut lib = VelocityLibrary::new(anchor, level, self.library.anchor_flux().to_vec());
        for (d, x, v) in self.library.entries() {
            lib.insert(d, x, v.to_vec());
        }
        for (d, x, v) in found {
            lib.insert(d, x, v);
        }
        self.library = lib;
        Ok(())
    }
}

fn entry_name(d: usize, x: f64) -> String {
    format!("d{d:04}_{:016x}.vec", (x + 0.0).to_bits())
}

fn solve_line_point(setup: &FlowSetup, anchor: &[f64], at: Option<(usize, f64)>) -> Result<Vec<f64>> {
    let mut theta = anchor.to_vec();
    if let Some((d, x)) = at {
        theta[d] = x;
    }
    let perm = realize_field(&setup.klb, &theta)?;
    Ok(solve_singlephase_global(setup.grid(), &perm, &setup.source)?.flux)
}
