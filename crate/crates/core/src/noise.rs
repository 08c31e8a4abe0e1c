//! Truncated Karhunen-Loève sampling of a Q-Wiener process whose covariance
//! shares the sine eigenfunctions of the Dirichlet Laplacian.
//!
//! Randomness is counter-based: the increments of mode `ℓ` for trajectory `p`
//! are the first `N` draws of a ChaCha8 stream whose 256-bit key encodes
//! `(seed, p)` and whose stream id is `ℓ`. Gaussian variates come from the
//! ZIGNOR ziggurat of `rand_distr::StandardNormal`. Results therefore depend only
//! on `(seed, p, ℓ, N)`, never on thread count or evaluation order, and growing
//! the truncation level leaves existing rows untouched.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fem1d::FemSpace;

/// Covariance eigenvalues `γ_ℓ = ℓ^{-m}` truncated after `L` modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    decay: f64,
    truncation: usize,
}

impl NoiseModel {
    pub fn new(decay: f64, truncation: usize) -> Result<Self> {
        if !(decay >= 0.0 && decay.is_finite()) {
            return Err(Error::Domain {
                param: "m",
                value: decay,
                reason: "eigenvalue decay exponent must be finite and non-negative",
            });
        }
        if truncation == 0 {
            return Err(Error::Config("truncation level L must be at least 1".into()));
        }
        Ok(Self { decay, truncation })
    }

    /// Truncation `L = N_h`, the number of interior nodes of `space`.
    pub fn for_space(decay: f64, space: &FemSpace) -> Result<Self> {
        Self::new(decay, space.dim())
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `γ_ℓ` for `ℓ ≥ 1`.
    pub fn eigenvalue(&self, ell: usize) -> f64 {
        (ell as f64).powf(-self.decay)
    }

    pub fn is_trace_class(&self) -> bool {
        self.decay > 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub trajectory: u64,
}

impl StreamKey {
    pub fn new(seed: u64, trajectory: u64) -> Self {
        Self { seed, trajectory }
    }

    fn rng_for_mode(&self, ell: usize) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.trajectory.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(ell as u64);
        rng
    }
}

/// Brownian increments `Δβ_ℓ^k`, stored row-major with one row per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementMatrix {
    modes: usize,
    steps: usize,
    tau: f64,
    key: StreamKey,
    /// Product of all coarsening factors applied since sampling.
    coarsened_by: usize,
    data: Vec<f64>,
}

impl IncrementMatrix {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn coarsened_by(&self) -> usize {
        self.coarsened_by
    }

    /// Increments of mode `ell` (1-based), steps `1..=N`.
    pub fn row(&self, ell: usize) -> &[f64] {
        &self.data[(ell - 1) * self.steps..ell * self.steps]
    }

    /// `Δβ_ℓ^k` with 1-based `ell` and `k`.
    pub fn get(&self, ell: usize, k: usize) -> f64 {
        self.data[(ell - 1) * self.steps + (k - 1)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Builds a matrix from explicit row-major data, e.g. for deterministic tests.
    pub fn from_rows(modes: usize, steps: usize, tau: f64, key: StreamKey, data: Vec<f64>) -> Result<Self> {
        if modes == 0 || steps == 0 || data.len() != modes * steps {
            return Err(Error::Contract(format!(
                "{} values cannot fill a {modes}x{steps} increment matrix",
                data.len()
            )));
        }
        if !(tau > 0.0) {
            return Err(Error::Domain {
                param: "tau",
                value: tau,
                reason: "time step must be positive",
            });
        }
        Ok(Self {
            modes,
            steps,
            tau,
            key,
            coarsened_by: 1,
            data,
        })
    }

    pub fn zeros(modes: usize, steps: usize, tau: f64) -> Result<Self> {
        Self::from_rows(modes, steps, tau, StreamKey::new(0, 0), vec![0.0; modes * steps])
    }

    /// Binary dump: magic `SFNZ1`, then `L`, `N` (u64), `tau` (f64), `seed`,
    /// `trajectory` (u64), then the row-major increments; all little-endian.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.modes as u64).to_le_bytes())?;
        w.write_all(&(self.steps as u64).to_le_bytes())?;
        w.write_all(&self.tau.to_le_bytes())?;
        w.write_all(&self.key.seed.to_le_bytes())?;
        w.write_all(&self.key.trajectory.to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Io("not an increment dump (bad magic)".into()));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let modes = u64::from_le_bytes(next(&mut r)?) as usize;
        let steps = u64::from_le_bytes(next(&mut r)?) as usize;
        let tau = f64::from_le_bytes(next(&mut r)?);
        let seed = u64::from_le_bytes(next(&mut r)?);
        let trajectory = u64::from_le_bytes(next(&mut r)?);
        let len = modes
            .checked_mul(steps)
            .ok_or_else(|| Error::Io("increment dump dimensions overflow".into()))?;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f64::from_le_bytes(next(&mut r)?));
        }
        Self::from_rows(modes, steps, tau, StreamKey::new(seed, trajectory), data)
    }
}

const MAGIC: &[u8; 5] = b"SFNZ1";

/// Draws `L x N` increments `√τ ξ` for the model's truncation level.
pub fn sample_increments(model: &NoiseModel, steps: usize, tau: f64, key: StreamKey) -> Result<IncrementMatrix> {
    if steps == 0 {
        return Err(Error::Config("at least one time step is required".into()));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain {
            param: "tau",
            value: tau,
            reason: "time step must be positive and finite",
        });
    }
    let modes = model.truncation();
    let sd = tau.sqrt();
    let mut data = Vec::with_capacity(modes * steps);
    for ell in 1..=modes {
        let mut rng = key.rng_for_mode(ell);
        data.extend((0..steps).map(|_| sd * rng.sample::<f64, _>(StandardNormal)));
    }
    Ok(IncrementMatrix {
        modes,
        steps,
        tau,
        key,
        coarsened_by: 1,
        data,
    })
}

/// Sums blocks of `factor` consecutive increments: the same Brownian path seen
/// on a grid `factor` times coarser.
pub fn coarsen_increments(fine: &IncrementMatrix, factor: usize) -> Result<IncrementMatrix> {
    if factor == 0 || !fine.steps.is_multiple_of(factor) {
        return Err(Error::Config(format!(
            "cannot coarsen {} steps by a factor of {factor}",
            fine.steps
        )));
    }
    if factor == 1 {
        return Ok(fine.clone());
    }
    let steps = fine.steps / factor;
    let data = fine.data.chunks_exact(factor).map(|block| block.iter().sum()).collect();
    Ok(IncrementMatrix {
        modes: fine.modes,
        steps,
        tau: fine.tau * factor as f64,
        key: fine.key,
        coarsened_by: fine.coarsened_by * factor,
        data,
    })
}

/// Scaled sine loads `γ_ℓ^{1/2} (e_ℓ, φ_i)` for one space and noise model.
#[derive(Debug, Clone)]
pub struct NoiseProjector {
    dim: usize,
    modes: usize,
    /// row-major, one row of length `dim` per mode
    loads: Vec<f64>,
}

impl NoiseProjector {
    pub fn new(model: &NoiseModel, space: &FemSpace) -> Result<Self> {
        let modes = model.truncation();
        let dim = space.dim();
        let mut loads = Vec::with_capacity(modes * dim);
        for ell in 1..=modes {
            let scale = model.eigenvalue(ell).sqrt();
            loads.extend(space.sine_load(ell)?.into_iter().map(|v| scale * v));
        }
        Ok(Self { dim, modes, loads })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    fn check(&self, incs: &IncrementMatrix) -> Result<()> {
        if incs.modes < self.modes {
            return Err(Error::Contract(format!(
                "noise model needs {} modes but increments carry {}",
                self.modes, incs.modes
            )));
        }
        Ok(())
    }

    /// `g^k = Σ_{ℓ≤L} γ_ℓ^{1/2} Δβ_ℓ^k (e_ℓ, φ_i)`, the load vector of `P_h ΔW^k`.
    pub fn load(&self, incs: &IncrementMatrix, k: usize) -> Result<Vec<f64>> {
        self.check(incs)?;
        if k == 0 || k > incs.steps {
            return Err(Error::Contract(format!(
                "noise load requested at step {k}; valid steps are 1..={} (f^0 = 0 by convention)",
                incs.steps
            )));
        }
        let mut g = vec![0.0; self.dim];
        for ell in 1..=self.modes {
            let c = incs.get(ell, k);
            let row = &self.loads[(ell - 1) * self.dim..ell * self.dim];
            for (gi, li) in g.iter_mut().zip(row) {
                *gi += c * li;
            }
        }
        Ok(g)
    }

    /// Every `g^k`, `k = 1..=N`, as an `N x dim` row-major matrix.
    pub fn all_loads(&self, incs: &IncrementMatrix) -> Result<Vec<f64>> {
        self.check(incs)?;
        let (n, d) = (incs.steps, self.dim);
        let mut out = vec![0.0; n * d];
        for ell in 1..=self.modes {
            let row = &self.loads[(ell - 1) * d..ell * d];
            for (k, &c) in incs.row(ell).iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (o, li) in out[k * d..(k + 1) * d].iter_mut().zip(row) {
                    *o += c * li;
                }
            }
        }
        Ok(out)
    }
}

/// Single-step form of [`NoiseProjector::load`].
pub fn noise_load(model: &NoiseModel, incs: &IncrementMatrix, k: usize, space: &FemSpace) -> Result<Vec<f64>> {
    NoiseProjector::new(model, space)?.load(incs, k)
}
