//! Random chains of identical two-delta traps: reproducible sampling,
//! ln |t|² ensembles, and Lyapunov (inverse localization length) estimates.
//!
//! Each chain places n copies of the same trap with independent uniform
//! gaps between them.  At a generic energy the chain localizes — ln |t|²
//! falls linearly with n — but at the single trap's resonance wavenumbers
//! every copy is individually transparent, so the whole chain transmits
//! perfectly no matter how disordered the spacing: the transparent energies
//! form the *inverted* spectrum of the localized background.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::resonance::{phase_condition_roots, DoubleBarrier, ResonanceError};
use crate::scattering::{DeltaSpike, PotentialArray, ScatteringError, Wavenumber};

/// Errors from chain sampling and ensemble statistics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DisorderError {
    #[error("trap strength must be positive and finite, got {0}")]
    InvalidTrapStrength(f64),
    #[error("trap separation must be positive and finite, got {0}")]
    InvalidTrapSeparation(f64),
    #[error("gap bounds must satisfy 0 <= gapMin <= gapMax and gapMax > 0, got [{0}, {1}]")]
    InvalidGapBounds(f64, f64),
    #[error("a chain needs at least one trap")]
    NoTraps,
    #[error("need at least {need} realizations, got {got}")]
    TooFewRealizations { got: usize, need: usize },
    #[error("trap-count list must be non-empty and strictly increasing from at least 1")]
    InvalidLengthList,
    #[error("a Lyapunov fit needs at least 3 chain lengths, got {0}")]
    TooFewLengths(usize),
    #[error(transparent)]
    Resonance(#[from] ResonanceError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

pub type DisorderResult<T> = Result<T, DisorderError>;

/// Names the exact pseudo-random scheme behind [`sample_trap_array`], for
/// embedding in output manifests: realization i of master seed s draws its
/// gaps from ChaCha8 seeded with the i-th output of the SplitMix64 stream
/// started at s.  Any change to the scheme must change this string.
pub const GENERATOR_IDENTITY: &str = "chacha8+splitmix64-substreams/v1";

/// The n-th output (0-indexed) of the SplitMix64 stream seeded with
/// `master` — a cheap, well-separated per-realization seed that can be
/// evaluated independently for any index, so ensembles may grow without
/// re-drawing earlier realizations.
pub fn splitmix64_nth(master: u64, n: u64) -> u64 {
    let mut z = master.wrapping_add((n.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A disordered chain recipe: n identical traps (strength V₀, internal
/// separation L) with independent gaps drawn uniformly from
/// (gapMin, gapMax] between consecutive traps.
///
/// The gap draw is half-open at the bottom so gapMin = 0 can never place
/// two spikes on top of each other; gapMin = gapMax gives the periodic
/// lattice (the draw is still consumed, keeping streams aligned).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderConfig {
    trap_strength: f64,
    trap_separation: f64,
    gap_min: f64,
    gap_max: f64,
    n_traps: usize,
}

impl DisorderConfig {
    pub fn new(
        trap_strength: f64,
        trap_separation: f64,
        gap_min: f64,
        gap_max: f64,
        n_traps: usize,
    ) -> DisorderResult<Self> {
        if !(trap_strength > 0.0 && trap_strength.is_finite()) {
            return Err(DisorderError::InvalidTrapStrength(trap_strength));
        }
        if !(trap_separation > 0.0 && trap_separation.is_finite()) {
            return Err(DisorderError::InvalidTrapSeparation(trap_separation));
        }
        if !(gap_min >= 0.0 && gap_min <= gap_max && gap_max > 0.0 && gap_max.is_finite()) {
            return Err(DisorderError::InvalidGapBounds(gap_min, gap_max));
        }
        if n_traps == 0 {
            return Err(DisorderError::NoTraps);
        }
        Ok(Self {
            trap_strength,
            trap_separation,
            gap_min,
            gap_max,
            n_traps,
        })
    }

    pub fn trap_strength(&self) -> f64 {
        self.trap_strength
    }

    pub fn trap_separation(&self) -> f64 {
        self.trap_separation
    }

    pub fn gap_min(&self) -> f64 {
        self.gap_min
    }

    pub fn gap_max(&self) -> f64 {
        self.gap_max
    }

    pub fn n_traps(&self) -> usize {
        self.n_traps
    }

    /// The same recipe with a different chain length.  Because gaps are
    /// drawn sequentially, the shorter chain of a given realization is a
    /// prefix of the longer one.
    pub fn with_n_traps(&self, n_traps: usize) -> DisorderResult<Self> {
        if n_traps == 0 {
            return Err(DisorderError::NoTraps);
        }
        Ok(Self { n_traps, ..*self })
    }

    /// Mean center-to-center trap distance, L + (gapMin + gapMax)/2 —
    /// converts per-trap decay rates into per-length ones.
    pub fn mean_trap_period(&self) -> f64 {
        self.trap_separation + 0.5 * (self.gap_min + self.gap_max)
    }
}

/// Realization `realization_index` of the chain described by `config`,
/// reproducibly: the same (config, seed, index) triple always yields the
/// bit-identical array, regardless of which other realizations were drawn.
///
/// The first trap starts at the origin; trap i+1 starts gapᵢ beyond the end
/// of trap i, with gapᵢ the i-th draw of the realization's own ChaCha8
/// stream (see [`GENERATOR_IDENTITY`]).
pub fn sample_trap_array(
    config: &DisorderConfig,
    master_seed: u64,
    realization_index: u64,
) -> PotentialArray {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64_nth(master_seed, realization_index));
    let mut spikes = Vec::with_capacity(2 * config.n_traps);
    let mut x = 0.0_f64;
    for i in 0..config.n_traps {
        spikes.push(DeltaSpike::new(x, config.trap_strength).expect("config validated"));
        spikes.push(
            DeltaSpike::new(x + config.trap_separation, config.trap_strength)
                .expect("config validated"),
        );
        if i + 1 < config.n_traps {
            let u: f64 = rng.gen(); // in [0, 1)
            let gap = config.gap_max - u * (config.gap_max - config.gap_min);
            x += config.trap_separation + gap;
        }
    }
    PotentialArray::new(spikes).expect("gaps are strictly positive")
}

/// ln |t(k)|² of an array, safe for chains far too opaque for |t|² itself
/// (the value comes off the scaled transfer matrix, never from an
/// underflowing amplitude).  Clamped to 0 because |t|² ≤ 1 physically.
pub fn log_transmission(array: &PotentialArray, k: Wavenumber) -> f64 {
    (-2.0 * array.transfer_matrix(k).ln_abs_m22()).min(0.0)
}

/// Ensemble moments of ln |t|² at one chain length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsemblePoint {
    pub n_traps: usize,
    pub mean_ln_t: f64,
    pub var_ln_t: f64,
}

/// Ensemble moments across chain lengths at a fixed energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub energy: f64,
    pub n_realizations: usize,
    pub points: Vec<EnsemblePoint>,
}

/// Mean and sample variance (n−1 denominator) of ln |t|² over
/// `n_realizations` chains at each length in `n_traps_list`.
///
/// Realizations are accumulated in index order with a fixed summation
/// order, so results are bit-reproducible; realization i of a given master
/// seed is the same chain whether 10 or 10 000 realizations are requested.
pub fn ensemble_log_transmission(
    config: &DisorderConfig,
    energy: f64,
    n_traps_list: &[usize],
    n_realizations: usize,
    master_seed: u64,
) -> DisorderResult<EnsembleStats> {
    if n_realizations < 2 {
        return Err(DisorderError::TooFewRealizations {
            got: n_realizations,
            need: 2,
        });
    }
    let increasing = n_traps_list.windows(2).all(|w| w[0] < w[1]);
    if n_traps_list.is_empty() || n_traps_list[0] == 0 || !increasing {
        return Err(DisorderError::InvalidLengthList);
    }
    let k = Wavenumber::from_energy(energy)?;

    let mut points = Vec::with_capacity(n_traps_list.len());
    for &n_traps in n_traps_list {
        let sized = config.with_n_traps(n_traps)?;
        let mut values = Vec::with_capacity(n_realizations);
        for index in 0..n_realizations {
            let array = sample_trap_array(&sized, master_seed, index as u64);
            values.push(log_transmission(&array, k));
        }
        let mean = values.iter().sum::<f64>() / n_realizations as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (n_realizations - 1) as f64;
        points.push(EnsemblePoint {
            n_traps,
            mean_ln_t: mean,
            var_ln_t: var,
        });
    }
    Ok(EnsembleStats {
        energy,
        n_realizations,
        points,
    })
}

/// Least-squares fit of ⟨ln |t|²⟩ ≈ intercept − 2γ·n across chain lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    /// Decay rate γ per trap (clamped at 0; ln |t|² cannot grow with n).
    pub gamma_per_trap: f64,
    /// Fitted ln |t|² at n = 0.
    pub intercept_ln_t: f64,
    /// Standard error of γ from the fit residuals.
    pub std_error: f64,
    /// Fraction of the variance of ⟨ln |t|²⟩ the line explains (1 when the
    /// means are constant, as on a resonance).
    pub r_squared: f64,
    /// 1/γ in traps; infinite when γ is indistinguishable from zero at one
    /// standard error.
    pub localization_length_traps: f64,
}

/// Fit γ from ensemble means over at least three chain lengths.
pub fn lyapunov_estimate(stats: &EnsembleStats) -> DisorderResult<LyapunovEstimate> {
    let m = stats.points.len();
    if m < 3 {
        return Err(DisorderError::TooFewLengths(m));
    }
    let xs: Vec<f64> = stats.points.iter().map(|p| p.n_traps as f64).collect();
    let ys: Vec<f64> = stats.points.iter().map(|p| p.mean_ln_t).collect();
    let x_bar = xs.iter().sum::<f64>() / m as f64;
    let y_bar = ys.iter().sum::<f64>() / m as f64;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_bar) * (y - y_bar))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let sst: f64 = ys.iter().map(|y| (y - y_bar) * (y - y_bar)).sum();
    let r_squared = if sst == 0.0 { 1.0 } else { 1.0 - sse / sst };
    let slope_se = ((sse / (m - 2) as f64) / sxx).sqrt();

    let gamma_per_trap = (-slope / 2.0).max(0.0);
    let std_error = slope_se / 2.0;
    let localization_length_traps = if gamma_per_trap <= std_error {
        f64::INFINITY
    } else {
        1.0 / gamma_per_trap
    };
    Ok(LyapunovEstimate {
        gamma_per_trap,
        intercept_ln_t: intercept,
        std_error,
        r_squared,
        localization_length_traps,
    })
}

/// Worst-case transparency of random chains at the single trap's lowest
/// resonance wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransparencyCheck {
    /// The resonance wavenumber the chains were probed at.
    pub resonance_k: Wavenumber,
    /// Minimum |t|² over all realizations — stays pinned at 1 no matter the
    /// disorder, because every trap is individually transparent there.
    pub min_transmission: f64,
    pub n_realizations: usize,
}

/// Probe `n_realizations` chains of `config` at the trap's n = 0 resonance
/// and report the worst transmission found.
pub fn resonance_transparency_check(
    config: &DisorderConfig,
    n_realizations: usize,
    master_seed: u64,
) -> DisorderResult<TransparencyCheck> {
    if n_realizations == 0 {
        return Err(DisorderError::TooFewRealizations { got: 0, need: 1 });
    }
    let trap =
        DoubleBarrier::new(config.trap_strength, config.trap_separation).expect("config validated");
    let k0 = phase_condition_roots(&trap, 0)?.resonances[0].k;
    let mut min_transmission = f64::INFINITY;
    for index in 0..n_realizations {
        let array = sample_trap_array(config, master_seed, index as u64);
        min_transmission = min_transmission.min(log_transmission(&array, k0).exp());
    }
    Ok(TransparencyCheck {
        resonance_k: k0,
        min_transmission,
        n_realizations,
    })
}
