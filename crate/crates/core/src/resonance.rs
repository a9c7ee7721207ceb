//! Resonances of the symmetric two-delta trap, found by two independent
//! routes: roots of the reflection-zero phase condition, and the
//! superposition/joining construction that cancels the back-reflection of
//! one barrier against the other.  Also hosts transmission spectra over
//! arbitrary spike arrays.
//!
//! The trap V₀δ(x) + V₀δ(x−L) transmits perfectly exactly where
//! kL = π/2 + arctan(V₀/(2k)) + nπ; between those wavenumbers it reflects.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::scattering::{
    single_delta_amplitudes, DeltaSpike, PotentialArray, Region, ScatteringError,
    ScatteringSolution, Wavenumber,
};
use crate::tolerances::{PEAK_TRANSMISSION_DEFECT, ROOT_TOL_K};

/// Errors from resonance finding and spectrum evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResonanceError {
    #[error("barrier strength must be positive and finite, got {0}")]
    InvalidStrength(f64),
    #[error("barrier separation must be positive and finite, got {0}")]
    InvalidSeparation(f64),
    #[error("barrier position must be finite, got {0}")]
    InvalidPosition(f64),
    #[error("phase-equation bracket failed for n = {n}: no sign change on ({lo}, {hi})")]
    BracketFailure { n: usize, lo: f64, hi: f64 },
    #[error("root n = {n} at k = {k} transmits only {transmission}, not a resonance peak")]
    PeakNotTransparent { n: usize, k: f64, transmission: f64 },
    #[error("energy range must satisfy 0 < eMin < eMax, got [{0}, {1}]")]
    InvalidEnergyRange(f64, f64),
    #[error("spectrum needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

pub type ResonanceResult<T> = Result<T, ResonanceError>;

/// Two identical delta barriers of strength V₀ separated by L — the
/// resonance-tunneling trap.  Identical strengths are what make total
/// transparency possible at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleBarrier {
    strength: f64,
    separation: f64,
    left_position: f64,
}

impl DoubleBarrier {
    /// Trap with its left barrier at the origin.
    pub fn new(strength: f64, separation: f64) -> ResonanceResult<Self> {
        Self::with_left_position(strength, separation, 0.0)
    }

    pub fn with_left_position(
        strength: f64,
        separation: f64,
        left_position: f64,
    ) -> ResonanceResult<Self> {
        if !(strength > 0.0 && strength.is_finite()) {
            return Err(ResonanceError::InvalidStrength(strength));
        }
        if !(separation > 0.0 && separation.is_finite()) {
            return Err(ResonanceError::InvalidSeparation(separation));
        }
        if !left_position.is_finite() {
            return Err(ResonanceError::InvalidPosition(left_position));
        }
        Ok(Self {
            strength,
            separation,
            left_position,
        })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn left_position(&self) -> f64 {
        self.left_position
    }

    /// The trap as a two-spike array.
    pub fn array(&self) -> PotentialArray {
        let spikes = vec![
            DeltaSpike::new(self.left_position, self.strength).expect("validated barrier"),
            DeltaSpike::new(self.left_position + self.separation, self.strength)
                .expect("validated barrier"),
        ];
        PotentialArray::new(spikes).expect("separation is positive")
    }
}

/// One resonance: quasi-bound index n, wavenumber, energy, and the
/// recomputed transmission at the peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub n: usize,
    pub k: Wavenumber,
    pub energy: f64,
    pub transmission_at_peak: f64,
}

/// Resonances n = 0..=nMax in strictly increasing k.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSet {
    pub resonances: Vec<Resonance>,
}

/// Roots of kL = π/2 + arctan(V₀/(2k)) + nπ for n = 0..=nMax — the zeros of
/// the trap's reflection amplitude.
///
/// On each bracket ((n+½)π/L, (n+1)π/L) the shifted phase
/// f(k) = kL − arctan(V₀/(2k)) − π/2 − nπ is strictly increasing and changes
/// sign, so bisection converges unconditionally; each root is then verified
/// to transmit within [`PEAK_TRANSMISSION_DEFECT`] of unity.
pub fn phase_condition_roots(b: &DoubleBarrier, n_max: usize) -> ResonanceResult<ResonanceSet> {
    let (v0, sep) = (b.strength(), b.separation());
    let f = |k: f64, n: usize| k * sep - (v0 / (2.0 * k)).atan() - PI / 2.0 - n as f64 * PI;
    let array = b.array();
    let mut resonances = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut lo = (n as f64 + 0.5) * PI / sep;
        let mut hi = (n as f64 + 1.0) * PI / sep;
        if !(f(lo, n) < 0.0 && f(hi, n) >= 0.0) {
            return Err(ResonanceError::BracketFailure { n, lo, hi });
        }
        while hi - lo > ROOT_TOL_K {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // f64 exhausted below the tolerance
            }
            if f(mid, n) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let k = Wavenumber::new(0.5 * (lo + hi))?;
        let transmission_at_peak = array.transfer_matrix(k).amplitudes()?.transmission();
        if transmission_at_peak < 1.0 - PEAK_TRANSMISSION_DEFECT {
            return Err(ResonanceError::PeakNotTransparent {
                n,
                k: k.k(),
                transmission: transmission_at_peak,
            });
        }
        resonances.push(Resonance {
            n,
            k,
            energy: k.energy(),
            transmission_at_peak,
        });
    }
    Ok(ResonanceSet { resonances })
}

/// Result of a bracketed reflection minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedResonance {
    pub k: Wavenumber,
    /// |r(k)|² at the minimizer; zero only for a true resonance.
    pub min_reflectance: f64,
    /// Set when the coarse scan saw more than one strict local minimum in
    /// the bracket; the deepest one is the one refined.
    pub bracket_warning: bool,
}

/// Minimize |r(k)|² within ±10% of a guess: a 201-point coarse scan picks
/// the basin, golden-section refinement then locates the minimizer to better
/// than the root tolerance.  Works for any array; an asymmetric pair keeps a
/// strictly positive floor (only equal penetrabilities can cancel exactly).
pub fn refine_resonance(
    array: &PotentialArray,
    k_guess: Wavenumber,
) -> ResonanceResult<RefinedResonance> {
    let reflectance = |k: f64| -> ResonanceResult<f64> {
        Ok(array
            .transfer_matrix(Wavenumber::new(k)?)
            .amplitudes()?
            .reflection())
    };

    let lo = 0.9 * k_guess.k();
    let hi = 1.1 * k_guess.k();
    const SCAN: usize = 201;
    let step = (hi - lo) / (SCAN - 1) as f64;
    let xs: Vec<f64> = (0..SCAN).map(|i| lo + i as f64 * step).collect();
    let mut vs = Vec::with_capacity(SCAN);
    for &x in &xs {
        vs.push(reflectance(x)?);
    }

    let mut minima = 0usize;
    for i in 1..SCAN - 1 {
        if vs[i] < vs[i - 1] && vs[i] < vs[i + 1] {
            minima += 1;
        }
    }
    let bracket_warning = minima > 1;

    let best = (0..SCAN)
        .min_by(|&i, &j| vs[i].total_cmp(&vs[j]))
        .expect("scan not empty");
    let (mut xbest, mut vbest) = (xs[best], vs[best]);

    // golden-section on the bracketing pair of scan intervals
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(SCAN - 1)];
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = reflectance(x1)?;
    let mut f2 = reflectance(x2)?;
    let tol = 0.1 * ROOT_TOL_K;
    while b - a > tol && x1 < x2 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = reflectance(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = reflectance(x2)?;
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v < vbest {
                xbest = x;
                vbest = v;
            }
        }
    }

    Ok(RefinedResonance {
        k: Wavenumber::new(xbest)?,
        min_reflectance: vbest,
        bracket_warning,
    })
}

/// The superposition that cancels every left-moving wave on the left of one
/// barrier at the origin: the left-incidence solution plus −R/T times the
/// right-incidence solution.  The left region comes out exactly (1, 0); the
/// right region carries (T − R²/T, −R/T), which reduces to (1 − iβ, iβ) with
/// β = V₀/(2k).
pub fn superpose_single_barrier(
    strength: f64,
    k: Wavenumber,
) -> ResonanceResult<ScatteringSolution> {
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(ScatteringError::InvalidStrength(strength).into());
    }
    let beta = strength / (2.0 * k.k());
    let regions = vec![
        Region {
            x_left: f64::NEG_INFINITY,
            x_right: 0.0,
            a_coef: Complex64::new(1.0, 0.0),
            b_coef: Complex64::new(0.0, 0.0),
        },
        Region {
            x_left: 0.0,
            x_right: f64::INFINITY,
            a_coef: Complex64::new(1.0, -beta),
            b_coef: Complex64::new(0.0, beta),
        },
    ];
    Ok(ScatteringSolution::from_parts(regions, k))
}

/// Mismatch between the two single-barrier solutions in the gap of a trap.
///
/// The superposed solution of the left barrier restricts to the coefficient
/// vector ((1−iβ)e^{−ikp}, iβe^{ikp}) between the barriers; the plain
/// left-incidence solution of the right barrier alone restricts to
/// (1, r·e^{2ikq}).  Both are normalized and the norm of the component of
/// one orthogonal to the other is returned — zero exactly when the
/// solutions join into one (a resonance), independent of overall phase and
/// amplitude choices.
pub fn joining_residual(b: &DoubleBarrier, k: Wavenumber) -> f64 {
    let beta = b.strength() / (2.0 * k.k());
    let p = b.left_position();
    let q = p + b.separation();

    let shift = Complex64::from_polar(1.0, k.k() * p);
    let va = [
        Complex64::new(1.0, -beta) * shift.conj(),
        Complex64::new(0.0, beta) * shift,
    ];
    let r = single_delta_amplitudes(b.strength(), k)
        .expect("strength validated by DoubleBarrier")
        .r;
    let vb = [
        Complex64::new(1.0, 0.0),
        r * Complex64::from_polar(1.0, 2.0 * k.k() * q),
    ];

    let na = (va[0].norm_sqr() + va[1].norm_sqr()).sqrt();
    let nb = (vb[0].norm_sqr() + vb[1].norm_sqr()).sqrt();
    let ua = [va[0] / na, va[1] / na];
    let ub = [vb[0] / nb, vb[1] / nb];
    let overlap = ub[0].conj() * ua[0] + ub[1].conj() * ua[1];
    let w0 = ua[0] - overlap * ub[0];
    let w1 = ua[1] - overlap * ub[1];
    (w0.norm_sqr() + w1.norm_sqr()).sqrt()
}

/// One spectrum sample: energy, |t|², |r|².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub energy: f64,
    pub transmission: f64,
    pub reflection: f64,
}

/// Transmission/reflection data over an energy grid, unitary at every point.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub points: Vec<SpectrumPoint>,
}

/// |t|² and |r|² on a uniform inclusive energy grid.
pub fn transmission_spectrum(
    array: &PotentialArray,
    e_min: f64,
    e_max: f64,
    n_points: usize,
) -> ResonanceResult<Spectrum> {
    if !(e_min > 0.0 && e_max > e_min && e_max.is_finite()) {
        return Err(ResonanceError::InvalidEnergyRange(e_min, e_max));
    }
    if n_points < 2 {
        return Err(ResonanceError::TooFewPoints(n_points));
    }
    let step = (e_max - e_min) / (n_points - 1) as f64;
    let mut points = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let energy = if i + 1 == n_points {
            e_max // exact endpoint
        } else {
            e_min + i as f64 * step
        };
        let mut point = spectrum_point(array, Wavenumber::from_energy(energy)?)?;
        point.energy = energy; // report the grid abscissa, not the k² round trip
        points.push(point);
    }
    Ok(Spectrum { points })
}

/// One spectrum sample at an exact wavenumber (used to inject resonance
/// abscissae into grids, where the transparency spike has measure zero).
pub fn spectrum_point(array: &PotentialArray, k: Wavenumber) -> ResonanceResult<SpectrumPoint> {
    let amps = array.transfer_matrix(k).amplitudes()?;
    Ok(SpectrumPoint {
        energy: k.energy(),
        transmission: amps.transmission(),
        reflection: amps.reflection(),
    })
}
