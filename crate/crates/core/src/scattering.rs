//! Plane-wave transfer-matrix machinery for arrays of delta potentials.
//!
//! Units are ħ = 2m = 1, so a wave of energy e has wavenumber k = √e and the
//! free solutions are e^{±ikx}.  A spike V₀δ(x−a) imposes continuity of ψ and
//! the derivative jump ψ′(a⁺) − ψ′(a⁻) = V₀ψ(a); in the coefficient basis
//! (A, B) with ψ = A·e^{ikx} + B·e^{−ikx} these conditions become the 2×2
//! matrix of [`delta_transfer_matrix`].
//!
//! Products over long chains grow like e^{γN}, so matrices carry their
//! magnitude in a separate log factor and are renormalized during
//! composition; see [`ScaledTransferMatrix`].

use num_complex::Complex64;
use thiserror::Error;

use crate::tolerances::M22_DEGENERACY_FLOOR;

/// Errors from constructing potentials or extracting scattering data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScatteringError {
    /// Wavenumbers are positive, finite reals (continuum states only).
    #[error("wavenumber must be positive and finite, got {0}")]
    InvalidWavenumber(f64),
    /// Energies are positive, finite reals.
    #[error("energy must be positive and finite, got {0}")]
    InvalidEnergy(f64),
    /// Spike strengths are nonnegative and finite (repulsive barriers only).
    #[error("delta strength must be nonnegative and finite, got {0}")]
    InvalidStrength(f64),
    /// Spike positions are finite.
    #[error("delta position must be finite, got {0}")]
    InvalidPosition(f64),
    /// Spike positions must be strictly increasing; coincident spikes should
    /// be pre-summed by the caller.
    #[error("spike positions must be strictly increasing (offending index {0})")]
    UnorderedSpikes(usize),
    /// |m22| of the stored matrix fell below the underflow guard.
    #[error("transfer matrix numerically degenerate: |m22| = {0:e}")]
    NumericDegeneracy(f64),
}

pub type ScatteringResult<T> = Result<T, ScatteringError>;

/// A validated positive wavenumber; the particle energy is e = k².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumber {
    k: f64,
}

impl Wavenumber {
    pub fn new(k: f64) -> ScatteringResult<Self> {
        if k > 0.0 && k.is_finite() {
            Ok(Self { k })
        } else {
            Err(ScatteringError::InvalidWavenumber(k))
        }
    }

    /// k = √e for a positive energy.
    pub fn from_energy(e: f64) -> ScatteringResult<Self> {
        if e > 0.0 && e.is_finite() {
            Ok(Self { k: e.sqrt() })
        } else {
            Err(ScatteringError::InvalidEnergy(e))
        }
    }

    pub fn k(self) -> f64 {
        self.k
    }

    pub fn energy(self) -> f64 {
        self.k * self.k
    }
}

/// A single barrier V₀δ(x − position) with V₀ ≥ 0.
///
/// Zero strength is allowed and acts as free motion (identity transfer
/// matrix).  Attractive spikes are rejected: their bound states are out of
/// scope here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSpike {
    position: f64,
    strength: f64,
}

impl DeltaSpike {
    pub fn new(position: f64, strength: f64) -> ScatteringResult<Self> {
        if !position.is_finite() {
            return Err(ScatteringError::InvalidPosition(position));
        }
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(ScatteringError::InvalidStrength(strength));
        }
        Ok(Self { position, strength })
    }

    pub fn position(self) -> f64 {
        self.position
    }

    pub fn strength(self) -> f64 {
        self.strength
    }
}

/// An ordered array of delta spikes with strictly increasing positions.
/// May be empty (free motion).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PotentialArray {
    spikes: Vec<DeltaSpike>,
}

impl PotentialArray {
    pub fn new(spikes: Vec<DeltaSpike>) -> ScatteringResult<Self> {
        for i in 1..spikes.len() {
            if spikes[i].position() <= spikes[i - 1].position() {
                return Err(ScatteringError::UnorderedSpikes(i));
            }
        }
        Ok(Self { spikes })
    }

    /// Free motion: no spikes at all.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn spikes(&self) -> &[DeltaSpike] {
        &self.spikes
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    /// The same potential rigidly shifted by a finite offset.
    pub fn translated(&self, offset: f64) -> Self {
        assert!(offset.is_finite(), "translation offset must be finite");
        Self {
            spikes: self
                .spikes
                .iter()
                .map(|s| DeltaSpike {
                    position: s.position + offset,
                    strength: s.strength,
                })
                .collect(),
        }
    }

    /// Transfer matrix of the whole array at wavenumber k.
    pub fn transfer_matrix(&self, k: Wavenumber) -> ScaledTransferMatrix {
        compose(self.spikes.iter().map(|s| delta_transfer_matrix(*s, k)))
    }
}

const RESCALE_LO: f64 = 0.5;
const RESCALE_HI: f64 = 2.0;

/// A transfer matrix with its magnitude factored out: the true matrix is
/// `stored · e^{log_scale}`, and constructors and composition keep the
/// stored max-entry magnitude in [1/2, 2].
///
/// Maps plane-wave coefficients (A, B) on the left of a potential segment to
/// those on its right.  For real barriers at real k the true matrix lies in
/// SU(1,1): m22 = conj(m11), m21 = conj(m12), |m11|² − |m12|² = 1; the
/// structure is preserved exactly under composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledTransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
    /// Natural log of the positive factor taken out of the stored entries.
    pub log_scale: f64,
}

impl ScaledTransferMatrix {
    pub fn identity() -> Self {
        Self {
            m11: Complex64::new(1.0, 0.0),
            m12: Complex64::new(0.0, 0.0),
            m21: Complex64::new(0.0, 0.0),
            m22: Complex64::new(1.0, 0.0),
            log_scale: 0.0,
        }
    }

    /// Renormalize the stored entries into the [1/2, 2] max-magnitude band,
    /// moving the extracted factor into `log_scale`.
    fn rescaled(mut self) -> Self {
        let mx = self
            .m11
            .norm()
            .max(self.m12.norm())
            .max(self.m21.norm())
            .max(self.m22.norm());
        if mx > 0.0 && !(RESCALE_LO..=RESCALE_HI).contains(&mx) {
            self.m11 /= mx;
            self.m12 /= mx;
            self.m21 /= mx;
            self.m22 /= mx;
            self.log_scale += mx.ln();
        }
        self
    }

    /// Apply `self` first, then `later`: the product later·self.
    pub fn then(&self, later: &Self) -> Self {
        let mut p = product_stored(later, self).rescaled();
        p.log_scale += self.log_scale + later.log_scale;
        p
    }

    /// ln of |m22| of the true matrix; never exponentiates the product.
    /// The log-transmission of the segment is −2 times this.
    pub fn ln_abs_m22(&self) -> f64 {
        self.log_scale + self.m22.norm().ln()
    }

    /// The true entries `stored · e^{log_scale}`; only meaningful while the
    /// factor is representable in f64 (log_scale ≲ 709).
    pub fn true_entries(&self) -> [Complex64; 4] {
        let s = self.log_scale.exp();
        [self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s]
    }

    /// Extract the four scattering amplitudes: t = e^{−log_scale}/m22,
    /// r = −m21/m22, r′ = m12/m22, and t′ = t (unit determinant by
    /// construction).  For strongly opaque chains t underflows cleanly to 0.
    pub fn amplitudes(&self) -> ScatteringResult<ScatteringAmplitudes> {
        let mag = self.m22.norm();
        if mag.is_nan() || mag <= M22_DEGENERACY_FLOOR {
            return Err(ScatteringError::NumericDegeneracy(mag));
        }
        let t = Complex64::new((-self.log_scale).exp(), 0.0) / self.m22;
        let r = -self.m21 / self.m22;
        let r_prime = self.m12 / self.m22;
        Ok(ScatteringAmplitudes {
            t,
            r,
            t_prime: t,
            r_prime,
        })
    }
}

/// Entry-wise product l·r of the stored matrices, scale handled by callers.
fn product_stored(l: &ScaledTransferMatrix, r: &ScaledTransferMatrix) -> ScaledTransferMatrix {
    ScaledTransferMatrix {
        m11: l.m11 * r.m11 + l.m12 * r.m21,
        m12: l.m11 * r.m12 + l.m12 * r.m22,
        m21: l.m21 * r.m11 + l.m22 * r.m21,
        m22: l.m21 * r.m12 + l.m22 * r.m22,
        log_scale: 0.0,
    }
}

/// One Neumaier (compensated) summation step.
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    *comp += if sum.abs() >= x.abs() {
        (*sum - t) + x
    } else {
        (x - t) + *sum
    };
    *sum = t;
}

/// Raw (unrescaled) entries of the delta-spike matrix: with β = V₀/(2k) and
/// a the position, m11 = 1 − iβ, m12 = −iβe^{−2ika}, m21 = iβe^{2ika},
/// m22 = 1 + iβ.
fn delta_entries(spike: DeltaSpike, k: f64) -> [Complex64; 4] {
    let beta = spike.strength() / (2.0 * k);
    let phase = Complex64::from_polar(1.0, 2.0 * k * spike.position());
    let ib = Complex64::new(0.0, beta);
    [
        Complex64::new(1.0, -beta),
        -ib * phase.conj(),
        ib * phase,
        Complex64::new(1.0, beta),
    ]
}

/// Transfer matrix across one delta spike, rescaled to the storage
/// convention.  Zero strength yields the identity.
pub fn delta_transfer_matrix(spike: DeltaSpike, k: Wavenumber) -> ScaledTransferMatrix {
    let [m11, m12, m21, m22] = delta_entries(spike, k.k());
    ScaledTransferMatrix {
        m11,
        m12,
        m21,
        m22,
        log_scale: 0.0,
    }
    .rescaled()
}

/// Product of transfer matrices with the first element applied first:
/// compose([a, b, c]) = c·b·a.  An empty iterator yields the identity.
///
/// The accumulated log scale is summed with Neumaier compensation so that
/// ~10⁶-factor chains keep it accurate to the final rounding.
pub fn compose(ms: impl IntoIterator<Item = ScaledTransferMatrix>) -> ScaledTransferMatrix {
    let mut acc = ScaledTransferMatrix::identity();
    let mut scale_sum = 0.0_f64;
    let mut scale_comp = 0.0_f64;
    for m in ms {
        let p = product_stored(&m, &acc).rescaled();
        neumaier(&mut scale_sum, &mut scale_comp, m.log_scale);
        neumaier(&mut scale_sum, &mut scale_comp, p.log_scale);
        acc = ScaledTransferMatrix {
            log_scale: 0.0,
            ..p
        };
    }
    acc.log_scale = scale_sum + scale_comp;
    acc
}

/// Scattering amplitudes at one wavenumber: t, r for a wave incident from
/// the left; t′, r′ from the right.  Flux conservation at real k gives
/// |t|² + |r|² = 1, and reciprocity |t| = |t′|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringAmplitudes {
    pub t: Complex64,
    pub r: Complex64,
    pub t_prime: Complex64,
    pub r_prime: Complex64,
}

impl ScatteringAmplitudes {
    /// |t|²
    pub fn transmission(&self) -> f64 {
        self.t.norm_sqr()
    }

    /// |r|²
    pub fn reflection(&self) -> f64 {
        self.r.norm_sqr()
    }
}

/// Closed forms for one delta barrier: t = 2ik/(2ik − V₀), r = V₀/(2ik − V₀).
/// The potential is symmetric, so the right-incidence amplitudes coincide.
pub fn single_delta_amplitudes(
    strength: f64,
    k: Wavenumber,
) -> ScatteringResult<ScatteringAmplitudes> {
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(ScatteringError::InvalidStrength(strength));
    }
    let two_ik = Complex64::new(0.0, 2.0 * k.k());
    let den = two_ik - strength;
    let t = two_ik / den;
    let r = Complex64::new(strength, 0.0) / den;
    Ok(ScatteringAmplitudes {
        t,
        r,
        t_prime: t,
        r_prime: r,
    })
}

/// One piecewise region: ψ(x) = a·e^{ikx} + b·e^{−ikx} on [x_left, x_right].
/// End regions are unbounded (±∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_left: f64,
    pub x_right: f64,
    pub a_coef: Complex64,
    pub b_coef: Complex64,
}

impl Region {
    fn eval(&self, k: f64, x: f64) -> Complex64 {
        let e = Complex64::from_polar(1.0, k * x);
        self.a_coef * e + self.b_coef * e.conj()
    }

    fn eval_deriv(&self, k: f64, x: f64) -> Complex64 {
        let e = Complex64::from_polar(1.0, k * x);
        let ik = Complex64::new(0.0, k);
        ik * (self.a_coef * e - self.b_coef * e.conj())
    }
}

/// Which side the unit-amplitude wave comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Incidence {
    Left,
    Right,
}

/// A piecewise plane-wave solution over a potential array: one region per
/// inter-spike interval, continuous at every spike with derivative jumps
/// V₀ψ there.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSolution {
    regions: Vec<Region>,
    k: Wavenumber,
}

impl ScatteringSolution {
    pub(crate) fn from_parts(regions: Vec<Region>, k: Wavenumber) -> Self {
        debug_assert!(!regions.is_empty());
        Self { regions, k }
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn k(&self) -> Wavenumber {
        self.k
    }

    fn region_at(&self, x: f64) -> &Region {
        self.regions
            .iter()
            .find(|r| x <= r.x_right)
            .unwrap_or_else(|| self.regions.last().expect("solutions have regions"))
    }

    /// ψ(x).  At a spike position the matching conditions make both adjacent
    /// regions agree; the left one is used.
    pub fn psi(&self, x: f64) -> Complex64 {
        self.region_at(x).eval(self.k.k(), x)
    }

    /// dψ/dx, taken within the region containing x (left region at a spike).
    pub fn psi_deriv(&self, x: f64) -> Complex64 {
        self.region_at(x).eval_deriv(self.k.k(), x)
    }
}

/// Solution with a unit incident wave from the chosen side and no incoming
/// wave from the other.  Coefficients start in the far region on the
/// incoming side ((1, r) for left incidence, (0, t′) on the far left for
/// right incidence) and are pushed region by region through the per-spike
/// matrices, so the matching conditions hold to machine precision.
pub fn reconstruct_wavefunction(
    array: &PotentialArray,
    k: Wavenumber,
    incidence: Incidence,
) -> ScatteringResult<ScatteringSolution> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if array.is_empty() {
        let (a, b) = match incidence {
            Incidence::Left => (one, zero),
            Incidence::Right => (zero, one),
        };
        return Ok(ScatteringSolution::from_parts(
            vec![Region {
                x_left: f64::NEG_INFINITY,
                x_right: f64::INFINITY,
                a_coef: a,
                b_coef: b,
            }],
            k,
        ));
    }

    let amps = array.transfer_matrix(k).amplitudes()?;
    let (mut a, mut b) = match incidence {
        Incidence::Left => (one, amps.r),
        Incidence::Right => (zero, amps.t_prime),
    };
    let mut regions = Vec::with_capacity(array.len() + 1);
    let mut x_left = f64::NEG_INFINITY;
    for spike in array.spikes() {
        regions.push(Region {
            x_left,
            x_right: spike.position(),
            a_coef: a,
            b_coef: b,
        });
        let [m11, m12, m21, m22] = delta_entries(*spike, k.k());
        let (na, nb) = (m11 * a + m12 * b, m21 * a + m22 * b);
        a = na;
        b = nb;
        x_left = spike.position();
    }
    regions.push(Region {
        x_left,
        x_right: f64::INFINITY,
        a_coef: a,
        b_coef: b,
    });
    Ok(ScatteringSolution::from_parts(regions, k))
}
