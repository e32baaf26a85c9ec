//! Fourier-side representation of periodic fields on the torus 𝕋 = [0, 2π].
//!
//! A field is stored as its Fourier coefficients û_k for k = −K..K, so that
//! u(x) = Σ û_k e^{ikx}. All linear operators of the scheme are diagonal in
//! this basis:
//!
//! * the Airy semigroup e^{σ∂ₓ³} multiplies mode k by e^{σ(ik)³} = e^{−iσk³},
//! * ∂ₓ⁻¹ multiplies mode k ≠ 0 by (ik)⁻¹ and zeroes the mean,
//! * the projections P₀ / P / P_{≤N} select modes.
//!
//! Nonlinear products are evaluated pointwise on an enlarged physical grid of
//! M ≥ 4(K+1) points, which leaves the retained modes |k| ≤ K alias-free for
//! both quadratic and cubic products. Norms carry the √(2π) factor of
//! ‖f‖_{H^s} = √(2π) (Σ (1+k²)^s |f̂_k|²)^{1/2}, so Plancherel values can be
//! compared against physical-space quadrature directly.
//!
//! Fields are immutable values: every operation returns a fresh field, and
//! FFT plans are cached per thread, so everything here is safe to call from
//! multiple threads concurrently.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization parameters: retained bandwidth and dealiased product grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    max_mode: usize,
    grid_points: usize,
}

impl GridSpec {
    /// Grid retaining modes |k| ≤ `max_mode`, with the product grid sized to
    /// the smallest power of two ≥ 4(K+1).
    pub fn new(max_mode: usize) -> Result<Self> {
        if max_mode == 0 {
            return Err(Error::invalid("max_mode", "must be at least 1"));
        }
        let lower = max_mode
            .checked_add(1)
            .and_then(|v| v.checked_mul(4))
            .ok_or_else(|| Error::invalid("max_mode", "product grid size overflows"))?;
        let grid_points = lower
            .checked_next_power_of_two()
            .ok_or_else(|| Error::invalid("max_mode", "product grid size overflows"))?;
        Ok(GridSpec {
            max_mode,
            grid_points,
        })
    }

    /// Largest retained mode index K.
    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    /// Number of points M of the physical grid used for dealiased products.
    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    /// Number of stored coefficients, 2K + 1.
    pub fn num_coeffs(&self) -> usize {
        2 * self.max_mode + 1
    }

    fn coeff_index(&self, k: i64) -> Option<usize> {
        let kk = self.max_mode as i64;
        if -kk <= k && k <= kk {
            Some((k + kk) as usize)
        } else {
            None
        }
    }
}

/// A periodic field held as Fourier coefficients û_k, k = −K..K.
///
/// `real` marks fields known to be real-valued in physical space; for those
/// the Hermitian symmetry û_{−k} = conj(û_k) is maintained exactly by every
/// operation in this module.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    /// The zero field.
    pub fn zeros(grid: GridSpec, real: bool) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::ZERO; grid.num_coeffs()],
            real,
        }
    }

    /// Build from explicit coefficients ordered k = −K..K.
    ///
    /// Rejects non-finite values, and for `real` fields rejects coefficients
    /// violating û_{−k} = conj(û_k) or Im û₀ ≠ 0.
    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.num_coeffs() {
            return Err(Error::invalid(
                "coeffs",
                format!("expected {} coefficients, got {}", grid.num_coeffs(), coeffs.len()),
            ));
        }
        let field = SpectralField { grid, coeffs, real };
        field.validate()?;
        Ok(field)
    }

    /// Build by evaluating `f(k)` on every retained mode.
    pub fn from_fn(
        grid: GridSpec,
        real: bool,
        mut f: impl FnMut(i64) -> Complex64,
    ) -> Result<Self> {
        let kk = grid.max_mode as i64;
        let coeffs = (-kk..=kk).map(|k| f(k)).collect();
        Self::from_coeffs(grid, coeffs, real)
    }

    /// Build a real field from its modes k = 0..K; negative modes are filled
    /// in by conjugation and Im û₀ is dropped.
    pub fn from_half_spectrum(grid: GridSpec, half: &[Complex64]) -> Result<Self> {
        if half.len() != grid.max_mode + 1 {
            return Err(Error::invalid(
                "half",
                format!("expected {} coefficients, got {}", grid.max_mode + 1, half.len()),
            ));
        }
        let mut field = SpectralField::zeros(grid, true);
        field.set_coeff(0, Complex64::new(half[0].re, 0.0));
        for (k, &c) in half.iter().enumerate().skip(1) {
            field.set_coeff(k as i64, c);
            field.set_coeff(-(k as i64), c.conj());
        }
        field.validate()?;
        Ok(field)
    }

    fn validate(&self) -> Result<()> {
        if self.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("coeffs", "non-finite coefficient"));
        }
        if self.real {
            if self.coeff(0).im != 0.0 {
                return Err(Error::invalid("coeffs", "real field with Im û₀ ≠ 0"));
            }
            let kk = self.grid.max_mode as i64;
            for k in 1..=kk {
                if self.coeff(-k) != self.coeff(k).conj() {
                    return Err(Error::invalid(
                        "coeffs",
                        format!("real field violates û_{{-k}} = conj(û_k) at k = {k}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient û_k; zero outside the retained band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        match self.grid.coeff_index(k) {
            Some(i) => self.coeffs[i],
            None => Complex64::ZERO,
        }
    }

    /// Coefficients in storage order k = −K..K.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn set_coeff(&mut self, k: i64, value: Complex64) {
        let i = self
            .grid
            .coeff_index(k)
            .expect("set_coeff: mode index outside retained band");
        self.coeffs[i] = value;
    }

    /// Iterate `(k, û_k)` over the retained band.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let kk = self.grid.max_mode as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - kk, c))
    }

    /// Apply a diagonal Fourier multiplier. The caller asserts whether the
    /// multiplier is Hermitian-compatible (m(−k) = conj(m(k))), which decides
    /// whether the real flag survives.
    fn map_modes(&self, preserves_real: bool, mut m: impl FnMut(i64) -> Complex64) -> Self {
        let kk = self.grid.max_mode as i64;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * m(i as i64 - kk))
            .collect();
        SpectralField {
            grid: self.grid,
            coeffs,
            real: self.real && preserves_real,
        }
    }

    /// Airy semigroup e^{σ∂ₓ³}: multiplies mode k by e^{−iσk³}.
    ///
    /// A pure phase, so every |û_k| (hence every H^s norm) is preserved, and
    /// the two directions compose to the identity: `f.airy(s).airy(-s) = f`.
    pub fn airy(&self, sigma: f64) -> Self {
        // cos/sin of a negated argument conjugate exactly, so Hermitian
        // symmetry survives bit-for-bit.
        self.map_modes(true, |k| {
            let kf = k as f64;
            let theta = -sigma * (kf * kf * kf);
            Complex64::new(theta.cos(), theta.sin())
        })
    }

    /// ∂ₓ⁻ᵖ for p ∈ {1, 2}: multiplies mode k ≠ 0 by (ik)⁻ᵖ and zeroes the
    /// mean. ∂ₓ⁻² is the squared multiplier −1/k², applied in one pass.
    pub fn inv_dx(&self, p: u32) -> Result<Self> {
        match p {
            1 => Ok(self.map_modes(true, |k| {
                if k == 0 {
                    Complex64::ZERO
                } else {
                    Complex64::new(0.0, -1.0 / k as f64)
                }
            })),
            2 => Ok(self.map_modes(true, |k| {
                if k == 0 {
                    Complex64::ZERO
                } else {
                    let kf = k as f64;
                    Complex64::new(-1.0 / (kf * kf), 0.0)
                }
            })),
            _ => Err(Error::invalid("p", "inverse derivative power must be 1 or 2")),
        }
    }

    /// ∂ₓ: multiplies mode k by ik.
    pub fn dx(&self) -> Self {
        self.map_modes(true, |k| Complex64::new(0.0, k as f64))
    }

    /// Nonzero-mode projection P: zeroes the mean.
    pub fn project_nonzero(&self) -> Self {
        let mut out = self.clone();
        out.set_coeff(0, Complex64::ZERO);
        out
    }

    /// Zero-mode projection P₀: the mean value û₀.
    pub fn zero_mode(&self) -> Complex64 {
        self.coeff(0)
    }

    /// Low-pass projection P_{≤N}: keeps modes |k| ≤ N.
    pub fn low_pass(&self, n: f64) -> Result<Self> {
        self.band(n, true)
    }

    /// High-pass projection P_{>N}: keeps modes |k| > N.
    pub fn high_pass(&self, n: f64) -> Result<Self> {
        self.band(n, false)
    }

    fn band(&self, n: f64, keep_low: bool) -> Result<Self> {
        if !(n >= 0.0) {
            return Err(Error::invalid("n", "band threshold must be >= 0"));
        }
        Ok(self.map_modes(true, |k| {
            let low = (k.unsigned_abs() as f64) <= n;
            if low == keep_low {
                Complex64::ONE
            } else {
                Complex64::ZERO
            }
        }))
    }

    /// ‖f‖_{H^s} = √(2π) (Σ (1+k²)^s |û_k|²)^{1/2} over the retained modes.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let sum: f64 = self
            .modes()
            .map(|(k, c)| {
                let kf = k as f64;
                (1.0 + kf * kf).powf(s) * c.norm_sqr()
            })
            .sum();
        (2.0 * std::f64::consts::PI).sqrt() * sum.sqrt()
    }

    /// L² norm, i.e. the s = 0 Sobolev norm (carries the √(2π) factor).
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (2.0 * std::f64::consts::PI).sqrt() * sum.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest violation of û_{−k} = conj(û_k) (0 for exactly-symmetric data).
    pub fn hermitian_defect(&self) -> f64 {
        let kk = self.grid.max_mode as i64;
        let mut defect = self.coeff(0).im.abs();
        for k in 1..=kk {
            defect = defect.max((self.coeff(-k) - self.coeff(k).conj()).norm());
        }
        defect
    }

    /// Samples u(x_j), x_j = 2πj/M, on the dealiased product grid.
    pub fn to_physical(&self) -> Vec<Complex64> {
        let m = self.grid.grid_points;
        let mut buf = vec![Complex64::ZERO; m];
        for (k, c) in self.modes() {
            buf[k.rem_euclid(m as i64) as usize] = c;
        }
        with_fft(m, |_, inverse| inverse.process(&mut buf));
        buf
    }

    /// Largest |Im u(x_j)| over the physical grid — the reality defect.
    pub fn physical_imag_max(&self) -> f64 {
        self.to_physical()
            .iter()
            .map(|v| v.im.abs())
            .fold(0.0, f64::max)
    }

    /// Scale by a real factor.
    pub fn scale(&self, factor: f64) -> Self {
        self.map_modes(true, |_| Complex64::new(factor, 0.0))
    }

    fn zip_with(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(
            self.grid, other.grid,
            "field arithmetic requires matching grids"
        );
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| op(a, b))
            .collect();
        SpectralField {
            grid: self.grid,
            coeffs,
            real: self.real && other.real,
        }
    }
}

impl std::ops::Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl std::ops::Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

thread_local! {
    static FFT_PLANS: RefCell<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>> =
        RefCell::new(HashMap::new());
}

/// Run `body` with the cached (forward, inverse) plans for size `m`.
fn with_fft<R>(m: usize, body: impl FnOnce(&dyn Fft<f64>, &dyn Fft<f64>) -> R) -> R {
    FFT_PLANS.with(|cell| {
        let (forward, inverse) = {
            let mut plans = cell.borrow_mut();
            let entry = plans.entry(m).or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(m), planner.plan_fft_inverse(m))
            });
            (entry.0.clone(), entry.1.clone())
        };
        body(forward.as_ref(), inverse.as_ref())
    })
}

/// Pointwise product of 2 or 3 fields on the shared M-point grid, transformed
/// back and truncated to |k| ≤ K.
///
/// M ≥ 4(K+1) guarantees that every aliased image of a quadratic or cubic
/// product mode lands outside the retained band, so the kept coefficients
/// equal the exact truncated convolution up to rounding. Repeated factors
/// (squares, cubes) are transformed once. The result is flagged real exactly
/// when all factors are; real results are re-symmetrized to keep the
/// Hermitian invariant exact rather than drifting by FFT rounding.
pub fn dealiased_product(factors: &[&SpectralField]) -> Result<SpectralField> {
    if factors.len() != 2 && factors.len() != 3 {
        return Err(Error::invalid("factors", "product takes 2 or 3 fields"));
    }
    let grid = factors[0].grid;
    for f in &factors[1..] {
        if f.grid != grid {
            return Err(Error::GridMismatch {
                left: grid.max_mode,
                right: f.grid.max_mode,
            });
        }
    }
    let real = factors.iter().all(|f| f.real);
    let m = grid.grid_points;

    // Transform each distinct factor once; squares and cubes pass the same
    // reference several times.
    let mut physical: Vec<(*const SpectralField, Vec<Complex64>)> = Vec::new();
    let mut product = vec![Complex64::ONE; m];
    for &f in factors {
        let key = f as *const SpectralField;
        let phys = match physical.iter().find(|(p, _)| *p == key) {
            Some((_, phys)) => phys,
            None => {
                physical.push((key, f.to_physical()));
                &physical.last().unwrap().1
            }
        };
        for (p, v) in product.iter_mut().zip(phys) {
            *p *= v;
        }
    }

    with_fft(m, |forward, _| forward.process(&mut product));

    let kk = grid.max_mode as i64;
    let scale = 1.0 / m as f64;
    let mut out = SpectralField::zeros(grid, real);
    for k in -kk..=kk {
        out.set_coeff(k, product[k.rem_euclid(m as i64) as usize] * scale);
    }
    if real {
        hermitian_project(&mut out);
    }
    Ok(out)
}

/// Dealiased f².
pub fn dealiased_square(f: &SpectralField) -> SpectralField {
    dealiased_product(&[f, f]).expect("square: factors share a grid by construction")
}

/// Dealiased f³.
pub fn dealiased_cube(f: &SpectralField) -> SpectralField {
    dealiased_product(&[f, f, f]).expect("cube: factors share a grid by construction")
}

/// Project onto exactly-Hermitian coefficients: û_k ← (û_k + conj(û_{−k}))/2.
/// Removes only FFT rounding noise when the field is real in exact arithmetic.
fn hermitian_project(f: &mut SpectralField) {
    let kk = f.grid.max_mode as i64;
    for k in 1..=kk {
        let avg = 0.5 * (f.coeff(k) + f.coeff(-k).conj());
        f.set_coeff(k, avg);
        f.set_coeff(-k, avg.conj());
    }
    let mean = f.coeff(0);
    f.set_coeff(0, Complex64::new(mean.re, 0.0));
}
