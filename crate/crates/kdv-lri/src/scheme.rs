//! The unfiltered low-regularity time integrator for KdV on the torus,
//!
//! ```text
//! u^{n+1} = e^{−τ∂ₓ³} uⁿ + F[uⁿ] + H[uⁿ],
//! ```
//!
//! where `F` is the closed-form Duhamel integral of the quadratic interaction
//! over one step and `H` is the trilinear correction that lifts the method to
//! order γ for H^γ data:
//!
//! ```text
//! F[u] = (1/6) P[(e^{−τ∂ₓ³}∂ₓ⁻¹u)²] − (1/6) e^{−τ∂ₓ³} P[(∂ₓ⁻¹u)²]
//!
//! H[u] = (1/3) P[(e^{−τ∂ₓ³}∂ₓ⁻¹u) ∂ₓ⁻¹F[u]]
//!      + (τ/9) e^{−τ∂ₓ³}(∂ₓ⁻¹u) P₀[u²]
//!      − (1/54)  e^{(s−τ)∂ₓ³} ∂ₓ⁻¹[(e^{−s∂ₓ³}∂ₓ⁻¹u)³]                      |_{s=0}^{s=τ}
//!      − (1/27τ) e^{(s−τ)∂ₓ³} ∂ₓ⁻²[(e^{−(s−τ)∂ₓ³}∂ₓ⁻²F[u])(e^{−s∂ₓ³}∂ₓ⁻¹u)] |_{s=0}^{s=τ}
//! ```
//!
//! The boundary notation g(s)|_{s=0}^{s=τ} means g(τ) − g(0). Every term is
//! mean-free by construction, so a mean-free iterate stays exactly mean-free.
//! Data with nonzero mean is handled by the Galilean change of variables
//! ũ(t,x) = u(t,x − tc) − c with c the initial mean ([`galilean_split`] /
//! [`galilean_restore`]); the stepper itself rejects nonzero-mean input.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{dealiased_cube, dealiased_product, dealiased_square, GridSpec, SpectralField};

/// Time discretization selector.
///
/// `Lri2` is the full scheme above; `Lri1` drops the trilinear correction `H`
/// (a first-order baseline with the same quadratic structure); `Linear` keeps
/// only the free Airy flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Lri2,
    Lri1,
    Linear,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Lri2 => "lri2",
            SchemeKind::Lri1 => "lri1",
            SchemeKind::Linear => "linear",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lri2" => Ok(SchemeKind::Lri2),
            "lri1" => Ok(SchemeKind::Lri1),
            "linear" => Ok(SchemeKind::Linear),
            other => Err(Error::invalid(
                "scheme",
                format!("unknown scheme `{other}` (expected lri2, lri1 or linear)"),
            )),
        }
    }
}

/// Step size, scheme selector and grid for one evolution.
#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    kind: SchemeKind,
    grid: GridSpec,
    tau: f64,
}

impl SchemeConfig {
    /// Requires 0 < τ ≤ 1/2 (the admissible step-size range of the scheme).
    pub fn new(kind: SchemeKind, grid: GridSpec, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 0.5) {
            return Err(Error::invalid(
                "tau",
                format!("step size must lie in (0, 1/2], got {tau}"),
            ));
        }
        Ok(SchemeConfig { kind, grid, tau })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Relative tolerance for the mean-free precondition. Mean-free iterates stay
/// exactly mean-free, so anything above rounding scale is caller error.
const MEAN_TOL: f64 = 1e-13;

fn require_mean_free_real(u: &SpectralField) -> Result<()> {
    if !u.is_real() {
        return Err(Error::invalid(
            "u",
            "the scheme is defined for real fields; build them real-flagged",
        ));
    }
    let mean = u.zero_mode().norm();
    if mean > MEAN_TOL * u.l2_norm().max(1.0) {
        return Err(Error::NonzeroMean { mean });
    }
    Ok(())
}

/// The quadratic term F[u] of the scheme (bilinear in u).
pub fn quadratic_term(u: &SpectralField, tau: f64) -> Result<SpectralField> {
    require_mean_free_real(u)?;
    let w0 = u.inv_dx(1)?;
    let w1 = w0.airy(-tau);
    let twisted = dealiased_square(&w1).project_nonzero();
    let plain = dealiased_square(&w0).project_nonzero().airy(-tau);
    Ok((&twisted - &plain).scale(1.0 / 6.0))
}

/// The trilinear correction H[u]; `quadratic` must be `quadratic_term(u, tau)`.
pub fn cubic_term(u: &SpectralField, quadratic: &SpectralField, tau: f64) -> Result<SpectralField> {
    require_mean_free_real(u)?;
    let w0 = u.inv_dx(1)?;
    let w1 = w0.airy(-tau);

    // (1/3) P[(e^{−τ∂ₓ³}∂ₓ⁻¹u) ∂ₓ⁻¹F]
    let first = dealiased_product(&[&w1, &quadratic.inv_dx(1)?])?
        .project_nonzero()
        .scale(1.0 / 3.0);

    // (τ/9) e^{−τ∂ₓ³}(∂ₓ⁻¹u) P₀[u²]; the zero mode of u² is Σ_k û_k û_{−k},
    // computed directly on the coefficients.
    let mean_sq: Complex64 = u.modes().map(|(k, c)| c * u.coeff(-k)).sum();
    let second = w1.scale(tau / 9.0 * mean_sq.re);

    // −(1/54) [ ∂ₓ⁻¹(w1³) − e^{−τ∂ₓ³}∂ₓ⁻¹(w0³) ]
    let cube_at_tau = dealiased_cube(&w1).inv_dx(1)?;
    let cube_at_zero = dealiased_cube(&w0).inv_dx(1)?.airy(-tau);
    let third = (&cube_at_tau - &cube_at_zero).scale(-1.0 / 54.0);

    // −(1/27τ) [ ∂ₓ⁻²((∂ₓ⁻²F) w1) − e^{−τ∂ₓ³}∂ₓ⁻²((e^{τ∂ₓ³}∂ₓ⁻²F) w0) ]
    let ddq = quadratic.inv_dx(2)?;
    let mixed_at_tau = dealiased_product(&[&ddq, &w1])?.inv_dx(2)?;
    let mixed_at_zero = dealiased_product(&[&ddq.airy(tau), &w0])?
        .inv_dx(2)?
        .airy(-tau);
    let fourth = (&mixed_at_tau - &mixed_at_zero).scale(-1.0 / (27.0 * tau));

    Ok(&(&(&first + &second) + &third) + &fourth)
}

/// One step of the configured scheme.
pub fn step(u: &SpectralField, cfg: &SchemeConfig) -> Result<SpectralField> {
    if u.grid() != cfg.grid {
        return Err(Error::GridMismatch {
            left: u.grid().max_mode(),
            right: cfg.grid.max_mode(),
        });
    }
    require_mean_free_real(u)?;
    let free = u.airy(-cfg.tau);
    match cfg.kind {
        SchemeKind::Linear => Ok(free),
        SchemeKind::Lri1 => {
            let f = quadratic_term(u, cfg.tau)?;
            Ok(&free + &f)
        }
        SchemeKind::Lri2 => {
            let f = quadratic_term(u, cfg.tau)?;
            let h = cubic_term(u, &f, cfg.tau)?;
            Ok(&(&free + &f) + &h)
        }
    }
}

/// Outcome of an evolution: the final field plus cheap per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub field: SpectralField,
    pub steps: usize,
    /// Largest |û₀| seen along the run (mean conservation defect).
    pub max_mean_drift: f64,
    /// Largest Hermitian-symmetry violation seen along the run.
    pub max_hermitian_defect: f64,
}

/// Number of steps L = T/τ, required to be an integer within 1 ulp.
pub fn step_count(horizon: f64, tau: f64) -> Result<usize> {
    if !(horizon >= 0.0) {
        return Err(Error::invalid("horizon", "must be >= 0"));
    }
    let ratio = horizon / tau;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > f64::EPSILON * ratio.max(1.0) {
        return Err(Error::invalid(
            "horizon",
            format!("T/τ = {ratio} is not an integer; the scheme takes no partial steps"),
        ));
    }
    Ok(rounded as usize)
}

/// Evolve `u0` to time `horizon` in steps of `cfg.tau()`.
pub fn evolve(u0: &SpectralField, cfg: &SchemeConfig, horizon: f64) -> Result<Evolution> {
    evolve_with(u0, cfg, horizon, usize::MAX, |_, _| {})
}

/// Like [`evolve`], invoking `observe(step_index, field)` after every
/// `observe_every`-th step (and after the final one).
pub fn evolve_with(
    u0: &SpectralField,
    cfg: &SchemeConfig,
    horizon: f64,
    observe_every: usize,
    mut observe: impl FnMut(usize, &SpectralField),
) -> Result<Evolution> {
    let steps = step_count(horizon, cfg.tau())?;
    require_mean_free_real(u0)?;
    let mut u = u0.clone();
    let mut max_mean_drift: f64 = 0.0;
    let mut max_hermitian_defect: f64 = 0.0;
    for n in 1..=steps {
        u = step(&u, cfg)?;
        if !u.is_finite() {
            return Err(Error::Diverged { step: n });
        }
        max_mean_drift = max_mean_drift.max(u.zero_mode().norm());
        max_hermitian_defect = max_hermitian_defect.max(u.hermitian_defect());
        if observe_every != usize::MAX && (n % observe_every == 0 || n == steps) {
            observe(n, &u);
        }
    }
    Ok(Evolution {
        field: u,
        steps,
        max_mean_drift,
        max_hermitian_defect,
    })
}

/// The co-moving frame removing a nonzero mean from the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalileanFrame {
    /// The removed mean c = P₀u⁰, which is also the frame speed.
    pub speed: f64,
}

/// Split `u0` into its mean-free part and the Galilean frame carrying the
/// mean: ũ⁰ = P u⁰, c = P₀u⁰. Real-flagged input has a real mean; for complex
/// input the real part is used.
pub fn galilean_split(u0: &SpectralField) -> (SpectralField, GalileanFrame) {
    let speed = u0.zero_mode().re;
    (u0.project_nonzero(), GalileanFrame { speed })
}

/// Map the evolved mean-free field back to the original frame at time `t`:
/// u(t,x) = ũ(t, x + tc) + c, i.e. mode k picks up e^{iktc} and the mean c is
/// restored.
pub fn galilean_restore(u: &SpectralField, frame: &GalileanFrame, t: f64) -> SpectralField {
    let c = frame.speed;
    let mut out = SpectralField::from_fn(u.grid(), false, |k| {
        let theta = k as f64 * t * c;
        u.coeff(k) * Complex64::new(theta.cos(), theta.sin())
    })
    .expect("phase shift preserves finiteness");
    out.set_coeff(0, u.coeff(0) + Complex64::new(c, 0.0));
    if u.is_real() {
        SpectralField::from_coeffs(u.grid(), out.coeffs().to_vec(), true)
            .expect("phase shift preserves Hermitian symmetry")
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(k: usize) -> GridSpec {
        GridSpec::new(k).unwrap()
    }

    /// û_{±1} = 1, i.e. u = 2 cos x.
    fn two_cos_x(g: GridSpec) -> SpectralField {
        let mut u = SpectralField::zeros(g, true);
        u.set_coeff(1, Complex64::ONE);
        u.set_coeff(-1, Complex64::ONE);
        u
    }

    fn cis(theta: f64) -> Complex64 {
        Complex64::new(theta.cos(), theta.sin())
    }

    /// Hand-expanded closed form of F[2 cos x]: the only modes are ±2 with
    /// F̂₂ = (e^{8iτ} − e^{2iτ})/6.
    fn quadratic_closed_form(tau: f64) -> Complex64 {
        (cis(8.0 * tau) - cis(2.0 * tau)) / 6.0
    }

    #[test]
    fn quadratic_term_of_zero_is_zero() {
        let g = grid(8);
        let zero = SpectralField::zeros(g, true);
        assert_eq!(quadratic_term(&zero, 0.1).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn quadratic_term_single_mode_closed_form() {
        let g = grid(8);
        let u = two_cos_x(g);
        for tau in [0.5, 0.1, 0.013] {
            let f = quadratic_term(&u, tau).unwrap();
            let expected = quadratic_closed_form(tau);
            assert!((f.coeff(2) - expected).norm() < 1e-15);
            assert!((f.coeff(-2) - expected.conj()).norm() < 1e-15);
            for k in [-8i64, -4, -3, -1, 0, 1, 3, 4, 8] {
                assert!(f.coeff(k).norm() < 1e-15, "spurious mode {k}");
            }
            assert!(f.is_real());
            assert_eq!(f.zero_mode(), Complex64::ZERO);
        }
    }

    #[test]
    fn quadratic_term_leading_order_matches_duhamel() {
        // F̂₂/τ → i as τ → 0, which is mode 2 of (1/2)∂ₓ(u²) for u = 2 cos x.
        let g = grid(8);
        let u = two_cos_x(g);
        let mut previous_gap = f64::INFINITY;
        for tau in [1e-2, 1e-3, 1e-4] {
            let f = quadratic_term(&u, tau).unwrap();
            let gap = (f.coeff(2) / tau - Complex64::new(0.0, 1.0)).norm();
            assert!(gap < previous_gap);
            previous_gap = gap;
        }
        assert!(previous_gap < 1e-3);
    }

    #[test]
    fn nonzero_mean_is_rejected_with_direction_to_the_galilean_split() {
        let g = grid(4);
        let mut u = two_cos_x(g);
        u.set_coeff(0, Complex64::new(0.3, 0.0));
        match quadratic_term(&u, 0.1) {
            Err(Error::NonzeroMean { mean }) => assert!((mean - 0.3).abs() < 1e-15),
            other => panic!("expected NonzeroMean, got {other:?}"),
        }
    }

    /// Hand-expanded closed form of H[2 cos x] (modes ±1, ±3 only):
    ///
    ///   Ĥ₃ = −(1/6)e^{iτ}F̂₂ + (e^{27iτ} − e^{3iτ})/162
    ///        + (i/972τ)(e^{iτ} − e^{19iτ})F̂₂
    ///   Ĥ₁ = (1/6)e^{−iτ}F̂₂ − (2τ/9)i e^{iτ}
    ///        − (i/108τ)(e^{−iτ} − e^{−7iτ})F̂₂
    fn cubic_closed_form(tau: f64) -> (Complex64, Complex64) {
        let i = Complex64::new(0.0, 1.0);
        let f2 = quadratic_closed_form(tau);
        let h3 = -f2 * cis(tau) / 6.0
            + (cis(27.0 * tau) - cis(3.0 * tau)) / 162.0
            + i / (972.0 * tau) * (cis(tau) - cis(19.0 * tau)) * f2;
        let h1 = f2 * cis(-tau) / 6.0 - i * (2.0 * tau / 9.0) * cis(tau)
            - i / (108.0 * tau) * (cis(-tau) - cis(-7.0 * tau)) * f2;
        (h1, h3)
    }

    #[test]
    fn cubic_term_single_mode_closed_form() {
        let g = grid(8);
        let u = two_cos_x(g);
        for tau in [0.5, 0.1, 0.05] {
            let f = quadratic_term(&u, tau).unwrap();
            let h = cubic_term(&u, &f, tau).unwrap();
            let (h1, h3) = cubic_closed_form(tau);
            assert!((h.coeff(1) - h1).norm() < 1e-14, "tau={tau}");
            assert!((h.coeff(3) - h3).norm() < 1e-14, "tau={tau}");
            assert!((h.coeff(-1) - h1.conj()).norm() < 1e-14);
            assert!((h.coeff(-3) - h3.conj()).norm() < 1e-14);
            for k in [-8i64, -7, -5, -4, -2, 0, 2, 4, 5, 7, 8] {
                assert!(h.coeff(k).norm() < 1e-14, "spurious mode {k}");
            }
            assert_eq!(h.zero_mode(), Complex64::ZERO);
        }
    }

    #[test]
    fn step_of_zero_is_zero_for_every_scheme() {
        let g = grid(4);
        let zero = SpectralField::zeros(g, true);
        for kind in [SchemeKind::Lri2, SchemeKind::Lri1, SchemeKind::Linear] {
            let cfg = SchemeConfig::new(kind, g, 0.125).unwrap();
            assert_eq!(step(&zero, &cfg).unwrap().l2_norm(), 0.0);
        }
    }

    #[test]
    fn linear_steps_compose_like_the_semigroup() {
        let g = grid(6);
        let u = two_cos_x(g);
        let cfg = SchemeConfig::new(SchemeKind::Linear, g, 0.2).unwrap();
        let twice = step(&step(&u, &cfg).unwrap(), &cfg).unwrap();
        let direct = u.airy(-0.4);
        for (a, b) in twice.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn lri2_step_is_the_sum_of_the_three_closed_forms() {
        let g = grid(8);
        let u = two_cos_x(g);
        let tau = 0.1;
        let cfg = SchemeConfig::new(SchemeKind::Lri2, g, tau).unwrap();
        let next = step(&u, &cfg).unwrap();

        let f2 = quadratic_closed_form(tau);
        let (h1, h3) = cubic_closed_form(tau);
        // e^{−τ∂ₓ³} contributes e^{iτk³} û_k.
        assert!((next.coeff(1) - (cis(tau) + h1)).norm() < 1e-14);
        assert!((next.coeff(2) - f2).norm() < 1e-14);
        assert!((next.coeff(3) - h3).norm() < 1e-14);
        assert!(next.coeff(4).norm() < 1e-14);
    }

    #[test]
    fn evolve_validates_the_step_count_and_runs_zero_steps() {
        let g = grid(4);
        let u = two_cos_x(g);
        let cfg = SchemeConfig::new(SchemeKind::Lri2, g, 0.3).unwrap();
        assert!(evolve(&u, &cfg, 1.0).is_err()); // 1/0.3 is not an integer

        let out = evolve(&u, &cfg, 0.0).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.field, u);
    }

    #[test]
    fn evolve_linear_equals_one_airy_flight() {
        let g = grid(6);
        let u = two_cos_x(g);
        let cfg = SchemeConfig::new(SchemeKind::Linear, g, 0.25).unwrap();
        let out = evolve(&u, &cfg, 2.0).unwrap();
        let direct = u.airy(-2.0);
        for (a, b) in out.field.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).norm() < 5e-15);
        }
        assert_eq!(out.max_mean_drift, 0.0);
    }

    #[test]
    fn evolve_reports_observations_at_the_requested_cadence() {
        let g = grid(4);
        let u = two_cos_x(g);
        let cfg = SchemeConfig::new(SchemeKind::Lri1, g, 0.125).unwrap();
        let mut seen = Vec::new();
        evolve_with(&u, &cfg, 1.0, 3, |n, _| seen.push(n)).unwrap();
        assert_eq!(seen, vec![3, 6, 8]);
    }

    #[test]
    fn galilean_round_trip_is_identity_for_mean_free_data() {
        let g = grid(4);
        let u = two_cos_x(g);
        let (v, frame) = galilean_split(&u);
        assert_eq!(frame.speed, 0.0);
        assert_eq!(v, u);
        assert_eq!(galilean_restore(&v, &frame, 0.7), u);
    }

    #[test]
    fn constants_are_fixed_points_of_the_full_pipeline() {
        // Constants solve KdV; the reduction evolves 0 and restores c.
        let g = grid(4);
        let mut u0 = SpectralField::zeros(g, true);
        u0.set_coeff(0, Complex64::new(0.8, 0.0));
        let (v, frame) = galilean_split(&u0);
        assert_eq!(v.l2_norm(), 0.0);
        let cfg = SchemeConfig::new(SchemeKind::Lri2, g, 0.25).unwrap();
        let evolved = evolve(&v, &cfg, 1.0).unwrap();
        let restored = galilean_restore(&evolved.field, &frame, 1.0);
        assert_eq!(restored, u0);
    }

    #[test]
    fn restore_applies_the_expected_phase() {
        let g = grid(3);
        let u = two_cos_x(g);
        let frame = GalileanFrame { speed: 0.5 };
        let t = 2.0;
        let shifted = galilean_restore(&u, &frame, t);
        // mode 1 picks up e^{i·t·c}
        let expected = Complex64::ONE * cis(t * 0.5);
        assert!((shifted.coeff(1) - expected).norm() < 1e-15);
        assert!((shifted.coeff(0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(shifted.is_real());
    }
}
