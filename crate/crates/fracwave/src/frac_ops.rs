//! The Riesz fractional gradient D^s, its negative adjoint D^s·, the
//! heterogeneous elliptic operators 𝒜^s u = −D^s·(A D^s u) and
//! ℬ^s u = −D^s·(B D^s u), and an independent singular-integral oracle.
//!
//! # Spectral realization
//!
//! On the periodic extended box, D^s is the Fourier multiplier
//!
//! ```text
//! m_j(ξ) = 2πi ξ_j |2πξ|^{s−1},   m(0) = 0,
//! ```
//!
//! so |m(ξ)| = |2πξ|^s and m(−ξ) = −conj(m(ξ)) (real fields map to real
//! fields). At s = 1 the multiplier is exactly 2πiξ, the classical gradient.
//! For even N the unpaired Nyquist bin is zeroed: a purely imaginary symbol
//! cannot keep a real signal real on a self-conjugate bin, so the reality
//! requirement wins there (standard spectral-derivative convention).
//!
//! # Oracle
//!
//! `singular_integral_laplacian` evaluates the free-space form
//!
//! ```text
//! (−Δ)^s u(x) = c_{d,s} P.V. ∫_{ℝ^d} (u(x) − u(y)) / |x−y|^{d+2s} dy
//! ```
//!
//! by direct quadrature over the box, a second-order Taylor correction for
//! the |x−y| < δ core, and the exact exterior-tail term
//! u(x)·∫_{ℝ^d∖box} |x−y|^{−d−2s} dy contributed by the zero extension of u.
//! The tail term is not optional: dropping it biases the oracle by
//! O((κL)^{−2s})·u(x), which at s = 0.3, κL = 8 is an ~10% relative error —
//! an order of magnitude beyond the 1e−2 agreement this oracle is meant to
//! certify. With the tail included, the spectral-vs-oracle gap measures the
//! genuine wrap-around (periodic image) error controlled by κ.

use num_complex::Complex64;
use thiserror::Error;

use crate::domain::{CoefficientField, Field, GridSpec};
use crate::spectral;

#[derive(Debug, Error, PartialEq)]
pub enum OpsError {
    #[error("exponent s must lie in (0,1], got {0}")]
    InvalidExponent(f64),
    #[error("the singular-integral oracle needs s in (0,1); the kernel integral diverges at s = {0}")]
    OracleExponent(f64),
    #[error("cutoff δ = {delta} must be positive and at least 2Δx = {min}")]
    CutoffTooSmall { delta: f64, min: f64 },
    #[error("operator and field live on different grids")]
    GridMismatch,
    #[error("expected a field with {expected} component(s), got {got}")]
    ComponentMismatch { expected: usize, got: usize },
    #[error("field is identically zero")]
    ZeroField,
    #[error("exponent list is empty")]
    EmptyExponentList,
}

/// The Riesz fractional gradient D^s and divergence D^s· as cached Fourier
/// multipliers on one grid.
#[derive(Debug, Clone)]
pub struct RieszOperator {
    grid: GridSpec,
    s: f64,
    /// d planes of m_j(ξ), flat spectral index within each plane.
    symbol: Vec<Complex64>,
    /// |m(ξ)|² = |2πξ|^{2s} (0 at the zero mode and zeroed Nyquist bins).
    lam: Vec<f64>,
}

/// Builds the D^s multiplier tables for `grid`; s must lie in (0,1].
pub fn build_riesz(grid: GridSpec, s: f64) -> Result<RieszOperator, OpsError> {
    if !(s.is_finite() && s > 0.0 && s <= 1.0) {
        return Err(OpsError::InvalidExponent(s));
    }
    let d = grid.dimension();
    let n = grid.total_nodes();
    let mut symbol = vec![Complex64::default(); d * n];
    let mut lam = vec![0.0; n];
    let tau = std::f64::consts::TAU;
    for k in 0..n {
        let w2 = spectral::two_pi_xi_sq(&grid, k);
        if w2 == 0.0 || spectral::has_nyquist_axis(&grid, k) {
            continue;
        }
        // |2πξ|^{s−1}; exactly 1 at s = 1 so D¹ is the classical gradient
        let radial = if s == 1.0 { 1.0 } else { w2.sqrt().powf(s - 1.0) };
        let xi = spectral::xi(&grid, k);
        for c in 0..d {
            symbol[c * n + k] = Complex64::new(0.0, tau * xi[c] * radial);
        }
        lam[k] = (0..d).map(|c| symbol[c * n + k].norm_sqr()).sum();
    }
    Ok(RieszOperator {
        grid,
        s,
        symbol,
        lam,
    })
}

impl RieszOperator {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Multiplier m_c(ξ) at flat spectral index `k`.
    pub fn symbol(&self, c: usize, k: usize) -> Complex64 {
        self.symbol[c * self.grid.total_nodes() + k]
    }

    /// |m(ξ)|² table (the (−Δ)^s multiplier).
    pub(crate) fn lam(&self) -> &[f64] {
        &self.lam
    }

    fn check_scalar(&self, u: &Field) {
        assert!(*u.grid() == self.grid, "operator/field grid mismatch");
        assert_eq!(u.components(), 1, "expected a scalar field");
    }

    fn gradient_spectra(&self, u: &Field) -> Vec<Vec<Complex64>> {
        self.check_scalar(u);
        let n = self.grid.total_nodes();
        let hat = spectral::forward(&self.grid, u.component(0));
        (0..self.grid.dimension())
            .map(|c| {
                (0..n)
                    .map(|k| hat[k] * self.symbol[c * n + k])
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// D^s u of a scalar field: a d-component vector field.
    pub fn gradient(&self, u: &Field) -> Field {
        let spectra = self.gradient_spectra(u);
        let mut out = Field::zeros(self.grid, self.grid.dimension());
        for (c, spec) in spectra.into_iter().enumerate() {
            out.component_mut(c)
                .copy_from_slice(&spectral::inverse_real(&self.grid, spec));
        }
        out
    }

    /// Largest imaginary residue of D^s u before the real truncation —
    /// roundoff only, used to verify the real-to-real property.
    pub fn gradient_imag_residue(&self, u: &Field) -> f64 {
        let mut worst = 0.0_f64;
        for spec in self.gradient_spectra(u) {
            for v in spectral::inverse_complex(&self.grid, spec) {
                worst = worst.max(v.im.abs());
            }
        }
        worst
    }

    /// D^s·Φ of a d-component field: the negative adjoint of the gradient,
    /// ⟨D^s u, Φ⟩ = −⟨u, D^s·Φ⟩ to machine precision.
    pub fn divergence(&self, phi: &Field) -> Field {
        assert!(*phi.grid() == self.grid, "operator/field grid mismatch");
        let d = self.grid.dimension();
        assert_eq!(phi.components(), d, "expected a {d}-component field");
        let n = self.grid.total_nodes();
        let mut acc = vec![Complex64::default(); n];
        for c in 0..d {
            let hat = spectral::forward(&self.grid, phi.component(c));
            for k in 0..n {
                acc[k] += hat[k] * self.symbol[c * n + k];
            }
        }
        let mut out = Field::zeros(self.grid, 1);
        out.component_mut(0)
            .copy_from_slice(&spectral::inverse_real(&self.grid, acc));
        out
    }

    /// (−Δ)^s u = −D^s·D^s u via the |2πξ|^{2s} multiplier.
    pub fn fractional_laplacian(&self, u: &Field) -> Field {
        self.check_scalar(u);
        let mut hat = spectral::forward(&self.grid, u.component(0));
        for (k, v) in hat.iter_mut().enumerate() {
            *v *= self.lam[k];
        }
        let mut out = Field::zeros(self.grid, 1);
        out.component_mut(0)
            .copy_from_slice(&spectral::inverse_real(&self.grid, hat));
        out
    }

    /// ‖D^s u‖_{L²}, evaluated spectrally (Parseval).
    pub fn hs_seminorm(&self, u: &Field) -> f64 {
        self.check_scalar(u);
        let hat = spectral::forward(&self.grid, u.component(0));
        let weight = self.grid.cell_volume() / self.grid.total_nodes() as f64;
        hat.iter()
            .enumerate()
            .map(|(k, v)| self.lam[k] * v.norm_sqr() * weight)
            .sum::<f64>()
            .sqrt()
    }
}

/// 𝒜^s u = mask(−D^s·(A D^s u)) — matrix-free: two transforms around a
/// pointwise matrix multiply.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    riesz: RieszOperator,
    coeff: CoefficientField,
}

impl EllipticOperator {
    pub fn new(riesz: RieszOperator, coeff: CoefficientField) -> Result<Self, OpsError> {
        if riesz.grid() != coeff.grid() {
            return Err(OpsError::GridMismatch);
        }
        Ok(EllipticOperator { riesz, coeff })
    }

    pub fn riesz(&self) -> &RieszOperator {
        &self.riesz
    }

    pub fn coefficient(&self) -> &CoefficientField {
        &self.coeff
    }

    /// mask(−D^s·(A D^s u)) for interior-supported scalar u.
    pub fn apply(&self, u: &Field) -> Field {
        let grad = self.riesz.gradient(u);
        let mut flux = Field::zeros(*self.riesz.grid(), self.riesz.grid().dimension());
        self.coeff.apply_pointwise(&grad, &mut flux);
        let mut out = self.riesz.divergence(&flux);
        out.scale(-1.0);
        out.mask_in_place();
        out
    }

    /// A D^s u (the flux), for energy pairings.
    pub fn flux(&self, u: &Field) -> Field {
        let grad = self.riesz.gradient(u);
        let mut flux = Field::zeros(*self.riesz.grid(), self.riesz.grid().dimension());
        self.coeff.apply_pointwise(&grad, &mut flux);
        flux
    }

    /// ⟨A D^s u, D^s w⟩.
    pub fn bilinear(&self, u: &Field, w: &Field) -> f64 {
        self.flux(u).inner(&self.riesz.gradient(w))
    }

    /// ⟨A D^s u, D^s u⟩ — the elastic/viscous quadratic form.
    pub fn quadratic_form(&self, u: &Field) -> f64 {
        let grad = self.riesz.gradient(u);
        let mut flux = Field::zeros(*self.riesz.grid(), self.riesz.grid().dimension());
        self.coeff.apply_pointwise(&grad, &mut flux);
        flux.inner(&grad)
    }
}

/// Normalizing constant of the fractional Laplacian kernel,
/// c_{d,s} = 4^s Γ(d/2+s) / (π^{d/2} |Γ(−s)|), written with
/// |Γ(−s)| = Γ(1−s)/s so only Γ on (0,2) is needed.
pub fn kernel_constant(d: usize, s: f64) -> f64 {
    let half_d = d as f64 / 2.0;
    4.0_f64.powf(s) * s * libm::tgamma(half_d + s)
        / (std::f64::consts::PI.powf(half_d) * libm::tgamma(1.0 - s))
}

/// Free-space (−Δ)^s u by direct singular-integral quadrature: the oracle
/// the spectral path is checked against.
///
/// The principal value is split at |x−y| = δ: the core contributes the
/// second-order Taylor correction −(Δu(x)/2d)·S_d δ^{2−2s}/(2−2s) (finite
/// difference Laplacian), the rest is summed on the grid, and the exterior
/// of the box contributes the exact tail u(x)·∫_{ℝ^d∖box} K. Accuracy is
/// O(δ^{2−2s}) in the splitting; δ must be at least 2Δx.
pub fn singular_integral_laplacian(u: &Field, s: f64, delta: f64) -> Result<Field, OpsError> {
    if !(s.is_finite() && s > 0.0 && s < 1.0) {
        return Err(OpsError::OracleExponent(s));
    }
    if u.components() != 1 {
        return Err(OpsError::ComponentMismatch {
            expected: 1,
            got: u.components(),
        });
    }
    let grid = *u.grid();
    let dx = grid.dx();
    if !(delta > 0.0) || delta < 2.0 * dx {
        return Err(OpsError::CutoffTooSmall {
            delta,
            min: 2.0 * dx,
        });
    }
    let d = grid.dimension();
    let c = kernel_constant(d, s);
    let side = grid.box_side();
    let n = grid.points_per_side();
    let vals = u.component(0);
    let cell = grid.cell_volume();
    // The far sum keeps nodes at |y−x| ≥ m_min Δx, whose quadrature cells
    // cover radii from (m_min − ½)Δx outward; the analytic core correction
    // must integrate the complement of exactly that region, or the half-cell
    // ring is double counted and the oracle degrades to first order in Δx.
    let m_min = (delta / dx - 1e-9).ceil().max(1.0);
    let delta_eff = (m_min - 0.5) * dx;
    // sphere areas S_1 = 2, S_2 = 2π
    let sphere = if d == 1 { 2.0 } else { std::f64::consts::TAU };
    let core = sphere * delta_eff.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);

    // The grid sum runs over the closed box [0, side]^d with trapezoid
    // weights (the added boundary nodes carry u = 0): the closed node set is
    // mirror symmetric about the box midpoint, so an even u produces an
    // exactly even output, and the covered volume is exactly side^d so the
    // analytic tail over ℝ^d ∖ box completes the integral without gap or
    // overlap.
    let weight = |j: usize| if j == 0 || j == n { 0.5 } else { 1.0 };
    let mut out = Field::zeros(grid, 1);
    match d {
        1 => {
            let kernel: Vec<f64> = (0..=n)
                .map(|m| {
                    if (m as f64) >= m_min {
                        (m as f64 * dx).powf(-1.0 - 2.0 * s)
                    } else {
                        0.0
                    }
                })
                .collect();
            for i in 0..n {
                let ui = vals[i];
                let mut far = 0.0;
                for j in 0..=n {
                    let uj = if j == n { 0.0 } else { vals[j] };
                    far += weight(j) * (ui - uj) * kernel[i.abs_diff(j)];
                }
                let lap = (vals[(i + 1) % n] - 2.0 * ui + vals[(i + n - 1) % n]) / (dx * dx);
                let mut acc = far * cell - 0.5 * lap * core;
                if ui != 0.0 {
                    let x = i as f64 * dx;
                    let tail = (x.powf(-2.0 * s) + (side - x).powf(-2.0 * s)) / (2.0 * s);
                    acc += ui * tail;
                }
                out.component_mut(0)[i] = c * acc;
            }
        }
        2 => {
            // kernel tables over displacement pairs, with and without cutoff
            let stride = n + 1;
            let mut kernel = vec![0.0; stride * stride];
            let mut kernel_raw = vec![0.0; stride * stride];
            for di in 0..=n {
                for dj in 0..=n {
                    let m2 = (di * di + dj * dj) as f64;
                    if m2 > 0.0 {
                        let k = (m2.sqrt() * dx).powf(-2.0 - 2.0 * s);
                        kernel_raw[di * stride + dj] = k;
                        if m2.sqrt() >= m_min {
                            kernel[di * stride + dj] = k;
                        }
                    }
                }
            }
            let val = |j0: usize, j1: usize| {
                if j0 == n || j1 == n {
                    0.0
                } else {
                    vals[j0 * n + j1]
                }
            };
            for i0 in 0..n {
                for i1 in 0..n {
                    let i = i0 * n + i1;
                    let ui = vals[i];
                    let mut far = 0.0;
                    for j0 in 0..=n {
                        let w0 = weight(j0);
                        let di = i0.abs_diff(j0);
                        for j1 in 0..=n {
                            far += w0
                                * weight(j1)
                                * (ui - val(j0, j1))
                                * kernel[di * stride + i1.abs_diff(j1)];
                        }
                    }
                    let up = vals[((i0 + 1) % n) * n + i1];
                    let dn = vals[((i0 + n - 1) % n) * n + i1];
                    let lf = vals[i0 * n + (i1 + n - 1) % n];
                    let rt = vals[i0 * n + (i1 + 1) % n];
                    let lap = (up + dn + lf + rt - 4.0 * ui) / (dx * dx);
                    let mut acc = far * cell - 0.25 * lap * core;
                    if ui != 0.0 {
                        // exterior tail: full plane beyond the inscribed
                        // disk, minus the in-box part of that annulus
                        let x0 = i0 as f64 * dx;
                        let x1 = i1 as f64 * dx;
                        let rho = x0.min(side - x0).min(x1).min(side - x1);
                        let full = std::f64::consts::TAU * rho.powf(-2.0 * s) / (2.0 * s);
                        let mut in_box = 0.0;
                        // cells of included centers tile [ρ, ∞) radially
                        let cut_sq = (rho / dx + 0.5) * (rho / dx + 0.5);
                        for j0 in 0..=n {
                            let w0 = weight(j0);
                            let di = i0.abs_diff(j0);
                            for j1 in 0..=n {
                                let dj = i1.abs_diff(j1);
                                if (di * di + dj * dj) as f64 >= cut_sq {
                                    in_box += w0 * weight(j1) * kernel_raw[di * stride + dj];
                                }
                            }
                        }
                        acc += ui * (full - in_box * cell);
                    }
                    out.component_mut(0)[i] = c * acc;
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(out)
}

/// ‖u‖_{L²} / ‖D^s u‖_{L²} — the discrete Poincaré ratio; bounded by
/// (κL/2π)^s on the extended box.
pub fn poincare_ratio(u: &Field, op: &RieszOperator) -> Result<f64, OpsError> {
    if u.grid() != op.grid() {
        return Err(OpsError::GridMismatch);
    }
    let l2 = u.l2_norm();
    if l2 == 0.0 {
        return Err(OpsError::ZeroField);
    }
    Ok(l2 / op.hs_seminorm(u))
}

/// ‖D^s u − D¹u‖_{L²} for each s in `s_list`: decreasing for smooth u as
/// s ↑ 1, probing the classical-gradient limit.
pub fn gradient_limit_probe(u: &Field, s_list: &[f64]) -> Result<Vec<(f64, f64)>, OpsError> {
    if s_list.is_empty() {
        return Err(OpsError::EmptyExponentList);
    }
    let grid = *u.grid();
    let reference = build_riesz(grid, 1.0)?.gradient(u);
    let mut out = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let grad = build_riesz(grid, s)?.gradient(u);
        out.push((s, grad.sub(&reference).l2_norm()));
    }
    Ok(out)
}
