//! Discrete geometry: the physical domain Ω = (0,L)^d embedded in a periodic
//! extended box of side κL, scalar/vector fields with interior masks, and
//! weighted norms.
//!
//! The extended box stands in for ℝ^d: functions of interest vanish outside
//! Ω, and the padding (κ−1)L/2 on each side keeps periodic images far enough
//! away that wrap-around effects are controlled (quantified against the
//! singular-integral oracle in `frac_ops`). Ω is centered in the box and
//! aligned with grid nodes; the interior mask covers exactly (N/κ)^d nodes,
//! so the masked measure equals |Ω| = L^d exactly.

use thiserror::Error;

use crate::spectral;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("dimension must be 1 or 2, got {0}")]
    InvalidDimension(usize),
    #[error("domain length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("extension factor must be at least 2 (got {0}); the padding (κ−1)L/2 would vanish")]
    ExtensionTooSmall(usize),
    #[error("points per side {points} must be divisible by the extension factor {extension} so Ω aligns with grid nodes")]
    ResolutionNotDivisible { points: usize, extension: usize },
    #[error("points per side {points} with extension {extension} cannot center Ω on a grid node; (κ−1)·(N/κ) must be even")]
    InteriorMisaligned { points: usize, extension: usize },
    #[error("need at least 4 points per side, got {0}")]
    TooFewPoints(usize),
    #[error("field data contains a non-finite value")]
    NonFiniteData,
}

/// Uniform grid on the periodic extended box [0, κL)^d with an interior
/// window of (N/κ)^d nodes representing Ω.
///
/// Torus grids (no interior mask, extension factor 1) are a separate
/// restricted construction used by single-mode oracles; [`GridSpec::build`]
/// itself requires κ ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dimension: usize,
    points_per_side: usize,
    extension: usize,
    domain_side: f64,
    box_side: f64,
    interior_start: usize,
    interior_len: usize,
}

impl GridSpec {
    /// Grid for Ω = (0,L)^d centered in a periodic box of side κL with N
    /// points per side.
    pub fn build(
        dimension: usize,
        length: f64,
        extension: usize,
        points: usize,
    ) -> Result<Self, DomainError> {
        if dimension == 0 || dimension > 2 {
            return Err(DomainError::InvalidDimension(dimension));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(DomainError::InvalidLength(length));
        }
        if extension < 2 {
            return Err(DomainError::ExtensionTooSmall(extension));
        }
        if points < 4 {
            return Err(DomainError::TooFewPoints(points));
        }
        if points % extension != 0 {
            return Err(DomainError::ResolutionNotDivisible { points, extension });
        }
        let per_unit = points / extension;
        if (extension - 1) * per_unit % 2 != 0 {
            return Err(DomainError::InteriorMisaligned { points, extension });
        }
        Ok(GridSpec {
            dimension,
            points_per_side: points,
            extension,
            domain_side: length,
            box_side: extension as f64 * length,
            interior_start: (extension - 1) * per_unit / 2,
            interior_len: per_unit,
        })
    }

    /// Restricted torus grid: the whole box is "interior", no mask. Used for
    /// single-mode oracles where the operator acts on the plain torus.
    pub fn torus(dimension: usize, side: f64, points: usize) -> Result<Self, DomainError> {
        if dimension == 0 || dimension > 2 {
            return Err(DomainError::InvalidDimension(dimension));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(DomainError::InvalidLength(side));
        }
        if points < 4 {
            return Err(DomainError::TooFewPoints(points));
        }
        Ok(GridSpec {
            dimension,
            points_per_side: points,
            extension: 1,
            domain_side: side,
            box_side: side,
            interior_start: 0,
            interior_len: points,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points_per_side(&self) -> usize {
        self.points_per_side
    }

    pub fn extension_factor(&self) -> usize {
        self.extension
    }

    pub fn domain_side(&self) -> f64 {
        self.domain_side
    }

    pub fn box_side(&self) -> f64 {
        self.box_side
    }

    pub fn dx(&self) -> f64 {
        self.box_side / self.points_per_side as f64
    }

    pub fn total_nodes(&self) -> usize {
        self.points_per_side.pow(self.dimension as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dimension as i32)
    }

    /// Number of interior (Ω) nodes.
    pub fn interior_count(&self) -> usize {
        self.interior_len.pow(self.dimension as u32)
    }

    /// Is the whole box interior (torus construction)?
    pub fn is_torus(&self) -> bool {
        self.interior_len == self.points_per_side
    }

    fn axis_interior(&self, i: usize) -> bool {
        i >= self.interior_start && i < self.interior_start + self.interior_len
    }

    /// Does flat node index `k` lie in Ω? The interior window is half-open,
    /// [start, start + L) per axis, so it holds exactly (N/κ)^d nodes.
    pub fn is_interior(&self, k: usize) -> bool {
        match self.dimension {
            1 => self.axis_interior(k),
            2 => {
                let n = self.points_per_side;
                self.axis_interior(k / n) && self.axis_interior(k % n)
            }
            _ => unreachable!(),
        }
    }

    /// Physical coordinates of flat node index `k` (second entry 0 in 1D).
    pub fn node_position(&self, k: usize) -> [f64; 2] {
        let dx = self.dx();
        match self.dimension {
            1 => [k as f64 * dx, 0.0],
            2 => {
                let n = self.points_per_side;
                [(k / n) as f64 * dx, (k % n) as f64 * dx]
            }
            _ => unreachable!(),
        }
    }

    /// Lower corner of Ω.
    pub fn omega_origin(&self) -> f64 {
        self.interior_start as f64 * self.dx()
    }

    /// Center of Ω (same along each axis).
    pub fn omega_center(&self) -> f64 {
        self.omega_origin() + 0.5 * self.domain_side
    }
}

/// Scalar or vector field on a [`GridSpec`], stored as `components`
/// consecutive node-major planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    components: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec, components: usize) -> Self {
        assert!(components >= 1, "field needs at least one component");
        let len = components * grid.total_nodes();
        Field {
            grid,
            components,
            data: vec![0.0; len],
        }
    }

    /// Scalar field from a pointwise function of position, over the whole
    /// box (no mask).
    pub fn scalar_from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.total_nodes());
        for k in 0..grid.total_nodes() {
            data.push(f(grid.node_position(k)));
        }
        Field {
            grid,
            components: 1,
            data,
        }
    }

    /// Scalar field from a pointwise function, zeroed outside Ω.
    pub fn interior_from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut field = Self::scalar_from_fn(grid, f);
        field.mask_in_place();
        field
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.total_nodes();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.total_nodes();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn assert_compatible(&self, other: &Field) {
        assert!(
            self.grid == other.grid && self.components == other.components,
            "field shape mismatch: {:?}×{} vs {:?}×{}",
            self.grid,
            self.components,
            other.grid,
            other.components
        );
    }

    /// Weighted inner product ⟨f, g⟩ = Δx^d Σ_i f_i g_i over all components.
    pub fn inner(&self, other: &Field) -> f64 {
        self.assert_compatible(other);
        let dot: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum();
        dot * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// self ← self + alpha·other
    pub fn axpy(&mut self, alpha: f64, other: &Field) {
        self.assert_compatible(other);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.data {
            *a *= alpha;
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Zero every node outside Ω, in place. Idempotent, self-adjoint in the
    /// weighted inner product.
    pub fn mask_in_place(&mut self) {
        if self.grid.is_torus() {
            return;
        }
        let n = self.grid.total_nodes();
        for c in 0..self.components {
            for k in 0..n {
                if !self.grid.is_interior(k) {
                    self.data[c * n + k] = 0.0;
                }
            }
        }
    }

    pub fn masked(&self) -> Field {
        let mut out = self.clone();
        out.mask_in_place();
        out
    }

    /// Is every node outside Ω exactly zero?
    pub fn is_interior_supported(&self) -> bool {
        let n = self.grid.total_nodes();
        (0..self.components).all(|c| {
            (0..n).all(|k| self.grid.is_interior(k) || self.data[c * n + k] == 0.0)
        })
    }
}

/// Projection onto fields supported in Ω (zero extension outside).
pub fn mask_to_interior(f: &Field) -> Field {
    f.masked()
}

/// L², L^∞ and the H^s seminorm ‖D^s f‖_{L²} of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    pub linf: f64,
    pub hs_semi: f64,
}

/// Norms of `f`; the seminorm uses the Riesz multiplier |2πξ|^s (summed over
/// components for vector fields), computed spectrally via Parseval.
pub fn norms(f: &Field, s: f64) -> NormReport {
    assert!(s > 0.0 && s <= 1.0, "exponent s must lie in (0,1], got {s}");
    let grid = *f.grid();
    let weight = grid.cell_volume() / grid.total_nodes() as f64;
    let mut semi_sq = 0.0;
    for c in 0..f.components() {
        let spectrum = spectral::forward(&grid, f.component(c));
        for (k, v) in spectrum.iter().enumerate() {
            let w2 = spectral::two_pi_xi_sq(&grid, k);
            if w2 > 0.0 {
                semi_sq += w2.powf(s) * v.norm_sqr() * weight;
            }
        }
    }
    NormReport {
        l2: f.l2_norm(),
        linf: f.linf_norm(),
        hs_semi: semi_sq.sqrt(),
    }
}

/// Matrix-valued coefficient field (the A or B of 𝒜^s, ℬ^s): one d×d matrix
/// per node, with uniform ellipticity bounds
/// `lo·|η|² ≤ M(x)η·η` and `M(x)η·ζ ≤ hi·|η||ζ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    grid: GridSpec,
    /// d×d entries per node, node-major, row-major within the matrix.
    entries: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl CoefficientField {
    /// Identity coefficients (bounds 1, 1).
    pub fn identity(grid: GridSpec) -> Self {
        let d = grid.dimension();
        let mut entries = vec![0.0; grid.total_nodes() * d * d];
        for k in 0..grid.total_nodes() {
            for i in 0..d {
                entries[(k * d + i) * d + i] = 1.0;
            }
        }
        CoefficientField {
            grid,
            entries,
            lo: 1.0,
            hi: 1.0,
        }
    }

    /// Constant multiple of the identity (bounds c, c).
    pub fn scalar(grid: GridSpec, c: f64) -> Result<Self, DomainError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(DomainError::InvalidLength(c));
        }
        let mut out = Self::identity(grid);
        out.entries.iter_mut().for_each(|e| *e *= c);
        out.lo = c;
        out.hi = c;
        Ok(out)
    }

    /// Pointwise matrix from a function of position, with caller-supplied
    /// ellipticity bounds. The bounds are validated against the symmetric
    /// part of the matrix at every node (exact 1×1/2×2 eigenvalues) and the
    /// operator-norm bound against the full matrix.
    pub fn from_fn(
        grid: GridSpec,
        lo: f64,
        hi: f64,
        f: impl Fn([f64; 2]) -> [[f64; 2]; 2],
    ) -> Result<Self, DomainError> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(DomainError::InvalidLength(lo));
        }
        let d = grid.dimension();
        let mut entries = vec![0.0; grid.total_nodes() * d * d];
        // eigenvalue checks pick up roundoff in f; allow a whisker
        let slack = 1e-12 * hi.max(1.0);
        for k in 0..grid.total_nodes() {
            let m = f(grid.node_position(k));
            for i in 0..d {
                for j in 0..d {
                    let e = m[i][j];
                    if !e.is_finite() {
                        return Err(DomainError::NonFiniteData);
                    }
                    entries[(k * d + i) * d + j] = e;
                }
            }
            let (sym_min, op_norm) = if d == 1 {
                (m[0][0], m[0][0].abs())
            } else {
                let s01 = 0.5 * (m[0][1] + m[1][0]);
                let tr = m[0][0] + m[1][1];
                let disc = (0.5 * (m[0][0] - m[1][1])).hypot(s01);
                let sym_min = 0.5 * tr - disc;
                // crude but safe operator-norm bound: Frobenius
                let fro = (m[0][0] * m[0][0]
                    + m[0][1] * m[0][1]
                    + m[1][0] * m[1][0]
                    + m[1][1] * m[1][1])
                    .sqrt();
                (sym_min, fro)
            };
            if sym_min < lo - slack || op_norm > hi * (d as f64).sqrt() + slack {
                return Err(DomainError::InvalidLength(sym_min));
            }
        }
        Ok(CoefficientField {
            grid,
            entries,
            lo,
            hi,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn lower_bound(&self) -> f64 {
        self.lo
    }

    pub fn upper_bound(&self) -> f64 {
        self.hi
    }

    pub fn entry(&self, node: usize, i: usize, j: usize) -> f64 {
        let d = self.grid.dimension();
        self.entries[(node * d + i) * d + j]
    }

    /// Mean of tr(M)/d over the box — the constant-coefficient stand-in used
    /// by the Fourier preconditioner.
    pub fn mean_trace(&self) -> f64 {
        let d = self.grid.dimension();
        let n = self.grid.total_nodes();
        let mut acc = 0.0;
        for k in 0..n {
            for i in 0..d {
                acc += self.entry(k, i, i);
            }
        }
        acc / (n * d) as f64
    }

    /// Is M(x) symmetric at every node (within `tol`)?
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let d = self.grid.dimension();
        if d == 1 {
            return true;
        }
        (0..self.grid.total_nodes())
            .all(|k| (self.entry(k, 0, 1) - self.entry(k, 1, 0)).abs() <= tol)
    }

    /// out ← M(x)·v pointwise, where `v` and `out` are d-component fields.
    pub fn apply_pointwise(&self, v: &Field, out: &mut Field) {
        let d = self.grid.dimension();
        assert_eq!(v.components(), d, "coefficient expects a d-vector field");
        assert_eq!(out.components(), d);
        assert!(*v.grid() == self.grid, "coefficient/field grid mismatch");
        let n = self.grid.total_nodes();
        for k in 0..n {
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += self.entry(k, i, j) * v.component(j)[k];
                }
                out.component_mut(i)[k] = acc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_1d() -> GridSpec {
        GridSpec::build(1, 1.0, 8, 512).unwrap()
    }

    #[test]
    fn build_grid_validates_inputs() {
        assert_eq!(
            GridSpec::build(3, 1.0, 8, 512),
            Err(DomainError::InvalidDimension(3))
        );
        assert_eq!(
            GridSpec::build(1, 1.0, 1, 512),
            Err(DomainError::ExtensionTooSmall(1))
        );
        assert_eq!(
            GridSpec::build(1, 1.0, 8, 510),
            Err(DomainError::ResolutionNotDivisible {
                points: 510,
                extension: 8
            })
        );
        assert_eq!(
            GridSpec::build(1, -1.0, 8, 512),
            Err(DomainError::InvalidLength(-1.0))
        );
        // κ even with odd per-unit count cannot center Ω on a node
        assert_eq!(
            GridSpec::build(1, 1.0, 8, 72),
            Err(DomainError::InteriorMisaligned {
                points: 72,
                extension: 8
            })
        );
    }

    #[test]
    fn interior_window_matches_examples() {
        // d=1, L=1, κ=8, N=512 → 64 interior nodes per unit length
        let g = grid_1d();
        assert_eq!(g.interior_count(), 64);
        assert!((g.dx() - 1.0 / 64.0).abs() < 1e-15);
        // d=2, L=1, κ=4, N=256 → 64×64 interior block
        let g2 = GridSpec::build(2, 1.0, 4, 256).unwrap();
        assert_eq!(g2.interior_count(), 64 * 64);
        // padding is exactly (κ−1)L/2 on each side
        assert!((g.omega_origin() - 3.5).abs() < 1e-15);
    }

    #[test]
    fn interior_measure_is_exact() {
        let g = grid_1d();
        // indicator of Ω has L² norm exactly |Ω|^{1/2} = 1
        let ind = Field::interior_from_fn(g, |_| 1.0);
        assert!((ind.l2_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mask_is_idempotent_projection() {
        let g = grid_1d();
        let f = Field::scalar_from_fn(g, |[x, _]| (x * 1.7).sin() + 0.3);
        let once = f.masked();
        let twice = once.masked();
        assert_eq!(once, twice);
        assert!(once.is_interior_supported());
        // self-adjoint: ⟨mask f, g⟩ = ⟨f, mask g⟩
        let h = Field::scalar_from_fn(g, |[x, _]| (x - 4.0).cos());
        let lhs = f.masked().inner(&h);
        let rhs = f.inner(&h.masked());
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn mask_of_interior_supported_field_is_identity() {
        let g = grid_1d();
        let f = Field::interior_from_fn(g, |[x, _]| (x - 4.0) * (x - 4.0));
        assert_eq!(f, f.masked());
    }

    #[test]
    fn parseval_consistency() {
        // ‖f‖² computed nodally matches the spectral sum to 1e-12 relative
        let g = grid_1d();
        let f = Field::interior_from_fn(g, |[x, _]| (-30.0 * (x - 4.0) * (x - 4.0)).exp());
        let weight = g.cell_volume() / g.total_nodes() as f64;
        let spec_sq: f64 = crate::spectral::forward(&g, f.component(0))
            .iter()
            .map(|c| c.norm_sqr() * weight)
            .sum();
        let nodal_sq = f.inner(&f);
        assert!((spec_sq - nodal_sq).abs() <= 1e-12 * nodal_sq);
    }

    #[test]
    fn norms_of_single_mode() {
        // hs_semi of sin(2πkx/(κL)) is (2πk/(κL))^s times its l2 norm
        let g = GridSpec::torus(1, 1.0, 128).unwrap();
        let f = Field::scalar_from_fn(g, |[x, _]| (std::f64::consts::TAU * 3.0 * x).sin());
        let s = 0.6;
        let r = norms(&f, s);
        let expected = (std::f64::consts::TAU * 3.0).powf(s) * r.l2;
        assert!((r.hs_semi - expected).abs() <= 1e-10 * expected);
        assert!((r.linf - 1.0).abs() < 1e-9);
    }

    #[test]
    fn norms_scale_linearly() {
        let g = grid_1d();
        let f = Field::interior_from_fn(g, |[x, _]| (x - 4.0).sin());
        let mut f10 = f.clone();
        f10.scale(10.0);
        let a = norms(&f, 0.5);
        let b = norms(&f10, 0.5);
        assert!((b.l2 - 10.0 * a.l2).abs() <= 1e-12 * b.l2);
        assert!((b.hs_semi - 10.0 * a.hs_semi).abs() <= 1e-12 * b.hs_semi);
    }

    #[test]
    fn zero_field_norms_vanish() {
        let g = grid_1d();
        let z = Field::zeros(g, 1);
        let r = norms(&z, 0.5);
        assert_eq!((r.l2, r.linf, r.hs_semi), (0.0, 0.0, 0.0));
    }

    #[test]
    fn coefficient_identity_and_mean_trace() {
        let g = GridSpec::build(2, 1.0, 4, 64).unwrap();
        let id = CoefficientField::identity(g);
        assert!((id.mean_trace() - 1.0).abs() < 1e-15);
        assert!(id.is_symmetric(0.0));
        let sc = CoefficientField::scalar(g, 2.5).unwrap();
        assert!((sc.mean_trace() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn coefficient_from_fn_validates_bounds() {
        let g = GridSpec::build(1, 1.0, 4, 64).unwrap();
        // entries dip to 0.5 < claimed lower bound 1
        let bad = CoefficientField::from_fn(g, 1.0, 2.0, |_| [[0.5, 0.0], [0.0, 0.5]]);
        assert!(bad.is_err());
        let good = CoefficientField::from_fn(g, 0.4, 2.0, |_| [[0.5, 0.0], [0.0, 0.5]]);
        assert!(good.is_ok());
    }

    #[test]
    fn coefficient_apply_pointwise_2d() {
        let g = GridSpec::build(2, 1.0, 4, 16).unwrap();
        let coeff = CoefficientField::from_fn(g, 0.5, 4.0, |_| [[2.0, 1.0], [1.0, 3.0]]).unwrap();
        let mut v = Field::zeros(g, 2);
        v.component_mut(0).fill(1.0);
        v.component_mut(1).fill(-1.0);
        let mut out = Field::zeros(g, 2);
        coeff.apply_pointwise(&v, &mut out);
        assert!(out.component(0).iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(out.component(1).iter().all(|&x| (x + 2.0).abs() < 1e-15));
    }
}
