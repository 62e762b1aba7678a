//! Maximal monotone graphs β ⊂ ℝ × ℝ with 0 ∈ β(0), their resolvents,
//! Yosida approximations and Moreau envelopes.
//!
//! Two families cover the constraint terms the solver needs:
//!
//! * `interval(a, b)` — the subdifferential of the indicator of [a, b]
//!   (a ≤ 0 ≤ b, either end may be infinite): the obstacle constraint
//!   u ∈ [a, b]. `free()` is the unconstrained special case (−∞, ∞).
//! * `staircase(knots, …)` — a piecewise affine monotone graph with vertical
//!   jump segments at prescribed knots, e.g. adhesion or dry-friction laws.
//!
//! For λ > 0 the resolvent J_λ = (I + λβ)^{-1} is single valued and
//! nonexpansive; the Yosida approximation β^λ(r) = (r − J_λ r)/λ is monotone
//! and 1/λ-Lipschitz, and equals the derivative of the Moreau envelope
//! j^λ(r) = j(J_λ r) + (r − J_λ r)²/(2λ) of the primitive j = ∫β. Because
//! both graph families are piecewise affine, r ↦ J_λ(r) is inverted exactly,
//! piece by piece — no iteration is involved — and the result is clamped to
//! the interval between 0 and r (a mathematical identity for graphs through
//! the origin), which pins β^λ(0) = 0 and |β^λ(r)| ≤ |r|/λ to machine
//! precision.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MonotoneError {
    #[error("interval [{a}, {b}] must contain 0 with a ≤ b")]
    InvalidInterval { a: f64, b: f64 },
    #[error("staircase needs at least one knot")]
    EmptyStaircase,
    #[error("knot abscissae must be finite and strictly increasing")]
    UnsortedKnots,
    #[error("knot at x = {x} has lo = {lo} > hi = {hi}")]
    KnotOrder { x: f64, lo: f64, hi: f64 },
    #[error("graph decreases between x = {x0} and x = {x1}")]
    DecreasingRun { x0: f64, x1: f64 },
    #[error("boundary slope {0} must be finite and nonnegative")]
    BadBoundarySlope(f64),
    #[error("graph does not pass through the origin: β(0) = {0}")]
    OriginMissed(f64),
    #[error("graph data must be finite")]
    NonFiniteData,
    #[error("probe range ({0}, {1}) must be finite with lo < hi")]
    BadProbeRange(f64, f64),
    #[error("penalty parameters must be finite and positive")]
    BadEpsilon,
}

/// One vertical segment of a staircase graph: β(x) = [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub x: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Interval {
        a: f64,
        b: f64,
    },
    Staircase {
        knots: Vec<Knot>,
        slope_before: f64,
        slope_after: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneGraph {
    kind: Kind,
}

/// Identifies which affine piece of the transformed graph x + λβ(x) a given
/// right-hand side r falls on.
enum Piece {
    /// r lands inside a vertical segment: the resolvent sticks at knot `x`.
    Jump { x: f64 },
    /// r lands on an affine run β(t) = v_ref + σ(t − t_ref).
    Run { t_ref: f64, v_ref: f64, sigma: f64 },
}

impl MonotoneGraph {
    /// Subdifferential of the indicator of [a, b]; requires a ≤ 0 ≤ b.
    pub fn interval(a: f64, b: f64) -> Result<Self, MonotoneError> {
        if a.is_nan() || b.is_nan() || !(a <= 0.0 && 0.0 <= b) {
            return Err(MonotoneError::InvalidInterval { a, b });
        }
        Ok(MonotoneGraph {
            kind: Kind::Interval { a, b },
        })
    }

    /// The trivial graph β ≡ 0 (no constraint).
    pub fn free() -> Self {
        MonotoneGraph {
            kind: Kind::Interval {
                a: f64::NEG_INFINITY,
                b: f64::INFINITY,
            },
        }
    }

    /// Piecewise affine graph with vertical segments [lo, hi] at each knot,
    /// affine interpolation between consecutive knots, and prescribed slopes
    /// before the first and after the last knot. Monotonicity and 0 ∈ β(0)
    /// are validated; the origin check tolerates 1e−12 of roundoff in the
    /// supplied data.
    pub fn staircase(
        knots: Vec<Knot>,
        slope_before: f64,
        slope_after: f64,
    ) -> Result<Self, MonotoneError> {
        if knots.is_empty() {
            return Err(MonotoneError::EmptyStaircase);
        }
        for k in &knots {
            if !(k.x.is_finite() && k.lo.is_finite() && k.hi.is_finite()) {
                return Err(MonotoneError::NonFiniteData);
            }
            if k.lo > k.hi {
                return Err(MonotoneError::KnotOrder {
                    x: k.x,
                    lo: k.lo,
                    hi: k.hi,
                });
            }
        }
        for w in knots.windows(2) {
            if !(w[0].x < w[1].x) {
                return Err(MonotoneError::UnsortedKnots);
            }
            if w[1].lo < w[0].hi {
                return Err(MonotoneError::DecreasingRun {
                    x0: w[0].x,
                    x1: w[1].x,
                });
            }
        }
        for &s in &[slope_before, slope_after] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(MonotoneError::BadBoundarySlope(s));
            }
        }
        let graph = MonotoneGraph {
            kind: Kind::Staircase {
                knots,
                slope_before,
                slope_after,
            },
        };
        // 0 ∈ β(0): on a knot the segment must straddle zero, between knots
        // the affine value must vanish
        let miss = graph.origin_defect();
        if miss.abs() > 1e-12 {
            return Err(MonotoneError::OriginMissed(miss));
        }
        Ok(graph)
    }

    /// Distance from β(0) to 0 (signed; 0 when the graph passes through the
    /// origin).
    fn origin_defect(&self) -> f64 {
        match &self.kind {
            Kind::Interval { .. } => 0.0,
            Kind::Staircase { knots, .. } => {
                for k in knots {
                    if k.x == 0.0 {
                        return if k.lo <= 0.0 && 0.0 <= k.hi {
                            0.0
                        } else if k.lo > 0.0 {
                            k.lo
                        } else {
                            k.hi
                        };
                    }
                }
                match self.affine_piece(0.0) {
                    Piece::Run {
                        t_ref,
                        v_ref,
                        sigma,
                    } => v_ref + sigma * (0.0 - t_ref),
                    Piece::Jump { .. } => unreachable!("no knot at 0 here"),
                }
            }
        }
    }

    /// Domain of β: the interval outside which the graph takes no values.
    pub fn domain(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Interval { a, b } => (*a, *b),
            Kind::Staircase { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Distance from r to the domain of β (the pointwise constraint
    /// violation; zero for graphs defined on all of ℝ).
    pub fn violation(&self, r: f64) -> f64 {
        let (a, b) = self.domain();
        if r < a {
            a - r
        } else if r > b {
            r - b
        } else {
            0.0
        }
    }

    /// True for subdifferentials of interval indicators (as opposed to
    /// staircase graphs), the only case where "distance to the constraint
    /// set" is meaningful.
    pub fn is_interval(&self) -> bool {
        matches!(self.kind, Kind::Interval { .. })
    }

    /// True when β ≡ 0, so every penalty term vanishes identically.
    pub fn is_trivial(&self) -> bool {
        matches!(
            self.kind,
            Kind::Interval { a, b } if a == f64::NEG_INFINITY && b == f64::INFINITY
        )
    }

    /// The affine piece of the staircase containing abscissa `t` (which must
    /// not be a knot). Panics on interval graphs.
    fn affine_piece(&self, t: f64) -> Piece {
        let Kind::Staircase {
            knots,
            slope_before,
            slope_after,
        } = &self.kind
        else {
            unreachable!("affine_piece is a staircase helper")
        };
        let first = &knots[0];
        if t < first.x {
            return Piece::Run {
                t_ref: first.x,
                v_ref: first.lo,
                sigma: *slope_before,
            };
        }
        let last = knots.last().unwrap();
        if t > last.x {
            return Piece::Run {
                t_ref: last.x,
                v_ref: last.hi,
                sigma: *slope_after,
            };
        }
        let i = knots.partition_point(|k| k.x < t) - 1;
        let (k0, k1) = (&knots[i], &knots[i + 1]);
        Piece::Run {
            t_ref: k0.x,
            v_ref: k0.hi,
            sigma: (k1.lo - k0.hi) / (k1.x - k0.x),
        }
    }

    /// Which piece of x + λβ(x) the right-hand side `r` falls on.
    fn transformed_piece(&self, r: f64, lambda: f64) -> Piece {
        let Kind::Staircase {
            knots,
            slope_before,
            slope_after,
        } = &self.kind
        else {
            unreachable!("transformed_piece is a staircase helper")
        };
        let first = &knots[0];
        if r < first.x + lambda * first.lo {
            return Piece::Run {
                t_ref: first.x,
                v_ref: first.lo,
                sigma: *slope_before,
            };
        }
        let last = knots.last().unwrap();
        if r > last.x + lambda * last.hi {
            return Piece::Run {
                t_ref: last.x,
                v_ref: last.hi,
                sigma: *slope_after,
            };
        }
        for (i, k) in knots.iter().enumerate() {
            if r <= k.x + lambda * k.hi {
                if r >= k.x + lambda * k.lo {
                    return Piece::Jump { x: k.x };
                }
                // between the previous knot's hi and this knot's lo
                let k0 = &knots[i - 1];
                return Piece::Run {
                    t_ref: k0.x,
                    v_ref: k0.hi,
                    sigma: (k.lo - k0.hi) / (k.x - k0.x),
                };
            }
        }
        unreachable!("r bracketed by first/last checks")
    }

    /// Resolvent J_λ(r) = (I + λβ)^{-1}(r), λ > 0. Piecewise affine graphs
    /// are inverted exactly; the result is clamped between 0 and r, an
    /// identity for monotone graphs through the origin that protects
    /// β^λ(0) = 0 and |β^λ(r)| ≤ |r|/λ against roundoff.
    pub fn resolvent(&self, r: f64, lambda: f64) -> f64 {
        debug_assert!(lambda > 0.0, "resolvent parameter must be positive");
        let p = match &self.kind {
            Kind::Interval { a, b } => r.max(*a).min(*b),
            Kind::Staircase { .. } => match self.transformed_piece(r, lambda) {
                Piece::Jump { x } => x,
                Piece::Run {
                    t_ref,
                    v_ref,
                    sigma,
                } => {
                    // solve t + λ(v_ref + σ(t − t_ref)) = r
                    (r - lambda * v_ref + lambda * sigma * t_ref) / (1.0 + lambda * sigma)
                }
            },
        };
        p.max(r.min(0.0)).min(r.max(0.0))
    }

    /// Yosida approximation β^ε(r) = (r − J_ε r)/ε.
    pub fn yosida(&self, r: f64, eps: f64) -> f64 {
        (r - self.resolvent(r, eps)) / eps
    }

    /// An element of the generalized derivative of r ↦ β^ε(r), used as the
    /// Newton linearization. Piecewise: 1/ε where the resolvent sticks
    /// (violated interval constraint, staircase jump), σ/(1+εσ) on an affine
    /// run of slope σ, 0 where the resolvent is the identity.
    pub fn yosida_slope(&self, r: f64, eps: f64) -> f64 {
        match &self.kind {
            Kind::Interval { a, b } => {
                if r < *a || r > *b {
                    1.0 / eps
                } else {
                    0.0
                }
            }
            Kind::Staircase { .. } => match self.transformed_piece(r, eps) {
                Piece::Jump { .. } => 1.0 / eps,
                Piece::Run { sigma, .. } => sigma / (1.0 + eps * sigma),
            },
        }
    }

    /// Primitive j(x) = ∫₀ˣ β (the convex potential): the indicator of
    /// [a, b] for interval graphs (+∞ outside), a piecewise quadratic for
    /// staircases.
    pub fn primitive(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Interval { a, b } => {
                if x < *a || x > *b {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Kind::Staircase { knots, .. } => {
                if x == 0.0 {
                    return 0.0;
                }
                let (lo, hi) = if x >= 0.0 { (0.0, x) } else { (x, 0.0) };
                let mut pts = vec![lo];
                for k in knots {
                    if k.x > lo && k.x < hi {
                        pts.push(k.x);
                    }
                }
                pts.push(hi);
                let mut acc = 0.0;
                for w in pts.windows(2) {
                    let (t0, t1) = (w[0], w[1]);
                    if t0 == t1 {
                        continue;
                    }
                    let Piece::Run {
                        t_ref,
                        v_ref,
                        sigma,
                    } = self.affine_piece(0.5 * (t0 + t1))
                    else {
                        unreachable!("segment midpoints avoid knots")
                    };
                    let v0 = v_ref + sigma * (t0 - t_ref);
                    let dt = t1 - t0;
                    acc += v0 * dt + 0.5 * sigma * dt * dt;
                }
                if x >= 0.0 {
                    acc
                } else {
                    -acc
                }
            }
        }
    }

    /// Moreau envelope j^ε(r) = j(J_ε r) + (r − J_ε r)²/(2ε): the C¹ convex
    /// penalty whose derivative is the Yosida approximation.
    pub fn moreau_envelope(&self, r: f64, eps: f64) -> f64 {
        let p = self.resolvent(r, eps);
        let inner = match &self.kind {
            // the projection lands inside [a, b]: the indicator vanishes
            Kind::Interval { .. } => 0.0,
            Kind::Staircase { .. } => self.primitive(p),
        };
        inner + (r - p) * (r - p) / (2.0 * eps)
    }

    /// Searches for constants (c₁, c₂) with |β^ε(r)| ≤ c₁ β^ε(r)·r + c₂ on
    /// the sampled probe range, uniformly over the supplied ε values. The
    /// returned pair is certified against the sample set only: for graphs
    /// whose domain boundary touches 0 (e.g. [0, ∞)) no ε-independent pair
    /// exists, and c₂ genuinely grows like 1/ε as smaller ε enter the set.
    pub fn coercivity_constants(
        &self,
        probe_range: (f64, f64),
        eps_samples: &[f64],
    ) -> Result<(f64, f64), MonotoneError> {
        let (lo, hi) = probe_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(MonotoneError::BadProbeRange(lo, hi));
        }
        if eps_samples.is_empty() || eps_samples.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(MonotoneError::BadEpsilon);
        }
        let mut candidates = vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
        let (a, b) = self.domain();
        if b.is_finite() && b > 0.0 {
            candidates.push(1.0 / b);
        }
        if a.is_finite() && a < 0.0 {
            candidates.push(1.0 / -a);
        }
        const SAMPLES: usize = 2001;
        // the objective r ↦ |β^ε(r)| − c₁ β^ε(r) r is piecewise quadratic, so
        // a coarse scan plus two rounds of bracket refinement around the
        // argmax recovers the true supremum to roundoff
        let sup = |c1: f64, eps: f64, lo: f64, hi: f64| -> (f64, f64) {
            let mut max = f64::NEG_INFINITY;
            let mut arg = lo;
            for i in 0..SAMPLES {
                let r = lo + (hi - lo) * i as f64 / (SAMPLES - 1) as f64;
                let y = self.yosida(r, eps);
                let v = y.abs() - c1 * y * r;
                if v > max {
                    max = v;
                    arg = r;
                }
            }
            (max, arg)
        };
        let mut best: Option<(f64, f64)> = None;
        for &c1 in &candidates {
            let mut c2 = 0.0_f64;
            for &eps in eps_samples {
                let h = (hi - lo) / (SAMPLES - 1) as f64;
                let (mut max, mut arg) = sup(c1, eps, lo, hi);
                for shrink in [h, h / 500.0] {
                    let (m, a) = sup(c1, eps, (arg - shrink).max(lo), (arg + shrink).min(hi));
                    if m > max {
                        max = m;
                        arg = a;
                    }
                }
                c2 = c2.max(max);
            }
            let better = match best {
                None => true,
                Some((bc1, bc2)) => c2 < bc2 || (c2 == bc2 && c1 < bc1),
            };
            if better {
                best = Some((c1, c2));
            }
        }
        Ok(best.unwrap())
    }
}
