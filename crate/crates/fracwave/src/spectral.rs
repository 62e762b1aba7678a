//! Internal spectral plumbing shared by `domain` and `frac_ops`: cached FFT
//! plans, real-field transforms on the extended box, and frequency tables.
//!
//! Conventions: the forward transform is unnormalized (rustfft), the inverse
//! divides by the node count, so `inverse(forward(u)) == u` up to roundoff.
//! Frequencies follow the standard FFT layout `k ∈ {0,…,N/2−1, −N/2,…,−1}`
//! with physical frequency ξ = k / (box side).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::domain::GridSpec;

type PlanKey = (usize, bool);

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Forward DFT of one real scalar plane on `grid` (1D or 2D row-major).
pub(crate) fn forward(grid: &GridSpec, plane: &[f64]) -> Vec<Complex64> {
    debug_assert_eq!(plane.len(), grid.total_nodes());
    let mut buf: Vec<Complex64> = plane.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    transform(grid, &mut buf, false);
    buf
}

/// Inverse DFT back to a real plane. Returns the real part; the imaginary
/// residue of a conjugate-symmetric spectrum is pure roundoff.
pub(crate) fn inverse_real(grid: &GridSpec, spectrum: Vec<Complex64>) -> Vec<f64> {
    inverse_complex(grid, spectrum).iter().map(|c| c.re).collect()
}

/// Normalized inverse DFT keeping the full complex output, so callers can
/// inspect the imaginary residue that `inverse_real` truncates.
pub(crate) fn inverse_complex(grid: &GridSpec, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
    transform(grid, &mut spectrum, true);
    let scale = 1.0 / grid.total_nodes() as f64;
    spectrum.iter_mut().for_each(|c| *c *= scale);
    spectrum
}

fn transform(grid: &GridSpec, buf: &mut [Complex64], inverse: bool) {
    let n = grid.points_per_side();
    match grid.dimension() {
        1 => plan(n, inverse).process(buf),
        2 => {
            let row_plan = plan(n, inverse);
            for row in buf.chunks_exact_mut(n) {
                row_plan.process(row);
            }
            let mut col = vec![Complex64::default(); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = buf[i * n + j];
                }
                row_plan.process(&mut col);
                for i in 0..n {
                    buf[i * n + j] = col[i];
                }
            }
        }
        d => unreachable!("unsupported dimension {d}"),
    }
}

/// Integer frequency for index `i` on an axis of `n` points:
/// 0, 1, …, n/2−1, −n/2, …, −1.
pub(crate) fn freq_index(i: usize, n: usize) -> i64 {
    if i <= (n - 1) / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// True when index `i` is the unpaired (self-conjugate) Nyquist bin.
pub(crate) fn is_nyquist(i: usize, n: usize) -> bool {
    n % 2 == 0 && i == n / 2
}

/// Physical frequency vector ξ (per axis) at flat spectral index `k`.
pub(crate) fn xi(grid: &GridSpec, k: usize) -> [f64; 2] {
    let n = grid.points_per_side();
    let side = grid.box_side();
    match grid.dimension() {
        1 => [freq_index(k, n) as f64 / side, 0.0],
        2 => {
            let (i, j) = (k / n, k % n);
            [
                freq_index(i, n) as f64 / side,
                freq_index(j, n) as f64 / side,
            ]
        }
        d => unreachable!("unsupported dimension {d}"),
    }
}

/// |2πξ|² at flat spectral index `k` (zero at the zero mode).
pub(crate) fn two_pi_xi_sq(grid: &GridSpec, k: usize) -> f64 {
    let [x, y] = xi(grid, k);
    let tau = std::f64::consts::TAU;
    (tau * x) * (tau * x) + (tau * y) * (tau * y)
}

/// True when any axis of flat spectral index `k` sits on the Nyquist bin.
pub(crate) fn has_nyquist_axis(grid: &GridSpec, k: usize) -> bool {
    let n = grid.points_per_side();
    match grid.dimension() {
        1 => is_nyquist(k, n),
        2 => is_nyquist(k / n, n) || is_nyquist(k % n, n),
        d => unreachable!("unsupported dimension {d}"),
    }
}
