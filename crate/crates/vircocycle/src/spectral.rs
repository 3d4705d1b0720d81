//! FFT helpers on uniform grids of the unit circle.
//!
//! Samples are taken at φ_j = 2πj/G. Coefficient arrays returned by
//! [`analyze`] hold c_k at index k mod G.

use crate::C64;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::f64::consts::PI;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT (sign −1), unnormalized.
pub fn fft_in_place(buf: &mut [C64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// In-place inverse DFT (sign +1), unnormalized.
pub fn ifft_in_place(buf: &mut [C64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
}

/// Fourier coefficients of grid samples: c_k = (1/G) Σ_j f_j e^{−ikφ_j}.
pub fn analyze(samples: &[C64]) -> Vec<C64> {
    let mut buf = samples.to_vec();
    fft_in_place(&mut buf);
    let scale = 1.0 / samples.len() as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Samples Σ_k c_k e^{ikφ_j} from a coefficient array indexed mod G.
pub fn synthesize(coeffs: &[C64]) -> Vec<C64> {
    let mut buf = coeffs.to_vec();
    ifft_in_place(&mut buf);
    buf
}

/// Coefficient k of an array indexed mod G.
#[inline]
pub fn mode(c: &[C64], k: i64) -> C64 {
    let g = c.len() as i64;
    c[k.rem_euclid(g) as usize]
}

/// Grid angles 2πj/G.
pub fn angles(g: usize) -> Vec<f64> {
    (0..g).map(|j| 2.0 * PI * j as f64 / g as f64).collect()
}

/// Grid points e^{iφ_j}.
pub fn grid_points(g: usize) -> Vec<C64> {
    angles(g)
        .into_iter()
        .map(|p| C64::from_polar(1.0, p))
        .collect()
}

/// Oversampled grid size used for nonlinear operations at truncation `n`.
pub fn grid_for(n: usize) -> usize {
    (8 * n.max(1)).next_power_of_two().max(128)
}

/// Normalized 2D coefficients of a g×g row-major sample array.
pub fn analyze2(samples: &[C64], g: usize) -> Vec<C64> {
    let mut buf = samples.to_vec();
    for row in buf.chunks_mut(g) {
        fft_in_place(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); g];
    for j in 0..g {
        for i in 0..g {
            col[i] = buf[i * g + j];
        }
        fft_in_place(&mut col);
        for i in 0..g {
            buf[i * g + j] = col[i];
        }
    }
    let scale = 1.0 / (g * g) as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Spectral d/dφ of grid samples.
pub fn derivative_phi(samples: &[C64]) -> Vec<C64> {
    let g = samples.len();
    let mut c = analyze(samples);
    let half = g / 2;
    for (i, ci) in c.iter_mut().enumerate() {
        let k = if i < half {
            i as i64
        } else if i > half {
            i as i64 - g as i64
        } else {
            0
        };
        *ci *= C64::new(0.0, k as f64);
    }
    synthesize(&c)
}

/// Trapezoid rule for ∮ f dg = ∫₀^{2π} f(φ) g′(φ) dφ with g′ spectral.
pub fn contour_integral(f: &[C64], g: &[C64]) -> C64 {
    let dg = derivative_phi(g);
    let h = 2.0 * PI / f.len() as f64;
    f.iter().zip(&dg).map(|(a, b)| a * b).sum::<C64>() * h
}

/// Winding number of nonvanishing samples around 0.
pub fn winding(samples: &[C64]) -> i64 {
    let mut total = 0.0;
    let g = samples.len();
    for j in 0..g {
        let a = samples[j];
        let b = samples[(j + 1) % g];
        total += (b / a).arg();
    }
    (total / (2.0 * PI)).round() as i64
}
