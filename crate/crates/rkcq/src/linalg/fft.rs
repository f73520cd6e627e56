//! Scaled inverse discrete Fourier transforms on the quadrature contour.
//!
//! The weight generation evaluates, for samples `s_l` taken at the contour
//! nodes `lambda * zeta^{-l}` with `zeta = exp(2 pi i / (Q+1))`,
//!
//! ```text
//! w_n = lambda^{-n} / (Q+1) * sum_l s_l * zeta^{l n},   n = 0..Q,
//! ```
//!
//! which is an unnormalized inverse DFT followed by the radial rescaling.
//! Lengths are exactly Q+1; rustfft covers non power-of-two sizes with
//! mixed-radix and Bluestein plans.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::par;

/// Transform a single sample sequence; returns all Q+1 coefficients.
pub fn inverse_contour_all(samples: &[Complex64], lambda: f64) -> Vec<Complex64> {
    assert!(lambda > 0.0, "contour radius must be positive");
    let q1 = samples.len();
    assert!(q1 > 0);
    let mut buf = samples.to_vec();
    let fft = FftPlanner::new().plan_fft_inverse(q1);
    fft.process(&mut buf);
    rescale(&mut buf, lambda);
    buf
}

/// Single coefficient; convenience wrapper over [`inverse_contour_all`].
pub fn inverse_contour_at(samples: &[Complex64], lambda: f64, n: usize) -> Complex64 {
    inverse_contour_all(samples, lambda)[n]
}

fn rescale(buf: &mut [Complex64], lambda: f64) {
    let q1 = buf.len() as f64;
    let mut radial = 1.0 / q1;
    for v in buf.iter_mut() {
        *v *= radial;
        radial /= lambda;
    }
}

/// In-place entrywise transform of a stack of `count_l` matrices, each with
/// `entry_count` entries, stored contiguously (`stack[l * entry_count + e]`).
///
/// After the call, slice `n` of the stack holds weight `n` for n = 0..count_l-1.
/// Entries are independent, so the loop is parallel; writes are disjoint by
/// entry index.
pub fn inverse_contour_stack(stack: &mut [Complex64], count_l: usize, entry_count: usize, lambda: f64) {
    assert_eq!(stack.len(), count_l * entry_count);
    assert!(lambda > 0.0);
    if entry_count == 0 || count_l == 0 {
        return;
    }
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(count_l);
    let scales: Vec<f64> = {
        let mut s = Vec::with_capacity(count_l);
        let mut radial = 1.0 / count_l as f64;
        for _ in 0..count_l {
            s.push(radial);
            radial /= lambda;
        }
        s
    };

    struct Shared(*mut Complex64);
    unsafe impl Send for Shared {}
    unsafe impl Sync for Shared {}
    impl Shared {
        fn get(&self) -> *mut Complex64 {
            self.0
        }
    }
    let base = Shared(stack.as_mut_ptr());
    let scratch_len = fft.get_inplace_scratch_len();

    // Chunk the entry range; each chunk gathers its strided series, runs the
    // FFT in a local buffer and scatters back to the same disjoint positions.
    let chunk = 256usize;
    let n_chunks = entry_count.div_ceil(chunk);
    par::par_for_each(n_chunks, |ci| {
        let e0 = ci * chunk;
        let e1 = (e0 + chunk).min(entry_count);
        let mut series = vec![Complex64::ZERO; count_l];
        let mut scratch = vec![Complex64::ZERO; scratch_len];
        let ptr = base.get();
        for e in e0..e1 {
            // Safety: each entry index e is visited by exactly one chunk, and
            // distinct entries touch distinct positions l*entry_count + e.
            unsafe {
                for l in 0..count_l {
                    series[l] = *ptr.add(l * entry_count + e);
                }
                fft.process_with_scratch(&mut series, &mut scratch);
                for (l, (v, s)) in series.iter().zip(&scales).enumerate() {
                    *ptr.add(l * entry_count + e) = v * s;
                }
            }
        }
    });
}

