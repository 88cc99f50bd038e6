//! Per-line sub-grid translations by zero-padded Fourier shifting.
//!
//! A shear moves every line of the array by its own (fractional) number of
//! grid spacings. Each line is padded with zeros to a length that exceeds the
//! largest shift, so content pushed off the grid lands in the padding and is
//! dropped rather than wrapping around: off-grid feet read as zero.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Parallelism;

/// Zero padding kept beyond the largest shift, in grid spacings.
const PAD_MARGIN: usize = 32;
/// Phase ramps are re-anchored with a direct `sin_cos` this often.
const ANCHOR_EVERY: usize = 32;

/// Smallest `n' ≥ n` with no prime factor above 5.
fn smooth_size(n: usize) -> usize {
    (n..)
        .find(|&m| {
            let mut r = m;
            for f in [2, 3, 5] {
                while r % f == 0 {
                    r /= f;
                }
            }
            r == 1
        })
        .unwrap()
}

/// One precomputed shear over `lines` lines of `len` contiguous points.
pub(crate) struct LineShear {
    len: usize,
    fft_len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Per-line multiplier `e^{−2πi k s / L} / L`, or `None` for zero shift.
    ramps: Vec<Option<Vec<Complex64>>>,
}

impl LineShear {
    /// `shifts[j]` is the displacement of line `j` in grid spacings: the new
    /// line is `f(x − s)`.
    pub(crate) fn new(planner: &mut FftPlanner<f64>, len: usize, shifts: &[f64]) -> Self {
        let max = shifts.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let fft_len = smooth_size(len + max.ceil() as usize + PAD_MARGIN);
        let ramps = shifts
            .iter()
            .map(|&s| (s != 0.0).then(|| phase_ramp(s, fft_len)))
            .collect();
        LineShear {
            len,
            fft_len,
            fwd: planner.plan_fft_forward(fft_len),
            inv: planner.plan_fft_inverse(fft_len),
            ramps,
        }
    }

    pub(crate) fn apply(&self, data: &mut [Complex64], par: Parallelism) {
        assert_eq!(data.len(), self.len * self.ramps.len());
        let scratch_len = self
            .fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len());
        let init = || {
            (
                vec![Complex64::default(); self.fft_len],
                vec![Complex64::default(); scratch_len],
            )
        };
        let work = |bufs: &mut (Vec<Complex64>, Vec<Complex64>),
                    (line, ramp): (&mut [Complex64], &Option<Vec<Complex64>>)| {
            if let Some(ramp) = ramp {
                self.shift_line(line, ramp, &mut bufs.0, &mut bufs.1);
            }
        };
        match par {
            #[cfg(feature = "parallel")]
            Parallelism::Parallel => {
                use rayon::prelude::*;
                data.par_chunks_mut(self.len)
                    .zip(self.ramps.par_iter())
                    .for_each_init(init, work);
            }
            _ => {
                let mut bufs = init();
                for item in data.chunks_mut(self.len).zip(self.ramps.iter()) {
                    work(&mut bufs, item);
                }
            }
        }
    }

    fn shift_line(
        &self,
        line: &mut [Complex64],
        ramp: &[Complex64],
        buf: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        buf[..self.len].copy_from_slice(line);
        buf[self.len..].fill(Complex64::default());
        self.fwd.process_with_scratch(buf, scratch);
        for (b, r) in buf.iter_mut().zip(ramp) {
            *b *= r;
        }
        self.inv.process_with_scratch(buf, scratch);
        line.copy_from_slice(&buf[..self.len]);
    }
}

/// `e^{−2πi k s / L} / L` over the FFT frequency layout; the Nyquist bin of an
/// even length gets the symmetric `cos(π s)` weight.
fn phase_ramp(s: f64, l: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); l];
    let scale = 1.0 / l as f64;
    let dtheta = -2.0 * std::f64::consts::PI * s / l as f64;
    let step = Complex64::from_polar(1.0, dtheta);
    let half = l / 2;
    let mut w = Complex64::new(1.0, 0.0);
    for k in 0..=half {
        if k % ANCHOR_EVERY == 0 {
            w = Complex64::from_polar(1.0, dtheta * k as f64);
        }
        if k == half && l % 2 == 0 {
            out[k] = Complex64::new((std::f64::consts::PI * s).cos() * scale, 0.0);
        } else {
            out[k] = w * scale;
            if k > 0 {
                out[l - k] = w.conj() * scale;
            }
        }
        w *= step;
    }
    out
}

/// Transpose of a `rows × cols` row-major array into `out`.
pub(crate) fn transpose(data: &[Complex64], rows: usize, cols: usize, out: &mut [Complex64]) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    out[c * rows + r] = data[r * cols + c];
                }
            }
        }
    }
}
