//! Linear convolution of real sequences, direct or via FFT.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Below this many multiply-adds the schoolbook product wins.
const DIRECT_WORK_LIMIT: usize = 1 << 15;

pub(crate) fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let short = a.len().min(b.len());
    if short <= 32 || a.len().saturating_mul(b.len()) <= DIRECT_WORK_LIMIT {
        return convolve_direct(a, b);
    }
    Convolver::new(b, a.len()).apply(a)
}

/// Convolution against a fixed kernel, with the kernel spectrum and FFT
/// plans cached for inputs up to `max_input` samples.
pub(crate) struct Convolver {
    kernel: Vec<f64>,
    spectrum: Option<Vec<Complex64>>,
    forward: Option<Arc<dyn Fft<f64>>>,
    inverse: Option<Arc<dyn Fft<f64>>>,
    size: usize,
}

impl Convolver {
    pub(crate) fn new(kernel: &[f64], max_input: usize) -> Self {
        let use_fft =
            kernel.len() > 32 && kernel.len().saturating_mul(max_input) > DIRECT_WORK_LIMIT;
        if !use_fft || kernel.is_empty() {
            return Self {
                kernel: kernel.to_vec(),
                spectrum: None,
                forward: None,
                inverse: None,
                size: 0,
            };
        }
        let size = (kernel.len() + max_input - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut spectrum: Vec<Complex64> = kernel
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(size)
            .collect();
        forward.process(&mut spectrum);
        let scale = 1.0 / size as f64;
        for z in &mut spectrum {
            *z *= scale;
        }
        Self {
            kernel: kernel.to_vec(),
            spectrum: Some(spectrum),
            forward: Some(forward),
            inverse: Some(inverse),
            size,
        }
    }

    pub(crate) fn apply(&self, input: &[f64]) -> Vec<f64> {
        if input.is_empty() || self.kernel.is_empty() {
            return Vec::new();
        }
        let (spectrum, forward, inverse) = match (&self.spectrum, &self.forward, &self.inverse) {
            (Some(s), Some(f), Some(i)) if input.len() + self.kernel.len() - 1 <= self.size => {
                (s, f, i)
            }
            _ => return convolve_direct(input, &self.kernel),
        };
        let mut buf: Vec<Complex64> = input
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(self.size)
            .collect();
        forward.process(&mut buf);
        for (z, k) in buf.iter_mut().zip(spectrum) {
            *z *= k;
        }
        inverse.process(&mut buf);
        buf.truncate(input.len() + self.kernel.len() - 1);
        buf.into_iter().map(|z| z.re).collect()
    }
}
