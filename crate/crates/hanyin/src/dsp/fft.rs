//! Thin wrappers over rustfft plus the analysis window.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// In-place forward FFT (unnormalized).
pub fn fft_forward(buf: &mut [Complex<f64>]) {
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

/// In-place inverse FFT (unnormalized; divide by length to invert
/// `fft_forward`).
pub fn fft_inverse(buf: &mut [Complex<f64>]) {
    FftPlanner::new().plan_fft_inverse(buf.len()).process(buf);
}

/// Periodic Hann window of length `n`: w[i] = 0.5 (1 - cos(2πi/n)).
///
/// The periodic form keeps bin-centered sinusoids exact: the window's
/// spectrum is nonzero only at bins 0 and ±1, and its sum is exactly n/2.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect()
}

/// Forward FFT of a real frame, zero-padded to `size`.
pub fn real_fft(frame: &[f64], size: usize) -> Vec<Complex<f64>> {
    assert!(size >= frame.len());
    let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    fft_forward(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hann_sums_to_half_length() {
        let w = hann(2048);
        let sum: f64 = w.iter().sum();
        assert!((sum - 1024.0).abs() < 1e-9);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn forward_then_inverse_recovers_signal() {
        let signal: Vec<f64> = (0..64).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
        let mut buf = real_fft(&signal, 64);
        fft_inverse(&mut buf);
        for (orig, c) in signal.iter().zip(&buf) {
            assert!((orig - c.re / 64.0).abs() < 1e-12);
            assert!(c.im.abs() < 1e-12);
        }
    }
}
