//! Test-only spectral measurement: coarse FFT peak pick refined by a direct
//! evaluation of the windowed DTFT.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Magnitude of the Hann-windowed DTFT at `freq`, scaled so a unit sine reads 1.
pub fn amplitude_at(samples: &[f64], rate: f64, freq: f64) -> f64 {
    let w = hann(samples.len());
    let (mut re, mut im) = (0.0, 0.0);
    let step = 2.0 * PI * freq / rate;
    for (i, (x, wi)) in samples.iter().zip(&w).enumerate() {
        let ph = step * i as f64;
        re += x * wi * ph.cos();
        im -= x * wi * ph.sin();
    }
    2.0 * (re * re + im * im).sqrt() / w.iter().sum::<f64>()
}

/// Frequency of the strongest spectral peak, in Hz.
pub fn dominant_frequency(samples: &[f64], rate: f64) -> f64 {
    let n = samples.len();
    let padded = (4 * n).next_power_of_two();
    let w = hann(n);
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .zip(&w)
        .map(|(x, wi)| Complex::new(x * wi, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(padded)
        .collect();
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let (peak_bin, _) = buf[1..padded / 2]
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1, c.norm()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });

    // golden-section search on the exact DTFT within one coarse bin
    let bin_hz = rate / padded as f64;
    let mut lo = (peak_bin as f64 - 1.0) * bin_hz;
    let mut hi = (peak_bin as f64 + 1.0) * bin_hz;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (amplitude_at(samples, rate, a), amplitude_at(samples, rate, b));
    for _ in 0..40 {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = amplitude_at(samples, rate, a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = amplitude_at(samples, rate, b);
        }
    }
    (lo + hi) / 2.0
}

pub fn sine(freq: f64, rate: u32, secs: f64, amp: f64) -> Vec<f64> {
    (0..(rate as f64 * secs).round() as usize)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin())
        .collect()
}
