use std::f64::consts::PI;

use num_complex::Complex64;

use super::PreprocessError;

/// Second-order section `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    pub fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    pub fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2]) / (1.0 + z_inv * self.a[0] + z2 * self.a[1])
    }

    /// Transposed direct form II state that holds the output constant for a
    /// constant input `x`.
    fn steady_state(&self, x: f64) -> [f64; 2] {
        let y = self.dc_gain() * x;
        let z2 = self.b[2] * x - self.a[1] * y;
        [y - self.b[0] * x, z2]
    }

    fn run(&self, data: &mut [f64], mut z: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in data.iter_mut() {
            let x = *v;
            let y = b0 * x + z[0];
            z[0] = b1 * x - a1 * y + z[1];
            z[1] = b2 * x - a2 * y;
            *v = y;
        }
    }
}

/// Digital Butterworth low-pass as a cascade of [`Biquad`]s.
#[derive(Clone, Debug, PartialEq)]
pub struct ButterworthLowpass {
    pub order: usize,
    pub cutoff: f64,
    pub rate: f64,
    pub sections: Vec<Biquad>,
}

impl ButterworthLowpass {
    /// Bilinear transform of the analog prototype, prewarped so the -3 dB
    /// point lands exactly on `cutoff`. Every section has unit DC gain.
    pub fn design(order: usize, cutoff: f64, rate: f64) -> Result<Self, PreprocessError> {
        if order == 0 || order > 32 {
            return Err(PreprocessError::InvalidOrder(order));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(PreprocessError::InvalidRate(rate));
        }
        let nyquist = rate / 2.0;
        if !(cutoff.is_finite() && cutoff > 0.0 && cutoff < nyquist) {
            return Err(PreprocessError::CutoffAboveNyquist { cutoff, nyquist });
        }
        let k = 2.0 * rate;
        let wc = k * (PI * cutoff / rate).tan();
        let bilinear = |s: Complex64| (k + s) / (k - s);
        let n = order as f64;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            let theta = PI * (2.0 * i as f64 + n + 1.0) / (2.0 * n);
            let zp = bilinear(Complex64::from_polar(wc, theta));
            let a = [-2.0 * zp.re, zp.norm_sqr()];
            let g = (1.0 + a[0] + a[1]) / 4.0;
            sections.push(Biquad { b: [g, 2.0 * g, g], a });
        }
        if order % 2 == 1 {
            let zp = bilinear(Complex64::new(-wc, 0.0)).re;
            let g = (1.0 - zp) / 2.0;
            sections.push(Biquad { b: [g, g, 0.0], a: [-zp, 0.0] });
        }
        Ok(ButterworthLowpass { order, cutoff, rate, sections })
    }

    /// Complex response of a single forward pass at `freq` Hz.
    pub fn response(&self, freq: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / self.rate);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    /// Magnitude of the forward-backward filter, i.e. `|H(f)|²`.
    pub fn zero_phase_gain(&self, freq: f64) -> f64 {
        self.response(freq).norm_sqr()
    }

    /// Causal single pass starting from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            s.run(&mut y, [0.0; 2]);
        }
        y
    }

    fn pass(&self, data: &mut [f64]) {
        let Some(&x0) = data.first() else { return };
        for s in &self.sections {
            let z = s.steady_state(x0);
            s.run(data, z);
        }
    }

    /// Number of samples added to each end by [`filtfilt`](Self::filtfilt).
    pub fn pad_len(&self, len: usize) -> usize {
        (3 * (2 * self.sections.len() + 1)).min(len.saturating_sub(1))
    }

    /// Forward-backward filtering. The signal is extended at both ends by an
    /// odd reflection about the end samples and every pass starts in the
    /// steady state for its first sample, which suppresses edge transients.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = self.pad_len(n);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        self.pass(&mut ext);
        ext.reverse();
        self.pass(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_analytic_magnitude() {
        for order in 1..=8 {
            let f = ButterworthLowpass::design(order, 50.0, 1000.0).unwrap();
            for i in 0..100 {
                let freq = i as f64 * 4.99;
                let expect = csisense_oracle::butterworth_magnitude(freq, 50.0, 1000.0, order as u32);
                assert!((f.response(freq).norm() - expect).abs() < 1e-9, "order {order} f {freq}");
            }
        }
    }

    #[test]
    fn section_count_and_unit_dc() {
        let f = ButterworthLowpass::design(5, 50.0, 1000.0).unwrap();
        assert_eq!(f.sections.len(), 3);
        for s in &f.sections {
            assert!((s.dc_gain() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn poles_inside_unit_circle() {
        for order in 1..=12 {
            let f = ButterworthLowpass::design(order, 5.0, 1000.0).unwrap();
            for s in &f.sections {
                // roots of z² + a1 z + a2
                let disc = Complex64::new(s.a[0] * s.a[0] - 4.0 * s.a[1], 0.0).sqrt();
                for r in [(-s.a[0] + disc) / 2.0, (-s.a[0] - disc) / 2.0] {
                    assert!(r.norm() < 1.0);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(ButterworthLowpass::design(0, 50.0, 1000.0), Err(PreprocessError::InvalidOrder(0))));
        assert!(matches!(
            ButterworthLowpass::design(5, 500.0, 1000.0),
            Err(PreprocessError::CutoffAboveNyquist { .. })
        ));
        assert!(ButterworthLowpass::design(5, 50.0, 0.0).is_err());
        assert!(ButterworthLowpass::design(5, -1.0, 1000.0).is_err());
    }

    #[test]
    fn single_pass_matches_direct_difference_equation() {
        let f = ButterworthLowpass::design(4, 80.0, 1000.0).unwrap();
        let x: Vec<f64> = (0..300).map(|i| (i * 37 % 101) as f64 / 50.0 - 1.0).collect();
        // expand the cascade into one transfer function and run it directly
        let mut b = vec![1.0];
        let mut a = vec![1.0];
        for s in &f.sections {
            b = poly_mul(&b, &s.b);
            a = poly_mul(&a, &[1.0, s.a[0], s.a[1]]);
        }
        let mut y = vec![0.0; x.len()];
        for t in 0..x.len() {
            let mut acc = 0.0;
            for (k, bk) in b.iter().enumerate() {
                if t >= k {
                    acc += bk * x[t - k];
                }
            }
            for (k, ak) in a.iter().enumerate().skip(1) {
                if t >= k {
                    acc -= ak * y[t - k];
                }
            }
            y[t] = acc;
        }
        for (p, q) in f.filter(&x).iter().zip(&y) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len() + q.len() - 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in q.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    }

    #[test]
    fn filtfilt_keeps_constants_exactly() {
        let f = ButterworthLowpass::design(5, 50.0, 1000.0).unwrap();
        let y = f.filtfilt(&vec![3.25; 500]);
        for v in y {
            assert!((v - 3.25).abs() < 1e-9);
        }
    }

    #[test]
    fn filtfilt_handles_short_inputs() {
        let f = ButterworthLowpass::design(5, 50.0, 1000.0).unwrap();
        assert!(f.filtfilt(&[]).is_empty());
        assert_eq!(f.filtfilt(&[2.0]), vec![2.0]);
        assert_eq!(f.filtfilt(&[1.0, 2.0, 3.0]).len(), 3);
    }
}
