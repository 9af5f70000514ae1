//! Reference causal differentiators: backward difference, optionally
//! followed by a moving average or a discrete Butterworth low-pass.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A causal, stateful differentiator fed one sample at a time.
pub trait Differentiator {
    /// Consumes `sample` and returns the current derivative estimate.
    fn differentiate(&mut self, sample: f64) -> Result<f64>;
}

/// `(e_k - e_{k-1}) / Ts`.
pub fn backward_difference(e: f64, e_prev: f64, ts: f64) -> f64 {
    (e - e_prev) / ts
}

/// Moving average over the last `W` inputs. Before `W` inputs have arrived
/// the mean is taken over what is available.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    window: usize,
    buf: VecDeque<f64>,
}

impl MovingAverage {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::param("window", "must be at least 1"));
        }
        Ok(Self {
            window,
            buf: VecDeque::with_capacity(window),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn step(&mut self, u: f64) -> f64 {
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back(u);
        // summing the buffer each step keeps the output free of running-sum drift
        self.buf.iter().sum::<f64>() / self.buf.len() as f64
    }
}

/// One second-order section `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`,
/// direct form II transposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
    state: [f64; 2],
}

impl Biquad {
    pub fn new(b: [f64; 3], a: [f64; 2]) -> Self {
        Self { b, a, state: [0.0; 2] }
    }

    pub fn step(&mut self, u: f64) -> f64 {
        let y = self.b[0] * u + self.state[0];
        self.state[0] = self.b[1] * u - self.a[0] * y + self.state[1];
        self.state[1] = self.b[2] * u - self.a[1] * y;
        y
    }

    /// Poles of the section (complex pairs as `(re, im)`).
    pub fn poles(&self) -> [(f64, f64); 2] {
        let (a1, a2) = (self.a[0], self.a[1]);
        let disc = a1 * a1 - 4.0 * a2;
        if disc >= 0.0 {
            let r = disc.sqrt();
            [((-a1 + r) / 2.0, 0.0), ((-a1 - r) / 2.0, 0.0)]
        } else {
            let im = (-disc).sqrt() / 2.0;
            [(-a1 / 2.0, im), (-a1 / 2.0, -im)]
        }
    }

    pub fn reset(&mut self) {
        self.state = [0.0; 2];
    }
}

/// IIR filter realized as cascaded second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    sections: Vec<Biquad>,
}

impl IirFilter {
    pub fn from_sections(sections: Vec<Biquad>) -> Self {
        Self { sections }
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn step(&mut self, u: f64) -> f64 {
        self.sections.iter_mut().fold(u, |x, s| s.step(x))
    }

    pub fn reset(&mut self) {
        self.sections.iter_mut().for_each(Biquad::reset);
    }

    /// Overall numerator and denominator in powers of `z⁻¹`.
    pub fn coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        let mut num = vec![1.0];
        let mut den = vec![1.0];
        for s in &self.sections {
            num = poly_mul(&num, &s.b);
            den = poly_mul(&den, &[1.0, s.a[0], s.a[1]]);
        }
        trim_trailing_zeros(&mut num);
        trim_trailing_zeros(&mut den);
        (num, den)
    }

    /// `|H(e^{jω})|`.
    pub fn magnitude(&self, omega: f64) -> f64 {
        let eval = |p: &[f64]| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, c) in p.iter().enumerate() {
                re += c * (omega * k as f64).cos();
                im -= c * (omega * k as f64).sin();
            }
            re.hypot(im)
        };
        self.sections
            .iter()
            .map(|s| eval(&s.b) / eval(&[1.0, s.a[0], s.a[1]]))
            .product()
    }

    /// Pole moduli over all sections.
    pub fn pole_radii(&self) -> Vec<f64> {
        self.sections
            .iter()
            .flat_map(|s| {
                if s.a[1] == 0.0 && s.b[2] == 0.0 {
                    // first-order section: single pole at -a1
                    vec![s.a[0].abs()]
                } else {
                    s.poles().iter().map(|(re, im)| re.hypot(*im)).collect()
                }
            })
            .collect()
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

fn trim_trailing_zeros(p: &mut Vec<f64>) {
    while p.len() > 1 && p[p.len() - 1] == 0.0 {
        p.pop();
    }
}

/// Discrete Butterworth low-pass of the given order with cutoff `cutoff`
/// in rad/sample (Nyquist = π), via the bilinear transform with the
/// cutoff prewarped. Each section has unity DC gain.
pub fn butterworth_design(order: usize, cutoff: f64) -> Result<IirFilter> {
    if order == 0 {
        return Err(Error::param("order", "must be at least 1"));
    }
    if !(cutoff > 0.0 && cutoff < PI) {
        return Err(Error::param("cutoff", format!("must lie in (0, π) rad/sample, got {cutoff}")));
    }
    // bilinear with T = 2: s = (z - 1)/(z + 1), prewarped Ωc = tan(ωc / 2)
    let wc = (cutoff / 2.0).tan();
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for k in 0..order / 2 {
        let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let (sr, si) = (wc * theta.cos(), wc * theta.sin());
        // z = (1 + s) / (1 - s)
        let den = (1.0 - sr).powi(2) + si * si;
        let zr = ((1.0 + sr) * (1.0 - sr) - si * si) / den;
        let zi = 2.0 * si / den;
        let a1 = -2.0 * zr;
        let a2 = zr * zr + zi * zi;
        let gain = (1.0 + a1 + a2) / 4.0;
        sections.push(Biquad::new([gain, 2.0 * gain, gain], [a1, a2]));
    }
    if order % 2 == 1 {
        let p = (1.0 - wc) / (1.0 + wc);
        let gain = (1.0 - p) / 2.0;
        sections.push(Biquad::new([gain, gain, 0.0], [-p, 0.0]));
    }
    Ok(IirFilter { sections })
}

/// Plain backward difference.
#[derive(Debug, Clone)]
pub struct Bd {
    ts: f64,
    prev: f64,
}

impl Bd {
    /// The sample before the first one is taken as zero.
    pub fn new(ts: f64) -> Result<Self> {
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(Error::param("Ts", format!("must be positive, got {ts}")));
        }
        Ok(Self { ts, prev: 0.0 })
    }
}

impl Differentiator for Bd {
    fn differentiate(&mut self, sample: f64) -> Result<f64> {
        let d = backward_difference(sample, self.prev, self.ts);
        self.prev = sample;
        Ok(d)
    }
}

/// Backward difference smoothed by a moving average.
#[derive(Debug, Clone)]
pub struct BdMa {
    bd: Bd,
    ma: MovingAverage,
}

impl BdMa {
    pub fn new(ts: f64, window: usize) -> Result<Self> {
        Ok(Self {
            bd: Bd::new(ts)?,
            ma: MovingAverage::new(window)?,
        })
    }
}

impl Differentiator for BdMa {
    fn differentiate(&mut self, sample: f64) -> Result<f64> {
        let d = self.bd.differentiate(sample)?;
        Ok(self.ma.step(d))
    }
}

/// Backward difference smoothed by an IIR filter.
#[derive(Debug, Clone)]
pub struct BdIir {
    bd: Bd,
    filter: IirFilter,
}

impl BdIir {
    pub fn new(ts: f64, filter: IirFilter) -> Result<Self> {
        Ok(Self { bd: Bd::new(ts)?, filter })
    }

    pub fn butterworth(ts: f64, order: usize, cutoff: f64) -> Result<Self> {
        Self::new(ts, butterworth_design(order, cutoff)?)
    }
}

impl Differentiator for BdIir {
    fn differentiate(&mut self, sample: f64) -> Result<f64> {
        let d = self.bd.differentiate(sample)?;
        Ok(self.filter.step(d))
    }
}

impl Differentiator for crate::aise::Aise {
    fn differentiate(&mut self, sample: f64) -> Result<f64> {
        Ok(self.step(sample)?.d_hat)
    }
}

impl<T: Differentiator + ?Sized> Differentiator for Box<T> {
    fn differentiate(&mut self, sample: f64) -> Result<f64> {
        (**self).differentiate(sample)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_difference_cases() {
        assert!((backward_difference(0.1, 0.3, 0.01) + 20.0).abs() < 1e-12);
        let mut bd = Bd::new(0.01).unwrap();
        bd.differentiate(0.0).unwrap();
        for k in 1..100 {
            let d = bd.differentiate(k as f64 * 0.01).unwrap();
            assert!((d - 1.0).abs() < 1e-9);
        }
        let mut bd = Bd::new(0.01).unwrap();
        bd.differentiate(2.0).unwrap();
        assert_eq!(bd.differentiate(2.0).unwrap(), 0.0);
        assert!(Bd::new(0.0).is_err());
    }

    #[test]
    fn moving_average_cases() {
        let mut ma = MovingAverage::new(10).unwrap();
        assert!((0..30).all(|_| ma.step(1.0) == 1.0));

        let mut ma = MovingAverage::new(10).unwrap();
        let out: Vec<f64> = (0..25).map(|k| ma.step(if k == 0 { 1.0 } else { 0.0 })).collect();
        // partial window at the start: 1/1, 1/2, …, 1/10, then 0
        for (k, v) in out.iter().enumerate() {
            let expected = if k < 10 { 1.0 / (k + 1) as f64 } else { 0.0 };
            assert!((v - expected).abs() < 1e-15, "k = {k}");
        }
        assert!(MovingAverage::new(0).is_err());
    }

    #[test]
    fn moving_average_impulse_after_warmup() {
        let mut ma = MovingAverage::new(10).unwrap();
        for _ in 0..10 {
            ma.step(0.0);
        }
        let out: Vec<f64> = (0..15).map(|k| ma.step(if k == 0 { 1.0 } else { 0.0 })).collect();
        for (k, v) in out.iter().enumerate() {
            let expected = if k < 10 { 0.1 } else { 0.0 };
            assert!((v - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn moving_average_random_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut ma = MovingAverage::new(7).unwrap();
        for (k, &x) in xs.iter().enumerate() {
            let lo = k.saturating_sub(6);
            let expected = xs[lo..=k].iter().sum::<f64>() / (k - lo + 1) as f64;
            assert!((ma.step(x) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn butterworth_gains() {
        let f = butterworth_design(5, 0.6 * PI).unwrap();
        assert!((f.magnitude(0.0) - 1.0).abs() < 1e-12);
        assert!((f.magnitude(0.6 * PI) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(f.pole_radii().iter().all(|r| *r < 1.0 - 1e-9));
        let mut radii = f.pole_radii();
        radii.sort_by(|a, b| b.total_cmp(a));
        for (r, want) in radii.iter().zip([0.7387, 0.7387, 0.3610, 0.3610, 0.1584]) {
            assert!((r - want).abs() < 1e-4, "{radii:?}");
        }
        for order in 1..=8 {
            let f = butterworth_design(order, 0.3).unwrap();
            assert!((f.magnitude(0.0) - 1.0).abs() < 1e-12);
            assert!((f.magnitude(0.3) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!(butterworth_design(5, 0.0).is_err());
        assert!(butterworth_design(5, PI).is_err());
        assert!(butterworth_design(0, 1.0).is_err());
    }

    #[test]
    fn butterworth_reference_coefficients() {
        // 5th order, Wn = 0.6 (normalized to Nyquist), as produced by a
        // standard signal-processing package
        let b_ref = [
            0.10837370258747996,
            0.5418685129373998,
            1.0837370258747996,
            1.0837370258747996,
            0.5418685129373998,
            0.10837370258747996,
        ];
        let a_ref = [
            1.0,
            0.9853252392792378,
            0.9738493318367639,
            0.3863565586484487,
            0.11116384057834201,
            0.01126351245656587,
        ];
        let (b, a) = butterworth_design(5, 0.6 * PI).unwrap().coefficients();
        for (x, y) in b.iter().zip(b_ref) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.iter().zip(a_ref) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let mut f = butterworth_design(5, 0.6 * PI).unwrap();
        assert!((0..50).all(|_| f.step(0.0) == 0.0));
    }

    #[test]
    fn impulse_response_sums_to_dc_gain() {
        let mut f = butterworth_design(5, 0.6 * PI).unwrap();
        let mut sum = 0.0;
        let mut partial = Vec::new();
        for k in 0..400 {
            sum += f.step(if k == 0 { 1.0 } else { 0.0 });
            partial.push(sum);
        }
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((partial[100] - partial[399]).abs() < 1e-12);
    }

    #[test]
    fn sinusoid_at_cutoff() {
        let w = 0.6 * PI;
        let mut f = butterworth_design(5, w).unwrap();
        let n = 4000;
        let out: Vec<f64> = (0..n).map(|k| f.step((w * k as f64).sin())).collect();
        // least-squares fit of a sin + b cos over the tail
        let (mut ss, mut cc, mut sc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 2000..n {
            let (s, c) = ((w * k as f64).sin(), (w * k as f64).cos());
            ss += s * s;
            cc += c * c;
            sc += s * c;
            ys += out[k] * s;
            yc += out[k] * c;
        }
        let det = ss * cc - sc * sc;
        let a = (ys * cc - yc * sc) / det;
        let b = (yc * ss - ys * sc) / det;
        assert!((a.hypot(b) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
    }
}
