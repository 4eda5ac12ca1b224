//! Complex-valued functions sampled on uniform periodic grids over [0, L)^n,
//! with unitary discrete Fourier transforms, Lp norms, and a flat binary
//! dump format.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::util::pairwise_sum;

/// Uniform periodic grid: n axes, N points per axis (a power of two),
/// box side L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    n: usize,
    points: usize,
    side: T,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(n: usize, points: usize, side: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("grid needs at least one axis".into()));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::Domain(format!(
                "points per axis must be a power of two >= 2, got {points}"
            )));
        }
        if !(side > T::zero()) {
            return Err(Error::Domain("box side must be positive".into()));
        }
        let mut total: usize = 1;
        for _ in 0..n {
            total = total
                .checked_mul(points)
                .ok_or_else(|| Error::Overflow(format!("{points}^{n} grid points")))?;
        }
        Ok(GridSpec { n, points, side })
    }

    /// Default desk-scale grid for a given axis count: N = 256, 128, 64, 32
    /// for n = 1..4 and 16 beyond, with L = 16.
    pub fn default_for_axes(n: usize) -> Result<Self> {
        let points = match n {
            1 => 256,
            2 => 128,
            3 => 64,
            4 => 32,
            _ => 16,
        };
        GridSpec::new(n, points, T::from_f64_lossy(16.0))
    }

    pub fn axes(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn side(&self) -> T {
        self.side
    }

    pub fn spacing(&self) -> T {
        self.side / T::from_usize_lossy(self.points)
    }

    pub fn total(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    /// Signed integer frequency for an axis index, in [-N/2, N/2).
    pub fn signed_freq(&self, i: usize) -> i64 {
        if i < self.points / 2 {
            i as i64
        } else {
            i as i64 - self.points as i64
        }
    }

    /// Coordinate of an axis index in the symmetric cell [-L/2, L/2).
    pub fn wrapped_coord(&self, i: usize) -> T {
        let h = self.spacing();
        if i < self.points / 2 {
            T::from_usize_lossy(i) * h
        } else {
            (T::from_usize_lossy(i) - T::from_usize_lossy(self.points)) * h
        }
    }

    /// Visit every lattice site with its flat index and axis indices
    /// (axis 0 varies fastest).
    pub fn for_each_site(&self, mut f: impl FnMut(usize, &[usize])) {
        let mut digits = vec![0usize; self.n];
        let total = self.total();
        for flat in 0..total {
            f(flat, &digits);
            for ax in 0..self.n {
                digits[ax] += 1;
                if digits[ax] == self.points {
                    digits[ax] = 0;
                } else {
                    break;
                }
            }
        }
    }

    /// Visit every mode with its flat index and signed frequency vector.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, &[i64])) {
        let table: Vec<i64> = (0..self.points).map(|i| self.signed_freq(i)).collect();
        let mut digits = vec![0usize; self.n];
        let mut freqs = vec![table[0]; self.n];
        let total = self.total();
        for flat in 0..total {
            f(flat, &freqs);
            for ax in 0..self.n {
                digits[ax] += 1;
                if digits[ax] == self.points {
                    digits[ax] = 0;
                    freqs[ax] = table[0];
                } else {
                    freqs[ax] = table[digits[ax]];
                    break;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Frequency,
}

/// A sampled field together with its grid and space tag. Fields are
/// immutable values; every operation returns a new field.
#[derive(Debug, Clone)]
pub struct GridField<T> {
    spec: GridSpec<T>,
    space: Space,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> GridField<T> {
    pub fn from_values(spec: GridSpec<T>, space: Space, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != spec.total() {
            return Err(Error::Dimension(format!(
                "value buffer has {} entries for a grid of {}",
                values.len(),
                spec.total()
            )));
        }
        Ok(GridField {
            spec,
            space,
            values,
        })
    }

    pub fn zeros(spec: GridSpec<T>, space: Space) -> Self {
        GridField {
            spec,
            space,
            values: vec![Complex::new(T::zero(), T::zero()); spec.total()],
        }
    }

    /// Sample a function of the lattice coordinates x in [0, L)^n.
    pub fn from_function(spec: GridSpec<T>, mut f: impl FnMut(&[T]) -> Complex<T>) -> Self {
        let h = spec.spacing();
        let mut values = vec![Complex::new(T::zero(), T::zero()); spec.total()];
        let mut coords = vec![T::zero(); spec.axes()];
        spec.for_each_site(|flat, digits| {
            for (c, &i) in coords.iter_mut().zip(digits) {
                *c = T::from_usize_lossy(i) * h;
            }
            values[flat] = f(&coords);
        });
        GridField {
            spec,
            space: Space::Physical,
            values,
        }
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    fn expect_space(&self, space: Space, what: &str) -> Result<()> {
        if self.space != space {
            return Err(Error::Domain(format!(
                "{what} requires a {space:?}-space field, got {:?}",
                self.space
            )));
        }
        Ok(())
    }

    /// Unitary forward DFT. Mode m of the result corresponds to continuum
    /// frequency xi = m/L with signed m in [-N/2, N/2).
    pub fn forward(&self) -> Result<GridField<T>> {
        self.expect_space(Space::Physical, "forward")?;
        let values = dft_all_axes(&self.spec, self.values.clone(), true);
        Ok(GridField {
            spec: self.spec,
            space: Space::Frequency,
            values,
        })
    }

    /// Unitary inverse DFT.
    pub fn inverse(&self) -> Result<GridField<T>> {
        self.expect_space(Space::Frequency, "inverse")?;
        let values = dft_all_axes(&self.spec, self.values.clone(), false);
        Ok(GridField {
            spec: self.spec,
            space: Space::Physical,
            values,
        })
    }

    /// Riemann-sum Lp norm (sum |f|^p h^n)^{1/p} for p in (1, inf).
    pub fn lp_norm(&self, p: T) -> Result<T> {
        self.expect_space(Space::Physical, "lp_norm")?;
        if !(p > T::one()) || !p.is_finite() {
            return Err(Error::Domain(format!(
                "Lp norm requires finite p > 1, got {}",
                p.to_f64_lossy()
            )));
        }
        let h = self.spec.spacing();
        let weight = h.powi(self.spec.axes() as i32);
        let terms: Vec<T> = self.values.iter().map(|v| v.norm().powf(p)).collect();
        Ok((pairwise_sum(&terms) * weight).powf(T::one() / p))
    }

    /// Grid L2 norm, valid in either space (the transform is unitary up to
    /// the h^{n/2} Riemann weight).
    pub fn l2_norm(&self) -> T {
        let h = self.spec.spacing();
        let weight = h.powi(self.spec.axes() as i32);
        let terms: Vec<T> = self.values.iter().map(|v| v.norm_sqr()).collect();
        (pairwise_sum(&terms) * weight).sqrt()
    }

    /// Plain ell^2 norm of the coefficient vector.
    pub fn ell2_norm(&self) -> T {
        let terms: Vec<T> = self.values.iter().map(|v| v.norm_sqr()).collect();
        pairwise_sum(&terms).sqrt()
    }

    pub fn relative_l2_distance(&self, other: &GridField<T>) -> Result<T> {
        same_grid(self, other)?;
        let diff: Vec<T> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).norm_sqr())
            .collect();
        let denom: Vec<T> = other.values.iter().map(|v| v.norm_sqr()).collect();
        let d = pairwise_sum(&diff).sqrt();
        let n = pairwise_sum(&denom).sqrt();
        Ok(d / n.max(T::from_f64_lossy(1e-300)))
    }

    /// Apply a frequency multiplier given as a function of the signed
    /// integer frequency vector. Physical in, physical out.
    pub fn apply_multiplier(
        &self,
        sym: impl FnMut(usize, &[i64]) -> Complex<T>,
    ) -> Result<GridField<T>> {
        let mut hat = self.forward()?;
        let mut sym = sym;
        let spec = hat.spec;
        let values = &mut hat.values;
        spec.for_each_mode(|flat, freqs| {
            let s = sym(flat, freqs);
            values[flat] = values[flat] * s;
        });
        hat.inverse()
    }

    /// Zero every coefficient with any axis frequency |m| exceeding the
    /// band limit, and return to physical space.
    pub fn band_limited(&self, max_mode: i64) -> Result<GridField<T>> {
        let work = match self.space {
            Space::Physical => self.forward()?,
            Space::Frequency => self.clone(),
        };
        let mut work = work;
        let spec = work.spec;
        let values = &mut work.values;
        spec.for_each_mode(|flat, freqs| {
            if freqs.iter().any(|&m| m.abs() > max_mode) {
                values[flat] = Complex::new(T::zero(), T::zero());
            }
        });
        work.inverse()
    }

    /// Translate by an arbitrary (off-lattice) offset via the shift theorem:
    /// exact for the trigonometric interpolant.
    pub fn translated(&self, offset: &[T]) -> Result<GridField<T>> {
        if offset.len() != self.spec.axes() {
            return Err(Error::Dimension(format!(
                "offset of length {} on a {}-axis grid",
                offset.len(),
                self.spec.axes()
            )));
        }
        let two_pi_over_l = T::from_f64_lossy(2.0) * T::PI() / self.spec.side();
        self.apply_multiplier(|_, freqs| {
            let mut phase = T::zero();
            for (m, &o) in freqs.iter().zip(offset) {
                phase = phase - two_pi_over_l * T::from_i64(*m).unwrap() * o;
            }
            Complex::new(phase.cos(), phase.sin())
        })
    }

    pub fn scaled(&self, c: Complex<T>) -> GridField<T> {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = *v * c;
        }
        out
    }

    pub fn add(&self, other: &GridField<T>) -> Result<GridField<T>> {
        same_grid(self, other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a = *a + *b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &GridField<T>) -> Result<GridField<T>> {
        same_grid(self, other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a = *a - *b;
        }
        Ok(out)
    }

    /// Largest |Im| over the grid relative to the largest |value|;
    /// real-output checks use this.
    pub fn relative_imag_residue(&self) -> T {
        let mut max_imag = T::zero();
        let mut max_norm = T::zero();
        for v in &self.values {
            max_imag = max_imag.max(v.im.abs());
            max_norm = max_norm.max(v.norm());
        }
        if max_norm == T::zero() {
            T::zero()
        } else {
            max_imag / max_norm
        }
    }
}

pub fn same_grid<T: Scalar>(a: &GridField<T>, b: &GridField<T>) -> Result<()> {
    if a.spec != b.spec {
        return Err(Error::Dimension("fields live on different grids".into()));
    }
    if a.space != b.space {
        return Err(Error::Domain("fields live in different spaces".into()));
    }
    Ok(())
}

/// Run the 1-D FFT along every axis; `forward` picks the transform
/// direction. Output is scaled to make the full transform unitary.
fn dft_all_axes<T: Scalar>(
    spec: &GridSpec<T>,
    mut values: Vec<Complex<T>>,
    forward: bool,
) -> Vec<Complex<T>> {
    let n_pts = spec.points();
    let mut planner = FftPlanner::<T>::new();
    let fft: Arc<dyn Fft<T>> = if forward {
        planner.plan_fft_forward(n_pts)
    } else {
        planner.plan_fft_inverse(n_pts)
    };
    let total = spec.total();
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    for axis in 0..spec.axes() {
        let stride = n_pts.pow(axis as u32);
        if axis == 0 {
            for chunk in values.chunks_exact_mut(n_pts) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
        } else {
            let mut lane = vec![Complex::new(T::zero(), T::zero()); n_pts];
            let block = stride * n_pts;
            let outer = total / block;
            for o in 0..outer {
                for i in 0..stride {
                    let base = o * block + i;
                    for (j, v) in lane.iter_mut().enumerate() {
                        *v = values[base + j * stride];
                    }
                    fft.process_with_scratch(&mut lane, &mut scratch);
                    for (j, v) in lane.iter().enumerate() {
                        values[base + j * stride] = *v;
                    }
                }
            }
        }
    }
    let scale = T::one() / T::from_usize_lossy(total).sqrt();
    for v in values.iter_mut() {
        *v = Complex::new(v.re * scale, v.im * scale);
    }
    values
}

const DUMP_MAGIC: &[u8; 4] = b"RLAB";

/// Write the flat binary dump: a 32-byte header (magic "RLAB", u32 n,
/// u32 N, f64 L, one space byte, zero padding), then little-endian f64
/// (re, im) pairs in flat index order.
pub fn write_dump<T: Scalar, W: Write>(field: &GridField<T>, w: &mut W) -> Result<()> {
    let mut header = [0u8; 32];
    header[0..4].copy_from_slice(DUMP_MAGIC);
    header[4..8].copy_from_slice(&(field.spec.axes() as u32).to_le_bytes());
    header[8..12].copy_from_slice(&(field.spec.points() as u32).to_le_bytes());
    header[12..20].copy_from_slice(&field.spec.side().to_f64_lossy().to_le_bytes());
    header[20] = match field.space {
        Space::Physical => 0,
        Space::Frequency => 1,
    };
    w.write_all(&header)?;
    for v in &field.values {
        w.write_all(&v.re.to_f64_lossy().to_le_bytes())?;
        w.write_all(&v.im.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dump<R: Read>(r: &mut R) -> Result<GridField<f64>> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[0..4] != DUMP_MAGIC {
        return Err(Error::Parse("bad dump magic".into()));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let points = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let side = f64::from_le_bytes(header[12..20].try_into().unwrap());
    let space = match header[20] {
        0 => Space::Physical,
        1 => Space::Frequency,
        b => return Err(Error::Parse(format!("bad space tag {b}"))),
    };
    let spec = GridSpec::new(n, points, side)?;
    let mut values = Vec::with_capacity(spec.total());
    let mut buf = [0u8; 16];
    for _ in 0..spec.total() {
        r.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
        values.push(Complex::new(re, im));
    }
    GridField::from_values(spec, space, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::sample_rng;
    use rand::Rng;

    fn random_field(spec: GridSpec<f64>, seed: u64) -> GridField<f64> {
        let mut rng = sample_rng(seed, 0);
        let values = (0..spec.total())
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        GridField::from_values(spec, Space::Physical, values).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(2, 31, 16.0_f64).is_err());
        assert!(GridSpec::new(0, 32, 16.0_f64).is_err());
        assert!(GridSpec::new(2, 32, 0.0_f64).is_err());
        let s = GridSpec::new(2, 32, 16.0_f64).unwrap();
        assert_eq!(s.total(), 1024);
        assert!((s.spacing() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_field_sampling_and_lp() {
        let spec = GridSpec::new(2, 32, 16.0_f64).unwrap();
        let f = GridField::from_function(spec, |_| Complex::new(3.0, 0.0));
        assert!(f.values().iter().all(|v| (v.re - 3.0).abs() < 1e-15));
        // |c| L^{n/p}
        for p in [1.5_f64, 2.0, 3.0] {
            let expect = 3.0 * 16.0_f64.powf(2.0 / p);
            assert!((f.lp_norm(p).unwrap() - expect).abs() < 1e-10 * expect);
        }
        assert!(f.lp_norm(1.0).is_err());
        assert!(f.lp_norm(f64::INFINITY).is_err());
    }

    #[test]
    fn single_mode_concentrates_in_frequency() {
        let spec = GridSpec::new(1, 64, 16.0_f64).unwrap();
        let l = spec.side();
        let f = GridField::from_function(spec, |x| {
            let theta = 2.0 * std::f64::consts::PI * 3.0 * x[0] / l;
            Complex::new(theta.cos(), theta.sin())
        });
        let hat = f.forward().unwrap();
        let mut mass_at_3 = 0.0;
        let mut total = 0.0;
        spec.for_each_mode(|flat, freqs| {
            let m = hat.values()[flat].norm_sqr();
            total += m;
            if freqs[0] == 3 {
                mass_at_3 += m;
            }
        });
        assert!(mass_at_3 / total > 1.0 - 1e-12);
    }

    #[test]
    fn parseval_round_trip_and_linearity() {
        for n in 1..=3usize {
            let spec = GridSpec::new(n, 16, 16.0_f64).unwrap();
            let f = random_field(spec, 42 + n as u64);
            let hat = f.forward().unwrap();
            assert!((f.ell2_norm() - hat.ell2_norm()).abs() < 1e-12 * f.ell2_norm());
            let back = hat.inverse().unwrap();
            assert!(f.relative_l2_distance(&back).unwrap() < 1e-12);

            let g = random_field(spec, 99 + n as u64);
            let alpha = Complex::new(0.7, -0.3);
            let combo = f.scaled(alpha).add(&g).unwrap();
            let lhs = combo.forward().unwrap();
            let rhs = hat.scaled(alpha).add(&g.forward().unwrap()).unwrap();
            assert!(lhs.relative_l2_distance(&rhs).unwrap() < 1e-12);
        }
    }

    #[test]
    fn space_tag_mismatch_is_an_error() {
        let spec = GridSpec::new(1, 16, 16.0_f64).unwrap();
        let f = random_field(spec, 1);
        assert!(f.inverse().is_err());
        assert!(f.forward().unwrap().forward().is_err());
    }

    #[test]
    fn lattice_translation_covariance() {
        let spec = GridSpec::new(2, 32, 16.0_f64).unwrap();
        let f = random_field(spec, 7);
        let h = spec.spacing();
        // shift by 3 lattice steps along axis 0
        let shifted = f.translated(&[3.0 * h, 0.0]).unwrap();
        // compare against index rolling
        let mut rolled = GridField::zeros(spec, Space::Physical);
        spec.for_each_site(|flat, digits| {
            let src0 = (digits[0] + spec.points() - 3) % spec.points();
            let src = src0 + spec.points() * digits[1];
            rolled.values_mut()[flat] = f.values()[src];
        });
        assert!(shifted.relative_l2_distance(&rolled).unwrap() < 1e-11);
    }

    #[test]
    fn periodized_gaussian_matches_direct_summation() {
        let spec = GridSpec::new(1, 256, 16.0_f64).unwrap();
        let l: f64 = spec.side();
        let a = 1.0;
        let x0 = l / 2.0;
        let f = GridField::from_function(spec, |x| {
            let mut s = 0.0;
            for m in -2i32..=2 {
                let dx = x[0] - x0 + l * m as f64;
                s += (-a * dx * dx).exp();
            }
            Complex::new(s, 0.0)
        });
        // L2 norm of the free-space Gaussian: (pi/(2a))^{1/4}
        let expect = (std::f64::consts::PI / (2.0 * a)).powf(0.25);
        assert!((f.lp_norm(2.0).unwrap() - expect).abs() < 1e-6);
    }

    #[test]
    fn band_limit_zeroes_high_modes() {
        let spec = GridSpec::new(1, 64, 16.0_f64).unwrap();
        let f = random_field(spec, 3);
        let b = f.band_limited(4).unwrap();
        let hat = b.forward().unwrap();
        spec.for_each_mode(|flat, freqs| {
            if freqs[0].abs() > 4 {
                assert!(hat.values()[flat].norm() < 1e-14);
            }
        });
    }

    #[test]
    fn dump_round_trip() {
        let spec = GridSpec::new(2, 16, 16.0_f64).unwrap();
        let f = random_field(spec, 17);
        let mut buf: Vec<u8> = Vec::new();
        write_dump(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 16 * spec.total());
        let g = read_dump(&mut buf.as_slice()).unwrap();
        assert!(f.relative_l2_distance(&g).unwrap() == 0.0);
        assert_eq!(g.space(), Space::Physical);
    }
}
