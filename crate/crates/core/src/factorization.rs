//! The radial multiplier profile m^1 of the factorization operator relating
//! the truncated transform to the full one: R_P^t = M_k^t(R_P) with M_k^t a
//! radial Fourier multiplier whose profile obeys the dilation law
//! m^t(|xi|) = m^1(t |xi|).
//!
//! Two independent routes compute the profile: a 1-D oscillatory quadrature
//! (odd d, where the Hankel kernel reduces to spherical Bessel functions)
//! and a frequency-wise grid ratio (any d).

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::constants::DimOrder;
use crate::error::{Error, Result};
use crate::fields::{GridField, GridSpec};
use crate::harmonics::SolidHarmonic;
use crate::quad::{integrate, integrate_oscillatory_tail, QuadConfig};
use crate::riesz::{apply_riesz, apply_truncated, kernel_gamma, TruncatedKernelSpec};
use crate::scalar::Scalar;
use crate::specfun::{sine_integral, sph_bessel_j};
use crate::util::sample_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMethod {
    Quadrature,
    GridRatio,
    ClosedForm1d,
}

impl ProfileMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileMethod::Quadrature => "quadrature",
            ProfileMethod::GridRatio => "grid_ratio",
            ProfileMethod::ClosedForm1d => "closed_form_1d",
        }
    }
}

/// Sampled radial profile rho -> m^1(rho), rho = t |xi| dimensionless.
#[derive(Debug, Clone)]
pub struct RadialProfile<T> {
    dk: DimOrder,
    method: ProfileMethod,
    rho: Vec<T>,
    values: Vec<Complex<T>>,
    /// Per-point anisotropy diagnostic for the grid-ratio route: largest
    /// deviation from the bin mean over the bin, relative to |mean|.
    spread: Vec<T>,
    sup_bound: T,
}

impl<T: Scalar> RadialProfile<T> {
    pub fn new(
        dk: DimOrder,
        method: ProfileMethod,
        rho: Vec<T>,
        values: Vec<Complex<T>>,
        spread: Vec<T>,
    ) -> Result<Self> {
        if rho.len() != values.len() || rho.is_empty() {
            return Err(Error::Domain("profile needs matching nonempty grids".into()));
        }
        for w in rho.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Domain("profile abscissae must increase".into()));
            }
        }
        if !(rho[0] > T::zero()) {
            return Err(Error::Domain("profile abscissae must be positive".into()));
        }
        let sup_bound = values.iter().map(|v| v.norm()).fold(T::zero(), T::max);
        let spread = if spread.is_empty() {
            vec![T::zero(); rho.len()]
        } else if spread.len() == rho.len() {
            spread
        } else {
            return Err(Error::Domain("spread diagnostic length mismatch".into()));
        };
        Ok(RadialProfile {
            dk,
            method,
            rho,
            values,
            spread,
            sup_bound,
        })
    }

    pub fn dk(&self) -> DimOrder {
        self.dk
    }

    pub fn method(&self) -> ProfileMethod {
        self.method
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn spread(&self) -> &[T] {
        &self.spread
    }

    /// Profile-wide bound on |m^1| over the sampled points.
    pub fn sup_bound(&self) -> T {
        self.sup_bound
    }

    /// Monotone-cubic interpolation in rho, linear toward (0, 1) below the
    /// first point (truncated -> full transform limit). Beyond the last
    /// point is an extrapolation error.
    pub fn value_at(&self, rho: T) -> Result<Complex<T>> {
        if rho < T::zero() {
            return Err(Error::Domain("negative rho".into()));
        }
        if rho == T::zero() {
            return Ok(Complex::new(T::one(), T::zero()));
        }
        let last = *self.rho.last().unwrap();
        if rho > last * T::from_f64_lossy(1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "rho = {} beyond profile range (max {})",
                rho.to_f64_lossy(),
                last.to_f64_lossy()
            )));
        }
        if rho <= self.rho[0] {
            // linear between the rho -> 0 limit (value 1) and the first point
            let s = rho / self.rho[0];
            let v0 = self.values[0];
            let one = Complex::new(T::one(), T::zero());
            return Ok(one + (v0 - one) * Complex::new(s, T::zero()));
        }
        let re = pchip_eval(&self.rho, &self.re_parts(), rho);
        let im = pchip_eval(&self.rho, &self.im_parts(), rho);
        Ok(Complex::new(re, im))
    }

    fn re_parts(&self) -> Vec<T> {
        self.values.iter().map(|v| v.re).collect()
    }

    fn im_parts(&self) -> Vec<T> {
        self.values.iter().map(|v| v.im).collect()
    }

    /// CSV rows `rho, re_m, im_m, method, d, k, t`.
    pub fn write_csv<W: Write>(&self, w: &mut W, t: T) -> Result<()> {
        writeln!(w, "rho,re_m,im_m,method,d,k,t")?;
        for (rho, v) in self.rho.iter().zip(&self.values) {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                rho.to_f64_lossy(),
                v.re.to_f64_lossy(),
                v.im.to_f64_lossy(),
                self.method.as_str(),
                self.dk.d(),
                self.dk.k(),
                t.to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

/// Fritsch-Carlson monotone cubic slopes, then Hermite evaluation.
fn pchip_eval<T: Scalar>(xs: &[T], ys: &[T], x: T) -> T {
    let n = xs.len();
    if n == 1 {
        return ys[0];
    }
    if n == 2 {
        let s = (x - xs[0]) / (xs[1] - xs[0]);
        return ys[0] + (ys[1] - ys[0]) * s;
    }
    // interval search
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h0 = xs[lo + 1] - xs[lo];
    let slope_at = |i: usize| -> T {
        if i == 0 {
            let h = xs[1] - xs[0];
            let hn = xs[2] - xs[1];
            let del0 = (ys[1] - ys[0]) / h;
            let del1 = (ys[2] - ys[1]) / hn;
            let m = ((T::from_f64_lossy(2.0) * h + hn) * del0 - h * del1) / (h + hn);
            clamp_end_slope(m, del0, del1)
        } else if i == n - 1 {
            let h = xs[n - 1] - xs[n - 2];
            let hp = xs[n - 2] - xs[n - 3];
            let del1 = (ys[n - 1] - ys[n - 2]) / h;
            let del0 = (ys[n - 2] - ys[n - 3]) / hp;
            let m = ((T::from_f64_lossy(2.0) * h + hp) * del1 - h * del0) / (h + hp);
            clamp_end_slope(m, del1, del0)
        } else {
            let hm = xs[i] - xs[i - 1];
            let hp = xs[i + 1] - xs[i];
            let dm = (ys[i] - ys[i - 1]) / hm;
            let dp = (ys[i + 1] - ys[i]) / hp;
            if dm * dp <= T::zero() {
                T::zero()
            } else {
                // weighted harmonic mean keeps the interpolant monotone
                let w1 = T::from_f64_lossy(2.0) * hp + hm;
                let w2 = hp + T::from_f64_lossy(2.0) * hm;
                (w1 + w2) / (w1 / dm + w2 / dp)
            }
        }
    };
    let m0 = slope_at(lo);
    let m1 = slope_at(lo + 1);
    let s = (x - xs[lo]) / h0;
    let s2 = s * s;
    let s3 = s2 * s;
    let two = T::from_f64_lossy(2.0);
    let three = T::from_f64_lossy(3.0);
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    h00 * ys[lo] + h10 * h0 * m0 + h01 * ys[lo + 1] + h11 * h0 * m1
}

fn clamp_end_slope<T: Scalar>(m: T, del_near: T, del_far: T) -> T {
    if m * del_near <= T::zero() {
        T::zero()
    } else if del_near * del_far <= T::zero()
        && m.abs() > T::from_f64_lossy(3.0) * del_near.abs()
    {
        T::from_f64_lossy(3.0) * del_near
    } else {
        m
    }
}

/// Closed form for d = 1, k = 1: m^1(rho) = 1 - (2/pi) Si(2 pi rho).
pub fn closed_form_1d<T: Scalar>(rho: T) -> T {
    T::one()
        - T::from_f64_lossy(2.0) / T::PI()
            * sine_integral(T::from_f64_lossy(2.0) * T::PI() * rho)
}

/// m^1(rho) by oscillation-aware quadrature of the radial Hankel-type
/// integral; odd d only, where the order k + d/2 - 1 Bessel kernel reduces
/// to elementary spherical Bessel functions.
pub fn profile_quadrature<T: Scalar>(dk: DimOrder, rho: T) -> Result<T> {
    if dk.d() % 2 == 0 {
        return Err(Error::Unsupported(format!(
            "quadrature profile requires odd d (got d = {}); use the grid-ratio route",
            dk.d()
        )));
    }
    if !(rho > T::zero()) {
        return Err(Error::Domain("profile quadrature needs rho > 0".into()));
    }
    let d = dk.d();
    let k = dk.k();
    // spherical Bessel order n = k + (d-3)/2 for odd d; d = 1 gives k - 1
    let n_order = if d >= 3 { k + (d - 3) / 2 } else { k - 1 };
    let a = T::from_f64_lossy(2.0) * T::PI() * rho;
    let gamma = kernel_gamma::<T>(d, k)?;
    let two_pi = T::from_f64_lossy(2.0) * T::PI();
    let half_d = T::from_usize_lossy(d) / T::from_f64_lossy(2.0);
    let prefactor = gamma
        * two_pi.powf(half_d)
        * a.powf(T::one() - half_d)
        * (T::from_f64_lossy(2.0) * a / T::PI()).sqrt();
    // integrand j_n(a r) r^{-(d-1)/2}
    let neg_pow = -((d as i32 - 1) / 2);
    let integrand = move |r: T| sph_bessel_j(n_order, a * r) * r.powi(neg_pow);
    // oscillation sets in past the Bessel turning point x ~ n
    let x_start = T::from_usize_lossy(n_order) + T::from_f64_lossy(3.0);
    let r_osc = (x_start / a).max(T::one());
    let cfg = QuadConfig::with_tol(1e-11);
    let mut total = T::zero();
    if r_osc > T::one() {
        total = total + integrate(integrand, T::one(), r_osc, cfg)?;
    }
    let half_period = T::PI() / a;
    total = total + integrate_oscillatory_tail(integrand, r_osc, half_period, cfg, 120)?;
    Ok(prefactor * total)
}

/// Quadrature profile sampled over a rho grid, parallel over points.
pub fn profile_quadrature_curve<T: Scalar>(dk: DimOrder, rhos: &[T]) -> Result<RadialProfile<T>> {
    let values: Vec<Complex<T>> = rhos
        .par_iter()
        .map(|&rho| profile_quadrature(dk, rho).map(|v| Complex::new(v, T::zero())))
        .collect::<Result<_>>()?;
    RadialProfile::new(dk, ProfileMethod::Quadrature, rhos.to_vec(), values, vec![])
}

/// Frequency-wise ratio forward(R_P^t f) / forward(R_P f), binned by |xi|.
/// Bins whose denominator stays below `threshold` times the maximum are
/// dropped. The profile abscissa is the dimensionless rho = t |xi|.
pub fn profile_grid_ratio<T: Scalar>(
    dk: DimOrder,
    t: T,
    grid: &GridSpec<T>,
    f: &GridField<T>,
    p: &SolidHarmonic,
    images: usize,
) -> Result<RadialProfile<T>> {
    if grid.axes() != dk.d() || f.spec() != grid {
        return Err(Error::Dimension("grid/dimension mismatch".into()));
    }
    let r_max = grid.side() / T::from_f64_lossy(2.0);
    let spec = TruncatedKernelSpec::new(p.clone(), t, r_max)?.with_images(images);
    let num = apply_truncated(f, &spec)?.forward()?;
    let den = apply_riesz(f, p)?.forward()?;
    let threshold = T::from_f64_lossy(0.1);
    let max_den = den.values().iter().map(|v| v.norm()).fold(T::zero(), T::max);
    if max_den == T::zero() {
        return Err(Error::IllConditioned(
            "Riesz transform of the calibration field vanishes".into(),
        ));
    }
    let cut = threshold * max_den;
    // bin key: integer |m|^2. Modes past N/3 are dropped: that close to
    // Nyquist the sampled kernel's aliasing dominates the ratio.
    let max_m2 = ((grid.points() as u64) * (grid.points() as u64)) / 9;
    use std::collections::BTreeMap;
    let mut bins: BTreeMap<u64, Vec<Complex<T>>> = BTreeMap::new();
    let num_values = num.values();
    let den_values = den.values();
    grid.for_each_mode(|flat, freqs| {
        if freqs.iter().all(|&m| m == 0) {
            return;
        }
        let key: u64 = freqs.iter().map(|&m| (m * m) as u64).sum();
        if key > max_m2 {
            return;
        }
        let d = den_values[flat];
        if d.norm() < cut {
            return;
        }
        bins.entry(key).or_default().push(num_values[flat] / d);
    });
    if bins.is_empty() {
        return Err(Error::IllConditioned(
            "no well-conditioned modes above the denominator threshold".into(),
        ));
    }
    let l = grid.side();
    let mut rho = Vec::with_capacity(bins.len());
    let mut values = Vec::with_capacity(bins.len());
    let mut spread = Vec::with_capacity(bins.len());
    for (key, ratios) in bins {
        let count = T::from_usize_lossy(ratios.len());
        let mut mean = Complex::new(T::zero(), T::zero());
        for r in &ratios {
            mean = mean + *r;
        }
        mean = mean / count;
        let mut dev = T::zero();
        for r in &ratios {
            dev = dev.max((*r - mean).norm());
        }
        rho.push(t * T::from_f64_lossy((key as f64).sqrt()) / l);
        values.push(mean);
        spread.push(dev / mean.norm().max(T::from_f64_lossy(1e-300)));
    }
    RadialProfile::new(dk, ProfileMethod::GridRatio, rho, values, spread)
}

/// Direct application of the factorization operator M_k^t: spectral
/// multiplication by m^1(t |xi|) interpolated from the profile. Modes
/// beyond the profile range are an extrapolation error, but only when they
/// carry coefficient mass.
pub fn apply_radial_profile<T: Scalar>(
    f: &GridField<T>,
    profile: &RadialProfile<T>,
    t: T,
) -> Result<GridField<T>> {
    let l = f.spec().side();
    let mut hat = f.forward()?;
    let max_coeff = hat.values().iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let negligible = max_coeff * T::from_f64_lossy(1e-14);
    let spec = *hat.spec();
    let values = hat.values_mut();
    let mut err: Option<Error> = None;
    spec.for_each_mode(|flat, freqs| {
        if values[flat].norm() <= negligible {
            values[flat] = Complex::new(T::zero(), T::zero());
            return;
        }
        let m2: u64 = freqs.iter().map(|&m| (m * m) as u64).sum();
        let rho = t * T::from_f64_lossy((m2 as f64).sqrt()) / l;
        match profile.value_at(rho) {
            Ok(v) => values[flat] = values[flat] * v,
            Err(e) => {
                if err.is_none() {
                    err = Some(e);
                }
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    hat.inverse()
}

/// Least-squares report for the even-order radial polynomial profile of
/// the factorization kernel b inside the unit ball.
#[derive(Debug, Clone)]
pub struct EvenFitReport<T> {
    pub alphas: Vec<T>,
    pub residual: T,
    pub holdout_residual: T,
}

/// Fit the coefficients of b(x) = (alpha_0 + alpha_1 |x|^2 + ...) 1_B(x)
/// (k even) so that forward(b) * m_P matches forward(K_P 1_{B^c}) in least
/// squares over well-conditioned modes; reports the fit residual and a
/// held-out residual on a disjoint mode split.
pub fn fit_even_coefficients<T: Scalar>(
    dk: DimOrder,
    grid: &GridSpec<T>,
    images: usize,
    seed: u64,
) -> Result<EvenFitReport<T>> {
    if dk.k() % 2 != 0 {
        return Err(Error::Unsupported(
            "polynomial-profile fit applies to even k only".into(),
        ));
    }
    if grid.axes() != dk.d() {
        return Err(Error::Dimension("grid/dimension mismatch".into()));
    }
    let n_par = dk.k() / 2;
    let t = T::one();
    let r_max = grid.side() / T::from_f64_lossy(2.0);
    let p = SolidHarmonic::monomial(
        &crate::harmonics::MultiIndex::new(dk.d(), (1..=dk.k()).collect()).unwrap(),
    );
    // target: the truncated kernel K_P 1_{|y| > 1}, periodized for accuracy
    let kspec = TruncatedKernelSpec::new(p.clone(), t, r_max)?.with_images(images);
    let target = crate::riesz::sample_truncated_kernel(&kspec, grid)?.forward()?;
    // basis: |x|^{2i} inside the unit ball, with the same one-cell ramp
    // at the boundary as the kernel sampler uses at its cut radii
    let hh = grid.spacing();
    let mut basis_hats = Vec::with_capacity(n_par);
    for i in 0..n_par {
        let field = GridField::from_function(*grid, |x| {
            // x arrives in [0, L)^n; fold into the symmetric cell
            let mut r2 = T::zero();
            for &c in x {
                let half = grid.side() / T::from_f64_lossy(2.0);
                let w = if c < half { c } else { c - grid.side() };
                r2 = r2 + w * w;
            }
            let r = r2.sqrt();
            let w = ((T::one() - r) / hh + T::from_f64_lossy(0.5))
                .max(T::zero())
                .min(T::one());
            Complex::new(r2.powi(i as i32) * w, T::zero())
        });
        basis_hats.push(field.forward()?);
    }
    // design matrix rows: hat(g_i)[m] * m_P(m); response: hat(K^t)[m];
    // modes past N/4 are discretization-dominated and left out
    let nyquist = -(grid.points() as i64) / 2;
    let well_conditioned = (grid.points() / 4) as i64;
    let mut rows: Vec<(Vec<Complex<T>>, Complex<T>)> = Vec::new();
    let mut xi = vec![T::zero(); grid.axes()];
    let target_values = target.values();
    grid.for_each_mode(|flat, freqs| {
        if freqs.iter().all(|&m| m == 0)
            || freqs.iter().any(|&m| m == nyquist)
            || freqs.iter().any(|&m| m.abs() > well_conditioned)
        {
            return;
        }
        for (x, &m) in xi.iter_mut().zip(freqs) {
            *x = T::from_i64(m).unwrap();
        }
        let mp = p.multiplier_value(&xi).expect("dimension checked");
        let row: Vec<Complex<T>> = basis_hats
            .iter()
            .map(|b| b.values()[flat] * mp)
            .collect();
        rows.push((row, target_values[flat]));
    });
    // seeded train/holdout split
    let mut rng = sample_rng(seed, 0);
    use rand::Rng;
    let assignment: Vec<bool> = (0..rows.len()).map(|_| rng.gen_bool(0.5)).collect();
    let solve = |keep: bool| -> Result<(Vec<T>, T)> {
        // real normal equations: alpha real
        let mut g = vec![T::zero(); n_par * n_par];
        let mut b = vec![T::zero(); n_par];
        let mut y2 = T::zero();
        for (row_idx, (row, y)) in rows.iter().enumerate() {
            if assignment[row_idx] != keep {
                continue;
            }
            for i in 0..n_par {
                for j in 0..n_par {
                    g[i * n_par + j] = g[i * n_par + j] + (row[i].conj() * row[j]).re;
                }
                b[i] = b[i] + (row[i].conj() * *y).re;
            }
            y2 = y2 + y.norm_sqr();
        }
        let alphas = solve_spd(&mut g.clone(), &b, n_par)?;
        // residual on the same subset
        let mut r2 = T::zero();
        for (row_idx, (row, y)) in rows.iter().enumerate() {
            if assignment[row_idx] != keep {
                continue;
            }
            let mut pred = Complex::new(T::zero(), T::zero());
            for i in 0..n_par {
                pred = pred + row[i] * Complex::new(alphas[i], T::zero());
            }
            r2 = r2 + (pred - *y).norm_sqr();
        }
        Ok((alphas, (r2 / y2.max(T::from_f64_lossy(1e-300))).sqrt()))
    };
    let (alphas, residual) = solve(true)?;
    // held-out residual of the train-fit coefficients
    let mut r2 = T::zero();
    let mut y2 = T::zero();
    for (row_idx, (row, y)) in rows.iter().enumerate() {
        if assignment[row_idx] {
            continue;
        }
        let mut pred = Complex::new(T::zero(), T::zero());
        for i in 0..n_par {
            pred = pred + row[i] * Complex::new(alphas[i], T::zero());
        }
        r2 = r2 + (pred - *y).norm_sqr();
        y2 = y2 + y.norm_sqr();
    }
    let holdout_residual = (r2 / y2.max(T::from_f64_lossy(1e-300))).sqrt();
    Ok(EvenFitReport {
        alphas,
        residual,
        holdout_residual,
    })
}

/// Gaussian elimination with partial pivoting on a small symmetric system;
/// errors out on rank deficiency with a conditioning report.
fn solve_spd<T: Scalar>(g: &mut [T], b: &[T], n: usize) -> Result<Vec<T>> {
    let mut aug: Vec<T> = Vec::with_capacity(n * (n + 1));
    for i in 0..n {
        aug.extend_from_slice(&g[i * n..(i + 1) * n]);
        aug.push(b[i]);
    }
    let cols = n + 1;
    let scale = (0..n)
        .map(|i| aug[i * cols + i].abs())
        .fold(T::zero(), T::max);
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, aug[r * cols + col].abs()))
            .fold((col, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pivot < scale * T::from_f64_lossy(1e-12) {
            return Err(Error::IllConditioned(format!(
                "normal equations rank-deficient: pivot {:.3e} against scale {:.3e}",
                pivot.to_f64_lossy(),
                scale.to_f64_lossy()
            )));
        }
        if pivot_row != col {
            for c in 0..cols {
                aug.swap(pivot_row * cols + c, col * cols + c);
            }
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = aug[r * cols + col] / aug[col * cols + col];
            for c in col..cols {
                let v = aug[col * cols + c];
                aug[r * cols + c] = aug[r * cols + c] - factor * v;
            }
        }
    }
    Ok((0..n).map(|i| aug[i * cols + n] / aug[i * cols + i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Space;
    use crate::harmonics::MultiIndex;

    fn dk(d: usize, k: usize) -> DimOrder {
        DimOrder::new(d, k).unwrap()
    }

    fn mono(d: usize, entries: &[usize]) -> SolidHarmonic {
        SolidHarmonic::monomial(&MultiIndex::new(d, entries.to_vec()).unwrap())
    }

    /// Calibration field with flat spectral magnitude on a band: every
    /// |xi| bin is well represented for ratio profiling.
    fn flat_band_field(spec: GridSpec<f64>, band: i64, seed: u64) -> GridField<f64> {
        use rand::Rng;
        let mut rng = sample_rng(seed, 0);
        let mut hat = GridField::zeros(spec, Space::Frequency);
        let mut coeffs: std::collections::BTreeMap<Vec<i64>, Complex<f64>> =
            std::collections::BTreeMap::new();
        spec.for_each_mode(|_, freqs| {
            if freqs.iter().any(|&m| m.abs() > band) || freqs.iter().all(|&m| m == 0) {
                return;
            }
            if !coeffs.contains_key(freqs) {
                let phase: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
                coeffs.insert(freqs.to_vec(), Complex::new(phase.cos(), phase.sin()));
                // Hermitian partner for a real field
                let neg: Vec<i64> = freqs.iter().map(|&m| -m).collect();
                coeffs.insert(neg, Complex::new(phase.cos(), -phase.sin()));
            }
        });
        let values = hat.values_mut();
        spec.for_each_mode(|flat, freqs| {
            if let Some(c) = coeffs.get(freqs) {
                values[flat] = *c;
            }
        });
        hat.inverse().unwrap()
    }

    #[test]
    fn quadrature_profile_matches_closed_form_d1() {
        for &rho in &[0.05_f64, 0.25, 0.5, 1.0, 2.0, 5.0, 8.0] {
            let got: f64 = profile_quadrature(dk(1, 1), rho).unwrap();
            let expect = closed_form_1d(rho);
            assert!(
                (got - expect).abs() < 1e-8,
                "rho={rho}: {got} vs {expect}"
            );
        }
        // spec'd spot value at rho = 1/2
        let v: f64 = profile_quadrature(dk(1, 1), 0.5).unwrap();
        assert!((v + 0.17898).abs() < 1e-4, "m1(1/2) = {v}");
    }

    #[test]
    fn quadrature_profile_limits_d3() {
        // rho -> 0 recovers the full transform (multiplier 1); the
        // approach is linear, m^1(rho) = 1 - (8/3) rho + O(rho^2) at
        // (d, k) = (3, 1), so the 1e-6 window needs rho ~ 1e-7
        let v: f64 = profile_quadrature(dk(3, 1), 1e-7).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "limit value {v}");
        let v: f64 = profile_quadrature(dk(3, 1), 1e-4).unwrap();
        assert!(
            (v - (1.0 - 8.0 / 3.0 * 1e-4)).abs() < 1e-7,
            "linear departure from 1 violated: {v}"
        );
        // Riemann-Lebesgue decay at rho = 8
        let v: f64 = profile_quadrature(dk(3, 1), 8.0).unwrap();
        assert!(v.abs() < 0.05, "tail value {v}");
    }

    #[test]
    fn quadrature_profile_rejects_even_d() {
        assert!(profile_quadrature(dk(2, 1), 1.0).is_err());
    }

    #[test]
    fn grid_ratio_matches_closed_form_d1() {
        let spec = GridSpec::new(1, 256, 16.0_f64).unwrap();
        let f = flat_band_field(spec, 127, 3);
        let t = 2.0;
        let profile = profile_grid_ratio(dk(1, 1), t, &spec, &f, &mono(1, &[1]), 128).unwrap();
        let mut worst = 0.0_f64;
        for (rho, v) in profile.rho().iter().zip(profile.values()) {
            if *rho < 0.1 || *rho > 4.0 {
                continue;
            }
            let expect = closed_form_1d(*rho);
            worst = worst.max((v.re - expect).abs().max(v.im.abs()));
        }
        assert!(worst < 0.02, "worst deviation {worst}");
    }

    #[test]
    fn grid_ratio_radial_spread_small_d2() {
        let spec = GridSpec::new(2, 256, 16.0_f64).unwrap();
        let f = flat_band_field(spec, 24, 5);
        let profile = profile_grid_ratio(dk(2, 1), 1.0, &spec, &f, &mono(2, &[1]), 12).unwrap();
        // radiality: within-bin spread below 2 percent wherever the bin
        // mean is away from the profile's zero crossings; the low-rho
        // limit (value near 1) sets the reference scale
        let scale = profile.values()[0].norm();
        let mut worst = 0.0_f64;
        let mut checked = 0;
        for ((rho, s), v) in profile
            .rho()
            .iter()
            .zip(profile.spread())
            .zip(profile.values())
        {
            if *rho < 0.1 || v.norm() < 0.2 * scale {
                continue;
            }
            worst = worst.max(*s);
            checked += 1;
        }
        assert!(checked > 10, "too few meaningful bins ({checked})");
        assert!(worst < 0.02, "worst in-bin spread {worst}");
    }

    #[test]
    fn dilation_collapse_across_t() {
        // profiles computed at different t agree as functions of rho = t|xi|
        let spec = GridSpec::new(1, 256, 16.0_f64).unwrap();
        let f = flat_band_field(spec, 127, 7);
        let profiles: Vec<RadialProfile<f64>> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&t| profile_grid_ratio(dk(1, 1), t, &spec, &f, &mono(1, &[1]), 128).unwrap())
            .collect();
        for p in &profiles {
            for (rho, v) in p.rho().iter().zip(p.values()) {
                if *rho < 0.1 || *rho > 4.0 {
                    continue;
                }
                for q in &profiles {
                    if *rho >= q.rho()[0] && *rho <= *q.rho().last().unwrap() {
                        let other = q.value_at(*rho).unwrap();
                        assert!(
                            (v.re - other.re).abs() < 0.02,
                            "collapse failure at rho={rho}: {} vs {}",
                            v.re,
                            other.re
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn profile_is_real_after_symbol_division() {
        let spec = GridSpec::new(2, 64, 16.0_f64).unwrap();
        let f = flat_band_field(spec, 8, 9);
        for (k, p) in [(1usize, mono(2, &[1])), (2, mono(2, &[1, 2]))] {
            let profile = profile_grid_ratio(dk(2, k), 2.0, &spec, &f, &p, 16).unwrap();
            for (rho, v) in profile.rho().iter().zip(profile.values()) {
                if *rho > 2.0 {
                    continue;
                }
                assert!(v.im.abs() < 1e-3, "imaginary residue {} at rho={rho}", v.im);
            }
        }
    }

    #[test]
    fn apply_profile_identity_and_single_mode() {
        let spec = GridSpec::new(1, 64, 16.0_f64).unwrap();
        let f = flat_band_field(spec, 8, 11);
        // profile identically one acts as the identity
        let ones = RadialProfile::new(
            dk(1, 1),
            ProfileMethod::ClosedForm1d,
            vec![0.125, 4.0],
            vec![Complex::new(1.0, 0.0); 2],
            vec![],
        )
        .unwrap();
        let out = apply_radial_profile(&f, &ones, 1.0).unwrap();
        assert!(out.relative_l2_distance(&f).unwrap() < 1e-12);

        // single mode scales by m^1(rho_0)
        let l = spec.side();
        let mode = GridField::from_function(spec, |x| {
            Complex::new((2.0 * std::f64::consts::PI * 3.0 * x[0] / l).cos(), 0.0)
        });
        let rhos: Vec<f64> = (1..=40).map(|i| i as f64 * 0.05).collect();
        let values: Vec<Complex<f64>> = rhos
            .iter()
            .map(|&r| Complex::new(closed_form_1d(r), 0.0))
            .collect();
        let profile =
            RadialProfile::new(dk(1, 1), ProfileMethod::ClosedForm1d, rhos, values, vec![])
                .unwrap();
        // t chosen so rho = 3t/L lands exactly on a knot: interpolation exact
        let t = 0.8;
        let out = apply_radial_profile(&mode, &profile, t).unwrap();
        let target = closed_form_1d(t * 3.0 / l);
        let expect = mode.scaled(Complex::new(target, 0.0));
        assert!(out.relative_l2_distance(&expect).unwrap() < 1e-12);
        // off-knot rho goes through the monotone cubic: small but inexact
        let t = 1.5;
        let out = apply_radial_profile(&mode, &profile, t).unwrap();
        let target = closed_form_1d(t * 3.0 / l);
        let expect = mode.scaled(Complex::new(target, 0.0));
        assert!(out.relative_l2_distance(&expect).unwrap() < 5e-3);
        // extrapolation beyond the profile range errors out
        assert!(apply_radial_profile(&mode, &profile, 20.0).is_err());
    }

    #[test]
    fn grid_ratio_cross_route_agreement_d3() {
        // quadrature and grid-ratio agree within 2 percent where both live
        let spec = GridSpec::new(3, 32, 16.0_f64).unwrap();
        let f = flat_band_field(spec, 4, 13);
        let t = 2.0;
        let profile = profile_grid_ratio(dk(3, 1), t, &spec, &f, &mono(3, &[1]), 4).unwrap();
        let mut checked = 0;
        for (rho, v) in profile.rho().iter().zip(profile.values()) {
            if *rho < 0.2 || *rho > 1.5 {
                continue;
            }
            let q = profile_quadrature(dk(3, 1), *rho).unwrap();
            assert!(
                (v.re - q).abs() < 0.02,
                "rho={rho}: grid {} vs quadrature {q}",
                v.re
            );
            checked += 1;
        }
        assert!(checked > 5, "too few comparable bins ({checked})");
    }

    #[test]
    fn p_independence_same_degree_d3() {
        let spec = GridSpec::new(3, 32, 16.0_f64).unwrap();
        // permutation-symmetric radial field so the mode-acceptance sets
        // coincide between the two monomials
        let l = spec.side();
        let f = GridField::from_function(spec, |x| {
            let mut s = 0.0;
            for m0 in -1i32..=1 {
                for m1 in -1i32..=1 {
                    for m2 in -1i32..=1 {
                        let dx = x[0] - l / 2.0 + l * m0 as f64;
                        let dy = x[1] - l / 2.0 + l * m1 as f64;
                        let dz = x[2] - l / 2.0 + l * m2 as f64;
                        s += (-(dx * dx + dy * dy + dz * dz)).exp();
                    }
                }
            }
            Complex::new(s, 0.0)
        })
        .band_limited(4)
        .unwrap();
        let pa = profile_grid_ratio(dk(3, 2), 2.0, &spec, &f, &mono(3, &[1, 2]), 4).unwrap();
        let pb = profile_grid_ratio(dk(3, 2), 2.0, &spec, &f, &mono(3, &[1, 3]), 4).unwrap();
        let mut shared = 0;
        for (rho_a, va) in pa.rho().iter().zip(pa.values()) {
            for (rho_b, vb) in pb.rho().iter().zip(pb.values()) {
                if (rho_a - rho_b).abs() < 1e-12 {
                    assert!(
                        (va - vb).norm() < 1e-3,
                        "P-dependence at rho={rho_a}: {va} vs {vb}"
                    );
                    shared += 1;
                }
            }
        }
        assert!(shared > 3, "too few shared bins ({shared})");
    }

    #[test]
    fn even_fit_k2_d2() {
        let spec = GridSpec::new(2, 128, 16.0_f64).unwrap();
        let report = fit_even_coefficients(dk(2, 2), &spec, 16, 7).unwrap();
        assert_eq!(report.alphas.len(), 1);
        assert!(
            report.residual < 5e-2,
            "fit residual {} too large",
            report.residual
        );
        assert!(
            report.holdout_residual < 2.0 * report.residual.max(1e-6),
            "holdout {} vs fit {}",
            report.holdout_residual,
            report.residual
        );
        // the zero-coefficient guess must be far worse than the fit
        assert!(report.residual < 0.5);
    }

    #[test]
    fn pchip_monotone_data_interpolates_monotonically() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.5).tanh()).collect();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=90 {
            let x = i as f64 * 0.1;
            let v = pchip_eval(&xs, &ys, x);
            assert!(v >= prev - 1e-12, "overshoot at x={x}");
            prev = v;
        }
        // reproduces knots exactly
        for (x, y) in xs.iter().zip(&ys) {
            assert!((pchip_eval(&xs, &ys, *x) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_export_shape() {
        let profile = RadialProfile::new(
            dk(1, 1),
            ProfileMethod::ClosedForm1d,
            vec![0.5_f64, 1.0],
            vec![Complex::new(0.1, 0.0), Complex::new(0.2, 0.0)],
            vec![],
        )
        .unwrap();
        let mut buf = Vec::new();
        profile.write_csv(&mut buf, 1.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "rho,re_m,im_m,method,d,k,t");
        assert!(lines[1].starts_with("0.5,0.1,0,closed_form_1d,1,1,"));
    }
}
