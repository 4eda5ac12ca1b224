//! The core grid operators: spectral Riesz transform R_P, truncated
//! transform R_P^t by kernel convolution, the maximal transform over a
//! truncation grid, square functions, and the composite R^t = sum over
//! distinct-index j of R_j^t R_j.

use num_complex::Complex;

use crate::constants::{index_count, DimOrder};
use crate::error::{Error, Result};
use crate::fields::{same_grid, GridField, GridSpec, Space};
use crate::harmonics::{enumerate_distinct, SolidHarmonic};
use crate::scalar::Scalar;

/// Geometric grid of truncation radii t_min * ratio^i <= t_max.
#[derive(Debug, Clone)]
pub struct TruncationGrid<T> {
    values: Vec<T>,
}

impl<T: Scalar> TruncationGrid<T> {
    pub fn geometric(t_min: T, t_max: T, ratio: T) -> Result<Self> {
        if !(t_min > T::zero()) || !(t_max >= t_min) {
            return Err(Error::Domain("need 0 < t_min <= t_max".into()));
        }
        if !(ratio > T::one()) {
            return Err(Error::Domain("truncation grid ratio must exceed 1".into()));
        }
        let mut values = Vec::new();
        let fuzz = T::from_f64_lossy(1.0 + 1e-12);
        let mut t = t_min;
        while t <= t_max * fuzz {
            values.push(t);
            t = t * ratio;
        }
        Ok(TruncationGrid { values })
    }

    /// Default grid for a target field: t_min = 4h, t_max = L/4, ratio 2^{1/4}.
    pub fn default_for(spec: &GridSpec<T>) -> Result<Self> {
        let h = spec.spacing();
        TruncationGrid::geometric(
            T::from_f64_lossy(4.0) * h,
            spec.side() / T::from_f64_lossy(4.0),
            T::from_f64_lossy(2.0_f64.powf(0.25)),
        )
    }

    pub fn singleton(t: T) -> Result<Self> {
        TruncationGrid::from_values(vec![t])
    }

    /// Explicit radii; must be positive and strictly increasing.
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empty truncation grid".into()));
        }
        if !(values[0] > T::zero()) {
            return Err(Error::Domain("truncation radii must be positive".into()));
        }
        for w in values.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Domain(
                    "truncation radii must be strictly increasing".into(),
                ));
            }
        }
        Ok(TruncationGrid { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Accuracy guard: truncation radii must be resolvable, t_min >= 2h.
    pub fn validate_for(&self, spec: &GridSpec<T>) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Domain("empty truncation grid".into()));
        }
        let h = spec.spacing();
        if self.values[0] < T::from_f64_lossy(2.0) * h {
            return Err(Error::Domain(format!(
                "t_min {} under-resolves the annulus (2h = {})",
                self.values[0].to_f64_lossy(),
                2.0 * h.to_f64_lossy()
            )));
        }
        Ok(())
    }
}

/// Description of one truncated kernel gamma_k P(y)/|y|^{d+k} 1{t < |y| <= R_max}.
///
/// `images = 0` samples the kernel literally on the symmetric cell (far
/// field beyond R_max discarded; its size is reported by [`tail_proxy`]).
/// `images = W > 0` periodizes instead: lattice translates y + nL with
/// |n|_inf <= W are summed and the outer cutoff is waived, which removes
/// the far-field truncation bias in spectral comparisons.
#[derive(Debug, Clone)]
pub struct TruncatedKernelSpec<T> {
    pub harmonic: SolidHarmonic,
    pub t: T,
    pub r_max: T,
    pub images: usize,
}

impl<T: Scalar> TruncatedKernelSpec<T> {
    pub fn new(harmonic: SolidHarmonic, t: T, r_max: T) -> Result<Self> {
        if !(t > T::zero()) || !(r_max > T::zero()) {
            return Err(Error::Domain("truncation radii must be positive".into()));
        }
        Ok(TruncatedKernelSpec {
            harmonic,
            t,
            r_max,
            images: 0,
        })
    }

    pub fn with_images(mut self, images: usize) -> Self {
        self.images = images;
        self
    }

    fn validate_for(&self, grid: &GridSpec<T>) -> Result<()> {
        if self.harmonic.dim() != grid.axes() {
            return Err(Error::Dimension(format!(
                "kernel in dimension {} on a {}-axis grid",
                self.harmonic.dim(),
                grid.axes()
            )));
        }
        let h = grid.spacing();
        if self.t < T::from_f64_lossy(2.0) * h {
            return Err(Error::Domain(format!(
                "truncation radius {} under-resolves the annulus (2h = {})",
                self.t.to_f64_lossy(),
                2.0 * h.to_f64_lossy()
            )));
        }
        let half = grid.side() / T::from_f64_lossy(2.0);
        if self.r_max > half * T::from_f64_lossy(1.0 + 1e-12) {
            return Err(Error::Domain(
                "R_max must keep the stored kernel inside the fundamental cell (R_max <= L/2)"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Raw kernel data reused across truncation radii: the unrestricted value
/// P(y)/|y|^{d+k} and the radius at every site, plus the (t-independent)
/// sum over far lattice images when periodization is on.
struct KernelTable<T> {
    near_value: Vec<T>,
    radius: Vec<T>,
    /// sites on the unpaired plane y_axis = -L/2, which have no lattice
    /// partner under y -> -y and are excluded from the sampled kernel
    boundary: Vec<bool>,
    far: Option<Vec<T>>,
    gamma: T,
    spacing: T,
}

fn kernel_table<T: Scalar>(
    harmonic: &SolidHarmonic,
    grid: &GridSpec<T>,
    images: usize,
) -> Result<KernelTable<T>> {
    let d = grid.axes();
    let k = harmonic.degree();
    let gamma = gamma_value::<T>(d, k)?;
    let terms = harmonic.compiled_terms::<T>();
    let total = grid.total();
    let mut near_value = vec![T::zero(); total];
    let mut radius = vec![T::zero(); total];
    let mut boundary = vec![false; total];
    let mut coords = vec![T::zero(); d];
    let power = (d + k) as i32;
    let half_n = grid.points() / 2;
    grid.for_each_site(|flat, digits| {
        boundary[flat] = digits.iter().any(|&i| i == half_n);
        for (c, &i) in coords.iter_mut().zip(digits) {
            *c = grid.wrapped_coord(i);
        }
        let r2: T = coords.iter().map(|&c| c * c).sum();
        let r = r2.sqrt();
        radius[flat] = r;
        if r > T::zero() {
            near_value[flat] = eval_terms(&terms, &coords) / r.powi(power);
        }
    });
    let far = if images > 0 {
        let w = images as i64;
        let l = grid.side();
        let mut far = vec![T::zero(); total];
        let mut shifts: Vec<Vec<T>> = Vec::new();
        let mut digits = vec![-w; d];
        loop {
            if digits.iter().any(|&x| x != 0) {
                shifts.push(digits.iter().map(|&x| T::from_i64(x).unwrap() * l).collect());
            }
            let mut ax = 0;
            loop {
                if ax == d {
                    break;
                }
                digits[ax] += 1;
                if digits[ax] > w {
                    digits[ax] = -w;
                    ax += 1;
                } else {
                    break;
                }
            }
            if ax == d {
                break;
            }
        }
        let mut shifted = vec![T::zero(); d];
        grid.for_each_site(|flat, digits| {
            for (c, &i) in coords.iter_mut().zip(digits) {
                *c = grid.wrapped_coord(i);
            }
            let mut acc = T::zero();
            for s in &shifts {
                for i in 0..d {
                    shifted[i] = coords[i] + s[i];
                }
                let r2: T = shifted.iter().map(|&c| c * c).sum();
                acc = acc + eval_terms(&terms, &shifted) / r2.sqrt().powi(power);
            }
            far[flat] = acc;
        });
        Some(far)
    } else {
        None
    };
    Ok(KernelTable {
        near_value,
        radius,
        boundary,
        far,
        gamma,
        spacing: grid.spacing(),
    })
}

fn gamma_value<T: Scalar>(d: usize, k: usize) -> Result<T> {
    // gamma_{k,d} evaluated without the k <= d restriction of DimOrder;
    // kernels on R^{2d} use gamma_{k,2d} through the same formula.
    use crate::specfun::log_gamma;
    if d == 0 || k == 0 {
        return Err(Error::Domain("gamma_{k,d} needs positive d, k".into()));
    }
    let df = T::from_usize_lossy(d);
    let kf = T::from_usize_lossy(k);
    let half = T::from_f64_lossy(0.5);
    let log = log_gamma(half * (kf + df)) - half * df * T::PI().ln() - log_gamma(half * kf);
    Ok(log.exp())
}

fn eval_terms<T: Scalar>(terms: &[(T, Vec<u32>)], x: &[T]) -> T {
    let mut acc = T::zero();
    for (c, expo) in terms {
        let mut t = *c;
        for (xi, &e) in x.iter().zip(expo.iter()) {
            t = t * xi.powi(e as i32);
        }
        acc = acc + t;
    }
    acc
}

impl<T: Scalar> KernelTable<T> {
    /// Sampled kernel at truncation radius t. The cut indicators are
    /// realized as one-cell linear ramps centered on the cut radius: the
    /// cell-averaged (trapezoid) reading of the sharp indicator, which
    /// removes the direction-dependent O(h) quantization of the jump.
    fn truncate(&self, spec_t: T, r_max: T, grid: &GridSpec<T>) -> GridField<T> {
        let mut values = vec![Complex::new(T::zero(), T::zero()); self.near_value.len()];
        let periodized = self.far.is_some();
        let h = self.spacing;
        let half = T::from_f64_lossy(0.5);
        let ramp = |x: T| (x / h + half).max(T::zero()).min(T::one());
        for (i, v) in values.iter_mut().enumerate() {
            let r = self.radius[i];
            let mut acc = T::zero();
            if !self.boundary[i] {
                let mut w = ramp(r - spec_t);
                if !periodized {
                    w = w * ramp(r_max - r);
                }
                acc = self.near_value[i] * w;
            }
            if let Some(far) = &self.far {
                acc = acc + far[i];
            }
            *v = Complex::new(self.gamma * acc, T::zero());
        }
        GridField::from_values(*grid, Space::Physical, values).expect("sized buffer")
    }
}

/// Sample the truncated kernel on the grid's symmetric fundamental cell;
/// value 0 at the origin.
pub fn sample_truncated_kernel<T: Scalar>(
    spec: &TruncatedKernelSpec<T>,
    grid: &GridSpec<T>,
) -> Result<GridField<T>> {
    spec.validate_for(grid)?;
    let table = kernel_table(&spec.harmonic, grid, spec.images)?;
    Ok(table.truncate(spec.t, spec.r_max, grid))
}

/// Conversion factor turning a sampled-kernel spectral product into the
/// Riemann-sum convolution: h^d sqrt(N^d).
fn convolution_scale<T: Scalar>(grid: &GridSpec<T>) -> T {
    let h = grid.spacing();
    h.powi(grid.axes() as i32) * T::from_usize_lossy(grid.total()).sqrt()
}

/// Spectral Riesz transform: multiplier (-i)^k P(xi/|xi|), zero mode 0.
/// Modes with any axis at the unpaired Nyquist frequency are zeroed so that
/// real inputs map to real outputs for every parity of k.
pub fn apply_riesz<T: Scalar>(f: &GridField<T>, p: &SolidHarmonic) -> Result<GridField<T>> {
    if p.dim() != f.spec().axes() {
        return Err(Error::Dimension(format!(
            "harmonic in dimension {} applied on a {}-axis grid",
            p.dim(),
            f.spec().axes()
        )));
    }
    let nyquist = -(f.spec().points() as i64) / 2;
    let mut xi = vec![T::zero(); f.spec().axes()];
    f.apply_multiplier(|_, freqs| {
        if freqs.iter().all(|&m| m == 0) || freqs.iter().any(|&m| m == nyquist) {
            return Complex::new(T::zero(), T::zero());
        }
        for (x, &m) in xi.iter_mut().zip(freqs) {
            *x = T::from_i64(m).unwrap();
        }
        p.multiplier_value(&xi).expect("dimension checked")
    })
}

/// Truncated Riesz transform: periodic convolution with the sampled kernel,
/// computed spectrally and scaled by the Riemann weight h^d.
pub fn apply_truncated<T: Scalar>(
    f: &GridField<T>,
    spec: &TruncatedKernelSpec<T>,
) -> Result<GridField<T>> {
    let kernel = sample_truncated_kernel(spec, f.spec())?;
    convolve(f, &kernel)
}

/// Periodic convolution (sum over lattice sites, scaled by h^d) of two
/// physical fields via the spectral product.
pub fn convolve<T: Scalar>(f: &GridField<T>, kernel: &GridField<T>) -> Result<GridField<T>> {
    same_grid(f, kernel)?;
    let fhat = f.forward()?;
    let khat = kernel.forward()?;
    let scale = convolution_scale(f.spec());
    let mut out = fhat.clone();
    for (o, (a, b)) in out
        .values_mut()
        .iter_mut()
        .zip(fhat.values().iter().zip(khat.values()))
    {
        *o = *a * *b * scale;
    }
    out.inverse()
}

/// Maximal truncated transform: pointwise maximum of |R_P^t f| over the
/// truncation grid. Output is real-valued and nonnegative.
pub fn apply_maximal<T: Scalar>(
    f: &GridField<T>,
    p: &SolidHarmonic,
    tg: &TruncationGrid<T>,
    r_max: T,
    images: usize,
) -> Result<GridField<T>> {
    tg.validate_for(f.spec())?;
    if p.dim() != f.spec().axes() {
        return Err(Error::Dimension("harmonic/grid dimension mismatch".into()));
    }
    let table = kernel_table(p, f.spec(), images)?;
    let fhat = f.forward()?;
    let scale = convolution_scale(f.spec());
    let mut max_field = GridField::zeros(*f.spec(), Space::Physical);
    for &t in tg.values() {
        let kernel = table.truncate(t, r_max, f.spec());
        let khat = kernel.forward()?;
        let mut prod = fhat.clone();
        for (o, k) in prod.values_mut().iter_mut().zip(khat.values()) {
            *o = *o * *k * scale;
        }
        let out = prod.inverse()?;
        for (m, v) in max_field.values_mut().iter_mut().zip(out.values()) {
            let mag = v.norm();
            if mag > m.re {
                *m = Complex::new(mag, T::zero());
            }
        }
    }
    Ok(max_field)
}

/// Pointwise ell^2 norm across a list of fields on a common grid.
pub fn square_function<T: Scalar>(fields: &[GridField<T>]) -> Result<GridField<T>> {
    let first = fields
        .first()
        .ok_or_else(|| Error::Domain("square function of an empty list".into()))?;
    for f in fields.iter().skip(1) {
        same_grid(first, f)?;
    }
    let mut out = GridField::zeros(*first.spec(), first.space());
    for f in fields {
        for (o, v) in out.values_mut().iter_mut().zip(f.values()) {
            *o = Complex::new(o.re + v.norm_sqr(), T::zero());
        }
    }
    for o in out.values_mut().iter_mut() {
        *o = Complex::new(o.re.sqrt(), T::zero());
    }
    Ok(out)
}

/// Frequency symbol of the composite operator R^t = sum_{j in I} R_j^t R_j
/// on the given grid (indexed by flat mode).
pub fn composite_rt_symbol<T: Scalar>(
    dk: DimOrder,
    t: T,
    r_max: T,
    images: usize,
    grid: &GridSpec<T>,
) -> Result<Vec<Complex<T>>> {
    if dk.d() != grid.axes() {
        return Err(Error::Dimension(format!(
            "composite operator for d={} on a {}-axis grid",
            dk.d(),
            grid.axes()
        )));
    }
    let scale = convolution_scale(grid);
    let nyquist = -(grid.points() as i64) / 2;
    let mut symbol = vec![Complex::new(T::zero(), T::zero()); grid.total()];
    for j in enumerate_distinct(dk.d(), dk.k()) {
        let p = SolidHarmonic::monomial(&j);
        let spec = TruncatedKernelSpec::new(p.clone(), t, r_max)?.with_images(images);
        let kernel = sample_truncated_kernel(&spec, grid)?;
        let khat = kernel.forward()?;
        let mut xi = vec![T::zero(); grid.axes()];
        let values = khat.values();
        grid.for_each_mode(|flat, freqs| {
            if freqs.iter().all(|&m| m == 0) || freqs.iter().any(|&m| m == nyquist) {
                return;
            }
            for (x, &m) in xi.iter_mut().zip(freqs) {
                *x = T::from_i64(m).unwrap();
            }
            let m_p = p.multiplier_value(&xi).expect("dimension checked");
            symbol[flat] = symbol[flat] + values[flat] * scale * m_p;
        });
    }
    Ok(symbol)
}

/// Apply the composite R^t f = sum_{j in I} R_j^t R_j f.
pub fn apply_composite_rt<T: Scalar>(
    f: &GridField<T>,
    dk: DimOrder,
    t: T,
    r_max: T,
    images: usize,
) -> Result<GridField<T>> {
    let symbol = composite_rt_symbol(dk, t, r_max, images, f.spec())?;
    let mut hat = f.forward()?;
    for (v, s) in hat.values_mut().iter_mut().zip(&symbol) {
        *v = *v * *s;
    }
    hat.inverse()
}

/// Integral of |kernel| over the shell R_max < |y| < 2 R_max, as a proxy for
/// the neglected convolution tail when `images = 0`. The radial part is
/// analytic; the angular mean of |P| is estimated by seeded Monte Carlo.
pub fn tail_proxy<T: Scalar>(p: &SolidHarmonic, d: usize, r_max: T, seed: u64) -> Result<T> {
    let k = p.degree();
    let gamma = gamma_value::<T>(d, k)?;
    let surf = crate::constants::surface_area::<T>(d)?.value;
    let mut rng = crate::util::sample_rng(seed, 0);
    let n_samples = 4096;
    let mut acc = T::zero();
    for _ in 0..n_samples {
        let w = crate::util::sample_sphere::<T, _>(d, &mut rng);
        acc = acc + p.evaluate(&w)?.abs();
    }
    let mean_abs_p = acc / T::from_usize_lossy(n_samples);
    // int_{R}^{2R} r^{d-1} r^{-d-k} dr = (R^{-k} - (2R)^{-k})/k
    let kf = T::from_usize_lossy(k);
    let radial = (r_max.powi(-(k as i32))
        - (T::from_f64_lossy(2.0) * r_max).powi(-(k as i32)))
        / kf;
    Ok(gamma * surf * mean_abs_p * radial)
}

/// |I| for the composite operator; re-exported here for term-count checks.
pub fn composite_term_count(dk: DimOrder) -> Result<u128> {
    index_count(dk)
}

/// Convenience: gamma_{k,d} as a plain scalar (also valid for k > d, as
/// needed by the complex-extension kernels on R^{2d}).
pub fn kernel_gamma<T: Scalar>(d: usize, k: usize) -> Result<T> {
    gamma_value::<T>(d, k)
}
