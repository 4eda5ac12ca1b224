//! Gamma-function constants and sphere-moment integrals.
//!
//! Every value is computed in the log domain with a separate sign so that
//! dimensions far past the double-precision overflow threshold of Gamma
//! (d ~ 170) stay usable.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::specfun::log_gamma;
use crate::util::{pairwise_sum, sample_rng, sample_sphere};

/// Dimension d and Riesz order k, with the standing assumption k <= d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimOrder {
    d: usize,
    k: usize,
}

impl DimOrder {
    pub fn new(d: usize, k: usize) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::Domain(format!(
                "dimension and order must be positive, got d={d}, k={k}"
            )));
        }
        if k > d {
            return Err(Error::Domain(format!(
                "order k={k} exceeds dimension d={d}"
            )));
        }
        Ok(DimOrder { d, k })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Whether a constant refers to the operators on R^d or to their extensions
/// on C^d identified with R^{2d}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ambient {
    RealD,
    Complex2d,
}

/// A real constant carried as sign * exp(log_value).
#[derive(Debug, Clone, Copy)]
pub struct ConstantValue<T> {
    pub value: T,
    pub log_value: T,
    pub sign: i8,
}

impl<T: Scalar> ConstantValue<T> {
    pub fn from_log(sign: i8, log_value: T) -> Self {
        let value = match sign {
            0 => T::zero(),
            s => T::from_f64_lossy(s as f64) * log_value.exp(),
        };
        ConstantValue {
            value,
            log_value,
            sign,
        }
    }

    pub fn zero() -> Self {
        ConstantValue {
            value: T::zero(),
            log_value: T::neg_infinity(),
            sign: 0,
        }
    }
}

/// Unnormalized surface area S_{d-1} = 2 pi^{d/2} / Gamma(d/2).
pub fn surface_area<T: Scalar>(d: usize) -> Result<ConstantValue<T>> {
    if d == 0 {
        return Err(Error::Domain("surface_area requires d >= 1".into()));
    }
    let d = T::from_usize_lossy(d);
    let half = T::from_f64_lossy(0.5);
    let log = T::from_f64_lossy(2.0).ln() + half * d * T::PI().ln() - log_gamma(half * d);
    Ok(ConstantValue::from_log(1, log))
}

/// gamma_{k,d} = Gamma((k+d)/2) / (pi^{d/2} Gamma(k/2)) for the real kernel,
/// or its 2d-dimensional analogue gamma~_k for the complex extension.
pub fn gamma_k<T: Scalar>(dk: DimOrder, ambient: Ambient) -> ConstantValue<T> {
    let d = T::from_usize_lossy(dk.d);
    let k = T::from_usize_lossy(dk.k);
    let half = T::from_f64_lossy(0.5);
    let log = match ambient {
        Ambient::RealD => {
            log_gamma(half * (k + d)) - half * d * T::PI().ln() - log_gamma(half * k)
        }
        Ambient::Complex2d => log_gamma(d + half * k) - d * T::PI().ln() - log_gamma(half * k),
    };
    ConstantValue::from_log(1, log)
}

/// B(d/2, d/2 + alpha) = Gamma(d/2) Gamma(d/2+alpha) / Gamma(d+alpha),
/// which equals 2 int_0^inf r^{d-1} (1+r^2)^{-d-alpha} dr.
pub fn beta_radial_integral<T: Scalar>(d: usize, alpha: T) -> Result<ConstantValue<T>> {
    if d == 0 {
        return Err(Error::Domain("beta_radial_integral requires d >= 1".into()));
    }
    if alpha < T::zero() {
        return Err(Error::Domain("alpha must be nonnegative".into()));
    }
    let d = T::from_usize_lossy(d);
    let half = T::from_f64_lossy(0.5);
    let log = log_gamma(half * d) + log_gamma(half * d + alpha) - log_gamma(d + alpha);
    Ok(ConstantValue::from_log(1, log))
}

/// Normalized sphere moment int_{S^{d-1}} w_1^2 ... w_k^2 dw
/// = Gamma(d/2) / (2^k Gamma(k + d/2)).
pub fn sphere_moment<T: Scalar>(dk: DimOrder) -> ConstantValue<T> {
    let d = T::from_usize_lossy(dk.d);
    let k = T::from_usize_lossy(dk.k);
    let half = T::from_f64_lossy(0.5);
    let log = log_gamma(half * d) - k * T::from_f64_lossy(2.0).ln() - log_gamma(k + half * d);
    ConstantValue::from_log(1, log)
}

/// int_{S^{2d-1}} |zeta_j|^2 dzeta = Gamma(d) / Gamma(d+k) for any
/// distinct-index multi-index j of length k.
pub fn complex_sphere_moment<T: Scalar>(dk: DimOrder) -> ConstantValue<T> {
    let d = T::from_usize_lossy(dk.d);
    let k = T::from_usize_lossy(dk.k);
    let log = log_gamma(d) - log_gamma(d + k);
    ConstantValue::from_log(1, log)
}

/// |I| = d!/(d-k)!, exactly. Errors out instead of wrapping on overflow.
pub fn index_count(dk: DimOrder) -> Result<u128> {
    let mut acc: u128 = 1;
    for i in 0..dk.k {
        let factor = (dk.d - i) as u128;
        acc = acc
            .checked_mul(factor)
            .ok_or_else(|| Error::Overflow(format!("index_count({}, {})", dk.d, dk.k)))?;
    }
    Ok(acc)
}

/// C(d,k) = 1/a~ with a~ = (-1)^k |I| int w_1^2...w_k^2 dw.
pub fn averaging_constant<T: Scalar>(dk: DimOrder) -> Result<ConstantValue<T>> {
    let count = index_count(dk)? as f64;
    let moment = sphere_moment::<T>(dk);
    let log = -(T::from_f64_lossy(count.ln()) + moment.log_value);
    let sign = if dk.k % 2 == 0 { 1 } else { -1 };
    Ok(ConstantValue::from_log(sign, log))
}

/// Prefactor Gamma(d + k/2) / (pi Gamma(d) Gamma(k/2)) of the rotation
/// identity on S^{2d-1}.
pub fn rotation_prefactor<T: Scalar>(dk: DimOrder) -> ConstantValue<T> {
    let d = T::from_usize_lossy(dk.d);
    let k = T::from_usize_lossy(dk.k);
    let half = T::from_f64_lossy(0.5);
    let log = log_gamma(d + half * k) - T::PI().ln() - log_gamma(d) - log_gamma(half * k);
    ConstantValue::from_log(1, log)
}

/// Ratio of the rotation prefactor to d^{k/2}, exposed for asymptotic tests.
pub fn rotation_prefactor_ratio<T: Scalar>(dk: DimOrder) -> ConstantValue<T> {
    let pref = rotation_prefactor::<T>(dk);
    let d = T::from_usize_lossy(dk.d);
    let k = T::from_usize_lossy(dk.k);
    let half = T::from_f64_lossy(0.5);
    ConstantValue::from_log(pref.sign, pref.log_value - half * k * d.ln())
}

/// The Gamma-ratio bound
/// [Gamma(d+k/2)/Gamma(d+(k-1)/2)] [Gamma((d+k-1)/2)/Gamma((d+k)/2)]
/// controlling the directional domination estimate; tends to sqrt(2) as
/// d grows with k fixed.
pub fn domination_constant<T: Scalar>(dk: DimOrder) -> ConstantValue<T> {
    let d = T::from_usize_lossy(dk.d);
    let k = T::from_usize_lossy(dk.k);
    let half = T::from_f64_lossy(0.5);
    let one = T::one();
    let log = log_gamma(d + half * k) - log_gamma(d + half * (k - one))
        + log_gamma(half * (d + k - one))
        - log_gamma(half * (d + k));
    ConstantValue::from_log(1, log)
}

/// Monte Carlo estimate of the normalized sphere moment, with its standard
/// error. Deterministic for a fixed seed regardless of parallel execution.
pub fn sphere_moment_mc<T: Scalar>(dk: DimOrder, samples: usize, seed: u64) -> (T, T) {
    let chunk = 4096usize;
    let n_chunks = samples.div_ceil(chunk);
    let partials: Vec<(T, T, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = sample_rng(seed, c as u64);
            let this_chunk = chunk.min(samples - c * chunk);
            let mut vals = Vec::with_capacity(this_chunk);
            let mut sqs = Vec::with_capacity(this_chunk);
            for _ in 0..this_chunk {
                let w = sample_sphere::<T, _>(dk.d, &mut rng);
                let mut v = T::one();
                for i in 0..dk.k {
                    v = v * w[i] * w[i];
                }
                vals.push(v);
                sqs.push(v * v);
            }
            (pairwise_sum(&vals), pairwise_sum(&sqs), this_chunk)
        })
        .collect();
    let n = T::from_usize_lossy(samples);
    let sums: Vec<T> = partials.iter().map(|p| p.0).collect();
    let sumsqs: Vec<T> = partials.iter().map(|p| p.1).collect();
    let mean = pairwise_sum(&sums) / n;
    let var = (pairwise_sum(&sumsqs) / n - mean * mean).max(T::zero());
    let se = (var / n).sqrt();
    (mean, se)
}

/// Monte Carlo estimate of int_{S^{2d-1}} |zeta_1 ... zeta_k|^2 dzeta.
pub fn complex_sphere_moment_mc<T: Scalar>(dk: DimOrder, samples: usize, seed: u64) -> (T, T) {
    let chunk = 4096usize;
    let n_chunks = samples.div_ceil(chunk);
    let partials: Vec<(T, T)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = sample_rng(seed, c as u64);
            let this_chunk = chunk.min(samples - c * chunk);
            let mut vals = Vec::with_capacity(this_chunk);
            let mut sqs = Vec::with_capacity(this_chunk);
            for _ in 0..this_chunk {
                let z = crate::util::sample_complex_sphere::<T, _>(dk.d, &mut rng);
                let mut v = T::one();
                for i in 0..dk.k {
                    v = v * z[i].norm_sqr();
                }
                vals.push(v);
                sqs.push(v * v);
            }
            (pairwise_sum(&vals), pairwise_sum(&sqs))
        })
        .collect();
    let n = T::from_usize_lossy(samples);
    let sums: Vec<T> = partials.iter().map(|p| p.0).collect();
    let sumsqs: Vec<T> = partials.iter().map(|p| p.1).collect();
    let mean = pairwise_sum(&sums) / n;
    let var = (pairwise_sum(&sumsqs) / n - mean * mean).max(T::zero());
    let se = (var / n).sqrt();
    (mean, se)
}
