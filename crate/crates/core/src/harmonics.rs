//! Solid spherical harmonics stored as exact rational-coefficient
//! polynomials, the distinct-index monomials among them, and the Riesz
//! multiplier symbol m_P.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Multi-index j = (j_1, ..., j_k) with entries in [1, d], pairwise distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndex {
    dim: usize,
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(dim: usize, entries: Vec<usize>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("multi-index must be nonempty".into()));
        }
        for &e in &entries {
            if e == 0 || e > dim {
                return Err(Error::Domain(format!(
                    "multi-index entry {e} outside [1, {dim}]"
                )));
            }
        }
        for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                if entries[i] == entries[j] {
                    return Err(Error::Domain(format!(
                        "multi-index entries must be pairwise distinct, found {} twice",
                        entries[i]
                    )));
                }
            }
        }
        Ok(MultiIndex { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.entries.len()
    }

    /// 1-based entries.
    pub fn entries(&self) -> &[usize] {
        &self.entries
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// All |I| = d!/(d-k)! distinct-index multi-indices in lexicographic order.
/// Empty when k > d.
pub fn enumerate_distinct(d: usize, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    if k == 0 || k > d {
        return out;
    }
    let mut current: Vec<usize> = Vec::with_capacity(k);
    fn rec(d: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if current.len() == k {
            out.push(MultiIndex {
                dim: d,
                entries: current.clone(),
            });
            return;
        }
        for e in 1..=d {
            if !current.contains(&e) {
                current.push(e);
                rec(d, k, current, out);
                current.pop();
            }
        }
    }
    rec(d, k, &mut current, &mut out);
    out
}

/// Plain multivariate polynomial with exact rational coefficients, keyed by
/// exponent vectors. Used for Laplacian results which need not be
/// homogeneous or harmonic.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.terms.iter()
    }

    fn insert(&mut self, expo: Vec<u32>, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(expo).or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            let key: Vec<Vec<u32>> = self
                .terms
                .iter()
                .filter(|(_, c)| c.is_zero())
                .map(|(e, _)| e.clone())
                .collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn evaluate<T: Scalar>(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "polynomial in {} variables evaluated at a {}-vector",
                self.dim,
                x.len()
            )));
        }
        let mut acc = T::zero();
        for (expo, coeff) in &self.terms {
            let mut term = T::from_f64_lossy(rational_to_f64(coeff));
            for (xi, &e) in x.iter().zip(expo.iter()) {
                term = term * xi.powi(e as i32);
            }
            acc = acc + term;
        }
        Ok(acc)
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A homogeneous harmonic polynomial of degree k on R^d.
///
/// Coefficients are exact rationals so that the harmonicity test (the
/// polynomial Laplacian vanishing identically) is exact, not approximate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolidHarmonic {
    dim: usize,
    degree: usize,
    poly: Polynomial,
}

impl SolidHarmonic {
    /// Build from raw terms, validating homogeneity and harmonicity.
    /// Rejection of non-harmonic input is an error, not a warning.
    pub fn from_terms(
        dim: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, BigRational)>,
    ) -> Result<Self> {
        let mut poly = Polynomial::zero(dim);
        let mut degree: Option<usize> = None;
        for (expo, coeff) in terms {
            if expo.len() != dim {
                return Err(Error::Dimension(format!(
                    "exponent tuple of length {} in dimension {dim}",
                    expo.len()
                )));
            }
            let total: u32 = expo.iter().sum();
            match degree {
                None => degree = Some(total as usize),
                Some(k) if k != total as usize => {
                    return Err(Error::Domain(format!(
                        "inhomogeneous terms: degrees {k} and {total} mixed"
                    )));
                }
                _ => {}
            }
            poly.insert(expo, coeff);
        }
        let degree = degree.ok_or_else(|| Error::Domain("polynomial with no terms".into()))?;
        if degree == 0 {
            return Err(Error::Domain(
                "degree-0 polynomial is not a valid Riesz symbol".into(),
            ));
        }
        if poly.is_zero() {
            return Err(Error::Domain("zero polynomial".into()));
        }
        let harmonic = SolidHarmonic { dim, degree, poly };
        let lap = harmonic.laplacian();
        if !lap.is_zero() {
            return Err(Error::Domain(
                "polynomial is not harmonic: its Laplacian does not vanish".into(),
            ));
        }
        Ok(harmonic)
    }

    /// The distinct-index monomial P_j(x) = x_{j_1} ... x_{j_k}; harmonic
    /// because no variable appears to a power above one.
    pub fn monomial(j: &MultiIndex) -> Self {
        let mut expo = vec![0u32; j.dim];
        for &e in &j.entries {
            expo[e - 1] += 1;
        }
        let mut poly = Polynomial::zero(j.dim);
        poly.insert(expo, BigRational::from_integer(BigInt::from(1)));
        SolidHarmonic {
            dim: j.dim,
            degree: j.entries.len(),
            poly,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.poly.terms()
    }

    /// Coefficients lowered to the scalar type, for hot sampling loops.
    pub fn compiled_terms<T: Scalar>(&self) -> Vec<(T, Vec<u32>)> {
        self.poly
            .terms()
            .map(|(e, c)| (T::from_f64_lossy(rational_to_f64(c)), e.clone()))
            .collect()
    }

    pub fn evaluate<T: Scalar>(&self, x: &[T]) -> Result<T> {
        self.poly.evaluate(x)
    }

    /// Evaluation with complex arguments (polynomial in z_i = x_i + i y_i).
    pub fn evaluate_complex<T: Scalar>(&self, z: &[Complex<T>]) -> Result<Complex<T>> {
        if z.len() != self.dim {
            return Err(Error::Dimension(format!(
                "polynomial in {} variables evaluated at a {}-vector",
                self.dim,
                z.len()
            )));
        }
        let mut acc = Complex::new(T::zero(), T::zero());
        for (expo, coeff) in self.poly.terms() {
            let mut term = Complex::new(T::from_f64_lossy(rational_to_f64(coeff)), T::zero());
            for (zi, &e) in z.iter().zip(expo.iter()) {
                for _ in 0..e {
                    term = term * *zi;
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Exact polynomial Laplacian on the coefficient representation.
    pub fn laplacian(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (expo, coeff) in self.poly.terms() {
            for i in 0..self.dim {
                let e = expo[i];
                if e >= 2 {
                    let mut de = expo.clone();
                    de[i] -= 2;
                    let factor = BigRational::from_integer(BigInt::from(e as i64 * (e as i64 - 1)));
                    out.insert(de, coeff * factor);
                }
            }
        }
        out
    }

    /// Riesz multiplier symbol m_P(xi) = (-i)^k P(xi/|xi|), with the
    /// convention m_P(0) = 0.
    pub fn multiplier_value<T: Scalar>(&self, xi: &[T]) -> Result<Complex<T>> {
        if xi.len() != self.dim {
            return Err(Error::Dimension(format!(
                "multiplier in dimension {} evaluated at a {}-vector",
                self.dim,
                xi.len()
            )));
        }
        let norm2: T = xi.iter().map(|&v| v * v).sum();
        if norm2 == T::zero() {
            return Ok(Complex::new(T::zero(), T::zero()));
        }
        let norm = norm2.sqrt();
        let unit: Vec<T> = xi.iter().map(|&v| v / norm).collect();
        let p = self.evaluate(&unit)?;
        Ok(neg_i_pow::<T>(self.degree) * p)
    }
}

/// (-i)^k as a complex scalar.
pub fn neg_i_pow<T: Scalar>(k: usize) -> Complex<T> {
    let one = T::one();
    let zero = T::zero();
    match k % 4 {
        0 => Complex::new(one, zero),
        1 => Complex::new(zero, -one),
        2 => Complex::new(-one, zero),
        _ => Complex::new(zero, one),
    }
}

// Display writes the text interchange format: one `coeff e1 e2 ... ed` line
// per term.
impl fmt::Display for SolidHarmonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (expo, coeff) in self.poly.terms() {
            write!(f, "{coeff}")?;
            for e in expo {
                write!(f, " {e}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Parse a rational coefficient: integer, `a/b` fraction, or decimal.
/// Decimals are read exactly (e.g. "1.5" becomes 3/2).
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty coefficient".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int_digits = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            "0".to_string()
        } else {
            int_part.to_string()
        };
        let i: BigInt = int_digits
            .parse()
            .map_err(|_| Error::Parse(format!("bad integer part in {s:?}")))?;
        if frac_part.is_empty() {
            return Ok(BigRational::from_integer(i));
        }
        let f: BigInt = frac_part
            .parse()
            .map_err(|_| Error::Parse(format!("bad fractional part in {s:?}")))?;
        if f.is_negative() {
            return Err(Error::Parse(format!("malformed decimal {s:?}")));
        }
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac = BigRational::new(f, scale);
        let whole = BigRational::from_integer(i);
        Ok(if negative { whole - frac } else { whole + frac })
    } else {
        let i: BigInt = s
            .parse()
            .map_err(|_| Error::Parse(format!("bad coefficient {s:?}")))?;
        Ok(BigRational::from_integer(i))
    }
}

/// Parse the text interchange format: one term per line,
/// `coeff e1 e2 ... ed`. Blank lines and `#` comments are skipped.
/// The dimension is inferred from the number of exponent columns.
pub fn parse_harmonic(text: &str) -> Result<SolidHarmonic> {
    let mut terms: Vec<(Vec<u32>, BigRational)> = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let coeff = parse_rational(
            parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing coefficient", lineno + 1)))?,
        )?;
        let expo: Vec<u32> = parts
            .map(|p| {
                p.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("line {}: bad exponent {p:?}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if expo.is_empty() {
            return Err(Error::Parse(format!(
                "line {}: term needs at least one exponent",
                lineno + 1
            )));
        }
        match dim {
            None => dim = Some(expo.len()),
            Some(d) if d != expo.len() => {
                return Err(Error::Parse(format!(
                    "line {}: inconsistent dimension {} (expected {d})",
                    lineno + 1,
                    expo.len()
                )));
            }
            _ => {}
        }
        terms.push((expo, coeff));
    }
    let dim = dim.ok_or_else(|| Error::Parse("no terms found".into()))?;
    SolidHarmonic::from_terms(dim, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::sample_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn mi(d: usize, entries: &[usize]) -> MultiIndex {
        MultiIndex::new(d, entries.to_vec()).unwrap()
    }

    #[test]
    fn monomial_examples() {
        let p = SolidHarmonic::monomial(&mi(2, &[1]));
        assert_eq!(p.degree(), 1);
        assert!((p.evaluate(&[3.0_f64, 5.0]).unwrap() - 3.0).abs() < 1e-15);

        let p = SolidHarmonic::monomial(&mi(3, &[1, 2]));
        assert!((p.evaluate(&[2.0_f64, 3.0, 7.0]).unwrap() - 6.0).abs() < 1e-15);

        assert!(MultiIndex::new(2, vec![1, 1]).is_err());
        assert!(MultiIndex::new(2, vec![0]).is_err());
        assert!(MultiIndex::new(2, vec![3]).is_err());
    }

    #[test]
    fn evaluate_at_origin_and_dimension_mismatch() {
        let p = SolidHarmonic::monomial(&mi(2, &[1]));
        assert_eq!(p.evaluate(&[0.0_f64, 0.0]).unwrap(), 0.0);
        assert!(p.evaluate(&[1.0_f64]).is_err());
    }

    #[test]
    fn laplacian_of_monomials_is_exactly_zero() {
        for d in 1..=5 {
            for k in 1..=d.min(3) {
                for j in enumerate_distinct(d, k) {
                    let p = SolidHarmonic::monomial(&j);
                    assert!(p.laplacian().is_zero(), "monomial {j} not harmonic");
                }
            }
        }
    }

    #[test]
    fn classical_harmonic_accepted_and_square_rejected() {
        // x1^2 - x2^2 is harmonic
        let p = SolidHarmonic::from_terms(
            2,
            vec![
                (vec![2, 0], parse_rational("1").unwrap()),
                (vec![0, 2], parse_rational("-1").unwrap()),
            ],
        );
        assert!(p.is_ok());
        assert!(p.unwrap().laplacian().is_zero());

        // x1^2 alone has Laplacian 2, rejected
        let bad = SolidHarmonic::from_terms(2, vec![(vec![2, 0], parse_rational("1").unwrap())]);
        assert!(bad.is_err());
    }

    #[test]
    fn multiplier_examples() {
        // P = x1 in d=2 at xi = (3,4): (-i) * 3/5
        let p = SolidHarmonic::monomial(&mi(2, &[1]));
        let m = p.multiplier_value(&[3.0_f64, 4.0]).unwrap();
        assert!((m.re - 0.0).abs() < 1e-15);
        assert!((m.im + 0.6).abs() < 1e-15);

        // P = x1 x2 at xi = (1,1): (-i)^2 * 1/2 = -1/2
        let p = SolidHarmonic::monomial(&mi(2, &[1, 2]));
        let m = p.multiplier_value(&[1.0_f64, 1.0]).unwrap();
        assert!((m.re + 0.5).abs() < 1e-15);
        assert!(m.im.abs() < 1e-15);

        // xi = 0 convention
        let m = p.multiplier_value(&[0.0_f64, 0.0]).unwrap();
        assert_eq!((m.re, m.im), (0.0, 0.0));
    }

    #[test]
    fn multiplier_degree_zero_homogeneity_and_conjugate_symmetry() {
        let p = SolidHarmonic::monomial(&mi(3, &[1, 3]));
        let mut rng = sample_rng(21, 0);
        for _ in 0..200 {
            let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if xi.iter().map(|v| v * v).sum::<f64>() < 1e-6 {
                continue;
            }
            let lambda: f64 = rng.gen_range(0.1..10.0);
            let scaled: Vec<f64> = xi.iter().map(|v| v * lambda).collect();
            let m1 = p.multiplier_value(&xi).unwrap();
            let m2 = p.multiplier_value(&scaled).unwrap();
            assert!((m1 - m2).norm() < 1e-12);

            let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
            let mn = p.multiplier_value(&neg).unwrap();
            assert!((mn - m1.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn multiplier_bounded_by_sphere_sup() {
        let p = SolidHarmonic::from_terms(
            3,
            vec![
                (vec![2, 0, 0], parse_rational("1").unwrap()),
                (vec![0, 2, 0], parse_rational("-1").unwrap()),
            ],
        )
        .unwrap();
        let mut rng = sample_rng(22, 0);
        let mut sup = 0.0_f64;
        for _ in 0..100_000 {
            let w = crate::util::sample_sphere::<f64, _>(3, &mut rng);
            sup = sup.max(p.evaluate(&w).unwrap().abs());
        }
        let mut rng = sample_rng(23, 0);
        for _ in 0..500 {
            let xi: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let m = p.multiplier_value(&xi).unwrap().norm();
            assert!(m <= sup + 1e-9);
        }
    }

    #[test]
    fn enumerate_distinct_examples() {
        let i21 = enumerate_distinct(2, 1);
        assert_eq!(i21.len(), 2);
        assert_eq!(i21[0].entries(), &[1]);
        assert_eq!(i21[1].entries(), &[2]);

        assert_eq!(enumerate_distinct(3, 2).len(), 6);

        let i22 = enumerate_distinct(2, 2);
        assert_eq!(i22.len(), 2);
        assert_eq!(i22[0].entries(), &[1, 2]);
        assert_eq!(i22[1].entries(), &[2, 1]);

        assert!(enumerate_distinct(2, 3).is_empty());
    }

    #[test]
    fn text_format_round_trip() {
        let p = SolidHarmonic::from_terms(
            2,
            vec![
                (vec![2, 0], parse_rational("0.5").unwrap()),
                (vec![0, 2], parse_rational("-1/2").unwrap()),
            ],
        )
        .unwrap();
        let text = p.to_string();
        let q = parse_harmonic(&text).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn parse_rejects_garbage_and_nonharmonic() {
        assert!(parse_harmonic("").is_err());
        assert!(parse_harmonic("1 2 x").is_err());
        assert!(parse_harmonic("1 2 0\n1 0 1").is_err()); // inhomogeneous
        assert!(parse_harmonic("1 2 0").is_err()); // x1^2, not harmonic
        assert!(parse_harmonic("1 1 0\n# comment\n\n2 0 1").is_ok());
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3").unwrap(), parse_rational("3.0").unwrap());
        assert_eq!(
            parse_rational("1.5").unwrap(),
            parse_rational("3/2").unwrap()
        );
        assert_eq!(
            parse_rational("-0.25").unwrap(),
            parse_rational("-1/4").unwrap()
        );
        assert!(parse_rational("1/0").is_err());
    }

    proptest! {
        #[test]
        fn evaluate_is_homogeneous(
            lambda in 0.1_f64..5.0,
            coords in proptest::collection::vec(-2.0_f64..2.0, 3),
            seed in 0_u64..50
        ) {
            // random harmonic: rational combination of distinct monomials
            let mut rng = sample_rng(seed, 0);
            let js = enumerate_distinct(3, 2);
            let mut terms = Vec::new();
            for j in &js {
                let c: i64 = rng.gen_range(-4..=4);
                if c != 0 {
                    let mono = SolidHarmonic::monomial(j);
                    let (expo, _) = mono.terms().next().map(|(e, c)| (e.clone(), c.clone())).unwrap();
                    terms.push((expo, BigRational::from_integer(BigInt::from(c))));
                }
            }
            prop_assume!(!terms.is_empty());
            let p = match SolidHarmonic::from_terms(3, terms) {
                Ok(p) => p,
                Err(_) => return Ok(()), // terms may cancel to the zero polynomial
            };
            let k = p.degree() as i32;
            let scaled: Vec<f64> = coords.iter().map(|v| v * lambda).collect();
            let lhs = p.evaluate(&scaled).unwrap();
            let rhs = lambda.powi(k) * p.evaluate(&coords).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }

        #[test]
        fn complex_evaluation_extends_real(coords in proptest::collection::vec(-2.0_f64..2.0, 2)) {
            let p = SolidHarmonic::monomial(&mi(2, &[1, 2]));
            let z: Vec<Complex<f64>> = coords.iter().map(|&x| Complex::new(x, 0.0)).collect();
            let real = p.evaluate(&coords).unwrap();
            let complex = p.evaluate_complex(&z).unwrap();
            prop_assert!((complex.re - real).abs() < 1e-12);
            prop_assert!(complex.im.abs() < 1e-12);
        }
    }
}
