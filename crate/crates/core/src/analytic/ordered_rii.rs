//! Distribution of `p r_ii^2` at decoding layer `i` under norm ordering (and
//! the unordered chi-square case), as a signed mixture of Erlang densities.
//!
//! The nested sums over `j, l, rho_1..rho_{n-1}, r` are collapsed exactly:
//! for a fixed `rho_0` the weighted sum over weakly decreasing `rho`
//! sequences with `sum rho_t = phi` equals `[x^phi] (sum_{k<n} x^k/k!)^rho_0`
//! divided by `rho_0!`. Coefficients are kept as exact rationals and merged
//! by (shape, rate), so no cancellation happens at the coefficient level.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::specfun::{factorial, regularized_gamma_p, regularized_gamma_q};
use crate::DetectionStrategy;

/// Largest receive-antenna count the expansion is evaluated for.
pub const MAX_ANTENNAS: usize = 8;

/// One Erlang component: `w * rate^k x^{k-1} e^{-rate x} / (k-1)!`.
///
/// `weight` is the (signed) probability mass; `log_mag = ln |weight|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerTerm {
    pub sign: i8,
    pub log_mag: f64,
    pub weight: f64,
    /// Erlang shape `k = xi + 1`; the density carries `x^xi`.
    pub shape: usize,
    /// Integer rate at `p = 1` (`m + l - i + 1`).
    pub rate_int: u64,
    /// Rate in the variable `p r_ii^2`, i.e. `rate_int / p`.
    pub rate: f64,
}

#[derive(Clone, Debug)]
pub struct OrderedLayerCoefficients {
    pub i: usize,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub ordering: DetectionStrategy,
    pub terms: Vec<LayerTerm>,
    /// Number of summands in the uncollapsed expansion (every
    /// `j, l, rho, r, mu` combination of the tail).
    pub raw_term_count: u128,
    exact: Arc<ExactLayer>,
}

#[derive(Debug)]
struct ExactLayer {
    /// (shape, rate_int) -> exact weight
    terms: Vec<(usize, u64, BigRational)>,
    raw_term_count: u128,
}

type CacheKey = (usize, usize, usize, DetectionStrategy);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<ExactLayer>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<ExactLayer>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn fact(k: usize) -> BigInt {
    (1..=k as u64).fold(BigInt::one(), |a, b| a * b)
}

fn rfact(k: usize) -> BigRational {
    BigRational::from_integer(fact(k))
}

fn binom(n: usize, k: usize) -> BigRational {
    BigRational::from_integer(fact(n) / (fact(k) * fact(n - k)))
}

/// Beta function at positive integers.
fn beta_int(a: usize, b: usize) -> BigRational {
    BigRational::new(fact(a - 1) * fact(b - 1), fact(a + b - 1))
}

/// Coefficients of `(sum_{k<n} x^k/k!)^power`.
fn truncated_exp_power(n: usize, power: usize) -> Vec<BigRational> {
    let base: Vec<BigRational> = (0..n).map(|k| BigRational::new(BigInt::one(), fact(k))).collect();
    let mut out = vec![BigRational::one()];
    for _ in 0..power {
        let mut next = vec![BigRational::zero(); out.len() + n - 1];
        for (a, ca) in out.iter().enumerate() {
            for (b, cb) in base.iter().enumerate() {
                next[a + b] += ca * cb;
            }
        }
        out = next;
    }
    out
}

/// Number of weakly decreasing `(rho_1..rho_{n-1})` bounded by `rho0`, by sum.
fn lattice_counts(n: usize, rho0: usize) -> Vec<u128> {
    // counts[v][s]: sequences so far ending in value v with sum s
    let len = n - 1;
    let smax = rho0 * len;
    if len == 0 {
        return vec![1];
    }
    let mut counts = vec![vec![0u128; smax + 1]; rho0 + 1];
    for v in 0..=rho0 {
        counts[v][v] = 1;
    }
    for _ in 1..len {
        let mut next = vec![vec![0u128; smax + 1]; rho0 + 1];
        for prev in 0..=rho0 {
            for s in 0..=smax {
                let c = counts[prev][s];
                if c == 0 {
                    continue;
                }
                for v in 0..=prev {
                    if s + v <= smax {
                        next[v][s + v] += c;
                    }
                }
            }
        }
        counts = next;
    }
    let mut by_sum = vec![0u128; smax + 1];
    for row in &counts {
        for (s, &c) in row.iter().enumerate() {
            by_sum[s] += c;
        }
    }
    by_sum
}

fn build_exact(i: usize, n: usize, m: usize, ordering: DetectionStrategy) -> ExactLayer {
    let mut acc: HashMap<(usize, u64), BigRational> = HashMap::new();
    let mut raw: u128 = 0;
    match ordering {
        DetectionStrategy::Fixed => {
            acc.insert((n - i + 1, 1), BigRational::one());
            raw = (n - i + 1) as u128;
        }
        DetectionStrategy::Foschini if i == 1 => {
            let rho0 = m - 1;
            let poly = truncated_exp_power(n, rho0);
            let counts = lattice_counts(n, rho0);
            let rate = m as u64;
            let pre = rfact(m) / (rfact(n - 1) * rfact(rho0));
            for (phi, c) in poly.iter().enumerate() {
                raw += counts[phi] * (n + phi) as u128;
                if c.is_zero() {
                    continue;
                }
                let xi = n + phi - 1;
                // density coefficient of x^xi e^{-rate x} -> Erlang mass
                let w = &pre * c * rfact(xi) / int(rate).pow((xi + 1) as i32);
                *acc.entry((xi + 1, rate)).or_insert_with(BigRational::zero) += w;
            }
        }
        DetectionStrategy::Foschini => {
            let norm = beta_int(n - i + 1, i - 1) * beta_int(m - i + 1, i);
            for j in 0..=i - 2 {
                for l in 0..=i - 1 {
                    let rho0 = m + l - i;
                    let rate = (m + l - i + 1) as u64;
                    let poly = truncated_exp_power(n, rho0);
                    let counts = lattice_counts(n, rho0);
                    let sign = if (j + l) % 2 == 0 { int(1) } else { -int(1) };
                    let pre = sign * binom(i - 2, j) * binom(i - 1, l) / (rfact(n - 1) * &norm);
                    for (phi, c) in poly.iter().enumerate() {
                        let kk = i + phi - j - 2;
                        for r in 0..=kk {
                            raw += counts[phi] * (n + r + j - i + 1) as u128;
                        }
                        if c.is_zero() {
                            continue;
                        }
                        for r in 0..=kk {
                            let xi = n + r + j - i;
                            let coef = &pre * c * rfact(kk) / (rfact(r) * int(rate).pow((kk - r + 1) as i32));
                            let w = coef * rfact(xi) / int(rate).pow((xi + 1) as i32);
                            *acc.entry((xi + 1, rate)).or_insert_with(BigRational::zero) += w;
                        }
                    }
                }
            }
        }
    }
    let mut terms: Vec<(usize, u64, BigRational)> = acc
        .into_iter()
        .filter(|(_, w)| !w.is_zero())
        .map(|((k, r), w)| (k, r, w))
        .collect();
    terms.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    ExactLayer {
        terms,
        raw_term_count: raw,
    }
}

fn check_envelope(i: usize, n: usize, m: usize) -> Result<()> {
    if m < 1 || n < m || i < 1 || i > m {
        return Err(Error::InvalidInput(format!(
            "need 1 <= i <= m <= n, got i = {i}, n = {n}, m = {m}"
        )));
    }
    if n > MAX_ANTENNAS {
        return Err(Error::Unsupported(format!(
            "n = {n} exceeds the evaluation envelope n <= {MAX_ANTENNAS}"
        )));
    }
    Ok(())
}

/// Mixture coefficients of `p r_ii^2` at decoding layer `i`.
pub fn xi_coefficients(
    i: usize,
    n: usize,
    m: usize,
    p: f64,
    ordering: DetectionStrategy,
) -> Result<OrderedLayerCoefficients> {
    check_envelope(i, n, m)?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("p must be positive, got {p}")));
    }
    let exact = {
        let key = (i, n, m, ordering);
        let hit = cache().lock().expect("cache poisoned").get(&key).cloned();
        match hit {
            Some(e) => e,
            None => {
                let e = Arc::new(build_exact(i, n, m, ordering));
                cache().lock().expect("cache poisoned").insert(key, e.clone());
                e
            }
        }
    };
    let terms = exact
        .terms
        .iter()
        .map(|(k, r, w)| {
            let weight = w.to_f64().expect("finite rational");
            LayerTerm {
                sign: if w.is_negative() { -1 } else { 1 },
                log_mag: weight.abs().ln(),
                weight,
                shape: *k,
                rate_int: *r,
                rate: *r as f64 / p,
            }
        })
        .collect();
    Ok(OrderedLayerCoefficients {
        i,
        n,
        m,
        p,
        ordering,
        terms,
        raw_term_count: exact.raw_term_count,
        exact,
    })
}

impl OrderedLayerCoefficients {
    /// Exact total mass of the mixture (must be 1).
    pub fn exact_mass(&self) -> BigRational {
        self.exact
            .terms
            .iter()
            .fold(BigRational::zero(), |a, (_, _, w)| a + w)
    }

    /// `sum |w| / |sum w|`; large values flag cancellation in the tail sums.
    pub fn cancellation_ratio(&self) -> f64 {
        let abs: f64 = self.terms.iter().map(|t| t.weight.abs()).sum();
        let net: f64 = self.terms.iter().map(|t| t.weight).sum();
        abs / net.abs()
    }

    /// Exponent of the small-argument law `F(z) ~ C z^N`: `N = n - i + 1`.
    pub fn diversity(&self) -> usize {
        self.n - self.i + 1
    }

    /// `C` in `Pr[p r_ii^2 <= z] ~ C (z/p)^N` as `z -> 0`.
    pub fn leading_constant(&self) -> f64 {
        let nn = self.diversity();
        let c = self
            .exact
            .terms
            .iter()
            .filter(|(k, _, _)| *k == nn)
            .fold(BigRational::zero(), |a, (_, r, w)| a + w * int(*r).pow(nn as i32))
            / rfact(nn);
        c.to_f64().expect("finite rational")
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.terms
            .iter()
            .map(|t| {
                let k = t.shape;
                let ln = k as f64 * t.rate.ln() + (k - 1) as f64 * x.ln() - t.rate * x
                    - factorial(k - 1).ln();
                if x == 0.0 {
                    if k == 1 {
                        t.weight * t.rate
                    } else {
                        0.0
                    }
                } else {
                    t.weight * ln.exp()
                }
            })
            .sum()
    }

    /// `Pr[p r_ii^2 <= z]`, clamped to `[0, 1]`.
    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .terms
            .iter()
            .map(|t| t.weight * regularized_gamma_p(t.shape as f64, t.rate * z).expect("valid arguments"))
            .sum();
        s.clamp(0.0, 1.0)
    }
}

/// `Pr[p r_ii^2 >= z]`, clamped to `[0, 1]`.
pub fn rii_tail(coeffs: &OrderedLayerCoefficients, z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let s: f64 = coeffs
        .terms
        .iter()
        .map(|t| t.weight * regularized_gamma_q(t.shape as f64, t.rate * z).expect("valid arguments"))
        .sum();
    s.clamp(0.0, 1.0)
}
