//! Unbiased mutation operators.
//!
//! An unbiased operator is characterised by its distribution over the number
//! of flipped bits: draw a count `k`, then flip a uniformly random `k`-subset
//! of positions. Standard bit mutation with rate `c/n` is the special case
//! where `k ~ Binomial(n, c/n)`, which is the same law as flipping every bit
//! independently with probability `c/n`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::bitstring::BitVector;
use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MutationSpec {
    /// `p[i]` is the probability of flipping exactly `i` bits.
    ExplicitFlipDistribution { p: Vec<f64> },
    /// Flip each bit independently with probability `c / n`.
    StandardBitMutation { c: f64 },
}

/// Probabilities of flipping zero, one and two bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipProbabilities {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

impl FlipProbabilities {
    pub fn new(p0: f64, p1: f64, p2: f64) -> Result<Self> {
        let all = [p0, p1, p2];
        if all.iter().any(|p| !p.is_finite() || *p < 0.0) || p0 + p1 + p2 > 1.0 + SUM_TOLERANCE {
            return Err(Error::InvalidMutation(format!(
                "flip probabilities ({p0}, {p1}, {p2}) must be non-negative with sum at most 1"
            )));
        }
        Ok(Self { p0, p1, p2 })
    }

    /// Large-`n` limit of standard bit mutation at rate `c/n`:
    /// `p0 = e^-c`, `p1 = c e^-c`, `p2 = c^2 e^-c / 2`.
    pub fn from_rate(c: f64) -> Self {
        let e = (-c).exp();
        Self {
            p0: e,
            p1: c * e,
            p2: c * c * e / 2.0,
        }
    }
}

impl MutationSpec {
    pub fn standard(c: f64) -> Self {
        Self::StandardBitMutation { c }
    }

    pub fn flips(p: Vec<f64>) -> Self {
        Self::ExplicitFlipDistribution { p }
    }

    /// Checks the operator against problem size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::ExplicitFlipDistribution { p } => {
                if p.is_empty() {
                    return Err(Error::InvalidMutation("empty flip distribution".into()));
                }
                if p.len() - 1 > n {
                    return Err(Error::InvalidMutation(format!(
                        "flip distribution supports up to {} flips but n = {n}",
                        p.len() - 1
                    )));
                }
                if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidMutation(
                        "flip probabilities must be finite and non-negative".into(),
                    ));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > SUM_TOLERANCE {
                    return Err(Error::InvalidMutation(format!(
                        "flip probabilities sum to {sum}, expected 1"
                    )));
                }
            }
            Self::StandardBitMutation { c } => {
                if !c.is_finite() || *c <= 0.0 || *c > n as f64 {
                    return Err(Error::InvalidMutation(format!(
                        "mutation rate c = {c} must satisfy 0 < c <= n = {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact probabilities of flipping 0, 1 and 2 bits at problem size `n`.
    pub fn flip_probabilities(&self, n: usize) -> FlipProbabilities {
        match self {
            Self::ExplicitFlipDistribution { p } => FlipProbabilities {
                p0: p.first().copied().unwrap_or(0.0),
                p1: p.get(1).copied().unwrap_or(0.0),
                p2: p.get(2).copied().unwrap_or(0.0),
            },
            Self::StandardBitMutation { c } => {
                let nf = n as f64;
                let q = c / nf;
                let stay = 1.0 - q;
                let pow = |k: usize| {
                    if n >= k {
                        stay.powi((n - k) as i32)
                    } else {
                        0.0
                    }
                };
                FlipProbabilities {
                    p0: pow(0),
                    p1: nf * q * pow(1),
                    p2: nf * (nf - 1.0) / 2.0 * q * q * pow(2),
                }
            }
        }
    }

    /// Short human-readable tag used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::StandardBitMutation { c } => format!("sbm(c={c})"),
            Self::ExplicitFlipDistribution { p } => {
                let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                format!("flips({})", parts.join(";"))
            }
        }
    }

    fn sample_flip_count<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> usize {
        match self {
            Self::ExplicitFlipDistribution { p } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (k, &pk) in p.iter().enumerate() {
                    acc += pk;
                    if u < acc {
                        return k;
                    }
                }
                // u landed in the rounding gap above the last partial sum
                p.iter().rposition(|&x| x > 0.0).unwrap_or(0)
            }
            Self::StandardBitMutation { c } => {
                let q = (c / n as f64).min(1.0);
                Binomial::new(n as u64, q)
                    .expect("rate validated")
                    .sample(rng) as usize
            }
        }
    }
}

/// Returns a mutated copy of `x`. The operator must already be validated for
/// `x.len()`.
pub fn mutate<R: Rng + ?Sized>(x: &BitVector, spec: &MutationSpec, rng: &mut R) -> BitVector {
    let n = x.len();
    let k = spec.sample_flip_count(n, rng).min(n);
    let mut y = x.clone();
    if k == 0 {
        return y;
    }
    for i in rand::seq::index::sample(rng, n, k) {
        y.flip(i);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    #[test]
    fn validation() {
        assert!(MutationSpec::flips(vec![0.5, 0.5]).validate(1).is_ok());
        assert!(MutationSpec::flips(vec![0.5, 0.4]).validate(1).is_err());
        assert!(MutationSpec::flips(vec![0.5, 0.0, 0.5])
            .validate(1)
            .is_err());
        assert!(MutationSpec::flips(vec![1.5, -0.5]).validate(4).is_err());
        assert!(MutationSpec::flips(vec![]).validate(4).is_err());
        assert!(MutationSpec::standard(1.0).validate(100).is_ok());
        assert!(MutationSpec::standard(0.0).validate(100).is_err());
        assert!(MutationSpec::standard(101.0).validate(100).is_err());
        assert!(MutationSpec::standard(f64::NAN).validate(100).is_err());
    }

    #[test]
    fn zero_flip_mass_is_identity() {
        let mut rng = seeded_rng(1);
        let x = BitVector::random(77, &mut rng);
        let spec = MutationSpec::flips(vec![1.0]);
        for _ in 0..100 {
            assert_eq!(mutate(&x, &spec, &mut rng), x);
        }
    }

    #[test]
    fn single_flip_hits_each_position_uniformly() {
        let mut rng = seeded_rng(2);
        let x = BitVector::zeros(4);
        let spec = MutationSpec::flips(vec![0.0, 1.0]);
        let trials = 400_000usize;
        let mut hits = [0usize; 4];
        for _ in 0..trials {
            let y = mutate(&x, &spec, &mut rng);
            assert_eq!(y.hamming(&x).unwrap(), 1);
            hits[(0..4).find(|&i| y.get(i)).unwrap()] += 1;
        }
        let sigma = (trials as f64 * 0.25 * 0.75).sqrt();
        for h in hits {
            assert!(
                (h as f64 - trials as f64 / 4.0).abs() < 4.0 * sigma,
                "{hits:?}"
            );
        }
    }

    #[test]
    fn standard_bit_mutation_zero_flip_rate() {
        let mut rng = seeded_rng(3);
        let n = 100;
        let x = BitVector::zeros(n);
        let spec = MutationSpec::standard(1.0);
        let trials = 200_000usize;
        let mut zero = 0usize;
        let mut total_flips = 0usize;
        for _ in 0..trials {
            let k = mutate(&x, &spec, &mut rng).count_ones();
            zero += (k == 0) as usize;
            total_flips += k;
        }
        let exact = 0.99f64.powi(100);
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        let freq = zero as f64 / trials as f64;
        assert!((freq - exact).abs() < 4.0 * sigma);
        assert!((freq - (-1.0f64).exp()).abs() < 0.01);
        let mean = total_flips as f64 / trials as f64;
        assert!((mean - 1.0).abs() < 4.0 * (0.99 / trials as f64).sqrt());
    }

    #[test]
    fn exact_flip_probabilities() {
        let p = MutationSpec::standard(1.0).flip_probabilities(100);
        assert!((p.p0 - 0.99f64.powi(100)).abs() < 1e-15);
        assert!((p.p1 - 0.99f64.powi(99)).abs() < 1e-15);
        assert!((p.p2 - 4950.0 * 1e-4 * 0.99f64.powi(98)).abs() < 1e-15);
        let lim = FlipProbabilities::from_rate(1.0);
        assert!((lim.p0 - (-1.0f64).exp()).abs() < 1e-15);
        assert!((lim.p2 - lim.p0 / 2.0).abs() < 1e-15);
        let e = MutationSpec::flips(vec![0.1, 0.9]).flip_probabilities(10);
        assert_eq!((e.p0, e.p1, e.p2), (0.1, 0.9, 0.0));
    }

    #[test]
    fn flip_probabilities_validation() {
        assert!(FlipProbabilities::new(0.2, 0.3, 0.5).is_ok());
        assert!(FlipProbabilities::new(0.2, 0.3, 0.6).is_err());
        assert!(FlipProbabilities::new(-0.1, 0.3, 0.5).is_err());
    }
}
