use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// Stochastic Pauli noise. Depolarizing channels insert a uniformly random non-identity Pauli.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseModel {
    /// After each single-qubit gate.
    pub p1: f64,
    /// After each two-qubit gate (and, over three qubits, each Toffoli).
    pub p2: f64,
    /// Flip of the recorded bit.
    pub p_meas: f64,
    /// The second half of a Bell pair is fully depolarized with this probability.
    pub p_bell: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel::default()
    }

    /// Single-parameter model: p/10 on one-qubit gates, p on two-qubit gates and measurements.
    pub fn from_p(p: f64) -> Self {
        NoiseModel { p1: p / 10.0, p2: p, p_meas: p, p_bell: 0.0 }
    }

    pub fn with_bell(mut self, p_bell: f64) -> Self {
        self.p_bell = p_bell;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p1", self.p1), ("p2", self.p2), ("p_meas", self.p_meas), ("p_bell", self.p_bell)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name}={v} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p_meas == 0.0 && self.p_bell == 0.0
    }
}

/// With probability `p`, a uniformly random non-identity Pauli on `width` qubits.
pub(crate) fn depolarize<R: Rng>(rng: &mut R, p: f64, width: usize) -> Option<Vec<Pauli>> {
    if p <= 0.0 || rng.gen::<f64>() >= p {
        return None;
    }
    let code = rng.gen_range(1..(1usize << (2 * width)));
    Some(paulis(code, width))
}

/// A uniformly random Pauli on one qubit, identity included.
pub(crate) fn any_pauli<R: Rng>(rng: &mut R) -> Pauli {
    paulis(rng.gen_range(0..4), 1)[0]
}

fn paulis(code: usize, width: usize) -> Vec<Pauli> {
    (0..width)
        .map(|i| match (code >> (2 * i)) & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn depolarizing_never_returns_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let e = depolarize(&mut rng, 1.0, 2).unwrap();
            assert!(e.iter().any(|p| *p != Pauli::I));
        }
        assert!(depolarize(&mut rng, 0.0, 2).is_none());
    }

    #[test]
    fn from_p_convention() {
        let n = NoiseModel::from_p(0.01);
        assert!((n.p1 - 0.001).abs() < 1e-15);
        assert_eq!(n.p2, 0.01);
        assert_eq!(n.p_meas, 0.01);
        assert!(NoiseModel { p1: 1.5, ..n }.validate().is_err());
    }
}
