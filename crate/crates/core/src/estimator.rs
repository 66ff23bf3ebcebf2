//! Trace estimates from shot streams, and the applications built on them.
//!
//! With a GHZ control in the standard form, the parity of all GHZ qubits measured in X has mean
//! Re Tr(W ρ₁⊗…⊗ρ_k), and swapping the first qubit's basis to Y gives Im of the same quantity.
//! `W` shifts the registers so that Tr(W ρ₁⊗…⊗ρ_k) = conj Tr(ρ₁…ρ_k), hence `IM_SIGN = -1`;
//! the k=3 chirality test in the integration suite pins this.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::circuit::Basis;
use crate::compiler::{compile, Readout, Scheme, Variant};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::sim::{run_statevector, NoiseModel, RunConfig, ShotResult, DEFAULT_QUBIT_CAP};
use crate::state::{PartySpec, PartyState};

/// Sign applied to the X-basis parity mean to get Re Tr(ρ₁…ρ_k).
pub const RE_SIGN: f64 = 1.0;
/// Sign applied to the Y-basis parity mean to get Im Tr(ρ₁…ρ_k).
pub const IM_SIGN: f64 = -1.0;

#[derive(Clone, Debug)]
pub struct EstimateConfig {
    pub scheme: Scheme,
    pub noise: NoiseModel,
    pub shots: u64,
    pub seed: u64,
    pub trajectories: Option<usize>,
    pub threads: Option<usize>,
    pub qubit_cap: usize,
    /// Also run the Y-basis circuit.
    pub imaginary: bool,
}

impl EstimateConfig {
    pub fn new(variant: Variant, shots: u64, seed: u64) -> Self {
        EstimateConfig {
            scheme: Scheme::new(variant),
            noise: NoiseModel::noiseless(),
            shots,
            seed,
            trajectories: None,
            threads: None,
            qubit_cap: DEFAULT_QUBIT_CAP,
            imaginary: true,
        }
    }

    fn run_config(&self, seed: u64) -> RunConfig {
        RunConfig {
            shots: self.shots,
            seed,
            trajectories: self.trajectories,
            qubit_cap: self.qubit_cap,
            allow_macros: !self.scheme.fanout_expansion,
            threads: self.threads,
            record: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TraceEstimate {
    pub re: f64,
    pub im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub shots_per_basis: u64,
    pub sign_calibration: [f64; 2],
    pub scheme: String,
    pub k: usize,
    pub n: usize,
    pub noise: NoiseModel,
}

/// Mean of the ±1 parity of all recorded bits, with a standard error that treats trajectories
/// as clusters (shots inside one trajectory share noise and mid-circuit outcomes).
pub fn parity_mean(r: &ShotResult) -> (f64, f64) {
    let value = |o: u64| if o.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    let sums: Vec<(f64, f64)> = r
        .trajectories
        .iter()
        .map(|t| (t.outcomes.iter().map(|&o| value(o)).sum::<f64>(), t.outcomes.len() as f64))
        .filter(|(_, m)| *m > 0.0)
        .collect();
    let n: f64 = sums.iter().map(|s| s.1).sum();
    if n == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = sums.iter().map(|s| s.0).sum::<f64>() / n;
    let t = sums.len() as f64;
    let var = if sums.len() >= 2 {
        t / (t - 1.0) * sums.iter().map(|(s, m)| (s - mean * m).powi(2)).sum::<f64>() / (n * n)
    } else {
        (1.0 - mean * mean).max(0.0) / n
    };
    (mean, var.sqrt())
}

fn run_basis(spec: &PartySpec, cfg: &EstimateConfig, readout: &Readout, seed: u64) -> Result<(f64, f64)> {
    let c = compile(spec, cfg.scheme, readout)?;
    let r = run_statevector(&c, &cfg.noise, &cfg.run_config(seed))?;
    Ok(parity_mean(&r))
}

pub fn estimate_trace(spec: &PartySpec, cfg: &EstimateConfig) -> Result<TraceEstimate> {
    spec.validate()?;
    let (re, stderr_re) = run_basis(spec, cfg, &Readout::basis(Basis::X), cfg.seed)?;
    let (im, stderr_im) = if cfg.imaginary {
        run_basis(spec, cfg, &Readout::basis(Basis::Y), cfg.seed.wrapping_add(1))?
    } else {
        (0.0, 0.0)
    };
    Ok(TraceEstimate {
        re: RE_SIGN * re,
        im: IM_SIGN * im,
        stderr_re,
        stderr_im,
        shots_per_basis: cfg.shots,
        sign_calibration: [RE_SIGN, IM_SIGN],
        scheme: cfg.scheme.variant.to_string(),
        k: spec.k,
        n: spec.n,
        noise: cfg.noise,
    })
}

fn density(s: &PartyState) -> DMatrix<Complex64> {
    let d = s.dim();
    DMatrix::from_row_slice(d, d, &s.density())
}

/// Tr(ρ₁ρ₂…ρ_k) by dense products.
pub fn oracle_trace(spec: &PartySpec) -> Result<Complex64> {
    spec.validate()?;
    if spec.n > 10 {
        return Err(Error::Capacity(format!("n={} is too large for the dense oracle", spec.n)));
    }
    let mut acc = density(&spec.states[0]);
    for s in &spec.states[1..] {
        acc *= density(s);
    }
    let t = acc.trace();
    if let Some(chain) = inner_product_chain(spec) {
        debug_assert!((chain - t).norm() < 1e-9, "oracle paths disagree: {chain} vs {t}");
    }
    Ok(t)
}

/// ⟨ψ₁|ψ₂⟩⟨ψ₂|ψ₃⟩…⟨ψ_k|ψ₁⟩ when every party is pure.
pub fn inner_product_chain(spec: &PartySpec) -> Option<Complex64> {
    if !spec.all_pure() {
        return None;
    }
    let v: Vec<&[Complex64]> = spec.states.iter().map(|s| s.member(0)).collect();
    let dot = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>();
    Some((0..v.len()).map(|i| dot(v[i], v[(i + 1) % v.len()])).product())
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Entropy {
    pub order: usize,
    pub bits: f64,
    pub stderr: f64,
    pub trace: f64,
    pub trace_stderr: f64,
}

/// S_order(ρ) in bits from `order` copies of ρ.
pub fn renyi_entropy(rho: &PartyState, n: usize, order: usize, cfg: &EstimateConfig) -> Result<Entropy> {
    if order < 2 {
        return Err(Error::InvalidParameter("Rényi order must be at least 2".into()));
    }
    let spec = PartySpec::uniform(order, n, rho.clone())?;
    let est = estimate_trace(&spec, &EstimateConfig { imaginary: false, ..cfg.clone() })?;
    if est.re <= 0.0 {
        return Err(Error::Estimation(format!(
            "estimated Tr(rho^{order}) = {} ± {} is not positive; entropy undefined",
            est.re, est.stderr_re
        )));
    }
    let scale = 1.0 / (1.0 - order as f64);
    Ok(Entropy {
        order,
        bits: scale * est.re.log2(),
        stderr: (scale * est.stderr_re / (est.re * std::f64::consts::LN_2)).abs(),
        trace: est.re,
        trace_stderr: est.stderr_re,
    })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Spectrum {
    /// Descending, clipped to [0, 1].
    pub eigenvalues: Vec<f64>,
    /// Largest |Σλ^m − p_m| over the supplied power sums.
    pub residual: f64,
    pub power_sums: Vec<f64>,
    pub warning: Option<String>,
}

/// Roots of the characteristic polynomial fixed by power sums p_1..p_M (Newton's identities).
pub fn spectrum_from_power_sums(p: &[f64]) -> Result<Spectrum> {
    let m = p.len();
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one power sum".into()));
    }
    let mut e = vec![1.0];
    for k in 1..=m {
        let s: f64 = (1..=k).map(|i| if i % 2 == 1 { 1.0 } else { -1.0 } * e[k - i] * p[i - 1]).sum();
        e.push(s / k as f64);
    }
    // x^m + a_{m-1} x^{m-1} + ... + a_0 with a_{m-j} = (-1)^j e_j
    let a: Vec<f64> = (0..m).map(|i| if (m - i) % 2 == 0 { e[m - i] } else { -e[m - i] }).collect();
    let mut comp = DMatrix::<f64>::zeros(m, m);
    for i in 1..m {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..m {
        comp[(i, m - 1)] = -a[i];
    }
    let roots = comp.complex_eigenvalues();
    let mut warning = None;
    let mut eig = Vec::new();
    for r in roots.iter() {
        if r.im.abs() > 1e-6 * r.norm().max(1.0) {
            warning = Some(format!("complex root {r}; spectrum is ill-conditioned"));
        }
        eig.push(r.re.clamp(0.0, 1.0));
    }
    eig.sort_by(|x, y| y.total_cmp(x));
    let residual = p
        .iter()
        .enumerate()
        .map(|(i, pm)| (eig.iter().map(|l| l.powi(i as i32 + 1)).sum::<f64>() - pm).abs())
        .fold(0.0, f64::max);
    if let Some(w) = &mut warning {
        w.push_str(&format!(" (residual {residual:.3e})"));
    }
    Ok(Spectrum { eigenvalues: eig, residual, power_sums: p.to_vec(), warning })
}

/// Estimates Tr(ρ^m) for m = 2..=max_order and recovers the spectrum.
pub fn entanglement_spectrum(rho: &PartyState, n: usize, max_order: usize, cfg: &EstimateConfig) -> Result<Spectrum> {
    if max_order < 1 {
        return Err(Error::InvalidParameter("max_order must be at least 1".into()));
    }
    let mut p = vec![1.0];
    for m in 2..=max_order {
        let spec = PartySpec::uniform(m, n, rho.clone())?;
        let c = EstimateConfig { imaginary: false, seed: cfg.seed.wrapping_add(m as u64 * 7919), ..cfg.clone() };
        p.push(estimate_trace(&spec, &c)?.re);
    }
    spectrum_from_power_sums(&p)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct VirtualExpectation {
    pub value: f64,
    pub stderr: f64,
    pub numerator: f64,
    pub numerator_stderr: f64,
    pub denominator: f64,
    pub denominator_stderr: f64,
}

/// Tr(Oρ^m)/Tr(ρ^m) from m copies, with O measured on the first copy during readout.
pub fn virtual_expectation(
    rho: &PartyState,
    n: usize,
    observable: &PauliString,
    copies: usize,
    cfg: &EstimateConfig,
) -> Result<VirtualExpectation> {
    if copies < 2 {
        return Err(Error::InvalidParameter("need at least 2 copies".into()));
    }
    let spec = PartySpec::uniform(copies, n, rho.clone())?;
    let num_readout = Readout { basis: Basis::X, observable: Some(observable.clone()) };
    let (a, sa) = run_basis(&spec, cfg, &num_readout, cfg.seed)?;
    let (b, sb) = run_basis(&spec, cfg, &Readout::basis(Basis::X), cfg.seed.wrapping_add(1))?;
    let (a, b) = (RE_SIGN * a, RE_SIGN * b);
    if b.abs() <= 3.0 * sb {
        return Err(Error::Estimation(format!("denominator {b} ± {sb} is indistinguishable from zero")));
    }
    // Delta method; the two runs are independent.
    let stderr = ((sa / b).powi(2) + (a * sb / (b * b)).powi(2)).sqrt();
    Ok(VirtualExpectation { value: a / b, stderr, numerator: a, numerator_stderr: sa, denominator: b, denominator_stderr: sb })
}

/// Exact Tr(Oρ^m)/Tr(ρ^m) for checking `virtual_expectation`.
pub fn virtual_oracle(rho: &PartyState, observable: &PauliString, copies: usize) -> Complex64 {
    let r = density(rho);
    let mut p = r.clone();
    for _ in 1..copies {
        p *= &r;
    }
    let o = pauli_matrix(observable);
    (o * &p).trace() / p.trace()
}

/// Dense matrix of a Pauli string; letter j acts on qubit j (bit j of the index).
pub fn pauli_matrix(p: &PauliString) -> DMatrix<Complex64> {
    let d = 1usize << p.len();
    let mut m = DMatrix::zeros(d, d);
    for col in 0..d {
        let mut row = col;
        let mut phase = Complex64::new(1.0, 0.0);
        for (j, l) in p.0.iter().enumerate() {
            let b = (col >> j) & 1;
            let (x, z) = l.bits();
            if x {
                row ^= 1 << j;
            }
            if z && b == 1 {
                phase = -phase;
            }
            if x && z {
                // Y = iXZ
                phase *= Complex64::new(0.0, 1.0);
            }
        }
        m[(row, col)] = phase;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn newton_girard_exact() {
        let s = spectrum_from_power_sums(&[1.0, 0.625]).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 0.75, epsilon = 1e-9);
        assert_relative_eq!(s.eigenvalues[1], 0.25, epsilon = 1e-9);
        assert!(s.warning.is_none());
        let s = spectrum_from_power_sums(&[1.0]).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn complex_roots_warn() {
        // p2 < 1/2 has no real two-level spectrum
        let s = spectrum_from_power_sums(&[1.0, 0.3]).unwrap();
        assert!(s.warning.is_some());
    }

    #[test]
    fn pauli_matrices() {
        let y = pauli_matrix(&"Y".parse().unwrap());
        assert_eq!(y[(1, 0)], Complex64::new(0.0, 1.0));
        assert_eq!(y[(0, 1)], Complex64::new(0.0, -1.0));
        let zi = pauli_matrix(&"ZI".parse().unwrap());
        assert_eq!(zi[(1, 1)], Complex64::new(-1.0, 0.0));
        assert_eq!(zi[(2, 2)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn maximally_mixed_oracle() {
        for k in 2..6 {
            let spec = PartySpec::uniform(k, 1, PartyState::diagonal(&[0.5, 0.5])).unwrap();
            assert_relative_eq!(oracle_trace(&spec).unwrap().re, 2f64.powi(1 - k as i32), epsilon = 1e-12);
        }
    }
}
