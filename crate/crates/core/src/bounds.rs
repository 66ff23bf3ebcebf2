//! Lower bounds on circuit fidelity when every Bell pair is depolarized with probability `p`.

use serde::Serialize;
use std::fmt::Write as _;

use crate::compiler::Variant;
use crate::error::{Error, Result};

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GadgetBounds {
    pub f_cnot: f64,
    pub f_toffoli: f64,
    pub f_state: f64,
}

/// Worst-case fidelity of one teleported gate or state: a fully depolarized pair still
/// overlaps the ideal output with weight 1/4 (gate) or 1/2 (state).
pub fn bell_fidelity_bounds(p: f64) -> Result<GadgetBounds> {
    check_prob("p", p)?;
    let gate = 1.0 - 0.75 * p;
    Ok(GadgetBounds { f_cnot: gate, f_toffoli: gate, f_state: 1.0 - 0.5 * p })
}

/// Teleported operations per QPU: one per Bell pair.
pub fn exponent(variant: Variant, n: usize) -> Result<u64> {
    let n = n as u64;
    match variant {
        Variant::Telegate => Ok(2 + 6 * n),
        Variant::Teledata => Ok(2 + 4 * n),
        Variant::Naive => Err(Error::InvalidParameter("no fidelity bound is defined for the naive scheme".into())),
    }
}

/// `(1 - 3p/4)^(per-QPU Bell pairs)`.
pub fn total_fidelity(variant: Variant, n: usize, p: f64) -> Result<f64> {
    let f = bell_fidelity_bounds(p)?.f_cnot;
    Ok(f.powf(exponent(variant, n)? as f64))
}

/// Teleported operations across the whole line of `k` QPUs: one long-range CNOT per GHZ edge
/// plus, for each of the `k - 1` CSwaps, one per Bell pair of the remote register.
pub fn network_operations(variant: Variant, n: usize, k: usize) -> Result<u64> {
    let per_cswap = match variant {
        Variant::Telegate => 3 * n as u64,
        Variant::Teledata => 2 * n as u64,
        Variant::Naive => return Err(Error::InvalidParameter("no fidelity bound is defined for the naive scheme".into())),
    };
    let edges = (k.div_ceil(2) as u64).saturating_sub(1);
    Ok(edges + (k as u64).saturating_sub(1) * per_cswap)
}

pub fn network_fidelity(variant: Variant, n: usize, k: usize, p: f64) -> Result<f64> {
    let f = bell_fidelity_bounds(p)?.f_cnot;
    Ok(f.powf(network_operations(variant, n, k)? as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KBound {
    /// Largest k whose exact product bound stays at or above `1 - epsilon`.
    pub k_max: usize,
    /// The same search with the linear bound `1 - (3p/4) * count`.
    pub k_linear: usize,
    pub diagnostic: Option<String>,
}

/// Search cap so a vanishing `p` terminates.
pub const K_CAP: usize = 1 << 20;

fn largest_k(ok: impl Fn(usize) -> bool) -> usize {
    if !ok(2) {
        return 1;
    }
    // The count grows with k, so the predicate is monotone: gallop, then bisect.
    let mut lo = 2;
    let mut hi = 4;
    while hi < K_CAP && ok(hi) {
        lo = hi;
        hi *= 2;
    }
    if hi >= K_CAP && ok(K_CAP) {
        return K_CAP;
    }
    hi = hi.min(K_CAP);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn k_max(epsilon: f64, n: usize, p: f64, variant: Variant) -> Result<KBound> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let f = bell_fidelity_bounds(p)?.f_cnot;
    network_operations(variant, n, 2)?;
    let count = |k: usize| network_operations(variant, n, k).unwrap() as f64;
    let k_max = largest_k(|k| f.powf(count(k)) >= 1.0 - epsilon);
    let k_linear = largest_k(|k| 1.0 - 0.75 * p * count(k) >= 1.0 - epsilon);
    let diagnostic = (k_max < 2).then(|| {
        format!("no k >= 2 keeps the bound at 1 - {epsilon} for n={n}, p={p}; returning 1")
    });
    Ok(KBound { k_max, k_linear, diagnostic })
}

/// Composed estimate from measured error rates: one GHZ preparation and `k - 1` CSwaps.
pub fn overall_fidelity(k: usize, p_ghz: f64, p_cswap: f64) -> Result<f64> {
    check_prob("p_ghz", p_ghz)?;
    check_prob("p_cswap", p_cswap)?;
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    Ok((1.0 - p_ghz) * (1.0 - p_cswap).powi(k as i32 - 1))
}

/// One row per grid point: `p,epsilon,scheme,n,k_max,k_linear`.
pub fn k_bound_csv(ps: &[f64], epsilons: &[f64], variants: &[Variant], ns: &[usize]) -> Result<String> {
    let mut out = String::from("p,epsilon,scheme,n,k_max,k_linear\n");
    for &p in ps {
        for &e in epsilons {
            for &v in variants {
                for &n in ns {
                    let b = k_max(e, n, p, v)?;
                    let _ = writeln!(out, "{p},{e},{v},{n},{},{}", b.k_max, b.k_linear);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gadget_bounds() {
        let b = bell_fidelity_bounds(0.1).unwrap();
        assert_abs_diff_eq!(b.f_cnot, 0.925, epsilon = 1e-12);
        assert_abs_diff_eq!(b.f_state, 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(bell_fidelity_bounds(1.0).unwrap().f_cnot, 0.25);
        assert_eq!(bell_fidelity_bounds(0.0).unwrap().f_state, 1.0);
        assert!(bell_fidelity_bounds(1.5).is_err());
    }

    #[test]
    fn totals() {
        assert_abs_diff_eq!(total_fidelity(Variant::Telegate, 1, 0.01).unwrap(), 0.9925f64.powi(8), epsilon = 1e-15);
        assert_abs_diff_eq!(total_fidelity(Variant::Telegate, 1, 0.01).unwrap(), 0.9416, epsilon = 1e-4);
        assert_eq!(total_fidelity(Variant::Teledata, 7, 0.0).unwrap(), 1.0);
        assert!(total_fidelity(Variant::Naive, 1, 0.1).is_err());
        for n in 1..20 {
            assert!(total_fidelity(Variant::Teledata, n, 0.3).unwrap() >= total_fidelity(Variant::Telegate, n, 0.3).unwrap());
        }
    }

    #[test]
    fn k_search() {
        let b = k_max(1e-3, 100, 1e-6, Variant::Telegate).unwrap();
        assert_eq!(b.k_max, 5);
        assert!(k_max(0.5, 1, 1e-6, Variant::Telegate).unwrap().k_max > 10_000);
        let b = k_max(1e-3, 100, 0.5, Variant::Telegate).unwrap();
        assert_eq!(b.k_max, 1);
        assert!(b.diagnostic.is_some());
        assert_eq!(k_max(0.5, 1, 0.0, Variant::Teledata).unwrap().k_max, K_CAP);
    }

    #[test]
    fn overall() {
        assert_eq!(overall_fidelity(8, 0.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(overall_fidelity(8, 0.02, 0.05).unwrap(), 0.98 * 0.95f64.powi(7), epsilon = 1e-12);
        assert_abs_diff_eq!(overall_fidelity(8, 0.02, 0.05).unwrap(), 0.6844, epsilon = 1e-4);
        assert!(overall_fidelity(3, -0.1, 0.0).is_err());
    }
}
