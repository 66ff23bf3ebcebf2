mod common;

use common::*;
use disttrace::compiler::Variant;
use disttrace::estimator::*;
use disttrace::sim::NoiseModel;
use disttrace::state::{PartySpec, PartyState};
use num_complex::Complex64 as C;

fn ket(v: &[(f64, f64)]) -> PartyState {
    let raw: Vec<C> = v.iter().map(|&(r, i)| C::new(r, i)).collect();
    let n = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    PartyState::Pure(raw.into_iter().map(|a| a / n).collect())
}

fn within(est: f64, se: f64, want: f64, sigmas: f64) -> bool {
    (est - want).abs() <= sigmas * se.max(1e-9)
}

#[test]
fn calibration_on_zero_states() {
    for v in [Variant::Telegate, Variant::Teledata, Variant::Naive] {
        let spec = PartySpec::uniform(3, 1, PartyState::zero(1)).unwrap();
        let e = estimate_trace(&spec, &EstimateConfig::new(v, 2000, 1)).unwrap();
        assert_eq!(e.re, 1.0, "{v}");
        assert!(within(e.im, e.stderr_im, 0.0, 5.0), "{v}: im {}", e.im);
    }
}

#[test]
fn chiral_triple_fixes_the_imaginary_sign() {
    // |0>, |+>, |+i> give Tr = (1 + i)/4.
    let spec = PartySpec::new(3, 1, vec![ket(&[(1.0, 0.0), (0.0, 0.0)]), ket(&[(1.0, 0.0), (1.0, 0.0)]), ket(&[(1.0, 0.0), (0.0, 1.0)])])
        .unwrap();
    let o = oracle_trace(&spec).unwrap();
    assert!((o - C::new(0.25, 0.25)).norm() < 1e-12);
    for v in [Variant::Telegate, Variant::Teledata, Variant::Naive] {
        let e = estimate_trace(&spec, &EstimateConfig::new(v, 40_000, 3)).unwrap();
        assert!(within(e.re, e.stderr_re, o.re, 5.0), "{v}: re {} ± {}", e.re, e.stderr_re);
        assert!(within(e.im, e.stderr_im, o.im, 5.0), "{v}: im {} ± {}", e.im, e.stderr_im);
    }
}

#[test]
fn random_specs_match_the_oracle() {
    let mut r = rng(21);
    let mut fails = 0;
    for i in 0..8 {
        let k = 2 + i % 3;
        let n = 1 + i % 2;
        let spec = random_spec(k, n, &mut r);
        let o = oracle_trace(&spec).unwrap();
        for v in [Variant::Telegate, Variant::Teledata] {
            let mut cfg = EstimateConfig::new(v, 20_000, 100 + i as u64);
            cfg.trajectories = Some(128);
            let e = estimate_trace(&spec, &cfg).unwrap();
            if !(within(e.re, e.stderr_re, o.re, 5.0) && within(e.im, e.stderr_im, o.im, 5.0)) {
                fails += 1;
            }
        }
    }
    assert!(fails <= 1, "{fails} of 16 estimates off by more than 5 sigma");
}

#[test]
fn naive_scheme_matches_the_oracle() {
    let mut r = rng(5);
    let spec = PartySpec::new(3, 2, (0..3).map(|_| random_pure(2, &mut r)).collect()).unwrap();
    let o = oracle_trace(&spec).unwrap();
    let mut cfg = EstimateConfig::new(Variant::Naive, 20_000, 9);
    cfg.trajectories = Some(16);
    let e = estimate_trace(&spec, &cfg).unwrap();
    assert!(within(e.re, e.stderr_re, o.re, 5.0) && within(e.im, e.stderr_im, o.im, 5.0));
}

#[test]
fn oracle_paths_agree() {
    let mut r = rng(8);
    for k in 2..=5 {
        let spec = PartySpec::new(k, 2, (0..k).map(|_| random_pure(2, &mut r)).collect()).unwrap();
        let chain = inner_product_chain(&spec).unwrap();
        assert!((chain - oracle_trace(&spec).unwrap()).norm() < 1e-12);
    }
    let spec = PartySpec::new(2, 1, vec![random_state(1, &mut r), PartyState::diagonal(&[0.5, 0.5])]).unwrap();
    assert!(inner_product_chain(&spec).is_none());
    assert!((oracle_trace(&spec).unwrap() - C::new(0.5, 0.0)).norm() < 1e-12);
}

#[test]
fn renyi_is_invariant_under_conjugation() {
    let mut r = rng(4);
    let rho = PartyState::diagonal(&[0.7, 0.3]);
    let u = random_unitary(2, &mut r);
    let rotated = rho.conjugated(&u);
    let cfg = EstimateConfig::new(Variant::Teledata, 40_000, 6);
    let a = renyi_entropy(&rho, 1, 2, &cfg).unwrap();
    let b = renyi_entropy(&rotated, 1, 2, &EstimateConfig { seed: 7, ..cfg.clone() }).unwrap();
    let exact = -(0.49f64 + 0.09).log2();
    assert!((a.bits - b.bits).abs() <= 5.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt());
    assert!(within(a.bits, a.stderr, exact, 5.0));
}

#[test]
fn renyi_errors() {
    let cfg = EstimateConfig::new(Variant::Teledata, 100, 0);
    assert!(renyi_entropy(&PartyState::zero(1), 1, 1, &cfg).is_err());
}

#[test]
fn newton_girard_inverts_power_sums() {
    let mut r = rng(12);
    use rand::Rng;
    for d in 1..=4 {
        for _ in 0..20 {
            // Spectrum with gaps of at least 0.05.
            let mut lam: Vec<f64>;
            loop {
                let raw: Vec<f64> = (0..d).map(|_| r.gen_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                lam = raw.iter().map(|x| x / s).collect();
                lam.sort_by(|a, b| b.total_cmp(a));
                if lam.windows(2).all(|w| w[0] - w[1] >= 0.05) {
                    break;
                }
            }
            let p: Vec<f64> = (1..=d).map(|m| lam.iter().map(|l| l.powi(m as i32)).sum()).collect();
            let s = spectrum_from_power_sums(&p).unwrap();
            assert!(s.warning.is_none());
            for (a, b) in s.eigenvalues.iter().zip(&lam) {
                assert!((a - b).abs() < 1e-8, "{:?} vs {:?}", s.eigenvalues, lam);
            }
        }
    }
}

#[test]
fn virtual_expectation_of_a_cooled_state() {
    let rho = PartyState::diagonal(&[0.9, 0.1]);
    let z = "Z".parse().unwrap();
    let exact = virtual_oracle(&rho, &z, 2);
    assert!((exact.re - 0.80 / 0.82).abs() < 1e-12);
    let v = virtual_expectation(&rho, 1, &z, 2, &EstimateConfig::new(Variant::Teledata, 40_000, 2)).unwrap();
    assert!(within(v.value, v.stderr, exact.re, 5.0), "{} ± {}", v.value, v.stderr);
}

#[test]
fn noise_pulls_the_estimate_toward_zero() {
    let spec = PartySpec::uniform(3, 1, PartyState::zero(1)).unwrap();
    let mut cfg = EstimateConfig::new(Variant::Teledata, 4000, 1);
    cfg.noise = NoiseModel::from_p(0.01).with_bell(0.05);
    cfg.imaginary = false;
    let e = estimate_trace(&spec, &cfg).unwrap();
    assert!(e.re < 0.98 && e.re > 0.3, "{}", e.re);
}
