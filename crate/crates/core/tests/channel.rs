use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sicperf::channel::*;
use sicperf::matcore::ComplexMatrix;

const TRIALS: usize = 100_000;

#[test]
fn zero_omega_means_perfect_csi() {
    let cfg = SystemConfig::new(3, 2, 10.0, 1.0, 0.1, 0.1, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = sample_realization(&cfg, &mut rng);
    assert_eq!(r.delta_h.max_abs(), 0.0);
    assert_eq!(r.h_hat, r.h);
}

#[test]
fn entry_moments_and_independence() {
    let cfg = SystemConfig::new(2, 2, 1.0, 1.0, 0.0, 0.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut sh, mut sd, mut cross) = ([0.0; 4], [0.0; 4], [Complex64::new(0.0, 0.0); 4]);
    for _ in 0..TRIALS {
        let r = sample_realization(&cfg, &mut rng);
        for k in 0..4 {
            let (h, d) = (r.h[(k / 2, k % 2)], r.delta_h[(k / 2, k % 2)]);
            sh[k] += h.norm_sqr();
            sd[k] += d.norm_sqr();
            cross[k] += h * d.conj();
        }
    }
    let t = TRIALS as f64;
    for k in 0..4 {
        assert!((sh[k] / t - 1.0).abs() < 0.02, "var h = {}", sh[k] / t);
        assert!((sd[k] / t - 0.1).abs() < 0.005, "var dh = {}", sd[k] / t);
        let corr = (cross[k] / t).norm() / (sh[k] / t * sd[k] / t).sqrt();
        assert!(corr <= 0.01, "corr = {corr}");
        // unnormalised covariance bound
        assert!((cross[k] / t).norm() <= 3.0 / t.sqrt());
    }
}

#[test]
fn realizations_are_deterministic() {
    let cfg = SystemConfig::new(4, 3, 5.0, 1.0, 0.1, 0.1, 0.2).unwrap();
    let a = sample_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
    let b = sample_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
    assert_eq!(a.h, b.h);
    assert_eq!(a.delta_h, b.delta_h);
}

#[test]
fn noiseless_ideal_is_linear_model() {
    let cfg = SystemConfig::new(3, 3, 4.0, 1.0, 0.0, 0.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let r = sample_realization(&cfg, &mut rng);
    let (_, s) = sample_symbols(&cfg, &ModulationSpec::qpsk(), &mut rng);
    let y = received(&cfg, &r, &s, &mut rng, false).unwrap();
    assert_eq!(y, r.h.mul_vec(&s).unwrap());
}

#[test]
fn zero_symbol_noise_covariance() {
    let (p, kr, n0) = (3.0, 0.2, 0.7);
    let cfg = SystemConfig::new(3, 2, p, n0, 0.0, kr, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let r = sample_realization(&cfg, &mut rng);
    let s = vec![Complex64::new(0.0, 0.0); 2];
    let mut cov = vec![Complex64::new(0.0, 0.0); 9];
    for _ in 0..TRIALS {
        let y = sample_received(&cfg, &r, &s, &mut rng).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                cov[i * 3 + j] += y[i] * y[j].conj();
            }
        }
    }
    let want = p * kr * kr * 2.0 + n0;
    for i in 0..3 {
        for j in 0..3 {
            let v = cov[i * 3 + j] / TRIALS as f64;
            if i == j {
                assert!((v.re / want - 1.0).abs() < 0.03, "diag {}", v.re);
            } else {
                assert!(v.norm() < 0.03 * want);
            }
        }
    }
}

#[test]
fn single_antenna_power_bookkeeping() {
    let (p, kt, kr, n0) = (2.0, 0.3, 0.25, 0.5);
    let cfg = SystemConfig::new(2, 1, p, n0, kt, kr, 0.0).unwrap();
    let e1 = ComplexMatrix::from_real(2, 1, &[1.0, 0.0]).unwrap();
    let r = ChannelRealization::from_standard(e1, &ComplexMatrix::zeros(2, 1), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let bpsk = ModulationSpec::bpsk();
    let mut pow = 0.0;
    for _ in 0..TRIALS {
        let (_, s) = sample_symbols(&cfg, &bpsk, &mut rng);
        pow += sample_received(&cfg, &r, &s, &mut rng).unwrap()[0].norm_sqr();
    }
    let want = p * (1.0 + kt * kt) + p * kr * kr + n0;
    assert!((pow / TRIALS as f64 / want - 1.0).abs() < 0.03);
}

#[test]
fn modulations_have_unit_energy() {
    for name in ["bpsk", "qpsk", "qam16"] {
        let m = ModulationSpec::by_name(name).unwrap();
        let e: f64 = m.points.iter().map(|z| z.norm_sqr()).sum::<f64>() / m.states as f64;
        assert!((e - 1.0).abs() < 1e-12);
        for (k, &z) in m.points.iter().enumerate() {
            assert_eq!(m.slice(z * 1.01), k);
        }
    }
    assert!(ModulationSpec::by_name("8psk").is_err());
}

#[test]
fn config_validation() {
    assert!(SystemConfig::new(2, 3, 1.0, 1.0, 0.0, 0.0, 0.0).is_err());
    assert!(SystemConfig::new(2, 2, -1.0, 1.0, 0.0, 0.0, 0.0).is_err());
    assert!(SystemConfig::new(2, 2, 1.0, 1.0, -0.1, 0.0, 0.0).is_err());
    assert!(SystemConfig::new(2, 2, 1.0, 1.0, 0.0, 0.0, f64::NAN).is_err());
    let cfg = SystemConfig::ideal(4, 2, 10.0).unwrap();
    assert!((cfg.snr() - 10.0).abs() < 1e-12);
}
