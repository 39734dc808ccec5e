use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sicperf::channel::*;
use sicperf::error_prop::{zf_conditional_asep, AsepQuery, MmseZLimit};
use sicperf::matcore::{col_norms_sq, qr_decompose, ComplexMatrix};
use sicperf::montecarlo::{estimate_ser, estimate_ser_noiseless, FeedbackMode, SerOptions};
use sicperf::specfun::regularized_gamma_p;
use sicperf::zf_sic::*;
use sicperf::{db_to_linear, DetectionStrategy, Scheme};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn order_ties_keep_identity() {
    let h = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(detection_order(&h, DetectionStrategy::Foschini).perm, vec![0, 1]);
}

#[test]
fn order_strongest_first() {
    let h = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 2.0]).unwrap();
    let o = detection_order(&h, DetectionStrategy::Foschini);
    assert_eq!(o.perm, vec![1, 0]);
    assert_eq!(detection_order(&h, DetectionStrategy::Fixed).perm, vec![0, 1]);
}

#[test]
fn order_norms_non_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..100 {
        let h = sample_cn_matrix(&mut rng, 4, 4);
        let norms = col_norms_sq(&h);
        let o = detection_order(&h, DetectionStrategy::Foschini);
        assert!(o.perm.windows(2).all(|w| norms[w[0]] >= norms[w[1]]));
    }
}

#[test]
fn clean_sindr_is_snr() {
    let cfg = SystemConfig::new(4, 3, 7.0, 0.5, 0.0, 0.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let real = sample_realization(&cfg, &mut rng);
    let order = detection_order(&real.h_hat, DetectionStrategy::Foschini);
    let prof = zf_sindr_profile(&cfg, &real, &order).unwrap();
    let f = qr_decompose(&real.h.select_columns(&order.layer_columns())).unwrap();
    for i in 1..=3 {
        let want = cfg.p * f.diag_sq[i - 1] / cfg.n0;
        let got = prof.stage(sicperf::layer_to_stage(3, i));
        assert!((got - want).abs() <= 1e-12 * want);
    }
}

#[test]
fn perfect_csi_sndr() {
    let cfg = SystemConfig::new(3, 3, 5.0, 1.0, 0.1, 0.2, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let real = sample_realization(&cfg, &mut rng);
    let order = DetectionOrder::identity(3);
    let prof = zf_sindr_profile(&cfg, &real, &order).unwrap();
    let f = qr_decompose(&real.h.select_columns(&order.layer_columns())).unwrap();
    for i in 1..=3 {
        let s = cfg.p * f.diag_sq[i - 1];
        let want = s / (s * 0.01 + cfg.p * 0.04 * 3.0 + cfg.n0);
        assert!((prof.stage(4 - i) - want).abs() <= 1e-12 * want);
    }
}

// 2x2 evaluation of the SINDR expression from raw products
fn sindr_2x2(cfg: &SystemConfig, h: &ComplexMatrix, dh: &ComplexMatrix, literal: bool) -> [f64; 2] {
    let f = qr_decompose(h).unwrap();
    let (q, r) = (&f.q, &f.r);
    let mut y = [0.0; 2];
    if literal {
        let det = r[(0, 0)] * r[(1, 1)];
        let rinv = [[c(1.0, 0.0) / r[(0, 0)], -r[(0, 1)] / det], [c(0.0, 0.0), c(1.0, 0.0) / r[(1, 1)]]];
        let mut m = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        for k in 0..2 {
                            // (R^-1)^H_{ia} (dH^H)_{ab} Q_{bk} R_{kj}
                            m[i][j] += rinv[a][i].conj() * dh[(b, a)].conj() * q[(b, k)] * r[(k, j)];
                        }
                    }
                }
            }
        }
        for i in 0..2 {
            y[i] = m[i][0].norm_sqr() + m[i][1].norm_sqr();
        }
    } else {
        for i in 0..2 {
            for j in 0..2 {
                let v = q[(0, i)].conj() * dh[(0, j)] + q[(1, i)].conj() * dh[(1, j)];
                y[i] += v.norm_sqr();
            }
        }
    }
    let (p, kt2, kr2) = (cfg.p, cfg.kappa_t.powi(2), cfg.kappa_r.powi(2));
    let mut out = [0.0; 2];
    for i in 0..2 {
        let s = p * r[(i, i)].norm_sqr();
        out[i] = s / (s * kt2 + p * y[i] * (1.0 + kt2) + p * kr2 * 2.0 + cfg.n0);
    }
    out
}

#[test]
fn sindr_matches_raw_expression() {
    let cfg = SystemConfig::new(2, 2, 10.0, 1.0, 0.1, 0.1, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let real = sample_realization(&cfg, &mut rng);
        let order = detection_order(&real.h, DetectionStrategy::Foschini);
        let cols = order.layer_columns();
        let (h, dh) = (real.h.select_columns(&cols), real.delta_h.select_columns(&cols));
        for (cross, literal) in [(Crosstalk::Projected, false), (Crosstalk::Literal, true)] {
            let model = ZfSindrModel::new(FactorSource::True, cross);
            let prof = zf_sindr_profile_with(&cfg, &real, &order, model).unwrap();
            let want = sindr_2x2(&cfg, &h, &dh, literal);
            for i in 0..2 {
                let got = prof.stage(2 - i);
                assert!((got - want[i]).abs() <= 1e-10 * want[i], "{cross:?} layer {}", i + 1);
            }
        }
    }
}

#[test]
fn crosstalk_follows_erlang_law() {
    // Y_i ~ Gamma(m, omega) when the factors are independent of dH
    let (m, w, trials) = (3usize, 0.1, 100_000usize);
    let cfg = SystemConfig::new(4, m, 1.0, 1.0, 0.0, 0.0, w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let model = ZfSindrModel::new(FactorSource::True, Crosstalk::Projected);
    let mut ys: Vec<Vec<f64>> = vec![Vec::with_capacity(trials); m];
    for _ in 0..trials {
        let real = sample_realization(&cfg, &mut rng);
        let order = detection_order(&real.h, DetectionStrategy::Foschini);
        for (i, t) in zf_layer_terms(&real, &order, model).unwrap().into_iter().enumerate() {
            ys[i].push(t.y_i);
        }
    }
    for y in ys.iter_mut() {
        let mean = y.iter().sum::<f64>() / trials as f64;
        assert!((mean / (m as f64 * w) - 1.0).abs() < 0.03, "mean {mean}");
        y.sort_by(f64::total_cmp);
        let mut gap: f64 = 0.0;
        for (k, &v) in y.iter().enumerate().step_by(97) {
            let f = regularized_gamma_p(m as f64, v / w).unwrap();
            gap = gap.max((f - k as f64 / trials as f64).abs()).max((f - (k + 1) as f64 / trials as f64).abs());
        }
        assert!(gap <= 0.01, "cdf gap {gap}");
    }
}

#[test]
fn ordered_first_stage_dominates() {
    let cfg = SystemConfig::new(4, 4, db_to_linear(10.0), 1.0, 0.08, 0.08, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let trials = 100_000;
    let (mut a, mut b) = (Vec::with_capacity(trials), Vec::with_capacity(trials));
    for _ in 0..trials {
        let real = sample_realization(&cfg, &mut rng);
        let fo = detection_order(&real.h_hat, DetectionStrategy::Foschini);
        a.push(zf_sindr_profile(&cfg, &real, &fo).unwrap().stage(1));
        b.push(zf_sindr_profile(&cfg, &real, &DetectionOrder::identity(4)).unwrap().stage(1));
    }
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    for g in [0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 3.0, 5.0] {
        let fa = a.partition_point(|&x| x <= g) as f64 / trials as f64;
        let fb = b.partition_point(|&x| x <= g) as f64 / trials as f64;
        assert!(fa <= fb + 0.01, "g = {g}: {fa} > {fb}");
    }
}

#[test]
fn noiseless_decoding_recovers_symbols() {
    let cfg = SystemConfig::new(4, 4, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for modulation in [ModulationSpec::bpsk(), ModulationSpec::qam16()] {
        for _ in 0..200 {
            let real = sample_realization(&cfg, &mut rng);
            let (idx, s) = sample_symbols(&cfg, &modulation, &mut rng);
            let y = received(&cfg, &real, &s, &mut rng, false).unwrap();
            for strat in [DetectionStrategy::Foschini, DetectionStrategy::Fixed] {
                let order = detection_order(&real.h_hat, strat);
                assert_eq!(zf_sic_decode(&cfg, &y, &real, &order, &modulation).unwrap(), idx);
            }
        }
    }
    let opts = SerOptions {
        scheme: Scheme::Zf,
        ordering: DetectionStrategy::Foschini,
        modulation: ModulationSpec::bpsk(),
        feedback: FeedbackMode::Decision,
        trials: 5000,
        seed: 1,
        threads: 1,
    };
    assert_eq!(estimate_ser_noiseless(&cfg, &opts).unwrap().overall.value, 0.0);
}

#[test]
fn permutation_consistency() {
    let cfg = SystemConfig::new(4, 3, 10.0, 1.0, 0.05, 0.05, 0.02).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let bpsk = ModulationSpec::bpsk();
    for _ in 0..200 {
        let h = sample_cn_matrix(&mut rng, 4, 3);
        let d = sample_cn_matrix(&mut rng, 4, 3);
        let real = ChannelRealization::from_standard(h.clone(), &d, cfg.omega);
        let (_, s) = sample_symbols(&cfg, &bpsk, &mut rng);
        let y = sample_received(&cfg, &real, &s, &mut rng).unwrap();
        let order = detection_order(&real.h_hat, DetectionStrategy::Foschini);
        let a = zf_sic_decode(&cfg, &y, &real, &order, &bpsk).unwrap();
        let permuted = ChannelRealization::from_standard(h.select_columns(&order.perm), &d.select_columns(&order.perm), cfg.omega);
        let b = zf_sic_decode(&cfg, &y, &permuted, &DetectionOrder::identity(3), &bpsk).unwrap();
        for k in 0..3 {
            assert_eq!(a[order.perm[k]], b[k]);
        }
    }
}

fn ser(cfg: &SystemConfig, fb: FeedbackMode, trials: u64) -> sicperf::montecarlo::SerEstimate {
    let opts = SerOptions {
        scheme: Scheme::Zf,
        ordering: DetectionStrategy::Foschini,
        modulation: ModulationSpec::bpsk(),
        feedback: fb,
        trials,
        seed: 77,
        threads: 0,
    };
    estimate_ser(cfg, &opts).unwrap()
}

#[test]
fn genie_never_worse_than_decision_feedback() {
    let cfg = SystemConfig::new(4, 4, db_to_linear(10.0), 1.0, 0.0, 0.05, 0.01).unwrap();
    let g = ser(&cfg, FeedbackMode::Genie, 100_000);
    let d = ser(&cfg, FeedbackMode::Decision, 100_000);
    for k in 0..4 {
        assert!(g.per_stage[k].value <= d.per_stage[k].value, "stage {}", k + 1);
    }
    // stage 1 has nothing to cancel
    assert_eq!(g.per_stage[0].value, d.per_stage[0].value);
}

#[test]
fn coin_flip_limit() {
    let cfg = SystemConfig::new(4, 4, db_to_linear(-50.0), 1.0, 0.0, 0.0, 0.0).unwrap();
    let d = ser(&cfg, FeedbackMode::Decision, 100_000);
    assert!((d.overall.value - 0.5).abs() < 0.01, "{:?}", d.overall);
}

#[test]
fn low_snr_matches_ideal_asep() {
    // at -30 dB the SER sits about sqrt(snr/pi) below 1/2; ideal genie stages are exact
    let cfg = SystemConfig::new(4, 4, db_to_linear(-30.0), 1.0, 0.0, 0.0, 0.0).unwrap();
    let g = ser(&cfg, FeedbackMode::Genie, 100_000);
    let q = AsepQuery::new(cfg, Scheme::Zf, ModulationSpec::bpsk(), MmseZLimit::Printed);
    for k in 1..=4 {
        let want = zf_conditional_asep(&q, sicperf::stage_to_layer(4, k), DetectionStrategy::Foschini).unwrap();
        let e = g.per_stage[k - 1];
        assert!((e.value - want).abs() <= 3.0 * e.half_width(), "stage {k}: {} vs {want}", e.value);
        assert!(want < 0.49);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sindr_bounded_by_distortion(seed in any::<u64>(), kt in 0.01f64..0.3, snr_db in -10.0f64..60.0) {
        let cfg = SystemConfig::new(4, 3, db_to_linear(snr_db), 1.0, kt, 0.05, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = sample_realization(&cfg, &mut rng);
        let order = detection_order(&real.h_hat, DetectionStrategy::Foschini);
        let prof = zf_sindr_profile(&cfg, &real, &order).unwrap();
        for v in prof.values {
            prop_assert!(v > 0.0 && v < 1.0 / (kt * kt));
        }
    }

    #[test]
    fn order_is_permutation(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 1 + seed as usize % n;
        let h = sample_cn_matrix(&mut rng, n, m);
        let mut p = detection_order(&h, DetectionStrategy::Foschini).perm;
        p.sort();
        prop_assert_eq!(p, (0..m).collect::<Vec<_>>());
    }
}
