use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sicperf::channel::sample_cn_matrix;
use sicperf::matcore::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check_qr(a: &ComplexMatrix) {
    let f = qr_decompose(a).unwrap();
    let (n, m) = (a.rows(), a.cols());
    let scale = a.max_abs().max(1.0);
    let rec = f.q.matmul(&f.r).unwrap();
    assert!(rec.max_abs_diff(a) <= 1e-10 * scale, "reconstruction");
    let qq = f.q.adjoint().matmul(&f.q).unwrap();
    assert!(qq.max_abs_diff(&ComplexMatrix::identity(f.q.cols())) <= 1e-10, "unitarity");
    for i in 0..f.r.rows() {
        for j in 0..m.min(i) {
            assert!(f.r[(i, j)].norm() <= 1e-12 * scale, "triangularity");
        }
        if i < m.min(n) {
            assert!(f.r[(i, i)].re >= 0.0 && f.r[(i, i)].im.abs() <= 1e-14 * scale);
        }
    }
}

#[test]
fn qr_identity() {
    let f = qr_decompose(&ComplexMatrix::identity(3)).unwrap();
    assert!(f.q.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
    assert!(f.r.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
}

#[test]
fn qr_single_column() {
    let a = ComplexMatrix::from_real(2, 1, &[3.0, 4.0]).unwrap();
    let f = qr_decompose(&a).unwrap();
    assert!((f.r[(0, 0)].re - 5.0).abs() < 1e-14);
}

#[test]
fn qr_random_4x4() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    check_qr(&sample_cn_matrix(&mut rng, 4, 4));
}

#[test]
fn qr_thousand_random_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..1000 {
        let n = 1 + k % 8;
        let m = 1 + (k / 8) % n;
        check_qr(&sample_cn_matrix(&mut rng, n, m));
        check_qr(&sample_cn_matrix(&mut rng, n, n));
    }
}

#[test]
fn solve_hpd_examples() {
    let b = vec![c(1.0, 2.0), c(-3.0, 0.5)];
    let x = solve_hpd(&ComplexMatrix::identity(2), &b).unwrap();
    assert!(x.iter().zip(&b).all(|(u, v)| (u - v).norm() < 1e-15));
    let a = ComplexMatrix::identity(2).scale(2.0);
    let x = solve_hpd(&a, &[c(4.0, 0.0), c(6.0, 0.0)]).unwrap();
    assert!((x[0] - c(2.0, 0.0)).norm() < 1e-15 && (x[1] - c(3.0, 0.0)).norm() < 1e-15);
}

#[test]
fn quadratic_form_matches_adjugate_2x2() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let hm = sample_cn_matrix(&mut rng, 2, 2);
        let h = sample_cn_matrix(&mut rng, 2, 1).col(0);
        let (cc, d) = (1.3, 0.4);
        let a = hm.gram_outer().scale(cc).add(&ComplexMatrix::identity(2).scale(d)).unwrap();
        let x = solve_hpd(&a, &h).unwrap();
        let got = dot_c(&h, &x).re;
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        let inv = [[a[(1, 1)] / det, -a[(0, 1)] / det], [-a[(1, 0)] / det, a[(0, 0)] / det]];
        let want: Complex64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| h[i].conj() * inv[i][j] * h[j])
            .sum();
        assert!((got - want.re).abs() <= 1e-12 * want.re.abs());
        assert!(want.im.abs() < 1e-12);
    }
}

#[test]
fn col_norms_examples() {
    assert_eq!(col_norms_sq(&ComplexMatrix::identity(2)), vec![1.0, 1.0]);
    let a = ComplexMatrix::new(2, 1, vec![c(1.0, 1.0), c(1.0, -1.0)]).unwrap();
    assert!((col_norms_sq(&a)[0] - 4.0).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = sample_cn_matrix(&mut rng, 4, 3);
    let got = col_norms_sq(&a);
    for j in 0..3 {
        let mut s = 0.0;
        for i in 0..4 {
            s += a[(i, j)].re * a[(i, j)].re + a[(i, j)].im * a[(i, j)].im;
        }
        assert!((got[j] - s).abs() < 1e-14 * s);
    }
}

#[test]
fn rejects_bad_input() {
    assert!(ComplexMatrix::new(2, 2, vec![c(0.0, 0.0); 3]).is_err());
    assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
    let not_herm = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    assert!(solve_hpd(&not_herm, &[c(1.0, 0.0), c(1.0, 0.0)]).is_err());
    let singular = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
    assert!(solve_hpd(&singular, &[c(1.0, 0.0), c(1.0, 0.0)]).is_err());
}

fn lower_from(n: usize, vals: &[(f64, f64)]) -> ComplexMatrix {
    let mut k = 0;
    ComplexMatrix::from_fn(n, n, |i, j| {
        let v = vals[k % vals.len()];
        k += 1;
        if j > i {
            c(0.0, 0.0)
        } else if i == j {
            c(0.5 + v.0.abs(), 0.0)
        } else {
            c(v.0, v.1)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solve_hpd_matches_substitution(n in 1usize..7, vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 49), b in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 7)) {
        let l = lower_from(n, &vals);
        let a = l.matmul(&l.adjoint()).unwrap();
        let b: Vec<Complex64> = b[..n].iter().map(|&(r, i)| c(r, i)).collect();
        let x = solve_hpd(&a, &b).unwrap();
        // forward then back substitution with the known factor
        let mut yv = vec![c(0.0, 0.0); n];
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i { s -= l[(i, j)] * yv[j]; }
            yv[i] = s / l[(i, i)];
        }
        let mut xo = vec![c(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = yv[i];
            for j in i + 1..n { s -= l[(j, i)].conj() * xo[j]; }
            xo[i] = s / l[(i, i)].conj();
        }
        let scale = xo.iter().map(|v| v.norm()).fold(1e-300, f64::max);
        for (u, v) in x.iter().zip(&xo) {
            prop_assert!((u - v).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn qr_invariants(n in 1usize..9, mfrac in 0.0f64..1.0, seed in any::<u64>()) {
        let m = 1 + ((n as f64 * mfrac) as usize).min(n - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check_qr(&sample_cn_matrix(&mut rng, n, m));
    }
}
