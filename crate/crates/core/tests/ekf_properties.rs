use nalgebra::{Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use yoyo_gait::ekf::{predict, step, transition, transition_jacobian, update};
use yoyo_gait::{simulate_walk, EkfConfig, EkfCovariance, EkfState, Measurement, SinusoidEkf, WalkProfile, YoyoParams};

/// Plain-array dense oracle for one Kalman measurement update, using the
/// textbook `(I − K·H)·P` covariance form.
fn oracle_update(x: [f64; 4], p: [[f64; 4]; 4], v: [f64; 2], z: [f64; 2]) -> ([f64; 4], [[f64; 4]; 4]) {
    let h = [[1.0, 0.0, 0.0, 1.0], [0.0, -1.0, 0.0, 0.0]];
    let mut hx = [0.0; 2];
    for i in 0..2 {
        for j in 0..4 {
            hx[i] += h[i][j] * x[j];
        }
    }
    let nu = [z[0] - hx[0], z[1] - hx[1]];
    // P·Hᵀ (4×2)
    let mut pht = [[0.0; 2]; 4];
    for i in 0..4 {
        for k in 0..2 {
            for j in 0..4 {
                pht[i][k] += p[i][j] * h[k][j];
            }
        }
    }
    let mut s = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for j in 0..4 {
                s[a][b] += h[a][j] * pht[j][b];
            }
        }
        s[a][a] += v[a];
    }
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let sinv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
    let mut k = [[0.0; 2]; 4];
    for i in 0..4 {
        for b in 0..2 {
            for a in 0..2 {
                k[i][b] += pht[i][a] * sinv[a][b];
            }
        }
    }
    let mut xn = x;
    for i in 0..4 {
        xn[i] += k[i][0] * nu[0] + k[i][1] * nu[1];
    }
    let mut ikh = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            ikh[i][j] = if i == j { 1.0 } else { 0.0 } - (k[i][0] * h[0][j] + k[i][1] * h[1][j]);
        }
    }
    let mut pn = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for m in 0..4 {
                pn[i][j] += ikh[i][m] * p[m][j];
            }
        }
    }
    (xn, pn)
}

#[test]
fn update_matches_dense_oracle() {
    let cfg = EkfConfig::default();
    let x = EkfState::new(0.02, 0.0, 0.1, 0.2);
    let z = Measurement { vx_s: 0.25, vz_s: -0.01 };
    let (xn, pn, nu) = update(&x, &EkfCovariance::identity(), &z, &cfg).unwrap();

    let eye = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    let (ox, op) = oracle_update([0.02, 0.0, 0.1, 0.2], eye, [1e-2, 1e-2], [0.25, -0.01]);
    for i in 0..4 {
        assert!((xn.0[i] - ox[i]).abs() < 1e-10, "x[{i}]");
        for j in 0..4 {
            assert!((pn.0[(i, j)] - op[i][j]).abs() < 1e-10, "P[{i}][{j}]");
        }
    }
    // Frozen from an independent numpy evaluation.
    let frozen = [0.03492537313432836, 0.0099009900990099, 0.1, 0.21492537313432836];
    for i in 0..4 {
        assert!((xn.0[i] - frozen[i]).abs() < 1e-12);
    }
    assert!((nu[0] - 0.03).abs() < 1e-15 && (nu[1] + 0.01).abs() < 1e-15);
    assert!((pn.0[(0, 3)] + 0.49751243781094534).abs() < 1e-12);
    assert!((pn.0[(1, 1)] - 0.00990099009900991).abs() < 1e-12);
}

#[test]
fn update_matches_oracle_on_random_covariances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = EkfConfig::default();
    for _ in 0..100 {
        let a = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let p = a * a.transpose() + Matrix4::identity() * 0.01;
        let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let z = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let (xn, pn, _) = update(
            &EkfState::new(x[0], x[1], x[2], x[3]),
            &EkfCovariance(p),
            &Measurement { vx_s: z[0], vz_s: z[1] },
            &cfg,
        )
        .unwrap();
        let parr: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| p[(i, j)]));
        let (ox, op) = oracle_update(x, parr, [1e-2, 1e-2], z);
        for i in 0..4 {
            assert!((xn.0[i] - ox[i]).abs() < 1e-9);
            for j in 0..4 {
                assert!((pn.0[(i, j)] - op[i][j]).abs() < 1e-9 * (1.0 + op[i][j].abs()));
            }
        }
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-6;
    for _ in 0..100 {
        let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(-10.0..10.0));
        let s = EkfState::new(x[0], x[1], x[2], x[3]);
        let j = transition_jacobian(&s);
        let mut fd = Matrix4::zeros();
        for c in 0..4 {
            let mut hi = s;
            let mut lo = s;
            hi.0[c] += h;
            lo.0[c] -= h;
            let d = (transition(&hi).0 - transition(&lo).0) / (2.0 * h);
            fd.set_column(c, &d);
        }
        let rel = (fd - j).norm() / j.norm();
        assert!(rel < 1e-5, "relative error {rel} at {x:?}");
    }
}

#[test]
fn noiseless_sinusoid_frequency_locks() {
    // ω̃ = 0.25, A0 = 0.2, A1 = 0.02, generated through the kinematic model.
    let dt = 0.04;
    let omega = 0.25 / dt;
    let params = YoyoParams::new(0.2 / 0.25, 0.02 / 0.25, 1.0).unwrap();
    let samples = simulate_walk(&params, &WalkProfile::constant(omega, 20.0), dt, 20.0, (0.0, 0.0), 0).unwrap();
    let mut f = SinusoidEkf::new(EkfConfig::default()).unwrap();
    for s in samples.iter().take(500) {
        f.step_velocity(s.vx, s.vz).unwrap();
    }
    assert!((f.state().x3() - 0.25).abs() < 0.005, "{:?}", f.state());
    assert!((f.state().x4() - 0.2).abs() < 0.005);
    assert!((f.state().amplitude() - 0.02).abs() < 0.002);
}

#[test]
fn zero_input_collapses_the_observable_part() {
    // x1 and x4 are indistinguishable once x3 reaches zero, so only their
    // sum is pinned by a silent input.
    let mut f = SinusoidEkf::new(EkfConfig::default()).unwrap();
    for _ in 0..200 {
        f.step(&Measurement { vx_s: 0.0, vz_s: 0.0 }).unwrap();
    }
    let s = f.state();
    assert!((s.x1() + s.x4()).abs() < 1e-3, "{s:?}");
    assert!(s.x2().abs() < 1e-3);
    assert!(s.x3().abs() < 1e-3);
    assert!(!s.in_band());
}

#[test]
fn runs_are_bit_identical() {
    let params = YoyoParams::new(2.0, 0.2, 1.0).unwrap();
    let samples = simulate_walk(&params, &WalkProfile::constant(2.5, 30.0), 0.04, 30.0, (0.02, 0.02), 9).unwrap();
    let run = || {
        let mut f = SinusoidEkf::new(EkfConfig::default()).unwrap();
        for s in &samples {
            f.step_velocity(s.vx, s.vz).unwrap();
        }
        (*f.state(), *f.covariance())
    };
    let (a, pa) = run();
    let (b, pb) = run();
    assert!(a.0.iter().zip(b.0.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(pa.0.iter().zip(pb.0.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn converges_across_the_operating_band() {
    let dt = 0.04;
    let params = YoyoParams::new(2.0, 0.2, 1.0).unwrap();
    for i in 0..=6 {
        let wt = 0.1 + 0.05 * i as f64;
        let samples =
            simulate_walk(&params, &WalkProfile::constant(wt / dt, 20.0), dt, 20.0, (0.0, 0.0), 0).unwrap();
        let mut f = SinusoidEkf::new(EkfConfig::default()).unwrap();
        for s in &samples {
            f.step_velocity(s.vx, s.vz).unwrap();
        }
        let got = f.state().x3().abs();
        assert!((got - wt).abs() / wt < 0.02, "ω̃={wt}: got {got}");
    }
}

#[test]
fn step_is_predict_then_update() {
    let cfg = EkfConfig::default();
    let x = EkfState::new(0.01, -0.02, 0.15, 0.3);
    let p = EkfCovariance(Matrix4::identity() * 0.5);
    let z = Measurement { vx_s: 0.33, vz_s: 0.01 };
    let (xp, pp) = predict(&x, &p, &cfg);
    let expected = update(&xp, &pp, &z, &cfg).unwrap();
    assert_eq!(step(&x, &p, &z, &cfg).unwrap(), expected);
}

#[test]
fn degenerate_measurement_noise_is_reported() {
    let mut cfg = EkfConfig::default();
    cfg.v = Matrix2::new(1e-30, 0.0, 0.0, 1.0);
    let err = update(&cfg.x0, &EkfCovariance::zeros(), &Measurement { vx_s: 0.0, vz_s: 0.0 }, &cfg);
    assert!(err.is_err());
}
