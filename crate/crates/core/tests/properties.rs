use adaptive_diff::baseline::{Bd, BdIir, BdMa, Differentiator, MovingAverage};
use adaptive_diff::control::{zoh_discretize, PlantConfig};
use adaptive_diff::experiment::csv::fmt_f64;
use adaptive_diff::experiment::parse_config;
use adaptive_diff::linalg::sym_eigenvalues;
use adaptive_diff::rls::{forgetting_factor, ErConfig, RlsState, StackedRegression};
use adaptive_diff::{Aise, AiseConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const EXAMPLE1: &str = include_str!("../../../configs/example1.conf");

fn small_aise() -> AiseConfig {
    let text = EXAMPLE1.replace("aise.nE = 12", "aise.nE = 3").replace("aise.nF = 20", "aise.nF = 5");
    parse_config(&text).unwrap().aise_config(true, 0.01).unwrap()
}

fn signal(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, len)
}

fn baselines() -> Vec<Box<dyn Differentiator>> {
    vec![
        Box::new(Bd::new(0.01).unwrap()),
        Box::new(BdMa::new(0.01, 7).unwrap()),
        Box::new(BdIir::butterworth(0.01, 5, 0.6 * std::f64::consts::PI).unwrap()),
    ]
}

fn apply(d: &mut dyn Differentiator, xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| d.differentiate(x).unwrap()).collect()
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimator_covariances_stay_psd(y in signal(120)) {
        let mut est = Aise::new(small_aise()).unwrap();
        for &v in &y {
            let d = est.step(v).unwrap();
            prop_assert!(d.d_hat.is_finite());
            prop_assert!(d.lambda > 0.0 && d.lambda <= 1.0);
            prop_assert!(d.eig_min_p > 0.0);
            let b = est.belief();
            for m in [&b.p_f, &b.p_da] {
                prop_assert!(sym_eigenvalues(m).iter().all(|&e| e >= -1e-12));
            }
        }
    }

    #[test]
    fn baselines_are_linear(x in signal(80), w in signal(80), a in -3.0..3.0f64) {
        let combo: Vec<f64> = x.iter().zip(&w).map(|(p, q)| a * p + q).collect();
        for i in 0..3 {
            let (dx, dw, dc) = (apply(baselines()[i].as_mut(), &x), apply(baselines()[i].as_mut(), &w), apply(baselines()[i].as_mut(), &combo));
            for k in 0..x.len() {
                let expect = a * dx[k] + dw[k];
                prop_assert!(close(dc[k], expect, expect.abs() * 1e3), "filter {i} step {k}: {} vs {expect}", dc[k]);
            }
        }
    }

    #[test]
    fn baselines_are_causal(x in signal(60), cut in 1usize..59, bump in 1.0..100.0f64) {
        let mut y = x.clone();
        for v in &mut y[cut..] {
            *v += bump;
        }
        for i in 0..3 {
            let (a, b) = (apply(baselines()[i].as_mut(), &x), apply(baselines()[i].as_mut(), &y));
            prop_assert_eq!(&a[..cut], &b[..cut]);
        }
    }

    #[test]
    fn moving_average_matches_window_mean(x in signal(50), w in 1usize..12) {
        let mut ma = MovingAverage::new(w).unwrap();
        for k in 0..x.len() {
            let lo = (k + 1).saturating_sub(w);
            let win = &x[lo..=k];
            let oracle = win.iter().sum::<f64>() / win.len() as f64;
            prop_assert!(close(ma.step(x[k]), oracle, 10.0));
        }
    }

    #[test]
    fn plant_is_linear(u in signal(60), v in signal(60), a in -3.0..3.0f64, tau in 0.2..5.0f64, nd in 0usize..5) {
        let cfg = PlantConfig { k_dc: 1.7, tau_c: tau, dead_time: nd as f64 * 0.01, ts: 0.01 };
        let run = |inp: &[f64]| {
            let mut p = zoh_discretize(&cfg).unwrap();
            inp.iter().map(|&x| p.step(x)).collect::<Vec<f64>>()
        };
        let combo: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + q).collect();
        let (yu, yv, yc) = (run(&u), run(&v), run(&combo));
        for k in 0..u.len() {
            prop_assert!(close(yc[k], a * yu[k] + yv[k], 100.0));
            if k < nd {
                prop_assert_eq!(yc[k], 0.0);
            }
        }
    }

    #[test]
    fn resetting_bounds_largest_eigenvalue(
        seed_rows in prop::collection::vec(-2.0..2.0f64, 8),
        z in prop::collection::vec(-2.0..2.0f64, 2),
        p0 in 0.01..100.0f64,
        r_inf in 0.01..100.0f64,
        lambda in 0.05..0.999f64,
    ) {
        let phi = DMatrix::from_row_slice(2, 4, &seed_rows);
        let reg = StackedRegression::new(phi, DVector::from_vec(z), DVector::from_element(2, 1.0)).unwrap();
        let mut rls = RlsState::new(DVector::zeros(4), &DMatrix::from_diagonal_element(4, 4, 1.0 / p0)).unwrap();
        let er = ErConfig::scaled_identity(4, r_inf).unwrap();
        rls.update_vrf_er(&reg, lambda, &er).unwrap();
        let eig = sym_eigenvalues(rls.covariance());
        let top = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(top <= p0.max(1.0 / r_inf) * (1.0 + 1e-10));
        prop_assert!(eig.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn forgetting_factor_in_unit_interval(g in -1e6..1e6f64, eta in 0.0..1e3f64) {
        let l = forgetting_factor(g, eta);
        prop_assert!(l > 0.0 && l <= 1.0);
        if g <= 0.0 || eta == 0.0 {
            prop_assert_eq!(l, 1.0);
        } else if eta * g > 1e-12 {
            prop_assert!(l < 1.0);
            prop_assert!((l - 1.0 / (1.0 + eta * g)).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_float_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn config_round_trip(
        rd_exp in -9.0..-1.0f64,
        rtheta in 1e-3..10.0f64,
        beta in 0.05..0.95f64,
        eta in 0.01..5.0f64,
        tau_n in 2usize..30,
        extra in 5usize..100,
        kp in 0.0..10.0f64,
        command in -5.0..5.0f64,
    ) {
        let text = EXAMPLE1
            .replace("aise.Rd = 1e-7", &format!("aise.Rd = {}", 10f64.powf(rd_exp)))
            .replace("aise.Rtheta = 10^-0.1", &format!("aise.Rtheta = {rtheta}"))
            .replace("adapt.beta = 0.55", &format!("adapt.beta = {beta}"))
            .replace("vrf.eta = 0.5", &format!("vrf.eta = {eta}"))
            .replace("vrf.tauN = 20", &format!("vrf.tauN = {tau_n}"))
            .replace("vrf.tauD = 80", &format!("vrf.tauD = {}", tau_n + extra))
            .replace("pid.Kp = 1.5", &format!("pid.Kp = {kp}"))
            .replace("sim.command = 1", &format!("sim.command = {command}"));
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(cfg.estimator.beta, beta);
        prop_assert_eq!(cfg.estimator.vrf.tau_d, tau_n + extra);
        prop_assert_eq!(parse_config(&cfg.serialize()).unwrap(), cfg);
    }
}
