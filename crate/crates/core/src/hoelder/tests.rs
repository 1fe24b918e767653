use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::zoo::{make_zoo_map, translate, MapDescriptor};

fn map(d: MapDescriptor) -> Mapping {
    make_zoo_map(&d).unwrap()
}

fn cfg(f: &Mapping) -> HoelderConfig {
    HoelderConfig::for_mapping(f)
}

/// Analytic spherical derivative |f′| / (1 + |f|²) from the closed forms.
fn spherical_derivative(kind: &str, z: Complex64) -> f64 {
    let (w, d) = match kind {
        "exp" => (z.exp(), z.exp()),
        "sin" => (z.sin(), z.cos()),
        "exp_square" => ((z * z).exp(), z * 2.0 * (z * z).exp()),
        "z3" => (z.powu(3), z * z * 3.0),
        "identity" => (z, Complex64::new(1.0, 0.0)),
        "rational" => {
            // (z² − 1) / (z + 2)
            let p = z * z - 1.0;
            let q = z + 2.0;
            (p / q, (z * 2.0 * q - p) / (q * q))
        }
        _ => unreachable!(),
    };
    d.norm() / (1.0 + w.norm_sqr())
}

fn diagonal(t: f64) -> Vec<f64> {
    vec![t * FRAC_1_SQRT_2, t * FRAC_1_SQRT_2]
}

#[test]
fn alpha_examples() {
    assert_eq!(alpha_of(5, 1.0).unwrap(), 1.0);
    assert_eq!(alpha_of(2, 4.0).unwrap(), 0.25);
    assert!((alpha_of(3, 8.0).unwrap() - 0.353_553_390_593_273_8).abs() < 1e-15);
    assert!(alpha_of(1, 2.0).is_err());
    assert!(alpha_of(2, 0.5).is_err());
    assert!(alpha_of(2, f64::NAN).is_err());
}

#[test]
fn config_validation() {
    assert!(HoelderConfig::new(1.0, vec![1e-2, 1e-3], 8, 0).is_ok());
    assert!(HoelderConfig::new(1.0, vec![1e-3, 1e-2], 8, 0).is_err());
    assert!(HoelderConfig::new(1.0, vec![1e-2, 1e-9], 8, 0).is_err());
    assert!(HoelderConfig::new(1.0, vec![1e-2], 7, 0).is_err());
    assert!(HoelderConfig::new(1.5, vec![1e-2], 8, 0).is_err());
    let f = map(MapDescriptor::exponential());
    let bad = HoelderConfig::new(0.5, vec![1e-2], 8, 0).unwrap();
    assert!(quotient_profile(&f, &[0.0, 0.0], &bad).is_err());
}

#[test]
fn directions_are_unit_and_seeded() {
    let c = HoelderConfig::new(0.5, vec![1e-2], 32, 9).unwrap();
    for n in [2, 3] {
        let d = c.direction_set(n);
        assert_eq!(d.len(), 32);
        assert!(d.iter().all(|u| (norm(u) - 1.0).abs() < 1e-14));
        assert_eq!(d, c.direction_set(n));
        assert_ne!(d, c.clone().with_seed(10).direction_set(n));
    }
}

#[test]
fn exponential_and_identity_at_origin() {
    let e = map(MapDescriptor::exponential());
    let p = quotient_profile(&e, &[0.0, 0.0], &cfg(&e)).unwrap();
    assert!((p.q_hat - 0.5).abs() < 1e-3, "{}", p.q_hat);
    assert_eq!(p.scales.len(), 4);
    let id = map(MapDescriptor::identity());
    let p = quotient_profile(&id, &[0.0, 0.0], &cfg(&id)).unwrap();
    assert!((p.q_hat - 1.0).abs() < 1e-3, "{}", p.q_hat);
}

#[test]
fn constant_profile_is_zero() {
    let c = map(MapDescriptor::constant(ExtendedPoint::Finite(vec![1.0, 2.0])));
    let p = quotient_profile(&c, &[3.0, -1.0], &cfg(&c)).unwrap();
    assert!(p.scales.iter().all(|s| s.max_quotient == 0.0));
    assert_eq!(p.q_hat, 0.0);
}

#[test]
fn q_hat_matches_spherical_derivative() {
    let maps = [
        ("exp", MapDescriptor::exponential()),
        ("sin", MapDescriptor::sine()),
        ("exp_square", MapDescriptor::exp_square()),
        ("z3", MapDescriptor::power(3)),
        ("identity", MapDescriptor::identity()),
        ("rational", MapDescriptor::rational(&[-1.0, 0.0, 1.0], &[2.0, 1.0])),
    ];
    let pts = [[0.3, 0.4], [-1.2, 0.7], [1.5, -1.5], [0.05, 2.2], [-0.6, -0.9]];
    for (kind, d) in maps {
        let f = map(d);
        let c = cfg(&f).with_ladder(vec![1e-3, 1e-4, 1e-5]).unwrap();
        for x in pts {
            let want = spherical_derivative(kind, Complex64::new(x[0], x[1]));
            let got = quotient_profile(&f, &x, &c).unwrap().q_hat;
            assert!((got - want).abs() <= 1e-3 * want.max(1.0), "{kind} at {x:?}: {got} vs {want}");
        }
    }
}

#[test]
fn translation_covariance() {
    let f = map(MapDescriptor::sine());
    let a = [0.75, -0.5];
    let g = translate(&f, &a).unwrap();
    let c = cfg(&f);
    for x in [[0.1, 0.2], [-0.4, 0.9], [1.0, 1.0]] {
        let xa = [x[0] + a[0], x[1] + a[1]];
        let p = quotient_profile(&g, &x, &c).unwrap();
        let q = quotient_profile(&f, &xa, &c).unwrap();
        for (s, t) in p.scales.iter().zip(&q.scales) {
            assert!((s.max_quotient - t.max_quotient).abs() <= 1e-12 * t.max_quotient.max(1.0));
        }
    }
}

fn square_grid(h: f64, step: f64) -> Vec<Vec<f64>> {
    let n = (2.0 * h / step).round() as usize;
    let mut g = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            g.push(vec![-h + i as f64 * step, -h + j as f64 * step]);
        }
    }
    g
}

#[test]
fn exponential_is_yosida_consistent() {
    let f = map(MapDescriptor::exponential());
    let r = yosida_indicator(&f, &square_grid(20.0, 0.5), &cfg(&f)).unwrap();
    assert!((0.49..=0.51).contains(&r.sup), "{}", r.sup);
    assert_eq!(r.verdict, Verdict::Consistent);
    assert!(r.witness[0].abs() < 1e-12);
}

#[test]
fn exp_square_diverges_along_the_diagonal() {
    // |e^{z²}| = 1 on the diagonal, where the spherical derivative equals |z|
    let f = map(MapDescriptor::exp_square());
    let c = cfg(&f);
    let path: Vec<Vec<f64>> = [5.0, 10.0, 15.0, 20.0].iter().map(|&t| diagonal(t)).collect();
    let trend = trend_along(&f, &path, &c).unwrap();
    assert!(trend.strictly_increasing);
    for (v, t) in trend.values.iter().zip([5.0, 10.0, 15.0, 20.0]) {
        assert!((v - t).abs() < 0.01 * t, "{v} vs {t}");
    }
    let far: Vec<Vec<f64>> = [20.0, 200.0, 2000.0].iter().map(|&t| diagonal(t)).collect();
    let r = yosida_indicator_with_path(&f, &far, Some(&far), &c).unwrap();
    assert!(r.sup > DIVERGENCE_THRESHOLD);
    assert_eq!(r.verdict, Verdict::Evidence);
}

#[test]
fn exp_square_on_the_real_axis_is_flat_at_finite_scale() {
    // e^{x²} sits chordally at ∞ along the real axis
    let f = map(MapDescriptor::exp_square());
    let path: Vec<Vec<f64>> = [5.0, 10.0, 15.0, 20.0].iter().map(|&t| vec![t, 0.0]).collect();
    let t = trend_along(&f, &path, &cfg(&f)).unwrap();
    assert!(t.values.iter().all(|v| *v < 1e-8), "{:?}", t.values);
}

#[test]
fn constant_is_yosida_consistent() {
    let f = map(MapDescriptor::constant(ExtendedPoint::Infinity));
    let r = yosida_indicator(&f, &square_grid(2.0, 0.5), &cfg(&f)).unwrap();
    assert_eq!(r.sup, 0.0);
    assert_eq!(r.verdict, Verdict::Consistent);
    assert!(yosida_indicator(&f, &[], &cfg(&f)).is_err());
}

fn ray(dir: [f64; 2], from: f64, to: f64, count: usize) -> Vec<Vec<f64>> {
    let r = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    (0..count)
        .map(|k| {
            let t = from * (to / from).powf(k as f64 / (count - 1) as f64);
            vec![t * dir[0] / r, t * dir[1] / r]
        })
        .collect()
}

#[test]
fn p_yosida_examples() {
    let id = map(MapDescriptor::identity());
    let anchors = ray([1.0, 0.0], 1.0, 1000.0, 40);
    let r = p_yosida_indicator(&id, 2.0, &anchors, &cfg(&id)).unwrap();
    assert!(r.limsup < 1e-4);
    assert_eq!(r.verdict, Verdict::Consistent);

    let e = map(MapDescriptor::exponential());
    let anchors = ray([0.0, 1.0], 1.0, 1000.0, 40);
    let r = p_yosida_indicator(&e, 2.0, &anchors, &cfg(&e)).unwrap();
    assert!((r.limsup - 0.5).abs() < 1e-3, "{}", r.limsup);

    let s = map(MapDescriptor::exp_square());
    let anchors = ray([1.0, 1.0], 20.0, 2000.0, 30);
    let r = p_yosida_indicator(&s, 2.0, &anchors, &cfg(&s)).unwrap();
    assert_eq!(r.verdict, Verdict::Evidence);
    assert!(r.entries.windows(2).all(|w| w[1].value > w[0].value));
}

#[test]
fn p_yosida_preconditions() {
    let e = map(MapDescriptor::exponential());
    let c = cfg(&e);
    let good = ray([1.0, 0.0], 1.0, 1000.0, 5);
    assert!(p_yosida_indicator(&e, 1.0, &good, &c).is_err());
    assert!(p_yosida_indicator(&e, 2.0, &ray([1.0, 0.0], 1.0, 10.0, 5), &c).is_err());
    let mut unsorted = good.clone();
    unsorted.swap(0, 1);
    assert!(p_yosida_indicator(&e, 2.0, &unsorted, &c).is_err());
    let mut zero = good;
    zero[0] = vec![0.0, 0.0];
    assert!(p_yosida_indicator(&e, 2.0, &zero, &c).is_err());
}

#[test]
fn rescale_identity_examples() {
    let e = map(MapDescriptor::exponential());
    let dirs = cfg(&e).direction_set(2);
    for a in [[3.0, 0.0], [1.0, -7.0]] {
        assert_eq!(rescale_identity_check(&e, &a, 2.0, 1e-3, &dirs).unwrap(), 0.0);
    }
    assert!(rescale_identity_check(&e, &[3.0, 0.0], 3.0, 1e-3, &dirs).unwrap() <= 1e-12);
    let z2 = map(MapDescriptor::power(2));
    assert!(rescale_identity_check(&z2, &[5.0, 0.0], 1.5, 1e-4, &dirs).unwrap() <= 1e-12);
    assert!(rescale_identity_check(&z2, &[0.0, 0.0], 1.5, 1e-4, &dirs).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn rescale_identity_is_exact(
        which in 0usize..4,
        ax in -50.0f64..50.0,
        ay in -50.0f64..50.0,
        p in 1.0f64..3.5,
        log_delta in -7.0f64..-1.0,
    ) {
        prop_assume!(ax.hypot(ay) > 0.1);
        let d = [
            MapDescriptor::exponential(),
            MapDescriptor::sine(),
            MapDescriptor::elliptic(),
            MapDescriptor::winding(3, 2),
        ];
        let f = map(d[which].clone());
        let dirs = cfg(&f).direction_set(2);
        let r = rescale_identity_check(&f, &[ax, ay], p, 10f64.powf(log_delta), &dirs).unwrap();
        prop_assert!(r <= 1e-12, "{}", r);
    }
}

#[test]
fn normality_constant_examples() {
    let g: Vec<Vec<f64>> = square_grid(1.0, 0.1).into_iter().filter(|x| norm(x) <= 1.0).collect();
    let e = map(MapDescriptor::exponential());
    let family: Vec<Mapping> = (0..10)
        .map(|k| translate(&e, &[(k as f64 * 1.7) % 5.0 - 2.5, k as f64 * 3.1]).unwrap())
        .collect();
    let r = normality_constant(&family, &g, &g, &cfg(&e)).unwrap();
    assert!(r.m_g <= 0.6 && r.m_g > 0.3, "{}", r.m_g);
    assert_eq!(r.skipped_pairs, 10 * g.len());

    let consts: Vec<Mapping> = (0..3)
        .map(|k| map(MapDescriptor::constant(ExtendedPoint::Finite(vec![k as f64, 0.0]))))
        .collect();
    assert_eq!(normality_constant(&consts, &g, &g, &cfg(&e)).unwrap().m_g, 0.0);

    // translates of e^{z²} along the diagonal: M_G grows with the shift
    let s = map(MapDescriptor::exp_square());
    let mut prev = 0.0;
    for m in [2.0, 4.0, 8.0] {
        let fam = vec![translate(&s, &diagonal(m)).unwrap()];
        let v = normality_constant(&fam, &g, &g, &cfg(&s)).unwrap().m_g;
        assert!(v > prev, "m = {m}: {v}");
        prev = v;
    }
}

#[test]
fn limit_inequality_examples() {
    let e = map(MapDescriptor::exponential());
    let anchors = ray([1.0, 1.0], 1.0, 50.0, 20);
    let c = cfg(&e);
    let r = limit_inequality_check(&e, 2.0, &anchors, &[0.0, 0.0], 5, &c).unwrap();
    assert!(r.holds && r.slack >= 0.0);
    assert_eq!(r.factor, 1.0);

    let id = map(MapDescriptor::identity());
    let anchors: Vec<Vec<f64>> = (1..=200).map(|n| vec![n as f64, 0.0]).collect();
    let r = limit_inequality_check(&id, 3.0, &anchors, &[0.0, 1.0], 99, &cfg(&id)).unwrap();
    assert!(r.holds, "{r:?}");
    // closed form at stage n = 100: |a|^{-α} Q_id(y) with y = 100 + i/100
    let y = Complex64::new(100.0, 0.01);
    let want = 100f64.powf(-1.0) / (1.0 + y.norm_sqr());
    assert!((r.lhs - want).abs() <= 1e-3 * want, "{} vs {want}", r.lhs);

    let k = map(MapDescriptor::constant(ExtendedPoint::Finite(vec![1.0, 1.0])));
    let r = limit_inequality_check(&k, 1.5, &anchors, &[0.3, 0.0], 10, &cfg(&k)).unwrap();
    assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    assert!(r.holds);
}
