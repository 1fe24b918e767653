use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::sphere::{chordal, chordal_distance, dist};

fn fin(v: &[f64]) -> ExtendedPoint {
    ExtendedPoint::Finite(v.to_vec())
}

fn map(d: MapDescriptor) -> Mapping {
    make_zoo_map(&d).unwrap()
}

fn q(f: &Mapping, x: &[f64], y: &[f64]) -> f64 {
    chordal(&f.evaluate(x).unwrap(), &f.evaluate(y).unwrap())
}

/// Central finite-difference Jacobian determinant.
fn fd_det(f: &Mapping, x: &[f64]) -> f64 {
    let n = x.len();
    let h = 1e-5;
    let mut m = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fp = f.evaluate(&xp).unwrap();
        let fm = f.evaluate(&xm).unwrap();
        let (fp, fm) = (fp.coords().unwrap(), fm.coords().unwrap());
        for i in 0..n {
            m[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    match n {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!(),
    }
}

fn random_in_ball(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-r..r)).collect();
        if norm(&x) < r {
            return x;
        }
    }
}

#[test]
fn exponential_reference_values() {
    let f = map(MapDescriptor::exponential());
    assert_eq!(f.evaluate(&[0.0, 0.0]).unwrap(), fin(&[1.0, 0.0]));
    let far = f.evaluate(&[-31.0, 0.7]).unwrap();
    assert!(chordal_distance(&far, &fin(&[0.0, 0.0])).unwrap() <= 1e-12);
    assert_eq!(f.evaluate(&[40.0, 0.0]).unwrap(), ExtendedPoint::Infinity);
    assert_eq!((f.dim(), f.distortion(), f.alpha()), (2, 1.0, 1.0));
}

#[test]
fn evaluate_checks_dimension() {
    let f = map(MapDescriptor::exponential());
    assert!(matches!(
        f.evaluate(&[0.0, 0.0, 0.0]),
        Err(Error::DimensionMismatch { expected: 2, got: 3 })
    ));
}

#[test]
fn exponential_is_2pi_i_periodic_under_translation() {
    let f = map(MapDescriptor::exponential());
    let g = translate(&f, &[0.0, TAU]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let x = random_in_ball(&mut rng, 2, 10.0);
        assert!(chordal(&f.evaluate(&x).unwrap(), &g.evaluate(&x).unwrap()) <= 1e-12);
    }
}

#[test]
fn translate_by_zero_and_back() {
    let f = map(MapDescriptor::sine());
    let g0 = translate(&f, &[0.0, 0.0]).unwrap();
    let a = [1.7, -0.4];
    let back = translate(&translate(&f, &a).unwrap(), &[-1.7, 0.4]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let x = random_in_ball(&mut rng, 2, 3.0);
        assert_eq!(f.evaluate(&x).unwrap(), g0.evaluate(&x).unwrap());
        assert!(chordal(&f.evaluate(&x).unwrap(), &back.evaluate(&x).unwrap()) <= 1e-12);
    }
}

#[test]
fn p_rescale_scales() {
    let f = map(MapDescriptor::exp_square());
    let a = [6.0, 8.0];
    let g2 = p_rescale(&f, &a, 2.0).unwrap();
    let t = translate(&f, &a).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            for k in 0..10 {
                let x = [i as f64 * 0.1 - 0.5 + k as f64 * 0.003, j as f64 * 0.1 - 0.5];
                assert!(chordal(&g2.evaluate(&x).unwrap(), &t.evaluate(&x).unwrap()) <= 1e-12);
            }
        }
    }
    let g1 = p_rescale(&f, &a, 1.0).unwrap();
    assert_eq!(g1.evaluate(&[1.0, 0.0]).unwrap(), f.evaluate(&[16.0, 8.0]).unwrap());
    assert_eq!(g1.meta().scale_factor, Some(10.0));
    let g3 = p_rescale(&f, &a, 3.0).unwrap();
    assert_eq!(g3.evaluate(&[1.0, 0.0]).unwrap(), f.evaluate(&[6.1, 8.0]).unwrap());
    assert!(p_rescale(&f, &[0.0, 0.0], 2.0).is_err());
    assert!(p_rescale(&f, &a, 0.5).is_err());
}

#[test]
fn map_transform_argument_is_exact() {
    let f = map(MapDescriptor::exponential());
    let t = MapTransform::new(f.clone(), vec![3.0, 4.0], 1.5).unwrap();
    let g = t.to_mapping();
    let x = [0.3, -0.2];
    assert_eq!(g.evaluate(&x).unwrap(), f.evaluate(&t.argument(&x)).unwrap());
    assert_eq!(t.direction(), vec![0.6, 0.8]);
}

#[test]
fn enumerate_exponential_examples() {
    let f = map(MapDescriptor::exponential());
    let pts = enumerate_apoints(&f, &fin(&[1.0, 0.0]), &[0.0, 0.0], 10.0).unwrap();
    let locs: Vec<(f64, f64)> = pts.iter().map(|p| (p.location[0], p.location[1])).collect();
    assert_eq!(pts.len(), 3);
    assert!(pts.iter().all(|p| p.multiplicity == 1));
    for (want, got) in [-TAU, 0.0, TAU].iter().zip(&locs) {
        assert!(got.0.abs() < 1e-15 && (got.1 - want).abs() < 1e-12);
    }
    assert!(enumerate_apoints(&f, &fin(&[0.0, 0.0]), &[3.0, 1.0], 50.0).unwrap().is_empty());
    assert!(enumerate_apoints(&f, &ExtendedPoint::Infinity, &[3.0, 1.0], 50.0).unwrap().is_empty());
}

#[test]
fn enumerate_power_double_root() {
    let f = map(MapDescriptor::power(2));
    let pts = enumerate_apoints(&f, &fin(&[0.0, 0.0]), &[0.0, 0.0], 1.0).unwrap();
    assert_eq!(pts, vec![APoint { location: vec![0.0, 0.0], multiplicity: 2 }]);
}

#[test]
fn enumerate_rejects_bad_arguments() {
    let f = map(MapDescriptor::exponential());
    assert!(enumerate_apoints(&f, &fin(&[1.0, 0.0]), &[0.0, 0.0], 0.0).is_err());
    assert!(enumerate_apoints(&f, &fin(&[1.0, 0.0, 0.0]), &[0.0, 0.0], 1.0).is_err());
    let z = map(MapDescriptor::zorich());
    assert!(matches!(
        enumerate_apoints(&z, &fin(&[1.0, 0.0, 0.0]), &[0.0, 0.0, 0.0], 1.0),
        Err(Error::NoEnumerator(_))
    ));
}

fn zoo_with_jacobian() -> Vec<Mapping> {
    vec![
        map(MapDescriptor::exponential()),
        map(MapDescriptor::sine()),
        map(MapDescriptor::exp_square()),
        map(MapDescriptor::power(3)),
        map(MapDescriptor::rational(&[1.0, -2.0, 0.0, 1.0], &[2.0, 0.5, 1.0])),
        map(MapDescriptor::elliptic()),
        map(MapDescriptor::winding(3, 2)),
        map(MapDescriptor::winding(2, 3)),
    ]
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for f in zoo_with_jacobian() {
        let mut checked = 0;
        while checked < 100 {
            let x = random_in_ball(&mut rng, f.dim(), 2.0);
            let Ok(ExtendedPoint::Finite(v)) = f.evaluate(&x) else { continue };
            if norm(&v) > 1e3 || norm(&x[..2]) < 0.05 {
                continue;
            }
            let j = f.jacobian(&x).unwrap();
            let fd = fd_det(&f, &x);
            assert!((j - fd).abs() <= 1e-4 * j.abs().max(1e-3), "{}: J={j} fd={fd} at {x:?}", f.label());
            checked += 1;
        }
    }
}

#[test]
fn chordal_density_matches_jacobian_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for f in zoo_with_jacobian() {
        for _ in 0..100 {
            let x = random_in_ball(&mut rng, f.dim(), 3.0);
            let d = f.chordal_density(&x).unwrap();
            let direct = match f.evaluate(&x).unwrap() {
                ExtendedPoint::Infinity => continue,
                ExtendedPoint::Finite(v) => {
                    let r = norm(&v);
                    f.jacobian(&x).unwrap() / (1.0 + r * r).powi(f.dim() as i32)
                }
            };
            assert!((d - direct).abs() <= 1e-9 * direct.max(1e-12), "{}", f.label());
        }
    }
}

#[test]
fn enumerated_points_reevaluate_to_the_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let maps = vec![
        map(MapDescriptor::exponential()),
        map(MapDescriptor::sine()),
        map(MapDescriptor::exp_square()),
        map(MapDescriptor::power(4)),
        map(MapDescriptor::rational(&[1.0, -2.0, 0.0, 1.0, 0.0, 0.3], &[2.0, 0.5, 1.0])),
        map(MapDescriptor::elliptic()),
        map(MapDescriptor::winding(3, 2)),
    ];
    for f in &maps {
        let mut total = 0;
        for _ in 0..30 {
            let a = crate::sphere::sample_chordal_measure(2, &mut rng);
            let pts = enumerate_apoints(f, &a, &[0.5, -0.3], 6.0).unwrap();
            for p in &pts {
                assert!(dist(&p.location, &[0.5, -0.3]) < 6.0);
                let v = f.evaluate(&p.location).unwrap();
                assert!(chordal(&v, &a) <= 1e-8, "{}: {v:?} vs {a:?}", f.label());
            }
            total += pts.len();
        }
        assert!(total > 0, "{}", f.label());
    }
}

/// Same kernel, enumerator hidden, to force the Newton fallback.
#[derive(Debug)]
struct Hidden(Arc<dyn MapKernel>);

impl MapKernel for Hidden {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval(&self, x: &[f64]) -> ExtendedPoint {
        self.0.eval(x)
    }
    fn holomorphic_parts(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        self.0.holomorphic_parts(z)
    }
    fn is_meromorphic(&self) -> bool {
        true
    }
}

#[test]
fn newton_fallback_agrees_with_analytic_enumerators() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for d in [MapDescriptor::exponential(), MapDescriptor::sine(), MapDescriptor::elliptic(), MapDescriptor::power(3)] {
        let f = map(d);
        let hidden = Mapping::new("hidden", 1.0, Arc::new(Hidden(f.kernel().clone()))).unwrap();
        for _ in 0..5 {
            let a = ExtendedPoint::Finite(vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
            let c = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let exact = enumerate_apoints(&f, &a, &c, 4.0).unwrap();
            let found = enumerate_apoints(&hidden, &a, &c, 4.0).unwrap();
            assert_eq!(exact.len(), found.len(), "{}", f.label());
            for p in &exact {
                let q = found
                    .iter()
                    .min_by(|x, y| dist(&x.location, &p.location).total_cmp(&dist(&y.location, &p.location)))
                    .unwrap();
                assert_eq!(p.multiplicity, q.multiplicity);
                assert!(dist(&p.location, &q.location) < 1e-7, "{}: {p:?} vs {q:?}", f.label());
            }
        }
    }
}

#[test]
fn elliptic_periodicity() {
    let f = map(MapDescriptor::elliptic());
    let periods = f.meta().periods.clone();
    assert_eq!(periods.len(), 2);
    assert_eq!(f.meta().cell_volume, Some(4.0));
    assert_eq!(f.meta().degree_per_cell, Some(2));
    for i in 0..32 {
        for j in 0..32 {
            let x = [-7.0 + 14.0 * i as f64 / 31.0 + 0.013, -7.0 + 14.0 * j as f64 / 31.0 + 0.007];
            for p in &periods {
                let y = [x[0] + p[0], x[1] + p[1]];
                assert!(q(&f, &x, &y) <= 1e-8, "{x:?}");
            }
        }
    }
}

#[test]
fn elliptic_matches_inverse_integral() {
    // independent oracle: u(s) = ∫₀ˢ dt / √((1 − t²)(1 − t²/2)) by composite
    // Simpson, with K(1/√2) = 1.8540746773013719; sn²(u) = s² at z = u / K.
    let f = map(MapDescriptor::elliptic());
    let k_full = 1.854_074_677_301_371_9;
    for s in [0.1, 0.35, 0.6, 0.85] {
        let n = 20_000;
        let h = s / n as f64;
        let g = |t: f64| 1.0 / ((1.0 - t * t) * (1.0 - 0.5 * t * t)).sqrt();
        let mut acc = g(0.0) + g(s);
        for i in 1..n {
            acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let u = acc * h / 3.0;
        let v = f.evaluate(&[u / k_full, 0.0]).unwrap();
        let c = v.coords().unwrap();
        assert!((c[0] - s * s).abs() < 1e-10 && c[1].abs() < 1e-12, "s={s}: {c:?}");
    }
    assert_eq!(f.evaluate(&[0.0, 0.0]).unwrap(), fin(&[0.0, 0.0]));
    assert_eq!(f.evaluate(&[0.0, 1.0]).unwrap(), ExtendedPoint::Infinity);
    let one = f.evaluate(&[1.0, 0.0]).unwrap();
    assert!(chordal(&one, &fin(&[1.0, 0.0])) < 1e-14);
}

#[test]
fn elliptic_has_two_points_per_cell() {
    let f = map(MapDescriptor::elliptic());
    // half-open cell [0, 2)² via a ball and a filter
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let a = crate::sphere::sample_chordal_measure(2, &mut rng);
        let pts = enumerate_apoints(&f, &a, &[1.0, 1.0], 1.5).unwrap();
        let m: u32 = pts
            .iter()
            .filter(|p| (0.0..2.0).contains(&p.location[0]) && (0.0..2.0).contains(&p.location[1]))
            .map(|p| p.multiplicity)
            .sum();
        assert_eq!(m, 2, "{a:?}");
    }
    // critical value: double point
    let pts = enumerate_apoints(&f, &fin(&[1.0, 0.0]), &[1.0, 0.0], 0.5).unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].multiplicity, 2);
}

#[test]
fn zorich_periodicity_and_growth() {
    let f = map(MapDescriptor::zorich());
    assert_eq!((f.dim(), f.distortion()), (3, 4.0));
    for i in 0..10 {
        for j in 0..10 {
            for k in 0..10 {
                let x = [-3.0 + 0.61 * i as f64, -3.0 + 0.59 * j as f64, -2.0 + 0.4 * k as f64];
                for p in &f.meta().periods {
                    let y: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + b).collect();
                    assert!(q(&f, &x, &y) <= 1e-8);
                }
                let v = f.evaluate(&x).unwrap();
                assert!((v.norm() - x[2].exp()).abs() <= 1e-12 * x[2].exp());
            }
        }
    }
}

#[test]
fn winding_distortion_bookkeeping() {
    assert_eq!(map(MapDescriptor::winding(2, 3)).distortion(), 4.0);
    assert_eq!(map(MapDescriptor::winding(3, 2)).distortion(), 3.0);
    let d = MapDescriptor::parse(r#"{"kind":"winding","k":2,"dim":3,"distortion":2.5}"#).unwrap();
    assert_eq!(map(d).distortion(), 2.5);
    let f = map(MapDescriptor::winding(2, 2));
    let pts = enumerate_apoints(&f, &fin(&[0.0, 0.0]), &[0.0, 0.0], 1.0).unwrap();
    assert_eq!(pts[0].multiplicity, 2);
}

#[test]
fn constant_map_behaviour() {
    let f = map(MapDescriptor::constant(fin(&[2.0, 1.0])));
    assert_eq!(f.evaluate(&[5.0, 5.0]).unwrap(), fin(&[2.0, 1.0]));
    assert_eq!(f.jacobian(&[0.0, 0.0]), Some(0.0));
    assert!(enumerate_apoints(&f, &fin(&[0.0, 0.0]), &[0.0, 0.0], 1.0).unwrap().is_empty());
    assert!(matches!(
        enumerate_apoints(&f, &fin(&[2.0, 1.0]), &[0.0, 0.0], 1.0),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn rational_poles_and_zeros() {
    // (z² + 1)/(z − 2)
    let f = map(MapDescriptor::rational(&[1.0, 0.0, 1.0], &[-2.0, 1.0]));
    assert_eq!(f.evaluate(&[2.0, 0.0]).unwrap(), ExtendedPoint::Infinity);
    let zeros = enumerate_apoints(&f, &fin(&[0.0, 0.0]), &[0.0, 0.0], 3.0).unwrap();
    assert_eq!(zeros.len(), 2);
    let poles = enumerate_apoints(&f, &ExtendedPoint::Infinity, &[0.0, 0.0], 3.0).unwrap();
    assert_eq!(poles.len(), 1);
    assert!(dist(&poles[0].location, &[2.0, 0.0]) < 1e-12);
    assert!(make_zoo_map(&MapDescriptor::rational(&[1.0], &[0.0])).is_err());
}

#[test]
fn descriptor_parsing() {
    let d = MapDescriptor::parse(r#"{"kind":"rational","numerator":[1,[0,2]],"denominator":[1],"pre":{"scale":2}}"#).unwrap();
    let f = map(d.clone());
    // 1 + 2i·(2z) at z = 1
    assert_eq!(f.evaluate(&[1.0, 0.0]).unwrap(), fin(&[1.0, 4.0]));
    let round = serde_json::to_string(&d).unwrap();
    assert_eq!(MapDescriptor::parse(&round).unwrap(), d);
    assert!(matches!(MapDescriptor::parse(r#"{"kind":"bessel"}"#), Err(Error::UnknownKind(k)) if k == "bessel"));
    assert!(MapDescriptor::parse(r#"{"kind":"exponential","k":2}"#).is_err());
    assert!(MapDescriptor::parse(r#"{"kind":"exponential","pre":{"scale":1,"bogus":0}}"#).is_err());
    let e = MapDescriptor::parse(r#"{"kind":"elliptic"}"#).unwrap();
    assert_eq!(e, MapDescriptor::elliptic());
    let post = MapDescriptor::parse(r#"{"kind":"identity","post":{"scale":3,"shift":[1,0]}}"#).unwrap();
    assert_eq!(map(post).evaluate(&[1.0, 1.0]).unwrap(), fin(&[4.0, 3.0]));
    let c = MapDescriptor::parse(r#"{"kind":"constant","value":"inf","dim":3}"#).unwrap();
    assert_eq!(map(c).dim(), 3);
}

#[test]
fn catalog_lists_every_kind() {
    let cat = catalog();
    for kind in ["exponential", "sine", "exp_square", "identity", "power", "rational", "constant", "elliptic", "winding", "zorich"] {
        assert!(cat.iter().any(|e| e.kind == kind), "{kind}");
    }
    let z = cat.iter().find(|e| e.kind == "zorich").unwrap();
    assert_eq!(z.dim, "3");
}

#[test]
fn dedup_merges_close_points() {
    let pts = vec![
        APoint { location: vec![1.0, 0.0], multiplicity: 1 },
        APoint { location: vec![1.0 + 3e-7, 0.0], multiplicity: 1 },
        APoint { location: vec![-1.0, 0.0], multiplicity: 1 },
    ];
    let d = dedup(pts);
    assert_eq!(d.len(), 2);
    assert_eq!(d[1].multiplicity, 2);
    let _ = PI;
}
