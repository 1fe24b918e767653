//! Acceptance gates. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any gate fails.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qrlab_core::counting::{
    afr_domain, afr_domain_curve, afr_sphere, afr_sphere_curve, count_apoints, dyadic_radii, growth_fit,
    min_oscillation, multiplicity_sweep, oscillation_profile, CountMethod,
};
use qrlab_core::hoelder::{
    p_yosida_indicator, quotient_profile, rescale_identity_check, yosida_indicator, HoelderConfig, Verdict,
};
use qrlab_core::sequence::{
    both_zero_check, closeness, mp_detect, mu_p_cover_check, separation_statistic, Agreement, CoverOptions,
    MpOptions, MpVerdict, MuPVerdict, PointSequence,
};
use qrlab_core::sphere::{chordal_distance, lambda_n, ExtendedPoint};
use qrlab_core::zoo::{make_zoo_map, MapDescriptor, Mapping};

struct Outcome {
    pass: bool,
    detail: String,
}

fn map(d: MapDescriptor) -> Mapping {
    make_zoo_map(&d).expect("zoo map")
}

fn c(re: f64, im: f64) -> ExtendedPoint {
    ExtendedPoint::from_complex(Complex64::new(re, im))
}

fn simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = g(a) + g(b);
    for i in 1..n {
        s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn square_grid(lo: f64, hi: f64, step: f64) -> Vec<Vec<f64>> {
    let k = ((hi - lo) / step).round() as usize;
    let mut g = Vec::with_capacity((k + 1) * (k + 1));
    for i in 0..=k {
        for j in 0..=k {
            g.push(vec![lo + i as f64 * step, lo + j as f64 * step]);
        }
    }
    g
}

fn cube_grid(lo: f64, hi: f64, step: f64) -> Vec<Vec<f64>> {
    let k = ((hi - lo) / step).round() as usize;
    let mut g = Vec::new();
    for i in 0..=k {
        for j in 0..=k {
            for l in 0..=k {
                g.push(vec![lo + i as f64 * step, lo + j as f64 * step, lo + l as f64 * step]);
            }
        }
    }
    g
}

/// Points `t·(1,…,1)/√n` for `t` log-spaced over `[lo, hi]`.
fn diagonal_ray(n: usize, lo: f64, hi: f64, count: usize) -> Vec<Vec<f64>> {
    let s = 1.0 / (n as f64).sqrt();
    (0..count)
        .map(|i| {
            let t = lo * (hi / lo).powf(i as f64 / (count - 1) as f64);
            vec![t * s; n]
        })
        .collect()
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> ExtendedPoint {
    if rng.random::<f64>() < 0.02 {
        return ExtendedPoint::Infinity;
    }
    let r = 10f64.powf(rng.random_range(-4.0..8.0));
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    ExtendedPoint::finite(v.iter().map(|x| x / s * r).collect()).unwrap()
}

fn c1_chordal() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..100_000 {
        let n = 2 + i % 2;
        let (a, b, z) = (random_point(&mut rng, n), random_point(&mut rng, n), random_point(&mut rng, n));
        let ac = chordal_distance(&a, &z).unwrap();
        let ab = chordal_distance(&a, &b).unwrap();
        let bc = chordal_distance(&b, &z).unwrap();
        worst = worst.max(ac - ab - bc);
    }
    let inf = chordal_distance(&ExtendedPoint::origin(2), &ExtendedPoint::Infinity).unwrap();
    let anti = chordal_distance(&c(1.0, 0.0), &c(-1.0, 0.0)).unwrap();
    Outcome {
        pass: worst <= 1e-12 && inf == 1.0 && anti == 1.0,
        detail: format!("max triangle excess {worst:.2e}, q(0,inf) = {inf}, q(e1,-e1) = {anti}"),
    }
}

fn c2_lambda() -> Outcome {
    // λ_n = |S^{n-1}| ∫₀^∞ t^{n-1}(1+t²)^{-n} dt, with t = tan θ
    let radial = |n: i32| simpson(|t: f64| (t.sin() * t.cos()).powi(n - 1), 0.0, PI / 2.0, 2000);
    let o2 = TAU * radial(2);
    let o3 = 4.0 * PI * radial(3);
    let (l2, l3) = (lambda_n(2).unwrap(), lambda_n(3).unwrap());
    let e2 = (l2 - PI).abs() / PI;
    let e3 = (l3 - PI * PI / 4.0).abs() / (PI * PI / 4.0);
    let q2 = (l2 - o2).abs() / o2;
    let q3 = (l3 - o3).abs() / o3;
    Outcome {
        pass: e2 < 1e-8 && e3 < 1e-8 && q2 < 1e-8 && q3 < 1e-8,
        detail: format!("lambda_2 rel err {e2:.1e} (quadrature {q2:.1e}), lambda_3 rel err {e3:.1e} (quadrature {q3:.1e})"),
    }
}

fn c3_marty() -> Outcome {
    let e = map(MapDescriptor::exponential());
    let cfg = HoelderConfig::for_mapping(&e);
    let rep = yosida_indicator(&e, &square_grid(-20.0, 20.0, 0.5), &cfg).unwrap();
    let exp_ok = (0.49..=0.51).contains(&rep.sup) && rep.verdict == Verdict::Consistent;

    let s = map(MapDescriptor::exp_square());
    let axis: Vec<Vec<f64>> = (0..=40).map(|i| vec![0.5 * i as f64, 0.0]).collect();
    let sq = yosida_indicator(&s, &axis, &cfg).unwrap();
    let at20 = quotient_profile(&s, &[20.0, 0.0], &cfg).unwrap().q_hat;
    let sq_ok = sq.verdict == Verdict::Evidence && sq.sup > 1e3;
    Outcome {
        pass: exp_ok && sq_ok,
        detail: format!(
            "exponential sup {:.5} ({:?}); exp_square on [0,20]e1: sup {:.3e} at {:?}, Q at 20e1 = {:.3e}, verdict {:?}",
            rep.sup, rep.verdict, sq.sup, sq.witness, at20, sq.verdict
        ),
    }
}

fn c4_rescale() -> Outcome {
    let maps = [
        map(MapDescriptor::exponential()),
        map(MapDescriptor::sine()),
        map(MapDescriptor::elliptic()),
        map(MapDescriptor::rational(&[1.0, -2.0, 0.0, 1.0], &[2.0, 0.5, 1.0])),
        map(MapDescriptor::winding(3, 3)),
        map(MapDescriptor::zorich()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let f = &maps[i % maps.len()];
        let n = f.dim();
        let r = 10f64.powf(rng.random_range(0.0..3.0));
        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a: Vec<f64> = dir.iter().map(|x| x / s * r).collect();
        let p = rng.random_range(1.0..3.0);
        let delta = 10f64.powf(rng.random_range(-4.0..-1.0));
        let dirs = HoelderConfig::for_mapping(f).with_seed(i as u64).direction_set(n);
        worst = worst.max(rescale_identity_check(f, &a, p, delta, &dirs).unwrap());
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max relative discrepancy {worst:.2e} over 100 tuples"),
    }
}

fn c5_p2_reduction() -> Outcome {
    let kinds = [
        MapDescriptor::exponential(),
        MapDescriptor::sine(),
        MapDescriptor::exp_square(),
        MapDescriptor::identity(),
        MapDescriptor::power(3),
        MapDescriptor::rational(&[1.0, -2.0, 0.0, 1.0], &[2.0, 0.5, 1.0]),
        MapDescriptor::constant(c(0.5, -0.5)),
        MapDescriptor::elliptic(),
        MapDescriptor::winding(2, 3),
        MapDescriptor::zorich(),
    ];
    let mut rows = Vec::new();
    let mut pass = true;
    for d in kinds {
        let f = map(d);
        let n = f.dim();
        let cfg = HoelderConfig::for_mapping(&f);
        let anchors = diagonal_ray(n, 20.0, 2000.0, 20);
        let mut grid = if n == 2 { square_grid(-20.0, 20.0, 0.5) } else { cube_grid(-20.0, 20.0, 2.5) };
        grid.extend(anchors.iter().cloned());
        let y = yosida_indicator(&f, &grid, &cfg).unwrap();
        let py = p_yosida_indicator(&f, 2.0, &anchors, &cfg).unwrap();
        pass &= y.verdict == py.verdict;
        rows.push(format!("{} {:?}/{:?}", f.label(), y.verdict, py.verdict));
    }
    Outcome {
        pass,
        detail: rows.join(", "),
    }
}

fn ray_pair(rng: &mut ChaCha8Rng, convergent: bool) -> (PointSequence, PointSequence, f64) {
    let th: f64 = rng.random_range(0.0..TAU);
    let (u, v) = ([th.cos(), th.sin()], [-th.sin(), th.cos()]);
    let s = rng.random_range(0.5..2.0);
    let p = rng.random_range(1.0..3.0);
    let k = rng.random_range(0.5..2.0);
    let x: Vec<Vec<f64>> = (1..=1000).map(|m| vec![s * m as f64 * u[0], s * m as f64 * u[1]]).collect();
    let y: Vec<Vec<f64>> = x
        .iter()
        .enumerate()
        .map(|(i, xm)| {
            let m = (i + 1) as f64;
            let w = (s * m).powf(2.0 - p);
            let off = if convergent { k / (m * m) * w } else { k * w };
            vec![xm[0] + off * v[0], xm[1] + off * v[1]]
        })
        .collect();
    (
        PointSequence::new(x, "s*m*u").unwrap(),
        PointSequence::new(y, "s*m*u + offset*v").unwrap(),
        p,
    )
}

fn c6_both_zero() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut disagree, mut wrong) = (0, 0);
    for i in 0..50 {
        let convergent = i < 25;
        let (x, y, p) = ray_pair(&mut rng, convergent);
        let r = both_zero_check(&x, &y, p, 1e-3).unwrap();
        if r.verdict == Agreement::Disagree {
            disagree += 1;
        }
        if convergent != r.both_below {
            wrong += 1;
        }
    }
    Outcome {
        pass: disagree == 0 && wrong == 0,
        detail: format!("{disagree} disagreements, {wrong} pairs on the unexpected side of epsilon"),
    }
}

fn exp_count_oracle(a: Complex64, r: f64) -> u64 {
    let l = a.ln();
    (-1000..=1000)
        .filter(|&k| (l + Complex64::new(0.0, TAU * k as f64)).norm() < r)
        .count() as u64
}

fn c7_counting() -> Outcome {
    let e = map(MapDescriptor::exponential());
    let one = c(1.0, 0.0);
    let n10 = count_apoints(&e, &[0.0, 0.0], 10.0, &one, CountMethod::Auto).unwrap().count;
    let n2pi = count_apoints(&e, &[0.0, 0.0], TAU - 0.01, &one, CountMethod::Auto).unwrap().count;
    let rat = map(MapDescriptor::rational(
        &[1.0, -2.0, 0.0, 1.0, 0.0, 0.3],
        &[2.0, 0.5, 1.0, 0.0, -0.2],
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    let mut skipped = 0;
    for (mi, f) in [&e, &rat].into_iter().enumerate() {
        let mut done = 0;
        while done < 100 {
            let a = Complex64::from_polar(rng.random_range(0.05..5.0), rng.random_range(0.0..TAU));
            let r = rng.random_range(0.5..20.0);
            let y = ExtendedPoint::from_complex(a);
            let ap = match count_apoints(f, &[0.0, 0.0], r, &y, CountMethod::ArgumentPrinciple) {
                Ok(s) => s.count,
                Err(_) => {
                    skipped += 1;
                    continue;
                }
            };
            let an = count_apoints(f, &[0.0, 0.0], r, &y, CountMethod::AnalyticEnumeration).unwrap().count;
            if an != ap || (mi == 0 && an != exp_count_oracle(a, r)) {
                mismatches += 1;
            }
            done += 1;
        }
    }
    Outcome {
        pass: n10 == 3 && n2pi == 1 && mismatches == 0,
        detail: format!(
            "n(0,10,1) = {n10}, n(0,2pi-0.01,1) = {n2pi}, {mismatches} mismatches over 200 balls ({skipped} margin redraws)"
        ),
    }
}

fn c8_afr() -> Outcome {
    let e = map(MapDescriptor::exponential());
    let el = map(MapDescriptor::elliptic());
    let big = afr_sphere(&e, 40.0, 100_000, 8).unwrap();
    let target = 40.0 / PI;
    let rel = (big.value - target).abs() / target;
    let mut pass = rel < 0.05;
    let mut parts = vec![format!("A(40) = {:.4} vs 40/pi = {target:.4} ({:.2}%)", big.value, 100.0 * rel)];
    for (name, f) in [("exponential", &e), ("elliptic", &el)] {
        for r in [5.0, 10.0] {
            let s = afr_sphere(f, r, 100_000, 8).unwrap().value;
            let d = afr_domain(f, r, 100_000, 8).unwrap().value;
            let gap = (s - d).abs() / d;
            pass &= gap < 0.03;
            parts.push(format!("{name} r={r}: sphere {s:.4} domain {d:.4} ({:.2}%)", 100.0 * gap));
        }
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn c9_growth() -> Outcome {
    let e = map(MapDescriptor::exponential());
    let ce = afr_sphere_curve(&e, &dyadic_radii(5.0, 5), 20_000, 9).unwrap();
    let fe = growth_fit(&ce).unwrap();
    let el = map(MapDescriptor::elliptic());
    let cd = afr_domain_curve(&el, &[0.0, 0.0], &dyadic_radii(1.25, 5), 100_000, 9).unwrap();
    let fd = growth_fit(&cd).unwrap();
    let meta = el.meta();
    let limit = meta.degree_per_cell.unwrap() as f64 * PI / meta.cell_volume.unwrap();
    let ratio = cd.values.last().unwrap() / cd.radii.last().unwrap().powi(2);
    let rel = (ratio - limit).abs() / limit;
    Outcome {
        pass: (fe.exponent - 1.0).abs() <= 0.1 && (fd.exponent - 2.0).abs() <= 0.1 && rel < 0.1,
        detail: format!(
            "exponential s = {:.4} (residual {:.1e}); elliptic s = {:.4} (residual {:.1e}), A(20)/400 = {ratio:.4} vs d*pi/|cell| = {limit:.4} ({:.2}%)",
            fe.exponent,
            fe.residual,
            fd.exponent,
            fd.residual,
            100.0 * rel
        ),
    }
}

fn seq(expr: &str) -> PointSequence {
    PointSequence::from_generator(expr, 2, 20).unwrap()
}

fn c10_battery() -> Outcome {
    let e = map(MapDescriptor::exponential());
    let s = map(MapDescriptor::exp_square());
    let id = map(MapDescriptor::identity());
    let rows: [(&str, &Mapping, &str); 4] = [
        ("exponential", &e, "m*e1"),
        ("exponential", &e, "-m*e1"),
        ("exp_square", &s, "m*e1"),
        ("identity", &id, "m*e1"),
    ];
    let mp_opts = MpOptions::default();
    let cov = CoverOptions::default();
    let mut agree = true;
    let mut evidence_rows = Vec::new();
    let mut cells = Vec::new();
    for (name, f, g) in rows {
        let x = seq(g);
        let mut row_evidence = false;
        for p in [1.5, 2.0, 3.0] {
            let mp = mp_detect(f, &x, p, 1.0, 500, 2, &mp_opts).unwrap();
            let mu = mu_p_cover_check(f, &x, p, &[1.0], 2, &cov).unwrap();
            let a = mp.verdict == MpVerdict::MpEvidence;
            let b = mu.verdict == MuPVerdict::MuPEvidence;
            agree &= a == b;
            row_evidence |= a;
            cells.push(format!("{name}[{g}] p={p}: {}{}", if a { "M" } else { "-" }, if b { "M" } else { "-" }));
        }
        if row_evidence {
            evidence_rows.push(format!("{name}[{g}]"));
        }
    }
    let only_exp_square = evidence_rows == vec!["exp_square[m*e1]".to_string()];

    // closeness transfer to a perturbed copy
    let x = seq("m*e1");
    let y = x.perturbed("m*e1 + e2/m", |m, _| vec![0.0, 1.0 / m as f64]).unwrap();
    let close = closeness(&y, &x, 2.0).unwrap();
    let vx = mp_detect(&s, &x, 2.0, 1.0, 500, 2, &mp_opts).unwrap().verdict;
    let vy = mp_detect(&s, &y, 2.0, 1.0, 500, 2, &mp_opts).unwrap().verdict;
    let transfer = vx != MpVerdict::MpEvidence || vy == MpVerdict::MpEvidence;
    Outcome {
        pass: agree && only_exp_square && transfer,
        detail: format!(
            "detectors agree on every cell: {agree}; evidence rows {:?}; perturbed copy {:?} -> {:?} (late offset {:.3}); cells (mp, mu): {}",
            evidence_rows,
            vx,
            vy,
            close.late_max,
            cells.join(", ")
        ),
    }
}

fn c11_separation() -> Outcome {
    let el = map(MapDescriptor::elliptic());
    let vals: Vec<ExtendedPoint> = [(0.3, 0.2), (-1.1, 0.7), (2.5, -0.4), (0.1, -1.9)]
        .iter()
        .map(|&(a, b)| c(a, b))
        .collect();
    let ell: Vec<f64> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&r| separation_statistic(&el, &vals, &[0.0, 0.0], r, 2.0).unwrap().value)
        .collect();
    let stable = ell.iter().all(|v| (v - ell[0]).abs() <= 1e-6 * ell[0]) && ell.iter().all(|v| *v >= 0.1);
    let s = map(MapDescriptor::exp_square());
    let pm = [c(1.0, 0.0), c(-1.0, 0.0)];
    let sq: Vec<f64> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&r| separation_statistic(&s, &pm, &[0.0, 0.0], r, 2.0).unwrap().value)
        .collect();
    let shrinking = sq.windows(2).all(|w| w[1] < w[0]) && sq[2] < 0.05;
    Outcome {
        pass: stable && shrinking,
        detail: format!(
            "elliptic at R = 10, 20, 40: {:.6} {:.6} {:.6}; exp_square: {:.5} {:.5} {:.5}",
            ell[0], ell[1], ell[2], sq[0], sq[1], sq[2]
        ),
    }
}

fn c12_oscillation() -> Outcome {
    let e = map(MapDescriptor::exponential());
    let prof = oscillation_profile(&e, &[0.025, 0.05, 0.1], &square_grid(-20.0, 20.0, 0.5)).unwrap();
    let small = prof.sup[2] <= 0.12 && prof.sup[0] < prof.sup[1] && prof.sup[1] < prof.sup[2];
    let el = map(MapDescriptor::elliptic());
    let cell = 8.0_f64.sqrt();
    let m = min_oscillation(&el, cell, &square_grid(-30.0, 30.0, 0.7)).unwrap();
    let s100 = multiplicity_sweep(&el, 0.5, 50.0, 100, 12).unwrap();
    let s1000 = multiplicity_sweep(&el, 0.5, 50.0, 1000, 12).unwrap();
    Outcome {
        pass: small && m.inf > 0.0 && s100.max == s1000.max,
        detail: format!(
            "exponential sup diameters at r = 0.025, 0.05, 0.1: {:.4} {:.4} {:.4}; elliptic min oscillation {:.4} at r = {cell:.3}; multiplicity max {} (100 pairs) vs {} (1000 pairs)",
            prof.sup[0], prof.sup[1], prof.sup[2], m.inf, s100.max, s1000.max
        ),
    }
}

fn main() {
    let gates: [(u32, &str, u64, fn() -> Outcome); 12] = [
        (1, "chordal metric suite", 1, c1_chordal),
        (2, "lambda_n closed form", 1, c2_lambda),
        (3, "Marty/Yosida gate", 30, c3_marty),
        (4, "rescaling identity", 10, c4_rescale),
        (5, "p=2 reduction", 60, c5_p2_reduction),
        (6, "both-zero battery", 10, c6_both_zero),
        (7, "counting exactness", 60, c7_counting),
        (8, "A_f(r) closed form and route agreement", 300, c8_afr),
        (9, "growth exponents", 600, c9_growth),
        (10, "M_p / mu_p cross-validation", 600, c10_battery),
        (11, "a-point separation", 120, c11_separation),
        (12, "oscillation and multiplicity bounds", 300, c12_oscillation),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, budget, gate) in gates {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let out = std::panic::catch_unwind(gate).unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
            ),
        });
        let dt = t0.elapsed();
        let in_time = dt <= Duration::from_secs(budget);
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} ({name}) [{:.2}s / {budget}s{}]: {}",
            if pass { "PASS" } else { "FAIL" },
            dt.as_secs_f64(),
            if in_time { "" } else { ", over budget" },
            out.detail
        );
    }
    println!("{failed} criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
