//! Experiment dispatch onto the core modules.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};

use qrlab_core::counting::{
    afr_domain_curve, afr_sphere_curve, count_apoints, growth_fit, min_oscillation, multiplicity_sweep,
    oscillation_profile, CountMethod,
};
use qrlab_core::hoelder::{p_yosida_indicator, q_field, yosida_indicator_with_path};
use qrlab_core::sequence::{
    both_zero_check, closeness, directed_dp, dp, mp_detect, mu_p_cover_check, separation_statistic, CoverOptions,
    MpOptions,
};
use qrlab_core::zoo::catalog;
use qrlab_core::{ExtendedPoint, Mapping};

use crate::config::{AfrRoute, CountMethodSpec, Experiment, ExperimentConfig};
use crate::report::{num, ExperimentReport, FileEntry, Outcome, Plot, Status, Table, Timing, Tool, REPORT_SCHEMA};
use crate::svg::{heatmap, line_plot, Series, Style};

struct Run {
    results: Map<String, Value>,
    accounting: Map<String, Value>,
    tables: Vec<Table>,
    plots: Vec<Plot>,
    plot: bool,
}

impl Run {
    fn put<T: Serialize>(&mut self, key: &str, v: &T) {
        self.results
            .insert(key.to_string(), serde_json::to_value(v).expect("result serializes"));
    }

    fn count(&mut self, key: &str, v: impl Into<Value>) {
        self.accounting.insert(key.to_string(), v.into());
    }

    fn plot(&mut self, name: &str, svg: impl FnOnce() -> String) {
        if self.plot {
            self.plots.push(Plot {
                name: name.to_string(),
                svg: svg(),
            });
        }
    }
}

fn point_cells(v: &ExtendedPoint, dim: usize) -> Vec<String> {
    match v.coords() {
        Some(c) => c.iter().map(|x| num(*x)).collect(),
        None => vec!["inf".to_string(); dim],
    }
}

fn coords(x: &[f64]) -> Vec<String> {
    x.iter().map(|c| num(*c)).collect()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

/// Runs a resolved config. Numerical failures are recorded in the report
/// together with the results gathered before the failure.
pub fn run_experiment(cfg: &ExperimentConfig) -> Outcome {
    let t0 = Instant::now();
    let mut run = Run {
        results: Map::new(),
        accounting: Map::new(),
        tables: Vec::new(),
        plots: Vec::new(),
        plot: cfg.output.plot,
    };
    let failure = match cfg.mapping() {
        Err(e) => Some(("config", e.to_string())),
        Ok(f) => dispatch(cfg, f.as_ref(), &mut run).err().map(|e| ("numerical", e.to_string())),
    };
    let mut files: Vec<FileEntry> = run
        .tables
        .iter()
        .map(|t| FileEntry {
            path: t.file_name(),
            schema: t.schema,
            columns: t.columns.clone(),
        })
        .collect();
    files.extend(run.plots.iter().map(|p| FileEntry {
        path: p.file_name(),
        schema: "svg",
        columns: Vec::new(),
    }));
    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA,
        tool: Tool {
            name: "qrlab",
            version: env!("CARGO_PKG_VERSION"),
        },
        experiment: cfg.experiment.name(),
        status: if failure.is_some() { Status::Failed } else { Status::Ok },
        failure: failure.map(|(kind, message)| crate::report::Failure { kind, message }),
        config: cfg.clone(),
        results: run.results,
        accounting: run.accounting,
        files,
        timing: Timing {
            wall_clock_seconds: t0.elapsed().as_secs_f64(),
        },
    };
    Outcome {
        report,
        tables: run.tables,
        plots: run.plots,
    }
}

fn dispatch(cfg: &ExperimentConfig, f: Option<&Mapping>, run: &mut Run) -> qrlab_core::Result<()> {
    let seed = cfg.seed;
    let need = || f.expect("resolved configs carry a map");
    match &cfg.experiment {
        Experiment::Qfield { grid, hoelder } => {
            let f = need();
            let pts = grid.points();
            let hc = hoelder.build(f, seed);
            run.count("grid_points", pts.len());
            run.count("quotient_evaluations", pts.len() * (1 + hc.directions * hc.ladder.len()));
            let q = q_field(f, &pts, &hc)?;
            let i = argmax(&q);
            let min = q.iter().copied().fold(f64::INFINITY, f64::min);
            run.put(
                "q_field",
                &json!({
                    "alpha": hc.alpha,
                    "ladder": hc.ladder,
                    "directions": hc.directions,
                    "direction_seed": hc.seed,
                    "points": pts.len(),
                    "max": q[i],
                    "argmax": pts[i],
                    "min": min,
                }),
            );
            let mut cols = Table::coordinate_columns("x", f.dim());
            cols.push("q_hat".into());
            let mut t = Table::with_columns("qfield", "qfield/1", cols);
            for (x, v) in pts.iter().zip(&q) {
                let mut row = coords(x);
                row.push(num(*v));
                t.push(row);
            }
            run.tables.push(t);
            if f.dim() == 2 {
                let c = grid.center.clone().unwrap_or_default();
                let half = (grid.side() / 2) as f64 * grid.step.unwrap_or(1.0);
                let side = grid.side();
                let label = f.label().to_string();
                run.plot("qfield", || {
                    heatmap(
                        &format!("Q-field of {label}"),
                        side,
                        [c[0] - half, c[1] - half],
                        [c[0] + half, c[1] + half],
                        &q,
                    )
                });
            }
        }
        Experiment::Yosida { grid, hoelder, path } => {
            let f = need();
            let pts = grid.points();
            let hc = hoelder.build(f, seed);
            let path_pts = path.as_ref().map(|r| r.points());
            let evals = pts.len() + path_pts.as_ref().map_or(0, Vec::len);
            run.count("grid_points", pts.len());
            run.count("quotient_evaluations", evals * (1 + hc.directions * hc.ladder.len()));
            let rep = yosida_indicator_with_path(f, &pts, path_pts.as_deref(), &hc)?;
            run.put("yosida_indicator", &rep);
            if let (Some(trend), Some(pp)) = (&rep.trend, &path_pts) {
                let mut cols = vec!["t".to_string()];
                cols.extend(Table::coordinate_columns("x", f.dim()));
                cols.push("q_hat".into());
                let mut t = Table::with_columns("yosida_path", "yosida_path/1", cols);
                let mut pts_plot = Vec::new();
                for (x, v) in pp.iter().zip(&trend.values) {
                    let tt = qrlab_core::sphere::norm(x);
                    let mut row = vec![num(tt)];
                    row.extend(coords(x));
                    row.push(num(*v));
                    t.push(row);
                    pts_plot.push((tt, *v));
                }
                run.tables.push(t);
                run.plot("yosida_path", || {
                    line_plot(
                        "Q-hat along the path",
                        "|x|",
                        "Q-hat",
                        true,
                        true,
                        &[Series::new("Q-hat", pts_plot, Style::LineMarkers)],
                    )
                });
            }
        }
        Experiment::Pyosida { p, anchors, hoelder } => {
            let f = need();
            let hc = hoelder.build(f, seed);
            let pts = anchors.points();
            run.count("anchors", pts.len());
            run.count("quotient_evaluations", pts.len() * (1 + hc.directions * hc.ladder.len()));
            let rep = p_yosida_indicator(f, *p, &pts, &hc)?;
            run.put("p_yosida_indicator", &rep);
            let mut cols = vec!["modulus".to_string(), "value".to_string()];
            cols.extend(Table::coordinate_columns("a", f.dim()));
            let mut t = Table::with_columns("pyosida", "pyosida/1", cols);
            for e in &rep.entries {
                let mut row = vec![num(e.modulus), num(e.value)];
                row.extend(coords(&e.anchor));
                t.push(row);
            }
            run.tables.push(t);
            let pts_plot: Vec<(f64, f64)> = rep.entries.iter().map(|e| (e.modulus, e.value)).collect();
            run.plot("pyosida", || {
                line_plot(
                    &format!("p-Yosida quantity, p = {p}"),
                    "|a|",
                    "|a|^((2-p)α) Q-hat(a)",
                    true,
                    true,
                    &[Series::new("anchors", pts_plot, Style::LineMarkers)],
                )
            });
        }
        Experiment::Seqdist { x, y, p, epsilon } => {
            let (x, y) = (x.build()?, y.build()?);
            run.count("points_per_sequence", x.truncation());
            let fwd = directed_dp(&x, &y, *p)?;
            let bwd = directed_dp(&y, &x, *p)?;
            let sym = dp(&x, &y, *p)?;
            run.put("directed_dp_xy", &fwd);
            run.put("directed_dp_yx", &bwd);
            run.put("dp", &sym);
            let bz = both_zero_check(&x, &y, *p, *epsilon)?;
            run.put("both_zero_check", &bz);
            let cl = closeness(&x, &y, *p)?;
            run.put("closeness", &cl);
            let mut t = Table::new(
                "dp_truncations",
                "dp_truncations/1",
                &["truncation", "forward", "forward_m", "forward_k", "backward", "backward_m", "backward_k"],
            );
            for ((tr, a), b) in bz.truncations.iter().zip(&bz.forward).zip(&bz.backward) {
                t.push(vec![
                    tr.to_string(),
                    num(a.value),
                    a.m.to_string(),
                    a.k.to_string(),
                    num(b.value),
                    b.m.to_string(),
                    b.k.to_string(),
                ]);
            }
            run.tables.push(t);
            let mut c = Table::new("closeness", "closeness/1", &["m", "ratio"]);
            for (i, r) in cl.ratios.iter().enumerate() {
                c.push(vec![(i + 1).to_string(), num(*r)]);
            }
            run.tables.push(c);
            let ratios: Vec<(f64, f64)> = cl.ratios.iter().enumerate().map(|(i, r)| ((i + 1) as f64, *r)).collect();
            run.plot("closeness", || {
                line_plot(
                    &format!("|x_m - y_m| / |x_m|^(2-p), p = {p}"),
                    "m",
                    "ratio",
                    true,
                    false,
                    &[Series::new("ratio", ratios, Style::Line)],
                )
            });
        }
        Experiment::Mpdetect {
            sequence,
            p,
            delta,
            grid_size,
            l,
            search,
        } => {
            let f = need();
            let x = sequence.build()?;
            let opts = MpOptions {
                eps_cover: search.eps_cover,
                eps_cluster: search.eps_cluster,
                cloud: search.cloud,
                starts: search.starts,
                max_evals: search.max_evals,
                seed,
            };
            let late = x.truncation() - x.late_start();
            run.count("late_balls", late);
            run.count("cloud_evaluations", late * search.cloud);
            run.count("search_budget", late * grid_size * search.starts * search.max_evals);
            let rep = mp_detect(f, &x, *p, *delta, *grid_size, *l, &opts)?;
            run.put("mp_detect", &rep);
            let mut cols = vec!["m".to_string(), "radius".to_string(), "coverage".to_string()];
            cols.extend(Table::coordinate_columns("x", f.dim()));
            let mut t = Table::with_columns("mp_coverage", "mp_coverage/1", cols);
            let mut cov = Vec::new();
            for (&m, &c) in rep.late_indices.iter().zip(&rep.ball_coverage) {
                // report indices are 1-based
                let xm = &x.points()[m - 1];
                let r = delta * qrlab_core::sphere::norm(xm).powf(2.0 - p);
                let mut row = vec![m.to_string(), num(r), num(c)];
                row.extend(coords(xm));
                t.push(row);
                cov.push((m as f64, c));
            }
            run.tables.push(t);
            let mut cols = vec!["index".to_string()];
            cols.extend(Table::coordinate_columns("w", f.dim()));
            cols.extend(["covered", "worst_distance", "exhausted", "companion_dp"].map(String::from));
            let mut v = Table::with_columns("mp_values", "mp_values/1", cols);
            for (i, e) in rep.values.iter().enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(point_cells(&e.value, f.dim()));
                row.push(e.covered.to_string());
                row.push(num(e.worst_distance));
                row.push(e.exhausted.to_string());
                row.push(e.companion_dp.map(num).unwrap_or_default());
                v.push(row);
            }
            run.tables.push(v);
            run.plot("mp_coverage", || {
                line_plot(
                    "Fraction of grid values attained per late ball",
                    "m",
                    "coverage",
                    false,
                    false,
                    &[Series::new("coverage", cov, Style::LineMarkers)],
                )
            });
        }
        Experiment::Mucheck {
            sequence,
            p,
            radii,
            l,
            cover,
        } => {
            let f = need();
            let x = sequence.build()?;
            let opts = CoverOptions {
                samples: cover.samples,
                max_evaluations: cover.max_evaluations,
                grid_values: cover.grid_values,
                eps_cluster: cover.eps_cluster,
                diameter_bounds: cover.diameter_bounds.clone(),
                seed,
            };
            let rep = mu_p_cover_check(f, &x, *p, radii, *l, &opts)?;
            run.count("late_balls", rep.balls.len());
            run.count("map_evaluations", rep.balls.iter().map(|b| b.evaluations).sum::<usize>());
            run.put("mu_p_cover_check", &rep);
            let mut t = Table::new(
                "mu_coverage",
                "mu_coverage/1",
                &[
                    "m",
                    "radius",
                    "covered_fraction",
                    "evaluations",
                    "saturated",
                    "diameter_bound",
                    "clusters",
                    "within_l",
                    "within_l_plus_one",
                ],
            );
            let mut cov = Vec::new();
            for b in &rep.balls {
                t.push(vec![
                    b.index.to_string(),
                    num(b.radius),
                    num(b.covered_fraction),
                    b.evaluations.to_string(),
                    b.saturated.to_string(),
                    num(b.diameter_bound),
                    b.clusters.len().to_string(),
                    b.within_l.to_string(),
                    b.within_l_plus_one.to_string(),
                ]);
                cov.push((b.index as f64, b.covered_fraction));
            }
            run.tables.push(t);
            run.plot("mu_coverage", || {
                line_plot(
                    "Covered fraction of the value grid per late ball",
                    "m",
                    "covered fraction",
                    false,
                    false,
                    &[Series::new("covered", cov, Style::LineMarkers)],
                )
            });
        }
        Experiment::Separation {
            values,
            center,
            radii,
            p,
        } => {
            let f = need();
            let c = center.clone().unwrap_or_else(|| vec![0.0; f.dim()]);
            let mut t = Table::new("separation", "separation/1", &["radius", "value", "apoints"]);
            let mut done = Vec::new();
            let mut pts = Vec::new();
            let mut failed = None;
            for &r in radii {
                let rep = match separation_statistic(f, values, &c, r, *p) {
                    Ok(rep) => rep,
                    Err(e) => {
                        failed = Some(e);
                        break;
                    }
                };
                t.push(vec![num(r), num(rep.value), rep.counts.iter().sum::<usize>().to_string()]);
                pts.push((r, rep.value));
                done.push(json!({ "radius": r, "report": rep }));
                run.put("separation_statistic", &done);
            }
            run.count("radii", radii.len());
            run.tables.push(t);
            if let Some(e) = failed {
                return Err(e);
            }
            run.plot("separation", || {
                line_plot(
                    &format!("a-point separation, p = {p}"),
                    "R",
                    "separation",
                    true,
                    true,
                    &[Series::new("inf distance ratio", pts, Style::LineMarkers)],
                )
            });
        }
        Experiment::Afr {
            method,
            center,
            radii,
            samples,
            fit,
            ..
        } => {
            let f = need();
            let radii = radii.clone().unwrap_or_default();
            run.count("samples", *samples);
            run.count("radii", radii.len());
            let mut curve = match method {
                AfrRoute::Sphere => afr_sphere_curve(f, &radii, *samples, seed)?,
                AfrRoute::Domain => {
                    let c = center.clone().unwrap_or_else(|| vec![0.0; f.dim()]);
                    afr_domain_curve(f, &c, &radii, *samples, seed)?
                }
            };
            run.put("afr_curve", &curve);
            let mut t = Table::new("afr_curve", "afr_curve/1", &["r", "afr", "std_error"]);
            for ((r, a), s) in curve.radii.iter().zip(&curve.values).zip(&curve.std_errors) {
                t.push(vec![num(*r), num(*a), num(*s)]);
            }
            run.tables.push(t);
            if *fit {
                curve.fit = Some(growth_fit(&curve)?);
                run.put("afr_curve", &curve);
            }
            let data: Vec<(f64, f64)> = curve.radii.iter().copied().zip(curve.values.iter().copied()).collect();
            let fitted = curve.fit.as_ref().map(|g| {
                let line = curve.radii.iter().map(|&r| (r, g.prefactor * r.powf(g.exponent))).collect();
                Series::new(format!("fit: s = {:.4}", g.exponent), line, Style::Line)
            });
            let label = f.label().to_string();
            run.plot("afr_curve", || {
                let mut s = vec![Series::new("A_f(r)", data, Style::Markers)];
                s.extend(fitted);
                line_plot(&format!("A_f(r) for {label}"), "r", "A_f(r)", true, true, &s)
            });
        }
        Experiment::Oscillation {
            radii,
            grid,
            min_radius,
        } => {
            let f = need();
            let pts = grid.points();
            run.count("grid_points", pts.len());
            let prof = oscillation_profile(f, radii, &pts)?;
            run.put("oscillation_profile", &prof);
            let mut cols = vec!["radius".to_string(), "sup_diameter".to_string()];
            cols.extend(Table::coordinate_columns("x", f.dim()));
            let mut t = Table::with_columns("oscillation", "oscillation/1", cols);
            for ((r, s), w) in prof.radii.iter().zip(&prof.sup).zip(&prof.witness) {
                let mut row = vec![num(*r), num(*s)];
                row.extend(coords(w));
                t.push(row);
            }
            run.tables.push(t);
            if let Some(r) = min_radius {
                run.put("min_oscillation", &min_oscillation(f, *r, &pts)?);
            }
            let data: Vec<(f64, f64)> = prof.radii.iter().copied().zip(prof.sup.iter().copied()).collect();
            run.plot("oscillation", || {
                line_plot(
                    "sup over the grid of the chordal diameter of f(B(x, r))",
                    "r",
                    "diameter",
                    true,
                    true,
                    &[Series::new("sup", data, Style::LineMarkers)],
                )
            });
        }
        Experiment::Nprobe {
            radius,
            half_width,
            samples,
            probes,
        } => {
            let f = need();
            run.count("sweep_pairs", *samples);
            run.count("probes", probes.len());
            let sw = multiplicity_sweep(f, *radius, *half_width, *samples, seed)?;
            run.put("multiplicity_sweep", &sw);
            let mut h = Table::new("nprobe_histogram", "nprobe_histogram/1", &["multiplicity", "pairs"]);
            for (k, c) in sw.histogram.iter().enumerate() {
                h.push(vec![k.to_string(), c.to_string()]);
            }
            run.tables.push(h);
            if !probes.is_empty() {
                let mut cols = vec!["index".to_string()];
                cols.extend(Table::coordinate_columns("c", f.dim()));
                cols.extend(["radius", "count", "method", "boundary_margin"].map(String::from));
                let mut t = Table::with_columns("nprobe_probes", "nprobe_probes/1", cols);
                let mut done = Vec::new();
                let mut failed = None;
                for (i, pr) in probes.iter().enumerate() {
                    let method = match pr.method {
                        CountMethodSpec::Auto => CountMethod::Auto,
                        CountMethodSpec::Analytic => CountMethod::AnalyticEnumeration,
                        CountMethodSpec::ArgumentPrinciple => CountMethod::ArgumentPrinciple,
                    };
                    let s = match count_apoints(f, &pr.center, pr.radius, &pr.value, method) {
                        Ok(s) => s,
                        Err(e) => {
                            failed = Some(e);
                            break;
                        }
                    };
                    let mut row = vec![i.to_string()];
                    row.extend(coords(&pr.center));
                    row.push(num(pr.radius));
                    row.push(s.count.to_string());
                    row.push(serde_json::to_value(s.method).expect("tag").as_str().unwrap_or("").to_string());
                    row.push(s.boundary_margin.map(num).unwrap_or_default());
                    t.push(row);
                    done.push(s);
                    run.put("count_apoints", &done);
                }
                run.tables.push(t);
                if let Some(e) = failed {
                    return Err(e);
                }
            }
            let hist: Vec<(f64, f64)> = sw.histogram.iter().enumerate().map(|(k, c)| (k as f64, *c as f64)).collect();
            run.plot("nprobe_histogram", || {
                line_plot(
                    &format!("multiplicity sums on balls of radius {radius}"),
                    "N(f, y, B)",
                    "pairs",
                    false,
                    false,
                    &[Series::new("pairs", hist, Style::LineMarkers)],
                )
            });
        }
    }
    Ok(())
}

/// The zoo catalog as a table.
pub fn list_zoo() -> Table {
    let mut t = Table::new(
        "zoo",
        "zoo/1",
        &["kind", "parameters", "n", "K", "jacobian", "apoints", "note"],
    );
    for e in catalog() {
        t.push(vec![
            e.kind.into(),
            e.parameters.into(),
            e.dim.into(),
            e.distortion.into(),
            e.jacobian.to_string(),
            e.apoints.into(),
            e.note.into(),
        ]);
    }
    t
}

/// Plain-text rendering of [`list_zoo`].
pub fn zoo_text() -> String {
    let t = list_zoo();
    let mut out = String::new();
    for r in &t.rows {
        out.push_str(&format!(
            "{:<12} n={:<2} K={:<4} jacobian={:<5} apoints: {}\n",
            r[0], r[2], r[3], r[4], r[5]
        ));
        if !r[1].is_empty() {
            out.push_str(&format!("{:<12} parameters: {}\n", "", r[1]));
        }
        if !r[6].is_empty() {
            out.push_str(&format!("{:<12} {}\n", "", r[6]));
        }
    }
    out
}
