//! One runner per experiment kind.

use std::f64::consts::TAU;

use hyperlab_core::asymptotic::{
    bounding_geodesics, lamination_check, periodic_structure, quotient_self_crossings, recurrence_scan, width_bound,
    width_of_direction, widths, BoundingOptions, BoundingPair, DirectionWidthReport, LaminationOptions, PeriodicOptions,
};
use hyperlab_core::connect::{deviation_histogram, estimate_d, minimal_segment, stream_rng, ConnectOptions};
use hyperlab_core::disc::{
    classify, distance, geodesic_between, BoundaryDirection, Classification, DiscPoint, HyperbolicGeodesic, MobiusMap, C64,
};
use hyperlab_core::error::{Error, Result};
use hyperlab_core::group::FuchsianGroup;
use hyperlab_core::kam::{
    bounding_weak_kam, busemann, busemann_along, calibrated_ray, compare_fields, horofunction_closed_form, BusemannField,
    BusemannOptions, Region, Side,
};
use hyperlab_core::metric::MetricRef;
use rand::Rng;

use crate::config::{Direction, ExperimentConfig, Kind};
use crate::report::{num, opt_num, point, Check, NamedPath, Outcome, Table};
use crate::svg::Role;

/// Shared inputs of a run.
pub struct Context {
    pub group: FuchsianGroup,
    pub metric: MetricRef,
    pub seed: u64,
    pub c_f: f64,
    pub d_est: f64,
}

/// Random streams used by the runners; distinct from the sample streams of `estimate_d`.
const STREAM_DIRECTION: u64 = 1 << 40;
const STREAM_PAIRS: u64 = (1 << 40) + 1;
const STREAM_RAYS: u64 = (1 << 40) + 2;

/// Metrics whose minimal geodesics are the hyperbolic ones.
pub fn exact_geodesics(metric: &MetricRef) -> bool {
    let id = metric.id();
    id == "hyperbolic" || id.starts_with("randers:")
}

fn randers_amplitude(metric: &MetricRef) -> Option<f64> {
    metric.id().strip_prefix("randers:").and_then(|s| s.parse().ok())
}

pub fn resolve_direction(dir: &Direction, ctx: &Context) -> Result<BoundaryDirection> {
    match dir {
        Direction::Angle(a) => Ok(BoundaryDirection::new(*a)),
        Direction::Random => Ok(BoundaryDirection::new(stream_rng(ctx.seed, STREAM_DIRECTION).gen_range(0.0..TAU))),
        Direction::Fixed(w) => {
            let e = ctx.group.parse_word(w)?;
            match classify(&e.map) {
                Classification::Hyperbolic { axis, .. } => Ok(axis.plus_end()),
                _ => Err(Error::InvalidArgument(format!("{w} is not hyperbolic"))),
            }
        }
    }
}

fn disc_point(p: (f64, f64)) -> Result<DiscPoint> {
    DiscPoint::new(p.0, p.1)
}

/// Geodesic through `z` in direction `theta`, parametrized from `z`.
fn geodesic_through(z: C64, theta: f64) -> HyperbolicGeodesic {
    HyperbolicGeodesic {
        frame: MobiusMap::translation_to(z).compose(&MobiusMap::rotation(theta)),
        start: f64::NEG_INFINITY,
        end: f64::INFINITY,
    }
}

pub fn run_kind(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    match cfg.kind {
        Kind::EstimateD => estimate_d_run(cfg, ctx),
        Kind::Busemann => busemann_run(cfg, ctx),
        Kind::Uniqueness => uniqueness_run(cfg, ctx),
        Kind::Width => width_run(cfg, ctx),
        Kind::Lamination => lamination_run(cfg, ctx),
        Kind::Periodic => periodic_run(cfg, ctx),
        Kind::Recurrent => recurrent_run(cfg, ctx),
        Kind::Simple => simple_run(cfg, ctx),
    }
}

fn estimate_d_run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let opts = ConnectOptions::default();
    let sep = cfg.float("max_separation");
    let est = estimate_d(ctx.metric.as_ref(), cfg.count("n"), sep, ctx.seed, &opts);
    let mut o = Outcome::default();
    o.result("d_est", num(est.d_est));
    o.result("samples", est.samples.to_string());
    o.result("failures", est.failures.to_string());
    o.result("argmax", format!("{} -> {}", point(est.argmax.0), point(est.argmax.1)));
    let doubled = cfg.count("doubled_n");
    if doubled > 0 {
        let d2 = estimate_d(ctx.metric.as_ref(), doubled, 2.0 * sep, ctx.seed, &opts);
        o.result("d_est_doubled", num(d2.d_est));
        o.result("doubled_failures", d2.failures.to_string());
        o.result("relative_change", num((d2.d_est - est.d_est).abs() / est.d_est.max(1e-300)));
    }
    let limit = cfg.auto_float("expect_max").or(exact_geodesics(&ctx.metric).then_some(1e-5));
    if let Some(l) = limit {
        o.checks.push(Check::at_most("d_est", est.d_est, l));
    }
    o.table = Table::new(&["index", "x_re", "x_im", "y_re", "y_im", "deviation"]);
    for (i, (x, y, d)) in est.pairs.iter().enumerate() {
        o.table.push(vec![i.to_string(), num(x.re), num(x.im), num(y.re), num(y.im), opt_num(*d)]);
    }
    o.sections.push(("histogram".into(), deviation_histogram(&est.deviations, 20)));
    if est.samples > 0 {
        let (x, y) = (DiscPoint::from_complex(est.argmax.0)?, DiscPoint::from_complex(est.argmax.1)?);
        let seg = minimal_segment(ctx.metric.as_ref(), x, y, &opts)?;
        let line = geodesic_between(x, y)?;
        o.paths.push(NamedPath::line("background", Role::Background, &line, line.start, line.end));
        o.paths.push(NamedPath::geodesic("argmax", Role::Minimizer, &seg.path));
    }
    Ok(o)
}

fn busemann_opts(cfg: &ExperimentConfig, tol_key: &str) -> BusemannOptions {
    BusemannOptions {
        tol: cfg.float(tol_key),
        spacing: cfg.float("spacing"),
        schedule: if cfg.kind == Kind::Busemann {
            cfg.floats("schedule")
        } else {
            BusemannOptions::default().schedule
        },
        connect: ConnectOptions::default(),
    }
}

/// Closed form of the field for metrics that have one.
fn closed_form(metric: &MetricRef, f: &BusemannField, z: C64) -> Option<f64> {
    let x0 = f.x0.z();
    let h = horofunction_closed_form(z, f.xi) - horofunction_closed_form(x0, f.xi);
    match metric.id().as_str() {
        "hyperbolic" => Some(h),
        _ => randers_amplitude(metric).map(|eps| h + eps * (z.re - x0.re)),
    }
}

fn busemann_run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let xi = resolve_direction(&cfg.direction("xi"), ctx)?;
    let x0 = disc_point(cfg.point("x0"))?;
    let radius = cfg.float("radius");
    let region = Region::new(x0, radius)?;
    let f = busemann(&ctx.metric, x0, xi, region, &busemann_opts(cfg, "tol"))?;
    let mut o = Outcome::default();
    o.result("xi", num(xi.angle()));
    o.result("cloud_points", f.cloud.len().to_string());
    o.result("converged", f.converged.to_string());
    o.result("anchor_n", num(f.anchor_n));
    let last_diff = f.schedule.iter().filter_map(|s| s.sup_diff).last().unwrap_or(f64::INFINITY);
    o.checks.push(Check::at_most("schedule_sup_diff", last_diff, cfg.float("tol")));
    o.checks.push(Check::at_most("u_at_base_point", f.value(x0)?.abs(), 1e-9));

    // domination on random cloud pairs
    let mut rng = stream_rng(ctx.seed, STREAM_PAIRS);
    let n = f.cloud.len();
    let mut dom: f64 = f64::NEG_INFINITY;
    for _ in 0..cfg.count("domination_pairs") {
        if n < 2 {
            break;
        }
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let (a, b) = (&f.cloud[i], &f.cloud[j]);
        let d = minimal_segment(ctx.metric.as_ref(), DiscPoint::from_complex(a.z)?, DiscPoint::from_complex(b.z)?, &ConnectOptions::default())?;
        dom = dom.max(b.value - a.value - d.length);
    }
    if dom.is_finite() {
        o.checks.push(Check::at_most("domination_excess", dom, 1e-4));
    }
    let mut lip: f64 = 0.0;
    for (i, a) in f.cloud.iter().enumerate() {
        for b in &f.cloud[i + 1..] {
            lip = lip.max((a.value - b.value).abs() - ctx.c_f * distance(a.z, b.z));
        }
    }
    o.checks.push(Check::at_most("lipschitz_excess", lip, 1e-6));
    if let Some(dev) = f
        .cloud
        .iter()
        .map(|p| closed_form(&ctx.metric, &f, p.z).map(|c| (p.value - c).abs()))
        .collect::<Option<Vec<f64>>>()
    {
        o.checks.push(Check::at_most("closed_form_deviation", dev.iter().copied().fold(0.0, f64::max), 1e-4));
    }

    // calibrated rays
    let t = cfg.float("ray_time");
    let mut rng = stream_rng(ctx.seed, STREAM_RAYS);
    let mut rays = Table::new(&["ray", "x_re", "x_im", "max_residual", "gradient_angle", "endpoint_error"]);
    let (mut worst_res, mut worst_angle, mut worst_end): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..cfg.count("rays") {
        let mut report = None;
        for _ in 0..4 {
            let r = 0.5 * radius * rng.gen::<f64>().sqrt();
            let z = geodesic_through(x0.z(), rng.gen_range(0.0..TAU)).point_c(r);
            match calibrated_ray(&f, DiscPoint::from_complex(z)?, t) {
                Ok(c) => {
                    report = Some((z, c));
                    break;
                }
                Err(Error::NonDifferentiablePoint { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let Some((z, c)) = report else {
            return Err(Error::NotConverged {
                what: format!("calibrated ray {k}: no differentiable start point"),
                residual: f64::INFINITY,
            });
        };
        worst_res = worst_res.max(c.max_residual);
        worst_angle = worst_angle.max(c.gradient_angle);
        worst_end = worst_end.max(c.endpoint_error.unwrap_or(0.0));
        rays.push(vec![k.to_string(), num(z.re), num(z.im), num(c.max_residual), num(c.gradient_angle), opt_num(c.endpoint_error)]);
        o.paths.push(NamedPath::geodesic(format!("ray_{k:02}"), Role::Ray, &c.ray));
    }
    if !rays.rows.is_empty() {
        o.checks.push(Check::at_most("calibration_residual", worst_res, 5e-4 * (1.0 + t)));
        o.checks.push(Check::at_most("gradient_angle", worst_angle, 1e-2));
        o.checks.push(Check::at_most("ray_endpoint_error", worst_end, 1e-3));
    }
    o.table = Table::new(&["re", "im", "u"]);
    for p in &f.cloud {
        o.table.push(vec![num(p.z.re), num(p.z.im), num(p.value)]);
    }
    o.sections.push(("schedule".into(), f.schedule_text()));
    let mut ray_text = String::new();
    ray_text.push_str(&rays.header.join(","));
    ray_text.push('\n');
    for r in &rays.rows {
        ray_text.push_str(&r.join(","));
        ray_text.push('\n');
    }
    o.sections.push(("rays".into(), ray_text));
    o.paths.insert(0, NamedPath::line("background", Role::Background, &f.line, f.line.fermi_coordinates(x0.z()).0 - 2.0, 12.0));
    Ok(o)
}

fn uniqueness_run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let xi = resolve_direction(&cfg.direction("xi"), ctx)?;
    let x0 = disc_point(cfg.point("x0"))?;
    let region = Region::new(x0, cfg.float("radius"))?;
    let opts = busemann_opts(cfg, "field_tol");
    let tol = cfg.float("tol");
    let central = busemann(&ctx.metric, x0, xi, region, &opts)?;
    let second_line = HyperbolicGeodesic::through_boundary(xi.rotated(cfg.float("second_back")), xi)?;
    let second = busemann_along(&ctx.metric, x0, second_line, region, &opts)?;
    let (left, left_hist) = bounding_weak_kam(&ctx.metric, x0, xi, Side::Left, region, &opts)?;
    let (right, right_hist) = bounding_weak_kam(&ctx.metric, x0, xi, Side::Right, region, &opts)?;
    let mut o = Outcome::default();
    o.result("xi", num(xi.angle()));
    o.result("cloud_points", central.cloud.len().to_string());
    for (name, a, b) in [
        ("second_vs_central", &second, &central),
        ("left_vs_central", &left, &central),
        ("right_vs_central", &right, &central),
    ] {
        let c = compare_fields(a, b);
        o.result(&format!("{name}_constant"), num(c.constant_difference));
        o.checks.push(Check::at_most(name, c.max_deviation, tol));
    }
    o.result("left_vs_right", num(compare_fields(&left, &right).max_deviation));
    let hist = |h: &[(u32, f64)]| h.iter().map(|(k, d)| format!("{k}:{}", num(*d))).collect::<Vec<_>>().join(" ");
    o.result("left_history", hist(&left_hist));
    o.result("right_history", hist(&right_hist));
    o.table = Table::new(&["re", "im", "u_central", "u_second", "u_left", "u_right"]);
    for p in &central.cloud {
        o.table.push(vec![
            num(p.z.re),
            num(p.z.im),
            num(p.value),
            num(second.interpolate(p.z)),
            num(left.interpolate(p.z)),
            num(right.interpolate(p.z)),
        ]);
    }
    let t0 = central.line.fermi_coordinates(x0.z()).0;
    o.paths.push(NamedPath::line("central_line", Role::Background, &central.line, t0 - 2.0, t0 + 12.0));
    let s0 = second_line.fermi_coordinates(x0.z()).0;
    o.paths.push(NamedPath::line("second_line", Role::Background, &second_line, s0 - 2.0, s0 + 12.0));
    Ok(o)
}

fn bounding_opts(cfg: &ExperimentConfig, ctx: &Context) -> BoundingOptions {
    BoundingOptions {
        n_max: cfg.count("n_max") as u32,
        d_est: ctx.d_est,
        change_tol: if cfg.kind == Kind::Width || cfg.kind == Kind::Lamination {
            cfg.float("change_tol")
        } else {
            BoundingOptions::default().change_tol
        },
        min_offset: if cfg.kind == Kind::Width {
            cfg.float("min_offset")
        } else {
            BoundingOptions::default().min_offset
        },
        ..Default::default()
    }
}

fn pair_paths(o: &mut Outcome, tag: &str, pair: &BoundingPair) {
    let h = pair.horizon;
    o.paths.push(NamedPath::line(format!("{tag}_background"), Role::Background, &pair.background, -h, h));
    o.paths.push(NamedPath::geodesic(format!("{tag}_c0"), Role::Right, &pair.c0));
    o.paths.push(NamedPath::geodesic(format!("{tag}_c1"), Role::Left, &pair.c1));
}

/// Member table, chain and paths of a direction report.
fn direction_outcome(o: &mut Outcome, rep: &DirectionWidthReport, ctx: &Context) {
    o.result("xi", num(rep.xi.angle()));
    o.result("w_xi", opt_num(rep.w_xi));
    o.result("w_xi_all", num(rep.w_xi_all));
    o.result("argmax", rep.argmax.map_or("none".into(), |a| a.to_string()));
    o.result("failures", rep.failures.to_string());
    o.result("unconverged", rep.unconverged.to_string());
    o.result("width_bound", num(width_bound(ctx.d_est)));
    o.result("chain_holds", rep.chain_holds.to_string());
    let literal = rep.w_xi.map(|w| w <= ctx.d_est);
    o.result("w_xi_below_d_est", literal.map_or("none".into(), |b| b.to_string()));
    o.table = Table::new(&[
        "member", "role", "minus_end", "converged", "horizon", "middle_change", "i_est", "w_est", "w_half_tail", "stability", "error",
    ]);
    for (m, mem) in rep.members.iter().enumerate() {
        let w = mem.width.as_ref();
        let p = mem.pair.as_ref();
        o.table.push(vec![
            m.to_string(),
            mem.role.to_string(),
            num(mem.minus_end.angle()),
            p.map_or("none".into(), |p| p.converged.to_string()),
            opt_num(p.map(|p| p.horizon)),
            opt_num(p.map(|p| p.middle_change)),
            opt_num(w.map(|w| w.i_est)),
            opt_num(w.map(|w| w.w_est)),
            opt_num(w.map(|w| w.w_half_tail)),
            opt_num(w.map(|w| w.stability)),
            mem.error.clone().unwrap_or_else(|| "none".into()).replace(',', ";"),
        ]);
        if let Some(p) = p {
            pair_paths(o, &format!("m{m:02}"), p);
        }
    }
}

fn width_run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let dir = cfg.direction("xi");
    let xi = resolve_direction(&dir, ctx)?;
    let opts = bounding_opts(cfg, ctx);
    // at a periodic direction the axis itself joins the fan
    let mut extra = Vec::new();
    if let Direction::Fixed(w) = &dir {
        if let Classification::Hyperbolic { axis, .. } = classify(&ctx.group.parse_word(w)?.map) {
            extra.push(axis.minus_end());
        }
    }
    let rep = width_of_direction(ctx.metric.as_ref(), xi, cfg.count("fan"), &extra, &opts, cfg.auto_float("t_tail"))?;
    let mut o = Outcome::default();
    direction_outcome(&mut o, &rep, ctx);
    if let Some(axis) = rep.members.iter().find(|m| m.role == "extra") {
        o.result("axis_i_est", opt_num(axis.width.as_ref().map(|w| w.i_est)));
        o.result("axis_w_est", opt_num(axis.width.as_ref().map(|w| w.w_est)));
        let others = rep
            .members
            .iter()
            .filter(|m| m.role != "extra")
            .filter_map(|m| m.width.as_ref().map(|w| w.w_est))
            .fold(0.0, f64::max);
        o.result("non_axis_max_w", num(others));
    }
    Ok(o)
}

fn lamination_run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let xi = resolve_direction(&cfg.direction("xi"), ctx)?;
    let opts = LaminationOptions {
        bounding: bounding_opts(cfg, ctx),
        coincidence_tol: cfg.float("coincidence_tol"),
        window: cfg.count("window"),
    };
    let rep = lamination_check(ctx.metric.as_ref(), xi, cfg.count("fan"), &opts)?;
    let mut o = Outcome::default();
    direction_outcome(&mut o, &rep.direction, ctx);
    o.paths.clear();
    o.result("transverse", rep.transverse.to_string());
    o.result("coincident", rep.coincident.to_string());
    o.result("ambiguous_segments", rep.ambiguous_segments.to_string());
    o.result("pairs_checked", rep.pairs_checked.to_string());
    let mut crossings = String::from("path_a,path_b,transverse,tangential,overlaps,points\n");
    for (a, b, c) in &rep.crossings {
        let pts = c.points.iter().map(|z| point(*z).replace(',', " ")).collect::<Vec<_>>().join(";");
        crossings.push_str(&format!("{a},{b},{},{},{},{pts}\n", c.transverse, c.tangential, c.overlaps));
    }
    o.sections.push(("crossings".into(), crossings));
    for (k, p) in rep.paths.iter().enumerate() {
        if let Some(p) = p {
            let role = if k % 2 == 0 { Role::Right } else { Role::Left };
            o.paths.push(NamedPath::geodesic(format!("m{:02}_c{}", k / 2, k % 2), role, p));
        }
    }
    Ok(o)
}

fn periodic_run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let word = ctx.group.parse_word(cfg.text("word"))?;
    let opts = PeriodicOptions {
        strip_resolution: cfg.count("strip_resolution"),
        d_est: ctx.d_est,
        c_f: ctx.c_f,
        node_spacing: cfg.float("node_spacing"),
        steps_per_unit: cfg.float("steps_per_unit"),
        heteroclinic_periods: cfg.count("heteroclinic_periods") as i32,
        ..Default::default()
    };
    let rep = periodic_structure(ctx.metric.as_ref(), &ctx.group, &word, &opts)?;
    let minimal: Vec<_> = rep.minimal().collect();
    let mut o = Outcome::default();
    o.result("word", rep.word.clone());
    o.result("translation_length", num(rep.translation_length));
    o.result("minimizers", rep.minimizers.len().to_string());
    o.result("minimal", minimal.len().to_string());
    o.result("starts", rep.starts.to_string());
    o.result("rejected_critical", rep.rejected_critical.to_string());
    o.result("polish_failures", rep.polish_failures.to_string());
    o.result("i_est", num(rep.i_est));
    o.result("w_est", num(rep.w_est));
    o.result("length_bounds", format!("{} {}", num(rep.length_bounds.0), num(rep.length_bounds.1)));
    o.result("width_bound", num(width_bound(ctx.d_est)));
    o.checks.push(Check::at_least("minimal_count", minimal.len() as f64, 1.0));
    o.checks.push(Check::at_most("invariance_residual", rep.max_invariance_residual, 1e-5));
    o.checks.push(Check::at_least("lengths_within_bounds", f64::from(u8::from(rep.lengths_within_bounds)), 1.0));
    if minimal.len() >= 2 {
        o.checks.push(Check::at_most("w_minus_i", (rep.w_est - rep.i_est).abs(), 5e-3));
    }
    o.checks.push(Check::at_most("chain_i_minus_w", rep.i_est - rep.w_est, 1e-9));
    o.table = Table::new(&["index", "offset", "theta", "length", "discrete_length", "invariance_residual", "shooting_residual", "minimal"]);
    for (k, m) in rep.minimizers.iter().enumerate() {
        o.table.push(vec![
            k.to_string(),
            num(m.offset),
            num(m.theta),
            num(m.length),
            num(m.discrete_length),
            num(m.invariance_residual),
            num(m.shooting_residual),
            m.minimal.to_string(),
        ]);
        o.paths.push(NamedPath::geodesic(format!("minimizer_{k}"), Role::Minimizer, &m.path));
    }
    let mut het = String::from("from,to,length,drift_start,drift_end,error\n");
    for (k, h) in rep.heteroclinics.iter().enumerate() {
        het.push_str(&format!(
            "{},{},{},{},{},{}\n",
            h.from,
            h.to,
            num(h.length),
            num(h.drift_start),
            num(h.drift_end),
            h.error.clone().unwrap_or_else(|| "none".into()).replace(',', ";")
        ));
        if let Some(p) = &h.path {
            o.paths.push(NamedPath::geodesic(format!("heteroclinic_{k}"), Role::Ray, p));
        }
    }
    o.sections.push(("heteroclinics".into(), het));
    let ell = rep.translation_length;
    o.paths.insert(0, NamedPath::line("axis", Role::Background, &rep.axis, -2.5 * ell, 2.5 * ell));
    Ok(o)
}

/// The octagon sides as frame polylines.
fn octagon(group: &FuchsianGroup) -> Vec<NamedPath> {
    (0..8)
        .map(|k| {
            let (a, b) = (group.vertices[k], group.vertices[(k + 1) % 8]);
            let line = geodesic_between(DiscPoint::from_complex(a).expect("vertex inside the disc"), DiscPoint::from_complex(b).expect("vertex inside the disc")).expect("distinct vertices");
            NamedPath::line(format!("side_{k}"), Role::Frame, &line, line.start, line.end)
        })
        .collect()
}

fn recurrent_run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let start = disc_point(cfg.point("start"))?;
    let theta = cfg.float("theta");
    let rep = recurrence_scan(&ctx.group, start, theta, cfg.float("horizon"), cfg.float("epsilon"), cfg.float("dt"))?;
    let mut o = Outcome::default();
    o.result("returns", rep.returns.len().to_string());
    o.result("coverage", num(rep.coverage));
    o.result("cells", format!("{}/{}", rep.cells_visited, rep.cells_total));
    o.result("samples", rep.samples.to_string());
    if let Some(c) = &rep.closest {
        o.result("closest", format!("t={} position={} angle={}", num(c.t), num(c.position), num(c.angle)));
    }
    o.table = Table::new(&["t", "position", "angle"]);
    for r in &rep.returns {
        o.table.push(vec![num(r.t), num(r.position), num(r.angle)]);
    }
    o.paths.extend(octagon(&ctx.group));
    let g = geodesic_through(start.z(), theta);
    o.paths.push(NamedPath::line("background", Role::Background, &g, -12.0, 12.0));
    if cfg.flag("widths") && !rep.returns.is_empty() {
        let opts = bounding_opts(cfg, ctx);
        let pair = bounding_geodesics(ctx.metric.as_ref(), &g, &opts)?;
        let w = widths(&pair, None);
        let dir = width_of_direction(ctx.metric.as_ref(), g.plus_end(), cfg.count("fan"), &[g.minus_end()], &opts, None)?;
        o.result("pair_converged", pair.converged.to_string());
        o.result("i_est", num(w.i_est));
        o.result("w_est", num(w.w_est));
        o.result("w_xi", opt_num(dir.w_xi));
        o.result("w_minus_i", num(w.w_est - w.i_est));
        o.result("w_xi_minus_w", opt_num(dir.w_xi.map(|x| x - w.w_est)));
        pair_paths(&mut o, "pair", &pair);
    }
    Ok(o)
}

fn simple_run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let start = disc_point(cfg.point("start"))?;
    let theta = cfg.float("theta");
    let rep = quotient_self_crossings(&ctx.group, start, theta, cfg.float("horizon"), cfg.float("dt"))?;
    let mut o = Outcome::default();
    o.result("pieces", rep.pieces.to_string());
    o.result("self_crossings", rep.transverse.to_string());
    o.result("simple", (rep.transverse == 0).to_string());
    o.paths.extend(octagon(&ctx.group));
    let g = geodesic_through(start.z(), theta);
    o.paths.push(NamedPath::line("background", Role::Background, &g, -12.0, 12.0));
    o.table = Table::new(&["member", "role", "minus_end", "converged", "horizon", "middle_change", "i_est", "w_est", "w_half_tail", "stability", "error"]);
    if rep.transverse == 0 {
        let opts = bounding_opts(cfg, ctx);
        let dir = width_of_direction(ctx.metric.as_ref(), g.plus_end(), cfg.count("fan"), &[g.minus_end()], &opts, None)?;
        direction_outcome(&mut o, &dir, ctx);
    }
    Ok(o)
}
