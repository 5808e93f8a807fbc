//! Busemann functions (weak KAM solutions of a direction) as horofunction
//! limits, calibrated rays, field comparison and one-sided limit fields.

use rayon::prelude::*;

use crate::connect::{minimal_segment, polish, ConnectOptions, ShootingState};
use crate::disc::{distance, endpoint_estimate, geodesic_between, BoundaryDirection, DiscPoint, HyperbolicGeodesic, MobiusMap, C64};
use crate::error::{Error, Result};
use crate::flow::{flow, GeodesicPath};
use crate::metric::{legendre_inverse, MetricRef};

/// Hyperbolic ball on which a field is tabulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub centre: DiscPoint,
    pub radius: f64,
}

impl Region {
    pub fn new(centre: DiscPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || radius > 8.0 {
            return Err(Error::InvalidArgument(format!("region radius {radius} must lie in (0, 8]")));
        }
        Ok(Region { centre, radius })
    }

    pub fn contains(&self, z: C64) -> bool {
        distance(self.centre.z(), z) <= self.radius + 1e-12
    }

    /// Rings of hyperbolic polar points with spacing `h`, centre first.
    pub fn cloud(&self, h: f64) -> Vec<(usize, C64)> {
        let frame = MobiusMap::translation_to(self.centre.z());
        let mut pts = vec![(0, self.centre.z())];
        let rings = (self.radius / h).round().max(1.0) as usize;
        for j in 1..=rings {
            let r = self.radius * j as f64 / rings as f64;
            let m = ((std::f64::consts::TAU * r.sinh() / h).ceil() as usize).max(6);
            let rho = (0.5 * r).tanh();
            for i in 0..m {
                let a = std::f64::consts::TAU * i as f64 / m as f64;
                pts.push((j, frame.apply(C64::from_polar(rho, a))));
            }
        }
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Central,
    /// Limit from directions counterclockwise of the target.
    Left,
    /// Limit from directions clockwise of the target.
    Right,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Central => "central",
            Side::Left => "left-limit",
            Side::Right => "right-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BusemannOptions {
    /// Cauchy tolerance between successive horofunctions.
    pub tol: f64,
    /// Hyperbolic spacing of the evaluation cloud.
    pub spacing: f64,
    /// Distances of the anchor points along the background ray.
    pub schedule: Vec<f64>,
    pub connect: ConnectOptions,
}

impl Default for BusemannOptions {
    fn default() -> Self {
        BusemannOptions {
            tol: 1e-4,
            spacing: 0.25,
            schedule: vec![2.0, 4.0, 8.0, 12.0, 16.0],
            connect: ConnectOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub n: f64,
    /// Sup over the check points of the change from the previous anchor.
    pub sup_diff: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CloudPoint {
    pub z: C64,
    pub value: f64,
    state: ShootingState,
}

/// Tabulated horofunction `u(x) = d_F(x0, x_n) - d_F(x, x_n) + offset`.
#[derive(Debug, Clone)]
pub struct BusemannField {
    pub metric: MetricRef,
    pub x0: DiscPoint,
    pub xi: BoundaryDirection,
    /// Background geodesic carrying the anchors, oriented towards `xi`.
    pub line: HyperbolicGeodesic,
    pub region: Region,
    pub cloud: Vec<CloudPoint>,
    pub schedule: Vec<ScheduleEntry>,
    pub converged: bool,
    pub side: Side,
    pub anchor: DiscPoint,
    /// Distance of the tabulation anchor along the line.
    pub anchor_n: f64,
    base_distance: f64,
    offset: f64,
    connect: ConnectOptions,
}

/// `log((1-|x|^2)/|x-xi|^2)`, the hyperbolic horofunction normalized at the origin.
pub fn horofunction_closed_form(x: C64, xi: BoundaryDirection) -> f64 {
    ((1.0 - x.norm_sqr()) / (x - xi.point()).norm_sqr()).ln()
}

fn solve_with_guesses(
    metric: &MetricRef,
    x: DiscPoint,
    y: DiscPoint,
    guesses: &[&ShootingState],
    opts: &ConnectOptions,
) -> Result<(f64, ShootingState)> {
    let mut best: Option<(f64, ShootingState)> = None;
    for g in guesses {
        if let Ok((st, _)) = polish(metric.as_ref(), x, y, g, opts) {
            if best.as_ref().map_or(true, |b| st.total < b.0) {
                best = Some((st.total, st));
            }
        }
    }
    match best {
        Some(b) => Ok(b),
        None => {
            let seg = minimal_segment(metric.as_ref(), x, y, opts)?;
            Ok((seg.length, seg.state))
        }
    }
}

/// Whether two neighbouring solutions follow the same route (away from their starts).
fn same_branch(a: &ShootingState, b: &ShootingState) -> bool {
    a.nodes.len() == b.nodes.len() && a.nodes.iter().zip(&b.nodes).skip(1).all(|(p, q)| distance(p.0, q.0) < 0.5)
}

/// Values of `d_F(p, y)` over a cloud, each point warm-started from its two
/// nearest predecessors in earlier rings.
fn distances_over(
    metric: &MetricRef,
    pts: &[(usize, C64)],
    y: DiscPoint,
    seed: (C64, ShootingState),
    opts: &ConnectOptions,
) -> Result<Vec<(f64, ShootingState)>> {
    let mut done: Vec<(C64, ShootingState)> = vec![seed];
    let mut out: Vec<Option<(f64, ShootingState)>> = vec![None; pts.len()];
    let max_ring = pts.iter().map(|p| p.0).max().unwrap_or(0);
    for ring in 0..=max_ring {
        let idx: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].0 == ring).collect();
        let solved: Vec<Result<(f64, ShootingState)>> = idx
            .par_iter()
            .map(|&i| {
                let z = pts[i].1;
                let mut near: Vec<(f64, &ShootingState)> = done.iter().map(|(w, s)| (distance(*w, z), s)).collect();
                near.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut guesses: Vec<&ShootingState> = near.iter().take(2).map(|n| n.1).collect();
                if guesses.len() == 2 && same_branch(guesses[0], guesses[1]) {
                    guesses.truncate(1);
                }
                solve_with_guesses(metric, DiscPoint::unchecked(z), y, &guesses, opts)
            })
            .collect();
        for (&i, r) in idx.iter().zip(solved) {
            let r = r?;
            done.push((pts[i].1, r.1.clone()));
            out[i] = Some(r);
        }
    }
    Ok(out.into_iter().map(|o| o.expect("every ring is processed")).collect())
}

/// Busemann function of direction `xi` with anchors on the hyperbolic ray from `x0`.
pub fn busemann(metric: &MetricRef, x0: DiscPoint, xi: BoundaryDirection, region: Region, opts: &BusemannOptions) -> Result<BusemannField> {
    let line = geodesic_between(x0, xi)?;
    busemann_along(metric, x0, line, region, opts)
}

/// Busemann function with anchors `x_n = line(t0 + n)`, `t0` the foot of `x0` on `line`.
pub fn busemann_along(
    metric: &MetricRef,
    x0: DiscPoint,
    line: HyperbolicGeodesic,
    region: Region,
    opts: &BusemannOptions,
) -> Result<BusemannField> {
    if opts.schedule.is_empty() {
        return Err(Error::InvalidArgument("empty horofunction schedule".into()));
    }
    let xi = line.plus_end();
    let t0 = line.fermi_coordinates(x0.z()).0;
    let cloud = region.cloud(opts.spacing);
    let outer = cloud.iter().map(|p| p.0).max().unwrap_or(0);
    let check: Vec<(usize, C64)> = cloud
        .iter()
        .enumerate()
        .filter(|(i, p)| i % 3 == 0 || p.0 == outer)
        .map(|(_, p)| *p)
        .collect();

    let mut schedule = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    let mut converged = false;
    let mut final_n = opts.schedule[0];
    for &n in &opts.schedule {
        final_n = n;
        let anchor = line.point(t0 + n);
        let base = minimal_segment(metric.as_ref(), x0, anchor, &opts.connect)?;
        let vals = distances_over(metric, &check, anchor, (x0.z(), base.state.clone()), &opts.connect)?;
        let u: Vec<f64> = vals.iter().map(|v| base.length - v.0).collect();
        let diff = previous
            .as_ref()
            .map(|p| p.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        schedule.push(ScheduleEntry { n, sup_diff: diff });
        previous = Some(u);
        if diff.is_some_and(|d| d <= opts.tol) {
            converged = true;
            break;
        }
    }
    // the tabulated field uses the deepest anchor so rays can be followed far out
    if converged {
        final_n = *opts.schedule.last().expect("nonempty schedule");
    }
    let anchor = line.point(t0 + final_n);
    let base = minimal_segment(metric.as_ref(), x0, anchor, &opts.connect)?;
    let vals = distances_over(metric, &cloud, anchor, (x0.z(), base.state.clone()), &opts.connect)?;
    let cloud = cloud
        .iter()
        .zip(vals)
        .map(|(p, (d, st))| CloudPoint {
            z: p.1,
            value: if distance(p.1, x0.z()) == 0.0 { 0.0 } else { base.length - d },
            state: st,
        })
        .collect();
    Ok(BusemannField {
        metric: metric.clone(),
        x0,
        xi,
        line,
        region,
        cloud,
        schedule,
        converged,
        side: Side::Central,
        anchor,
        anchor_n: final_n,
        base_distance: base.length,
        offset: 0.0,
        connect: opts.connect,
    })
}

/// A computed field together with its best state at the point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub state: ShootingState,
}

impl BusemannField {
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Copy with `c` added to every value.
    pub fn shifted(&self, c: f64) -> BusemannField {
        let mut f = self.clone();
        f.offset += c;
        for p in &mut f.cloud {
            p.value += c;
        }
        f
    }

    fn nearest(&self, z: C64, k: usize) -> Vec<&CloudPoint> {
        let mut v: Vec<&CloudPoint> = self.cloud.iter().collect();
        v.sort_by(|a, b| distance(a.z, z).total_cmp(&distance(b.z, z)));
        v.truncate(k);
        v
    }

    /// Direct evaluation of the final horofunction at `x`.
    pub fn evaluate(&self, x: DiscPoint) -> Result<Evaluation> {
        let near = self.nearest(x.z(), 2);
        let guesses: Vec<&ShootingState> = near.iter().map(|p| &p.state).collect();
        self.evaluate_from(x, &guesses)
    }

    /// Evaluation polished from the given states (minimum over them).
    pub fn evaluate_from(&self, x: DiscPoint, guesses: &[&ShootingState]) -> Result<Evaluation> {
        if distance(x.z(), self.anchor.z()) < 1e-12 {
            return Err(Error::DegenerateEndpoints);
        }
        let (d, state) = solve_with_guesses(&self.metric, x, self.anchor, guesses, &self.connect)?;
        // the base point is where the field is normalized
        let value = if x.z() == self.x0.z() { self.offset } else { self.base_distance - d + self.offset };
        Ok(Evaluation { value, state })
    }

    pub fn value(&self, x: DiscPoint) -> Result<f64> {
        Ok(self.evaluate(x)?.value)
    }

    /// Piecewise-linear interpolation of the cloud over the triangle of nearest nodes.
    pub fn interpolate(&self, z: C64) -> f64 {
        let near = self.nearest(z, 8);
        let a = near[0];
        for (i, b) in near.iter().enumerate().skip(1) {
            for c in near.iter().skip(i + 1) {
                let (e1, e2) = (b.z - a.z, c.z - a.z);
                let det = e1.re * e2.im - e1.im * e2.re;
                if det.abs() < 1e-6 * e1.norm() * e2.norm() {
                    continue;
                }
                let d = z - a.z;
                let l1 = (d.re * e2.im - d.im * e2.re) / det;
                let l2 = (e1.re * d.im - e1.im * d.re) / det;
                let l0 = 1.0 - l1 - l2;
                if l0 >= -1e-9 && l1 >= -1e-9 && l2 >= -1e-9 {
                    return l0 * a.value + l1 * b.value + l2 * c.value;
                }
            }
        }
        a.value
    }

    /// Cloud as CSV `re,im,u`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im,u\n");
        for p in &self.cloud {
            s.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", p.z.re, p.z.im, p.value));
        }
        s
    }

    /// Schedule sidecar as `key = value` lines.
    pub fn schedule_text(&self) -> String {
        let mut s = format!(
            "metric = {}\nx0 = {:.12e},{:.12e}\nxi = {:.12e}\nside = {}\nconverged = {}\nanchor_n = {}\n",
            self.metric.id(),
            self.x0.re(),
            self.x0.im(),
            self.xi.angle(),
            self.side.as_str(),
            self.converged,
            self.anchor_n
        );
        for e in &self.schedule {
            match e.sup_diff {
                Some(d) => s.push_str(&format!("schedule.{} = {:.6e}\n", e.n, d)),
                None => s.push_str(&format!("schedule.{} = none\n", e.n)),
            }
        }
        s
    }
}

/// Differential of `u` at `x`, by central differences and by first variation.
#[derive(Debug, Clone)]
pub struct Gradient {
    /// Central differences with step `FD_STEP` in euclidean coordinates.
    pub du: C64,
    /// `L_F` of the initial velocity of the minimal segment realizing `u(x)`.
    pub du_variation: C64,
    /// Largest disagreement between forward and backward quotients.
    pub one_sided_gap: f64,
    /// Initial direction of the minimal segment realizing `u(x)`.
    pub segment_direction: f64,
    pub state: ShootingState,
    pub value: f64,
}

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOL: f64 = 1e-3;

pub fn gradient(u: &BusemannField, x: DiscPoint) -> Result<Gradient> {
    let seg = minimal_segment(u.metric.as_ref(), x, u.anchor, &u.connect)?;
    let mut guesses: Vec<&ShootingState> = vec![&seg.state];
    guesses.extend(seg.alternatives.iter());
    let at = |dz: C64| -> Result<f64> {
        let p = DiscPoint::from_complex(x.z() + dz)?;
        Ok(u.evaluate_from(p, &guesses)?.value)
    };
    let h = FD_STEP;
    let c = u.base_distance - seg.length + u.offset;
    let (xp, xm) = (at(C64::new(h, 0.0))?, at(C64::new(-h, 0.0))?);
    let (yp, ym) = (at(C64::new(0.0, h))?, at(C64::new(0.0, -h))?);
    let gap = ((xp - c) / h - (c - xm) / h).abs().max(((yp - c) / h - (c - ym) / h).abs());
    if gap > 10.0 * FD_TOL {
        return Err(Error::NonDifferentiablePoint { re: x.re(), im: x.im() });
    }
    let theta = seg.state.nodes[0].1;
    let v0 = crate::metric::unit_vector(u.metric.as_ref(), x.z(), theta);
    Ok(Gradient {
        du: C64::new((xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h)),
        du_variation: u.metric.fiber_gradient(x.z(), v0),
        one_sided_gap: gap,
        segment_direction: theta,
        state: seg.state,
        value: c,
    })
}

#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub ray: GeodesicPath,
    /// `(t, |u(c(t)) - u(c(0)) - t|)` on the time grid.
    pub residuals: Vec<(f64, f64)>,
    pub max_residual: f64,
    /// Angle between `legendre_inverse(du)` (difference quotients) and the
    /// direction of the realizing minimal segment.
    pub gradient_angle: f64,
    pub launch_direction: f64,
    pub endpoint_error: Option<f64>,
}

/// Integrates the ray launched along `legendre_inverse(du(x))` and measures calibration.
pub fn calibrated_ray(u: &BusemannField, x: DiscPoint, duration: f64) -> Result<CalibrationReport> {
    let g = gradient(u, x)?;
    // finite differences of u are too noisy to launch an unstable ray on, so
    // the launch uses the first-variation differential; the difference-quotient
    // gradient is what the identity check below is measured against
    let v = legendre_inverse(u.metric.as_ref(), x.z(), g.du_variation)?;
    let v = v / u.metric.evaluate(x.z(), v);
    let v_fd = legendre_inverse(u.metric.as_ref(), x.z(), g.du)?;
    let tangent = crate::disc::TangentVector::new(x, v)?;
    let ray = flow(u.metric.as_ref(), tangent, duration, 1e-10)?;
    let steps = ((duration / 0.5).ceil() as usize).max(1);
    let mut residuals = vec![(0.0, 0.0)];
    let mut state = g.state.clone();
    for k in 1..=steps {
        let t = duration * k as f64 / steps as f64;
        let p = DiscPoint::from_complex(ray.point_at(t))?;
        let e = u.evaluate_from(p, &[&state])?;
        residuals.push((t, (e.value - g.value - t).abs()));
        state = e.state;
    }
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    let launch = v.arg();
    let endpoint_error = endpoint_estimate(&ray.points(), 1e-3)
        .ok()
        .map(|e| e.direction.separation(u.xi));
    Ok(CalibrationReport {
        ray,
        residuals,
        max_residual,
        gradient_angle: crate::disc::wrap_angle(v_fd.arg() - g.segment_direction).abs(),
        launch_direction: launch,
        endpoint_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldComparison {
    pub constant_difference: f64,
    pub max_deviation: f64,
    pub points: usize,
}

/// Best constant `c` in the sup norm for `u1 - u2` over the shared cloud, and the residual.
pub fn compare_fields(u1: &BusemannField, u2: &BusemannField) -> FieldComparison {
    let diffs: Vec<f64> = u1
        .cloud
        .iter()
        .filter(|p| u2.region.contains(p.z))
        .map(|p| {
            let v2 = u2
                .cloud
                .iter()
                .find(|q| (q.z - p.z).norm() < 1e-13)
                .map_or_else(|| u2.interpolate(p.z), |q| q.value);
            p.value - v2
        })
        .collect();
    if diffs.is_empty() {
        return FieldComparison {
            constant_difference: 0.0,
            max_deviation: f64::INFINITY,
            points: 0,
        };
    }
    let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    FieldComparison {
        constant_difference: 0.5 * (lo + hi),
        max_deviation: 0.5 * (hi - lo),
        points: diffs.len(),
    }
}

/// One-sided limit of Busemann fields from directions `xi +- 0.1 * 2^-k`.
pub fn bounding_weak_kam(
    metric: &MetricRef,
    x0: DiscPoint,
    xi: BoundaryDirection,
    side: Side,
    region: Region,
    opts: &BusemannOptions,
) -> Result<(BusemannField, Vec<(u32, f64)>)> {
    let sign = match side {
        Side::Left => 1.0,
        Side::Right => -1.0,
        Side::Central => {
            let mut f = busemann(metric, x0, xi, region, opts)?;
            f.side = Side::Central;
            return Ok((f, Vec::new()));
        }
    };
    let mut history = Vec::new();
    let mut prev: Option<BusemannField> = None;
    let mut converged = false;
    for k in [1u32, 2, 4, 8, 16, 32] {
        let dir = xi.rotated(sign * 0.1 * 0.5f64.powi(k as i32));
        let f = busemann(metric, x0, dir, region, opts)?;
        if let Some(p) = &prev {
            let dev = compare_fields(p, &f).max_deviation;
            history.push((k, dev));
            if dev <= opts.tol {
                prev = Some(f);
                converged = true;
                break;
            }
        }
        prev = Some(f);
    }
    let mut f = prev.expect("at least one field");
    f.side = side;
    f.converged &= converged;
    if !converged {
        let last = history.last().map_or(f64::INFINITY, |h| h.1);
        return Err(Error::NotConverged {
            what: format!("{} field at {:.6}", side.as_str(), xi.angle()),
            residual: last,
        });
    }
    Ok((f, history))
}

/// Vectors calibrated by all three fields at `x` (the Aubry surrogate test).
pub fn aubry_surrogate(fields: &[&BusemannField], x: DiscPoint, duration: f64, tol: f64) -> Result<bool> {
    let mut dirs = Vec::new();
    for f in fields {
        let r = calibrated_ray(f, x, duration)?;
        if r.max_residual > tol {
            return Ok(false);
        }
        dirs.push(r.launch_direction);
    }
    Ok(dirs.windows(2).all(|w| crate::disc::wrap_angle(w[0] - w[1]).abs() <= 1e-2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{hyperbolic_norm, randers_exact};
    use approx::assert_abs_diff_eq;

    fn small_opts() -> BusemannOptions {
        BusemannOptions {
            spacing: 0.3,
            ..Default::default()
        }
    }

    fn origin_region(r: f64) -> Region {
        Region::new(DiscPoint::ORIGIN, r).unwrap()
    }

    #[test]
    fn hyperbolic_field_matches_the_closed_form() {
        let h = hyperbolic_norm();
        let xi = BoundaryDirection::new(0.0);
        let f = busemann(&h, DiscPoint::ORIGIN, xi, origin_region(0.6), &small_opts()).unwrap();
        assert!(f.converged);
        for p in &f.cloud {
            assert_abs_diff_eq!(p.value, horofunction_closed_form(p.z, xi), epsilon = 1e-4);
        }
        let v = f.value(DiscPoint::new(0.5, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(v, 3f64.ln(), epsilon = 1e-4);
        assert_abs_diff_eq!(f.cloud[0].value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn randers_field_is_shifted_by_the_exact_form() {
        let r = randers_exact(0.2).unwrap();
        let xi = BoundaryDirection::new(0.0);
        let f = busemann(&r, DiscPoint::ORIGIN, xi, origin_region(0.6), &small_opts()).unwrap();
        for p in &f.cloud {
            assert_abs_diff_eq!(p.value, horofunction_closed_form(p.z, xi) + 0.2 * p.z.re, epsilon = 1e-4);
        }
    }

    #[test]
    fn shifted_copy_compares_to_a_constant() {
        let h = hyperbolic_norm();
        let f = busemann(&h, DiscPoint::ORIGIN, BoundaryDirection::new(1.0), origin_region(0.4), &small_opts()).unwrap();
        let c = compare_fields(&f.shifted(1.0), &f);
        assert_abs_diff_eq!(c.constant_difference, 1.0, epsilon = 1e-12);
        assert!(c.max_deviation < 1e-12);
    }

    #[test]
    fn calibrated_ray_along_the_real_axis() {
        let h = hyperbolic_norm();
        let f = busemann(&h, DiscPoint::ORIGIN, BoundaryDirection::new(0.0), origin_region(0.4), &small_opts()).unwrap();
        let r = calibrated_ray(&f, DiscPoint::ORIGIN, 10.0).unwrap();
        assert!(r.max_residual <= 1e-4, "{}", r.max_residual);
        assert!(r.launch_direction.abs() < 1e-4);
        assert!(r.gradient_angle < 1e-2);
        assert!(r.endpoint_error.unwrap() < 1e-3);
        assert!(r.ray.samples.iter().all(|s| s.z.im.abs() < 1e-6));
    }

    #[test]
    fn interpolation_reproduces_nodes_and_is_close_between() {
        let h = hyperbolic_norm();
        let xi = BoundaryDirection::new(2.0);
        let f = busemann(&h, DiscPoint::ORIGIN, xi, origin_region(0.6), &small_opts()).unwrap();
        for p in f.cloud.iter().take(10) {
            assert_abs_diff_eq!(f.interpolate(p.z), p.value, epsilon = 1e-12);
        }
        let z = C64::new(0.05, -0.07);
        assert_abs_diff_eq!(f.interpolate(z), horofunction_closed_form(z, xi), epsilon = 2e-2);
    }

    #[test]
    fn cloud_rings() {
        let c = origin_region(1.0).cloud(0.25);
        assert_eq!(c[0].1, C64::new(0.0, 0.0));
        assert!(c.iter().all(|p| distance(p.1, C64::new(0.0, 0.0)) <= 1.0 + 1e-12));
        assert!(Region::new(DiscPoint::ORIGIN, 9.0).is_err());
    }
}
