//! Bounding geodesics of a background geodesic, their widths, lamination
//! checks, periodic minimizers along the axis of a deck transformation and
//! recurrence statistics of the hyperbolic geodesic flow on the quotient.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;

use crate::connect::{crossing_count, crossing_count_with, link_length, minimal_segment, ConnectOptions, CrossingReport};
use crate::disc::{classify, conformal_factor, distance, wrap_angle, BoundaryDirection, Classification, DiscPoint, HyperbolicGeodesic, MobiusMap, C64};
use crate::error::{Error, Result};
use crate::flow::{flow_fixed, flow_fixed_sampled, GeodesicPath, PathSample};
use crate::group::{positive_sequence, FuchsianGroup, GroupElement};
use crate::metric::{unit_vector, FinslerMetric};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingOptions {
    /// Largest construction horizon. Levels are `n_max, n_max / 2, ...` down to 8,
    /// so `16` runs the horizons 8 and 16.
    pub n_max: u32,
    /// Morse constant estimate; anchors are offset by `2 d_est`.
    pub d_est: f64,
    /// Lower bound on the anchor offset.
    pub min_offset: f64,
    /// Allowed change of the middle section between two levels.
    pub change_tol: f64,
    pub connect: ConnectOptions,
}

impl Default for BoundingOptions {
    fn default() -> Self {
        BoundingOptions {
            n_max: 16,
            d_est: 0.4,
            min_offset: 0.25,
            change_tol: 1e-3,
            connect: ConnectOptions::default(),
        }
    }
}

impl BoundingOptions {
    pub fn offset(&self) -> f64 {
        (2.0 * self.d_est).max(self.min_offset)
    }
}

/// The rightmost (`c0`) and leftmost (`c1`) minimal geodesics found near a
/// background geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingPair {
    pub background: HyperbolicGeodesic,
    pub c0: GeodesicPath,
    pub c1: GeodesicPath,
    /// Horizon `n` of the level that produced the paths.
    pub horizon: f64,
    pub offset: f64,
    pub converged: bool,
    /// Hausdorff change of the middle section `|t| <= 1` against the previous level.
    pub middle_change: f64,
    /// `(n, change)` for every level computed.
    pub levels: Vec<(f64, f64)>,
    /// Signed offsets at `t = 0` of the four corner segments of the last level.
    pub corner_offsets: Vec<f64>,
    pub ambiguous_corners: usize,
    /// Solver failure at the next deeper level, if that is where the search stopped.
    pub deeper_error: Option<Error>,
}

impl BoundingPair {
    /// A pair assembled from given paths, treated as converged.
    pub fn from_paths(background: HyperbolicGeodesic, c0: GeodesicPath, c1: GeodesicPath, horizon: f64) -> Self {
        BoundingPair {
            background,
            c0,
            c1,
            horizon,
            offset: 0.0,
            converged: true,
            middle_change: 0.0,
            levels: Vec::new(),
            corner_offsets: Vec::new(),
            ambiguous_corners: 0,
            deeper_error: None,
        }
    }

    pub fn require_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                what: "bounding geodesics".into(),
                residual: self.middle_change,
            })
        }
    }

    /// Image of the pair under an isometry.
    pub fn mapped(&self, m: &MobiusMap) -> BoundingPair {
        BoundingPair {
            background: full_line(&self.background).mapped(m),
            c0: map_path(&self.c0, m),
            c1: map_path(&self.c1, m),
            ..self.clone()
        }
    }

    /// `(t, d_h(c1(t), c0))` on the samples of `c1` with `|t| <= horizon / 2`.
    pub fn separations(&self) -> Vec<(f64, f64)> {
        let t_max = 0.5 * self.horizon;
        let g = full_line(&self.background);
        self.c1
            .samples
            .iter()
            .filter_map(|s| {
                let (t, _) = g.fermi_coordinates(s.z);
                (t.abs() <= t_max).then(|| (t, distance_to_path(s.z, &self.c0)))
            })
            .collect()
    }
}

fn full_line(g: &HyperbolicGeodesic) -> HyperbolicGeodesic {
    HyperbolicGeodesic {
        start: f64::NEG_INFINITY,
        end: f64::INFINITY,
        ..*g
    }
}

pub fn map_path(path: &GeodesicPath, m: &MobiusMap) -> GeodesicPath {
    let samples = path
        .samples
        .iter()
        .map(|s| {
            let (z, v) = m.push(s.z, s.v);
            PathSample { t: s.t, z, v }
        })
        .collect();
    GeodesicPath {
        metric: path.metric.clone(),
        samples,
        diagnostics: path.diagnostics.clone(),
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Hyperbolic distance from `z` to a sampled path: nearest sample, then a
/// golden-section search on the interpolated path around it.
pub fn distance_to_path(z: C64, path: &GeodesicPath) -> f64 {
    let s = &path.samples;
    let (i, d) = s
        .iter()
        .enumerate()
        .map(|(i, p)| (i, distance(z, p.z)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("paths are nonempty");
    if s.len() < 2 {
        return d;
    }
    let lo = s[i.saturating_sub(1)].t;
    let hi = s[(i + 1).min(s.len() - 1)].t;
    let (_, best) = golden_min(|t| distance(z, path.point_at(t)), lo, hi, 60);
    best.min(d)
}

/// Path time at which the background Fermi coordinate `t` of `path` first equals `t`.
pub fn fermi_crossing(g: &HyperbolicGeodesic, path: &GeodesicPath, t: f64) -> Option<f64> {
    let ft: Vec<f64> = path.samples.iter().map(|s| g.fermi_coordinates(s.z).0 - t).collect();
    let i = ft.windows(2).position(|w| w[0] * w[1] <= 0.0 && w[0] != w[1])?;
    let (mut a, mut b) = (path.samples[i].t, path.samples[i + 1].t);
    let mut fa = ft[i];
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        let fm = g.fermi_coordinates(path.point_at(m)).0 - t;
        if fm == 0.0 {
            return Some(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Signed Fermi offset of `path` where it crosses the normal at `g(t)`.
pub fn offset_at(g: &HyperbolicGeodesic, path: &GeodesicPath, t: f64) -> Option<f64> {
    fermi_crossing(g, path, t).map(|tau| g.fermi_coordinates(path.point_at(tau)).1)
}

/// The part of `path` whose background Fermi time lies in `[t0, t1]`.
pub fn fermi_window(g: &HyperbolicGeodesic, path: &GeodesicPath, t0: f64, t1: f64) -> Option<GeodesicPath> {
    let a = fermi_crossing(g, path, t0)?;
    let b = fermi_crossing(g, path, t1)?;
    Some(path.trimmed(a.min(b), a.max(b)))
}

/// Hyperbolic Hausdorff distance between the `|t| <= 1` sections of two paths.
fn middle_change(g: &HyperbolicGeodesic, old: &GeodesicPath, new: &GeodesicPath) -> f64 {
    let (Some(a), Some(b)) = (fermi_window(g, new, -1.0, 1.0), fermi_window(g, old, -1.0, 1.0)) else {
        return f64::INFINITY;
    };
    let one = a.samples.iter().map(|s| distance_to_path(s.z, old)).fold(0.0, f64::max);
    let two = b.samples.iter().map(|s| distance_to_path(s.z, new)).fold(0.0, f64::max);
    one.max(two)
}

/// Bounding geodesics of `g` from minimal segments between anchors offset
/// transversally from `g(-n)` and `g(n)`.
///
/// Returns the last level even when the middle section has not settled;
/// `converged` records the outcome.
pub fn bounding_geodesics(metric: &dyn FinslerMetric, g: &HyperbolicGeodesic, opts: &BoundingOptions) -> Result<BoundingPair> {
    if opts.n_max < 8 {
        return Err(Error::InvalidArgument(format!("n_max = {} is below 8", opts.n_max)));
    }
    let g = full_line(g);
    let o = opts.offset();
    let mut horizons = vec![opts.n_max as f64];
    while horizons[0] / 2.0 >= 8.0 {
        horizons.insert(0, horizons[0] / 2.0);
    }
    let mut levels = Vec::new();
    let mut prev: Option<BoundingPair> = None;
    for (li, &h) in horizons.iter().enumerate() {
        let corners = [(-o, -o), (-o, o), (o, -o), (o, o)];
        let segs = corners
            .par_iter()
            .map(|&(sa, sb)| {
                let x = DiscPoint::from_complex(g.fermi_point(-h, sa))?;
                let y = DiscPoint::from_complex(g.fermi_point(h, sb))?;
                minimal_segment(metric, x, y, &opts.connect)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<_>>>();
        // a failure past the first level leaves the previous level as the answer
        let segs = match (segs, prev.take()) {
            (Ok(s), p) => {
                prev = p;
                s
            }
            (Err(e), Some(mut p)) => {
                p.converged = false;
                p.deeper_error = Some(e);
                return Ok(p);
            }
            (Err(e), None) => return Err(e),
        };
        let offsets = segs
            .iter()
            .map(|s| {
                offset_at(&g, &s.path, 0.0).ok_or_else(|| Error::NotConverged {
                    what: "corner segment misses the middle normal".into(),
                    residual: f64::INFINITY,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let argmax = (0..4).max_by(|&a, &b| offsets[a].total_cmp(&offsets[b])).unwrap_or(0);
        let argmin = (0..4).min_by(|&a, &b| offsets[a].total_cmp(&offsets[b])).unwrap_or(0);
        let c0 = segs[argmin].path.clone();
        let c1 = segs[argmax].path.clone();
        let change = match &prev {
            Some(p) => middle_change(&g, &p.c0, &c0).max(middle_change(&g, &p.c1, &c1)),
            None => f64::INFINITY,
        };
        levels.push((h, change));
        let pair = BoundingPair {
            background: g,
            c0,
            c1,
            horizon: h,
            offset: o,
            converged: change <= opts.change_tol,
            middle_change: change,
            levels: levels.clone(),
            corner_offsets: offsets,
            ambiguous_corners: segs.iter().filter(|s| s.ambiguous).count(),
            deeper_error: None,
        };
        if pair.converged || li + 1 == horizons.len() {
            return Ok(pair);
        }
        prev = Some(pair);
    }
    unreachable!("at least one horizon")
}

/// Upper bound on any bounding-pair separation: both bounding geodesics lie
/// within the Morse constant of the background geodesic.
pub fn width_bound(d_est: f64) -> f64 {
    2.0 * d_est
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthReport {
    /// Infimum of the separation over `|t| <= t_max`.
    pub i_est: f64,
    /// Infimum over `t_tail <= t <= t_max`.
    pub w_est: f64,
    pub t_tail: f64,
    pub t_max: f64,
    /// Largest gap between consecutive grid times.
    pub grid_resolution: f64,
    /// `w_est` recomputed with `t_tail` halved.
    pub w_half_tail: f64,
    /// `|w_est - w_half_tail|`.
    pub stability: f64,
    pub converged: bool,
    pub separations: Vec<(f64, f64)>,
}

/// Widths of a bounding pair. The usable grid is `|t| <= horizon / 2`; the
/// tail starts at `t_tail`, by default a quarter of the horizon.
pub fn widths(pair: &BoundingPair, t_tail: Option<f64>) -> WidthReport {
    let t_max = 0.5 * pair.horizon;
    let t_tail = t_tail.unwrap_or(0.5 * t_max).clamp(0.0, t_max);
    let sep = pair.separations();
    let inf_from = |t0: f64| sep.iter().filter(|p| p.0 >= t0).map(|p| p.1).fold(f64::INFINITY, f64::min);
    let i_est = sep.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let w_est = inf_from(t_tail);
    let w_half_tail = inf_from(0.5 * t_tail);
    let grid_resolution = sep.windows(2).map(|w| (w[1].0 - w[0].0).abs()).fold(0.0, f64::max);
    WidthReport {
        i_est,
        w_est,
        t_tail,
        t_max,
        grid_resolution,
        w_half_tail,
        stability: (w_est - w_half_tail).abs(),
        converged: pair.converged,
        separations: sep,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionMember {
    /// Backward end of the background geodesic.
    pub minus_end: BoundaryDirection,
    /// "fan", "refine" or "extra".
    pub role: &'static str,
    pub pair: Option<BoundingPair>,
    pub width: Option<WidthReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionWidthReport {
    pub xi: BoundaryDirection,
    pub members: Vec<DirectionMember>,
    /// Maximum tail width over members whose pair converged.
    pub w_xi: Option<f64>,
    /// Maximum tail width over every member with a pair, converged or not.
    pub w_xi_all: f64,
    pub argmax: Option<usize>,
    /// Members whose construction returned an error.
    pub failures: usize,
    /// Members whose pair did not settle within the horizon.
    pub unconverged: usize,
    pub d_est: f64,
    /// `i <= w <= w(xi) <= width_bound(d_est) + 2 grid` on every converged member.
    pub chain_holds: bool,
}

fn direction_member(
    metric: &dyn FinslerMetric,
    xi: BoundaryDirection,
    alpha: BoundaryDirection,
    role: &'static str,
    opts: &BoundingOptions,
    t_tail: Option<f64>,
) -> DirectionMember {
    let result = HyperbolicGeodesic::through_boundary(alpha, xi).and_then(|g| bounding_geodesics(metric, &g, opts));
    match result {
        Ok(pair) => {
            let width = widths(&pair, t_tail);
            DirectionMember {
                minus_end: alpha,
                role,
                pair: Some(pair),
                width: Some(width),
                error: None,
            }
        }
        Err(e) => DirectionMember {
            minus_end: alpha,
            role,
            pair: None,
            width: None,
            error: Some(e.to_string()),
        },
    }
}

/// `w(xi)` over a fan of backward ends `xi + 2 PI (k + 1/2) / fan`, the
/// `extra` backward ends, and one bisection round around the maximizing fan member.
pub fn width_of_direction(
    metric: &dyn FinslerMetric,
    xi: BoundaryDirection,
    fan: usize,
    extra: &[BoundaryDirection],
    opts: &BoundingOptions,
    t_tail: Option<f64>,
) -> Result<DirectionWidthReport> {
    if fan < 3 {
        return Err(Error::InvalidArgument(format!("fan = {fan} is below 3")));
    }
    let step = std::f64::consts::TAU / fan as f64;
    let mut ends: Vec<(BoundaryDirection, &'static str)> = (0..fan).map(|k| (xi.rotated(step * (k as f64 + 0.5)), "fan")).collect();
    ends.extend(extra.iter().filter(|a| a.separation(xi) > 1e-3).map(|&a| (a, "extra")));
    let mut members: Vec<DirectionMember> = ends
        .par_iter()
        .map(|&(a, role)| direction_member(metric, xi, a, role, opts, t_tail))
        .collect();
    let tail = |m: &DirectionMember| m.width.as_ref().filter(|w| w.converged).map(|w| w.w_est);
    let best_fan = (0..fan).filter(|&k| tail(&members[k]).is_some()).max_by(|&a, &b| {
        tail(&members[a]).unwrap_or(0.0).total_cmp(&tail(&members[b]).unwrap_or(0.0))
    });
    if let Some(k) = best_fan {
        let refine: Vec<BoundaryDirection> = [k as f64, k as f64 + 1.0]
            .iter()
            .map(|&j| xi.rotated(step * j))
            .filter(|a| a.separation(xi) > 1e-3)
            .collect();
        let more: Vec<DirectionMember> = refine
            .par_iter()
            .map(|&a| direction_member(metric, xi, a, "refine", opts, t_tail))
            .collect();
        members.extend(more);
    }
    let mut w_xi: Option<f64> = None;
    let mut argmax = None;
    for (i, m) in members.iter().enumerate() {
        if let Some(w) = tail(m) {
            if w_xi.map_or(true, |b| w > b) {
                w_xi = Some(w);
                argmax = Some(i);
            }
        }
    }
    let w_xi_all = members.iter().filter_map(|m| m.width.as_ref().map(|w| w.w_est)).fold(0.0, f64::max);
    let failures = members.iter().filter(|m| m.error.is_some()).count();
    let unconverged = members.iter().filter(|m| m.width.as_ref().is_some_and(|w| !w.converged)).count();
    let top = w_xi.unwrap_or(0.0);
    let chain_holds = members.iter().filter_map(|m| m.width.as_ref().filter(|w| w.converged)).all(|w| {
        w.i_est <= w.w_est && w.w_est <= top && top <= width_bound(opts.d_est) + 2.0 * w.grid_resolution
    });
    Ok(DirectionWidthReport {
        xi,
        members,
        w_xi,
        w_xi_all,
        argmax,
        failures,
        unconverged,
        d_est: opts.d_est,
        chain_holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaminationOptions {
    pub bounding: BoundingOptions,
    /// Intersections where the two paths stay this close over `window` samples
    /// on each side are below the resolution of the construction.
    pub coincidence_tol: f64,
    pub window: usize,
}

impl Default for LaminationOptions {
    fn default() -> Self {
        LaminationOptions {
            bounding: BoundingOptions::default(),
            coincidence_tol: 1e-3,
            window: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaminationReport {
    pub xi: BoundaryDirection,
    pub direction: DirectionWidthReport,
    /// Trimmed bounding paths: member `m` contributes `2m` (`c0`) and `2m + 1` (`c1`).
    pub paths: Vec<Option<GeodesicPath>>,
    /// Path pairs with at least one transverse crossing.
    pub crossings: Vec<(usize, usize, CrossingReport)>,
    pub transverse: usize,
    /// Intersection clusters below the coincidence tolerance.
    pub coincident: usize,
    /// Corner segments of the bounding constructions that were ambiguous.
    pub ambiguous_segments: usize,
    pub pairs_checked: usize,
}

/// Pairwise transverse crossings among the bounding paths of a fan of
/// background geodesics ending at `xi`.
pub fn lamination_check(metric: &dyn FinslerMetric, xi: BoundaryDirection, fan: usize, opts: &LaminationOptions) -> Result<LaminationReport> {
    if fan < 8 {
        return Err(Error::InvalidArgument(format!("fan = {fan} is below 8")));
    }
    let direction = width_of_direction(metric, xi, fan, &[], &opts.bounding, None)?;
    let mut paths = Vec::new();
    let mut ambiguous_segments = 0;
    for m in &direction.members {
        match &m.pair {
            Some(p) => {
                let t = 0.5 * p.horizon;
                paths.push(fermi_window(&p.background, &p.c0, -t, t));
                paths.push(fermi_window(&p.background, &p.c1, -t, t));
                ambiguous_segments += p.ambiguous_corners;
            }
            None => {
                paths.push(None);
                paths.push(None);
            }
        }
    }
    let index: Vec<(usize, usize)> = (0..paths.len())
        .flat_map(|i| (i + 1..paths.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| paths[i].is_some() && paths[j].is_some())
        .collect();
    let reports: Vec<(usize, usize, CrossingReport)> = index
        .par_iter()
        .map(|&(i, j)| {
            let (p, q) = (paths[i].as_ref().unwrap(), paths[j].as_ref().unwrap());
            (i, j, crossing_count_with(p, q, opts.coincidence_tol, opts.window))
        })
        .collect();
    let transverse = reports.iter().map(|r| r.2.transverse).sum();
    let coincident = reports.iter().map(|r| r.2.overlaps).sum();
    let pairs_checked = reports.len();
    Ok(LaminationReport {
        xi,
        direction,
        paths,
        crossings: reports.into_iter().filter(|r| r.2.transverse > 0).collect(),
        transverse,
        coincident,
        ambiguous_segments,
        pairs_checked,
    })
}

fn power(m: &MobiusMap, k: i32) -> MobiusMap {
    let base = if k < 0 { m.inverse() } else { *m };
    (0..k.unsigned_abs()).fold(MobiusMap::IDENTITY, |acc, _| acc.compose(&base))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicOptions {
    /// Number of transversal multi-starts across the strip.
    pub strip_resolution: usize,
    pub d_est: f64,
    /// Equivalence constant bounding the per-period length.
    pub c_f: f64,
    /// Node spacing of the periodic polygon.
    pub node_spacing: f64,
    /// Integrator steps per unit time for the periodic shooting.
    pub steps_per_unit: f64,
    /// Heteroclinic anchors sit this many periods before and after the middle.
    pub heteroclinic_periods: i32,
    pub connect: ConnectOptions,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        PeriodicOptions {
            strip_resolution: 9,
            d_est: 0.4,
            c_f: 1.05,
            node_spacing: 0.5,
            steps_per_unit: 32.0,
            heteroclinic_periods: 3,
            connect: ConnectOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicMinimizer {
    /// Signed Fermi offset from the axis where it crosses the normal at `t = 0`.
    pub offset: f64,
    /// Euclidean direction at the crossing.
    pub theta: f64,
    /// `F`-length of one period.
    pub length: f64,
    pub discrete_length: f64,
    /// Five periods, stitched from translates of one integrated period.
    pub path: GeodesicPath,
    /// Euclidean Hausdorff distance between `tau` of one period and the next integrated period.
    pub invariance_residual: f64,
    pub shooting_residual: f64,
    /// Length equal to the smallest one found.
    pub minimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heteroclinic {
    pub from: usize,
    pub to: usize,
    pub path: Option<GeodesicPath>,
    pub length: f64,
    /// Largest distance to the source minimizer over the first quarter.
    pub drift_start: f64,
    /// Largest distance to the target minimizer over the last quarter.
    pub drift_end: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicStructureReport {
    pub word: String,
    pub axis: HyperbolicGeodesic,
    pub translation_length: f64,
    /// Distinct local minimizers, ordered by offset.
    pub minimizers: Vec<PeriodicMinimizer>,
    pub starts: usize,
    /// Multi-starts that ended at a non-minimal critical point.
    pub rejected_critical: usize,
    pub polish_failures: usize,
    /// Separation of the outermost minimal pair over one period.
    pub i_est: f64,
    /// The same over a later period.
    pub w_est: f64,
    pub heteroclinics: Vec<Heteroclinic>,
    pub length_bounds: (f64, f64),
    pub lengths_within_bounds: bool,
    pub max_invariance_residual: f64,
}

impl PeriodicStructureReport {
    pub fn minimal(&self) -> impl Iterator<Item = &PeriodicMinimizer> {
        self.minimizers.iter().filter(|m| m.minimal)
    }
}

struct Polygon<'a> {
    metric: &'a dyn FinslerMetric,
    axis: HyperbolicGeodesic,
    ell: f64,
    k: usize,
}

impl Polygon<'_> {
    fn point(&self, i: usize, s: f64) -> C64 {
        self.axis.fermi_point(self.ell * i as f64 / self.k as f64, s)
    }

    /// Link from node `i` to node `i + 1`, the last closing up through `tau`.
    fn link(&self, i: usize, si: f64, sj: f64) -> f64 {
        link_length(self.metric, self.point(i, si), self.point(i + 1, sj))
    }

    fn energy(&self, s: &[f64]) -> f64 {
        (0..self.k).map(|i| self.link(i, s[i], s[(i + 1) % self.k])).sum()
    }

    fn local(&self, s: &[f64], i: usize, si: f64) -> f64 {
        let k = self.k;
        let prev = (i + k - 1) % k;
        self.link(prev, s[prev], si) + self.link(i, si, s[(i + 1) % k])
    }

    fn gradient(&self, s: &[f64]) -> DVector<f64> {
        let h = 1e-6;
        DVector::from_fn(self.k, |i, _| (self.local(s, i, s[i] + h) - self.local(s, i, s[i] - h)) / (2.0 * h))
    }

    fn hessian(&self, s: &[f64]) -> DMatrix<f64> {
        let h = 1e-4;
        let k = self.k;
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            let c = self.local(s, i, s[i]);
            m[(i, i)] = (self.local(s, i, s[i] + h) - 2.0 * c + self.local(s, i, s[i] - h)) / (h * h);
            let j = (i + 1) % k;
            let l = |a: f64, b: f64| self.link(i, s[i] + a, s[j] + b);
            let mixed = (l(h, h) - l(h, -h) - l(-h, h) + l(-h, -h)) / (4.0 * h * h);
            m[(i, j)] += mixed;
            m[(j, i)] += mixed;
        }
        m
    }

    /// Damped Newton descent; returns the offsets, energy and whether the end point is a strict local minimum.
    fn minimize(&self, mut s: Vec<f64>) -> (Vec<f64>, f64, bool) {
        let mut e = self.energy(&s);
        for _ in 0..60 {
            let g = self.gradient(&s);
            let hess = self.hessian(&s);
            let dir = match hess.clone().cholesky() {
                Some(ch) => -ch.solve(&g),
                None => -g.clone(),
            };
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-8 {
                let trial: Vec<f64> = s.iter().zip(dir.iter()).map(|(a, d)| a + alpha * d).collect();
                let et = self.energy(&trial);
                if et <= e {
                    moved = et < e || dir.amax() * alpha < 1e-12;
                    s = trial;
                    e = et;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved || dir.amax() * alpha < 1e-10 {
                break;
            }
        }
        let is_min = self.hessian(&s).cholesky().is_some() && self.gradient(&s).amax() < 1e-6;
        (s, e, is_min)
    }
}

struct PeriodicShooter<'a> {
    metric: &'a dyn FinslerMetric,
    axis: HyperbolicGeodesic,
    tau: MobiusMap,
    steps_per_unit: f64,
}

impl PeriodicShooter<'_> {
    fn start(&self, s0: f64, theta: f64) -> (C64, C64) {
        let z = self.axis.fermi_point(0.0, s0);
        (z, unit_vector(self.metric, z, theta))
    }

    fn steps(&self, t: f64) -> usize {
        (t.abs() * self.steps_per_unit).ceil().max(8.0) as usize
    }

    fn residual(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        let (z0, v0) = self.start(x[0], x[1]);
        let (z1, v1) = flow_fixed(self.metric, z0, v0, x[2], self.steps(x[2]))?;
        let (zt, vt) = self.tau.push(z0, v0);
        let d = (z1 - zt) * conformal_factor(zt);
        Ok(Vector3::new(d.re, d.im, wrap_angle(v1.arg() - vt.arg())))
    }

    fn solve(&self, mut x: Vector3<f64>) -> Result<(Vector3<f64>, f64)> {
        let mut r = self.residual(&x)?;
        for _ in 0..40 {
            if r.norm() < 1e-11 {
                break;
            }
            let mut jac = Matrix3::zeros();
            for c in 0..3 {
                let mut xp = x;
                xp[c] += 1e-7;
                jac.set_column(c, &((self.residual(&xp)? - r) / 1e-7));
            }
            let Some(dx) = jac.lu().solve(&(-r)) else { break };
            let mut alpha = 1.0;
            let mut improved = false;
            while alpha > 1e-4 {
                let xn = x + dx * alpha;
                if let Ok(rn) = self.residual(&xn) {
                    if rn.norm() < r.norm() {
                        x = xn;
                        r = rn;
                        improved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !improved {
                break;
            }
        }
        Ok((x, r.norm()))
    }

    fn one_period(&self, x: &Vector3<f64>, periods: usize) -> Result<Vec<PathSample>> {
        let (z0, v0) = self.start(x[0], x[1]);
        flow_fixed_sampled(self.metric, z0, v0, 0.0, x[2] * periods as f64, self.steps(x[2]) * periods)
    }
}

fn euclidean_to_polyline(z: C64, pts: &[C64]) -> f64 {
    pts.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let l2 = d.norm_sqr();
            let t = if l2 > 0.0 { (((z - w[0]) * d.conj()).re / l2).clamp(0.0, 1.0) } else { 0.0 };
            (z - w[0] - d * t).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Distance from `z` to a `tau`-invariant path given over five periods
/// starting two periods before the axis normal at `t = 0`.
fn distance_to_periodic(z: C64, axis: &HyperbolicGeodesic, tau: &MobiusMap, ell: f64, path: &GeodesicPath) -> f64 {
    let (t, _) = axis.fermi_coordinates(z);
    let m = (t / ell).floor() as i32;
    distance_to_path(power(tau, -m).apply(z), path)
}

/// Periodic minimizers along the axis of a hyperbolic deck transformation,
/// the widths of their outermost pair and heteroclinic connections between
/// neighbours.
pub fn periodic_structure(
    metric: &dyn FinslerMetric,
    group: &FuchsianGroup,
    word: &GroupElement,
    opts: &PeriodicOptions,
) -> Result<PeriodicStructureReport> {
    if !metric.gamma_invariant() {
        return Err(Error::InvalidMetric(format!("{} is not invariant under the deck group", metric.id())));
    }
    let Classification::Hyperbolic { axis, translation_length: ell } = classify(&word.map) else {
        return Err(Error::InvalidArgument(format!("{} is not hyperbolic", word.word_string())));
    };
    let tau = group.element(&word.word).map;
    let k = ((ell / opts.node_spacing).ceil() as usize).max(3);
    let poly = Polygon { metric, axis, ell, k };
    let half = (2.0 * opts.d_est).max(0.5);
    let n = opts.strip_resolution.max(1);
    let starts: Vec<f64> = (0..n)
        .map(|i| if n == 1 { 0.0 } else { -half + 2.0 * half * i as f64 / (n - 1) as f64 })
        .collect();
    let discrete: Vec<(Vec<f64>, f64, bool)> = starts.par_iter().map(|&s| poly.minimize(vec![s; k])).collect();
    let rejected_critical = discrete.iter().filter(|d| !d.2).count();
    let mut distinct: Vec<(Vec<f64>, f64)> = Vec::new();
    for (s, e, ok) in discrete {
        if ok && distinct.iter().all(|(o, _)| o.iter().zip(&s).any(|(a, b)| (a - b).abs() > 1e-3)) {
            distinct.push((s, e));
        }
    }

    let shooter = PeriodicShooter {
        metric,
        axis,
        tau,
        steps_per_unit: opts.steps_per_unit,
    };
    let polished: Vec<Result<PeriodicMinimizer>> = distinct
        .par_iter()
        .map(|(s, e)| {
            let ahead = poly.point(1, s[1 % k]);
            let behind = tau.inverse().apply(poly.point(k - 1, s[k - 1]));
            let theta = (ahead - behind).arg();
            let (x, res) = shooter.solve(Vector3::new(s[0], theta, *e))?;
            if res > 1e-9 {
                return Err(Error::NotConverged {
                    what: "periodic shooting".into(),
                    residual: res,
                });
            }
            let two = shooter.one_period(&x, 2)?;
            let steps = shooter.steps(x[2]);
            let first: Vec<PathSample> = two[..=steps].to_vec();
            let second: Vec<C64> = two[steps..].iter().map(|p| p.z).collect();
            let first_pts: Vec<C64> = first.iter().map(|p| p.z).collect();
            let mapped: Vec<C64> = first_pts.iter().map(|&z| tau.apply(z)).collect();
            let back: Vec<C64> = second.iter().map(|&z| tau.inverse().apply(z)).collect();
            let invariance = mapped
                .iter()
                .map(|&z| euclidean_to_polyline(z, &second))
                .chain(back.iter().map(|&z| euclidean_to_polyline(z, &first_pts)))
                .fold(0.0, f64::max);
            let mut samples = Vec::new();
            for j in -2..3 {
                let m = power(&tau, j);
                let skip = usize::from(j > -2);
                samples.extend(first.iter().skip(skip).map(|p| {
                    let (z, v) = m.push(p.z, p.v);
                    PathSample {
                        t: p.t + x[2] * j as f64,
                        z,
                        v,
                    }
                }));
            }
            Ok(PeriodicMinimizer {
                offset: x[0],
                theta: x[1],
                length: x[2],
                discrete_length: *e,
                path: GeodesicPath::from_samples(metric.id(), samples),
                invariance_residual: invariance,
                shooting_residual: res,
                minimal: false,
            })
        })
        .collect();
    let polish_failures = polished.iter().filter(|p| p.is_err()).count();
    let mut minimizers: Vec<PeriodicMinimizer> = Vec::new();
    for p in polished.into_iter().flatten() {
        let one = p.path.trimmed(0.0, p.length);
        let dup = minimizers.iter().any(|q| {
            let other = q.path.trimmed(0.0, q.length);
            let a = one.samples.iter().map(|s| distance_to_path(s.z, &q.path)).fold(0.0, f64::max);
            let b = other.samples.iter().map(|s| distance_to_path(s.z, &p.path)).fold(0.0, f64::max);
            a.max(b) < 1e-4
        });
        if !dup {
            minimizers.push(p);
        }
    }
    if minimizers.is_empty() {
        return Err(Error::NotConverged {
            what: "periodic minimizer search".into(),
            residual: f64::INFINITY,
        });
    }
    minimizers.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    let best = minimizers.iter().map(|m| m.length).fold(f64::INFINITY, f64::min);
    for m in &mut minimizers {
        m.minimal = m.length <= best + 10.0 * opts.connect.tol;
    }

    let minimal: Vec<usize> = (0..minimizers.len()).filter(|&i| minimizers[i].minimal).collect();
    let (lo, hi) = (minimal[0], minimal[minimal.len() - 1]);
    let (i_est, w_est) = if lo == hi {
        (0.0, 0.0)
    } else {
        let c0 = &minimizers[lo];
        let c1 = &minimizers[hi];
        let over = |a: f64, b: f64| {
            c1.path
                .samples
                .iter()
                .filter(|s| s.t >= a * c1.length && s.t <= b * c1.length)
                .map(|s| distance_to_path(s.z, &c0.path))
                .fold(f64::INFINITY, f64::min)
        };
        (over(0.0, 1.0), over(1.0, 2.0))
    };

    let p = opts.heteroclinic_periods;
    let mut jobs = Vec::new();
    for w in minimal.windows(2) {
        jobs.push((w[0], w[1]));
        jobs.push((w[1], w[0]));
    }
    let heteroclinics = jobs
        .par_iter()
        .map(|&(from, to)| {
            let a = &minimizers[from];
            let b = &minimizers[to];
            let x = power(&tau, -p).apply(a.path.point_at(0.0));
            let y = power(&tau, p).apply(b.path.point_at(0.0));
            let seg = DiscPoint::from_complex(x)
                .and_then(|x| DiscPoint::from_complex(y).map(|y| (x, y)))
                .and_then(|(x, y)| minimal_segment(metric, x, y, &opts.connect));
            match seg {
                Ok(seg) => {
                    let total = seg.path.duration();
                    let t0 = seg.path.start().t;
                    let drift = |lo: f64, hi: f64, target: &PeriodicMinimizer| {
                        seg.path
                            .samples
                            .iter()
                            .filter(|s| s.t - t0 >= lo * total && s.t - t0 <= hi * total)
                            .map(|s| distance_to_periodic(s.z, &axis, &tau, ell, &target.path))
                            .fold(0.0, f64::max)
                    };
                    Heteroclinic {
                        from,
                        to,
                        length: seg.length,
                        drift_start: drift(0.0, 0.25, a),
                        drift_end: drift(0.75, 1.0, b),
                        path: Some(seg.path),
                        error: None,
                    }
                }
                Err(e) => Heteroclinic {
                    from,
                    to,
                    path: None,
                    length: f64::NAN,
                    drift_start: f64::NAN,
                    drift_end: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let length_bounds = (ell / opts.c_f, opts.c_f * ell);
    let lengths_within_bounds = minimizers
        .iter()
        .all(|m| m.length >= length_bounds.0 && m.length <= length_bounds.1);
    let max_invariance_residual = minimizers.iter().map(|m| m.invariance_residual).fold(0.0, f64::max);
    Ok(PeriodicStructureReport {
        word: word.word_string(),
        axis,
        translation_length: ell,
        minimizers,
        starts: n,
        rejected_critical,
        polish_failures,
        i_est,
        w_est,
        heteroclinics,
        length_bounds,
        lengths_within_bounds,
        max_invariance_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnEvent {
    pub t: f64,
    /// Hyperbolic distance to the initial point.
    pub position: f64,
    /// Angle to the initial direction.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceReport {
    pub start: C64,
    pub theta: f64,
    pub horizon: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub returns: Vec<ReturnEvent>,
    /// Closest non-trivial approach found, whether or not it counts as a return.
    pub closest: Option<ReturnEvent>,
    pub coverage: f64,
    pub cells_visited: usize,
    pub cells_total: usize,
    pub samples: usize,
}

/// Absolute floor added to the return threshold.
pub const RETURN_FLOOR: f64 = 1e-9;

/// Grid resolution of the coverage statistic: space cells per side and angle bins.
pub const COVERAGE_GRID: (usize, usize) = (16, 8);

/// Hyperbolic geodesic flow on the quotient, followed in a moving frame
/// `M` with `M(0)` the current point and `M'(0) > 0` along the direction,
/// re-reduced into the fundamental domain after every step.
struct QuotientFlow<'a> {
    group: &'a FuchsianGroup,
    frame: MobiusMap,
}

impl QuotientFlow<'_> {
    fn step(&mut self, dt: f64) -> bool {
        let next = self.frame.compose(&MobiusMap::real_translation(dt));
        let (_, g) = self.group.reduce_map_uncapped(next.apply(C64::new(0.0, 0.0)));
        let moved = g.distance_up_to_sign(&MobiusMap::IDENTITY) > 1e-12;
        let m = g.compose(&next);
        self.frame = MobiusMap::new(m.a, m.b).unwrap_or(m);
        moved
    }

    fn point(&self) -> C64 {
        self.frame.apply(C64::new(0.0, 0.0))
    }

    fn direction(&self) -> f64 {
        self.frame.derivative(C64::new(0.0, 0.0)).arg()
    }
}

fn start_frame(group: &FuchsianGroup, z0: C64, theta0: f64) -> MobiusMap {
    let frame = MobiusMap::translation_to(z0).compose(&MobiusMap::rotation(theta0));
    let (_, g) = group.reduce_map_uncapped(z0);
    g.compose(&frame)
}

fn domain_radius(group: &FuchsianGroup) -> f64 {
    group.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Returns of the quotient geodesic flow to the initial tangent vector and
/// coverage of a coarse position-angle grid over the fundamental domain.
pub fn recurrence_scan(group: &FuchsianGroup, z0: DiscPoint, theta0: f64, horizon: f64, epsilon: f64, dt: f64) -> Result<RecurrenceReport> {
    if !(dt > 0.0) || !(horizon > 0.0) || !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument("horizon and dt must be positive, epsilon nonnegative".into()));
    }
    let mut flow = QuotientFlow {
        group,
        frame: start_frame(group, z0.z(), theta0),
    };
    let start = flow.point();
    let theta = flow.direction();
    let (side, bins) = COVERAGE_GRID;
    let r = domain_radius(group);
    let cell = |z: C64| -> Option<usize> {
        let ix = (((z.re + r) / (2.0 * r)) * side as f64).floor();
        let iy = (((z.im + r) / (2.0 * r)) * side as f64).floor();
        (ix >= 0.0 && iy >= 0.0 && ix < side as f64 && iy < side as f64).then(|| iy as usize * side + ix as usize)
    };
    let centre = |c: usize| {
        let (ix, iy) = (c % side, c / side);
        C64::new(-r + (ix as f64 + 0.5) * 2.0 * r / side as f64, -r + (iy as f64 + 0.5) * 2.0 * r / side as f64)
    };
    let inside: Vec<bool> = (0..side * side).map(|c| group.in_domain(centre(c), 0.0)).collect();
    let mut visited = vec![false; side * side * bins];
    let mut mark = |z: C64, dir: f64| {
        if let Some(c) = cell(z).filter(|&c| inside[c]) {
            let b = ((dir.rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU) * bins as f64).floor() as usize;
            visited[c * bins + b.min(bins - 1)] = true;
        }
    };
    mark(start, theta);

    let steps = (horizon / dt).ceil() as usize;
    let threshold = epsilon + RETURN_FLOOR;
    let gap = |frame: &MobiusMap, s: f64| {
        let m = frame.compose(&MobiusMap::real_translation(s));
        let z = m.apply(C64::new(0.0, 0.0));
        let a = m.derivative(C64::new(0.0, 0.0)).arg();
        (distance(z, start), wrap_angle(a - theta).abs())
    };
    let mut returns = Vec::new();
    let mut closest: Option<ReturnEvent> = None;
    let mut frames = std::collections::VecDeque::with_capacity(3);
    let mut dists = std::collections::VecDeque::with_capacity(3);
    frames.push_back(flow.frame);
    dists.push_back(0.0);
    for k in 1..=steps {
        flow.step(dt);
        let z = flow.point();
        mark(z, flow.direction());
        frames.push_back(flow.frame);
        dists.push_back(distance(z, start));
        if frames.len() > 3 {
            frames.pop_front();
            dists.pop_front();
        }
        // a local minimum of the distance at the middle sample; the start itself is excluded
        if dists.len() == 3 && k >= 2 && dists[1] <= dists[0] && dists[1] < dists[2] && dists[1] < 0.5 {
            let f = frames[1];
            let (s, _) = golden_min(|s| gap(&f, s).0, -dt, dt, 60);
            let (position, angle) = gap(&f, s);
            let t = (k - 1) as f64 * dt + s;
            let ev = ReturnEvent { t, position, angle };
            if closest.map_or(true, |c| position.max(angle) < c.position.max(c.angle)) {
                closest = Some(ev);
            }
            if position <= threshold && angle <= threshold {
                returns.push(ev);
            }
        }
    }
    let cells_total = inside.iter().filter(|&&b| b).count() * bins;
    let cells_visited = visited.iter().filter(|&&b| b).count();
    Ok(RecurrenceReport {
        start,
        theta,
        horizon,
        epsilon,
        dt,
        returns,
        closest,
        coverage: cells_visited as f64 / cells_total.max(1) as f64,
        cells_visited,
        cells_total,
        samples: steps + 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicityReport {
    /// Pieces of the geodesic between two successive domain reductions.
    pub pieces: usize,
    pub transverse: usize,
    pub horizon: f64,
}

/// Self-crossings of a hyperbolic geodesic in the quotient up to `horizon`,
/// counted among the domain-reduced pieces.
pub fn quotient_self_crossings(group: &FuchsianGroup, z0: DiscPoint, theta0: f64, horizon: f64, dt: f64) -> Result<SimplicityReport> {
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon and dt must be positive".into()));
    }
    let mut flow = QuotientFlow {
        group,
        frame: start_frame(group, z0.z(), theta0),
    };
    let sample = |f: &QuotientFlow, t: f64| PathSample {
        t,
        z: f.point(),
        v: C64::from_polar(1.0, f.direction()),
    };
    let mut pieces: Vec<Vec<PathSample>> = vec![vec![sample(&flow, 0.0)]];
    let steps = (horizon / dt).ceil() as usize;
    for k in 1..=steps {
        let before = flow.frame;
        let moved = flow.step(dt);
        let t = k as f64 * dt;
        if moved {
            // close the old piece at the untransformed point, open the new one
            let m = before.compose(&MobiusMap::real_translation(dt));
            pieces.last_mut().expect("nonempty").push(PathSample {
                t,
                z: m.apply(C64::new(0.0, 0.0)),
                v: C64::from_polar(1.0, m.derivative(C64::new(0.0, 0.0)).arg()),
            });
            pieces.push(vec![sample(&flow, t)]);
        } else {
            pieces.last_mut().expect("nonempty").push(sample(&flow, t));
        }
    }
    let paths: Vec<GeodesicPath> = pieces
        .into_iter()
        .filter(|p| p.len() >= 2)
        .map(|p| GeodesicPath::from_samples("hyperbolic", p))
        .collect();
    let mut transverse = 0;
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            transverse += crossing_count(&paths[i], &paths[j]).transverse;
        }
    }
    Ok(SimplicityReport {
        pieces: paths.len(),
        transverse,
        horizon,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemicontinuityReport {
    pub geodesic: HyperbolicGeodesic,
    pub times: Vec<f64>,
    pub words: Vec<String>,
    /// `(minus, plus)` end angles of `tau_n g`.
    pub images: Vec<(f64, f64)>,
    /// Largest end movement between consecutive images.
    pub endpoint_steps: Vec<f64>,
    pub certified: bool,
    /// Limit of the images, extrapolated from the last three.
    pub limit: HyperbolicGeodesic,
    pub w_g: WidthReport,
    pub i_limit: WidthReport,
    /// Why the limit pair stopped short of the deepest level, if it did.
    pub limit_error: Option<Error>,
    /// `w_est(g) <= i_est(g') + tol` on a certified sequence with a converged
    /// limit pair.
    pub holds: bool,
}

/// Aitken extrapolation of a geometrically converging sequence of angles,
/// falling back to the last term when the tail is not contracting.
fn aitken(a0: f64, a1: f64, a2: f64) -> f64 {
    let d1 = wrap_angle(a1 - a0);
    let d2 = wrap_angle(a2 - a1);
    let den = d2 - d1;
    if d1 == 0.0 || d2.abs() >= 0.5 * d1.abs() || den == 0.0 {
        return a2;
    }
    a2 - d2 * d2 / den
}

/// Compares the tail width of `g` with the full width of the limit `g'` of
/// `tau_n g` along a positive sequence.
pub fn semicontinuity_check(
    metric: &dyn FinslerMetric,
    group: &FuchsianGroup,
    g: &HyperbolicGeodesic,
    times: &[f64],
    tol: f64,
    opts: &BoundingOptions,
) -> Result<SemicontinuityReport> {
    if times.len() < 3 {
        return Err(Error::InvalidArgument("at least three times are needed".into()));
    }
    let g = full_line(g);
    let seq = positive_sequence(group, &g, times)?;
    let images: Vec<(f64, f64)> = seq
        .elements
        .iter()
        .map(|e| {
            let h = g.mapped(&e.map);
            (h.minus_end().angle(), h.plus_end().angle())
        })
        .collect();
    let endpoint_steps: Vec<f64> = images
        .windows(2)
        .map(|w| {
            let a = BoundaryDirection::new(w[0].0).separation(BoundaryDirection::new(w[1].0));
            let b = BoundaryDirection::new(w[0].1).separation(BoundaryDirection::new(w[1].1));
            a.max(b)
        })
        .collect();
    let last = endpoint_steps.len() - 1;
    let certified = endpoint_steps[last] <= 1e-3 && endpoint_steps[last - 1] <= 1e-2;
    let n = images.len();
    let lm = aitken(images[n - 3].0, images[n - 2].0, images[n - 1].0);
    let lp = aitken(images[n - 3].1, images[n - 2].1, images[n - 1].1);
    let limit = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(lm), BoundaryDirection::new(lp))?;
    let (pg, pl) = rayon::join(|| bounding_geodesics(metric, &g, opts), || bounding_geodesics(metric, &limit, opts));
    let (pg, pl) = (pg?, pl?);
    let limit_error = pl.deeper_error.clone();
    let w_g = widths(&pg, None);
    let i_limit = widths(&pl, None);
    // corner segments enclose the true strip at every level, so an unconverged
    // w_est still bounds w(g) from above
    let holds = certified && i_limit.converged && w_g.w_est <= i_limit.i_est + tol;
    Ok(SemicontinuityReport {
        geodesic: g,
        times: times.to_vec(),
        words: seq.elements.iter().map(|e| e.word_string()).collect(),
        images,
        endpoint_steps,
        certified,
        limit,
        w_g,
        i_limit,
        limit_error,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::genus2_group;
    use crate::metric::{conformal_bump, hyperbolic_norm, randers_exact};
    use approx::assert_abs_diff_eq;

    fn hyperbolic_path(g: &HyperbolicGeodesic, t0: f64, t1: f64, h: f64) -> GeodesicPath {
        let n = ((t1 - t0) / h).ceil() as usize;
        let samples = (0..=n)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / n as f64;
                PathSample {
                    t,
                    z: g.point_c(t),
                    v: g.velocity(t),
                }
            })
            .collect();
        GeodesicPath::from_samples("hyperbolic", samples)
    }

    #[test]
    fn synthetic_pair_reproduces_common_perpendicular_distance() {
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(std::f64::consts::PI), BoundaryDirection::new(0.0)).unwrap();
        for s in [0.05, 0.3, 1.2] {
            // the image of the real axis under a translation along the imaginary axis
            let lift = MobiusMap::rotation(std::f64::consts::FRAC_PI_2)
                .compose(&MobiusMap::real_translation(s))
                .compose(&MobiusMap::rotation(-std::f64::consts::FRAC_PI_2));
            let other = g.mapped(&lift);
            let c0 = hyperbolic_path(&g, -20.0, 20.0, 1.0 / 12.0);
            let c1 = hyperbolic_path(&other, -20.0, 20.0, 1.0 / 12.0);
            let pair = BoundingPair::from_paths(g, c0, c1, 16.0);
            let w = widths(&pair, None);
            assert_abs_diff_eq!(w.i_est, s, epsilon = 1e-4);
            assert!(w.w_est > w.i_est);
        }
    }

    #[test]
    fn collapsed_pair_has_zero_width() {
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(2.0), BoundaryDirection::new(0.3)).unwrap();
        let c = hyperbolic_path(&g, -20.0, 20.0, 1.0 / 12.0);
        let w = widths(&BoundingPair::from_paths(g, c.clone(), c, 16.0), None);
        assert!(w.i_est <= 1e-5 && w.w_est <= 1e-5);
        assert!(w.stability <= 1e-5);
    }

    #[test]
    fn hyperbolic_bounding_pair_collapses_onto_the_background() {
        let h = hyperbolic_norm();
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(2.5), BoundaryDirection::new(0.4)).unwrap();
        let pair = bounding_geodesics(h.as_ref(), &g, &BoundingOptions::default()).unwrap();
        assert!(pair.converged, "change {}", pair.middle_change);
        let w = widths(&pair, None);
        assert!(w.i_est <= 1e-5, "{}", w.i_est);
        assert!(w.w_est <= 1e-4);
        for c in [&pair.c0, &pair.c1] {
            let mid = fermi_window(&g, c, -1.0, 1.0).unwrap();
            assert!(mid.samples.iter().all(|s| g.fermi_coordinates(s.z).1.abs() <= 1e-5));
            assert_eq!(crossing_count(&pair.c0, &pair.c1).transverse, 0);
        }
    }

    #[test]
    fn randers_bounding_pair_collapses_too() {
        let r = randers_exact(0.2).unwrap();
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(-1.0), BoundaryDirection::new(1.7)).unwrap();
        let pair = bounding_geodesics(r.as_ref(), &g, &BoundingOptions::default()).unwrap();
        let w = widths(&pair, None);
        assert!(pair.converged);
        assert!(w.i_est <= 1e-5, "{}", w.i_est);
    }

    #[test]
    fn horizon_below_eight_is_rejected() {
        let h = hyperbolic_norm();
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(2.5), BoundaryDirection::new(0.4)).unwrap();
        let opts = BoundingOptions { n_max: 4, ..Default::default() };
        assert!(matches!(bounding_geodesics(h.as_ref(), &g, &opts), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn periodic_structure_of_the_hyperbolic_axis() {
        let grp = genus2_group();
        let h = hyperbolic_norm();
        let a1 = grp.parse_word("a").unwrap();
        let opts = PeriodicOptions {
            strip_resolution: 3,
            connect: ConnectOptions::default(),
            ..Default::default()
        };
        let rep = periodic_structure(h.as_ref(), &grp, &a1, &opts).unwrap();
        assert_eq!(rep.minimal().count(), 1);
        let m = rep.minimal().next().unwrap();
        let ell = 2.0 * (1.0 + 2f64.sqrt()).acosh();
        assert_abs_diff_eq!(m.length, ell, epsilon = 1e-8);
        assert!(m.offset.abs() <= 1e-8);
        assert!(m.invariance_residual <= 1e-5);
        assert_eq!(rep.i_est, 0.0);
        assert!(rep.lengths_within_bounds);
    }

    #[test]
    fn periodic_structure_rejects_non_invariant_metrics() {
        let grp = genus2_group();
        let r = randers_exact(0.2).unwrap();
        let a1 = grp.parse_word("a").unwrap();
        let res = periodic_structure(r.as_ref(), &grp, &a1, &PeriodicOptions::default());
        assert!(matches!(res, Err(Error::InvalidMetric(_))));
        let b = conformal_bump(&grp, 0.5, 0.8).unwrap();
        let id = grp.parse_word("").unwrap();
        assert!(matches!(periodic_structure(b.as_ref(), &grp, &id, &PeriodicOptions::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn axis_returns_at_multiples_of_the_translation_length() {
        let grp = genus2_group();
        let o = DiscPoint::new(0.0, 0.0).unwrap();
        let ell = 2.0 * (1.0 + 2f64.sqrt()).acosh();
        let rep = recurrence_scan(&grp, o, 0.0, 20.0, 1e-6, 0.05).unwrap();
        assert_eq!(rep.returns.len(), 6);
        for (k, r) in rep.returns.iter().enumerate() {
            assert_abs_diff_eq!(r.t, ell * (k + 1) as f64, epsilon = 1e-6);
        }
        let exact = recurrence_scan(&grp, o, 0.0, 20.0, 0.0, 0.05).unwrap();
        assert_eq!(exact.returns.len(), 6);
    }

    #[test]
    fn generic_direction_has_no_exact_returns() {
        let grp = genus2_group();
        let o = DiscPoint::new(0.0, 0.0).unwrap();
        let rep = recurrence_scan(&grp, o, std::f64::consts::PI * (2f64.sqrt() - 1.0), 50.0, 0.0, 0.05).unwrap();
        assert!(rep.returns.is_empty());
        assert!(rep.coverage > 0.0 && rep.coverage <= 1.0);
    }

    #[test]
    fn axis_is_simple_in_the_quotient() {
        let grp = genus2_group();
        let o = DiscPoint::new(0.0, 0.0).unwrap();
        let rep = quotient_self_crossings(&grp, o, 0.0, 30.0, 0.05).unwrap();
        assert_eq!(rep.transverse, 0);
        let generic = quotient_self_crossings(&grp, o, 0.9, 30.0, 0.05).unwrap();
        assert!(generic.transverse > 0);
    }
}
