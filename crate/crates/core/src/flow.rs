//! The geodesic flow of a Finsler metric: Dormand-Prince 5(4) integration of
//! the second order system `z'' = a(z, z')` at unit speed.

use std::fmt::Write as _;

use crate::disc::{conformal_factor, DiscPoint, TangentVector, C64};
use crate::error::{Error, Result};
use crate::metric::FinslerMetric;

/// Radius beyond which the flow stops with `LeftDomain`.
pub const DOMAIN_GUARD: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub z: C64,
    pub v: C64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowDiagnostics {
    pub accepted: usize,
    pub rejected: usize,
    pub renormalizations: usize,
    /// Largest `|F - 1|` removed by a renormalization.
    pub max_renorm_correction: f64,
    pub min_step: f64,
    pub max_step: f64,
}

/// A time-sampled unit-speed geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub metric: String,
    pub samples: Vec<PathSample>,
    pub diagnostics: FlowDiagnostics,
}

impl GeodesicPath {
    pub fn from_samples(metric: impl Into<String>, samples: Vec<PathSample>) -> Self {
        GeodesicPath {
            metric: metric.into(),
            samples,
            diagnostics: FlowDiagnostics::default(),
        }
    }

    pub fn start(&self) -> &PathSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &PathSample {
        self.samples.last().expect("paths are nonempty")
    }

    pub fn duration(&self) -> f64 {
        self.end().t - self.start().t
    }

    pub fn points(&self) -> Vec<C64> {
        self.samples.iter().map(|s| s.z).collect()
    }

    /// Cubic Hermite interpolation of position and linear interpolation of velocity.
    pub fn interpolate(&self, t: f64) -> (C64, C64) {
        let s = &self.samples;
        if s.len() == 1 || t <= s[0].t {
            return (s[0].z, s[0].v);
        }
        if t >= self.end().t {
            let e = self.end();
            return (e.z, e.v);
        }
        let i = s.partition_point(|p| p.t <= t).max(1) - 1;
        let (a, b) = (&s[i], &s[i + 1]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let z = a.z * h00 + a.v * (h10 * h) + b.z * h01 + b.v * (h11 * h);
        let v = a.v * (1.0 - u) + b.v * u;
        (z, v)
    }

    /// Position at `t`.
    pub fn point_at(&self, t: f64) -> C64 {
        self.interpolate(t).0
    }

    /// Samples restricted to `[t0, t1]`, with interpolated end samples.
    pub fn trimmed(&self, t0: f64, t1: f64) -> GeodesicPath {
        let t0 = t0.max(self.start().t);
        let t1 = t1.min(self.end().t);
        let mut out = Vec::new();
        let (z, v) = self.interpolate(t0);
        out.push(PathSample { t: t0, z, v });
        out.extend(self.samples.iter().filter(|p| p.t > t0 && p.t < t1).copied());
        if t1 > t0 {
            let (z, v) = self.interpolate(t1);
            out.push(PathSample { t: t1, z, v });
        }
        GeodesicPath {
            metric: self.metric.clone(),
            samples: out,
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Shifts the time parameter by `dt`.
    pub fn shifted(&self, dt: f64) -> GeodesicPath {
        let mut p = self.clone();
        for s in &mut p.samples {
            s.t += dt;
        }
        p
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn append(&mut self, other: &GeodesicPath) {
        let t_end = self.end().t;
        let dt = t_end - other.start().t;
        self.samples.extend(other.samples.iter().skip(1).map(|s| PathSample { t: s.t + dt, ..*s }));
        let d = &mut self.diagnostics;
        let o = &other.diagnostics;
        d.accepted += o.accepted;
        d.rejected += o.rejected;
        d.renormalizations += o.renormalizations;
        d.max_renorm_correction = d.max_renorm_correction.max(o.max_renorm_correction);
        d.min_step = if d.min_step == 0.0 { o.min_step } else { d.min_step.min(o.min_step) };
        d.max_step = d.max_step.max(o.max_step);
    }

    /// CSV with columns `t,re,im,vre,vim`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re,im,vre,vim\n");
        for s in &self.samples {
            let _ = writeln!(out, "{:.12e},{:.15e},{:.15e},{:.15e},{:.15e}", s.t, s.z.re, s.z.im, s.v.re, s.v.im);
        }
        out
    }
}

/// Largest `|F(velocity) - 1|` over the samples.
pub fn energy_drift(metric: &dyn FinslerMetric, path: &GeodesicPath) -> f64 {
    path.samples
        .iter()
        .map(|s| (metric.evaluate(s.z, s.v) - 1.0).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Local error tolerance, in hyperbolic units.
    pub tol: f64,
    /// Upper bound on the step, so that Hermite interpolation between samples stays accurate.
    pub max_step: f64,
    pub renormalize_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol: 1e-8,
            max_step: 0.05,
            renormalize_every: 100,
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Step {
    z: C64,
    v: C64,
    a: C64,
    err: f64,
}

/// One Dormand-Prince step from `(z, v)` with acceleration `a0`; `None` if a stage leaves the disc.
fn dp5_step(m: &dyn FinslerMetric, z: C64, v: C64, a0: C64, h: f64) -> Option<Step> {
    let acc = |z: C64, v: C64| -> Option<C64> {
        if z.norm() >= DOMAIN_GUARD {
            None
        } else {
            Some(m.acceleration(z, v))
        }
    };
    let (kz1, kv1) = (v, a0);
    let z2 = z + h * (A21 * kz1);
    let v2 = v + h * (A21 * kv1);
    let (kz2, kv2) = (v2, acc(z2, v2)?);
    let z3 = z + h * (A31 * kz1 + A32 * kz2);
    let v3 = v + h * (A31 * kv1 + A32 * kv2);
    let (kz3, kv3) = (v3, acc(z3, v3)?);
    let z4 = z + h * (A41 * kz1 + A42 * kz2 + A43 * kz3);
    let v4 = v + h * (A41 * kv1 + A42 * kv2 + A43 * kv3);
    let (kz4, kv4) = (v4, acc(z4, v4)?);
    let z5 = z + h * (A51 * kz1 + A52 * kz2 + A53 * kz3 + A54 * kz4);
    let v5 = v + h * (A51 * kv1 + A52 * kv2 + A53 * kv3 + A54 * kv4);
    let (kz5, kv5) = (v5, acc(z5, v5)?);
    let z6 = z + h * (A61 * kz1 + A62 * kz2 + A63 * kz3 + A64 * kz4 + A65 * kz5);
    let v6 = v + h * (A61 * kv1 + A62 * kv2 + A63 * kv3 + A64 * kv4 + A65 * kv5);
    let (kz6, kv6) = (v6, acc(z6, v6)?);
    let zn = z + h * (B1 * kz1 + B3 * kz3 + B4 * kz4 + B5 * kz5 + B6 * kz6);
    let vn = v + h * (B1 * kv1 + B3 * kv3 + B4 * kv4 + B5 * kv5 + B6 * kv6);
    let (kz7, kv7) = (vn, acc(zn, vn)?);
    let ez = h * (E1 * kz1 + E3 * kz3 + E4 * kz4 + E5 * kz5 + E6 * kz6 + E7 * kz7);
    let ev = h * (E1 * kv1 + E3 * kv3 + E4 * kv4 + E5 * kv5 + E6 * kv6 + E7 * kv7);
    let lam = conformal_factor(zn);
    let err = (lam * ez.norm()).max(lam * ev.norm());
    Some(Step {
        z: zn,
        v: vn,
        a: kv7,
        err,
    })
}

/// Adaptive flow that keeps what it integrated when it has to stop early.
pub fn flow_partial(
    metric: &dyn FinslerMetric,
    z0: C64,
    v0: C64,
    duration: f64,
    opts: &FlowOptions,
) -> (GeodesicPath, Option<Error>) {
    let mut samples = vec![PathSample { t: 0.0, z: z0, v: v0 }];
    let mut diag = FlowDiagnostics {
        min_step: f64::INFINITY,
        ..Default::default()
    };
    let finish = |samples: Vec<PathSample>, mut diag: FlowDiagnostics, err: Option<Error>| {
        if diag.min_step.is_infinite() {
            diag.min_step = 0.0;
        }
        (
            GeodesicPath {
                metric: metric.id(),
                samples,
                diagnostics: diag,
            },
            err,
        )
    };
    if duration == 0.0 {
        return finish(samples, diag, None);
    }
    let dir = duration.signum();
    let total = duration.abs();
    let (mut z, mut v) = (z0, v0);
    let mut a = metric.acceleration(z, v);
    let mut t = 0.0;
    let mut h = opts.max_step.min(total);
    let local_tol = 0.1 * opts.tol;
    while t < total {
        if total - t < h {
            h = total - t;
        }
        if h < 1e-12 {
            return finish(samples, diag, Some(Error::StepUnderflow { t: dir * t }));
        }
        let step = dp5_step(metric, z, v, a, dir * h);
        match step {
            Some(s) if s.err <= local_tol || h <= 1e-10 => {
                t += h;
                z = s.z;
                v = s.v;
                a = s.a;
                diag.accepted += 1;
                diag.min_step = diag.min_step.min(h);
                diag.max_step = diag.max_step.max(h);
                if opts.renormalize_every > 0 && diag.accepted % opts.renormalize_every == 0 {
                    let f = metric.evaluate(z, v);
                    diag.renormalizations += 1;
                    diag.max_renorm_correction = diag.max_renorm_correction.max((f - 1.0).abs());
                    v /= f;
                    a = metric.acceleration(z, v);
                }
                samples.push(PathSample { t: dir * t, z, v });
                if z.norm() >= DOMAIN_GUARD {
                    return finish(samples, diag, Some(Error::LeftDomain { t: dir * t }));
                }
                let fac = if s.err == 0.0 { 5.0 } else { (0.9 * (local_tol / s.err).powf(0.2)).clamp(0.2, 5.0) };
                h = (h * fac).min(opts.max_step);
            }
            Some(s) => {
                diag.rejected += 1;
                h *= (0.9 * (local_tol / s.err).powf(0.2)).clamp(0.1, 0.9);
            }
            None => {
                if z.norm() >= DOMAIN_GUARD - 1e-12 || h < 1e-9 {
                    return finish(samples, diag, Some(Error::LeftDomain { t: dir * t }));
                }
                diag.rejected += 1;
                h *= 0.25;
            }
        }
    }
    finish(samples, diag, None)
}

/// Integrates the geodesic with initial unit vector `v0` for time `duration`
/// (negative for the backward flow).
pub fn flow(metric: &dyn FinslerMetric, v0: TangentVector, duration: f64, tol: f64) -> Result<GeodesicPath> {
    let z0 = v0.base.z();
    let f = metric.evaluate(z0, v0.vector);
    if (f - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("initial vector has F = {f}, expected 1")));
    }
    let opts = FlowOptions {
        tol,
        ..FlowOptions::default()
    };
    match flow_partial(metric, z0, v0.vector, duration, &opts) {
        (path, None) => Ok(path),
        (_, Some(e)) => Err(e),
    }
}

/// Fixed step that lands exactly on a seam of the metric when it would
/// otherwise straddle one, so the local error keeps its full order.
fn seam_aware_step(m: &dyn FinslerMetric, z: C64, v: C64, a: C64, h: f64, g0: Option<f64>) -> Option<(Step, Option<f64>)> {
    let full = dp5_step(m, z, v, a, h)?;
    let g0 = match g0 {
        Some(g) => g,
        None => return Some((full, None)),
    };
    let g1 = m.seam(full.z).unwrap_or(g0);
    if g0 == 0.0 || g0.signum() == g1.signum() {
        return Some((full, Some(g1)));
    }
    // Illinois iteration for the crossing fraction
    let (mut lo, mut flo, mut hi, mut fhi) = (0.0, g0, 1.0, g1);
    let mut side = 0i8;
    let mut theta = 0.5;
    for _ in 0..30 {
        theta = (lo * fhi - hi * flo) / (fhi - flo);
        let s = dp5_step(m, z, v, a, theta * h)?;
        let f = m.seam(s.z).unwrap_or(0.0);
        if f.abs() < 1e-13 || (hi - lo) * h.abs() < 1e-12 {
            break;
        }
        if f.signum() == flo.signum() {
            lo = theta;
            flo = f;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = theta;
            fhi = f;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    let first = dp5_step(m, z, v, a, theta * h)?;
    let second = dp5_step(m, first.z, first.v, first.a, (1.0 - theta) * h)?;
    let g = m.seam(second.z);
    Some((second, g))
}

/// Fixed-step integration returning the final state. Smooth in its inputs,
/// which the Newton solvers rely on.
pub fn flow_fixed(metric: &dyn FinslerMetric, z0: C64, v0: C64, duration: f64, steps: usize) -> Result<(C64, C64)> {
    let samples = fixed_steps(metric, z0, v0, 0.0, duration, steps, false)?;
    let last = samples.last().expect("final state");
    Ok((last.z, last.v))
}

/// Fixed-step integration keeping every step as a sample, starting at time `t0`.
pub fn flow_fixed_sampled(
    metric: &dyn FinslerMetric,
    z0: C64,
    v0: C64,
    t0: f64,
    duration: f64,
    steps: usize,
) -> Result<Vec<PathSample>> {
    fixed_steps(metric, z0, v0, t0, duration, steps, true)
}

fn fixed_steps(metric: &dyn FinslerMetric, z0: C64, v0: C64, t0: f64, duration: f64, steps: usize, keep: bool) -> Result<Vec<PathSample>> {
    let steps = steps.max(1);
    let h = duration / steps as f64;
    let (mut z, mut v) = (z0, v0);
    let mut a = metric.acceleration(z, v);
    let mut g = metric.seam(z);
    let mut out = Vec::with_capacity(if keep { steps + 1 } else { 1 });
    if keep {
        out.push(PathSample { t: t0, z, v });
    }
    for k in 0..steps {
        match seam_aware_step(metric, z, v, a, h, g) {
            Some((s, gn)) => {
                z = s.z;
                v = s.v;
                a = s.a;
                g = gn;
                if keep {
                    out.push(PathSample {
                        t: t0 + h * (k + 1) as f64,
                        z,
                        v,
                    });
                }
            }
            None => return Err(Error::LeftDomain { t: t0 + h * k as f64 }),
        }
    }
    if !keep {
        out.push(PathSample { t: t0 + duration, z, v });
    }
    Ok(out)
}

/// Unit tangent vector for `metric` at `p` in euclidean direction `theta`.
pub fn unit_tangent(metric: &dyn FinslerMetric, p: DiscPoint, theta: f64) -> TangentVector {
    TangentVector {
        base: p,
        vector: crate::metric::unit_vector(metric, p.z(), theta),
        unit: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::{distance, geodesic_between, BoundaryDirection, HyperbolicGeodesic, MobiusMap};
    use crate::group::genus2_group;
    use crate::metric::{conformal_bump, hyperbolic_norm, randers_exact};
    use approx::assert_abs_diff_eq;

    #[test]
    fn hyperbolic_diameter_follows_tanh() {
        let h = hyperbolic_norm();
        let v0 = unit_tangent(h.as_ref(), DiscPoint::ORIGIN, 0.0);
        let path = flow(h.as_ref(), v0, 3f64.ln(), 1e-8).unwrap();
        assert_abs_diff_eq!((path.end().z - C64::new(0.5, 0.0)).norm(), 0.0, epsilon = 1e-8);
        for s in &path.samples {
            assert_abs_diff_eq!(s.z.re, (0.5 * s.t).tanh(), epsilon = 1e-8);
        }
        assert!(energy_drift(h.as_ref(), &path) <= 1e-8);
    }

    #[test]
    fn zero_duration_gives_single_sample() {
        let h = hyperbolic_norm();
        let v0 = unit_tangent(h.as_ref(), DiscPoint::new(0.1, 0.2).unwrap(), 1.0);
        let path = flow(h.as_ref(), v0, 0.0, 1e-8).unwrap();
        assert_eq!(path.samples.len(), 1);
        assert_eq!(path.start().v, v0.vector);
    }

    #[test]
    fn rejects_non_unit_initial_vectors() {
        let h = hyperbolic_norm();
        let v0 = TangentVector::new(DiscPoint::ORIGIN, C64::new(1.0, 0.0)).unwrap();
        assert!(flow(h.as_ref(), v0, 1.0, 1e-8).is_err());
    }

    #[test]
    fn long_diameter_flow_keeps_energy() {
        let h = hyperbolic_norm();
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(PI_VAL), BoundaryDirection::new(0.0)).unwrap();
        let v0 = TangentVector::new(g.point(-10.0), g.velocity(-10.0)).unwrap();
        let path = flow(h.as_ref(), v0, 20.0, 1e-8).unwrap();
        assert!(energy_drift(h.as_ref(), &path) <= 1e-6);
        assert!(distance(path.end().z, g.point_c(10.0)) < 1e-6);
    }

    const PI_VAL: f64 = std::f64::consts::PI;

    #[test]
    fn scaled_velocities_show_up_as_drift() {
        let h = hyperbolic_norm();
        let v0 = unit_tangent(h.as_ref(), DiscPoint::ORIGIN, 0.3);
        let mut path = flow(h.as_ref(), v0, 2.0, 1e-8).unwrap();
        for s in &mut path.samples {
            s.v *= 1.01;
        }
        assert_abs_diff_eq!(energy_drift(h.as_ref(), &path), 0.01, epsilon = 1e-6);
    }

    #[test]
    fn randers_geodesics_are_reparametrized_diameters() {
        let r = randers_exact(0.2).unwrap();
        let v0 = unit_tangent(r.as_ref(), DiscPoint::ORIGIN, 0.0);
        let path = flow(r.as_ref(), v0, 1.0, 1e-8).unwrap();
        for s in &path.samples {
            assert!(s.z.im.abs() < 1e-12);
        }
        // unit F-speed along the diameter: t = d_h + 0.2 (Re z - 0)
        let end = path.end().z;
        assert_abs_diff_eq!(distance(C64::new(0.0, 0.0), end) + 0.2 * end.re, 1.0, epsilon = 1e-8);
        assert!(energy_drift(r.as_ref(), &path) <= 1e-8);
    }

    #[test]
    fn hyperbolic_flow_is_reversible_randers_only_as_point_sets() {
        let h = hyperbolic_norm();
        let p = DiscPoint::new(0.2, -0.1).unwrap();
        let v0 = unit_tangent(h.as_ref(), p, 0.7);
        let fwd = flow(h.as_ref(), v0, 2.0, 1e-9).unwrap();
        let back = TangentVector { base: DiscPoint::new(fwd.end().z.re, fwd.end().z.im).unwrap(), vector: -fwd.end().v, unit: true };
        let ret = flow(h.as_ref(), back, 2.0, 1e-9).unwrap();
        assert!((ret.end().z - p.z()).norm() < 1e-8);

        let r = randers_exact(0.2).unwrap();
        let v0 = unit_tangent(r.as_ref(), p, 0.7);
        let fwd = flow(r.as_ref(), v0, 2.0, 1e-9).unwrap();
        let e = fwd.end();
        let back = TangentVector {
            base: DiscPoint::new(e.z.re, e.z.im).unwrap(),
            vector: crate::metric::unit_vector(r.as_ref(), e.z, (-e.v).arg()),
            unit: true,
        };
        let ret = flow(r.as_ref(), back, 2.0, 1e-9).unwrap();
        let g = geodesic_between(p, DiscPoint::new(e.z.re, e.z.im).unwrap()).unwrap();
        // same point set ...
        assert!(g.fermi_coordinates(ret.end().z).1.abs() < 1e-7);
        // ... but the return trip takes a different time to reach p
        assert!((ret.end().z - p.z()).norm() > 1e-3);
    }

    #[test]
    fn flow_property() {
        let b = conformal_bump(&genus2_group(), 0.5, 0.8).unwrap();
        let p = DiscPoint::new(0.1, 0.05).unwrap();
        let v0 = unit_tangent(b.as_ref(), p, 2.0);
        for &(s, t) in &[(1.0, 2.0), (3.5, 1.5), (0.7, 4.3)] {
            let a = flow(b.as_ref(), v0, s, 1e-10).unwrap();
            let e = a.end();
            let mid = TangentVector { base: DiscPoint::new(e.z.re, e.z.im).unwrap(), vector: e.v / b.evaluate(e.z, e.v), unit: true };
            let two = flow(b.as_ref(), mid, t, 1e-10).unwrap();
            let one = flow(b.as_ref(), v0, s + t, 1e-10).unwrap();
            assert!(distance(two.end().z, one.end().z) < 1e-6);
        }
    }

    #[test]
    fn bump_flow_is_equivariant() {
        let g = genus2_group();
        let b = conformal_bump(&g, 0.5, 0.8).unwrap();
        let p = DiscPoint::new(-0.2, 0.3).unwrap();
        let v0 = unit_tangent(b.as_ref(), p, 0.4);
        let path = flow(b.as_ref(), v0, 4.0, 1e-10).unwrap();
        for gen in &g.generators {
            let (z2, v2) = gen.map.push(p.z(), v0.vector);
            let w0 = TangentVector { base: DiscPoint::new(z2.re, z2.im).unwrap(), vector: v2, unit: true };
            let img = flow(b.as_ref(), w0, 4.0, 1e-10).unwrap();
            assert!(distance(gen.apply(path.end().z), img.end().z) < 1e-6);
        }
    }

    #[test]
    fn leaving_the_disc_is_reported() {
        let h = hyperbolic_norm();
        let v0 = unit_tangent(h.as_ref(), DiscPoint::ORIGIN, 1.0);
        assert!(matches!(flow(h.as_ref(), v0, 40.0, 1e-8), Err(Error::LeftDomain { .. })));
        let (partial, err) = flow_partial(h.as_ref(), v0.base.z(), v0.vector, 40.0, &FlowOptions::default());
        assert!(err.is_some());
        assert!(partial.end().t > 15.0);
    }

    #[test]
    fn backward_flow_retraces() {
        let h = hyperbolic_norm();
        let v0 = unit_tangent(h.as_ref(), DiscPoint::ORIGIN, 0.0);
        let path = flow(h.as_ref(), v0, -3f64.ln(), 1e-8).unwrap();
        assert_abs_diff_eq!((path.end().z - C64::new(-0.5, 0.0)).norm(), 0.0, epsilon = 1e-8);
        assert!(path.end().t < 0.0);
    }

    #[test]
    fn fixed_steps_match_adaptive() {
        let b = conformal_bump(&genus2_group(), 0.5, 0.8).unwrap();
        let p = DiscPoint::new(0.3, -0.2).unwrap();
        let v0 = unit_tangent(b.as_ref(), p, 2.5);
        let a = flow(b.as_ref(), v0, 3.0, 1e-10).unwrap();
        let (z, _) = flow_fixed(b.as_ref(), p.z(), v0.vector, 3.0, 60).unwrap();
        assert!(distance(z, a.end().z) < 1e-6);
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let h = hyperbolic_norm();
        let m = MobiusMap::translation_to(C64::new(0.3, 0.3));
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(1.0), BoundaryDirection::new(4.0)).unwrap().mapped(&m);
        let v0 = TangentVector::new(g.point(0.0), g.velocity(0.0)).unwrap();
        let path = flow(h.as_ref(), v0, 5.0, 1e-10).unwrap();
        for k in 0..97 {
            let t = 5.0 * k as f64 / 97.0;
            assert!(distance(path.point_at(t), g.point_c(t)) < 1e-7);
        }
    }
}
