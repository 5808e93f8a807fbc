//! Minimal segments between two points, the Finsler distance, Morse
//! deviation from the hyperbolic background and crossing counts.
//!
//! A segment is found in two stages. A broken path in Fermi coordinates
//! around the hyperbolic segment is minimized globally on a lattice and then
//! by Newton's method; the best discrete candidates are polished into true
//! geodesics by multiple shooting.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::disc::{conformal_factor, distance, geodesic_between, one_minus_norm_sqr, wrap_angle, DiscPoint, HyperbolicGeodesic, MobiusMap, C64};
use crate::error::{Error, Result};
use crate::flow::{flow_fixed, flow_fixed_sampled, GeodesicPath, PathSample};
use crate::metric::{unit_vector, FinslerMetric};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectOptions {
    /// Target accuracy of the length.
    pub tol: f64,
    /// Spacing of the broken-path nodes along the background segment.
    pub node_spacing: f64,
    /// Transverse half-width of the lattice used for the global search.
    pub strip_half_width: f64,
    /// Number of lattice offsets per node (made odd).
    pub strip_offsets: usize,
    /// Extra local searches started from one-sided bulges.
    pub bulge_starts: usize,
    /// Length of one multiple-shooting segment.
    pub segment_length: f64,
    /// Fixed integrator steps per unit of time inside the shooting solver.
    pub steps_per_unit: f64,
    /// Discrete candidates polished into geodesics.
    pub max_polish: usize,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        ConnectOptions {
            tol: 1e-6,
            node_spacing: 0.5,
            strip_half_width: 1.5,
            strip_offsets: 25,
            bulge_starts: 4,
            segment_length: 1.0,
            steps_per_unit: 12.0,
            max_polish: 3,
        }
    }
}

/// Arrival tolerance on the hyperbolic miss distance.
pub const ARRIVAL_TOL: f64 = 1e-6;

/// Multiple-shooting state: node positions and directions plus total time.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingState {
    pub nodes: Vec<(C64, f64)>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalSegment {
    pub x: DiscPoint,
    pub y: DiscPoint,
    pub path: GeodesicPath,
    /// Estimate of `d_F(x, y)`.
    pub length: f64,
    /// Lengths of every distinct geodesic candidate that arrived.
    pub candidate_lengths: Vec<f64>,
    /// Runner-up minus best length among distinct candidates (infinite if there is none).
    pub gap: f64,
    /// Set when a distinct candidate is within `10 tol` of the best.
    pub ambiguous: bool,
    pub morse_deviation: f64,
    /// Hyperbolic distance between the end of the path and `y`.
    pub miss: f64,
    pub state: ShootingState,
    /// Shooting states of the other distinct candidates, best first.
    pub alternatives: Vec<ShootingState>,
}

const GL_X: [f64; 4] = [0.069_431_844_202_973_71, 0.330_009_478_207_571_9, 0.669_990_521_792_428_1, 0.930_568_155_797_026_3];
const GL_W: [f64; 4] = [0.173_927_422_568_726_9, 0.326_072_577_431_273_1, 0.326_072_577_431_273_1, 0.173_927_422_568_726_9];

/// `F`-length of the hyperbolic segment from `a` to `b`.
pub fn link_length(metric: &dyn FinslerMetric, a: C64, b: C64) -> f64 {
    let d = distance(a, b);
    if d == 0.0 {
        return 0.0;
    }
    let t = MobiusMap::translation_to(a);
    let phi = t.inverse().apply(b).arg();
    let frame = t.compose(&MobiusMap::rotation(phi));
    let mut sum = 0.0;
    for (x, w) in GL_X.iter().zip(GL_W.iter()) {
        let r = (0.5 * d * x).tanh();
        let p = C64::new(r, 0.0);
        let z = frame.apply(p);
        let v = frame.derivative(p) * (0.5 * (1.0 - r * r));
        sum += w * metric.evaluate(z, v);
    }
    d * sum
}

/// Broken paths in Fermi coordinates around a background segment.
struct Discretization<'a> {
    metric: &'a dyn FinslerMetric,
    frame: HyperbolicGeodesic,
    ts: Vec<f64>,
}

impl<'a> Discretization<'a> {
    fn new(metric: &'a dyn FinslerMetric, x: DiscPoint, y: DiscPoint, spacing: f64) -> Result<Self> {
        let g = geodesic_between(x, y)?;
        let len = g.length();
        let frame = g.reanchored(0.5 * len);
        let n = ((len / spacing).ceil() as usize).max(2);
        let ts = (0..=n).map(|k| -0.5 * len + len * k as f64 / n as f64).collect();
        Ok(Discretization { metric, frame, ts })
    }

    fn nodes(&self) -> usize {
        self.ts.len()
    }

    fn point(&self, k: usize, s: f64) -> C64 {
        self.frame.fermi_point(self.ts[k], s)
    }

    fn link(&self, k: usize, sa: f64, sb: f64) -> f64 {
        link_length(self.metric, self.point(k, sa), self.point(k + 1, sb))
    }

    fn energy(&self, s: &[f64]) -> f64 {
        (0..self.nodes() - 1).map(|k| self.link(k, s[k], s[k + 1])).sum()
    }

    /// Global minimum over a lattice of offsets by dynamic programming.
    fn lattice_minimum(&self, half_width: f64, offsets: usize) -> Vec<f64> {
        let n = self.nodes();
        let m = offsets | 1;
        let ds = 2.0 * half_width / (m - 1) as f64;
        let levels: Vec<f64> = (0..m).map(|j| -half_width + ds * j as f64).collect();
        let mut cost: Vec<f64> = levels.iter().map(|&s| self.link(0, 0.0, s)).collect();
        let mut back = vec![vec![0usize; m]; n];
        for k in 1..n - 2 {
            let mut next = vec![f64::INFINITY; m];
            for (j2, &s2) in levels.iter().enumerate() {
                for (j1, &s1) in levels.iter().enumerate() {
                    let c = cost[j1] + self.link(k, s1, s2);
                    if c < next[j2] {
                        next[j2] = c;
                        back[k + 1][j2] = j1;
                    }
                }
            }
            cost = next;
        }
        let mut best = (f64::INFINITY, 0);
        for (j, &s) in levels.iter().enumerate() {
            let c = cost[j] + self.link(n - 2, s, 0.0);
            if c < best.0 {
                best = (c, j);
            }
        }
        let mut s = vec![0.0; n];
        let mut j = best.1;
        for k in (1..n - 1).rev() {
            s[k] = levels[j];
            j = back[k][j];
        }
        s
    }

    /// Newton iteration with a tridiagonal finite-difference Hessian.
    fn refine(&self, s: &mut [f64]) -> f64 {
        let n = self.nodes();
        let eta = 1e-4;
        let mut e = self.energy(s);
        if n < 3 {
            return e;
        }
        for _ in 0..40 {
            let mut grad = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut off = vec![0.0; n];
            for k in 0..n - 1 {
                let (a, b) = (s[k], s[k + 1]);
                let f = |i: f64, j: f64| self.link(k, a + i * eta, b + j * eta);
                let f00 = f(0.0, 0.0);
                let (fp0, fm0, f0p, f0m) = (f(1.0, 0.0), f(-1.0, 0.0), f(0.0, 1.0), f(0.0, -1.0));
                let (fpp, fpm, fmp, fmm) = (f(1.0, 1.0), f(1.0, -1.0), f(-1.0, 1.0), f(-1.0, -1.0));
                grad[k] += (fp0 - fm0) / (2.0 * eta);
                grad[k + 1] += (f0p - f0m) / (2.0 * eta);
                diag[k] += (fp0 - 2.0 * f00 + fm0) / (eta * eta);
                diag[k + 1] += (f0p - 2.0 * f00 + f0m) / (eta * eta);
                off[k] = (fpp - fpm - fmp + fmm) / (4.0 * eta * eta);
            }
            let gmax = grad[1..n - 1].iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if gmax < 1e-9 {
                break;
            }
            let dmax = diag[1..n - 1].iter().fold(0.0f64, |m, d| m.max(d.abs()));
            if !(gmax.is_finite() && dmax.is_finite()) {
                break;
            }
            let mut mu = 0.0;
            let mut step = None;
            for _ in 0..80 {
                step = thomas(&diag[1..n - 1], &off[1..n - 2], &grad[1..n - 1], mu);
                if step.is_some() {
                    break;
                }
                mu = if mu == 0.0 { 1e-3 * dmax.max(1e-12) } else { mu * 4.0 };
            }
            let Some(step) = step else { break };
            let mut alpha = 1.0;
            let mut improved = false;
            for _ in 0..20 {
                let trial: Vec<f64> = (0..n)
                    .map(|k| if k == 0 || k == n - 1 { s[k] } else { s[k] - alpha * step[k - 1] })
                    .collect();
                let et = self.energy(&trial);
                if et < e {
                    s.copy_from_slice(&trial);
                    improved = e - et > 1e-15 * e.abs();
                    e = et;
                    break;
                }
                alpha *= 0.5;
            }
            if !improved {
                break;
            }
        }
        e
    }
}

/// Solves `(T + mu I) x = r` for a symmetric tridiagonal `T`; `None` if not positive definite.
fn thomas(diag: &[f64], off: &[f64], rhs: &[f64], mu: f64) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0] + mu;
    if !(piv > 0.0) {
        return None;
    }
    c[0] = if n > 1 { off[0] / piv } else { 0.0 };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] + mu - off[i - 1] * c[i - 1];
        if !(piv > 0.0) {
            return None;
        }
        c[i] = if i + 1 < n { off[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Multiple-shooting boundary value problem from a fixed start to a fixed end.
struct Shooter<'a> {
    metric: &'a dyn FinslerMetric,
    x: C64,
    y: C64,
    k: usize,
    steps_per_unit: f64,
}

impl<'a> Shooter<'a> {
    fn steps(&self, dt: f64) -> usize {
        ((dt.abs() * self.steps_per_unit).ceil() as usize).max(2)
    }

    fn pack(&self, st: &ShootingState) -> DVector<f64> {
        let k = self.k;
        let mut u = DVector::zeros(3 * k - 1);
        u[0] = st.nodes[0].1;
        for j in 1..k {
            let (z, th) = st.nodes[j];
            u[1 + 3 * (j - 1)] = z.re;
            u[2 + 3 * (j - 1)] = z.im;
            u[3 + 3 * (j - 1)] = th;
        }
        u[3 * k - 2] = st.total;
        u
    }

    fn unpack(&self, u: &DVector<f64>) -> Option<ShootingState> {
        let k = self.k;
        let mut nodes = Vec::with_capacity(k);
        nodes.push((self.x, u[0]));
        for j in 1..k {
            let z = C64::new(u[1 + 3 * (j - 1)], u[2 + 3 * (j - 1)]);
            if !(z.norm() < 1.0 - 1e-12) {
                return None;
            }
            nodes.push((z, u[3 + 3 * (j - 1)]));
        }
        let total = u[3 * k - 2];
        if !(total > 0.0) {
            return None;
        }
        Some(ShootingState { nodes, total })
    }

    /// Residual block of segment `j` started from `(z, th)` with duration `dt`.
    fn block(&self, st: &ShootingState, j: usize, z: C64, th: f64, dt: f64) -> Option<[f64; 3]> {
        let v = unit_vector(self.metric, z, th);
        let (ze, ve) = flow_fixed(self.metric, z, v, dt, self.steps(dt)).ok()?;
        if j + 1 < self.k {
            let (zt, tht) = st.nodes[j + 1];
            let lam = conformal_factor(zt);
            let d = (ze - zt) * lam;
            Some([d.re, d.im, wrap_angle(ve.arg() - tht)])
        } else {
            let d = (ze - self.y) * conformal_factor(self.y);
            Some([d.re, d.im, 0.0])
        }
    }

    fn residual(&self, st: &ShootingState) -> Option<DVector<f64>> {
        let k = self.k;
        let dt = st.total / k as f64;
        let mut r = DVector::zeros(3 * k - 1);
        for j in 0..k {
            let (z, th) = st.nodes[j];
            let b = self.block(st, j, z, th, dt)?;
            let rows = if j + 1 < k { 3 } else { 2 };
            for i in 0..rows {
                r[3 * j + i] = b[i];
            }
        }
        Some(r)
    }

    fn jacobian(&self, st: &ShootingState, r0: &DVector<f64>) -> Option<DMatrix<f64>> {
        let k = self.k;
        let n = 3 * k - 1;
        let dt = st.total / k as f64;
        let mut jac = DMatrix::zeros(n, n);
        let rows = |j: usize| if j + 1 < k { 3 } else { 2 };
        for j in 0..k {
            let (z, th) = st.nodes[j];
            let dth = 1e-7;
            let b = self.block(st, j, z, th + dth, dt)?;
            let col = if j == 0 { 0 } else { 3 + 3 * (j - 1) };
            for i in 0..rows(j) {
                jac[(3 * j + i, col)] = (b[i] - r0[3 * j + i]) / dth;
            }
            if j > 0 {
                let dz = 1e-7 * one_minus_norm_sqr(z);
                for (c, e) in [(1 + 3 * (j - 1), C64::new(dz, 0.0)), (2 + 3 * (j - 1), C64::new(0.0, dz))] {
                    let b = self.block(st, j, z + e, th, dt)?;
                    for i in 0..rows(j) {
                        jac[(3 * j + i, c)] = (b[i] - r0[3 * j + i]) / dz;
                    }
                }
                let lam = conformal_factor(z);
                jac[(3 * (j - 1), 1 + 3 * (j - 1))] = -lam;
                jac[(3 * (j - 1) + 1, 2 + 3 * (j - 1))] = -lam;
                jac[(3 * (j - 1) + 2, 3 + 3 * (j - 1))] = -1.0;
            }
            let dtt = 1e-7 * dt.max(1.0);
            let b = self.block(st, j, z, th, dt + dtt)?;
            for i in 0..rows(j) {
                jac[(3 * j + i, n - 1)] = (b[i] - r0[3 * j + i]) / (dtt * k as f64);
            }
        }
        Some(jac)
    }

    /// Damped Newton iteration; returns the converged state and its residual.
    /// The Jacobian is kept while it still contracts the residual tenfold.
    fn solve(&self, mut st: ShootingState, max_iter: usize) -> Option<(ShootingState, f64)> {
        const DONE: f64 = 1e-11;
        // a guess whose first node is off the start stalls the line search
        st.nodes[0].0 = self.x;
        let mut r = self.residual(&st)?;
        let mut rn = r.amax();
        let mut lu = None;
        let mut fresh = false;
        let mut iter = 0;
        while iter < max_iter && rn >= DONE {
            iter += 1;
            if lu.is_none() {
                lu = Some(self.jacobian(&st, &r)?.lu());
                fresh = true;
            }
            let step = lu.as_ref()?.solve(&r)?;
            let u = self.pack(&st);
            let mut alpha = 1.0;
            let mut ratio = 1.0;
            for _ in 0..12 {
                let cand = &u - &step * alpha;
                if let Some(cs) = self.unpack(&cand) {
                    if let Some(cr) = self.residual(&cs) {
                        let cn = cr.amax();
                        if cn < rn {
                            ratio = cn / rn;
                            st = cs;
                            r = cr;
                            rn = cn;
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            if ratio > 0.1 {
                // stale Jacobian: refresh once; a fresh one that cannot
                // contract any more means the noise floor is reached
                if fresh && (ratio > 0.999 || (rn < 1e-9 && ratio > 0.5)) {
                    break;
                }
                lu = None;
            } else {
                fresh = false;
            }
        }
        Some((st, rn))
    }

    fn sample(&self, st: &ShootingState) -> Result<Vec<PathSample>> {
        let dt = st.total / self.k as f64;
        let mut out: Vec<PathSample> = Vec::new();
        for (j, &(z, th)) in st.nodes.iter().enumerate() {
            let v = unit_vector(self.metric, z, th);
            let seg = flow_fixed_sampled(self.metric, z, v, dt * j as f64, dt, self.steps(dt))?;
            let skip = usize::from(!out.is_empty());
            out.extend(seg.into_iter().skip(skip));
        }
        Ok(out)
    }
}

/// Initial shooting state from a broken path given by node points.
fn state_from_polyline(points: &[C64], k: usize, total: f64) -> ShootingState {
    let mut cum = vec![0.0];
    for w in points.windows(2) {
        cum.push(cum.last().unwrap() + distance(w[0], w[1]));
    }
    let len = *cum.last().unwrap();
    let locate = |s: f64| -> (C64, f64) {
        let s = s.clamp(0.0, len);
        let i = cum.partition_point(|&c| c <= s).clamp(1, points.len() - 1) - 1;
        let (a, b) = (points[i], points[i + 1]);
        let seg = (cum[i + 1] - cum[i]).max(1e-300);
        let g = geodesic_between(DiscPoint::unchecked(a), DiscPoint::unchecked(b));
        match g {
            Ok(g) => {
                let t = (s - cum[i]).clamp(0.0, seg);
                (g.point_c(t), g.velocity(t).arg())
            }
            Err(_) => (a, 0.0),
        }
    };
    let nodes = (0..k).map(|j| locate(len * j as f64 / k as f64)).collect();
    ShootingState { nodes, total }
}

/// Polishes a guess into a geodesic from `x` to `y`. The first node is reset to `x`.
pub fn polish(
    metric: &dyn FinslerMetric,
    x: DiscPoint,
    y: DiscPoint,
    guess: &ShootingState,
    opts: &ConnectOptions,
) -> Result<(ShootingState, f64)> {
    let mut st = guess.clone();
    // transverse variations of a segment with a fixed end decay roughly like exp(-t)
    let shift = x.z() - st.nodes[0].0;
    let lam0 = conformal_factor(st.nodes[0].0);
    let dt = st.total / st.nodes.len() as f64;
    for (j, node) in st.nodes.iter_mut().enumerate().skip(1) {
        let moved = node.0 + shift * (lam0 / conformal_factor(node.0) * (-dt * j as f64).exp());
        if moved.norm() < 1.0 - 1e-12 {
            node.0 = moved;
        }
    }
    st.nodes[0].0 = x.z();
    let shooter = Shooter {
        metric,
        x: x.z(),
        y: y.z(),
        k: st.nodes.len(),
        steps_per_unit: opts.steps_per_unit,
    };
    let (st, res) = shooter
        .solve(st, 25)
        .ok_or(Error::NoArrival { best_miss: f64::INFINITY })?;
    if res > ARRIVAL_TOL {
        return Err(Error::NoArrival { best_miss: res });
    }
    Ok((st, res))
}

/// `d_F(x, y)` polished from a nearby solution.
pub fn distance_from_guess(
    metric: &dyn FinslerMetric,
    x: DiscPoint,
    y: DiscPoint,
    guess: &ShootingState,
    opts: &ConnectOptions,
) -> Result<(f64, ShootingState)> {
    let (st, _) = polish(metric, x, y, guess, opts)?;
    Ok((st.total, st))
}

/// Hausdorff-type separation of two broken paths sampled at the same fractions.
fn polyline_separation(a: &[C64], b: &[C64]) -> f64 {
    let n = 32;
    let at = |p: &[C64], f: f64| -> C64 {
        let x = f * (p.len() - 1) as f64;
        let i = (x.floor() as usize).min(p.len() - 2);
        let u = x - i as f64;
        p[i] * (1.0 - u) + p[i + 1] * u
    };
    (0..=n)
        .map(|i| {
            let f = i as f64 / n as f64;
            distance(at(a, f), at(b, f))
        })
        .fold(0.0, f64::max)
}

/// Shortest geodesic from `x` to `y` found by the two-stage search.
pub fn minimal_segment(metric: &dyn FinslerMetric, x: DiscPoint, y: DiscPoint, opts: &ConnectOptions) -> Result<MinimalSegment> {
    let dh = distance(x.z(), y.z());
    if dh < 1e-12 {
        return Err(Error::DegenerateEndpoints);
    }
    let disc = Discretization::new(metric, x, y, opts.node_spacing)?;
    let n = disc.nodes();
    let half = opts.strip_half_width.min(0.25 + 0.5 * dh);

    let mut starts = vec![disc.lattice_minimum(half, opts.strip_offsets.max(3))];
    let t0 = disc.ts[0];
    let len = disc.ts[n - 1] - t0;
    for b in 0..opts.bulge_starts {
        let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
        let amp = sign * half * (1 + b / 2) as f64 / (opts.bulge_starts.div_ceil(2)) as f64;
        starts.push(disc.ts.iter().map(|&t| amp * (std::f64::consts::PI * (t - t0) / len).sin()).collect());
    }
    let mut discrete: Vec<(f64, Vec<f64>)> = Vec::new();
    for mut s in starts {
        let e = disc.refine(&mut s);
        if discrete.iter().all(|(_, o)| o.iter().zip(&s).any(|(a, b)| (a - b).abs() > 1e-3)) {
            discrete.push((e, s));
        }
    }
    discrete.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best_discrete = discrete[0].0;
    let margin = 5e-3 + 1e-3 * dh + 10.0 * opts.tol;

    let k = ((best_discrete / opts.segment_length).ceil() as usize).max(1);
    let shooter = Shooter {
        metric,
        x: x.z(),
        y: y.z(),
        k,
        steps_per_unit: opts.steps_per_unit,
    };
    let mut polished: Vec<(ShootingState, f64, Vec<C64>)> = Vec::new();
    let mut best_miss = f64::INFINITY;
    for (e, s) in discrete.iter().take(opts.max_polish.max(1)) {
        if *e > best_discrete + margin {
            break;
        }
        let pts: Vec<C64> = (0..n).map(|i| disc.point(i, s[i])).collect();
        let guess = state_from_polyline(&pts, k, *e);
        if let Some((st, res)) = shooter.solve(guess, 25) {
            best_miss = best_miss.min(res);
            if res <= ARRIVAL_TOL {
                let nodes: Vec<C64> = st.nodes.iter().map(|p| p.0).chain(std::iter::once(y.z())).collect();
                polished.push((st, res, nodes));
            }
        }
    }
    if polished.is_empty() {
        return Err(Error::NoArrival { best_miss });
    }
    polished.sort_by(|a, b| a.0.total.total_cmp(&b.0.total));
    let mut distinct: Vec<&(ShootingState, f64, Vec<C64>)> = Vec::new();
    for p in &polished {
        if distinct.iter().all(|q| polyline_separation(&q.2, &p.2) > 1e-3) {
            distinct.push(p);
        }
    }
    let (st, _, _) = distinct[0];
    let gap = distinct.get(1).map_or(f64::INFINITY, |q| q.0.total - st.total);
    let samples = shooter.sample(st)?;
    let path = GeodesicPath::from_samples(metric.id(), samples);
    let background = geodesic_between(x, y)?;
    let morse_deviation = path
        .samples
        .iter()
        .map(|p| background.distance_to_segment(p.z))
        .fold(0.0, f64::max);
    let miss = distance(path.end().z, y.z());
    Ok(MinimalSegment {
        x,
        y,
        length: st.total,
        candidate_lengths: distinct.iter().map(|q| q.0.total).collect(),
        gap,
        ambiguous: gap < 10.0 * opts.tol,
        morse_deviation,
        miss,
        state: st.clone(),
        alternatives: distinct[1..].iter().map(|q| q.0.clone()).collect(),
        path,
    })
}

/// Largest hyperbolic distance from the segment's samples to the background segment.
pub fn morse_deviation(seg: &MinimalSegment) -> f64 {
    seg.morse_deviation
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorseConstantEstimate {
    pub d_est: f64,
    pub samples: usize,
    /// Endpoints of the pair attaining the maximum.
    pub argmax: (C64, C64),
    pub deviations: Vec<f64>,
    /// Pairs that failed to connect.
    pub failures: usize,
    /// Every sampled pair with its deviation, `None` where the solve failed.
    pub pairs: Vec<(C64, C64, Option<f64>)>,
}

/// Random pair symmetric about a random point of the fundamental octagon.
pub fn random_pair(rng: &mut impl Rng, max_separation: f64) -> (DiscPoint, DiscPoint) {
    let group = crate::group::genus2_group();
    let mid = loop {
        let z = crate::metric::sample_point(rng, group.circumradius);
        if group.in_domain(z, 0.0) {
            break z;
        }
    };
    let sep = rng.gen_range(0.25 * max_separation..=max_separation);
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let g = HyperbolicGeodesic {
        frame: MobiusMap::translation_to(mid).compose(&MobiusMap::rotation(theta)),
        start: f64::NEG_INFINITY,
        end: f64::INFINITY,
    };
    (g.point(-0.5 * sep), g.point(0.5 * sep))
}

/// Per-sample generator derived from a master seed.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Empirical Morse constant from `n` random minimal segments.
pub fn estimate_d(metric: &dyn FinslerMetric, n: usize, max_separation: f64, seed: u64, opts: &ConnectOptions) -> MorseConstantEstimate {
    let results: Vec<(C64, C64, Option<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let (x, y) = random_pair(&mut rng, max_separation);
            let dev = minimal_segment(metric, x, y, opts).ok().map(|s| s.morse_deviation);
            (x.z(), y.z(), dev)
        })
        .collect();
    let mut d_est = 0.0;
    let mut argmax = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    let mut deviations = Vec::with_capacity(n);
    let mut failures = 0;
    for &(x, y, dev) in &results {
        match dev {
            Some(d) => {
                if d > d_est {
                    d_est = d;
                    argmax = (x, y);
                }
                deviations.push(d);
            }
            None => failures += 1,
        }
    }
    MorseConstantEstimate {
        d_est,
        samples: deviations.len(),
        argmax,
        deviations,
        failures,
        pairs: results,
    }
}

/// Histogram of deviations as CSV with columns `bin_lo,bin_hi,count`.
pub fn deviation_histogram(deviations: &[f64], bins: usize) -> String {
    let hi = deviations.iter().copied().fold(0.0f64, f64::max).max(1e-12);
    let mut counts = vec![0usize; bins.max(1)];
    for &d in deviations {
        let b = ((d / hi) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (i, c) in counts.iter().enumerate() {
        let lo = hi * i as f64 / bins as f64;
        let up = hi * (i + 1) as f64 / bins as f64;
        out.push_str(&format!("{lo:.6e},{up:.6e},{c}\n"));
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrossingReport {
    pub transverse: usize,
    /// Crossings at an angle below `1e-4`, or touches without a side change.
    pub tangential: usize,
    /// The paths overlap along a stretch; crossings there are not counted.
    pub degenerate: bool,
    /// Intersection clusters discarded because the paths stay within the overlap tolerance around them.
    pub overlaps: usize,
    pub points: Vec<C64>,
}

fn seg_intersection(p0: C64, p1: C64, q0: C64, q1: C64) -> Option<(f64, f64, f64)> {
    let r = p1 - p0;
    let s = q1 - q0;
    let den = r.re * s.im - r.im * s.re;
    let qp = q0 - p0;
    if den.abs() <= 1e-300 {
        return None;
    }
    let u = (qp.re * s.im - qp.im * s.re) / den;
    let w = (qp.re * r.im - qp.im * r.re) / den;
    Some((u, w, den))
}

fn bbox(pts: &[C64]) -> (f64, f64, f64, f64) {
    pts.iter().fold((f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY), |b, p| {
        (b.0.min(p.re), b.1.min(p.im), b.2.max(p.re), b.3.max(p.im))
    })
}

/// Hyperbolic distance from `z` to the polyline `pts`, or `None` when the
/// nearest point is an end of the polyline (`z` lies beyond it).
fn interior_distance(z: C64, pts: &[C64]) -> Option<f64> {
    let mut best = (f64::INFINITY, false);
    let n = pts.len() - 1;
    for (i, w) in pts.windows(2).enumerate() {
        let d = w[1] - w[0];
        let l2 = d.norm_sqr();
        let raw = if l2 > 0.0 { ((z - w[0]) * d.conj()).re / l2 } else { 0.0 };
        let t = raw.clamp(0.0, 1.0);
        let dist = distance(z, w[0] + d * t);
        if dist < best.0 {
            let at_end = (i == 0 && raw < 0.0) || (i + 1 == n && raw > 1.0);
            best = (dist, at_end);
        }
    }
    (!best.1).then_some(best.0)
}

/// Transverse intersections of two sampled paths.
pub fn crossing_count(p: &GeodesicPath, q: &GeodesicPath) -> CrossingReport {
    crossing_count_with(p, q, 1e-7, 4)
}

/// [`crossing_count`] with a custom overlap test: an intersection is counted
/// as an overlap when every sample within `window` of it, on either path, that
/// lies alongside the other path is within `overlap_tol` of it.
pub fn crossing_count_with(p: &GeodesicPath, q: &GeodesicPath, overlap_tol: f64, window: usize) -> CrossingReport {
    let a = p.points();
    let b = q.points();
    let mut report = CrossingReport::default();
    if a.len() < 2 || b.len() < 2 {
        return report;
    }
    const CHUNK: usize = 16;
    let chunks = |pts: &[C64]| -> Vec<(usize, usize, (f64, f64, f64, f64))> {
        (0..pts.len() - 1)
            .step_by(CHUNK)
            .map(|i| {
                let j = (i + CHUNK).min(pts.len() - 1);
                (i, j, bbox(&pts[i..=j]))
            })
            .collect()
    };
    let ca = chunks(&a);
    let cb = chunks(&b);
    // (point, sign, angle, index in a, index in b)
    let mut hits: Vec<(C64, f64, f64, usize, usize)> = Vec::new();
    let mut overlap = false;
    for &(ia, ja, ba) in &ca {
        for &(ib, jb, bb) in &cb {
            if ba.2 < bb.0 || bb.2 < ba.0 || ba.3 < bb.1 || bb.3 < ba.1 {
                continue;
            }
            for i in ia..ja {
                for j in ib..jb {
                    let last_a = i + 2 == a.len();
                    let last_b = j + 2 == b.len();
                    match seg_intersection(a[i], a[i + 1], b[j], b[j + 1]) {
                        Some((u, w, den)) => {
                            let ok_u = u >= 0.0 && (u < 1.0 || (last_a && u <= 1.0));
                            let ok_w = w >= 0.0 && (w < 1.0 || (last_b && w <= 1.0));
                            if ok_u && ok_w {
                                let r = a[i + 1] - a[i];
                                let s = b[j + 1] - b[j];
                                let angle = (s / r).arg().abs();
                                let angle = angle.min(std::f64::consts::PI - angle);
                                hits.push((a[i] + r * u, den.signum(), angle, i, j));
                            }
                        }
                        None => {
                            let r = a[i + 1] - a[i];
                            let off = (b[j] - a[i]) * r.conj();
                            if off.im.abs() <= 1e-15 * r.norm_sqr().max(1e-300) {
                                let l2 = r.norm_sqr().max(1e-300);
                                let t0 = off.re / l2;
                                let t1 = ((b[j + 1] - a[i]) * r.conj()).re / l2;
                                if t0.max(t1) >= 0.0 && t0.min(t1) <= 1.0 {
                                    overlap = true;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    hits.sort_by(|x, y| x.3.cmp(&y.3).then(x.4.cmp(&y.4)));
    let mut clusters: Vec<Vec<(C64, f64, f64, usize, usize)>> = Vec::new();
    for h in hits {
        match clusters.iter_mut().find(|c| c.iter().any(|o| distance(o.0, h.0) < 1e-6)) {
            Some(c) => c.push(h),
            None => clusters.push(vec![h]),
        }
    }
    for c in clusters {
        let net: f64 = c.iter().map(|h| h.1).sum();
        let (pt, _, angle, ia, ib) = c[0];
        // paths hugging each other around the hit are an overlap, not a crossing
        let near = |pts: &[C64], other: &[C64], at: usize| -> Vec<f64> {
            let lo = at.saturating_sub(window);
            let hi = (at + window + 1).min(pts.len() - 1);
            (lo..=hi).filter_map(|k| interior_distance(pts[k], other)).collect()
        };
        let mut seps = near(&a, &b, ia);
        seps.extend(near(&b, &a, ib));
        let hugging = seps.len() >= 2 && seps.iter().all(|&d| d < overlap_tol);
        if hugging {
            overlap = true;
            report.overlaps += 1;
            continue;
        }
        if net.abs() < 0.5 {
            report.tangential += 1;
        } else if angle < 1e-4 {
            report.tangential += 1;
        } else {
            report.transverse += 1;
            report.points.push(pt);
        }
    }
    report.degenerate = overlap;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::BoundaryDirection;
    use crate::group::genus2_group;
    use crate::metric::{conformal_bump, hyperbolic_norm, randers_exact};
    use approx::assert_abs_diff_eq;

    fn p(re: f64, im: f64) -> DiscPoint {
        DiscPoint::new(re, im).unwrap()
    }

    #[test]
    fn long_segment_hugging_the_boundary() {
        let xi = BoundaryDirection::new(0.7);
        let g = HyperbolicGeodesic::through_boundary(xi.rotated(std::f64::consts::PI / 8.0), xi).unwrap();
        let x = DiscPoint::from_complex(g.fermi_point(-16.0, -0.25)).unwrap();
        let y = DiscPoint::from_complex(g.fermi_point(16.0, 0.25)).unwrap();
        let s = minimal_segment(hyperbolic_norm().as_ref(), x, y, &ConnectOptions::default()).unwrap();
        assert!((s.length - distance(x.z(), y.z())).abs() < 1e-6);
    }

    #[test]
    fn hyperbolic_segment_examples() {
        let h = hyperbolic_norm();
        let seg = minimal_segment(h.as_ref(), p(0.0, 0.0), p(0.5, 0.0), &ConnectOptions::default()).unwrap();
        assert_abs_diff_eq!(seg.length, 3f64.ln(), epsilon = 1e-6);
        assert!(seg.path.samples.iter().all(|s| s.z.im.abs() < 1e-9));
        assert!(seg.morse_deviation <= 1e-6);
        assert!((seg.path.end().z - C64::new(0.5, 0.0)).norm() <= 1e-6);
    }

    #[test]
    fn randers_segment_examples() {
        let r = randers_exact(0.2).unwrap();
        let o = ConnectOptions::default();
        let fwd = minimal_segment(r.as_ref(), p(0.0, 0.0), p(0.5, 0.0), &o).unwrap();
        let back = minimal_segment(r.as_ref(), p(0.5, 0.0), p(0.0, 0.0), &o).unwrap();
        assert_abs_diff_eq!(fwd.length, 3f64.ln() + 0.1, epsilon = 1e-6);
        assert_abs_diff_eq!(back.length, 3f64.ln() - 0.1, epsilon = 1e-6);
        assert!(fwd.morse_deviation <= 1e-6);
    }

    #[test]
    fn long_oracle_segments() {
        let r = randers_exact(0.2).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..5 {
            let (x, y) = random_pair(&mut rng, 12.0);
            let seg = minimal_segment(r.as_ref(), x, y, &ConnectOptions::default()).unwrap();
            let oracle = r.exact_distance(x.z(), y.z()).unwrap();
            let dh = distance(x.z(), y.z());
            assert!((seg.length - oracle).abs() <= 1e-5 * (1.0 + dh), "{} vs {}", seg.length, oracle);
            assert!(seg.morse_deviation <= 1e-5);
        }
    }

    #[test]
    fn bump_segment_through_the_centre_deviates() {
        let b = conformal_bump(&genus2_group(), 0.5, 0.8).unwrap();
        let seg = minimal_segment(b.as_ref(), p(-0.6, 0.0), p(0.6, 0.0), &ConnectOptions::default()).unwrap();
        assert!(seg.morse_deviation > 1e-3);
        let dh = distance(C64::new(-0.6, 0.0), C64::new(0.6, 0.0));
        assert!(seg.length < dh * 0.5f64.exp());
        // symmetric problem: the two sides tie
        assert!(seg.ambiguous, "gap {}", seg.gap);
    }

    #[test]
    fn polishing_from_a_neighbour() {
        let b = conformal_bump(&genus2_group(), 0.5, 0.8).unwrap();
        let o = ConnectOptions::default();
        let seg = minimal_segment(b.as_ref(), p(0.1, 0.2), p(-0.7, 0.5), &o).unwrap();
        let x2 = p(0.11, 0.2);
        let (d2, _) = distance_from_guess(b.as_ref(), x2, p(-0.7, 0.5), &seg.state, &o).unwrap();
        let direct = minimal_segment(b.as_ref(), x2, p(-0.7, 0.5), &o).unwrap();
        assert_abs_diff_eq!(d2, direct.length, epsilon = 1e-8);
    }

    #[test]
    fn degenerate_endpoints() {
        let h = hyperbolic_norm();
        assert_eq!(
            minimal_segment(h.as_ref(), p(0.1, 0.1), p(0.1, 0.1), &ConnectOptions::default()).unwrap_err(),
            Error::DegenerateEndpoints
        );
    }

    fn diameter_path(angle: f64) -> GeodesicPath {
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(angle + std::f64::consts::PI), BoundaryDirection::new(angle)).unwrap();
        let samples = (0..=200)
            .map(|k| {
                let t = -5.0 + 10.0 * k as f64 / 200.0;
                PathSample { t, z: g.point_c(t), v: g.velocity(t) }
            })
            .collect();
        GeodesicPath::from_samples("hyperbolic", samples)
    }

    #[test]
    fn crossing_examples() {
        let a = diameter_path(0.0);
        let b = diameter_path(1.0);
        let r = crossing_count(&a, &b);
        assert_eq!(r.transverse, 1);
        assert!(!r.degenerate);
        let s = crossing_count(&a, &a);
        assert_eq!(s.transverse, 0);
        assert!(s.degenerate);
    }

    #[test]
    fn disjoint_geodesics_do_not_cross() {
        let g1 = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(3.0), BoundaryDirection::new(0.1)).unwrap();
        let g2 = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(3.5), BoundaryDirection::new(-0.1)).unwrap();
        let mk = |g: HyperbolicGeodesic| {
            GeodesicPath::from_samples(
                "h",
                (0..=100).map(|k| {
                    let t = -6.0 + 0.12 * k as f64;
                    PathSample { t, z: g.point_c(t), v: g.velocity(t) }
                }).collect(),
            )
        };
        assert_eq!(crossing_count(&mk(g1), &mk(g2)).transverse, 0);
    }

    #[test]
    fn thomas_solves_tridiagonal_systems() {
        let x = thomas(&[4.0, 4.0, 4.0], &[1.0, 1.0], &[5.0, 6.0, 5.0], 0.0).unwrap();
        for v in x {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        }
        assert!(thomas(&[-1.0, 2.0], &[0.0], &[1.0, 1.0], 0.0).is_none());
    }

    #[test]
    fn link_length_is_exact_for_the_hyperbolic_metric() {
        let h = hyperbolic_norm();
        let (a, b) = (C64::new(0.1, -0.3), C64::new(-0.4, 0.2));
        assert_abs_diff_eq!(link_length(h.as_ref(), a, b), distance(a, b), epsilon = 1e-14);
    }

    #[test]
    fn histogram_counts_everything() {
        let csv = deviation_histogram(&[0.1, 0.2, 0.2, 0.4], 4);
        let total: usize = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
        assert_eq!(total, 4);
    }
}
