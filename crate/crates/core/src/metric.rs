//! Finsler metrics on the disc: evaluation, fiber derivatives, the Legendre
//! transform and the three built-in families.
//!
//! Fiber vectors and covectors are both stored as complex numbers. A covector
//! `p` acts by `p(w) = Re(conj(p) w)`, so gradients read `∂x + i ∂y`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::disc::{conformal_factor, distance, one_minus_norm_sqr, C64};
use crate::error::{Error, Result};
use crate::group::FuchsianGroup;

pub type Sym2 = Matrix2<f64>;

const FIBER_STEP: f64 = 1e-5;

#[inline]
fn to_vec(z: C64) -> Vector2<f64> {
    Vector2::new(z.re, z.im)
}

#[inline]
fn from_vec(v: Vector2<f64>) -> C64 {
    C64::new(v[0], v[1])
}

/// Euclidean inner product of two fiber vectors.
#[inline]
pub fn dot(a: C64, b: C64) -> f64 {
    a.re * b.re + a.im * b.im
}

pub trait FinslerMetric: Send + Sync + fmt::Debug {
    /// Configuration string that rebuilds this metric.
    fn id(&self) -> String;

    fn evaluate(&self, z: C64, v: C64) -> f64;

    /// `d_v (F^2/2)`, the Legendre map.
    fn fiber_gradient(&self, z: C64, v: C64) -> C64 {
        let h = FIBER_STEP * v.norm().max(1e-300);
        let e = |w: C64| 0.5 * self.evaluate(z, w).powi(2);
        let gx = (e(v + h) - e(v - h)) / (2.0 * h);
        let gy = (e(v + C64::new(0.0, h)) - e(v - C64::new(0.0, h))) / (2.0 * h);
        C64::new(gx, gy)
    }

    /// Fiber Hessian of `F^2/2`.
    fn fiber_hessian(&self, z: C64, v: C64) -> Sym2 {
        let h = FIBER_STEP * v.norm().max(1e-300);
        let gx = (self.fiber_gradient(z, v + h) - self.fiber_gradient(z, v - h)) / (2.0 * h);
        let gy = (self.fiber_gradient(z, v + C64::new(0.0, h)) - self.fiber_gradient(z, v - C64::new(0.0, h))) / (2.0 * h);
        let off = 0.5 * (gx.im + gy.re);
        Sym2::new(gx.re, off, off, gy.im)
    }

    /// `d_z (F^2/2)` at fixed fiber coordinates.
    fn position_gradient(&self, z: C64, v: C64) -> C64 {
        let h = 1e-6 * one_minus_norm_sqr(z);
        let e = |w: C64| 0.5 * self.evaluate(w, v).powi(2);
        let gx = (e(z + h) - e(z - h)) / (2.0 * h);
        let gy = (e(z + C64::new(0.0, h)) - e(z - C64::new(0.0, h))) / (2.0 * h);
        C64::new(gx, gy)
    }

    /// Second time derivative of an `F^2/2` extremal through `(z, v)`.
    ///
    /// Solves `L_vv a = L_x - L_vx v` with `L = F^2/2`.
    fn acceleration(&self, z: C64, v: C64) -> C64 {
        euler_lagrange_acceleration(self, z, v)
    }

    fn gamma_invariant(&self) -> bool {
        false
    }

    /// Closed-form `d_F` when one is known.
    fn exact_distance(&self, _x: C64, _y: C64) -> Option<f64> {
        None
    }

    fn smoothness(&self) -> &'static str {
        "C-infinity off the zero section"
    }

    /// Signed level function vanishing where the metric loses smoothness, if any.
    fn seam(&self, _z: C64) -> Option<f64> {
        None
    }
}

pub type MetricRef = Arc<dyn FinslerMetric>;

/// Generic Euler-Lagrange acceleration from finite differences of the metric.
pub fn euler_lagrange_acceleration<M: FinslerMetric + ?Sized>(m: &M, z: C64, v: C64) -> C64 {
    let lx = m.position_gradient(z, v);
    let h = 1e-6 * one_minus_norm_sqr(z) / v.norm().max(1e-300);
    let lvx_v = (m.fiber_gradient(z + v * h, v) - m.fiber_gradient(z - v * h, v)) / (2.0 * h);
    let hess = m.fiber_hessian(z, v);
    let rhs = to_vec(lx - lvx_v);
    match hess.lu().solve(&rhs) {
        Some(a) => from_vec(a),
        None => C64::new(f64::NAN, f64::NAN),
    }
}

/// Acceleration of unit-rate geodesics of the conformal metric `e^sigma |dz|`.
#[inline]
fn conformal_acceleration(grad_sigma: C64, v: C64) -> C64 {
    -2.0 * dot(grad_sigma, v) * v + v.norm_sqr() * grad_sigma
}

/// Gradient of `log(2 / (1 - |z|^2))`.
#[inline]
fn hyperbolic_log_gradient(z: C64) -> C64 {
    2.0 * z / one_minus_norm_sqr(z)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Hyperbolic;

pub fn hyperbolic_norm() -> MetricRef {
    Arc::new(Hyperbolic)
}

impl FinslerMetric for Hyperbolic {
    fn id(&self) -> String {
        "hyperbolic".into()
    }

    fn evaluate(&self, z: C64, v: C64) -> f64 {
        conformal_factor(z) * v.norm()
    }

    fn fiber_gradient(&self, z: C64, v: C64) -> C64 {
        conformal_factor(z).powi(2) * v
    }

    fn fiber_hessian(&self, z: C64, _v: C64) -> Sym2 {
        Sym2::identity() * conformal_factor(z).powi(2)
    }

    fn position_gradient(&self, z: C64, v: C64) -> C64 {
        let l2 = conformal_factor(z).powi(2);
        l2 * v.norm_sqr() * hyperbolic_log_gradient(z)
    }

    fn acceleration(&self, z: C64, v: C64) -> C64 {
        conformal_acceleration(hyperbolic_log_gradient(z), v)
    }

    fn gamma_invariant(&self) -> bool {
        true
    }

    fn exact_distance(&self, x: C64, y: C64) -> Option<f64> {
        Some(distance(x, y))
    }
}

/// `F = |v|_h + eps Re v`, the hyperbolic norm plus the exact form `d(eps Re z)`.
#[derive(Debug, Clone, Copy)]
pub struct Randers {
    pub amplitude: f64,
}

pub fn randers_exact(amplitude: f64) -> Result<MetricRef> {
    if !(amplitude.is_finite() && amplitude.abs() < 2.0) {
        return Err(Error::InvalidAmplitude(amplitude));
    }
    Ok(Arc::new(Randers { amplitude }))
}

impl FinslerMetric for Randers {
    fn id(&self) -> String {
        format!("randers:{}", self.amplitude)
    }

    fn evaluate(&self, z: C64, v: C64) -> f64 {
        conformal_factor(z) * v.norm() + self.amplitude * v.re
    }

    fn fiber_gradient(&self, z: C64, v: C64) -> C64 {
        let n = v.norm();
        if n == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let f = self.evaluate(z, v);
        f * (conformal_factor(z) * v / n + self.amplitude)
    }

    fn fiber_hessian(&self, z: C64, v: C64) -> Sym2 {
        let lam = conformal_factor(z);
        let n = v.norm();
        let f = self.evaluate(z, v);
        let g = to_vec(lam * v / n + self.amplitude);
        let u = to_vec(v / n);
        let hess_f = (Sym2::identity() - u * u.transpose()) * (lam / n);
        g * g.transpose() + hess_f * f
    }

    fn position_gradient(&self, z: C64, v: C64) -> C64 {
        let lam = conformal_factor(z);
        self.evaluate(z, v) * v.norm() * lam * hyperbolic_log_gradient(z)
    }

    fn acceleration(&self, z: C64, v: C64) -> C64 {
        let ah = conformal_acceleration(hyperbolic_log_gradient(z), v);
        ah - self.amplitude * ah.re * v / self.evaluate(z, v)
    }

    fn exact_distance(&self, x: C64, y: C64) -> Option<f64> {
        Some(distance(x, y) + self.amplitude * (y.re - x.re))
    }
}

/// `F = e^phi |v|_h` with `phi` a sum of polynomial bumps centred on the orbit of 0.
#[derive(Debug, Clone)]
pub struct ConformalBump {
    pub amplitude: f64,
    pub radius: f64,
    group: FuchsianGroup,
    /// Orbit points of 0 that can lie within `radius` of a point of the octagon.
    centres: Vec<C64>,
    /// Euclidean bound: `|z - p| >= support_chord` implies `d_h(z, p) >= radius` for `|p|` small.
    support_chord: f64,
}

pub fn conformal_bump(group: &FuchsianGroup, amplitude: f64, radius: f64) -> Result<MetricRef> {
    Ok(Arc::new(ConformalBump::new(group, amplitude, radius)?))
}

impl ConformalBump {
    pub fn new(group: &FuchsianGroup, amplitude: f64, radius: f64) -> Result<Self> {
        if !(amplitude > -0.5 && amplitude < 2.0) {
            return Err(Error::InvalidAmplitude(amplitude));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("bump radius {radius} must be positive")));
        }
        // a point of the octagon is at least as close to 0 as to any other
        // orbit point, so short bumps only ever see the central one
        let centres = if 2.0 * radius <= group.translation_length {
            vec![C64::new(0.0, 0.0)]
        } else {
            group
                .orbit_of_origin(group.circumradius + radius)
                .into_iter()
                .map(|(p, _)| p)
                .collect()
        };
        Ok(ConformalBump {
            amplitude,
            radius,
            group: group.clone(),
            support_chord: if centres.len() == 1 { (0.5 * radius).tanh() } else { f64::INFINITY },
            centres,
        })
    }

    /// `phi` and its euclidean gradient at a point of the closed octagon.
    fn local_phi(&self, z: C64) -> (f64, C64) {
        let rho2 = self.radius * self.radius;
        let oz = one_minus_norm_sqr(z);
        let mut phi = 0.0;
        let mut grad = C64::new(0.0, 0.0);
        for &p in &self.centres {
            if (z - p).norm() >= self.support_chord {
                continue;
            }
            let s = distance(z, p);
            if s >= self.radius {
                continue;
            }
            let q = s * s / rho2;
            let w = 1.0 - q;
            phi += w * w * w;
            let op = one_minus_norm_sqr(p);
            let d = z - p;
            // grad of cosh(s) = 1 + 2|z-p|^2 / ((1-|z|^2)(1-|p|^2))
            let grad_cosh = 2.0 / op * (2.0 * d / oz + d.norm_sqr() * 2.0 * z / (oz * oz));
            let s_over_sinh = if s < 1e-8 { 1.0 } else { s / s.sinh() };
            grad += -6.0 * w * w / rho2 * s_over_sinh * grad_cosh;
        }
        (self.amplitude * phi, self.amplitude * grad)
    }

    /// `phi(z)` and its euclidean gradient.
    pub fn phi(&self, z: C64) -> (f64, C64) {
        let (rep, m) = self.group.reduce_map_uncapped(z);
        let (phi, grad) = self.local_phi(rep);
        (phi, m.derivative(z).conj() * grad)
    }

    #[inline]
    fn log_factor(&self, z: C64) -> (f64, C64) {
        let (phi, gphi) = self.phi(z);
        (phi + conformal_factor(z).ln(), gphi + hyperbolic_log_gradient(z))
    }
}

impl FinslerMetric for ConformalBump {
    fn id(&self) -> String {
        format!("bump:{}:{}", self.amplitude, self.radius)
    }

    fn evaluate(&self, z: C64, v: C64) -> f64 {
        let (phi, _) = self.phi(z);
        phi.exp() * conformal_factor(z) * v.norm()
    }

    fn fiber_gradient(&self, z: C64, v: C64) -> C64 {
        let (phi, _) = self.phi(z);
        let mu = phi.exp() * conformal_factor(z);
        mu * mu * v
    }

    fn fiber_hessian(&self, z: C64, _v: C64) -> Sym2 {
        let (phi, _) = self.phi(z);
        let mu = phi.exp() * conformal_factor(z);
        Sym2::identity() * (mu * mu)
    }

    fn position_gradient(&self, z: C64, v: C64) -> C64 {
        let (sigma, g) = self.log_factor(z);
        (2.0 * sigma).exp() * v.norm_sqr() * g
    }

    fn acceleration(&self, z: C64, v: C64) -> C64 {
        let (_, g) = self.log_factor(z);
        conformal_acceleration(g, v)
    }

    fn gamma_invariant(&self) -> bool {
        true
    }

    fn exact_distance(&self, x: C64, y: C64) -> Option<f64> {
        if self.amplitude == 0.0 {
            Some(distance(x, y))
        } else {
            None
        }
    }

    fn smoothness(&self) -> &'static str {
        "C2 (polynomial bump profile)"
    }

    fn seam(&self, z: C64) -> Option<f64> {
        let (rep, _) = self.group.reduce_map_uncapped(z);
        let d = self.centres.iter().map(|&p| distance(rep, p)).fold(f64::INFINITY, f64::min);
        Some(d - self.radius)
    }
}

/// `F~(z, v) = F(z, -v)`; its forward objects are the backward objects of `F`.
#[derive(Debug, Clone)]
pub struct Reversed(pub MetricRef);

pub fn reversed(m: MetricRef) -> MetricRef {
    Arc::new(Reversed(m))
}

impl FinslerMetric for Reversed {
    fn id(&self) -> String {
        format!("reversed({})", self.0.id())
    }

    fn evaluate(&self, z: C64, v: C64) -> f64 {
        self.0.evaluate(z, -v)
    }

    fn fiber_gradient(&self, z: C64, v: C64) -> C64 {
        -self.0.fiber_gradient(z, -v)
    }

    fn fiber_hessian(&self, z: C64, v: C64) -> Sym2 {
        self.0.fiber_hessian(z, -v)
    }

    fn position_gradient(&self, z: C64, v: C64) -> C64 {
        self.0.position_gradient(z, -v)
    }

    fn acceleration(&self, z: C64, v: C64) -> C64 {
        self.0.acceleration(z, -v)
    }

    fn gamma_invariant(&self) -> bool {
        self.0.gamma_invariant()
    }

    fn exact_distance(&self, x: C64, y: C64) -> Option<f64> {
        self.0.exact_distance(y, x)
    }

    fn smoothness(&self) -> &'static str {
        self.0.smoothness()
    }

    fn seam(&self, z: C64) -> Option<f64> {
        self.0.seam(z)
    }
}

/// Parses `hyperbolic`, `randers:<eps>` or `bump:<a>:<rho>`.
pub fn parse_metric(spec: &str, group: &FuchsianGroup) -> Result<MetricRef> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidMetric(format!("cannot parse number {s:?} in {spec:?}")))
    };
    match parts.as_slice() {
        ["hyperbolic"] => Ok(hyperbolic_norm()),
        ["randers", eps] => randers_exact(num(eps)?),
        ["bump", a, rho] => conformal_bump(group, num(a)?, num(rho)?),
        _ => Err(Error::InvalidMetric(format!(
            "unknown metric {spec:?}; expected hyperbolic, randers:<eps> or bump:<a>:<rho>"
        ))),
    }
}

/// Unit vector for `metric` at `z` pointing at euclidean angle `theta`.
pub fn unit_vector(metric: &dyn FinslerMetric, z: C64, theta: f64) -> C64 {
    let e = C64::from_polar(1.0, theta);
    e / metric.evaluate(z, e)
}

/// Inverts the Legendre map: finds `v` with `d_v(F^2/2)(v) = p`.
pub fn legendre_inverse(metric: &dyn FinslerMetric, z: C64, p: C64) -> Result<C64> {
    if p.norm() == 0.0 || !p.re.is_finite() || !p.im.is_finite() {
        return Err(Error::InvalidArgument("covector must be finite and nonzero".into()));
    }
    let lam = conformal_factor(z);
    let scale = p.norm().max(1.0);
    let mut v = p / (lam * lam);
    let mut res = metric.fiber_gradient(z, v) - p;
    for it in 0..50 {
        if res.norm() <= 1e-12 * scale {
            return Ok(v);
        }
        let h = metric.fiber_hessian(z, v);
        let step = match h.lu().solve(&to_vec(res)) {
            Some(s) => from_vec(s),
            None => {
                return Err(Error::NewtonDiverged {
                    iterations: it,
                    residual: res.norm(),
                })
            }
        };
        let mut t = 1.0;
        loop {
            let cand = v - step * t;
            let r2 = metric.fiber_gradient(z, cand) - p;
            if r2.norm() < res.norm() || t < 1e-6 {
                v = cand;
                res = r2;
                break;
            }
            t *= 0.5;
        }
    }
    if res.norm() <= 1e-10 * scale {
        Ok(v)
    } else {
        Err(Error::NewtonDiverged {
            iterations: 50,
            residual: res.norm(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceConstants {
    /// Smallest sampled constant with `F/c <= |.|_h <= c F`, times 1.05.
    pub c_f: f64,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub metric: String,
    pub homogeneity_residual: f64,
    /// Smallest eigenvalue of the fiber Hessian of `F^2`, relative to the largest.
    pub min_convexity: f64,
    pub min_value: f64,
    pub gradient_fd_error: f64,
    pub invariance_residual: Option<f64>,
    pub constants: EquivalenceConstants,
    pub pass: bool,
}

/// Random point with hyperbolic distance at most `max_dist` from 0.
pub(crate) fn sample_point(rng: &mut impl Rng, max_dist: f64) -> C64 {
    let d = max_dist * rng.gen::<f64>().sqrt();
    C64::from_polar((0.5 * d).tanh(), rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Samples the axioms of a Finsler metric and the uniform equivalence constant.
pub fn verify_metric(
    metric: &dyn FinslerMetric,
    group: Option<&FuchsianGroup>,
    n_samples: usize,
    seed: u64,
) -> MetricReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut homog: f64 = 0.0;
    let mut convex = f64::INFINITY;
    let mut min_value = f64::INFINITY;
    let mut grad_err: f64 = 0.0;
    let mut inv: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..n_samples.max(1) {
        let z = sample_point(&mut rng, 3.0);
        let v = C64::from_polar(rng.gen_range(0.1..2.0), rng.gen_range(0.0..std::f64::consts::TAU))
            * one_minus_norm_sqr(z);
        let f = metric.evaluate(z, v);
        for lam in [0.5, 2.0, 7.0] {
            let r = (metric.evaluate(z, v * lam) - lam * f).abs() / (lam * f).abs().max(1e-300);
            homog = homog.max(r);
        }
        min_value = min_value.min(f / (conformal_factor(z) * v.norm()));
        let hess = metric.fiber_hessian(z, v) * 2.0;
        let eig = SymmetricEigen::new(hess).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        convex = convex.min(if hi > 0.0 { lo / hi } else { -1.0 });
        let h = FIBER_STEP * v.norm();
        let e = |w: C64| 0.5 * metric.evaluate(z, w).powi(2);
        let fd = C64::new(
            (e(v + h) - e(v - h)) / (2.0 * h),
            (e(v + C64::new(0.0, h)) - e(v - C64::new(0.0, h))) / (2.0 * h),
        );
        let g = metric.fiber_gradient(z, v);
        grad_err = grad_err.max((g - fd).norm() / g.norm().max(1e-300));
        let ratio = f / (conformal_factor(z) * v.norm());
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
        if let (true, Some(gr)) = (metric.gamma_invariant(), group) {
            for gen in &gr.generators {
                let (z2, v2) = gen.map.push(z, v);
                inv = inv.max((metric.evaluate(z2, v2) - f).abs());
            }
        }
    }
    let c = max_ratio.max(1.0 / min_ratio).max(1.0) * 1.05;
    let constants = EquivalenceConstants {
        c_f: c,
        samples: n_samples.max(1),
        min_ratio,
        max_ratio,
    };
    let invariance_residual = (metric.gamma_invariant() && group.is_some()).then_some(inv);
    let pass = homog <= 1e-8
        && convex > 1e-9
        && min_value > 0.0
        && grad_err <= 1e-6
        && invariance_residual.map_or(true, |r| r <= 1e-6);
    MetricReport {
        metric: metric.id(),
        homogeneity_residual: homog,
        min_convexity: convex,
        min_value,
        gradient_fd_error: grad_err,
        invariance_residual,
        constants,
        pass,
    }
}
