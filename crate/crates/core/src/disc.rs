//! Exact hyperbolic geometry of the Poincaré disc.
//!
//! Points live in disc coordinates `|z| < 1` with the metric
//! `4 (1 - |z|^2)^-2 <., .>_euc`. Isometries are Möbius maps in SU(1,1)
//! normal form `z -> (a z + b) / (conj(b) z + conj(a))`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Points with `|z| >= 1 - DISC_GUARD` are rejected by [`DiscPoint::new`].
pub const DISC_GUARD: f64 = 1e-12;

/// Default euclidean boundary proximity required by [`endpoint_estimate`].
pub const BOUNDARY_EPS: f64 = 1e-3;

/// `1 - |z|^2`, evaluated as `(1 - |z|)(1 + |z|)` to keep relative precision near the rim.
#[inline]
pub fn one_minus_norm_sqr(z: C64) -> f64 {
    let r = z.norm();
    (1.0 - r) * (1.0 + r)
}

/// Density of the hyperbolic metric relative to the euclidean one: `2 / (1 - |z|^2)`.
#[inline]
pub fn conformal_factor(z: C64) -> f64 {
    2.0 / one_minus_norm_sqr(z)
}

/// Hyperbolic norm `2|v| / (1 - |z|^2)` of a fiber vector `v` at `z`.
#[inline]
pub fn hyperbolic_norm(z: C64, v: C64) -> f64 {
    conformal_factor(z) * v.norm()
}

/// Closed-form hyperbolic distance between two raw disc coordinates.
///
/// `acosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2)))`, evaluated through the
/// equivalent `2 asinh(|x-y| / sqrt((1-|x|^2)(1-|y|^2)))` which does not lose
/// digits for nearby points.
#[inline]
pub fn distance(x: C64, y: C64) -> f64 {
    let denom = (one_minus_norm_sqr(x) * one_minus_norm_sqr(y)).sqrt();
    2.0 * ((x - y).norm() / denom).asinh()
}

/// Wraps an angle into `(-PI, PI]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscPoint(C64);

impl DiscPoint {
    pub const ORIGIN: DiscPoint = DiscPoint(C64 { re: 0.0, im: 0.0 });

    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_complex(C64::new(re, im))
    }

    pub fn from_complex(z: C64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) || z.norm() >= 1.0 - DISC_GUARD {
            return Err(Error::InvalidPoint { re: z.re, im: z.im });
        }
        Ok(DiscPoint(z))
    }

    /// Skips validation; callers guarantee `|z| < 1`.
    pub(crate) fn unchecked(z: C64) -> Self {
        DiscPoint(z)
    }

    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }

    pub fn z(&self) -> C64 {
        self.0
    }
}

/// Hyperbolic distance between two disc points.
pub fn hyperbolic_distance(x: DiscPoint, y: DiscPoint) -> f64 {
    distance(x.0, y.0)
}

/// A fiber vector at a base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: DiscPoint,
    pub vector: C64,
    /// Set when the vector was normalized to unit length for some metric.
    pub unit: bool,
}

impl TangentVector {
    pub fn new(base: DiscPoint, vector: C64) -> Result<Self> {
        if !(vector.re.is_finite() && vector.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite tangent vector".into()));
        }
        Ok(TangentVector {
            base,
            vector,
            unit: false,
        })
    }

    pub fn dre(&self) -> f64 {
        self.vector.re
    }

    pub fn dim(&self) -> f64 {
        self.vector.im
    }
}

/// A point `e^{i angle}` of the boundary circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryDirection {
    angle: f64,
}

impl BoundaryDirection {
    pub fn new(angle: f64) -> Self {
        let mut a = angle.rem_euclid(TAU);
        if a >= TAU {
            a = 0.0;
        }
        BoundaryDirection { angle: a }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn point(&self) -> C64 {
        C64::from_polar(1.0, self.angle)
    }

    /// Counterclockwise angle from `self` to `other`, in `[0, 2PI)`.
    pub fn ccw_to(&self, other: BoundaryDirection) -> f64 {
        (other.angle - self.angle).rem_euclid(TAU)
    }

    /// Unsigned circular distance in radians.
    pub fn separation(&self, other: BoundaryDirection) -> f64 {
        wrap_angle(other.angle - self.angle).abs()
    }

    pub fn rotated(&self, delta: f64) -> Self {
        BoundaryDirection::new(self.angle + delta)
    }
}

/// An orientation preserving isometry of the disc in SU(1,1) normal form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: C64,
    pub b: C64,
}

impl MobiusMap {
    pub const IDENTITY: MobiusMap = MobiusMap {
        a: C64 { re: 1.0, im: 0.0 },
        b: C64 { re: 0.0, im: 0.0 },
    };

    /// Normalizes `(a, b)` to `|a|^2 - |b|^2 = 1`.
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let det = a.norm_sqr() - b.norm_sqr();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "|a|^2 - |b|^2 = {det} is not positive"
            )));
        }
        let s = det.sqrt();
        Ok(MobiusMap { a: a / s, b: b / s })
    }

    /// Hyperbolic translation sending `0` to `p` along the diameter through `p`.
    pub fn translation_to(p: C64) -> Self {
        let a = 1.0 / one_minus_norm_sqr(p).sqrt();
        MobiusMap {
            a: C64::new(a, 0.0),
            b: p * a,
        }
    }

    /// Translation by hyperbolic length `t` along the real diameter towards `+1`.
    pub fn real_translation(t: f64) -> Self {
        MobiusMap {
            a: C64::new((0.5 * t).cosh(), 0.0),
            b: C64::new((0.5 * t).sinh(), 0.0),
        }
    }

    /// Rotation `z -> e^{i theta} z`.
    pub fn rotation(theta: f64) -> Self {
        MobiusMap {
            a: C64::from_polar(1.0, 0.5 * theta),
            b: C64::new(0.0, 0.0),
        }
    }

    #[inline]
    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    pub fn apply_point(&self, p: DiscPoint) -> DiscPoint {
        DiscPoint::unchecked(self.apply(p.0))
    }

    pub fn apply_boundary(&self, d: BoundaryDirection) -> BoundaryDirection {
        BoundaryDirection::new(self.apply(d.point()).arg())
    }

    /// Complex derivative `1 / (conj(b) z + conj(a))^2`.
    #[inline]
    pub fn derivative(&self, z: C64) -> C64 {
        let d = self.b.conj() * z + self.a.conj();
        1.0 / (d * d)
    }

    /// Pushes a fiber vector at `z` forward.
    #[inline]
    pub fn push(&self, z: C64, v: C64) -> (C64, C64) {
        (self.apply(z), self.derivative(z) * v)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * other.a + self.b * other.b.conj(),
            b: self.a * other.b + self.b * other.a.conj(),
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    /// Real trace `2 Re a` of the SU(1,1) matrix.
    pub fn trace(&self) -> f64 {
        2.0 * self.a.re
    }

    pub fn determinant(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr()
    }

    /// Entrywise distance to `other`, up to the global sign ambiguity.
    pub fn distance_up_to_sign(&self, other: &MobiusMap) -> f64 {
        let plus = (self.a - other.a).norm().max((self.b - other.b).norm());
        let minus = (self.a + other.a).norm().max((self.b + other.b).norm());
        plus.min(minus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic {
        axis: HyperbolicGeodesic,
        translation_length: f64,
    },
}

const TRACE_TOL: f64 = 1e-9;

pub fn classify(m: &MobiusMap) -> Classification {
    let tr = m.trace().abs();
    if tr < 2.0 - TRACE_TOL {
        return Classification::Elliptic;
    }
    if tr <= 2.0 + TRACE_TOL {
        if m.b.norm() < TRACE_TOL && m.a.im.abs() < TRACE_TOL {
            return Classification::Identity;
        }
        return Classification::Parabolic;
    }
    let root = (m.a.re * m.a.re - 1.0).sqrt();
    let bc = m.b.conj();
    let z1 = (C64::new(0.0, m.a.im) + root) / bc;
    let z2 = (C64::new(0.0, m.a.im) - root) / bc;
    let (repelling, attracting) = if m.derivative(z1).norm() < 1.0 {
        (z2, z1)
    } else {
        (z1, z2)
    };
    let axis = HyperbolicGeodesic::through_boundary(
        BoundaryDirection::new(repelling.arg()),
        BoundaryDirection::new(attracting.arg()),
    )
    .expect("hyperbolic fixed points are distinct");
    Classification::Hyperbolic {
        axis,
        translation_length: 2.0 * (0.5 * tr).acosh(),
    }
}

/// Either end of a geodesic: an interior point or a point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    Interior(DiscPoint),
    Boundary(BoundaryDirection),
}

impl From<DiscPoint> for Endpoint {
    fn from(p: DiscPoint) -> Self {
        Endpoint::Interior(p)
    }
}

impl From<BoundaryDirection> for Endpoint {
    fn from(d: BoundaryDirection) -> Self {
        Endpoint::Boundary(d)
    }
}

/// An oriented hyperbolic geodesic (or segment, or ray) with unit-speed parametrization.
///
/// `frame` carries the real diameter onto the geodesic: `point(t) = frame(tanh(t/2))`,
/// so `frame(-1)` and `frame(+1)` are the ends at `-inf` and `+inf`. The
/// parameter range `[start, end]` may be infinite on either side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicGeodesic {
    pub frame: MobiusMap,
    pub start: f64,
    pub end: f64,
}

impl HyperbolicGeodesic {
    /// The full geodesic from `minus` to `plus`, anchored at its point closest to the origin.
    pub fn through_boundary(minus: BoundaryDirection, plus: BoundaryDirection) -> Result<Self> {
        if minus.separation(plus) < 1e-12 {
            return Err(Error::DegenerateEndpoints);
        }
        let half = 0.5 * wrap_angle(plus.angle() - minus.angle());
        let mid = minus.angle() + half;
        let r = (1.0 - half.abs().sin()) / half.cos().abs().max(f64::MIN_POSITIVE);
        let r = if half.abs() > 0.5 * PI - 1e-15 { 0.0 } else { r };
        let mid_dir = if half.abs() <= 0.5 * PI { mid } else { mid + PI };
        let p = C64::from_polar(r, mid_dir);
        let t = MobiusMap::translation_to(p);
        let phi = t.inverse().apply(plus.point()).arg();
        Ok(HyperbolicGeodesic {
            frame: t.compose(&MobiusMap::rotation(phi)),
            start: f64::NEG_INFINITY,
            end: f64::INFINITY,
        })
    }

    pub fn minus_end(&self) -> BoundaryDirection {
        BoundaryDirection::new(self.frame.apply(C64::new(-1.0, 0.0)).arg())
    }

    pub fn plus_end(&self) -> BoundaryDirection {
        BoundaryDirection::new(self.frame.apply(C64::new(1.0, 0.0)).arg())
    }

    /// Point at parameter 0.
    pub fn anchor(&self) -> DiscPoint {
        DiscPoint::unchecked(self.frame.apply(C64::new(0.0, 0.0)))
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    #[inline]
    pub fn point_c(&self, t: f64) -> C64 {
        self.frame.apply(C64::new((0.5 * t).tanh(), 0.0))
    }

    pub fn point(&self, t: f64) -> DiscPoint {
        DiscPoint::unchecked(self.point_c(t))
    }

    /// Euclidean velocity at `t`; its hyperbolic norm is one.
    pub fn velocity(&self, t: f64) -> C64 {
        let r = (0.5 * t).tanh();
        let dr = 0.5 * (1.0 - r * r);
        self.frame.derivative(C64::new(r, 0.0)) * dr
    }

    /// Point at Fermi coordinates `(t, s)`: distance `s` along the normal at `point(t)`,
    /// positive to the left of the orientation.
    pub fn fermi_point(&self, t: f64, s: f64) -> C64 {
        let w = MobiusMap::real_translation(t).apply(C64::new(0.0, (0.5 * s).tanh()));
        self.frame.apply(w)
    }

    /// Fermi coordinates `(t, s)` of `z`; `|s|` is the distance to the full geodesic.
    pub fn fermi_coordinates(&self, z: C64) -> (f64, f64) {
        let w = self.frame.inverse().apply(z);
        let t = ((1.0 + w).norm() / (1.0 - w).norm()).ln();
        let s = (2.0 * w.im / one_minus_norm_sqr(w)).asinh();
        (t, s)
    }

    /// Distance from `z` to the sub-segment `[start, end]` (clamped to the parameter range).
    pub fn distance_to_segment(&self, z: C64) -> f64 {
        let (t, _) = self.fermi_coordinates(z);
        if t >= self.start && t <= self.end {
            let (_, s) = self.fermi_coordinates(z);
            return s.abs();
        }
        let tc = t.clamp(self.start, self.end);
        distance(z, self.point_c(tc))
    }

    /// The same point set with `g(new 0) = g(old shift)`.
    pub fn reanchored(&self, shift: f64) -> Self {
        HyperbolicGeodesic {
            frame: self.frame.compose(&MobiusMap::real_translation(shift)),
            start: self.start - shift,
            end: self.end - shift,
        }
    }

    /// Image under an isometry.
    pub fn mapped(&self, m: &MobiusMap) -> Self {
        HyperbolicGeodesic {
            frame: m.compose(&self.frame),
            start: self.start,
            end: self.end,
        }
    }

    /// Same point set, opposite orientation.
    pub fn reversed(&self) -> Self {
        HyperbolicGeodesic {
            frame: self.frame.compose(&MobiusMap::rotation(PI)),
            start: -self.end,
            end: -self.start,
        }
    }
}

/// The geodesic through two ends, oriented from `x` to `y`, with unit speed.
///
/// Interior starting points sit at parameter 0; a boundary start puts the
/// interior end (if any) at 0, and two boundary ends anchor at the point
/// closest to the origin.
pub fn geodesic_between(x: impl Into<Endpoint>, y: impl Into<Endpoint>) -> Result<HyperbolicGeodesic> {
    match (x.into(), y.into()) {
        (Endpoint::Interior(p), Endpoint::Interior(q)) => {
            if (p.0 - q.0).norm() < 1e-12 {
                return Err(Error::DegenerateEndpoints);
            }
            let t = MobiusMap::translation_to(p.0);
            let phi = t.inverse().apply(q.0).arg();
            Ok(HyperbolicGeodesic {
                frame: t.compose(&MobiusMap::rotation(phi)),
                start: 0.0,
                end: distance(p.0, q.0),
            })
        }
        (Endpoint::Interior(p), Endpoint::Boundary(d)) => {
            let t = MobiusMap::translation_to(p.0);
            let phi = t.inverse().apply(d.point()).arg();
            Ok(HyperbolicGeodesic {
                frame: t.compose(&MobiusMap::rotation(phi)),
                start: 0.0,
                end: f64::INFINITY,
            })
        }
        (Endpoint::Boundary(d), Endpoint::Interior(p)) => {
            let t = MobiusMap::translation_to(p.0);
            let phi = (-t.inverse().apply(d.point())).arg();
            Ok(HyperbolicGeodesic {
                frame: t.compose(&MobiusMap::rotation(phi)),
                start: f64::NEG_INFINITY,
                end: 0.0,
            })
        }
        (Endpoint::Boundary(a), Endpoint::Boundary(b)) => HyperbolicGeodesic::through_boundary(a, b),
    }
}

/// Estimated asymptotic direction of a sampled path with an uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointEstimate {
    pub direction: BoundaryDirection,
    /// Largest angular drift over the final 10% of samples.
    pub error_bar: f64,
}

/// Reads off the boundary point a path is heading to from its final samples.
pub fn endpoint_estimate(points: &[C64], boundary_eps: f64) -> Result<EndpointEstimate> {
    let last = *points
        .last()
        .ok_or_else(|| Error::InvalidArgument("empty path".into()))?;
    let radius = last.norm();
    if radius < 1.0 - boundary_eps {
        return Err(Error::NotNearBoundary {
            radius,
            required: 1.0 - boundary_eps,
        });
    }
    let angle = last.arg();
    let tail = (points.len() / 10).max(1);
    let error_bar = points[points.len() - tail..]
        .iter()
        .map(|p| wrap_angle(p.arg() - angle).abs())
        .fold(0.0, f64::max);
    Ok(EndpointEstimate {
        direction: BoundaryDirection::new(angle),
        error_bar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(re: f64, im: f64) -> DiscPoint {
        DiscPoint::new(re, im).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(hyperbolic_distance(p(0.0, 0.0), p(0.0, 0.0)), 0.0);
        assert_abs_diff_eq!(hyperbolic_distance(p(0.0, 0.0), p(0.5, 0.0)), 3f64.ln(), epsilon = 1e-14);
        let oracle = 2.0 * (1.3f64 / 0.7).ln();
        assert_abs_diff_eq!(hyperbolic_distance(p(0.3, 0.0), p(-0.3, 0.0)), oracle, epsilon = 1e-13);
        assert_abs_diff_eq!(oracle, 2.0 * hyperbolic_distance(p(0.0, 0.0), p(0.3, 0.0)), epsilon = 1e-13);
    }

    #[test]
    fn rejects_points_on_the_rim() {
        assert!(DiscPoint::new(1.0, 0.0).is_err());
        assert!(DiscPoint::new(0.0, -(1.0 - 1e-13)).is_err());
        assert!(DiscPoint::new(f64::NAN, 0.0).is_err());
        assert!(DiscPoint::new(0.0, 0.999_999).is_ok());
    }

    #[test]
    fn diameter_is_tanh_law() {
        let g = geodesic_between(BoundaryDirection::new(PI), BoundaryDirection::new(0.0)).unwrap();
        for &t in &[-3.0, -0.5, 0.0, 1.0, 4.0] {
            let z = g.point_c(t);
            assert_abs_diff_eq!(z.re, (0.5 * t).tanh(), epsilon = 1e-14);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(hyperbolic_norm(z, g.velocity(t)), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(g.minus_end().angle(), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(g.plus_end().angle(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn segment_between_interior_points() {
        let g = geodesic_between(p(0.0, 0.0), p(0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(g.length(), 3f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!((g.point_c(g.end) - C64::new(0.5, 0.0)).norm(), 0.0, epsilon = 1e-14);

        let g = geodesic_between(p(0.0, 0.2), p(0.0, -0.2)).unwrap();
        for k in 0..=10 {
            let z = g.point_c(g.length() * k as f64 / 10.0);
            assert_abs_diff_eq!(z.re, 0.0, epsilon = 1e-14);
        }
        assert_eq!(geodesic_between(p(0.1, 0.1), p(0.1, 0.1)), Err(Error::DegenerateEndpoints));
        assert_eq!(
            geodesic_between(BoundaryDirection::new(1.0), BoundaryDirection::new(1.0)),
            Err(Error::DegenerateEndpoints)
        );
    }

    #[test]
    fn boundary_geodesics_meet_the_circle_orthogonally() {
        for &(a, b) in &[(0.3, 2.0), (5.0, 0.1), (1.0, 1.0 + PI), (2.0, 2.05)] {
            let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(a), BoundaryDirection::new(b)).unwrap();
            assert!(g.minus_end().separation(BoundaryDirection::new(a)) < 1e-10);
            assert!(g.plus_end().separation(BoundaryDirection::new(b)) < 1e-10);
            for &t in &[-18.0, 18.0] {
                let z = g.point_c(t);
                let v = g.velocity(t);
                // tangent at the rim is radial
                let radial = (v * z.conj()).im.abs() / (v.norm() * z.norm());
                assert!(radial < 1e-6, "tangent not radial: {radial}");
            }
        }
    }

    #[test]
    fn fermi_coordinates_round_trip() {
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(0.4), BoundaryDirection::new(3.0)).unwrap();
        for &(t, s) in &[(0.0, 0.0), (1.5, -0.7), (-4.0, 2.0), (8.0, 0.3)] {
            let (t2, s2) = g.fermi_coordinates(g.fermi_point(t, s));
            assert_abs_diff_eq!(t, t2, epsilon = 1e-8);
            assert_abs_diff_eq!(s, s2, epsilon = 1e-8);
        }
        // left of the real diameter oriented towards +1 is the upper half
        let d = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(PI), BoundaryDirection::new(0.0)).unwrap();
        assert!(d.fermi_point(0.0, 0.5).im > 0.0);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&MobiusMap::IDENTITY), Classification::Identity);
        assert_eq!(classify(&MobiusMap::rotation(PI / 4.0)), Classification::Elliptic);

        let c = 1.0 + 2f64.sqrt();
        let m = MobiusMap::new(C64::new(c, 0.0), C64::new((c * c - 1.0).sqrt(), 0.0)).unwrap();
        match classify(&m) {
            Classification::Hyperbolic { axis, translation_length } => {
                assert_abs_diff_eq!(translation_length, 2.0 * c.acosh(), epsilon = 1e-12);
                assert_abs_diff_eq!(translation_length, 3.0571, epsilon = 1e-4);
                assert!(axis.plus_end().separation(BoundaryDirection::new(0.0)) < 1e-12);
                assert!(axis.minus_end().separation(BoundaryDirection::new(PI)) < 1e-12);
                // both ends are fixed points
                for e in [1.0, -1.0] {
                    assert_abs_diff_eq!((m.apply(C64::new(e, 0.0)) - e).norm(), 0.0, epsilon = 1e-12);
                }
            }
            other => panic!("expected hyperbolic, got {other:?}"),
        }
    }

    #[test]
    fn endpoint_estimate_examples() {
        let g = geodesic_between(DiscPoint::ORIGIN, BoundaryDirection::new(0.0)).unwrap();
        let sample = |horizon: f64| -> Vec<C64> { (0..=200).map(|k| g.point_c(horizon * k as f64 / 200.0)).collect() };
        let est = endpoint_estimate(&sample(15.0), BOUNDARY_EPS).unwrap();
        assert!(est.direction.separation(BoundaryDirection::new(0.0)) < 1e-6);
        assert!(matches!(endpoint_estimate(&sample(1.0), BOUNDARY_EPS), Err(Error::NotNearBoundary { .. })));

        let r = MobiusMap::rotation(PI / 2.0);
        let rotated: Vec<C64> = sample(15.0).into_iter().map(|z| r.apply(z)).collect();
        let est = endpoint_estimate(&rotated, BOUNDARY_EPS).unwrap();
        assert_abs_diff_eq!(est.direction.angle(), PI / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn endpoint_estimate_is_stable_under_horizon_doubling() {
        let g = HyperbolicGeodesic::through_boundary(BoundaryDirection::new(2.0), BoundaryDirection::new(4.5)).unwrap();
        let sample = |h: f64| -> Vec<C64> { (0..=400).map(|k| g.point_c(h * k as f64 / 400.0)).collect() };
        let a = endpoint_estimate(&sample(10.0), BOUNDARY_EPS).unwrap();
        let b = endpoint_estimate(&sample(20.0), BOUNDARY_EPS).unwrap();
        assert!(a.direction.separation(b.direction) <= a.error_bar);
    }

    #[test]
    fn conjugation_preserves_translation_length() {
        let c = 1.0 + 2f64.sqrt();
        let m = MobiusMap::new(C64::new(c, 0.0), C64::new((c * c - 1.0).sqrt(), 0.0)).unwrap();
        let h = MobiusMap::translation_to(C64::new(0.3, -0.4)).compose(&MobiusMap::rotation(0.7));
        let conj = h.compose(&m).compose(&h.inverse());
        let len = |m: &MobiusMap| match classify(m) {
            Classification::Hyperbolic { translation_length, .. } => translation_length,
            _ => panic!("not hyperbolic"),
        };
        assert_abs_diff_eq!(len(&m), len(&conj), epsilon = 1e-9);
    }
}
