//! Deterministic SVG 1.1 drawings of paths in the disc.

use std::fmt::Write;

use hyperlab_core::disc::C64;

const SIZE: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Frame,
    Background,
    Minimizer,
    /// Right bounding geodesic `c0`.
    Right,
    /// Left bounding geodesic `c1`.
    Left,
    Ray,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Frame => "frame",
            Role::Background => "background",
            Role::Minimizer => "minimizer",
            Role::Right => "right",
            Role::Left => "left",
            Role::Ray => "ray",
        }
    }

    fn style(self) -> &'static str {
        match self {
            Role::Frame => r##"stroke="#bbbbbb" stroke-width="0.8""##,
            Role::Background => r##"stroke="#999999" stroke-width="1""##,
            Role::Minimizer => r##"stroke="#000000" stroke-width="1.5""##,
            Role::Right => r##"stroke="#c0392b" stroke-width="1.5""##,
            Role::Left => r##"stroke="#2471a3" stroke-width="1.5""##,
            Role::Ray => r##"stroke="#000000" stroke-width="1" stroke-dasharray="4 2""##,
        }
    }
}

/// Square window of the drawing in disc coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct View {
    pub center: C64,
    pub half_width: f64,
}

impl Default for View {
    fn default() -> Self {
        View {
            center: C64::new(0.0, 0.0),
            half_width: 1.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SvgError {
    NoPaths,
    EmptyRegion,
}

impl std::fmt::Display for SvgError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SvgError::NoPaths => f.write_str("nothing to draw"),
            SvgError::EmptyRegion => f.write_str("figure window is empty"),
        }
    }
}

impl std::error::Error for SvgError {}

/// Draws the unit circle and `paths`, lower roles first, in the window `view`.
pub fn render_svg(paths: &[(Role, Vec<C64>)], view: View) -> Result<String, SvgError> {
    if !(view.half_width > 0.0 && view.half_width.is_finite()) {
        return Err(SvgError::EmptyRegion);
    }
    if paths.iter().all(|p| p.1.len() < 2) {
        return Err(SvgError::NoPaths);
    }
    let scale = 0.5 * SIZE / view.half_width;
    let px = |z: C64| ((z.re - view.center.re) * scale + 0.5 * SIZE, (view.center.im - z.im) * scale + 0.5 * SIZE);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r##"<rect width="{SIZE}" height="{SIZE}" fill="#ffffff"/>"##);
    let (cx, cy) = px(C64::new(0.0, 0.0));
    let _ = writeln!(
        out,
        r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#000000" stroke-width="1"/>"##,
        scale
    );
    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by_key(|&i| (paths[i].0, i));
    for i in order {
        let (role, pts) = &paths[i];
        if pts.len() < 2 {
            continue;
        }
        let mut coords = String::new();
        for (k, z) in pts.iter().enumerate() {
            let (x, y) = px(*z);
            if k > 0 {
                coords.push(' ');
            }
            let _ = write!(coords, "{x:.2},{y:.2}");
        }
        let _ = writeln!(
            out,
            r#"<polyline class="{}" fill="none" {} points="{coords}"/>"#,
            role.as_str(),
            role.style()
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
