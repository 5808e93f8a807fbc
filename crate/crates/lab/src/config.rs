//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must belong
//! to the common table or to the table of the experiment kind; anything else
//! is rejected with its line number.

use std::fmt;
use std::path::PathBuf;

use hyperlab_core::group::FuchsianGroup;
use hyperlab_core::metric::parse_metric;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    EstimateD,
    Busemann,
    Uniqueness,
    Width,
    Lamination,
    Periodic,
    Recurrent,
    Simple,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::EstimateD,
        Kind::Busemann,
        Kind::Uniqueness,
        Kind::Width,
        Kind::Lamination,
        Kind::Periodic,
        Kind::Recurrent,
        Kind::Simple,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::EstimateD => "estimate-d",
            Kind::Busemann => "busemann",
            Kind::Uniqueness => "uniqueness",
            Kind::Width => "width",
            Kind::Lamination => "lamination",
            Kind::Periodic => "periodic",
            Kind::Recurrent => "recurrent",
            Kind::Simple => "simple",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }

    fn keys(self) -> &'static [Key] {
        match self {
            Kind::EstimateD => ESTIMATE_D,
            Kind::Busemann => BUSEMANN,
            Kind::Uniqueness => UNIQUENESS,
            Kind::Width => WIDTH,
            Kind::Lamination => LAMINATION,
            Kind::Periodic => PERIODIC,
            Kind::Recurrent => RECURRENT,
            Kind::Simple => SIMPLE,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Float,
    Positive,
    Count,
    Seed,
    Bool,
    Text,
    Metric,
    Word,
    Direction,
    Point,
    FloatList,
    /// `auto` or a float.
    AutoFloat,
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    ty: Ty,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn key(name: &'static str, ty: Ty, default: &'static str, doc: &'static str) -> Key {
    Key { name, ty, default, doc }
}

const COMMON: &[Key] = &[
    key("kind", Ty::Text, "", "experiment kind; must match the command line if given"),
    key("metric", Ty::Metric, "hyperbolic", "hyperbolic, randers:<eps> or bump:<a>:<rho>"),
    key("seed", Ty::Seed, "0", "master seed of every random stream"),
    key("out", Ty::Text, "hyperlab-out", "output directory"),
    key("d_est", Ty::AutoFloat, "auto", "Morse constant used by the run, or auto to estimate it"),
    key("d_samples", Ty::Count, "24", "pairs used when d_est = auto"),
    key("d_separation", Ty::Positive, "12", "largest pair separation when d_est = auto"),
    key("c_f_samples", Ty::Count, "200", "tangent samples for the equivalence constant"),
    key("view_center", Ty::Point, "0,0", "centre of the figure window"),
    key("view_radius", Ty::Float, "1.05", "half width of the figure window"),
];

const ESTIMATE_D: &[Key] = &[
    key("n", Ty::Count, "100", "random pairs"),
    key("max_separation", Ty::Positive, "12", "largest hyperbolic distance of a pair"),
    key("doubled_n", Ty::Count, "0", "pairs rerun at twice the separation (0 = skip)"),
    key("expect_max", Ty::AutoFloat, "auto", "assert D_est <= value; auto = 1e-5 for hyperbolic and randers"),
];

const BUSEMANN: &[Key] = &[
    key("xi", Ty::Direction, "0.7", "direction: angle in radians, fixed:<word> or random"),
    key("x0", Ty::Point, "0,0", "base point"),
    key("radius", Ty::Positive, "0.6", "hyperbolic radius of the evaluation region"),
    key("spacing", Ty::Positive, "0.25", "hyperbolic spacing of the cloud"),
    key("tol", Ty::Positive, "1e-4", "Cauchy tolerance of the horofunction schedule"),
    key("schedule", Ty::FloatList, "2,4,8,12,16", "anchor distances"),
    key("rays", Ty::Count, "5", "calibrated rays from random points of the region"),
    key("ray_time", Ty::Positive, "10", "length of each calibrated ray"),
    key("domination_pairs", Ty::Count, "20", "cloud pairs for the domination check"),
];

const UNIQUENESS: &[Key] = &[
    key("xi", Ty::Direction, "0.7", "direction: angle in radians, fixed:<word> or random"),
    key("x0", Ty::Point, "0,0", "base point"),
    key("radius", Ty::Positive, "0.5", "hyperbolic radius of the evaluation region"),
    key("spacing", Ty::Positive, "0.25", "hyperbolic spacing of the cloud"),
    key("field_tol", Ty::Positive, "1e-4", "Cauchy tolerance of each field"),
    key("tol", Ty::Positive, "1e-3", "allowed deviation between fields"),
    key("second_back", Ty::Float, "2.0", "backward end of the second background geodesic, as an angle from xi"),
];

const WIDTH: &[Key] = &[
    key("xi", Ty::Direction, "fixed:a", "direction: angle in radians, fixed:<word> or random"),
    key("fan", Ty::Count, "8", "background geodesics in the fan"),
    key("n_max", Ty::Count, "16", "deepest construction horizon"),
    key("t_tail", Ty::AutoFloat, "auto", "start of the tail window; auto = horizon / 4"),
    key("change_tol", Ty::Positive, "1e-3", "allowed change of a pair between levels"),
    key("min_offset", Ty::Positive, "0.25", "smallest anchor offset"),
];

const LAMINATION: &[Key] = &[
    key("xi", Ty::Direction, "random", "direction: angle in radians, fixed:<word> or random"),
    key("fan", Ty::Count, "8", "background geodesics in the fan"),
    key("n_max", Ty::Count, "16", "deepest construction horizon"),
    key("change_tol", Ty::Positive, "1e-3", "allowed change of a pair between levels"),
    key("coincidence_tol", Ty::Positive, "1e-3", "paths closer than this are not resolved"),
    key("window", Ty::Count, "6", "samples inspected on each side of an intersection"),
];

const PERIODIC: &[Key] = &[
    key("word", Ty::Word, "a", "hyperbolic group element"),
    key("strip_resolution", Ty::Count, "9", "multi-starts across the strip"),
    key("node_spacing", Ty::Positive, "0.5", "node spacing of the periodic polygon"),
    key("steps_per_unit", Ty::Positive, "32", "integrator steps per unit time"),
    key("heteroclinic_periods", Ty::Count, "3", "periods between a heteroclinic anchor and the middle"),
];

const RECURRENT: &[Key] = &[
    key("start", Ty::Point, "0,0", "starting point"),
    key("theta", Ty::Float, "1.3012902845685", "starting direction"),
    key("horizon", Ty::Positive, "500", "flow time"),
    key("epsilon", Ty::Float, "1e-2", "return tolerance in position and angle"),
    key("dt", Ty::Positive, "0.05", "sampling step"),
    key("widths", Ty::Bool, "false", "measure the widths of the geodesic and its direction"),
    key("fan", Ty::Count, "8", "background geodesics in the fan"),
    key("n_max", Ty::Count, "16", "deepest construction horizon"),
];

const SIMPLE: &[Key] = &[
    key("start", Ty::Point, "0,0", "starting point"),
    key("theta", Ty::Float, "0.0", "starting direction"),
    key("horizon", Ty::Positive, "50", "flow time of the simplicity scan"),
    key("dt", Ty::Positive, "0.05", "sampling step"),
    key("fan", Ty::Count, "8", "background geodesics in the fan"),
    key("n_max", Ty::Count, "16", "deepest construction horizon"),
];

/// Every key accepted by `kind`, common keys first.
pub fn keys_for(kind: Kind) -> impl Iterator<Item = &'static Key> {
    COMMON.iter().chain(kind.keys())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    Angle(f64),
    Fixed(String),
    Random,
}

#[derive(Debug, Clone)]
struct Entry {
    key: &'static Key,
    value: String,
    line: Option<usize>,
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    entries: Vec<Entry>,
}

fn parse_point(s: &str) -> Option<(f64, f64)> {
    let (a, b) = s.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn check(ty: Ty, value: &str, group: &FuchsianGroup) -> Result<(), String> {
    let float = |s: &str| s.parse::<f64>().map_err(|_| format!("expected a number, got {s:?}"));
    match ty {
        Ty::Float => float(value).and_then(|x| if x.is_finite() { Ok(()) } else { Err("number must be finite".into()) }),
        Ty::Positive => float(value).and_then(|x| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(format!("expected a positive number, got {value}"))
            }
        }),
        Ty::Count | Ty::Seed => value
            .parse::<u64>()
            .map(|_| ())
            .map_err(|_| format!("expected a nonnegative integer, got {value:?}")),
        Ty::Bool => match value {
            "true" | "false" => Ok(()),
            _ => Err(format!("expected true or false, got {value:?}")),
        },
        Ty::Text => Ok(()),
        Ty::Metric => parse_metric(value, group).map(|_| ()).map_err(|e| e.to_string()),
        Ty::Word => group.parse_word(value).map(|_| ()).map_err(|e| e.to_string()),
        Ty::Direction => match value {
            "random" => Ok(()),
            v if v.starts_with("fixed:") => group.parse_word(&v[6..]).map(|_| ()).map_err(|e| e.to_string()),
            v => float(v).map(|_| ()),
        },
        Ty::Point => match parse_point(value) {
            Some((a, b)) if a * a + b * b < 1.0 => Ok(()),
            Some(_) => Err(format!("point {value} is not inside the unit disc")),
            None => Err(format!("expected a point re,im, got {value:?}")),
        },
        Ty::FloatList => {
            let items: Vec<&str> = value.split(',').map(str::trim).collect();
            if items.iter().all(|s| s.parse::<f64>().is_ok_and(|x| x > 0.0)) {
                Ok(())
            } else {
                Err(format!("expected a comma separated list of positive numbers, got {value:?}"))
            }
        }
        Ty::AutoFloat => match value {
            "auto" => Ok(()),
            v => float(v).map(|_| ()),
        },
    }
}

impl ExperimentConfig {
    /// Parses `text` for `kind`; `group` validates metrics and words.
    pub fn parse(kind: Kind, text: &str, group: &FuchsianGroup) -> Result<Self, ConfigError> {
        let mut given: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = Some(i + 1);
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (k, v) = trimmed
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected key = value, got {trimmed:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let spec = keys_for(kind)
                .find(|s| s.name == k)
                .ok_or_else(|| err(line, format!("unknown key {k:?} for kind {kind}")))?;
            if let Some(prev) = given.iter().find(|e| e.key.name == k) {
                return Err(err(line, format!("duplicate key {k:?} (first set on line {})", prev.line.unwrap_or(0))));
            }
            if k == "kind" && v != kind.name() {
                return Err(err(line, format!("config is for kind {v:?} but {kind} was requested")));
            }
            check(spec.ty, v, group).map_err(|m| err(line, format!("{k}: {m}")))?;
            given.push(Entry {
                key: spec,
                value: v.to_string(),
                line,
            });
        }
        let entries = keys_for(kind)
            .map(|spec| {
                given.iter().find(|e| e.key.name == spec.name).cloned().unwrap_or(Entry {
                    key: spec,
                    value: if spec.name == "kind" { kind.name().to_string() } else { spec.default.to_string() },
                    line: None,
                })
            })
            .collect();
        Ok(ExperimentConfig { kind, entries })
    }

    /// Overrides a value after parsing (command-line flags).
    pub fn set(&mut self, name: &str, value: &str, group: &FuchsianGroup) -> Result<(), ConfigError> {
        let entry = self
            .entries
            .iter_mut()
            .find(|e| e.key.name == name)
            .ok_or_else(|| err(None, format!("unknown key {name:?}")))?;
        check(entry.key.ty, value, group).map_err(|m| err(None, format!("{name}: {m}")))?;
        entry.value = value.to_string();
        entry.line = None;
        Ok(())
    }

    fn raw(&self, name: &str) -> &str {
        &self
            .entries
            .iter()
            .find(|e| e.key.name == name)
            .unwrap_or_else(|| panic!("no key {name} for kind {}", self.kind))
            .value
    }

    pub fn text(&self, name: &str) -> &str {
        self.raw(name)
    }

    pub fn float(&self, name: &str) -> f64 {
        self.raw(name).parse().expect("validated number")
    }

    pub fn count(&self, name: &str) -> usize {
        self.raw(name).parse().expect("validated count")
    }

    pub fn seed(&self) -> u64 {
        self.raw("seed").parse().expect("validated seed")
    }

    pub fn flag(&self, name: &str) -> bool {
        self.raw(name) == "true"
    }

    pub fn auto_float(&self, name: &str) -> Option<f64> {
        match self.raw(name) {
            "auto" => None,
            v => Some(v.parse().expect("validated number")),
        }
    }

    pub fn point(&self, name: &str) -> (f64, f64) {
        parse_point(self.raw(name)).expect("validated point")
    }

    pub fn floats(&self, name: &str) -> Vec<f64> {
        self.raw(name).split(',').map(|s| s.trim().parse().expect("validated list")).collect()
    }

    pub fn direction(&self, name: &str) -> Direction {
        match self.raw(name) {
            "random" => Direction::Random,
            v if v.starts_with("fixed:") => Direction::Fixed(v[6..].to_string()),
            v => Direction::Angle(v.parse().expect("validated angle")),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out"))
    }

    /// Every key with its resolved value, in table order.
    pub fn resolved(&self) -> Vec<(&'static str, String)> {
        self.entries.iter().map(|e| (e.key.name, e.value.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hyperlab_core::group::genus2_group;

    #[test]
    fn defaults_fill_every_key() {
        let g = genus2_group();
        let c = ExperimentConfig::parse(Kind::Width, "", &g).unwrap();
        assert_eq!(c.resolved().len(), COMMON.len() + WIDTH.len());
        assert_eq!(c.count("fan"), 8);
        assert_eq!(c.direction("xi"), Direction::Fixed("a".into()));
        assert_eq!(c.text("kind"), "width");
    }

    #[test]
    fn comments_and_overrides() {
        let g = genus2_group();
        let text = "# comment\n\nmetric = bump:0.5:0.8\n fan=12 \nxi = 0.25\n";
        let mut c = ExperimentConfig::parse(Kind::Width, text, &g).unwrap();
        assert_eq!(c.text("metric"), "bump:0.5:0.8");
        assert_eq!(c.count("fan"), 12);
        assert_eq!(c.direction("xi"), Direction::Angle(0.25));
        c.set("seed", "42", &g).unwrap();
        assert_eq!(c.seed(), 42);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line() {
        let g = genus2_group();
        let e = ExperimentConfig::parse(Kind::Periodic, "word = a\n\nfan = 8\n", &g).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("fan"));
    }

    #[test]
    fn malformed_values_are_rejected() {
        let g = genus2_group();
        for (text, line) in [
            ("metric = bump:x\n", 1),
            ("seed = 1\nseed = 2\n", 2),
            ("\nx0 = 2,0\n", 2),
            ("just words\n", 1),
            ("kind = width\n", 1),
            ("tol = -1\n", 1),
        ] {
            let e = ExperimentConfig::parse(Kind::Busemann, text, &g).unwrap_err();
            assert_eq!(e.line, Some(line), "{text:?}: {e}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in Kind::ALL {
            assert_eq!(Kind::parse(k.name()), Some(k));
        }
        assert_eq!(Kind::parse("nope"), None);
    }
}
