//! Flat `key = value` documents. `#` starts a comment, lists are
//! comma-separated, and every key is optional except `study`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::dpg::{BoundaryLoad, GaussianBeam, ProblemConfig};
use crate::driver::{StudyConfig, StudyKind};
use crate::mg::{BottomTreatment, CoarseOpMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("value of `{0}` out of range")]
    RangeError(String),
    #[error("required key `{0}` missing")]
    RequiredMissing(String),
    #[error("custom boundary data cannot be written to a config file")]
    NotSerializable,
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<StudyConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
    parse_config_str(&text)
}

#[derive(Default)]
struct LoadSpec {
    kind: Option<String>,
    direction: Option<[f64; 2]>,
    waist: Option<f64>,
    angle: Option<f64>,
    focus: Option<[f64; 2]>,
}

fn num(line: usize, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError::ParseError { line, msg: format!("expected a number, got `{v}`") })
}

fn int(line: usize, v: &str) -> Result<usize, ConfigError> {
    v.parse::<usize>()
        .map_err(|_| ConfigError::ParseError { line, msg: format!("expected a non-negative integer, got `{v}`") })
}

fn boolean(line: usize, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::ParseError { line, msg: format!("expected true or false, got `{v}`") }),
    }
}

fn list(line: usize, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| num(line, s.trim())).collect()
}

fn pair(line: usize, v: &str) -> Result<[f64; 2], ConfigError> {
    match list(line, v)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(ConfigError::ParseError { line, msg: "expected two numbers".into() }),
    }
}

fn word<'a>(line: usize, v: &str, options: &[&'a str]) -> Result<&'a str, ConfigError> {
    options
        .iter()
        .find(|o| **o == v)
        .copied()
        .ok_or_else(|| ConfigError::ParseError { line, msg: format!("expected one of {options:?}, got `{v}`") })
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::RangeError(key.into()))
    }
}

pub fn parse_config_str(text: &str) -> Result<StudyConfig, ConfigError> {
    let mut cfg = StudyConfig::new(StudyKind::UniformH, ProblemConfig::new(2.0 * std::f64::consts::PI));
    let mut kind = None;
    let mut load = LoadSpec::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| ConfigError::ParseError { line, msg: "expected `key = value`".into() })?;
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::ParseError { line, msg: format!("duplicate key `{key}`") });
        }
        match key {
            "study" => {
                kind = Some(match word(line, value, &["uniform_h", "uniform_p", "hp_adaptive"])? {
                    "uniform_h" => StudyKind::UniformH,
                    "uniform_p" => StudyKind::UniformP,
                    _ => StudyKind::HpAdaptive,
                })
            }
            "omega" => cfg.problem.omega = positive(key, num(line, value)?)?,
            "omegas" => {
                cfg.omegas = list(line, value)?;
                if cfg.omegas.iter().any(|w| *w <= 0.0) {
                    return Err(ConfigError::RangeError(key.into()));
                }
            }
            "impedance" => cfg.problem.impedance = positive(key, num(line, value)?)?,
            "alpha" => cfg.problem.alpha = positive(key, num(line, value)?)?,
            "delta_p" => {
                cfg.problem.delta_p = int(line, value)?;
                if cfg.problem.delta_p < 1 {
                    return Err(ConfigError::RangeError(key.into()));
                }
            }
            "wavespeed" => cfg.problem.wavespeed = positive(key, num(line, value)?)?,
            "load" => load.kind = Some(word(line, value, &["none", "plane_wave", "gaussian_beam"])?.to_string()),
            "direction" => {
                let d = pair(line, value)?;
                if ((d[0] * d[0] + d[1] * d[1]).sqrt() - 1.0).abs() > 1e-9 {
                    return Err(ConfigError::RangeError(key.into()));
                }
                load.direction = Some(d);
            }
            "beam_waist" => load.waist = Some(positive(key, num(line, value)?)?),
            "beam_angle" => load.angle = Some(num(line, value)?),
            "beam_focus" => load.focus = Some(pair(line, value)?),
            "grids" => {
                cfg.grids = int(line, value)?;
                if cfg.grids < 1 {
                    return Err(ConfigError::RangeError(key.into()));
                }
            }
            "theta" => {
                cfg.theta = num(line, value)?;
                if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
                    return Err(ConfigError::RangeError(key.into()));
                }
            }
            "marking_exponent" => cfg.marking_exponent = positive(key, num(line, value)?)?,
            "pre_smooth" => cfg.cycle.pre_smooth = int(line, value)?,
            "post_smooth" => cfg.cycle.post_smooth = int(line, value)?,
            "damping" => {
                let w = num(line, value)?;
                if !(w > 0.0 && w <= 1.0) {
                    return Err(ConfigError::RangeError(key.into()));
                }
                cfg.cycle.damping = Some(w);
            }
            "bottom" => {
                cfg.cycle.bottom = match word(line, value, &["smooth", "exact"])? {
                    "exact" => BottomTreatment::ExactSolve,
                    _ => BottomTreatment::None,
                }
            }
            "mode" => {
                cfg.coarse_op_mode = match word(line, value, &["restrict", "store"])? {
                    "store" => CoarseOpMode::Store,
                    _ => CoarseOpMode::Restrict,
                }
            }
            "tol" => {
                cfg.tol = num(line, value)?;
                if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
                    return Err(ConfigError::RangeError(key.into()));
                }
            }
            "max_iter" => {
                cfg.max_iter = int(line, value)?;
                if cfg.max_iter == 0 {
                    return Err(ConfigError::RangeError(key.into()));
                }
            }
            "p0" => cfg.p0 = int(line, value)?,
            "p_max" => cfg.p_max = int(line, value)?,
            "warm_start" => cfg.warm_start = boolean(line, value)?,
            "check_identity" => cfg.check_identity = boolean(line, value)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
    }
    cfg.kind = kind.ok_or_else(|| ConfigError::RequiredMissing("study".into()))?;
    if cfg.p0 < 2 {
        return Err(ConfigError::RangeError("p0".into()));
    }
    if cfg.p_max < cfg.p0 {
        return Err(ConfigError::RangeError("p_max".into()));
    }
    cfg.problem.load = match load.kind.as_deref() {
        None | Some("none") => BoundaryLoad::None,
        Some("plane_wave") => {
            BoundaryLoad::PlaneWave { direction: load.direction.unwrap_or([1.0, 0.0]) }
        }
        _ => {
            let d = GaussianBeam::default();
            BoundaryLoad::GaussianBeam(GaussianBeam {
                waist: load.waist.unwrap_or(d.waist),
                angle_deg: load.angle.unwrap_or(d.angle_deg),
                focus: load.focus.unwrap_or(d.focus),
            })
        }
    };
    Ok(cfg)
}

/// Writes every key, so parsing the result gives back `cfg`.
pub fn serialize_config(cfg: &StudyConfig) -> Result<String, ConfigError> {
    let mut s = String::new();
    let pr = &cfg.problem;
    let fmt_list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "study = {}", cfg.kind.name());
    let _ = writeln!(s, "omega = {:?}", pr.omega);
    if !cfg.omegas.is_empty() {
        let _ = writeln!(s, "omegas = {}", fmt_list(&cfg.omegas));
    }
    let _ = writeln!(s, "impedance = {:?}", pr.impedance);
    let _ = writeln!(s, "alpha = {:?}", pr.alpha);
    let _ = writeln!(s, "delta_p = {}", pr.delta_p);
    let _ = writeln!(s, "wavespeed = {:?}", pr.wavespeed);
    match &pr.load {
        BoundaryLoad::None => {
            let _ = writeln!(s, "load = none");
        }
        BoundaryLoad::PlaneWave { direction } => {
            let _ = writeln!(s, "load = plane_wave");
            let _ = writeln!(s, "direction = {}", fmt_list(direction));
        }
        BoundaryLoad::GaussianBeam(b) => {
            let _ = writeln!(s, "load = gaussian_beam");
            let _ = writeln!(s, "beam_waist = {:?}", b.waist);
            let _ = writeln!(s, "beam_angle = {:?}", b.angle_deg);
            let _ = writeln!(s, "beam_focus = {}", fmt_list(&b.focus));
        }
        BoundaryLoad::Custom(_) => return Err(ConfigError::NotSerializable),
    }
    let _ = writeln!(s, "grids = {}", cfg.grids);
    let _ = writeln!(s, "theta = {:?}", cfg.theta);
    let _ = writeln!(s, "marking_exponent = {:?}", cfg.marking_exponent);
    let _ = writeln!(s, "pre_smooth = {}", cfg.cycle.pre_smooth);
    let _ = writeln!(s, "post_smooth = {}", cfg.cycle.post_smooth);
    if let Some(w) = cfg.cycle.damping {
        let _ = writeln!(s, "damping = {w:?}");
    }
    let bottom = match cfg.cycle.bottom {
        BottomTreatment::None => "smooth",
        BottomTreatment::ExactSolve => "exact",
    };
    let _ = writeln!(s, "bottom = {bottom}");
    let mode = match cfg.coarse_op_mode {
        CoarseOpMode::Restrict => "restrict",
        CoarseOpMode::Store => "store",
    };
    let _ = writeln!(s, "mode = {mode}");
    let _ = writeln!(s, "tol = {:?}", cfg.tol);
    let _ = writeln!(s, "max_iter = {}", cfg.max_iter);
    let _ = writeln!(s, "p0 = {}", cfg.p0);
    let _ = writeln!(s, "p_max = {}", cfg.p_max);
    let _ = writeln!(s, "warm_start = {}", cfg.warm_start);
    let _ = writeln!(s, "check_identity = {}", cfg.check_identity);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_needs_study() {
        assert_eq!(parse_config_str("").unwrap_err(), ConfigError::RequiredMissing("study".into()));
        assert_eq!(parse_config_str("# nothing\n\n").unwrap_err(), ConfigError::RequiredMissing("study".into()));
    }

    #[test]
    fn defaults() {
        let c = parse_config_str("study = uniform_h").unwrap();
        assert_eq!(c.tol, 1e-7);
        assert_eq!(c.problem.alpha, 1.0);
        assert_eq!(c.problem.delta_p, 1);
        assert_eq!(c.theta, 0.5);
        assert_eq!(c.problem.impedance, 1.0);
        assert_eq!(c.p0, 2);
        assert!(!c.warm_start);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_config_str("study = uniform_h\ntol = 2.0").unwrap_err(), ConfigError::RangeError("tol".into()));
        assert_eq!(parse_config_str("study = uniform_h\nfoo = 1").unwrap_err(), ConfigError::UnknownKey("foo".into()));
        assert!(matches!(parse_config_str("study = uniform_h\nomega 3"), Err(ConfigError::ParseError { line: 2, .. })));
        assert!(matches!(parse_config_str("grids = x\nstudy = uniform_h"), Err(ConfigError::ParseError { line: 1, .. })));
        assert_eq!(
            parse_config_str("study = uniform_p\np0 = 4\np_max = 3").unwrap_err(),
            ConfigError::RangeError("p_max".into())
        );
    }

    #[test]
    fn round_trip() {
        let text = "study = uniform_h  # comment\nomega = 25.132741228718345\nload = plane_wave\ndirection = 0.6, 0.8\n\
                    grids = 5\nmode = store\npre_smooth = 2\npost_smooth = 3\ndamping = 0.25\ncheck_identity = true\n";
        let a = parse_config_str(text).unwrap();
        let s = serialize_config(&a).unwrap();
        let b = parse_config_str(&s).unwrap();
        assert_eq!(s, serialize_config(&b).unwrap());
        assert_eq!(b.grids, 5);
        assert_eq!(b.coarse_op_mode, CoarseOpMode::Store);
        assert_eq!(b.cycle.damping, Some(0.25));
        assert_eq!(b.problem.omega, 25.132741228718345);
    }

    #[test]
    fn shipped_example_round_trips() {
        let text = include_str!("../../../../configs/h_study.cfg");
        let a = parse_config_str(text).unwrap();
        let s = serialize_config(&a).unwrap();
        assert_eq!(s, serialize_config(&parse_config_str(&s).unwrap()).unwrap());
        assert_eq!(a.grids, 5);
        assert_eq!(a.kind, StudyKind::UniformH);
    }

    #[test]
    fn beam_keys() {
        let c = parse_config_str("study = hp_adaptive\nload = gaussian_beam\nbeam_waist = 0.05\nomegas = 1, 2.5").unwrap();
        match c.problem.load {
            BoundaryLoad::GaussianBeam(b) => {
                assert_eq!(b.waist, 0.05);
                assert_eq!(b.angle_deg, 45.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.omegas, vec![1.0, 2.5]);
    }
}
