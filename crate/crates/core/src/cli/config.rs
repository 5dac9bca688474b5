//! Flag/config-file merging and the textual forms of systems and points.

use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::averaging::{ScheduleParams, DEFAULT_N0, DEFAULT_RATIO, DEFAULT_WINDOW_FRACTION};
use crate::error::{Error, Result};
use crate::systems::{BlockGrowth, PointRef, SymbolSource, SystemSpec, PHI, SQRT2_FRAC};

pub const SEED_ENV: &str = "ERGODIC_SEED";

/// Settings shared by every subcommand. The same keys are accepted in the
/// JSON config file; values given as flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    /// System: rotation:phi|sqrt2|<alpha>, doubling, shift:constant:<s>,
    /// shift:periodic:<word>, shift:sturmian:<alpha>[:<x0>],
    /// shift:blocks:<base>, or a JSON object
    #[arg(long)]
    #[serde(deserialize_with = "text")]
    pub system: Option<String>,
    /// Start point: a coordinate on circles, an offset on shifts, `a;b` on
    /// products, or a JSON point
    #[arg(long, allow_hyphen_values = true)]
    #[serde(deserialize_with = "text")]
    pub x: Option<String>,
    /// Second point for pair experiments
    #[arg(long, allow_hyphen_values = true)]
    #[serde(deserialize_with = "text")]
    pub y: Option<String>,
    /// Horizon
    #[arg(long)]
    pub n: Option<usize>,
    /// cesaro, log, both, weyl-cesaro or weyl-log
    #[arg(long)]
    pub scheme: Option<String>,
    /// RNG seed; unset falls back to the config file, ERGODIC_SEED, then 0
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// First schedule point
    #[arg(long)]
    pub n0: Option<usize>,
    /// Schedule growth ratio
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Trailing fraction of the schedule used for tail estimates
    #[arg(long)]
    pub window_fraction: Option<f64>,
    /// JSON config file
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// CSV output path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report path
    #[arg(long)]
    pub json: Option<PathBuf>,

    /// Clustering threshold for limit-set estimates
    #[arg(long)]
    pub cluster_tol: Option<f64>,
    /// Number of test-family probes
    #[arg(long)]
    pub depth: Option<usize>,
    /// ε grid 2^-1 .. 2^-k
    #[arg(long)]
    pub eps_count: Option<usize>,
    /// Random pairs per δ level
    #[arg(long)]
    pub samples: Option<usize>,
    /// ball or natural
    #[arg(long)]
    pub sampler: Option<String>,
    /// Ball radius for sensitivity sampling
    #[arg(long)]
    pub radius: Option<f64>,
    /// Pairs for sensitivity estimates
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Quantile of per-pair tail infima used as the sensitivity estimate
    #[arg(long)]
    pub quantile: Option<f64>,
    /// Sensitivity threshold for the dichotomy verdict
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Unique-ergodicity tolerance on ρ
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of random start points
    #[arg(long)]
    pub starts: Option<usize>,
    /// Explicit start point (repeatable)
    #[arg(long = "start", allow_hyphen_values = true)]
    #[serde(deserialize_with = "text_list")]
    pub start: Vec<String>,
    /// Rotation number: phi, sqrt2 or a number
    #[arg(long)]
    #[serde(deserialize_with = "text")]
    pub alpha: Option<String>,
    /// Monte Carlo samples
    #[arg(long)]
    pub mc: Option<usize>,
    /// log or harmonic
    #[arg(long)]
    pub normalization: Option<String>,
}

fn value_text(v: serde_json::Value) -> std::result::Result<String, String> {
    match v {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        serde_json::Value::Object(_) => Ok(v.to_string()),
        other => Err(format!(
            "expected a string, number or object, found {other}"
        )),
    }
}

fn text<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    let v = Option::<serde_json::Value>::deserialize(d)?;
    v.map(value_text).transpose().map_err(de::Error::custom)
}

fn text_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    Vec::<serde_json::Value>::deserialize(d)?
        .into_iter()
        .map(value_text)
        .collect::<std::result::Result<_, _>>()
        .map_err(de::Error::custom)
}

impl Overrides {
    /// Fills every unset field from `file`.
    pub fn or(self, file: Overrides) -> Overrides {
        Overrides {
            system: self.system.or(file.system),
            x: self.x.or(file.x),
            y: self.y.or(file.y),
            n: self.n.or(file.n),
            scheme: self.scheme.or(file.scheme),
            seed: self.seed.or(file.seed),
            threads: self.threads.or(file.threads),
            n0: self.n0.or(file.n0),
            ratio: self.ratio.or(file.ratio),
            window_fraction: self.window_fraction.or(file.window_fraction),
            config: self.config,
            out: self.out.or(file.out),
            json: self.json.or(file.json),
            cluster_tol: self.cluster_tol.or(file.cluster_tol),
            depth: self.depth.or(file.depth),
            eps_count: self.eps_count.or(file.eps_count),
            samples: self.samples.or(file.samples),
            sampler: self.sampler.or(file.sampler),
            radius: self.radius.or(file.radius),
            pairs: self.pairs.or(file.pairs),
            quantile: self.quantile.or(file.quantile),
            threshold: self.threshold.or(file.threshold),
            tol: self.tol.or(file.tol),
            starts: self.starts.or(file.starts),
            start: if self.start.is_empty() {
                file.start
            } else {
                self.start
            },
            alpha: self.alpha.or(file.alpha),
            mc: self.mc.or(file.mc),
            normalization: self.normalization.or(file.normalization),
        }
    }
}

/// Fully resolved run configuration, embedded in every JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub experiment: String,
    pub system: SystemSpec,
    pub x: PointRef,
    pub y: Option<PointRef>,
    pub n: usize,
    pub scheme: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub schedule: ScheduleParams,
    pub out: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub cluster_tol: f64,
    pub depth: usize,
    pub eps_count: usize,
    pub samples: usize,
    pub sampler: String,
    pub radius: f64,
    pub pairs: usize,
    pub quantile: f64,
    pub threshold: f64,
    pub tol: f64,
    pub starts: usize,
    pub start: Vec<PointRef>,
    pub alpha: f64,
    pub mc: usize,
    pub normalization: String,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl Settings {
    pub fn resolve(experiment: &str, o: Overrides, env_seed: Option<String>) -> Result<Self> {
        let system = match &o.system {
            Some(s) => parse_system(s)?,
            None => SystemSpec::rotation(PHI),
        };
        let x = match &o.x {
            Some(s) => parse_point(&system, s)?,
            None => system.base_point(),
        };
        let y =
            o.y.as_deref()
                .map(|s| parse_point(&system, s))
                .transpose()?;
        let seed = match (o.seed, env_seed) {
            (Some(s), _) => s,
            (None, Some(v)) => v.trim().parse().map_err(|_| {
                config_err(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))
            })?,
            (None, None) => 0,
        };
        let schedule = ScheduleParams {
            n0: o.n0.unwrap_or(DEFAULT_N0),
            ratio: o.ratio.unwrap_or(DEFAULT_RATIO),
            window_fraction: o.window_fraction.unwrap_or(DEFAULT_WINDOW_FRACTION),
        };
        schedule.validate().map_err(|e| config_err(e.to_string()))?;
        if o.threads == Some(0) {
            return Err(config_err("--threads must be >= 1"));
        }
        let start = o
            .start
            .iter()
            .map(|s| parse_point(&system, s))
            .collect::<Result<Vec<_>>>()?;
        let alpha = parse_alpha(o.alpha.as_deref().unwrap_or("phi"))?;
        let scheme = o.scheme.unwrap_or_else(|| "both".into());
        if !matches!(
            scheme.as_str(),
            "cesaro" | "log" | "both" | "weyl-cesaro" | "weyl-log"
        ) {
            return Err(config_err(format!(
                "unknown scheme {scheme:?} (cesaro, log, both, weyl-cesaro, weyl-log)"
            )));
        }
        let sampler = o.sampler.unwrap_or_else(|| "ball".into());
        if !matches!(sampler.as_str(), "ball" | "natural") {
            return Err(config_err(format!(
                "unknown sampler {sampler:?} (ball, natural)"
            )));
        }
        let normalization = o.normalization.unwrap_or_else(|| "log".into());
        if !matches!(normalization.as_str(), "log" | "harmonic") {
            return Err(config_err(format!(
                "unknown normalization {normalization:?} (log, harmonic)"
            )));
        }
        let n = o.n.unwrap_or(100_000);
        if n == 0 {
            return Err(config_err("--n must be >= 1"));
        }
        Ok(Settings {
            experiment: experiment.to_string(),
            system,
            x,
            y,
            n,
            scheme,
            seed,
            threads: o.threads,
            schedule,
            out: o.out,
            json: o.json,
            cluster_tol: o.cluster_tol.unwrap_or(0.05),
            depth: o.depth.unwrap_or(crate::measures::DEFAULT_DEPTH),
            eps_count: o.eps_count.unwrap_or(10),
            samples: o.samples.unwrap_or(8),
            sampler,
            radius: o.radius.unwrap_or(1.0 / 1024.0),
            pairs: o.pairs.unwrap_or(32),
            quantile: o
                .quantile
                .unwrap_or(crate::equicontinuity::DEFAULT_QUANTILE),
            threshold: o
                .threshold
                .unwrap_or(crate::equicontinuity::DEFAULT_SENSITIVITY_THRESHOLD),
            tol: o.tol.unwrap_or(crate::equicontinuity::DEFAULT_UE_TOL),
            starts: o.starts.unwrap_or(10),
            start,
            alpha,
            mc: o.mc.unwrap_or(100_000),
            normalization,
        })
    }
}

/// `phi`, `sqrt2` or a decimal number.
pub fn parse_alpha(s: &str) -> Result<f64> {
    match s {
        "phi" => Ok(PHI),
        "sqrt2" => Ok(SQRT2_FRAC),
        _ => s
            .parse::<f64>()
            .map_err(|_| config_err(format!("invalid rotation number {s:?}"))),
    }
}

fn parse_number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| config_err(format!("invalid {what} {s:?}")))
}

/// Shorthand or JSON system description.
pub fn parse_system(s: &str) -> Result<SystemSpec> {
    let s = s.trim();
    let sys = if s.starts_with('{') {
        serde_json::from_str::<SystemSpec>(s)
            .map_err(|e| config_err(format!("malformed system JSON: {e}")))?
    } else {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["rotation", a] => SystemSpec::rotation(parse_alpha(a)?),
            ["doubling"] => SystemSpec::DoublingMap,
            ["shift", "constant", sym] => SystemSpec::shift(SymbolSource::Constant {
                symbol: parse_number(sym, "symbol")?,
            }),
            ["shift", "periodic", word] => SystemSpec::shift(SymbolSource::Periodic {
                word: word.to_string(),
            }),
            ["shift", "sturmian", a] => SystemSpec::shift(SymbolSource::Sturmian {
                alpha: parse_alpha(a)?,
                x0: 0.0,
            }),
            ["shift", "sturmian", a, x0] => SystemSpec::shift(SymbolSource::Sturmian {
                alpha: parse_alpha(a)?,
                x0: parse_number(x0, "intercept")?,
            }),
            ["shift", "blocks", base] => SystemSpec::shift(SymbolSource::BlockSequence {
                growth: BlockGrowth::Geometric {
                    base: parse_number(base, "block base")?,
                },
            }),
            [kind, ..] => {
                let kind = if *kind == "shift" && parts.len() > 1 {
                    format!("shift:{}", parts[1])
                } else {
                    kind.to_string()
                };
                return Err(config_err(format!("unknown system kind {kind:?} in {s:?}")));
            }
            [] => return Err(config_err("empty system description")),
        }
    };
    sys.validate().map_err(|e| config_err(e.to_string()))?;
    Ok(sys)
}

/// Point of `sys` from text: JSON, a coordinate (circles), an offset along
/// the generating sequence (shifts), or `left;right` (products).
pub fn parse_point(sys: &SystemSpec, s: &str) -> Result<PointRef> {
    let s = s.trim();
    if s.starts_with('{') {
        let p: PointRef = serde_json::from_str(s)
            .map_err(|e| config_err(format!("malformed point JSON: {e}")))?;
        sys.check_point(&p).map_err(|e| config_err(e.to_string()))?;
        if let PointRef::Shift(sp) = &p {
            sp.source()
                .validate()
                .map_err(|e| config_err(e.to_string()))?;
        }
        return Ok(p);
    }
    match sys {
        SystemSpec::CircleRotation { .. } | SystemSpec::DoublingMap => {
            let x: f64 = parse_number(s, "coordinate")?;
            if !x.is_finite() {
                return Err(config_err(format!("coordinate must be finite, got {s}")));
            }
            sys.circle_point(x)
        }
        SystemSpec::BinaryShift { source } => Ok(PointRef::shift(
            Arc::clone(source),
            parse_number(s, "shift offset")?,
        )),
        SystemSpec::ProductSystem { left, right } => {
            let (a, b) = s.split_once(';').ok_or_else(|| {
                config_err(format!(
                    "product point needs the form left;right, got {s:?}"
                ))
            })?;
            Ok(PointRef::pair(
                parse_point(left, a)?,
                parse_point(right, b)?,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shorthand_systems() {
        assert_eq!(
            parse_system("rotation:phi").unwrap(),
            SystemSpec::rotation(PHI)
        );
        assert_eq!(
            parse_system("rotation:0.25").unwrap(),
            SystemSpec::rotation(0.25)
        );
        assert_eq!(parse_system("doubling").unwrap(), SystemSpec::DoublingMap);
        assert_eq!(
            parse_system("shift:sturmian:sqrt2:0.5").unwrap(),
            SystemSpec::shift(SymbolSource::Sturmian {
                alpha: SQRT2_FRAC,
                x0: 0.5
            })
        );
        let json = r#"{"kind":"circle_rotation","parameters":{"alpha":0.3}}"#;
        assert_eq!(parse_system(json).unwrap(), SystemSpec::rotation(0.3));
    }

    #[test]
    fn system_errors_are_distinct() {
        let unknown = parse_system("torus:2").unwrap_err().to_string();
        assert!(unknown.contains("unknown system kind"), "{unknown}");
        let unknown_shift = parse_system("shift:morse").unwrap_err().to_string();
        assert!(unknown_shift.contains("shift:morse"));
        assert!(parse_system("{oops")
            .unwrap_err()
            .to_string()
            .contains("malformed system JSON"));
        assert!(parse_system("rotation:1.5").is_err());
        assert!(parse_system("shift:periodic:012").is_err());
    }

    #[test]
    fn points() {
        let prod = SystemSpec::product(
            SystemSpec::rotation(PHI),
            SystemSpec::shift(SymbolSource::Constant { symbol: 1 }),
        );
        let p = parse_point(&prod, "0.25;3").unwrap();
        prod.check_point(&p).unwrap();
        assert!(parse_point(&prod, "0.25").is_err());
        let rot = SystemSpec::rotation(PHI);
        assert!(parse_point(&rot, r#"{"kind":"dyadic","bits":1}"#).is_err());
        assert_eq!(
            parse_point(&rot, "1.25").unwrap(),
            rot.circle_point(0.25).unwrap()
        );
    }

    #[test]
    fn precedence() {
        let flags = Overrides {
            n: Some(5),
            ..Overrides::default()
        };
        let file: Overrides =
            serde_json::from_str(r#"{"n": 9, "seed": 4, "x": 0.5, "system": "doubling"}"#).unwrap();
        let merged = flags.or(file);
        let s = Settings::resolve("average", merged, Some("77".into())).unwrap();
        assert_eq!((s.n, s.seed), (5, 4));
        assert_eq!(s.system, SystemSpec::DoublingMap);
        let s = Settings::resolve("average", Overrides::default(), Some("77".into())).unwrap();
        assert_eq!(s.seed, 77);
        assert!(Settings::resolve("average", Overrides::default(), Some("x".into())).is_err());
        assert!(serde_json::from_str::<Overrides>(r#"{"bogus": 1}"#).is_err());
    }
}
