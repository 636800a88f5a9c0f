//! Run configuration shared by the command-line front end and the Python
//! bindings. Numbers stay decimal strings so nothing is rounded through `f64`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{format_real, parse_real, Real};
use crate::verify::Suite;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// `start:stop:count:spacing`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TGridSpec {
    pub start: String,
    pub stop: String,
    pub count: usize,
    pub spacing: Spacing,
}

impl FromStr for TGridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("t-grid must be start:stop:count:spacing, got {s:?}"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, stop, count, spacing] = parts[..] else {
            return Err(bad());
        };
        let count: usize = count.parse().map_err(|_| bad())?;
        let spacing = match spacing {
            "linear" | "lin" => Spacing::Linear,
            "log" => Spacing::Log,
            _ => return Err(bad()),
        };
        let spec = TGridSpec {
            start: start.to_string(),
            stop: stop.to_string(),
            count,
            spacing,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for TGridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spacing = match self.spacing {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        };
        write!(f, "{}:{}:{}:{spacing}", self.start, self.stop, self.count)
    }
}

impl TGridSpec {
    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("t-grid needs at least one point".into()));
        }
        for end in [&self.start, &self.stop] {
            if parse_real(end, 64)? <= 0 {
                return Err(Error::InvalidParameter(format!("t-grid endpoints must be > 0, got {end}")));
            }
        }
        Ok(())
    }

    /// Grid values as decimal strings with `digits` significant digits.
    pub fn points(&self, digits: u32) -> Result<Vec<String>> {
        self.validate()?;
        if self.count == 1 {
            return Ok(vec![self.start.clone()]);
        }
        let prec = ((f64::from(digits) + 10.0) * std::f64::consts::LOG2_10).ceil() as u32;
        let start = parse_real(&self.start, prec)?;
        let stop = parse_real(&self.stop, prec)?;
        let steps = (self.count - 1) as u32;
        let value = |i: u32| -> Real {
            match self.spacing {
                Spacing::Linear => {
                    let span = Float::with_val(prec, &stop - &start);
                    Float::with_val(prec, &start + span * i / steps)
                }
                Spacing::Log => {
                    let ratio = Float::with_val(prec, &stop / &start).ln() * i / steps;
                    ratio.exp() * &start
                }
            }
        };
        Ok((0..=steps)
            .map(|i| {
                if i == 0 {
                    self.start.clone()
                } else if i == steps {
                    self.stop.clone()
                } else {
                    tidy_decimal(&format_real(&value(i), digits))
                }
            })
            .collect())
    }
}

/// Rewrites `d.ddde±XX` as a plain decimal without trailing zeros, so a grid
/// point like `1.500e+00` reads `1.5`. Very large or small values keep the
/// exponent form.
fn tidy_decimal(s: &str) -> String {
    let Some((mantissa, exp)) = s.split_once('e') else {
        return s.to_string();
    };
    let Ok(exp) = exp.parse::<i32>() else {
        return s.to_string();
    };
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    if !(-6..=15).contains(&exp) {
        let (lead, rest) = digits.split_at(1);
        let dot = if rest.is_empty() { "" } else { "." };
        return format!("{sign}{lead}{dot}{rest}e{exp}");
    }
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{digits}", "0".repeat((-point) as usize))
    } else if point as usize >= digits.len() {
        format!("{digits}{}", "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{int}.{frac}")
    };
    format!("{sign}{body}")
}

/// Either a single `t` or a grid of them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TSpec {
    Single(String),
    Grid(TGridSpec),
}

impl TSpec {
    pub fn values(&self, digits: u32) -> Result<Vec<String>> {
        match self {
            TSpec::Single(t) => Ok(vec![t.clone()]),
            TSpec::Grid(g) => g.points(digits),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub lambda: String,
    pub t: TSpec,
    pub n_max: usize,
    pub target_digits: u32,
    pub suites: Vec<Suite>,
    pub format: Format,
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(default)]
    pub richardson: bool,
    #[serde(default)]
    pub write_moments: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_fault: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        parse_real(&self.lambda, 64)?;
        if self.n_max < 2 {
            return Err(Error::InvalidParameter("--nmax must be at least 2".into()));
        }
        if self.target_digits < 10 {
            return Err(Error::InvalidParameter("--digits must be at least 10".into()));
        }
        if let Some(h) = &self.h {
            if parse_real(h, 64)? <= 0 {
                return Err(Error::InvalidParameter(format!("--h must be > 0, got {h}")));
            }
        }
        self.t.values(self.target_digits)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> RunConfig {
        RunConfig {
            lambda: "2.5".into(),
            t: TSpec::Grid("0.5:2:4:linear".parse().unwrap()),
            n_max: 50,
            target_digits: 30,
            suites: Suite::defaults(),
            format: Format::Json,
            out: PathBuf::from("out"),
            h: Some("1e-10".into()),
            richardson: false,
            write_moments: true,
            beta_fault: None,
        }
    }

    #[test]
    fn grid_spec_parsing() {
        let g: TGridSpec = "0.5:2:4:linear".parse().unwrap();
        assert_eq!(g.points(30).unwrap(), ["0.5", "1", "1.5", "2"]);
        assert_eq!(g.to_string(), "0.5:2:4:linear");
        let g: TGridSpec = "0.1:10:3:log".parse().unwrap();
        assert_eq!(g.points(30).unwrap(), ["0.1", "1", "10"]);
        let g: TGridSpec = "0.001:1000:4:log".parse().unwrap();
        assert_eq!(g.points(30).unwrap(), ["0.001", "0.1", "10", "1000"]);
        for bad in ["0.5:2:4", "0.5:2:x:linear", "0:2:4:log", "1:2:0:linear", "1:2:3:cubic"] {
            assert!(bad.parse::<TGridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn tidy_decimals() {
        assert_eq!(tidy_decimal("1.500e+00"), "1.5");
        assert_eq!(tidy_decimal("-2.500e-03"), "-0.0025");
        assert_eq!(tidy_decimal("1.250e+02"), "125");
        assert_eq!(tidy_decimal("1.2e+03"), "1200");
        assert_eq!(tidy_decimal("3.000e-20"), "3e-20");
    }

    #[test]
    fn config_round_trips_byte_identically() {
        let c = config();
        let text = c.to_json().unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn config_validation() {
        let mut c = config();
        c.n_max = 1;
        assert!(c.validate().is_err());
        let mut c = config();
        c.h = Some("-1".into());
        assert!(c.validate().is_err());
        let mut c = config();
        c.lambda = "abc".into();
        assert!(c.validate().is_err());
    }
}
