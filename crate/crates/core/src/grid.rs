use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Points start·10^{i/per_decade} up to `stop`; `stop` itself is always the last point.
pub fn geometric_grid(start: f64, stop: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(start > 0.0) || !stop.is_finite() || stop < start || per_decade == 0 {
        return Err(Error::InvalidArgument(format!(
            "geometric grid needs 0 < start <= stop and points per decade >= 1 (got {start}:{stop}:{per_decade})"
        )));
    }
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let t = start * 10f64.powf(i as f64 / per_decade as f64);
        if t >= stop * (1.0 - 1e-12) {
            break;
        }
        out.push(t);
        i += 1;
    }
    out.push(stop);
    Ok(out)
}

/// One end of a grid: a plain number or a multiple of R or of T*.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridBound {
    Absolute(f64),
    R(f64),
    TStar(f64),
}

impl GridBound {
    pub fn resolve(self, r: Option<f64>, t_star: Option<f64>) -> Result<f64> {
        match self {
            GridBound::Absolute(x) => Ok(x),
            GridBound::R(k) => r.map(|r| k * r).ok_or_else(|| Error::InvalidArgument("grid uses R but no R given".into())),
            GridBound::TStar(k) => t_star
                .map(|t| k * t)
                .ok_or_else(|| Error::InvalidArgument("grid uses T* but no T* available".into())),
        }
    }
}

impl FromStr for GridBound {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (num, ctor): (&str, fn(f64) -> GridBound) = if let Some(p) = s.strip_suffix("T*") {
            (p, GridBound::TStar)
        } else if let Some(p) = s.strip_suffix('R') {
            (p, GridBound::R)
        } else {
            (s, GridBound::Absolute)
        };
        let k = if num.is_empty() {
            1.0
        } else {
            num.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad grid bound {s:?}")))?
        };
        Ok(ctor(k))
    }
}

impl fmt::Display for GridBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridBound::Absolute(x) => write!(f, "{x}"),
            GridBound::R(k) => write!(f, "{k}R"),
            GridBound::TStar(k) => write!(f, "{k}T*"),
        }
    }
}

/// "start:stop:points-per-decade", e.g. "2R:20T*:64" or "0.1:1e4:16".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub start: GridBound,
    pub stop: GridBound,
    pub per_decade: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { start: GridBound::R(2.0), stop: GridBound::TStar(20.0), per_decade: 64 }
    }
}

impl GridSpec {
    pub fn resolve(&self, r: Option<f64>, t_star: Option<f64>) -> Result<Vec<f64>> {
        let a = self.start.resolve(r, t_star)?;
        let b = self.stop.resolve(r, t_star)?;
        if b <= a {
            return Ok(vec![a]);
        }
        geometric_grid(a, b, self.per_decade)
    }
}

impl FromStr for GridSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidArgument(format!("grid {s:?} is not start:stop:points-per-decade")));
        }
        let per_decade = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("bad points per decade {:?}", parts[2])))?;
        Ok(GridSpec { start: parts[0].parse()?, stop: parts[1].parse()?, per_decade })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.per_decade)
    }
}
