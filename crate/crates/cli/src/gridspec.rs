//! Parsing of `--gen-grid` / `--gen-weight` specs: small named families of
//! grid functions for driving the operator commands without CSV files.
//! Format mirrors the step-function generator: `name:key=val,key=val` with
//! shared keys n (samples), lo, hi (domain).

use grandexp::grid::{random_smooth_1d, sample_midpoints_1d, GridFunction, Weight};
use grandexp::Error;

pub struct GridSpec {
    name: String,
    params: Vec<(String, f64)>,
    n: usize,
    lo: f64,
    hi: f64,
}

fn parse_f(key: &str, val: &str) -> Result<f64, Error> {
    val.trim()
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("cannot parse `{val}` for {key}")))
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, Error> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (s.trim(), ""),
        };
        let mut params = Vec::new();
        let mut n = 256usize;
        let mut lo = 0.0;
        let mut hi = 1.0;
        if !rest.is_empty() {
            for item in rest.split(',') {
                let (key, val) = item.split_once('=').ok_or_else(|| {
                    Error::InvalidSpec(format!("expected key=value, got `{item}`"))
                })?;
                let key = key.trim();
                match key {
                    "n" => {
                        n = val.trim().parse().map_err(|_| {
                            Error::InvalidSpec(format!("cannot parse `{val}` as n"))
                        })?
                    }
                    "lo" => lo = parse_f(key, val)?,
                    "hi" => hi = parse_f(key, val)?,
                    _ => params.push((key.to_string(), parse_f(key, val)?)),
                }
            }
        }
        if !(hi > lo) {
            return Err(Error::InvalidSpec(format!("empty domain ({lo}, {hi})")));
        }
        Ok(Self {
            name: name.to_string(),
            params,
            n,
            lo,
            hi,
        })
    }

    fn get(&self, key: &str) -> Option<f64> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
    }

    fn require(&self, key: &str) -> Result<f64, Error> {
        self.get(key)
            .ok_or_else(|| Error::InvalidSpec(format!("`{}` requires {key}=", self.name)))
    }

    pub fn build_grid(&self) -> Result<GridFunction, Error> {
        let (lo, hi, n) = (self.lo, self.hi, self.n);
        match self.name.as_str() {
            "constant" => {
                let c = self.require("c")?;
                sample_midpoints_1d(|_| c, lo, hi, n)
            }
            "indicator" => {
                let a = self.require("a")?;
                let b = self.require("b")?;
                sample_midpoints_1d(|x| if x > a && x < b { 1.0 } else { 0.0 }, lo, hi, n)
            }
            "smooth" => {
                let seed = self.get("seed").unwrap_or(0.0) as u64;
                Ok(random_smooth_1d(seed, n, lo, hi))
            }
            other => Err(Error::InvalidSpec(format!(
                "unknown grid generator `{other}` (expected constant, indicator, smooth)"
            ))),
        }
    }

    pub fn build_weight(&self) -> Result<Weight, Error> {
        let (lo, hi, n) = (self.lo, self.hi, self.n);
        match self.name.as_str() {
            "one" => Weight::new(sample_midpoints_1d(|_| 1.0, lo, hi, n)?),
            "abs_pow" => {
                let alpha = self.require("alpha")?;
                Weight::new(sample_midpoints_1d(
                    |x| x.abs().powf(alpha),
                    lo,
                    hi,
                    n,
                )?)
            }
            "exp_inv" => Weight::new(sample_midpoints_1d(|x| (1.0 / x).exp(), lo, hi, n)?),
            other => Err(Error::InvalidSpec(format!(
                "unknown weight generator `{other}` (expected one, abs_pow, exp_inv)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grid_specs() {
        let g = GridSpec::parse("constant:c=2,n=64").unwrap().build_grid().unwrap();
        assert_eq!(g.len(), 64);
        assert!(g.samples().iter().all(|&v| v == 2.0));
        let g = GridSpec::parse("indicator:a=0,b=0.5,n=128").unwrap().build_grid().unwrap();
        assert_eq!(g.samples().iter().filter(|&&v| v == 1.0).count(), 64);
        assert!(GridSpec::parse("constant:n=64").unwrap().build_grid().is_err());
        assert!(GridSpec::parse("mystery:n=4").unwrap().build_grid().is_err());
    }

    #[test]
    fn parses_weight_specs() {
        let w = GridSpec::parse("abs_pow:alpha=0.5,n=64,lo=-1,hi=1")
            .unwrap()
            .build_weight()
            .unwrap();
        assert_eq!(w.grid().len(), 64);
        assert!(GridSpec::parse("one:n=32").unwrap().build_weight().is_ok());
    }
}
