//! The run configuration: a flat `key = value` text file with dotted keys.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! documented default and a type; unknown keys, duplicates and values that
//! do not parse are rejected before any computation starts.

use std::collections::BTreeMap;
use std::fmt;

use elastic_polymer::{Atom, Correlator, ModelParams};

/// Value type of a configuration key.
#[derive(Debug, Clone, Copy)]
enum Kind {
    Float,
    Count,
    Seed,
    /// One of a fixed set of words.
    Choice(&'static [&'static str]),
    /// Comma-separated floats (possibly empty).
    FloatList,
    /// Comma-separated counts.
    CountList,
    /// `lo:hi:n`, `lo:hi:n:log` or an explicit comma-separated list.
    Grid,
    /// `lo:hi`.
    Interval,
    /// A float, or empty for "unset".
    OptionalFloat,
}

/// `(key, default, kind, description)`.
const SCHEMA: &[(&str, &str, Kind, &str)] = &[
    (
        "correlator.kind",
        "exponential",
        Kind::Choice(&["exponential", "power_law", "mixture", "zero"]),
        "covariance family",
    ),
    ("correlator.g", "1", Kind::Float, "amplitude g"),
    ("correlator.a", "1", Kind::Float, "length scale a"),
    ("correlator.gamma", "0.5", Kind::Float, "power-law exponent"),
    ("correlator.c0", "0", Kind::Float, "constant c0 of a mixture"),
    ("correlator.lambdas", "", Kind::FloatList, "mixture atoms lambda"),
    ("correlator.weights", "", Kind::FloatList, "mixture weights"),
    ("params.beta", "1", Kind::Float, "inverse temperature"),
    ("params.mu", "1", Kind::Float, "mass"),
    ("params.mu_larkin_fraction", "", Kind::OptionalFloat, "if set, mu = fraction * Larkin mass"),
    ("params.t", "1", Kind::Float, "elastic strength"),
    ("kernel.flavor", "continuum", Kind::Choice(&["continuum", "lattice"]), "resolvent family"),
    ("kernel.l", "1024", Kind::Count, "lattice size of the lattice flavor"),
    ("grid.beta", "0.1:4:40", Kind::Grid, "inverse temperatures of the phase diagram"),
    ("grid.mu", "1e-16:1e8", Kind::Interval, "mass range scanned for the boundary"),
    ("grid.points_per_decade", "64", Kind::Count, "mass scan density"),
    ("grid.x", "0.1:100:31:log", Kind::Grid, "displacement separations"),
    ("grid.l", "100,10000,1000000", Kind::CountList, "lattice sizes of lattice-verify"),
    ("verify.x", "1", Kind::Float, "separation used by lattice-verify"),
    ("verify.time", "1", Kind::Float, "heat-kernel time used by lattice-verify"),
    ("wandering.x_lo", "1e3", Kind::Float, "left end of the log-log slope window"),
    ("wandering.x_hi", "1e6", Kind::Float, "right end of the log-log slope window"),
    ("sim.n", "64", Kind::Count, "dimension N"),
    ("sim.l", "4", Kind::Count, "lattice size L"),
    ("sim.features", "4096", Kind::Count, "random features per atom M"),
    ("sim.disorder", "8", Kind::Count, "disorder realizations"),
    ("sim.steps", "20000", Kind::Count, "MALA steps per replica, burn-in included"),
    ("sim.replicas", "2", Kind::Count, "replicas per realization"),
    ("sim.step_size", "0.5", Kind::Float, "initial step size"),
    ("sim.burn_in", "0.2", Kind::Float, "burn-in fraction"),
    ("sim.batches", "32", Kind::Count, "batches for error bars"),
    ("sim.bins", "30", Kind::Count, "overlap histogram bins"),
    ("sim.seed", "0", Kind::Seed, "master seed (overridden by --seed)"),
    ("tol.residual_grid", "2000", Kind::Count, "stationarity grid of lattice solves"),
    ("tol.stationarity", "1e-8", Kind::Float, "largest accepted stationarity defect"),
];

/// A configuration error, reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// A validated configuration: every schema key with its default or override.
#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl RunConfig {
    /// The all-defaults configuration.
    pub fn defaults() -> Self {
        RunConfig { values: SCHEMA.iter().map(|&(k, d, _, _)| (k, d.to_string())).collect() }
    }

    /// Parses `key = value` lines on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::defaults();
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key = value, got {line:?}", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(prev) = seen.insert(key.to_string(), n + 1) {
                return Err(bad(format!("line {}: key {key} already set on line {prev}", n + 1)));
            }
            cfg.set(key, value).map_err(|e| bad(format!("line {}: {}", n + 1, e.0)))?;
        }
        Ok(cfg)
    }

    /// Sets one key after checking that it exists and that the value parses.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let &(name, _, kind, _) =
            SCHEMA.iter().find(|e| e.0 == key).ok_or_else(|| bad(format!("unknown key {key}")))?;
        check(kind, value).map_err(|e| bad(format!("{key} = {value:?}: {}", e.0)))?;
        self.values.insert(name, value.to_string());
        Ok(())
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key {key} missing from the schema"))
    }

    pub fn float(&self, key: &str) -> f64 {
        parse_float(self.raw(key)).expect("validated")
    }

    pub fn count(&self, key: &str) -> usize {
        parse_count(self.raw(key)).expect("validated")
    }

    pub fn seed(&self, key: &str) -> u64 {
        self.raw(key).parse().expect("validated")
    }

    pub fn word(&self, key: &str) -> &str {
        self.raw(key)
    }

    pub fn optional_float(&self, key: &str) -> Option<f64> {
        let v = self.raw(key);
        (!v.is_empty()).then(|| parse_float(v).expect("validated"))
    }

    pub fn float_list(&self, key: &str) -> Vec<f64> {
        parse_list(self.raw(key), parse_float).expect("validated")
    }

    pub fn count_list(&self, key: &str) -> Vec<usize> {
        parse_list(self.raw(key), parse_count).expect("validated")
    }

    pub fn grid(&self, key: &str) -> Vec<f64> {
        parse_grid(self.raw(key)).expect("validated")
    }

    pub fn interval(&self, key: &str) -> (f64, f64) {
        parse_interval(self.raw(key)).expect("validated")
    }

    /// The correlator described by the `correlator.*` keys.
    pub fn correlator(&self) -> std::result::Result<Correlator, elastic_polymer::Error> {
        let (g, a) = (self.float("correlator.g"), self.float("correlator.a"));
        match self.word("correlator.kind") {
            "exponential" => Correlator::exponential(g, a),
            "power_law" => Correlator::power_law(g, a, self.float("correlator.gamma")),
            "zero" => Ok(Correlator::zero()),
            _ => {
                let (lambdas, weights) = (self.float_list("correlator.lambdas"), self.float_list("correlator.weights"));
                if lambdas.len() != weights.len() {
                    return Err(elastic_polymer::Error::Domain(format!(
                        "mixture has {} lambdas but {} weights",
                        lambdas.len(),
                        weights.len()
                    )));
                }
                let atoms = lambdas.into_iter().zip(weights).map(|(lambda, weight)| Atom { lambda, weight }).collect();
                Correlator::mixture(self.float("correlator.c0"), atoms)
            }
        }
    }

    /// `β, μ, t`, with `μ` resolved from the Larkin mass when
    /// `params.mu_larkin_fraction` is set.
    pub fn params(&self, corr: &Correlator) -> std::result::Result<ModelParams, elastic_polymer::Error> {
        let (beta, t) = (self.float("params.beta"), self.float("params.t"));
        let mu = match self.optional_float("params.mu_larkin_fraction") {
            None => self.float("params.mu"),
            Some(frac) => {
                let ml = elastic_polymer::phase::larkin_mass(beta, t, corr).ok_or_else(|| {
                    elastic_polymer::Error::Precondition(
                        "params.mu_larkin_fraction is set but the Larkin equation has no root".into(),
                    )
                })?;
                frac * ml
            }
        };
        ModelParams::new(beta, mu, t)
    }
}

/// One line per key: `key = default  # description`.
pub fn describe() -> String {
    SCHEMA.iter().map(|(k, d, _, doc)| format!("{k} = {d}  # {doc}\n")).collect()
}

fn check(kind: Kind, v: &str) -> Result<()> {
    match kind {
        Kind::Float => parse_float(v).map(drop),
        Kind::Count => parse_count(v).map(drop),
        Kind::Seed => v.parse::<u64>().map(drop).map_err(|_| bad("expected an unsigned 64-bit integer")),
        Kind::Choice(words) => {
            if words.contains(&v) {
                Ok(())
            } else {
                Err(bad(format!("expected one of {}", words.join(", "))))
            }
        }
        Kind::FloatList => parse_list(v, parse_float).map(drop),
        Kind::CountList => parse_list(v, parse_count).map(drop),
        Kind::Grid => parse_grid(v).map(drop),
        Kind::Interval => parse_interval(v).map(drop),
        Kind::OptionalFloat => {
            if v.is_empty() {
                Ok(())
            } else {
                parse_float(v).map(drop)
            }
        }
    }
}

fn parse_float(v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| bad("expected a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad("expected a finite number"))
    }
}

fn parse_count(v: &str) -> Result<usize> {
    v.parse().map_err(|_| bad("expected a nonnegative integer"))
}

fn parse_list<T>(v: &str, item: fn(&str) -> Result<T>) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| item(s.trim())).collect()
}

fn parse_interval(v: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() != 2 {
        return Err(bad("expected lo:hi"));
    }
    let (lo, hi) = (parse_float(parts[0])?, parse_float(parts[1])?);
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(bad("expected lo < hi"))
    }
}

fn parse_grid(v: &str) -> Result<Vec<f64>> {
    if !v.contains(':') {
        let list = parse_list(v, parse_float)?;
        return if list.is_empty() { Err(bad("empty grid")) } else { Ok(list) };
    }
    let parts: Vec<&str> = v.split(':').collect();
    let log = match parts.len() {
        3 => false,
        4 if parts[3] == "log" => true,
        _ => return Err(bad("expected lo:hi:n or lo:hi:n:log")),
    };
    let (lo, hi, n) = (parse_float(parts[0])?, parse_float(parts[1])?, parse_count(parts[2])?);
    if n == 0 || hi < lo || (n > 1 && hi == lo) {
        return Err(bad("expected lo < hi and n >= 1"));
    }
    if log && lo <= 0.0 {
        return Err(bad("a logarithmic grid needs lo > 0"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if i == n - 1 {
                hi
            } else if log {
                (lo.ln() + f * (hi.ln() - lo.ln())).exp()
            } else {
                lo + f * (hi - lo)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::defaults();
        for &(k, d, kind, _) in SCHEMA {
            assert!(check(kind, d).is_ok(), "default of {k}");
        }
        assert_eq!(cfg.grid("grid.beta").len(), 40);
        assert_eq!(cfg.interval("grid.mu"), (1e-16, 1e8));
    }

    #[test]
    fn parses_comments_and_overrides() {
        let cfg = RunConfig::parse("# a comment\n\ncorrelator.kind = power_law\nparams.beta=2\n").unwrap();
        assert_eq!(cfg.word("correlator.kind"), "power_law");
        assert_eq!(cfg.float("params.beta"), 2.0);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        assert!(RunConfig::parse("params.bta = 1").unwrap_err().0.contains("unknown key params.bta"));
        assert!(RunConfig::parse("params.beta = 1\nparams.beta = 2").is_err());
        assert!(RunConfig::parse("params.beta").is_err());
        assert!(RunConfig::parse("params.beta = abc").is_err());
        assert!(RunConfig::parse("params.beta = inf").is_err());
        assert!(RunConfig::parse("kernel.flavor = torus").is_err());
        assert!(RunConfig::parse("grid.x = 0:1:5:log").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1,2,5").unwrap(), vec![1.0, 2.0, 5.0]);
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("1:100:3:log").unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12 && g[2] == 100.0);
    }
}
