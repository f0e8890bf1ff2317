use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fp_core::FloatFormat;
use crate::oracle::{bracket_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    HornerChebyshev,
    InnerUniform,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::HornerChebyshev => "horner_chebyshev",
            ExperimentKind::InnerUniform => "inner_uniform",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horner_chebyshev" | "horner" => Ok(ExperimentKind::HornerChebyshev),
            "inner_uniform" | "dot" | "inner" => Ok(ExperimentKind::InnerUniform),
            _ => Err(Error::Parse(format!("unknown experiment {s:?}"))),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Distribution of inner-product entries; `a` and `b` are drawn
/// independently and rounded to nearest in the target format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryDist {
    /// `[0, 1]`
    Uniform01,
    /// `[-1, 1]`
    UniformSym,
    /// `[1/2, 1]`
    UniformHalf,
}

impl EntryDist {
    pub fn name(self) -> &'static str {
        match self {
            EntryDist::Uniform01 => "uniform01",
            EntryDist::UniformSym => "uniform_sym",
            EntryDist::UniformHalf => "uniform_half",
        }
    }

    /// Maps a uniform draw in `[0, 1)` onto the distribution's interval.
    pub fn map(self, r: f64) -> f64 {
        match self {
            EntryDist::Uniform01 => r,
            EntryDist::UniformSym => 2.0 * r - 1.0,
            EntryDist::UniformHalf => 0.5 + 0.5 * r,
        }
    }
}

impl FromStr for EntryDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" => Ok(EntryDist::Uniform01),
            "uniform_sym" => Ok(EntryDist::UniformSym),
            "uniform_half" => Ok(EntryDist::UniformHalf),
            _ => Err(Error::Parse(format!("unknown distribution {s:?}"))),
        }
    }
}

impl fmt::Display for EntryDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `A/B` or an integer `A` into an exact rational.
pub fn parse_fraction(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("bad fraction {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Evenly spaced exact points `start:end:count`.
#[derive(Debug, Clone, PartialEq)]
pub struct XGrid {
    pub start: Rational,
    pub end: Rational,
    pub count: usize,
}

/// One grid point: the exact requested abscissa and the value actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub exact: Rational,
    pub x: f64,
    pub rounded: bool,
}

impl XGrid {
    pub fn points(&self) -> Vec<Rational> {
        if self.count == 1 {
            return vec![self.start.clone()];
        }
        let steps = Rational::from_integer(BigInt::from(self.count - 1));
        let step = (&self.end - &self.start) / steps;
        (0..self.count)
            .map(|k| &self.start + &step * Rational::from_integer(BigInt::from(k)))
            .collect()
    }

    /// Grid points rounded to nearest in `fmt` where not representable.
    pub fn points_in(&self, fmt: &FloatFormat) -> Result<Vec<GridPoint>> {
        self.points()
            .into_iter()
            .map(|exact| {
                let x = round_rational_nearest(&exact, fmt)?;
                let rounded = crate::oracle::to_rational(x) != exact;
                Ok(GridPoint { exact, x, rounded })
            })
            .collect()
    }
}

impl Default for XGrid {
    fn default() -> Self {
        "8/64:1:57".parse().expect("valid default grid")
    }
}

impl FromStr for XGrid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(Error::Parse(format!("x-grid {s:?} is not START:END:COUNT")));
        };
        let count: usize = c.trim().parse().map_err(|_| Error::Parse(format!("bad grid count {c:?}")))?;
        if count == 0 {
            return Err(Error::Parse("grid count must be positive".into()));
        }
        Ok(XGrid { start: parse_fraction(a)?, end: parse_fraction(b)?, count })
    }
}

impl fmt::Display for XGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.count)
    }
}

/// Round-to-nearest-even of an exact rational into `fmt`.
pub fn round_rational_nearest(c: &Rational, fmt: &FloatFormat) -> Result<f64> {
    let br = bracket_rational(c, fmt)?;
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let pick_up = if br.theta > half {
        true
    } else if br.theta < half {
        false
    } else {
        let spacing = &br.up - &br.down;
        let k = (&br.down / spacing).to_integer();
        k.is_odd()
    };
    let v = if pick_up { &br.up } else { &br.down };
    let x = v.to_f64().ok_or_else(|| Error::Domain("rational out of carrier range".into()))?;
    if x.abs() > fmt.max_finite() {
        return Err(Error::Overflow { value: x, format: fmt.name() });
    }
    Ok(x)
}

/// Default cap on sampled inner-product lengths.
pub const DEFAULT_N_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub format: FloatFormat,
    pub samples: usize,
    pub seed: u64,
    pub lambdas: Vec<f64>,
    /// Even Chebyshev degree `N`; Horner runs on `n = N/2` powers of `x²`.
    pub degree: u32,
    pub x_grid: XGrid,
    /// Form `x²` with the kernel's rounding mode rather than exactly.
    pub square_in_mode: bool,
    pub n_list: Vec<u64>,
    pub dist: EntryDist,
    /// Divide errors and bounds by the condition number.
    pub normalize: bool,
    /// Worker threads; `None` uses the global pool. Does not affect output.
    pub threads: Option<usize>,
    pub n_cap: u64,
}

impl ExperimentConfig {
    pub fn horner() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::HornerChebyshev,
            format: FloatFormat::BINARY32,
            samples: 30,
            seed: 0,
            lambdas: vec![0.5, 0.1],
            degree: 20,
            x_grid: XGrid::default(),
            square_in_mode: true,
            n_list: Vec::new(),
            dist: EntryDist::Uniform01,
            normalize: false,
            threads: None,
            n_cap: DEFAULT_N_CAP,
        }
    }

    pub fn inner() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::InnerUniform,
            n_list: vec![1_000, 100_000],
            ..Self::horner()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Domain("samples must be at least 1".into()));
        }
        if let Some(&l) = self.lambdas.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
            return Err(Error::Domain(format!("failure probability {l} outside (0, 1]")));
        }
        if self.threads == Some(0) {
            return Err(Error::Domain("threads must be at least 1".into()));
        }
        match self.experiment {
            ExperimentKind::HornerChebyshev => {
                if self.degree % 2 != 0 {
                    return Err(Error::Domain(format!("Chebyshev degree {} must be even", self.degree)));
                }
            }
            ExperimentKind::InnerUniform => {
                if self.n_list.is_empty() {
                    return Err(Error::Domain("no vector lengths given".into()));
                }
                if let Some(&n) = self.n_list.iter().find(|&&n| n == 0 || n > self.n_cap) {
                    return Err(Error::Domain(format!("vector length {n} outside [1, {}]", self.n_cap)));
                }
            }
        }
        Ok(())
    }

    /// Single-line description for output headers; excludes the thread count.
    pub fn describe(&self) -> String {
        let lambdas: Vec<String> = self.lambdas.iter().map(|l| l.to_string()).collect();
        let mut s = format!(
            "experiment={} format={} samples={} seed={} lambda={} normalize={}",
            self.experiment,
            self.format,
            self.samples,
            self.seed,
            lambdas.join(","),
            self.normalize
        );
        match self.experiment {
            ExperimentKind::HornerChebyshev => {
                s += &format!(" degree={} x_grid={} square_in_mode={}", self.degree, self.x_grid, self.square_in_mode);
            }
            ExperimentKind::InnerUniform => {
                let ns: Vec<String> = self.n_list.iter().map(|n| n.to_string()).collect();
                s += &format!(" n={} dist={}", ns.join(","), self.dist);
            }
        }
        s
    }
}
