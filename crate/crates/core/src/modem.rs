//! Candidate modulation schemes as unit-average-power constellations.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Error;

/// The modulation schemes the classifier can tell apart.
///
/// The declaration order is the fixed candidate order used for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "bpsk")]
    Bpsk,
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "8psk")]
    Psk8,
    #[serde(rename = "16qam")]
    Qam16,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Bpsk, Scheme::Qpsk, Scheme::Psk8, Scheme::Qam16];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Bpsk => "bpsk",
            Scheme::Qpsk => "qpsk",
            Scheme::Psk8 => "8psk",
            Scheme::Qam16 => "16qam",
        }
    }

    /// Parses a comma-separated list such as `"bpsk,QPSK,16qam"`.
    pub fn parse_list(s: &str) -> Result<Vec<Scheme>, Error> {
        let list = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Scheme::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        if list.is_empty() {
            return Err(Error::Config("empty modulation list".into()));
        }
        Ok(list)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Scheme::Bpsk),
            "qpsk" => Ok(Scheme::Qpsk),
            "8psk" => Ok(Scheme::Psk8),
            "16qam" => Ok(Scheme::Qam16),
            _ => Err(Error::UnsupportedScheme(s.to_string())),
        }
    }
}

/// A modulation scheme with its point set and power-law parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    scheme: Scheme,
    points: Vec<Complex64>,
    power_law_order: u32,
    reference_moment: Complex64,
}

impl Constellation {
    /// Builds the canonical unit-power constellation for `scheme`.
    ///
    /// QPSK uses the diagonal points `(±1±j)/√2`, 16-QAM the square grid
    /// `{±1,±3}²/√10`. The power-law order is the modulation order for the
    /// PSK family and 4 for 16-QAM.
    pub fn new(scheme: Scheme) -> Self {
        let (points, order) = match scheme {
            Scheme::Bpsk => (vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)], 2),
            Scheme::Qpsk => (
                [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
                    .iter()
                    .map(|&(re, im)| Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2))
                    .collect(),
                4,
            ),
            Scheme::Psk8 => (
                (0..8)
                    .map(|k| Complex64::from_polar(1.0, PI * k as f64 / 4.0))
                    .collect(),
                8,
            ),
            Scheme::Qam16 => {
                let levels = [-3.0, -1.0, 1.0, 3.0];
                let scale = 1.0 / 10f64.sqrt();
                let pts = levels
                    .iter()
                    .flat_map(|&re| levels.iter().map(move |&im| Complex64::new(re, im) * scale))
                    .collect();
                (pts, 4)
            }
        };
        let reference_moment = moment_of(&points, order);
        Self {
            scheme,
            points,
            power_law_order: order,
            reference_moment,
        }
    }

    /// Parses a scheme name and builds its constellation.
    pub fn from_name(name: &str) -> Result<Self, Error> {
        Ok(Self::new(name.parse()?))
    }

    /// Constellations for every supported scheme in candidate order.
    pub fn all() -> Vec<Constellation> {
        Scheme::ALL.iter().map(|&s| Constellation::new(s)).collect()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Number of points, `|A|`.
    pub fn cardinality(&self) -> usize {
        self.points.len()
    }

    pub fn power_law_order(&self) -> u32 {
        self.power_law_order
    }

    /// Noise-free `E[s^P]` at the power-law order.
    pub fn reference_moment(&self) -> Complex64 {
        self.reference_moment
    }

    /// Exact average of `point^order` over the point set.
    pub fn moment(&self, order: u32) -> Complex64 {
        moment_of(&self.points, order)
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Draws `count` i.i.d. symbols uniformly from the point set.
    pub fn draw_symbols<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> SymbolSequence {
        let values = (0..count)
            .map(|_| self.points[rng.random_range(0..self.points.len())])
            .collect();
        SymbolSequence {
            values,
            scheme: self.scheme,
        }
    }
}

fn moment_of(points: &[Complex64], order: u32) -> Complex64 {
    let sum: Complex64 = points.iter().map(|p| p.powu(order)).sum();
    sum / points.len() as f64
}

/// A run of symbols drawn from one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    pub values: Vec<Complex64>,
    pub scheme: Scheme,
}
