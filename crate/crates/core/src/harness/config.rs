use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declares a string-valued enum whose canonical names double as serde
/// names, plus accepted short aliases for the command line.
macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $canon:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(
                #[serde(rename = $canon $(, alias = $alias)*)]
                $variant,
            )+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $canon,)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($canon $(| $alias)* => Ok($name::$variant),)+
                    other => Err(Error::Config(format!(
                        "unknown {} `{other}` (expected one of: {})",
                        stringify!($name),
                        [$($canon $(, $alias)*),+].join(", "),
                    ))),
                }
            }
        }
    };
}

named_enum!(Method {
    SiDtw => "si-dtw",
    SiDtwOc => "si-dtw-oc",
    Permutation => "permutation",
    DataSplit => "data-split",
});

named_enum!(Covariance {
    Independence => "independence" | "indep",
    ArCorrelation => "ar-correlation" | "ar",
});

named_enum!(Noise {
    Gaussian => "gaussian" | "gauss",
    Laplace => "laplace",
    SkewNormal => "skew-normal-10" | "skewnormal",
    StudentT20 => "student-t-20" | "t20",
});

named_enum!(VarianceMode {
    Known => "known",
    Estimated => "estimated",
});

impl Method {
    /// Whether the method produces a truncation region and confidence interval.
    pub fn is_selective(self) -> bool {
        matches!(self, Method::SiDtw | Method::SiDtwOc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    /// Mean shift of `y` relative to `x`.
    pub delta: f64,
    pub covariance: Covariance,
    pub noise: Noise,
    pub variance_mode: VarianceMode,
    pub alpha: f64,
    pub trials: usize,
    /// Independent repetitions of the `trials`-trial experiment.
    pub repetitions: usize,
    pub seed: u64,
    /// Permutation replicates.
    #[serde(rename = "B", alias = "perm_b")]
    pub perm_b: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::SiDtw,
            n: 5,
            m: 5,
            delta: 0.0,
            covariance: Covariance::Independence,
            noise: Noise::Gaussian,
            variance_mode: VarianceMode::Known,
            alpha: 0.05,
            trials: 120,
            repetitions: 1,
            seed: 0,
            perm_b: 1000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.m == 0 {
            return fail(format!("series lengths must be positive (n = {}, m = {})", self.n, self.m));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !self.delta.is_finite() {
            return fail(format!("delta must be finite, got {}", self.delta));
        }
        if self.variance_mode == VarianceMode::Estimated && (self.n < 2 || self.m < 2) {
            return fail("estimated variance needs series of length >= 2".into());
        }
        match self.method {
            Method::Permutation if self.n != self.m => fail(format!(
                "the permutation test needs n = m (n = {}, m = {})",
                self.n, self.m
            )),
            Method::Permutation if self.perm_b == 0 => fail("B must be at least 1".into()),
            Method::DataSplit if self.n < 2 || self.m < 2 => {
                fail("data splitting needs series of length >= 2".into())
            }
            _ => Ok(()),
        }
    }

    /// Parses a flat TOML document; missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn with_method(&self, method: Method) -> Self {
        Self { method, ..self.clone() }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..self.clone() }
    }
}
