//! Run configuration: one flat `key = value` file format whose keys mirror the
//! command-line flags.
//!
//! Lines starting with `#` and blank lines are ignored. Values run to the end
//! of the line and are trimmed. Flags given on the command line override the
//! values read from `--config`.

use std::fmt;
use std::path::Path;

use causal_order::detector::ExcitationMode;
use causal_order::wiener::DensityBackend;

/// Error raised while reading a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Text form of a configuration value.
pub trait ConfigValue: Sized {
    fn render(&self) -> String;
    fn parse_value(s: &str) -> Result<Self, String>;
}

impl ConfigValue for f64 {
    fn render(&self) -> String {
        format!("{self:?}")
    }
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("{e}"))
    }
}

impl ConfigValue for u64 {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("{e}"))
    }
}

impl ConfigValue for usize {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("{e}"))
    }
}

impl ConfigValue for bool {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("{e}"))
    }
}

impl ConfigValue for String {
    fn render(&self) -> String {
        self.clone()
    }
    fn parse_value(s: &str) -> Result<Self, String> {
        Ok(s.to_string())
    }
}

impl ConfigValue for DensityBackend {
    fn render(&self) -> String {
        self.name().to_string()
    }
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("{e}"))
    }
}

impl ConfigValue for ExcitationMode {
    fn render(&self) -> String {
        match self {
            ExcitationMode::Full => "full".into(),
            ExcitationMode::Resonant => "resonant".into(),
        }
    }
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("{e}"))
    }
}

macro_rules! run_config {
    ($( $(#[$attr:meta])* $field:ident : $ty:ty = $default:expr, $key:literal, $help:literal; )*) => {
        /// Every parameter of every subcommand.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $( #[doc = $help] pub $field: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }

        /// Command-line flags; each one overrides the key of the same name.
        #[derive(clap::Args, Debug, Clone, Default)]
        pub struct Overrides {
            $( $(#[$attr])* #[arg(long = $key, global = true, allow_negative_numbers = true, help = $help)] pub $field: Option<$ty>, )*
        }

        impl RunConfig {
            pub const KEYS: &'static [&'static str] = &[$( $key, )*];

            pub fn apply(&mut self, o: &Overrides) {
                $( if let Some(v) = &o.$field { self.$field = v.clone(); } )*
            }

            pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
                match key {
                    $( $key => {
                        self.$field = <$ty as ConfigValue>::parse_value(value)
                            .map_err(|e| ConfigError(format!("key `{key}`: {e}")))?;
                    } )*
                    other => return Err(ConfigError(format!(
                        "unknown key `{other}` (known: {})",
                        Self::KEYS.join(", ")
                    ))),
                }
                Ok(())
            }

            /// Renders every key, one `key = value` line each.
            pub fn to_text(&self) -> String {
                let mut s = String::new();
                $( s.push_str(&format!("{} = {}\n", $key, ConfigValue::render(&self.$field))); )*
                s
            }
        }
    };
}

run_config! {
    seed: u64 = 1, "seed", "Master seed of the random streams";
    out: String = String::new(), "out", "CSV output path (empty: stdout)";
    summary: String = String::new(), "summary", "Summary JSON path (empty: next to --out, else stderr)";
    samples: usize = 100_000, "samples", "Monte Carlo sample count";
    tol: f64 = 1e-10, "tol", "Quadrature tolerance";
    backend: DensityBackend = DensityBackend::Paper, "backend", "First-passage density: paper | standard";
    mode: ExcitationMode = ExcitationMode::Full, "mode", "Excitation probability: full | resonant";

    w_plus: f64 = 0.5, "w-plus", "classical: fraction of positive momenta";
    density: String = "signed".to_string(), "density", "classical: signed | gaussian";
    p_mean: f64 = 0.0, "p-mean", "classical: mean momentum of the gaussian density";
    p_std: f64 = 1.0, "p-std", "classical: momentum spread";
    x0: f64 = -1.0, "x0", "classical: start position of both particles";
    mass: f64 = 1.0, "mass", "classical: particle mass";

    d1: f64 = 1.0, "d1", "wiener: diffusion constant of particle 1";
    d2: f64 = 1.0, "d2", "wiener: diffusion constant of particle 2";
    dist: f64 = 1.0, "dist", "wiener: start distance L";
    horizon: f64 = 5.0, "horizon", "wiener: path-sampling horizon T";
    dt: f64 = 2e-3, "dt", "wiener: path-sampling step";
    #[arg(num_args = 0..=1, default_missing_value = "true")]
    bridge: bool = true, "bridge", "wiener: Brownian-bridge crossing correction";

    delta_min: f64 = -4.0, "delta-min", "fig-q / fig-w: first delta";
    delta_max: f64 = 4.0, "delta-max", "fig-q / fig-w: last delta";
    delta_step: f64 = 0.05, "delta-step", "fig-q / fig-w: delta increment";
    panel: String = "delta".to_string(), "panel", "fig-w: delta (w vs delta) | ratio (w vs k0/sigma)";
    ratio: f64 = 10.0, "ratio", "fig-w: k0/sigma for the delta panel";
    delta: f64 = 1.0, "delta", "fig-w: delta for the ratio panel";
    ratio_min: f64 = 0.0, "ratio-min", "fig-w: first k0/sigma";
    ratio_max: f64 = 30.0, "ratio-max", "fig-w: last k0/sigma";
    ratio_step: f64 = 0.05, "ratio-step", "fig-w: k0/sigma increment";

    k0: f64 = 10.0, "k0", "toa: mean momentum";
    sigma: f64 = 1.0, "sigma", "toa: momentum spread";
    l1: f64 = 8.0, "l1", "toa: distance of particle 1";
    l2: f64 = 9.0, "l2", "toa: distance of particle 2";
    ell: f64 = 0.0, "ell", "toa: path difference of particle 1's superposition (0: none)";
    n_k: usize = 4096, "n-k", "toa: momentum grid points";

    omega1: f64 = 10.0, "omega1", "detector: level-1 energy";
    gamma: f64 = 0.02, "gamma", "detector: target decay rate Gamma_11 (fixes the couplings)";
    detuning: f64 = 30.0, "detuning", "detector: (Omega2 - Omega1) / Gamma_11";
    sigma_ratio: f64 = 0.7, "sigma-ratio", "detector: packet spread / Gamma_11";
    m: f64 = 1.0, "m", "detector: field mass";
    coupling1: f64 = 1.0, "coupling1", "detector: scale factor on lambda_1";
    coupling2: f64 = 1.0, "coupling2", "detector: scale factor on lambda_2";
    t_points: usize = 2000, "t-points", "detector: time samples on [0, horizon]";
    grid_points: usize = 256, "grid-points", "detector: momentum points per packet for --oracle";
    #[arg(num_args = 0..=1, default_missing_value = "true")]
    oracle: bool = false, "oracle", "detector: also integrate the momentum-grid equations";
}

impl RunConfig {
    /// Parses the file format described in the module documentation.
    pub fn parse_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| ConfigError(format!("line {}: {}", n + 1, e.0)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse_text(&c.to_text()).unwrap(), c);
        assert_eq!(c.to_text().lines().count(), RunConfig::KEYS.len());
    }

    #[test]
    fn comments_and_errors() {
        let c = RunConfig::parse_text("# note\n\nseed = 7\n  d1=2.5  \n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.d1, 2.5);
        assert!(RunConfig::parse_text("nope = 1").is_err());
        assert!(RunConfig::parse_text("seed 1").is_err());
        assert!(RunConfig::parse_text("seed = -1").is_err());
        assert!(RunConfig::parse_text("backend = other").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::parse_text("seed = 3\nd2 = 4").unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            ..Overrides::default()
        });
        assert_eq!((c.seed, c.d2), (9, 4.0));
    }

    proptest! {
        #[test]
        fn round_trip(
            seed in any::<u64>(),
            samples in any::<usize>(),
            tol in any::<f64>().prop_filter("finite", |x| x.is_finite()),
            d1 in any::<f64>().prop_filter("finite", |x| x.is_finite()),
            ell in -1e300f64..1e300,
            bridge in any::<bool>(),
            out in "[A-Za-z0-9_./-]{0,24}",
            standard in any::<bool>(),
            resonant in any::<bool>(),
        ) {
            let c = RunConfig {
                seed, samples, tol, d1, ell, bridge, out,
                backend: if standard { DensityBackend::Standard } else { DensityBackend::Paper },
                mode: if resonant { ExcitationMode::Resonant } else { ExcitationMode::Full },
                ..RunConfig::default()
            };
            prop_assert_eq!(RunConfig::parse_text(&c.to_text()).unwrap(), c);
        }
    }
}
