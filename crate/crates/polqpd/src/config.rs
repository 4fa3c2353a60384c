//! Run configuration: a TOML file, overridden by command-line flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "POLQPD_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "polqpd-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Charfn,
    Pqpd,
    Simulate,
    Reconstruct,
    Negativity,
    Figures,
}

/// Everything a run depends on. Serialized in full next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct RunConfig {
    pub command: Option<Command>,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    /// Shots per setting; 0 selects exact distributions.
    pub shots: u64,
    /// Regularization of the linearly-polarized `W23` rings.
    pub gamma: f64,
    pub state: StateSpec,
    pub detector: DetectorSpec,
    pub highlight: Option<HighlightSpec>,
    pub grid: GridSpec,
    pub fourier: FourierSpec,
    pub settings: SettingsSpec,
    pub charfn: CharfnSpec,
    pub pqpd: PqpdSpec,
    pub negativity: NegativitySpec,
    pub reconstruct: ReconstructSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            output_dir: None,
            seed: 1,
            shots: 0,
            gamma: 1e-3,
            state: StateSpec::Fock { n: 1 },
            detector: DetectorSpec::default(),
            highlight: None,
            grid: GridSpec::default(),
            fourier: FourierSpec::default(),
            settings: SettingsSpec::default(),
            charfn: CharfnSpec::default(),
            pqpd: PqpdSpec::default(),
            negativity: NegativitySpec::default(),
            reconstruct: ReconstructSpec::default(),
        }
    }
}

/// Signal state in the H mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Vacuum,
    Fock {
        n: u32,
    },
    Coherent {
        alpha: Complex64,
    },
    SqueezedVacuum {
        r: f64,
    },
    SqueezedFock1 {
        r: f64,
    },
    #[serde(rename_all = "kebab-case")]
    Poissonian {
        mean: f64,
        n_max: Option<usize>,
    },
    /// Photon-number mixture `probs[n]`.
    Mixture {
        probs: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSpec {
    pub eta: f64,
    pub sigma: f64,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self {
            eta: 1.0,
            sigma: 0.0,
        }
    }
}

/// Highlighting amplitude in the V mode, before loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HighlightSpec {
    pub alpha0: Complex64,
}

/// Square output grid `[min, max]^2`; `slice` is the coordinate held fixed
/// for planar cuts of three-dimensional functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub slice: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min: -4.0,
            max: 4.0,
            count: 161,
            slice: 0.0,
        }
    }
}

/// Tomographic reconstruction grid and ray sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct FourierSpec {
    pub n: usize,
    pub du: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub max_angular_gap: f64,
    pub decay_tolerance: f64,
}

impl Default for FourierSpec {
    fn default() -> Self {
        Self {
            n: 256,
            du: 0.01,
            lambda_max: 0.55,
            lambda_count: 128,
            max_angular_gap: PI / 6.0,
            decay_tolerance: 1e-6,
        }
    }
}

/// Waveplate schedule. Scans cover `phi` in `[0, pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SettingsSpec {
    /// `theta = pi/2`, `phi_j = j pi / count`.
    PhiScan {
        count: usize,
    },
    /// `theta_i = i pi / (n_theta - 1)`, `phi_j = j pi / n_phi`.
    #[serde(rename_all = "kebab-case")]
    Lattice {
        n_theta: usize,
        n_phi: usize,
    },
    Single {
        theta: f64,
        phi: f64,
    },
    /// Explicit `[theta, phi]` pairs.
    List {
        points: Vec<[f64; 2]>,
    },
}

impl Default for SettingsSpec {
    fn default() -> Self {
        SettingsSpec::PhiScan { count: 36 }
    }
}

impl SettingsSpec {
    pub fn angles(&self) -> Vec<(f64, f64)> {
        match self {
            SettingsSpec::PhiScan { count } => (0..*count)
                .map(|j| (PI / 2.0, PI * j as f64 / *count as f64))
                .collect(),
            SettingsSpec::Lattice { n_theta, n_phi } => {
                let mut out = Vec::new();
                for i in 0..*n_theta {
                    let theta = PI * i as f64 / (n_theta - 1).max(1) as f64;
                    for j in 0..*n_phi {
                        out.push((theta, PI * j as f64 / *n_phi as f64));
                    }
                }
                out
            }
            SettingsSpec::Single { theta, phi } => vec![(*theta, *phi)],
            SettingsSpec::List { points } => points.iter().map(|p| (p[0], p[1])).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CharFunction {
    /// Symmetrically ordered `chi_s(z)`, `z = u2 + i u3`.
    Symmetric,
    /// Linearly polarized light after loss.
    Lp,
    /// Coherent signal and highlighting beam.
    TwoModeCoherent,
    HighlightedExact,
    HighlightedAsymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharfnSpec {
    pub function: CharFunction,
    pub tolerance: f64,
}

impl Default for CharfnSpec {
    fn default() -> Self {
        Self {
            function: CharFunction::Lp,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Surface {
    /// Radial `w_m(S23)`.
    WmProfile,
    /// `W23(S2, S3)` of the linearly polarized state.
    WmMap,
    /// Highlighted squeezed vacuum, normalized coordinates.
    Sqz0,
    /// Highlighted squeezed single photon, normalized coordinates.
    Sqz1,
    /// Smoothed PQPD on the plane `S1 = slice`.
    SmoothedLp,
    /// Highlighted `W23` of any single-mode state via its Wigner function.
    Highlighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct PqpdSpec {
    pub surface: Surface,
    pub m: u32,
    pub r: f64,
    /// Overrides the inefficiency derived from the detector and highlighting.
    pub eps2: Option<f64>,
    pub wigner_n: usize,
    pub wigner_extent: f64,
}

impl Default for PqpdSpec {
    fn default() -> Self {
        Self {
            surface: Surface::Sqz1,
            m: 1,
            r: 0.0,
            eps2: None,
            wigner_n: 512,
            wigner_extent: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NegativitySpec {
    pub r: Vec<f64>,
    pub eps2: Vec<f64>,
    pub tolerance: f64,
}

impl Default for NegativitySpec {
    fn default() -> Self {
        Self {
            r: vec![0.0, 2f64.ln()],
            eps2: (0..=10).map(|k| k as f64 / 10.0).collect(),
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructSpec {
    /// Tomogram files; empty means simulate from the state and schedule.
    pub inputs: Vec<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Flag, then config file, then [`OUTPUT_DIR_ENV`], then [`DEFAULT_OUTPUT_DIR`].
    pub fn resolve_output_dir(&mut self) {
        if self.output_dir.is_none() {
            self.output_dir = Some(
                std::env::var_os(OUTPUT_DIR_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            );
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    /// Range checks that do not need the numerical core.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let d = &self.detector;
        if !(d.eta > 0.0 && d.eta <= 1.0) {
            return bad(format!("detector.eta = {} must lie in (0, 1]", d.eta));
        }
        if !(d.sigma >= 0.0 && d.sigma.is_finite()) {
            return bad(format!("detector.sigma = {} must be non-negative", d.sigma));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma = {} must be non-negative", self.gamma));
        }
        let g = &self.grid;
        if !(g.min < g.max) || g.count < 2 {
            return bad(format!(
                "grid needs min < max and count >= 2, got [{}, {}] x {}",
                g.min, g.max, g.count
            ));
        }
        if self.settings.angles().is_empty() {
            return bad("settings schedule is empty".into());
        }
        Ok(())
    }
}

fn split_kind(s: &str) -> (&str, &str) {
    match s.split_once(':') {
        Some((k, rest)) => (k.trim(), rest.trim()),
        None => (s.trim(), ""),
    }
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect()
}

fn expect_len(kind: &str, v: &[f64], n: usize) -> Result<(), String> {
    if v.len() == n {
        Ok(())
    } else {
        Err(format!("`{kind}` takes {n} number(s), got {}", v.len()))
    }
}

/// `vacuum`, `fock:N`, `coherent:RE[,IM]`, `squeezed-vacuum:R`,
/// `squeezed-fock1:R`, `poissonian:MEAN`, `mixture:P0,P1,...`.
impl FromStr for StateSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = split_kind(s);
        let v = numbers(rest)?;
        Ok(match kind {
            "vacuum" => StateSpec::Vacuum,
            "fock" => {
                expect_len(kind, &v, 1)?;
                if v[0] < 0.0 || v[0].fract() != 0.0 {
                    return Err(format!("fock needs a photon number, got {}", v[0]));
                }
                StateSpec::Fock { n: v[0] as u32 }
            }
            "coherent" => StateSpec::Coherent {
                alpha: parse_complex_parts(&v)?,
            },
            "squeezed-vacuum" => {
                expect_len(kind, &v, 1)?;
                StateSpec::SqueezedVacuum { r: v[0] }
            }
            "squeezed-fock1" => {
                expect_len(kind, &v, 1)?;
                StateSpec::SqueezedFock1 { r: v[0] }
            }
            "poissonian" => {
                expect_len(kind, &v, 1)?;
                StateSpec::Poissonian {
                    mean: v[0],
                    n_max: None,
                }
            }
            "mixture" => StateSpec::Mixture { probs: v },
            other => return Err(format!("unknown state kind `{other}`")),
        })
    }
}

/// `phi-scan:COUNT`, `lattice:N_THETA,N_PHI`, `single:THETA,PHI`.
impl FromStr for SettingsSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = split_kind(s);
        let v = numbers(rest)?;
        let count = |x: f64| -> Result<usize, String> {
            if x >= 1.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(format!("expected a positive count, got {x}"))
            }
        };
        Ok(match kind {
            "phi-scan" => {
                expect_len(kind, &v, 1)?;
                SettingsSpec::PhiScan {
                    count: count(v[0])?,
                }
            }
            "lattice" => {
                expect_len(kind, &v, 2)?;
                SettingsSpec::Lattice {
                    n_theta: count(v[0])?,
                    n_phi: count(v[1])?,
                }
            }
            "single" => {
                expect_len(kind, &v, 2)?;
                SettingsSpec::Single {
                    theta: v[0],
                    phi: v[1],
                }
            }
            other => return Err(format!("unknown settings schedule `{other}`")),
        })
    }
}

fn parse_complex_parts(v: &[f64]) -> Result<Complex64, String> {
    match v {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(format!("expected RE or RE,IM, got {} numbers", v.len())),
    }
}

/// `RE` or `RE,IM`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    parse_complex_parts(&numbers(s)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_named() {
        for text in [
            "sed = 3",
            "[detector]\neta = 0.5\nnoise = 1",
            "[state]\nkind = \"fock\"\nn = 1\nm = 2",
        ] {
            let err = RunConfig::from_toml_str(text).unwrap_err().to_string();
            let key = ["sed", "noise", "m"]
                .into_iter()
                .find(|k| text.contains(&format!("{k} =")))
                .unwrap();
            assert!(err.contains(&format!("`{key}`")), "{err}");
        }
    }

    #[test]
    fn parses_a_full_file() {
        let c = RunConfig::from_toml_str(
            r#"
            seed = 7
            shots = 1000
            [state]
            kind = "coherent"
            alpha = [1.0, 0.5]
            [highlight]
            alpha0 = [10.0, 0.0]
            [settings]
            kind = "lattice"
            n-theta = 3
            n-phi = 2
            [fourier]
            lambda-max = 1.0
            [pqpd]
            surface = "wm-profile"
            eps2 = 0.3
            "#,
        )
        .unwrap();
        assert_eq!(
            c.state,
            StateSpec::Coherent {
                alpha: Complex64::new(1.0, 0.5)
            }
        );
        assert_eq!(c.settings.angles().len(), 6);
        assert_eq!(c.fourier.lambda_max, 1.0);
        assert_eq!(c.pqpd.surface, Surface::WmProfile);
        assert_eq!(c.pqpd.eps2, Some(0.3));
    }

    #[test]
    fn flag_syntax() {
        assert_eq!(
            "fock:2".parse::<StateSpec>().unwrap(),
            StateSpec::Fock { n: 2 }
        );
        assert_eq!(
            "coherent:1,-0.5".parse::<StateSpec>().unwrap(),
            StateSpec::Coherent {
                alpha: Complex64::new(1.0, -0.5)
            }
        );
        assert_eq!("vacuum".parse::<StateSpec>().unwrap(), StateSpec::Vacuum);
        assert!("fock:1.5".parse::<StateSpec>().is_err());
        assert!("laser:1".parse::<StateSpec>().is_err());
        assert_eq!(
            "phi-scan:12"
                .parse::<SettingsSpec>()
                .unwrap()
                .angles()
                .len(),
            12
        );
        assert_eq!(
            "single:1.5,0.25".parse::<SettingsSpec>().unwrap(),
            SettingsSpec::Single {
                theta: 1.5,
                phi: 0.25
            }
        );
        assert_eq!(parse_complex("3").unwrap(), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn validation_rejects_bad_ranges() {
        let mut c = RunConfig::default();
        c.detector.eta = 0.0;
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let mut c = RunConfig::default();
        c.grid.count = 1;
        assert!(c.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
