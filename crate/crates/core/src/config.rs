//! Scenario documents (TOML) and the range/grid/bracket strings accepted on
//! the command line.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_chain, Frame, GainModel, ModelError, PumpDrive, Resonator, ResonatorChain, Role,
};

/// Largest grid accepted from a config or a flag.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot parse scenario: {0}")]
    Syntax(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("invalid range `{input}`: {reason}")]
    Range { input: String, reason: &'static str },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSpec {
    pub omega_mhz: f64,
    pub role: Role,
    /// Damping rate for a passive resonator. For the active resonator it may
    /// be omitted and is then taken from the gain section.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_mhz: Option<f64>,
    #[serde(default)]
    pub intrinsic_loss_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_p_mhz: Option<f64>,
    /// ωp − ω₁.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_sqrt_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_watts: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum GainSpec {
    Constant {
        kappa2_mhz: f64,
    },
    Saturating {
        kappa20_mhz: f64,
        i_s: f64,
        #[serde(default)]
        gamma2_mhz: f64,
    },
}

impl GainSpec {
    pub fn to_model(self) -> GainModel {
        match self {
            GainSpec::Constant { kappa2_mhz } => GainModel::Constant { kappa2: kappa2_mhz },
            GainSpec::Saturating {
                kappa20_mhz,
                i_s,
                gamma2_mhz,
            } => GainModel::Saturating {
                kappa20: kappa20_mhz,
                saturation: i_s,
                gamma2: gamma2_mhz,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuneTarget {
    J2,
    J1Marginal,
}

/// Per-command defaults; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_range_mhz: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j1_grid_mhz: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j2_grid_mhz: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune: Option<TuneTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_mhz: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Frame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_m: Option<f64>,
}

/// The document as written, kept for echoing into result sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub resonators: Vec<ResonatorSpec>,
    pub couplings_mhz: Vec<f64>,
    pub kappa_ex_mhz: f64,
    pub pump: PumpSpec,
    pub gain: GainSpec,
    #[serde(default)]
    pub run: RunSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    pub chain: ResonatorChain,
    pub pump: PumpDrive,
    pub gain: GainModel,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let doc: ScenarioDoc = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
        Self::from_doc(doc)
    }

    pub fn from_doc(doc: ScenarioDoc) -> Result<Self, ConfigError> {
        let gain = doc.gain.to_model();
        gain.validate()?;
        let resonators = doc
            .resonators
            .iter()
            .enumerate()
            .map(|(k, spec)| resonator(k, spec, &gain))
            .collect::<Result<Vec<_>, _>>()?;
        let chain = ResonatorChain::new(resonators, doc.couplings_mhz.clone(), doc.kappa_ex_mhz);
        validate_chain(&chain)?;
        let pump = pump(&doc.pump, &chain)?;
        check_run(&doc.run)?;
        Ok(Scenario { doc, chain, pump, gain })
    }

    pub fn name(&self) -> &str {
        self.doc.name.as_deref().unwrap_or("scenario")
    }
}

fn resonator(index: usize, spec: &ResonatorSpec, gain: &GainModel) -> Result<Resonator, ConfigError> {
    let rate = match (spec.role, spec.rate_mhz) {
        (Role::Passive, Some(rate)) => rate,
        (Role::Passive, None) => {
            return Err(ConfigError::Invalid(format!(
                "resonator {} is passive and needs rate_mhz",
                index + 1
            )))
        }
        (Role::Active, None) => gain.unsaturated_gain(),
        (Role::Active, Some(rate)) => {
            if let GainModel::Constant { kappa2 } = *gain {
                if rate != kappa2 {
                    return Err(ConfigError::Invalid(format!(
                        "active resonator rate_mhz = {rate} conflicts with gain.kappa2_mhz = {kappa2}"
                    )));
                }
            }
            rate
        }
    };
    Ok(Resonator {
        omega: spec.omega_mhz,
        role: spec.role,
        rate,
        intrinsic_loss: spec.intrinsic_loss_mhz,
    })
}

fn pump(spec: &PumpSpec, chain: &ResonatorChain) -> Result<PumpDrive, ConfigError> {
    let omega_p = match (spec.omega_p_mhz, spec.detuning_mhz) {
        (Some(w), None) => w,
        (None, Some(d)) => chain.resonators[0].omega + d,
        (None, None) => chain.resonators[0].omega,
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid(
                "pump takes omega_p_mhz or detuning_mhz, not both".into(),
            ))
        }
    };
    let drive = match (spec.amplitude_sqrt_mhz, spec.power_watts, spec.wavelength_m) {
        (Some(a), None, _) => PumpDrive::new(omega_p, a)?,
        (None, Some(p), Some(l)) => PumpDrive::from_power(omega_p, p, l)?,
        (None, Some(_), None) => {
            return Err(ConfigError::Invalid("pump.power_watts needs pump.wavelength_m".into()))
        }
        (Some(_), Some(_), _) => {
            return Err(ConfigError::Invalid(
                "pump takes amplitude_sqrt_mhz or power_watts, not both".into(),
            ))
        }
        (None, None, _) => {
            return Err(ConfigError::Invalid(
                "pump needs amplitude_sqrt_mhz or power_watts".into(),
            ))
        }
    };
    Ok(drive)
}

fn check_run(run: &RunSpec) -> Result<(), ConfigError> {
    let finite_positive = |v: f64| v.is_finite() && v > 0.0;
    if let Some(t) = run.t_end_us {
        if !(t.is_finite() && t >= 0.0) {
            return Err(ConfigError::Invalid("run.t_end_us must be finite and non-negative".into()));
        }
    }
    if let Some([lo, hi]) = run.x_range_mhz {
        check_interval(lo, hi, "run.x_range_mhz")?;
    }
    if let Some(n) = run.points {
        if n == 0 || n > MAX_GRID_POINTS {
            return Err(ConfigError::Invalid("run.points out of range".into()));
        }
    }
    for grid in [&run.j1_grid_mhz, &run.j2_grid_mhz].into_iter().flatten() {
        grid.validate()?;
    }
    if let Some([lo, hi]) = run.bracket_mhz {
        check_interval(lo, hi, "run.bracket_mhz")?;
    }
    if let Some(tol) = run.tol {
        if !finite_positive(tol) {
            return Err(ConfigError::Invalid("run.tol must be positive".into()));
        }
    }
    if let Some(l) = run.wavelength_m {
        if !finite_positive(l) {
            return Err(ConfigError::Invalid("run.wavelength_m must be positive".into()));
        }
    }
    Ok(())
}

fn check_interval(lo: f64, hi: f64, what: &str) -> Result<(), ConfigError> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{what} must be finite with lo <= hi")))
    }
}

/// Uniform grid `lo, …, hi` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64, usize)", into = "(f64, f64, usize)")]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl TryFrom<(f64, f64, usize)> for GridSpec {
    type Error = ConfigError;

    fn try_from((lo, hi, n): (f64, f64, usize)) -> Result<Self, Self::Error> {
        let grid = GridSpec { lo, hi, n };
        grid.validate()?;
        Ok(grid)
    }
}

impl From<GridSpec> for (f64, f64, usize) {
    fn from(g: GridSpec) -> Self {
        (g.lo, g.hi, g.n)
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_interval(self.lo, self.hi, "grid")?;
        if self.n == 0 || self.n > MAX_GRID_POINTS {
            return Err(ConfigError::Invalid(format!(
                "grid needs between 1 and {MAX_GRID_POINTS} points"
            )));
        }
        if self.n == 1 && self.lo != self.hi {
            return Err(ConfigError::Invalid("a one-point grid needs lo == hi".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n)
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive; the endpoints are exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

fn range_error(input: &str, reason: &'static str) -> ConfigError {
    ConfigError::Range {
        input: input.to_string(),
        reason,
    }
}

fn parse_number(input: &str, field: &str) -> Result<f64, ConfigError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| range_error(input, "not a number"))?;
    if !v.is_finite() {
        return Err(range_error(input, "not finite"));
    }
    Ok(v)
}

/// Parses `LO:HI` with LO ≤ HI.
pub fn parse_range(input: &str) -> Result<(f64, f64), ConfigError> {
    let mut parts = input.split(':');
    let (Some(lo), Some(hi), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(range_error(input, "expected LO:HI"));
    };
    let (lo, hi) = (parse_number(input, lo)?, parse_number(input, hi)?);
    if lo > hi {
        return Err(range_error(input, "LO exceeds HI"));
    }
    Ok((lo, hi))
}

/// Parses `LO:HI` with 0 < LO < HI, as needed by the root searches.
pub fn parse_bracket(input: &str) -> Result<(f64, f64), ConfigError> {
    let (lo, hi) = parse_range(input)?;
    if !(lo > 0.0 && hi > lo) {
        return Err(range_error(input, "bracket needs 0 < LO < HI"));
    }
    Ok((lo, hi))
}

/// Parses `LO:HI:N`.
pub fn parse_grid(input: &str) -> Result<GridSpec, ConfigError> {
    let mut parts = input.split(':');
    let (Some(lo), Some(hi), Some(n), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
        return Err(range_error(input, "expected LO:HI:N"));
    };
    let n: usize = n.trim().parse().map_err(|_| range_error(input, "N is not a count"))?;
    let grid = GridSpec {
        lo: parse_number(input, lo)?,
        hi: parse_number(input, hi)?,
        n,
    };
    grid.validate().map_err(|_| range_error(input, "needs LO <= HI and 1 <= N (N = 1 only if LO == HI)"))?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INSET: &str = r#"
        name = "inset"
        couplings_mhz = [2.0, 1.0]
        kappa_ex_mhz = 5.0

        [[resonators]]
        omega_mhz = 0.0
        role = "passive"
        rate_mhz = 10.0
        intrinsic_loss_mhz = 5.0

        [[resonators]]
        omega_mhz = 0.0
        role = "active"

        [[resonators]]
        omega_mhz = 0.0
        role = "passive"
        rate_mhz = 5.0

        [pump]
        detuning_mhz = 0.0
        amplitude_sqrt_mhz = 1.0

        [gain]
        model = "constant"
        kappa2_mhz = 0.2
    "#;

    #[test]
    fn parses_inset_document() {
        let s = Scenario::from_toml_str(INSET).unwrap();
        assert_eq!(s.chain, ResonatorChain::degenerate_trio(0.0, 10.0, 5.0, 0.2, 5.0, 2.0, 1.0));
        assert_eq!(s.pump, PumpDrive::new(0.0, 1.0).unwrap());
        assert_eq!(s.gain, GainModel::Constant { kappa2: 0.2 });
        assert_eq!(s.name(), "inset");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = INSET.replace("kappa_ex_mhz = 5.0", "kappa_ex_mhz = 5.0\nkappa_ex = 5.0");
        assert!(matches!(Scenario::from_toml_str(&text), Err(ConfigError::Syntax(_))));
        let text = INSET.replace("kappa2_mhz = 0.2", "kappa2_mhz = 0.2\nextra = 1");
        assert!(matches!(Scenario::from_toml_str(&text), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn chain_is_validated() {
        let text = INSET.replace("couplings_mhz = [2.0, 1.0]", "couplings_mhz = [2.0]");
        assert!(matches!(
            Scenario::from_toml_str(&text),
            Err(ConfigError::Model(ModelError::CouplingCountMismatch { .. }))
        ));
        let text = INSET.replace("kappa_ex_mhz = 5.0", "kappa_ex_mhz = 11.0");
        assert!(matches!(
            Scenario::from_toml_str(&text),
            Err(ConfigError::Model(ModelError::ExternalExceedsTotal { .. }))
        ));
    }

    #[test]
    fn conflicting_active_rate() {
        let text = INSET.replace("role = \"active\"", "role = \"active\"\nrate_mhz = 0.3");
        assert!(matches!(Scenario::from_toml_str(&text), Err(ConfigError::Invalid(_))));
        let text = INSET.replace("role = \"active\"", "role = \"active\"\nrate_mhz = 0.2");
        assert!(Scenario::from_toml_str(&text).is_ok());
    }

    #[test]
    fn pump_from_power() {
        let text = INSET.replace(
            "amplitude_sqrt_mhz = 1.0",
            "power_watts = 12.8e-6\nwavelength_m = 1550e-9",
        );
        let s = Scenario::from_toml_str(&text).unwrap();
        assert!((s.pump.amplitude / 1e4 - 1.0).abs() < 1e-2);
        let text = INSET.replace("amplitude_sqrt_mhz = 1.0", "power_watts = 1e-6");
        assert!(matches!(Scenario::from_toml_str(&text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn run_section_grids() {
        let text = format!("{INSET}\n[run]\nj2_grid_mhz = [0.1, 1.0, 10]\npoints = 5\n");
        let s = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(s.doc.run.j2_grid_mhz, Some(GridSpec { lo: 0.1, hi: 1.0, n: 10 }));
        let text = format!("{INSET}\n[run]\nj2_grid_mhz = [1.0, 0.1, 10]\n");
        assert!(Scenario::from_toml_str(&text).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let s = Scenario::from_toml_str(INSET).unwrap();
        let text = toml::to_string(&s.doc).unwrap();
        assert_eq!(Scenario::from_toml_str(&text).unwrap(), s);
    }

    #[test]
    fn range_strings() {
        assert_eq!(parse_range("-1:2.5").unwrap(), (-1.0, 2.5));
        assert_eq!(parse_range("0:0").unwrap(), (0.0, 0.0));
        for bad in ["", "1", "2:1", "a:b", "1:2:3", "nan:1", "-inf:0"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_bracket("0.01:0.3").unwrap(), (0.01, 0.3));
        assert!(parse_bracket("0:1").is_err());
        assert!(parse_bracket("1:1").is_err());
    }

    #[test]
    fn grid_strings() {
        let g = parse_grid("0:1:5").unwrap();
        assert_eq!(g.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.3:0.3:1").unwrap().values(), vec![0.3]);
        for bad in ["0:1", "0:1:0", "0:1:1", "1:0:3", "0:1:-2", "0:1:2:3", "0:1:99999999999"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }
}
