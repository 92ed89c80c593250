//! Line-oriented `key = value` scenario files.
//!
//! A scenario file names a population and one measurement model per
//! predictor and setting:
//!
//! ```text
//! id = glucose_switch
//! population = single        # single | two_pred
//! n_deriv = 2000
//! n_valid = 2000
//!
//! [derivation]
//! var_eps = 1.0              # shorthand: applies to both outcome classes
//!
//! [validation]
//! psi0 = 0                   # class-specific keys: 0 = non-cases, 1 = cases
//! theta0 = 1
//! var_eps0 = 1.0
//! psi1 = 0.25
//! theta1 = 1
//! var_eps1 = 0.25
//! ```
//!
//! Top-level keys: `id`, `population`, `rho`, `n_deriv`, `n_valid`.
//! Measurement sections: `[derivation]` and `[validation]` apply to every
//! predictor; `[derivation.K]` / `[validation.K]` override predictor `K`
//! (1-based) for two-predictor populations. Within a section, `psi`,
//! `theta`, and `var_eps` set both classes at once, and the suffixed forms
//! set one class. Missing parameters default to an exact measurement
//! (`psi = 0`, `theta = 1`, `var_eps = 0`). Unknown keys, unknown sections,
//! and duplicate keys are rejected with their line number.

use heterosim_core::cohort::PopulationKind;
use heterosim_core::measurement::{ClassParams, MeasurementModel};
use heterosim_core::simgrid::{Family, Scenario, DEFAULT_SAMPLE_SIZE};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// A fully resolved custom scenario definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub id: String,
    pub population: PopulationKind,
    pub rho: f64,
    pub n_deriv: usize,
    pub n_valid: usize,
    pub deriv: Vec<MeasurementModel>,
    pub valid: Vec<MeasurementModel>,
}

impl ScenarioSpec {
    pub fn predictor_count(&self) -> usize {
        match self.population {
            PopulationKind::Single => 1,
            PopulationKind::TwoPredictor => 2,
        }
    }

    /// Convert into a runnable scenario.
    pub fn into_scenario(self) -> Scenario {
        let family = match self.population {
            PopulationKind::Single => {
                if self
                    .deriv
                    .iter()
                    .chain(&self.valid)
                    .any(MeasurementModel::is_differential)
                {
                    Family::SingleDifferential
                } else {
                    Family::Single
                }
            }
            PopulationKind::TwoPredictor => Family::TwoPredictorBothHeterogeneous,
        };
        Scenario {
            id: self.id,
            family,
            rho: self.rho,
            deriv_models: self.deriv,
            valid_models: self.valid,
            n_deriv: self.n_deriv,
            n_valid: self.n_valid,
        }
    }
}

#[derive(Default)]
struct RawSection {
    entries: Vec<(usize, String, String)>,
}

fn split_sections(text: &str) -> Result<BTreeMap<String, RawSection>, ConfigError> {
    let mut sections: BTreeMap<String, RawSection> = BTreeMap::new();
    let mut current = String::new();
    sections.entry(current.clone()).or_default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(ConfigError::at(line_no, "unterminated section header"));
            };
            current = name.trim().to_string();
            if sections.contains_key(&current) {
                return Err(ConfigError::at(
                    line_no,
                    format!("section [{current}] appears twice"),
                ));
            }
            sections.insert(current.clone(), RawSection::default());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::at(
                line_no,
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let section = sections.get_mut(&current).expect("current section exists");
        if section.entries.iter().any(|(_, k, _)| *k == key) {
            return Err(ConfigError::at(line_no, format!("duplicate key `{key}`")));
        }
        section.entries.push((line_no, key, value));
    }
    Ok(sections)
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::at(line, format!("invalid number for `{key}`: `{value}`")))
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::at(line, format!("invalid count for `{key}`: `{value}`")))
}

#[derive(Clone, Copy)]
struct RawClass {
    psi: f64,
    theta: f64,
    var_eps: f64,
}

impl Default for RawClass {
    fn default() -> Self {
        Self {
            psi: 0.0,
            theta: 1.0,
            var_eps: 0.0,
        }
    }
}

fn section_model(section: &RawSection) -> Result<MeasurementModel, ConfigError> {
    let mut noncase = RawClass::default();
    let mut case = RawClass::default();
    for (line, key, value) in &section.entries {
        let v = parse_f64(*line, key, value)?;
        match key.as_str() {
            "psi" => {
                noncase.psi = v;
                case.psi = v;
            }
            "theta" => {
                noncase.theta = v;
                case.theta = v;
            }
            "var_eps" => {
                noncase.var_eps = v;
                case.var_eps = v;
            }
            "psi0" => noncase.psi = v,
            "theta0" => noncase.theta = v,
            "var_eps0" => noncase.var_eps = v,
            "psi1" => case.psi = v,
            "theta1" => case.theta = v,
            "var_eps1" => case.var_eps = v,
            other => {
                return Err(ConfigError::at(
                    *line,
                    format!("unknown measurement key `{other}`"),
                ))
            }
        }
    }
    let line = section.entries.first().map_or(0, |(l, _, _)| *l);
    let build = |c: RawClass| {
        ClassParams::new(c.psi, c.theta, c.var_eps).map_err(|e| ConfigError::at(line, e.to_string()))
    };
    Ok(MeasurementModel::differential(build(noncase)?, build(case)?))
}

/// Parse a scenario definition from text.
pub fn parse_scenario_str(text: &str) -> Result<ScenarioSpec, ConfigError> {
    let sections = split_sections(text)?;

    let mut id = None;
    let mut population = PopulationKind::Single;
    let mut rho = 0.0;
    let mut n_deriv = DEFAULT_SAMPLE_SIZE;
    let mut n_valid = DEFAULT_SAMPLE_SIZE;
    for (line, key, value) in &sections[""].entries {
        match key.as_str() {
            "id" => id = Some(value.clone()),
            "population" => {
                population = match value.as_str() {
                    "single" => PopulationKind::Single,
                    "two_pred" => PopulationKind::TwoPredictor,
                    other => {
                        return Err(ConfigError::at(
                            *line,
                            format!("unknown population `{other}`; use single or two_pred"),
                        ))
                    }
                }
            }
            "rho" => rho = parse_f64(*line, key, value)?,
            "n_deriv" => n_deriv = parse_usize(*line, key, value)?,
            "n_valid" => n_valid = parse_usize(*line, key, value)?,
            other => {
                return Err(ConfigError::at(*line, format!("unknown key `{other}`")));
            }
        }
    }
    let Some(id) = id else {
        return Err(ConfigError::Invalid("missing required key `id`".into()));
    };
    if n_deriv == 0 || n_valid == 0 {
        return Err(ConfigError::Invalid("sample sizes must be positive".into()));
    }

    let p = match population {
        PopulationKind::Single => 1,
        PopulationKind::TwoPredictor => 2,
    };
    let models = |base_name: &str| -> Result<Vec<MeasurementModel>, ConfigError> {
        let base = sections
            .get(base_name)
            .map(section_model)
            .transpose()?
            .unwrap_or_else(MeasurementModel::exact);
        (1..=p)
            .map(|k| {
                sections
                    .get(&format!("{base_name}.{k}"))
                    .map(section_model)
                    .transpose()
                    .map(|override_model| override_model.unwrap_or(base))
            })
            .collect()
    };
    let deriv = models("derivation")?;
    let valid = models("validation")?;

    for name in sections.keys() {
        let known = name.is_empty()
            || name == "derivation"
            || name == "validation"
            || (1..=p)
                .any(|k| *name == format!("derivation.{k}") || *name == format!("validation.{k}"));
        if !known {
            return Err(ConfigError::Invalid(format!("unknown section [{name}]")));
        }
    }

    // two-predictor correlations are restricted by the standard population
    // definitions; fail here rather than at run time
    if population == PopulationKind::TwoPredictor
        && heterosim_core::cohort::standard_population(population, rho).is_err()
    {
        return Err(ConfigError::Invalid(format!(
            "unsupported rho {rho}; two-predictor populations accept 0, 0.5 or 0.9"
        )));
    }

    Ok(ScenarioSpec {
        id,
        population,
        rho,
        n_deriv,
        n_valid,
        deriv,
        valid,
    })
}

/// Parse a scenario definition from a file.
pub fn parse_scenario_file(path: &Path) -> Result<ScenarioSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario_str(&text)
}

fn write_model(out: &mut String, name: &str, model: &MeasurementModel) {
    let _ = writeln!(out, "[{name}]");
    let nc = model.params_noncase();
    let c = model.params_case();
    if model.is_differential() {
        let _ = writeln!(out, "psi0 = {}", nc.psi);
        let _ = writeln!(out, "theta0 = {}", nc.theta);
        let _ = writeln!(out, "var_eps0 = {}", nc.var_eps);
        let _ = writeln!(out, "psi1 = {}", c.psi);
        let _ = writeln!(out, "theta1 = {}", c.theta);
        let _ = writeln!(out, "var_eps1 = {}", c.var_eps);
    } else {
        let _ = writeln!(out, "psi = {}", nc.psi);
        let _ = writeln!(out, "theta = {}", nc.theta);
        let _ = writeln!(out, "var_eps = {}", nc.var_eps);
    }
}

/// Render a scenario spec in the config format; `parse_scenario_str` returns
/// an equal spec.
pub fn serialize_scenario(spec: &ScenarioSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "id = {}", spec.id);
    let _ = writeln!(
        out,
        "population = {}",
        match spec.population {
            PopulationKind::Single => "single",
            PopulationKind::TwoPredictor => "two_pred",
        }
    );
    let _ = writeln!(out, "rho = {}", spec.rho);
    let _ = writeln!(out, "n_deriv = {}", spec.n_deriv);
    let _ = writeln!(out, "n_valid = {}", spec.n_valid);
    if spec.predictor_count() == 1 {
        out.push('\n');
        write_model(&mut out, "derivation", &spec.deriv[0]);
        out.push('\n');
        write_model(&mut out, "validation", &spec.valid[0]);
    } else {
        for (k, m) in spec.deriv.iter().enumerate() {
            out.push('\n');
            write_model(&mut out, &format!("derivation.{}", k + 1), m);
        }
        for (k, m) in spec.valid.iter().enumerate() {
            out.push('\n');
            write_model(&mut out, &format!("validation.{}", k + 1), m);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_minimal_single_scenario() {
        let spec = parse_scenario_str(
            "id = demo\n\n[derivation]\nvar_eps = 1.0\n\n[validation]\npsi = 0.25\ntheta = 2\nvar_eps = 0.5\n",
        )
        .unwrap();
        assert_eq!(spec.id, "demo");
        assert_eq!(spec.n_deriv, 2000);
        assert!(spec.deriv[0].is_random());
        assert!(spec.valid[0].is_systematic());
        assert_eq!(spec.valid[0].params_case().theta, 2.0);
    }

    #[test]
    fn class_specific_keys_make_a_differential_model() {
        let spec =
            parse_scenario_str("id = d\n[validation]\nvar_eps0 = 1.0\nvar_eps1 = 0.25\n").unwrap();
        assert!(spec.valid[0].is_differential());
        let scenario = spec.into_scenario();
        assert_eq!(scenario.family, Family::SingleDifferential);
    }

    #[test]
    fn shorthand_with_class_override() {
        let spec =
            parse_scenario_str("id = d\n[validation]\nvar_eps = 1.0\nvar_eps1 = 4.0\n").unwrap();
        assert_eq!(spec.valid[0].params_noncase().var_eps, 1.0);
        assert_eq!(spec.valid[0].params_case().var_eps, 4.0);
    }

    #[test]
    fn rejects_unknown_keys_with_line_numbers() {
        let err = parse_scenario_str("id = x\nbogus = 1\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Parse {
                line: 2,
                message: "unknown key `bogus`".into()
            }
        );
        let err = parse_scenario_str("id = x\n[validation]\nfoo = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }));
    }

    #[test]
    fn rejects_duplicates_and_bad_sections() {
        assert!(parse_scenario_str("id = x\nid = y\n").is_err());
        assert!(parse_scenario_str("id = x\n[nope]\npsi = 1\n").is_err());
        assert!(parse_scenario_str("id = x\n[derivation\n").is_err());
    }

    #[test]
    fn rejects_negative_variance_and_bad_rho() {
        assert!(parse_scenario_str("id = x\n[validation]\nvar_eps = -1\n").is_err());
        assert!(parse_scenario_str("id = x\npopulation = two_pred\nrho = 0.3\n").is_err());
    }

    #[test]
    fn two_predictor_per_predictor_overrides() {
        let text = "id = t\npopulation = two_pred\nrho = 0.5\n\
                    [derivation]\nvar_eps = 1\n\
                    [validation]\nvar_eps = 1\n\
                    [validation.2]\ntheta = 0.5\nvar_eps = 4\n";
        let spec = parse_scenario_str(text).unwrap();
        assert_eq!(spec.valid[0].params_case().var_eps, 1.0);
        assert_eq!(spec.valid[1].params_case().theta, 0.5);
        assert_eq!(spec.valid[1].params_case().var_eps, 4.0);
    }

    #[test]
    fn serialization_round_trips() {
        for text in [
            "id = a\n[derivation]\nvar_eps = 1.0\n[validation]\npsi0 = 0\nvar_eps0 = 1\npsi1 = 0.3\nvar_eps1 = 0.25\n",
            "id = b\npopulation = two_pred\nrho = 0.9\nn_deriv = 500\n[derivation]\nvar_eps = 0.25\n[validation.2]\ntheta = 2\n",
        ] {
            let spec = parse_scenario_str(text).unwrap();
            let round = parse_scenario_str(&serialize_scenario(&spec)).unwrap();
            assert_eq!(spec, round);
        }
    }
}
