//! Scenario files: TOML documents layered over a named preset, then
//! `--override` assignments, then validated.

use super::CliError;
use crate::compactness::OscillationConfig;
use crate::constitutive::{validate_hypotheses, ConstitutiveLaw, SamplingSpec, ScalarLaw};
use crate::diagnostics::Tolerance;
use crate::fieldops::{Grid, Parity, ScalarField, Snapshot, VectorField};
use crate::solver::{RawInitialData, RunConfig, SchemeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use toml::Value;

pub const PRESETS: [&str; 4] = ["orszag_tang", "rest", "slab_1d", "smoke_3d"];

/// Name of the resolved copy written next to every output.
pub const RESOLVED_NAME: &str = "resolved.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub preset: String,
    /// Seed of the randomized initial fields.
    pub seed: u64,
    pub output: PathBuf,
    pub grid: GridSpec,
    pub law: LawSpec,
    pub initial: InitialSpec,
    pub scheme: SchemeParams,
    pub record: RecordSpec,
    pub sweep: SweepSpec,
    pub budget: BudgetSpec,
    pub compactness: OscillationConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Nodes per axis; 1 switches the axis off.
    pub nodes: [usize; 3],
    pub extent: [f64; 3],
    pub periodic: [bool; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "catalog", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    /// `p_e = ρ^γ`, `p_θ = ρ^{γ/3}`, `c_v = 1`, `κ = s(1+θ^α)`, `μ = s`,
    /// `λ = 0`, magnetic diffusivity `sν`.
    Standard {
        gamma: f64,
        alpha: f64,
        nu: f64,
        transport_scale: f64,
    },
    Custom(Box<ConstitutiveLaw>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Vortex with a current sheet pattern inside the unit square, vanishing
    /// on the walls.
    OrszagTang {
        rho_amplitude: f64,
        speed: f64,
        field: f64,
        theta: f64,
    },
    Uniform {
        rho: f64,
        theta: f64,
    },
    /// Low-mode random fields drawn from the scenario seed.
    RandomSmooth {
        modes: usize,
        amplitude: f64,
    },
    /// Snapshot files; relative paths are taken from the scenario file's
    /// directory.
    Files {
        rho: PathBuf,
        momentum: PathBuf,
        theta: PathBuf,
        h: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordSpec {
    pub interval: f64,
    pub snapshots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
}

/// `C₁`, `C₂` of the tolerance `C₁dt + C₂h²` for the energy and thermal
/// checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub c1: f64,
    pub c2: f64,
}

impl BudgetSpec {
    pub fn tolerance(&self) -> Tolerance {
        Tolerance { c1: self.c1, c2: self.c2 }
    }
}

/// Fixture constants, calibrated on the `orszag_tang` preset at 32² and 64².
pub const BUDGET_C1: f64 = 1.0;
pub const BUDGET_C2: f64 = 50.0;

pub fn preset(name: &str) -> Option<Scenario> {
    let base = Scenario {
        preset: name.to_string(),
        seed: 0,
        output: PathBuf::from("out"),
        grid: GridSpec { nodes: [64, 64, 1], extent: [1.0; 3], periodic: [false; 3] },
        law: LawSpec::Standard { gamma: 5.0 / 3.0, alpha: 3.0, nu: 1.0, transport_scale: 0.1 },
        initial: InitialSpec::OrszagTang { rho_amplitude: 0.2, speed: 1.0, field: 1.0, theta: 1.0 },
        scheme: SchemeParams { epsilon: 0.05, delta: 0.1, t_end: 0.5, ..SchemeParams::default() },
        record: RecordSpec { interval: 0.01, snapshots: vec![] },
        sweep: SweepSpec { epsilon: vec![0.05], delta: vec![0.1, 0.01, 0.001] },
        budget: BudgetSpec { c1: BUDGET_C1, c2: BUDGET_C2 },
        compactness: OscillationConfig::default(),
    };
    Some(match name {
        "orszag_tang" => base,
        "rest" => Scenario {
            grid: GridSpec { nodes: [16, 16, 1], ..base.grid },
            initial: InitialSpec::Uniform { rho: 1.0, theta: 1.0 },
            ..base
        },
        "slab_1d" => Scenario {
            grid: GridSpec { nodes: [256, 1, 1], ..base.grid },
            initial: InitialSpec::RandomSmooth { modes: 3, amplitude: 0.2 },
            scheme: SchemeParams { t_end: 0.1, ..base.scheme },
            ..base
        },
        "smoke_3d" => Scenario {
            grid: GridSpec { nodes: [16, 16, 16], ..base.grid },
            initial: InitialSpec::RandomSmooth { modes: 2, amplitude: 0.2 },
            scheme: SchemeParams { t_end: 0.02, ..base.scheme },
            ..base
        },
        _ => return None,
    })
}

impl Default for Scenario {
    fn default() -> Self {
        preset("orszag_tang").expect("shipped preset")
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            // a different enum tag replaces the whole table
            let retagged = ["kind", "catalog", "policy"].iter().any(|k| o.get(*k).is_some() && o.get(*k) != b.get(*k));
            if retagged {
                *b = o;
                return;
            }
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Parses `a.b.c=value`; the value is read as a TOML value, or as a bare
/// string when that fails.
pub fn parse_override(assignment: &str) -> Result<Value, CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(|k| k.trim().is_empty()) {
        return Err(CliError::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    Ok(path.rsplit('.').fold(value, |inner, key| {
        let mut t = toml::Table::new();
        t.insert(key.trim().to_string(), inner);
        Value::Table(t)
    }))
}

fn to_value(s: &Scenario) -> Value {
    Value::try_from(s).expect("scenarios serialize")
}

/// Layers `document` and the overrides over the preset it names and
/// validates the result. Unknown keys are collected and reported together.
pub fn parse_document(document: &str, overrides: &[String], base_dir: &Path) -> Result<Scenario, CliError> {
    let mut user: Value =
        Value::Table(toml::from_str(document).map_err(|e| CliError::Config(format!("scenario syntax: {e}")))?);
    for o in overrides {
        merge(&mut user, parse_override(o)?);
    }
    let name = match user.get("preset") {
        None => "orszag_tang".to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(v) => return Err(CliError::Config(format!("preset must be a string, got {v}"))),
    };
    let base = preset(&name)
        .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`; known presets: {}", PRESETS.join(", "))))?;
    let mut merged = to_value(&base);
    merge(&mut merged, user);

    let mut unknown = Vec::new();
    let scenario: Result<Scenario, _> = serde_ignored::deserialize(merged, |path| unknown.push(path.to_string()));
    if !unknown.is_empty() {
        return Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    let mut scenario = scenario.map_err(|e| CliError::Config(format!("scenario: {e}")))?;
    if let InitialSpec::Files { rho, momentum, theta, h } = &mut scenario.initial {
        for p in [rho, momentum, theta, h] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
    }
    scenario.validate()?;
    Ok(scenario)
}

pub fn parse_scenario(path: &Path, overrides: &[String]) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    parse_document(&text, overrides, path.parent().unwrap_or(Path::new(".")))
}

fn strictly_descending(name: &str, list: &[f64]) -> Result<(), CliError> {
    if list.is_empty() || list.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(CliError::Config(format!("sweep.{name} = {list:?} must be a non-empty list of positive values")));
    }
    if list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(CliError::Config(format!("sweep.{name} = {list:?} must be sorted strictly descending")));
    }
    Ok(())
}

impl Scenario {
    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = &self.grid;
        Grid::with_periodicity(g.nodes, g.extent, g.periodic).map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn law(&self) -> Result<ConstitutiveLaw, CliError> {
        let law = match &self.law {
            LawSpec::Standard { gamma, alpha, nu, transport_scale } => {
                let mut law = ConstitutiveLaw {
                    gamma: *gamma,
                    alpha: *alpha,
                    nu: *nu,
                    p_e: ScalarLaw::power(1.0, *gamma),
                    p_theta: ScalarLaw::power(1.0, gamma / 3.0),
                    kappa: ScalarLaw::one_plus_power(1.0, *alpha),
                    ..ConstitutiveLaw::default()
                };
                law.bounds.a1 = *gamma;
                if !(*transport_scale > 0.0 && transport_scale.is_finite()) {
                    return Err(CliError::Config(format!("transport_scale = {transport_scale} must be positive")));
                }
                law.with_transport_scale(*transport_scale)
            }
            LawSpec::Custom(law) => (**law).clone(),
        };
        law.check_structure().map_err(|e| CliError::Config(format!("law: {e}")))?;
        Ok(law)
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig { record_interval: self.record.interval, snapshot_times: self.record.snapshots.clone() }
    }

    pub fn tolerance(&self) -> Tolerance {
        self.budget.tolerance()
    }

    /// Checks everything that does not need the output directory.
    pub fn validate(&self) -> Result<(), CliError> {
        let law = self.law()?;
        let report = validate_hypotheses(&law, &SamplingSpec::default());
        if let Some(c) = report.failures().next() {
            return Err(CliError::Config(format!("law violates the hypothesis {}", c.inequality)));
        }
        self.grid()?;
        self.scheme.validate(&law).map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.record.interval > 0.0 && self.record.interval.is_finite()) {
            return Err(CliError::Config(format!("record.interval = {} must be positive", self.record.interval)));
        }
        if let Some(t) = self.record.snapshots.iter().find(|&&t| !(t >= 0.0 && t <= self.scheme.t_end)) {
            return Err(CliError::Config(format!("snapshot time {t} is outside [0, t_end]")));
        }
        strictly_descending("epsilon", &self.sweep.epsilon)?;
        strictly_descending("delta", &self.sweep.delta)?;
        if let Some(&d) = self.sweep.delta.iter().find(|&&d| d >= 1.0) {
            return Err(CliError::Config(format!("sweep delta {d} violates 0 < delta < 1")));
        }
        if !(self.budget.c1 >= 0.0 && self.budget.c2 >= 0.0) {
            return Err(CliError::Config("budget constants must be non-negative".into()));
        }
        match &self.initial {
            InitialSpec::OrszagTang { theta, .. } | InitialSpec::Uniform { theta, .. } if !(*theta > 0.0) => {
                Err(CliError::Config(format!("initial temperature {theta} must be positive")))
            }
            InitialSpec::Uniform { rho, .. } if !(*rho > 0.0) => {
                Err(CliError::Config(format!("initial density {rho} must be positive")))
            }
            InitialSpec::RandomSmooth { amplitude, .. } if !(*amplitude >= 0.0 && *amplitude < 1.0) => {
                Err(CliError::Config(format!("random amplitude {amplitude} must lie in [0, 1)")))
            }
            _ => Ok(()),
        }
    }

    /// TOML of the fully resolved scenario.
    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenarios serialize")
    }

    pub fn initial_data(&self, grid: &Grid) -> Result<RawInitialData, CliError> {
        Ok(match &self.initial {
            InitialSpec::OrszagTang { rho_amplitude, speed, field, theta } => {
                let env = |x: [f64; 3]| (PI * x[0]).sin() * (PI * x[1]).sin();
                let rho = ScalarField::from_fn(grid, Parity::Even, |x| {
                    1.0 + rho_amplitude * (PI * x[0]).cos() * (PI * x[1]).cos()
                });
                let u = VectorField::from_fn(grid, Parity::Odd, |x| {
                    [-speed * (2.0 * PI * x[1]).sin() * env(x), speed * (2.0 * PI * x[0]).sin() * env(x), 0.0]
                });
                RawInitialData {
                    m: u.scaled_by(&rho),
                    rho,
                    theta: ScalarField::constant(grid, *theta),
                    h: VectorField::from_fn(grid, Parity::Odd, |x| {
                        [-field * (2.0 * PI * x[1]).sin() * env(x), field * (4.0 * PI * x[0]).sin() * env(x), 0.0]
                    }),
                }
            }
            InitialSpec::Uniform { rho, theta } => RawInitialData {
                rho: ScalarField::constant(grid, *rho),
                m: VectorField::zeros(grid),
                theta: ScalarField::constant(grid, *theta),
                h: VectorField::zeros(grid),
            },
            InitialSpec::RandomSmooth { modes, amplitude } => random_smooth(grid, *modes, *amplitude, self.seed),
            InitialSpec::Files { rho, momentum, theta, h } => {
                let load = |p: &PathBuf| {
                    Snapshot::load(p).map_err(|e| CliError::Config(format!("initial field {}: {e}", p.display())))
                };
                let bad = |p: &PathBuf, e: crate::fieldops::FieldError| {
                    CliError::Config(format!("initial field {}: {e}", p.display()))
                };
                RawInitialData {
                    rho: load(rho)?.to_scalar(grid, Parity::Even).map_err(|e| bad(rho, e))?,
                    m: load(momentum)?.to_vector(grid, Parity::Odd).map_err(|e| bad(momentum, e))?,
                    theta: load(theta)?.to_scalar(grid, Parity::Even).map_err(|e| bad(theta, e))?,
                    h: load(h)?.to_vector(grid, Parity::Odd).map_err(|e| bad(h, e))?,
                }
            }
        })
    }
}

/// Sums of `modes^d` separable cosines (sines for the wall-odd fields) with
/// uniform random coefficients, normalized to at most `amplitude`.
fn random_smooth(grid: &Grid, modes: usize, amplitude: f64, seed: u64) -> RawInitialData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = modes.max(1);
    let ranges: [usize; 3] = std::array::from_fn(|a| if grid.is_active(a) { modes } else { 1 });
    let count = ranges.iter().product::<usize>();
    let wave = |a: usize, k: usize| {
        let base = if grid.is_periodic(a) { 2.0 * PI } else { PI };
        base * k as f64 / grid.extent(a)
    };
    let mut field = |parity: Parity| {
        let coeffs: Vec<([usize; 3], f64)> = (0..count)
            .map(|idx| {
                let k = [idx % ranges[0], (idx / ranges[0]) % ranges[1], idx / (ranges[0] * ranges[1])];
                (k, rng.random_range(-1.0..1.0) / count as f64)
            })
            .collect();
        ScalarField::from_fn(grid, parity, |x| {
            coeffs
                .iter()
                .map(|(k, c)| {
                    c * (0..3)
                        .filter(|&a| grid.is_active(a))
                        .map(|a| match parity {
                            Parity::Odd => (wave(a, k[a] + 1) * x[a]).sin(),
                            _ => (wave(a, k[a]) * x[a]).cos(),
                        })
                        .product::<f64>()
                })
                .sum()
        })
    };
    let rho = field(Parity::Even).map(|s| 1.0 + amplitude * s);
    let theta = field(Parity::Even).map(|s| 1.0 + 0.5 * amplitude * s);
    let u = VectorField::new(std::array::from_fn(|_| field(Parity::Odd).map(|s| amplitude * s)));
    let h = VectorField::new(std::array::from_fn(|_| field(Parity::Odd).map(|s| amplitude * s)));
    RawInitialData { m: u.scaled_by(&rho), rho, theta, h }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::DtPolicy;

    fn parse(doc: &str) -> Result<Scenario, CliError> {
        parse_document(doc, &[], Path::new("."))
    }

    #[test]
    fn a_bare_preset_resolves_to_its_defaults() {
        let s = parse("preset = \"orszag_tang\"\n").unwrap();
        assert_eq!(s, Scenario::default());
        let again = parse(&s.resolved_toml()).unwrap();
        assert_eq!(again.resolved_toml(), s.resolved_toml());
    }

    #[test]
    fn unknown_keys_are_listed_together() {
        let err = parse("seeed = 1\n[grid]\nnode = 3\n").unwrap_err().to_string();
        assert!(err.contains("seeed") && err.contains("grid.node"), "{err}");
    }

    #[test]
    fn hypotheses_are_checked_on_load() {
        let err = parse("[law]\ngamma = 1.4\n").unwrap_err().to_string();
        assert!(err.contains("gamma > 3/2"), "{err}");
        let err = parse("[law]\nalpha = 2.0\n").unwrap_err().to_string();
        assert!(err.contains("alpha > 2"), "{err}");
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let s =
            parse_document("", &["scheme.delta=0.01".into(), "sweep.delta=[0.5, 0.2]".into()], Path::new(".")).unwrap();
        assert_eq!(s.scheme.delta, 0.01);
        assert_eq!(s.sweep.delta, vec![0.5, 0.2]);
        let s = parse_document("", &["scheme.dt={policy=\"fixed\", dt=1e-4}".into()], Path::new(".")).unwrap();
        assert_eq!(s.scheme.dt, DtPolicy::Fixed { dt: 1e-4 });
        assert!(parse_override("nodes").is_err());
    }

    #[test]
    fn retagging_replaces_the_section() {
        let s = parse("[initial]\nkind = \"uniform\"\nrho = 2.0\ntheta = 0.5\n").unwrap();
        assert_eq!(s.initial, InitialSpec::Uniform { rho: 2.0, theta: 0.5 });
    }

    #[test]
    fn sweep_lists_must_descend() {
        assert!(parse("[sweep]\ndelta = [0.01, 0.1]\n").is_err());
        assert!(parse("[sweep]\nepsilon = []\n").is_err());
    }

    #[test]
    fn random_fields_follow_the_seed() {
        let g = Grid::unit_box([8, 8, 1]);
        let a = random_smooth(&g, 3, 0.2, 7);
        let b = random_smooth(&g, 3, 0.2, 7);
        let c = random_smooth(&g, 3, 0.2, 8);
        assert_eq!(a.rho, b.rho);
        assert_ne!(a.rho, c.rho);
        assert!(a.rho.min() >= 0.8 && a.rho.max() <= 1.2);
        assert!(g.on_wall(0) && a.m.c[0].data[0].abs() < 1e-15);
    }
}
