use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use trilaman::graph::validate_targets;
use trilaman::integrate::IntegrationControls;
use trilaman::newton::NewtonOptions;
use trilaman::{
    AnalysisOptions, Edge, FormationSystem64, HennebergStep, Law64, LawFamily, SamplerSpec, TargetDistances64,
    TriangulatedLamanGraph, ZeroTol,
};

use crate::failure::Failure;

/// Scenario file: a graph, its laws, and run controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Graph spec file, relative to the scenario file.
    pub graph: Option<PathBuf>,
    /// Inline Henneberg steps `[v, j, k]`, 1-based.
    pub steps: Option<Vec<[usize; 3]>>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub law: LawSpec,
    #[serde(default)]
    pub edges: Vec<EdgeOverride>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    #[serde(default = "standard")]
    pub family: String,
    pub exponent: Option<f64>,
    #[serde(default = "one")]
    pub target: f64,
}

impl Default for LawSpec {
    fn default() -> Self {
        Self {
            family: standard(),
            exponent: None,
            target: 1.0,
        }
    }
}

fn standard() -> String {
    "standard".into()
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeOverride {
    /// 1-based endpoints.
    pub edge: [usize; 2],
    pub target: Option<f64>,
    pub family: Option<String>,
    pub exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSpec {
    pub rtol: f64,
    pub atol: f64,
    pub horizon: f64,
    pub sample_interval: f64,
    pub initial_step: f64,
    pub max_steps: usize,
    /// Integration stops once `‖∇Φ‖_∞` drops below this.
    pub stop_residual: f64,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        let c = IntegrationControls::<f64>::default();
        Self {
            rtol: c.rtol,
            atol: c.atol,
            horizon: SamplerSpec::<f64>::default().horizon,
            sample_interval: c.sample_interval,
            initial_step: c.initial_step,
            max_steps: c.max_steps,
            stop_residual: c.equilibrium_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    /// Newton target on `‖∇Φ‖_∞`.
    pub refine: f64,
    /// Residual accepted as an equilibrium by the analysis commands.
    pub equilibrium: f64,
    pub collinearity: f64,
    /// Relative zero threshold for eigenvalues.
    pub zero: f64,
    pub classification: f64,
    pub newton_iterations: usize,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        let a = AnalysisOptions::<f64>::default();
        let n = NewtonOptions::<f64>::default();
        Self {
            refine: n.tolerance,
            equilibrium: a.equilibrium_tol,
            collinearity: a.collinearity_tol,
            zero: trilaman::spectral::DEFAULT_ZERO_TOL,
            classification: SamplerSpec::<f64>::default().classification_radius,
            newton_iterations: n.max_iterations,
        }
    }
}

/// A scenario with its graph loaded and its targets gathered, before the
/// triangle inequalities are checked.
pub struct Loaded {
    pub scenario: Scenario,
    pub digest: String,
    pub graph: TriangulatedLamanGraph,
    pub targets: TargetDistances64,
    pub laws: BTreeMap<Edge, Law64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Loaded, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        let scenario: Scenario =
            toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let graph = scenario.resolve_graph(base)?;
        let (targets, laws) = scenario.resolve_laws(&graph)?;
        Ok(Loaded {
            digest: sha256_hex(text.as_bytes()),
            scenario,
            graph,
            targets,
            laws,
        })
    }

    fn resolve_graph(&self, base: &Path) -> Result<TriangulatedLamanGraph, Failure> {
        match (&self.graph, &self.steps) {
            (Some(_), Some(_)) => Err(Failure::Usage("scenario sets both `graph` and `steps`".into())),
            (None, None) => Err(Failure::Usage("scenario needs `graph` or `steps`".into())),
            (Some(file), None) => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                trilaman::io::read_graph(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
            }
            (None, Some(steps)) => {
                let mut parsed = Vec::with_capacity(steps.len());
                for (i, &[v, j, k]) in steps.iter().enumerate() {
                    if v == 0 || j == 0 || k == 0 {
                        return Err(Failure::Usage(format!("step {}: vertices are numbered from 1", i + 1)));
                    }
                    parsed.push(HennebergStep::new(v - 1, j - 1, k - 1));
                }
                TriangulatedLamanGraph::build(&parsed).map_err(|e| Failure::Usage(e.to_string()))
            }
        }
    }

    fn resolve_laws(
        &self,
        graph: &TriangulatedLamanGraph,
    ) -> Result<(TargetDistances64, BTreeMap<Edge, Law64>), Failure> {
        let default_family =
            LawFamily::parse(&self.law.family, self.law.exponent).map_err(|e| Failure::Usage(e.to_string()))?;
        let mut choice: BTreeMap<Edge, (LawFamily, f64)> = graph
            .edges()
            .iter()
            .map(|e| (*e, (default_family, self.law.target)))
            .collect();
        for o in &self.edges {
            let [a, b] = o.edge;
            if a == 0 || b == 0 || a == b || !graph.has_edge(a - 1, b - 1) {
                return Err(Failure::Usage(format!("override names ({a}, {b}), which is not an edge")));
            }
            let slot = choice.get_mut(&Edge::new(a - 1, b - 1)).expect("edge exists");
            if let Some(name) = &o.family {
                slot.0 = LawFamily::parse(name, o.exponent).map_err(|e| Failure::Usage(e.to_string()))?;
            } else if let (Some(k), LawFamily::InversePower { .. }) = (o.exponent, slot.0) {
                slot.0 = LawFamily::InversePower { exponent: k };
            }
            if let Some(t) = o.target {
                slot.1 = t;
            }
        }
        let targets = TargetDistances64::new(choice.iter().map(|(e, (_, t))| (*e, *t)).collect())
            .map_err(|e| Failure::Usage(e.to_string()))?;
        let mut laws = BTreeMap::new();
        for (e, (family, t)) in choice {
            let law = family
                .instantiate(t)
                .map_err(|err| Failure::Usage(format!("edge {e}: {err}")))?;
            laws.insert(e, law);
        }
        Ok((targets, laws))
    }
}

impl Loaded {
    /// Checks the triangle inequalities, naming each offending 3-cycle.
    pub fn validate(&self) -> Result<(), Failure> {
        let violations = validate_targets(&self.graph, &self.targets).map_err(|e| Failure::Usage(e.to_string()))?;
        if violations.is_empty() {
            return Ok(());
        }
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        Err(Failure::Check(format!("target distances invalid: {}", list.join("; "))))
    }

    pub fn system(&self) -> Result<FormationSystem64, Failure> {
        self.validate()?;
        FormationSystem64::new(self.graph.clone(), self.laws.clone()).map_err(|e| Failure::Check(e.to_string()))
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.scenario.seed).unwrap_or(0)
    }

    pub fn controls(&self) -> IntegrationControls<f64> {
        let i = &self.scenario.integrator;
        IntegrationControls {
            rtol: i.rtol,
            atol: i.atol,
            equilibrium_tol: i.stop_residual,
            sample_interval: i.sample_interval,
            initial_step: i.initial_step,
            max_steps: i.max_steps,
        }
    }

    pub fn newton(&self) -> NewtonOptions<f64> {
        NewtonOptions {
            tolerance: self.scenario.tolerances.refine,
            max_iterations: self.scenario.tolerances.newton_iterations,
        }
    }

    pub fn analysis(&self, equilibrium_tol: Option<f64>) -> AnalysisOptions<f64> {
        let t = &self.scenario.tolerances;
        AnalysisOptions {
            collinearity_tol: t.collinearity,
            zero_tol: ZeroTol::Relative(t.zero),
            equilibrium_tol: equilibrium_tol.unwrap_or(t.equilibrium),
        }
    }

    pub fn sampler(&self) -> SamplerSpec<f64> {
        let t = &self.scenario.tolerances;
        SamplerSpec {
            horizon: self.scenario.integrator.horizon,
            integration: self.controls(),
            newton: self.newton(),
            classification_radius: t.classification,
            collinearity_tol: t.collinearity,
            ..SamplerSpec::default()
        }
    }
}
