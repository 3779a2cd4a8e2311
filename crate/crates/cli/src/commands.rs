use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use trilaman::analysis::{
    all_line_equilibria, basin_monte_carlo, discover_equilibria, enumerate_target_orbits, stability_census,
    verify_morse_bott, verify_reduction_formula, IndexFormulaReport, ReductionReport, StabilityCensus,
    TrialOutcome,
};
use trilaman::geometry::{is_strongly_rigid, line_deviation, orbit_distance};
use trilaman::integrate::integrate;
use trilaman::io::{read_configuration, write_configuration, write_graph, write_trajectory_csv};
use trilaman::laws::{default_grid, default_probe, validate_law};
use trilaman::newton::{refine_equilibrium, EquilibriumRecord};
use trilaman::partition::{independent_partition, partition_is_equilibrium_compatible};
use trilaman::spectral::{classify_orbit, hessian, spectrum};
use trilaman::{
    AnalysisOptions, Configuration64, Edge, FormationSystem64, InteractionLaw, Stability, TriangulatedLamanGraph,
    Verdict,
};

use crate::failure::Failure;
use crate::output::Emitter;
use crate::scenario::{Loaded, Scenario};

fn edge_label(e: Edge) -> [usize; 2] {
    [e.lo() + 1, e.hi() + 1]
}

fn coords(p: &Configuration64) -> Vec<[f64; 2]> {
    p.points().iter().map(|q| [q.x, q.y]).collect()
}

fn load(path: &Path, out: &mut Emitter) -> Result<Loaded, Failure> {
    let loaded = Scenario::load(path)?;
    out.info.scenario_digest = Some(loaded.digest.clone());
    Ok(loaded)
}

fn read_config(path: &Path, n: usize) -> Result<Configuration64, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let p = read_configuration(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if p.len() != n {
        return Err(Failure::Usage(format!("{}: {} agents, scenario has {n}", path.display(), p.len())));
    }
    Ok(p)
}

pub fn generate(out: &mut Emitter, vertices: usize, seed: u64) -> Result<(), Failure> {
    if vertices < 2 {
        return Err(Failure::Usage("a graph needs at least 2 vertices".into()));
    }
    out.info.seed = Some(seed);
    let graph = TriangulatedLamanGraph::random(vertices, &mut ChaCha8Rng::seed_from_u64(seed))
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let text = write_graph(&graph);
    #[derive(Serialize)]
    struct Row {
        vertices: usize,
        edges: usize,
        steps: Vec<[usize; 3]>,
    }
    out.row(
        "graph",
        &Row {
            vertices,
            edges: graph.edge_count(),
            steps: graph
                .steps()
                .iter()
                .map(|s| [s.new_vertex + 1, s.parent.0 + 1, s.parent.1 + 1])
                .collect(),
        },
    );
    out.line(text.trim_end());
    out.file("graph.txt", text);
    Ok(())
}

pub fn validate(out: &mut Emitter, scenario: &Path) -> Result<(), Failure> {
    let loaded = load(scenario, out)?;
    let g = &loaded.graph;
    out.line(format!("graph: {} agents, {} edges, {} 3-cycles", g.vertex_count(), g.edge_count(), g.three_cycles().len()));
    let targets = loaded.validate();
    let mut inadmissible = Vec::new();
    #[derive(Serialize)]
    struct Row {
        edge: [usize; 2],
        target: f64,
        family: &'static str,
        monotone_force: bool,
        collision_barrier: bool,
    }
    for (e, law) in &loaded.laws {
        let report = validate_law(law, &default_grid(law.target(), 400), &default_probe(law.target()))
            .map_err(|err| Failure::Usage(err.to_string()))?;
        let family = law.family().map_or("custom", |f| f.name());
        out.row(
            "law",
            &Row {
                edge: edge_label(*e),
                target: law.target(),
                family,
                monotone_force: report.c1_ok(),
                collision_barrier: report.c2_trend_ok(),
            },
        );
        if !(report.c1_ok() && report.c2_trend_ok()) {
            inadmissible.push(format!("{e} ({family})"));
        }
    }
    out.row("targets", &serde_json::json!({ "valid": targets.is_ok() }));
    targets?;
    out.line("targets: strict triangle inequalities hold on every 3-cycle");
    if !inadmissible.is_empty() {
        return Err(Failure::Check(format!("laws outside the admissible class on {}", inadmissible.join(", "))));
    }
    out.line("laws: increasing (x f)' and collision barrier on every edge");
    Ok(())
}

#[derive(Serialize)]
struct EquilibriumRow {
    residual: f64,
    method: &'static str,
    verdict: Stability,
    signature: [usize; 3],
    strongly_rigid: bool,
    max_distance_error: f64,
    coordinates: Vec<[f64; 2]>,
}

fn describe(system: &FormationSystem64, rec: &EquilibriumRecord<f64>, opts: &AnalysisOptions<f64>) -> Result<EquilibriumRow, Failure> {
    let p = &rec.configuration;
    let c = classify_orbit(system, p, opts.zero_tol).map_err(|e| Failure::Numerical(e.to_string()))?;
    let err = system
        .targets()
        .iter()
        .fold(0.0f64, |m, (e, d)| m.max((p.distance(e.lo(), e.hi()) - d).abs()));
    Ok(EquilibriumRow {
        residual: rec.residual,
        method: rec.method.tag(),
        verdict: c.verdict,
        signature: c.signature.triple().into(),
        strongly_rigid: is_strongly_rigid(system.graph(), p, opts.collinearity_tol),
        max_distance_error: err,
        coordinates: coords(p),
    })
}

pub fn simulate(
    out: &mut Emitter,
    scenario: &Path,
    initial: Option<&Path>,
    seed: Option<u64>,
    horizon: Option<f64>,
) -> Result<(), Failure> {
    let loaded = load(scenario, out)?;
    let system = loaded.system()?;
    let n = system.agent_count();
    let p0 = match initial {
        Some(path) => read_config(path, n)?,
        None => {
            let seed = loaded.seed(seed);
            out.info.seed = Some(seed);
            loaded.sampler().sample(&system, seed, 0)
        }
    };
    if let Some(e) = p0.collision(system.graph()) {
        return Err(Failure::Usage(format!("initial configuration has coincident agents on edge {e}")));
    }
    let horizon = horizon.unwrap_or(loaded.scenario.integrator.horizon);
    let traj = match integrate(&system, &p0, horizon, &loaded.controls()) {
        Ok(t) => t,
        Err(fail) => {
            out.file("trajectory.csv", write_trajectory_csv(&fail.partial));
            out.line(format!("integration stopped after {} samples", fail.partial.len()));
            return Err(Failure::Numerical(fail.error.to_string()));
        }
    };
    out.file("trajectory.csv", write_trajectory_csv(&traj));
    out.file("distance_errors.csv", distance_error_rows(&system, &traj.times, &traj.states));
    out.line(format!(
        "integrated to t = {} in {} steps, {} samples, residual {:e}{}",
        traj.times.last().copied().unwrap_or(0.0),
        traj.steps_taken,
        traj.len(),
        traj.final_residual(),
        if traj.converged { " (converged)" } else { "" }
    ));
    let rec = refine_equilibrium(&system, traj.final_state(), &loaded.newton())
        .map_err(|f| Failure::Numerical(format!("refining the endpoint: {}", f.error)))?;
    let row = describe(&system, &rec, &loaded.analysis(None))?;
    out.line(format!(
        "refined ({}) residual {:e}: {}, signature ({}, {}, {}), max |d - d̄| = {:e}",
        row.method, row.residual, row.verdict, row.signature[0], row.signature[1], row.signature[2], row.max_distance_error
    ));
    out.line(write_configuration(&rec.configuration).trim_end());
    out.file("equilibrium.txt", write_configuration(&rec.configuration));
    out.row("equilibrium", &row);
    Ok(())
}

fn distance_error_rows(system: &FormationSystem64, times: &[f64], states: &[Configuration64]) -> String {
    let edges = system.graph().edges();
    let mut text = String::from("t");
    for e in edges {
        text.push_str(&format!(",e{}_{}", e.lo() + 1, e.hi() + 1));
    }
    text.push('\n');
    for (t, p) in times.iter().zip(states) {
        text.push_str(&t.to_string());
        for (e, law) in edges.iter().zip(system.laws()) {
            text.push_str(&format!(",{}", p.distance(e.lo(), e.hi()) - law.target()));
        }
        text.push('\n');
    }
    text
}

/// Re-refines when the input residual exceeds the tolerance.
fn ensure_equilibrium(
    out: &mut Emitter,
    loaded: &Loaded,
    system: &FormationSystem64,
    p: Configuration64,
    tol: f64,
) -> Result<Configuration64, Failure> {
    let residual = system.residual(&p).map_err(|e| Failure::Usage(e.to_string()))?;
    if residual <= tol {
        return Ok(p);
    }
    let rec = refine_equilibrium(system, &p, &loaded.newton())
        .map_err(|f| Failure::Numerical(format!("input residual {residual:e} and refinement failed: {}", f.error)))?;
    out.line(format!("input residual {residual:e} > {tol:e}; refined to {:e}", rec.residual));
    Ok(rec.configuration)
}

#[derive(Serialize)]
struct BlockRow {
    block: usize,
    edges: Vec<[usize; 2]>,
    vertices: Vec<usize>,
    line: bool,
}

fn partition_rows(out: &mut Emitter, system: &FormationSystem64, p: &Configuration64, tol: f64) {
    let partition = independent_partition(system.graph(), p, tol);
    out.line(format!(
        "independent partition: {} block(s){}",
        partition.len(),
        if partition.is_fragile() { " [partition-fragile]" } else { "" }
    ));
    for (i, sub) in partition.subframeworks(p).iter().enumerate() {
        let labels: Vec<String> = sub.edges.iter().map(|e| e.to_string()).collect();
        let line = sub.edges.len() > 1 && sub.line_deviation() < tol;
        out.line(format!("  block {}: {}{}", i + 1, labels.join(" "), if line { "  (line)" } else { "" }));
        out.row(
            "block",
            &BlockRow {
                block: i + 1,
                edges: sub.edges.iter().map(|e| edge_label(*e)).collect(),
                vertices: sub.vertices.iter().map(|v| v + 1).collect(),
                line,
            },
        );
    }
    if partition.is_fragile() {
        let steps: Vec<String> = partition.fragile_steps.iter().map(|s| (s + 1).to_string()).collect();
        out.line(format!("  fragile Henneberg steps: {}", steps.join(", ")));
    }
}

pub fn partition(out: &mut Emitter, scenario: &Path, config: &Path, tol: Option<f64>) -> Result<(), Failure> {
    let loaded = load(scenario, out)?;
    let system = loaded.system()?;
    let p = read_config(config, system.agent_count())?;
    let tol = tol.unwrap_or(loaded.scenario.tolerances.collinearity);
    partition_rows(out, &system, &p, tol);
    let partition = independent_partition(system.graph(), &p, tol);
    match partition_is_equilibrium_compatible(&system, &p, &partition, loaded.scenario.tolerances.equilibrium) {
        Ok(ok) => out.line(format!("blocks are equilibria of their subsystems: {ok}")),
        Err(e) => out.line(format!("not an equilibrium: {e}")),
    }
    Ok(())
}

pub fn spectrum_cmd(out: &mut Emitter, scenario: &Path, config: &Path, tol: Option<f64>) -> Result<(), Failure> {
    let loaded = load(scenario, out)?;
    let system = loaded.system()?;
    let opts = loaded.analysis(tol);
    let p = read_config(config, system.agent_count())?;
    let p = ensure_equilibrium(out, &loaded, &system, p, opts.equilibrium_tol)?;
    let h = hessian(&system, &p).map_err(|e| Failure::Usage(e.to_string()))?;
    let spec = spectrum(&h, opts.zero_tol);
    let c = classify_orbit(&system, &p, opts.zero_tol).map_err(|e| Failure::Numerical(e.to_string()))?;
    out.line(format!("{}, signature {}", c.verdict, c.signature));
    out.line(format!(
        "eigenvalues: {}",
        spec.eigenvalues.iter().map(|l| format!("{l:.6e}")).collect::<Vec<_>>().join(" ")
    ));
    out.row(
        "spectrum",
        &serde_json::json!({
            "verdict": c.verdict,
            "signature": c.signature.triple(),
            "zero_tol": c.signature.zero_tol,
            "eigenvalues": spec.eigenvalues,
        }),
    );
    if c.verdict == Stability::Degenerate {
        return Err(Failure::Numerical(format!("degenerate orbit, {} zero eigenvalues", c.signature.n_zero)));
    }
    Ok(())
}

fn index_formula_lines(out: &mut Emitter, r: &IndexFormulaReport) {
    out.line(format!(
        "index formula: n- = {} vs block sum {}, n+ = {} vs block sum {}: {}",
        r.full.n_minus,
        r.index_sum,
        r.full.n_plus,
        r.coindex_sum,
        r.verdict()
    ));
    for (i, b) in r.blocks.iter().enumerate() {
        let labels: Vec<String> = b.edges.iter().map(|e| e.to_string()).collect();
        out.line(format!("  block {}: {} signature {} {}", i + 1, labels.join(" "), b.signature, b.verdict));
    }
    out.row(
        "index-formula",
        &serde_json::json!({
            "signature": r.full.triple(),
            "blocks": r.blocks.iter().map(|b| serde_json::json!({
                "edges": b.edges.iter().map(|e| edge_label(*e)).collect::<Vec<_>>(),
                "signature": b.signature.triple(),
                "verdict": b.verdict,
            })).collect::<Vec<_>>(),
            "index_sum": r.index_sum,
            "coindex_sum": r.coindex_sum,
            "verdict": r.verdict(),
            "partition_fragile": r.partition_fragile,
        }),
    );
}

fn reduction_lines(out: &mut Emitter, r: &ReductionReport) {
    out.line(format!(
        "reduction: removing agent {} (neighbours {}, {}, {:?}): A {} -> {} + sgn({:.6}), B {} -> {} + sgn({:.6}), congruence residuals {:.1e}/{:.1e}: {}",
        r.removed + 1,
        r.parents.0 + 1,
        r.parents.1 + 1,
        r.position,
        r.a.full,
        r.a.reduced,
        r.a.pivot,
        r.b.full,
        r.b.reduced,
        r.b.pivot,
        r.a.congruence_residual,
        r.b.congruence_residual,
        r.verdict()
    ));
    out.row(
        "reduction",
        &serde_json::json!({
            "removed": r.removed + 1,
            "parents": [r.parents.0 + 1, r.parents.1 + 1],
            "position": r.position,
            "a": { "full": r.a.full.triple(), "reduced": r.a.reduced.triple(), "pivot": r.a.pivot },
            "b": { "full": r.b.full.triple(), "reduced": r.b.reduced.triple(), "pivot": r.b.pivot },
            "g": r.g_value,
            "xg_derivative": r.xg_derivative,
            "congruence_residual": [r.a.congruence_residual, r.b.congruence_residual],
            "verdict": r.verdict(),
        }),
    );
}

fn verdict_result(v: Verdict, what: &str) -> Result<(), Failure> {
    match v {
        Verdict::Pass => Ok(()),
        Verdict::Fail => Err(Failure::Check(format!("{what} does not hold"))),
        Verdict::Inconclusive => Err(Failure::Numerical(format!("{what} inconclusive (degenerate orbit)"))),
    }
}

pub fn analyze(out: &mut Emitter, scenario: &Path, config: &Path, tol: Option<f64>) -> Result<(), Failure> {
    let loaded = load(scenario, out)?;
    let system = loaded.system()?;
    let opts = loaded.analysis(tol);
    let p = read_config(config, system.agent_count())?;
    let p = ensure_equilibrium(out, &loaded, &system, p, opts.equilibrium_tol)?;
    let c = classify_orbit(&system, &p, opts.zero_tol).map_err(|e| Failure::Numerical(e.to_string()))?;
    out.line(format!("{}, signature {}", c.verdict, c.signature));
    out.row(
        "classification",
        &serde_json::json!({
            "verdict": c.verdict,
            "signature": c.signature.triple(),
            "strongly_rigid": is_strongly_rigid(system.graph(), &p, opts.collinearity_tol),
        }),
    );
    partition_rows(out, &system, &p, opts.collinearity_tol);
    let report = verify_morse_bott(&system, &p, &opts).map_err(|e| Failure::Numerical(e.to_string()))?;
    index_formula_lines(out, &report);
    let mut result = verdict_result(report.verdict(), "index formula");
    if system.agent_count() >= 3 && line_deviation(p.points()) < opts.collinearity_tol {
        let r = verify_reduction_formula(&system, &p, &opts).map_err(|e| Failure::Numerical(e.to_string()))?;
        reduction_lines(out, &r);
        result = result.and(verdict_result(r.verdict(), "reduction formula"));
    }
    result
}

pub fn equilibria(
    out: &mut Emitter,
    scenario: &Path,
    trials: usize,
    seed: Option<u64>,
    tol: Option<f64>,
) -> Result<(), Failure> {
    let loaded = load(scenario, out)?;
    let system = loaded.system()?;
    let opts = loaded.analysis(tol);
    let mut found: Vec<EquilibriumRecord<f64>> =
        all_line_equilibria(&system, &loaded.newton()).map_err(|e| Failure::Numerical(e.to_string()))?;
    let lines = found.len();
    if trials > 0 {
        let seed = loaded.seed(seed);
        out.info.seed = Some(seed);
        for rec in discover_equilibria(&system, trials, &loaded.sampler(), seed) {
            let scale = 1e-6 * system.targets().max();
            if !found.iter().any(|f| orbit_distance(&f.configuration, &rec.configuration) < scale) {
                found.push(rec);
            }
        }
    }
    out.line(format!("{} line equilibria, {} further from {} Newton starts", lines, found.len() - lines, trials));
    let mut configs = Vec::new();
    for (i, rec) in found.iter().enumerate() {
        let row = describe(&system, rec, &opts)?;
        out.line(format!(
            "  #{:<3} {:<15} signature ({}, {}, {})  strongly rigid: {:<5}  residual {:.1e}",
            i + 1,
            row.verdict.to_string(),
            row.signature[0],
            row.signature[1],
            row.signature[2],
            row.strongly_rigid,
            row.residual
        ));
        out.row("equilibrium", &row);
        out.file(format!("equilibrium_{:03}.txt", i + 1), write_configuration(&rec.configuration));
        configs.push(rec.configuration.clone());
    }
    let census = stability_census(&system, &configs, &opts).map_err(|e| Failure::Numerical(e.to_string()))?;
    census_lines(out, &census);
    if census.off_diagonal_empty() {
        Ok(())
    } else {
        Err(Failure::Check("a stable equilibrium is not strongly rigid, or an unstable one is".into()))
    }
}

fn census_lines(out: &mut Emitter, census: &StabilityCensus) {
    out.line("census            stable  saddle  degenerate");
    for rigid in [true, false] {
        out.line(format!(
            "  {:<16}{:>6}  {:>6}  {:>10}",
            if rigid { "strongly rigid" } else { "not rigid" },
            census.count(rigid, Stability::Stable),
            census.count(rigid, Stability::UnstableSaddle),
            census.count(rigid, Stability::Degenerate)
        ));
        out.row(
            "census",
            &serde_json::json!({
                "strongly_rigid": rigid,
                "stable": census.count(rigid, Stability::Stable),
                "unstable_saddle": census.count(rigid, Stability::UnstableSaddle),
                "degenerate": census.count(rigid, Stability::Degenerate),
            }),
        );
    }
}

pub fn enumerate(out: &mut Emitter, scenario: &Path) -> Result<(), Failure> {
    let loaded = load(scenario, out)?;
    loaded.validate()?;
    let catalog = enumerate_target_orbits(&loaded.graph, &loaded.targets).map_err(|e| Failure::Check(e.to_string()))?;
    let expected = 1usize << (loaded.graph.vertex_count() - 2);
    out.line(format!(
        "{} target orbit(s) (2^(N-2) = {expected}), minimum separation {}",
        catalog.len(),
        catalog.min_separation().map_or("n/a".into(), |d| format!("{d:.4e}"))
    ));
    for (i, entry) in catalog.entries.iter().enumerate() {
        out.line(format!("  #{:<3} {}", i + 1, if entry.signs.is_empty() { "(base)" } else { &entry.signs }));
        out.row(
            "orbit",
            &serde_json::json!({ "index": i + 1, "signs": entry.signs, "coordinates": coords(&entry.configuration) }),
        );
        out.file(format!("orbit_{:03}.txt", i + 1), write_configuration(&entry.configuration));
    }
    if !catalog.duplicates.is_empty() {
        out.line(format!("  coinciding sign words: {}", catalog.duplicates.join(" ")));
    }
    Ok(())
}

pub fn basin(out: &mut Emitter, scenario: &Path, trials: usize, seed: Option<u64>) -> Result<(), Failure> {
    let loaded = load(scenario, out)?;
    let system = loaded.system()?;
    let seed = loaded.seed(seed);
    out.info.seed = Some(seed);
    let report = basin_monte_carlo(&system, trials, &loaded.sampler(), seed).map_err(|e| match e {
        trilaman::AnalysisError::NoTrials => Failure::Usage(e.to_string()),
        other => Failure::Numerical(other.to_string()),
    })?;
    for r in &report.records {
        out.row("trial", r);
    }
    let fraction = report.target_fraction(1e-5);
    out.line(format!("{} trials, seed {}", report.trials, report.seed));
    for (i, hits) in report.orbit_hits.iter().enumerate() {
        out.line(format!("  orbit #{:<3} {hits}", i + 1));
    }
    out.line(format!(
        "  non-target {} ({} stable), ambiguous {}, failed {}",
        report.non_target,
        report.stable_non_target(),
        report.ambiguous,
        report.failures
    ));
    out.line(format!("target fraction (all |d - d̄| < 1e-5): {:.4}", fraction));
    out.row(
        "summary",
        &serde_json::json!({
            "trials": report.trials,
            "seed": report.seed,
            "orbit_hits": report.orbit_hits,
            "non_target": report.non_target,
            "ambiguous": report.ambiguous,
            "failures": report.failures,
            "target_fraction": fraction,
        }),
    );
    Ok(())
}

struct Checks<'a> {
    out: &'a mut Emitter,
    failed: Vec<String>,
    inconclusive: Vec<String>,
}

impl Checks<'_> {
    fn record(&mut self, name: &str, verdict: Verdict, detail: String) {
        self.out.line(format!("{:<5} {name}: {detail}", verdict.to_string().to_uppercase()));
        self.out.row("check", &serde_json::json!({ "check": name, "verdict": verdict, "detail": detail }));
        match verdict {
            Verdict::Pass => {}
            Verdict::Fail => self.failed.push(name.into()),
            Verdict::Inconclusive => self.inconclusive.push(name.into()),
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.record(name, if ok { Verdict::Pass } else { Verdict::Fail }, detail);
    }
}

pub fn verify(
    out: &mut Emitter,
    scenario: &Path,
    trials: usize,
    seed: Option<u64>,
    min_target_fraction: f64,
) -> Result<(), Failure> {
    let loaded = load(scenario, out)?;
    let seed = loaded.seed(seed);
    out.info.seed = Some(seed);
    let mut checks = Checks {
        out,
        failed: Vec::new(),
        inconclusive: Vec::new(),
    };
    if let Err(f) = loaded.validate() {
        let detail = match &f {
            Failure::Check(m) | Failure::Usage(m) | Failure::Numerical(m) => m.clone(),
        };
        checks.check("targets", false, detail);
        return Err(Failure::Check("targets".into()));
    }
    checks.check("targets", true, "strict triangle inequalities on every 3-cycle".into());
    let system = loaded.system()?;
    let opts = loaded.analysis(None);
    let n = system.agent_count();

    let catalog = enumerate_target_orbits(system.graph(), &system.targets()).map_err(|e| Failure::Check(e.to_string()))?;
    let expected = 1usize << (n - 2);
    checks.check(
        "orbit-count",
        catalog.len() == expected,
        format!("{} distinct target orbits, expected {expected}", catalog.len()),
    );

    let targets: Vec<Configuration64> = catalog.entries.iter().map(|e| e.configuration.clone()).collect();
    let census = stability_census(&system, &targets, &opts).map_err(|e| Failure::Numerical(e.to_string()))?;
    let stable = census.count(true, Stability::Stable);
    checks.check(
        "targets-stable",
        stable == targets.len(),
        format!("{stable} of {} catalog orbits strongly rigid with signature (0, {}, 3)", targets.len(), 2 * n - 3),
    );

    let lines = all_line_equilibria(&system, &loaded.newton()).map_err(|e| Failure::Numerical(e.to_string()))?;
    let mut unstable = 0;
    let mut degenerate = 0;
    for rec in &lines {
        let c = classify_orbit(&system, &rec.configuration, opts.zero_tol).map_err(|e| Failure::Numerical(e.to_string()))?;
        match c.verdict {
            Stability::Degenerate => degenerate += 1,
            _ if c.co_index() >= 1 => unstable += 1,
            _ => {}
        }
    }
    checks.check(
        "line-equilibria-unstable",
        unstable + degenerate == lines.len(),
        format!("{unstable} of {} line equilibria have n+ >= 1 ({degenerate} degenerate skipped)", lines.len()),
    );

    let mut index = (0, 0, 0);
    for p in targets.iter().chain(lines.iter().map(|r| &r.configuration)) {
        match verify_morse_bott(&system, p, &opts).map(|r| r.verdict()) {
            Ok(Verdict::Pass) => index.0 += 1,
            Ok(Verdict::Fail) => index.1 += 1,
            Ok(Verdict::Inconclusive) => index.2 += 1,
            Err(e) => return Err(Failure::Numerical(e.to_string())),
        }
    }
    checks.check(
        "index-formula",
        index.1 == 0,
        format!("{} pass, {} fail, {} inconclusive", index.0, index.1, index.2),
    );

    if n >= 3 {
        let mut reduction = (0, 0, 0);
        for rec in &lines {
            match verify_reduction_formula(&system, &rec.configuration, &opts).map(|r| r.verdict()) {
                Ok(Verdict::Pass) => reduction.0 += 1,
                Ok(Verdict::Fail) => reduction.1 += 1,
                Ok(Verdict::Inconclusive) => reduction.2 += 1,
                Err(e) => return Err(Failure::Numerical(e.to_string())),
            }
        }
        checks.check(
            "reduction-formula",
            reduction.1 == 0,
            format!("{} pass, {} fail, {} inconclusive", reduction.0, reduction.1, reduction.2),
        );
    }

    if trials > 0 {
        let report = basin_monte_carlo(&system, trials, &loaded.sampler(), seed)
            .map_err(|e| Failure::Numerical(e.to_string()))?;
        let fraction = report.target_fraction(1e-5);
        let stable_non_target = report
            .records
            .iter()
            .filter(|r| matches!(r.outcome, TrialOutcome::NonTarget { verdict: Stability::Stable, .. }))
            .count();
        checks.check(
            "basin",
            fraction >= min_target_fraction && stable_non_target == 0,
            format!(
                "{:.4} of {trials} trials reach a target orbit (need {min_target_fraction}); {} non-target, {} failed",
                fraction, report.non_target, report.failures
            ),
        );
    }

    let Checks { out, failed, inconclusive } = checks;
    if !failed.is_empty() {
        out.line(format!("FAIL ({})", failed.join(", ")));
        Err(Failure::Check(failed.join(", ")))
    } else if !inconclusive.is_empty() {
        out.line(format!("INCONCLUSIVE ({})", inconclusive.join(", ")));
        Err(Failure::Numerical(inconclusive.join(", ")))
    } else {
        out.line("PASS");
        Ok(())
    }
}
