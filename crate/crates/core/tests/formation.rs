mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trilaman::analysis::{
    enumerate_target_orbits, random_targets, verify_morse_bott, verify_reduction_formula, AnalysisOptions, Verdict,
};
use trilaman::geometry::DEFAULT_COLLINEARITY_TOL;
use trilaman::integrate::{integrate, IntegrationControls};
use trilaman::newton::{find_line_equilibria, line_orderings, refine_equilibrium, NewtonOptions};
use trilaman::partition::independent_partition;
use trilaman::spectral::classify_orbit;
use trilaman::{FormationSystem64, LawFamily, Stability, TriangulatedLamanGraph, ZeroTol};

use common::{admissible_partitions, line_degenerate_embedding, masks_of, random_configuration, random_system};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn catalog_entries_realize_the_targets(n in 2usize..7, seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = TriangulatedLamanGraph::random(n, &mut r).unwrap();
        let targets = random_targets(&g, &mut r);
        let catalog = enumerate_target_orbits(&g, &targets).unwrap();
        prop_assert_eq!(catalog.len(), 1 << (n - 2));
        for entry in &catalog.entries {
            for e in g.edges() {
                let d: f64 = entry.configuration.distance(e.lo(), e.hi());
                prop_assert!((d - targets.get(*e).unwrap()).abs() < 1e-9);
            }
            prop_assert_eq!(entry.signs.len(), n - 2);
        }
    }

    #[test]
    fn flow_decreases_the_potential(n in 2usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_system(&mut r, n);
        let p = random_configuration(&mut r, s.graph(), 0.2);
        let traj = integrate(&s, &p, 50.0, &IntegrationControls::default()).unwrap();
        for w in traj.potentials.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn partition_is_the_unique_coarsest_admissible_one(n in 3usize..7, seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = TriangulatedLamanGraph::random(n, &mut r).unwrap();
        let p = line_degenerate_embedding(&mut r, &g);
        let ours = masks_of(&g, &independent_partition(&g, &p, DEFAULT_COLLINEARITY_TOL).blocks);
        let all = admissible_partitions(&g, &p, DEFAULT_COLLINEARITY_TOL);
        prop_assert!(all.iter().any(|b| b.iter().copied().collect::<std::collections::BTreeSet<u32>>() == ours));
        for blocks in &all {
            prop_assert!(blocks.len() >= ours.len());
            prop_assert!(blocks.iter().all(|&b| ours.iter().any(|&o| b & o == b)));
        }
    }

    #[test]
    fn index_formula_at_refined_equilibria(n in 3usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_system(&mut r, n);
        let start = random_configuration(&mut r, s.graph(), 0.2);
        if let Ok(eq) = refine_equilibrium(&s, &start, &NewtonOptions::default()) {
            let report = verify_morse_bott(&s, &eq.configuration, &AnalysisOptions::default()).unwrap();
            prop_assert_ne!(report.verdict(), Verdict::Fail);
        }
    }
}

#[test]
fn triangle_has_two_stable_orbits_and_one_saddle_per_ordering() {
    let g = TriangulatedLamanGraph::random(3, &mut rng(0)).unwrap();
    let s = FormationSystem64::uniform_standard(g.clone(), 1.0).unwrap();
    let targets = s.targets();
    let catalog = enumerate_target_orbits(&g, &targets).unwrap();
    assert_eq!(catalog.len(), 2);
    for e in &catalog.entries {
        assert_eq!(classify_orbit(&s, &e.configuration, ZeroTol::default()).unwrap().verdict, Stability::Stable);
    }
    for ordering in line_orderings(3) {
        for found in find_line_equilibria(&s, &ordering, &NewtonOptions::default()).unwrap() {
            let c = classify_orbit(&s, &found.configuration, ZeroTol::default()).unwrap();
            assert_eq!(c.verdict, Stability::UnstableSaddle, "{ordering:?}");
        }
    }
}

#[test]
fn reduction_formula_on_random_line_equilibria() {
    let mut r = rng(11);
    let mut checked = 0;
    for n in [3, 4, 5] {
        let g = TriangulatedLamanGraph::random(n, &mut r).unwrap();
        let targets = random_targets(&g, &mut r);
        let s = FormationSystem64::from_targets(g, LawFamily::Standard, &targets).unwrap();
        for ordering in line_orderings(n).into_iter().take(4) {
            for found in find_line_equilibria(&s, &ordering, &NewtonOptions::default()).unwrap() {
                let report = verify_reduction_formula(&s, &found.configuration, &AnalysisOptions::default()).unwrap();
                assert_eq!(report.verdict(), Verdict::Pass);
                assert!(report.a.congruence_holds() && report.b.congruence_holds());
                checked += 1;
            }
        }
    }
    assert!(checked >= 10);
}
