mod common;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trilaman::geometry::{canonicalize, orbit_distance, rho};
use trilaman::graph::recover_henneberg;
use trilaman::io::{read_configuration, read_graph, write_configuration, write_graph};
use trilaman::spectral::{hessian, sorted_eigenvalues};
use trilaman::{Configuration64, TriangulatedLamanGraph};

use common::{random_configuration, random_se2, random_system};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_count_and_round_trip(n in 2usize..12, seed in any::<u64>()) {
        let g = TriangulatedLamanGraph::random(n, &mut rng(seed)).unwrap();
        prop_assert_eq!(g.edge_count(), 2 * n - 3);
        let text = write_graph(&g);
        let back = read_graph(&text).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
        prop_assert_eq!(write_graph(&back), text);
    }

    #[test]
    fn recovered_sequence_rebuilds_the_edges(n in 2usize..10, seed in any::<u64>()) {
        let g = TriangulatedLamanGraph::random(n, &mut rng(seed)).unwrap();
        let vertices: Vec<usize> = (0..n).collect();
        let rec = recover_henneberg(&vertices, g.edges()).unwrap();
        let mut relabeled: Vec<_> = rec
            .graph()
            .edges()
            .iter()
            .map(|e| trilaman::Edge::new(rec.labels[e.lo()], rec.labels[e.hi()]))
            .collect();
        relabeled.sort();
        prop_assert_eq!(relabeled, g.edges().to_vec());
    }

    #[test]
    fn configuration_text_round_trips(coords in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..10)) {
        let p = Configuration64::from_xy(&coords);
        let text = write_configuration(&p);
        let q: Configuration64 = read_configuration(&text).unwrap();
        prop_assert_eq!(&q, &p);
        prop_assert_eq!(write_configuration(&q), text);
    }

    #[test]
    fn se2_composition_and_inverse(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random_se2(&mut r), random_se2(&mut r));
        let g = TriangulatedLamanGraph::random(4, &mut r).unwrap();
        let p = random_configuration(&mut r, &g, 0.1);
        let lhs = a.compose(&b).apply(&p);
        let rhs = a.apply(&b.apply(&p));
        prop_assert!(orbit_distance(&lhs, &rhs) < 1e-12);
        let back = a.inverse().apply(&a.apply(&p));
        for (x, y) in back.points().iter().zip(p.points()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn invariance_under_rigid_motions(n in 2usize..8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_system(&mut r, n);
        let p = random_configuration(&mut r, s.graph(), 0.1);
        let g = random_se2(&mut r);
        let q = g.apply(&p);
        for (a, b) in rho(s.graph(), &p).iter().zip(rho(s.graph(), &q)) {
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
        let (phi_p, phi_q) = (s.potential(&p).unwrap(), s.potential(&q).unwrap());
        prop_assert!((phi_p - phi_q).abs() <= 1e-10 * phi_p.abs().max(1.0));
        let (cp, cq) = (canonicalize(&p).unwrap(), canonicalize(&q).unwrap());
        for (a, b) in cp.points().iter().zip(cq.points()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
        // the vector field rotates with the configuration
        let fp = g.rotate_field(&s.vector_field(&p).unwrap());
        for (a, b) in fp.iter().zip(s.vector_field(&q).unwrap()) {
            prop_assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0));
        }
        let ep = sorted_eigenvalues(&hessian(&s, &p).unwrap());
        let eq = sorted_eigenvalues(&hessian(&s, &q).unwrap());
        let scale = ep.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        for (a, b) in ep.iter().zip(&eq) {
            prop_assert!((a - b).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences(n in 2usize..7, seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_system(&mut r, n);
        let p = random_configuration(&mut r, s.graph(), 0.2);
        let x = p.to_flat();
        let h = 1e-6;
        let grad = s.gradient(&p).unwrap();
        let hess = s.potential_hessian(&p).unwrap();
        for k in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += h;
            xm[k] -= h;
            let (pp, pm) = (Configuration64::from_flat(&xp), Configuration64::from_flat(&xm));
            let fd = (s.potential(&pp).unwrap() - s.potential(&pm).unwrap()) / (2.0 * h);
            prop_assert!((fd - grad[k]).abs() <= 1e-6 * grad[k].abs().max(1.0), "grad {k}: {fd} vs {}", grad[k]);
            let (gp, gm) = (s.gradient(&pp).unwrap(), s.gradient(&pm).unwrap());
            for j in 0..x.len() {
                let fd = (gp[j] - gm[j]) / (2.0 * h);
                prop_assert!((fd - hess[(j, k)]).abs() <= 1e-5 * hess[(j, k)].abs().max(1.0));
            }
        }
    }
}

#[test]
fn vector_field_is_minus_gradient() {
    let mut r = rng(5);
    let s = random_system(&mut r, 5);
    let p = random_configuration(&mut r, s.graph(), 0.2);
    let field = s.vector_field(&p).unwrap();
    let grad = s.gradient(&p).unwrap();
    for (i, v) in field.iter().enumerate() {
        assert_relative_eq!(v.x, -grad[2 * i], epsilon = 1e-12);
        assert_relative_eq!(v.y, -grad[2 * i + 1], epsilon = 1e-12);
    }
}

#[test]
fn flow_hessian_is_negated_potential_hessian() {
    let mut r = rng(6);
    let s = random_system(&mut r, 4);
    let p = random_configuration(&mut r, s.graph(), 0.2);
    let diff = hessian(&s, &p).unwrap() + s.potential_hessian(&p).unwrap();
    assert!(diff.amax() == 0.0);
}
