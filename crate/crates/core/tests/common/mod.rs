#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector2;
use rand::Rng;
use trilaman::analysis::random_targets;
use trilaman::geometry::{line_deviation, Point};
use trilaman::{Configuration64, Edge, FormationSystem64, HennebergStep, LawFamily, Se2, TriangulatedLamanGraph};

/// Every Henneberg step sequence on `n` vertices.
pub fn all_graphs(n: usize) -> Vec<TriangulatedLamanGraph> {
    fn extend(steps: &mut Vec<HennebergStep>, n: usize, out: &mut Vec<TriangulatedLamanGraph>) {
        let g = TriangulatedLamanGraph::build(steps).unwrap();
        if g.vertex_count() == n {
            out.push(g);
            return;
        }
        let v = g.vertex_count();
        for e in g.edges().to_vec() {
            steps.push(HennebergStep::new(v, e.lo(), e.hi()));
            extend(steps, n, out);
            steps.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), n, &mut out);
    out
}

pub fn random_system<R: Rng>(rng: &mut R, n: usize) -> FormationSystem64 {
    let g = TriangulatedLamanGraph::random(n, rng).unwrap();
    let targets = random_targets(&g, rng);
    FormationSystem64::from_targets(g, LawFamily::Standard, &targets).unwrap()
}

pub fn random_se2<R: Rng>(rng: &mut R) -> Se2<f64> {
    Se2::new(
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        Vector2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
    )
}

/// Random configuration whose adjacent agents are at least `min_sep` apart.
pub fn random_configuration<R: Rng>(rng: &mut R, graph: &TriangulatedLamanGraph, min_sep: f64) -> Configuration64 {
    loop {
        let pts: Vec<Point<f64>> = (0..graph.vertex_count())
            .map(|_| Point::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect();
        let p = Configuration64::new(pts);
        if graph.edges().iter().all(|e| p.distance(e.lo(), e.hi()) >= min_sep) {
            return p;
        }
    }
}

/// Embedding in which each new vertex lands on the line of its parents with
/// probability one half, and in general position otherwise.
pub fn line_degenerate_embedding<R: Rng>(rng: &mut R, graph: &TriangulatedLamanGraph) -> Configuration64 {
    let mut pts = vec![Point::new(0.0, 0.0), Point::new(rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0))];
    for s in graph.steps() {
        let (a, b) = (pts[s.parent.0], pts[s.parent.1]);
        let q = if rng.random_bool(0.5) {
            let mut t: f64 = rng.random_range(-1.5..2.5);
            if t.abs() < 0.1 || (t - 1.0).abs() < 0.1 {
                t += 0.3;
            }
            a + (b - a) * t
        } else {
            Point::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
        };
        pts.push(q);
    }
    Configuration64::new(pts)
}

/// Exhaustive test (every peeling order) that the edges form a triangulated
/// Laman graph on the vertices they touch.
pub fn is_triangulated_laman(edges: &[Edge]) -> bool {
    let set: BTreeSet<Edge> = edges.iter().copied().collect();
    let vertices: BTreeSet<usize> = set.iter().flat_map(|e| [e.lo(), e.hi()]).collect();
    if set.len() + 3 != 2 * vertices.len() {
        return false;
    }
    fn peel(edges: &BTreeSet<Edge>, vertices: &BTreeSet<usize>) -> bool {
        if vertices.len() == 2 {
            return edges.len() == 1;
        }
        for &v in vertices {
            let nbrs: Vec<usize> = edges.iter().filter_map(|e| e.other(v)).collect();
            if let [j, k] = nbrs[..] {
                if edges.contains(&Edge::new(j, k)) {
                    let mut e2 = edges.clone();
                    e2.remove(&Edge::new(v, j));
                    e2.remove(&Edge::new(v, k));
                    let mut v2 = vertices.clone();
                    v2.remove(&v);
                    if peel(&e2, &v2) {
                        return true;
                    }
                }
            }
        }
        false
    }
    peel(&set, &vertices)
}

/// Every partition of the edge set into blocks that are triangulated Laman
/// graphs embedded on a line.
pub fn admissible_partitions(graph: &TriangulatedLamanGraph, p: &Configuration64, tol: f64) -> Vec<Vec<u32>> {
    let edges = graph.edges();
    let m = edges.len();
    let mut valid = vec![false; 1 << m];
    for mask in 1u32..(1 << m) {
        let block: Vec<Edge> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
        if !is_triangulated_laman(&block) {
            continue;
        }
        let vertices: BTreeSet<usize> = block.iter().flat_map(|e| [e.lo(), e.hi()]).collect();
        let pts: Vec<Point<f64>> = vertices.iter().map(|&v| p.point(v)).collect();
        valid[mask as usize] = pts.len() == 2 || line_deviation(&pts) < tol;
    }
    fn rec(remaining: u32, valid: &[bool], current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if remaining == 0 {
            out.push(current.clone());
            return;
        }
        let low = remaining & remaining.wrapping_neg();
        let rest = remaining & !low;
        // all subsets of `rest`, each joined with the lowest edge
        let mut sub = rest;
        loop {
            let block = sub | low;
            if valid[block as usize] {
                current.push(block);
                rec(remaining & !block, valid, current, out);
                current.pop();
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut out = Vec::new();
    rec((1u32 << m) - 1, &valid, &mut Vec::new(), &mut out);
    out
}

pub fn masks_of(graph: &TriangulatedLamanGraph, blocks: &[Vec<Edge>]) -> BTreeSet<u32> {
    let index: BTreeMap<Edge, usize> = graph.edges().iter().enumerate().map(|(i, e)| (*e, i)).collect();
    blocks
        .iter()
        .map(|b| b.iter().fold(0u32, |m, e| m | 1 << index[e]))
        .collect()
}

/// Five agents (steps 3←1,2; 4←1,3; 5←3,4) with unit targets except on edge (1,4):
/// agents 1–3 sit on a line at the collinear saddle with agent 1 in the
/// middle, agents 3–5 on a second line at angle `theta` with agent 5 in the
/// middle, and edge (1,4) is exactly at its target.
pub fn two_line_equilibrium(theta: f64) -> (FormationSystem64, Configuration64) {
    let h = 0.5f64.sqrt();
    let u = Point::new(theta.cos(), theta.sin());
    let x2 = Point::new(h, 0.0);
    let pts = vec![Point::new(0.0, 0.0), Point::new(-h, 0.0), x2, x2 + u * (2.0 * h), x2 + u * h];
    let p = Configuration64::new(pts);
    let g = TriangulatedLamanGraph::build(&[
        HennebergStep::new(2, 0, 1),
        HennebergStep::new(3, 0, 2),
        HennebergStep::new(4, 2, 3),
    ])
    .unwrap();
    let mut targets: BTreeMap<Edge, f64> = g.edges().iter().map(|e| (*e, 1.0)).collect();
    targets.insert(Edge::new(0, 3), p.distance(0, 3));
    let targets = trilaman::TargetDistances64::new(targets).unwrap();
    (FormationSystem64::from_targets(g, LawFamily::Standard, &targets).unwrap(), p)
}
