mod common;

use common::*;
use proptest::prelude::*;
use rwodsn::classify::{
    classify_point, constraint1, constraint2, count_non_isolated, label_from_graph, run_stats,
    Degeneracy, RunStats,
};
use rwodsn::{
    detect_features, synth, DsnDescriptor, DsnParams, FeatureLabel, GridEdge, GridNode, Point3,
    PointCloud, SynthShape, WalkGraph,
};

const ROWS: usize = 5;
const COLS: usize = 10;

fn flat() -> DsnDescriptor {
    DsnDescriptor::from_heights(&vec![vec![Some(0.0); COLS]; ROWS], &DsnParams::default(), 1.0).unwrap()
}

fn all_edges() -> Vec<GridEdge> {
    let mut out: Vec<GridEdge> = (0..COLS).map(GridEdge::Spoke).collect();
    for i in 0..ROWS {
        for j in 0..COLS {
            out.push(GridEdge::Row(i, j));
            if i > 0 {
                out.push(GridEdge::Col(i, j));
            }
        }
    }
    out
}

fn map_edge(e: GridEdge, f: impl Fn(usize) -> usize) -> GridEdge {
    let (a, b) = e.endpoints(COLS);
    let m = |n: GridNode| match n {
        GridNode::Cell(i, j) => GridNode::Cell(i, f(j)),
        t => t,
    };
    GridEdge::between(m(a), m(b), ROWS, COLS).unwrap()
}

fn brute_non_isolated(edges: &[GridEdge]) -> usize {
    let mut touched = [[false; COLS]; ROWS];
    for e in edges {
        let (a, b) = e.endpoints(COLS);
        for n in [a, b] {
            if let GridNode::Cell(i, j) = n {
                touched[i][j] = true;
            }
        }
    }
    touched.iter().flatten().filter(|&&t| t).count()
}

/// Longest run of vertices joined by consecutive edges, trying every start.
fn brute_runs(edges: &[GridEdge]) -> RunStats {
    let has = |e: GridEdge| edges.contains(&e);
    let row_con_max = (0..ROWS)
        .map(|i| {
            let occupied = 1; // every vertex of the flat grid is occupied
            let mut best = occupied;
            for start in 0..COLS {
                let mut len = 1;
                while len < COLS && has(GridEdge::Row(i, (start + len) % COLS)) {
                    len += 1;
                }
                best = best.max(len);
            }
            best
        })
        .collect();
    let col_con_max = (0..COLS)
        .map(|j| {
            let mut best = 1;
            for start in 0..ROWS {
                let mut len = 1;
                while start + len < ROWS && has(GridEdge::Col(start + len, j)) {
                    len += 1;
                }
                best = best.max(len);
            }
            best
        })
        .collect();
    RunStats {
        row_con_max,
        col_con_max,
    }
}

#[test]
fn constraint1_boundaries() {
    let p = DsnParams::default();
    assert!(constraint1(45, &p).unwrap());
    assert!(!constraint1(44, &p).unwrap());
    let q = DsnParams::with_grid(30.0, 4);
    assert!(constraint1(43, &q).unwrap());
    assert!(!constraint1(42, &q).unwrap());
}

#[test]
fn constraint2_examples() {
    let p = DsnParams::default();
    let rows = |r: [usize; 5]| RunStats {
        row_con_max: r.to_vec(),
        col_con_max: vec![1; 10],
    };
    assert!(constraint2(&rows([5, 5, 5, 1, 1]), &p).unwrap());
    assert!(!constraint2(&rows([10, 10, 1, 1, 1]), &p).unwrap());
    let mut cols = vec![3; 10];
    for j in [0, 4, 7] {
        cols[j] = 4;
    }
    let stats = RunStats {
        row_con_max: vec![1; 5],
        col_con_max: cols,
    };
    assert!(constraint2(&stats, &p).unwrap());
}

#[test]
fn run_examples() {
    let p = DsnParams::default();
    let dsn = flat();
    let g = |edges: Vec<GridEdge>| WalkGraph::from_adjacency(ROWS, COLS, edges, &p).unwrap();
    let full_row: Vec<GridEdge> = (0..COLS).map(|j| GridEdge::Row(2, j)).collect();
    assert_eq!(run_stats(&g(full_row), &dsn).row_con_max[2], 10);
    let two = vec![GridEdge::Row(1, 1), GridEdge::Row(1, 2)];
    assert_eq!(run_stats(&g(two), &dsn).row_con_max[1], 3);
    let wrap = vec![GridEdge::Row(3, 9), GridEdge::Row(3, 0)];
    assert_eq!(run_stats(&g(wrap), &dsn).row_con_max[3], 3);
    let empty = g(vec![]);
    assert_eq!(count_non_isolated(&empty, &dsn), 0);
    let full = g(all_edges());
    assert_eq!(count_non_isolated(&full, &dsn), 50);
    assert_eq!(label_from_graph(&full, &dsn, &p).unwrap(), FeatureLabel::NonFeatureSmooth);
    assert_eq!(label_from_graph(&empty, &dsn, &p).unwrap(), FeatureLabel::Feature);
}

#[test]
fn empty_vertices_are_isolated() {
    let p = DsnParams::default();
    let mut heights = vec![vec![Some(0.0); COLS]; ROWS];
    heights[4][4] = None;
    let dsn = DsnDescriptor::from_heights(&heights, &p, 1.0).unwrap();
    let graph = WalkGraph::from_adjacency(ROWS, COLS, vec![GridEdge::Row(4, 4)], &p).unwrap();
    assert_eq!(count_non_isolated(&graph, &dsn), 1);
}

#[test]
fn tiny_clouds_are_degenerate_features() {
    let pts = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)];
    let cloud = PointCloud::with_normals(pts, vec![nalgebra::Vector3::z(); 2]).unwrap();
    let labels = detect_features(&cloud, &DsnParams::default(), 0).unwrap();
    assert_eq!(labels, vec![FeatureLabel::Feature; 2]);
    let c = classify_point(&cloud, 0, &DsnParams::default(), 0).unwrap();
    assert!(c.degenerate.is_some());

    let single = PointCloud::with_normals(vec![Point3::origin()], vec![nalgebra::Vector3::z()]).unwrap();
    let c = classify_point(&single, 0, &DsnParams::default(), 0).unwrap();
    assert_eq!(c.degenerate, Some(Degeneracy::EmptyNeighborhood));
}

#[test]
fn detection_needs_normals_and_points() {
    let p = DsnParams::default();
    let bare = PointCloud::new(random_points(20, 1)).unwrap();
    assert!(detect_features(&bare, &p, 0).is_err());
    let empty = PointCloud::with_normals(vec![], vec![]).unwrap();
    assert!(detect_features(&empty, &p, 0).is_err());
}

#[test]
fn plane_interior_is_smooth() {
    let cloud = plane(60, 0.05, 9);
    let p = DsnParams::default();
    for t in [30 * 60 + 30, 20 * 60 + 40, 35 * 60 + 22] {
        let c = classify_point(&cloud, t, &p, 3).unwrap();
        assert_eq!(c.label, FeatureLabel::NonFeatureSmooth);
    }
}

#[test]
fn wedge_crease_and_flanks() {
    let shape = SynthShape::Wedge { angle_deg: 90.0 };
    let lc = synth(shape, 0.01, 1.0, 2).unwrap();
    let p = DsnParams::default();
    let labels = detect_features(&lc.cloud, &p, 5).unwrap();
    let gt = lc.ground_truth.as_ref().unwrap();
    // crease points away from the wedge ends
    let interior = |i: usize| lc.cloud.point(i).y.abs() < 0.4;
    let crease: Vec<usize> = (0..lc.len()).filter(|&i| gt[i] && interior(i)).collect();
    let hit = crease.iter().filter(|&&i| labels[i].is_feature()).count();
    assert!(hit as f64 >= 0.9 * crease.len() as f64, "{hit} of {}", crease.len());

    // a point on one face about 2r from the crease sees long runs on its own face
    let r = lc.cloud.mean_sampling_density(p.k_density).unwrap();
    let flank: Vec<usize> = (0..lc.len())
        .filter(|&i| interior(i) && (shape.crease_distance(lc.cloud.point(i), 1.0) - 2.0 * r).abs() < 0.3 * r)
        .collect();
    let near_edge = flank.iter().filter(|&&i| labels[i] == FeatureLabel::NonFeatureNearEdge).count();
    assert!(near_edge as f64 >= 0.8 * flank.len() as f64, "{near_edge} of {}", flank.len());
}

#[test]
fn scaling_keeps_labels() {
    let lc = synth(SynthShape::Cube, 0.05, 1.0, 3).unwrap();
    let p = DsnParams::default();
    let base = detect_features(&lc.cloud, &p, 17).unwrap();
    for s in [0.125, 4.0] {
        let scaled = lc.cloud.map(|q| Point3::from(q.coords * s), |n| *n).unwrap();
        assert_eq!(detect_features(&scaled, &p, 17).unwrap(), base, "scale {s}");
    }
}

#[test]
fn parallel_matches_sequential() {
    let lc = synth(SynthShape::Cylinder, 0.05, 1.0, 4).unwrap();
    let p = DsnParams::default();
    let seq = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| detect_features(&lc.cloud, &p, 8).unwrap());
    let par = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| detect_features(&lc.cloud, &p, 8).unwrap());
    assert_eq!(seq, par);
    assert_eq!(detect_features(&lc.cloud, &p, 8).unwrap(), seq);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn constraints_ignore_column_gauge(mask in prop::collection::vec(prop::bool::weighted(0.6), 100), shift in 0usize..COLS) {
        let p = DsnParams::default();
        let dsn = flat();
        let edges: Vec<GridEdge> = all_edges().into_iter().zip(&mask).filter(|(_, &m)| m).map(|(e, _)| e).collect();
        let base = WalkGraph::from_adjacency(ROWS, COLS, edges.clone(), &p).unwrap();
        let stats = run_stats(&base, &dsn);
        prop_assert_eq!(count_non_isolated(&base, &dsn), brute_non_isolated(&edges));
        prop_assert_eq!(&stats, &brute_runs(&edges));

        let label = label_from_graph(&base, &dsn, &p).unwrap();
        let mut sorted_cols = stats.col_con_max.clone();
        sorted_cols.sort_unstable();
        for f in [
            Box::new(move |j: usize| (j + shift) % COLS) as Box<dyn Fn(usize) -> usize>,
            Box::new(|j: usize| (COLS - j) % COLS),
        ] {
            let moved: Vec<GridEdge> = edges.iter().map(|&e| map_edge(e, &f)).collect();
            let g = WalkGraph::from_adjacency(ROWS, COLS, moved, &p).unwrap();
            let s = run_stats(&g, &dsn);
            prop_assert_eq!(count_non_isolated(&g, &dsn), count_non_isolated(&base, &dsn));
            prop_assert_eq!(&s.row_con_max, &stats.row_con_max);
            let mut c = s.col_con_max.clone();
            c.sort_unstable();
            prop_assert_eq!(&c, &sorted_cols);
            prop_assert_eq!(constraint1(count_non_isolated(&g, &dsn), &p).unwrap(), constraint1(count_non_isolated(&base, &dsn), &p).unwrap());
            prop_assert_eq!(constraint2(&s, &p).unwrap(), constraint2(&stats, &p).unwrap());
            prop_assert_eq!(label_from_graph(&g, &dsn, &p).unwrap(), label);
        }
    }
}
