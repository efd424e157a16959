#![allow(clippy::needless_range_loop)]

//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (visible with `--nocapture`).
//!
//! Heavy pipeline runs are shared across criteria through `OnceLock` so the
//! suite stays fast and every criterion sees the same deterministic run.

use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use mmiso::dcisomap::{dc_isomap, DcIsomapOptions};
use mmiso::error::Error;
use mmiso::graph::{
    all_pairs_shortest_paths, connect_components, euclid, knn_graph, label_components,
    shortest_paths, DistanceMatrix, NeighborhoodGraph, UNREACHED,
};
use mmiso::isomap::{isomap, Neighborhood};
use mmiso::linalg::{pca_embed, qr_orthonormalize, solve_affine_lsq, Matrix};
use mmiso::mds::{classical_mds, tau};
use mmiso::metrics::{procrustes_residual, residual_variance};
use mmiso::misomap::{m_isomap, MIsomapOptions, MIsomapResult};
use mmiso::synth::{gen_strip_and_disc, gen_three_strips, gen_two_strips, PointSet, SplitMix64};

const SEED: u64 = 7;

/// Serializes the wall-clock-sensitive tests against the other heavy suite
/// so scheduling noise stays out of the timing ratio. Poison from an earlier
/// failed test is irrelevant here; the guard only orders execution.
fn timing_guard() -> std::sync::MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|poison| poison.into_inner())
}

fn two_strips_run() -> &'static (MIsomapResult, Duration) {
    static RUN: OnceLock<(MIsomapResult, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let x = gen_two_strips(1200, SEED).expect("generator");
        let opts = MIsomapOptions {
            k: 8,
            per_manifold_k: None,
            dim: 2,
            lambda: None,
        };
        let start = Instant::now();
        let result = m_isomap(&x, &opts).expect("m-isomap on two strips");
        (result, start.elapsed())
    })
}

fn three_strips_run() -> &'static MIsomapResult {
    static RUN: OnceLock<MIsomapResult> = OnceLock::new();
    RUN.get_or_init(|| {
        let x = gen_three_strips(1600, SEED).expect("generator");
        let opts = MIsomapOptions {
            k: 8,
            per_manifold_k: None,
            dim: 2,
            lambda: None,
        };
        m_isomap(&x, &opts).expect("m-isomap on three strips")
    })
}

fn dc_revised_run() -> &'static mmiso::dcisomap::DcIsomapResult {
    static RUN: OnceLock<mmiso::dcisomap::DcIsomapResult> = OnceLock::new();
    RUN.get_or_init(|| {
        let x = gen_two_strips(1200, SEED).expect("generator");
        let mut opts = DcIsomapOptions::new(8, 2, true);
        opts.beta = 2.0;
        dc_isomap(&x, &opts).expect("revised D-C isomap on two strips")
    })
}

/// Max relative deviation between final and standalone pairwise distances
/// over one manifold's points.
fn max_isometry_deviation(
    final_embedding: &Matrix,
    indices: &[usize],
    own_embedding: &Matrix,
) -> f64 {
    let mut worst = 0.0f64;
    for (a, &ga) in indices.iter().enumerate() {
        for (b, &gb) in indices.iter().enumerate().skip(a + 1) {
            let d_final = euclid(final_embedding.row(ga), final_embedding.row(gb));
            let d_own = euclid(own_embedding.row(a), own_embedding.row(b));
            let dev = if d_own > 0.0 {
                (d_final - d_own).abs() / d_own
            } else {
                (d_final - d_own).abs()
            };
            worst = worst.max(dev);
        }
    }
    worst
}

#[test]
fn criterion_01_mds_exactness() {
    let mut rng = SplitMix64::new(SEED);
    let n = 50;
    let mut pts = Matrix::zeros(n, 3);
    for i in 0..n {
        for j in 0..3 {
            pts.set(i, j, rng.uniform(-2.0, 2.0));
        }
    }
    let d = DistanceMatrix::euclidean(&pts);
    let start = Instant::now();
    let out = classical_mds(&d, 3).expect("embed");
    let elapsed = start.elapsed();
    let residual = procrustes_residual(&pts, &out.embedding).expect("procrustes");
    assert!(
        residual < 1e-8,
        "criterion 1: FAIL residual {residual:.3e} >= 1e-8"
    );
    assert!(
        elapsed < Duration::from_secs(1),
        "criterion 1: FAIL runtime {elapsed:?} >= 1 s"
    );
    println!(
        "criterion 1 (MDS exactness): PASS residual={residual:.3e} runtime={:.3}s",
        elapsed.as_secs_f64()
    );
}

/// Independent Floyd–Warshall oracle.
fn floyd_warshall(g: &NeighborhoodGraph) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    let mut d = vec![vec![UNREACHED; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
        for &(j, w) in g.neighbors(i) {
            row[j] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

#[test]
fn criterion_02_shortest_path_oracle() {
    let mut rng = SplitMix64::new(SEED ^ 0x51CE);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let n = 10 + (rng.next_u64() % 41) as usize; // 10..=50
        let mut g = NeighborhoodGraph::new(n);
        // Random edges over a connecting cycle.
        for i in 0..n {
            let j = (i + 1) % n;
            g.add_edge(i, j, rng.uniform(0.1, 1.1));
        }
        for i in 0..n {
            for j in (i + 2)..n {
                if rng.next_f64() < 0.15 && !(i == 0 && j == n - 1) {
                    g.add_edge(i, j, rng.uniform(0.1, 1.1));
                }
            }
        }
        let oracle = floyd_warshall(&g);
        let sources: Vec<usize> = (0..n).collect();
        let rows = shortest_paths(&g, &sources);
        for i in 0..n {
            for j in 0..n {
                let a = rows[i][j];
                let b = oracle[i][j];
                assert!(a.is_finite(), "trial {trial}: unreachable pair ({i},{j})");
                let dev = (a - b).abs() / a.abs().max(1.0);
                worst = worst.max(dev);
                assert!(
                    dev <= 1e-12,
                    "criterion 2: FAIL trial {trial} pair ({i},{j}): {a} vs {b}"
                );
            }
        }
    }
    println!("criterion 2 (shortest-path oracle, 20 graphs): PASS worst_rel_dev={worst:.3e}");
}

#[test]
fn criterion_03_kcc_graph_invariants() {
    let x = gen_strip_and_disc(1200, SEED).expect("generator");
    let k = 8;
    let g = knn_graph(&x, k).expect("knn");
    let labels = label_components(&g);
    assert_eq!(
        labels.component_count(),
        2,
        "criterion 3: FAIL expected 2 components"
    );
    let (joined, warnings) = connect_components(&g, &labels, &x, Some(k));
    assert!(
        warnings.is_empty(),
        "criterion 3: FAIL shortfall warnings {warnings:?}"
    );
    let rejoined = label_components(&joined);
    assert_eq!(
        rejoined.component_count(),
        1,
        "criterion 3: FAIL output not connected"
    );
    let mut edge_uses = vec![0usize; x.len()];
    for (pair, edges) in joined.inter_edges() {
        assert_eq!(
            edges.len(),
            k,
            "criterion 3: FAIL pair {pair:?} has {} inter edges, expected {k}",
            edges.len()
        );
        for e in edges {
            edge_uses[e.u] += 1;
            edge_uses[e.v] += 1;
        }
    }
    assert!(
        edge_uses.iter().all(|&c| c <= 1),
        "criterion 3: FAIL a vertex carries more than one inter-manifold edge"
    );
    println!(
        "criterion 3 (k-CC invariants): PASS M=2 inter_edges={} per pair, vertex-disjoint",
        k
    );
}

#[test]
fn criterion_04_m_isomap_intra_manifold_isometry() {
    let (result, elapsed) = two_strips_run();
    assert_eq!(result.labels.component_count(), 2);
    let mut worst = 0.0f64;
    for manifold in &result.manifolds {
        let dev = max_isometry_deviation(&result.embedding, &manifold.indices, &manifold.embedding);
        worst = worst.max(dev);
    }
    assert!(
        worst <= 1e-9,
        "criterion 4: FAIL max relative deviation {worst:.3e} > 1e-9"
    );
    // The two embedded strips stay apart.
    let a = &result.manifolds[0].indices;
    let b = &result.manifolds[1].indices;
    let mut min_gap = f64::INFINITY;
    for &i in a {
        for &j in b {
            min_gap = min_gap.min(euclid(result.embedding.row(i), result.embedding.row(j)));
        }
    }
    assert!(
        min_gap > 0.0,
        "criterion 4: FAIL embedded strips touch (gap {min_gap})"
    );
    assert!(
        *elapsed < Duration::from_secs(60),
        "criterion 4: FAIL runtime {elapsed:?} >= 60 s"
    );
    println!(
        "criterion 4 (M-Isomap isometry): PASS worst_rel_dev={worst:.3e} strip_gap={min_gap:.3} runtime={:.1}s",
        elapsed.as_secs_f64()
    );
}

/// Simpson quadrature for the spiral arc length ∫√(1+t²) dt.
fn spiral_arc_length(a: f64, b: f64) -> f64 {
    let n = 20001;
    let h = (b - a) / (n - 1) as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let t = a + h * i as f64;
        let w = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * (1.0 + t * t).sqrt();
    }
    sum * h / 3.0
}

#[test]
fn criterion_05_strip_dimensions() {
    let pi = std::f64::consts::PI;
    let arc = spiral_arc_length(pi / 6.0, pi / 2.0);
    // Quadrature oracle sanity pin (closed form ≈ 1.532563523885).
    assert!((arc - 1.5325635).abs() < 1e-6);
    let expected = {
        let mut e = [9.0, arc];
        e.sort_by(|a, b| b.partial_cmp(a).unwrap());
        e
    };

    let (result, _elapsed) = two_strips_run();
    let mut report = String::new();
    let mut worst_rel = 0.0f64;
    for (mi, manifold) in result.manifolds.iter().enumerate() {
        let pts = {
            let mut m = Matrix::zeros(manifold.indices.len(), 2);
            for (r, &gi) in manifold.indices.iter().enumerate() {
                m.row_mut(r).copy_from_slice(result.embedding.row(gi));
            }
            m
        };
        let aligned = pca_embed(&pts, 2).expect("pca");
        let mut extents = [0.0f64; 2];
        for (c, ext) in extents.iter_mut().enumerate() {
            let col: Vec<f64> = (0..aligned.rows()).map(|r| aligned.get(r, c)).collect();
            *ext = col.iter().cloned().fold(f64::MIN, f64::max)
                - col.iter().cloned().fold(f64::MAX, f64::min);
        }
        extents.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in extents.iter().zip(&expected) {
            worst_rel = worst_rel.max((got - want).abs() / want);
        }
        report.push_str(&format!(" strip{mi}=[{:.4},{:.4}]", extents[0], extents[1]));
    }
    let verdict = if worst_rel <= 0.05 { "PASS" } else { "FAIL" };
    println!(
        "criterion 5 (strip extents vs analytic [{:.4},{:.4}]): {verdict}{report} worst_rel={:.1}%",
        expected[0],
        expected[1],
        100.0 * worst_rel
    );
    // Known shortfall: shortest paths on a k-NN graph overestimate intrinsic
    // distances (zigzag between samples), which widens the short extent of
    // each embedded strip by ~8-13% at this density and k. The bound is kept
    // as stated rather than loosened to mask that behavior.
    assert!(
        worst_rel <= 0.05,
        "criterion 5: FAIL worst extent deviation {:.1}% > 5%",
        100.0 * worst_rel
    );
}

#[test]
fn criterion_06_transforms_orthonormal() {
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    let (two, _) = two_strips_run();
    for t in &two.transforms {
        worst = worst.max(t.orthonormality_error());
        checked += 1;
    }
    for t in &three_strips_run().transforms {
        worst = worst.max(t.orthonormality_error());
        checked += 1;
    }
    for t in &dc_revised_run().transforms {
        worst = worst.max(t.orthonormality_error());
        checked += 1;
    }
    assert!(
        worst < 1e-8,
        "criterion 6: FAIL ||AᵀA − I||max = {worst:.3e} >= 1e-8"
    );
    println!("criterion 6 (orthonormal transforms): PASS {checked} transforms, worst={worst:.3e}");
}

#[test]
fn criterion_07_dc_isomap_two_clusters() {
    let x = gen_two_strips(1200, SEED).expect("generator");

    // Original mode: the documented failure.
    let original = DcIsomapOptions::new(8, 2, false);
    match dc_isomap(&x, &original) {
        Err(Error::InsufficientClusters { found, needed, .. }) => {
            assert_eq!((found, needed), (2, 3));
        }
        other => panic!("criterion 7: FAIL original mode returned {other:?}"),
    }

    // Revised mode completes after adding fictitious clusters.
    let result = dc_revised_run();
    assert!(
        !result.fictitious.is_empty(),
        "criterion 7: FAIL no fictitious cluster was added"
    );
    for fc in &result.fictitious {
        assert!(fc.accepted);
        assert!(
            fc.ratio > 0.5 && fc.ratio < 2.0,
            "criterion 7: FAIL ratio {} outside (1/2, 2)",
            fc.ratio
        );
    }
    let mut worst = 0.0f64;
    for cluster in &result.clusters {
        let dev = max_isometry_deviation(&result.embedding, &cluster.indices, &cluster.embedding);
        worst = worst.max(dev);
    }
    assert!(
        worst <= 1e-9,
        "criterion 7: FAIL intra-cluster deviation {worst:.3e} > 1e-9"
    );
    println!(
        "criterion 7 (revised D-C): PASS fictitious={} gamma={} ratio={:.3} worst_rel_dev={worst:.3e}",
        result.fictitious.len(),
        result.fictitious[0].gamma,
        result.fictitious[0].ratio
    );
}

#[test]
fn criterion_08_three_manifolds() {
    let result = three_strips_run();
    assert_eq!(
        result.labels.component_count(),
        3,
        "criterion 8: FAIL expected M=3"
    );
    let mut worst = 0.0f64;
    for manifold in &result.manifolds {
        let dev = max_isometry_deviation(&result.embedding, &manifold.indices, &manifold.embedding);
        worst = worst.max(dev);
    }
    assert!(
        worst <= 1e-9,
        "criterion 8: FAIL max relative deviation {worst:.3e} > 1e-9"
    );
    println!("criterion 8 (three manifolds): PASS M=3 worst_rel_dev={worst:.3e}");
}

#[test]
fn criterion_09_scaling_sanity() {
    // Wait for the heavy shared runs so their rayon load does not skew the
    // measurement.
    let _ = two_strips_run();
    let _ = three_strips_run();
    let _ = dc_revised_run();
    let _guard = timing_guard();

    let opts = MIsomapOptions {
        k: 8,
        per_manifold_k: None,
        dim: 2,
        lambda: None,
    };
    let x600 = gen_two_strips(600, SEED).expect("generator");
    let x1200 = gen_two_strips(1200, SEED).expect("generator");
    m_isomap(&x600, &opts).expect("warm-up run");
    let time_once = |x: &mmiso::synth::PointSet| -> f64 {
        let t = Instant::now();
        m_isomap(x, &opts).expect("timed run");
        t.elapsed().as_secs_f64()
    };
    // Back-to-back pairs share whatever ambient load exists; the best pair
    // estimates the true ratio.
    let mut ratio = f64::INFINITY;
    let mut report = (0.0, 0.0);
    for _ in 0..3 {
        let small = time_once(&x600);
        let big = time_once(&x1200);
        if big / small < ratio {
            ratio = big / small;
            report = (small, big);
        }
    }
    assert!(
        ratio < 10.0,
        "criterion 9: FAIL doubling N scaled wall time by {ratio:.2} >= 10"
    );
    println!(
        "criterion 9 (scaling): PASS t(600)={:.2}s t(1200)={:.2}s ratio={ratio:.2}",
        report.0, report.1
    );
}

#[test]
fn criterion_10_randomized_property_suites() {
    let _guard = timing_guard();
    let trials = 100;
    linalg_properties(trials);
    graph_properties(trials);
    mds_properties(trials);
    pipeline_properties(trials);
    dc_properties(trials);
    synth_properties(trials);
    metric_properties(trials);
    skeleton_fidelity();
    println!("criterion 10 (property suites): PASS {trials} trials per module suite");
}

/// Same-manifold skeleton members embed with residual variance below 0.1 on
/// the two-strips dataset.
fn skeleton_fidelity() {
    let x = gen_two_strips(1200, SEED).expect("generator");
    let (decomposition, _w) = mmiso::misomap::decompose(&x, 8, None, 2).expect("decompose");
    let (skeleton, _w2) = mmiso::misomap::build_skeleton(&decomposition).expect("skeleton");
    for (mi, members) in skeleton.members.iter().enumerate() {
        let l = members.len();
        if l < 3 {
            continue;
        }
        let mut d_ref = DistanceMatrix::zeros(l);
        let mut d_emb = DistanceMatrix::zeros(l);
        for a in 0..l {
            let ra = skeleton.offsets[mi] + a;
            for b in (a + 1)..l {
                let rb = skeleton.offsets[mi] + b;
                d_ref.set_sym(a, b, skeleton.distances.get(ra, rb));
                d_emb.set_sym(
                    a,
                    b,
                    euclid(skeleton.embedding.row(ra), skeleton.embedding.row(rb)),
                );
            }
        }
        let rv = residual_variance(&d_ref, &d_emb).expect("residual variance");
        assert!(rv < 0.1, "manifold {mi}: skeleton residual variance {rv}");
    }
    println!("  skeleton fidelity: PASS");
}

fn random_points(rng: &mut SplitMix64, n: usize, d: usize, scale: f64) -> Matrix {
    let mut m = Matrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            m.set(i, j, rng.uniform(-scale, scale));
        }
    }
    m
}

fn linalg_properties(trials: usize) {
    let mut rng = SplitMix64::new(SEED ^ 0xA11);
    for _ in 0..trials {
        let n = 2 + (rng.next_u64() % 7) as usize;
        // Symmetric eigenproblem residual and orthonormality.
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.uniform(-1.0, 1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        let eig = mmiso::linalg::symmetric_eig(&m, n).expect("eig");
        let scale = m.max_abs();
        for c in 0..n {
            let v = eig.vector(c);
            let mv = m.matvec(&v);
            for i in 0..n {
                assert!((mv[i] - eig.values[c] * v[i]).abs() < 1e-9 * scale);
            }
            // Unit length and mutual orthogonality.
            for c2 in 0..=c {
                let dot: f64 = v.iter().zip(eig.vector(c2)).map(|(a, b)| a * b).sum();
                let expected = if c == c2 { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-10);
            }
        }

        // QR invariants.
        let a = random_points(&mut rng, n, n, 2.0);
        if let Ok(f) = qr_orthonormalize(&a) {
            if !f.perturbed {
                let qr = f.q.matmul(&f.r);
                let amax = a.max_abs();
                for i in 0..n {
                    assert!(f.r.get(i, i) >= 0.0);
                    for j in 0..n {
                        assert!((qr.get(i, j) - a.get(i, j)).abs() < 1e-10 * amax.max(1.0));
                    }
                }
                let qtq = f.q.transpose().matmul(&f.q);
                for i in 0..n {
                    for j in 0..n {
                        let e = if i == j { 1.0 } else { 0.0 };
                        assert!((qtq.get(i, j) - e).abs() < 1e-10);
                    }
                }
            }
        }

        // Affine recovery at vanishing regularization.
        let d = 2 + (rng.next_u64() % 2) as usize;
        let l = d + 2;
        let y = random_points(&mut rng, d, l, 1.5);
        let lin = random_points(&mut rng, d, d, 1.0);
        let shift: Vec<f64> = (0..d).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let mut ry = lin.matmul(&y);
        for c in 0..l {
            for r in 0..d {
                ry.set(r, c, ry.get(r, c) + shift[r]);
            }
        }
        if let Ok((a_fit, b_fit)) = solve_affine_lsq(&y, &ry, 1e-12) {
            for r in 0..d {
                for c in 0..d {
                    assert!((a_fit.get(r, c) - lin.get(r, c)).abs() < 1e-6);
                }
                assert!((b_fit[r] - shift[r]).abs() < 1e-6);
            }
        }

        // PCA translation invariance.
        let pts = random_points(&mut rng, 6, 3, 2.0);
        let emb = pca_embed(&pts, 2).expect("pca");
        let mut moved = pts.clone();
        let t: Vec<f64> = (0..3).map(|_| rng.uniform(-5.0, 5.0)).collect();
        for i in 0..6 {
            for j in 0..3 {
                moved.set(i, j, moved.get(i, j) + t[j]);
            }
        }
        let emb2 = pca_embed(&moved, 2).expect("pca");
        for i in 0..6 {
            for j in 0..2 {
                assert!((emb.get(i, j) - emb2.get(i, j)).abs() < 1e-9);
            }
        }
    }
    println!("  linalg invariants: PASS");
}

fn graph_properties(trials: usize) {
    let mut rng = SplitMix64::new(SEED ^ 0x6AF);
    for _ in 0..trials {
        let n = 6 + (rng.next_u64() % 10) as usize;
        let pts = random_points(&mut rng, n, 2, 3.0);
        let x = PointSet::new(pts, None).expect("points");
        let k = 1 + (rng.next_u64() % (n as u64 - 2)) as usize;
        let g = match knn_graph(&x, k) {
            Ok(g) => g,
            Err(_) => continue, // duplicate draw
        };
        // Degree >= k under union symmetrization.
        for v in 0..n {
            assert!(g.neighbors(v).len() >= k);
        }
        // Monotonicity in k.
        if k + 1 < n {
            let bigger = knn_graph(&x, k + 1).expect("knn");
            for v in 0..n {
                for &(u, _) in g.neighbors(v) {
                    assert!(bigger.has_edge(v, u));
                }
            }
        }
        // Shortest-path symmetry and triangle inequality.
        let labels = label_components(&g);
        let (joined, _w) = connect_components(&g, &labels, &x, Some(k));
        let dm = all_pairs_shortest_paths(&joined);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(dm.get(i, j), dm.get(j, i));
                for h in 0..n {
                    assert!(dm.get(i, j) <= dm.get(i, h) + dm.get(h, j) + 1e-9);
                }
            }
        }
        // Inter-edge vertex-disjointness (absent forced fallbacks).
        let mut uses = vec![0usize; n];
        for edges in joined.inter_edges().values() {
            for e in edges {
                uses[e.u] += 1;
                uses[e.v] += 1;
            }
        }
        let forced = labels.component_count() >= 3;
        if !forced {
            assert!(uses.iter().all(|&c| c <= 1));
        }
    }
    println!("  graph invariants: PASS");
}

fn mds_properties(trials: usize) {
    let mut rng = SplitMix64::new(SEED ^ 0x3D5);
    for _ in 0..trials {
        let n = 4 + (rng.next_u64() % 12) as usize;
        let d = 1 + (rng.next_u64() % 3) as usize;
        let pts = random_points(&mut rng, n, d, 2.0);
        let dm = DistanceMatrix::euclidean(&pts);
        // Tau output is symmetric with vanishing row sums.
        let t = tau(&dm).expect("tau");
        for i in 0..n {
            let sum: f64 = t.row(i).iter().sum();
            assert!(sum.abs() < 1e-10 * t.max_abs().max(1.0));
            for j in 0..n {
                assert_eq!(t.get(i, j), t.get(j, i));
            }
        }
        // Euclidean reconstruction and scale equivariance.
        if let Ok(out) = classical_mds(&dm, d) {
            for i in 0..n {
                for j in (i + 1)..n {
                    let de = euclid(out.embedding.row(i), out.embedding.row(j));
                    let dd = dm.get(i, j);
                    assert!((de - dd).abs() <= 1e-8 * dd.max(1e-12));
                }
            }
            let c = rng.uniform(0.5, 3.0);
            let mut scaled = DistanceMatrix::zeros(n);
            for i in 0..n {
                for j in (i + 1)..n {
                    scaled.set_sym(i, j, c * dm.get(i, j));
                }
            }
            if let Ok(out_scaled) = classical_mds(&scaled, d) {
                for i in 0..n {
                    for j in 0..d {
                        let a = c * out.embedding.get(i, j);
                        let b = out_scaled.embedding.get(i, j);
                        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
                    }
                }
            }
        }
    }
    println!("  mds invariants: PASS");
}

fn dc_properties(trials: usize) {
    let mut rng = SplitMix64::new(SEED ^ 0xDC1);
    let mut completed = 0usize;
    for _ in 0..trials {
        // Minimax center has minimal eccentricity on random metric data.
        let n = 4 + (rng.next_u64() % 8) as usize;
        let mut dm = DistanceMatrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                dm.set_sym(i, j, rng.uniform(0.1, 2.0));
            }
        }
        let c = mmiso::dcisomap::minimax_center(&dm);
        let ecc = |i: usize| (0..n).map(|j| dm.get(i, j)).fold(0.0f64, f64::max);
        for i in 0..n {
            assert!(ecc(c) <= ecc(i) + 1e-15);
        }

        // Interpolated references stay on the segment.
        let a = [rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)];
        let b = [rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)];
        let (d1, d0, d2) = (rng.next_f64(), 0.1 + rng.next_f64(), rng.next_f64());
        let sy = mmiso::dcisomap::interpolate_reference(&a, &b, d1, d0, d2).expect("interp");
        let s = d1 / (d1 + d0 + d2);
        for c in 0..2 {
            assert!((sy[c] - (a[c] + s * (b[c] - a[c]))).abs() < 1e-12);
        }

        // Revised D-C on two separated blobs: accepted fictitious clusters
        // honor the ratio bound, final clusters stay internally isometric.
        let per = 8 + (rng.next_u64() % 5) as usize;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for i in 0..(2 * per) {
            let off = if i < per { -6.0 } else { 6.0 };
            rows.push(vec![off + rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)]);
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let Ok(x) = PointSet::new(Matrix::from_rows(&refs), None) else {
            continue;
        };
        let mut opts = mmiso::dcisomap::DcIsomapOptions::new(4, 2, true);
        opts.beta = 2.0;
        let Ok(result) = mmiso::dcisomap::dc_isomap(&x, &opts) else {
            continue; // tiny blobs occasionally disconnect or reject every gamma
        };
        completed += 1;
        for fc in &result.fictitious {
            assert!(fc.ratio > 0.5 && fc.ratio < 2.0);
        }
        for cluster in &result.clusters {
            let dev =
                max_isometry_deviation(&result.embedding, &cluster.indices, &cluster.embedding);
            assert!(dev <= 1e-9);
        }
    }
    assert!(
        completed > trials / 2,
        "too few D-C runs completed: {completed}"
    );
    println!("  dcisomap invariants: PASS ({completed} full runs)");
}

fn synth_properties(trials: usize) {
    let mut rng = SplitMix64::new(SEED ^ 0x5E5);
    for _ in 0..trials {
        let seed = rng.next_u64();
        let n = 8 + 4 * (rng.next_u64() % 20) as usize;
        let ps = gen_three_strips(n, seed).expect("generator");
        // Points sit exactly on the spiral surface.
        for i in 0..ps.len() {
            let p = ps.point(i);
            let t = (p[0] * p[0] + p[2] * p[2]).sqrt();
            let err = (p[0] - t * t.cos()).abs() + (p[2] - t * t.sin()).abs();
            assert!(err < 1e-12);
        }
        // Seeded determinism.
        let again = gen_three_strips(n, seed).expect("generator");
        assert_eq!(ps.coords().data(), again.coords().data());
    }
    println!("  synth invariants: PASS");
}

fn pipeline_properties(trials: usize) {
    let mut rng = SplitMix64::new(SEED ^ 0x915);
    for trial in 0..trials {
        // Two well-separated planar blobs.
        let per = 8 + (rng.next_u64() % 6) as usize;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for i in 0..(2 * per) {
            let off = if i < per { -6.0 } else { 6.0 };
            rows.push(vec![off + rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)]);
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = match PointSet::new(Matrix::from_rows(&refs), None) {
            Ok(x) => x,
            Err(_) => continue,
        };
        let opts = MIsomapOptions {
            k: 4,
            per_manifold_k: None,
            dim: 2,
            lambda: None,
        };
        let result = match m_isomap(&x, &opts) {
            Ok(r) => r,
            Err(_) => continue, // occasional disconnected blob at tiny sizes
        };
        // Intra-manifold isometry.
        for manifold in &result.manifolds {
            let dev =
                max_isometry_deviation(&result.embedding, &manifold.indices, &manifold.embedding);
            assert!(dev <= 1e-9, "trial {trial}: deviation {dev:.3e}");
        }
        // Determinism.
        let again = m_isomap(&x, &opts).expect("rerun");
        assert_eq!(result.embedding.data(), again.embedding.data());
        // Flat data reproduces itself through classical Isomap up to a rigid
        // motion whenever the graph is connected with no shortcuts (complete
        // graph over one blob guarantees both).
        let blob_rows: Vec<Vec<f64>> = rows[..per].to_vec();
        let blob_refs: Vec<&[f64]> = blob_rows.iter().map(|r| r.as_slice()).collect();
        if let Ok(blob) = PointSet::new(Matrix::from_rows(&blob_refs), None) {
            if let Ok(out) = isomap(&blob, Neighborhood::K(per - 1), 2) {
                let res = procrustes_residual(blob.coords(), &out.embedding).expect("procrustes");
                assert!(
                    res < 1e-8,
                    "trial {trial}: flat reproduction residual {res:.3e}"
                );
            }
        }

        // Route distances dominate straight lines.
        if result.labels.component_count() == 2 {
            let (decomposition, _w) = mmiso::misomap::decompose(&x, 4, None, 2).expect("decompose");
            let m0 = &decomposition.manifolds[0];
            let m1 = &decomposition.manifolds[1];
            for (a, &ga) in m0.indices.iter().enumerate() {
                for (b, &gb) in m1.indices.iter().enumerate() {
                    let route = mmiso::misomap::inter_manifold_distance(&decomposition, 1, a, 2, b)
                        .expect("route");
                    let straight = euclid(x.point(ga), x.point(gb));
                    assert!(route >= straight - 1e-9);
                }
            }
        }
    }
    println!("  pipeline invariants: PASS");
}

fn metric_properties(trials: usize) {
    let mut rng = SplitMix64::new(SEED ^ 0xF00);
    for _ in 0..trials {
        let n = 4 + (rng.next_u64() % 8) as usize;
        let a = random_points(&mut rng, n, 2, 2.0);
        let b = random_points(&mut rng, n, 2, 2.0);
        let ab = procrustes_residual(&a, &b).expect("procrustes");
        let ba = procrustes_residual(&b, &a).expect("procrustes");
        assert!((ab - ba).abs() < 1e-10);
        // Invariance under a rigid motion of one argument.
        let ang = rng.uniform(0.0, std::f64::consts::TAU);
        let (c, s) = (ang.cos(), ang.sin());
        let mut b2 = Matrix::zeros(n, 2);
        for i in 0..n {
            let (x, y) = (b.get(i, 0), b.get(i, 1));
            b2.set(i, 0, c * x - s * y + 3.0);
            b2.set(i, 1, s * x + c * y - 7.0);
        }
        let moved = procrustes_residual(&a, &b2).expect("procrustes");
        assert!((ab - moved).abs() < 1e-9);

        // Residual variance stays inside [0,1].
        let da = DistanceMatrix::euclidean(&a);
        let db = DistanceMatrix::euclidean(&b);
        match residual_variance(&da, &db) {
            Ok(rv) => assert!((0.0..=1.0).contains(&rv)),
            Err(Error::ConstantMatrix) => {}
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }
    println!("  metric invariants: PASS");
}

#[test]
fn classical_isomap_still_errors_on_multi_manifold_data() {
    // The failure mode motivating everything above: classical Isomap refuses
    // disconnected data, naming the component count.
    let x = gen_two_strips(400, SEED).expect("generator");
    match isomap(&x, Neighborhood::K(8), 2) {
        Err(Error::Disconnected { components }) => assert_eq!(components, 2),
        other => panic!("expected disconnection, got {other:?}"),
    }
}
