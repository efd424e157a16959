//! End-to-end classical Isomap and k-CC Isomap pipelines.

use crate::error::{Error, Result, Warning};
use crate::graph::{
    all_pairs_shortest_paths, connect_components, eps_graph, knn_graph, label_components,
    ComponentLabels, NeighborhoodGraph,
};
use crate::linalg::Matrix;
use crate::mds::classical_mds;
use crate::synth::PointSet;

/// Neighborhood rule for graph construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Neighborhood {
    K(usize),
    Eps(f64),
}

impl Neighborhood {
    pub(crate) fn build(&self, x: &PointSet) -> Result<NeighborhoodGraph> {
        match *self {
            Neighborhood::K(k) => knn_graph(x, k),
            Neighborhood::Eps(e) => eps_graph(x, e),
        }
    }
}

/// Embedding plus the non-fatal events recorded along the way.
#[derive(Debug, Clone)]
pub struct IsomapOutput {
    pub embedding: Matrix,
    pub warnings: Vec<Warning>,
}

/// Classical Isomap: neighborhood graph, all-pairs graph geodesics, then
/// classical MDS. A disconnected graph is an error naming the component
/// count.
pub fn isomap(x: &PointSet, nbr: Neighborhood, dim: usize) -> Result<IsomapOutput> {
    let g = nbr.build(x)?;
    let labels = label_components(&g);
    if labels.component_count() > 1 {
        return Err(Error::Disconnected {
            components: labels.component_count(),
        });
    }
    isomap_on_graph(&g, dim)
}

/// Isomap steps 2–3 on an already-built connected graph.
pub(crate) fn isomap_on_graph(g: &NeighborhoodGraph, dim: usize) -> Result<IsomapOutput> {
    let dm = all_pairs_shortest_paths(g);
    let out = classical_mds(&dm, dim)?;
    let warnings = out.warnings();
    Ok(IsomapOutput {
        embedding: out.embedding,
        warnings,
    })
}

/// k-CC Isomap: the k-NN graph is completed with the k shortest
/// vertex-disjoint inter-component edges, then classical Isomap runs on the
/// connected result. Never fails on disconnection.
pub fn kcc_isomap(x: &PointSet, k: usize, dim: usize) -> Result<(IsomapOutput, ComponentLabels)> {
    let g = knn_graph(x, k)?;
    let labels = label_components(&g);
    let (joined, mut warnings) = connect_components(&g, &labels, x, Some(k));
    let mut out = isomap_on_graph(&joined, dim)?;
    warnings.append(&mut out.warnings);
    Ok((
        IsomapOutput {
            embedding: out.embedding,
            warnings,
        },
        labels,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::euclid;

    fn line_points(xs: &[f64]) -> PointSet {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 0.0]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        PointSet::new(Matrix::from_rows(&refs), None).unwrap()
    }

    #[test]
    fn isomap_flat_line_recovers_arc_length() {
        // Evenly spaced points on a segment: the 1D embedding matches the
        // arc-length positions up to a rigid motion.
        let xs: Vec<f64> = (0..20).map(|i| 0.5 * i as f64).collect();
        let x = line_points(&xs);
        let out = isomap(&x, Neighborhood::K(2), 1).unwrap();
        let emb = &out.embedding;
        for i in 0..20 {
            for j in (i + 1)..20 {
                let de = (emb.get(i, 0) - emb.get(j, 0)).abs();
                let expected = 0.5 * (j - i) as f64;
                assert!(
                    (de - expected).abs() < 1e-8,
                    "pair ({i},{j}): {de} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn isomap_quarter_circle_extent() {
        // 200 points densely sampling a quarter circle of radius 1: the 1D
        // embedded extent is close to the arc length π/2. Graph geodesics sum
        // chords, so the match is within a couple of percent.
        let n = 200;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = std::f64::consts::FRAC_PI_2 * i as f64 / (n - 1) as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let x = PointSet::new(Matrix::from_rows(&refs), None).unwrap();
        let out = isomap(&x, Neighborhood::K(4), 1).unwrap();
        let col: Vec<f64> = (0..n).map(|i| out.embedding.get(i, 0)).collect();
        let extent = col.iter().cloned().fold(f64::MIN, f64::max)
            - col.iter().cloned().fold(f64::MAX, f64::min);
        let arc = std::f64::consts::FRAC_PI_2;
        assert!(
            (extent - arc).abs() / arc < 0.02,
            "extent {extent} vs arc {arc}"
        );
    }

    #[test]
    fn isomap_disconnected_errors_with_count() {
        let x = line_points(&[0.0, 1.0, 50.0, 51.0]);
        match isomap(&x, Neighborhood::K(1), 1) {
            Err(Error::Disconnected { components }) => assert_eq!(components, 2),
            other => panic!("expected disconnection error, got {other:?}"),
        }
    }

    #[test]
    fn kcc_equals_isomap_on_single_manifold() {
        let xs: Vec<f64> = (0..15).map(|i| 0.3 * i as f64).collect();
        let x = line_points(&xs);
        let plain = isomap(&x, Neighborhood::K(2), 1).unwrap();
        let (kcc, labels) = kcc_isomap(&x, 2, 1).unwrap();
        assert_eq!(labels.component_count(), 1);
        for i in 0..15 {
            assert_eq!(plain.embedding.get(i, 0), kcc.embedding.get(i, 0));
        }
    }

    #[test]
    fn kcc_completes_on_two_strips() {
        // Two separated strips: classical Isomap refuses, k-CC joins them and
        // embeds the whole set (deformation along the joint is expected and
        // not asserted).
        let x = crate::synth::gen_two_strips(400, 7).unwrap();
        let (out, labels) = kcc_isomap(&x, 8, 2).unwrap();
        assert_eq!(labels.component_count(), 2);
        assert!(out.embedding.all_finite());
        assert_eq!(out.embedding.rows(), 400);
    }

    #[test]
    fn kcc_four_point_line_preserves_path_geodesics() {
        // {0,1} ∪ {10,11} with k=1 becomes the path 0–1–10–11; a path embeds
        // isometrically in 1D, so all graph distances survive.
        let x = line_points(&[0.0, 1.0, 10.0, 11.0]);
        let (out, labels) = kcc_isomap(&x, 1, 1).unwrap();
        assert_eq!(labels.component_count(), 2);
        let g_dist = [
            [0.0, 1.0, 10.0, 11.0],
            [1.0, 0.0, 9.0, 10.0],
            [10.0, 9.0, 0.0, 1.0],
            [11.0, 10.0, 1.0, 0.0],
        ];
        for i in 0..4 {
            for j in (i + 1)..4 {
                let de = euclid(out.embedding.row(i), out.embedding.row(j));
                assert!(
                    (de - g_dist[i][j]).abs() <= 1e-8 * g_dist[i][j],
                    "pair ({i},{j}): {de} vs {}",
                    g_dist[i][j]
                );
            }
        }
    }
}
