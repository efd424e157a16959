//! Multi-manifold Isomap: per-manifold embeddings, inter-manifold distance
//! approximation, skeleton embedding, and rigid-transform composition.
//!
//! Each detected manifold is unrolled on its own, a small skeleton of
//! inter-edge endpoints and furthest cross pairs is embedded jointly, and a
//! rigid transform per manifold carries the standalone embedding onto its
//! skeleton slice. Rigid maps preserve distances exactly, which is what makes
//! the intra-manifold isometry hold to rounding error.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result, Warning};
use crate::graph::{
    all_pairs_shortest_paths, connect_components, knn_graph, label_components, ComponentLabels,
    DistanceMatrix,
};
use crate::linalg::{
    qr_orthonormalize, recompute_translation, solve_affine_lsq, Matrix, RigidTransform,
};
use crate::mds::classical_mds;
use crate::synth::PointSet;

/// One detected manifold: its global point indices, rebuilt-graph geodesics
/// and standalone embedding.
#[derive(Debug, Clone)]
pub struct Manifold {
    /// Global indices of the member points, in component order.
    pub indices: Vec<usize>,
    /// Per-manifold geodesic matrix over the rebuilt graph (finite).
    pub geodesics: DistanceMatrix,
    /// Standalone classical-Isomap embedding, rows aligned with `indices`.
    pub embedding: Matrix,
    /// Neighborhood size used for the rebuilt graph.
    pub k_used: usize,
}

/// Inter-edge endpoints and the cross-distance matrix for one manifold pair.
#[derive(Debug, Clone)]
pub struct PairData {
    /// Edges as (local index in the lower manifold, local index in the
    /// higher manifold, Euclidean length), in insertion order.
    pub edges: Vec<(usize, usize, f64)>,
    /// Approximated geodesics across the pair, lower-manifold rows.
    pub cross: Matrix,
    /// Row-major argmax of `cross`: the furthest cross pair (local indices).
    pub furthest: (usize, usize),
}

/// Decomposition of the data into manifolds plus everything the composition
/// step needs.
#[derive(Debug, Clone)]
pub struct ManifoldDecomposition {
    pub manifolds: Vec<Manifold>,
    /// Keyed by 1-based component-id pairs `(m, n)` with `m < n`.
    pub pairs: std::collections::BTreeMap<(usize, usize), PairData>,
    pub labels: ComponentLabels,
    pub dim: usize,
}

impl ManifoldDecomposition {
    pub fn manifold_count(&self) -> usize {
        self.manifolds.len()
    }
}

/// Skeleton: selected points per manifold, their joint distance matrix and
/// its embedding.
#[derive(Debug, Clone)]
pub struct Skeleton {
    /// Per manifold: local indices of the skeleton members, in first-use order.
    pub members: Vec<Vec<usize>>,
    /// Joint distance matrix over the flattened skeleton.
    pub distances: DistanceMatrix,
    /// Classical-MDS embedding of the skeleton, rows in flattened order.
    pub embedding: Matrix,
    /// Row offset of each manifold's slice within `embedding`.
    pub offsets: Vec<usize>,
}

/// Timing of one pipeline stage, in seconds.
#[derive(Debug, Clone)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

/// Options for [`m_isomap`].
#[derive(Debug, Clone)]
pub struct MIsomapOptions {
    /// Neighborhood size for the k-CC step and the per-manifold default.
    pub k: usize,
    /// Optional per-manifold neighborhood sizes (component order).
    pub per_manifold_k: Option<Vec<usize>>,
    /// Shared target dimension.
    pub dim: usize,
    /// Regularizer for the transform fit; defaults to
    /// `1e-8 · trace` of the fit's normal matrix when absent.
    pub lambda: Option<f64>,
}

/// Full M-Isomap result.
#[derive(Debug, Clone)]
pub struct MIsomapResult {
    /// N×d final embedding, aligned index-for-index with the input.
    pub embedding: Matrix,
    pub labels: ComponentLabels,
    /// Per-manifold standalone embeddings (for isometry checks).
    pub manifolds: Vec<Manifold>,
    /// Rigid transform applied to each manifold (identity when M = 1).
    pub transforms: Vec<RigidTransform>,
    pub warnings: Vec<Warning>,
    pub timings: Vec<StageTiming>,
}

/// Builds the k-CC decomposition and the per-manifold embeddings.
pub fn decompose(
    x: &PointSet,
    k: usize,
    per_manifold_k: Option<&[usize]>,
    dim: usize,
) -> Result<(ManifoldDecomposition, Vec<Warning>)> {
    let g = knn_graph(x, k)?;
    let labels = label_components(&g);
    let m_count = labels.component_count();
    if let Some(ks) = per_manifold_k {
        if ks.len() != m_count {
            return Err(Error::InvalidParam(format!(
                "{} per-manifold neighborhood sizes for {} manifolds",
                ks.len(),
                m_count
            )));
        }
    }
    let (joined, mut warnings) = connect_components(&g, &labels, x, Some(k));
    let inter = joined.inter_edges().clone();

    // Per-manifold rebuilt graphs, geodesics and embeddings, in parallel.
    let built: Vec<Result<(Manifold, usize)>> = labels
        .members
        .par_iter()
        .enumerate()
        .map(|(mi, indices)| {
            let k_m = per_manifold_k.map_or(k, |ks| ks[mi]);
            build_manifold(x, indices, k_m, dim, mi + 1)
        })
        .collect();
    let mut manifolds = Vec::with_capacity(m_count);
    for r in built {
        let (manifold, clamped) = r?;
        if clamped > 0 {
            warnings.push(Warning::NegativeEigenvaluesClamped { count: clamped });
        }
        manifolds.push(manifold);
    }

    // Local index of every global point within its manifold.
    let mut local = vec![usize::MAX; x.len()];
    for m in &manifolds {
        for (li, &gi) in m.indices.iter().enumerate() {
            local[gi] = li;
        }
    }

    let mut pairs = std::collections::BTreeMap::new();
    for ((a, b), edges) in inter {
        let local_edges: Vec<(usize, usize, f64)> = edges
            .iter()
            .map(|e| (local[e.u], local[e.v], e.weight))
            .collect();
        let cross = cross_distances(
            &manifolds[a - 1].geodesics,
            &manifolds[b - 1].geodesics,
            &local_edges,
        );
        let furthest = furthest_pair(&cross);
        pairs.insert(
            (a, b),
            PairData {
                edges: local_edges,
                cross,
                furthest,
            },
        );
    }

    Ok((
        ManifoldDecomposition {
            manifolds,
            pairs,
            labels,
            dim,
        },
        warnings,
    ))
}

fn build_manifold(
    x: &PointSet,
    indices: &[usize],
    k: usize,
    dim: usize,
    manifold_id: usize,
) -> Result<(Manifold, usize)> {
    let coords = x.subset(indices);
    let sub = PointSet::new(coords, None)?;
    let (geodesics, k_used) = if sub.len() == 1 {
        (DistanceMatrix::zeros(1), 0)
    } else {
        let k_m = k.min(sub.len() - 1).max(1);
        let sub_g = knn_graph(&sub, k_m)?;
        let sub_labels = label_components(&sub_g);
        if sub_labels.component_count() > 1 {
            return Err(Error::ManifoldDisconnected {
                manifold: manifold_id,
                components: sub_labels.component_count(),
            });
        }
        (all_pairs_shortest_paths(&sub_g), k_m)
    };
    let (embedding, clamped) = if sub.len() == 1 {
        (Matrix::zeros(1, dim), 0)
    } else {
        let out = classical_mds(&geodesics, dim.min(sub.len()))?;
        // A manifold smaller than d+1 points still embeds; widen with zeros.
        let mut emb = Matrix::zeros(sub.len(), dim);
        for i in 0..sub.len() {
            for j in 0..out.embedding.cols() {
                emb.set(i, j, out.embedding.get(i, j));
            }
        }
        (emb, out.clamped)
    };
    Ok((
        Manifold {
            indices: indices.to_vec(),
            geodesics,
            embedding,
            k_used,
        },
        clamped,
    ))
}

/// Approximated geodesics across one manifold pair: the best route through
/// any inter edge, `min_t [ d_m(p, u_t) + w_t + d_n(v_t, q) ]`.
fn cross_distances(
    d_m: &DistanceMatrix,
    d_n: &DistanceMatrix,
    edges: &[(usize, usize, f64)],
) -> Matrix {
    let rows = d_m.n();
    let cols = d_n.n();
    let mut out = Matrix::zeros(rows, cols);
    for p in 0..rows {
        for q in 0..cols {
            let mut best = f64::INFINITY;
            for &(u, v, w) in edges {
                let cand = d_m.get(p, u) + w + d_n.get(v, q);
                if cand < best {
                    best = cand;
                }
            }
            out.set(p, q, best);
        }
    }
    out
}

/// Route-through-edges distance between two points of different manifolds.
pub fn inter_manifold_distance(
    decomposition: &ManifoldDecomposition,
    m: usize,
    p_local: usize,
    n: usize,
    q_local: usize,
) -> Result<f64> {
    let (key, row, col) = if m < n {
        ((m, n), p_local, q_local)
    } else {
        ((n, m), q_local, p_local)
    };
    let pair = decomposition
        .pairs
        .get(&key)
        .ok_or(Error::NoInterEdges { m: key.0, n: key.1 })?;
    Ok(pair.cross.get(row, col))
}

/// Row-major argmax with ties broken by the lowest (row, col) pair.
pub fn furthest_pair(cross: &Matrix) -> (usize, usize) {
    let mut best = (0usize, 0usize);
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..cross.rows() {
        for j in 0..cross.cols() {
            let v = cross.get(i, j);
            if v > best_val {
                best_val = v;
                best = (i, j);
            }
        }
    }
    best
}

/// Assembles the skeleton (inter-edge endpoints plus furthest cross points,
/// padded up to `d+1` members per manifold when needed), its distance matrix
/// and its joint embedding.
pub fn build_skeleton(decomposition: &ManifoldDecomposition) -> Result<(Skeleton, Vec<Warning>)> {
    let m_count = decomposition.manifold_count();
    let dim = decomposition.dim;
    let mut warnings = Vec::new();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m_count];
    for m in 1..=m_count {
        let push_unique = |list: &mut Vec<usize>, v: usize| {
            if !list.contains(&v) {
                list.push(v);
            }
        };
        for n in 1..=m_count {
            if n == m {
                continue;
            }
            let key = (m.min(n), m.max(n));
            let Some(pair) = decomposition.pairs.get(&key) else {
                continue;
            };
            let own_is_lower = m < n;
            for &(u, v, _) in &pair.edges {
                push_unique(&mut members[m - 1], if own_is_lower { u } else { v });
            }
            let fx = if own_is_lower {
                pair.furthest.0
            } else {
                pair.furthest.1
            };
            push_unique(&mut members[m - 1], fx);
        }
    }

    // Pad undersized slices with the points geodesically furthest from the
    // members already chosen, so a d-dimensional rigid fit stays pinned.
    for (mi, manifold) in decomposition.manifolds.iter().enumerate() {
        let size = manifold.indices.len();
        let want = (dim + 1).min(size);
        let mut added = 0usize;
        while members[mi].len() < want {
            let mut best: Option<(f64, usize)> = None;
            for cand in 0..size {
                if members[mi].contains(&cand) {
                    continue;
                }
                let nearest = members[mi]
                    .iter()
                    .map(|&s| manifold.geodesics.get(cand, s))
                    .fold(f64::INFINITY, f64::min);
                let better = match best {
                    None => true,
                    Some((bv, _)) => nearest > bv,
                };
                if better {
                    best = Some((nearest, cand));
                }
            }
            match best {
                Some((_, cand)) => members[mi].push(cand),
                None => break,
            }
            added += 1;
        }
        if added > 0 {
            warnings.push(Warning::SkeletonPadded {
                manifold: mi + 1,
                added,
            });
        }
    }

    let mut offsets = Vec::with_capacity(m_count);
    let mut total = 0usize;
    for list in &members {
        offsets.push(total);
        total += list.len();
    }

    let mut d_i = DistanceMatrix::zeros(total);
    for a in 0..m_count {
        for (ia, &pa) in members[a].iter().enumerate() {
            let ra = offsets[a] + ia;
            // Intra-manifold block.
            for (ja, &qa) in members[a].iter().enumerate().skip(ia + 1) {
                let rb = offsets[a] + ja;
                d_i.set_sym(ra, rb, decomposition.manifolds[a].geodesics.get(pa, qa));
            }
            // Cross blocks.
            for b in (a + 1)..m_count {
                let Some(pair) = decomposition.pairs.get(&(a + 1, b + 1)) else {
                    continue;
                };
                for (jb, &qb) in members[b].iter().enumerate() {
                    let rb = offsets[b] + jb;
                    d_i.set_sym(ra, rb, pair.cross.get(pa, qb));
                }
            }
        }
    }

    let out = classical_mds(&d_i, dim)?;
    if out.clamped > 0 {
        warnings.push(Warning::NegativeEigenvaluesClamped { count: out.clamped });
    }
    Ok((
        Skeleton {
            members,
            distances: d_i,
            embedding: out.embedding,
            offsets,
        },
        warnings,
    ))
}

/// Fits the rigid transform carrying `source` points onto `target` points
/// (rows aligned): least-squares affine fit, orthonormalization by QR with a
/// nonnegative diagonal, then an exact translation refit.
pub fn fit_rigid(
    source: &Matrix,
    target: &Matrix,
    lambda: Option<f64>,
) -> Result<(RigidTransform, Vec<Warning>)> {
    if source.rows() != target.rows() || source.cols() != target.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            source.rows(),
            source.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let y = source.transpose(); // d × l
    let ry = target.transpose();
    let l = y.cols() as f64;
    let lambda = lambda.unwrap_or_else(|| {
        // trace(Z Zᵀ) for Z = [Y; eᵀ] is Σ‖yᵢ‖² + l.
        let trace: f64 = y.data().iter().map(|v| v * v).sum::<f64>() + l;
        1e-8 * trace
    });
    let (a_raw, _beta_raw) = solve_affine_lsq(&y, &ry, lambda)?;
    let factors = qr_orthonormalize(&a_raw)?;
    let mut warnings = Vec::new();
    if factors.perturbed {
        warnings.push(Warning::QrPerturbed);
    }
    let rotation = factors.q;
    let translation = recompute_translation(&rotation, &y, &ry)?;
    Ok((
        RigidTransform {
            rotation,
            translation,
        },
        warnings,
    ))
}

/// The full M-Isomap pipeline.
pub fn m_isomap(x: &PointSet, opts: &MIsomapOptions) -> Result<MIsomapResult> {
    if opts.dim < 1 {
        return Err(Error::InvalidParam("target dimension must be >= 1".into()));
    }
    let mut timings = Vec::new();

    let t0 = Instant::now();
    let (decomposition, mut warnings) =
        decompose(x, opts.k, opts.per_manifold_k.as_deref(), opts.dim)?;
    timings.push(StageTiming {
        stage: "decompose_and_embed",
        seconds: t0.elapsed().as_secs_f64(),
    });

    let m_count = decomposition.manifold_count();
    let dim = opts.dim;
    let mut embedding = Matrix::zeros(x.len(), dim);

    if m_count == 1 {
        let manifold = &decomposition.manifolds[0];
        for (li, &gi) in manifold.indices.iter().enumerate() {
            embedding
                .row_mut(gi)
                .copy_from_slice(manifold.embedding.row(li));
        }
        return Ok(MIsomapResult {
            embedding,
            labels: decomposition.labels.clone(),
            transforms: vec![RigidTransform::identity(dim)],
            manifolds: decomposition.manifolds,
            warnings,
            timings,
        });
    }

    let t1 = Instant::now();
    let (skeleton, mut skel_warnings) = build_skeleton(&decomposition)?;
    warnings.append(&mut skel_warnings);
    timings.push(StageTiming {
        stage: "skeleton",
        seconds: t1.elapsed().as_secs_f64(),
    });

    let t2 = Instant::now();
    let mut transforms = Vec::with_capacity(m_count);
    for (mi, manifold) in decomposition.manifolds.iter().enumerate() {
        let slice = &skeleton.members[mi];
        let l = slice.len();
        let mut src = Matrix::zeros(l, dim);
        let mut dst = Matrix::zeros(l, dim);
        for (row, &li) in slice.iter().enumerate() {
            src.row_mut(row).copy_from_slice(manifold.embedding.row(li));
            dst.row_mut(row)
                .copy_from_slice(skeleton.embedding.row(skeleton.offsets[mi] + row));
        }
        let (transform, mut fit_warnings) = fit_rigid(&src, &dst, opts.lambda)?;
        warnings.append(&mut fit_warnings);
        let moved = transform.apply_rows(&manifold.embedding);
        for (li, &gi) in manifold.indices.iter().enumerate() {
            embedding.row_mut(gi).copy_from_slice(moved.row(li));
        }
        transforms.push(transform);
    }
    timings.push(StageTiming {
        stage: "transform",
        seconds: t2.elapsed().as_secs_f64(),
    });

    Ok(MIsomapResult {
        embedding,
        labels: decomposition.labels.clone(),
        transforms,
        manifolds: decomposition.manifolds,
        warnings,
        timings,
    })
}
