//! Original and revised decomposition-composition Isomap: cluster centers,
//! center-skeleton MDS, PCA-based rotations, and fictitious-cluster
//! generation for the revised variant.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result, Warning};
use crate::graph::{
    all_pairs_shortest_paths, euclid, knn_graph, label_components, ComponentLabels, DistanceMatrix,
};
use crate::linalg::{
    affine_span_rank, principal_frame_uncentered, Matrix, RigidTransform, SPAN_RANK_TOL,
};
use crate::mds::classical_mds;
use crate::misomap::StageTiming;
use crate::synth::PointSet;

/// A synthetic single-point cluster added so the centers can anchor a
/// d-dimensional simplex.
#[derive(Debug, Clone)]
pub struct FictitiousCluster {
    pub position: Vec<f64>,
    pub gamma: f64,
    /// Nearest-cluster distance ratio at acceptance time.
    pub ratio: f64,
    pub accepted: bool,
}

/// One cluster in the pipeline; fictitious clusters hold a single point and
/// no global indices.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub indices: Vec<usize>,
    pub coords: Matrix,
    pub geodesics: DistanceMatrix,
    pub embedding: Matrix,
    pub fictitious: bool,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.coords.rows()
    }

    fn fictitious_at(position: &[f64], dim: usize) -> Self {
        Cluster {
            indices: Vec::new(),
            coords: Matrix::from_rows(&[position]),
            geodesics: DistanceMatrix::zeros(1),
            embedding: Matrix::zeros(1, dim),
            fictitious: true,
        }
    }
}

/// The nearest inter-cluster point pair for one cluster pair: `u` is local to
/// the lower-numbered cluster, `v` to the higher one.
#[derive(Debug, Clone, Copy)]
pub struct NearestPair {
    pub u: usize,
    pub v: usize,
    pub dist: f64,
}

/// Options for [`dc_isomap`].
#[derive(Debug, Clone)]
pub struct DcIsomapOptions {
    pub k: usize,
    pub per_cluster_k: Option<Vec<usize>>,
    pub dim: usize,
    /// Revised mode: triangulated/spread centers plus fictitious clusters.
    pub revised: bool,
    /// Acceptance bound for the fictitious-cluster distance ratio.
    pub beta: f64,
    /// Trial scales for fictitious placement; a deterministic default is
    /// used when absent.
    pub gamma_schedule: Option<Vec<f64>>,
}

impl DcIsomapOptions {
    pub fn new(k: usize, dim: usize, revised: bool) -> Self {
        DcIsomapOptions {
            k,
            per_cluster_k: None,
            dim,
            revised,
            beta: 2.0,
            gamma_schedule: None,
        }
    }
}

/// Small magnitudes first, positive before negative.
pub const DEFAULT_GAMMA_SCHEDULE: [f64; 10] = [
    1.0,
    -1.0,
    2.0,
    -2.0,
    0.5,
    -0.5,
    3.0,
    -3.0,
    1.0 / 3.0,
    -1.0 / 3.0,
];

#[derive(Debug, Clone)]
pub struct DcIsomapResult {
    /// N×d final embedding over the real points.
    pub embedding: Matrix,
    pub labels: ComponentLabels,
    /// Transform applied to each real cluster.
    pub transforms: Vec<RigidTransform>,
    pub fictitious: Vec<FictitiousCluster>,
    /// Per-real-cluster standalone embeddings, for isometry checks.
    pub clusters: Vec<Cluster>,
    pub warnings: Vec<Warning>,
    pub timings: Vec<StageTiming>,
}

/// Minimax (graph 1-center) vertex: minimizes the maximum geodesic distance
/// to the rest of the cluster; ties break toward the lower index.
pub fn minimax_center(geodesics: &DistanceMatrix) -> usize {
    let n = geodesics.n();
    let mut best = 0usize;
    let mut best_ecc = f64::INFINITY;
    for i in 0..n {
        let ecc = (0..n).map(|j| geodesics.get(i, j)).fold(0.0f64, f64::max);
        if ecc < best_ecc {
            best_ecc = ecc;
            best = i;
        }
    }
    best
}

/// Center distance matrix: `D̃(m,n) = d_{m,n} + d⁰_{m,n} + d_{n,m}` where
/// `d_{m,n}` is the intra-cluster geodesic from the center of `m` to its
/// inter-cluster point toward `n`.
pub fn center_distances(
    clusters: &[Cluster],
    centers: &[usize],
    nearest: &BTreeMap<(usize, usize), NearestPair>,
) -> DistanceMatrix {
    let m_count = clusters.len();
    let mut d = DistanceMatrix::zeros(m_count);
    for a in 0..m_count {
        for b in (a + 1)..m_count {
            let pair = nearest[&(a, b)];
            let d_ab = clusters[a].geodesics.get(centers[a], pair.u);
            let d_ba = clusters[b].geodesics.get(centers[b], pair.v);
            d.set_sym(a, b, d_ab + pair.dist + d_ba);
        }
    }
    d
}

/// Places the low-dimensional stand-in for an inter-cluster point on the
/// segment between two center embeddings, at the fraction its intra-cluster
/// geodesic contributes to the full center-to-center distance.
pub fn interpolate_reference(
    cy_m: &[f64],
    cy_mi: &[f64],
    d_m_mi: f64,
    d0: f64,
    d_mi_m: f64,
) -> Result<Vec<f64>> {
    let total = d_m_mi + d0 + d_mi_m;
    if total <= 0.0 {
        return Err(Error::InvalidParam(
            "zero total distance between cluster centers".into(),
        ));
    }
    let frac = d_m_mi / total;
    Ok(cy_m
        .iter()
        .zip(cy_mi)
        .map(|(a, b)| a + frac * (b - a))
        .collect())
}

/// Rotation aligning the principal frame of the reference directions `ny`
/// onto that of the target directions `sy` (both relative to their cluster
/// center, one direction per row): `A = QS · QNᵀ`.
pub fn rotation_from_pca(ny: &Matrix, sy: &Matrix) -> Result<Matrix> {
    if ny.rows() != sy.rows() || ny.cols() != sy.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            ny.rows(),
            ny.cols(),
            sy.rows(),
            sy.cols()
        )));
    }
    let qn = principal_frame_uncentered(ny)?;
    let qs = principal_frame_uncentered(sy)?;
    Ok(qs.matmul(&qn.transpose()))
}

/// One inter-cluster point of a cluster together with the opposite endpoint
/// of its connecting pair.
#[derive(Debug, Clone)]
pub struct InterPoint {
    /// Local index of the cluster's own point.
    pub own_local: usize,
    pub own_coord: Vec<f64>,
    pub opposite_coord: Vec<f64>,
}

/// Center selection via the triangle construction: pairs of inter-cluster
/// points whose angle sum stays below 180° yield Law-of-Sines distances from
/// the center to the opposite endpoints, hence suggested center-to-point
/// distances; the cluster point minimizing the total absolute deviation wins.
///
/// Errors when fewer than `needed` suggested distances can be built; the
/// caller falls back to [`center_by_spread`].
pub fn center_by_triangulation(
    geodesics: &DistanceMatrix,
    inter: &[InterPoint],
    needed: usize,
) -> Result<usize> {
    let mut suggested: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 0..inter.len() {
        for j in (i + 1)..inter.len() {
            let pi = &inter[i];
            let pj = &inter[j];
            let base = euclid(&pi.opposite_coord, &pj.opposite_coord);
            if base <= 0.0 {
                continue;
            }
            let alpha = angle_at(&pi.opposite_coord, &pi.own_coord, &pj.opposite_coord);
            let beta = angle_at(&pj.opposite_coord, &pj.own_coord, &pi.opposite_coord);
            let (Some(alpha), Some(beta)) = (alpha, beta) else {
                continue;
            };
            if alpha + beta >= std::f64::consts::PI {
                continue;
            }
            let sin_o = (alpha + beta).sin();
            if sin_o.abs() < 1e-12 {
                continue;
            }
            let d_qi = base * beta.sin() / sin_o;
            let d_qj = base * alpha.sin() / sin_o;
            let si = d_qi - euclid(&pi.opposite_coord, &pi.own_coord);
            let sj = d_qj - euclid(&pj.opposite_coord, &pj.own_coord);
            suggested.entry(i).or_insert(si);
            suggested.entry(j).or_insert(sj);
        }
    }
    if suggested.len() < needed {
        return Err(Error::Triangulation(format!(
            "{} suggested distances available, {needed} needed",
            suggested.len()
        )));
    }
    let n = geodesics.n();
    let mut best = 0usize;
    let mut best_f = f64::INFINITY;
    for o in 0..n {
        let f: f64 = suggested
            .iter()
            .map(|(&i, &s)| (geodesics.get(o, inter[i].own_local) - s).abs())
            .sum();
        if f < best_f {
            best_f = f;
            best = o;
        }
    }
    Ok(best)
}

/// Angle at `vertex` between the directions toward `a` and `b`; `None` for a
/// degenerate (zero-length) leg.
fn angle_at(vertex: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let va: Vec<f64> = a.iter().zip(vertex).map(|(x, v)| x - v).collect();
    let vb: Vec<f64> = b.iter().zip(vertex).map(|(x, v)| x - v).collect();
    let na = va.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na <= 0.0 || nb <= 0.0 {
        return None;
    }
    let cos = (va.iter().zip(&vb).map(|(x, y)| x * y).sum::<f64>() / (na * nb)).clamp(-1.0, 1.0);
    Some(cos.acos())
}

/// Fallback center: the point spread as far as possible from the
/// inter-cluster points, scored by `Σ_{i<j} (dᵢ + dⱼ − |dᵢ − dⱼ|)`; with a
/// single inter point, plain geodesic distance is maximized.
pub fn center_by_spread(geodesics: &DistanceMatrix, inter_locals: &[usize]) -> usize {
    let n = geodesics.n();
    let mut best = 0usize;
    let mut best_g = f64::NEG_INFINITY;
    for o in 0..n {
        let g = if inter_locals.len() == 1 {
            geodesics.get(o, inter_locals[0])
        } else {
            let mut sum = 0.0;
            for i in 0..inter_locals.len() {
                for j in (i + 1)..inter_locals.len() {
                    let di = geodesics.get(o, inter_locals[i]);
                    let dj = geodesics.get(o, inter_locals[j]);
                    sum += di + dj - (di - dj).abs();
                }
            }
            sum
        };
        if g > best_g {
            best_g = g;
            best = o;
        }
    }
    best
}

/// Shortest Euclidean distance between the point sets of two clusters,
/// with the realizing pair (ties broken lexicographically).
fn nearest_pair(a: &Cluster, b: &Cluster) -> NearestPair {
    let mut best = NearestPair {
        u: 0,
        v: 0,
        dist: f64::INFINITY,
    };
    for i in 0..a.size() {
        for j in 0..b.size() {
            let d = euclid(a.coords.row(i), b.coords.row(j));
            if d < best.dist {
                best = NearestPair {
                    u: i,
                    v: j,
                    dist: d,
                };
            }
        }
    }
    best
}

fn all_nearest_pairs(clusters: &[Cluster]) -> BTreeMap<(usize, usize), NearestPair> {
    let mut map = BTreeMap::new();
    for a in 0..clusters.len() {
        for b in (a + 1)..clusters.len() {
            map.insert((a, b), nearest_pair(&clusters[a], &clusters[b]));
        }
    }
    map
}

/// Places a new single-point cluster between the pair of clusters with the
/// maximum nearest inter-cluster distance, trying scales from the schedule
/// until the nearest-cluster distance ratio falls inside `(1/β, β)`.
pub fn add_fictitious_cluster(
    clusters: &[Cluster],
    beta: f64,
    gamma_schedule: &[f64],
) -> Result<FictitiousCluster> {
    if clusters.len() < 2 {
        return Err(Error::InvalidParam(
            "need at least two clusters to place a fictitious one".into(),
        ));
    }
    if beta.is_nan() || beta <= 1.0 {
        return Err(Error::InvalidParam("beta must exceed 1".into()));
    }
    let pairs = all_nearest_pairs(clusters);

    // The pair to bridge: the cluster whose nearest neighbor is furthest,
    // together with that neighbor.
    let m_count = clusters.len();
    let mut sel = (0usize, 1usize);
    let mut sel_score = f64::NEG_INFINITY;
    for i in 0..m_count {
        let mut nd = f64::INFINITY;
        let mut nj = usize::MAX;
        for j in 0..m_count {
            if j == i {
                continue;
            }
            let d = pairs[&(i.min(j), i.max(j))].dist;
            if d < nd {
                nd = d;
                nj = j;
            }
        }
        if nd > sel_score {
            sel_score = nd;
            sel = (i.min(nj), i.max(nj));
        }
    }
    let (a, b) = sel;

    // First and second nearest cross pairs between the selected clusters.
    let mut cross: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..clusters[a].size() {
        for j in 0..clusters[b].size() {
            cross.push((
                euclid(clusters[a].coords.row(i), clusters[b].coords.row(j)),
                i,
                j,
            ));
        }
    }
    cross.sort_by(|p, q| {
        p.0.partial_cmp(&q.0)
            .unwrap()
            .then((p.1, p.2).cmp(&(q.1, q.2)))
    });
    if cross.len() < 2 {
        return Err(Error::InvalidParam(
            "fictitious placement needs two inter-cluster point pairs".into(),
        ));
    }
    let first = cross[0];
    let second = cross[1];
    let dim = clusters[a].coords.cols();
    let midpoint = |p: &(f64, usize, usize)| -> Vec<f64> {
        let u = clusters[a].coords.row(p.1);
        let v = clusters[b].coords.row(p.2);
        (0..dim).map(|c| 0.5 * (u[c] + v[c])).collect()
    };
    let m1 = midpoint(&first);
    let m2 = midpoint(&second);
    let dir_norm = euclid(&m1, &m2);
    if dir_norm <= 0.0 {
        return Err(Error::DegenerateMidpoints);
    }
    let base_len = first.0;

    for &gamma in gamma_schedule {
        let pos: Vec<f64> = (0..dim)
            .map(|c| m1[c] + gamma * base_len * (m2[c] - m1[c]) / dir_norm)
            .collect();
        // Distance ratio over the two nearest clusters of the candidate.
        let mut dists: Vec<(f64, usize)> = clusters
            .iter()
            .enumerate()
            .map(|(ci, cl)| {
                let d = (0..cl.size())
                    .map(|i| euclid(&pos, cl.coords.row(i)))
                    .fold(f64::INFINITY, f64::min);
                (d, ci)
            })
            .collect();
        dists.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap().then(p.1.cmp(&q.1)));
        let ratio = dists[0].0 / dists[1].0;
        if ratio > 1.0 / beta && ratio < beta {
            return Ok(FictitiousCluster {
                position: pos,
                gamma,
                ratio,
                accepted: true,
            });
        }
    }
    Err(Error::NoFeasibleGamma { beta })
}

fn build_cluster(
    x: &PointSet,
    indices: &[usize],
    k: usize,
    dim: usize,
) -> Result<(Cluster, usize)> {
    let coords = x.subset(indices);
    let sub = PointSet::new(coords.clone(), None)?;
    let (geodesics, embedding, clamped) = if sub.len() == 1 {
        (DistanceMatrix::zeros(1), Matrix::zeros(1, dim), 0)
    } else {
        let k_m = k.min(sub.len() - 1).max(1);
        let g = knn_graph(&sub, k_m)?;
        let labels = label_components(&g);
        if labels.component_count() > 1 {
            return Err(Error::ManifoldDisconnected {
                manifold: 0,
                components: labels.component_count(),
            });
        }
        let geo = all_pairs_shortest_paths(&g);
        let out = classical_mds(&geo, dim.min(sub.len()))?;
        let mut emb = Matrix::zeros(sub.len(), dim);
        for i in 0..sub.len() {
            for j in 0..out.embedding.cols() {
                emb.set(i, j, out.embedding.get(i, j));
            }
        }
        (geo, emb, out.clamped)
    };
    Ok((
        Cluster {
            indices: indices.to_vec(),
            coords,
            geodesics,
            embedding,
            fictitious: false,
        },
        clamped,
    ))
}

/// Per-cluster inter points (toward every other cluster, ascending ids).
fn inter_points_for(
    clusters: &[Cluster],
    nearest: &BTreeMap<(usize, usize), NearestPair>,
    m: usize,
) -> Vec<InterPoint> {
    let mut out = Vec::new();
    for n in 0..clusters.len() {
        if n == m {
            continue;
        }
        let key = (m.min(n), m.max(n));
        let pair = nearest[&key];
        let (own_local, opp_local) = if m < n {
            (pair.u, pair.v)
        } else {
            (pair.v, pair.u)
        };
        out.push(InterPoint {
            own_local,
            own_coord: clusters[m].coords.row(own_local).to_vec(),
            opposite_coord: clusters[n].coords.row(opp_local).to_vec(),
        });
    }
    out
}

fn compute_centers(
    clusters: &[Cluster],
    nearest: &BTreeMap<(usize, usize), NearestPair>,
    revised: bool,
    dim: usize,
    warnings: &mut Vec<Warning>,
) -> Vec<usize> {
    clusters
        .iter()
        .enumerate()
        .map(|(m, cluster)| {
            if cluster.fictitious {
                return 0; // the single point is its own center
            }
            if !revised {
                return minimax_center(&cluster.geodesics);
            }
            let inter = inter_points_for(clusters, nearest, m);
            let needed = dim.min(inter.len()).max(1);
            let triangulated = center_by_triangulation(&cluster.geodesics, &inter, needed)
                // A center sitting on an inter-cluster point has no direction
                // toward it; the construction assumed the center strictly
                // inside, so treat this as a failed triangulation.
                .and_then(|c| {
                    if inter.iter().any(|p| p.own_local == c) {
                        Err(Error::Triangulation(
                            "center coincides with an inter-cluster point".into(),
                        ))
                    } else {
                        Ok(c)
                    }
                });
            match triangulated {
                Ok(c) => c,
                Err(_) => {
                    warnings.push(Warning::SpreadFallback { cluster: m + 1 });
                    let locals: Vec<usize> = inter.iter().map(|p| p.own_local).collect();
                    center_by_spread(&cluster.geodesics, &locals)
                }
            }
        })
        .collect()
}

/// Embeds the center skeleton and carries every real cluster onto it:
/// `fy = A·(y − y_center) + cy` with `A` from the principal frames of the
/// reference directions.
fn compose(
    x: &PointSet,
    clusters: &[Cluster],
    centers: &[usize],
    nearest: &BTreeMap<(usize, usize), NearestPair>,
    dim: usize,
    warnings: &mut Vec<Warning>,
) -> Result<(Matrix, Vec<RigidTransform>)> {
    let m_total = clusters.len();
    let d_tilde = center_distances(clusters, centers, nearest);
    let cy = classical_mds(&d_tilde, dim)?;
    if cy.clamped > 0 {
        warnings.push(Warning::NegativeEigenvaluesClamped { count: cy.clamped });
    }

    let mut embedding = Matrix::zeros(x.len(), dim);
    let mut transforms = Vec::new();
    for (m, cluster) in clusters.iter().enumerate() {
        if cluster.fictitious {
            continue;
        }
        // The d nearest centers by the center distance matrix.
        let mut others: Vec<(f64, usize)> = (0..m_total)
            .filter(|&n| n != m)
            .map(|n| (d_tilde.get(m, n), n))
            .collect();
        others.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap().then(p.1.cmp(&q.1)));
        let picked: Vec<usize> = others.iter().take(dim).map(|&(_, n)| n).collect();

        let cy_m = cy.embedding.row(m).to_vec();
        let y_center = cluster.embedding.row(centers[m]).to_vec();
        let mut ny = Matrix::zeros(picked.len(), dim);
        let mut sy = Matrix::zeros(picked.len(), dim);
        for (row, &n) in picked.iter().enumerate() {
            let key = (m.min(n), m.max(n));
            let pair = nearest[&key];
            let (own_local, opp_local) = if m < n {
                (pair.u, pair.v)
            } else {
                (pair.v, pair.u)
            };
            let d_m_n = cluster.geodesics.get(centers[m], own_local);
            let d_n_m = clusters[n].geodesics.get(centers[n], opp_local);
            let sy_point =
                interpolate_reference(&cy_m, cy.embedding.row(n), d_m_n, pair.dist, d_n_m)?;
            for c in 0..dim {
                ny.set(row, c, cluster.embedding.get(own_local, c) - y_center[c]);
                sy.set(row, c, sy_point[c] - cy_m[c]);
            }
        }
        let rotation = rotation_from_pca(&ny, &sy)?;
        // fy = A·(y − y_center) + cy  ⇒  translation = cy − A·y_center.
        let a_yc = rotation.matvec(&y_center);
        let translation: Vec<f64> = cy_m.iter().zip(&a_yc).map(|(c, ay)| c - ay).collect();
        let transform = RigidTransform {
            rotation,
            translation,
        };
        let moved = transform.apply_rows(&cluster.embedding);
        for (li, &gi) in cluster.indices.iter().enumerate() {
            embedding.row_mut(gi).copy_from_slice(moved.row(li));
        }
        transforms.push(transform);
    }
    Ok((embedding, transforms))
}

/// The D-C Isomap pipeline. Original mode uses minimax centers and requires
/// at least `d+1` clusters; revised mode selects centers by triangulation or
/// spread and adds fictitious clusters until the centers anchor a
/// d-dimensional simplex.
pub fn dc_isomap(x: &PointSet, opts: &DcIsomapOptions) -> Result<DcIsomapResult> {
    if opts.dim < 1 {
        return Err(Error::InvalidParam("target dimension must be >= 1".into()));
    }
    let mut warnings: Vec<Warning> = Vec::new();
    let mut timings = Vec::new();
    let dim = opts.dim;

    let t0 = Instant::now();
    let g = knn_graph(x, opts.k)?;
    let labels = label_components(&g);
    let m_real = labels.component_count();
    if let Some(ks) = &opts.per_cluster_k {
        if ks.len() != m_real {
            return Err(Error::InvalidParam(format!(
                "{} per-cluster neighborhood sizes for {m_real} clusters",
                ks.len()
            )));
        }
    }

    let built: Vec<Result<(Cluster, usize)>> = labels
        .members
        .par_iter()
        .enumerate()
        .map(|(mi, indices)| {
            let k_m = opts.per_cluster_k.as_ref().map_or(opts.k, |ks| ks[mi]);
            build_cluster(x, indices, k_m, dim).map_err(|e| match e {
                Error::ManifoldDisconnected { components, .. } => Error::ManifoldDisconnected {
                    manifold: mi + 1,
                    components,
                },
                other => other,
            })
        })
        .collect();
    let mut clusters = Vec::with_capacity(m_real);
    for r in built {
        let (cluster, clamped) = r?;
        if clamped > 0 {
            warnings.push(Warning::NegativeEigenvaluesClamped { count: clamped });
        }
        clusters.push(cluster);
    }
    timings.push(StageTiming {
        stage: "decompose_and_embed",
        seconds: t0.elapsed().as_secs_f64(),
    });

    // Single cluster: nothing to compose.
    if m_real == 1 {
        let cluster = clusters.pop().expect("one cluster");
        let mut embedding = Matrix::zeros(x.len(), dim);
        for (li, &gi) in cluster.indices.iter().enumerate() {
            embedding
                .row_mut(gi)
                .copy_from_slice(cluster.embedding.row(li));
        }
        return Ok(DcIsomapResult {
            embedding,
            labels,
            transforms: vec![RigidTransform::identity(dim)],
            fictitious: Vec::new(),
            clusters: vec![cluster],
            warnings,
            timings,
        });
    }

    let t1 = Instant::now();
    let mut fictitious: Vec<FictitiousCluster> = Vec::new();
    let schedule: Vec<f64> = opts
        .gamma_schedule
        .clone()
        .unwrap_or_else(|| DEFAULT_GAMMA_SCHEDULE.to_vec());

    if !opts.revised && m_real < dim + 1 {
        return Err(Error::InsufficientClusters {
            found: m_real,
            needed: dim + 1,
            dim,
        });
    }

    let add_one = |clusters: &mut Vec<Cluster>,
                   fictitious: &mut Vec<FictitiousCluster>,
                   warnings: &mut Vec<Warning>|
     -> Result<()> {
        let fc = add_fictitious_cluster(clusters, opts.beta, &schedule)?;
        warnings.push(Warning::FictitiousAdded {
            gamma: fc.gamma,
            position: fc.position.clone(),
        });
        clusters.push(Cluster::fictitious_at(&fc.position, dim));
        fictitious.push(fc);
        Ok(())
    };

    if opts.revised {
        while clusters.len() < dim + 1 {
            add_one(&mut clusters, &mut fictitious, &mut warnings)?;
        }
    }

    // Centers and composition, with a recheck loop in revised mode: a center
    // configuration that cannot anchor the simplex or leaves a cluster's
    // reference directions degenerate prompts one more fictitious cluster.
    let max_extra = 2 * (dim + 1);
    let (embedding, transforms) = loop {
        let mut attempt_warnings: Vec<Warning> = Vec::new();
        let nearest = all_nearest_pairs(&clusters);
        let centers = compute_centers(
            &clusters,
            &nearest,
            opts.revised,
            dim,
            &mut attempt_warnings,
        );
        if opts.revised {
            let rows: Vec<Vec<f64>> = clusters
                .iter()
                .zip(&centers)
                .map(|(c, &ci)| c.coords.row(ci).to_vec())
                .collect();
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let rank = affine_span_rank(&Matrix::from_rows(&refs), SPAN_RANK_TOL);
            if rank < dim {
                if fictitious.len() >= max_extra {
                    return Err(Error::SimplexNotAnchored {
                        dim,
                        added: fictitious.len(),
                    });
                }
                add_one(&mut clusters, &mut fictitious, &mut warnings)?;
                continue;
            }
        }

        match compose(x, &clusters, &centers, &nearest, dim, &mut attempt_warnings) {
            Ok(result) => {
                warnings.append(&mut attempt_warnings);
                break result;
            }
            Err(Error::DegenerateReferences { .. })
                if opts.revised && fictitious.len() < max_extra =>
            {
                add_one(&mut clusters, &mut fictitious, &mut warnings)?;
            }
            Err(e) => return Err(e),
        }
    };
    timings.push(StageTiming {
        stage: "centers_and_compose",
        seconds: t1.elapsed().as_secs_f64(),
    });

    clusters.retain(|c| !c.fictitious);
    Ok(DcIsomapResult {
        embedding,
        labels,
        transforms,
        fictitious,
        clusters,
        warnings,
        timings,
    })
}
