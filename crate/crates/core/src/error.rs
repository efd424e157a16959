//! Error and warning types shared across the crate.

use thiserror::Error;

/// Errors produced by graph construction, embedding and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("matrix is not symmetric (max asymmetry {max_dev:.3e} at ({i},{j}))")]
    NotSymmetric { i: usize, j: usize, max_dev: f64 },

    #[error("requested {requested} eigenpairs from a {n}x{n} matrix")]
    EigenCountOutOfRange { requested: usize, n: usize },

    #[error("matrix is rank deficient and remained so after diagonal perturbation")]
    RankDeficient,

    #[error("normal matrix is singular; retry with a larger regularizer")]
    SingularNormalMatrix,

    #[error("no positive eigenvalue among the top {requested}; cannot embed")]
    NoPositiveEigenvalue { requested: usize },

    #[error("graph has {components} components")]
    Disconnected { components: usize },

    #[error("rebuilt graph of manifold {manifold} has {components} components; raise its neighborhood size")]
    ManifoldDisconnected { manifold: usize, components: usize },

    #[error("duplicate points at indices {i} and {j}: zero-length edges are not allowed")]
    DuplicatePoints { i: usize, j: usize },

    #[error("no inter-manifold edges recorded for component pair ({m},{n})")]
    NoInterEdges { m: usize, n: usize },

    #[error("insufficient clusters: need at least {needed} for a {dim}-dimensional embedding, found {found}")]
    InsufficientClusters {
        found: usize,
        needed: usize,
        dim: usize,
    },

    #[error("reference directions are rank deficient (rank {rank} < {dim}); add a cluster")]
    DegenerateReferences { rank: usize, dim: usize },

    #[error("triangulation rejected: {0}")]
    Triangulation(String),

    #[error("no gamma in the schedule satisfies the distance-ratio bound (beta = {beta})")]
    NoFeasibleGamma { beta: f64 },

    #[error("cannot place a fictitious cluster: second midpoint coincides with the first")]
    DegenerateMidpoints,

    #[error("fictitious clusters did not reach a rank-{dim} center configuration after {added} additions")]
    SimplexNotAnchored { dim: usize, added: usize },

    #[error("geodesic distance is zero on evaluated pair ({i},{j})")]
    ZeroGeodesic { i: usize, j: usize },

    #[error("correlation undefined: matrix entries are constant")]
    ConstantMatrix,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal events recorded by pipelines and surfaced in run reports.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// `count` of the requested eigenvalues were negative and clamped to zero.
    NegativeEigenvaluesClamped { count: usize },
    /// QR input was rank deficient; a diagonal perturbation was applied.
    QrPerturbed,
    /// A component pair had fewer vertex-disjoint inter edges than requested.
    FewerInterEdges {
        pair: (usize, usize),
        requested: usize,
        added: usize,
    },
    /// A component pair had no vertex-disjoint candidate left; the shortest
    /// edge was added anyway to keep the graph connected.
    ForcedInterEdge { pair: (usize, usize) },
    /// A skeleton slice was padded with extra manifold points to pin the fit.
    SkeletonPadded { manifold: usize, added: usize },
    /// Triangulated center selection failed; fell back to the spread rule.
    SpreadFallback { cluster: usize },
    /// A fictitious cluster was accepted at the given trial scale.
    FictitiousAdded { gamma: f64, position: Vec<f64> },
}

impl Warning {
    /// Stable machine-readable code for reports.
    pub fn code(&self) -> &'static str {
        match self {
            Warning::NegativeEigenvaluesClamped { .. } => "negative_eigenvalues_clamped",
            Warning::QrPerturbed => "qr_perturbed",
            Warning::FewerInterEdges { .. } => "fewer_inter_edges",
            Warning::ForcedInterEdge { .. } => "forced_inter_edge",
            Warning::SkeletonPadded { .. } => "skeleton_padded",
            Warning::SpreadFallback { .. } => "spread_fallback",
            Warning::FictitiousAdded { .. } => "fictitious_added",
        }
    }
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NegativeEigenvaluesClamped { count } => {
                write!(f, "{count} negative eigenvalues clamped to zero")
            }
            Warning::QrPerturbed => write!(f, "rank-deficient QR input perturbed with a diagonal shift"),
            Warning::FewerInterEdges {
                pair,
                requested,
                added,
            } => write!(
                f,
                "component pair ({},{}) has {added} vertex-disjoint inter edges, {requested} requested",
                pair.0, pair.1
            ),
            Warning::ForcedInterEdge { pair } => write!(
                f,
                "component pair ({},{}) had no vertex-disjoint candidate; shortest edge forced",
                pair.0, pair.1
            ),
            Warning::SkeletonPadded { manifold, added } => {
                write!(f, "skeleton slice of manifold {manifold} padded with {added} points")
            }
            Warning::SpreadFallback { cluster } => {
                write!(f, "cluster {cluster}: triangulation unavailable, used spread rule")
            }
            Warning::FictitiousAdded { gamma, position } => {
                write!(f, "fictitious cluster added at gamma={gamma} position={position:?}")
            }
        }
    }
}
