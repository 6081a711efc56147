//! Mixing matrices: construction, validation, and spectral analysis.
//!
//! A mixing matrix is the symmetric doubly-stochastic matrix applied to the
//! column matrix of local models at each communication step. Its second
//! largest absolute eigenvalue `zeta` governs how fast disagreement between
//! columns contracts: after one application the consensus distance shrinks
//! by at least a factor `zeta`, so `zeta < 1` is what makes averaging
//! converge at all.
//!
//! Concrete topologies:
//! - complete: uniform averaging, `zeta = 0`
//! - ring: lazy gossip with self-weight 1/2 and neighbor weights 1/4
//! - star / custom graphs: Metropolis-Hastings weights, which are symmetric
//!   and doubly stochastic for any connected graph

use ndarray::Array2;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, LinalgError};

/// Tolerance for the structural invariants (row sums, symmetry).
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Tolerance on the leading eigenvalue being exactly 1.
pub const SPECTRAL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("node count {got} is too small for this topology (minimum {min})")]
    InvalidSize { got: usize, min: usize },
    #[error("adjacency matrix must be square, got {rows}x{cols}")]
    AdjacencyNotSquare { rows: usize, cols: usize },
    #[error("adjacency matrix is not symmetric at ({i}, {j})")]
    AdjacencyAsymmetric { i: usize, j: usize },
    #[error("adjacency has {got} nodes, expected {expected}")]
    AdjacencySize { got: usize, expected: usize },
    #[error("graph is disconnected; mixing can never reach consensus")]
    Disconnected,
    #[error("custom topology requires an adjacency matrix")]
    MissingAdjacency,
    #[error("Metropolis weighting applies to star or custom topologies only")]
    NotMetropolis,
    #[error("matrix is not symmetric: max |w_ij - w_ji| = {residual:e}")]
    NotSymmetric { residual: f64 },
    #[error("row {row} sums to {sum}, not 1 (residual {residual:e})")]
    NotStochastic { row: usize, sum: f64, residual: f64 },
    #[error("leading eigenvalue is {0}, expected 1")]
    BadLeadingEigenvalue(f64),
    #[error("second largest absolute eigenvalue is {0}; must be strictly below 1")]
    NoSpectralGap(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("edge list line {line}: {reason}")]
    BadEdgeList { line: usize, reason: String },
    #[error("edge ({i}, {j}) out of range for {nodes} nodes")]
    EdgeOutOfRange { i: usize, j: usize, nodes: usize },
}

/// Symmetric doubly-stochastic matrix with its cached spectral gap.
///
/// Immutable after construction; `from_entries` enforces the invariants
/// (row sums 1 within 1e-12, symmetry within 1e-12, leading eigenvalue 1,
/// `zeta < 1`), so holding a `MixingMatrix` is proof the matrix is usable.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    entries: Array2<f64>,
    zeta: f64,
}

impl MixingMatrix {
    /// Validate `entries` and cache the spectral gap.
    pub fn from_entries(entries: Array2<f64>) -> Result<Self, TopologyError> {
        let report = validate_mixing(&entries);
        if report.size == 0 {
            return Err(TopologyError::InvalidSize { got: 0, min: 1 });
        }
        if !report.symmetric_ok {
            return Err(TopologyError::NotSymmetric {
                residual: report.symmetry_residual,
            });
        }
        if !report.row_sums_ok {
            let (row, sum) = worst_row_sum(&entries);
            return Err(TopologyError::NotStochastic {
                row,
                sum,
                residual: (sum - 1.0).abs(),
            });
        }
        if (report.leading_eigenvalue - 1.0).abs() > SPECTRAL_TOL {
            return Err(TopologyError::BadLeadingEigenvalue(
                report.leading_eigenvalue,
            ));
        }
        if !(report.zeta < 1.0) {
            return Err(TopologyError::NoSpectralGap(report.zeta));
        }
        Ok(MixingMatrix {
            entries,
            zeta: report.zeta,
        })
    }

    /// Skip validation; `zeta` is still computed from the symmetrized
    /// spectrum. Intended for deliberately non-conforming matrices in
    /// experiments (e.g. the identity, which has no spectral gap).
    pub fn new_unchecked(entries: Array2<f64>) -> Self {
        let (_, zeta) = spectrum_summary(&entries).unwrap_or((f64::NAN, f64::NAN));
        MixingMatrix { entries, zeta }
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Second largest absolute eigenvalue.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }
}

/// Named topology families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Complete,
    Ring,
    Star,
    Custom,
}

impl TopologyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TopologyKind::Complete => "complete",
            TopologyKind::Ring => "ring",
            TopologyKind::Star => "star",
            TopologyKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "complete" => Ok(TopologyKind::Complete),
            "ring" => Ok(TopologyKind::Ring),
            "star" => Ok(TopologyKind::Star),
            "custom" => Ok(TopologyKind::Custom),
            other => Err(format!(
                "unknown topology '{other}' (expected complete|ring|star|custom)"
            )),
        }
    }
}

/// Recipe for building a mixing matrix over `node_count` nodes.
#[derive(Debug, Clone)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub node_count: usize,
    /// Required for `Custom`; ignored otherwise. Self-loops are permitted
    /// and ignored by the Metropolis weighting.
    pub adjacency: Option<Array2<bool>>,
}

impl TopologySpec {
    pub fn complete(node_count: usize) -> Self {
        TopologySpec {
            kind: TopologyKind::Complete,
            node_count,
            adjacency: None,
        }
    }

    pub fn ring(node_count: usize) -> Self {
        TopologySpec {
            kind: TopologyKind::Ring,
            node_count,
            adjacency: None,
        }
    }

    pub fn star(node_count: usize) -> Self {
        TopologySpec {
            kind: TopologyKind::Star,
            node_count,
            adjacency: None,
        }
    }

    pub fn custom(adjacency: Array2<bool>) -> Self {
        TopologySpec {
            kind: TopologyKind::Custom,
            node_count: adjacency.nrows(),
            adjacency: Some(adjacency),
        }
    }

    pub fn build(&self) -> Result<MixingMatrix, TopologyError> {
        match self.kind {
            TopologyKind::Complete => build_complete(self.node_count),
            TopologyKind::Ring => build_ring(self.node_count),
            TopologyKind::Star | TopologyKind::Custom => build_metropolis(self),
        }
    }
}

/// Uniform averaging: every entry `1/n`. `zeta = 0` (rank-one projector).
pub fn build_complete(n: usize) -> Result<MixingMatrix, TopologyError> {
    if n == 0 {
        return Err(TopologyError::InvalidSize { got: 0, min: 1 });
    }
    let w = Array2::from_elem((n, n), 1.0 / n as f64);
    MixingMatrix::from_entries(w)
}

/// Lazy gossip ring: self-weight 1/2, each ring neighbor 1/4.
///
/// The lazy weights keep the spectrum nonnegative, so `zeta` is the second
/// eigenvalue `1/2 + cos(2*pi/n)/2` rather than a large-magnitude negative
/// one.
pub fn build_ring(n: usize) -> Result<MixingMatrix, TopologyError> {
    if n < 3 {
        return Err(TopologyError::InvalidSize { got: n, min: 3 });
    }
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        w[[i, i]] = 0.5;
        w[[i, (i + 1) % n]] += 0.25;
        w[[i, (i + n - 1) % n]] += 0.25;
    }
    MixingMatrix::from_entries(w)
}

/// Metropolis-Hastings weights over a star or custom connected graph:
/// `w_ij = 1 / (1 + max(deg_i, deg_j))` for each edge, with the diagonal
/// absorbing the remainder. Symmetric and doubly stochastic by
/// construction.
pub fn build_metropolis(spec: &TopologySpec) -> Result<MixingMatrix, TopologyError> {
    let adjacency = match spec.kind {
        TopologyKind::Star => star_adjacency(spec.node_count)?,
        TopologyKind::Custom => spec
            .adjacency
            .clone()
            .ok_or(TopologyError::MissingAdjacency)?,
        _ => return Err(TopologyError::NotMetropolis),
    };

    let n = check_adjacency(&adjacency, spec.node_count)?;
    if !is_connected(&adjacency) {
        return Err(TopologyError::Disconnected);
    }

    let degree: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && adjacency[[i, j]]).count())
        .collect();

    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        let mut off_sum = 0.0;
        for j in 0..n {
            if j != i && adjacency[[i, j]] {
                let weight = 1.0 / (1 + degree[i].max(degree[j])) as f64;
                w[[i, j]] = weight;
                off_sum += weight;
            }
        }
        w[[i, i]] = 1.0 - off_sum;
    }
    MixingMatrix::from_entries(w)
}

fn star_adjacency(n: usize) -> Result<Array2<bool>, TopologyError> {
    if n < 2 {
        return Err(TopologyError::InvalidSize { got: n, min: 2 });
    }
    let mut adj = Array2::from_elem((n, n), false);
    for leaf in 1..n {
        adj[[0, leaf]] = true;
        adj[[leaf, 0]] = true;
    }
    Ok(adj)
}

fn check_adjacency(adj: &Array2<bool>, expected: usize) -> Result<usize, TopologyError> {
    let (rows, cols) = adj.dim();
    if rows != cols {
        return Err(TopologyError::AdjacencyNotSquare { rows, cols });
    }
    if rows != expected {
        return Err(TopologyError::AdjacencySize {
            got: rows,
            expected,
        });
    }
    if rows == 0 {
        return Err(TopologyError::InvalidSize { got: 0, min: 1 });
    }
    for i in 0..rows {
        for j in (i + 1)..rows {
            if adj[[i, j]] != adj[[j, i]] {
                return Err(TopologyError::AdjacencyAsymmetric { i, j });
            }
        }
    }
    Ok(rows)
}

fn is_connected(adj: &Array2<bool>) -> bool {
    let n = adj.nrows();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if j != i && adj[[i, j]] && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Parse an edge-list document: one edge per line as `i j` (0-based,
/// whitespace-separated). Blank lines and `#` comments are skipped.
pub fn parse_edge_list(text: &str, node_count: usize) -> Result<Array2<bool>, TopologyError> {
    if node_count == 0 {
        return Err(TopologyError::InvalidSize { got: 0, min: 1 });
    }
    let mut adj = Array2::from_elem((node_count, node_count), false);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(TopologyError::BadEdgeList {
                    line,
                    reason: format!("expected two node indices, got '{content}'"),
                })
            }
        };
        let i: usize = a.parse().map_err(|_| TopologyError::BadEdgeList {
            line,
            reason: format!("'{a}' is not a node index"),
        })?;
        let j: usize = b.parse().map_err(|_| TopologyError::BadEdgeList {
            line,
            reason: format!("'{b}' is not a node index"),
        })?;
        if i >= node_count || j >= node_count {
            return Err(TopologyError::EdgeOutOfRange {
                i,
                j,
                nodes: node_count,
            });
        }
        adj[[i, j]] = true;
        adj[[j, i]] = true;
    }
    Ok(adj)
}

/// Second largest absolute eigenvalue of a validated mixing matrix.
///
/// Rejects asymmetric or non-stochastic input; the identity matrix is
/// structurally valid and returns 1.0 (the validation report is what flags
/// it as infeasible).
pub fn spectral_gap(entries: &Array2<f64>) -> Result<f64, TopologyError> {
    let n = entries.nrows();
    if n == 0 || entries.ncols() != n {
        return Err(TopologyError::InvalidSize {
            got: n.min(entries.ncols()),
            min: 1,
        });
    }
    let sym = symmetry_residual(entries);
    if sym > STRUCTURAL_TOL {
        return Err(TopologyError::NotSymmetric { residual: sym });
    }
    let (row, sum) = worst_row_sum(entries);
    if (sum - 1.0).abs() > STRUCTURAL_TOL {
        return Err(TopologyError::NotStochastic {
            row,
            sum,
            residual: (sum - 1.0).abs(),
        });
    }
    let (_, zeta) = spectrum_summary(entries)?;
    Ok(zeta)
}

/// Pass/fail report for the mixing-matrix invariants, with measured
/// residuals. Never fails; failures are carried in the report.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub size: usize,
    /// max_i |sum_j w_ij - 1|
    pub row_sum_residual: f64,
    /// max_ij |w_ij - w_ji|
    pub symmetry_residual: f64,
    pub leading_eigenvalue: f64,
    pub zeta: f64,
    pub row_sums_ok: bool,
    pub symmetric_ok: bool,
    /// Leading eigenvalue is 1 within 1e-9 and `zeta < 1`.
    pub spectrum_ok: bool,
    pub valid: bool,
}

pub fn validate_mixing(entries: &Array2<f64>) -> ValidationReport {
    let n = entries.nrows();
    if n == 0 || entries.ncols() != n {
        return ValidationReport {
            size: n,
            row_sum_residual: f64::NAN,
            symmetry_residual: f64::NAN,
            leading_eigenvalue: f64::NAN,
            zeta: f64::NAN,
            row_sums_ok: false,
            symmetric_ok: false,
            spectrum_ok: false,
            valid: false,
        };
    }

    let (_, worst_sum) = worst_row_sum(entries);
    let row_sum_residual = (worst_sum - 1.0).abs();
    let symmetry_residual = symmetry_residual(entries);

    // Spectrum of the symmetrized matrix; identical to the input when the
    // symmetry check passes.
    let (leading, zeta) = match spectrum_summary(entries) {
        Ok(pair) => pair,
        Err(_) => (f64::NAN, f64::NAN),
    };

    let row_sums_ok = row_sum_residual <= STRUCTURAL_TOL;
    let symmetric_ok = symmetry_residual <= STRUCTURAL_TOL;
    let spectrum_ok = (leading - 1.0).abs() <= SPECTRAL_TOL && zeta < 1.0;

    ValidationReport {
        size: n,
        row_sum_residual,
        symmetry_residual,
        leading_eigenvalue: leading,
        zeta,
        row_sums_ok,
        symmetric_ok,
        spectrum_ok,
        valid: row_sums_ok && symmetric_ok && spectrum_ok,
    }
}

/// (leading eigenvalue, second largest absolute eigenvalue) of the
/// symmetrized matrix, eigenvalues sorted by value.
fn spectrum_summary(entries: &Array2<f64>) -> Result<(f64, f64), LinalgError> {
    let n = entries.nrows();
    let sym = Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (entries[[i, j]] + entries[[j, i]]));
    let mut eig = linalg::symmetric_eigenvalues(&sym)?;
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let leading = eig[0];
    let zeta = if n == 1 {
        0.0
    } else {
        eig[1].abs().max(eig[n - 1].abs())
    };
    Ok((leading, zeta))
}

fn worst_row_sum(entries: &Array2<f64>) -> (usize, f64) {
    let mut worst = (0usize, 1.0f64);
    let mut worst_res = -1.0;
    for (i, row) in entries.rows().into_iter().enumerate() {
        let sum: f64 = row.sum();
        let res = (sum - 1.0).abs();
        if res > worst_res {
            worst_res = res;
            worst = (i, sum);
        }
    }
    worst
}

fn symmetry_residual(entries: &Array2<f64>) -> f64 {
    let n = entries.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((entries[[i, j]] - entries[[j, i]]).abs());
        }
    }
    worst
}
