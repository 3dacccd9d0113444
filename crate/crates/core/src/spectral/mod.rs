//! Density-operator paths and their branch-tracked spectral decomposition.
//!
//! A [`StatePath`] is a time-ordered list of density operators. Decomposing it
//! produces a [`SpectralPath`]: at every sample, the eigenvalues `ω_k(t_j)`
//! and eigenvectors `|φ_k(t_j)⟩`, with column `k` at sample `j` continuing
//! column `k` at sample `j − 1`. Branch identity follows the eigenvectors,
//! so eigenvalue curves pass smoothly through crossings instead of being
//! re-sorted.
//!
//! Near-degenerate eigenvalue groups (gap below `gap_tol`) are aligned to
//! the previous frame inside their common eigenspace and reported in a
//! [`DegeneracyStructure`].

mod assign;

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::numkernel::{
    check_square, dagger, eigh_hermitian, hermiticity_error, hermitize, polar_unitary, trace, unitarity_error, CMatrix,
    Eigh, C64, ZERO,
};

/// Default absolute eigenvalue gap below which branches count as degenerate.
pub const DEFAULT_GAP_TOL: f64 = 1e-8;
/// Default continuity tolerance `δ`: tracked overlaps must stay above `1 − δ`.
pub const DEFAULT_CONTINUITY_TOL: f64 = 0.5;
/// Eigenvalues below this at every sample mark a null branch.
pub const NULL_BRANCH_TOL: f64 = 1e-12;

const TIE_TOL: f64 = 1e-6;

/// A validated density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(CMatrix);

impl DensityOperator {
    pub fn new(rho: CMatrix) -> Result<Self> {
        let rho = validate_state(&rho, 0)?;
        let eig = eigh_hermitian(&rho)?;
        if eig.values[0] < -1e-10 {
            return Err(Error::Contract(format!("density operator has negative eigenvalue {:.3e}", eig.values[0])));
        }
        Ok(Self(rho))
    }

    /// Pure state `|ψ⟩⟨ψ|`; `psi` is normalized first.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Contract("cannot build a pure state from a zero vector".into()));
        }
        let n = psi.len();
        Self::new(Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj() / (norm * norm)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

fn validate_state(rho: &CMatrix, index: usize) -> Result<CMatrix> {
    check_square(rho, "density operator")?;
    let dev = hermiticity_error(rho);
    if dev > 1e-10 {
        return Err(Error::Contract(format!("sample {index}: not Hermitian (deviation {dev:.3e})")));
    }
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::Contract(format!("sample {index}: trace {tr} differs from 1")));
    }
    Ok(hermitize(rho))
}

pub(crate) fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Contract("path has no samples".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::Contract(format!("path must start at t = 0, got {}", times[0])));
    }
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::Contract(format!("times must increase strictly ({} then {})", w[0], w[1])));
    }
    Ok(())
}

/// Time-ordered samples `(t_j, ρ(t_j))` with `t_0 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePath {
    times: Vec<f64>,
    states: Vec<CMatrix>,
}

impl StatePath {
    /// Validates every sample and stores its exact Hermitian part.
    pub fn new(times: Vec<f64>, states: Vec<CMatrix>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Dimension(format!("{} times but {} states", times.len(), states.len())));
        }
        validate_times(&times)?;
        let dim = states[0].nrows();
        let states = states
            .iter()
            .enumerate()
            .map(|(j, rho)| {
                if rho.dim() != (dim, dim) {
                    return Err(Error::Dimension(format!("sample {j} is not {dim}x{dim}")));
                }
                validate_state(rho, j)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { times, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].nrows()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[CMatrix] {
        &self.states
    }

    pub fn tau(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Branch-tracked eigen-data along a path.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPath {
    times: Vec<f64>,
    /// `weights[[j, k]] = ω_k(t_j)`.
    weights: Array2<f64>,
    /// `frames[j]` holds `|φ_k(t_j)⟩` as column `k`.
    frames: Vec<CMatrix>,
}

impl SpectralPath {
    /// Builds a path from explicit eigen-data.
    ///
    /// Frames must be orthonormal within `1e-10`, weights must sum to one
    /// within `1e-8` and be no smaller than `−1e-10`.
    pub fn new(times: Vec<f64>, weights: Array2<f64>, frames: Vec<CMatrix>) -> Result<Self> {
        validate_times(&times)?;
        let samples = times.len();
        if weights.nrows() != samples || frames.len() != samples {
            return Err(Error::Dimension(format!(
                "{samples} times, {} weight rows, {} frames",
                weights.nrows(),
                frames.len()
            )));
        }
        let n = weights.ncols();
        for (j, frame) in frames.iter().enumerate() {
            if frame.dim() != (n, n) {
                return Err(Error::Dimension(format!("frame {j} is not {n}x{n}")));
            }
            let err = unitarity_error(frame);
            if !(err <= 1e-10) {
                return Err(Error::Contract(format!("frame {j} is not orthonormal (error {err:.3e})")));
            }
            let row = weights.row(j);
            let sum = row.sum();
            if !((sum - 1.0).abs() <= 1e-8) {
                return Err(Error::Contract(format!("weights at sample {j} sum to {sum}")));
            }
            if let Some(w) = row.iter().find(|&&w| w < -1e-10) {
                return Err(Error::Contract(format!("negative weight {w:.3e} at sample {j}")));
            }
        }
        Ok(Self { times, weights, frames })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn tau(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn weights_at(&self, j: usize) -> ArrayView1<'_, f64> {
        self.weights.row(j)
    }

    pub fn frames(&self) -> &[CMatrix] {
        &self.frames
    }

    pub fn frame(&self, j: usize) -> &CMatrix {
        &self.frames[j]
    }

    pub fn vector(&self, j: usize, k: usize) -> ArrayView1<'_, C64> {
        self.frames[j].column(k)
    }

    /// `⟨φ_k(t_a)|φ_k(t_b)⟩`.
    pub fn overlap(&self, k: usize, a: usize, b: usize) -> C64 {
        crate::numkernel::inner(self.vector(a, k), self.vector(b, k))
    }

    /// `√(ω_k(0) ω_k(τ))`, with tiny negative rounding clamped to zero.
    pub fn endpoint_weight(&self, k: usize) -> f64 {
        let last = self.len() - 1;
        (self.weights[[0, k]].max(0.0) * self.weights[[last, k]].max(0.0)).sqrt()
    }

    /// Branches whose eigenvalue stays below `1e-12` everywhere.
    pub fn null_branches(&self) -> Vec<bool> {
        self.weights.axis_iter(Axis(1)).map(|col| col.iter().all(|&w| w < NULL_BRANCH_TOL)).collect()
    }

    /// `Σ_k ω_k(t_j) |φ_k(t_j)⟩⟨φ_k(t_j)|`.
    pub fn reconstruct(&self, j: usize) -> CMatrix {
        let frame = &self.frames[j];
        let mut scaled = frame.clone();
        for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
            let w = self.weights[[j, k]];
            col.mapv_inplace(|z| z * w);
        }
        scaled.dot(&dagger(frame))
    }

    /// The same path with new frames (weights and times unchanged).
    pub(crate) fn with_frames(&self, frames: Vec<CMatrix>) -> Self {
        Self { times: self.times.clone(), weights: self.weights.clone(), frames }
    }
}

/// One group of branches that are (near-)degenerate somewhere on the path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    /// Branch indices, ascending.
    pub branches: Vec<usize>,
    /// Inclusive sample-index ranges where some pair of members is within
    /// `gap_tol`. Empty for singleton blocks.
    pub intervals: Vec<(usize, usize)>,
}

impl Block {
    pub fn size(&self) -> usize {
        self.branches.len()
    }

    /// True when samples `j` and `j + 1` both lie in one degenerate interval.
    pub fn active_at_step(&self, j: usize) -> bool {
        self.size() > 1 && self.intervals.iter().any(|&(a, b)| a <= j && j < b)
    }

    /// True when the block is degenerate over at least one full step.
    pub fn has_active_steps(&self) -> bool {
        self.size() > 1 && self.intervals.iter().any(|&(a, b)| b > a)
    }
}

/// Partition of the branches into degeneracy blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegeneracyStructure {
    pub blocks: Vec<Block>,
    /// `flags[j]` is set when any block is near-degenerate at sample `j`.
    pub flags: Vec<bool>,
}

impl DegeneracyStructure {
    /// All branches in their own block.
    pub fn singletons(n: usize, samples: usize) -> Self {
        Self {
            blocks: (0..n).map(|k| Block { branches: vec![k], intervals: Vec::new() }).collect(),
            flags: vec![false; samples],
        }
    }

    /// Groups branches whose eigenvalues come within `gap_tol` at any sample.
    pub fn detect(spectral: &SpectralPath, gap_tol: f64) -> Self {
        let n = spectral.dim();
        let samples = spectral.len();
        let w = spectral.weights();
        let close = |j: usize, a: usize, b: usize| (w[[j, a]] - w[[j, b]]).abs() < gap_tol;

        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut c = x;
            while parent[c] != r {
                let next = parent[c];
                parent[c] = r;
                c = next;
            }
            r
        }
        for j in 0..samples {
            for a in 0..n {
                for b in a + 1..n {
                    if close(j, a, b) {
                        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                        if ra != rb {
                            parent[ra.max(rb)] = ra.min(rb);
                        }
                    }
                }
            }
        }

        let mut blocks: Vec<Block> = Vec::new();
        let mut root_block = vec![usize::MAX; n];
        for k in 0..n {
            let r = find(&mut parent, k);
            if root_block[r] == usize::MAX {
                root_block[r] = blocks.len();
                blocks.push(Block { branches: Vec::new(), intervals: Vec::new() });
            }
            blocks[root_block[r]].branches.push(k);
        }

        let mut flags = vec![false; samples];
        for block in blocks.iter_mut().filter(|b| b.size() > 1) {
            let mut start: Option<usize> = None;
            for j in 0..samples {
                let degenerate = block
                    .branches
                    .iter()
                    .enumerate()
                    .any(|(i, &a)| block.branches[i + 1..].iter().any(|&b| close(j, a, b)));
                if degenerate {
                    flags[j] = true;
                    start.get_or_insert(j);
                } else if let Some(s) = start.take() {
                    block.intervals.push((s, j - 1));
                }
            }
            if let Some(s) = start {
                block.intervals.push((s, samples - 1));
            }
        }
        Self { blocks, flags }
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::size).collect()
    }

    pub fn block_of(&self, branch: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.branches.contains(&branch))
    }

    /// No block is degenerate across any step.
    pub fn is_trivial(&self) -> bool {
        !self.blocks.iter().any(Block::has_active_steps)
    }
}

/// Options for [`decompose_path_with`].
#[derive(Clone, Debug)]
pub struct DecomposeOptions {
    pub gap_tol: f64,
    pub continuity_tol: f64,
    /// Branch `k` starts on the `initial_order[k]`-th eigenvector (ascending
    /// eigenvalue order) of the first sample. Identity when `None`.
    pub initial_order: Option<Vec<usize>>,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { gap_tol: DEFAULT_GAP_TOL, continuity_tol: DEFAULT_CONTINUITY_TOL, initial_order: None }
    }
}

/// Eigen-decompose every sample and track branches across the path.
pub fn decompose_path(path: &StatePath, gap_tol: f64) -> Result<(SpectralPath, DegeneracyStructure)> {
    decompose_path_with(path, &DecomposeOptions { gap_tol, ..Default::default() })
}

pub fn decompose_path_with(path: &StatePath, opts: &DecomposeOptions) -> Result<(SpectralPath, DegeneracyStructure)> {
    if path.len() < 2 {
        return Err(Error::Contract("decomposition needs at least two samples".into()));
    }
    let n = path.dim();
    let samples = path.len();
    let mut weights = Array2::<f64>::zeros((samples, n));
    let mut frames = Vec::with_capacity(samples);

    let first = checked_eigh(&path.states()[0], 0)?;
    let order: Vec<usize> = match &opts.initial_order {
        Some(o) => {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if sorted != (0..n).collect::<Vec<_>>() {
                return Err(Error::Contract(format!("initial_order {o:?} is not a permutation of 0..{n}")));
            }
            o.clone()
        }
        None => (0..n).collect(),
    };
    let mut frame = Array2::from_elem((n, n), ZERO);
    for (k, &src) in order.iter().enumerate() {
        frame.column_mut(k).assign(&first.vectors.column(src));
        weights[[0, k]] = first.values[src];
    }
    let mut clustered = cluster_membership(&first.values.to_vec(), &order, opts.gap_tol);
    frames.push(frame);

    for j in 1..samples {
        let eig = checked_eigh(&path.states()[j], j)?;
        let step = track_step(&frames[j - 1], &eig, opts.gap_tol, j - 1)?;
        for k in 0..n {
            if !clustered[k] && !step.clustered[k] {
                let ov = crate::numkernel::inner(frames[j - 1].column(k), step.frame.column(k)).norm();
                if ov < 1.0 - opts.continuity_tol {
                    return Err(Error::Continuity { step: j - 1, branch: k, overlap: ov });
                }
            }
        }
        weights.row_mut(j).assign(&ndarray::Array1::from(step.weights));
        clustered = step.clustered;
        frames.push(step.frame);
    }

    let spectral = SpectralPath { times: path.times().to_vec(), weights, frames };
    let blocks = DegeneracyStructure::detect(&spectral, opts.gap_tol);
    Ok((spectral, blocks))
}

fn checked_eigh(rho: &CMatrix, j: usize) -> Result<Eigh> {
    let eig = eigh_hermitian(rho)?;
    if eig.values[0] < -1e-10 {
        return Err(Error::Contract(format!("sample {j} has negative eigenvalue {:.3e}", eig.values[0])));
    }
    Ok(eig)
}

/// Consecutive ascending eigenvalues closer than `gap_tol` share a cluster.
fn clusters(values: &[f64], gap_tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] >= gap_tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn cluster_membership(values: &[f64], order: &[usize], gap_tol: f64) -> Vec<bool> {
    let cl = clusters(values, gap_tol);
    order.iter().map(|&src| cl.iter().any(|r| r.contains(&src) && r.len() > 1)).collect()
}

struct Step {
    frame: CMatrix,
    weights: Vec<f64>,
    clustered: Vec<bool>,
}

/// Match the previous frame's branches onto the next sample's eigen-data.
fn track_step(prev: &CMatrix, eig: &Eigh, gap_tol: f64, step: usize) -> Result<Step> {
    let n = prev.nrows();
    let values = eig.values.to_vec();
    let cl = clusters(&values, gap_tol);
    let overlaps = dagger(prev).dot(&eig.vectors);
    // subspace weight of previous branch k in cluster c
    let score: Vec<Vec<f64>> =
        (0..n).map(|k| cl.iter().map(|r| r.clone().map(|i| overlaps[[k, i]].norm_sqr()).sum()).collect()).collect();

    let cluster_of_row = match greedy_assign(&score, &cl) {
        Some(a) => a,
        None => optimal_assign(&score, &cl, step)?,
    };

    let mut frame = Array2::from_elem((n, n), ZERO);
    let mut weights = vec![0.0; n];
    let mut clustered = vec![false; n];
    for (c, range) in cl.iter().enumerate() {
        let rows: Vec<usize> = (0..n).filter(|&k| cluster_of_row[k] == c).collect();
        if range.len() == 1 {
            let k = rows[0];
            frame.column_mut(k).assign(&eig.vectors.column(range.start));
            weights[k] = values[range.start];
            continue;
        }
        // Rotate the eigenspace basis onto the previous vectors of these branches.
        let basis = eig.vectors.slice(ndarray::s![.., range.clone()]).to_owned();
        let previous = prev.select(Axis(1), &rows);
        let align = polar_unitary(&dagger(&basis).dot(&previous)).map_err(|_| Error::GridTooCoarse { step })?;
        let aligned = basis.dot(&align);
        for (mu, &k) in rows.iter().enumerate() {
            frame.column_mut(k).assign(&aligned.column(mu));
            weights[k] = range.clone().enumerate().map(|(i, src)| align[[i, mu]].norm_sqr() * values[src]).sum();
            clustered[k] = true;
        }
    }
    Ok(Step { frame, weights, clustered })
}

/// Greedy matching by descending subspace weight; `None` on a near-tie.
fn greedy_assign(score: &[Vec<f64>], cl: &[std::ops::Range<usize>]) -> Option<Vec<usize>> {
    let n = score.len();
    let mut capacity: Vec<usize> = cl.iter().map(|r| r.len()).collect();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|k| (0..cl.len()).map(move |c| (k, c))).collect();
    pairs.sort_by(|a, b| score[b.0][b.1].total_cmp(&score[a.0][a.1]));
    let mut assigned = vec![usize::MAX; n];
    for (k, c) in pairs {
        if assigned[k] != usize::MAX || capacity[c] == 0 {
            continue;
        }
        let s = score[k][c];
        let rival_row = capacity[c] == 1
            && (0..n).any(|r| r != k && assigned[r] == usize::MAX && (score[r][c] - s).abs() <= TIE_TOL);
        let rival_col = (0..cl.len()).any(|d| d != c && capacity[d] > 0 && (score[k][d] - s).abs() <= TIE_TOL);
        if rival_row || rival_col {
            return None;
        }
        assigned[k] = c;
        capacity[c] -= 1;
    }
    Some(assigned)
}

/// Optimal assignment fallback, rejecting solutions that are not unique.
fn optimal_assign(score: &[Vec<f64>], cl: &[std::ops::Range<usize>], step: usize) -> Result<Vec<usize>> {
    let n = score.len();
    let slot_cluster: Vec<usize> = cl.iter().enumerate().flat_map(|(c, r)| std::iter::repeat_n(c, r.len())).collect();
    let expanded: Vec<Vec<f64>> = (0..n).map(|k| slot_cluster.iter().map(|&c| score[k][c]).collect()).collect();
    let slots = assign::max_weight_assignment(&expanded);
    let cluster_of_row: Vec<usize> = slots.iter().map(|&s| slot_cluster[s]).collect();
    for a in 0..n {
        for b in a + 1..n {
            let (ca, cb) = (cluster_of_row[a], cluster_of_row[b]);
            if ca == cb {
                continue;
            }
            let kept = score[a][ca] + score[b][cb];
            let swapped = score[a][cb] + score[b][ca];
            if swapped >= kept - TIE_TOL {
                return Err(Error::Ambiguous { step });
            }
        }
    }
    Ok(cluster_of_row)
}

/// Smallest eigenvalue gap over all samples and branch pairs.
///
/// Infinite for one-dimensional paths.
pub fn min_spectral_gap(spectral: &SpectralPath) -> f64 {
    let n = spectral.dim();
    let mut gap = f64::INFINITY;
    for row in spectral.weights().rows() {
        for a in 0..n {
            for b in a + 1..n {
                gap = gap.min((row[a] - row[b]).abs());
            }
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{identity, max_abs, pauli, ONE};
    use ndarray::array;

    fn diag(values: &[f64]) -> CMatrix {
        Array2::from_diag(&ndarray::Array1::from_iter(values.iter().map(|&v| C64::new(v, 0.0))))
    }

    fn constant_path(rho: CMatrix, samples: usize) -> StatePath {
        let times = (0..samples).map(|j| j as f64 * 0.1).collect();
        StatePath::new(times, vec![rho; samples]).unwrap()
    }

    #[test]
    fn constant_nondegenerate_path() {
        let (sp, blocks) = decompose_path(&constant_path(diag(&[0.2, 0.8]), 5), DEFAULT_GAP_TOL).unwrap();
        for j in 0..5 {
            assert_eq!(sp.weights_at(j).to_vec(), vec![0.2, 0.8]);
            assert!(max_abs(&(sp.frame(j) - identity(2))) == 0.0);
        }
        assert!(blocks.is_trivial());
        assert_eq!(blocks.multiplicities(), vec![1, 1]);
        assert!((min_spectral_gap(&sp) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_path_is_one_block() {
        let (sp, blocks) = decompose_path(&constant_path(identity(3).mapv(|z| z / 3.0), 4), DEFAULT_GAP_TOL).unwrap();
        assert_eq!(min_spectral_gap(&sp), 0.0);
        assert_eq!(blocks.multiplicities(), vec![3]);
        assert_eq!(blocks.blocks[0].intervals, vec![(0, 3)]);
        assert!(!blocks.is_trivial());
        for j in 1..4 {
            assert!(max_abs(&(sp.frame(j) - sp.frame(0))) < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_paths() {
        let rho = diag(&[0.5, 0.5]);
        assert!(StatePath::new(vec![0.1, 0.2], vec![rho.clone(), rho.clone()]).is_err());
        assert!(StatePath::new(vec![0.0, 0.0], vec![rho.clone(), rho.clone()]).is_err());
        assert!(StatePath::new(vec![0.0], vec![diag(&[0.7, 0.7])]).is_err());
        let nonherm = array![[C64::new(0.5, 0.0), ONE], [ZERO, C64::new(0.5, 0.0)]];
        assert!(StatePath::new(vec![0.0], vec![nonherm]).is_err());
        let single = StatePath::new(vec![0.0], vec![rho.clone()]).unwrap();
        assert!(decompose_path(&single, DEFAULT_GAP_TOL).is_err());
        let negative = StatePath::new(vec![0.0, 1.0], vec![diag(&[1.1, -0.1]), rho]).unwrap();
        assert!(matches!(decompose_path(&negative, DEFAULT_GAP_TOL), Err(Error::Contract(_))));
        assert!(DensityOperator::new(diag(&[1.1, -0.1])).is_err());
    }

    /// Two-level path whose eigenvalue curves cross at t = 1/2 while the
    /// eigenbasis rotates smoothly.
    fn crossing_path(steps: usize) -> (StatePath, Vec<f64>) {
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut p0 = Vec::new();
        for j in 0..=steps {
            let t = j as f64 / steps as f64;
            let p = 0.5 + 0.3 * (t - 0.5);
            let angle = 0.7 * t;
            let r = crate::numkernel::matrix_exp(&pauli::y().mapv(|z| z * C64::new(0.0, -angle)));
            let rho = r.dot(&diag(&[p, 1.0 - p])).dot(&dagger(&r));
            times.push(t);
            states.push(rho);
            p0.push(p);
        }
        (StatePath::new(times, states).unwrap(), p0)
    }

    #[test]
    fn branches_follow_eigenvectors_through_crossing() {
        for steps in [101, 100] {
            let (path, p) = crossing_path(steps);
            let (sp, blocks) = decompose_path(&path, DEFAULT_GAP_TOL).unwrap();
            // p(0) = 0.35 is the smaller eigenvalue, so branch 0 carries p(t)
            let k = if (sp.weights()[[0, 0]] - p[0]).abs() < 1e-12 { 0 } else { 1 };
            for j in 0..=steps {
                assert!((sp.weights()[[j, k]] - p[j]).abs() < 1e-12, "step {j}");
            }
            // after the crossing, branch k is no longer the smaller eigenvalue
            assert!(sp.weights()[[steps, k]] > sp.weights()[[steps, 1 - k]]);
            if steps % 2 == 0 {
                let b = &blocks.blocks[0];
                assert_eq!(b.branches, vec![0, 1]);
                assert_eq!(b.intervals, vec![(steps / 2, steps / 2)]);
                assert!(blocks.is_trivial());
            } else {
                assert_eq!(blocks.multiplicities(), vec![1, 1]);
            }
            for j in 0..steps {
                assert!(sp.overlap(k, j, j + 1).norm() > 0.99);
            }
        }
    }

    #[test]
    fn initial_order_only_relabels() {
        let (path, _) = crossing_path(40);
        let (a, _) = decompose_path(&path, DEFAULT_GAP_TOL).unwrap();
        let opts = DecomposeOptions { initial_order: Some(vec![1, 0]), ..Default::default() };
        let (b, _) = decompose_path_with(&path, &opts).unwrap();
        for j in 0..path.len() {
            assert_eq!(a.weights()[[j, 0]], b.weights()[[j, 1]]);
            assert_eq!(a.weights()[[j, 1]], b.weights()[[j, 0]]);
            assert!(max_abs(&(a.reconstruct(j) - b.reconstruct(j))) < 1e-15);
        }
    }

    #[test]
    fn coarse_grid_is_reported() {
        // basis rotates by π/2 in one step: overlaps are 0 and 1 swapped
        let rho0 = diag(&[0.3, 0.7]);
        let rho1 = diag(&[0.7, 0.3]);
        let path = StatePath::new(vec![0.0, 1.0], vec![rho0.clone(), rho1]).unwrap();
        let (sp, _) = decompose_path(&path, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(sp.weights_at(1).to_vec(), vec![0.7, 0.3]);

        // Bloch vector turned by 83°: best overlap cos(41.5°) ≈ 0.75
        let a = 83f64.to_radians();
        let turned = identity(2).mapv(|z| z * 0.5)
            + pauli::x().mapv(|z| z * 0.2 * a.sin())
            + pauli::z().mapv(|z| z * 0.2 * a.cos());
        let rho_z = identity(2).mapv(|z| z * 0.5) + pauli::z().mapv(|z| z * 0.2);
        let path = StatePath::new(vec![0.0, 1.0], vec![rho_z, turned]).unwrap();
        assert!(decompose_path(&path, DEFAULT_GAP_TOL).is_ok());
        let opts = DecomposeOptions { continuity_tol: 0.2, ..Default::default() };
        assert!(matches!(decompose_path_with(&path, &opts), Err(Error::Continuity { .. })));

        let x = identity(2).mapv(|z| z * 0.5) + pauli::x().mapv(|z| z * 0.2);
        let path = StatePath::new(vec![0.0, 1.0], vec![rho0, x]).unwrap();
        assert!(matches!(decompose_path(&path, DEFAULT_GAP_TOL), Err(Error::Ambiguous { step: 0 })));
    }

    #[test]
    fn null_branches_are_annotated() {
        let (sp, _) = decompose_path(&constant_path(diag(&[0.0, 1.0, 0.0]), 3), DEFAULT_GAP_TOL).unwrap();
        let nulls = sp.null_branches();
        assert_eq!(nulls.iter().filter(|&&b| b).count(), 2);
    }

    #[test]
    fn spectral_path_validation() {
        let frames = vec![identity(2)];
        let w = array![[0.5, 0.5]];
        assert!(SpectralPath::new(vec![0.0], w.clone(), frames.clone()).is_ok());
        assert!(SpectralPath::new(vec![0.0], array![[0.6, 0.5]], frames.clone()).is_err());
        assert!(SpectralPath::new(vec![0.0], array![[1.1, -0.1]], frames).is_err());
        let skew = array![[ONE, ONE], [ZERO, ONE]];
        assert!(SpectralPath::new(vec![0.0], w, vec![skew]).is_err());
    }
}
