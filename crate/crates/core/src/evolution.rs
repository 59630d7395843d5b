//! Discrete open-system time stepping.
//!
//! One step maps
//!
//! ```text
//! ρ ← U ρ U† + dt · Σ_L ( L ρ L† − ½ {L†L, ρ} ),   U = exp(−i H dt)
//! ```
//!
//! with the dissipator evaluated on the pre-step state. `U` comes from an
//! exact eigendecomposition of `H`; the dissipator is first order in `dt`.
//!
//! `H` conserves the quanta number, so it splits into independent blocks
//! (connected components of its non-zero pattern). Each block is diagonalised
//! on its own and `U ρ U†` is applied block pair by block pair.

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::basis::ProjectedBasis;
use crate::error::{Error, Result};
use crate::model::{ChainConfig, ChainModel, LindbladTerm};
use crate::operator::{number_op, same_basis, CMatrix, Operator};
use crate::state::{DensityMatrix, StateCheck};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    /// Block eigenvectors as columns.
    vectors: CMatrix,
    eigenvalues: Vec<f64>,
}

/// Eigendecomposition of a Hermitian Hamiltonian plus the unitary step it
/// generates for one fixed `dt`.
#[derive(Debug, Clone)]
pub struct Propagator {
    basis: Arc<ProjectedBasis>,
    blocks: Arc<Vec<Block>>,
    dt: f64,
    /// Per-block `U_B = V_B diag(exp(−iλdt)) V_B†`.
    block_unitaries: Vec<CMatrix>,
}

/// Diagonalises `h` and builds the step unitary for `dt`.
pub fn diagonalize(h: &Operator, dt: f64) -> Result<Propagator> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian { deviation: h.hermitian_deviation() });
    }
    check_dt(dt)?;
    let m = h.elements();
    let dim = m.nrows();

    let mut components = UnionFind::new(dim);
    for j in 0..dim {
        for i in 0..dim {
            if m[(i, j)] != ZERO {
                components.union(i, j);
            }
        }
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut block_of_root = vec![usize::MAX; dim];
    for i in 0..dim {
        let root = components.find(i);
        if block_of_root[root] == usize::MAX {
            block_of_root[root] = blocks.len();
            blocks.push(Block { indices: Vec::new(), vectors: CMatrix::zeros(0, 0), eigenvalues: Vec::new() });
        }
        blocks[block_of_root[root]].indices.push(i);
    }
    for block in &mut blocks {
        let n = block.indices.len();
        let sub = CMatrix::from_fn(n, n, |r, c| m[(block.indices[r], block.indices[c])]);
        if n == 1 {
            block.vectors = CMatrix::identity(1, 1);
            block.eigenvalues = vec![sub[(0, 0)].re];
        } else {
            let eig = SymmetricEigen::new(sub);
            block.vectors = eig.eigenvectors;
            block.eigenvalues = eig.eigenvalues.iter().copied().collect();
        }
    }
    let blocks = Arc::new(blocks);
    let block_unitaries = step_unitaries(&blocks, dt);
    Ok(Propagator { basis: h.basis().clone(), blocks, dt, block_unitaries })
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidTime(format!("dt must be positive and finite, got {dt}")));
    }
    Ok(())
}

fn step_unitaries(blocks: &[Block], dt: f64) -> Vec<CMatrix> {
    blocks
        .iter()
        .map(|b| {
            let phases: Vec<Complex64> = b.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * dt)).collect();
            let mut scaled = b.vectors.clone();
            for (c, phase) in phases.iter().enumerate() {
                let mut column = scaled.column_mut(c);
                column *= *phase;
            }
            scaled * b.vectors.adjoint()
        })
        .collect()
}

impl Propagator {
    /// Same eigendecomposition, new step size.
    pub fn with_dt(&self, dt: f64) -> Result<Propagator> {
        check_dt(dt)?;
        Ok(Propagator {
            basis: self.basis.clone(),
            blocks: self.blocks.clone(),
            dt,
            block_unitaries: step_unitaries(&self.blocks, dt),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn basis(&self) -> &Arc<ProjectedBasis> {
        &self.basis
    }

    /// Number of independent blocks of `H`.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Eigenvalues in the same order as the columns of [`Self::eigenvectors`].
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.eigenvalues.iter().copied()).collect()
    }

    pub fn eigenvectors(&self) -> CMatrix {
        let dim = self.basis.dim();
        let mut v = CMatrix::zeros(dim, dim);
        let mut col = 0;
        for b in self.blocks.iter() {
            for c in 0..b.indices.len() {
                for (r, &row) in b.indices.iter().enumerate() {
                    v[(row, col)] = b.vectors[(r, c)];
                }
                col += 1;
            }
        }
        v
    }

    /// Dense `U = exp(−i H dt)`.
    pub fn unitary(&self) -> CMatrix {
        let dim = self.basis.dim();
        let mut u = CMatrix::zeros(dim, dim);
        for (b, ub) in self.blocks.iter().zip(&self.block_unitaries) {
            for (c, &col) in b.indices.iter().enumerate() {
                for (r, &row) in b.indices.iter().enumerate() {
                    u[(row, col)] = ub[(r, c)];
                }
            }
        }
        u
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let v = self.eigenvectors();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.basis.dim(),
            self.eigenvalues().into_iter().map(|l| Complex64::new(l, 0.0)),
        ));
        &v * d * v.adjoint()
    }

    /// `out = U ρ U†`, block pair by block pair.
    fn conjugate_into(&self, rho: &CMatrix, out: &mut CMatrix, scratch: &mut BlockScratch) {
        out.fill(ZERO);
        for (a, ua) in self.blocks.iter().zip(&self.block_unitaries) {
            for (b, ub) in self.blocks.iter().zip(&self.block_unitaries) {
                let (na, nb) = (a.indices.len(), b.indices.len());
                let sub = scratch.sub(na, nb);
                let mut nonzero = false;
                for (c, &col) in b.indices.iter().enumerate() {
                    for (r, &row) in a.indices.iter().enumerate() {
                        let z = rho[(row, col)];
                        nonzero |= z != ZERO;
                        sub[(r, c)] = z;
                    }
                }
                if !nonzero {
                    continue;
                }
                let left = ua * &*sub;
                let result = left * ub.adjoint();
                for (c, &col) in b.indices.iter().enumerate() {
                    for (r, &row) in a.indices.iter().enumerate() {
                        out[(row, col)] = result[(r, c)];
                    }
                }
            }
        }
    }
}

#[derive(Default)]
struct BlockScratch {
    buffers: Vec<CMatrix>,
}

impl BlockScratch {
    fn sub(&mut self, rows: usize, cols: usize) -> &mut CMatrix {
        if let Some(pos) = self.buffers.iter().position(|m| m.nrows() == rows && m.ncols() == cols) {
            &mut self.buffers[pos]
        } else {
            self.buffers.push(CMatrix::zeros(rows, cols));
            self.buffers.last_mut().unwrap()
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so block order follows basis order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Non-zero entries of a matrix, `(row, col, value)`.
#[derive(Debug, Clone)]
struct Sparse {
    entries: Vec<(usize, usize, Complex64)>,
}

impl Sparse {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if z != ZERO {
                    entries.push((i, j, z));
                }
            }
        }
        Self { entries }
    }
}

/// Prepared stepper: a propagator together with sparse jump operators and
/// `Σ L†L`.
#[derive(Debug, Clone)]
pub struct Stepper {
    propagator: Arc<Propagator>,
    jumps: Vec<Sparse>,
    decay: Sparse,
}

impl Stepper {
    pub fn new(propagator: Arc<Propagator>, terms: &[LindbladTerm]) -> Result<Self> {
        let dim = propagator.basis.dim();
        let mut decay = CMatrix::zeros(dim, dim);
        let mut jumps = Vec::with_capacity(terms.len());
        for t in terms {
            if !same_basis(t.operator.basis(), &propagator.basis) {
                return Err(Error::BasisMismatch);
            }
            let l = t.operator.elements();
            decay += l.adjoint() * l;
            jumps.push(Sparse::from_dense(l));
        }
        Ok(Self { propagator, jumps, decay: Sparse::from_dense(&decay) })
    }

    pub fn dt(&self) -> f64 {
        self.propagator.dt
    }

    pub fn propagator(&self) -> &Arc<Propagator> {
        &self.propagator
    }

    /// `Σ L ρ L† − ½ (Kρ + ρK)` accumulated into `out` (scaled by `factor`).
    fn add_dissipator(&self, rho: &CMatrix, out: &mut CMatrix, factor: f64) {
        let n = rho.nrows();
        let half = Complex64::new(0.5 * factor, 0.0);
        let f = Complex64::new(factor, 0.0);
        for jump in &self.jumps {
            for &(i, a, lia) in &jump.entries {
                let lia = lia * f;
                for &(j, b, ljb) in &jump.entries {
                    out[(i, j)] += lia * rho[(a, b)] * ljb.conj();
                }
            }
        }
        for &(i, a, kia) in &self.decay.entries {
            let kia = kia * half;
            for j in 0..n {
                out[(i, j)] -= kia * rho[(a, j)];
            }
        }
        for &(b, j, kbj) in &self.decay.entries {
            let kbj = kbj * half;
            for i in 0..n {
                out[(i, j)] -= rho[(i, b)] * kbj;
            }
        }
    }

    /// Advances `rho` by one step of size [`Self::dt`].
    pub fn step(&self, rho: &mut DensityMatrix, scratch: &mut StepScratch) {
        let dt = self.propagator.dt;
        let dim = rho.dim();
        scratch.ensure(dim);
        self.propagator.conjugate_into(rho.elements(), &mut scratch.next, &mut scratch.blocks);
        self.add_dissipator(rho.elements(), &mut scratch.next, dt);
        std::mem::swap(rho.elements_mut(), &mut scratch.next);
    }
}

/// Reusable buffers for [`Stepper::step`].
pub struct StepScratch {
    next: CMatrix,
    blocks: BlockScratch,
}

impl StepScratch {
    pub fn new() -> Self {
        Self { next: CMatrix::zeros(0, 0), blocks: BlockScratch::default() }
    }

    fn ensure(&mut self, dim: usize) {
        if self.next.nrows() != dim {
            self.next = CMatrix::zeros(dim, dim);
        }
    }
}

impl Default for StepScratch {
    fn default() -> Self {
        Self::new()
    }
}

/// Result of a single step together with its positivity check.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: DensityMatrix,
    pub min_eigenvalue: f64,
    /// Set when the minimum eigenvalue fell below the positivity tolerance.
    pub positivity_flag: bool,
}

/// One step of the discrete scheme. `prop` must have been built for `dt`.
pub fn lindblad_step(rho: &DensityMatrix, prop: &Arc<Propagator>, terms: &[LindbladTerm], dt: f64) -> Result<StepOutcome> {
    check_dt(dt)?;
    if dt != prop.dt {
        return Err(Error::StepMismatch { built: prop.dt, requested: dt });
    }
    if !same_basis(rho.basis(), &prop.basis) {
        return Err(Error::BasisMismatch);
    }
    let stepper = Stepper::new(prop.clone(), terms)?;
    let mut state = rho.clone();
    stepper.step(&mut state, &mut StepScratch::new());
    let check = state.check();
    Ok(StepOutcome { state, min_eigenvalue: check.min_eigenvalue, positivity_flag: !check.positivity_ok() })
}

/// `Re tr(op ρ)`. Fails if `op` is flagged Hermitian but the trace carries an
/// imaginary part above `1e-9`.
pub fn observable(rho: &DensityMatrix, op: &Operator) -> Result<f64> {
    if !same_basis(rho.basis(), op.basis()) {
        return Err(Error::BasisMismatch);
    }
    let a = op.elements();
    let r = rho.elements();
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * r[(j, i)];
        }
    }
    if op.is_hermitian() && acc.im.abs() > 1e-9 {
        return Err(Error::InvalidState(format!("Hermitian observable has imaginary expectation {:e}", acc.im)));
    }
    Ok(acc.re)
}

/// Expectation of a diagonal operator, read from populations only.
#[derive(Debug, Clone)]
pub struct DiagonalObservable {
    weights: Vec<(usize, f64)>,
}

impl DiagonalObservable {
    pub fn from_operator(op: &Operator) -> Result<Self> {
        let m = op.elements();
        let mut weights = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j && m[(i, j)] != ZERO {
                    return Err(Error::InvalidState("observable is not diagonal".into()));
                }
            }
            if m[(i, i)] != ZERO {
                weights.push((i, m[(i, i)].re));
            }
        }
        Ok(Self { weights })
    }

    pub fn value(&self, rho: &DensityMatrix) -> f64 {
        self.weights.iter().map(|&(i, w)| w * rho.population(i)).sum()
    }
}

/// Sink occupation as an observable.
pub fn sink_observable(basis: &Arc<ProjectedBasis>) -> Result<DiagonalObservable> {
    DiagonalObservable::from_operator(&number_op(basis, basis.layout().sink())?)
}

/// Sampled observables of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Column names, aligned with `values`.
    pub names: Vec<String>,
    /// One vector per column, one entry per sample.
    pub values: Vec<Vec<f64>>,
    /// Per sample: minimum eigenvalue below the positivity tolerance.
    pub min_eig_flags: Vec<bool>,
    pub max_trace_drift: f64,
    pub max_hermitian_deviation: f64,
    pub min_eigenvalue: f64,
}

impl TrajectoryRecord {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn any_flagged(&self) -> bool {
        self.min_eig_flags.iter().any(|&f| f)
    }
}

/// Number of steps needed to cover `t_end` with step `dt`.
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    check_dt(dt)?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidTime(format!("end time must be finite and >= 0, got {t_end}")));
    }
    let raw = t_end / dt;
    // absorb representation error so 1.0 / 0.01 is 100 steps, not 101
    let steps = (raw - 1e-9 * raw.max(1.0)).ceil().max(0.0);
    Ok(steps as usize)
}

/// Runs a configuration from its initial state and samples observables every
/// `sample_every` steps (plus the final step).
pub fn evolve(config: &ChainConfig, t_end: f64, dt: f64, sample_every: usize) -> Result<TrajectoryRecord> {
    let model = ChainModel::build(config)?;
    let propagator = Arc::new(diagonalize(&model.hamiltonian, dt)?);
    evolve_model(&model, propagator, t_end, sample_every)
}

/// [`evolve`] with a prebuilt model and propagator.
pub fn evolve_model(model: &ChainModel, propagator: Arc<Propagator>, t_end: f64, sample_every: usize) -> Result<TrajectoryRecord> {
    if sample_every == 0 {
        return Err(Error::InvalidTime("sample_every must be >= 1".into()));
    }
    let dt = propagator.dt;
    let steps = step_count(t_end, dt)?;
    let stepper = Stepper::new(propagator, &model.terms)?;
    let basis = &model.basis;
    let layout = basis.layout();
    let n = model.config.n_atoms;

    let mut names = vec!["sink".to_string()];
    let mut probes = vec![sink_observable(basis)?];
    for site in 1..=n {
        names.push(format!("photon_{site}"));
        probes.push(DiagonalObservable::from_operator(&number_op(basis, layout.photon(site)?)?)?);
    }
    for site in 1..=n {
        names.push(format!("exciton_{site}"));
        probes.push(DiagonalObservable::from_operator(&number_op(basis, layout.exciton(site)?)?)?);
    }
    names.push("trace".to_string());

    let mut record = TrajectoryRecord {
        times: Vec::new(),
        values: vec![Vec::new(); names.len()],
        names,
        min_eig_flags: Vec::new(),
        max_trace_drift: 0.0,
        max_hermitian_deviation: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    let mut rho = model.initial_state()?;
    let mut scratch = StepScratch::new();
    let sample = |step: usize, rho: &DensityMatrix, record: &mut TrajectoryRecord| {
        record.times.push(step as f64 * dt);
        for (col, probe) in probes.iter().enumerate() {
            record.values[col].push(probe.value(rho));
        }
        let check: StateCheck = rho.check();
        record.values.last_mut().unwrap().push(rho.trace());
        record.min_eig_flags.push(!check.positivity_ok());
        record.max_trace_drift = record.max_trace_drift.max(check.trace_drift);
        record.max_hermitian_deviation = record.max_hermitian_deviation.max(check.hermitian_deviation);
        record.min_eigenvalue = record.min_eigenvalue.min(check.min_eigenvalue);
    };
    sample(0, &rho, &mut record);
    for step in 1..=steps {
        stepper.step(&mut rho, &mut scratch);
        if step % sample_every == 0 || step == steps {
            sample(step, &rho, &mut record);
        }
    }
    Ok(record)
}
