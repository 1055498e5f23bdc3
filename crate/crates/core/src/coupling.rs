//! Generalized Clebsch-Gordan intertwiners by the numerical null-space
//! method.
//!
//! A coupling tensor collects all solutions `C` of the intertwiner equation
//! `C . rho_x(g) = rho_out(g) . C`, where `rho_x` is either the plain tensor
//! product of the input representations or the symmetrized power action on
//! ordered index tuples. The equation is imposed infinitesimally (one linear
//! constraint block per algebra generator) plus one block per discrete
//! generator, stacked into a single matrix whose null space is computed by
//! SVD. Singular values below `1e-8 * sigma_max` count as zero.
//!
//! Null-space bases are made deterministic by QR re-orthonormalization in
//! the lexicographic (K, k-tuple) row order, followed by a phase fix that
//! makes the first nonzero coefficient of every solution real and positive.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::algebra::{realize_element, ElementCoords, Rep};
use crate::error::{Error, Result};
use crate::irreps::IrrepLabel;
use crate::linalg::{max_abs, null_space, C64, CMat, CVec};

/// Relative singular-value threshold for the null-space rank decision.
pub const SVD_NULL_TOL: f64 = 1e-8;
/// Coefficients with magnitude below this are dropped from the sparse form.
const ENTRY_TRIM: f64 = 1e-12;
/// Default cap on dim Sym^n(V) for symmetric couplings.
pub const DEFAULT_SYM_CAP: usize = 20_000;

/// Sparse generalized Clebsch-Gordan coefficients
/// `C^{alpha,K}_{k1..kn}` with a solution-multiplicity index `alpha`.
#[derive(Debug, Clone)]
pub struct CouplingTensor {
    pub input_dims: Vec<usize>,
    pub output_dim: usize,
    pub order: usize,
    pub symmetric: bool,
    pub multiplicity: usize,
    /// Sorted lexicographically by (indices, output, alpha).
    pub entries: Vec<CouplingEntry>,
    /// Dimension of the flattened input space: product of input dims for
    /// plain couplings, number of ordered tuples for symmetric ones.
    flat_dim: usize,
}

#[derive(Debug, Clone)]
pub struct CouplingEntry {
    /// One index per tensor factor; non-decreasing when symmetric.
    pub indices: Vec<u32>,
    pub output: u32,
    pub alpha: u32,
    pub value: C64,
    /// Position of `indices` in the flattened input space.
    pub flat: usize,
}

impl CouplingTensor {
    pub fn is_empty(&self) -> bool {
        self.multiplicity == 0
    }

    pub fn flat_dim(&self) -> usize {
        self.flat_dim
    }

    /// Dense `output_dim x flat_dim` matrix of solution `alpha`.
    pub fn solution_matrix(&self, alpha: usize) -> CMat {
        let mut m = CMat::zeros(self.output_dim, self.flat_dim);
        for e in &self.entries {
            if e.alpha as usize == alpha {
                m[(e.output as usize, e.flat)] = e.value;
            }
        }
        m
    }

    /// Contracts every solution against a flattened input-value vector,
    /// returning one output vector per `alpha`.
    pub fn contract_flat(&self, flat_values: &[C64]) -> Vec<CVec> {
        let mut out = vec![CVec::zeros(self.output_dim); self.multiplicity];
        for e in &self.entries {
            out[e.alpha as usize][e.output as usize] += e.value * flat_values[e.flat];
        }
        out
    }

    /// Maximum intertwiner residual `||C rho_x(g) - rho_out(g) C||_max` over
    /// seeded sampled group elements (seeds `seed0..seed0+samples`).
    pub fn intertwiner_residual(
        &self,
        inputs: &[&Rep],
        output: &Rep,
        samples: u64,
        seed0: u64,
        scale: f64,
    ) -> Result<f64> {
        let num_gen = output.algebra().num_generators();
        let num_disc = output.discrete().len();
        let mut worst = 0.0f64;
        for s in 0..samples {
            let coords = ElementCoords::sample(num_gen, num_disc, seed0 + s, scale);
            let action = if self.symmetric {
                let g = realize_element(inputs[0], &coords)?;
                let tuples = SymTuples::new(inputs[0].dim(), self.order);
                sym_group_action(&g, &tuples)
            } else {
                let mut g = realize_element(inputs[0], &coords)?;
                for rep in &inputs[1..] {
                    g = g.kronecker(&realize_element(rep, &coords)?);
                }
                g
            };
            let g_out = realize_element(output, &coords)?;
            for alpha in 0..self.multiplicity {
                let c = self.solution_matrix(alpha);
                let resid = max_abs(&(&c * &action - &g_out * &c));
                worst = worst.max(resid);
            }
        }
        Ok(worst)
    }
}

/// Ordered (non-decreasing) index tuples over `0..dim`, enumerated
/// lexicographically; the coordinate basis of Sym^n(V).
#[derive(Debug, Clone)]
pub struct SymTuples {
    dim: usize,
    order: usize,
    tuples: Vec<Vec<u32>>,
    rank: HashMap<Vec<u32>, usize>,
}

impl SymTuples {
    pub fn new(dim: usize, order: usize) -> Self {
        let mut tuples = Vec::new();
        let mut current = vec![0u32; order];
        enumerate_ordered(dim as u32, &mut current, 0, 0, &mut tuples);
        let rank = tuples.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { dim, order, tuples, rank }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn tuples(&self) -> &[Vec<u32>] {
        &self.tuples
    }

    /// Rank of a non-decreasing tuple.
    pub fn rank(&self, tuple: &[u32]) -> usize {
        self.rank[tuple]
    }
}

fn enumerate_ordered(dim: u32, current: &mut Vec<u32>, pos: usize, min: u32, out: &mut Vec<Vec<u32>>) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for v in min..dim {
        current[pos] = v;
        enumerate_ordered(dim, current, pos + 1, v, out);
    }
}

/// Number of ordered tuples, `C(dim + order - 1, order)`, without overflow.
pub fn sym_dim(dim: usize, order: usize) -> Option<usize> {
    let mut acc: u128 = 1;
    for i in 0..order {
        acc = acc.checked_mul((dim + i) as u128)?;
        acc /= (i + 1) as u128;
    }
    usize::try_from(acc).ok()
}

/// Infinitesimal action of a generator on symmetric-tensor coordinates:
/// the derivative of the n-fold product rule restricted to ordered tuples.
fn sym_infinitesimal_action(x: &CMat, tuples: &SymTuples) -> CMat {
    let m = tuples.len();
    let mut act = CMat::zeros(m, m);
    for (row, kappa) in tuples.tuples().iter().enumerate() {
        for t in 0..tuples.order() {
            for j in 0..tuples.dim() as u32 {
                let coeff = x[(kappa[t] as usize, j as usize)];
                if coeff.norm() == 0.0 {
                    continue;
                }
                let mut target = kappa.clone();
                target[t] = j;
                target.sort_unstable();
                let col = tuples.rank(&target);
                act[(row, col)] += coeff;
            }
        }
    }
    act
}

/// Group-level action on symmetric-tensor coordinates: for each ordered
/// column tuple, sum products of matrix elements over its distinct
/// permutations.
fn sym_group_action(g: &CMat, tuples: &SymTuples) -> CMat {
    let m = tuples.len();
    let mut act = CMat::zeros(m, m);
    for (col, kappa_col) in tuples.tuples().iter().enumerate() {
        let perms = distinct_permutations(kappa_col);
        for (row, kappa_row) in tuples.tuples().iter().enumerate() {
            let mut total = C64::default();
            for p in &perms {
                let mut prod = C64::from(1.0);
                for t in 0..tuples.order() {
                    prod *= g[(kappa_row[t] as usize, p[t] as usize)];
                    if prod.norm() == 0.0 {
                        break;
                    }
                }
                total += prod;
            }
            if total.norm() > 0.0 {
                act[(row, col)] = total;
            }
        }
    }
    act
}

fn distinct_permutations(tuple: &[u32]) -> Vec<Vec<u32>> {
    let mut perms = Vec::new();
    let mut items = tuple.to_vec();
    items.sort_unstable();
    loop {
        perms.push(items.clone());
        if !next_permutation(&mut items) {
            break;
        }
    }
    perms
}

fn next_permutation(items: &mut [u32]) -> bool {
    let n = items.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && items[i - 1] >= items[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while items[j] <= items[i - 1] {
        j -= 1;
    }
    items.swap(i - 1, j);
    items[i..].reverse();
    true
}

/// Core solver: orthonormal deterministic basis of all matrices `C`
/// (output_dim x action_dim) with `C . T_i = S_i . C` for every paired
/// action/output generator matrix.
fn intertwiner_basis(
    action_inf: &[CMat],
    action_disc: &[CMat],
    out_inf: &[CMat],
    out_disc: &[CMat],
) -> Vec<CMat> {
    let din = action_inf.first().or(action_disc.first()).map(|m| m.nrows()).unwrap_or(0);
    let dout = out_inf.first().or(out_disc.first()).map(|m| m.nrows()).unwrap_or(0);
    let unknowns = din * dout;
    if unknowns == 0 {
        return Vec::new();
    }
    let pairs: Vec<(&CMat, &CMat)> = action_inf
        .iter()
        .zip(out_inf.iter())
        .chain(action_disc.iter().zip(out_disc.iter()))
        .collect();
    let mut lhs = CMat::zeros(pairs.len() * unknowns, unknowns);
    for (c_idx, (t, s)) in pairs.iter().enumerate() {
        let base = c_idx * unknowns;
        // Constraint rows indexed (K, k); unknown columns indexed (K', k').
        for big_k in 0..dout {
            for k in 0..din {
                let row = base + big_k * din + k;
                for kp in 0..din {
                    let v = t[(kp, k)];
                    if v.norm() > 0.0 {
                        lhs[(row, big_k * din + kp)] += v;
                    }
                }
                for big_kp in 0..dout {
                    let v = s[(big_k, big_kp)];
                    if v.norm() > 0.0 {
                        lhs[(row, big_kp * din + k)] -= v;
                    }
                }
            }
        }
    }
    let ns = null_space(&lhs, SVD_NULL_TOL);
    if ns.ncols() == 0 {
        return Vec::new();
    }
    // Deterministic basis: QR in the (K, k) row order, then make the first
    // nonzero coefficient of each solution real and positive.
    let q = if ns.ncols() == 1 { ns } else { ns.qr().q() };
    let mut solutions = Vec::with_capacity(q.ncols());
    for j in 0..q.ncols() {
        let mut col: CVec = q.column(j).into_owned();
        let peak = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(first) = col.iter().find(|z| z.norm() > 1e-10 * peak) {
            let correction = (first / C64::from(first.norm())).conj();
            col = col.map(|z| z * correction);
        }
        let mut c = CMat::zeros(dout, din);
        for big_k in 0..dout {
            for k in 0..din {
                c[(big_k, k)] = col[big_k * din + k];
            }
        }
        solutions.push(c);
    }
    solutions
}

fn check_same_algebra(reps: &[&Rep]) -> Result<()> {
    for pair in reps.windows(2) {
        if !pair[0].algebra().compatible(pair[1].algebra()) {
            return Err(Error::AlgebraMismatch(format!(
                "{} vs {}",
                pair[0].algebra().name(),
                pair[1].algebra().name()
            )));
        }
        if pair[0].discrete().len() != pair[1].discrete().len() {
            return Err(Error::InvalidArgument(format!(
                "discrete generator count mismatch: {} vs {}",
                pair[0].discrete().len(),
                pair[1].discrete().len()
            )));
        }
    }
    Ok(())
}

fn entries_from_solutions(
    solutions: &[CMat],
    flat_to_indices: impl Fn(usize) -> Vec<u32>,
) -> Vec<CouplingEntry> {
    let mut entries = Vec::new();
    for (alpha, c) in solutions.iter().enumerate() {
        for flat in 0..c.ncols() {
            for big_k in 0..c.nrows() {
                let mut v = c[(big_k, flat)];
                if v.norm() <= ENTRY_TRIM {
                    continue;
                }
                // Snap sub-roundoff components so tables stay clean.
                if v.re.abs() < 1e-15 * v.norm() {
                    v.re = 0.0;
                }
                if v.im.abs() < 1e-15 * v.norm() {
                    v.im = 0.0;
                }
                entries.push(CouplingEntry {
                    indices: flat_to_indices(flat),
                    output: big_k as u32,
                    alpha: alpha as u32,
                    value: v,
                    flat,
                });
            }
        }
    }
    entries.sort_by(|a, b| (&a.indices, a.output, a.alpha).cmp(&(&b.indices, b.output, b.alpha)));
    entries
}

/// All intertwiners from `rep1 (x) rep2` into `rep_out`. An empty tensor
/// (multiplicity zero) is a valid outcome.
pub fn clebsch_gordan(rep1: &Rep, rep2: &Rep, rep_out: &Rep) -> Result<CouplingTensor> {
    check_same_algebra(&[rep1, rep2, rep_out])?;
    let (d1, d2) = (rep1.dim(), rep2.dim());
    let i1 = CMat::identity(d1, d1);
    let i2 = CMat::identity(d2, d2);
    let action_inf: Vec<CMat> = rep1
        .infinitesimal()
        .iter()
        .zip(rep2.infinitesimal())
        .map(|(a, b)| a.kronecker(&i2) + i1.kronecker(b))
        .collect();
    let action_disc: Vec<CMat> = rep1
        .discrete()
        .iter()
        .zip(rep2.discrete())
        .map(|(a, b)| a.kronecker(b))
        .collect();
    let solutions = intertwiner_basis(
        &action_inf,
        &action_disc,
        rep_out.infinitesimal(),
        rep_out.discrete(),
    );
    let entries =
        entries_from_solutions(&solutions, |flat| vec![(flat / d2) as u32, (flat % d2) as u32]);
    Ok(CouplingTensor {
        input_dims: vec![d1, d2],
        output_dim: rep_out.dim(),
        order: 2,
        symmetric: false,
        multiplicity: solutions.len(),
        entries,
        flat_dim: d1 * d2,
    })
}

/// Symmetric tensor-product coupling: all intertwiners from Sym^order(rep)
/// into `rep_out`, solved directly on ordered-tuple coordinates.
pub fn symmetric_coupling(rep: &Rep, order: usize, rep_out: &Rep) -> Result<CouplingTensor> {
    symmetric_coupling_with_cap(rep, order, rep_out, DEFAULT_SYM_CAP)
}

pub fn symmetric_coupling_with_cap(
    rep: &Rep,
    order: usize,
    rep_out: &Rep,
    cap: usize,
) -> Result<CouplingTensor> {
    if order == 0 {
        return Err(Error::InvalidArgument("symmetric coupling needs order >= 1".into()));
    }
    check_same_algebra(&[rep, rep_out])?;
    match sym_dim(rep.dim(), order) {
        Some(m) if m <= cap => {}
        got => {
            return Err(Error::ResourceLimit(format!(
                "dim Sym^{order}(V) = {} exceeds cap {cap}",
                got.map_or("overflow".to_string(), |m| m.to_string())
            )));
        }
    }
    let tuples = SymTuples::new(rep.dim(), order);
    let action_inf: Vec<CMat> = rep
        .infinitesimal()
        .iter()
        .map(|x| sym_infinitesimal_action(x, &tuples))
        .collect();
    let action_disc: Vec<CMat> =
        rep.discrete().iter().map(|h| sym_group_action(h, &tuples)).collect();
    let solutions = intertwiner_basis(
        &action_inf,
        &action_disc,
        rep_out.infinitesimal(),
        rep_out.discrete(),
    );
    let entries = entries_from_solutions(&solutions, |flat| tuples.tuples()[flat].clone());
    Ok(CouplingTensor {
        input_dims: vec![rep.dim(); order],
        output_dim: rep_out.dim(),
        order,
        symmetric: true,
        multiplicity: solutions.len(),
        entries,
        flat_dim: tuples.len(),
    })
}

/// Irreducible components of `rep1 (x) rep2` among the candidate labels,
/// with multiplicities. Zero-multiplicity candidates are omitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionRule {
    pub terms: Vec<(IrrepLabel, usize)>,
}

impl SelectionRule {
    /// Sum of multiplicity-weighted dimensions over the listed terms.
    pub fn total_dim(&self) -> usize {
        self.terms.iter().map(|(label, m)| label.dim() * m).sum()
    }
}

pub fn selection_rule(rep1: &Rep, rep2: &Rep, candidates: &[IrrepLabel]) -> Result<SelectionRule> {
    let mut sorted: Vec<IrrepLabel> = candidates.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut terms = Vec::new();
    for label in sorted {
        let out = label.build()?;
        let coupling = clebsch_gordan(rep1, rep2, &out)?;
        if coupling.multiplicity > 0 {
            terms.push((label, coupling.multiplicity));
        }
    }
    Ok(SelectionRule { terms })
}

/// Block diagonalization of a (possibly conjugated) reducible representation
/// against candidate irreps.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Invertible basis change `U`: `U . drho(X) . U^-1` is block diagonal
    /// with the candidate irrep generators on the diagonal.
    pub change_of_basis: CMat,
    /// Blocks in deterministic order (sorted by label, then multiplicity
    /// copy index).
    pub blocks: Vec<(IrrepLabel, usize)>,
    pub condition_number: f64,
    /// Max deviation of any conjugated generator block from the candidate
    /// irrep generators.
    pub max_block_residual: f64,
}

pub fn decompose_rep(rep: &Rep, candidates: &[IrrepLabel]) -> Result<Decomposition> {
    let mut sorted: Vec<IrrepLabel> = candidates.to_vec();
    sorted.sort();
    sorted.dedup();

    let dim = rep.dim();
    let mut rows: Vec<(IrrepLabel, Rep, CMat)> = Vec::new();
    let mut covered = 0usize;
    let mut blocks = Vec::new();
    for label in &sorted {
        let target = label.build()?;
        check_same_algebra(&[rep, &target])?;
        let solutions = intertwiner_basis(
            rep.infinitesimal(),
            rep.discrete(),
            target.infinitesimal(),
            target.discrete(),
        );
        if solutions.is_empty() {
            continue;
        }
        covered += solutions.len() * target.dim();
        blocks.push((label.clone(), solutions.len()));
        for p in solutions {
            rows.push((label.clone(), target.clone(), p));
        }
    }
    if covered != dim {
        return Err(Error::DecompositionIncomplete { dim, residual: dim.saturating_sub(covered) });
    }

    let mut u = CMat::zeros(dim, dim);
    let mut offset = 0usize;
    for (_, target, p) in &rows {
        u.view_mut((offset, 0), (target.dim(), dim)).copy_from(p);
        offset += target.dim();
    }
    let svd = u.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 1e-12 * smax {
        return Err(Error::InvalidArgument("change of basis is numerically singular".into()));
    }
    let u_inv = u
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("change of basis is singular".into()))?;

    let mut max_resid = 0.0f64;
    for (g_idx, x) in rep.infinitesimal().iter().enumerate() {
        let conj = &u * x * &u_inv;
        let mut off = 0usize;
        for (_, target, _) in &rows {
            let d = target.dim();
            let block = conj.view((off, off), (d, d)).into_owned();
            max_resid = max_resid.max(max_abs(&(block - &target.infinitesimal()[g_idx])));
            off += d;
        }
    }
    for (h_idx, h) in rep.discrete().iter().enumerate() {
        let conj = &u * h * &u_inv;
        let mut off = 0usize;
        for (_, target, _) in &rows {
            let d = target.dim();
            let block = conj.view((off, off), (d, d)).into_owned();
            max_resid = max_resid.max(max_abs(&(block - &target.discrete()[h_idx])));
            off += d;
        }
    }

    Ok(Decomposition {
        change_of_basis: u,
        blocks,
        condition_number: smax / smin,
        max_block_residual: max_resid,
    })
}

// ---------------------------------------------------------------------------
// In-process cache.
// ---------------------------------------------------------------------------

/// Read-mostly cache of coupling solves keyed by content hashes of the
/// participating representations. Values are deterministic, so concurrent
/// recomputation of the same key is benign.
#[derive(Default)]
pub struct CouplingCache {
    map: Mutex<HashMap<String, Arc<CouplingTensor>>>,
}

impl CouplingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clebsch_gordan(&self, rep1: &Rep, rep2: &Rep, rep_out: &Rep) -> Result<Arc<CouplingTensor>> {
        let key = format!(
            "cg:{}:{}:{}",
            rep1.content_hash(),
            rep2.content_hash(),
            rep_out.content_hash()
        );
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let tensor = Arc::new(clebsch_gordan(rep1, rep2, rep_out)?);
        self.map.lock().unwrap().insert(key, tensor.clone());
        Ok(tensor)
    }

    pub fn symmetric(&self, rep: &Rep, order: usize, rep_out: &Rep) -> Result<Arc<CouplingTensor>> {
        let key = format!("sym:{}:{}:{}", rep.content_hash(), order, rep_out.content_hash());
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let tensor = Arc::new(symmetric_coupling(rep, order, rep_out)?);
        self.map.lock().unwrap().insert(key, tensor.clone());
        Ok(tensor)
    }
}

/// Content-hash key for serialized coupling tables (file cache).
pub fn coupling_file_key(reps: &[&Rep], order: usize, symmetric: bool, out: &Rep) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(if symmetric { b"sym" as &[u8] } else { b"cg" });
    hasher.update((order as u64).to_le_bytes());
    for r in reps {
        hasher.update(r.content_hash().as_bytes());
    }
    hasher.update(out.content_hash().as_bytes());
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Coupling-table JSON format.
// ---------------------------------------------------------------------------

#[derive(serde::Serialize, serde::Deserialize)]
struct TableJson {
    inputs: Vec<String>,
    output: String,
    order: usize,
    symmetric: bool,
    multiplicity: usize,
    entries: Vec<Vec<serde_json::Value>>,
    input_dims: Vec<usize>,
    output_dim: usize,
}

impl CouplingTensor {
    pub fn to_table_json(&self, input_labels: &[String], output_label: &str) -> String {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mut row: Vec<serde_json::Value> =
                    e.indices.iter().map(|&k| serde_json::Value::from(k)).collect();
                row.push(serde_json::Value::from(e.output));
                row.push(serde_json::Value::from(e.alpha));
                row.push(serde_json::Value::from(e.value.re));
                row.push(serde_json::Value::from(e.value.im));
                row
            })
            .collect();
        let doc = TableJson {
            inputs: input_labels.to_vec(),
            output: output_label.to_string(),
            order: self.order,
            symmetric: self.symmetric,
            multiplicity: self.multiplicity,
            entries,
            input_dims: self.input_dims.clone(),
            output_dim: self.output_dim,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_table_json(text: &str) -> Result<(Self, Vec<String>, String)> {
        let doc: TableJson = serde_json::from_str(text)?;
        let flat_dim = if doc.symmetric {
            sym_dim(doc.input_dims.first().copied().unwrap_or(0), doc.order)
                .ok_or_else(|| Error::Parse("symmetric dimension overflow".into()))?
        } else {
            doc.input_dims.iter().product()
        };
        let tuples = if doc.symmetric {
            Some(SymTuples::new(doc.input_dims.first().copied().unwrap_or(0), doc.order))
        } else {
            None
        };
        let mut entries = Vec::with_capacity(doc.entries.len());
        for row in &doc.entries {
            if row.len() != doc.order + 4 {
                return Err(Error::Parse(format!(
                    "coupling entry must have {} fields, got {}",
                    doc.order + 4,
                    row.len()
                )));
            }
            let idx: Vec<u32> = row[..doc.order]
                .iter()
                .map(|v| {
                    v.as_u64()
                        .map(|x| x as u32)
                        .ok_or_else(|| Error::Parse("bad index in coupling entry".into()))
                })
                .collect::<Result<_>>()?;
            let output =
                row[doc.order].as_u64().ok_or_else(|| Error::Parse("bad output index".into()))? as u32;
            let alpha = row[doc.order + 1]
                .as_u64()
                .ok_or_else(|| Error::Parse("bad alpha index".into()))? as u32;
            let re = row[doc.order + 2]
                .as_f64()
                .ok_or_else(|| Error::Parse("bad real part".into()))?;
            let im = row[doc.order + 3]
                .as_f64()
                .ok_or_else(|| Error::Parse("bad imaginary part".into()))?;
            let flat = match &tuples {
                Some(t) => t.rank(&idx),
                None => idx
                    .iter()
                    .zip(&doc.input_dims)
                    .fold(0usize, |acc, (&k, &d)| acc * d + k as usize),
            };
            entries.push(CouplingEntry { indices: idx, output, alpha, value: C64::new(re, im), flat });
        }
        Ok((
            CouplingTensor {
                input_dims: doc.input_dims,
                output_dim: doc.output_dim,
                order: doc.order,
                symmetric: doc.symmetric,
                multiplicity: doc.multiplicity,
                entries,
                flat_dim,
            },
            doc.inputs,
            doc.output,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irreps::{o3_irrep, so3_irrep, su2_irrep, sun_irrep, IrrepLabel, Parity};
    use crate::linalg::random_unitary;

    #[test]
    fn trivial_times_rep_couples_identically() {
        let triv = Rep::trivial(crate::algebra::LieAlgebra::su2(), 0);
        let rep = su2_irrep(2).unwrap();
        let t = clebsch_gordan(&triv, &rep, &rep).unwrap();
        assert_eq!(t.multiplicity, 1);
        let c = t.solution_matrix(0);
        // Identity map up to the 1/sqrt(dim) orthonormalization factor.
        let want = CMat::identity(3, 3).map(|z| z / C64::from(3f64.sqrt()));
        assert!(max_abs(&(c - want)) < 1e-12);
    }

    #[test]
    fn su2_singlet_coupling_matches_antisymmetric_pair() {
        let half = su2_irrep(1).unwrap();
        let singlet = su2_irrep(0).unwrap();
        let t = clebsch_gordan(&half, &half, &singlet).unwrap();
        assert_eq!(t.multiplicity, 1);
        let c = t.solution_matrix(0);
        // (|01> - |10>)/sqrt(2), first nonzero entry made positive.
        assert!((c[(0, 1)] - C64::from(1.0 / 2f64.sqrt())).norm() < 1e-12);
        assert!((c[(0, 2)] + C64::from(1.0 / 2f64.sqrt())).norm() < 1e-12);
        assert!(c[(0, 0)].norm() < 1e-12);
        assert!(c[(0, 3)].norm() < 1e-12);
    }

    #[test]
    fn impossible_coupling_is_empty() {
        let s = su2_irrep(0).unwrap();
        let quint = su2_irrep(2).unwrap();
        let t = clebsch_gordan(&s, &s, &quint).unwrap();
        assert_eq!(t.multiplicity, 0);
        assert!(t.entries.is_empty());
    }

    #[test]
    fn coupling_solutions_are_orthonormal_and_deterministic() {
        let a = su2_irrep(2).unwrap();
        let out = su2_irrep(2).unwrap();
        let t1 = clebsch_gordan(&a, &a, &out).unwrap();
        let t2 = clebsch_gordan(&a, &a, &out).unwrap();
        assert_eq!(t1.multiplicity, 1);
        for (e1, e2) in t1.entries.iter().zip(&t2.entries) {
            assert_eq!(e1.value, e2.value);
            assert_eq!(e1.indices, e2.indices);
        }
        for i in 0..t1.multiplicity {
            for j in 0..t1.multiplicity {
                let ci = t1.solution_matrix(i);
                let cj = t1.solution_matrix(j);
                let dot: C64 = ci.iter().zip(cj.iter()).map(|(x, y)| x.conj() * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - C64::from(want)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn intertwiner_residual_is_small_including_discrete() {
        let v = o3_irrep(1, Parity::Odd).unwrap();
        let scalar = o3_irrep(0, Parity::Even).unwrap();
        let t = clebsch_gordan(&v, &v, &scalar).unwrap();
        assert_eq!(t.multiplicity, 1);
        let resid = t.intertwiner_residual(&[&v, &v], &scalar, 20, 5, 1.0).unwrap();
        assert!(resid < 1e-8, "residual {resid}");

        // Parity selection: vector x vector into a pseudoscalar vanishes.
        let pseudo = o3_irrep(0, Parity::Odd).unwrap();
        let t2 = clebsch_gordan(&v, &v, &pseudo).unwrap();
        assert_eq!(t2.multiplicity, 0);
    }

    #[test]
    fn multiplicity_is_basis_independent() {
        let a = su2_irrep(1).unwrap();
        let b = su2_irrep(2).unwrap();
        let out = su2_irrep(1).unwrap();
        let m0 = clebsch_gordan(&a, &b, &out).unwrap().multiplicity;
        let q = random_unitary(out.dim(), 99);
        let out_conj = out.conjugated(&q).unwrap();
        let m1 = clebsch_gordan(&a, &b, &out_conj).unwrap().multiplicity;
        assert_eq!(m0, m1);
        assert_eq!(m0, 1);
    }

    #[test]
    fn su2_selection_rules_match_angular_momentum_addition() {
        let a = su2_irrep(1).unwrap();
        let b = su2_irrep(2).unwrap();
        let candidates: Vec<IrrepLabel> = (0..=4).map(|two_j| IrrepLabel::Su2 { two_j }).collect();
        let rule = selection_rule(&a, &b, &candidates).unwrap();
        assert_eq!(
            rule.terms,
            vec![(IrrepLabel::Su2 { two_j: 1 }, 1), (IrrepLabel::Su2 { two_j: 3 }, 1)]
        );
        assert_eq!(rule.total_dim(), 6);
    }

    #[test]
    fn anything_times_trivial_is_itself() {
        let rep = su2_irrep(3).unwrap();
        let triv = su2_irrep(0).unwrap();
        let candidates: Vec<IrrepLabel> = (0..=6).map(|two_j| IrrepLabel::Su2 { two_j }).collect();
        let rule = selection_rule(&rep, &triv, &candidates).unwrap();
        assert_eq!(rule.terms, vec![(IrrepLabel::Su2 { two_j: 3 }, 1)]);
    }

    #[test]
    fn su3_fundamental_times_antifundamental_is_adjoint_plus_singlet() {
        let f = sun_irrep(&[1, 0, 0]).unwrap();
        let af = sun_irrep(&[1, 1, 0]).unwrap();
        let candidates = vec![
            IrrepLabel::sun(vec![0, 0, 0]).unwrap(),
            IrrepLabel::sun(vec![1, 0, 0]).unwrap(),
            IrrepLabel::sun(vec![1, 1, 0]).unwrap(),
            IrrepLabel::sun(vec![2, 0, 0]).unwrap(),
            IrrepLabel::sun(vec![2, 1, 0]).unwrap(),
        ];
        let rule = selection_rule(&f, &af, &candidates).unwrap();
        assert_eq!(
            rule.terms,
            vec![
                (IrrepLabel::sun(vec![0, 0, 0]).unwrap(), 1),
                (IrrepLabel::sun(vec![2, 1, 0]).unwrap(), 1),
            ]
        );
        assert_eq!(rule.total_dim(), 9);
    }

    #[test]
    fn symmetric_square_of_vector_drops_antisymmetric_part() {
        let v = so3_irrep(1).unwrap();
        let mults: Vec<usize> = (0..=2)
            .map(|l| symmetric_coupling(&v, 2, &so3_irrep(l).unwrap()).unwrap().multiplicity)
            .collect();
        assert_eq!(mults, vec![1, 0, 1]);
    }

    #[test]
    fn symmetric_cube_of_spin_half() {
        let h = su2_irrep(1).unwrap();
        let m3 = symmetric_coupling(&h, 3, &su2_irrep(3).unwrap()).unwrap().multiplicity;
        let m1 = symmetric_coupling(&h, 3, &su2_irrep(1).unwrap()).unwrap().multiplicity;
        assert_eq!((m3, m1), (1, 0));
    }

    #[test]
    fn symmetric_order_one_reduces_to_identity_coupling() {
        let rep = su2_irrep(2).unwrap();
        let t = symmetric_coupling(&rep, 1, &rep).unwrap();
        assert_eq!(t.multiplicity, 1);
        let c = t.solution_matrix(0);
        let want = CMat::identity(3, 3).map(|z| z / C64::from(3f64.sqrt()));
        assert!(max_abs(&(c - want)) < 1e-12);
    }

    #[test]
    fn symmetric_coupling_respects_cap() {
        let rep = su2_irrep(1).unwrap();
        let out = su2_irrep(3).unwrap();
        match symmetric_coupling_with_cap(&rep, 3, &out, 2) {
            Err(Error::ResourceLimit(_)) => {}
            other => panic!("expected resource-limit error, got {other:?}"),
        }
    }

    #[test]
    fn symmetric_intertwiner_residual_under_group_action() {
        let v = so3_irrep(1).unwrap();
        let out = so3_irrep(2).unwrap();
        let t = symmetric_coupling(&v, 2, &out).unwrap();
        let resid = t.intertwiner_residual(&[&v], &out, 20, 17, 1.0).unwrap();
        assert!(resid < 1e-8, "residual {resid}");
    }

    #[test]
    fn decompose_already_irreducible_rep() {
        let rep = su2_irrep(2).unwrap();
        let d = decompose_rep(&rep, &[IrrepLabel::Su2 { two_j: 2 }]).unwrap();
        assert_eq!(d.blocks, vec![(IrrepLabel::Su2 { two_j: 2 }, 1)]);
        assert!(d.max_block_residual < 1e-10);
    }

    #[test]
    fn decompose_recovers_conjugated_direct_sum() {
        let sum = su2_irrep(0).unwrap().direct_sum(&su2_irrep(2).unwrap()).unwrap();
        let q = random_unitary(4, 21);
        let hidden = sum.conjugated(&q).unwrap();
        let candidates: Vec<IrrepLabel> = (0..=4).map(|two_j| IrrepLabel::Su2 { two_j }).collect();
        let d = decompose_rep(&hidden, &candidates).unwrap();
        assert_eq!(
            d.blocks,
            vec![(IrrepLabel::Su2 { two_j: 0 }, 1), (IrrepLabel::Su2 { two_j: 2 }, 1)]
        );
        assert!(d.max_block_residual < 1e-8, "residual {}", d.max_block_residual);
    }

    #[test]
    fn decompose_tensor_square_of_spin_half() {
        let h = su2_irrep(1).unwrap();
        let prod = h.tensor_product(&h).unwrap();
        let candidates: Vec<IrrepLabel> = (0..=4).map(|two_j| IrrepLabel::Su2 { two_j }).collect();
        let d = decompose_rep(&prod, &candidates).unwrap();
        assert_eq!(
            d.blocks,
            vec![(IrrepLabel::Su2 { two_j: 0 }, 1), (IrrepLabel::Su2 { two_j: 2 }, 1)]
        );
    }

    #[test]
    fn incomplete_candidates_report_residual_dimension() {
        let sum = su2_irrep(0).unwrap().direct_sum(&su2_irrep(2).unwrap()).unwrap();
        match decompose_rep(&sum, &[IrrepLabel::Su2 { two_j: 0 }]) {
            Err(Error::DecompositionIncomplete { dim, residual }) => {
                assert_eq!(dim, 4);
                assert_eq!(residual, 3);
            }
            other => panic!("expected incomplete decomposition, got {other:?}"),
        }
    }

    #[test]
    fn cache_returns_identical_tables() {
        let cache = CouplingCache::new();
        let a = su2_irrep(1).unwrap();
        let out = su2_irrep(0).unwrap();
        let t1 = cache.clebsch_gordan(&a, &a, &out).unwrap();
        let t2 = cache.clebsch_gordan(&a, &a, &out).unwrap();
        assert!(Arc::ptr_eq(&t1, &t2));
        let fresh = clebsch_gordan(&a, &a, &out).unwrap();
        let labels = vec!["SU2(1)".to_string(), "SU2(1)".to_string()];
        assert_eq!(t1.to_table_json(&labels, "SU2(0)"), fresh.to_table_json(&labels, "SU2(0)"));
    }

    #[test]
    fn table_json_round_trips() {
        let v = so3_irrep(1).unwrap();
        let t = symmetric_coupling(&v, 2, &so3_irrep(2).unwrap()).unwrap();
        let labels = vec!["SO3(1)".to_string(); 2];
        let text = t.to_table_json(&labels, "SO3(2)");
        let (back, inputs, output) = CouplingTensor::from_table_json(&text).unwrap();
        assert_eq!(inputs, labels);
        assert_eq!(output, "SO3(2)");
        assert_eq!(back.to_table_json(&labels, "SO3(2)"), text);
    }

    #[test]
    fn sym_tuple_enumeration_counts() {
        let t = SymTuples::new(3, 2);
        assert_eq!(t.len(), 6);
        assert_eq!(sym_dim(3, 2), Some(6));
        assert_eq!(sym_dim(9, 3), Some(165));
        assert_eq!(t.tuples()[0], vec![0, 0]);
        assert_eq!(t.rank(&[1, 2]), t.tuples().iter().position(|x| x == &vec![1, 2]).unwrap());
    }
}
