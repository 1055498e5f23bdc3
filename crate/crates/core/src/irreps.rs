//! Explicit irreducible representations of the built-in groups.
//!
//! Conventions: infinitesimal generators are stored anti-Hermitian for the
//! compact directions, so real coefficient vectors exponentiate to unitary
//! matrices. For the su(2) family this means `X_i = -i J_i` with the usual
//! Hermitian angular-momentum matrices `J_i` in the complex |j,m> basis and
//! structure constants `A_ijk = eps_ijk`. O(3) inversion acts as
//! `parity * I` on each irrep block. SO(1,3) irreps come from the
//! (j1, j2) double-su(2) construction; boosts are Hermitian and therefore
//! exponentiate to non-unitary matrices. SU(N) irreps are built in the
//! Gelfand-Tsetlin basis, with patterns ordered lexicographically on their
//! flattened rows.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::algebra::{LieAlgebra, Rep};
use crate::error::{Error, Result};
use crate::linalg::{C64, CMat};

/// Group identifier plus highest-weight tuple naming an irrep.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IrrepLabel {
    /// SU(2) irrep labelled by twice the spin.
    Su2 { two_j: u32 },
    /// SO(3) irrep labelled by integer angular momentum l.
    So3 { l: u32 },
    /// O(3) irrep: angular momentum plus inversion parity (+1 or -1).
    O3 { l: u32, parity: Parity },
    /// SO(1,3) irrep labelled by (2j1, 2j2).
    So13 { two_j1: u32, two_j2: u32 },
    /// SU(N) irrep labelled by a normalized highest weight (weakly
    /// decreasing, last entry zero, length N).
    Sun { weight: Vec<u32> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Parity::Even),
            -1 => Ok(Parity::Odd),
            other => Err(Error::Parse(format!("parity must be +1 or -1, got {other}"))),
        }
    }
}

impl IrrepLabel {
    pub fn sun(raw_weight: Vec<u32>) -> Result<Self> {
        if raw_weight.len() < 2 {
            return Err(Error::InvalidArgument("SU(N) weight needs length N >= 2".into()));
        }
        if raw_weight.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!(
                "SU(N) weight must be weakly decreasing, got {raw_weight:?}"
            )));
        }
        let last = *raw_weight.last().unwrap();
        let weight = raw_weight.iter().map(|x| x - last).collect();
        Ok(IrrepLabel::Sun { weight })
    }

    /// Dimension of the irrep this label names.
    pub fn dim(&self) -> usize {
        match self {
            IrrepLabel::Su2 { two_j } => *two_j as usize + 1,
            IrrepLabel::So3 { l } | IrrepLabel::O3 { l, .. } => 2 * *l as usize + 1,
            IrrepLabel::So13 { two_j1, two_j2 } => (*two_j1 as usize + 1) * (*two_j2 as usize + 1),
            IrrepLabel::Sun { weight } => weyl_dimension(weight).expect("valid weight") as usize,
        }
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            IrrepLabel::Su2 { two_j } => *two_j == 0,
            IrrepLabel::So3 { l } => *l == 0,
            IrrepLabel::O3 { l, parity } => *l == 0 && *parity == Parity::Even,
            IrrepLabel::So13 { two_j1, two_j2 } => *two_j1 == 0 && *two_j2 == 0,
            IrrepLabel::Sun { weight } => weight.iter().all(|&x| x == 0),
        }
    }

    /// Builds the representation this label names.
    pub fn build(&self) -> Result<Rep> {
        match self {
            IrrepLabel::Su2 { two_j } => su2_irrep(*two_j),
            IrrepLabel::So3 { l } => so3_irrep(*l),
            IrrepLabel::O3 { l, parity } => o3_irrep(*l, *parity),
            IrrepLabel::So13 { two_j1, two_j2 } => so13_irrep(*two_j1, *two_j2),
            IrrepLabel::Sun { weight } => sun_irrep(weight),
        }
    }

    pub fn group(&self) -> GroupKind {
        match self {
            IrrepLabel::Su2 { .. } => GroupKind::Su2,
            IrrepLabel::So3 { .. } => GroupKind::So3,
            IrrepLabel::O3 { .. } => GroupKind::O3,
            IrrepLabel::So13 { .. } => GroupKind::So13,
            IrrepLabel::Sun { weight } => GroupKind::Sun(weight.len()),
        }
    }
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrrepLabel::Su2 { two_j } => write!(f, "SU2({two_j})"),
            IrrepLabel::So3 { l } => write!(f, "SO3({l})"),
            IrrepLabel::O3 { l, parity } => {
                write!(f, "O3({l},{})", if *parity == Parity::Even { "+1" } else { "-1" })
            }
            IrrepLabel::So13 { two_j1, two_j2 } => write!(f, "SO13({two_j1},{two_j2})"),
            IrrepLabel::Sun { weight } => {
                let parts: Vec<String> = weight.iter().map(|x| x.to_string()).collect();
                write!(f, "SU({})[{}]", weight.len(), parts.join(","))
            }
        }
    }
}

impl FromStr for IrrepLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let inner = |prefix: &str| -> Option<&str> {
            s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')
        };
        let parse_u32 = |t: &str| -> Result<u32> {
            t.trim().parse().map_err(|_| Error::Parse(format!("bad integer in label: {t:?}")))
        };
        if let Some(body) = inner("SU2") {
            return Ok(IrrepLabel::Su2 { two_j: parse_u32(body)? });
        }
        if let Some(body) = inner("SO3") {
            return Ok(IrrepLabel::So3 { l: parse_u32(body)? });
        }
        if let Some(body) = inner("O3") {
            let parts: Vec<&str> = body.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("O3 label needs (l,parity): {s:?}")));
            }
            let l = parse_u32(parts[0])?;
            let p: i64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad parity in label: {s:?}")))?;
            return Ok(IrrepLabel::O3 { l, parity: Parity::from_sign(p)? });
        }
        if let Some(body) = inner("SO13") {
            let parts: Vec<&str> = body.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("SO13 label needs (2j1,2j2): {s:?}")));
            }
            return Ok(IrrepLabel::So13 {
                two_j1: parse_u32(parts[0])?,
                two_j2: parse_u32(parts[1])?,
            });
        }
        if let Some(rest) = s.strip_prefix("SU(") {
            let (n_str, tail) = rest
                .split_once(')')
                .ok_or_else(|| Error::Parse(format!("malformed SU(N) label: {s:?}")))?;
            let n: usize =
                n_str.parse().map_err(|_| Error::Parse(format!("bad N in label: {s:?}")))?;
            let body = tail
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(|| Error::Parse(format!("SU(N) label needs [weights]: {s:?}")))?;
            let weight: Vec<u32> =
                body.split(',').map(|t| parse_u32(t)).collect::<Result<_>>()?;
            if weight.len() != n {
                return Err(Error::Parse(format!(
                    "SU({n}) weight must have {n} entries, got {}",
                    weight.len()
                )));
            }
            return IrrepLabel::sun(weight);
        }
        Err(Error::Parse(format!("unrecognized irrep label: {s:?}")))
    }
}

/// The group family a label belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Su2,
    So3,
    O3,
    So13,
    Sun(usize),
}

impl GroupKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SU2" => Ok(GroupKind::Su2),
            "SO3" => Ok(GroupKind::So3),
            "O3" => Ok(GroupKind::O3),
            "SO13" => Ok(GroupKind::So13),
            other => {
                if let Some(n) = other
                    .strip_prefix("SU(")
                    .and_then(|t| t.strip_suffix(')'))
                    .and_then(|t| t.parse::<usize>().ok())
                {
                    return Ok(GroupKind::Sun(n));
                }
                if let Some(n) = other.strip_prefix("SU").and_then(|t| t.parse::<usize>().ok()) {
                    if n != 2 {
                        return Ok(GroupKind::Sun(n));
                    }
                }
                Err(Error::Parse(format!("unknown group: {s:?}")))
            }
        }
    }

    /// All irrep labels of this group with dimension at most `max_dim`,
    /// sorted by (dimension, label). Used as the candidate set when
    /// decomposing reducible representations.
    pub fn candidates(&self, max_dim: usize) -> Vec<IrrepLabel> {
        let mut out = Vec::new();
        match self {
            GroupKind::Su2 => {
                for two_j in 0..max_dim as u32 {
                    out.push(IrrepLabel::Su2 { two_j });
                }
            }
            GroupKind::So3 => {
                let mut l = 0;
                while 2 * l as usize + 1 <= max_dim {
                    out.push(IrrepLabel::So3 { l });
                    l += 1;
                }
            }
            GroupKind::O3 => {
                let mut l = 0;
                while 2 * l as usize + 1 <= max_dim {
                    out.push(IrrepLabel::O3 { l, parity: Parity::Even });
                    out.push(IrrepLabel::O3 { l, parity: Parity::Odd });
                    l += 1;
                }
            }
            GroupKind::So13 => {
                for a in 0..max_dim as u32 {
                    for b in 0..max_dim as u32 {
                        if (a as usize + 1) * (b as usize + 1) <= max_dim {
                            out.push(IrrepLabel::So13 { two_j1: a, two_j2: b });
                        }
                    }
                }
            }
            GroupKind::Sun(n) => {
                let mut weight = vec![0u32; *n];
                enumerate_weights(&mut weight, 0, (max_dim - 1) as u32, &mut |w| {
                    if w.last() == Some(&0) {
                        if let Ok(d) = weyl_dimension(w) {
                            if d as usize <= max_dim {
                                out.push(IrrepLabel::Sun { weight: w.to_vec() });
                            }
                        }
                    }
                });
            }
        }
        out.sort_by_key(|label| (label.dim(), label.clone()));
        out.dedup();
        out
    }
}

fn enumerate_weights(weight: &mut Vec<u32>, pos: usize, max_entry: u32, emit: &mut impl FnMut(&[u32])) {
    if pos == weight.len() {
        emit(weight);
        return;
    }
    let upper = if pos == 0 { max_entry } else { weight[pos - 1] };
    for v in 0..=upper {
        weight[pos] = v;
        enumerate_weights(weight, pos + 1, max_entry, emit);
    }
}

// ---------------------------------------------------------------------------
// su(2) family.
// ---------------------------------------------------------------------------

/// Hermitian angular-momentum matrices (J_x, J_y, J_z) of spin j = two_j/2
/// in the |j,m> basis, m descending from +j.
fn angular_momentum_matrices(two_j: u32) -> [CMat; 3] {
    let n = two_j as usize + 1;
    let j = two_j as f64 / 2.0;
    let m_of = |idx: usize| j - idx as f64;
    let mut jz = CMat::zeros(n, n);
    let mut jp = CMat::zeros(n, n);
    for idx in 0..n {
        let m = m_of(idx);
        jz[(idx, idx)] = C64::from(m);
        if idx > 0 {
            // J_+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>
            let amp = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
            jp[(idx - 1, idx)] = C64::from(amp);
        }
    }
    let jm = jp.transpose();
    let jx = (&jp + &jm).map(|z| z / C64::from(2.0));
    let jy = (&jp - &jm).map(|z| z * C64::new(0.0, -0.5));
    [jx, jy, jz]
}

fn anti_hermitian(j_mats: &[CMat; 3]) -> Vec<CMat> {
    j_mats.iter().map(|j| j.map(|z| z * C64::new(0.0, -1.0))).collect()
}

/// SU(2) irrep of dimension `two_j + 1`.
pub fn su2_irrep(two_j: u32) -> Result<Rep> {
    let gens = anti_hermitian(&angular_momentum_matrices(two_j));
    Rep::new(LieAlgebra::su2(), gens, vec![])
}

/// SO(3) irrep of integer angular momentum l (the same matrices as
/// `su2_irrep(2l)` over the rotation-group algebra).
pub fn so3_irrep(l: u32) -> Result<Rep> {
    let gens = anti_hermitian(&angular_momentum_matrices(2 * l));
    Rep::new(LieAlgebra::so3(), gens, vec![])
}

/// O(3) irrep: the SO(3) matrices plus one discrete generator representing
/// inversion as `parity * I`.
pub fn o3_irrep(l: u32, parity: Parity) -> Result<Rep> {
    let n = 2 * l as usize + 1;
    let gens = anti_hermitian(&angular_momentum_matrices(2 * l));
    let inversion = CMat::identity(n, n).map(|z| z * C64::from(parity.sign()));
    Rep::new(LieAlgebra::so3(), gens, vec![inversion])
}

/// SO(3) acting on Cartesian 3-vectors; the coordinate-space counterpart of
/// `so3_irrep(1)`.
pub fn so3_vector_rep() -> Result<Rep> {
    Rep::new(LieAlgebra::so3(), cartesian_rotation_generators(), vec![])
}

/// O(3) acting on Cartesian 3-vectors, with inversion -I.
pub fn o3_vector_rep() -> Result<Rep> {
    let inv = CMat::identity(3, 3).map(|z| -z);
    Rep::new(LieAlgebra::so3(), cartesian_rotation_generators(), vec![inv])
}

fn cartesian_rotation_generators() -> Vec<CMat> {
    let mut gens = Vec::with_capacity(3);
    for a in 0..3 {
        let mut l = CMat::zeros(3, 3);
        for b in 0..3 {
            for c in 0..3 {
                let e = eps(a, b, c);
                if e != 0.0 {
                    l[(b, c)] = C64::from(-e);
                }
            }
        }
        gens.push(l);
    }
    gens
}

fn eps(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

// ---------------------------------------------------------------------------
// SO(1,3).
// ---------------------------------------------------------------------------

/// SO(1,3) irrep (2j1, 2j2) from two commuting su(2) copies A and B:
/// rotations J = A x 1 + 1 x B and boosts K = -i (A x 1 - 1 x B).
pub fn so13_irrep(two_j1: u32, two_j2: u32) -> Result<Rep> {
    let a = anti_hermitian(&angular_momentum_matrices(two_j1));
    let b = anti_hermitian(&angular_momentum_matrices(two_j2));
    let da = two_j1 as usize + 1;
    let db = two_j2 as usize + 1;
    let ia = CMat::identity(da, da);
    let ib = CMat::identity(db, db);
    let mut gens = Vec::with_capacity(6);
    for i in 0..3 {
        gens.push(a[i].kronecker(&ib) + ia.kronecker(&b[i]));
    }
    for i in 0..3 {
        gens.push((a[i].kronecker(&ib) - ia.kronecker(&b[i])).map(|z| z * C64::new(0.0, -1.0)));
    }
    Rep::new(LieAlgebra::so13(), gens, vec![])
}

/// The defining four-vector representation of SO(1,3) in the Minkowski basis
/// (t, x, y, z) with metric diag(+,-,-,-). Equivalent to the (1,1) irrep by
/// a change of basis; used as the coordinate representation for
/// four-momentum data.
pub fn so13_vector_rep() -> Result<Rep> {
    let mut gens = Vec::with_capacity(6);
    for a in 0..3 {
        let mut j = CMat::zeros(4, 4);
        for b in 0..3 {
            for c in 0..3 {
                let e = eps(a, b, c);
                if e != 0.0 {
                    j[(b + 1, c + 1)] = C64::from(-e);
                }
            }
        }
        gens.push(j);
    }
    for a in 0..3 {
        let mut k = CMat::zeros(4, 4);
        k[(0, a + 1)] = C64::from(1.0);
        k[(a + 1, 0)] = C64::from(1.0);
        gens.push(k);
    }
    Rep::new(LieAlgebra::so13(), gens, vec![])
}

// ---------------------------------------------------------------------------
// SU(N) via Gelfand-Tsetlin patterns.
// ---------------------------------------------------------------------------

/// Triangular integer array labelling one basis vector of an SU(N) irrep.
/// `rows[0]` is the highest weight (length N), each following row is one
/// entry shorter, and consecutive rows interleave (betweenness).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GTPattern {
    rows: Vec<Vec<i64>>,
}

impl GTPattern {
    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    fn flatten(&self) -> Vec<i64> {
        self.rows.iter().flatten().copied().collect()
    }

    fn satisfies_betweenness(&self) -> bool {
        for r in 0..self.rows.len() - 1 {
            let upper = &self.rows[r];
            let lower = &self.rows[r + 1];
            for i in 0..lower.len() {
                if !(upper[i] >= lower[i] && lower[i] >= upper[i + 1]) {
                    return false;
                }
            }
        }
        true
    }

    /// Row sum of the row with `len` entries; zero for `len == 0`.
    fn row_sum(&self, len: usize) -> i64 {
        if len == 0 {
            return 0;
        }
        let n = self.rows[0].len();
        self.rows[n - len].iter().sum()
    }
}

fn validate_weight(weight: &[u32]) -> Result<()> {
    if weight.len() < 2 {
        return Err(Error::InvalidArgument("SU(N) weight needs length N >= 2".into()));
    }
    if weight.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(format!(
            "SU(N) weight must be weakly decreasing, got {weight:?}"
        )));
    }
    Ok(())
}

/// All GT patterns with the given top row, in lexicographic order of their
/// flattened rows. The count equals the Weyl dimension.
pub fn enumerate_gt_patterns(weight: &[u32]) -> Result<Vec<GTPattern>> {
    validate_weight(weight)?;
    let top: Vec<i64> = weight.iter().map(|&x| x as i64).collect();
    let mut patterns = Vec::new();
    let mut rows = vec![top];
    fill_rows(&mut rows, &mut patterns);
    patterns.sort_by_key(|p| p.flatten());
    Ok(patterns)
}

fn fill_rows(rows: &mut Vec<Vec<i64>>, out: &mut Vec<GTPattern>) {
    let prev = rows.last().unwrap().clone();
    if prev.len() == 1 {
        out.push(GTPattern { rows: rows.clone() });
        return;
    }
    let m = prev.len() - 1;
    let mut next = vec![0i64; m];
    fill_entries(&prev, &mut next, 0, rows, out);
}

fn fill_entries(
    prev: &[i64],
    next: &mut Vec<i64>,
    pos: usize,
    rows: &mut Vec<Vec<i64>>,
    out: &mut Vec<GTPattern>,
) {
    if pos == next.len() {
        rows.push(next.clone());
        fill_rows(rows, out);
        rows.pop();
        return;
    }
    for v in prev[pos + 1]..=prev[pos] {
        next[pos] = v;
        fill_entries(prev, next, pos + 1, rows, out);
    }
}

/// Weyl dimension formula for SU(N):
/// `prod_{i<j} (w_i - w_j + j - i) / (j - i)`.
pub fn weyl_dimension(weight: &[u32]) -> Result<u64> {
    validate_weight(weight)?;
    let n = weight.len();
    let mut num: i128 = 1;
    let mut den: i128 = 1;
    for i in 0..n {
        for j in (i + 1)..n {
            num *= weight[i] as i128 - weight[j] as i128 + (j - i) as i128;
            den *= (j - i) as i128;
        }
    }
    debug_assert_eq!(num % den, 0);
    Ok((num / den) as u64)
}

/// gl(N) generator matrices E_pq (1-based indices) in the GT basis.
struct GlGenerators {
    n: usize,
    dim: usize,
    /// e[p][q] = matrix of E_{p+1, q+1}.
    e: Vec<Vec<CMat>>,
}

fn gl_generators(weight: &[u32]) -> Result<GlGenerators> {
    let n = weight.len();
    let patterns = enumerate_gt_patterns(weight)?;
    let dim = patterns.len();
    let index: HashMap<Vec<i64>, usize> =
        patterns.iter().enumerate().map(|(i, p)| (p.flatten(), i)).collect();

    let mut e = vec![vec![CMat::zeros(dim, dim); n]; n];

    // Diagonal E_kk: difference of consecutive row sums.
    for k in 1..=n {
        let mut m = CMat::zeros(dim, dim);
        for (idx, p) in patterns.iter().enumerate() {
            m[(idx, idx)] = C64::from((p.row_sum(k) - p.row_sum(k - 1)) as f64);
        }
        e[k - 1][k - 1] = m;
    }

    // Simple raising generators E_{k,k+1} with Gelfand-Tsetlin matrix
    // elements; l_{r,i} = m_{r,i} - i with 1-based positions.
    for k in 1..n {
        let mut m = CMat::zeros(dim, dim);
        for (from_idx, p) in patterns.iter().enumerate() {
            let row_of = |len: usize| -> &[i64] { &p.rows[n - len] };
            let l = |r: usize, i: usize| -> i64 { row_of(r)[i - 1] - i as i64 };
            for j in 1..=k {
                let mut target = p.clone();
                target.rows[n - k][j - 1] += 1;
                if !target.satisfies_betweenness() {
                    continue;
                }
                let to_idx = index[&target.flatten()];
                let mut num = 1.0f64;
                for i in 1..=(k + 1) {
                    num *= (l(k + 1, i) - l(k, j)) as f64;
                }
                for i in 1..k {
                    num *= (l(k - 1, i) - l(k, j) - 1) as f64;
                }
                let mut den = 1.0f64;
                for i in 1..=k {
                    if i != j {
                        den *= ((l(k, i) - l(k, j)) * (l(k, i) - l(k, j) - 1)) as f64;
                    }
                }
                let amp = (num / den).abs().sqrt();
                m[(to_idx, from_idx)] = C64::from(amp);
            }
        }
        e[k - 1][k] = m;
        e[k][k - 1] = e[k - 1][k].transpose();
    }

    // Non-simple generators by commutators: E_pq = [E_pr, E_rq].
    for gap in 2..n {
        for p in 1..=(n - gap) {
            let q = p + gap;
            let mid = p + 1;
            let raised = &e[p - 1][mid - 1] * &e[mid - 1][q - 1] - &e[mid - 1][q - 1] * &e[p - 1][mid - 1];
            e[p - 1][q - 1] = raised;
            e[q - 1][p - 1] = e[p - 1][q - 1].transpose();
        }
    }

    Ok(GlGenerators { n, dim, e })
}

/// Anti-Hermitian su(N) basis assembled from gl(N) generators, ordered as:
/// symmetric off-diagonal combinations (lexicographic pairs), antisymmetric
/// off-diagonal combinations, then Cartan differences. For N = 2 this
/// reproduces the (X_x, X_y, X_z) ordering of [`su2_irrep`].
fn sun_basis(gl: &GlGenerators) -> Vec<CMat> {
    let n = gl.n;
    let half = C64::from(0.5);
    let minus_i_half = C64::new(0.0, -0.5);
    let mut basis = Vec::with_capacity(n * n - 1);
    for p in 0..n {
        for q in (p + 1)..n {
            basis.push((&gl.e[p][q] + &gl.e[q][p]).map(|z| z * minus_i_half));
        }
    }
    for p in 0..n {
        for q in (p + 1)..n {
            basis.push((&gl.e[p][q] - &gl.e[q][p]).map(|z| z * -half));
        }
    }
    for k in 0..(n - 1) {
        basis.push((&gl.e[k][k] - &gl.e[k + 1][k + 1]).map(|z| z * minus_i_half));
    }
    basis
}

/// The su(N) algebra, with structure constants computed from the fundamental
/// representation in the basis of [`sun_basis`].
pub fn sun_algebra(n: usize) -> Result<Arc<LieAlgebra>> {
    if n < 2 {
        return Err(Error::InvalidArgument("SU(N) needs N >= 2".into()));
    }
    let mut fundamental = vec![0u32; n];
    fundamental[0] = 1;
    let gl = gl_generators(&fundamental)?;
    let basis = sun_basis(&gl);
    Ok(Arc::new(LieAlgebra::from_matrix_basis(format!("su{n}"), &basis)?))
}

/// SU(N) irrep with the given (possibly unnormalized) highest weight, in the
/// Gelfand-Tsetlin basis ordered lexicographically on flattened patterns.
pub fn sun_irrep(weight: &[u32]) -> Result<Rep> {
    validate_weight(weight)?;
    let last = *weight.last().unwrap();
    let normalized: Vec<u32> = weight.iter().map(|x| x - last).collect();
    let algebra = sun_algebra(normalized.len())?;
    let gl = gl_generators(&normalized)?;
    let basis = sun_basis(&gl);
    debug_assert_eq!(gl.dim, basis[0].nrows());
    Rep::new(algebra, basis, vec![])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{realize_element, sample_group_element, ElementCoords, COMMUTATOR_TOL};
    use crate::linalg::max_abs;

    #[test]
    fn su2_small_irreps_validate() {
        for two_j in 0..=8 {
            let rep = su2_irrep(two_j).unwrap();
            assert_eq!(rep.dim(), two_j as usize + 1);
            let report = rep.validate(COMMUTATOR_TOL);
            assert!(report.pass(), "two_j={two_j}: residual {}", report.max_commutator_residual);
        }
    }

    #[test]
    fn su2_spin_half_matches_halved_paulis() {
        let rep = su2_irrep(1).unwrap();
        let i = C64::i();
        let want_x = CMat::from_row_slice(2, 2, &[0.0.into(), 1.0.into(), 1.0.into(), 0.0.into()])
            .map(|z: C64| z * -i / C64::from(2.0));
        assert!(max_abs(&(rep.infinitesimal()[0].clone() - want_x)) < 1e-15);
        let want_z = CMat::from_row_slice(2, 2, &[1.0.into(), 0.0.into(), 0.0.into(), (-1.0).into()])
            .map(|z: C64| z * -i / C64::from(2.0));
        assert!(max_abs(&(rep.infinitesimal()[2].clone() - want_z)) < 1e-15);
    }

    #[test]
    fn su2_two_j_4_has_expected_jz_spectrum() {
        let rep = su2_irrep(4).unwrap();
        assert_eq!(rep.dim(), 5);
        // J_z = i X_z.
        let jz = rep.infinitesimal()[2].map(|z| z * C64::i());
        let diag: Vec<f64> = (0..5).map(|k| jz[(k, k)].re).collect();
        assert_eq!(diag, vec![2.0, 1.0, 0.0, -1.0, -2.0]);
    }

    #[test]
    fn so3_casimir_is_l_l_plus_one() {
        for l in 0..=4u32 {
            let rep = so3_irrep(l).unwrap();
            let n = rep.dim();
            // J^2 = -sum_i X_i^2.
            let mut casimir = CMat::zeros(n, n);
            for x in rep.infinitesimal() {
                casimir -= x * x;
            }
            let want = CMat::identity(n, n).map(|z| z * C64::from((l * (l + 1)) as f64));
            assert!(max_abs(&(casimir - want)) < 1e-9, "l={l}");
        }
    }

    #[test]
    fn sampled_su2_elements_are_unitary() {
        let rep = su2_irrep(3).unwrap();
        for seed in 0..10 {
            let g = sample_group_element(&rep, seed, 1.2).unwrap();
            let resid = max_abs(&(g.matrix.adjoint() * &g.matrix - CMat::identity(4, 4)));
            assert!(resid < 1e-9);
        }
    }

    #[test]
    fn o3_irreps_carry_parity_action() {
        let scalar = o3_irrep(0, Parity::Even).unwrap();
        assert_eq!(scalar.dim(), 1);
        assert_eq!(scalar.discrete()[0][(0, 0)], C64::from(1.0));

        let vector = o3_irrep(1, Parity::Odd).unwrap();
        assert_eq!(vector.dim(), 3);
        assert!(max_abs(&(vector.discrete()[0].clone() + CMat::identity(3, 3))) < 1e-15);

        assert_eq!(o3_irrep(2, Parity::Even).unwrap().dim(), 5);
        assert!(o3_irrep(2, Parity::Even).unwrap().validate(COMMUTATOR_TOL).pass());
    }

    #[test]
    fn so13_irreps_validate() {
        for a in 0..=3 {
            for b in 0..=3 {
                let rep = so13_irrep(a, b).unwrap();
                assert_eq!(rep.dim(), (a as usize + 1) * (b as usize + 1));
                let report = rep.validate(COMMUTATOR_TOL);
                assert!(report.pass(), "({a},{b}): residual {}", report.max_commutator_residual);
            }
        }
        assert!(so13_irrep(0, 0).unwrap().is_trivial(1e-14));
    }

    #[test]
    fn so13_vector_rep_preserves_minkowski_metric() {
        let rep = so13_vector_rep().unwrap();
        assert!(rep.validate(COMMUTATOR_TOL).pass());
        let eta = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::from(1.0),
            C64::from(-1.0),
            C64::from(-1.0),
            C64::from(-1.0),
        ]));
        for seed in 0..100 {
            let g = sample_group_element(&rep, seed, 0.5).unwrap().matrix;
            let resid = max_abs(&(g.transpose() * &eta * &g - eta.clone()));
            assert!(resid < 1e-9, "seed {seed}: residual {resid}");
        }
    }

    #[test]
    fn so13_one_one_matches_vector_rep_characters() {
        let spinor = so13_irrep(1, 1).unwrap();
        let vector = so13_vector_rep().unwrap();
        for seed in 0..20 {
            let coords = ElementCoords::sample(6, 0, seed, 0.8);
            let chi_s = realize_element(&spinor, &coords).unwrap().trace();
            let chi_v = realize_element(&vector, &coords).unwrap().trace();
            assert!((chi_s - chi_v).norm() < 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn so13_half_spinor_boosts_are_not_unitary() {
        let rep = so13_irrep(1, 0).unwrap();
        assert_eq!(rep.dim(), 2);
        let boost = &rep.infinitesimal()[3];
        // Boost generators are Hermitian, not anti-Hermitian: exp is non-unitary.
        assert!(max_abs(&(boost + boost.adjoint())) > 0.4);
        let g = crate::linalg::matrix_exponential(&boost.map(|z| z * C64::from(1.0))).unwrap();
        assert!(max_abs(&(g.adjoint() * &g - CMat::identity(2, 2))) > 1e-3);
    }

    #[test]
    fn gt_pattern_counts_match_known_dimensions() {
        assert_eq!(enumerate_gt_patterns(&[1, 0]).unwrap().len(), 2);
        assert_eq!(enumerate_gt_patterns(&[1, 0, 0]).unwrap().len(), 3);
        assert_eq!(enumerate_gt_patterns(&[2, 1, 0]).unwrap().len(), 8);
        assert_eq!(enumerate_gt_patterns(&[1, 1, 0]).unwrap().len(), 3);
    }

    #[test]
    fn gt_enumeration_is_lexicographically_sorted() {
        let pats = enumerate_gt_patterns(&[2, 1, 0]).unwrap();
        let flats: Vec<Vec<i64>> = pats.iter().map(|p| p.flatten()).collect();
        let mut sorted = flats.clone();
        sorted.sort();
        assert_eq!(flats, sorted);
    }

    #[test]
    fn weyl_dimension_agrees_with_gt_enumeration() {
        assert_eq!(weyl_dimension(&[0, 0, 0]).unwrap(), 1);
        assert_eq!(weyl_dimension(&[1, 1, 0]).unwrap(), 3);
        assert_eq!(weyl_dimension(&[2, 1, 0]).unwrap(), 8);
        for l1 in 0..5u32 {
            for l2 in 0..=l1 {
                let w = [l1, l2, 0];
                let dim = weyl_dimension(&w).unwrap() as usize;
                assert_eq!(dim, enumerate_gt_patterns(&w).unwrap().len(), "weight {w:?}");
            }
        }
    }

    #[test]
    fn sun_algebra_of_rank_one_matches_su2_convention() {
        let alg = sun_algebra(2).unwrap();
        assert!(alg.compatible(&LieAlgebra::su2()));
    }

    #[test]
    fn sun_irreps_validate_and_have_weyl_dimension() {
        for w in [vec![1, 0, 0], vec![1, 1, 0], vec![2, 0, 0], vec![2, 1, 0]] {
            let rep = sun_irrep(&w).unwrap();
            assert_eq!(rep.dim() as u64, weyl_dimension(&w).unwrap());
            let report = rep.validate(COMMUTATOR_TOL);
            assert!(report.pass(), "{w:?}: residual {}", report.max_commutator_residual);
        }
    }

    #[test]
    fn sun_rank_one_characters_match_su2_irrep() {
        let gt = sun_irrep(&[1, 0]).unwrap();
        let ladder = su2_irrep(1).unwrap();
        for seed in 0..20 {
            let coords = ElementCoords::sample(3, 0, seed, 1.0);
            let chi_gt = realize_element(&gt, &coords).unwrap().trace();
            let chi_ladder = realize_element(&ladder, &coords).unwrap().trace();
            assert!((chi_gt - chi_ladder).norm() < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn sun_fundamental_cartan_spectrum_is_standard() {
        let rep = sun_irrep(&[1, 0, 0]).unwrap();
        assert_eq!(rep.dim(), 3);
        // H_1 = -i/2 (E_11 - E_22): eigenvalues are -i/2 times {1, -1, 0}
        // in some order over the GT basis.
        let h1 = &rep.infinitesimal()[6];
        let mut diag: Vec<f64> = (0..3).map(|k| (h1[(k, k)] * C64::new(0.0, 2.0)).re).collect();
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(diag, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn normalized_weight_of_ones_is_trivial() {
        let rep = sun_irrep(&[1, 1, 1]).unwrap();
        assert_eq!(rep.dim(), 1);
        assert!(rep.is_trivial(1e-12));
    }

    #[test]
    fn labels_round_trip_through_text() {
        let labels = vec![
            IrrepLabel::Su2 { two_j: 3 },
            IrrepLabel::So3 { l: 2 },
            IrrepLabel::O3 { l: 1, parity: Parity::Odd },
            IrrepLabel::O3 { l: 0, parity: Parity::Even },
            IrrepLabel::So13 { two_j1: 1, two_j2: 2 },
            IrrepLabel::sun(vec![2, 1, 0]).unwrap(),
        ];
        for label in labels {
            let text = label.to_string();
            let back: IrrepLabel = text.parse().unwrap();
            assert_eq!(label, back, "{text}");
        }
        assert!("SU2(x)".parse::<IrrepLabel>().is_err());
        assert!("O3(1,0)".parse::<IrrepLabel>().is_err());
        assert_eq!("SU(3)[3,2,1]".parse::<IrrepLabel>().unwrap(), IrrepLabel::sun(vec![2, 1, 0]).unwrap());
    }

    #[test]
    fn candidate_enumeration_covers_small_irreps() {
        let su2 = GroupKind::Su2.candidates(5);
        assert_eq!(su2.len(), 5);
        let o3 = GroupKind::O3.candidates(3);
        assert_eq!(o3.len(), 4); // l=0 and l=1 with both parities
        let su3 = GroupKind::Sun(3).candidates(8);
        assert!(su3.contains(&IrrepLabel::sun(vec![2, 1, 0]).unwrap()));
        assert!(su3.iter().all(|l| l.dim() <= 8));
        let so13 = GroupKind::So13.candidates(4);
        assert!(so13.contains(&IrrepLabel::So13 { two_j1: 1, two_j2: 1 }));
    }
}
