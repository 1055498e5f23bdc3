//! Lie algebras as structure constants and representations as
//! generator-matrix tuples.
//!
//! A representation is stored as the tuple (algebra, dimension, infinitesimal
//! generator matrices, discrete generator matrices). Group elements are
//! reached by exponentiating real linear combinations of the infinitesimal
//! generators and optionally composing with one discrete generator; the
//! discrete set excludes the identity component representative, so "no
//! discrete part" is the empty list.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, is_finite_mat, lstsq, matrix_exponential, max_abs, C64, CMat, CVec,
};

/// Tolerance for the Jacobi identity when constructing an algebra.
const JACOBI_TOL: f64 = 1e-10;
/// Tolerance for antisymmetry of structure constants.
const ANTISYMMETRY_TOL: f64 = 1e-10;
/// Default tolerance for commutator-closure validation of a representation.
pub const COMMUTATOR_TOL: f64 = 1e-9;
/// Discrete generators must be invertible: |det| above this bound.
const DISCRETE_DET_TOL: f64 = 1e-12;

/// A finite-dimensional Lie algebra encoded by its structure constants
/// `A_ijk`, defined through `[X_i, X_j] = sum_k A_ijk X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    name: String,
    num_generators: usize,
    /// Dense rank-3 array, flattened as `(i * n + j) * n + k`.
    constants: Vec<C64>,
}

impl LieAlgebra {
    pub fn new(name: impl Into<String>, num_generators: usize, constants: Vec<C64>) -> Result<Self> {
        let n = num_generators;
        if constants.len() != n * n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} structure constants, got {}",
                n * n * n,
                constants.len()
            )));
        }
        let alg = Self { name: name.into(), num_generators, constants };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let asym = alg.constant(i, j, k) + alg.constant(j, i, k);
                    if asym.norm() > ANTISYMMETRY_TOL {
                        return Err(Error::InvalidArgument(format!(
                            "structure constants not antisymmetric at ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        alg.check_jacobi()?;
        Ok(alg)
    }

    fn check_jacobi(&self) -> Result<()> {
        let n = self.num_generators;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut sum = C64::default();
                        for m in 0..n {
                            sum += self.constant(i, j, m) * self.constant(m, k, l)
                                + self.constant(j, k, m) * self.constant(m, i, l)
                                + self.constant(k, i, m) * self.constant(m, j, l);
                        }
                        if sum.norm() > JACOBI_TOL {
                            return Err(Error::InvalidArgument(format!(
                                "Jacobi identity violated at ({i},{j},{k},{l}): residual {}",
                                sum.norm()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_generators(&self) -> usize {
        self.num_generators
    }

    #[inline]
    pub fn constant(&self, i: usize, j: usize, k: usize) -> C64 {
        self.constants[(i * self.num_generators + j) * self.num_generators + k]
    }

    pub fn constants(&self) -> &[C64] {
        &self.constants
    }

    /// Structure constants recovered numerically from a concrete matrix
    /// basis: each commutator `[B_i, B_j]` is expanded in the basis by least
    /// squares. Entries below 1e-12 are snapped to zero and the result is
    /// antisymmetrized so repeated constructions are bit-identical.
    pub fn from_matrix_basis(name: impl Into<String>, basis: &[CMat]) -> Result<Self> {
        let n = basis.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty matrix basis".into()));
        }
        let d = basis[0].nrows();
        for b in basis {
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::InvalidArgument("basis matrices must share one square shape".into()));
            }
        }
        let mut flat = CMat::zeros(d * d, n);
        for (j, b) in basis.iter().enumerate() {
            for (idx, z) in b.iter().enumerate() {
                flat[(idx, j)] = *z;
            }
        }
        let mut constants = vec![C64::default(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                let comm = commutator(&basis[i], &basis[j]);
                let rhs = CVec::from_iterator(d * d, comm.iter().cloned());
                let coeffs = lstsq(&flat, &rhs)?;
                let expanded: CMat = basis
                    .iter()
                    .zip(coeffs.iter())
                    .fold(CMat::zeros(d, d), |acc, (b, c)| acc + b.map(|z| z * c));
                if max_abs(&(expanded - comm)) > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "basis is not closed under commutators at pair ({i},{j})"
                    )));
                }
                for k in 0..n {
                    constants[(i * n + j) * n + k] = snap(coeffs[k]);
                }
            }
        }
        // Exact antisymmetry.
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let avg = (constants[(i * n + j) * n + k] - constants[(j * n + i) * n + k])
                        / C64::from(2.0);
                    constants[(i * n + j) * n + k] = avg;
                    constants[(j * n + i) * n + k] = -avg;
                }
            }
        }
        Self::new(name, n, constants)
    }

    /// Same generator count and structure constants within 1e-10.
    pub fn compatible(&self, other: &Self) -> bool {
        self.num_generators == other.num_generators
            && self
                .constants
                .iter()
                .zip(&other.constants)
                .all(|(a, b)| (a - b).norm() < 1e-10)
    }

    /// Block-diagonal direct sum of two algebras (the algebra of a product
    /// group).
    pub fn direct_sum(a: &Self, b: &Self) -> Result<Self> {
        let n1 = a.num_generators;
        let n2 = b.num_generators;
        let n = n1 + n2;
        let mut constants = vec![C64::default(); n * n * n];
        for i in 0..n1 {
            for j in 0..n1 {
                for k in 0..n1 {
                    constants[(i * n + j) * n + k] = a.constant(i, j, k);
                }
            }
        }
        for i in 0..n2 {
            for j in 0..n2 {
                for k in 0..n2 {
                    constants[((n1 + i) * n + (n1 + j)) * n + (n1 + k)] = b.constant(i, j, k);
                }
            }
        }
        Self::new(format!("{}x{}", a.name, b.name), n, constants)
    }
}

fn snap(z: C64) -> C64 {
    let re = if z.re.abs() < 1e-12 { 0.0 } else { z.re };
    let im = if z.im.abs() < 1e-12 { 0.0 } else { z.im };
    C64::new(re, im)
}

/// Outcome of commutator-closure and discrete-invertibility validation.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub commutator_pass: bool,
    pub max_commutator_residual: f64,
    /// Generator pair with the largest closure residual.
    pub worst_pair: Option<(usize, usize)>,
    pub discrete_pass: bool,
    pub min_discrete_abs_det: Option<f64>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.commutator_pass && self.discrete_pass
    }
}

/// A finite-dimensional representation: infinitesimal generator matrices
/// `drho(X_i)` plus discrete generator matrices `rho(h)`.
#[derive(Debug, Clone)]
pub struct Rep {
    algebra: Arc<LieAlgebra>,
    dim: usize,
    infinitesimal: Vec<CMat>,
    discrete: Vec<CMat>,
}

impl Rep {
    pub fn new(algebra: Arc<LieAlgebra>, infinitesimal: Vec<CMat>, discrete: Vec<CMat>) -> Result<Self> {
        if infinitesimal.len() != algebra.num_generators() {
            return Err(Error::InvalidArgument(format!(
                "expected {} infinitesimal generators, got {}",
                algebra.num_generators(),
                infinitesimal.len()
            )));
        }
        let dim = infinitesimal
            .first()
            .map(|m| m.nrows())
            .or_else(|| discrete.first().map(|m| m.nrows()))
            .ok_or_else(|| Error::InvalidArgument("cannot infer representation dimension".into()))?;
        if dim == 0 {
            return Err(Error::InvalidArgument("representation dimension must be positive".into()));
        }
        for m in infinitesimal.iter().chain(discrete.iter()) {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidArgument(format!(
                    "generator matrix is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !is_finite_mat(m) {
                return Err(Error::InvalidArgument("generator matrix has non-finite entries".into()));
            }
        }
        Ok(Self { algebra, dim, infinitesimal, discrete })
    }

    /// One-dimensional trivial representation with the requested number of
    /// identity discrete generators.
    pub fn trivial(algebra: Arc<LieAlgebra>, num_discrete: usize) -> Self {
        let gens = vec![CMat::zeros(1, 1); algebra.num_generators()];
        let discrete = vec![CMat::identity(1, 1); num_discrete];
        Self { algebra, dim: 1, infinitesimal: gens, discrete }
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn infinitesimal(&self) -> &[CMat] {
        &self.infinitesimal
    }

    pub fn discrete(&self) -> &[CMat] {
        &self.discrete
    }

    /// Commutator-closure check `[drho(X_i), drho(X_j)] = sum_k A_ijk drho(X_k)`
    /// plus invertibility of every discrete generator.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let n = self.algebra.num_generators();
        let mut max_resid = 0.0;
        let mut worst = None;
        for i in 0..n {
            for j in 0..n {
                let comm = commutator(&self.infinitesimal[i], &self.infinitesimal[j]);
                let mut expected = CMat::zeros(self.dim, self.dim);
                for k in 0..n {
                    let a = self.algebra.constant(i, j, k);
                    if a.norm() > 0.0 {
                        expected += self.infinitesimal[k].map(|z| z * a);
                    }
                }
                let resid = max_abs(&(comm - expected));
                if resid > max_resid {
                    max_resid = resid;
                    worst = Some((i, j));
                }
            }
        }
        let mut min_det = None;
        let mut discrete_pass = true;
        for h in &self.discrete {
            let det = h.determinant().norm();
            min_det = Some(min_det.map_or(det, |d: f64| d.min(det)));
            if det <= DISCRETE_DET_TOL {
                discrete_pass = false;
            }
        }
        ValidationReport {
            commutator_pass: max_resid < tol,
            max_commutator_residual: max_resid,
            worst_pair: worst,
            discrete_pass,
            min_discrete_abs_det: min_det,
        }
    }

    /// True when all infinitesimal generators vanish and all discrete
    /// generators act as the identity.
    pub fn is_trivial(&self, tol: f64) -> bool {
        self.infinitesimal.iter().all(|m| max_abs(m) < tol)
            && self
                .discrete
                .iter()
                .all(|h| max_abs(&(h - CMat::identity(self.dim, self.dim))) < tol)
    }

    /// Tensor product: Kronecker sums of infinitesimal generators, Kronecker
    /// products of corresponding discrete generators.
    pub fn tensor_product(&self, other: &Rep) -> Result<Rep> {
        if !self.algebra.compatible(&other.algebra) {
            return Err(Error::AlgebraMismatch(format!(
                "{} vs {}",
                self.algebra.name(),
                other.algebra.name()
            )));
        }
        if self.discrete.len() != other.discrete.len() {
            return Err(Error::InvalidArgument(format!(
                "discrete generator count mismatch: {} vs {}",
                self.discrete.len(),
                other.discrete.len()
            )));
        }
        let i1 = CMat::identity(self.dim, self.dim);
        let i2 = CMat::identity(other.dim, other.dim);
        let gens = self
            .infinitesimal
            .iter()
            .zip(&other.infinitesimal)
            .map(|(a, b)| a.kronecker(&i2) + i1.kronecker(b))
            .collect();
        let discrete = self
            .discrete
            .iter()
            .zip(&other.discrete)
            .map(|(a, b)| a.kronecker(b))
            .collect();
        Rep::new(self.algebra.clone(), gens, discrete)
    }

    /// Direct sum: block-diagonal generators and discrete matrices.
    pub fn direct_sum(&self, other: &Rep) -> Result<Rep> {
        if !self.algebra.compatible(&other.algebra) {
            return Err(Error::AlgebraMismatch(format!(
                "{} vs {}",
                self.algebra.name(),
                other.algebra.name()
            )));
        }
        if self.discrete.len() != other.discrete.len() {
            return Err(Error::InvalidArgument(format!(
                "discrete generator count mismatch: {} vs {}",
                self.discrete.len(),
                other.discrete.len()
            )));
        }
        let block = |a: &CMat, b: &CMat| {
            let mut m = CMat::zeros(self.dim + other.dim, self.dim + other.dim);
            m.view_mut((0, 0), (self.dim, self.dim)).copy_from(a);
            m.view_mut((self.dim, self.dim), (other.dim, other.dim)).copy_from(b);
            m
        };
        let gens = self
            .infinitesimal
            .iter()
            .zip(&other.infinitesimal)
            .map(|(a, b)| block(a, b))
            .collect();
        let discrete = self
            .discrete
            .iter()
            .zip(&other.discrete)
            .map(|(a, b)| block(a, b))
            .collect();
        Rep::new(self.algebra.clone(), gens, discrete)
    }

    /// Conjugated copy `q . drho(X) . q^-1` (basis change).
    pub fn conjugated(&self, q: &CMat) -> Result<Rep> {
        let q_inv = q
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("conjugation matrix is singular".into()))?;
        let gens = self.infinitesimal.iter().map(|m| q * m * &q_inv).collect();
        let discrete = self.discrete.iter().map(|m| q * m * &q_inv).collect();
        Rep::new(self.algebra.clone(), gens, discrete)
    }

    /// Stable content hash over the algebra constants and generator entries;
    /// used as a coupling-cache key for label-less representations.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update((self.algebra.num_generators() as u64).to_le_bytes());
        for z in self.algebra.constants() {
            hasher.update(z.re.to_le_bytes());
            hasher.update(z.im.to_le_bytes());
        }
        hasher.update((self.dim as u64).to_le_bytes());
        hasher.update((self.discrete.len() as u64).to_le_bytes());
        for m in self.infinitesimal.iter().chain(self.discrete.iter()) {
            for z in m.iter() {
                hasher.update(z.re.to_le_bytes());
                hasher.update(z.im.to_le_bytes());
            }
        }
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Representation of the product group `G1 x G2`: the algebra is the direct
/// sum of the factor algebras, infinitesimal generators act on one factor at
/// a time, and the discrete set enumerates component-representative pairs.
pub fn product_group_rep(rep1: &Rep, rep2: &Rep) -> Result<Rep> {
    let algebra = Arc::new(LieAlgebra::direct_sum(rep1.algebra(), rep2.algebra())?);
    let i1 = CMat::identity(rep1.dim(), rep1.dim());
    let i2 = CMat::identity(rep2.dim(), rep2.dim());
    let mut gens = Vec::with_capacity(algebra.num_generators());
    for x in rep1.infinitesimal() {
        gens.push(x.kronecker(&i2));
    }
    for y in rep2.infinitesimal() {
        gens.push(i1.kronecker(y));
    }
    let mut discrete = Vec::new();
    let h1_options: Vec<Option<&CMat>> =
        std::iter::once(None).chain(rep1.discrete().iter().map(Some)).collect();
    let h2_options: Vec<Option<&CMat>> =
        std::iter::once(None).chain(rep2.discrete().iter().map(Some)).collect();
    for h1 in &h1_options {
        for h2 in &h2_options {
            if h1.is_none() && h2.is_none() {
                continue;
            }
            let a = h1.unwrap_or(&i1);
            let b = h2.unwrap_or(&i2);
            discrete.push(a.kronecker(b));
        }
    }
    Rep::new(algebra, gens, discrete)
}

/// Coefficients identifying one group element: real coordinates in the
/// infinitesimal generator basis plus an optional discrete generator index.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementCoords {
    pub coeffs: Vec<f64>,
    pub discrete: Option<usize>,
}

impl ElementCoords {
    /// Seeded uniform draw: coefficients i.i.d. in `[-scale, scale]`, and a
    /// discrete generator (or none) picked uniformly.
    pub fn sample(num_generators: usize, num_discrete: usize, seed: u64, scale: f64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let coeffs = (0..num_generators)
            .map(|_| if scale > 0.0 { rng.gen_range(-scale..=scale) } else { 0.0 })
            .collect();
        let discrete = match rng.gen_range(0..=num_discrete) {
            0 => None,
            i => Some(i - 1),
        };
        Self { coeffs, discrete }
    }
}

/// A concrete group element in a given representation, together with the
/// coordinates it was built from.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub matrix: CMat,
    pub coords: ElementCoords,
}

/// Realizes `exp(sum_i a_i drho(X_i)) . rho(h)` in the given representation.
pub fn realize_element(rep: &Rep, coords: &ElementCoords) -> Result<CMat> {
    if coords.coeffs.len() != rep.algebra().num_generators() {
        return Err(Error::InvalidArgument(format!(
            "expected {} coefficients, got {}",
            rep.algebra().num_generators(),
            coords.coeffs.len()
        )));
    }
    let mut x = CMat::zeros(rep.dim(), rep.dim());
    for (a, gen) in coords.coeffs.iter().zip(rep.infinitesimal()) {
        x += gen.map(|z| z * C64::from(*a));
    }
    let mut g = matrix_exponential(&x)?;
    if let Some(h) = coords.discrete {
        let hm = rep.discrete().get(h).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "discrete index {h} out of range ({} available)",
                rep.discrete().len()
            ))
        })?;
        g = &g * hm;
    }
    Ok(g)
}

/// Draws a deterministic pseudo-random group element of `rep`.
pub fn sample_group_element(rep: &Rep, seed: u64, scale: f64) -> Result<GroupElement> {
    let coords = ElementCoords::sample(rep.algebra().num_generators(), rep.discrete().len(), seed, scale);
    let matrix = realize_element(rep, &coords)?;
    Ok(GroupElement { matrix, coords })
}

// ---------------------------------------------------------------------------
// JSON serialization (exact [re, im] pairs, round-trip safe for finite f64).
// ---------------------------------------------------------------------------

type CplxJson = [f64; 2];
type MatJson = Vec<Vec<CplxJson>>;

#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    name: String,
    num_generators: usize,
    structure_constants: Vec<Vec<Vec<CplxJson>>>,
}

#[derive(Serialize, Deserialize)]
struct RepJson {
    algebra: AlgebraJson,
    dim: usize,
    infinitesimal: Vec<MatJson>,
    discrete: Vec<MatJson>,
}

fn mat_to_json(m: &CMat) -> MatJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn mat_from_json(rows: &MatJson) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("matrix rows must be non-empty and rectangular".into()));
    }
    Ok(CMat::from_fn(nrows, ncols, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

impl Rep {
    pub fn to_json_string(&self) -> String {
        let n = self.algebra.num_generators();
        let sc = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n)
                            .map(|k| {
                                let z = self.algebra.constant(i, j, k);
                                [z.re, z.im]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let doc = RepJson {
            algebra: AlgebraJson {
                name: self.algebra.name().to_string(),
                num_generators: n,
                structure_constants: sc,
            },
            dim: self.dim,
            infinitesimal: self.infinitesimal.iter().map(mat_to_json).collect(),
            discrete: self.discrete.iter().map(mat_to_json).collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: RepJson = serde_json::from_str(text)?;
        let n = doc.algebra.num_generators;
        if doc.algebra.structure_constants.len() != n
            || doc
                .algebra
                .structure_constants
                .iter()
                .any(|p| p.len() != n || p.iter().any(|q| q.len() != n))
        {
            return Err(Error::Parse("structure constants must form an n x n x n array".into()));
        }
        let mut constants = Vec::with_capacity(n * n * n);
        for plane in &doc.algebra.structure_constants {
            for row in plane {
                for z in row {
                    constants.push(C64::new(z[0], z[1]));
                }
            }
        }
        let algebra = Arc::new(LieAlgebra::new(doc.algebra.name, n, constants)?);
        let infinitesimal = doc
            .infinitesimal
            .iter()
            .map(mat_from_json)
            .collect::<Result<Vec<_>>>()?;
        let discrete = doc.discrete.iter().map(mat_from_json).collect::<Result<Vec<_>>>()?;
        let rep = Rep::new(algebra, infinitesimal, discrete)?;
        if rep.dim != doc.dim {
            return Err(Error::Parse(format!(
                "declared dim {} does not match matrices of dim {}",
                doc.dim, rep.dim
            )));
        }
        Ok(rep)
    }
}

// ---------------------------------------------------------------------------
// Canonical algebras.
// ---------------------------------------------------------------------------

fn epsilon(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

impl LieAlgebra {
    /// su(2) with real structure constants `A_ijk = eps_ijk`; generators of
    /// its representations are stored anti-Hermitian (`X_i = -i J_i` for the
    /// Hermitian angular-momentum matrices `J_i`).
    pub fn su2() -> Arc<Self> {
        Arc::new(Self::epsilon_algebra("su2"))
    }

    /// Same structure constants as [`LieAlgebra::su2`]; kept as a separate
    /// name for rotation-group representations.
    pub fn so3() -> Arc<Self> {
        Arc::new(Self::epsilon_algebra("so3"))
    }

    fn epsilon_algebra(name: &str) -> Self {
        let n = 3;
        let mut constants = vec![C64::default(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    constants[(i * n + j) * n + k] = C64::from(epsilon(i, j, k));
                }
            }
        }
        Self::new(name, n, constants).expect("epsilon constants satisfy Jacobi")
    }

    /// so(1,3) in the basis (J_1, J_2, J_3, K_1, K_2, K_3) with
    /// `[J,J] = eps J`, `[J,K] = eps K`, `[K,K] = -eps J`.
    pub fn so13() -> Arc<Self> {
        let n = 6;
        let mut constants = vec![C64::default(); n * n * n];
        let mut set = |i: usize, j: usize, k: usize, v: f64| {
            constants[(i * n + j) * n + k] = C64::from(v);
        };
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let e = epsilon(a, b, c);
                    if e != 0.0 {
                        set(a, b, c, e); // [J_a, J_b] = eps J_c
                        set(a, 3 + b, 3 + c, e); // [J_a, K_b] = eps K_c
                        set(3 + b, a, 3 + c, -e); // antisymmetric partner
                        set(3 + a, 3 + b, c, -e); // [K_a, K_b] = -eps J_c
                    }
                }
            }
        }
        Arc::new(Self::new("so13", n, constants).expect("so(1,3) constants satisfy Jacobi"))
    }
}
