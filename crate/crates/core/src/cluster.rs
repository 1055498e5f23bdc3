//! The equivariant cluster expansion over point clouds.
//!
//! Pipeline: one-particle embeddings phi_{ck} (channel c, representation
//! index k) are pooled over the cloud into A_{ck}, mixed across channels
//! into tilde-A, multiplied over ordered index tuples into the product
//! basis, and contracted with symmetric coupling tensors into equivariant
//! feature blocks indexed by (channel, output irrep, alpha). A multi-layer
//! variant re-expands per-particle states through pairwise couplings with
//! the base embedding before each pooled expansion.
//!
//! Pooling always runs in a canonical particle order (sorted by raw
//! attributes), so permuting the stored particle order leaves every feature
//! bit-identical.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{realize_element, ElementCoords, Rep};
use crate::coupling::{sym_dim, CouplingCache, CouplingTensor, SymTuples};
use crate::error::{Error, Result};
use crate::irreps::{
    o3_vector_rep, so13_vector_rep, so3_vector_rep, su2_irrep, sun_irrep,
    GroupKind, IrrepLabel, Parity,
};
use crate::linalg::{C64, CMat, CVec};

/// Tolerance below which a representation counts as trivial (readout slots).
const TRIVIAL_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Point clouds.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub raw: Vec<f64>,
}

/// Multiset of particles; stored order is irrelevant to all derived
/// features.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub particles: Vec<Particle>,
}

#[derive(Serialize, Deserialize)]
struct CloudJson {
    particles: Vec<ParticleJson>,
}

#[derive(Serialize, Deserialize)]
struct ParticleJson {
    raw: Vec<f64>,
}

impl PointCloud {
    pub fn new(raws: Vec<Vec<f64>>) -> Self {
        Self { particles: raws.into_iter().map(|raw| Particle { raw }).collect() }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Indices sorted by raw attributes; the canonical summation order.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.particles.len()).collect();
        idx.sort_by(|&a, &b| {
            let ra = &self.particles[a].raw;
            let rb = &self.particles[b].raw;
            ra.len().cmp(&rb.len()).then_with(|| {
                for (x, y) in ra.iter().zip(rb.iter()) {
                    let ord = x.total_cmp(y);
                    if ord != std::cmp::Ordering::Equal {
                        return ord;
                    }
                }
                std::cmp::Ordering::Equal
            })
        });
        idx
    }

    pub fn to_json_string(&self) -> String {
        let doc = CloudJson {
            particles: self.particles.iter().map(|p| ParticleJson { raw: p.raw.clone() }).collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: CloudJson = serde_json::from_str(text)?;
        if doc.particles.iter().any(|p| p.raw.iter().any(|x| !x.is_finite())) {
            return Err(Error::Parse("particle attributes must be finite".into()));
        }
        Ok(Self::new(doc.particles.into_iter().map(|p| p.raw).collect()))
    }

    /// Whitespace-separated text: one particle per line.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut raws = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let raw: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number in cloud file: {t:?}")))
                })
                .collect::<Result<_>>()?;
            if raw.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse("particle attributes must be finite".into()));
            }
            raws.push(raw);
        }
        Ok(Self::new(raws))
    }

    pub fn parse_auto(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json_str(text)
        } else {
            Self::from_text(text)
        }
    }
}

// ---------------------------------------------------------------------------
// Embeddings.
// ---------------------------------------------------------------------------

/// Radial basis for the radial-harmonic embedding.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialBasis {
    /// Plain monomials r^n; exact polynomial span, no cutoff.
    Monomial,
    /// Gaussian bumps with evenly spaced centers on [0, r_cut], times a
    /// smooth polynomial cutoff vanishing at r_cut.
    GaussianBumps { r_cut: f64 },
}

impl RadialBasis {
    fn eval(&self, n: usize, count: usize, r: f64) -> f64 {
        match self {
            RadialBasis::Monomial => r.powi(n as i32),
            RadialBasis::GaussianBumps { r_cut } => {
                if r >= *r_cut {
                    return 0.0;
                }
                let spacing = r_cut / count.max(1) as f64;
                let center = spacing * (n as f64 + 0.5);
                let gauss = (-(r - center).powi(2) / (2.0 * spacing * spacing)).exp();
                let x = r / r_cut;
                let cutoff = (1.0 - x * x).powi(2);
                gauss * cutoff
            }
        }
    }
}

/// One representation slot of the embedding, shared by every channel.
#[derive(Debug, Clone)]
pub struct EmbedSlot {
    pub label: IrrepLabel,
    pub rep: Rep,
    /// Tensor power of the coordinate representation this block comes from
    /// (radial-harmonic slots use the angular momentum l here).
    pub power: usize,
    /// Multiplicity copy within its power block.
    pub alpha: usize,
    /// Projection from Sym^power(coordinates) onto this block; `None` for
    /// constant and coordinate-copy slots.
    coupling: Option<Arc<CouplingTensor>>,
}

#[derive(Debug, Clone)]
enum EmbedKind {
    RepCoordinates,
    RadialHarmonic { radial: RadialBasis },
}

/// A one-particle embedding: a coordinate representation describing how raw
/// attributes transform, plus a list of equivariant slots shared across
/// `channels` sketched channels.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub group: GroupKind,
    pub channels: usize,
    pub coord_rep: Rep,
    pub complex_coords: bool,
    pub slots: Vec<EmbedSlot>,
    kind: EmbedKind,
}

/// Coordinate representation and its label for each built-in group.
pub fn coordinate_rep(group: GroupKind) -> Result<(Rep, IrrepLabel, bool)> {
    match group {
        GroupKind::So3 => Ok((so3_vector_rep()?, IrrepLabel::So3 { l: 1 }, false)),
        GroupKind::O3 => Ok((o3_vector_rep()?, IrrepLabel::O3 { l: 1, parity: Parity::Odd }, false)),
        GroupKind::So13 => Ok((so13_vector_rep()?, IrrepLabel::So13 { two_j1: 1, two_j2: 1 }, false)),
        GroupKind::Su2 => Ok((su2_irrep(1)?, IrrepLabel::Su2 { two_j: 1 }, true)),
        GroupKind::Sun(n) => {
            let mut w = vec![0u32; n];
            w[0] = 1;
            Ok((sun_irrep(&w)?, IrrepLabel::Sun { weight: w }, true))
        }
    }
}

/// Decomposes Sym^power(coordinate rep) into irrep blocks, returning the
/// projection coupling for every (label, multiplicity copy).
fn symmetric_power_blocks(
    coord: &Rep,
    group: GroupKind,
    power: usize,
    cache: &dyn CouplingProvider,
) -> Result<Vec<(IrrepLabel, Arc<CouplingTensor>)>> {
    let total = sym_dim(coord.dim(), power)
        .ok_or_else(|| Error::ResourceLimit("symmetric power dimension overflow".into()))?;
    let mut blocks = Vec::new();
    let mut covered = 0usize;
    for label in group.candidates(total) {
        let out = label.build()?;
        let tensor = cache.symmetric(coord, power, &out)?;
        if tensor.multiplicity > 0 {
            covered += tensor.multiplicity * out.dim();
            blocks.push((label, tensor));
        }
        if covered == total {
            break;
        }
    }
    if covered != total {
        return Err(Error::DecompositionIncomplete { dim: total, residual: total - covered });
    }
    Ok(blocks)
}

impl Embedding {
    /// Raw data already lives in the coordinate representation; higher slots
    /// are tensor-power components projected onto irreps. Power 0 is a
    /// constant (trivial) slot, power 1 copies the coordinates.
    pub fn rep_coordinates(
        group: GroupKind,
        powers: &[usize],
        channels: usize,
        cache: &dyn CouplingProvider,
    ) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Config("embedding needs at least one channel".into()));
        }
        if powers.is_empty() {
            return Err(Error::Config("rep-coordinates embedding needs at least one power".into()));
        }
        let (coord_rep, coord_label, complex_coords) = coordinate_rep(group)?;
        let mut slots = Vec::new();
        let mut sorted_powers = powers.to_vec();
        sorted_powers.sort_unstable();
        sorted_powers.dedup();
        for &p in &sorted_powers {
            match p {
                0 => {
                    let trivial_label = trivial_label_for(group);
                    slots.push(EmbedSlot {
                        rep: trivial_label.build()?,
                        label: trivial_label,
                        power: 0,
                        alpha: 0,
                        coupling: None,
                    });
                }
                1 => {
                    slots.push(EmbedSlot {
                        label: coord_label.clone(),
                        rep: coord_rep.clone(),
                        power: 1,
                        alpha: 0,
                        coupling: None,
                    });
                }
                p => {
                    for (label, tensor) in symmetric_power_blocks(&coord_rep, group, p, cache)? {
                        for alpha in 0..tensor.multiplicity {
                            slots.push(EmbedSlot {
                                label: label.clone(),
                                rep: label.build()?,
                                power: p,
                                alpha,
                                coupling: Some(tensor.clone()),
                            });
                        }
                    }
                }
            }
        }
        Ok(Self {
            group,
            channels,
            coord_rep,
            complex_coords,
            slots,
            kind: EmbedKind::RepCoordinates,
        })
    }

    /// Radial basis times solid-harmonic blocks for rotation groups; channel
    /// c carries the radial index. Slot l has the natural parity (-1)^l.
    pub fn radial_harmonic(
        group: GroupKind,
        l_list: &[u32],
        channels: usize,
        radial: RadialBasis,
        cache: &dyn CouplingProvider,
    ) -> Result<Self> {
        if !matches!(group, GroupKind::O3 | GroupKind::So3) {
            return Err(Error::Config("radial-harmonic embedding requires O3 or SO3".into()));
        }
        if channels == 0 {
            return Err(Error::Config("embedding needs at least one channel".into()));
        }
        let (coord_rep, _, _) = coordinate_rep(group)?;
        let mut slots = Vec::new();
        let mut ls = l_list.to_vec();
        ls.sort_unstable();
        ls.dedup();
        for &l in &ls {
            let label = match group {
                GroupKind::O3 => IrrepLabel::O3 {
                    l,
                    parity: if l % 2 == 0 { Parity::Even } else { Parity::Odd },
                },
                _ => IrrepLabel::So3 { l },
            };
            let rep = label.build()?;
            let coupling = if l == 0 {
                None
            } else {
                let tensor = cache.symmetric(&coord_rep, l as usize, &rep)?;
                if tensor.multiplicity == 0 {
                    return Err(Error::Config(format!(
                        "no angular block of {label} in Sym^{l} of the coordinates"
                    )));
                }
                Some(tensor)
            };
            slots.push(EmbedSlot { label, rep, power: l as usize, alpha: 0, coupling });
        }
        Ok(Self {
            group,
            channels,
            coord_rep,
            complex_coords: false,
            slots,
            kind: EmbedKind::RadialHarmonic { radial },
        })
    }

    pub fn coord_dim(&self) -> usize {
        if self.complex_coords {
            2 * self.coord_rep.dim()
        } else {
            self.coord_rep.dim()
        }
    }

    /// Direct sum of the slot representations: the space `V` the pooled
    /// features live in.
    pub fn phi_rep(&self) -> Result<Rep> {
        direct_sum_all(self.slots.iter().map(|s| &s.rep))
    }

    fn coords_as_complex(&self, raw: &[f64]) -> Result<CVec> {
        let d = self.coord_rep.dim();
        if self.complex_coords {
            if raw.len() != 2 * d {
                return Err(Error::InvalidArgument(format!(
                    "expected {} interleaved re/im attributes, got {}",
                    2 * d,
                    raw.len()
                )));
            }
            Ok(CVec::from_iterator(d, (0..d).map(|k| C64::new(raw[2 * k], raw[2 * k + 1]))))
        } else {
            if raw.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "expected {} attributes, got {}",
                    d,
                    raw.len()
                )));
            }
            Ok(CVec::from_iterator(d, raw.iter().map(|&x| C64::from(x))))
        }
    }

    /// Per-slot values shared by all channels (before radial weighting).
    fn slot_values(&self, raw: &[f64]) -> Result<Vec<CVec>> {
        let v = self.coords_as_complex(raw)?;
        let mut out = Vec::with_capacity(self.slots.len());
        for slot in &self.slots {
            let value = match (&slot.coupling, slot.power) {
                (None, 0) => CVec::from_element(1, C64::from(1.0)),
                (None, _) => v.clone(),
                (Some(tensor), p) => {
                    let tuples = SymTuples::new(self.coord_rep.dim(), p);
                    let products: Vec<C64> = tuples
                        .tuples()
                        .iter()
                        .map(|t| t.iter().map(|&k| v[k as usize]).product())
                        .collect();
                    tensor.contract_flat(&products)[slot.alpha].clone()
                }
            };
            out.push(value);
        }
        Ok(out)
    }

    /// Embedded values per channel and slot for one particle.
    pub fn embed_particle(&self, raw: &[f64]) -> Result<Vec<Vec<CVec>>> {
        let base = self.slot_values(raw)?;
        match &self.kind {
            EmbedKind::RepCoordinates => Ok(vec![base; self.channels]),
            EmbedKind::RadialHarmonic { radial } => {
                let r = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                let mut per_channel = Vec::with_capacity(self.channels);
                for c in 0..self.channels {
                    let weight = C64::from(radial.eval(c, self.channels, r));
                    per_channel.push(base.iter().map(|v| v.map(|z| z * weight)).collect());
                }
                Ok(per_channel)
            }
        }
    }

    pub fn embed_cloud(&self, cloud: &PointCloud) -> Result<EmbeddedCloud> {
        let order = cloud.canonical_order();
        let mut per_particle = Vec::with_capacity(cloud.len());
        for p in &cloud.particles {
            per_particle.push(self.embed_particle(&p.raw)?);
        }
        Ok(EmbeddedCloud { per_particle, order, slots: self.slots.len(), channels: self.channels })
    }

    /// Applies a group element (given by coordinates in the algebra) to
    /// every particle of a cloud.
    pub fn transform_cloud(&self, cloud: &PointCloud, coords: &ElementCoords) -> Result<PointCloud> {
        let g = realize_element(&self.coord_rep, coords)?;
        let mut out = Vec::with_capacity(cloud.len());
        for p in &cloud.particles {
            let v = self.coords_as_complex(&p.raw)?;
            let w = &g * v;
            let raw = if self.complex_coords {
                let mut raw = Vec::with_capacity(2 * w.len());
                for z in w.iter() {
                    raw.push(z.re);
                    raw.push(z.im);
                }
                raw
            } else {
                let imag = w.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                if imag > 1e-9 {
                    return Err(Error::InvalidArgument(
                        "transformed real coordinates acquired imaginary parts".into(),
                    ));
                }
                w.iter().map(|z| z.re).collect()
            };
            out.push(raw);
        }
        Ok(PointCloud::new(out))
    }
}

fn trivial_label_for(group: GroupKind) -> IrrepLabel {
    match group {
        GroupKind::Su2 => IrrepLabel::Su2 { two_j: 0 },
        GroupKind::So3 => IrrepLabel::So3 { l: 0 },
        GroupKind::O3 => IrrepLabel::O3 { l: 0, parity: Parity::Even },
        GroupKind::So13 => IrrepLabel::So13 { two_j1: 0, two_j2: 0 },
        GroupKind::Sun(n) => IrrepLabel::Sun { weight: vec![0; n] },
    }
}

fn direct_sum_all<'a>(mut reps: impl Iterator<Item = &'a Rep>) -> Result<Rep> {
    let first = reps
        .next()
        .ok_or_else(|| Error::Config("embedding has no slots".into()))?
        .clone();
    reps.try_fold(first, |acc, r| acc.direct_sum(r))
}

/// Per-particle embedded values: `[particle][channel][slot] -> value`.
#[derive(Debug, Clone)]
pub struct EmbeddedCloud {
    pub per_particle: Vec<Vec<Vec<CVec>>>,
    /// Canonical particle order used for all pooling sums.
    pub order: Vec<usize>,
    pub slots: usize,
    pub channels: usize,
}

// ---------------------------------------------------------------------------
// Pooled, mixed, product, and symmetrized bases.
// ---------------------------------------------------------------------------

/// Pooled atomic basis `A_{ck} = sum_x phi_{ck}(x)`: `a[channel][slot]`.
#[derive(Debug, Clone)]
pub struct PooledBasis {
    pub a: Vec<Vec<CVec>>,
}

/// Sums embeddings over the cloud in canonical order. Zero-valued shapes
/// must be supplied for empty clouds, so this takes the embedding to know
/// slot dimensions.
pub fn pool_atomic_basis(embedding: &Embedding, embedded: &EmbeddedCloud) -> PooledBasis {
    let mut a: Vec<Vec<CVec>> = (0..embedding.channels)
        .map(|_| embedding.slots.iter().map(|s| CVec::zeros(s.rep.dim())).collect())
        .collect();
    for &idx in &embedded.order {
        for (c, row) in a.iter_mut().enumerate() {
            for (s, acc) in row.iter_mut().enumerate() {
                *acc += &embedded.per_particle[idx][c][s];
            }
        }
    }
    PooledBasis { a }
}

/// Learnable channel mixing: `tilde-A_{ck} = sum_{c'} w_{cc'} A_{c'k}`.
/// The representation index is untouched.
pub fn mix_channels(pooled: &PooledBasis, w: &CMat) -> Result<PooledBasis> {
    let channels = pooled.a.len();
    if w.nrows() != channels || w.ncols() != channels {
        return Err(Error::InvalidArgument(format!(
            "channel-mix matrix is {}x{}, expected {channels}x{channels}",
            w.nrows(),
            w.ncols()
        )));
    }
    let slots = pooled.a.first().map_or(0, |row| row.len());
    let mut out: Vec<Vec<CVec>> = Vec::with_capacity(channels);
    for c in 0..channels {
        let mut row = Vec::with_capacity(slots);
        for s in 0..slots {
            let mut acc = CVec::zeros(pooled.a[0][s].len());
            for cp in 0..channels {
                acc += pooled.a[cp][s].map(|z| z * w[(c, cp)]);
            }
            row.push(acc);
        }
        out.push(row);
    }
    Ok(PooledBasis { a: out })
}

fn flatten_row(row: &[CVec]) -> Vec<C64> {
    row.iter().flat_map(|v| v.iter().cloned()).collect()
}

/// Product basis over ordered tuples `k_1 <= ... <= k_nu` of the flattened
/// representation index: `values[channel][tuple_rank]`.
#[derive(Debug, Clone)]
pub struct ProductBasis {
    pub nu: usize,
    pub values: Vec<Vec<C64>>,
    pub tuples: SymTuples,
}

pub fn product_basis(mixed: &PooledBasis, nu: usize) -> Result<ProductBasis> {
    if nu == 0 {
        return Err(Error::InvalidArgument("correlation order must be >= 1".into()));
    }
    let flat: Vec<Vec<C64>> = mixed.a.iter().map(|row| flatten_row(row)).collect();
    let dim = flat.first().map_or(0, |f| f.len());
    let tuples = SymTuples::new(dim, nu);
    let values = flat
        .iter()
        .map(|f| {
            tuples
                .tuples()
                .iter()
                .map(|t| t.iter().map(|&k| f[k as usize]).product())
                .collect()
        })
        .collect();
    Ok(ProductBasis { nu, values, tuples })
}

/// One equivariant feature block `B^K_{c,alpha}`.
#[derive(Debug, Clone)]
pub struct FeatureBlock {
    pub channel: usize,
    pub nu: usize,
    pub output: IrrepLabel,
    pub alpha: usize,
    pub values: CVec,
}

/// Feature blocks in deterministic order (nu, output label, channel, alpha).
#[derive(Debug, Clone, Default)]
pub struct FeatureField {
    pub blocks: Vec<FeatureBlock>,
}

impl FeatureField {
    pub fn to_json_string(&self) -> String {
        #[derive(Serialize)]
        struct BlockJson {
            channel: usize,
            nu: usize,
            output: String,
            alpha: usize,
            values: Vec<[f64; 2]>,
        }
        #[derive(Serialize)]
        struct FieldJson {
            blocks: Vec<BlockJson>,
        }
        let doc = FieldJson {
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockJson {
                    channel: b.channel,
                    nu: b.nu,
                    output: b.output.to_string(),
                    alpha: b.alpha,
                    values: b.values.iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    /// Real and imaginary parts of all trivial-output blocks, in block
    /// order; the inputs to invariant readouts and linear fits.
    pub fn invariant_components(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for b in &self.blocks {
            if b.output.is_trivial() {
                for z in b.values.iter() {
                    out.push(z.re);
                    out.push(z.im);
                }
            }
        }
        out
    }
}

/// Contracts the product basis with coupling tensors into equivariant
/// blocks. `couplings` lists (output label, tensor) pairs for this nu.
pub fn symmetrize_basis(
    products: &ProductBasis,
    couplings: &[(IrrepLabel, Arc<CouplingTensor>)],
) -> FeatureField {
    let mut blocks = Vec::new();
    for (label, tensor) in couplings {
        for (c, vals) in products.values.iter().enumerate() {
            let outs = tensor.contract_flat(vals);
            for (alpha, v) in outs.into_iter().enumerate() {
                blocks.push(FeatureBlock {
                    channel: c,
                    nu: products.nu,
                    output: label.clone(),
                    alpha,
                    values: v,
                });
            }
        }
    }
    FeatureField { blocks }
}

// ---------------------------------------------------------------------------
// Coupling provider.
// ---------------------------------------------------------------------------

/// Source of coupling tensors; the in-memory [`CouplingCache`] satisfies it,
/// and callers can layer persistent caches on top.
pub trait CouplingProvider: Sync {
    fn clebsch_gordan(&self, rep1: &Rep, rep2: &Rep, out: &Rep) -> Result<Arc<CouplingTensor>>;
    fn symmetric(&self, rep: &Rep, order: usize, out: &Rep) -> Result<Arc<CouplingTensor>>;
}

impl CouplingProvider for CouplingCache {
    fn clebsch_gordan(&self, rep1: &Rep, rep2: &Rep, out: &Rep) -> Result<Arc<CouplingTensor>> {
        CouplingCache::clebsch_gordan(self, rep1, rep2, out)
    }

    fn symmetric(&self, rep: &Rep, order: usize, out: &Rep) -> Result<Arc<CouplingTensor>> {
        CouplingCache::symmetric(self, rep, order, out)
    }
}

// ---------------------------------------------------------------------------
// Linear (single-layer) model.
// ---------------------------------------------------------------------------

/// A linear cluster-expansion feature model: fixed embedding, seeded frozen
/// channel mixing, and symmetric couplings through correlation order
/// `nu_max` into the configured output irreps.
pub struct AceModel {
    pub embedding: Embedding,
    pub nu_max: usize,
    pub outputs: Vec<(IrrepLabel, Rep)>,
    pub channel_mix: CMat,
    /// couplings[nu - 1] lists (label, tensor) with nonzero multiplicity.
    couplings: Vec<Vec<(IrrepLabel, Arc<CouplingTensor>)>>,
}

/// Seeded unit-variance complex matrix; the frozen "learnable" mixing.
pub fn seeded_mix(channels: usize, seed: u64) -> CMat {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let a = 3f64.sqrt();
    CMat::from_fn(channels, channels, |_, _| {
        C64::new(rng.gen_range(-a..a), rng.gen_range(-a..a)) / C64::from(2f64.sqrt())
    })
}

impl AceModel {
    pub fn new(
        embedding: Embedding,
        nu_max: usize,
        output_labels: &[IrrepLabel],
        channel_mix: CMat,
        cache: &dyn CouplingProvider,
    ) -> Result<Self> {
        if nu_max == 0 {
            return Err(Error::Config("nu_max must be >= 1".into()));
        }
        let phi = embedding.phi_rep()?;
        let mut outputs = Vec::new();
        for label in output_labels {
            outputs.push((label.clone(), label.build()?));
        }
        let mut couplings = Vec::with_capacity(nu_max);
        for nu in 1..=nu_max {
            let mut per_nu = Vec::new();
            for (label, rep) in &outputs {
                let tensor = cache.symmetric(&phi, nu, rep)?;
                if tensor.multiplicity > 0 {
                    per_nu.push((label.clone(), tensor));
                }
            }
            couplings.push(per_nu);
        }
        Ok(Self { embedding, nu_max, outputs, channel_mix, couplings })
    }

    pub fn couplings_for_nu(&self, nu: usize) -> &[(IrrepLabel, Arc<CouplingTensor>)] {
        &self.couplings[nu - 1]
    }

    /// Full feature field of a cloud: all blocks for nu = 1..=nu_max.
    pub fn features(&self, cloud: &PointCloud) -> Result<FeatureField> {
        let embedded = self.embedding.embed_cloud(cloud)?;
        let pooled = pool_atomic_basis(&self.embedding, &embedded);
        let mixed = mix_channels(&pooled, &self.channel_mix)?;
        let mut field = FeatureField::default();
        for nu in 1..=self.nu_max {
            let products = product_basis(&mixed, nu)?;
            let part = symmetrize_basis(&products, &self.couplings[nu - 1]);
            field.blocks.extend(part.blocks);
        }
        Ok(field)
    }

    /// Invariant feature vector (with leading bias entry) used by fits.
    pub fn invariant_features(&self, cloud: &PointCloud) -> Result<Vec<f64>> {
        let field = self.features(cloud)?;
        let mut v = vec![1.0];
        v.extend(field.invariant_components());
        Ok(v)
    }
}

// ---------------------------------------------------------------------------
// Multi-layer (message-passing) model.
// ---------------------------------------------------------------------------

/// Configuration of one message-passing layer.
#[derive(Debug, Clone)]
pub struct LayerSpec {
    /// Correlation order of the pooled expansion.
    pub nu: usize,
    /// Irrep slots of the coupled one-particle functions phi^t.
    pub phi_outputs: Vec<IrrepLabel>,
    /// Irrep slots of the messages / next state.
    pub message_outputs: Vec<IrrepLabel>,
}

struct PairBlock {
    state_slot: usize,
    embed_slot: usize,
    phi_slot: usize,
    tensor: Arc<CouplingTensor>,
    /// One weight per (channel, alpha).
    weights: Vec<Vec<C64>>,
}

struct MaceLayer {
    nu: usize,
    phi_slots: Vec<(IrrepLabel, Rep)>,
    message_slots: Vec<(IrrepLabel, Rep)>,
    pair_blocks: Vec<PairBlock>,
    /// couplings from Sym^nu of the pooled phi space into message slots.
    sym_couplings: Vec<(usize, Arc<CouplingTensor>)>,
    /// message weights per (coupling position, channel, alpha).
    message_weights: Vec<Vec<Vec<C64>>>,
    /// per message-slot channel map U_t.
    update: Vec<CMat>,
}

/// Per-particle states: `h[particle][channel][slot]`.
pub type States = Vec<Vec<Vec<CVec>>>;

/// Multi-layer cluster-expansion model with seeded frozen weights.
pub struct MaceModel {
    pub embedding: Embedding,
    layers: Vec<MaceLayer>,
    state0_mix: CMat,
    trivial_rep: Rep,
}

fn seeded_weights(count: usize, seed: u64) -> Vec<C64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let a = 3f64.sqrt();
    (0..count)
        .map(|_| C64::new(rng.gen_range(-a..a), rng.gen_range(-a..a)) / C64::from(2f64.sqrt()))
        .collect()
}

impl MaceModel {
    pub fn new(
        embedding: Embedding,
        layer_specs: &[LayerSpec],
        seed: u64,
        cache: &dyn CouplingProvider,
    ) -> Result<Self> {
        if layer_specs.is_empty() {
            return Err(Error::Config("a multi-layer model needs at least one layer".into()));
        }
        let channels = embedding.channels;
        let trivial_label = trivial_label_for(embedding.group);
        let trivial_rep = trivial_label.build()?;
        let mut state_slots: Vec<(IrrepLabel, Rep)> =
            vec![(trivial_label.clone(), trivial_rep.clone())];
        let mut layers = Vec::with_capacity(layer_specs.len());
        let mut weight_seed = seed;
        for spec in layer_specs {
            if spec.nu == 0 {
                return Err(Error::Config("layer correlation order must be >= 1".into()));
            }
            let mut phi_slots = Vec::new();
            for label in &spec.phi_outputs {
                phi_slots.push((label.clone(), label.build()?));
            }
            let mut message_slots = Vec::new();
            for label in &spec.message_outputs {
                message_slots.push((label.clone(), label.build()?));
            }
            // Pairwise couplings of each state slot with each embedding slot
            // into each phi slot.
            let mut pair_blocks = Vec::new();
            for (si, (_, s_rep)) in state_slots.iter().enumerate() {
                for (ei, e_slot) in embedding.slots.iter().enumerate() {
                    for (qi, (_, q_rep)) in phi_slots.iter().enumerate() {
                        let tensor = cache.clebsch_gordan(s_rep, &e_slot.rep, q_rep)?;
                        if tensor.multiplicity == 0 {
                            continue;
                        }
                        weight_seed += 1;
                        let weights: Vec<Vec<C64>> = (0..channels)
                            .map(|c| seeded_weights(tensor.multiplicity, weight_seed * 1000 + c as u64))
                            .collect();
                        pair_blocks.push(PairBlock {
                            state_slot: si,
                            embed_slot: ei,
                            phi_slot: qi,
                            tensor,
                            weights,
                        });
                    }
                }
            }
            if pair_blocks.is_empty() {
                return Err(Error::Config(
                    "layer has no admissible pairwise couplings into its phi slots".into(),
                ));
            }
            let phi_space = direct_sum_all(phi_slots.iter().map(|(_, r)| r))?;
            let mut sym_couplings = Vec::new();
            let mut message_weights = Vec::new();
            for (mi, (_, m_rep)) in message_slots.iter().enumerate() {
                let tensor = cache.symmetric(&phi_space, spec.nu, m_rep)?;
                if tensor.multiplicity == 0 {
                    continue;
                }
                weight_seed += 1;
                let weights: Vec<Vec<C64>> = (0..channels)
                    .map(|c| seeded_weights(tensor.multiplicity, weight_seed * 1000 + c as u64))
                    .collect();
                sym_couplings.push((mi, tensor));
                message_weights.push(weights);
            }
            if sym_couplings.is_empty() {
                return Err(Error::Config(
                    "layer has no admissible symmetric couplings into its message slots".into(),
                ));
            }
            let update: Vec<CMat> = (0..message_slots.len())
                .map(|mi| {
                    weight_seed += 1;
                    seeded_mix(channels, weight_seed * 1000 + mi as u64)
                })
                .collect();
            // Message slots with no admissible coupling simply stay zero in
            // the next state.
            layers.push(MaceLayer {
                nu: spec.nu,
                phi_slots,
                message_slots: message_slots.clone(),
                pair_blocks,
                sym_couplings,
                message_weights,
                update,
            });
            state_slots = message_slots;
        }
        Ok(Self { embedding, layers, state0_mix: seeded_mix(channels, seed ^ 0x5eed), trivial_rep })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Labels and representations of the state slots after layer `t`
    /// (1-based); `t = 0` is the initial trivial state.
    pub fn state_slots(&self, t: usize) -> Vec<(IrrepLabel, Rep)> {
        if t == 0 {
            vec![(trivial_label_for(self.embedding.group), self.trivial_rep.clone())]
        } else {
            self.layers[t - 1].message_slots.clone()
        }
    }

    /// Initial states: channel-mixed trivial blocks of the embedding, or a
    /// constant when the embedding has no trivial slot.
    fn initial_states(&self, embedded: &EmbeddedCloud) -> States {
        let channels = self.embedding.channels;
        let trivial_slots: Vec<usize> = self
            .embedding
            .slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.rep.is_trivial(TRIVIAL_TOL))
            .map(|(i, _)| i)
            .collect();
        let n = embedded.per_particle.len();
        let mut states: States = Vec::with_capacity(n);
        for i in 0..n {
            let mut per_channel = Vec::with_capacity(channels);
            for c in 0..channels {
                let mut raw = C64::default();
                if trivial_slots.is_empty() {
                    raw = C64::from(1.0);
                } else {
                    for cp in 0..channels {
                        for &s in &trivial_slots {
                            raw += self.state0_mix[(c, cp)] * embedded.per_particle[i][cp][s][0];
                        }
                    }
                }
                per_channel.push(vec![CVec::from_element(1, raw)]);
            }
            states.push(per_channel);
        }
        states
    }

    /// One message-passing step; returns the next states.
    fn step(&self, layer: &MaceLayer, embedded: &EmbeddedCloud, states: &States) -> States {
        let channels = self.embedding.channels;
        let n = embedded.per_particle.len();
        // phi^t[j][c][q]: coupled one-particle functions.
        let mut phi: Vec<Vec<Vec<CVec>>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut per_channel = Vec::with_capacity(channels);
            for c in 0..channels {
                let mut per_slot: Vec<CVec> =
                    layer.phi_slots.iter().map(|(_, r)| CVec::zeros(r.dim())).collect();
                for block in &layer.pair_blocks {
                    let u = &states[j][c][block.state_slot];
                    let v = &embedded.per_particle[j][c][block.embed_slot];
                    let mut flat = Vec::with_capacity(u.len() * v.len());
                    for a in u.iter() {
                        for b in v.iter() {
                            flat.push(a * b);
                        }
                    }
                    let outs = block.tensor.contract_flat(&flat);
                    for (alpha, out_v) in outs.into_iter().enumerate() {
                        let w = block.weights[c][alpha];
                        per_slot[block.phi_slot] += out_v.map(|z| z * w);
                    }
                }
                per_channel.push(per_slot);
            }
            phi.push(per_channel);
        }

        // Pool over neighbors (full cloud minus self) in canonical order,
        // expand, couple, and update.
        let mut next: States = Vec::with_capacity(n);
        for i in 0..n {
            let mut pooled: Vec<Vec<CVec>> = (0..channels)
                .map(|_| layer.phi_slots.iter().map(|(_, r)| CVec::zeros(r.dim())).collect())
                .collect();
            for &j in &embedded.order {
                if j == i {
                    continue;
                }
                for (c, row) in pooled.iter_mut().enumerate() {
                    for (s, acc) in row.iter_mut().enumerate() {
                        *acc += &phi[j][c][s];
                    }
                }
            }
            let products = product_basis(&PooledBasis { a: pooled }, layer.nu)
                .expect("layer nu validated at construction");
            // Messages per channel and message slot.
            let mut messages: Vec<Vec<CVec>> = (0..channels)
                .map(|_| layer.message_slots.iter().map(|(_, r)| CVec::zeros(r.dim())).collect())
                .collect();
            for (pos, (mi, tensor)) in layer.sym_couplings.iter().enumerate() {
                for c in 0..channels {
                    let outs = tensor.contract_flat(&products.values[c]);
                    for (alpha, out_v) in outs.into_iter().enumerate() {
                        let w = layer.message_weights[pos][c][alpha];
                        messages[c][*mi] += out_v.map(|z| z * w);
                    }
                }
            }
            // U_t: per-slot channel map.
            let mut new_state: Vec<Vec<CVec>> = (0..channels)
                .map(|_| layer.message_slots.iter().map(|(_, r)| CVec::zeros(r.dim())).collect())
                .collect();
            for (mi, u) in layer.update.iter().enumerate() {
                for c in 0..channels {
                    let mut acc = CVec::zeros(layer.message_slots[mi].1.dim());
                    for cp in 0..channels {
                        acc += messages[cp][mi].map(|z| z * u[(c, cp)]);
                    }
                    new_state[c][mi] = acc;
                }
            }
            next.push(new_state);
        }
        next
    }

    /// Runs all layers, returning the state history: entry `t` holds the
    /// states after layer `t` (entry 0 is the initial state).
    pub fn run(&self, cloud: &PointCloud) -> Result<Vec<States>> {
        let embedded = self.embedding.embed_cloud(cloud)?;
        let mut history = vec![self.initial_states(&embedded)];
        for layer in &self.layers {
            let next = self.step(layer, &embedded, history.last().unwrap());
            history.push(next);
        }
        Ok(history)
    }

    /// Global invariant readout features: per layer t >= 1, channel, and
    /// trivial state slot, the particle-summed invariant component (real
    /// and imaginary parts), with a leading bias entry.
    pub fn invariant_features(&self, cloud: &PointCloud) -> Result<Vec<f64>> {
        let history = self.run(cloud)?;
        let order = cloud.canonical_order();
        let mut out = vec![1.0];
        for (t, states) in history.iter().enumerate().skip(1) {
            let slots = self.state_slots(t);
            for c in 0..self.embedding.channels {
                for (si, (_, rep)) in slots.iter().enumerate() {
                    if !rep.is_trivial(TRIVIAL_TOL) {
                        continue;
                    }
                    let mut acc = C64::default();
                    for &i in &order {
                        acc += states[i][c][si][0];
                    }
                    out.push(acc.re);
                    out.push(acc.im);
                }
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Linear fitting.
// ---------------------------------------------------------------------------

/// Result of a regularized least-squares fit of invariant features.
#[derive(Debug, Clone)]
pub struct LinearFit {
    pub weights: Vec<f64>,
    pub train_rmse: f64,
    pub test_rmse: Option<f64>,
}

/// Ridge regression through the SVD: `w = V diag(s/(s^2+lambda)) U^T y`.
pub fn ridge_fit(rows: &[Vec<f64>], targets: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("fit needs at least one sample".into()));
    }
    if rows.len() != targets.len() {
        return Err(Error::InvalidArgument("row and target counts differ".into()));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidArgument("feature rows have inconsistent lengths".into()));
    }
    let n = rows.len();
    let x = nalgebra::DMatrix::<f64>::from_fn(n, p, |i, j| rows[i][j]);
    let y = nalgebra::DVector::<f64>::from_column_slice(targets);
    let svd = x.svd(true, true);
    let u = svd.u.as_ref().expect("u computed");
    let v_t = svd.v_t.as_ref().expect("v_t computed");
    let uty = u.transpose() * y;
    let mut shrunk = nalgebra::DVector::<f64>::zeros(svd.singular_values.len());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        shrunk[i] = s / (s * s + lambda) * uty[i];
    }
    let w = v_t.transpose() * shrunk;
    Ok(w.iter().cloned().collect())
}

pub fn rmse(rows: &[Vec<f64>], targets: &[f64], weights: &[f64]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for (r, &t) in rows.iter().zip(targets) {
        let pred: f64 = r.iter().zip(weights).map(|(a, b)| a * b).sum();
        acc += (pred - t) * (pred - t);
    }
    (acc / rows.len() as f64).sqrt()
}

/// Fits readout weights of `model` on (cloud, target) pairs by ridge
/// regression over invariant features; only the readout is learnable.
pub fn fit_linear(
    model: &AceModel,
    train: &[(PointCloud, f64)],
    test: &[(PointCloud, f64)],
    lambda: f64,
) -> Result<LinearFit> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("fit needs at least one sample".into()));
    }
    use rayon::prelude::*;
    let rows: Vec<Vec<f64>> = train
        .par_iter()
        .map(|(cloud, _)| model.invariant_features(cloud))
        .collect::<Result<_>>()?;
    let targets: Vec<f64> = train.iter().map(|(_, t)| *t).collect();
    let weights = ridge_fit(&rows, &targets, lambda)?;
    let train_rmse = rmse(&rows, &targets, &weights);
    let test_rmse = if test.is_empty() {
        None
    } else {
        let rows: Vec<Vec<f64>> = test
            .par_iter()
            .map(|(cloud, _)| model.invariant_features(cloud))
            .collect::<Result<_>>()?;
        let targets: Vec<f64> = test.iter().map(|(_, t)| *t).collect();
        Some(rmse(&rows, &targets, &weights))
    };
    Ok(LinearFit { weights, train_rmse, test_rmse })
}

// ---------------------------------------------------------------------------
// Model configuration (JSON).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialConfig {
    pub kind: String,
    #[serde(default)]
    pub r_cut: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub kind: String,
    pub channels: usize,
    #[serde(default)]
    pub powers: Vec<usize>,
    #[serde(default)]
    pub l_list: Vec<u32>,
    #[serde(default)]
    pub radial: Option<RadialConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerConfig {
    pub nu: usize,
    pub phi_outputs: Vec<String>,
    pub message_outputs: Vec<String>,
}

/// Serialized model description consumed by the command-line tools.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub group: String,
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub nu_max: usize,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub layers: Vec<LayerConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    0
}

pub enum BuiltModel {
    Linear(AceModel),
    MessagePassing(MaceModel),
}

impl ModelConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn parse_labels(labels: &[String]) -> Result<Vec<IrrepLabel>> {
        labels.iter().map(|s| s.parse()).collect()
    }

    pub fn build_embedding(&self, cache: &dyn CouplingProvider) -> Result<Embedding> {
        let group = GroupKind::parse(&self.group)?;
        match self.embedding.kind.as_str() {
            "rep_coordinates" => Embedding::rep_coordinates(
                group,
                &self.embedding.powers,
                self.embedding.channels,
                cache,
            ),
            "radial_harmonic" => {
                let radial = match &self.embedding.radial {
                    None => RadialBasis::Monomial,
                    Some(rc) => match rc.kind.as_str() {
                        "monomial" => RadialBasis::Monomial,
                        "gaussian" => RadialBasis::GaussianBumps {
                            r_cut: rc.r_cut.ok_or_else(|| {
                                Error::Config("gaussian radial basis needs r_cut".into())
                            })?,
                        },
                        other => {
                            return Err(Error::Config(format!("unknown radial basis: {other:?}")))
                        }
                    },
                };
                Embedding::radial_harmonic(
                    group,
                    &self.embedding.l_list,
                    self.embedding.channels,
                    radial,
                    cache,
                )
            }
            other => Err(Error::Config(format!("unknown embedding kind: {other:?}"))),
        }
    }

    pub fn build(&self, cache: &dyn CouplingProvider) -> Result<BuiltModel> {
        let embedding = self.build_embedding(cache)?;
        if self.layers.is_empty() {
            if self.nu_max == 0 {
                return Err(Error::Config("nu_max must be >= 1 for a linear model".into()));
            }
            let outputs = Self::parse_labels(&self.outputs)?;
            let mix = seeded_mix(embedding.channels, self.seed);
            Ok(BuiltModel::Linear(AceModel::new(embedding, self.nu_max, &outputs, mix, cache)?))
        } else {
            let mut specs = Vec::new();
            for layer in &self.layers {
                specs.push(LayerSpec {
                    nu: layer.nu,
                    phi_outputs: Self::parse_labels(&layer.phi_outputs)?,
                    message_outputs: Self::parse_labels(&layer.message_outputs)?,
                });
            }
            Ok(BuiltModel::MessagePassing(MaceModel::new(embedding, &specs, self.seed, cache)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::sample_group_element;
    use rand::{Rng, SeedableRng};

    fn cache() -> CouplingCache {
        CouplingCache::new()
    }

    fn vmax(v: &CVec) -> f64 {
        v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn random_cloud(n: usize, dim: usize, seed: u64, scale: f64) -> PointCloud {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()).collect(),
        )
    }

    fn o3_embedding(cache: &CouplingCache) -> Embedding {
        Embedding::radial_harmonic(GroupKind::O3, &[0, 1, 2], 2, RadialBasis::Monomial, cache)
            .unwrap()
    }

    #[test]
    fn rep_coordinates_power_one_copies_raw() {
        let c = cache();
        let e = Embedding::rep_coordinates(GroupKind::So13, &[1], 1, &c).unwrap();
        let vals = e.embed_particle(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(vals.len(), 1);
        assert_eq!(vals[0].len(), 1);
        let v = &vals[0][0];
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], C64::from(1.0));
        assert!(v.iter().skip(1).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn radial_l0_slot_is_isotropic() {
        let c = cache();
        let e = o3_embedding(&c);
        let a = e.embed_particle(&[0.3, 0.4, 0.0]).unwrap();
        let b = e.embed_particle(&[0.0, 0.0, 0.5]).unwrap();
        // Same radius, different direction: l=0 slot values agree.
        for ch in 0..2 {
            assert!((a[ch][0][0] - b[ch][0][0]).norm() < 1e-12);
        }
    }

    #[test]
    fn embedding_slots_are_equivariant() {
        let c = cache();
        let e = o3_embedding(&c);
        let cloud = random_cloud(5, 3, 3, 1.2);
        for seed in 0..50 {
            let g = sample_group_element(&e.coord_rep, seed, 1.0).unwrap();
            let moved = e.transform_cloud(&cloud, &g.coords).unwrap();
            for (p_orig, p_moved) in cloud.particles.iter().zip(&moved.particles) {
                let orig = e.embed_particle(&p_orig.raw).unwrap();
                let moved_vals = e.embed_particle(&p_moved.raw).unwrap();
                for ch in 0..e.channels {
                    for (s, slot) in e.slots.iter().enumerate() {
                        let rho = realize_element(&slot.rep, &g.coords).unwrap();
                        let want = &rho * &orig[ch][s];
                        let resid = vmax(&(&moved_vals[ch][s] - want));
                        assert!(resid < 1e-8, "seed {seed} slot {s}: {resid}");
                    }
                }
            }
        }
    }

    #[test]
    fn pooling_is_permutation_invariant_bitwise() {
        let c = cache();
        let e = o3_embedding(&c);
        let cloud = random_cloud(6, 3, 11, 1.0);
        let mut permuted = cloud.clone();
        permuted.particles.rotate_left(3);
        permuted.particles.swap(0, 4);
        let a = pool_atomic_basis(&e, &e.embed_cloud(&cloud).unwrap());
        let b = pool_atomic_basis(&e, &e.embed_cloud(&permuted).unwrap());
        for (ra, rb) in a.a.iter().zip(&b.a) {
            for (va, vb) in ra.iter().zip(rb) {
                assert_eq!(va, vb);
            }
        }
    }

    #[test]
    fn pooling_linearity_edge_cases() {
        let c = cache();
        let e = o3_embedding(&c);
        // Empty cloud pools to zero.
        let empty = PointCloud::default();
        let a = pool_atomic_basis(&e, &e.embed_cloud(&empty).unwrap());
        assert!(a.a.iter().all(|row| row.iter().all(|v| v.iter().all(|z| z.norm() == 0.0))));
        // Single particle pools to its embedding.
        let one = PointCloud::new(vec![vec![0.2, -0.1, 0.4]]);
        let pooled = pool_atomic_basis(&e, &e.embed_cloud(&one).unwrap());
        let direct = e.embed_particle(&[0.2, -0.1, 0.4]).unwrap();
        for ch in 0..2 {
            for s in 0..e.slots.len() {
                assert_eq!(pooled.a[ch][s], direct[ch][s]);
            }
        }
        // Two identical particles double the embedding.
        let two = PointCloud::new(vec![vec![0.2, -0.1, 0.4]; 2]);
        let pooled2 = pool_atomic_basis(&e, &e.embed_cloud(&two).unwrap());
        for ch in 0..2 {
            for s in 0..e.slots.len() {
                let want = direct[ch][s].map(|z| z * C64::from(2.0));
                assert!(vmax(&(pooled2.a[ch][s].clone() - want)) < 1e-15);
            }
        }
    }

    #[test]
    fn adding_zero_embedded_particle_changes_nothing() {
        let c = cache();
        let e = o3_embedding(&c);
        let cloud = random_cloud(4, 3, 5, 1.0);
        let mut embedded = e.embed_cloud(&cloud).unwrap();
        let pooled = pool_atomic_basis(&e, &embedded);
        // Append a particle whose embedded blocks are identically zero.
        let zero_vals: Vec<Vec<CVec>> = (0..e.channels)
            .map(|_| e.slots.iter().map(|s| CVec::zeros(s.rep.dim())).collect())
            .collect();
        embedded.per_particle.push(zero_vals);
        embedded.order.push(cloud.len());
        let padded = pool_atomic_basis(&e, &embedded);
        for ch in 0..e.channels {
            for s in 0..e.slots.len() {
                assert_eq!(pooled.a[ch][s], padded.a[ch][s]);
            }
        }
    }

    #[test]
    fn mix_channels_identity_and_scaling() {
        let c = cache();
        let e = o3_embedding(&c);
        let cloud = random_cloud(3, 3, 7, 1.0);
        let pooled = pool_atomic_basis(&e, &e.embed_cloud(&cloud).unwrap());
        let eye = CMat::identity(2, 2);
        let same = mix_channels(&pooled, &eye).unwrap();
        for (ra, rb) in pooled.a.iter().zip(&same.a) {
            for (va, vb) in ra.iter().zip(rb) {
                assert_eq!(va, vb);
            }
        }
        let double = CMat::identity(2, 2).map(|z| z * C64::from(2.0));
        let scaled = mix_channels(&pooled, &double).unwrap();
        for (ra, rb) in pooled.a.iter().zip(&scaled.a) {
            for (va, vb) in ra.iter().zip(rb) {
                let want = va.map(|z| z * C64::from(2.0));
                assert!(vmax(&(vb - want)) < 1e-15);
            }
        }
    }

    #[test]
    fn product_basis_enumerates_ordered_tuples() {
        // Two-entry mixed basis (a, b): nu=2 gives a^2, ab, b^2.
        let pooled = PooledBasis {
            a: vec![vec![CVec::from_vec(vec![C64::from(2.0), C64::from(3.0)])]],
        };
        let prod = product_basis(&pooled, 2).unwrap();
        assert_eq!(prod.values[0], vec![C64::from(4.0), C64::from(6.0), C64::from(9.0)]);
        let prod1 = product_basis(&pooled, 1).unwrap();
        assert_eq!(prod1.values[0], vec![C64::from(2.0), C64::from(3.0)]);
    }

    #[test]
    fn product_basis_matches_nested_sum_oracle() {
        // Interchange-of-summation identity: prod_s A_{k_s} equals the
        // brute-force nested sum over particle tuples, including
        // self-interactions.
        let c = cache();
        let e = o3_embedding(&c);
        let cloud = random_cloud(4, 3, 13, 1.0);
        let embedded = e.embed_cloud(&cloud).unwrap();
        let pooled = pool_atomic_basis(&e, &embedded);
        for nu in 1..=3usize {
            let prod = product_basis(&pooled, nu).unwrap();
            for ch in 0..e.channels {
                let flat_per_particle: Vec<Vec<C64>> = (0..cloud.len())
                    .map(|i| flatten_row(&embedded.per_particle[i][ch]))
                    .collect();
                for (rank, tuple) in prod.tuples.tuples().iter().enumerate() {
                    let mut oracle = C64::default();
                    let mut particle_tuple = vec![0usize; nu];
                    nested_sum(&flat_per_particle, tuple, &mut particle_tuple, 0, &mut oracle);
                    let got = prod.values[ch][rank];
                    assert!(
                        (got - oracle).norm() < 1e-10,
                        "nu={nu} ch={ch} tuple={tuple:?}: {got} vs {oracle}"
                    );
                }
            }
        }
    }

    fn nested_sum(
        phi: &[Vec<C64>],
        ktuple: &[u32],
        jtuple: &mut Vec<usize>,
        pos: usize,
        acc: &mut C64,
    ) {
        if pos == ktuple.len() {
            let mut prod = C64::from(1.0);
            for (s, &j) in jtuple.iter().enumerate() {
                prod *= phi[j][ktuple[s] as usize];
            }
            *acc += prod;
            return;
        }
        for j in 0..phi.len() {
            jtuple[pos] = j;
            nested_sum(phi, ktuple, jtuple, pos + 1, acc);
        }
    }

    #[test]
    fn scalar_features_of_l1_embedding_are_norm_squared() {
        // nu=2 invariant of a pure l=1 embedding is the unique invariant
        // contraction, proportional to |sum_i r_i|^2.
        let c = cache();
        let e =
            Embedding::radial_harmonic(GroupKind::O3, &[1], 1, RadialBasis::Monomial, &c).unwrap();
        let model = AceModel::new(
            e,
            2,
            &[IrrepLabel::O3 { l: 0, parity: Parity::Even }],
            CMat::identity(1, 1),
            &c,
        )
        .unwrap();
        let mut ratios = Vec::new();
        for seed in 0..20 {
            let cloud = random_cloud(4, 3, 100 + seed, 1.0);
            let field = model.features(&cloud).unwrap();
            let inv: Vec<&FeatureBlock> =
                field.blocks.iter().filter(|b| b.nu == 2 && b.output.is_trivial()).collect();
            assert_eq!(inv.len(), 1);
            let b = inv[0].values[0];
            let total: Vec<f64> =
                (0..3).map(|k| cloud.particles.iter().map(|p| p.raw[k]).sum()).collect();
            let norm2: f64 = total.iter().map(|x| x * x).sum();
            ratios.push(b / C64::from(norm2));
        }
        let first = ratios[0];
        for r in &ratios {
            assert!((r - first).norm() < 1e-10 * first.norm().max(1.0));
        }
    }

    #[test]
    fn trace_features_reduce_to_plain_ace_at_unit_single_channel() {
        let c = cache();
        let e1 = Embedding::radial_harmonic(GroupKind::O3, &[0, 1], 1, RadialBasis::Monomial, &c)
            .unwrap();
        let outputs = vec![
            IrrepLabel::O3 { l: 0, parity: Parity::Even },
            IrrepLabel::O3 { l: 1, parity: Parity::Odd },
        ];
        let unit = AceModel::new(e1.clone(), 2, &outputs, CMat::identity(1, 1), &c).unwrap();
        // Plain pipeline without mixing.
        let cloud = random_cloud(5, 3, 23, 1.0);
        let embedded = e1.embed_cloud(&cloud).unwrap();
        let pooled = pool_atomic_basis(&e1, &embedded);
        let mut plain = FeatureField::default();
        for nu in 1..=2 {
            let prods = product_basis(&pooled, nu).unwrap();
            let part = symmetrize_basis(&prods, unit.couplings_for_nu(nu));
            plain.blocks.extend(part.blocks);
        }
        let mixed_field = unit.features(&cloud).unwrap();
        assert_eq!(plain.blocks.len(), mixed_field.blocks.len());
        for (x, y) in plain.blocks.iter().zip(&mixed_field.blocks) {
            assert_eq!(x.values, y.values);
        }
    }

    #[test]
    fn ace_features_are_equivariant() {
        let c = cache();
        let e = o3_embedding(&c);
        let outputs = vec![
            IrrepLabel::O3 { l: 0, parity: Parity::Even },
            IrrepLabel::O3 { l: 1, parity: Parity::Odd },
            IrrepLabel::O3 { l: 2, parity: Parity::Even },
        ];
        let model = AceModel::new(e, 3, &outputs, seeded_mix(2, 4), &c).unwrap();
        let cloud = random_cloud(5, 3, 31, 1.0);
        let base = model.features(&cloud).unwrap();
        for seed in 0..20 {
            let g = sample_group_element(&model.embedding.coord_rep, 700 + seed, 1.0).unwrap();
            let moved = model.embedding.transform_cloud(&cloud, &g.coords).unwrap();
            let moved_field = model.features(&moved).unwrap();
            for (b0, b1) in base.blocks.iter().zip(&moved_field.blocks) {
                let (_, rep) =
                    model.outputs.iter().find(|(l, _)| *l == b0.output).expect("known output");
                let rho = realize_element(rep, &g.coords).unwrap();
                let want = &rho * &b0.values;
                let scale = vmax(&b0.values).max(1.0);
                let resid = vmax(&(&b1.values - want)) / scale;
                assert!(resid < 1e-8, "seed {seed} block {:?}: {resid}", b0.output);
            }
        }
    }

    #[test]
    fn mace_states_are_equivariant_and_permutation_consistent() {
        let c = cache();
        let e = Embedding::radial_harmonic(GroupKind::O3, &[0, 1], 2, RadialBasis::Monomial, &c)
            .unwrap();
        let slots_t1 = vec![
            IrrepLabel::O3 { l: 0, parity: Parity::Even },
            IrrepLabel::O3 { l: 1, parity: Parity::Odd },
        ];
        let specs = vec![
            LayerSpec { nu: 2, phi_outputs: slots_t1.clone(), message_outputs: slots_t1.clone() },
            LayerSpec {
                nu: 2,
                phi_outputs: slots_t1.clone(),
                message_outputs: vec![IrrepLabel::O3 { l: 0, parity: Parity::Even }],
            },
        ];
        let model = MaceModel::new(e, &specs, 9, &c).unwrap();
        let cloud = random_cloud(4, 3, 41, 1.0);
        let history = model.run(&cloud).unwrap();

        // Permutation: relabelling particles permutes states exactly.
        let mut permuted = cloud.clone();
        permuted.particles.swap(0, 2);
        let history_p = model.run(&permuted).unwrap();
        for t in 0..history.len() {
            // Particle 0 of the original is particle 2 of the permuted cloud.
            assert_eq!(history[t][0], history_p[t][2]);
            assert_eq!(history[t][2], history_p[t][0]);
            assert_eq!(history[t][1], history_p[t][1]);
        }

        // Equivariance of state blocks under sampled elements.
        for seed in 0..10 {
            let g = sample_group_element(&model.embedding.coord_rep, 900 + seed, 1.0).unwrap();
            let moved = model.embedding.transform_cloud(&cloud, &g.coords).unwrap();
            let history_g = model.run(&moved).unwrap();
            for t in 1..history.len() {
                let slots = model.state_slots(t);
                for i in 0..cloud.len() {
                    for ch in 0..model.embedding.channels {
                        for (si, (_, rep)) in slots.iter().enumerate() {
                            let rho = realize_element(rep, &g.coords).unwrap();
                            let want = &rho * &history[t][i][ch][si];
                            let scale = vmax(&history[t][i][ch][si]).max(1.0);
                            let resid = vmax(&(&history_g[t][i][ch][si] - want)) / scale;
                            assert!(resid < 1e-8, "t={t} i={i} ch={ch} slot={si}: {resid}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn global_readout_is_invariant() {
        let c = cache();
        let e = o3_embedding(&c);
        let model = AceModel::new(
            e,
            2,
            &[IrrepLabel::O3 { l: 0, parity: Parity::Even }],
            seeded_mix(2, 8),
            &c,
        )
        .unwrap();
        let cloud = random_cloud(5, 3, 77, 1.2);
        let f0 = model.invariant_features(&cloud).unwrap();
        // Permutation invariance is exact.
        let mut permuted = cloud.clone();
        permuted.particles.reverse();
        assert_eq!(f0, model.invariant_features(&permuted).unwrap());
        // Group invariance within tolerance.
        for seed in 0..100 {
            let g = sample_group_element(&model.embedding.coord_rep, 1234 + seed, 1.0).unwrap();
            let moved = model.embedding.transform_cloud(&cloud, &g.coords).unwrap();
            let f1 = model.invariant_features(&moved).unwrap();
            for (a, b) in f0.iter().zip(&f1) {
                assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "seed {seed}");
            }
        }
    }

    #[test]
    fn ridge_fit_of_zero_target_gives_zero_weights() {
        let rows = vec![vec![1.0, 0.5], vec![1.0, -0.3], vec![1.0, 0.9]];
        let targets = vec![0.0; 3];
        let w = ridge_fit(&rows, &targets, 1e-10).unwrap();
        assert!(w.iter().all(|x| x.abs() < 1e-12));
        assert!(rmse(&rows, &targets, &w) < 1e-12);
    }

    #[test]
    fn fit_recovers_exact_invariant_target() {
        let c = cache();
        // Monomial radial channels r^0, r^1, r^2: the target is in the span.
        let e = Embedding::radial_harmonic(GroupKind::O3, &[0, 1], 3, RadialBasis::Monomial, &c)
            .unwrap();
        let model = AceModel::new(
            e,
            1,
            &[IrrepLabel::O3 { l: 0, parity: Parity::Even }],
            seeded_mix(3, 17),
            &c,
        )
        .unwrap();
        let mut data = Vec::new();
        for seed in 0..60 {
            let cloud = random_cloud(3 + (seed as usize % 4), 3, 3000 + seed, 1.2);
            let target: f64 =
                cloud.particles.iter().map(|p| p.raw.iter().map(|x| x * x).sum::<f64>()).sum();
            data.push((cloud, target));
        }
        let (train, test) = data.split_at(45);
        let fit = fit_linear(&model, train, test, 1e-10).unwrap();
        assert!(fit.train_rmse < 1e-8, "train {}", fit.train_rmse);
        assert!(fit.test_rmse.unwrap() < 1e-8, "test {:?}", fit.test_rmse);
    }

    #[test]
    fn cloud_serialization_round_trips() {
        let cloud = random_cloud(3, 4, 5, 1.0);
        let text = cloud.to_json_string();
        let back = PointCloud::from_json_str(&text).unwrap();
        assert_eq!(cloud, back);
        let txt = "0.5 1.0 2.0\n-1.0 0.25 0.125\n";
        let parsed = PointCloud::from_text(txt).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed.particles[1].raw, vec![-1.0, 0.25, 0.125]);
    }

    #[test]
    fn model_config_builds_linear_and_layered_models() {
        let c = cache();
        let text = r#"{
            "group": "O3",
            "embedding": {"kind": "radial_harmonic", "channels": 2, "l_list": [0, 1]},
            "nu_max": 2,
            "outputs": ["O3(0,+1)", "O3(1,-1)"],
            "seed": 3
        }"#;
        let config = ModelConfig::from_json_str(text).unwrap();
        match config.build(&c).unwrap() {
            BuiltModel::Linear(m) => assert_eq!(m.nu_max, 2),
            _ => panic!("expected linear model"),
        }
        let text2 = r#"{
            "group": "SU2",
            "embedding": {"kind": "rep_coordinates", "channels": 2, "powers": [1, 2]},
            "layers": [
                {"nu": 2, "phi_outputs": ["SU2(0)", "SU2(1)", "SU2(2)"],
                 "message_outputs": ["SU2(0)", "SU2(1)"]}
            ],
            "seed": 4
        }"#;
        let config2 = ModelConfig::from_json_str(text2).unwrap();
        match config2.build(&c).unwrap() {
            BuiltModel::MessagePassing(m) => assert_eq!(m.num_layers(), 1),
            _ => panic!("expected message-passing model"),
        }
    }
}
