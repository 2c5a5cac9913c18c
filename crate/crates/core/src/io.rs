//! JSON file formats (double precision).
//!
//! Complex numbers are two-element arrays `[re, im]`; matrices are row-major
//! nested arrays; vector and matrix indices follow the composite convention
//! `(i, j) -> 3i + j` with `i` the A index. Unknown keys are rejected.
//!
//! Serialization is byte-stable: writing a parsed file reproduces the input
//! produced by [`to_json`] exactly, since floats are printed in shortest
//! round-trip form.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::invariants::InvariantTuple;
use crate::orthogonalizer::{ClassificationReport, ClassifyOptions, Residuals};
use crate::product_search::{ProductVectorSet, SearchConfig};
use crate::scalar::C;
use crate::tensor::{CMat, CVec3, HermMat, DIM};
use crate::transform::ProductTransform;
use crate::upb::{ProductVector, Upb, UpbParams};
use crate::verify::{ImageVerdict, StateCertificate};

const DIM_A: usize = DensityMatrix::<f64>::DIM_A;
const DIM_B: usize = DensityMatrix::<f64>::DIM_B;

/// `[re, im]`.
pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

fn to_jc(z: &C<f64>) -> JsonComplex {
    [z.re, z.im]
}

fn from_jc(z: &JsonComplex) -> C<f64> {
    C::new(z[0], z[1])
}

pub fn matrix_to_json(m: &CMat<f64>) -> JsonMatrix {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| to_jc(&m[(i, j)])).collect()).collect()
}

pub fn matrix_from_json(m: &JsonMatrix, rows: usize, cols: usize) -> Result<CMat<f64>> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("expected a {rows}x{cols} matrix")));
    }
    if m.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Parse("non-finite matrix entry".into()));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| from_jc(&m[i][j])))
}

fn vec3_to_json(v: &CVec3<f64>) -> [JsonComplex; 3] {
    v.map(|z| to_jc(&z))
}

fn vec3_from_json(v: &[JsonComplex; 3]) -> CVec3<f64> {
    v.map(|z| from_jc(&z))
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file types always serialize");
    s.push('\n');
    s
}

pub fn from_json<D: DeserializeOwned>(text: &str) -> Result<D> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// `state.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim_a: usize,
    pub dim_b: usize,
    pub rho: JsonMatrix,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix<f64>) -> Self {
        Self { dim_a: DIM_A, dim_b: DIM_B, rho: matrix_to_json(rho.as_mat()) }
    }

    /// Validates dimensions, hermiticity, unit trace and positivity.
    pub fn to_state(&self) -> Result<DensityMatrix<f64>> {
        if (self.dim_a, self.dim_b) != (DIM_A, DIM_B) {
            return Err(Error::Dimension(format!(
                "only 3x3 systems are supported, got {}x{}",
                self.dim_a, self.dim_b
            )));
        }
        let n = DIM_A * DIM_B;
        DensityMatrix::new(HermMat::new(matrix_from_json(&self.rho, n, n)?)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorEntry {
    pub phi: [JsonComplex; 3],
    pub chi: [JsonComplex; 3],
}

impl VectorEntry {
    pub fn from_vector(pv: &ProductVector<f64>) -> Self {
        Self { phi: vec3_to_json(pv.phi()), chi: vec3_to_json(pv.chi()) }
    }

    pub fn to_vector(&self) -> Result<ProductVector<f64>> {
        ProductVector::new(vec3_from_json(&self.phi), vec3_from_json(&self.chi))
    }
}

/// `upb.json`; `params` is `null` for UPBs not built from the standard form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpbFile {
    pub params: Option<[f64; 4]>,
    pub vectors: Vec<VectorEntry>,
}

impl UpbFile {
    pub fn from_upb(upb: &Upb<f64>) -> Self {
        Self {
            params: upb.origin().map(|p| p.to_array()),
            vectors: upb.vectors().iter().map(VectorEntry::from_vector).collect(),
        }
    }

    pub fn to_upb(&self) -> Result<Upb<f64>> {
        let vectors = self.vectors.iter().map(VectorEntry::to_vector).collect::<Result<Vec<_>>>()?;
        Upb::new(vectors)
    }
}

/// `transform.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformFile {
    pub va: JsonMatrix,
    pub vb: JsonMatrix,
}

impl TransformFile {
    pub fn from_transform(t: &ProductTransform<f64>) -> Self {
        Self { va: matrix_to_json(t.va()), vb: matrix_to_json(t.vb()) }
    }

    /// Factors are rescaled to unit determinant.
    pub fn to_transform(&self) -> Result<ProductTransform<f64>> {
        ProductTransform::new(matrix_from_json(&self.va, DIM, DIM)?, matrix_from_json(&self.vb, DIM, DIM)?)
    }
}

/// One entry of `vectors.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorRecord {
    pub phi: [JsonComplex; 3],
    pub chi: [JsonComplex; 3],
    pub objective: f64,
}

pub fn vectors_file(set: &ProductVectorSet<f64>) -> Vec<VectorRecord> {
    set.iter()
        .map(|(pv, objective)| VectorRecord { phi: vec3_to_json(pv.phi()), chi: vec3_to_json(pv.chi()), objective })
        .collect()
}

/// Thresholds in effect for a run, embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rank: f64,
    pub positivity: f64,
    pub min_null_gap: f64,
    pub reconstruction: f64,
    pub accept: f64,
    pub dedup: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Tolerances {
    pub fn from_options(o: &ClassifyOptions<f64>) -> Self {
        Self {
            rank: o.rank_tol,
            positivity: o.positivity_tol,
            min_null_gap: o.min_null_gap,
            reconstruction: o.reconstruction_tol,
            accept: o.search.accept_tol,
            dedup: o.search.dedup_tol,
            restarts: o.search.restarts,
            seed: o.search.seed,
        }
    }

    pub fn from_search(s: &SearchConfig<f64>) -> Self {
        Self::from_options(&ClassifyOptions::from_search(*s))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualsFile {
    pub reconstruction: f64,
    pub kernel: f64,
    pub parallel_fit: f64,
    pub parallel_sixth: Option<f64>,
    pub null_gap: f64,
    pub invariant_imag: f64,
}

impl From<&Residuals<f64>> for ResidualsFile {
    fn from(r: &Residuals<f64>) -> Self {
        Self {
            reconstruction: r.reconstruction,
            kernel: r.kernel,
            parallel_fit: r.parallel_fit,
            parallel_sixth: r.parallel_sixth,
            null_gap: r.null_gap,
            invariant_imag: r.invariant_imag,
        }
    }
}

/// `classification.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationFile {
    /// Invariants `s1..s4` of the ordering used for the fit.
    pub invariants: [JsonComplex; 4],
    pub admissible_orderings: Vec<[usize; 6]>,
    /// Index into `admissible_orderings`.
    pub chosen: usize,
    pub params: [f64; 4],
    pub canonical_params: [f64; 4],
    pub kernel_vectors: Vec<VectorEntry>,
    pub transform: TransformFile,
    pub c_matrix: JsonMatrix,
    pub d_matrix: JsonMatrix,
    pub residuals: ResidualsFile,
    pub tolerances: Tolerances,
}

fn invariants_json(inv: &InvariantTuple<f64>) -> [JsonComplex; 4] {
    inv.s.map(|z| to_jc(&z))
}

impl ClassificationFile {
    pub fn from_report(r: &ClassificationReport<f64>, opts: &ClassifyOptions<f64>) -> Self {
        Self {
            invariants: invariants_json(&r.orderings.admissible[r.chosen].invariants),
            admissible_orderings: r.orderings.orderings(),
            chosen: r.chosen,
            params: r.params.to_array(),
            canonical_params: r.canonical_params.to_array(),
            kernel_vectors: r.kernel_vectors.iter().map(VectorEntry::from_vector).collect(),
            transform: TransformFile::from_transform(&r.transform),
            c_matrix: matrix_to_json(&r.c_matrix),
            d_matrix: matrix_to_json(&r.d_matrix),
            residuals: (&r.residuals).into(),
            tolerances: Tolerances::from_options(opts),
        }
    }

    pub fn params(&self) -> Result<UpbParams<f64>> {
        UpbParams::from_slice(&self.params)
    }
}

/// `certificate.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub is_ppt: bool,
    /// Smallest eigenvalue of the partial transpose.
    pub ppt_witness: f64,
    pub rank_pair: [usize; 2],
    pub local_ranks: [usize; 2],
    pub entangled: bool,
    /// `entangled`, `contains-product` or `indeterminate`.
    pub image_verdict: String,
    pub image_minimum: f64,
    pub extremal: bool,
    pub extremality_nullity: Option<usize>,
    pub extremality_witness: Option<f64>,
    pub tolerances: Tolerances,
}

pub fn verdict_name(v: ImageVerdict) -> &'static str {
    match v {
        ImageVerdict::Entangled => "entangled",
        ImageVerdict::ContainsProduct => "contains-product",
        ImageVerdict::Indeterminate => "indeterminate",
    }
}

impl CertificateFile {
    pub fn from_certificate(c: &StateCertificate<f64>, config: &SearchConfig<f64>) -> Self {
        Self {
            is_ppt: c.is_ppt(),
            ppt_witness: c.ppt.witness,
            rank_pair: [c.ranks.rank, c.ranks.rank_pt],
            local_ranks: [c.ranks.local_a, c.ranks.local_b],
            entangled: c.entangled(),
            image_verdict: verdict_name(c.image.verdict).to_string(),
            image_minimum: c.image.minimum,
            extremal: c.extremal(),
            extremality_nullity: c.extremality.map(|e| e.nullity),
            extremality_witness: c.extremality.map(|e| e.witness),
            tolerances: Tolerances::from_search(config),
        }
    }
}

/// Report of the generate -> transform -> classify round trip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundtripFile {
    pub params: [f64; 4],
    pub seed: u64,
    pub cond_max: f64,
    pub expected_canonical: [f64; 4],
    pub recovered_canonical: [f64; 4],
    pub relative_error: f64,
    pub residuals: ResidualsFile,
    pub passed: bool,
    pub tolerances: Tolerances,
}
