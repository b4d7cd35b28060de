//! Deterministic instance generation and a self-describing on-disk format.
//!
//! An instance file is four lines: a magic line, a JSON header, and the
//! base64-encoded little-endian bytes of A (row-major) and b. Keeping the
//! exact bit patterns in the payload means a written instance reloads with
//! identical arithmetic behavior on any platform.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{DenseMatrix, LassoInstance, Vector};
use crate::rng::{SplitMix64, GENERATOR_NAME};

pub const FILE_MAGIC: &str = "GIPSA-LASSO v1";

/// Recipe for a random instance: A has iid centered Gaussian entries with
/// variance `sigma2`, the planted signal has `nnz` standard-normal entries at
/// uniformly chosen coordinates, and b = A x0 exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    /// Dimension (columns of A).
    pub n: usize,
    /// Rows of A.
    pub m: usize,
    pub rho: f64,
    /// Nonzeros in the planted signal.
    pub nnz: usize,
    /// Variance of each entry of A.
    pub sigma2: f64,
    pub seed: u64,
}

impl GenSpec {
    /// The full-size benchmark configuration.
    pub fn full_scale(seed: u64) -> Self {
        Self {
            n: 2000,
            m: 1000,
            rho: 0.1,
            nnz: 260,
            sigma2: 0.01,
            seed,
        }
    }

    /// Same shape at a tenth the linear size, for fast repeated trials.
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            n: 200,
            m: 100,
            rho: 0.1,
            nnz: 26,
            sigma2: 0.01,
            seed,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidParameter {
                name: "n/m",
                value: 0.0,
                constraint: "positive dimensions",
            });
        }
        if self.nnz > self.n {
            return Err(Error::InvalidParameter {
                name: "nnz",
                value: self.nnz as f64,
                constraint: "nnz <= n",
            });
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: self.rho,
                constraint: "rho > 0",
            });
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma2",
                value: self.sigma2,
                constraint: "sigma2 > 0",
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub instance: LassoInstance,
    /// The planted signal x0 with b = A x0. Not the minimizer, but the
    /// sparsity the problem is built around.
    pub planted: Vec<f64>,
    pub spec: GenSpec,
}

/// Deterministic generation: one stream seeded from `spec.seed` fills A
/// row-major, then picks the support by partial Fisher-Yates, then draws the
/// planted values in support order. Any change to this draw order would
/// silently re-key every seed, so it is pinned by tests.
pub fn generate_instance(spec: &GenSpec) -> Result<GeneratedInstance> {
    spec.check()?;
    let mut rng = SplitMix64::new(spec.seed);
    let sigma = spec.sigma2.sqrt();
    let data: Vec<f64> = (0..spec.m * spec.n)
        .map(|_| sigma * rng.next_standard_normal())
        .collect();
    let a = DenseMatrix::new(spec.m, spec.n, data)?;

    let mut idx: Vec<usize> = (0..spec.n).collect();
    for i in 0..spec.nnz {
        let j = i + rng.next_index(spec.n - i);
        idx.swap(i, j);
    }
    let mut planted = vec![0.0; spec.n];
    for &slot in idx.iter().take(spec.nnz) {
        planted[slot] = rng.next_standard_normal();
    }

    let b = a.matvec(&planted);
    let instance = LassoInstance::new(a, Vector::new(b)?, spec.rho)?;
    Ok(GeneratedInstance {
        instance,
        planted,
        spec: *spec,
    })
}

/// Header line of an instance file. Generation fields are carried when known
/// so a file is reproducible from its recipe alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub m: usize,
    pub n: usize,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nnz: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub payload: String,
}

impl InstanceMeta {
    pub fn from_gen_spec(spec: &GenSpec) -> Self {
        Self {
            m: spec.m,
            n: spec.n,
            rho: spec.rho,
            seed: Some(spec.seed),
            nnz: Some(spec.nnz),
            sigma2: Some(spec.sigma2),
            generator: Some(GENERATOR_NAME.to_string()),
            payload: "base64".to_string(),
        }
    }

    pub fn bare(inst: &LassoInstance) -> Self {
        Self {
            m: inst.num_rows(),
            n: inst.num_cols(),
            rho: inst.rho(),
            seed: None,
            nnz: None,
            sigma2: None,
            generator: None,
            payload: "base64".to_string(),
        }
    }
}

fn f64s_to_bytes(vals: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(vals.len() * 8);
    for v in vals {
        out.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    out
}

fn bytes_to_f64s(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Format(
            "payload length is not a multiple of 8".into(),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())))
        .collect())
}

fn decode_payload(kind: &str, line: &str) -> Result<Vec<u8>> {
    match kind {
        "base64" => BASE64
            .decode(line.trim())
            .map_err(|e| Error::Format(format!("bad base64 payload: {e}"))),
        "hex" => {
            let t = line.trim();
            if !t.len().is_multiple_of(2) {
                return Err(Error::Format("odd-length hex payload".into()));
            }
            (0..t.len() / 2)
                .map(|i| {
                    u8::from_str_radix(&t[2 * i..2 * i + 2], 16)
                        .map_err(|e| Error::Format(format!("bad hex payload: {e}")))
                })
                .collect()
        }
        other => Err(Error::Format(format!("unknown payload encoding '{other}'"))),
    }
}

/// Serializes an instance to the four-line text format.
pub fn instance_to_string(inst: &LassoInstance, meta: &InstanceMeta) -> Result<String> {
    if meta.m != inst.num_rows() || meta.n != inst.num_cols() {
        return Err(Error::DimensionMismatch {
            expected: inst.num_rows() * inst.num_cols(),
            got: meta.m * meta.n,
        });
    }
    if meta.payload != "base64" {
        return Err(Error::Format(
            "only base64 payloads are written; hex is read-only".into(),
        ));
    }
    let header = serde_json::to_string(meta)?;
    let a64 = BASE64.encode(f64s_to_bytes(inst.a().data()));
    let b64 = BASE64.encode(f64s_to_bytes(inst.b()));
    Ok(format!("{FILE_MAGIC}\n{header}\n{a64}\n{b64}\n"))
}

/// Parses the four-line text format back into an instance.
pub fn instance_from_str(text: &str) -> Result<(LassoInstance, InstanceMeta)> {
    let mut lines = text.lines();
    let magic = lines
        .next()
        .ok_or_else(|| Error::Format("empty instance file".into()))?;
    if magic.trim() != FILE_MAGIC {
        return Err(Error::Format(format!(
            "bad magic line '{}', expected '{FILE_MAGIC}'",
            magic.trim()
        )));
    }
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let meta: InstanceMeta =
        serde_json::from_str(header_line).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    let a_line = lines
        .next()
        .ok_or_else(|| Error::Format("missing matrix payload".into()))?;
    let b_line = lines
        .next()
        .ok_or_else(|| Error::Format("missing right-hand-side payload".into()))?;
    let a_vals = bytes_to_f64s(&decode_payload(&meta.payload, a_line)?)?;
    let b_vals = bytes_to_f64s(&decode_payload(&meta.payload, b_line)?)?;
    if a_vals.len() != meta.m * meta.n {
        return Err(Error::Format(format!(
            "matrix payload holds {} values, header says {}x{}",
            a_vals.len(),
            meta.m,
            meta.n
        )));
    }
    if b_vals.len() != meta.m {
        return Err(Error::Format(format!(
            "right-hand side holds {} values, header says {}",
            b_vals.len(),
            meta.m
        )));
    }
    let a = DenseMatrix::new(meta.m, meta.n, a_vals)?;
    let inst = LassoInstance::new(a, Vector::new(b_vals)?, meta.rho)?;
    Ok((inst, meta))
}

pub fn write_instance_file(path: &Path, inst: &LassoInstance, meta: &InstanceMeta) -> Result<()> {
    fs::write(path, instance_to_string(inst, meta)?)?;
    Ok(())
}

pub fn read_instance_file(path: &Path) -> Result<(LassoInstance, InstanceMeta)> {
    instance_from_str(&fs::read_to_string(path)?)
}
