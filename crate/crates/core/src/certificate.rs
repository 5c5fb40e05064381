//! Serialized witnesses of nonincident point/block sets, bound to a design
//! by its digest.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::design::{Design, DIGEST_ALGORITHM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonincidenceCertificate {
    pub v: usize,
    pub digest_algorithm: String,
    pub design_digest: String,
    #[serde(rename = "Y")]
    pub points: Vec<usize>,
    #[serde(rename = "C")]
    pub blocks: Vec<usize>,
    #[serde(default)]
    pub meta: BTreeMap<String, Value>,
}

impl NonincidenceCertificate {
    /// Certificate for `points` and `blocks` of `design`; both lists are
    /// sorted and deduplicated.
    pub fn new(design: &Design, mut points: Vec<usize>, mut blocks: Vec<usize>) -> Self {
        points.sort_unstable();
        points.dedup();
        blocks.sort_unstable();
        blocks.dedup();
        NonincidenceCertificate {
            v: design.v(),
            digest_algorithm: DIGEST_ALGORITHM.to_string(),
            design_digest: design.digest(),
            points,
            blocks,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    /// The square size this certificate witnesses, `min(|Y|, |C|)`.
    pub fn claimed_s(&self) -> usize {
        self.points.len().min(self.blocks.len())
    }

    pub fn is_square(&self) -> bool {
        self.points.len() == self.blocks.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Result of checking a certificate against a design it is bound to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertificateCheck {
    pub s: usize,
    pub t: usize,
    pub square: bool,
    /// Every `(point, block)` pair of the certificate that is incident.
    pub incidences: Vec<(usize, usize)>,
    pub accepted: bool,
}

/// Checks that no certified point lies on any certified block.
///
/// Refuses (with an error) a certificate bound to a different design or
/// carrying out-of-range indices. With `require_square`, `|Y| = |C|` is also
/// demanded.
pub fn verify_certificate(
    design: &Design,
    cert: &NonincidenceCertificate,
    require_square: bool,
) -> Result<CertificateCheck> {
    if cert.digest_algorithm != DIGEST_ALGORITHM {
        return Err(Error::UnsupportedDigest(cert.digest_algorithm.clone()));
    }
    if cert.v != design.v() {
        return Err(Error::OrderMismatch {
            certificate: cert.v,
            design: design.v(),
        });
    }
    let actual = design.digest();
    if cert.design_digest != actual {
        return Err(Error::DigestMismatch {
            expected: cert.design_digest.clone(),
            actual,
        });
    }

    let y = design.point_mask(&cert.points)?;
    let mut incidences = Vec::new();
    for &b in &cert.blocks {
        if b >= design.num_blocks() {
            return Err(Error::BlockOutOfRange {
                index: b,
                blocks: design.num_blocks(),
            });
        }
        let mask = design.block_mask(b);
        if !mask.is_disjoint(&y) {
            incidences.extend(
                design
                    .block(b)
                    .iter()
                    .filter(|&&p| y.contains(p))
                    .map(|&p| (p, b)),
            );
        }
    }
    let square = cert.is_square();
    let nonempty = !cert.points.is_empty() && !cert.blocks.is_empty();
    let distinct = y.count() == cert.points.len() && {
        let mut c = cert.blocks.clone();
        c.sort_unstable();
        c.dedup();
        c.len() == cert.blocks.len()
    };
    let accepted = incidences.is_empty() && nonempty && distinct && (square || !require_square);
    Ok(CertificateCheck {
        s: cert.points.len(),
        t: cert.blocks.len(),
        square,
        incidences,
        accepted,
    })
}
