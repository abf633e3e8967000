//! The offline decryption metadata file.
//!
//! Serialized as a single compact JSON object with a fixed key order and
//! lowercase hex for all byte fields, so identical inputs always produce
//! byte-identical manifests. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::canvas::Canvas;
use crate::codec94;
use crate::cryptobox::{self, NONCE_LEN, SALT_LEN};
use crate::stego::{Segment, SegmentMap, StegoError};

pub const MANIFEST_VERSION: u32 = 1;

/// Everything an authorized party needs besides the master key: dimensions,
/// segment coordinates and colors, salt, nonce, ciphertext length, and the
/// digest hierarchy for tamper localization.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub version: u32,
    pub label: String,
    pub width: usize,
    pub height: usize,
    pub segments: SegmentMap,
    pub salt: [u8; SALT_LEN],
    pub nonce: [u8; NONCE_LEN],
    pub ct_len: usize,
    pub canvas_digest: [u8; 32],
    pub segment_digests: Vec<[u8; 32]>,
    pub row_digests: Vec<[u8; 8]>,
}

impl Manifest {
    /// Builds a manifest for a finished stego canvas, computing the whole-
    /// canvas, per-segment, and per-row digests.
    pub fn for_canvas(
        canvas: &Canvas,
        segments: SegmentMap,
        label: &str,
        salt: [u8; SALT_LEN],
        nonce: [u8; NONCE_LEN],
        ct_len: usize,
    ) -> Manifest {
        let canvas_digest = cryptobox::digest(canvas.to_text().as_bytes());
        let segment_digests = segments
            .iter()
            .map(|seg| cryptobox::digest(&canvas.as_bytes()[seg.start..seg.end]))
            .collect();
        let row_digests = (0..canvas.height())
            .map(|r| cryptobox::row_digest(canvas.row_bytes(r)))
            .collect();
        Manifest {
            version: MANIFEST_VERSION,
            label: label.to_owned(),
            width: canvas.width(),
            height: canvas.height(),
            segments,
            salt,
            nonce,
            ct_len,
            canvas_digest,
            segment_digests,
            row_digests,
        }
    }

    /// Canonical JSON form: compact, fixed key order, lowercase hex.
    pub fn to_json(&self) -> String {
        let wire = ManifestWire {
            version: self.version,
            label: self.label.clone(),
            width: self.width,
            height: self.height,
            segments: self.segments.segments().to_vec(),
            salt: hex::encode(self.salt),
            nonce: hex::encode(self.nonce),
            ct_len: self.ct_len,
            canvas_digest: hex::encode(self.canvas_digest),
            segment_digests: self.segment_digests.iter().map(hex::encode).collect(),
            row_digests: self.row_digests.iter().map(hex::encode).collect(),
        };
        serde_json::to_string(&wire).expect("manifest serialization cannot fail")
    }

    /// Parses and fully validates the canonical JSON form.
    pub fn from_json(text: &str) -> Result<Manifest, StegoError> {
        let bad = |field: &str| StegoError::BadManifest(field.to_owned());
        let wire: ManifestWire =
            serde_json::from_str(text).map_err(|e| StegoError::BadManifest(e.to_string()))?;

        if wire.version != MANIFEST_VERSION {
            return Err(bad("version"));
        }
        cryptobox::validate_label(&wire.label).map_err(|_| bad("label"))?;
        let salt: [u8; SALT_LEN] = decode_hex(&wire.salt).ok_or_else(|| bad("salt"))?;
        let nonce: [u8; NONCE_LEN] = decode_hex(&wire.nonce).ok_or_else(|| bad("nonce"))?;
        let canvas_digest: [u8; 32] =
            decode_hex(&wire.canvas_digest).ok_or_else(|| bad("canvas_digest"))?;
        let segment_digests: Vec<[u8; 32]> = wire
            .segment_digests
            .iter()
            .map(|h| decode_hex(h))
            .collect::<Option<_>>()
            .ok_or_else(|| bad("segment_digests"))?;
        let row_digests: Vec<[u8; 8]> = wire
            .row_digests
            .iter()
            .map(|h| decode_hex(h))
            .collect::<Option<_>>()
            .ok_or_else(|| bad("row_digests"))?;

        let segments = SegmentMap::new(wire.segments);
        let cells = wire
            .width
            .checked_mul(wire.height)
            .ok_or_else(|| bad("width"))?;
        segments
            .validate_cells(cells)
            .map_err(|e| StegoError::BadManifest(format!("segments: {e}")))?;
        if segment_digests.len() != segments.segments().len() {
            return Err(bad("segment_digests"));
        }
        if row_digests.len() != wire.height {
            return Err(bad("row_digests"));
        }
        if codec94::encoded_len(wire.ct_len) > segments.capacity() {
            return Err(bad("ct_len"));
        }

        Ok(Manifest {
            version: wire.version,
            label: wire.label,
            width: wire.width,
            height: wire.height,
            segments,
            salt,
            nonce,
            ct_len: wire.ct_len,
            canvas_digest,
            segment_digests,
            row_digests,
        })
    }
}

fn decode_hex<const N: usize>(text: &str) -> Option<[u8; N]> {
    let lowercase = text.bytes().all(|b| !b.is_ascii_uppercase());
    (lowercase && text.len() == 2 * N)
        .then(|| hex::decode(text).ok())
        .flatten()
        .and_then(|v| v.try_into().ok())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestWire {
    version: u32,
    label: String,
    width: usize,
    height: usize,
    segments: Vec<Segment>,
    salt: String,
    nonce: String,
    ct_len: usize,
    canvas_digest: String,
    segment_digests: Vec<String>,
    row_digests: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stego::Segment;

    fn sample() -> Manifest {
        let canvas = Canvas::parse("abcdefgh\nijklmnop").unwrap();
        let map = SegmentMap::new(vec![
            Segment::new(2, 7, "#87ceeb", 1),
            Segment::new(9, 12, "#ff0000", 2),
        ]);
        Manifest::for_canvas(&canvas, map, "L", [0xAB; SALT_LEN], [0xCD; NONCE_LEN], 4)
    }

    #[test]
    fn json_round_trip() {
        let manifest = sample();
        let json = manifest.to_json();
        assert_eq!(Manifest::from_json(&json).unwrap(), manifest);
    }

    #[test]
    fn json_key_order_is_fixed() {
        let json = sample().to_json();
        let keys = [
            "\"version\"",
            "\"label\"",
            "\"width\"",
            "\"height\"",
            "\"segments\"",
            "\"salt\"",
            "\"nonce\"",
            "\"ct_len\"",
            "\"canvas_digest\"",
            "\"segment_digests\"",
            "\"row_digests\"",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{json}");
        assert!(json.starts_with("{\"version\":1,\"label\":\"L\""));
    }

    #[test]
    fn rejects_wrong_version() {
        let json = sample().to_json().replacen("\"version\":1", "\"version\":2", 1);
        assert_eq!(
            Manifest::from_json(&json).unwrap_err(),
            StegoError::BadManifest("version".into())
        );
    }

    #[test]
    fn rejects_short_salt() {
        let manifest = sample();
        let json = manifest
            .to_json()
            .replace(&hex::encode(manifest.salt), &"ab".repeat(15));
        assert_eq!(
            Manifest::from_json(&json).unwrap_err(),
            StegoError::BadManifest("salt".into())
        );
    }

    #[test]
    fn rejects_unknown_and_missing_keys() {
        let json = sample().to_json().replacen("{\"version\"", "{\"extra\":0,\"version\"", 1);
        assert!(matches!(
            Manifest::from_json(&json),
            Err(StegoError::BadManifest(_))
        ));
        assert!(matches!(
            Manifest::from_json("{}"),
            Err(StegoError::BadManifest(_))
        ));
    }

    #[test]
    fn rejects_uppercase_hex() {
        let manifest = sample();
        let json = manifest
            .to_json()
            .replace(&hex::encode(manifest.salt), &hex::encode_upper(manifest.salt));
        assert_eq!(
            Manifest::from_json(&json).unwrap_err(),
            StegoError::BadManifest("salt".into())
        );
    }

    #[test]
    fn rejects_inconsistent_digest_counts() {
        let mut manifest = sample();
        manifest.row_digests.pop();
        assert_eq!(
            Manifest::from_json(&manifest.to_json()).unwrap_err(),
            StegoError::BadManifest("row_digests".into())
        );
    }

    #[test]
    fn rejects_oversized_ct_len() {
        let mut manifest = sample();
        manifest.ct_len = 100; // capacity is 8 cells
        assert!(matches!(
            Manifest::from_json(&manifest.to_json()),
            Err(StegoError::BadManifest(_))
        ));
    }
}
