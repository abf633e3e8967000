//! Segment maps, payload injection, coordinate-driven extraction, and
//! integrity verification.
//!
//! A segment map designates half-open, pairwise-disjoint ranges of linear
//! cell indices, each with an expected display color and an ordering rank.
//! Embedding seals the payload with ChaCha20-Poly1305 (the canonical AAD
//! string binds label, dimensions, ranges, colors, and ranks), encodes the
//! ciphertext in base-94, writes it across the segments in rank order, and
//! fills leftover segment cells with key-derived camouflage characters.

use thiserror::Error;

use crate::canvas::{Canvas, CanvasError, LinearIndex};
use crate::codec94::{self, CodecError};
use crate::cryptobox::{
    self, CryptoError, DatasetContext, MasterKey, NONCE_LEN, SALT_LEN, TAG_LEN,
};
use crate::manifest::Manifest;

use rand::rngs::OsRng;
use rand::TryRngCore;
use serde::{Deserialize, Serialize};

/// Fraction of modified rows above which decorative damage counts as significant.
pub const DEFAULT_ROW_THRESHOLD: f64 = 0.10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StegoError {
    #[error("segment map is empty")]
    EmptyMap,
    #[error("segments {0} and {1} overlap")]
    Overlap(u64, u64),
    #[error("segment {0} is out of canvas bounds")]
    OutOfBounds(u64),
    #[error("segment {0} has an invalid color (expected lowercase #rrggbb)")]
    BadColor(u64),
    #[error("duplicate segment seq {0}")]
    DuplicateSeq(u64),
    #[error("payload needs {needed} segment cells but only {available} are available")]
    CapacityExceeded { needed: usize, available: usize },
    #[error("canvas is {found_width}x{found_height} but manifest expects {expected_width}x{expected_height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        found_width: usize,
        found_height: usize,
    },
    #[error("refusing to extract in strict mode: canvas verdict is {0}")]
    IntegrityRefusal(Verdict),
    #[error("invalid manifest: {0}")]
    BadManifest(String),
    #[error(transparent)]
    Canvas(#[from] CanvasError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// A contiguous half-open range [start, end) of linear cell indices with an
/// expected display color and ordering rank.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub color: String,
    pub seq: u64,
}

impl Segment {
    /// Hex colors are normalized to lowercase here.
    pub fn new(start: usize, end: usize, color: &str, seq: u64) -> Self {
        Segment {
            start,
            end,
            color: color.to_ascii_lowercase(),
            seq,
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> impl Iterator<Item = LinearIndex> {
        (self.start..self.end).map(LinearIndex)
    }
}

fn is_valid_color(color: &str) -> bool {
    let b = color.as_bytes();
    b.len() == 7
        && b[0] == b'#'
        && b[1..]
            .iter()
            .all(|c| c.is_ascii_digit() || (b'a'..=b'f').contains(c))
}

/// Segments ordered by seq rank; the rank order is the payload reading order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentMap {
    segments: Vec<Segment>,
}

impl SegmentMap {
    /// Sorts by seq rank and normalizes colors to lowercase.
    pub fn new(mut segments: Vec<Segment>) -> Self {
        segments.sort_by_key(|s| s.seq);
        for seg in &mut segments {
            seg.color.make_ascii_lowercase();
        }
        SegmentMap { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn iter(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter()
    }

    /// Total number of payload-bearing cells.
    pub fn capacity(&self) -> usize {
        self.segments.iter().map(Segment::len).sum()
    }

    /// All segment cell indices in rank order, ascending within each segment.
    pub fn indices(&self) -> impl Iterator<Item = LinearIndex> + '_ {
        self.segments.iter().flat_map(Segment::indices)
    }

    /// Checks every map invariant against a canvas of `cells` total cells.
    pub fn validate_cells(&self, cells: usize) -> Result<(), StegoError> {
        if self.segments.is_empty() {
            return Err(StegoError::EmptyMap);
        }
        for pair in self.segments.windows(2) {
            if pair[0].seq == pair[1].seq {
                return Err(StegoError::DuplicateSeq(pair[0].seq));
            }
        }
        for seg in &self.segments {
            if !is_valid_color(&seg.color) {
                return Err(StegoError::BadColor(seg.seq));
            }
            if seg.start >= seg.end || seg.end > cells {
                return Err(StegoError::OutOfBounds(seg.seq));
            }
        }
        let mut by_start: Vec<&Segment> = self.segments.iter().collect();
        by_start.sort_by_key(|s| s.start);
        for pair in by_start.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(StegoError::Overlap(pair[0].seq, pair[1].seq));
            }
        }
        Ok(())
    }

    /// [`SegmentMap::validate_cells`] against a concrete canvas.
    pub fn validate(&self, canvas: &Canvas) -> Result<(), StegoError> {
        self.validate_cells(canvas.cell_count())
    }

    /// Parses the map file format: `{"segments":[{"start":..,"end":..,"color":"#rrggbb","seq":..}]}`.
    pub fn from_json(text: &str) -> Result<Self, StegoError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct MapFile {
            segments: Vec<Segment>,
        }
        let file: MapFile =
            serde_json::from_str(text).map_err(|e| StegoError::BadManifest(e.to_string()))?;
        Ok(SegmentMap::new(file.segments))
    }
}

/// The exact byte string authenticated by the AEAD and mixed into key
/// derivation: label, canvas dimensions, and every segment's range, color,
/// and rank.
pub fn canonical_aad(label: &str, width: usize, height: usize, map: &SegmentMap) -> String {
    use std::fmt::Write;
    let mut out = format!("v1|{label}|{width}x{height}|");
    for seg in map.iter() {
        write!(out, "{},{},{},{};", seg.start, seg.end, seg.color, seg.seq).unwrap();
    }
    out
}

/// Integrity classification of a canvas against its manifest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Clean,
    DecorativeModified,
    SignificantlyModified,
    SegmentTampered,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Clean => "Clean",
            Verdict::DecorativeModified => "DecorativeModified",
            Verdict::SignificantlyModified => "SignificantlyModified",
            Verdict::SegmentTampered => "SegmentTampered",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrityReport {
    pub verdict: Verdict,
    pub modified_row_ratio: f64,
    /// Seq ranks of segments whose digests do not match.
    pub mismatched_segments: Vec<u64>,
}

/// Seals `plaintext` and injects it into the canvas at the map's segments.
///
/// Salt and nonce are drawn from the OS RNG unless overridden. Returns the
/// stego canvas and the offline manifest with its digest hierarchy computed
/// over the finished canvas.
pub fn embed(
    canvas: &Canvas,
    map: &SegmentMap,
    mk: &MasterKey,
    label: &str,
    plaintext: &[u8],
    salt_override: Option<[u8; SALT_LEN]>,
    nonce_override: Option<[u8; NONCE_LEN]>,
) -> Result<(Canvas, Manifest), StegoError> {
    map.validate(canvas)?;
    let available = map.capacity();
    let needed = codec94::encoded_len(plaintext.len() + TAG_LEN);
    if needed > available {
        return Err(StegoError::CapacityExceeded { needed, available });
    }

    let salt = match salt_override {
        Some(s) => s,
        None => random_bytes()?,
    };
    let nonce = match nonce_override {
        Some(n) => n,
        None => random_bytes()?,
    };

    let aad = canonical_aad(label, canvas.width(), canvas.height(), map);
    let ctx = DatasetContext::new(salt, label, nonce, aad.clone())?;
    let keys = cryptobox::derive_keys(mk, &ctx)?;

    let ciphertext = cryptobox::seal(keys.data_key(), &nonce, plaintext, aad.as_bytes());
    let encoded = codec94::b94_encode(&ciphertext);
    let padding = cryptobox::pad_chars(keys.pad_secret(), available - encoded.len());

    let assignments: Vec<(LinearIndex, char)> = map
        .indices()
        .zip(encoded.chars().chain(padding.chars()))
        .collect();
    let stego = canvas.set_chars(&assignments)?;

    let manifest = Manifest::for_canvas(&stego, map.clone(), label, salt, nonce, ciphertext.len());
    Ok((stego, manifest))
}

fn random_bytes<const N: usize>() -> Result<[u8; N], StegoError> {
    let mut buf = [0u8; N];
    OsRng
        .try_fill_bytes(&mut buf)
        .map_err(|e| StegoError::BadManifest(format!("OS RNG unavailable: {e}")))?;
    Ok(buf)
}

/// Reads the payload back out of a stego canvas.
///
/// Always verifies first; in strict mode any non-clean verdict refuses
/// extraction. Otherwise decorative damage is tolerated and the AEAD decides
/// whether the payload itself survived.
pub fn extract(
    canvas: &Canvas,
    manifest: &Manifest,
    mk: &MasterKey,
    strict: bool,
) -> Result<(Vec<u8>, IntegrityReport), StegoError> {
    let report = verify(canvas, manifest)?;
    if strict && report.verdict != Verdict::Clean {
        return Err(StegoError::IntegrityRefusal(report.verdict));
    }

    let enc_len = codec94::encoded_len(manifest.ct_len);
    let mut encoded = String::with_capacity(enc_len);
    for index in manifest.segments.indices().take(enc_len) {
        encoded.push(canvas.char_at(index)?);
    }
    let ciphertext = codec94::b94_decode(&encoded)?;

    let aad = canonical_aad(
        &manifest.label,
        manifest.width,
        manifest.height,
        &manifest.segments,
    );
    let ctx = DatasetContext::new(manifest.salt, &manifest.label, manifest.nonce, aad.clone())?;
    let keys = cryptobox::derive_keys(mk, &ctx)?;
    let plaintext = cryptobox::open(keys.data_key(), &manifest.nonce, &ciphertext, aad.as_bytes())?;
    Ok((plaintext, report))
}

/// Classifies a canvas against the manifest digest hierarchy using
/// [`DEFAULT_ROW_THRESHOLD`].
pub fn verify(canvas: &Canvas, manifest: &Manifest) -> Result<IntegrityReport, StegoError> {
    verify_with_threshold(canvas, manifest, DEFAULT_ROW_THRESHOLD)
}

/// Whole-canvas digest match is clean. Otherwise any segment-digest mismatch
/// is segment tampering; else the fraction of changed rows decides between
/// decorative and significant modification.
pub fn verify_with_threshold(
    canvas: &Canvas,
    manifest: &Manifest,
    row_threshold: f64,
) -> Result<IntegrityReport, StegoError> {
    if canvas.width() != manifest.width || canvas.height() != manifest.height {
        return Err(StegoError::DimensionMismatch {
            expected_width: manifest.width,
            expected_height: manifest.height,
            found_width: canvas.width(),
            found_height: canvas.height(),
        });
    }

    if cryptobox::digest(canvas.to_text().as_bytes()) == manifest.canvas_digest {
        return Ok(IntegrityReport {
            verdict: Verdict::Clean,
            modified_row_ratio: 0.0,
            mismatched_segments: Vec::new(),
        });
    }

    let mismatched_segments: Vec<u64> = manifest
        .segments
        .iter()
        .zip(&manifest.segment_digests)
        .filter(|(seg, expected)| {
            cryptobox::digest(&canvas.as_bytes()[seg.start..seg.end]) != **expected
        })
        .map(|(seg, _)| seg.seq)
        .collect();

    let modified_rows = (0..canvas.height())
        .zip(&manifest.row_digests)
        .filter(|(r, expected)| cryptobox::row_digest(canvas.row_bytes(*r)) != **expected)
        .count();
    let modified_row_ratio = modified_rows as f64 / canvas.height() as f64;

    let verdict = if !mismatched_segments.is_empty() {
        Verdict::SegmentTampered
    } else if modified_row_ratio <= row_threshold {
        Verdict::DecorativeModified
    } else {
        Verdict::SignificantlyModified
    };
    Ok(IntegrityReport {
        verdict,
        modified_row_ratio,
        mismatched_segments,
    })
}
