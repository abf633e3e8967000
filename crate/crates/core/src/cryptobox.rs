//! Key derivation, authenticated encryption, digests, and the key-derived
//! camouflage stream that fills unused segment cells.
//!
//! Per-dataset keys come from HKDF-SHA-256: the master key is extracted with
//! the dataset salt, then expanded twice with domain-separated info strings.
//! The color/segment material (the canonical AAD string) is mixed into the
//! data-key derivation, so a wrong color means a wrong key.

use std::fmt;

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use rand::rngs::OsRng;
use rand::TryRngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec94::digit_char;

pub const MASTER_KEY_LEN: usize = 32;
pub const SALT_LEN: usize = 16;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
pub const MAX_LABEL_LEN: usize = 64;

const INFO_DATA: &[u8] = b"ascii-stego/v1/data";
const INFO_PAD: &[u8] = b"ascii-stego/v1/pad";
const INFO_FILL: &[u8] = b"fill";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("label must be printable ASCII and at most {MAX_LABEL_LEN} bytes")]
    BadLabel,
    #[error("authentication failed: ciphertext, key, nonce, or associated data do not match")]
    AuthenticationFailed,
    #[error("invalid key: {0}")]
    BadKey(String),
}

/// The 32-byte master secret. Never serialized into manifests or canvases.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKey([u8; MASTER_KEY_LEN]);

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterKey(..)")
    }
}

impl MasterKey {
    pub fn from_bytes(bytes: [u8; MASTER_KEY_LEN]) -> Self {
        MasterKey(bytes)
    }

    /// Draws a fresh key from the operating system RNG.
    pub fn generate() -> Self {
        let mut bytes = [0u8; MASTER_KEY_LEN];
        OsRng
            .try_fill_bytes(&mut bytes)
            .expect("operating system RNG unavailable");
        MasterKey(bytes)
    }

    /// Parses the key-file format: 64 hex characters, optional trailing newline.
    pub fn from_hex(text: &str) -> Result<Self, CryptoError> {
        let trimmed = text.strip_suffix('\n').unwrap_or(text);
        let bytes = hex::decode(trimmed).map_err(|e| CryptoError::BadKey(e.to_string()))?;
        let bytes: [u8; MASTER_KEY_LEN] = bytes
            .try_into()
            .map_err(|_| CryptoError::BadKey("expected 64 hex characters".into()))?;
        Ok(MasterKey(bytes))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn as_bytes(&self) -> &[u8; MASTER_KEY_LEN] {
        &self.0
    }
}

/// Everything that scopes one embedded dataset: salt, label, nonce, and the
/// canonical color/segment string mixed into key derivation.
#[derive(Clone, Debug)]
pub struct DatasetContext {
    salt: [u8; SALT_LEN],
    label: String,
    nonce: [u8; NONCE_LEN],
    color_string: String,
}

impl DatasetContext {
    pub fn new(
        salt: [u8; SALT_LEN],
        label: &str,
        nonce: [u8; NONCE_LEN],
        color_string: String,
    ) -> Result<Self, CryptoError> {
        validate_label(label)?;
        Ok(DatasetContext {
            salt,
            label: label.to_owned(),
            nonce,
            color_string,
        })
    }

    pub fn salt(&self) -> &[u8; SALT_LEN] {
        &self.salt
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn nonce(&self) -> &[u8; NONCE_LEN] {
        &self.nonce
    }

    pub fn color_string(&self) -> &str {
        &self.color_string
    }
}

pub fn validate_label(label: &str) -> Result<(), CryptoError> {
    let ok = label.len() <= MAX_LABEL_LEN
        && label.bytes().all(crate::canvas::is_printable);
    ok.then_some(()).ok_or(CryptoError::BadLabel)
}

/// Per-dataset keys: one for the AEAD, one for the camouflage stream.
#[derive(Clone, PartialEq, Eq)]
pub struct DerivedKeys {
    data_key: [u8; 32],
    pad_secret: [u8; 32],
}

impl fmt::Debug for DerivedKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DerivedKeys(..)")
    }
}

impl DerivedKeys {
    pub fn data_key(&self) -> &[u8; 32] {
        &self.data_key
    }

    pub fn pad_secret(&self) -> &[u8; 32] {
        &self.pad_secret
    }
}

/// Derives the per-dataset keys.
///
/// `data_key = HKDF-Expand(HKDF-Extract(salt, mk), "ascii-stego/v1/data" || label || color_string)`
/// `pad_secret = HKDF-Expand(HKDF-Extract(salt, mk), "ascii-stego/v1/pad" || label)`
pub fn derive_keys(mk: &MasterKey, ctx: &DatasetContext) -> Result<DerivedKeys, CryptoError> {
    validate_label(&ctx.label)?;
    let hk = Hkdf::<Sha256>::new(Some(&ctx.salt), mk.as_bytes());

    let mut info = Vec::with_capacity(INFO_DATA.len() + ctx.label.len() + ctx.color_string.len());
    info.extend_from_slice(INFO_DATA);
    info.extend_from_slice(ctx.label.as_bytes());
    info.extend_from_slice(ctx.color_string.as_bytes());
    let mut data_key = [0u8; 32];
    hk.expand(&info, &mut data_key).expect("32 bytes fits");

    info.clear();
    info.extend_from_slice(INFO_PAD);
    info.extend_from_slice(ctx.label.as_bytes());
    let mut pad_secret = [0u8; 32];
    hk.expand(&info, &mut pad_secret).expect("32 bytes fits");

    Ok(DerivedKeys {
        data_key,
        pad_secret,
    })
}

/// ChaCha20-Poly1305 encryption; output is ciphertext with the 16-byte tag appended.
pub fn seal(key: &[u8; 32], nonce: &[u8; NONCE_LEN], plaintext: &[u8], aad: &[u8]) -> Vec<u8> {
    ChaCha20Poly1305::new(&Key::from(*key))
        .encrypt(
            &Nonce::from(*nonce),
            Payload {
                msg: plaintext,
                aad,
            },
        )
        .expect("in-memory encryption cannot fail")
}

/// Inverse of [`seal`]; fails if any bit of ciphertext, key, nonce, or AAD differs.
pub fn open(
    key: &[u8; 32],
    nonce: &[u8; NONCE_LEN],
    ciphertext: &[u8],
    aad: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    ChaCha20Poly1305::new(&Key::from(*key))
        .decrypt(
            &Nonce::from(*nonce),
            Payload {
                msg: ciphertext,
                aad,
            },
        )
        .map_err(|_| CryptoError::AuthenticationFailed)
}

/// SHA-256.
pub fn digest(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

/// First 8 bytes of SHA-256; used for the per-row digest list.
pub fn row_digest(data: &[u8]) -> [u8; 8] {
    digest(data)[..8].try_into().unwrap()
}

/// Deterministic printable camouflage characters derived from `pad_secret`.
///
/// Byte `i` of the expanded stream selects alphabet character `stream[i] % 94`.
pub fn pad_chars(pad_secret: &[u8; 32], n: usize) -> String {
    expand_stream(pad_secret, INFO_FILL, n)
        .into_iter()
        .map(|b| digit_char(b % 94))
        .collect()
}

/// HKDF-Expand with `pad_secret` as the PRK. The single-byte block counter
/// wraps, so streams longer than the RFC 5869 limit of 255 blocks stay
/// defined; within the limit the output is bit-identical to HKDF-Expand.
fn expand_stream(prk: &[u8; 32], info: &[u8], n: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(n);
    let mut block: Vec<u8> = Vec::new();
    let mut counter: u8 = 1;
    while out.len() < n {
        let mut mac =
            <Hmac<Sha256> as KeyInit>::new_from_slice(prk).expect("HMAC accepts 32-byte keys");
        mac.update(&block);
        mac.update(info);
        mac.update(&[counter]);
        block = mac.finalize().into_bytes().to_vec();
        let take = block.len().min(n - out.len());
        out.extend_from_slice(&block[..take]);
        counter = counter.wrapping_add(1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec94::in_alphabet;

    fn fixed_ctx(color_string: &str) -> DatasetContext {
        DatasetContext::new([0u8; SALT_LEN], "L", [0u8; NONCE_LEN], color_string.into()).unwrap()
    }

    #[test]
    fn derive_keys_is_deterministic() {
        let mk = MasterKey::from_bytes([0x0b; 32]);
        let a = derive_keys(&mk, &fixed_ctx("v1|x")).unwrap();
        let b = derive_keys(&mk, &fixed_ctx("v1|x")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn color_material_separates_data_keys() {
        let mk = MasterKey::from_bytes([0x0b; 32]);
        let a = derive_keys(&mk, &fixed_ctx("#87ceeb")).unwrap();
        let b = derive_keys(&mk, &fixed_ctx("#87ceea")).unwrap();
        assert_ne!(a.data_key(), b.data_key());
        // the pad stream does not depend on colors
        assert_eq!(a.pad_secret(), b.pad_secret());
    }

    #[test]
    fn derive_keys_fixed_vector() {
        // frozen from an independent HKDF-SHA-256 computation
        let mk = MasterKey::from_bytes([0x0b; 32]);
        let keys = derive_keys(&mk, &fixed_ctx("")).unwrap();
        assert_eq!(
            hex::encode(keys.data_key()),
            "ec893c56951a16c39896a72b731afb09e0026ed2c1d121eec130910e0946d80b"
        );
        assert_eq!(
            hex::encode(keys.pad_secret()),
            "e710c7aa851ee495c50003da2ab21519a25b2622f0e5f1627e64096a5f7fdab7"
        );
        assert_ne!(keys.data_key(), keys.pad_secret());
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(validate_label("shipment 42").is_ok());
        assert_eq!(validate_label("a\tb"), Err(CryptoError::BadLabel));
        assert_eq!(validate_label(&"x".repeat(65)), Err(CryptoError::BadLabel));
    }

    #[test]
    fn seal_open_round_trip() {
        let key = [7u8; 32];
        let nonce = [9u8; NONCE_LEN];
        let ct = seal(&key, &nonce, b"", b"aad");
        assert_eq!(ct.len(), TAG_LEN);
        assert_eq!(open(&key, &nonce, &ct, b"aad").unwrap(), b"");

        let ct = seal(&key, &nonce, b"payload", b"aad");
        assert_eq!(ct.len(), 7 + TAG_LEN);
        assert_eq!(open(&key, &nonce, &ct, b"aad").unwrap(), b"payload");
        assert_eq!(
            open(&key, &nonce, &ct, b"aae"),
            Err(CryptoError::AuthenticationFailed)
        );
        let mut tampered = ct.clone();
        tampered[3] ^= 0x01;
        assert_eq!(
            open(&key, &nonce, &tampered, b"aad"),
            Err(CryptoError::AuthenticationFailed)
        );
    }

    #[test]
    fn digest_fixed_values() {
        assert_eq!(
            hex::encode(digest(b"")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(row_digest(b"abc")[..], digest(b"abc")[..8]);
    }

    #[test]
    fn pad_chars_stays_in_alphabet() {
        let secret = [0x42u8; 32];
        assert_eq!(pad_chars(&secret, 0), "");
        let long = pad_chars(&secret, 100_000);
        assert_eq!(long.len(), 100_000);
        assert!(long.bytes().all(in_alphabet));
        assert_eq!(pad_chars(&secret, 100), long[..100].to_owned());
    }

    #[test]
    fn pad_chars_fixed_vector() {
        // pad_secret from the fixed derive_keys vector, frozen independently
        let secret: [u8; 32] =
            hex::decode("e710c7aa851ee495c50003da2ab21519a25b2622f0e5f1627e64096a5f7fdab7")
                .unwrap()
                .try_into()
                .unwrap();
        assert_eq!(pad_chars(&secret, 8), "?)kF/9Lb");
    }

    #[test]
    fn expand_stream_matches_hkdf_within_rfc_limit() {
        let prk = [0x42u8; 32];
        for n in [1usize, 31, 32, 33, 500, 8160] {
            let manual = expand_stream(&prk, b"fill", n);
            let mut reference = vec![0u8; n];
            Hkdf::<Sha256>::from_prk(&prk)
                .unwrap()
                .expand(b"fill", &mut reference)
                .unwrap();
            assert_eq!(manual, reference, "length {n}");
        }
    }

    #[test]
    fn key_file_round_trip() {
        let mk = MasterKey::generate();
        let hex = mk.to_hex();
        assert_eq!(hex.len(), 64);
        assert_eq!(MasterKey::from_hex(&hex).unwrap(), mk);
        assert_eq!(MasterKey::from_hex(&format!("{hex}\n")).unwrap(), mk);
        assert!(MasterKey::from_hex("abcd").is_err());
        assert!(MasterKey::from_hex(&"zz".repeat(32)).is_err());
    }
}
