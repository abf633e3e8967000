//! Reversible encoding between arbitrary bytes and the 94-character
//! printable-ASCII alphabet ('!' through '~', space excluded).
//!
//! Each 4-byte group, read big-endian as a 32-bit value, becomes 5 base-94
//! digits, most significant first. A trailing partial group of n bytes is
//! zero-padded, encoded, and truncated to n+1 digits; decoding fills the
//! missing digits with the maximum digit ('~') and keeps the first n bytes,
//! so truncation is exact for any radix below 256.

use thiserror::Error;

/// Number of distinct digit characters.
pub const RADIX: u32 = 94;

const FIRST: u8 = b'!'; // 0x21
const LAST: u8 = b'~'; // 0x7E

const POW: [u64; 5] = [
    94 * 94 * 94 * 94,
    94 * 94 * 94,
    94 * 94,
    94,
    1,
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("character at position {position} is outside the base-94 alphabet")]
    BadChar { position: usize },
    #[error("encoded length {len} is invalid: length mod 5 cannot be 1")]
    BadLength { len: usize },
    #[error("base-94 group value overflows 32 bits")]
    Overflow,
}

/// True for characters in the encoding alphabet (excludes space).
pub fn in_alphabet(byte: u8) -> bool {
    (FIRST..=LAST).contains(&byte)
}

/// Character carrying digit value `d` (0..94).
pub fn digit_char(d: u8) -> char {
    debug_assert!((d as u32) < RADIX);
    (FIRST + d) as char
}

fn char_digit(byte: u8) -> Option<u64> {
    in_alphabet(byte).then(|| (byte - FIRST) as u64)
}

/// Encoded text length for `n` payload bytes.
pub fn encoded_len(n: usize) -> usize {
    5 * (n / 4) + if n % 4 == 0 { 0 } else { n % 4 + 1 }
}

/// Largest payload byte count whose encoding fits in `capacity` characters.
pub fn max_payload(capacity: usize) -> usize {
    let full = capacity / 5;
    match capacity % 5 {
        0 | 1 => 4 * full,
        rem => 4 * full + rem - 1,
    }
}

/// Encodes bytes as base-94 text.
pub fn b94_encode(data: &[u8]) -> String {
    let mut out = String::with_capacity(encoded_len(data.len()));
    let mut chunks = data.chunks_exact(4);
    for chunk in &mut chunks {
        let v = u32::from_be_bytes(chunk.try_into().unwrap()) as u64;
        for p in POW {
            out.push(digit_char((v / p % 94) as u8));
        }
    }
    let rem = chunks.remainder();
    if !rem.is_empty() {
        let mut padded = [0u8; 4];
        padded[..rem.len()].copy_from_slice(rem);
        let v = u32::from_be_bytes(padded) as u64;
        for p in &POW[..rem.len() + 1] {
            out.push(digit_char((v / p % 94) as u8));
        }
    }
    out
}

/// Decodes base-94 text back to bytes; inverse of [`b94_encode`].
pub fn b94_decode(text: &str) -> Result<Vec<u8>, CodecError> {
    let bytes = text.as_bytes();
    if bytes.len() % 5 == 1 {
        return Err(CodecError::BadLength { len: bytes.len() });
    }
    let mut digits = Vec::with_capacity(bytes.len());
    for (position, &b) in bytes.iter().enumerate() {
        digits.push(char_digit(b).ok_or(CodecError::BadChar { position })?);
    }

    let mut out = Vec::with_capacity(bytes.len() / 5 * 4 + 4);
    let mut groups = digits.chunks_exact(5);
    for group in &mut groups {
        out.extend_from_slice(&group_value(group)?.to_be_bytes());
    }
    let rem = groups.remainder();
    if !rem.is_empty() {
        let mut filled = [93u64; 5];
        filled[..rem.len()].copy_from_slice(rem);
        let v = group_value(&filled)?;
        out.extend_from_slice(&v.to_be_bytes()[..rem.len() - 1]);
    }
    Ok(out)
}

fn group_value(digits: &[u64]) -> Result<u32, CodecError> {
    let v: u64 = digits.iter().zip(POW).map(|(d, p)| d * p).sum();
    u32::try_from(v).map_err(|_| CodecError::Overflow)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_fixed_vectors() {
        assert_eq!(b94_encode(&[]), "");
        assert_eq!(b94_encode(&[0, 0, 0, 0]), "!!!!!");
        assert_eq!(b94_encode(&[0x00]), "!!");
        assert_eq!(b94_encode(&[0xFF, 0xFF, 0xFF, 0xFF]), "X\"\"|J");
        assert_eq!(b94_encode(b"hello"), "7IeZo8q");
        assert_eq!(b94_encode(&[1, 2, 3]), "!5B^");
    }

    #[test]
    fn decode_fixed_vectors() {
        assert_eq!(b94_decode("").unwrap(), Vec::<u8>::new());
        assert_eq!(b94_decode("!!!!!").unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(b94_decode("!!").unwrap(), vec![0x00]);
        assert_eq!(b94_decode("7IeZo8q").unwrap(), b"hello");
    }

    #[test]
    fn decode_rejects_bad_input() {
        assert_eq!(
            b94_decode("ab cd"),
            Err(CodecError::BadChar { position: 2 })
        );
        assert_eq!(b94_decode("abcdef"), Err(CodecError::BadLength { len: 6 }));
        // 94^5 - 1 exceeds u32::MAX, both as a full group and as a filled partial
        assert_eq!(b94_decode("~~~~~"), Err(CodecError::Overflow));
        assert_eq!(b94_decode("~~"), Err(CodecError::Overflow));
    }

    #[test]
    fn length_formulas() {
        assert_eq!(encoded_len(0), 0);
        assert_eq!(encoded_len(4), 5);
        assert_eq!(encoded_len(6), 8);
        assert_eq!(max_payload(43), 34);
        for n in 0..=512 {
            assert_eq!(b94_encode(&vec![0xA7; n]).len(), encoded_len(n));
        }
        for capacity in 0..=256 {
            let n = max_payload(capacity);
            assert!(encoded_len(n) <= capacity);
            assert!(encoded_len(n + 1) > capacity);
        }
    }

    #[test]
    fn round_trip_small_lengths() {
        let mut data = Vec::new();
        for n in 0..=64u8 {
            data.push(n.wrapping_mul(37).wrapping_add(11));
            let enc = b94_encode(&data);
            assert!(enc.bytes().all(in_alphabet));
            assert_eq!(b94_decode(&enc).unwrap(), data);
        }
    }
}
