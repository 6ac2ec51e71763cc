//! The `EDAV` vector file: magic, u16 version, u32 dimension, u64 count,
//! then per record a u16-prefixed UTF-8 id and `dim` little-endian f32.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::codec::{DecodeError, Reader, Writer};

pub const MAGIC: [u8; 4] = *b"EDAV";
pub const VERSION: u16 = 1;

pub fn encode<'a, I>(dim: usize, records: I) -> Vec<u8>
where
    I: IntoIterator<Item = (&'a str, &'a [f32])>,
    I::IntoIter: ExactSizeIterator,
{
    let records = records.into_iter();
    let mut w = Writer::new();
    w.bytes(&MAGIC).u16(VERSION).u32(dim as u32).u64(records.len() as u64);
    for (id, v) in records {
        debug_assert_eq!(v.len(), dim);
        w.str16(id);
        for &x in v {
            w.f32(x);
        }
    }
    w.finish()
}

/// Vectors keyed by id, in file order.
pub type Records = Vec<(String, Vec<f32>)>;

/// Parses a vector file. Non-finite values and repeated ids are rejected.
pub fn decode(data: &[u8]) -> Result<(usize, Records), DecodeError> {
    let mut r = Reader::new(data);
    r.magic(MAGIC)?;
    let version = r.u16()?;
    if version != VERSION {
        return Err(DecodeError::UnsupportedVersion(version));
    }
    let dim = r.u32()? as usize;
    let count = r.u64()?;
    // Each record needs at least its length prefix and payload.
    let min_record = 2 + 4 * dim as u64;
    if count.saturating_mul(min_record) > r.remaining() as u64 {
        return Err(DecodeError::Truncated);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id = r.str16()?;
        let mut v = Vec::with_capacity(dim);
        for _ in 0..dim {
            let x = r.f32()?;
            if !x.is_finite() {
                return Err(DecodeError::Invalid("non-finite vector entry"));
            }
            v.push(x);
        }
        if !seen.insert(id.clone()) {
            return Err(DecodeError::Invalid("duplicate vector id"));
        }
        out.push((id, v));
    }
    r.expect_end()?;
    Ok((dim, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sample() -> Vec<(String, Vec<f32>)> {
        (0..3).map(|i| (alloc::format!("nb:{i:04}"), (0..8).map(|j| (i * 8 + j) as f32 * 0.5 - 3.0).collect())).collect()
    }

    fn bytes_of(dim: usize, recs: &[(String, Vec<f32>)]) -> Vec<u8> {
        encode(dim, recs.iter().map(|(id, v)| (id.as_str(), v.as_slice())))
    }

    #[test]
    fn three_vectors_of_width_eight() {
        let recs = sample();
        let (dim, back) = decode(&bytes_of(8, &recs)).unwrap();
        assert_eq!(dim, 8);
        assert_eq!(back, recs);
    }

    #[test]
    fn exact_layout() {
        let bytes = bytes_of(1, &[("ab".into(), vec![1.0])]);
        let mut want = b"EDAV".to_vec();
        want.extend_from_slice(&1u16.to_le_bytes());
        want.extend_from_slice(&1u32.to_le_bytes());
        want.extend_from_slice(&1u64.to_le_bytes());
        want.extend_from_slice(&2u16.to_le_bytes());
        want.extend_from_slice(b"ab");
        want.extend_from_slice(&1.0f32.to_le_bytes());
        assert_eq!(bytes, want);
    }

    #[test]
    fn nan_is_rejected() {
        let mut recs = sample();
        recs[1].1[3] = f32::NAN;
        assert_eq!(decode(&bytes_of(8, &recs)).unwrap_err(), DecodeError::Invalid("non-finite vector entry"));
    }

    #[test]
    fn damaged_files() {
        let bytes = bytes_of(8, &sample());
        assert_eq!(decode(&bytes[..bytes.len() - 2]).unwrap_err(), DecodeError::Truncated);
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(decode(&longer), Err(DecodeError::Invalid(_))));
        assert!(matches!(decode(b"EDAT"), Err(DecodeError::BadMagic { .. })));
        let dup = vec![("x".to_string(), vec![0.0]), ("x".to_string(), vec![1.0])];
        assert_eq!(decode(&bytes_of(1, &dup)).unwrap_err(), DecodeError::Invalid("duplicate vector id"));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(bits in proptest::collection::vec(any::<u32>(), 0..40), dim in 1usize..5) {
            let vals: Vec<f32> = bits.iter().map(|&b| f32::from_bits(b)).filter(|x| x.is_finite()).collect();
            let recs: Vec<(String, Vec<f32>)> = vals
                .chunks_exact(dim)
                .enumerate()
                .map(|(i, c)| (alloc::format!("id{i}"), c.to_vec()))
                .collect();
            let (d, back) = decode(&bytes_of(dim, &recs)).unwrap();
            prop_assert_eq!(d, dim);
            prop_assert_eq!(back.len(), recs.len());
            for ((ia, va), (ib, vb)) in back.iter().zip(&recs) {
                prop_assert_eq!(ia, ib);
                let a: Vec<u32> = va.iter().map(|x| x.to_bits()).collect();
                let b: Vec<u32> = vb.iter().map(|x| x.to_bits()).collect();
                prop_assert_eq!(a, b);
            }
        }
    }

    use alloc::string::ToString;
}
