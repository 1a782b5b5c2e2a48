//! Fixed 16-byte semantic frame.
//!
//! | bytes  | content                                                     |
//! |--------|-------------------------------------------------------------|
//! | 0      | version, 0x01                                               |
//! | 1      | bits 0-1 decision, bits 2-7 zero                            |
//! | 2..5   | group tag offsets, widths 3,3,2,2,2,2,2,2,3, LSB first; top 3 bits zero |
//! | 5      | bits 0-3 independent-tag mask, bits 4-7 zero                |
//! | 6      | speed (m/s)                                                 |
//! | 7      | buffer (%)                                                  |
//! | 8..11  | serving, target, neighbor BS ids                            |
//! | 11..13 | serving RSRP, u16 LE, round((rsrp + 130) / 0.25)            |
//! | 13..15 | target RSRP, same quantization                              |
//! | 15     | xor of bytes 0..15                                          |

use serde::Serialize;
use thiserror::Error;

use crate::post::Assessment;
use crate::scenario::Scenario;
use crate::schema::{DecisionClass, GroupTags, IndependentTags, TagGroup, NUM_GROUPS};

pub const WIRE_LEN: usize = 16;
pub const WIRE_VERSION: u8 = 0x01;
pub const RSRP_STEP: f64 = 0.25;
pub const RSRP_FLOOR: f64 = -130.0;
pub const RSRP_CEIL: f64 = -50.0;

const GROUP_BITS: [u32; NUM_GROUPS] = [3, 3, 2, 2, 2, 2, 2, 2, 3];
const GROUP_FIELD_BITS: u32 = 21;
const MAX_RSRP_CODE: u16 = ((RSRP_CEIL - RSRP_FLOOR) / RSRP_STEP) as u16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WireError {
    #[error("{field} = {value} cannot be encoded")]
    Encode { field: &'static str, value: String },
    #[error("frame is {0} bytes, expected {WIRE_LEN}")]
    Length(usize),
    #[error("unsupported frame version {0:#04x}")]
    Version(u8),
    #[error("reserved bits set in byte {0}")]
    Reserved(usize),
    #[error("checksum mismatch: frame says {stored:#04x}, computed {computed:#04x}")]
    Checksum { stored: u8, computed: u8 },
    #[error("{field} = {value} is not a legal value")]
    Field { field: &'static str, value: u32 },
}

/// Fields recovered from a frame beyond the assessment itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioDigest {
    pub speed: u32,
    pub buffer: u32,
    pub serving_id: u32,
    pub target_id: u32,
    pub neighbor_id: u32,
    pub serving_rsrp: f64,
    pub target_rsrp: f64,
}

fn enc_err(field: &'static str, value: impl ToString) -> WireError {
    WireError::Encode {
        field,
        value: value.to_string(),
    }
}

fn byte(field: &'static str, v: u32, min: u32, max: u32) -> Result<u8, WireError> {
    if (min..=max).contains(&v) {
        Ok(v as u8)
    } else {
        Err(enc_err(field, v))
    }
}

pub fn quantize_rsrp(field: &'static str, rsrp: f64) -> Result<u16, WireError> {
    if !(RSRP_FLOOR..=RSRP_CEIL).contains(&rsrp) {
        return Err(enc_err(field, rsrp));
    }
    Ok(((rsrp - RSRP_FLOOR) / RSRP_STEP).round() as u16)
}

pub fn dequantize_rsrp(code: u16) -> f64 {
    RSRP_FLOOR + code as f64 * RSRP_STEP
}

fn xor(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

pub fn encode(a: &Assessment, s: &Scenario) -> Result<[u8; WIRE_LEN], WireError> {
    let mut w = [0u8; WIRE_LEN];
    w[0] = WIRE_VERSION;
    w[1] = a.decision.index() as u8;

    let mut packed = 0u32;
    let mut shift = 0;
    for (offset, bits) in a.groups.offsets().iter().zip(GROUP_BITS) {
        packed |= (*offset as u32) << shift;
        shift += bits;
    }
    w[2..5].copy_from_slice(&packed.to_le_bytes()[..3]);
    w[5] = a.independents.bits();

    w[6] = byte("speed", s.speed, 0, 255)?;
    w[7] = byte("buffer", s.buffer, 0, 100)?;
    w[8] = byte("serving.bs_id", s.serving.bs_id, 1, 255)?;
    w[9] = byte("target.bs_id", s.target.bs_id, 1, 255)?;
    w[10] = byte("neighbor.bs_id", s.neighbor.bs_id, 1, 255)?;
    w[11..13].copy_from_slice(&quantize_rsrp("serving.rsrp", s.serving.rsrp)?.to_le_bytes());
    w[13..15].copy_from_slice(&quantize_rsrp("target.rsrp", s.target.rsrp)?.to_le_bytes());
    w[15] = xor(&w[..15]);
    Ok(w)
}

pub fn decode(wire: &[u8]) -> Result<(Assessment, ScenarioDigest), WireError> {
    if wire.len() != WIRE_LEN {
        return Err(WireError::Length(wire.len()));
    }
    let computed = xor(&wire[..15]);
    if computed != wire[15] {
        return Err(WireError::Checksum {
            stored: wire[15],
            computed,
        });
    }
    if wire[0] != WIRE_VERSION {
        return Err(WireError::Version(wire[0]));
    }
    if wire[1] & !0b11 != 0 {
        return Err(WireError::Reserved(1));
    }
    if wire[4] >> 5 != 0 {
        return Err(WireError::Reserved(4));
    }
    if wire[5] & 0xF0 != 0 {
        return Err(WireError::Reserved(5));
    }

    let decision = DecisionClass::from_index(wire[1] as usize).expect("two bits");
    let packed = u32::from_le_bytes([wire[2], wire[3], wire[4], 0]);
    let mut offsets = [0usize; NUM_GROUPS];
    let mut shift = 0;
    for (g, bits) in GROUP_BITS.iter().enumerate() {
        let v = (packed >> shift) & ((1 << bits) - 1);
        if v as usize >= TagGroup::ALL[g].size() {
            return Err(WireError::Field {
                field: "group tag",
                value: v,
            });
        }
        offsets[g] = v as usize;
        shift += bits;
    }
    debug_assert_eq!(shift, GROUP_FIELD_BITS);
    let groups = GroupTags::from_offsets(offsets).expect("offsets checked");
    let independents = IndependentTags::from_bits(wire[5]).expect("reserved bits checked");

    let field = |name: &'static str, v: u8, min: u8, max: u8| {
        if (min..=max).contains(&v) {
            Ok(v as u32)
        } else {
            Err(WireError::Field {
                field: name,
                value: v as u32,
            })
        }
    };
    let rsrp = |name: &'static str, lo: u8, hi: u8| {
        let code = u16::from_le_bytes([lo, hi]);
        if code > MAX_RSRP_CODE {
            Err(WireError::Field {
                field: name,
                value: code as u32,
            })
        } else {
            Ok(dequantize_rsrp(code))
        }
    };
    let digest = ScenarioDigest {
        speed: wire[6] as u32,
        buffer: field("buffer", wire[7], 0, 100)?,
        serving_id: field("serving.bs_id", wire[8], 1, 255)?,
        target_id: field("target.bs_id", wire[9], 1, 255)?,
        neighbor_id: field("neighbor.bs_id", wire[10], 1, 255)?,
        serving_rsrp: rsrp("serving.rsrp", wire[11], wire[12])?,
        target_rsrp: rsrp("target.rsrp", wire[13], wire[14])?,
    };
    Ok((
        Assessment {
            decision,
            groups,
            independents,
        },
        digest,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::BsMeasurement;
    use crate::schema::Mission;

    fn minimal() -> (Assessment, Scenario) {
        let m = |id| BsMeasurement {
            bs_id: id,
            rsrp: -130.0,
            rsrq: -25.0,
            cqi: 1,
        };
        let a = Assessment {
            decision: DecisionClass::ExecuteOptimal,
            groups: GroupTags::from_offsets([0; 9]).unwrap(),
            independents: IndependentTags::empty(),
        };
        let s = Scenario {
            speed: 0,
            buffer: 0,
            mission: Mission::LowLatency,
            serving: m(1),
            target: m(2),
            neighbor: m(3),
        };
        (a, s)
    }

    #[test]
    fn zero_index_frame() {
        let (a, s) = minimal();
        let w = encode(&a, &s).unwrap();
        assert_eq!(w[0], 1);
        assert_eq!(&w[1..6], &[0; 5]);
        assert_eq!(&w[6..15], &[0, 0, 1, 2, 3, 0, 0, 0, 0]);
        // version 1, then bs ids 1, 2, 3
        assert_eq!(w[15], [1u8, 1, 2, 3].iter().fold(0, |a, b| a ^ b));
        let (b, d) = decode(&w).unwrap();
        assert_eq!(b, a);
        assert_eq!(d.serving_rsrp, -130.0);
    }

    #[test]
    fn packs_widest_offsets() {
        let (mut a, s) = minimal();
        a.decision = DecisionClass::QuestionConflict;
        a.groups = GroupTags::from_offsets([4, 4, 2, 2, 2, 2, 2, 2, 4]).unwrap();
        a.independents = IndependentTags::from_bits(0b1111).unwrap();
        let w = encode(&a, &s).unwrap();
        // 4 | 4<<3 | 2<<6 | 2<<8 | ... | 4<<18
        let expected: u32 = 4 | 4 << 3 | 2 << 6 | 2 << 8 | 2 << 10 | 2 << 12 | 2 << 14 | 2 << 16 | 4 << 18;
        assert_eq!(u32::from_le_bytes([w[2], w[3], w[4], 0]), expected);
        assert_eq!(w[1], 3);
        assert_eq!(w[5], 0x0F);
        assert_eq!(decode(&w).unwrap().0, a);
    }

    #[test]
    fn distinct_decode_errors() {
        let (a, s) = minimal();
        let w = encode(&a, &s).unwrap();

        assert_eq!(decode(&w[..15]), Err(WireError::Length(15)));

        let mut bad = w;
        bad[3] ^= 0x10;
        assert!(matches!(decode(&bad), Err(WireError::Checksum { .. })));

        let mut bad = w;
        bad[0] = 0x02;
        bad[15] = xor(&bad[..15]);
        assert_eq!(decode(&bad), Err(WireError::Version(0x02)));

        let mut bad = w;
        bad[5] = 0x10;
        bad[15] = xor(&bad[..15]);
        assert_eq!(decode(&bad), Err(WireError::Reserved(5)));

        let mut bad = w;
        bad[4] = 0x80;
        bad[15] = xor(&bad[..15]);
        assert_eq!(decode(&bad), Err(WireError::Reserved(4)));

        let mut bad = w;
        bad[2] = 0x07; // target rsrp offset 7 in a five-tag group
        bad[15] = xor(&bad[..15]);
        assert!(matches!(decode(&bad), Err(WireError::Field { field: "group tag", value: 7 })));
    }

    #[test]
    fn encode_range_checks() {
        let (a, mut s) = minimal();
        s.buffer = 101;
        assert!(matches!(encode(&a, &s), Err(WireError::Encode { field: "buffer", .. })));
        let (a, mut s) = minimal();
        s.target.rsrp = -130.5;
        assert!(matches!(encode(&a, &s), Err(WireError::Encode { field: "target.rsrp", .. })));
        let (a, mut s) = minimal();
        s.serving.bs_id = 0;
        assert!(encode(&a, &s).is_err());
        let (a, mut s) = minimal();
        s.speed = 256;
        assert!(encode(&a, &s).is_err());
    }

    #[test]
    fn quantization_bounds() {
        assert_eq!(quantize_rsrp("x", -50.0).unwrap(), 320);
        assert_eq!(quantize_rsrp("x", -88.62).unwrap(), 166);
        assert_eq!(dequantize_rsrp(166), -88.5);
    }
}
