// SPDX-License-Identifier: Apache-2.0

//! Width-exact unsigned bit vectors.
//!
//! Bit index `i` carries significance `2^i`. The textual form is MSB-first,
//! the same way Verilog prints a `[w-1:0]` vector: the first character of
//! `"1000"` is bit 3.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    width: usize,
    value: BigUint,
}

impl BitVector {
    pub fn new(width: usize, value: BigUint) -> Result<Self> {
        if width == 0 {
            return Err(Error::Invalid("bit vector width must be positive".into()));
        }
        if value.bits() > width as u64 {
            return Err(Error::Width {
                expected: width,
                actual: value.bits() as usize,
            });
        }
        Ok(Self { width, value })
    }

    pub fn from_u64(width: usize, value: u64) -> Result<Self> {
        Self::new(width, BigUint::from(value))
    }

    pub fn zero(width: usize) -> Result<Self> {
        Self::new(width, BigUint::zero())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    /// `None` when the value does not fit in 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        self.value.to_u64()
    }

    pub fn bit(&self, index: usize) -> bool {
        assert!(index < self.width, "bit index {index} out of range for width {}", self.width);
        self.value.bit(index as u64)
    }

    /// Copy with bit `index` inverted.
    pub fn with_bit_flipped(&self, index: usize) -> Self {
        assert!(index < self.width);
        let mut value = self.value.clone();
        let set = value.bit(index as u64);
        value.set_bit(index as u64, !set);
        Self { width: self.width, value }
    }

    /// 32-bit limbs, least-significant limb first, `ceil(width / 32)` of them.
    pub fn limbs32(&self) -> Vec<u32> {
        let mut limbs = self.value.to_u32_digits();
        limbs.resize(self.width.div_ceil(32), 0);
        limbs
    }

    /// Parse an MSB-first binary string, or a sized Verilog literal such as `4'b1000`.
    pub fn parse(text: &str, width: usize) -> Result<Self> {
        parse_bitvector(text, width)
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_bitvector(self))
    }
}

pub fn parse_bitvector(text: &str, width: usize) -> Result<BitVector> {
    if width == 0 {
        return Err(Error::Invalid("bit vector width must be positive".into()));
    }
    let digits: String = match text.split_once('\'') {
        Some((size, rest)) => {
            let size: usize = size
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad literal size in {text:?}")))?;
            let rest = rest.trim();
            let body = rest
                .strip_prefix(['b', 'B'])
                .ok_or_else(|| Error::Format(format!("only binary literals are supported: {text:?}")))?;
            let body: String = body.chars().filter(|&c| c != '_').collect();
            check_binary(&body, text)?;
            if size != width {
                return Err(Error::Width { expected: width, actual: size });
            }
            if body.len() != width {
                return Err(Error::Width { expected: width, actual: body.len() });
            }
            body
        }
        None => {
            check_binary(text, text)?;
            if text.len() != width {
                return Err(Error::Width { expected: width, actual: text.len() });
            }
            text.to_string()
        }
    };

    let mut value = BigUint::zero();
    for c in digits.bytes() {
        value <<= 1u32;
        if c == b'1' {
            value += BigUint::one();
        }
    }
    Ok(BitVector { width, value })
}

fn check_binary(body: &str, original: &str) -> Result<()> {
    if body.is_empty() {
        return Err(Error::Format(format!("empty bit string in {original:?}")));
    }
    if let Some(bad) = body.chars().find(|&c| c != '0' && c != '1') {
        return Err(Error::Format(format!("non-binary character {bad:?} in {original:?}")));
    }
    Ok(())
}

pub fn format_bitvector(bv: &BitVector) -> String {
    (0..bv.width)
        .rev()
        .map(|i| if bv.value.bit(i as u64) { '1' } else { '0' })
        .collect()
}
