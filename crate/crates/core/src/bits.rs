//! Random-access oracle bit strings.
//!
//! A [`BitSource`] answers `bit_at(j)` for any index `j`. Pseudo-random
//! sources recompute the relevant SplitMix64 word on demand, so access is
//! O(1) and needs no mutable state. Finite sources (explicit literals and
//! files) report [`Error::PrefixExhausted`] past their end.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Output word `index` (0-based) of SplitMix64 seeded with `seed`.
pub fn splitmix64_word(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Serializable description of a bit source.
///
/// JSON forms: `{"prng":{"seed":42}}`, `{"file":"eps.bits"}`,
/// `{"literal":"ones"}`, `{"literal":"zeros"}`, `{"literal":"0110"}`,
/// `{"cycle":"01"}` and `{"complement":{...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitDescriptor {
    Prng { seed: u64 },
    File(String),
    Literal(String),
    Cycle(String),
    Complement(Box<BitDescriptor>),
}

impl BitDescriptor {
    pub fn prng(seed: u64) -> Self {
        BitDescriptor::Prng { seed }
    }

    pub fn ones() -> Self {
        BitDescriptor::Literal("ones".into())
    }

    pub fn zeros() -> Self {
        BitDescriptor::Literal("zeros".into())
    }

    pub fn complement(self) -> Self {
        match self {
            BitDescriptor::Complement(inner) => *inner,
            d => BitDescriptor::Complement(Box::new(d)),
        }
    }
}

/// Short command-line form: `prng:42`, `literal:ones`, `literal:0110`,
/// `cycle:01`, `file:PATH`, `not:<descriptor>`. A bare JSON object is also
/// accepted.
impl FromStr for BitDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Invalid(format!("bits descriptor: {e}")));
        }
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Invalid(format!("bits descriptor `{s}` has no `kind:` prefix")))?;
        match kind {
            "prng" => arg
                .parse::<u64>()
                .map(BitDescriptor::prng)
                .map_err(|_| Error::Invalid(format!("bad prng seed `{arg}`"))),
            "literal" => Ok(BitDescriptor::Literal(arg.to_string())),
            "cycle" => Ok(BitDescriptor::Cycle(arg.to_string())),
            "file" => Ok(BitDescriptor::File(arg.to_string())),
            "not" => Ok(BitDescriptor::Complement(Box::new(arg.parse()?))),
            _ => Err(Error::Invalid(format!("unknown bits kind `{kind}`"))),
        }
    }
}

impl fmt::Display for BitDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitDescriptor::Prng { seed } => write!(f, "prng:{seed}"),
            BitDescriptor::File(p) => write!(f, "file:{p}"),
            BitDescriptor::Literal(l) => write!(f, "literal:{l}"),
            BitDescriptor::Cycle(c) => write!(f, "cycle:{c}"),
            BitDescriptor::Complement(d) => write!(f, "not:{d}"),
        }
    }
}

#[derive(Debug, Clone)]
enum Access {
    Prng(u64),
    Constant(bool),
    Finite(Arc<[bool]>),
    Cycle(Arc<[bool]>),
    Complement(Box<Access>),
}

impl Access {
    fn bit(&self, j: u64) -> Result<bool> {
        match self {
            Access::Prng(seed) => Ok((splitmix64_word(*seed, j / 64) >> (j % 64)) & 1 == 1),
            Access::Constant(b) => Ok(*b),
            Access::Finite(bits) => usize::try_from(j)
                .ok()
                .and_then(|i| bits.get(i).copied())
                .ok_or(Error::PrefixExhausted { index: j }),
            Access::Cycle(bits) => Ok(bits[(j % bits.len() as u64) as usize]),
            Access::Complement(inner) => inner.bit(j).map(|b| !b),
        }
    }
}

fn parse_bit_string(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Invalid(format!("unexpected character {c:?} in bit string"))),
        })
        .collect()
}

/// A random-access oracle string standing in for an infinite binary
/// sequence. Cloning is cheap; all variants are immutable.
#[derive(Debug, Clone)]
pub struct BitSource {
    descriptor: BitDescriptor,
    access: Access,
}

impl BitSource {
    pub fn new(descriptor: &BitDescriptor) -> Result<Self> {
        let access = Self::access_for(descriptor)?;
        Ok(BitSource { descriptor: descriptor.clone(), access })
    }

    fn access_for(descriptor: &BitDescriptor) -> Result<Access> {
        Ok(match descriptor {
            BitDescriptor::Prng { seed } => Access::Prng(*seed),
            BitDescriptor::Literal(l) => match l.as_str() {
                "ones" => Access::Constant(true),
                "zeros" => Access::Constant(false),
                explicit => Access::Finite(parse_bit_string(explicit)?.into()),
            },
            BitDescriptor::Cycle(c) => {
                let bits = parse_bit_string(c)?;
                if bits.is_empty() {
                    return Err(Error::Invalid("cycle pattern is empty".into()));
                }
                Access::Cycle(bits.into())
            }
            BitDescriptor::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::BitSourceUnavailable(format!("{path}: {e}")))?;
                Access::Finite(parse_bit_string(&text)?.into())
            }
            BitDescriptor::Complement(inner) => Access::Complement(Box::new(Self::access_for(inner)?)),
        })
    }

    pub fn prng(seed: u64) -> Self {
        BitSource { descriptor: BitDescriptor::prng(seed), access: Access::Prng(seed) }
    }

    pub fn ones() -> Self {
        BitSource { descriptor: BitDescriptor::ones(), access: Access::Constant(true) }
    }

    pub fn zeros() -> Self {
        BitSource { descriptor: BitDescriptor::zeros(), access: Access::Constant(false) }
    }

    /// Finite explicit prefix, e.g. `"01"`; reading past it fails.
    pub fn literal(pattern: &str) -> Result<Self> {
        Self::new(&BitDescriptor::Literal(pattern.to_string()))
    }

    /// Periodic string repeating `pattern` forever.
    pub fn cycle(pattern: &str) -> Result<Self> {
        Self::new(&BitDescriptor::Cycle(pattern.to_string()))
    }

    pub fn descriptor(&self) -> &BitDescriptor {
        &self.descriptor
    }

    pub fn bit_at(&self, j: u64) -> Result<bool> {
        self.access.bit(j)
    }

    /// Pointwise complement; complementing twice yields the original.
    pub fn complement(&self) -> BitSource {
        let access = match &self.access {
            Access::Complement(inner) => (**inner).clone(),
            a => Access::Complement(Box::new(a.clone())),
        };
        BitSource { descriptor: self.descriptor.clone().complement(), access }
    }

    /// Number of readable bits, or `None` for infinite sources.
    pub fn len(&self) -> Option<u64> {
        fn go(a: &Access) -> Option<u64> {
            match a {
                Access::Finite(b) => Some(b.len() as u64),
                Access::Complement(inner) => go(inner),
                _ => None,
            }
        }
        go(&self.access)
    }
}

/// Free-function form of [`BitSource::bit_at`].
pub fn bit_at(src: &BitSource, j: u64) -> Result<bool> {
    src.bit_at(j)
}

/// Free-function form of [`BitSource::complement`].
pub fn complement(src: &BitSource) -> BitSource {
    src.complement()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_vector() {
        assert_eq!(splitmix64_word(0, 0), 0xE220_A839_7B1D_CDAF);
        assert!(BitSource::prng(0).bit_at(0).unwrap());
        assert!(!BitSource::prng(0).complement().bit_at(0).unwrap());
    }

    #[test]
    fn bit_order_is_lsb_first_within_words() {
        let src = BitSource::prng(0);
        let w0 = splitmix64_word(0, 0);
        let w1 = splitmix64_word(0, 1);
        for j in 0..64 {
            assert_eq!(src.bit_at(j).unwrap(), (w0 >> j) & 1 == 1);
            assert_eq!(src.bit_at(64 + j).unwrap(), (w1 >> j) & 1 == 1);
        }
    }

    #[test]
    fn literals() {
        assert!(!BitSource::zeros().bit_at(12345).unwrap());
        assert!(BitSource::zeros().complement().bit_at(7).unwrap());
        let two = BitSource::literal("01").unwrap();
        assert!(!two.bit_at(0).unwrap());
        assert!(two.bit_at(1).unwrap());
        assert_eq!(two.bit_at(2), Err(Error::PrefixExhausted { index: 2 }));
        assert_eq!(two.complement().bit_at(2), Err(Error::PrefixExhausted { index: 2 }));
        let cyc = BitSource::cycle("01").unwrap();
        assert!(!cyc.bit_at(100).unwrap());
        assert!(cyc.bit_at(101).unwrap());
    }

    #[test]
    fn descriptor_forms() {
        let cases = [
            ("prng:42", r#"{"prng":{"seed":42}}"#),
            ("literal:ones", r#"{"literal":"ones"}"#),
            ("file:eps.bits", r#"{"file":"eps.bits"}"#),
            ("not:cycle:01", r#"{"complement":{"cycle":"01"}}"#),
        ];
        for (short, json) in cases {
            let d: BitDescriptor = short.parse().unwrap();
            assert_eq!(serde_json::to_string(&d).unwrap(), json);
            assert_eq!(d.to_string(), short);
            assert_eq!(json.parse::<BitDescriptor>().unwrap(), d);
        }
        assert!("bogus".parse::<BitDescriptor>().is_err());
        assert!("literal:012".parse::<BitDescriptor>().and_then(|d| BitSource::new(&d)).is_err());
    }

    #[test]
    fn file_source_skips_whitespace() {
        let dir = std::env::temp_dir().join(format!("fraisse-bits-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("eps.bits");
        std::fs::write(&path, "10 1\n1\t0\n").unwrap();
        let src = BitSource::new(&BitDescriptor::File(path.display().to_string())).unwrap();
        let got: Vec<bool> = (0..5).map(|j| src.bit_at(j).unwrap()).collect();
        assert_eq!(got, [true, false, true, true, false]);
        assert_eq!(src.bit_at(5), Err(Error::PrefixExhausted { index: 5 }));
        assert_eq!(src.len(), Some(5));
        let missing = BitSource::new(&BitDescriptor::File(dir.join("nope").display().to_string()));
        assert!(matches!(missing, Err(Error::BitSourceUnavailable(_))));
    }

    #[test]
    fn prng_frequency_smoke() {
        for seed in 0..10 {
            let src = BitSource::prng(seed);
            let ones = (0..10_000).filter(|&j| src.bit_at(j).unwrap()).count();
            let freq = ones as f64 / 10_000.0;
            assert!((0.47..=0.53).contains(&freq), "seed {seed}: {freq}");
        }
    }
}
