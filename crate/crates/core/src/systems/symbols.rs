//! Deterministic binary symbol sources for shift-space fixtures.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::circle::rotate;
use crate::error::{domain, Result};

/// How a [`SymbolSource::BlockSequence`] sizes its blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockGrowth {
    /// Block j has length base^j.
    Geometric { base: u64 },
    /// Explicit block lengths; the last entry repeats forever.
    Lengths { lengths: Vec<u64> },
}

/// What an [`SymbolSource::Explicit`] word turns into after its last symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extension {
    /// Constant continuation.
    Fill { symbol: u8 },
    /// Repeat the word periodically.
    Cycle,
    /// Symbol k (k >= word length) is symbol `offset + k` of `source`.
    Continue {
        source: Arc<SymbolSource>,
        offset: u64,
    },
}

/// A one-sided binary sequence s_0 s_1 s_2 ... defined for every index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum SymbolSource {
    Constant {
        symbol: u8,
    },
    Periodic {
        word: String,
    },
    /// s_k = ⌊(k+1)α + x0⌋ − ⌊kα + x0⌋
    Sturmian {
        alpha: f64,
        x0: f64,
    },
    /// Block j (j = 0, 1, ...) has length g(j) and symbol j mod 2.
    BlockSequence {
        growth: BlockGrowth,
    },
    Explicit {
        word: String,
        extension: Extension,
    },
}

fn parse_word(word: &str) -> Result<()> {
    if word.is_empty() {
        return Err(domain("symbol word must be nonempty"));
    }
    if let Some(c) = word.chars().find(|c| *c != '0' && *c != '1') {
        return Err(domain(format!(
            "symbol word may only contain 0 and 1, found {c:?}"
        )));
    }
    Ok(())
}

fn check_symbol(s: u8) -> Result<()> {
    if s > 1 {
        return Err(domain(format!("binary symbol must be 0 or 1, got {s}")));
    }
    Ok(())
}

#[inline]
fn word_symbol(word: &str, i: usize) -> u8 {
    word.as_bytes()[i] - b'0'
}

impl SymbolSource {
    pub fn validate(&self) -> Result<()> {
        match self {
            SymbolSource::Constant { symbol } => check_symbol(*symbol),
            SymbolSource::Periodic { word } => parse_word(word),
            SymbolSource::Sturmian { alpha, x0 } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(domain(format!(
                        "Sturmian slope must lie in (0, 1), got {alpha}"
                    )));
                }
                if !x0.is_finite() {
                    return Err(domain("Sturmian intercept must be finite"));
                }
                Ok(())
            }
            SymbolSource::BlockSequence { growth } => match growth {
                BlockGrowth::Geometric { base } if *base >= 1 => Ok(()),
                BlockGrowth::Geometric { .. } => Err(domain("block growth base must be >= 1")),
                BlockGrowth::Lengths { lengths } => {
                    if lengths.is_empty() || lengths.contains(&0) {
                        Err(domain("block lengths must be nonempty and positive"))
                    } else {
                        Ok(())
                    }
                }
            },
            SymbolSource::Explicit { word, extension } => {
                parse_word(word)?;
                match extension {
                    Extension::Fill { symbol } => check_symbol(*symbol),
                    Extension::Cycle => Ok(()),
                    Extension::Continue { source, .. } => source.validate(),
                }
            }
        }
    }

    /// Symbol at index `k`.
    pub fn symbol(&self, k: u64) -> u8 {
        match self {
            SymbolSource::Constant { symbol } => *symbol,
            SymbolSource::Periodic { word } => word_symbol(word, (k % word.len() as u64) as usize),
            SymbolSource::Sturmian { alpha, x0 } => {
                // ⌊(k+1)α + x0⌋ − ⌊kα + x0⌋ = 1 exactly when frac(kα + x0) ≥ 1 − α
                let base = x0 - x0.floor();
                u8::from(rotate(base, k, *alpha) >= 1.0 - alpha)
            }
            SymbolSource::BlockSequence { growth } => (block_index(growth, k) % 2) as u8,
            SymbolSource::Explicit { word, extension } => {
                let len = word.len() as u64;
                if k < len {
                    return word_symbol(word, k as usize);
                }
                match extension {
                    Extension::Fill { symbol } => *symbol,
                    Extension::Cycle => word_symbol(word, (k % len) as usize),
                    Extension::Continue { source, offset } => source.symbol(offset + k),
                }
            }
        }
    }

    /// Symbols `offset .. offset + 64` packed most-significant-bit first.
    pub fn window(&self, offset: u64) -> u64 {
        (0..64).fold(0_u64, |w, i| (w << 1) | u64::from(self.symbol(offset + i)))
    }

    pub fn prefix(&self, offset: u64, len: usize) -> Vec<u8> {
        (0..len as u64).map(|i| self.symbol(offset + i)).collect()
    }
}

/// Index of the block containing position k.
pub(crate) fn block_index(growth: &BlockGrowth, k: u64) -> u64 {
    match growth {
        BlockGrowth::Geometric { base } => {
            if *base == 1 {
                return k;
            }
            let mut start = 0_u64;
            let mut len = 1_u64;
            let mut j = 0_u64;
            loop {
                let end = start.saturating_add(len);
                if k < end {
                    return j;
                }
                start = end;
                len = len.saturating_mul(*base);
                j += 1;
            }
        }
        BlockGrowth::Lengths { lengths } => {
            let mut start = 0_u64;
            for (j, &len) in lengths.iter().enumerate() {
                if k < start + len {
                    return j as u64;
                }
                start += len;
            }
            let last = *lengths.last().expect("validated nonempty");
            lengths.len() as u64 - 1 + (k - start) / last + 1
        }
    }
}
