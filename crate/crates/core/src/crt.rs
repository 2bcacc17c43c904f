//! Chinese-remainder merge of mod-3 and mod-10 residues into mod-30 residues.
//!
//! Only the `(3, 10)` pair is implemented. For coprime moduli `m₁, m₂` the
//! same construction uses coefficients `c₁ = m₂·(m₂⁻¹ mod m₁)` and
//! `c₂ = m₁·(m₁⁻¹ mod m₂)`; with `m₁ = 3`, `m₂ = 10` that gives `10·1` and
//! `3·7 = 21`.

use crate::error::{PciError, Result};

/// Coefficient on the mod-3 residue: `≡ 1 (mod 3)` and `≡ 0 (mod 10)`.
pub const COEFF_MOD3: u32 = 10;
/// Coefficient on the mod-10 residue: `≡ 0 (mod 3)` and `≡ 1 (mod 10)`.
pub const COEFF_MOD10: u32 = 21;

/// Per-cell residues in `0..30`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mod30Assignment {
    r30: Vec<u8>,
}

impl Mod30Assignment {
    pub fn new(r30: Vec<u8>) -> Result<Self> {
        if let Some((cell, &value)) = r30.iter().enumerate().find(|(_, &v)| v >= 30) {
            return Err(PciError::ResidueOutOfRange { cell, value: value as usize, modulus: 30 });
        }
        Ok(Self { r30 })
    }

    pub fn values(&self) -> &[u8] {
        &self.r30
    }

    pub fn into_values(self) -> Vec<u8> {
        self.r30
    }

    pub fn len(&self) -> usize {
        self.r30.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r30.is_empty()
    }
}

/// The unique `r ∈ ℤ₃₀` with `r ≡ a (mod 3)` and `r ≡ b (mod 10)`.
pub fn crt_pair(a: u8, b: u8) -> u8 {
    ((COEFF_MOD3 * a as u32 + COEFF_MOD10 * b as u32) % 30) as u8
}

pub fn crt_merge(r3: &[u8], r10: &[u8]) -> Result<Mod30Assignment> {
    if r3.len() != r10.len() {
        return Err(PciError::Dimension(format!("{} mod-3 and {} mod-10 residues", r3.len(), r10.len())));
    }
    let mut out = Vec::with_capacity(r3.len());
    for (cell, (&a, &b)) in r3.iter().zip(r10).enumerate() {
        if a >= 3 {
            return Err(PciError::ResidueOutOfRange { cell, value: a as usize, modulus: 3 });
        }
        if b >= 10 {
            return Err(PciError::ResidueOutOfRange { cell, value: b as usize, modulus: 10 });
        }
        out.push(crt_pair(a, b));
    }
    Ok(Mod30Assignment { r30: out })
}
