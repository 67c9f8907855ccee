//! Admissible words over the obstacle alphabet and the horseshoe word
//! generator for the periodic families that accumulate on a homoclinic
//! orbit.

use crate::error::{Error, Result};
use std::fmt;

/// A finite word over the alphabet {1..m}; cyclic words label periodic
/// orbits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicWord {
    pub symbols: Vec<u8>,
    pub cyclic: bool,
}

impl SymbolicWord {
    pub fn cyclic(symbols: Vec<u8>) -> Self {
        SymbolicWord {
            symbols,
            cyclic: true,
        }
    }

    pub fn linear(symbols: Vec<u8>) -> Self {
        SymbolicWord {
            symbols,
            cyclic: false,
        }
    }

    /// Parse a digit string like "1213".
    pub fn parse(s: &str, cyclic: bool) -> Result<Self> {
        let mut symbols = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let d = ch
                .to_digit(10)
                .ok_or_else(|| Error::Validation(format!("bad word character {ch:?}")))?;
            if d == 0 {
                return Err(Error::Validation("obstacle labels start at 1".into()));
            }
            symbols.push(d as u8);
        }
        if symbols.is_empty() {
            return Err(Error::Validation("empty word".into()));
        }
        Ok(SymbolicWord { symbols, cyclic })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Admissible iff no two adjacent symbols coincide (wrapping around
    /// when cyclic) and all symbols lie in {1..m}.
    pub fn is_admissible(&self, m: usize) -> bool {
        if self.symbols.iter().any(|&s| s == 0 || s as usize > m) {
            return false;
        }
        let n = self.symbols.len();
        if n == 1 {
            return !self.cyclic;
        }
        for i in 0..n - 1 {
            if self.symbols[i] == self.symbols[i + 1] {
                return false;
            }
        }
        if self.cyclic && self.symbols[n - 1] == self.symbols[0] {
            return false;
        }
        true
    }

    pub fn rotated(&self, k: usize) -> SymbolicWord {
        assert!(self.cyclic);
        let n = self.symbols.len();
        SymbolicWord::cyclic((0..n).map(|i| self.symbols[(i + k) % n]).collect())
    }

    pub fn reversed(&self) -> SymbolicWord {
        let mut s = self.symbols.clone();
        s.reverse();
        SymbolicWord {
            symbols: s,
            cyclic: self.cyclic,
        }
    }

    pub fn repeated(&self, times: usize) -> SymbolicWord {
        let mut s = Vec::with_capacity(self.symbols.len() * times);
        for _ in 0..times {
            s.extend_from_slice(&self.symbols);
        }
        SymbolicWord {
            symbols: s,
            cyclic: self.cyclic,
        }
    }
}

impl fmt::Display for SymbolicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// The n-th member of the horseshoe family: the block w_O repeated n+1
/// times followed by the connector w_c, as a cyclic word. Errors name the
/// first inadmissible junction.
pub fn horseshoe_word(w_o: &SymbolicWord, w_c: &SymbolicWord, n: usize) -> Result<SymbolicWord> {
    if w_o.symbols == w_c.symbols {
        return Err(Error::Validation(
            "connector must differ from the block".into(),
        ));
    }
    let mut symbols = Vec::with_capacity((n + 1) * w_o.len() + w_c.len());
    for _ in 0..=n {
        symbols.extend_from_slice(&w_o.symbols);
    }
    symbols.extend_from_slice(&w_c.symbols);
    let word = SymbolicWord::cyclic(symbols);
    let len = word.len();
    for i in 0..len {
        let j = (i + 1) % len;
        if word.symbols[i] == word.symbols[j] {
            return Err(Error::Validation(format!(
                "inadmissible junction at index {i}: symbol {} repeats",
                word.symbols[i]
            )));
        }
    }
    Ok(word)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> SymbolicWord {
        SymbolicWord::parse(s, true).unwrap()
    }

    #[test]
    fn admissibility() {
        assert!(!w("121").is_admissible(3));
        assert!(w("12").is_admissible(3));
        assert!(w("1213").is_admissible(3));
        assert!(!w("1223").is_admissible(3));
        assert!(!w("124").is_admissible(3));
        assert!(SymbolicWord::parse("121", false).unwrap().is_admissible(3));
    }

    #[test]
    fn horseshoe_construction() {
        let wo = w("12");
        let wc = w("13");
        assert_eq!(horseshoe_word(&wo, &wc, 0).unwrap().to_string(), "1213");
        assert_eq!(
            horseshoe_word(&wo, &wc, 2).unwrap().to_string(),
            "12121213"
        );
        assert!(horseshoe_word(&wo, &w("21"), 0).is_err());
        for n in 0..6 {
            let h = horseshoe_word(&wo, &wc, n).unwrap();
            assert_eq!(h.len(), (n + 1) * 2 + 2);
            assert!(h.is_admissible(3));
        }
    }

    #[test]
    fn rotation_and_reversal() {
        let a = w("1213");
        assert_eq!(a.rotated(2).to_string(), "1312");
        assert_eq!(a.reversed().to_string(), "3121");
        assert_eq!(a.repeated(2).to_string(), "12131213");
    }
}
