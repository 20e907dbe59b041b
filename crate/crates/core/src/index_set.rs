//! 1-based row selections and the codeword pattern notation (`××-×--`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Strictly increasing, 1-based row indices of an n-row frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawIndexSet")]
pub struct IndexSet {
    n: usize,
    indices: Vec<usize>,
}

#[derive(Deserialize)]
struct RawIndexSet {
    n: usize,
    indices: Vec<usize>,
}

impl TryFrom<RawIndexSet> for IndexSet {
    type Error = crate::Error;

    fn try_from(raw: RawIndexSet) -> Result<Self> {
        IndexSet::new(raw.n, raw.indices)
    }
}

impl IndexSet {
    /// Validates and sorts; duplicates and out-of-range indices are rejected.
    pub fn new(n: usize, mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return invalid("index set must not be empty");
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > n) {
            return invalid(format!("row index {bad} out of range [1, {n}]"));
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return invalid(format!("row index {} repeated", w[0]));
        }
        Ok(Self { n, indices })
    }

    pub fn from_zero_based(n: usize, rows: &[usize]) -> Result<Self> {
        Self::new(n, rows.iter().map(|r| r + 1).collect())
    }

    /// Rows `{1, …, p}`.
    pub fn contiguous(n: usize, p: usize) -> Result<Self> {
        Self::new(n, (1..=p).collect())
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::contiguous(n, n)
    }

    /// Parses a comma-separated list such as `1,2,4`.
    pub fn parse_list(n: usize, text: &str) -> Result<Self> {
        let mut indices = Vec::new();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.parse::<usize>() {
                Ok(v) => indices.push(v),
                Err(_) => return invalid(format!("row index '{tok}' is not a positive integer")),
            }
        }
        Self::new(n, indices)
    }

    /// Parses a codeword pattern: `×`/`x`/`X` mark selected (systematic)
    /// rows, `-`/`−` unselected ones. Whitespace is ignored.
    pub fn from_pattern(pattern: &str) -> Result<Self> {
        let mut n = 0;
        let mut indices = Vec::new();
        for ch in pattern.chars().filter(|c| !c.is_whitespace()) {
            n += 1;
            match ch {
                '×' | 'x' | 'X' => indices.push(n),
                '-' | '−' => {}
                other => return invalid(format!("unexpected pattern character '{other}'")),
            }
        }
        Self::new(n, indices)
    }

    /// Pattern string using `×` and `-`.
    pub fn to_pattern(&self) -> String {
        let mut member = vec![false; self.n];
        for &i in &self.indices {
            member[i - 1] = true;
        }
        member.iter().map(|&m| if m { '×' } else { '-' }).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn zero_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i - 1).collect()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.indices.binary_search(&row).is_ok()
    }

    /// Rows of `1..=n` not in this set (`None` when the set is full).
    pub fn complement(&self) -> Option<Self> {
        let rest: Vec<usize> = (1..=self.n).filter(|r| !self.contains(*r)).collect();
        if rest.is_empty() {
            None
        } else {
            Some(Self {
                n: self.n,
                indices: rest,
            })
        }
    }

    /// Bit `i-1` set for each index `i`; only meaningful for `n <= 64`.
    pub fn mask(&self) -> u64 {
        self.indices
            .iter()
            .fold(0u64, |m, &i| m | (1u64 << (i - 1)))
    }

    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        Self::new(
            n,
            (0..n)
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| b + 1)
                .collect(),
        )
    }

    pub(crate) fn from_sorted_unchecked(n: usize, indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { n, indices }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.indices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_validate() {
        let s = IndexSet::parse_list(7, "4, 1,2").unwrap();
        assert_eq!(s.indices(), &[1, 2, 4]);
        assert!(IndexSet::parse_list(7, "1,8").is_err());
        assert!(IndexSet::parse_list(7, "0").is_err());
        assert!(IndexSet::parse_list(7, "1,1").is_err());
        assert!(IndexSet::parse_list(7, "a").is_err());
        assert!(IndexSet::parse_list(7, "").is_err());
    }

    #[test]
    fn patterns() {
        let s = IndexSet::from_pattern("××-××-×").unwrap();
        assert_eq!((s.n(), s.indices()), (7, &[1, 2, 4, 5, 7][..]));
        let t = IndexSet::from_pattern("xx-xx-x").unwrap();
        assert_eq!(s, t);
        assert_eq!(s.to_pattern(), "××-××-×");
        assert!(IndexSet::from_pattern("x?x").is_err());
        assert_eq!(IndexSet::from_pattern("× − ×").unwrap().indices(), &[1, 3]);
    }

    #[test]
    fn complement_and_mask() {
        let s = IndexSet::new(6, vec![1, 3, 5]).unwrap();
        assert_eq!(s.complement().unwrap().indices(), &[2, 4, 6]);
        assert!(IndexSet::full(3).unwrap().complement().is_none());
        assert_eq!(IndexSet::from_mask(6, s.mask()).unwrap(), s);
    }

    #[test]
    fn json_rejects_invalid() {
        let ok: IndexSet = serde_json::from_str(r#"{"n":5,"indices":[2,1]}"#).unwrap();
        assert_eq!(ok.indices(), &[1, 2]);
        assert!(serde_json::from_str::<IndexSet>(r#"{"n":5,"indices":[6]}"#).is_err());
    }

    proptest! {
        #[test]
        fn pattern_round_trip(mask in 1u64..(1 << 12), n in 12usize..=16) {
            let s = IndexSet::from_mask(n, mask).unwrap();
            let back = IndexSet::from_pattern(&s.to_pattern()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
