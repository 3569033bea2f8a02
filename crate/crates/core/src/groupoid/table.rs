use serde::{Deserialize, Serialize};

use crate::error::{RectifyError, Result};

/// Multiplication table of a finite group on `{0, …, n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGroupTable {
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
    /// Order of the cyclic group this table was built from, if any.
    cyclic_order: Option<usize>,
}

impl FiniteGroupTable {
    /// `Z_n` with `a·b = a + b mod n`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1, "cyclic group of order 0");
        let table = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        let inverse = (0..n).map(|a| (n - a) % n).collect();
        FiniteGroupTable {
            table,
            identity: 0,
            inverse,
            cyclic_order: Some(n),
        }
    }

    /// Check the group axioms on an arbitrary table.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        let bad = |msg: String| RectifyError::Config(format!("invalid group table: {msg}"));
        if n == 0
            || table
                .iter()
                .any(|row| row.len() != n || row.iter().any(|&x| x >= n))
        {
            return Err(bad("not a square table over its index set".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
            .ok_or_else(|| bad("no identity".into()))?;
        let mut inverse = vec![0; n];
        for a in 0..n {
            inverse[a] = (0..n)
                .find(|&b| table[a][b] == identity && table[b][a] == identity)
                .ok_or_else(|| bad(format!("{a} has no inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(bad(format!("not associative at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        Ok(FiniteGroupTable {
            table,
            identity,
            inverse,
            cyclic_order: None,
        })
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn cyclic_order(&self) -> Option<usize> {
        self.cyclic_order
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn klein_four_table() {
        let t = vec![
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
            vec![3, 2, 1, 0],
        ];
        let g = FiniteGroupTable::from_table(t).unwrap();
        assert_eq!(g.identity(), 0);
        assert!((0..4).all(|a| g.inverse(a) == a));
        assert_eq!(g.cyclic_order(), None);
    }

    #[test]
    fn rejects_non_group() {
        assert!(FiniteGroupTable::from_table(vec![vec![0, 0], vec![0, 0]]).is_err());
        assert!(FiniteGroupTable::from_table(vec![vec![0, 1], vec![1]]).is_err());
    }
}
