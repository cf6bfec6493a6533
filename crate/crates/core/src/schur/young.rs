//! Partitions, hook lengths and symmetric-group characters.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition `λ_1 ≥ λ_2 ≥ … > 0`. Also used for cycle types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct YoungDiagram {
    rows: Vec<usize>,
}

impl YoungDiagram {
    pub fn new(rows: Vec<usize>) -> Result<Self> {
        if rows.is_empty() || rows.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "invalid diagram rows {rows:?}"
            )));
        }
        if rows.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!(
                "rows not weakly decreasing: {rows:?}"
            )));
        }
        Ok(Self { rows })
    }

    /// The one-row diagram `(ell)`.
    pub fn row(ell: usize) -> Self {
        Self { rows: vec![ell] }
    }

    /// The one-column diagram `(1, …, 1)`.
    pub fn column(ell: usize) -> Self {
        Self { rows: vec![1; ell] }
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn boxes(&self) -> usize {
        self.rows.iter().sum()
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    /// Column lengths (the conjugate partition).
    pub fn conjugate(&self) -> Vec<usize> {
        (0..self.rows[0])
            .map(|j| self.rows.iter().filter(|&&r| r > j).count())
            .collect()
    }

    /// Size of the conjugacy class of `S_n` with this cycle type.
    pub fn class_size(&self) -> u128 {
        let n = self.boxes();
        let mut denom: u128 = 1;
        let mut mult: HashMap<usize, u32> = HashMap::new();
        for &r in &self.rows {
            *mult.entry(r).or_default() += 1;
        }
        for (&len, &m) in &mult {
            denom *= (len as u128).pow(m) * factorial(m as usize);
        }
        factorial(n) / denom
    }
}

impl fmt::Display for YoungDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.rows.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl TryFrom<Vec<usize>> for YoungDiagram {
    type Error = Error;

    fn try_from(rows: Vec<usize>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<YoungDiagram> for Vec<usize> {
    fn from(d: YoungDiagram) -> Self {
        d.rows
    }
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// All partitions of `ell` with at most `max_rows` parts, in descending
/// lexicographic order (`(ell)` first).
pub fn enumerate_young_diagrams(ell: usize, max_rows: usize) -> Vec<YoungDiagram> {
    fn rec(
        remaining: usize,
        cap: usize,
        rows_left: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<YoungDiagram>,
    ) {
        if remaining == 0 {
            out.push(YoungDiagram { rows: cur.clone() });
            return;
        }
        if rows_left == 0 {
            return;
        }
        for part in (1..=remaining.min(cap)).rev() {
            cur.push(part);
            rec(remaining - part, part, rows_left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if ell > 0 && max_rows > 0 {
        rec(ell, ell, max_rows, &mut Vec::new(), &mut out);
    }
    out
}

/// Number of standard Young tableaux of shape `λ` (hook length formula).
pub fn hook_dimension(lambda: &YoungDiagram) -> u64 {
    let cols = lambda.conjugate();
    let mut hooks: u128 = 1;
    for (i, &r) in lambda.rows.iter().enumerate() {
        for (j, &col_len) in cols.iter().enumerate().take(r) {
            let arm = r - j - 1;
            let leg = col_len - i - 1;
            hooks *= (arm + leg + 1) as u128;
        }
    }
    (factorial(lambda.boxes()) / hooks) as u64
}

/// Character `χ_λ` at a permutation of the given cycle type, by the
/// Murnaghan–Nakayama rule on beta-sets.
pub fn mn_character(lambda: &YoungDiagram, cycle_type: &YoungDiagram) -> Result<i64> {
    if lambda.boxes() != cycle_type.boxes() {
        return Err(Error::InvalidArgument(format!(
            "{lambda} and {cycle_type} are partitions of different integers"
        )));
    }
    let mut memo = HashMap::new();
    Ok(mn_rec(&lambda.rows, &cycle_type.rows, &mut memo))
}

fn mn_rec(
    lambda: &[usize],
    cycles: &[usize],
    memo: &mut HashMap<(Vec<usize>, Vec<usize>), i64>,
) -> i64 {
    let Some((&k, rest)) = cycles.split_first() else {
        return i64::from(lambda.is_empty());
    };
    let key = (lambda.to_vec(), cycles.to_vec());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    // beta_i = λ_i + (m - 1 - i), strictly decreasing
    let m = lambda.len();
    let beta: Vec<usize> = lambda
        .iter()
        .enumerate()
        .map(|(i, &r)| r + (m - 1 - i))
        .collect();
    let mut total = 0;
    for (idx, &b) in beta.iter().enumerate() {
        if b < k || beta.contains(&(b - k)) {
            continue;
        }
        let target = b - k;
        let crossed = beta.iter().filter(|&&x| x > target && x < b).count();
        let sign = if crossed % 2 == 0 { 1 } else { -1 };
        let mut next = beta.clone();
        next[idx] = target;
        next.sort_unstable_by(|a, b| b.cmp(a));
        let shape: Vec<usize> = next
            .iter()
            .enumerate()
            .map(|(i, &x)| x - (m - 1 - i))
            .filter(|&r| r > 0)
            .collect();
        total += sign * mn_rec(&shape, rest, memo);
    }
    memo.insert(key, total);
    total
}

/// Cycle type of a permutation given in one-line notation.
pub fn cycle_type(perm: &[usize]) -> YoungDiagram {
    let mut seen = vec![false; perm.len()];
    let mut lens = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        lens.push(len);
    }
    lens.sort_unstable_by(|a, b| b.cmp(a));
    YoungDiagram { rows: lens }
}

/// Character table: `table[λ][c]` over diagrams and cycle types of `ell`,
/// both in [`enumerate_young_diagrams`] order.
pub fn character_table(ell: usize) -> (Vec<YoungDiagram>, Vec<Vec<i64>>) {
    let parts = enumerate_young_diagrams(ell, ell);
    let table = parts
        .iter()
        .map(|l| {
            parts
                .iter()
                .map(|c| mn_character(l, c).expect("same size"))
                .collect()
        })
        .collect();
    (parts, table)
}
