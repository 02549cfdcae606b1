use std::cmp::Ordering;
use std::ops::{Add, Sub};

/// Cost with a tie-breaking key: the primary cost, then a vector compared
/// lexicographically that encodes which column each row takes.
#[derive(Debug, Clone, PartialEq)]
struct Lex {
    cost: f64,
    key: Vec<i64>,
}

impl Lex {
    fn zero(len: usize) -> Self {
        Self { cost: 0.0, key: vec![0; len] }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then_with(|| self.key.cmp(&other.key))
    }

    fn lt(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Less
    }
}

impl Add<&Lex> for &Lex {
    type Output = Lex;

    fn add(self, o: &Lex) -> Lex {
        Lex { cost: self.cost + o.cost, key: self.key.iter().zip(&o.key).map(|(a, b)| a + b).collect() }
    }
}

impl Sub<&Lex> for &Lex {
    type Output = Lex;

    fn sub(self, o: &Lex) -> Lex {
        Lex { cost: self.cost - o.cost, key: self.key.iter().zip(&o.key).map(|(a, b)| a - b).collect() }
    }
}

/// Minimum-cost assignment of `min(n, m)` row/column pairs, sorted by row.
///
/// Among assignments with equal total cost, the one whose sorted pair list is
/// lexicographically smallest is returned. Rows are fed to the potential
/// method with a per-row key of `col - m` (and an implicit `m` for rows left
/// unassigned), so comparing keys lexicographically compares pair lists.
pub fn hungarian_assign(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    assert!(cost.iter().all(|r| r.len() == cols), "cost matrix rows must have equal length");

    let pair = |r: usize, c: usize| {
        let mut key = vec![0i64; rows];
        key[r] = c as i64 - cols as i64;
        Lex { cost: cost[r][c], key }
    };
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let a = |i: usize, j: usize| if transpose { pair(j, i) } else { pair(i, j) };

    // Potential method, 1-based with column 0 as a sentinel.
    let mut u = vec![Lex::zero(rows); n + 1];
    let mut v = vec![Lex::zero(rows); m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv: Vec<Option<Lex>> = vec![None; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta: Option<Lex> = None;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = &(&a(i0 - 1, j - 1) - &u[i0]) - &v[j];
                if minv[j].as_ref().is_none_or(|mv| cur.lt(mv)) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mv = minv[j].as_ref().expect("set above");
                if delta.as_ref().is_none_or(|d| mv.lt(d)) {
                    delta = Some(mv.clone());
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains while rows <= columns");
            for j in 0..=m {
                if used[j] {
                    u[p[j]] = &u[p[j]] + &delta;
                    v[j] = &v[j] - &delta;
                } else if let Some(mv) = &minv[j] {
                    minv[j] = Some(mv - &delta);
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| p[j] != 0)
        .map(|j| if transpose { (j - 1, p[j] - 1) } else { (p[j] - 1, j - 1) })
        .collect();
    out.sort_unstable();
    out
}

pub fn assignment_cost(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(r, c)| cost[r][c]).sum()
}
