//! Sparse LU factorization of a simplex basis with product-form updates.

use std::collections::BTreeSet;

const DROP_TOL: f64 = 1e-14;
const ABS_PIVOT_TOL: f64 = 1e-11;
const THRESHOLD: f64 = 0.1;
const SEARCH_COLS: usize = 4;

struct LStep {
    row: usize,
    mults: Vec<(usize, f64)>,
}

struct UStep {
    row: usize,
    col: usize,
    pivot: f64,
    rest: Vec<(usize, f64)>,
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug)]
pub struct Singular {
    pub cols: Vec<usize>,
    pub rows: Vec<usize>,
}

pub struct Factor {
    m: usize,
    lower: Vec<LStep>,
    upper: Vec<UStep>,
    etas: Vec<Eta>,
}

impl Factor {
    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    /// Factorizes the m×m matrix whose columns are given sparsely.
    pub fn new(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Factor, Singular> {
        let mut col_vals: Vec<Vec<(usize, f64)>> = columns
            .iter()
            .map(|c| c.iter().copied().filter(|&(_, v)| v.abs() > DROP_TOL).collect())
            .collect();
        let mut row_pat: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (j, col) in col_vals.iter().enumerate() {
            for &(i, _) in col {
                row_pat[i].push(j);
            }
        }
        let mut col_set: BTreeSet<(usize, usize)> =
            col_vals.iter().enumerate().map(|(j, c)| (c.len(), j)).collect();
        let mut row_set: BTreeSet<(usize, usize)> =
            row_pat.iter().enumerate().map(|(i, r)| (r.len(), i)).collect();
        let mut col_active = vec![true; m];
        let mut row_active = vec![true; m];
        let mut lower = Vec::new();
        let mut upper = Vec::with_capacity(m);
        let mut bad_cols = Vec::new();

        while let Some(&(ccount, c0)) = col_set.first() {
            if ccount == 0 {
                col_set.remove(&(0, c0));
                col_active[c0] = false;
                bad_cols.push(c0);
                continue;
            }
            let (r, c) = match choose_pivot(&col_vals, &row_pat, &col_set, &row_set) {
                Some(p) => p,
                None => {
                    // every candidate is numerically tiny: drop the column
                    col_set.remove(&(col_vals[c0].len(), c0));
                    col_active[c0] = false;
                    for &(i, _) in &col_vals[c0] {
                        let old = row_pat[i].len();
                        row_pat[i].retain(|&j| j != c0);
                        row_set.remove(&(old, i));
                        row_set.insert((row_pat[i].len(), i));
                    }
                    col_vals[c0].clear();
                    bad_cols.push(c0);
                    continue;
                }
            };

            let col = std::mem::take(&mut col_vals[c]);
            col_set.remove(&(col.len(), c));
            col_active[c] = false;
            let pivot = col.iter().find(|&&(i, _)| i == r).map(|&(_, v)| v).unwrap();

            // pivot row leaves the active matrix
            let pattern = std::mem::take(&mut row_pat[r]);
            row_set.remove(&(pattern.len(), r));
            row_active[r] = false;
            let mut rest = Vec::with_capacity(pattern.len());
            for &j in &pattern {
                if j == c {
                    continue;
                }
                let old = col_vals[j].len();
                if let Some(k) = col_vals[j].iter().position(|&(i, _)| i == r) {
                    let (_, v) = col_vals[j].swap_remove(k);
                    rest.push((j, v));
                }
                col_set.remove(&(old, j));
                col_set.insert((col_vals[j].len(), j));
            }

            let mut mults = Vec::new();
            for &(i, v) in &col {
                if i == r {
                    continue;
                }
                let l = v / pivot;
                mults.push((i, l));
                let old_rc = row_pat[i].len();
                row_pat[i].retain(|&j| j != c);
                for &(j, urj) in &rest {
                    let delta = -l * urj;
                    let colj = &mut col_vals[j];
                    let old_cc = colj.len();
                    match colj.iter().position(|&(ii, _)| ii == i) {
                        Some(k) => {
                            colj[k].1 += delta;
                            if colj[k].1.abs() <= DROP_TOL {
                                colj.swap_remove(k);
                                row_pat[i].retain(|&jj| jj != j);
                            }
                        }
                        None => {
                            if delta.abs() > DROP_TOL {
                                colj.push((i, delta));
                                row_pat[i].push(j);
                            }
                        }
                    }
                    if colj.len() != old_cc {
                        col_set.remove(&(old_cc, j));
                        col_set.insert((colj.len(), j));
                    }
                }
                row_set.remove(&(old_rc, i));
                row_set.insert((row_pat[i].len(), i));
            }
            if !mults.is_empty() {
                lower.push(LStep { row: r, mults });
            }
            upper.push(UStep { row: r, col: c, pivot, rest });
        }

        if upper.len() < m {
            let rows = (0..m).filter(|&i| row_active[i]).collect();
            let mut cols: Vec<usize> = bad_cols;
            cols.extend((0..m).filter(|&j| col_active[j]));
            cols.sort_unstable();
            cols.dedup();
            return Err(Singular { cols, rows });
        }
        Ok(Factor { m, lower, upper, etas: Vec::new() })
    }

    /// Replaces basis position `pos` by a column whose FTRAN image is `alpha`.
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != pos && v.abs() > DROP_TOL)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta { pos, pivot: alpha[pos], entries });
    }

    /// Solves B x = a in place; input indexed by row, output by basis position.
    pub fn ftran(&self, a: &mut Vec<f64>) {
        for step in &self.lower {
            let ar = a[step.row];
            if ar != 0.0 {
                for &(i, l) in &step.mults {
                    a[i] -= l * ar;
                }
            }
        }
        let mut x = vec![0.0; self.m];
        for step in self.upper.iter().rev() {
            let mut v = a[step.row];
            for &(j, u) in &step.rest {
                v -= u * x[j];
            }
            x[step.col] = v / step.pivot;
        }
        for eta in &self.etas {
            let xp = x[eta.pos] / eta.pivot;
            x[eta.pos] = xp;
            if xp != 0.0 {
                for &(i, v) in &eta.entries {
                    x[i] -= v * xp;
                }
            }
        }
        *a = x;
    }

    /// Solves Bᵀ y = c in place; input indexed by basis position, output by row.
    pub fn btran(&self, c: &mut Vec<f64>) {
        for eta in self.etas.iter().rev() {
            let mut v = c[eta.pos];
            for &(i, a) in &eta.entries {
                v -= a * c[i];
            }
            c[eta.pos] = v / eta.pivot;
        }
        let mut w = vec![0.0; self.m];
        for step in &self.upper {
            let ws = c[step.col] / step.pivot;
            w[step.row] = ws;
            if ws != 0.0 {
                for &(j, u) in &step.rest {
                    c[j] -= u * ws;
                }
            }
        }
        for step in self.lower.iter().rev() {
            let mut v = w[step.row];
            for &(i, l) in &step.mults {
                v -= l * w[i];
            }
            w[step.row] = v;
        }
        *c = w;
    }
}

fn choose_pivot(
    col_vals: &[Vec<(usize, f64)>],
    row_pat: &[Vec<usize>],
    col_set: &BTreeSet<(usize, usize)>,
    row_set: &BTreeSet<(usize, usize)>,
) -> Option<(usize, usize)> {
    let &(ccount, c) = col_set.first()?;
    if ccount == 1 {
        let (i, v) = col_vals[c][0];
        if v.abs() > ABS_PIVOT_TOL {
            return Some((i, c));
        }
    }
    // row singletons cause no fill
    for &(rcount, r) in row_set.iter() {
        if rcount != 1 {
            break;
        }
        let j = row_pat[r][0];
        let colmax = col_vals[j].iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
        if let Some(&(_, v)) = col_vals[j].iter().find(|&&(i, _)| i == r) {
            if v.abs() > ABS_PIVOT_TOL && v.abs() >= THRESHOLD * colmax {
                return Some((r, j));
            }
        }
    }
    let mut best: Option<(usize, f64, usize, usize)> = None;
    for &(count, j) in col_set.iter().take(SEARCH_COLS) {
        let colmax = col_vals[j].iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
        for &(i, v) in &col_vals[j] {
            if v.abs() <= ABS_PIVOT_TOL || v.abs() < THRESHOLD * colmax {
                continue;
            }
            let cost = (row_pat[i].len() - 1) * (count - 1);
            let better = match best {
                None => true,
                Some((bc, bv, bj, bi)) => {
                    cost < bc || (cost == bc && (v.abs() > bv || (v.abs() == bv && (j, i) < (bj, bi))))
                }
            };
            if better {
                best = Some((cost, v.abs(), j, i));
            }
        }
    }
    best.map(|(_, _, j, i)| (i, j))
}
