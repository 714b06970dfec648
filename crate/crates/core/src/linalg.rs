//! Dense Metzler matrices with band metadata, Collatz-Wielandt ratios and a banded
//! LU for shifted solves.

use crate::error::{Error, Result};
use crate::par::{for_each_row_chunk, Exec};

/// Square matrix with nonnegative off-diagonal entries, stored dense row-major.
///
/// The lower and upper bandwidths are measured from the stored nonzeros, so
/// products and factorizations touch only the band.
#[derive(Debug, Clone, PartialEq)]
pub struct MetzlerMatrix {
    n: usize,
    data: Vec<f64>,
    lower_bw: usize,
    upper_bw: usize,
}

impl MetzlerMatrix {
    /// Validates shape, finiteness and the Metzler sign pattern.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Shape(format!(
                "{} entries for a {n}x{n} matrix",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                k / n,
                k % n
            )));
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && data[i * n + j] < 0.0 {
                    return Err(Error::Structure(format!(
                        "negative off-diagonal entry {} at ({i}, {j})",
                        data[i * n + j]
                    )));
                }
            }
        }
        let (lower_bw, upper_bw) = bandwidths(n, &data);
        Ok(Self {
            n,
            data,
            lower_bw,
            upper_bw,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("rows of unequal length".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.lower_bw
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.upper_bw
    }

    /// Column range of the band in row `i`.
    #[inline]
    fn band(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower_bw)..(i + self.upper_bw + 1).min(self.n)
    }

    /// `max_i |A_ii| + 1`, so that `A + sI` is entrywise nonnegative with a
    /// strictly positive diagonal.
    pub fn metzler_shift(&self) -> f64 {
        (0..self.n)
            .map(|i| self.get(i, i).abs())
            .fold(0.0, f64::max)
            + 1.0
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.matvec_into(Exec::default(), x, &mut out)?;
        Ok(out)
    }

    /// `out = A x`, rows split across the pool when `exec` allows.
    pub fn matvec_into(&self, exec: Exec, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.n || out.len() != self.n {
            return Err(Error::Shape(format!(
                "matvec of a {0}x{0} matrix with vectors of length {1} and {2}",
                self.n,
                x.len(),
                out.len()
            )));
        }
        if self.n == 0 {
            return Ok(());
        }
        for_each_row_chunk(exec, out, 1, |i, slot| {
            let r = self.band(i);
            let row = &self.row(i)[r.clone()];
            slot[0] = row.iter().zip(&x[r]).map(|(a, b)| a * b).sum();
        });
        Ok(())
    }

    /// Strong connectivity of the directed graph of nonzero off-diagonal entries.
    pub fn is_irreducible(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        self.reaches_all(false) && self.reaches_all(true)
    }

    fn reaches_all(&self, transpose: bool) -> bool {
        let n = self.n;
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        let span = self.lower_bw.max(self.upper_bw);
        while let Some(i) = stack.pop() {
            let lo = i.saturating_sub(span);
            let hi = (i + span + 1).min(n);
            for j in lo..hi {
                let v = if transpose {
                    self.get(j, i)
                } else {
                    self.get(i, j)
                };
                if j != i && v > 0.0 && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == n
    }

    /// Banded LU of `mu I - A`. Fails with a structure error when a pivot is not
    /// positive, which happens exactly when `mu` is not above the Perron value.
    pub fn shifted_lu(&self, mu: f64) -> Result<BandLu> {
        BandLu::factor(self, mu)
    }
}

fn bandwidths(n: usize, data: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut up = 0;
    for i in 0..n {
        for j in 0..n {
            if data[i * n + j] != 0.0 {
                if j < i {
                    lo = lo.max(i - j);
                } else {
                    up = up.max(j - i);
                }
            }
        }
    }
    (lo, up)
}

/// `(min_i (Ax)_i / x_i, max_i (Ax)_i / x_i)` for a positive `x`.
/// Ties resolve to the lowest index; the returned pair carries the indices.
pub fn cw_ratios(ax: &[f64], x: &[f64]) -> Result<((f64, usize), (f64, usize))> {
    if ax.len() != x.len() || x.is_empty() {
        return Err(Error::Shape(
            "ratio vectors differ in length or are empty".into(),
        ));
    }
    let mut min = (f64::INFINITY, 0);
    let mut max = (f64::NEG_INFINITY, 0);
    for (i, (&a, &v)) in ax.iter().zip(x).enumerate() {
        if !(v > 0.0) {
            return Err(Error::Positivity(format!("entry {i} is {v}")));
        }
        let r = a / v;
        if r < min.0 {
            min = (r, i);
        }
        if r > max.0 {
            max = (r, i);
        }
    }
    Ok((min, max))
}

/// LU factors of `mu I - A` in band storage, no pivoting.
///
/// For a Metzler `A` and `mu` above its Perron value the matrix is a nonsingular
/// M-matrix, elimination needs no pivoting and the band does not fill in.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    l: usize,
    u: usize,
    /// Row `i` holds columns `i - l ..= i + u` at offsets `0 ..= l + u`.
    band: Vec<f64>,
}

impl BandLu {
    fn factor(a: &MetzlerMatrix, mu: f64) -> Result<Self> {
        let n = a.n;
        let (l, u) = (a.lower_bw, a.upper_bw);
        let w = l + u + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for j in a.band(i) {
                let v = if i == j {
                    mu - a.get(i, j)
                } else {
                    -a.get(i, j)
                };
                band[i * w + (j + l - i)] = v;
            }
        }
        let at = |i: usize, j: usize| i * w + (j + l - i);
        for k in 0..n {
            let pivot = band[at(k, k)];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::Structure(format!(
                    "pivot {pivot} at row {k}: shift {mu} is not above the Perron value"
                )));
            }
            let last_row = (k + l).min(n - 1);
            let last_col = (k + u).min(n - 1);
            for i in k + 1..=last_row {
                let m = band[at(i, k)] / pivot;
                if m == 0.0 {
                    continue;
                }
                band[at(i, k)] = m;
                for j in k + 1..=last_col {
                    band[at(i, j)] -= m * band[at(k, j)];
                }
            }
        }
        Ok(Self { n, l, u, band })
    }

    /// Solves `(mu I - A) y = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::Shape("right-hand side length".into()));
        }
        let w = self.l + self.u + 1;
        let at = |i: usize, j: usize| i * w + (j + self.l - i);
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.l)..i {
                s -= self.band[at(i, k)] * b[k];
            }
            b[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + self.u + 1).min(self.n) {
                s -= self.band[at(i, j)] * b[j];
            }
            b[i] = s / self.band[at(i, i)];
        }
        Ok(())
    }
}
