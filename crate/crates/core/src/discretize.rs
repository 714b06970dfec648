//! Uniform grids and the upwind/Nyström assembly of the discrete operator.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{cw_ratios, MetzlerMatrix};
use crate::par::{for_each_row_chunk, Exec};
use crate::problem::{Interval, ProblemSpec, QSign};

/// Uniform nodes with composite trapezoid weights on a bounded interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    interval: Interval,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

pub fn build_grid(interval: Interval, n: usize) -> Result<Grid> {
    if !interval.is_bounded() {
        return Err(Error::MustTruncate {
            lower: interval.lower(),
            upper: interval.upper(),
        });
    }
    if n < 3 {
        return Err(Error::InvalidInput(format!("grid needs n >= 3, got {n}")));
    }
    let (lo, hi) = (interval.lower(), interval.upper());
    let h = (hi - lo) / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
    nodes[n - 1] = hi;
    let mut weights = vec![h; n];
    weights[0] = 0.5 * h;
    weights[n - 1] = 0.5 * h;
    Ok(Grid {
        interval,
        h,
        nodes,
        weights,
    })
}

impl Grid {
    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let t = ((x - self.interval.lower()) / self.h).round();
        t.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    /// Indices of nodes inside the closed window `[a, b]`, with a relative slack
    /// for nodes sitting on the window ends.
    pub fn indices_in(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let slack = 1e-9 * self.h;
        let first = self.nodes.partition_point(|&x| x < a - slack);
        let last = self.nodes.partition_point(|&x| x <= b + slack);
        first..last.max(first)
    }
}

/// Node count giving spacing `h` on `interval`, when the length is a multiple of
/// `h` up to rounding.
pub fn commensurate_n(interval: &Interval, h: f64) -> Result<usize> {
    let cells = interval.length() / h;
    let r = cells.round();
    if r < 2.0 || (cells - r).abs() > 1e-6 * r.max(1.0) {
        return Err(Error::Geometry(format!(
            "interval {interval} is not a multiple of the spacing {h}"
        )));
    }
    Ok(r as usize + 1)
}

/// Boundary node where the eigenfunction is pinned to zero: the outflow end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcSide {
    /// First node; drift `q < 0`.
    Lower,
    /// Last node; drift `q > 0`.
    Upper,
}

impl BcSide {
    pub fn for_sign(sign: QSign) -> Self {
        match sign {
            QSign::Positive => BcSide::Upper,
            QSign::Negative => BcSide::Lower,
        }
    }

    /// Integer code used in dumps and records: 0 lower, 1 upper.
    pub fn code(self) -> u64 {
        match self {
            BcSide::Lower => 0,
            BcSide::Upper => 1,
        }
    }

    pub fn from_code(code: u64) -> Result<Self> {
        match code {
            0 => Ok(BcSide::Lower),
            1 => Ok(BcSide::Upper),
            c => Err(Error::Parse(format!("bc side code {c}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BcSide::Lower => "lower",
            BcSide::Upper => "upper",
        }
    }
}

/// Discrete image of the operator on the active (non-boundary) nodes.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Arc<Grid>,
    matrix: MetzlerMatrix,
    bc_side: BcSide,
    metzler_shift: f64,
}

impl DiscreteOperator {
    pub fn from_parts(grid: Arc<Grid>, matrix: MetzlerMatrix, bc_side: BcSide) -> Result<Self> {
        if matrix.dim() + 1 != grid.len() {
            return Err(Error::Shape(format!(
                "{} active rows for a grid of {} nodes",
                matrix.dim(),
                grid.len()
            )));
        }
        let metzler_shift = matrix.metzler_shift();
        Ok(Self {
            grid,
            matrix,
            bc_side,
            metzler_shift,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn matrix(&self) -> &MetzlerMatrix {
        &self.matrix
    }

    pub fn bc_side(&self) -> BcSide {
        self.bc_side
    }

    /// Grid index of the deleted boundary node.
    pub fn bc_node(&self) -> usize {
        match self.bc_side {
            BcSide::Lower => 0,
            BcSide::Upper => self.grid.len() - 1,
        }
    }

    pub fn metzler_shift(&self) -> f64 {
        self.metzler_shift
    }

    pub fn n_active(&self) -> usize {
        self.matrix.dim()
    }

    /// Grid index of active row `k`.
    pub fn grid_index(&self, k: usize) -> usize {
        match self.bc_side {
            BcSide::Lower => k + 1,
            BcSide::Upper => k,
        }
    }

    pub fn active_nodes(&self) -> &[f64] {
        let nodes = self.grid.nodes();
        match self.bc_side {
            BcSide::Lower => &nodes[1..],
            BcSide::Upper => &nodes[..nodes.len() - 1],
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.matrix.matvec(v)
    }

    /// Inserts the pinned zero at the boundary node.
    pub fn extend_by_zero(&self, active: &[f64]) -> Vec<f64> {
        let mut full = Vec::with_capacity(active.len() + 1);
        if self.bc_side == BcSide::Lower {
            full.push(0.0);
        }
        full.extend_from_slice(active);
        if self.bc_side == BcSide::Upper {
            full.push(0.0);
        }
        full
    }

    /// Collatz-Wielandt eigenvalue bracket `[-max (Ax/x), -min (Ax/x)]` of a
    /// positive vector on the active nodes.
    pub fn cw_bracket(&self, x: &[f64]) -> Result<(f64, f64)> {
        let ax = self.matvec(x)?;
        let ((min, _), (max, _)) = cw_ratios(&ax, x)?;
        Ok((-max, -min))
    }

    /// Raw dump: three little-endian `u64` (n_active, bc side code, 0) followed
    /// by the matrix row-major as little-endian `f64`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.n_active() as u64;
        for v in [n, self.bc_side.code(), 0] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.matrix.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn dump_to_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_dump(std::io::BufWriter::new(f))
    }
}

/// Matrix read back from a dump.
pub fn read_dump<R: Read>(mut r: R) -> Result<(BcSide, MetzlerMatrix)> {
    let mut word = [0u8; 8];
    let mut header = [0u64; 3];
    for h in header.iter_mut() {
        r.read_exact(&mut word)?;
        *h = u64::from_le_bytes(word);
    }
    let n = header[0] as usize;
    let side = BcSide::from_code(header[1])?;
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        r.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    Ok((side, MetzlerMatrix::new(n, data)?))
}

pub fn assemble(problem: &ProblemSpec, grid: &Grid) -> Result<DiscreteOperator> {
    assemble_with(problem, grid, Exec::default())
}

/// Row `i` (interior node `x_i`): upwind drift toward the outflow end, trapezoid
/// weights `J(x_i, x_j) w_j`, and `a(x_i)` on the diagonal; the outflow node's row
/// and column are dropped.
pub fn assemble_with(problem: &ProblemSpec, grid: &Grid, exec: Exec) -> Result<DiscreteOperator> {
    let span = grid.interval();
    if !span.is_within(&problem.domain) {
        return Err(Error::Geometry(format!(
            "grid {span} is not inside the domain {}",
            problem.domain
        )));
    }
    let sign = problem.coeffs.q_sign;
    let nodes = grid.nodes();
    if let Some(&x) = nodes
        .iter()
        .find(|&&x| QSign::of(problem.q(x)) != Some(sign))
    {
        return Err(Error::Structure(format!(
            "q({x}) = {} contradicts the declared sign {sign:?}",
            problem.q(x)
        )));
    }
    let bc_side = BcSide::for_sign(sign);
    let n = grid.len();
    let m = n - 1;
    let offset = match bc_side {
        BcSide::Lower => 1,
        BcSide::Upper => 0,
    };
    let h = grid.spacing();
    let weights = grid.weights();
    let mut data = vec![0.0; m * m];
    for_each_row_chunk(exec, &mut data, m, |k, row| {
        let i = k + offset;
        let x = nodes[i];
        for (c, slot) in row.iter_mut().enumerate() {
            let j = c + offset;
            *slot = problem.j(x, nodes[j]) * weights[j];
        }
        let q = problem.q(x);
        row[k] += problem.a(x) - q.abs() / h;
        // upwind neighbour on the outflow side; absent when it is the bc node
        match bc_side {
            BcSide::Upper if k + 1 < m => row[k + 1] += q / h,
            BcSide::Lower if k >= 1 => row[k - 1] += -q / h,
            _ => {}
        }
    });
    let matrix = MetzlerMatrix::new(m, data)?;
    DiscreteOperator::from_parts(Arc::new(grid.clone()), matrix, bc_side)
}
