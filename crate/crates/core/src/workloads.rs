//! Deterministic matrix inputs and the three offloadable kernels.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};

/// Pivots below this magnitude are treated as singular.
pub const PIVOT_EPSILON: f64 = 1e-12;

/// Dense row-major matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("matrix shape {rows}x{cols} has a zero dimension")));
        }
        let expected =
            rows.checked_mul(cols).ok_or_else(|| Error::invalid(format!("matrix shape {rows}x{cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::invalid(format!("matrix {rows}x{cols} needs {expected} elements, got {}", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::filled(n, n, 0.0);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// A `rows`x`cols` matrix with every element equal to `value`. Panics on a zero dimension.
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "zero dimension");
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Element-wise bit equality; distinguishes `-0.0` from `0.0` and compares NaN payloads.
    pub fn bit_eq(&self, other: &Matrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.data.len() <= 64 {
            f.debug_list().entries((0..self.rows).map(|r| self.row(r))).finish()
        } else {
            write!(f, "Matrix({}x{})", self.rows, self.cols)
        }
    }
}

/// The offloadable operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Mul,
    Inv,
    Ln,
}

impl OpKind {
    pub const ALL: [OpKind; 3] = [OpKind::Mul, OpKind::Inv, OpKind::Ln];

    pub fn wire_id(self) -> u8 {
        match self {
            OpKind::Mul => 1,
            OpKind::Inv => 2,
            OpKind::Ln => 3,
        }
    }

    pub fn from_wire_id(id: u8) -> Option<OpKind> {
        OpKind::ALL.into_iter().find(|op| op.wire_id() == id)
    }

    /// Upper-case label used in configs and CSV files.
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Mul => "MUL",
            OpKind::Inv => "INV",
            OpKind::Ln => "LN",
        }
    }

    /// Path segment under `/invoke/`.
    pub fn path_segment(self) -> &'static str {
        match self {
            OpKind::Mul => "mul",
            OpKind::Inv => "inv",
            OpKind::Ln => "ln",
        }
    }

    /// Exponent of `n` in the arithmetic work of the kernel.
    pub fn work_exponent(self) -> i32 {
        match self {
            OpKind::Mul | OpKind::Inv => 3,
            OpKind::Ln => 2,
        }
    }

    pub fn apply(self, a: &Matrix) -> Result<Matrix> {
        match self {
            OpKind::Mul => matmul(a, a),
            OpKind::Inv => invert(a),
            OpKind::Ln => elementwise_ln(a),
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OpKind::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown op {s:?}")))
    }
}

/// xorshift64* generator (Vigna, 2016): shifts 12, 25, 27 and multiplier
/// `0x2545F4914F6CDD1D`. The state is seeded through one SplitMix64 step so
/// that small or zero seeds still start from a well-mixed non-zero state.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        XorShift64Star { state: if z == 0 { 0x9E37_79B9_7F4A_7C15 } else { z } }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[1.0, 2.0)`: the top 52 output bits become the mantissa.
    pub fn next_unit_interval_shifted(&mut self) -> f64 {
        f64::from_bits(0x3FF0_0000_0000_0000 | (self.next_u64() >> 12))
    }
}

/// Deterministic `n`x`n` input: entries uniform in `[1, 2)` from
/// [`XorShift64Star`] in row-major order, with `n` added to every diagonal
/// entry. All entries are positive and the diagonal shift keeps the matrix
/// well-conditioned, so MUL, INV and LN are all defined on the result.
pub fn gen_matrix(seed: u64, n: usize) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::invalid("matrix size must be at least 1"));
    }
    let mut rng = XorShift64Star::new(seed);
    let mut data: Vec<f64> = (0..n * n).map(|_| rng.next_unit_interval_shifted()).collect();
    let shift = n as f64;
    for i in 0..n {
        data[i * n + i] += shift;
    }
    Matrix::new(n, n, data)
}

/// Matrix product. The i-k-j loop order accumulates each output element over
/// `k` in ascending order, the same summation order as the textbook triple loop.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::invalid(format!("cannot multiply {}x{} by {}x{}", a.rows, a.cols, b.rows, b.cols)));
    }
    let (n, m) = (a.rows, b.cols);
    let mut out = vec![0.0; n * m];
    for (i, out_row) in out.chunks_exact_mut(m).enumerate() {
        for (k, &aik) in a.row(i).iter().enumerate() {
            let b_row = b.row(k);
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    Matrix::new(n, m, out)
}

/// Gauss-Jordan inversion with partial pivoting. The first row holding the
/// largest-magnitude candidate wins a pivot tie.
pub fn invert(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::invalid(format!("cannot invert a {}x{} matrix", a.rows, a.cols)));
    }
    let n = a.rows;
    let w = 2 * n;
    let mut aug = vec![0.0; n * w];
    for i in 0..n {
        aug[i * w..i * w + n].copy_from_slice(a.row(i));
        aug[i * w + n + i] = 1.0;
    }

    for col in 0..n {
        let mut pivot_row = col;
        let mut best = aug[col * w + col].abs();
        for r in col + 1..n {
            let v = aug[r * w + col].abs();
            if v > best {
                best = v;
                pivot_row = r;
            }
        }
        if !(best >= PIVOT_EPSILON) {
            return Err(Error::SingularMatrix { column: col, pivot: best });
        }
        if pivot_row != col {
            for c in 0..w {
                aug.swap(col * w + c, pivot_row * w + c);
            }
        }

        let inv_pivot = 1.0 / aug[col * w + col];
        for v in &mut aug[col * w + col..(col + 1) * w] {
            *v *= inv_pivot;
        }
        let pivot: Vec<f64> = aug[col * w + col..(col + 1) * w].to_vec();
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = aug[r * w + col];
            if factor == 0.0 {
                continue;
            }
            for (v, &p) in aug[r * w + col..(r + 1) * w].iter_mut().zip(&pivot) {
                *v -= factor * p;
            }
        }
    }

    let mut inv = Vec::with_capacity(n * n);
    for i in 0..n {
        inv.extend_from_slice(&aug[i * w + n..(i + 1) * w]);
    }
    Matrix::new(n, n, inv)
}

/// Natural logarithm of every element.
pub fn elementwise_ln(a: &Matrix) -> Result<Matrix> {
    if let Some(pos) = a.data.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Domain(format!(
            "ln undefined for element {} at ({}, {})",
            a.data[pos],
            pos / a.cols,
            pos % a.cols
        )));
    }
    Matrix::new(a.rows, a.cols, a.data.iter().map(|x| x.ln()).collect())
}

/// Runs `op` on `a` (MUL squares `a`) and reports monotonic wall time in seconds.
pub fn local_execute(op: OpKind, a: &Matrix) -> Result<(Matrix, f64)> {
    let start = Instant::now();
    let out = op.apply(a)?;
    let secs = start.elapsed().as_secs_f64();
    // Record at least one clock tick so downstream ratios stay defined.
    Ok((out, secs.max(1e-9)))
}
