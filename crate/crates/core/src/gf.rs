//! Table-based arithmetic over the binary extension fields GF(2^m),
//! 1 <= m <= 16, plus the small dense linear-algebra kernels (rank, solve,
//! row reduction) the code-construction sweep needs.
//!
//! Elements are stored as `u16` bit patterns of polynomials over GF(2).
//! Multiplication uses exp/log tables built from a fixed primitive
//! polynomial per degree, with `x` (0b10) as the group generator.

use crate::{Error, Result};

/// Primitive polynomial (including the leading term) used to reduce
/// products in GF(2^m), indexed by m-1.
const PRIMITIVE_POLY: [u32; 16] = [
    0x3,     // m=1:  x + 1
    0x7,     // m=2:  x^2 + x + 1
    0xB,     // m=3:  x^3 + x + 1
    0x13,    // m=4:  x^4 + x + 1
    0x25,    // m=5:  x^5 + x^2 + 1
    0x43,    // m=6:  x^6 + x + 1
    0x89,    // m=7:  x^7 + x^3 + 1
    0x11D,   // m=8:  x^8 + x^4 + x^3 + x^2 + 1
    0x211,   // m=9:  x^9 + x^4 + 1
    0x409,   // m=10: x^10 + x^3 + 1
    0x805,   // m=11: x^11 + x^2 + 1
    0x1053,  // m=12: x^12 + x^6 + x^4 + x + 1
    0x201B,  // m=13: x^13 + x^4 + x^3 + x + 1
    0x4443,  // m=14: x^14 + x^10 + x^6 + x + 1
    0x8003,  // m=15: x^15 + x + 1
    0x1100B, // m=16: x^16 + x^12 + x^3 + x + 1
];

/// A concrete GF(2^m) with its multiplication tables.
#[derive(Debug, Clone)]
pub struct Field {
    m: u32,
    order: u32,
    poly: u32,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
    }
}
impl Eq for Field {}

impl Field {
    /// Builds GF(2^m). Fails for m outside 1..=16.
    pub fn new(m: u32) -> Result<Self> {
        if !(1..=16).contains(&m) {
            return Err(Error::InvalidInput(format!(
                "field degree m must be in 1..=16, got {m}"
            )));
        }
        let order = 1u32 << m;
        let poly = PRIMITIVE_POLY[(m - 1) as usize];
        let n = (order - 1) as usize;
        let mut exp = vec![0u16; 2 * n];
        let mut log = vec![0u16; order as usize];
        let mut x = 1u32;
        for i in 0..n {
            exp[i] = x as u16;
            exp[i + n] = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & order != 0 {
                x ^= poly;
            }
        }
        Ok(Field { m, order, poly, exp, log })
    }

    /// Smallest field whose order strictly exceeds `n`.
    pub fn smallest_exceeding(n: usize) -> Result<Self> {
        let mut m = 1;
        while (1usize << m) <= n {
            m += 1;
        }
        Field::new(m as u32)
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Hex digits needed to print one element.
    pub fn hex_width(&self) -> usize {
        ((self.m + 3) / 4) as usize
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        debug_assert!((a as u32) < self.order && (b as u32) < self.order);
        // exp is doubled, so log a + log b <= 2(q-2) never wraps.
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    /// Multiplicative inverse; errors on zero.
    pub fn inv(&self, a: u16) -> Result<u16> {
        if a == 0 {
            return Err(Error::InvalidInput("inverse of zero".into()));
        }
        let n = (self.order - 1) as usize;
        Ok(self.exp[(n - self.log[a as usize] as usize) % n.max(1)])
    }

    pub fn div(&self, a: u16, b: u16) -> Result<u16> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// a * b + c, the inner-product step.
    #[inline]
    pub fn mul_add(&self, a: u16, b: u16, c: u16) -> u16 {
        self.mul(a, b) ^ c
    }

    /// Dot product of two equal-length vectors.
    pub fn dot(&self, a: &[u16], b: &[u16]) -> u16 {
        debug_assert_eq!(a.len(), b.len());
        let mut acc = 0;
        for (&x, &y) in a.iter().zip(b) {
            acc = self.mul_add(x, y, acc);
        }
        acc
    }
}

/// Reduces `rows` in place to row echelon form, pivoting on the lowest
/// column index available; returns the pivot column per reduced row.
pub fn row_reduce(field: &Field, rows: &mut [Vec<u16>]) -> Vec<usize> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(pivot_row) = (rank..nrows).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pivot_row);
        let inv = field
            .inv(rows[rank][col])
            .expect("pivot is nonzero by construction");
        for c in col..ncols {
            rows[rank][c] = field.mul(rows[rank][c], inv);
        }
        for r in 0..nrows {
            if r != rank && rows[r][col] != 0 {
                let factor = rows[r][col];
                for c in col..ncols {
                    let sub = field.mul(factor, rows[rank][c]);
                    rows[r][c] ^= sub;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    pivots
}

/// Rank of a set of vectors (given as rows).
pub fn rank(field: &Field, vectors: &[Vec<u16>]) -> usize {
    let mut rows: Vec<Vec<u16>> = vectors.to_vec();
    row_reduce(field, &mut rows).len()
}

/// Solves `A x = b` for x, where `a` holds the rows of A. When the system is
/// underdetermined, free variables are set to zero so the solution touching
/// the lowest-index columns is returned. `None` when inconsistent.
pub fn solve(field: &Field, a: &[Vec<u16>], b: &[u16]) -> Option<Vec<u16>> {
    let ncols = a.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<u16>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let pivots = row_reduce(field, &mut aug);
    // A pivot in the rhs column marks 0 = 1: inconsistent.
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![0u16; ncols];
    for (row, &col) in pivots.iter().enumerate() {
        x[col] = aug[row][ncols];
    }
    Some(x)
}

/// True when the square system has a unique solution (rank == unknowns).
pub fn full_column_rank(field: &Field, a: &[Vec<u16>]) -> bool {
    let ncols = a.first().map_or(0, |r| r.len());
    rank(field, a) == ncols
}
