//! Arithmetic and linear algebra over the prime field F_p.
//!
//! Primes are tiny here (at most 31), so residues are stored as `u8` and
//! every product fits comfortably in a `u32`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported prime; labels are printed as single base-36 digits.
pub const MAX_PRIME: u32 = 31;

/// A checked prime modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Prime(u8);

impl Prime {
    pub fn new(p: u32) -> Result<Self> {
        if !is_prime(u64::from(p)) {
            return Err(Error::NotPrime(u64::from(p)));
        }
        if p > MAX_PRIME {
            return Err(Error::UnsupportedPrime(u64::from(p)));
        }
        Ok(Prime(p as u8))
    }

    #[inline]
    pub fn get(self) -> u32 {
        u32::from(self.0)
    }

    #[inline]
    pub fn as_u8(self) -> u8 {
        self.0
    }

    /// Reduce an arbitrary integer into `[0, p)`.
    #[inline]
    pub fn reduce(self, x: i64) -> u8 {
        x.rem_euclid(i64::from(self.0)) as u8
    }

    /// `p^k`, or `None` on overflow.
    pub fn pow(self, k: u32) -> Option<u64> {
        u64::from(self.0).checked_pow(k)
    }

    #[inline]
    pub fn add(self, x: u8, y: u8) -> u8 {
        let s = x + y;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn neg(self, x: u8) -> u8 {
        if x == 0 {
            0
        } else {
            self.0 - x
        }
    }

    #[inline]
    pub fn mul(self, x: u8, y: u8) -> u8 {
        ((u32::from(x) * u32::from(y)) % self.get()) as u8
    }

    /// Multiplicative inverse of a nonzero residue.
    pub fn inv(self, x: u8) -> Option<u8> {
        if x.is_multiple_of(self.0) {
            return None;
        }
        // Fermat: x^(p-2)
        let mut acc = 1u8;
        for _ in 0..self.0 - 2 {
            acc = self.mul(acc, x);
        }
        Some(acc)
    }
}

impl TryFrom<u32> for Prime {
    type Error = Error;

    fn try_from(p: u32) -> Result<Self> {
        Prime::new(p)
    }
}

impl From<Prime> for u32 {
    fn from(p: Prime) -> u32 {
        p.get()
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A residue together with its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FpScalar {
    value: u8,
    p: Prime,
}

impl FpScalar {
    pub fn new(p: Prime, value: i64) -> Self {
        FpScalar {
            value: p.reduce(value),
            p,
        }
    }

    pub fn value(self) -> u8 {
        self.value
    }

    pub fn modulus(self) -> Prime {
        self.p
    }
}

impl fmt::Display for FpScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// A vector over F_p. Entries are always reduced.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FpVector {
    p: Prime,
    entries: Vec<u8>,
}

impl FpVector {
    /// Build from arbitrary integers, reducing each entry mod p.
    pub fn from_ints(p: Prime, ints: &[i64]) -> Self {
        FpVector {
            p,
            entries: ints.iter().map(|&x| p.reduce(x)).collect(),
        }
    }

    pub fn zero(p: Prime, len: usize) -> Self {
        FpVector {
            p,
            entries: vec![0; len],
        }
    }

    pub fn modulus(&self) -> Prime {
        self.p
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> FpScalar {
        FpScalar {
            value: self.entries[i],
            p: self.p,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0)
    }

    /// Sum of the coordinates.
    pub fn coordinate_sum(&self) -> FpScalar {
        let s = self.entries.iter().fold(0u8, |acc, &x| self.p.add(acc, x));
        FpScalar { value: s, p: self.p }
    }

    pub fn add(&self, other: &FpVector) -> Result<FpVector> {
        check_compatible(self, other)?;
        Ok(FpVector {
            p: self.p,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&x, &y)| self.p.add(x, y))
                .collect(),
        })
    }

    pub fn scale(&self, k: u8) -> FpVector {
        FpVector {
            p: self.p,
            entries: self.entries.iter().map(|&x| self.p.mul(x, k)).collect(),
        }
    }
}

impl fmt::Display for FpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

fn check_compatible(a: &FpVector, b: &FpVector) -> Result<()> {
    if a.p != b.p {
        return Err(Error::Input(format!(
            "mixed moduli {} and {}",
            a.p, b.p
        )));
    }
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "mixed vector lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// A list of rows sharing modulus and length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpMatrix {
    rows: Vec<FpVector>,
}

impl FpMatrix {
    pub fn from_rows(rows: Vec<FpVector>) -> Result<Self> {
        if let Some(first) = rows.first() {
            if first.is_empty() {
                return Err(Error::Input("rows must have positive length".into()));
            }
            for r in &rows[1..] {
                check_compatible(first, r)?;
            }
        }
        Ok(FpMatrix { rows })
    }

    pub fn rows(&self) -> &[FpVector] {
        &self.rows
    }

    /// Reduced row echelon form, pivoting on the first nonzero entry of each
    /// column. Zero rows are dropped, so the result is a basis of the span.
    pub fn echelon_basis(&self) -> Vec<FpVector> {
        let Some(first) = self.rows.first() else {
            return Vec::new();
        };
        let p = first.p;
        let width = first.len();
        let mut m: Vec<Vec<u8>> = self.rows.iter().map(|r| r.entries.clone()).collect();
        let mut pivot_row = 0;
        for col in 0..width {
            let Some(found) = (pivot_row..m.len()).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(pivot_row, found);
            let inv = p.inv(m[pivot_row][col]).expect("pivot is nonzero");
            for x in m[pivot_row].iter_mut() {
                *x = p.mul(*x, inv);
            }
            let pivot = m[pivot_row].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r == pivot_row || row[col] == 0 {
                    continue;
                }
                let factor = p.neg(row[col]);
                for (x, &y) in row.iter_mut().zip(&pivot) {
                    *x = p.add(*x, p.mul(factor, y));
                }
            }
            pivot_row += 1;
            if pivot_row == m.len() {
                break;
            }
        }
        m.truncate(pivot_row);
        m.into_iter()
            .map(|entries| FpVector { p, entries })
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.echelon_basis().len()
    }
}

/// Dimension of the span of `rows`.
pub fn rank(rows: &[FpVector]) -> Result<usize> {
    Ok(FpMatrix::from_rows(rows.to_vec())?.rank())
}

/// Whether the coordinates of a length `p - 1` vector sum to zero.
pub fn in_hyperplane_v(e: &FpVector) -> Result<bool> {
    let p = e.modulus().get() as usize;
    if e.len() != p - 1 {
        return Err(Error::Input(format!(
            "defining vector has length {}, expected {}",
            e.len(),
            p - 1
        )));
    }
    Ok(e.coordinate_sum().value() == 0)
}

/// For each `e` in `w` and each `j` in `1..=p`, the length-p vector
/// `(e_{p-j+1}, .., e_{p-1}, 0, e_1, .., e_{p-j})`. Duplicates are dropped,
/// keeping first occurrences (input order, then `j` ascending).
pub fn bar_closure(w: &[FpVector], p: Prime) -> Result<Vec<FpVector>> {
    let pu = p.get() as usize;
    let mut out: Vec<FpVector> = Vec::new();
    for e in w {
        if e.modulus() != p {
            return Err(Error::Input(format!(
                "vector over F_{} in a closure over F_{}",
                e.modulus(),
                p
            )));
        }
        if e.len() != pu - 1 {
            return Err(Error::Input(format!(
                "defining vector has length {}, expected {}",
                e.len(),
                pu - 1
            )));
        }
        for j in 1..=pu {
            let entries = (1..=pu)
                .map(|i| {
                    if i == j {
                        0
                    } else {
                        // 1-based index (i - j) mod p into e
                        let k = (i + pu - j) % pu;
                        e.entries[k - 1]
                    }
                })
                .collect();
            let v = FpVector { p, entries };
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vecs(p: u32, rows: &[&[i64]]) -> Vec<FpVector> {
        let p = Prime::new(p).unwrap();
        rows.iter().map(|r| FpVector::from_ints(p, r)).collect()
    }

    /// Cardinality of the span, by enumerating every linear combination.
    fn span_size(rows: &[FpVector]) -> usize {
        let Some(first) = rows.first() else { return 1 };
        let p = first.modulus().get() as usize;
        let mut seen = std::collections::HashSet::new();
        for mut code in 0..p.pow(rows.len() as u32) {
            let mut acc = FpVector::zero(first.modulus(), first.len());
            for r in rows {
                acc = acc.add(&r.scale((code % p) as u8)).unwrap();
                code /= p;
            }
            seen.insert(acc);
        }
        seen.len()
    }

    #[test]
    fn primality() {
        assert!(Prime::new(2).is_ok());
        assert!(Prime::new(31).is_ok());
        assert_eq!(Prime::new(9), Err(Error::NotPrime(9)));
        assert_eq!(Prime::new(1), Err(Error::NotPrime(1)));
        assert_eq!(Prime::new(37), Err(Error::UnsupportedPrime(37)));
    }

    #[test]
    fn negative_entries_are_reduced() {
        let p = Prime::new(5).unwrap();
        assert_eq!(FpVector::from_ints(p, &[1, -1, 7]).entries(), &[1, 4, 2]);
        assert_eq!(FpScalar::new(p, -6).value(), 4);
    }

    #[test]
    fn rank_examples() {
        let rows = vecs(3, &[&[1, 2, 0], &[0, 1, 2], &[2, 0, 1]]);
        // brute force: 9 distinct combinations = 3^2
        assert_eq!(span_size(&rows), 9);
        assert_eq!(rank(&rows).unwrap(), 2);
        assert_eq!(rank(&[]).unwrap(), 0);
        assert_eq!(rank(&vecs(2, &[&[1, 0], &[0, 1]])).unwrap(), 2);
    }

    #[test]
    fn rank_rejects_mixed_rows() {
        let mut rows = vecs(3, &[&[1, 2, 0]]);
        rows.extend(vecs(5, &[&[1, 2, 0]]));
        assert!(matches!(rank(&rows), Err(Error::Input(_))));
        let rows = vecs(3, &[&[1, 2, 0], &[1, 2]]);
        assert!(matches!(rank(&rows), Err(Error::Input(_))));
    }

    #[test]
    fn echelon_is_reduced() {
        let rows = vecs(5, &[&[2, 4, 1], &[1, 2, 3], &[0, 0, 1]]);
        let basis = FpMatrix::from_rows(rows).unwrap().echelon_basis();
        assert_eq!(basis, vecs(5, &[&[1, 2, 0], &[0, 0, 1]]));
    }

    #[test]
    fn hyperplane() {
        assert!(in_hyperplane_v(&vecs(3, &[&[1, 2]])[0]).unwrap());
        assert!(!in_hyperplane_v(&vecs(3, &[&[1, 1]])[0]).unwrap());
        assert!(in_hyperplane_v(&vecs(5, &[&[0, 0, 0, 0]])[0]).unwrap());
        assert!(in_hyperplane_v(&vecs(3, &[&[1, 2, 0]])[0]).is_err());
    }

    #[test]
    fn bar_closure_examples() {
        let p3 = Prime::new(3).unwrap();
        let out = bar_closure(&vecs(3, &[&[1, 2]]), p3).unwrap();
        assert_eq!(out, vecs(3, &[&[0, 1, 2], &[2, 0, 1], &[1, 2, 0]]));

        let out = bar_closure(&vecs(3, &[&[0, 0]]), p3).unwrap();
        assert_eq!(out, vecs(3, &[&[0, 0, 0]]));

        let p2 = Prime::new(2).unwrap();
        let out = bar_closure(&vecs(2, &[&[1]]), p2).unwrap();
        assert_eq!(out, vecs(2, &[&[0, 1], &[1, 0]]));

        assert!(bar_closure(&vecs(3, &[&[1, 2, 0]]), p3).is_err());
    }

    fn arb_rows() -> impl Strategy<Value = (u32, Vec<Vec<i64>>)> {
        prop_oneof![Just(2u32), Just(3u32), Just(5u32)].prop_flat_map(|p| {
            (1usize..=4).prop_flat_map(move |width| {
                (
                    Just(p),
                    prop::collection::vec(
                        prop::collection::vec(0..i64::from(p), width),
                        0..=3,
                    ),
                )
            })
        })
    }

    proptest! {
        #[test]
        fn rank_matches_brute_span((p, rows) in arb_rows()) {
            let prime = Prime::new(p).unwrap();
            let rows: Vec<FpVector> = rows.iter().map(|r| FpVector::from_ints(prime, r)).collect();
            let r = rank(&rows).unwrap();
            prop_assert_eq!((p as usize).pow(r as u32), span_size(&rows));
        }

        #[test]
        fn rank_invariant_under_permutation_and_scaling(
            (p, rows) in arb_rows(),
            seed in any::<u64>(),
        ) {
            let prime = Prime::new(p).unwrap();
            let rows: Vec<FpVector> = rows.iter().map(|r| FpVector::from_ints(prime, r)).collect();
            let mut moved = rows.clone();
            moved.reverse();
            if !moved.is_empty() {
                let k = moved.len();
                moved.rotate_left((seed as usize) % k);
            }
            let moved: Vec<FpVector> = moved
                .iter()
                .enumerate()
                .map(|(i, r)| r.scale(1 + ((seed >> i) % (u64::from(p) - 1)) as u8))
                .collect();
            prop_assert_eq!(rank(&rows).unwrap(), rank(&moved).unwrap());
        }

        #[test]
        fn bar_closure_preserves_sums(
            p in prop_oneof![Just(2u32), Just(3u32), Just(5u32), Just(7u32)],
            raw in prop::collection::vec(prop::collection::vec(any::<i64>(), 6), 0..4),
        ) {
            let prime = Prime::new(p).unwrap();
            let w: Vec<FpVector> = raw
                .iter()
                .map(|r| FpVector::from_ints(prime, &r[..p as usize - 1]))
                .collect();
            let closure = bar_closure(&w, prime).unwrap();
            prop_assert!(closure.len() <= p as usize * w.len());
            for e in &w {
                for v in bar_closure(std::slice::from_ref(e), prime).unwrap() {
                    prop_assert_eq!(v.len(), p as usize);
                    prop_assert_eq!(v.coordinate_sum(), e.coordinate_sum());
                    prop_assert!(closure.contains(&v));
                }
            }
            if w.iter().all(|e| in_hyperplane_v(e).unwrap()) {
                prop_assert!(closure.iter().all(|v| v.coordinate_sum().value() == 0));
            }
        }
    }
}
