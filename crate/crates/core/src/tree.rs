//! Automorphisms of the depth-n truncated p-adic tree whose labels are all
//! powers of the p-cycle.
//!
//! The alphabet `{1, .., p}` is identified with `Z/p` via `x -> x - 1`, and a
//! label exponent `e` acts by `x -> x + e`. A portrait is stored flat, in
//! level order: the root first, then the `p` vertices of level 1, and so on.
//! Within a level, vertex `x_1 .. x_k` sits at position
//! `sum (x_i - 1) p^(k - i)`, so the descendants of a vertex at any fixed
//! depth below it form one contiguous block.
//!
//! Products follow the left-to-right convention: `f.compose(g)` applies `f`
//! first, then `g`.

use std::fmt;
use std::ops::Mul;

use crate::error::{Error, Result};
use crate::fp::Prime;

/// Hard cap on portrait size; keeps positions in `u32`.
const MAX_LABELS: u64 = 1 << 28;

/// Arity and truncation depth of a portrait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    p: Prime,
    depth: u32,
}

impl Shape {
    pub fn new(p: Prime, depth: u32) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Input("truncation depth must be at least 1".into()));
        }
        let count = label_count(p, depth);
        match count {
            Some(c) if c <= MAX_LABELS => Ok(Shape { p, depth }),
            _ => Err(Error::Input(format!(
                "depth {depth} is too large for p = {p}"
            ))),
        }
    }

    #[inline]
    pub fn p(self) -> Prime {
        self.p
    }

    #[inline]
    pub fn depth(self) -> u32 {
        self.depth
    }

    /// Number of labelled vertices, `(p^n - 1) / (p - 1)`.
    #[inline]
    pub fn label_count(self) -> usize {
        self.level_offset(self.depth)
    }

    /// Index of the first vertex of level `k` in the flat portrait.
    #[inline]
    pub fn level_offset(self, k: u32) -> usize {
        label_count(self.p, k).expect("checked at construction") as usize
    }

    #[inline]
    pub fn level_width(self, k: u32) -> usize {
        (self.p.get() as usize).pow(k)
    }

    pub fn with_depth(self, depth: u32) -> Result<Shape> {
        Shape::new(self.p, depth)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} n={}", self.p, self.depth)
    }
}

fn label_count(p: Prime, depth: u32) -> Option<u64> {
    let pu = u64::from(p.get());
    Some((pu.checked_pow(depth)? - 1) / (pu - 1))
}

/// A vertex, as a word over `{1, .., p}`; the empty word is the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    digits: Vec<u8>,
}

impl Vertex {
    pub fn root() -> Self {
        Vertex { digits: Vec::new() }
    }

    pub fn new(p: Prime, digits: &[u32]) -> Result<Self> {
        let digits = digits
            .iter()
            .map(|&d| {
                if d >= 1 && d <= p.get() {
                    Ok(d as u8)
                } else {
                    Err(Error::Input(format!("vertex digit {d} outside 1..={p}")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Vertex { digits })
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    /// Digits in `1..=p`.
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn child(&self, x: u8) -> Vertex {
        let mut digits = self.digits.clone();
        digits.push(x);
        Vertex { digits }
    }

    /// Position within its level (see the module docs).
    fn position(&self, p: Prime) -> usize {
        self.digits
            .iter()
            .fold(0, |acc, &d| acc * p.get() as usize + (d as usize - 1))
    }

    fn check(&self, shape: Shape, max_depth: usize) -> Result<()> {
        if self.depth() > max_depth {
            return Err(Error::DepthOverflow {
                depth: self.depth(),
                max: max_depth,
            });
        }
        if let Some(&d) = self.digits.iter().find(|&&d| u32::from(d) > shape.p.get()) {
            return Err(Error::Input(format!(
                "vertex digit {d} outside 1..={}",
                shape.p
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits.is_empty() {
            return write!(f, "root");
        }
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Reusable buffers for the level-by-level image computation.
#[derive(Debug, Default, Clone)]
pub(crate) struct Scratch {
    img: Vec<u32>,
    next: Vec<u32>,
}

impl Scratch {
    /// `out = f g` on raw portraits of the given shape.
    pub(crate) fn compose(&mut self, shape: Shape, f: &[u8], g: &[u8], out: &mut [u8]) {
        let p = shape.p;
        self.img.clear();
        self.img.push(0);
        let mut offset = 0;
        for k in 0..shape.depth {
            let width = self.img.len();
            let level_f = &f[offset..offset + width];
            let level_g = &g[offset..offset + width];
            for (q, &iq) in self.img.iter().enumerate() {
                out[offset + q] = p.add(level_f[q], level_g[iq as usize]);
            }
            offset += width;
            if k + 1 < shape.depth {
                self.advance(p, level_f);
            }
        }
        debug_assert_eq!(offset, shape.label_count());
    }

    /// `out = f^-1`.
    pub(crate) fn invert(&mut self, shape: Shape, f: &[u8], out: &mut [u8]) {
        let p = shape.p;
        self.img.clear();
        self.img.push(0);
        let mut offset = 0;
        for k in 0..shape.depth {
            let width = self.img.len();
            let level_f = &f[offset..offset + width];
            for (q, &iq) in self.img.iter().enumerate() {
                out[offset + iq as usize] = p.neg(level_f[q]);
            }
            offset += width;
            if k + 1 < shape.depth {
                self.advance(p, level_f);
            }
        }
    }

    /// Images of the next level's vertices, given images of this level.
    fn advance(&mut self, p: Prime, level_f: &[u8]) {
        let pw = p.get();
        self.next.clear();
        for (q, &iq) in self.img.iter().enumerate() {
            let shift = u32::from(level_f[q]);
            let base = iq * pw;
            for x in 0..pw {
                let y = x + shift;
                let y = if y >= pw { y - pw } else { y };
                self.next.push(base + y);
            }
        }
        std::mem::swap(&mut self.img, &mut self.next);
    }
}

/// An element of the truncated Sylow group Γ_n, as a full portrait of label
/// exponents.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruncAut {
    shape: Shape,
    labels: Vec<u8>,
}

impl fmt::Debug for TruncAut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncAut({}: {})", self.shape, self.encode())
    }
}

impl fmt::Display for TruncAut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl TruncAut {
    pub fn identity(shape: Shape) -> Self {
        TruncAut {
            shape,
            labels: vec![0; shape.label_count()],
        }
    }

    /// Build from a level-order portrait; labels must already be reduced.
    pub fn from_labels(shape: Shape, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != shape.label_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels given, {} expected for {shape}",
                labels.len(),
                shape.label_count()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| u32::from(l) >= shape.p.get()) {
            return Err(Error::Input(format!("label {bad} outside [0, {})", shape.p)));
        }
        Ok(TruncAut { shape, labels })
    }

    /// Build from a function assigning a label exponent to each vertex.
    pub fn from_fn(shape: Shape, mut label: impl FnMut(&Vertex) -> i64) -> Self {
        let p = shape.p;
        let mut labels = Vec::with_capacity(shape.label_count());
        let mut level = vec![Vertex::root()];
        for k in 0..shape.depth {
            labels.extend(level.iter().map(|u| p.reduce(label(u))));
            if k + 1 < shape.depth {
                level = level
                    .iter()
                    .flat_map(|u| (1..=p.as_u8()).map(move |x| u.child(x)))
                    .collect();
            }
        }
        TruncAut { shape, labels }
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn p(&self) -> Prime {
        self.shape.p
    }

    #[inline]
    pub fn depth(&self) -> u32 {
        self.shape.depth
    }

    #[inline]
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<u8> {
        self.labels
    }

    /// The label exponent at `u`, for `depth(u) < n`.
    pub fn label(&self, u: &Vertex) -> Result<u8> {
        u.check(self.shape, self.shape.depth as usize - 1)?;
        Ok(self.labels[self.index(u)])
    }

    fn index(&self, u: &Vertex) -> usize {
        self.shape.level_offset(u.depth() as u32) + u.position(self.shape.p)
    }

    pub fn is_identity(&self) -> bool {
        self.labels.iter().all(|&l| l == 0)
    }

    /// Whether every label above depth `k` vanishes.
    pub fn in_stabilizer(&self, k: u32) -> bool {
        let end = self.shape.level_offset(k.min(self.shape.depth));
        self.labels[..end].iter().all(|&l| l == 0)
    }

    /// Image of a vertex of depth at most `n`.
    pub fn apply(&self, u: &Vertex) -> Result<Vertex> {
        u.check(self.shape, self.shape.depth as usize)?;
        let p = self.shape.p;
        let mut src = Vertex::root();
        let mut digits = Vec::with_capacity(u.depth());
        for &d in &u.digits {
            let label = self.labels[self.index(&src)];
            digits.push(p.add(d - 1, label) + 1);
            src.digits.push(d);
        }
        Ok(Vertex { digits })
    }

    fn check_same_shape(&self, other: &TruncAut) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{} vs {}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// `f g`: apply `self` first, then `other`.
    pub fn compose(&self, other: &TruncAut) -> Result<TruncAut> {
        self.check_same_shape(other)?;
        let mut out = vec![0; self.labels.len()];
        Scratch::default().compose(self.shape, &self.labels, &other.labels, &mut out);
        Ok(TruncAut {
            shape: self.shape,
            labels: out,
        })
    }

    pub fn inverse(&self) -> TruncAut {
        let mut out = vec![0; self.labels.len()];
        Scratch::default().invert(self.shape, &self.labels, &mut out);
        TruncAut {
            shape: self.shape,
            labels: out,
        }
    }

    /// `self^k` by square-and-multiply; negative `k` goes through the inverse.
    pub fn power(&self, k: i64) -> TruncAut {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut e = k.unsigned_abs();
        // every element of Γ_n has order dividing p^n
        if let Some(exp) = self.shape.p.pow(self.shape.depth) {
            e %= exp;
        }
        let mut scratch = Scratch::default();
        let mut acc = vec![0u8; self.labels.len()];
        let mut sq = base.labels;
        let mut tmp = vec![0u8; self.labels.len()];
        while e > 0 {
            if e & 1 == 1 {
                scratch.compose(self.shape, &acc, &sq, &mut tmp);
                std::mem::swap(&mut acc, &mut tmp);
            }
            e >>= 1;
            if e > 0 {
                scratch.compose(self.shape, &sq, &sq, &mut tmp);
                std::mem::swap(&mut sq, &mut tmp);
            }
        }
        TruncAut {
            shape: self.shape,
            labels: acc,
        }
    }

    /// The `k` with `order = p^k`, found by repeated p-th powering.
    pub fn order_log(&self) -> u32 {
        let p = i64::from(self.shape.p.get());
        let mut h = self.clone();
        let mut k = 0;
        while !h.is_identity() {
            h = h.power(p);
            k += 1;
        }
        k
    }

    /// Order of the element; always a power of `p`, at most `p^n`.
    pub fn order(&self) -> u64 {
        u64::from(self.shape.p.get()).pow(self.order_log())
    }

    /// The section at `u`, a portrait of depth `n - depth(u)`.
    pub fn section(&self, u: &Vertex) -> Result<TruncAut> {
        u.check(self.shape, self.shape.depth as usize - 1)?;
        let d = u.depth() as u32;
        let shape = Shape {
            p: self.shape.p,
            depth: self.shape.depth - d,
        };
        let q = u.position(self.shape.p);
        let mut labels = Vec::with_capacity(shape.label_count());
        for k in 0..shape.depth {
            let width = shape.level_width(k);
            let start = self.shape.level_offset(d + k) + q * width;
            labels.extend_from_slice(&self.labels[start..start + width]);
        }
        Ok(TruncAut { shape, labels })
    }

    /// The wreath decomposition `g -> (g_1, .., g_p)` of a first level
    /// stabilizer element.
    pub fn psi(&self) -> Result<SectionTuple> {
        if self.labels[0] != 0 {
            return Err(Error::NotInStabilizer(self.labels[0]));
        }
        if self.shape.depth < 2 {
            return Err(Error::DepthOverflow { depth: 1, max: 0 });
        }
        let components = (1..=self.shape.p.as_u8())
            .map(|x| self.section(&Vertex { digits: vec![x] }))
            .collect::<Result<Vec<_>>>()?;
        Ok(SectionTuple { components })
    }

    /// Inverse of [`TruncAut::psi`].
    pub fn psi_inv(tuple: &SectionTuple) -> TruncAut {
        let inner = tuple.components[0].shape;
        let shape = Shape {
            p: inner.p,
            depth: inner.depth + 1,
        };
        let mut labels = Vec::with_capacity(shape.label_count());
        labels.push(0);
        for k in 0..inner.depth {
            let start = inner.level_offset(k);
            let width = inner.level_width(k);
            for c in &tuple.components {
                labels.extend_from_slice(&c.labels[start..start + width]);
            }
        }
        TruncAut { shape, labels }
    }

    /// `h^-1 g h`.
    pub fn conj(&self, h: &TruncAut) -> Result<TruncAut> {
        h.inverse().compose(self)?.compose(h)
    }

    /// `[g, h] = g^-1 h^-1 g h`.
    pub fn comm(&self, h: &TruncAut) -> Result<TruncAut> {
        self.inverse().compose(&self.conj(h)?)
    }

    /// Truncate to depth `m <= n`.
    pub fn restrict(&self, m: u32) -> Result<TruncAut> {
        if m > self.shape.depth {
            return Err(Error::DepthOverflow {
                depth: m as usize,
                max: self.shape.depth as usize,
            });
        }
        let shape = self.shape.with_depth(m)?;
        Ok(TruncAut {
            shape,
            labels: self.labels[..shape.label_count()].to_vec(),
        })
    }

    /// Level-order base-p digit string of the portrait.
    pub fn encode(&self) -> String {
        self.labels
            .iter()
            .map(|&l| char::from_digit(u32::from(l), 36).expect("p <= 31"))
            .collect()
    }

    pub fn decode(shape: Shape, s: &str) -> Result<TruncAut> {
        let labels = s
            .chars()
            .map(|c| {
                c.to_digit(36)
                    .filter(|&d| d < shape.p.get())
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::Input(format!("bad digit `{c}` for {shape}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        TruncAut::from_labels(shape, labels)
    }
}

impl Mul for &TruncAut {
    type Output = TruncAut;

    /// Left-to-right product. Panics on shape mismatch.
    fn mul(self, rhs: &TruncAut) -> TruncAut {
        self.compose(rhs).expect("operands share a shape")
    }
}

/// The image of ψ: `p` sections of equal shape.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SectionTuple {
    components: Vec<TruncAut>,
}

impl SectionTuple {
    pub fn new(components: Vec<TruncAut>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Input("empty section tuple".into()));
        };
        let shape = first.shape;
        if components.len() != shape.p.get() as usize {
            return Err(Error::ShapeMismatch(format!(
                "{} components, expected {}",
                components.len(),
                shape.p
            )));
        }
        if let Some(bad) = components.iter().find(|c| c.shape != shape) {
            return Err(Error::ShapeMismatch(format!("{} vs {shape}", bad.shape)));
        }
        Ok(SectionTuple { components })
    }

    pub fn identity(shape: Shape) -> Self {
        SectionTuple {
            components: vec![TruncAut::identity(shape); shape.p.get() as usize],
        }
    }

    pub fn components(&self) -> &[TruncAut] {
        &self.components
    }

    /// Component `i`, 1-based.
    pub fn component(&self, i: usize) -> &TruncAut {
        &self.components[i - 1]
    }

    pub fn shape(&self) -> Shape {
        self.components[0].shape
    }

    pub fn into_components(self) -> Vec<TruncAut> {
        self.components
    }
}
