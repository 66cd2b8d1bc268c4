//! Congruence quotients `K_n`, enumerated by breadth-first closure under the
//! generators.
//!
//! Elements are kept as packed portraits in one flat buffer. The dedup set
//! uses a `u128` key when the portrait fits in 128 bits and falls back to the
//! raw label bytes otherwise; both orders agree with the canonical digit
//! string order.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::hash::Hash;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{classify, Family, GroupSpec};
use crate::tree::{Scratch, SectionTuple, Shape, TruncAut};
use crate::word::{Generator, Word};

pub const DEFAULT_MAX_ELEMENTS: usize = 2_000_000;

/// Frontier chunk handed to one rayon task.
const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationLimits {
    pub max_elements: usize,
    /// Advisory only; compare against [`EnumerationLimits::estimated_bytes`].
    pub max_memory_hint: Option<u64>,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits {
            max_elements: DEFAULT_MAX_ELEMENTS,
            max_memory_hint: None,
        }
    }
}

impl EnumerationLimits {
    pub fn new(max_elements: usize) -> Result<Self> {
        if max_elements == 0 {
            return Err(Error::Input("max_elements must be at least 1".into()));
        }
        Ok(EnumerationLimits {
            max_elements,
            max_memory_hint: None,
        })
    }

    /// Rough peak footprint of an enumeration reaching `count` elements.
    pub fn estimated_bytes(shape: Shape, count: usize) -> u64 {
        let per = shape.label_count() as u64 // stored portrait
            + 4 // sorted index
            + 2 * (16 + key_bytes(shape) as u64); // hash set slot and key
        per * count as u64
    }

    /// Whether the advisory memory hint would be exceeded at `count` elements.
    pub fn exceeds_memory_hint(&self, shape: Shape, count: usize) -> bool {
        self.max_memory_hint
            .is_some_and(|hint| Self::estimated_bytes(shape, count) > hint)
    }
}

fn bits_per_label(shape: Shape) -> u32 {
    32 - (shape.p().get() - 1).leading_zeros()
}

fn key_bytes(shape: Shape) -> usize {
    if fits_u128(shape) {
        16
    } else {
        shape.label_count() + 16
    }
}

fn fits_u128(shape: Shape) -> bool {
    shape.label_count() as u64 * u64::from(bits_per_label(shape)) <= 128
}

trait PackedKey: Hash + Eq + Ord + Send + Sync {
    fn pack(labels: &[u8], bits: u32) -> Self;
}

impl PackedKey for u128 {
    #[inline]
    fn pack(labels: &[u8], bits: u32) -> Self {
        labels
            .iter()
            .fold(0u128, |acc, &l| (acc << bits) | u128::from(l))
    }
}

impl PackedKey for Box<[u8]> {
    #[inline]
    fn pack(labels: &[u8], _bits: u32) -> Self {
        labels.into()
    }
}

/// The enumerated element set of a congruence quotient.
#[derive(Debug, Clone)]
pub struct QuotientGroup {
    spec: GroupSpec,
    shape: Shape,
    gen_words: Vec<Word>,
    /// Portraits back to back, `shape.label_count()` bytes each.
    labels: Vec<u8>,
    /// Element indices in canonical order, for lookup.
    sorted: Vec<u32>,
    /// Number of elements discovered at each BFS radius; empty when loaded
    /// from a file.
    layer_sizes: Vec<usize>,
}

impl QuotientGroup {
    fn from_flat(
        spec: &GroupSpec,
        shape: Shape,
        gen_words: Vec<Word>,
        labels: Vec<u8>,
        layer_sizes: Vec<usize>,
    ) -> Self {
        let stride = shape.label_count();
        let count = labels.len() / stride;
        let mut sorted: Vec<u32> = (0..count as u32).collect();
        sorted.par_sort_unstable_by(|&x, &y| {
            let (x, y) = (x as usize * stride, y as usize * stride);
            labels[x..x + stride].cmp(&labels[y..y + stride])
        });
        QuotientGroup {
            spec: spec.clone(),
            shape,
            gen_words,
            labels,
            sorted,
            layer_sizes,
        }
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn level(&self) -> u32 {
        self.shape.depth()
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn gen_words(&self) -> &[Word] {
        &self.gen_words
    }

    pub fn size(&self) -> usize {
        self.sorted.len()
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    fn stride(&self) -> usize {
        self.shape.label_count()
    }

    pub fn element_labels(&self, i: usize) -> &[u8] {
        let s = self.stride();
        &self.labels[i * s..(i + 1) * s]
    }

    pub fn element(&self, i: usize) -> TruncAut {
        TruncAut::from_labels(self.shape, self.element_labels(i).to_vec()).expect("stored portrait")
    }

    /// Elements in BFS order (radius, then canonical encoding).
    pub fn iter(&self) -> impl Iterator<Item = TruncAut> + '_ {
        (0..self.size()).map(|i| self.element(i))
    }

    pub fn contains(&self, g: &TruncAut) -> bool {
        g.shape() == self.shape
            && self
                .sorted
                .binary_search_by(|&i| self.element_labels(i as usize).cmp(g.labels()))
                .is_ok()
    }

    /// `k` with `exp(K_n) = p^k`; every element order is scanned.
    pub fn exponent_log(&self) -> u32 {
        (0..self.size())
            .into_par_iter()
            .map_init(OrderWork::default, |w, i| {
                w.order_log(self.shape, self.element_labels(i))
            })
            .max()
            .unwrap_or(0)
    }

    pub fn exponent(&self) -> u64 {
        u64::from(self.shape.p().get()).pow(self.exponent_log())
    }

    pub fn order_histogram(&self) -> OrderHistogram {
        let p = u64::from(self.shape.p().get());
        let logs = (0..self.size())
            .into_par_iter()
            .fold(
                || (OrderWork::default(), BTreeMap::<u32, usize>::new()),
                |(mut w, mut acc), i| {
                    *acc.entry(w.order_log(self.shape, self.element_labels(i)))
                        .or_default() += 1;
                    (w, acc)
                },
            )
            .map(|(_, acc)| acc)
            .reduce(BTreeMap::new, |mut x, y| {
                for (k, c) in y {
                    *x.entry(k).or_default() += c;
                }
                x
            });
        OrderHistogram {
            counts: logs.into_iter().map(|(k, c)| (p.pow(k), c)).collect(),
        }
    }

    /// Elements fixing every vertex of depth `k`.
    pub fn stabilizer_elements(&self, k: u32) -> Result<Vec<TruncAut>> {
        if k > self.level() {
            return Err(Error::DepthOverflow {
                depth: k as usize,
                max: self.level() as usize,
            });
        }
        let end = if k == 0 { 0 } else { self.shape.level_offset(k) };
        Ok((0..self.size())
            .filter(|&i| self.element_labels(i)[..end].iter().all(|&l| l == 0))
            .map(|i| self.element(i))
            .collect())
    }

    /// Canonical digit-string export: header, then one portrait per line.
    pub fn write_export<W: Write>(&self, w: W) -> Result<()> {
        write_elements(w, self.shape, (0..self.size()).map(|i| self.element_labels(i)))
    }
}

#[derive(Default)]
struct OrderWork {
    scratch: Scratch,
    cur: Vec<u8>,
    acc: Vec<u8>,
    tmp: Vec<u8>,
}

impl OrderWork {
    /// Repeated p-th powering until the identity is reached.
    fn order_log(&mut self, shape: Shape, g: &[u8]) -> u32 {
        let p = shape.p().get();
        self.cur.clear();
        self.cur.extend_from_slice(g);
        let mut k = 0;
        while self.cur.iter().any(|&l| l != 0) {
            self.acc.clear();
            self.acc.extend_from_slice(&self.cur);
            self.tmp.resize(g.len(), 0);
            for _ in 1..p {
                self.scratch.compose(shape, &self.acc, &self.cur, &mut self.tmp);
                std::mem::swap(&mut self.acc, &mut self.tmp);
            }
            std::mem::swap(&mut self.cur, &mut self.acc);
            k += 1;
        }
        k
    }
}

/// Element counts keyed by order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderHistogram {
    pub counts: BTreeMap<u64, usize>,
}

impl OrderHistogram {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("order,count\n");
        for (order, count) in &self.counts {
            s.push_str(&format!("{order},{count}\n"));
        }
        s
    }
}

/// Right-multiplication generators: `a`, every directed generator, and their
/// inverses, with duplicates and the identity removed.
fn closure_generators(spec: &GroupSpec, shape: Shape) -> Result<(Vec<Word>, Vec<Vec<u8>>)> {
    let mut words = Vec::new();
    let mut gens: Vec<Vec<u8>> = Vec::new();
    for (word, g) in spec.generators(shape)? {
        words.push(word);
        for h in [g.inverse(), g] {
            if !h.is_identity() && !gens.iter().any(|x| x == h.labels()) {
                gens.push(h.into_labels());
            }
        }
    }
    Ok((words, gens))
}

/// The subgroup of `Γ_n` generated by `a` and the directed generators of
/// `spec`.
pub fn enumerate(spec: &GroupSpec, n: u32, limits: &EnumerationLimits) -> Result<QuotientGroup> {
    let shape = Shape::new(spec.p(), n)?;
    if limits.max_elements == 0 {
        return Err(Error::Input("max_elements must be at least 1".into()));
    }
    let (words, gens) = closure_generators(spec, shape)?;
    let (labels, layers) = if fits_u128(shape) {
        bfs::<u128>(shape, &gens, limits.max_elements)?
    } else {
        bfs::<Box<[u8]>>(shape, &gens, limits.max_elements)?
    };
    Ok(QuotientGroup::from_flat(spec, shape, words, labels, layers))
}

fn bfs<K: PackedKey>(
    shape: Shape,
    gens: &[Vec<u8>],
    max_elements: usize,
) -> Result<(Vec<u8>, Vec<usize>)> {
    let stride = shape.label_count();
    let bits = bits_per_label(shape);
    let mut labels = vec![0u8; stride];
    let mut visited: HashSet<K> = HashSet::new();
    visited.insert(K::pack(&labels, bits));
    let mut layers = vec![1];
    let (mut start, mut end) = (0usize, 1usize);
    while start < end {
        let frontier: Vec<usize> = (start..end).collect();
        let found: Vec<(K, u32, u16)> = frontier
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut scratch = Scratch::default();
                let mut out = vec![0u8; stride];
                let mut found = Vec::new();
                for &i in chunk {
                    let g = &labels[i * stride..(i + 1) * stride];
                    for (gi, h) in gens.iter().enumerate() {
                        scratch.compose(shape, g, h, &mut out);
                        let key = K::pack(&out, bits);
                        if !visited.contains(&key) {
                            found.push((key, i as u32, gi as u16));
                        }
                    }
                }
                found
            })
            .flatten_iter()
            .collect();
        let mut found = found;
        found.par_sort_unstable();
        found.dedup_by(|x, y| x.0 == y.0);
        let total = visited.len() + found.len();
        if total > max_elements {
            return Err(Error::LimitExceeded {
                limit: max_elements,
                partial: total,
            });
        }
        labels.reserve(found.len() * stride);
        let mut scratch = Scratch::default();
        let mut out = vec![0u8; stride];
        for (key, parent, gi) in found {
            let parent = parent as usize;
            scratch.compose(
                shape,
                &labels[parent * stride..(parent + 1) * stride],
                &gens[gi as usize],
                &mut out,
            );
            labels.extend_from_slice(&out);
            visited.insert(key);
        }
        start = end;
        end = visited.len();
        if end > start {
            layers.push(end - start);
        }
    }
    Ok((labels, layers))
}

/// Like [`enumerate`], reusing a content-addressed element file under
/// `cache_dir` when one exists for `(spec, n)`.
pub fn enumerate_cached(
    spec: &GroupSpec,
    n: u32,
    limits: &EnumerationLimits,
    cache_dir: &Path,
) -> Result<QuotientGroup> {
    let path = cache_path(spec, n, cache_dir);
    let shape = Shape::new(spec.p(), n)?;
    if let Ok(file) = fs::File::open(&path) {
        if let Ok((cached_shape, labels)) = read_flat(BufReader::new(file)) {
            let count = labels.len() / shape.label_count();
            if cached_shape == shape && count <= limits.max_elements {
                let (words, _) = closure_generators(spec, shape)?;
                return Ok(QuotientGroup::from_flat(spec, shape, words, labels, Vec::new()));
            }
        }
    }
    let q = enumerate(spec, n, limits)?;
    fs::create_dir_all(cache_dir)?;
    let tmp = path.with_extension("tmp");
    q.write_export(BufWriter::new(fs::File::create(&tmp)?))?;
    fs::rename(&tmp, &path)?;
    Ok(q)
}

pub fn cache_path(spec: &GroupSpec, n: u32, cache_dir: &Path) -> PathBuf {
    cache_dir.join(format!("{}.txt", spec.content_hash(n)))
}

/// Header `p=<p> n=<n>`, then one digit string per element.
pub fn write_elements<'a, W: Write>(
    w: W,
    shape: Shape,
    elements: impl IntoIterator<Item = &'a [u8]>,
) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "p={} n={}", shape.p(), shape.depth())?;
    let mut line = String::with_capacity(shape.label_count() + 1);
    for labels in elements {
        line.clear();
        line.extend(
            labels
                .iter()
                .map(|&l| char::from_digit(u32::from(l), 36).expect("p <= 31")),
        );
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<Shape> {
    let bad = || Error::Input(format!("bad element file header `{line}`"));
    let mut parts = line.split_whitespace();
    let p = parts
        .next()
        .and_then(|s| s.strip_prefix("p="))
        .and_then(|s| s.parse::<u32>().ok())
        .ok_or_else(bad)?;
    let n = parts
        .next()
        .and_then(|s| s.strip_prefix("n="))
        .and_then(|s| s.parse::<u32>().ok())
        .ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Shape::new(crate::fp::Prime::new(p)?, n)
}

fn read_flat<R: BufRead>(r: R) -> Result<(Shape, Vec<u8>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Input("empty element file".into()))??;
    let shape = parse_header(&header)?;
    let mut labels = Vec::new();
    for line in lines {
        let g = TruncAut::decode(shape, &line?)?;
        labels.extend_from_slice(g.labels());
    }
    Ok((shape, labels))
}

/// Parse a canonical element file.
pub fn read_elements<R: BufRead>(r: R) -> Result<(Shape, Vec<TruncAut>)> {
    let (shape, labels) = read_flat(r)?;
    let elements = labels
        .chunks(shape.label_count())
        .map(|c| TruncAut::from_labels(shape, c.to_vec()))
        .collect::<Result<_>>()?;
    Ok((shape, elements))
}

/// The generating set Δ of the first level stabilizer: `c_0, .., c_{p-1}`
/// for GGS specs, otherwise every conjugate `a^-l d_j.m a^l` of a nonzero
/// directed generator. Portraits are deduplicated, first occurrence kept.
pub fn stabilizer_generators(spec: &GroupSpec, n: u32) -> Result<Vec<(Word, TruncAut)>> {
    let pu = spec.p().get() as usize;
    let mut words = Vec::new();
    if classify(spec).family == Family::Ggs {
        words.extend((0..pu).map(|i| Word::single(Generator::C(i), 1)));
    } else {
        for (j, m, e) in spec.directed_vectors() {
            if e.is_zero() {
                continue;
            }
            for l in 0..pu as i64 {
                let mut w = Word::empty();
                w.push(Generator::A, -l);
                w.push(Generator::D { j, m }, 1);
                w.push(Generator::A, l);
                words.push(w);
            }
        }
    }
    let mut out: Vec<(Word, TruncAut)> = Vec::new();
    for w in words {
        let g = spec.evaluate(&w, n)?;
        if !out.iter().any(|(_, h)| *h == g) {
            out.push((w, g));
        }
    }
    Ok(out)
}

/// Shortest word over the stabilizer generators whose depth-`n` evaluation
/// has the prescribed sections at the masked first-level positions
/// (1-based). Ties between equally short words go to the smaller generator
/// sequence.
pub fn find_preimage(
    spec: &GroupSpec,
    n: u32,
    targets: &SectionTuple,
    mask: &[usize],
    limits: &EnumerationLimits,
) -> Result<Word> {
    let pu = spec.p().get() as usize;
    if n < 2 {
        return Err(Error::Input("preimage search needs depth at least 2".into()));
    }
    let shape = Shape::new(spec.p(), n)?;
    let inner = targets.shape();
    if inner != Shape::new(spec.p(), n - 1)? {
        return Err(Error::ShapeMismatch(format!(
            "targets at {inner}, expected depth {}",
            n - 1
        )));
    }
    if let Some(&bad) = mask.iter().find(|&&i| i == 0 || i > pu) {
        return Err(Error::Input(format!("mask position {bad} outside 1..={pu}")));
    }
    let gens = stabilizer_generators(spec, n)?;
    let stride = shape.label_count();
    let matches = |g: &[u8]| {
        mask.iter().all(|&i| {
            let t = targets.component(i).labels();
            (0..inner.depth()).all(|k| {
                let width = inner.level_width(k);
                let src = shape.level_offset(k + 1) + (i - 1) * width;
                let dst = inner.level_offset(k);
                g[src..src + width] == t[dst..dst + width]
            })
        })
    };

    let mut labels = vec![0u8; stride];
    let mut parents: Vec<(u32, u16)> = vec![(u32::MAX, 0)];
    let mut seen: HashSet<Box<[u8]>> = HashSet::new();
    seen.insert(labels.clone().into_boxed_slice());
    let mut scratch = Scratch::default();
    let mut out = vec![0u8; stride];
    let mut head = 0;
    while head < parents.len() {
        if matches(&labels[head * stride..(head + 1) * stride]) {
            return Ok(trace_word(&parents, &gens, head));
        }
        for (gi, (_, h)) in gens.iter().enumerate() {
            scratch.compose(shape, &labels[head * stride..(head + 1) * stride], h.labels(), &mut out);
            if seen.contains(out.as_slice()) {
                continue;
            }
            if parents.len() >= limits.max_elements {
                return Err(Error::LimitExceeded {
                    limit: limits.max_elements,
                    partial: parents.len(),
                });
            }
            seen.insert(out.clone().into_boxed_slice());
            labels.extend_from_slice(&out);
            parents.push((head as u32, gi as u16));
        }
        head += 1;
    }
    Err(Error::NotFound {
        searched: parents.len(),
    })
}

fn trace_word(parents: &[(u32, u16)], gens: &[(Word, TruncAut)], mut at: usize) -> Word {
    let mut steps = Vec::new();
    while parents[at].0 != u32::MAX {
        steps.push(parents[at].1 as usize);
        at = parents[at].0 as usize;
    }
    let mut word = Word::empty();
    for gi in steps.into_iter().rev() {
        word.extend(&gens[gi].0);
    }
    word
}
