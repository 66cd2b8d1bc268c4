//! Multi-EGS group specifications and their generators.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fp::{self, FpScalar, FpVector, Prime};
use crate::tree::{Shape, TruncAut};
use crate::word::{Generator, Word};

/// A prime and, for each direction `j = 1..=p`, a list of defining vectors
/// generating `E^(j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSpec {
    p: Prime,
    spaces: Vec<Vec<FpVector>>,
}

/// On-disk form: `{"p": int, "spaces": [[[int; p-1]; *]; p]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub p: i64,
    pub spaces: Vec<Vec<Vec<i64>>>,
}

impl GroupSpec {
    pub fn new(p: Prime, spaces: Vec<Vec<FpVector>>) -> Result<Self> {
        let pu = p.get() as usize;
        if spaces.len() != pu {
            return Err(Error::Input(format!(
                "expected {pu} spaces, found {}",
                spaces.len()
            )));
        }
        for (j, space) in spaces.iter().enumerate() {
            for e in space {
                if e.modulus() != p || e.len() != pu - 1 {
                    return Err(Error::Input(format!(
                        "vector {e} in space {} must have length {} over F_{p}",
                        j + 1,
                        pu - 1
                    )));
                }
            }
        }
        if spaces.iter().flatten().all(FpVector::is_zero) {
            return Err(Error::AllSpacesNull);
        }
        Ok(GroupSpec { p, spaces })
    }

    pub fn from_raw(raw: &RawSpec) -> Result<Self> {
        let p = u32::try_from(raw.p)
            .map_err(|_| Error::NotPrime(raw.p.unsigned_abs()))
            .and_then(Prime::new)?;
        let spaces = raw
            .spaces
            .iter()
            .map(|space| {
                space
                    .iter()
                    .map(|ints| FpVector::from_ints(p, ints))
                    .collect()
            })
            .collect();
        GroupSpec::new(p, spaces)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("malformed spec document: {e}")))?;
        GroupSpec::from_raw(&raw)
    }

    pub fn to_raw(&self) -> RawSpec {
        RawSpec {
            p: i64::from(self.p.get()),
            spaces: self
                .spaces
                .iter()
                .map(|space| {
                    space
                        .iter()
                        .map(|e| e.entries().iter().map(|&x| i64::from(x)).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("plain data serializes")
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    /// Generating vectors of `E^(j)`, `j` 1-based.
    pub fn space(&self, j: usize) -> &[FpVector] {
        &self.spaces[j - 1]
    }

    pub fn spaces(&self) -> &[Vec<FpVector>] {
        &self.spaces
    }

    /// Every `(j, m, e)` with `e` the `m`-th listed vector of `E^(j)`.
    pub fn directed_vectors(&self) -> impl Iterator<Item = (usize, usize, &FpVector)> {
        self.spaces.iter().enumerate().flat_map(|(j, space)| {
            space
                .iter()
                .enumerate()
                .map(move |(m, e)| (j + 1, m + 1, e))
        })
    }

    /// Dimension of the span of `E^(j)`.
    pub fn span_dim(&self, j: usize) -> usize {
        fp::rank(&self.spaces[j - 1]).expect("validated at construction")
    }

    /// The GGS defining vector: the first nonzero vector listed in `E^(p)`,
    /// when the spec is a GGS spec.
    pub fn ggs_vector(&self) -> Option<&FpVector> {
        (classify(self).family == Family::Ggs).then(|| {
            self.spaces[self.p.get() as usize - 1]
                .iter()
                .find(|e| !e.is_zero())
                .expect("GGS spaces have a nonzero vector")
        })
    }

    /// Hex SHA-256 of the normalized spec together with a level.
    pub fn content_hash(&self, n: u32) -> String {
        let mut h = Sha256::new();
        h.update(self.to_json().as_bytes());
        h.update(b"\nn=");
        h.update(n.to_string().as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn vector(&self, j: usize, m: usize) -> Result<&FpVector> {
        self.spaces
            .get(j.wrapping_sub(1))
            .and_then(|s| s.get(m.wrapping_sub(1)))
            .ok_or_else(|| Error::Input(format!("generator d{j}.{m} does not exist")))
    }

    /// Portrait of a single generator at the given shape.
    pub fn generator(&self, g: Generator, shape: Shape) -> Result<TruncAut> {
        self.check_shape(shape)?;
        match g {
            Generator::A => Ok(gen_a(shape)),
            Generator::D { j, m } => gen_directed(shape, j, self.vector(j, m)?),
            Generator::C(i) => {
                let e = self.ggs_vector().ok_or_else(|| {
                    Error::Input(format!("c{i} is only defined for GGS specs"))
                })?;
                if i >= self.p.get() as usize {
                    return Err(Error::Input(format!("c{i} needs index below {}", self.p)));
                }
                let c = gen_directed(shape, self.p.get() as usize, e)?;
                let a = gen_a(shape);
                let ai = a.power(i as i64);
                ai.inverse().compose(&c)?.compose(&ai)
            }
        }
    }

    fn check_shape(&self, shape: Shape) -> Result<()> {
        if shape.p() != self.p {
            return Err(Error::ShapeMismatch(format!(
                "spec over p={} evaluated at {shape}",
                self.p
            )));
        }
        Ok(())
    }

    /// Left-to-right product of the word's generator powers at depth `n`.
    pub fn evaluate(&self, word: &Word, n: u32) -> Result<TruncAut> {
        let shape = Shape::new(self.p, n)?;
        let mut acc = TruncAut::identity(shape);
        let mut cache: Vec<(Generator, TruncAut)> = Vec::new();
        for t in word.tokens() {
            let g = match cache.iter().find(|(g, _)| *g == t.generator) {
                Some((_, g)) => g.clone(),
                None => {
                    let g = self.generator(t.generator, shape)?;
                    cache.push((t.generator, g.clone()));
                    g
                }
            };
            acc = acc.compose(&g.power(t.exponent))?;
        }
        Ok(acc)
    }

    /// The generating set `a, d_j.m` of the group, as words and portraits.
    pub fn generators(&self, shape: Shape) -> Result<Vec<(Word, TruncAut)>> {
        let mut out = vec![(Word::single(Generator::A, 1), gen_a(shape))];
        for (j, m, e) in self.directed_vectors() {
            out.push((
                Word::single(Generator::D { j, m }, 1),
                gen_directed(shape, j, e)?,
            ));
        }
        Ok(out)
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

/// The rooted automorphism: label 1 at the root, 0 elsewhere.
pub fn gen_a(shape: Shape) -> TruncAut {
    let mut labels = vec![0; shape.label_count()];
    labels[0] = 1;
    TruncAut::from_labels(shape, labels).expect("valid portrait")
}

/// The directed automorphism along `P_j` with defining vector `e`.
///
/// Labels vanish on the path `j^k` and everywhere off its immediate
/// neighbourhood; the child `j^k i` (`i != j`) carries `e_{(i - j) mod p}`.
pub fn gen_directed(shape: Shape, j: usize, e: &FpVector) -> Result<TruncAut> {
    let p = shape.p();
    let pu = p.get() as usize;
    if !(1..=pu).contains(&j) {
        return Err(Error::Input(format!("direction {j} outside 1..={pu}")));
    }
    if e.modulus() != p || e.len() != pu - 1 {
        return Err(Error::Input(format!(
            "defining vector {e} must have length {} over F_{p}",
            pu - 1
        )));
    }
    let mut labels = vec![0; shape.label_count()];
    // in-level position of j^k
    let mut path_pos = 0usize;
    for k in 0..shape.depth().saturating_sub(1) {
        let child_level = shape.level_offset(k + 1);
        for i in 1..=pu {
            if i != j {
                let idx = (i + pu - j) % pu;
                labels[child_level + path_pos * pu + (i - 1)] = e.entries()[idx - 1];
            }
        }
        path_pos = path_pos * pu + (j - 1);
    }
    TruncAut::from_labels(shape, labels)
}

/// The automorphism with every label equal to `p - j`; it conjugates the
/// directed automorphism along `P_j` to the one along `P_p`.
pub fn conjugator_to_pp(shape: Shape, j: usize) -> Result<TruncAut> {
    let pu = shape.p().get() as usize;
    if !(1..=pu).contains(&j) {
        return Err(Error::Input(format!("direction {j} outside 1..={pu}")));
    }
    let label = ((pu - j) % pu) as u8;
    TruncAut::from_labels(shape, vec![label; shape.label_count()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "GGS")]
    Ggs,
    #[serde(rename = "multi-GGS")]
    MultiGgs,
    #[serde(rename = "multi-EGS")]
    MultiEgs,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Ggs => "GGS",
            Family::MultiGgs => "multi-GGS",
            Family::MultiEgs => "multi-EGS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub family: Family,
    pub periodic: bool,
    /// Coordinate sum of the GGS defining vector.
    pub x: Option<FpScalar>,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let periodic = if self.periodic {
            "periodic"
        } else {
            "non-periodic"
        };
        write!(f, "{periodic} {}", self.family)
    }
}

/// Family by span dimensions; periodic iff every listed vector sums to zero.
pub fn classify(spec: &GroupSpec) -> Classification {
    let pu = spec.p.get() as usize;
    let others_null = (1..pu).all(|j| spec.span_dim(j) == 0);
    let family = match (others_null, spec.span_dim(pu)) {
        (true, 1) => Family::Ggs,
        (true, _) => Family::MultiGgs,
        _ => Family::MultiEgs,
    };
    let periodic = spec
        .spaces
        .iter()
        .flatten()
        .all(|e| fp::in_hyperplane_v(e).expect("validated length"));
    let x = (family == Family::Ggs).then(|| {
        spec.spaces[pu - 1]
            .iter()
            .find(|e| !e.is_zero())
            .expect("GGS has a nonzero vector")
            .coordinate_sum()
    });
    Classification {
        family,
        periodic,
        x,
    }
}
