//! Decidable presentations of the countable homogeneous targets and the
//! one-point extension search used by every construction.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::{BitDescriptor, BitSource};
use crate::error::{Error, Result};
use crate::ranked::{self, PrimeTable};
use crate::structure::{for_each_tuple, is_embedding, FinStructure, Mapping, Oracle, Signature, Vertex, VertexSet};

/// Default ceiling for linear witness scans on presentations without a
/// closed-form solver.
pub const DEFAULT_SCAN_BOUND: Vertex = 1 << 20;

/// Serializable description of a presentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PresentationDescriptor {
    Rado,
    Complete,
    LdiagPrimes { levels: usize },
    LdiagBits { levels: usize, bits: BitDescriptor },
}

/// Short forms: `rado`, `complete`, `ldiag_primes:3`, `ldiag_bits:2:prng:7`,
/// or a JSON object.
impl FromStr for PresentationDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Invalid(format!("presentation descriptor: {e}")));
        }
        let mut parts = s.splitn(3, ':');
        let kind = parts.next().unwrap_or_default();
        let levels = |p: Option<&str>| -> Result<usize> {
            p.ok_or_else(|| Error::Invalid(format!("`{kind}` needs a level count")))?
                .parse()
                .map_err(|_| Error::Invalid(format!("bad level count in `{s}`")))
        };
        match kind {
            "rado" => Ok(PresentationDescriptor::Rado),
            "complete" => Ok(PresentationDescriptor::Complete),
            "ldiag_primes" | "primes" => Ok(PresentationDescriptor::LdiagPrimes { levels: levels(parts.next())? }),
            "ldiag_bits" | "bits" => {
                let levels = levels(parts.next())?;
                let bits = parts
                    .next()
                    .ok_or_else(|| Error::Invalid("ldiag_bits needs a bits descriptor".into()))?
                    .parse()?;
                Ok(PresentationDescriptor::LdiagBits { levels, bits })
            }
            _ => Err(Error::Invalid(format!("unknown presentation `{s}`"))),
        }
    }
}

impl fmt::Display for PresentationDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresentationDescriptor::Rado => write!(f, "rado"),
            PresentationDescriptor::Complete => write!(f, "complete"),
            PresentationDescriptor::LdiagPrimes { levels } => write!(f, "ldiag_primes:{levels}"),
            PresentationDescriptor::LdiagBits { levels, bits } => write!(f, "ldiag_bits:{levels}:{bits}"),
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Rado,
    Complete,
    LdiagPrimes(Arc<PrimeTable>),
    LdiagBits { levels: usize, bits: BitSource },
}

/// A recursive structure on the naturals, queried through [`Oracle`].
///
/// For the ℓ-diagram kinds vertex `v` is the pair `(v mod ℓ, v div ℓ)`; the
/// signature is `L0..L{ℓ-1}` (levels) plus the upward succession `S`.
#[derive(Debug, Clone)]
pub struct LimitPresentation {
    descriptor: PresentationDescriptor,
    signature: Signature,
    kind: Kind,
    scan_bound: Vertex,
}

impl LimitPresentation {
    pub fn new(descriptor: &PresentationDescriptor) -> Result<Self> {
        let (signature, kind) = match descriptor {
            PresentationDescriptor::Rado => (Signature::graph(), Kind::Rado),
            PresentationDescriptor::Complete => (Signature::graph(), Kind::Complete),
            PresentationDescriptor::LdiagPrimes { levels } => {
                check_levels(*levels)?;
                (Signature::ldiag(*levels), Kind::LdiagPrimes(Arc::new(PrimeTable::new(*levels))))
            }
            PresentationDescriptor::LdiagBits { levels, bits } => {
                check_levels(*levels)?;
                let bits = BitSource::new(bits)?;
                (Signature::ldiag(*levels), Kind::LdiagBits { levels: *levels, bits })
            }
        };
        Ok(LimitPresentation { descriptor: descriptor.clone(), signature, kind, scan_bound: DEFAULT_SCAN_BOUND })
    }

    pub fn rado() -> Self {
        Self::new(&PresentationDescriptor::Rado).expect("rado is always valid")
    }

    pub fn complete() -> Self {
        Self::new(&PresentationDescriptor::Complete).expect("complete is always valid")
    }

    pub fn ldiag_primes(levels: usize) -> Result<Self> {
        Self::new(&PresentationDescriptor::LdiagPrimes { levels })
    }

    pub fn ldiag_bits(levels: usize, bits: &BitSource) -> Result<Self> {
        check_levels(levels)?;
        Ok(LimitPresentation {
            descriptor: PresentationDescriptor::LdiagBits { levels, bits: bits.descriptor().clone() },
            signature: Signature::ldiag(levels),
            kind: Kind::LdiagBits { levels, bits: bits.clone() },
            scan_bound: DEFAULT_SCAN_BOUND,
        })
    }

    /// Overrides the ceiling used by linear scans (ignored by Rado, whose
    /// witnesses are computed in closed form over all of `u64`).
    pub fn with_scan_bound(mut self, bound: Vertex) -> Self {
        self.scan_bound = bound;
        self
    }

    pub fn descriptor(&self) -> &PresentationDescriptor {
        &self.descriptor
    }

    /// Largest vertex any search on this presentation will consider.
    pub fn search_ceiling(&self) -> Vertex {
        match self.kind {
            Kind::Rado => Vertex::MAX,
            _ => self.scan_bound,
        }
    }

    pub fn is_rado(&self) -> bool {
        matches!(self.kind, Kind::Rado)
    }

    pub fn is_graph(&self) -> bool {
        matches!(self.kind, Kind::Rado | Kind::Complete)
    }

    /// Number of levels for the ℓ-diagram kinds.
    pub fn levels(&self) -> Option<usize> {
        match &self.kind {
            Kind::LdiagPrimes(pt) => Some(pt.levels()),
            Kind::LdiagBits { levels, .. } => Some(*levels),
            _ => None,
        }
    }

    /// Level and in-level index of a vertex of an ℓ-diagram kind.
    pub fn split(&self, v: Vertex) -> Option<(usize, u64)> {
        self.levels().map(|l| ((v % l as u64) as usize, v / l as u64))
    }

    /// Vertex id of the pair `(i, n)`.
    pub fn vertex(&self, i: usize, n: u64) -> Result<Vertex> {
        let l = self.levels().ok_or_else(|| Error::Precondition("not an ℓ-diagram presentation".into()))?;
        if i >= l {
            return Err(Error::Precondition(format!("level {i} out of range for {l} levels")));
        }
        n.checked_mul(l as u64)
            .and_then(|x| x.checked_add(i as u64))
            .ok_or_else(|| Error::Invalid(format!("vertex ({i},{n}) overflows")))
    }

    /// Succession between `(i,n)` and `(i+1,m)` in an ℓ-diagram kind.
    pub fn succession(&self, lower: Vertex, upper: Vertex) -> Result<bool> {
        let l = match self.levels() {
            Some(l) => l as u64,
            None => return Err(Error::Precondition("not an ℓ-diagram presentation".into())),
        };
        let (i, n) = ((lower % l) as usize, lower / l);
        let (j, m) = ((upper % l) as usize, upper / l);
        if j != i + 1 {
            return Ok(false);
        }
        match &self.kind {
            Kind::LdiagPrimes(pt) => ranked::prime_adjacent(pt, (i, n), (j, m)),
            Kind::LdiagBits { levels, bits } => ranked::bits_adjacent(bits, *levels, (i, n), (j, m)),
            _ => unreachable!(),
        }
    }

    /// Least `z` in `[lo, hi]` realizing the task, or `None`.
    pub fn least_witness_in(&self, task: &ExtensionTask, lo: Vertex, hi: Vertex) -> Result<Option<Vertex>> {
        task.check_consistent()?;
        if lo > hi {
            return Ok(None);
        }
        if self.is_rado() {
            return Ok(task.rado_requirements().and_then(|reqs| rado_least(&reqs, &task.excluded, lo, hi)));
        }
        let (start, step) = match self.levels() {
            Some(l) => {
                let level = self.task_level(task)?;
                let l = l as u64;
                let base = lo - lo % l + level as u64;
                let start = if base < lo { base.checked_add(l) } else { Some(base) };
                match start {
                    Some(s) => (s, l),
                    None => return Ok(None),
                }
            }
            None => (lo, 1),
        };
        let mut z = start;
        while z <= hi {
            if !task.excluded.contains(z) && task.satisfied_by(self, z)? {
                return Ok(Some(z));
            }
            z = match z.checked_add(step) {
                Some(n) => n,
                None => break,
            };
        }
        Ok(None)
    }

    fn task_level(&self, task: &ExtensionTask) -> Result<usize> {
        if let Some(l) = task.level {
            return Ok(l);
        }
        let levels = self.levels().unwrap_or(0);
        task.positive
            .iter()
            .find(|c| c.rel < levels && c.slots == [Slot::Hole])
            .map(|c| c.rel)
            .ok_or_else(|| Error::Precondition("ℓ-diagram extension task needs a level".into()))
    }
}

fn check_levels(levels: usize) -> Result<()> {
    if levels < 2 {
        return Err(Error::Invalid(format!("an ℓ-diagram needs at least 2 levels, got {levels}")));
    }
    Ok(())
}

impl Oracle for LimitPresentation {
    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn query(&self, rel: usize, tuple: &[Vertex]) -> Result<bool> {
        if rel >= self.signature.len() || tuple.len() != self.signature.arity(rel) {
            return Err(Error::Invalid(format!("bad query: relation {rel} on {tuple:?}")));
        }
        match &self.kind {
            Kind::Rado => Ok(rado_edge(tuple[0], tuple[1])),
            Kind::Complete => Ok(tuple[0] != tuple[1]),
            Kind::LdiagPrimes(_) | Kind::LdiagBits { .. } => {
                let l = self.levels().expect("ℓ-diagram kind") as u64;
                if rel < l as usize {
                    Ok(tuple[0] % l == rel as u64)
                } else {
                    self.succession(tuple[0], tuple[1])
                }
            }
        }
    }
}

fn rado_edge(m: Vertex, n: Vertex) -> bool {
    let (a, b) = if m < n { (m, n) } else { (n, m) };
    a != b && a < 64 && (b >> a) & 1 == 1
}

/// The BIT predicate: with `a = min`, `b = max`, bit `a` of `b`.
pub fn rado_adjacent(m: Vertex, n: Vertex) -> Result<bool> {
    if m == n {
        return Err(Error::Precondition(format!("rado_adjacent({m},{m}): graphs are irreflexive")));
    }
    Ok(rado_edge(m, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Fixed(Vertex),
    Hole,
}

/// A relation atom whose tuple mentions the unknown point one or more times.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub rel: usize,
    pub slots: Vec<Slot>,
}

impl Constraint {
    pub fn new(rel: usize, slots: Vec<Slot>) -> Self {
        Constraint { rel, slots }
    }

    fn fill(&self, z: Vertex, buf: &mut Vec<Vertex>) {
        buf.clear();
        buf.extend(self.slots.iter().map(|s| match s {
            Slot::Fixed(v) => *v,
            Slot::Hole => z,
        }));
    }
}

/// One-point extension task: find `z ∉ excluded` with every positive atom
/// true and every negative atom false.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtensionTask {
    pub positive: Vec<Constraint>,
    pub negative: Vec<Constraint>,
    pub excluded: VertexSet,
    pub level: Option<usize>,
}

impl ExtensionTask {
    /// Graph task: adjacent to every vertex of `adjacent`, to none of
    /// `non_adjacent`.
    pub fn graph(adjacent: &[Vertex], non_adjacent: &[Vertex], excluded: VertexSet) -> Self {
        let atom = |&u: &Vertex| Constraint::new(0, vec![Slot::Hole, Slot::Fixed(u)]);
        ExtensionTask {
            positive: adjacent.iter().map(atom).collect(),
            negative: non_adjacent.iter().map(atom).collect(),
            excluded,
            level: None,
        }
    }

    /// The type of `new` over `base` in `source`, transported along
    /// `base[i] ↦ images[i]`: one atom per tuple over `base ∪ {new}` that
    /// mentions `new`.
    pub fn type_of<O: Oracle + ?Sized>(
        source: &O,
        base: &[Vertex],
        new: Vertex,
        images: &[Vertex],
        excluded: VertexSet,
    ) -> Result<Self> {
        assert_eq!(base.len(), images.len(), "base and images must align");
        let sig = source.signature().clone();
        let mut elems: Vec<Option<usize>> = (0..base.len()).map(Some).collect();
        elems.push(None);
        let mut task = ExtensionTask { excluded, ..Default::default() };
        let mut probe = Vec::new();
        for rel in 0..sig.len() {
            for_each_tuple(&elems, sig.arity(rel), |t| {
                if t.iter().all(Option::is_some) {
                    return Ok(());
                }
                probe.clear();
                probe.extend(t.iter().map(|e| e.map_or(new, |i| base[i])));
                let slots = t.iter().map(|e| e.map_or(Slot::Hole, |i| Slot::Fixed(images[i]))).collect();
                let atom = Constraint::new(rel, slots);
                if source.query(rel, &probe)? {
                    task.positive.push(atom);
                } else {
                    task.negative.push(atom);
                }
                Ok(())
            })?;
        }
        Ok(task)
    }

    pub fn check_consistent(&self) -> Result<()> {
        if self.positive.iter().any(|c| self.negative.contains(c)) {
            return Err(Error::InconsistentTask);
        }
        Ok(())
    }

    pub fn satisfied_by<O: Oracle + ?Sized>(&self, oracle: &O, z: Vertex) -> Result<bool> {
        let mut buf = Vec::new();
        for c in &self.positive {
            c.fill(z, &mut buf);
            if !oracle.query(c.rel, &buf)? {
                return Ok(false);
            }
        }
        for c in &self.negative {
            c.fill(z, &mut buf);
            if oracle.query(c.rel, &buf)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Reduces a graph task to `(u, adjacent?)` pairs; `None` when some atom
    /// can never hold.
    fn rado_requirements(&self) -> Option<Vec<(Vertex, bool)>> {
        let mut reqs = Vec::new();
        for (atoms, want) in [(&self.positive, true), (&self.negative, false)] {
            for c in atoms {
                match c.slots[..] {
                    [Slot::Hole, Slot::Fixed(u)] | [Slot::Fixed(u), Slot::Hole] => reqs.push((u, want)),
                    [Slot::Hole, Slot::Hole] if want => return None,
                    [Slot::Hole, Slot::Hole] => {}
                    [Slot::Fixed(a), Slot::Fixed(b)] if rado_edge(a, b) != want => return None,
                    _ => {}
                }
            }
        }
        reqs.sort_unstable();
        reqs.dedup();
        Some(reqs)
    }
}

/// Least `z ∈ [lo, hi]` with `z ∉ excluded` and `rado_edge(z, u) == want`
/// for every requirement, computed without scanning.
///
/// Between consecutive requirement vertices the constraints split into
/// bit conditions on `z` (from vertices below) and conditions on bit `z` of
/// the vertices above; the latter either pin `z` to a set bit of some `u`
/// or forbid finitely many values.
fn rado_least(reqs: &[(Vertex, bool)], excluded: &VertexSet, lo: Vertex, hi: Vertex) -> Option<Vertex> {
    let ok = |z: Vertex| !excluded.contains(z) && reqs.iter().all(|&(u, want)| rado_edge(z, u) == want);
    let mut points: Vec<Vertex> = reqs.iter().map(|r| r.0).collect();
    points.dedup();
    let mut seg_lo = Some(0);
    for idx in 0..=points.len() {
        let seg_hi = match points.get(idx) {
            Some(&0) => None,
            Some(&c) => Some(c - 1),
            None => Some(Vertex::MAX),
        };
        if let (Some(a), Some(b)) = (seg_lo, seg_hi) {
            let (from, to) = (a.max(lo), b.min(hi));
            if from <= to {
                if let Some(z) = rado_segment(reqs, excluded, from, to) {
                    debug_assert!(ok(z));
                    return Some(z);
                }
            }
        }
        match points.get(idx) {
            Some(&c) => {
                if c >= lo && c <= hi && ok(c) {
                    return Some(c);
                }
                seg_lo = c.checked_add(1);
                seg_lo?;
            }
            None => break,
        }
    }
    None
}

/// Least witness in `[from, to]`, a range containing no requirement vertex.
fn rado_segment(reqs: &[(Vertex, bool)], excluded: &VertexSet, from: Vertex, to: Vertex) -> Option<Vertex> {
    let (below, above): (Vec<&(Vertex, bool)>, Vec<&(Vertex, bool)>) = reqs.iter().partition(|r| r.0 < from);
    if let Some(&&(u, _)) = above.iter().find(|r| r.1) {
        return (0..64.min(to.saturating_add(1)))
            .filter(|&z| z >= from && (u >> z) & 1 == 1)
            .find(|&z| !excluded.contains(z) && reqs.iter().all(|&(v, want)| rado_edge(z, v) == want));
    }
    let (mut must, mut must_not) = (0u64, 0u64);
    for &&(u, want) in &below {
        match (u < 64, want) {
            (true, true) => must |= 1 << u,
            (true, false) => must_not |= 1 << u,
            (false, true) => return None,
            (false, false) => {}
        }
    }
    let forbidden =
        |z: Vertex| excluded.contains(z) || (z < 64 && above.iter().any(|&&(u, _)| (u >> z) & 1 == 1));
    let mut x = from;
    loop {
        let z = next_masked(x, must, must_not)?;
        if z > to {
            return None;
        }
        if !forbidden(z) {
            return Some(z);
        }
        x = z.checked_add(1)?;
    }
}

/// Least `z ≥ x` with every bit of `must` set and every bit of `must_not` clear.
fn next_masked(x: u64, must: u64, must_not: u64) -> Option<u64> {
    if must & must_not != 0 {
        return None;
    }
    if x & must == must && x & must_not == 0 {
        return Some(x);
    }
    (0..64).find_map(|p| {
        let bit = 1u64 << p;
        if x & bit != 0 || must_not & bit != 0 {
            return None;
        }
        let above = if p == 63 { 0 } else { !((bit << 1) - 1) };
        let high = x & above;
        if high & must_not != 0 || high & must & above != must & above {
            return None;
        }
        Some(high | bit | (must & (bit - 1)))
    })
}

/// Least `z ≤ bound` realizing the task.
pub fn extension_witness(pres: &LimitPresentation, task: &ExtensionTask, bound: Vertex) -> Result<Option<Vertex>> {
    pres.least_witness_in(task, 0, bound)
}

/// Extends `h: A → pres` to `B`, where `A` is `B` minus its last element,
/// by realizing the last element's type.
pub fn check_homogeneity_sample(
    pres: &LimitPresentation,
    a: &FinStructure,
    b: &FinStructure,
    h: &Mapping,
    bound: Vertex,
) -> Result<Option<Mapping>> {
    if b.size() != a.size() + 1 {
        return Err(Error::Precondition(format!(
            "B must have exactly one more element than A ({} vs {})",
            b.size(),
            a.size()
        )));
    }
    let keep: Vec<usize> = (0..a.size()).collect();
    if b.restrict(&keep) != *a {
        return Err(Error::Precondition("A is not the substructure of B on its first elements".into()));
    }
    if h.len() != a.size() || !is_embedding(h, a, pres)? {
        return Err(Error::Precondition("h does not embed A into the presentation".into()));
    }
    let base: Vec<Vertex> = (0..a.size() as Vertex).collect();
    let task = ExtensionTask::type_of(b, &base, a.size() as Vertex, h.images(), h.image())?;
    Ok(extension_witness(pres, &task, bound)?.map(|z| h.extended(z)))
}
