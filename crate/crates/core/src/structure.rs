//! Finite relational structures on finite ordinals, vertex sets with their
//! canonical binary code, mappings, and brute-force isomorphism search.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vertices of the countable structures are naturals.
pub type Vertex = u64;

/// Default cap on the number of elements `find_isomorphism` will accept.
pub const DEFAULT_ISO_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
}

/// A finite relational signature. Names are distinct and arities are >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    relations: Vec<RelationSymbol>,
}

impl Signature {
    pub fn new(relations: Vec<RelationSymbol>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &relations {
            if r.arity == 0 {
                return Err(Error::Invalid(format!("relation {} has arity 0", r.name)));
            }
            if !seen.insert(r.name.as_str()) {
                return Err(Error::Invalid(format!("duplicate relation name {}", r.name)));
            }
        }
        Ok(Signature { relations })
    }

    /// One symmetric binary relation `E`.
    pub fn graph() -> Self {
        Signature { relations: vec![RelationSymbol { name: "E".into(), arity: 2 }] }
    }

    /// Unary level predicates `L0..L{levels-1}` followed by the binary succession `S`.
    pub fn ldiag(levels: usize) -> Self {
        let mut relations: Vec<RelationSymbol> =
            (0..levels).map(|i| RelationSymbol { name: format!("L{i}"), arity: 1 }).collect();
        relations.push(RelationSymbol { name: "S".into(), arity: 2 });
        Signature { relations }
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn arity(&self, rel: usize) -> usize {
        self.relations[rel].arity
    }
}

/// Anything that answers relation queries over naturals: the limit
/// presentations, and finite structures themselves (on their domain).
pub trait Oracle {
    fn signature(&self) -> &Signature;
    fn query(&self, rel: usize, tuple: &[Vertex]) -> Result<bool>;
}

/// Calls `f` on every tuple of length `arity` over `elems`, in lexicographic
/// order of positions.
pub(crate) fn for_each_tuple<T: Copy>(
    elems: &[T],
    arity: usize,
    mut f: impl FnMut(&[T]) -> Result<()>,
) -> Result<()> {
    if elems.is_empty() {
        return Ok(());
    }
    let mut idx = vec![0usize; arity];
    let mut buf: Vec<T> = vec![elems[0]; arity];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = elems[i];
        }
        f(&buf)?;
        let mut pos = arity;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < elems.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// A finite structure on `{0..size-1}`. Tuples are stored fully expanded
/// (both orientations of a symmetric relation) and kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FinStructure {
    signature: Signature,
    size: usize,
    tuples: Vec<BTreeSet<Vec<usize>>>,
}

impl FinStructure {
    pub fn new(signature: Signature, size: usize, tuples: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if tuples.len() != signature.len() {
            return Err(Error::Invalid(format!(
                "{} tuple lists for {} relations",
                tuples.len(),
                signature.len()
            )));
        }
        let mut sets = Vec::with_capacity(tuples.len());
        for (rel, list) in tuples.into_iter().enumerate() {
            let sym = &signature.relations[rel];
            let mut set = BTreeSet::new();
            for t in list {
                if t.len() != sym.arity {
                    return Err(Error::Invalid(format!("tuple {t:?} has wrong arity for {}", sym.name)));
                }
                if let Some(&bad) = t.iter().find(|&&x| x >= size) {
                    return Err(Error::Invalid(format!("entry {bad} out of range for size {size}")));
                }
                set.insert(t);
            }
            sets.push(set);
        }
        Ok(FinStructure { signature, size, tuples: sets })
    }

    pub fn empty(signature: Signature) -> Self {
        let tuples = vec![BTreeSet::new(); signature.len()];
        FinStructure { signature, size: 0, tuples }
    }

    /// Simple graph on `{0..n-1}`; each edge is stored in both orientations.
    pub fn graph(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut list = Vec::with_capacity(edges.len() * 2);
        for &(a, b) in edges {
            if a == b {
                return Err(Error::Invalid(format!("loop at {a}")));
            }
            list.push(vec![a, b]);
            list.push(vec![b, a]);
        }
        FinStructure::new(Signature::graph(), n, vec![list])
    }

    pub fn complete_graph(n: usize) -> Self {
        let edges: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        FinStructure::graph(n, &edges).expect("complete graph is well formed")
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn holds(&self, rel: usize, tuple: &[usize]) -> bool {
        self.tuples[rel].contains(tuple)
    }

    pub fn tuples(&self, rel: usize) -> impl Iterator<Item = &Vec<usize>> {
        self.tuples[rel].iter()
    }

    pub fn tuple_count(&self, rel: usize) -> usize {
        self.tuples[rel].len()
    }

    /// True when every relation is binary, irreflexive and symmetric.
    pub fn is_graph(&self) -> bool {
        self.signature.relations.iter().enumerate().all(|(r, sym)| {
            sym.arity == 2 && self.tuples[r].iter().all(|t| t[0] != t[1] && self.tuples[r].contains(&vec![t[1], t[0]]))
        })
    }

    /// Substructure induced on `keep` (ascending), relabelled to `{0..keep.len()-1}`.
    pub fn restrict(&self, keep: &[usize]) -> FinStructure {
        let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let tuples = self
            .tuples
            .iter()
            .map(|set| {
                set.iter()
                    .filter_map(|t| t.iter().map(|x| pos.get(x).copied()).collect::<Option<Vec<_>>>())
                    .collect()
            })
            .collect();
        FinStructure { signature: self.signature.clone(), size: keep.len(), tuples }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(StructureFile::from(self)).expect("structure serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: StructureFile =
            serde_json::from_str(s).map_err(|e| Error::Invalid(format!("structure file: {e}")))?;
        file.try_into()
    }
}

impl Oracle for FinStructure {
    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn query(&self, rel: usize, tuple: &[Vertex]) -> Result<bool> {
        let t: Option<Vec<usize>> =
            tuple.iter().map(|&v| usize::try_from(v).ok().filter(|&x| x < self.size)).collect();
        Ok(t.is_some_and(|t| self.tuples[rel].contains(&t)))
    }
}

/// On-disk JSON form of a structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFile {
    pub signature: Vec<RelationSymbol>,
    pub size: usize,
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<Vec<usize>>>,
}

impl From<&FinStructure> for StructureFile {
    fn from(s: &FinStructure) -> Self {
        let relations = s
            .signature
            .relations
            .iter()
            .zip(&s.tuples)
            .map(|(sym, set)| (sym.name.clone(), set.iter().cloned().collect()))
            .collect();
        StructureFile { signature: s.signature.relations.clone(), size: s.size, relations }
    }
}

impl TryFrom<StructureFile> for FinStructure {
    type Error = Error;

    fn try_from(mut file: StructureFile) -> Result<Self> {
        let signature = Signature::new(file.signature)?;
        let tuples = signature
            .relations
            .iter()
            .map(|sym| file.relations.remove(&sym.name).unwrap_or_default())
            .collect();
        if let Some(extra) = file.relations.keys().next() {
            return Err(Error::Invalid(format!("relation {extra} is not in the signature")));
        }
        FinStructure::new(signature, file.size, tuples)
    }
}

/// A finite set of naturals, kept strictly increasing.
///
/// Ordering is by the binary code `sum 2^i`, i.e. colexicographic: the set
/// with the larger maximal differing element is larger.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(Vec<Vertex>);

impl VertexSet {
    pub fn new(elems: Vec<Vertex>) -> Result<Self> {
        if elems.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(format!("{elems:?} is not strictly increasing")));
        }
        Ok(VertexSet(elems))
    }

    pub fn empty() -> Self {
        VertexSet(Vec::new())
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(mut elems: Vec<Vertex>) -> Self {
        elems.sort_unstable();
        elems.dedup();
        VertexSet(elems)
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn top(&self) -> Option<Vertex> {
        self.0.last().copied()
    }

    /// `max w` with the convention `max ∅ = -1`.
    pub fn max_or_neg(&self) -> i128 {
        self.top().map_or(-1, i128::from)
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.0.iter().all(|&v| !other.contains(v))
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        VertexSet::from_unsorted(v)
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.iter().copied().filter(|&v| other.contains(v)).collect())
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.iter().copied().filter(|&v| !other.contains(v)).collect())
    }

    /// `w ∪ {k}`.
    pub fn with(&self, k: Vertex) -> VertexSet {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&k) {
            v.insert(pos, k);
        }
        VertexSet(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }

    pub fn into_vec(self) -> Vec<Vertex> {
        self.0
    }
}

impl Ord for VertexSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.iter().rev().cmp(other.0.iter().rev()).then_with(|| self.0.len().cmp(&other.0.len()))
    }
}

impl PartialOrd for VertexSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        VertexSet::from_unsorted(iter.into_iter().collect())
    }
}

/// `sum_{i in w} 2^i`.
pub fn encode_set(w: &VertexSet) -> BigUint {
    let mut code = BigUint::default();
    for &v in &w.0 {
        code.set_bit(v, true);
    }
    code
}

/// Inverse of [`encode_set`].
pub fn decode_set(code: &BigUint) -> VertexSet {
    VertexSet((0..code.bits()).filter(|&i| code.bit(i)).collect())
}

/// A total map from `{0..n-1}` to naturals; entry `i` is the image of `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mapping(Vec<Vertex>);

impl Mapping {
    pub fn new(images: Vec<Vertex>) -> Self {
        Mapping(images)
    }

    pub fn empty() -> Self {
        Mapping(Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Mapping((0..n as Vertex).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<Vertex> {
        self.0.get(i).copied()
    }

    pub fn images(&self) -> &[Vertex] {
        &self.0
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.0.iter().all(|v| seen.insert(*v))
    }

    pub fn image(&self) -> VertexSet {
        VertexSet::from_unsorted(self.0.clone())
    }

    /// Extension by one more image.
    pub fn extended(&self, v: Vertex) -> Mapping {
        let mut m = self.0.clone();
        m.push(v);
        Mapping(m)
    }

    pub fn restricted(&self, n: usize) -> Mapping {
        Mapping(self.0[..n.min(self.0.len())].to_vec())
    }
}

/// The structure on `{0..|a|-1}` obtained by relabelling `a` ascending and
/// querying the oracle on every tuple.
pub fn induced<O: Oracle + ?Sized>(oracle: &O, a: &VertexSet) -> Result<FinStructure> {
    let sig = oracle.signature().clone();
    let idx: Vec<usize> = (0..a.len()).collect();
    let mut tuples = Vec::with_capacity(sig.len());
    for rel in 0..sig.len() {
        let mut list = Vec::new();
        let mut image = vec![0; sig.arity(rel)];
        for_each_tuple(&idx, sig.arity(rel), |t| {
            for (dst, &i) in image.iter_mut().zip(t) {
                *dst = a.0[i];
            }
            if oracle.query(rel, &image)? {
                list.push(t.to_vec());
            }
            Ok(())
        })?;
        tuples.push(list);
    }
    FinStructure::new(sig, a.len(), tuples)
}

/// True iff `f` is injective and preserves every relation of `a` in both
/// directions when evaluated in the oracle.
pub fn is_embedding<O: Oracle + ?Sized>(f: &Mapping, a: &FinStructure, oracle: &O) -> Result<bool> {
    if f.len() != a.size() || !f.is_injective() {
        return Ok(false);
    }
    let idx: Vec<usize> = (0..a.size()).collect();
    let mut ok = true;
    let mut image = Vec::new();
    for rel in 0..a.signature().len() {
        let arity = a.signature().arity(rel);
        image.resize(arity, 0);
        for_each_tuple(&idx, arity, |t| {
            if ok {
                for (dst, &i) in image.iter_mut().zip(t) {
                    *dst = f.0[i];
                }
                ok = a.holds(rel, t) == oracle.query(rel, &image)?;
            }
            Ok(())
        })?;
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lexicographically least isomorphism `a -> b`, or `None`.
pub fn find_isomorphism(a: &FinStructure, b: &FinStructure) -> Result<Option<Mapping>> {
    find_isomorphism_with_limit(a, b, DEFAULT_ISO_LIMIT)
}

pub fn find_isomorphism_with_limit(a: &FinStructure, b: &FinStructure, limit: usize) -> Result<Option<Mapping>> {
    if a.signature != b.signature {
        return Err(Error::Precondition("isomorphism test across different signatures".into()));
    }
    if a.size > limit {
        return Err(Error::TooLarge { size: a.size, limit });
    }
    if a.size != b.size || (0..a.tuples.len()).any(|r| a.tuples[r].len() != b.tuples[r].len()) {
        return Ok(None);
    }
    let mut map = vec![usize::MAX; a.size];
    let mut used = vec![false; b.size];
    Ok(iso_extend(a, b, 0, &mut map, &mut used).then(|| Mapping(map.iter().map(|&x| x as Vertex).collect())))
}

fn iso_extend(a: &FinStructure, b: &FinStructure, i: usize, map: &mut [usize], used: &mut [bool]) -> bool {
    if i == a.size {
        return true;
    }
    for target in 0..b.size {
        if used[target] {
            continue;
        }
        map[i] = target;
        if iso_consistent(a, b, i, map) {
            used[target] = true;
            if iso_extend(a, b, i + 1, map, used) {
                return true;
            }
            used[target] = false;
        }
    }
    map[i] = usize::MAX;
    false
}

/// Checks every tuple over `{0..=i}` that mentions `i`.
fn iso_consistent(a: &FinStructure, b: &FinStructure, i: usize, map: &[usize]) -> bool {
    let idx: Vec<usize> = (0..=i).collect();
    let mut ok = true;
    for rel in 0..a.tuples.len() {
        let arity = a.signature.arity(rel);
        let mut image = vec![0; arity];
        let _ = for_each_tuple(&idx, arity, |t| {
            if ok && t.contains(&i) {
                for (dst, &x) in image.iter_mut().zip(t) {
                    *dst = map[x];
                }
                ok = a.holds(rel, t) == b.holds(rel, &image);
            }
            Ok(())
        });
        if !ok {
            return false;
        }
    }
    true
}
