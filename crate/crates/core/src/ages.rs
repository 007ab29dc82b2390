//! Copies of a finite structure inside a presentation: the repetition-free
//! enumeration σ, index bounds, and the disjoint-copy generator.
//!
//! Copies are vertex sets ordered by their binary code, so the enumeration
//! visits them by increasing maximum element ("top") and, for equal tops,
//! colexicographically.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::limits::{Constraint, ExtensionTask, LimitPresentation, Slot};
use crate::structure::{find_isomorphism, induced, FinStructure, Oracle, RelationSymbol, Signature, Vertex, VertexSet};

/// Cap on candidate vertices examined by one realization search.
pub const DEFAULT_SEARCH_WORK: u64 = 1 << 22;

/// Cap on subsets examined while listing the copies with a given top in
/// presentations without a closed form.
const TOP_SCAN_WORK: u64 = 5_000_000;

fn rado_edge(a: Vertex, b: Vertex) -> bool {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    lo != hi && lo < 64 && (hi >> lo) & 1 == 1
}

/// Calls `f` on every `k`-subset of `elems` (in lexicographic position order).
pub(crate) fn for_each_combination(
    elems: &[Vertex],
    k: usize,
    mut f: impl FnMut(&[Vertex]) -> Result<()>,
) -> Result<()> {
    if k > elems.len() {
        return Ok(());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = elems[i];
        }
        f(&buf)?;
        let mut p = k;
        while p > 0 && idx[p - 1] == elems.len() - k + p - 1 {
            p -= 1;
        }
        if p == 0 {
            return Ok(());
        }
        idx[p - 1] += 1;
        for q in p..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Number of `x < t` whose bits include every bit of `mask`.
fn count_supersets_below(t: u64, mask: u64) -> u128 {
    let mut total = 0u128;
    for p in (0..64).rev() {
        let bit = 1u64 << p;
        if t & bit == 0 {
            continue;
        }
        let above = if p == 63 { 0 } else { !((bit << 1) - 1) };
        if mask & bit == 0 && t & mask & above == mask & above {
            let free = p - (mask & (bit - 1)).count_ones();
            total += 1u128 << free;
        }
    }
    total
}

#[derive(Debug, Clone)]
enum Mode {
    /// β is complete and the presentation is Rado: the lower members of a
    /// copy with top `t` are set bits of `t`, which gives closed-form ranks.
    RadoClique { lower_cliques: Vec<u64> },
    /// Explicit enumeration with cached per-top counts.
    Generic { prefix: Vec<u64> },
}

/// Ranks and unranks copies of β in a presentation.
#[derive(Debug, Clone)]
pub struct CopyIndex {
    pres: LimitPresentation,
    beta: FinStructure,
    mode: Mode,
}

impl CopyIndex {
    pub fn new(pres: &LimitPresentation, beta: &FinStructure) -> Result<Self> {
        if beta.size() == 0 {
            return Err(Error::Precondition("β must have at least one element".into()));
        }
        if beta.signature() != pres.signature() {
            return Err(Error::Precondition("β and the presentation have different signatures".into()));
        }
        let mode = if pres.is_rado() && *beta == FinStructure::complete_graph(beta.size()) {
            Mode::RadoClique { lower_cliques: rado_cliques_below_64(beta.size() - 1) }
        } else {
            Mode::Generic { prefix: vec![0] }
        };
        Ok(CopyIndex { pres: pres.clone(), beta: beta.clone(), mode })
    }

    pub fn presentation(&self) -> &LimitPresentation {
        &self.pres
    }

    pub fn beta(&self) -> &FinStructure {
        &self.beta
    }

    pub fn copy_size(&self) -> usize {
        self.beta.size()
    }

    pub fn is_copy(&self, s: &VertexSet) -> Result<bool> {
        if s.len() != self.beta.size() {
            return Ok(false);
        }
        match self.mode {
            Mode::RadoClique { .. } => {
                let v = s.as_slice();
                Ok((0..v.len()).all(|i| (i + 1..v.len()).all(|j| rado_edge(v[i], v[j]))))
            }
            Mode::Generic { .. } => Ok(find_isomorphism(&induced(&self.pres, s)?, &self.beta)?.is_some()),
        }
    }

    /// Copies whose maximum is `t`, in increasing code order.
    pub fn copies_with_top(&self, t: Vertex) -> Result<Vec<VertexSet>> {
        let s = self.beta.size();
        let mut out = Vec::new();
        match &self.mode {
            Mode::RadoClique { .. } => {
                let bits: Vec<Vertex> = (0..64.min(t)).filter(|&b| (t >> b) & 1 == 1).collect();
                for_each_combination(&bits, s - 1, |c| {
                    if (0..c.len()).all(|i| (i + 1..c.len()).all(|j| rado_edge(c[i], c[j]))) {
                        let mut v = c.to_vec();
                        v.push(t);
                        out.push(VertexSet::new(v).expect("ascending"));
                    }
                    Ok(())
                })?;
            }
            Mode::Generic { .. } => {
                if binomial(t, s as u64 - 1) > TOP_SCAN_WORK as u128 {
                    return Err(Error::SearchBound { what: "copy enumeration", bound: TOP_SCAN_WORK });
                }
                let below: Vec<Vertex> = (0..t).collect();
                for_each_combination(&below, s - 1, |c| {
                    let mut v = c.to_vec();
                    v.push(t);
                    let set = VertexSet::new(v).expect("ascending");
                    if self.is_copy(&set)? {
                        out.push(set);
                    }
                    Ok(())
                })?;
            }
        }
        out.sort();
        Ok(out)
    }

    /// Number of copies whose maximum is below `t`.
    pub fn count_below(&mut self, t: Vertex) -> Result<u64> {
        if let Mode::RadoClique { lower_cliques } = &self.mode {
            let total: u128 = lower_cliques.iter().map(|&m| count_supersets_below(t, m)).sum();
            return u64::try_from(total).map_err(|_| Error::SearchBound { what: "copy index", bound: u64::MAX });
        }
        self.extend_prefix(t)?;
        let Mode::Generic { prefix } = &self.mode else { unreachable!() };
        Ok(prefix[t as usize])
    }

    fn extend_prefix(&mut self, t: Vertex) -> Result<()> {
        let ceiling = self.pres.search_ceiling();
        loop {
            let Mode::Generic { prefix } = &self.mode else { return Ok(()) };
            let scanned = prefix.len() as u64 - 1;
            if scanned >= t {
                return Ok(());
            }
            if scanned > ceiling {
                return Err(Error::SearchBound { what: "copy enumeration", bound: ceiling });
            }
            let here = self.copies_with_top(scanned)?.len() as u64;
            let Mode::Generic { prefix } = &mut self.mode else { unreachable!() };
            let last = *prefix.last().expect("non-empty prefix");
            prefix.push(last + here);
        }
    }

    /// Global index of a copy, or `None` when `s` is not a copy.
    pub fn rank(&mut self, s: &VertexSet) -> Result<Option<u64>> {
        if !self.is_copy(s)? {
            return Ok(None);
        }
        let top = s.top().expect("copies are non-empty");
        let below = self.count_below(top)?;
        let pos = self.copies_with_top(top)?.iter().position(|c| c == s).expect("copy lists itself");
        below.checked_add(pos as u64).map(Some).ok_or(Error::SearchBound { what: "copy index", bound: u64::MAX })
    }

    /// The copy with index `j`.
    pub fn unrank(&mut self, j: u64) -> Result<VertexSet> {
        let top = match &self.mode {
            Mode::RadoClique { lower_cliques } => {
                let below = |t: Vertex| -> u128 { lower_cliques.iter().map(|&m| count_supersets_below(t, m)).sum() };
                let (mut lo, mut hi) = (0u64, Vertex::MAX);
                if below(hi) <= j as u128 {
                    return Err(Error::SearchBound { what: "copy index", bound: u64::MAX });
                }
                // invariant: below(lo) <= j < below(hi)
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if below(mid) <= j as u128 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
            Mode::Generic { .. } => {
                let mut t = 0;
                while self.count_below(t + 1)? <= j {
                    t += 1;
                }
                t
            }
        };
        let offset = j - self.count_below(top)?;
        Ok(self.copies_with_top(top)?.swap_remove(offset as usize))
    }

    /// Every copy contained in `s`, in increasing code order.
    pub fn copies_within(&self, s: &VertexSet) -> Result<Vec<VertexSet>> {
        self.copies_within_meeting(s, None)
    }

    /// Copies contained in `s` that meet `meet` (all of them when `None`).
    pub fn copies_within_meeting(&self, s: &VertexSet, meet: Option<&VertexSet>) -> Result<Vec<VertexSet>> {
        let mut out = Vec::new();
        for_each_combination(s.as_slice(), self.beta.size(), |c| {
            let set = VertexSet::new(c.to_vec()).expect("ascending");
            if meet.is_none_or(|m| !set.is_disjoint(m)) && self.is_copy(&set)? {
                out.push(set);
            }
            Ok(())
        })?;
        out.sort();
        Ok(out)
    }
}

/// Bitmasks of the `k`-cliques of the Rado graph inside `{0..63}`.
fn rado_cliques_below_64(k: usize) -> Vec<u64> {
    fn grow(start: u64, k: usize, mask: u64, members: &mut Vec<u64>, out: &mut Vec<u64>) {
        if members.len() == k {
            out.push(mask);
            return;
        }
        for v in start..64 {
            if members.iter().all(|&m| rado_edge(m, v)) {
                members.push(v);
                grow(v + 1, k, mask | 1 << v, members, out);
                members.pop();
            }
        }
    }
    let mut out = Vec::new();
    grow(0, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Resumable cursor over the copies of β in code order.
#[derive(Debug, Clone)]
pub struct CopyEnumeration {
    index: CopyIndex,
    cursor: Vertex,
    found: Vec<VertexSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CopyEntry {
    pub j: u64,
    pub set: VertexSet,
}

impl CopyEnumeration {
    pub fn new(pres: &LimitPresentation, beta: &FinStructure) -> Result<Self> {
        Ok(CopyEnumeration { index: CopyIndex::new(pres, beta)?, cursor: 0, found: Vec::new() })
    }

    /// Scans further tops until at least `count` copies are known.
    pub fn advance_to(&mut self, count: usize) -> Result<&[VertexSet]> {
        let ceiling = self.index.pres.search_ceiling();
        while self.found.len() < count {
            if self.cursor > ceiling {
                return Err(Error::SearchBound { what: "copy enumeration", bound: ceiling });
            }
            let batch = self.index.copies_with_top(self.cursor)?;
            self.found.extend(batch);
            self.cursor += 1;
        }
        Ok(&self.found[..count])
    }

    pub fn found(&self) -> &[VertexSet] {
        &self.found
    }
}

/// First `count` copies `(j, β_j)` in canonical order.
pub fn enumerate_copies(pres: &LimitPresentation, beta: &FinStructure, count: usize) -> Result<Vec<CopyEntry>> {
    let mut e = CopyEnumeration::new(pres, beta)?;
    Ok(e.advance_to(count)?
        .iter()
        .enumerate()
        .map(|(j, set)| CopyEntry { j: j as u64, set: set.clone() })
        .collect())
}

/// Largest `j` with `σ(j) ⊆ s`, or `-1`.
pub fn max_copy_index(pres: &LimitPresentation, beta: &FinStructure, s: &VertexSet) -> Result<i128> {
    let mut index = CopyIndex::new(pres, beta)?;
    let last = index.copies_within(s)?.pop();
    match last {
        Some(c) => Ok(index.rank(&c)?.expect("listed copies rank") as i128),
        None => Ok(-1),
    }
}

/// An ordered configuration to realize: positions `0..s` (ascending in the
/// result) over a base that is fixed pointwise.
///
/// Template `i` is the type of position `i` over `base ++ positions above
/// i`, with `Fixed(k)` referring to slot `k` of that list.
#[derive(Debug, Clone)]
struct Pattern {
    base: Vec<Vertex>,
    templates: Vec<ExtensionTask>,
    /// For graph sources: `adj[i][j]` between positions, `base_adj[i][k]` to the base.
    adj: Vec<Vec<bool>>,
    base_adj: Vec<Vec<bool>>,
}

impl Pattern {
    fn new<O: Oracle + ?Sized>(source: &O, src_base: &[Vertex], src_v: &[Vertex], base: &[Vertex]) -> Result<Self> {
        let s = src_v.len();
        let mut templates = Vec::with_capacity(s);
        for i in 0..s {
            let mut from: Vec<Vertex> = src_base.to_vec();
            from.extend_from_slice(&src_v[i + 1..]);
            let slots: Vec<Vertex> = (0..from.len() as Vertex).collect();
            templates.push(ExtensionTask::type_of(source, &from, src_v[i], &slots, VertexSet::empty())?);
        }
        let graph = source.signature().len() == 1 && source.signature().arity(0) == 2;
        let edge = |a: Vertex, b: Vertex| -> Result<bool> { Ok(graph && source.query(0, &[a, b])?) };
        let mut adj = vec![vec![false; s]; s];
        let mut base_adj = vec![vec![false; src_base.len()]; s];
        for i in 0..s {
            for j in 0..s {
                adj[i][j] = i != j && edge(src_v[i], src_v[j])?;
            }
            for (k, &b) in src_base.iter().enumerate() {
                base_adj[i][k] = edge(src_v[i], b)?;
            }
        }
        Ok(Pattern { base: base.to_vec(), templates, adj, base_adj })
    }

    fn len(&self) -> usize {
        self.templates.len()
    }

    fn instantiate(&self, pos: usize, above: &[Vertex], used: &VertexSet) -> ExtensionTask {
        let slot = |k: Vertex| {
            let k = k as usize;
            if k < self.base.len() {
                self.base[k]
            } else {
                above[k - self.base.len()]
            }
        };
        let relabel = |atoms: &[Constraint]| -> Vec<Constraint> {
            atoms
                .iter()
                .map(|c| {
                    let slots = c
                        .slots
                        .iter()
                        .map(|s| match s {
                            Slot::Fixed(k) => Slot::Fixed(slot(*k)),
                            Slot::Hole => Slot::Hole,
                        })
                        .collect();
                    Constraint::new(c.rel, slots)
                })
                .collect()
        };
        let t = &self.templates[pos];
        ExtensionTask {
            positive: relabel(&t.positive),
            negative: relabel(&t.negative),
            excluded: used.clone(),
            level: None,
        }
    }
}

/// State of one realization search.
struct Realizer<'a> {
    pres: &'a LimitPresentation,
    pattern: &'a Pattern,
    used: &'a VertexSet,
    work: u64,
    work_cap: u64,
}

impl Realizer<'_> {
    fn tick(&mut self) -> Result<()> {
        self.work += 1;
        if self.work > self.work_cap {
            return Err(Error::SearchBound { what: "copy search", bound: self.work_cap });
        }
        Ok(())
    }

    /// Fills positions `pos, pos-1, ..., 0` below the already chosen ones,
    /// least values first; `fixed` pins some positions.
    fn fill(&mut self, pos: usize, chosen: &mut [Vertex], fixed: &[Option<Vertex>]) -> Result<bool> {
        let next = chosen[pos + 1];
        if next == 0 {
            return Ok(false);
        }
        let hi = next - 1;
        let lo = fixed[..pos].iter().flatten().max().map_or(0, |&v| v + 1);
        let task = self.pattern.instantiate(pos, &chosen[pos + 1..], self.used);
        let recurse = |this: &mut Self, chosen: &mut [Vertex]| if pos == 0 { Ok(true) } else { this.fill(pos - 1, chosen, fixed) };
        if let Some(v) = fixed[pos] {
            self.tick()?;
            if v < lo || v > hi || self.used.contains(v) || !task.satisfied_by(self.pres, v)? {
                return Ok(false);
            }
            chosen[pos] = v;
            return recurse(self, chosen);
        }
        let mut from = lo;
        while let Some(c) = self.pres.least_witness_in(&task, from, hi)? {
            self.tick()?;
            chosen[pos] = c;
            if recurse(self, chosen)? {
                return Ok(true);
            }
            from = match c.checked_add(1) {
                Some(f) => f,
                None => break,
            };
        }
        Ok(false)
    }

    fn complete(&mut self, top: Vertex, fixed: &[Option<Vertex>]) -> Result<Option<VertexSet>> {
        let s = self.pattern.len();
        let mut chosen = vec![0; s];
        chosen[s - 1] = top;
        if s == 1 || self.fill(s - 2, &mut chosen, fixed)? {
            return Ok(Some(VertexSet::new(chosen).expect("ascending fill")));
        }
        Ok(None)
    }

    /// Necessary condition for completing the pinned values: every free
    /// position below the top, constrained only by the base and the pinned
    /// positions above it, has a candidate between its pinned neighbours.
    fn viable(&mut self, fixed: &[Option<Vertex>]) -> Result<bool> {
        let s = self.pattern.len();
        let unknown = Slot::Fixed(Vertex::MAX);
        for q in (0..s - 1).filter(|&q| fixed[q].is_none()) {
            self.tick()?;
            let lo = fixed[..q].iter().flatten().max().map_or(0, |&v| v + 1);
            let hi = fixed[q + 1..s - 1].iter().flatten().min().map_or(Vertex::MAX - 1, |&v| v.saturating_sub(1));
            if lo > hi {
                return Ok(false);
            }
            let above: Vec<Vertex> = fixed[q + 1..].iter().map(|f| f.unwrap_or(Vertex::MAX)).collect();
            let mut task = self.pattern.instantiate(q, &above, self.used);
            task.positive.retain(|c| !c.slots.contains(&unknown));
            task.negative.retain(|c| !c.slots.contains(&unknown));
            if self.pres.least_witness_in(&task, lo, hi)?.is_none() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Colex-least realization with top in `[min_top, max_top]`.
    fn least(&mut self, min_top: Vertex, max_top: Vertex) -> Result<Option<VertexSet>> {
        let s = self.pattern.len();
        if s == 0 {
            return Ok(Some(VertexSet::empty()));
        }
        if self.pres.is_rado() {
            return self.least_rado(min_top, max_top);
        }
        let task = self.pattern.instantiate(s - 1, &[], self.used);
        let none = vec![None; s];
        let mut from = min_top;
        while let Some(t) = self.pres.least_witness_in(&task, from, max_top)? {
            self.tick()?;
            if let Some(found) = self.complete(t, &none)? {
                return Ok(Some(found));
            }
            from = match t.checked_add(1) {
                Some(f) => f,
                None => break,
            };
        }
        Ok(None)
    }

    /// Rado: the lower positions adjacent to the top are set bits of the
    /// top, hence below 64. Each assignment of them yields a stream of tops
    /// computed in closed form; streams are merged through a heap.
    fn least_rado(&mut self, min_top: Vertex, max_top: Vertex) -> Result<Option<VertexSet>> {
        let s = self.pattern.len();
        let top = s - 1;
        let pinned: Vec<usize> = (0..top).filter(|&i| (i + 1..s).any(|j| self.pattern.adj[i][j])).collect();
        let mut assignments = Vec::new();
        for a in self.low_assignments(&pinned)? {
            if self.viable(&pinned_fixed(s, &pinned, &a))? {
                assignments.push(a);
            }
        }
        let top_task = self.pattern.instantiate(top, &[], self.used);
        let mut heap = BinaryHeap::new();
        let next_top = |this: &Self, a: &[Vertex], from: Vertex| -> Result<Option<Vertex>> {
            let mut task = top_task.clone();
            for (&p, &v) in pinned.iter().zip(a) {
                let atom = Constraint::new(0, vec![Slot::Hole, Slot::Fixed(v)]);
                if this.pattern.adj[p][top] {
                    task.positive.push(atom);
                } else {
                    task.negative.push(atom);
                }
            }
            let floor = a.last().map_or(0, |&v| v + 1).max(from);
            this.pres.least_witness_in(&task, floor, max_top)
        };
        for (idx, a) in assignments.iter().enumerate() {
            if let Some(t) = next_top(self, a, min_top)? {
                heap.push(Reverse((t, idx)));
            }
        }
        let mut best: Option<VertexSet> = None;
        while let Some(Reverse((t, idx))) = heap.pop() {
            if best.as_ref().is_some_and(|b| b.top() < Some(t)) {
                break;
            }
            self.tick()?;
            match self.complete(t, &pinned_fixed(s, &pinned, &assignments[idx]))? {
                Some(found) => {
                    if best.as_ref().is_none_or(|b| found < *b) {
                        best = Some(found);
                    }
                }
                None => {
                    if let Some(n) = t.checked_add(1).map(|f| next_top(self, &assignments[idx], f)).transpose()?.flatten() {
                        heap.push(Reverse((n, idx)));
                    }
                }
            }
        }
        Ok(best)
    }

    /// Increasing tuples of values in `{0..63} ∖ used` for the positions in
    /// `pinned`, consistent with their mutual adjacency and their rows over
    /// the base.
    fn low_assignments(&mut self, pinned: &[usize]) -> Result<Vec<Vec<Vertex>>> {
        fn go(r: &mut Realizer<'_>, pinned: &[usize], cur: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>) -> Result<()> {
            let depth = cur.len();
            if depth == pinned.len() {
                out.push(cur.clone());
                return Ok(());
            }
            let pos = pinned[depth];
            // leave room for the free positions in between
            let start = match depth {
                0 => pos as Vertex,
                _ => cur[depth - 1] + (pos - pinned[depth - 1]) as Vertex,
            };
            let p = r.pattern;
            for v in start..64 {
                if r.used.contains(v) || p.base.contains(&v) {
                    continue;
                }
                let rows_ok = p.base.iter().enumerate().all(|(k, &b)| rado_edge(v, b) == p.base_adj[pos][k]);
                let inner_ok = cur.iter().enumerate().all(|(d, &u)| rado_edge(u, v) == p.adj[pinned[d]][pos]);
                if rows_ok && inner_ok {
                    r.tick()?;
                    cur.push(v);
                    go(r, pinned, cur, out)?;
                    cur.pop();
                }
            }
            Ok(())
        }
        let mut out = Vec::new();
        go(self, pinned, &mut Vec::new(), &mut out)?;
        Ok(out)
    }
}

fn pinned_fixed(s: usize, pinned: &[usize], values: &[Vertex]) -> Vec<Option<Vertex>> {
    let mut fixed = vec![None; s];
    for (&p, &v) in pinned.iter().zip(values) {
        fixed[p] = Some(v);
    }
    fixed
}

/// Every distinct ascending relabelling of β (as a structure on `0..s`).
fn orderings(beta: &FinStructure) -> Result<Vec<FinStructure>> {
    let s = beta.size();
    if s > 8 {
        return Err(Error::TooLarge { size: s, limit: 8 });
    }
    let mut perm: Vec<usize> = (0..s).collect();
    let mut out: Vec<FinStructure> = Vec::new();
    loop {
        let tuples = (0..beta.signature().len())
            .map(|r| beta.tuples(r).map(|t| t.iter().map(|&x| perm[x]).collect()).collect())
            .collect();
        let q = FinStructure::new(beta.signature().clone(), s, tuples)?;
        if !out.contains(&q) {
            out.push(q);
        }
        // next permutation
        let Some(i) = (1..s).rev().find(|&i| perm[i - 1] < perm[i]) else { break };
        let j = (i..s).rev().find(|&j| perm[j] > perm[i - 1]).expect("successor exists");
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    Ok(out)
}

/// Least (by code) copy of β disjoint from `used`.
pub fn least_copy_avoiding(pres: &LimitPresentation, beta: &FinStructure, used: &VertexSet) -> Result<VertexSet> {
    if beta.signature() != pres.signature() {
        return Err(Error::Precondition("β and the presentation have different signatures".into()));
    }
    let src_v: Vec<Vertex> = (0..beta.size() as Vertex).collect();
    let mut best: Option<VertexSet> = None;
    for q in orderings(beta)? {
        let pattern = Pattern::new(&q, &[], &src_v, &[])?;
        let ceiling = best.as_ref().and_then(VertexSet::top).unwrap_or(pres.search_ceiling());
        let mut r = Realizer { pres, pattern: &pattern, used, work: 0, work_cap: DEFAULT_SEARCH_WORK };
        if let Some(found) = r.least(0, ceiling)? {
            if best.as_ref().is_none_or(|b| found < *b) {
                best = Some(found);
            }
        }
    }
    best.ok_or(Error::DensityBound { bound: pres.search_ceiling() })
}

/// Pairwise disjoint replicas `V₀ = V, V₁, ...` of `V` over a base `U`
/// that stays fixed; each `V_{i+1}` is the least set avoiding `U` and all
/// earlier replicas onto which `V` maps ascending as an isomorphism fixing
/// `U`. Replicas are computed on demand and memoized.
#[derive(Debug, Clone)]
pub struct DisjointCopies {
    pres: LimitPresentation,
    pattern: Pattern,
    members: Vec<VertexSet>,
    used: VertexSet,
    work_cap: u64,
}

impl DisjointCopies {
    pub fn new(pres: &LimitPresentation, u: &VertexSet, v: &VertexSet) -> Result<Self> {
        if !u.is_disjoint(v) {
            return Err(Error::Precondition(format!("U={u} and V={v} intersect")));
        }
        let pattern = Pattern::new(pres, u.as_slice(), v.as_slice(), u.as_slice())?;
        Ok(DisjointCopies {
            pres: pres.clone(),
            pattern,
            members: vec![v.clone()],
            used: u.union(v),
            work_cap: DEFAULT_SEARCH_WORK,
        })
    }

    pub fn with_work_cap(mut self, cap: u64) -> Self {
        self.work_cap = cap;
        self
    }

    pub fn base(&self) -> &[Vertex] {
        &self.pattern.base
    }

    /// `V_k`.
    pub fn get(&mut self, k: usize) -> Result<&VertexSet> {
        while self.members.len() <= k {
            let min_top = if self.members.len() >= 2 {
                self.members.last().and_then(VertexSet::top).map_or(0, |t| t + 1)
            } else {
                0
            };
            let mut r = Realizer {
                pres: &self.pres,
                pattern: &self.pattern,
                used: &self.used,
                work: 0,
                work_cap: self.work_cap,
            };
            let next = r
                .least(min_top, self.pres.search_ceiling())?
                .ok_or(Error::DensityBound { bound: self.pres.search_ceiling() })?;
            self.used = self.used.union(&next);
            self.members.push(next);
        }
        Ok(&self.members[k])
    }

    pub fn computed(&self) -> &[VertexSet] {
        &self.members
    }
}

pub fn disjoint_copy_sequence(pres: &LimitPresentation, u: &VertexSet, v: &VertexSet, k: usize) -> Result<VertexSet> {
    Ok(DisjointCopies::new(pres, u, v)?.get(k)?.clone())
}

/// Whether some isomorphism from the structure on `U ∪ V` onto the one on
/// `U ∪ W` fixes `U` pointwise. Decided by brute-force isomorphism search
/// after tagging every element of `U` with its own unary marker.
pub fn is_base_fixing_copy(pres: &LimitPresentation, u: &VertexSet, v: &VertexSet, w: &VertexSet) -> Result<bool> {
    if v.len() != w.len() || !u.is_disjoint(v) || !u.is_disjoint(w) {
        return Ok(false);
    }
    let marked = |side: &VertexSet| -> Result<FinStructure> {
        let all = u.union(side);
        let s = induced(pres, &all)?;
        let mut relations = s.signature().relations().to_vec();
        let mut tuples: Vec<Vec<Vec<usize>>> = (0..relations.len()).map(|r| s.tuples(r).cloned().collect()).collect();
        for (i, x) in u.iter().enumerate() {
            relations.push(RelationSymbol { name: format!("@{i}"), arity: 1 });
            tuples.push(vec![vec![all.as_slice().binary_search(&x).expect("member")]]);
        }
        FinStructure::new(Signature::new(relations)?, s.size(), tuples)
    };
    Ok(find_isomorphism(&marked(v)?, &marked(w)?)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[Vertex]) -> VertexSet {
        VertexSet::new(v.to_vec()).unwrap()
    }

    /// Independent oracle: scan all sets by code and keep those inducing β.
    fn brute_copies(pres: &LimitPresentation, beta: &FinStructure, codes: u64) -> Vec<VertexSet> {
        (1..codes)
            .map(|c| (0..64).filter(|b| (c >> b) & 1 == 1).collect::<VertexSet>())
            .filter(|s| s.len() == beta.size())
            .filter(|s| find_isomorphism(&induced(pres, s).unwrap(), beta).unwrap().is_some())
            .collect()
    }

    #[test]
    fn enumerate_examples() {
        let rado = LimitPresentation::rado();
        let k2 = FinStructure::complete_graph(2);
        let got: Vec<_> = enumerate_copies(&rado, &k2, 5).unwrap().into_iter().map(|e| (e.j, e.set)).collect();
        let want = [(0, set(&[0, 1])), (1, set(&[1, 2])), (2, set(&[0, 3])), (3, set(&[1, 3])), (4, set(&[2, 4]))];
        assert_eq!(got, want);
        let k3 = FinStructure::complete_graph(3);
        assert_eq!(enumerate_copies(&rado, &k3, 1).unwrap()[0].set, set(&[0, 1, 3]));
        let got = enumerate_copies(&LimitPresentation::complete(), &k3, 2).unwrap();
        assert_eq!(got[0].set, set(&[0, 1, 2]));
        assert_eq!(got[1].set, set(&[0, 1, 3]));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let rado = LimitPresentation::rado();
        let path = FinStructure::graph(3, &[(0, 1), (1, 2)]).unwrap();
        for beta in [FinStructure::complete_graph(2), FinStructure::complete_graph(3), path, FinStructure::graph(2, &[]).unwrap()] {
            let brute = brute_copies(&rado, &beta, 1 << 9);
            let fast = enumerate_copies(&rado, &beta, brute.len()).unwrap();
            assert_eq!(fast.iter().map(|e| e.set.clone()).collect::<Vec<_>>(), brute);
            let mut idx = CopyIndex::new(&rado, &beta).unwrap();
            for e in &fast {
                assert_eq!(idx.rank(&e.set).unwrap(), Some(e.j));
                assert_eq!(idx.unrank(e.j).unwrap(), e.set);
            }
        }
    }

    #[test]
    fn max_copy_index_examples() {
        let rado = LimitPresentation::rado();
        let k2 = FinStructure::complete_graph(2);
        assert_eq!(max_copy_index(&rado, &k2, &set(&[0, 1, 3])).unwrap(), 3);
        assert_eq!(max_copy_index(&rado, &k2, &VertexSet::empty()).unwrap(), -1);
        assert_eq!(max_copy_index(&rado, &k2, &set(&[0, 2])).unwrap(), -1);
        assert_eq!(max_copy_index(&LimitPresentation::complete(), &k2, &VertexSet::empty()).unwrap(), -1);
    }

    #[test]
    fn closed_form_ranks_for_large_tops() {
        let rado = LimitPresentation::rado();
        let mut idx = CopyIndex::new(&rado, &FinStructure::complete_graph(2)).unwrap();
        // copies with top below 2^k number sum of popcounts = k·2^(k-1)
        assert_eq!(idx.count_below(1 << 20).unwrap(), 20 << 19);
        let c = set(&[5, 1 << 40 | 1 << 5]);
        let j = idx.rank(&c).unwrap().unwrap();
        assert_eq!(idx.unrank(j).unwrap(), c);
        let mut tri = CopyIndex::new(&rado, &FinStructure::complete_graph(3)).unwrap();
        let c = set(&[1, 3, 1 << 50 | 0b1010]);
        let j = tri.rank(&c).unwrap().unwrap();
        assert_eq!(tri.unrank(j).unwrap(), c);
        assert_eq!(tri.rank(&set(&[1, 2, 3])).unwrap(), None);
    }

    #[test]
    fn disjoint_sequence_examples() {
        let rado = LimitPresentation::rado();
        assert_eq!(disjoint_copy_sequence(&rado, &VertexSet::empty(), &set(&[0, 1]), 1).unwrap(), set(&[2, 4]));
        assert_eq!(disjoint_copy_sequence(&rado, &VertexSet::empty(), &set(&[0, 1]), 2).unwrap(), set(&[3, 8]));
        assert_eq!(disjoint_copy_sequence(&rado, &VertexSet::empty(), &set(&[0, 1]), 3).unwrap(), set(&[5, 32]));
        assert_eq!(disjoint_copy_sequence(&rado, &set(&[0]), &set(&[1]), 2).unwrap(), set(&[5]));
        assert_eq!(disjoint_copy_sequence(&rado, &set(&[0]), &set(&[1]), 3).unwrap(), set(&[7]));
        assert!(matches!(disjoint_copy_sequence(&rado, &set(&[0]), &set(&[0]), 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn disjoint_sequence_exhausts_u64() {
        // triangles need a fresh lowest vertex below 6 each time
        let rado = LimitPresentation::rado();
        let mut seq = DisjointCopies::new(&rado, &VertexSet::empty(), &set(&[0, 1, 3])).unwrap();
        let err = (1..10).map(|k| seq.get(k).map(|_| ())).find_map(Result::err).unwrap();
        assert_eq!(err, Error::DensityBound { bound: u64::MAX });
        for (i, a) in seq.computed().iter().enumerate() {
            for b in &seq.computed()[i + 1..] {
                assert!(a.is_disjoint(b));
            }
        }
    }

    /// Independent oracle for one replica step: scan sets by code.
    fn brute_next(pres: &LimitPresentation, u: &VertexSet, v: &VertexSet, used: &VertexSet, codes: u64) -> Option<VertexSet> {
        let src = induced(pres, &u.union(v)).unwrap();
        (1..codes)
            .map(|c| (0..64).filter(|b| (c >> b) & 1 == 1).collect::<VertexSet>())
            .filter(|s| s.len() == v.len() && s.is_disjoint(used))
            .find(|s| {
                let mut order = u.as_slice().to_vec();
                order.extend(s.iter());
                let mut src_order = u.as_slice().to_vec();
                src_order.extend(v.iter());
                let map = |x: Vertex| order[src_order.iter().position(|&y| y == x).unwrap()];
                let all: Vec<Vertex> = u.union(v).into_vec();
                (0..all.len()).all(|i| (0..all.len()).all(|j| {
                    i == j || src.holds(0, &[i, j]) == pres.query(0, &[map(all[i]), map(all[j])]).unwrap()
                }))
            })
    }

    #[test]
    fn least_copy_avoiding_examples() {
        let rado = LimitPresentation::rado();
        let k2 = FinStructure::complete_graph(2);
        assert_eq!(least_copy_avoiding(&rado, &k2, &set(&[0])).unwrap(), set(&[1, 2]));
        let path = FinStructure::graph(3, &[(0, 1), (1, 2)]).unwrap();
        let brute = brute_copies(&rado, &path, 1 << 10).into_iter().find(|s| s.is_disjoint(&set(&[0, 1]))).unwrap();
        assert_eq!(least_copy_avoiding(&rado, &path, &set(&[0, 1])).unwrap(), brute);
    }

    proptest! {
        #[test]
        fn replica_matches_brute_force(u in proptest::collection::btree_set(0u64..8, 0..3), v in proptest::collection::btree_set(0u64..8, 1..3)) {
            let u: VertexSet = u.into_iter().collect();
            let v: VertexSet = v.into_iter().collect::<VertexSet>().difference(&u);
            prop_assume!(!v.is_empty());
            let rado = LimitPresentation::rado();
            let mut seq = DisjointCopies::new(&rado, &u, &v).unwrap();
            let used = u.union(&v);
            let brute = brute_next(&rado, &u, &v, &used, 1 << 14);
            match seq.get(1) {
                Ok(fast) if fast.top().unwrap() < 14 => prop_assert_eq!(Some(fast.clone()), brute),
                Ok(_) | Err(Error::DensityBound { .. }) => prop_assert_eq!(brute, None),
                Err(e) => prop_assert!(false, "unexpected {e:?}"),
            }
        }

        #[test]
        fn count_supersets_matches_scan(t in 0u64..2000, mask in 0u64..64) {
            let brute = (0..t).filter(|x| x & mask == mask).count() as u128;
            prop_assert_eq!(count_supersets_below(t, mask), brute);
        }

        #[test]
        fn enumeration_is_stable(n in 1usize..40) {
            let rado = LimitPresentation::rado();
            let k2 = FinStructure::complete_graph(2);
            let short = enumerate_copies(&rado, &k2, n).unwrap();
            let long = enumerate_copies(&rado, &k2, n + 1).unwrap();
            prop_assert_eq!(&long[..n], &short[..]);
        }
    }
}
