//! Effective encodings `π: Fin ω → Fin Y`, the B_k event and the budgeted
//! greedy chain builder.

use serde::{Deserialize, Serialize};

use crate::bits::{BitDescriptor, BitSource};
use crate::error::{Error, Result};
use crate::structure::{Vertex, VertexSet};

/// An encoding presented through decidable membership.
///
/// `contains(j, w)` decides whether the `j`-th copy belongs to `π(w)`;
/// `size(w) = |π(w)|`; `index_bound(w)` is the largest such `j` (`None`
/// when `π(w)` is empty). Methods take `&mut self` so implementations can
/// memoize.
pub trait EffectiveEncoding {
    fn contains(&mut self, j: u64, w: &VertexSet) -> Result<bool>;

    fn size(&mut self, w: &VertexSet) -> Result<u64>;

    fn index_bound(&mut self, w: &VertexSet) -> Result<Option<u64>>;

    /// All `j` with `contains(j, w)`, ascending. The default scans every
    /// `j ≤ index_bound(w)`.
    fn indices(&mut self, w: &VertexSet) -> Result<Vec<u64>> {
        let Some(bound) = self.index_bound(w)? else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        for j in 0..=bound {
            if self.contains(j, w)? {
                out.push(j);
            }
        }
        Ok(out)
    }

    /// Indices in `π(wk) ∖ π(w)`, ascending.
    fn new_indices(&mut self, w: &VertexSet, k: Vertex) -> Result<Vec<u64>> {
        let Some(bound) = self.index_bound(&w.with(k))? else { return Ok(Vec::new()) };
        let wk = w.with(k);
        let mut out = Vec::new();
        for j in 0..=bound {
            if self.contains(j, &wk)? && !self.contains(j, w)? {
                out.push(j);
            }
        }
        Ok(out)
    }
}

/// `π(w) = w` with `σ = id`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityEncoding;

impl EffectiveEncoding for IdentityEncoding {
    fn contains(&mut self, j: u64, w: &VertexSet) -> Result<bool> {
        Ok(w.contains(j))
    }

    fn size(&mut self, w: &VertexSet) -> Result<u64> {
        Ok(w.len() as u64)
    }

    fn index_bound(&mut self, w: &VertexSet) -> Result<Option<u64>> {
        Ok(w.top())
    }
}

fn check_above(w: &VertexSet, k: Vertex) -> Result<()> {
    if w.top().is_some_and(|m| k <= m) {
        return Err(Error::Precondition(format!("k={k} must exceed max w for w={w}")));
    }
    Ok(())
}

/// B_k: every index new to `π(wk)` carries bit 1. Indices are read in
/// ascending order and reading stops at the first 0.
pub fn b_event<E: EffectiveEncoding + ?Sized>(enc: &mut E, eps: &BitSource, w: &VertexSet, k: Vertex) -> Result<bool> {
    check_above(w, k)?;
    for j in enc.new_indices(w, k)? {
        if !eps.bit_at(j)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Least `k ∈ (max w, max w + budget]` with `|π(wk)| ≠ |π(w)|` and B_k.
pub fn extend_chain<E: EffectiveEncoding + ?Sized>(enc: &mut E, eps: &BitSource, w: &VertexSet, budget: u64) -> Result<Vertex> {
    if budget == 0 {
        return Err(Error::Invalid("budget must be at least 1".into()));
    }
    let first = w.top().map_or(Some(0), |m| m.checked_add(1));
    let first = first.ok_or_else(|| Error::Invalid("chain cannot grow past u64::MAX".into()))?;
    let last = first.saturating_add(budget - 1);
    let base = enc.size(w)?;
    let mut k = first;
    loop {
        if enc.size(&w.with(k))? != base && b_event(enc, eps, w, k)? {
            return Ok(k);
        }
        if k == last {
            return Err(Error::BudgetExhausted { budget, last_k: last });
        }
        k += 1;
    }
}

/// `w₁ < w₂ < ...`, each step appending one element above the previous maximum.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Chain {
    pub steps: Vec<VertexSet>,
}

impl Chain {
    pub fn last(&self) -> VertexSet {
        self.steps.last().cloned().unwrap_or_default()
    }

    /// `w₀ = ∅, w₁, ..., w_{n-1}`: the sets each step extended.
    pub fn prefixes(&self) -> Vec<VertexSet> {
        std::iter::once(VertexSet::empty()).chain(self.steps.iter().cloned()).take(self.steps.len()).collect()
    }
}

/// Chain output document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain: Chain,
    pub budget: u64,
    pub bits: BitDescriptor,
}

/// Iterates [`extend_chain`] from `w₀ = ∅`; failures carry the 1-based step.
pub fn build_chain<E: EffectiveEncoding + ?Sized>(enc: &mut E, eps: &BitSource, steps: usize, budget: u64) -> Result<Chain> {
    let mut chain = Chain::default();
    let mut w = VertexSet::empty();
    for step in 1..=steps {
        let k = extend_chain(enc, eps, &w, budget).map_err(|e| Error::ChainStep { step, source: Box::new(e) })?;
        w = w.with(k);
        chain.steps.push(w.clone());
    }
    Ok(chain)
}

/// Indices `j` encoded by some step of the chain whose bit is 0 (the
/// chain guarantee says this list is empty).
pub fn audit_chain<E: EffectiveEncoding + ?Sized>(enc: &mut E, eps: &BitSource, chain: &Chain) -> Result<Vec<u64>> {
    let mut seen = std::collections::BTreeSet::new();
    for w in &chain.steps {
        seen.extend(enc.indices(w)?);
    }
    let mut bad = Vec::new();
    for j in seen {
        if !eps.bit_at(j)? {
            bad.push(j);
        }
    }
    Ok(bad)
}
