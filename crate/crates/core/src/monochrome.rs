//! The greedy μ/ν construction, the μ-encoding `π(w) = [μ(w), β]`, and
//! monochromatic-embedding certificates with an independent verifier.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ages::{least_copy_avoiding, CopyIndex, DisjointCopies};
use crate::bits::{BitDescriptor, BitSource};
use crate::encodings::{build_chain, Chain, EffectiveEncoding};
use crate::error::{Error, Result};
use crate::limits::{extension_witness, ExtensionTask, LimitPresentation, PresentationDescriptor};
use crate::structure::{induced, is_embedding, FinStructure, Mapping, StructureFile, Vertex, VertexSet};

/// Per-prefix data fixed on the first extension of `w`: the planted set
/// `V` (extension point plus a fresh copy of β) and its replicas over `μ(w)`.
#[derive(Debug, Clone)]
struct Template {
    point_pos: usize,
    replicas: DisjointCopies,
}

/// Memoized μ and ν along chain prefixes.
#[derive(Debug, Clone)]
pub struct GreedyState {
    pres: LimitPresentation,
    beta: FinStructure,
    copies: CopyIndex,
    mu: HashMap<VertexSet, VertexSet>,
    nu: HashMap<VertexSet, Mapping>,
    templates: HashMap<VertexSet, Template>,
}

impl GreedyState {
    pub fn new(pres: &LimitPresentation, beta: &FinStructure) -> Result<Self> {
        let copies = CopyIndex::new(pres, beta)?;
        let mut state = GreedyState {
            pres: pres.clone(),
            beta: beta.clone(),
            copies,
            mu: HashMap::new(),
            nu: HashMap::new(),
            templates: HashMap::new(),
        };
        state.mu.insert(VertexSet::empty(), VertexSet::empty());
        state.nu.insert(VertexSet::empty(), Mapping::empty());
        Ok(state)
    }

    pub fn presentation(&self) -> &LimitPresentation {
        &self.pres
    }

    pub fn beta(&self) -> &FinStructure {
        &self.beta
    }

    pub fn copies(&mut self) -> &mut CopyIndex {
        &mut self.copies
    }

    /// Computes μ and ν for `w` and all its prefixes.
    pub fn ensure(&mut self, w: &VertexSet) -> Result<()> {
        if self.mu.contains_key(w) {
            return Ok(());
        }
        let k = w.top().expect("the empty prefix is always present");
        let parent = w.difference(&VertexSet::new(vec![k]).expect("singleton"));
        self.ensure(&parent)?;
        self.step_mu(&parent, k)?;
        Ok(())
    }

    pub fn mu(&mut self, w: &VertexSet) -> Result<VertexSet> {
        self.ensure(w)?;
        Ok(self.mu[w].clone())
    }

    pub fn nu(&mut self, w: &VertexSet) -> Result<Mapping> {
        self.ensure(w)?;
        Ok(self.nu[w].clone())
    }

    /// `(μ(wk), ν(wk))`. The `i`-th value of `k` above `max w` receives the
    /// `i`-th replica of the planted set.
    pub fn step_mu(&mut self, w: &VertexSet, k: Vertex) -> Result<(VertexSet, Mapping)> {
        if w.top().is_some_and(|m| k <= m) {
            return Err(Error::Precondition(format!("k={k} must exceed max w for w={w}")));
        }
        let (Some(mu_w), Some(nu_w)) = (self.mu.get(w).cloned(), self.nu.get(w).cloned()) else {
            return Err(Error::Precondition(format!("μ({w}) has not been computed")));
        };
        let wk = w.with(k);
        if let (Some(m), Some(n)) = (self.mu.get(&wk), self.nu.get(&wk)) {
            return Ok((m.clone(), n.clone()));
        }
        if !self.templates.contains_key(w) {
            let template = self.plant(&mu_w, &nu_w)?;
            self.templates.insert(w.clone(), template);
        }
        let idx = (k as i128 - w.max_or_neg() - 1) as usize;
        let template = self.templates.get_mut(w).expect("template just ensured");
        let replica = template.replicas.get(idx)?.clone();
        let mu_wk = mu_w.union(&replica);
        let nu_wk = nu_w.extended(replica.as_slice()[template.point_pos]);
        self.mu.insert(wk.clone(), mu_wk.clone());
        self.nu.insert(wk, nu_wk.clone());
        Ok((mu_wk, nu_wk))
    }

    /// Extension point realizing the type of `|w|` over `{0..|w|-1}`
    /// through ν(w), then the least fresh copy of β.
    fn plant(&self, mu_w: &VertexSet, nu_w: &Mapping) -> Result<Template> {
        let n = nu_w.len() as Vertex;
        let base: Vec<Vertex> = (0..n).collect();
        let task = ExtensionTask::type_of(&self.pres, &base, n, nu_w.images(), mu_w.clone())?;
        let ceiling = self.pres.search_ceiling();
        let point = extension_witness(&self.pres, &task, ceiling)?
            .ok_or(Error::SearchBound { what: "extension point", bound: ceiling })?;
        let fresh = least_copy_avoiding(&self.pres, &self.beta, &mu_w.with(point))?;
        let planted = fresh.with(point);
        let point_pos = planted.as_slice().iter().position(|&v| v == point).expect("point is planted");
        Ok(Template { point_pos, replicas: DisjointCopies::new(&self.pres, mu_w, &planted)? })
    }

    pub fn mu_encoding(&mut self) -> MuEncoding<'_> {
        MuEncoding { state: self }
    }
}

/// `π(w) = [μ(w), β]` over the canonical copy enumeration.
pub struct MuEncoding<'s> {
    state: &'s mut GreedyState,
}

impl MuEncoding<'_> {
    fn copies_in(&mut self, w: &VertexSet) -> Result<Vec<VertexSet>> {
        let mu = self.state.mu(w)?;
        self.state.copies.copies_within(&mu)
    }

    fn ranks(&mut self, copies: &[VertexSet]) -> Result<Vec<u64>> {
        let mut out = Vec::with_capacity(copies.len());
        for c in copies {
            out.push(self.state.copies.rank(c)?.expect("listed copies rank"));
        }
        Ok(out)
    }
}

impl EffectiveEncoding for MuEncoding<'_> {
    fn contains(&mut self, j: u64, w: &VertexSet) -> Result<bool> {
        let mu = self.state.mu(w)?;
        if mu.is_empty() {
            return Ok(false);
        }
        Ok(self.state.copies.unrank(j)?.is_subset(&mu))
    }

    fn size(&mut self, w: &VertexSet) -> Result<u64> {
        Ok(self.copies_in(w)?.len() as u64)
    }

    fn index_bound(&mut self, w: &VertexSet) -> Result<Option<u64>> {
        match self.copies_in(w)?.pop() {
            Some(c) => Ok(self.state.copies.rank(&c)?),
            None => Ok(None),
        }
    }

    fn indices(&mut self, w: &VertexSet) -> Result<Vec<u64>> {
        let copies = self.copies_in(w)?;
        self.ranks(&copies)
    }

    /// Copies inside `μ(wk)` that meet the new replica.
    fn new_indices(&mut self, w: &VertexSet, k: Vertex) -> Result<Vec<u64>> {
        let (mu_wk, _) = {
            self.state.ensure(w)?;
            self.state.step_mu(w, k)?
        };
        let fresh = mu_wk.difference(&self.state.mu[w]);
        let copies = self.state.copies.copies_within_meeting(&mu_wk, Some(&fresh))?;
        self.ranks(&copies)
    }
}

/// Self-contained record of a monochromatic embedding of the first `depth`
/// vertices of the presentation into itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingCertificate {
    pub presentation: PresentationDescriptor,
    pub beta: StructureFile,
    pub bits: BitDescriptor,
    pub depth: usize,
    pub budget: u64,
    pub chain: Chain,
    pub mu: Vec<VertexSet>,
    pub nu_table: Vec<(u64, Vertex)>,
    pub audited_copy_count: u64,
}

impl EmbeddingCertificate {
    pub fn nu(&self) -> Mapping {
        Mapping::new(self.nu_table.iter().map(|&(_, v)| v).collect())
    }

    pub fn image(&self) -> VertexSet {
        self.nu().image()
    }
}

/// Runs the greedy chain over the μ-encoding and packages the result.
pub fn monochromatic_embedding(
    pres: &LimitPresentation,
    beta: &FinStructure,
    eps: &BitSource,
    depth: usize,
    budget: u64,
) -> Result<EmbeddingCertificate> {
    let mut state = GreedyState::new(pres, beta)?;
    let chain = build_chain(&mut state.mu_encoding(), eps, depth, budget)?;
    let mut mu = Vec::with_capacity(chain.steps.len());
    for w in &chain.steps {
        mu.push(state.mu(w)?);
    }
    let nu = state.nu(&chain.last())?;
    let mut cert = EmbeddingCertificate {
        presentation: pres.descriptor().clone(),
        beta: StructureFile::from(beta),
        bits: eps.descriptor().clone(),
        depth,
        budget,
        chain,
        mu,
        nu_table: nu.images().iter().enumerate().map(|(i, &v)| (i as u64, v)).collect(),
        audited_copy_count: 0,
    };
    let audit = audit_certificate_with(&cert, pres, eps)?;
    if !audit.valid() {
        return Err(Error::Precondition(format!("greedy run failed its own audit: {audit:?}")));
    }
    cert.audited_copy_count = audit.copies_checked;
    Ok(cert)
}

/// Outcome of [`audit_certificate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub embedding_ok: bool,
    pub copies_checked: u64,
    /// Copies inside the image whose bit is 0, as `(j, set)`.
    pub off_color: Vec<(u64, VertexSet)>,
}

impl Verification {
    pub fn valid(&self) -> bool {
        self.embedding_ok && self.off_color.is_empty()
    }
}

/// Audits a certificate from scratch: rebuilds the presentation, β and the
/// bit source, re-checks that ν embeds `{0..depth-1}`, and checks the bit
/// of every copy of β inside the image.
pub fn audit_certificate(cert: &EmbeddingCertificate) -> Result<Verification> {
    let pres = LimitPresentation::new(&cert.presentation)?;
    let eps = BitSource::new(&cert.bits).map_err(|e| match e {
        Error::BitSourceUnavailable(_) => e,
        other => Error::BitSourceUnavailable(other.to_string()),
    })?;
    audit_certificate_with(cert, &pres, &eps)
}

fn audit_certificate_with(cert: &EmbeddingCertificate, pres: &LimitPresentation, eps: &BitSource) -> Result<Verification> {
    let beta = FinStructure::try_from(cert.beta.clone())?;
    let nu = cert.nu();
    let domain_ok = cert.nu_table.len() == cert.depth && cert.nu_table.iter().enumerate().all(|(i, &(d, _))| d == i as u64);
    let prefix: VertexSet = (0..cert.depth as Vertex).collect();
    let embedding_ok = domain_ok && is_embedding(&nu, &induced(pres, &prefix)?, pres)?;
    let mut index = CopyIndex::new(pres, &beta)?;
    let mut off_color = Vec::new();
    let copies = index.copies_within(&nu.image())?;
    for c in &copies {
        let j = index.rank(c)?.expect("listed copies rank");
        if !eps.bit_at(j)? {
            off_color.push((j, c.clone()));
        }
    }
    Ok(Verification { embedding_ok, copies_checked: copies.len() as u64, off_color })
}

pub fn verify_certificate(cert: &EmbeddingCertificate) -> Result<bool> {
    Ok(audit_certificate(cert)?.valid())
}

/// Copy indices `j` with `σ(j) ⊆ μ(w_n)` for some step whose bit is 0.
/// Since μ grows along the chain, the final μ covers every step.
pub fn audit_chain_copies(state: &mut GreedyState, eps: &BitSource, chain: &Chain) -> Result<(u64, Vec<u64>)> {
    let last = state.mu(&chain.last())?;
    let copies = state.copies.copies_within(&last)?;
    let mut bad = Vec::new();
    for c in &copies {
        let j = state.copies.rank(c)?.expect("listed copies rank");
        if !eps.bit_at(j)? {
            bad.push(j);
        }
    }
    Ok((copies.len() as u64, bad))
}

/// Encoding-law probe at one prefix `w`: the sets `π(wk)` for the first
/// `probes` values of `k` above `max w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawProbe {
    /// Pairwise `π(wk) ∩ π(wk′) = π(w)`.
    pub intersection_law: bool,
    /// `|π(wk) ∖ π(w)|` per probed `k`.
    pub new_counts: Vec<usize>,
}

impl LawProbe {
    pub fn constant_growth(&self) -> bool {
        self.new_counts.windows(2).all(|p| p[0] == p[1])
    }
}

pub fn probe_encoding_laws(state: &mut GreedyState, w: &VertexSet, probes: usize) -> Result<LawProbe> {
    let base: BTreeSet<VertexSet> = {
        let mu = state.mu(w)?;
        state.copies.copies_within(&mu)?.into_iter().collect()
    };
    let first = (w.max_or_neg() + 1) as Vertex;
    let mut encoded = Vec::with_capacity(probes);
    for k in first..first + probes as Vertex {
        let (mu_wk, _) = state.step_mu(w, k)?;
        encoded.push(state.copies.copies_within(&mu_wk)?.into_iter().collect::<BTreeSet<_>>());
    }
    let intersection_law = encoded.iter().all(|p| base.is_subset(p))
        && (0..encoded.len()).all(|a| (a + 1..encoded.len()).all(|b| encoded[a].intersection(&encoded[b]).eq(base.iter())));
    let new_counts = encoded.iter().map(|p| p.len() - base.len()).collect();
    Ok(LawProbe { intersection_law, new_counts })
}
