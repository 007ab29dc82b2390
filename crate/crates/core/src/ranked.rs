//! Ranked ℓ-diagrams: the level axioms, the prime construction with its
//! explicit extension witness, bit-string-generated diagrams and a bounded
//! genericity probe.

use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::bits::BitSource;
use crate::error::{Error, Result};
use crate::limits::LimitPresentation;
use crate::structure::FinStructure;

/// Largest odd-prime index the table will sieve for.
const MAX_PRIME_INDEX: u64 = 50_000_000;

/// `p(i, n)`: the `(i + ℓ·n)`-th odd prime (0-based: 3, 5, 7, 11, ...).
/// Sieved lazily and shared behind a lock.
#[derive(Debug)]
pub struct PrimeTable {
    levels: usize,
    odd_primes: RwLock<Vec<u64>>,
}

impl PrimeTable {
    pub fn new(levels: usize) -> Self {
        PrimeTable { levels, odd_primes: RwLock::new(Vec::new()) }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Index of `(i, n)` in the odd-prime sequence.
    pub fn index(&self, i: usize, n: u64) -> Option<u64> {
        n.checked_mul(self.levels as u64)?.checked_add(i as u64)
    }

    pub fn p(&self, i: usize, n: u64) -> Result<u64> {
        let k = self.index(i, n).ok_or_else(|| Error::Invalid(format!("prime index for ({i},{n}) overflows")))?;
        self.nth_odd_prime(k)
    }

    pub fn nth_odd_prime(&self, k: u64) -> Result<u64> {
        if let Some(&p) = self.odd_primes.read().expect("prime table lock").get(k as usize) {
            return Ok(p);
        }
        if k > MAX_PRIME_INDEX {
            return Err(Error::SearchBound { what: "odd prime index", bound: MAX_PRIME_INDEX });
        }
        let mut table = self.odd_primes.write().expect("prime table lock");
        while table.len() as u64 <= k {
            let want = (k + 1).max(2 * table.len() as u64).max(1024);
            *table = sieve_odd_primes(want as usize);
        }
        Ok(table[k as usize])
    }

    /// `p(i,n) | m`, using `p(i,n) ≥ 2(i+ℓn)+3` to avoid sieving when the
    /// prime must exceed `m`.
    pub fn divides(&self, i: usize, n: u64, m: u64) -> Result<bool> {
        if m == 0 {
            return Ok(true);
        }
        match self.index(i, n) {
            Some(k) if k.checked_mul(2).and_then(|x| x.checked_add(3)).is_some_and(|lb| lb <= m) => {
                Ok(m.is_multiple_of(self.p(i, n)?))
            }
            _ => Ok(false),
        }
    }
}

/// First `count` odd primes.
fn sieve_odd_primes(count: usize) -> Vec<u64> {
    let n = (count + 2) as f64;
    let mut limit = if n < 6.0 { 15 } else { (n * (n.ln() + n.ln().ln())).ceil() as usize + 1 };
    loop {
        let mut composite = vec![false; limit + 1];
        let mut out = Vec::with_capacity(count);
        let mut i = 2;
        while i <= limit {
            if !composite[i] {
                if i > 2 {
                    out.push(i as u64);
                    if out.len() == count {
                        return out;
                    }
                }
                let mut j = i * i;
                while j <= limit {
                    composite[j] = true;
                    j += i;
                }
            }
            i += 1;
        }
        limit *= 2;
    }
}

/// Succession `(i,n) S (i+1,m)` in the prime diagram:
/// `(m ≠ 0 ∧ p(i,n) | m) ∨ (n ≠ 0 ∧ p(i+1,m) | n)`.
pub fn prime_adjacent(pt: &PrimeTable, lower: (usize, u64), upper: (usize, u64)) -> Result<bool> {
    let ((i, n), (j, m)) = (lower, upper);
    if j != i + 1 || j >= pt.levels() {
        return Err(Error::Precondition(format!("levels {i} and {j} are not adjacent in a {}-diagram", pt.levels())));
    }
    Ok((m != 0 && pt.divides(i, n, m)?) || (n != 0 && pt.divides(j, m, n)?))
}

/// `ψ(i,n,m) = i + (ℓ−1)·C(n,m)` with the Cantor pairing
/// `C(n,m) = (n+m)(n+m+1)/2 + m`.
pub fn psi(levels: usize, i: usize, n: u64, m: u64) -> Result<u64> {
    if levels < 2 || i + 1 >= levels {
        return Err(Error::Precondition(format!("ψ needs i < ℓ−1 (i={i}, ℓ={levels})")));
    }
    let overflow = || Error::Invalid(format!("ψ({i},{n},{m}) overflows"));
    let s = n.checked_add(m).ok_or_else(overflow)?;
    let tri = if s % 2 == 0 { (s / 2).checked_mul(s + 1) } else { s.checked_mul(s.div_ceil(2)) };
    let c = tri.and_then(|t| t.checked_add(m)).ok_or_else(overflow)?;
    c.checked_mul(levels as u64 - 1).and_then(|x| x.checked_add(i as u64)).ok_or_else(overflow)
}

/// Succession `(i,n) S_α (i+1,m)` iff `α(ψ(i,n,m)) = 1`.
pub fn bits_adjacent(alpha: &BitSource, levels: usize, lower: (usize, u64), upper: (usize, u64)) -> Result<bool> {
    let ((i, n), (j, m)) = (lower, upper);
    if j != i + 1 || j >= levels {
        return Err(Error::Precondition(format!("levels {i} and {j} are not adjacent in a {levels}-diagram")));
    }
    alpha.bit_at(psi(levels, i, n, m)?)
}

/// Axioms (i)-(iii): `levels[x]` is the unique level of `x`, unary `L<k>`
/// relations (when present) agree with it, and `S` only goes one level up.
pub fn check_rd_axioms(s: &FinStructure, levels: &[usize]) -> bool {
    if levels.len() != s.size() {
        return false;
    }
    let sig = s.signature();
    for (rel, sym) in sig.relations().iter().enumerate() {
        let level_pred = sym.name.strip_prefix('L').and_then(|k| k.parse::<usize>().ok());
        if let Some(k) = level_pred.filter(|_| sym.arity == 1) {
            if (0..s.size()).any(|x| s.holds(rel, &[x]) != (levels[x] == k)) {
                return false;
            }
        } else if sym.name == "S" && sym.arity == 2 && s.tuples(rel).any(|t| levels[t[1]] != levels[t[0]] + 1) {
            return false;
        }
    }
    true
}

/// One instance of the extension axiom at level `i`: `X, Y` on level
/// `i+1`, `Z` on level `i`, `X′, Y′` on level `i−1`, all given by their
/// in-level indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExtensionInstance {
    pub level: usize,
    pub x: Vec<u64>,
    pub y: Vec<u64>,
    pub z: Vec<u64>,
    pub x_lower: Vec<u64>,
    pub y_lower: Vec<u64>,
}

impl ExtensionInstance {
    /// Validates disjointness and clears the sets that refer to the empty
    /// levels `L₋₁` and `L_ℓ`.
    pub fn normalized(mut self, levels: usize) -> Result<Self> {
        if self.level >= levels {
            return Err(Error::Precondition(format!("level {} out of range for {levels} levels", self.level)));
        }
        if self.level == 0 {
            self.x_lower.clear();
            self.y_lower.clear();
        }
        if self.level + 1 == levels {
            self.x.clear();
            self.y.clear();
        }
        for v in [&mut self.x, &mut self.y, &mut self.z, &mut self.x_lower, &mut self.y_lower] {
            v.sort_unstable();
            v.dedup();
        }
        if self.x.iter().any(|v| self.y.contains(v)) || self.x_lower.iter().any(|v| self.y_lower.contains(v)) {
            return Err(Error::Precondition("X/Y and X′/Y′ must be disjoint".into()));
        }
        Ok(self)
    }

    /// Whether `(level, z)` realizes the instance in the given succession.
    pub fn realized_by(&self, z: u64, succ: impl Fn((usize, u64), (usize, u64)) -> Result<bool>) -> Result<bool> {
        let i = self.level;
        if self.z.contains(&z) {
            return Ok(false);
        }
        for &x in &self.x {
            if !succ((i, z), (i + 1, x))? {
                return Ok(false);
            }
        }
        for &y in &self.y {
            if succ((i, z), (i + 1, y))? {
                return Ok(false);
            }
        }
        for &x in &self.x_lower {
            if !succ((i - 1, x), (i, z))? {
                return Ok(false);
            }
        }
        for &y in &self.y_lower {
            if succ((i - 1, y), (i, z))? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `z = Π p(i+1,x) · Π p(i−1,x′) · 2^w` with the least admissible `w`.
pub fn prime_witness(pt: &PrimeTable, inst: &ExtensionInstance) -> Result<u64> {
    let inst = inst.clone().normalized(pt.levels())?;
    let i = inst.level;
    let overflow = || Error::SearchBound { what: "prime witness", bound: u64::MAX };
    let mut odd = 1u64;
    for &x in &inst.x {
        odd = odd.checked_mul(pt.p(i + 1, x)?).ok_or_else(overflow)?;
    }
    for &x in &inst.x_lower {
        odd = odd.checked_mul(pt.p(i - 1, x)?).ok_or_else(overflow)?;
    }
    let blockers: Vec<u64> = inst.y.iter().chain(&inst.y_lower).copied().filter(|&y| y != 0).collect();
    for w in 0..64 {
        let Some(z) = odd.checked_mul(1 << w) else { break };
        if inst.z.contains(&z) {
            continue;
        }
        let mut clear = true;
        for &y in &blockers {
            if pt.divides(i, z, y)? {
                clear = false;
                break;
            }
        }
        if clear {
            return Ok(z);
        }
    }
    Err(overflow())
}

/// Checks the axiom-(iv) conclusion for `z` with [`prime_adjacent`].
pub fn audit_prime_witness(pt: &PrimeTable, inst: &ExtensionInstance, z: u64) -> Result<bool> {
    let inst = inst.clone().normalized(pt.levels())?;
    inst.realized_by(z, |a, b| prime_adjacent(pt, a, b))
}

/// Enumeration caps for [`genericity_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeCaps {
    /// Maximum size of each of `X, Y, X′, Y′`.
    pub max_set: usize,
    /// Maximum of `|X|+|Y|` and of `|X′|+|Y′|`.
    pub max_pair: usize,
    /// Maximum size of `Z`.
    pub max_z: usize,
    /// Largest in-level index appearing in any set.
    pub max_index: u64,
}

impl ProbeCaps {
    pub fn uniform(max_set: usize, max_index: u64) -> Self {
        ProbeCaps { max_set, max_pair: 2 * max_set, max_z: max_set, max_index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub instance: ExtensionInstance,
    pub witness: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Result of a bounded genericity probe. An empty violation list means "no
/// violation found within bounds", nothing more.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub levels: usize,
    pub caps: ProbeCaps,
    pub z_bound: u64,
    pub satisfied: usize,
    pub violated: Vec<ProbeOutcome>,
    pub witnesses: Vec<ProbeOutcome>,
}

impl ProbeReport {
    pub fn instance_count(&self) -> usize {
        self.satisfied + self.violated.len()
    }
}

fn subsets_upto(universe: &[u64], max: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for size in 1..=max.min(universe.len()) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.iter().map(|&i| universe[i]).collect());
            let mut p = size;
            while p > 0 && idx[p - 1] == universe.len() - size + p - 1 {
                p -= 1;
            }
            if p == 0 {
                break;
            }
            idx[p - 1] += 1;
            for q in p..size {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    out
}

fn disjoint_pairs(universe: &[u64], caps: &ProbeCaps) -> Vec<(Vec<u64>, Vec<u64>)> {
    let sets = subsets_upto(universe, caps.max_set);
    let mut out = Vec::new();
    for a in &sets {
        for b in &sets {
            if a.len() + b.len() <= caps.max_pair && a.iter().all(|v| !b.contains(v)) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// Every instance within the caps, level by level.
pub fn probe_instances(levels: usize, caps: &ProbeCaps) -> Vec<ExtensionInstance> {
    let universe: Vec<u64> = (0..=caps.max_index).collect();
    let pairs = disjoint_pairs(&universe, caps);
    let none = vec![(Vec::new(), Vec::new())];
    let zs = subsets_upto(&universe, caps.max_z);
    let mut out = Vec::new();
    for level in 0..levels {
        let upper = if level + 1 < levels { &pairs } else { &none };
        let lower = if level > 0 { &pairs } else { &none };
        for (x, y) in upper {
            for z in &zs {
                for (xl, yl) in lower {
                    out.push(ExtensionInstance {
                        level,
                        x: x.clone(),
                        y: y.clone(),
                        z: z.clone(),
                        x_lower: xl.clone(),
                        y_lower: yl.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Searches, for each instance, the least in-level index `z ≤ z_bound`
/// realizing it. Bit-source failures are recorded per instance.
pub fn genericity_probe(pres: &LimitPresentation, caps: &ProbeCaps, z_bound: u64) -> Result<ProbeReport> {
    let levels = pres.levels().ok_or_else(|| Error::Precondition("genericity probe needs an ℓ-diagram".into()))?;
    let succ = |a: (usize, u64), b: (usize, u64)| pres.succession(pres.vertex(a.0, a.1)?, pres.vertex(b.0, b.1)?);
    let mut report =
        ProbeReport { levels, caps: *caps, z_bound, satisfied: 0, violated: Vec::new(), witnesses: Vec::new() };
    for instance in probe_instances(levels, caps) {
        let mut outcome = ProbeOutcome { instance: instance.clone(), witness: None, error: None };
        for z in 0..=z_bound {
            match instance.realized_by(z, succ) {
                Ok(true) => {
                    outcome.witness = Some(z);
                    break;
                }
                Ok(false) => {}
                Err(e) => {
                    outcome.error = Some(e.to_string());
                    break;
                }
            }
        }
        if outcome.witness.is_some() {
            report.satisfied += 1;
            report.witnesses.push(outcome);
        } else {
            report.violated.push(outcome);
        }
    }
    Ok(report)
}
