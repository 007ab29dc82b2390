//! Acceptance suite: one PASS/FAIL line per criterion on stderr, then a
//! single assertion over all of them.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use fraisse::monochrome::{audit_chain_copies, probe_encoding_laws};
use fraisse::ranked::{audit_prime_witness, probe_instances};
use fraisse::{
    audit_certificate, extension_witness, genericity_probe, is_base_fixing_copy, monochromatic_embedding,
    prime_witness, BitSource, CopyIndex, DisjointCopies, EmbeddingCertificate, ExtensionTask, FinStructure,
    GreedyState, LimitPresentation, PrimeTable, ProbeCaps, Vertex, VertexSet,
};

struct Verdict {
    id: u32,
    pass: bool,
    detail: String,
}

fn report(v: &Verdict) {
    let line = format!("criterion {}: {} ({})\n", v.id, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn subsets(universe: &[Vertex], max: usize) -> Vec<VertexSet> {
    (0u32..1 << universe.len())
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| universe.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &v)| v).collect())
        .collect()
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

/// Disjoint U, V ⊆ {0..9} with |U|+|V| ≤ 4: least witness z ≤ 2^10.
fn rado_extension() -> (Verdict, String) {
    let start = Instant::now();
    let rado = LimitPresentation::rado();
    let universe: Vec<Vertex> = (0..10).collect();
    let (mut total, mut found) = (0, 0);
    let mut out = Vec::new();
    for u in subsets(&universe, 4) {
        for v in subsets(&universe, 4 - u.len()) {
            if !u.is_disjoint(&v) {
                continue;
            }
            total += 1;
            let task = ExtensionTask::graph(u.as_slice(), v.as_slice(), u.union(&v));
            let z = extension_witness(&rado, &task, 1 << 10).ok().flatten();
            found += usize::from(z.is_some());
            out.push(json!([u, v, z]));
        }
    }
    let elapsed = start.elapsed();
    let pass = found == total && within(elapsed, 30);
    let detail = format!("{found}/{total} tasks solved with z <= 1024 in {:.2}s (limit 30s)", elapsed.as_secs_f64());
    (Verdict { id: 1, pass, detail }, Value::Array(out).to_string())
}

/// ℓ=3, all sets ≤ 1, indices ≤ 2, z ≤ 10^4; plus the closed-form witness audit.
fn prime_genericity() -> (Verdict, String) {
    let start = Instant::now();
    let pres = LimitPresentation::ldiag_primes(3).unwrap();
    let caps = ProbeCaps::uniform(1, 2);
    let report = genericity_probe(&pres, &caps, 10_000).unwrap();
    let pt = PrimeTable::new(3);
    let instances = probe_instances(3, &caps);
    let audit_failures = instances
        .iter()
        .filter(|inst| !prime_witness(&pt, inst).and_then(|z| audit_prime_witness(&pt, inst, z)).unwrap_or(false))
        .count();
    let elapsed = start.elapsed();
    let pass = report.violated.is_empty() && audit_failures == 0 && within(elapsed, 60);
    let detail = format!(
        "{} instances, {} violations, {} formula audit failures, {:.2}s (limit 60s)",
        report.instance_count(),
        report.violated.len(),
        audit_failures,
        elapsed.as_secs_f64()
    );
    (Verdict { id: 2, pass, detail }, serde_json::to_string(&report).unwrap())
}

struct Run {
    beta: FinStructure,
    eps: BitSource,
    cert: Result<EmbeddingCertificate, String>,
}

/// Rado, β ∈ {K2, K3}, prng seeds 0..19, depth 8, budget 10^5.
fn end_to_end() -> (Verdict, Vec<Run>, String) {
    let start = Instant::now();
    let rado = LimitPresentation::rado();
    let mut runs = Vec::new();
    let mut dual_failures = 0;
    for size in [2, 3] {
        let beta = FinStructure::complete_graph(size);
        for seed in 0..20 {
            let eps = BitSource::prng(seed);
            let cert = monochromatic_embedding(&rado, &beta, &eps, 8, 100_000).map_err(|e| e.to_string());
            let dual = monochromatic_embedding(&rado, &beta, &eps.complement(), 8, 100_000);
            let dual_ok = dual.is_ok_and(|c| {
                let mut index = CopyIndex::new(&rado, &beta).unwrap();
                audit_certificate(&c).is_ok_and(|v| v.valid())
                    && index.copies_within(&c.image()).unwrap().iter().all(|s| {
                        index.rank(s).ok().flatten().is_some_and(|j| eps.bit_at(j).is_ok_and(|b| !b))
                    })
            });
            dual_failures += usize::from(!dual_ok);
            runs.push(Run { beta: beta.clone(), eps, cert });
        }
    }
    let produced = runs.iter().filter(|r| r.cert.is_ok()).count();
    let verified = runs
        .iter()
        .filter(|r| r.cert.as_ref().is_ok_and(|c| audit_certificate(c).is_ok_and(|v| v.valid())))
        .count();
    let elapsed = start.elapsed();
    let pass = produced == runs.len() && verified == runs.len() && dual_failures == 0 && within(elapsed, 300);
    let first_error = runs.iter().find_map(|r| r.cert.as_ref().err()).map_or(String::new(), |e| format!("; first error: {e}"));
    let detail = format!(
        "{produced}/{} certificates, {verified} verified, {dual_failures} complemented runs without a colour-0 image, {:.2}s (limit 300s){first_error}",
        runs.len(),
        elapsed.as_secs_f64()
    );
    let outputs: Vec<Value> = runs
        .iter()
        .map(|r| match &r.cert {
            Ok(c) => serde_json::to_value(c).unwrap(),
            Err(e) => json!({ "error": e }),
        })
        .collect();
    (Verdict { id: 3, pass, detail }, runs, Value::Array(outputs).to_string())
}

/// Every copy inside the final μ of each chain from criterion 3 has colour 1.
fn chain_audit(runs: &[Run]) -> Verdict {
    let rado = LimitPresentation::rado();
    let (mut chains, mut copies, mut exceptions) = (0, 0, 0);
    for run in runs {
        let Ok(cert) = &run.cert else { continue };
        chains += 1;
        let mut state = GreedyState::new(&rado, &run.beta).unwrap();
        match audit_chain_copies(&mut state, &run.eps, &cert.chain) {
            Ok((n, bad)) => {
                copies += n;
                exceptions += bad.len();
            }
            Err(_) => exceptions += 1,
        }
    }
    let pass = chains == runs.len() && exceptions == 0;
    let detail = format!("{chains}/{} chains available, {copies} copies checked, {exceptions} exceptions", runs.len());
    Verdict { id: 4, pass, detail }
}

/// Intersection law and constant growth at every chain prefix, 5 probes each.
fn encoding_laws(runs: &[Run]) -> Verdict {
    let rado = LimitPresentation::rado();
    let (mut chains, mut prefixes, mut exceptions) = (0, 0, 0);
    for run in runs {
        let Ok(cert) = &run.cert else { continue };
        chains += 1;
        let mut state = GreedyState::new(&rado, &run.beta).unwrap();
        for w in cert.chain.prefixes() {
            prefixes += 1;
            match probe_encoding_laws(&mut state, &w, 5) {
                Ok(p) if p.intersection_law && p.constant_growth() => {}
                _ => exceptions += 1,
            }
        }
    }
    let pass = chains == runs.len() && exceptions == 0;
    let detail = format!("{chains}/{} chains available, {prefixes} prefixes probed, {exceptions} exceptions", runs.len());
    Verdict { id: 5, pass, detail }
}

/// Replicas V_1..V_4 for |U|,|V| ≤ 2 over {0..5}, on Rado and ldiag_primes(3).
fn disjoint_copies() -> Verdict {
    let start = Instant::now();
    let universe: Vec<Vertex> = (0..6).collect();
    let pairs: Vec<(VertexSet, VertexSet)> = subsets(&universe, 2)
        .into_iter()
        .flat_map(|u| subsets(&universe, 2).into_iter().map(move |v| (u.clone(), v)))
        .filter(|(u, v)| !v.is_empty() && u.is_disjoint(v))
        .collect();
    let mut details = Vec::new();
    let mut pass = true;
    for pres in [LimitPresentation::rado(), LimitPresentation::ldiag_primes(3).unwrap()] {
        let (mut checked, mut missing, mut exceptions) = (0, 0, 0);
        for (u, v) in &pairs {
            let mut seq = DisjointCopies::new(&pres, u, v).unwrap();
            if seq.get(4).is_err() {
                missing += 1;
            }
            let members = seq.computed();
            for (a, x) in members.iter().enumerate() {
                checked += 1;
                let ok = x.is_disjoint(u)
                    && members[a + 1..].iter().all(|y| x.is_disjoint(y))
                    && is_base_fixing_copy(&pres, u, v, x).unwrap_or(false);
                exceptions += usize::from(!ok);
            }
        }
        pass &= missing == 0 && exceptions == 0;
        details.push(format!(
            "{}: {} (U,V) pairs, {checked} replicas checked, {missing} sequences stopped before V_4, {exceptions} exceptions",
            pres.descriptor(),
            pairs.len()
        ));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 60);
    Verdict { id: 6, pass, detail: format!("{}; {:.2}s (limit 60s)", details.join("; "), elapsed.as_secs_f64()) }
}

/// Golden failure paths through the binary.
fn failure_paths() -> Verdict {
    let run = |bits: &str, depth: &str| {
        Command::new(env!("CARGO_BIN_EXE_fraisse"))
            .args(["mono", "embed", "--pres", "rado", "--beta", "K2", "--bits", bits, "--depth", depth])
            .env_remove("FORGE_BUDGET")
            .output()
            .unwrap()
    };
    let zeros = run("literal:zeros", "1");
    let zeros_err = String::from_utf8_lossy(&zeros.stderr).into_owned();
    let short = run("literal:01", "8");
    let short_err = String::from_utf8_lossy(&short.stderr).into_owned();
    let pass = zeros.status.code() == Some(2)
        && zeros_err.starts_with("error: chain step 1:")
        && short.status.code() == Some(3)
        && short_err == "error: chain step 1: prefix exhausted at j=12\n";
    let detail = format!(
        "zeros exit {:?} `{}`; literal 01 exit {:?} `{}`",
        zeros.status.code(),
        zeros_err.trim(),
        short.status.code(),
        short_err.trim()
    );
    Verdict { id: 7, pass, detail }
}

/// ℓ=2, 200 prng seeds, |X|+|Y| ≤ 2, indices ≤ 2, 64 candidates for z.
fn bit_genericity() -> Verdict {
    let caps = ProbeCaps { max_set: 2, max_pair: 2, max_z: 0, max_index: 2 };
    let (mut instances, mut violations, mut seeds_with_violations) = (0, 0, 0);
    for seed in 0..200 {
        let pres = LimitPresentation::ldiag_bits(2, &BitSource::prng(seed)).unwrap();
        let report = genericity_probe(&pres, &caps, 63).unwrap();
        instances += report.instance_count();
        violations += report.violated.len();
        seeds_with_violations += usize::from(!report.violated.is_empty());
    }
    let detail = format!("{instances} instances over 200 seeds, {violations} violations ({seeds_with_violations} seeds)");
    Verdict { id: 8, pass: violations == 0, detail }
}

#[test]
fn acceptance() {
    let (v1, out1) = rado_extension();
    report(&v1);
    let (v2, out2) = prime_genericity();
    report(&v2);
    let (v3, runs, out3) = end_to_end();
    report(&v3);
    let v4 = chain_audit(&runs);
    report(&v4);
    let v5 = encoding_laws(&runs);
    report(&v5);
    let v6 = disjoint_copies();
    report(&v6);
    let v7 = failure_paths();
    report(&v7);
    let v8 = bit_genericity();
    report(&v8);

    let (_, again1) = rado_extension();
    let (_, again2) = prime_genericity();
    let (_, _, again3) = end_to_end();
    let same = [out1 == again1, out2 == again2, out3 == again3];
    let v9 = Verdict {
        id: 9,
        pass: same.iter().all(|&s| s),
        detail: format!("criteria 1-3 outputs identical on rerun: {same:?} ({} bytes)", out1.len() + out2.len() + out3.len()),
    };
    report(&v9);

    let failed: Vec<u32> = [&v1, &v2, &v3, &v4, &v5, &v6, &v7, &v8, &v9].iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
