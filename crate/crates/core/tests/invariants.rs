use std::collections::BTreeSet;

use fraisse::{
    bits_adjacent, check_homogeneity_sample, is_base_fixing_copy, monochromatic_embedding, psi, verify_certificate,
    BitSource, CopyIndex, DisjointCopies, Error, FinStructure, LimitPresentation, Mapping, Vertex, VertexSet,
};

fn set(v: &[Vertex]) -> VertexSet {
    VertexSet::new(v.to_vec()).unwrap()
}

fn subsets(universe: &[Vertex], max: usize) -> Vec<VertexSet> {
    (0u32..1 << universe.len())
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| universe.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &v)| v).collect())
        .collect()
}

#[test]
fn replicas_are_disjoint_and_fix_the_base() {
    let rado = LimitPresentation::rado();
    let universe: Vec<Vertex> = (0..5).collect();
    let mut checked = 0;
    for u in subsets(&universe, 2) {
        for v in subsets(&universe, 2) {
            if v.is_empty() || !u.is_disjoint(&v) {
                continue;
            }
            let mut seq = DisjointCopies::new(&rado, &u, &v).unwrap();
            for k in 1..=3 {
                match seq.get(k) {
                    Ok(_) => {}
                    Err(Error::DensityBound { .. }) => break,
                    Err(e) => panic!("U={u} V={v}: {e}"),
                }
            }
            let members = seq.computed();
            for (a, x) in members.iter().enumerate() {
                assert!(x.is_disjoint(&u));
                assert!(is_base_fixing_copy(&rado, &u, &v, x).unwrap(), "U={u} V={v} V_{a}={x}");
                for y in &members[a + 1..] {
                    assert!(x.is_disjoint(y));
                }
            }
            checked += members.len();
        }
    }
    assert!(checked > 100);
}

#[test]
fn base_fixing_check_rejects_moved_base() {
    let rado = LimitPresentation::rado();
    // 1 is adjacent to 0; 2 is not, so {2} is no replica of {1} over {0}
    assert!(is_base_fixing_copy(&rado, &set(&[0]), &set(&[1]), &set(&[3])).unwrap());
    assert!(!is_base_fixing_copy(&rado, &set(&[0]), &set(&[1]), &set(&[2])).unwrap());
    assert!(!is_base_fixing_copy(&rado, &set(&[0]), &set(&[1]), &set(&[0])).unwrap());
}

#[test]
fn ldiag_replicas_fix_the_base() {
    let primes = LimitPresentation::ldiag_primes(3).unwrap().with_scan_bound(1 << 12);
    for (u, v) in [(set(&[0]), set(&[1])), (set(&[1]), set(&[3, 5])), (VertexSet::empty(), set(&[0, 1]))] {
        let mut seq = DisjointCopies::new(&primes, &u, &v).unwrap();
        seq.get(3).unwrap();
        for x in seq.computed() {
            assert!(is_base_fixing_copy(&primes, &u, &v, x).unwrap(), "U={u} V={v} W={x}");
        }
    }
}

#[test]
fn rado_extends_every_small_partial_isomorphism() {
    let rado = LimitPresentation::rado();
    for edges in 0u32..8 {
        let e: Vec<(usize, usize)> =
            [(0, 1), (0, 2), (1, 2)].into_iter().enumerate().filter(|(i, _)| edges >> i & 1 == 1).map(|(_, p)| p).collect();
        let b = FinStructure::graph(3, &e).unwrap();
        let a = b.restrict(&[0, 1]);
        for x in 0..8 {
            for y in 0..8 {
                let h = Mapping::new(vec![x, y]);
                if x == y || rado.query_pair(x, y) != a.holds(0, &[0, 1]) {
                    continue;
                }
                let ext = check_homogeneity_sample(&rado, &a, &b, &h, 1 << 16).unwrap().expect("Rado is homogeneous");
                assert_eq!(ext.restricted(2), h);
            }
        }
    }
}

trait PairQuery {
    fn query_pair(&self, a: Vertex, b: Vertex) -> bool;
}

impl PairQuery for LimitPresentation {
    fn query_pair(&self, a: Vertex, b: Vertex) -> bool {
        use fraisse::structure::Oracle;
        self.query(0, &[a, b]).unwrap()
    }
}

#[test]
fn psi_reads_distinct_indices_on_a_sample() {
    let mut seen = BTreeSet::new();
    for i in 0..2 {
        for n in 0..23 {
            for m in 0..22 {
                assert!(seen.insert(psi(3, i, n, m).unwrap()));
            }
        }
    }
    assert!(seen.len() >= 1000);
}

#[test]
fn flipping_one_bit_changes_one_succession() {
    let base = "1011001110001011010011101";
    let alpha = BitSource::literal(base).unwrap();
    for t in 0..base.len() {
        let flipped: String =
            base.chars().enumerate().map(|(i, c)| if i == t { if c == '1' { '0' } else { '1' } } else { c }).collect();
        let beta = BitSource::literal(&flipped).unwrap();
        let mut changed = Vec::new();
        for n in 0..6 {
            for m in 0..6 {
                let (Ok(a), Ok(b)) = (bits_adjacent(&alpha, 2, (0, n), (1, m)), bits_adjacent(&beta, 2, (0, n), (1, m)))
                else {
                    continue;
                };
                if a != b {
                    changed.push((n, m));
                }
            }
        }
        assert!(changed.len() <= 1, "t={t}: {changed:?}");
        for (n, m) in changed {
            assert_eq!(psi(2, 0, n, m).unwrap(), t as u64);
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let rado = LimitPresentation::rado();
    let k2 = FinStructure::complete_graph(2);
    let eps = BitSource::cycle("1110111").unwrap();
    let a = monochromatic_embedding(&rado, &k2, &eps, 4, 1000);
    let b = monochromatic_embedding(&rado, &k2, &eps, 4, 1000);
    assert_eq!(serde_json::to_string(&a.map_err(|e| e.to_string())).ok(), serde_json::to_string(&b.map_err(|e| e.to_string())).ok());
}

#[test]
fn complemented_source_gives_colour_zero_image() {
    let complete = LimitPresentation::complete();
    let k2 = FinStructure::complete_graph(2);
    let eps = BitSource::zeros().complement();
    let cert = monochromatic_embedding(&complete, &k2, &eps, 5, 100).unwrap();
    assert!(verify_certificate(&cert).unwrap());
    let original = BitSource::zeros();
    let mut index = CopyIndex::new(&complete, &k2).unwrap();
    let image = cert.image();
    let copies = index.copies_within(&image).unwrap();
    assert_eq!(copies.len(), image.len() * (image.len() - 1) / 2);
    for c in copies {
        assert!(!original.bit_at(index.rank(&c).unwrap().unwrap()).unwrap());
    }
}

#[test]
fn complete_graph_images_are_monochromatic_cliques() {
    let complete = LimitPresentation::complete();
    let k2 = FinStructure::complete_graph(2);
    let eps = BitSource::cycle("11111111111111111110").unwrap();
    let cert = monochromatic_embedding(&complete, &k2, &eps, 4, 1000).unwrap();
    let image = cert.image().into_vec();
    let mut index = CopyIndex::new(&complete, &k2).unwrap();
    for (i, &a) in image.iter().enumerate() {
        for &b in &image[i + 1..] {
            let j = index.rank(&set(&[a, b])).unwrap().unwrap();
            assert!(eps.bit_at(j).unwrap(), "pair {a},{b} has colour 0");
        }
    }
}
