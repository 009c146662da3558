//! Reference implementations used as test oracles. They work from raw
//! records and plain arrays and share no code with the library's algorithms.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use breakthru::corpus::{CorpusBuilder, WorkRecord};
use breakthru::CitationCorpus;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random corpus with noise: self references, duplicates, dangling ids and a
/// few citations that point forward in time.
pub fn random_records(seed: u64, n: usize) -> Vec<WorkRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let years: Vec<i32> = (0..n).map(|_| rng.gen_range(1990..=2012)).collect();
    let density = rng.gen_range(1.0..8.0);
    (0..n)
        .map(|i| {
            let k = rng.gen_range(0..=(2.0 * density) as usize);
            let mut refs = Vec::new();
            for _ in 0..k {
                let roll: f64 = rng.gen();
                if roll < 0.03 {
                    refs.push(format!("X{}", rng.gen_range(0..50)));
                } else if roll < 0.05 {
                    refs.push(format!("W{i}"));
                } else {
                    let j = rng.gen_range(0..n);
                    // mostly backwards in time
                    if years[j] <= years[i] || rng.gen_bool(0.05) {
                        refs.push(format!("W{j}"));
                    }
                }
            }
            let mut r = WorkRecord::new(format!("W{i}"), years[i]).with_references(refs);
            if rng.gen_bool(0.9) {
                r = r.with_subfield(rng.gen_range(1..6));
            }
            r
        })
        .collect()
}

pub fn build(records: &[WorkRecord]) -> CitationCorpus {
    let mut b = CorpusBuilder::new(1000..=3000);
    for r in records {
        let _ = b.push(r.clone());
    }
    b.finish().0
}

/// Cleaned view of the records: distinct in-corpus references, no self loops.
pub struct Naive {
    pub year: HashMap<String, i32>,
    pub refs: HashMap<String, BTreeSet<String>>,
    pub ids: Vec<String>,
}

impl Naive {
    pub fn new(records: &[WorkRecord]) -> Self {
        let mut year = HashMap::new();
        let mut ids = Vec::new();
        for r in records {
            if !year.contains_key(&r.work_id) {
                year.insert(r.work_id.clone(), r.pub_year);
                ids.push(r.work_id.clone());
            }
        }
        let mut refs = HashMap::new();
        let mut seen = BTreeSet::new();
        for r in records {
            if !seen.insert(r.work_id.clone()) {
                continue;
            }
            let set: BTreeSet<String> =
                r.references.iter().filter(|x| **x != r.work_id && year.contains_key(*x)).cloned().collect();
            refs.insert(r.work_id.clone(), set);
        }
        Naive { year, refs, ids }
    }

    fn citers_in_year<'a>(&'a self, target: &'a str, y: i32) -> impl Iterator<Item = &'a String> + 'a {
        self.ids.iter().filter(move |c| self.year[*c] == y && self.refs[*c].contains(target))
    }

    /// γ^t(j) under the own-age convention.
    pub fn gamma(&self, j: &str, t: i32) -> u64 {
        self.citers_in_year(j, self.year[j] + t).count() as u64
    }

    /// NBNC with multiset co-citation, evaluated straight from the definition.
    pub fn nbnc(&self, f: &str, horizon: u32) -> (f64, Vec<f64>) {
        let mut terms = Vec::new();
        for t in 0..=horizon as i32 {
            let citers: Vec<&String> = self.citers_in_year(f, self.year[f] + t).collect();
            let c = citers.len() as u64;
            let mut n = 0u64;
            let mut denom = 0u64;
            for p in &citers {
                for j in self.refs[*p].iter().filter(|j| j.as_str() != f) {
                    n += 1;
                    denom += self.gamma(j, t);
                }
            }
            terms.push(if c == 0 || denom == 0 { 0.0 } else { (n * c) as f64 / denom as f64 });
        }
        (terms.iter().fold(0.0, |a, b| a + b), terms)
    }

    /// (C_x, C_y, C_refs, CD) by enumerating every work in the window.
    pub fn cd(&self, f: &str, horizon: u32) -> (u64, u64, u64, f64) {
        let (lo, hi) = (self.year[f], self.year[f] + horizon as i32);
        let frefs = &self.refs[f];
        let (mut cx, mut cy, mut cr) = (0, 0, 0);
        for w in &self.ids {
            let y = self.year[w];
            if w == f || y < lo || y > hi {
                continue;
            }
            let cites_f = self.refs[w].contains(f);
            let cites_ref = self.refs[w].iter().any(|r| frefs.contains(r));
            match (cites_f, cites_ref) {
                (true, false) => cx += 1,
                (true, true) => cy += 1,
                (false, true) => cr += 1,
                _ => {}
            }
        }
        let d = cx + cy + cr;
        let v = if d == 0 { 0.0 } else { (cx as f64 - cy as f64) / d as f64 };
        (cx, cy, cr, v)
    }
}

/// Minimum cost over every monotone warping path, by explicit enumeration.
pub fn dtw_exhaustive(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    fn walk(a: &[[f64; 2]], b: &[[f64; 2]], i: usize, j: usize, acc: f64, best: &mut f64) {
        let d = ((a[i][0] - b[j][0]).powi(2) + (a[i][1] - b[j][1]).powi(2)).sqrt();
        let acc = acc + d;
        if i + 1 == a.len() && j + 1 == b.len() {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

/// RCA as a ratio of shares, the textbook way round.
pub fn rca_shares(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: f64 = x.iter().flatten().sum();
    let rows: Vec<f64> = x.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..x[0].len()).map(|s| x.iter().map(|r| r[s]).sum()).collect();
    x.iter()
        .enumerate()
        .map(|(c, r)| {
            r.iter()
                .enumerate()
                .map(|(s, v)| if rows[c] == 0.0 || cols[s] == 0.0 { 0.0 } else { (v / rows[c]) / (cols[s] / total) })
                .collect()
        })
        .collect()
}

/// Dense symmetric eigen-decomposition sorted by decreasing eigenvalue.
pub fn dense_eigen(a: &ndarray::Array2<f64>) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let n = a.nrows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let e = m.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[j].partial_cmp(&e.eigenvalues[i]).unwrap());
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = nalgebra::DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Zero-diagonal U = A Aᵀ and V = Aᵀ A from a 0/1 matrix, A = M/(k k').
pub fn proximity_oracle(m: &[Vec<u8>]) -> (ndarray::Array2<f64>, ndarray::Array2<f64>) {
    let (nc, ns) = (m.len(), m[0].len());
    let k: Vec<f64> = m.iter().map(|r| r.iter().map(|&v| f64::from(v)).sum()).collect();
    let kp: Vec<f64> = (0..ns).map(|s| (0..nc).map(|c| f64::from(m[c][s]) / k[c]).sum()).collect();
    let a = ndarray::Array2::from_shape_fn((nc, ns), |(c, s)| f64::from(m[c][s]) / (k[c] * kp[s]));
    let mut u = ndarray::Array2::zeros((nc, nc));
    for i in 0..nc {
        for j in 0..nc {
            if i != j {
                u[[i, j]] = (0..ns).map(|s| a[[i, s]] * a[[j, s]]).sum();
            }
        }
    }
    let mut v = ndarray::Array2::zeros((ns, ns));
    for i in 0..ns {
        for j in 0..ns {
            if i != j {
                v[[i, j]] = (0..nc).map(|c| a[[c, i]] * a[[c, j]]).sum();
            }
        }
    }
    (u, v)
}

pub fn inf_residual(a: &ndarray::Array2<f64>, x: ndarray::ArrayView1<f64>, l: f64) -> f64 {
    let ax = a.dot(&x);
    ax.iter().zip(x.iter()).map(|(p, q)| (p - l * q).abs()).fold(0.0, f64::max)
}

/// Spearman via the closed form 1 − 6Σd²/(n(n²−1)); valid without ties.
pub fn spearman_closed_form(a: &[f64], b: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = (pos + 1) as f64;
        }
        r
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Least-squares slope and intercept from the 2x2 normal equations.
pub fn normal_equations(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy * sxx - sx * sxy) / det;
    (slope, intercept)
}

pub fn count_by<K: Ord + Clone>(items: impl IntoIterator<Item = K>) -> BTreeMap<K, u64> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// Ingests the malformed-row fixture and lists every mismatch against the
/// counts worked out by hand.
pub fn check_ingest_fixture() -> Vec<String> {
    use breakthru::corpus::{ingest_files, IngestReport, IngestSchema};
    let path = data_dir().join("ingest_fixture.jsonl");
    let (c, report) = match ingest_files(&[path], &IngestSchema::default(), 1800..=2100) {
        Ok(x) => x,
        Err(e) => return vec![e.to_string()],
    };
    let want = IngestReport {
        lines_read: 14,
        blank_lines: 1,
        works: 6,
        edges: 6,
        malformed_json: 2,
        missing_id: 1,
        missing_year: 1,
        invalid_year: 1,
        year_out_of_range: 1,
        duplicate_id: 1,
        dangling_refs: 1,
        duplicate_refs: 1,
        self_refs: 1,
        invalid_references: 3,
        invalid_countries: 1,
        unlabeled_subfield: 2,
        unattributed: 2,
        backdated_citations: 1,
    };
    let mut bad = Vec::new();
    if report != want {
        bad.push(format!("report {report:?}"));
    }
    let id = |n: u32| format!("https://openalex.org/W{n}");
    let refs_of = |n: u32| -> Vec<String> {
        let mut v: Vec<String> = c.references(c.lookup(&id(n)).unwrap()).iter().map(|&w| c.id(w).to_string()).collect();
        v.sort();
        v
    };
    let citers_of = |n: u32| -> Vec<String> {
        let mut v: Vec<String> = c.citers(c.lookup(&id(n)).unwrap()).iter().map(|&w| c.id(w).to_string()).collect();
        v.sort();
        v
    };
    let expect = [
        (1, vec![], vec![id(2), id(3)]),
        (2, vec![id(1)], vec![id(3), id(9)]),
        (3, vec![id(1), id(2)], vec![id(8)]),
        (8, vec![id(3)], vec![id(9)]),
        (9, vec![id(2), id(8)], vec![]),
        (10, vec![], vec![]),
    ];
    for (n, r, ci) in expect {
        if c.index_of(&id(n)).is_none() {
            bad.push(format!("W{n} missing"));
            continue;
        }
        if refs_of(n) != r {
            bad.push(format!("W{n} references {:?}", refs_of(n)));
        }
        if citers_of(n) != ci {
            bad.push(format!("W{n} citers {:?}", citers_of(n)));
        }
    }
    // transpose: every out-edge appears once as an in-edge and vice versa
    let mut out_edges = Vec::new();
    let mut in_edges = Vec::new();
    for w in c.indices() {
        out_edges.extend(c.references(w).iter().map(|&r| (w, r)));
        in_edges.extend(c.citers(w).iter().map(|&s| (s, w)));
    }
    out_edges.sort();
    in_edges.sort();
    if out_edges != in_edges || out_edges.len() != c.edge_count() {
        bad.push("adjacency is not transpose-consistent".into());
    }
    let w2 = c.lookup(&id(2)).unwrap();
    let countries: Vec<String> = c.countries(w2).iter().map(|x| x.to_string()).collect();
    if countries != ["GB", "US"] {
        bad.push(format!("W2 countries {countries:?}"));
    }
    if c.subfield(c.lookup(&id(3)).unwrap()) != Some(1703) || c.subfield(c.lookup(&id(10)).unwrap()).is_some() {
        bad.push("subfield parsing".into());
    }
    bad
}

/// Every file below `dir` keyed by its relative path.
pub fn file_tree(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Differences between two run directories, ignoring timing fields in the
/// manifest (the manifest's checksums are compared instead).
pub fn compare_runs(a: &std::path::Path, b: &std::path::Path) -> Vec<String> {
    use breakthru::pipeline::Manifest;
    let (ta, tb) = (file_tree(a), file_tree(b));
    let mut diffs = Vec::new();
    let keys: BTreeSet<&String> = ta.keys().chain(tb.keys()).collect();
    for k in keys {
        if k == Manifest::FILE {
            continue;
        }
        match (ta.get(k), tb.get(k)) {
            (Some(x), Some(y)) if x == y => {}
            (Some(_), Some(_)) => diffs.push(format!("{k} differs")),
            _ => diffs.push(format!("{k} present in one run only")),
        }
    }
    let (ma, mb) = (Manifest::load(a).unwrap(), Manifest::load(b).unwrap());
    if ma.checksums() != mb.checksums() {
        diffs.push("manifest checksums differ".into());
    }
    if ma.config_hash != mb.config_hash {
        diffs.push("config hash differs".into());
    }
    diffs
}
