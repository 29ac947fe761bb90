//! Straight-line reference for the two ranking algorithms, over plain data
//! that is also rendered to the library's input formats.

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct Rep {
    pub atom: usize,
    pub scores: Vec<Option<f64>>,
    pub prefers: Vec<(usize, usize)>,
    pub nationality: Option<&'static str>,
}

#[derive(Clone, Debug)]
pub struct World {
    pub n: usize,
    pub atoms: usize,
    pub user: Vec<(usize, usize)>,
    pub reports: Vec<Rep>,
}

fn feature(i: usize) -> String {
    format!("f{i}")
}

/// Edges of a random acyclic relation: only from lower to higher positions
/// of a random permutation.
pub fn random_dag(rng: &mut StdRng, n: usize) -> Vec<(usize, usize)> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let p = rng.random_range(0.0..0.6);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((perm[i], perm[j]));
            }
        }
    }
    edges
}

pub fn random_world(rng: &mut StdRng) -> World {
    let n = rng.random_range(1..=6);
    let atoms = rng.random_range(1..=10);
    let user = random_dag(rng, n);
    let mut reports = Vec::new();
    for a in 0..atoms {
        for _ in 0..rng.random_range(0..=6) {
            let scores = (0..n)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        None
                    } else {
                        // coarse grid values make exact ties likely
                        Some(if rng.random_bool(0.5) {
                            rng.random_range(0..=10) as f64 / 10.0
                        } else {
                            rng.random_range(0.0..=1.0)
                        })
                    }
                })
                .collect();
            reports.push(Rep {
                atom: a,
                scores,
                prefers: random_dag(rng, n),
                nationality: *[Some("Italian"), Some("Spanish"), None].choose(rng).unwrap(),
            });
        }
    }
    World {
        n,
        atoms,
        user,
        reports,
    }
}

impl World {
    pub fn kb_source(&self) -> String {
        let fs: Vec<String> = (0..self.n).map(feature).collect();
        let mut s = format!("@pred item/1 features({}).\n@pred other/1.\n", fs.join(", "));
        for a in 0..self.atoms {
            s += &format!("item(i{a}).\n");
        }
        s += "other(o1).\n";
        s
    }

    pub fn user_spo_json(&self) -> String {
        spo_json(self.n, &self.user)
    }

    pub fn reports_json(&self) -> String {
        let rows: Vec<String> = self
            .reports
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let scores: Vec<String> = r
                    .scores
                    .iter()
                    .enumerate()
                    .map(|(i, s)| match s {
                        Some(v) => format!("\"f{i}\": {v:?}"),
                        None => format!("\"f{i}\": null"),
                    })
                    .collect();
                let register = match r.nationality {
                    Some(nat) => format!("{{\"nationality\": \"{nat}\", \"age\": 40}}"),
                    None => "{\"age\": 40}".to_string(),
                };
                format!(
                    "{{\"atom\": \"item(i{})\", \"id\": \"r{k}\", \"scores\": {{{}}}, \"prefers\": {}, \"register\": {register}}}",
                    r.atom,
                    scores.join(", "),
                    pairs_json(&r.prefers)
                )
            })
            .collect();
        format!("[{}]", rows.join(",\n"))
    }
}

fn pairs_json(edges: &[(usize, usize)]) -> String {
    let ps: Vec<String> = edges.iter().map(|(a, b)| format!("[\"f{a}\", \"f{b}\"]")).collect();
    format!("[{}]", ps.join(", "))
}

pub fn spo_json(n: usize, edges: &[(usize, usize)]) -> String {
    let fs: Vec<String> = (0..n).map(|i| format!("\"f{i}\"")).collect();
    format!("{{\"features\": [{}], \"prefers\": {}}}", fs.join(", "), pairs_json(edges))
}

/// Transitive closure as an adjacency matrix.
pub fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for &(a, b) in edges {
        m[a][b] = true;
    }
    // repeated squaring-free fixpoint: keep adding implied pairs
    let mut changed = true;
    while changed {
        changed = false;
        for a in 0..n {
            for b in 0..n {
                if m[a][b] {
                    for c in 0..n {
                        if m[b][c] && !m[a][c] {
                            m[a][c] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
    }
    m
}

/// Rank as one more than the longest chain of features strictly above.
pub fn ranks(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let m = closure(n, edges);
    fn go(f: usize, m: &[Vec<bool>], memo: &mut Vec<Option<usize>>) -> usize {
        if let Some(r) = memo[f] {
            return r;
        }
        let r = 1 + (0..m.len())
            .filter(|&g| m[g][f])
            .map(|g| go(g, m, memo))
            .max()
            .unwrap_or(0);
        memo[f] = Some(r);
        r
    }
    let mut memo = vec![None; n];
    (0..n).map(|f| go(f, &m, &mut memo)).collect()
}

pub fn trust(r: &Rep, n: usize) -> Vec<f64> {
    let factor = if r.nationality == Some("Italian") { 1.0 } else { 0.25 };
    ranks(n, &r.prefers)
        .iter()
        .map(|&k| factor / 2f64.powi(k as i32 - 1))
        .collect()
}

pub fn rank_distance(n: usize, a: &[(usize, usize)], b: &[(usize, usize)]) -> f64 {
    let (ra, rb) = (ranks(n, a), ranks(n, b));
    let d: usize = ra.iter().zip(&rb).map(|(x, y)| x.abs_diff(*y)).sum();
    0.5f64.powi(d as i32)
}

pub fn similarity(n: usize, a: &[(usize, usize)], b: &[(usize, usize)]) -> f64 {
    if n < 2 {
        return 1.0;
    }
    let (ca, cb) = (closure(n, a), closure(n, b));
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let one = [ca[i][j], ca[j][i]];
            let two = [cb[i][j], cb[j][i]];
            total += if one == two {
                1.0
            } else if one == [false, false] || two == [false, false] {
                0.5
            } else {
                0.0
            };
        }
    }
    total / (n * (n - 1) / 2) as f64
}

#[derive(Clone, Copy)]
pub enum Rel {
    RankDistance,
    Sim,
}

fn relevance(w: &World, r: &Rep, rel: Rel) -> f64 {
    match rel {
        Rel::RankDistance => rank_distance(w.n, &r.prefers, &w.user),
        Rel::Sim => similarity(w.n, &r.prefers, &w.user),
    }
}

/// Score of every atom under the basic algorithm.
pub fn basic_scores(w: &World, rel: Rel) -> Vec<f64> {
    let ru = ranks(w.n, &w.user);
    (0..w.atoms)
        .map(|a| {
            let reps: Vec<&Rep> = w.reports.iter().filter(|r| r.atom == a).collect();
            if reps.is_empty() {
                return 0.0;
            }
            let mut score = 0.0;
            for r in &reps {
                let t = trust(r, w.n);
                let mut sum = 0.0;
                let mut count = 0;
                for i in 0..w.n {
                    if let Some(e) = r.scores[i] {
                        sum += e * t[i] / ru[i] as f64;
                        count += 1;
                    }
                }
                if count > 0 {
                    score += relevance(w, r, rel) * sum / count as f64;
                }
            }
            score / reps.len() as f64
        })
        .collect()
}

/// Score of every atom under the histogram algorithm with drop-lowest.
pub fn hist_scores(w: &World, rel: Rel, threshold: f64) -> Vec<f64> {
    let ru = ranks(w.n, &w.user);
    (0..w.atoms)
        .map(|a| {
            let reps: Vec<&Rep> = w
                .reports
                .iter()
                .filter(|r| r.atom == a && relevance(w, r, rel) >= threshold)
                .collect();
            let mut total = 0.0;
            for i in 0..w.n {
                let mut sums = [0.0; 10];
                let mut counts = [0usize; 10];
                for r in &reps {
                    if let Some(e) = r.scores[i] {
                        let b = ((trust(r, w.n)[i] * 10.0) as usize).min(9);
                        sums[b] += e;
                        counts[b] += 1;
                    }
                }
                let means: Vec<f64> = (0..10)
                    .filter(|&b| counts[b] > 0)
                    .map(|b| sums[b] / counts[b] as f64)
                    .collect();
                let kept = if means.len() >= 2 { &means[1..] } else { &means[..] };
                let collapsed = if kept.is_empty() {
                    0.0
                } else {
                    kept.iter().sum::<f64>() / kept.len() as f64
                };
                total += collapsed / ru[i] as f64;
            }
            total
        })
        .collect()
}
