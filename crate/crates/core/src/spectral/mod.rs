//! The sum-product graph `SP_{q,d}`, its spectrum, multiset edge counts and
//! the expander-mixing inequality.
//!
//! Vertices are pairs `(a, b)` with `a in F_q^d`, `b in F_q`; `(a, b) ~ (c, e)`
//! iff `a . c = b + e`. Loops (`a . a = 2b`) are kept, which makes the graph
//! exactly `q^d`-regular.
//!
//! Vertex index of `(a, b)` is `b + q * (a_0 + q * a_1 + ...)`, so `(0, b)`
//! has index `b`.

pub mod jacobi;

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::finite_field::{Elem, FieldSpec};
use crate::pointset::{distance_raw, norm_raw, PointSet};
use jacobi::jacobi_eigenvalues;

/// Largest vertex count for which graphs are materialized.
pub const MAX_VERTICES: u64 = 4096;

/// Above this size [`SpectrumMethod::Auto`] switches to the orbit reduction.
pub const DENSE_JACOBI_LIMIT: usize = 512;

/// Convergence target for Jacobi, relative to the degree `q^d`.
pub const JACOBI_REL_TOL: f64 = 1e-10;

/// Largest tuple count enumerated by [`energy_multisets`].
pub const MULTISET_TUPLE_LIMIT: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
struct GraphKey {
    field: FieldSpec,
    d: usize,
}

pub struct SumProductGraph {
    key: GraphKey,
    n: usize,
    degree: usize,
    /// `n * degree` neighbour indices, row by row.
    neighbors: Vec<u32>,
    /// Dense adjacency bitmap, `n` rows of `words` u64s.
    bits: Vec<u64>,
    words: usize,
    loops: usize,
    spectrum: OnceLock<Spectrum>,
}

impl std::fmt::Debug for SumProductGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SumProductGraph")
            .field("q", &self.key.field.q())
            .field("d", &self.key.d)
            .field("n", &self.n)
            .finish()
    }
}

fn encode(q: usize, a: &[Elem]) -> usize {
    a.iter().rev().fold(0, |acc, x| acc * q + x.index())
}

fn decode(q: usize, mut idx: usize, d: usize) -> Vec<Elem> {
    (0..d)
        .map(|_| {
            let c = Elem::from_index(idx % q);
            idx /= q;
            c
        })
        .collect()
}

fn dot(field: &FieldSpec, a: &[Elem], c: &[Elem]) -> Elem {
    a.iter().zip(c).fold(Elem::ZERO, |acc, (&x, &y)| field.add(acc, field.mul(x, y)))
}

pub fn vertex_count(field: &FieldSpec, d: usize) -> Option<u64> {
    (field.q() as u64).checked_pow(d as u32 + 1)
}

/// Build `SP_{q,d}`; refuses graphs with more than [`MAX_VERTICES`] vertices.
pub fn build_sp_graph(field: &FieldSpec, d: usize) -> Result<SumProductGraph> {
    build_sp_graph_with(field, d, Execution::default())
}

pub fn build_sp_graph_with(field: &FieldSpec, d: usize, exec: Execution) -> Result<SumProductGraph> {
    if d == 0 {
        return Err(Error::DimensionMismatch(0, 1));
    }
    let n = vertex_count(field, d).unwrap_or(u64::MAX);
    if n > MAX_VERTICES {
        return Err(Error::TooLargeGraph(n));
    }
    let n = n as usize;
    let q = field.q() as usize;
    let degree = n / q;
    let directions: Vec<Vec<Elem>> = (0..degree).map(|i| decode(q, i, d)).collect();
    let rows = exec::map_range(exec, n, |u| {
        let b = Elem::from_index(u % q);
        let a = decode(q, u / q, d);
        let mut row: Vec<u32> = directions
            .iter()
            .enumerate()
            .map(|(ci, c)| {
                let e = field.sub(dot(field, &a, c), b);
                (e.index() + q * ci) as u32
            })
            .collect();
        row.sort_unstable();
        row
    });
    let words = n.div_ceil(64);
    let mut bits = vec![0u64; n * words];
    let mut loops = 0;
    for (u, row) in rows.iter().enumerate() {
        for &v in row {
            let v = v as usize;
            bits[u * words + v / 64] |= 1 << (v % 64);
            loops += (u == v) as usize;
        }
    }
    let graph = SumProductGraph {
        key: GraphKey { field: field.clone(), d },
        n,
        degree,
        neighbors: rows.concat(),
        bits,
        words,
        loops,
        spectrum: OnceLock::new(),
    };
    for u in 0..n {
        let row_sum: u32 = graph.bits[u * words..(u + 1) * words].iter().map(|w| w.count_ones()).sum();
        assert_eq!(row_sum as usize, degree, "row {u} of SP_{{{q},{d}}} is not {degree}-regular");
    }
    for u in 0..n {
        for &v in graph.neighbors(u) {
            assert!(graph.adjacent(v as usize, u), "adjacency not symmetric at ({u}, {v})");
        }
    }
    Ok(graph)
}

impl SumProductGraph {
    pub fn field(&self) -> &FieldSpec {
        &self.key.field
    }

    pub fn dim(&self) -> usize {
        self.key.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn loop_count(&self) -> usize {
        self.loops
    }

    pub fn vertex_index(&self, a: &[Elem], b: Elem) -> usize {
        assert_eq!(a.len(), self.key.d);
        b.index() + self.key.field.q() as usize * encode(self.key.field.q() as usize, a)
    }

    pub fn vertex(&self, idx: usize) -> (Vec<Elem>, Elem) {
        let q = self.key.field.q() as usize;
        (decode(q, idx / q, self.key.d), Elem::from_index(idx % q))
    }

    #[inline]
    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    /// Sorted neighbours of `u` (including `u` itself when it carries a loop).
    #[inline]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[u * self.degree..(u + 1) * self.degree]
    }

    pub fn row_sum(&self, u: usize) -> usize {
        self.bits[u * self.words..(u + 1) * self.words].iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Dense row-major adjacency as floats.
    pub fn dense_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for u in 0..n {
            for &v in self.neighbors(u) {
                a[u * n + v as usize] = 1.0;
            }
        }
        a
    }

    /// Spectrum computed once with [`SpectrumMethod::Auto`] and cached.
    pub fn spectrum(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = spectrum_with(self, SpectrumMethod::Auto, Execution::default())?;
        Ok(self.spectrum.get_or_init(|| s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    /// Jacobi on the full `n x n` adjacency matrix.
    Dense,
    /// Jacobi on the `q^d` blocks of size `q x q` obtained from the free
    /// action `(a, b) -> (a + s, b + a.s + s.s/2)` of `F_q^d` by automorphisms.
    OrbitReduced,
    /// Dense up to [`DENSE_JACOBI_LIMIT`] vertices, reduced above.
    Auto,
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Sorted in decreasing order, with multiplicity.
    pub eigenvalues: Vec<f64>,
    pub method: SpectrumMethod,
    pub sweeps: usize,
}

impl Spectrum {
    pub fn gamma1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Second eigenvalue `max(gamma_2, -gamma_n)`.
    pub fn gamma(&self) -> f64 {
        let n = self.eigenvalues.len();
        if n < 2 {
            return 0.0;
        }
        self.eigenvalues[1].max(-self.eigenvalues[n - 1])
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x * x).sum()
    }
}

/// Full spectrum of the adjacency matrix.
pub fn spectrum(graph: &SumProductGraph) -> Result<Spectrum> {
    spectrum_with(graph, SpectrumMethod::Auto, Execution::default())
}

pub fn spectrum_with(graph: &SumProductGraph, method: SpectrumMethod, exec: Execution) -> Result<Spectrum> {
    let tol = JACOBI_REL_TOL * graph.degree as f64;
    let method = match method {
        SpectrumMethod::Auto if graph.n <= DENSE_JACOBI_LIMIT => SpectrumMethod::Dense,
        SpectrumMethod::Auto => SpectrumMethod::OrbitReduced,
        m => m,
    };
    let (mut eigenvalues, sweeps) = match method {
        SpectrumMethod::Dense => {
            let r = jacobi_eigenvalues(graph.dense_matrix(), graph.n, tol)?;
            (r.eigenvalues, r.sweeps)
        }
        _ => {
            let q = graph.field().q() as usize;
            let blocks = orbit_blocks(graph);
            let solved = exec::map_slice(exec, &blocks, |b| jacobi_eigenvalues(b.clone(), q, tol));
            let mut all = Vec::with_capacity(graph.n);
            let mut sweeps = 0;
            for r in solved {
                let r = r?;
                sweeps = sweeps.max(r.sweeps);
                all.extend(r.eigenvalues);
            }
            (all, sweeps)
        }
    };
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok(Spectrum { eigenvalues, method, sweeps })
}

/// The blocks `M_w[alpha, beta] = sum_{u : u.u/2 = -(alpha + beta)} cos(2 pi Tr(w.u) / p)`,
/// one per `w in F_q^d`. Their spectra together form the spectrum of the graph.
fn orbit_blocks(graph: &SumProductGraph) -> Vec<Vec<f64>> {
    let field = graph.field();
    let q = field.q() as usize;
    let d = graph.dim();
    let m = graph.degree;
    let half = field.inv(field.from_int(2)).expect("odd characteristic");
    let points: Vec<Vec<Elem>> = (0..m).map(|i| decode(q, i, d)).collect();
    let level: Vec<usize> = points.iter().map(|u| field.mul(half, norm_raw(field, u)).index()).collect();
    let trace: Vec<u32> = field.elements().map(|x| field.trace(x)).collect();
    let p = field.p() as f64;
    let cos: Vec<f64> = (0..field.p()).map(|t| (2.0 * PI * t as f64 / p).cos()).collect();
    (0..m)
        .map(|wi| {
            let w = &points[wi];
            let mut s = vec![0.0; q];
            for (u, &lv) in points.iter().zip(&level) {
                s[lv] += cos[trace[dot(field, w, u).index()] as usize];
            }
            let mut block = vec![0.0; q * q];
            for alpha in 0..q {
                for beta in 0..q {
                    let lambda = field.neg(field.add(Elem::from_index(alpha), Elem::from_index(beta)));
                    block[alpha * q + beta] = s[lambda.index()];
                }
            }
            block
        })
        .collect()
}

/// `{q, d, n, degree, gamma1, gamma, bound_sqrt_2qd, certified}`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub q: u32,
    pub d: usize,
    pub n: usize,
    pub degree: usize,
    pub gamma1: f64,
    pub gamma: f64,
    pub bound_sqrt_2qd: f64,
    pub certified: bool,
}

/// Checks `gamma1 = q^d` (relative 1e-8) and `gamma <= sqrt(2 q^d) + 1e-6`.
pub fn certify(graph: &SumProductGraph) -> Result<SpectralReport> {
    let s = graph.spectrum()?;
    let degree = graph.degree as f64;
    let bound = (2.0 * degree).sqrt();
    let certified = (s.gamma1() - degree).abs() <= 1e-8 * degree && s.gamma() <= bound + 1e-6;
    Ok(SpectralReport {
        q: graph.field().q(),
        d: graph.dim(),
        n: graph.n,
        degree: graph.degree,
        gamma1: s.gamma1(),
        gamma: s.gamma(),
        bound_sqrt_2qd: bound,
        certified,
    })
}

/// A multiset of vertices of one sum-product graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexMultiset {
    key: GraphKey,
    mult: Vec<BigUint>,
    total: BigUint,
    total_sq: BigUint,
}

impl VertexMultiset {
    pub fn empty(graph: &SumProductGraph) -> Self {
        Self::from_key(graph.key.clone(), vec![BigUint::zero(); graph.n])
    }

    pub fn all_vertices(graph: &SumProductGraph) -> Self {
        Self::from_key(graph.key.clone(), vec![BigUint::from(1u8); graph.n])
    }

    pub fn from_counts(graph: &SumProductGraph, mult: Vec<BigUint>) -> Result<Self> {
        if mult.len() != graph.n {
            return Err(Error::DimensionMismatch(mult.len(), graph.n));
        }
        Ok(Self::from_key(graph.key.clone(), mult))
    }

    pub fn from_u64(graph: &SumProductGraph, mult: &[u64]) -> Result<Self> {
        Self::from_counts(graph, mult.iter().map(|&m| BigUint::from(m)).collect())
    }

    /// Multiplicity `m` on one vertex, zero elsewhere.
    pub fn single(graph: &SumProductGraph, v: usize, m: BigUint) -> Self {
        let mut mult = vec![BigUint::zero(); graph.n];
        mult[v] = m;
        Self::from_key(graph.key.clone(), mult)
    }

    fn from_key(key: GraphKey, mult: Vec<BigUint>) -> Self {
        let total = mult.iter().sum();
        let total_sq = mult.iter().map(|m| m * m).sum();
        VertexMultiset { key, mult, total, total_sq }
    }

    pub fn multiplicity(&self, v: usize) -> &BigUint {
        &self.mult[v]
    }

    /// `sum_v m(v)`.
    pub fn total(&self) -> &BigUint {
        &self.total
    }

    /// `sum_v m(v)^2`.
    pub fn total_sq(&self) -> &BigUint {
        &self.total_sq
    }

    fn small(&self) -> Option<Vec<u64>> {
        self.mult.iter().map(|m| m.to_u64()).collect()
    }
}

/// `e_m(B, C) = sum_{u, v} m_B(u) m_C(v) A(u, v)` over ordered pairs, loops
/// included once.
pub fn edges_between_multisets(graph: &SumProductGraph, b: &VertexMultiset, c: &VertexMultiset) -> Result<BigUint> {
    edges_between_multisets_with(graph, b, c, Execution::default())
}

pub fn edges_between_multisets_with(
    graph: &SumProductGraph,
    b: &VertexMultiset,
    c: &VertexMultiset,
    exec: Execution,
) -> Result<BigUint> {
    if b.key != graph.key || c.key != graph.key {
        return Err(Error::GraphMismatch);
    }
    let support: Vec<usize> = (0..graph.n).filter(|&u| !b.mult[u].is_zero()).collect();
    let fits = (&b.total * &c.total).bits() < 128;
    if let (true, Some(sb), Some(sc)) = (fits, b.small(), c.small()) {
        let parts = exec::map_slice(exec, &support, |&u| {
            let inner: u128 = graph.neighbors(u).iter().map(|&v| sc[v as usize] as u128).sum();
            sb[u] as u128 * inner
        });
        return Ok(BigUint::from(parts.iter().sum::<u128>()));
    }
    let parts = exec::map_slice(exec, &support, |&u| {
        let inner: BigUint = graph.neighbors(u).iter().map(|&v| &c.mult[v as usize]).sum();
        &b.mult[u] * inner
    });
    Ok(parts.into_iter().sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingReport {
    /// Exact `e_m(B, C)`, decimal.
    pub edges: String,
    /// Exact `q^d |B| |C| / n`, as a rational string.
    pub main_term: String,
    pub lhs_deviation: f64,
    /// `gamma_measured * sqrt(sum m_B^2) * sqrt(sum m_C^2)`.
    pub rhs_bound: f64,
    /// Same with `sqrt(2 q^d)` in place of the measured `gamma`.
    pub lemma_bound: f64,
    pub holds: bool,
}

/// Compares the multiset edge count against the mixing-lemma bound with the
/// measured second eigenvalue.
pub fn mixing_check(graph: &SumProductGraph, b: &VertexMultiset, c: &VertexMultiset) -> Result<MixingReport> {
    let edges = edges_between_multisets(graph, b, c)?;
    let gamma = graph.spectrum()?.gamma();
    let main = BigRational::new(
        (BigUint::from(graph.degree) * &b.total * &c.total).into(),
        BigUint::from(graph.n).into(),
    );
    let dev = (BigRational::from_integer(edges.clone().into()) - &main).abs();
    let lhs = dev.to_f64().unwrap_or(f64::INFINITY);
    let norms = b.total_sq.to_f64().unwrap_or(f64::INFINITY).sqrt() * c.total_sq.to_f64().unwrap_or(f64::INFINITY).sqrt();
    let rhs = gamma * norms;
    let lemma = (2.0 * graph.degree as f64).sqrt() * norms;
    let holds = dev.is_zero() || lhs <= rhs + 1e-6 * rhs;
    Ok(MixingReport {
        edges: edges.to_string(),
        main_term: main.to_string(),
        lhs_deviation: lhs,
        rhs_bound: rhs,
        lemma_bound: lemma,
        holds,
    })
}

/// The two vertex multisets of `SP_{q,2d}` whose edge count is `E_+^k(E)`:
///
/// `B = {(-2x_1, -2x_2, -||x_1|| - ||x_2|| - sum_{i=3}^{k} ||x_i - y_i|| + ||x_{k+1} - y_{k+1}||)}`
/// `C = {(y_1, y_2, -||y_1|| - ||y_2|| + sum_{i=k+2}^{2k} ||x_i - y_i||)}`
///
/// built by enumerating every tuple.
pub fn energy_multisets(graph: &SumProductGraph, e: &PointSet, k: usize) -> Result<(VertexMultiset, VertexMultiset)> {
    energy_multisets_asymmetric(graph, e, e, k)
}

/// As [`energy_multisets`] with `x_i in E`, `y_i in F`.
pub fn energy_multisets_asymmetric(
    graph: &SumProductGraph,
    e: &PointSet,
    f: &PointSet,
    k: usize,
) -> Result<(VertexMultiset, VertexMultiset)> {
    if k < 2 {
        return Err(Error::InvalidK { k, min: 2 });
    }
    if e.field() != f.field() || graph.field() != e.field() {
        return Err(Error::FieldMismatch);
    }
    if e.dim() != f.dim() {
        return Err(Error::DimensionMismatch(e.dim(), f.dim()));
    }
    let d = e.dim();
    if graph.dim() != 2 * d {
        return Err(Error::DimensionMismatch(graph.dim(), 2 * d));
    }
    let (ne, nf) = (e.len() as u64, f.len() as u64);
    let pairs = (ne * nf) as usize;
    let b_count = ne.checked_pow(2).and_then(|x| x.checked_mul((ne * nf).checked_pow(k as u32 - 1)?));
    let c_count = nf.checked_pow(2).and_then(|x| x.checked_mul((ne * nf).checked_pow(k as u32 - 1)?));
    match (b_count, c_count) {
        (Some(b), Some(c)) if b <= MULTISET_TUPLE_LIMIT && c <= MULTISET_TUPLE_LIMIT => {}
        _ => return Err(Error::TooLargeForOracle(u128::MAX)),
    }
    let field = e.field();
    let dists: Vec<Elem> = e
        .iter()
        .flat_map(|x| f.iter().map(move |y| distance_raw(field, x, y)))
        .collect();
    let two = field.from_int(2);

    // B: x_1, x_2 in E, then k-1 pairs; the first k-2 enter negatively.
    let mut bm = vec![0u64; graph.n];
    for x1 in e.iter() {
        for x2 in e.iter() {
            let a: Vec<Elem> = x1.iter().chain(x2).map(|&c| field.neg(field.mul(two, c))).collect();
            let base = field.neg(field.add(norm_raw(field, x1), norm_raw(field, x2)));
            for_each_tuple(pairs, k - 1, |idx| {
                let mut s = base;
                for (j, &i) in idx.iter().enumerate() {
                    s = if j + 2 < k {
                        field.sub(s, dists[i])
                    } else {
                        field.add(s, dists[i])
                    };
                }
                bm[graph.vertex_index(&a, s)] += 1;
            });
        }
    }
    // C: y_1, y_2 in F, then k-1 pairs entering positively.
    let mut cm = vec![0u64; graph.n];
    for y1 in f.iter() {
        for y2 in f.iter() {
            let a: Vec<Elem> = y1.iter().chain(y2).copied().collect();
            let base = field.neg(field.add(norm_raw(field, y1), norm_raw(field, y2)));
            for_each_tuple(pairs, k - 1, |idx| {
                let s = idx.iter().fold(base, |acc, &i| field.add(acc, dists[i]));
                cm[graph.vertex_index(&a, s)] += 1;
            });
        }
    }
    Ok((VertexMultiset::from_u64(graph, &bm)?, VertexMultiset::from_u64(graph, &cm)?))
}

fn for_each_tuple(base: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; len];
    loop {
        f(&idx);
        let mut pos = 0;
        loop {
            if pos == len {
                return;
            }
            idx[pos] += 1;
            if idx[pos] < base {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
