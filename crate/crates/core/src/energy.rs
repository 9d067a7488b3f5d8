//! Distance multiplicities, k-fold sumsets of distance sets and k-fold
//! additive energies, computed exactly.
//!
//! The fast path convolves the multiplicity vector `nu` over the additive
//! group of `F_q` (which is `(Z_p)^m`, not `Z_q`), then takes `sum N(l)^2`.
//! [`energy_bruteforce`] enumerates pair tuples directly and never touches
//! `nu` or the convolution.

use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::finite_field::{Elem, FieldSpec};
use crate::pointset::{distance_raw, PointSet};

/// Largest tuple count [`energy_bruteforce`] will enumerate.
pub const ORACLE_LIMIT: u128 = 100_000_000;

/// Exact counts indexed by field elements in enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityVector {
    field: FieldSpec,
    counts: Vec<BigUint>,
}

impl MultiplicityVector {
    pub fn new(field: &FieldSpec, counts: Vec<BigUint>) -> Result<Self> {
        if counts.len() != field.q() as usize {
            return Err(Error::DimensionMismatch(counts.len(), field.q() as usize));
        }
        Ok(MultiplicityVector { field: field.clone(), counts })
    }

    pub fn from_u64(field: &FieldSpec, counts: &[u64]) -> Result<Self> {
        Self::new(field, counts.iter().map(|&c| BigUint::from(c)).collect())
    }

    /// All mass on zero: the convolution identity.
    pub fn delta(field: &FieldSpec) -> Self {
        let mut counts = vec![BigUint::zero(); field.q() as usize];
        counts[0] = BigUint::one();
        MultiplicityVector { field: field.clone(), counts }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    pub fn get(&self, a: Elem) -> &BigUint {
        &self.counts[a.index()]
    }

    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }

    pub fn sum_of_squares(&self) -> BigUint {
        self.counts.iter().map(|c| c * c).sum()
    }

    pub fn support(&self) -> Vec<Elem> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| Elem::from_index(i))
            .collect()
    }

    /// `{"field": "<spec>", "counts": ["<decimal>", ...]}`.
    pub fn to_json(&self) -> Value {
        let counts: Vec<String> = self.counts.iter().map(|c| c.to_string()).collect();
        json!({ "field": self.field.to_string(), "counts": counts })
    }

    /// Inverse of [`to_json`](Self::to_json). A non-default modulus must be
    /// supplied out of band.
    pub fn from_json(v: &Value, modulus: Option<&[u32]>) -> Result<Self> {
        let spec = v["field"].as_str().ok_or_else(|| Error::Parse("missing field".into()))?;
        let field = FieldSpec::parse(spec, modulus)?;
        let arr = v["counts"].as_array().ok_or_else(|| Error::Parse("missing counts".into()))?;
        let counts = arr
            .iter()
            .map(|c| {
                c.as_str()
                    .and_then(|s| s.parse::<BigUint>().ok())
                    .ok_or_else(|| Error::Parse(format!("count {c} is not a decimal string")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&field, counts)
    }
}

fn check_compatible(e: &PointSet, f: &PointSet) -> Result<()> {
    if e.field() != f.field() {
        return Err(Error::FieldMismatch);
    }
    if e.dim() != f.dim() {
        return Err(Error::DimensionMismatch(e.dim(), f.dim()));
    }
    Ok(())
}

/// `nu_{E,F}(l) = #{(x, y) in E x F : ||x - y|| = l}`.
pub fn distance_multiplicities(e: &PointSet, f: &PointSet) -> Result<MultiplicityVector> {
    distance_multiplicities_with(e, f, Execution::default())
}

pub fn distance_multiplicities_with(e: &PointSet, f: &PointSet, exec: Execution) -> Result<MultiplicityVector> {
    let counts = raw_multiplicities(e, f, exec)?;
    MultiplicityVector::from_u64(e.field(), &counts)
}

pub(crate) fn raw_multiplicities(e: &PointSet, f: &PointSet, exec: Execution) -> Result<Vec<u64>> {
    check_compatible(e, f)?;
    let field = e.field();
    let q = field.q() as usize;
    let rows = e.len();
    let chunk = rows.div_ceil(64).max(1);
    let partials = exec::map_range(exec, rows.div_ceil(chunk), |c| {
        let mut local = vec![0u64; q];
        for i in c * chunk..((c + 1) * chunk).min(rows) {
            let x = e.raw(i);
            for y in f.iter() {
                local[distance_raw(field, x, y).index()] += 1;
            }
        }
        local
    });
    let mut counts = vec![0u64; q];
    for part in partials {
        for (acc, v) in counts.iter_mut().zip(part) {
            *acc += v;
        }
    }
    Ok(counts)
}

/// The distance set `Delta(E, F)` in enumeration order.
pub fn distance_set(e: &PointSet, f: &PointSet) -> Result<Vec<Elem>> {
    Ok(distance_multiplicities(e, f)?.support())
}

/// `(u * v)(l) = sum_{a + b = l} u(a) v(b)` over the additive group of `F_q`.
pub fn additive_convolution(u: &MultiplicityVector, v: &MultiplicityVector) -> Result<MultiplicityVector> {
    additive_convolution_with(u, v, Execution::default())
}

pub fn additive_convolution_with(
    u: &MultiplicityVector,
    v: &MultiplicityVector,
    exec: Execution,
) -> Result<MultiplicityVector> {
    if u.field != v.field {
        return Err(Error::FieldMismatch);
    }
    let field = &u.field;
    let support: Vec<Elem> = u.support();
    let counts = exec::map_range(exec, field.q() as usize, |l| {
        let l = Elem::from_index(l);
        let mut acc = BigUint::zero();
        for &a in &support {
            let b = field.sub(l, a);
            let vb = &v.counts[b.index()];
            if !vb.is_zero() {
                acc += &u.counts[a.index()] * vb;
            }
        }
        acc
    });
    Ok(MultiplicityVector { field: field.clone(), counts })
}

/// `nu^{*k}`, k-1 convolutions.
pub fn convolution_power(nu: &MultiplicityVector, k: usize, exec: Execution) -> Result<MultiplicityVector> {
    if k < 1 {
        return Err(Error::InvalidK { k, min: 1 });
    }
    let mut acc = nu.clone();
    for _ in 1..k {
        acc = additive_convolution_with(&acc, nu, exec)?;
    }
    Ok(acc)
}

/// `E_+^k(E, F)`: 2k-tuples of pairs `(x_i, y_i) in E x F` whose first k
/// distances sum to the same value as the last k.
pub fn energy(e: &PointSet, f: &PointSet, k: usize) -> Result<BigUint> {
    energy_with(e, f, k, Execution::default())
}

pub fn energy_with(e: &PointSet, f: &PointSet, k: usize, exec: Execution) -> Result<BigUint> {
    if k < 1 {
        return Err(Error::InvalidK { k, min: 1 });
    }
    let nu = distance_multiplicities_with(e, f, exec)?;
    Ok(convolution_power(&nu, k, exec)?.sum_of_squares())
}

/// Enumerates every k-tuple of pairs, tallies the distance sums and squares
/// the tallies. Shares no code with the convolution path.
pub fn energy_bruteforce(e: &PointSet, f: &PointSet, k: usize) -> Result<BigUint> {
    check_compatible(e, f)?;
    if k < 1 {
        return Err(Error::InvalidK { k, min: 1 });
    }
    let pairs = (e.len() * f.len()) as u128;
    let tuples = pairs.checked_pow(k as u32).unwrap_or(u128::MAX);
    if tuples > ORACLE_LIMIT {
        return Err(Error::TooLargeForOracle(tuples));
    }
    let field = e.field();
    let dists: Vec<Elem> = e
        .iter()
        .flat_map(|x| f.iter().map(move |y| distance_raw(field, x, y)))
        .collect();
    let mut tally = vec![0u64; field.q() as usize];
    let mut idx = vec![0usize; k];
    loop {
        let s = idx.iter().fold(Elem::ZERO, |acc, &i| field.add(acc, dists[i]));
        tally[s.index()] += 1;
        // odometer
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok(tally.iter().map(|&c| BigUint::from(c) * BigUint::from(c)).sum());
            }
            idx[pos] += 1;
            if idx[pos] < dists.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// `k Delta(E)` by iterated sumset of the distance set, in enumeration order.
pub fn k_sumset(e: &PointSet, k: usize) -> Result<Vec<Elem>> {
    if k < 1 {
        return Err(Error::InvalidK { k, min: 1 });
    }
    let field = e.field();
    let q = field.q() as usize;
    let delta = distance_set(e, e)?;
    let mut current = vec![false; q];
    for &a in &delta {
        current[a.index()] = true;
    }
    for _ in 1..k {
        let mut next = vec![false; q];
        for (i, _) in current.iter().enumerate().filter(|(_, &on)| on) {
            for &a in &delta {
                next[field.add(Elem::from_index(i), a).index()] = true;
            }
        }
        current = next;
    }
    Ok(current
        .iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(i, _)| Elem::from_index(i))
        .collect())
}

/// `|E|^{4k} / E_+^k(E)`, a lower bound for `|k Delta(E)|`.
pub fn cauchy_schwarz_bound(e: &PointSet, k: usize) -> Result<BigRational> {
    let en = energy(e, e, k)?;
    Ok(cs_ratio(e.len(), k, &en))
}

pub(crate) fn cs_ratio(size: usize, k: usize, energy: &BigUint) -> BigRational {
    let num = BigUint::from(size).pow(4 * k as u32);
    BigRational::new(num.into(), energy.clone().into())
}

static CS_CHECKED: AtomicU64 = AtomicU64::new(0);
static CS_VIOLATED: AtomicU64 = AtomicU64::new(0);

/// Checks `|k Delta| * E_+^k >= |E|^{4k}` and records the outcome in the
/// process-wide audit counters.
pub fn cauchy_schwarz_holds(size: usize, k: usize, sumset_size: usize, energy: &BigUint) -> bool {
    let lhs = BigUint::from(sumset_size) * energy;
    let ok = lhs >= BigUint::from(size).pow(4 * k as u32);
    CS_CHECKED.fetch_add(1, Ordering::Relaxed);
    if !ok {
        CS_VIOLATED.fetch_add(1, Ordering::Relaxed);
    }
    ok
}

/// `(instances checked, violations)` since process start.
pub fn cauchy_schwarz_audit() -> (u64, u64) {
    (CS_CHECKED.load(Ordering::Relaxed), CS_VIOLATED.load(Ordering::Relaxed))
}

/// Everything the harness needs about one symmetric instance `(E, k)`.
#[derive(Clone, Debug)]
pub struct EnergyProfile {
    pub nu: MultiplicityVector,
    /// `nu^{*k}`.
    pub n_k: MultiplicityVector,
    pub energy: BigUint,
    /// `k Delta(E)` computed as an iterated sumset.
    pub sumset: Vec<Elem>,
    pub cs_bound: BigRational,
}

impl EnergyProfile {
    pub fn compute(e: &PointSet, k: usize, exec: Execution) -> Result<Self> {
        let nu = distance_multiplicities_with(e, e, exec)?;
        let n_k = convolution_power(&nu, k, exec)?;
        let energy = n_k.sum_of_squares();
        let sumset = k_sumset(e, k)?;
        debug_assert_eq!(sumset, n_k.support());
        cauchy_schwarz_holds(e.len(), k, sumset.len(), &energy);
        let cs_bound = cs_ratio(e.len(), k, &energy);
        Ok(EnergyProfile { nu, n_k, energy, sumset, cs_bound })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::{apply_isometry, gen_random, gen_random_stream};

    fn f(s: &str) -> FieldSpec {
        FieldSpec::parse(s, None).unwrap()
    }

    fn line3() -> PointSet {
        PointSet::full_grid(&f("3"), 1).unwrap()
    }

    fn singleton(field: &FieldSpec, d: usize) -> PointSet {
        PointSet::from_points(field, d, vec![vec![Elem(1); d]], "single").unwrap()
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    /// Literal definition: loop over all 2k-tuples of pairs.
    fn energy_literal(e: &PointSet, fs: &PointSet, k: usize) -> u64 {
        let field = e.field();
        let d: Vec<Elem> = e.iter().flat_map(|x| fs.iter().map(move |y| distance_raw(field, x, y))).collect();
        let mut count = 0u64;
        let n = d.len();
        let total = n.pow(2 * k as u32);
        for mut t in 0..total {
            let mut lhs = Elem::ZERO;
            let mut rhs = Elem::ZERO;
            for j in 0..2 * k {
                let v = d[t % n];
                t /= n;
                if j < k {
                    lhs = field.add(lhs, v);
                } else {
                    rhs = field.add(rhs, v);
                }
            }
            count += (lhs == rhs) as u64;
        }
        count
    }

    #[test]
    fn multiplicities_examples() {
        let s = singleton(&f("5"), 2);
        let nu = distance_multiplicities(&s, &s).unwrap();
        assert_eq!(nu.counts()[0], big(1));
        assert_eq!(nu.total(), big(1));
        let l = line3();
        let nu = distance_multiplicities(&l, &l).unwrap();
        assert_eq!(nu.counts(), &[big(3), big(6), big(0)]);
        assert_eq!(distance_set(&l, &l).unwrap(), vec![Elem(0), Elem(1)]);
        assert_eq!(distance_set(&s, &s).unwrap(), vec![Elem(0)]);
    }

    #[test]
    fn multiplicities_errors() {
        let a = line3();
        let b = singleton(&f("5"), 1);
        assert_eq!(distance_multiplicities(&a, &b).unwrap_err(), Error::FieldMismatch);
        let c = singleton(&f("3"), 2);
        assert_eq!(distance_multiplicities(&a, &c).unwrap_err(), Error::DimensionMismatch(1, 2));
    }

    #[test]
    fn convolution_examples() {
        let f3 = f("3");
        let u = MultiplicityVector::from_u64(&f3, &[3, 6, 0]).unwrap();
        let w = additive_convolution(&u, &u).unwrap();
        assert_eq!(w.counts(), &[big(9), big(36), big(36)]);
        assert_eq!(additive_convolution(&MultiplicityVector::delta(&f3), &u).unwrap(), u);
        let other = MultiplicityVector::delta(&f("5"));
        assert_eq!(additive_convolution(&u, &other).unwrap_err(), Error::FieldMismatch);
    }

    #[test]
    fn convolution_uses_vector_addition_in_extension() {
        // In F_9 the element 1 has additive order 3, not 9.
        let f9 = f("3^2");
        let mut c = vec![0u64; 9];
        c[1] = 1;
        let u = MultiplicityVector::from_u64(&f9, &c).unwrap();
        let cube = convolution_power(&u, 3, Execution::Sequential).unwrap();
        assert_eq!(cube, MultiplicityVector::delta(&f9));
    }

    #[test]
    fn energy_examples() {
        let l = line3();
        assert_eq!(energy(&l, &l, 1).unwrap(), big(45));
        assert_eq!(energy(&l, &l, 2).unwrap(), big(2673));
        assert_eq!(energy_literal(&l, &l, 1), 45);
        assert_eq!(energy_literal(&l, &l, 2), 2673);
        let s = singleton(&f("7"), 2);
        for k in 1..4 {
            assert_eq!(energy(&s, &s, k).unwrap(), big(1));
        }
        assert_eq!(energy_bruteforce(&s, &s, 3).unwrap(), big(1));
        assert_eq!(energy_bruteforce(&l, &l, 1).unwrap(), big(45));
        assert_eq!(energy(&l, &l, 0).unwrap_err(), Error::InvalidK { k: 0, min: 1 });
    }

    #[test]
    fn oracle_guard() {
        let e = gen_random(&f("11"), 2, 101, 1).unwrap();
        assert!(matches!(energy_bruteforce(&e, &e, 2), Err(Error::TooLargeForOracle(_))));
    }

    #[test]
    fn oracles_agree_with_literal_definition() {
        for (spec, d) in [("3", 1), ("5", 2), ("3^2", 1), ("7", 2)] {
            let field = f(spec);
            for (ne, nf) in [(1, 3), (2, 2), (3, 2)] {
                let e = gen_random(&field, d, ne, 11).unwrap();
                let g = gen_random_stream(&field, d, nf, 11, 1).unwrap();
                for k in 1..=2 {
                    let lit = big(energy_literal(&e, &g, k));
                    assert_eq!(energy(&e, &g, k).unwrap(), lit);
                    assert_eq!(energy_bruteforce(&e, &g, k).unwrap(), lit);
                }
            }
        }
    }

    #[test]
    fn sumset_examples() {
        let l = line3();
        assert_eq!(k_sumset(&l, 2).unwrap(), vec![Elem(0), Elem(1), Elem(2)]);
        let s = singleton(&f("11"), 2);
        for k in 1..5 {
            assert_eq!(k_sumset(&s, k).unwrap(), vec![Elem(0)]);
        }
        assert!(k_sumset(&s, 0).is_err());
    }

    #[test]
    fn cauchy_schwarz_examples() {
        let l = line3();
        assert_eq!(cauchy_schwarz_bound(&l, 1).unwrap(), BigRational::new(81.into(), 45.into()));
        assert_eq!(cauchy_schwarz_bound(&l, 2).unwrap(), BigRational::new(6561.into(), 2673.into()));
        let s = singleton(&f("3"), 1);
        assert!(cauchy_schwarz_bound(&s, 3).unwrap().is_one());
    }

    #[test]
    fn profile_properties() {
        for (spec, d, n) in [("7", 2, 12), ("3^2", 2, 20), ("11", 2, 40), ("5", 3, 30)] {
            let field = f(spec);
            let e = gen_random(&field, d, n, 3).unwrap();
            let q = field.q() as u64;
            let mut prev: Option<Vec<Elem>> = None;
            for k in 1..=3 {
                let p = EnergyProfile::compute(&e, k, Execution::Sequential).unwrap();
                assert_eq!(p.n_k.total(), big(n as u64).pow(2 * k as u32));
                assert_eq!(p.sumset, p.n_k.support());
                // Cauchy-Schwarz over the q classes
                assert!(&p.energy * big(q) >= big(n as u64).pow(4 * k as u32));
                assert!(BigUint::from(p.sumset.len()) * &p.energy >= big(n as u64).pow(4 * k as u32));
                if let Some(prev) = prev {
                    assert!(prev.iter().all(|a| p.sumset.contains(a)));
                }
                prev = Some(p.sumset.clone());
            }
        }
    }

    #[test]
    fn isometry_preserves_energy_and_sumset() {
        let field = f("7");
        let e = gen_random(&field, 2, 15, 8).unwrap();
        let img = apply_isometry(&e, &[1, 0], &[-1, 1], &[Elem(4), Elem(2)]).unwrap();
        for k in 1..=3 {
            assert_eq!(energy(&e, &e, k).unwrap(), energy(&img, &img, k).unwrap());
            assert_eq!(k_sumset(&e, k).unwrap(), k_sumset(&img, k).unwrap());
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let field = f("31");
        let e = gen_random(&field, 2, 200, 2).unwrap();
        let a = distance_multiplicities_with(&e, &e, Execution::Sequential).unwrap();
        let b = distance_multiplicities_with(&e, &e, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            energy_with(&e, &e, 3, Execution::Sequential).unwrap(),
            energy_with(&e, &e, 3, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn json_round_trip() {
        let l = line3();
        let nu = distance_multiplicities(&l, &l).unwrap();
        let v = nu.to_json();
        assert_eq!(v, json!({"field": "3", "counts": ["3", "6", "0"]}));
        assert_eq!(MultiplicityVector::from_json(&v, None).unwrap(), nu);
        let huge = MultiplicityVector::new(&f("3"), vec![BigUint::from(10u8).pow(40), big(0), big(1)]).unwrap();
        assert_eq!(MultiplicityVector::from_json(&huge.to_json(), None).unwrap(), huge);
        assert!(MultiplicityVector::from_json(&json!({"field": "3", "counts": [1, 2, 3]}), None).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn mv(field: &FieldSpec, raw: &[u64]) -> MultiplicityVector {
            MultiplicityVector::from_u64(field, &raw[..field.q() as usize]).unwrap()
        }

        proptest! {
            #[test]
            fn convolution_commutative_associative(
                spec in prop::sample::select(vec!["5", "7", "3^2"]),
                a in prop::collection::vec(0u64..1000, 9),
                b in prop::collection::vec(0u64..1000, 9),
                c in prop::collection::vec(0u64..1000, 9),
            ) {
                let field = f(spec);
                let (u, v, w) = (mv(&field, &a), mv(&field, &b), mv(&field, &c));
                let uv = additive_convolution(&u, &v).unwrap();
                prop_assert_eq!(&uv, &additive_convolution(&v, &u).unwrap());
                prop_assert_eq!(
                    additive_convolution(&uv, &w).unwrap(),
                    additive_convolution(&u, &additive_convolution(&v, &w).unwrap()).unwrap()
                );
                prop_assert_eq!(uv.total(), u.total() * v.total());
            }
        }
    }
}
