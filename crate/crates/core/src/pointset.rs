//! Points of `F_q^d`, the quadratic distance form, and point-set generators.

use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::finite_field::{Elem, FieldElement, FieldSpec};

/// Upper bound on `q^d` for generators that scan the whole ambient space.
pub const AMBIENT_SCAN_LIMIT: u64 = 10_000_000;

/// A single point together with its field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    field: FieldSpec,
    coords: Vec<Elem>,
}

impl Point {
    pub fn new(field: &FieldSpec, coords: Vec<Elem>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch(0, 1));
        }
        if coords.iter().any(|c| c.0 >= field.q()) {
            return Err(Error::FieldMismatch);
        }
        Ok(Point { field: field.clone(), coords })
    }

    pub fn origin(field: &FieldSpec, d: usize) -> Self {
        Point { field: field.clone(), coords: vec![Elem::ZERO; d] }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn coords(&self) -> &[Elem] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// `sum_i (x_i - y_i)^2` on raw coordinates. Callers guarantee equal length.
#[inline]
pub fn distance_raw(field: &FieldSpec, x: &[Elem], y: &[Elem]) -> Elem {
    debug_assert_eq!(x.len(), y.len());
    if field.m() == 1 {
        let p = field.p() as u64;
        let mut acc = 0u64;
        for (&a, &b) in x.iter().zip(y) {
            let diff = (a.0 as u64 + p - b.0 as u64) % p;
            acc += diff * diff;
        }
        return Elem((acc % p) as u32);
    }
    x.iter().zip(y).fold(Elem::ZERO, |acc, (&a, &b)| {
        let diff = field.sub(a, b);
        field.add(acc, field.square(diff))
    })
}

/// `||x|| = sum_i x_i^2`.
#[inline]
pub fn norm_raw(field: &FieldSpec, x: &[Elem]) -> Elem {
    x.iter().fold(Elem::ZERO, |acc, &a| field.add(acc, field.square(a)))
}

/// Checked distance between two points.
pub fn distance(x: &Point, y: &Point) -> Result<FieldElement> {
    if x.field != y.field {
        return Err(Error::FieldMismatch);
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    Ok(x.field.element(distance_raw(&x.field, &x.coords, &y.coords)))
}

/// A deduplicated, lexicographically sorted set of points in `F_q^d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    field: FieldSpec,
    dim: usize,
    /// Row-major, `dim` coordinates per point.
    coords: Vec<Elem>,
    label: String,
}

pub(crate) fn ambient_size(field: &FieldSpec, d: usize) -> Option<u64> {
    (field.q() as u64).checked_pow(d as u32)
}

fn decode_point(mut idx: u64, q: u64, d: usize, out: &mut Vec<Elem>) {
    for _ in 0..d {
        out.push(Elem((idx % q) as u32));
        idx /= q;
    }
}

impl PointSet {
    /// Build from arbitrary (possibly repeated) points.
    pub fn from_points<I>(field: &FieldSpec, dim: usize, points: I, label: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<Elem>>,
    {
        if dim == 0 {
            return Err(Error::DimensionMismatch(0, 1));
        }
        let mut pts: Vec<Vec<Elem>> = Vec::new();
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch(p.len(), dim));
            }
            if p.iter().any(|c| c.0 >= field.q()) {
                return Err(Error::FieldMismatch);
            }
            pts.push(p);
        }
        pts.sort_unstable();
        pts.dedup();
        if pts.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(PointSet { field: field.clone(), dim, coords: pts.concat(), label: label.into() })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    #[inline]
    pub fn raw(&self, i: usize) -> &[Elem] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point(&self, i: usize) -> Point {
        Point { field: self.field.clone(), coords: self.raw(i).to_vec() }
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Elem]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn contains(&self, x: &[Elem]) -> bool {
        let n = self.len();
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.raw(mid).cmp(x) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Whole space `F_q^d`.
    pub fn full_grid(field: &FieldSpec, d: usize) -> Result<Self> {
        let all: Vec<Elem> = field.elements().collect();
        gen_product(field, &all, d).map(|s| s.with_label("grid"))
    }
}

/// Uniform sample of `n` distinct points, deterministic in `seed`.
pub fn gen_random(field: &FieldSpec, d: usize, n: usize, seed: u64) -> Result<PointSet> {
    gen_random_stream(field, d, n, seed, 0)
}

/// [`gen_random`] drawing from an independent ChaCha8 stream of the same seed.
pub fn gen_random_stream(field: &FieldSpec, d: usize, n: usize, seed: u64, stream: u64) -> Result<PointSet> {
    let total = ambient_size(field, d)
        .filter(|&t| t <= usize::MAX as u64)
        .ok_or(Error::TooLargeAmbient(u64::MAX))?;
    if n == 0 || n as u64 > total {
        return Err(Error::TooLarge { requested: n as u64, available: total });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let q = field.q() as u64;
    let picks = index::sample(&mut rng, total as usize, n);
    let mut pts = Vec::with_capacity(n);
    for idx in picks.iter() {
        let mut v = Vec::with_capacity(d);
        decode_point(idx as u64, q, d, &mut v);
        pts.push(v);
    }
    let label = if stream == 0 {
        format!("random(seed={seed})")
    } else {
        format!("random(seed={seed},stream={stream})")
    };
    PointSet::from_points(field, d, pts, label)
}

/// The sphere `{x : ||x|| = r}` by exhaustive scan.
pub fn gen_sphere(field: &FieldSpec, d: usize, r: Elem) -> Result<PointSet> {
    let total = ambient_size(field, d).unwrap_or(u64::MAX);
    if total > AMBIENT_SCAN_LIMIT {
        return Err(Error::TooLargeAmbient(total));
    }
    let q = field.q() as u64;
    let mut v = Vec::with_capacity(d);
    let pts = (0..total).filter_map(|idx| {
        v.clear();
        decode_point(idx, q, d, &mut v);
        (norm_raw(field, &v) == r).then(|| v.clone())
    });
    let pts: Vec<_> = pts.collect();
    PointSet::from_points(field, d, pts, format!("sphere(r={})", field.format_elem(r)))
}

/// The Cartesian power `A^d`.
pub fn gen_product(field: &FieldSpec, a: &[Elem], d: usize) -> Result<PointSet> {
    let mut base = a.to_vec();
    base.sort_unstable();
    base.dedup();
    if base.is_empty() {
        return Err(Error::EmptySet);
    }
    let total = (base.len() as u64).checked_pow(d as u32).unwrap_or(u64::MAX);
    if total > AMBIENT_SCAN_LIMIT {
        return Err(Error::TooLargeAmbient(total));
    }
    let k = base.len() as u64;
    let pts = (0..total).map(|idx| {
        let mut v = Vec::with_capacity(d);
        let mut x = idx;
        for _ in 0..d {
            v.push(base[(x % k) as usize]);
            x /= k;
        }
        v
    });
    PointSet::from_points(field, d, pts, format!("product(|A|={})", base.len()))
}

/// Image of `e` under `x -> (signs[i] * x[perm[i]])_i + t`.
pub fn apply_isometry(e: &PointSet, perm: &[usize], signs: &[i8], t: &[Elem]) -> Result<PointSet> {
    let d = e.dim();
    for len in [perm.len(), signs.len(), t.len()] {
        if len != d {
            return Err(Error::DimensionMismatch(len, d));
        }
    }
    let mut seen = vec![false; d];
    for &i in perm {
        if i >= d || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Parse(format!("{perm:?} is not a permutation")));
        }
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::Parse("signs must be +1 or -1".into()));
    }
    let f = e.field();
    let pts = e.iter().map(|x| {
        (0..d)
            .map(|i| {
                let c = x[perm[i]];
                let c = if signs[i] < 0 { f.neg(c) } else { c };
                f.add(c, t[i])
            })
            .collect::<Vec<_>>()
    });
    let img = PointSet::from_points(f, d, pts, format!("{}+isometry", e.label()))?;
    debug_assert_eq!(img.len(), e.len());
    Ok(img)
}

/// Serialize as CSV: a `# q=.. p=.. m=.. d=..` header, then one point per row.
/// Non-default moduli are recorded on a second comment line.
pub fn to_csv(e: &PointSet) -> String {
    let f = e.field();
    let mut out = format!("# q={} p={} m={} d={}\n", f.q(), f.p(), f.m(), e.dim());
    if !f.has_default_modulus() {
        let c: Vec<String> = f.modulus().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "# modulus={}", c.join(","));
    }
    for x in e.iter() {
        let row: Vec<String> = x.iter().map(|&c| f.format_elem(c)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn from_csv(text: &str, label: impl Into<String>) -> Result<PointSet> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty point-set file".into()))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("missing header line".into()))?;
    let (mut q, mut p, mut m, mut d) = (None, None, None, None);
    for tok in header.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse(format!("bad header token {tok:?}")))?;
        let v: u64 = v.parse().map_err(|_| Error::Parse(format!("bad header value {tok:?}")))?;
        match k {
            "q" => q = Some(v),
            "p" => p = Some(v),
            "m" => m = Some(v),
            "d" => d = Some(v),
            _ => return Err(Error::Parse(format!("unknown header key {k:?}"))),
        }
    }
    let missing = || Error::Parse("header must give q, p, m and d".into());
    let (q, p, m, d) = (q.ok_or_else(missing)?, p.ok_or_else(missing)?, m.ok_or_else(missing)?, d.ok_or_else(missing)?);
    let mut modulus: Option<Vec<u32>> = None;
    let mut rows = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some(list) = c.trim().strip_prefix("modulus=") {
                let coeffs = list
                    .split(',')
                    .map(|x| x.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad modulus {list:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                modulus = Some(coeffs);
            }
            continue;
        }
        rows.push(line.to_string());
    }
    let field = FieldSpec::new(p, m as u32, modulus.as_deref())?;
    if field.q() as u64 != q {
        return Err(Error::Parse(format!("header q={q} disagrees with p^m={}", field.q())));
    }
    let d = d as usize;
    let pts = rows
        .iter()
        .map(|row| row.split(',').map(|c| field.parse_elem(c)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    PointSet::from_points(&field, d, pts, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::distance_multiplicities;

    fn f(s: &str) -> FieldSpec {
        FieldSpec::parse(s, None).unwrap()
    }

    fn pt(field: &FieldSpec, c: &[u32]) -> Point {
        Point::new(field, c.iter().map(|&x| Elem(x)).collect()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let f3 = f("3");
        let x = pt(&f3, &[0, 0]);
        assert_eq!(distance(&x, &x).unwrap().value(), Elem::ZERO);
        assert_eq!(distance(&x, &pt(&f3, &[1, 1])).unwrap().value(), Elem(2));
        let f5 = f("5");
        assert_eq!(distance(&pt(&f5, &[0, 0]), &pt(&f5, &[1, 2])).unwrap().value(), Elem::ZERO);
        assert_eq!(distance(&x, &pt(&f3, &[1])).unwrap_err(), Error::DimensionMismatch(2, 1));
        assert_eq!(distance(&x, &pt(&f5, &[1, 1])).unwrap_err(), Error::FieldMismatch);
    }

    #[test]
    fn distance_extension_field_matches_checked_ops() {
        let f9 = f("3^2");
        for a in f9.elements() {
            for b in f9.elements() {
                let diff = f9.element(a).sub(&f9.element(b)).unwrap();
                assert_eq!(distance_raw(&f9, &[a], &[b]), diff.square().value());
            }
        }
    }

    #[test]
    fn random_generator() {
        let f3 = f("3");
        let full = gen_random(&f3, 2, 9, 7).unwrap();
        assert_eq!(full.coords, PointSet::full_grid(&f3, 2).unwrap().coords);
        assert_eq!(gen_random(&f3, 2, 1, 7).unwrap().len(), 1);
        let a = gen_random(&f("11"), 2, 30, 99).unwrap();
        assert_eq!(a, gen_random(&f("11"), 2, 30, 99).unwrap());
        assert_eq!(a.len(), 30);
        assert_ne!(a.coords, gen_random(&f("11"), 2, 30, 100).unwrap().coords);
        assert_ne!(a.coords, gen_random_stream(&f("11"), 2, 30, 99, 1).unwrap().coords);
        assert!(matches!(gen_random(&f3, 2, 10, 0), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn sphere_examples() {
        let f3 = f("3");
        assert_eq!(gen_sphere(&f3, 2, Elem::ZERO).unwrap().len(), 1);
        let f5 = f("5");
        let s = gen_sphere(&f5, 2, Elem::ZERO).unwrap();
        assert_eq!(s.len(), 9);
        let o = Point::origin(&f5, 2);
        for i in 0..s.len() {
            assert_eq!(distance(&s.point(i), &o).unwrap().value(), Elem::ZERO);
        }
        assert!(matches!(gen_sphere(&f("101"), 4, Elem::ZERO), Err(Error::TooLargeAmbient(_))));
        // x^2 = 2 has no solution mod 3
        assert_eq!(gen_sphere(&f3, 1, Elem(2)), Err(Error::EmptySet));
    }

    #[test]
    fn sphere_sizes_partition_space() {
        for (spec, d) in [("3", 2), ("5", 2), ("7", 3), ("3^2", 2)] {
            let field = f(spec);
            let total: usize = field
                .elements()
                .map(|r| gen_sphere(&field, d, r).map(|s| s.len()).unwrap_or(0))
                .sum();
            assert_eq!(total as u64, ambient_size(&field, d).unwrap());
        }
    }

    #[test]
    fn product_examples() {
        let f5 = f("5");
        assert_eq!(gen_product(&f5, &[Elem(0)], 3).unwrap().len(), 1);
        assert_eq!(gen_product(&f5, &[Elem(1), Elem(3)], 2).unwrap().len(), 4);
        assert_eq!(gen_product(&f5, &f5.elements().collect::<Vec<_>>(), 2).unwrap().len(), 25);
        assert_eq!(gen_product(&f5, &[], 2), Err(Error::EmptySet));
    }

    #[test]
    fn isometry_invariance() {
        let f7 = f("7");
        let e = gen_random(&f7, 3, 40, 5).unwrap();
        let same = apply_isometry(&e, &[0, 1, 2], &[1, 1, 1], &[Elem(0); 3]).unwrap();
        assert_eq!(same.coords, e.coords);
        let img = apply_isometry(&e, &[2, 0, 1], &[-1, 1, -1], &[Elem(3), Elem(6), Elem(1)]).unwrap();
        assert_eq!(img.len(), e.len());
        assert_ne!(img.coords, e.coords);
        assert_eq!(distance_multiplicities(&img, &img).unwrap(), distance_multiplicities(&e, &e).unwrap());
        assert!(apply_isometry(&e, &[0, 0, 1], &[1, 1, 1], &[Elem(0); 3]).is_err());
        assert!(matches!(apply_isometry(&e, &[0, 1], &[1, 1], &[Elem(0); 2]), Err(Error::DimensionMismatch(..))));
    }

    #[test]
    fn dedup_and_sort() {
        let f3 = f("3");
        let e = PointSet::from_points(&f3, 2, vec![vec![Elem(2), Elem(0)], vec![Elem(0), Elem(1)], vec![Elem(2), Elem(0)]], "t").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.raw(0), &[Elem(0), Elem(1)]);
        assert!(e.contains(&[Elem(2), Elem(0)]));
        assert!(!e.contains(&[Elem(1), Elem(0)]));
    }

    #[test]
    fn csv_format() {
        let f9 = f("3^2");
        let e = gen_random(&f9, 2, 5, 3).unwrap();
        let text = to_csv(&e);
        assert!(text.starts_with("# q=9 p=3 m=2 d=2\n"));
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().nth(1).unwrap().contains(':'));
        let back = from_csv(&text, e.label()).unwrap();
        assert_eq!(back, e);

        let custom = FieldSpec::new(3, 2, Some(&[2, 1, 1])).unwrap();
        let e = gen_random(&custom, 1, 4, 1).unwrap();
        let back = from_csv(&to_csv(&e), e.label()).unwrap();
        assert_eq!(back, e);
        assert!(from_csv("0,1\n", "x").is_err());
        assert!(from_csv("# q=9 p=3 m=1 d=1\n0\n", "x").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn distance_symmetric_and_translation_invariant(
                spec in prop::sample::select(vec!["5", "7", "3^2", "5^2"]),
                raw in prop::collection::vec(0u32..1000, 9),
            ) {
                let field = f(spec);
                let q = field.q();
                let x: Vec<Elem> = raw[0..3].iter().map(|&c| Elem(c % q)).collect();
                let y: Vec<Elem> = raw[3..6].iter().map(|&c| Elem(c % q)).collect();
                let t: Vec<Elem> = raw[6..9].iter().map(|&c| Elem(c % q)).collect();
                let shift = |v: &[Elem]| v.iter().zip(&t).map(|(&a, &b)| field.add(a, b)).collect::<Vec<_>>();
                let d = distance_raw(&field, &x, &y);
                prop_assert_eq!(d, distance_raw(&field, &y, &x));
                prop_assert_eq!(d, distance_raw(&field, &shift(&x), &shift(&y)));
            }

            #[test]
            fn csv_round_trip(spec in prop::sample::select(vec!["3", "7", "3^2", "5^2", "3^3"]), d in 1usize..4, n in 1usize..20, seed: u64) {
                let field = f(spec);
                let n = n.min(ambient_size(&field, d).unwrap() as usize);
                let e = gen_random(&field, d, n, seed).unwrap();
                prop_assert_eq!(from_csv(&to_csv(&e), e.label()).unwrap(), e);
            }
        }
    }
}
