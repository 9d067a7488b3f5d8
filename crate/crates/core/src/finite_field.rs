//! Arithmetic in `F_q = F_p[t]/(f)` for odd primes `p`.
//!
//! Elements are stored compactly as [`Elem`], the base-`p` encoding of the
//! coefficient vector with `coeffs[0]` least significant. That encoding is
//! also the enumeration order, so `Elem::index()` doubles as the position
//! of an element inside a dense length-`q` table.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest field order accepted.
pub const MAX_ORDER: u64 = 1_000_000;

/// Compact element handle: the index of the element in enumeration order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem(pub(crate) u32);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Elem {
        Elem(i as u32)
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

struct Inner {
    p: u32,
    m: u32,
    q: u32,
    /// Monic modulus, `m + 1` coefficients, constant term first.
    modulus: Vec<u32>,
}

/// A validated finite field of odd characteristic.
///
/// Cloning is cheap; all clones compare equal and share one allocation.
#[derive(Clone)]
pub struct FieldSpec(Arc<Inner>);

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.m == other.0.m && self.0.modulus == other.0.modulus)
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.0.p)
            .field("m", &self.0.m)
            .field("q", &self.0.q)
            .field("modulus", &self.0.modulus)
            .finish()
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.m == 1 {
            write!(f, "{}", self.0.p)
        } else {
            write!(f, "{}^{}", self.0.p, self.0.m)
        }
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

// Dense polynomials over Z_p, constant term first.

fn poly_trim(a: &mut Vec<u64>) {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
}

/// Remainder of `a` modulo the monic polynomial `g`.
fn poly_rem_monic(a: &[u64], g: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    let dg = g.len() - 1;
    while r.len() > dg {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dg;
        if lead != 0 {
            for (j, &gj) in g.iter().enumerate() {
                r[shift + j] = (r[shift + j] + (p - lead) * gj) % p;
            }
        }
        r.pop();
    }
    if r.is_empty() {
        r.push(0);
    }
    poly_trim(&mut r);
    r
}

/// Exhaustive irreducibility test: `f` is irreducible iff no monic factor of
/// degree `1..=deg/2` divides it. Fine for `p^(deg/2) <= 1000`.
fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    if deg <= 1 {
        return true;
    }
    let p = p as u64;
    let f: Vec<u64> = f.iter().map(|&c| c as u64).collect();
    for t in 1..=deg / 2 {
        let count = p.pow(t as u32);
        for idx in 0..count {
            let mut g = Vec::with_capacity(t + 1);
            let mut x = idx;
            for _ in 0..t {
                g.push(x % p);
                x /= p;
            }
            g.push(1);
            let r = poly_rem_monic(&f, &g, p);
            if r.len() == 1 && r[0] == 0 {
                return false;
            }
        }
    }
    true
}

fn digits_of(mut idx: u64, p: u64, m: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        out.push((idx % p) as u32);
        idx /= p;
    }
    out
}

/// Digit buffer sized for the largest extension degree in range (3^12 < 10^6).
const MAX_DEGREE: usize = 20;

impl FieldSpec {
    /// Build `F_{p^m}`. With `modulus == None` and `m > 1` the first monic
    /// irreducible in enumeration order (constant term least significant)
    /// is chosen.
    pub fn new(p: u64, m: u32, modulus: Option<&[u32]>) -> Result<Self> {
        if p == 2 {
            return Err(Error::EvenCharacteristic);
        }
        if !is_prime(p) {
            return Err(Error::NonPrime(p));
        }
        if m == 0 {
            return Err(Error::InvalidModulus("extension degree must be at least 1".into()));
        }
        let q = p
            .checked_pow(m)
            .filter(|&q| q <= MAX_ORDER)
            .ok_or(Error::FieldTooLarge(p.saturating_pow(m)))?;
        let p32 = p as u32;
        let modulus = if m == 1 {
            vec![0, 1]
        } else {
            match modulus {
                Some(f) => {
                    if f.len() != m as usize + 1 {
                        return Err(Error::InvalidModulus(format!(
                            "expected {} coefficients, got {}",
                            m + 1,
                            f.len()
                        )));
                    }
                    if *f.last().unwrap() != 1 {
                        return Err(Error::InvalidModulus("modulus must be monic".into()));
                    }
                    if f.iter().any(|&c| c >= p32) {
                        return Err(Error::InvalidModulus(format!("coefficients must lie in [0, {p})")));
                    }
                    if !is_irreducible(f, p32) {
                        return Err(Error::ReducibleModulus(f.to_vec()));
                    }
                    f.to_vec()
                }
                None => {
                    let mut found = None;
                    for idx in 0..q {
                        let mut f = digits_of(idx, p, m as usize);
                        f.push(1);
                        if is_irreducible(&f, p32) {
                            found = Some(f);
                            break;
                        }
                    }
                    // A monic irreducible of every degree exists.
                    found.expect("irreducible polynomial exists")
                }
            }
        };
        Ok(FieldSpec(Arc::new(Inner { p: p32, m, q: q as u32, modulus })))
    }

    pub fn prime(p: u64) -> Result<Self> {
        Self::new(p, 1, None)
    }

    /// Parse `p^m` or a bare prime power `q`.
    pub fn parse(s: &str, modulus: Option<&[u32]>) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid field specification {s:?}"));
        if let Some((p, m)) = s.split_once('^') {
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            let m: u32 = m.trim().parse().map_err(|_| bad())?;
            return Self::new(p, m, modulus);
        }
        let q: u64 = s.parse().map_err(|_| bad())?;
        if q < 2 {
            return Err(Error::NonPrime(q));
        }
        let p = (2..=q).find(|d| q.is_multiple_of(*d)).unwrap();
        if p == 2 {
            return Err(Error::EvenCharacteristic);
        }
        let mut m = 0;
        let mut r = q;
        while r.is_multiple_of(p) {
            r /= p;
            m += 1;
        }
        if r != 1 {
            return Err(Error::NonPrime(q));
        }
        Self::new(p, m, modulus)
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.0.p
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.0.m
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.0.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    pub fn residue_class_mod4(&self) -> u32 {
        self.0.q % 4
    }

    /// True when the modulus is the one [`FieldSpec::new`] picks by default.
    pub fn has_default_modulus(&self) -> bool {
        self.0.m == 1
            || FieldSpec::new(self.0.p as u64, self.0.m, None)
                .map(|f| f.0.modulus == self.0.modulus)
                .unwrap_or(false)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        let p = self.0.p;
        if self.0.m == 1 {
            let s = a.0 + b.0;
            return Elem(if s >= p { s - p } else { s });
        }
        let (mut x, mut y) = (a.0, b.0);
        let (mut r, mut pw) = (0u32, 1u32);
        for _ in 0..self.0.m {
            let mut s = x % p + y % p;
            if s >= p {
                s -= p;
            }
            r += s * pw;
            pw = pw.wrapping_mul(p);
            x /= p;
            y /= p;
        }
        Elem(r)
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        let p = self.0.p;
        if self.0.m == 1 {
            return Elem(if a.0 == 0 { 0 } else { p - a.0 });
        }
        let mut x = a.0;
        let (mut r, mut pw) = (0u32, 1u32);
        for _ in 0..self.0.m {
            let c = x % p;
            if c != 0 {
                r += (p - c) * pw;
            }
            pw = pw.wrapping_mul(p);
            x /= p;
        }
        Elem(r)
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        let p = self.0.p as u64;
        if self.0.m == 1 {
            return Elem(((a.0 as u64 * b.0 as u64) % p) as u32);
        }
        let m = self.0.m as usize;
        let mut da = [0u64; MAX_DEGREE];
        let mut db = [0u64; MAX_DEGREE];
        let (mut x, mut y) = (a.0 as u64, b.0 as u64);
        for i in 0..m {
            da[i] = x % p;
            db[i] = y % p;
            x /= p;
            y /= p;
        }
        let mut prod = [0u64; 2 * MAX_DEGREE];
        for i in 0..m {
            if da[i] == 0 {
                continue;
            }
            for j in 0..m {
                prod[i + j] = (prod[i + j] + da[i] * db[j]) % p;
            }
        }
        let f = &self.0.modulus;
        for top in (m..2 * m - 1).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            prod[top] = 0;
            let shift = top - m;
            for j in 0..m {
                prod[shift + j] = (prod[shift + j] + (p - c) * f[j] as u64) % p;
            }
        }
        let mut r = 0u64;
        for i in (0..m).rev() {
            r = r * p + prod[i];
        }
        Elem(r as u32)
    }

    #[inline]
    pub fn square(&self, a: Elem) -> Elem {
        self.mul(a, a)
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = Elem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: Elem) -> Option<Elem> {
        if a.is_zero() {
            None
        } else {
            Some(self.pow(a, self.0.q as u64 - 2))
        }
    }

    /// Euler's criterion; zero counts as a square.
    pub fn is_square(&self, a: Elem) -> bool {
        a.is_zero() || self.pow(a, (self.0.q as u64 - 1) / 2) == Elem::ONE
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> Elem {
        Elem(n.rem_euclid(self.0.p as i64) as u32)
    }

    pub fn coeffs(&self, a: Elem) -> Vec<u32> {
        digits_of(a.0 as u64, self.0.p as u64, self.0.m as usize)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<Elem> {
        if coeffs.len() != self.0.m as usize {
            return Err(Error::Parse(format!(
                "expected {} coefficients, got {}",
                self.0.m,
                coeffs.len()
            )));
        }
        let p = self.0.p;
        let mut r = 0u32;
        for &c in coeffs.iter().rev() {
            if c >= p {
                return Err(Error::Parse(format!("coefficient {c} not reduced mod {p}")));
            }
            r = r * p + c;
        }
        Ok(Elem(r))
    }

    /// Absolute trace onto the prime field, `a + a^p + ... + a^(p^(m-1))`.
    pub fn trace(&self, a: Elem) -> u32 {
        if self.0.m == 1 {
            return a.0;
        }
        let mut acc = Elem::ZERO;
        let mut x = a;
        for _ in 0..self.0.m {
            acc = self.add(acc, x);
            x = self.pow(x, self.0.p as u64);
        }
        debug_assert!(acc.0 < self.0.p);
        acc.0
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.0.q).map(Elem)
    }

    pub fn element(&self, a: Elem) -> FieldElement {
        FieldElement { field: self.clone(), value: a }
    }

    /// `c0` for prime fields, `c0:c1:...:c(m-1)` otherwise.
    pub fn format_elem(&self, a: Elem) -> String {
        if self.0.m == 1 {
            a.0.to_string()
        } else {
            let c: Vec<String> = self.coeffs(a).iter().map(|c| c.to_string()).collect();
            c.join(":")
        }
    }

    pub fn parse_elem(&self, s: &str) -> Result<Elem> {
        let coeffs = s
            .trim()
            .split(':')
            .map(|c| c.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad coefficient {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        self.from_coeffs(&coeffs)
    }
}

/// An element bound to its field. Binary operations check that both sides
/// come from the same field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    field: FieldSpec,
    value: Elem,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.field.format_elem(self.value))
    }
}

impl FieldElement {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn value(&self) -> Elem {
        self.value
    }

    pub fn coeffs(&self) -> Vec<u32> {
        self.field.coeffs(self.value)
    }

    fn same(&self, other: &FieldElement) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    fn wrap(&self, v: Elem) -> FieldElement {
        FieldElement { field: self.field.clone(), value: v }
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same(other)?;
        Ok(self.wrap(self.field.add(self.value, other.value)))
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same(other)?;
        Ok(self.wrap(self.field.sub(self.value, other.value)))
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same(other)?;
        Ok(self.wrap(self.field.mul(self.value, other.value)))
    }

    pub fn neg(&self) -> FieldElement {
        self.wrap(self.field.neg(self.value))
    }

    pub fn square(&self) -> FieldElement {
        self.wrap(self.field.square(self.value))
    }

    pub fn is_square(&self) -> bool {
        self.field.is_square(self.value)
    }
}

/// All `q` elements in enumeration order; position 0 is zero.
pub fn enumerate_field(spec: &FieldSpec) -> Vec<FieldElement> {
    spec.elements().map(|a| spec.element(a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f9() -> FieldSpec {
        FieldSpec::new(3, 2, Some(&[1, 0, 1])).unwrap()
    }

    #[test]
    fn make_field_examples() {
        let f3 = FieldSpec::prime(3).unwrap();
        assert_eq!((f3.q(), f3.residue_class_mod4()), (3, 3));
        assert_eq!(f9().q(), 9);
        assert_eq!(FieldSpec::new(2, 3, None), Err(Error::EvenCharacteristic));
        assert_eq!(FieldSpec::new(9, 1, None), Err(Error::NonPrime(9)));
        // t^2 + 2 = (t+1)(t+2) over Z_3
        assert!(matches!(FieldSpec::new(3, 2, Some(&[2, 0, 1])), Err(Error::ReducibleModulus(_))));
        assert!(matches!(FieldSpec::new(3, 2, Some(&[1, 0, 2])), Err(Error::InvalidModulus(_))));
    }

    #[test]
    fn default_modulus_is_first_irreducible() {
        assert_eq!(FieldSpec::new(3, 2, None).unwrap().modulus(), &[1, 0, 1]);
        // Over Z_5 every t^2 + c with c a non-square is irreducible; 2 is the first.
        assert_eq!(FieldSpec::new(5, 2, None).unwrap().modulus(), &[2, 0, 1]);
        // t^3 + c has a root iff c is a cube; mod 3 every element is a cube,
        // so the first irreducible is t^3 + 2t + 1.
        assert_eq!(FieldSpec::new(3, 3, None).unwrap().modulus(), &[1, 2, 0, 1]);
    }

    #[test]
    fn parse_specs() {
        assert_eq!(FieldSpec::parse("3^2", None).unwrap().q(), 9);
        assert_eq!(FieldSpec::parse("7", None).unwrap().residue_class_mod4(), 3);
        assert_eq!(FieldSpec::parse("4", None), Err(Error::EvenCharacteristic));
        assert_eq!(FieldSpec::parse("25", None).unwrap().m(), 2);
        assert_eq!(FieldSpec::parse("15", None), Err(Error::NonPrime(15)));
        assert!(matches!(FieldSpec::parse("x", None), Err(Error::Parse(_))));
        assert!(matches!(FieldSpec::parse("3^20", None), Err(Error::FieldTooLarge(_))));
    }

    #[test]
    fn small_arithmetic() {
        let f3 = FieldSpec::prime(3).unwrap();
        assert_eq!(f3.add(Elem(2), Elem(2)), Elem(1));
        assert_eq!(f3.mul(Elem(2), Elem(2)), Elem(1));
        let f9 = f9();
        let t = f9.from_coeffs(&[0, 1]).unwrap();
        assert_eq!(f9.coeffs(f9.add(t, t)), vec![0, 2]);
        assert_eq!(f9.coeffs(f9.mul(t, t)), vec![2, 0]);
    }

    #[test]
    fn squares() {
        let f3 = FieldSpec::prime(3).unwrap();
        assert!(!f3.is_square(Elem(2)));
        assert!(f3.is_square(Elem::ZERO));
        let f7 = FieldSpec::prime(7).unwrap();
        assert!(f7.is_square(Elem(2)));
    }

    #[test]
    fn enumerate_order() {
        let f3 = FieldSpec::prime(3).unwrap();
        let e: Vec<_> = enumerate_field(&f3).iter().map(|x| x.coeffs()[0]).collect();
        assert_eq!(e, vec![0, 1, 2]);
        let all = enumerate_field(&f9());
        assert_eq!(all.len(), 9);
        assert_eq!(all[1].coeffs(), vec![1, 0]);
        assert_eq!(all[3].coeffs(), vec![0, 1]);
    }

    #[test]
    fn field_mismatch() {
        let a = FieldSpec::prime(3).unwrap().element(Elem(1));
        let b = FieldSpec::prime(5).unwrap().element(Elem(1));
        assert_eq!(a.add(&b).unwrap_err(), Error::FieldMismatch);
        assert_eq!(a.mul(&b).unwrap_err(), Error::FieldMismatch);
        let c = FieldSpec::prime(3).unwrap().element(Elem(2));
        assert_eq!(a.add(&c).unwrap().value(), Elem::ZERO);
    }

    fn check_axioms_exhaustive(f: &FieldSpec) {
        let q = f.q();
        let els: Vec<Elem> = f.elements().collect();
        for &a in &els {
            assert_eq!(f.add(a, f.neg(a)), Elem::ZERO);
            assert_eq!(f.mul(a, Elem::ONE), a);
            if !a.is_zero() {
                let inv = els.iter().copied().find(|&b| f.mul(a, b) == Elem::ONE);
                assert_eq!(inv, f.inv(a));
                assert!(inv.is_some());
            }
            assert!(f.is_square(f.square(a)));
            for &b in &els {
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                for &c in &els {
                    assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
        let nonzero_squares = els.iter().filter(|a| !a.is_zero() && f.is_square(**a)).count();
        assert_eq!(nonzero_squares as u32, (q - 1) / 2);
    }

    #[test]
    fn axioms_small_fields() {
        for spec in ["3", "5", "7", "3^2"] {
            check_axioms_exhaustive(&FieldSpec::parse(spec, None).unwrap());
        }
    }

    #[test]
    fn trace_is_additive_and_onto() {
        let f = FieldSpec::parse("3^3", None).unwrap();
        let mut hits = [0u32; 3];
        for a in f.elements() {
            hits[f.trace(a) as usize] += 1;
            for b in f.elements().step_by(5) {
                assert_eq!((f.trace(a) + f.trace(b)) % 3, f.trace(f.add(a, b)));
            }
        }
        assert_eq!(hits, [9, 9, 9]);
    }

    #[test]
    fn elem_string_round_trip() {
        let f = f9();
        for a in f.elements() {
            assert_eq!(f.parse_elem(&f.format_elem(a)).unwrap(), a);
        }
        assert_eq!(f.format_elem(Elem(5)), "2:1");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(10_000))]
            #[test]
            fn field_axioms_random(which in 0usize..3, a in 0u32..1000, b in 0u32..1000, c in 0u32..1000) {
                let (spec, q) = [("5^2", 25u32), ("3^3", 27), ("7^2", 49)][which];
                let f = FieldSpec::parse(spec, None).unwrap();
                let (a, b, c) = (Elem(a % q), Elem(b % q), Elem(c % q));
                prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                prop_assert_eq!(f.mul(a, b), f.mul(b, a));
                prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                if !a.is_zero() {
                    let inv = f.elements().find(|&x| f.mul(a, x) == Elem::ONE);
                    prop_assert!(inv.is_some());
                    prop_assert_eq!(inv, f.inv(a));
                }
            }
        }
    }
}
