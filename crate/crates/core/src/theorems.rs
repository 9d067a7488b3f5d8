//! The verification harness.
//!
//! Every check produces a [`BoundReport`]. Claims with explicit constants get
//! a `HOLDS`/`VIOLATED` verdict; claims stated only up to an unknown constant
//! or in the limit are `REPORT_ONLY` and carry a ratio for trend analysis.
//!
//! Field conventions: `lhs` is the measured quantity, `main_term` the
//! expected value it is compared with (`0` for pure lower bounds), and
//! `deviation` is `lhs - main_term` (absolute value for two-sided claims).
//! `ratio` is `deviation / bound` for upper-bound claims and `lhs / bound`
//! for lower-bound claims.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::energy::{self, EnergyProfile};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::finite_field::{Elem, FieldSpec};
use crate::pointset::{self, PointSet};

/// Relative slack applied when an irrational bound is compared in floating point.
pub const IRRATIONAL_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Violated,
    ReportOnly,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "HOLDS",
            Verdict::Violated => "VIOLATED",
            Verdict::ReportOnly => "REPORT_ONLY",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub q: u32,
    pub d: usize,
    pub k: Option<usize>,
    pub size_e: usize,
    pub size_f: Option<usize>,
    pub generator: String,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub params: Params,
    pub hypothesis_flags: BTreeMap<String, bool>,
    pub lhs: String,
    pub main_term: String,
    pub deviation: String,
    pub bound: String,
    pub ratio: Option<f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, Value>,
}

impl BoundReport {
    fn new(name: &str, params: Params) -> Self {
        BoundReport {
            name: name.to_string(),
            params,
            hypothesis_flags: BTreeMap::new(),
            lhs: String::new(),
            main_term: "0".into(),
            deviation: String::new(),
            bound: String::new(),
            ratio: None,
            verdict: Verdict::ReportOnly,
            extra: BTreeMap::new(),
        }
    }

    fn flag(&mut self, name: &str, value: bool) -> bool {
        self.hypothesis_flags.insert(name.to_string(), value);
        value
    }

    /// One summary CSV row: `name,q,d,k,size_E,size_F,ratio,verdict`.
    pub fn csv_row(&self) -> String {
        let p = &self.params;
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let ratio = self.ratio.map(|r| r.to_string()).unwrap_or_default();
        format!("{},{},{},{},{},{},{},{}", self.name, p.q, p.d, opt(p.k), p.size_e, opt(p.size_f), ratio, self.verdict)
    }
}

pub const CSV_HEADER: &str = "name,q,d,k,size_E,size_F,ratio,verdict";

fn big(n: impl Into<BigUint>) -> BigUint {
    n.into()
}

fn pow(n: u64, e: u32) -> BigUint {
    BigUint::from(n).pow(e)
}

fn int(n: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn ratio_of(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(num.into(), den.into())
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// A point set with lazily computed energy profiles.
pub struct Instance {
    set: PointSet,
    seed: Option<u64>,
    exec: Execution,
    profiles: Mutex<BTreeMap<usize, Arc<EnergyProfile>>>,
}

impl Instance {
    pub fn new(set: PointSet) -> Self {
        Instance { set, seed: None, exec: Execution::default(), profiles: Mutex::new(BTreeMap::new()) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn set(&self) -> &PointSet {
        &self.set
    }

    pub fn profile(&self, k: usize) -> Result<Arc<EnergyProfile>> {
        if let Some(p) = self.profiles.lock().unwrap().get(&k) {
            return Ok(p.clone());
        }
        let p = Arc::new(EnergyProfile::compute(&self.set, k, self.exec)?);
        self.profiles.lock().unwrap().insert(k, p.clone());
        Ok(p)
    }

    fn params(&self, k: Option<usize>, size_f: Option<usize>) -> Params {
        Params {
            q: self.set.field().q(),
            d: self.set.dim(),
            k,
            size_e: self.set.len(),
            size_f,
            generator: self.set.label().to_string(),
            seed: self.seed,
        }
    }

    fn q(&self) -> u64 {
        self.set.field().q() as u64
    }

    fn size(&self) -> u64 {
        self.set.len() as u64
    }
}

impl From<PointSet> for Instance {
    fn from(set: PointSet) -> Self {
        Instance::new(set)
    }
}

/// `|Delta(E)| >= min{q, |E| / q^{(d-1)/2}}` for `|E| >> q^{d/2}`; report only.
pub fn check_iosevich_rudnev(inst: &Instance) -> Result<BoundReport> {
    let mut r = BoundReport::new("iosevich_rudnev", inst.params(None, None));
    let (q, n, d) = (inst.q(), inst.size(), inst.set.dim() as u32);
    // |E| >= q^{d/2}  <=>  |E|^2 >= q^d
    r.flag("size_ge_q_pow_half_d", pow(n, 2) >= pow(q, d));
    let delta = inst.profile(1)?.sumset.len() as u64;
    r.lhs = delta.to_string();
    r.deviation = r.lhs.clone();
    let ratio = if (d - 1) % 2 == 0 {
        let second = ratio_of(big(n), pow(q, (d - 1) / 2));
        let min = second.min(int(big(q)));
        r.bound = min.to_string();
        to_f64(&(int(big(delta)) / min))
    } else {
        let second = n as f64 / (q as f64).powf((d as f64 - 1.0) / 2.0);
        let min = second.min(q as f64);
        r.bound = min.to_string();
        delta as f64 / min
    };
    r.ratio = finite(ratio);
    Ok(r)
}

/// `E_+^1(E) <= |E|^4/q + (1 + sqrt 3) q |E|^{5/2}` in `F_q^2`, `q = 3 mod 4`,
/// `|E| >> q` (proxy `|E| >= q`).
pub fn check_koh_sun_2d(inst: &Instance) -> Result<BoundReport> {
    if inst.set.dim() != 2 {
        return Err(Error::WrongDimension { expected: "2", got: inst.set.dim() });
    }
    let mut r = BoundReport::new("koh_sun_2d", inst.params(Some(1), None));
    let (q, n) = (inst.q(), inst.size());
    let hyp = r.flag("q_3_mod_4", q % 4 == 3) & r.flag("size_ge_q", n >= q);
    let e1 = inst.profile(1)?.energy.clone();
    let main = ratio_of(pow(n, 4), big(q));
    let dev = int(e1.clone()) - &main;
    let bound = (1.0 + 3f64.sqrt()) * q as f64 * (n as f64).powf(2.5);
    let holds = !dev.is_positive() || to_f64(&dev) <= bound * (1.0 + IRRATIONAL_SLACK);
    r.lhs = e1.to_string();
    r.main_term = main.to_string();
    r.deviation = dev.to_string();
    r.bound = bound.to_string();
    r.ratio = finite(to_f64(&dev) / bound);
    r.extra.insert("within_bound".into(), json!(holds));
    r.verdict = match (hyp, holds) {
        (false, _) => Verdict::ReportOnly,
        (true, true) => Verdict::Holds,
        (true, false) => Verdict::Violated,
    };
    Ok(r)
}

/// `E_+^1(E) <= |E|^4/q + q^d |E|^2` for `d >= 3`, compared exactly.
pub fn check_koh_sun_highd(inst: &Instance) -> Result<BoundReport> {
    let d = inst.set.dim();
    if d < 3 {
        return Err(Error::WrongDimension { expected: ">= 3", got: d });
    }
    let mut r = BoundReport::new("koh_sun_highd", inst.params(Some(1), None));
    let (q, n) = (inst.q(), inst.size());
    let e1 = inst.profile(1)?.energy.clone();
    let bound = pow(q, d as u32) * pow(n, 2);
    let holds = big(q) * &e1 <= pow(n, 4) + big(q) * &bound;
    let main = ratio_of(pow(n, 4), big(q));
    let dev = int(e1.clone()) - &main;
    r.lhs = e1.to_string();
    r.main_term = main.to_string();
    r.ratio = finite(to_f64(&(dev.clone() / int(bound.clone()))));
    r.deviation = dev.to_string();
    r.bound = bound.to_string();
    r.verdict = if holds { Verdict::Holds } else { Verdict::Violated };
    Ok(r)
}

/// `(1 + slack)^2` as an exact rational.
fn sqrt2_slack_sq() -> BigRational {
    let s = ratio_of(big(1_000_000_001u64), big(1_000_000_000u64));
    &s * &s
}

/// Shared by the symmetric and asymmetric recursion checks:
/// `|E_k - T/q| <= sqrt 2 * q^d * W * E_{k-1}` with `W` the multiset weight.
struct Recursion {
    deviation: BigRational,
    big_o: BigUint,
    holds: bool,
}

fn recursion_core(q: u64, d: usize, total: BigUint, weight: BigUint, ek: &BigUint, prev: &BigUint) -> Recursion {
    let deviation = (int(ek.clone()) - ratio_of(total, big(q))).abs();
    let big_o = pow(q, d as u32) * weight * prev;
    // dev^2 <= 2 (1 + slack)^2 big_o^2
    let rhs_sq = int(big(2u8) * &big_o * &big_o) * sqrt2_slack_sq();
    let holds = &deviation * &deviation <= rhs_sq;
    Recursion { deviation, big_o, holds }
}

fn fill_recursion(r: &mut BoundReport, rec: &Recursion, ek: &BigUint, main: BigRational) {
    let bound = std::f64::consts::SQRT_2 * rec.big_o.to_f64().unwrap_or(f64::INFINITY);
    r.lhs = ek.to_string();
    r.main_term = main.to_string();
    r.deviation = rec.deviation.to_string();
    r.bound = bound.to_string();
    r.ratio = finite(to_f64(&rec.deviation) / bound);
    r.extra.insert("big_o_ratio".into(), json!(finite(to_f64(&(rec.deviation.clone() / int(rec.big_o.clone()))))));
    r.verdict = if rec.holds { Verdict::Holds } else { Verdict::Violated };
}

/// `|E_+^k(E) - |E|^{4k}/q| <= sqrt 2 * q^d |E|^2 E_+^{k-1}(E)`, the
/// recursion with the constant made explicit by the mixing lemma and
/// `gamma <= sqrt(2 q^{2d})` on `SP_{q,2d}`.
pub fn check_recursion(inst: &Instance, k: usize) -> Result<BoundReport> {
    if k < 2 {
        return Err(Error::InvalidK { k, min: 2 });
    }
    let mut r = BoundReport::new("recursion", inst.params(Some(k), None));
    let (q, n, d) = (inst.q(), inst.size(), inst.set.dim());
    let ek = inst.profile(k)?.energy.clone();
    let prev = inst.profile(k - 1)?.energy.clone();
    let total = pow(n, 4 * k as u32);
    let rec = recursion_core(q, d, total.clone(), pow(n, 2), &ek, &prev);
    fill_recursion(&mut r, &rec, &ek, ratio_of(total, big(q)));
    Ok(r)
}

fn energy_deviation(inst: &Instance, k: usize) -> Result<(BigUint, BigRational, BigRational)> {
    let ek = inst.profile(k)?.energy.clone();
    let main = ratio_of(pow(inst.size(), 4 * k as u32), big(inst.q()));
    let dev = (int(ek.clone()) - &main).abs();
    Ok((ek, main, dev))
}

/// `|E_+^k(E) - |E|^{4k}/q| << q^{2k-1} |E|^{2k+1/2}` in `F_q^2`; report only.
pub fn check_energy_2d(inst: &Instance, k: usize) -> Result<BoundReport> {
    if inst.set.dim() != 2 {
        return Err(Error::WrongDimension { expected: "2", got: inst.set.dim() });
    }
    if k < 2 {
        return Err(Error::InvalidK { k, min: 2 });
    }
    let mut r = BoundReport::new("energy_2d", inst.params(Some(k), None));
    let (q, n) = (inst.q(), inst.size());
    r.flag("q_3_mod_4", q % 4 == 3);
    r.flag("size_ge_q", n >= q);
    let (ek, main, dev) = energy_deviation(inst, k)?;
    let bound = (q as f64).powi(2 * k as i32 - 1) * (n as f64).powf(2.0 * k as f64 + 0.5);
    r.lhs = ek.to_string();
    r.main_term = main.to_string();
    r.deviation = dev.to_string();
    r.bound = bound.to_string();
    r.ratio = finite(to_f64(&dev) / bound);
    if k == 2 {
        let corollary = (q as f64).powi(3) * (n as f64).powf(4.5);
        r.extra.insert("corollary_k2_ratio".into(), json!(finite(to_f64(&dev) / corollary)));
    }
    Ok(r)
}

/// `|E_+^k(E) - |E|^{4k}/q| << q^{dk} |E|^{2k}` for `d >= 3`; report only.
pub fn check_energy_highd(inst: &Instance, k: usize) -> Result<BoundReport> {
    let d = inst.set.dim();
    if d < 3 {
        return Err(Error::WrongDimension { expected: ">= 3", got: d });
    }
    if k < 2 {
        return Err(Error::InvalidK { k, min: 2 });
    }
    let mut r = BoundReport::new("energy_highd", inst.params(Some(k), None));
    let (q, n) = (inst.q(), inst.size());
    let (ek, main, dev) = energy_deviation(inst, k)?;
    let bound = pow(q, (d * k) as u32) * pow(n, 2 * k as u32);
    r.lhs = ek.to_string();
    r.main_term = main.to_string();
    r.ratio = finite(to_f64(&(dev.clone() / int(bound.clone()))));
    r.deviation = dev.to_string();
    r.bound = bound.to_string();
    Ok(r)
}

/// Records `|k Delta(E)|`, the saturation fraction `|k Delta|/q` and the size
/// threshold flag, and asserts the Cauchy-Schwarz bound
/// `|k Delta(E)| >= |E|^{4k} / E_+^k(E)` exactly.
pub fn check_sumset(inst: &Instance, k: usize) -> Result<BoundReport> {
    if k < 1 {
        return Err(Error::InvalidK { k, min: 1 });
    }
    let mut r = BoundReport::new("sumset", inst.params(Some(k), None));
    let (q, n, d) = (inst.q(), inst.size(), inst.set.dim() as u32);
    let k32 = k as u32;
    match d {
        // |E| > q^{1 + 1/(4k-1)}  <=>  |E|^{4k-1} > q^{4k}
        2 => {
            r.flag("size_above_threshold", pow(n, 4 * k32 - 1) > pow(q, 4 * k32));
        }
        // |E| > q^{d/2 + 1/(2k)}  <=>  |E|^{2k} > q^{dk + 1}
        d if d >= 3 => {
            r.flag("size_above_threshold", pow(n, 2 * k32) > pow(q, d * k32 + 1));
        }
        _ => {}
    }
    if d == 2 {
        r.flag("q_3_mod_4", q % 4 == 3);
    }
    let prof = inst.profile(k)?;
    let size = prof.sumset.len();
    let holds = energy::cauchy_schwarz_holds(n as usize, k, size, &prof.energy);
    r.lhs = size.to_string();
    r.deviation = size.to_string();
    r.bound = prof.cs_bound.to_string();
    r.ratio = finite(size as f64 / to_f64(&prof.cs_bound));
    r.extra.insert("sumset_size".into(), json!(size));
    r.extra.insert("saturation_fraction".into(), json!(size as f64 / q as f64));
    r.extra.insert("energy".into(), json!(prof.energy.to_string()));
    r.verdict = if holds { Verdict::Holds } else { Verdict::Violated };
    Ok(r)
}

/// Asymmetric energies `E_+^k(E, F)`: report-only ratios for the two-set
/// bounds, plus the explicit-constant recursion
/// `|E_+^k(E,F) - |E|^{2k}|F|^{2k}/q| <= sqrt 2 * q^d |E||F| E_+^{k-1}(E,F)`.
pub fn check_asymmetric(e: &Instance, f: &Instance, k: usize) -> Result<BoundReport> {
    if k < 2 {
        return Err(Error::InvalidK { k, min: 2 });
    }
    let (es, fs) = (&e.set, &f.set);
    if es.field() != fs.field() {
        return Err(Error::FieldMismatch);
    }
    if es.dim() != fs.dim() {
        return Err(Error::DimensionMismatch(es.dim(), fs.dim()));
    }
    let mut r = BoundReport::new("asymmetric", e.params(Some(k), Some(fs.len())));
    let (q, d) = (e.q(), es.dim());
    let (ne, nf) = (es.len() as u64, fs.len() as u64);
    let (qf, ef, ff) = (q as f64, ne as f64, nf as f64);
    r.flag("size_e_le_size_f", ne <= nf);
    let two_set_2d = r.flag("two_set_2d_applicable", d == 2 && q % 4 == 3);
    let two_set_odd = r.flag("two_set_odd_applicable", d >= 3 && d % 2 == 1);

    let energy_at = |j: usize| energy::energy_with(es, fs, j, e.exec);
    let e1 = energy_at(1)?;
    let e2 = energy_at(2)?;
    let ek = if k == 2 { e2.clone() } else { energy_at(k)? };
    let prev = if k == 2 { e1.clone() } else { energy_at(k - 1)? };

    let pairs = ne * nf;
    let dev1 = to_f64(&(int(e1.clone()) - ratio_of(pow(pairs, 2), big(q))));
    let dev2 = to_f64(&(int(e2.clone()) - ratio_of(pow(pairs, 4), big(q))).abs());
    let mut ratios = BTreeMap::new();
    if two_set_2d {
        ratios.insert("energy1_2d", dev1 / (qf * ef.powf(1.5) * ff));
        let b = qf * ef.powi(3) * ff.powi(3) + qf.powi(3) * ef.powf(2.5) * ff.powi(2);
        ratios.insert("energy2_2d", dev2 / b);
    }
    if two_set_odd {
        ratios.insert("energy1_odd", dev1 / (qf.powf((d as f64 - 1.0) / 2.0) * ef.powi(2) * ff));
        let b = qf.powi(d as i32 - 1) * ef.powi(3) * ff.powi(3)
            + qf.powf((3.0 * d as f64 - 1.0) / 2.0) * ef.powi(3) * ff.powi(2);
        ratios.insert("energy2_odd", dev2 / b);
    }
    let shp = qf.powi(d as i32 - 1) * ef.powi(3) * ff.powi(3) + qf.powf(1.5 * d as f64) * ef.powi(3) * ff.powi(2);
    ratios.insert("shparlinski_energy2", dev2 / shp);
    for (name, v) in ratios {
        r.extra.insert(name.into(), json!(finite(v)));
    }
    r.extra.insert("energy1".into(), json!(e1.to_string()));
    r.extra.insert("energy2".into(), json!(e2.to_string()));

    let total = pow(pairs, 2 * k as u32);
    let rec = recursion_core(q, d, total.clone(), big(pairs), &ek, &prev);
    fill_recursion(&mut r, &rec, &ek, ratio_of(total, big(q)));
    Ok(r)
}

/// `|Delta(E,F) + Delta(E,F)| >= (1/3) min{q, |E||F|^2 / q^{3d/2}, |E||F| / q^{d-1}}`,
/// compared exactly.
pub fn check_shparlinski_sumset(e: &Instance, f: &Instance) -> Result<BoundReport> {
    let (es, fs) = (&e.set, &f.set);
    if es.field() != fs.field() {
        return Err(Error::FieldMismatch);
    }
    if es.dim() != fs.dim() {
        return Err(Error::DimensionMismatch(es.dim(), fs.dim()));
    }
    let mut r = BoundReport::new("shparlinski_sumset", e.params(None, Some(fs.len())));
    let field = es.field();
    let (q, d) = (e.q(), es.dim() as u32);
    let (ne, nf) = (es.len() as u64, fs.len() as u64);
    let delta = energy::distance_set(es, fs)?;
    let mut hit = vec![false; q as usize];
    for &a in &delta {
        for &b in &delta {
            hit[field.add(a, b).index()] = true;
        }
    }
    let lhs = hit.iter().filter(|&&h| h).count() as u64;
    let three_l = big(3 * lhs);
    let t2_num = big(ne) * pow(nf, 2);
    let t3 = ratio_of(big(ne * nf), pow(q, d - 1));
    // 3L >= t2  <=>  (3L)^2 q^{3d} >= (|E||F|^2)^2
    let ge_t2 = &three_l * &three_l * pow(q, 3 * d) >= &t2_num * &t2_num;
    let ge_t1 = three_l >= big(q);
    let ge_t3 = int(three_l.clone()) >= t3;
    let t2 = t2_num.to_f64().unwrap_or(f64::INFINITY) / (q as f64).powf(1.5 * d as f64);
    let min = (q as f64).min(t2).min(to_f64(&t3));
    r.lhs = lhs.to_string();
    r.deviation = lhs.to_string();
    r.bound = (min / 3.0).to_string();
    r.ratio = finite(lhs as f64 / (min / 3.0));
    r.verdict = if ge_t1 || ge_t2 || ge_t3 { Verdict::Holds } else { Verdict::Violated };
    Ok(r)
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    IosevichRudnev,
    #[serde(rename = "koh_sun_2d")]
    KohSun2d,
    KohSunHighd,
    Recursion,
    /// `energy_2d` or `energy_highd` depending on the dimension.
    Energy,
    Sumset,
    Asymmetric,
    ShparlinskiSumset,
}

impl CheckName {
    fn uses_k(self) -> bool {
        matches!(self, CheckName::Recursion | CheckName::Energy | CheckName::Sumset | CheckName::Asymmetric)
    }

    fn applies(self, d: usize, k: usize) -> bool {
        match self {
            CheckName::KohSun2d => d == 2,
            CheckName::KohSunHighd => d >= 3,
            CheckName::Energy => k >= 2 && d >= 2,
            CheckName::Recursion | CheckName::Asymmetric => k >= 2,
            _ => true,
        }
    }
}

/// Size of a generated set: a literal count or an expression in `q` such as
/// `"4*q^(8/7)"`, `"q^1.5"` or `"0.5*q"`, rounded up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeSpec {
    Count(usize),
    Expr(String),
}

impl SizeSpec {
    pub fn resolve(&self, q: u32) -> Result<usize> {
        match self {
            SizeSpec::Count(n) => Ok(*n),
            SizeSpec::Expr(s) => eval_size(s, q),
        }
    }
}

fn eval_size(expr: &str, q: u32) -> Result<usize> {
    let bad = || Error::Config(format!("cannot parse size expression {expr:?}"));
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let (coef, rest) = match s.split_once('*') {
        Some((c, r)) => (c.parse::<f64>().map_err(|_| bad())?, r),
        None => (1.0, s.as_str()),
    };
    let rest = rest.strip_prefix('q').ok_or_else(bad)?;
    let exp = if rest.is_empty() {
        1.0
    } else {
        let e = rest.strip_prefix('^').ok_or_else(bad)?;
        let e = e.strip_prefix('(').and_then(|e| e.strip_suffix(')')).unwrap_or(e);
        match e.split_once('/') {
            Some((a, b)) => a.parse::<f64>().map_err(|_| bad())? / b.parse::<f64>().map_err(|_| bad())?,
            None => e.parse::<f64>().map_err(|_| bad())?,
        }
    };
    let v = (coef * (q as f64).powf(exp)).ceil();
    if !(1.0..1e15).contains(&v) {
        return Err(bad());
    }
    Ok(v as usize)
}

/// Point-set generator for a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Uniform random sets; one instance per size and seed.
    Random {
        sizes: Vec<SizeSpec>,
        /// Size of the second set for two-set checks; defaults to the first size.
        #[serde(default)]
        partner_size: Option<SizeSpec>,
    },
    /// `{x : ||x|| = r}`, radius given as an element string.
    Sphere { radius: String },
    /// `A^d` with `A` given as element strings.
    Product { set: Vec<String> },
    /// The whole space.
    Grid,
}

/// Grid description for [`sweep`]. The grid is the Cartesian product
/// `fields x dims x instances x ks x checks`, visited in that order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub fields: Vec<String>,
    #[serde(default)]
    pub modulus: Option<Vec<u32>>,
    pub dims: Vec<usize>,
    pub ks: Vec<usize>,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub checks: Vec<CheckName>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for f in &self.fields {
            FieldSpec::parse(f, self.modulus.as_deref()).map_err(|e| Error::Config(format!("field {f:?}: {e}")))?;
        }
        if self.dims.contains(&0) {
            return Err(Error::Config("dimensions must be at least 1".into()));
        }
        if self.ks.contains(&0) {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if let GeneratorSpec::Random { sizes, .. } = &self.generator {
            if self.seeds.is_empty() && !sizes.is_empty() && !self.checks.is_empty() {
                return Err(Error::Config("random generator requires at least one seed".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Task {
    field: FieldSpec,
    d: usize,
    /// `(size, seed)` for random sets.
    sample: Option<(usize, u64, usize)>,
}

fn build_tasks(cfg: &SweepConfig) -> Result<Vec<Task>> {
    let mut tasks = Vec::new();
    for spec in &cfg.fields {
        let field = FieldSpec::parse(spec, cfg.modulus.as_deref()).map_err(|e| Error::Config(e.to_string()))?;
        for &d in &cfg.dims {
            match &cfg.generator {
                GeneratorSpec::Random { sizes, partner_size } => {
                    for size in sizes {
                        let n = size.resolve(field.q())?;
                        let partner = match partner_size {
                            Some(p) => p.resolve(field.q())?,
                            None => n,
                        };
                        for &seed in &cfg.seeds {
                            tasks.push(Task { field: field.clone(), d, sample: Some((n, seed, partner)) });
                        }
                    }
                }
                _ => tasks.push(Task { field: field.clone(), d, sample: None }),
            }
        }
    }
    Ok(tasks)
}

fn run_task(cfg: &SweepConfig, task: &Task, exec: Execution) -> Result<Vec<BoundReport>> {
    let (field, d) = (&task.field, task.d);
    let (e, f) = match (&cfg.generator, task.sample) {
        (GeneratorSpec::Random { .. }, Some((n, seed, partner))) => {
            let e = Instance::new(pointset::gen_random(field, d, n, seed)?).with_seed(seed);
            let f = Instance::new(pointset::gen_random_stream(field, d, partner, seed, 1)?).with_seed(seed);
            (e, f)
        }
        (GeneratorSpec::Sphere { radius }, _) => {
            let r = field.parse_elem(radius)?;
            let s = pointset::gen_sphere(field, d, r)?;
            (Instance::new(s.clone()), Instance::new(s))
        }
        (GeneratorSpec::Product { set }, _) => {
            let a = set.iter().map(|s| field.parse_elem(s)).collect::<Result<Vec<Elem>>>()?;
            let s = pointset::gen_product(field, &a, d)?;
            (Instance::new(s.clone()), Instance::new(s))
        }
        _ => {
            let s = PointSet::full_grid(field, d)?;
            (Instance::new(s.clone()), Instance::new(s))
        }
    };
    let (e, f) = (e.with_execution(exec), f.with_execution(exec));
    let mut out = Vec::new();
    for (ki, &k) in cfg.ks.iter().enumerate() {
        for &check in &cfg.checks {
            if !check.uses_k() && ki > 0 {
                continue;
            }
            if !check.applies(d, k) {
                continue;
            }
            let report = match check {
                CheckName::IosevichRudnev => check_iosevich_rudnev(&e)?,
                CheckName::KohSun2d => check_koh_sun_2d(&e)?,
                CheckName::KohSunHighd => check_koh_sun_highd(&e)?,
                CheckName::Recursion => check_recursion(&e, k)?,
                CheckName::Energy if d == 2 => check_energy_2d(&e, k)?,
                CheckName::Energy => check_energy_highd(&e, k)?,
                CheckName::Sumset => check_sumset(&e, k)?,
                CheckName::Asymmetric => check_asymmetric(&e, &f, k)?,
                CheckName::ShparlinskiSumset => check_shparlinski_sumset(&e, &f)?,
            };
            out.push(report);
        }
    }
    Ok(out)
}

/// Run every check of the grid. Reports come back in grid order whatever
/// `jobs` is.
pub fn sweep(cfg: &SweepConfig, jobs: usize) -> Result<Vec<BoundReport>> {
    cfg.validate()?;
    if cfg.checks.is_empty() || cfg.ks.is_empty() {
        return Ok(Vec::new());
    }
    let tasks = build_tasks(cfg)?;
    let results = exec::with_jobs(jobs.max(1), |exec| exec::map_slice(exec, &tasks, |t| run_task(cfg, t, exec)));
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// One JSON object per line.
pub fn to_json_lines(reports: &[BoundReport]) -> String {
    let mut s = String::new();
    for r in reports {
        s.push_str(&serde_json::to_string(r).expect("reports serialize"));
        s.push('\n');
    }
    s
}

pub fn to_summary_csv(reports: &[BoundReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn any_violated(reports: &[BoundReport]) -> bool {
    reports.iter().any(|r| r.verdict == Verdict::Violated)
}
