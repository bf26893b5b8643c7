//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients of a scalar quantity at a point, in
//! up to [`MAX_DIM`] variables and through total degree [`MAX_ORDER`]. Each jet
//! also records the order through which its coefficients are valid: a partial
//! derivative lowers it by one, and binary operations keep the smaller of the
//! two. Reading a derivative above the valid order is a pipeline error.
//!
//! Coefficients are stored Taylor-normalized (`f_α / α!`) once per multi-index,
//! so mixed partials are symmetric by construction and products are plain
//! truncated convolutions.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

/// Highest total degree carried by a jet.
pub const MAX_ORDER: usize = 4;
/// Highest number of independent variables.
pub const MAX_DIM: usize = 4;
const CAPACITY: usize = 70; // binomial(MAX_DIM + MAX_ORDER, MAX_ORDER)

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("{op} is singular at value {value}")]
    Singular { op: &'static str, value: f64 },
    #[error("derivative needs jet order {needed}, only {available} available")]
    InsufficientOrder { needed: usize, available: usize },
    #[error("non-finite input coordinate {0}")]
    NonFinite(f64),
    #[error("jet dimension mismatch ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("jet dimension {0} exceeds the supported maximum {MAX_DIM}")]
    TooManyVariables(usize),
    #[error("matrix is singular at order 0 (pivot {pivot:e})")]
    SingularMatrix { pivot: f64 },
}

type Exponents = [u8; MAX_DIM];

struct Tables {
    exps: Vec<Exponents>,
    /// `count[o]` = number of monomials with degree <= `o`.
    count: [usize; MAX_ORDER + 1],
    /// `(i, j, k)` with `exps[i] + exps[j] == exps[k]`, sorted by degree of `k`.
    pairs: Vec<(u8, u8, u8)>,
    pair_end: [usize; MAX_ORDER + 1],
    /// `deriv[v][k] = (source, factor)` for monomials of degree < MAX_ORDER.
    deriv: Vec<Vec<(u8, f64)>>,
    /// `parent[k] = (index of exps[k] - e_v, v)` for degree >= 1.
    parent: Vec<(u8, u8)>,
}

fn push_exponents(dim: usize, var: usize, left: u8, cur: &mut Exponents, out: &mut Vec<Exponents>) {
    if var + 1 == dim {
        cur[var] = left;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for take in (0..=left).rev() {
        cur[var] = take;
        push_exponents(dim, var + 1, left - take, cur, out);
    }
    cur[var] = 0;
}

impl Tables {
    fn build(dim: usize) -> Self {
        let mut exps = Vec::with_capacity(CAPACITY);
        let mut count = [0; MAX_ORDER + 1];
        for (deg, slot) in count.iter_mut().enumerate() {
            if dim == 0 {
                if deg == 0 {
                    exps.push([0; MAX_DIM]);
                }
            } else {
                push_exponents(dim, 0, deg as u8, &mut [0; MAX_DIM], &mut exps);
            }
            *slot = exps.len();
        }
        let index_of = |e: &Exponents| exps.iter().position(|x| x == e);

        let mut pairs = Vec::new();
        let mut pair_end = [0; MAX_ORDER + 1];
        for (deg, end) in pair_end.iter_mut().enumerate() {
            let lo = if deg == 0 { 0 } else { count[deg - 1] };
            for k in lo..count[deg] {
                for i in 0..=k {
                    let mut rest = exps[k];
                    let ok = (0..MAX_DIM).all(|v| {
                        if exps[i][v] > rest[v] {
                            false
                        } else {
                            rest[v] -= exps[i][v];
                            true
                        }
                    });
                    if ok {
                        let j = index_of(&rest).expect("complement monomial");
                        pairs.push((i as u8, j as u8, k as u8));
                    }
                }
            }
            *end = pairs.len();
        }

        let mut deriv = Vec::with_capacity(dim);
        for v in 0..dim {
            let mut row = Vec::with_capacity(count[MAX_ORDER - 1]);
            for e in &exps[..count[MAX_ORDER - 1]] {
                let mut up = *e;
                up[v] += 1;
                let src = index_of(&up).expect("raised monomial");
                row.push((src as u8, f64::from(up[v])));
            }
            deriv.push(row);
        }

        let mut parent = vec![(0u8, 0u8); exps.len()];
        for (k, e) in exps.iter().enumerate().skip(1) {
            let v = e.iter().position(|&x| x > 0).expect("nonzero degree");
            let mut down = *e;
            down[v] -= 1;
            parent[k] = (index_of(&down).expect("lowered monomial") as u8, v as u8);
        }

        Tables { exps, count, pairs, pair_end, deriv, parent }
    }

    fn get(dim: usize) -> &'static Tables {
        static TABLES: [OnceLock<Tables>; MAX_DIM + 1] =
            [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
        TABLES[dim].get_or_init(|| Tables::build(dim))
    }
}

/// Truncated Taylor expansion of a scalar quantity at a point.
#[derive(Clone, Copy)]
pub struct Jet {
    dim: u8,
    order: u8,
    c: [f64; CAPACITY],
}

impl Jet {
    /// A constant, exact through [`MAX_ORDER`].
    pub fn constant(dim: usize, value: f64) -> Self {
        assert!(dim <= MAX_DIM, "jet dimension {dim} exceeds {MAX_DIM}");
        let mut c = [0.0; CAPACITY];
        c[0] = value;
        Jet { dim: dim as u8, order: MAX_ORDER as u8, c }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0)
    }

    /// The coordinate function `x_var` expanded at `value`.
    pub fn variable(dim: usize, var: usize, value: f64) -> Self {
        assert!(var < dim, "variable {var} out of range for dimension {dim}");
        let mut j = Self::constant(dim, value);
        // degree-1 monomials follow the constant term in variable order
        j.c[1 + var] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Total degree through which the coefficients are valid.
    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    fn tables(&self) -> &'static Tables {
        Tables::get(self.dim as usize)
    }

    fn len(&self) -> usize {
        self.tables().count[self.order as usize]
    }

    fn index_of(&self, exps: &[u8]) -> Option<usize> {
        if exps.len() != self.dim() {
            return None;
        }
        let mut key = [0u8; MAX_DIM];
        key[..exps.len()].copy_from_slice(exps);
        self.tables().exps.iter().position(|e| *e == key)
    }

    /// Taylor coefficient `f_α / α!` for the exponent vector `α`.
    pub fn taylor_coeff(&self, exps: &[u8]) -> Result<f64, JetError> {
        let deg: usize = exps.iter().map(|&x| x as usize).sum();
        if deg > self.order() {
            return Err(JetError::InsufficientOrder { needed: deg, available: self.order() });
        }
        let k = self.index_of(exps).ok_or(JetError::DimMismatch(exps.len(), self.dim()))?;
        Ok(self.c[k])
    }

    /// Partial derivative `∂^α f` for the exponent vector `α`.
    pub fn partial(&self, exps: &[u8]) -> Result<f64, JetError> {
        let fact: f64 = exps.iter().map(|&e| (1..=e as u32).product::<u32>() as f64).product();
        Ok(self.taylor_coeff(exps)? * fact)
    }

    /// `(exponents, taylor coefficient)` for every valid monomial.
    pub fn terms(&self) -> impl Iterator<Item = (&'static [u8], f64)> + '_ {
        let t = self.tables();
        let dim = self.dim();
        t.exps[..self.len()].iter().zip(self.c.iter()).map(move |(e, &c)| (&e[..dim], c))
    }

    /// Drop coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order() {
            return *self;
        }
        let mut out = *self;
        let t = self.tables();
        for c in &mut out.c[t.count[order]..t.count[self.order()]] {
            *c = 0.0;
        }
        out.order = order as u8;
        out
    }

    /// Partial derivative with respect to one variable; the order drops by one.
    pub fn d(&self, var: usize) -> Result<Self, JetError> {
        if self.order == 0 {
            return Err(JetError::InsufficientOrder { needed: 1, available: 0 });
        }
        if var >= self.dim() {
            return Err(JetError::DimMismatch(var, self.dim()));
        }
        let t = self.tables();
        let order = self.order() - 1;
        let mut c = [0.0; CAPACITY];
        for (k, &(src, factor)) in t.deriv[var][..t.count[order]].iter().enumerate() {
            c[k] = factor * self.c[src as usize];
        }
        Ok(Jet { dim: self.dim, order: order as u8, c })
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        let n = self.len();
        for c in &mut out.c[..n] {
            *c *= s;
        }
        out
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = *self;
        out.c[0] += s;
        out
    }

    fn check_dim(&self, other: &Jet) {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
    }

    fn mul_jet(&self, other: &Jet) -> Self {
        self.check_dim(other);
        let order = self.order.min(other.order);
        let t = self.tables();
        let mut c = [0.0; CAPACITY];
        for &(i, j, k) in &t.pairs[..t.pair_end[order as usize]] {
            c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        Jet { dim: self.dim, order, c }
    }

    /// `Σ_n series[n] / n! · (self − value)^n`, i.e. `f(self)` given the
    /// derivatives of a univariate `f` at `self.value()`.
    fn apply_series(&self, series: &[f64; MAX_ORDER + 1]) -> Self {
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut out = Jet::constant(self.dim(), series[0]);
        out.order = self.order;
        let mut power = delta;
        let mut fact = 1.0;
        for (n, &s) in series.iter().enumerate().skip(1) {
            if n > self.order() {
                break;
            }
            fact *= n as f64;
            out += power.scale(s / fact);
            if n < self.order() {
                power = power.mul_jet(&delta);
            }
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.apply_series(&[e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        let u = self.value();
        if !(u > 0.0) {
            return Err(JetError::Singular { op: "log", value: u });
        }
        let r = 1.0 / u;
        Ok(self.apply_series(&[u.ln(), r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.apply_series(&[s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.apply_series(&[c, -s, -c, s, c])
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        let u = self.value();
        if !(u > 0.0) {
            return Err(JetError::Singular { op: "sqrt", value: u });
        }
        self.powf(0.5).map_err(|_| JetError::Singular { op: "sqrt", value: u })
    }

    /// Real power; the base must be positive.
    pub fn powf(&self, p: f64) -> Result<Self, JetError> {
        let u = self.value();
        if !(u > 0.0) {
            return Err(JetError::Singular { op: "pow", value: u });
        }
        let mut series = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (n, s) in series.iter_mut().enumerate() {
            *s = coef * u.powf(p - n as f64);
            coef *= p - n as f64;
        }
        Ok(self.apply_series(&series))
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        let u = self.value();
        if u == 0.0 || !u.is_finite() {
            return Err(JetError::Singular { op: "division", value: u });
        }
        let r = 1.0 / u;
        Ok(self.apply_series(&[r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4), 24.0 * r.powi(5)]))
    }

    pub fn div(&self, other: &Jet) -> Result<Self, JetError> {
        Ok(*self * other.recip()?)
    }

    /// Integer power by repeated squaring; negative exponents go through
    /// [`Jet::recip`].
    pub fn powi(&self, n: i32) -> Result<Self, JetError> {
        let base = if n < 0 { self.recip()? } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = Jet::constant(self.dim(), 1.0);
        acc.order = self.order;
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * sq;
            }
            e >>= 1;
            if e > 0 {
                sq = sq * sq;
            }
        }
        Ok(acc)
    }

    /// Substitute `inner` into this jet.
    ///
    /// `self` is a jet in `n` variables expanded at `y0`; `inner` holds `n`
    /// jets in some other set of variables whose values are `y0`. The result is
    /// the jet of the composite, valid through the smaller of the orders
    /// involved. The values of `inner` are taken as the expansion point.
    pub fn compose(&self, inner: &[Jet]) -> Result<Self, JetError> {
        if inner.len() != self.dim() {
            return Err(JetError::DimMismatch(inner.len(), self.dim()));
        }
        let outer_dim = inner.first().map(Jet::dim).unwrap_or(0);
        let order = inner.iter().fold(self.order(), |o, j| o.min(j.order()));
        if inner.is_empty() {
            let mut out = Jet::constant(0, self.value());
            out.order = order as u8;
            return Ok(out);
        }
        let monos = monomials(inner, order)?;
        let mut out = Jet::zero(outer_dim);
        out.order = order as u8;
        for (m, &coef) in monos.iter().zip(self.c.iter()) {
            if coef != 0.0 {
                out += m.scale(coef);
            }
        }
        Ok(out)
    }
}

/// Reusable substitution of a fixed set of inner jets, for composing many
/// outer jets expanded at the same point.
#[derive(Clone, Debug)]
pub struct Substitution {
    monos: Vec<Jet>,
    inner_dim: usize,
    order: usize,
}

impl Substitution {
    pub fn new(inner: &[Jet]) -> Result<Self, JetError> {
        if inner.is_empty() {
            return Err(JetError::DimMismatch(0, 1));
        }
        let order = min_order(inner);
        Ok(Substitution { monos: monomials(inner, order)?, inner_dim: inner.len(), order })
    }

    /// Number of variables the outer jets must have.
    pub fn inner_dim(&self) -> usize {
        self.inner_dim
    }

    pub fn apply(&self, outer: &Jet) -> Result<Jet, JetError> {
        if outer.dim() != self.inner_dim {
            return Err(JetError::DimMismatch(outer.dim(), self.inner_dim));
        }
        let order = outer.order().min(self.order);
        let count = Tables::get(self.inner_dim).count[order];
        let mut out = Jet::zero(self.monos[0].dim());
        for (m, &coef) in self.monos[..count].iter().zip(outer.c.iter()) {
            if coef != 0.0 {
                out += m.scale(coef);
            }
        }
        Ok(out.truncate(order))
    }

    pub fn apply_all(&self, outer: &[Jet]) -> Result<Vec<Jet>, JetError> {
        outer.iter().map(|j| self.apply(j)).collect()
    }

    pub fn apply_matrix(&self, m: &JetMatrix) -> Result<JetMatrix, JetError> {
        let data = self.apply_all(&m.data)?;
        Ok(JetMatrix { rows: m.rows, cols: m.cols, data })
    }
}

/// Products `Π (inner_v − value_v)^{α_v}` for every monomial `α` of degree
/// at most `order` in `inner.len()` variables, in storage order.
fn monomials(inner: &[Jet], order: usize) -> Result<Vec<Jet>, JetError> {
    let n = inner.len();
    if n > MAX_DIM {
        return Err(JetError::TooManyVariables(n));
    }
    let dim = inner[0].dim();
    for j in inner {
        if j.dim() != dim {
            return Err(JetError::DimMismatch(j.dim(), dim));
        }
    }
    let deltas: Vec<Jet> = inner
        .iter()
        .map(|j| {
            let mut d = j.truncate(order);
            d.c[0] = 0.0;
            d
        })
        .collect();
    let t = Tables::get(n);
    let count = t.count[order];
    let mut one = Jet::constant(dim, 1.0);
    one.order = order as u8;
    let mut out = Vec::with_capacity(count);
    out.push(one);
    for k in 1..count {
        let (p, v) = t.parent[k];
        let next = out[p as usize] * deltas[v as usize];
        out.push(next);
    }
    Ok(out)
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(dim={}, order={}, [", self.dim, self.order)?;
        for (i, c) in self.c[..self.len()].iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "])")
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.order == other.order && self.c[..self.len()] == other.c[..other.len()]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self += rhs;
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        self.check_dim(&rhs);
        self.order = self.order.min(rhs.order);
        let n = self.len();
        for (a, b) in self.c[..n].iter_mut().zip(&rhs.c[..n]) {
            *a += b;
        }
        let t = self.tables();
        for c in &mut self.c[n..t.count[MAX_ORDER]] {
            *c = 0.0;
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        self -= rhs;
        self
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self += -rhs;
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_jet(&rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}

/// Seed jets at `coords`: the `i`-th jet has value `coords[i]` and unit first
/// derivative in direction `i` when `i` is active, zero otherwise.
pub fn lift_point(coords: &[f64], active: &[usize]) -> Result<Vec<Jet>, JetError> {
    let dim = coords.len();
    if dim > MAX_DIM {
        return Err(JetError::TooManyVariables(dim));
    }
    if let Some(&bad) = coords.iter().find(|c| !c.is_finite()) {
        return Err(JetError::NonFinite(bad));
    }
    if let Some(&bad) = active.iter().find(|&&a| a >= dim) {
        return Err(JetError::DimMismatch(bad, dim));
    }
    Ok(coords
        .iter()
        .enumerate()
        .map(|(i, &x)| if active.contains(&i) { Jet::variable(dim, i, x) } else { Jet::constant(dim, x) })
        .collect())
}

/// Every coordinate active.
pub fn lift_all(coords: &[f64]) -> Result<Vec<Jet>, JetError> {
    let active: Vec<usize> = (0..coords.len()).collect();
    lift_point(coords, &active)
}

pub fn min_order(jets: &[Jet]) -> usize {
    jets.iter().map(Jet::order).min().unwrap_or(MAX_ORDER)
}

pub fn values(jets: &[Jet]) -> Vec<f64> {
    jets.iter().map(Jet::value).collect()
}

pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    assert_eq!(a.len(), b.len());
    let dim = a.first().map(Jet::dim).unwrap_or(0);
    a.iter().zip(b).fold(Jet::zero(dim), |acc, (x, y)| acc + *x * *y)
}

/// Rectangular matrix over the jet ring, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Jet>,
}

impl JetMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Jet) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        let m = JetMatrix { rows, cols, data };
        if let Some(first) = m.data.first() {
            assert!(m.data.iter().all(|j| j.dim() == first.dim()), "jet matrix entries must share dim");
        }
        m
    }

    pub fn identity(n: usize, dim: usize) -> Self {
        Self::from_fn(n, n, |r, c| Jet::constant(dim, if r == c { 1.0 } else { 0.0 }))
    }

    pub fn from_values(rows: usize, cols: usize, values: &[f64], dim: usize) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self::from_fn(rows, cols, |r, c| Jet::constant(dim, values[r * cols + c]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Jet {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Jet) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Jet] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Jet> {
        (0..self.rows).map(|r| *self.get(r, c)).collect()
    }

    /// Order-0 parts, row-major.
    pub fn values(&self) -> Vec<f64> {
        self.data.iter().map(Jet::value).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| *self.get(c, r))
    }

    pub fn mul_vec(&self, v: &[Jet]) -> Vec<Jet> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    pub fn matmul(&self, other: &JetMatrix) -> Self {
        assert_eq!(self.cols, other.rows);
        let cols: Vec<Vec<Jet>> = (0..other.cols).map(|c| other.column(c)).collect();
        Self::from_fn(self.rows, other.cols, |r, c| dot(self.row(r), &cols[c]))
    }

    /// `vᵀ A w`.
    pub fn bilinear(&self, v: &[Jet], w: &[Jet]) -> Jet {
        dot(v, &self.mul_vec(w))
    }

    /// Lower-upper decomposition with partial pivoting on order-0 magnitudes;
    /// returns the eliminated system applied to `rhs` columns.
    fn eliminate(&self, rhs: &JetMatrix) -> Result<(JetMatrix, JetMatrix, f64), JetError> {
        assert_eq!(self.rows, self.cols, "solve needs a square matrix");
        assert_eq!(rhs.rows, self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = a.data.iter().map(|j| j.value().abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut sign = 1.0;
        for col in 0..n {
            let (piv, mag) = (col..n)
                .map(|r| (r, a.get(r, col).value().abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(mag > 1e-14 * scale) {
                return Err(JetError::SingularMatrix { pivot: mag });
            }
            if piv != col {
                sign = -sign;
                for c in 0..n {
                    a.data.swap(piv * n + c, col * n + c);
                }
                for c in 0..b.cols {
                    b.data.swap(piv * b.cols + c, col * b.cols + c);
                }
            }
            let inv = a.get(col, col).recip()?;
            for r in col + 1..n {
                let factor = *a.get(r, col) * inv;
                if factor.value() == 0.0 && factor.terms().all(|(_, c)| c == 0.0) {
                    continue;
                }
                for c in col..n {
                    let v = *a.get(r, c) - factor * *a.get(col, c);
                    a.set(r, c, v);
                }
                for c in 0..b.cols {
                    let v = *b.get(r, c) - factor * *b.get(col, c);
                    b.set(r, c, v);
                }
            }
        }
        Ok((a, b, sign))
    }

    /// Solve `A X = B` for a matrix right-hand side.
    pub fn solve_matrix(&self, rhs: &JetMatrix) -> Result<JetMatrix, JetError> {
        let n = self.rows;
        let (a, b, _) = self.eliminate(rhs)?;
        let mut x = b.clone();
        for c in 0..b.cols {
            for r in (0..n).rev() {
                let mut acc = *b.get(r, c);
                for k in r + 1..n {
                    acc -= *a.get(r, k) * *x.get(k, c);
                }
                x.set(r, c, acc.div(a.get(r, r))?);
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<JetMatrix, JetError> {
        let dim = self.data.first().map(Jet::dim).unwrap_or(0);
        self.solve_matrix(&JetMatrix::identity(self.rows, dim))
    }

    pub fn determinant(&self) -> Result<Jet, JetError> {
        let dim = self.data.first().map(Jet::dim).unwrap_or(0);
        let empty = JetMatrix { rows: self.rows, cols: 0, data: Vec::new() };
        let (a, _, sign) = self.eliminate(&empty)?;
        Ok((0..self.rows).fold(Jet::constant(dim, sign), |acc, i| acc * *a.get(i, i)))
    }
}

/// Solve `A x = b` exactly through the common jet order.
pub fn jet_solve(a: &JetMatrix, b: &[Jet]) -> Result<Vec<Jet>, JetError> {
    let rhs = JetMatrix::from_fn(b.len(), 1, |r, _| b[r]);
    Ok(a.solve_matrix(&rhs)?.column(0))
}
