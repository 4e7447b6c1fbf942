//! Truncated multivariate Taylor polynomials (forward-mode jets).
//!
//! A `Jet<T>` stores the Taylor coefficients `c_α` of a function around a
//! base point, `f(x̄ + δ) = Σ_{|α| ≤ K} c_α δ^α`, in a graded monomial order.
//! Partial derivatives are recovered as `∂^α f = α! c_α`, so mixed partials
//! are symmetric by construction.

use std::collections::HashMap;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

pub const MAX_VARS: usize = 8;
pub const MAX_ORDER: usize = 12;

/// Coefficient field of a jet.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    /// Principal branch power.
    fn powf(self, p: f64) -> Self;
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
    fn scale(self, s: f64) -> Self {
        self * Self::from_f64(s)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn ln(self) -> Self {
        Complex64::ln(self)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
    fn sinh(self) -> Self {
        Complex64::sinh(self)
    }
    fn cosh(self) -> Self {
        Complex64::cosh(self)
    }
    fn powf(self, p: f64) -> Self {
        if self == Self::zero() {
            return if p == 0.0 { Self::one() } else { Self::zero() };
        }
        (self.ln() * p).exp()
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

type Exps = [u8; MAX_VARS];

/// Monomial bookkeeping shared by every jet with the same shape.
#[derive(Debug)]
pub struct Basis {
    pub nvars: usize,
    pub order: usize,
    exps: Vec<Exps>,
    degs: Vec<usize>,
    deg_start: Vec<usize>,
    lookup: HashMap<Exps, usize>,
    mul: Vec<(u32, u32, u32)>,
    parent: Vec<(usize, usize)>,
    /// `lower[var][i]`: index of `e_i − e_var` (same graded order), or `usize::MAX`.
    lower: Vec<Vec<usize>>,
    fact: Vec<f64>,
}

fn gen_degree(nvars: usize, deg: usize, out: &mut Vec<Exps>) {
    fn rec(var: usize, nvars: usize, left: usize, cur: &mut Exps, out: &mut Vec<Exps>) {
        if var + 1 == nvars {
            cur[var] = left as u8;
            out.push(*cur);
            cur[var] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[var] = e as u8;
            rec(var + 1, nvars, left - e, cur, out);
        }
        cur[var] = 0;
    }
    let mut cur = [0u8; MAX_VARS];
    if nvars == 0 {
        if deg == 0 {
            out.push(cur);
        }
        return;
    }
    rec(0, nvars, deg, &mut cur, out);
}

impl Basis {
    fn build(nvars: usize, order: usize) -> Basis {
        assert!(nvars <= MAX_VARS, "jet: too many variables");
        assert!(order <= MAX_ORDER, "jet: order too high");
        let mut exps = Vec::new();
        let mut deg_start = vec![0];
        for d in 0..=order {
            gen_degree(nvars, d, &mut exps);
            deg_start.push(exps.len());
        }
        let degs: Vec<usize> = exps
            .iter()
            .map(|e| e.iter().map(|&v| v as usize).sum())
            .collect();
        let lookup: HashMap<Exps, usize> = exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let mut mul = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                if degs[i] + degs[j] > order {
                    continue;
                }
                let mut s = [0u8; MAX_VARS];
                for v in 0..nvars {
                    s[v] = ei[v] + ej[v];
                }
                mul.push((i as u32, j as u32, lookup[&s] as u32));
            }
        }
        let mut parent = vec![(0, 0); exps.len()];
        for (i, e) in exps.iter().enumerate().skip(1) {
            let v = e.iter().position(|&x| x > 0).unwrap();
            let mut p = *e;
            p[v] -= 1;
            parent[i] = (lookup[&p], v);
        }
        let lower = (0..nvars)
            .map(|v| {
                exps.iter()
                    .map(|e| {
                        if e[v] == 0 {
                            return usize::MAX;
                        }
                        let mut p = *e;
                        p[v] -= 1;
                        lookup[&p]
                    })
                    .collect()
            })
            .collect();
        let fact = exps
            .iter()
            .map(|e| {
                e.iter()
                    .map(|&k| (1..=k as u32).map(f64::from).product::<f64>())
                    .product()
            })
            .collect();
        Basis {
            nvars,
            order,
            exps,
            degs,
            deg_start,
            lookup,
            mul,
            parent,
            lower,
            fact,
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i][..self.nvars]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degs[i]
    }

    /// Index range of the monomials of total degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.deg_start[d]..self.deg_start[d + 1]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        let mut e = [0u8; MAX_VARS];
        e[..exps.len()].copy_from_slice(exps);
        self.lookup.get(&e).copied()
    }
}

/// Shared basis for `nvars` variables truncated at total degree `order`.
pub fn basis(nvars: usize, order: usize) -> &'static Basis {
    thread_local! {
        static LOCAL: std::cell::RefCell<HashMap<(usize, usize), &'static Basis>> =
            std::cell::RefCell::new(HashMap::new());
    }
    if let Some(b) = LOCAL.with(|l| l.borrow().get(&(nvars, order)).copied()) {
        return b;
    }
    let b = shared_basis(nvars, order);
    LOCAL.with(|l| l.borrow_mut().insert((nvars, order), b));
    b
}

fn shared_basis(nvars: usize, order: usize) -> &'static Basis {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static Basis>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    *guard
        .entry((nvars, order))
        .or_insert_with(|| Box::leak(Box::new(Basis::build(nvars, order))))
}

/// Truncated Taylor polynomial in `nvars` variables.
#[derive(Clone)]
pub struct Jet<T: Scalar> {
    basis: &'static Basis,
    c: Vec<T>,
}

impl<T: Scalar> Debug for Jet<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.basis.nvars)
            .field("order", &self.basis.order)
            .field("c", &self.c)
            .finish()
    }
}

impl<T: Scalar> Jet<T> {
    pub fn constant(nvars: usize, order: usize, v: T) -> Self {
        let b = basis(nvars, order);
        let mut c = vec![T::zero(); b.len()];
        c[0] = v;
        Jet { basis: b, c }
    }

    pub fn zero(nvars: usize, order: usize) -> Self {
        Self::constant(nvars, order, T::zero())
    }

    /// The coordinate function `x̄_i + δ_i`.
    pub fn variable(nvars: usize, order: usize, i: usize, v: T) -> Self {
        let mut j = Self::constant(nvars, order, v);
        if order > 0 {
            j.c[1 + i] = T::one();
        }
        j
    }

    /// Independent variables at the point `x`.
    pub fn variables(x: &[T], order: usize) -> Vec<Self> {
        (0..x.len())
            .map(|i| Self::variable(x.len(), order, i, x[i]))
            .collect()
    }

    pub fn from_coeffs(nvars: usize, order: usize, c: Vec<T>) -> Self {
        let b = basis(nvars, order);
        assert_eq!(c.len(), b.len(), "jet: coefficient length");
        Jet { basis: b, c }
    }

    /// A constant with the same shape as `self`.
    pub fn lift(&self, v: T) -> Self {
        Self::constant(self.basis.nvars, self.basis.order, v)
    }

    pub fn nvars(&self) -> usize {
        self.basis.nvars
    }

    pub fn order(&self) -> usize {
        self.basis.order
    }

    pub fn basis(&self) -> &'static Basis {
        self.basis
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.c
    }

    /// Taylor coefficient of `δ^α`.
    pub fn coeff(&self, exps: &[u8]) -> T {
        self.basis
            .index_of(exps)
            .map(|i| self.c[i])
            .unwrap_or_else(T::zero)
    }

    /// Partial derivative along the listed variables, e.g. `[0, 0, 1]` is ∂₀∂₀∂₁.
    pub fn partial(&self, vars: &[usize]) -> T {
        if vars.len() > self.basis.order {
            return T::zero();
        }
        let mut e = [0u8; MAX_VARS];
        for &v in vars {
            e[v] += 1;
        }
        let i = self.basis.lookup[&e];
        self.c[i].scale(self.basis.fact[i])
    }

    pub fn gradient(&self) -> Vec<T> {
        (0..self.nvars()).map(|i| self.partial(&[i])).collect()
    }

    pub fn hessian(&self) -> Vec<Vec<T>> {
        let n = self.nvars();
        (0..n)
            .map(|i| (0..n).map(|j| self.partial(&[i, j])).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Drop all terms above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order());
        let b = basis(self.nvars(), order);
        Jet {
            basis: b,
            c: self.c[..b.len()].to_vec(),
        }
    }

    /// Embed in a higher-order basis with zero high terms.
    pub fn extend(&self, order: usize) -> Self {
        assert!(order >= self.order());
        let b = basis(self.nvars(), order);
        let mut c = self.c.clone();
        c.resize(b.len(), T::zero());
        Jet { basis: b, c }
    }

    /// Homogeneous part of degree `d` (as a jet of the same shape).
    pub fn homogeneous_part(&self, d: usize) -> Self {
        let mut out = self.lift(T::zero());
        if d <= self.order() {
            for i in self.basis.degree_range(d) {
                out.c[i] = self.c[i];
            }
        }
        out
    }

    /// Partial derivative `∂_var`, one order lower.
    pub fn deriv(&self, var: usize) -> Self {
        let n = self.nvars();
        if self.order() == 0 {
            return Self::zero(n, 0);
        }
        let b = basis(n, self.order() - 1);
        let mut c = vec![T::zero(); b.len()];
        let low = &self.basis.lower[var];
        for (i, e) in self.basis.exps.iter().enumerate() {
            if e[var] != 0 {
                c[low[i]] = self.c[i].scale(e[var] as f64);
            }
        }
        Jet { basis: b, c }
    }

    fn check_shape(&self, other: &Self) {
        assert!(
            std::ptr::eq(self.basis, other.basis),
            "jet: shape mismatch ({}, {}) vs ({}, {})",
            self.nvars(),
            self.order(),
            other.nvars(),
            other.order()
        );
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == T::zero())
    }

    pub fn mul_ref(&self, other: &Self) -> Self {
        self.check_shape(other);
        let mut c = vec![T::zero(); self.c.len()];
        if self.is_zero() || other.is_zero() {
            return Jet { basis: self.basis, c };
        }
        for &(i, j, k) in &self.basis.mul {
            c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        Jet { basis: self.basis, c }
    }

    pub fn scale(&self, s: T) -> Self {
        Jet {
            basis: self.basis,
            c: self.c.iter().map(|&v| v * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        self.check_shape(other);
        for (a, &b) in self.c.iter_mut().zip(&other.c) {
            *a += s * b;
        }
    }

    /// Evaluate `Σ_k series[k] (self − self(0))^k`.
    pub fn compose_series(&self, series: &[T]) -> Self {
        let mut d = self.clone();
        d.c[0] = T::zero();
        let kmax = series.len().min(self.order() + 1);
        let mut r = self.lift(series[kmax - 1]);
        for k in (0..kmax - 1).rev() {
            r = r.mul_ref(&d);
            r.c[0] += series[k];
        }
        r
    }

    pub fn recip(&self) -> Self {
        let a = self.value();
        let inv = T::one() / a;
        let mut s = Vec::with_capacity(self.order() + 1);
        let mut cur = inv;
        for _ in 0..=self.order() {
            s.push(cur);
            cur = -(cur * inv);
        }
        self.compose_series(&s)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let mut s = Vec::with_capacity(self.order() + 1);
        let mut f = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                f *= k as f64;
            }
            s.push(e.scale(1.0 / f));
        }
        self.compose_series(&s)
    }

    pub fn ln(&self) -> Self {
        let a = self.value();
        let inv = T::one() / a;
        let mut s = vec![a.ln()];
        let mut p = inv;
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            s.push(p.scale(sign / k as f64));
            p *= inv;
        }
        self.compose_series(&s)
    }

    fn trig_series(&self, d0: T, d1: T, period_sign: f64) -> Self {
        // derivatives cycle d0, d1, s*d0, s*d1, ...
        let mut s = Vec::with_capacity(self.order() + 1);
        let mut f = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                f *= k as f64;
            }
            let base = if k % 2 == 0 { d0 } else { d1 };
            let sign = if (k / 2) % 2 == 1 { period_sign } else { 1.0 };
            s.push(base.scale(sign / f));
        }
        self.compose_series(&s)
    }

    pub fn sin(&self) -> Self {
        let a = self.value();
        self.trig_series(a.sin(), a.cos(), -1.0)
    }

    pub fn cos(&self) -> Self {
        let a = self.value();
        self.trig_series(a.cos(), -a.sin(), -1.0)
    }

    pub fn sinh(&self) -> Self {
        let a = self.value();
        self.trig_series(a.sinh(), a.cosh(), 1.0)
    }

    pub fn cosh(&self) -> Self {
        let a = self.value();
        self.trig_series(a.cosh(), a.sinh(), 1.0)
    }

    /// Principal-branch power with a constant exponent.
    pub fn powf(&self, p: f64) -> Self {
        if p.fract() == 0.0 && p.abs() < 64.0 {
            return self.powi(p as i32);
        }
        let a = self.value();
        let inv = T::one() / a;
        let mut s = Vec::with_capacity(self.order() + 1);
        let mut cur = a.powf(p);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            s.push(cur.scale(binom));
            binom *= (p - k as f64) / (k as f64 + 1.0);
            cur *= inv;
        }
        self.compose_series(&s)
    }

    /// Power with a complex constant exponent (principal branch).
    pub fn powc(&self, p: T) -> Self {
        (self.ln().scale(p)).exp()
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut result = self.lift(T::one());
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_ref(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_ref(&base);
            }
        }
        result
    }

    /// Substitute `δ_i ↦ args[i]` into the polynomial `self`.
    ///
    /// `args` share one basis (any number of variables); for an exact
    /// truncation they should vanish at their own base point.
    pub fn compose(&self, args: &[Jet<T>]) -> Jet<T> {
        assert_eq!(args.len(), self.nvars(), "jet: compose arity");
        let target = args[0].basis;
        let mut mons: Vec<Jet<T>> = Vec::with_capacity(self.c.len());
        mons.push(Jet::constant(target.nvars, target.order, T::one()));
        let mut out = Jet::constant(target.nvars, target.order, self.c[0]);
        for i in 1..self.c.len() {
            let (p, v) = self.basis.parent[i];
            let m = mons[p].mul_ref(&args[v]);
            if self.c[i] != T::zero() {
                out.axpy(self.c[i], &m);
            }
            mons.push(m);
        }
        out
    }

    /// `compose` for several polynomials on one basis, sharing the monomials.
    pub fn compose_many(polys: &[&Jet<T>], args: &[Jet<T>]) -> Vec<Jet<T>> {
        if polys.is_empty() {
            return Vec::new();
        }
        let src = polys[0].basis;
        let target = args[0].basis;
        let mut outs: Vec<Jet<T>> = polys
            .iter()
            .map(|p| Jet::constant(target.nvars, target.order, p.c[0]))
            .collect();
        let mut mons: Vec<Jet<T>> = Vec::with_capacity(src.len());
        mons.push(Jet::constant(target.nvars, target.order, T::one()));
        for i in 1..src.len() {
            let (p, v) = src.parent[i];
            let m = mons[p].mul_ref(&args[v]);
            for (o, poly) in outs.iter_mut().zip(polys) {
                if poly.c[i] != T::zero() {
                    o.axpy(poly.c[i], &m);
                }
            }
            mons.push(m);
        }
        outs
    }

    /// Evaluate the polynomial at `delta`.
    pub fn eval_poly(&self, delta: &[T]) -> T {
        let mut mons = vec![T::one(); self.c.len()];
        let mut acc = self.c[0];
        for i in 1..self.c.len() {
            let (p, v) = self.basis.parent[i];
            mons[i] = mons[p] * delta[v];
            acc += self.c[i] * mons[i];
        }
        acc
    }

    /// Scale the degree-`d` coefficients by `s^d`.
    pub fn scale_degrees(&self, s: f64) -> Self {
        let mut out = self.clone();
        let mut f = 1.0;
        for d in 0..=self.order() {
            for i in self.basis.degree_range(d) {
                out.c[i] = out.c[i].scale(f);
            }
            f *= s;
        }
        out
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Jet<U> {
        Jet {
            basis: self.basis,
            c: self.c.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl Jet<f64> {
    pub fn to_complex(&self) -> Jet<Complex64> {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl<T: Scalar> $trait<&Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                let f: fn(&Jet<T>, &Jet<T>) -> Jet<T> = $body;
                f(self, rhs)
            }
        }
        impl<T: Scalar> $trait<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                (&self).$method(&rhs)
            }
        }
        impl<T: Scalar> $trait<&Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                (&self).$method(rhs)
            }
        }
        impl<T: Scalar> $trait<Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| {
    a.check_shape(b);
    Jet {
        basis: a.basis,
        c: a.c.iter().zip(&b.c).map(|(&x, &y)| x + y).collect(),
    }
});
jet_binop!(Sub, sub, |a, b| {
    a.check_shape(b);
    Jet {
        basis: a.basis,
        c: a.c.iter().zip(&b.c).map(|(&x, &y)| x - y).collect(),
    }
});
jet_binop!(Mul, mul, |a, b| a.mul_ref(b));
jet_binop!(Div, div, |a, b| a.mul_ref(&b.recip()));

impl<T: Scalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        Jet {
            basis: self.basis,
            c: self.c.into_iter().map(|v| -v).collect(),
        }
    }
}

impl<T: Scalar> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.clone().neg()
    }
}

impl<T: Scalar> AddAssign<&Jet<T>> for Jet<T> {
    fn add_assign(&mut self, rhs: &Jet<T>) {
        self.check_shape(rhs);
        for (a, &b) in self.c.iter_mut().zip(&rhs.c) {
            *a += b;
        }
    }
}

impl<T: Scalar> SubAssign<&Jet<T>> for Jet<T> {
    fn sub_assign(&mut self, rhs: &Jet<T>) {
        self.check_shape(rhs);
        for (a, &b) in self.c.iter_mut().zip(&rhs.c) {
            *a -= b;
        }
    }
}

impl<T: Scalar> MulAssign<T> for Jet<T> {
    fn mul_assign(&mut self, rhs: T) {
        for a in self.c.iter_mut() {
            *a *= rhs;
        }
    }
}

/// Square matrix of jets stored row-major.
pub type JetMat<T> = Vec<Vec<Jet<T>>>;

/// Determinant by elimination with pivoting on the constant terms.
pub fn det<T: Scalar>(m: &JetMat<T>) -> Option<Jet<T>> {
    let n = m.len();
    let mut a = m.clone();
    let mut d = a[0][0].lift(T::one());
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .value()
                .modulus()
                .partial_cmp(&a[j][col].value().modulus())
                .unwrap()
        })?;
        if a[piv][col].value().modulus() == 0.0 {
            return None;
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        let inv = a[col][col].recip();
        d = d.mul_ref(&a[col][col]);
        for r in col + 1..n {
            let f = a[r][col].mul_ref(&inv);
            for c in col..n {
                let t = f.mul_ref(&a[col][c]);
                a[r][c] -= &t;
            }
        }
    }
    Some(d)
}

/// Matrix inverse by Gauss–Jordan elimination with pivoting on constant terms.
pub fn inverse<T: Scalar>(m: &JetMat<T>) -> Option<JetMat<T>> {
    let n = m.len();
    let mut a = m.clone();
    let one = a[0][0].lift(T::one());
    let zero = a[0][0].lift(T::zero());
    let mut inv: JetMat<T> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { one.clone() } else { zero.clone() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .value()
                .modulus()
                .partial_cmp(&a[j][col].value().modulus())
                .unwrap()
        })?;
        if a[piv][col].value().modulus() == 0.0 {
            return None;
        }
        a.swap(piv, col);
        inv.swap(piv, col);
        let p = a[col][col].recip();
        for c in 0..n {
            a[col][c] = a[col][c].mul_ref(&p);
            inv[col][c] = inv[col][c].mul_ref(&p);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col].clone();
            if f.is_zero() {
                continue;
            }
            for c in 0..n {
                let t = f.mul_ref(&a[col][c]);
                a[r][c] -= &t;
                let t = f.mul_ref(&inv[col][c]);
                inv[r][c] -= &t;
            }
        }
    }
    Some(inv)
}

/// `A · B` for jet matrices.
pub fn matmul<T: Scalar>(a: &JetMat<T>, b: &JetMat<T>) -> JetMat<T> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = a[0][0].lift(T::zero());
                    for l in 0..k {
                        acc += &a[i][l].mul_ref(&b[l][j]);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(basis(4, 4).len(), 70);
        assert_eq!(basis(2, 3).len(), 10);
        assert_eq!(basis(1, 5).len(), 6);
        assert_eq!(basis(3, 0).len(), 1);
    }

    #[test]
    fn product_of_variables() {
        let v = Jet::<f64>::variables(&[2.0, 3.0], 3);
        let f = &v[0] * &v[1];
        assert_eq!(f.value(), 6.0);
        assert_eq!(f.partial(&[0]), 3.0);
        assert_eq!(f.partial(&[1]), 2.0);
        assert_eq!(f.partial(&[0, 1]), 1.0);
        assert_eq!(f.partial(&[1, 0]), 1.0);
        assert_eq!(f.partial(&[0, 0]), 0.0);
    }

    #[test]
    fn exp_sin_chain() {
        // f = exp(sin(x) * y) at (0.3, 0.7)
        let v = Jet::<f64>::variables(&[0.3, 0.7], 4);
        let f = (v[0].sin() * &v[1]).exp();
        let (x, y) = (0.3f64, 0.7f64);
        let e = (x.sin() * y).exp();
        assert!(close(f.value(), e, 1e-15));
        assert!(close(f.partial(&[0]), e * y * x.cos(), 1e-14));
        assert!(close(f.partial(&[1]), e * x.sin(), 1e-14));
        let fxy = e * x.cos() * (1.0 + x.sin() * y);
        assert!(close(f.partial(&[0, 1]), fxy, 1e-14));
        // ∂_y^4 f = sin(x)^4 e
        assert!(close(f.partial(&[1, 1, 1, 1]), x.sin().powi(4) * e, 1e-13));
    }

    #[test]
    fn recip_ln_pow_consistency() {
        let v = Jet::<f64>::variables(&[1.7, -0.4, 0.2], 4);
        let g = &(&v[0] * &v[0]) + &(v[1].cosh() * &v[2]);
        let a = g.recip() * &g;
        assert!((a.value() - 1.0).abs() < 1e-15);
        assert!(a.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
        let b = g.ln().exp() - &g;
        assert!(b.max_abs() < 1e-13);
        let c = g.powf(0.5).powi(2) - &g;
        assert!(c.max_abs() < 1e-13);
    }

    #[test]
    fn integer_power_at_zero() {
        let v = Jet::<f64>::variables(&[0.0], 4);
        let f = v[0].powf(2.0);
        assert_eq!(f.partial(&[0, 0]), 2.0);
        assert_eq!(f.value(), 0.0);
    }

    #[test]
    fn derivative_and_compose() {
        // f(x, y) = x^2 y + sin y around (1, 2); compose with (x, y) = (1 + s t, 2 + s)
        let v = Jet::<f64>::variables(&[1.0, 2.0], 4);
        let f = &(&(&v[0] * &v[0]) * &v[1]) + &v[1].sin();
        let fx = f.deriv(0);
        assert_eq!(fx.order(), 3);
        assert!(close(fx.value(), 4.0, 1e-15));
        let st = Jet::<f64>::variables(&[0.0, 0.0], 4);
        let args = vec![&st[0] * &st[1], st[0].clone()];
        let g = f.compose(&args);
        // g(s, t) = (1 + s t)^2 (2 + s) + sin(2 + s); ∂_s∂_t g at 0 = 2*2 = 4
        assert!(close(g.partial(&[0, 1]), 4.0, 1e-14));
        assert!(close(g.partial(&[0]), 1.0 + 2f64.cos(), 1e-14));
        assert!(close(g.partial(&[0, 0, 0]), -(2f64.cos()), 1e-13));
    }

    #[test]
    fn matrix_inverse_and_det() {
        let v = Jet::<f64>::variables(&[0.5, -0.3], 3);
        let m: JetMat<f64> = vec![
            vec![v[0].exp(), &v[0] * &v[1]],
            vec![&v[0] * &v[1], -v[1].cosh()],
        ];
        let inv = inverse(&m).unwrap();
        let id = matmul(&m, &inv);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((id[i][j].value() - expect).abs() < 1e-14);
                assert!(id[i][j].coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
            }
        }
        let d = det(&m).unwrap();
        let direct = &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]);
        assert!((d - direct).max_abs() < 1e-13);
    }

    #[test]
    fn complex_power() {
        let z = Complex64::new(0.3, -1.1);
        let v = Jet::<Complex64>::variables(&[z], 3);
        let f = v[0].powf(-1.5);
        let expect = z.powf(-1.5);
        assert!((f.value() - expect).norm() < 1e-14);
        let d1 = z.powf(-2.5) * -1.5;
        assert!((f.partial(&[0]) - d1).norm() < 1e-13);
    }
}
