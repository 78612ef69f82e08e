//! Gauss–Legendre integration of the exponential-kernel integrals that feed
//! the closed-form moments.
//!
//! Every multiple integral over `[-1,0]^k` whose integrand depends only on
//! differences of the variables is first reduced by one dimension: one
//! variable becomes an anchor and integrates out to the weight
//! `max(0, 1 - range of offsets)`. The reduced integrand is piecewise smooth,
//! with kinks on hyperplanes where an argument of `gamma_z` hits `0` or
//! `±1/c` or where the ordering of offsets changes. [`Iterated`] propagates
//! those hyperplanes to every nesting level, so each 1-D sweep splits at all
//! kinks and the rule sees smooth pieces only.

use crate::error::{Error, Result};
use crate::fgn::{gamma_z, GammaSpec};

/// Gauss–Legendre nodes and weights on `[-1, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1,1] -> [-1,0]
            nodes[i] = (-x - 1.0) / 2.0;
            nodes[n - 1 - i] = (x - 1.0) / 2.0;
            weights[i] = w / 2.0;
            weights[n - 1 - i] = w / 2.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Plain Gauss–Legendre estimate of the integral of `f` over `[-1, 0]`.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, rule: &QuadratureRule) -> f64 {
    rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * f(x)).sum()
}

/// Node counts per smooth piece for each family of integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// One-dimensional lag integral and the second count moment.
    pub lag: QuadratureRule,
    /// Per-axis rule for the reduced triple integrals (two axes after reduction).
    pub triple: QuadratureRule,
    /// Per-axis rule for the reduced quadruple integrals (three axes).
    pub quadruple: QuadratureRule,
}

impl QuadratureConfig {
    pub fn with_nodes(lag: usize, triple: usize, quadruple: usize) -> Result<Self> {
        Ok(Self {
            lag: QuadratureRule::gauss_legendre(lag)?,
            triple: QuadratureRule::gauss_legendre(triple)?,
            quadruple: QuadratureRule::gauss_legendre(quadruple)?,
        })
    }

    pub fn doubled(&self) -> Result<Self> {
        Self::with_nodes(
            2 * self.lag.nodes_per_axis(),
            2 * self.triple.nodes_per_axis(),
            2 * self.quadruple.nodes_per_axis(),
        )
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self::with_nodes(DEFAULT_LAG_NODES, DEFAULT_TRIPLE_NODES, DEFAULT_QUADRUPLE_NODES).unwrap()
    }
}

pub const DEFAULT_LAG_NODES: usize = 24;
pub const DEFAULT_TRIPLE_NODES: usize = 12;
pub const DEFAULT_QUADRUPLE_NODES: usize = 8;

const MAX_DIM: usize = 3;

/// Affine form `a . x + b` in up to three variables.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Form {
    a: [f64; MAX_DIM],
    b: f64,
}

impl Form {
    fn new(a: [f64; MAX_DIM], b: f64) -> Self {
        Self { a, b }
    }

    fn shift(self, delta: f64) -> Self {
        Self {
            a: self.a,
            b: self.b + delta,
        }
    }

    fn neg(self) -> Self {
        Self {
            a: self.a.map(|v| -v),
            b: -self.b,
        }
    }

    fn top(&self) -> Option<usize> {
        (0..MAX_DIM).rev().find(|&k| self.a[k].abs() > 1e-14)
    }

    fn partial(&self, x: &[f64; MAX_DIM], k: usize) -> f64 {
        self.b + (0..k).map(|j| self.a[j] * x[j]).sum::<f64>()
    }

    /// Scale so the largest coefficient is +1 in magnitude with a fixed sign.
    fn normalized(self) -> Option<Self> {
        let k = self.top()?;
        let s = self.a[k];
        Some(Self {
            a: self.a.map(|v| v / s),
            b: self.b / s,
        })
    }

    fn close(&self, o: &Self) -> bool {
        (self.b - o.b).abs() < 1e-12 && self.a.iter().zip(&o.a).all(|(x, y)| (x - y).abs() < 1e-12)
    }
}

fn push_unique(v: &mut Vec<Form>, f: Form) {
    if let Some(f) = f.normalized() {
        if !v.iter().any(|g| g.close(&f)) {
            v.push(f);
        }
    }
}

/// Iterated Gauss–Legendre over a region `{x in [-1,1]^dim : support forms >= 0}`
/// with breakpoints at every propagated kink.
#[derive(Debug, Clone)]
struct Iterated {
    dim: usize,
    kinks: Vec<Vec<Form>>,
    lower: Vec<Vec<Form>>,
    upper: Vec<Vec<Form>>,
}

impl Iterated {
    /// `support` must be projection-closed: the constraints whose top variable
    /// is `k` alone describe the feasible range of `x_k` given outer variables.
    fn new(dim: usize, kinks: &[Form], support: &[Form]) -> Self {
        let mut lower = vec![Vec::new(); dim];
        let mut upper = vec![Vec::new(); dim];
        let mut current: Vec<Form> = Vec::new();
        for k in 0..dim {
            let mut e = [0.0; MAX_DIM];
            e[k] = 1.0;
            lower[k].push(Form::new(e, 1.0));
            upper[k].push(Form::new(e, -1.0));
            push_unique(&mut current, Form::new(e, 1.0));
            push_unique(&mut current, Form::new(e, -1.0));
        }
        for s in support {
            if let Some(k) = s.top() {
                if s.a[k] > 0.0 {
                    lower[k].push(*s);
                } else {
                    upper[k].push(*s);
                }
            }
            push_unique(&mut current, *s);
        }
        for f in kinks {
            push_unique(&mut current, *f);
        }
        let mut levels = vec![Vec::new(); dim];
        for k in (0..dim).rev() {
            let (here, mut rest): (Vec<Form>, Vec<Form>) = current.into_iter().partition(|f| f.top() == Some(k));
            for i in 0..here.len() {
                for j in i + 1..here.len() {
                    let (fi, fj) = (here[i], here[j]);
                    let ai = fi.a[k];
                    let aj = fj.a[k];
                    let mut a = [0.0; MAX_DIM];
                    for (m, slot) in a.iter_mut().enumerate() {
                        *slot = fi.a[m] * aj - fj.a[m] * ai;
                    }
                    a[k] = 0.0;
                    push_unique(&mut rest, Form::new(a, fi.b * aj - fj.b * ai));
                }
                // Crossing the box edges of x_k.
                for edge in [-1.0, 1.0] {
                    let fi = here[i];
                    let mut a = fi.a;
                    a[k] = 0.0;
                    push_unique(&mut rest, Form::new(a, fi.b + fi.a[k] * edge));
                }
            }
            levels[k] = here;
            current = rest;
        }
        Self {
            dim,
            kinks: levels,
            lower,
            upper,
        }
    }

    fn integrate<F: Fn(&[f64; MAX_DIM]) -> f64>(&self, rule: &QuadratureRule, f: &F) -> f64 {
        let mut x = [0.0; MAX_DIM];
        let mut pts = vec![Vec::with_capacity(64); self.dim];
        self.level(0, &mut x, &mut pts, rule, f)
    }

    fn level<F: Fn(&[f64; MAX_DIM]) -> f64>(
        &self,
        k: usize,
        x: &mut [f64; MAX_DIM],
        pts: &mut [Vec<f64>],
        rule: &QuadratureRule,
        f: &F,
    ) -> f64 {
        let mut lo = f64::NEG_INFINITY;
        for s in &self.lower[k] {
            lo = lo.max(-s.partial(x, k) / s.a[k]);
        }
        let mut hi = f64::INFINITY;
        for s in &self.upper[k] {
            hi = hi.min(-s.partial(x, k) / s.a[k]);
        }
        if hi - lo <= 1e-14 {
            return 0.0;
        }
        let mut p = std::mem::take(&mut pts[k]);
        p.clear();
        p.push(lo);
        for g in &self.kinks[k] {
            let r = -g.partial(x, k) / g.a[k];
            if r > lo && r < hi {
                p.push(r);
            }
        }
        p.push(hi);
        p.sort_by(|a, b| a.total_cmp(b));
        p.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

        let mut total = 0.0;
        for w in p.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = b - a;
            if len <= 1e-14 {
                continue;
            }
            for (&t0, &wt) in rule.nodes.iter().zip(&rule.weights) {
                // Smoothstep grading clusters nodes at piece ends, where the
                // kernel's |x|^(2H) cusps sit.
                let t = t0 + 1.0;
                let phi = t * t * (3.0 - 2.0 * t);
                let dphi = 6.0 * t * (1.0 - t);
                x[k] = a + len * phi;
                let v = if k + 1 == self.dim {
                    f(x)
                } else {
                    self.level(k + 1, x, pts, rule, f)
                };
                total += wt * len * dphi * v;
            }
        }
        pts[k] = p;
        total
    }
}

fn var(k: usize) -> Form {
    let mut a = [0.0; MAX_DIM];
    a[k] = 1.0;
    Form::new(a, 0.0)
}

fn diff(i: usize, j: usize) -> Form {
    let mut a = [0.0; MAX_DIM];
    a[i] += 1.0;
    a[j] -= 1.0;
    Form::new(a, 0.0)
}

fn add(f: Form, g: Form) -> Form {
    let mut a = f.a;
    for (x, y) in a.iter_mut().zip(g.a) {
        *x += y;
    }
    Form::new(a, f.b + g.b)
}

/// Kinks of `gamma_z(arg)`: `arg` in {0, ±1/c}.
fn kernel_kinks(spec: &GammaSpec, arg: Form, out: &mut Vec<Form>) {
    for k in spec.kinks() {
        out.push(arg.shift(-k));
    }
}

/// `|f| <= 1` as two support forms, plus the kink `f = 0`.
fn within_one(f: Form, support: &mut Vec<Form>, kinks: &mut Vec<Form>) {
    support.push(f.shift(1.0));
    support.push(f.neg().shift(1.0));
    kinks.push(f);
}

fn range_weight(offsets: &[f64]) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = 0.0_f64;
    for &o in offsets {
        lo = lo.min(o);
        hi = hi.max(o);
    }
    (1.0 - (hi - lo)).max(0.0)
}

/// The double integral over `[-1,0]^2` of `exp(gamma_z(L + t - s)) - 1`,
/// evaluated as `∫_{-1}^{1} (1 - |u|) (exp(gamma_z(L + u)) - 1) du`.
pub fn weighted_lag_integral(spec: &GammaSpec, lag: f64, rule: &QuadratureRule) -> f64 {
    let u = var(0);
    let mut kinks = vec![u];
    kernel_kinks(spec, u.shift(lag), &mut kinks);
    let it = Iterated::new(1, &kinks, &[]);
    it.integrate(rule, &|x| (1.0 - x[0].abs()) * gamma_z(spec, lag + x[0]).exp_m1())
}

/// Triple integral over `[-1,0]^3` of
/// `exp(gz(t-u)) * (exp(gz(s-t+L) + gz(s-u+L)) - 1)`.
pub fn integrate_3d_alb0(spec: &GammaSpec, lag: f64, rule: &QuadratureRule) -> f64 {
    // p = s - t, q = s - u; offsets of (t, u) from s are {-p, -q}.
    let (p, q) = (var(0), var(1));
    let mut kinks = vec![p, q];
    let mut support = Vec::new();
    within_one(diff(1, 0), &mut support, &mut kinks);
    kernel_kinks(spec, diff(1, 0), &mut kinks);
    kernel_kinks(spec, p.shift(lag), &mut kinks);
    kernel_kinks(spec, q.shift(lag), &mut kinks);
    let it = Iterated::new(2, &kinks, &support);
    it.integrate(rule, &|x| {
        let (p, q) = (x[0], x[1]);
        let w = range_weight(&[p, q]);
        if w == 0.0 {
            return 0.0;
        }
        w * gamma_z(spec, q - p).exp() * (gamma_z(spec, lag + p) + gamma_z(spec, lag + q)).exp_m1()
    })
}

/// Quadruple integral over `[-1,0]^4` of
/// `exp(gz(s-t) + gz(u-v)) * (exp(gz(s-u+L) + gz(s-v+L) + gz(t-u+L) + gz(t-v+L)) - 1)`.
pub fn integrate_4d_b0bl(spec: &GammaSpec, lag: f64, rule: &QuadratureRule) -> f64 {
    // g = s - u (outer), a = s - t, b = u - v (inner).
    let (g, a, b) = (var(0), var(1), var(2));
    let gb = add(g, b);
    let mut kinks = vec![g, a, b, gb];
    let mut support = Vec::new();
    within_one(diff(1, 0), &mut support, &mut kinks); // a - g
    within_one(gb, &mut support, &mut kinks);
    within_one(add(gb, a.neg()), &mut support, &mut kinks);
    kernel_kinks(spec, a, &mut kinks);
    kernel_kinks(spec, b, &mut kinks);
    for arg in [g, gb, add(g, a.neg()), add(gb, a.neg())] {
        kernel_kinks(spec, arg.shift(lag), &mut kinks);
    }
    let it = Iterated::new(3, &kinks, &support);
    it.integrate(rule, &|x| {
        let (g, a, b) = (x[0], x[1], x[2]);
        let w = range_weight(&[a, g, g + b]);
        if w == 0.0 {
            return 0.0;
        }
        let inner = gamma_z(spec, lag + g)
            + gamma_z(spec, lag + g + b)
            + gamma_z(spec, lag + g - a)
            + gamma_z(spec, lag + g + b - a);
        w * (gamma_z(spec, a) + gamma_z(spec, b)).exp() * inner.exp_m1()
    })
}

/// Raw moments of the daily integrated intensity `nu = λ ∫_{-1}^{0} e^{Z(s)} ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

pub fn integrate_nu_moments(spec: &GammaSpec, lambda: f64, quad: &QuadratureConfig) -> NuMoments {
    let e = std::f64::consts::E;
    let m1 = lambda * e.sqrt();
    let m2 = lambda.powi(2) * e * (weighted_lag_integral(spec, 0.0, &quad.lag) + 1.0);

    let (p, q) = (var(0), var(1));
    let mut kinks = Vec::new();
    let mut support = Vec::new();
    within_one(diff(1, 0), &mut support, &mut kinks);
    for arg in [p, q, diff(1, 0)] {
        kernel_kinks(spec, arg, &mut kinks);
    }
    let it = Iterated::new(2, &kinks, &support);
    let i3 = it.integrate(&quad.triple, &|x| {
        let (p, q) = (x[0], x[1]);
        let w = range_weight(&[p, q]);
        if w == 0.0 {
            return 0.0;
        }
        w * (gamma_z(spec, p) + gamma_z(spec, q) + gamma_z(spec, q - p)).exp()
    });
    let m3 = lambda.powi(3) * e.powf(1.5) * i3;

    let (a, b, g) = (var(0), var(1), var(2));
    let mut kinks = Vec::new();
    let mut support = Vec::new();
    within_one(diff(1, 0), &mut support, &mut kinks); // b - a
    within_one(diff(2, 0), &mut support, &mut kinks); // g - a
    within_one(diff(2, 1), &mut support, &mut kinks); // g - b
    for arg in [a, b, g, diff(1, 0), diff(2, 0), diff(2, 1)] {
        kernel_kinks(spec, arg, &mut kinks);
    }
    let it = Iterated::new(3, &kinks, &support);
    let i4 = it.integrate(&quad.quadruple, &|x| {
        let (a, b, g) = (x[0], x[1], x[2]);
        let w = range_weight(&[a, b, g]);
        if w == 0.0 {
            return 0.0;
        }
        let s = gamma_z(spec, a)
            + gamma_z(spec, b)
            + gamma_z(spec, g)
            + gamma_z(spec, b - a)
            + gamma_z(spec, g - a)
            + gamma_z(spec, g - b);
        w * s.exp()
    });
    let m4 = lambda.powi(4) * e * e * i4;
    NuMoments { m1, m2, m3, m4 }
}
