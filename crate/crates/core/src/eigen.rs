//! Eigenvalues of Hermitian matrices.
//!
//! Dense matrices go through Householder tridiagonalization and implicit
//! QL. Periodic tridiagonal ("cyclic chain") matrices are folded into a
//! Hermitian band of half-bandwidth two, reduced to tridiagonal form by
//! Givens bulge chasing, and then solved by QL or by Sturm bisection on
//! an energy window. For a few eigenvalues of a long chain,
//! [`PeriodicJacobi`] finds them in `O(n)` per root from the transfer
//! matrix.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const QL_MAX_SWEEPS: usize = 60;

/// Dense Hermitian matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> HermitianMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex::new(T::zero(), T::zero()); n * n] }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex<T>>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.n + j] = v;
    }

    /// Adds `v` at `(i, j)` and `conj(v)` at `(j, i)`.
    pub fn add_hermitian(&mut self, i: usize, j: usize, v: Complex<T>) {
        let n = self.n;
        self.data[i * n + j] = self.data[i * n + j] + v;
        self.data[j * n + i] = self.data[j * n + i] + v.conj();
    }

    /// `max |M_ij - conj(M_ji)|`.
    pub fn hermiticity_defect(&self) -> T {
        let mut d = T::zero();
        for i in 0..self.n {
            for j in 0..=i {
                d = d.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        d
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `M v` for a complex vector.
    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.n)
            .map(|i| (0..self.n).fold(Complex::new(T::zero(), T::zero()), |acc, j| acc + self.get(i, j) * v[j]))
            .collect()
    }
}

/// Eigenvalues of a dense Hermitian matrix, ascending.
///
/// Fails with [`Error::NotHermitian`] when the matrix deviates from
/// Hermitian symmetry by more than `1e-12 max(1, max|M_ij|)`.
pub fn hermitian_eigenvalues<T: Real>(m: &HermitianMatrix<T>) -> Result<Vec<T>> {
    let n = m.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let defect = m.hermiticity_defect();
    let scale = T::one().max(m.max_abs());
    if defect > T::tol(1e-12, 64.0) * scale {
        return Err(Error::NotHermitian { defect: defect.as_f64() });
    }
    let tri = householder_tridiagonal(m);
    tri.eigenvalues()
}

/// Reduces a Hermitian matrix to a real symmetric tridiagonal matrix with
/// the same eigenvalues.
fn householder_tridiagonal<T: Real>(m: &HermitianMatrix<T>) -> SymTridiagonal<T> {
    let n = m.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let mut a: Vec<Vec<Complex<T>>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect();
    let mut diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex<T>> = (k + 1..n).map(|i| a[i][k]).collect();
        let alpha = x.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
        diag[k] = a[k][k].re;
        if alpha == T::zero() {
            off[k] = T::zero();
            continue;
        }
        let phase = if x[0].norm() > T::zero() { x[0] / x[0].norm() } else { Complex::new(T::one(), T::zero()) };
        let mut v = x.clone();
        v[0] = v[0] + phase * alpha;
        let vnorm2 = v.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        let tau = T::lit(2.0) / vnorm2;
        let len = v.len();
        // p = tau * A_sub v
        let mut p = vec![zero; len];
        for (ii, pi) in p.iter_mut().enumerate() {
            let row = &a[k + 1 + ii];
            let mut s = zero;
            for (jj, vj) in v.iter().enumerate() {
                s = s + row[k + 1 + jj] * vj;
            }
            *pi = s * tau;
        }
        // K = tau/2 * v^H p
        let vp = v.iter().zip(&p).fold(zero, |s, (vi, pi)| s + vi.conj() * pi);
        let kk = vp * (tau * T::lit(0.5));
        let w: Vec<Complex<T>> = p.iter().zip(&v).map(|(pi, vi)| pi - kk * vi).collect();
        for ii in 0..len {
            let row = &mut a[k + 1 + ii];
            for jj in 0..len {
                row[k + 1 + jj] = row[k + 1 + jj] - v[ii] * w[jj].conj() - w[ii] * v[jj].conj();
            }
        }
        off[k] = alpha;
    }
    if n >= 2 {
        diag[n - 2] = a[n - 2][n - 2].re;
        off[n - 2] = a[n - 1][n - 2].norm();
    }
    diag[n - 1] = a[n - 1][n - 1].re;
    SymTridiagonal { diag, off }
}

/// Real symmetric tridiagonal matrix: `diag[i]` and `off[i]` coupling
/// `i` and `i + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Real> SymTridiagonal<T> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// All eigenvalues, ascending, by implicit QL with Wilkinson-type shifts.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let n = self.diag.len();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(T::zero());
        let eps = T::epsilon();
        for l in 0..n {
            let mut sweeps = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= eps * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                sweeps += 1;
                if sweeps > QL_MAX_SWEEPS {
                    return Err(Error::NoConvergence(format!("QL stalled at index {l} of {n}")));
                }
                let mut g = (d[l + 1] - d[l]) / (T::lit(2.0) * e[l]);
                let mut r = g.hypot(T::one());
                g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
                let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
                let mut i = m;
                let mut deflated = false;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == T::zero() {
                        d[i + 1] = d[i + 1] - p;
                        e[m] = T::zero();
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + T::lit(2.0) * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if deflated {
                    continue;
                }
                d[l] = d[l] - p;
                e[l] = g;
                e[m] = T::zero();
            }
        }
        d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Ok(d)
    }

    fn pivot_floor(&self) -> T {
        let emax = self.off.iter().fold(T::one(), |m, e| m.max(*e * *e));
        T::min_positive_value() * emax / T::epsilon()
    }

    /// Number of eigenvalues strictly below `x` (Sturm count).
    pub fn count_below(&self, x: T) -> usize {
        let pivmin = self.pivot_floor();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.diag.len() {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalues in `[lo, hi)`, ascending, each located by bisection to
    /// absolute tolerance `tol`.
    pub fn eigenvalues_in(&self, lo: T, hi: T, tol: T) -> Vec<T> {
        if !(lo < hi) {
            return Vec::new();
        }
        let k_lo = self.count_below(lo);
        let k_hi = self.count_below(hi);
        let half = T::lit(0.5);
        let mut out = Vec::with_capacity(k_hi.saturating_sub(k_lo));
        let mut floor = lo;
        for j in k_lo..k_hi {
            let (mut a, mut b) = (floor, hi);
            while b - a > tol {
                let mid = (a + b) * half;
                if mid <= a || mid >= b {
                    break;
                }
                if self.count_below(mid) > j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let x = (a + b) * half;
            out.push(x);
            floor = a;
        }
        out
    }
}

/// Hermitian matrix that is tridiagonal up to a corner coupling:
/// `links[i] = H[(i + 1) mod n][i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicChain<T> {
    pub diag: Vec<T>,
    pub links: Vec<Complex<T>>,
}

impl<T: Real> CyclicChain<T> {
    pub fn new(diag: Vec<T>, links: Vec<Complex<T>>) -> Result<Self> {
        if diag.is_empty() || diag.len() != links.len() {
            return Err(Error::invalid("cyclic chain needs n diagonal entries and n links"));
        }
        Ok(Self { diag, links })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> HermitianMatrix<T> {
        let n = self.dim();
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, m.get(i, i) + Complex::new(self.diag[i], T::zero()));
            m.add_hermitian((i + 1) % n, i, self.links[i]);
        }
        m
    }

    /// Unitarily equivalent real tridiagonal matrix.
    pub fn tridiagonalize(&self) -> SymTridiagonal<T> {
        let n = self.dim();
        if n <= 2 {
            return householder_tridiagonal(&self.to_dense());
        }
        let mut band = FoldedBand::from_chain(self);
        band.reduce();
        band.into_tridiagonal()
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        self.tridiagonalize().eigenvalues()
    }
}

/// Lower band storage `a[i][d] = A[i][i - d]`, `d <= 3` (bandwidth two
/// plus room for one bulge).
struct FoldedBand<T> {
    n: usize,
    a: Vec<[Complex<T>; 4]>,
}

impl<T: Real> FoldedBand<T> {
    /// Applies the fold permutation `(0, n-1, 1, n-2, ...)`, which turns the
    /// cyclic chain into a band matrix of half-bandwidth two.
    fn from_chain(chain: &CyclicChain<T>) -> Self {
        let n = chain.dim();
        let zero = Complex::new(T::zero(), T::zero());
        let mut a = vec![[zero; 4]; n];
        let pos = |k: usize| if 2 * k < n { 2 * k } else { 2 * (n - 1 - k) + 1 };
        for (k, &d) in chain.diag.iter().enumerate() {
            let p = pos(k);
            a[p][0] = a[p][0] + Complex::new(d, T::zero());
        }
        for (i, &l) in chain.links.iter().enumerate() {
            let (r, c) = (pos((i + 1) % n), pos(i));
            let (row, col, v) = if r > c { (r, c, l) } else { (c, r, l.conj()) };
            debug_assert!(row - col <= 2 && row != col);
            a[row][row - col] = a[row][row - col] + v;
        }
        Self { n, a }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex<T> {
        if i >= j {
            let d = i - j;
            if d <= 3 {
                self.a[i][d]
            } else {
                Complex::new(T::zero(), T::zero())
            }
        } else {
            self.get(j, i).conj()
        }
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        if i >= j {
            let d = i - j;
            if d <= 3 {
                self.a[i][d] = v;
            } else {
                debug_assert!(v.norm() <= T::lit(1e-6), "fill outside band storage");
            }
        } else {
            self.set(j, i, v.conj());
        }
    }

    /// Similarity `A <- G A G^H` with `G = [[c, s], [-conj(s), c]]` on
    /// coordinates `(p, p + 1)`.
    fn rotate(&mut self, p: usize, c: T, s: Complex<T>) {
        let (a, b) = (p, p + 1);
        let n = self.n;
        let cc = Complex::new(c, T::zero());
        let lo = a.saturating_sub(3);
        for i in lo..a {
            let (x, y) = (self.get(a, i), self.get(b, i));
            self.set(a, i, cc * x + s * y);
            self.set(b, i, -s.conj() * x + cc * y);
        }
        for i in (b + 1)..n.min(b + 3) {
            let (x, y) = (self.get(i, a), self.get(i, b));
            self.set(i, a, x * cc + y * s.conj());
            self.set(i, b, -x * s + y * cc);
        }
        let alpha = self.a[a][0].re;
        let delta = self.a[b][0].re;
        let beta = self.a[b][1];
        let c2 = c * c;
        let s2 = s.norm_sqr();
        let cross = (cc * s * beta).re * T::lit(2.0);
        let new_a = c2 * alpha + cross + s2 * delta;
        let new_d = s2 * alpha - cross + c2 * delta;
        let new_b = -cc * s.conj() * alpha + cc * cc * beta - s.conj() * s.conj() * beta.conj() + cc * s.conj() * delta;
        self.a[a][0] = Complex::new(new_a, T::zero());
        self.a[b][0] = Complex::new(new_d, T::zero());
        self.a[b][1] = new_b;
    }

    /// Zeroes `A[b][k]` (with `b = p + 1`) against `A[p][k]`.
    fn annihilate(&mut self, p: usize, k: usize) {
        let u = self.get(p, k);
        let w = self.get(p + 1, k);
        if w.norm() == T::zero() {
            return;
        }
        let rho = u.norm().hypot(w.norm());
        let (c, s) = if u.norm() == T::zero() {
            (T::zero(), Complex::new(T::one(), T::zero()))
        } else {
            (u.norm() / rho, w.conj() * u / (u.norm() * rho))
        };
        self.rotate(p, c, s);
        self.set(p + 1, k, Complex::new(T::zero(), T::zero()));
    }

    fn reduce(&mut self) {
        let n = self.n;
        for j in 0..n.saturating_sub(2) {
            self.annihilate(j + 1, j);
            // Chase the bulge created two rows further down.
            let mut k = j + 1;
            let mut row = j + 4;
            while row < n {
                self.annihilate(row - 1, k);
                k = row - 1;
                row += 2;
            }
        }
    }

    fn into_tridiagonal(self) -> SymTridiagonal<T> {
        let diag = self.a.iter().map(|r| r[0].re).collect();
        let off = self.a.iter().skip(1).map(|r| r[1].norm()).collect();
        SymTridiagonal { diag, off }
    }
}

/// Real periodic Jacobi matrix with positive couplings `off[i]` between
/// `i` and `(i + 1) mod n`, `n >= 3`.
///
/// A cyclic chain with complex links is unitarily equivalent to this
/// matrix with Bloch phase `Φ = arg Π links`; its eigenvalues solve
/// `D(λ) = 2 cos Φ`, where `D` is the trace of the transfer matrix over
/// one period. The chain with site 0 removed has one eigenvalue in each
/// closed gap of `{|D| <= 2}`, which isolates the roots band by band.
#[derive(Clone, Debug)]
pub struct PeriodicJacobi<T> {
    diag: Vec<T>,
    off: Vec<T>,
    open: SymTridiagonal<T>,
}

/// Transfer-matrix trace `mantissa · 2^exp`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Trace<T> {
    mantissa: T,
    exp: i32,
}

impl<T: Real> Trace<T> {
    /// `D - c`, clamped to `±4` once `D` is far outside `[-2, 2]`.
    fn excess(&self, c: T) -> T {
        let four = T::lit(4.0);
        if self.exp > 8 {
            return if self.mantissa >= T::zero() { four } else { -four };
        }
        (self.mantissa * T::lit(2f64.powi(self.exp)) - c).max(-four).min(four)
    }
}

/// Piece of an eigenvalue window between two points where counts are
/// reliable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment<T> {
    /// No gap point inside: at most one band, so at most one root,
    /// searched first in `search` (the band part of `[lo, hi]`).
    Gap { lo: T, hi: T, search: (T, T) },
    /// Gap points closer together than the evaluation noise of `D`: the
    /// bands here are flat to working precision and every root is
    /// reported at `center`.
    Cluster { lo: T, hi: T, center: T },
}

/// Count data at a segment end: open-chain count and `D`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Node<T> {
    x: T,
    open: usize,
    trace: Trace<T>,
}

/// Eigenvalue window prepared for repeated solves at different phases.
#[derive(Clone, Debug)]
pub struct FloquetWindow<T> {
    nodes: Vec<Node<T>>,
    segments: Vec<Segment<T>>,
    search_traces: Vec<Option<(Trace<T>, Trace<T>)>>,
}

impl<T> FloquetWindow<T> {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }
}

/// Gap points closer than this (relative) form one cluster.
const CLUSTER_WIDTH: f64 = 1e-9;

const SCALE_EXP: i32 = 64;

impl<T: Real> PeriodicJacobi<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Result<Self> {
        let n = diag.len();
        if n < 3 || off.len() != n {
            return Err(Error::invalid("periodic Jacobi matrix needs n >= 3 sites and n couplings"));
        }
        if off.iter().any(|a| !(*a > T::zero() && a.is_finite())) {
            return Err(Error::invalid("periodic Jacobi couplings must be positive"));
        }
        let open = SymTridiagonal { diag: diag[1..].to_vec(), off: off[1..n - 1].to_vec() };
        Ok(Self { diag, off, open })
    }

    /// Splits a cyclic chain into link moduli and the Bloch phase `Φ`.
    pub fn from_chain(chain: &CyclicChain<T>) -> Result<(Self, T)> {
        let phase = chain.links.iter().fold(T::zero(), |s, l| s + l.arg());
        let off = chain.links.iter().map(|l| l.norm()).collect();
        Ok((Self::new(chain.diag.clone(), off)?, phase))
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `D(x)`, rescaled by powers of two to avoid overflow.
    fn transfer_trace(&self, x: T) -> Trace<T> {
        let n = self.diag.len();
        let big = T::lit(2f64.powi(SCALE_EXP));
        let shrink = T::one() / big;
        // Columns (u_i, u_{i-1}) and (v_i, v_{i-1}) from the identity.
        let (mut u0, mut u1) = (T::one(), T::zero());
        let (mut v0, mut v1) = (T::zero(), T::one());
        let mut exp = 0i32;
        let mut prev = self.off[n - 1];
        for i in 0..n {
            let a = self.off[i];
            let t = (x - self.diag[i]) / a;
            let r = prev / a;
            let nu = t * u0 - r * u1;
            let nv = t * v0 - r * v1;
            u1 = u0;
            v1 = v0;
            u0 = nu;
            v0 = nv;
            prev = a;
            if u0.abs().max(v0.abs()).max(u1.abs()).max(v1.abs()) > big {
                u0 = u0 * shrink;
                u1 = u1 * shrink;
                v0 = v0 * shrink;
                v1 = v1 * shrink;
                exp += SCALE_EXP;
            }
        }
        Trace { mantissa: u0 + v1, exp }
    }

    fn excess(&self, x: T, c: T) -> T {
        self.transfer_trace(x).excess(c)
    }

    /// Band `m` (ascending) has `D` increasing.
    fn increasing(&self, m: usize) -> bool {
        (self.diag.len() - 1 - m) % 2 == 0
    }

    /// Eigenvalues below `x` at Bloch phase `phase`.
    pub fn count_below(&self, x: T, phase: T) -> usize {
        let m = self.open.count_below(x);
        let s = self.excess(x, T::lit(2.0) * phase.cos());
        let above = if self.increasing(m) { s > T::zero() } else { s < T::zero() };
        m + usize::from(above)
    }

    fn node(&self, x: T) -> Node<T> {
        Node { x, open: self.open.count_below(x), trace: self.transfer_trace(x) }
    }

    /// Eigenvalues below `node.x` at `c = 2 cos Φ`.
    fn node_count(&self, node: &Node<T>, c: T) -> usize {
        let s = node.trace.excess(c);
        let above = if self.increasing(node.open) { s > T::zero() } else { s < T::zero() };
        node.open + usize::from(above)
    }

    /// Splits `[lo, hi]` at clusters of gap points and locates the band in
    /// each gap segment.
    pub fn window(&self, lo: T, hi: T) -> FloquetWindow<T> {
        let empty = FloquetWindow { nodes: Vec::new(), segments: Vec::new(), search_traces: Vec::new() };
        if !(lo < hi) {
            return empty;
        }
        let tol = T::tol(1e-15, 4.0) * T::one().max(lo.abs()).max(hi.abs());
        let cuts = self.open.eigenvalues_in(lo, hi, tol);
        let eta = |x: T| T::lit(CLUSTER_WIDTH) * T::one().max(x.abs());
        let mut clusters: Vec<(T, T, T, usize)> = Vec::new();
        for &c in &cuts {
            match clusters.last_mut() {
                Some(cl) if c - cl.1 < eta(c) => {
                    cl.1 = c;
                    cl.2 = cl.2 + c;
                    cl.3 += 1;
                }
                _ => clusters.push((c, c, c, 1)),
            }
        }
        let mut xs = vec![lo];
        let mut kinds = Vec::new();
        for &(a, b, sum, n) in &clusters {
            let za = (a - eta(a)).max(lo);
            let zb = (b + eta(b)).min(hi);
            let last = *xs.last().expect("non-empty");
            if za > last {
                xs.push(za);
                kinds.push(None);
            }
            let start = *xs.last().expect("non-empty");
            if zb > start {
                xs.push(zb);
                kinds.push(Some(sum / T::from_count(n)));
            }
        }
        if hi > *xs.last().expect("non-empty") {
            xs.push(hi);
            kinds.push(None);
        }
        let nodes: Vec<Node<T>> = xs.iter().map(|&x| self.node(x)).collect();
        let two = T::lit(2.0);
        let mut segments = Vec::with_capacity(kinds.len());
        let mut search_traces = Vec::with_capacity(kinds.len());
        for (k, kind) in kinds.into_iter().enumerate() {
            let (a, b) = (&nodes[k], &nodes[k + 1]);
            match kind {
                Some(center) => {
                    segments.push(Segment::Cluster { lo: a.x, hi: b.x, center });
                    search_traces.push(None);
                }
                None => {
                    let inc = self.increasing(a.open);
                    let sign = |v: T| if inc { v } else { -v };
                    let edge = |c: T| {
                        let (fl, fh) = (sign(a.trace.excess(c)), sign(b.trace.excess(c)));
                        if fl > T::zero() {
                            a.x
                        } else if fh <= T::zero() {
                            b.x
                        } else {
                            illinois(|x| sign(self.excess(x, c)), a.x, b.x, fl, fh)
                        }
                    };
                    // Lower band edge solves D = -2 on increasing bands.
                    let (c_lo, c_hi) = if inc { (-two, two) } else { (two, -two) };
                    let (e0, e1) = (edge(c_lo), edge(c_hi));
                    let slack = T::tol(1e-15, 8.0) * T::one().max(e0.abs()).max(e1.abs());
                    let (s0, s1) = ((e0 - slack).max(a.x), (e1 + slack).min(b.x));
                    let (search, traces) = if s0 < s1 {
                        ((s0, s1), Some((self.transfer_trace(s0), self.transfer_trace(s1))))
                    } else {
                        ((a.x, b.x), Some((a.trace, b.trace)))
                    };
                    segments.push(Segment::Gap { lo: a.x, hi: b.x, search });
                    search_traces.push(traces);
                }
            }
        }
        FloquetWindow { nodes, segments, search_traces }
    }

    /// Eigenvalues at Bloch phase `phase` inside the window, ascending.
    pub fn eigenvalues_in(&self, window: &FloquetWindow<T>, phase: T) -> Vec<T> {
        let c = T::lit(2.0) * phase.cos();
        let counts: Vec<usize> = window.nodes.iter().map(|nd| self.node_count(nd, c)).collect();
        let mut out = Vec::new();
        for (k, seg) in window.segments.iter().enumerate() {
            let n = counts[k + 1].saturating_sub(counts[k]);
            if n == 0 {
                continue;
            }
            match *seg {
                Segment::Cluster { center, .. } => out.extend(std::iter::repeat(center).take(n)),
                Segment::Gap { lo, hi, search } => {
                    let a = &window.nodes[k];
                    let inc = self.increasing(a.open);
                    let sign = |v: T| if inc { v } else { -v };
                    let f = |x: T| sign(self.excess(x, c));
                    let (fl, fh) = (sign(a.trace.excess(c)), sign(window.nodes[k + 1].trace.excess(c)));
                    let (t0, t1) = window.search_traces[k].expect("gap segments carry traces");
                    let (sl, sh) = (sign(t0.excess(c)), sign(t1.excess(c)));
                    let root = if sl <= T::zero() && sh > T::zero() {
                        illinois(f, search.0, search.1, sl, sh)
                    } else if fl <= T::zero() && sh <= T::zero() && fh > T::zero() && search.1 < hi {
                        illinois(f, search.1, hi, sh, fh)
                    } else if fl <= T::zero() && sl > T::zero() && search.0 > lo {
                        illinois(f, lo, search.0, fl, sl)
                    } else if fl <= T::zero() && fh > T::zero() {
                        illinois(f, lo, hi, fl, fh)
                    } else {
                        (lo + hi) * T::lit(0.5)
                    };
                    out.extend(std::iter::repeat(root).take(n));
                }
            }
        }
        out
    }
}

/// Root of `f` in `[a, b]` with `f(a) <= 0 < f(b)`; bisects while either
/// end is clamped, then switches to the Illinois variant of regula falsi.
fn illinois<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T, mut fa: T, mut fb: T) -> T {
    let four = T::lit(4.0);
    let half = T::lit(0.5);
    let mut side = 0i8;
    for _ in 0..400 {
        let tol = T::tol(1e-16, 4.0) * T::lit(0.01).max(a.abs()).max(b.abs());
        if b - a <= tol {
            break;
        }
        let clamped = fa.abs() >= four || fb.abs() >= four;
        let mut x = if clamped { (a + b) * half } else { (a * fb - b * fa) / (fb - fa) };
        if !(x > a && x < b) {
            x = (a + b) * half;
            if !(x > a && x < b) {
                break;
            }
        }
        let fx = f(x);
        if fx > T::zero() {
            b = x;
            fb = fx;
            if side == 1 && !clamped {
                fa = fa * half;
            }
            side = 1;
        } else {
            a = x;
            fa = fx;
            if side == -1 && !clamped {
                fb = fb * half;
            }
            side = -1;
        }
    }
    if fb.abs() < fa.abs() {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn pseudo_random(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    fn random_hermitian(n: usize, seed: u64) -> HermitianMatrix<f64> {
        let mut r = pseudo_random(seed);
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, c(r(), 0.0));
            for j in 0..i {
                m.add_hermitian(i, j, c(r(), r()));
            }
        }
        m
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = HermitianMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => c(1.0, 0.0),
            (1, 1) => c(-2.0, 0.0),
            (1, 0) => c(0.5, 1.0),
            _ => c(0.5, -1.0),
        });
        let ev = hermitian_eigenvalues(&m).unwrap();
        let mid = -0.5;
        let rad = (1.5f64 * 1.5 + 1.25).sqrt();
        assert_abs_diff_eq!(ev[0], mid - rad, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], mid + rad, epsilon = 1e-14);
    }

    #[test]
    fn trace_and_frobenius_invariants() {
        let m = random_hermitian(40, 7);
        let ev = hermitian_eigenvalues(&m).unwrap();
        let tr: f64 = (0..40).map(|i| m.get(i, i).re).sum();
        let fro: f64 = (0..40).flat_map(|i| (0..40).map(move |j| (i, j))).map(|(i, j)| m.get(i, j).norm_sqr()).sum();
        assert_abs_diff_eq!(ev.iter().sum::<f64>(), tr, epsilon = 1e-11);
        assert_abs_diff_eq!(ev.iter().map(|x| x * x).sum::<f64>(), fro, epsilon = 1e-10);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = random_hermitian(4, 1);
        m.set(0, 1, c(5.0, 0.0));
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sturm_bisection_matches_ql() {
        let mut r = pseudo_random(3);
        let t = SymTridiagonal { diag: (0..50).map(|_| r()).collect(), off: (0..49).map(|_| r()).collect() };
        let all = t.eigenvalues().unwrap();
        let win = t.eigenvalues_in(-0.4, 0.3, 1e-14);
        let expect: Vec<f64> = all.iter().copied().filter(|&x| (-0.4..0.3).contains(&x)).collect();
        assert_eq!(win.len(), expect.len());
        for (a, b) in win.iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn cyclic_chain_reduction_matches_dense() {
        for n in [3usize, 4, 5, 8, 13, 40] {
            let mut r = pseudo_random(n as u64);
            let chain = CyclicChain::new((0..n).map(|_| r()).collect(), (0..n).map(|_| c(r(), r())).collect()).unwrap();
            let dense = hermitian_eigenvalues(&chain.to_dense()).unwrap();
            let fast = chain.eigenvalues().unwrap();
            for (a, b) in dense.iter().zip(&fast) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn short_chains_fold_onto_dense() {
        for n in [1usize, 2] {
            let chain = CyclicChain::new(vec![0.3; n], vec![c(0.2, 0.1); n]).unwrap();
            let dense = hermitian_eigenvalues(&chain.to_dense()).unwrap();
            assert_eq!(dense, chain.eigenvalues().unwrap());
        }
    }

    fn random_chain(n: usize, seed: u64) -> CyclicChain<f64> {
        let mut r = pseudo_random(seed);
        CyclicChain::new((0..n).map(|_| r()).collect(), (0..n).map(|_| c(r(), r())).collect()).unwrap()
    }

    #[test]
    fn floquet_roots_match_dense() {
        for n in [3usize, 4, 7, 12, 31] {
            let chain = random_chain(n, 100 + n as u64);
            let dense = hermitian_eigenvalues(&chain.to_dense()).unwrap();
            let (jac, phase) = PeriodicJacobi::from_chain(&chain).unwrap();
            let win = jac.window(-0.5, 0.7);
            let expect: Vec<f64> = dense.iter().copied().filter(|x| (-0.5..0.7).contains(x)).collect();
            let got = jac.eigenvalues_in(&win, phase);
            assert_eq!(got.len(), expect.len(), "n = {n}");
            for (a, b) in got.iter().zip(&expect) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
            for x in [-0.5, 0.0, 0.33, 0.9] {
                let k = dense.iter().filter(|&&e| e < x).count();
                assert_eq!(jac.count_below(x, phase), k);
            }
        }
    }

    #[test]
    fn floquet_ring_closed_form() {
        // Uniform ring: eigenvalues 2 cos(2π j/n + Φ/n).
        let n = 9;
        let phi = 0.7f64;
        let jac = PeriodicJacobi::new(vec![0.0; n], vec![1.0; n]).unwrap();
        let win = jac.window(-2.5, 2.5);
        let got = jac.eigenvalues_in(&win, phi);
        let mut expect: Vec<f64> =
            (0..n).map(|j| 2.0 * ((2.0 * std::f64::consts::PI * j as f64 + phi) / n as f64).cos()).collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got.len(), n);
        for (a, b) in got.iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }
}
