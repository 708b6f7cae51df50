//! Diffusion laws `a(·)`, their certification, the scalar reduction
//! `μ a(μ) = c` and the multi-solution staircase construction.

use crate::error::{Error, Result};

/// Number of uniform samples used when certifying bounds.
pub const CERTIFY_SAMPLES: usize = 10_000;
/// Number of scan cells in [`scalar_mu_roots`].
pub const ROOT_SCAN_CELLS: usize = 10_000;

/// Shape of the diffusion law. Non-constant laws are evaluated on a finite
/// domain and continued by constants outside it.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientLaw {
    Constant(f64),
    /// `a(s) = α / (β + s) + γ`.
    Rational {
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
    /// Linear interpolation through `(s_k, a_k)`, `s_k` strictly increasing.
    PiecewiseLinear(Vec<(f64, f64)>),
    /// Monotone piecewise-cubic (Fritsch–Carlson) interpolation of samples.
    Tabulated(MonotoneCubic),
}

/// Certified data for a coefficient on its declared domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification {
    pub lower: f64,
    pub upper: f64,
    /// Global Lipschitz constant (the law is constant outside its domain).
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionCoefficient {
    law: CoefficientLaw,
    domain: (f64, f64),
    cert: Certification,
}

impl DiffusionCoefficient {
    pub fn constant(value: f64) -> Result<Self> {
        Self::with_domain(CoefficientLaw::Constant(value), (f64::NEG_INFINITY, f64::INFINITY))
    }

    /// `α/(β+s) + γ` on `[lo, hi]`, constant outside.
    pub fn rational(alpha: f64, beta: f64, gamma: f64, domain: (f64, f64)) -> Result<Self> {
        if !(domain.0 > -beta) {
            return Err(Error::CoefficientRejected {
                witness: domain.0,
                reason: format!("domain reaches the pole at s = {}", -beta),
            });
        }
        Self::with_domain(CoefficientLaw::Rational { alpha, beta, gamma }, domain)
    }

    pub fn piecewise_linear(points: Vec<(f64, f64)>) -> Result<Self> {
        check_breakpoints(&points)?;
        let domain = (points[0].0, points[points.len() - 1].0);
        Self::with_domain(CoefficientLaw::PiecewiseLinear(points), domain)
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        check_breakpoints(&points)?;
        let domain = (points[0].0, points[points.len() - 1].0);
        Self::with_domain(CoefficientLaw::Tabulated(MonotoneCubic::new(points)), domain)
    }

    fn with_domain(law: CoefficientLaw, domain: (f64, f64)) -> Result<Self> {
        if !(domain.0 <= domain.1) {
            return Err(Error::InvalidArgument(format!("empty domain {domain:?}")));
        }
        if !matches!(law, CoefficientLaw::Constant(_)) && !(domain.0.is_finite() && domain.1.is_finite()) {
            return Err(Error::InvalidArgument(
                "non-constant coefficients need a finite domain".into(),
            ));
        }
        let mut out = Self {
            law,
            domain,
            cert: Certification {
                lower: 0.0,
                upper: 0.0,
                lipschitz: 0.0,
            },
        };
        out.cert = out.validate()?;
        Ok(out)
    }

    pub fn law(&self) -> &CoefficientLaw {
        &self.law
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn certification(&self) -> Certification {
        self.cert
    }

    /// Certified `m` with `m ≤ a(s)` for all real `s`.
    pub fn lower_bound(&self) -> f64 {
        self.cert.lower
    }

    /// Certified `M` with `a(s) ≤ M` for all real `s`.
    pub fn upper_bound(&self) -> f64 {
        self.cert.upper
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.law, CoefficientLaw::Constant(_))
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(self.domain.0, self.domain.1);
        match &self.law {
            CoefficientLaw::Constant(c) => *c,
            CoefficientLaw::Rational { alpha, beta, gamma } => alpha / (beta + s) + gamma,
            CoefficientLaw::PiecewiseLinear(pts) => {
                let k = segment(pts, s);
                let (x0, y0) = pts[k];
                let (x1, y1) = pts[k + 1];
                y0 + (y1 - y0) * (s - x0) / (x1 - x0)
            }
            CoefficientLaw::Tabulated(c) => c.eval(s),
        }
    }

    /// Right derivative; zero outside the domain and at its right end.
    pub fn eval_derivative(&self, s: f64) -> f64 {
        if s < self.domain.0 || s >= self.domain.1 {
            return 0.0;
        }
        match &self.law {
            CoefficientLaw::Constant(_) => 0.0,
            CoefficientLaw::Rational { alpha, beta, .. } => -alpha / (beta + s).powi(2),
            CoefficientLaw::PiecewiseLinear(pts) => {
                let k = segment(pts, s);
                (pts[k + 1].1 - pts[k].1) / (pts[k + 1].0 - pts[k].0)
            }
            CoefficientLaw::Tabulated(c) => c.derivative(s),
        }
    }

    /// Breakpoints of piecewise laws (empty for smooth laws).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.law {
            CoefficientLaw::PiecewiseLinear(pts) => pts.iter().map(|p| p.0).collect(),
            CoefficientLaw::Tabulated(c) => c.points.iter().map(|p| p.0).collect(),
            _ => Vec::new(),
        }
    }

    /// `sup |a'|` over `[lo, hi]`, computed exactly per law.
    pub fn max_abs_derivative(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.domain.0);
        let hi = hi.min(self.domain.1);
        if lo > hi {
            return 0.0;
        }
        match &self.law {
            CoefficientLaw::Constant(_) => 0.0,
            // |a'| = |α|/(β+s)² decreases on s > −β
            CoefficientLaw::Rational { alpha, beta, .. } => alpha.abs() / (beta + lo).powi(2),
            CoefficientLaw::PiecewiseLinear(pts) => pts
                .windows(2)
                .filter(|w| w[1].0 > lo && w[0].0 <= hi)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
            CoefficientLaw::Tabulated(c) => c.max_abs_derivative(lo, hi),
        }
    }

    /// Lipschitz constant on `[lo, hi]`.
    pub fn lipschitz_on(&self, lo: f64, hi: f64) -> f64 {
        self.max_abs_derivative(lo, hi)
    }

    /// Certify `m`, `M` and the Lipschitz constant by dense sampling plus
    /// exact enumeration of breakpoints and domain ends.
    pub fn validate(&self) -> Result<Certification> {
        let (lo, hi) = self.domain;
        let mut samples: Vec<f64> = Vec::new();
        if lo.is_finite() && hi.is_finite() {
            samples.extend((0..=CERTIFY_SAMPLES).map(|k| lo + (hi - lo) * k as f64 / CERTIFY_SAMPLES as f64));
        } else {
            samples.push(0.0);
        }
        samples.extend(self.breakpoints());
        if let CoefficientLaw::Tabulated(c) = &self.law {
            samples.extend(c.interior_extrema());
        }
        let mut lower = (f64::INFINITY, f64::NAN);
        let mut upper = f64::NEG_INFINITY;
        for &s in &samples {
            let v = self.eval(s);
            if !v.is_finite() {
                return Err(Error::CoefficientRejected {
                    witness: s,
                    reason: "non-finite value".into(),
                });
            }
            if v < lower.0 {
                lower = (v, s);
            }
            upper = upper.max(v);
        }
        if !(lower.0 > 0.0) {
            return Err(Error::CoefficientRejected {
                witness: lower.1,
                reason: format!("a = {} violates the positive lower bound", lower.0),
            });
        }
        Ok(Certification {
            lower: lower.0,
            upper,
            lipschitz: self.max_abs_derivative(lo, hi),
        })
    }

    /// `true` when `a` is nonincreasing on `[lo, hi]` (sampled at breakpoints
    /// and `CERTIFY_SAMPLES` uniform points).
    pub fn is_nonincreasing_on(&self, lo: f64, hi: f64) -> bool {
        let mut xs: Vec<f64> = (0..=CERTIFY_SAMPLES)
            .map(|k| lo + (hi - lo) * k as f64 / CERTIFY_SAMPLES as f64)
            .collect();
        xs.extend(self.breakpoints().into_iter().filter(|b| (lo..=hi).contains(b)));
        xs.sort_by(f64::total_cmp);
        xs.windows(2)
            .all(|w| self.eval(w[1]) <= self.eval(w[0]) * (1.0 + 1e-14) + 1e-300)
    }
}

fn check_breakpoints(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("need at least two breakpoints".into()));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::InvalidArgument("non-finite breakpoint".into()));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidArgument(
            "breakpoint abscissae must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Index `k` with `x_k ≤ s < x_{k+1}`, clamped to the last segment.
fn segment(points: &[(f64, f64)], s: f64) -> usize {
    let k = points.partition_point(|p| p.0 <= s);
    k.saturating_sub(1).min(points.len() - 2)
}

/// Fritsch–Carlson monotone cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    points: Vec<(f64, f64)>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    fn new(points: Vec<(f64, f64)>) -> Self {
        let n = points.len();
        let secant: Vec<f64> = points
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secant[0];
        slopes[n - 1] = secant[n - 2];
        for k in 1..n - 1 {
            let (d0, d1) = (secant[k - 1], secant[k]);
            if d0 * d1 <= 0.0 {
                slopes[k] = 0.0;
            } else {
                let h0 = points[k].0 - points[k - 1].0;
                let h1 = points[k + 1].0 - points[k].0;
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        Self { points, slopes }
    }

    fn eval(&self, s: f64) -> f64 {
        let k = segment(&self.points, s);
        let (x0, y0) = self.points[k];
        let (x1, y1) = self.points[k + 1];
        let h = x1 - x0;
        let t = (s - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * self.slopes[k + 1]
    }

    fn derivative(&self, s: f64) -> f64 {
        let k = segment(&self.points, s);
        self.segment_derivative(k, s)
    }

    fn segment_derivative(&self, k: usize, s: f64) -> f64 {
        let (x0, y0) = self.points[k];
        let (x1, y1) = self.points[k + 1];
        let h = x1 - x0;
        let t = (s - x0) / h;
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0 + (-6.0 * t2 + 6.0 * t) * y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * self.slopes[k]
            + (3.0 * t2 - 2.0 * t) * self.slopes[k + 1]
    }

    /// Vertex of each segment's quadratic derivative, if inside the segment.
    fn derivative_vertices(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for k in 0..self.points.len() - 1 {
            let (x0, y0) = self.points[k];
            let (x1, y1) = self.points[k + 1];
            let h = x1 - x0;
            // derivative in t: A t² + B t + C
            let a = (6.0 * y0 - 6.0 * y1) / h + 3.0 * self.slopes[k] + 3.0 * self.slopes[k + 1];
            let b = (-6.0 * y0 + 6.0 * y1) / h - 4.0 * self.slopes[k] - 2.0 * self.slopes[k + 1];
            if a != 0.0 {
                let t = -b / (2.0 * a);
                if t > 0.0 && t < 1.0 {
                    out.push((k, x0 + t * h));
                }
            }
        }
        out
    }

    /// Monotone pieces have extrema at nodes only; kept for completeness.
    fn interior_extrema(&self) -> Vec<f64> {
        self.derivative_vertices().into_iter().map(|(_, s)| s).collect()
    }

    fn max_abs_derivative(&self, lo: f64, hi: f64) -> f64 {
        let mut best: f64 = 0.0;
        for k in 0..self.points.len() - 1 {
            let (x0, x1) = (self.points[k].0, self.points[k + 1].0);
            let a = x0.max(lo);
            let b = x1.min(hi);
            if a > b {
                continue;
            }
            best = best.max(self.segment_derivative(k, a).abs());
            best = best.max(self.segment_derivative(k, b).abs());
        }
        for (k, s) in self.derivative_vertices() {
            if s >= lo && s <= hi {
                best = best.max(self.segment_derivative(k, s).abs());
            }
        }
        best
    }
}

/// Root of `μ a(μ) = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuRoot {
    pub mu: f64,
    /// Even-multiplicity (tangential) root: structurally unstable, flagged.
    pub tangential: bool,
}

/// `μ_max = 10 c / m`, the a-priori confinement of all roots (`μ ≤ c/m`).
pub fn default_mu_max(a: &DiffusionCoefficient, c: f64) -> f64 {
    if c > 0.0 {
        10.0 * c / a.lower_bound()
    } else {
        1.0
    }
}

/// All roots of `h(μ) = μ a(μ) − c` on `[0, μ_max]`, ascending.
///
/// Uniform scan for sign changes refined by bisection; grid nodes where
/// `|h|` already meets the tolerance are roots too, and are flagged
/// tangential when `h` keeps its sign across them.
pub fn scalar_mu_roots(a: &DiffusionCoefficient, c: f64, mu_max: f64) -> Result<Vec<MuRoot>> {
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("c = {c} must be nonnegative")));
    }
    if !(mu_max > 0.0 && mu_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu_max = {mu_max} must be positive")));
    }
    let h = |mu: f64| mu * a.eval(mu) - c;
    let dh = |mu: f64| a.eval(mu) + mu * a.eval_derivative(mu);
    let tol = 1e-12 * (1.0 + c);

    let cells = ROOT_SCAN_CELLS;
    let mus: Vec<f64> = (0..=cells).map(|k| mu_max * k as f64 / cells as f64).collect();
    let hs: Vec<f64> = mus.iter().map(|&m| h(m)).collect();
    let on_grid: Vec<bool> = hs.iter().map(|v| v.abs() <= tol).collect();

    let mut roots = Vec::new();
    for k in 0..=cells {
        if on_grid[k] {
            let left = (0..k).rev().find(|&j| !on_grid[j]).map(|j| hs[j].signum());
            let right = (k + 1..=cells).find(|&j| !on_grid[j]).map(|j| hs[j].signum());
            // collapse runs of on-grid zeros to their first node
            if k > 0 && on_grid[k - 1] {
                continue;
            }
            let tangential = match (left, right) {
                (Some(l), Some(r)) => l == r,
                _ => dh(mus[k]).abs() < 1e-8,
            };
            roots.push(MuRoot { mu: mus[k], tangential });
        }
    }
    for k in 0..cells {
        if on_grid[k] || on_grid[k + 1] || hs[k].signum() == hs[k + 1].signum() {
            continue;
        }
        let (mut lo, mut hi) = (mus[k], mus[k + 1]);
        let mut hlo = hs[k];
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let hm = h(mid);
            if hm.abs() <= tol || hi - lo <= f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
                break;
            }
            if hm.signum() == hlo.signum() {
                lo = mid;
                hlo = hm;
            } else {
                hi = mid;
            }
        }
        roots.push(MuRoot {
            mu: mid,
            tangential: dh(mid).abs() < 1e-8,
        });
    }
    roots.sort_by(|x, y| x.mu.total_cmp(&y.mu));
    Ok(roots)
}

/// Piecewise-linear coefficient with `(n₁+1)/2` designed root intervals.
#[derive(Debug, Clone)]
pub struct Staircase {
    pub coefficient: DiffusionCoefficient,
    /// `(m_i, a(m_i))` for `i = 0..=n₁`, with `m_0 = 0`.
    pub breakpoints: Vec<(f64, f64)>,
    pub c_min: f64,
    pub c_max: f64,
}

impl Staircase {
    /// Designed intervals `[m_i, m_{i+1}]` for even `i`.
    pub fn designed_intervals(&self) -> Vec<(f64, f64)> {
        self.breakpoints
            .chunks(2)
            .filter(|c| c.len() == 2)
            .map(|c| (c[0].0, c[1].0))
            .collect()
    }
}

/// Build a decreasing-by-pieces coefficient such that every `c ∈ [c_min,
/// c_max]` has one root of `μ a(μ) = c` inside each designed interval.
///
/// `m₁ = 2 c_max / a₀`, `a(m₁) = a₀/2`, and for each further pair
/// `m_i = 2 m_{i−1}`, `a(m_i) = c_min / m_i`, `m_{i+1} = 2 c_max / a(m_i)`,
/// `a(m_{i+1}) = a(m_i)/2`.
pub fn staircase_builder(c_min: f64, c_max: f64, a0: f64, n1: usize) -> Result<Staircase> {
    if !(c_min > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "staircase infeasible: min I_r = {c_min} must be positive"
        )));
    }
    if !(c_max >= c_min) || !c_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need c_min ≤ c_max, got [{c_min}, {c_max}]"
        )));
    }
    if !(a0 > 0.0) {
        return Err(Error::InvalidArgument(format!("a(0) = {a0} must be positive")));
    }
    if n1.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("n1 = {n1} must be odd")));
    }
    let m1 = 2.0 * c_max / a0;
    let mut pts = vec![(0.0, a0), (m1, a0 / 2.0)];
    while pts.len() < n1 + 1 {
        let prev = pts[pts.len() - 1].0;
        let mi = 2.0 * prev;
        let ai = c_min / mi;
        let mnext = 2.0 * c_max / ai;
        pts.push((mi, ai));
        pts.push((mnext, ai / 2.0));
    }
    let coefficient = DiffusionCoefficient::piecewise_linear(pts.clone())?;
    Ok(Staircase {
        coefficient,
        breakpoints: pts,
        c_min,
        c_max,
    })
}

/// Checks `a(m_lo) = max a`, `a(m_hi) = min a` on `[m_lo, m_hi]` and
/// `[c_min, c_max] ⊆ [m_lo a(m_lo), m_hi a(m_hi)]`.
pub fn interval_condition_check(a: &DiffusionCoefficient, m_lo: f64, m_hi: f64, c_min: f64, c_max: f64) -> bool {
    if !(0.0 <= m_lo && m_lo <= m_hi) {
        return false;
    }
    let top = a.eval(m_lo);
    let bottom = a.eval(m_hi);
    let samples = (0..=CERTIFY_SAMPLES).map(|k| m_lo + (m_hi - m_lo) * k as f64 / CERTIFY_SAMPLES as f64);
    for s in samples.chain(a.breakpoints().into_iter().filter(|b| (m_lo..=m_hi).contains(b))) {
        let v = a.eval(s);
        if v > top + 1e-10 || v < bottom - 1e-10 {
            return false;
        }
    }
    let slack = 1e-12 * (1.0 + c_max.abs());
    m_lo * top <= c_min + slack && c_max <= m_hi * bottom + slack
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rational() -> DiffusionCoefficient {
        DiffusionCoefficient::rational(1.0, 1.0, 0.0, (-0.5, 10.0)).unwrap()
    }

    #[test]
    fn eval_examples() {
        let c = DiffusionCoefficient::constant(2.0).unwrap();
        assert_eq!(c.eval(-5.0), 2.0);
        assert_eq!(c.eval_derivative(3.0), 0.0);

        let r = rational();
        assert_eq!(r.eval(1.0), 0.5);
        assert_eq!(r.eval_derivative(1.0), -0.25);

        let p = DiffusionCoefficient::piecewise_linear(vec![(0.0, 1.0), (1.0, 0.5)]).unwrap();
        assert_eq!(p.eval(0.5), 0.75);
        assert_eq!(p.eval(7.0), 0.5);
        assert_eq!(p.eval(-1.0), 1.0);
        assert_eq!(p.eval_derivative(0.0), -0.5);
        assert_eq!(p.eval_derivative(1.0), 0.0);
    }

    #[test]
    fn right_derivative_at_breakpoints() {
        let p = DiffusionCoefficient::piecewise_linear(vec![(0.0, 2.0), (1.0, 1.0), (3.0, 0.0 + 0.5)]).unwrap();
        assert_eq!(p.eval_derivative(1.0), -0.25);
        assert_eq!(p.eval_derivative(0.999), -1.0);
    }

    #[test]
    fn validate_examples() {
        let r = DiffusionCoefficient::rational(1.0, 1.0, 0.0, (0.0, 10.0)).unwrap();
        let cert = r.validate().unwrap();
        assert!((cert.lower - 1.0 / 11.0).abs() < 1e-15);
        assert_eq!(cert.upper, 1.0);
        assert_eq!(cert.lipschitz, 1.0);

        let c = DiffusionCoefficient::constant(3.0).unwrap().validate().unwrap();
        assert_eq!((c.lower, c.upper, c.lipschitz), (3.0, 3.0, 0.0));

        match DiffusionCoefficient::piecewise_linear(vec![(0.0, 0.0), (1.0, 1.0)]) {
            Err(Error::CoefficientRejected { witness, .. }) => assert!(witness.abs() < 1e-3),
            other => panic!("expected rejection, got {other:?}"),
        }
        assert!(DiffusionCoefficient::constant(-1.0).is_err());
        assert!(DiffusionCoefficient::rational(1.0, 1.0, 0.0, (-1.0, 2.0)).is_err());
    }

    #[test]
    fn tabulated_is_monotone_and_interpolates() {
        let t = DiffusionCoefficient::tabulated(vec![(0.0, 2.0), (1.0, 1.5), (2.0, 0.5), (4.0, 0.4)]).unwrap();
        assert_eq!(t.eval(1.0), 1.5);
        assert_eq!(t.eval(4.0), 0.4);
        assert!(t.is_nonincreasing_on(0.0, 4.0));
        let cert = t.certification();
        assert_eq!(cert.lower, 0.4);
        assert_eq!(cert.upper, 2.0);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let laws = [
            rational(),
            DiffusionCoefficient::tabulated(vec![(0.0, 2.0), (1.0, 1.5), (2.0, 0.5), (4.0, 0.4)]).unwrap(),
            DiffusionCoefficient::piecewise_linear(vec![(0.0, 2.0), (1.0, 1.0), (3.0, 0.5)]).unwrap(),
        ];
        for a in &laws {
            let (lo, hi) = a.domain();
            for k in 0..100 {
                let s = lo + (hi - lo) * (k as f64 + 0.37) / 100.0;
                if a.breakpoints().iter().any(|b| (b - s).abs() < 1e-3) {
                    continue;
                }
                let h = 1e-6;
                let fd = (a.eval(s + h) - a.eval(s - h)) / (2.0 * h);
                let d = a.eval_derivative(s);
                assert!((fd - d).abs() <= 1e-6 * (1.0 + d.abs()), "s={s} fd={fd} d={d}");
            }
        }
    }

    #[test]
    fn mu_roots_examples() {
        let r = rational();
        let roots = scalar_mu_roots(&r, 0.5, default_mu_max(&r, 0.5)).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].mu - 1.0).abs() < 1e-10);
        assert!(!roots[0].tangential);

        let roots = scalar_mu_roots(&r, 0.0, 1.0).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].mu, 0.0);

        assert!(scalar_mu_roots(&r, -1.0, 1.0).is_err());
    }

    #[test]
    fn mu_roots_flags_tangency() {
        // μ a(μ) rises to 2 at μ = 2, dips, then grows again past μ = 3
        let a = DiffusionCoefficient::piecewise_linear(vec![(0.0, 2.0), (2.0, 1.0), (3.0, 0.4)]).unwrap();
        let roots = scalar_mu_roots(&a, 2.0, 8.0).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].mu - 2.0).abs() < 1e-6 && roots[0].tangential);
        assert!((roots[1].mu - 5.0).abs() < 1e-9 && !roots[1].tangential);
    }

    #[test]
    fn staircase_examples() {
        let s1 = staircase_builder(0.5, 1.0, 2.0, 1).unwrap();
        assert_eq!(s1.breakpoints, vec![(0.0, 2.0), (1.0, 1.0)]);
        assert!(interval_condition_check(&s1.coefficient, 0.0, 1.0, 0.5, 1.0));

        let s3 = staircase_builder(0.5, 1.0, 2.0, 3).unwrap();
        assert_eq!(s3.breakpoints, vec![(0.0, 2.0), (1.0, 1.0), (2.0, 0.25), (8.0, 0.125)]);
        for (lo, hi) in s3.designed_intervals() {
            assert!(interval_condition_check(&s3.coefficient, lo, hi, 0.5, 1.0));
        }
        assert!(staircase_builder(0.5, 1.0, 2.0, 2).is_err());
        assert!(staircase_builder(0.0, 1.0, 2.0, 3).is_err());
    }

    #[test]
    fn staircase_roots_land_in_designed_intervals() {
        let s = staircase_builder(0.5, 1.0, 2.0, 3).unwrap();
        let a = &s.coefficient;
        let c = 0.75;
        let roots = scalar_mu_roots(a, c, default_mu_max(a, c)).unwrap();
        let designed = s.designed_intervals();
        let inside: Vec<_> = roots
            .iter()
            .filter(|r| designed.iter().any(|(lo, hi)| r.mu >= *lo && r.mu <= *hi))
            .collect();
        assert_eq!(inside.len(), 2);
        assert!(inside[0].mu < 1.0 && inside[1].mu > 2.0);
        // the continuous law forces one more crossing in the gap [m1, m2]
        assert_eq!(roots.len(), 3);
        for r in &roots {
            assert!((r.mu * a.eval(r.mu) - c).abs() <= 1e-10 * (1.0 + c));
        }
    }

    #[test]
    fn interval_check_examples() {
        let one = DiffusionCoefficient::constant(1.0).unwrap();
        assert!(interval_condition_check(&one, 0.0, 2.0, 0.5, 1.5));
        let up = DiffusionCoefficient::piecewise_linear(vec![(0.0, 1.0), (2.0, 2.0)]).unwrap();
        assert!(!interval_condition_check(&up, 0.0, 2.0, 0.5, 1.0));
    }
}
