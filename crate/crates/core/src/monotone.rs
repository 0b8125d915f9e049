//! Maximal monotone graphs on the real line and their regularization calculus.
//!
//! A graph is stored as a pair of sections `lower`/`upper`: at a jump point
//! the vertical segment `[lower(r), upper(r)]` is filled in, everywhere else
//! the two sections agree. All derived objects (resolvent, Yosida
//! approximation, Moreau envelope, convex potential and its conjugate) are
//! computed from the sections, with closed forms where the kind admits one.

use crate::error::{Error, Result};
use std::path::Path;

/// Absolute tolerance on the resolvent argument for the bisection solve.
/// Iteration continues past it while the midpoint still separates the
/// bracket, so the practical accuracy is the double-precision floor.
pub const BISECTION_TOL: f64 = 1e-13;
/// Hard cap on bisection iterations.
pub const BISECTION_MAX_ITERS: usize = 200;

/// A maximal monotone graph on the real line, jumps filled in.
///
/// `Shifted` translates the value set upward by a constant, `QuasiShift`
/// subtracts `beta * r` from a monotone base and therefore is only
/// quasi-monotone itself; the solver treats that kind by splitting the
/// linear part off, but the pointwise calculus below still accepts it
/// whenever the underlying map stays strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub enum Graph {
    /// f(r) = slope * r, slope >= 0.
    Linear { slope: f64 },
    /// f(r) = r * |r|^(exponent - 1), exponent >= 1.
    Power { exponent: f64 },
    /// Sign graph with the vertical segment [-1, 1] at the origin.
    Sign,
    /// f(r) = exp(r) - 1.
    ExpMinusOne,
    /// Increasing function sampled on a grid, linear between samples.
    Tabulated(Tabulated),
    /// base(r) + offset.
    Shifted { base: Box<Graph>, offset: f64 },
    /// base(r) - beta * r with beta >= 0.
    QuasiShift { base: Box<Graph>, beta: f64 },
}

impl Graph {
    pub fn linear(slope: f64) -> Result<Self> {
        if !slope.is_finite() || slope < 0.0 {
            return Err(Error::config(format!(
                "linear graph needs slope >= 0, got {slope}"
            )));
        }
        Ok(Graph::Linear { slope })
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if !exponent.is_finite() || exponent < 1.0 {
            return Err(Error::config(format!(
                "power graph needs exponent >= 1, got {exponent}"
            )));
        }
        Ok(Graph::Power { exponent })
    }

    pub fn sign() -> Self {
        Graph::Sign
    }

    pub fn exp_minus_one() -> Self {
        Graph::ExpMinusOne
    }

    pub fn tabulated(table: Tabulated) -> Self {
        Graph::Tabulated(table)
    }

    pub fn shifted(base: Graph, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::config("graph offset must be finite"));
        }
        Ok(Graph::Shifted {
            base: Box::new(base),
            offset,
        })
    }

    pub fn quasi_shift(base: Graph, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::config(format!(
                "quasi-monotone shift needs beta >= 0, got {beta}"
            )));
        }
        Ok(Graph::QuasiShift {
            base: Box::new(base),
            beta,
        })
    }

    /// Lower section f^-(r): the left limit of the filled graph at r.
    pub fn lower_section(&self, r: f64) -> f64 {
        match self {
            Graph::Linear { slope } => slope * r,
            Graph::Power { exponent } => power_value(*exponent, r),
            Graph::Sign => {
                if r < 0.0 {
                    -1.0
                } else if r > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Graph::ExpMinusOne => r.exp_m1(),
            Graph::Tabulated(t) => t.lower(r),
            Graph::Shifted { base, offset } => base.lower_section(r) + offset,
            Graph::QuasiShift { base, beta } => base.lower_section(r) - beta * r,
        }
    }

    /// Upper section f^+(r): the right limit of the filled graph at r.
    pub fn upper_section(&self, r: f64) -> f64 {
        match self {
            // right limit: the jump at 0 closes upward
            Graph::Sign => {
                if r < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            Graph::Tabulated(t) => t.upper(r),
            Graph::Shifted { base, offset } => base.upper_section(r) + offset,
            Graph::QuasiShift { base, beta } => base.upper_section(r) - beta * r,
            _ => self.lower_section(r),
        }
    }

    /// Element of [f^-(x), f^+(x)] of least modulus.
    pub fn minimal_section(&self, x: f64) -> f64 {
        let lo = self.lower_section(x);
        let hi = self.upper_section(x);
        if lo > 0.0 {
            lo
        } else if hi < 0.0 {
            hi
        } else {
            0.0
        }
    }

    /// Whether the filled graph contains the origin.
    pub fn contains_origin(&self) -> bool {
        self.lower_section(0.0) <= 0.0 && self.upper_section(0.0) >= 0.0
    }

    /// Total coefficient of the `-beta * r` parts, zero for monotone kinds.
    pub fn quasi_coefficient(&self) -> f64 {
        match self {
            Graph::QuasiShift { base, beta } => beta + base.quasi_coefficient(),
            Graph::Shifted { base, .. } => base.quasi_coefficient(),
            _ => 0.0,
        }
    }

    /// Resolvent y = (id + lambda f)^{-1}(x): the unique y with
    /// x in y + lambda [f^-(y), f^+(y)].
    ///
    /// Closed forms for `Linear` and `Sign`; a translation shortcut for
    /// `Shifted`; everything else runs the bracketing bisection, which
    /// absorbs jumps by testing the full value interval at the midpoint.
    pub fn resolvent(&self, lambda: f64, x: f64) -> Result<f64> {
        check_lambda(lambda)?;
        if !x.is_finite() {
            return Err(Error::config("resolvent argument must be finite"));
        }
        let qc = self.quasi_coefficient();
        if lambda * qc >= 1.0 {
            return Err(Error::config(format!(
                "resolvent undefined: lambda * beta = {} >= 1",
                lambda * qc
            )));
        }
        match self {
            Graph::Linear { slope } => Ok(x / (1.0 + lambda * slope)),
            Graph::Sign => {
                // soft threshold
                if x > lambda {
                    Ok(x - lambda)
                } else if x < -lambda {
                    Ok(x + lambda)
                } else {
                    Ok(0.0)
                }
            }
            Graph::Shifted { base, offset } => base.resolvent(lambda, x - lambda * offset),
            _ => self.resolvent_bisection(lambda, x),
        }
    }

    fn resolvent_bisection(&self, lambda: f64, x: f64) -> Result<f64> {
        let phi_lo = |y: f64| y + lambda * self.lower_section(y);
        let phi_hi = |y: f64| y + lambda * self.upper_section(y);

        // Bracket the solution; the identity part forces phi to +-infinity.
        let mut lo = x.min(0.0) - 1.0;
        let mut hi = x.max(0.0) + 1.0;
        let mut step = 1.0 + x.abs();
        for _ in 0..BISECTION_MAX_ITERS {
            if phi_lo(lo) <= x {
                break;
            }
            lo -= step;
            step *= 2.0;
        }
        step = 1.0 + x.abs();
        for _ in 0..BISECTION_MAX_ITERS {
            if phi_hi(hi) >= x {
                break;
            }
            hi += step;
            step *= 2.0;
        }
        if phi_lo(lo) > x || phi_hi(hi) < x {
            return Err(Error::numerical(format!(
                "resolvent bracket not found for x = {x}, lambda = {lambda}"
            )));
        }

        for _ in 0..BISECTION_MAX_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                // interval no longer splits in double precision
                return Ok(mid);
            }
            if phi_lo(mid) > x {
                hi = mid;
            } else if phi_hi(mid) < x {
                lo = mid;
            } else {
                // x lands inside the value interval at mid: jump point
                return Ok(mid);
            }
        }
        let width = hi - lo;
        if width <= BISECTION_TOL {
            return Ok(0.5 * (lo + hi));
        }
        Err(Error::numerical(format!(
            "resolvent bisection stalled at width {width:e} for x = {x}"
        )))
    }

    /// Yosida approximation f_lambda(x) = (x - resolvent(x)) / lambda.
    ///
    /// For single-valued kinds the equivalent form f(J_lambda(x)) is used
    /// instead of the difference quotient: it is exact in the same sense
    /// and keeps the value inside the closure of the graph's range, which
    /// the difference quotient misses by rounding (e.g. |f_lambda| =
    /// 1 + ulp for the sign graph, turning its conjugate spuriously
    /// infinite in downstream certificates).
    pub fn yosida(&self, lambda: f64, x: f64) -> Result<f64> {
        check_lambda(lambda)?;
        match self {
            Graph::Linear { slope } => Ok(slope * self.resolvent(lambda, x)?),
            Graph::Power { exponent } => Ok(power_value(*exponent, self.resolvent(lambda, x)?)),
            Graph::Sign => {
                if !x.is_finite() {
                    return Err(Error::config(format!("non-finite input {x}")));
                }
                Ok(x.signum() * (x.abs() / lambda).min(1.0))
            }
            Graph::ExpMinusOne => Ok(self.resolvent(lambda, x)?.exp_m1()),
            Graph::Shifted { base, offset } => {
                Ok(base.yosida(lambda, x - lambda * offset)? + offset)
            }
            _ => {
                let y = self.resolvent(lambda, x)?;
                Ok((x - y) / lambda)
            }
        }
    }

    /// Convex potential F(x) = integral of f^+ from 0 to x.
    ///
    /// F(0) = 0 by construction; F >= 0 exactly when the graph contains the
    /// origin. For `QuasiShift` this is the potential of the full
    /// (non-monotone) drift, which is no longer convex.
    pub fn potential(&self, x: f64) -> f64 {
        match self {
            Graph::Linear { slope } => 0.5 * slope * x * x,
            Graph::Power { exponent } => x.abs().powf(exponent + 1.0) / (exponent + 1.0),
            Graph::Sign => x.abs(),
            Graph::ExpMinusOne => x.exp_m1() - x,
            Graph::Tabulated(t) => t.integral_from_zero(x),
            Graph::Shifted { base, offset } => base.potential(x) + offset * x,
            Graph::QuasiShift { base, beta } => base.potential(x) - 0.5 * beta * x * x,
        }
    }

    /// Moreau envelope F_lambda(x) = |x - J|^2 / (2 lambda) + F(J) with
    /// J the resolvent point.
    pub fn moreau(&self, lambda: f64, x: f64) -> Result<f64> {
        let j = self.resolvent(lambda, x)?;
        let d = x - j;
        Ok(d * d / (2.0 * lambda) + self.potential(j))
    }

    /// Convex conjugate F*(y) = sup_x (x y - F(x)), extended-real valued:
    /// `f64::INFINITY` outside the closure of the range of f.
    ///
    /// Domain boundaries are tested with a few ulps of slack and evaluate
    /// to the closure's boundary value: a section translated by a
    /// non-representable offset rounds up to one ulp outside the exact
    /// range, and a strict test would flip such points to +infinity.
    ///
    /// Undefined for `QuasiShift` (the potential is not convex there).
    pub fn conjugate(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::config("conjugate argument must be finite"));
        }
        match self {
            Graph::Linear { slope } => {
                if *slope > 0.0 {
                    Ok(y * y / (2.0 * slope))
                } else if y.abs() <= domain_tol(y) {
                    Ok(0.0)
                } else {
                    Ok(f64::INFINITY)
                }
            }
            Graph::Power { exponent } => {
                let q = (exponent + 1.0) / exponent;
                Ok(y.abs().powf(q) / q)
            }
            Graph::Sign => {
                if y.abs() <= 1.0 + domain_tol(y) {
                    Ok(0.0)
                } else {
                    Ok(f64::INFINITY)
                }
            }
            Graph::ExpMinusOne => {
                if y > -1.0 {
                    Ok((1.0 + y) * y.ln_1p() - y)
                } else if y >= -1.0 - domain_tol(y) {
                    Ok(1.0)
                } else {
                    Ok(f64::INFINITY)
                }
            }
            Graph::Tabulated(t) => Ok(t.conjugate(y)),
            Graph::Shifted { base, offset } => base.conjugate(y - offset),
            Graph::QuasiShift { .. } => Err(Error::config(
                "conjugate undefined for a quasi-monotone graph",
            )),
        }
    }

    /// Fenchel-Young gap F(x) + F*(y) - x y, nonnegative up to rounding,
    /// zero exactly on the graph, +infinity where the conjugate is.
    pub fn fenchel_gap(&self, x: f64, y: f64) -> Result<f64> {
        let fstar = self.conjugate(y)?;
        if fstar.is_infinite() {
            return Ok(f64::INFINITY);
        }
        Ok(self.potential(x) + fstar - x * y)
    }
}

/// The pair (f, F) with f the subdifferential of the convex potential F.
///
/// A thin view over a monotone graph that guarantees at construction that
/// the convex calculus applies: `QuasiShift` drifts are rejected (their
/// potential is not convex), everything else carries F(x) = integral of
/// f^+ from 0 to x and its conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPotential {
    graph: Graph,
}

impl ConvexPotential {
    pub fn new(graph: Graph) -> Result<ConvexPotential> {
        if graph.quasi_coefficient() != 0.0 {
            return Err(Error::config(
                "quasi-monotone drifts have no convex potential; \
                 split off the linear part first",
            ));
        }
        Ok(ConvexPotential { graph })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// F(x); F(0) = 0 always, F >= 0 whenever the graph contains the origin.
    pub fn value(&self, x: f64) -> f64 {
        self.graph.potential(x)
    }

    /// F*(y), extended-real: +infinity outside the closure of the range of f.
    pub fn conjugate(&self, y: f64) -> Result<f64> {
        self.graph.conjugate(y)
    }

    pub fn gap(&self, x: f64, y: f64) -> Result<f64> {
        self.graph.fenchel_gap(x, y)
    }

    pub fn moreau(&self, lambda: f64, x: f64) -> Result<f64> {
        self.graph.moreau(lambda, x)
    }
}

/// Slack for the conjugate's effective-domain tests, relative to the
/// tested value. Covers the rounding of one add/subtract pair, which is
/// how far a translated section can land outside the exact range.
fn domain_tol(y: f64) -> f64 {
    4.0 * f64::EPSILON * y.abs().max(1.0)
}

/// f(r) = r |r|^(p-1) evaluated without sign loss.
fn power_value(p: f64, r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r.signum() * r.abs().powf(p)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::config(format!(
            "regularization parameter must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Increasing function given by samples, linear between them, the boundary
/// segment slopes continued beyond the table.
///
/// Each abscissa carries a value interval `[lo, hi]`; intervals of positive
/// length are jumps. Tables loaded from CSV have `lo == hi` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    r: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// integral of the interpolant from r[0] to r[i], trapezoid-exact
    prefix: Vec<f64>,
    /// integral of the interpolant from r[0] to 0
    at_zero: f64,
    slope_left: f64,
    slope_right: f64,
}

impl Tabulated {
    /// Table without jumps: points (r_i, y_i), r strictly increasing,
    /// y nondecreasing.
    pub fn from_samples(points: &[(f64, f64)]) -> Result<Self> {
        let sections: Vec<(f64, f64, f64)> = points.iter().map(|&(r, y)| (r, y, y)).collect();
        Self::from_sections(&sections)
    }

    /// Table with explicit value intervals: (r_i, lo_i, hi_i). A jump at
    /// r_i is expressed as lo_i < hi_i.
    pub fn from_sections(points: &[(f64, f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::config(format!(
                "table needs at least 2 points, got {}",
                points.len()
            )));
        }
        let n = points.len();
        let mut r = Vec::with_capacity(n);
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for (i, &(ri, li, ui)) in points.iter().enumerate() {
            if !(ri.is_finite() && li.is_finite() && ui.is_finite()) {
                return Err(Error::config(format!(
                    "table row {i} holds a non-finite value"
                )));
            }
            if li > ui {
                return Err(Error::config(format!(
                    "table row {i}: interval [{li}, {ui}] is empty"
                )));
            }
            if let Some(&prev) = r.last() {
                if ri <= prev {
                    return Err(Error::config(format!(
                        "table abscissae must be strictly increasing, row {i}: {ri} <= {prev}"
                    )));
                }
            }
            if let Some(&prev_hi) = hi.last() {
                if li < prev_hi {
                    return Err(Error::config(format!(
                        "table values must be nondecreasing, row {i}: {li} < {prev_hi}"
                    )));
                }
            }
            r.push(ri);
            lo.push(li);
            hi.push(ui);
        }

        let mut prefix = vec![0.0; n];
        for i in 1..n {
            let seg = 0.5 * (hi[i - 1] + lo[i]) * (r[i] - r[i - 1]);
            prefix[i] = prefix[i - 1] + seg;
        }
        let slope_left = (lo[1] - hi[0]) / (r[1] - r[0]);
        let slope_right = (lo[n - 1] - hi[n - 2]) / (r[n - 1] - r[n - 2]);
        let mut table = Tabulated {
            r,
            lo,
            hi,
            prefix,
            at_zero: 0.0,
            slope_left,
            slope_right,
        };
        table.at_zero = table.integral_from_first(0.0);
        Ok(table)
    }

    /// Load a two-column CSV `r,f(r)`. Lines starting with `#` and blank
    /// lines are skipped; a leading non-numeric header row is tolerated.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut points = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::config(format!(
                        "{}:{}: expected two comma-separated columns",
                        path.display(),
                        lineno + 1
                    )))
                }
            };
            if cols.next().is_some() {
                return Err(Error::config(format!(
                    "{}:{}: expected exactly two columns",
                    path.display(),
                    lineno + 1
                )));
            }
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => points.push((x, y)),
                _ if lineno == 0 && points.is_empty() => continue, // header row
                _ => {
                    return Err(Error::config(format!(
                        "{}:{}: cannot parse '{a}', '{b}' as numbers",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_samples(&points).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn n(&self) -> usize {
        self.r.len()
    }

    /// Index of the last abscissa <= x, or None if x precedes the table.
    fn locate(&self, x: f64) -> Option<usize> {
        if x < self.r[0] {
            return None;
        }
        Some(self.r.partition_point(|&ri| ri <= x) - 1)
    }

    fn lower(&self, x: f64) -> f64 {
        match self.locate(x) {
            None => self.lo[0] + self.slope_left * (x - self.r[0]),
            Some(i) => {
                if self.r[i] == x {
                    self.lo[i]
                } else if i + 1 == self.n() {
                    self.hi[i] + self.slope_right * (x - self.r[i])
                } else {
                    let t = (x - self.r[i]) / (self.r[i + 1] - self.r[i]);
                    self.hi[i] + t * (self.lo[i + 1] - self.hi[i])
                }
            }
        }
    }

    fn upper(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some(i) if self.r[i] == x => self.hi[i],
            _ => self.lower(x),
        }
    }

    /// Integral of the interpolant from r[0] to x (linear continuation
    /// outside the table).
    fn integral_from_first(&self, x: f64) -> f64 {
        match self.locate(x) {
            None => {
                let d = x - self.r[0];
                // integrating leftwards: -(f(r0) + f(x))/2 * |d|
                0.5 * (self.lo[0] + self.lower(x)) * d
            }
            Some(i) => {
                let base = self.prefix[i];
                let d = x - self.r[i];
                if d == 0.0 {
                    base
                } else {
                    base + 0.5 * (self.hi[i] + self.lower(x)) * d
                }
            }
        }
    }

    /// Potential integral from 0 to x.
    pub fn integral_from_zero(&self, x: f64) -> f64 {
        self.integral_from_first(x) - self.at_zero
    }

    /// Conjugate by exact inversion of the piecewise-linear sections.
    /// Bounded-range boundaries get the same few-ulp slack as the
    /// closed-form kinds, see `Graph::conjugate`.
    fn conjugate(&self, y: f64) -> f64 {
        let n = self.n();
        let value_at = |x: f64| x * y - self.integral_from_zero(x);
        if y < self.lo[0] {
            if self.slope_left > 0.0 {
                let x = self.r[0] + (y - self.lo[0]) / self.slope_left;
                value_at(x)
            } else if y >= self.lo[0] - domain_tol(y) {
                value_at(self.r[0])
            } else {
                f64::INFINITY
            }
        } else if y > self.hi[n - 1] {
            if self.slope_right > 0.0 {
                let x = self.r[n - 1] + (y - self.hi[n - 1]) / self.slope_right;
                value_at(x)
            } else if y <= self.hi[n - 1] + domain_tol(y) {
                value_at(self.r[n - 1])
            } else {
                f64::INFINITY
            }
        } else {
            // first node whose upper value reaches y
            let i = self.hi.partition_point(|&v| v < y);
            debug_assert!(i < n);
            if self.lo[i] <= y {
                value_at(self.r[i])
            } else {
                // strictly between hi[i-1] and lo[i]: invert the segment
                let (r0, r1) = (self.r[i - 1], self.r[i]);
                let (y0, y1) = (self.hi[i - 1], self.lo[i]);
                let x = r0 + (y - y0) * (r1 - r0) / (y1 - y0);
                value_at(x)
            }
        }
    }
}
