//! Time steppers for the regularized equation and the vanishing-
//! regularization continuation.
//!
//! The unknown is the correction v = u - z, which solves
//!
//!   v' + A v + f_lambda(v + z) = k (v + z),      v(0) = u_0,
//!
//! with f_lambda the Yosida approximation of the monotone part of the
//! drift, z the (possibly translation-corrected) stochastic convolution
//! and k >= 0 the collected quasi-monotone coefficient. Two schemes are
//! provided: a splitting step that applies the semigroup exactly in the
//! eigenbasis and then solves the pointwise implicit relation through the
//! resolvent (unconditionally stable, the default), and an exponential
//! Euler step that treats the nonlinearity explicitly and is restricted
//! to dt <= lambda.
//!
//! Declared drifts are normalized before stepping: `Shifted` layers move
//! their constant into the forcing (z picks up -offset * S*1, exactly the
//! identity behind `shifted_forcing`) and `QuasiShift` layers move their
//! linear part into k, leaving a genuinely monotone graph for the
//! resolvent calculus.

use crate::error::{Error, Result};
use crate::monotone::Graph;
use crate::noise::{DiffusionSpec, NoisePath};
use crate::semigroup::{Field, SpectralOperator};

/// Time discretization of the regularized equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Exact semigroup then pointwise implicit nonlinear solve; the noise
    /// enters at the right endpoint of the step.
    #[default]
    SemiImplicit,
    /// Exponential Euler with the nonlinearity at the left endpoint;
    /// requires dt <= lambda.
    ExpEuler,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::SemiImplicit => "semi_implicit",
            Scheme::ExpEuler => "exp_euler",
        }
    }
}

/// Named initial data profiles on the interior grid.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// e_k, unit norm by construction.
    Eigenmode { mode: usize },
    /// Smooth bump supported in (0.1, 0.9), normalized to unit L2 norm.
    Bump,
    /// Uniform values in [-1, 1] from the given seed, normalized to unit
    /// L2 norm.
    Random { seed: u64 },
    /// Explicit grid values, used as given.
    Values(Vec<f64>),
}

impl InitialData {
    pub fn realize(&self, op: &SpectralOperator) -> Result<Field> {
        match self {
            InitialData::Eigenmode { mode } => op.eigenfunction(*mode),
            InitialData::Bump => {
                let values = op
                    .nodes()
                    .iter()
                    .map(|&x| {
                        let s = (x - 0.5) / 0.4;
                        if s.abs() < 1.0 {
                            (-1.0 / (1.0 - s * s)).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let f = op.field_from_values(values);
                Ok(f.scale(1.0 / f.norm_l2()))
            }
            InitialData::Random { seed } => {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(*seed);
                let values = (0..op.grid_size())
                    .map(|_| rng.gen_range(-1.0..=1.0))
                    .collect();
                let f = op.field_from_values(values);
                let n = f.norm_l2();
                if n == 0.0 {
                    return Err(Error::numerical("random initial data degenerated to zero"));
                }
                Ok(f.scale(1.0 / n))
            }
            InitialData::Values(values) => {
                if values.len() != op.grid_size() {
                    return Err(Error::config(format!(
                        "initial data has {} values, grid has {}",
                        values.len(),
                        op.grid_size()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("initial data holds a non-finite value"));
                }
                Ok(op.field_from_values(values.clone()))
            }
        }
    }
}

/// Strictly decreasing geometric ladder of regularization parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSchedule {
    pub initial: f64,
    pub ratio: f64,
    pub count: usize,
}

impl LambdaSchedule {
    pub fn new(initial: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(initial.is_finite() && initial > 0.0) {
            return Err(Error::config(format!(
                "lambda schedule needs initial > 0, got {initial}"
            )));
        }
        if !(ratio.is_finite() && ratio > 0.0 && ratio < 1.0) {
            return Err(Error::config(format!(
                "lambda schedule needs ratio in (0, 1), got {ratio}"
            )));
        }
        if count == 0 {
            return Err(Error::config("lambda schedule needs at least one entry"));
        }
        Ok(LambdaSchedule {
            initial,
            ratio,
            count,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|j| self.initial * self.ratio.powi(j as i32))
            .collect()
    }
}

/// Everything a run needs: drift graph, operator, initial data, noise,
/// horizon and scheme.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: Graph,
    /// Constant added to the drift graph, absorbed into the forcing.
    pub alpha: f64,
    /// Quasi-monotone constant of the operator (moved to the right-hand
    /// side; the grid operator itself stays dissipative).
    pub operator_quasi_shift: f64,
    /// Nonnegative shift added to every eigenvalue.
    pub operator_shift: f64,
    pub initial: InitialData,
    pub diffusion: DiffusionSpec,
    pub n_x: usize,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub lambdas: LambdaSchedule,
    pub scheme: Scheme,
}

impl Scenario {
    /// 64-bit FNV-1a digest of the full scenario state, used as run
    /// provenance in certificates and reports. Content-addressed: two
    /// scenarios hash equal exactly when every field (including tabulated
    /// graph data) matches.
    pub fn fingerprint(&self) -> u64 {
        let text = format!(
            "{:?}|{}|{}|{}|{:?}|{:?}|{}|{}|{}|{}|{:?}|{:?}",
            self.graph,
            self.alpha,
            self.operator_quasi_shift,
            self.operator_shift,
            self.initial,
            self.diffusion,
            self.n_x,
            self.horizon,
            self.dt,
            self.seed,
            self.lambdas,
            self.scheme,
        );
        fnv1a(text.as_bytes())
    }

    /// Number of time steps; the horizon must sit on the step grid.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(format!(
                "step size must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::config(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        let steps = crate::semigroup::grid_index(self.horizon, self.dt)?;
        if steps == 0 {
            return Err(Error::config("horizon shorter than one step"));
        }
        Ok(steps)
    }
}

/// A solved trajectory at one fixed regularization parameter.
#[derive(Debug, Clone)]
pub struct SolutionBundle {
    pub lambda: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// collected quasi-monotone coefficient used on the right-hand side
    pub quasi_k: f64,
    /// v(t_n), n = 0..=steps
    pub v: Vec<Field>,
    /// u = v + z
    pub u: Vec<Field>,
    /// zeta(t_n) = f_lambda(u(t_n)) for the monotone part of the drift
    pub zeta: Vec<Field>,
    /// || v(t_n) + (S * (zeta - k u))(t_n) - S(t_n) u_0 ||_1 per node,
    /// the convolution taken with exact per-mode exponential weights
    pub mild_residuals: Vec<f64>,
    pub initial_l2: f64,
    /// seed of the noise path driving this trajectory
    pub seed: u64,
}

impl SolutionBundle {
    pub fn steps(&self) -> usize {
        self.v.len() - 1
    }

    pub fn max_mild_residual(&self) -> f64 {
        self.mild_residuals.iter().fold(0.0f64, |m, r| m.max(*r))
    }

    /// sup over shared grid nodes of the L1 distance of the v components.
    pub fn sup_l1_distance(&self, other: &SolutionBundle) -> f64 {
        self.v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| a.sub(b).norm_l1())
            .fold(0.0f64, f64::max)
    }
}

/// Scenario with its derived pieces: normalized drift, operator, realized
/// initial data and the (translation-corrected) sampled forcing. Solving
/// at several lambdas reuses all of it, in particular the same noise path.
#[derive(Debug, Clone)]
pub struct Prepared {
    op: SpectralOperator,
    graph: Graph,
    quasi_k: f64,
    u0: Field,
    z: NoisePath,
    dt: f64,
    steps: usize,
    scheme: Scheme,
}

impl Prepared {
    pub fn new(sc: &Scenario) -> Result<Prepared> {
        let steps = sc.steps()?;
        let op = SpectralOperator::with_shift(sc.n_x, sc.operator_shift)?;
        if !sc.operator_quasi_shift.is_finite() || sc.operator_quasi_shift < 0.0 {
            return Err(Error::config(format!(
                "operator quasi-shift must be >= 0, got {}",
                sc.operator_quasi_shift
            )));
        }
        if !sc.alpha.is_finite() {
            return Err(Error::config("graph translation must be finite"));
        }
        let (graph, alpha_graph, beta_graph) = normalize_graph(sc.graph.clone());
        let alpha = sc.alpha + alpha_graph;
        let quasi_k = sc.operator_quasi_shift + beta_graph;
        let u0 = sc.initial.realize(&op)?;
        let raw = NoisePath::sample(&op, &sc.diffusion, steps, sc.dt, sc.seed)?;
        let z = if alpha != 0.0 {
            raw.shifted_forcing(alpha, &op)?
        } else {
            raw
        };
        Ok(Prepared {
            op,
            graph,
            quasi_k,
            u0,
            z,
            dt: sc.dt,
            steps,
            scheme: sc.scheme,
        })
    }

    /// Assemble a run from explicit parts; the forcing is used as given.
    pub fn from_parts(
        op: SpectralOperator,
        graph: Graph,
        quasi_k: f64,
        u0: Field,
        z: NoisePath,
        scheme: Scheme,
    ) -> Result<Prepared> {
        let (graph, alpha_graph, beta_graph) = normalize_graph(graph);
        if alpha_graph != 0.0 {
            return Err(Error::config(
                "explicit assembly expects the translation already moved into the forcing",
            ));
        }
        if z.steps() == 0 {
            return Err(Error::config("forcing must cover at least one step"));
        }
        Ok(Prepared {
            op,
            graph,
            quasi_k: quasi_k + beta_graph,
            u0,
            dt: z.dt(),
            steps: z.steps(),
            z,
            scheme,
        })
    }

    pub fn operator(&self) -> &SpectralOperator {
        &self.op
    }

    /// The monotone graph actually stepped (translations and quasi parts
    /// stripped).
    pub fn effective_graph(&self) -> &Graph {
        &self.graph
    }

    pub fn quasi_k(&self) -> f64 {
        self.quasi_k
    }

    pub fn forcing(&self) -> &NoisePath {
        &self.z
    }

    pub fn initial(&self) -> &Field {
        &self.u0
    }

    pub fn solve(&self, lambda: f64) -> Result<SolutionBundle> {
        self.solve_with(lambda, self.scheme)
    }

    pub fn solve_with(&self, lambda: f64, scheme: Scheme) -> Result<SolutionBundle> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::config(format!(
                "regularization parameter must be > 0, got {lambda}"
            )));
        }
        let dt = self.dt;
        let k = self.quasi_k;
        if dt * k >= 1.0 {
            return Err(Error::config(format!(
                "quasi-monotone step needs dt * k < 1, got {}",
                dt * k
            )));
        }
        if scheme == Scheme::ExpEuler && dt > lambda {
            return Err(Error::config(format!(
                "exponential Euler needs dt <= lambda, got dt = {dt}, lambda = {lambda}"
            )));
        }

        let mut v = Vec::with_capacity(self.steps + 1);
        v.push(self.u0.clone());
        match scheme {
            Scheme::SemiImplicit => {
                // s + (dt/(1 - dt k)) f_lambda(s) = (w + z)/(1 - dt k),
                // solved through the resolvent of f itself:
                //   (id + mu f_lambda)^{-1} = (lambda id + mu J_{lambda+mu}) / (lambda + mu)
                let denom = 1.0 - dt * k;
                let mu = dt / denom;
                for n in 0..self.steps {
                    let w = self.op.apply_semigroup(dt, &v[n])?;
                    let z_next = self.z.field_at(n + 1);
                    let mut vals = Vec::with_capacity(self.op.grid_size());
                    for (wj, zj) in w.values().iter().zip(z_next.values()) {
                        let x = (wj + zj) / denom;
                        let j = self.graph.resolvent(lambda + mu, x)?;
                        let s = (lambda * x + mu * j) / (lambda + mu);
                        vals.push(s - zj);
                    }
                    v.push(self.op.field_from_values(vals));
                }
            }
            Scheme::ExpEuler => {
                let modes = self.op.modes();
                let decay: Vec<f64> = (1..=modes)
                    .map(|m| (-self.op.eigenvalue(m) * dt).exp())
                    .collect();
                let phi1: Vec<f64> = (1..=modes)
                    .map(|m| {
                        let a = self.op.eigenvalue(m) * dt;
                        if a < 1e-8 {
                            1.0 - 0.5 * a
                        } else {
                            (1.0 - (-a).exp()) / a
                        }
                    })
                    .collect();
                for n in 0..self.steps {
                    let z_now = self.z.field_at(n);
                    let mut force = Vec::with_capacity(modes);
                    for (vj, zj) in v[n].values().iter().zip(z_now.values()) {
                        let s = vj + zj;
                        force.push(self.graph.yosida(lambda, s)? - k * s);
                    }
                    let g = self.op.field_from_values(force);
                    let coeffs: Vec<f64> = (0..modes)
                        .map(|m| decay[m] * v[n].coeffs()[m] - dt * phi1[m] * g.coeffs()[m])
                        .collect();
                    v.push(self.op.field_from_coeffs(coeffs));
                }
            }
        }

        // state-derived trajectories: u = v + z, zeta = f_lambda(u)
        let mut u = Vec::with_capacity(self.steps + 1);
        let mut zeta = Vec::with_capacity(self.steps + 1);
        for (n, vn) in v.iter().enumerate() {
            let un = vn.add(self.z.field_at(n));
            let zn: Result<Vec<f64>> = un
                .values()
                .iter()
                .map(|&x| self.graph.yosida(lambda, x))
                .collect();
            zeta.push(self.op.field_from_values(zn?));
            u.push(un);
        }

        for field in v.iter().chain(&u) {
            if field.values().iter().any(|x| !x.is_finite()) {
                return Err(Error::numerical(format!(
                    "trajectory left the finite range (lambda = {lambda}, scheme = {})",
                    scheme.name()
                )));
            }
        }

        // mild-form residual against the exact-weight convolution
        let phi: Vec<Field> = (0..=self.steps)
            .map(|n| {
                if k == 0.0 {
                    zeta[n].clone()
                } else {
                    zeta[n].sub(&u[n].scale(k))
                }
            })
            .collect();
        let mut mild_residuals = Vec::with_capacity(self.steps + 1);
        for n in 0..=self.steps {
            let t = dt * n as f64;
            let free = self.op.apply_semigroup(t, &self.u0)?;
            let conv = self.op.convolve(&phi[..n], dt, t)?;
            mild_residuals.push(v[n].add(&conv).sub(&free).norm_l1());
        }

        Ok(SolutionBundle {
            lambda,
            dt,
            scheme,
            quasi_k: k,
            initial_l2: self.u0.norm_l2(),
            seed: self.z.seed(),
            v,
            u,
            zeta,
            mild_residuals,
        })
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Peel `Shifted` and `QuasiShift` layers off a declared drift, returning
/// the monotone core together with the collected translation and
/// quasi-monotone coefficients.
fn normalize_graph(graph: Graph) -> (Graph, f64, f64) {
    match graph {
        Graph::Shifted { base, offset } => {
            let (g, a, b) = normalize_graph(*base);
            (g, a + offset, b)
        }
        Graph::QuasiShift { base, beta } => {
            let (g, a, b) = normalize_graph(*base);
            (g, a, b + beta)
        }
        other => (other, 0.0, 0.0),
    }
}

/// Solve a scenario at a single regularization parameter.
pub fn solve(sc: &Scenario, lambda: f64) -> Result<SolutionBundle> {
    Prepared::new(sc)?.solve(lambda)
}

/// Result of walking the lambda schedule with one shared noise path.
#[derive(Debug)]
pub struct Continuation {
    pub lambdas: Vec<f64>,
    /// bundle per schedule entry, `None` where that solve failed
    pub bundles: Vec<Option<SolutionBundle>>,
    /// per-entry failure messages, aligned with `bundles`
    pub failures: Vec<Option<String>>,
    /// d_j = sup_n ||v_{lambda_j} - v_{lambda_{j+1}}||_1 for consecutive
    /// successful pairs
    pub distances: Vec<Option<f64>>,
    /// index of the smallest lambda that solved; its bundle is the limit
    /// candidate and is never extrapolated beyond the schedule
    pub limit_index: Option<usize>,
}

impl Continuation {
    pub fn limit(&self) -> Option<&SolutionBundle> {
        self.limit_index.and_then(|i| self.bundles[i].as_ref())
    }

    pub fn bundle(&self, j: usize) -> Option<&SolutionBundle> {
        self.bundles.get(j).and_then(|b| b.as_ref())
    }
}

/// Solve along the whole lambda schedule (at least two entries), sampling
/// the noise once, and tabulate the Cauchy distances d_j. Failures at
/// individual lambdas are recorded and the schedule continues.
pub fn continuation(sc: &Scenario) -> Result<Continuation> {
    let lambdas = sc.lambdas.values();
    if lambdas.len() < 2 {
        return Err(Error::config(
            "continuation needs a lambda schedule with at least two entries",
        ));
    }
    let prepared = Prepared::new(sc)?;
    let mut bundles = Vec::with_capacity(lambdas.len());
    let mut failures = vec![None; lambdas.len()];
    for (j, &lambda) in lambdas.iter().enumerate() {
        match prepared.solve(lambda) {
            Ok(b) => bundles.push(Some(b)),
            Err(e) => {
                failures[j] = Some(e.to_string());
                bundles.push(None);
            }
        }
    }
    Ok(assemble(lambdas, bundles, failures))
}

/// Same schedule walk as `continuation` with the per-lambda solves fanned
/// out over at most `jobs` threads. Results are slotted back by schedule
/// index, so the outcome matches the sequential walk exactly.
pub fn continuation_jobs(sc: &Scenario, jobs: usize) -> Result<Continuation> {
    if jobs <= 1 {
        return continuation(sc);
    }
    let lambdas = sc.lambdas.values();
    if lambdas.len() < 2 {
        return Err(Error::config(
            "continuation needs a lambda schedule with at least two entries",
        ));
    }
    let prepared = Prepared::new(sc)?;
    let workers = jobs.min(lambdas.len());
    let mut slots: Vec<Option<core::result::Result<SolutionBundle, String>>> =
        (0..lambdas.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let prepared = &prepared;
                let lambdas = &lambdas;
                scope.spawn(move || {
                    let mut own = Vec::new();
                    let mut j = w;
                    while j < lambdas.len() {
                        own.push((j, prepared.solve(lambdas[j]).map_err(|e| e.to_string())));
                        j += workers;
                    }
                    own
                })
            })
            .collect();
        for handle in handles {
            for (j, outcome) in handle.join().expect("lambda worker panicked") {
                slots[j] = Some(outcome);
            }
        }
    });
    let mut bundles = Vec::with_capacity(lambdas.len());
    let mut failures = vec![None; lambdas.len()];
    for (j, slot) in slots.into_iter().enumerate() {
        match slot.expect("striding covers every schedule index") {
            Ok(b) => bundles.push(Some(b)),
            Err(msg) => {
                failures[j] = Some(msg);
                bundles.push(None);
            }
        }
    }
    Ok(assemble(lambdas, bundles, failures))
}

fn assemble(
    lambdas: Vec<f64>,
    bundles: Vec<Option<SolutionBundle>>,
    failures: Vec<Option<String>>,
) -> Continuation {
    let distances: Vec<Option<f64>> = (0..lambdas.len() - 1)
        .map(|j| match (&bundles[j], &bundles[j + 1]) {
            (Some(a), Some(b)) => Some(a.sup_l1_distance(b)),
            _ => None,
        })
        .collect();
    let limit_index = (0..lambdas.len()).rev().find(|&j| bundles[j].is_some());
    Continuation {
        lambdas,
        bundles,
        failures,
        distances,
        limit_index,
    }
}
