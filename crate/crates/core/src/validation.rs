//! Named invariant suites over the monotone calculus, the spectral
//! semigroup and the noise sampler, evaluated on deterministic fixtures.
//! The `validate` command prints one line per check; everything here is
//! reproducible bit for bit across runs.

use crate::monotone::{ConvexPotential, Graph, Tabulated};
use crate::noise::{DiffusionSpec, NoisePath};
use crate::semigroup::SpectralOperator;

/// One named check with a measured detail string.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Check {
        Check { name, pass, detail }
    }
}

/// Low-discrepancy point in [0, 1): fractional part of n * alpha for an
/// irrational alpha; deterministic and equidistributed.
fn kronecker(n: usize, alpha: f64) -> f64 {
    (n as f64 * alpha).fract()
}

fn sample_x(n: usize) -> f64 {
    -10.0 + 20.0 * kronecker(n, 0.618_033_988_749_894_9)
}

fn sample_y(n: usize) -> f64 {
    -10.0 + 20.0 * kronecker(n, 0.754_877_666_246_692_7)
}

fn sample_lambda(n: usize) -> f64 {
    // log-uniform over [1e-3, 1]
    10f64.powf(-3.0 + 3.0 * kronecker(n, 0.569_840_290_998_053_2))
}

/// The maximal monotone fixtures the suites run against.
pub fn fixture_graphs() -> Vec<(&'static str, Graph)> {
    vec![
        ("linear(1)", Graph::linear(1.0).unwrap()),
        ("power(2)", Graph::power(2.0).unwrap()),
        ("power(3)", Graph::power(3.0).unwrap()),
        ("sign", Graph::sign()),
        ("exp_minus_one", Graph::exp_minus_one()),
        ("tabulated(cubic)", cubic_table(1e-2)),
        (
            "shifted(sign, 0.5)",
            Graph::shifted(Graph::sign(), 0.5).unwrap(),
        ),
    ]
}

/// Piecewise-linear table of r^3 on [-10, 10] at the given resolution.
pub fn cubic_table(resolution: f64) -> Graph {
    let n = (20.0 / resolution).round() as usize;
    let samples: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let r = -10.0 + resolution * i as f64;
            (r, r * r * r)
        })
        .collect();
    Graph::Tabulated(Tabulated::from_samples(&samples).unwrap())
}

pub fn monotone_suite() -> Vec<Check> {
    let mut checks = Vec::new();
    let graphs = fixture_graphs();
    let triples = 2_000;

    // Yosida calculus: Lipschitz, monotone, dominated by the minimal
    // section; resolvent nonexpansive
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for (_, g) in &graphs {
        for n in 1..=triples {
            let (x, y, lambda) = (sample_x(n), sample_y(n), sample_lambda(n));
            let (fx, fy) = (g.yosida(lambda, x).unwrap(), g.yosida(lambda, y).unwrap());
            let (jx, jy) = (
                g.resolvent(lambda, x).unwrap(),
                g.resolvent(lambda, y).unwrap(),
            );
            let slacks = [
                (x - y).abs() / lambda - (fx - fy).abs(),
                (fx - fy) * (x - y),
                g.minimal_section(x).abs() - fx.abs(),
                (x - y).abs() - (jx - jy).abs(),
            ];
            for s in slacks {
                worst = worst.min(s);
                ok &= s >= -1e-10;
            }
        }
    }
    checks.push(Check::new(
        "monotone.yosida_and_resolvent_inequalities",
        ok,
        format!(
            "worst slack {worst:.3e} over {} graphs x {triples} triples",
            graphs.len()
        ),
    ));

    // f_lambda(x) lies on the graph at the resolvent point
    let mut worst_gap = 0.0f64;
    let mut ok = true;
    for (_, g) in &graphs {
        for n in 1..=triples {
            let (x, lambda) = (sample_x(n), sample_lambda(n));
            let j = g.resolvent(lambda, x).unwrap();
            let f = g.yosida(lambda, x).unwrap();
            let gap = g.fenchel_gap(j, f).unwrap();
            worst_gap = worst_gap.max(gap.abs());
            ok &= gap.is_finite() && gap.abs() <= 1e-8;
        }
    }
    checks.push(Check::new(
        "monotone.yosida_lands_on_graph",
        ok,
        format!("max |gap(J x, f_lambda x)| = {worst_gap:.3e}"),
    ));

    // Moreau envelope ordering and convergence from below
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for (_, g) in &graphs {
        for i in 0..=200 {
            let x = -10.0 + 0.1 * i as f64;
            let f_full = g.potential(x);
            for lambda in [1.0, 0.1, 0.01] {
                let coarse = g.moreau(lambda, x).unwrap();
                let fine = g.moreau(lambda / 2.0, x).unwrap();
                for s in [fine - coarse, f_full - fine, f_full - coarse] {
                    worst = worst.min(s);
                    ok &= s >= -1e-10;
                }
            }
        }
    }
    checks.push(Check::new(
        "monotone.moreau_ordering",
        ok,
        format!("worst ordering slack {worst:.3e}"),
    ));

    // |F - F_lambda| <= lambda f(|x|)^2 / 2 for smooth single-valued kinds
    let smooth = [
        Graph::linear(1.0).unwrap(),
        Graph::power(2.0).unwrap(),
        Graph::power(3.0).unwrap(),
        Graph::exp_minus_one(),
    ];
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for g in &smooth {
        for i in 0..=100 {
            let x = -5.0 + 0.1 * i as f64;
            let fx = g.upper_section(x.abs());
            for lambda in [1.0, 0.1, 0.01] {
                let slack =
                    lambda * fx * fx / 2.0 - (g.potential(x) - g.moreau(lambda, x).unwrap());
                worst = worst.min(slack);
                ok &= slack >= -1e-10;
            }
        }
    }
    checks.push(Check::new(
        "monotone.moreau_gap_bound",
        ok,
        format!("worst bound slack {worst:.3e}"),
    ));

    // tabulated resolvent against the closed form it samples
    let table = cubic_table(1e-3);
    let exact = Graph::power(3.0).unwrap();
    let mut worst = 0.0f64;
    for i in 0..=500 {
        let x = -10.0 + 0.04 * i as f64;
        let a = table.resolvent(1e-3, x).unwrap();
        let b = exact.resolvent(1e-3, x).unwrap();
        worst = worst.max((a - b).abs());
    }
    checks.push(Check::new(
        "monotone.tabulated_matches_closed_form",
        worst <= 1e-8,
        format!("max |J_table - J_exact| = {worst:.3e}"),
    ));

    // Fenchel-Young: gap nonnegative everywhere, zero on the graph
    let mut ok = true;
    let mut worst = f64::INFINITY;
    let mut worst_eq = 0.0f64;
    for (_, g) in &graphs {
        for n in 1..=triples {
            let (x, y) = (sample_x(n), sample_y(n));
            let gap = g.fenchel_gap(x, y).unwrap();
            if gap.is_finite() {
                worst = worst.min(gap);
                ok &= gap >= -1e-10;
            }
            let on_graph = g.fenchel_gap(x, g.minimal_section(x)).unwrap();
            worst_eq = worst_eq.max(on_graph.abs());
            ok &= on_graph.abs() <= 1e-8;
        }
    }
    checks.push(Check::new(
        "monotone.fenchel_young",
        ok,
        format!("min gap {worst:.3e}, max on-graph gap {worst_eq:.3e}"),
    ));

    // convex potential wrapper guards its domain
    let quasi = Graph::quasi_shift(Graph::linear(1.0).unwrap(), 0.5).unwrap();
    let rejected = ConvexPotential::new(quasi).is_err();
    let sign = ConvexPotential::new(Graph::sign()).unwrap();
    let conj_ok = sign.conjugate(0.5).unwrap() == 0.0
        && sign.conjugate(2.0).unwrap().is_infinite()
        && sign.value(-3.0) == 3.0;
    checks.push(Check::new(
        "monotone.convex_potential_domain",
        rejected && conj_ok,
        format!("quasi rejected: {rejected}, sign conjugate closed forms: {conj_ok}"),
    ));

    checks
}

pub fn semigroup_suite() -> Vec<Check> {
    let mut checks = Vec::new();
    let op = SpectralOperator::new(64).unwrap();

    // semigroup law per coefficient
    let u = {
        let values: Vec<f64> = (0..64).map(|j| sample_x(j + 1)).collect();
        op.field_from_values(values)
    };
    let st = op
        .apply_semigroup(0.013, &op.apply_semigroup(0.007, &u).unwrap())
        .unwrap();
    let direct = op.apply_semigroup(0.02, &u).unwrap();
    let law_err = st
        .coeffs()
        .iter()
        .zip(direct.coeffs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    checks.push(Check::new(
        "semigroup.composition_law",
        law_err <= 1e-12,
        format!("max coefficient error {law_err:.3e}"),
    ));

    // L2 contraction, exact per mode
    let mut ok = true;
    for t in [0.0, 1e-4, 0.01, 0.5] {
        let v = op.apply_semigroup(t, &u).unwrap();
        ok &= v.norm_l2() <= u.norm_l2();
        for (a, b) in v.coeffs().iter().zip(u.coeffs()) {
            ok &= a.abs() <= b.abs();
        }
    }
    checks.push(Check::new(
        "semigroup.l2_contraction",
        ok,
        "per-mode multipliers stay in [0, 1]".to_string(),
    ));

    // Parseval
    let grid_sq: f64 = u.values().iter().map(|v| v * v).sum::<f64>() * u.spacing();
    let coeff_sq: f64 = u.coeffs().iter().map(|c| c * c).sum();
    let parseval = (grid_sq - coeff_sq).abs();
    checks.push(Check::new(
        "semigroup.discrete_parseval",
        parseval <= 1e-10,
        format!("|grid - spectral| = {parseval:.3e}"),
    ));

    // convolution is linear
    let phi: Vec<_> = (0..20)
        .map(|n| op.apply_semigroup(0.001 * n as f64, &u).unwrap())
        .collect();
    let psi: Vec<_> = phi.iter().rev().cloned().collect();
    let combo: Vec<_> = phi
        .iter()
        .zip(&psi)
        .map(|(a, b)| a.scale(2.0).add(&b.scale(-0.5)))
        .collect();
    let t = 0.02;
    let lhs = op.convolve(&combo, 1e-3, t).unwrap();
    let rhs = op
        .convolve(&phi, 1e-3, t)
        .unwrap()
        .scale(2.0)
        .add(&op.convolve(&psi, 1e-3, t).unwrap().scale(-0.5));
    let lin_err = lhs.sub(&rhs).norm_max();
    checks.push(Check::new(
        "semigroup.convolution_linear",
        lin_err <= 1e-12,
        format!("max node error {lin_err:.3e}"),
    ));

    // discrete L1 quasi-contraction tightens under grid refinement
    let mut excesses = Vec::new();
    for n_x in [32usize, 64, 128] {
        let fine = SpectralOperator::new(n_x).unwrap();
        let bump = crate::solver::InitialData::Bump.realize(&fine).unwrap();
        let mut excess = 0.0f64;
        for t in [1e-3, 1e-2, 0.1] {
            let v = fine.apply_semigroup(t, &bump).unwrap();
            excess = excess.max(v.norm_l1() - bump.norm_l1());
        }
        excesses.push(excess);
    }
    let shrinking = excesses[2] <= excesses[0] + 1e-12 && excesses[2] <= 1e-3;
    checks.push(Check::new(
        "semigroup.l1_contraction_refines",
        shrinking,
        format!(
            "L1 excess {:.3e} -> {:.3e} -> {:.3e} for n_x = 32, 64, 128",
            excesses[0], excesses[1], excesses[2]
        ),
    ));

    // compactness proxy: multipliers vanish in k
    let t = 0.01;
    let mut ok = true;
    for k in 2..=op.modes() {
        ok &= (-op.eigenvalue(k) * t).exp() <= (-op.eigenvalue(k - 1) * t).exp();
    }
    ok &= (-op.eigenvalue(op.modes()) * t).exp() < 1e-12;
    checks.push(Check::new(
        "semigroup.multipliers_vanish_in_k",
        ok,
        format!(
            "top multiplier {:.3e}",
            (-op.eigenvalue(op.modes()) * t).exp()
        ),
    ));

    // equicontinuity modulus is monotone in the window
    let traj: Vec<_> = (0..=100)
        .map(|n| op.apply_semigroup(1e-3 * n as f64, &u).unwrap())
        .collect();
    let m1 = SpectralOperator::equicontinuity_modulus(&traj, 1e-3, 0.005).unwrap();
    let m2 = SpectralOperator::equicontinuity_modulus(&traj, 1e-3, 0.02).unwrap();
    checks.push(Check::new(
        "semigroup.equicontinuity_monotone",
        m1 <= m2 && m2.is_finite(),
        format!("modulus(0.005) = {m1:.3e} <= modulus(0.02) = {m2:.3e}"),
    ));

    checks
}

pub fn noise_suite() -> Vec<Check> {
    let mut checks = Vec::new();
    let op = SpectralOperator::new(4).unwrap();
    let spec = DiffusionSpec::power_decay(2.0, 1.0).unwrap();
    let (steps, dt) = (25usize, 2e-2);

    // determinism
    let a = NoisePath::sample(&op, &spec, steps, dt, 4242).unwrap();
    let b = NoisePath::sample(&op, &spec, steps, dt, 4242).unwrap();
    let mut same = true;
    for k in 1..=op.modes() {
        same &= a.mode_path(k) == b.mode_path(k);
    }
    checks.push(Check::new(
        "noise.deterministic_replay",
        same,
        "same seed reproduces every mode path exactly".to_string(),
    ));

    // empirical variance of the exact recursion against the marginal law
    let paths = 3_000;
    let t_final = dt * steps as f64;
    let mut finals = vec![Vec::with_capacity(paths); op.modes()];
    for p in 0..paths {
        let path = NoisePath::sample(&op, &spec, steps, dt, 10_000 + p as u64).unwrap();
        for k in 1..=op.modes() {
            finals[k - 1].push(path.mode_path(k)[steps]);
        }
    }
    let mut ok = true;
    let mut worst_z = 0.0f64;
    for k in 1..=op.modes() {
        let mu = op.eigenvalue(k);
        let bk = spec.coefficient(k);
        let exact = bk * bk * (1.0 - (-2.0 * mu * t_final).exp()) / (2.0 * mu);
        let mean: f64 = finals[k - 1].iter().sum::<f64>() / paths as f64;
        let var: f64 = finals[k - 1]
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (paths - 1) as f64;
        let se = exact * (2.0 / (paths as f64 - 1.0)).sqrt();
        let z = (var - exact).abs() / se;
        worst_z = worst_z.max(z);
        ok &= z <= 3.0;
    }
    checks.push(Check::new(
        "noise.marginal_variance_law",
        ok,
        format!(
            "worst |z| = {worst_z:.2} over {} modes, {paths} paths",
            op.modes()
        ),
    ));

    // cross-mode independence
    let mean1: f64 = finals[0].iter().sum::<f64>() / paths as f64;
    let mean2: f64 = finals[1].iter().sum::<f64>() / paths as f64;
    let cov: f64 = finals[0]
        .iter()
        .zip(&finals[1])
        .map(|(x, y)| (x - mean1) * (y - mean2))
        .sum::<f64>()
        / (paths - 1) as f64;
    let sd1 = {
        let mu = op.eigenvalue(1);
        let bk = spec.coefficient(1);
        (bk * bk * (1.0 - (-2.0 * mu * t_final).exp()) / (2.0 * mu)).sqrt()
    };
    let sd2 = {
        let mu = op.eigenvalue(2);
        let bk = spec.coefficient(2);
        (bk * bk * (1.0 - (-2.0 * mu * t_final).exp()) / (2.0 * mu)).sqrt()
    };
    let se_cov = sd1 * sd2 / (paths as f64 - 1.0).sqrt();
    let z_cov = cov.abs() / se_cov;
    checks.push(Check::new(
        "noise.mode_independence",
        z_cov <= 3.0,
        format!("|z| = {z_cov:.2} for cov(mode 1, mode 2)"),
    ));

    // refining dt leaves the marginal law unchanged
    let var_at = |dt: f64, steps: usize| -> f64 {
        let runs = 1_500;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for p in 0..runs {
            let path = NoisePath::sample(&op, &spec, steps, dt, 9_000 + p as u64).unwrap();
            let v = path.mode_path(1)[steps];
            sum += v;
            sq += v * v;
        }
        (sq - sum * sum / runs as f64) / (runs - 1) as f64
    };
    let coarse = var_at(2e-2, 25);
    let fine = var_at(1e-2, 50);
    let mu = op.eigenvalue(1);
    let exact = (1.0 - (-2.0 * mu * 0.5).exp()) / (2.0 * mu);
    let se = exact * (2.0f64 / 1_499.0).sqrt();
    let agree = (coarse - fine).abs() <= 3.0 * (2.0f64).sqrt() * se;
    checks.push(Check::new(
        "noise.law_invariant_under_dt_refinement",
        agree,
        format!(
            "var {coarse:.4e} vs {fine:.4e}, allowance {:.1e}",
            3.0 * (2.0f64).sqrt() * se
        ),
    ));

    // shifted forcing subtracts the closed-form heat integral
    let quiet = NoisePath::sample(&op, &DiffusionSpec::off(), steps, dt, 1).unwrap();
    let shifted = quiet.shifted_forcing(1.0, &op).unwrap();
    let one_hat = op.one_field().coeffs()[0];
    let mut worst = 0.0f64;
    for n in 0..=steps {
        let t = dt * n as f64;
        let mu = op.eigenvalue(1);
        let want = -one_hat * (1.0 - (-mu * t).exp()) / mu;
        let got = shifted.mode_path(1)[n];
        worst = worst.max((got - want).abs());
    }
    checks.push(Check::new(
        "noise.shifted_forcing_closed_form",
        worst <= 1e-14,
        format!("max mode-1 error {worst:.3e}"),
    ));

    // boundedness hint flags divergent spectra and accepts decaying ones
    let decaying = NoisePath::sample(&op, &spec, steps, dt, 3).unwrap();
    let good = crate::noise::boundedness_report(&decaying, &spec, &op);
    let flat_spec = DiffusionSpec::from_coefficients(vec![1.0; op.modes()], 0.75).unwrap();
    let flat = NoisePath::sample(&op, &flat_spec, steps, dt, 3).unwrap();
    let bad = crate::noise::boundedness_report(&flat, &flat_spec, &op);
    let ok = !good.hint_diverging && bad.hint_diverging && good.sup_norm.is_finite();
    checks.push(Check::new(
        "noise.boundedness_hint",
        ok,
        format!(
            "decaying hint {:.3e} (flag {}), flat hint {:.3e} (flag {})",
            good.regularity_hint, good.hint_diverging, bad.regularity_hint, bad.hint_diverging
        ),
    ));

    checks
}

/// Every suite, in module order.
pub fn all_suites() -> Vec<Check> {
    let mut checks = monotone_suite();
    checks.extend(semigroup_suite());
    checks.extend(noise_suite());
    checks
}
