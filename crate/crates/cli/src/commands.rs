//! The subcommands. Each one reads the validated configuration, writes its
//! artifacts through the [`Sink`] and returns a one-line summary.

use std::fmt;
use std::io;
use std::path::Path;

use elastic_polymer::displacement::{
    frsb_loglog_slope, green, green_prime, h_continuum, h_discrete, h_frsb_massless, wandering_exponent,
    WanderingRegime,
};
use elastic_polymer::kernels::{
    heat_entry, heat_error_envelope, heat_kernel_continuum, heat_trace, logdet, pseudo_det, r1_error_envelope,
};
use elastic_polymer::phase::{
    classify, is_rs, larkin_mass, massless_transition_beta, phase_boundary, solve, solve_frsb, solve_rs_with_kernel,
};
use elastic_polymer::simulator::{simulate, ChainConfig, SimulationConfig};
use elastic_polymer::{Correlator, Error, ModelParams, Phase, ResolventKernel, RsbSolution};
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, RunConfig};
use crate::output::{num, Sink};

/// Failure of a subcommand, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or arguments outside a solver's domain (exit 2).
    Validation(String),
    /// A solver did not converge or a stationarity check failed (exit 3).
    Solver(String),
    /// Reading the configuration or writing an artifact failed (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Solver(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } | Error::Internal(_) => CliError::Solver(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(format!("i/o error: {e}"))
    }
}

pub type Outcome = Result<String, CliError>;

/// Shared inputs of every subcommand.
pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub sink: &'a Sink,
    /// `--seed`, overriding `sim.seed`.
    pub seed: Option<u64>,
}

impl Context<'_> {
    fn model(&self) -> Result<(Correlator, ModelParams), CliError> {
        let corr = self.cfg.correlator()?;
        let params = self.cfg.params(&corr)?;
        Ok((corr, params))
    }

    fn lattice(&self) -> Option<usize> {
        (self.cfg.word("kernel.flavor") == "lattice").then(|| self.cfg.count("kernel.l"))
    }

    /// Solves the configured point with the configured kernel and checks the
    /// stationarity defect against `tol.stationarity`.
    fn solve(&self) -> Result<(Correlator, ModelParams, ResolventKernel, RsbSolution), CliError> {
        let (corr, params) = self.model()?;
        let (kernel, sol) = match self.lattice() {
            None => (ResolventKernel::continuum(params.t)?, solve(&params, &corr)?),
            Some(l) => {
                let kernel = ResolventKernel::lattice(l, params.t)?;
                let lp = params.clone().with_lattice(l)?;
                let sol = solve_rs_with_kernel(&kernel, &lp, &corr, self.cfg.count("tol.residual_grid"))?;
                if sol.residuals.offsupport_violation > 0.0 {
                    return Err(CliError::Validation(format!(
                        "the lattice flavor solves RS points only; the RS pair at L = {l} violates \
                         f(s) <= f(q*) off the support by {:e}",
                        sol.residuals.offsupport_violation
                    )));
                }
                (kernel, sol)
            }
        };
        let defect = sol.residuals.larkin_residual.abs().max(sol.residuals.support_max_f_gap);
        let tol = self.cfg.float("tol.stationarity");
        if defect > tol {
            return Err(CliError::Solver(format!(
                "stationarity of the {} pair: Larkin/support residual {defect:e} exceeds tol.stationarity = {tol:e}",
                sol.phase
            )));
        }
        Ok((corr, params, kernel, sol))
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn classify_cmd(ctx: &Context) -> Outcome {
    let (corr, params) = ctx.model()?;
    let phase = classify(&params, &corr)?;
    let report = json!({
        "phase": phase,
        "is_rs": is_rs(&params, &corr),
        "larkin_mass": larkin_mass(params.beta, params.t, &corr),
        "ub_shape": corr.ub_shape(params.t),
        "massless_transition_beta": massless_transition_beta(params.t, &corr),
        "s_bar": params.s_bar(),
        "params": params,
        "correlator": corr,
    });
    let path = ctx.sink.json("classify.json", &report)?;
    Ok(format!("classify: phase={phase} -> {}", path_str(&path)))
}

pub fn solve_cmd(ctx: &Context) -> Outcome {
    let (_, _, _, sol) = ctx.solve()?;
    let path = ctx.sink.json("solution.json", &sol)?;
    Ok(format!(
        "solve: phase={} q_c={} free_energy={} max_defect={:e} -> {}",
        sol.phase,
        num(sol.q_c),
        num(sol.free_energy),
        sol.residuals.max_defect(),
        path_str(&path)
    ))
}

pub fn free_energy_cmd(ctx: &Context) -> Outcome {
    let (_, _, kernel, sol) = ctx.solve()?;
    let report = json!({
        "value": sol.free_energy,
        "phase": sol.phase,
        "flavor": kernel.flavor(),
        "residuals": sol.residuals,
    });
    let path = ctx.sink.json("free_energy.json", &report)?;
    Ok(format!("free-energy: value={} phase={} -> {}", num(sol.free_energy), sol.phase, path_str(&path)))
}

pub fn phase_diagram_cmd(ctx: &Context) -> Outcome {
    let corr = ctx.cfg.correlator()?;
    let t = ctx.cfg.float("params.t");
    let mut betas = ctx.cfg.grid("grid.beta");
    betas.sort_by(f64::total_cmp);
    let curve = phase_boundary(t, &corr, &betas, ctx.cfg.interval("grid.mu"), ctx.cfg.count("grid.points_per_decade"))?;
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|p| vec![num(p.beta), num(p.mu_boundary), p.phase_left.to_string(), p.phase_right.to_string()])
        .collect();
    let csv = ctx.sink.csv("phase_diagram.csv", &["beta", "mu_boundary", "phase_left", "phase_right"], &rows)?;
    let intercept = curve.massless_intercept.map(num).unwrap_or_else(|| "none".into());
    let comments = vec![
        format!("RS/RSB boundary at t = {}", num(t)),
        format!("massless intercept beta = {intercept}"),
        "columns: beta mu_boundary".into(),
    ];
    let plot_rows: Vec<Vec<String>> = curve.points.iter().map(|p| vec![num(p.beta), num(p.mu_boundary)]).collect();
    ctx.sink.plot_data("phase_diagram.dat", &comments, &plot_rows)?;
    Ok(format!(
        "phase-diagram: {} boundary points, massless intercept beta={intercept} -> {}",
        curve.points.len(),
        path_str(&csv)
    ))
}

pub fn displacement_cmd(ctx: &Context) -> Outcome {
    let (_, params, kernel, sol) = ctx.solve()?;
    let xs = ctx.cfg.grid("grid.x");
    let mut rows = Vec::with_capacity(xs.len());
    for &x in &xs {
        let h =
            if kernel.is_continuum() { h_continuum(&params, &sol, x)? } else { h_discrete(&kernel, &params, &sol, x)? };
        rows.push(vec![num(x), num(h)]);
    }
    let path = ctx.sink.csv("displacement.csv", &["x", "H"], &rows)?;
    Ok(format!("displacement: phase={} {} points -> {}", sol.phase, rows.len(), path_str(&path)))
}

pub fn wandering_cmd(ctx: &Context) -> Outcome {
    let corr = ctx.cfg.correlator()?;
    let (beta, t) = (ctx.cfg.float("params.beta"), ctx.cfg.float("params.t"));
    let w = wandering_exponent(&corr, t, beta)?;
    let (x_lo, x_hi) = (ctx.cfg.float("wandering.x_lo"), ctx.cfg.float("wandering.x_hi"));
    let slope = match (&corr, w.regime) {
        (Correlator::PowerLaw { g, a, gamma }, WanderingRegime::SuperdiffusiveFrsb) if *g == 1.0 && *a == 1.0 => {
            Some(frsb_loglog_slope(beta, t, *gamma, x_lo, x_hi)?)
        }
        _ => None,
    };
    let report = json!({
        "eta": w.eta,
        "prefactor": w.prefactor,
        "prefactor_rederived": w.prefactor_rederived,
        "regime": w.regime,
        "loglog_slope": slope,
        "slope_window": [x_lo, x_hi],
    });
    let path = ctx.sink.json("wandering.json", &report)?;
    let label = report["regime"].as_str().unwrap_or_default();
    Ok(format!("wandering: eta={} regime={label} -> {}", num(w.eta), path_str(&path)))
}

pub fn lattice_verify_cmd(ctx: &Context) -> Outcome {
    let mu = ctx.cfg.float("params.mu");
    let t = ctx.cfg.float("params.t");
    let (x, time) = (ctx.cfg.float("verify.x"), ctx.cfg.float("verify.time"));
    let cont = ResolventKernel::continuum(t)?;
    let mut rows = Vec::new();
    for l in ctx.cfg.count_list("grid.l") {
        let k = ResolventKernel::lattice(l, t)?;
        let lf = l as f64;
        let mut push = |quantity: &str, lattice: f64, continuum: f64, envelope: Option<f64>| {
            rows.push(vec![
                l.to_string(),
                quantity.to_string(),
                num(lattice),
                num(continuum),
                num((lattice - continuum).abs()),
                envelope.map(num).unwrap_or_default(),
            ]);
        };
        push("r1", k.r1(mu), cont.r1(mu), Some(r1_error_envelope(l, mu, t)));
        push("r2", k.r2(mu), cont.r2(mu), None);
        push("k", k.k(x)?, cont.k(x)?, None);
        push("k_prime", k.k_prime(x)?, cont.k_prime(x)?, None);
        push("green", k.green(mu, x, 0)?, cont.green(mu, x, 0)?, None);
        push("green_prime", k.green(mu, x, 1)?, cont.green(mu, x, 1)?, None);
        let heat_limit = 1.0 / (2.0 * (std::f64::consts::PI * time).sqrt());
        push("heat_trace", heat_trace(l, time)?, heat_limit, Some(heat_error_envelope(l, time)));
        push("heat_entry", heat_entry(l, time, x)?, heat_kernel_continuum(time, x), Some(heat_error_envelope(l, time)));
        let normalized = logdet(l, t, mu)? / lf.sqrt() - lf.sqrt() * (lf * t).ln();
        push("logdet_normalized", normalized, 2.0 * (mu / t).sqrt(), Some(lf.powf(-0.25)));
        push("pseudo_det", pseudo_det(l), lf * lf, Some(1e-9 * lf * lf));
    }
    let path = ctx.sink.csv(
        "lattice_verify.csv",
        &["L", "quantity", "lattice_value", "continuum_value", "abs_error", "bound_envelope"],
        &rows,
    )?;
    Ok(format!("lattice-verify: {} rows -> {}", rows.len(), path_str(&path)))
}

pub fn simulate_cmd(ctx: &Context) -> Outcome {
    let (corr, params) = ctx.model()?;
    let c = ctx.cfg;
    let config = SimulationConfig {
        correlator: corr,
        params,
        n: c.count("sim.n"),
        l: c.count("sim.l"),
        n_features: c.count("sim.features"),
        n_disorder: c.count("sim.disorder"),
        chain: ChainConfig {
            n_replicas: c.count("sim.replicas"),
            n_steps: c.count("sim.steps"),
            step_size: c.float("sim.step_size"),
            burn_in_fraction: c.float("sim.burn_in"),
            n_batches: c.count("sim.batches"),
        },
        seed: ctx.seed.unwrap_or_else(|| c.seed("sim.seed")),
        histogram_bins: c.count("sim.bins"),
    };
    let (summary, runs) = simulate(&config)?;
    let json_path = ctx.sink.json("simulation.json", &json!({ "config": config, "summary": summary }))?;
    let mut rows = Vec::new();
    for (d, run) in runs.iter().enumerate() {
        let l = run.l as f64;
        for step in 0..run.n_samples {
            let site_mean = |v: &[f64]| v[step * run.l..(step + 1) * run.l].iter().sum::<f64>() / l;
            let overlap = if run.overlap.is_empty() { String::new() } else { num(site_mean(&run.overlap)) };
            rows.push(vec![d.to_string(), step.to_string(), num(site_mean(&run.radius)), overlap]);
        }
    }
    ctx.sink.csv("simulation_series.csv", &["draw", "step", "radius", "overlap"], &rows)?;
    Ok(format!(
        "simulate: radius={} overlap={} -> {}",
        num(summary.radius.mean),
        summary.overlap.map(|o| num(o.mean)).unwrap_or_else(|| "none".into()),
        path_str(&json_path)
    ))
}

#[derive(Serialize)]
struct Probe {
    name: &'static str,
    printed: String,
    rederived: String,
    values: serde_json::Value,
    printed_holds: bool,
}

/// Probes of the statements whose printed form disagrees with a direct
/// re-derivation.
pub fn errata_check_cmd(ctx: &Context) -> Outcome {
    let mut probes = Vec::new();

    // FRSB q₀: the configured point when it is an FRSB power law, otherwise
    // γ = 0.5, β = 2, t = 1, μ = μ_Lar/10.
    let (corr, params) = match ctx.model() {
        Ok((c @ Correlator::PowerLaw { gamma, .. }, p))
            if gamma < 1.0 && classify(&p, &c).ok() == Some(Phase::Frsb) =>
        {
            (c, p)
        }
        _ => {
            let c = Correlator::power_law(1.0, 1.0, 0.5)?;
            let ml = larkin_mass(2.0, 1.0, &c)
                .ok_or_else(|| CliError::Solver("no Larkin mass at the reference point".into()))?;
            (c, ModelParams::new(2.0, ml / 10.0, 1.0)?)
        }
    };
    let sol = solve_frsb(&params, &corr)?;
    let alt = &sol.alternatives;
    let defect_printed = alt["stationarity_defect_printed_q_0"];
    probes.push(Probe {
        name: "frsb_q0_equation",
        printed: "-B'(2(q_c - q_0)) = q_0 / (mu^3 t)".into(),
        rederived: "-B'(2(q_c - q_0)) = q_0 sqrt(mu^3 t), from F(q_0) = 0".into(),
        values: json!({
            "beta": params.beta, "mu": params.mu, "t": params.t, "correlator": corr,
            "q_0": sol.extras["q_0"], "q_0_printed": alt["q_0_printed"],
            "stationarity_defect_q_0": alt["stationarity_defect_q_0"],
            "stationarity_defect_printed_q_0": defect_printed,
        }),
        printed_holds: defect_printed <= 1e-8,
    });

    // Small-mass limits of the continuum Green's function at t ≠ 1.
    let x = ctx.cfg.float("verify.x");
    let mut rows = Vec::new();
    let mut holds = true;
    for t in [0.5, 1.0, 2.0] {
        let g0 = green(x, t, 1e-14);
        let mu = 1e-10;
        let gp = green_prime(x, t, mu) - x * x / (8.0 * (mu * t * t * t).sqrt());
        let printed = -x.abs() / 2.0;
        let rederived = -x.abs() / (2.0 * t);
        holds &= (g0 - printed).abs() <= 1e-6;
        rows.push(json!({
            "t": t, "x": x, "green_at_mu_1e-14": g0, "printed_limit": printed, "rederived_limit": rederived,
            "green_prime_minus_singular_at_mu_1e-10": gp, "printed_correction": -x.abs().powi(3) / (12.0 * t * t),
        }));
    }
    probes.push(Probe {
        name: "green_small_mu_limits",
        printed: "lim G = -|x|/2; lim (G' - x^2/(8 sqrt(mu t^3))) = -|x|^3/(12 t^2)".into(),
        rederived: "lim G = -|x|/(2t); the derivative statement holds for every t".into(),
        values: json!(rows),
        printed_holds: holds,
    });

    // Massless RS boundary of the γ = 2 power law.
    let quad = Correlator::power_law(1.0, 1.0, 2.0)?;
    let b2 = massless_transition_beta(1.0, &quad);
    let bexp = massless_transition_beta(1.0, &Correlator::exponential(1.0, 1.0)?);
    probes.push(Probe {
        name: "massless_boundary_power_law_2",
        printed: "beta = 1.7583 for B = (1 + x)^-2, t = 1".into(),
        rederived: "sup_s s t beta^2 B(2s/beta) = 1, which for B = (1 + x)^-2 gives beta = 2 t^(-1/3)".into(),
        values: json!({ "power_law_2": b2, "exponential": bexp }),
        printed_holds: b2.is_some_and(|b| (b - 1.7583).abs() <= 5e-4),
    });

    // Prefactor of the superdiffusive displacement.
    let (beta, t, gamma) = (2.0, 1.0, 0.5);
    let w = wandering_exponent(&Correlator::power_law(1.0, 1.0, gamma)?, t, beta)?;
    let xs = 1e8;
    let ratio = h_frsb_massless(beta, t, gamma, xs, 0.0)? / xs.powf(2.0 * w.eta);
    let printed = w.prefactor.unwrap_or(f64::NAN);
    probes.push(Probe {
        name: "wandering_prefactor",
        printed: "H(x) ~ (2 gamma (gamma + 1)/t^2)^(1/(gamma+2)) Gamma(2 - 3/(gamma+2)) x^(3/(gamma+2))".into(),
        rederived: "half the printed prefactor".into(),
        values: json!({ "beta": beta, "t": t, "gamma": gamma, "x": xs, "H_over_power": ratio,
            "printed": printed, "rederived": w.prefactor_rederived }),
        printed_holds: (ratio / printed - 1.0).abs() <= 1e-2,
    });

    // Continuum limit of the lattice resolvent.
    let (mu, t) = (1.0, 1.0);
    let r1 = ResolventKernel::lattice(1_000_000, t)?.r1(mu);
    probes.push(Probe {
        name: "lattice_resolvent_limit",
        printed: "R_1 of the lattice tends to 1/sqrt(mu t)".into(),
        rederived: "R_1 of the lattice tends to 1/sqrt(4 mu t) (Riemann sum of 1/(mu + 4 pi^2 t xi^2))".into(),
        values: json!({ "L": 1_000_000, "mu": mu, "t": t, "lattice_r1": r1,
            "printed_limit": 1.0 / (mu * t).sqrt(), "rederived_limit": 0.5 / (mu * t).sqrt() }),
        printed_holds: (r1 - 1.0 / (mu * t).sqrt()).abs() <= 1e-2,
    });

    let failing = probes.iter().filter(|p| !p.printed_holds).count();
    let path = ctx.sink.json("errata.json", &probes)?;
    Ok(format!("errata-check: {failing} of {} printed statements disagree -> {}", probes.len(), path_str(&path)))
}
