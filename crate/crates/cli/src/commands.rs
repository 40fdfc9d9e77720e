use std::fmt::Write as _;
use std::time::Instant;

use meanfield::amp::{
    amp_run, gram_deviation, gram_tests, se_compare, state_evolution, state_evolution_quadrature, write_compare_csv,
    AmpOptions, InitLaw, Separable, MIN_MC_SAMPLES,
};
use meanfield::ensembles::{sample_goe, sample_pspin, sample_spiked, PriorSpec, Seed, SymmetricMatrix, DEFAULT_ENTRY_BUDGET};
use meanfield::hamiltonian::{
    brute_force_opt, enumerate_energies, free_energy_from_energies, MixingPolynomial, PSpinInstance,
};
use meanfield::iamp::{
    control_diagnostics, round_to_cube, round_to_sphere, run_iamp, spectral_baseline, ControlField, IampOptions,
};
use meanfield::parisi::{minimize, solve_pde, spherical_value, Boundary, GridParams, MinimizeOptions};
use meanfield::sparse_mp::{bp_marginals, exact_marginals, run_bp, write_beliefs_csv, GraphicalModel, MAX_ENUMERATION_STATES};
use meanfield::spiked::{run_bayes_amp, threshold_table, write_threshold_csv, BayesAmpOptions};
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;
use crate::report::{Diagnostic, Metrics, Outcome, Repetition, RunReport};

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_mixing(c: &ExperimentConfig) -> CliResult<MixingPolynomial> {
    match &c.xi {
        None => Ok(MixingPolynomial::sk()),
        Some(s) => s.parse().map_err(|e: meanfield::Error| usage(format!("--xi: {e}"))),
    }
}

fn rep_seed(c: &ExperimentConfig, r: usize) -> u64 {
    c.seed.wrapping_add(r as u64)
}

/// Runs repetitions in parallel; results come back in repetition order.
fn repetitions<F>(c: &ExperimentConfig, f: F) -> CliResult<Vec<(Repetition, Vec<(String, Vec<u8>)>)>>
where
    F: Fn(usize, u64) -> CliResult<(Metrics, Vec<(String, Vec<u8>)>)> + Sync,
{
    (0..c.repetitions)
        .into_par_iter()
        .map(|r| {
            let seed = rep_seed(c, r);
            let (metrics, files) = f(r, seed)?;
            Ok((Repetition { index: r, seed, metrics }, files))
        })
        .collect()
}

fn split(runs: Vec<(Repetition, Vec<(String, Vec<u8>)>)>) -> (Vec<Repetition>, Vec<(String, Vec<u8>)>) {
    let mut reps = Vec::new();
    let mut files = Vec::new();
    for (r, f) in runs {
        reps.push(r);
        files.extend(f);
    }
    (reps, files)
}

fn flag(b: bool) -> f64 {
    if b { 1.0 } else { 0.0 }
}

/// Dispatches on `config.command`.
pub fn execute(config: &ExperimentConfig) -> CliResult<Outcome> {
    config.validate()?;
    let start = Instant::now();
    let mut o = match config.command {
        Command::Parisi => cmd_parisi(config)?,
        Command::Iamp => cmd_iamp(config)?,
        Command::Spiked => cmd_spiked(config)?,
        Command::AmpSe => cmd_amp_se(config)?,
        Command::Bp => cmd_bp(config)?,
        Command::Oracle => cmd_oracle(config)?,
    };
    o.report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(o)
}

/// [`execute`] on a private pool of `threads` workers.
pub fn execute_with_threads(config: &ExperimentConfig, threads: usize) -> CliResult<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("thread pool: {e}")))?;
    pool.install(|| execute(config))
}

fn finish(
    c: &ExperimentConfig,
    inputs: &[u8],
    shared: Metrics,
    runs: Vec<(Repetition, Vec<(String, Vec<u8>)>)>,
    mut files: Vec<(String, Vec<u8>)>,
    diagnostics: Vec<Diagnostic>,
    summary: String,
) -> Outcome {
    let (reps, rep_files) = split(runs);
    files.extend(rep_files);
    let report = RunReport::new(c.clone(), inputs, shared, reps, diagnostics, 0.0);
    Outcome { report, files, summary }
}

pub fn cmd_parisi(c: &ExperimentConfig) -> CliResult<Outcome> {
    let mixing = parse_mixing(c)?;
    let boundary = match c.boundary.as_deref().unwrap_or("ising") {
        "ising" => Boundary::Ising,
        "spherical" => Boundary::spherical(),
        other => return Err(usage(format!("--boundary must be ising or spherical, got '{other}'"))),
    };
    let k = c.rsb.unwrap_or(3);
    let grid = GridParams::<f64> { nodes: c.grid.unwrap_or(2048), ..GridParams::default() };
    let closed = matches!(boundary, Boundary::Spherical { .. }).then(|| spherical_value::<f64>(&mixing));
    let runs = repetitions(c, |r, seed| {
        let defaults = MinimizeOptions::<f64>::default();
        let opts = MinimizeOptions {
            restarts: c.restarts.unwrap_or(defaults.restarts),
            max_evals: c.max_evals.unwrap_or(defaults.max_evals),
            seed,
            ..defaults
        };
        let fit = minimize(&mixing, boundary, k, &grid, &opts)?;
        let mut m = Metrics::new();
        m.insert("value".into(), fit.value.value);
        m.insert("correction".into(), fit.value.correction);
        m.insert("phi00".into(), fit.value.phi00);
        m.insert("evals".into(), fit.evals as f64);
        m.insert("converged".into(), flag(fit.converged));
        if let Boundary::Spherical { multiplier } = fit.boundary {
            m.insert("multiplier".into(), multiplier);
        }
        if let Some(cf) = closed {
            m.insert("closed_form_gap".into(), (fit.value.value - cf).abs());
        }
        let mut prof = String::from("level,t_start,t_end,gamma\n");
        let bp = fit.profile.breakpoints();
        for (i, g) in fit.profile.values().iter().enumerate() {
            let _ = writeln!(prof, "{},{:?},{:?},{:?}", i + 1, bp[i], bp[i + 1], g);
        }
        let mut files = vec![(format!("profile_rep{r}.csv"), prof.into_bytes())];
        if c.dump_pde.unwrap_or(false) {
            let sol = solve_pde(&fit.profile, &mixing, fit.boundary, &grid)?;
            let mut buf = Vec::new();
            sol.write_csv(&mut buf)?;
            files.push((format!("pde_rep{r}.csv"), buf));
        }
        Ok((m, files))
    })?;
    let mut shared = Metrics::new();
    if let Some(cf) = closed {
        shared.insert("closed_form".into(), cf);
    }
    let values: Vec<f64> = runs.iter().map(|(r, _)| r.metrics["value"]).collect();
    let mut diags = vec![Diagnostic::new("finite value", values.iter().all(|v| v.is_finite()), format!("{values:?}"))];
    if closed.is_some() {
        let gap = runs.iter().map(|(r, _)| r.metrics["closed_form_gap"]).fold(0.0, f64::max);
        diags.push(Diagnostic::new("spherical closed form", gap <= 5e-3, format!("max gap {gap:.3e}")));
    }
    let summary = values.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join("\n");
    Ok(finish(c, &[], shared, runs, vec![], diags, summary))
}

pub fn cmd_iamp(c: &ExperimentConfig) -> CliResult<Outcome> {
    let mixing = parse_mixing(c)?;
    let n = c.n.unwrap_or(4000);
    let delta = c.delta.unwrap_or(1.0 / 40.0);
    let spherical = match c.control.as_deref().unwrap_or("spherical") {
        "spherical" => true,
        "parisi" => false,
        other => return Err(usage(format!("--control must be spherical or parisi, got '{other}'"))),
    };
    if spherical && (c.rsb.is_some() || c.grid.is_some() || c.max_evals.is_some() || c.restarts.is_some()) {
        return Err(usage("--rsb/--grid/--max-evals/--restarts need --control parisi"));
    }
    let sk = mixing == MixingPolynomial::sk();
    let baseline = c.baseline.unwrap_or(false);
    if baseline && !sk {
        return Err(usage("the spectral baseline is defined for SK mixing only"));
    }
    let mut shared = Metrics::new();
    let control = if spherical {
        shared.insert("spherical_value".into(), spherical_value::<f64>(&mixing));
        ControlField::spherical(&mixing, delta)?
    } else {
        let grid = GridParams::<f64> { nodes: c.grid.unwrap_or(2048), ..GridParams::default() };
        let defaults = MinimizeOptions::<f64>::default();
        let opts = MinimizeOptions {
            restarts: c.restarts.unwrap_or(defaults.restarts),
            max_evals: c.max_evals.unwrap_or(defaults.max_evals),
            seed: c.seed,
            ..defaults
        };
        let fit = minimize(&mixing, Boundary::Ising, c.rsb.unwrap_or(3), &grid, &opts)?;
        shared.insert("parisi_value".into(), fit.value.value);
        ControlField::ising_from_profile(&fit.profile, &mixing, delta, &grid)?
    };
    let cd = control_diagnostics(&control, 20_000, 4, &Seed::new(c.seed, "iamp/control"))?;
    shared.insert("control_value".into(), cd.value);
    let runs = repetitions(c, |r, seed| {
        let mut m = Metrics::new();
        let (instance, a) = if sk {
            let a = sample_goe::<f64>(n, &Seed::new(seed, "iamp/goe"))?;
            (PSpinInstance::sk(&a), Some(a))
        } else {
            (sample_pspin::<f64>(&mixing, n, &Seed::new(seed, "iamp/pspin"), DEFAULT_ENTRY_BUDGET)?, None)
        };
        let opts = IampOptions { seed, ..IampOptions::default() };
        let traj = run_iamp(&instance, &control, &opts)?;
        let rounded =
            if spherical { round_to_sphere(&instance, traj.last())? } else { round_to_cube(&instance, traj.last())? };
        let last = traj.steps.last().expect("at least one step");
        m.insert("energy".into(), rounded.energy_after);
        m.insert("energy_m".into(), rounded.energy_raw);
        m.insert("rounding_loss".into(), -rounded.raw_change());
        m.insert("final_norm".into(), last.norm);
        let steps = &traj.steps[1..];
        m.insert("max_orthogonality".into(), steps.iter().map(|s| s.orthogonality.abs()).fold(0.0, f64::max));
        m.insert(
            "max_increment_error".into(),
            steps.iter().map(|s| (s.increment - delta).abs() / delta).fold(0.0, f64::max),
        );
        m.insert("flagged".into(), flag(traj.flagged));
        if let (true, Some(a)) = (baseline, &a) {
            m.insert("baseline_energy".into(), spectral_baseline(a)?.energy);
        }
        let mut csv = String::from("t,norm,orthogonality,energy\n");
        for s in &traj.steps {
            let _ = writeln!(csv, "{:?},{:?},{:?},{:?}", s.t, s.norm, s.orthogonality, s.energy);
        }
        Ok((m, vec![(format!("iamp_rep{r}.csv"), csv.into_bytes())]))
    })?;
    let flagged = runs.iter().filter(|(r, _)| r.metrics["flagged"] > 0.0).count();
    let diags = vec![Diagnostic::new("trajectory diagnostics", flagged == 0, format!("{flagged} flagged repetition(s)"))];
    let energies: Vec<String> = runs.iter().map(|(r, _)| format!("{:.6}", r.metrics["energy"])).collect();
    let summary = format!("energy per repetition: {}", energies.join(" "));
    Ok(finish(c, &[], shared, runs, vec![], diags, summary))
}

pub fn cmd_spiked(c: &ExperimentConfig) -> CliResult<Outcome> {
    let prior: PriorSpec = c
        .prior
        .as_deref()
        .unwrap_or("rademacher")
        .parse()
        .map_err(|e: meanfield::Error| usage(format!("--prior: {e}")))?;
    let lambdas = c.lambda_grid.clone().unwrap_or_else(|| vec![0.5, 1.0, 1.5, 2.0]);
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(usage("--lambda-grid needs finite nonnegative values"));
    }
    let n = c.n.unwrap_or(0);
    if n == 0 && (c.steps.is_some() || c.repetitions > 1) {
        return Err(usage("--steps and repetitions need --n > 0"));
    }
    let table = threshold_table(&prior, &lambdas)?;
    let mut shared = Metrics::new();
    for row in &table {
        shared.insert(format!("gamma_alg@{}", row.lambda), row.gamma_alg);
        shared.insert(format!("rho_alg@{}", row.lambda), row.rho_alg);
        shared.insert(format!("gamma_bayes@{}", row.lambda), row.gamma_bayes);
        shared.insert(format!("rho_bayes@{}", row.lambda), row.rho_bayes);
    }
    let mut csv = Vec::new();
    write_threshold_csv(&table, &mut csv)?;
    let files = vec![("thresholds.csv".to_string(), csv)];
    let runs = if n == 0 {
        Vec::new()
    } else {
        let opts = BayesAmpOptions { steps: c.steps.unwrap_or(30), ..BayesAmpOptions::default() };
        repetitions(c, |r, seed| {
            let mut m = Metrics::new();
            let mut csv = String::from("lambda,step,overlap,predicted\n");
            for &l in &lambdas {
                let inst = sample_spiked::<f64>(n, l, &prior, &Seed::new(seed, "spiked"))?;
                let res = run_bayes_amp(&inst, &opts)?;
                for (k, (o, p)) in res.overlaps.iter().zip(&res.predicted).enumerate() {
                    let _ = writeln!(csv, "{l},{},{o:?},{p:?}", k + 1);
                }
                m.insert(format!("overlap@{l}"), *res.overlaps.last().expect("steps >= 1"));
                m.insert(format!("predicted@{l}"), *res.predicted.last().expect("steps >= 1"));
            }
            Ok((m, vec![(format!("overlaps_rep{r}.csv"), csv.into_bytes())]))
        })?
    };
    let finite = shared.values().all(|v| v.is_finite());
    let diags = vec![Diagnostic::new("finite thresholds", finite, "")];
    let mut summary = String::from("lambda gamma_alg gamma_bayes");
    for row in &table {
        let _ = write!(summary, "\n{} {:.8} {:.8}", row.lambda, row.gamma_alg, row.gamma_bayes);
    }
    Ok(finish(c, &[], shared, runs, files, diags, summary))
}

fn parse_table(s: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for pair in s.split(',') {
        let (x, y) = pair.split_once(':').ok_or_else(|| usage(format!("table entry '{pair}' is not x:y")))?;
        xs.push(x.trim().parse().map_err(|_| usage(format!("bad knot '{x}'")))?);
        ys.push(y.trim().parse().map_err(|_| usage(format!("bad value '{y}'")))?);
    }
    Ok((xs, ys))
}

pub fn cmd_amp_se(c: &ExperimentConfig) -> CliResult<Outcome> {
    let name = c.schedule.as_deref().unwrap_or("tanh");
    if name != "tanh" && c.gain.is_some() {
        return Err(usage("--gain applies to the tanh schedule only"));
    }
    if (name == "table") != c.table.is_some() {
        return Err(usage("--table is required by, and only valid with, --schedule table"));
    }
    let schedule = match name {
        "tanh" => Separable::tanh(c.gain.unwrap_or(1.0)),
        "identity" => Separable::identity(),
        "table" => {
            let (xs, ys) = parse_table(c.table.as_deref().expect("checked"))?;
            Separable::table(xs, ys)?
        }
        other => return Err(usage(format!("--schedule must be tanh, identity or table, got '{other}'"))),
    };
    let n = c.n.unwrap_or(10_000);
    let steps = c.steps.unwrap_or(8);
    let mc = c.mc_samples.unwrap_or(MIN_MC_SAMPLES);
    let onsager = c.onsager.unwrap_or(true);
    let law = InitLaw::default();
    let se_seed = Seed::new(c.seed, "amp-se/se");
    let se = match c.se_method.as_deref().unwrap_or("quadrature") {
        "quadrature" => state_evolution_quadrature::<f64, _>(&schedule, &law, steps, mc, &se_seed)?,
        "monte-carlo" => state_evolution::<f64, _>(&schedule, &law, steps, mc, &se_seed)?,
        other => return Err(usage(format!("--se-method must be quadrature or monte-carlo, got '{other}'"))),
    };
    let mut shared = Metrics::new();
    for k in 1..=steps {
        shared.insert(format!("q@{k}"), se.cov(k, k).expect("in range"));
    }
    let tests = gram_tests::<f64>(steps);
    let runs = repetitions(c, |r, seed| {
        let (x0, z) = law.sample::<f64>(n, &Seed::new(seed, "amp-se/init"));
        let a = sample_goe::<f64>(n, &Seed::new(seed, "amp-se/goe"))?;
        let traj = amp_run(&a, &schedule, &x0, &z, steps, &AmpOptions { onsager })?;
        drop(a);
        let dev = gram_deviation(&traj, &se);
        let mut m = Metrics::new();
        for (k, d) in dev.iter().enumerate() {
            m.insert(format!("gram_dev@{}", k + 1), *d);
        }
        m.insert("max_gram_dev".into(), dev.last().copied().unwrap_or(0.0));
        let rows = se_compare(&traj, &se, &tests)?;
        let mut buf = Vec::new();
        write_compare_csv(&rows, &mut buf)?;
        Ok((m, vec![(format!("compare_rep{r}.csv"), buf)]))
    })?;
    let worst = runs.iter().map(|(r, _)| r.metrics["max_gram_dev"]).fold(0.0, f64::max);
    let diags = vec![Diagnostic::new("finite deviations", worst.is_finite(), format!("max {worst:.4}"))];
    let summary = format!("max |Gram/n - Q| over repetitions: {worst:.4}");
    Ok(finish(c, &[], shared, runs, vec![], diags, summary))
}

pub fn cmd_bp(c: &ExperimentConfig) -> CliResult<Outcome> {
    let file = match &c.model {
        Some(path) => {
            if c.n.is_some() || c.alphabet.is_some() || c.max_degree.is_some() || c.scale.is_some() {
                return Err(usage("--model excludes the random-tree options"));
            }
            let text = std::fs::read_to_string(path)?;
            let model: GraphicalModel<f64> = text.parse()?;
            Some((text, model))
        }
        None => None,
    };
    let max_iters = c.max_iters.unwrap_or(100);
    let tol = c.tol.unwrap_or(1e-12);
    let damping = c.damping.unwrap_or(0.0);
    let runs = repetitions(c, |r, seed| {
        let model = match &file {
            Some((_, m)) => m.clone(),
            None => {
                let n = c.n.unwrap_or(10);
                GraphicalModel::random_tree(
                    n,
                    c.alphabet.unwrap_or(3),
                    c.max_degree.unwrap_or(n.max(2) - 1).max(1),
                    c.scale.unwrap_or(1.0),
                    &Seed::new(seed, "bp"),
                )?
            }
        };
        let run = run_bp(&model, max_iters, tol, damping)?;
        let beliefs = bp_marginals(&model, &run.messages);
        let mut m = Metrics::new();
        m.insert("iterations".into(), run.iterations as f64);
        m.insert("converged".into(), flag(run.converged));
        m.insert("last_change".into(), run.last_change);
        m.insert("normalization_error".into(), run.messages.normalization_error());
        let tree = model.graph().is_tree();
        m.insert("tree".into(), flag(tree));
        if tree {
            m.insert("diameter".into(), model.graph().diameter() as f64);
        }
        if (model.q() as f64).powi(model.n() as i32) <= MAX_ENUMERATION_STATES {
            let exact = exact_marginals(&model)?;
            let err = beliefs
                .iter()
                .zip(&exact)
                .flat_map(|(b, e)| b.iter().zip(e).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            m.insert("exact_error".into(), err);
        }
        let mut buf = Vec::new();
        write_beliefs_csv(&beliefs, &mut buf)?;
        Ok((m, vec![(format!("beliefs_rep{r}.csv"), buf)]))
    })?;
    let norm = runs.iter().map(|(r, _)| r.metrics["normalization_error"]).fold(0.0, f64::max);
    let mut diags = vec![Diagnostic::new("message normalization", norm <= 1e-12, format!("max {norm:.2e}"))];
    let tree_errs: Vec<f64> = runs
        .iter()
        .filter(|(r, _)| r.metrics["tree"] > 0.0)
        .filter_map(|(r, _)| r.metrics.get("exact_error").copied())
        .collect();
    if !tree_errs.is_empty() {
        let worst = tree_errs.iter().copied().fold(0.0, f64::max);
        diags.push(Diagnostic::new("tree exactness", worst <= 1e-10, format!("max error {worst:.2e}")));
    }
    let inputs = file.map(|(t, _)| t.into_bytes()).unwrap_or_default();
    let summary = format!("max normalization error {norm:.2e}");
    Ok(finish(c, &inputs, Metrics::new(), runs, vec![], diags, summary))
}

/// Dense whitespace-separated square matrix, one row per line, `#` comments.
pub fn parse_matrix(text: &str) -> CliResult<SymmetricMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| usage(format!("bad matrix entry '{t}'")))).collect())
        .collect::<CliResult<_>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(usage("matrix file must hold a nonempty square array"));
    }
    Ok(SymmetricMatrix::from_dense(n, &rows.concat())?)
}

pub fn cmd_oracle(c: &ExperimentConfig) -> CliResult<Outcome> {
    let betas = c.beta.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(usage("--beta needs positive finite values"));
    }
    let fixed = match &c.matrix {
        Some(path) => {
            if c.n.is_some() {
                return Err(usage("--matrix fixes n; drop --n"));
            }
            let text = std::fs::read_to_string(path)?;
            let a = parse_matrix(&text)?;
            Some((text, a))
        }
        None => None,
    };
    let n = c.n.unwrap_or(10);
    let runs = repetitions(c, |_, seed| {
        let a = match &fixed {
            Some((_, a)) => a.clone(),
            None => sample_goe::<f64>(n, &Seed::new(seed, "oracle/goe"))?,
        };
        let h = PSpinInstance::sk(&a);
        let energies = enumerate_energies(&h)?;
        let opt = brute_force_opt(&h)?;
        let mut m = Metrics::new();
        m.insert("opt".into(), opt.value);
        for &b in &betas {
            let phi = free_energy_from_energies(&energies, h.n(), b)?;
            m.insert(format!("phi@{b}"), phi);
            m.insert(format!("gap@{b}"), phi / b - opt.value);
        }
        Ok((m, Vec::new()))
    })?;
    let mut worst = f64::NEG_INFINITY;
    for (r, _) in &runs {
        for &b in &betas {
            worst = worst.max(r.metrics[&format!("gap@{b}")].abs() - std::f64::consts::LN_2 / b);
        }
    }
    let diags = vec![Diagnostic::new("free-energy sandwich", worst <= 1e-12, format!("max excess {worst:.3e}"))];
    let summary = runs.iter().map(|(r, _)| format!("OPT = {:.6}", r.metrics["opt"])).collect::<Vec<_>>().join("\n");
    let inputs = fixed.map(|(t, _)| t.into_bytes()).unwrap_or_default();
    Ok(finish(c, &inputs, Metrics::new(), runs, vec![], diags, summary))
}
