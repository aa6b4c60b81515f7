use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use keen_core::conserved::first_integral;
use keen_core::continuation::{
    branch_kappa2_values, locate_hopf, orbit_with_amplitude, record_at, sweep, trace_branch,
};
use keen_core::integrate::integrate;
use keen_core::io::{fmt_num, Chart, CsvTable, Manifest, RunConfig};
use keen_core::reduction::{reduced_multiplier, reduction_tables, select_cycle};
use keen_core::spectral::{boundary_spectrum, interior_spectrum, transversality, SpectralReport};
use keen_core::{Error, ModelParams, State};

use crate::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Some stages failed; their outputs and diagnostics were still written.
    Incomplete(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Incomplete(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Incomplete(_) => 2,
            CliError::Core(Error::Config { .. }) => 3,
            CliError::Core(Error::Io { .. } | Error::Csv(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Where a subcommand writes `<name>.csv` and `<name>.manifest`.
struct Output {
    dir: PathBuf,
    manifest: Manifest,
    start: Instant,
}

impl Output {
    fn new(cli: &Cli, config: &RunConfig, name: &str) -> CliResult<Self> {
        let dir = cli.dir.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
        std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self {
            dir,
            manifest: Manifest::new(name, config.render()),
            start: Instant::now(),
        })
    }

    fn finish(mut self, table: &CsvTable) -> CliResult<PathBuf> {
        let name = self.manifest.command.clone();
        let csv = self.dir.join(format!("{name}.csv"));
        table.write(&csv)?;
        self.manifest.wall_time = self.start.elapsed();
        self.manifest.write(&self.dir.join(format!("{name}.manifest")))?;
        println!("wrote {}", csv.display());
        Ok(csv)
    }
}

pub fn run(cli: &Cli, config: RunConfig) -> CliResult<()> {
    let params = config.params()?;
    match &cli.command {
        Command::Calibrate => calibrate(&params, config.model.phi_at_zero),
        Command::Equilibria => equilibria(cli, &config, &params),
        Command::Spectrum { kappa2, sweep } => spectrum(cli, &config, &params, *kappa2, *sweep),
        Command::Simulate { t_end, x0, dt } => simulate(cli, &config, &params, *t_end, x0.as_deref(), *dt),
        Command::Hopf => hopf(cli, &config, &params),
        Command::Branch { kappa2 } => branch(cli, &config, &params, kappa2.as_deref()),
        Command::Reduce => reduce(cli, &config, &params),
        Command::Plot { csv, x, y, out, title } => plot(csv, x, y, out, title.as_deref()),
    }
}

fn calibrate(p: &ModelParams, phi_at_zero: f64) -> CliResult<()> {
    println!("phi0   = {}", fmt_num(p.phi0));
    println!("phi1   = {}", fmt_num(p.phi1));
    println!("kappa3 = {}", fmt_num(p.kappa3));
    println!(
        "residual Phi(lambda*) - alpha     = {:e}",
        p.phillips(p.lambda_star)? - p.alpha
    );
    println!("residual Phi(0) - phi_at_zero     = {:e}", p.phillips(0.0)? - phi_at_zero);
    println!(
        "residual kappa(pi*) - target      = {:e}",
        p.investment(p.pi_star) - p.target_investment()
    );
    Ok(())
}

fn equilibria(cli: &Cli, config: &RunConfig, p: &ModelParams) -> CliResult<()> {
    let mut out = Output::new(cli, config, "equilibria")?;
    let mut table = CsvTable::new(&["kind", "omega", "lambda", "d", "pi", "residual"]);
    let interior = p.interior_equilibrium()?;
    let spec = interior_spectrum(p)?;
    let row = |k: f64, r: &keen_core::EquilibriumReport| {
        vec![k, r.point.omega, r.point.lambda, r.point.d, r.pi0, r.residual]
    };
    table.push(row(0.0, &interior));
    println!(
        "interior      ({}, {}, {})  {}",
        fmt_num(interior.point.omega),
        fmt_num(interior.point.lambda),
        fmt_num(interior.point.d),
        spec.verdict.name()
    );
    let stage = out.manifest.stage("equilibria");
    stage.field("interior_residual", fmt_num(interior.residual));
    match boundary_spectrum(p) {
        Ok(b) => {
            table.push(row(1.0, &b.equilibrium));
            println!(
                "boundary      (0, 0, {})  {}",
                fmt_num(b.equilibrium.point.d),
                if b.stable { "stable" } else { "unstable" }
            );
            stage.field("boundary_residual", fmt_num(b.equilibrium.residual));
        }
        Err(e) => {
            println!("boundary      none ({e})");
            stage.field("boundary", format!("failed {}", e.class()));
        }
    }
    let inf = p.infinite_debt_stability();
    table.push(row(2.0, &inf.report));
    println!("infinite debt (0, 0, u = 0)  {:?}", inf.verdict);
    stage.field("infinite_debt_verdict", format!("{:?}", inf.verdict));
    println!("kind column: 0 interior, 1 boundary, 2 infinite debt (d column holds u = 1/d)");
    out.finish(&table)?;
    Ok(())
}

const SPECTRUM_COLUMNS: [&str; 15] = [
    "kappa2", "kappa3", "omega0", "lambda0", "d0", "K0", "K1", "K2", "gamma", "Omega_r", "eta", "re_real",
    "re_pair", "im_pair", "routh_hurwitz",
];

fn spectrum_row(p: &ModelParams, s: &SpectralReport) -> Vec<f64> {
    let pair = s.complex_pair();
    let e = s.equilibrium.point;
    vec![
        p.kappa2,
        p.kappa3,
        e.omega,
        e.lambda,
        e.d,
        s.k0,
        s.k1,
        s.k2,
        s.gamma,
        s.omega_r,
        s.eta,
        s.eigenvalues[0].re,
        pair.map_or(f64::NAN, |z| z.re),
        pair.map_or(f64::NAN, |z| z.im),
        if s.routh_hurwitz { 1.0 } else { 0.0 },
    ]
}

fn spectrum(cli: &Cli, config: &RunConfig, p: &ModelParams, kappa2: Option<f64>, do_sweep: bool) -> CliResult<()> {
    let mut out = Output::new(cli, config, "spectrum")?;
    let mut table = CsvTable::new(&SPECTRUM_COLUMNS);
    if do_sweep {
        let s = &config.sweep;
        let records = sweep(p, (s.kappa2_min, s.kappa2_max), s.steps);
        let stage = out.manifest.stage("sweep");
        stage.field("steps", records.len());
        for rec in &records {
            if let Some((class, _)) = &rec.failure {
                stage.field("failed", format!("kappa2 {} {class}", fmt_num(rec.kappa2)));
                continue;
            }
            let pk = p.with_kappa2(rec.kappa2)?;
            table.push(spectrum_row(&pk, &interior_spectrum(&pk)?));
        }
        println!("{} of {} sweep points", table.rows.len(), records.len());
    } else {
        let pk = match kappa2 {
            Some(k) => p.with_kappa2(k)?,
            None => *p,
        };
        let s = interior_spectrum(&pk)?;
        for (i, z) in s.eigenvalues.iter().enumerate() {
            println!("rho{} = {} {:+e} i", i + 1, fmt_num(z.re), z.im);
        }
        println!("eta = {}  verdict: {}", fmt_num(s.eta), s.verdict.name());
        out.manifest
            .stage("spectrum")
            .field("kappa2", fmt_num(pk.kappa2))
            .field("cubic_residual", fmt_num(s.cubic_residual))
            .field("verdict", s.verdict.name());
        table.push(spectrum_row(&pk, &s));
    }
    out.finish(&table)?;
    Ok(())
}

fn simulate(
    cli: &Cli,
    config: &RunConfig,
    p: &ModelParams,
    t_end: f64,
    x0: Option<&[f64]>,
    dt: f64,
) -> CliResult<()> {
    if !(t_end > 0.0 && dt > 0.0) {
        return Err(CliError::Usage("--t-end and --dt must be positive".into()));
    }
    let x0 = match x0 {
        Some(&[w, l, d]) => State::new(w, l, d),
        Some(_) => return Err(CliError::Usage("--x0 takes exactly three values: omega,lambda,d".into())),
        None => p.interior_equilibrium()?.point,
    };
    let mut out = Output::new(cli, config, "simulate")?;
    let traj = integrate(x0, (0.0, t_end), p, config.numerics.rk_tol)?;
    let fi = if p.r == 0.0 { Some(first_integral(p)?) } else { None };
    let mut header = vec!["t", "omega", "lambda", "d"];
    if fi.is_some() {
        header.push("I");
    }
    let mut table = CsvTable::new(&header);
    let n = (t_end / dt).round() as usize;
    for k in 0..=n {
        let t = (k as f64 * dt).min(t_end);
        let y = traj.eval(t);
        let mut row = vec![t, y[0], y[1], y[2]];
        if let Some(fi) = &fi {
            row.push(fi.value(y[0], y[1])?);
        }
        table.push(row);
    }
    out.manifest
        .stage("integrate")
        .field("accepted_steps", traj.stats.accepted)
        .field("rejected_steps", traj.stats.rejected)
        .field("evaluations", traj.stats.evaluations);
    out.finish(&table)?;
    Ok(())
}

fn hopf(cli: &Cli, config: &RunConfig, p: &ModelParams) -> CliResult<()> {
    let mut out = Output::new(cli, config, "hopf")?;
    let h = locate_hopf(p, (config.sweep.kappa2_min, config.sweep.kappa2_max))?;
    let tr = transversality(&p.with_kappa2(h.bisection)?)?;
    println!("kappa2* bisection = {}", fmt_num(h.bisection));
    println!("kappa2* analytic  = {}", fmt_num(h.analytic));
    println!("relative diff     = {:e}", h.relative_difference);
    println!("Omega_H           = {}", fmt_num(h.omega_h));
    println!("Hopf period       = {}", fmt_num(h.period));
    println!("real eigenvalue   = {}", fmt_num(h.real_eigenvalue));
    println!("transversality    = {} (finite difference {})", fmt_num(tr.formula), fmt_num(tr.finite_difference));
    let mut table = CsvTable::new(&[
        "kappa2_bisection",
        "kappa2_analytic",
        "relative_difference",
        "Omega_H",
        "T_H",
        "real_eigenvalue",
        "transversality",
    ]);
    table.push(vec![
        h.bisection,
        h.analytic,
        h.relative_difference,
        h.omega_h,
        h.period,
        h.real_eigenvalue,
        tr.formula,
    ]);
    out.manifest
        .stage("bisection")
        .field("iterations", h.iterations)
        .field("residual", fmt_num(h.residual));
    out.finish(&table)?;
    Ok(())
}

const BRANCH_COLUMNS: [&str; 7] = ["kappa2", "eta", "a", "A_omega", "T", "M_full", "M_reduced"];

fn branch(cli: &Cli, config: &RunConfig, p: &ModelParams, explicit: Option<&[f64]>) -> CliResult<()> {
    let mut out = Output::new(cli, config, "branch")?;
    let b = &config.branch;
    let ks = match explicit {
        Some(ks) => ks.to_vec(),
        None => branch_kappa2_values(p, b.min_gap, b.max_gap, b.points)?,
    };
    let opts = config.branch_options();
    let points = trace_branch(p, &ks, &opts);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let stage = out.manifest.stage("trace");
    stage.field("requested", ks.len()).field("attempted", points.len());
    for (i, pt) in points.iter().enumerate() {
        let r = &pt.record;
        match (&r.branch, &pt.orbit, &r.failure) {
            (Some(d), Some(orbit), _) => {
                rows.push(vec![
                    r.kappa2,
                    r.eta,
                    r.a,
                    d.a_omega,
                    d.period,
                    d.m_full,
                    d.m_reduced.unwrap_or(f64::NAN),
                ]);
                stage.field(
                    &format!("point_{i}"),
                    format!(
                        "kappa2 {} residual {:.3e} newton_iterations {} liouville_gap {:.3e}",
                        fmt_num(r.kappa2),
                        d.residual,
                        orbit.residual_history.len(),
                        d.liouville_gap
                    ),
                );
            }
            (_, _, Some((class, message))) => {
                rows.push(vec![r.kappa2, r.eta, r.a, f64::NAN, f64::NAN, f64::NAN, f64::NAN]);
                stage.field(&format!("point_{i}"), format!("kappa2 {} failed {class}: {message}", fmt_num(r.kappa2)));
                failures.push(format!("kappa2 {} ({class})", fmt_num(r.kappa2)));
            }
            _ => unreachable!("branch point without data or failure"),
        }
    }
    if points.len() < ks.len() {
        stage.field("skipped_after_failure", ks.len() - points.len());
    }
    let stage = out.manifest.stage("amplitude_match");
    if points.iter().filter(|pt| pt.orbit.is_some()).count() >= 2 {
        for &target in &b.match_amplitudes {
            let found = orbit_with_amplitude(p, target, &points, &opts).and_then(|(k2, orbit)| {
                let (pk, rec) = record_at(p, k2)?;
                let m_red = reduced_multiplier(&pk, orbit.amplitude, opts.reduced_grid).map(|x| x.1);
                Ok((rec, orbit, m_red))
            });
            match found {
                Ok((rec, orbit, m_red)) => {
                    let m_full = orbit.floquet.m_full();
                    rows.push(vec![
                        rec.kappa2,
                        rec.eta,
                        rec.a,
                        orbit.amplitude,
                        orbit.period,
                        m_full,
                        m_red.as_ref().copied().unwrap_or(f64::NAN),
                    ]);
                    stage.field(
                        &format!("A_{}", fmt_num(target)),
                        format!("kappa2 {} T {} M_full {}", fmt_num(rec.kappa2), fmt_num(orbit.period), fmt_num(m_full)),
                    );
                    println!(
                        "A_omega {}: kappa2 {} T {} M_full {} M_reduced {}",
                        fmt_num(orbit.amplitude),
                        fmt_num(rec.kappa2),
                        fmt_num(orbit.period),
                        fmt_num(m_full),
                        m_red.map_or("n/a".into(), fmt_num)
                    );
                }
                Err(e) => {
                    stage.field(&format!("A_{}", fmt_num(target)), format!("failed {}: {e}", e.class()));
                    failures.push(format!("A_omega {} ({})", fmt_num(target), e.class()));
                }
            }
        }
    } else if !b.match_amplitudes.is_empty() {
        stage.field("skipped", "fewer than two converged branch points");
    }
    rows.sort_by(|x, y| y[0].total_cmp(&x[0]));
    let mut table = CsvTable::new(&BRANCH_COLUMNS);
    for row in rows {
        table.push(row);
    }
    println!(
        "{} branch points converged of {} requested",
        points.iter().filter(|pt| pt.orbit.is_some()).count(),
        ks.len()
    );
    out.finish(&table)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Incomplete(format!("failed: {}", failures.join(", "))))
    }
}

fn reduce(cli: &Cli, config: &RunConfig, p: &ModelParams) -> CliResult<()> {
    let mut out = Output::new(cli, config, "reduce")?;
    let tables = reduction_tables(p, &config.reduce.grid(), config.numerics.theta_grid)?;
    let mut table = CsvTable::new(&["I", "A_omega", "Omega", "Omega1", "S1", "M"]);
    let mut worst_bio = 0.0_f64;
    let mut worst_cond = 0.0_f64;
    for r in &tables.rows {
        table.push(vec![r.amplitude, r.a_omega, r.omega, r.omega1, r.s1, r.multiplier]);
        worst_bio = worst_bio.max(r.biorthogonality);
        worst_cond = worst_cond.max(r.max_condition);
    }
    let stage = out.manifest.stage("reduction");
    stage
        .field("rows", tables.rows.len())
        .field("grid", tables.grid)
        .field("max_biorthogonality_error", format!("{worst_bio:.3e}"))
        .field("max_frame_condition", format!("{worst_cond:.3e}"));
    match select_cycle(&tables) {
        Ok(s) => {
            println!(
                "selected I* = {}  A_omega = {}  M = {}  attracting = {}",
                fmt_num(s.amplitude),
                fmt_num(s.a_omega),
                fmt_num(s.multiplier),
                s.attracting
            );
            stage
                .field("selected_I", fmt_num(s.amplitude))
                .field("selected_A_omega", fmt_num(s.a_omega))
                .field("predicted_frequency", fmt_num(s.predicted_frequency));
        }
        Err(e) => {
            println!("no selected cycle in the table window ({e})");
            stage.field("selection", format!("none {}", e.class()));
        }
    }
    out.finish(&table)?;
    Ok(())
}

fn plot(csv: &Path, x: &str, ys: &[String], out: &Path, title: Option<&str>) -> CliResult<()> {
    let table = CsvTable::read(csv)?;
    let col = |name: &str| {
        table.column(name).ok_or_else(|| {
            CliError::Usage(format!(
                "no column `{name}` in {} (columns: {})",
                csv.display(),
                table.header.join(", ")
            ))
        })
    };
    let xs = col(x)?;
    let series = ys
        .iter()
        .map(|y| col(y).map(|v| xs.iter().copied().zip(v).collect()))
        .collect::<CliResult<Vec<_>>>()?;
    let chart = Chart {
        title: title.map_or_else(|| format!("{} vs {x}", ys.join(", ")), str::to_string),
        x_label: x.to_string(),
        y_label: ys.join(", "),
        series,
    };
    std::fs::write(out, chart.render()).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    println!("wrote {}", out.display());
    Ok(())
}
