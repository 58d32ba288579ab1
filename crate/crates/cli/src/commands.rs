use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bondfield::bounds::{check_coefficients, compute_bounds, gradient_sup_bound, CheckReport as Family};
use bondfield::duality::{conjugate_potential, hc_boundary_residual, hc_flux, HC_TOL};
use bondfield::field::{field_grid, sup_grad, BoundingBox};
use bondfield::operator::solve as solve_coefficients;
use bondfield::parallel::map_slice;
use bondfield::sweep::{acceptance_sweep, loglog_slope, run_sweep, SweepConfig};
use bondfield::verify::{
    decay_check, flux_integral, robin_residual, verify, DecayReport, FluxReport, VerifyOptions, DECAY_GROWTH,
    FLUX_TOL, ROBIN_TOL,
};
use bondfield::{ComplexPotential, ConformalFrame, Execution};
use serde::Deserialize;

use crate::report::{
    CheckEntry, CheckReport, ConfigCheck, Params, Residuals, SolveReport, SweepSummary, SCHEMA_VERSION,
};
use crate::{CheckArgs, ConfigArgs, FieldArgs, Mode, SolveArgs, SweepArgs};

const ROBIN_SAMPLES: usize = 256;
const FLUX_NODES: usize = 1024;
const HC_SAMPLES: usize = 256;
const DECAY_RADII: [f64; 3] = [1e2, 1e3, 1e4];

#[derive(Debug)]
pub enum CliError {
    Core(bondfield::Error),
    Invalid(String),
    Io(PathBuf, io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(bondfield::Error::Conditioning { .. } | bondfield::Error::TruncationCap { .. }) => 3,
            Self::Core(_) | Self::Invalid(_) => 2,
            Self::Io(..) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Core(e) => write!(f, "{e}"),
            Self::Invalid(msg) => write!(f, "{msg}"),
            Self::Io(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

impl From<bondfield::Error> for CliError {
    fn from(e: bondfield::Error) -> Self {
        Self::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Lc => "lc",
        Mode::Hc => "hc",
    }
}

impl ConfigArgs {
    /// The bonding parameter matching the mode.
    fn parameter(&self) -> CliResult<f64> {
        match (self.mode, self.gamma, self.alpha) {
            (Mode::Lc, Some(g), None) => Ok(g),
            (Mode::Hc, None, Some(a)) => Ok(a),
            (Mode::Lc, _, _) => Err(CliError::Invalid("--mode lc takes --gamma (and not --alpha)".into())),
            (Mode::Hc, _, _) => Err(CliError::Invalid("--mode hc takes --alpha (and not --gamma)".into())),
        }
    }

    fn params(&self) -> Params {
        Params {
            r: self.r,
            eps: self.eps,
            mode: mode_name(self.mode),
            gamma: self.gamma,
            alpha: self.alpha,
            tol: self.tol,
        }
    }

    /// Solved potential in the requested reading.
    fn potential(&self) -> CliResult<(ConformalFrame, ComplexPotential)> {
        let param = self.parameter()?;
        let frame = ConformalFrame::from_params(self.r, self.eps)?;
        let lc = ComplexPotential::new(solve_coefficients(&frame, param, self.tol)?);
        let pot = match self.mode {
            Mode::Lc => lc,
            Mode::Hc => conjugate_potential(&lc),
        };
        Ok((frame, pot))
    }
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Io(p.to_path_buf(), e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    let name = path.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut out = open_output(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Io(name, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

fn decay_radii(r: f64) -> Vec<f64> {
    DECAY_RADII.iter().map(|k| k * r).collect()
}

pub fn solve(args: &SolveArgs) -> CliResult<ExitCode> {
    let cfg = &args.config;
    let (frame, pot) = cfg.potential()?;
    let param = cfg.parameter()?;
    let sol = pot.solution();
    let grad_bound = if param > 0.0 {
        Some(gradient_sup_bound(&compute_bounds(&frame, param)?))
    } else {
        None
    };
    let residuals = match cfg.mode {
        Mode::Lc => {
            let v = verify(&pot, &VerifyOptions::default())?;
            Residuals {
                robin_d1: Some(v.robin_residual_d1),
                robin_d2: Some(v.robin_residual_d2),
                robin_const_d1: Some(v.robin_const_d1),
                robin_const_d2: Some(v.robin_const_d2),
                flux_d1: v.flux_d1,
                flux_d2: v.flux_d2,
                decay_product: v.decay_product,
                ..Residuals::default()
            }
        }
        Mode::Hc => {
            let res = hc_boundary_residual(&pot, param, HC_SAMPLES)?;
            let flux = hc_flux(&pot, FLUX_NODES)?;
            let decay = decay_check(&pot, &decay_radii(cfg.r))?;
            Residuals {
                hc_d1: Some(res.residual[0]),
                hc_d2: Some(res.residual[1]),
                flux_d1: flux.flux[0],
                flux_d2: flux.flux[1],
                decay_product: decay.max_product(),
                ..Residuals::default()
            }
        }
    };
    let report = SolveReport {
        schema_version: SCHEMA_VERSION,
        kind: "solve",
        params: cfg.params(),
        rho: frame.rho(),
        beta: frame.beta(),
        mu: frame.mu(),
        n: sol.order(),
        lambda_i: sol.lambda_i(),
        lambda_e: sol.lambda_e(),
        tail_bound: sol.tail_bound(),
        sup_grad: sup_grad(&pot),
        grad_bound,
        residuals,
    };
    emit(args.out.as_deref(), &to_json(&report))?;
    Ok(ExitCode::SUCCESS)
}

fn parse_grid(spec: &str) -> CliResult<(BoundingBox, usize, usize)> {
    let bad = || CliError::Invalid(format!("--grid expects x0,y0,x1,y1,nx,ny; got `{spec}`"));
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(bad());
    }
    let mut coords = [0.0; 4];
    for (c, p) in coords.iter_mut().zip(&parts[..4]) {
        *c = p.parse().map_err(|_| bad())?;
    }
    let nx = parts[4].parse().map_err(|_| bad())?;
    let ny = parts[5].parse().map_err(|_| bad())?;
    let bbox = BoundingBox::new(coords[0], coords[1], coords[2], coords[3])?;
    Ok((bbox, nx, ny))
}

pub fn field(args: &FieldArgs) -> CliResult<ExitCode> {
    let (bbox, nx, ny) = parse_grid(&args.grid)?;
    let (_, pot) = args.config.potential()?;
    let grid = field_grid(&pot, bbox, nx, ny)?;
    let mut text = String::from("x,y,u,ux,uy,grad_norm\n");
    for s in grid.present() {
        text.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            s.x, s.y, s.u, s.ux, s.uy, s.grad_norm
        ));
    }
    emit(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn ratio(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

pub fn sweep(args: &SweepArgs) -> CliResult<ExitCode> {
    if args.eps_list.len() < 3 {
        return Err(CliError::Invalid(format!(
            "--eps-list needs at least 3 values, got {}",
            args.eps_list.len()
        )));
    }
    let mut cfgs: Vec<SweepConfig> = args.eps_list.iter().map(|&e| SweepConfig::new(args.r, e, args.gamma)).collect();
    if args.baseline {
        cfgs.extend(args.eps_list.iter().map(|&e| SweepConfig::new(args.r, e, 0.0)));
    }
    let rows = run_sweep(&cfgs, args.tol)?;
    let mut csv = String::from("eps,gamma,sup_grad,grad_bound\n");
    for row in &rows {
        let bound = if row.grad_bound.is_finite() {
            format!("{:.16e}", row.grad_bound)
        } else {
            "inf".to_string()
        };
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e},{bound}\n", row.eps, row.gamma, row.sup_grad));
    }
    let k = args.eps_list.len();
    let main: Vec<f64> = rows[..k].iter().map(|r| r.sup_grad).collect();
    let base: Option<Vec<f64>> = args.baseline.then(|| rows[k..].iter().map(|r| r.sup_grad).collect());
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        kind: "sweep_summary",
        r: args.r,
        gamma: args.gamma,
        eps: args.eps_list.clone(),
        slope: loglog_slope(&args.eps_list, &main)?,
        max_min_ratio: ratio(&main),
        all_within_bound: rows[..k].iter().all(|r| r.within_bound()),
        baseline_slope: base.as_ref().map(|b| loglog_slope(&args.eps_list, b)).transpose()?,
        baseline_sup_grad: base,
        sup_grad: main,
    };
    emit(args.out.as_deref(), &csv)?;
    let json = to_json(&summary);
    match &args.summary {
        Some(p) => emit(Some(p), &json)?,
        None => eprint!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Deserialize)]
struct SweepRecord {
    r: f64,
    eps: f64,
    gamma: f64,
}

fn read_sweep_file(path: &Path) -> CliResult<Vec<SweepConfig>> {
    let file = File::open(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for rec in reader.deserialize::<SweepRecord>() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => CliError::Io(path.to_path_buf(), io::Error::other(e.to_string())),
            _ => CliError::Invalid(format!("{}: {e}", path.display())),
        })?;
        out.push(SweepConfig::new(rec.r, rec.eps, rec.gamma));
    }
    if out.is_empty() {
        return Err(CliError::Invalid(format!("{}: no configurations", path.display())));
    }
    Ok(out)
}

fn family_entry(name: &str, c: &Family) -> CheckEntry {
    CheckEntry {
        name: name.to_string(),
        passed: c.passed,
        value: c.worst_margin,
        limit: 0.0,
        margin: c.worst_margin,
    }
}

fn limit_entry(name: &str, value: f64, limit: f64) -> CheckEntry {
    CheckEntry {
        name: name.to_string(),
        passed: value <= limit,
        value,
        limit,
        margin: limit - value,
    }
}

fn flux_entries(checks: &mut Vec<CheckEntry>, flux: &FluxReport) {
    for j in 0..2 {
        let limit = FLUX_TOL * flux.r * flux.max_boundary_grad[j].max(1.0);
        checks.push(limit_entry(&format!("flux_d{}", j + 1), flux.flux[j].abs(), limit));
    }
}

fn decay_entry(decay: &DecayReport) -> CheckEntry {
    let first = decay.products.first().copied().unwrap_or(0.0);
    let last = decay.products.last().copied().unwrap_or(0.0);
    let mut e = limit_entry("decay", last, (DECAY_GROWTH * first).max(1e-14));
    e.passed = decay.bounded();
    e
}

fn check_one(cfg: &SweepConfig, mode: Mode, tol: f64, corrupt: bool) -> CliResult<ConfigCheck> {
    let frame = ConformalFrame::from_params(cfg.r, cfg.eps)?;
    let mut sol = solve_coefficients(&frame, cfg.gamma, tol)?;
    if corrupt {
        sol.perturb_c(1, 1e-3)?;
    }
    let n = sol.order();
    let mut checks = Vec::new();
    if cfg.gamma > 0.0 {
        let bounds = compute_bounds(&frame, cfg.gamma)?;
        let rep = check_coefficients(&sol, &bounds);
        checks.push(family_entry("sandwich_lower", &rep.sandwich.lower));
        checks.push(family_entry("sandwich_upper", &rep.sandwich.upper));
        checks.push(family_entry("envelope_rough", &rep.envelopes.rough));
        checks.push(family_entry("envelope_offset", &rep.envelopes.offset));
        checks.push(family_entry("envelope_c", &rep.envelopes.c));
        checks.push(family_entry("difference_laplacian", &rep.differences.laplacian));
        checks.push(family_entry("difference_gradient", &rep.differences.gradient));
    }
    let lc = ComplexPotential::new(sol);
    if cfg.gamma > 0.0 {
        let bound = gradient_sup_bound(&compute_bounds(&frame, cfg.gamma)?);
        checks.push(limit_entry("gradient_bound", sup_grad(&lc), bound));
    }
    let radii = decay_radii(cfg.r);
    match mode {
        Mode::Lc => {
            let robin = robin_residual(&lc, cfg.gamma, ROBIN_SAMPLES)?;
            for (j, c) in robin.iter().enumerate() {
                let limit = ROBIN_TOL * (1.0 + c.constant.abs());
                checks.push(limit_entry(&format!("robin_residual_d{}", j + 1), c.residual, limit));
            }
            flux_entries(&mut checks, &flux_integral(&lc, FLUX_NODES)?);
            checks.push(decay_entry(&decay_check(&lc, &radii)?));
        }
        Mode::Hc => {
            let hc = conjugate_potential(&lc);
            let res = hc_boundary_residual(&hc, cfg.gamma, HC_SAMPLES)?;
            let limit = HC_TOL * res.max_boundary_grad.max(1.0);
            for j in 0..2 {
                checks.push(limit_entry(&format!("hc_residual_d{}", j + 1), res.residual[j], limit));
            }
            flux_entries(&mut checks, &hc_flux(&hc, FLUX_NODES)?);
            checks.push(decay_entry(&decay_check(&hc, &radii)?));
        }
    }
    Ok(ConfigCheck {
        r: cfg.r,
        eps: cfg.eps,
        gamma: cfg.gamma,
        n,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

pub fn check(args: &CheckArgs) -> CliResult<ExitCode> {
    let cfgs = match (&args.sweep_file, args.r, args.eps, args.gamma) {
        (Some(path), ..) => read_sweep_file(path)?,
        (None, Some(r), Some(eps), Some(gamma)) => vec![SweepConfig::new(r, eps, gamma)],
        _ => acceptance_sweep(),
    };
    let corrupt = args.corrupt.is_some();
    let results = map_slice(&cfgs, Execution::default(), |c| check_one(c, args.mode, args.tol, corrupt));
    let configurations = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let passed = configurations.iter().all(|c| c.passed);
    let report = CheckReport {
        schema_version: SCHEMA_VERSION,
        kind: "check",
        mode: mode_name(args.mode),
        passed,
        configurations,
    };
    emit(args.out.as_deref(), &to_json(&report))?;
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
