//! Command-line laboratory driver.
//!
//! Exit codes: 0 success, 2 config error, 3 solver failure (no sweep point
//! succeeded), 4 theorem-backed check violated beyond its slack.

use clap::{Parser, Subcommand};
use nelson_lab::atomic::{assemble_schrodinger, solve_atomic, validate_class};
use nelson_lab::cache::Cache;
use nelson_lab::config::{load_config, load_preset, RunConfig};
use nelson_lab::error::Error;
use nelson_lab::field::enumerate_fock;
use nelson_lab::ircheck::{
    binding_energy, compute_cq, ir_record, j_decomposition, kappa_sweep_with,
    localization_report, pull_through_from, write_sweep_csv, SweepReport,
};
use nelson_lab::model::{
    assemble_van_hove, build_model, self_energy_bracket, solve_ground, van_hove_closed_form,
};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nelson-lab",
    about = "Numerical laboratory for the infrared behaviour of the cutoff Nelson model"
)]
struct Cli {
    /// path to a TOML (or .json) run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// name of a shipped preset (vanhove, harmonic_c1, gaussian_c2)
    #[arg(long, global = true)]
    preset: Option<String>,
    /// output directory for CSV/JSON artifacts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// worker threads for the kappa sweep (0 = library default)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// disable the per-point record cache
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the atomic (particle-only) problem and report the level table
    Atomic,
    /// Frozen-particle oracle: exact diagonalization vs the coherent-state closed form
    Oracle,
    /// Full infrared sweep over the configured kappa list
    Sweep,
    /// Single-kappa battery: every enabled check at the smallest kappa
    Verify,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_THEOREM: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Error::Config { field, message }) => {
            eprintln!("config error at `{field}`: {message}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), None) => load_config(path),
        (None, Some(name)) => load_preset(name),
        _ => Err(Error::Config {
            field: "--config/--preset".into(),
            message: "exactly one of --config or --preset is required".into(),
        }),
    }?;
    if cli.no_cache {
        cfg.cache = false;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let cfg = load(cli)?;
    if cli.jobs > 0 {
        // ignore failure: a pool may already exist in-process (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    std::fs::create_dir_all(&cli.out)?;

    match cli.command {
        Command::Atomic => cmd_atomic(&cfg, &cli.out),
        Command::Oracle => cmd_oracle(&cfg, &cli.out),
        Command::Sweep => cmd_sweep(&cfg, &cli.out),
        Command::Verify => cmd_verify(&cfg, &cli.out),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_atomic(cfg: &RunConfig, out: &Path) -> Result<u8, Error> {
    let h_at = assemble_schrodinger(&cfg.potential, &cfg.grid)?;
    let basis = solve_atomic(&h_at, &cfg.grid, cfg.levels, cfg.eig_tol)?;
    let class = validate_class(&cfg.potential, &basis)?;
    let report = json!({
        "grid": cfg.grid,
        "energies": basis.energies,
        "residuals": basis.residuals,
        "class": class,
    });
    write_json(&out.join("atomic.json"), &report)?;
    println!("atomic levels:");
    for (i, (e, r)) in basis.energies.iter().zip(&basis.residuals).enumerate() {
        println!("  E[{i}] = {e:+.12e}   residual {r:.2e}");
    }
    println!("wrote {}", out.join("atomic.json").display());
    Ok(0)
}

fn cmd_oracle(cfg: &RunConfig, out: &Path) -> Result<u8, Error> {
    let h_at = assemble_schrodinger(&cfg.potential, &cfg.grid)?;
    let basis = solve_atomic(&h_at, &cfg.grid, 1, cfg.eig_tol)?;
    let e_at = basis.e_at();

    let mut rows = Vec::new();
    let mut worst_e = 0.0f64;
    let mut worst_n = 0.0f64;
    for &kappa in &cfg.kappas {
        let model = cfg.model_config(kappa);
        let modes = model.build_modes()?;
        let fock = enumerate_fock(modes.modes.len(), cfg.n_max, cfg.total_max)?;
        let h = assemble_van_hove(&modes, &fock, e_at, cfg.q)?;
        let gs = solve_ground(&h, cfg.eig_tol, cfg.max_matvecs)?;
        let n_num = gs
            .psi
            .iter()
            .enumerate()
            .map(|(i, c)| fock.total_occupation(i) as f64 * c.norm_sqr())
            .sum::<f64>();
        let closed = van_hove_closed_form(&modes, e_at, cfg.q);
        worst_e = worst_e.max((gs.energy - closed.energy).abs());
        worst_n = worst_n.max((n_num - closed.n_expect).abs());
        rows.push(json!({
            "kappa": kappa,
            "e_numeric": gs.energy,
            "e_closed": closed.energy,
            "n_numeric": n_num,
            "n_closed": closed.n_expect,
            "tail_weight": gs.tail_weight,
            "displacements": closed.displacements,
        }));
        println!(
            "kappa = {kappa:<8} E = {:+.12e} (closed {:+.12e})   <N> = {:.12e} (closed {:.12e})",
            gs.energy, closed.energy, n_num, closed.n_expect
        );
    }
    let report = json!({
        "e_at": e_at,
        "q": cfg.q,
        "max_abs_e_diff": worst_e,
        "max_abs_n_diff": worst_n,
        "rows": rows,
    });
    write_json(&out.join("oracle.json"), &report)?;
    println!("wrote {}", out.join("oracle.json").display());
    Ok(0)
}

/// Run the configured kappa sweep through the record cache.
fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<SweepReport, Error> {
    let cache = if cfg.cache {
        Cache::new(&out.join("cache"), true)?
    } else {
        Cache::disabled()
    };
    let template = cfg.model_config(cfg.kappas[0]);
    kappa_sweep_with(
        &template,
        &cfg.kappas,
        cfg.shells_per_decade,
        cfg.tail_gate,
        |point| {
            if let Some(hit) = cache.get(point, cfg.frozen) {
                return Ok(hit);
            }
            let rec = ir_record(point, cfg.frozen)?;
            cache.put(point, cfg.frozen, &rec)?;
            Ok(rec)
        },
    )
}

/// Theorem-backed acceptance of a sweep: every successful point must sit
/// inside the measured divergence bracket (up to the residual slack) and
/// inside the self-energy bracket (up to the eigensolver residual).
fn sweep_violations(report: &SweepReport) -> Vec<String> {
    let mut violations = Vec::new();
    for p in &report.points {
        let Some(r) = &p.record else { continue };
        let allow = r.residual_slack + 1e-10;
        if r.slack_lower < -allow || r.slack_upper < -allow {
            violations.push(format!(
                "kappa = {}: <N> = {:.6e} outside [{:.6e}, {:.6e}] beyond slack {:.2e}",
                r.kappa, r.n_expect, r.ine1_lower, r.ine1_upper, allow
            ));
        }
        if r.tri_n_slack < -1e-10 || r.tri_s1_slack < -1e-10 {
            violations.push(format!(
                "kappa = {}: triangle inequality violated (N: {:.3e}, S1: {:.3e})",
                r.kappa, r.tri_n_slack, r.tri_s1_slack
            ));
        }
        let tol = 1e-8 + r.eig_residual;
        if r.e < r.e_lower - tol || r.e > r.e_at + tol {
            violations.push(format!(
                "kappa = {}: E = {:.9e} outside self-energy bracket [{:.9e}, {:.9e}]",
                r.kappa, r.e, r.e_lower, r.e_at
            ));
        }
        if (r.n_expect - r.n_sum_a).abs() > 1e-8 {
            violations.push(format!(
                "kappa = {}: number identity violated by {:.3e}",
                r.kappa,
                (r.n_expect - r.n_sum_a).abs()
            ));
        }
    }
    violations
}

fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<u8, Error> {
    let report = run_sweep(cfg, out)?;

    let csv_path = out.join("sweep.csv");
    let mut csv = Vec::new();
    write_sweep_csv(&report, &mut csv)?;
    std::fs::write(&csv_path, &csv)?;

    let violations = sweep_violations(&report);
    let n_ok = report.points.iter().filter(|p| p.record.is_some()).count();
    let summary = json!({
        "config": cfg,
        "report": report,
        "violations": violations,
        "points_succeeded": n_ok,
        "points_total": report.points.len(),
    });
    write_json(&out.join("summary.json"), &summary)?;

    for p in &report.points {
        match (&p.record, &p.error) {
            (Some(r), _) => println!(
                "kappa = {:<8} E = {:+.9e}  <N> = {:.6e}  x2 = {:.4e}  tail = {:.2e}",
                r.kappa, r.e, r.n_expect, r.x2, r.tail_weight
            ),
            (None, Some(e)) => println!("kappa = {:<8} FAILED: {e}", p.kappa),
            (None, None) => unreachable!(),
        }
    }
    println!(
        "slope d<N>/dlog(Lambda/kappa) = {:.6e}  bracket [{:.6e}, {:.6e}]",
        report.slope, report.bracket.0, report.bracket.1
    );
    println!("wrote {} and summary.json", csv_path.display());

    if n_ok == 0 {
        eprintln!("no sweep point succeeded");
        return Ok(EXIT_SOLVER);
    }
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("THEOREM VIOLATION: {v}");
        }
        return Ok(EXIT_THEOREM);
    }
    Ok(0)
}

fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<u8, Error> {
    let kappa = *cfg.kappas.last().expect("validated non-empty");
    let model = cfg.model_config(kappa);
    let mut checks: Vec<(String, bool, String)> = Vec::new();
    let mut report = serde_json::Map::new();
    report.insert("kappa".into(), json!(kappa));

    if cfg.frozen {
        // frozen runs reduce to the oracle comparison
        let rec = ir_record(&model, true)?;
        let allow = rec.residual_slack + 1e-10;
        checks.push((
            "number_identity".into(),
            (rec.n_expect - rec.n_sum_a).abs() <= 1e-10,
            format!("|<N> - sum||a psi||^2| = {:.3e}", (rec.n_expect - rec.n_sum_a).abs()),
        ));
        checks.push((
            "ine1_bracket".into(),
            rec.slack_lower >= -allow && rec.slack_upper >= -allow,
            format!("<N> = {:.6e} in [{:.6e}, {:.6e}]", rec.n_expect, rec.ine1_lower, rec.ine1_upper),
        ));
        let tol = 1e-8 + rec.eig_residual;
        checks.push((
            "self_energy_bracket".into(),
            rec.e >= rec.e_lower - tol && rec.e <= rec.e_at + tol,
            format!("E = {:.9e} in [{:.9e}, {:.9e}]", rec.e, rec.e_lower, rec.e_at),
        ));
        report.insert("record".into(), serde_json::to_value(&rec).unwrap());
        return finish_verify(checks, report, out);
    }

    let built = build_model(&model)?;
    let gs = solve_ground(&built.matrix, model.eig_tol, model.max_matvecs)?;
    let dec = j_decomposition(&gs, &built.matrix, model.solve_tol)?;
    let rec = ir_record(&model, false)?;
    report.insert("record".into(), serde_json::to_value(&rec).unwrap());

    // exact identities first
    checks.push((
        "number_identity".into(),
        (rec.n_expect - rec.n_sum_a).abs() <= 1e-10,
        format!("|<N> - sum||a psi||^2| = {:.3e}", (rec.n_expect - rec.n_sum_a).abs()),
    ));
    let tol = 1e-8 + rec.eig_residual;
    checks.push((
        "self_energy_bracket".into(),
        rec.e >= rec.e_lower - tol && rec.e <= rec.e_at + tol,
        format!("E = {:.9e} in [{:.9e}, {:.9e}]", rec.e, rec.e_lower, rec.e_at),
    ));

    if cfg.checks.pull_through {
        let pt = pull_through_from(&dec, gs.tail_weight);
        let ok = gs.tail_weight == 0.0 || pt.ratio_vs_tail <= 10.0;
        checks.push((
            "pull_through".into(),
            ok,
            format!("max ||r_j|| = {:.3e}, ratio vs sqrt(tail) = {:.3e}", pt.max, pt.ratio_vs_tail),
        ));
        report.insert("pull_through".into(), serde_json::to_value(&pt).unwrap());
    }
    if cfg.checks.ine1 {
        let allow = rec.residual_slack + 1e-10;
        checks.push((
            "ine1_bracket".into(),
            rec.slack_lower >= -allow && rec.slack_upper >= -allow,
            format!("<N> = {:.6e} in [{:.6e}, {:.6e}] (slack {:.2e})", rec.n_expect, rec.ine1_lower, rec.ine1_upper, allow),
        ));
        checks.push((
            "triangle_inequalities".into(),
            rec.tri_n_slack >= -1e-10 && rec.tri_s1_slack >= -1e-10,
            format!("N slack {:.3e}, S1 slack {:.3e}", rec.tri_n_slack, rec.tri_s1_slack),
        ));
    }
    if cfg.checks.binding {
        let b = binding_energy(&model)?;
        let ok = b.e_bin >= -b.e_at - (b.free_offset + 1e-3);
        checks.push((
            "binding_energy".into(),
            ok,
            format!("E_bin = {:.6e} >= -E_at - offset = {:.6e}", b.e_bin, -b.e_at - b.free_offset),
        ));
        report.insert("binding".into(), serde_json::to_value(&b).unwrap());
    }
    if cfg.checks.localization {
        let loc = localization_report(&built, &gs, cfg.checks.c0, cfg.checks.n0)?;
        checks.push((
            "localization".into(),
            loc.x2.is_finite() && loc.dx.is_finite() && loc.exp_moment.is_finite(),
            format!("x2 = {:.6e}, dx = {:.6e}, <e^(2 c0 |x|)> = {:.6e}", loc.x2, loc.dx, loc.exp_moment),
        ));
        report.insert("localization".into(), serde_json::to_value(&loc).unwrap());
    }
    if cfg.checks.constants {
        let c1c2 = match (cfg.potential.c1, cfg.potential.c2) {
            (Some(c1), Some(c2)) => Some((c1, c2)),
            _ => None,
        };
        let constants = compute_cq(cfg.q, cfg.lambda, c1c2)?;
        let ok = match constants.x2_bound {
            Some(bound) => rec.x2 <= bound,
            None => true,
        };
        checks.push((
            "constants_chain".into(),
            ok,
            format!("C_q = {:.6e}, x2 = {:.6e}, bound = {:?}", constants.c_q, rec.x2, constants.x2_bound),
        ));
        report.insert("constants".into(), serde_json::to_value(&constants).unwrap());
    }
    let (e_lower, e_upper) = self_energy_bracket(&built.modes, built.basis.e_at(), cfg.q);
    report.insert("self_energy_bracket".into(), json!([e_lower, e_upper]));

    finish_verify(checks, report, out)
}

fn finish_verify(
    checks: Vec<(String, bool, String)>,
    mut report: serde_json::Map<String, serde_json::Value>,
    out: &Path,
) -> Result<u8, Error> {
    let mut failed = false;
    let check_rows: Vec<serde_json::Value> = checks
        .iter()
        .map(|(name, ok, detail)| {
            println!("[{}] {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
            if !*ok {
                failed = true;
            }
            json!({ "name": name, "pass": ok, "detail": detail })
        })
        .collect();
    report.insert("checks".into(), json!(check_rows));
    write_json(&out.join("verify.json"), &serde_json::Value::Object(report))?;
    println!("wrote {}", out.join("verify.json").display());
    Ok(if failed { EXIT_THEOREM } else { 0 })
}
