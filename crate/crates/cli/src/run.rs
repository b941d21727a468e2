//! Subcommand implementations: each builds its toy models, runs the core
//! experiment, writes a CSV plus a JSON metadata sidecar into the output
//! directory and reports pass/fail.

use crate::config::RunConfig;
use crate::report::Reporter;
use nelson_core::experiments::common::caps;
use nelson_core::experiments::{self, basis_hash, SweepRecord, ToySpec};
use nelson_core::ham::{self, PhysParams, ScalarSource};
use nelson_core::integrals::{self, ScalarResult};
use nelson_core::ops::Particle;
use nelson_core::propagate::{krylov_expmv, KrylovOptions};
use serde_json::json;
use std::error::Error;

type DynResult<T> = Result<T, Box<dyn Error>>;

pub fn dispatch(subcommand: &str, cfg: &RunConfig) -> DynResult<bool> {
    let reporter = Reporter::new(cfg)?;
    match subcommand {
        "integrals" => cmd_integrals(cfg, &reporter),
        "verify-gross" => cmd_gross(cfg, &reporter),
        "verify-cancel" => cmd_cancel(cfg, &reporter),
        "verify-removal" => cmd_removal(cfg, &reporter),
        "verify-energy" => cmd_energy(cfg, &reporter),
        "verify-selfenergy" => cmd_selfenergy(cfg, &reporter),
        "sweep" => cmd_sweep(cfg, &reporter),
        "evolve" => cmd_evolve(cfg, &reporter),
        _ => unreachable!("filtered in main"),
    }
}

const INTEGRALS_HEADER: &str = "quantity,mu,K,lambda,eps,x,s,value,error_estimate,method";

fn integral_row(
    quantity: &str,
    cfg_params: (f64, f64, f64, f64),
    x: f64,
    s: f64,
    r: &ScalarResult,
) -> String {
    let (mu, k, lambda, eps) = cfg_params;
    format!(
        "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
        quantity,
        mu,
        k,
        lambda,
        eps,
        x,
        s,
        r.value,
        r.abs_error_estimate,
        r.method.as_str()
    )
}

fn cmd_integrals(cfg: &RunConfig, reporter: &Reporter) -> DynResult<bool> {
    let p = (cfg.mu, cfg.k_cut, cfg.lambda, cfg.eps);
    let mut rows = Vec::new();
    let mut all_ok = true;
    let mut push = |q: &str, x: f64, s: f64, r: ScalarResult, must_converge: bool| {
        if must_converge && !r.converged {
            all_ok = false;
        }
        rows.push(integral_row(q, p, x, s, &r));
    };

    push("E_log_closed", 0.0, 0.0, integrals::self_energy_log_term(cfg.mu, cfg.lambda), true);
    push(
        "E_log_quadrature",
        0.0,
        0.0,
        integrals::self_energy_log_term_quadrature(cfg.mu, cfg.lambda),
        true,
    );
    push("E_total", 0.0, 0.0, integrals::e_big(cfg.mu, cfg.lambda), true);
    push("E_K0", 0.0, 0.0, integrals::e_k0(cfg.mu, cfg.k_cut), true);
    push("e0", 0.0, 0.0, integrals::e0_constant(cfg.tol_3d), true);
    push("V_K_l2_norm_sq", 0.0, 0.0, integrals::v_k_l2_norm_sq(cfg.mu, cfg.k_cut), true);
    for x in [0.5, 1.0, 2.0] {
        push("V_K", x, 0.0, integrals::v_k_potential(x, cfg.mu, cfg.k_cut), true);
    }
    for x in [1.0, 2.0] {
        push("W", x, 0.0, integrals::w_coulomb(x)?, true);
    }
    let wt_tol = if cfg.preset == "tiny" { 3e-3 } else { 1e-4 };
    for x in [0.0, 1.0] {
        push("W_tilde", x, 0.0, integrals::w_tilde(x, cfg.mu, cfg.k_cut, wt_tol), false);
    }
    for (name, r) in integrals::form_factor_norms(cfg.mu, cfg.k_cut, 0.5) {
        push(name, 0.0, 0.5, r, true);
    }
    for (name, r) in integrals::form_factor_norms(cfg.mu, cfg.k_cut, 0.25) {
        if name == "norm_omega_s_kB" {
            push(name, 0.0, 0.25, r, true);
        }
    }

    reporter.write_csv("integrals.csv", INTEGRALS_HEADER, &rows)?;
    reporter.write_metadata(
        "integrals.json",
        "integrals",
        all_ok,
        &[],
        json!({"rows": rows.len()}),
    )?;
    println!("integrals: {} rows -> {}", rows.len(), reporter.out_path("integrals.csv").display());
    Ok(all_ok)
}

fn cmd_gross(cfg: &RunConfig, reporter: &Reporter) -> DynResult<bool> {
    let (params, toy) = experiments::gross::standard_toy();
    let n_list: Vec<usize> = match cfg.preset.as_str() {
        "desk" => vec![2, 3, 4, 5],
        "full" => vec![2, 3, 4, 5, 6],
        _ => vec![2, 3, 4],
    };
    let report = experiments::verify_gross_identity(&params, &toy, &n_list)?;
    let records = report.to_records()?;
    reporter.write_records("gross.csv", &records)?;
    let passed = report.passed();
    reporter.write_metadata(
        "gross.json",
        "verify-gross",
        passed,
        &[],
        json!({
            "residuals": report.residuals,
            "strictly_decreasing": report.strictly_decreasing,
            "k_eq_lambda_residual": report.k_eq_lambda_residual,
            "scalar_audit_err": report.scalar_audit_err,
        }),
    )?;
    for (n, r) in &report.residuals {
        println!("gross: n_max = {n}: residual = {r:.6e}");
    }
    println!("gross: K = Lambda residual = {:.6e}", report.k_eq_lambda_residual);
    Ok(passed)
}

fn cmd_cancel(cfg: &RunConfig, reporter: &Reporter) -> DynResult<bool> {
    let mus = cfg.mu_list();
    let reports = experiments::cancellation_sweep(&mus, cfg.sigma)?;
    let mut records = Vec::new();
    for r in &reports {
        records.extend(r.to_records()?);
    }
    reporter.write_records("cancel.csv", &records)?;
    let monotone = reports
        .windows(2)
        .all(|w| w[1].diag_residual < w[0].diag_residual && w[1].offdiag_residual < w[0].offdiag_residual);
    let ratio_ok = reports
        .iter()
        .all(|r| r.diag_ratio < caps::CANCEL_RATIO && r.offdiag_ratio < caps::CANCEL_RATIO);
    let passed = monotone && ratio_ok;
    reporter.write_metadata(
        "cancel.json",
        "verify-cancel",
        passed,
        &[],
        json!({
            "monotone": monotone,
            "ratio_cap": caps::CANCEL_RATIO,
            "diag_residuals": reports.iter().map(|r| r.diag_residual).collect::<Vec<_>>(),
            "offdiag_residuals": reports.iter().map(|r| r.offdiag_residual).collect::<Vec<_>>(),
        }),
    )?;
    for r in &reports {
        println!(
            "cancel: mu = {:.0}: diag {:.3e} offdiag {:.3e}",
            r.params.mu, r.diag_residual, r.offdiag_residual
        );
    }
    Ok(passed)
}

fn cmd_removal(cfg: &RunConfig, reporter: &Reporter) -> DynResult<bool> {
    let mus = cfg.mu_list();
    let t_grid = [0.0, cfg.t * 0.25, cfg.t * 0.5, cfg.t];
    let reports = experiments::removal_sweep(&mus, &t_grid, cfg.sigma)?;
    let mut records = Vec::new();
    for r in &reports {
        records.extend(r.to_records()?);
    }
    reporter.write_records("removal.csv", &records)?;
    let passed = reports.iter().all(|rep| {
        rep.nondecreasing_in_t
            && rep
                .records
                .iter()
                .all(|r| r.ratio < caps::REMOVAL_RATIO)
    });
    reporter.write_metadata(
        "removal.json",
        "verify-removal",
        passed,
        &[],
        json!({
            "ratio_cap": caps::REMOVAL_RATIO,
            "max_ratio": reports
                .iter()
                .flat_map(|rep| rep.records.iter().map(|r| r.ratio))
                .fold(0.0f64, f64::max),
        }),
    )?;
    for rep in &reports {
        if let Some(r) = rep.records.last() {
            println!(
                "removal: mu = {:.0}: deviation^2({}) = {:.3e} (ratio {:.3e})",
                r.params.mu, r.t, r.deviation_sq, r.ratio
            );
        }
    }
    Ok(passed)
}

fn cmd_energy(cfg: &RunConfig, reporter: &Reporter) -> DynResult<bool> {
    let (mu_list, k_list): (Vec<f64>, Vec<f64>) = match cfg.preset.as_str() {
        "desk" => (vec![20.0, 100.0, 500.0], vec![2.0, 4.0, 8.0]),
        "full" => (vec![20.0, 100.0, 500.0, 2000.0], vec![2.0, 4.0, 8.0, 16.0]),
        _ => (vec![20.0, 100.0], vec![2.0, 4.0]),
    };
    let t_grid = [cfg.t * 0.5, cfg.t];
    let report =
        experiments::verify_energy_sandwich(&mu_list, &k_list, cfg.n_max.max(2), &t_grid, cfg.sigma)?;
    let records = report.to_records()?;
    reporter.write_records("energy.csv", &records)?;
    let passed = report.max_sandwich_constant() < caps::SANDWICH
        && report.max_trajectory_constant() < caps::TRAJECTORY;
    reporter.write_metadata(
        "energy.json",
        "verify-energy",
        passed,
        &[],
        json!({
            "sandwich_cap": caps::SANDWICH,
            "trajectory_cap": caps::TRAJECTORY,
            "max_sandwich": report.max_sandwich_constant(),
            "max_trajectory": report.max_trajectory_constant(),
        }),
    )?;
    println!(
        "energy: max sandwich constant {:.3e}, max trajectory constant {:.3e}",
        report.max_sandwich_constant(),
        report.max_trajectory_constant()
    );
    Ok(passed)
}

fn cmd_selfenergy(cfg: &RunConfig, reporter: &Reporter) -> DynResult<bool> {
    let mus = cfg.mu_list();
    let report = experiments::selfenergy_sweep(&mus, cfg.sigma)?;
    let records = report.to_records()?;
    reporter.write_records("selfenergy.csv", &records)?;
    let ratio_ok = report
        .records
        .iter()
        .all(|r| r.diag_ratio < caps::SELFENERGY_RATIO && r.offdiag_ratio < caps::SELFENERGY_RATIO);
    let passed = report.gap_shrinking && ratio_ok;
    reporter.write_metadata(
        "selfenergy.json",
        "verify-selfenergy",
        passed,
        &[],
        json!({
            "ratio_cap": caps::SELFENERGY_RATIO,
            "gap_shrinking": report.gap_shrinking,
            "gaps": report.records.iter().map(|r| r.diag_gap).collect::<Vec<_>>(),
        }),
    )?;
    for r in &report.records {
        println!(
            "selfenergy: mu = {:.0}: diag gap {:.3e}, offdiag {:.3e}",
            r.params.mu, r.diag_gap, r.offdiag_norm
        );
    }
    Ok(passed)
}

fn cmd_sweep(cfg: &RunConfig, reporter: &Reporter) -> DynResult<bool> {
    let (grid, basis) = experiments::sweep::standard_toy(cfg.n_max)?;
    let mus = cfg.mu_list();
    let report = experiments::sweep_theorem(&mus, &grid, &basis, cfg.t, cfg.sigma)?;
    let mut records = report.records.clone();
    // slope row for CSV consumers
    let slope_params = PhysParams::new(mus[0], cfg.lambda.max(4.0), 4.0, 0.0, cfg.t)?;
    records.push(SweepRecord::new(
        "theorem_loglog_slope",
        &slope_params,
        report.loglog_slope,
        if report.strictly_decreasing { 1.0 } else { 0.0 },
    )?);
    reporter.write_records("sweep.csv", &records)?;
    let passed = report.passed();
    reporter.write_metadata(
        "sweep.json",
        "sweep",
        passed,
        &[basis_hash(&basis)],
        json!({
            "deviations": report.deviations,
            "loglog_slope": report.loglog_slope,
            "strictly_decreasing": report.strictly_decreasing,
            "linear_growth_coeff": report.linear_growth_coeff,
        }),
    )?;
    for (mu, dev) in &report.deviations {
        println!("sweep: mu = {mu:.0}: deviation^2 = {dev:.6e}");
    }
    println!("sweep: log-log slope = {:.3}", report.loglog_slope);
    Ok(passed)
}

fn cmd_evolve(cfg: &RunConfig, reporter: &Reporter) -> DynResult<bool> {
    let toy = ToySpec::d1(cfg.delta, cfg.points_per_dim, cfg.grid_hi, cfg.n_max);
    let (grid, basis) = toy.build()?;
    let params = PhysParams::new(cfg.mu, cfg.lambda, cfg.k_cut, cfg.eps, cfg.t)?;
    let source = if cfg.source == "continuum" {
        ScalarSource::Continuum
    } else {
        ScalarSource::Discrete
    };
    let h = match cfg.hamiltonian.as_str() {
        "hn" => ham::assemble_hn(&params, &grid, &basis)?,
        "heps" => ham::assemble_heps_k(&params, &grid, &basis, source, true)?,
        "heff" => ham::assemble_heff(&params, &basis, source)?,
        _ => ham::assemble_hk(&params, &grid, &basis, source, true)?,
    };
    let psi0 = experiments::gaussian_state(&basis, cfg.sigma);
    let t_op = nelson_core::ops::field_energy(0.0, f64::INFINITY, &grid, &basis);
    let ptot = nelson_core::ops::total_momentum(&grid, &basis)?;
    let opts = KrylovOptions::default();
    let steps = 5usize;
    let mut rows = Vec::new();
    let mut psi = psi0.clone();
    let e0 = psi.expectation(&h);
    for s in 0..=steps {
        let t_here = cfg.t * s as f64 / steps as f64;
        if s > 0 {
            psi = krylov_expmv(&h, &psi, cfg.t / steps as f64, cfg.tol_krylov, &opts)?;
        }
        let energy = psi.expectation(&h);
        let nbos = psi.expectation(&t_op);
        let p0 = psi.expectation(&ptot[0]);
        rows.push(format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            t_here,
            psi.norm(),
            energy,
            nbos,
            p0
        ));
        let _ = e0;
    }
    reporter.write_csv("evolve.csv", "t,norm,energy,field_energy,p_tot_0", &rows)?;

    // binary state dump: flat little-endian (re, im) pairs
    let mut bytes = Vec::with_capacity(16 * psi.amplitudes.len());
    for a in &psi.amplitudes {
        bytes.extend_from_slice(&a.re.to_le_bytes());
        bytes.extend_from_slice(&a.im.to_le_bytes());
    }
    std::fs::write(reporter.out_path("state.bin"), &bytes)?;
    reporter.write_metadata(
        "state.json",
        "evolve",
        true,
        &[basis_hash(&basis)],
        json!({
            "provenance": psi.provenance,
            "dim": psi.dim(),
            "norm": psi.norm(),
            "hamiltonian": h.label,
            "operator_metadata": h.metadata,
            "format": "complex128 little-endian (re, im) pairs, flat tensor index",
        }),
    )?;
    println!(
        "evolve: |psi(t)| = {:.12}, wrote {}",
        psi.norm(),
        reporter.out_path("state.bin").display()
    );
    Ok(true)
}
