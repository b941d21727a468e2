//! Command-line entry point.
//!
//! Exit codes (stable API): 0 all checks passed, 1 at least one check
//! failed, 2 usage error (unknown subcommand, key or value), 3 parameter
//! constraint violation, 4 unreadable config file, 5 internal error.

mod config;
mod report;
mod run;

use config::{ConfigError, RunConfig};

const HELP: &str = r#"nelson -- discretized Nelson-model laboratory

USAGE:
    nelson <SUBCOMMAND> [--config FILE] [--KEY VALUE]...

SUBCOMMANDS:
    integrals          evaluate the scalar integrals, write integrals.csv
    verify-gross       dressing-identity residuals on the dense toy
    verify-cancel      effective-potential cancellation residuals
    verify-removal     subleading-term removal deviation bounds
    verify-energy      energy sandwich + trajectory regularity constants
    verify-selfenergy  vacuum-sector self-energy kernel checks
    sweep              weak-coupling deviation sweep over the mu decade
    evolve             propagate a state and write it to disk

CONFIG:
    Plain-text file of `key = value` lines (# starts a comment); flags of
    the form --KEY VALUE override file values. Keys and defaults:
        mu = 100            scaling parameter (mu > 0)
        lambda = 0          UV cutoff (0 = derived from K / grid)
        K = 0               dressing cutoff (0 = mu^{1/3})
        eps = -1            infrared cutoff (-1 = 1/mu)
        t = 0.1             evolution time
        sigma = 1           initial-state momentum width
        preset = tiny       sweep scale: tiny | desk | full
        out_dir = out       output directory
        seed = 7            RNG seed for randomized states
        threads = 0         rayon threads (0 = all cores)
        n_max = 2           Fock truncation
        points_per_dim = 9  lattice points per dimension (odd)
        delta = 1           lattice spacing (evolve)
        grid_hi = 4         mode-grid upper edge (evolve)
        hamiltonian = hk    evolve generator: hn | hk | heps | heff
        source = discrete   scalar source: discrete | continuum
        tol_quad = 1e-10    1D quadrature tolerance
        tol_3d = 1e-6       three-variable quadrature tolerance
        tol_krylov = 1e-11  Krylov propagation tolerance
        dense_threshold = 2000  dense-path dimension cap

EXIT CODES:
    0 pass   1 check failure   2 usage error   3 constraint violation
    4 unreadable config        5 internal error
"#;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(run_cli(&args));
}

fn run_cli(args: &[String]) -> i32 {
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help" {
        print!("{HELP}");
        return if args.is_empty() { 2 } else { 0 };
    }
    let subcommand = args[0].as_str();
    let known = [
        "integrals",
        "verify-gross",
        "verify-cancel",
        "verify-removal",
        "verify-energy",
        "verify-selfenergy",
        "sweep",
        "evolve",
    ];
    if !known.contains(&subcommand) {
        eprintln!("unknown subcommand '{subcommand}' (see --help)");
        return 2;
    }

    // collect --key value pairs; --config is loaded first, flags override
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut config_path: Option<String> = None;
    let mut it = args[1..].iter();
    while let Some(flag) = it.next() {
        let Some(key) = flag.strip_prefix("--") else {
            eprintln!("expected --KEY, got '{flag}' (see --help)");
            return 2;
        };
        if key == "help" {
            print!("{HELP}");
            return 0;
        }
        let Some(value) = it.next() else {
            eprintln!("flag --{key} needs a value");
            return 2;
        };
        if key == "config" {
            config_path = Some(value.clone());
        } else {
            pairs.push((key.to_string(), value.clone()));
        }
    }

    let mut cfg = match config_path {
        Some(path) => match RunConfig::load(&path) {
            Ok(c) => c,
            Err(e) => return exit_code_for(&e),
        },
        None => RunConfig::default(),
    };
    for (k, v) in &pairs {
        if let Err(e) = cfg.set(k, v) {
            eprintln!("{e}");
            return exit_code_for(&e);
        }
    }
    if let Err(e) = cfg.finalize() {
        eprintln!("{e}");
        return exit_code_for(&e);
    }

    if cfg.threads > 0 {
        // ignore failure if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }

    match run::dispatch(subcommand, &cfg) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("{subcommand}: checks FAILED (see {}/)", cfg.out_dir);
            1
        }
        Err(e) => {
            eprintln!("{subcommand}: error: {e}");
            5
        }
    }
}

fn exit_code_for(e: &ConfigError) -> i32 {
    match e {
        ConfigError::Usage(m) => {
            eprintln!("usage error: {m}");
            2
        }
        ConfigError::Constraint(m) => {
            eprintln!("constraint violation: {m}");
            3
        }
        ConfigError::Unreadable(m) => {
            eprintln!("cannot read config: {m}");
            4
        }
    }
}
