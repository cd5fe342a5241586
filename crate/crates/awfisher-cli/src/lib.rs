//! Command implementations behind the `awfisher` binary.
//!
//! Everything here is deterministic in the seed flags: randomized work is
//! chunked over fixed RNG substreams (see `awfisher_core::rng`), chunk
//! results are merged in index order, and row-parallel maps preserve input
//! order, so the output bytes do not depend on `--threads`.

pub mod analyze;
pub mod cli;
pub mod error;
pub mod matrix;
pub mod plotdata;
pub mod simcmd;
pub mod table_io;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use awfisher_core::{Method, NullTable, SlopeMethod, StudyConfig};

use crate::cli::{Cli, CombineArgs, Command, NullCmd, OnInvalid, PlotdataCmd, RatesArgs, SimCmd,
                 SlopesArgs};
use crate::error::{CliError, Result};
use crate::matrix::InvalidPolicy;

/// Runs a parsed command inside a dedicated thread pool of `--threads`
/// workers (0 = machine parallelism).
pub fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Combine(args) => run_combine(args),
        Command::Null(cmd) => run_null(cmd),
        Command::Sim(SimCmd::Rates(args)) => run_rates(args),
        Command::Sim(SimCmd::Slopes(args)) => run_slopes(args),
        Command::Plotdata(cmd) => run_plotdata(cmd),
    }
}

fn run_combine(args: CombineArgs) -> Result<()> {
    let policy = match args.on_invalid {
        OnInvalid::Error => InvalidPolicy::Error,
        OnInvalid::Drop => InvalidPolicy::Drop,
    };
    let (matrix, dropped) = matrix::load_matrix(&args.input, policy)?;
    if dropped > 0 {
        eprintln!("dropped {dropped} rows with invalid p-values");
    }

    let method: Method = args.method.into();
    let table: Option<NullTable> = if method == Method::AwFisher {
        let path = args.null_table.as_ref().ok_or_else(|| {
            CliError::Usage("--method aw-fisher requires --null-table".into())
        })?;
        Some(table_io::read_table(path)?)
    } else {
        None
    };

    let output = analyze::analyze(&matrix, method, table.as_ref(), args.fdr)?;
    if output.bound_violations > 0 {
        eprintln!(
            "warning: {} feature(s) have Monte Carlo p-values outside the analytic bounds \
             by more than 3 standard errors",
            output.bound_violations
        );
    }

    let to_stdout = args.out == Path::new("-");
    analyze::write_results_csv(open_output(&args.out)?, &output.results)?;

    // weight-category summary; sent to stderr when the CSV owns stdout
    if method == Method::AwFisher {
        let significant = output.results.iter().filter(|r| r.significant).count();
        let mut summary = format!(
            "significant: {significant} of {} (fdr {})\n",
            output.results.len(),
            args.fdr
        );
        for (category, count) in analyze::categorize(&output.results) {
            summary.push_str(&format!("category {category}: {count}\n"));
        }
        if to_stdout {
            eprint!("{summary}");
        } else {
            print!("{summary}");
        }
    }
    Ok(())
}

fn run_null(cmd: NullCmd) -> Result<()> {
    match cmd {
        NullCmd::Build { k, draws, seed, out } => {
            let table = table_io::parallel_build(k, draws, seed)?;
            table_io::write_table(&table, &out)?;
            println!("wrote {} (k={k}, draws={draws}, seed={seed})", out.display());
            Ok(())
        }
        NullCmd::Inspect { table } => {
            let table = table_io::read_table(&table)?;
            print!("{}", table_io::inspect_text(&table));
            Ok(())
        }
    }
}

fn study_configs(effects: &[f64], lambdas: Option<&[f64]>) -> Result<Vec<StudyConfig>> {
    match lambdas {
        None => Ok(effects.iter().map(|&e| StudyConfig::new(e)).collect()),
        Some(ls) if ls.len() == effects.len() => Ok(effects
            .iter()
            .zip(ls)
            .map(|(&e, &l)| StudyConfig::with_lambda(e, l))
            .collect()),
        Some(ls) => Err(CliError::Usage(format!(
            "--lambdas has {} entries but --effects has {}",
            ls.len(),
            effects.len()
        ))),
    }
}

fn run_rates(args: RatesArgs) -> Result<()> {
    let configs = study_configs(&args.effects, args.lambdas.as_deref())?;
    let points = simcmd::parallel_rates(&configs, &args.n.0, args.reps, args.seed)?;
    simcmd::write_rates_csv(open_output(&args.out_rates)?, &points)?;

    let (fits, failures) = simcmd::fit_rate_curves(&configs, &points);
    for (study, err) in &failures {
        eprintln!("warning: decay-law fit failed for study {study}: {err}");
    }
    if fits.is_empty() {
        return Err(CliError::Numeric(
            "every decay-law fit failed (no positive rates to fit)".into(),
        ));
    }
    simcmd::write_fits_csv(open_output(&args.out_fits)?, &fits)?;
    println!(
        "wrote {} rate points to {} and {} fits to {}",
        points.len(),
        args.out_rates.display(),
        fits.len(),
        args.out_fits.display()
    );
    Ok(())
}

fn run_slopes(args: SlopesArgs) -> Result<()> {
    let configs = study_configs(&args.effects, args.lambdas.as_deref())?;
    let methods: Vec<SlopeMethod> = args.methods.iter().map(|&m| m.into()).collect();
    let table: Option<NullTable> = if methods.contains(&SlopeMethod::AwFisher) {
        let path = args.null_table.as_ref().ok_or_else(|| {
            CliError::Usage("slope method aw-fisher requires --null-table".into())
        })?;
        Some(table_io::read_table(path)?)
    } else {
        None
    };
    let estimates = simcmd::parallel_slopes(
        &methods,
        &configs,
        &args.n.0,
        args.reps,
        args.seed,
        table.as_ref(),
    )?;
    simcmd::write_slopes_csv(open_output(&args.out)?, &estimates)?;
    println!(
        "wrote {} slope estimates to {}",
        estimates.len(),
        args.out.display()
    );
    Ok(())
}

fn run_plotdata(cmd: PlotdataCmd) -> Result<()> {
    match cmd {
        PlotdataCmd::Categories { input, out } => {
            plotdata::categories_csv(&input, open_output(&out)?)?;
            Ok(())
        }
        PlotdataCmd::Rates { rates, fits, out } => {
            plotdata::rates_csv(&rates, fits.as_deref(), open_output(&out)?)
        }
    }
}

fn open_output(path: &PathBuf) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdout().lock()))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}
