use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use whdt::cli::{
    apply_cost, cmd_corpus, cmd_run, corpus_dir, load_cost_config, parse_natural, parse_oracle_arg, parse_schedule,
    read_program, render, CliError, ReportFormat, RunConfig,
};
use whdt::syntax::{check, pretty_print};

#[derive(Parser)]
#[command(name = "whdt", version, about = "Stagewise interpreter and analyzer for While^dt programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program over a stage schedule and report verdicts.
    Run {
        program: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Verify every corpus program against its embedded expectations.
    Corpus {
        /// Corpus directory (default: $WHDT_CORPUS or ./corpus).
        dir: Option<PathBuf>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Parse and statically check a program.
    Check { program: PathBuf },
    /// Print a program in canonical form.
    Fmt { program: PathBuf },
}

#[derive(Args)]
struct RunOpts {
    /// Input value, positional or NAME=VALUE (exact rational, e.g. 3.7 or 37/10).
    #[arg(long = "input", value_name = "VALUE")]
    inputs: Vec<String>,
    /// Stage schedule, e.g. `0..15+doubling:3` or `0,1,2,7`.
    #[arg(long, value_name = "SPEC")]
    stages: Option<String>,
    /// Step budget per stage.
    #[arg(long, value_name = "N")]
    fuel: Option<String>,
    /// Digits per oracle leaf a comparison may read.
    #[arg(long = "cmp-fuel", value_name = "N")]
    cmp_fuel: Option<String>,
    /// Oracle binding NAME=SOURCE (primes, evens, squares, graph:F:BOUND, finite:1,2,3, file:PATH).
    #[arg(long = "oracle", value_name = "NAME=SRC")]
    oracles: Vec<String>,
    /// Variable watched as physical energy.
    #[arg(long = "energy-var", value_name = "NAME")]
    energy_var: Option<String>,
    /// Variable whose assignments are free.
    #[arg(long = "clock-var", value_name = "NAME")]
    clock_vars: Vec<String>,
    /// Cost override KEY=VAL (assign_cost, guard_cost, oracle_cost, clock_vars, energy_var).
    #[arg(long = "cost", value_name = "KEY=VAL")]
    costs: Vec<String>,
    /// TOML file with cost settings.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "FORMAT", default_value = "text")]
    report: ReportFormat,
    /// Evaluate stages concurrently.
    #[arg(long)]
    parallel: bool,
}

impl RunOpts {
    fn build(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig {
            inputs: self.inputs.clone(),
            format: self.report,
            parallel: self.parallel,
            ..RunConfig::default()
        };
        if let Some(s) = &self.stages {
            c.schedule = parse_schedule(s).map_err(CliError::Usage)?;
        }
        if let Some(f) = &self.fuel {
            c.fuel = parse_natural("--fuel", f)?;
        }
        if let Some(f) = &self.cmp_fuel {
            c.cmp_fuel = parse_natural("--cmp-fuel", f)?;
        }
        for o in &self.oracles {
            c.oracles.push(parse_oracle_arg(o)?);
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            load_cost_config(&text, &mut c.cost).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        }
        for kv in &self.costs {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--cost `{kv}` is not KEY=VAL")))?;
            apply_cost(&mut c.cost, k, v).map_err(CliError::Usage)?;
        }
        if let Some(e) = &self.energy_var {
            c.cost.energy_var = Some(e.clone());
        }
        c.cost.clock_vars.extend(self.clock_vars.iter().cloned());
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { program, opts } => {
            let config = opts.build()?;
            let (report, code) = cmd_run(&program, &config)?;
            print!("{}", render(&report, config.format));
            Ok(code)
        }
        Command::Corpus { dir, opts } => {
            let config = opts.build()?;
            let dir = dir.unwrap_or_else(corpus_dir);
            let summary = cmd_corpus(&dir, &config)?;
            match config.format {
                ReportFormat::Text => print!("{}", summary.render_text()),
                ReportFormat::Json => println!("{}", summary.to_json()),
            }
            Ok(summary.exit_code())
        }
        Command::Check { program } => {
            let (name, p) = read_program(&program)?;
            let diags = check(&p);
            for d in &diags {
                eprintln!("{name}: {d}");
            }
            if diags.is_empty() {
                println!("{name}: ok");
                Ok(0)
            } else {
                Ok(1)
            }
        }
        Command::Fmt { program } => {
            let (_, p) = read_program(&program)?;
            print!("{}", pretty_print(&p));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
