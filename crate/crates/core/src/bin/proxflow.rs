use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use proxflow::experiments::{self, preset, run_all, run_sweep, write_run, RunConfig};
use proxflow::prox::{build_objective, default_registry, selftest::run_selftest, ObjectiveSpec};
use proxflow::schedules::Setting;
use proxflow::{Error, Execution, Result};

#[derive(Parser)]
#[command(name = "proxflow", version, about = "Simulate and check inertial proximal dynamics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Configuration file (flat `section.key = value` text).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset used as the base configuration.
    #[arg(long)]
    preset: Option<String>,
    /// Override one key, e.g. `--set system.alpha=8`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a configuration (or every run of a preset) and write CSV, summary and plots.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Emit SVG charts (on|off).
        #[arg(long)]
        svg: Option<String>,
        /// Run presets one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Evaluate the sufficient conditions of a setting.
    Check {
        #[command(flatten)]
        common: Common,
        /// fast | strong | alpha3
        #[arg(long)]
        setting: Option<String>,
    },
    /// Run one configuration per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of n, d, l, alpha, beta.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        svg: Option<String>,
        #[arg(long)]
        sequential: bool,
    },
    /// Run the proximal-calculus property suite.
    ProxSelftest {
        #[arg(long, default_value_t = 20240611)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Comma-separated objective names; an empty string gives an empty registry.
        #[arg(long)]
        objectives: Option<String>,
    },
}

fn base_configs(c: &Common) -> Result<Vec<RunConfig>> {
    let mut cfgs = match (&c.preset, &c.config) {
        (Some(_), Some(_)) => return Err(Error::Config("use either --preset or --config, not both".into())),
        (Some(p), None) => preset(p)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            vec![RunConfig::parse(&text)?]
        }
        (None, None) => vec![RunConfig::default()],
    };
    for cfg in &mut cfgs {
        for kv in &c.overrides {
            cfg.apply_override(kv)?;
        }
    }
    Ok(cfgs)
}

fn apply_svg(cfgs: &mut [RunConfig], svg: &Option<String>) -> Result<()> {
    if let Some(v) = svg {
        for c in cfgs {
            c.set("output.svg", v)?;
        }
    }
    Ok(())
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn simulate(common: &Common, out: &Path, svg: &Option<String>, sequential: bool) -> Result<i32> {
    let mut cfgs = base_configs(common)?;
    apply_svg(&mut cfgs, svg)?;
    for run in run_all(&cfgs, exec(sequential))? {
        let files = write_run(&run, out)?;
        let s = &run.summary;
        println!(
            "{}: T = {:.6e}, moreau_gap = {:.6e}, grad_norm = {:.6e}, x0(T) = {:.6e}, steps = {}, {:.3}s -> {}",
            s.name,
            run.trajectory.last().t,
            s.final_observables.moreau_gap,
            s.final_observables.grad_norm,
            s.final_x[0],
            s.stats.accepted,
            s.wall_time_s,
            files.csv.display()
        );
        for a in &s.assumptions {
            println!("  assumption: {a}");
        }
    }
    Ok(0)
}

fn check(common: &Common, setting: &Option<String>) -> Result<i32> {
    let setting = match setting {
        Some(s) => Some(
            Setting::parse(s).ok_or_else(|| Error::Config(format!("unknown setting `{s}` (fast|strong|alpha3)")))?,
        ),
        None => None,
    };
    let mut all = true;
    for cfg in base_configs(common)? {
        let report = experiments::check_config(&cfg, setting)?;
        println!("== {}", cfg.name);
        print!("{}", report.to_text());
        all &= report.all_passed();
    }
    Ok(if all { 0 } else { 1 })
}

fn sweep(common: &Common, param: &str, values: &[f64], out: &Path, svg: &Option<String>, seq: bool) -> Result<i32> {
    let mut cfgs = base_configs(common)?;
    if cfgs.len() != 1 {
        return Err(Error::Config("sweep needs a single base configuration".into()));
    }
    apply_svg(&mut cfgs, svg)?;
    let res = run_sweep(&cfgs[0], param, values, exec(seq))?;
    for run in &res.runs {
        write_run(run, out)?;
    }
    res.write(out)?;
    print!("{}", res.summary_table());
    Ok(0)
}

fn selftest(seed: u64, samples: usize, objectives: &Option<String>) -> Result<i32> {
    let registry = match objectives {
        None => default_registry(),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|name| build_objective(&ObjectiveSpec::named(name, 2)))
            .collect::<Result<Vec<_>>>()?,
    };
    let report = run_selftest(&registry, seed, samples, Execution::Parallel);
    print!("{}", report.table());
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let res = match &cli.cmd {
        Cmd::Simulate {
            common,
            out,
            svg,
            sequential,
        } => simulate(common, out, svg, *sequential),
        Cmd::Check { common, setting } => check(common, setting),
        Cmd::Sweep {
            common,
            param,
            values,
            out,
            svg,
            sequential,
        } => sweep(common, param, values, out, svg, *sequential),
        Cmd::ProxSelftest {
            seed,
            samples,
            objectives,
        } => selftest(*seed, *samples, objectives),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
