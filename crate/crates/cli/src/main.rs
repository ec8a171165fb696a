mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fermiphase::diagnostics::{
    converge_suite, energy_suite, husimi_suite, kparticle_suite, lp_gap_table, moments_diagnostic,
    reference_lines, tf_suite, wigner_suite, Assertion, ReportTable, RunConfig, Timing,
};
use fermiphase::Error;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "fermiphase",
    version,
    about = "Phase-space diagnostics for trapped fermions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq)]
enum Command {
    /// Thomas–Fermi minimizer: tf_solution.json and the density dump.
    Tf,
    /// Wigner functions of the Slater ground states over the sweep.
    Wigner,
    /// Husimi functions over the sweep.
    Husimi,
    /// Full convergence sweep against the classical state.
    Converge,
    /// k-particle L² norms.
    Kparticle {
        /// Single order k (replaces run.k_list).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Energy per particle against the Thomas–Fermi energy.
    Energy,
    /// Exact identities and the Thomas–Fermi checks.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Tf => "tf",
            Command::Wigner => "wigner",
            Command::Husimi => "husimi",
            Command::Converge => "converge",
            Command::Kparticle { .. } => "kparticle",
            Command::Energy => "energy",
            Command::Verify => "verify",
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config with sections run, trap, interaction, grid, norms, output.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,
    /// Dotted override, e.g. `run.n_list=[8,16]`; repeatable, applied in order.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = settings::parse_override)]
    set: Vec<(String, String)>,
    /// Worker threads (run.jobs; 0 = available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use run.quick_n_list.
    #[arg(long, global = true)]
    quick: bool,
    /// Print the resolved config and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Trap kind (trap.kind).
    #[arg(long, global = true, value_name = "KIND")]
    trap: Option<String>,
    /// Dimension (run.d).
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Single particle number (replaces the sweep).
    #[arg(long, global = true)]
    n: Option<usize>,
}

impl Common {
    fn overrides(&self, command: Command) -> Vec<(String, String)> {
        let mut o = self.set.clone();
        let mut push = |k: &str, v: String| o.push((k.to_string(), v));
        if let Some(t) = &self.trap {
            push("trap", format!("{t:?}"));
        }
        if let Some(d) = self.d {
            push("run.d", d.to_string());
        }
        if let Some(n) = self.n {
            push("run.n_list", format!("[{n}]"));
            push("run.quick_n_list", format!("[{n}]"));
        }
        if let Some(s) = self.seed {
            push("run.seed", s.to_string());
        }
        if let Some(j) = self.jobs {
            push("run.jobs", j.to_string());
        }
        if self.quick {
            push("run.quick", "true".into());
        }
        if let Some(dir) = &self.out {
            push("output.dir", format!("{dir:?}"));
        }
        if let Command::Kparticle { k: Some(k) } = command {
            push("run.k_list", format!("[{k}]"));
        }
        o
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut root = &e;
        while let Error::AtParticleNumber { source, .. } = root {
            root = source;
        }
        match root {
            Error::InvalidGrid(_)
            | Error::InvalidArgument(_)
            | Error::Resolution(_)
            | Error::UnsupportedDimension { .. }
            | Error::MemoryGuard(_)
            | Error::Infeasible(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// What a subcommand produced, before it is written out.
struct Outcome {
    table: ReportTable,
    assertions: Vec<Assertion>,
    timings: Vec<Timing>,
    extra: Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let config = settings::resolve(
        cli.common.config.as_deref(),
        &cli.common.overrides(cli.command),
    )
    .map_err(Failure::Usage)?;
    if cli.common.dry_run {
        print!("{}", settings::to_toml(&config));
        return Ok(true);
    }
    if config.run.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.run.jobs)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let out = PathBuf::from(&config.output.dir);
    std::fs::create_dir_all(&out)?;
    let start = Instant::now();
    let mut outcome = dispatch(cli.command, &config, &out)?;
    outcome.timings.push(Timing {
        stage: "total".into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    write_outputs(cli.command, &config, &out, &outcome)?;
    for a in &outcome.assertions {
        println!(
            "{} {}: {}",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            a.detail
        );
    }
    Ok(outcome.assertions.iter().all(|a| a.passed))
}

fn timed<T>(stage: &str, f: impl FnOnce() -> T) -> (T, Timing) {
    let t = Instant::now();
    let v = f();
    let timing = Timing {
        stage: stage.into(),
        seconds: t.elapsed().as_secs_f64(),
    };
    (v, timing)
}

const VERIFY_IDENTITIES: [&str; 12] = [
    "trace",
    "projection",
    "hs_norm",
    "wigner_unitarity",
    "groenewold_origin",
    "groenewold_bound",
    "husimi_mass",
    "husimi_lower",
    "husimi_upper",
    "l2_identity",
    "moment_trace",
    "energy_per_particle",
];

fn dispatch(command: Command, config: &RunConfig, out: &Path) -> Result<Outcome, Failure> {
    let simple = |(table, assertions): (ReportTable, Vec<Assertion>), timing: Timing| Outcome {
        table,
        assertions,
        timings: vec![timing],
        extra: Value::Null,
    };
    Ok(match command {
        Command::Tf => {
            let (r, timing) = timed("thomas_fermi", || tf_suite(config));
            let (tf, assertions) = r?;
            tf.write(out)?;
            let mut table = ReportTable::new(
                "tf",
                ["d", "mu", "e_tf", "residual", "iterations"]
                    .map(String::from)
                    .to_vec(),
            );
            table.push(
                vec![
                    config.run.d as f64,
                    tf.mu,
                    tf.e_tf,
                    tf.residual,
                    tf.iterations as f64,
                ],
                "grid",
            );
            Outcome {
                table,
                assertions,
                timings: vec![timing],
                extra: tf.to_json(),
            }
        }
        Command::Wigner => {
            let (r, t) = timed("wigner", || wigner_suite(config, Some(out)));
            simple(r?, t)
        }
        Command::Husimi => {
            let (r, t) = timed("husimi", || husimi_suite(config, Some(out)));
            simple(r?, t)
        }
        Command::Energy => {
            let (r, t) = timed("energy", || energy_suite(config));
            simple(r?, t)
        }
        Command::Kparticle { .. } => {
            let (r, t) = timed("kparticle", || kparticle_suite(config));
            simple(r?, t)
        }
        Command::Converge => {
            let report = converge_suite(config)?;
            let mut gaps: Option<ReportTable> = None;
            for &p in config.norms.lp.iter().filter(|p| (1.0..=2.0).contains(*p)) {
                let t = lp_gap_table(&report.table, p, config.run.d)?;
                match gaps.as_mut() {
                    None => gaps = Some(t),
                    Some(g) => g.rows.extend(t.rows),
                }
            }
            if let Some(g) = &gaps {
                g.write_csv(&out.join("lp_gap.csv"))?;
            }
            let moments = moments_diagnostic(&report.table, config.norms.moment_m, config.run.d)?;
            Outcome {
                extra: json!({ "tf": report.tf, "moments": moments }),
                table: report.table,
                assertions: report.assertions,
                timings: report.timings,
            }
        }
        Command::Verify => {
            let (tf, t_tf) = timed("thomas_fermi", || tf_suite(config));
            let (_, mut assertions) = tf?;
            let mut report = converge_suite(config)?;
            report
                .assertions
                .retain(|a| VERIFY_IDENTITIES.contains(&a.name.as_str()));
            assertions.splice(0..0, report.assertions);
            let mut timings = report.timings;
            timings.push(t_tf);
            Outcome {
                table: report.table,
                assertions,
                timings,
                extra: json!({ "tf": report.tf }),
            }
        }
    })
}

fn write_outputs(
    command: Command,
    config: &RunConfig,
    out: &Path,
    o: &Outcome,
) -> Result<(), Failure> {
    o.table.write_csv(&out.join("report.csv"))?;
    let summary = json!({
        "command": command.name(),
        "config": config,
        "passed": o.assertions.iter().all(|a| a.passed),
        "assertions": o.assertions,
        "timings": o.timings,
        "references": reference_lines(config),
        "columns": o.table.columns,
        "notes": o.table.notes,
        "extra": o.extra,
    });
    let text =
        serde_json::to_string_pretty(&summary).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(out.join("summary.json"), text)?;
    Ok(())
}
