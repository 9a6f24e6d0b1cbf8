//! `levelcheck`: run registered checks from a config file or directly, and
//! emit a JSON report bundle. Exit status 0 when every report passes, 1 when
//! some report fails, 2 when some check aborted or the configuration is
//! invalid.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgMatches, Args, Command, FromArgMatches};
use levelcheck_cli::{list_checks, run, split_list, write_bundle, CheckSpec, CliError, RunConfig, REGISTRY};

/// Parameters shared by `run` and the direct subcommands; list values are
/// comma separated and form a grid.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    g: Option<String>,
    /// `split` or `inert`.
    #[arg(long)]
    case: Option<String>,
    /// Field label `d` of `Q(sqrt(d))`.
    #[arg(long = "field-d", allow_hyphen_values = true)]
    field_d: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cap: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Write the bundle here instead of standard output.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Any other parameter, as `key=values`.
    #[arg(long = "param", value_name = "KEY=VALUES", allow_hyphen_values = true)]
    params: Vec<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        let mut grid: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let named = [("p", &self.p), ("m", &self.m), ("n", &self.n), ("g", &self.g), ("case", &self.case), ("field_d", &self.field_d)];
        for (k, v) in named {
            if let Some(v) = v {
                grid.insert(k.to_string(), split_list(v));
            }
        }
        for kv in &self.params {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("--param {kv} is not key=values")))?;
            grid.insert(k.trim().replace('-', "_"), split_list(v));
        }
        for check in &mut cfg.checks {
            check.grid.extend(grid.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(c) = self.cap {
            cfg.cap = c;
        }
        if let Some(s) = self.samples {
            cfg.samples = s;
        }
        if let Some(j) = &self.json {
            cfg.output = Some(j.clone());
        }
        Ok(())
    }
}

fn cli() -> Command {
    let run_cmd = Overrides::augment_args(
        Command::new("run")
            .about("Run every check named in a config file")
            .arg(clap::arg!(--config <FILE> "INI run configuration").value_parser(clap::value_parser!(PathBuf)).required(true)),
    );
    let list_cmd = Command::new("list").about("Print the registry").arg(clap::arg!([FILTER] "substring filter"));
    let mut cmd = Command::new("levelcheck")
        .about("Exact verification of congruence-subgroup, transversal and divisor identities")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .subcommand(run_cmd)
        .subcommand(list_cmd);
    for (name, about) in REGISTRY {
        cmd = cmd.subcommand(Overrides::augment_args(Command::new(name).about(about)));
    }
    cmd
}

fn execute(matches: &ArgMatches) -> Result<i32, CliError> {
    let (sub, args) = matches.subcommand().expect("a subcommand is required");
    if sub == "list" {
        for (name, about) in list_checks(args.get_one::<String>("FILTER").map(String::as_str)) {
            println!("{name:<22}{about}");
        }
        return Ok(0);
    }
    let overrides = Overrides::from_arg_matches(args).map_err(|e| CliError::Config(e.to_string()))?;
    let mut cfg = if sub == "run" {
        RunConfig::from_path(args.get_one::<PathBuf>("config").expect("required"))?
    } else {
        RunConfig { checks: vec![CheckSpec { name: sub.to_string(), grid: BTreeMap::new() }], ..RunConfig::default() }
    };
    overrides.apply(&mut cfg)?;
    let bundle = run(&cfg)?;
    write_bundle(&bundle, cfg.output.as_deref())?;
    for r in &bundle.reports {
        let verdict = match (r.aborted(), r.pass) {
            (true, _) => "ABORT",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        eprintln!("{verdict:<6}{} ({} ms)", r.name, r.elapsed_ms);
    }
    Ok(bundle.status)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match execute(&matches) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("levelcheck: {e}");
            ExitCode::from(2)
        }
    }
}
