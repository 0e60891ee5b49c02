use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fishviab::config::{Scenario, ScenarioConfig};
use fishviab::export::{
    events_json, phase_csv, phase_levels, phase_rows, sweep_csv, to_json, trajectory_csv, PhaseGrid,
};
use fishviab::sim::simulate;
use fishviab::sweep::{parse_axes, sweep};
use fishviab::verify::{run_all, VerifyConfig, DEFAULT_SEED};
use fishviab::viability::{check_viability_domain, critical_levels};

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_NEGATIVE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "fishviab",
    version,
    about = "Co-managed fishery: negotiation, viability and control strategies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether [x_lo, inf) is a viability domain and locate the critical levels.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate the configured strategy and write the trajectory and events.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the negotiated harvest over an (x, r) grid for phase portraits.
    Phase {
        #[arg(long)]
        config: PathBuf,
        /// XMIN:XMAX:RMIN:RMAX:NX:NR
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one simulation per cell of a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// FIELD=LO:HI:N[,...]; strategy=NAME:NAME:... for strategies
        #[arg(long, default_value = "")]
        axes: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized verification suites.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Instances per suite instead of the defaults.
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<(ScenarioConfig, Scenario)> {
    let cfg = ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    let scenario = cfg.build()?;
    Ok((cfg, scenario))
}

fn out_dir(flag: Option<PathBuf>, cfg: Option<&ScenarioConfig>) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| cfg.and_then(|c| c.output.dir.as_ref().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.9}"))
        .unwrap_or_else(|| "none".into())
}

fn check(config: &Path) -> Result<u8> {
    let (_, sc) = load(config)?;
    let report = check_viability_domain(&sc.params, &sc.recruitment, &sc.bounds)?;
    let mark = |m: f64| if m >= 0.0 { "holds" } else { "FAILS" };
    println!("x_lo = {}, h_lo = {}", sc.bounds.x_lo(), sc.bounds.h_lo());
    println!(
        "(i)   r_hat(x_lo) >= r_lo(x_lo)             margin {:+.9}  {}",
        report.margin_profitable,
        mark(report.margin_profitable)
    );
    println!(
        "(ii)  R(x_lo) >= h_lo                       margin {:+.9}  {}",
        report.margin_recruitment,
        mark(report.margin_recruitment)
    );
    println!(
        "(iii) r_lo(x_lo) >= 0 or r_bar(x_lo) >= 0   margin {:+.9}  {}",
        report.margin_reducible,
        mark(report.margin_reducible)
    );
    println!(
        "verdict {}",
        if report.viable {
            "VIABLE"
        } else {
            "NOT VIABLE"
        }
    );
    let levels = critical_levels(&sc.params, &sc.recruitment, &sc.bounds)?;
    println!("a = {}", fmt_opt(levels.a));
    println!("b = {}", fmt_opt(levels.b));
    println!("c = {}", fmt_opt(levels.c));
    println!("case {}", levels.case_order.as_str());
    if !levels.rbar_rhat_crossings.is_empty() {
        let xs: Vec<String> = levels
            .rbar_rhat_crossings
            .iter()
            .map(|x| format!("{x:.9}"))
            .collect();
        println!("r_bar = r_hat at x = {}", xs.join(", "));
    }
    Ok(if report.viable {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

fn run_simulate(config: &Path, out: Option<PathBuf>) -> Result<u8> {
    let (cfg, sc) = load(config)?;
    let dir = out_dir(out, Some(&cfg))?;
    let tr = simulate(&sc.params, &sc.recruitment, &sc.bounds, &sc.sim)?;
    write(&dir.join(&cfg.output.trajectory), &trajectory_csv(&tr))?;
    write(&dir.join(&cfg.output.events), &events_json(&tr.events))?;
    let last = tr.terminal();
    println!("strategy {}", sc.sim.strategy);
    println!("terminal x {:.9}, mean h {:.9}", last.x, tr.mean_h);
    match tr.first_violation() {
        Some((t, which)) => println!("first violation {which:?} at t = {t}"),
        None => println!("no viability violations"),
    }
    if let Some(t) = tr.moratorium_started() {
        println!("moratorium from t = {t}");
    }
    Ok(EXIT_OK)
}

fn default_grid(sc: &Scenario) -> PhaseGrid {
    let k = sc.recruitment.capacity();
    let r_top = 1.5 * sc.params.r_hat(k).max(sc.recruitment.max_rate()).max(1e-3);
    PhaseGrid {
        x_min: 0.01 * k,
        x_max: k,
        r_min: 0.0,
        r_max: r_top,
        nx: 200,
        nr: 200,
    }
}

fn run_phase(config: &Path, grid: Option<String>, out: Option<PathBuf>) -> Result<u8> {
    let (cfg, sc) = load(config)?;
    let grid = match grid {
        Some(text) => PhaseGrid::parse(&text)?,
        None => default_grid(&sc),
    };
    let dir = out_dir(out, Some(&cfg))?;
    let rows = phase_rows(&sc.params, &sc.recruitment, &sc.bounds, &grid)?;
    write(&dir.join("phase.csv"), &phase_csv(&rows))?;
    let levels = phase_levels(&sc.params, &sc.recruitment, &sc.bounds);
    write(&dir.join("levels.json"), &to_json(&levels))?;
    Ok(EXIT_OK)
}

fn run_sweep(config: &Path, axes: &str, out: Option<PathBuf>) -> Result<u8> {
    let (cfg, _) = load(config)?;
    let axes = parse_axes(axes)?;
    let dir = out_dir(out, Some(&cfg))?;
    let cells = sweep(&cfg, &axes);
    write(&dir.join("sweep.csv"), &sweep_csv(&axes, &cells))?;
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    let violated = cells.iter().filter(|c| c.viable == Some(false)).count();
    println!(
        "{} cells: {} without violations, {} with violations, {} invalid",
        cells.len(),
        cells.len() - failed - violated,
        violated,
        failed
    );
    Ok(EXIT_OK)
}

fn run_verify(seed: u64, instances: Option<usize>, out: Option<PathBuf>) -> Result<u8> {
    let cfg = match instances {
        Some(0) => bail!("--instances must be at least 1"),
        Some(n) => VerifyConfig::uniform(seed, n),
        None => VerifyConfig {
            seed,
            ..VerifyConfig::default()
        },
    };
    let report = run_all(&cfg);
    println!("seed {seed}");
    for s in &report.suites {
        println!(
            "{:<10} {} passed {:>6} failed {:>4} skipped {:>4} positives {:>6} redrawn {:>7} ({:.2} s)",
            s.name,
            if s.ok() { "PASS" } else { "FAIL" },
            s.passed,
            s.failed,
            s.skipped,
            s.positives,
            s.redrawn,
            s.seconds
        );
        if let Some(f) = &s.first_failure {
            println!("    first failure: {f}");
        }
    }
    if let Some(out) = out {
        let dir = out_dir(Some(out), None)?;
        write(&dir.join("verify.json"), &to_json(&report))?;
    }
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Check { config } => check(&config),
        Command::Simulate { config, out } => run_simulate(&config, out),
        Command::Phase { config, grid, out } => run_phase(&config, grid, out),
        Command::Sweep { config, axes, out } => run_sweep(&config, &axes, out),
        Command::Verify {
            seed,
            instances,
            out,
        } => run_verify(seed, instances, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn scenario(name: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../scenarios")
            .join(format!("{name}.toml"))
    }

    fn canonical_text() -> String {
        fs::read_to_string(scenario("canonical")).unwrap()
    }

    fn variant(dir: &Path, edit: impl Fn(String) -> String) -> PathBuf {
        let path = dir.join("variant.toml");
        fs::write(&path, edit(canonical_text())).unwrap();
        path
    }

    fn run_args(args: &[&str]) -> u8 {
        run(std::iter::once("fishviab").chain(args.iter().copied()))
    }

    fn path_str(p: &Path) -> &str {
        p.to_str().unwrap()
    }

    #[test]
    fn check_exit_codes() {
        let tmp = tempfile::tempdir().unwrap();
        assert_eq!(
            run_args(&["check", "--config", path_str(&scenario("canonical"))]),
            EXIT_OK
        );
        let cfg = variant(tmp.path(), |t| t.replace("h_lo = 0.4", "h_lo = 0.6"));
        assert_eq!(
            run_args(&["check", "--config", path_str(&cfg)]),
            EXIT_NEGATIVE
        );
        let cfg = variant(tmp.path(), |t| {
            t.replace("beta = [1.0, 1.0]", "beta = [-1.0, 1.0]")
        });
        assert_eq!(run_args(&["check", "--config", path_str(&cfg)]), EXIT_INPUT);
        let cfg = variant(tmp.path(), |t| {
            t.replace("price = 2.0", "price = 2.0\nsalinity = 3.0")
        });
        assert_eq!(run_args(&["check", "--config", path_str(&cfg)]), EXIT_INPUT);
        assert_eq!(
            run_args(&["check", "--config", "/nonexistent/scenario.toml"]),
            EXIT_INPUT
        );
    }

    #[test]
    fn usage_errors_are_input_errors() {
        assert_eq!(run_args(&[]), EXIT_INPUT);
        assert_eq!(run_args(&["frobnicate"]), EXIT_INPUT);
        assert_eq!(run_args(&["check"]), EXIT_INPUT);
        assert_eq!(run_args(&["verify", "--seed", "minus-one"]), EXIT_INPUT);
        assert_eq!(run_args(&["--help"]), EXIT_OK);
    }

    fn events(dir: &Path) -> Vec<serde_json::Value> {
        let text = fs::read_to_string(dir.join("events.json")).unwrap();
        serde_json::from_str(&text).unwrap()
    }

    fn violations(events: &[serde_json::Value]) -> Vec<&serde_json::Value> {
        events
            .iter()
            .filter(|e| e["kind"] == "ViabilityViolation")
            .collect()
    }

    #[test]
    fn simulate_strategies() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("conservative");
        let code = run_args(&[
            "simulate",
            "--config",
            path_str(&scenario("canonical")),
            "--out",
            path_str(&out),
        ]);
        assert_eq!(code, EXIT_OK);
        assert!(violations(&events(&out)).is_empty());
        let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
        assert_eq!(
            csv.lines().next().unwrap(),
            "t,x,r,h,q1,q2,regime,region,maturity,viable_eco,viable_econ"
        );
        assert_eq!(csv.lines().count(), 20_002);

        let out = tmp.path().join("ichthyocentric");
        let code = run_args(&[
            "simulate",
            "--config",
            path_str(&scenario("ichthyocentric")),
            "--out",
            path_str(&out),
        ]);
        assert_eq!(code, EXIT_OK);
        let ev = events(&out);
        let v = violations(&ev);
        assert_eq!(v[0]["which"], "ecological");
        assert!(v[0]["t"].as_f64().unwrap().is_finite());
    }

    #[test]
    fn simulate_rejects_bad_input() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = variant(tmp.path(), |t| {
            t.replace("horizon = 200.0", "horizon = 0.0")
        });
        assert_eq!(
            run_args(&["simulate", "--config", path_str(&cfg)]),
            EXIT_INPUT
        );
        let blocker = tmp.path().join("not-a-dir");
        fs::write(&blocker, "").unwrap();
        let code = run_args(&[
            "simulate",
            "--config",
            path_str(&scenario("canonical")),
            "--out",
            path_str(&blocker),
        ]);
        assert_eq!(code, EXIT_INPUT);
    }

    #[test]
    fn phase_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = path_str(&scenario("canonical")).to_string();
        let out = tmp.path().join("one");
        let code = run_args(&[
            "phase",
            "--config",
            &cfg,
            "--grid",
            "1:1:0:0:1:1",
            "--out",
            path_str(&out),
        ]);
        assert_eq!(code, EXIT_OK);
        let csv = fs::read_to_string(out.join("phase.csv")).unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 1);
        let cols: Vec<&str> = rows[0].split(',').collect();
        assert!((cols[2].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(cols[3], "Binding");
        let levels: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("levels.json")).unwrap()).unwrap();
        assert!((levels["levels"]["a"].as_f64().unwrap() - 0.7).abs() < 1e-9);
        assert_eq!(levels["x_lo"], 1.0);

        let out = tmp.path().join("full");
        let code = run_args(&[
            "phase",
            "--config",
            &cfg,
            "--grid",
            "0.1:2:0:1.5:200:200",
            "--out",
            path_str(&out),
        ]);
        assert_eq!(code, EXIT_OK);
        let csv = fs::read_to_string(out.join("phase.csv")).unwrap();
        assert_eq!(csv.lines().count(), 40_001);
        let near_stationary = csv.lines().skip(1).any(|line| {
            let c: Vec<f64> = line
                .split(',')
                .take(3)
                .map(|v| v.parse().unwrap())
                .collect();
            (c[0] - 1.0).abs() < 0.006 && (c[1] - 0.25).abs() < 0.004 && {
                let growth = c[0] * (1.0 - c[0] / 2.0);
                (growth - c[2]).abs() < 0.01
            }
        });
        assert!(near_stationary);
        for line in csv.lines().skip(1) {
            let c: Vec<&str> = line.split(',').collect();
            if c[0].parse::<f64>().unwrap() < 0.5 {
                assert_eq!(c[3], "ShutdownUnprofitable");
                assert_eq!(c[2].parse::<f64>().unwrap(), 0.0);
            }
        }

        assert_eq!(
            run_args(&["phase", "--config", &cfg, "--grid", "2:1:0:1:5:5"]),
            EXIT_INPUT
        );
    }

    fn sweep_rows(dir: &Path) -> Vec<Vec<String>> {
        fs::read_to_string(dir.join("sweep.csv"))
            .unwrap()
            .lines()
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn sweep_over_strategies() {
        let tmp = tempfile::tempdir().unwrap();
        let code = run_args(&[
            "sweep",
            "--config",
            path_str(&scenario("canonical")),
            "--axes",
            "strategy=conservative:ichthyocentric:qualitative",
            "--out",
            path_str(tmp.path()),
        ]);
        assert_eq!(code, EXIT_OK);
        let rows = sweep_rows(tmp.path());
        assert_eq!(rows[0][..3], ["index", "strategy", "viable"]);
        let verdicts: Vec<(&str, &str)> = rows[1..]
            .iter()
            .map(|r| (r[1].as_str(), r[2].as_str()))
            .collect();
        assert_eq!(
            verdicts,
            [
                ("conservative", "1"),
                ("ichthyocentric", "0"),
                ("qualitative", "1")
            ]
        );
    }

    #[test]
    fn sweep_verdict_boundary_on_h_lo() {
        let tmp = tempfile::tempdir().unwrap();
        let code = run_args(&[
            "sweep",
            "--config",
            path_str(&scenario("canonical")),
            "--axes",
            "h_lo=0.45:0.55:11,horizon=1:1:1",
            "--out",
            path_str(tmp.path()),
        ]);
        assert_eq!(code, EXIT_OK);
        let rows = sweep_rows(tmp.path());
        let domain = rows[0].iter().position(|c| c == "domain_viable").unwrap();
        for r in &rows[1..] {
            let h_lo: f64 = r[1].parse().unwrap();
            let expected = if h_lo <= 0.5 { "1" } else { "0" };
            assert_eq!(r[domain], expected, "h_lo = {h_lo}");
        }
    }

    #[test]
    fn sweep_rejects_unknown_field() {
        let code = run_args(&[
            "sweep",
            "--config",
            path_str(&scenario("canonical")),
            "--axes",
            "salinity=0:1:3",
        ]);
        assert_eq!(code, EXIT_INPUT);
    }

    #[test]
    fn verify_small_runs_pass() {
        assert_eq!(run_args(&["verify", "--instances", "10"]), EXIT_OK);
        assert_eq!(
            run_args(&["verify", "--seed", "99", "--instances", "25"]),
            EXIT_OK
        );
        assert_eq!(run_args(&["verify", "--instances", "0"]), EXIT_INPUT);
    }
}
