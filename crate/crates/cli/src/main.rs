use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use capscale_core::cells::{slot_transmission_set, Occupancy};
use capscale_core::cut::{CutRow, PropertyPRow};
use capscale_core::geom::sub_seed;
use capscale_core::*;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "capscale",
    version,
    about = "Multicast capacity scaling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drop `n` uniform nodes and write network.csv.
    Generate(Common),
    /// Write the TDMA cell schedule, and per-slot disk links when `n` is set.
    Schedule(Common),
    /// Simulate multicast throughput for one (n, t, m) point.
    Simulate(Common),
    /// Crossing links of the cut construction for each mode and t.
    Cut(Common),
    /// Run any experiment kind and fit its scaling exponent.
    Scaling(Common),
    /// EMST length sweep over m.
    Emst(Common),
}

#[derive(clap::Args)]
struct Common {
    /// `key = value` file; `#` starts a comment.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `out` from the config (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Verify results and exit with status 3 on failure.
    #[arg(long)]
    check: bool,
}

enum Failure {
    Config(String),
    Check,
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::Config { .. } | Error::InvalidParameter(_) => Failure::Config(e.to_string()),
            _ => Failure::Run(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => with_spec(a, generate),
        Command::Schedule(a) => with_spec(a, schedule),
        Command::Simulate(a) => with_spec(a, simulate_cmd),
        Command::Cut(a) => with_spec(a, cut),
        Command::Scaling(a) => with_spec(a, scaling),
        Command::Emst(a) => with_spec(a, emst_cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check) => ExitCode::from(3),
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

struct Run {
    spec: ExperimentSpec,
    out: PathBuf,
    check: bool,
}

fn with_spec(args: &Common, f: fn(&Run) -> Outcome) -> Outcome {
    let mut spec = ExperimentSpec::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| spec.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    spec.out = Some(out.clone());
    f(&Run {
        spec,
        out,
        check: args.check,
    })
}

fn single<T: Copy>(values: &[T], key: &str) -> std::result::Result<T, Failure> {
    match values {
        [v] => Ok(*v),
        [] => Err(Failure::Config(format!("'{key}' is required"))),
        _ => Err(Failure::Config(format!(
            "'{key}' takes a single value here"
        ))),
    }
}

fn single_or<T: Copy>(values: &[T], key: &str, default: T) -> std::result::Result<T, Failure> {
    if values.is_empty() {
        Ok(default)
    } else {
        single(values, key)
    }
}

fn create(dir: &Path, name: &str) -> std::result::Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    println!("wrote {}", path.display());
    Ok(BufWriter::new(File::create(path)?))
}

fn report(ok: bool, line: String) -> bool {
    println!("{} {line}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn finish(all_ok: bool) -> Outcome {
    if !all_ok {
        Err(Failure::Check)
    } else {
        Ok(())
    }
}

fn modes(spec: &ExperimentSpec) -> Vec<Mode> {
    if spec.modes.is_empty() {
        Mode::ALL.to_vec()
    } else {
        spec.modes.clone()
    }
}

fn generate(run: &Run) -> Outcome {
    let spec = &run.spec;
    let n = single(&spec.n, "n")?;
    let net = generate_network(n, spec.seed)?;
    let mut w = create(&run.out, "network.csv")?;
    net.write_csv(&mut w)?;
    w.flush()?;
    if !run.check {
        return Ok(());
    }
    let inside = net
        .points()
        .iter()
        .all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y));
    let ok = report(
        inside && net.n() == n,
        format!("{} nodes, all inside the unit square: {inside}", net.n()),
    );
    finish(ok)
}

fn schedule(run: &Run) -> Outcome {
    let spec = &run.spec;
    let t = single(&spec.t, "t")?;
    let delta = single_or(&spec.delta, "delta", 0.0)?;
    let grid = build_grid(t)?;
    let sched = build_schedule(&grid, delta)?;
    let mut w = create(&run.out, "schedule.csv")?;
    sched.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "{} x {} cells, L = {}, {} slots",
        grid.cols(),
        grid.rows(),
        sched.l(),
        sched.num_slots()
    );

    let net = match spec.n.as_slice() {
        [] => None,
        _ => Some(generate_network(single(&spec.n, "n")?, spec.seed)?),
    };
    if let Some(net) = &net {
        let links = simultaneous_links(net, t, delta)?;
        let mut w = create(&run.out, "links.csv")?;
        links.write_csv(&mut w, net.n(), t, delta, true)?;
        w.flush()?;
        println!(
            "busiest slot {} with {} links",
            links.best_slot, links.links
        );
    }
    if !run.check {
        return Ok(());
    }

    let gap = sched.l() - 1;
    let mut separated = true;
    for slot in 0..sched.num_slots() {
        let cells = sched.cells_in_slot(slot);
        for (k, a) in cells.iter().enumerate() {
            for b in &cells[k + 1..] {
                let (di, dj) = (a.i.abs_diff(b.i), a.j.abs_diff(b.j));
                separated &= (di == 0 || di >= gap) && (dj == 0 || dj >= gap);
            }
        }
    }
    let mut ok = report(
        separated,
        format!("same-slot cells at least {gap} cells apart"),
    );
    if let Some(net) = &net {
        let occ = Occupancy::new(net, &grid);
        let mut bad = 0;
        for slot in 0..sched.num_slots() {
            if !is_feasible(&slot_transmission_set(net, &occ, &sched, slot, delta)?, net)? {
                bad += 1;
            }
        }
        ok &= report(bad == 0, format!("infeasible slots: {bad}"));
    }
    finish(ok)
}

fn simulate_cmd(run: &Run) -> Outcome {
    let spec = &run.spec;
    let n = single(&spec.n, "n")?;
    let t = single(&spec.t, "t")?;
    let m = single(&spec.m, "m")?;
    let delta = single_or(&spec.delta, "delta", 0.0)?;
    if spec.trials == 0 {
        return Err(Failure::Config("trials must be at least 1".into()));
    }
    let modes = modes(spec);
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &mode in &modes {
        let mut per_mode = Vec::new();
        for k in 0..spec.trials {
            let mut cfg = SimConfig::new(n, t, m, sub_seed(spec.seed, k as u64));
            cfg.delta = delta;
            cfg.warmup = spec.warmup;
            cfg.window = spec.window;
            if let Some(slots) = spec.slots {
                cfg.slots = slots;
            }
            per_mode.push(simulate(&cfg, mode)?);
        }
        let row = AggregateRow::from_reports(&per_mode)?;
        println!(
            "{mode}: mean rate {:.6e} (stderr {:.2e})",
            row.mean_rate, row.stderr
        );
        rows.push(row);
        reports.extend(per_mode);
    }
    let mut w = create(&run.out, "throughput.csv")?;
    for (i, r) in reports.iter().enumerate() {
        r.write_csv(&mut w, i == 0)?;
    }
    w.flush()?;
    let mut w = create(&run.out, "aggregate.csv")?;
    AggregateRow::write_csv(&rows, &mut w)?;
    w.flush()?;
    if !run.check {
        return Ok(());
    }

    let conserved = reports
        .iter()
        .all(|r| r.delivered.iter().zip(&r.injected).all(|(d, i)| d <= i));
    let mut ok = report(conserved, "delivered packets never exceed injected".into());
    let rate = |mode: Mode| rows.iter().find(|r| r.mode == mode).map(|r| r.mean_rate);
    for (lo, hi) in [
        (Mode::Ptp, Mode::Mpt),
        (Mode::Ptp, Mode::Mpr),
        (Mode::Mpt, Mode::MptMpr),
        (Mode::Mpr, Mode::MptMpr),
    ] {
        if let (Some(a), Some(b)) = (rate(lo), rate(hi)) {
            ok &= report(b >= a, format!("{hi} rate {b:.4e} >= {lo} rate {a:.4e}"));
        }
    }
    finish(ok)
}

fn cut(run: &Run) -> Outcome {
    let spec = &run.spec;
    let n = single(&spec.n, "n")?;
    if spec.t.is_empty() {
        return Err(Failure::Config("'t' is required".into()));
    }
    let delta = single_or(&spec.delta, "delta", 0.0)?;
    let c = Cut::new(spec.cut_axis, spec.cut_pos)?;
    let net = generate_network(n, spec.seed)?;
    let modes = modes(spec);
    let mut rows = Vec::new();
    for &mode in &modes {
        for &t in &spec.t {
            let links = cut_capacity(&net, &c, mode, t, delta)?;
            rows.push(CutRow {
                mode,
                n,
                t,
                cut: c,
                links,
            });
        }
    }
    let mut w = create(&run.out, "cut.csv")?;
    CutRow::write_csv(&rows, &mut w)?;
    w.flush()?;
    if !spec.m.is_empty() {
        let mut prop = Vec::new();
        for &m in &spec.m {
            let sessions = random_sessions(&net, m, sub_seed(spec.seed, 1))?;
            let k = count_property_p(&net, &sessions, &c);
            prop.push(PropertyPRow {
                n,
                m,
                seed: spec.seed,
                fraction: k as f64 / sessions.len() as f64,
            });
        }
        let mut w = create(&run.out, "property_p.csv")?;
        PropertyPRow::write_csv(&prop, &mut w)?;
        w.flush()?;
    }
    if !run.check {
        return Ok(());
    }

    let links = |mode: Mode, t: f64| {
        rows.iter()
            .find(|r| r.mode == mode && r.t == t)
            .map(|r| r.links)
    };
    let mut ok = true;
    for &t in &spec.t {
        for (lo, hi) in [
            (Mode::Ptp, Mode::Mpt),
            (Mode::Ptp, Mode::Mpr),
            (Mode::Mpt, Mode::MptMpr),
            (Mode::Mpr, Mode::MptMpr),
        ] {
            if let (Some(a), Some(b)) = (links(lo, t), links(hi, t)) {
                ok &= report(b >= a, format!("t = {t}: {hi} {b} >= {lo} {a}"));
            }
        }
    }
    if !spec.expected_slope.is_empty() {
        if spec.t.len() < 3 {
            return Err(Failure::Config(
                "slope check needs at least 3 values of t".into(),
            ));
        }
        let k = spec.expected_slope.len();
        if k != 1 && k != modes.len() {
            return Err(Failure::Config(format!(
                "{k} expected slopes for {} modes",
                modes.len()
            )));
        }
        let tol = spec.tolerance.unwrap_or(0.0);
        for (i, &mode) in modes.iter().enumerate() {
            let points: Vec<(f64, f64)> = spec
                .t
                .iter()
                .map(|&t| (t, links(mode, t).unwrap_or(0) as f64))
                .collect();
            let fit = fit_loglog(&points)?;
            let expected = spec.expected_slope[if k == 1 { 0 } else { i }];
            ok &= report(
                fit.slope_within(expected, tol),
                format!(
                    "{mode}: slope {:.4} expected {expected} +/- {tol}",
                    fit.slope
                ),
            );
        }
    }
    finish(ok)
}

fn experiment(run: &Run, spec: &ExperimentSpec) -> Outcome {
    if run.check && spec.expected_slope.is_empty() {
        return Err(Failure::Config(
            "--check needs expected_slope in the config".into(),
        ));
    }
    let outcome = capscale_core::run(spec)?;
    for path in &outcome.files {
        println!("wrote {}", path.display());
    }
    for fit in &outcome.fits {
        println!(
            "{}: slope {:.4}, r2 {:.4}",
            fit.label, fit.result.slope, fit.result.r2
        );
    }
    if !run.check {
        return Ok(());
    }
    let mut ok = true;
    for c in outcome.checks(spec)? {
        println!("{c}");
        ok &= c.pass;
    }
    finish(ok)
}

fn scaling(run: &Run) -> Outcome {
    experiment(run, &run.spec)
}

fn emst_cmd(run: &Run) -> Outcome {
    let mut spec = run.spec.clone();
    match spec.kind {
        None | Some(ExperimentKind::Emst) => spec.kind = Some(ExperimentKind::Emst),
        Some(other) => {
            return Err(Failure::Config(format!(
                "emst subcommand given kind = {other}"
            )))
        }
    }
    experiment(run, &spec)
}
