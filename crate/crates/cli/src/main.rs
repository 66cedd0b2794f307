mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use resi_core::catalog::{parse_catalog_file, read_events_csv, write_events_csv, ColumnMap, Event, ParseOutcome};
use resi_core::evaluation::{AlarmFunction, EvalReport};
use resi_core::export;
use resi_core::grid::Region;
use resi_core::pipeline::{cell_window_counts, run_pipeline, RunConfig, RunOutput};
use resi_core::synth::{generate, write_jma, ScenarioSpec};
use resi_core::time::{TimeWindow, WindowLength};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "resi", version, about = "Regional entropy of seismic information from earthquake catalogs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse JMA fixed-width files into the normalized event CSV.
    Parse(ParseArgs),
    /// Run the full pipeline and write CSV, JSON and SVG outputs.
    Run(RunArgs),
    /// Summarize Condition A/B results from a report.
    Eval(EvalArgs),
    /// Generate a synthetic catalog from a scenario file.
    Synth(SynthArgs),
    /// Draw curve plots and grid maps from earlier exports.
    Plot(PlotArgs),
}

#[derive(Args)]
struct ParseArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// TOML file overriding the column layout.
    #[arg(long)]
    columns: Option<PathBuf>,
}

#[derive(Args, Default)]
struct GridArgs {
    /// Mesh side in degrees.
    #[arg(long)]
    mesh: Option<f64>,
    /// Cell side in degrees.
    #[arg(long)]
    cell: Option<f64>,
    #[arg(long)]
    window: Option<WindowLength>,
    /// Magnitude cutoff M0.
    #[arg(long)]
    m0: Option<f64>,
    /// A mesh quakes when its count exceeds this.
    #[arg(long)]
    theta_m: Option<u32>,
    /// lat0,lon0,lat1,lon1
    #[arg(long, value_parser = parse_universe)]
    universe: Option<Region>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// JMA fixed-width catalog files.
    #[arg(long, num_args = 1..)]
    catalog: Vec<PathBuf>,
    /// Normalized event CSV files.
    #[arg(long, num_args = 1..)]
    events: Vec<PathBuf>,
    /// Scenario TOML; the catalog is generated.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Δt values in months for the evaluation.
    #[arg(long, value_delimiter = ',')]
    dt: Vec<u32>,
    #[arg(long)]
    no_svg: bool,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_delimiter = ',')]
    dt: Vec<u32>,
    /// Only list active cells.
    #[arg(long)]
    active_only: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthFormat {
    Jma,
    Csv,
}

#[derive(Args)]
struct SynthArgs {
    scenario: PathBuf,
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "jma")]
    format: SynthFormat,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PlotArgs {
    /// Alarm CSV from `resi run`.
    #[arg(long)]
    alarms: Option<PathBuf>,
    /// Report JSON from `resi run`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Restrict curve plots to these cells.
    #[arg(long, value_delimiter = ',')]
    cells: Vec<usize>,
    /// Grid shape of the report, rows,cols.
    #[arg(long, default_value = "6,6", value_parser = parse_shape)]
    shape: (usize, usize),
    #[arg(short, long, default_value = "plots")]
    out: PathBuf,
}

fn parse_universe(s: &str) -> Result<Region, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [lat0, lon0, lat1, lon1] = v[..] else {
        return Err("expected lat0,lon0,lat1,lon1".into());
    };
    Region::from_corners(lat0, lon0, lat1, lon1).map_err(|e| e.to_string())
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(',').ok_or("expected rows,cols")?;
    Ok((
        r.trim().parse().map_err(|e| format!("{r:?}: {e}"))?,
        c.trim().parse().map_err(|e| format!("{c:?}: {e}"))?,
    ))
}

/// Failure with the process exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 1, error: error.into() }
    }

    fn config(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: error.into() }
    }
}

impl From<resi_core::Error> for Failure {
    fn from(e: resi_core::Error) -> Self {
        use resi_core::Error as E;
        let code = match e {
            E::Config(_) | E::Region(_) => 2,
            E::InvalidProbability(_) | E::Series(_) => 3,
            E::Parse(_) | E::Io { .. } | E::Csv(_) | E::Json(_) => 1,
        };
        Failure { code, error: e.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::input)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(Failure::input)
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(Failure::input)
}

fn load_columns(path: Option<&Path>) -> Result<ColumnMap, Failure> {
    let Some(path) = path else { return Ok(ColumnMap::default()) };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::input)?;
    let map: ColumnMap = toml::from_str(&text).context("column layout").map_err(Failure::config)?;
    map.validate()?;
    Ok(map)
}

fn parse_files(files: &[PathBuf], map: &ColumnMap) -> Result<ParseOutcome, Failure> {
    let mut all = ParseOutcome::default();
    for f in files {
        let out = parse_catalog_file(f, map)?;
        eprintln!("{}: {} events, {} rejected", f.display(), out.events.len(), out.rejected.len());
        all.merge(out);
    }
    Ok(all)
}

fn load_scenario(path: &Path) -> Result<ScenarioSpec, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::input)?;
    let spec: ScenarioSpec = toml::from_str(&text)
        .with_context(|| format!("scenario {}", path.display()))
        .map_err(Failure::config)?;
    spec.validate()?;
    Ok(spec)
}

fn cmd_parse(args: ParseArgs) -> CmdResult {
    let map = load_columns(args.columns.as_deref())?;
    let outcome = parse_files(&args.files, &map)?;
    for r in outcome.rejected.iter().take(20) {
        eprintln!("rejected {r}");
    }
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            write_events_csv(&outcome.events, &mut w)?;
            w.flush().map_err(Failure::input)?;
        }
        None => write_events_csv(&outcome.events, std::io::stdout().lock())?,
    }
    Ok(())
}

fn apply_grid_args(run: &mut RunConfig, g: &GridArgs) {
    if let Some(v) = g.mesh {
        run.grid.dx = v;
        run.grid.dy = v;
    }
    if let Some(v) = g.cell {
        run.cell_len = v;
    }
    if let Some(v) = g.window {
        run.window = v;
    }
    if let Some(v) = g.m0 {
        run.grid.m_theta = v;
        run.pi.cutoff = v;
        run.ri.cutoff = v;
    }
    if let Some(v) = g.theta_m {
        run.grid.theta_m = v;
    }
    if let Some(v) = g.universe {
        run.universe = v;
    }
}

fn write_geojson(events: &[Event], run: &RunConfig, out: &RunOutput, dir: &Path, months: &[resi_core::time::Month]) -> CmdResult {
    for &m in months {
        let window = TimeWindow { start: m, len: run.window };
        let per_cell = cell_window_counts(events, &out.layout, &run.grid, &[window])?;
        let doc = export::cells_geojson(&per_cell[0], &run.grid);
        let mut w = create(&dir.join(format!("clusters_{m}.geojson")))?;
        w.write_all(doc.to_string().as_bytes()).map_err(Failure::input)?;
        w.flush().map_err(Failure::input)?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let mut cfg = match &args.config {
        Some(p) => FileConfig::load(p).with_context(|| format!("config {}", p.display())).map_err(Failure::config)?,
        None => FileConfig::default(),
    };
    if !args.catalog.is_empty() {
        cfg.input.catalog = args.catalog.clone();
    }
    if !args.events.is_empty() {
        cfg.input.events = args.events.clone();
    }
    if args.synthetic.is_some() {
        cfg.input.synthetic = args.synthetic.clone();
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if !args.dt.is_empty() {
        cfg.run.eval.delta_ts = args.dt.clone();
    }
    if args.no_svg {
        cfg.output.svg = false;
    }
    apply_grid_args(&mut cfg.run, &args.grid);

    let problems = cfg.run.problems();
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(|p| format!("  - {p}")).collect();
        return Err(Failure::config(anyhow::anyhow!("invalid configuration:\n{}", list.join("\n"))));
    }
    cfg.input.columns.validate()?;
    let inputs = cfg.input.catalog.len() + cfg.input.events.len() + usize::from(cfg.input.synthetic.is_some());
    if inputs == 0 {
        return Err(Failure::input(anyhow::anyhow!("no input: pass --catalog, --events or --synthetic")));
    }

    let mut events = parse_files(&cfg.input.catalog, &cfg.input.columns)?.events;
    for p in &cfg.input.events {
        events.extend(read_events_csv(open(p)?)?);
    }
    if let Some(p) = &cfg.input.synthetic {
        events.extend(generate(&load_scenario(p)?)?);
    }

    let out = run_pipeline(&events, &cfg.run)?;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::input)?;

    if cfg.output.csv {
        let mut w = create(&dir.join("series.csv"))?;
        export::write_series_csv(&out.cells, &mut w)?;
        let mut w = create(&dir.join("alarms.csv"))?;
        export::write_alarm_csv(&out.cells, &mut w)?;
        if let Some(b) = &out.baselines {
            let mut w = create(&dir.join("baselines.csv"))?;
            export::write_baseline_csv(b, &mut w)?;
        }
    }
    if let (true, Some(report)) = (cfg.output.report, &out.report) {
        let mut w = create(&dir.join("report.json"))?;
        export::write_report_json(report, &mut w)?;
        w.flush().map_err(Failure::input)?;
    }
    if !cfg.output.geojson.is_empty() {
        let used = resi_core::catalog::filter_events(&events, &cfg.run.filter());
        write_geojson(&used, &cfg.run, &out, dir, &cfg.output.geojson)?;
    }
    if cfg.output.svg {
        let plots = dir.join("plots");
        if cfg.output.csv {
            plot_curves(&dir.join("alarms.csv"), &[], &plots)?;
        }
        if cfg.output.report && out.report.is_some() {
            plot_maps(&dir.join("report.json"), (out.layout.rows, out.layout.cols), &plots)?;
        }
    }

    println!(
        "{} events, {} cells, {} windows, {} active cells",
        out.events_used,
        out.cells.len(),
        out.windows.len(),
        out.active.iter().filter(|a| **a).count()
    );
    if let Some(report) = &out.report {
        print_summary(report, &report.delta_ts);
    }
    Ok(())
}

fn print_summary(report: &EvalReport, dts: &[u32]) {
    println!("{:<8} {:>4} {:>6} {:>6} {:>7} {:>10}", "function", "dt", "cond_a", "cond_b", "a_or_b", "evaluable");
    for (func, per_dt) in &report.summary {
        for (dt, t) in per_dt.iter().filter(|(dt, _)| dts.contains(dt)) {
            println!(
                "{:<8} {:>4} {:>6} {:>6} {:>7} {:>10}",
                func.name(),
                dt,
                t.condition_a,
                t.condition_b,
                t.either,
                t.evaluable
            );
        }
    }
}

fn mark(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "yes",
        Some(false) => "no",
        None => "-",
    }
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let report = export::read_report_json(open(&args.report)?)?;
    let dts = if args.dt.is_empty() { report.delta_ts.clone() } else { args.dt.clone() };
    if let Some(bad) = dts.iter().find(|d| !report.delta_ts.contains(d)) {
        return Err(Failure::config(anyhow::anyhow!(
            "Δt {bad} is not in the report (has {:?})",
            report.delta_ts
        )));
    }
    println!("active cells: {:?}", report.active_cells);
    print_summary(&report, &dts);
    println!();
    println!("{:>4} {:>6} {:<8} {:>4} {:>8} {:>8} {:>6} {:>6}", "cell", "active", "function", "dt", "prec", "delay", "a", "b");
    let num = |v: Option<f64>| v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
    for cell in report.cells.iter().filter(|c| c.active || !args.active_only) {
        for (func, per_dt) in &cell.functions {
            for dt in &dts {
                let s = per_dt.get(dt).copied().unwrap_or_default();
                println!(
                    "{:>4} {:>6} {:<8} {:>4} {:>8} {:>8} {:>6} {:>6}",
                    cell.cell,
                    if cell.active { "yes" } else { "no" },
                    func.name(),
                    dt,
                    num(s.prec),
                    num(s.delay),
                    mark(s.condition_a),
                    mark(s.condition_b)
                );
            }
        }
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> CmdResult {
    let mut spec = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let events = generate(&spec)?;
    let mut sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    match args.format {
        SynthFormat::Jma => write_jma(&events, &ColumnMap::default(), &mut sink)?,
        SynthFormat::Csv => write_events_csv(&events, &mut sink)?,
    }
    sink.flush().map_err(Failure::input)?;
    eprintln!("{} events over {}..{}", events.len(), spec.start, spec.end());
    Ok(())
}

fn plot_curves(alarms: &Path, cells: &[usize], dir: &Path) -> CmdResult {
    let rows = export::read_alarm_csv(open(alarms)?)?;
    let mut start = 0;
    while start < rows.len() {
        let cell = rows[start].cell_id;
        let end = start + rows[start..].iter().take_while(|r| r.cell_id == cell).count();
        if cells.is_empty() || cells.contains(&cell) {
            let mut w = create(&dir.join(format!("cell_{cell:02}.svg")))?;
            w.write_all(export::curve_svg(&rows[start..end]).as_bytes()).map_err(Failure::input)?;
            w.flush().map_err(Failure::input)?;
        }
        start = end;
    }
    Ok(())
}

fn plot_maps(report: &Path, (rows, cols): (usize, usize), dir: &Path) -> CmdResult {
    let report = export::read_report_json(open(report)?)?;
    for func in AlarmFunction::ALL {
        for &dt in &report.delta_ts {
            let svg = export::grid_map_svg(&report, rows, cols, func, dt);
            let mut w = create(&dir.join(format!("map_{}_{dt}.svg", func.name())))?;
            w.write_all(svg.as_bytes()).map_err(Failure::input)?;
            w.flush().map_err(Failure::input)?;
        }
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> CmdResult {
    if args.alarms.is_none() && args.report.is_none() {
        return Err(Failure::input(anyhow::anyhow!("nothing to plot: pass --alarms and/or --report")));
    }
    if let Some(a) = &args.alarms {
        plot_curves(a, &args.cells, &args.out)?;
    }
    if let Some(r) = &args.report {
        plot_maps(r, args.shape, &args.out)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse(a) => cmd_parse(a),
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
