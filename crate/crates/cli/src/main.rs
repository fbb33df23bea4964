use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use rawmap::eval::{classify, metrics, truths_from_signals, AccuracyReport, DEFAULT_DISTANCE_THRESHOLD};
use rawmap::event_pipeline::{reference_quant_params, reference_to_events, Arithmetic, FixedPointFormat};
use rawmap::isp_sim::{reports_to_tsv, simulate, CostReport, HardwareConfig, System, REPORT_HEADER};
use rawmap::mapper::{
    combined_trace, map_read, write_mappings, FilterParams, MapParams, MappingRecord, MapStatus,
    DEFAULT_EVENTS_TO_BASES,
};
use rawmap::reference_index::{build_index, ReferenceIndex, SeedScheme};
use rawmap::signal_model::{
    generate_read_set, generate_reference, load_pore_model, read_fasta, read_signals,
    synth_pore_model, write_fasta, write_pore_model, write_signals, DatasetPreset, ReadSetOptions,
    SignalParams,
};
use rawmap::trace::OperationTrace;

/// Raw nanopore signal mapping and in-storage accelerator cost simulation.
#[derive(Parser, Debug)]
#[command(name = "rawmap", version, about)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Hardware configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for mapping (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Numeric mode of the read event pipeline.
    #[arg(long, global = true, default_value = "fixed", value_parser = ["fixed", "float"])]
    arithmetic: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic reference, pore model and raw read signals.
    Gen(GenArgs),
    /// Build a seed index of a reference.
    Index(IndexArgs),
    /// Map raw signals against an index; writes mappings and an operation trace.
    Map(MapArgs),
    /// Score mappings against the ground truth stored with the signals.
    Eval(EvalArgs),
    /// Replay an operation trace on the hardware model.
    Simulate(SimulateArgs),
    /// Summarize cost and accuracy reports.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Dataset preset (d1-like .. d5-like).
    #[arg(long, default_value = "d1-like")]
    preset: String,
    /// Output directory.
    #[arg(long, short)]
    out_dir: PathBuf,
    /// k-mer length of the synthetic pore model.
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Gaussian current noise, pA.
    #[arg(long, default_value_t = 2.0)]
    noise: f64,
    /// Mean samples per k-mer.
    #[arg(long, default_value_t = 10.0)]
    samples_per_event: f64,
    /// Fraction of the reference covered by copies of one repeat motif.
    #[arg(long, default_value_t = 0.0)]
    repeat_fraction: f64,
    /// Override the preset's read count.
    #[arg(long)]
    reads: Option<usize>,
    /// Draw half of the reads from the reverse strand.
    #[arg(long)]
    reverse_strand: bool,
}

#[derive(Args, Debug)]
struct IndexArgs {
    /// Reference FASTA (first record is indexed).
    #[arg(long, short)]
    reference: PathBuf,
    /// Pore model TSV.
    #[arg(long, short)]
    pore_model: PathBuf,
    /// Output index file.
    #[arg(long, short)]
    out: PathBuf,
    /// Events per seed.
    #[arg(long, default_value_t = SeedScheme::default().n_events)]
    seed_events: usize,
    /// Bits per seed symbol; 0 keeps whole event codes.
    #[arg(long, default_value_t = 4)]
    seed_bits: u8,
    /// Quantization levels, as bits.
    #[arg(long, default_value_t = 6)]
    bucket_bits: u8,
    /// Keep runs of identical symbols instead of collapsing them.
    #[arg(long)]
    no_collapse: bool,
}

#[derive(Args, Debug)]
struct MapArgs {
    /// Index file.
    #[arg(long, short)]
    index: PathBuf,
    /// Signal container.
    #[arg(long, short)]
    signals: PathBuf,
    /// Output mappings TSV.
    #[arg(long, short)]
    out: PathBuf,
    /// Output operation trace TSV.
    #[arg(long, short)]
    trace: PathBuf,
    /// Frequency filter threshold (default from the genome-size preset).
    #[arg(long)]
    thresh_freq: Option<u32>,
    /// Minimum votes per window (default from the genome-size preset).
    #[arg(long)]
    thresh_voting: Option<u32>,
    /// Vote window width, bases.
    #[arg(long)]
    voting_window: Option<u32>,
    /// Disable the frequency filter.
    #[arg(long)]
    no_freq_filter: bool,
    /// Disable seed-and-vote filtering.
    #[arg(long)]
    no_vote_filter: bool,
    /// Minimum chain score, in anchor-weight units (default 3 seeds).
    #[arg(long)]
    min_score: Option<f64>,
    /// Bases per read event used by chaining.
    #[arg(long, default_value_t = DEFAULT_EVENTS_TO_BASES as f64 / 256.0)]
    events_to_bases: f64,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Mappings TSV.
    #[arg(long, short)]
    mappings: PathBuf,
    /// Signal container holding the truth records.
    #[arg(long, short)]
    signals: PathBuf,
    /// Largest distance in bases counted as correct.
    #[arg(long, default_value_t = DEFAULT_DISTANCE_THRESHOLD)]
    threshold: u32,
    /// Output accuracy TSV.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Operation trace TSV.
    #[arg(long, short)]
    trace: PathBuf,
    /// Systems to cost (MARS, MS-SmartSSD, MARS-External, MARS-BitSerial); default all.
    #[arg(long = "system", short = 's')]
    systems: Vec<String>,
    /// Replace the trace's index size, bytes.
    #[arg(long)]
    index_bytes: Option<u64>,
    /// Multiply DRAM capacity and subarray count.
    #[arg(long, default_value_t = 1)]
    dram_scale: u32,
    /// Output cost report TSV.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Cost report TSV from `simulate`.
    #[arg(long, short)]
    cost: PathBuf,
    /// Accuracy TSV from `eval`.
    #[arg(long, short)]
    accuracy: Option<PathBuf>,
    /// Baseline system for speedup and energy ratios.
    #[arg(long, default_value = "MARS-External")]
    baseline: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let io = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<rawmap::Error>(), Some(rawmap::Error::Io { .. })));
            ExitCode::from(if io { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring thread pool")?;
    }
    match &cli.command {
        Command::Gen(a) => cmd_gen(&cli, a),
        Command::Index(a) => cmd_index(a),
        Command::Map(a) => cmd_map(&cli, a),
        Command::Eval(a) => cmd_eval(a),
        Command::Simulate(a) => cmd_simulate(&cli, a),
        Command::Report(a) => cmd_report(a),
    }
}

fn manifest_line(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading back {}", path.display()))?;
    Ok(format!(
        "{}\t{}\t{:08x}",
        path.display(),
        bytes.len(),
        crc32fast::hash(&bytes)
    ))
}

fn cmd_gen(cli: &Cli, a: &GenArgs) -> Result<()> {
    let mut preset = DatasetPreset::by_name(&a.preset)?;
    if let Some(n) = a.reads {
        preset.read_count = n;
    }
    std::fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))?;
    let (ref_seed, model_seed, read_seed) = (cli.seed, cli.seed.wrapping_add(1), cli.seed.wrapping_add(2));
    let reference = generate_reference(preset.genome_size, a.repeat_fraction, ref_seed)?;
    let model = synth_pore_model(a.k, model_seed)?;
    let opts = ReadSetOptions {
        signal: SignalParams {
            samples_per_event_mean: a.samples_per_event,
            noise_std: a.noise,
            ..SignalParams::default()
        },
        reverse_strand: a.reverse_strand,
    };
    let reads = generate_read_set(&reference, &preset, &model, &opts, read_seed)?;

    let paths = [
        a.out_dir.join("reference.fa"),
        a.out_dir.join("pore_model.tsv"),
        a.out_dir.join("signals.tsv"),
    ];
    write_fasta(std::slice::from_ref(&reference), &paths[0])?;
    write_pore_model(&model, &paths[1])?;
    write_signals(&reads, &paths[2])?;

    println!("# preset {} genome {} reads {}", preset.name, preset.genome_size, reads.len());
    println!("# seeds reference {ref_seed} pore_model {model_seed} reads {read_seed}");
    println!("file\tbytes\tcrc32");
    for p in &paths {
        println!("{}", manifest_line(p)?);
    }
    Ok(())
}

fn cmd_index(a: &IndexArgs) -> Result<()> {
    let refs = read_fasta(&a.reference)?;
    let Some(reference) = refs.first() else {
        bail!("{} holds no sequences", a.reference.display());
    };
    let model = load_pore_model(&a.pore_model)?;
    let seed_bits = (a.seed_bits > 0).then_some(a.seed_bits);
    let scheme = SeedScheme::new(a.seed_events, !a.no_collapse)?.with_seed_bits(seed_bits)?;
    let params = reference_quant_params(reference, &model, a.bucket_bits)?;
    let events = reference_to_events(reference, &model, &params, FixedPointFormat::default())?;
    let index = build_index(&events, scheme)?;
    index.write(&a.out)?;
    println!(
        "indexed {} ({} bases): {} windows, {} distinct seeds, {} bytes",
        index.reference_id,
        index.reference_length,
        index.n_windows(),
        index.distinct_hashes(),
        index.size_bytes()
    );
    Ok(())
}

fn map_params(cli: &Cli, a: &MapArgs, index: &ReferenceIndex) -> Result<MapParams> {
    let mut p = MapParams::default();
    p.events.arithmetic = cli.arithmetic.parse::<Arithmetic>()?;
    let mut filters = FilterParams::for_genome_size(index.reference_length as u64);
    if let Some(v) = a.thresh_freq {
        filters.thresh_freq = v;
    }
    if let Some(v) = a.thresh_voting {
        filters.thresh_voting = v;
    }
    if let Some(v) = a.voting_window {
        filters.voting_window = v;
    }
    filters.validate()?;
    p.filters = filters;
    p.use_frequency_filter = !a.no_freq_filter;
    p.use_vote_filter = !a.no_vote_filter;
    if !(a.events_to_bases > 0.0) {
        bail!("--events-to-bases must be positive");
    }
    p.chain.events_to_bases = (a.events_to_bases * 256.0).round() as i64;
    if let Some(s) = a.min_score {
        p.min_score = Some((s * 256.0).round() as i64);
    }
    Ok(p)
}

fn cmd_map(cli: &Cli, a: &MapArgs) -> Result<()> {
    let index = ReferenceIndex::read(&a.index)?;
    let params = map_params(cli, a, &index)?;
    let signals = read_signals(&a.signals)?;
    let results = signals
        .par_iter()
        .map(|raw| map_read(raw, &index, &params))
        .collect::<rawmap::Result<Vec<_>>>()?;
    let records: Vec<MappingRecord> = results.iter().map(MappingRecord::from).collect();
    write_mappings(&a.out, &records)?;
    let trace = combined_trace(&results);
    std::fs::write(&a.trace, trace.to_tsv())
        .map_err(|e| rawmap::Error::Io { path: a.trace.clone(), source: e })?;
    let mapped = records.iter().filter(|r| r.status == MapStatus::Mapped).count();
    println!("mapped {mapped} of {} reads", records.len());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let records = rawmap::mapper::read_mappings(&a.mappings)?;
    let signals = read_signals(&a.signals)?;
    let truths = truths_from_signals(&signals);
    let report = metrics(classify(&records, &truths, a.threshold), a.threshold);
    if let Some(out) = &a.out {
        report.write(out)?;
    }
    println!("{}", report.summary());
    Ok(())
}

fn hardware_config(cli: &Cli) -> Result<HardwareConfig> {
    Ok(match &cli.config {
        Some(p) => HardwareConfig::load(p)?,
        None => HardwareConfig::default(),
    })
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let mut cfg = hardware_config(cli)?;
    if a.dram_scale != 1 {
        cfg.dram = cfg.dram.scaled(a.dram_scale);
    }
    let text = std::fs::read_to_string(&a.trace)
        .map_err(|e| rawmap::Error::Io { path: a.trace.clone(), source: e })?;
    let mut trace = OperationTrace::from_tsv(&text)?;
    if let Some(b) = a.index_bytes {
        trace.index_bytes = b;
    }
    let systems: Vec<System> = if a.systems.is_empty() {
        System::ALL.to_vec()
    } else {
        a.systems.iter().map(|s| s.parse()).collect::<rawmap::Result<_>>()?
    };
    let reports = systems
        .iter()
        .map(|&s| simulate(&trace, s, &cfg))
        .collect::<rawmap::Result<Vec<CostReport>>>()?;
    std::fs::write(&a.out, reports_to_tsv(&reports))
        .map_err(|e| rawmap::Error::Io { path: a.out.clone(), source: e })?;
    for r in &reports {
        println!("{}", r.summary());
    }
    Ok(())
}

/// Per-system `(latency_s, energy_j, bytes)` from the `total` rows.
fn report_totals(text: &str) -> Result<Vec<(String, f64, f64, u64)>> {
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_HEADER) {
        bail!("not a cost report: header mismatch");
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            bail!("line {}: expected 5 columns", i + 2);
        }
        if f[0] == "total" {
            out.push((
                f[1].to_string(),
                f[2].parse().with_context(|| format!("line {}: latency", i + 2))?,
                f[3].parse().with_context(|| format!("line {}: energy", i + 2))?,
                f[4].parse().with_context(|| format!("line {}: bytes", i + 2))?,
            ));
        }
    }
    Ok(out)
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.cost)
        .map_err(|e| rawmap::Error::Io { path: a.cost.clone(), source: e })?;
    let totals = report_totals(&text)?;
    let base = totals
        .iter()
        .find(|t| t.0.eq_ignore_ascii_case(&a.baseline))
        .with_context(|| format!("baseline {} not in {}", a.baseline, a.cost.display()))?
        .clone();
    println!("system\tlatency_s\tenergy_j\tbytes_moved\tspeedup\tenergy_reduction");
    for (sys, lat, en, bytes) in &totals {
        let speedup = if *lat > 0.0 { base.1 / lat } else { f64::NAN };
        let saving = if *en > 0.0 { base.2 / en } else { f64::NAN };
        println!("{sys}\t{lat:.6e}\t{en:.6e}\t{bytes}\t{speedup:.3}\t{saving:.3}");
    }
    if let Some(p) = &a.accuracy {
        let text = std::fs::read_to_string(p)
            .map_err(|e| rawmap::Error::Io { path: p.clone(), source: e })?;
        println!("accuracy: {}", AccuracyReport::from_tsv(&text)?.summary());
    }
    Ok(())
}
