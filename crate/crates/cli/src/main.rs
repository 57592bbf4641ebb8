mod config;

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mfsk_core::dataset::{generate, Dataset, DatasetSpec, Label, SnrMode};
use mfsk_core::dsp::{autocorrelation, energy_spectrum, ClassicalDemodulator};
use mfsk_core::eval::{
    bench_latency, metrics, sweep, write_ber_csv, write_ser_csv, BerRow, ConfusionMatrix, Demodulator,
    NeuralDemodulator, SerRow,
};
use mfsk_core::neural::{load_weights, save_weights, train_with_progress, Examples, TrainConfig};
use mfsk_core::signal::{apply_awgn, synthesize_symbol, Interval, SnrDb, Waveform, SNR_SATURATION_DB};
use mfsk_core::theory::{self, ErrorProbability, SymbolSnr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use config::{Profile, ProfileSet};

/// Bad flags or configuration; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "mfsk", version, about = "MFSK modem workbench")]
struct Cli {
    /// Worker threads for dataset generation and sweeps; 1 gives the
    /// reference path. Falls back to MFSK_THREADS.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,

    /// TOML file with extra `[profiles.<name>]` tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset file.
    Synth(SynthArgs),
    /// Waveform excerpt, energy spectrum and autocorrelation of one symbol.
    Analyze(AnalyzeArgs),
    /// Train the CNN demodulator on a dataset.
    Train(TrainArgs),
    /// Demodulate a dataset and report metrics.
    Demod(DemodArgs),
    /// SER and BER over an SNR grid.
    Sweep(SweepArgs),
    /// Closed-form non-coherent SER/BER over an Eb/N0 grid.
    Theory(TheoryArgs),
    /// Per-symbol demodulation latency.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ProfileArg {
    /// Built-in `jt65a-full` or `reduced-m8`, or a name from --config.
    #[arg(long, default_value = "jt65a-full")]
    profile: String,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DemodChoice {
    /// Trained weights file.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Use the FFT magnitude-argmax demodulator.
    #[arg(long)]
    classical: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    profile: ProfileArg,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    /// `lo..hi` (uniform), a fixed value in dB, or `clean`.
    #[arg(long, allow_hyphen_values = true, default_value = "-30..0")]
    snr: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Also draw sync-tone records (label 65535).
    #[arg(long)]
    include_sync: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    profile: ProfileArg,
    /// Dataset to take the record from.
    #[arg(long, requires = "index", conflicts_with = "tone")]
    data: Option<PathBuf>,
    #[arg(long)]
    index: Option<u64>,
    /// Synthesize a single symbol instead: `sync` or a tone index.
    #[arg(long)]
    tone: Option<String>,
    /// SNR in dB for --tone, or `clean`.
    #[arg(long, allow_hyphen_values = true, default_value = "clean")]
    snr: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples in the waveform excerpt.
    #[arg(long, default_value_t = 512)]
    excerpt: usize,
    /// Largest autocorrelation lag.
    #[arg(long, default_value_t = 512)]
    max_lag: usize,
    /// Directory for waveform.csv, esd.csv and autocorr.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    profile: ProfileArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    epochs: u64,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: u64,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output weights file.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch `epoch,loss,accuracy,seconds` CSV.
    #[arg(long)]
    log: PathBuf,
}

#[derive(Args)]
struct DemodArgs {
    #[command(flatten)]
    profile: ProfileArg,
    #[command(flatten)]
    demod: DemodChoice,
    #[arg(long)]
    data: PathBuf,
    /// Metrics report (key=value); printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Confusion matrix CSV.
    #[arg(long)]
    confusion: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    profile: ProfileArg,
    #[command(flatten)]
    demod: DemodChoice,
    /// Comma-separated dB values or inclusive `start:stop:step` ranges.
    #[arg(long, allow_hyphen_values = true)]
    snr: String,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// `snr_db,ser,stderr,n` CSV.
    #[arg(long)]
    ser_out: Option<PathBuf>,
    /// `snr_db,ebn0_db,ber_measured,ber_from_ser,ber_theory,n` CSV.
    #[arg(long)]
    ber_out: Option<PathBuf>,
}

#[derive(Args)]
struct TheoryArgs {
    /// Alphabet size, a power of two up to 64.
    #[arg(long, default_value_t = 64)]
    m: usize,
    /// Eb/N0 grid in dB as for `sweep --snr`; `chance` adds the zero-SNR row.
    #[arg(long, allow_hyphen_values = true)]
    ebn0: String,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    profile: ProfileArg,
    #[command(flatten)]
    demod: DemodChoice,
    /// Timed symbols (at least 100).
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(100..))]
    n: u64,
    #[arg(long)]
    seed: Option<u64>,
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::rng().random::<u64>();
        eprintln!("seed={s} (derived from entropy; pass --seed {s} to repeat)");
        s
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Dataset::read(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn parse_snr_mode(s: &str) -> Result<SnrMode> {
    let s = s.trim();
    if s == "clean" {
        return Ok(SnrMode::Fixed(SNR_SATURATION_DB));
    }
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| usage(format!("bad SNR value {t:?}")));
    let mode = match s.split_once("..") {
        Some((lo, hi)) => SnrMode::Uniform { lo: num(lo)?, hi: num(hi)? },
        None => SnrMode::Fixed(num(s)?),
    };
    match mode {
        SnrMode::Uniform { lo, hi } if lo > hi || lo.is_nan() || hi.is_nan() => Err(usage(format!("SNR range {s:?} has lo > hi"))),
        m => Ok(m),
    }
}

/// Grid items: numbers or inclusive `start:stop:step` ranges. `chance`
/// becomes `None` when allowed.
fn parse_grid(s: &str, allow_chance: bool) -> Result<Vec<Option<f64>>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| usage(format!("bad grid value {t:?}")))
    };
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if item == "chance" {
            if !allow_chance {
                return Err(usage("`chance` is only valid for theory grids"));
            }
            out.push(None);
            continue;
        }
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(Some(num(v)?)),
            [a, b, step] => {
                let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                if step <= 0.0 || b < a {
                    return Err(usage(format!("bad range {item:?}")));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                if count > 100_000 {
                    return Err(usage(format!("range {item:?} has too many points")));
                }
                out.extend((0..=count).map(|i| Some(a + i as f64 * step)));
            }
            _ => return Err(usage(format!("bad grid item {item:?}"))),
        }
    }
    if out.is_empty() {
        return Err(usage("empty grid"));
    }
    Ok(out)
}

fn make_demodulator(choice: &DemodChoice, profile: &Profile) -> Result<Box<dyn Demodulator>> {
    match &choice.weights {
        None => Ok(Box::new(ClassicalDemodulator::new(&profile.modem))),
        Some(path) => {
            let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let state = load_weights::<f32, _>(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
            let c = state.config();
            if c.input_len != profile.modem.symbol_len || c.classes != profile.modem.tone_count {
                bail!(
                    "weights expect {} samples / {} classes, profile {} has {} / {}",
                    c.input_len,
                    c.classes,
                    profile.name,
                    profile.modem.symbol_len,
                    profile.modem.tone_count
                );
            }
            Ok(Box::new(NeuralDemodulator::new(state)))
        }
    }
}

fn cmd_synth(profiles: &ProfileSet, a: SynthArgs) -> Result<()> {
    let profile = profiles.get(&a.profile.profile).map_err(|e| usage(e.to_string()))?;
    let spec = DatasetSpec {
        profile: profile.modem.clone(),
        count: a.count,
        snr: parse_snr_mode(&a.snr)?,
        seed: resolve_seed(a.seed),
        include_sync: a.include_sync,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let ds = generate(&spec)?;
    let bytes = ds.to_bytes()?;
    write_bytes(&a.out, &bytes)?;
    println!("records={}", ds.records.len());
    println!("bytes={}", bytes.len());
    println!("sha256={}", sha256_hex(&bytes));
    Ok(())
}

fn cmd_analyze(profiles: &ProfileSet, a: AnalyzeArgs) -> Result<()> {
    let profile = profiles.get(&a.profile.profile).map_err(|e| usage(e.to_string()))?;
    let p = &profile.modem;
    let (waveform, label) = match (&a.data, &a.tone) {
        (Some(path), _) => {
            let ds = read_dataset(path)?;
            if !ds.matches_profile(p) {
                bail!("{} was not generated with profile {}", path.display(), profile.name);
            }
            let index = a.index.unwrap_or(0);
            let r = ds
                .records
                .get(index as usize)
                .ok_or_else(|| anyhow!("record index {index} out of range ({} records)", ds.records.len()))?;
            let samples = r.samples.iter().map(|&v| v as f64).collect();
            (Waveform::new(samples, p.sample_rate_hz)?, r.label)
        }
        (None, Some(tone)) => {
            let label = if tone == "sync" {
                Label::Sync
            } else {
                let i: u16 = tone.parse().map_err(|_| usage(format!("bad tone {tone:?}")))?;
                if i as usize >= p.tone_count {
                    return Err(usage(format!("tone {i} out of range for M={}", p.tone_count)));
                }
                Label::Data(i)
            };
            let interval = match label {
                Label::Sync => Interval::Sync,
                Label::Data(i) => Interval::Data(p.tone(i as usize)?),
            };
            let clean = synthesize_symbol(p, interval, 0.0, 1.0)?;
            let w = match parse_snr_mode(&a.snr)? {
                SnrMode::Fixed(v) if v >= SNR_SATURATION_DB => clean,
                SnrMode::Fixed(v) => {
                    let mut rng = ChaCha20Rng::seed_from_u64(resolve_seed(a.seed));
                    apply_awgn(p, &clean, SnrDb::new(v)?, Some(0.5), &mut rng)?
                }
                SnrMode::Uniform { .. } => return Err(usage("analyze takes a single SNR value")),
            };
            (w, label)
        }
        (None, None) => return Err(usage("give --data with --index, or --tone")),
    };

    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let dt = 1.0 / p.sample_rate_hz;
    let mut out = create(&a.out_dir.join("waveform.csv"))?;
    writeln!(out, "n,t_s,sample")?;
    for (n, v) in waveform.samples().iter().take(a.excerpt).enumerate() {
        writeln!(out, "{n},{},{v}", n as f64 * dt)?;
    }
    out.flush()?;

    let spectrum = energy_spectrum(&waveform)?;
    let mut out = create(&a.out_dir.join("esd.csv"))?;
    writeln!(out, "bin,freq_hz,energy")?;
    for (k, e) in spectrum.bin_energies.iter().enumerate() {
        writeln!(out, "{k},{},{e}", spectrum.frequency_of(k))?;
    }
    out.flush()?;

    let acf = autocorrelation(&waveform, a.max_lag.min(waveform.len() - 1))?;
    let mut out = create(&a.out_dir.join("autocorr.csv"))?;
    writeln!(out, "lag,lag_s,r")?;
    for (lag, r) in acf.iter().enumerate() {
        writeln!(out, "{lag},{},{r}", lag as f64 * dt)?;
    }
    out.flush()?;

    let interval = match label {
        Label::Sync => Interval::Sync,
        Label::Data(i) => Interval::Data(p.tone(i as usize)?),
    };
    let tone_bin = p.bin_of(interval);
    let peak = spectrum.peak_bin();
    println!("label={}", match label {
        Label::Sync => "sync".to_string(),
        Label::Data(i) => i.to_string(),
    });
    println!("tone_bin={tone_bin}");
    println!("tone_hz={}", spectrum.frequency_of(tone_bin));
    println!("peak_bin={peak}");
    println!("peak_hz={}", spectrum.frequency_of(peak));
    println!("noise_floor={}", spectrum.noise_floor());
    println!("tone_floor_ratio={}", spectrum.floor_ratio(tone_bin));
    Ok(())
}

fn cmd_train(profiles: &ProfileSet, a: TrainArgs) -> Result<()> {
    let profile = profiles.get(&a.profile.profile).map_err(|e| usage(e.to_string()))?;
    let cfg = TrainConfig {
        learning_rate: a.lr,
        batch_size: a.batch_size as usize,
        epochs: a.epochs as usize,
        seed: resolve_seed(a.seed),
        ..TrainConfig::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let ds = read_dataset(&a.data)?;
    if !ds.matches_profile(&profile.modem) {
        bail!("{} was not generated with profile {}", a.data.display(), profile.name);
    }
    let examples = Examples::from_dataset(&ds).context("dataset holds sync records; the CNN has no sync class")?;
    let epochs = cfg.epochs;
    let (state, log) = train_with_progress::<f32>(profile.model, &cfg, &examples, |e, s| {
        eprintln!(
            "epoch {e}/{epochs} loss={:.5} accuracy={:.4} seconds={:.1}",
            s.loss, s.accuracy, s.seconds
        );
    })?;
    let mut weights = Vec::new();
    save_weights(&state, &mut weights)?;
    write_bytes(&a.out, &weights)?;
    write_bytes(&a.log, log.to_csv().as_bytes())?;
    let last = log.epochs.last().expect("at least one epoch");
    println!("final_loss={}", last.loss);
    println!("final_accuracy={}", last.accuracy);
    println!("weights_sha256={}", sha256_hex(&weights));
    Ok(())
}

fn cmd_demod(profiles: &ProfileSet, a: DemodArgs) -> Result<()> {
    let profile = profiles.get(&a.profile.profile).map_err(|e| usage(e.to_string()))?;
    let mut demod = make_demodulator(&a.demod, profile)?;
    let ds = read_dataset(&a.data)?;
    if !ds.matches_profile(&profile.modem) {
        bail!("{} was not generated with profile {}", a.data.display(), profile.name);
    }
    let data: Vec<_> = ds.records.iter().filter(|r| r.label != Label::Sync).collect();
    let skipped = ds.records.len() - data.len();
    let mut cm = ConfusionMatrix::new(profile.modem.tone_count);
    for chunk in data.chunks(256) {
        let windows: Vec<&[f32]> = chunk.iter().map(|r| &r.samples[..]).collect();
        for (r, y) in chunk.iter().zip(demod.demodulate_batch(&windows)?) {
            cm.accumulate(r.label.code() as usize, y)?;
        }
    }
    let report = metrics(&cm)?;
    let text = report.to_kv_text();
    match &a.out {
        Some(path) => {
            write_bytes(path, text.as_bytes())?;
            println!("demodulator={}", demod.name());
            println!("symbols={}", report.total);
            println!("skipped_sync={skipped}");
            println!("accuracy={}", report.accuracy);
            println!("ser={}", report.ser);
            println!("ber_measured={}", report.ber_measured);
        }
        None => print!("{text}"),
    }
    if let Some(path) = &a.confusion {
        let mut out = create(path)?;
        cm.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn cmd_sweep(profiles: &ProfileSet, a: SweepArgs) -> Result<()> {
    let profile = profiles.get(&a.profile.profile).map_err(|e| usage(e.to_string()))?;
    if a.ser_out.is_none() && a.ber_out.is_none() {
        return Err(usage("give --ser-out and/or --ber-out"));
    }
    let grid: Vec<f64> = parse_grid(&a.snr, false)?.into_iter().flatten().collect();
    let seed = resolve_seed(a.seed);
    let mut demod = make_demodulator(&a.demod, profile)?;
    let points = sweep(demod.as_mut(), &profile.modem, &grid, a.n, seed)?;
    let ser_rows: Vec<SerRow> = points.iter().map(|(s, cm)| SerRow::from_confusion(*s, cm)).collect();
    let ber_rows = points
        .iter()
        .map(|(s, cm)| BerRow::from_confusion(&profile.modem, *s, cm))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(path) = &a.ser_out {
        let mut out = create(path)?;
        write_ser_csv(&ser_rows, &mut out)?;
        out.flush()?;
    }
    if let Some(path) = &a.ber_out {
        let mut out = create(path)?;
        write_ber_csv(&ber_rows, &mut out)?;
        out.flush()?;
    }
    for (s, b) in ser_rows.iter().zip(&ber_rows) {
        println!(
            "snr_db={} ebn0_db={:.3} ser={} stderr={:.3e} ber={} ber_theory={:.3e}",
            s.snr_db, b.ebn0_db, s.ser, s.stderr, b.ber_measured, b.ber_theory
        );
    }
    let bad: Vec<String> = ber_rows.iter().filter(|r| !r.bounds_hold()).map(|r| r.snr_db.to_string()).collect();
    if !bad.is_empty() {
        bail!("BER <= SER <= k*BER violated at SNR {}", bad.join(", "));
    }
    Ok(())
}

fn cmd_theory(a: TheoryArgs) -> Result<()> {
    if !(a.m.is_power_of_two() && (2..=theory::MAX_ORDER).contains(&a.m)) {
        return Err(usage(format!("--m must be a power of two in 2..={}", theory::MAX_ORDER)));
    }
    let grid = parse_grid(&a.ebn0, true)?;
    let mut text = String::from("ebn0_db,esn0_db,ser,ber\n");
    for point in grid {
        let (snr, label_eb, label_es) = match point {
            None => (SymbolSnr::Chance, "-inf".to_string(), "-inf".to_string()),
            Some(eb) => {
                let es = theory::ebn0_to_esn0(a.m, eb)?;
                (SymbolSnr::Db(es), eb.to_string(), es.to_string())
            }
        };
        let ser = theory::ser_noncoherent_mfsk(a.m, snr)?;
        let ber = theory::ser_to_ber(a.m, ErrorProbability::new(ser.value())?)?;
        text.push_str(&format!("{label_eb},{label_es},{},{}\n", ser.value(), ber.value()));
    }
    match &a.out {
        Some(path) => write_bytes(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_bench(profiles: &ProfileSet, a: BenchArgs) -> Result<()> {
    let profile = profiles.get(&a.profile.profile).map_err(|e| usage(e.to_string()))?;
    let mut demod = make_demodulator(&a.demod, profile)?;
    let report = bench_latency(demod.as_mut(), &profile.modem, a.n as usize, resolve_seed(a.seed))?;
    println!("demodulator={}", demod.name());
    print!("{}", report.to_text());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let threads = match cli.threads {
        Some(t) => Some(t as usize),
        None => match std::env::var("MFSK_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .ok()
                    .filter(|&t| t >= 1)
                    .ok_or_else(|| usage(format!("MFSK_THREADS={v:?} is not a positive integer")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let profiles = match &cli.config {
        Some(path) => ProfileSet::with_file(path).map_err(|e| usage(format!("{e:#}")))?,
        None => ProfileSet::builtin(),
    };
    match cli.command {
        Command::Synth(a) => cmd_synth(&profiles, a),
        Command::Analyze(a) => cmd_analyze(&profiles, a),
        Command::Train(a) => cmd_train(&profiles, a),
        Command::Demod(a) => cmd_demod(&profiles, a),
        Command::Sweep(a) => cmd_sweep(&profiles, a),
        Command::Theory(a) => cmd_theory(a),
        Command::Bench(a) => cmd_bench(&profiles, a),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on its own usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_modes() {
        assert_eq!(parse_snr_mode("-30..0").unwrap(), SnrMode::Uniform { lo: -30.0, hi: 0.0 });
        assert_eq!(parse_snr_mode("-12.5").unwrap(), SnrMode::Fixed(-12.5));
        assert_eq!(parse_snr_mode("clean").unwrap(), SnrMode::Fixed(SNR_SATURATION_DB));
        assert!(parse_snr_mode("0..-3").is_err());
        assert!(parse_snr_mode("loud").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(
            parse_grid("-2:0:1,5", false).unwrap(),
            vec![Some(-2.0), Some(-1.0), Some(0.0), Some(5.0)]
        );
        assert_eq!(parse_grid("chance,3", true).unwrap(), vec![None, Some(3.0)]);
        assert!(parse_grid("chance", false).is_err());
        assert!(parse_grid("1:0:1", false).is_err());
        assert!(parse_grid("", false).is_err());
        assert_eq!(parse_grid("0:1:0.25", false).unwrap().len(), 5);
    }
}
