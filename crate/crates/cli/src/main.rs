//! `bwx`: command-line surface of the bandwidth extension codec.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bwx_core::audio::AudioBuffer;
use bwx_core::eval;
use bwx_core::fir::FirFilter;
use bwx_core::highband::DEFAULT_PREEMPH;
use bwx_core::mlp::{self, MlpNetwork, TrainConfig, TrainingSample};
use bwx_core::pipeline::{self, CodecConfig};
use bwx_core::sideinfo::SideInfoStream;
use bwx_core::vq::{self, Codebook};
use bwx_core::wav::{read_wav, write_wav};

#[derive(Parser)]
#[command(name = "bwx", version, about = "Wideband speech bandwidth extension codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a mono WAV between 8 and 16 kHz (direction follows the
    /// input rate).
    Resample {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode 16 kHz wideband speech into a narrowband WAV and a side-info
    /// stream.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long)]
        out_nb: PathBuf,
        #[arg(long)]
        out_si: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PREEMPH)]
        preemph: f64,
        /// Shaping filter tap file applied to the narrowband output.
        #[arg(long)]
        irs_fir: Option<PathBuf>,
    },
    /// Decode a narrowband WAV plus side info back to 16 kHz wideband.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        si: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PREEMPH)]
        preemph: f64,
        /// Inverse shaping filter tap file applied before upsampling.
        #[arg(long)]
        irs_fir: Option<PathBuf>,
    },
    /// Train the high-band envelope codebook on a manifest of wideband
    /// WAV files.
    TrainVq {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 8)]
        bits: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PREEMPH)]
        preemph: f64,
        #[arg(long)]
        json: bool,
    },
    /// Train the harmonic gain predictor on a manifest of wideband WAV
    /// files.
    TrainMlp {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Dump per-frame low-band harmonic targets of a wideband WAV to CSV.
    ExtractTargets {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral distortion of the envelope codec over a corpus.
    EvalSd {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PREEMPH)]
        preemph: f64,
        #[arg(long)]
        json: bool,
    },
    /// Harmonic gain prediction error of a trained model over a corpus.
    EvalHarm {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Hanning-windowed periodogram of a WAV at a given instant, as CSV.
    DumpSpectrum {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Window position in seconds.
        #[arg(long, default_value_t = 0.0)]
        at: f64,
        #[arg(long, default_value_t = 32.0)]
        window_ms: f64,
        #[arg(long, default_value_t = 0.0)]
        offset_db: f64,
    },
    /// Describe a codec artifact (WAV, codebook, model or side info).
    Inspect {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), Box<dyn std::error::Error>> {
    match command {
        Command::Resample { input, out } => {
            let buf = read_wav(&input)?;
            let converted = match buf.sample_rate() {
                8_000 => bwx_core::resample::upsample_2x(&buf)?,
                _ => bwx_core::resample::downsample_2x(&buf)?,
            };
            atomic_write(&out, |p| Ok(write_wav(&converted, p)?))?;
            println!(
                "resampled {} Hz -> {} Hz, {} samples",
                buf.sample_rate(),
                converted.sample_rate(),
                converted.len()
            );
            Ok(())
        }
        Command::Encode {
            input,
            codebook,
            out_nb,
            out_si,
            preemph,
            irs_fir,
        } => {
            let wb = read_wav(&input)?;
            let cb = Codebook::load(&codebook)?;
            let config = codec_config(preemph, irs_fir.as_deref())?;
            let (nb, side) = pipeline::encode(&wb, &cb, &config)?;
            atomic_write(&out_nb, |p| Ok(write_wav(&nb, p)?))?;
            atomic_write(&out_si, |p| Ok(side.write(p)?))?;
            println!(
                "encoded {} frames, side info {} bits/s",
                side.frames(),
                side.bits_per_second()
            );
            Ok(())
        }
        Command::Decode {
            input,
            si,
            codebook,
            model,
            out,
            preemph,
            irs_fir,
        } => {
            let nb = read_wav(&input)?;
            let side = SideInfoStream::read(&si)?;
            let cb = Codebook::load(&codebook)?;
            let net = MlpNetwork::load(&model)?;
            let config = codec_config(preemph, irs_fir.as_deref())?;
            let wb = pipeline::decode(&nb, &side, &cb, &net, &config)?;
            atomic_write(&out, |p| Ok(write_wav(&wb, p)?))?;
            println!("decoded {} samples at 16000 Hz", wb.len());
            Ok(())
        }
        Command::TrainVq {
            manifest,
            bits,
            seed,
            out,
            preemph,
            json,
        } => {
            let files = read_manifest(&manifest)?;
            let mut vectors = Vec::new();
            let mut seconds = 0.0;
            for path in &files {
                let wb = require_wideband(path)?;
                seconds += wb.duration_seconds();
                vectors.extend(eval::envelope_training_vectors(&wb, preemph)?);
            }
            let (cb, log) = vq::lbg_train(&vectors, bits, seed)?;
            atomic_write(&out, |p| Ok(cb.save(p)?))?;
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "files": files.len(),
                        "seconds": seconds,
                        "vectors": vectors.len(),
                        "bits": bits,
                        "final_distortion": log.final_distortion,
                        "codebook_hash": format!("{:016x}", cb.content_hash()),
                    })
                );
            } else {
                println!(
                    "trained {}-bit codebook on {} vectors ({:.1} s of audio), final distortion {:.3}, hash {:016x}",
                    bits,
                    vectors.len(),
                    seconds,
                    log.final_distortion,
                    cb.content_hash()
                );
            }
            Ok(())
        }
        Command::TrainMlp {
            manifest,
            epochs,
            seed,
            out,
            json,
        } => {
            let files = read_manifest(&manifest)?;
            let mut samples = Vec::new();
            for path in &files {
                let wb = require_wideband(path)?;
                for rec in eval::analyze_corpus_frames(&wb)? {
                    if rec.silent {
                        continue;
                    }
                    if let Some(targets) = rec.targets_db {
                        samples.push(TrainingSample {
                            features: rec.features,
                            targets,
                        });
                    }
                }
            }
            let config = TrainConfig {
                epochs,
                seed,
                ..Default::default()
            };
            let (net, summary) = mlp::train(&samples, &config)?;
            atomic_write(&out, |p| Ok(net.save(p)?))?;
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "files": files.len(),
                        "voiced_samples": samples.len(),
                        "epochs": epochs,
                        "final_mse": summary.final_mse,
                    })
                );
            } else {
                println!(
                    "trained on {} voiced frames for {} epochs, final MSE {:.3} dB^2",
                    samples.len(),
                    epochs,
                    summary.final_mse
                );
            }
            Ok(())
        }
        Command::ExtractTargets { input, out } => {
            let wb = require_wideband(&input)?;
            let records = eval::analyze_corpus_frames(&wb)?;
            let mut rows = String::from("frame_index,f0_hz,gain1_db,gain2_db,pitch_gain\n");
            let mut voiced = 0;
            for rec in &records {
                if let Some(t) = rec.targets_db {
                    rows.push_str(&format!(
                        "{},{:.4},{:.4},{:.4},{:.4}\n",
                        rec.frame_index,
                        rec.pitch.f0_hz(),
                        t[0],
                        t[1],
                        rec.pitch.gain
                    ));
                    voiced += 1;
                }
            }
            atomic_write(&out, |p| Ok(std::fs::write(p, &rows)?))?;
            println!("wrote {voiced} voiced frames of {}", records.len());
            Ok(())
        }
        Command::EvalSd {
            input,
            manifest,
            codebook,
            preemph,
            json,
        } => {
            let cb = Codebook::load(&codebook)?;
            let config = CodecConfig {
                preemph,
                irs_filter: None,
            };
            let band = (3000.0, 8000.0);
            let mut per_frame = Vec::new();
            for path in corpus_files(input, manifest)? {
                let wb = require_wideband(&path)?;
                let report = eval::corpus_spectral_distortion(&wb, &cb, &config, band)?;
                per_frame.extend(report.per_frame);
            }
            if per_frame.is_empty() {
                return Err("no frames survived silence stripping".into());
            }
            let mean = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
            let mut sorted = per_frame.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = sorted[sorted.len() / 2];
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "band_hz": [band.0, band.1],
                        "frames": per_frame.len(),
                        "mean_sd_db": mean,
                        "median_sd_db": median,
                    })
                );
            } else {
                println!(
                    "spectral distortion over {:.0}-{:.0} Hz: mean {:.2} dB, median {:.2} dB, {} frames",
                    band.0,
                    band.1,
                    mean,
                    median,
                    per_frame.len()
                );
            }
            Ok(())
        }
        Command::EvalHarm {
            input,
            manifest,
            model,
            json,
        } => {
            let net = MlpNetwork::load(&model)?;
            let mut predicted = Vec::new();
            let mut reference = Vec::new();
            for path in corpus_files(input, manifest)? {
                let wb = require_wideband(&path)?;
                let (p, r) = eval::harmonic_eval_pairs(&wb, &net)?;
                predicted.extend(p);
                reference.extend(r);
            }
            let mae = eval::harmonic_gain_error(&predicted, &reference)?;
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "voiced_frames": predicted.len(),
                        "mean_abs_error_db": mae,
                    })
                );
            } else {
                println!(
                    "harmonic gain error: {:.2} dB mean absolute over {} voiced frames",
                    mae,
                    predicted.len()
                );
            }
            Ok(())
        }
        Command::DumpSpectrum {
            input,
            out,
            at,
            window_ms,
            offset_db,
        } => {
            let buf = read_wav(&input)?;
            let at_sample = (at * buf.sample_rate() as f64).round() as usize;
            let spectrum = eval::dump_spectrum(&buf, window_ms, at_sample, offset_db)?;
            let mut rows = String::from("hz,db\n");
            for (hz, db) in &spectrum {
                rows.push_str(&format!("{hz:.2},{db:.4}\n"));
            }
            atomic_write(&out, |p| Ok(std::fs::write(p, &rows)?))?;
            println!("wrote {} bins", spectrum.len());
            Ok(())
        }
        Command::Inspect { path, json } => inspect(&path, json),
    }
}

fn codec_config(preemph: f64, irs_fir: Option<&Path>) -> Result<CodecConfig, Box<dyn std::error::Error>> {
    if !(0.0..1.0).contains(&preemph) {
        return Err(format!("--preemph must be in [0, 1), got {preemph}").into());
    }
    let irs_filter = match irs_fir {
        Some(path) => Some(FirFilter::load_taps(path, "shaping filter")?),
        None => None,
    };
    Ok(CodecConfig {
        preemph,
        irs_filter,
    })
}

fn corpus_files(
    input: Option<PathBuf>,
    manifest: Option<PathBuf>,
) -> Result<Vec<PathBuf>, Box<dyn std::error::Error>> {
    match (input, manifest) {
        (Some(path), None) => Ok(vec![path]),
        (None, Some(mf)) => read_manifest(&mf),
        _ => Err("pass exactly one of --in or --manifest".into()),
    }
}

fn read_manifest(path: &Path) -> Result<Vec<PathBuf>, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut files = Vec::new();
    for line in text.lines() {
        let trimmed = line.split('#').next().unwrap_or("").trim();
        if trimmed.is_empty() {
            continue;
        }
        let p = PathBuf::from(trimmed);
        files.push(if p.is_absolute() { p } else { base.join(p) });
    }
    if files.is_empty() {
        return Err(format!("manifest {} lists no files", path.display()).into());
    }
    Ok(files)
}

fn require_wideband(path: &Path) -> Result<AudioBuffer, Box<dyn std::error::Error>> {
    let buf = read_wav(path)?;
    if buf.sample_rate() != 16_000 {
        return Err(format!(
            "{} is {} Hz; training and evaluation need 16 kHz wideband input",
            path.display(),
            buf.sample_rate()
        )
        .into());
    }
    Ok(buf)
}

/// Write through a temp file and rename, so failures never leave partial
/// output files behind.
fn atomic_write<F>(path: &Path, write: F) -> Result<(), Box<dyn std::error::Error>>
where
    F: FnOnce(&Path) -> Result<(), Box<dyn std::error::Error>>,
{
    let file_name = path
        .file_name()
        .ok_or_else(|| format!("invalid output path {}", path.display()))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    match write(&tmp) {
        Ok(()) => {
            std::fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn inspect(path: &Path, json: bool) -> Result<(), Box<dyn std::error::Error>> {
    let mut magic = [0u8; 8];
    {
        use std::io::Read;
        let mut f = std::fs::File::open(path)?;
        let n = f.read(&mut magic)?;
        if n < 4 {
            return Err("file too short to identify".into());
        }
    }
    if magic.starts_with(b"RIFF") {
        let buf = read_wav(path)?;
        if json {
            println!(
                "{}",
                serde_json::json!({
                    "type": "wav",
                    "sample_rate": buf.sample_rate(),
                    "samples": buf.len(),
                    "seconds": buf.duration_seconds(),
                    "level_dbfs": buf.level_dbfs(),
                })
            );
        } else {
            println!(
                "WAV: {} Hz, {} samples, {:.3} s, level {:.1} dBFS",
                buf.sample_rate(),
                buf.len(),
                buf.duration_seconds(),
                buf.level_dbfs()
            );
        }
    } else if magic.starts_with(b"BWXVQ") {
        let cb = Codebook::load(path)?;
        if json {
            println!(
                "{}",
                serde_json::json!({
                    "type": "codebook",
                    "dim": cb.dim(),
                    "size": cb.size(),
                    "bits": cb.bits(),
                    "hash": format!("{:016x}", cb.content_hash()),
                })
            );
        } else {
            println!(
                "codebook: {} x {} ({} bits), hash {:016x}",
                cb.size(),
                cb.dim(),
                cb.bits(),
                cb.content_hash()
            );
        }
    } else if magic.starts_with(b"BWXMLP") {
        let net = MlpNetwork::load(path)?;
        if json {
            println!(
                "{}",
                serde_json::json!({
                    "type": "model",
                    "layers": bwx_core::mlp::LAYER_SIZES,
                    "front_end": net.mfcc_tag(),
                })
            );
        } else {
            println!(
                "model: layers {:?}, front end {}",
                bwx_core::mlp::LAYER_SIZES,
                net.mfcc_tag()
            );
        }
    } else if magic.starts_with(b"BWXSI") {
        let side = SideInfoStream::read(path)?;
        if json {
            println!(
                "{}",
                serde_json::json!({
                    "type": "side_info",
                    "frames": side.frames(),
                    "seconds": side.duration_seconds(),
                    "bits_per_second": side.bits_per_second(),
                    "frame_size": side.frame_size,
                    "sample_rate": side.sample_rate,
                    "codebook_hash": format!("{:016x}", side.codebook_hash),
                })
            );
        } else {
            println!(
                "side info: {} frames, {:.3} s, {} bits/s, codebook {:016x}",
                side.frames(),
                side.duration_seconds(),
                side.bits_per_second(),
                side.codebook_hash
            );
        }
    } else {
        return Err(format!("{}: unrecognized file type", path.display()).into());
    }
    Ok(())
}
