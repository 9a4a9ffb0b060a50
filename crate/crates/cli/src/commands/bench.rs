//! `bench`: warmup + measured frames, per-stage timing report.

use crate::args::BenchArgs;
use crate::errors::{CliError, CliResult};
use crate::imageio::{ensure_rgb, list_sequence, load_frame};
use crate::report::{write_json, BenchReport};
use salientcut_core::{FramePipeline, StageTimes, Strategy};
use std::path::Path;

fn bench_one(dir: &Path, args: &BenchArgs, workers: usize) -> CliResult<BenchReport> {
    let cfg = args.cfg.resolve()?;
    let seq = list_sequence(dir)?;
    let frames: Vec<_> = seq
        .paths
        .iter()
        .map(|p| load_frame(p).map(ensure_rgb))
        .collect::<CliResult<_>>()?;
    if frames.len() <= args.warmup {
        return Err(CliError::Usage(format!(
            "{}: need more than {} frames for {} warmup frames",
            dir.display(),
            frames.len(),
            args.warmup
        )));
    }

    let mut pipeline = FramePipeline::new(cfg, Strategy::Update, None).map_err(CliError::from)?;
    let mut measured: Vec<StageTimes> = Vec::new();
    let limit = args.frames.unwrap_or(usize::MAX);
    for (i, frame) in frames.iter().enumerate() {
        if measured.len() >= limit {
            break;
        }
        let (_, times) = pipeline.step(frame).map_err(CliError::from)?;
        if i >= args.warmup {
            measured.push(times);
        }
    }

    let (w, h) = (frames[0].width(), frames[0].height());
    Ok(BenchReport::from_times(w, h, workers, &measured))
}

pub fn run(args: &BenchArgs, workers: usize) -> CliResult<()> {
    let mut reports = Vec::new();
    for dir in &args.input {
        let report = bench_one(dir, args, workers)?;
        println!(
            "{}: {} frames, {} workers, {:.2} fps",
            report.resolution, report.frames, report.workers, report.fps
        );
        println!(
            "  va {:8.2} ms | priors {:8.2} ms | t-link {:8.2} ms | graph cuts {:8.2} ms | misc {:6.2} ms",
            report.va.mean_ms,
            report.priors.mean_ms,
            report.tlink.mean_ms,
            report.graphcuts.mean_ms,
            report.misc.mean_ms
        );
        reports.push(report);
    }
    if let Some(path) = &args.json {
        write_json(path, &reports)?;
    }
    Ok(())
}
