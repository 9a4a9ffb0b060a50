//! `segment`: run a strategy over a frame sequence and write masks.

use crate::args::{SegmentArgs, StrategyArg};
use crate::errors::{CliError, CliResult};
use crate::imageio::{
    ensure_rgb, list_sequence, load_frame, load_seeds, numbered_path, save_mask, save_overlay,
};
use crate::report::write_json;
use salientcut_core::{FramePipeline, Strategy};

pub fn run(args: &SegmentArgs, workers: usize) -> CliResult<()> {
    let cfg = args.cfg.resolve()?;
    let strategy: Strategy = args.strategy.into();

    let seeds = match (&args.seeds, args.strategy) {
        (Some(path), _) => Some(load_seeds(path)?),
        (None, StrategyArg::Manual) => {
            return Err(CliError::Usage(
                "missing --seeds: the manual strategy needs a seed file for frame 0".into(),
            ))
        }
        (None, _) => None,
    };

    let seq = list_sequence(&args.input)?;
    std::fs::create_dir_all(&args.output).map_err(|e| CliError::io(args.output.display(), e))?;
    let overlay_dir = args.output.join("overlay");
    if args.overlay {
        std::fs::create_dir_all(&overlay_dir)
            .map_err(|e| CliError::io(overlay_dir.display(), e))?;
    }

    let mut pipeline =
        FramePipeline::new(cfg.clone(), strategy, seeds.clone()).map_err(CliError::from)?;
    if args.dump_graph.is_some() {
        pipeline.set_keep_graph(true);
    }

    for (i, path) in seq.paths.iter().enumerate() {
        let frame = ensure_rgb(load_frame(path)?);
        let (mask, _) = pipeline.step(&frame).map_err(CliError::from)?;
        save_mask(&mask, &numbered_path(&args.output, "frame", i))?;
        if args.overlay {
            save_overlay(&frame, &mask, &numbered_path(&overlay_dir, "frame", i))?;
        }
        if i == 0 {
            if let Some(dump) = &args.dump_graph {
                let graph = pipeline.last_graph().expect("graph retained");
                let mut file =
                    std::fs::File::create(dump).map_err(|e| CliError::io(dump.display(), e))?;
                graph
                    .write_dimacs(&mut file)
                    .map_err(|e| CliError::io(dump.display(), e))?;
            }
            pipeline.set_keep_graph(false);
        }
    }

    let manifest = serde_json::json!({
        "command": "segment",
        "version": env!("CARGO_PKG_VERSION"),
        "strategy": strategy,
        "input": args.input.display().to_string(),
        "output": args.output.display().to_string(),
        "frames": seq.paths.len(),
        "workers": workers,
        "seeds": args.seeds.as_ref().map(|p| p.display().to_string()),
        "config": cfg,
    });
    write_json(&args.output.join("manifest.json"), &manifest)?;
    println!(
        "segmented {} frames into {}",
        seq.paths.len(),
        args.output.display()
    );
    Ok(())
}
