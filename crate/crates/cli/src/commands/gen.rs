//! `gen`: synthetic clip with ground truth.

use crate::args::GenArgs;
use crate::errors::{CliError, CliResult};
use crate::imageio::{numbered_path, save_mask};
use crate::report::write_json;
use image::RgbImage;
use salientcut_core::synth::{generate, SynthSpec};

pub fn run(args: &GenArgs) -> CliResult<()> {
    if args.frames == 0 {
        return Err(CliError::Usage("--frames must be at least 1".into()));
    }
    if args.width < 64 || args.height < 64 {
        return Err(CliError::Usage("clip must be at least 64x64".into()));
    }
    let mut spec = SynthSpec::new(args.width, args.height, args.frames, args.seed);
    if let Some(start) = args.occlude_start {
        if args.occlude_len == 0 || start >= args.frames {
            return Err(CliError::Usage(
                "occlusion window must lie inside the clip".into(),
            ));
        }
        spec.occlusion = Some((start, args.occlude_len));
    }

    let frames_dir = args.output.join("frames");
    let truth_dir = args.output.join("truth");
    for dir in [&frames_dir, &truth_dir] {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    }

    let clip = generate(&spec);
    for (i, frame) in clip.frames.iter().enumerate() {
        let path = numbered_path(&frames_dir, "frame", i);
        let mut img = RgbImage::new(frame.width() as u32, frame.height() as u32);
        for (x, y, p) in img.enumerate_pixels_mut() {
            for c in 0..3 {
                p.0[c] = (frame.get(x as usize, y as usize, c).clamp(0.0, 1.0) * 255.0).round()
                    as u8;
            }
        }
        img.save(&path).map_err(|e| CliError::io(path.display(), e))?;
    }
    for (i, mask) in clip.truth.iter().enumerate() {
        save_mask(mask, &numbered_path(&truth_dir, "frame", i))?;
    }

    let manifest = serde_json::json!({
        "command": "gen",
        "width": args.width,
        "height": args.height,
        "frames": args.frames,
        "seed": args.seed,
        "occlusion": spec.occlusion.map(|(s, l)| serde_json::json!({"start": s, "len": l})),
        "disk_radius": clip.radius,
    });
    write_json(&args.output.join("clip.json"), &manifest)?;
    println!(
        "wrote {} frames ({}x{}) to {}",
        args.frames,
        args.width,
        args.height,
        args.output.display()
    );
    Ok(())
}
