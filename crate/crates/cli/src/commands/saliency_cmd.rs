//! `saliency`: per-frame saliency or focus-density heatmaps.

use crate::args::SaliencyArgs;
use crate::errors::{CliError, CliResult};
use crate::imageio::{ensure_rgb, list_sequence, load_frame, numbered_path, save_gray_unit};
use salientcut_core::attention::{compute_efdm, kalman_update_saliency};
use salientcut_core::saliency::{compute_saliency, SaliencyParams};
use salientcut_core::{CoreError, PixelGrid};

pub fn run(args: &SaliencyArgs) -> CliResult<()> {
    let cfg = args.cfg.resolve()?;
    let seq = list_sequence(&args.input)?;
    std::fs::create_dir_all(&args.output).map_err(|e| CliError::io(args.output.display(), e))?;

    let params = SaliencyParams::from_config(&cfg);
    let mut prev: Option<PixelGrid> = None;
    let mut ssm = None;
    for (i, path) in seq.paths.iter().enumerate() {
        let frame = ensure_rgb(load_frame(path)?);
        let mut sal = compute_saliency(&frame, prev.as_ref(), &params)
            .map_err(CliError::from)?;
        sal.frame_index = i;

        if args.efdm {
            let next_ssm = kalman_update_saliency(ssm.as_ref(), &sal, cfg.q_var, cfg.r_var)
                .map_err(CliError::from)?;
            let density = match compute_efdm(
                &next_ssm,
                cfg.efdm_samples,
                salientcut_core::rng::mix3(cfg.seed, i as u64, 1),
            ) {
                Ok(e) => e.density,
                Err(CoreError::DegenerateSaliency) => {
                    let n = (frame.width() * frame.height()) as f64;
                    PixelGrid::from_fn(frame.width(), frame.height(), |_, _| 1.0 / n)
                }
                Err(e) => return Err(e.into()),
            };
            // Max-normalize for display.
            save_gray_unit(
                &density.rescale_unit(),
                &numbered_path(&args.output, "efdm", i),
            )?;
            ssm = Some(next_ssm);
        } else {
            save_gray_unit(&sal.values, &numbered_path(&args.output, "saliency", i))?;
        }
        prev = Some(frame);
    }
    println!(
        "wrote {} {} maps to {}",
        seq.paths.len(),
        if args.efdm { "focus-density" } else { "saliency" },
        args.output.display()
    );
    Ok(())
}
