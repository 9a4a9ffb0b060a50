//! `eval`: score predicted masks against ground truth.

use crate::args::EvalArgs;
use crate::errors::{CliError, CliResult};
use crate::imageio::{list_sequence, load_mask};
use crate::report::{metrics_csv, metrics_json, write_text};
use salientcut_core::eval::score;
use salientcut_core::LabelField;
use std::path::Path;

fn load_all(dir: &Path) -> CliResult<Vec<LabelField>> {
    let seq = list_sequence(dir)?;
    seq.paths
        .iter()
        .enumerate()
        .map(|(i, p)| load_mask(p, i))
        .collect()
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let predicted = load_all(&args.predicted)?;
    let truth = load_all(&args.truth)?;
    if predicted.len() != truth.len() {
        return Err(CliError::Usage(format!(
            "frame count mismatch: {} predicted vs {} truth",
            predicted.len(),
            truth.len()
        )));
    }
    let report = score(&predicted, &truth).map_err(CliError::from)?;

    println!(
        "frames {}  error {:.4}  recall {:.4}  precision {:.4}  F {:.4}",
        report.per_frame.len(),
        report.error,
        report.recall,
        report.precision,
        report.f_value
    );
    println!(
        "counts tp {} tn {} fp {} fn {}",
        report.tp, report.tn, report.fp, report.fn_
    );

    if let Some(path) = &args.json {
        write_text(path, &metrics_json(&report))?;
    }
    if let Some(path) = &args.csv {
        write_text(path, &metrics_csv(&report))?;
    }
    Ok(())
}
