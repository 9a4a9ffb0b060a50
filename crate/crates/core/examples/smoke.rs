use salientcut_core::config::SegConfig;
use salientcut_core::eval::{run_strategy, score, stability};
use salientcut_core::pipeline::Strategy;
use salientcut_core::synth::{generate, SynthSpec};
use std::time::Instant;

fn main() {
    let clip = generate(&SynthSpec::new(352, 288, 15, 42));
    let cfg = SegConfig::default();
    let t = Instant::now();
    let update = run_strategy(&clip.frames, Strategy::Update, &cfg, None).unwrap();
    let el = t.elapsed().as_secs_f64();
    println!("update: {:.2}s for 15 frames = {:.2} fps", el, 15.0 / el);
    let r = score(&update, &clip.truth).unwrap();
    println!("pooled error {:.4} recall {:.3} precision {:.3} F {:.3}", r.error, r.recall, r.precision, r.f_value);
    let nonup = run_strategy(&clip.frames, Strategy::NonUpdate, &cfg, None).unwrap();
    println!("stability: update {:.5} vs non-update {:.5}", stability(&update).unwrap(), stability(&nonup).unwrap());
}
