//! Experiment harness: the noise/PAE regression, the (m, r) calibration
//! sweep, stimulus generation for the perception experiments, and the
//! smoothing and aspect-ratio advisors.

mod advisors;
mod calibrate;
mod exp1;
mod stimuli;

pub use advisors::{aspect_sweep, smooth_to_pae, AspectRow, SmoothResult};
pub use calibrate::{calibrate_params, CalibrationConfig, CalibrationReport, CalibrationRow};
pub use exp1::{run_experiment1, Exp1Function, Exp1Report, Exp1Sample, DEFAULT_EXP1_LEVELS, DEFAULT_EXP1_REPLICATES};
pub use stimuli::{
    generate_diff_grid, generate_diff_pair, generate_glance_sweep, generate_lineup_set,
    generate_shape_trials, AnswerKey, Condition, Construction, Experiment, GenConfig, ImageRef,
    LineupSource, StimulusChart, StimulusSet, Trial, TrialManifest, DIFF_DELTAS, DIFF_INITIAL_PAES,
    GLANCE_DELTAS, GLANCE_MS, LINEUP_LEVELS, MANIFEST_SCHEMA_VERSION, SHAPE_LEVELS, SHAPE_PER_CELL,
};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed for an independent substream identified by `path` under `master`.
/// Each path component selects a ChaCha stream, so sibling substreams never
/// share key material with each other or with the master.
pub fn substream_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |seed, &p| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(p.wrapping_add(1));
        rng.next_u64()
    })
}
