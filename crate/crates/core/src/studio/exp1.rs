use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::substream_seed;
use crate::entropy::{pae_pixels, EntropyParams};
use crate::error::{invalid, Result};
use crate::noise::{add_noise_step, NoiseSpec};
use crate::raster::{rasterize, ChartDims};
use crate::series::{generate_base, BaseFunctionKind};
use crate::stats::{ols_fit, OlsFit};

/// Noise-step counts used when none are given. The range stays below the
/// point where PAE starts to saturate.
pub const DEFAULT_EXP1_LEVELS: [usize; 14] = [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120, 130];
pub const DEFAULT_EXP1_REPLICATES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exp1Sample {
    pub level: usize,
    pub replicate: usize,
    pub pae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp1Function {
    pub base: BaseFunctionKind,
    pub clean_pae: f64,
    /// PAE regressed on noise level.
    pub fit: OlsFit,
    pub samples: Vec<Exp1Sample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp1Report {
    pub dims: ChartDims,
    pub params: EntropyParams,
    pub levels: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub functions: Vec<Exp1Function>,
}

/// For each general base function, adds `level` noise steps to the clean
/// chart (`replicates` independent draws per level) and regresses PAE on the
/// level.
pub fn run_experiment1(
    levels: &[usize],
    replicates: usize,
    dims: ChartDims,
    params: EntropyParams,
    seed: u64,
) -> Result<Exp1Report> {
    let distinct: std::collections::BTreeSet<_> = levels.iter().collect();
    if distinct.len() < 5 {
        return Err(invalid(format!(
            "need at least 5 distinct noise levels, got {}",
            distinct.len()
        )));
    }
    if replicates < 3 {
        return Err(invalid(format!("need at least 3 replicates, got {replicates}")));
    }

    let functions = BaseFunctionKind::GENERAL
        .iter()
        .enumerate()
        .map(|(fi, &base)| {
            let series = generate_base(base, dims.width, seed)?;
            let clean = rasterize(&series, dims)?;
            let clean_pae = pae_pixels(&clean, &params)?.value_or_nan();
            let jobs: Vec<(usize, usize, usize)> = levels
                .iter()
                .enumerate()
                .flat_map(|(li, &level)| (0..replicates).map(move |rep| (li, level, rep)))
                .collect();
            let samples = jobs
                .into_par_iter()
                .map(|(li, level, rep)| {
                    let s = substream_seed(seed, &[fi as u64, li as u64, rep as u64]);
                    let spec = NoiseSpec::for_series(&series, s)?;
                    let mut rng = spec.rng();
                    let mut ps = clean.clone();
                    for _ in 0..level {
                        ps = add_noise_step(&ps, &spec, &mut rng);
                    }
                    Ok(pae_pixels(&ps, &params)?.value.map(|pae| Exp1Sample {
                        level,
                        replicate: rep,
                        pae,
                    }))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect::<Vec<_>>();
            let x: Vec<f64> = samples.iter().map(|s| s.level as f64).collect();
            let y: Vec<f64> = samples.iter().map(|s| s.pae).collect();
            Ok(Exp1Function {
                base,
                clean_pae,
                fit: ols_fit(&x, &y)?,
                samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Exp1Report {
        dims,
        params,
        levels: levels.to_vec(),
        replicates,
        seed,
        functions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::pae;

    fn small() -> Exp1Report {
        run_experiment1(&[0, 10, 20, 30, 40], 3, ChartDims::default(), EntropyParams::default(), 3)
            .unwrap()
    }

    #[test]
    fn four_functions_in_order() {
        let r = small();
        let bases: Vec<_> = r.functions.iter().map(|f| f.base).collect();
        assert_eq!(bases, BaseFunctionKind::GENERAL);
        assert!(r.functions.iter().all(|f| f.samples.len() == 15));
    }

    #[test]
    fn zero_level_is_clean_pae() {
        let r = small();
        for f in &r.functions {
            let s = generate_base(f.base, 300, 0).unwrap();
            let clean = pae(&s, ChartDims::default(), &EntropyParams::default()).unwrap();
            for sample in f.samples.iter().filter(|s| s.level == 0) {
                assert_eq!(sample.pae, clean.value.unwrap());
            }
            assert_eq!(f.clean_pae, clean.value.unwrap());
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(small(), small());
    }

    #[test]
    fn rejects_small_designs() {
        let d = ChartDims::default();
        let p = EntropyParams::default();
        assert!(run_experiment1(&[0, 1, 2, 3], 3, d, p, 0).is_err());
        assert!(run_experiment1(&[0, 1, 2, 3, 3, 3], 3, d, p, 0).is_err());
        assert!(run_experiment1(&[0, 1, 2, 3, 4], 2, d, p, 0).is_err());
    }
}
