//! Casebook integrity: every listed generator must be a symmetry of its row.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::casebook::{casebook, CaseInstance, CaseRecord, Group};
use crate::error::Result;
use crate::invariance::{verify_symmetry_with, Verdict, VerifyOptions};
use crate::symexpr::SamplerConfig;

#[derive(Clone, Debug)]
pub struct SelfTestOptions {
    pub ns: Vec<usize>,
    pub draws: usize,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub prolongation: bool,
    /// Restrict to these case ids (all when empty).
    pub only: Vec<String>,
}

impl Default for SelfTestOptions {
    fn default() -> Self {
        SelfTestOptions {
            ns: vec![1, 2, 3],
            draws: 3,
            samples: 200,
            tol: 1e-9,
            seed: 2024,
            prolongation: false,
            only: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorCheck {
    pub case: String,
    pub n: usize,
    pub draw: usize,
    pub f: String,
    pub generator: String,
    pub verdict: Verdict,
    pub max_residual: f64,
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfTestReport {
    pub checks: Vec<GeneratorCheck>,
}

impl SelfTestReport {
    pub fn failures(&self) -> Vec<&GeneratorCheck> {
        self.checks.iter().filter(|c| c.verdict != Verdict::Pass).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Seed for one (record, n) stream, independent of iteration order.
pub fn case_seed(base: u64, id: &str, n: usize) -> u64 {
    let mut h: u64 = base ^ 0x9e37_79b9_7f4a_7c15;
    for b in id.bytes().chain([n as u8]) {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Instances of a record: `draws` parameter sets times every f witness.
pub fn instances(rec: &CaseRecord, n: usize, draws: usize, seed: u64) -> Result<Vec<(usize, CaseInstance)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, &rec.id, n));
    let draws = if rec.free_params().next().is_none() { 1 } else { draws };
    let mut out = Vec::new();
    for d in 0..draws {
        let params = rec.draw(n, &mut rng)?;
        for w in 0..rec.f_witness_texts().len() {
            out.push((d, rec.instantiate(n, &params, w)?));
        }
    }
    Ok(out)
}

pub fn check_instance(inst: &CaseInstance, draw: usize, opts: &SelfTestOptions) -> Vec<GeneratorCheck> {
    let cfg = SamplerConfig::new(inst.n, opts.seed).with_samples(opts.samples);
    let vopts = VerifyOptions { prolongation: opts.prolongation, prolongation_samples: 100 };
    inst.all_generators()
        .iter()
        .map(|q| {
            let r = verify_symmetry_with(&inst.f, q, &cfg, opts.tol, vopts);
            GeneratorCheck {
                case: inst.id.clone(),
                n: inst.n,
                draw,
                f: inst.f.to_string(),
                generator: q.label(),
                verdict: r.verdict,
                max_residual: r.max_residual(),
                diagnostics: r.diagnostics,
            }
        })
        .collect()
}

/// Verifies every generator of every record over random admissible draws.
pub fn casebook_selftest(opts: &SelfTestOptions) -> Result<SelfTestReport> {
    let jobs: Vec<(&CaseRecord, usize)> = casebook()
        .iter()
        .filter(|r| opts.only.is_empty() || opts.only.contains(&r.id))
        .flat_map(|r| opts.ns.iter().map(move |&n| (r, n)))
        .collect();
    let per_job: Vec<Result<Vec<GeneratorCheck>>> = jobs
        .par_iter()
        .map(|(rec, n)| {
            let draws = if rec.group == Group::Table1 { opts.draws.max(1) } else { opts.draws };
            let mut out = Vec::new();
            for (d, inst) in instances(rec, *n, draws, opts.seed)? {
                out.extend(check_instance(&inst, d, opts));
            }
            Ok(out)
        })
        .collect();
    let mut checks = Vec::new();
    for r in per_job {
        checks.extend(r?);
    }
    Ok(SelfTestReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_selftest() {
        let opts = SelfTestOptions { ns: vec![1, 2], draws: 1, samples: 40, ..Default::default() };
        let r = casebook_selftest(&opts).unwrap();
        let fails: Vec<String> = r
            .failures()
            .iter()
            .map(|c| format!("{} n={} {} on {}: {:?} {:e} {:?}", c.case, c.n, c.generator, c.f, c.verdict, c.max_residual, c.diagnostics))
            .collect();
        assert!(fails.is_empty(), "{}", fails.join("\n"));
    }
}
