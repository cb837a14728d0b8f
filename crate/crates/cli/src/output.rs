//! JSON and CSV shapes written by the command line.
//!
//! Field order in these structs is the key order in the output. Floats are
//! written in the shortest form that parses back to the same `f64`.

use std::io::{self, Write};

use ilfs::synth::SynthSpec;
use ilfs::{PhiMode, PlsaModel, RankParams, Ranking};
use ndarray::Array2;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RankingJson {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
    pub r: f64,
    pub spectral_radius: f64,
    pub params: ParamsJson,
}

#[derive(Debug, Serialize)]
pub struct ParamsJson {
    pub bins: usize,
    pub phi_mode: PhiMode,
    pub damping: f64,
    pub em_max_iter: usize,
    pub em_tol: f64,
    pub zero_diagonal: bool,
    pub top_k: Option<usize>,
}

impl RankingJson {
    pub fn new(ranking: &Ranking, params: &RankParams, top_k: Option<usize>) -> Self {
        let order = match top_k {
            Some(k) => ranking.top(k).to_vec(),
            None => ranking.order.clone(),
        };
        Self {
            order,
            scores: ranking.scores.to_vec(),
            r: ranking.r,
            spectral_radius: ranking.spectral_radius,
            params: ParamsJson {
                bins: params.n_tokens,
                phi_mode: params.phi_mode,
                damping: params.damping,
                em_max_iter: params.em.max_iterations,
                em_tol: params.em.rel_tolerance,
                zero_diagonal: params.zero_diagonal,
                top_k,
            },
        }
    }
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

#[derive(Debug, Serialize)]
pub struct ModelDump {
    pub p_z: Vec<f64>,
    /// One row per token, columns `[z1, z2]`.
    pub p_t_given_z: Vec<Vec<f64>>,
    /// One row per feature, columns `[z1, z2]`.
    pub p_z_given_f: Vec<Vec<f64>>,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&PlsaModel> for ModelDump {
    fn from(m: &PlsaModel) -> Self {
        Self {
            p_z: m.p_z.to_vec(),
            p_t_given_z: rows(&m.p_t_given_z),
            p_z_given_f: rows(&m.p_z_given_f),
            trace: m.log_likelihood_trace.clone(),
            iterations: m.iterations_run,
            converged: m.converged,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TruthJson<'a> {
    pub informative: &'a [usize],
    pub label_column: &'a str,
    pub n_samples: usize,
    pub n_informative: usize,
    pub n_noise: usize,
    pub separation: f64,
    pub seed: u64,
    pub generator: &'static str,
}

impl<'a> TruthJson<'a> {
    pub fn new(spec: &SynthSpec, label_column: &'a str, informative: &'a [usize]) -> Self {
        Self {
            informative,
            label_column,
            n_samples: spec.n_samples,
            n_informative: spec.n_informative,
            n_noise: spec.n_noise,
            separation: spec.separation,
            seed: spec.seed,
            generator: "xoshiro256++/splitmix64",
        }
    }
}

/// Dense matrix as CSV, header row of feature names.
pub fn write_matrix_csv(out: &mut impl Write, names: &[String], a: &Array2<f64>) -> io::Result<()> {
    writeln!(out, "{}", names.join(","))?;
    for row in a.outer_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
