//! On-disk formats: network checkpoints, mixture specs, CSV tables and JSON
//! reports. Floats are written in shortest round-trip form so files are
//! byte-stable across runs with the same seed.

use std::fs;
use std::io::Write;
use std::path::Path;

use drs_core::drs::SampleRecord;
use drs_core::eval::{Histogram, SweepPoint, TracePoint};
use drs_core::nn::{Layer, LayerSpec, Network};
use drs_core::target::MixtureSpec;
use drs_core::train::HistoryEntry;
use drs_core::Point;
use serde::{Deserialize, Serialize};

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub spec: Vec<LayerSpec>,
    pub layers: Vec<LayerParams>,
}

/// `w` is `output_dim` rows of `input_dim` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerParams {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl Checkpoint {
    pub fn from_network(net: &Network) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| LayerParams {
                w: l.weights.chunks(l.spec.input_dim).map(<[f64]>::to_vec).collect(),
                b: l.bias.clone(),
            })
            .collect();
        Self {
            spec: net.spec(),
            layers,
        }
    }

    pub fn into_network(self) -> Result<Network, LabError> {
        if self.spec.len() != self.layers.len() {
            return Err(LabError::Checkpoint(format!(
                "{} layer specs but {} parameter blocks",
                self.spec.len(),
                self.layers.len()
            )));
        }
        let mut layers = Vec::with_capacity(self.spec.len());
        for (i, (spec, params)) in self.spec.into_iter().zip(self.layers).enumerate() {
            if params.w.len() != spec.output_dim || params.w.iter().any(|r| r.len() != spec.input_dim) {
                return Err(LabError::Checkpoint(format!(
                    "layer {i}: weight matrix is not {}x{}",
                    spec.output_dim, spec.input_dim
                )));
            }
            layers.push(Layer {
                spec,
                weights: params.w.concat(),
                bias: params.b,
            });
        }
        Network::from_layers(layers).map_err(|e| LabError::Checkpoint(e.to_string()))
    }
}

pub fn save_network(net: &Network, path: &Path) -> Result<(), LabError> {
    write_json(path, &Checkpoint::from_network(net))
}

pub fn load_network(path: &Path) -> Result<Network, LabError> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| LabError::Checkpoint(e.to_string()))?;
    ckpt.into_network()
}

pub fn save_mixture(spec: &MixtureSpec, path: &Path) -> Result<(), LabError> {
    write_json(path, spec)
}

pub fn load_mixture(path: &Path) -> Result<MixtureSpec, LabError> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let spec: MixtureSpec = serde_json::from_str(&text)?;
    spec.validate()?;
    Ok(spec)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), LabError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| LabError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, LabError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    Ok(csv::Writer::from_path(path)?)
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<(), LabError> {
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn write_history_csv(history: &[HistoryEntry], path: &Path) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record(["step", "d_loss", "g_loss"])?;
    for h in history {
        w.write_record([h.step.to_string(), h.d_loss.to_string(), h.g_loss.to_string()])?;
    }
    finish(w, path)
}

pub const SAMPLE_LOG_HEADER: [&str; 11] = [
    "x",
    "y",
    "z1",
    "z2",
    "logit",
    "f_value",
    "acceptance_prob",
    "psi",
    "accepted",
    "batch_index",
    "gamma_used",
];

pub fn write_sample_log(records: &[SampleRecord<Point>], path: &Path) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record(SAMPLE_LOG_HEADER)?;
    for r in records {
        w.write_record([
            r.point[0].to_string(),
            r.point[1].to_string(),
            r.latent[0].to_string(),
            r.latent[1].to_string(),
            r.logit.to_string(),
            r.f_value.to_string(),
            r.acceptance_prob.to_string(),
            r.psi.to_string(),
            u8::from(r.accepted).to_string(),
            r.batch_index.to_string(),
            r.gamma.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn read_sample_log(path: &Path) -> Result<Vec<SampleRecord<Point>>, LabError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64, LabError> {
            row[i]
                .parse::<f64>()
                .map_err(|e| LabError::Checkpoint(format!("bad sample-log field {i}: {e}")))
        };
        out.push(SampleRecord {
            point: [num(0)?, num(1)?],
            latent: [num(2)?, num(3)?],
            logit: num(4)?,
            f_value: num(5)?,
            acceptance_prob: num(6)?,
            psi: num(7)?,
            accepted: &row[8] == "1",
            batch_index: num(9)? as usize,
            gamma: num(10)?,
        });
    }
    Ok(out)
}

pub fn write_points_csv(points: &[Point], path: &Path) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record(["x", "y"])?;
    for p in points {
        w.write_record([p[0].to_string(), p[1].to_string()])?;
    }
    finish(w, path)
}

pub fn write_sweep_csv(points: &[SweepPoint], path: &Path) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record(["seed", "percentile", "acceptance_rate", "hq_fraction", "accepted", "draws"])?;
    for p in points {
        w.write_record([
            p.seed.to_string(),
            p.percentile.to_string(),
            p.acceptance_rate.to_string(),
            p.hq_fraction.to_string(),
            p.accepted.to_string(),
            p.draws.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_scatter_csv(pairs: &[(f64, f64)], path: &Path) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record(["acceptance_prob", "distance"])?;
    for (a, d) in pairs {
        w.write_record([a.to_string(), d.to_string()])?;
    }
    finish(w, path)
}

/// One block per named histogram; under/overflow are written as extra rows
/// with infinite edges.
pub fn write_histograms_csv(hists: &[(&str, &Histogram)], path: &Path) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record(["quantity", "bin_lo", "bin_hi", "count"])?;
    for (name, h) in hists {
        let first = h.edges[0];
        let last = h.edges[h.edges.len() - 1];
        w.write_record([name.to_string(), "-inf".into(), first.to_string(), h.underflow.to_string()])?;
        for (i, c) in h.counts.iter().enumerate() {
            w.write_record([
                name.to_string(),
                h.edges[i].to_string(),
                h.edges[i + 1].to_string(),
                c.to_string(),
            ])?;
        }
        w.write_record([name.to_string(), last.to_string(), "inf".into(), h.overflow.to_string()])?;
    }
    finish(w, path)
}

pub fn write_trace_csv(trace: &[TracePoint], path: &Path) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record(["alpha", "z1", "z2", "x", "y", "logit", "acceptance_prob"])?;
    for t in trace {
        w.write_record([
            t.alpha.to_string(),
            t.latent[0].to_string(),
            t.latent[1].to_string(),
            t.point[0].to_string(),
            t.point[1].to_string(),
            t.logit.to_string(),
            t.acceptance_prob.to_string(),
        ])?;
    }
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use drs_core::nn::mlp_spec;

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let net = Network::init_seeded(&mlp_spec(2, &[5, 3], 1), 9).unwrap();
        let path = dir.path().join("d.json");
        save_network(&net, &path).unwrap();
        assert_eq!(load_network(&path).unwrap(), net);
    }

    #[test]
    fn checkpoint_shape_mismatch_is_rejected() {
        let net = Network::init_seeded(&mlp_spec(2, &[4], 1), 1).unwrap();
        let mut ck = Checkpoint::from_network(&net);
        ck.layers[0].w[1].pop();
        assert!(matches!(ck.into_network(), Err(LabError::Checkpoint(_))));
        let mut ck = Checkpoint::from_network(&net);
        ck.layers.pop();
        assert!(ck.into_network().is_err());
    }

    #[test]
    fn checkpoint_layout() {
        let net = Network::init_seeded(&mlp_spec(3, &[2], 1), 4).unwrap();
        let v = serde_json::to_value(Checkpoint::from_network(&net)).unwrap();
        assert_eq!(v["layers"][0]["w"].as_array().unwrap().len(), 2);
        assert_eq!(v["layers"][0]["w"][0].as_array().unwrap().len(), 3);
        assert_eq!(v["spec"][0]["activation"], "relu");
        assert_eq!(v["spec"][1]["activation"], "identity");
    }

    #[test]
    fn mixture_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = drs_core::target::benchmark_mixture();
        let path = dir.path().join("m.json");
        save_mixture(&spec, &path).unwrap();
        assert_eq!(load_mixture(&path).unwrap(), spec);
    }

    #[test]
    fn sample_log_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![
            SampleRecord {
                point: [0.1, -2.0 / 3.0],
                latent: [1e-300, 5.5],
                logit: -0.25,
                f_value: 1.0 / 7.0,
                acceptance_prob: 0.53,
                psi: 0.999,
                accepted: true,
                batch_index: 3,
                gamma: -1.5,
            };
            2
        ];
        let path = dir.path().join("s.csv");
        write_sample_log(&recs, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,z1,z2,logit,f_value,acceptance_prob,psi,accepted,batch_index,gamma_used\n"));
        assert_eq!(read_sample_log(&path).unwrap(), recs);
    }
}
