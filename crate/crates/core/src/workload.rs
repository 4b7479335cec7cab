//! SNN workloads: the neuron/synapse graph annotated with observed spike times.
//!
//! Spike times are kept as integer microsecond ticks so that ordering is
//! exact; the JSON form uses real milliseconds.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

pub type NeuronId = u32;

/// Microseconds per millisecond; spike ticks are microseconds.
pub const TICKS_PER_MS: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Hidden,
    Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub id: NeuronId,
    pub role: Role,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub src: NeuronId,
    pub dst: NeuronId,
    pub weight: f64,
}

/// A validated SNN workload. Construct through [`SnnWorkload::new`] or a
/// loader so the invariants always hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WorkloadFile", into = "WorkloadFile")]
pub struct SnnWorkload {
    neurons: Vec<Neuron>,
    synapses: Vec<Synapse>,
    spikes: BTreeMap<NeuronId, Vec<u64>>,
    duration_us: u64,
    frame_us: Option<u64>,
}

impl SnnWorkload {
    /// Builds a workload from spike times already expressed in microsecond
    /// ticks. Spike lists are sorted; every other invariant is checked.
    pub fn new(
        neurons: Vec<Neuron>,
        synapses: Vec<Synapse>,
        mut spikes: BTreeMap<NeuronId, Vec<u64>>,
        duration_us: u64,
        frame_us: Option<u64>,
    ) -> Result<Self> {
        for list in spikes.values_mut() {
            list.sort_unstable();
        }
        let w = SnnWorkload {
            neurons,
            synapses,
            spikes,
            duration_us,
            frame_us,
        };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for n in &self.neurons {
            if !ids.insert(n.id) {
                return Err(Error::invalid("workload", format!("duplicate neuron id {}", n.id)));
            }
        }
        let mut pairs = BTreeSet::new();
        for (i, s) in self.synapses.iter().enumerate() {
            for end in [s.src, s.dst] {
                if !ids.contains(&end) {
                    return Err(Error::invalid(
                        "workload",
                        format!("synapse {i} ({}->{}) names missing neuron {end}", s.src, s.dst),
                    ));
                }
            }
            if !s.weight.is_finite() {
                return Err(Error::invalid("workload", format!("synapse {i} has a non-finite weight")));
            }
            if !pairs.insert((s.src, s.dst)) {
                return Err(Error::invalid(
                    "workload",
                    format!("duplicate synapse {}->{} (synapse {i})", s.src, s.dst),
                ));
            }
        }
        for (id, list) in &self.spikes {
            if !ids.contains(id) {
                return Err(Error::invalid("workload", format!("spikes recorded for missing neuron {id}")));
            }
            if list.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::invalid("workload", format!("spike times of neuron {id} are not sorted")));
            }
            if let Some(&last) = list.last() {
                if last > self.duration_us {
                    return Err(Error::invalid(
                        "workload",
                        format!("neuron {id} spikes at {last} us, after the {} us window", self.duration_us),
                    ));
                }
            }
        }
        if self.frame_us == Some(0) {
            return Err(Error::invalid("workload", "frame_ms must be positive"));
        }
        Ok(())
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn spikes(&self) -> &BTreeMap<NeuronId, Vec<u64>> {
        &self.spikes
    }

    /// Spike ticks of one neuron; empty when none were recorded.
    pub fn spikes_of(&self, id: NeuronId) -> &[u64] {
        self.spikes.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn duration_us(&self) -> u64 {
        self.duration_us
    }

    pub fn frame_us(&self) -> Option<u64> {
        self.frame_us
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    /// Number of frames covered by the observation window. Without an
    /// explicit frame length the whole window is one frame.
    pub fn frames(&self) -> Rational64 {
        match self.frame_us {
            Some(f) if self.duration_us > 0 => Rational64::new(self.duration_us as i64, f as i64),
            _ => Rational64::from_integer(1),
        }
    }

    /// Average spikes per frame emitted by a neuron.
    pub fn spikes_per_frame(&self, id: NeuronId) -> Rational64 {
        Rational64::from_integer(self.spikes_of(id).len() as i64) / self.frames()
    }

    pub fn out_degree(&self, id: NeuronId) -> usize {
        self.synapses.iter().filter(|s| s.src == id).count()
    }

    /// Synapses grouped by destination, each group in synapse-list order.
    pub fn inputs_by_neuron(&self) -> HashMap<NeuronId, Vec<usize>> {
        let mut map: HashMap<NeuronId, Vec<usize>> = HashMap::new();
        for (i, s) in self.synapses.iter().enumerate() {
            map.entry(s.dst).or_default().push(i);
        }
        map
    }

    /// Observed firing rate of a neuron in spikes per second.
    pub fn rate_hz(&self, id: NeuronId) -> f64 {
        if self.duration_us == 0 {
            return 0.0;
        }
        self.spikes_of(id).len() as f64 * 1e6 / self.duration_us as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("workload serializes")
    }
}

/// On-disk workload schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadFile {
    #[serde(default)]
    pub neurons: Vec<Neuron>,
    #[serde(default)]
    pub synapses: Vec<Synapse>,
    #[serde(default)]
    pub spikes: BTreeMap<String, Vec<f64>>,
    pub duration_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_ms: Option<f64>,
}

fn ms_to_ticks(ms: f64, what: &str) -> Result<u64> {
    if !ms.is_finite() || ms < 0.0 {
        return Err(Error::invalid("workload", format!("{what} must be a non-negative time, got {ms}")));
    }
    Ok((ms * TICKS_PER_MS).round() as u64)
}

impl TryFrom<WorkloadFile> for SnnWorkload {
    type Error = Error;

    fn try_from(f: WorkloadFile) -> Result<Self> {
        let duration_us = ms_to_ticks(f.duration_ms, "duration_ms")?;
        let frame_us = f.frame_ms.map(|v| ms_to_ticks(v, "frame_ms")).transpose()?;
        let mut spikes = BTreeMap::new();
        for (key, times) in f.spikes {
            let id: NeuronId = key
                .parse()
                .map_err(|_| Error::invalid("workload", format!("spike key `{key}` is not a neuron id")))?;
            let ticks = times
                .iter()
                .map(|&t| ms_to_ticks(t, &format!("spike time of neuron {id}")))
                .collect::<Result<Vec<_>>>()?;
            if ticks.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::invalid("workload", format!("spike times of neuron {id} are not sorted")));
            }
            spikes.insert(id, ticks);
        }
        SnnWorkload::new(f.neurons, f.synapses, spikes, duration_us, frame_us)
    }
}

impl From<SnnWorkload> for WorkloadFile {
    fn from(w: SnnWorkload) -> Self {
        WorkloadFile {
            neurons: w.neurons,
            synapses: w.synapses,
            spikes: w
                .spikes
                .into_iter()
                .map(|(id, t)| (id.to_string(), t.into_iter().map(|v| v as f64 / TICKS_PER_MS).collect()))
                .collect(),
            duration_ms: w.duration_us as f64 / TICKS_PER_MS,
            frame_ms: w.frame_us.map(|v| v as f64 / TICKS_PER_MS),
        }
    }
}

pub fn load_workload(path: &Path) -> Result<SnnWorkload> {
    io::read_json(path)
}

pub fn parse_workload(text: &str) -> Result<SnnWorkload> {
    io::from_json_str(Path::new("<memory>"), text)
}

pub fn save_workload(path: &Path, w: &SnnWorkload) -> Result<()> {
    io::write_json(path, w)
}

/// Average spikes per frame on every synapse. Each presynaptic spike crosses
/// each outgoing synapse once.
pub fn channel_spike_counts(w: &SnnWorkload) -> BTreeMap<(NeuronId, NeuronId), Rational64> {
    w.synapses
        .iter()
        .map(|s| ((s.src, s.dst), w.spikes_per_frame(s.src)))
        .collect()
}

// ---------------------------------------------------------------------------
// Integrate-and-fire neuron shared by the generator and the converter.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reset {
    /// Membrane returns to zero after a spike.
    Zero,
    /// Threshold is subtracted, keeping the residual charge.
    Subtract,
}

/// Non-leaky integrate-and-fire neuron.
#[derive(Clone, Copy, Debug)]
pub struct IfNeuron {
    pub potential: f64,
    pub threshold: f64,
    pub reset: Reset,
}

impl IfNeuron {
    pub fn new(reset: Reset) -> Self {
        IfNeuron {
            potential: 0.0,
            threshold: 1.0,
            reset,
        }
    }

    /// Integrates `input` and reports whether the neuron fired.
    pub fn step(&mut self, input: f64) -> bool {
        self.potential += input;
        if self.potential >= self.threshold {
            match self.reset {
                Reset::Zero => self.potential = 0.0,
                Reset::Subtract => self.potential -= self.threshold,
            }
            true
        } else {
            false
        }
    }
}

// ---------------------------------------------------------------------------
// Synthetic Poisson workloads.

#[derive(Clone, Debug)]
pub struct PoissonConfig {
    /// Layer sizes, input layer first.
    pub topology: Vec<usize>,
    /// Mean input firing rate in spikes per second.
    pub rate_hz: f64,
    pub duration_ms: f64,
    pub seed: u64,
}

/// Generates a fully connected feed-forward workload. Input neurons carry
/// Poisson spike trains; downstream neurons are IF neurons driven by their
/// presynaptic spikes with weights drawn uniformly from `[0, 2/fanin)`.
pub fn generate_poisson_workload(cfg: &PoissonConfig) -> Result<SnnWorkload> {
    let n_neurons: usize = cfg.topology.iter().sum();
    if cfg.topology.is_empty() || cfg.topology.contains(&0) || n_neurons == 0 {
        return Err(Error::invalid("topology", "every layer needs at least one neuron"));
    }
    if !cfg.rate_hz.is_finite() || cfg.rate_hz < 0.0 {
        return Err(Error::invalid("rate", "rate must be a finite non-negative number"));
    }
    if !cfg.duration_ms.is_finite() || cfg.duration_ms <= 0.0 {
        return Err(Error::invalid("duration", "duration must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let duration_us = (cfg.duration_ms * TICKS_PER_MS).round() as u64;
    let last = cfg.topology.len() - 1;

    let mut layers: Vec<Vec<NeuronId>> = Vec::new();
    let mut neurons = Vec::with_capacity(n_neurons);
    let mut next: NeuronId = 0;
    for (l, &size) in cfg.topology.iter().enumerate() {
        let role = if l == 0 {
            Role::Input
        } else if l == last {
            Role::Output
        } else {
            Role::Hidden
        };
        let ids: Vec<NeuronId> = (next..next + size as NeuronId).collect();
        next += size as NeuronId;
        neurons.extend(ids.iter().map(|&id| Neuron { id, role }));
        layers.push(ids);
    }

    let mut spikes: BTreeMap<NeuronId, Vec<u64>> = BTreeMap::new();
    for &id in &layers[0] {
        let mut train = Vec::new();
        if cfg.rate_hz > 0.0 {
            let isi = Exp::new(cfg.rate_hz / 1e6).expect("positive rate");
            let mut t = isi.sample(&mut rng);
            while t <= duration_us as f64 {
                train.push(t as u64);
                t += isi.sample(&mut rng);
            }
        }
        spikes.insert(id, train);
    }

    let mut synapses = Vec::new();
    for l in 1..layers.len() {
        let fanin = layers[l - 1].len();
        let bound = 2.0 / fanin as f64;
        for &dst in &layers[l] {
            for &src in &layers[l - 1] {
                synapses.push(Synapse {
                    src,
                    dst,
                    weight: rng.random_range(0.0..bound),
                });
            }
        }
        // Downstream trains by event-driven accumulation of presynaptic spikes.
        let mut events: Vec<(u64, NeuronId)> = layers[l - 1]
            .iter()
            .flat_map(|&src| spikes[&src].iter().map(move |&t| (t, src)))
            .collect();
        events.sort_unstable();
        let layer_syn = &synapses[synapses.len() - fanin * layers[l].len()..];
        let weight_of: HashMap<(NeuronId, NeuronId), f64> =
            layer_syn.iter().map(|s| ((s.src, s.dst), s.weight)).collect();
        for &dst in &layers[l] {
            let mut neuron = IfNeuron::new(Reset::Zero);
            let mut train = Vec::new();
            for &(t, src) in &events {
                if neuron.step(weight_of[&(src, dst)]) {
                    train.push(t);
                }
            }
            spikes.insert(dst, train);
        }
    }

    SnnWorkload::new(neurons, synapses, spikes, duration_us, None)
}

// ---------------------------------------------------------------------------
// ANN to SNN conversion.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

/// A fully connected network. `weights[l][j][i]` connects neuron `i` of
/// layer `l` to neuron `j` of layer `l + 1`; `biases[l][j]` belongs to that
/// same destination neuron.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReluMlp {
    pub layers: Vec<usize>,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    #[serde(default)]
    pub activations: Vec<Activation>,
}

impl ReluMlp {
    pub fn new(layers: Vec<usize>, weights: Vec<Vec<Vec<f64>>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        let activations = vec![Activation::Relu; layers.len().saturating_sub(1)];
        let net = ReluMlp {
            layers,
            weights,
            biases,
            activations,
        };
        net.check_shape()?;
        Ok(net)
    }

    fn check_shape(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(Error::invalid("mlp", "need at least an input and an output layer"));
        }
        let links = self.layers.len() - 1;
        if self.weights.len() != links || self.biases.len() != links {
            return Err(Error::invalid("mlp", format!("expected {links} weight matrices and bias vectors")));
        }
        if !self.activations.is_empty() && self.activations.len() != links {
            return Err(Error::invalid("mlp", format!("expected {links} activations")));
        }
        for l in 0..links {
            let (fan_in, fan_out) = (self.layers[l], self.layers[l + 1]);
            if self.weights[l].len() != fan_out || self.weights[l].iter().any(|row| row.len() != fan_in) {
                return Err(Error::invalid(
                    "mlp",
                    format!("weight matrix {l} must be {fan_out}x{fan_in}"),
                ));
            }
            if self.biases[l].len() != fan_out {
                return Err(Error::invalid("mlp", format!("bias vector {l} must have {fan_out} entries")));
            }
        }
        Ok(())
    }

    fn check_relu(&self) -> Result<()> {
        for (layer, act) in self.activations.iter().enumerate() {
            if *act != Activation::Relu {
                return Err(Error::UnsupportedActivation {
                    layer,
                    activation: format!("{act:?}").to_lowercase(),
                });
            }
        }
        Ok(())
    }

    /// Analog forward pass; returns the activations of every layer.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_shape()?;
        if input.len() != self.layers[0] {
            return Err(Error::DimensionMismatch {
                expected: self.layers[0],
                got: input.len(),
            });
        }
        let mut acts = vec![input.to_vec()];
        for l in 0..self.weights.len() {
            let prev = &acts[l];
            let next = self.weights[l]
                .iter()
                .zip(&self.biases[l])
                .map(|(row, b)| {
                    let z: f64 = row.iter().zip(prev).map(|(w, x)| w * x).sum::<f64>() + b;
                    z.max(0.0)
                })
                .collect();
            acts.push(next);
        }
        Ok(acts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Rate,
}

/// Simulation step of the rate-coded conversion, in microseconds.
pub const CONVERSION_STEP_US: u64 = 100;

/// Converts a ReLU network into an IF-neuron workload for one input vector.
///
/// Input activations are clamped to `[0, 1]` and rate coded as regular
/// spike trains. Biases enter as a constant input current. Inputs and biases
/// share one gain chosen so that no neuron needs more than one spike per
/// step; ReLU is positively homogeneous, so every layer's spike rate stays
/// proportional to its analog activation.
pub fn convert_relu_mlp(net: &ReluMlp, input: &[f64], encoding: Encoding, sim_window_ms: f64) -> Result<SnnWorkload> {
    net.check_shape()?;
    net.check_relu()?;
    let Encoding::Rate = encoding;
    if !sim_window_ms.is_finite() || sim_window_ms <= 0.0 {
        return Err(Error::invalid("sim_window", "simulation window must be positive"));
    }
    let clamped: Vec<f64> = input.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let acts = net.forward(&clamped)?;
    let peak = acts.iter().flatten().cloned().fold(1.0_f64, f64::max);
    let gain = 1.0 / peak;

    let mut offsets = vec![0u32];
    for &size in &net.layers {
        offsets.push(offsets.last().unwrap() + size as u32);
    }
    let last = net.layers.len() - 1;
    let mut neurons = Vec::new();
    for (l, &size) in net.layers.iter().enumerate() {
        let role = match l {
            0 => Role::Input,
            _ if l == last => Role::Output,
            _ => Role::Hidden,
        };
        neurons.extend((0..size as u32).map(|i| Neuron { id: offsets[l] + i, role }));
    }
    let mut synapses = Vec::new();
    for (l, matrix) in net.weights.iter().enumerate() {
        for (j, row) in matrix.iter().enumerate() {
            for (i, &weight) in row.iter().enumerate() {
                synapses.push(Synapse {
                    src: offsets[l] + i as u32,
                    dst: offsets[l + 1] + j as u32,
                    weight,
                });
            }
        }
    }

    let duration_us = (sim_window_ms * TICKS_PER_MS).round() as u64;
    let steps = duration_us / CONVERSION_STEP_US;
    let mut state: Vec<Vec<IfNeuron>> = net
        .layers
        .iter()
        .map(|&n| vec![IfNeuron::new(Reset::Subtract); n])
        .collect();
    let mut trains: Vec<Vec<Vec<u64>>> = net.layers.iter().map(|&n| vec![Vec::new(); n]).collect();
    let mut fired: Vec<Vec<bool>> = net.layers.iter().map(|&n| vec![false; n]).collect();
    for step in 0..steps {
        let t = step * CONVERSION_STEP_US;
        for (i, x) in clamped.iter().enumerate() {
            fired[0][i] = state[0][i].step(x * gain);
        }
        for l in 0..net.weights.len() {
            for j in 0..net.layers[l + 1] {
                let drive: f64 = net.weights[l][j]
                    .iter()
                    .zip(&fired[l])
                    .filter(|(_, &f)| f)
                    .map(|(w, _)| w)
                    .sum::<f64>()
                    + net.biases[l][j] * gain;
                fired[l + 1][j] = state[l + 1][j].step(drive);
            }
        }
        for (l, layer) in fired.iter().enumerate() {
            for (i, &f) in layer.iter().enumerate() {
                if f {
                    trains[l][i].push(t);
                }
            }
        }
    }

    let mut spikes = BTreeMap::new();
    for (l, layer) in trains.into_iter().enumerate() {
        for (i, train) in layer.into_iter().enumerate() {
            spikes.insert(offsets[l] + i as u32, train);
        }
    }
    SnnWorkload::new(neurons, synapses, spikes, duration_us, None)
}

/// Firing rates (spikes per second) of the output-role neurons, by id.
pub fn output_rates(w: &SnnWorkload) -> Vec<(NeuronId, f64)> {
    w.neurons()
        .iter()
        .filter(|n| n.role == Role::Output)
        .map(|n| (n.id, w.rate_hz(n.id)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> SnnWorkload {
        let neurons = (0..3)
            .map(|id| Neuron {
                id,
                role: if id == 0 { Role::Input } else { Role::Hidden },
            })
            .collect();
        let synapses = vec![
            Synapse { src: 0, dst: 1, weight: 0.5 },
            Synapse { src: 1, dst: 2, weight: 0.25 },
        ];
        let spikes = BTreeMap::from([(0, vec![1000, 5000, 9000]), (1, vec![5000])]);
        SnnWorkload::new(neurons, synapses, spikes, 10_000, None).unwrap()
    }

    #[test]
    fn empty_workload_is_valid() {
        let w = parse_workload(r#"{"neurons":[],"synapses":[],"spikes":{},"duration_ms":0}"#).unwrap();
        assert!(w.is_empty());
        assert!(channel_spike_counts(&w).is_empty());
    }

    #[test]
    fn dangling_synapse_is_rejected() {
        let text = r#"{"neurons":[{"id":1,"role":"input"}],
            "synapses":[{"src":1,"dst":99,"weight":1.0}],"spikes":{},"duration_ms":10}"#;
        let err = parse_workload(text).unwrap_err();
        assert!(err.to_string().contains("99"), "{err}");
    }

    #[test]
    fn parse_errors_carry_a_locus() {
        let err = parse_workload("{\n\"neurons\": [\n{\"id\": \"x\"}]}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_synapse_and_late_spike_are_rejected() {
        let n = r#"[{"id":0,"role":"input"},{"id":1,"role":"output"}]"#;
        let dup = format!(
            r#"{{"neurons":{n},"synapses":[{{"src":0,"dst":1,"weight":1}},{{"src":0,"dst":1,"weight":2}}],"duration_ms":5}}"#
        );
        assert!(parse_workload(&dup).is_err());
        let late = format!(r#"{{"neurons":{n},"spikes":{{"0":[1.0,7.0]}},"duration_ms":5}}"#);
        assert!(parse_workload(&late).is_err());
        let unsorted = format!(r#"{{"neurons":{n},"spikes":{{"0":[3.0,1.0]}},"duration_ms":5}}"#);
        assert!(parse_workload(&unsorted).is_err());
    }

    #[test]
    fn writer_round_trip_preserves_the_chain() {
        let w = chain();
        let back = parse_workload(&w.to_json()).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.neurons().len(), 3);
        assert_eq!(back.synapses().len(), 2);
    }

    #[test]
    fn spike_counts_follow_presynaptic_trains() {
        let counts = channel_spike_counts(&chain());
        assert_eq!(counts[&(0, 1)], Rational64::from_integer(3));
        assert_eq!(counts[&(1, 2)], Rational64::from_integer(1));

        // 5 spikes fanned out over 3 synapses: every synapse carries all 5.
        let neurons = (0..4).map(|id| Neuron { id, role: Role::Hidden }).collect();
        let synapses = (1..4).map(|dst| Synapse { src: 0, dst, weight: 1.0 }).collect();
        let spikes = BTreeMap::from([(0, vec![1, 2, 3, 4, 5])]);
        let w = SnnWorkload::new(neurons, synapses, spikes, 10, None).unwrap();
        let counts = channel_spike_counts(&w);
        assert!(counts.values().all(|&c| c == Rational64::from_integer(5)));
    }

    #[test]
    fn frames_divide_counts() {
        let neurons = vec![Neuron { id: 0, role: Role::Input }, Neuron { id: 1, role: Role::Output }];
        let synapses = vec![Synapse { src: 0, dst: 1, weight: 1.0 }];
        let spikes = BTreeMap::from([(0, vec![0, 100, 200])]);
        let w = SnnWorkload::new(neurons, synapses, spikes, 1000, Some(500)).unwrap();
        assert_eq!(w.frames(), Rational64::from_integer(2));
        assert_eq!(channel_spike_counts(&w)[&(0, 1)], Rational64::new(3, 2));
    }

    #[test]
    fn zero_rate_generates_silence_and_is_deterministic() {
        let cfg = PoissonConfig {
            topology: vec![4, 3],
            rate_hz: 0.0,
            duration_ms: 100.0,
            seed: 3,
        };
        let w = generate_poisson_workload(&cfg).unwrap();
        assert!(w.spikes().values().all(Vec::is_empty));

        let cfg = PoissonConfig { rate_hz: 80.0, ..cfg };
        let a = generate_poisson_workload(&cfg).unwrap();
        let b = generate_poisson_workload(&cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn bad_generator_arguments() {
        let base = PoissonConfig {
            topology: vec![2],
            rate_hz: 1.0,
            duration_ms: 1.0,
            seed: 0,
        };
        assert!(generate_poisson_workload(&PoissonConfig { topology: vec![], ..base.clone() }).is_err());
        assert!(generate_poisson_workload(&PoissonConfig { rate_hz: -1.0, ..base.clone() }).is_err());
        assert!(generate_poisson_workload(&PoissonConfig { duration_ms: 0.0, ..base }).is_err());
    }

    #[test]
    fn if_neuron_reset_modes() {
        let mut zero = IfNeuron::new(Reset::Zero);
        let mut sub = IfNeuron::new(Reset::Subtract);
        let z: usize = (0..10).filter(|_| zero.step(0.45)).count();
        let s: usize = (0..10).filter(|_| sub.step(0.45)).count();
        assert_eq!(z, 3); // fires every third step
        assert_eq!(s, 4); // floor(4.5)
    }

    #[test]
    fn non_relu_layers_are_rejected() {
        let mut net = ReluMlp::new(vec![1, 1], vec![vec![vec![1.0]]], vec![vec![0.0]]).unwrap();
        net.activations = vec![Activation::Tanh];
        let err = convert_relu_mlp(&net, &[1.0], Encoding::Rate, 100.0).unwrap_err();
        assert!(matches!(err, Error::UnsupportedActivation { layer: 0, .. }));
    }

    #[test]
    fn mismatched_weight_shapes_are_rejected() {
        assert!(ReluMlp::new(vec![2, 1], vec![vec![vec![1.0]]], vec![vec![0.0]]).is_err());
    }

    #[test]
    fn zero_weights_give_no_output_spikes() {
        let net = ReluMlp::new(vec![2, 2], vec![vec![vec![0.0; 2]; 2]], vec![vec![0.0; 2]]).unwrap();
        let w = convert_relu_mlp(&net, &[1.0, 1.0], Encoding::Rate, 100.0).unwrap();
        assert!(output_rates(&w).iter().all(|&(_, r)| r == 0.0));
    }

    #[test]
    fn negative_drive_is_clamped_to_silence() {
        let net = ReluMlp::new(vec![2, 2], vec![vec![vec![0.5, 0.2], vec![-0.6, 0.1]]], vec![vec![0.0; 2]]).unwrap();
        let analog = net.forward(&[1.0, 1.0]).unwrap();
        assert_eq!(analog[1][1], 0.0);
        let w = convert_relu_mlp(&net, &[1.0, 1.0], Encoding::Rate, 1000.0).unwrap();
        let rates = output_rates(&w);
        assert_eq!(rates[1].1, 0.0);
        assert!(rates[0].1 > 0.0);
    }

    #[test]
    fn bias_acts_as_constant_current() {
        let net = ReluMlp::new(vec![1, 1], vec![vec![vec![0.0]]], vec![vec![0.25]]).unwrap();
        let w = convert_relu_mlp(&net, &[0.0], Encoding::Rate, 1000.0).unwrap();
        // gain 1: a quarter of the 10_000 steps fire.
        assert_eq!(w.spikes_of(1).len(), 2500);
    }
}
