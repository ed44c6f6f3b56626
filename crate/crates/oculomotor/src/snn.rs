//! Fixed-timestep simulation of leaky integrate-and-fire neurons and delayed
//! weighted synapses. Deterministic: same network, same inputs, same spikes.

use crate::error::{Error, Result};

/// Functional role of a neuron within the oculomotor circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Sc,
    Llbn,
    Ebn,
    Ibn,
    Opn,
    Ifn,
    Tn,
    Dsn,
    Mn,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Sc => "SC",
            Role::Llbn => "LLBN",
            Role::Ebn => "EBN",
            Role::Ibn => "IBN",
            Role::Opn => "OPN",
            Role::Ifn => "IFN",
            Role::Tn => "TN",
            Role::Dsn => "DSN",
            Role::Mn => "MN",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NeuronParams {
    pub role: Role,
    /// Membrane time constant, ms.
    pub tau_m_ms: f64,
    pub threshold: f64,
    pub reset: f64,
    pub refractory_ms: f64,
    /// Tonic drive in potential units per ms; nonzero only for OPN/TN roles.
    pub bias: f64,
    /// Scales the leak term; TN uses a near-zero value for sustained,
    /// integrator-like firing.
    pub leak_scale: f64,
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_m_ms > 0.0) {
            return Err(Error::config("snn-core", "membrane time constant must be > 0"));
        }
        if self.refractory_ms < 0.0 {
            return Err(Error::config("snn-core", "refractory must be >= 0"));
        }
        if !(self.threshold > self.reset) {
            return Err(Error::config("snn-core", "threshold must exceed reset potential"));
        }
        if !(0.0..=1.0).contains(&self.leak_scale) {
            return Err(Error::config("snn-core", "integrator_leak_scale must be in [0,1]"));
        }
        if self.role == Role::Opn && !(self.bias > 0.0) {
            return Err(Error::config("snn-core", "OPN must have positive tonic bias"));
        }
        if self.role == Role::Tn && self.leak_scale >= 0.1 {
            return Err(Error::config("snn-core", "TN leak scale must be < 0.1"));
        }
        if self.bias != 0.0 && self.role != Role::Opn && self.role != Role::Tn {
            return Err(Error::config("snn-core", "bias current is reserved for OPN/TN roles"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeuronState {
    pub potential: f64,
    pub refractory_remaining: f64,
    pub last_spike_ms: Option<f64>,
}

/// Directed weighted connection with conduction delay. `weight < 0` is
/// inhibitory; the sign class is fixed and plasticity never flips it.
/// Network construction snaps weights onto the [`WEIGHT_QUANTUM`] grid so
/// summed synaptic currents are exact and independent of delivery order.
#[derive(Debug, Clone, Copy)]
pub struct Synapse {
    pub pre: u32,
    pub post: u32,
    pub weight: f64,
    pub delay_ms: f64,
    pub plastic: bool,
}

/// Weights are quantized to this grid at build time. Sums of a few thousand
/// quantized weights stay below 2^53 ulps, so float addition of queued
/// currents is exact (and therefore order-independent).
pub const WEIGHT_QUANTUM: f64 = 1.0 / (1u64 << 20) as f64;

/// Snap a weight onto the exact-summation grid.
pub fn quantize_weight(w: f64) -> f64 {
    (w / WEIGHT_QUANTUM).round() * WEIGHT_QUANTUM
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeRecord {
    pub neuron: u32,
    pub t_ms: f64,
}

/// One Euler step of a single neuron. Returns the new state and whether a
/// spike was emitted this step.
pub fn step_neuron(
    state: &NeuronState,
    params: &NeuronParams,
    input_current: f64,
    dt_ms: f64,
    now_ms: f64,
) -> Result<(NeuronState, bool)> {
    if !input_current.is_finite() {
        return Err(Error::numeric(format!(
            "non-finite input current for {} neuron",
            params.role.as_str()
        )));
    }
    debug_assert!(dt_ms > 0.0);
    let mut next = *state;
    if next.refractory_remaining > 0.0 {
        next.refractory_remaining = (next.refractory_remaining - dt_ms).max(0.0);
        next.potential = params.reset;
        return Ok((next, false));
    }
    let leak = params.leak_scale * (next.potential - params.reset) / params.tau_m_ms;
    next.potential += dt_ms * (-leak + params.bias + input_current);
    if next.potential >= params.threshold {
        next.potential = params.reset;
        next.refractory_remaining = params.refractory_ms;
        next.last_spike_ms = Some(now_ms);
        return Ok((next, true));
    }
    Ok((next, false))
}

/// Per-neuron future input currents, bucketed by delivery step.
#[derive(Debug, Clone)]
pub struct DelayQueue {
    ring: Vec<f64>,
    slots: usize,
    n: usize,
    head: usize,
}

impl DelayQueue {
    pub fn new(n_neurons: usize, max_delay_steps: usize) -> DelayQueue {
        let slots = max_delay_steps + 1;
        DelayQueue {
            ring: vec![0.0; slots * n_neurons],
            slots,
            n: n_neurons,
            head: 0,
        }
    }

    pub fn enqueue(&mut self, post: u32, delay_steps: usize, weight: f64) {
        debug_assert!(delay_steps >= 1 && delay_steps < self.slots);
        let slot = (self.head + delay_steps) % self.slots;
        self.ring[slot * self.n + post as usize] += weight;
    }

    /// Input currents due at the current step.
    pub fn due(&self) -> &[f64] {
        &self.ring[self.head * self.n..(self.head + 1) * self.n]
    }

    /// Clear the current slot and advance one step.
    pub fn advance(&mut self) {
        let start = self.head * self.n;
        self.ring[start..start + self.n].fill(0.0);
        self.head = (self.head + 1) % self.slots;
    }
}

/// Queue each spike's synaptic contributions for delivery `delay/dt` steps
/// in the future. Contributions to the same neuron and step sum linearly.
pub fn deliver_spikes(
    spikes: &[SpikeRecord],
    synapses: &[Synapse],
    queue: &mut DelayQueue,
    dt_ms: f64,
) {
    for spike in spikes {
        for syn in synapses.iter().filter(|s| s.pre == spike.neuron) {
            let steps = (syn.delay_ms / dt_ms).round() as usize;
            queue.enqueue(syn.post, steps, syn.weight);
        }
    }
}

/// Trailing-window firing rate in Hz over the half-open window `(now-w, now]`.
pub fn firing_rate(spike_times_ms: &[f64], window_ms: f64, now_ms: f64) -> f64 {
    debug_assert!(window_ms > 0.0);
    let lo = now_ms - window_ms;
    let count = spike_times_ms
        .iter()
        .filter(|&&t| t > lo && t <= now_ms)
        .count();
    count as f64 * 1000.0 / window_ms
}

/// A complete network: neurons, synapses grouped by presynaptic id, and the
/// conduction-delay buffer. Synchronous update, single-threaded.
#[derive(Debug, Clone)]
pub struct Network {
    params: Vec<NeuronParams>,
    states: Vec<NeuronState>,
    /// Synapses in build order; indices here are stable and used by the
    /// plasticity registry.
    synapses: Vec<Synapse>,
    /// Synapse indices grouped by presynaptic neuron.
    fanout: Vec<Vec<u32>>,
    delay_steps: Vec<u32>,
    queue: DelayQueue,
    dt_ms: f64,
    step_count: u64,
}

impl Network {
    pub fn new(params: Vec<NeuronParams>, synapses: Vec<Synapse>, dt_ms: f64) -> Result<Network> {
        if !(dt_ms > 0.0) {
            return Err(Error::config("snn-core", "dt must be > 0"));
        }
        for p in &params {
            p.validate()?;
        }
        let n = params.len();
        for syn in &synapses {
            if syn.pre as usize >= n || syn.post as usize >= n {
                return Err(Error::config(
                    "snn-core",
                    format!("synapse references unknown neuron id {}->{}", syn.pre, syn.post),
                ));
            }
            let steps = syn.delay_ms / dt_ms;
            if syn.delay_ms < dt_ms || (steps - steps.round()).abs() > 1e-9 {
                return Err(Error::config(
                    "snn-core",
                    format!(
                        "synapse {}->{} delay {} ms is not a multiple of dt={} ms",
                        syn.pre, syn.post, syn.delay_ms, dt_ms
                    ),
                ));
            }
        }
        let mut synapses = synapses;
        for syn in &mut synapses {
            syn.weight = quantize_weight(syn.weight);
        }
        let mut fanout = vec![Vec::new(); n];
        for (k, syn) in synapses.iter().enumerate() {
            fanout[syn.pre as usize].push(k as u32);
        }
        let delay_steps: Vec<u32> = synapses
            .iter()
            .map(|s| (s.delay_ms / dt_ms).round() as u32)
            .collect();
        let max_delay = delay_steps.iter().copied().max().unwrap_or(1) as usize;
        Ok(Network {
            states: vec![NeuronState::default(); n],
            queue: DelayQueue::new(n, max_delay),
            params,
            synapses,
            fanout,
            delay_steps,
            dt_ms,
            step_count: 0,
        })
    }

    pub fn n_neurons(&self) -> usize {
        self.params.len()
    }

    pub fn dt_ms(&self) -> f64 {
        self.dt_ms
    }

    pub fn time_ms(&self) -> f64 {
        self.step_count as f64 * self.dt_ms
    }

    pub fn params(&self, id: u32) -> &NeuronParams {
        &self.params[id as usize]
    }

    pub fn state(&self, id: u32) -> &NeuronState {
        &self.states[id as usize]
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn weight(&self, syn_index: usize) -> f64 {
        self.synapses[syn_index].weight
    }

    pub fn set_weight(&mut self, syn_index: usize, weight: f64) {
        self.synapses[syn_index].weight = weight;
    }

    /// Stagger initial potentials inside a population so identical neurons
    /// do not fire in lockstep; offsets are deterministic.
    pub fn set_initial_potential(&mut self, id: u32, potential: f64) {
        self.states[id as usize].potential = potential;
    }

    /// One synchronous step: deliver due queued currents, step every neuron,
    /// enqueue resulting spikes. Appends emitted spikes to `spikes_out`.
    pub fn step(&mut self, external: &[f64], spikes_out: &mut Vec<SpikeRecord>) -> Result<()> {
        debug_assert_eq!(external.len(), self.params.len());
        let now = (self.step_count + 1) as f64 * self.dt_ms;
        let first_new = spikes_out.len();
        for i in 0..self.params.len() {
            let input = self.queue.due()[i] / self.dt_ms + external[i];
            let p = &self.params[i];
            let s = &self.states[i];
            // fast path: a quiescent neuron with no input stays quiescent
            if input == 0.0
                && p.bias == 0.0
                && s.potential == p.reset
                && s.refractory_remaining == 0.0
            {
                continue;
            }
            let (next, spiked) = step_neuron(s, p, input, self.dt_ms, now)?;
            self.states[i] = next;
            if spiked {
                spikes_out.push(SpikeRecord {
                    neuron: i as u32,
                    t_ms: now,
                });
            }
        }
        self.queue.advance();
        for spike in &spikes_out[first_new..] {
            for &k in &self.fanout[spike.neuron as usize] {
                let syn = self.synapses[k as usize];
                self.queue
                    .enqueue(syn.post, self.delay_steps[k as usize] as usize, syn.weight);
            }
        }
        self.step_count += 1;
        Ok(())
    }
}
