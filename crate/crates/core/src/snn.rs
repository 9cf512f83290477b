//! Discrete-time spiking dynamics.
//!
//! Current propagation with synaptic delay, leaky integrate-and-fire with
//! reset-to-zero, and per-neuron eligibility traces. Every operation here is
//! deterministic; the per-step order used by the full circuit is:
//! propagate (from buffered past spikes) -> integrate-and-fire ->
//! weight updates (using traces from the end of the previous step and the
//! new spikes) -> trace decay + accumulate.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Binary spike indicators for one population at one timestep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpikeVector {
    pub bits: Vec<bool>,
    pub time: u64,
}

impl SpikeVector {
    pub fn zeros(n: usize, time: u64) -> Self {
        Self {
            bits: vec![false; n],
            time,
        }
    }

    pub fn from_indices(n: usize, time: u64, indices: &[usize]) -> Self {
        let mut bits = vec![false; n];
        for &i in indices {
            bits[i] = true;
        }
        Self { bits, time }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// True if at least one neuron spiked.
    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

/// Exponentially decaying spike tally, one value per neuron.
///
/// After each step `values[i] = decay * values[i] + spike[i]`, so under one
/// spike per step the value is bounded by `1 / (1 - decay)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceState {
    pub values: Vec<f64>,
    pub decay: f64,
}

impl TraceState {
    pub fn new(n: usize, decay: f64) -> Result<Self> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::config(
                "trace_decay",
                format!("must be in (0, 1), got {decay}"),
            ));
        }
        Ok(Self {
            values: vec![0.0; n],
            decay,
        })
    }

    /// Decay all traces and add the new spikes.
    pub fn decay_accumulate(&mut self, spikes: &SpikeVector) -> Result<()> {
        if spikes.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                context: "trace decay",
                expected: self.values.len(),
                actual: spikes.len(),
            });
        }
        for (v, &s) in self.values.iter_mut().zip(spikes.bits.iter()) {
            *v = self.decay * *v + if s { 1.0 } else { 0.0 };
        }
        Ok(())
    }

    /// Geometric-series ceiling for any spike history.
    pub fn bound(&self) -> f64 {
        1.0 / (1.0 - self.decay)
    }

    pub fn quench(&mut self) {
        self.values.fill(0.0);
    }
}

/// Membrane state with leak factor and firing threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct VoltageState {
    pub values: Vec<f64>,
    pub leak: f64,
    pub threshold: f64,
}

impl VoltageState {
    pub fn new(n: usize, leak: f64, threshold: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&leak) {
            return Err(Error::config(
                "leak",
                format!("must be in [0, 1), got {leak}"),
            ));
        }
        if !(threshold > 0.0) {
            return Err(Error::config(
                "threshold",
                format!("must be positive, got {threshold}"),
            ));
        }
        Ok(Self {
            values: vec![0.0; n],
            leak,
            threshold,
        })
    }

    /// One integration step: `v' = leak*v + current + external`, fire on
    /// `v' >= threshold`, reset fired neurons to zero.
    pub fn integrate_and_fire(
        &mut self,
        current: &[f64],
        external: &[f64],
        time: u64,
    ) -> Result<SpikeVector> {
        let n = self.values.len();
        if current.len() != n {
            return Err(Error::LengthMismatch {
                context: "integrate current",
                expected: n,
                actual: current.len(),
            });
        }
        if external.len() != n {
            return Err(Error::LengthMismatch {
                context: "integrate external",
                expected: n,
                actual: external.len(),
            });
        }
        let mut spikes = SpikeVector::zeros(n, time);
        for i in 0..n {
            if !current[i].is_finite() || !external[i].is_finite() {
                return Err(Error::NonFinite {
                    context: "integrate input",
                    index: i,
                });
            }
            let v = self.leak * self.values[i] + current[i] + external[i];
            if v >= self.threshold {
                spikes.bits[i] = true;
                self.values[i] = 0.0;
            } else {
                self.values[i] = v;
            }
        }
        Ok(spikes)
    }

    pub fn quench(&mut self) {
        self.values.fill(0.0);
    }
}

/// Directed weight matrix (rows = presynaptic) with clipping bounds and an
/// axonal delay in whole timesteps. Delay must be at least 1: a presynaptic
/// spike at t can reach a postsynaptic membrane no earlier than t + delay.
#[derive(Clone, Debug, PartialEq)]
pub struct SynapseMatrix {
    pub n_pre: usize,
    pub n_post: usize,
    weights: Vec<f64>,
    pub w_min: f64,
    pub w_max: f64,
    pub delay: usize,
}

impl SynapseMatrix {
    pub fn zeros(n_pre: usize, n_post: usize, w_min: f64, w_max: f64, delay: usize) -> Result<Self> {
        if delay < 1 {
            return Err(Error::config("delay", "synaptic delay must be >= 1"));
        }
        if !(w_min <= w_max) {
            return Err(Error::config(
                "weight bounds",
                format!("w_min {w_min} must be <= w_max {w_max}"),
            ));
        }
        Ok(Self {
            n_pre,
            n_post,
            weights: vec![0.0; n_pre * n_post],
            w_min,
            w_max,
            delay,
        })
    }

    /// Fixed one-to-one wiring: `weight` on the diagonal, zero elsewhere.
    pub fn one_to_one(n: usize, weight: f64, delay: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n, weight.min(0.0), weight.max(0.0), delay)?;
        for i in 0..n {
            m.weights[i * n + i] = weight;
        }
        Ok(m)
    }

    #[inline]
    pub fn get(&self, pre: usize, post: usize) -> f64 {
        self.weights[pre * self.n_post + post]
    }

    #[inline]
    pub fn set(&mut self, pre: usize, post: usize, w: f64) {
        self.weights[pre * self.n_post + post] = w;
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Add `sum_i w[i][j] * spike[i]` into `out`, skipping silent rows.
    /// Row order is ascending, which fixes the float summation order.
    pub fn accumulate(&self, spike_bits: &[bool], out: &mut [f64]) -> Result<()> {
        if spike_bits.len() != self.n_pre {
            return Err(Error::LengthMismatch {
                context: "propagate spikes",
                expected: self.n_pre,
                actual: spike_bits.len(),
            });
        }
        if out.len() != self.n_post {
            return Err(Error::LengthMismatch {
                context: "propagate output",
                expected: self.n_post,
                actual: out.len(),
            });
        }
        for (i, &fired) in spike_bits.iter().enumerate() {
            if fired {
                let row = &self.weights[i * self.n_post..(i + 1) * self.n_post];
                for (o, w) in out.iter_mut().zip(row.iter()) {
                    *o += *w;
                }
            }
        }
        Ok(())
    }

    /// Postsynaptic current from one presynaptic spike vector.
    pub fn propagate(&self, spike_bits: &[bool]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_post];
        self.accumulate(spike_bits, &mut out)?;
        Ok(out)
    }

    /// Clamp every weight into `[w_min, w_max]`.
    pub fn clip(&mut self) {
        for w in self.weights.iter_mut() {
            *w = w.clamp(self.w_min, self.w_max);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in self.weights.iter_mut() {
            *w *= factor;
        }
        self.clip();
    }
}

/// Ring of past spike vectors, deep enough for the largest axonal delay.
#[derive(Clone, Debug)]
pub struct SpikeRing {
    n: usize,
    depth: usize,
    buf: VecDeque<Vec<bool>>,
    zeros: Vec<bool>,
}

impl SpikeRing {
    pub fn new(n: usize, depth: usize) -> Self {
        Self {
            n,
            depth,
            buf: VecDeque::with_capacity(depth + 1),
            zeros: vec![false; n],
        }
    }

    /// Record the spikes of the step that just completed.
    pub fn push(&mut self, bits: &[bool]) {
        debug_assert_eq!(bits.len(), self.n);
        self.buf.push_front(bits.to_vec());
        self.buf.truncate(self.depth);
    }

    /// Spikes from `delay` steps ago; all-zero before any history exists.
    pub fn get(&self, delay: usize) -> &[bool] {
        assert!(delay >= 1 && delay <= self.depth, "delay out of ring range");
        self.buf.get(delay - 1).map(|v| &v[..]).unwrap_or(&self.zeros)
    }

    pub fn clear(&mut self) {
        self.buf.clear();
    }
}

/// One population's dynamical state: membrane, traces, and spike history.
#[derive(Clone, Debug)]
pub struct Population {
    pub voltage: VoltageState,
    pub traces: TraceState,
    pub ring: SpikeRing,
}

impl Population {
    pub fn new(n: usize, leak: f64, threshold: f64, trace_decay: f64, ring_depth: usize) -> Result<Self> {
        Ok(Self {
            voltage: VoltageState::new(n, leak, threshold)?,
            traces: TraceState::new(n, trace_decay)?,
            ring: SpikeRing::new(n, ring_depth),
        })
    }

    pub fn n(&self) -> usize {
        self.voltage.values.len()
    }

    /// Zero voltages and traces and forget buffered spikes.
    pub fn quench(&mut self) {
        self.voltage.quench();
        self.traces.quench();
        self.ring.clear();
    }
}

/// Step a single population with optional self-recurrence.
///
/// Composition order: propagate from buffered spikes, integrate-and-fire,
/// then trace decay + accumulate. The full circuit interposes its weight
/// updates between firing and the trace update; a lone population has no
/// plastic synapses to update.
pub fn step_population(
    pop: &mut Population,
    recurrent: Option<&SynapseMatrix>,
    external: &[f64],
    time: u64,
) -> Result<SpikeVector> {
    let mut current = vec![0.0; pop.n()];
    if let Some(w) = recurrent {
        let past = pop.ring.get(w.delay);
        w.accumulate(past, &mut current)?;
    }
    let spikes = pop.voltage.integrate_and_fire(&current, external, time)?;
    pop.traces.decay_accumulate(&spikes)?;
    pop.ring.push(&spikes.bits);
    Ok(spikes)
}
