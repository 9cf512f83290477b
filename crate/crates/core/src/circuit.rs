//! The four-population circuit and its phase switching.
//!
//! Sensory neurons carry the plastic recurrent matrix. A gate population
//! relays sensory spikes one-to-one toward the prediction population and is
//! held silent by a bias current during online phases. A fourth population
//! receives a delayed one-to-one copy of the sensory spikes (axonal delay 2)
//! so that, during consolidation, its activity lines up step-for-step with
//! the gate-driven prediction activity; it is the presynaptic side of the
//! plastic prediction matrix.
//!
//! Per-step order is fixed: delayed propagation on every arc, then
//! integrate-and-fire for all populations, then the two weight updates
//! (traces from the end of the previous step, spikes from this step), then
//! trace decay + accumulate, then the new spikes enter the delay buffers.

use crate::error::{Error, Result};
use crate::plasticity::{pred_update, stdp_update, Modulator, PlasticityConfig};
use crate::snn::{Population, SpikeVector, SynapseMatrix};

/// Axonal delay of the sensory -> copy wiring; equals the two-hop latency of
/// the sensory -> gate -> prediction chain.
pub const COPY_DELAY: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseMode {
    Online,
    Consolidation,
}

/// Population identifiers, in raster/report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PopId {
    Sensory = 0,
    Prediction = 1,
    Gate = 2,
    Delay = 3,
}

impl PopId {
    pub const ALL: [PopId; 4] = [PopId::Sensory, PopId::Prediction, PopId::Gate, PopId::Delay];

    pub fn name(&self) -> &'static str {
        match self {
            PopId::Sensory => "sensory",
            PopId::Prediction => "prediction",
            PopId::Gate => "gate",
            PopId::Delay => "delay",
        }
    }
}

/// Structural and dynamical parameters of the circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitConfig {
    pub n: usize,
    pub threshold: f64,
    pub leak: f64,
    /// Weight of every fixed one-to-one wiring; must be suprathreshold.
    pub drive_weight: f64,
    /// Bias magnitude holding the gate silent during online phases.
    pub gate_inhibition: f64,
    /// Bias magnitude applied to the sensory population during online phases
    /// so that recurrent input alone cannot recruit successor patterns while
    /// stimuli are being presented. Set to zero to disable.
    pub sensory_inhibition: f64,
    pub trace_decay_sensory: f64,
    pub trace_decay_gate: f64,
    pub trace_decay_prediction: f64,
    pub trace_decay_delay: f64,
    pub rec: PlasticityConfig,
    pub pred: PlasticityConfig,
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config("circuit.n", "population size must be >= 2"));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::config("circuit.threshold", "threshold must be positive"));
        }
        if !(0.0..1.0).contains(&self.leak) {
            return Err(Error::config("circuit.leak", "leak must be in [0, 1)"));
        }
        if self.drive_weight < self.threshold {
            return Err(Error::config(
                "circuit.drive_weight",
                "one-to-one drive must be at least the threshold",
            ));
        }
        if self.gate_inhibition < 0.0 || self.sensory_inhibition < 0.0 {
            return Err(Error::config(
                "circuit.gate_inhibition",
                "inhibition magnitudes must be >= 0",
            ));
        }
        self.rec.validate()?;
        self.pred.validate()?;
        Ok(())
    }
}

/// Spikes emitted by one global step.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpikes {
    pub sensory: SpikeVector,
    pub prediction: SpikeVector,
    pub gate: SpikeVector,
    pub delay: SpikeVector,
}

impl CircuitSpikes {
    pub fn get(&self, pop: PopId) -> &SpikeVector {
        match pop {
            PopId::Sensory => &self.sensory,
            PopId::Prediction => &self.prediction,
            PopId::Gate => &self.gate,
            PopId::Delay => &self.delay,
        }
    }
}

pub struct Circuit {
    pub cfg: CircuitConfig,
    pub mode: PhaseMode,
    pub modulator: Modulator,
    /// When false, both weight updates are suppressed (frozen evaluation).
    pub plasticity_enabled: bool,
    pub time: u64,
    pub sensory: Population,
    pub prediction: Population,
    pub gate: Population,
    pub delay_pop: Population,
    pub w_rec: SynapseMatrix,
    pub w_pred: SynapseMatrix,
    pub w_sens_gate: SynapseMatrix,
    pub w_gate_pred: SynapseMatrix,
    pub w_sens_delay: SynapseMatrix,
    zero_ext: Vec<f64>,
}

/// Construct a fresh circuit: plastic matrices all zero, one-to-one wirings
/// installed at the drive weight, mode online, all state quiescent.
pub fn build_circuit(cfg: &CircuitConfig) -> Result<Circuit> {
    cfg.validate()?;
    let n = cfg.n;
    let ring_depth = COPY_DELAY;
    let pop = |decay: f64| Population::new(n, cfg.leak, cfg.threshold, decay, ring_depth);
    Ok(Circuit {
        mode: PhaseMode::Online,
        modulator: Modulator::online(),
        plasticity_enabled: true,
        time: 0,
        sensory: pop(cfg.trace_decay_sensory)?,
        prediction: pop(cfg.trace_decay_prediction)?,
        gate: pop(cfg.trace_decay_gate)?,
        delay_pop: pop(cfg.trace_decay_delay)?,
        w_rec: SynapseMatrix::zeros(n, n, cfg.rec.w_min, cfg.rec.w_max, 1)?,
        w_pred: SynapseMatrix::zeros(n, n, cfg.pred.w_min, cfg.pred.w_max, 1)?,
        w_sens_gate: SynapseMatrix::one_to_one(n, cfg.drive_weight, 1)?,
        w_gate_pred: SynapseMatrix::one_to_one(n, cfg.drive_weight, 1)?,
        w_sens_delay: SynapseMatrix::one_to_one(n, cfg.drive_weight, COPY_DELAY)?,
        zero_ext: vec![0.0; n],
        cfg: cfg.clone(),
    })
}

impl Circuit {
    pub fn n(&self) -> usize {
        self.cfg.n
    }

    /// Zero voltages and traces and forget buffered spikes, all populations.
    pub fn quench(&mut self) {
        self.sensory.quench();
        self.prediction.quench();
        self.gate.quench();
        self.delay_pop.quench();
    }

    /// Switch phase mode. Sets the modulator (r = 1 online, r = 0 during
    /// consolidation) and quenches all dynamical state.
    pub fn set_phase_mode(&mut self, mode: PhaseMode) {
        self.mode = mode;
        self.modulator = match mode {
            PhaseMode::Online => Modulator::online(),
            PhaseMode::Consolidation => Modulator::consolidation(),
        };
        self.quench();
    }

    /// One global timestep driven by an external sensory current.
    pub fn step(&mut self, external_sensory: &[f64]) -> Result<CircuitSpikes> {
        let n = self.cfg.n;
        if external_sensory.len() != n {
            return Err(Error::LengthMismatch {
                context: "circuit external input",
                expected: n,
                actual: external_sensory.len(),
            });
        }
        let online = self.mode == PhaseMode::Online;

        // Delayed currents on every arc.
        let mut i_sens = vec![0.0; n];
        self.w_rec
            .accumulate(self.sensory.ring.get(self.w_rec.delay), &mut i_sens)?;
        if online {
            for c in i_sens.iter_mut() {
                *c -= self.cfg.sensory_inhibition;
            }
        }

        let mut i_gate = vec![0.0; n];
        self.w_sens_gate
            .accumulate(self.sensory.ring.get(self.w_sens_gate.delay), &mut i_gate)?;
        if online {
            for c in i_gate.iter_mut() {
                *c -= self.cfg.gate_inhibition;
            }
        }

        let mut i_pred = vec![0.0; n];
        self.w_gate_pred
            .accumulate(self.gate.ring.get(self.w_gate_pred.delay), &mut i_pred)?;
        self.w_pred
            .accumulate(self.delay_pop.ring.get(self.w_pred.delay), &mut i_pred)?;

        let mut i_delay = vec![0.0; n];
        self.w_sens_delay
            .accumulate(self.sensory.ring.get(self.w_sens_delay.delay), &mut i_delay)?;

        // Fire.
        let t = self.time;
        let sens_sp = self
            .sensory
            .voltage
            .integrate_and_fire(&i_sens, external_sensory, t)?;
        let gate_sp = self.gate.voltage.integrate_and_fire(&i_gate, &self.zero_ext, t)?;
        let pred_sp = self
            .prediction
            .voltage
            .integrate_and_fire(&i_pred, &self.zero_ext, t)?;
        let delay_sp = self
            .delay_pop
            .voltage
            .integrate_and_fire(&i_delay, &self.zero_ext, t)?;

        // Weight updates: traces are still the values from the end of t-1.
        if self.plasticity_enabled {
            stdp_update(
                &mut self.w_rec,
                &sens_sp,
                &self.sensory.traces,
                &sens_sp,
                &self.sensory.traces,
                self.modulator,
                &self.cfg.rec,
                true,
            )?;
            pred_update(
                &mut self.w_pred,
                &delay_sp,
                &self.delay_pop.traces,
                &pred_sp,
                &self.prediction.traces,
                self.modulator,
                &self.cfg.pred,
            )?;
        }

        // Trace decay + accumulate with the new spikes.
        self.sensory.traces.decay_accumulate(&sens_sp)?;
        self.gate.traces.decay_accumulate(&gate_sp)?;
        self.prediction.traces.decay_accumulate(&pred_sp)?;
        self.delay_pop.traces.decay_accumulate(&delay_sp)?;

        // Buffer the new spikes for future delayed propagation.
        self.sensory.ring.push(&sens_sp.bits);
        self.gate.ring.push(&gate_sp.bits);
        self.prediction.ring.push(&pred_sp.bits);
        self.delay_pop.ring.push(&delay_sp.bits);
        self.time += 1;

        Ok(CircuitSpikes {
            sensory: sens_sp,
            prediction: pred_sp,
            gate: gate_sp,
            delay: delay_sp,
        })
    }
}
