//! The two local learning rules with modulatory gating.
//!
//! Both rules are outer products over per-neuron spike and trace values, so
//! each weight change depends only on its own pre/post pair plus the global
//! modulator and learning rate. The recurrent rule carries a factor `r`, the
//! prediction rule a factor `1 - r`; the phase protocol holds r at 1 online
//! and 0 during consolidation, which makes exactly one matrix plastic at a
//! time.

use crate::error::{Error, Result};
use crate::snn::{SpikeVector, SynapseMatrix, TraceState};

/// Global binary modulator. 1 during online phases, 0 during consolidation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Modulator {
    pub r: f64,
}

impl Modulator {
    pub fn online() -> Self {
        Self { r: 1.0 }
    }

    pub fn consolidation() -> Self {
        Self { r: 0.0 }
    }
}

/// Learning-rule parameters for one plastic matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlasticityConfig {
    pub learning_rate: f64,
    pub trace_decay: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl PlasticityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::config(
                "learning_rate",
                format!("must be positive, got {}", self.learning_rate),
            ));
        }
        if !(self.trace_decay > 0.0 && self.trace_decay < 1.0) {
            return Err(Error::config(
                "trace_decay",
                format!("must be in (0, 1), got {}", self.trace_decay),
            ));
        }
        if !(self.w_min <= self.w_max) {
            return Err(Error::config("w_min", "w_min must be <= w_max"));
        }
        Ok(())
    }
}

fn check_dims(
    w: &SynapseMatrix,
    pre_spikes: &SpikeVector,
    pre_traces: &TraceState,
    post_spikes: &SpikeVector,
    post_traces: &TraceState,
) -> Result<()> {
    for (len, expected, context) in [
        (pre_spikes.len(), w.n_pre, "plasticity pre spikes"),
        (pre_traces.values.len(), w.n_pre, "plasticity pre traces"),
        (post_spikes.len(), w.n_post, "plasticity post spikes"),
        (post_traces.values.len(), w.n_post, "plasticity post traces"),
    ] {
        if len != expected {
            return Err(Error::LengthMismatch {
                context,
                expected,
                actual: len,
            });
        }
    }
    Ok(())
}

/// Shared kernel: `dW[i][j] = factor * (pre_tr[i]*post_sp[j] - pre_sp[i]*post_tr[j])`,
/// clipped to the matrix bounds. Traces must be the values from the end of
/// the previous step; spikes are from the current step.
fn outer_update(
    w: &mut SynapseMatrix,
    pre_spikes: &SpikeVector,
    pre_traces: &TraceState,
    post_spikes: &SpikeVector,
    post_traces: &TraceState,
    factor: f64,
    skip_diagonal: bool,
) {
    // No spikes on either side means every term is exactly zero.
    if !pre_spikes.any() && !post_spikes.any() {
        return;
    }
    let (w_min, w_max) = (w.w_min, w.w_max);
    let n_post = w.n_post;
    let weights = w.weights_mut();
    for i in 0..pre_spikes.len() {
        let pre_sp = if pre_spikes.bits[i] { 1.0 } else { 0.0 };
        let pre_tr = pre_traces.values[i];
        let row = &mut weights[i * n_post..(i + 1) * n_post];
        for j in 0..n_post {
            if skip_diagonal && i == j {
                continue;
            }
            let post_sp = if post_spikes.bits[j] { 1.0 } else { 0.0 };
            let d = factor * (pre_tr * post_sp - pre_sp * post_traces.values[j]);
            if d != 0.0 {
                row[j] = (row[j] + d).clamp(w_min, w_max);
            }
        }
    }
}

/// Recurrent-memory rule, gated by `r`. With `skip_diagonal` the self-synapse
/// entries are left untouched (pre and post being the same population).
#[allow(clippy::too_many_arguments)]
pub fn stdp_update(
    w: &mut SynapseMatrix,
    pre_spikes: &SpikeVector,
    pre_traces: &TraceState,
    post_spikes: &SpikeVector,
    post_traces: &TraceState,
    r: Modulator,
    cfg: &PlasticityConfig,
    skip_diagonal: bool,
) -> Result<()> {
    check_dims(w, pre_spikes, pre_traces, post_spikes, post_traces)?;
    if r.r == 0.0 {
        return Ok(());
    }
    outer_update(
        w,
        pre_spikes,
        pre_traces,
        post_spikes,
        post_traces,
        cfg.learning_rate * r.r,
        skip_diagonal,
    );
    Ok(())
}

/// Prediction-transfer rule, gated by `1 - r`. Presynaptic side is the
/// delayed copy population, postsynaptic side the prediction population.
pub fn pred_update(
    w: &mut SynapseMatrix,
    pre_spikes: &SpikeVector,
    pre_traces: &TraceState,
    post_spikes: &SpikeVector,
    post_traces: &TraceState,
    r: Modulator,
    cfg: &PlasticityConfig,
) -> Result<()> {
    check_dims(w, pre_spikes, pre_traces, post_spikes, post_traces)?;
    if r.r == 1.0 {
        return Ok(());
    }
    outer_update(
        w,
        pre_spikes,
        pre_traces,
        post_spikes,
        post_traces,
        cfg.learning_rate * (1.0 - r.r),
        false,
    );
    Ok(())
}

/// Clamp every entry of `w` into its bounds.
pub fn clip_weights(w: &mut SynapseMatrix) {
    w.clip();
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> PlasticityConfig {
        PlasticityConfig {
            learning_rate: 0.1,
            trace_decay: 0.5,
            w_min: 0.0,
            w_max: 1.0,
        }
    }

    fn sp(n: usize, idx: &[usize]) -> SpikeVector {
        SpikeVector::from_indices(n, 0, idx)
    }

    fn tr(values: &[f64]) -> TraceState {
        let mut t = TraceState::new(values.len(), 0.5).unwrap();
        t.values.copy_from_slice(values);
        t
    }

    #[test]
    fn r_zero_leaves_recurrent_weights_bitwise_unchanged() {
        let mut w = SynapseMatrix::zeros(2, 2, 0.0, 1.0, 1).unwrap();
        w.set(0, 1, 0.3);
        let before: Vec<u64> = w.weights().iter().map(|x| x.to_bits()).collect();
        stdp_update(
            &mut w,
            &sp(2, &[0, 1]),
            &tr(&[0.7, 0.2]),
            &sp(2, &[1]),
            &tr(&[0.1, 0.9]),
            Modulator::consolidation(),
            &cfg(),
            true,
        )
        .unwrap();
        let after: Vec<u64> = w.weights().iter().map(|x| x.to_bits()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn pre_before_post_potentiates() {
        // Hand-stepped two-neuron raster: pre fires at t-1, post fires at t.
        // With alpha = 0.5 the pre trace at the end of t-1 is exactly 1.0, so
        // the update at t is +eta * 1.0 = +0.1 on the forward weight.
        let mut pre_traces = TraceState::new(1, 0.5).unwrap();
        let mut post_traces = TraceState::new(1, 0.5).unwrap();

        // t-1: pre spikes, post silent
        pre_traces.decay_accumulate(&sp(1, &[0])).unwrap();
        post_traces.decay_accumulate(&sp(1, &[])).unwrap();

        // t: post spikes, pre silent
        let pre_spikes = sp(1, &[]);
        let post_spikes = sp(1, &[0]);

        let mut w = SynapseMatrix::zeros(1, 1, 0.0, 1.0, 1).unwrap();
        stdp_update(
            &mut w,
            &pre_spikes,
            &pre_traces,
            &post_spikes,
            &post_traces,
            Modulator::online(),
            &cfg(),
            false,
        )
        .unwrap();
        assert_eq!(w.get(0, 0), 0.1);
    }

    #[test]
    fn simultaneous_first_spikes_cancel() {
        // Both neurons spike for the first time together: traces are still 0,
        // so potentiation and depression terms are both zero.
        let mut w = SynapseMatrix::zeros(2, 2, 0.0, 1.0, 1).unwrap();
        stdp_update(
            &mut w,
            &sp(2, &[0, 1]),
            &tr(&[0.0, 0.0]),
            &sp(2, &[0, 1]),
            &tr(&[0.0, 0.0]),
            Modulator::online(),
            &cfg(),
            false,
        )
        .unwrap();
        assert!(w.weights().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn diagonal_skipped_for_same_population() {
        let mut w = SynapseMatrix::zeros(2, 2, -1.0, 1.0, 1).unwrap();
        stdp_update(
            &mut w,
            &sp(2, &[0]),
            &tr(&[1.0, 0.0]),
            &sp(2, &[0]),
            &tr(&[0.5, 0.0]),
            Modulator::online(),
            &cfg(),
            true,
        )
        .unwrap();
        assert_eq!(w.get(0, 0), 0.0, "self-synapse untouched");
    }

    #[test]
    fn r_one_leaves_prediction_weights_bitwise_unchanged() {
        let mut w = SynapseMatrix::zeros(2, 2, 0.0, 1.0, 1).unwrap();
        w.set(1, 0, 0.25);
        let before: Vec<u64> = w.weights().iter().map(|x| x.to_bits()).collect();
        pred_update(
            &mut w,
            &sp(2, &[0, 1]),
            &tr(&[0.9, 0.9]),
            &sp(2, &[0, 1]),
            &tr(&[0.9, 0.9]),
            Modulator::online(),
            &cfg(),
        )
        .unwrap();
        let after: Vec<u64> = w.weights().iter().map(|x| x.to_bits()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn pred_rule_potentiates_during_consolidation() {
        // Hand-stepped oracle: delayed-copy neuron fired at t-1 (trace 1.0),
        // the prediction neuron fires at t. dW = eta * (1 - 0) * 1.0 = 0.1.
        let mut pre_traces = TraceState::new(1, 0.5).unwrap();
        pre_traces.decay_accumulate(&sp(1, &[0])).unwrap();

        let mut w = SynapseMatrix::zeros(1, 1, 0.0, 1.0, 1).unwrap();
        pred_update(
            &mut w,
            &sp(1, &[]),
            &pre_traces,
            &sp(1, &[0]),
            &tr(&[0.0]),
            Modulator::consolidation(),
            &cfg(),
        )
        .unwrap();
        assert_eq!(w.get(0, 0), 0.1);
    }

    #[test]
    fn all_zero_activity_is_a_no_op() {
        let mut w = SynapseMatrix::zeros(3, 3, 0.0, 1.0, 1).unwrap();
        w.set(0, 2, 0.4);
        let before = w.weights().to_vec();
        pred_update(
            &mut w,
            &sp(3, &[]),
            &tr(&[0.1, 0.2, 0.3]),
            &sp(3, &[]),
            &tr(&[0.3, 0.2, 0.1]),
            Modulator::consolidation(),
            &cfg(),
        )
        .unwrap();
        assert_eq!(w.weights(), &before[..]);
    }

    #[test]
    fn clip_examples() {
        let mut w = SynapseMatrix::zeros(1, 3, 0.0, 1.0, 1).unwrap();
        w.weights_mut().copy_from_slice(&[1.7, -0.3, 0.5]);
        clip_weights(&mut w);
        assert_eq!(w.weights(), &[1.0, 0.0, 0.5]);
    }

    #[test]
    fn delta_depends_only_on_local_pair() {
        // Perturbing unrelated neurons must not change dW[0][1].
        let update = |tr2: f64, sp2: bool| {
            let mut w = SynapseMatrix::zeros(3, 3, -10.0, 10.0, 1).unwrap();
            let mut spikes = sp(3, &[0]);
            spikes.bits[2] = sp2;
            stdp_update(
                &mut w,
                &spikes,
                &tr(&[0.8, 0.0, tr2]),
                &sp(3, &[1]),
                &tr(&[0.0, 0.2, tr2]),
                Modulator::online(),
                &cfg(),
                true,
            )
            .unwrap();
            w.get(0, 1).to_bits()
        };
        let base = update(0.0, false);
        assert_eq!(base, update(0.9, true));
        assert_eq!(base, update(0.3, false));
    }

    #[test]
    fn ordered_pairings_potentiate_forward_and_clip_reverse_at_floor() {
        // Two-neuron chain stepped with the full per-step order: fire, update
        // weights using previous traces, then decay traces. Neuron 0 is driven
        // one step before neuron 1, repeatedly.
        let c = cfg();
        let mut w = SynapseMatrix::zeros(2, 2, 0.0, 1.0, 1).unwrap();
        let mut traces = TraceState::new(2, 0.5).unwrap();
        for pair in 0..5 {
            for (a, b) in [(true, false), (false, true), (false, false)] {
                let spikes = SpikeVector {
                    bits: vec![a, b],
                    time: pair * 3,
                };
                stdp_update(&mut w, &spikes, &traces.clone(), &spikes, &traces, Modulator::online(), &c, true)
                    .unwrap();
                traces.decay_accumulate(&spikes).unwrap();
            }
        }
        assert!(w.get(0, 1) > 0.0, "forward weight potentiated");
        assert_eq!(w.get(1, 0), 0.0, "reverse weight pinned at the floor");
    }

    proptest! {
        /// Swapping the (spike, trace) tuples of pre and post negates the
        /// raw update for every synapse (checked with bounds wide enough
        /// that clipping never engages).
        #[test]
        fn update_is_antisymmetric(
            pre_sp in proptest::collection::vec(any::<bool>(), 3),
            post_sp in proptest::collection::vec(any::<bool>(), 3),
            pre_tr in proptest::collection::vec(0.0f64..2.0, 3),
            post_tr in proptest::collection::vec(0.0f64..2.0, 3),
        ) {
            let c = PlasticityConfig { learning_rate: 0.1, trace_decay: 0.5, w_min: -1e9, w_max: 1e9 };
            let a = SpikeVector { bits: pre_sp.clone(), time: 0 };
            let b = SpikeVector { bits: post_sp.clone(), time: 0 };
            let ta = tr(&pre_tr);
            let tb = tr(&post_tr);

            let mut w1 = SynapseMatrix::zeros(3, 3, c.w_min, c.w_max, 1).unwrap();
            stdp_update(&mut w1, &a, &ta, &b, &tb, Modulator::online(), &c, false).unwrap();
            let mut w2 = SynapseMatrix::zeros(3, 3, c.w_min, c.w_max, 1).unwrap();
            stdp_update(&mut w2, &b, &tb, &a, &ta, Modulator::online(), &c, false).unwrap();

            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(w1.get(i, j), -w2.get(j, i));
                }
            }
        }

        /// Weights stay inside their bounds after any update sequence.
        #[test]
        fn weights_stay_bounded(
            steps in proptest::collection::vec(
                (proptest::collection::vec(any::<bool>(), 3),
                 proptest::collection::vec(any::<bool>(), 3)),
                1..40,
            ),
        ) {
            let c = PlasticityConfig { learning_rate: 0.5, trace_decay: 0.7, w_min: 0.0, w_max: 0.3 };
            let mut w = SynapseMatrix::zeros(3, 3, c.w_min, c.w_max, 1).unwrap();
            let mut pre_t = TraceState::new(3, c.trace_decay).unwrap();
            let mut post_t = TraceState::new(3, c.trace_decay).unwrap();
            for (t, (a, b)) in steps.into_iter().enumerate() {
                let a = SpikeVector { bits: a, time: t as u64 };
                let b = SpikeVector { bits: b, time: t as u64 };
                stdp_update(&mut w, &a, &pre_t, &b, &post_t, Modulator::online(), &c, false).unwrap();
                pre_t.decay_accumulate(&a).unwrap();
                post_t.decay_accumulate(&b).unwrap();
            }
            for &x in w.weights() {
                prop_assert!((c.w_min..=c.w_max).contains(&x));
            }
        }
    }
}
