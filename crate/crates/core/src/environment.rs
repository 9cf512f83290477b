//! Task generation: sparse pattern codebooks, ordered pattern sequences, and
//! timestep-resolved stimulus schedules. All construction is a pure function
//! of (seed, parameters).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type PatternId = usize;

/// Assignment of pattern ids to sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assignment {
    /// Each pattern id is used by exactly one sequence (default).
    Disjoint,
    /// Sequences may reuse pattern ids; for stress tests.
    Shared,
}

impl std::str::FromStr for Assignment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disjoint" => Ok(Assignment::Disjoint),
            "shared" => Ok(Assignment::Shared),
            other => Err(Error::config(
                "env.assignment",
                format!("expected `disjoint` or `shared`, got `{other}`"),
            )),
        }
    }
}

impl Assignment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Assignment::Disjoint => "disjoint",
            Assignment::Shared => "shared",
        }
    }
}

/// Pattern-to-neuron-subset assignments.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Sorted neuron indices, one entry per pattern id.
    pub patterns: Vec<Vec<usize>>,
}

impl Codebook {
    pub fn pattern(&self, id: PatternId) -> &[usize] {
        &self.patterns[id]
    }

    pub fn num_patterns(&self) -> usize {
        self.patterns.len()
    }

    /// External current vector that drives one pattern.
    pub fn stimulus(&self, id: PatternId, amplitude: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for &i in &self.patterns[id] {
            v[i] = amplitude;
        }
        v
    }

    /// One row per pattern: `id,index,index,...`
    pub fn to_table_text(&self) -> String {
        let mut out = String::new();
        for (id, p) in self.patterns.iter().enumerate() {
            out.push_str(&id.to_string());
            for i in p {
                out.push(',');
                out.push_str(&i.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Each pattern is an independent uniform random k-subset of `0..n`,
/// sampled without replacement within the pattern.
pub fn build_codebook(seed: u64, n: usize, k: usize, num_patterns: usize) -> Result<Codebook> {
    if k > n {
        return Err(Error::config(
            "env.pattern_size",
            format!("pattern size k={k} exceeds population size n={n}"),
        ));
    }
    if k == 0 {
        return Err(Error::config("env.pattern_size", "pattern size must be >= 1"));
    }
    if num_patterns == 0 {
        return Err(Error::config("env.num_sequences", "need at least one pattern"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns = (0..num_patterns)
        .map(|_| {
            let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect();
    Ok(Codebook {
        n,
        k,
        seed,
        patterns,
    })
}

/// Ordered pattern sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSet {
    pub sequences: Vec<Vec<PatternId>>,
    pub length: usize,
}

impl SequenceSet {
    /// All distinct pattern ids appearing in any sequence, ascending.
    pub fn all_pattern_ids(&self) -> Vec<PatternId> {
        let mut ids: Vec<PatternId> = self.sequences.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Position lookup: pattern id -> (sequence index, position).
    /// First occurrence wins under the shared policy.
    pub fn position_of(&self, id: PatternId) -> Option<(usize, usize)> {
        for (s, seq) in self.sequences.iter().enumerate() {
            if let Some(p) = seq.iter().position(|&x| x == id) {
                return Some((s, p));
            }
        }
        None
    }

    /// One row per sequence: ordered pattern ids, comma separated.
    pub fn to_table_text(&self) -> String {
        let mut out = String::new();
        for seq in &self.sequences {
            let row: Vec<String> = seq.iter().map(|id| id.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Partition (default) or sample pattern ids into ordered sequences.
pub fn build_sequences(
    seed: u64,
    codebook: &Codebook,
    num_sequences: usize,
    length: usize,
    assignment: Assignment,
) -> Result<SequenceSet> {
    let p = codebook.num_patterns();
    if length == 0 || num_sequences == 0 {
        return Err(Error::config(
            "env.sequence_length",
            "need at least one sequence of length >= 1",
        ));
    }
    match assignment {
        Assignment::Disjoint => {
            if num_sequences * length > p {
                return Err(Error::config(
                    "env.num_sequences",
                    format!(
                        "disjoint assignment needs {} patterns, codebook has {}",
                        num_sequences * length,
                        p
                    ),
                ));
            }
        }
        Assignment::Shared => {
            if length > p {
                return Err(Error::config(
                    "env.sequence_length",
                    format!("sequence length {length} exceeds codebook size {p}"),
                ));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sequences = match assignment {
        Assignment::Disjoint => {
            let mut ids: Vec<PatternId> = (0..p).collect();
            // Fisher-Yates, then chunk.
            for i in (1..p).rev() {
                let j = rng.gen_range(0..=i);
                ids.swap(i, j);
            }
            (0..num_sequences)
                .map(|s| ids[s * length..(s + 1) * length].to_vec())
                .collect()
        }
        Assignment::Shared => (0..num_sequences)
            .map(|_| rand::seq::index::sample(&mut rng, p, length).into_vec())
            .collect(),
    };
    Ok(SequenceSet { sequences, length })
}

/// One timed stimulus presentation.
#[derive(Clone, Debug, PartialEq)]
pub struct StimEvent {
    pub start: usize,
    pub duration: usize,
    pub pattern: PatternId,
    pub amplitude: f64,
}

impl StimEvent {
    pub fn end(&self) -> usize {
        self.start + self.duration
    }
}

/// Time-ordered, non-overlapping stimulus events plus gap bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct StimulusSchedule {
    pub events: Vec<StimEvent>,
    pub gap: usize,
    pub sequence_gap: usize,
    pub total_steps: usize,
}

impl StimulusSchedule {
    /// Event active at step `t`, if any. Events are sorted by start.
    pub fn event_at(&self, t: usize) -> Option<&StimEvent> {
        self.events
            .iter()
            .take_while(|e| e.start <= t)
            .find(|e| t < e.end())
    }
}

/// Presentation schedule: per repeat, per sequence, the sequence's patterns
/// in order for `d` steps each with `g` silent steps between patterns and
/// `g_seq` silent steps after each sequence.
pub fn schedule_online(
    seqs: &SequenceSet,
    d: usize,
    g: usize,
    g_seq: usize,
    repeats: usize,
    amplitude: f64,
) -> Result<StimulusSchedule> {
    if d == 0 {
        return Err(Error::config(
            "env.presentation_steps",
            "presentation duration must be >= 1",
        ));
    }
    if repeats == 0 {
        return Err(Error::config("env.repeats", "repeats must be >= 1"));
    }
    let mut events = Vec::new();
    let mut t = 0usize;
    for _ in 0..repeats {
        for seq in &seqs.sequences {
            for (i, &pid) in seq.iter().enumerate() {
                events.push(StimEvent {
                    start: t,
                    duration: d,
                    pattern: pid,
                    amplitude,
                });
                t += d;
                if i + 1 < seq.len() {
                    t += g;
                }
            }
            t += g_seq;
        }
    }
    Ok(StimulusSchedule {
        events,
        gap: g,
        sequence_gap: g_seq,
        total_steps: t,
    })
}

/// Uniform-with-replacement draws over all patterns appearing in `seqs`.
pub fn sample_replay_seeds(seqs: &SequenceSet, count: usize, seed: u64) -> Result<Vec<PatternId>> {
    let ids = seqs.all_pattern_ids();
    if ids.is_empty() {
        return Err(Error::config(
            "protocol.replay_count",
            "no patterns available for replay seeding",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| ids[rng.gen_range(0..ids.len())]).collect())
}
