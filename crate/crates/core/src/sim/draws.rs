//! Uniform random draws, one independent stream per node plus one for
//! deployment, so that the draws a node consumes never depend on what
//! other nodes or any logging did.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trust::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DrawStream {
    Setup,
    Node(NodeId),
}

/// Source of uniform draws in `[0, 1)`.
pub trait DrawSource {
    fn uniform(&mut self, stream: DrawStream) -> f64;
}

/// ChaCha streams derived from one seed.
#[derive(Debug, Clone)]
pub struct SeededDraws {
    setup: ChaCha8Rng,
    nodes: Vec<ChaCha8Rng>,
}

impl SeededDraws {
    pub fn new(seed: u64, node_count: usize) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        Self {
            setup: stream(0),
            nodes: (1..=node_count as u64).map(stream).collect(),
        }
    }
}

impl DrawSource for SeededDraws {
    fn uniform(&mut self, stream: DrawStream) -> f64 {
        match stream {
            DrawStream::Setup => self.setup.random(),
            DrawStream::Node(id) => self.nodes[id.index()].random(),
        }
    }
}

/// Pre-recorded draws for hand-traced scenarios.
///
/// Each stream replays its queue in order; an exhausted stream returns the
/// fallback value or panics when there is none.
#[derive(Debug, Clone, Default)]
pub struct ScriptedDraws {
    scripts: BTreeMap<DrawStream, VecDeque<f64>>,
    fallback: Option<f64>,
    consumed: Vec<(DrawStream, f64)>,
}

impl ScriptedDraws {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fallback(value: f64) -> Self {
        Self {
            fallback: Some(value),
            ..Self::default()
        }
    }

    pub fn push(&mut self, stream: DrawStream, values: impl IntoIterator<Item = f64>) -> &mut Self {
        self.scripts.entry(stream).or_default().extend(values);
        self
    }

    /// Every draw handed out so far, in order.
    pub fn consumed(&self) -> &[(DrawStream, f64)] {
        &self.consumed
    }

    pub fn remaining(&self, stream: DrawStream) -> usize {
        self.scripts.get(&stream).map_or(0, VecDeque::len)
    }
}

impl DrawSource for ScriptedDraws {
    fn uniform(&mut self, stream: DrawStream) -> f64 {
        let value = self
            .scripts
            .get_mut(&stream)
            .and_then(VecDeque::pop_front)
            .or(self.fallback)
            .unwrap_or_else(|| panic!("scripted draws exhausted for {stream:?}"));
        self.consumed.push((stream, value));
        value
    }
}
