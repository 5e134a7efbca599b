use std::collections::VecDeque;

use nalgebra::DVector;

use crate::error::Result;
use crate::plant::samples_for;

/// What an agent broadcasts each step: its plant state and control action.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub state: DVector<f64>,
    pub control: f64,
}

impl Message {
    pub fn zero(dim: usize) -> Self {
        Self {
            state: DVector::zeros(dim),
            control: 0.0,
        }
    }
}

/// Fixed-length FIFO delaying messages by a whole number of steps.
#[derive(Debug, Clone)]
pub struct DelayedChannel {
    buffer: VecDeque<Message>,
    steps: usize,
}

impl DelayedChannel {
    /// A channel whose warm-up output is `initial`.
    pub fn new(steps: usize, initial: Message) -> Self {
        Self {
            buffer: VecDeque::from(vec![initial; steps]),
            steps,
        }
    }

    /// `delay` must be a multiple of `dt`. Warm-up output is the zero message.
    pub fn with_delay(delay: f64, dt: f64, dim: usize) -> Result<Self> {
        Ok(Self::new(samples_for(delay, dt, "delay")?, Message::zero(dim)))
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Inserts `sample` and returns the one pushed `steps` calls ago.
    pub fn push_pop(&mut self, sample: Message) -> Message {
        if self.steps == 0 {
            return sample;
        }
        self.buffer.push_back(sample);
        self.buffer.pop_front().expect("buffer holds `steps` messages")
    }
}
