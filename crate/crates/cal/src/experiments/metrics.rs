//! Small running-statistics helpers shared by the runners.

use std::collections::VecDeque;

/// Fixed-capacity sliding window over recent values.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    cap: usize,
    values: VecDeque<f64>,
}

impl SlidingWindow {
    pub fn new(cap: usize) -> Self {
        Self {
            cap,
            values: VecDeque::with_capacity(cap),
        }
    }

    pub fn push(&mut self, v: f64) {
        if self.values.len() == self.cap {
            self.values.pop_front();
        }
        self.values.push_back(v);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.values.len() == self.cap
    }

    /// Root-mean-square of the window contents.
    pub fn rms(&self) -> Option<f64> {
        if self.values.is_empty() {
            return None;
        }
        let sum_sq: f64 = self.values.iter().map(|v| v * v).sum();
        Some((sum_sq / self.values.len() as f64).sqrt())
    }

    pub fn mean(&self) -> Option<f64> {
        if self.values.is_empty() {
            return None;
        }
        Some(self.values.iter().sum::<f64>() / self.values.len() as f64)
    }
}

/// `Some(x)` formatted with fixed precision, `None` as an empty cell.
pub fn csv_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.6}"))
}
