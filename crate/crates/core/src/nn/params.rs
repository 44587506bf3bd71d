use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::Array;
use crate::error::{dim, Result};

/// A named trainable array. `decay` marks weight matrices that take part
/// in the L2 penalty (biases do not).
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Array,
    pub decay: bool,
}

/// Ordered collection of parameters; tape variables and gradient slots
/// refer to parameters by position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    params: Vec<Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a parameter and returns its index.
    pub fn push(&mut self, name: impl Into<String>, value: Array, decay: bool) -> usize {
        self.params.push(Param { name: name.into(), value, decay });
        self.params.len() - 1
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, i: usize) -> &Array {
        &self.params[i].value
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Array {
        &mut self.params[i].value
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn total_len(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Replaces every value from `other`, which must have the same names and
    /// shapes in the same order.
    pub fn assign(&mut self, other: &[(String, Array)]) -> Result<()> {
        if other.len() != self.params.len() {
            return Err(dim(format!("expected {} parameters, got {}", self.params.len(), other.len())));
        }
        for (p, (name, value)) in self.params.iter().zip(other) {
            if &p.name != name || p.value.shape() != value.shape() {
                return Err(dim(format!("parameter {} {:?} does not match {name} {:?}", p.name, p.value.shape(), value.shape())));
            }
        }
        for (p, (_, value)) in self.params.iter_mut().zip(other) {
            p.value = value.clone();
        }
        Ok(())
    }

    pub fn named(&self) -> Vec<(String, Array)> {
        self.params.iter().map(|p| (p.name.clone(), p.value.clone())).collect()
    }

    /// Clamps every entry of every parameter into `[-c, c]`.
    pub fn clamp(&mut self, c: f64) {
        for p in &mut self.params {
            for x in p.value.data_mut() {
                *x = x.clamp(-c, c);
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.params.iter().fold(0.0, |m, p| m.max(p.value.max_abs()))
    }
}

/// Gradient slots, one per parameter, same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    slots: Vec<Array>,
}

impl Grads {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Self { slots: params.iter().map(|p| Array::zeros(p.value.shape())).collect() }
    }

    pub fn get(&self, i: usize) -> &Array {
        &self.slots[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Array {
        &mut self.slots[i]
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Array> {
        self.slots.iter()
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Grads, scale: f64) {
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.slots {
            for x in a.data_mut() {
                *x *= s;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.slots.iter().map(Array::sum_squares).sum())
    }

    /// Flattened view across all slots in parameter order.
    pub fn flatten(&self) -> Vec<f64> {
        self.slots.iter().flat_map(|a| a.data().iter().copied()).collect()
    }
}
