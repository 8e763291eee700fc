use crate::{Error, Result};

/// Named dense tensor of f64 values.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(name: &str, shape: &[usize]) -> Self {
        Self {
            name: name.to_string(),
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }
}

/// Ordered collection of parameter tensors. Gradients and optimizer
/// moments use the same layout.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    pub tensors: Vec<Tensor>,
}

impl Params {
    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor::zeros(&t.name, &t.shape))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn numel(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    #[inline]
    pub fn data(&self, i: usize) -> &[f64] {
        &self.tensors[i].data
    }

    #[inline]
    pub fn data_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.tensors[i].data
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape)
    }

    pub fn check_layout(&self, other: &Self) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::Usage("parameter layouts differ".into()))
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in &mut self.tensors {
            t.data.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Name of the first tensor holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<&str> {
        self.tensors
            .iter()
            .find(|t| t.data.iter().any(|x| !x.is_finite()))
            .map(|t| t.name.as_str())
    }

    /// Flat coordinate access across tensors.
    pub fn get_flat(&self, mut idx: usize) -> f64 {
        for t in &self.tensors {
            if idx < t.data.len() {
                return t.data[idx];
            }
            idx -= t.data.len();
        }
        panic!("flat index out of range")
    }

    pub fn set_flat(&mut self, mut idx: usize, v: f64) {
        for t in &mut self.tensors {
            if idx < t.data.len() {
                t.data[idx] = v;
                return;
            }
            idx -= t.data.len();
        }
        panic!("flat index out of range")
    }
}
