//! Named trainable parameters and their gradients.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tensor::{Element, Gradients, Tape, Tensor, Var};

/// Handle to a parameter, tagged with the store that issued it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId {
    store: u64,
    index: usize,
}

impl ParamId {
    pub fn index(self) -> usize {
        self.index
    }
}

fn next_store_tag() -> u64 {
    static NEXT: AtomicU64 = AtomicU64::new(1);
    NEXT.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Debug)]
pub struct Parameter<T: Element = f32> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

/// Owns every parameter of one model, in registration order.
#[derive(Clone, Debug)]
pub struct ParamStore<T: Element = f32> {
    tag: u64,
    params: Vec<Parameter<T>>,
    grads_ready: bool,
}

impl<T: Element> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Element> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            tag: next_store_tag(),
            params: Vec::new(),
            grads_ready: false,
        }
    }

    pub fn register(&mut self, name: impl Into<String>, value: Tensor<T>) -> ParamId {
        let grad = Tensor::zeros(value.shape());
        self.params.push(Parameter {
            name: name.into(),
            value,
            grad,
        });
        ParamId {
            store: self.tag,
            index: self.params.len() - 1,
        }
    }

    fn id(&self, index: usize) -> ParamId {
        ParamId {
            store: self.tag,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.params[id.index]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<T> {
        &mut self.params[id.index]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter<T>)> {
        self.params
            .iter()
            .enumerate()
            .map(|(index, p)| (self.id(index), p))
    }

    pub fn by_name(&self, name: &str) -> Option<ParamId> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .map(|i| self.id(i))
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.numel()).sum()
    }

    /// Overwrites every gradient: reachable parameters get their tape gradient,
    /// the rest get zeros. Gradients of other stores sharing the tape are ignored.
    pub fn set_grads(&mut self, grads: &Gradients<T>) {
        for p in &mut self.params {
            p.grad = Tensor::zeros(p.value.shape());
        }
        for (id, g) in grads.param_grads() {
            if let (true, Some(g)) = (id.store == self.tag, g) {
                self.params[id.index]
                    .grad
                    .add_assign(g)
                    .expect("gradient shape matches its parameter");
            }
        }
        self.grads_ready = true;
    }

    pub fn grads_ready(&self) -> bool {
        self.grads_ready
    }

    /// Hands the parameters to an optimizer, consuming the fresh gradients.
    pub(crate) fn take_for_update(&mut self) -> Result<&mut [Parameter<T>]> {
        if !self.grads_ready {
            return Err(Error::State(
                "optimizer step before backward: gradients are stale".to_string(),
            ));
        }
        self.grads_ready = false;
        Ok(&mut self.params)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad = Tensor::zeros(p.value.shape());
        }
        self.grads_ready = false;
    }

    pub fn cast<U: Element>(&self) -> ParamStore<U> {
        ParamStore {
            tag: self.tag,
            params: self
                .params
                .iter()
                .map(|p| Parameter {
                    name: p.name.clone(),
                    value: p.value.cast(),
                    grad: p.grad.cast(),
                })
                .collect(),
            grads_ready: false,
        }
    }
}

/// Binds a [`ParamStore`] to a [`Tape`] for one forward pass. Each parameter is
/// recorded once, on first use.
pub struct Session<'t, T: Element = f32> {
    tape: &'t Tape<T>,
    store: &'t ParamStore<T>,
    trainable: bool,
    bound: RefCell<HashMap<ParamId, Var<'t, T>>>,
}

impl<'t, T: Element> Session<'t, T> {
    /// Parameters receive gradients.
    pub fn new(tape: &'t Tape<T>, store: &'t ParamStore<T>) -> Self {
        Session {
            tape,
            store,
            trainable: true,
            bound: RefCell::new(HashMap::new()),
        }
    }

    /// Parameters enter the tape as constants.
    pub fn frozen(tape: &'t Tape<T>, store: &'t ParamStore<T>) -> Self {
        Session {
            trainable: false,
            ..Session::new(tape, store)
        }
    }

    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn param(&self, id: ParamId) -> Var<'t, T> {
        *self.bound.borrow_mut().entry(id).or_insert_with(|| {
            let value = self.store.get(id).value.clone();
            if self.trainable {
                self.tape.param_leaf(value, id)
            } else {
                self.tape.constant(value)
            }
        })
    }
}

/// Kaiming-normal weights with standard deviation `sqrt(2 / fan_in)`.
pub fn kaiming_normal<T: Element, R: Rng + ?Sized>(
    shape: &[usize],
    fan_in: usize,
    rng: &mut R,
) -> Tensor<T> {
    let std = (2.0 / fan_in.max(1) as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("positive std");
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::of(normal.sample(rng))).collect();
    Tensor::new(shape, data).expect("length matches shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unreachable_params_get_zero_grad() {
        let mut store = ParamStore::<f64>::new();
        let a = store.register("a", Tensor::full(&[2], 3.0));
        let b = store.register("b", Tensor::full(&[2], 1.0));
        store.get_mut(b).grad = Tensor::full(&[2], 9.0);
        let tape = Tape::new();
        let grads = {
            let s = Session::new(&tape, &store);
            let loss = s.param(a).square().sum();
            tape.backward(&loss).unwrap()
        };
        store.set_grads(&grads);
        assert_eq!(store.get(a).grad.data(), &[6.0, 6.0]);
        assert_eq!(store.get(b).grad.data(), &[0.0, 0.0]);
    }

    #[test]
    fn param_bound_once_per_session() {
        let mut store = ParamStore::<f64>::new();
        let a = store.register("a", Tensor::full(&[1], 2.0));
        let tape = Tape::new();
        let s = Session::new(&tape, &store);
        let x = s.param(a);
        let y = s.param(a);
        assert_eq!(x.id, y.id);
        let grads = tape.backward(&x.mul(&y).unwrap().sum()).unwrap();
        drop(s);
        store.set_grads(&grads);
        assert_eq!(store.get(a).grad.data(), &[4.0]);
    }

    #[test]
    fn two_stores_share_a_tape() {
        let mut first = ParamStore::<f64>::new();
        let a = first.register("w", Tensor::full(&[1], 2.0));
        let mut second = ParamStore::<f64>::new();
        let b = second.register("w", Tensor::full(&[1], 5.0));
        let tape = Tape::new();
        let grads = {
            let (s1, s2) = (Session::new(&tape, &first), Session::new(&tape, &second));
            let loss = s1
                .param(a)
                .scale(3.0)
                .add(&s2.param(b).scale(7.0))
                .unwrap()
                .sum();
            tape.backward(&loss).unwrap()
        };
        first.set_grads(&grads);
        second.set_grads(&grads);
        assert_eq!(first.get(a).grad.data(), &[3.0]);
        assert_eq!(second.get(b).grad.data(), &[7.0]);
    }

    #[test]
    fn frozen_session_records_constants() {
        let mut store = ParamStore::<f64>::new();
        let a = store.register("a", Tensor::full(&[1], 2.0));
        let tape = Tape::new();
        let s = Session::frozen(&tape, &store);
        assert!(!s.param(a).requires_grad());
    }

    #[test]
    fn kaiming_scale_is_plausible() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w: Tensor<f64> = kaiming_normal(&[64, 64, 3, 3], 576, &mut rng);
        let var = w.data().iter().map(|v| v * v).sum::<f64>() / w.numel() as f64;
        assert!((var - 2.0 / 576.0).abs() < 0.1 * 2.0 / 576.0, "{var}");
    }
}
