use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use super::{Element, Tensor};
use crate::error::{Error, Result};
use crate::param::ParamId;

/// Computes the gradient of each parent from the gradient of the node's output.
/// `needs[i]` tells whether parent `i` requires a gradient at all.
pub(crate) type BackwardFn<T> = Box<dyn Fn(&Tensor<T>, &[bool]) -> Vec<Option<Tensor<T>>>>;

struct Node<T: Element> {
    value: Rc<Tensor<T>>,
    parents: Vec<usize>,
    backward: Option<BackwardFn<T>>,
    requires_grad: bool,
}

/// Linear record of the operations of one forward pass.
///
/// Nodes are appended in execution order, so the record is topologically
/// sorted by construction. A tape runs backward once; call [`Tape::reset`] to
/// reuse it.
pub struct Tape<T: Element = f32> {
    nodes: RefCell<Vec<Node<T>>>,
    params: RefCell<Vec<(usize, ParamId)>>,
    consumed: Cell<bool>,
}

impl<T: Element> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Element> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
            params: RefCell::new(Vec::new()),
            consumed: Cell::new(false),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn reset(&mut self) {
        self.nodes.get_mut().clear();
        self.params.get_mut().clear();
        self.consumed.set(false);
    }

    /// A leaf that receives a gradient.
    pub fn leaf(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push_node(Rc::new(value), Vec::new(), None, true)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push_node(Rc::new(value), Vec::new(), None, false)
    }

    pub(crate) fn param_leaf(&self, value: Tensor<T>, id: ParamId) -> Var<'_, T> {
        let var = self.leaf(value);
        self.params.borrow_mut().push((var.id, id));
        var
    }

    fn push_node(
        &self,
        value: Rc<Tensor<T>>,
        parents: Vec<usize>,
        backward: Option<BackwardFn<T>>,
        requires_grad: bool,
    ) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            value,
            parents,
            backward,
            requires_grad,
        });
        Var { tape: self, id }
    }

    /// Records an operation. The backward closure is dropped when no parent
    /// requires a gradient.
    pub(crate) fn record(
        &self,
        value: Tensor<T>,
        parents: &[Var<'_, T>],
        backward: BackwardFn<T>,
    ) -> Var<'_, T> {
        let requires_grad = {
            let nodes = self.nodes.borrow();
            parents.iter().any(|p| {
                debug_assert!(std::ptr::eq(p.tape, self), "mixing vars across tapes");
                nodes[p.id].requires_grad
            })
        };
        let ids = parents.iter().map(|p| p.id).collect();
        let backward = requires_grad.then_some(backward);
        self.push_node(Rc::new(value), ids, backward, requires_grad)
    }

    fn value_of(&self, id: usize) -> Rc<Tensor<T>> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }

    /// Reverse sweep from a scalar `loss`. Each node is visited exactly once, in
    /// reverse recording order; gradients of nodes used more than once are summed.
    pub fn backward(&self, loss: &Var<'_, T>) -> Result<Gradients<T>> {
        if !std::ptr::eq(loss.tape, self) {
            return Err(Error::Contract(
                "loss was not recorded on this tape".to_string(),
            ));
        }
        if self.consumed.get() {
            return Err(Error::State(
                "backward already ran on this tape; reset it first".to_string(),
            ));
        }
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.id];
        if root.value.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                root.value.shape()
            )));
        }
        self.consumed.set(true);

        let mut grads: Vec<Option<Tensor<T>>> = (0..=loss.id).map(|_| None).collect();
        grads[loss.id] = Some(Tensor::ones(root.value.shape()));
        let mut leaves = HashMap::new();

        for id in (0..=loss.id).rev() {
            let Some(grad) = grads[id].take() else {
                continue;
            };
            let node = &nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(backward) = &node.backward else {
                leaves.insert(id, grad);
                continue;
            };
            let needs: Vec<bool> = node
                .parents
                .iter()
                .map(|&p| nodes[p].requires_grad)
                .collect();
            let parent_grads = backward(&grad, &needs);
            debug_assert_eq!(parent_grads.len(), node.parents.len());
            for ((&pid, pg), need) in node.parents.iter().zip(parent_grads).zip(needs) {
                let Some(pg) = pg else { continue };
                if !need {
                    continue;
                }
                match &mut grads[pid] {
                    Some(acc) => acc
                        .add_assign(&pg)
                        .expect("backward rule produced a gradient of the wrong shape"),
                    slot @ None => *slot = Some(pg),
                }
            }
        }

        Ok(Gradients {
            leaves,
            params: self.params.borrow().clone(),
        })
    }
}

/// Gradients of leaves reachable from the loss.
pub struct Gradients<T: Element = f32> {
    leaves: HashMap<usize, Tensor<T>>,
    params: Vec<(usize, ParamId)>,
}

impl<T: Element> Gradients<T> {
    /// Gradient of the loss w.r.t. `var`, or `None` when the loss does not depend on it.
    pub fn get(&self, var: &Var<'_, T>) -> Option<&Tensor<T>> {
        self.leaves.get(&var.id)
    }

    /// Gradient w.r.t. `var`, zero-filled if unreachable.
    pub fn wrt(&self, var: &Var<'_, T>) -> Tensor<T> {
        self.get(var)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(var.value().shape()))
    }

    pub(crate) fn param_grads(&self) -> impl Iterator<Item = (ParamId, Option<&Tensor<T>>)> + '_ {
        self.params
            .iter()
            .map(|(node, pid)| (*pid, self.leaves.get(node)))
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t, T: Element = f32> {
    pub(crate) tape: &'t Tape<T>,
    pub(crate) id: usize,
}

impl<'t, T: Element> Var<'t, T> {
    pub fn value(&self) -> Rc<Tensor<T>> {
        self.tape.value_of(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.id].requires_grad
    }

    /// Same value, cut from the graph.
    pub fn detach(&self) -> Var<'t, T> {
        self.tape.constant((*self.value()).clone())
    }
}

impl<T: Element> fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{} {:?}", self.id, self.value())
    }
}
