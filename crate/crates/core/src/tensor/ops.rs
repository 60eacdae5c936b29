//! Elementwise arithmetic, reductions and reshapes on [`Var`].
//!
//! Binary ops accept operands of identical shape, or one operand holding a
//! single element which is broadcast.

use super::{Element, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BinaryKind {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryKind {
    fn name(self) -> &'static str {
        match self {
            BinaryKind::Add => "add",
            BinaryKind::Sub => "sub",
            BinaryKind::Mul => "mul",
            BinaryKind::Div => "div",
        }
    }

    fn apply<T: Element>(self, a: T, b: T) -> T {
        match self {
            BinaryKind::Add => a + b,
            BinaryKind::Sub => a - b,
            BinaryKind::Mul => a * b,
            BinaryKind::Div => a / b,
        }
    }
}

/// Result shape of a binary op, or a shape error naming both operands.
fn broadcast_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let na: usize = a.iter().product();
    let nb: usize = b.iter().product();
    if a == b || nb == 1 {
        Ok(a.to_vec())
    } else if na == 1 {
        Ok(b.to_vec())
    } else {
        Err(Error::shape(op, a, b))
    }
}

/// Reduces a full-size gradient back onto an operand that may have been broadcast.
fn unbroadcast<T: Element>(grad: Tensor<T>, shape: &[usize]) -> Tensor<T> {
    if grad.shape() == shape {
        grad
    } else {
        Tensor::full(shape, grad.sum())
    }
}

impl<'t, T: Element> Var<'t, T> {
    fn binary(&self, other: &Var<'t, T>, kind: BinaryKind) -> Result<Var<'t, T>> {
        let a = self.value();
        let b = other.value();
        let shape = broadcast_shape(kind.name(), a.shape(), b.shape())?;
        let n: usize = shape.iter().product();
        let (sa, sb) = (a.numel() == 1 && n != 1, b.numel() == 1 && n != 1);
        let av = a.data();
        let bv = b.data();
        let data: Vec<T> = (0..n)
            .map(|i| {
                let x = if sa { av[0] } else { av[i] };
                let y = if sb { bv[0] } else { bv[i] };
                kind.apply(x, y)
            })
            .collect();
        let out = Tensor::new(&shape, data)?;
        let (a_shape, b_shape) = (a.shape().to_vec(), b.shape().to_vec());
        Ok(self.tape.record(
            out,
            &[*self, *other],
            Box::new(move |g, needs| {
                let gv = g.data();
                let pick = |t: &Tensor<T>, scalar: bool, i: usize| {
                    if scalar {
                        t.data()[0]
                    } else {
                        t.data()[i]
                    }
                };
                let ga = needs[0].then(|| {
                    let d: Vec<T> = (0..gv.len())
                        .map(|i| match kind {
                            BinaryKind::Add | BinaryKind::Sub => gv[i],
                            BinaryKind::Mul => gv[i] * pick(&b, sb, i),
                            BinaryKind::Div => gv[i] / pick(&b, sb, i),
                        })
                        .collect();
                    unbroadcast(Tensor::new(g.shape(), d).unwrap(), &a_shape)
                });
                let gb = needs[1].then(|| {
                    let d: Vec<T> = (0..gv.len())
                        .map(|i| match kind {
                            BinaryKind::Add => gv[i],
                            BinaryKind::Sub => -gv[i],
                            BinaryKind::Mul => gv[i] * pick(&a, sa, i),
                            BinaryKind::Div => {
                                let y = pick(&b, sb, i);
                                -gv[i] * pick(&a, sa, i) / (y * y)
                            }
                        })
                        .collect();
                    unbroadcast(Tensor::new(g.shape(), d).unwrap(), &b_shape)
                });
                vec![ga, gb]
            }),
        ))
    }

    pub fn add(&self, other: &Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(other, BinaryKind::Add)
    }

    pub fn sub(&self, other: &Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(other, BinaryKind::Sub)
    }

    pub fn mul(&self, other: &Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(other, BinaryKind::Mul)
    }

    pub fn div(&self, other: &Var<'t, T>) -> Result<Var<'t, T>> {
        self.binary(other, BinaryKind::Div)
    }

    /// Pointwise map with derivative `df(x, f(x))`.
    pub(crate) fn unary(&self, f: impl Fn(T) -> T, df: impl Fn(T, T) -> T + 'static) -> Var<'t, T> {
        let x = self.value();
        let y = x.map(f);
        let saved_y = y.clone();
        self.tape.record(
            y,
            &[*self],
            Box::new(move |g, _| {
                let d: Vec<T> = g
                    .data()
                    .iter()
                    .zip(x.data())
                    .zip(saved_y.data())
                    .map(|((&g, &x), &y)| g * df(x, y))
                    .collect();
                vec![Some(Tensor::new(g.shape(), d).unwrap())]
            }),
        )
    }

    pub fn neg(&self) -> Var<'t, T> {
        self.unary(|x| -x, |_, _| -T::one())
    }

    pub fn scale(&self, c: T) -> Var<'t, T> {
        self.unary(move |x| x * c, move |_, _| c)
    }

    pub fn add_scalar(&self, c: T) -> Var<'t, T> {
        self.unary(move |x| x + c, |_, _| T::one())
    }

    pub fn square(&self) -> Var<'t, T> {
        self.unary(|x| x * x, |x, _| x + x)
    }

    pub fn exp(&self) -> Var<'t, T> {
        self.unary(|x| x.exp(), |_, y| y)
    }

    pub fn ln(&self) -> Var<'t, T> {
        self.unary(|x| x.ln(), |x, _| x.recip())
    }

    /// Clamps into `[lo, hi]`; the gradient is zero where the input was clipped.
    pub fn clamp(&self, lo: T, hi: T) -> Var<'t, T> {
        self.unary(
            move |x| x.max(lo).min(hi),
            move |x, _| {
                if x < lo || x > hi {
                    T::zero()
                } else {
                    T::one()
                }
            },
        )
    }

    /// Sum of all elements, as a shape-`[1]` tensor.
    pub fn sum(&self) -> Var<'t, T> {
        let x = self.value();
        let shape = x.shape().to_vec();
        self.tape.record(
            Tensor::scalar(x.sum()),
            &[*self],
            Box::new(move |g, _| vec![Some(Tensor::full(&shape, g.data()[0]))]),
        )
    }

    pub fn mean(&self) -> Var<'t, T> {
        let n = T::of(self.value().numel() as f64);
        self.sum().scale(n.recip())
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Var<'t, T>> {
        let x = self.value();
        let out = x.reshape(shape)?;
        let in_shape = x.shape().to_vec();
        Ok(self.tape.record(
            out,
            &[*self],
            Box::new(move |g, _| vec![Some(g.reshape(&in_shape).unwrap())]),
        ))
    }

    /// Collapses all axes after the first.
    pub fn flatten(&self) -> Result<Var<'t, T>> {
        let shape = self.shape();
        let b = shape.first().copied().unwrap_or(1);
        let rest = shape.iter().skip(1).product();
        self.reshape(&[b, rest])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tape;

    fn t(shape: &[usize], v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(shape, v).unwrap()
    }

    #[test]
    fn add_vectors() {
        let tape = Tape::new();
        let a = tape.constant(t(&[2], &[1.0, 2.0]));
        let b = tape.constant(t(&[2], &[3.0, 4.0]));
        assert_eq!(a.add(&b).unwrap().value().data(), &[4.0, 6.0]);
    }

    #[test]
    fn mul_by_scalar_zero() {
        let tape = Tape::new();
        let a = tape.constant(t(&[2], &[2.0, 3.0]));
        let z = tape.constant(Tensor::scalar(0.0));
        assert_eq!(a.mul(&z).unwrap().value().data(), &[0.0, 0.0]);
    }

    #[test]
    fn sub_self_has_zero_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(t(&[3], &[1.0, -2.0, 5.0]));
        let d = x.sub(&x).unwrap();
        assert_eq!(d.value().data(), &[0.0, 0.0, 0.0]);
        let grads = tape.backward(&d.sum()).unwrap();
        assert_eq!(grads.wrt(&x).data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let tape = Tape::new();
        let a = tape.constant(Tensor::<f64>::zeros(&[2, 3]));
        let b = tape.constant(Tensor::<f64>::zeros(&[3, 2]));
        let msg = a.add(&b).unwrap_err().to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[3, 2]"), "{msg}");
    }

    #[test]
    fn sum_of_squares_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(t(&[1], &[3.0]));
        let loss = x.mul(&x).unwrap().sum();
        let grads = tape.backward(&loss).unwrap();
        assert_eq!(grads.wrt(&x).data(), &[6.0]);
    }

    #[test]
    fn mean_gradient_is_uniform() {
        let tape = Tape::new();
        let x = tape.leaf(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]));
        let grads = tape.backward(&x.mean()).unwrap();
        assert_eq!(grads.wrt(&x).data(), &[0.25; 4]);
    }

    #[test]
    fn scalar_broadcast_gradient_sums() {
        let tape = Tape::new();
        let x = tape.leaf(t(&[3], &[1.0, 2.0, 3.0]));
        let s = tape.leaf(Tensor::scalar(2.0));
        let loss = x.mul(&s).unwrap().sum();
        let grads = tape.backward(&loss).unwrap();
        assert_eq!(grads.wrt(&s).data(), &[6.0]);
        assert_eq!(grads.wrt(&x).data(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn two_uses_of_x_sum_path_contributions() {
        // f(x) = x*x + 3x  =>  f'(x) = 2x + 3
        let tape = Tape::new();
        let x = tape.leaf(t(&[2], &[1.5, -4.0]));
        let f = x.mul(&x).unwrap().add(&x.scale(3.0)).unwrap().sum();
        let grads = tape.backward(&f).unwrap();
        assert_eq!(grads.wrt(&x).data(), &[6.0, -5.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_and_second_call() {
        let tape = Tape::new();
        let x = tape.leaf(t(&[2], &[1.0, 2.0]));
        assert!(matches!(tape.backward(&x), Err(Error::Contract(_))));
        let loss = x.sum();
        tape.backward(&loss).unwrap();
        assert!(matches!(tape.backward(&loss), Err(Error::State(_))));
    }

    #[test]
    fn reset_allows_reuse() {
        let mut tape = Tape::<f64>::new();
        {
            let x = tape.leaf(Tensor::scalar(1.0));
            tape.backward(&x.sum()).unwrap();
        }
        tape.reset();
        let x = tape.leaf(Tensor::scalar(2.0));
        let g = tape.backward(&x.square().sum()).unwrap();
        assert_eq!(g.wrt(&x).data(), &[4.0]);
    }

    #[test]
    fn constants_get_no_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(t(&[1], &[2.0]));
        let c = tape.constant(t(&[1], &[5.0]));
        let g = tape.backward(&x.mul(&c).unwrap().sum()).unwrap();
        assert!(g.get(&c).is_none());
        assert_eq!(g.wrt(&x).data(), &[5.0]);
    }
}
