use crate::tensor::{Element, Var};

/// ELU slope parameter for negative inputs.
pub const ELU_ALPHA: f64 = 1.0;

impl<'t, T: Element> Var<'t, T> {
    /// `x` for `x > 0`, `alpha * (e^x - 1)` otherwise. With `alpha = 1` the slope is continuous at 0; the curvature is not.
    pub fn elu(&self) -> Var<'t, T> {
        let alpha = T::of(ELU_ALPHA);
        self.unary(
            move |x| if x > T::zero() { x } else { alpha * x.exp_m1() },
            move |x, y| if x > T::zero() { T::one() } else { y + alpha },
        )
    }

    pub fn sigmoid(&self) -> Var<'t, T> {
        self.unary(
            |x| {
                // Split on sign so exp never overflows.
                if x >= T::zero() {
                    (T::one() + (-x).exp()).recip()
                } else {
                    let e = x.exp();
                    e / (T::one() + e)
                }
            },
            |_, y| y * (T::one() - y),
        )
    }
}
