use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor, Var};

/// Source (flat) index in the `(B, C*r*r, H, W)` input for every element of
/// the `(B, C, H*r, W*r)` output.
fn shuffle_map(b: usize, c_out: usize, h: usize, w: usize, r: usize) -> Vec<usize> {
    let (oh, ow) = (h * r, w * r);
    let c_in = c_out * r * r;
    let mut map = Vec::with_capacity(b * c_out * oh * ow);
    for n in 0..b {
        for c in 0..c_out {
            for y in 0..oh {
                for x in 0..ow {
                    let ic = c * r * r + (y % r) * r + (x % r);
                    map.push(((n * c_in + ic) * h + y / r) * w + x / r);
                }
            }
        }
    }
    map
}

/// Rearranges `(B, C*r^2, H, W)` into `(B, C, H*r, W*r)`.
pub fn pixel_shuffle<T: Element>(x: &Tensor<T>, r: usize) -> Result<Tensor<T>> {
    let (b, c, h, w) = x.dims4()?;
    check_factor(c, r, x.shape())?;
    let map = shuffle_map(b, c / (r * r), h, w, r);
    let data = map.iter().map(|&i| x.data()[i]).collect();
    Tensor::new(&[b, c / (r * r), h * r, w * r], data)
}

/// Inverse of [`pixel_shuffle`]: `(B, C, H*r, W*r)` into `(B, C*r^2, H, W)`.
pub fn pixel_unshuffle<T: Element>(x: &Tensor<T>, r: usize) -> Result<Tensor<T>> {
    let (b, c, oh, ow) = x.dims4()?;
    if r == 0 || oh % r != 0 || ow % r != 0 {
        return Err(Error::Contract(format!(
            "pixel_unshuffle by {r} needs spatial dims divisible by it, got {:?}",
            x.shape()
        )));
    }
    let (h, w) = (oh / r, ow / r);
    let map = shuffle_map(b, c, h, w, r);
    let mut data = vec![T::zero(); x.numel()];
    for (o, &i) in map.iter().enumerate() {
        data[i] = x.data()[o];
    }
    Tensor::new(&[b, c * r * r, h, w], data)
}

fn check_factor(c: usize, r: usize, shape: &[usize]) -> Result<()> {
    if r == 0 || !c.is_multiple_of(r * r) {
        return Err(Error::Shape {
            op: "pixel_shuffle",
            lhs: shape.to_vec(),
            rhs: vec![r * r],
        });
    }
    Ok(())
}

impl<'t, T: Element> Var<'t, T> {
    pub fn pixel_shuffle(&self, r: usize) -> Result<Var<'t, T>> {
        let x = self.value();
        let out = pixel_shuffle(&x, r)?;
        Ok(self.tape.record(
            out,
            &[*self],
            Box::new(move |g, _| vec![Some(pixel_unshuffle(g, r).unwrap())]),
        ))
    }
}
