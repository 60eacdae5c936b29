use crate::error::{Error, Result};
use crate::tensor::kernels::gemm;
use crate::tensor::{Element, Tensor, Var};

/// Pooling bin `[start, end)` of output cell `i` when mapping `input` onto `output` cells.
fn bin(i: usize, input: usize, output: usize) -> (usize, usize) {
    let start = i * input / output;
    let end = ((i + 1) * input).div_ceil(output);
    (start, end)
}

impl<'t, T: Element> Var<'t, T> {
    /// Adaptive average pooling to a fixed `(out_h, out_w)` grid.
    pub fn adaptive_avg_pool(&self, (out_h, out_w): (usize, usize)) -> Result<Var<'t, T>> {
        let x = self.value();
        let (b, c, h, w) = x.dims4()?;
        if out_h == 0 || out_w == 0 || out_h > h || out_w > w {
            return Err(Error::Contract(format!(
                "adaptive pool to {out_h}x{out_w} from {h}x{w}"
            )));
        }
        let mut out = Vec::with_capacity(b * c * out_h * out_w);
        for plane in x.data().chunks(h * w) {
            for oy in 0..out_h {
                let (y0, y1) = bin(oy, h, out_h);
                for ox in 0..out_w {
                    let (x0, x1) = bin(ox, w, out_w);
                    let mut acc = T::zero();
                    for y in y0..y1 {
                        for xx in x0..x1 {
                            acc = acc + plane[y * w + xx];
                        }
                    }
                    out.push(acc / T::of(((y1 - y0) * (x1 - x0)) as f64));
                }
            }
        }
        let out = Tensor::new(&[b, c, out_h, out_w], out)?;
        Ok(self.tape.record(
            out,
            &[*self],
            Box::new(move |g, _| {
                let mut dx = vec![T::zero(); b * c * h * w];
                for (p, gp) in g.data().chunks(out_h * out_w).enumerate() {
                    let plane = &mut dx[p * h * w..(p + 1) * h * w];
                    for oy in 0..out_h {
                        let (y0, y1) = bin(oy, h, out_h);
                        for ox in 0..out_w {
                            let (x0, x1) = bin(ox, w, out_w);
                            let share = gp[oy * out_w + ox] / T::of(((y1 - y0) * (x1 - x0)) as f64);
                            for y in y0..y1 {
                                for xx in x0..x1 {
                                    plane[y * w + xx] = plane[y * w + xx] + share;
                                }
                            }
                        }
                    }
                }
                vec![Some(Tensor::new(&[b, c, h, w], dx).unwrap())]
            }),
        ))
    }

    /// Affine map `x * W^T + b` for `x: (B, in)`, `W: (out, in)`, `b: (out)`.
    pub fn linear(&self, weight: &Var<'t, T>, bias: Option<&Var<'t, T>>) -> Result<Var<'t, T>> {
        let x = self.value();
        let wt = weight.value();
        let (&[bsz, fin], &[fout, win]) = (x.shape(), wt.shape()) else {
            return Err(Error::shape("linear", x.shape(), wt.shape()));
        };
        if fin != win {
            return Err(Error::shape("linear", x.shape(), wt.shape()));
        }
        let mut out = vec![T::zero(); bsz * fout];
        gemm(
            bsz,
            fin,
            fout,
            T::one(),
            x.data(),
            false,
            wt.data(),
            true,
            T::zero(),
            &mut out,
        );
        if let Some(bv) = bias {
            let bv = bv.value();
            if bv.shape() != [fout] {
                return Err(Error::shape("linear bias", bv.shape(), &[fout]));
            }
            for row in out.chunks_mut(fout) {
                for (o, &bb) in row.iter_mut().zip(bv.data()) {
                    *o = *o + bb;
                }
            }
        }
        let out = Tensor::new(&[bsz, fout], out)?;
        let mut parents = vec![*self, *weight];
        parents.extend(bias.copied());
        Ok(self.tape.record(
            out,
            &parents,
            Box::new(move |g, needs| {
                let gd = g.data();
                let dx = needs[0].then(|| {
                    let mut d = vec![T::zero(); bsz * fin];
                    gemm(
                        bsz,
                        fout,
                        fin,
                        T::one(),
                        gd,
                        false,
                        wt.data(),
                        false,
                        T::zero(),
                        &mut d,
                    );
                    Tensor::new(&[bsz, fin], d).unwrap()
                });
                let dw = needs[1].then(|| {
                    let mut d = vec![T::zero(); fout * fin];
                    gemm(
                        fout,
                        bsz,
                        fin,
                        T::one(),
                        gd,
                        true,
                        x.data(),
                        false,
                        T::zero(),
                        &mut d,
                    );
                    Tensor::new(&[fout, fin], d).unwrap()
                });
                let mut grads = vec![dx, dw];
                if needs.len() == 3 {
                    grads.push(needs[2].then(|| {
                        let mut d = vec![T::zero(); fout];
                        for row in gd.chunks(fout) {
                            for (acc, &v) in d.iter_mut().zip(row) {
                                *acc = *acc + v;
                            }
                        }
                        Tensor::new(&[fout], d).unwrap()
                    }));
                }
                grads
            }),
        ))
    }
}

/// Concatenates along `axis`; all other axes must agree.
pub fn concat<'t, T: Element>(xs: &[Var<'t, T>], axis: usize) -> Result<Var<'t, T>> {
    let first = xs
        .first()
        .ok_or_else(|| Error::Contract("concat of zero tensors".into()))?;
    let values: Vec<_> = xs.iter().map(|v| v.value()).collect();
    let base = values[0].shape().to_vec();
    if axis >= base.len() {
        return Err(Error::Contract(format!(
            "concat axis {axis} out of range for {base:?}"
        )));
    }
    for v in &values[1..] {
        let s = v.shape();
        let same_rank = s.len() == base.len();
        if !same_rank
            || s.iter()
                .zip(&base)
                .enumerate()
                .any(|(i, (a, b))| i != axis && a != b)
        {
            return Err(Error::shape("concat", &base, s));
        }
    }
    let outer: usize = base[..axis].iter().product();
    let inner: usize = base[axis + 1..].iter().product();
    let sizes: Vec<usize> = values.iter().map(|v| v.shape()[axis]).collect();
    let total: usize = sizes.iter().sum();
    let mut data = Vec::with_capacity(outer * total * inner);
    for o in 0..outer {
        for (v, &n) in values.iter().zip(&sizes) {
            data.extend_from_slice(&v.data()[o * n * inner..(o + 1) * n * inner]);
        }
    }
    let mut shape = base.clone();
    shape[axis] = total;
    let out = Tensor::new(&shape, data)?;
    let shapes: Vec<Vec<usize>> = values.iter().map(|v| v.shape().to_vec()).collect();
    Ok(first.tape.record(
        out,
        xs,
        Box::new(move |g, needs| {
            let gd = g.data();
            let mut offset = 0;
            let mut grads = Vec::with_capacity(sizes.len());
            for ((&n, shape), &need) in sizes.iter().zip(&shapes).zip(needs) {
                if need {
                    let mut d = Vec::with_capacity(outer * n * inner);
                    for o in 0..outer {
                        let start = (o * total + offset) * inner;
                        d.extend_from_slice(&gd[start..start + n * inner]);
                    }
                    grads.push(Some(Tensor::new(shape, d).unwrap()));
                } else {
                    grads.push(None);
                }
                offset += n;
            }
            grads
        }),
    ))
}
