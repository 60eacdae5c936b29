use crate::error::{Error, Result};
use crate::tensor::kernels::{col2im, gemm, im2col, pad2d, pad2d_backward, PadMode, Window};
use crate::tensor::{Element, Tensor, Var};

impl<'t, T: Element> Var<'t, T> {
    /// Pads both spatial axes of an NCHW tensor by `amount` on every side.
    pub fn pad2d(&self, amount: usize, mode: PadMode) -> Result<Var<'t, T>> {
        let x = self.value();
        let (b, c, h, w) = x.dims4()?;
        if amount == 0 {
            return Ok(*self);
        }
        if mode == PadMode::Reflect && (amount >= h || amount >= w) {
            return Err(Error::Contract(format!(
                "reflective padding {amount} needs spatial dims above it, got {h}x{w}"
            )));
        }
        let out = pad2d(x.data(), b * c, h, w, amount, mode);
        let out = Tensor::new(&[b, c, h + 2 * amount, w + 2 * amount], out)?;
        Ok(self.tape.record(
            out,
            &[*self],
            Box::new(move |g, _| {
                let d = pad2d_backward(g.data(), b * c, h, w, amount, mode);
                vec![Some(Tensor::new(&[b, c, h, w], d).unwrap())]
            }),
        ))
    }

    /// Cross-correlation of `self` (`B x C x H x W`) with `weight`
    /// (`O x C x kh x kw`), implicit zero padding `padding`, plus optional `bias` (`O`).
    pub fn conv2d(
        &self,
        weight: &Var<'t, T>,
        bias: Option<&Var<'t, T>>,
        stride: (usize, usize),
        padding: (usize, usize),
    ) -> Result<Var<'t, T>> {
        let x = self.value();
        let wt = weight.value();
        let (b, c, h, w) = x.dims4()?;
        let (o, wc, kh, kw) = wt.dims4()?;
        if wc != c {
            return Err(Error::shape("conv2d", x.shape(), wt.shape()));
        }
        if stride.0 == 0 || stride.1 == 0 {
            return Err(Error::Config("conv2d stride must be positive".into()));
        }
        if h + 2 * padding.0 < kh || w + 2 * padding.1 < kw {
            return Err(Error::Contract(format!(
                "conv2d kernel {kh}x{kw} larger than padded input {}x{}",
                h + 2 * padding.0,
                w + 2 * padding.1
            )));
        }
        if let Some(bv) = bias {
            if bv.value().shape() != [o] {
                return Err(Error::shape("conv2d bias", bv.value().shape(), &[o]));
            }
        }
        let win = Window {
            channels: c,
            height: h,
            width: w,
            kernel: (kh, kw),
            stride,
            padding,
        };
        let (oh, ow) = win.out_hw();
        let (rows, cols_n) = (win.col_rows(), win.col_cols());
        let in_plane = c * h * w;
        let out_plane = o * oh * ow;

        let mut out = vec![T::zero(); b * out_plane];
        let mut cols = vec![T::zero(); rows * cols_n];
        for n in 0..b {
            im2col(&x.data()[n * in_plane..(n + 1) * in_plane], &win, &mut cols);
            gemm(
                o,
                rows,
                cols_n,
                T::one(),
                wt.data(),
                false,
                &cols,
                false,
                T::zero(),
                &mut out[n * out_plane..(n + 1) * out_plane],
            );
        }
        if let Some(bv) = bias {
            let bv = bv.value();
            for n in 0..b {
                for (oc, &bias) in bv.data().iter().enumerate() {
                    let start = n * out_plane + oc * oh * ow;
                    for v in &mut out[start..start + oh * ow] {
                        *v = *v + bias;
                    }
                }
            }
        }
        let out = Tensor::new(&[b, o, oh, ow], out)?;

        let mut parents = vec![*self, *weight];
        parents.extend(bias.copied());
        Ok(self.tape.record(
            out,
            &parents,
            Box::new(move |g, needs| {
                let gd = g.data();
                let mut dx = needs[0].then(|| vec![T::zero(); b * in_plane]);
                let mut dw = needs[1].then(|| vec![T::zero(); wt.numel()]);
                let mut cols = vec![T::zero(); rows * cols_n];
                for n in 0..b {
                    let gn = &gd[n * out_plane..(n + 1) * out_plane];
                    if let Some(dw) = dw.as_mut() {
                        im2col(&x.data()[n * in_plane..(n + 1) * in_plane], &win, &mut cols);
                        gemm(
                            o,
                            cols_n,
                            rows,
                            T::one(),
                            gn,
                            false,
                            &cols,
                            true,
                            T::one(),
                            dw,
                        );
                    }
                    if let Some(dx) = dx.as_mut() {
                        gemm(
                            rows,
                            o,
                            cols_n,
                            T::one(),
                            wt.data(),
                            true,
                            gn,
                            false,
                            T::zero(),
                            &mut cols,
                        );
                        col2im(&cols, &win, &mut dx[n * in_plane..(n + 1) * in_plane]);
                    }
                }
                let mut grads = vec![
                    dx.map(|d| Tensor::new(&[b, c, h, w], d).unwrap()),
                    dw.map(|d| Tensor::new(wt.shape(), d).unwrap()),
                ];
                if needs.len() == 3 {
                    grads.push(needs[2].then(|| channel_sums(gd, b, o, oh * ow)));
                }
                grads
            }),
        ))
    }

    /// Transposed convolution: the adjoint of [`Var::conv2d`] w.r.t. its input.
    /// `weight` is `C_in x C_out x kh x kw`. Output spatial size is
    /// `(H - 1) * stride - 2 * padding + k + output_padding`.
    pub fn conv_transpose2d(
        &self,
        weight: &Var<'t, T>,
        bias: Option<&Var<'t, T>>,
        stride: (usize, usize),
        padding: (usize, usize),
        output_padding: (usize, usize),
    ) -> Result<Var<'t, T>> {
        let x = self.value();
        let wt = weight.value();
        let (b, c, h, w) = x.dims4()?;
        let (wc, o, kh, kw) = wt.dims4()?;
        if wc != c {
            return Err(Error::shape("conv_transpose2d", x.shape(), wt.shape()));
        }
        if stride.0 == 0 || stride.1 == 0 {
            return Err(Error::Config(
                "conv_transpose2d stride must be positive".into(),
            ));
        }
        if output_padding.0 >= stride.0 || output_padding.1 >= stride.1 {
            return Err(Error::Config(
                "output padding must be smaller than the stride".into(),
            ));
        }
        let full_h = ((h - 1) * stride.0 + kh + output_padding.0) as isize;
        let full_w = ((w - 1) * stride.1 + kw + output_padding.1) as isize;
        let oh = full_h - 2 * padding.0 as isize;
        let ow = full_w - 2 * padding.1 as isize;
        if oh <= 0 || ow <= 0 {
            return Err(Error::Config(format!(
                "conv_transpose2d padding {padding:?} leaves no output for a {h}x{w} input"
            )));
        }
        let (oh, ow) = (oh as usize, ow as usize);
        if let Some(bv) = bias {
            if bv.value().shape() != [o] {
                return Err(Error::shape(
                    "conv_transpose2d bias",
                    bv.value().shape(),
                    &[o],
                ));
            }
        }
        // Window of the forward conv that maps the output grid back onto the input grid.
        let win = Window {
            channels: o,
            height: oh,
            width: ow,
            kernel: (kh, kw),
            stride,
            padding,
        };
        debug_assert_eq!(win.out_hw(), (h, w));
        let rows = win.col_rows();
        let cols_n = h * w;
        let in_plane = c * h * w;
        let out_plane = o * oh * ow;

        let mut out = vec![T::zero(); b * out_plane];
        let mut cols = vec![T::zero(); rows * cols_n];
        for n in 0..b {
            gemm(
                rows,
                c,
                cols_n,
                T::one(),
                wt.data(),
                true,
                &x.data()[n * in_plane..(n + 1) * in_plane],
                false,
                T::zero(),
                &mut cols,
            );
            col2im(&cols, &win, &mut out[n * out_plane..(n + 1) * out_plane]);
        }
        if let Some(bv) = bias {
            let bv = bv.value();
            for n in 0..b {
                for (oc, &bias) in bv.data().iter().enumerate() {
                    let start = n * out_plane + oc * oh * ow;
                    for v in &mut out[start..start + oh * ow] {
                        *v = *v + bias;
                    }
                }
            }
        }
        let out = Tensor::new(&[b, o, oh, ow], out)?;

        let mut parents = vec![*self, *weight];
        parents.extend(bias.copied());
        Ok(self.tape.record(
            out,
            &parents,
            Box::new(move |g, needs| {
                let gd = g.data();
                let mut dx = needs[0].then(|| vec![T::zero(); b * in_plane]);
                let mut dw = needs[1].then(|| vec![T::zero(); wt.numel()]);
                let mut cols = vec![T::zero(); rows * cols_n];
                for n in 0..b {
                    im2col(&gd[n * out_plane..(n + 1) * out_plane], &win, &mut cols);
                    if let Some(dx) = dx.as_mut() {
                        gemm(
                            c,
                            rows,
                            cols_n,
                            T::one(),
                            wt.data(),
                            false,
                            &cols,
                            false,
                            T::zero(),
                            &mut dx[n * in_plane..(n + 1) * in_plane],
                        );
                    }
                    if let Some(dw) = dw.as_mut() {
                        let xn = &x.data()[n * in_plane..(n + 1) * in_plane];
                        gemm(
                            c,
                            cols_n,
                            rows,
                            T::one(),
                            xn,
                            false,
                            &cols,
                            true,
                            T::one(),
                            dw,
                        );
                    }
                }
                let mut grads = vec![
                    dx.map(|d| Tensor::new(&[b, c, h, w], d).unwrap()),
                    dw.map(|d| Tensor::new(wt.shape(), d).unwrap()),
                ];
                if needs.len() == 3 {
                    grads.push(needs[2].then(|| channel_sums(gd, b, o, oh * ow)));
                }
                grads
            }),
        ))
    }
}

fn channel_sums<T: Element>(g: &[T], b: usize, c: usize, plane: usize) -> Tensor<T> {
    let mut out = vec![T::zero(); c];
    for n in 0..b {
        for (ch, acc) in out.iter_mut().enumerate() {
            let start = (n * c + ch) * plane;
            *acc = g[start..start + plane].iter().fold(*acc, |s, &v| s + v);
        }
    }
    Tensor::new(&[c], out).unwrap()
}
