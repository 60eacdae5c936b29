//! Raw buffer kernels shared by the differentiable ops and the data pipeline.

use super::Element;

/// Row-major `c = alpha * op(a) * op(b) + beta * c` where `op(a)` is `m x k`
/// and `op(b)` is `k x n`. With `trans_a`, `a` is stored `k x m`; with
/// `trans_b`, `b` is stored `n x k`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm<T: Element>(
    m: usize,
    k: usize,
    n: usize,
    alpha: T,
    a: &[T],
    trans_a: bool,
    b: &[T],
    trans_b: bool,
    beta: T,
    c: &mut [T],
) {
    assert!(a.len() >= m * k, "gemm: lhs buffer too small");
    assert!(b.len() >= k * n, "gemm: rhs buffer too small");
    assert!(c.len() >= m * n, "gemm: output buffer too small");
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if trans_a {
        (1, m as isize)
    } else {
        (k as isize, 1)
    };
    let (rsb, csb) = if trans_b {
        (1, k as isize)
    } else {
        (n as isize, 1)
    };
    // SAFETY: lengths asserted above; `c` is a unique borrow distinct from `a`, `b`.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Geometry of a 2-D sliding window over one `(channels, height, width)` image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Window {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

impl Window {
    pub fn out_hw(&self) -> (usize, usize) {
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;
        (
            (self.height + 2 * ph - kh) / sh + 1,
            (self.width + 2 * pw - kw) / sw + 1,
        )
    }

    pub fn col_rows(&self) -> usize {
        self.channels * self.kernel.0 * self.kernel.1
    }

    pub fn col_cols(&self) -> usize {
        let (oh, ow) = self.out_hw();
        oh * ow
    }
}

/// Unfolds `image` (`C x H x W`) into `cols` (`C*kh*kw x OH*OW`), zero-padded.
pub(crate) fn im2col<T: Element>(image: &[T], win: &Window, cols: &mut [T]) {
    let (oh, ow) = win.out_hw();
    let (kh, kw) = win.kernel;
    let (sh, sw) = win.stride;
    let (ph, pw) = win.padding;
    let (h, w) = (win.height as isize, win.width as isize);
    let plane = oh * ow;
    for c in 0..win.channels {
        let src = &image[c * win.height * win.width..(c + 1) * win.height * win.width];
        for ky in 0..kh {
            for kx in 0..kw {
                let row = (c * kh + ky) * kw + kx;
                let dst = &mut cols[row * plane..(row + 1) * plane];
                for oy in 0..oh {
                    let iy = (oy * sh + ky) as isize - ph as isize;
                    let line = &mut dst[oy * ow..(oy + 1) * ow];
                    if iy < 0 || iy >= h {
                        line.fill(T::zero());
                        continue;
                    }
                    let src_row = &src[iy as usize * win.width..(iy as usize + 1) * win.width];
                    for (ox, out) in line.iter_mut().enumerate() {
                        let ix = (ox * sw + kx) as isize - pw as isize;
                        *out = if ix < 0 || ix >= w {
                            T::zero()
                        } else {
                            src_row[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters `cols` back into `image`, accumulating.
pub(crate) fn col2im<T: Element>(cols: &[T], win: &Window, image: &mut [T]) {
    let (oh, ow) = win.out_hw();
    let (kh, kw) = win.kernel;
    let (sh, sw) = win.stride;
    let (ph, pw) = win.padding;
    let (h, w) = (win.height as isize, win.width as isize);
    let plane = oh * ow;
    for c in 0..win.channels {
        let dst = &mut image[c * win.height * win.width..(c + 1) * win.height * win.width];
        for ky in 0..kh {
            for kx in 0..kw {
                let row = (c * kh + ky) * kw + kx;
                let src = &cols[row * plane..(row + 1) * plane];
                for oy in 0..oh {
                    let iy = (oy * sh + ky) as isize - ph as isize;
                    if iy < 0 || iy >= h {
                        continue;
                    }
                    let base = iy as usize * win.width;
                    for ox in 0..ow {
                        let ix = (ox * sw + kx) as isize - pw as isize;
                        if ix >= 0 && ix < w {
                            dst[base + ix as usize] = dst[base + ix as usize] + src[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PadMode {
    /// Mirror without repeating the edge sample (`[a b c] -> b [a b c] b`).
    Reflect,
    Zero,
}

/// Source index for output coordinate `i` of an axis padded by `pad` on both sides.
/// `None` means the output sample is a zero pad.
#[inline]
pub(crate) fn pad_source(i: usize, pad: usize, len: usize, mode: PadMode) -> Option<usize> {
    let p = i as isize - pad as isize;
    let n = len as isize;
    if (0..n).contains(&p) {
        return Some(p as usize);
    }
    match mode {
        PadMode::Zero => None,
        PadMode::Reflect => {
            let r = if p < 0 { -p } else { 2 * (n - 1) - p };
            Some(r as usize)
        }
    }
}

/// Pads every `H x W` plane of `src` (`planes` of them) by `pad` on all sides.
pub(crate) fn pad2d<T: Element>(
    src: &[T],
    planes: usize,
    h: usize,
    w: usize,
    pad: usize,
    mode: PadMode,
) -> Vec<T> {
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let rows: Vec<Option<usize>> = (0..ph).map(|y| pad_source(y, pad, h, mode)).collect();
    let cols: Vec<Option<usize>> = (0..pw).map(|x| pad_source(x, pad, w, mode)).collect();
    let mut out = vec![T::zero(); planes * ph * pw];
    for p in 0..planes {
        let s = &src[p * h * w..(p + 1) * h * w];
        let d = &mut out[p * ph * pw..(p + 1) * ph * pw];
        for (y, ry) in rows.iter().enumerate() {
            let Some(sy) = ry else { continue };
            for (x, rx) in cols.iter().enumerate() {
                if let Some(sx) = rx {
                    d[y * pw + x] = s[sy * w + sx];
                }
            }
        }
    }
    out
}

/// Adjoint of [`pad2d`].
pub(crate) fn pad2d_backward<T: Element>(
    grad: &[T],
    planes: usize,
    h: usize,
    w: usize,
    pad: usize,
    mode: PadMode,
) -> Vec<T> {
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let rows: Vec<Option<usize>> = (0..ph).map(|y| pad_source(y, pad, h, mode)).collect();
    let cols: Vec<Option<usize>> = (0..pw).map(|x| pad_source(x, pad, w, mode)).collect();
    let mut out = vec![T::zero(); planes * h * w];
    for p in 0..planes {
        let g = &grad[p * ph * pw..(p + 1) * ph * pw];
        let d = &mut out[p * h * w..(p + 1) * h * w];
        for (y, ry) in rows.iter().enumerate() {
            let Some(sy) = ry else { continue };
            for (x, rx) in cols.iter().enumerate() {
                if let Some(sx) = rx {
                    d[sy * w + sx] = d[sy * w + sx] + g[y * pw + x];
                }
            }
        }
    }
    out
}
