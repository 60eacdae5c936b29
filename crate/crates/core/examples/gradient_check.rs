//! Finite-difference check of a small conv -> ELU -> sub-pixel -> loss chain.

use thermal_sr::loss::mse_loss;
use thermal_sr::nn::PadMode;
use thermal_sr::tensor::grad_check;
use thermal_sr::Tensor;

fn wave(shape: &[usize], phase: f64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n)
        .map(|i| (i as f64 * 0.61 + phase).sin() * 0.8)
        .collect();
    Tensor::from_f64(shape, &data).unwrap()
}

fn main() -> thermal_sr::Result<()> {
    let x = wave(&[1, 1, 4, 5], 0.3);
    let w = wave(&[4, 1, 3, 3], 1.1);
    let target = wave(&[1, 1, 8, 10], 2.0);
    let err = grad_check(
        |v| {
            let t = v.tape();
            let y = v
                .pad2d(1, PadMode::Reflect)?
                .conv2d(&t.constant(w.clone()), None, (1, 1), (0, 0))?
                .elu()
                .pixel_shuffle(2)?;
            mse_loss(&t.constant(target.clone()), &y)
        },
        &x,
        1e-5,
    )?;
    println!("max relative error: {err:.3e}");
    Ok(())
}
