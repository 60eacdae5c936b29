mod common;

use common::random;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thermal_sr::models::{Discriminator, DiscriminatorConfig, Generator, ModelGraph, Variant};
use thermal_sr::{Error, Session, Tape, Tensor};

fn build(variant: Variant, blocks: usize, channels: usize) -> Generator<f64> {
    let config = variant.config().with_size(blocks, channels);
    Generator::build(config, &mut ChaCha8Rng::seed_from_u64(9)).unwrap()
}

#[test]
fn every_variant_upsamples_by_four() {
    for variant in Variant::ALL {
        let g = build(variant, 1, 4);
        let thermal = random::<f64>(&[2, 1, 6, 5], 1);
        let rgb = random::<f64>(&[2, 3, 24, 20], 2);
        let out = g.infer(&thermal, g.config.fusion.then_some(&rgb)).unwrap();
        assert_eq!(out.shape(), &[2, 1, 24, 20], "{variant}");
        assert!(out.data().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn fusion_inputs_are_checked() {
    let fused = build(Variant::Vtsrcnn, 1, 4);
    let plain = build(Variant::Tsrcnn, 1, 4);
    let thermal = random::<f64>(&[1, 1, 4, 4], 1);
    let rgb = random::<f64>(&[1, 3, 16, 16], 2);
    assert!(matches!(fused.infer(&thermal, None), Err(Error::Usage(_))));
    assert!(matches!(
        plain.infer(&thermal, Some(&rgb)),
        Err(Error::Usage(_))
    ));
    let wrong = random::<f64>(&[1, 3, 8, 8], 3);
    assert!(matches!(
        fused.infer(&thermal, Some(&wrong)),
        Err(Error::Shape { .. })
    ));
}

#[test]
fn gradient_reaches_every_parameter() {
    for variant in Variant::ALL {
        let mut g = build(variant, 2, 4);
        let thermal = random::<f64>(&[1, 1, 4, 6], 3);
        let rgb = random::<f64>(&[1, 3, 16, 24], 4);
        let tape = Tape::new();
        let grads = {
            let s = Session::new(&tape, &g.params);
            let rgb = g.config.fusion.then(|| tape.constant(rgb.clone()));
            let y = g.forward(&s, tape.constant(thermal.clone()), rgb).unwrap();
            tape.backward(&y.square().sum()).unwrap()
        };
        g.params_mut().set_grads(&grads);
        for (_, p) in g.params().iter() {
            assert!(
                p.grad.max_abs() > 0.0,
                "{variant}: {} got no gradient",
                p.name
            );
        }
    }
}

#[test]
fn parameter_counts() {
    let count = |v: Variant| {
        Generator::<f32>::build(v.config(), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap()
            .count_parameters()
    };
    let c = 64;
    let conv = |cin: usize, cout: usize, k: usize| cin * cout * k * k + cout;
    let tsrcnn = conv(1, c, 3) + 5 * 2 * conv(c, c, 3) + 2 * conv(c, 4 * c, 3) + conv(c, 1, 3);
    assert_eq!(count(Variant::Tsrcnn), tsrcnn);
    let fusion = conv(3, c, 3) + conv(c, c, 3) + conv(2 * c, c, 1);
    assert_eq!(count(Variant::Vtsrcnn) - count(Variant::Tsrcnn), fusion);
    assert_eq!(count(Variant::InpBilinRes), tsrcnn);
    assert_eq!(count(Variant::InpBicubRes), tsrcnn);
    let deconv = |cin: usize, cout: usize| cin * cout * 16 + cout;
    assert_eq!(count(Variant::InpDconvRes), tsrcnn + 2 * deconv(1, 1));
    let all_dconv = tsrcnn - 2 * conv(c, 4 * c, 3) + 2 * deconv(c, c) + 2 * deconv(1, 1);
    assert_eq!(count(Variant::AllDconvRes), all_dconv);
}

#[test]
fn discriminator_outputs_probabilities() {
    let d: Discriminator<f32> = Discriminator::build(
        DiscriminatorConfig::default(),
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .unwrap();
    for (h, w) in [(240, 320), (64, 64)] {
        let x = random::<f32>(&[2, 1, h, w], 5).map(|v| 0.5 + 0.5 * v);
        let p = d.infer(&x).unwrap();
        assert_eq!(p.shape(), &[2, 1]);
        assert!(
            p.data().iter().all(|&v| v > 0.0 && v < 1.0),
            "{:?}",
            p.data()
        );
    }
    let small: Discriminator<f64> = Discriminator::build(
        DiscriminatorConfig { base_channels: 2 },
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .unwrap();
    assert_eq!(
        small
            .infer(&Tensor::full(&[3, 1, 16, 16], 0.5))
            .unwrap()
            .shape(),
        &[3, 1]
    );
}
