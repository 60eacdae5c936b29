//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`cargo test --test acceptance`). The process fails
//! if any criterion fails, except those in `KNOWN_FAILING`, which are still
//! reported as FAIL and must keep failing.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{random, ssim_oracle, toy_config, uniform01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermal_sr::checkpoint::Checkpoint;
use thermal_sr::data::{
    denormalize_thermal, make_lr, normalize_thermal, synth_dataset, Dataset, Split, SynthOptions,
};
use thermal_sr::loss::{discriminator_loss, generator_adv_loss, mse_loss, total_loss, LossConfig};
use thermal_sr::metrics::{psnr, ssim};
use thermal_sr::models::{Discriminator, DiscriminatorConfig, Generator, Variant};
use thermal_sr::nn::{concat, InterpMethod, PadMode};
use thermal_sr::study::{default_roster, generate_assignments, Study};
use thermal_sr::tensor::grad_check;
use thermal_sr::train::Trainer;
use thermal_sr::{ParamStore, Session, Tape, Tensor, Var};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Criteria whose stated expectation contradicts its own inputs; see README.
const KNOWN_FAILING: &[&str] = &["loss arithmetic"];

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn probe_objective<'t>(y: Var<'t, f64>, probe: &Tensor<f64>) -> thermal_sr::Result<Var<'t, f64>> {
    Ok(y.mul(&y.tape().constant(probe.clone()))?.sum())
}

fn c<'t>(v: &Var<'t, f64>, t: &Tensor<f64>) -> Var<'t, f64> {
    v.tape().constant(t.clone())
}

/// Finite-difference errors for every primitive layer and loss at f64.
fn layer_errors() -> Vec<(&'static str, f64)> {
    let x = random::<f64>(&[2, 2, 5, 6], 1);
    let w = random::<f64>(&[3, 2, 3, 3], 2);
    let b = random::<f64>(&[3], 3);
    let wt = random::<f64>(&[2, 3, 4, 4], 4);
    let wl = random::<f64>(&[4, 6], 5);
    let bl = random::<f64>(&[4], 6);
    let h = 1e-5;
    let mut out = Vec::new();
    let mut check = |name,
                     f: &dyn for<'t> Fn(Var<'t, f64>) -> thermal_sr::Result<Var<'t, f64>>,
                     at: &Tensor<f64>| {
        out.push((name, grad_check(f, at, h).unwrap()));
    };

    let p1 = random::<f64>(&[2, 3, 5, 6], 10);
    check(
        "conv2d/input",
        &|v| {
            probe_objective(
                v.pad2d(1, PadMode::Reflect)?.conv2d(
                    &c(&v, &w),
                    Some(&c(&v, &b)),
                    (1, 1),
                    (0, 0),
                )?,
                &p1,
            )
        },
        &x,
    );
    check(
        "conv2d/weight",
        &|v| {
            probe_objective(
                c(&v, &x).pad2d(1, PadMode::Reflect)?.conv2d(
                    &v,
                    Some(&c(&v, &b)),
                    (1, 1),
                    (0, 0),
                )?,
                &p1,
            )
        },
        &w,
    );
    check(
        "conv2d/bias",
        &|v| {
            probe_objective(
                c(&v, &x).pad2d(1, PadMode::Reflect)?.conv2d(
                    &c(&v, &w),
                    Some(&v),
                    (1, 1),
                    (0, 0),
                )?,
                &p1,
            )
        },
        &b,
    );
    let p2 = random::<f64>(&[2, 3, 3, 3], 11);
    check(
        "conv2d/stride2+zero-pad",
        &|v| probe_objective(v.conv2d(&c(&v, &w), None, (2, 2), (1, 1))?, &p2),
        &x,
    );
    let p3 = random::<f64>(&[2, 3, 10, 12], 12);
    check(
        "deconv/input",
        &|v| {
            probe_objective(
                v.conv_transpose2d(&c(&v, &wt), Some(&c(&v, &b)), (2, 2), (1, 1), (0, 0))?,
                &p3,
            )
        },
        &x,
    );
    check(
        "deconv/weight",
        &|v| {
            probe_objective(
                c(&v, &x).conv_transpose2d(&v, Some(&c(&v, &b)), (2, 2), (1, 1), (0, 0))?,
                &p3,
            )
        },
        &wt,
    );
    check(
        "deconv/bias",
        &|v| {
            probe_objective(
                c(&v, &x).conv_transpose2d(&c(&v, &wt), Some(&v), (2, 2), (1, 1), (0, 0))?,
                &p3,
            )
        },
        &b,
    );
    let x4 = random::<f64>(&[1, 8, 3, 4], 13);
    let p4 = random::<f64>(&[1, 2, 6, 8], 14);
    check(
        "pixel_shuffle",
        &|v| probe_objective(v.pixel_shuffle(2)?, &p4),
        &x4,
    );
    let p5 = random::<f64>(&[2, 2, 10, 12], 15);
    check(
        "bilinear x2",
        &|v| probe_objective(v.interp_upsample(InterpMethod::Bilinear, 2)?, &p5),
        &x,
    );
    check(
        "bicubic x2",
        &|v| probe_objective(v.interp_upsample(InterpMethod::Bicubic, 2)?, &p5),
        &x,
    );
    let p6 = random::<f64>(&[2, 2, 5, 6], 16);
    check("elu", &|v| probe_objective(v.elu(), &p6), &x);
    check("sigmoid", &|v| probe_objective(v.sigmoid(), &p6), &x);
    check(
        "reflect pad",
        &|v| probe_objective(v.pad2d(2, PadMode::Reflect)?, &random(&[2, 2, 9, 10], 17)),
        &x,
    );
    check(
        "adaptive avg pool",
        &|v| probe_objective(v.adaptive_avg_pool((1, 1))?, &random(&[2, 2, 1, 1], 18)),
        &x,
    );
    let xl = random::<f64>(&[3, 6], 19);
    let pl = random::<f64>(&[3, 4], 20);
    check(
        "dense/input",
        &|v| probe_objective(v.linear(&c(&v, &wl), Some(&c(&v, &bl)))?, &pl),
        &xl,
    );
    check(
        "dense/weight",
        &|v| probe_objective(c(&v, &xl).linear(&v, Some(&c(&v, &bl)))?, &pl),
        &wl,
    );
    check(
        "dense/bias",
        &|v| probe_objective(c(&v, &xl).linear(&c(&v, &wl), Some(&v))?, &pl),
        &bl,
    );
    let other = random::<f64>(&[2, 3, 5, 6], 21);
    check(
        "concat",
        &|v| probe_objective(concat(&[v, c(&v, &other)], 1)?, &random(&[2, 5, 5, 6], 22)),
        &x,
    );

    let hr = uniform01(&[2, 1, 4, 4], 30);
    let sr = uniform01(&[2, 1, 4, 4], 31);
    let probs = uniform01(&[4, 1], 32).map(|p| 0.1 + 0.8 * p);
    let fixed = uniform01(&[4, 1], 33).map(|p| 0.1 + 0.8 * p);
    check("content loss", &|v| mse_loss(&c(&v, &hr), &v), &sr);
    check(
        "discriminator loss/real",
        &|v| discriminator_loss(&v, &c(&v, &fixed)),
        &probs,
    );
    check(
        "discriminator loss/fake",
        &|v| discriminator_loss(&c(&v, &fixed), &v),
        &probs,
    );
    check(
        "generator adversarial loss",
        &|v| generator_adv_loss(&v),
        &probs,
    );
    let gan = LossConfig::gan(1e-2);
    check(
        "total loss/content term",
        &|v| {
            total_loss(
                Some(&generator_adv_loss(&c(&v, &fixed))?),
                &mse_loss(&c(&v, &hr), &v)?,
                &gan,
            )
        },
        &sr,
    );
    check(
        "total loss/adversarial term",
        &|v| {
            total_loss(
                Some(&generator_adv_loss(&v)?),
                &mse_loss(&c(&v, &hr), &c(&v, &sr))?,
                &gan,
            )
        },
        &probs,
    );
    out
}

fn relative(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-12)
}

/// Largest relative error between `analytic` and central differences of `eval` at `at`.
fn fd_error(
    analytic: &Tensor<f64>,
    at: &Tensor<f64>,
    picks: &[usize],
    eval: &dyn Fn(&Tensor<f64>) -> f64,
) -> f64 {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for &i in picks {
        let mut probe = at.clone();
        probe.data_mut()[i] += h;
        let up = eval(&probe);
        probe.data_mut()[i] -= 2.0 * h;
        let down = eval(&probe);
        worst = worst.max(relative(analytic.data()[i], (up - down) / (2.0 * h)));
    }
    worst
}

fn every(t: &Tensor<f64>) -> Vec<usize> {
    (0..t.numel()).collect()
}

/// Four entries spread over the tensor.
fn spread(t: &Tensor<f64>) -> Vec<usize> {
    let n = t.numel();
    let mut picks = vec![0, n / 3, 2 * n / 3, n - 1];
    picks.dedup();
    picks
}

fn dot(y: &Tensor<f64>, probe: &Tensor<f64>) -> f64 {
    y.data().iter().zip(probe.data()).map(|(a, b)| a * b).sum()
}

/// Sampled entries of every parameter tensor of `store`, perturbed one at a time.
fn param_error(
    store: &ParamStore<f64>,
    grads: &ParamStore<f64>,
    eval: &dyn Fn(&ParamStore<f64>) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (id, p) in grads.iter() {
        let value = &store.get(id).value;
        let e = fd_error(&p.grad, value, &spread(value), &|t| {
            let mut probe = store.clone();
            probe.get_mut(id).value = t.clone();
            eval(&probe)
        });
        worst = worst.max(e);
    }
    worst
}

/// Whole-network checks (inputs and parameters) on small instances of every model.
fn composition_errors() -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let x = random::<f64>(&[1, 1, 4, 5], 40);
    let rgb = random::<f64>(&[1, 3, 16, 20], 41);
    let probe = random::<f64>(&[1, 1, 16, 20], 42);
    for variant in Variant::ALL {
        let g: Generator<f64> = Generator::build(
            variant.config().with_size(2, 3),
            &mut ChaCha8Rng::seed_from_u64(43),
        )
        .unwrap();
        let fused = g.config.fusion;
        let tape = Tape::new();
        let (gx, grgb, grads) = {
            let s = Session::new(&tape, &g.params);
            let xv = tape.leaf(x.clone());
            let rv = fused.then(|| tape.leaf(rgb.clone()));
            let y = g.forward(&s, xv, rv).unwrap();
            let grads = tape.backward(&probe_objective(y, &probe).unwrap()).unwrap();
            (grads.wrt(&xv), rv.map(|r| grads.wrt(&r)), grads)
        };
        let guide = fused.then_some(&rgb);
        out.push((
            format!("{variant}/input"),
            fd_error(&gx, &x, &every(&x), &|t| {
                dot(&g.infer(t, guide).unwrap(), &probe)
            }),
        ));
        if let Some(grgb) = grgb {
            out.push((
                format!("{variant}/rgb"),
                fd_error(&grgb, &rgb, &every(&rgb), &|t| {
                    dot(&g.infer(&x, Some(t)).unwrap(), &probe)
                }),
            ));
        }
        let mut with_grads = g.params.clone();
        with_grads.set_grads(&grads);
        let eval = |store: &ParamStore<f64>| {
            let mut gp = g.clone();
            gp.params = store.clone();
            dot(&gp.infer(&x, guide).unwrap(), &probe)
        };
        out.push((
            format!("{variant}/params"),
            param_error(&g.params, &with_grads, &eval),
        ));
    }

    let d: Discriminator<f64> = Discriminator::build(
        DiscriminatorConfig { base_channels: 2 },
        &mut ChaCha8Rng::seed_from_u64(44),
    )
    .unwrap();
    let img = uniform01(&[2, 1, 16, 16], 45);
    let pd = random::<f64>(&[2, 1], 46);
    let tape = Tape::new();
    let (gimg, grads) = {
        let s = Session::new(&tape, &d.params);
        let iv = tape.leaf(img.clone());
        let y = d.forward(&s, iv).unwrap();
        let grads = tape.backward(&probe_objective(y, &pd).unwrap()).unwrap();
        (grads.wrt(&iv), grads)
    };
    out.push((
        "discriminator/input".into(),
        fd_error(&gimg, &img, &every(&img), &|t| {
            dot(&d.infer(t).unwrap(), &pd)
        }),
    ));
    let mut with_grads = d.params.clone();
    with_grads.set_grads(&grads);
    let eval = |store: &ParamStore<f64>| {
        let mut dp = d.clone();
        dp.params = store.clone();
        dot(&dp.infer(&img).unwrap(), &pd)
    };
    out.push((
        "discriminator/params".into(),
        param_error(&d.params, &with_grads, &eval),
    ));
    out
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let layers = layer_errors();
    let composed = composition_errors();
    let elapsed = start.elapsed();
    let (lname, lworst) = layers
        .iter()
        .copied()
        .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let (cname, cworst) =
        composed
            .iter()
            .cloned()
            .fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a });
    ensure(
        lworst < 1e-4 && cworst < 1e-3 && elapsed < Duration::from_secs(120),
        format!(
            "{} layer/loss checks max {lworst:.2e} ({lname}), {} network checks max {cworst:.2e} ({cname}), {:.1} s",
            layers.len(),
            composed.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn shape_contract() -> Outcome {
    let thermal = uniform01(&[1, 1, 60, 80], 50).cast::<f32>();
    let rgb = uniform01(&[1, 3, 240, 320], 51).cast::<f32>();
    let mut bad = Vec::new();
    for variant in Variant::ALL {
        let g: Generator =
            Generator::build(variant.config(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let out = g.infer(&thermal, g.config.fusion.then_some(&rgb)).unwrap();
        if out.shape() != [1, 1, 240, 320] {
            bad.push(format!("{variant} -> {:?}", out.shape()));
        }
    }
    ensure(
        bad.is_empty(),
        if bad.is_empty() {
            "7/7 variants (1,1,60,80) -> (1,1,240,320)".into()
        } else {
            bad.join(", ")
        },
    )
}

fn loss_arithmetic() -> Outcome {
    let tape = Tape::<f64>::new();
    let scalar = |v: f64| tape.constant(Tensor::scalar(v));
    let hr = tape.constant(Tensor::from_f64(&[1, 1, 2, 2], &[1.0, 0.0, 0.0, 1.0]).unwrap());
    let sr = tape.constant(Tensor::zeros(&[1, 1, 2, 2]));
    let content = mse_loss(&hr, &sr).unwrap().value().item().unwrap();
    let total = total_loss(Some(&scalar(0.3466)), &scalar(0.25), &LossConfig::gan(1e-2))
        .unwrap()
        .value()
        .item()
        .unwrap();
    let half = tape.constant(Tensor::full(&[1, 1], 0.5));
    let d = discriminator_loss(&half, &half)
        .unwrap()
        .value()
        .item()
        .unwrap();
    let g = generator_adv_loss(&half).unwrap().value().item().unwrap();
    let checks = [
        content == 0.25,
        (total - 0.34906).abs() <= 1e-6,
        (d - 1.3863).abs() <= 1e-4,
        (g - 0.3466).abs() <= 1e-4,
    ];
    ensure(
        checks.iter().all(|&c| c),
        format!(
            "content {content} (want 0.25) {}; total {total:.6} (want 0.34906 +- 1e-6) {}; discriminator {d:.6} (want 1.3863) {}; adversarial {g:.6} (want 0.3466) {}",
            mark(checks[0]),
            mark(checks[1]),
            mark(checks[2]),
            mark(checks[3])
        ),
    )
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "MISMATCH"
    }
}

fn toy_data(dir: &std::path::Path) -> Dataset {
    let m = synth_dataset(dir, 4, 1, SynthOptions::sized(64, 80)).unwrap();
    Dataset::load(&m, Split::Trainval).unwrap()
}

/// Content phase until plain MSE (twice the halved content loss) drops below 1e-3.
fn overfit(trainer: &mut Trainer, data: &Dataset) -> (usize, f64, Duration) {
    let start = Instant::now();
    let history = trainer
        .fit_until(data, &mut std::io::sink(), |s| 2.0 * s.l_mse < 1e-3)
        .unwrap();
    (
        history.len(),
        2.0 * history.last().unwrap().l_mse,
        start.elapsed(),
    )
}

fn overfit_smoke() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = toy_data(dir.path());
    let mut ok = true;
    let mut parts = Vec::new();
    for variant in ["tsrcnn", "vtsrcnn"] {
        let mut t = Trainer::new(toy_config(variant, 2000)).unwrap();
        let (steps, mse, time) = overfit(&mut t, &data);
        ok &= mse < 1e-3 && steps <= 2000 && time < Duration::from_secs(300);
        parts.push(format!(
            "{variant}: MSE {mse:.2e} after {steps} steps in {:.1} s",
            time.as_secs_f64()
        ));
    }
    ensure(ok, parts.join("; "))
}

fn gan_smoke() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = toy_data(dir.path());
    let mut config = toy_config("tsrcnn", 2000);
    config.gan.epochs = 500;
    config.gan.max_steps = Some(500);
    let mut t = Trainer::new(config).unwrap();
    let (_, mse, _) = overfit(&mut t, &data);
    t.enter_gan().unwrap();
    let frozen = t.generator.params.clone();
    let batch = data.batch(&[0, 1, 2, 3]).unwrap();
    let lr = t.config.discriminator_schedule().at(0);
    let mut reached = None;
    for step in 1..=200 {
        t.discriminator_step(&batch, lr).unwrap();
        if t.evaluate_discriminator(&batch).unwrap().accuracy > 0.9 {
            reached = Some(step);
            break;
        }
    }
    let untouched = t
        .generator
        .params
        .iter()
        .zip(frozen.iter())
        .all(|((_, a), (_, b))| a.value.data() == b.value.data());

    t.enter_gan().unwrap();
    let history = t.fit(&data, &mut std::io::sink());
    let (steps, finite) = match &history {
        Ok(h) => (h.len(), h.iter().all(|s| s.l_total.is_finite())),
        Err(_) => (0, false),
    };
    let last = history
        .as_ref()
        .ok()
        .and_then(|h| h.last())
        .map(|s| s.l_total)
        .unwrap_or(f64::NAN);
    ensure(
        reached.is_some() && untouched && steps == 500 && finite,
        format!(
            "generator MSE {mse:.1e}; discriminator accuracy > 0.9 after {} steps; {steps} alternating steps, all totals finite: {finite} (last {last:.4})",
            reached.map_or("more than 200".to_string(), |s| s.to_string())
        ),
    )
}

fn metrics() -> Outcome {
    let a = Tensor::<f64>::zeros(&[1, 16, 16]);
    let p1 = psnr(&a, &a.map(|v| v + 0.1), 1.0).unwrap();
    let p2 = psnr(&a, &a.map(|v| v + 0.5), 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let x = uniform01(&[1, 24, 32], 60 + k);
        let noise = uniform01(&[1, 24, 32], 80 + k);
        let mix = 0.05 * (k + 1) as f64;
        let y = x.zip_map(&noise, |a, n| (1.0 - mix) * a + mix * n).unwrap();
        worst = worst
            .max((ssim(&x, &y, 1.0).unwrap() - ssim_oracle(x.data(), y.data(), 24, 32, 1.0)).abs());
    }
    let x = uniform01(&[1, 24, 32], 99);
    let self_ssim = ssim(&x, &x, 1.0).unwrap();
    ensure(
        (p1 - 20.0).abs() < 1e-9 && (p2 - 6.0206).abs() < 1e-3 && worst < 1e-6 && self_ssim == 1.0,
        format!("PSNR {p1:.12} dB and {p2:.4} dB; SSIM vs oracle max |diff| {worst:.1e} over 20 pairs; ssim(a,a) = {self_ssim}"),
    )
}

fn pipeline() -> Outcome {
    let hr = Tensor::<f64>::full(&[1, 240, 320], 0.6180339887);
    let lr = make_lr(&hr).unwrap();
    let shape_ok = lr.shape() == [1, 60, 80];
    let constant = lr.data().iter().all(|&v| v == 0.6180339887);
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let base = rng.random_range(250.0..320.0);
        let values: Vec<f64> = (0..500)
            .map(|_| base + rng.random_range(0.0..30.0))
            .collect();
        let n = normalize_thermal(&values).unwrap();
        for (a, b) in values.iter().zip(denormalize_thermal(&n.values, &n.range)) {
            worst = worst.max((a - b).abs() / a.abs());
        }
    }
    ensure(
        shape_ok && constant && worst < 1e-6,
        format!("(240,320) -> {:?}; constant preserved exactly: {constant}; normalization round trip max relative error {worst:.1e}", &lr.shape()[1..]),
    )
}

#[allow(clippy::needless_range_loop)]
fn study_aggregation() -> Outcome {
    let images: Vec<String> = (0..58).map(|i| format!("img{i:02}")).collect();
    let roster = default_roster();
    let mut study = Study::new(
        roster.clone(),
        generate_assignments(&images, roster.len(), 5).unwrap(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    while study.ballots().len() < 1000 {
        let a = study.assignments()[rng.random_range(0..study.assignments().len())].clone();
        let rater = format!("r{}", rng.random_range(0..40));
        let slot = rng.random_range(0..3);
        if !study.has_voted(&rater, &a.id) {
            study.vote(&rater, a.group, &a.id, slot).unwrap();
        }
    }
    let n = roster.len();
    let ballots: Vec<([usize; 3], usize)> = study
        .ballots()
        .iter()
        .map(|b| (b.triple, b.chosen))
        .collect();
    let normalized = study.matrix().normalized();
    let mut mismatches = 0;
    let mut awards = 0u64;
    for i in 0..n {
        for j in 0..n {
            let both = |t: &[usize; 3]| i != j && t.contains(&i) && t.contains(&j);
            let wins_ij = ballots.iter().filter(|(t, c)| both(t) && *c == i).count() as u64;
            let wins_ji = ballots.iter().filter(|(t, c)| both(t) && *c == j).count() as u64;
            let shown = ballots.iter().filter(|(t, _)| both(t)).count() as u64;
            awards += wins_ij;
            let margin = wins_ij.saturating_sub(wins_ji);
            let r = normalized[i][j];
            let equal = if shown == 0 {
                *r.numer() == 0
            } else {
                r.numer() * shown == r.denom() * margin
            };
            if !equal || study.matrix().raw(i, j) != wins_ij {
                mismatches += 1;
            }
        }
    }
    let total = study.matrix().total_awards();
    ensure(
        mismatches == 0 && awards == 2 * 1000 && total == awards,
        format!("1000 ballots, 9 models x 58 images: {mismatches} of 81 entries differ from the recount; awards {total} = 2 x ballots"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = toy_data(dir.path());
    let run = || {
        let mut config = toy_config("vtsrcnn", 30);
        config.gan.max_steps = Some(10);
        let mut t = Trainer::new(config).unwrap();
        let mut log = Vec::new();
        t.fit(&data, &mut log).unwrap();
        t.enter_gan().unwrap();
        t.fit(&data, &mut log).unwrap();
        (log, t)
    };
    let (a, t) = run();
    let (b, _) = run();
    let path = dir.path().join("run.ckpt");
    Checkpoint::from_trainer(&t).save(&path).unwrap();
    let g = Checkpoint::<f32>::load(&path).unwrap().generator().unwrap();
    let batch = data.batch(&[0, 1, 2, 3]).unwrap();
    let before = t.generator.infer(&batch.t_lr, Some(&batch.rgb)).unwrap();
    let after = g.infer(&batch.t_lr, Some(&batch.rgb)).unwrap();
    let same_bits = before
        .data()
        .iter()
        .zip(after.data())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    ensure(
        a == b && same_bits,
        format!(
            "{} log lines identical: {}; restored forward pass bitwise identical: {same_bits}",
            String::from_utf8_lossy(&a).lines().count(),
            a == b
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("gradient correctness", gradient_correctness),
        ("shape contract", shape_contract),
        ("loss arithmetic", loss_arithmetic),
        ("overfit smoke", overfit_smoke),
        ("GAN smoke", gan_smoke),
        ("metrics", metrics),
        ("pipeline", pipeline),
        ("study aggregation", study_aggregation),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut unexpected = Vec::new();
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let known = KNOWN_FAILING.contains(&name);
        match &outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) if known => {
                println!("FAIL  {name}: {detail} [known: expected value disagrees with its inputs]")
            }
            Err(detail) => println!("FAIL  {name}: {detail}"),
        }
        if outcome.is_ok() == known {
            unexpected.push(name);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
