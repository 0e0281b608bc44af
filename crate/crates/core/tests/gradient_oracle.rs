mod common;

use common::{live_gradient_checks, test_image};
use semfed::channel::{ChannelConfig, ChannelRealization, Fading};
use semfed::model::{mse_gradient, mse_loss, Model, ModelSpec};
use semfed::rng::{self, Stream};
use semfed::Group;

#[test]
fn micro_model_has_at_most_200_parameters() {
    let m = Model::new(ModelSpec::micro()).unwrap();
    assert!(m.param_count() <= 200);
    for g in Group::ALL {
        assert!(m.layout().group(g).length > 0, "{g} is empty");
    }
}

#[test]
fn analytic_gradient_matches_central_differences() {
    for fading in [Fading::None, Fading::Rayleigh] {
        for (seed, check) in live_gradient_checks(ModelSpec::micro(), fading, 4) {
            for g in Group::ALL {
                let err = check.worst[g.index()];
                assert!(err < 1e-4, "{fading} seed {seed} {g}: rel err {err}");
            }
        }
    }
}

#[test]
fn gradient_is_linear_in_upstream_scale() {
    let spec = ModelSpec::micro();
    let model = Model::new(spec.clone()).unwrap();
    let params = model.init_params(3);
    let image = test_image(&spec, 3);
    let real = ChannelRealization::sample(1, &ChannelConfig::noiseless(Fading::None), &mut rng::stream(0, Stream::TrainChannel, &[]));
    let (hat, trace) = model.forward(&params, &image, 10.0, &real).unwrap();
    let d = mse_gradient(&image, &hat);
    let mut g1 = vec![0.0; model.param_count()];
    let mut g3 = vec![0.0; model.param_count()];
    model.accumulate_gradient(&params, &trace, &d, &mut g1).unwrap();
    let d3: Vec<f64> = d.iter().map(|v| 3.0 * v).collect();
    model.accumulate_gradient(&params, &trace, &d3, &mut g3).unwrap();
    for (a, b) in g1.iter().zip(&g3) {
        assert!((3.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn small_sgd_step_lowers_batch_loss() {
    let spec = ModelSpec::micro();
    let model = Model::new(spec.clone()).unwrap();
    let params = model.init_params(11);
    let image = test_image(&spec, 11);
    let real = ChannelRealization::sample(1, &ChannelConfig::new(10.0, Fading::None).unwrap(), &mut rng::stream(1, Stream::TrainChannel, &[]));
    let (hat, trace) = model.forward(&params, &image, 10.0, &real).unwrap();
    let before = mse_loss(&image, &hat).unwrap();
    let grad = model.backward(&params, &trace, &image, &hat).unwrap();
    let norm: f64 = grad.values().iter().map(|g| g * g).sum::<f64>().sqrt();
    assert!(norm > 1e-6);
    let next = params.sgd_step(&grad, 1e-4).unwrap();
    let (hat2, _) = model.forward(&next, &image, 10.0, &real).unwrap();
    assert!(mse_loss(&image, &hat2).unwrap() < before);
}

#[test]
fn perfect_reconstruction_gives_zero_output_gradient() {
    let spec = ModelSpec::micro();
    let model = Model::new(spec.clone()).unwrap();
    let params = model.init_params(5);
    let image = test_image(&spec, 5);
    let real = ChannelRealization::sample(1, &ChannelConfig::noiseless(Fading::None), &mut rng::stream(0, Stream::TrainChannel, &[]));
    let (hat, trace) = model.forward(&params, &image, 10.0, &real).unwrap();
    // treat the reconstruction as the target
    let grad = model.backward(&params, &trace, &hat, &hat).unwrap();
    assert!(grad.group_values(Group::SemanticDec).iter().all(|&g| g == 0.0));
}
