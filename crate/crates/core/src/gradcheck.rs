//! Full-model finite-difference check on a tiny built-in instance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{gradient_check, GradCheckReport, Graph};
use crate::corpus::load_instances;
use crate::error::{Error, Result};
use crate::model::{encode_instance, EncodedInstance, ParamVars};
use crate::params::ModelParameters;
use crate::training::{build_vocabulary, example_loss, loss_value, TrainingConfig};

/// Two sentences, a two-word answer, 13 vocabulary entries.
pub const FIXTURE: &str = "1 Mary went home.\n2 John left.\n3 Where Mary?\tat home\t1\n";

pub const DEFAULT_EPSILON: f64 = 3e-4;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Configuration of the tiny check: `d = h = 8`, otherwise `base`.
pub fn fixture_config(base: &TrainingConfig) -> TrainingConfig {
    TrainingConfig {
        d: 8,
        hidden: Some(8),
        pretrained_path: None,
        ..base.clone()
    }
}

/// Analytic gradient of the summed example loss, one matrix per group.
pub fn analytic_gradient(
    params: &ModelParameters,
    inst: &EncodedInstance,
    config: &TrainingConfig,
    eos: usize,
) -> Result<ModelParameters> {
    let mut g = Graph::new();
    let vars = ParamVars::bind(&mut g, params);
    let loss = example_loss(&mut g, &vars, inst, config, eos)?;
    g.backward(loss)?;
    let mut grads = ModelParameters::zeros(*params.dims());
    vars.accumulate_grads(&g, 1.0, &mut grads);
    Ok(grads)
}

/// Compares the analytic gradient with central differences over every
/// entry of every parameter group. `perturb` adds an error to one analytic
/// entry, as a negative control.
pub fn check_model(
    params: &mut ModelParameters,
    inst: &EncodedInstance,
    config: &TrainingConfig,
    eos: usize,
    epsilon: f64,
    tolerance: f64,
    perturb: bool,
) -> Result<GradCheckReport> {
    let mut analytic = analytic_gradient(params, inst, config, eos)?.to_vec();
    if perturb {
        let first = analytic
            .first_mut()
            .ok_or_else(|| Error::contract("model has no parameters"))?;
        if let Some(x) = first.as_mut_slice().first_mut() {
            *x += 0.5 * (1.0 + x.abs());
        }
    }
    let mut failure = None;
    let report = gradient_check(
        params,
        &analytic,
        |p| match loss_value(p, inst, config, eos) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        epsilon,
        tolerance,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(report?)
}

/// Builds the fixture, seeds parameters from `config` and runs the check.
/// See [`fixture_config`] for the usual tiny dimensions.
pub fn run_fixture_check(
    config: &TrainingConfig,
    epsilon: f64,
    tolerance: f64,
    perturb: bool,
) -> Result<GradCheckReport> {
    config.validate()?;
    let instances = load_instances(FIXTURE)?;
    let vocab = build_vocabulary(&instances, config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParameters::gaussian(config.dims(&vocab), config.init_std, &mut rng);
    let inst = encode_instance(&instances[0], &vocab)?;
    check_model(
        &mut params,
        &inst,
        config,
        vocab.eos(),
        epsilon,
        tolerance,
        perturb,
    )
}
