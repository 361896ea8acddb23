//! Policy checkpointing: the trained Gaussian policy round-trips through
//! the bit-exact tensor format, carrying its action box along so a loaded
//! policy is immediately runnable against a matching environment.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::HarnessError;
use crate::nn::{Checkpoint, DenseNet, GaussianPolicy, LinearLayer};

const LOW: &str = "meta/action_low";
const HIGH: &str = "meta/action_high";
const NET: &str = "policy/";

pub fn policy_to_checkpoint(policy: &GaussianPolicy) -> Checkpoint {
    let mut ck = Checkpoint::new();
    let a = policy.action_dim();
    ck.push(LOW, vec![a], policy.action_low.clone());
    ck.push(HIGH, vec![a], policy.action_high.clone());
    ck.push_net(NET, &policy.net);
    ck
}

pub fn policy_from_checkpoint(ck: &Checkpoint) -> Result<GaussianPolicy, HarnessError> {
    let bounds = |name: &str| -> Result<Vec<f64>, HarnessError> {
        Ok(ck
            .get(name)
            .ok_or_else(|| HarnessError::Config(format!("checkpoint lacks tensor {name}")))?
            .data
            .clone())
    };
    let mut layers = Vec::new();
    for i in 0.. {
        let Some(w) = ck.get(&format!("{NET}layer{i}.w")) else { break };
        let b = ck.get(&format!("{NET}layer{i}.b")).ok_or_else(|| {
            HarnessError::Config(format!("checkpoint lacks tensor {NET}layer{i}.b"))
        })?;
        if w.shape.len() != 2 {
            return Err(HarnessError::Config(format!(
                "tensor {NET}layer{i}.w has rank {}, expected a matrix",
                w.shape.len()
            )));
        }
        let warr = Array2::from_shape_vec((w.shape[0], w.shape[1]), w.data.clone())
            .expect("shape product equals data length by checkpoint construction");
        layers.push(LinearLayer { w: warr, b: Array1::from_vec(b.data.clone()) });
    }
    let net = DenseNet::from_layers(layers)?;
    Ok(GaussianPolicy::new(net, bounds(LOW)?, bounds(HIGH)?)?)
}

pub fn save_policy(policy: &GaussianPolicy, path: &Path) -> Result<(), HarnessError> {
    policy_to_checkpoint(policy).save(path)?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<GaussianPolicy, HarnessError> {
    policy_from_checkpoint(&Checkpoint::load(path)?)
}
