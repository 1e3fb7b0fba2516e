//! Hott-topics problem instances, reward noise, and ground-truth oracles.

mod instance;
mod noise;
mod oracle;

pub use instance::{
    generate_instance, generate_instance_with, mean_reward, mixing_weights, GeneratorOptions,
    HottTopicsInstance, InstanceFile,
};
pub use noise::{sample_reward, NoiseModel, RewardSampler};
pub use oracle::{
    check_enumeration_guard, oracle_quantities, OracleQuantities, ENUMERATION_LIMIT,
};
