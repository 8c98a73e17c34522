//! Fixed workloads shared by the criterion benchmarks.

use sdar_core::instances::{gen_double_cycle, gen_mixed, gen_random, gen_single_cycle};
use sdar_core::Instance;

/// One instance per category at benchmark scale.
pub fn workloads() -> Vec<Instance> {
    vec![
        gen_random(10, 1).expect("R10 generates"),
        gen_single_cycle(8, 1).expect("S8 generates"),
        gen_double_cycle(10, 1).expect("D10 generates"),
        gen_mixed(1, 1).expect("M1 generates"),
    ]
}
