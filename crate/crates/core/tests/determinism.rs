//! Bitwise reproducibility across thread-pool sizes. The edge kernels go
//! parallel above 4096 edges, so a 40×40 triangulated grid (4800 edges)
//! exercises the parallel path; every reduction must stay ordered.

use mclfem::config::parse_config;
use mclfem::studies::run_single;
use mclfem::state::State;

fn bits(states: &[State]) -> Vec<u64> {
    states
        .iter()
        .flat_map(|s| (0..s.len()).map(|k| s[k].to_bits()))
        .collect()
}

fn final_state_with_threads(cfg_text: &str, threads: usize) -> (Vec<u64>, Vec<u64>) {
    let cfg = parse_config(cfg_text).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        let art = run_single(&cfg, None).unwrap();
        let conserved: Vec<u64> = art
            .record
            .conserved
            .iter()
            .flatten()
            .map(|v| v.to_bits())
            .collect();
        (bits(&art.trajectory.final_state.values), conserved)
    })
}

fn assert_identical_across_pools(cfg_text: &str) {
    let reference = final_state_with_threads(cfg_text, 1);
    for threads in [2, 4, 8] {
        let run = final_state_with_threads(cfg_text, threads);
        assert!(
            run == reference,
            "{threads}-thread run differs bitwise from the single-thread run"
        );
    }
}

#[test]
fn euler_blast_bitwise_reproducible() {
    assert_identical_across_pools(
        r#"
seed = 7

[model]
kind = "euler"
gamma = 1.4

[mesh]
dim = 2
cells = 40

[limiter]
mode = "mcl"

[integrator]
cfl = 0.9
t_end = 0.02

[initial_condition]
name = "euler_blast"
"#,
    );
}

#[test]
fn burgers_entropy_mode_bitwise_reproducible() {
    assert_identical_across_pools(
        r#"
seed = 7

[model]
kind = "burgers"

[mesh]
dim = 2
cells = 40

[limiter]
mode = "bv_entropy"

[integrator]
cfl = 0.5
t_end = 0.05

[initial_condition]
name = "sine_wave"
amplitude = 1.0
mean = 0.0
"#,
    );
}
