//! Random game families for oracle-vs-solver verification.

use crate::game::{CostParams, GameSpec};
use crate::rng::SimRng;

/// Parameter ranges for a random game family.
#[derive(Debug, Clone, Copy)]
pub struct GameFamily {
    pub max_states: usize,
    pub max_messages: usize,
    pub payoff_max: f64,
    pub c_max: f64,
    pub f_max: f64,
}

impl Default for GameFamily {
    fn default() -> Self {
        Self {
            max_states: 6,
            max_messages: 6,
            payoff_max: 20.0,
            c_max: 3.0,
            f_max: 5.0,
        }
    }
}

/// Draw a game with a unique, injective best-message map. Rejection-samples
/// payoff tables until the benchmark invariants hold, which takes a handful
/// of tries at most for continuous draws.
pub fn random_game_spec(rng: &mut SimRng, family: &GameFamily) -> GameSpec {
    loop {
        let ns = 1 + (rng.next_u64() as usize) % family.max_states;
        let nm = ns + (rng.next_u64() as usize) % (family.max_messages - ns + 1);

        let states: Vec<String> = (0..ns).map(|i| format!("s{i}")).collect();
        let messages: Vec<String> = (0..nm).map(|i| format!("m{i}")).collect();

        // Uniform prior weights, renormalized with the last entry patched so
        // the weights sum to one exactly.
        let raw: Vec<f64> = (0..ns).map(|_| 0.05 + rng.next_f64()).collect();
        let total: f64 = raw.iter().sum();
        let mut prior: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let head: f64 = prior[..ns - 1].iter().sum();
        prior[ns - 1] = 1.0 - head;

        let payoff_a: Vec<Vec<f64>> = (0..ns)
            .map(|_| {
                (0..nm)
                    .map(|_| rng.next_f64() * family.payoff_max)
                    .collect()
            })
            .collect();
        let payoff_b: Vec<Vec<Vec<f64>>> = (0..ns)
            .map(|_| {
                (0..nm)
                    .map(|_| {
                        (0..nm)
                            .map(|_| rng.next_f64() * family.payoff_max)
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let c = rng.next_f64() * (family.c_max - 1e-6) + 1e-6;
        let f = c + rng.next_f64() * (family.f_max - c);
        let q = rng.next_f64();
        let beta = rng.next_f64();

        let spec = GameSpec::new(
            states,
            messages,
            prior,
            payoff_a,
            payoff_b,
            CostParams { c, f, q, beta },
        )
        .expect("shapes are consistent by construction");
        if spec.validate().is_benchmark_valid() {
            return spec;
        }
    }
}
