//! Root completeness of the fixed-point solver against a dense brute-force scan.

use bubblecycle_core::equilibria::nontrivial_fixed_points;
use bubblecycle_core::ModelParams;

const CASES: usize = 1000;
const DENSE: usize = 100_000;

/// Small deterministic generator so the case list is fixed.
struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn dense_sign_changes(b: f64, g: f64) -> usize {
    let (lo, hi) = (1e-3f64.ln(), 1e9f64.ln());
    let f = |i: usize| {
        let u = (lo + (hi - lo) * i as f64 / (DENSE - 1) as f64).exp();
        u.ln() - b * u * (g * u).exp()
    };
    let mut prev = f(0);
    let mut count = 0;
    for i in 1..DENSE {
        let cur = f(i);
        if (prev > 0.0) != (cur > 0.0) {
            count += 1;
        }
        prev = cur;
    }
    count
}

#[test]
fn solver_finds_every_sign_change() {
    let mut rng = SplitMix(20_240_601);
    let mut mismatches = Vec::new();
    for _ in 0..CASES {
        let b = 0.01 + 1.99 * rng.next_f64();
        let g = -0.5 + rng.next_f64();
        let found = nontrivial_fixed_points(ModelParams { b, g }).unwrap().len();
        let dense = dense_sign_changes(b, g);
        if found != dense {
            mismatches.push((b, g, found, dense));
        }
    }
    assert!(mismatches.is_empty(), "{mismatches:?}");
}
