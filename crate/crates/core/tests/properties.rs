use std::sync::Arc;

use proptest::prelude::*;

use fbe_core::cli::config::{Experiment, RunConfig};
use fbe_core::grid::{Field1D, Grid1D};
use fbe_core::wspace::{weighted_norm, WeightedNormSpec};

fn setup() -> (Arc<Grid1D>, Field1D) {
    let g = Arc::new(Grid1D::graded(-1.0, 1.0, 128, 0.5).unwrap());
    let r = Field1D::from_fn(g.clone(), |x| 1.0 - x * x).unwrap();
    (g, r)
}

fn trig(g: &Arc<Grid1D>, c: &[f64]) -> Field1D {
    Field1D::from_fn(g.clone(), |x| c.iter().enumerate().map(|(m, a)| a * ((m + 1) as f64 * x).cos()).sum()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn config_round_trips(
        seed in any::<u64>(),
        kappa in 0.1f64..4.0,
        beta in -2.0f64..2.0,
        cells in 64usize..4096,
        eps0 in 0.01f64..0.5,
        exp in 0usize..8,
    ) {
        let mut c = RunConfig::default();
        c.seed = seed;
        c.experiment = Experiment::ALL[exp];
        c.physics.kappa = kappa;
        c.physics.beta = beta;
        c.numerics.cells = cells;
        c.numerics.eps = vec![eps0, eps0 / 3.0];
        prop_assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn weighted_norm_is_a_norm(
        a in prop::collection::vec(-1.0f64..1.0, 4),
        b in prop::collection::vec(-1.0f64..1.0, 4),
        lambda in -5.0f64..5.0,
        j in 0usize..3,
        sigma in 0.0f64..2.0,
    ) {
        let (g, r) = setup();
        let spec = WeightedNormSpec { j, sigma };
        let f = trig(&g, &a);
        let h = trig(&g, &b);
        let nf = weighted_norm(&f, &r, spec).unwrap();
        let nh = weighted_norm(&h, &r, spec).unwrap();
        let scaled = weighted_norm(&f.map(|x| lambda * x), &r, spec).unwrap();
        prop_assert!((scaled - lambda.abs() * nf).abs() <= 1e-10 * (1.0 + scaled));
        let sum = weighted_norm(&f.zip_map(&h, |x, y| x + y), &r, spec).unwrap();
        prop_assert!(sum <= nf + nh + 1e-10 * (1.0 + sum));
    }
}
