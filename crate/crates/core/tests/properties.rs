use proptest::prelude::*;

use sobexlab::config::{Config, DomainConfig, ExperimentConfig};
use sobexlab::experiments::{fit_exponent, ratio_exponent};
use sobexlab::geometry::mushroom::critical_exponent;
use sobexlab::geometry::{MushroomSpec, RegionTag};
use sobexlab::logspace::{log2_add, log2_sum};
use sobexlab::norms::{geometric_partial_sum, series_tail};

proptest! {
    #[test]
    fn log2_sum_matches_linear(vals in prop::collection::vec(-30.0f64..30.0, 1..20)) {
        let linear: f64 = vals.iter().map(|v| v.exp2()).sum();
        prop_assert!((log2_sum(&vals) - linear.log2()).abs() < 1e-12);
        let shifted: Vec<f64> = vals.iter().map(|v| v - 5000.0).collect();
        prop_assert!((log2_sum(&shifted) + 5000.0 - linear.log2()).abs() < 1e-9);
        prop_assert_eq!(log2_add(vals[0], f64::NEG_INFINITY), vals[0]);
    }

    #[test]
    fn head_interior_points_classify_as_heads(k in 1usize..=6, frac in 0.0f64..0.99, th in 0.0f64..std::f64::consts::TAU, h in 0.01f64..0.99) {
        let spec = MushroomSpec::build(3, 5.0, 1.0, 6).unwrap();
        let z = spec.center(k);
        let s = frac * spec.head_radius(k);
        let x = [z[0] + s * th.cos(), z[1] + s * th.sin(), 2.0 + h];
        prop_assert_eq!(spec.classify(&x), RegionTag::Head(k));
    }

    #[test]
    fn cube_points_classify_as_cube(x in 0.001f64..0.999, y in 0.001f64..0.999, z in 0.001f64..0.999) {
        let spec = MushroomSpec::build(4, 3.0, 1.0, 5).unwrap();
        prop_assert_eq!(spec.classify(&[x, y, z, z]), RegionTag::Cube);
    }

    #[test]
    fn fit_recovers_exact_lines(slope in -5.0f64..5.0, icpt in -50.0f64..50.0, lo in 1usize..4, len in 3usize..10) {
        let rows: Vec<(usize, f64)> = (1..=lo + len + 2).map(|k| (k, icpt + slope * k as f64)).collect();
        let (s, i, res) = fit_exponent(&rows, (lo, lo + len)).unwrap();
        prop_assert!((s - slope).abs() < 1e-9);
        prop_assert!((i - icpt).abs() < 1e-8);
        prop_assert!(res < 1e-8);
    }

    #[test]
    fn ratio_sign_flips_at_the_critical_exponent(n in 3usize..7, q in 0.2f64..0.95, dp in 0.01f64..3.0) {
        let q = q * (n - 1) as f64;
        let crit = critical_exponent(n, q);
        prop_assert!(ratio_exponent(n, crit + dp, q) > 0.0);
        if crit - dp > q {
            prop_assert!(ratio_exponent(n, crit - dp, q) < 0.0);
        }
    }

    #[test]
    fn closed_tails_match_long_partial_sums(alpha in 0.5f64..4.0, k0 in 1i64..6) {
        let t = series_tail(alpha, k0);
        prop_assert!(t.convergent);
        let partial = geometric_partial_sum(alpha, k0, k0 + 4000);
        prop_assert!((t.log2_sum - partial).abs() < 1e-9);
    }

    #[test]
    fn config_round_trip(n in 3usize..6, p in 1.1f64..9.0, q in 0.5f64..1.0, m in 1usize..20, kmax in 2usize..15) {
        let cfg = Config {
            domain: DomainConfig::Mushroom { n, p, q, m, centers: None },
            experiment: ExperimentConfig { kmax, fit_window: Some([2, kmax]), ..ExperimentConfig::default() },
            ..Config::default()
        };
        let text = cfg.to_json();
        let back = Config::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_json(), text);
    }
}
