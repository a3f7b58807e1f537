use std::f64::consts::PI;

use super::regions::{cusp_regions, mushroom_regions, mushroom_slice, unit_cube};
use super::*;
use crate::field::{FnField, Plain};
use crate::fields::{ConstField, Sec7Field, Thm53Field};
use crate::geometry::{CollarPart, MushroomSpec, RegionTag};

fn tensor() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn constant_on_cube() {
    let spec = MushroomSpec::build(3, 5.0, 1.0, 3).unwrap();
    let one = ConstField { n: 3, c: 1.0 };
    let regions = mushroom_regions(&spec, Selection::Cube).unwrap();
    let r = lp_norm(&Plain(&one), &regions, 2.0, &tensor()).unwrap();
    assert!((r.total - 1.0).abs() < 1e-12);
    let g = sobolev_seminorm(&Plain(&one), &regions, 2.0, &tensor()).unwrap();
    assert_eq!(g.total, 0.0);
}

#[test]
fn coordinate_gradient_on_cube() {
    let f = FnField::with_gradient(3, "x3", |x: &[f64]| x[2], |_: &[f64]| vec![0.0, 0.0, 1.0]);
    let regions = unit_cube(3);
    let g = sobolev_seminorm(&Plain(&f), &regions, 2.0, &tensor()).unwrap();
    assert!((g.total - 1.0).abs() < 1e-12);
}

#[test]
fn thm53_head_and_stem() {
    let spec = MushroomSpec::build(3, 5.0, 1.0, 4).unwrap();
    let u = Thm53Field::new(&spec);
    let heads = mushroom_regions(&spec, Selection::Heads).unwrap();
    let r = lp_norm(&Plain(&u), &heads, 1.0, &tensor()).unwrap();
    let head2 = r.contributions[1].value;
    assert!((head2 - 4.0 * PI).abs() < 1e-10 * 4.0 * PI);
    let stems = mushroom_regions(&spec, Selection::Stems).unwrap();
    let g = sobolev_seminorm(&Plain(&u), &stems, 5.0, &tensor()).unwrap();
    for (k, c) in g.contributions.iter().enumerate() {
        let exact = PI * 4f64.powi(-(k as i32 + 1));
        assert!(
            (c.value - exact).abs() < 1e-10 * exact,
            "k={} {} {}",
            k + 1,
            c.value,
            exact
        );
    }
}

#[test]
fn sec7_stem_gradient_is_stem_volume() {
    let spec = MushroomSpec::build(3, 5.0, 1.0, 3).unwrap();
    let u = Sec7Field::new(&spec, 2).unwrap();
    let regions = vec![regions::mushroom_region(&spec, RegionTag::Stem(2)).unwrap()];
    let g = sobolev_seminorm(&Plain(&u), &regions, 3.0, &tensor()).unwrap();
    let vol = spec.region_measure(RegionTag::Stem(2)).unwrap();
    assert!((g.log2_total - vol.log2).abs() < 1e-12);
}

#[test]
fn log_total_matches_linear_sum() {
    let spec = MushroomSpec::build(3, 5.0, 1.0, 5).unwrap();
    let one = ConstField { n: 3, c: 1.0 };
    let regions = mushroom_regions(&spec, Selection::All).unwrap();
    let r = lp_norm(&Plain(&one), &regions, 1.0, &tensor()).unwrap();
    let linear: f64 = r.contributions.iter().map(|c| c.value).sum();
    assert!((r.log2_total - linear.log2()).abs() < 1e-10);
}

#[test]
fn collar_volumes_via_engine() {
    let spec = MushroomSpec::build(4, 5.0, 1.0, 2).unwrap();
    let one = ConstField { n: 4, c: 1.0 };
    for k in 1..=2 {
        for part in CollarPart::ALL {
            for tag in [RegionTag::StemCollar(k, part), RegionTag::HeadCollar(k, part)] {
                let regions = vec![regions::mushroom_region(&spec, tag).unwrap()];
                let r = lp_norm(&Plain(&one), &regions, 1.0, &tensor()).unwrap();
                let exact = spec.region_measure(tag).unwrap();
                assert!((r.log2_total - exact.log2).abs() < 1e-10, "{tag}");
            }
        }
    }
}

#[test]
fn slab_volume() {
    let spec = MushroomSpec::build(3, 5.0, 1.0, 3).unwrap();
    let one = ConstField { n: 3, c: 1.0 };
    let regions = mushroom_regions(&spec, Selection::Slab).unwrap();
    let r = lp_norm(&Plain(&one), &regions, 1.0, &tensor()).unwrap();
    let exact = spec.region_measure(RegionTag::Slab).unwrap();
    assert!((r.total - exact.linear).abs() < 1e-12);
}

#[test]
fn graded_corner_singularity() {
    // l^{-q} towards the corner circle of a lower wedge, integrable for q < 2
    struct Corner(f64);
    impl RegionField for Corner {
        fn dim(&self) -> usize {
            3
        }
        fn axisymmetric(&self) -> bool {
            true
        }
        fn value_at(&self, _: &RegionLabel, s: &Sample) -> Result<f64> {
            let l = s.local.as_ref().unwrap();
            Ok(l.offset.hypot(l.xn).powf(-self.0))
        }
        fn log2_abs_at(&self, label: &RegionLabel, s: &Sample) -> Result<f64> {
            Ok(self.value_at(label, s)?.log2())
        }
        fn log2_grad_at(&self, _: &RegionLabel, _: &Sample) -> Result<f64> {
            Ok(f64::NEG_INFINITY)
        }
    }
    let spec = MushroomSpec::build(3, 5.0, 1.0, 1).unwrap();
    let regions = vec![regions::mushroom_region(&spec, RegionTag::HeadCollar(1, CollarPart::Lower)).unwrap()];
    let mut last = None;
    for levels in [10, 14, 18, 22] {
        let quad = QuadratureSpec {
            grading_levels: levels,
            ..tensor()
        };
        let r = lp_norm(&Corner(1.5), &regions, 1.0, &quad).unwrap();
        if let Some(prev) = last {
            let rel: f64 = (r.total - prev) / prev;
            assert!(rel.abs() < 5e-3, "levels {levels}: {rel}");
        }
        last = Some(r.total);
    }
    let quad = QuadratureSpec {
        target_rel_error: 1e-3,
        ..tensor()
    };
    let err = lp_norm(&Corner(2.0), &regions, 1.0, &quad).unwrap_err();
    assert!(matches!(err, Error::Numerical(_)));
}

#[test]
fn monte_carlo_agrees_with_tensor() {
    let spec = MushroomSpec::build(3, 5.0, 1.0, 2).unwrap();
    let u = FnField::with_gradient(
        3,
        "smooth",
        |x: &[f64]| 1.0 + x[0] * x[0] + 0.5 * x[2],
        |x: &[f64]| vec![2.0 * x[0], 0.0, 0.5],
    );
    let regions = mushroom_regions(&spec, Selection::All).unwrap();
    let t = lp_norm(&Plain(&u), &regions, 2.0, &tensor()).unwrap();
    let m = lp_norm(&Plain(&u), &regions, 2.0, &QuadratureSpec::monte_carlo(100_000, 7)).unwrap();
    for (a, b) in t.contributions.iter().zip(&m.contributions) {
        let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!(
            (a.value - b.value).abs() <= 3.0 * se + 1e-14 * a.value,
            "{}: {} vs {} ± {}",
            a.region,
            a.value,
            b.value,
            se
        );
    }
}

#[test]
fn bit_identical_across_threads() {
    let spec = MushroomSpec::build(3, 5.0, 1.0, 3).unwrap();
    let u = ConstField { n: 3, c: 2.0 };
    let regions = mushroom_regions(&spec, Selection::Omega).unwrap();
    let quad = QuadratureSpec::monte_carlo(20_000, 99);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| lp_norm(&Plain(&u), &regions, 1.5, &quad).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.log2_total.to_bits(), b.log2_total.to_bits());
    assert_eq!(a, b);
}

#[test]
fn poincare_unit_cube() {
    let f = FnField::with_gradient(3, "x1", |x: &[f64]| x[0], |_: &[f64]| vec![1.0, 0.0, 0.0]);
    let r = poincare_quotient(&Plain(&f), &unit_cube(3), 3f64.sqrt(), 2.0, &tensor()).unwrap();
    assert!((r.quotient - 1.0 / 12.0).abs() < 1e-10);
    let z = ConstField { n: 3, c: 1.0 };
    assert!(poincare_quotient(&Plain(&z), &unit_cube(3), 1.0, 2.0, &tensor()).is_err());
}

#[test]
fn cusp_volume() {
    let cusp = crate::geometry::CuspSpec::build(3, crate::geometry::Profile::Power(2.0)).unwrap();
    let regions = cusp_regions(&cusp);
    let one = ConstField { n: 3, c: 1.0 };
    let r = lp_norm(&Plain(&one), &regions, 1.0, &tensor()).unwrap();
    // π∫ R(t)^2 dt with R the larger of the two sections
    let mut exact = 0.0;
    let steps = 200_000;
    let (a, b) = cusp.axial_range();
    for i in 0..steps {
        let t = a + (b - a) * (i as f64 + 0.5) / steps as f64;
        exact += PI * cusp.section_radius(t).powi(2) * (b - a) / steps as f64;
    }
    assert!((r.total - exact).abs() < 1e-6 * exact, "{} vs {}", r.total, exact);
}

#[test]
fn slice_pieces_cover_plane() {
    let spec = MushroomSpec::build(3, 5.0, 1.0, 2).unwrap();
    let one = ConstField { n: 3, c: 1.0 };
    for t in [0.5, 1.0 + 1e-3, 1.5, 2.0 + 0.1, 2.9] {
        let s = mushroom_slice(&spec, t).unwrap();
        let r = lp_norm(&Plain(&one), &s, 1.0, &tensor()).unwrap();
        if t < 2.0 {
            assert!((r.total - 1.0).abs() < 1e-12, "t={t} {}", r.total);
        } else {
            let exact: f64 = (1..=2).map(|k| PI * (2.0 * spec.head_radius(k)).powi(2)).sum();
            assert!((r.total - exact).abs() < 1e-12, "t={t}");
        }
    }
    assert!(plane_seminorm(&Plain(&one), &[], 1.0, &tensor()).is_err());
}

#[test]
fn series_tails() {
    let s = series_tail(1.75, 2);
    assert!(s.convergent);
    let partial = geometric_partial_sum(1.75, 2, 10_000);
    assert!((s.log2_sum - partial).abs() < 1e-10);
    assert!(!series_tail(0.0, 1).convergent);
    assert!(!series_tail(-1.0, 1).convergent);
}

#[test]
fn monotone_in_regions() {
    let spec = MushroomSpec::build(3, 5.0, 1.0, 3).unwrap();
    let u = Thm53Field::new(&spec);
    let all = mushroom_regions(&spec, Selection::Omega).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for i in 1..=all.len() {
        let r = lp_norm(&Plain(&u), &all[..i], 1.0, &tensor()).unwrap();
        assert!(r.log2_total >= prev);
        prev = r.log2_total;
    }
}
