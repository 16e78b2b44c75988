//! Property tests for the algebraic invariants.

use gsstv::cube::{band_mean, CubeDims, HsiCube};
use gsstv::graph::{build_graph, GraphParams};
use gsstv::cube::GuideImage;
use gsstv::prox::{project_box, project_l1_ball, project_l2_ball, soft_threshold, BoxBounds};
use proptest::prelude::*;

fn small_cube() -> impl Strategy<Value = HsiCube> {
    ((1usize..4, 1usize..4, 1usize..4), any::<u64>()).prop_map(|((n1, n2, n3), seed)| {
        let mut rng = gsstv::rng::SplitMix64::new(seed);
        HsiCube::from_fn(n1, n2, n3, |_, _, _| rng.next_f64()).unwrap()
    })
}

proptest! {
    #[test]
    fn band_mean_is_linear(cube in small_cube(), a in -2.0f64..2.0, b in -2.0f64..2.0, seed: u64) {
        let dims = cube.dims();
        let mut rng = gsstv::rng::SplitMix64::new(seed);
        let other = HsiCube::from_fn(dims.n1, dims.n2, dims.n3, |_, _, _| rng.next_f64()).unwrap();
        let combo = HsiCube::from_fn(dims.n1, dims.n2, dims.n3, |i, j, k| {
            a * cube.get(i, j, k) + b * other.get(i, j, k)
        }).unwrap();
        let lhs = band_mean(&combo);
        let ga = band_mean(&cube);
        let gb = band_mean(&other);
        for ((l, &x), &y) in lhs.data().iter().zip(ga.data()).zip(gb.data()) {
            let want = a * x + b * y;
            prop_assert!((l - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn flat_index_bijective(n1 in 1usize..6, n2 in 1usize..6, n3 in 1usize..6) {
        let dims = CubeDims::new(n1, n2, n3).unwrap();
        let mut seen = vec![false; dims.len()];
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    let idx = dims.flat_index(i, j, k);
                    prop_assert!(!seen[idx]);
                    seen[idx] = true;
                    prop_assert_eq!(dims.unflatten(idx), (i, j, k));
                }
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn graph_weights_in_unit_interval(seed: u64, sigma_l in 0.1f64..8.0, sigma_x in 0.01f64..2.0) {
        let mut rng = gsstv::rng::SplitMix64::new(seed);
        let data: Vec<f64> = (0..12).map(|_| rng.next_f64()).collect();
        let guide = GuideImage::new(3, 4, data).unwrap();
        let graph = build_graph(&guide, &GraphParams::new(sigma_l, sigma_x).unwrap()).unwrap();
        prop_assert_eq!(graph.num_edges(), 2 * 4 + 3 * 3 + 2 * 2 * 3);
        for &w in graph.weights() {
            prop_assert!(w > 0.0 && w <= 1.0);
        }
    }

    #[test]
    fn projections_idempotent_and_feasible(
        z in prop::collection::vec(-5.0f64..5.0, 1..12),
        eta in 0.1f64..4.0,
        radius in 0.1f64..3.0,
    ) {
        let p1 = project_l1_ball(&z, eta).unwrap();
        let l1: f64 = p1.iter().map(|v| v.abs()).sum();
        prop_assert!(l1 <= eta * (1.0 + 1e-12));
        let p1_again = project_l1_ball(&p1, eta).unwrap();
        for (a, b) in p1.iter().zip(&p1_again) {
            prop_assert!((a - b).abs() <= 1e-12);
        }

        let center = vec![0.25; z.len()];
        let p2 = project_l2_ball(&z, &center, radius);
        let dist: f64 = p2.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!(dist <= radius * (1.0 + 1e-12));

        let bounds = BoxBounds::new(-0.5, 0.5).unwrap();
        let p3 = project_box(&z, &bounds);
        prop_assert!(p3.iter().all(|&v| (-0.5..=0.5).contains(&v)));
        prop_assert_eq!(project_box(&p3, &bounds), p3.clone());
    }

    #[test]
    fn soft_threshold_shrinks_toward_zero(
        z in prop::collection::vec(-5.0f64..5.0, 1..12),
        gamma in 0.0f64..3.0,
    ) {
        let out = soft_threshold(&z, gamma).unwrap();
        for (a, b) in z.iter().zip(&out) {
            prop_assert!(b.abs() <= a.abs() + 1e-15);
            prop_assert!(*b == 0.0 || b.signum() == a.signum());
            prop_assert!((a.abs() - b.abs() - gamma.min(a.abs())).abs() <= 1e-12);
        }
    }
}
