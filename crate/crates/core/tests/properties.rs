use boundary_gp::bessel::{moment_bound, required_tail_order, scaled_bessel_i, scaled_bessel_table, weighted_order_moment};
use boundary_gp::geometry::{
    generate_design, lebesgue_error, max_radius, membership, shape_radius, Design, GridCurve, PolarImage, ShapeCase,
};
use boundary_gp::kernel::{kernel_value, pve, tail_bound, truncated_kernel, KernelSpec};
use boundary_gp::models::{
    hellinger, region_loglik, sample_ordered_posterior, GaussianOrder, NoiseModel, PriorHyperparams, RegionDensity,
    RegionStats,
};
use boundary_gp::rng;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::{PI, TAU};

const XS: [f64; 6] = [0.5, 1.0, 2.0, 8.0, 50.0, 200.0];

#[test]
fn bessel_normalization_and_second_moment() {
    for x in XS {
        let n = required_tail_order(x, 1);
        let table = scaled_bessel_table(2.0 * x, n).unwrap();
        let total = table.values()[0] + 2.0 * table.values()[1..].iter().sum::<f64>();
        assert!((total - 1.0).abs() < 1e-10, "x = {x}: {total}");
        let m = weighted_order_moment(x, 1, n).unwrap();
        assert!((m - 2.0 * x).abs() < 1e-10 * (2.0 * x).max(1.0), "x = {x}: {m}");
    }
}

#[test]
fn bessel_higher_moments_respect_bound() {
    for x in XS {
        for j in 1..=4 {
            let n = required_tail_order(x, j);
            let m = weighted_order_moment(x, j, n).unwrap();
            assert!(m <= moment_bound(x, j) * (1.0 + 1e-12), "x = {x}, j = {j}");
        }
    }
}

#[test]
fn bessel_asymptote() {
    let v = 1e4f64.sqrt() * scaled_bessel_i(0, 1e4).unwrap();
    assert!((v - (2.0 * PI).powf(-0.5)).abs() < 1e-4);
}

#[test]
fn bessel_sqrt_scaled_is_increasing() {
    for (n, upper) in [(0i64, 0.5), (1, 1.5), (2, 100.0), (3, 100.0), (5, 100.0)] {
        let mut last = 0.0;
        for i in 1..=2000 {
            let x = upper * i as f64 / 2000.0;
            let v = x.sqrt() * scaled_bessel_i(n, x).unwrap();
            assert!(v >= last * (1.0 - 1e-13), "n = {n}, x = {x}");
            last = v;
        }
    }
}

proptest! {
    #[test]
    fn bessel_decreasing_in_order(n in 0i64..60, x in 1e-3f64..2e3) {
        let a = scaled_bessel_i(n, x).unwrap();
        let b = scaled_bessel_i(n + 1, x).unwrap();
        prop_assert!(b < a || (a == 0.0 && b == 0.0));
    }

    #[test]
    fn kernel_is_stationary(a in 0.05f64..12.0, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0, shift in -5i32..5, s in -2.0f64..2.0) {
        let k = kernel_value(a, t1, t2);
        prop_assert!((k - kernel_value(a, t1 + s, t2 + s)).abs() < 1e-12);
        prop_assert!((k - kernel_value(a, t1 + shift as f64, t2)).abs() < 1e-12);
        prop_assert!((k - kernel_value(a, t2, t1)).abs() < 1e-12);
    }

    #[test]
    fn region_stats_match_direct_loglik(seed in any::<u64>(), family in 0usize..4, split in 0.05f64..0.95) {
        let mut r = rng::stream(seed);
        let noise = match family {
            0 => NoiseModel::Bernoulli { p_in: 0.6, p_out: 0.25 },
            1 => NoiseModel::Gaussian { mean_in: 2.0, sd_in: 0.7, mean_out: -0.5, sd_out: 1.3, order: GaussianOrder::MeanAndVariance },
            2 => NoiseModel::Poisson { rate_in: 4.0, rate_out: 1.5 },
            _ => NoiseModel::Exponential { rate_in: 2.0, rate_out: 0.5 },
        };
        let ys: Vec<f64> = (0..1000)
            .map(|_| match family {
                0 => f64::from(r.random::<f64>() < 0.4),
                1 => 3.0 * r.random::<f64>() - 1.0,
                2 => (6.0 * r.random::<f64>()).floor(),
                _ => 4.0 * r.random::<f64>(),
            })
            .collect();
        let inside: Vec<bool> = (0..1000).map(|_| r.random::<f64>() < split).collect();
        prop_assume!(inside.iter().any(|&b| b) && inside.iter().any(|&b| !b));
        let direct: f64 = ys
            .iter()
            .zip(&inside)
            .map(|(&y, &i)| if i { noise.inside().ln_density(y) } else { noise.outside().ln_density(y) })
            .sum();
        let mut via = region_loglik(&noise, &RegionStats::from_partition(&ys, &inside)).unwrap();
        if family == 2 {
            // the Poisson form drops the data-only factorial term
            via -= ys.iter().map(|&y| statrs::function::gamma::ln_gamma(y + 1.0)).sum::<f64>();
        }
        prop_assert!((direct - via).abs() < 1e-9 * direct.abs().max(1.0), "{direct} vs {via}");
    }

    #[test]
    fn hellinger_symmetric_and_triangle(family in 0usize..4, p in prop::array::uniform3(0.02f64..0.98), q in prop::array::uniform3(0.1f64..5.0)) {
        let make = |i: usize| match family {
            0 => RegionDensity::Bernoulli { p: p[i] },
            1 => RegionDensity::Gaussian { mean: q[i] - 2.0, sd: 0.2 + p[i] },
            2 => RegionDensity::Poisson { rate: q[i] },
            _ => RegionDensity::Exponential { rate: q[i] },
        };
        let (a, b, c) = (make(0), make(1), make(2));
        let hab = hellinger(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&hab));
        prop_assert!((hab - hellinger(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(hab <= hellinger(&a, &c).unwrap() + hellinger(&c, &b).unwrap() + 1e-12);
        prop_assert!(hellinger(&a, &a).unwrap().abs() < 1e-7);
    }

    #[test]
    fn ordered_draws_respect_order(seed in any::<u64>(), n_in in 1usize..50, n_out in 1usize..50, f in 0.0f64..1.0, g in 0.0f64..1.0) {
        let mut r = rng::stream(seed);
        let stats = RegionStats {
            n_in,
            sum_in: (f * n_in as f64).round(),
            sumsq_in: (f * n_in as f64).round(),
            n_out,
            sum_out: (g * n_out as f64).round(),
            sumsq_out: (g * n_out as f64).round(),
        };
        let prior = PriorHyperparams { beta: (1.0, 1.0), ..PriorHyperparams::default() };
        let mut m = NoiseModel::Bernoulli { p_in: 0.6, p_out: 0.4 };
        for _ in 0..20 {
            m = sample_ordered_posterior(&prior, &stats, &m, &mut r).unwrap();
            prop_assert!(m.satisfies_order());
        }
    }

    #[test]
    fn lebesgue_is_pseudometric(c in prop::array::uniform3(prop::array::uniform4(-0.05f64..0.05))) {
        let curve = |k: usize| {
            let c = c[k];
            GridCurve::tabulate(&move |w: f64| 0.25 + c[0] + c[1] * w.cos() + c[2] * (2.0 * w).sin() + c[3] * (3.0 * w).cos(), 512).unwrap()
        };
        let (a, b, d) = (curve(0), curve(1), curve(2));
        let ab = lebesgue_error(&a, &b, 4096);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - lebesgue_error(&b, &a, 4096)).abs() < 1e-12);
        prop_assert!(ab <= lebesgue_error(&a, &d, 4096) + lebesgue_error(&d, &b, 4096) + 1e-8);
        prop_assert!(lebesgue_error(&a, &a, 4096) == 0.0);
    }

    #[test]
    fn shifted_ellipse_solves_implicit_equation(omega in 0.0f64..TAU) {
        let shape = ShapeCase::b2();
        let ShapeCase::ShiftedEllipse { b1, b2, center, rotation } = shape else { unreachable!() };
        let r = shape_radius(&shape, omega).unwrap();
        let (x, y) = (r * omega.cos() - center[0], r * omega.sin() - center[1]);
        let (u, v) = (x * rotation.cos() + y * rotation.sin(), -x * rotation.sin() + y * rotation.cos());
        prop_assert!(((u / b1).powi(2) + (v / b2).powi(2) - 1.0).abs() < 1e-10);
        prop_assert!(r > 0.0 && r < max_radius(omega));
    }
}

#[test]
fn gram_matrices_are_psd() {
    let n = 50;
    let ts: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    for a in [0.5, 2.0, 8.0] {
        let gram = DMatrix::from_fn(n, n, |i, j| kernel_value(a, ts[i], ts[j]));
        let min = SymmetricEigen::new(gram).eigenvalues.min();
        assert!(min >= -1e-10, "a = {a}: {min}");
    }
}

#[test]
fn truncation_error_is_bounded() {
    for (a, j) in [(1.0, 5), (5.0, 10), (10.0, 20)] {
        let spec = KernelSpec::new(a, 1.0, j).unwrap();
        let bound = tail_bound(a, j, 200).unwrap() + 1e-12;
        let mut worst = 0.0f64;
        for i in 0..64 {
            for k in 0..64 {
                let (t1, t2) = (i as f64 / 64.0, k as f64 / 64.0);
                worst = worst.max((truncated_kernel(&spec, t1, t2).unwrap() - kernel_value(a, t1, t2)).abs());
            }
        }
        assert!(worst <= bound, "a = {a}, J = {j}: {worst} > {bound}");
    }
}

#[test]
fn pve_monotone() {
    let scales: Vec<f64> = (1..=40).map(|i| 0.25 * i as f64).collect();
    for j in [1, 3, 5, 10, 20] {
        for w in scales.windows(2) {
            assert!(pve(w[1], j).unwrap() <= pve(w[0], j).unwrap() + 1e-14);
        }
    }
    for &a in &scales {
        for j in 1..30 {
            assert!(pve(a, j + 1).unwrap() >= pve(a, j).unwrap() - 1e-14);
        }
    }
}

#[test]
fn shapes_stay_inside_frame() {
    for shape in [ShapeCase::b1(), ShapeCase::b2(), ShapeCase::b3()] {
        for i in 0..4096 {
            let w = TAU * i as f64 / 4096.0;
            assert!(shape_radius(&shape, w).unwrap() < max_radius(w));
        }
    }
}

#[test]
fn membership_disagreement_tracks_lebesgue_area() {
    let m = 500;
    let points = generate_design(Design::Jittered { m }, 21).unwrap();
    let image = PolarImage::from_cartesian(&points, &vec![0.0; points.len()], Design::Jittered { m }, 21).unwrap();
    let (a, b) = (ShapeCase::b1(), ShapeCase::b2());
    let omegas = image.omegas();
    let va: Vec<f64> = omegas.iter().map(|&w| shape_radius(&a, w).unwrap()).collect();
    let vb: Vec<f64> = omegas.iter().map(|&w| shape_radius(&b, w).unwrap()).collect();
    let differ = membership(&va, &image).iter().zip(membership(&vb, &image)).filter(|(x, y)| **x != *y).count();
    let fraction = differ as f64 / image.len() as f64;
    let area = lebesgue_error(&a, &b, 20_000);
    assert!((fraction - area).abs() < 5.0 / m as f64, "{fraction} vs {area}");
}

#[test]
fn ordered_means_match_unconstrained_when_order_is_slack() {
    let stats = RegionStats { n_in: 400, sum_in: 200.0, sumsq_in: 200.0, n_out: 600, sum_out: 120.0, sumsq_out: 120.0 };
    let prior = PriorHyperparams { beta: (1.0, 1.0), ..PriorHyperparams::default() };
    let mut r = rng::stream(5);
    let mut m = NoiseModel::Bernoulli { p_in: 0.5, p_out: 0.2 };
    let n = 4000;
    let (mut s_in, mut s_out) = (0.0, 0.0);
    for _ in 0..n {
        m = sample_ordered_posterior(&prior, &stats, &m, &mut r).unwrap();
        let NoiseModel::Bernoulli { p_in, p_out } = m else { unreachable!() };
        s_in += p_in;
        s_out += p_out;
    }
    let (e_in, e_out) = (201.0 / 402.0, 121.0 / 602.0);
    let sd_in = (e_in * (1.0 - e_in) / 403.0f64).sqrt();
    let sd_out = (e_out * (1.0 - e_out) / 603.0f64).sqrt();
    assert!((s_in / n as f64 - e_in).abs() < 4.0 * sd_in / (n as f64).sqrt());
    assert!((s_out / n as f64 - e_out).abs() < 4.0 * sd_out / (n as f64).sqrt());
}
