use std::f64::consts::PI;

use capscale_core::cut::reduce_to_unicast;
use capscale_core::protocol::taa_upper_bound;
use capscale_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pts(v: &[(f64, f64)]) -> Vec<Point> {
    v.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

#[test]
fn sub_squares_hold_about_a_hundred_nodes() {
    // Binomial(1e4, 0.01): sd 9.95, so +-30 is three sigma.
    let net = generate_network(10_000, 11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut good = 0;
    for _ in 0..100 {
        let (x0, y0): (f64, f64) = (rng.gen::<f64>() * 0.9, rng.gen::<f64>() * 0.9);
        let k = net
            .points()
            .iter()
            .filter(|p| p.x >= x0 && p.x < x0 + 0.1 && p.y >= y0 && p.y < y0 + 0.1)
            .count();
        if (70..=130).contains(&k) {
            good += 1;
        }
    }
    assert!(good >= 95, "{good}");
}

#[test]
fn covering_disk_and_empty_disk() {
    let net = generate_network(500, 3).unwrap();
    assert_eq!(
        nodes_in_disk(&net, Point::new(0.5, 0.5), 2f64.sqrt()).len(),
        500
    );
    let one = NetworkInstance::from_points(pts(&[(0.0, 0.0)]), 0).unwrap();
    assert!(nodes_in_disk(&one, Point::new(1.0, 1.0), 0.1).is_empty());
}

#[test]
fn union_area_examples() {
    let one = union_of_disks_area(&pts(&[(0.5, 0.5)]), 0.1, 1000).unwrap();
    assert!((one / (PI * 0.01) - 1.0).abs() < 0.01);
    let two = union_of_disks_area(&pts(&[(0.25, 0.25), (0.75, 0.75)]), 0.05, 1000).unwrap();
    assert!((two / (2.0 * PI * 0.0025) - 1.0).abs() < 0.01);
    let same = union_of_disks_area(&pts(&[(0.5, 0.5), (0.5, 0.5)]), 0.1, 1000).unwrap();
    assert_eq!(same, one);
    assert_eq!(union_of_disks_area(&[], 0.1, 1000).unwrap(), 0.0);
}

#[test]
fn taa_bounds() {
    assert_eq!(taa_upper_bound(Mode::Ptp, 10_000, 0.05), 1.0);
    assert!((taa_upper_bound(Mode::Mpr, 10_000, 0.05) - 25.0).abs() < 1e-9);
    assert!((taa_upper_bound(Mode::MptMpr, 10_000, 0.05) - 625.0).abs() < 1e-9);
}

#[test]
fn brute_force_small_clusters() {
    let r = CommRange::new(0.1).unwrap();
    let pair = NetworkInstance::from_points(pts(&[(0.5, 0.5), (0.55, 0.5)]), 0).unwrap();
    for mode in Mode::ALL {
        assert_eq!(max_feasible_brute(&pair, mode, r, 0.5).unwrap().len(), 1);
    }
    let quad = NetworkInstance::from_points(
        pts(&[(0.5, 0.5), (0.51, 0.5), (0.5, 0.51), (0.51, 0.51)]),
        0,
    )
    .unwrap();
    assert_eq!(
        max_feasible_brute(&quad, Mode::MptMpr, r, 0.5)
            .unwrap()
            .len(),
        4
    );
    assert_eq!(
        max_feasible_brute(&quad, Mode::Ptp, r, 0.5).unwrap().len(),
        1
    );
    let big = generate_network(13, 0).unwrap();
    assert!(matches!(
        max_feasible_brute(&big, Mode::Ptp, r, 0.5),
        Err(Error::SizeLimit { .. })
    ));
}

#[test]
fn grid_and_schedule_counts() {
    let g = build_grid(0.2).unwrap();
    assert_eq!((g.cols(), g.rows()), (8, 8));
    assert_eq!(build_grid(2f64.sqrt()).unwrap().num_cells(), 1);
    let s = build_schedule(&g, 0.0).unwrap();
    assert_eq!(s.num_slots(), 16);
    for slot in 0..16 {
        let cells = s.cells_in_slot(slot);
        assert_eq!(cells.len(), 4);
        for a in &cells {
            for b in &cells {
                if a != b {
                    assert!(a.i.abs_diff(b.i) >= 3 || a.j.abs_diff(b.j) >= 3);
                    assert!(a.i == b.i || a.i.abs_diff(b.i) >= 3);
                    assert!(a.j == b.j || a.j.abs_diff(b.j) >= 3);
                }
            }
        }
    }
}

#[test]
fn dense_cell_graph_is_connected() {
    let n = 10_000;
    let t = 2.0 * connectivity_range(n, 1.0).unwrap();
    let net = generate_network(n, 2).unwrap();
    let g = build_cell_graph(&net, &build_grid(t).unwrap(), t);
    assert!(g.is_connected());
    let one = NetworkInstance::from_points(pts(&[(0.3, 0.3)]), 0).unwrap();
    let g1 = build_cell_graph(&one, &build_grid(0.1).unwrap(), 0.1);
    assert_eq!((g1.num_vertices(), g1.num_edges()), (1, 0));
}

#[test]
fn disk_count_matches_split_binomial() {
    // Left and right halves of a radius-t/2 disk each catch a node with
    // probability p = pi t^2 / 8, so E[left * right] = n (n - 1) p^2.
    let (n, t) = (10_000, 0.1);
    let p = PI * t * t / 8.0;
    let expected = n as f64 * (n as f64 - 1.0) * p * p;
    let net = generate_network(n, 21).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut total = 0.0;
    for _ in 0..50 {
        let c = Point::new(0.05 + 0.9 * rng.gen::<f64>(), 0.05 + 0.9 * rng.gen::<f64>());
        let ts = disk_bipartite_assignment(&net, c, t).unwrap();
        assert!(is_feasible(&ts, &net).unwrap());
        total += ts.len() as f64;
    }
    let mean = total / 50.0;
    assert!((mean / expected - 1.0).abs() < 0.35, "{mean} vs {expected}");
}

#[test]
fn whole_square_is_one_disk() {
    let net = generate_network(300, 4).unwrap();
    let t = 2f64.sqrt();
    let one = disk_bipartite_assignment(&net, Point::new(0.5, 0.5), t).unwrap();
    assert_eq!(count_simultaneous_links(&net, t, 0.0).unwrap(), one.len());
}

#[test]
fn links_grow_superlinearly_in_n() {
    let ns = [2000usize, 4000, 8000, 16_000];
    let points: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let t = 3.0 * connectivity_range(n, 1.0).unwrap();
            let net = generate_network(n, 6).unwrap();
            (
                n as f64,
                count_simultaneous_links(&net, t, 0.0).unwrap() as f64,
            )
        })
        .collect();
    let fit = fit_loglog(&points).unwrap();
    assert!(fit.slope > 1.0, "{}", fit.slope);
}

#[test]
fn two_point_emst_matches_monte_carlo() {
    // Independent oracle: mean distance of 2e5 uniform pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let k = 200_000;
    let oracle = (0..k)
        .map(|_| {
            let (a, b, c, d): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());
            (a - c).hypot(b - d)
        })
        .sum::<f64>()
        / k as f64;
    assert!((oracle - 0.5214).abs() < 0.003, "{oracle}");
    let study = emst_scaling_study(&[2, 3, 4], 4000, 9).unwrap();
    let p = study.points[0];
    assert!(
        (p.mean - oracle).abs() < 4.0 * p.stderr + 1e-3,
        "{} vs {oracle}",
        p.mean
    );
}

#[test]
fn emst_quadrupling_m_doubles_length() {
    let s = emst_scaling_study(&[16, 64, 256], 60, 2).unwrap();
    let r = s.points[2].mean / s.points[1].mean;
    assert!((r - 2.0).abs() < 0.2, "{r}");
}

fn straight_line_net(n: usize, seed: u64, a: (f64, f64), b: (f64, f64)) -> NetworkInstance {
    let mut p = vec![Point::new(a.0, a.1), Point::new(b.0, b.1)];
    p.extend(generate_network(n, seed).unwrap().points().iter().copied());
    NetworkInstance::from_points(p, seed).unwrap()
}

#[test]
fn unicast_relays_follow_the_row() {
    let t = 0.1;
    let grid = build_grid(t).unwrap();
    let side = grid.side();
    for (seed, x0, x1) in [(1u64, 0.05, 0.93), (2, 0.2, 0.8), (3, 0.1, 0.6)] {
        let y = (7.5) * side;
        let net = straight_line_net(10_000, seed, (x0, y), (x1, y));
        let graph = build_cell_graph(&net, &grid, t);
        let s = MulticastSession::new(0, NodeId(0), vec![NodeId(1)]).unwrap();
        let tree = route_session(&s, &net, &grid, &graph).unwrap();
        let relays = tree.relay_nodes().len() as f64;
        let cells = (x1 - x0) / side;
        assert!(
            (relays - cells).abs() <= 1.5,
            "{relays} relays for {cells} cells"
        );
    }
}

#[test]
fn unicast_area_is_a_capsule() {
    // A straight path of length d swept by radius-t disks covers about
    // 2 t d + pi t^2.
    let t = 0.1;
    let grid = build_grid(t).unwrap();
    let (x0, x1, y) = (0.2, 0.8, 7.5 * grid.side());
    let net = straight_line_net(10_000, 4, (x0, y), (x1, y));
    let graph = build_cell_graph(&net, &grid, t);
    let s = MulticastSession::new(0, NodeId(0), vec![NodeId(1)]).unwrap();
    let tree = route_session(&s, &net, &grid, &graph).unwrap();
    let area = mamt_area(&tree, t, 1000).unwrap();
    // The last relay stops within t of the destination.
    let d = x1 - x0 - t;
    let capsule = 2.0 * t * d + PI * t * t;
    assert!((area / capsule - 1.0).abs() < 0.15, "{area} vs {capsule}");
}

#[test]
fn single_cell_session_has_no_relays() {
    let t = 0.2;
    let net =
        NetworkInstance::from_points(pts(&[(0.51, 0.51), (0.52, 0.53), (0.53, 0.52)]), 0).unwrap();
    let grid = build_grid(t).unwrap();
    let graph = build_cell_graph(&net, &grid, t);
    let s = MulticastSession::new(0, NodeId(0), vec![NodeId(1), NodeId(2)]).unwrap();
    let tree = route_session(&s, &net, &grid, &graph).unwrap();
    assert!(tree.relay_nodes().is_empty());
    assert_eq!(memtc_count(&tree, &grid), 1);
    let area = mamt_area(&tree, t, 1000).unwrap();
    assert!((area / (PI * t * t) - 1.0).abs() < 0.01);
}

#[test]
fn capacity_formulas() {
    let n = 10_000;
    let t = 0.03035;
    let ptp = theoretical_capacity(Mode::Ptp, false, n, t, 1).unwrap();
    assert!((ptp - 0.003295).abs() < 1e-6);
    for (n, t, m) in [(100, 0.3, 1), (5000, 0.05, 4), (10_000, 0.03, 9)] {
        assert_eq!(
            theoretical_capacity(Mode::MptMpr, true, n, t, m).unwrap(),
            theoretical_capacity(Mode::MptMpr, false, n, t, m).unwrap()
        );
        let g = gain_vs_ptp(n, t, m).unwrap();
        let n2t4 = (n as f64).powi(2) * t.powi(4);
        assert!((g / n2t4 - 1.0).abs() < 1e-12);
    }
    // t = sqrt(ln n / n) gives ln(n)^1.5 / sqrt(n) for MPT_MPR.
    for n in [1000usize, 10_000, 100_000] {
        let nf = n as f64;
        let t = (nf.ln() / nf).sqrt();
        let c = theoretical_capacity(Mode::MptMpr, false, n, t, 1).unwrap();
        assert!((c / (nf.ln().powf(1.5) / nf.sqrt()) - 1.0).abs() < 1e-12);
        let g = gain_vs_ptp(n, t, 1).unwrap();
        assert!((g / nf.ln().powi(2) - 1.0).abs() < 1e-12);
    }
    assert!((gain_vs_ptp(10_000, 0.03035, 1).unwrap() - 84.86).abs() < 0.02);
}

#[test]
fn cut_bound_matches_capacity_orders() {
    for (n, t) in [(1000, 0.1), (10_000, 0.04)] {
        assert_eq!(
            nc_upper_bound_rate(Mode::MptMpr, n, t),
            theoretical_capacity(Mode::MptMpr, false, n, t, 1).unwrap()
        );
        assert_eq!(
            nc_upper_bound_rate(Mode::Ptp, n, t),
            theoretical_capacity(Mode::Ptp, true, n, t, 1).unwrap()
        );
        assert_eq!(
            nc_upper_bound_rate(Mode::Mpt, n, t),
            nc_upper_bound_rate(Mode::Mpr, n, t)
        );
    }
}

#[test]
fn property_p_fraction_matches_closed_form() {
    let n = 10_000;
    for m in [1usize, 3, 8] {
        let expected = 1.0 - 0.5f64.powi(m as i32);
        let net = generate_network(n, m as u64).unwrap();
        let s = random_sessions(&net, m, 77).unwrap();
        let f = count_property_p(&net, &s, &Cut::default()) as f64 / n as f64;
        assert!((f - expected).abs() < 0.05, "m={m}: {f} vs {expected}");
    }
    let net = generate_network(2000, 1).unwrap();
    let s = random_sessions(&net, 40, 2).unwrap();
    let f = count_property_p(&net, &s, &Cut::default()) as f64 / 2000.0;
    assert!(f > 0.999);
}

#[test]
fn reduction_of_single_destination_sessions_is_identity() {
    let net = generate_network(500, 8).unwrap();
    let s = random_sessions(&net, 1, 3).unwrap();
    let red = reduce_to_unicast(&net, &s, &Cut::default());
    for (p, s) in red.pairs.iter().zip(&s) {
        assert_eq!(p.destination, s.destinations[0]);
    }
}

#[test]
fn noisy_cubic_fits_slope_three() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<(f64, f64)> = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&x: &f64| (x, x.powi(3) * (1.0 + rng.gen_range(-0.05..0.05))))
        .collect();
    let fit = fit_loglog(&points).unwrap();
    assert!((fit.slope - 3.0).abs() < 0.1);
    assert!(fit.r2 <= 1.0);
}

#[test]
fn fit_ignores_trial_order() {
    let xs = [1.0, 2.0, 4.0, 8.0];
    let samples: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| vec![x, 1.1 * x, 0.9 * x, 1.05 * x])
        .collect();
    let shuffled: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| vec![s[2], s[0], s[3], s[1]])
        .collect();
    let a = fit_samples(&xs, &samples).unwrap();
    let b = fit_samples(&xs, &shuffled).unwrap();
    assert!((a.slope - b.slope).abs() < 1e-12);
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!((p.mean - q.mean).abs() < 1e-12);
        assert!((p.stderr - q.stderr).abs() < 1e-12);
    }
}
