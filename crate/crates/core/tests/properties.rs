mod common;

use polarmoments::classifier::{isotropy_test, DEFAULT_TOLERANCE};
use polarmoments::moment_engine::{
    central_moment, covariance, moment_tensors, raw_moment, sphere_scan, uncertainty_check, GridSpec, ScanFile,
};
use polarmoments::stokes_algebra::{rotate_state_about, stokes};
use polarmoments::linalg::hermitian_eigenvalues;
use polarmoments::tomography::{protocol_directions, reconstruct, MomentObservations, ThirdOrderVariant};
use polarmoments::{Direction, Manifold};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rotate(v: [f64; 3], axis: [f64; 3], angle: f64) -> [f64; 3] {
    let norm = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    let k = axis.map(|a| a / norm);
    let (s, c) = angle.sin_cos();
    let kv = [k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]];
    let kd = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    [0, 1, 2].map(|i| v[i] * c + kv[i] * s + k[i] * kd * (1.0 - c))
}

fn direction() -> impl Strategy<Value = Direction> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| Direction::new(z.acos(), phi))
}

fn axis() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0f64..1.0).prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_is_direction_independent(n in 0usize..=12, d in direction()) {
        let mut eig = hermitian_eigenvalues(&stokes(n).along(&d.unit()));
        eig.sort_by(f64::total_cmp);
        for (m, e) in eig.iter().enumerate() {
            prop_assert!((e - (2.0 * m as f64 - n as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn pack_matches_direct_trace(seed in any::<u64>(), n in 1usize..=5, r in 1u32..=4, d in direction()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = common::random_state(&mut rng, n);
        let t = moment_tensors(&state, Manifold::Single(n), r).unwrap();
        let direct = raw_moment(&state, Manifold::Single(n), &d, r).unwrap();
        prop_assert!((t.raw_moment(&d, r).unwrap() - direct).abs() < 1e-9);
        let direct = central_moment(&state, Manifold::Single(n), &d, r).unwrap();
        prop_assert!((t.central_moment(&d, r).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn averaged_pack_matches_direct_trace(seed in any::<u64>(), r in 1u32..=4, d in direction()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = common::random_multi_state(&mut rng, 4);
        let t = moment_tensors(&state, Manifold::Averaged, r).unwrap();
        let direct = central_moment(&state, Manifold::Averaged, &d, r).unwrap();
        prop_assert!((t.central_moment(&d, r).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn moments_rotate_with_the_state(
        seed in any::<u64>(), n in 1usize..=4, r in 1u32..=4, d in direction(), ax in axis(), angle in -3.0f64..3.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = common::random_state(&mut rng, n);
        let rotated = rotate_state_about(&state, ax, angle);
        let moved = Direction::from_vector(rotate(d.unit(), ax, angle));
        let sel = Manifold::Single(n);
        let before = central_moment(&state, sel, &d, r).unwrap();
        let after = central_moment(&rotated, sel, &moved, r).unwrap();
        prop_assert!((before - after).abs() < 1e-9, "{before} vs {after}");
        let total_before = covariance(&state, sel).unwrap().trace();
        let total_after = covariance(&rotated, sel).unwrap().trace();
        prop_assert!((total_before - total_after).abs() < 1e-9);
    }

    #[test]
    fn covariance_obeys_uncertainty_bounds(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = common::random_state(&mut rng, n);
        let u = uncertainty_check(&state, n).unwrap();
        prop_assert!(u.lower - 1e-9 <= u.total_variance && u.total_variance <= u.upper + 1e-9);
        let g = covariance(&state, Manifold::Single(n)).unwrap();
        prop_assert!(g.eigenvalues.iter().all(|e| *e > -1e-9));
    }

    #[test]
    fn noiseless_tomography_recovers_packs(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = common::random_state(&mut rng, n);
        let truth = moment_tensors(&state, Manifold::Single(n), 4).unwrap();
        let plan = protocol_directions(4, ThirdOrderVariant::Tilted).unwrap();
        let rec = reconstruct(&MomentObservations::from_tensors(&truth, &plan).unwrap(), 4).unwrap();
        for r in 0..4 {
            prop_assert!(rec.tensors.raw[r].max_abs_diff(&truth.raw[r]) < 1e-9);
            prop_assert!(rec.tensors.central[r].max_abs_diff(&truth.central[r]) < 1e-9);
        }
    }

    #[test]
    fn isotropy_is_rotation_invariant(seed in any::<u64>(), ax in axis(), angle in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = common::random_state(&mut rng, 3);
        let rotated = rotate_state_about(&state, ax, angle);
        let a = isotropy_test(&state, Manifold::Single(3), 3, DEFAULT_TOLERANCE).unwrap();
        let b = isotropy_test(&rotated, Manifold::Single(3), 3, DEFAULT_TOLERANCE).unwrap();
        for r in 1..=3 {
            prop_assert_eq!(a.isotropic(r), b.isotropic(r));
        }
    }
}

#[test]
fn scan_values_match_pointwise_moments() {
    let state = polarmoments::fock_state::named_state("tilted3").unwrap();
    let scan = sphere_scan(&state, Manifold::Single(3), 2, GridSpec::Fibonacci { n: 64 }).unwrap();
    for p in &scan.points {
        let direct = central_moment(&state, Manifold::Single(3), &p.direction, 2).unwrap();
        assert!((p.value(2) - direct).abs() < 1e-9);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.tsv");
    scan.write_file(&path).unwrap();
    let back = ScanFile::read_file(&path).unwrap();
    assert_eq!(back.rows.len(), 64);
    assert_eq!(back.header_value("state_digest"), Some(state.digest().as_str()));
    for (row, p) in back.rows.iter().zip(&scan.points) {
        assert!((row[5] - p.value(2)).abs() < 1e-9);
    }
}

#[test]
fn observations_file_round_trip_reconstructs() {
    let state = polarmoments::fock_state::named_state("peanut3").unwrap();
    let truth = moment_tensors(&state, Manifold::Single(3), 3).unwrap();
    let plan = protocol_directions(3, ThirdOrderVariant::Minimal).unwrap();
    let obs = MomentObservations::from_tensors(&truth, &plan).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obs.tsv");
    obs.write_file(&path).unwrap();
    let rec = reconstruct(&MomentObservations::read_file(&path).unwrap(), 3).unwrap();
    for r in 0..3 {
        assert!(rec.tensors.central[r].max_abs_diff(&truth.central[r]) < 1e-9);
    }
}
