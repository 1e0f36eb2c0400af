use std::sync::Arc;

use centroid_imaging::lattice::container::{read_state, write_product, write_tensor, Stored};
use centroid_imaging::lattice::{Basis, Factor, Grid, ProductSum, Term, WaveTensor, DEFAULT_AMPLITUDE_CAP};
use centroid_imaging::loss::{lossy_variance_with_width, LossParams};
use centroid_imaging::measurement::{
    marginal_dense, marginal_low_rank, spectral_power_beyond, total_variation, Distribution,
};
use centroid_imaging::sampler::{CentroidHistogram, DetectorModel, EventRecord};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() }
}

fn grid(points: usize, sin_theta: f64) -> Grid {
    Grid::new(points, 0.5, sin_theta).unwrap()
}

fn amplitudes(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| v.into_iter().map(|(re, im)| C64::new(re, im)).collect())
}

fn tensor(points: usize, photons: usize) -> impl Strategy<Value = WaveTensor> {
    (0.1..0.45f64, amplitudes(points.pow(photons as u32))).prop_map(move |(s, amp)| {
        WaveTensor::from_amplitudes(grid(points, s), photons, Basis::Position, amp).unwrap().normalize().unwrap()
    })
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn event(pixels: usize) -> impl Strategy<Value = EventRecord> {
    (prop::collection::vec((0..pixels, 1..3u32), 0..4), any::<bool>())
        .prop_map(|(hits, saturated)| EventRecord { hits, saturated })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn basis_change_is_unitary(t in tensor(16, 2)) {
        let k = t.clone().change_basis();
        prop_assert!((k.norm_sq() - t.norm_sq()).abs() < 1e-12);
        let back = k.change_basis();
        prop_assert!(max_diff(back.amplitudes(), t.amplitudes()) < 1e-12);
    }

    #[test]
    fn symmetrize_is_idempotent(t in tensor(8, 3)) {
        let s = t.symmetrize().unwrap();
        let again = s.clone().symmetrize().unwrap();
        prop_assert!(max_diff(s.amplitudes(), again.amplitudes()) < 1e-12);
        prop_assert!(s.asymmetry() < 1e-12);
    }

    #[test]
    fn marginal_is_a_distribution(t in tensor(16, 2)) {
        let d = marginal_dense(&t).unwrap();
        prop_assert_eq!(d.len(), 2 * 15 + 1);
        prop_assert!(d.p.iter().all(|&p| p >= 0.0));
        prop_assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_ignores_photon_labels(t in tensor(8, 2)) {
        let m = t.grid().points();
        let a = t.amplitudes();
        let swapped: Vec<C64> = (0..m * m).map(|f| a[(f % m) * m + f / m]).collect();
        let s = WaveTensor::from_amplitudes(*t.grid(), 2, Basis::Position, swapped).unwrap();
        let d1 = marginal_dense(&t).unwrap();
        let d2 = marginal_dense(&s).unwrap();
        prop_assert!(total_variation(&d1, &d2).unwrap() < 1e-13);
    }

    #[test]
    fn low_rank_marginal_matches_dense(
        s in 0.1..0.45f64,
        coefs in amplitudes(3),
        factors in prop::collection::vec(amplitudes(8), 9),
    ) {
        let g = grid(8, s);
        let factors: Vec<Factor> = factors.into_iter().map(Arc::from).collect();
        let terms = coefs
            .iter()
            .enumerate()
            .map(|(r, c)| Term::new(*c, factors[3 * r..3 * r + 3].to_vec()))
            .collect();
        let p = ProductSum::new(g, 3, Basis::Position, terms).unwrap();
        let low = marginal_low_rank(&p).unwrap();
        let dense = marginal_dense(&p.densify().unwrap()).unwrap();
        let worst = low.p.iter().zip(&dense.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn band_limited_marginals_have_bounded_spectra(t in tensor(16, 2)) {
        let (t, _) = t.bandlimit_project().unwrap();
        let g = *t.grid();
        let d = marginal_dense(&t).unwrap();
        prop_assert!(spectral_power_beyond(&d, 4.0 * g.k0() + g.dk()) < 1e-10);
    }

    #[test]
    fn histogram_merge_order_does_not_matter(
        events in prop::collection::vec(event(8), 1..60),
        split in 0usize..60,
        keep in any::<bool>(),
    ) {
        let geometry = DetectorModel::default().geometry(&grid(8, 0.25));
        let split = split.min(events.len());
        let fill = |evs: &[EventRecord]| {
            let mut h = CentroidHistogram::new(geometry);
            for e in evs {
                h.record(e, keep);
            }
            h
        };
        let whole = fill(&events);
        let (a, b) = events.split_at(split);
        let mut ab = fill(a);
        ab.merge(&fill(b));
        let mut ba = fill(b);
        ba.merge(&fill(a));
        prop_assert_eq!(&ab, &ba);
        prop_assert_eq!(ab.retained(), whole.retained());
        prop_assert_eq!(&ab.strata.keys().collect::<Vec<_>>(), &whole.strata.keys().collect::<Vec<_>>());
        prop_assert_eq!(ab.retained() + ab.discarded + ab.rejected, ab.trials);
        prop_assert_eq!(ab.trials, events.len() as u64);
    }

    #[test]
    fn lossy_variance_grows_with_attenuation(
        n0 in 1.0..200.0f64,
        eta in 0.05..1.0f64,
        var0 in 0.0..2.0f64,
        width_sq in 0.01..10.0f64,
        a in 0.0..3.0f64,
        step in 0.0..2.0f64,
    ) {
        let low = lossy_variance_with_width(n0, &LossParams::new(eta, a).unwrap(), var0, width_sq);
        let high = lossy_variance_with_width(n0, &LossParams::new(eta, a + step).unwrap(), var0, width_sq);
        prop_assert!(high >= low * (1.0 - 1e-12));
        prop_assert!(low >= var0);
    }

    #[test]
    fn distribution_csv_round_trip(
        weights in prop::collection::vec(0.0..1.0f64, 1..40).prop_filter("nonzero", |w| w.iter().sum::<f64>() > 0.0),
        spacing in 0.01..2.0f64,
        offset in -10.0..10.0f64,
    ) {
        let d = Distribution::from_weights(spacing, offset, weights, None).unwrap();
        let back = Distribution::from_csv(&d.to_csv(&[])).unwrap();
        prop_assert_eq!(back.p, d.p);
    }

    #[test]
    fn container_round_trip(t in tensor(8, 2), coefs in amplitudes(2), f in prop::collection::vec(amplitudes(8), 4)) {
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        prop_assert_eq!(read_state(&mut buf.as_slice(), DEFAULT_AMPLITUDE_CAP).unwrap(), Stored::Tensor(t.clone()));

        let f: Vec<Factor> = f.into_iter().map(Arc::from).collect();
        let terms = vec![Term::new(coefs[0], f[..2].to_vec()), Term::new(coefs[1], f[2..].to_vec())];
        let p = ProductSum::new(*t.grid(), 2, Basis::Momentum, terms).unwrap();
        let mut buf = Vec::new();
        write_product(&mut buf, &p).unwrap();
        prop_assert_eq!(read_state(&mut buf.as_slice(), DEFAULT_AMPLITUDE_CAP).unwrap(), Stored::Product(p));
    }
}
