//! Reference instances of each oracle, printed as reports.

use ftn_mccr::allocation::{objective, waterfill};
use ftn_mccr::decomp::{combine, singular_spectrum, ChannelMatrix};
use ftn_mccr::pulse::{basis_coefficients, build_isi_matrix, PulseSpec};
use ftn_mccr_oracles::{kron_svd_oracle, projection_oracle, qfunc_oracle, waterfill_oracle, OracleReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn projection_reference_tap() {
    let spec = PulseSpec::with_defaults(0.67, 0.5).unwrap();
    let main = basis_coefficients(&spec).unwrap().tap(0);
    let report = OracleReport::scalar("projection", "delta=0.67 beta=0.5 l=0", main, projection_oracle(&spec, 0).unwrap(), 1e-8);
    println!("{report}");
    assert!(report.pass);
}

#[test]
fn waterfill_four_channel_instance() {
    let spec = PulseSpec::with_defaults(0.67, 0.5).unwrap();
    let isi = build_isi_matrix(&basis_coefficients(&spec).unwrap(), 2).unwrap();
    let channel = ChannelMatrix::random(2, 2, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
    let channels = combine(&singular_spectrum(&channel, &isi).unwrap(), &spec, 2, 1.0).unwrap();
    assert_eq!(channels.count(), 4);
    let power = 1000.0;
    let main = objective(&channels, &waterfill(&channels, power).unwrap().q);
    let oracle = waterfill_oracle(&channels, power).unwrap();
    let report = OracleReport::scalar("waterfill", "seed 42, DN=4", main, oracle.objective, 1e-8);
    println!("{report} after {} exchange sweeps", oracle.exchange_sweeps);
    assert!(report.pass);
}

#[test]
fn random_two_by_two_kronecker() {
    let spec = PulseSpec::with_defaults(0.67, 0.5).unwrap();
    let isi = build_isi_matrix(&basis_coefficients(&spec).unwrap(), 3).unwrap();
    let channel = ChannelMatrix::random(2, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let spectrum = singular_spectrum(&channel, &isi).unwrap();
    let mut products: Vec<f64> = spectrum
        .sigma_h
        .iter()
        .flat_map(|h| spectrum.sigma_p.iter().map(move |p| h * p))
        .collect();
    products.sort_by(|a, b| b.total_cmp(a));
    let report = OracleReport::compare("kron", "2x2, N=3", products, kron_svd_oracle(&channel, &isi).unwrap(), 1e-8);
    println!("{report}");
    assert!(report.pass);
}

#[test]
fn gaussian_tail_anchor() {
    assert!((qfunc_oracle(1.2816) - 0.1).abs() < 1e-4);
}
