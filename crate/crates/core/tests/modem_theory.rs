//! Monte-Carlo BER against the closed-form Gray-coded QPSK error rate.

use afris::modem::{run_case, simulate};
use statrs::function::erf::erfc;

/// Bit error rate of Gray QPSK at a per-symbol SNR in dB: Q(√(Es/N0)).
fn theory_ber(es_n0_db: f64) -> f64 {
    let es_n0 = 10f64.powf(es_n0_db / 10.0);
    0.5 * erfc((es_n0 / 2.0).sqrt())
}

fn within_three_sigma(measured: f64, expected: f64, bits: usize) -> bool {
    let sigma = (expected * (1.0 - expected) / bits as f64).sqrt();
    (measured - expected).abs() <= 3.0 * sigma
}

#[test]
fn ber_at_8db_channel_snr() {
    assert!((theory_ber(8.0) - 0.006004).abs() < 5e-7);
    let r = simulate(1_000_000, 8.0, 7).unwrap();
    assert!(within_three_sigma(r.ber, 0.006004, r.bit_count), "ber {}", r.ber);
}

#[test]
fn ber_tracks_theory_across_snr() {
    for snr in [-2.0, 2.0, 6.0, 10.0] {
        let r = simulate(400_000, snr, 3).unwrap();
        assert!(
            within_three_sigma(r.ber, theory_ber(snr), r.bit_count),
            "{snr} dB: {} vs {}",
            r.ber,
            theory_ber(snr)
        );
    }
}

#[test]
fn evm_estimate_matches_channel_snr() {
    for snr in [5.0, 15.0, 25.0] {
        let r = simulate(200_000, snr, 11).unwrap();
        assert!((r.snr_estimate_db - snr).abs() < 0.05, "{snr}: {}", r.snr_estimate_db);
    }
}

#[test]
fn relay_cases_bracket_the_error_rate() {
    assert!(run_case(3, 1_000_000, 7).unwrap().ber < 1e-4);
    assert!(run_case(1, 1_000_000, 7).unwrap().ber > 0.05);
    let c4 = run_case(4, 200_000, 7).unwrap().ber;
    let c2 = run_case(2, 200_000, 7).unwrap().ber;
    assert!(c4 < c2);
}
