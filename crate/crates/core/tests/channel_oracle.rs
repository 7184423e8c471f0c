//! Monte Carlo channel against its exact outcome model and the closed forms.

use dbs_core::analytics::{dbs_components, eve_budget, ipbe_components, p_gamma, Protocol};
use dbs_core::channel_sim::{exact_dbs, exact_ipbe, Channel, ChannelModel, PhotonSource, SessionTally};
use dbs_core::protocol::{encode_message, sift, PairDecision, Transcript};
use dbs_core::stats::Estimate;
use dbs_core::{Basis, ChannelParams, Execution, RandomSource, RawChannelParams};
use rand::Rng;

fn params(d: usize, eta: f64, gamma: f64, tau: f64, lambda: f64) -> ChannelParams {
    RawChannelParams {
        dimension: d,
        efficiency: eta,
        dark_rate: gamma,
        gate_time: tau,
        mean_photon_number: lambda,
        basis_count: 2,
    }
    .validate()
    .unwrap()
}

fn within_3_sigma(est: Estimate, p: f64) -> bool {
    est.z_score(p) < 3.0
}

fn assert_matches_exact(tally: &SessionTally, exact: dbs_core::analytics::ErrorBudget, label: &str) {
    for (name, est, p) in [
        ("p_corr", tally.p_corr(), exact.p_corr),
        ("p_be", tally.p_be(), exact.p_be),
        ("p_ee", tally.p_ee(), exact.p_ee),
    ] {
        assert!(
            within_3_sigma(est, p),
            "{label} {name}: {} vs {p} (z = {:.2})",
            est.value(),
            est.z_score(p)
        );
    }
}

#[test]
fn dbs_session_matches_exact_model_on_random_parameters() {
    // A fixed list of draws, so the set of cases is stable across runs.
    let mut rng = RandomSource::new(2024, 1).rng();
    for case in 0..8 {
        let d = rng.random_range(2..=100usize);
        let lambda = rng.random_range(0.05..1.0);
        let eta = rng.random_range(0.1..1.0);
        let x = rng.random_range(0.0..1e-2);
        let p = params(d, eta, x / 1e-6, 1e-6, lambda);
        let ch = Channel::ideal_model(p).unwrap();
        let tally = ch
            .run_dbs_session(300_000, RandomSource::new(77, case), Execution::default())
            .unwrap();
        assert_matches_exact(&tally, exact_dbs(&p, ch.model()), &format!("case {case} {p:?}"));
    }
}

#[test]
fn ipbe_session_matches_exact_model() {
    for (i, d) in [4usize, 36].into_iter().enumerate() {
        let p = params(d, 0.52, 20_000.0, 5e-7, 0.2);
        let ch = Channel::ideal_model(p).unwrap();
        let tally = ch
            .run_ipbe_session(500_000, RandomSource::new(5, i as u64), Execution::default())
            .unwrap();
        assert_matches_exact(&tally, exact_ipbe(&p, ch.model()), &format!("D={d}"));
        assert_eq!(tally.basis_error, 0);
    }
}

#[test]
fn closed_form_correct_rate_at_baseline() {
    let p = ChannelParams::baseline(16).unwrap();
    let tally = Channel::ideal_model(p)
        .unwrap()
        .run_dbs_session(1_000_000, RandomSource::from_seed(1), Execution::default())
        .unwrap();
    let closed = dbs_components(&p).unwrap();
    assert!(
        within_3_sigma(tally.p_corr(), closed.p_corr),
        "{}",
        tally.p_corr().value()
    );
}

#[test]
fn ideal_channel_hits_closed_form_limits() {
    for d in [2usize, 16] {
        let p = params(d, 1.0, 0.0, 5e-7, 0.2);
        let ch = Channel::new(
            p,
            ChannelModel {
                source: PhotonSource::Fixed(1),
                ..ChannelModel::default()
            },
        )
        .unwrap();
        let t = ch
            .run_dbs_session(10_000, RandomSource::from_seed(d as u64), Execution::default())
            .unwrap();
        assert!(within_3_sigma(t.p_corr(), 0.25));
        assert!(within_3_sigma(t.p_be(), 0.25 / d as f64));
    }
}

#[test]
fn ipbe_closed_form_correct_rate() {
    let p = ChannelParams::baseline(36).unwrap();
    let t = Channel::ideal_model(p)
        .unwrap()
        .run_ipbe_session(1_000_000, RandomSource::from_seed(9), Execution::default())
        .unwrap();
    assert!(within_3_sigma(t.p_corr(), ipbe_components(&p).unwrap().p_corr));
}

#[test]
fn verdicts_partition_the_twins() {
    let p = params(8, 0.6, 50_000.0, 1e-6, 0.7);
    let ch = Channel::ideal_model(p).unwrap();
    for n in [1u64, 17, 4096, 4097, 10_000] {
        let t = ch
            .run_dbs_session(n, RandomSource::from_seed(n), Execution::default())
            .unwrap();
        assert_eq!(t.twin_count(), n);
    }
}

#[test]
fn replay_and_execution_mode_are_deterministic() {
    let p = ChannelParams::baseline(16).unwrap();
    let ch = Channel::ideal_model(p).unwrap();
    let src = RandomSource::new(123, 4);
    let seq = ch.run_dbs_session(50_000, src, Execution::Sequential).unwrap();
    let par = ch.run_dbs_session(50_000, src, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    assert_eq!(par, ch.run_dbs_session(50_000, src, Execution::Parallel).unwrap());
    assert_ne!(
        par,
        ch.run_dbs_session(50_000, RandomSource::new(124, 4), Execution::Parallel)
            .unwrap()
    );

    let a = ch.run_oscar_pns(50_000, Protocol::Dbs, src, Execution::Sequential);
    let b = ch.run_oscar_pns(50_000, Protocol::Dbs, src, Execution::Parallel);
    assert_eq!(a, b);
}

#[test]
fn loss_acts_quadratically_on_correct_rate() {
    let full = params(16, 0.8, 0.0, 5e-7, 0.3);
    let half = full.with_efficiency(0.4).unwrap();
    let n = 2_000_000;
    let run = |p: ChannelParams, seed| {
        Channel::ideal_model(p)
            .unwrap()
            .run_dbs_session(n, RandomSource::from_seed(seed), Execution::default())
            .unwrap()
            .p_corr()
    };
    let (a, b) = (run(full, 1), run(half, 2));
    let ratio = a.value() / b.value();
    let rel_se = ((a.std_error() / a.value()).powi(2) + (b.std_error() / b.value()).powi(2)).sqrt();
    assert!((ratio - 4.0).abs() < 3.0 * 4.0 * rel_se, "ratio {ratio}");
}

#[test]
fn empty_pulses_see_p_gamma_on_other_detectors() {
    let p = params(36, 0.5, 4_000.0, 1e-6, 0.2);
    let ch = Channel::new(
        p,
        ChannelModel {
            source: PhotonSource::Fixed(0),
            ..ChannelModel::default()
        },
    )
    .unwrap();
    let mut rng = RandomSource::from_seed(3).rng();
    let symbol = dbs_core::QuditSymbol::new(7, Basis::Fourier, 36).unwrap();
    let n = 100_000;
    let hits = (0..n)
        .filter(|_| {
            let e = ch.transmit_pulse(symbol, Basis::Fourier, &mut rng).event;
            e.clicks().iter_ones().any(|i| i != 7)
        })
        .count() as u64;
    assert!(within_3_sigma(Estimate::new(hits, n), p_gamma(&p)));
}

#[test]
fn pre_sift_observables_ignore_the_pairing() {
    // The same slot contents under two different pairings: everything Bob
    // records before the announcement must be identical.
    let p = ChannelParams::baseline(4).unwrap();
    let ch = Channel::ideal_model(p).unwrap();
    let letters = [0u32, 1, 2, 3, 1, 1];
    let message = encode_message(&letters, &p, &mut RandomSource::from_seed(8).rng()).unwrap();
    let slots = message.slots().to_vec();
    let mut permuted_pairs = message.announcement().pairs().to_vec();
    permuted_pairs.reverse();

    let a = ch.transmit_stream(&slots, &mut RandomSource::from_seed(30).rng());
    let b = ch.transmit_stream(&slots, &mut RandomSource::from_seed(30).rng());
    assert_eq!(a, b);
    assert_ne!(permuted_pairs, message.announcement().pairs());
}

#[test]
fn perfect_channel_round_trip() {
    let d = 8;
    let p = params(d, 1.0, 0.0, 5e-7, 0.2);
    let ch = Channel::new(
        p,
        ChannelModel {
            source: PhotonSource::Fixed(1),
            ..ChannelModel::default()
        },
    )
    .unwrap();
    let mut rng = RandomSource::from_seed(10).rng();
    let letters: Vec<u32> = (0..2000).map(|_| rng.random_range(0..d as u32)).collect();
    let message = encode_message(&letters, &p, &mut rng).unwrap();
    let sent = ch.transmit_stream(message.slots(), &mut rng);
    let events: Vec<_> = sent.iter().map(|t| t.event.clone()).collect();
    let sifted = sift(&events, message.announcement()).unwrap();
    for (twin, decision) in message.twins().iter().zip(&sifted.decisions) {
        let (ba, bb) = (
            events[twin.first_slot].basis_used(),
            events[twin.second_slot].basis_used(),
        );
        if ba == twin.symbol.basis() && bb == twin.symbol.basis() {
            assert_eq!(
                *decision,
                PairDecision::Accepted {
                    letter: twin.symbol.letter()
                }
            );
        } else if ba != bb {
            assert_eq!(*decision, PairDecision::MixedBases);
        } else {
            assert!(matches!(
                decision,
                PairDecision::Accepted { .. } | PairDecision::Mismatch
            ));
        }
    }

    let transcript = Transcript::from_session(d, &message, &sent).unwrap();
    let (replayed, _) = transcript.replay().unwrap();
    assert_eq!(replayed, sifted);
}

#[test]
fn wrong_basis_coincidence_is_one_over_d() {
    for d in [2usize, 4, 16, 36] {
        let p = params(d, 1.0, 0.0, 5e-7, 0.2);
        let ch = Channel::new(
            p,
            ChannelModel {
                source: PhotonSource::Fixed(1),
                ..ChannelModel::default()
            },
        )
        .unwrap();
        let t = ch
            .run_dbs_session(400_000, RandomSource::new(40, d as u64), Execution::default())
            .unwrap();
        // Same-wrong-basis twins are those accepted as BasisError plus the
        // wrong-basis mismatches; ideal channel, so nothing else is lost.
        let same_wrong = t.basis_error + t.discarded_mismatch;
        let est = Estimate::new(t.basis_error, same_wrong);
        assert!(within_3_sigma(est, 1.0 / d as f64), "D={d}: {}", est.value());
    }
}

#[test]
fn oscar_matches_eve_budget_at_point_two() {
    let p = params(16, 0.52, 300.0, 5e-7, 0.2);
    let ch = Channel::ideal_model(p).unwrap();
    for (i, protocol) in [Protocol::Dbs, Protocol::Ipbe].into_iter().enumerate() {
        let t = ch.run_oscar_pns(
            1_000_000,
            protocol,
            RandomSource::new(50, i as u64),
            Execution::default(),
        );
        let budget = eve_budget(&p, protocol).unwrap();
        assert!(t.extracted_pairs <= t.intercepted_multi);
        assert!(
            within_3_sigma(t.p_o_hat(), budget.p_o),
            "{protocol:?} p_o {} vs {}",
            t.p_o_hat().value(),
            budget.p_o
        );
        assert!(
            within_3_sigma(t.p_b_hat(), budget.p_b),
            "{protocol:?} p_b {} vs {}",
            t.p_b_hat().value(),
            budget.p_b
        );
    }
}
