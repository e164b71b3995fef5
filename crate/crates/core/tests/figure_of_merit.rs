use ahsps_core::model::photon_statistics;
use ahsps_core::{
    figure_of_merit, figure_of_merit_physical, heralding_rate, FigureOfMerit, SourceConfig,
};
use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_source(rng: &mut ChaCha8Rng) -> SourceConfig {
    SourceConfig {
        pump_power: rng.random_range(1e-4..0.06),
        pair_efficiency: rng.random_range(1e6..1e8),
        herald_coupling: rng.random_range(0.05..1.0),
        herald_detector_eff: rng.random_range(0.05..1.0),
        coupling_p1: rng.random_range(0.05..0.45),
        gate_width: rng.random_range(1e-9..1e-8),
        ..SourceConfig::default()
    }
}

fn f_from_statistics(src: &SourceConfig) -> f64 {
    figure_of_merit(&photon_statistics(src).unwrap(), heralding_rate(src)).value()
}

#[test]
fn both_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let src = random_source(&mut rng);
        assert_relative_eq!(
            f_from_statistics(&src),
            figure_of_merit_physical(&src).value(),
            max_relative = 1e-9
        );
    }
}

#[test]
fn crystal_efficiency_drops_out() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let src = random_source(&mut rng);
        let brighter = SourceConfig {
            pair_efficiency: 10.0 * src.pair_efficiency,
            ..src.clone()
        };
        assert_relative_eq!(
            f_from_statistics(&src),
            f_from_statistics(&brighter),
            max_relative = 1e-9
        );
    }
}

#[test]
fn spot_value() {
    // 0.61^3 * 39 kHz / (2 * 2.5e-4)
    let stats = ahsps_core::PhotonStatistics::from_p1_p2(0.61, 2.5e-4).unwrap();
    assert_relative_eq!(
        figure_of_merit(&stats, 39e3).value(),
        1.770e7,
        max_relative = 1e-3
    );
    let vacuum_free = ahsps_core::PhotonStatistics::from_p1_p2(0.61, 0.0).unwrap();
    assert_eq!(
        figure_of_merit(&vacuum_free, 39e3),
        FigureOfMerit::Unbounded
    );
}
