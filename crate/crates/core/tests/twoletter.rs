use approx::assert_abs_diff_eq;
use czi::hk::HkConfig;
use czi::twoletter::{gap, two_letter_max, two_letter_objective, PairDistribution, TwoLetterConfig, DEFAULT_GAP_THRESHOLD};
use czi::CziChannel;

fn ch(m: [[f64; 2]; 2]) -> CziChannel {
    CziChannel::new(m).unwrap()
}

fn best(c: &CziChannel, lambda: f64) -> czi::twoletter::TwoLetterResult {
    two_letter_max(c, lambda, &TwoLetterConfig::default()).unwrap()
}

#[test]
fn z_half_attains_table_value() {
    let r = best(&ch([[1.0, 0.5], [1.0, 0.0]]), 2.0);
    assert!(r.value >= 1.108141 - 2e-4);
    assert_abs_diff_eq!(r.value, 1.108141, epsilon = 1e-3);
    assert_eq!(r.starts_tried, 64);
}

#[test]
fn uniform_noise_is_one_bit() {
    let r = best(&CziChannel::uniform_noise(), 5.0);
    assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
}

#[test]
fn seventh_weight_row() {
    let r = best(&ch([[0.058449, 0.558649], [0.194915, 0.959172]]), 7.0);
    assert!(r.value >= 1.452769 - 2e-4, "{}", r.value);
}

#[test]
fn never_below_tensored_tin() {
    for (m, lambda) in [
        ([[0.3, 0.7], [0.9, 0.1]], 1.0),
        ([[0.204581, 0.364813], [0.030209, 0.992978]], 2.5),
        ([[0.0, 1.0], [1.0, 0.0]], 4.0),
    ] {
        let r = best(&ch(m), lambda);
        let c = ch(m);
        let tensored = two_letter_objective(
            &c.product(),
            lambda,
            &PairDistribution::iid(r.tin.p),
            &PairDistribution::iid(r.tin.q),
        );
        assert!(r.value >= tensored - 1e-9);
        assert!(r.value >= r.tin.value - 1e-9);
    }
}

#[test]
fn same_seed_same_result_for_any_pool_size() {
    let c = ch([[0.591419, 0.865901], [0.004021, 0.898113]]);
    let cfg = TwoLetterConfig { seed: 99, ..TwoLetterConfig::default() };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| two_letter_max(&c, 3.0, &cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one.value.to_bits(), run(1).value.to_bits());
}

#[test]
fn gaps() {
    let hk = HkConfig::default();
    let tl = TwoLetterConfig::default();
    let row1 = gap(&ch([[1.0, 0.5], [1.0, 0.0]]), 2.0, &hk, &tl, DEFAULT_GAP_THRESHOLD).unwrap();
    assert_abs_diff_eq!(row1.gap, 0.000625, epsilon = 2e-4);
    assert!(row1.flagged);
    assert_eq!(row1.gap, row1.two_letter_value - row1.hk_value);

    let flat = gap(&CziChannel::uniform_noise(), 2.0, &hk, &tl, DEFAULT_GAP_THRESHOLD).unwrap();
    assert_abs_diff_eq!(flat.gap, 0.0, epsilon = 1e-6);
    assert!(!flat.flagged);

    let row4 = gap(&ch([[0.356166, 0.073253], [0.985504, 0.031707]]), 3.0, &hk, &tl, DEFAULT_GAP_THRESHOLD).unwrap();
    assert_abs_diff_eq!(row4.gap, 0.018855, epsilon = 3e-4);
    assert!(row4.flagged);
}
