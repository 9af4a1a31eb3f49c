use rand::distr::Distribution;
use rand::RngCore;

use padic_sssi::{IncrementLaw, RngStream};

const DRAWS: usize = 1_000_000;

fn draws(law: IncrementLaw, tag: u64) -> Vec<f64> {
    let mut rng = RngStream::new(2024, &[tag]);
    (0..DRAWS).map(|_| law.sample(&mut rng)).collect()
}

fn within_3se(hits: usize, total: usize, p: f64) -> bool {
    let se = (p * (1.0 - p) / total as f64).sqrt();
    (hits as f64 / total as f64 - p).abs() <= 3.0 * se
}

#[test]
fn pareto_tail_law() {
    for (tag, alpha) in [1.5f64, 0.75, 3.0].into_iter().enumerate() {
        let xs = draws(IncrementLaw::SymmetricPareto { alpha }, tag as u64);
        assert!(xs.iter().all(|x| x.abs() >= 1.0));
        for t in [2.0f64, 8.0, 32.0] {
            let hits = xs.iter().filter(|x| x.abs() > t).count();
            assert!(within_3se(hits, DRAWS, t.powf(-alpha)), "alpha {alpha}, t {t}: {hits}");
        }
    }
}

#[test]
fn symmetric_laws_are_centred() {
    let laws = [
        IncrementLaw::SymmetricPareto { alpha: 1.2 },
        IncrementLaw::Gaussian { sigma: 2.0 },
        IncrementLaw::Rademacher,
    ];
    for (tag, law) in laws.into_iter().enumerate() {
        let xs = draws(law, 100 + tag as u64);
        let pos = xs.iter().filter(|&&x| x > 0.0).count();
        assert!(within_3se(pos, DRAWS, 0.5), "{law:?}: {pos}");
    }
}

#[test]
fn gaussian_moments() {
    let xs = draws(IncrementLaw::Gaussian { sigma: 2.0 }, 7);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 3.0 * 2.0 / n.sqrt());
    // sd of the sample variance is sigma^2 sqrt(2/n)
    assert!((var - 4.0).abs() < 3.0 * 4.0 * (2.0 / n).sqrt());
}

#[test]
fn streams_are_reproducible() {
    let law = IncrementLaw::SymmetricPareto { alpha: 1.7 };
    let mut a = RngStream::new(99, &[3, 4]);
    let mut b = RngStream::new(99, &[3, 4]);
    let xa: Vec<f64> = (0..10_000).map(|_| law.sample(&mut a)).collect();
    let xb: Vec<f64> = (0..10_000).map(|_| law.sample(&mut b)).collect();
    assert_eq!(xa, xb);
    let mut c = RngStream::new(99, &[3, 5]);
    assert_ne!(RngStream::new(99, &[3, 4]).next_u64(), c.next_u64());
}
