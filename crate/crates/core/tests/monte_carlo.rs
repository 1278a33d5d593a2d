//! Closed-form probabilities against direct Monte Carlo draws.
//!
//! The sampler here is self-contained: null p-values are uniform draws and
//! non-null ones are Φ̄(Z) with Z ~ N(snr, 1). Checks use 4 binomial SE so
//! that a grid of comparisons under a fixed seed stays meaningful.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use screenmin::dist::std_normal_sf;
use screenmin::screen::selected_count_pmf;
use screenmin::{
    bonferroni_max, bonferroni_power, conditional_power, expected_selected, fwer_exact, p0, p00,
    power_exact, screenmin as run_screenmin, selection_prob, AlternativeLaw, PValueMatrix,
    PairMixture, PairType,
};

struct Sampler {
    rng: ChaCha8Rng,
    shifted: Normal<f64>,
}

impl Sampler {
    fn new(seed: u64, snr: f64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            shifted: Normal::new(snr, 1.0).unwrap(),
        }
    }

    fn null(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn alt(&mut self) -> f64 {
        std_normal_sf(self.shifted.sample(&mut self.rng))
    }

    fn pair(&mut self, kind: PairType) -> (f64, f64) {
        match kind {
            PairType::BothNull => (self.null(), self.null()),
            PairType::OneFalse => (self.null(), self.alt()),
            PairType::BothFalse => (self.alt(), self.alt()),
        }
    }

    /// Pairs laid out as both-false, one-false, both-null.
    fn matrix(&mut self, mix: &PairMixture) -> Vec<(f64, f64)> {
        let counts = mix.type_counts();
        let mut rows = Vec::with_capacity(counts.total());
        for (kind, n) in [
            (PairType::BothFalse, counts.both_false),
            (PairType::OneFalse, counts.one_false),
            (PairType::BothNull, counts.both_null),
        ] {
            rows.extend((0..n).map(|_| self.pair(kind)));
        }
        rows
    }
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn assert_within(label: &str, expected: f64, hits: usize, n: usize, k: f64) {
    let freq = hits as f64 / n as f64;
    let se = binomial_se(expected, n).max(1.0 / n as f64);
    assert!(
        (freq - expected).abs() <= k * se,
        "{label}: formula {expected:.6}, Monte Carlo {freq:.6} (n = {n}, se = {se:.2e})"
    );
}

fn minmax((a, b): (f64, f64)) -> (f64, f64) {
    (a.min(b), a.max(b))
}

const CS: [f64; 5] = [1e-3, 5e-3, 0.01, 0.05, 0.2];
const US: [f64; 5] = [1e-4, 1e-3, 0.01, 0.05, 0.5];

#[test]
fn conditional_max_law_of_one_false_pair() {
    let law = AlternativeLaw::new(2.0).unwrap();
    let mut sampler = Sampler::new(11, 2.0);
    let draws: Vec<(f64, f64)> = (0..400_000)
        .map(|_| minmax(sampler.pair(PairType::OneFalse)))
        .collect();
    for &c in &CS {
        let selected: Vec<f64> = draws.iter().filter(|d| d.0 <= c).map(|d| d.1).collect();
        for &u in &US {
            let hits = selected.iter().filter(|&&x| x <= u).count();
            assert_within(
                &format!("p0(u={u}, c={c})"),
                p0(u, c, law),
                hits,
                selected.len(),
                4.0,
            );
        }
    }
}

#[test]
fn conditional_max_law_of_both_null_pair() {
    let mut sampler = Sampler::new(12, 0.0);
    let draws: Vec<(f64, f64)> = (0..400_000)
        .map(|_| minmax(sampler.pair(PairType::BothNull)))
        .collect();
    for &c in &CS[1..] {
        let selected: Vec<f64> = draws.iter().filter(|d| d.0 <= c).map(|d| d.1).collect();
        for &u in &US {
            let hits = selected.iter().filter(|&&x| x <= u).count();
            assert_within(
                &format!("p00(u={u}, c={c})"),
                p00(u, c),
                hits,
                selected.len(),
                4.0,
            );
        }
    }
}

#[test]
fn selection_probabilities_by_pair_type() {
    let law = AlternativeLaw::new(2.0).unwrap();
    let mut sampler = Sampler::new(13, 2.0);
    let n = 200_000;
    for kind in [PairType::BothNull, PairType::OneFalse, PairType::BothFalse] {
        let minima: Vec<f64> = (0..n).map(|_| minmax(sampler.pair(kind)).0).collect();
        for c in [0.005, 0.05, 0.3] {
            let hits = minima.iter().filter(|&&x| x <= c).count();
            assert_within(
                &format!("{kind:?} at c={c}"),
                selection_prob(kind, c, law),
                hits,
                n,
                4.0,
            );
        }
    }
}

#[test]
fn selected_count_distribution() {
    let law = AlternativeLaw::new(2.0).unwrap();
    let mix = PairMixture::new(30, 0.5, 0.3, 0.2, law).unwrap();
    let c = 0.05;
    let reps = 50_000;
    let mut sampler = Sampler::new(14, 2.0);
    let pmf = selected_count_pmf(c, &mix);
    let mut hist = vec![0usize; pmf.len()];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..reps {
        let s = sampler
            .matrix(&mix)
            .into_iter()
            .filter(|&p| minmax(p).0 <= c)
            .count();
        hist[s] += 1;
        sum += s as f64;
        sum_sq += (s * s) as f64;
    }
    let tv: f64 = 0.5
        * pmf
            .iter()
            .zip(&hist)
            .map(|(p, &h)| (p - h as f64 / reps as f64).abs())
            .sum::<f64>();
    assert!(tv < 0.01, "total variation {tv}");
    let mean = sum / reps as f64;
    let se = ((sum_sq / reps as f64 - mean * mean) / reps as f64).sqrt();
    let expected = expected_selected(c, &mix);
    assert!(
        (mean - expected).abs() < 4.0 * se,
        "E|S| {expected} vs {mean} ± {se}"
    );
}

fn procedure_fwer(mix: &PairMixture, c: f64, alpha: f64, reps: usize, seed: u64) -> usize {
    let mut sampler = Sampler::new(seed, mix.law().snr());
    let n_false = mix.type_counts().both_false;
    (0..reps)
        .filter(|_| {
            let pmat = PValueMatrix::from_pairs(&sampler.matrix(mix)).unwrap();
            run_screenmin(&pmat, alpha, c).rows[n_false..]
                .iter()
                .any(|r| r.rejected)
        })
        .count()
}

#[test]
fn exact_fwer_is_attained_when_every_pair_is_one_false() {
    let mix = PairMixture::new(10, 0.0, 1.0, 0.0, AlternativeLaw::new(2.0).unwrap()).unwrap();
    let reps = 200_000;
    let hits = procedure_fwer(&mix, 5e-3, 0.05, reps, 15);
    assert_within(
        "fwer_exact, all one-false",
        fwer_exact(5e-3, 0.05, &mix),
        hits,
        reps,
        4.0,
    );
}

#[test]
fn exact_fwer_bounds_mixed_configurations() {
    let law = AlternativeLaw::new(2.0).unwrap();
    for (i, (pi0, pi1, pi2)) in [(0.7, 0.25, 0.05), (0.4, 0.5, 0.1)].into_iter().enumerate() {
        let mix = PairMixture::new(20, pi0, pi1, pi2, law).unwrap();
        for c in [2.5e-3, 0.02] {
            let reps = 50_000;
            let hits = procedure_fwer(&mix, c, 0.05, reps, 16 + i as u64);
            let freq = hits as f64 / reps as f64;
            let bound = fwer_exact(c, 0.05, &mix);
            assert!(
                bound >= freq - 3.0 * binomial_se(freq, reps),
                "bound {bound} below Monte Carlo {freq} at {pi1}, c={c}"
            );
        }
    }
}

#[test]
fn conditional_power_grid() {
    let alpha = 0.05;
    let s = 4;
    let n = 200_000;
    for snr in [1.5, 2.0, 3.0] {
        let law = AlternativeLaw::new(snr).unwrap();
        let mut sampler = Sampler::new(17, snr);
        let draws: Vec<(f64, f64)> = (0..n)
            .map(|_| minmax(sampler.pair(PairType::BothFalse)))
            .collect();
        for c in [1e-3, 0.01, 0.1] {
            let testing = alpha / s as f64;
            let hits = draws.iter().filter(|d| d.0 <= c && d.1 <= testing).count();
            assert_within(
                &format!("conditional power snr={snr} c={c}"),
                conditional_power(s, c, alpha, law),
                hits,
                n,
                4.0,
            );
        }
    }
}

#[test]
fn exact_power_of_full_procedure() {
    let law = AlternativeLaw::new(3.0).unwrap();
    let mix = PairMixture::new(20, 0.7, 0.2, 0.1, law).unwrap();
    let reps = 100_000;
    for c in [2.5e-3, 0.02] {
        let mut sampler = Sampler::new(18, 3.0);
        let hits = (0..reps)
            .filter(|_| {
                let pmat = PValueMatrix::from_pairs(&sampler.matrix(&mix)).unwrap();
                run_screenmin(&pmat, 0.05, c).rows[0].rejected
            })
            .count();
        assert_within(
            &format!("power_exact c={c}"),
            power_exact(c, 0.05, &mix).unwrap(),
            hits,
            reps,
            4.0,
        );
    }
}

#[test]
fn bonferroni_power_of_full_procedure() {
    let law = AlternativeLaw::new(3.0).unwrap();
    let mix = PairMixture::new(100, 0.75, 0.2, 0.05, law).unwrap();
    let reps = 20_000;
    let mut sampler = Sampler::new(19, 3.0);
    let mut hits = 0;
    for _ in 0..reps {
        let pmat = PValueMatrix::from_pairs(&sampler.matrix(&mix)).unwrap();
        hits += bonferroni_max(&pmat, 0.05).rows[..5]
            .iter()
            .filter(|r| r.rejected)
            .count();
    }
    assert_within(
        "bonferroni power",
        bonferroni_power(0.05, 100, law),
        hits,
        5 * reps,
        4.0,
    );
}
