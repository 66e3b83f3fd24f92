mod common;

use common::*;
use gramis::adaptation::{run_gramis, GramisConfig, InitBox, RepulsionConfig, Schedule, Weighting};
use gramis::estimators::*;
use gramis::numerics::{Matrix, RngStream};
use gramis::proposals::{GaussianProposal, ProposalBank};
use gramis::targets::{GaussianMixture, Target};
use gramis::Error;

fn std_normal_1d() -> GaussianMixture<f64> {
    GaussianMixture::gaussian(vec![0.0], Matrix::identity(1)).unwrap()
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn proposal_equal_to_target_gives_unit_weights() {
    let cov = Matrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]).unwrap();
    let target = GaussianMixture::gaussian(vec![1.0, -1.0], cov.clone()).unwrap();
    let bank = ProposalBank::new(vec![GaussianProposal::new(vec![1.0, -1.0], cov).unwrap(); 3]).unwrap();
    let mut streams: Vec<_> = (0..3).map(|n| RngStream::for_proposal(4, n)).collect();
    let set = weighted_draws(&target, &bank, 50, Weighting::DeterministicMixture, &mut streams);
    for &w in set.log_weights() {
        assert!(w.abs() < 1e-12);
    }
    assert!((z_estimate(&set).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn chi2_zero_when_mixture_is_target() {
    let target = std_normal_1d();
    let bank = bank_1d(&[0.0, 0.0], &[1.0, 1.0]);
    let chi2 = chi2_estimate(&target, &bank, 1000, &mut RngStream::for_diagnostics(1)).unwrap();
    assert!(chi2.abs() < 1e-12, "{chi2}");
}

#[test]
fn chi2_gaussian_oracle() {
    let target = std_normal_1d();
    let bank = bank_1d(&[0.0], &[2.0]);
    let exact = 2.0 / 3f64.sqrt() - 1.0;
    let m = 100_000;
    let mut rng = RngStream::for_diagnostics(11);
    let est = chi2_estimate(&target, &bank, m, &mut rng).unwrap();
    // E_ψ[(π/ψ)⁴] = σ³ / sqrt(4 − 3/σ²)
    let s2: f64 = 2.0;
    let fourth = s2.powf(1.5) / (4.0 - 3.0 / s2).sqrt();
    let sd = (fourth - (exact + 1.0).powi(2)).sqrt();
    let se = sd / (m as f64).sqrt();
    assert!((est - exact).abs() < 3.0 * se, "{est} vs {exact} (se {se})");
}

#[test]
fn chi2_disjoint_support_is_infinite() {
    let target = std_normal_1d();
    let bank = bank_1d(&[1000.0, 2000.0], &[1e-6, 1e-6]);
    let chi2 = chi2_estimate(&target, &bank, 100, &mut RngStream::for_diagnostics(2)).unwrap();
    assert_eq!(chi2, f64::INFINITY);

    let narrow = bank_1d(&[0.0], &[1e-4]);
    let chi2 = chi2_estimate(&target, &narrow, 1000, &mut RngStream::for_diagnostics(2)).unwrap();
    assert!(chi2.is_finite());
}

#[test]
fn chi2_requires_known_z() {
    let target = Quartic;
    let bank = bank_1d(&[0.0], &[1.0]);
    assert!(matches!(
        chi2_estimate(&target, &bank, 10, &mut RngStream::for_diagnostics(0)),
        Err(Error::RequiresKnownZ)
    ));
}

#[test]
fn uis_is_unbiased_for_mismatched_proposal() {
    let target = GaussianMixture::gaussian(vec![0.0, 0.0], Matrix::identity(2)).unwrap();
    let bank = ProposalBank::new(vec![GaussianProposal::new(vec![1.0, 0.0], Matrix::scaled_identity(2, 2.0)).unwrap()]).unwrap();
    let mut streams = vec![RngStream::for_proposal(21, 0)];
    let m = 100_000;
    let set = weighted_draws(&target, &bank, m, Weighting::DeterministicMixture, &mut streams);
    let est = uis_estimate(&set, &TestFunction::Identity, 1.0).unwrap();
    for i in 0..2 {
        let terms: Vec<f64> = set
            .samples()
            .iter()
            .zip(set.log_weights())
            .map(|(x, w)| w.exp() * x[i])
            .collect();
        let (mean, se) = mean_and_se(&terms);
        assert!((est[i] - mean).abs() < 1e-12);
        assert!(est[i].abs() < 3.0 * se, "coord {i}: {} (se {se})", est[i]);
    }
    let z = z_estimate(&set).unwrap();
    assert!((0.99..=1.01).contains(&z), "{z}");
}

#[test]
fn z_estimate_unbiased_over_small_runs() {
    let target = std_normal_1d();
    let bank = bank_1d(&[-0.5, 1.0], &[1.5, 0.8]);
    let zs: Vec<f64> = (0..1000)
        .map(|r| {
            let mut streams = vec![RngStream::new(77, 2 * r), RngStream::new(77, 2 * r + 1)];
            z_estimate(&weighted_draws(&target, &bank, 4, Weighting::DeterministicMixture, &mut streams)).unwrap()
        })
        .collect();
    let (mean, se) = mean_and_se(&zs);
    assert!((mean - 1.0).abs() < 3.0 * se, "{mean} (se {se})");
}

#[test]
fn dm_weights_reduce_variance() {
    let d = dm_dominance(10_000, 3);
    assert!(d.var_dm <= d.var_standard + 3.0 * d.bootstrap_se, "{} vs {}", d.var_dm, d.var_standard);
}

#[test]
fn toy_snis_mean_after_run() {
    let target = toy_two_component();
    let mut cfg = GramisConfig::new(50, 20, 20, InitBox::cube(1.0, 6.0));
    cfg.repulsion = RepulsionConfig::new(Schedule::Exponential { g1: 0.5, beta: None });
    let run = run_gramis::<f64, _>(&target, &cfg, 5).unwrap();
    let set = WeightedSampleSet::from_records(2, &run.records).unwrap();
    let window = window_select(&set, WindowPolicy::LastHalf).unwrap();
    let m = snis_estimate(&window, &TestFunction::Identity).unwrap();
    assert_close(&m, &[0.5, -0.5], 0.5);
    let report = EstimateReport::from_window(&set, WindowPolicy::LastHalf, Some(1.0)).unwrap();
    assert_eq!(report.window, (11, 20));
    assert_eq!(report.snis_mean, m);
    assert!(report.z_hat >= 0.0);
}

#[test]
fn from_records_keeps_provenance() {
    let target = toy_two_component();
    let cfg = GramisConfig::new(3, 2, 4, InitBox::cube(1.0, 6.0));
    let run = run_gramis::<f64, _>(&target, &cfg, 1).unwrap();
    let set = WeightedSampleSet::from_records(target.dim(), &run.records).unwrap();
    assert_eq!(set.len(), 3 * 2 * 4);
    assert_eq!(set.iterations(), 4);
    assert_eq!(set.tags()[0], SampleTag { t: 1, n: 0, k: 0 });
    assert_eq!(*set.tags().last().unwrap(), SampleTag { t: 4, n: 2, k: 1 });
}
