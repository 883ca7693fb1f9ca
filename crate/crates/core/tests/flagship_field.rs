//! Field diagnostics of the flagship run: phase covariance, Husimi ring,
//! normalization, numerical-health monitors, and integrator convergence.

use genbath::amplifier::{photon_statistics, simulate};
use genbath::husimi::{husimi_q, HusimiEvaluator};
use genbath::{AmplifierConfig, HusimiGrid};

#[test]
fn flagship_field_and_monitors() {
    let cfg = AmplifierConfig::default();
    let (amp, run) = simulate(&cfg).unwrap();
    let traj = &run.trajectory;
    assert_eq!(traj.len(), 401);
    assert!(!traj.is_degraded());

    let mut worst_offdiag = 0.0_f64;
    for rho in traj.states() {
        let cav = amp.cavity_state(rho).unwrap();
        let m = cav.matrix();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    worst_offdiag = worst_offdiag.max(m[(i, j)].norm());
                }
            }
        }
    }
    assert!(worst_offdiag <= 1e-8, "cavity coherences {worst_offdiag:e}");

    for mon in traj.monitors() {
        assert!(mon.trace_error <= 1e-8);
        assert!(mon.hermiticity_error <= 1e-9);
        assert!(mon.top2_fock_leakage <= 1e-6);
    }
    let audit = traj.audit_positivity(&[0, 100, 200, 400]);
    assert!(audit.iter().all(|&ev| ev >= -1e-8), "{audit:?}");

    // <n> grows monotonically and near-linearly late in the run
    let n = run.series.values(|r| r.n_mean);
    assert!(n.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let late: Vec<f64> = n[300..].windows(2).map(|w| (w[1] - w[0]) / 0.05).collect();
    let (lo, hi) = late.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(lo > 0.45 && hi < 0.55, "late slopes in [{lo}, {hi}]");

    let cav = amp.cavity_state(traj.last().unwrap().1).unwrap();
    let stats = photon_statistics(&cav).unwrap();
    let q = husimi_q(&cav, &HusimiGrid::default()).unwrap();
    assert!((q.mass() - 1.0).abs() <= 1e-3, "grid mass {}", q.mass());
    assert!(q.min_value() >= -1e-12);
    let eval = HusimiEvaluator::new(&cav).unwrap();
    let r = eval.peak_radius(6.0);
    assert!((r / stats.n_mean.sqrt() - 1.0).abs() <= 0.10, "peak radius {r}");
    let (x, y, _) = q.argmax();
    assert!(((x * x + y * y).sqrt() / stats.n_mean.sqrt() - 1.0).abs() <= 0.10);

    let q0 = husimi_q(&amp.cavity_state(&traj.states()[0]).unwrap(), &HusimiGrid::default()).unwrap();
    assert!((q0.value(60, 60) - 1.0 / std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn halving_tolerances_changes_little() {
    let base = AmplifierConfig::default();
    let fine = AmplifierConfig { rtol: base.rtol / 2.0, atol: base.atol / 2.0, ..base.clone() };
    let (a, b) = std::thread::scope(|s| {
        let a = s.spawn(|| simulate(&base).unwrap());
        let b = s.spawn(|| simulate(&fine).unwrap());
        (a.join().unwrap(), b.join().unwrap())
    });
    let (_, ra) = a;
    let (_, rb) = b;
    let na = ra.series.last().unwrap().n_mean;
    let nb = rb.series.last().unwrap().n_mean;
    let est = ra.trajectory.stats().error_estimate;
    assert!(est > 0.0);
    assert!((na - nb).abs() < 10.0 * est, "|dn| = {:e}, estimate {est:e}", (na - nb).abs());
}
