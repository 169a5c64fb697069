use onebit_cs::model::{derive_seed, ProblemInstance, SignalParams};
use onebit_cs::recovery::{
    biht_init, cisr_recover, naive_cavity_recover, rfpi_recover, rfpi_recover_traced, CisrConfig, RfpiConfig,
    BIHT_DEFAULT_ITERS,
};

fn instance(n: usize, rho: f64, alpha: f64, seed: u64) -> ProblemInstance {
    ProblemInstance::generate(&SignalParams::exact(n, rho), alpha, seed).unwrap()
}

fn on_sphere(x: &ndarray::Array1<f64>) -> bool {
    let n = x.len() as f64;
    (x.dot(x).sqrt() - n.sqrt()).abs() < 1e-9
}

#[test]
fn converged_estimates_lie_on_the_sphere() {
    for t in 0..4 {
        let inst = instance(64, 0.125, 3.0, derive_seed(11, &[t]));
        let k = inst.support_size();
        let rfpi = rfpi_recover(&inst, &RfpiConfig::default(), None).unwrap();
        let cisr = cisr_recover(&inst, &CisrConfig::default(), k).unwrap();
        let nort = cisr_recover(&inst, &CisrConfig::nort(), k).unwrap();
        for r in [rfpi, cisr, nort] {
            if r.converged {
                assert!(on_sphere(&r.x_hat));
            }
        }
    }
}

#[test]
fn reruns_are_bitwise_identical() {
    let inst = instance(64, 0.25, 2.0, 77);
    let cfg = RfpiConfig::default();
    let a = rfpi_recover(&inst, &cfg, None).unwrap();
    let b = rfpi_recover(&inst, &cfg, None).unwrap();
    assert_eq!(a.x_hat, b.x_hat);
    assert_eq!(a.inner_iterations_total, b.inner_iterations_total);
    let k = inst.support_size();
    let c = cisr_recover(&inst, &CisrConfig::default(), k).unwrap();
    let d = cisr_recover(&inst, &CisrConfig::default(), k).unwrap();
    assert_eq!(c.x_hat, d.x_hat);
    assert_eq!(c.restarts, d.restarts);
    let e = naive_cavity_recover(&inst, k, 50, 1e-8);
    let f = naive_cavity_recover(&inst, k, 50, 1e-8);
    assert_eq!(e.result.x_hat, f.result.x_hat);
    assert_eq!(e.residual_trace, f.residual_trace);
}

#[test]
fn rfpi_objective_rarely_increases() {
    let mut steps = 0usize;
    let mut increases = 0usize;
    for t in 0..3 {
        let inst = instance(64, 0.125, 3.0, derive_seed(5, &[t]));
        let mut prev: Option<(usize, f64)> = None;
        rfpi_recover_traced(&inst, &RfpiConfig::default(), None, |p| {
            if let Some((outer, obj)) = prev {
                if outer == p.outer {
                    steps += 1;
                    if p.objective > obj * (1.0 + 1e-12) + 1e-12 {
                        increases += 1;
                    }
                }
            }
            prev = Some((p.outer, p.objective));
        })
        .unwrap();
    }
    assert!(steps > 100);
    let frac = 1.0 - increases as f64 / steps as f64;
    assert!(frac >= 0.95, "non-increasing fraction {frac}");
}

#[test]
fn biht_finds_a_single_spike_with_many_measurements() {
    let n = 64;
    let trials = 100;
    let hits = (0..trials)
        .filter(|&t| {
            let inst = instance(n, 1.0 / n as f64, 6.0, derive_seed(3, &[t]));
            let est = biht_init(&inst, 1, BIHT_DEFAULT_ITERS);
            (0..n).all(|i| (est[i] != 0.0) == (inst.x0[i] != 0.0))
        })
        .count();
    assert!(hits >= 90, "{hits}/{trials}");
}

#[test]
fn dropping_the_reaction_term_does_not_speed_up_cisr() {
    let (mut with, mut without) = (0usize, 0usize);
    for t in 0..20 {
        let inst = instance(128, 0.125, 3.0, derive_seed(9, &[t]));
        let k = inst.support_size();
        with += cisr_recover(&inst, &CisrConfig::default(), k).unwrap().inner_iterations_total;
        without += cisr_recover(&inst, &CisrConfig::nort(), k).unwrap().inner_iterations_total;
    }
    assert!(without >= with, "nort {without} < cisr {with}");
}

#[test]
fn rejects_bad_inputs() {
    let inst = instance(16, 0.25, 2.0, 1);
    assert!(cisr_recover(&inst, &CisrConfig::default(), 0).is_err());
    assert!(rfpi_recover(&inst, &RfpiConfig { delta: -1.0, ..Default::default() }, None).is_err());
    let zero = ndarray::Array1::<f64>::zeros(16);
    assert!(rfpi_recover(&inst, &RfpiConfig::default(), Some(zero.view())).is_err());
    let short = ndarray::Array1::<f64>::ones(3);
    assert!(rfpi_recover(&inst, &RfpiConfig::default(), Some(short.view())).is_err());
}
