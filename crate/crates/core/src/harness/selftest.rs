use num_complex::Complex64;

use crate::benchmarks::{complexity, ComplexityMethod};
use crate::channel::bs_correlation;
use crate::fusion::{sic_detect, FusionMode, FusionParams, ReceiverConfig};
use crate::lpu::{gaussian_to_pmf, Constellation};
use crate::numerics::{
    hermitian_sqrt, sample_cgauss, solve_projected_zf, zero_forcing_filters, CVector, SimRng,
};

/// Outcome of one built-in check.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfTestCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<String, String>) -> SelfTestCheck {
    match run() {
        Ok(detail) => SelfTestCheck {
            name,
            passed: true,
            detail,
        },
        Err(detail) => SelfTestCheck {
            name,
            passed: false,
            detail,
        },
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Quick oracle and invariant checks over the whole pipeline. Runs in well
/// under a second.
pub fn selftest() -> Vec<SelfTestCheck> {
    vec![
        check("mrc complexity count", || {
            let r = complexity(ComplexityMethod::Mrc, 256, 32, 4, 4, 3, 0.75, 1).map_err(err)?;
            if r.multiplications == 24576.0 {
                Ok("C_MRC(256, 32) = 24576".into())
            } else {
                Err(format!("got {}", r.multiplications))
            }
        }),
        check("gaussian message to pmf", || {
            let qpsk = Constellation::qpsk();
            let a = qpsk.points();
            let q = gaussian_to_pmf(a[0] * 0.9, 0.5, &qpsk).map_err(err)?;
            let logits: Vec<f64> = a
                .iter()
                .map(|p| -(p - a[0] * 0.9).norm_sqr() / 0.5)
                .collect();
            let z: f64 = logits.iter().map(|l| l.exp()).sum();
            let worst = q
                .weights()
                .iter()
                .zip(&logits)
                .map(|(w, l)| (w - l.exp() / z).abs())
                .fold(0.0, f64::max);
            if worst < 1e-12 {
                Ok(format!("max deviation {worst:e}"))
            } else {
                Err(format!("max deviation {worst:e}"))
            }
        }),
        check("zero-forcing routes agree", || {
            let mut rng = SimRng::new(17);
            let h = sample_cgauss(&mut rng, 8, 3, 1.0).map_err(err)?;
            let bank = zero_forcing_filters(&h).map_err(err)?;
            let mut worst = 0.0f64;
            for k in 0..3 {
                let p = solve_projected_zf(&h, k).map_err(err)?;
                worst = worst.max((p.gain - bank.gains[k]).abs() / p.gain);
                worst = worst.max((&p.filter - bank.filters.row(k)).norm() / p.filter.norm());
            }
            if worst < 1e-10 {
                Ok(format!("max relative deviation {worst:e}"))
            } else {
                Err(format!("max relative deviation {worst:e}"))
            }
        }),
        check("correlation matrix structure", || {
            let r = bs_correlation(31, 0.5, 0.3, 7.0 * std::f64::consts::PI / 8.0, 12);
            let unit = (0..12).all(|i| r[(i, i)] == Complex64::new(1.0, 0.0));
            let root = hermitian_sqrt(&r).map_err(err)?;
            let recon = (&root * &root - &r).norm();
            if unit && r == r.adjoint() && recon < 1e-10 {
                Ok(format!("square-root reconstruction error {recon:e}"))
            } else {
                Err(format!(
                    "unit diagonal {unit}, reconstruction error {recon:e}"
                ))
            }
        }),
        check("noiseless detection", || {
            let mut rng = SimRng::new(3);
            let qpsk = Constellation::qpsk();
            let h = sample_cgauss(&mut rng, 16, 4, 1.0).map_err(err)?;
            let symbols: Vec<usize> = (0..4).map(|_| rng.index(4)).collect();
            let x = CVector::from_iterator(4, symbols.iter().map(|&s| qpsk.point(s)));
            let y = &h * &x;
            let cfg = ReceiverConfig::new(qpsk, 4, 1e-6);
            let got = sic_detect(&y, &h, &cfg).map_err(err)?.symbols;
            if got == symbols {
                Ok("all four users recovered".into())
            } else {
                Err(format!("sent {symbols:?}, detected {got:?}"))
            }
        }),
        check("full-budget fusion equals all", || {
            let mut rng = SimRng::new(5);
            let qpsk = Constellation::qpsk();
            let h = sample_cgauss(&mut rng, 16, 4, 1.0).map_err(err)?;
            let n = sample_cgauss(&mut rng, 16, 1, 0.3).map_err(err)?;
            let x = CVector::from_iterator(4, (0..4).map(|_| qpsk.point(rng.index(4))));
            let y = &h * &x + n.column(0);
            let base = ReceiverConfig::new(qpsk, 4, 0.3);
            let all = sic_detect(&y, &h, &base).map_err(err)?;
            for mode in [FusionMode::Hyb, FusionMode::Nop] {
                let cfg = ReceiverConfig {
                    fusion: FusionParams {
                        mode,
                        p0: 0.75,
                        b_max: 4,
                    },
                    ..base.clone()
                };
                if sic_detect(&y, &h, &cfg).map_err(err)? != all {
                    return Err(format!("{mode:?} differs from all"));
                }
            }
            Ok("hyb and nop with b_max = B match".into())
        }),
    ]
}
