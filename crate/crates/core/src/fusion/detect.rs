use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{build_fusion_matrix, FusionParams};
use crate::error::{Error, Result};
use crate::lpu::{
    initialize, mrc_from_gram, run_local_vmp, Constellation, InitMethod, InitStrategy, LpuState,
    SweepSchedule, SymbolPmf,
};
use crate::numerics::{CMatrix, CVector};

/// User ordering rule for SIC.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SicOrdering {
    /// Largest ratio between the two most likely symbols.
    #[default]
    LrMetric,
    /// Largest channel energy; kept for ablation only.
    Energy,
}

/// Everything the distributed receiver needs besides `y` and `H`.
#[derive(Clone, Debug)]
pub struct ReceiverConfig {
    pub alphabet: Constellation,
    pub subarrays: usize,
    /// Noise variance assumed by the linear initialisers.
    pub noise_var: f64,
    pub init: InitMethod,
    pub strategy: InitStrategy,
    pub fusion: FusionParams,
    pub iterations: usize,
    pub schedule: SweepSchedule,
    pub ordering: SicOrdering,
}

impl ReceiverConfig {
    /// Global MRC re-run at every SIC step, fusion over all sub-arrays, one
    /// sequential VMP iteration.
    pub fn new(alphabet: Constellation, subarrays: usize, noise_var: f64) -> Self {
        ReceiverConfig {
            alphabet,
            subarrays,
            noise_var,
            init: InitMethod::MrcGlobal,
            strategy: InitStrategy::PerSicStep,
            fusion: FusionParams::default(),
            iterations: 1,
            schedule: SweepSchedule::Sequential,
            ordering: SicOrdering::LrMetric,
        }
    }
}

/// Output of any detector.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    /// Detected constellation index per user.
    pub symbols: Vec<usize>,
    /// Users in the order they were decided.
    pub order: Vec<usize>,
    /// Fused marginal of each user at the moment it was decided; empty for
    /// linear receivers.
    pub fused: Vec<SymbolPmf>,
    /// Certainty `Δ` of the decided user at each step.
    pub certainties: Vec<f64>,
}

/// Normalised product of the local marginals, computed in the log domain.
/// Disjoint supports fall back to a uniform pmf.
pub fn fuse_marginals(locals: &[&SymbolPmf]) -> Result<SymbolPmf> {
    let first = locals
        .first()
        .ok_or_else(|| Error::Parameter("cannot fuse an empty set of marginals".into()))?;
    let mut logs = vec![0.0; first.len()];
    for q in locals {
        if q.len() != logs.len() {
            return Err(Error::Dimension("marginals of different sizes".into()));
        }
        for (l, w) in logs.iter_mut().zip(q.weights()) {
            *l += w.ln();
        }
    }
    Ok(SymbolPmf::from_log_weights(&logs).unwrap_or_else(|| {
        log::warn!("fused marginals have disjoint support, using uniform");
        SymbolPmf::uniform(logs.len())
    }))
}

/// Index of the most probable symbol, lowest index on ties.
pub fn hard_detect(q: &SymbolPmf) -> usize {
    q.argmax()
}

pub fn lr_certainty(q: &SymbolPmf) -> f64 {
    q.lr_certainty()
}

/// Output of one round of local processing and fusion over the active users.
struct FusedPass {
    states: Vec<LpuState>,
    fused: Vec<SymbolPmf>,
}

/// Step-by-step SIC receiver state.
pub struct SicDetector<'a> {
    h: &'a CMatrix,
    cfg: &'a ReceiverConfig,
    per_block: usize,
    residual: CVector,
    gram: Option<CMatrix>,
    active: Vec<usize>,
    decisions: Vec<Option<usize>>,
    fused: Vec<Option<SymbolPmf>>,
    order: Vec<usize>,
    certainties: Vec<f64>,
    carried: Option<Vec<Vec<SymbolPmf>>>,
}

impl<'a> SicDetector<'a> {
    pub fn new(y: &CVector, h: &'a CMatrix, cfg: &'a ReceiverConfig) -> Result<Self> {
        let (m, k) = h.shape();
        if k == 0 {
            return Err(Error::Parameter("no users to detect".into()));
        }
        if y.len() != m {
            return Err(Error::Dimension(format!(
                "signal length {} for {m} antennas",
                y.len()
            )));
        }
        if cfg.subarrays == 0 || m % cfg.subarrays != 0 {
            return Err(Error::Config(format!(
                "{m} antennas cannot be split into {} sub-arrays",
                cfg.subarrays
            )));
        }
        if cfg.iterations == 0 {
            return Err(Error::Config("VMP needs at least one iteration".into()));
        }
        let gram = (cfg.init == InitMethod::MrcGlobal).then(|| h.adjoint() * h);
        Ok(SicDetector {
            h,
            cfg,
            per_block: m / cfg.subarrays,
            residual: y.clone(),
            gram,
            active: (0..k).collect(),
            decisions: vec![None; k],
            fused: vec![None; k],
            order: Vec::new(),
            certainties: Vec::new(),
            carried: None,
        })
    }

    /// Marks `user` as already decided on `symbol`: its contribution is
    /// cancelled and it leaves the active set.
    pub fn fix(&mut self, user: usize, symbol: usize) -> Result<()> {
        let pos = self
            .active
            .iter()
            .position(|&u| u == user)
            .ok_or_else(|| Error::Parameter(format!("user {user} is not active")))?;
        let a = self.cfg.alphabet.point(symbol);
        self.residual
            .axpy(-a, &self.h.column(user), Complex64::new(1.0, 0.0));
        self.active.remove(pos);
        if let Some(carried) = self.carried.as_mut() {
            carried.iter_mut().for_each(|q| {
                q.remove(pos);
            });
        }
        self.decisions[user] = Some(symbol);
        self.fused[user] = Some(SymbolPmf::delta(self.cfg.alphabet.len(), symbol));
        self.order.push(user);
        Ok(())
    }

    pub fn is_done(&self) -> bool {
        self.active.is_empty()
    }

    /// Received signal with every decided user cancelled.
    pub fn residual(&self) -> &CVector {
        &self.residual
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    fn active_channel(&self) -> CMatrix {
        self.h.select_columns(&self.active)
    }

    fn initial_marginals(&self, h_active: &CMatrix) -> Result<Vec<Vec<SymbolPmf>>> {
        if let (InitStrategy::OneTime, Some(carried)) = (self.cfg.strategy, &self.carried) {
            return Ok(carried.clone());
        }
        let cfg = self.cfg;
        match (&self.gram, cfg.init) {
            (Some(gram), InitMethod::MrcGlobal) => {
                let mut matched = vec![Complex64::new(0.0, 0.0); self.h.ncols()];
                for &k in &self.active {
                    matched[k] = self.h.column(k).dotc(&self.residual);
                }
                let q = mrc_from_gram(gram, &matched, &self.active, cfg.noise_var, &cfg.alphabet)?;
                Ok(vec![q; cfg.subarrays])
            }
            _ => initialize(
                cfg.init,
                h_active,
                &self.residual,
                cfg.subarrays,
                cfg.noise_var,
                &cfg.alphabet,
            ),
        }
    }

    /// Initialise, run every LPU, build the fusion matrix and fuse.
    fn local_pass(&self) -> Result<FusedPass> {
        let cfg = self.cfg;
        let h_active = self.active_channel();
        let init = self.initial_marginals(&h_active)?;
        let mut states = Vec::with_capacity(cfg.subarrays);
        for (b, marginals) in init.into_iter().enumerate() {
            let start = b * self.per_block;
            let mut state = LpuState::new(
                b,
                h_active.rows(start, self.per_block).into_owned(),
                self.residual.rows(start, self.per_block).into_owned(),
                cfg.alphabet.clone(),
                marginals,
            )?;
            run_local_vmp(&mut state, cfg.iterations, cfg.schedule)?;
            states.push(state);
        }
        let users = self.active.len();
        let energies =
            nalgebra::DMatrix::from_fn(cfg.subarrays, users, |b, k| states[b].energies()[k]);
        let lambda: Vec<f64> = states.iter().map(|s| s.precision().mean).collect();
        let matrix = build_fusion_matrix(&cfg.fusion, &energies, &lambda)?;
        let fused = (0..users)
            .map(|k| {
                let locals: Vec<&SymbolPmf> = matrix
                    .contributors(k)
                    .into_iter()
                    .map(|b| &states[b].marginals()[k])
                    .collect();
                fuse_marginals(&locals)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FusedPass { states, fused })
    }

    /// One SIC step; returns the user decided, or `None` when all are done.
    pub fn step(&mut self) -> Result<Option<usize>> {
        if self.is_done() {
            return Ok(None);
        }
        let pass = self.local_pass()?;
        let pick = match self.cfg.ordering {
            SicOrdering::LrMetric => {
                let mut best = 0;
                let mut best_delta = f64::NEG_INFINITY;
                for (i, q) in pass.fused.iter().enumerate() {
                    let d = q.lr_certainty();
                    if d > best_delta {
                        best = i;
                        best_delta = d;
                    }
                }
                best
            }
            SicOrdering::Energy => {
                let mut best = 0;
                let mut best_e = f64::NEG_INFINITY;
                for (i, &k) in self.active.iter().enumerate() {
                    let e = self.h.column(k).norm_squared();
                    if e > best_e {
                        best = i;
                        best_e = e;
                    }
                }
                best
            }
        };
        let user = self.active[pick];
        let q = pass.fused[pick].clone();
        let symbol = hard_detect(&q);
        self.certainties.push(q.lr_certainty());
        self.carried = Some(
            pass.states
                .into_iter()
                .map(|s| s.into_marginals())
                .collect(),
        );
        self.fix(user, symbol)?;
        self.fused[user] = Some(q);
        Ok(Some(user))
    }

    pub fn run(mut self) -> Result<DetectionResult> {
        while self.step()?.is_some() {}
        Ok(self.finish())
    }

    fn finish(self) -> DetectionResult {
        let size = self.cfg.alphabet.len();
        DetectionResult {
            symbols: self.decisions.iter().map(|d| d.unwrap_or(0)).collect(),
            order: self.order,
            fused: self
                .fused
                .into_iter()
                .map(|q| q.unwrap_or_else(|| SymbolPmf::uniform(size)))
                .collect(),
            certainties: self.certainties,
        }
    }
}

/// Distributed VMP with SIC: `K` rounds of local processing, fusion, LR
/// ordering and cancellation.
pub fn sic_detect(y: &CVector, h: &CMatrix, cfg: &ReceiverConfig) -> Result<DetectionResult> {
    SicDetector::new(y, h, cfg)?.run()
}

/// One initialisation, one LPU pass, one fusion, then a hard decision for
/// every user.
pub fn detect_noniterative(
    y: &CVector,
    h: &CMatrix,
    cfg: &ReceiverConfig,
) -> Result<DetectionResult> {
    let sic = SicDetector::new(y, h, cfg)?;
    let pass = sic.local_pass()?;
    Ok(DetectionResult {
        symbols: pass.fused.iter().map(hard_detect).collect(),
        order: (0..h.ncols()).collect(),
        certainties: pass.fused.iter().map(lr_certainty).collect(),
        fused: pass.fused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::FusionMode;
    use crate::numerics::{sample_cgauss, SimRng};

    fn pmf(w: &[f64]) -> SymbolPmf {
        SymbolPmf::from_weights(w.to_vec()).unwrap()
    }

    #[test]
    fn fuse_single_and_uniform() {
        let q = pmf(&[0.1, 0.2, 0.3, 0.4]);
        let f = fuse_marginals(&[&q]).unwrap();
        for (a, b) in f.weights().iter().zip(q.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        let u = SymbolPmf::uniform(4);
        let f = fuse_marginals(&[&u, &u, &u]).unwrap();
        assert!(f.weights().iter().all(|w| (w - 0.25).abs() < 1e-15));
        let p = pmf(&[0.7, 0.1, 0.1, 0.1]);
        let f = fuse_marginals(&[&p, &u]).unwrap();
        for (a, b) in f.weights().iter().zip(p.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn fuse_three_pmfs_by_hand() {
        let a = pmf(&[0.4, 0.3, 0.2, 0.1]);
        let b = pmf(&[0.1, 0.6, 0.2, 0.1]);
        let c = pmf(&[0.25, 0.25, 0.4, 0.1]);
        // products: 0.01, 0.045, 0.016, 0.001; total 0.072
        let expected = [0.01 / 0.072, 0.045 / 0.072, 0.016 / 0.072, 0.001 / 0.072];
        let f = fuse_marginals(&[&a, &b, &c]).unwrap();
        for (x, y) in f.weights().iter().zip(expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn fuse_conflict_falls_back_to_uniform() {
        let a = SymbolPmf::delta(4, 0);
        let b = SymbolPmf::delta(4, 1);
        assert_eq!(fuse_marginals(&[&a, &b]).unwrap(), SymbolPmf::uniform(4));
        assert!(fuse_marginals(&[]).is_err());
    }

    #[test]
    fn hard_decisions() {
        assert_eq!(hard_detect(&SymbolPmf::delta(4, 3)), 3);
        assert_eq!(hard_detect(&pmf(&[0.4, 0.3, 0.2, 0.1])), 0);
        assert_eq!(hard_detect(&pmf(&[0.5, 0.5, 0.0, 0.0])), 0);
        assert_eq!(hard_detect(&pmf(&[0.1, 0.45, 0.45, 0.0])), 1);
    }

    fn instance(seed: u64, m: usize, k: usize, noise: f64) -> (CMatrix, Vec<usize>, CVector) {
        let a = Constellation::qpsk();
        let mut rng = SimRng::new(seed);
        let h = sample_cgauss(&mut rng, m, k, 1.0).unwrap();
        let idx: Vec<usize> = (0..k).map(|_| rng.index(4)).collect();
        let x = CVector::from_iterator(k, idx.iter().map(|&i| a.point(i)));
        let mut y = &h * x;
        if noise > 0.0 {
            y += sample_cgauss(&mut rng, m, 1, noise).unwrap().column(0);
        }
        (h, idx, y)
    }

    #[test]
    fn single_user_sic_equals_noniterative() {
        let (h, _, y) = instance(1, 8, 1, 0.5);
        let cfg = ReceiverConfig::new(Constellation::qpsk(), 4, 0.5);
        let a = sic_detect(&y, &h, &cfg).unwrap();
        let b = detect_noniterative(&y, &h, &cfg).unwrap();
        assert_eq!(a.symbols, b.symbols);
        assert_eq!(a.order, vec![0]);
    }

    #[test]
    fn noiseless_sic_recovers_symbols() {
        for seed in 0..20 {
            let (h, idx, y) = instance(seed, 8, 2, 0.0);
            let cfg = ReceiverConfig::new(Constellation::qpsk(), 4, 1e-6);
            let r = sic_detect(&y, &h, &cfg).unwrap();
            assert_eq!(r.symbols, idx);
            let mut order = r.order.clone();
            order.sort_unstable();
            assert_eq!(order, vec![0, 1]);
        }
    }

    #[test]
    fn fixed_users_cancel_exactly() {
        let (h, idx, y) = instance(3, 8, 3, 0.0);
        let cfg = ReceiverConfig::new(Constellation::qpsk(), 2, 0.1);
        let mut sic = SicDetector::new(&y, &h, &cfg).unwrap();
        for (k, &s) in idx.iter().enumerate() {
            sic.fix(k, s).unwrap();
        }
        assert!(sic.is_done());
        assert!(sic.residual().norm() < 1e-12);
        assert_eq!(sic.step().unwrap(), None);
    }

    #[test]
    fn noniterative_matches_first_sic_step() {
        let (h, _, y) = instance(4, 16, 4, 0.3);
        let cfg = ReceiverConfig::new(Constellation::qpsk(), 4, 0.3);
        let non = detect_noniterative(&y, &h, &cfg).unwrap();
        let mut sic = SicDetector::new(&y, &h, &cfg).unwrap();
        let first = sic.step().unwrap().unwrap();
        let r = sic.run().unwrap();
        assert_eq!(r.order[0], first);
        assert_eq!(r.symbols[first], non.symbols[first]);
        assert_eq!(r.fused[first], non.fused[first]);
    }

    #[test]
    fn uniform_information_detects_lowest_index() {
        let h = CMatrix::zeros(4, 3);
        let y = CVector::zeros(4);
        let mut cfg = ReceiverConfig::new(Constellation::qpsk(), 2, 1.0);
        cfg.init = InitMethod::Uniform;
        let r = detect_noniterative(&y, &h, &cfg).unwrap();
        assert_eq!(r.symbols, vec![0, 0, 0]);
    }

    #[test]
    fn hyb_and_nop_with_full_budget_match_all() {
        for seed in 0..10 {
            let (h, _, y) = instance(100 + seed, 16, 4, 0.5);
            let mut cfg = ReceiverConfig::new(Constellation::qpsk(), 4, 0.5);
            let base = sic_detect(&y, &h, &cfg).unwrap();
            for mode in [FusionMode::Hyb, FusionMode::Nop] {
                cfg.fusion = FusionParams {
                    mode,
                    p0: 0.75,
                    b_max: 4,
                };
                assert_eq!(sic_detect(&y, &h, &cfg).unwrap(), base);
            }
        }
    }

    #[test]
    fn every_init_and_strategy_runs() {
        let (h, idx, y) = instance(7, 16, 3, 1e-4);
        for init in [
            InitMethod::Uniform,
            InitMethod::MrcGlobal,
            InitMethod::MrcLocal,
            InitMethod::ZfGlobal,
            InitMethod::ZfLocal,
        ] {
            for strategy in [InitStrategy::OneTime, InitStrategy::PerSicStep] {
                let mut cfg = ReceiverConfig::new(Constellation::qpsk(), 2, 1e-4);
                cfg.init = init;
                cfg.strategy = strategy;
                cfg.iterations = 3;
                let r = sic_detect(&y, &h, &cfg).unwrap();
                assert_eq!(r.symbols, idx, "{init:?} {strategy:?}");
            }
        }
    }
}
