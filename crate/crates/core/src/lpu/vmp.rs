use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{local_marginal, pmf_moments, Constellation, GaussianMessage, SymbolPmf};
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, CVector};

/// Gamma posterior `q(λ_b) ∝ λ^(alpha-1) exp(-beta λ)` on the noise precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoisePrecision {
    pub alpha: f64,
    pub beta: f64,
    pub mean: f64,
}

impl NoisePrecision {
    fn from_residual(antennas: usize, zb: f64) -> Self {
        let alpha = antennas as f64;
        let beta = zb.max(1e-12 * alpha);
        NoisePrecision {
            alpha,
            beta,
            mean: alpha / beta,
        }
    }
}

/// Order in which user marginals are refreshed within one sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepSchedule {
    /// Users updated in ascending index, each message using the freshest means.
    #[default]
    Sequential,
    /// All messages computed from the means at the start of the sweep.
    Parallel,
}

/// One sub-array's mean-field posterior.
#[derive(Clone, Debug)]
pub struct LpuState {
    index: usize,
    channel: CMatrix,
    signal: CVector,
    alphabet: Constellation,
    priors: Vec<SymbolPmf>,
    marginals: Vec<SymbolPmf>,
    means: Vec<Complex64>,
    variances: Vec<f64>,
    energies: Vec<f64>,
    precision: NoisePrecision,
}

impl LpuState {
    /// `channel` is `M_b × K`, `signal` has length `M_b`; priors default to
    /// uniform over the alphabet.
    pub fn new(
        index: usize,
        channel: CMatrix,
        signal: CVector,
        alphabet: Constellation,
        marginals: Vec<SymbolPmf>,
    ) -> Result<Self> {
        let users = channel.ncols();
        let priors = vec![SymbolPmf::uniform(alphabet.len()); users];
        Self::with_priors(index, channel, signal, alphabet, priors, marginals)
    }

    pub fn with_priors(
        index: usize,
        channel: CMatrix,
        signal: CVector,
        alphabet: Constellation,
        priors: Vec<SymbolPmf>,
        marginals: Vec<SymbolPmf>,
    ) -> Result<Self> {
        let (rows, users) = channel.shape();
        if signal.len() != rows {
            return Err(Error::Dimension(format!(
                "signal length {} does not match {} sub-array antennas",
                signal.len(),
                rows
            )));
        }
        if rows == 0 {
            return Err(Error::Dimension("sub-array has no antennas".into()));
        }
        if priors.len() != users || marginals.len() != users {
            return Err(Error::Dimension(format!(
                "{users} users but {} priors and {} marginals",
                priors.len(),
                marginals.len()
            )));
        }
        let size = alphabet.len();
        if priors.iter().chain(&marginals).any(|q| q.len() != size) {
            return Err(Error::Dimension(
                "pmf length differs from alphabet size".into(),
            ));
        }
        let energies = channel.column_iter().map(|c| c.norm_squared()).collect();
        let mut state = LpuState {
            index,
            channel,
            signal,
            alphabet,
            priors,
            marginals,
            means: vec![Complex64::new(0.0, 0.0); users],
            variances: vec![0.0; users],
            energies,
            precision: NoisePrecision::from_residual(rows, 0.0),
        };
        for k in 0..users {
            state.refresh_moments(k);
        }
        state.precision = update_precision(&state);
        Ok(state)
    }

    fn refresh_moments(&mut self, k: usize) {
        let (m, v) = pmf_moments(&self.marginals[k], &self.alphabet);
        self.means[k] = m;
        self.variances[k] = v;
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn antennas(&self) -> usize {
        self.channel.nrows()
    }

    pub fn users(&self) -> usize {
        self.channel.ncols()
    }

    pub fn channel(&self) -> &CMatrix {
        &self.channel
    }

    pub fn signal(&self) -> &CVector {
        &self.signal
    }

    pub fn alphabet(&self) -> &Constellation {
        &self.alphabet
    }

    pub fn marginals(&self) -> &[SymbolPmf] {
        &self.marginals
    }

    pub fn priors(&self) -> &[SymbolPmf] {
        &self.priors
    }

    pub fn means(&self) -> &[Complex64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// `‖h̃_{b,k}‖²` for every user.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn precision(&self) -> NoisePrecision {
        self.precision
    }

    /// Recomputes `q(λ_b)` from the current moments and stores it.
    pub fn refresh_precision(&mut self) -> NoisePrecision {
        self.precision = update_precision(self);
        self.precision
    }

    pub fn set_marginal(&mut self, k: usize, q: SymbolPmf) {
        self.marginals[k] = q;
        self.refresh_moments(k);
    }

    pub fn set_prior(&mut self, k: usize, q: SymbolPmf) {
        self.priors[k] = q;
    }

    pub fn into_marginals(self) -> Vec<SymbolPmf> {
        self.marginals
    }

    /// `y_b - Σ_k h̃_{b,k} x̄_k`.
    fn mean_residual(&self) -> CVector {
        let mut r = self.signal.clone();
        for (k, m) in self.means.iter().enumerate() {
            if *m != Complex64::new(0.0, 0.0) {
                r.axpy(-*m, &self.channel.column(k), Complex64::new(1.0, 0.0));
            }
        }
        r
    }
}

/// `Z_b = ‖y_b - Σ_k h̃_{b,k} x̄_k‖² + Σ_k σ²_k ‖h̃_{b,k}‖²`.
pub fn residual_zb(state: &LpuState) -> f64 {
    let spread: f64 = state
        .variances
        .iter()
        .zip(&state.energies)
        .map(|(v, e)| v * e)
        .sum();
    state.mean_residual().norm_squared() + spread
}

/// Posterior of `λ_b`: shape `M_b`, rate `max(Z_b, 1e-12 M_b)`.
pub fn update_precision(state: &LpuState) -> NoisePrecision {
    NoisePrecision::from_residual(state.antennas(), residual_zb(state))
}

/// Message from the observation factor to user `k`, using the state's
/// current means and precision.
pub fn symbol_message(state: &LpuState, k: usize) -> Result<GaussianMessage> {
    let energy = state.energies[k];
    if energy == 0.0 {
        return Err(Error::InvisibleUser { user: k });
    }
    let h = state.channel.column(k);
    let mut r = state.signal.clone();
    for (j, m) in state.means.iter().enumerate() {
        if j != k {
            r.axpy(-*m, &state.channel.column(j), Complex64::new(1.0, 0.0));
        }
    }
    Ok(GaussianMessage {
        mu: h.dotc(&r) / energy,
        var: 1.0 / (state.precision.mean * energy),
    })
}

/// Runs `iterations` VMP sweeps in place. Each sweep refreshes `λ̄_b` from the
/// current moments and then updates every user's marginal; users with a
/// zero channel column on this sub-array get a uniform marginal.
pub fn run_local_vmp(
    state: &mut LpuState,
    iterations: usize,
    schedule: SweepSchedule,
) -> Result<()> {
    if iterations == 0 {
        return Err(Error::Parameter("VMP needs at least one iteration".into()));
    }
    let size = state.alphabet.len();
    for _ in 0..iterations {
        state.precision = update_precision(state);
        let lambda = state.precision.mean;
        match schedule {
            SweepSchedule::Sequential => {
                let mut residual = state.mean_residual();
                for k in 0..state.users() {
                    let energy = state.energies[k];
                    let q = if energy == 0.0 {
                        SymbolPmf::uniform(size)
                    } else {
                        let h = state.channel.column(k);
                        let msg = GaussianMessage {
                            mu: state.means[k] + h.dotc(&residual) / energy,
                            var: 1.0 / (lambda * energy),
                        };
                        local_marginal(msg, &state.priors[k], &state.alphabet)?
                    };
                    let old = state.means[k];
                    state.set_marginal(k, q);
                    let shift = state.means[k] - old;
                    if shift != Complex64::new(0.0, 0.0) {
                        residual.axpy(-shift, &state.channel.column(k), Complex64::new(1.0, 0.0));
                    }
                }
            }
            SweepSchedule::Parallel => {
                let updated = (0..state.users())
                    .map(|k| match symbol_message(state, k) {
                        Ok(msg) => local_marginal(msg, &state.priors[k], &state.alphabet),
                        Err(Error::InvisibleUser { .. }) => Ok(SymbolPmf::uniform(size)),
                        Err(e) => Err(e),
                    })
                    .collect::<Result<Vec<_>>>()?;
                for (k, q) in updated.into_iter().enumerate() {
                    state.set_marginal(k, q);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpu::gaussian_to_pmf;
    use crate::numerics::{sample_cgauss, SimRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qpsk() -> Constellation {
        Constellation::qpsk()
    }

    fn random_pmf(rng: &mut SimRng) -> SymbolPmf {
        SymbolPmf::from_weights((0..4).map(|_| rng.uniform(0.01, 1.0)).collect()).unwrap()
    }

    #[test]
    fn zb_vanishes_with_perfect_knowledge() {
        let mut rng = SimRng::new(1);
        let a = qpsk();
        let h = sample_cgauss(&mut rng, 3, 2, 1.0).unwrap();
        let x = CVector::from_vec(vec![a.point(1), a.point(3)]);
        let y = &h * &x;
        let marg = vec![SymbolPmf::delta(4, 1), SymbolPmf::delta(4, 3)];
        let st = LpuState::new(0, h, y, a, marg).unwrap();
        assert!(residual_zb(&st) < 1e-28);
        let p = update_precision(&st);
        assert_eq!(p.beta, 1e-12 * 3.0);
        assert!((p.mean - 3.0 / 3e-12).abs() / p.mean < 1e-12);
        assert!(p.mean.is_finite());
    }

    #[test]
    fn zb_with_zero_channel_is_signal_energy() {
        let y = CVector::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.0)]);
        let st = LpuState::new(
            0,
            CMatrix::zeros(2, 3),
            y.clone(),
            qpsk(),
            vec![SymbolPmf::uniform(4); 3],
        )
        .unwrap();
        assert!((residual_zb(&st) - y.norm_squared()).abs() < 1e-15);
    }

    #[test]
    fn precision_values() {
        assert_eq!(NoisePrecision::from_residual(8, 8.0).mean, 1.0);
        assert_eq!(NoisePrecision::from_residual(8, 16.0).mean, 0.5);
    }

    #[test]
    fn scalar_symbol_message() {
        let h = CMatrix::from_element(1, 1, c(1.0, 0.0));
        let y = CVector::from_element(1, c(2.0, 0.0));
        let mut st = LpuState::new(0, h, y, qpsk(), vec![SymbolPmf::uniform(4)]).unwrap();
        st.precision = NoisePrecision::from_residual(1, 1.0);
        let msg = symbol_message(&st, 0).unwrap();
        assert!((msg.mu - c(2.0, 0.0)).norm() < 1e-15);
        assert!((msg.var - 1.0).abs() < 1e-15);
    }

    #[test]
    fn message_is_exact_with_known_interferers() {
        let mut rng = SimRng::new(2);
        let a = qpsk();
        let h = sample_cgauss(&mut rng, 4, 3, 1.0).unwrap();
        let idx = [0usize, 2, 3];
        let x = CVector::from_iterator(3, idx.iter().map(|&i| a.point(i)));
        let y = &h * &x;
        let marg = idx.iter().map(|&i| SymbolPmf::delta(4, i)).collect();
        let st = LpuState::new(0, h, y, a.clone(), marg).unwrap();
        for k in 0..3 {
            let msg = symbol_message(&st, k).unwrap();
            assert!((msg.mu - a.point(idx[k])).norm() < 1e-10);
        }
    }

    #[test]
    fn invisible_user_gets_uniform_marginal() {
        let mut rng = SimRng::new(3);
        let mut h = sample_cgauss(&mut rng, 4, 2, 1.0).unwrap();
        h.column_mut(1).fill(c(0.0, 0.0));
        let y = sample_cgauss(&mut rng, 4, 1, 1.0)
            .unwrap()
            .column(0)
            .into_owned();
        let init = vec![SymbolPmf::delta(4, 0), SymbolPmf::delta(4, 1)];
        let mut st = LpuState::new(0, h, y, qpsk(), init).unwrap();
        assert!(matches!(
            symbol_message(&st, 1),
            Err(Error::InvisibleUser { user: 1 })
        ));
        run_local_vmp(&mut st, 1, SweepSchedule::Sequential).unwrap();
        assert_eq!(st.marginals()[1], SymbolPmf::uniform(4));
    }

    #[test]
    fn delta_priors_are_a_fixed_point() {
        let mut rng = SimRng::new(4);
        let a = qpsk();
        let h = sample_cgauss(&mut rng, 3, 2, 1.0).unwrap();
        let y = sample_cgauss(&mut rng, 3, 1, 1.0)
            .unwrap()
            .column(0)
            .into_owned();
        let d = vec![SymbolPmf::delta(4, 2), SymbolPmf::delta(4, 1)];
        let mut st = LpuState::with_priors(0, h, y, a, d.clone(), d.clone()).unwrap();
        run_local_vmp(&mut st, 3, SweepSchedule::Sequential).unwrap();
        assert_eq!(st.marginals(), &d[..]);
    }

    /// One sequential sweep written out directly from the update equations.
    fn sweep_oracle(
        h: &CMatrix,
        y: &CVector,
        init: &[SymbolPmf],
        a: &Constellation,
    ) -> Vec<SymbolPmf> {
        let (mb, k) = h.shape();
        let mut q: Vec<SymbolPmf> = init.to_vec();
        let moments = |q: &SymbolPmf| {
            let mut m = c(0.0, 0.0);
            let mut s = 0.0;
            for i in 0..a.len() {
                m += a.point(i) * q.weights()[i];
                s += a.point(i).norm_sqr() * q.weights()[i];
            }
            (m, s - m.norm_sqr())
        };
        let mut zb = 0.0;
        for r in 0..mb {
            let mut e = y[r];
            for j in 0..k {
                e -= h[(r, j)] * moments(&q[j]).0;
            }
            zb += e.norm_sqr();
        }
        for j in 0..k {
            let en: f64 = (0..mb).map(|r| h[(r, j)].norm_sqr()).sum();
            zb += moments(&q[j]).1 * en;
        }
        let lambda = mb as f64 / zb;
        for u in 0..k {
            let en: f64 = (0..mb).map(|r| h[(r, u)].norm_sqr()).sum();
            let mut acc = c(0.0, 0.0);
            for r in 0..mb {
                let mut e = y[r];
                for j in 0..k {
                    if j != u {
                        e -= h[(r, j)] * moments(&q[j]).0;
                    }
                }
                acc += h[(r, u)].conj() * e;
            }
            let mu = acc / en;
            let var = 1.0 / (lambda * en);
            q[u] = gaussian_to_pmf(mu, var, a).unwrap();
        }
        q
    }

    #[test]
    fn sweep_matches_direct_oracle() {
        let mut rng = SimRng::new(5);
        let a = qpsk();
        for _ in 0..50 {
            let mb = 1 + rng.index(4);
            let k = 1 + rng.index(3);
            let h = sample_cgauss(&mut rng, mb, k, 1.0).unwrap();
            let y = sample_cgauss(&mut rng, mb, 1, 2.0)
                .unwrap()
                .column(0)
                .into_owned();
            let init: Vec<SymbolPmf> = (0..k).map(|_| random_pmf(&mut rng)).collect();
            let expected = sweep_oracle(&h, &y, &init, &a);
            let mut st = LpuState::new(0, h, y, a.clone(), init).unwrap();
            run_local_vmp(&mut st, 1, SweepSchedule::Sequential).unwrap();
            for (got, want) in st.marginals().iter().zip(&expected) {
                for (g, w) in got.weights().iter().zip(want.weights()) {
                    assert!((g - w).abs() < 1e-12, "{g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn converged_state_is_stable() {
        let mut rng = SimRng::new(6);
        let a = qpsk();
        let h = sample_cgauss(&mut rng, 8, 2, 1.0).unwrap();
        let x = CVector::from_vec(vec![a.point(0), a.point(3)]);
        let noise = sample_cgauss(&mut rng, 8, 1, 0.01)
            .unwrap()
            .column(0)
            .into_owned();
        let y = &h * &x + noise;
        let mut st = LpuState::new(0, h, y, a, vec![SymbolPmf::uniform(4); 2]).unwrap();
        run_local_vmp(&mut st, 50, SweepSchedule::Sequential).unwrap();
        let before = st.marginals().to_vec();
        run_local_vmp(&mut st, 2, SweepSchedule::Sequential).unwrap();
        for (p, q) in before.iter().zip(st.marginals()) {
            for (x, y) in p.weights().iter().zip(q.weights()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn parallel_schedule_uses_stale_means() {
        let mut rng = SimRng::new(7);
        let a = qpsk();
        let h = sample_cgauss(&mut rng, 3, 3, 1.0).unwrap();
        let y = sample_cgauss(&mut rng, 3, 1, 1.0)
            .unwrap()
            .column(0)
            .into_owned();
        let init: Vec<SymbolPmf> = (0..3).map(|_| random_pmf(&mut rng)).collect();
        let st0 = LpuState::new(0, h, y, a.clone(), init).unwrap();
        let lambda = update_precision(&st0).mean;
        let mut expected_state = st0.clone();
        expected_state.precision = update_precision(&st0);
        let expected: Vec<SymbolPmf> = (0..3)
            .map(|k| {
                let m = symbol_message(&expected_state, k).unwrap();
                gaussian_to_pmf(m.mu, m.var, &a).unwrap()
            })
            .collect();
        let mut st = st0;
        run_local_vmp(&mut st, 1, SweepSchedule::Parallel).unwrap();
        assert!(lambda > 0.0);
        for (got, want) in st.marginals().iter().zip(&expected) {
            for (a, b) in got.weights().iter().zip(want.weights()) {
                assert!((a - b).abs() <= 1e-12 * b.max(1.0));
            }
        }
    }
}
