use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};

/// Deterministic random source.
///
/// Every stream is a ChaCha8 generator keyed by the experiment seed, with the
/// 64-bit ChaCha stream id derived from a tag path such as
/// `[snr_index, block, trial]`. Two streams with different tags never share
/// output, so work split across threads reproduces the single-threaded run.
#[derive(Clone, Debug)]
pub struct SimRng {
    seed: u64,
    inner: ChaCha8Rng,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_id(tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix(tags.len() as u64), |acc, &t| {
        splitmix(acc ^ splitmix(t))
    })
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self::stream(seed, &[])
    }

    /// Independent stream for the given tag path under `seed`.
    pub fn stream(seed: u64, tags: &[u64]) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id(tags));
        SimRng { seed, inner }
    }

    /// Child stream of this generator's seed; does not advance `self`.
    pub fn substream(&self, tags: &[u64]) -> Self {
        Self::stream(self.seed, tags)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        if high <= low {
            return low;
        }
        self.inner.random_range(low..high)
    }

    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        Normal::new(mean, std_dev)
            .expect("finite standard deviation")
            .sample(&mut self.inner)
    }

    /// Log-normal draw with `mu`, `sigma` the parameters of the underlying normal.
    pub fn lognormal(&mut self, mu: f64, sigma: f64) -> f64 {
        LogNormal::new(mu, sigma)
            .expect("finite log-normal parameters")
            .sample(&mut self.inner)
    }

    /// Circularly symmetric complex Gaussian with total variance `variance`.
    pub fn cgauss(&mut self, variance: f64) -> Complex64 {
        let s = (variance / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(&mut self.inner);
        let im: f64 = StandardNormal.sample(&mut self.inner);
        Complex64::new(s * re, s * im)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// `count` distinct indices from `0..n`, in the order drawn.
    pub fn distinct_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.inner, n, count.min(n)).into_vec()
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
