use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Finite symbol alphabet with unit average energy.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
}

/// Named constellation choices accepted by configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstellationKind {
    Qpsk,
    Psk8,
    Qam16,
}

impl ConstellationKind {
    pub fn build(self) -> Constellation {
        match self {
            ConstellationKind::Qpsk => Constellation::qpsk(),
            ConstellationKind::Psk8 => Constellation::psk(8),
            ConstellationKind::Qam16 => Constellation::square_qam(16),
        }
    }
}

impl Constellation {
    /// Validates unit average energy (to 1e-12) and distinct points.
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Parameter(
                "constellation needs at least two points".into(),
            ));
        }
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if (energy - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "constellation average energy is {energy}, expected 1"
            )));
        }
        for (i, a) in points.iter().enumerate() {
            if points[..i].iter().any(|b| (a - b).norm() < 1e-12) {
                return Err(Error::Parameter(format!(
                    "duplicate constellation point {a}"
                )));
            }
        }
        Ok(Constellation { points })
    }

    /// Rescales `points` to unit average energy.
    pub fn normalized(points: Vec<Complex64>) -> Result<Self> {
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len().max(1) as f64;
        if energy == 0.0 {
            return Err(Error::Parameter("constellation has zero energy".into()));
        }
        let s = energy.sqrt();
        Self::new(points.into_iter().map(|p| p / s).collect())
    }

    /// `(1+j, 1-j, -1+j, -1-j) / √2`.
    pub fn qpsk() -> Self {
        let r = FRAC_1_SQRT_2;
        Constellation {
            points: vec![
                Complex64::new(r, r),
                Complex64::new(r, -r),
                Complex64::new(-r, r),
                Complex64::new(-r, -r),
            ],
        }
    }

    pub fn psk(order: usize) -> Self {
        let points = (0..order)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / order as f64))
            .collect();
        Constellation { points }
    }

    /// Square QAM of the given order (4, 16, 64, ...), row-major from the
    /// top-left corner.
    pub fn square_qam(order: usize) -> Self {
        let side = (order as f64).sqrt().round() as usize;
        assert_eq!(
            side * side,
            order,
            "square QAM order must be a perfect square"
        );
        let levels: Vec<f64> = (0..side)
            .map(|i| (2 * i) as f64 - (side - 1) as f64)
            .collect();
        let mut points = Vec::with_capacity(order);
        for &im in levels.iter().rev() {
            for &re in &levels {
                points.push(Complex64::new(re, im));
            }
        }
        Self::normalized(points).expect("square QAM is valid")
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Index of the closest point; ties go to the lowest index.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}
