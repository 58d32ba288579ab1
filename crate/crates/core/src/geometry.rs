//! Disk-pair geometry, the conformal frame and the Möbius map onto the annulus.
//!
//! The two inclusions are disks of common radius `r` centred at
//! `(∓(r + eps/2), 0)`. The map `T(z) = beta/(z - beta/2) + 1` sends `D1`
//! onto `|zeta| < rho`, `D2` onto `|zeta| > 1/rho` and the matrix onto the
//! annulus `rho < |zeta| < 1/rho`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{require_positive, Error, Result};

/// Configurations with `eps / r` below this ratio are rejected.
pub const MIN_GAP_RATIO: f64 = 1e-12;

/// Relative slack used when deciding whether a point of the annulus frame lies
/// on the closed annulus.
pub(crate) const ANNULUS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskPair {
    r: f64,
    eps: f64,
}

impl DiskPair {
    pub fn new(r: f64, eps: f64) -> Result<Self> {
        let r = require_positive("r", r)?;
        let eps = require_positive("eps", eps)?;
        let ratio = eps / r;
        if ratio < MIN_GAP_RATIO {
            return Err(Error::Conditioning {
                ratio,
                limit: MIN_GAP_RATIO,
            });
        }
        Ok(Self { r, eps })
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn gap(&self) -> f64 {
        self.eps
    }

    /// Centre of `D1` (`which = 1`) or `D2` (`which = 2`).
    pub fn center(&self, which: u8) -> Complex64 {
        let x = self.r + 0.5 * self.eps;
        match which {
            1 => Complex64::new(-x, 0.0),
            _ => Complex64::new(x, 0.0),
        }
    }

    /// Signed distances `|z - c_j| - r` to the two boundary circles.
    pub fn signed_distances(&self, z: Complex64) -> [f64; 2] {
        [
            (z - self.center(1)).norm() - self.r,
            (z - self.center(2)).norm() - self.r,
        ]
    }

    pub fn classify(&self, z: Complex64, tol: f64) -> Region {
        let [d1, d2] = self.signed_distances(z);
        if d1.abs() < tol || d2.abs() < tol {
            Region::NearBoundary
        } else if d1 < 0.0 {
            Region::InD1
        } else if d2 < 0.0 {
            Region::InD2
        } else {
            Region::Matrix
        }
    }

    pub fn frame(&self) -> ConformalFrame {
        derive_frame(self)
    }
}

/// Where a physical point sits relative to the inclusions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    Matrix,
    InD1,
    InD2,
    NearBoundary,
}

/// Tags a point by its signed distance to `∂D1 ∪ ∂D2`.
pub fn classify(pair: &DiskPair, z: Complex64, tol: f64) -> Region {
    pair.classify(z, tol)
}

/// Quantities derived from a [`DiskPair`] that parametrize the annulus frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConformalFrame {
    r: f64,
    eps: f64,
    rho: f64,
    beta: f64,
    mu: f64,
    one_minus_rho: f64,
}

pub fn derive_frame(pair: &DiskPair) -> ConformalFrame {
    let (r, eps) = (pair.r, pair.eps);
    let s4 = (4.0 * r + eps).sqrt();
    let se = eps.sqrt();
    let sum = s4 + se;
    // s4 - se = 4r/(s4 + se): the direct difference cancels when eps >> r.
    let rho = 4.0 * r / (sum * sum);
    let beta = (eps * (4.0 * r + eps)).sqrt();
    // 1 - rho and mu = rho + 1/rho - 2 are O(sqrt(eps/r)) and O(eps/r); both
    // are formed without subtracting nearly equal numbers.
    let one_minus_rho = 2.0 * se / sum;
    let mu = one_minus_rho * one_minus_rho / rho;
    ConformalFrame {
        r,
        eps,
        rho,
        beta,
        mu,
        one_minus_rho,
    }
}

impl ConformalFrame {
    pub fn from_params(r: f64, eps: f64) -> Result<Self> {
        Ok(DiskPair::new(r, eps)?.frame())
    }

    #[inline]
    pub fn rho(&self) -> f64 {
        self.rho
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn one_minus_rho(&self) -> f64 {
        self.one_minus_rho
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn gap(&self) -> f64 {
        self.eps
    }

    /// `(1/rho - rho) / beta`, which equals `1/r`.
    pub fn frame_identity(&self) -> f64 {
        self.one_minus_rho * (1.0 + self.rho) / (self.rho * self.beta)
    }

    /// `ln rho`, accurate when `rho` is close to one.
    #[inline]
    pub fn ln_rho(&self) -> f64 {
        (-self.one_minus_rho).ln_1p()
    }

    pub fn moebius(&self, p: ExtendedPoint) -> ExtendedPoint {
        match p {
            ExtendedPoint::Infinity => ExtendedPoint::Finite(Complex64::new(1.0, 0.0)),
            ExtendedPoint::Finite(z) => {
                let d = z - 0.5 * self.beta;
                if d == Complex64::new(0.0, 0.0) {
                    ExtendedPoint::Infinity
                } else {
                    ExtendedPoint::Finite(self.beta / d + 1.0)
                }
            }
        }
    }

    pub fn moebius_inv(&self, p: ExtendedPoint) -> ExtendedPoint {
        match p {
            ExtendedPoint::Infinity => ExtendedPoint::Finite(Complex64::new(0.5 * self.beta, 0.0)),
            ExtendedPoint::Finite(zeta) => {
                let d = zeta - 1.0;
                if d == Complex64::new(0.0, 0.0) {
                    ExtendedPoint::Infinity
                } else {
                    ExtendedPoint::Finite(self.beta / d + 0.5 * self.beta)
                }
            }
        }
    }

    /// Maps a finite physical point to the annulus frame, returning the
    /// triple `(zeta, zeta - 1, 1/zeta)`.
    ///
    /// `zeta - 1 = beta/(z - beta/2)` and `1/zeta = (z - beta/2)/(z + beta/2)`
    /// are formed directly so that neither loses digits near `zeta = 1`.
    /// Points strictly inside an inclusion are rejected.
    pub(crate) fn annulus_point(&self, z: Complex64) -> Result<AnnulusPoint> {
        let half = 0.5 * self.beta;
        let zm = z - half;
        let zp = z + half;
        let inside = |which| Error::InsideInclusion {
            x: z.re,
            y: z.im,
            which,
        };
        if zm.norm_sqr() == 0.0 {
            return Err(inside(2));
        }
        if zp.norm_sqr() == 0.0 {
            return Err(inside(1));
        }
        let zeta = zp / zm;
        let m = zeta.norm();
        if m < self.rho * (1.0 - ANNULUS_SLACK) {
            return Err(inside(1));
        }
        if m * self.rho > 1.0 + ANNULUS_SLACK {
            return Err(inside(2));
        }
        Ok(AnnulusPoint {
            zeta,
            zeta_minus_one: self.beta / zm,
            inv_zeta: zm / zp,
        })
    }

    /// Point on the boundary circle `|zeta| = rho` (`which = 1`) or
    /// `|zeta| = 1/rho` (`which = 2`) at annulus angle `phi`.
    pub(crate) fn boundary_point(&self, which: u8, phi: f64) -> AnnulusPoint {
        let (s, c) = phi.sin_cos();
        let half_sin_sq = {
            let h = (0.5 * phi).sin();
            2.0 * h * h
        };
        let (radius, re_minus_one) = if which == 1 {
            (self.rho, -(self.one_minus_rho + self.rho * half_sin_sq))
        } else {
            let inv = 1.0 / self.rho;
            (inv, self.one_minus_rho / self.rho - inv * half_sin_sq)
        };
        let zeta = Complex64::new(radius * c, radius * s);
        AnnulusPoint {
            zeta,
            zeta_minus_one: Complex64::new(re_minus_one, radius * s),
            inv_zeta: Complex64::new(c / radius, -s / radius),
        }
    }

    /// Physical point for an annulus point.
    pub(crate) fn physical(&self, p: &AnnulusPoint) -> Complex64 {
        self.beta / p.zeta_minus_one + 0.5 * self.beta
    }
}

/// A point of the annulus frame together with the derived quantities the
/// series evaluators need.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AnnulusPoint {
    pub zeta: Complex64,
    pub zeta_minus_one: Complex64,
    pub inv_zeta: Complex64,
}

/// A point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedPoint {
    Finite(Complex64),
    Infinity,
}

impl ExtendedPoint {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Self::Finite(z) => Some(z),
            Self::Infinity => None,
        }
    }
}

impl From<Complex64> for ExtendedPoint {
    fn from(z: Complex64) -> Self {
        Self::Finite(z)
    }
}

pub fn moebius(frame: &ConformalFrame, z: ExtendedPoint) -> ExtendedPoint {
    frame.moebius(z)
}

pub fn moebius_inv(frame: &ConformalFrame, zeta: ExtendedPoint) -> ExtendedPoint {
    frame.moebius_inv(zeta)
}
