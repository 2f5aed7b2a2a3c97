//! Spectral coefficient vectors and the weighted-norm hierarchy.
//!
//! Everything in this library lives in the sine basis z_n(ξ) = √(2/π)·sin(nξ)
//! on (0,π): a function is represented by its first N coefficients. Three
//! nested spaces are distinguished by weighted ℓ² norms:
//!
//! * X — plain ℓ²              : ‖a‖² = Σ a_n²
//! * Z — first-order Sobolev   : ‖a‖² = Σ (1+n²)·a_n²
//! * D — second-order (domain) : ‖a‖² = Σ (1+n⁴)·a_n²
//!
//! The weights make the inclusion chain literal: ‖·‖_X ≤ ‖·‖_Z ≤ ‖·‖_D.
//! At finite truncation every vector belongs to all three spaces; the tag on a
//! [`SpectralVector`] records the *intended* regularity so that operations
//! which mathematically require more smoothness (e.g. base-time derivatives)
//! can reject under-tagged inputs.
//!
//! Product vectors pair a Z-part with an X-part and carry the norm of the
//! state space for the first-order formulation (position, velocity).

use crate::error::{EvofamError, Result};
use nalgebra::DVector;

/// Index of a sine mode; the n-th basis function has frequency n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(usize);

impl ModeIndex {
    /// Construct a mode index; must be at least 1.
    pub fn new(n: usize) -> Result<Self> {
        if n >= 1 {
            Ok(ModeIndex(n))
        } else {
            Err(EvofamError::InvalidModeIndex(n))
        }
    }

    /// The raw index (1-based).
    pub fn get(self) -> usize {
        self.0
    }

    /// The frequency as a float, convenient in ODE right-hand sides.
    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

/// Highest retained mode of a spectral truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation(usize);

impl Truncation {
    /// Construct a truncation; must retain at least one mode.
    pub fn new(n: usize) -> Result<Self> {
        if n >= 1 {
            Ok(Truncation(n))
        } else {
            Err(EvofamError::InvalidTruncation(n))
        }
    }

    /// Number of retained modes.
    pub fn n(self) -> usize {
        self.0
    }

    /// Iterate over all retained modes 1..=N.
    pub fn modes(self) -> impl Iterator<Item = ModeIndex> {
        (1..=self.0).map(ModeIndex)
    }
}

/// The three nested coefficient spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// Plain ℓ² (no weight).
    X,
    /// First-order weight 1+n².
    Z,
    /// Second-order weight 1+n⁴.
    D,
}

impl Space {
    /// Weight applied to the squared n-th coefficient in this space's norm.
    pub fn weight(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Space::X => 1.0,
            Space::Z => 1.0 + nf * nf,
            Space::D => 1.0 + nf * nf * nf * nf,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Space::X => "X",
            Space::Z => "Z",
            Space::D => "D",
        }
    }

    /// Whether a vector tagged `self` is acceptable where `required` is needed.
    /// D ⊂ Z ⊂ X, so a finer tag satisfies a coarser requirement.
    pub fn satisfies(self, required: Space) -> bool {
        matches!(
            (required, self),
            (Space::X, _) | (Space::Z, Space::Z | Space::D) | (Space::D, Space::D)
        )
    }
}

/// A finite sine-coefficient vector with a space tag recording intended use.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    coeffs: DVector<f64>,
    tag: Space,
}

impl SpectralVector {
    /// Wrap a coefficient vector with a tag. All finite values are accepted.
    pub fn new(coeffs: DVector<f64>, tag: Space) -> Self {
        SpectralVector { coeffs, tag }
    }

    /// Construct from a slice.
    pub fn from_slice(coeffs: &[f64], tag: Space) -> Self {
        SpectralVector::new(DVector::from_row_slice(coeffs), tag)
    }

    /// The n-th unit mode e_n (1-based) at truncation `trunc`.
    pub fn unit_mode(trunc: Truncation, n: ModeIndex, tag: Space) -> Result<Self> {
        if n.get() > trunc.n() {
            return Err(EvofamError::Dimension {
                expected: trunc.n(),
                got: n.get(),
            });
        }
        let mut v = DVector::zeros(trunc.n());
        v[n.get() - 1] = 1.0;
        Ok(SpectralVector::new(v, tag))
    }

    /// Zero vector at truncation `trunc`.
    pub fn zeros(trunc: Truncation, tag: Space) -> Self {
        SpectralVector::new(DVector::zeros(trunc.n()), tag)
    }

    /// Number of retained coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// Whether the vector has no coefficients (degenerate; normal vectors never are).
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient access (0-based storage index; mode n lives at n-1).
    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    /// The space tag.
    pub fn tag(&self) -> Space {
        self.tag
    }

    /// Re-tag the same coefficients (e.g. after applying a smoothing operator).
    pub fn retagged(&self, tag: Space) -> Self {
        SpectralVector::new(self.coeffs.clone(), tag)
    }

    /// Check that this vector may be used where `required` regularity is needed.
    pub fn require(&self, required: Space) -> Result<()> {
        if self.tag.satisfies(required) {
            Ok(())
        } else {
            Err(EvofamError::SpaceTag {
                required: required.name(),
                actual: self.tag.name(),
            })
        }
    }

    /// Weighted ℓ² norm of the coefficients in the given space.
    pub fn norm(&self, space: Space) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| space.weight(i + 1) * a * a)
            .sum::<f64>()
            .sqrt()
    }
}

/// Element of the product state space (first component Z-normed, second X-normed),
/// i.e. a (position, velocity) pair for the first-order formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector {
    /// Position-like component, measured in the Z norm.
    pub first: SpectralVector,
    /// Velocity-like component, measured in the X norm.
    pub second: SpectralVector,
}

impl ProductVector {
    /// Pair two components; dimensions must agree.
    pub fn new(first: SpectralVector, second: SpectralVector) -> Result<Self> {
        if first.len() != second.len() {
            return Err(EvofamError::Dimension {
                expected: first.len(),
                got: second.len(),
            });
        }
        Ok(ProductVector { first, second })
    }

    /// Norm of the product state space: hypot of (Z of first, X of second).
    pub fn norm_state(&self) -> f64 {
        self.first.norm(Space::Z).hypot(self.second.norm(Space::X))
    }

    /// Norm of the product *domain* space: hypot of (D of first, Z of second).
    /// This is the natural size of a probe fed to generator-side checks.
    pub fn norm_domain(&self) -> f64 {
        self.first.norm(Space::D).hypot(self.second.norm(Space::Z))
    }

    /// Stack into a single 2N vector (first on top), the layout used by
    /// block propagator matrices.
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.first.len();
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(self.first.coeffs());
        out.rows_mut(n, n).copy_from(self.second.coeffs());
        out
    }
}

/// Diagonal weights of the product-state norm on stacked 2N vectors:
/// √(1+n²) on the first block, 1 on the second. Conjugating a block matrix by
/// this diagonal turns its plain σ_max into the product-state operator norm.
pub fn state_weights(trunc: Truncation) -> DVector<f64> {
    let n = trunc.n();
    let mut w = DVector::zeros(2 * n);
    for k in 0..n {
        let nf = (k + 1) as f64;
        w[k] = (1.0 + nf * nf).sqrt();
    }
    for k in n..2 * n {
        w[k] = 1.0;
    }
    w
}

/// Norm of a raw stacked 2N vector in the product-state norm.
pub fn stacked_state_norm(v: &DVector<f64>, trunc: Truncation) -> f64 {
    let n = trunc.n();
    debug_assert_eq!(v.len(), 2 * n);
    let mut acc = 0.0;
    for k in 0..n {
        let nf = (k + 1) as f64;
        acc += (1.0 + nf * nf) * v[k] * v[k];
    }
    for k in n..2 * n {
        acc += v[k] * v[k];
    }
    acc.sqrt()
}

/// Diagonal weights of the product-domain norm on stacked 2N vectors:
/// √(1+n⁴) on the first block, √(1+n²) on the second. This is the norm in
/// which generator-side residuals of the first-order formulation are
/// measured (the first component needs two spatial derivatives, the second
/// one).
pub fn domain_weights(trunc: Truncation) -> DVector<f64> {
    let n = trunc.n();
    let mut w = DVector::zeros(2 * n);
    for k in 0..n {
        let nf = (k + 1) as f64;
        w[k] = (1.0 + nf * nf * nf * nf).sqrt();
        w[n + k] = (1.0 + nf * nf).sqrt();
    }
    w
}

/// Norm of a raw stacked 2N vector in the product-domain norm.
pub fn stacked_domain_norm(v: &DVector<f64>, trunc: Truncation) -> f64 {
    let n = trunc.n();
    debug_assert_eq!(v.len(), 2 * n);
    let mut acc = 0.0;
    for k in 0..n {
        let nf = (k + 1) as f64;
        acc += (1.0 + nf * nf * nf * nf) * v[k] * v[k];
        acc += (1.0 + nf * nf) * v[n + k] * v[n + k];
    }
    acc.sqrt()
}

/// Diagonal √-weights of one scale on N coefficients: the norm of `a` in
/// `space` equals the plain Euclidean norm of the weighted coefficients.
pub fn scale_weights(trunc: Truncation, space: Space) -> DVector<f64> {
    DVector::from_iterator(
        trunc.n(),
        (1..=trunc.n()).map(|n| space.weight(n).sqrt()),
    )
}

// ═══════════════════════════════════════════════════════════════════════════
