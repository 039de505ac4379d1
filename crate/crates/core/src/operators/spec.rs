use super::pucci::{pucci_minus, pucci_plus, EllipticityPair};
use super::SymMatrix;
use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField};
use crate::grid::{check_dim, MAX_DIM};

/// Gradients shorter than this do not define a direction; the normalized
/// p-Laplacian then falls back to the trace.
pub const DIRECTION_FLOOR: f64 = 1e-8;

/// One linear operator `Tr(a M) - f` of an Isaacs family.
#[derive(Debug, Clone)]
pub struct IsaacsEntry {
    pub a: MatrixField,
    pub f: ScalarField,
}

#[derive(Debug, Clone)]
pub enum OperatorKind {
    PucciPlus,
    PucciMinus,
    /// `scale * Tr(M)`.
    ScaledTrace { scale: f64 },
    /// `Tr(a(x, t) M) + c(x, t)`.
    LinearCoefficient { a: MatrixField, zero_order: Option<ScalarField> },
    /// `sup_beta inf_gamma (Tr(a_{gamma beta} M) - f_{gamma beta})`, stored as
    /// `families[beta][gamma]`.
    Isaacs { families: Vec<Vec<IsaacsEntry>> },
    /// `Tr(M) + (p - 2) <M nu, nu>`.
    NormalizedPLaplace { p: f64 },
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::PucciPlus => "pucci_plus",
            OperatorKind::PucciMinus => "pucci_minus",
            OperatorKind::ScaledTrace { .. } => "scaled_trace",
            OperatorKind::LinearCoefficient { .. } => "linear",
            OperatorKind::Isaacs { .. } => "isaacs",
            OperatorKind::NormalizedPLaplace { .. } => "p_laplace",
        }
    }
}

/// A uniformly elliptic operator `F(x, t, M)` together with its declared
/// ellipticity constants.
///
/// The value `F(0, 0, 0)` is subtracted on construction so that the stored
/// operator vanishes at the origin.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    dim: usize,
    kind: OperatorKind,
    pair: EllipticityPair,
    offset: f64,
}

impl OperatorSpec {
    pub fn new(dim: usize, kind: OperatorKind, pair: EllipticityPair) -> Result<Self> {
        check_dim(dim)?;
        match &kind {
            OperatorKind::ScaledTrace { scale } if !(*scale > 0.0 && scale.is_finite()) => {
                return Err(Error::Operator(format!("trace scale must be positive, got {scale}")));
            }
            OperatorKind::LinearCoefficient { a, .. } if a.dim() != dim => {
                return Err(Error::DimensionMismatch { expected: dim, got: a.dim() });
            }
            OperatorKind::Isaacs { families } => {
                if families.is_empty() || families.iter().any(|f| f.is_empty()) {
                    return Err(Error::EmptyFamily);
                }
                if let Some(e) = families.iter().flatten().find(|e| e.a.dim() != dim) {
                    return Err(Error::DimensionMismatch { expected: dim, got: e.a.dim() });
                }
            }
            OperatorKind::NormalizedPLaplace { p } if !(*p > 1.0 && p.is_finite()) => {
                return Err(Error::Operator(format!("p-Laplacian exponent must lie in (1, inf), got {p}")));
            }
            _ => {}
        }
        let mut spec = Self { dim, kind, pair, offset: 0.0 };
        let origin = [0.0; MAX_DIM];
        let mut e1 = [0.0; MAX_DIM];
        e1[0] = 1.0;
        spec.offset = spec.raw(&origin[..dim], 0.0, &SymMatrix::zeros(dim), Some(&e1[..dim]));
        if !spec.offset.is_finite() {
            return Err(Error::NonFinite("operator value at the origin"));
        }
        Ok(spec)
    }

    pub fn pucci_plus(dim: usize, pair: EllipticityPair) -> Result<Self> {
        Self::new(dim, OperatorKind::PucciPlus, pair)
    }

    pub fn pucci_minus(dim: usize, pair: EllipticityPair) -> Result<Self> {
        Self::new(dim, OperatorKind::PucciMinus, pair)
    }

    /// `scale * Tr(M)` with pair `(scale, scale)`.
    pub fn scaled_trace(dim: usize, scale: f64) -> Result<Self> {
        let pair = EllipticityPair::new(scale, scale).map_err(|_| Error::Operator(format!("bad trace scale {scale}")))?;
        Self::new(dim, OperatorKind::ScaledTrace { scale }, pair)
    }

    pub fn linear(dim: usize, a: MatrixField, zero_order: Option<ScalarField>, pair: EllipticityPair) -> Result<Self> {
        Self::new(dim, OperatorKind::LinearCoefficient { a, zero_order }, pair)
    }

    pub fn isaacs(dim: usize, families: Vec<Vec<IsaacsEntry>>, pair: EllipticityPair) -> Result<Self> {
        Self::new(dim, OperatorKind::Isaacs { families }, pair)
    }

    /// Normalized p-Laplacian with pair `(min(1, p - 1), max(1, p - 1))`.
    pub fn normalized_p_laplace(dim: usize, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Operator(format!("p-Laplacian exponent must lie in (1, inf), got {p}")));
        }
        Self::new(dim, OperatorKind::NormalizedPLaplace { p }, p_laplace_pair(p)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn pair(&self) -> EllipticityPair {
        self.pair
    }

    /// The value `F(0, 0, 0)` before normalization.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn needs_direction(&self) -> bool {
        matches!(self.kind, OperatorKind::NormalizedPLaplace { .. })
    }

    /// `F(x, t, M)`. The direction is required for the normalized
    /// p-Laplacian (any nonzero vector; it is normalized) and ignored otherwise.
    pub fn evaluate(&self, x: &[f64], t: f64, m: &SymMatrix, direction: Option<&[f64]>) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: m.dim() });
        }
        let mut nu = [0.0; MAX_DIM];
        let dir = if self.needs_direction() {
            let d = direction.ok_or(Error::ZeroDirection)?;
            if d.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: d.len() });
            }
            let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::ZeroDirection);
            }
            for (o, v) in nu.iter_mut().zip(d) {
                *o = v / n;
            }
            Some(&nu[..self.dim])
        } else {
            None
        };
        Ok(self.value(x, t, m, dir))
    }

    /// Unchecked evaluation used by the solver; `nu` must be a unit vector or
    /// `None`, in which case the p-Laplacian reduces to the trace.
    #[inline]
    pub fn value(&self, x: &[f64], t: f64, m: &SymMatrix, nu: Option<&[f64]>) -> f64 {
        self.raw(x, t, m, nu) - self.offset
    }

    #[inline]
    fn raw(&self, x: &[f64], t: f64, m: &SymMatrix, nu: Option<&[f64]>) -> f64 {
        match &self.kind {
            OperatorKind::PucciPlus => pucci_plus(m, self.pair),
            OperatorKind::PucciMinus => pucci_minus(m, self.pair),
            OperatorKind::ScaledTrace { scale } => scale * m.trace(),
            OperatorKind::LinearCoefficient { a, zero_order } => {
                a.eval(x, t).trace_product(m) + zero_order.as_ref().map_or(0.0, |c| c.eval(x, t))
            }
            OperatorKind::Isaacs { families } => families
                .iter()
                .map(|family| {
                    family
                        .iter()
                        .map(|e| e.a.eval(x, t).trace_product(m) - e.f.eval(x, t))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(f64::NEG_INFINITY, f64::max),
            OperatorKind::NormalizedPLaplace { p } => match nu {
                Some(nu) => m.trace() + (p - 2.0) * m.quad_form(nu),
                None => m.trace(),
            },
        }
    }

    /// If `M -> F(x, t, M)` is linear at this point, its coefficient matrix
    /// (`F = Tr(A M)` after normalization at the origin).
    pub fn linear_part_at(&self, x: &[f64], t: f64) -> Option<SymMatrix> {
        match &self.kind {
            OperatorKind::ScaledTrace { scale } => Some(SymMatrix::scaled_identity(self.dim, *scale)),
            OperatorKind::LinearCoefficient { a, zero_order: None } => Some(a.eval(x, t)),
            OperatorKind::LinearCoefficient { a, zero_order: Some(c) } if c.is_constant() => Some(a.eval(x, t)),
            OperatorKind::Isaacs { families } if families.len() == 1 && families[0].len() == 1 => {
                let e = &families[0][0];
                e.f.is_constant().then(|| e.a.eval(x, t))
            }
            _ => None,
        }
    }
}

/// `(min(1, p - 1), max(1, p - 1))`.
pub fn p_laplace_pair(p: f64) -> Result<EllipticityPair> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Operator(format!("p-Laplacian exponent must lie in (1, inf), got {p}")));
    }
    EllipticityPair::new(1f64.min(p - 1.0), 1f64.max(p - 1.0))
}
