//! ROM spatial filters and the Laplacian commutation error.
//!
//! Two filters act on a d-space field with coefficients `a_d`:
//!
//! * differential filter: `(M_r + delta^2 S_r) a_r = M_{r x d} a_d`
//! * projection filter:   `M_r a_r = M_{r x d} a_d`
//!
//! The commutation error compares the Laplacian of the filtered field
//! (coefficients `b_r`) with the filtered Laplacian (coefficients `c_r`):
//!
//! * differential: `M_r b_r = -S_r a_r`, `(M_r + delta^2 S_r) c_r = -S_{r x d} a_d`
//! * projection:   `M_r b_r = -S_r a_r`, `M_r c_r = -S_{r x d} a_d`
//!
//! Every inverse is realized as an SPD solve, never as an explicit inverse.

use crate::error::{Error, Result};
use crate::pod::ReducedBlocks;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Which spatial filter to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Differential,
    Projection,
}

/// Filter selection plus the differential-filter radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    kind: FilterKind,
    delta: f64,
}

impl FilterSpec {
    pub fn projection() -> Self {
        Self {
            kind: FilterKind::Projection,
            delta: 0.0,
        }
    }

    /// Differential filter of radius `delta >= 0`. A zero radius degenerates
    /// to the projection filter (the two systems coincide) and is handled as
    /// such.
    pub fn differential(delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "filter radius must be finite and >= 0, got {delta}"
            )));
        }
        Ok(Self {
            kind: FilterKind::Differential,
            delta,
        })
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// True when the spec behaves as the projection filter.
    pub fn acts_as_projection(&self) -> bool {
        self.kind == FilterKind::Projection || self.delta == 0.0
    }
}

/// Which field the Laplacian-side coefficients `c_r` are measured against.
///
/// For the projection filter the two conventions coincide. For the
/// differential filter they differ: `SameFilter` filters both sides with the
/// DF (the commutator in the strict sense, which vanishes identically at
/// r = d because `S (M + delta^2 S)^{-1} M = M (M + delta^2 S)^{-1} S`),
/// while `ProjectedLaplacian` compares the Laplacian of the DF-filtered
/// field against the plain projection of the Laplacian, which grows like
/// delta^2 and stays nonzero at full rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CeConvention {
    #[default]
    SameFilter,
    ProjectedLaplacian,
}

/// Commutation-error coefficient pair at one time instant: `b_r` for the
/// Laplacian of the filtered field, `c_r` for the filtered Laplacian.
#[derive(Debug, Clone)]
pub struct CeSample {
    pub b_r: DVector<f64>,
    pub c_r: DVector<f64>,
    pub t: f64,
}

impl CeSample {
    /// Coefficients of the pointwise commutation error `b_r - c_r`.
    pub fn difference(&self) -> DVector<f64> {
        &self.b_r - &self.c_r
    }
}

fn check_dims(a_d: &DVector<f64>, blocks: &ReducedBlocks) -> Result<()> {
    if a_d.len() != blocks.d() {
        return Err(Error::DimensionMismatch(format!(
            "a_d has length {}, blocks expect d = {}",
            a_d.len(),
            blocks.d()
        )));
    }
    Ok(())
}

fn filter_cholesky(spec: &FilterSpec, blocks: &ReducedBlocks) -> Result<Cholesky<f64, Dyn>> {
    let a = blocks.m_r() + blocks.s_r() * (spec.delta() * spec.delta());
    a.cholesky().ok_or(Error::SolveFailure {
        step: 0,
        reason: "filter system is not SPD".into(),
    })
}

/// Filters a d-space coefficient vector down to r space.
///
/// With an M_h-orthonormal basis the projection-filter system is the
/// identity, so the solution is the plain truncation of `a_d`; the general
/// path solves the r x r SPD system.
pub fn apply_filter(
    a_d: &DVector<f64>,
    spec: &FilterSpec,
    blocks: &ReducedBlocks,
) -> Result<DVector<f64>> {
    check_dims(a_d, blocks)?;
    if spec.acts_as_projection() {
        if blocks.mass_is_identity() {
            return Ok(a_d.rows(0, blocks.r()).into_owned());
        }
        return blocks.mass_solve(blocks.m_rd() * a_d);
    }
    Ok(filter_cholesky(spec, blocks)?.solve(&(blocks.m_rd() * a_d)))
}

/// Computes the commutation-error coefficient pair for one sample under the
/// default [`CeConvention::SameFilter`].
pub fn ce_coefficients(
    a_d: &DVector<f64>,
    spec: &FilterSpec,
    blocks: &ReducedBlocks,
    t: f64,
) -> Result<CeSample> {
    ce_coefficients_with(a_d, spec, blocks, t, CeConvention::SameFilter)
}

/// Computes the commutation-error coefficient pair under an explicit
/// convention.
pub fn ce_coefficients_with(
    a_d: &DVector<f64>,
    spec: &FilterSpec,
    blocks: &ReducedBlocks,
    t: f64,
    convention: CeConvention,
) -> Result<CeSample> {
    check_dims(a_d, blocks)?;
    let a_r = apply_filter(a_d, spec, blocks)?;
    let b_r = blocks.mass_solve(-(blocks.s_r() * &a_r))?;
    let c_r = if spec.acts_as_projection() || convention == CeConvention::ProjectedLaplacian {
        blocks.mass_solve(-(blocks.s_rd() * a_d))?
    } else {
        filter_cholesky(spec, blocks)?.solve(&(-(blocks.s_rd() * a_d)))
    };
    Ok(CeSample { b_r, c_r, t })
}

/// Time-averaged commutation-error norm
/// `sqrt( sum_j (b_r - c_r)' M_r (b_r - c_r) dt / T )`,
/// the left-endpoint rectangle rule over the sample sequence.
pub fn avg_ce_norm(samples: &[CeSample], m_r: &DMatrix<f64>, dt: f64, t_total: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty commutation-error sample sequence".into()));
    }
    let span = samples.len() as f64 * dt;
    if (span - t_total).abs() > 1e-9 * t_total.max(dt) {
        return Err(Error::InvalidArgument(format!(
            "{} samples at dt = {dt} span {span}, not T = {t_total}",
            samples.len()
        )));
    }
    let mut acc = 0.0;
    for s in samples {
        if s.b_r.len() != m_r.nrows() || s.c_r.len() != m_r.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "sample has length {}, M_r is {}x{}",
                s.b_r.len(),
                m_r.nrows(),
                m_r.ncols()
            )));
        }
        let diff = s.difference();
        acc += (m_r * &diff).dot(&diff);
    }
    Ok((acc * dt / t_total).sqrt())
}
