use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{Effect, EffectLabel, EffectOperator, OutcomeId, Pom, PomKind, PomSpec};
use crate::error::{Error, Result};
use crate::hilbert::{coherent_amplitudes, eigh, quadrature_operator, HermitianOperator, Ket, C64};

/// Default bound on the coherent truncation weight of heterodyne grid points.
pub const DEFAULT_MAX_TRUNCATION: f64 = 1e-6;

/// Projective number-state measurement `{|k><k|}`.
pub fn pom_fock_projective(dim: usize) -> Result<Pom> {
    let effects = (0..dim)
        .map(|k| {
            Ok(Effect {
                id: OutcomeId(k as u32),
                operator: EffectOperator::Rank1 {
                    ket: Ket::basis(k, dim)?,
                    scale: 1.0,
                },
                weight: 1.0,
                label: Some(EffectLabel::FockLevel { n: k }),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Pom::from_effects(dim, PomKind::FockProjective, effects)?
        .with_spec(PomSpec::FockProjective { dim }))
}

/// One cell of a discretized phase-space grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub point: C64,
    pub area: f64,
}

/// Square lattice of spacing `spacing` clipped to the disk `|y - center| <= radius`.
pub fn disk_grid(center: C64, radius: f64, spacing: f64) -> Result<Vec<GridCell>> {
    if !(radius > 0.0 && spacing > 0.0 && radius.is_finite() && spacing.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "grid radius {radius} and spacing {spacing} must be positive"
        )));
    }
    let steps = (radius / spacing).floor() as i64;
    let area = spacing * spacing;
    let mut cells = Vec::new();
    for j in -steps..=steps {
        for i in -steps..=steps {
            let offset = C64::new(i as f64 * spacing, j as f64 * spacing);
            if offset.norm() <= radius + 1e-12 {
                cells.push(GridCell {
                    point: center + offset,
                    area,
                });
            }
        }
    }
    Ok(cells)
}

/// Discretized coherent-state (Q-function) measurement with effects `|y><y| / pi`
/// weighted by cell area.
///
/// Each effect is the projection of the exact coherent state onto the truncated
/// space, so for states supported in the truncation the probabilities are exact
/// Q-function values. Grid points whose truncation weight exceeds
/// `max_truncation` are rejected.
pub fn pom_heterodyne_grid(dim: usize, grid: &[GridCell], max_truncation: f64) -> Result<Pom> {
    if grid.is_empty() {
        return Err(Error::Empty("heterodyne grid".into()));
    }
    let mut effects = Vec::with_capacity(grid.len());
    for (i, cell) in grid.iter().enumerate() {
        let y = cell.point;
        if !(y.re.is_finite() && y.im.is_finite()) {
            return Err(Error::NonFinite("grid point".into()));
        }
        if !(cell.area > 0.0 && cell.area.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid cell {i} has area {}",
                cell.area
            )));
        }
        let (amps, tail) = coherent_amplitudes(y, dim);
        if tail > max_truncation {
            return Err(Error::TruncationTooLarge {
                re: y.re,
                im: y.im,
                weight: tail,
                limit: max_truncation,
                dim,
            });
        }
        let (ket, norm) = Ket::normalize(amps)?;
        effects.push(Effect {
            id: OutcomeId(i as u32),
            operator: EffectOperator::Rank1 {
                ket,
                scale: norm * norm / PI,
            },
            weight: cell.area,
            label: Some(EffectLabel::GridPoint { re: y.re, im: y.im }),
        });
    }
    let mut sorted: Vec<(f64, f64)> = grid.iter().map(|c| (c.point.re, c.point.im)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("grid contains repeated points".into()));
    }
    Pom::from_effects(dim, PomKind::HeterodyneGrid, effects)
}

/// `count` phases evenly spaced on `[0, pi)`.
pub fn uniform_phases(count: usize) -> Vec<f64> {
    (0..count).map(|j| j as f64 * PI / count as f64).collect()
}

/// Binned homodyne detection at several local-oscillator phases.
///
/// For each phase the bin effect is the sum of eigenprojectors of the
/// truncated quadrature operator whose eigenvalue lies in `[lower, upper)`.
/// All effects carry weight `1 / phases.len()` so the family is one POM.
/// Bins holding no eigenvalue become zero effects and are listed in
/// [`Pom::empty_effects`].
pub fn pom_quadrature_bins(dim: usize, phases: &[f64], edges: &[f64]) -> Result<Pom> {
    if phases.is_empty() {
        return Err(Error::Empty("phase list".into()));
    }
    if edges.len() < 2 {
        return Err(Error::InvalidArgument("need at least two bin edges".into()));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| e.is_nan()) {
        return Err(Error::InvalidArgument("bin edges must be strictly increasing".into()));
    }
    let weight = 1.0 / phases.len() as f64;
    let mut effects = Vec::with_capacity(phases.len() * (edges.len() - 1));
    for &phase in phases {
        let x = quadrature_operator(phase, dim)?;
        let (values, vectors) = eigh(x.matrix());
        for bin in edges.windows(2) {
            let (lower, upper) = (bin[0], bin[1]);
            let members: Vec<usize> = (0..dim)
                .filter(|&k| values[k] >= lower && values[k] < upper)
                .collect();
            let operator = if members.len() == 1 {
                let (ket, _) = Ket::normalize(vectors.column(members[0]).into_owned())?;
                EffectOperator::Rank1 { ket, scale: 1.0 }
            } else {
                let mut p = DMatrix::zeros(dim, dim);
                for &k in &members {
                    let v = vectors.column(k);
                    p += &v * v.adjoint();
                }
                EffectOperator::General(HermitianOperator::from_matrix_unchecked(p))
            };
            effects.push(Effect {
                id: OutcomeId(effects.len() as u32),
                operator,
                weight,
                label: Some(EffectLabel::QuadratureBin {
                    phase,
                    lower,
                    upper,
                }),
            });
        }
    }
    let pom = Pom::from_effects(dim, PomKind::QuadratureBins, effects)?;
    if !pom.empty_effects().is_empty() {
        log::info!(
            "{} quadrature bins contain no eigenvalue and are zero effects",
            pom.empty_effects().len()
        );
    }
    Ok(pom)
}

/// A POM from caller-supplied effects.
pub fn pom_custom(dim: usize, effects: Vec<Effect>) -> Result<Pom> {
    Pom::from_effects(dim, PomKind::Custom, effects)
}
