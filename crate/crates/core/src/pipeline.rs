//! Point cloud to diagram tuple: DTM sublevel persistence on a lattice, or
//! Vietoris–Rips persistence.

use crate::complex::{lower_star_filtration_to_dim, rips_filtration_with, ScaleConvention};
use crate::dtm::{dtm_field, DtmParams, GridSpec, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::persistence::{compute_persistence, DiagramTuple};

/// Which filtration turns a cloud into diagrams.
#[derive(Debug, Clone, PartialEq)]
pub enum Pipeline {
    /// Rips filtration truncated at `max_scale`.
    Rips {
        max_scale: f64,
        convention: ScaleConvention,
    },
    /// Sublevel sets of the empirical DTM sampled on `grid`, or on the
    /// default lattice for the cloud when `grid` is `None`.
    Dtm { params: DtmParams, grid: Option<GridSpec> },
}

/// Diagrams plus the largest filtration value, used to cap essential classes.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub diagrams: DiagramTuple,
    pub cap: f64,
}

impl Pipeline {
    pub fn run(&self, cloud: &PointCloud, ell: usize) -> Result<PipelineOutput> {
        match self {
            Pipeline::Rips { max_scale, convention } => {
                let diagrams = rips_diagrams_with(cloud, *max_scale, ell, *convention)?;
                Ok(PipelineOutput {
                    diagrams,
                    cap: *max_scale,
                })
            }
            Pipeline::Dtm { params, grid } => {
                let grid = match grid {
                    Some(g) => g.clone(),
                    None => GridSpec::default_for(cloud)?,
                };
                let (diagrams, field) = dtm_diagrams(cloud, &grid, params, ell)?;
                Ok(PipelineOutput {
                    diagrams,
                    cap: field.max(),
                })
            }
        }
    }
}

/// Rips diagrams for dimensions `0..=ell` (`ell` at most 1), radius convention.
pub fn rips_diagrams(cloud: &PointCloud, max_scale: f64, ell: usize) -> Result<DiagramTuple> {
    rips_diagrams_with(cloud, max_scale, ell, ScaleConvention::Radius)
}

pub fn rips_diagrams_with(
    cloud: &PointCloud,
    max_scale: f64,
    ell: usize,
    convention: ScaleConvention,
) -> Result<DiagramTuple> {
    if ell > 1 {
        return Err(Error::UnsupportedDimension(ell));
    }
    let f = rips_filtration_with(cloud, max_scale, ell + 1, convention)?;
    compute_persistence(&f, ell)
}

/// Diagrams of the sublevel filtration of a sampled field.
pub fn field_diagrams(field: &ScalarField, ell: usize) -> Result<DiagramTuple> {
    let top = (ell + 1).min(field.grid().dim());
    let f = lower_star_filtration_to_dim(field, top)?;
    compute_persistence(&f, ell)
}

/// DTM field on `grid` and the diagrams of its sublevel filtration.
pub fn dtm_diagrams(
    cloud: &PointCloud,
    grid: &GridSpec,
    params: &DtmParams,
    ell: usize,
) -> Result<(DiagramTuple, ScalarField)> {
    let field = dtm_field(cloud, grid, params)?;
    let diagrams = field_diagrams(&field, ell)?;
    Ok((diagrams, field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rips_pipeline_on_two_points() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let pipe = Pipeline::Rips {
            max_scale: 2.0,
            convention: ScaleConvention::Radius,
        };
        let out = pipe.run(&c, 1).unwrap();
        let h0: Vec<(f64, f64)> = out.diagrams.diagrams()[0]
            .pairs()
            .iter()
            .map(|p| (p.birth, p.death))
            .collect();
        assert_eq!(h0, vec![(0.0, 0.5), (0.0, f64::INFINITY)]);
        assert!(out.diagrams.diagrams()[1].is_empty());
        assert_eq!(out.cap, 2.0);
        let diam = Pipeline::Rips {
            max_scale: 2.0,
            convention: ScaleConvention::Diameter,
        };
        assert_eq!(diam.run(&c, 0).unwrap().diagrams.diagrams()[0].pairs()[0].death, 1.0);
    }

    #[test]
    fn dtm_pipeline_sees_a_ring() {
        let rows: Vec<[f64; 2]> = (0..60)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 60.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let c = PointCloud::from_rows(&rows).unwrap();
        let pipe = Pipeline::Dtm {
            params: DtmParams::new(0.1, 1.0).unwrap(),
            grid: None,
        };
        let out = pipe.run(&c, 1).unwrap();
        let h1 = &out.diagrams.diagrams()[1];
        let big: Vec<_> = h1.pairs().iter().filter(|p| p.persistence() > 0.5).collect();
        assert_eq!(big.len(), 1);
        // the loop fills in at the centre, where every point is at distance 1
        assert!((big[0].death - 1.0).abs() < 0.05);
        assert!(out.cap >= big[0].death);
    }

    #[test]
    fn rips_rejects_high_dimensions() {
        let c = PointCloud::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(matches!(rips_diagrams(&c, 1.0, 2), Err(Error::UnsupportedDimension(2))));
    }
}
