//! The two-patch model problems and their discretization.

use crate::assembly::MethodParameters;
use crate::error::{Error, Result};
use crate::geometry::{
    planar_patch_geometry, torus_patch_geometry, BoundarySamples, GammaModel, Manufactured, PatchGeometry,
    TangentProjectorField, Torus, RING_SPAN, TUBE_SPAN,
};
use crate::mesh::{background_grid, extract_hybrid_mesh, ActiveMesh2D, CutOptions, HybridMesh3D};
use crate::splines::{KnotGrid, SplineSpace};
use serde::{Deserialize, Serialize};

/// Ring and tube radius of the torus model surface.
pub const TORUS_MAJOR: f64 = 1.0;
pub const TORUS_MINOR: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Torus,
    Planar,
}

impl GeometryKind {
    pub fn name(self) -> &'static str {
        match self {
            GeometryKind::Torus => "torus",
            GeometryKind::Planar => "planar",
        }
    }

    /// Largest length of a mapped unit reference segment, `max sqrt(lambda_max(G))`
    /// over the unit square.
    pub fn max_stretch(self) -> f64 {
        match self {
            GeometryKind::Torus => (TUBE_SPAN * TORUS_MINOR).max(RING_SPAN * (TORUS_MAJOR + TORUS_MINOR)),
            GeometryKind::Planar => 1.0,
        }
    }

    /// Reference cells per axis so that mapped cells are at most `1/cells`
    /// long.
    pub fn patch_cells(self, cells: usize) -> usize {
        (self.max_stretch() * cells as f64 - 1e-9).ceil() as usize
    }
}

/// Everything that defines one discrete problem.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub kind: GeometryKind,
    /// Mesh level: the surface mesh size is `h = 1/cells`, and the patch
    /// grids are refined until mapped cells are no longer than `h`.
    pub cells: usize,
    pub delta: f64,
    pub params: MethodParameters,
    /// Hybrid cell size over patch cell size.
    pub hybrid_ratio: f64,
    pub margin: usize,
    pub depth: usize,
    /// Exact solution supplying the source and the Dirichlet data.
    pub data: Manufactured,
}

impl ProblemSetup {
    pub fn new(kind: GeometryKind, degree: usize, cells: usize, delta: f64) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidParameter("cell count must be positive".into()));
        }
        let h = 1.0 / cells as f64;
        let hp = 1.0 / kind.patch_cells(cells) as f64;
        let data = match kind {
            GeometryKind::Torus => Manufactured::TorusSine(Torus::new(TORUS_MAJOR, TORUS_MINOR)?),
            GeometryKind::Planar => Manufactured::PlanarSine,
        };
        Ok(Self {
            kind,
            cells,
            delta,
            params: MethodParameters::standard(degree, hp, h),
            hybrid_ratio: 1.0,
            margin: 1,
            depth: CutOptions::DEFAULT_DEPTH,
            data,
        })
    }

    pub fn degree(&self) -> usize {
        self.params.degree
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    /// Reference cells per axis of the patch grids.
    pub fn patch_cells(&self) -> usize {
        self.kind.patch_cells(self.cells)
    }

    /// Reference cell size of the patch grids.
    pub fn patch_h(&self) -> f64 {
        1.0 / self.patch_cells() as f64
    }

    pub fn hybrid_h(&self) -> f64 {
        self.hybrid_ratio * self.h()
    }

    pub fn with_data(mut self, data: Manufactured) -> Self {
        self.data = data;
        self
    }

    pub fn with_hybrid(mut self, ratio: f64, margin: usize) -> Self {
        self.hybrid_ratio = ratio;
        self.margin = margin;
        self.params.h0 = self.hybrid_h();
        self
    }

    pub fn patches(&self) -> Result<[PatchGeometry; 2]> {
        match self.kind {
            GeometryKind::Torus => torus_patch_geometry(Torus::new(TORUS_MAJOR, TORUS_MINOR)?, self.delta),
            GeometryKind::Planar => planar_patch_geometry(self.delta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("gap {} must be nonnegative", self.delta)));
        }
        if !(self.hybrid_ratio > 0.0) {
            return Err(Error::InvalidParameter(format!("hybrid ratio {} must be positive", self.hybrid_ratio)));
        }
        if self.margin == 0 {
            return Err(Error::InvalidParameter("hybrid margin must be at least one cell".into()));
        }
        Ok(())
    }

    pub fn discretize(&self) -> Result<Discretization> {
        self.validate()?;
        let p = self.degree();
        let geometry = self.patches()?;
        let options = CutOptions::for_degree(p).with_depth(self.depth);
        let mut patches = Vec::with_capacity(2);
        for g in geometry {
            let grid = KnotGrid::unit_square(self.patch_cells(), p)?;
            let mesh = ActiveMesh2D::new(grid.clone(), &g.trim, g.dirichlet, options)?;
            let space = SplineSpace::new(grid, &mesh.active_indices())?;
            patches.push(PatchDiscretization { geometry: g, mesh, space });
        }
        let patches: [PatchDiscretization; 2] = patches.try_into().expect("two patches");
        let h0 = self.hybrid_h();
        let spacing = h0 / 4.0;
        let samples = [patches[0].geometry.interface_samples(spacing), patches[1].geometry.interface_samples(spacing)];
        let pts = [samples[0].points(), samples[1].points()];
        let grid = background_grid(&pts, h0, self.margin, p)?;
        let mesh = extract_hybrid_mesh(&grid, &pts, self.margin)?;
        let space = SplineSpace::new(grid.clone(), mesh.cells())?;
        let tube = 2.0 * self.delta.max(self.h());
        let gamma = GammaModel::new(samples[0].clone(), samples[1].clone(), self.delta, tube)?;
        let projector = TangentProjectorField::new(&grid, mesh.cells(), &gamma, p);
        Ok(Discretization {
            setup: self.clone(),
            patches,
            hybrid: HybridDiscretization { mesh, space, gamma, projector, samples },
        })
    }
}

#[derive(Debug, Clone)]
pub struct PatchDiscretization {
    pub geometry: PatchGeometry,
    pub mesh: ActiveMesh2D,
    pub space: SplineSpace,
}

#[derive(Debug, Clone)]
pub struct HybridDiscretization {
    pub mesh: HybridMesh3D,
    pub space: SplineSpace,
    pub gamma: GammaModel,
    pub projector: TangentProjectorField,
    /// Interface samples of the two patches.
    pub samples: [BoundarySamples; 2],
}

#[derive(Debug, Clone)]
pub struct Discretization {
    pub setup: ProblemSetup,
    pub patches: [PatchDiscretization; 2],
    pub hybrid: HybridDiscretization,
}

impl Discretization {
    /// Dof counts of the hybrid block and the two patch blocks.
    pub fn block_sizes(&self) -> [usize; 3] {
        [self.hybrid.space.num_dofs(), self.patches[0].space.num_dofs(), self.patches[1].space.num_dofs()]
    }
}
